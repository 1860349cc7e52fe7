//! Ground-state observables on an (ε, L) grid.

use bosonic_qpt::exec::{map_ordered, Execution};
use bosonic_qpt::model::ModelParams;
use bosonic_qpt::observables::{observable_set, perturbed_gap_prediction, ObservableSet};
use bosonic_qpt::spectral::{adaptive_diagonalize, AdaptiveOptions};

use crate::output::{Cell, Document, RunLog, Table};
use crate::settings::{CommandKind, Settings};

#[derive(Debug, Clone, PartialEq)]
pub struct PointResult {
    pub epsilon: f64,
    pub size: f64,
    pub lambda: f64,
    pub outcome: Result<(ObservableSet, usize, bool), String>,
}

impl PointResult {
    pub fn observables(&self) -> Option<&ObservableSet> {
        self.outcome.as_ref().ok().map(|o| &o.0)
    }
}

pub fn adaptive_options(settings: &Settings) -> AdaptiveOptions {
    AdaptiveOptions { relative_tolerance: settings.tol, n_max_cap: settings.n_max_cap, ..AdaptiveOptions::default() }
}

/// Solves one point; failures are kept as messages.
pub fn solve_point(epsilon: f64, size: f64, lambda: f64, opts: &AdaptiveOptions) -> PointResult {
    let outcome = ModelParams::with_lambda(epsilon, size, lambda)
        .and_then(|p| adaptive_diagonalize(&p, opts).map(|r| (observable_set(&r, &p), r.n_max(), r.converged)))
        .map_err(|e| e.to_string());
    PointResult { epsilon, size, lambda, outcome }
}

/// Every `(ε, L)` pair, sizes outermost, in input order regardless of
/// the worker count.
pub fn solve_grid(points: &[(f64, f64)], settings: &Settings) -> Vec<PointResult> {
    let opts = adaptive_options(settings);
    let exec = Execution::from_workers(settings.workers);
    map_ordered(exec, points, |_, &(eps, l)| solve_point(eps, l, settings.lambda.at(l), &opts))
}

/// First and second derivatives by three-point Lagrange differences on a
/// possibly non-uniform grid; `None` at the ends or next to gaps.
pub fn central_differences(x: &[f64], f: &[Option<f64>]) -> Vec<(Option<f64>, Option<f64>)> {
    (0..x.len())
        .map(|i| {
            if i == 0 || i + 1 >= x.len() {
                return (None, None);
            }
            let (Some(f0), Some(f1), Some(f2)) = (f[i - 1], f[i], f[i + 1]) else {
                return (None, None);
            };
            let h1 = x[i] - x[i - 1];
            let h2 = x[i + 1] - x[i];
            let d1 = -h2 / (h1 * (h1 + h2)) * f0 + (h2 - h1) / (h1 * h2) * f1 + h1 / (h2 * (h1 + h2)) * f2;
            let d2 = 2.0 * (f0 / (h1 * (h1 + h2)) - f1 / (h1 * h2) + f2 / (h2 * (h1 + h2)));
            (Some(d1), Some(d2))
        })
        .collect()
}

const COLUMNS: [&str; 15] = [
    "epsilon",
    "L",
    "lambda",
    "E0",
    "E0_density",
    "gap",
    "n_mean",
    "rho",
    "delta_x",
    "overlap",
    "n_max_used",
    "converged",
    "dE0_density",
    "d2E0_density",
    "error",
];

pub fn run(settings: &Settings, log: &mut RunLog) -> Document {
    let perturb = settings.command == CommandKind::Perturb;
    let eps = settings.epsilon.values();
    let points: Vec<(f64, f64)> = settings.sizes.iter().flat_map(|&l| eps.iter().map(move |&e| (e, l))).collect();
    log.note(format!("solving {} points with {} worker(s)", points.len(), settings.workers));
    let results = solve_grid(&points, settings);
    log.note("grid solved");

    let mut columns: Vec<&str> = COLUMNS.to_vec();
    if perturb {
        columns.insert(14, "predicted_gap");
        columns.insert(15, "relative_deviation");
    }
    let mut table = Table::new("sweep", &columns);
    for chunk in results.chunks(eps.len()) {
        let density: Vec<Option<f64>> =
            chunk.iter().map(|r| r.observables().map(|o| o.ground_energy / r.size)).collect();
        let derivs = central_differences(&eps, &density);
        for (r, (d1, d2)) in chunk.iter().zip(derivs) {
            let mut row = vec![Cell::num(r.epsilon), Cell::num(r.size), Cell::num(r.lambda)];
            match &r.outcome {
                Ok((o, n_max, converged)) => row.extend([
                    Cell::num(o.ground_energy),
                    Cell::num(o.ground_energy / r.size),
                    Cell::num(o.gap),
                    Cell::num(o.n_mean),
                    Cell::num(o.density),
                    Cell::num(o.delta_x),
                    Cell::num(o.overlap_gaussian),
                    Cell::Int(*n_max as i64),
                    Cell::Bool(*converged),
                ]),
                Err(_) => {
                    row.extend(std::iter::repeat_n(Cell::Empty, 8));
                    row.push(Cell::Bool(false));
                }
            }
            row.extend([Cell::opt(d1), Cell::opt(d2)]);
            if perturb {
                let predicted = ModelParams::with_lambda(r.epsilon, r.size, r.lambda)
                    .ok()
                    .and_then(|p| perturbed_gap_prediction(&p).ok());
                let deviation = predicted.zip(r.observables()).map(|(p, o)| (o.gap - p) / p);
                row.extend([Cell::opt(predicted), Cell::opt(deviation)]);
            }
            row.push(match &r.outcome {
                Ok(_) => Cell::Empty,
                Err(e) => {
                    log.note(format!("point eps={} L={} failed: {e}", r.epsilon, r.size));
                    Cell::Text(e.clone())
                }
            });
            table.push(row);
        }
    }
    Document::new(settings, vec![table])
}

/// Number of rows carrying an error message.
pub fn failed_rows(doc: &Document) -> usize {
    let Some(t) = doc.tables.first() else { return 0 };
    let Some(c) = t.column("error") else { return 0 };
    t.rows.iter().filter(|r| matches!(r[c], Cell::Text(_))).count()
}
