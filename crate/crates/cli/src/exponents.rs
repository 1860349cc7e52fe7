//! Critical and finite-size exponent fits, compared with the analytic table.

use bosonic_qpt::model::analytic_exponent_table;
use bosonic_qpt::scaling::{correlation_exponent, fit_power_law, ExponentFit, MIN_DECADES};

use crate::output::{Cell, Document, RunLog, Table};
use crate::settings::Settings;
use crate::sweep::{solve_grid, PointResult};
use crate::CliError;

/// Points per side of the transition for the infinite-size fits.
pub const CRITICAL_POINTS: usize = 13;
/// `|ε−1|` window of the infinite-size fits.
pub const CRITICAL_WINDOW: (f64, f64) = (1e-3, 1e-1);

/// `1 ∓ d` with `d` log-spaced over [`CRITICAL_WINDOW`].
pub fn critical_grid(below: bool) -> Vec<f64> {
    let (lo, hi) = (CRITICAL_WINDOW.0.ln(), CRITICAL_WINDOW.1.ln());
    (0..CRITICAL_POINTS)
        .map(|i| {
            let d = (lo + (hi - lo) * i as f64 / (CRITICAL_POINTS - 1) as f64).exp();
            if below {
                1.0 - d
            } else {
                1.0 + d
            }
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Observable {
    Gap,
    Density,
    DeltaX,
    NMean,
}

impl Observable {
    pub fn name(self) -> &'static str {
        match self {
            Observable::Gap => "gap",
            Observable::Density => "rho",
            Observable::DeltaX => "delta_x",
            Observable::NMean => "n_mean",
        }
    }

    pub fn of(self, r: &PointResult) -> Option<f64> {
        let o = r.observables()?;
        Some(match self {
            Observable::Gap => o.gap,
            Observable::Density => o.density,
            Observable::DeltaX => o.delta_x,
            Observable::NMean => o.n_mean,
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FitRow {
    pub kind: &'static str,
    pub observable: &'static str,
    pub fit: Result<ExponentFit, String>,
    pub expected: f64,
    pub low_confidence: bool,
}

pub type NuEstimate = Result<(f64, f64), String>;

#[derive(Debug, Clone, PartialEq)]
pub struct ExponentReport {
    pub gamma: Vec<FitRow>,
    pub delta: Vec<FitRow>,
    /// `(observable, (ν, error))` from the matching γ and δ fits.
    pub nu: Vec<(&'static str, NuEstimate)>,
}

fn fit_points(
    results: &[PointResult],
    obs: Observable,
    abscissa: impl Fn(&PointResult) -> f64,
) -> Result<ExponentFit, String> {
    let failed: Vec<String> = results.iter().filter_map(|r| r.outcome.as_ref().err().cloned()).collect();
    if let Some(e) = failed.first() {
        return Err(format!("{} point(s) failed, first: {e}", failed.len()));
    }
    let pts: Vec<(f64, f64)> = results.iter().filter_map(|r| Some((abscissa(r), obs.of(r)?))).collect();
    fit_power_law(&pts, None).map_err(|e| e.to_string())
}

pub fn compute(settings: &Settings, log: &mut RunLog) -> ExponentReport {
    let table = analytic_exponent_table();
    let lc = settings.critical_size;
    let below: Vec<(f64, f64)> = critical_grid(true).into_iter().map(|e| (e, lc)).collect();
    let above: Vec<(f64, f64)> = critical_grid(false).into_iter().map(|e| (e, lc)).collect();
    let at_critical: Vec<(f64, f64)> = settings.sizes.iter().map(|&l| (1.0, l)).collect();

    let all: Vec<(f64, f64)> = below.iter().chain(&above).chain(&at_critical).copied().collect();
    log.note(format!("solving {} points", all.len()));
    let solved = solve_grid(&all, settings);
    log.note("points solved");
    let (rb, rest) = solved.split_at(below.len());
    let (ra, rc) = rest.split_at(above.len());

    let distance = |r: &PointResult| (r.epsilon - 1.0).abs();
    let gamma = vec![
        FitRow {
            kind: "gamma",
            observable: "gap",
            fit: fit_points(rb, Observable::Gap, distance),
            expected: table.gamma_gap,
            low_confidence: false,
        },
        FitRow {
            kind: "gamma",
            observable: "rho",
            fit: fit_points(ra, Observable::Density, distance),
            expected: table.gamma_density,
            low_confidence: false,
        },
        FitRow {
            kind: "gamma",
            observable: "delta_x",
            fit: fit_points(rb, Observable::DeltaX, distance),
            expected: table.gamma_dx,
            low_confidence: false,
        },
    ];

    let lo = settings.sizes.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = settings.sizes.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let narrow = (hi / lo).log10() < MIN_DECADES;
    if narrow {
        log.note(format!("size grid spans {:.2} decades; finite-size fits flagged", (hi / lo).log10()));
    }
    let size = |r: &PointResult| r.size;
    let delta: Vec<FitRow> = [
        (Observable::Gap, table.delta_gap),
        (Observable::Density, table.delta_density),
        (Observable::DeltaX, table.delta_dx),
        (Observable::NMean, table.delta_density + 1.0),
    ]
    .into_iter()
    .map(|(obs, expected)| FitRow {
        kind: "delta",
        observable: obs.name(),
        fit: fit_points(rc, obs, size),
        expected,
        low_confidence: narrow,
    })
    .collect();

    let nu = gamma
        .iter()
        .map(|g| {
            let d = delta.iter().find(|d| d.observable == g.observable).expect("every gamma has a delta");
            let value = match (&g.fit, &d.fit) {
                (Ok(gf), Ok(df)) => Ok(correlation_exponent(gf, df)),
                (Err(e), _) | (_, Err(e)) => Err(e.clone()),
            };
            (g.observable, value)
        })
        .collect();
    ExponentReport { gamma, delta, nu }
}

impl ExponentReport {
    pub fn all_fits_ok(&self) -> bool {
        self.gamma.iter().chain(&self.delta).all(|r| r.fit.is_ok())
    }

    pub fn fit(&self, kind: &str, observable: &str) -> Option<&ExponentFit> {
        self.gamma.iter().chain(&self.delta).find(|r| r.kind == kind && r.observable == observable)?.fit.as_ref().ok()
    }
}

pub fn run(settings: &Settings, log: &mut RunLog) -> Result<Document, CliError> {
    let report = compute(settings, log);
    let expected_nu = analytic_exponent_table().nu;
    let mut t = Table::new(
        "exponents",
        &[
            "kind",
            "observable",
            "fitted",
            "std_error",
            "r_squared",
            "n_points",
            "window_lo",
            "window_hi",
            "expected",
            "deviation",
            "low_confidence",
            "error",
        ],
    );
    for r in report.gamma.iter().chain(&report.delta) {
        let mut row = vec![Cell::Text(r.kind.into()), Cell::Text(r.observable.into())];
        match &r.fit {
            Ok(f) => row.extend([
                Cell::num(f.exponent),
                Cell::num(f.std_error),
                Cell::num(f.r_squared),
                Cell::Int(f.n_points as i64),
                Cell::num(f.window.0),
                Cell::num(f.window.1),
                Cell::num(r.expected),
                Cell::num(f.exponent - r.expected),
                Cell::Bool(r.low_confidence),
                Cell::Empty,
            ]),
            Err(e) => {
                row.extend(std::iter::repeat_n(Cell::Empty, 6));
                row.extend([Cell::num(r.expected), Cell::Empty, Cell::Bool(r.low_confidence), Cell::Text(e.clone())]);
            }
        }
        t.push(row);
    }
    for (obs, value) in &report.nu {
        let low = report.delta.iter().any(|d| d.observable == *obs && d.low_confidence);
        let mut row = vec![Cell::Text("nu".into()), Cell::Text((*obs).into())];
        match value {
            Ok((nu, err)) => row.extend([
                Cell::num(*nu),
                Cell::num(*err),
                Cell::Empty,
                Cell::Empty,
                Cell::Empty,
                Cell::Empty,
                Cell::num(expected_nu),
                Cell::num(nu - expected_nu),
                Cell::Bool(low),
                Cell::Empty,
            ]),
            Err(e) => {
                row.extend(std::iter::repeat_n(Cell::Empty, 6));
                row.extend([Cell::num(expected_nu), Cell::Empty, Cell::Bool(low), Cell::Text(e.clone())]);
            }
        }
        t.push(row);
    }
    if !report.all_fits_ok() {
        log.note("some fits failed; see the error column");
    }
    Ok(Document::new(settings, vec![t]))
}
