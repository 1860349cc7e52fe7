//! Scaling collapse of ρ and ΔE on both sides of the transition.

use bosonic_qpt::model::analytic_exponent_table;
use bosonic_qpt::scaling::{collapse, curve_of, fit_power_law, plateau_flatness, CollapseResult, ScalingSample};

use crate::exponents::Observable;
use crate::output::{Cell, Document, RunLog, Table};
use crate::settings::Settings;
use crate::sweep::solve_grid;
use crate::CliError;

/// Scaling variable range sampled per size.
pub const Y_RANGE: (f64, f64) = (1e-3, 1e3);
pub const Y_POINTS: usize = 25;
/// Range used for the small-`y` power law of the collapsed curve.
pub const SMALL_Y: (f64, f64) = (1e-3, 1e-2);
/// Range checked for a plateau where the observable stays finite.
pub const LARGE_Y: (f64, f64) = (1e2, 1e3);
/// Values below this are at the eigenvalue noise floor and not collapsed.
pub const VALUE_FLOOR: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Branch {
    Below,
    Above,
}

impl Branch {
    pub fn name(self) -> &'static str {
        match self {
            Branch::Below => "below",
            Branch::Above => "above",
        }
    }
}

pub fn y_grid() -> Vec<f64> {
    let (lo, hi) = (Y_RANGE.0.ln(), Y_RANGE.1.ln());
    (0..Y_POINTS).map(|i| (lo + (hi - lo) * i as f64 / (Y_POINTS - 1) as f64).exp()).collect()
}

/// `ε = 1 ∓ (y/L)^{1/ν}`.
pub fn epsilon_at(y: f64, size: f64, branch: Branch, nu: f64) -> f64 {
    let d = (y / size).powf(1.0 / nu);
    match branch {
        Branch::Below => 1.0 - d,
        Branch::Above => 1.0 + d,
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CollapseSummary {
    pub observable: &'static str,
    pub branch: Branch,
    pub result: CollapseResult,
    /// Spread restricted to all sizes but the smallest.
    pub spread_large: f64,
    pub small_y_slope: Option<f64>,
    pub expected_slope: f64,
    pub plateau: Option<f64>,
    pub dropped: usize,
}

fn gamma_of(obs: Observable) -> f64 {
    let t = analytic_exponent_table();
    match obs {
        Observable::Gap => t.gamma_gap,
        Observable::Density => t.gamma_density,
        Observable::DeltaX => t.gamma_dx,
        Observable::NMean => t.gamma_density,
    }
}

/// Exactly scaling stand-in, `A = |ε−1|^γ (1 + y)^{−γ/ν}`.
fn synthetic_value(epsilon: f64, size: f64, gamma: f64, nu: f64) -> f64 {
    let d = (epsilon - 1.0).abs();
    let y = d.powf(nu) * size;
    d.powf(gamma) * (1.0 + y).powf(-gamma / nu)
}

fn summarize(
    observable: Observable,
    branch: Branch,
    samples: Vec<ScalingSample>,
    sizes: &[f64],
    nu: f64,
    dropped: usize,
) -> Result<CollapseSummary, CliError> {
    let gamma = gamma_of(observable);
    let result = collapse(&samples, gamma, nu, 1.0, 1.0)?;
    let min_size = sizes.iter().copied().fold(f64::INFINITY, f64::min);
    let large: Vec<ScalingSample> = samples.iter().copied().filter(|s| s.size > min_size).collect();
    let spread_large = collapse(&large, gamma, nu, 1.0, 1.0)?.spread;
    let max_size = sizes.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let curve = curve_of(&result, max_size);
    let small_y_slope = fit_power_law(&curve, Some(SMALL_Y)).ok().map(|f| f.exponent);
    let has_plateau =
        matches!((observable, branch), (Observable::Gap, Branch::Below) | (Observable::Density, Branch::Above));
    let plateau = if has_plateau { plateau_flatness(&curve, LARGE_Y) } else { None };
    Ok(CollapseSummary {
        observable: observable.name(),
        branch,
        result,
        spread_large,
        small_y_slope,
        expected_slope: -gamma / nu,
        plateau,
        dropped,
    })
}

pub fn compute(settings: &Settings, log: &mut RunLog) -> Result<Vec<CollapseSummary>, CliError> {
    let nu = analytic_exponent_table().nu;
    let ys = y_grid();
    let branches = [Branch::Below, Branch::Above];
    let mut points = Vec::new();
    for branch in branches {
        for &l in &settings.sizes {
            points.extend(ys.iter().map(|&y| (epsilon_at(y, l, branch, nu), l)));
        }
    }
    let per_branch = settings.sizes.len() * ys.len();
    let solved = if settings.synthetic {
        None
    } else {
        log.note(format!("solving {} points", points.len()));
        let s = solve_grid(&points, settings);
        log.note("points solved");
        Some(s)
    };
    if let Some(bad) = solved.iter().flatten().find(|r| r.outcome.is_err()) {
        return Err(CliError::Numeric(format!(
            "point eps={} L={} failed: {}",
            bad.epsilon,
            bad.size,
            bad.outcome.as_ref().err().cloned().unwrap_or_default()
        )));
    }

    let mut out = Vec::new();
    for observable in [Observable::Density, Observable::Gap] {
        for (b, branch) in branches.into_iter().enumerate() {
            let range = b * per_branch..(b + 1) * per_branch;
            let mut dropped = 0;
            let samples: Vec<ScalingSample> = points[range.clone()]
                .iter()
                .enumerate()
                .filter_map(|(i, &(epsilon, size))| {
                    let value = match &solved {
                        Some(s) => observable.of(&s[range.start + i])?,
                        None => synthetic_value(epsilon, size, gamma_of(observable), nu),
                    };
                    if value < VALUE_FLOOR {
                        dropped += 1;
                        return None;
                    }
                    Some(ScalingSample { epsilon, size, value })
                })
                .collect();
            out.push(summarize(observable, branch, samples, &settings.sizes, nu, dropped)?);
        }
    }
    Ok(out)
}

pub fn run(settings: &Settings, log: &mut RunLog) -> Result<Document, CliError> {
    let summaries = compute(settings, log)?;
    let mut points = Table::new("points", &["observable", "branch", "L", "epsilon", "y", "a_hat"]);
    let mut summary = Table::new(
        "summary",
        &[
            "observable",
            "branch",
            "spread_all",
            "spread_large_L",
            "bins_used",
            "small_y_slope",
            "expected_slope",
            "plateau_deviation",
            "dropped_below_floor",
        ],
    );
    for s in &summaries {
        for p in &s.result.points {
            points.push(vec![
                Cell::Text(s.observable.into()),
                Cell::Text(s.branch.name().into()),
                Cell::num(p.size),
                Cell::num(p.epsilon),
                Cell::num(p.y),
                Cell::num(p.a_hat),
            ]);
        }
        summary.push(vec![
            Cell::Text(s.observable.into()),
            Cell::Text(s.branch.name().into()),
            Cell::num(s.result.spread),
            Cell::num(s.spread_large),
            Cell::Int(s.result.bins_used as i64),
            Cell::opt(s.small_y_slope),
            Cell::num(s.expected_slope),
            Cell::opt(s.plateau),
            Cell::Int(s.dropped as i64),
        ]);
    }
    Ok(Document::new(settings, vec![points, summary]))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::settings::CommandKind;

    #[test]
    fn synthetic_collapse_is_exact() {
        let mut s = Settings::defaults(CommandKind::Collapse);
        s.synthetic = true;
        let out = compute(&s, &mut RunLog::new()).unwrap();
        assert_eq!(out.len(), 4);
        for c in &out {
            assert!(c.result.spread < 1e-9, "{} {:?}: {}", c.observable, c.branch, c.result.spread);
            assert!(c.result.bins_used > 10);
            assert_eq!(c.dropped, 0);
        }
    }

    #[test]
    fn epsilon_maps_back_to_y() {
        let e = epsilon_at(10.0, 1e8, Branch::Above, 1.5);
        assert!((((e - 1.0).powf(1.5) * 1e8) - 10.0).abs() < 1e-9);
        assert!(epsilon_at(10.0, 1e8, Branch::Below, 1.5) < 1.0);
    }
}
