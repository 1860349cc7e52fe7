//! Quick end-to-end checks of the installed build.

use bosonic_qpt::exec::Execution;
use bosonic_qpt::fock::brute_force_spectrum;
use bosonic_qpt::model::ModelParams;
use bosonic_qpt::positive_p::{deterministic_flow, ensemble_stats, flow_energy, PhasePoint, SdeConfig};
use bosonic_qpt::spectral::{adaptive_diagonalize, AdaptiveOptions};
use num_complex::Complex64;

use crate::collapse;
use crate::output::{Cell, Document, RunLog, Table};
use crate::settings::{CommandKind, Settings};
use crate::CliError;

#[derive(Debug, Clone, PartialEq)]
pub struct Check {
    pub name: &'static str,
    pub value: f64,
    pub threshold: f64,
}

impl Check {
    pub fn passed(&self) -> bool {
        self.value <= self.threshold
    }
}

fn oracle_error(epsilon: f64, size: f64) -> Result<f64, CliError> {
    let p = ModelParams::new(epsilon, size)?;
    let r = adaptive_diagonalize(&p, &AdaptiveOptions::default())?;
    let brute = brute_force_spectrum(&p, 400)?;
    Ok(((r.ground_energy() - brute[0]) / brute[0].abs().max(1e-300)).abs())
}

pub fn checks(seed: u64) -> Result<Vec<Check>, CliError> {
    let vacuum = adaptive_diagonalize(&ModelParams::new(0.0, 1.0)?, &AdaptiveOptions::default())?;
    let mut out = vec![
        Check {
            name: "vacuum_gap_error",
            value: (vacuum.eigenvalue(1) - vacuum.eigenvalue(0) - 1.0).abs(),
            threshold: 1e-12,
        },
        Check { name: "oracle_rel_error_eps0.5_L2", value: oracle_error(0.5, 2.0)?, threshold: 1e-9 },
        Check { name: "oracle_rel_error_eps1.5_L5", value: oracle_error(1.5, 5.0)?, threshold: 1e-9 },
    ];

    let mut s = Settings::defaults(CommandKind::Collapse);
    s.synthetic = true;
    let worst = collapse::compute(&s, &mut RunLog::new())?.iter().map(|c| c.result.spread).fold(0.0, f64::max);
    out.push(Check { name: "synthetic_collapse_spread", value: worst, threshold: 1e-9 });

    let p = ModelParams::new(0.8, 10.0)?;
    let config = SdeConfig { t_final: 0.2, n_trajectories: 2000, seed, ..SdeConfig::default() };
    let a = ensemble_stats(&config, &p, Complex64::new(0.0, 0.0), Execution::Sequential)?;
    let b = ensemble_stats(&config, &p, Complex64::new(0.0, 0.0), Execution::Parallel { workers: 3 })?;
    let differs = a.mean_product.iter().zip(&b.mean_product).filter(|(x, y)| x != y).count();
    out.push(Check { name: "ensemble_worker_mismatches", value: differs as f64, threshold: 0.0 });

    let p = ModelParams::new(0.5, 1e3)?;
    let start = PhasePoint::coherent(Complex64::new(3.0, 1.0), p.size);
    let path = deterministic_flow(&p, start, 10.0, 1e-3);
    let e0 = flow_energy(&start, &p).re;
    let drift = path.iter().map(|(_, q)| ((flow_energy(q, &p).re - e0) / e0).abs()).fold(0.0, f64::max);
    out.push(Check { name: "flow_energy_drift", value: drift, threshold: 1e-8 });
    Ok(out)
}

pub fn run(settings: &Settings, log: &mut RunLog) -> Result<(Document, bool), CliError> {
    let results = checks(settings.seed)?;
    let mut t = Table::new("self_test", &["check", "value", "threshold", "passed"]);
    let mut all = true;
    for c in &results {
        log.note(format!("{}: {:e} (limit {:e})", c.name, c.value, c.threshold));
        all &= c.passed();
        t.push(vec![Cell::Text(c.name.into()), Cell::num(c.value), Cell::num(c.threshold), Cell::Bool(c.passed())]);
    }
    Ok((Document::new(settings, vec![t]), all))
}
