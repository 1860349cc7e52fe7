//! Positive-P ensembles, the noiseless flow, and the exact reference.

use bosonic_qpt::exec::Execution;
use bosonic_qpt::fock::evolve_exact;
use bosonic_qpt::model::ModelParams;
use bosonic_qpt::positive_p::{deterministic_flow, ensemble_stats, flow_energy, PhasePoint, SdeConfig};
use num_complex::Complex64;

use crate::output::{Cell, Document, RunLog, Table};
use crate::settings::Settings;
use crate::CliError;

/// Sizes up to this get an exact-evolution column.
pub const EXACT_SIZE_LIMIT: f64 = 100.0;

pub fn sde_config(settings: &Settings) -> SdeConfig {
    SdeConfig {
        dt: settings.dt,
        t_final: settings.t_final,
        n_trajectories: settings.trajectories,
        seed: settings.seed,
        sample_interval: settings.sample_interval,
        noise: settings.noise,
        ..SdeConfig::default()
    }
}

pub fn params(settings: &Settings) -> Result<ModelParams, CliError> {
    let epsilon = settings.epsilon.values()[0];
    let size = settings.sizes[0];
    if settings.epsilon.n > 1 || settings.sizes.len() > 1 {
        log::warn!("positive-p uses only the first epsilon and the first L");
    }
    Ok(ModelParams::with_lambda(epsilon, size, settings.lambda.at(size))?)
}

/// Exact `⟨a†a⟩` at each sample time, matched by index.
fn exact_series(p: &ModelParams, settings: &Settings, times: &[f64]) -> Result<Option<Vec<f64>>, CliError> {
    if p.size > EXACT_SIZE_LIMIT {
        return Ok(None);
    }
    let series = evolve_exact(p, Complex64::new(settings.alpha0, 0.0), settings.t_final, settings.sample_interval)?;
    if series.len() != times.len() {
        return Err(CliError::Numeric("exact and stochastic time grids differ".into()));
    }
    Ok(Some(series.into_iter().map(|(_, n)| n).collect()))
}

fn stochastic(settings: &Settings, p: &ModelParams, log: &mut RunLog) -> Result<Table, CliError> {
    let config = sde_config(settings);
    log.note(format!("integrating {} trajectories", config.n_trajectories));
    let stats =
        ensemble_stats(&config, p, Complex64::new(settings.alpha0, 0.0), Execution::from_workers(settings.workers))?;
    log.note(format!("kept {}, discarded {}, branch flips {}", stats.kept, stats.discarded, stats.branch_flips));
    let occupation = stats.occupation(p.size);
    let times: Vec<f64> = occupation.iter().map(|o| o.0).collect();
    let exact = exact_series(p, settings, &times)?;
    let mut t = Table::new(
        "positive_p",
        &["t", "mean", "variance", "stderr", "n_discarded", "exact", "abs_deviation", "z_score"],
    );
    for (i, &(time, mean, stderr)) in occupation.iter().enumerate() {
        let ex = exact.as_ref().map(|e| e[i]);
        let dev = ex.map(|e| (mean - e).abs());
        let z = dev.and_then(|d| (stderr > 0.0).then(|| d / stderr));
        t.push(vec![
            Cell::num(time),
            Cell::num(mean),
            Cell::num(stats.var_product[i] * p.size * p.size),
            Cell::num(stderr),
            Cell::Int(stats.discarded as i64),
            Cell::opt(ex),
            Cell::opt(dev),
            Cell::opt(z),
        ]);
    }
    Ok(t)
}

fn noiseless(settings: &Settings, p: &ModelParams, log: &mut RunLog) -> Result<Table, CliError> {
    let config = sde_config(settings);
    config.validate()?;
    let initial = PhasePoint::coherent(Complex64::new(settings.alpha0, 0.0), p.size);
    let path = deterministic_flow(p, initial, config.t_final, config.dt);
    log.note("deterministic flow integrated");
    let every = (config.sample_interval / config.dt).round() as usize;
    let e0 = flow_energy(&initial, p).re;
    let mut t = Table::new("flow", &["t", "mean", "energy", "energy_drift"]);
    for (time, point) in path.iter().step_by(every) {
        let e = flow_energy(point, p).re;
        let drift = if e0 == 0.0 { e - e0 } else { (e - e0) / e0.abs() };
        t.push(vec![Cell::num(*time), Cell::num(p.size * point.product().re), Cell::num(e), Cell::num(drift)]);
    }
    Ok(t)
}

pub fn run(settings: &Settings, log: &mut RunLog) -> Result<Document, CliError> {
    let p = params(settings)?;
    let table = if settings.noise { stochastic(settings, &p, log)? } else { noiseless(settings, &p, log)? };
    Ok(Document::new(settings, vec![table]))
}
