//! Positive-P phase-space dynamics in normalized variables `β = α/√L`.
//!
//! Drift: `β̇ = −i(1 + β⁺β)β + iεβ⁺ + iλ/(2√L)` and the mirror equation for
//! `β⁺`, which is the Hamiltonian flow of the normal-ordered symbol. Noise
//! amplitudes are `√(i(ε − β²)/L)` and `√(−i(ε − β⁺²)/L)` multiplying two
//! independent real white noises. Integration is Itô Euler–Maruyama.

use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{Error, Result};
use crate::exec::{map_ordered, Execution};
use crate::model::ModelParams;

const I: Complex64 = Complex64::new(0.0, 1.0);

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PhasePoint {
    pub beta: Complex64,
    pub beta_plus: Complex64,
}

impl PhasePoint {
    pub fn new(beta: Complex64, beta_plus: Complex64) -> Self {
        Self { beta, beta_plus }
    }

    /// `β = α₀/√L`, `β⁺ = α₀*/√L`.
    pub fn coherent(alpha0: Complex64, size: f64) -> Self {
        let s = size.sqrt();
        Self { beta: alpha0 / s, beta_plus: alpha0.conj() / s }
    }

    pub fn product(&self) -> Complex64 {
        self.beta_plus * self.beta
    }
}

fn linear_source(params: &ModelParams) -> Complex64 {
    if params.lambda == 0.0 {
        Complex64::new(0.0, 0.0)
    } else {
        I * params.lambda / (2.0 * params.size.sqrt())
    }
}

/// Deterministic parts of `(β̇, β̇⁺)`.
pub fn drift(p: &PhasePoint, params: &ModelParams) -> (Complex64, Complex64) {
    let n = p.product();
    let eps = params.epsilon;
    let src = linear_source(params);
    (-I * (1.0 + n) * p.beta + I * eps * p.beta_plus + src, I * (1.0 + n) * p.beta_plus - I * eps * p.beta - src)
}

/// Principal square roots `√(i(ε−β²)/L)`, `√(−i(ε−β⁺²)/L)`.
pub fn noise_amplitudes(p: &PhasePoint, params: &ModelParams) -> (Complex64, Complex64) {
    let g = params.inv_size();
    let eps = params.epsilon;
    ((I * (eps - p.beta * p.beta) * g).sqrt(), (-I * (eps - p.beta_plus * p.beta_plus) * g).sqrt())
}

/// `H/L` on the doubled phase space; real when `β⁺ = β*`.
pub fn flow_energy(p: &PhasePoint, params: &ModelParams) -> Complex64 {
    let n = p.product();
    let lam = if params.lambda == 0.0 { 0.0 } else { params.lambda / (2.0 * params.size.sqrt()) };
    n - params.epsilon / 2.0 * (p.beta_plus * p.beta_plus + p.beta * p.beta) + n * n / 2.0
        - lam * (p.beta + p.beta_plus)
}

/// Angular frequency of small oscillations about a fixed point, from the
/// eigenvalues of the drift Jacobian (central differences; the drift is
/// holomorphic in both variables).
pub fn linearized_frequency(params: &ModelParams, at: &PhasePoint) -> f64 {
    let h = 1e-6;
    let col = |db: Complex64, dbp: Complex64| {
        let plus = drift(&PhasePoint::new(at.beta + db, at.beta_plus + dbp), params);
        let minus = drift(&PhasePoint::new(at.beta - db, at.beta_plus - dbp), params);
        ((plus.0 - minus.0) / (2.0 * h), (plus.1 - minus.1) / (2.0 * h))
    };
    let (j00, j10) = col(Complex64::new(h, 0.0), Complex64::new(0.0, 0.0));
    let (j01, j11) = col(Complex64::new(0.0, 0.0), Complex64::new(h, 0.0));
    let half_trace = (j00 + j11) / 2.0;
    let disc = (half_trace * half_trace - (j00 * j11 - j01 * j10)).sqrt();
    (half_trace + disc).im.abs().max((half_trace - disc).im.abs())
}

fn rk4_step(p: &PhasePoint, params: &ModelParams, dt: f64) -> PhasePoint {
    let add =
        |p: &PhasePoint, k: (Complex64, Complex64), s: f64| PhasePoint::new(p.beta + k.0 * s, p.beta_plus + k.1 * s);
    let k1 = drift(p, params);
    let k2 = drift(&add(p, k1, dt / 2.0), params);
    let k3 = drift(&add(p, k2, dt / 2.0), params);
    let k4 = drift(&add(p, k3, dt), params);
    PhasePoint::new(
        p.beta + (k1.0 + 2.0 * k2.0 + 2.0 * k3.0 + k4.0) * (dt / 6.0),
        p.beta_plus + (k1.1 + 2.0 * k2.1 + 2.0 * k3.1 + k4.1) * (dt / 6.0),
    )
}

/// Classical-limit flow with classical fourth-order Runge–Kutta; returns
/// the state at `0, dt, …, t_final`.
pub fn deterministic_flow(params: &ModelParams, initial: PhasePoint, t_final: f64, dt: f64) -> Vec<(f64, PhasePoint)> {
    let steps = (t_final / dt).round() as usize;
    let mut out = Vec::with_capacity(steps + 1);
    let mut p = initial;
    out.push((0.0, p));
    for k in 1..=steps {
        p = rk4_step(&p, params, dt);
        out.push((k as f64 * dt, p));
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SdeConfig {
    pub dt: f64,
    pub t_final: f64,
    pub n_trajectories: usize,
    pub seed: u64,
    /// Discard threshold on `|β|` and `|β⁺|`; `None` uses `10·max(1, √ε)`.
    pub r_max: Option<f64>,
    /// Spacing of the recorded time grid, a multiple of `dt`.
    pub sample_interval: f64,
    /// Switches the stochastic terms off.
    pub noise: bool,
}

impl Default for SdeConfig {
    fn default() -> Self {
        Self { dt: 1e-3, t_final: 2.0, n_trajectories: 10_000, seed: 0, r_max: None, sample_interval: 0.1, noise: true }
    }
}

impl SdeConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.dt > 0.0) || !(self.t_final >= 0.0) || self.n_trajectories == 0 {
            return Err(Error::InvalidParams("need dt > 0, t_final >= 0 and at least one trajectory".into()));
        }
        let ratio = self.sample_interval / self.dt;
        if !(ratio >= 1.0) || (ratio - ratio.round()).abs() > 1e-9 * ratio {
            return Err(Error::InvalidParams("sample interval must be a positive multiple of dt".into()));
        }
        Ok(())
    }

    pub fn divergence_cap(&self, params: &ModelParams) -> f64 {
        self.r_max.unwrap_or(10.0 * params.epsilon.sqrt().max(1.0))
    }

    fn steps(&self) -> (usize, usize) {
        let every = (self.sample_interval / self.dt).round() as usize;
        let total = (self.t_final / self.dt).round() as usize;
        (total, every)
    }

    pub fn sample_times(&self) -> Vec<f64> {
        let (total, every) = self.steps();
        (0..=total).step_by(every).map(|k| k as f64 * self.dt).collect()
    }
}

/// One trajectory's recorded points, or `None` if it escaped the cap.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub samples: Option<Vec<PhasePoint>>,
    pub branch_flips: usize,
}

fn trajectory_rng(seed: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    rng
}

/// Euler–Maruyama integration of trajectory `index`, seeded from
/// `(config.seed, index)` only.
pub fn integrate_trajectory(config: &SdeConfig, params: &ModelParams, initial: PhasePoint, index: u64) -> Trajectory {
    let (total, every) = config.steps();
    let cap = config.divergence_cap(params);
    let sqrt_dt = config.dt.sqrt();
    let mut rng = trajectory_rng(config.seed, index);
    let mut p = initial;
    let mut samples = Vec::with_capacity(total / every + 1);
    samples.push(p);
    let mut flips = 0;
    let mut last_amp: Option<(Complex64, Complex64)> = None;
    for k in 1..=total {
        let (a, ap) = drift(&p, params);
        let mut next = PhasePoint::new(p.beta + a * config.dt, p.beta_plus + ap * config.dt);
        if config.noise {
            let (b, bp) = noise_amplitudes(&p, params);
            if let Some((lb, lbp)) = last_amp {
                if (b * lb.conj()).re < 0.0 || (bp * lbp.conj()).re < 0.0 {
                    flips += 1;
                }
            }
            last_amp = Some((b, bp));
            let w1: f64 = StandardNormal.sample(&mut rng);
            let w2: f64 = StandardNormal.sample(&mut rng);
            next.beta += b * (w1 * sqrt_dt);
            next.beta_plus += bp * (w2 * sqrt_dt);
        }
        p = next;
        let escaped = !(p.beta.norm() <= cap && p.beta_plus.norm() <= cap);
        if escaped {
            return Trajectory { samples: None, branch_flips: flips };
        }
        if k % every == 0 {
            samples.push(p);
        }
    }
    Trajectory { samples: Some(samples), branch_flips: flips }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrajectoryStats {
    pub times: Vec<f64>,
    /// Ensemble mean of `β⁺β`.
    pub mean_product: Vec<Complex64>,
    /// `E|β⁺β − mean|²`.
    pub var_product: Vec<f64>,
    pub stderr_product: Vec<f64>,
    pub mean_beta: Vec<Complex64>,
    pub var_beta: Vec<f64>,
    pub mean_beta_plus: Vec<Complex64>,
    pub var_beta_plus: Vec<f64>,
    pub kept: usize,
    pub discarded: usize,
    pub branch_flips: usize,
}

impl TrajectoryStats {
    pub fn discarded_fraction(&self) -> f64 {
        self.discarded as f64 / (self.kept + self.discarded) as f64
    }

    /// `L·Re⟨β⁺β⟩`, the estimate of `⟨a†a⟩`, with its standard error.
    pub fn occupation(&self, size: f64) -> Vec<(f64, f64, f64)> {
        self.times
            .iter()
            .zip(self.mean_product.iter().zip(self.stderr_product.iter()))
            .map(|(&t, (m, e))| (t, size * m.re, size * e))
            .collect()
    }
}

#[derive(Clone)]
struct Accumulator {
    kept: usize,
    discarded: usize,
    flips: usize,
    // per time: Σx and Σ|x|² for β⁺β, β, β⁺
    sums: Vec<[Complex64; 3]>,
    squares: Vec<[f64; 3]>,
}

impl Accumulator {
    fn new(len: usize) -> Self {
        Self {
            kept: 0,
            discarded: 0,
            flips: 0,
            sums: vec![[Complex64::new(0.0, 0.0); 3]; len],
            squares: vec![[0.0; 3]; len],
        }
    }

    fn add(&mut self, traj: &Trajectory) {
        self.flips += traj.branch_flips;
        let Some(samples) = &traj.samples else {
            self.discarded += 1;
            return;
        };
        self.kept += 1;
        for (k, p) in samples.iter().enumerate() {
            for (j, v) in [p.product(), p.beta, p.beta_plus].into_iter().enumerate() {
                self.sums[k][j] += v;
                self.squares[k][j] += v.norm_sqr();
            }
        }
    }

    fn merge(&mut self, other: &Accumulator) {
        self.kept += other.kept;
        self.discarded += other.discarded;
        self.flips += other.flips;
        for (a, b) in self.sums.iter_mut().zip(&other.sums) {
            for j in 0..3 {
                a[j] += b[j];
            }
        }
        for (a, b) in self.squares.iter_mut().zip(&other.squares) {
            for j in 0..3 {
                a[j] += b[j];
            }
        }
    }
}

/// Trajectories per reduction chunk. Chunks are merged in index order, so
/// the floating-point result does not depend on the worker count.
pub const CHUNK: usize = 1024;

pub const MAX_DISCARDED_FRACTION: f64 = 0.01;

/// Ensemble statistics from a coherent start `α₀`.
pub fn ensemble_stats(
    config: &SdeConfig,
    params: &ModelParams,
    alpha0: Complex64,
    exec: Execution,
) -> Result<TrajectoryStats> {
    config.validate()?;
    if !params.size.is_finite() && config.noise {
        return Err(Error::InvalidParams("stochastic runs need a finite size".into()));
    }
    let initial = PhasePoint::coherent(alpha0, params.size);
    let times = config.sample_times();
    let n_chunks = config.n_trajectories.div_ceil(CHUNK);
    let chunks: Vec<usize> = (0..n_chunks).collect();
    let partial = map_ordered(exec, &chunks, |_, &c| {
        let mut acc = Accumulator::new(times.len());
        let end = ((c + 1) * CHUNK).min(config.n_trajectories);
        for index in c * CHUNK..end {
            acc.add(&integrate_trajectory(config, params, initial, index as u64));
        }
        acc
    });
    let mut total = Accumulator::new(times.len());
    for acc in &partial {
        total.merge(acc);
    }
    if total.flips > 0 {
        log::debug!("{} noise-amplitude branch flips across the ensemble", total.flips);
    }
    let fraction = total.discarded as f64 / config.n_trajectories as f64;
    if fraction > MAX_DISCARDED_FRACTION {
        return Err(Error::ExcessiveDivergence {
            discarded: total.discarded,
            total: config.n_trajectories,
            fraction,
            limit: MAX_DISCARDED_FRACTION,
        });
    }
    let n = total.kept as f64;
    let column = |j: usize| -> (Vec<Complex64>, Vec<f64>) {
        total
            .sums
            .iter()
            .zip(&total.squares)
            .map(|(s, q)| {
                let mean = s[j] / n;
                (mean, (q[j] / n - mean.norm_sqr()).max(0.0))
            })
            .unzip()
    };
    let (mean_product, var_product) = column(0);
    let (mean_beta, var_beta) = column(1);
    let (mean_beta_plus, var_beta_plus) = column(2);
    let stderr_product = var_product.iter().map(|v| (v / n).sqrt()).collect();
    Ok(TrajectoryStats {
        times,
        mean_product,
        var_product,
        stderr_product,
        mean_beta,
        var_beta,
        mean_beta_plus,
        var_beta_plus,
        kept: total.kept,
        discarded: total.discarded,
        branch_flips: total.flips,
    })
}
