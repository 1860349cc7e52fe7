//! Gaussian variational states `D(ᾱ)S(z̄)|0⟩` and their energy.
//!
//! For a real displacement and real positive squeezing the energy is a
//! quadratic function of `ᾱ²` at fixed squeezing (plus the linear
//! symmetry-breaking term), so the displacement is eliminated exactly and
//! only a one-dimensional profile over `x = e^{2r̄}` is minimized.

use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::model::{classical_energy_real, ModelParams};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GaussianAnsatz {
    pub alpha_bar: f64,
    pub r_bar: f64,
    pub theta: f64,
}

impl GaussianAnsatz {
    pub fn new(alpha_bar: f64, r_bar: f64, theta: f64) -> Result<Self> {
        if !(r_bar >= 0.0) {
            return Err(Error::InvalidParams(format!("r_bar must be >= 0, got {r_bar}")));
        }
        Ok(Self { alpha_bar, r_bar, theta: theta.rem_euclid(2.0 * PI) })
    }

    pub fn squeezed_vacuum(r_bar: f64) -> Self {
        Self { alpha_bar: 0.0, r_bar, theta: 0.0 }
    }

    /// `x = e^{2r̄}`
    pub fn x(&self) -> f64 {
        (2.0 * self.r_bar).exp()
    }

    /// Displacement seen by the Bogoliubov mode, `ᾱ cosh r̄ − ᾱ sinh r̄`
    /// for real `ᾱ` and `θ = 0`.
    pub fn alpha_c(&self) -> f64 {
        self.alpha_bar * (-self.r_bar).exp()
    }
}

/// Moments of `a` in the state `D(ᾱ)S(r̄e^{iθ})|0⟩` for real `ᾱ`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GaussianMoments {
    pub n: f64,
    pub re_a2: f64,
    pub n2: f64,
}

pub fn gaussian_moments(ansatz: &GaussianAnsatz) -> GaussianMoments {
    let a = ansatz.alpha_bar;
    let a2 = a * a;
    let s = ansatz.r_bar.sinh();
    let s2 = s * s;
    let sh2 = (2.0 * ansatz.r_bar).sinh();
    let c = ansatz.theta.cos();
    GaussianMoments {
        n: a2 + s2,
        re_a2: a2 + c * sh2 / 2.0,
        n2: a2 * a2 + 4.0 * a2 * s2 + sh2 * sh2 / 4.0 + 2.0 * s2 * s2 + a2 * c * sh2,
    }
}

/// `⟨H⟩` in the Gaussian state, from its moments.
pub fn variational_energy(params: &ModelParams, ansatz: &GaussianAnsatz) -> f64 {
    let m = gaussian_moments(ansatz);
    m.n - params.epsilon * m.re_a2 + m.n2 * params.inv_size() / 2.0 - params.lambda * ansatz.alpha_bar
}

/// Squeezed-vacuum energy at `ε = 1` as a closed form in `x = e^{2r̄}`.
pub fn critical_energy_x(size: f64, x: f64) -> f64 {
    let il = 1.0 / size;
    3.0 * x * x * il / 32.0 - x * il / 4.0 - 0.5 + 5.0 * il / 16.0 + (2.0 - il) / (4.0 * x) + 3.0 * il / (32.0 * x * x)
}

/// Unique positive root of `3x⁴/4 − x³ − 3/4 − (2L−1)x = 0`.
pub fn critical_x_root(size: f64) -> Result<f64> {
    if !(size > 0.0 && size.is_finite()) {
        return Err(Error::InvalidParams(format!("L must be finite and > 0, got {size}")));
    }
    let f = |x: f64| 0.75 * x.powi(4) - x.powi(3) - 0.75 - (2.0 * size - 1.0) * x;
    let mut hi = 2.0 * (8.0 * size / 3.0).cbrt() + 2.0;
    while f(hi) <= 0.0 {
        hi *= 2.0;
    }
    Ok(bisect(f, 0.0, hi))
}

/// Variational gap `E₁ − E₀` between `S(r̄)|1⟩` and `S(r̄)|0⟩` at `ε = 1`.
pub fn variational_gap(size: f64, r_bar: f64) -> f64 {
    let s = r_bar.sinh();
    let sh2 = (2.0 * r_bar).sinh();
    (4.0 * s.powi(4) + 2.0 * sh2 * sh2) / (2.0 * size) + (-2.0 * r_bar).exp()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MinimizeOptions {
    /// Relative convergence threshold on the energy profile.
    pub energy_tolerance: f64,
    pub max_iterations: usize,
    /// Number of uniformly spaced starting points in `ln x`.
    pub grid_points: usize,
}

impl Default for MinimizeOptions {
    fn default() -> Self {
        Self { energy_tolerance: 1e-12, max_iterations: 500, grid_points: 400 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VariationalMinimum {
    pub ansatz: GaussianAnsatz,
    pub energy: f64,
    /// `ᾱ ≠ 0` with `λ = 0`: the state with `−ᾱ` is degenerate.
    pub parity_doublet: bool,
    pub iterations: usize,
}

/// Global minimizer of `⟨H⟩` over real `ᾱ` and real positive squeezing.
///
/// For a degenerate pair the `+ᾱ` representative is returned.
pub fn minimize_ansatz(params: &ModelParams, opts: &MinimizeOptions) -> Result<VariationalMinimum> {
    if !(opts.energy_tolerance > 0.0) {
        return Err(Error::InvalidParams("energy_tolerance must be > 0".into()));
    }
    let profile = Profile::new(params)?;
    let u_max = profile.u_max();
    let n = opts.grid_points.max(8);
    let du = u_max / (n - 1) as f64;
    let mut best = (0usize, f64::INFINITY);
    for i in 0..n {
        let v = profile.shifted(i as f64 * du).0;
        if v < best.1 {
            best = (i, v);
        }
    }
    let lo = best.0.saturating_sub(1) as f64 * du;
    let hi = ((best.0 + 1).min(n - 1)) as f64 * du;
    let (u, iterations) = golden_section(|u| profile.shifted(u).0, lo, hi, opts)?;
    let (shifted, alpha) = profile.shifted(u);
    let ansatz = GaussianAnsatz { alpha_bar: alpha, r_bar: u / 2.0, theta: 0.0 };
    Ok(VariationalMinimum {
        ansatz,
        energy: profile.reference + shifted,
        parity_doublet: alpha != 0.0 && !params.is_perturbed(),
        iterations,
    })
}

/// Energy profile over `u = ln x` with the displacement eliminated,
/// measured relative to the classical minimum so that it stays O(1) at
/// large `L`.
struct Profile {
    eps: f64,
    inv_l: f64,
    lambda: f64,
    alpha_ref: f64,
    reference: f64,
    size: f64,
}

impl Profile {
    fn new(params: &ModelParams) -> Result<Self> {
        let inv_l = params.inv_size();
        let alpha_ref = quartic_argmin(1.0 - params.epsilon, inv_l, params.lambda);
        if !alpha_ref.is_finite() {
            return Err(Error::Domain("energy is unbounded below for infinite L and epsilon > 1".into()));
        }
        Ok(Self {
            eps: params.epsilon,
            inv_l,
            lambda: params.lambda,
            alpha_ref,
            reference: classical_energy_real(params, alpha_ref),
            size: params.size,
        })
    }

    fn u_max(&self) -> f64 {
        let crit = if self.size.is_finite() { 4.0 * (8.0 * self.size / 3.0).cbrt() } else { 0.0 };
        let bog = if self.eps < 1.0 { 10.0 * ((1.0 + self.eps) / (1.0 - self.eps)).sqrt() } else { 0.0 };
        (crit + bog + 100.0).ln()
    }

    /// Returns `(E − E_ref, ᾱ)` at `x = e^u`.
    fn shifted(&self, u: f64) -> (f64, f64) {
        let x = u.exp();
        let xi = 1.0 / x;
        let e = self.eps;
        let il = self.inv_l;
        // fluctuation part at ᾱ = 0
        let q = 3.0 * x * x / 16.0 + 3.0 * xi * xi / 16.0 + 0.625 - x / 2.0 - xi / 2.0;
        let f = (x * (1.0 - e) + (1.0 + e) * xi - 2.0) / 4.0 + q * il / 2.0;
        // ᾱ² coupling 4 sinh²r + sinh 2r
        let b = 1.5 * x + 0.5 * xi - 2.0;
        let alpha = quartic_argmin(1.0 - e + b * il / 2.0, il, self.lambda);
        let d = alpha - self.alpha_ref;
        let a = self.alpha_ref;
        let d1 = 2.0 * (1.0 - e) * a + 2.0 * a.powi(3) * il - self.lambda;
        let d2 = 2.0 * (1.0 - e) + 6.0 * a * a * il;
        let d3 = 12.0 * a * il;
        let d4 = 12.0 * il;
        let classical = d * (d1 + d * (d2 / 2.0 + d * (d3 / 6.0 + d * d4 / 24.0)));
        (classical + b * alpha * alpha * il / 2.0 + f, alpha)
    }
}

/// Minimizer over `a ≥ 0` of `c a² + k a⁴/2 − λ a` with `k, λ ≥ 0`.
fn quartic_argmin(c: f64, k: f64, lambda: f64) -> f64 {
    if lambda == 0.0 {
        if c >= 0.0 {
            return 0.0;
        }
        return if k > 0.0 { (-c / k).sqrt() } else { f64::INFINITY };
    }
    if k == 0.0 {
        return if c > 0.0 { lambda / (2.0 * c) } else { f64::INFINITY };
    }
    // g(a) = 2ca + 2ka³ − λ has a single positive root
    let g = |a: f64| 2.0 * c * a + 2.0 * k * a.powi(3) - lambda;
    let mut hi = (c.abs() / k).sqrt() + (lambda / k).cbrt() + 1.0;
    while g(hi) <= 0.0 {
        hi *= 2.0;
    }
    bisect(g, 0.0, hi)
}

/// Root of an increasing-through-zero function bracketed by `[lo, hi]`.
fn bisect(f: impl Fn(f64) -> f64, mut lo: f64, mut hi: f64) -> f64 {
    for _ in 0..400 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if f(mid) > 0.0 {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    0.5 * (lo + hi)
}

fn golden_section(f: impl Fn(f64) -> f64, mut a: f64, mut b: f64, opts: &MinimizeOptions) -> Result<(f64, usize)> {
    let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
    let mut c = b - inv_phi * (b - a);
    let mut d = a + inv_phi * (b - a);
    let mut fc = f(c);
    let mut fd = f(d);
    // the profile is quadratic at its minimum, so a relative energy
    // tolerance τ pins the abscissa to about √τ
    let width = 1e-3 * opts.energy_tolerance.sqrt();
    for it in 0..opts.max_iterations {
        if (b - a) <= width * (1.0 + a.abs() + b.abs()) {
            let u = if fc < fd { c } else { d };
            return Ok((u, it));
        }
        if fc < fd {
            b = d;
            d = c;
            fd = fc;
            c = b - inv_phi * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + inv_phi * (b - a);
            fd = f(d);
        }
    }
    Err(Error::NoConvergence {
        iterations: opts.max_iterations,
        reason: format!("squeezing bracket [{a}, {b}] did not shrink"),
    })
}
