//! Closed-form physics of the single-mode model
//!
//! ```text
//! H = a†a − (ε/2)(a†² + a²) + a†²a²/(2L) + V,   V = −(λ/2)(a + a†)
//! ```
//!
//! The classical (coherent-state) landscape, its minima, quadratic
//! fluctuation theory around each minimum, and the thermodynamic-limit
//! predictions used as reference curves everywhere else.

use num_complex::Complex64;

use crate::error::{Error, Result};

/// A point `(ε, L, λ)` in parameter space.
///
/// `size` may be fractional and may be `f64::INFINITY`, which drops the
/// quartic term.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModelParams {
    pub epsilon: f64,
    pub size: f64,
    pub lambda: f64,
}

impl ModelParams {
    pub fn new(epsilon: f64, size: f64) -> Result<Self> {
        Self::with_lambda(epsilon, size, 0.0)
    }

    pub fn with_lambda(epsilon: f64, size: f64, lambda: f64) -> Result<Self> {
        if !(epsilon >= 0.0 && epsilon.is_finite()) {
            return Err(Error::InvalidParams(format!("epsilon must be finite and >= 0, got {epsilon}")));
        }
        if !(size > 0.0) {
            return Err(Error::InvalidParams(format!("L must be > 0, got {size}")));
        }
        if !(lambda >= 0.0 && lambda.is_finite()) {
            return Err(Error::InvalidParams(format!("lambda must be finite and >= 0, got {lambda}")));
        }
        Ok(Self { epsilon, size, lambda })
    }

    /// `1/L`, exactly zero for infinite `L`.
    pub fn inv_size(&self) -> f64 {
        1.0 / self.size
    }

    pub fn is_perturbed(&self) -> bool {
        self.lambda != 0.0
    }
}

/// Classical energy `⟨α|H|α⟩` including the symmetry-breaking term.
pub fn classical_energy(params: &ModelParams, alpha: Complex64) -> f64 {
    let n = alpha.norm_sqr();
    let pair = (alpha.conj() * alpha.conj() + alpha * alpha).re;
    n * n * params.inv_size() / 2.0 + n - params.epsilon / 2.0 * pair - params.lambda * alpha.re
}

/// Classical energy restricted to the real axis.
pub fn classical_energy_real(params: &ModelParams, alpha: f64) -> f64 {
    let a2 = alpha * alpha;
    (1.0 - params.epsilon) * a2 + a2 * a2 * params.inv_size() / 2.0 - params.lambda * alpha
}

#[derive(Debug, Clone, PartialEq)]
pub struct ClassicalMinima {
    pub alphas: Vec<f64>,
    pub energies: Vec<f64>,
}

/// Global minimizers of the real-restricted landscape at `λ = 0`.
pub fn classical_minima(params: &ModelParams) -> Result<ClassicalMinima> {
    if params.is_perturbed() {
        return Err(Error::Domain("classical_minima requires lambda = 0".into()));
    }
    let alphas = if params.epsilon <= 1.0 {
        vec![0.0]
    } else {
        let a = (params.size * (params.epsilon - 1.0)).sqrt();
        vec![-a, a]
    };
    let energies = alphas.iter().map(|&a| classical_energy_real(params, a)).collect();
    Ok(ClassicalMinima { alphas, energies })
}

/// Squeezing of the Bogoliubov vacuum; diverges when the gap closes.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Squeezing {
    Finite(f64),
    Diverged,
}

impl Squeezing {
    pub fn value(self) -> Option<f64> {
        match self {
            Squeezing::Finite(r) => Some(r),
            Squeezing::Diverged => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BogoliubovSolution {
    pub alpha: f64,
    pub delta: f64,
    pub sigma: f64,
    pub omega: f64,
    pub e0_fluct: f64,
    pub r: Squeezing,
    pub e_total: f64,
    /// `σ ≥ 0` and `Δ > σ`.
    pub stable: bool,
}

impl BogoliubovSolution {
    pub fn is_critical(&self) -> bool {
        self.omega == 0.0
    }
}

/// Quadratic fluctuation theory around the real expansion point `alpha`.
///
/// Returns `UnstableExpansionPoint` when `Δ < σ`; at `Δ = σ` the gap is
/// zero and the squeezing is reported as [`Squeezing::Diverged`].
pub fn bogoliubov_solution(params: &ModelParams, alpha: f64) -> Result<BogoliubovSolution> {
    let s = alpha * alpha * params.inv_size();
    let delta = 1.0 + 2.0 * s;
    let sigma = params.epsilon - s;
    // Δ − σ written out so that it is exactly zero at the critical point
    let diff = 1.0 - params.epsilon + 3.0 * s;
    let sum = delta + sigma;
    if diff < 0.0 || sum < 0.0 {
        return Err(Error::UnstableExpansionPoint { alpha, delta, sigma });
    }
    let omega = (diff * sum).sqrt();
    let e0_fluct = (omega - delta) / 2.0;
    let r = if omega == 0.0 { Squeezing::Diverged } else { Squeezing::Finite((sigma / omega).asinh() / 2.0) };
    let e_total = classical_energy_real(params, alpha) + e0_fluct;
    Ok(BogoliubovSolution { alpha, delta, sigma, omega, e0_fluct, r, e_total, stable: sigma >= 0.0 && diff > 0.0 })
}

/// `lim E0/L`: zero in the disordered phase, `−(ε−1)²/2` above.
pub fn analytic_energy_density(epsilon: f64) -> f64 {
    if epsilon <= 1.0 {
        0.0
    } else {
        -(epsilon - 1.0).powi(2) / 2.0
    }
}

/// Thermodynamic-limit gap.
pub fn analytic_gap(epsilon: f64) -> f64 {
    if epsilon < 1.0 {
        ((1.0 - epsilon) * (1.0 + epsilon)).sqrt()
    } else {
        0.0
    }
}

/// Thermodynamic-limit density of excitations `⟨a†a⟩/L`.
pub fn analytic_density(epsilon: f64) -> f64 {
    if epsilon <= 1.0 {
        0.0
    } else {
        epsilon - 1.0
    }
}

/// Thermodynamic-limit position uncertainty `e^r` in the disordered phase,
/// with `x = a + a†` so that the vacuum has `Δx = 1`.
pub fn analytic_quadrature_uncertainty(epsilon: f64) -> f64 {
    if epsilon < 1.0 {
        ((1.0 + epsilon) / (1.0 - epsilon)).powf(0.25)
    } else {
        f64::INFINITY
    }
}

/// Critical and finite-size exponents.
///
/// Finite-size exponents follow `A ∝ L^{δ_A}` at `ε = 1`, and
/// `ν = −γ_A/δ_A`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExponentTable {
    pub gamma_gap: f64,
    pub gamma_density: f64,
    pub gamma_dx: f64,
    pub delta_gap: f64,
    pub delta_density: f64,
    pub delta_dx: f64,
    pub nu: f64,
}

pub fn analytic_exponent_table() -> ExponentTable {
    ExponentTable {
        gamma_gap: 0.5,
        gamma_density: 1.0,
        gamma_dx: -0.25,
        delta_gap: -1.0 / 3.0,
        delta_density: -2.0 / 3.0,
        delta_dx: 1.0 / 6.0,
        nu: 1.5,
    }
}
