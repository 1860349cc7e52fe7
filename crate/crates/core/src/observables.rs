//! Physical quantities read off a [`SpectralResult`].
//!
//! Quadrature convention: `x = a + a†`, so the vacuum has `Δx = 1`.

use nalgebra::DVector;

use crate::error::{Error, Result};
use crate::model::ModelParams;
use crate::operator::NormalPoly;
use crate::spectral::{represent, BasisKind, SpectralResult};

#[derive(Debug, Clone, PartialEq)]
pub struct ObservableSet {
    pub ground_energy: f64,
    pub gap: f64,
    pub n_mean: f64,
    pub density: f64,
    pub delta_x: f64,
    pub overlap_gaussian: f64,
    /// Only for the squeezed Fock basis.
    pub fock_distribution: Option<Vec<f64>>,
}

/// Difference of the two lowest eigenvalues, degenerate ones counted
/// separately.
pub fn gap(result: &SpectralResult) -> f64 {
    result.shifted_eigenvalues[1] - result.shifted_eigenvalues[0]
}

/// `⟨ψ_i|op|ψ_i⟩` for eigenstate `i`.
pub fn expectation(result: &SpectralResult, op: &NormalPoly, i: usize) -> f64 {
    let m = represent(op, &result.basis, 0.0);
    let y = result.state(i);
    y.dot(&(m * &y))
}

pub fn mean_excitations(result: &SpectralResult) -> f64 {
    expectation(result, &NormalPoly::number(), 0)
}

/// `⟨a†a⟩ / L` in the ground state.
pub fn excitation_density(result: &SpectralResult, params: &ModelParams) -> f64 {
    mean_excitations(result) * params.inv_size()
}

/// `√(⟨x²⟩ − ⟨x⟩²)` in the ground state.
pub fn quadrature_uncertainty(result: &SpectralResult) -> f64 {
    let x = expectation(result, &NormalPoly::position(), 0);
    let x2 = expectation(result, &NormalPoly::position_squared(), 0);
    (x2 - x * x).max(0.0).sqrt()
}

/// `|⟨φ₀|ψ₀⟩|²` with `φ₀` the first basis vector, i.e. the optimized
/// Gaussian (the `+ᾱ` one in the pair basis).
pub fn gaussian_overlap(result: &SpectralResult) -> f64 {
    let y = result.state(0);
    let ay: DVector<f64> = result.overlap_times(&y);
    ay[0] * ay[0]
}

/// `|⟨n|S†(r̄)|ψ₀⟩|²` for every retained `n`.
pub fn fock_distribution(result: &SpectralResult) -> Result<Vec<f64>> {
    if result.basis.kind != BasisKind::SqueezedFock {
        return Err(Error::Domain("Fock distribution needs the squeezed Fock basis".into()));
    }
    Ok(result.state(0).iter().map(|v| v * v).collect())
}

/// Doublet splitting `2λ√(L(ε−1))` opened by the linear perturbation.
pub fn perturbed_gap_prediction(params: &ModelParams) -> Result<f64> {
    if params.epsilon <= 1.0 {
        return Err(Error::Domain(format!("needs epsilon > 1, got {}", params.epsilon)));
    }
    Ok(2.0 * params.lambda * (params.size * (params.epsilon - 1.0)).sqrt())
}

pub fn observable_set(result: &SpectralResult, params: &ModelParams) -> ObservableSet {
    let n_mean = mean_excitations(result);
    ObservableSet {
        ground_energy: result.ground_energy(),
        gap: gap(result),
        n_mean,
        density: n_mean * params.inv_size(),
        delta_x: quadrature_uncertainty(result),
        overlap_gaussian: gaussian_overlap(result),
        fock_distribution: fock_distribution(result).ok(),
    }
}
