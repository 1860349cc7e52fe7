//! The Hamiltonian in the plain truncated Fock basis of `a`, used as a
//! brute-force reference and for exact unitary dynamics at small size.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::model::ModelParams;
use crate::special::ln_factorial;

/// `⟨m|H|n⟩` for `m, n ≤ n_max`.
pub fn raw_hamiltonian(params: &ModelParams, n_max: usize) -> DMatrix<f64> {
    let dim = n_max + 1;
    let mut h = DMatrix::zeros(dim, dim);
    let g = params.inv_size() / 2.0;
    for n in 0..dim {
        let nf = n as f64;
        h[(n, n)] = nf + g * nf * (nf - 1.0);
        if n + 2 < dim {
            let v = -params.epsilon / 2.0 * ((nf + 1.0) * (nf + 2.0)).sqrt();
            h[(n, n + 2)] = v;
            h[(n + 2, n)] = v;
        }
        if n + 1 < dim && params.lambda != 0.0 {
            let v = -params.lambda / 2.0 * (nf + 1.0).sqrt();
            h[(n, n + 1)] = v;
            h[(n + 1, n)] = v;
        }
    }
    h
}

/// All eigenvalues of the truncated Hamiltonian, ascending.
pub fn brute_force_spectrum(params: &ModelParams, n_max: usize) -> Result<Vec<f64>> {
    if params.size.is_infinite() && params.epsilon > 1.0 {
        return Err(Error::InvalidParams("unbounded spectrum without the quartic term".into()));
    }
    let mut values: Vec<f64> =
        SymmetricEigen::new(raw_hamiltonian(params, n_max)).eigenvalues.iter().copied().collect();
    values.sort_by(f64::total_cmp);
    Ok(values)
}

fn coherent_state(alpha: Complex64, dim: usize) -> DVector<Complex64> {
    let norm = alpha.norm_sqr();
    DVector::from_fn(dim, |n, _| {
        if alpha == Complex64::new(0.0, 0.0) {
            return if n == 0 { Complex64::new(1.0, 0.0) } else { Complex64::new(0.0, 0.0) };
        }
        let ln_mag = -norm / 2.0 + n as f64 * norm.sqrt().ln() - 0.5 * ln_factorial(n);
        Complex64::from_polar(ln_mag.exp(), n as f64 * alpha.arg())
    })
}

pub const EVOLUTION_TAIL_TOLERANCE: f64 = 1e-10;
pub const EVOLUTION_N_MAX_CAP: usize = 2048;

/// `⟨a†a⟩(t)` on the grid `0, dt, 2dt, …, t_final` for a coherent start,
/// growing the truncation until the populated tail stays below 1e−10.
pub fn evolve_exact(params: &ModelParams, alpha0: Complex64, t_final: f64, dt: f64) -> Result<Vec<(f64, f64)>> {
    if !(dt > 0.0) || !(t_final >= 0.0) {
        return Err(Error::InvalidParams(format!("need dt > 0 and t_final >= 0, got {dt}, {t_final}")));
    }
    let steps = (t_final / dt).round() as usize;
    let mut n_max = 64.max((4.0 * alpha0.norm_sqr()) as usize + 40);
    loop {
        if n_max > EVOLUTION_N_MAX_CAP {
            return Err(Error::TruncationOverflow { n_max, cap: EVOLUTION_N_MAX_CAP });
        }
        let dim = n_max + 1;
        let eig = SymmetricEigen::new(raw_hamiltonian(params, n_max));
        let psi0 = coherent_state(alpha0, dim);
        let v = eig.eigenvectors.map(|x| Complex64::new(x, 0.0));
        let amps = v.transpose() * &psi0;
        let cut = (0.9 * n_max as f64) as usize;
        let mut series = Vec::with_capacity(steps + 1);
        let mut worst_tail: f64 = 0.0;
        for k in 0..=steps {
            let t = k as f64 * dt;
            let phased = DVector::from_fn(dim, |i, _| amps[i] * Complex64::from_polar(1.0, -eig.eigenvalues[i] * t));
            let psi = &v * phased;
            let mut n_mean = 0.0;
            let mut tail = 0.0;
            for (n, c) in psi.iter().enumerate() {
                let p = c.norm_sqr();
                n_mean += n as f64 * p;
                if n > cut {
                    tail += p;
                }
            }
            worst_tail = worst_tail.max(tail);
            series.push((t, n_mean));
        }
        if worst_tail < EVOLUTION_TAIL_TOLERANCE {
            return Ok(series);
        }
        n_max *= 2;
    }
}
