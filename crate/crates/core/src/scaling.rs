//! Power-law fits and scaling collapse.
//!
//! Convention: an observable behaves as `A ∝ |ε−1|^γ` at infinite size and
//! `A ∝ L^δ` at criticality, so that `ν = −γ/δ`.

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExponentFit {
    pub exponent: f64,
    pub std_error: f64,
    pub r_squared: f64,
    pub prefactor: f64,
    /// Smallest and largest abscissa actually used.
    pub window: (f64, f64),
    pub n_points: usize,
}

impl ExponentFit {
    pub fn agrees_with(&self, expected: f64, tolerance: f64) -> bool {
        (self.exponent - expected).abs() <= tolerance
    }
}

/// Least-squares line through `(ln x, ln y)` for points with `x` inside the
/// optional inclusive window.
pub fn fit_power_law(points: &[(f64, f64)], window: Option<(f64, f64)>) -> Result<ExponentFit> {
    let inside: Vec<(f64, f64)> =
        points.iter().copied().filter(|(x, _)| window.is_none_or(|(lo, hi)| *x >= lo && *x <= hi)).collect();
    if inside.len() < 3 {
        return Err(Error::InsufficientPoints { needed: 3, got: inside.len() });
    }
    if let Some(&(abscissa, value)) = inside.iter().find(|(x, y)| !(*x > 0.0) || !(*y > 0.0)) {
        return Err(Error::NonPositiveValue { abscissa, value });
    }
    let logs: Vec<(f64, f64)> = inside.iter().map(|(x, y)| (x.ln(), y.ln())).collect();
    let n = logs.len() as f64;
    let mx = logs.iter().map(|p| p.0).sum::<f64>() / n;
    let my = logs.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = logs.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = logs.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let syy: f64 = logs.iter().map(|p| (p.1 - my).powi(2)).sum();
    if sxx == 0.0 {
        return Err(Error::Domain("all abscissae coincide".into()));
    }
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let sse: f64 = logs.iter().map(|p| (p.1 - intercept - slope * p.0).powi(2)).sum();
    let r_squared = if syy == 0.0 { 1.0 } else { (1.0 - sse / syy).clamp(0.0, 1.0) };
    let std_error = (sse / (n - 2.0) / sxx).sqrt();
    let lo = inside.iter().map(|p| p.0).fold(f64::INFINITY, f64::min);
    let hi = inside.iter().map(|p| p.0).fold(f64::NEG_INFINITY, f64::max);
    Ok(ExponentFit {
        exponent: slope,
        std_error,
        r_squared,
        prefactor: intercept.exp(),
        window: (lo, hi),
        n_points: inside.len(),
    })
}

/// `ν = −γ/δ` with its propagated standard error.
pub fn correlation_exponent(gamma: &ExponentFit, delta: &ExponentFit) -> (f64, f64) {
    let nu = -gamma.exponent / delta.exponent;
    let rel = ((gamma.std_error / gamma.exponent).powi(2) + (delta.std_error / delta.exponent).powi(2)).sqrt();
    (nu, nu.abs() * rel)
}

/// Observables sampled at `ε = 1` over a list of sizes.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct CriticalCurves {
    pub sizes: Vec<f64>,
    pub gap: Vec<f64>,
    pub density: Vec<f64>,
    pub delta_x: Vec<f64>,
    pub n_mean: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FiniteSizeExponents {
    pub gap: ExponentFit,
    pub density: ExponentFit,
    pub delta_x: ExponentFit,
    pub n_mean: ExponentFit,
}

pub const MIN_DECADES: f64 = 4.0;

/// Fits `A ∝ L^δ` for each observable; the grid must span four decades.
pub fn finite_size_exponents(curves: &CriticalCurves, window: Option<(f64, f64)>) -> Result<FiniteSizeExponents> {
    let lo = curves.sizes.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = curves.sizes.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if !(hi / lo >= 10f64.powf(MIN_DECADES) * (1.0 - 1e-12)) {
        return Err(Error::Domain(format!("size grid spans {:.2} decades, need {MIN_DECADES}", (hi / lo).log10())));
    }
    let pts = |v: &[f64]| -> Vec<(f64, f64)> { curves.sizes.iter().copied().zip(v.iter().copied()).collect() };
    Ok(FiniteSizeExponents {
        gap: fit_power_law(&pts(&curves.gap), window)?,
        density: fit_power_law(&pts(&curves.density), window)?,
        delta_x: fit_power_law(&pts(&curves.delta_x), window)?,
        n_mean: fit_power_law(&pts(&curves.n_mean), window)?,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScalingSample {
    pub epsilon: f64,
    pub size: f64,
    pub value: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CollapsePoint {
    pub y: f64,
    pub a_hat: f64,
    pub size: f64,
    pub epsilon: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CollapseResult {
    pub points: Vec<CollapsePoint>,
    pub c1: f64,
    pub c2: f64,
    /// Largest `(max − min)/mean` of `Â` across sizes at a common `y`.
    pub spread: f64,
    /// Bins that contributed to the spread.
    pub bins_used: usize,
}

pub const COLLAPSE_BINS: usize = 20;

/// Maps samples to `y = C₂|ε−1|^ν L`, `Â = A|ε−1|^{−γ}/C₁`.
///
/// The spread is measured at the centres of 20 logarithmic bins in `y`:
/// each size's curve is interpolated linearly in `(ln y, ln Â)` and bins
/// reached by fewer than two sizes are skipped.
pub fn collapse(samples: &[ScalingSample], gamma: f64, nu: f64, c1: f64, c2: f64) -> Result<CollapseResult> {
    if let Some(s) = samples.iter().find(|s| s.epsilon == 1.0) {
        return Err(Error::Domain(format!("sample at the critical point (L = {})", s.size)));
    }
    let mut points: Vec<CollapsePoint> = samples
        .iter()
        .map(|s| {
            let d = (s.epsilon - 1.0).abs();
            CollapsePoint {
                y: c2 * d.powf(nu) * s.size,
                a_hat: s.value * d.powf(-gamma) / c1,
                size: s.size,
                epsilon: s.epsilon,
            }
        })
        .collect();
    points.sort_by(|a, b| a.size.total_cmp(&b.size).then(a.y.total_cmp(&b.y)));

    let mut sizes: Vec<f64> = points.iter().map(|p| p.size).collect();
    sizes.dedup();
    let curves: Vec<Vec<(f64, f64)>> = sizes
        .iter()
        .map(|&l| {
            points
                .iter()
                .filter(|p| p.size == l && p.a_hat > 0.0 && p.y > 0.0)
                .map(|p| (p.y.ln(), p.a_hat.ln()))
                .collect()
        })
        .collect();
    let (mut spread, mut bins_used) = (0.0f64, 0);
    let all_y: Vec<f64> = curves.iter().flatten().map(|p| p.0).collect();
    if all_y.len() >= 2 {
        let lo = all_y.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = all_y.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let width = (hi - lo) / COLLAPSE_BINS as f64;
        for b in 0..COLLAPSE_BINS {
            let centre = lo + (b as f64 + 0.5) * width;
            let values: Vec<f64> = curves.iter().filter_map(|c| interpolate(c, centre)).map(f64::exp).collect();
            if values.len() < 2 {
                continue;
            }
            let max = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            let min = values.iter().copied().fold(f64::INFINITY, f64::min);
            let mean = values.iter().sum::<f64>() / values.len() as f64;
            spread = spread.max((max - min) / mean);
            bins_used += 1;
        }
    }
    Ok(CollapseResult { points, c1, c2, spread, bins_used })
}

/// Linear interpolation on a curve sorted by abscissa; `None` outside it.
fn interpolate(curve: &[(f64, f64)], x: f64) -> Option<f64> {
    let i = curve.partition_point(|p| p.0 < x);
    if i == curve.len() {
        return None;
    }
    if curve[i].0 == x {
        return Some(curve[i].1);
    }
    if i == 0 {
        return None;
    }
    let (x0, y0) = curve[i - 1];
    let (x1, y1) = curve[i];
    Some(y0 + (y1 - y0) * (x - x0) / (x1 - x0))
}

/// Points of the collapse belonging to one size.
pub fn curve_of(result: &CollapseResult, size: f64) -> Vec<(f64, f64)> {
    result.points.iter().filter(|p| p.size == size).map(|p| (p.y, p.a_hat)).collect()
}

/// Largest relative deviation of `Â` from its mean over the given `y` range.
pub fn plateau_flatness(curve: &[(f64, f64)], y_range: (f64, f64)) -> Option<f64> {
    let vals: Vec<f64> = curve.iter().filter(|(y, _)| *y >= y_range.0 && *y <= y_range.1).map(|p| p.1).collect();
    if vals.len() < 2 {
        return None;
    }
    let mean = vals.iter().sum::<f64>() / vals.len() as f64;
    Some(vals.iter().map(|v| (v - mean).abs() / mean.abs()).fold(0.0, f64::max))
}
