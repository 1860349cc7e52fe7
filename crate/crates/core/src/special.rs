//! Log-space factorials, generalized Laguerre polynomials and displacement
//! operator matrix elements in a Fock basis.

use statrs::function::factorial::ln_factorial as statrs_ln_factorial;

pub fn ln_factorial(n: usize) -> f64 {
    statrs_ln_factorial(n as u64)
}

/// `ln √(n!/m!)`
pub fn ln_sqrt_factorial_ratio(n: usize, m: usize) -> f64 {
    0.5 * (ln_factorial(n) - ln_factorial(m))
}

/// Small binomial coefficient as a float (exact for the degrees used here).
pub fn binomial(n: usize, k: usize) -> f64 {
    if k > n {
        return 0.0;
    }
    let k = k.min(n - k);
    let mut acc = 1.0;
    for i in 0..k {
        acc = acc * (n - i) as f64 / (i + 1) as f64;
    }
    acc
}

/// A float stored as `mantissa · e^{log_scale}` to survive the range of
/// Laguerre polynomials at large order and argument.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Scaled {
    pub mantissa: f64,
    pub log_scale: f64,
}

impl Scaled {
    pub fn value(self) -> f64 {
        self.mantissa * self.log_scale.exp()
    }

    pub fn ln_abs(self) -> f64 {
        self.mantissa.abs().ln() + self.log_scale
    }
}

const RESCALE_AT: f64 = 1e150;

/// Generalized Laguerre polynomial `L_n^{(a)}(x)` by the forward three-term
/// recurrence with dynamic rescaling.
pub fn laguerre_scaled(n: usize, a: usize, x: f64) -> Scaled {
    let a = a as f64;
    let mut prev = 1.0;
    let mut log_scale = 0.0;
    if n == 0 {
        return Scaled { mantissa: prev, log_scale };
    }
    let mut cur = 1.0 + a - x;
    for k in 1..n {
        let kf = k as f64;
        let next = ((2.0 * kf + 1.0 + a - x) * cur - (kf + a) * prev) / (kf + 1.0);
        prev = cur;
        cur = next;
        if cur.abs() > RESCALE_AT {
            prev /= RESCALE_AT;
            cur /= RESCALE_AT;
            log_scale += RESCALE_AT.ln();
        }
    }
    Scaled { mantissa: cur, log_scale }
}

pub fn laguerre(n: usize, a: usize, x: f64) -> f64 {
    laguerre_scaled(n, a, x).value()
}

/// `⟨p| exp(α b† − α b) |q⟩` for a real amplitude `α` in the Fock basis of
/// the mode `b`.
///
/// Evaluated in log space; returns exactly `0.0` when the element
/// underflows.
pub fn displacement_element(p: usize, q: usize, alpha: f64) -> f64 {
    if alpha == 0.0 {
        return if p == q { 1.0 } else { 0.0 };
    }
    let (hi, lo) = if p >= q { (p, q) } else { (q, p) };
    let k = hi - lo;
    let x = alpha * alpha;
    let lag = laguerre_scaled(lo, k, x);
    if lag.mantissa == 0.0 {
        return 0.0;
    }
    let ln_mag = -x / 2.0 + ln_sqrt_factorial_ratio(lo, hi) + k as f64 * alpha.abs().ln() + lag.ln_abs();
    let mut negative = lag.mantissa < 0.0;
    if alpha < 0.0 && k % 2 == 1 {
        negative = !negative;
    }
    // ⟨p|D|q⟩ for p < q picks up (−α)^{q−p}
    if p < q && k % 2 == 1 {
        negative = !negative;
    }
    let mag = ln_mag.exp();
    if negative {
        -mag
    } else {
        mag
    }
}

/// Dense table `D[p][q]` for `p, q < dim`.
pub fn displacement_table(dim: usize, alpha: f64) -> Vec<Vec<f64>> {
    (0..dim).map(|p| (0..dim).map(|q| displacement_element(p, q, alpha)).collect()).collect()
}
