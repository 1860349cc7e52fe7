//! Polynomials in bosonic ladder operators.
//!
//! [`NormalPoly`] holds `Σ h · a†^j a^k` in the lab mode. Substituting
//! `a = c cosh r + c† sinh r` and commuting every word into anti-normal
//! order `c^m c†^n` gives an [`OperatorPoly`] in the Bogoliubov mode.
//!
//! During the substitution each coefficient is carried as a Laurent
//! polynomial in `u = e^r` with exact dyadic coefficients, so the large
//! `cosh² r`/`sinh² r` contributions cancel before any exponential is
//! evaluated.

use std::collections::BTreeMap;

use crate::model::ModelParams;
use crate::special::binomial;

/// Highest total degree of any operator handled here.
pub const MAX_DEGREE: usize = 4;

#[derive(Debug, Clone, PartialEq, Default)]
pub struct NormalPoly {
    /// `(j, k) → h` for `h · a†^j a^k`.
    terms: BTreeMap<(usize, usize), f64>,
}

impl NormalPoly {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add(&mut self, j: usize, k: usize, h: f64) -> &mut Self {
        assert!(j + k <= MAX_DEGREE, "degree {} exceeds {MAX_DEGREE}", j + k);
        if h != 0.0 {
            *self.terms.entry((j, k)).or_insert(0.0) += h;
        }
        self
    }

    pub fn terms(&self) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
        self.terms.iter().map(|(&(j, k), &h)| (j, k, h))
    }

    pub fn coeff(&self, j: usize, k: usize) -> f64 {
        self.terms.get(&(j, k)).copied().unwrap_or(0.0)
    }

    /// The model Hamiltonian, including `V = −(λ/2)(a + a†)`.
    pub fn hamiltonian(params: &ModelParams) -> Self {
        let mut p = Self::new();
        p.add(1, 1, 1.0)
            .add(2, 0, -params.epsilon / 2.0)
            .add(0, 2, -params.epsilon / 2.0)
            .add(2, 2, params.inv_size() / 2.0)
            .add(1, 0, -params.lambda / 2.0)
            .add(0, 1, -params.lambda / 2.0);
        p
    }

    /// `a†a`
    pub fn number() -> Self {
        let mut p = Self::new();
        p.add(1, 1, 1.0);
        p
    }

    /// `x = a + a†`
    pub fn position() -> Self {
        let mut p = Self::new();
        p.add(1, 0, 1.0).add(0, 1, 1.0);
        p
    }

    /// `x² = a² + a†² + 2a†a + 1`
    pub fn position_squared() -> Self {
        let mut p = Self::new();
        p.add(2, 0, 1.0).add(0, 2, 1.0).add(1, 1, 2.0).add(0, 0, 1.0);
        p
    }

    /// `D†(α) P D(α)` for real `α`, i.e. `a → a + α`.
    ///
    /// The constant term is dropped from the returned polynomial and
    /// reported separately as its parts even and odd in `α`, so that the
    /// two sectors `±α` can share a reference energy without cancellation.
    pub fn displaced(&self, alpha: f64) -> Displaced {
        let mut poly = NormalPoly::new();
        let mut even = 0.0;
        let mut odd = 0.0;
        for (j, k, h) in self.terms() {
            for s in 0..=j {
                for t in 0..=k {
                    let power = (j - s + k - t) as i32;
                    let c = h * binomial(j, s) * binomial(k, t) * alpha.powi(power);
                    if s == 0 && t == 0 {
                        if power % 2 == 0 {
                            even += c;
                        } else {
                            odd += c;
                        }
                    } else {
                        poly.add(s, t, c);
                    }
                }
            }
        }
        Displaced { poly, even_constant: even, odd_constant: odd }
    }

    /// Bogoliubov-mode form for squeezing `r`.
    pub fn to_antinormal(&self, r: f64) -> OperatorPoly {
        assert!(r.is_finite(), "squeezing must be finite");
        let mut acc: BTreeMap<(usize, usize), Laurent> = BTreeMap::new();
        for (j, k, h) in self.terms() {
            for (word, lau) in expand_word(j, k) {
                for ((m, n), mult) in antinormal_order(&word) {
                    let entry = acc.entry((m, n)).or_default();
                    entry.add_scaled(&lau, h * mult as f64);
                }
            }
        }
        let mut terms: Vec<AntiNormalTerm> = acc
            .into_iter()
            .map(|((m, n), lau)| AntiNormalTerm { m, n, coeff: lau.eval(r) })
            .filter(|t| t.coeff != 0.0)
            .collect();
        terms.sort_by_key(|t| (t.m, t.n));
        OperatorPoly { terms }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Displaced {
    pub poly: NormalPoly,
    pub even_constant: f64,
    pub odd_constant: f64,
}

impl Displaced {
    pub fn constant(&self) -> f64 {
        self.even_constant + self.odd_constant
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AntiNormalTerm {
    pub m: usize,
    pub n: usize,
    pub coeff: f64,
}

/// `Σ coeff · c^m c†^n`
#[derive(Debug, Clone, PartialEq, Default)]
pub struct OperatorPoly {
    pub terms: Vec<AntiNormalTerm>,
}

impl OperatorPoly {
    pub fn coeff(&self, m: usize, n: usize) -> f64 {
        self.terms.iter().find(|t| t.m == m && t.n == n).map_or(0.0, |t| t.coeff)
    }

    pub fn max_degree(&self) -> usize {
        self.terms.iter().map(|t| t.m.max(t.n)).max().unwrap_or(0)
    }

    /// Adds `value` to the `c⁰c†⁰` term.
    pub fn shift_constant(&mut self, value: f64) {
        match self.terms.iter_mut().find(|t| t.m == 0 && t.n == 0) {
            Some(t) => t.coeff += value,
            None => {
                self.terms.insert(0, AntiNormalTerm { m: 0, n: 0, coeff: value });
            }
        }
    }

    /// Largest `|coeff(m,n) − coeff(n,m)|`.
    pub fn hermiticity_defect(&self) -> f64 {
        self.terms.iter().map(|t| (t.coeff - self.coeff(t.n, t.m)).abs()).fold(0.0, f64::max)
    }
}

/// Model Hamiltonian in the Bogoliubov mode with squeezing `r_bar`.
pub fn antinormal_coeffs(params: &ModelParams, r_bar: f64) -> OperatorPoly {
    NormalPoly::hamiltonian(params).to_antinormal(r_bar)
}

/// Laurent polynomial in `u = e^r` with powers `−4..=4`.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
struct Laurent([f64; 2 * MAX_DEGREE + 1]);

impl Laurent {
    fn one() -> Self {
        let mut l = Self::default();
        l.0[MAX_DEGREE] = 1.0;
        l
    }

    /// `cosh r = (u + 1/u)/2`
    fn cosh() -> Self {
        let mut l = Self::default();
        l.0[MAX_DEGREE + 1] = 0.5;
        l.0[MAX_DEGREE - 1] = 0.5;
        l
    }

    /// `sinh r = (u − 1/u)/2`
    fn sinh() -> Self {
        let mut l = Self::default();
        l.0[MAX_DEGREE + 1] = 0.5;
        l.0[MAX_DEGREE - 1] = -0.5;
        l
    }

    fn mul(&self, other: &Self) -> Self {
        let mut out = Self::default();
        let w = 2 * MAX_DEGREE as isize;
        for (i, &a) in self.0.iter().enumerate() {
            if a == 0.0 {
                continue;
            }
            for (j, &b) in other.0.iter().enumerate() {
                if b == 0.0 {
                    continue;
                }
                let idx = i as isize + j as isize - MAX_DEGREE as isize;
                assert!((0..=w).contains(&idx), "Laurent degree overflow");
                out.0[idx as usize] += a * b;
            }
        }
        out
    }

    fn add_scaled(&mut self, other: &Self, s: f64) {
        for (a, b) in self.0.iter_mut().zip(other.0.iter()) {
            *a += s * b;
        }
    }

    fn eval(&self, r: f64) -> f64 {
        self.0
            .iter()
            .enumerate()
            .filter(|(_, c)| **c != 0.0)
            .map(|(i, c)| c * ((i as f64 - MAX_DEGREE as f64) * r).exp())
            .sum()
    }
}

/// Letters of a word: `true` is `c†`, `false` is `c`.
type Word = Vec<bool>;

/// Expands `a†^j a^k` with `a† = cosh·c† + sinh·c`, `a = cosh·c + sinh·c†`.
fn expand_word(j: usize, k: usize) -> Vec<(Word, Laurent)> {
    let mut out = vec![(Vec::new(), Laurent::one())];
    let letters = std::iter::repeat_n(true, j).chain(std::iter::repeat_n(false, k));
    for is_dagger in letters {
        let (same, flipped) = (Laurent::cosh(), Laurent::sinh());
        let mut next = Vec::with_capacity(out.len() * 2);
        for (w, l) in &out {
            let mut w1 = w.clone();
            w1.push(is_dagger);
            next.push((w1, l.mul(&same)));
            let mut w2 = w.clone();
            w2.push(!is_dagger);
            next.push((w2, l.mul(&flipped)));
        }
        out = next;
    }
    out
}

/// Rewrites a word as `Σ mult · c^m c†^n` using `c†c = cc† − 1`.
fn antinormal_order(word: &[bool]) -> BTreeMap<(usize, usize), i64> {
    let mut out = BTreeMap::new();
    let mut stack: Vec<(Word, i64)> = vec![(word.to_vec(), 1)];
    while let Some((w, mult)) = stack.pop() {
        match w.windows(2).position(|p| p[0] && !p[1]) {
            None => {
                let m = w.iter().filter(|&&d| !d).count();
                *out.entry((m, w.len() - m)).or_insert(0) += mult;
            }
            Some(i) => {
                let mut swapped = w.clone();
                swapped.swap(i, i + 1);
                stack.push((swapped, mult));
                let mut contracted = w.clone();
                contracted.drain(i..i + 2);
                stack.push((contracted, -mult));
            }
        }
    }
    out.retain(|_, v| *v != 0);
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn number_operator_at_zero_squeezing() {
        let poly = NormalPoly::number().to_antinormal(0.0);
        assert_eq!(poly.terms.len(), 2);
        assert_eq!(poly.coeff(1, 1), 1.0);
        assert_eq!(poly.coeff(0, 0), -1.0);
    }

    #[test]
    fn free_hamiltonian_without_quartic() {
        let params = ModelParams::new(0.0, f64::INFINITY).unwrap();
        let poly = antinormal_coeffs(&params, 0.0);
        assert_eq!(
            poly.terms,
            vec![AntiNormalTerm { m: 0, n: 0, coeff: -1.0 }, AntiNormalTerm { m: 1, n: 1, coeff: 1.0 },]
        );
    }

    #[test]
    fn anti_normal_ordering_small_words() {
        // c†c = cc† − 1
        let o = antinormal_order(&[true, false]);
        assert_eq!(o.get(&(1, 1)), Some(&1));
        assert_eq!(o.get(&(0, 0)), Some(&-1));
        // c†²c² = c²c†² − 4cc† + 2
        let o = antinormal_order(&[true, true, false, false]);
        assert_eq!(o.get(&(2, 2)), Some(&1));
        assert_eq!(o.get(&(1, 1)), Some(&-4));
        assert_eq!(o.get(&(0, 0)), Some(&2));
        assert_eq!(o.len(), 3);
    }

    #[test]
    fn quadratic_coefficient_closed_form() {
        let eps = 0.6;
        let r = 2f64.ln() / 2.0;
        let params = ModelParams::new(eps, 7.0).unwrap();
        let quad = {
            let mut p = NormalPoly::new();
            p.add(1, 1, 1.0).add(2, 0, -eps / 2.0).add(0, 2, -eps / 2.0);
            p.to_antinormal(r)
        };
        let (c, s) = (r.cosh(), r.sinh());
        assert_relative_eq!(quad.coeff(1, 1), c * c + s * s - 2.0 * eps * s * c, epsilon = 1e-14);
        // reordering constant: −sinh²r·(cosh2r... ) from c†c = cc† − 1
        assert_relative_eq!(quad.coeff(0, 0), -(c * c) + eps * s * c, epsilon = 1e-14);
        let full = antinormal_coeffs(&params, r);
        assert!(full.max_degree() <= 4);
    }

    #[test]
    fn critical_cancellation_is_exact() {
        // at ε = 1 the c c† coefficient of the quadratic part is exactly e^{−2r}
        let mut p = NormalPoly::new();
        p.add(1, 1, 1.0).add(2, 0, -0.5).add(0, 2, -0.5);
        for &r in &[0.5, 3.0, 8.0, 15.0] {
            let poly = p.to_antinormal(r);
            assert_relative_eq!(poly.coeff(1, 1), (-2.0 * r).exp(), max_relative = 1e-14);
        }
    }

    #[test]
    fn hermitian_table() {
        for &(eps, l, r, lam) in &[(0.3, 2.0, 0.2, 0.0), (1.0, 1e8, 4.0, 0.0), (1.7, 10.0, 0.9, 0.3)] {
            let params = ModelParams::with_lambda(eps, l, lam).unwrap();
            let poly = antinormal_coeffs(&params, r);
            let scale = poly.terms.iter().map(|t| t.coeff.abs()).fold(0.0, f64::max);
            assert!(poly.hermiticity_defect() <= 1e-14 * scale, "{eps} {l} {r}");
        }
    }

    #[test]
    fn displacement_shift_of_hamiltonian() {
        let params = ModelParams::with_lambda(1.4, 20.0, 0.1).unwrap();
        let alpha = 2.3;
        let d = NormalPoly::hamiltonian(&params).displaced(alpha);
        let l = params.size;
        let s = alpha * alpha / l;
        assert_relative_eq!(d.even_constant, (1.0 - 1.4) * alpha * alpha + alpha.powi(4) / (2.0 * l), epsilon = 1e-12);
        assert_relative_eq!(d.odd_constant, -0.1 * alpha, epsilon = 1e-14);
        assert_relative_eq!(d.poly.coeff(1, 1), 1.0 + 2.0 * s, epsilon = 1e-14);
        assert_relative_eq!(d.poly.coeff(2, 0), -(1.4 - s) / 2.0, epsilon = 1e-14);
        assert_relative_eq!(d.poly.coeff(1, 0), alpha * (1.0 - 1.4 + s) - 0.05, epsilon = 1e-13);
        assert_relative_eq!(d.poly.coeff(2, 1), alpha / l, epsilon = 1e-14);
        assert_relative_eq!(d.poly.coeff(2, 2), 1.0 / (2.0 * l), epsilon = 1e-14);
    }

    #[test]
    fn shift_constant_inserts_term() {
        let mut poly = NormalPoly::position().to_antinormal(0.3);
        assert_eq!(poly.coeff(0, 0), 0.0);
        poly.shift_constant(2.5);
        assert_eq!(poly.coeff(0, 0), 2.5);
        poly.shift_constant(-1.0);
        assert_eq!(poly.coeff(0, 0), 1.5);
    }
}
