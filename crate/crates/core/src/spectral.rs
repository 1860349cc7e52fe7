//! Exact diagonalization in an optimized, possibly non-orthogonal basis.
//!
//! Basis vectors are `S(r̄)|n⟩` when the optimal Gaussian is undisplaced,
//! otherwise the interleaved pair `D(+ᾱ)S|n⟩, D(−ᾱ)S|n⟩`. Matrix elements
//! are exact for the truncated set (the matrix of `P·O·P`): ladder actions
//! are evaluated analytically, never through a finite intermediate space.
//!
//! Same-sector blocks are built from the operator displaced by `±ᾱ`, with
//! the parity-even part of the classical energy removed as a reference, so
//! entries stay O(1) at any size.

use nalgebra::{DMatrix, DVector, SymmetricEigen};

use crate::error::{Error, Result};
use crate::gaussian::{minimize_ansatz, GaussianAnsatz, MinimizeOptions};
use crate::model::ModelParams;
use crate::operator::{NormalPoly, OperatorPoly, MAX_DEGREE};
use crate::special::{binomial, displacement_table};

/// Cross-sector blocks are dropped when `e^{−2ᾱ_c²}` falls below this.
pub const SECTOR_DECOUPLING: f64 = 1e-300;

pub const DEFAULT_OVERLAP_FILTER: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BasisKind {
    SqueezedFock,
    DisplacedSqueezedPair,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BasisSpec {
    pub kind: BasisKind,
    pub n_max: usize,
    pub ansatz: GaussianAnsatz,
    /// `ᾱ e^{−r̄}`, the displacement seen by the Bogoliubov mode.
    pub alpha_c: f64,
}

impl BasisSpec {
    pub fn new(ansatz: GaussianAnsatz, n_max: usize) -> Self {
        let kind = if ansatz.alpha_bar == 0.0 { BasisKind::SqueezedFock } else { BasisKind::DisplacedSqueezedPair };
        Self { kind, n_max, ansatz, alpha_c: ansatz.alpha_c() }
    }

    pub fn with_n_max(&self, n_max: usize) -> Self {
        Self { n_max, ..*self }
    }

    pub fn dim(&self) -> usize {
        match self.kind {
            BasisKind::SqueezedFock => self.n_max + 1,
            BasisKind::DisplacedSqueezedPair => 2 * (self.n_max + 1),
        }
    }

    /// Ladder index `n` of basis vector `k`.
    pub fn level(&self, k: usize) -> usize {
        match self.kind {
            BasisKind::SqueezedFock => k,
            BasisKind::DisplacedSqueezedPair => k / 2,
        }
    }

    pub fn sectors_decoupled(&self) -> bool {
        self.kind == BasisKind::DisplacedSqueezedPair && (-2.0 * self.alpha_c * self.alpha_c).exp() < SECTOR_DECOUPLING
    }
}

/// Runs the Gaussian minimization and picks the basis it implies.
pub fn build_basis(params: &ModelParams, n_max: usize) -> Result<BasisSpec> {
    let min = minimize_ansatz(params, &MinimizeOptions::default())?;
    Ok(BasisSpec::new(min.ansatz, n_max))
}

/// `√((n+k)!/n!)` for `k ≤ MAX_DEGREE`, row per `n`.
fn rising_roots(len: usize) -> Vec<[f64; MAX_DEGREE + 1]> {
    (0..len)
        .map(|n| {
            let mut row = [1.0; MAX_DEGREE + 1];
            for k in 1..=MAX_DEGREE {
                row[k] = row[k - 1] * ((n + k) as f64).sqrt();
            }
            row
        })
        .collect()
}

/// `⟨q|P|p⟩` for `P = Σ coeff c^m c†^n` in the plain ladder basis.
fn banded_block(poly: &OperatorPoly, n_max: usize, roots: &[[f64; MAX_DEGREE + 1]]) -> DMatrix<f64> {
    let dim = n_max + 1;
    let mut out = DMatrix::zeros(dim, dim);
    for t in &poly.terms {
        for p in 0..dim {
            // q + m = p + n
            let Some(q) = (p + t.n).checked_sub(t.m) else { continue };
            if q >= dim {
                continue;
            }
            out[(q, p)] += t.coeff * roots[q][t.m] * roots[p][t.n];
        }
    }
    out
}

/// `⟨q|(c + β_row)^m D(β_col − β_row) (c† + β_col)^n|p⟩` summed over terms.
fn shifted_block(
    poly: &OperatorPoly,
    n_max: usize,
    beta_row: f64,
    beta_col: f64,
    disp: &DMatrix<f64>,
    roots: &[[f64; MAX_DEGREE + 1]],
) -> DMatrix<f64> {
    let dim = n_max + 1;
    let mut expanded: Vec<(usize, usize, f64)> = Vec::new();
    for t in &poly.terms {
        for r in 0..=t.m {
            for s in 0..=t.n {
                let w = t.coeff
                    * binomial(t.m, r)
                    * binomial(t.n, s)
                    * beta_row.powi((t.m - r) as i32)
                    * beta_col.powi((t.n - s) as i32);
                if w != 0.0 {
                    expanded.push((r, s, w));
                }
            }
        }
    }
    DMatrix::from_fn(dim, dim, |q, p| {
        expanded.iter().map(|&(r, s, w)| w * roots[q][r] * roots[p][s] * disp[(q + r, p + s)]).sum()
    })
}

struct PairScratch {
    roots: Vec<[f64; MAX_DEGREE + 1]>,
    /// `D(2ᾱ_c)` on the enlarged index range; `None` when decoupled.
    forward: Option<DMatrix<f64>>,
}

impl PairScratch {
    fn new(basis: &BasisSpec) -> Self {
        let len = basis.n_max + 1 + MAX_DEGREE;
        let forward = (!basis.sectors_decoupled()).then(|| {
            let t = displacement_table(len, 2.0 * basis.alpha_c);
            DMatrix::from_fn(len, len, |i, j| t[i][j])
        });
        Self { roots: rising_roots(len), forward }
    }
}

fn interleave(blocks: [[&DMatrix<f64>; 2]; 2], n_max: usize) -> DMatrix<f64> {
    let dim = n_max + 1;
    DMatrix::from_fn(2 * dim, 2 * dim, |i, j| blocks[i % 2][j % 2][(i / 2, j / 2)])
}

/// Gram matrix of the basis.
pub fn overlap_matrix(basis: &BasisSpec) -> DMatrix<f64> {
    let dim = basis.dim();
    if basis.kind == BasisKind::SqueezedFock || basis.sectors_decoupled() {
        return DMatrix::identity(dim, dim);
    }
    let n = basis.n_max + 1;
    let t = displacement_table(n, 2.0 * basis.alpha_c);
    let d = DMatrix::from_fn(n, n, |i, j| t[i][j]);
    let id = DMatrix::identity(n, n);
    // row sector −, column sector + sees D(+2ᾱ_c); the mirror block is its transpose
    let dt = d.transpose();
    interleave([[&id, &dt], [&d, &id]], basis.n_max)
}

/// Matrix of an anti-normal polynomial in the undisplaced Bogoliubov mode,
/// via the double binomial sums for every block.
pub fn operator_matrix(poly: &OperatorPoly, basis: &BasisSpec) -> DMatrix<f64> {
    let n_max = basis.n_max;
    match basis.kind {
        BasisKind::SqueezedFock => banded_block(poly, n_max, &rising_roots(n_max + 1 + MAX_DEGREE)),
        BasisKind::DisplacedSqueezedPair => {
            let scratch = PairScratch::new(basis);
            let a = basis.alpha_c;
            let len = n_max + 1 + MAX_DEGREE;
            let id = DMatrix::identity(len, len);
            let same_p = shifted_block(poly, n_max, a, a, &id, &scratch.roots);
            let same_m = shifted_block(poly, n_max, -a, -a, &id, &scratch.roots);
            let (cross_mp, cross_pm) = cross_blocks(poly, basis, &scratch);
            interleave([[&same_p, &cross_pm], [&cross_mp, &same_m]], n_max)
        }
    }
}

/// Blocks (row −, column +) and (row +, column −).
fn cross_blocks(poly: &OperatorPoly, basis: &BasisSpec, scratch: &PairScratch) -> (DMatrix<f64>, DMatrix<f64>) {
    let dim = basis.n_max + 1;
    match &scratch.forward {
        None => (DMatrix::zeros(dim, dim), DMatrix::zeros(dim, dim)),
        Some(fwd) => {
            let a = basis.alpha_c;
            let back = fwd.transpose();
            (
                shifted_block(poly, basis.n_max, -a, a, fwd, &scratch.roots),
                shifted_block(poly, basis.n_max, a, -a, &back, &scratch.roots),
            )
        }
    }
}

/// Matrix of `op − reference` in the basis.
///
/// Same-sector blocks come from the operator displaced by `±ᾱ`, so no
/// large classical values enter them; only cross blocks use the
/// undisplaced expansion. Both cross triangles are computed independently.
pub fn represent(op: &NormalPoly, basis: &BasisSpec, reference: f64) -> DMatrix<f64> {
    let r = basis.ansatz.r_bar;
    let n_max = basis.n_max;
    let roots = rising_roots(n_max + 1 + MAX_DEGREE);
    let sector = |sign: f64| {
        let d = op.displaced(sign * basis.ansatz.alpha_bar);
        let mut poly = d.poly.to_antinormal(r);
        poly.shift_constant((d.even_constant - reference) + d.odd_constant);
        banded_block(&poly, n_max, &roots)
    };
    match basis.kind {
        BasisKind::SqueezedFock => sector(1.0),
        BasisKind::DisplacedSqueezedPair => {
            let same_p = sector(1.0);
            let same_m = sector(-1.0);
            let scratch = PairScratch::new(basis);
            let mut poly = op.to_antinormal(r);
            poly.shift_constant(-reference);
            let (cross_mp, cross_pm) = cross_blocks(&poly, basis, &scratch);
            interleave([[&same_p, &cross_pm], [&cross_mp, &same_m]], n_max)
        }
    }
}

/// Largest `|M_ij − M_ji|` relative to the largest entry.
pub fn hermiticity_defect(m: &DMatrix<f64>) -> f64 {
    let scale = m.amax();
    if scale == 0.0 {
        return 0.0;
    }
    (m - m.transpose()).amax() / scale
}

/// Lowest eigenpairs of `H y = λ A y`.
#[derive(Debug, Clone, PartialEq)]
pub struct Eigenpairs {
    /// All retained eigenvalues, ascending.
    pub values: Vec<f64>,
    /// The requested lowest eigenvectors as columns, `yᵀ A y = 1`.
    pub vectors: DMatrix<f64>,
    pub retained_dim: usize,
}

fn sorted_eigen(h: DMatrix<f64>) -> (Vec<f64>, DMatrix<f64>) {
    let eig = SymmetricEigen::new(h);
    let mut order: Vec<usize> = (0..eig.eigenvalues.len()).collect();
    order.sort_by(|&i, &j| eig.eigenvalues[i].total_cmp(&eig.eigenvalues[j]));
    let values = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let vectors = eig.eigenvectors.select_columns(&order);
    (values, vectors)
}

fn symmetrized(h: &DMatrix<f64>) -> DMatrix<f64> {
    (h + h.transpose()) * 0.5
}

/// Rayleigh–Ritz on the span of the columns of `y` against the unreduced
/// matrices. The dense solver's error scales with the largest entry of `h`;
/// for localized low states the refined values only see the entries that
/// the states actually populate.
fn refine(h: &DMatrix<f64>, a: Option<&DMatrix<f64>>, y: &DMatrix<f64>, values: &mut [f64]) -> DMatrix<f64> {
    let hy = h * y;
    let hk = symmetrized(&(y.transpose() * hy));
    let ak = symmetrized(&match a {
        Some(a) => y.transpose() * (a * y),
        None => y.transpose() * y,
    });
    let Some(chol) = ak.cholesky() else { return y.clone() };
    let l_inv = match chol.l().try_inverse() {
        Some(m) => m,
        None => return y.clone(),
    };
    let reduced = symmetrized(&(&l_inv * hk * l_inv.transpose()));
    let (small, w) = sorted_eigen(reduced);
    values[..small.len()].copy_from_slice(&small);
    y * l_inv.transpose() * w
}

/// Solves the ordinary (`a = None`) or generalized problem, keeping the
/// `k` lowest vectors. The generalized case uses canonical
/// orthogonalization, dropping overlap eigenvalues below `filter`.
pub fn solve_ground(h: &DMatrix<f64>, a: Option<&DMatrix<f64>>, k: usize, filter: f64) -> Result<Eigenpairs> {
    let h = symmetrized(h);
    match a {
        None => {
            let dim = h.nrows();
            let (mut values, vectors) = sorted_eigen(h.clone());
            let k = k.min(dim);
            let vectors = refine(&h, None, &vectors.columns(0, k).into_owned(), &mut values);
            Ok(Eigenpairs { values, vectors, retained_dim: dim })
        }
        Some(a) => {
            let (s, u) = sorted_eigen(symmetrized(a));
            let keep: Vec<usize> = (0..s.len()).filter(|&i| s[i] > filter).collect();
            if keep.is_empty() {
                return Err(Error::EmptySubspace { threshold: filter });
            }
            let mut x = u.select_columns(&keep);
            for (c, &i) in keep.iter().enumerate() {
                x.column_mut(c).scale_mut(1.0 / s[i].sqrt());
            }
            let reduced = x.transpose() * &h * &x;
            let (mut values, w) = sorted_eigen(symmetrized(&reduced));
            let k = k.min(keep.len());
            let vectors = refine(&h, Some(a), &(&x * w.columns(0, k)), &mut values);
            Ok(Eigenpairs { values, vectors, retained_dim: keep.len() })
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConvergenceStep {
    pub n_max: usize,
    pub lowest: [f64; 2],
    pub tail: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SpectralResult {
    pub basis: BasisSpec,
    /// Removed from the Hamiltonian before diagonalizing.
    pub reference_energy: f64,
    /// Eigenvalues of `H − reference`, ascending.
    pub shifted_eigenvalues: Vec<f64>,
    /// Lowest eigenvectors as columns, normalized against the overlap.
    pub vectors: DMatrix<f64>,
    /// `None` stands for the identity.
    pub overlap: Option<DMatrix<f64>>,
    pub retained_dim: usize,
    pub converged: bool,
    pub trace: Vec<ConvergenceStep>,
}

impl SpectralResult {
    pub fn n_max(&self) -> usize {
        self.basis.n_max
    }

    pub fn eigenvalue(&self, i: usize) -> f64 {
        self.reference_energy + self.shifted_eigenvalues[i]
    }

    pub fn eigenvalues(&self) -> Vec<f64> {
        (0..self.shifted_eigenvalues.len()).map(|i| self.eigenvalue(i)).collect()
    }

    pub fn ground_energy(&self) -> f64 {
        self.eigenvalue(0)
    }

    pub fn state(&self, i: usize) -> DVector<f64> {
        self.vectors.column(i).into_owned()
    }

    /// `A y`
    pub fn overlap_times(&self, y: &DVector<f64>) -> DVector<f64> {
        match &self.overlap {
            Some(a) => a * y,
            None => y.clone(),
        }
    }

    /// Weight of state `i` on levels above `0.9·n_max`, relative to its norm.
    pub fn tail_population(&self, i: usize) -> f64 {
        let y = self.vectors.column(i);
        let cut = (0.9 * self.basis.n_max as f64).floor() as usize;
        let total: f64 = y.iter().map(|v| v * v).sum();
        let tail: f64 = y.iter().enumerate().filter(|(k, _)| self.basis.level(*k) > cut).map(|(_, v)| v * v).sum();
        tail / total
    }
}

const KEEP_VECTORS: usize = 2;

fn parity_split_solve(h: &DMatrix<f64>) -> Result<(Vec<f64>, DMatrix<f64>)> {
    let dim = h.nrows();
    let mut values = Vec::with_capacity(dim);
    let mut columns: Vec<(f64, DVector<f64>)> = Vec::new();
    for parity in 0..2 {
        let idx: Vec<usize> = (parity..dim).step_by(2).collect();
        if idx.is_empty() {
            continue;
        }
        let sub = h.select_rows(&idx).select_columns(&idx);
        let pairs = solve_ground(&sub, None, KEEP_VECTORS, 0.0)?;
        values.extend_from_slice(&pairs.values);
        for (c, &value) in pairs.values.iter().take(pairs.vectors.ncols()).enumerate() {
            let mut y = DVector::zeros(dim);
            for (row, &i) in idx.iter().enumerate() {
                y[i] = pairs.vectors[(row, c)];
            }
            columns.push((value, y));
        }
    }
    values.sort_by(f64::total_cmp);
    columns.sort_by(|a, b| a.0.total_cmp(&b.0));
    let k = KEEP_VECTORS.min(columns.len());
    let vectors = DMatrix::from_columns(&columns[..k].iter().map(|c| c.1.clone()).collect::<Vec<_>>());
    Ok((values, vectors))
}

/// Decoupled sectors. With `λ = 0` the mirror sector repeats the spectrum
/// and eigenstates are returned as parity combinations.
fn decoupled_solve(h: &DMatrix<f64>, symmetric: bool) -> Result<(Vec<f64>, DMatrix<f64>)> {
    let dim = h.nrows();
    let n = dim / 2;
    let plus_idx: Vec<usize> = (0..dim).step_by(2).collect();
    let minus_idx: Vec<usize> = (1..dim).step_by(2).collect();
    let block = |idx: &[usize]| h.select_rows(idx).select_columns(idx);
    let mut columns: Vec<(f64, DVector<f64>)> = Vec::new();
    let mut values = Vec::with_capacity(dim);
    let plus = solve_ground(&block(&plus_idx), None, KEEP_VECTORS, 0.0)?;
    if symmetric {
        let s = std::f64::consts::FRAC_1_SQRT_2;
        for &v in &plus.values {
            values.extend_from_slice(&[v, v]);
        }
        for c in 0..plus.vectors.ncols() {
            for sign in [1.0, -1.0] {
                let mut y = DVector::zeros(dim);
                for q in 0..n {
                    let v = plus.vectors[(q, c)];
                    let mirror = if q % 2 == 0 { 1.0 } else { -1.0 };
                    y[2 * q] = s * v;
                    y[2 * q + 1] = s * sign * mirror * v;
                }
                columns.push((plus.values[c], y));
            }
        }
    } else {
        let minus = solve_ground(&block(&minus_idx), None, KEEP_VECTORS, 0.0)?;
        for (pairs, idx) in [(&plus, &plus_idx), (&minus, &minus_idx)] {
            values.extend_from_slice(&pairs.values);
            for c in 0..pairs.vectors.ncols() {
                let mut y = DVector::zeros(dim);
                for (row, &i) in idx.iter().enumerate() {
                    y[i] = pairs.vectors[(row, c)];
                }
                columns.push((pairs.values[c], y));
            }
        }
        values.sort_by(f64::total_cmp);
    }
    // stable sort keeps the even combination first within a degenerate pair
    columns.sort_by(|a, b| a.0.total_cmp(&b.0));
    let k = KEEP_VECTORS.min(columns.len());
    let vectors = DMatrix::from_columns(&columns[..k].iter().map(|c| c.1.clone()).collect::<Vec<_>>());
    Ok((values, vectors))
}

/// Diagonalizes the model Hamiltonian in a fixed basis.
pub fn diagonalize(params: &ModelParams, basis: &BasisSpec, filter: f64) -> Result<SpectralResult> {
    let op = NormalPoly::hamiltonian(params);
    let reference = match basis.kind {
        BasisKind::SqueezedFock => 0.0,
        BasisKind::DisplacedSqueezedPair => op.displaced(basis.ansatz.alpha_bar).even_constant,
    };
    let h = represent(&op, basis, reference);
    let symmetric = !params.is_perturbed();
    let (values, vectors, overlap, retained) = match basis.kind {
        BasisKind::SqueezedFock if symmetric => {
            let (v, y) = parity_split_solve(&h)?;
            (v, y, None, basis.dim())
        }
        BasisKind::SqueezedFock => {
            let p = solve_ground(&h, None, KEEP_VECTORS, filter)?;
            (p.values, p.vectors, None, p.retained_dim)
        }
        BasisKind::DisplacedSqueezedPair if basis.sectors_decoupled() => {
            let (v, y) = decoupled_solve(&h, symmetric)?;
            (v, y, None, basis.dim())
        }
        BasisKind::DisplacedSqueezedPair => {
            let a = overlap_matrix(basis);
            let p = solve_ground(&h, Some(&a), KEEP_VECTORS, filter)?;
            (p.values, p.vectors, Some(a), p.retained_dim)
        }
    };
    Ok(SpectralResult {
        basis: *basis,
        reference_energy: reference,
        shifted_eigenvalues: values,
        vectors,
        overlap,
        retained_dim: retained,
        converged: false,
        trace: Vec::new(),
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AdaptiveOptions {
    pub initial_n_max: usize,
    pub relative_tolerance: f64,
    pub absolute_tolerance: f64,
    pub tail_tolerance: f64,
    pub n_max_cap: usize,
    pub overlap_filter: f64,
    pub minimize: MinimizeOptions,
}

impl Default for AdaptiveOptions {
    fn default() -> Self {
        Self {
            initial_n_max: 16,
            relative_tolerance: 1e-11,
            absolute_tolerance: 1e-13,
            tail_tolerance: 1e-12,
            n_max_cap: 4096,
            overlap_filter: DEFAULT_OVERLAP_FILTER,
            minimize: MinimizeOptions::default(),
        }
    }
}

/// Minimizes the Gaussian ansatz, then grows the truncation until the two
/// lowest levels and the tail population settle.
pub fn adaptive_diagonalize(params: &ModelParams, opts: &AdaptiveOptions) -> Result<SpectralResult> {
    let min = minimize_ansatz(params, &opts.minimize)?;
    adaptive_in_basis(params, &min.ansatz, opts)
}

/// As [`adaptive_diagonalize`] with a caller-chosen Gaussian.
pub fn adaptive_in_basis(
    params: &ModelParams,
    ansatz: &GaussianAnsatz,
    opts: &AdaptiveOptions,
) -> Result<SpectralResult> {
    let mut n_max = opts.initial_n_max.max(1);
    let mut trace = Vec::new();
    let mut previous: Option<[f64; 2]> = None;
    loop {
        if n_max > opts.n_max_cap {
            return Err(Error::NoConvergence {
                iterations: trace.len(),
                reason: format!("truncation would exceed n_max cap {}", opts.n_max_cap),
            });
        }
        let basis = BasisSpec::new(*ansatz, n_max);
        let mut result = diagonalize(params, &basis, opts.overlap_filter)?;
        let lowest = [result.shifted_eigenvalues[0], *result.shifted_eigenvalues.get(1).unwrap_or(&f64::NAN)];
        let tail = (0..result.vectors.ncols()).map(|i| result.tail_population(i)).fold(0.0, f64::max);
        trace.push(ConvergenceStep { n_max, lowest, tail });
        log::debug!("n_max {n_max}: lowest {lowest:?}, tail {tail:e}");
        let settled = previous.is_some_and(|prev| {
            prev.iter().zip(lowest.iter()).all(|(a, b)| {
                let tol = (opts.relative_tolerance * b.abs()).max(opts.absolute_tolerance);
                (a - b).abs() <= tol
            })
        });
        if settled && tail < opts.tail_tolerance {
            result.converged = true;
            result.trace = trace;
            return Ok(result);
        }
        previous = Some(lowest);
        n_max *= 2;
    }
}
