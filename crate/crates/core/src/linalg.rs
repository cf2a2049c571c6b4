//! Dense kernel for weighted least-squares minimization over `{x : Ax = b}`.
//!
//! Everything here is sized for desk-scale instances. The minimizer is
//! computed from a row-sorted, column-pivoted QR of `W^½·Aᵀ`, which stays
//! accurate when the weights spread over many orders of magnitude. [`WeightedGram`] forms
//! `L = A·diag(w)·Aᵀ` explicitly for callers that need `L⁺` itself; it uses
//! Cholesky and falls back to an eigendecomposition pseudoinverse when `L`
//! is singular or badly scaled.

use alloc::vec;
use alloc::vec::Vec;

use nalgebra::linalg::{Cholesky, SymmetricEigen};
use nalgebra::{DMatrix, DVector, Dyn};

use crate::{Error, Result};

/// Eigenvalues below this fraction of the largest are treated as zero.
pub const PINV_RELATIVE_TOLERANCE: f64 = 1e-12;

/// Weight spread below which Cholesky is not attempted up front.
pub const WEIGHT_RATIO_FALLBACK: f64 = 1e-12;

/// Relative residual allowed for `A·q = b`.
pub const FEASIBILITY_TOLERANCE: f64 = 1e-8;

/// Row-major dense matrix with finite entries.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Matrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl Matrix {
    pub fn new(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(Error::DimensionMismatch {
                expected: rows * cols,
                found: data.len(),
            });
        }
        if data.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFiniteInput);
        }
        Ok(Self { rows, cols, data })
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let cols = rows.first().map_or(0, Vec::len);
        let mut data = Vec::with_capacity(rows.len() * cols);
        for row in rows {
            if row.len() != cols {
                return Err(Error::DimensionMismatch {
                    expected: cols,
                    found: row.len(),
                });
            }
            data.extend_from_slice(row);
        }
        Self::new(rows.len(), cols, data)
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m.data[i * n + i] = 1.0;
        }
        m
    }

    #[inline]
    pub fn rows(&self) -> usize {
        self.rows
    }

    #[inline]
    pub fn cols(&self) -> usize {
        self.cols
    }

    #[inline]
    pub fn get(&self, r: usize, c: usize) -> f64 {
        self.data[r * self.cols + c]
    }

    /// Panics on a non-finite value, which would break the type invariant.
    #[inline]
    pub fn set(&mut self, r: usize, c: usize, value: f64) {
        assert!(value.is_finite(), "matrix entries must be finite");
        self.data[r * self.cols + c] = value;
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn row(&self, r: usize) -> &[f64] {
        &self.data[r * self.cols..(r + 1) * self.cols]
    }

    pub fn column(&self, c: usize) -> Vec<f64> {
        (0..self.rows).map(|r| self.get(r, c)).collect()
    }

    /// `A·x`.
    pub fn mul_vec(&self, x: &[f64]) -> Vec<f64> {
        debug_assert_eq!(x.len(), self.cols);
        (0..self.rows)
            .map(|r| self.row(r).iter().zip(x).map(|(a, b)| a * b).sum())
            .collect()
    }

    /// `Aᵀ·z`.
    pub fn transpose_mul_vec(&self, z: &[f64]) -> Vec<f64> {
        debug_assert_eq!(z.len(), self.rows);
        let mut out = vec![0.0; self.cols];
        for (r, zr) in z.iter().enumerate() {
            for (o, a) in out.iter_mut().zip(self.row(r)) {
                *o += a * zr;
            }
        }
        out
    }

    pub fn select_columns(&self, cols: &[usize]) -> Matrix {
        let mut data = Vec::with_capacity(self.rows * cols.len());
        for r in 0..self.rows {
            data.extend(cols.iter().map(|&c| self.get(r, c)));
        }
        Matrix {
            rows: self.rows,
            cols: cols.len(),
            data,
        }
    }

    pub fn transpose(&self) -> Matrix {
        let mut out = Matrix::zeros(self.cols, self.rows);
        for r in 0..self.rows {
            for c in 0..self.cols {
                out.data[c * self.rows + r] = self.get(r, c);
            }
        }
        out
    }

    /// True when every entry is an integer representable exactly in `i64`.
    pub fn is_integer(&self) -> bool {
        self.data
            .iter()
            .all(|v| libm::trunc(*v) == *v && v.abs() < 9.0e15)
    }

    /// Numerical rank from the singular values, relative cutoff `1e-10·σ_max`.
    pub fn rank(&self) -> usize {
        if self.rows == 0 || self.cols == 0 {
            return 0;
        }
        let svd = self.to_dmatrix().svd(false, false);
        let smax = svd.singular_values.max();
        if smax == 0.0 {
            return 0;
        }
        svd.singular_values
            .iter()
            .filter(|&&s| s > 1e-10 * smax)
            .count()
    }

    pub(crate) fn to_dmatrix(&self) -> DMatrix<f64> {
        DMatrix::from_row_slice(self.rows, self.cols, &self.data)
    }
}

pub(crate) fn max_abs(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |acc: f64, x| acc.max(x.abs()))
}

pub(crate) fn l1_norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x.abs()).sum()
}

#[derive(Debug, Clone)]
enum Factorization {
    Cholesky(Cholesky<f64, Dyn>),
    Eigen {
        vectors: DMatrix<f64>,
        /// Reciprocal eigenvalues, zero where the eigenvalue was cut.
        inverse_values: DVector<f64>,
    },
}

/// `L = A·diag(w)·Aᵀ` over the columns with positive weight, together with
/// a factorization that applies `L⁺`.
#[derive(Debug, Clone)]
pub struct WeightedGram {
    gram: DMatrix<f64>,
    factor: Factorization,
    rank: usize,
    tolerance_used: f64,
    support: Vec<usize>,
}

impl WeightedGram {
    /// Builds `L` from the positive-weight columns of `a`. Zero weights drop
    /// their column entirely.
    pub fn new(a: &Matrix, weights: &[f64]) -> Result<Self> {
        let (gram, support, ratio) = assemble(a, weights)?;
        if ratio >= WEIGHT_RATIO_FALLBACK {
            if let Some(chol) = gram.clone().cholesky() {
                return Ok(Self::with_cholesky(gram, chol, support));
            }
        }
        Ok(Self::with_eigen(gram, support))
    }

    /// Symmetric `m×m` matrix given directly, e.g. for testing `L⁺`.
    pub fn from_symmetric(l: &Matrix) -> Result<Self> {
        if l.rows() != l.cols() {
            return Err(Error::DimensionMismatch {
                expected: l.rows(),
                found: l.cols(),
            });
        }
        let gram = l.to_dmatrix();
        let support = (0..l.rows()).collect();
        match gram.clone().cholesky() {
            Some(chol) => Ok(Self::with_cholesky(gram, chol, support)),
            None => Ok(Self::with_eigen(gram, support)),
        }
    }

    fn with_cholesky(gram: DMatrix<f64>, chol: Cholesky<f64, Dyn>, support: Vec<usize>) -> Self {
        let rank = gram.nrows();
        Self {
            gram,
            factor: Factorization::Cholesky(chol),
            rank,
            tolerance_used: 0.0,
            support,
        }
    }

    fn with_eigen(gram: DMatrix<f64>, support: Vec<usize>) -> Self {
        let eig = SymmetricEigen::new(gram.clone());
        let lmax = eig.eigenvalues.iter().fold(0.0f64, |a, v| a.max(v.abs()));
        let tol = PINV_RELATIVE_TOLERANCE * lmax;
        let mut rank = 0;
        let inverse_values = eig.eigenvalues.map(|v| {
            if v > tol && v > 0.0 {
                rank += 1;
                1.0 / v
            } else {
                0.0
            }
        });
        Self {
            gram,
            factor: Factorization::Eigen {
                vectors: eig.eigenvectors,
                inverse_values,
            },
            rank,
            tolerance_used: tol,
            support,
        }
    }

    pub fn dim(&self) -> usize {
        self.gram.nrows()
    }

    pub fn rank(&self) -> usize {
        self.rank
    }

    /// Eigenvalue cutoff used by the pseudoinverse; zero for Cholesky.
    pub fn tolerance_used(&self) -> f64 {
        self.tolerance_used
    }

    pub fn is_cholesky(&self) -> bool {
        matches!(self.factor, Factorization::Cholesky(_))
    }

    /// Column indices with positive weight.
    pub fn support(&self) -> &[usize] {
        &self.support
    }

    pub fn entry(&self, r: usize, c: usize) -> f64 {
        self.gram[(r, c)]
    }

    /// `L⁺·c`.
    pub fn pseudo_solve(&self, c: &[f64]) -> Result<Vec<f64>> {
        if c.len() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                found: c.len(),
            });
        }
        if c.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFiniteInput);
        }
        let rhs = DVector::from_column_slice(c);
        let x = match &self.factor {
            Factorization::Cholesky(chol) => chol.solve(&rhs),
            Factorization::Eigen {
                vectors,
                inverse_values,
            } => {
                let coeffs = vectors.tr_mul(&rhs).component_mul(inverse_values);
                vectors * coeffs
            }
        };
        Ok(x.iter().copied().collect())
    }

    /// `uᵀ·L⁺·v`.
    pub fn bilinear_form(&self, u: &[f64], v: &[f64]) -> Result<f64> {
        if u.len() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                found: u.len(),
            });
        }
        if u.iter().any(|x| !x.is_finite()) {
            return Err(Error::NonFiniteInput);
        }
        let x = self.pseudo_solve(v)?;
        Ok(u.iter().zip(&x).map(|(a, b)| a * b).sum())
    }
}

/// Checks `weights` against `a` and returns the support with the ratio of
/// the smallest to the largest positive weight.
fn validate_weights(a: &Matrix, weights: &[f64]) -> Result<(Vec<usize>, f64)> {
    if weights.len() != a.cols() {
        return Err(Error::DimensionMismatch {
            expected: a.cols(),
            found: weights.len(),
        });
    }
    if weights.iter().any(|w| !w.is_finite()) {
        return Err(Error::NonFiniteInput);
    }
    if weights.iter().any(|&w| w < 0.0) {
        return Err(Error::InvalidWeights);
    }
    let support: Vec<usize> = (0..a.cols()).filter(|&i| weights[i] > 0.0).collect();
    if support.is_empty() {
        return Err(Error::InvalidWeights);
    }
    let (wmin, wmax) = support.iter().fold((f64::INFINITY, 0.0f64), |(lo, hi), &i| {
        (lo.min(weights[i]), hi.max(weights[i]))
    });
    Ok((support, wmin / wmax))
}

fn assemble(a: &Matrix, weights: &[f64]) -> Result<(DMatrix<f64>, Vec<usize>, f64)> {
    let (support, ratio) = validate_weights(a, weights)?;
    let m = a.rows();
    let mut gram = DMatrix::<f64>::zeros(m, m);
    for r in 0..m {
        let row_r = a.row(r);
        for c in r..m {
            let row_c = a.row(c);
            let s: f64 = support
                .iter()
                .map(|&i| weights[i] * row_r[i] * row_c[i])
                .sum();
            gram[(r, c)] = s;
            gram[(c, r)] = s;
        }
    }
    Ok((gram, support, ratio))
}

/// Result of a weighted ℓ2 minimization.
#[derive(Debug, Clone)]
pub struct WeightedMinimizer {
    /// The minimizer, `W·Aᵀ·L⁺·b` in exact arithmetic.
    pub q: Vec<f64>,
    /// `Σ qᵢ²/wᵢ` over the support.
    pub energy: f64,
    /// `z = L⁺·b`.
    pub potentials: Vec<f64>,
    /// `bᵀ·L⁺·b`, computed from `z` independently of `q`.
    pub dual_energy: f64,
    /// `‖A·q − b‖∞`.
    pub residual: f64,
}

/// Minimizes `Σ xᵢ²/wᵢ` subject to `Ax = b` and `xᵢ = 0` wherever `wᵢ = 0`.
pub fn weighted_l2_min(a: &Matrix, b: &[f64], weights: &[f64]) -> Result<WeightedMinimizer> {
    if b.len() != a.rows() {
        return Err(Error::DimensionMismatch {
            expected: a.rows(),
            found: b.len(),
        });
    }
    if b.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFiniteInput);
    }
    let (support, _) = validate_weights(a, weights)?;
    solve_qr(a, b, weights, &support)
}

/// Householder QR with column pivoting by remaining column norm, `C·P = Q·R`.
/// Reflectors are stored below the diagonal with an implicit leading one.
struct PivotedQr {
    qr: DMatrix<f64>,
    tau: Vec<f64>,
    perm: Vec<usize>,
}

fn scaled_norm(v: impl Iterator<Item = f64> + Clone) -> f64 {
    let scale = v.clone().fold(0.0f64, |acc, x| acc.max(x.abs()));
    if scale == 0.0 {
        return 0.0;
    }
    scale * libm::sqrt(v.map(|x| (x / scale) * (x / scale)).sum::<f64>())
}

impl PivotedQr {
    fn new(mut qr: DMatrix<f64>) -> Self {
        let (rows, cols) = qr.shape();
        let steps = rows.min(cols);
        let mut perm: Vec<usize> = (0..cols).collect();
        let mut tau = vec![0.0; steps];
        for k in 0..steps {
            let norm_of = |m: &DMatrix<f64>, j: usize| scaled_norm((k..rows).map(move |i| m[(i, j)]));
            let mut best = k;
            let mut best_norm = norm_of(&qr, k);
            for j in k + 1..cols {
                let nj = norm_of(&qr, j);
                if nj > best_norm {
                    best = j;
                    best_norm = nj;
                }
            }
            if best != k {
                qr.swap_columns(k, best);
                perm.swap(k, best);
            }
            if best_norm == 0.0 {
                continue;
            }
            let x0 = qr[(k, k)];
            let beta = if x0 >= 0.0 { -best_norm } else { best_norm };
            tau[k] = (beta - x0) / beta;
            let inv = 1.0 / (x0 - beta);
            for i in k + 1..rows {
                qr[(i, k)] *= inv;
            }
            qr[(k, k)] = beta;
            for j in k + 1..cols {
                let mut s = qr[(k, j)];
                for i in k + 1..rows {
                    s += qr[(i, k)] * qr[(i, j)];
                }
                s *= tau[k];
                qr[(k, j)] -= s;
                for i in k + 1..rows {
                    let v = qr[(i, k)];
                    qr[(i, j)] -= s * v;
                }
            }
        }
        Self { qr, tau, perm }
    }

    fn reflect(&self, k: usize, y: &mut [f64]) {
        let rows = self.qr.nrows();
        let mut s = y[k];
        for i in k + 1..rows {
            s += self.qr[(i, k)] * y[i];
        }
        s *= self.tau[k];
        y[k] -= s;
        for i in k + 1..rows {
            y[i] -= s * self.qr[(i, k)];
        }
    }

    /// `y ← Q·y`.
    fn q_mul(&self, y: &mut [f64]) {
        for k in (0..self.tau.len()).rev() {
            self.reflect(k, y);
        }
    }

    fn r(&self, i: usize, j: usize) -> f64 {
        self.qr[(i, j)]
    }

    /// Number of leading diagonal entries of `R` above `rel·|R₀₀|`.
    fn rank(&self, rel: f64) -> usize {
        let steps = self.tau.len();
        if steps == 0 {
            return 0;
        }
        let cut = rel * self.qr[(0, 0)].abs();
        (0..steps).take_while(|&k| self.qr[(k, k)].abs() > cut && self.qr[(k, k)] != 0.0).count()
    }
}

/// Relative cutoff on `R`'s diagonal for the rank of the unweighted `A_S`.
const RANK_TOLERANCE: f64 = 1e-10;

/// `x = W^½·u` with `u` the minimum-norm solution of `Cᵀ·u = b`,
/// `C = W^½·A_Sᵀ`. Rows of `C` are sorted by decreasing norm before a
/// column-pivoted QR, which keeps the result accurate row by row however
/// graded the weights are.
fn solve_qr(a: &Matrix, b: &[f64], weights: &[f64], support: &[usize]) -> Result<WeightedMinimizer> {
    let m = a.rows();
    let rank = PivotedQr::new(DMatrix::from_fn(support.len(), m, |k, r| a.get(r, support[k])))
        .rank(RANK_TOLERANCE);

    let roots: Vec<f64> = support.iter().map(|&i| libm::sqrt(weights[i])).collect();
    let row_norm = |k: usize| roots[k] * scaled_norm((0..m).map(|r| a.get(r, support[k])));
    let mut order: Vec<usize> = (0..support.len()).collect();
    order.sort_by(|&x, &y| row_norm(y).total_cmp(&row_norm(x)));
    let c = DMatrix::from_fn(support.len(), m, |k, r| {
        let j = order[k];
        roots[j] * a.get(r, support[j])
    });
    let qr = PivotedQr::new(c);

    // R₁ᵀ·y = Pᵀ·b over the leading `rank` equations.
    let mut y = vec![0.0; support.len()];
    for j in 0..rank {
        let mut s = b[qr.perm[j]];
        for k in 0..j {
            s -= qr.r(k, j) * y[k];
        }
        y[j] = s / qr.r(j, j);
    }
    let z = if rank == m {
        // R·Pᵀ·z = y.
        let mut zp = vec![0.0; m];
        for i in (0..m).rev() {
            let mut s = y[i];
            for j in i + 1..m {
                s -= qr.r(i, j) * zp[j];
            }
            zp[i] = s / qr.r(i, i);
        }
        let mut z = vec![0.0; m];
        for (j, &p) in qr.perm.iter().enumerate() {
            z[p] = zp[j];
        }
        z
    } else {
        WeightedGram::new(a, weights)?.pseudo_solve(b)?
    };
    let mut u = y;
    qr.q_mul(&mut u);
    let mut q = vec![0.0; a.cols()];
    for (k, &j) in order.iter().enumerate() {
        q[support[j]] = roots[j] * u[k];
    }
    finish(a, b, weights, support, q, z)
}

fn finish(
    a: &Matrix,
    b: &[f64],
    weights: &[f64],
    support: &[usize],
    q: Vec<f64>,
    z: Vec<f64>,
) -> Result<WeightedMinimizer> {
    let aq = a.mul_vec(&q);
    let residual = aq
        .iter()
        .zip(b)
        .fold(0.0f64, |acc, (x, y)| acc.max((x - y).abs()));
    if !(residual <= FEASIBILITY_TOLERANCE * (1.0 + max_abs(b))) {
        return Err(Error::InfeasibleOnSupport { residual });
    }
    let energy = support.iter().map(|&i| q[i] * q[i] / weights[i]).sum();
    let dual_energy = b.iter().zip(&z).map(|(x, y)| x * y).sum();
    Ok(WeightedMinimizer {
        q,
        energy,
        potentials: z,
        dual_energy,
        residual,
    })
}

/// Minimum Euclidean norm solution of `Ax = b`, i.e. `Aᵀ(AAᵀ)⁻¹b`.
pub fn least_squares_solution(a: &Matrix, b: &[f64]) -> Result<Vec<f64>> {
    let ones = vec![1.0; a.cols()];
    weighted_l2_min(a, b, &ones).map(|m| m.q)
}
