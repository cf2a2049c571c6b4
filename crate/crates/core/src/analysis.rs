//! Potentials and per-step certificates for the damped dynamics.
//!
//! Two potentials drive the convergence argument:
//!
//! * the energy `E(k) = Σ qᵢ²/wᵢ`, the optimal weighted ℓ2 value at step k,
//!   which never exceeds `‖w‖₁` while `(y, w)` stays in `{|y| ≤ w}`;
//! * the barrier `B(k) = Σ |x*ᵢ|·ln wᵢ`, which grows whenever the energy
//!   stays above the optimum.
//!
//! The constant `α` bounds `|aᵢᵀ L⁻¹ aⱼ|·wᵢ` uniformly in `w`; it sets the
//! admissible step size.

use alloc::vec;
use alloc::vec::Vec;

use itertools::Itertools;

use crate::linalg::{l1_norm, Matrix};
use crate::oracle::{binomial, solve_square};
use crate::{Error, Result};

/// Cap on the number of square submatrices visited by [`compute_alpha`].
pub const ALPHA_BUDGET: u128 = 10_000_000;

/// Slack allowed on each lemma clause.
pub const CHECK_TOLERANCE: f64 = 1e-9;

/// `Σ qᵢ²/wᵢ` over the support of `q`.
pub fn energy(q: &[f64], w: &[f64]) -> Result<f64> {
    if q.len() != w.len() {
        return Err(Error::DimensionMismatch {
            expected: q.len(),
            found: w.len(),
        });
    }
    let mut total = 0.0;
    for (i, (&qi, &wi)) in q.iter().zip(w).enumerate() {
        if qi == 0.0 {
            continue;
        }
        if wi <= 0.0 {
            return Err(Error::ZeroWeightNonzeroFlow { index: i });
        }
        total += qi * qi / wi;
    }
    Ok(total)
}

/// `Σ |x*ᵢ|·ln wᵢ`. Taking `|x*|` stands in for flipping the columns of `A`
/// where `x*` is negative; the weights are sign-blind.
pub fn barrier(x_star: &[f64], w: &[f64]) -> Result<f64> {
    if x_star.len() != w.len() {
        return Err(Error::DimensionMismatch {
            expected: x_star.len(),
            found: w.len(),
        });
    }
    let mut total = 0.0;
    for (i, (&x, &wi)) in x_star.iter().zip(w).enumerate() {
        if !(wi > 0.0) {
            return Err(Error::NonPositiveWeight { index: i });
        }
        if x != 0.0 {
            total += x.abs() * libm::log(wi);
        }
    }
    Ok(total)
}

/// `J(y, w) = Σ yᵢ²/wᵢ + Σ wᵢ` with `0²/0 = 0` and `y²/0 = +∞` for `y ≠ 0`.
pub fn j_value(y: &[f64], w: &[f64]) -> f64 {
    let mut total = 0.0;
    for (&yi, &wi) in y.iter().zip(w) {
        if wi == 0.0 {
            if yi != 0.0 {
                return f64::INFINITY;
            }
        } else {
            total += yi * yi / wi;
        }
        total += wi;
    }
    total
}

/// `Σ √(yᵢ² + η²)`, the objective smoothed by `η`.
pub fn smoothed_objective(y: &[f64], eta: f64) -> f64 {
    y.iter().map(|v| libm::hypot(*v, eta)).sum()
}

/// Largest `|det|` over all square submatrices for integer `A`; otherwise
/// the largest `1/|vᵢ|` over every representation `A_C·v = aⱼ` of a column
/// by an independent column set `C`, computed from invertible square blocks
/// `A_{R,C}`. Both bound `|aᵢᵀ L⁻¹ aⱼ|·wᵢ` for every positive `w`.
pub fn compute_alpha(a: &Matrix) -> Result<f64> {
    compute_alpha_with_budget(a, ALPHA_BUDGET)
}

pub fn compute_alpha_with_budget(a: &Matrix, budget: u128) -> Result<f64> {
    let (m, n) = (a.rows(), a.cols());
    let subsets: u128 = (1..=m.min(n)).map(|k| binomial(m, k) * binomial(n, k)).sum();
    if subsets > budget {
        return Err(Error::TooLargeForExactAlpha { subsets, budget });
    }
    if a.is_integer() {
        Ok(max_subdeterminant(a) as f64)
    } else {
        Ok(representation_bound(a))
    }
}

fn max_subdeterminant(a: &Matrix) -> i128 {
    let (m, n) = (a.rows(), a.cols());
    let mut best: i128 = 0;
    for k in 1..=m.min(n) {
        for rows in (0..m).combinations(k) {
            for cols in (0..n).combinations(k) {
                let block: Vec<i128> = rows
                    .iter()
                    .flat_map(|&r| cols.iter().map(move |&c| a.get(r, c) as i128))
                    .collect();
                best = best.max(bareiss_determinant(block, k).abs());
            }
        }
    }
    best
}

/// Fraction-free elimination; every intermediate is a minor, so the
/// arithmetic is exact.
fn bareiss_determinant(mut m: Vec<i128>, n: usize) -> i128 {
    let mut sign = 1;
    let mut prev = 1i128;
    for k in 0..n {
        if m[k * n + k] == 0 {
            let Some(swap) = (k + 1..n).find(|&r| m[r * n + k] != 0) else {
                return 0;
            };
            for c in 0..n {
                m.swap(k * n + c, swap * n + c);
            }
            sign = -sign;
        }
        for i in k + 1..n {
            for j in k + 1..n {
                m[i * n + j] = (m[i * n + j] * m[k * n + k] - m[i * n + k] * m[k * n + j]) / prev;
            }
        }
        prev = m[k * n + k];
    }
    sign * m[(n - 1) * n + (n - 1)]
}

fn representation_bound(a: &Matrix) -> f64 {
    let (m, n) = (a.rows(), a.cols());
    let scale = crate::linalg::max_abs(a.as_slice()).max(1.0);
    // aᵢ = 1·aᵢ always qualifies.
    let mut alpha: f64 = 1.0;
    for k in 1..=m.min(n) {
        for rows in (0..m).combinations(k) {
            for cols in (0..n).combinations(k) {
                let block: Vec<f64> = rows
                    .iter()
                    .flat_map(|&r| cols.iter().map(move |&c| a.get(r, c)))
                    .collect();
                for j in 0..n {
                    let rhs: Vec<f64> = rows.iter().map(|&r| a.get(r, j)).collect();
                    let Some(v) = solve_square(block.clone(), rhs, k) else {
                        break;
                    };
                    let consistent = (0..m).all(|r| {
                        let lhs: f64 = cols.iter().zip(&v).map(|(&c, vi)| a.get(r, c) * vi).sum();
                        (lhs - a.get(r, j)).abs() <= 1e-10 * scale
                    });
                    if !consistent {
                        continue;
                    }
                    for vi in &v {
                        if vi.abs() > 1e-12 {
                            alpha = alpha.max(1.0 / vi.abs());
                        }
                    }
                }
            }
        }
    }
    alpha
}

/// Potentials of one state `(y, w)` and its minimizer `q`.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct PotentialReport {
    pub k: u64,
    pub l1_w: f64,
    pub l1_y: f64,
    pub energy_e: f64,
    /// Needs an optimum `x*`; absent otherwise.
    #[cfg_attr(feature = "serde", serde(default, skip_serializing_if = "Option::is_none"))]
    pub barrier_b: Option<f64>,
    /// `maxᵢ |qᵢ|/wᵢ` over positive weights.
    pub max_ratio: f64,
    /// `J(y, w)`; may be `+∞`.
    #[cfg_attr(feature = "serde", serde(with = "crate::trace::extended_f64"))]
    pub j_value: f64,
}

impl PotentialReport {
    pub fn new(k: u64, y: &[f64], w: &[f64], q: &[f64], energy_e: f64, x_star: Option<&[f64]>) -> Self {
        let max_ratio = q
            .iter()
            .zip(w)
            .filter(|(_, &wi)| wi > 0.0)
            .fold(0.0f64, |acc, (qi, wi)| acc.max(qi.abs() / wi));
        // Zero weights only occur under IRLS, where the barrier is undefined.
        let barrier_b = x_star.and_then(|x| barrier(x, w).ok());
        Self {
            k,
            l1_w: l1_norm(w),
            l1_y: l1_norm(y),
            energy_e,
            barrier_b,
            max_ratio,
            j_value: j_value(y, w),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum Lemma {
    NormDrop,
    Barrier,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum Clause {
    /// `‖w^(k+1)‖₁ ≤ ‖w^(k)‖₁`.
    Monotone,
    /// `‖w^(k+1)‖₁ ≤ (1 − hε/8)·‖w^(k)‖₁`, when `‖w^(k)‖₁ > (1 + ε/3)·E(k)`.
    MultiplicativeDrop,
    /// `B(k+1) ≥ B(k) + h·(E(k) − (1 + ε/10)·‖x*‖₁)`.
    BarrierGrowth,
}

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct ClauseMargin {
    pub clause: Clause,
    /// Slack of the inequality; negative means violated.
    pub margin: f64,
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct CheckResult {
    pub lemma: Lemma,
    /// Index of the earlier of the two reports.
    pub k: u64,
    pub passed: bool,
    pub margins: Vec<ClauseMargin>,
}

impl CheckResult {
    fn from_margins(lemma: Lemma, k: u64, margins: Vec<ClauseMargin>) -> Self {
        let passed = margins.iter().all(|m| m.margin >= -CHECK_TOLERANCE);
        Self {
            lemma,
            k,
            passed,
            margins,
        }
    }

    pub fn min_margin(&self) -> f64 {
        self.margins
            .iter()
            .map(|m| m.margin)
            .fold(f64::INFINITY, f64::min)
    }

    pub fn margin(&self, clause: Clause) -> Option<f64> {
        self.margins
            .iter()
            .find(|m| m.clause == clause)
            .map(|m| m.margin)
    }
}

pub fn check_lemma_norm_drop(
    report_k: &PotentialReport,
    report_k1: &PotentialReport,
    h: f64,
    eps: f64,
) -> CheckResult {
    let mut margins = vec![ClauseMargin {
        clause: Clause::Monotone,
        margin: report_k.l1_w - report_k1.l1_w,
    }];
    if report_k.l1_w > (1.0 + eps / 3.0) * report_k.energy_e {
        margins.push(ClauseMargin {
            clause: Clause::MultiplicativeDrop,
            margin: (1.0 - h * eps / 8.0) * report_k.l1_w - report_k1.l1_w,
        });
    }
    CheckResult::from_margins(Lemma::NormDrop, report_k.k, margins)
}

/// Fails with `StepSizeHypothesisViolated` when `h > ε/(40·(nα)²)`, the
/// regime where the barrier inequality is not claimed.
pub fn check_lemma_barrier(
    report_k: &PotentialReport,
    report_k1: &PotentialReport,
    h: f64,
    eps: f64,
    x_star: &[f64],
    alpha: f64,
) -> Result<CheckResult> {
    let n = x_star.len() as f64;
    let bound = eps / (40.0 * n * n * alpha * alpha);
    if h > bound * (1.0 + 1e-12) {
        return Err(Error::StepSizeHypothesisViolated { h, bound });
    }
    let (Some(b0), Some(b1)) = (report_k.barrier_b, report_k1.barrier_b) else {
        return Err(Error::InvalidParameters(
            "barrier check needs reports computed with x*".into(),
        ));
    };
    let x_l1 = l1_norm(x_star);
    let margin = b1 - b0 - h * (report_k.energy_e - (1.0 + eps / 10.0) * x_l1);
    Ok(CheckResult::from_margins(
        Lemma::Barrier,
        report_k.k,
        vec![ClauseMargin {
            clause: Clause::BarrierGrowth,
            margin,
        }],
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use core::f64::consts::E;

    fn report(k: u64, l1_w: f64, energy_e: f64, barrier_b: Option<f64>) -> PotentialReport {
        PotentialReport {
            k,
            l1_w,
            l1_y: l1_w,
            energy_e,
            barrier_b,
            max_ratio: 1.0,
            j_value: 2.0 * l1_w,
        }
    }

    #[test]
    fn energy_examples() {
        assert_eq!(energy(&[1.0], &[1.0]).unwrap(), 1.0);
        assert_relative_eq!(energy(&[0.25, 0.75], &[1.0, 3.0]).unwrap(), 0.25);
        assert_eq!(energy(&[0.0, 1.0], &[0.0, 1.0]).unwrap(), 1.0);
        assert_eq!(
            energy(&[1.0, 1.0], &[0.0, 1.0]),
            Err(Error::ZeroWeightNonzeroFlow { index: 0 })
        );
    }

    #[test]
    fn barrier_examples() {
        assert_eq!(barrier(&[3.0, 2.0], &[1.0, 1.0]).unwrap(), 0.0);
        assert_relative_eq!(barrier(&[1.0, 0.0], &[E, 5.0]).unwrap(), 1.0);
        assert_relative_eq!(barrier(&[2.0, 1.0], &[E * E, E]).unwrap(), 5.0, epsilon = 1e-14);
        assert_eq!(
            barrier(&[1.0, 0.0], &[1.0, 0.0]),
            Err(Error::NonPositiveWeight { index: 1 })
        );
    }

    #[test]
    fn j_value_conventions() {
        assert_eq!(j_value(&[1.0, -2.0], &[1.0, 2.0]), 6.0);
        assert_eq!(j_value(&[0.0], &[0.0]), 0.0);
        assert_eq!(j_value(&[1.0], &[0.0]), f64::INFINITY);
    }

    #[test]
    fn alpha_examples() {
        assert_eq!(compute_alpha(&Matrix::identity(2)).unwrap(), 1.0);
        let a = Matrix::from_rows(&[vec![1.0, 2.0], vec![3.0, 4.0]]).unwrap();
        // 1×1 minors 1, 2, 3, 4; the 2×2 determinant is −2.
        assert_eq!(compute_alpha(&a).unwrap(), 4.0);
    }

    #[test]
    fn bareiss_matches_cofactor_expansion() {
        assert_eq!(bareiss_determinant(vec![0, 1, 1, 0], 2), -1);
        assert_eq!(bareiss_determinant(vec![2, 0, 1, 1, 3, 2, 1, 1, 2], 3), 6);
        assert_eq!(bareiss_determinant(vec![0, 0, 1, 0, 1, 0, 1, 0, 0], 3), -1);
        assert_eq!(bareiss_determinant(vec![1, 2, 2, 4], 2), 0);
    }

    #[test]
    fn non_integer_alpha_covers_single_row() {
        // A = [1, 2.5]: L = w₁ + 6.25·w₂ and a₁a₂w₁/L → 2.5 as w₂ → 0.
        let a = Matrix::from_rows(&[vec![1.0, 2.5]]).unwrap();
        assert_relative_eq!(compute_alpha(&a).unwrap(), 2.5, epsilon = 1e-12);
        let a = Matrix::from_rows(&[vec![0.5, 0.5]]).unwrap();
        assert_relative_eq!(compute_alpha(&a).unwrap(), 1.0, epsilon = 1e-12);
    }

    #[test]
    fn alpha_budget() {
        let a = Matrix::zeros(6, 30);
        assert!(matches!(
            compute_alpha_with_budget(&a, 1000),
            Err(Error::TooLargeForExactAlpha { .. })
        ));
    }

    #[test]
    fn norm_drop_at_fixed_point() {
        let r = report(0, 3.0, 3.0, None);
        let c = check_lemma_norm_drop(&r, &report(1, 3.0, 3.0, None), 0.1, 0.1);
        assert!(c.passed);
        assert_eq!(c.margin(Clause::Monotone), Some(0.0));
        assert_eq!(c.margin(Clause::MultiplicativeDrop), None);
    }

    #[test]
    fn norm_drop_detects_violations() {
        let c = check_lemma_norm_drop(&report(0, 3.0, 3.0, None), &report(1, 3.1, 3.0, None), 0.1, 0.1);
        assert!(!c.passed);
        // Energy well below ‖w‖₁ demands the multiplicative drop.
        let c = check_lemma_norm_drop(&report(0, 4.0, 3.0, None), &report(1, 3.999, 3.0, None), 0.5, 0.1);
        assert!(c.margin(Clause::Monotone).unwrap() > 0.0);
        assert!(c.margin(Clause::MultiplicativeDrop).unwrap() < 0.0);
        assert!(!c.passed);
    }

    #[test]
    fn barrier_check_hypothesis_and_margin() {
        let x = [1.0, 0.0];
        let r0 = report(0, 2.0, 1.0, Some(0.0));
        let r1 = report(1, 2.0, 1.0, Some(0.0));
        // h above ε/(40·n²·α²) = 0.1/160
        assert!(matches!(
            check_lemma_barrier(&r0, &r1, 1e-3, 0.1, &x, 1.0),
            Err(Error::StepSizeHypothesisViolated { .. })
        ));
        let h = 0.1 / 160.0;
        let c = check_lemma_barrier(&r0, &r1, h, 0.1, &x, 1.0).unwrap();
        assert!(c.passed);
        assert_relative_eq!(c.min_margin(), h * 0.01);
        let bad = report(1, 2.0, 1.0, Some(-1.0));
        assert!(!check_lemma_barrier(&r0, &bad, h, 0.1, &x, 1.0).unwrap().passed);
    }

    #[test]
    fn log_inequality_on_grid() {
        for i in -500..=500 {
            let x = f64::from(i) / 1000.0;
            let l = libm::log1p(x);
            assert!(x - x * x <= l + 1e-16, "lower bound fails at {x}");
            assert!(l <= x + 1e-16, "upper bound fails at {x}");
        }
    }

    #[test]
    fn smoothed_objective_sandwich() {
        let y = [0.3, -1.2, 0.0];
        let eta = 0.01;
        let s = smoothed_objective(&y, eta);
        assert!(l1_norm(&y) <= s && s <= l1_norm(&y) + 3.0 * eta);
    }
}
