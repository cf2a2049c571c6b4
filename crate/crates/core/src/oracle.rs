//! Exact ℓ1 minimization by enumerating basic solutions.
//!
//! `min ‖x‖₁ s.t. Ax = b` is the linear program `min 1ᵀ(x⁺ + x⁻)` over
//! `[A, −A]·(x⁺, x⁻) = b, x± ≥ 0`. A basis of that program never holds both
//! copies of a column (they are dependent), so each basis is an `m`-subset
//! of the columns of `A` plus a sign per column, and exactly one sign
//! pattern is feasible: the one matching the signs of `A_B⁻¹b`. The
//! enumeration below therefore visits `C(n, m)` column subsets, solves each
//! square system, and keeps the cheapest. It shares nothing with the
//! iterative solvers beyond the instance itself.

use alloc::collections::VecDeque;
use alloc::vec;
use alloc::vec::Vec;

use itertools::Itertools;

use crate::linalg::{l1_norm, max_abs};
use crate::model::{GraphSpec, Instance};
use crate::{Error, Result};

/// Default cap on the number of square systems solved.
pub const ORACLE_BUDGET: u128 = 1_000_000;

/// Tolerance for ties, feasibility and deduplication of optimal vertices.
pub const ORACLE_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct OracleResult {
    pub optimal_value: f64,
    pub optimizer: Vec<f64>,
    /// Exactly one distinct vertex attains the optimum.
    pub unique: bool,
    pub bases_examined: u64,
}

pub(crate) fn binomial(n: usize, k: usize) -> u128 {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    let mut acc: u128 = 1;
    for i in 0..k {
        acc = acc * (n - i) as u128 / (i + 1) as u128;
    }
    acc
}

/// Square solve by Gaussian elimination with partial pivoting. Returns
/// `None` when a pivot falls below `1e-10` times the largest entry.
pub(crate) fn solve_square(mut a: Vec<f64>, mut rhs: Vec<f64>, n: usize) -> Option<Vec<f64>> {
    let scale = max_abs(&a);
    if scale == 0.0 {
        return None;
    }
    let cutoff = 1e-10 * scale;
    for col in 0..n {
        let (pivot_row, pivot_abs) = (col..n)
            .map(|r| (r, a[r * n + col].abs()))
            .fold((col, -1.0), |best, cur| if cur.1 > best.1 { cur } else { best });
        if pivot_abs <= cutoff {
            return None;
        }
        if pivot_row != col {
            for c in 0..n {
                a.swap(col * n + c, pivot_row * n + c);
            }
            rhs.swap(col, pivot_row);
        }
        let pivot = a[col * n + col];
        for r in col + 1..n {
            let factor = a[r * n + col] / pivot;
            if factor != 0.0 {
                for c in col..n {
                    a[r * n + c] -= factor * a[col * n + c];
                }
                rhs[r] -= factor * rhs[col];
            }
        }
    }
    let mut x = vec![0.0; n];
    for r in (0..n).rev() {
        let tail: f64 = (r + 1..n).map(|c| a[r * n + c] * x[c]).sum();
        x[r] = (rhs[r] - tail) / a[r * n + r];
    }
    Some(x)
}

pub fn solve_l1_exact(inst: &Instance) -> Result<OracleResult> {
    solve_l1_exact_with_budget(inst, ORACLE_BUDGET)
}

pub fn solve_l1_exact_with_budget(inst: &Instance, budget: u128) -> Result<OracleResult> {
    let (m, n) = (inst.rows(), inst.cols());
    let bases = binomial(n, m);
    if bases > budget {
        return Err(Error::TooLargeForOracle { bases, budget });
    }
    let a = inst.a();
    let b = inst.b();
    let feas_tol = ORACLE_TOLERANCE * (1.0 + max_abs(b));

    let mut best = f64::INFINITY;
    let mut optima: Vec<(f64, Vec<f64>)> = Vec::new();
    let mut examined = 0u64;

    for cols in (0..n).combinations(m) {
        examined += 1;
        let mut block = Vec::with_capacity(m * m);
        for r in 0..m {
            block.extend(cols.iter().map(|&c| a.get(r, c)));
        }
        let Some(xb) = solve_square(block, b.to_vec(), m) else {
            continue;
        };
        let mut x = vec![0.0; n];
        for (&c, &v) in cols.iter().zip(&xb) {
            x[c] = v;
        }
        if inst.residual(&x) > feas_tol {
            continue;
        }
        let value = l1_norm(&x);
        if value < best - ORACLE_TOLERANCE {
            best = value;
            optima.clear();
            optima.push((value, x));
        } else if value <= best + ORACLE_TOLERANCE {
            best = best.min(value);
            let duplicate = optima.iter().any(|(_, y)| {
                x.iter()
                    .zip(y)
                    .all(|(p, q)| (p - q).abs() <= ORACLE_TOLERANCE)
            });
            if !duplicate {
                optima.push((value, x));
            }
        }
    }

    optima.retain(|(v, _)| *v <= best + ORACLE_TOLERANCE);
    let (optimal_value, optimizer) = optima
        .iter()
        .min_by(|l, r| l.0.total_cmp(&r.0))
        .cloned()
        .ok_or(Error::InfeasibleOnSupport {
            residual: f64::INFINITY,
        })?;
    Ok(OracleResult {
        optimal_value,
        optimizer,
        unique: optima.len() == 1,
        bases_examined: examined,
    })
}

/// Unweighted `s`-`t` distance and the number of shortest paths.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ShortestPath {
    pub length: usize,
    pub count: u64,
}

/// Breadth-first search ignoring edge orientation. Parallel edges count as
/// distinct paths.
pub fn bfs_shortest_path(g: &GraphSpec) -> Option<ShortestPath> {
    let adj = g.adjacency();
    let mut dist = vec![usize::MAX; g.vertex_count];
    let mut count = vec![0u64; g.vertex_count];
    dist[g.source] = 0;
    count[g.source] = 1;
    let mut queue = VecDeque::from([g.source]);
    while let Some(u) = queue.pop_front() {
        for &(v, _) in &adj[u] {
            if dist[v] == usize::MAX {
                dist[v] = dist[u] + 1;
                queue.push_back(v);
            }
            if dist[v] == dist[u] + 1 {
                count[v] = count[v].saturating_add(count[u]);
            }
        }
    }
    (dist[g.sink] != usize::MAX).then(|| ShortestPath {
        length: dist[g.sink],
        count: count[g.sink],
    })
}
