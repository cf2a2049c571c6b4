//! Basis pursuit instances `(A, b)`: explicit, random, and graph-derived.

use alloc::collections::VecDeque;
use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use rand::seq::index;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::linalg::Matrix;
use crate::{Error, Result};

/// Where an instance came from.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum Provenance {
    Explicit,
    RandomGaussian { seed: u64 },
    RandomInteger { seed: u64, bound: i32 },
    Graph(GraphSpec),
}

/// Undirected graph with an orientation per edge and an `s`-`t` pair.
#[derive(Debug, Clone, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct GraphSpec {
    pub vertex_count: usize,
    /// `(tail, head)` pairs.
    pub edges: Vec<(usize, usize)>,
    pub source: usize,
    pub sink: usize,
}

impl GraphSpec {
    pub fn validate(&self) -> Result<()> {
        if self.source >= self.vertex_count || self.sink >= self.vertex_count {
            return Err(Error::InvalidGraph("terminal out of range".into()));
        }
        if self.source == self.sink {
            return Err(Error::InvalidGraph("source equals sink".into()));
        }
        for (e, &(u, v)) in self.edges.iter().enumerate() {
            if u >= self.vertex_count || v >= self.vertex_count {
                return Err(Error::InvalidGraph(format!("edge {e} out of range")));
            }
            if u == v {
                return Err(Error::InvalidGraph(format!("edge {e} is a self-loop")));
            }
        }
        if !self.connects(self.source, self.sink) {
            return Err(Error::DisconnectedInstance);
        }
        Ok(())
    }

    /// Neighbor lists with the incident edge index, ignoring orientation.
    pub fn adjacency(&self) -> Vec<Vec<(usize, usize)>> {
        let mut adj = vec![Vec::new(); self.vertex_count];
        for (e, &(u, v)) in self.edges.iter().enumerate() {
            adj[u].push((v, e));
            adj[v].push((u, e));
        }
        adj
    }

    fn connects(&self, from: usize, to: usize) -> bool {
        let adj = self.adjacency();
        let mut seen = vec![false; self.vertex_count];
        let mut queue = VecDeque::from([from]);
        seen[from] = true;
        while let Some(u) = queue.pop_front() {
            if u == to {
                return true;
            }
            for &(v, _) in &adj[u] {
                if !seen[v] {
                    seen[v] = true;
                    queue.push_back(v);
                }
            }
        }
        false
    }

    pub fn edge_label(&self, e: usize) -> String {
        let (u, v) = self.edges[e];
        format!("u{u}-u{v}")
    }
}

/// An affine subspace `{x : Ax = b}` with `A` of full row rank.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Instance {
    a: Matrix,
    b: Vec<f64>,
    pub provenance: Provenance,
    pub column_names: Option<Vec<String>>,
}

impl Instance {
    /// Checks dimensions and full row rank. Full row rank makes every `b`
    /// reachable.
    pub fn new(a: Matrix, b: Vec<f64>) -> Result<Self> {
        Self::with_provenance(a, b, Provenance::Explicit)
    }

    pub fn with_provenance(a: Matrix, b: Vec<f64>, provenance: Provenance) -> Result<Self> {
        if b.len() != a.rows() {
            return Err(Error::DimensionMismatch {
                expected: a.rows(),
                found: b.len(),
            });
        }
        if b.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFiniteInput);
        }
        let rank = a.rank();
        if rank != a.rows() {
            return Err(Error::RankDeficient {
                rank,
                rows: a.rows(),
            });
        }
        Ok(Self {
            a,
            b,
            provenance,
            column_names: None,
        })
    }

    pub fn with_column_names(mut self, names: Vec<String>) -> Result<Self> {
        if names.len() != self.a.cols() {
            return Err(Error::DimensionMismatch {
                expected: self.a.cols(),
                found: names.len(),
            });
        }
        self.column_names = Some(names);
        Ok(self)
    }

    pub fn a(&self) -> &Matrix {
        &self.a
    }

    pub fn b(&self) -> &[f64] {
        &self.b
    }

    pub fn rows(&self) -> usize {
        self.a.rows()
    }

    pub fn cols(&self) -> usize {
        self.a.cols()
    }

    pub fn column_index(&self, name: &str) -> Option<usize> {
        self.column_names
            .as_ref()?
            .iter()
            .position(|n| n == name)
    }

    /// `‖A·x − b‖∞`.
    pub fn residual(&self, x: &[f64]) -> f64 {
        self.a
            .mul_vec(x)
            .iter()
            .zip(&self.b)
            .fold(0.0f64, |acc, (l, r)| acc.max((l - r).abs()))
    }

    pub fn graph(&self) -> Option<&GraphSpec> {
        match &self.provenance {
            Provenance::Graph(g) => Some(g),
            _ => None,
        }
    }
}

/// Signed incidence matrix (`−1` at the tail, `+1` at the head of each edge)
/// with the last vertex row dropped, and `b = e_t − e_s` restricted likewise.
pub fn incidence_matrix(g: &GraphSpec) -> Matrix {
    let mut a = Matrix::zeros(g.vertex_count, g.edges.len());
    for (e, &(u, v)) in g.edges.iter().enumerate() {
        a.set(u, e, -1.0);
        a.set(v, e, 1.0);
    }
    a
}

pub fn build_graph_instance(g: &GraphSpec) -> Result<Instance> {
    g.validate()?;
    let full = incidence_matrix(g);
    let keep = g.vertex_count - 1;
    let data: Vec<f64> = full.as_slice()[..keep * g.edges.len()].to_vec();
    let a = Matrix::new(keep, g.edges.len(), data)?;
    let mut b = vec![0.0; g.vertex_count];
    b[g.sink] += 1.0;
    b[g.source] -= 1.0;
    b.truncate(keep);
    let names = (0..g.edges.len()).map(|e| g.edge_label(e)).collect();
    Instance::with_provenance(a, b, Provenance::Graph(g.clone()))?.with_column_names(names)
}

/// The eight-vertex graph on which IRLS loses the optimal edge `u3-u4`.
pub fn appendix_a_graph() -> GraphSpec {
    GraphSpec {
        vertex_count: 8,
        edges: vec![
            (0, 1),
            (1, 2),
            (2, 3),
            (3, 4),
            (4, 5),
            (5, 6),
            (6, 7),
            (0, 4),
            (3, 7),
        ],
        source: 0,
        sink: 7,
    }
}

/// The feasible start on [`appendix_a_graph`]: ¾ on both long paths, ¼ on
/// the two shortcut edges `u0-u4` and `u3-u7`, ½ on `u3-u4`. Every entry is
/// positive under the low-to-high orientation.
pub fn appendix_a_state() -> (Instance, Vec<f64>) {
    let inst = build_graph_instance(&appendix_a_graph()).expect("fixed graph is valid");
    let y0 = vec![0.75, 0.75, 0.75, 0.5, 0.75, 0.75, 0.75, 0.25, 0.25];
    (inst, y0)
}

fn planted_vector<R: Rng>(rng: &mut R, n: usize, sparsity: usize) -> Vec<f64> {
    let mut planted = vec![0.0; n];
    for i in index::sample(rng, n, sparsity) {
        let magnitude = rng.gen_range(0.5..=2.0);
        planted[i] = if rng.gen_bool(0.5) { magnitude } else { -magnitude };
    }
    planted
}

fn check_shape(m: usize, n: usize, sparsity: usize) -> Result<()> {
    if m == 0 || m >= n || sparsity > m {
        return Err(Error::InvalidParameters(format!(
            "need sparsity <= m < n, got m={m} n={n} sparsity={sparsity}"
        )));
    }
    Ok(())
}

/// Gaussian `A`, `sparsity`-sparse planted signal, `b = A·planted`.
pub fn random_instance(
    m: usize,
    n: usize,
    sparsity: usize,
    seed: u64,
) -> Result<(Instance, Vec<f64>)> {
    check_shape(m, n, sparsity)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let data: Vec<f64> = (0..m * n).map(|_| rng.sample(StandardNormal)).collect();
    let a = Matrix::new(m, n, data)?;
    let planted = planted_vector(&mut rng, n, sparsity);
    let b = a.mul_vec(&planted);
    let inst = Instance::with_provenance(a, b, Provenance::RandomGaussian { seed })?;
    Ok((inst, planted))
}

/// Like [`random_instance`] but with integer entries drawn uniformly from
/// `[-bound, bound]` and no all-zero column. Fails with `RankDeficient`
/// more often than the Gaussian variant; callers retry with another seed.
pub fn random_integer_instance(
    m: usize,
    n: usize,
    sparsity: usize,
    bound: i32,
    seed: u64,
) -> Result<(Instance, Vec<f64>)> {
    check_shape(m, n, sparsity)?;
    if bound < 1 {
        return Err(Error::InvalidParameters(format!("bound {bound} < 1")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut data: Vec<f64> = (0..m * n)
        .map(|_| f64::from(rng.gen_range(-bound..=bound)))
        .collect();
    // A zero column is a variable absent from every constraint; redraw it.
    for c in 0..n {
        while (0..m).all(|r| data[r * n + c] == 0.0) {
            for r in 0..m {
                data[r * n + c] = f64::from(rng.gen_range(-bound..=bound));
            }
        }
    }
    let a = Matrix::new(m, n, data)?;
    let planted = planted_vector(&mut rng, n, sparsity);
    let b = a.mul_vec(&planted);
    let inst = Instance::with_provenance(a, b, Provenance::RandomInteger { seed, bound })?;
    Ok((inst, planted))
}

/// Random connected graph: a random spanning tree plus `extra_edges` chords,
/// every edge oriented from lower to higher index, `s = 0`, `t = V − 1`.
pub fn random_graph(vertex_count: usize, extra_edges: usize, seed: u64) -> Result<GraphSpec> {
    if vertex_count < 2 {
        return Err(Error::InvalidParameters("need at least two vertices".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut edges: Vec<(usize, usize)> = Vec::new();
    for v in 1..vertex_count {
        let u = rng.gen_range(0..v);
        edges.push((u, v));
    }
    let max_edges = vertex_count * (vertex_count - 1) / 2;
    let target = (edges.len() + extra_edges).min(max_edges);
    while edges.len() < target {
        let u = rng.gen_range(0..vertex_count);
        let v = rng.gen_range(0..vertex_count);
        if u == v {
            continue;
        }
        let e = (u.min(v), u.max(v));
        if !edges.contains(&e) {
            edges.push(e);
        }
    }
    Ok(GraphSpec {
        vertex_count,
        edges,
        source: 0,
        sink: vertex_count - 1,
    })
}
