//! Bethe Hessian community detection.
//!
//! The Bethe Hessian at inverse weight `eta` is
//! `H(eta) = (eta^2 - 1) I + D - eta A`, with `D` the degree matrix and `A`
//! the adjacency matrix.  At `eta = +/- sqrt(mean degree)` its nonpositive
//! eigenvalues correspond one-to-one with detectable communities:
//! assortative structure shows up below zero at `+eta`, disassortative
//! structure at `-eta`.  The detector counts both sides, stacks the
//! associated eigenvectors, and clusters the rows with k-means.
//!
//! The operator is matrix-free: a matvec walks the adjacency lists, so
//! nothing dense is formed for large graphs.

mod kmeans;
mod lanczos;

pub use kmeans::{kmeans, KmeansFit, KmeansOptions};
pub use lanczos::{
    count_below, dense_matrix, lowest_eigenpairs, sturm_count_leq, DenseOp, EigenPairs, SymOp,
    DENSE_INERTIA_CUTOFF, RESIDUAL_TOL,
};

use crate::error::{Error, Result};
use crate::graphgen::SparseGraph;
use crate::partition::Partition;
use crate::rng;

/// Margin added to zero when classifying eigenvalues as nonpositive on the
/// iterative path, relative to the operator's diagonal scale.  Informative
/// eigenvalues sit well below zero; this only guards against converged
/// rounding noise on eigenvalues that are exactly zero in exact arithmetic.
pub const NONPOSITIVE_MARGIN: f64 = 1e-10;

/// Matrix-free Bethe Hessian `(eta^2 - 1) I + D - eta A`.
pub struct BetheHessian<'g> {
    graph: &'g SparseGraph,
    eta: f64,
    shift: f64,
}

impl<'g> BetheHessian<'g> {
    pub fn new(graph: &'g SparseGraph, eta: f64) -> Self {
        BetheHessian { graph, eta, shift: eta * eta - 1.0 }
    }

    pub fn eta(&self) -> f64 {
        self.eta
    }

    /// Tolerance below which an eigenvalue counts as nonpositive.
    pub fn zero_tolerance(&self) -> f64 {
        NONPOSITIVE_MARGIN * (self.shift + self.graph.max_degree() as f64)
    }
}

impl SymOp for BetheHessian<'_> {
    fn dim(&self) -> usize {
        self.graph.n()
    }

    fn apply(&self, x: &[f64], y: &mut [f64]) {
        for i in 0..self.graph.n() {
            let mut acc = 0.0;
            for &j in self.graph.neighbors(i) {
                acc += x[j as usize];
            }
            y[i] = (self.shift + self.graph.degree(i) as f64) * x[i] - self.eta * acc;
        }
    }

    fn norm_bound(&self) -> f64 {
        let max_deg = self.graph.max_degree() as f64;
        (self.shift + max_deg).abs() + self.eta.abs() * max_deg
    }
}

/// Output of [`detect_bh`]: the partition plus the quantities that determine
/// the estimated number of communities.
#[derive(Debug, Clone)]
pub struct BhDetection {
    pub partition: Partition,
    /// Nonpositive eigenvalues of `H(+eta)` (assortative directions,
    /// including the mean-degree mode once it crosses).
    pub q_plus: usize,
    /// Nonpositive eigenvalues of `H(-eta)` (disassortative directions).
    pub q_minus: usize,
    pub eta: f64,
    /// Set when the graph is too sparse or featureless to embed, in which
    /// case the partition is the single-community one.
    pub trivial_reason: Option<String>,
}

impl BhDetection {
    /// Estimated number of communities.
    pub fn q(&self) -> usize {
        self.partition.q() as usize
    }
}

fn trivial(graph: &SparseGraph, eta: f64, reason: &str) -> BhDetection {
    BhDetection {
        partition: Partition::trivial(graph.n()),
        q_plus: 0,
        q_minus: 0,
        eta,
        trivial_reason: Some(reason.to_string()),
    }
}

/// Stacks eigenvectors as columns into a row-major `n x q` embedding.
fn stack_embedding(n: usize, vector_sets: &[&[Vec<f64>]]) -> Vec<f64> {
    let q: usize = vector_sets.iter().map(|s| s.len()).sum();
    let mut points = vec![0.0; n * q];
    let mut col = 0;
    for set in vector_sets {
        for v in set.iter() {
            for i in 0..n {
                points[i * q + col] = v[i];
            }
            col += 1;
        }
    }
    points
}

/// Full spectral pipeline: estimate the number of communities from the
/// nonpositive Bethe Hessian eigenvalues at both signs of `eta`, then
/// cluster the stacked eigenvector embedding.
///
/// Graphs with mean degree at or below 1 (or with no informative
/// eigenvalue at all) return the single-community partition with a
/// diagnostic reason instead of an error.
pub fn detect_bh(graph: &SparseGraph, seed: u64) -> Result<BhDetection> {
    let n = graph.n();
    if n == 0 {
        return Err(Error::InvalidParameter("empty graph".into()));
    }
    let mean_degree = graph.average_degree();
    let eta = mean_degree.sqrt();
    if mean_degree <= 1.0 + 1e-12 {
        return Ok(trivial(graph, eta, "mean degree at or below 1"));
    }
    let plus = BetheHessian::new(graph, eta);
    let minus = BetheHessian::new(graph, -eta);
    let q_plus = count_below(&plus, plus.zero_tolerance(), rng::mix(seed, &[1]))?;
    let q_minus = count_below(&minus, minus.zero_tolerance(), rng::mix(seed, &[2]))?;
    let q = q_plus + q_minus;
    if q == 0 {
        return Ok(trivial(graph, eta, "no nonpositive Bethe Hessian eigenvalues"));
    }
    if q == 1 {
        // A single informative direction is the mean-degree mode; there is
        // nothing to cluster.
        return Ok(BhDetection {
            partition: Partition::trivial(n),
            q_plus,
            q_minus,
            eta,
            trivial_reason: None,
        });
    }
    let pairs_plus = lowest_eigenpairs(&plus, q_plus, rng::mix(seed, &[3]))?;
    let pairs_minus = lowest_eigenpairs(&minus, q_minus, rng::mix(seed, &[4]))?;
    let points = stack_embedding(n, &[&pairs_plus.vectors, &pairs_minus.vectors]);
    let fit = kmeans(&points, q, q, rng::mix(seed, &[5]), &KmeansOptions::default())?;
    Ok(BhDetection {
        partition: Partition::new(fit.labels, q as u32)?,
        q_plus,
        q_minus,
        eta,
        trivial_reason: None,
    })
}

/// Clusters the graph into exactly `q` groups using the `q` most negative
/// Bethe Hessian eigenvectors across both signs of `eta` (ties between
/// signs break toward `+eta`).  Used to supply fixed-`q` candidate
/// partitions to order-selection criteria.
pub fn bh_candidate(graph: &SparseGraph, q: usize, seed: u64) -> Result<Partition> {
    let n = graph.n();
    if q == 0 || q > n {
        return Err(Error::InvalidParameter(format!("q = {q} with {n} nodes")));
    }
    if q == 1 {
        return Ok(Partition::trivial(n));
    }
    let eta = graph.average_degree().sqrt();
    if eta <= 1.0 {
        return Ok(Partition::trivial(n));
    }
    let plus = BetheHessian::new(graph, eta);
    let minus = BetheHessian::new(graph, -eta);
    let k = q.min(n);
    let pairs_plus = lowest_eigenpairs(&plus, k, rng::mix(seed, &[6]))?;
    let pairs_minus = lowest_eigenpairs(&minus, k, rng::mix(seed, &[7]))?;
    // Merge ascending by eigenvalue; tag 0 = +eta wins ties.
    let mut tagged: Vec<(f64, u8, usize)> = pairs_plus
        .values
        .iter()
        .enumerate()
        .map(|(i, &v)| (v, 0u8, i))
        .chain(pairs_minus.values.iter().enumerate().map(|(i, &v)| (v, 1u8, i)))
        .collect();
    tagged.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
    let chosen: Vec<&Vec<f64>> = tagged
        .iter()
        .take(q)
        .map(|&(_, tag, i)| {
            if tag == 0 {
                &pairs_plus.vectors[i]
            } else {
                &pairs_minus.vectors[i]
            }
        })
        .collect();
    let mut points = vec![0.0; n * q];
    for (col, v) in chosen.iter().enumerate() {
        for i in 0..n {
            points[i * q + col] = v[i];
        }
    }
    let fit = kmeans(&points, q, q, rng::mix(seed, &[8]), &KmeansOptions::default())?;
    Partition::new(fit.labels, q as u32)
}
