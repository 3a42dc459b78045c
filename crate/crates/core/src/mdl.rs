//! Minimum description length order selection.
//!
//! The two-part code length of a graph under a partition is
//!
//! ```text
//! L = |E| h(q(q+1) / 2|E|) + n ln q - |E| sum_rs m_rs ln(m_rs / (n_r n_s))
//! ```
//!
//! with `h(x) = (1+x) ln(1+x) - x ln x`, `n_r` the fraction of nodes in
//! community `r`, and `m_rs` the fraction of edge endpoints joining `r` to
//! `s`.  All logarithms are natural, so lengths are in nats.  The final sum
//! runs over ordered community pairs by default: between-community counts
//! appear once in each direction carrying half the weight each, and
//! within-community counts once with full weight.  Choosing the number of
//! communities by minimizing `L` trades the sharper edge model of a larger
//! `q` against the `n ln q` labeling cost.

use crate::error::{Error, Result};
use crate::graphgen::SparseGraph;
use crate::partition::Partition;
use crate::spectral;

/// How the block-density sum aggregates community pairs.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum DlConvention {
    /// Ordered pairs: `m_rs = e_rs / 2|E|` for `r != s` (each direction),
    /// `m_rr = e_rr / |E|`.
    #[default]
    Ordered,
    /// Unordered pairs: `m_rs = e_rs / |E|` summed once over `r <= s`.
    Unordered,
}

/// Per-block edge counts and community sizes for a partition of a graph.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BlockStats {
    pub sizes: Vec<u64>,
    /// Symmetric `q x q` matrix of undirected edge counts; the diagonal
    /// holds within-community counts (each edge once).
    pub edges: Vec<Vec<u64>>,
}

impl BlockStats {
    pub fn from_graph(graph: &SparseGraph, partition: &Partition) -> Result<Self> {
        if partition.n() != graph.n() {
            return Err(Error::InvalidParameter(format!(
                "partition covers {} nodes, graph has {}",
                partition.n(),
                graph.n()
            )));
        }
        let q = partition.q() as usize;
        let labels = partition.labels();
        let mut edges = vec![vec![0u64; q]; q];
        for (u, v) in graph.edges() {
            let (r, s) = (labels[u as usize] as usize, labels[v as usize] as usize);
            edges[r][s] += 1;
            if r != s {
                edges[s][r] += 1;
            }
        }
        let sizes = partition.counts().iter().map(|&c| c as u64).collect();
        Ok(BlockStats { sizes, edges })
    }
}

fn h(x: f64) -> f64 {
    if x <= 0.0 {
        0.0
    } else {
        (1.0 + x) * (1.0 + x).ln() - x * x.ln()
    }
}

/// Description length of `graph` under `partition`, in nats.
///
/// An edgeless graph costs only the labeling term `n ln q`.  Declared-but-
/// empty communities still count toward `q`: the code must name them.
pub fn description_length(
    graph: &SparseGraph,
    partition: &Partition,
    convention: DlConvention,
) -> Result<f64> {
    let stats = BlockStats::from_graph(graph, partition)?;
    let n = graph.n() as f64;
    let q = partition.q() as f64;
    let num_edges = graph.num_edges() as f64;
    if num_edges == 0.0 {
        return Ok(n * q.ln());
    }
    let mut density_sum = 0.0;
    let qn = partition.q() as usize;
    for r in 0..qn {
        for s in 0..qn {
            let e_rs = stats.edges[r][s] as f64;
            if e_rs == 0.0 {
                continue;
            }
            let (m, once) = match convention {
                DlConvention::Ordered => {
                    if r == s {
                        (e_rs / num_edges, true)
                    } else {
                        (e_rs / (2.0 * num_edges), true)
                    }
                }
                DlConvention::Unordered => (e_rs / num_edges, r <= s),
            };
            if once {
                let nr = stats.sizes[r] as f64 / n;
                let ns = stats.sizes[s] as f64 / n;
                density_sum += m * (m / (nr * ns)).ln();
            }
        }
    }
    Ok(num_edges * h(q * (q + 1.0) / (2.0 * num_edges)) + n * q.ln() - num_edges * density_sum)
}

/// Description lengths per candidate order, and the chosen order.
#[derive(Debug, Clone)]
pub struct MdlTrace {
    /// `(q, L)` pairs in the order evaluated.
    pub lengths: Vec<(u32, f64)>,
    pub chosen: u32,
}

/// Evaluates candidate partitions for `q = 1..=q_max` and returns the one
/// of minimal description length, smaller `q` winning ties.
pub fn mdl_select<F>(
    graph: &SparseGraph,
    q_max: u32,
    convention: DlConvention,
    mut candidate: F,
) -> Result<(Partition, MdlTrace)>
where
    F: FnMut(u32) -> Result<Partition>,
{
    if q_max == 0 {
        return Err(Error::InvalidParameter("q_max must be at least 1".into()));
    }
    let mut best: Option<(f64, u32, Partition)> = None;
    let mut lengths = Vec::with_capacity(q_max as usize);
    for q in 1..=q_max {
        let p = candidate(q)?;
        let len = description_length(graph, &p, convention)?;
        lengths.push((q, len));
        if best.as_ref().map_or(true, |(l, _, _)| len < *l) {
            best = Some((len, q, p));
        }
    }
    let (_, chosen, partition) = best.unwrap();
    Ok((partition, MdlTrace { lengths, chosen }))
}

/// [`mdl_select`] with Bethe Hessian spectral embeddings as the candidate
/// family.
pub fn mdl_select_bh(
    graph: &SparseGraph,
    q_max: u32,
    convention: DlConvention,
    seed: u64,
) -> Result<(Partition, MdlTrace)> {
    mdl_select(graph, q_max, convention, |q| {
        spectral::bh_candidate(graph, q as usize, crate::rng::mix(seed, &[q as u64]))
    })
}
