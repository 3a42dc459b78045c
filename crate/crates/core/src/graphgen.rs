//! Sparse graph storage and block-model samplers.
//!
//! Graphs are simple and undirected, stored as sorted CSR neighbor lists.
//! Samplers draw each node pair independently with its block probability,
//! skipping between successes geometrically so the cost is proportional to
//! the number of edges rather than the number of pairs.  All randomness
//! comes from a caller-supplied seed via [`crate::rng`], so identical
//! `(model, seed)` inputs produce bit-identical graphs on every platform.

use std::io::{BufRead, BufWriter, Write};
use std::path::Path;

use nalgebra::DMatrix;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::partition::Partition;
use crate::theory::{self, MinorityModel};

/// An undirected simple graph with optional planted communities.
#[derive(Debug, Clone, PartialEq)]
pub struct SparseGraph {
    offsets: Vec<u32>,
    neighbors: Vec<u32>,
    planted: Option<Partition>,
}

impl SparseGraph {
    /// Builds a graph from an edge list.  Edges may appear in any order;
    /// duplicates are collapsed and self-loops rejected.
    pub fn from_edges(n: u32, edges: &[(u32, u32)], planted: Option<Partition>) -> Result<Self> {
        if let Some(p) = &planted {
            if p.n() != n as usize {
                return Err(Error::InvalidParameter(format!(
                    "planted partition covers {} nodes, graph has {n}",
                    p.n()
                )));
            }
        }
        let mut degree = vec![0u32; n as usize];
        for &(u, v) in edges {
            if u == v {
                return Err(Error::InvalidParameter(format!("self-loop at node {u}")));
            }
            if u >= n || v >= n {
                return Err(Error::InvalidParameter(format!(
                    "edge ({u}, {v}) out of range for n = {n}"
                )));
            }
            degree[u as usize] += 1;
            degree[v as usize] += 1;
        }
        let mut offsets = vec![0u32; n as usize + 1];
        for i in 0..n as usize {
            offsets[i + 1] = offsets[i] + degree[i];
        }
        let mut neighbors = vec![0u32; offsets[n as usize] as usize];
        let mut cursor = offsets.clone();
        for &(u, v) in edges {
            neighbors[cursor[u as usize] as usize] = v;
            cursor[u as usize] += 1;
            neighbors[cursor[v as usize] as usize] = u;
            cursor[v as usize] += 1;
        }
        // Sort each neighbor list and drop duplicate edges.
        let mut dedup_neighbors = Vec::with_capacity(neighbors.len());
        let mut dedup_offsets = vec![0u32; n as usize + 1];
        for i in 0..n as usize {
            let (a, b) = (offsets[i] as usize, offsets[i + 1] as usize);
            let mut list: Vec<u32> = neighbors[a..b].to_vec();
            list.sort_unstable();
            list.dedup();
            dedup_neighbors.extend_from_slice(&list);
            dedup_offsets[i + 1] = dedup_neighbors.len() as u32;
        }
        Ok(Self { offsets: dedup_offsets, neighbors: dedup_neighbors, planted })
    }

    pub fn n(&self) -> usize {
        self.offsets.len() - 1
    }

    /// Number of undirected edges.
    pub fn num_edges(&self) -> usize {
        self.neighbors.len() / 2
    }

    pub fn degree(&self, node: usize) -> usize {
        (self.offsets[node + 1] - self.offsets[node]) as usize
    }

    pub fn neighbors(&self, node: usize) -> &[u32] {
        &self.neighbors[self.offsets[node] as usize..self.offsets[node + 1] as usize]
    }

    /// Positions of `node`'s adjacency slots; slot `p` names the directed
    /// edge from `node` to the `p`-th entry of the flat neighbor array.
    pub fn slot_range(&self, node: usize) -> std::ops::Range<usize> {
        self.offsets[node] as usize..self.offsets[node + 1] as usize
    }

    /// Total number of directed adjacency slots (`2 |E|`).
    pub fn neighbors_len(&self) -> usize {
        self.neighbors.len()
    }

    pub fn degrees(&self) -> Vec<usize> {
        (0..self.n()).map(|i| self.degree(i)).collect()
    }

    pub fn max_degree(&self) -> usize {
        (0..self.n()).map(|i| self.degree(i)).max().unwrap_or(0)
    }

    /// Realized mean degree `2|E|/n`.
    pub fn average_degree(&self) -> f64 {
        if self.n() == 0 {
            0.0
        } else {
            self.neighbors.len() as f64 / self.n() as f64
        }
    }

    /// Edges as `(u, v)` with `u < v`, in sorted order.
    pub fn edges(&self) -> impl Iterator<Item = (u32, u32)> + '_ {
        (0..self.n()).flat_map(move |u| {
            self.neighbors(u)
                .iter()
                .filter(move |&&v| (u as u32) < v)
                .map(move |&v| (u as u32, v))
        })
    }

    pub fn planted(&self) -> Option<&Partition> {
        self.planted.as_ref()
    }
}

/// Emits the indices of successful Bernoulli(p) trials among `m` slots by
/// geometric skipping, in increasing order.
fn sample_indices(rng: &mut impl Rng, m: u64, p: f64, mut emit: impl FnMut(u64)) {
    if p <= 0.0 || m == 0 {
        return;
    }
    if p >= 1.0 {
        for t in 0..m {
            emit(t);
        }
        return;
    }
    let log_q = (1.0 - p).ln();
    let mut t: u64 = 0;
    loop {
        let u: f64 = rng.gen(); // in [0, 1)
        let gap = ((1.0 - u).ln() / log_q).floor();
        if !gap.is_finite() || gap >= (m - t) as f64 {
            return;
        }
        t += gap as u64;
        emit(t);
        t += 1;
        if t >= m {
            return;
        }
    }
}

/// Maps pair index -> (i, j) within one block of `size` nodes, for indices
/// visited in increasing order.  Row layout: node i pairs with all j > i.
struct TrianglePairs {
    size: u64,
    row: u64,
    row_start: u64,
}

impl TrianglePairs {
    fn new(size: u64) -> Self {
        Self { size, row: 0, row_start: 0 }
    }

    fn locate(&mut self, t: u64) -> (u64, u64) {
        while t >= self.row_start + (self.size - 1 - self.row) {
            self.row_start += self.size - 1 - self.row;
            self.row += 1;
        }
        (self.row, self.row + 1 + (t - self.row_start))
    }
}

/// Samples a block model: `sizes[r]` nodes per community, edge probability
/// `omega[(r, s)]` between communities `r` and `s`.  Nodes are numbered
/// block by block; the planted partition records block membership.
pub fn sample_blocks(sizes: &[u32], omega: &DMatrix<f64>, rng: &mut impl Rng) -> Result<SparseGraph> {
    let q = sizes.len();
    if omega.nrows() != q || omega.ncols() != q {
        return Err(Error::InvalidParameter(format!(
            "probability matrix is {}x{}, expected {q}x{q}",
            omega.nrows(),
            omega.ncols()
        )));
    }
    for r in 0..q {
        for s in 0..q {
            let p = omega[(r, s)];
            if !(0.0..=1.0).contains(&p) {
                return Err(Error::Infeasible(format!("probability {p} at block ({r}, {s})")));
            }
            if (omega[(r, s)] - omega[(s, r)]).abs() > 0.0 {
                return Err(Error::InvalidParameter("probability matrix must be symmetric".into()));
            }
        }
    }
    let mut base = vec![0u32; q + 1];
    for r in 0..q {
        base[r + 1] = base[r] + sizes[r];
    }
    let n = base[q];
    let mut edges: Vec<(u32, u32)> = Vec::new();
    for r in 0..q {
        let s_r = sizes[r] as u64;
        let m = s_r * s_r.saturating_sub(1) / 2;
        let mut tri = TrianglePairs::new(s_r);
        sample_indices(rng, m, omega[(r, r)], |t| {
            let (i, j) = tri.locate(t);
            edges.push((base[r] + i as u32, base[r] + j as u32));
        });
        for s in (r + 1)..q {
            let m = s_r * sizes[s] as u64;
            sample_indices(rng, m, omega[(r, s)], |t| {
                let i = (t / sizes[s] as u64) as u32;
                let j = (t % sizes[s] as u64) as u32;
                edges.push((base[r] + i, base[s] + j));
            });
        }
    }
    let mut labels = Vec::with_capacity(n as usize);
    for (r, &size) in sizes.iter().enumerate() {
        labels.extend(std::iter::repeat(r as u32).take(size as usize));
    }
    SparseGraph::from_edges(n, &edges, Some(Partition::new(labels, q.max(1) as u32)?))
}

/// Integer community sizes for a model: minority sizes round to nearest,
/// majorities split the remaining nodes as evenly as possible.
pub fn block_sizes(model: &MinorityModel) -> Vec<u32> {
    let minority = (model.n as f64 * model.rho / model.q_s as f64).round() as u32;
    let remaining = model.n - minority * model.q_s;
    let per_majority = remaining / model.q_b;
    let extra = (remaining % model.q_b) as usize;
    let mut sizes = vec![minority; model.q_s as usize];
    for b in 0..model.q_b as usize {
        sizes.push(per_majority + u32::from(b < extra));
    }
    sizes
}

/// Samples a graph from the model at its derived edge probabilities.
pub fn sample(model: &MinorityModel, seed: u64) -> Result<SparseGraph> {
    let probs = theory::edge_probabilities(model)?;
    let omega = theory::probability_matrix(model, &probs);
    let mut rng = crate::rng::stream(seed, &[]);
    sample_blocks(&block_sizes(model), &omega, &mut rng)
}

/// Samples a consistent-`p_out` model as an induced subgraph of a larger
/// symmetric block model: every community of the background has the same
/// size and the same `(p_in, p_out)`; the minority communities are produced
/// by keeping only a random fraction of their nodes.
pub fn sample_via_background(model: &MinorityModel, seed: u64) -> Result<SparseGraph> {
    let plan = theory::plan_background(model)?;
    let q = model.q() as usize;
    let omega = DMatrix::from_fn(q, q, |r, s| {
        if r == s {
            plan.probs.p_in
        } else {
            plan.probs.p_out1
        }
    });
    let mut rng = crate::rng::stream(seed, &[]);
    let background = sample_blocks(&vec![plan.community_size; q], &omega, &mut rng)?;

    // Keep a random subset of each designated-minority community and of each
    // majority community, then take the induced subgraph.
    let size = plan.community_size as usize;
    let mut keep: Vec<u32> = Vec::new();
    for r in 0..q {
        let quota =
            if r < model.q_s as usize { plan.keep_minority } else { plan.keep_majority } as usize;
        let mut pool: Vec<u32> = (0..size as u32).map(|i| r as u32 * size as u32 + i).collect();
        // Partial Fisher-Yates: the first `quota` entries are the sample.
        for i in 0..quota.min(size) {
            let j = rng.gen_range(i..size);
            pool.swap(i, j);
        }
        let mut chosen = pool[..quota.min(size)].to_vec();
        chosen.sort_unstable();
        keep.extend(chosen);
    }
    let mut new_id = vec![u32::MAX; background.n()];
    for (new, &old) in keep.iter().enumerate() {
        new_id[old as usize] = new as u32;
    }
    let edges: Vec<(u32, u32)> = background
        .edges()
        .filter_map(|(u, v)| {
            let (nu, nv) = (new_id[u as usize], new_id[v as usize]);
            (nu != u32::MAX && nv != u32::MAX).then_some((nu, nv))
        })
        .collect();
    let labels: Vec<u32> = keep
        .iter()
        .map(|&old| old / plan.community_size)
        .collect();
    SparseGraph::from_edges(
        keep.len() as u32,
        &edges,
        Some(Partition::new(labels, model.q())?),
    )
}

/// Sidecar metadata stored next to an edge-list file.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GraphSidecar {
    pub n: u32,
    pub planted: Option<Partition>,
    pub model: Option<MinorityModel>,
    pub seed: Option<u64>,
}

/// Path of the JSON sidecar for an edge-list file.
pub fn sidecar_path(edges_path: &Path) -> std::path::PathBuf {
    let mut name = edges_path.file_name().unwrap_or_default().to_os_string();
    name.push(".json");
    edges_path.with_file_name(name)
}

/// Writes `u v` lines (0-indexed, u < v) plus a JSON sidecar with the node
/// count, planted labels, and model parameters.
pub fn write_graph(
    graph: &SparseGraph,
    model: Option<&MinorityModel>,
    seed: Option<u64>,
    edges_path: &Path,
) -> Result<()> {
    let mut out = BufWriter::new(std::fs::File::create(edges_path)?);
    for (u, v) in graph.edges() {
        writeln!(out, "{u} {v}")?;
    }
    out.flush()?;
    let sidecar = GraphSidecar {
        n: graph.n() as u32,
        planted: graph.planted().cloned(),
        model: model.cloned(),
        seed,
    };
    let file = std::fs::File::create(sidecar_path(edges_path))?;
    serde_json::to_writer_pretty(BufWriter::new(file), &sidecar)?;
    Ok(())
}

/// Reads an edge list, picking up the sidecar when present; without one the
/// node count is inferred as the largest endpoint plus one.
pub fn read_graph(edges_path: &Path) -> Result<SparseGraph> {
    let file = std::fs::File::open(edges_path)?;
    let mut edges: Vec<(u32, u32)> = Vec::new();
    let mut max_node = 0u32;
    for (lineno, line) in std::io::BufReader::new(file).lines().enumerate() {
        let line = line?;
        let trimmed = line.trim();
        if trimmed.is_empty() || trimmed.starts_with('#') {
            continue;
        }
        let mut parts = trimmed.split_whitespace();
        let parse = |tok: Option<&str>| -> Result<u32> {
            tok.ok_or_else(|| {
                Error::InvalidParameter(format!("line {}: expected `u v`", lineno + 1))
            })?
            .parse()
            .map_err(|e| Error::InvalidParameter(format!("line {}: {e}", lineno + 1)))
        };
        let (u, v) = (parse(parts.next())?, parse(parts.next())?);
        max_node = max_node.max(u).max(v);
        edges.push((u, v));
    }
    let sidecar = sidecar_path(edges_path);
    if sidecar.exists() {
        let meta: GraphSidecar = serde_json::from_reader(std::fs::File::open(sidecar)?)?;
        SparseGraph::from_edges(meta.n, &edges, meta.planted)
    } else {
        let n = if edges.is_empty() { 0 } else { max_node + 1 };
        SparseGraph::from_edges(n, &edges, None)
    }
}
