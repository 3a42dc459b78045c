//! Belief propagation for the sparse stochastic block model.
//!
//! Messages live on directed edges: `psi[i->j]` is node `i`'s community
//! distribution in the cavity graph with `j` removed.  The update is
//!
//! ```text
//! psi[i->j](r) ~ n_r exp(-h_r) prod_{k in N(i) \ j} sum_s c_rs psi[k->i](s)
//! ```
//!
//! with the rescaled affinities `c_rs = n p_rs` and the mean field
//! `h_r = (1/n) sum_k sum_s c_rs psi_k(s)` absorbing the non-edges.
//! Leave-one-out products are formed from prefix/suffix partial products,
//! never by division, so zero factors are harmless.  Each node update is
//! asynchronous; nodes are visited in a seeded random order per sweep.
//!
//! The Bethe free energy per node (lower is better) is
//! `f = -(1/n) sum_i ln Z_i + (1/n) sum_(ij) ln Z_ij - cbar/2`.

mod em;
mod mfe;

pub use em::{detect_bp, em_fit, em_fit_with_init, EmFit, EmOptions};
pub use mfe::{mfe_select, MfeOptions, OrderSelectionTrace};

use rand::seq::SliceRandom;
use rand::Rng;

use crate::error::{Error, Result};
use crate::graphgen::SparseGraph;
use crate::rng;

/// Rescaled block-model parameters driving an inference run.
#[derive(Debug, Clone, PartialEq)]
pub struct BpModel {
    /// Community prior fractions, a probability vector of length `q`.
    pub fractions: Vec<f64>,
    /// Symmetric `q x q` rescaled affinities `c_rs = n p_rs`, row-major.
    pub affinities: Vec<f64>,
}

impl BpModel {
    pub fn new(fractions: Vec<f64>, affinities: Vec<f64>) -> Result<Self> {
        let q = fractions.len();
        if q == 0 {
            return Err(Error::InvalidParameter("no communities".into()));
        }
        if affinities.len() != q * q {
            return Err(Error::InvalidParameter(format!(
                "affinity matrix has {} entries for q = {q}",
                affinities.len()
            )));
        }
        let total: f64 = fractions.iter().sum();
        if fractions.iter().any(|&f| f < 0.0) || (total - 1.0).abs() > 1e-8 {
            return Err(Error::InvalidParameter(
                "community fractions must form a probability vector".into(),
            ));
        }
        for r in 0..q {
            for s in 0..r {
                if (affinities[r * q + s] - affinities[s * q + r]).abs()
                    > 1e-10 * affinities[r * q + s].abs().max(1.0)
                {
                    return Err(Error::InvalidParameter("affinities must be symmetric".into()));
                }
            }
        }
        if affinities.iter().any(|&c| c < 0.0 || !c.is_finite()) {
            return Err(Error::InvalidParameter("affinities must be nonnegative".into()));
        }
        Ok(BpModel { fractions, affinities })
    }

    pub fn q(&self) -> usize {
        self.fractions.len()
    }

    pub fn affinity(&self, r: usize, s: usize) -> f64 {
        self.affinities[r * self.q() + s]
    }

    /// Mean rescaled degree `cbar = sum_rs n_r c_rs n_s`.
    pub fn mean_affinity(&self) -> f64 {
        let q = self.q();
        let mut total = 0.0;
        for r in 0..q {
            for s in 0..q {
                total += self.fractions[r] * self.affinities[r * q + s] * self.fractions[s];
            }
        }
        total
    }
}

#[derive(Debug, Clone)]
pub struct BpOptions {
    pub max_sweeps: usize,
    /// Convergence threshold on the largest single-message change.
    pub tol: f64,
    /// Weight kept on the old message once oscillation is detected.
    pub damping: f64,
}

impl Default for BpOptions {
    fn default() -> Self {
        BpOptions { max_sweeps: 500, tol: 1e-6, damping: 0.2 }
    }
}

/// Converged (or stopped) message state plus node marginals.
#[derive(Debug, Clone)]
pub struct BpState {
    q: usize,
    /// One distribution per directed edge, indexed like the graph's
    /// adjacency slots.
    messages: Vec<f64>,
    /// Node marginals, `n x q` row-major.
    marginals: Vec<f64>,
    /// Mean-field aggregate `h_r`.
    field: Vec<f64>,
    pub converged: bool,
    pub sweeps: usize,
    /// Largest message change seen in the final sweep.
    pub final_delta: f64,
}

impl BpState {
    pub fn q(&self) -> usize {
        self.q
    }

    pub fn marginals(&self) -> &[f64] {
        &self.marginals
    }

    pub fn marginal(&self, node: usize) -> &[f64] {
        &self.marginals[node * self.q..(node + 1) * self.q]
    }

    /// Hard assignment by largest marginal, ties to the lowest label.
    pub fn assignments(&self) -> Vec<u32> {
        let n = self.marginals.len() / self.q;
        (0..n)
            .map(|i| {
                let row = self.marginal(i);
                let mut best = 0;
                for r in 1..self.q {
                    if row[r] > row[best] {
                        best = r;
                    }
                }
                best as u32
            })
            .collect()
    }

    /// Estimated community fractions `(1/n) sum_i psi_i`.
    pub fn estimated_fractions(&self) -> Vec<f64> {
        let n = self.marginals.len() / self.q;
        let mut fractions = vec![0.0; self.q];
        for i in 0..n {
            for (f, &m) in fractions.iter_mut().zip(self.marginal(i)) {
                *f += m;
            }
        }
        fractions.iter_mut().for_each(|f| *f /= n as f64);
        fractions
    }
}

/// How to start the message iteration.
pub enum BpInit<'a> {
    /// Seeded random messages (symmetry breaking).
    Random(u64),
    /// Continue from a previous state's messages (EM warm start).
    Warm(&'a BpState),
}

fn normalize(v: &mut [f64]) {
    let total: f64 = v.iter().sum();
    if total > 0.0 {
        v.iter_mut().for_each(|x| *x /= total);
    } else {
        let u = 1.0 / v.len() as f64;
        v.iter_mut().for_each(|x| *x = u);
    }
}

/// For each directed slot `p = (i -> j)`, the slot of `(j -> i)`.
fn reverse_slots(graph: &SparseGraph) -> Vec<u32> {
    let n = graph.n();
    let mut reverse = vec![0u32; graph.neighbors_len()];
    for i in 0..n {
        let base = graph.slot_range(i).start;
        for (off, &j) in graph.neighbors(i).iter().enumerate() {
            let j = j as usize;
            // Adjacency lists are sorted: binary search i in j's list.
            let jn = graph.neighbors(j);
            let pos = jn.binary_search(&(i as u32)).expect("edge stored in both lists");
            reverse[base + off] = (graph.slot_range(j).start + pos) as u32;
        }
    }
    reverse
}

struct Worker<'a> {
    graph: &'a SparseGraph,
    model: &'a BpModel,
    reverse: Vec<u32>,
    q: usize,
}

impl Worker<'_> {
    /// `factor(r) = sum_s c_rs psi(s)`, written normalized into `out`.
    fn factor(&self, message: &[f64], out: &mut [f64]) {
        let q = self.q;
        for r in 0..q {
            let mut acc = 0.0;
            for s in 0..q {
                acc += self.model.affinities[r * q + s] * message[s];
            }
            out[r] = acc;
        }
        normalize(out);
    }

    /// Recomputes marginals (against the current field) and then the field
    /// itself from the current messages.
    fn refresh_node_quantities(&self, state: &mut BpState) {
        let (n, q) = (self.graph.n(), self.q);
        let mut factor = vec![0.0; q];
        let mut prod = vec![0.0; q];
        for i in 0..n {
            prod.copy_from_slice(&base_of(&state.field, self.model));
            for p in self.graph.slot_range(i) {
                let incoming = self.reverse[p] as usize;
                self.factor(&state.messages[incoming * q..(incoming + 1) * q], &mut factor);
                for r in 0..q {
                    prod[r] *= factor[r];
                }
                normalize(&mut prod);
            }
            state.marginals[i * q..(i + 1) * q].copy_from_slice(&prod);
        }
        // Field from the fresh marginals.
        let mut field = vec![0.0; q];
        for i in 0..n {
            let m = &state.marginals[i * q..(i + 1) * q];
            for r in 0..q {
                let mut acc = 0.0;
                for s in 0..q {
                    acc += self.model.affinities[r * q + s] * m[s];
                }
                field[r] += acc;
            }
        }
        field.iter_mut().for_each(|h| *h /= n as f64);
        state.field = field;
    }
}

/// `base_r = n_r exp(-h_r)`, normalized.
fn base_of(field: &[f64], model: &BpModel) -> Vec<f64> {
    let mut base: Vec<f64> = model
        .fractions
        .iter()
        .zip(field)
        .map(|(&nr, &h)| nr * (-h).exp())
        .collect();
    normalize(&mut base);
    base
}

/// Runs belief propagation to a fixed point (or the sweep cap).
pub fn bp_infer(
    graph: &SparseGraph,
    model: &BpModel,
    init: BpInit<'_>,
    opts: &BpOptions,
) -> Result<BpState> {
    let n = graph.n();
    if n == 0 {
        return Err(Error::InvalidParameter("empty graph".into()));
    }
    let q = model.q();
    let slots = graph.neighbors_len();
    // The node visiting order is tied to the random-init seed; warm starts
    // use a fixed stream so an EM chain stays deterministic end to end.
    let order_seed = match &init {
        BpInit::Random(seed) => rng::mix(*seed, &[0x5e]),
        BpInit::Warm(_) => rng::mix(0xbeef, &[slots as u64]),
    };
    let mut state = match init {
        BpInit::Random(seed) => {
            let mut rng = rng::stream(seed, &[0xb9]);
            let mut messages = vec![0.0; slots * q];
            for chunk in messages.chunks_mut(q) {
                for x in chunk.iter_mut() {
                    *x = rng.gen_range(0.01..1.0);
                }
                normalize(chunk);
            }
            BpState {
                q,
                messages,
                marginals: vec![0.0; n * q],
                field: vec![0.0; q],
                converged: false,
                sweeps: 0,
                final_delta: f64::INFINITY,
            }
        }
        BpInit::Warm(prev) => {
            if prev.q != q || prev.messages.len() != slots * q {
                return Err(Error::InvalidParameter(
                    "warm start does not match graph and model shape".into(),
                ));
            }
            let mut s = prev.clone();
            s.converged = false;
            s.sweeps = 0;
            s.final_delta = f64::INFINITY;
            s
        }
    };
    let worker = Worker { graph, model, reverse: reverse_slots(graph), q };
    worker.refresh_node_quantities(&mut state);

    let mut order_rng = rng::stream(order_seed, &[]);
    let mut order: Vec<usize> = (0..n).collect();

    let max_degree = graph.max_degree();
    let mut factors = vec![0.0; max_degree * q];
    let mut prefix = vec![0.0; (max_degree + 1) * q];
    let mut suffix = vec![0.0; (max_degree + 1) * q];
    let mut damping = 0.0;
    let mut prev_delta = f64::INFINITY;

    for sweep in 0..opts.max_sweeps {
        order.shuffle(&mut order_rng);
        let mut max_delta = 0.0f64;
        for &i in &order {
            let range = graph.slot_range(i);
            let deg = range.len();
            let base = base_of(&state.field, model);
            if deg == 0 {
                let m = &mut state.marginals[i * q..(i + 1) * q];
                // Field contribution of an isolated node's marginal.
                update_field_for(&mut state.field, model, m, &base, n);
                continue;
            }
            // Incoming factors, one per neighbor slot.
            for (t, p) in range.clone().enumerate() {
                let incoming = worker.reverse[p] as usize;
                let msg = &state.messages[incoming * q..(incoming + 1) * q];
                let out = &mut factors[t * q..(t + 1) * q];
                let qm = q;
                for r in 0..qm {
                    let mut acc = 0.0;
                    for s in 0..qm {
                        acc += model.affinities[r * qm + s] * msg[s];
                    }
                    out[r] = acc;
                }
                normalize(out);
            }
            // prefix[t] = base * f_0 ... f_{t-1}; suffix[t] = f_t ... f_{d-1}.
            prefix[0..q].copy_from_slice(&base);
            for t in 0..deg {
                for r in 0..q {
                    prefix[(t + 1) * q + r] = prefix[t * q + r] * factors[t * q + r];
                }
                normalize(&mut prefix[(t + 1) * q..(t + 2) * q]);
            }
            suffix[deg * q..(deg + 1) * q].iter_mut().for_each(|x| *x = 1.0);
            for t in (0..deg).rev() {
                for r in 0..q {
                    suffix[t * q + r] = suffix[(t + 1) * q + r] * factors[t * q + r];
                }
                normalize(&mut suffix[t * q..(t + 1) * q]);
            }
            // New outgoing messages.
            for (t, p) in range.clone().enumerate() {
                let mut fresh = vec![0.0; q];
                for r in 0..q {
                    fresh[r] = prefix[t * q + r] * suffix[(t + 1) * q + r];
                }
                normalize(&mut fresh);
                let slot = &mut state.messages[p * q..(p + 1) * q];
                if damping > 0.0 {
                    for r in 0..q {
                        fresh[r] = damping * slot[r] + (1.0 - damping) * fresh[r];
                    }
                    normalize(&mut fresh);
                }
                for r in 0..q {
                    max_delta = max_delta.max((fresh[r] - slot[r]).abs());
                }
                slot.copy_from_slice(&fresh);
            }
            // New marginal uses the full product; its change feeds the field.
            let mut marg = vec![0.0; q];
            marg.copy_from_slice(&prefix[deg * q..(deg + 1) * q]);
            let m = &mut state.marginals[i * q..(i + 1) * q];
            let old = m.to_vec();
            m.copy_from_slice(&marg);
            apply_field_delta(&mut state.field, model, &old, m, n);
        }
        state.sweeps = sweep + 1;
        state.final_delta = max_delta;
        if max_delta < opts.tol {
            state.converged = true;
            break;
        }
        if max_delta > prev_delta && damping == 0.0 {
            damping = opts.damping;
        }
        prev_delta = max_delta;
        // Periodically rebuild the field from scratch to cancel drift from
        // the incremental updates.
        if (sweep + 1) % 32 == 0 {
            worker.refresh_node_quantities(&mut state);
        }
    }
    if state.converged {
        // Final consistency pass so marginals and field match the
        // converged messages exactly.
        worker.refresh_node_quantities(&mut state);
    }
    Ok(state)
}

fn update_field_for(field: &mut [f64], model: &BpModel, marginal: &mut [f64], base: &[f64], n: usize) {
    let old = marginal.to_vec();
    marginal.copy_from_slice(base);
    apply_field_delta(field, model, &old, marginal, n);
}

fn apply_field_delta(field: &mut [f64], model: &BpModel, old: &[f64], new: &[f64], n: usize) {
    let q = model.q();
    for r in 0..q {
        let mut acc = 0.0;
        for s in 0..q {
            acc += model.affinities[r * q + s] * (new[s] - old[s]);
        }
        field[r] += acc / n as f64;
    }
}

/// Bethe free energy per node of a message state (lower is better).
pub fn free_energy(graph: &SparseGraph, model: &BpModel, state: &BpState) -> f64 {
    let (n, q) = (graph.n(), model.q());
    let reverse = reverse_slots(graph);
    let base_log: Vec<f64> = model
        .fractions
        .iter()
        .zip(&state.field)
        .map(|(&nr, &h)| if nr > 0.0 { nr.ln() - h } else { f64::NEG_INFINITY })
        .collect();
    // Node terms: ln Z_i with per-step rescaling of the running product.
    let mut node_sum = 0.0;
    let mut factor = vec![0.0; q];
    for i in 0..n {
        let mut prod = vec![1.0; q];
        let mut log_scale = 0.0;
        for p in graph.slot_range(i) {
            let incoming = reverse[p] as usize;
            let msg = &state.messages[incoming * q..(incoming + 1) * q];
            for r in 0..q {
                let mut acc = 0.0;
                for s in 0..q {
                    acc += model.affinities[r * q + s] * msg[s];
                }
                factor[r] = acc;
            }
            let mut top = 0.0f64;
            for r in 0..q {
                prod[r] *= factor[r];
                top = top.max(prod[r]);
            }
            if top > 0.0 {
                prod.iter_mut().for_each(|x| *x /= top);
                log_scale += top.ln();
            }
        }
        let z: f64 = (0..q).map(|r| base_log[r].exp() * prod[r]).sum();
        node_sum += z.ln() + log_scale;
    }
    // Edge terms: ln Z_ij once per undirected edge.
    let mut edge_sum = 0.0;
    for i in 0..n {
        for p in graph.slot_range(i) {
            let j = graph.neighbors(i)[p - graph.slot_range(i).start] as usize;
            if j <= i {
                continue;
            }
            let out = &state.messages[p * q..(p + 1) * q];
            let incoming = reverse[p] as usize;
            let inc = &state.messages[incoming * q..(incoming + 1) * q];
            let mut z = 0.0;
            for r in 0..q {
                for s in 0..q {
                    z += model.affinities[r * q + s] * out[r] * inc[s];
                }
            }
            edge_sum += z.ln();
        }
    }
    -(node_sum / n as f64) + edge_sum / n as f64 - model.mean_affinity() / 2.0
}

/// Soft pair counts: expected number of edges joining each community pair,
/// `(a, b)` and `(b, a)` accumulated together for `a != b`.  Used by the
/// EM M-step.
pub(crate) fn expected_edge_counts(
    graph: &SparseGraph,
    model: &BpModel,
    state: &BpState,
) -> Vec<f64> {
    let q = model.q();
    let reverse = reverse_slots(graph);
    let mut counts = vec![0.0; q * q];
    let mut joint = vec![0.0; q * q];
    for i in 0..graph.n() {
        let start = graph.slot_range(i).start;
        for p in graph.slot_range(i) {
            let j = graph.neighbors(i)[p - start] as usize;
            if j <= i {
                continue;
            }
            let out = &state.messages[p * q..(p + 1) * q];
            let inc_slot = reverse[p] as usize;
            let inc = &state.messages[inc_slot * q..(inc_slot + 1) * q];
            let mut z = 0.0;
            for a in 0..q {
                for b in 0..q {
                    let w = model.affinities[a * q + b] * out[a] * inc[b];
                    joint[a * q + b] = w;
                    z += w;
                }
            }
            if z > 0.0 {
                for (c, &w) in counts.iter_mut().zip(&joint) {
                    *c += w / z;
                }
            }
        }
    }
    // Fold orientations: each off-diagonal cell ends up holding the full
    // expected number of edges between the pair.
    for a in 0..q {
        for b in 0..a {
            let total = counts[a * q + b] + counts[b * q + a];
            counts[a * q + b] = total;
            counts[b * q + a] = total;
        }
    }
    counts
}
