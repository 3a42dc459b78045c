//! Expectation-maximization over the block-model parameters.
//!
//! Each EM iteration runs belief propagation to (near) convergence with the
//! current parameters, then re-estimates them from the resulting marginals.
//! The M-step uses exact pair-count denominators: a community of expected
//! size `N_a` offers `N_a (N_a - 1) / 2` internal pairs, so on a featureless
//! graph the single-community fit recovers the empirical edge density
//! exactly rather than up to `O(1/n)` bias.

use super::{
    bp_infer, expected_edge_counts, free_energy, BpInit, BpModel, BpOptions, BpState,
};
use crate::error::{Error, Result};
use crate::graphgen::SparseGraph;
use crate::partition::Partition;
use crate::rng;
use rand::Rng;

#[derive(Debug, Clone)]
pub struct EmOptions {
    pub bp: BpOptions,
    /// Cap on EM iterations per run.
    pub max_iters: usize,
    /// Absolute free-energy change below which EM has converged.
    pub f_tol: f64,
    /// A community whose estimated fraction falls below this has collapsed.
    pub collapse_tol: f64,
    /// Fresh initializations tried after a collapsed run.
    pub collapse_retries: usize,
}

impl Default for EmOptions {
    fn default() -> Self {
        EmOptions {
            bp: BpOptions::default(),
            max_iters: 20,
            f_tol: 1e-7,
            collapse_tol: 1e-8,
            collapse_retries: 2,
        }
    }
}

/// A fitted model with its final message state.
#[derive(Debug, Clone)]
pub struct EmFit {
    pub model: BpModel,
    pub state: BpState,
    pub free_energy: f64,
    pub iterations: usize,
    /// Whether the free energy settled within tolerance.
    pub converged: bool,
    /// Whether a community emptied out during the fit.
    pub collapsed: bool,
}

impl EmFit {
    /// Hard partition from the marginals, keeping the declared `q`.
    pub fn partition(&self) -> Partition {
        Partition::new(self.state.assignments(), self.state.q() as u32)
            .expect("assignments are within the declared q")
    }
}

/// Seeded random starting parameters: jittered uniform fractions and an
/// assortative affinity matrix whose mean degree matches the graph.
fn random_init(graph: &SparseGraph, q: usize, seed: u64) -> BpModel {
    let n = graph.n() as f64;
    let mut rng = rng::stream(seed, &[0xe0]);
    let c_obs = if n > 1.0 {
        (2.0 * graph.num_edges() as f64 / (n * (n - 1.0))) * n
    } else {
        1.0
    }
    .max(1e-6);
    if q == 1 {
        return BpModel::new(vec![1.0], vec![c_obs]).unwrap();
    }
    let mut fractions: Vec<f64> = (0..q)
        .map(|_| 1.0 / q as f64 + rng.gen_range(-0.05..0.05) / q as f64)
        .collect();
    let total: f64 = fractions.iter().sum();
    fractions.iter_mut().for_each(|f| *f /= total);
    let ratio = rng.gen_range(0.05..0.8);
    let c_in = q as f64 * c_obs / (1.0 + (q as f64 - 1.0) * ratio);
    let c_out = ratio * c_in;
    let mut affinities = vec![c_out; q * q];
    for r in 0..q {
        affinities[r * q + r] = c_in;
    }
    BpModel::new(fractions, affinities).unwrap()
}

/// One M-step: re-estimate fractions and affinities from the marginals.
fn m_step(graph: &SparseGraph, model: &BpModel, state: &BpState) -> Result<BpModel> {
    let q = model.q();
    let n = graph.n() as f64;
    let fractions = state.estimated_fractions();
    let counts = expected_edge_counts(graph, model, state);
    let floor = 1e-10 * model.mean_affinity().max(1e-6);
    let mut affinities = vec![0.0; q * q];
    for a in 0..q {
        for b in a..q {
            let pairs = if a == b {
                let na = n * fractions[a];
                (na * (na - 1.0) / 2.0).max(f64::MIN_POSITIVE)
            } else {
                (n * fractions[a] * n * fractions[b]).max(f64::MIN_POSITIVE)
            };
            let c = (n * counts[a * q + b] / pairs).max(floor);
            affinities[a * q + b] = c;
            affinities[b * q + a] = c;
        }
    }
    BpModel::new(fractions, affinities)
}

/// Runs EM from an explicit starting model.  The message seed drives the
/// initial random messages and the node visit order.
pub fn em_fit_with_init(
    graph: &SparseGraph,
    init_model: BpModel,
    seed: u64,
    opts: &EmOptions,
) -> Result<EmFit> {
    let mut model = init_model;
    let mut state = bp_infer(graph, &model, BpInit::Random(rng::mix(seed, &[0xe1])), &opts.bp)?;
    let mut f = free_energy(graph, &model, &state);
    let mut converged = false;
    let mut collapsed = false;
    let mut iterations = 0;
    for _ in 0..opts.max_iters {
        iterations += 1;
        let next = m_step(graph, &model, &state)?;
        if next.fractions.iter().any(|&x| x < opts.collapse_tol) {
            collapsed = true;
            break;
        }
        let next_state = bp_infer(graph, &next, BpInit::Warm(&state), &opts.bp)?;
        let next_f = free_energy(graph, &next, &next_state);
        let delta = (next_f - f).abs();
        model = next;
        state = next_state;
        f = next_f;
        if delta < opts.f_tol {
            converged = true;
            break;
        }
    }
    Ok(EmFit { model, state, free_energy: f, iterations, converged, collapsed })
}

/// Runs `restarts` independently seeded EM fits and keeps the one with the
/// lowest final free energy, preferring fits that did not collapse.  A
/// collapsed run is retried with a fresh initialization a bounded number of
/// times before being accepted as a result.
pub fn em_fit(
    graph: &SparseGraph,
    q: usize,
    restarts: usize,
    seed: u64,
    opts: &EmOptions,
) -> Result<EmFit> {
    if q == 0 {
        return Err(Error::InvalidParameter("q must be at least 1".into()));
    }
    if restarts == 0 {
        return Err(Error::InvalidParameter("need at least one restart".into()));
    }
    let mut best: Option<EmFit> = None;
    for r in 0..restarts {
        let mut fit = None;
        for attempt in 0..=opts.collapse_retries {
            let s = rng::mix(seed, &[r as u64, attempt as u64]);
            let candidate = em_fit_with_init(graph, random_init(graph, q, s), s, opts)?;
            let done = !candidate.collapsed;
            fit = Some(candidate);
            if done {
                break;
            }
        }
        let fit = fit.unwrap();
        let better = match &best {
            None => true,
            Some(b) => {
                // A healthy fit beats a collapsed one; otherwise lower f wins.
                (b.collapsed && !fit.collapsed)
                    || (b.collapsed == fit.collapsed && fit.free_energy < b.free_energy)
            }
        };
        if better {
            best = Some(fit);
        }
    }
    Ok(best.unwrap())
}

/// Fits `q` communities by EM and returns the hard partition with the fit.
pub fn detect_bp(
    graph: &SparseGraph,
    q: usize,
    restarts: usize,
    seed: u64,
    opts: &EmOptions,
) -> Result<(Partition, EmFit)> {
    let fit = em_fit(graph, q, restarts, seed, opts)?;
    Ok((fit.partition(), fit))
}
