//! Order selection by minimum free energy.
//!
//! The number of communities is grown one at a time; each candidate order
//! is fitted by restarted EM and scored by its best (lowest) Bethe free
//! energy.  Growth stops at the first order that fails to improve on its
//! predecessor, comparing free energies rounded to a fixed number of
//! decimals so that noise-level improvements do not inflate the estimate.
//! A genuine extra community lowers the free energy by an amount visible
//! at these precisions; a spurious one only reshuffles noise.

use super::em::{em_fit, EmFit, EmOptions};
use crate::error::Result;
use crate::graphgen::SparseGraph;
use crate::partition::Partition;
use crate::rng;

#[derive(Debug, Clone)]
pub struct MfeOptions {
    /// Largest order tried.
    pub q_max: u32,
    /// EM restarts per candidate order (the first order runs once: with a
    /// single community the fit is deterministic).
    pub restarts: usize,
    pub em: EmOptions,
    /// Decimals kept when comparing free energies for small candidate
    /// orders (deciding between one and two communities) ...
    pub fine_digits: i32,
    /// ... and for larger ones, where per-community free-energy gains
    /// shrink.
    pub coarse_digits: i32,
}

impl Default for MfeOptions {
    fn default() -> Self {
        MfeOptions {
            q_max: 6,
            restarts: 5,
            em: EmOptions::default(),
            fine_digits: 3,
            coarse_digits: 2,
        }
    }
}

/// Free energies per examined order, and the chosen order.
#[derive(Debug, Clone)]
pub struct OrderSelectionTrace {
    /// `(q, best free energy)` in evaluation order; the scan may stop
    /// before `q_max`.
    pub evaluated: Vec<(u32, f64)>,
    pub chosen: u32,
}

fn round_to(x: f64, digits: i32) -> f64 {
    let scale = 10f64.powi(digits);
    (x * scale).round() / scale
}

/// Estimates the number of communities and returns the partition fitted at
/// that order together with the free-energy trace.
pub fn mfe_select(
    graph: &SparseGraph,
    opts: &MfeOptions,
    seed: u64,
) -> Result<(Partition, OrderSelectionTrace)> {
    let q_max = opts.q_max.max(1);
    let mut evaluated = Vec::new();
    let mut prev: Option<EmFit> = None;
    for q in 1..=q_max {
        let restarts = if q == 1 { 1 } else { opts.restarts };
        let fit = em_fit(graph, q as usize, restarts, rng::mix(seed, &[q as u64]), &opts.em)?;
        evaluated.push((q, fit.free_energy));
        if let Some(prev_fit) = &prev {
            let digits = if q <= 2 { opts.fine_digits } else { opts.coarse_digits };
            if round_to(fit.free_energy, digits) >= round_to(prev_fit.free_energy, digits) {
                let partition = prev_fit.partition();
                return Ok((partition, OrderSelectionTrace { evaluated, chosen: q - 1 }));
            }
        }
        prev = Some(fit);
    }
    let fit = prev.expect("at least one order evaluated");
    let partition = fit.partition();
    Ok((partition, OrderSelectionTrace { evaluated, chosen: q_max }))
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::DMatrix;

    fn mfe_opts(restarts: usize) -> MfeOptions {
        MfeOptions { restarts, ..Default::default() }
    }

    #[test]
    fn featureless_graph_selects_one_community() {
        let n: u32 = 800;
        let omega = DMatrix::from_element(1, 1, 6.0 / n as f64);
        let g = crate::graphgen::sample_blocks(&[n], &omega, &mut crate::rng::stream(0xf1, &[]))
            .unwrap();
        let (p, trace) = mfe_select(&g, &mfe_opts(2), 5).unwrap();
        assert_eq!(trace.chosen, 1);
        assert_eq!(p.q(), 1);
        assert_eq!(trace.evaluated.len(), 2); // stopped right after q = 2
    }

    #[test]
    fn recovers_the_order_of_three_strong_blocks() {
        let n: u32 = 1200;
        let (c_in, c_out) = (16.0, 1.0);
        let (p_in, p_out) = (c_in / n as f64, c_out / n as f64);
        let mut omega = DMatrix::from_element(3, 3, p_out);
        for i in 0..3 {
            omega[(i, i)] = p_in;
        }
        let g = crate::graphgen::sample_blocks(
            &[n / 3; 3],
            &omega,
            &mut crate::rng::stream(0xf2, &[]),
        )
        .unwrap();
        let (p, trace) = mfe_select(&g, &mfe_opts(3), 7).unwrap();
        assert_eq!(trace.chosen, 3, "trace: {:?}", trace.evaluated);
        assert_eq!(p.q(), 3);
        // Free energy improved strictly up to the chosen order.
        assert!(trace.evaluated[1].1 < trace.evaluated[0].1);
        assert!(trace.evaluated[2].1 < trace.evaluated[1].1);
        // The selected partition is close to the planted one.
        let planted = Partition::new(
            (0..n).map(|i| (i / (n / 3)).min(2)).collect(),
            3,
        )
        .unwrap();
        let score = crate::metrics::ami(&planted, &p).unwrap();
        assert!(score > 0.85, "AMI = {score}");
    }

    #[test]
    fn selection_is_deterministic() {
        let n: u32 = 500;
        let omega = DMatrix::from_element(1, 1, 5.0 / n as f64);
        let g = crate::graphgen::sample_blocks(&[n], &omega, &mut crate::rng::stream(0xf3, &[]))
            .unwrap();
        let (pa, ta) = mfe_select(&g, &mfe_opts(2), 11).unwrap();
        let (pb, tb) = mfe_select(&g, &mfe_opts(2), 11).unwrap();
        assert_eq!(pa.labels(), pb.labels());
        assert_eq!(ta.evaluated, tb.evaluated);
    }
}
