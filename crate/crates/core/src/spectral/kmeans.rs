//! Lloyd's k-means with k-means++ seeding and restarts.
//!
//! Points are row-major flat slices (`n * dim`).  Everything is driven by a
//! seed, so a fit is a pure function of its inputs.  Rows are clustered as
//! given — no normalization is applied — matching the downstream use on
//! stacked eigenvector embeddings.

use rand::Rng;

use crate::error::{Error, Result};
use crate::rng;

#[derive(Debug, Clone)]
pub struct KmeansOptions {
    /// Independent seeded runs; the smallest within-cluster sum of squares
    /// wins, first run winning ties.
    pub restarts: usize,
    pub max_iters: usize,
    /// Relative change of the objective below which a run has converged.
    pub rel_tol: f64,
}

impl Default for KmeansOptions {
    fn default() -> Self {
        KmeansOptions { restarts: 10, max_iters: 300, rel_tol: 1e-6 }
    }
}

#[derive(Debug, Clone)]
pub struct KmeansFit {
    pub labels: Vec<u32>,
    /// Within-cluster sum of squared distances of the winning run.
    pub wcss: f64,
}

fn sq_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

fn point(points: &[f64], dim: usize, i: usize) -> &[f64] {
    &points[i * dim..(i + 1) * dim]
}

/// k-means++ seeding: subsequent centers are sampled proportionally to the
/// squared distance from the nearest center already chosen.
fn seed_centers<R: Rng>(points: &[f64], dim: usize, k: usize, rng: &mut R) -> Vec<f64> {
    let n = points.len() / dim;
    let mut centers = Vec::with_capacity(k * dim);
    let first = rng.gen_range(0..n);
    centers.extend_from_slice(point(points, dim, first));
    let mut d2: Vec<f64> = (0..n)
        .map(|i| sq_dist(point(points, dim, i), &centers[0..dim]))
        .collect();
    while centers.len() < k * dim {
        let total: f64 = d2.iter().sum();
        let chosen = if total > 0.0 {
            let mut target = rng.gen::<f64>() * total;
            let mut pick = n - 1;
            for (i, &w) in d2.iter().enumerate() {
                target -= w;
                if target <= 0.0 {
                    pick = i;
                    break;
                }
            }
            pick
        } else {
            // All mass sits on the chosen centers; any point works.
            rng.gen_range(0..n)
        };
        let c = point(points, dim, chosen).to_vec();
        for i in 0..n {
            d2[i] = d2[i].min(sq_dist(point(points, dim, i), &c));
        }
        centers.extend_from_slice(&c);
    }
    centers
}

fn lloyd(points: &[f64], dim: usize, k: usize, centers: &mut Vec<f64>, opts: &KmeansOptions) -> (Vec<u32>, f64) {
    let n = points.len() / dim;
    // Sentinel labels force the first assignment pass to count as a change.
    let mut labels = vec![u32::MAX; n];
    let mut prev_wcss = f64::INFINITY;
    let mut wcss = f64::INFINITY;
    for _ in 0..opts.max_iters.max(1) {
        // Assignment; ties go to the lowest center index.
        let mut changed = false;
        wcss = 0.0;
        for i in 0..n {
            let p = point(points, dim, i);
            let mut best = 0u32;
            let mut best_d = f64::INFINITY;
            for c in 0..k {
                let d = sq_dist(p, &centers[c * dim..(c + 1) * dim]);
                if d < best_d {
                    best_d = d;
                    best = c as u32;
                }
            }
            if labels[i] != best {
                labels[i] = best;
                changed = true;
            }
            wcss += best_d;
        }
        // Update.
        let mut counts = vec![0usize; k];
        centers.iter_mut().for_each(|c| *c = 0.0);
        for i in 0..n {
            let c = labels[i] as usize;
            counts[c] += 1;
            for d in 0..dim {
                centers[c * dim + d] += points[i * dim + d];
            }
        }
        let mut reseeded = false;
        for c in 0..k {
            if counts[c] > 0 {
                for d in 0..dim {
                    centers[c * dim + d] /= counts[c] as f64;
                }
            } else {
                // Revive an empty cluster at the point farthest from its
                // assigned center (deterministic: first max wins).
                let mut far_i = 0;
                let mut far_d = -1.0;
                for i in 0..n {
                    let l = labels[i] as usize;
                    let d = sq_dist(point(points, dim, i), &centers[l * dim..(l + 1) * dim]);
                    if d > far_d {
                        far_d = d;
                        far_i = i;
                    }
                }
                centers[c * dim..(c + 1) * dim].copy_from_slice(point(points, dim, far_i));
                reseeded = true;
            }
        }
        if reseeded {
            prev_wcss = f64::INFINITY;
            continue;
        }
        if !changed || (prev_wcss - wcss).abs() <= opts.rel_tol * wcss.max(f64::MIN_POSITIVE) {
            break;
        }
        prev_wcss = wcss;
    }
    (labels, wcss)
}

/// Clusters `n = points.len() / dim` rows into `k` groups.
pub fn kmeans(points: &[f64], dim: usize, k: usize, seed: u64, opts: &KmeansOptions) -> Result<KmeansFit> {
    if dim == 0 || points.len() % dim != 0 {
        return Err(Error::InvalidParameter(format!(
            "point buffer of {} values is not a multiple of dim {dim}",
            points.len()
        )));
    }
    let n = points.len() / dim;
    if k == 0 || k > n {
        return Err(Error::InvalidParameter(format!("k = {k} with {n} points")));
    }
    let mut best: Option<KmeansFit> = None;
    for restart in 0..opts.restarts.max(1) {
        let mut rng = rng::stream(seed, &[0x6b, restart as u64]);
        let mut centers = seed_centers(points, dim, k, &mut rng);
        let (labels, wcss) = lloyd(points, dim, k, &mut centers, opts);
        if best.as_ref().map_or(true, |b| wcss < b.wcss) {
            best = Some(KmeansFit { labels, wcss });
        }
    }
    Ok(best.unwrap())
}
