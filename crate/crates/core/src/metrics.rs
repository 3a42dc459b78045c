//! Partition-comparison metrics.
//!
//! Mutual information is measured in nats.  The adjusted score subtracts the
//! exact expectation of MI under random label permutations (hypergeometric
//! model with both cluster-size profiles fixed), so chance agreement scores
//! zero regardless of the number of communities.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::partition::Partition;

fn check_same_length(a: &Partition, b: &Partition) -> Result<usize> {
    if a.n() != b.n() {
        return Err(Error::InvalidParameter(format!(
            "partitions cover {} and {} nodes",
            a.n(),
            b.n()
        )));
    }
    if a.n() == 0 {
        return Err(Error::InvalidParameter("empty partitions".into()));
    }
    Ok(a.n())
}

/// Joint counts `n_ij` between two labelings.
fn contingency(a: &Partition, b: &Partition) -> Vec<Vec<u64>> {
    let mut table = vec![vec![0u64; b.q() as usize]; a.q() as usize];
    for (&la, &lb) in a.labels().iter().zip(b.labels().iter()) {
        table[la as usize][lb as usize] += 1;
    }
    table
}

/// Shannon entropy of a partition's community-size profile, in nats.
pub fn entropy(p: &Partition) -> f64 {
    let n = p.n() as f64;
    p.counts()
        .iter()
        .filter(|&&c| c > 0)
        .map(|&c| {
            let f = c as f64 / n;
            -f * f.ln()
        })
        .sum()
}

/// Mutual information between two partitions, in nats.
pub fn mutual_information(a: &Partition, b: &Partition) -> Result<f64> {
    let n = check_same_length(a, b)? as f64;
    let (ca, cb) = (a.counts(), b.counts());
    let mut mi = 0.0;
    for (i, row) in contingency(a, b).iter().enumerate() {
        for (j, &nij) in row.iter().enumerate() {
            if nij > 0 {
                let joint = nij as f64 / n;
                mi += joint * (n * nij as f64 / (ca[i] as f64 * cb[j] as f64)).ln();
            }
        }
    }
    Ok(mi)
}

/// Exact expectation of MI over uniformly random labelings with both
/// community-size profiles fixed (hypergeometric model).
pub fn expected_mutual_information(a: &Partition, b: &Partition) -> Result<f64> {
    let n = check_same_length(a, b)?;
    // Cumulative log-factorials: lf[k] = ln(k!).
    let mut lf = vec![0.0f64; n + 1];
    for k in 1..=n {
        lf[k] = lf[k - 1] + (k as f64).ln();
    }
    let nf = n as f64;
    let mut expectation = 0.0;
    for &ai in a.counts().iter().filter(|&&c| c > 0) {
        for &bj in b.counts().iter().filter(|&&c| c > 0) {
            let lo = 1.max((ai + bj).saturating_sub(n));
            let hi = ai.min(bj);
            for nij in lo..=hi {
                let info = (nij as f64 / nf) * (nf * nij as f64 / (ai as f64 * bj as f64)).ln();
                let log_prob = lf[ai] + lf[n - ai] + lf[bj] + lf[n - bj]
                    - lf[n]
                    - lf[nij]
                    - lf[ai - nij]
                    - lf[bj - nij]
                    - lf[(n + nij) - ai - bj];
                expectation += info * log_prob.exp();
            }
        }
    }
    Ok(expectation)
}

/// Adjusted mutual information:
/// `(MI - E[MI]) / (max(H(a), H(b)) - E[MI])`.
///
/// Degenerate cases: two single-community partitions agree perfectly (1);
/// if the denominator vanishes otherwise the score is 0.
pub fn ami(a: &Partition, b: &Partition) -> Result<f64> {
    check_same_length(a, b)?;
    let (ha, hb) = (entropy(a), entropy(b));
    if ha == 0.0 && hb == 0.0 {
        return Ok(1.0);
    }
    let mi = mutual_information(a, b)?;
    let emi = expected_mutual_information(a, b)?;
    let denom = ha.max(hb) - emi;
    if denom.abs() <= 1e-12 * ha.max(hb).max(1.0) {
        return Ok(0.0);
    }
    Ok((mi - emi) / denom)
}

/// A planted-vs-detected contingency table with detected columns aligned to
/// planted rows by a maximum-overlap assignment (display only; the counts
/// are unchanged, just reordered).
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConfusionMatrix {
    /// Planted communities (rows).
    pub rows: usize,
    /// Display columns: `max(rows, detected q)`; phantom columns are zero.
    pub cols: usize,
    /// Row-major counts after column alignment.
    pub counts: Vec<u64>,
}

impl ConfusionMatrix {
    pub fn get(&self, r: usize, c: usize) -> u64 {
        self.counts[r * self.cols + c]
    }

    /// Accumulates another aligned matrix (e.g. across replicates); the
    /// wider of the two layouts wins.
    pub fn add(&mut self, other: &ConfusionMatrix) {
        assert_eq!(self.rows, other.rows, "confusion matrices disagree on planted q");
        if other.cols > self.cols {
            let mut grown = vec![0u64; self.rows * other.cols];
            for r in 0..self.rows {
                for c in 0..self.cols {
                    grown[r * other.cols + c] = self.get(r, c);
                }
            }
            self.counts = grown;
            self.cols = other.cols;
        }
        for r in 0..other.rows {
            for c in 0..other.cols {
                self.counts[r * self.cols + c] += other.get(r, c);
            }
        }
    }

    /// Row-normalized proportions; all-zero rows normalize to zero.
    pub fn row_normalized(&self) -> Vec<Vec<f64>> {
        (0..self.rows)
            .map(|r| {
                let total: u64 = (0..self.cols).map(|c| self.get(r, c)).sum();
                (0..self.cols)
                    .map(|c| {
                        if total == 0 {
                            0.0
                        } else {
                            self.get(r, c) as f64 / total as f64
                        }
                    })
                    .collect()
            })
            .collect()
    }
}

/// Maximum-weight assignment of rows to columns via subset DP.
/// Returns `assign[r] = Some(c)` for matched rows.  Sizes are capped at 20
/// columns, ample for community counts.
fn max_weight_assignment(weights: &[Vec<u64>]) -> Vec<Option<usize>> {
    let rows = weights.len();
    let cols = if rows == 0 { 0 } else { weights[0].len() };
    assert!(cols <= 20, "assignment table too wide ({cols} columns)");
    let full = 1usize << cols;
    // dp[mask]: best total weight assigning rows 0..popcount(mask) to the
    // columns in mask; choice[mask] records the column used by the last row.
    let mut dp = vec![f64::NEG_INFINITY; full];
    let mut choice = vec![usize::MAX; full];
    dp[0] = 0.0;
    let matched = rows.min(cols);
    for mask in 0..full {
        let r = (mask as u32).count_ones() as usize;
        if dp[mask] == f64::NEG_INFINITY || r >= matched {
            continue;
        }
        for c in 0..cols {
            if mask & (1 << c) == 0 {
                let next = mask | (1 << c);
                let w = dp[mask] + weights[r][c] as f64;
                if w > dp[next] {
                    dp[next] = w;
                    choice[next] = c;
                }
            }
        }
    }
    // Best mask with exactly `matched` bits.
    let mut best_mask = 0;
    let mut best = f64::NEG_INFINITY;
    for mask in 0..full {
        if (mask as u32).count_ones() as usize == matched && dp[mask] > best {
            best = dp[mask];
            best_mask = mask;
        }
    }
    let mut assign = vec![None; rows];
    let mut mask = best_mask;
    for r in (0..matched).rev() {
        let c = choice[mask];
        assign[r] = Some(c);
        mask &= !(1 << c);
    }
    assign
}

/// Display order of detected columns against `slots` reference rows:
/// `order[s]` is the detected column assigned to row `s` by maximum-weight
/// matching on `raw`, with unmatched detected columns filling the remaining
/// slots in index order and `usize::MAX` marking phantom slots.
fn display_order(raw: &[Vec<u64>], slots: usize, det_cols: usize) -> Vec<usize> {
    let assign = max_weight_assignment(raw);
    let cols = slots.max(det_cols);
    let mut order = vec![usize::MAX; cols];
    let mut used = vec![false; det_cols];
    for (r, &a) in assign.iter().enumerate() {
        if let Some(c) = a {
            order[r] = c;
            used[c] = true;
        }
    }
    let mut leftovers = (0..det_cols).filter(|&c| !used[c]);
    for slot in order.iter_mut() {
        if *slot == usize::MAX {
            if let Some(c) = leftovers.next() {
                *slot = c;
            }
        }
    }
    order
}

/// Lays the raw planted-by-detected counts out in `order`'s column slots.
fn counts_in_order(raw: &[Vec<u64>], order: &[usize]) -> ConfusionMatrix {
    let (rows, cols) = (raw.len(), order.len());
    let mut counts = vec![0u64; rows * cols];
    for r in 0..rows {
        for (pos, &c) in order.iter().enumerate() {
            if c != usize::MAX {
                counts[r * cols + pos] = raw[r][c];
            }
        }
    }
    ConfusionMatrix { rows, cols, counts }
}

/// Builds the aligned confusion matrix between a planted partition and a
/// detected one: detected column `c` is shown at position `r` when the
/// assignment pairs it with planted community `r`; unmatched detected
/// columns follow in index order.
pub fn confusion(planted: &Partition, detected: &Partition) -> Result<ConfusionMatrix> {
    check_same_length(planted, detected)?;
    let raw = contingency(planted, detected);
    let (rows, det_cols) = (planted.q() as usize, detected.q() as usize);
    let order = display_order(&raw, rows, det_cols);
    Ok(counts_in_order(&raw, &order))
}

/// Accumulates confusion matrices over replicate detections of one planted
/// structure, keeping detected-column identities consistent across
/// replicates.
///
/// Detected labels are arbitrary per replicate, so summing independently
/// aligned matrices smears any detected community that two planted rows tie
/// over: a cluster covering two same-size planted communities lands on
/// either community's slot depending on sampling noise, and the sum shows
/// two half-weight columns where every single replicate shows one.  The
/// accumulator instead aligns all replicates to a reference replicate (the
/// first one detecting the modal number of communities, ties toward fewer),
/// and only the reference is aligned to the planted rows.
pub struct ConfusionAccumulator {
    planted: Partition,
    detections: Vec<Partition>,
}

impl ConfusionAccumulator {
    pub fn new(planted: Partition) -> Self {
        ConfusionAccumulator { planted, detections: Vec::new() }
    }

    /// Records one replicate's detected partition.
    pub fn push(&mut self, detected: Partition) -> Result<()> {
        check_same_length(&self.planted, &detected)?;
        self.detections.push(detected);
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.detections.len()
    }

    pub fn is_empty(&self) -> bool {
        self.detections.is_empty()
    }

    /// Index of the reference replicate: the first detection with the modal
    /// community count, ties between counts resolved toward fewer
    /// communities.
    fn reference(&self) -> usize {
        let mut freq = std::collections::BTreeMap::new();
        for det in &self.detections {
            *freq.entry(det.q()).or_insert(0u32) += 1;
        }
        let modal_q = freq
            .iter()
            .max_by(|(qa, ca), (qb, cb)| ca.cmp(cb).then(qb.cmp(qa)))
            .map(|(&q, _)| q)
            .expect("reference needs at least one detection");
        self.detections.iter().position(|d| d.q() == modal_q).unwrap()
    }

    /// The summed matrix over all recorded replicates, `None` when empty.
    pub fn finish(&self) -> Option<ConfusionMatrix> {
        if self.detections.is_empty() {
            return None;
        }
        let reference = &self.detections[self.reference()];
        let rows = self.planted.q() as usize;
        let ref_raw = contingency(&self.planted, reference);
        let ref_order = display_order(&ref_raw, rows, reference.q() as usize);
        let mut total: Option<ConfusionMatrix> = None;
        for det in &self.detections {
            // Where each reference column sits, this replicate's matched
            // column goes; its unmatched columns fill leftover slots.
            let cross = contingency(reference, det);
            let matched = max_weight_assignment(&cross);
            let det_cols = det.q() as usize;
            let mut order: Vec<usize> = ref_order
                .iter()
                .map(|&ref_col| match ref_col {
                    usize::MAX => usize::MAX,
                    c => matched[c].unwrap_or(usize::MAX),
                })
                .collect();
            let mut leftovers =
                (0..det_cols).filter(|&c| !order.contains(&c)).collect::<Vec<_>>().into_iter();
            for slot in order.iter_mut() {
                if *slot == usize::MAX {
                    if let Some(c) = leftovers.next() {
                        *slot = c;
                    }
                }
            }
            order.extend(leftovers);
            let raw = contingency(&self.planted, det);
            let aligned = counts_in_order(&raw, &order);
            match &mut total {
                Some(acc) => acc.add(&aligned),
                None => total = Some(aligned),
            }
        }
        total
    }
}
