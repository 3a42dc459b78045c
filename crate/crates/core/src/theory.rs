//! Closed-form spectral theory for the minority-community block model.
//!
//! A model splits `n` nodes into `q_s` small ("minority") communities that
//! together hold a fraction `rho` of the nodes and `q_b` large ("majority")
//! communities holding the rest, with `rho/q_s <= (1-rho)/q_b`.  Edges are
//! drawn independently per node pair from a block-structured probability
//! matrix `Omega`.  Detectability is governed by the eigenvalues of the
//! signal matrix `Q = N * Omega`, where `N` is the diagonal matrix of
//! expected community sizes: an eigenvalue `lam_r` makes its modes
//! recoverable by spectral methods exactly when `lam_r^2 > lam_1`.
//!
//! Two parameterizations keep the mean degree `d` fixed while the contrast
//! `delta` between in- and out-probabilities varies:
//!
//! * [`Scenario::ConsistentPout`] — one out-probability everywhere; minority
//!   and majority nodes have different expected degrees.
//! * [`Scenario::ConsistentDegree`] — separate within-class and cross-class
//!   out-probabilities chosen so every node has expected degree `d`
//!   (requires `rho < 1/2`).
//!
//! This module provides the model types, exact eigenvalues with
//! multiplicities, the derived signal-to-noise ratios, the detectability
//! phase they imply, and a dense reference spectrum used to validate the
//! closed forms.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// How edge probabilities are parameterized as `delta` varies at fixed `d`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Scenario {
    /// One out-probability for all distinct community pairs.
    ConsistentPout,
    /// Within-class and cross-class out-probabilities tuned so minority and
    /// majority nodes share the same expected degree.
    ConsistentDegree,
}

impl std::str::FromStr for Scenario {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "consistent-pout" => Ok(Self::ConsistentPout),
            "consistent-degree" => Ok(Self::ConsistentDegree),
            other => Err(Error::InvalidParameter(format!(
                "unknown scenario `{other}` (expected consistent-pout or consistent-degree)"
            ))),
        }
    }
}

impl std::fmt::Display for Scenario {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Self::ConsistentPout => "consistent-pout",
            Self::ConsistentDegree => "consistent-degree",
        })
    }
}

/// A minority-community block model.
///
/// Fields are public for ergonomic construction in tests, but use
/// [`MinorityModel::new`] to get the bounds checked.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MinorityModel {
    /// Number of nodes.
    pub n: u32,
    /// Number of minority communities (each of expected size `n*rho/q_s`).
    pub q_s: u32,
    /// Number of majority communities (each of expected size `n*(1-rho)/q_b`).
    pub q_b: u32,
    /// Total fraction of nodes in minority communities.
    pub rho: f64,
    /// Probability contrast `p_in - p_out` (within-class out-probability).
    pub delta: f64,
    /// Target mean degree.
    pub d: f64,
    pub scenario: Scenario,
}

impl MinorityModel {
    pub fn new(
        n: u32,
        q_s: u32,
        q_b: u32,
        rho: f64,
        delta: f64,
        d: f64,
        scenario: Scenario,
    ) -> Result<Self> {
        if n < 2 {
            return Err(Error::InvalidParameter("n must be at least 2".into()));
        }
        if q_s == 0 || q_b == 0 {
            return Err(Error::InvalidParameter("q_s and q_b must be at least 1".into()));
        }
        let q = (q_s + q_b) as f64;
        if !rho.is_finite() || rho <= 0.0 {
            return Err(Error::InvalidParameter(format!("rho = {rho} must be in (0, q_s/q]")));
        }
        let rho_max = q_s as f64 / q;
        if rho > rho_max {
            return Err(Error::Infeasible(format!(
                "rho = {rho} exceeds the minority bound q_s/(q_s+q_b) = {rho_max}"
            )));
        }
        if scenario == Scenario::ConsistentDegree && rho >= 0.5 {
            return Err(Error::Infeasible(format!(
                "consistent-degree models require rho < 1/2 (got {rho})"
            )));
        }
        if !d.is_finite() || d <= 0.0 || d > (n - 1) as f64 {
            return Err(Error::InvalidParameter(format!(
                "mean degree d = {d} must lie in (0, n-1]"
            )));
        }
        if !delta.is_finite() {
            return Err(Error::InvalidParameter("delta must be finite".into()));
        }
        Ok(Self { n, q_s, q_b, rho, delta, d, scenario })
    }

    /// Total number of communities.
    pub fn q(&self) -> u32 {
        self.q_s + self.q_b
    }

    /// Size imbalance `rho/q_s - (1-rho)/q_b`; nonpositive for valid models,
    /// strictly negative when minorities are strictly smaller.
    pub fn epsilon(&self) -> f64 {
        self.rho / self.q_s as f64 - (1.0 - self.rho) / self.q_b as f64
    }

    /// Expected community fractions, minorities first (sums to 1).
    pub fn community_fractions(&self) -> Vec<f64> {
        let mut f = vec![self.rho / self.q_s as f64; self.q_s as usize];
        f.extend(vec![(1.0 - self.rho) / self.q_b as f64; self.q_b as usize]);
        f
    }
}

/// Edge probabilities realizing a model.
///
/// `p_out1` applies between distinct communities of the same class and
/// `p_out2` between classes; the consistent-`p_out` scenario uses one value
/// for both.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EdgeProbabilities {
    pub p_in: f64,
    pub p_out1: f64,
    pub p_out2: f64,
}

impl EdgeProbabilities {
    pub fn validated(self) -> Result<Self> {
        for (name, v) in [("p_in", self.p_in), ("p_out1", self.p_out1), ("p_out2", self.p_out2)] {
            if !(0.0..=1.0).contains(&v) || !v.is_finite() {
                return Err(Error::Infeasible(format!("{name} = {v} is outside [0, 1]")));
            }
        }
        Ok(self)
    }
}

/// Detectability phases, ordered by how much structure is recoverable.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Phase {
    /// No community structure is recoverable.
    Undetectable,
    /// Some partition correlates with the planted one, but minority
    /// communities are not separated from majorities.
    Detectable,
    /// Minority nodes separate from majority nodes as one merged group.
    Distinguishable,
    /// Every planted community, minority ones included, is recoverable.
    Resolvable,
}

impl std::fmt::Display for Phase {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Self::Undetectable => "undetectable",
            Self::Detectable => "detectable",
            Self::Distinguishable => "distinguishable",
            Self::Resolvable => "resolvable",
        })
    }
}

/// Closed-form spectrum of the signal matrix, with derived ratios.
///
/// Eigenvalues are labeled ordinally by non-increasing magnitude after
/// dropping multiplicity-zero lines and merging exactly equal values, so
/// `lambda2` is always "the second line" regardless of which closed form
/// produced it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpectrumReport {
    /// Leading eigenvalue (value, multiplicity).
    pub lambda1: (f64, u32),
    pub lambda2: Option<(f64, u32)>,
    pub lambda3: Option<(f64, u32)>,
    pub lambda4: Option<(f64, u32)>,
    /// Square root of the quadratic discriminant pairing the leading and
    /// trailing scalar modes; `None` when the scenario has no such pair.
    pub sqrt_disc: Option<f64>,
    /// `lambda_k^2 / lambda_1` where `lambda_k` is the k-th eigenvalue
    /// position counting multiplicity, so coinciding lines fill several
    /// consecutive positions with one value.
    pub snr2: Option<f64>,
    pub snr3: Option<f64>,
    pub snr4: Option<f64>,
    pub phase: Phase,
}

impl SpectrumReport {
    /// All eigenvalues expanded by multiplicity, in ordinal order.
    pub fn expanded(&self) -> Vec<f64> {
        let mut out = Vec::new();
        for line in [Some(self.lambda1), self.lambda2, self.lambda3, self.lambda4]
            .into_iter()
            .flatten()
        {
            out.extend(std::iter::repeat(line.0).take(line.1 as usize));
        }
        out
    }
}

/// Edge probabilities for `model` at its target mean degree.
pub fn edge_probabilities(model: &MinorityModel) -> Result<EdgeProbabilities> {
    let probs = match model.scenario {
        Scenario::ConsistentPout => {
            let g = weight_sum(model);
            let p_out = model.d / model.n as f64 - g * model.delta;
            EdgeProbabilities { p_in: p_out + model.delta, p_out1: p_out, p_out2: p_out }
        }
        Scenario::ConsistentDegree => {
            let (k1, k2) = degree_matching_coefficients(model);
            let base = model.d / model.n as f64;
            EdgeProbabilities {
                p_in: base + (1.0 - k1) * model.delta,
                p_out1: base - k1 * model.delta,
                p_out2: base + k2 * model.delta,
            }
        }
    };
    probs.validated()
}

/// `g = (1-rho)^2/q_b + rho^2/q_s`, the quadratic community-size weight.
fn weight_sum(model: &MinorityModel) -> f64 {
    let rho = model.rho;
    (1.0 - rho).powi(2) / model.q_b as f64 + rho * rho / model.q_s as f64
}

/// Coefficients `(k1, k2)` such that equal expected degrees need
/// `p_out1 = d/n - k1*delta` and `p_out2 = d/n + k2*delta`.
fn degree_matching_coefficients(model: &MinorityModel) -> (f64, f64) {
    let rho = model.rho;
    let denom = 1.0 - 2.0 * rho;
    let k1 = ((1.0 - rho).powi(2) / model.q_b as f64 - rho * rho / model.q_s as f64) / denom;
    let k2 = rho * (1.0 - rho) * (1.0 / model.q_b as f64 - 1.0 / model.q_s as f64) / denom;
    (k1, k2)
}

/// The interval of `delta` values for which all edge probabilities stay in
/// [0, 1] at the model's `(n, d, rho, q_s, q_b)`.
pub fn feasible_delta_range(model: &MinorityModel) -> Result<(f64, f64)> {
    let base = model.d / model.n as f64;
    // Each probability is `base + c * delta`; intersect the delta-intervals.
    let coefficients: Vec<f64> = match model.scenario {
        Scenario::ConsistentPout => {
            let g = weight_sum(model);
            vec![-g, 1.0 - g]
        }
        Scenario::ConsistentDegree => {
            let (k1, k2) = degree_matching_coefficients(model);
            vec![-k1, k2, 1.0 - k1]
        }
    };
    let (mut lo, mut hi) = (f64::NEG_INFINITY, f64::INFINITY);
    for c in coefficients {
        if c == 0.0 {
            if !(0.0..=1.0).contains(&base) {
                return Err(Error::Infeasible(format!("d/n = {base} outside [0, 1]")));
            }
            continue;
        }
        let (a, b) = ((0.0 - base) / c, (1.0 - base) / c);
        let (a, b) = if a <= b { (a, b) } else { (b, a) };
        lo = lo.max(a);
        hi = hi.min(b);
    }
    if lo > hi {
        return Err(Error::Infeasible(format!(
            "no delta keeps all edge probabilities in [0, 1] (empty interval [{lo}, {hi}])"
        )));
    }
    Ok((lo, hi))
}

/// The block edge-probability matrix `Omega` (minorities first).
pub fn probability_matrix(model: &MinorityModel, probs: &EdgeProbabilities) -> DMatrix<f64> {
    let q = model.q() as usize;
    let q_s = model.q_s as usize;
    DMatrix::from_fn(q, q, |r, s| {
        if r == s {
            probs.p_in
        } else if (r < q_s) == (s < q_s) {
            probs.p_out1
        } else {
            probs.p_out2
        }
    })
}

/// The signal matrix `Q = N * Omega` (minorities first), built from explicit
/// edge probabilities.
pub fn signal_matrix(model: &MinorityModel, probs: &EdgeProbabilities) -> DMatrix<f64> {
    let fractions = model.community_fractions();
    let n = model.n as f64;
    let mut omega = probability_matrix(model, probs);
    for r in 0..model.q() as usize {
        for s in 0..model.q() as usize {
            omega[(r, s)] *= n * fractions[r];
        }
    }
    omega
}

/// Eigenvalues of the signal matrix via dense decomposition of the
/// similarity-equivalent symmetric form `N^(1/2) Omega N^(1/2)`, sorted by
/// non-increasing magnitude.  This is the reference path the closed forms
/// are validated against.
pub fn dense_spectrum(model: &MinorityModel, probs: &EdgeProbabilities) -> Vec<f64> {
    let q = model.q() as usize;
    let fractions = model.community_fractions();
    let quotient = signal_matrix(model, probs);
    let sym = DMatrix::from_fn(q, q, |r, s| {
        // Q[r][s] = n f_r p_rs, so n sqrt(f_r) p_rs sqrt(f_s) = Q[r][s] * sqrt(f_s/f_r).
        quotient[(r, s)] * (fractions[s] / fractions[r]).sqrt()
    });
    let mut vals: Vec<f64> = sym.symmetric_eigen().eigenvalues.iter().copied().collect();
    vals.sort_by(|a, b| b.abs().partial_cmp(&a.abs()).unwrap());
    vals
}

/// Labeled eigenvalue lines before ordinal sorting: (value, multiplicity).
fn labeled_lines(model: &MinorityModel, probs: &EdgeProbabilities) -> (Vec<(f64, u32)>, Option<f64>) {
    let n = model.n as f64;
    let rho = model.rho;
    let (q_s, q_b) = (model.q_s as f64, model.q_b as f64);
    let delta = model.delta;
    match model.scenario {
        Scenario::ConsistentPout => {
            let p_out = probs.p_out1;
            let eps_delta = model.epsilon() * delta;
            let a = (rho / q_s + (1.0 - rho) / q_b) * delta;
            let disc = p_out * p_out
                + eps_delta * eps_delta
                + 2.0 * (2.0 * rho - 1.0) * p_out * eps_delta;
            let s = disc.sqrt();
            let lines = vec![
                (0.5 * n * (a + p_out + s), 1),
                (n * (1.0 - rho) * delta / q_b, model.q_b - 1),
                (0.5 * n * (a + p_out - s), 1),
                (n * rho * delta / q_s, model.q_s - 1),
            ];
            (lines, Some(s))
        }
        Scenario::ConsistentDegree => {
            let lines = vec![
                (model.d, 1),
                (n * (1.0 - rho) * delta / q_b, model.q_b - 1),
                (n * rho * delta / q_s, model.q_s - 1),
                (
                    rho * (1.0 - rho) / (1.0 - 2.0 * rho) * (1.0 / q_s - 1.0 / q_b) * n * delta,
                    1,
                ),
            ];
            (lines, None)
        }
    }
}

/// Assembles a report from labeled lines: drops multiplicity-zero lines,
/// merges exactly equal values, sorts by non-increasing magnitude, and
/// classifies the phase.
fn report_from_lines(lines: Vec<(f64, u32)>, sqrt_disc: Option<f64>) -> Result<SpectrumReport> {
    let mut merged: Vec<(f64, u32)> = Vec::new();
    for (v, m) in lines.into_iter().filter(|&(_, m)| m > 0) {
        match merged.iter_mut().find(|(w, _)| *w == v) {
            Some((_, mm)) => *mm += m,
            None => merged.push((v, m)),
        }
    }
    merged.sort_by(|a, b| b.0.abs().partial_cmp(&a.0.abs()).unwrap());
    let lambda1 = merged[0];
    if lambda1.0 <= 0.0 {
        return Err(Error::Infeasible(format!(
            "leading eigenvalue {} is not positive; no meaningful spectrum",
            lambda1.0
        )));
    }
    // Ratios are positional: the k-th eigenvalue counting multiplicity, so a
    // line of multiplicity three fills positions 2..4 with its own value and
    // boundary cases where lines coincide classify the same way as their
    // perturbed neighbours.
    let expanded: Vec<f64> = merged
        .iter()
        .flat_map(|&(v, m)| std::iter::repeat(v).take(m as usize))
        .collect();
    let snr = |position: usize| expanded.get(position).map(|v| v * v / lambda1.0);
    let (snr2, snr3, snr4) = (snr(1), snr(2), snr(3));
    let above = |s: Option<f64>| s.is_some_and(|v| v > 1.0);
    let phase = if !above(snr2) {
        Phase::Undetectable
    } else if !above(snr3) {
        Phase::Detectable
    } else if !above(snr4) {
        Phase::Distinguishable
    } else {
        Phase::Resolvable
    };
    Ok(SpectrumReport {
        lambda1,
        lambda2: merged.get(1).copied(),
        lambda3: merged.get(2).copied(),
        lambda4: merged.get(3).copied(),
        sqrt_disc,
        snr2,
        snr3,
        snr4,
        phase,
    })
}

/// Closed-form spectrum of `model` at its derived edge probabilities.
pub fn closed_form_spectrum(model: &MinorityModel) -> Result<SpectrumReport> {
    let probs = edge_probabilities(model)?;
    let (lines, sqrt_disc) = labeled_lines(model, &probs);
    report_from_lines(lines, sqrt_disc)
}

/// The detectability signal-to-noise ratio `lambda_2^2 / lambda_1`.
pub fn snr(model: &MinorityModel) -> Result<f64> {
    let report = closed_form_spectrum(model)?;
    report.snr2.ok_or_else(|| {
        Error::Infeasible("model has a single eigenvalue line; no contrast to detect".into())
    })
}

/// Spectrum of the model with all majority communities merged into one
/// (consistent-degree only): the merged block keeps mean degree `d`, the
/// minority lines survive, and the class-contrast line takes the slot the
/// merged majorities vacate.
pub fn merged_majority_spectrum(model: &MinorityModel) -> Result<SpectrumReport> {
    if model.scenario != Scenario::ConsistentDegree {
        return Err(Error::InvalidParameter(
            "merged-majority spectrum is defined for the consistent-degree scenario".into(),
        ));
    }
    let n = model.n as f64;
    let rho = model.rho;
    let (q_s, q_b) = (model.q_s as f64, model.q_b as f64);
    let delta = model.delta;
    let lines = vec![
        (model.d, 1),
        (n * rho * delta / q_s, model.q_s - 1),
        (
            rho * (1.0 - rho) / (1.0 - 2.0 * rho) * (1.0 / q_s - 1.0 / q_b) * n * delta,
            1,
        ),
    ];
    report_from_lines(lines, None)
}

/// Signal matrix of the merged-majority model: `q_s + 1` communities where
/// the merged majority block has internal probability
/// `(p_in + (q_b-1) p_out1)/q_b`.
pub fn merged_signal_matrix(model: &MinorityModel, probs: &EdgeProbabilities) -> Result<DMatrix<f64>> {
    if model.scenario != Scenario::ConsistentDegree {
        return Err(Error::InvalidParameter(
            "merged-majority matrix is defined for the consistent-degree scenario".into(),
        ));
    }
    let q_s = model.q_s as usize;
    let dim = q_s + 1;
    let n = model.n as f64;
    let rho = model.rho;
    let q_b = model.q_b as f64;
    let p_merged = (probs.p_in + (q_b - 1.0) * probs.p_out1) / q_b;
    let fraction = |r: usize| if r < q_s { rho / q_s as f64 } else { 1.0 - rho };
    Ok(DMatrix::from_fn(dim, dim, |r, s| {
        let p = if r < q_s && s < q_s {
            if r == s {
                probs.p_in
            } else {
                probs.p_out1
            }
        } else if r >= q_s && s >= q_s {
            p_merged
        } else {
            probs.p_out2
        };
        n * fraction(r) * p
    }))
}

/// Eigenvalues of the merged-majority signal matrix via the dense reference
/// path, sorted by non-increasing magnitude.
pub fn dense_merged_spectrum(model: &MinorityModel, probs: &EdgeProbabilities) -> Result<Vec<f64>> {
    let q_s = model.q_s as usize;
    let rho = model.rho;
    let fraction = |r: usize| if r < q_s { rho / q_s as f64 } else { 1.0 - rho };
    let quotient = merged_signal_matrix(model, probs)?;
    let dim = q_s + 1;
    let sym = DMatrix::from_fn(dim, dim, |r, s| {
        quotient[(r, s)] * (fraction(s) / fraction(r)).sqrt()
    });
    let mut vals: Vec<f64> = sym.symmetric_eigen().eigenvalues.iter().copied().collect();
    vals.sort_by(|a, b| b.abs().partial_cmp(&a.abs()).unwrap());
    Ok(vals)
}

/// Leading eigenvalue, on the `Q/n` scale, of the minority-only signal
/// operator under the constant (uniform within class) mode:
/// `(rho/q_s) * (delta + q_s * p_out1)`.  The full matrix `Q/n` has this as
/// an exact eigenvalue precisely when `p_out1 = 0` or when it coincides with
/// the majority-contrast line, i.e. `((1-rho)/q_b - rho/q_s) delta = rho * p_out1`.
pub fn minority_constant_mode(model: &MinorityModel, probs: &EdgeProbabilities) -> f64 {
    let rho = model.rho;
    let q_s = model.q_s as f64;
    rho / q_s * (model.delta + q_s * probs.p_out1)
}

/// Expected degrees by class.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DegreeReport {
    /// Expected degree of a minority node.
    pub d_minority: f64,
    /// Expected degree of a majority node.
    pub d_majority: f64,
    /// Network mean `rho*d_minority + (1-rho)*d_majority`.
    pub d_mean: f64,
}

/// Expected degrees implied by explicit edge probabilities.
pub fn degree_report(model: &MinorityModel, probs: &EdgeProbabilities) -> DegreeReport {
    let n = model.n as f64;
    let rho = model.rho;
    let (q_s, q_b) = (model.q_s as f64, model.q_b as f64);
    let d_minority = n * rho / q_s * (probs.p_in - probs.p_out1)
        + n * rho * probs.p_out1
        + n * (1.0 - rho) * probs.p_out2;
    let d_majority = n * (1.0 - rho) / q_b * (probs.p_in - probs.p_out1)
        + n * rho * probs.p_out2
        + n * (1.0 - rho) * probs.p_out1;
    DegreeReport {
        d_minority,
        d_majority,
        d_mean: rho * d_minority + (1.0 - rho) * d_majority,
    }
}

/// Recipe for sampling a minority model as an induced subgraph of a larger
/// symmetric block model with the same `(p_in, p_out)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BackgroundPlan {
    /// Nodes in the symmetric background network.
    pub n_background: u32,
    /// Size of each of the `q_s + q_b` equal background communities.
    pub community_size: u32,
    /// Fraction of each designated-minority community to keep.
    pub keep_fraction: f64,
    /// Nodes kept from each minority community.
    pub keep_minority: u32,
    /// Nodes kept from each majority community.
    pub keep_majority: u32,
    pub probs: EdgeProbabilities,
}

/// Plans the symmetric background construction (consistent-`p_out` only:
/// the construction needs a single out-probability).
pub fn plan_background(model: &MinorityModel) -> Result<BackgroundPlan> {
    if model.scenario != Scenario::ConsistentPout {
        return Err(Error::InvalidParameter(
            "background construction requires the consistent-p_out scenario".into(),
        ));
    }
    let probs = edge_probabilities(model)?;
    let n = model.n as f64;
    let rho = model.rho;
    let (q_s, q_b) = (model.q_s as f64, model.q_b as f64);
    let weight = q_b * rho + q_s * (1.0 - rho);
    let keep_fraction = q_b * rho / weight;
    let n_background = n * (q_s + q_b) * weight / (q_s * q_b);
    let community_size = (n_background / (q_s + q_b)).round_ties_even() as u32;
    let size = community_size as f64;
    Ok(BackgroundPlan {
        n_background: community_size * model.q(),
        community_size,
        keep_fraction,
        keep_minority: (keep_fraction * size).round_ties_even() as u32,
        keep_majority: ((1.0 - keep_fraction) * size).round_ties_even() as u32,
        probs,
    })
}
