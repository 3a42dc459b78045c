//! Uniform dispatch over the detection pipelines.
//!
//! A [`Method`] pairs an inference engine ([`Detector`]) with a rule for
//! choosing the number of communities ([`OrderMethod`]).  Not every pairing
//! makes sense: minimum-free-energy selection is defined by the belief
//! propagation fit itself, so it cannot drive the spectral detector.  The
//! supported combinations are
//!
//! | method    | order estimate            | partition                     |
//! |-----------|---------------------------|-------------------------------|
//! | `bh+nec`  | nonpositive Bethe Hessian eigenvalue count | spectral embedding |
//! | `bh+mdl`  | description-length scan   | spectral embedding            |
//! | `bp+mfe`  | free-energy scan          | EM marginals                  |
//! | `bp+mdl`  | description-length scan   | EM marginals                  |
//! | `bp+nec`  | nonpositive Bethe Hessian eigenvalue count | EM marginals |
//!
//! `bp+nec` is a hybrid: the spectrum fixes the order, EM fits at it.

use serde::{Deserialize, Serialize};

use crate::bp::{self, EmOptions, MfeOptions, OrderSelectionTrace};
use crate::error::{Error, Result};
use crate::graphgen::SparseGraph;
use crate::mdl::{self, DlConvention, MdlTrace};
use crate::partition::Partition;
use crate::rng;
use crate::spectral::{self, BhDetection};

/// Inference engine producing the partition.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Detector {
    /// Bethe Hessian spectral embedding.
    Bh,
    /// Belief propagation with EM parameter learning.
    Bp,
}

/// Rule estimating the number of communities.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum OrderMethod {
    /// Count of nonpositive Bethe Hessian eigenvalues.
    Nec,
    /// Minimum Bethe free energy over candidate orders.
    Mfe,
    /// Minimum description length over candidate orders.
    Mdl,
}

/// A detector / order-selection pairing.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Method {
    pub detector: Detector,
    pub order: OrderMethod,
}

impl Method {
    pub const BH_NEC: Method = Method { detector: Detector::Bh, order: OrderMethod::Nec };
    pub const BH_MDL: Method = Method { detector: Detector::Bh, order: OrderMethod::Mdl };
    pub const BP_MFE: Method = Method { detector: Detector::Bp, order: OrderMethod::Mfe };
    pub const BP_MDL: Method = Method { detector: Detector::Bp, order: OrderMethod::Mdl };
    pub const BP_NEC: Method = Method { detector: Detector::Bp, order: OrderMethod::Nec };

    /// All supported pairings, in the order used for stable numbering.
    pub const ALL: [Method; 5] =
        [Method::BH_NEC, Method::BH_MDL, Method::BP_MFE, Method::BP_MDL, Method::BP_NEC];

    /// Rejects the one unsupported pairing.
    pub fn validate(&self) -> Result<()> {
        if self.detector == Detector::Bh && self.order == OrderMethod::Mfe {
            return Err(Error::InvalidParameter(
                "bh+mfe is not a method: free-energy selection needs a belief propagation fit"
                    .into(),
            ));
        }
        Ok(())
    }

    /// Stable small integer identifying the method in seed derivations and
    /// output ordering.  Appending new methods must not renumber old ones.
    pub fn id(&self) -> u64 {
        match (self.detector, self.order) {
            (Detector::Bh, OrderMethod::Nec) => 0,
            (Detector::Bh, OrderMethod::Mdl) => 1,
            (Detector::Bp, OrderMethod::Mfe) => 2,
            (Detector::Bp, OrderMethod::Mdl) => 3,
            (Detector::Bp, OrderMethod::Nec) => 4,
            (Detector::Bh, OrderMethod::Mfe) => u64::MAX,
        }
    }
}

impl std::str::FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let (det, ord) = s.split_once('+').ok_or_else(|| {
            Error::InvalidParameter(format!(
                "method `{s}` is not of the form detector+order (e.g. bh+nec)"
            ))
        })?;
        let detector = match det {
            "bh" => Detector::Bh,
            "bp" => Detector::Bp,
            other => {
                return Err(Error::InvalidParameter(format!(
                    "unknown detector `{other}` (expected bh or bp)"
                )))
            }
        };
        let order = match ord {
            "nec" => OrderMethod::Nec,
            "mfe" => OrderMethod::Mfe,
            "mdl" => OrderMethod::Mdl,
            other => {
                return Err(Error::InvalidParameter(format!(
                    "unknown order rule `{other}` (expected nec, mfe or mdl)"
                )))
            }
        };
        let method = Method { detector, order };
        method.validate()?;
        Ok(method)
    }
}

impl std::fmt::Display for Method {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let det = match self.detector {
            Detector::Bh => "bh",
            Detector::Bp => "bp",
        };
        let ord = match self.order {
            OrderMethod::Nec => "nec",
            OrderMethod::Mfe => "mfe",
            OrderMethod::Mdl => "mdl",
        };
        write!(f, "{det}+{ord}")
    }
}

impl Serialize for Method {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        serializer.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for Method {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// Tuning knobs shared by all methods.
#[derive(Debug, Clone)]
pub struct DetectOptions {
    /// Largest order scanned by `mdl` and `mfe` selection.
    pub q_max: u32,
    /// EM restarts per candidate order for the belief propagation methods.
    pub bp_restarts: usize,
    pub em: EmOptions,
    pub dl_convention: DlConvention,
}

impl Default for DetectOptions {
    fn default() -> Self {
        DetectOptions {
            q_max: 6,
            bp_restarts: 5,
            em: EmOptions::default(),
            dl_convention: DlConvention::default(),
        }
    }
}

impl DetectOptions {
    fn mfe(&self) -> MfeOptions {
        MfeOptions {
            q_max: self.q_max,
            restarts: self.bp_restarts,
            em: self.em.clone(),
            ..MfeOptions::default()
        }
    }
}

/// Method-specific diagnostics accompanying a detection.
#[derive(Debug, Clone)]
pub enum MethodOutput {
    /// Spectral detection; also produced as the first stage of `bp+nec`.
    Bh(BhDetection),
    Mdl(MdlTrace),
    Mfe(OrderSelectionTrace),
}

/// A detected partition with the evidence that produced it.
#[derive(Debug, Clone)]
pub struct Detection {
    pub method: Method,
    pub partition: Partition,
    pub output: MethodOutput,
}

impl Detection {
    /// Estimated number of communities.
    pub fn q(&self) -> u32 {
        self.partition.q()
    }
}

/// Runs `method` on `graph`.  The seed fixes every random choice, so equal
/// inputs give equal outputs.
pub fn detect(
    graph: &SparseGraph,
    method: Method,
    seed: u64,
    opts: &DetectOptions,
) -> Result<Detection> {
    method.validate()?;
    let output = match (method.detector, method.order) {
        (Detector::Bh, OrderMethod::Nec) => {
            let det = spectral::detect_bh(graph, seed)?;
            Detection { method, partition: det.partition.clone(), output: MethodOutput::Bh(det) }
        }
        (Detector::Bh, OrderMethod::Mdl) => {
            let (partition, trace) =
                mdl::mdl_select_bh(graph, opts.q_max, opts.dl_convention, seed)?;
            Detection { method, partition, output: MethodOutput::Mdl(trace) }
        }
        (Detector::Bp, OrderMethod::Mfe) => {
            let (partition, trace) = bp::mfe_select(graph, &opts.mfe(), seed)?;
            Detection { method, partition, output: MethodOutput::Mfe(trace) }
        }
        (Detector::Bp, OrderMethod::Mdl) => {
            let (partition, trace) =
                mdl::mdl_select(graph, opts.q_max, opts.dl_convention, |q| {
                    let s = rng::mix(seed, &[q as u64]);
                    bp::detect_bp(graph, q as usize, opts.bp_restarts, s, &opts.em)
                        .map(|(p, _)| p)
                })?;
            Detection { method, partition, output: MethodOutput::Mdl(trace) }
        }
        (Detector::Bp, OrderMethod::Nec) => {
            let det = spectral::detect_bh(graph, rng::mix(seed, &[0]))?;
            let q = det.q().max(1);
            let partition = if q == 1 {
                Partition::trivial(graph.n())
            } else {
                let s = rng::mix(seed, &[1]);
                bp::detect_bp(graph, q, opts.bp_restarts, s, &opts.em)?.0
            };
            Detection { method, partition, output: MethodOutput::Bh(det) }
        }
        (Detector::Bh, OrderMethod::Mfe) => unreachable!("rejected by validate"),
    };
    Ok(output)
}
