//! Phase-diagram sweeps over the `(rho, delta)` plane.
//!
//! A [`SweepSpec`] fixes a model family, two grid axes, a replicate count,
//! the detection methods to compare, and a master seed.  [`run_grid`]
//! evaluates every grid cell with every method, accumulates confusion
//! matrices at listed probe points, computes the closed-form threshold
//! curves for overlaying, and persists everything to an output directory:
//!
//! * `results.csv` — one row per cell and method,
//! * `overlays.csv` — sampled `(curve, delta, rho)` threshold points,
//! * `probes/*.json` — aligned confusion matrices summed over replicates,
//! * `manifest.json` — the spec, grid values, and crate version,
//! * `checkpoint.json` — completed cells, so an interrupted sweep resumes
//!   without recomputing them.
//!
//! Every replicate derives its seed from (master seed, cell indices,
//! replicate index, method id), so results are independent of scheduling,
//! worker count, and interruption: a resumed sweep writes byte-identical
//! outputs.

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::detect::{self, DetectOptions, Method};
use crate::error::{Error, Result};
use crate::graphgen;
use crate::metrics::{self, ConfusionMatrix};
use crate::partition::Partition;
use crate::rng;
use crate::theory::{self, MinorityModel, Scenario};

/// Completed cells are flushed to the checkpoint after every batch of this
/// many, bounding recomputation after an interruption.
const CHECKPOINT_BATCH: usize = 16;

/// Samples per curve used to bracket threshold crossings and to check
/// monotonicity before bisecting.
const OVERLAY_SCAN_POINTS: usize = 201;

/// A re-evaluated overlay root must put the squared-eigenvalue ratio within
/// this distance of one.
const OVERLAY_RESIDUAL_TOL: f64 = 1e-10;

/// Seed-stream tag separating probe replicates from grid replicates.
const PROBE_STREAM: u64 = 0x70726f6265;

/// An evenly spaced closed interval of grid values.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridAxis {
    pub min: f64,
    pub max: f64,
    pub steps: u32,
}

impl GridAxis {
    pub fn new(min: f64, max: f64, steps: u32) -> Result<Self> {
        let axis = GridAxis { min, max, steps };
        axis.validate()?;
        Ok(axis)
    }

    fn validate(&self) -> Result<()> {
        if !(self.min.is_finite() && self.max.is_finite()) || self.min > self.max {
            return Err(Error::InvalidParameter(format!(
                "grid axis [{}, {}] is not a finite ordered interval",
                self.min, self.max
            )));
        }
        if self.steps == 0 {
            return Err(Error::InvalidParameter("grid axis needs at least one step".into()));
        }
        if self.steps == 1 && self.min != self.max {
            return Err(Error::InvalidParameter(
                "a single-step axis must have min == max".into(),
            ));
        }
        Ok(())
    }

    /// The grid values, including both endpoints.
    pub fn values(&self) -> Vec<f64> {
        if self.steps == 1 {
            return vec![self.min];
        }
        let span = self.max - self.min;
        let last = (self.steps - 1) as f64;
        (0..self.steps).map(|i| self.min + span * i as f64 / last).collect()
    }
}

/// A `(rho, delta)` point at which confusion matrices are accumulated
/// across replicates.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ProbePoint {
    pub rho: f64,
    pub delta: f64,
}

fn default_q_max() -> u32 {
    6
}

fn default_bp_restarts() -> u32 {
    5
}

/// Everything a sweep needs: the model family, the grid, and the methods.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepSpec {
    /// Nodes per sampled graph.
    pub n: u32,
    /// Number of minority communities.
    pub q_s: u32,
    /// Number of majority communities.
    pub q_b: u32,
    /// Target mean degree.
    pub d: f64,
    pub scenario: Scenario,
    /// Minority-fraction axis.
    pub rho: GridAxis,
    /// Probability-contrast axis.
    pub delta: GridAxis,
    /// Graphs sampled per cell and method.
    pub replicates: u32,
    pub methods: Vec<Method>,
    /// Master seed; every replicate seed is derived from it and the cell
    /// coordinates, never from execution order.
    pub seed: u64,
    /// Largest order examined by the mdl and mfe scans.
    #[serde(default = "default_q_max")]
    pub q_max: u32,
    /// EM restarts per candidate order for belief propagation methods.
    #[serde(default = "default_bp_restarts")]
    pub bp_restarts: u32,
    /// Points where aligned confusion matrices are recorded.
    #[serde(default)]
    pub probes: Vec<ProbePoint>,
    /// Free-form annotation echoed into the manifest (presets note here
    /// when their axes only approximate a reference figure).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub note: Option<String>,
}

impl SweepSpec {
    pub fn validate(&self) -> Result<()> {
        self.rho.validate()?;
        self.delta.validate()?;
        if self.replicates == 0 {
            return Err(Error::InvalidParameter("replicates must be at least 1".into()));
        }
        if self.methods.is_empty() {
            return Err(Error::InvalidParameter("at least one method is required".into()));
        }
        for m in &self.methods {
            m.validate()?;
        }
        let mut ids: Vec<u64> = self.methods.iter().map(Method::id).collect();
        ids.sort_unstable();
        ids.dedup();
        if ids.len() != self.methods.len() {
            return Err(Error::InvalidParameter("duplicate method in sweep".into()));
        }
        if self.q_max == 0 || self.bp_restarts == 0 {
            return Err(Error::InvalidParameter(
                "q_max and bp_restarts must be at least 1".into(),
            ));
        }
        for (i, p) in self.probes.iter().enumerate() {
            if self.model_at(p.rho, p.delta).is_none() {
                return Err(Error::Infeasible(format!(
                    "probe {i} at (rho = {}, delta = {}) is not a feasible model",
                    p.rho, p.delta
                )));
            }
        }
        Ok(())
    }

    /// The model at one grid point, or `None` when the point is masked
    /// (outside the feasible contrast band, or not a model at all).
    pub fn model_at(&self, rho: f64, delta: f64) -> Option<MinorityModel> {
        let model =
            MinorityModel::new(self.n, self.q_s, self.q_b, rho, delta, self.d, self.scenario)
                .ok()?;
        let (lo, hi) = theory::feasible_delta_range(&model).ok()?;
        (lo <= delta && delta <= hi).then_some(model)
    }

    fn detect_options(&self) -> DetectOptions {
        DetectOptions {
            q_max: self.q_max,
            bp_restarts: self.bp_restarts as usize,
            ..DetectOptions::default()
        }
    }
}

/// Aggregated replicate outcomes for one cell and method.
///
/// Masked cells have `valid == false` and carry no statistics.  Statistics
/// are over successful replicates; `std_ami` is the sample standard
/// deviation and needs at least two successes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CellStats {
    pub valid: bool,
    pub n_ok: u32,
    pub n_fail: u32,
    pub mean_ami: Option<f64>,
    pub std_ami: Option<f64>,
    pub mean_q: Option<f64>,
}

impl CellStats {
    fn masked() -> Self {
        CellStats { valid: false, n_ok: 0, n_fail: 0, mean_ami: None, std_ami: None, mean_q: None }
    }
}

/// One `results.csv` row: a cell, a method, and the cell's statistics.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CellRecord {
    pub method: Method,
    pub i_rho: u32,
    pub i_delta: u32,
    pub rho: f64,
    pub delta: f64,
    pub stats: CellStats,
}

/// Confusion matrices summed over a probe point's replicates, rows aligned
/// to planted communities.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProbeResult {
    pub method: Method,
    pub rho: f64,
    pub delta: f64,
    pub n_ok: u32,
    pub n_fail: u32,
    pub mean_ami: Option<f64>,
    pub confusion: Option<ConfusionMatrix>,
}

/// One sampled point of a closed-form threshold curve.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OverlayPoint {
    /// `snr`, `lambda3`, or `lambda4`.
    pub curve: String,
    pub delta: f64,
    pub rho: f64,
}

/// Everything a finished sweep produced.
#[derive(Debug, Clone)]
pub struct SweepResult {
    pub rho_values: Vec<f64>,
    pub delta_values: Vec<f64>,
    /// Ordered by method (spec order), then rho index, then delta index.
    pub cells: Vec<CellRecord>,
    pub probes: Vec<ProbeResult>,
    pub overlays: Vec<OverlayPoint>,
    /// Replicate failures and overlay bracket anomalies, for display; not
    /// part of the persisted results.
    pub warnings: Vec<String>,
}

fn mean_and_std(xs: &[f64]) -> (Option<f64>, Option<f64>) {
    if xs.is_empty() {
        return (None, None);
    }
    let mean = xs.iter().sum::<f64>() / xs.len() as f64;
    if xs.len() < 2 {
        return (Some(mean), None);
    }
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (xs.len() - 1) as f64;
    (Some(mean), Some(var.sqrt()))
}

fn replicate_outcome(
    model: &MinorityModel,
    method: Method,
    rep_seed: u64,
    opts: &DetectOptions,
) -> Result<(f64, u32, Partition, Partition)> {
    let graph = graphgen::sample(model, rng::mix(rep_seed, &[0]))?;
    let planted = graph.planted().expect("sampled graphs carry planted labels").clone();
    let detection = detect::detect(&graph, method, rng::mix(rep_seed, &[1]), opts)?;
    let ami = metrics::ami(&planted, &detection.partition)?;
    let q = detection.q();
    Ok((ami, q, planted, detection.partition))
}

/// Evaluates one grid cell with one method.
///
/// Returns the aggregated statistics and one warning line per failed
/// replicate.  Masked cells return immediately with no statistics.
pub fn run_cell(
    spec: &SweepSpec,
    i_rho: u32,
    i_delta: u32,
    method: Method,
) -> (CellStats, Vec<String>) {
    let rho = spec.rho.values()[i_rho as usize];
    let delta = spec.delta.values()[i_delta as usize];
    let Some(model) = spec.model_at(rho, delta) else {
        return (CellStats::masked(), Vec::new());
    };
    let opts = spec.detect_options();
    let mut amis = Vec::new();
    let mut qs = Vec::new();
    let mut warnings = Vec::new();
    for rep in 0..spec.replicates {
        let rep_seed =
            rng::mix(spec.seed, &[i_rho as u64, i_delta as u64, rep as u64, method.id()]);
        match replicate_outcome(&model, method, rep_seed, &opts) {
            Ok((ami, q, _, _)) => {
                amis.push(ami);
                qs.push(q as f64);
            }
            Err(e) => warnings.push(format!(
                "cell (rho = {rho}, delta = {delta}) {method} replicate {rep}: {e}"
            )),
        }
    }
    let (mean_ami, std_ami) = mean_and_std(&amis);
    let (mean_q, _) = mean_and_std(&qs);
    let stats = CellStats {
        valid: true,
        n_ok: amis.len() as u32,
        n_fail: spec.replicates - amis.len() as u32,
        mean_ami,
        std_ami,
        mean_q,
    };
    (stats, warnings)
}

fn run_probe(
    spec: &SweepSpec,
    probe_idx: u32,
    method: Method,
) -> (ProbeResult, Vec<String>) {
    let point = spec.probes[probe_idx as usize];
    let model = spec
        .model_at(point.rho, point.delta)
        .expect("probes are checked feasible by validate");
    let opts = spec.detect_options();
    let mut amis = Vec::new();
    let mut accumulator: Option<metrics::ConfusionAccumulator> = None;
    let mut warnings = Vec::new();
    for rep in 0..spec.replicates {
        let rep_seed = rng::mix(
            spec.seed,
            &[PROBE_STREAM, probe_idx as u64, rep as u64, method.id()],
        );
        match replicate_outcome(&model, method, rep_seed, &opts) {
            Ok((ami, _, planted, detected)) => {
                amis.push(ami);
                accumulator
                    .get_or_insert_with(|| metrics::ConfusionAccumulator::new(planted))
                    .push(detected)
                    .expect("replicates share one node count");
            }
            Err(e) => warnings.push(format!(
                "probe {probe_idx} (rho = {}, delta = {}) {method} replicate {rep}: {e}",
                point.rho, point.delta
            )),
        }
    }
    let (mean_ami, _) = mean_and_std(&amis);
    let result = ProbeResult {
        method,
        rho: point.rho,
        delta: point.delta,
        n_ok: amis.len() as u32,
        n_fail: spec.replicates - amis.len() as u32,
        mean_ami,
        confusion: accumulator.and_then(|acc| acc.finish()),
    };
    (result, warnings)
}

/// The squared-ratio for one overlay curve at `(rho, delta)`, if the model
/// is feasible there and the spectral line exists.
fn curve_ratio(spec: &SweepSpec, curve: &str, rho: f64, delta: f64) -> Option<f64> {
    let model = spec.model_at(rho, delta)?;
    let report = theory::closed_form_spectrum(&model).ok()?;
    match curve {
        "snr" => report.snr2,
        "lambda3" => report.snr3,
        "lambda4" => report.snr4,
        _ => unreachable!("unknown curve name"),
    }
}

/// Computes the threshold curves `snr`, `lambda3`, `lambda4` over the
/// spec's grid: for each delta grid line, the rho at which the curve's
/// squared-eigenvalue ratio crosses one, found by bisection inside the
/// feasible band.  Curves without a crossing at some delta are simply
/// absent there.  Returns the points and any anomaly warnings
/// (non-monotone scans, residuals out of tolerance).
pub fn theory_overlays(spec: &SweepSpec) -> (Vec<OverlayPoint>, Vec<String>) {
    let mut points = Vec::new();
    let mut warnings = Vec::new();
    let (rho_lo, rho_hi) = (spec.rho.min, spec.rho.max);
    for &delta in &spec.delta.values() {
        for curve in ["snr", "lambda3", "lambda4"] {
            let f = |rho: f64| curve_ratio(spec, curve, rho, delta).map(|r| r - 1.0);
            // Sample the scan line, then bisect every bracketed sign change.
            let m = OVERLAY_SCAN_POINTS;
            let samples: Vec<(f64, Option<f64>)> = (0..m)
                .map(|i| {
                    let rho = rho_lo + (rho_hi - rho_lo) * i as f64 / (m - 1) as f64;
                    (rho, f(rho))
                })
                .collect();
            let mut brackets = Vec::new();
            for w in samples.windows(2) {
                let ((a, fa), (b, fb)) = (w[0], w[1]);
                if let (Some(fa), Some(fb)) = (fa, fb) {
                    if fa == 0.0 {
                        points.push(OverlayPoint { curve: curve.into(), delta, rho: a });
                    } else if fa * fb < 0.0 {
                        brackets.push((a, fa, b, fb));
                    }
                }
            }
            // The ratio should cross one at most once per delta line; more
            // brackets mean the closed form is not monotone here.
            if brackets.len() > 1 {
                warnings.push(format!(
                    "curve {curve} at delta = {delta}: {} crossings in [{rho_lo}, {rho_hi}]",
                    brackets.len()
                ));
            }
            for (mut a, mut fa, mut b, _) in brackets {
                for _ in 0..200 {
                    let mid = 0.5 * (a + b);
                    if mid == a || mid == b {
                        break;
                    }
                    match f(mid) {
                        Some(fm) if fm == 0.0 => {
                            a = mid;
                            b = mid;
                            break;
                        }
                        Some(fm) if (fm > 0.0) == (fa > 0.0) => {
                            a = mid;
                            fa = fm;
                        }
                        Some(_) => b = mid,
                        // Feasibility is an interval in rho, so a bracket
                        // never strays outside it; treat a hole defensively
                        // by shrinking from the right.
                        None => b = mid,
                    }
                }
                let root = 0.5 * (a + b);
                match f(root) {
                    Some(res) if res.abs() < OVERLAY_RESIDUAL_TOL => {
                        points.push(OverlayPoint { curve: curve.into(), delta, rho: root });
                    }
                    other => warnings.push(format!(
                        "curve {curve} at delta = {delta}: root {root} re-evaluates to {other:?}"
                    )),
                }
            }
        }
    }
    (points, warnings)
}

#[derive(Debug, Serialize, Deserialize)]
struct Checkpoint {
    /// Canonical JSON of the spec that produced the entries; a different
    /// spec must not resume from them.
    spec: String,
    cells: BTreeMap<String, CellStats>,
    probes: BTreeMap<String, ProbeResult>,
}

fn cell_key(method: Method, i_rho: u32, i_delta: u32) -> String {
    format!("{method}:{i_rho}:{i_delta}")
}

fn probe_key(probe_idx: u32, method: Method) -> String {
    format!("probe{probe_idx}:{method}")
}

fn io_err(context: impl std::fmt::Display, e: impl std::fmt::Display) -> Error {
    Error::Io(std::io::Error::other(format!("{context}: {e}")))
}

/// Writes `bytes` to `path` atomically (write to a sibling, then rename).
fn atomic_write(path: &Path, bytes: &[u8]) -> Result<()> {
    let file_name = path
        .file_name()
        .ok_or_else(|| io_err(path.display(), "path has no file name"))?
        .to_string_lossy()
        .into_owned();
    let tmp = path.with_file_name(format!("{file_name}.tmp"));
    fs::write(&tmp, bytes).map_err(|e| io_err(format!("writing {}", tmp.display()), e))?;
    fs::rename(&tmp, path)
        .map_err(|e| io_err(format!("renaming {} into place", tmp.display()), e))
}

fn opt_field(x: Option<f64>) -> String {
    x.map(|v| v.to_string()).unwrap_or_default()
}

fn results_csv(cells: &[CellRecord]) -> String {
    let mut out = String::from("method,rho,delta,valid,mean_ami,std_ami,mean_q,n_ok,n_fail\n");
    for c in cells {
        let s = &c.stats;
        out.push_str(&format!(
            "{},{},{},{},{},{},{},{},{}\n",
            c.method,
            c.rho,
            c.delta,
            s.valid,
            opt_field(s.mean_ami),
            opt_field(s.std_ami),
            opt_field(s.mean_q),
            s.n_ok,
            s.n_fail
        ));
    }
    out
}

fn overlays_csv(points: &[OverlayPoint]) -> String {
    let mut out = String::from("curve,delta,rho\n");
    for p in points {
        out.push_str(&format!("{},{},{}\n", p.curve, p.delta, p.rho));
    }
    out
}

fn probe_file_name(probe_idx: u32, method: Method) -> String {
    format!("probe{probe_idx:02}_{}.json", method.to_string().replace('+', "-"))
}

#[derive(Serialize)]
struct Manifest<'a> {
    spec: &'a SweepSpec,
    rho_values: &'a [f64],
    delta_values: &'a [f64],
    version: &'static str,
}

/// Runs the whole sweep, writing outputs and a checkpoint under `out_dir`.
///
/// If `out_dir` already holds a checkpoint for this exact spec, its
/// finished cells are reused and only the rest are computed; the final
/// outputs are byte-identical to an uninterrupted run.  A checkpoint from
/// a different spec is an error.  Cells are independent and evaluated in
/// parallel; per-cell seeds make the outcome independent of worker count.
pub fn run_grid(spec: &SweepSpec, out_dir: &Path) -> Result<SweepResult> {
    spec.validate()?;
    fs::create_dir_all(out_dir)
        .map_err(|e| io_err(format!("creating {}", out_dir.display()), e))?;
    let spec_json = serde_json::to_string(spec).expect("spec serializes");

    let checkpoint_path = out_dir.join("checkpoint.json");
    let mut checkpoint = match fs::read(&checkpoint_path) {
        Ok(bytes) => {
            let cp: Checkpoint = serde_json::from_slice(&bytes).map_err(|e| {
                io_err(format!("unreadable checkpoint {}", checkpoint_path.display()), e)
            })?;
            if cp.spec != spec_json {
                return Err(Error::InvalidParameter(format!(
                    "{} belongs to a different sweep; delete it or use another directory",
                    checkpoint_path.display()
                )));
            }
            cp
        }
        Err(_) => Checkpoint { spec: spec_json, cells: BTreeMap::new(), probes: BTreeMap::new() },
    };

    let rho_values = spec.rho.values();
    let delta_values = spec.delta.values();
    let mut warnings = Vec::new();

    // Grid cells not already in the checkpoint, in output order.
    let mut pending = Vec::new();
    for method in &spec.methods {
        for i_rho in 0..rho_values.len() as u32 {
            for i_delta in 0..delta_values.len() as u32 {
                if !checkpoint.cells.contains_key(&cell_key(*method, i_rho, i_delta)) {
                    pending.push((*method, i_rho, i_delta));
                }
            }
        }
    }
    for batch in pending.chunks(CHECKPOINT_BATCH) {
        let computed: Vec<(String, CellStats, Vec<String>)> = batch
            .par_iter()
            .map(|&(method, i_rho, i_delta)| {
                let (stats, warns) = run_cell(spec, i_rho, i_delta, method);
                (cell_key(method, i_rho, i_delta), stats, warns)
            })
            .collect();
        for (key, stats, warns) in computed {
            checkpoint.cells.insert(key, stats);
            warnings.extend(warns);
        }
        atomic_write(
            &checkpoint_path,
            serde_json::to_string(&checkpoint).expect("checkpoint serializes").as_bytes(),
        )?;
    }

    // Probe points.
    let mut pending_probes = Vec::new();
    for method in &spec.methods {
        for probe_idx in 0..spec.probes.len() as u32 {
            if !checkpoint.probes.contains_key(&probe_key(probe_idx, *method)) {
                pending_probes.push((probe_idx, *method));
            }
        }
    }
    if !pending_probes.is_empty() {
        let computed: Vec<(String, ProbeResult, Vec<String>)> = pending_probes
            .par_iter()
            .map(|&(probe_idx, method)| {
                let (result, warns) = run_probe(spec, probe_idx, method);
                (probe_key(probe_idx, method), result, warns)
            })
            .collect();
        for (key, result, warns) in computed {
            checkpoint.probes.insert(key, result);
            warnings.extend(warns);
        }
        atomic_write(
            &checkpoint_path,
            serde_json::to_string(&checkpoint).expect("checkpoint serializes").as_bytes(),
        )?;
    }

    // Assemble results in canonical order from the (now complete) map.
    let mut cells = Vec::with_capacity(spec.methods.len() * rho_values.len() * delta_values.len());
    for method in &spec.methods {
        for (i_rho, &rho) in rho_values.iter().enumerate() {
            for (i_delta, &delta) in delta_values.iter().enumerate() {
                let stats = checkpoint.cells[&cell_key(*method, i_rho as u32, i_delta as u32)]
                    .clone();
                cells.push(CellRecord {
                    method: *method,
                    i_rho: i_rho as u32,
                    i_delta: i_delta as u32,
                    rho,
                    delta,
                    stats,
                });
            }
        }
    }
    let mut probes = Vec::new();
    for method in &spec.methods {
        for probe_idx in 0..spec.probes.len() as u32 {
            probes.push(checkpoint.probes[&probe_key(probe_idx, *method)].clone());
        }
    }

    let (overlays, overlay_warnings) = theory_overlays(spec);
    warnings.extend(overlay_warnings);

    atomic_write(&out_dir.join("results.csv"), results_csv(&cells).as_bytes())?;
    atomic_write(&out_dir.join("overlays.csv"), overlays_csv(&overlays).as_bytes())?;
    let manifest = Manifest {
        spec,
        rho_values: &rho_values,
        delta_values: &delta_values,
        version: env!("CARGO_PKG_VERSION"),
    };
    let mut manifest_json = serde_json::to_string_pretty(&manifest).expect("manifest serializes");
    manifest_json.push('\n');
    atomic_write(&out_dir.join("manifest.json"), manifest_json.as_bytes())?;
    if !probes.is_empty() {
        let probe_dir = out_dir.join("probes");
        fs::create_dir_all(&probe_dir)
            .map_err(|e| io_err(format!("creating {}", probe_dir.display()), e))?;
        for method in &spec.methods {
            for probe_idx in 0..spec.probes.len() as u32 {
                let result = &checkpoint.probes[&probe_key(probe_idx, *method)];
                let mut json =
                    serde_json::to_string_pretty(result).expect("probe serializes");
                json.push('\n');
                atomic_write(&probe_dir.join(probe_file_name(probe_idx, *method)), json.as_bytes())?;
            }
        }
    }

    Ok(SweepResult { rho_values, delta_values, cells, probes, overlays, warnings })
}
