//! End-to-end acceptance checks, one test per numbered requirement.
//!
//! Each test prints a single `criterion NN: PASS — ...` line with its
//! headline figures; a failed requirement panics with the criterion number
//! in the message, so the libtest summary doubles as the scoreboard.  Run
//! with `--nocapture` to see the PASS lines as they land.
//!
//! The phase-diagram sweeps (criteria 4-6 and 9) are expensive on one core.
//! They checkpoint under `target/tmp`, so an interrupted `cargo test` run
//! resumes where it stopped instead of recomputing; criterion 11 is the
//! exception — it deliberately starts cold in a fresh directory and a
//! different-sized thread pool to prove scheduling does not leak into the
//! results.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::sync::OnceLock;
use std::time::{Duration, Instant};

use minority_sbm::bp::{EmOptions, MfeOptions};
use minority_sbm::detect::Method;
use minority_sbm::graphgen::{self, SparseGraph};
use minority_sbm::mdl::{description_length, DlConvention};
use minority_sbm::metrics;
use minority_sbm::partition::Partition;
use minority_sbm::rng;
use minority_sbm::sweep::{self, GridAxis, ProbePoint, SweepResult, SweepSpec};
use minority_sbm::theory::{
    self, closed_form_spectrum, dense_spectrum, edge_probabilities, feasible_delta_range,
    minority_constant_mode, signal_matrix, EdgeProbabilities, MinorityModel, Phase, Scenario,
};
use minority_sbm::Error;
use rand::seq::SliceRandom;
use rand::Rng;

/// Master seed for every acceptance experiment; per-test streams are split
/// off with `rng::mix`, so tests stay independent and reproducible.
const MASTER_SEED: u64 = 11;

/// Criterion 1: closed-form vs dense spectra.
const SPECTRUM_REL_TOL: f64 = 1e-10;
/// Criterion 2: general-formula vs symmetric-formula SNR at epsilon = 0.
/// The two expressions share every factor up to a handful of f64 rounding
/// steps, so they agree to a few ulps; 1e-13 leaves two orders of margin.
const SNR_EQUIV_REL_TOL: f64 = 1e-13;
/// Criterion 3: determinant threshold, relative to `|Q/n|_F`.
const DET_TOL_FACTOR: f64 = 1e-12;
/// Criteria 4 and 6: how close a cell's mean detected order must sit to the
/// phase-expected value, and how far (in grid cells) transitions and
/// interiors may sit from the closed-form threshold curves.
const PHASE_MEAN_Q_TOL: f64 = 0.5;
const TRANSITION_TOL_CELLS: f64 = 1.0;
const INTERIOR_CLEARANCE_CELLS: f64 = 2.0;
/// Criterion 4: wall-clock budget for the spectral phase grid.
const GRID_TIME_LIMIT: Duration = Duration::from_secs(30 * 60);
/// Criterion 9: per-cell AMI slack for belief propagation vs the spectral
/// baseline, and the fraction of valid cells that must respect it.
const BP_AMI_SLACK: f64 = 0.05;
const BP_DOMINANCE_FRACTION: f64 = 0.95;
/// Criterion 10: |AMI| bound for independent partitions.
const AMI_INDEPENDENCE_TOL: f64 = 0.02;

// ---------------------------------------------------------------------------
// Shared fixtures
// ---------------------------------------------------------------------------

/// The canonical two-minority / two-majority phase grid: n = 3000, d = 5,
/// shared p_out, 15 x 15 cells over the feasible (rho, delta) box, ten
/// replicates per cell.  The delta ceiling 0.0065 keeps the top rows inside
/// the feasible band for mid-to-large rho while the low-rho corner masks
/// itself out; the probe column delta = 0.0038 crosses all three ordered
/// phases as rho grows.
fn phase_grid_spec(methods: Vec<Method>, probes: Vec<ProbePoint>) -> SweepSpec {
    SweepSpec {
        n: 3000,
        q_s: 2,
        q_b: 2,
        d: 5.0,
        scenario: Scenario::ConsistentPout,
        rho: GridAxis { min: 1.0 / 30.0, max: 0.5, steps: 15 },
        delta: GridAxis { min: 0.0, max: 0.0065, steps: 15 },
        replicates: 10,
        methods,
        seed: MASTER_SEED,
        q_max: 6,
        bp_restarts: 2,
        probes,
        note: None,
    }
}

fn bh_phase_spec() -> SweepSpec {
    phase_grid_spec(
        vec![Method::BH_NEC],
        vec![
            ProbePoint { rho: 0.25, delta: 0.0038 },
            ProbePoint { rho: 0.39, delta: 0.0038 },
            ProbePoint { rho: 0.44, delta: 0.0038 },
        ],
    )
}

struct GridCtx {
    spec: SweepSpec,
    result: SweepResult,
    dir: PathBuf,
    elapsed: Duration,
}

static BH_GRID: OnceLock<GridCtx> = OnceLock::new();

fn tmp_dir(name: &str) -> PathBuf {
    let dir = Path::new(env!("CARGO_TARGET_TMPDIR")).join(name);
    fs::create_dir_all(&dir).expect("create sweep directory");
    dir
}

/// Runs a sweep with checkpoint resume; a stale checkpoint from an older
/// spec revision is wiped once and the sweep restarted from scratch.
fn run_grid_resumable(spec: &SweepSpec, dir: &Path) -> SweepResult {
    match sweep::run_grid(spec, dir) {
        Ok(result) => result,
        Err(Error::InvalidParameter(msg)) if msg.contains("different sweep") => {
            fs::remove_dir_all(dir).ok();
            fs::create_dir_all(dir).expect("recreate sweep directory");
            sweep::run_grid(spec, dir).expect("sweep after clearing stale checkpoint")
        }
        Err(e) => panic!("sweep failed: {e}"),
    }
}

/// The spectral run of the canonical grid, shared by criteria 4, 5, 9
/// and 11.  Wall time covers whatever work the checkpoint left over, so a
/// cold start measures the full grid.
fn bh_grid() -> &'static GridCtx {
    BH_GRID.get_or_init(|| {
        let spec = bh_phase_spec();
        let dir = tmp_dir("acceptance-bh-grid");
        let start = Instant::now();
        let result = run_grid_resumable(&spec, &dir);
        GridCtx { spec, result, dir, elapsed: start.elapsed() }
    })
}

/// Cell statistics for one method keyed by `(i_rho, i_delta)`.
fn cell_map(
    result: &SweepResult,
    method: Method,
) -> BTreeMap<(u32, u32), &sweep::CellStats> {
    result
        .cells
        .iter()
        .filter(|c| c.method == method)
        .map(|c| ((c.i_rho, c.i_delta), &c.stats))
        .collect()
}

/// Overlay points in cell coordinates, `(x = rho index, y = delta index,
/// curve name)`.
fn overlay_cells(spec: &SweepSpec, result: &SweepResult) -> Vec<(f64, f64, String)> {
    let rho_step = (spec.rho.max - spec.rho.min) / (spec.rho.steps - 1) as f64;
    let delta_step = (spec.delta.max - spec.delta.min) / (spec.delta.steps - 1) as f64;
    result
        .overlays
        .iter()
        .map(|p| {
            (
                (p.rho - spec.rho.min) / rho_step,
                (p.delta - spec.delta.min) / delta_step,
                p.curve.clone(),
            )
        })
        .collect()
}

/// Phase of a grid cell per the closed-form spectrum, `None` if masked.
fn cell_phase(spec: &SweepSpec, rho: f64, delta: f64) -> Option<Phase> {
    let model = spec.model_at(rho, delta)?;
    closed_form_spectrum(&model).ok().map(|r| r.phase)
}

/// Transition interval for `threshold` along one delta row: the first pair
/// of adjacent valid cells whose mean orders straddle the threshold
/// (`mean_q[i] < threshold <= mean_q[i+1]`), reported as the closed
/// interval `[i, i+1]` in rho-index units, plus the number of such pairs.
/// The grid resolves a transition only to one cell spacing, so the
/// interval, not an interpolated point, is the measured location.
fn row_transition(
    cells: &BTreeMap<(u32, u32), &sweep::CellStats>,
    steps: u32,
    i_delta: u32,
    threshold: f64,
) -> (Option<(f64, f64)>, u32) {
    let mut first = None;
    let mut count = 0;
    for i in 0..steps - 1 {
        let (Some(a), Some(b)) = (cells.get(&(i, i_delta)), cells.get(&(i + 1, i_delta))) else {
            continue;
        };
        if !(a.valid && b.valid) {
            continue;
        }
        let (Some(qa), Some(qb)) = (a.mean_q, b.mean_q) else { continue };
        if qa < threshold && threshold <= qb {
            count += 1;
            if first.is_none() {
                first = Some((i as f64, i as f64 + 1.0));
            }
        }
    }
    (first, count)
}

/// Distance from a closed interval to a point; zero when the point lies
/// inside the interval.
fn interval_distance((lo, hi): (f64, f64), x: f64) -> f64 {
    (lo - x).max(x - hi).max(0.0)
}

// ---------------------------------------------------------------------------
// Model sampling
// ---------------------------------------------------------------------------

/// A random assortative model with a feasible delta, plus its edge
/// probabilities.  Shared-degree models keep `q_s <= q_b` so every
/// closed-form line is non-negative.
fn random_assortative_model(
    rng: &mut impl Rng,
    scenario: Scenario,
) -> (MinorityModel, EdgeProbabilities) {
    loop {
        let q_s = rng.gen_range(1..=3u32);
        let q_b = rng.gen_range(1..=3u32);
        if scenario == Scenario::ConsistentDegree && q_s > q_b {
            continue;
        }
        let q = (q_s + q_b) as f64;
        let n = rng.gen_range(500..=6000u32);
        let d = rng.gen_range(3.0..=12.0f64);
        let mut rho_cap = q_s as f64 / q;
        if scenario == Scenario::ConsistentDegree {
            rho_cap = rho_cap.min(0.49);
        }
        let rho = rng.gen_range(0.2..=0.95) * rho_cap;
        let Ok(probe) = MinorityModel::new(n, q_s, q_b, rho, 0.0, d, scenario) else {
            continue;
        };
        let Ok((lo, hi)) = feasible_delta_range(&probe) else { continue };
        if hi <= 0.0 {
            continue;
        }
        let delta = (hi - lo.max(0.0)) * rng.gen_range(0.05..=0.9) + lo.max(0.0);
        if delta <= 0.0 {
            continue;
        }
        let Ok(model) = MinorityModel::new(n, q_s, q_b, rho, delta, d, scenario) else {
            continue;
        };
        let Ok(probs) = edge_probabilities(&model) else { continue };
        return (model, probs);
    }
}

// ---------------------------------------------------------------------------
// Criterion 1 — closed-form spectra match dense eigensolves
// ---------------------------------------------------------------------------

#[test]
fn criterion_01_spectra_match_dense() {
    let start = Instant::now();
    let mut checked = 0u32;
    for scenario in [Scenario::ConsistentPout, Scenario::ConsistentDegree] {
        let mut rng = rng::stream(MASTER_SEED, &[1, scenario as u64]);
        for _ in 0..1000 {
            let (model, probs) = random_assortative_model(&mut rng, scenario);
            let report = closed_form_spectrum(&model)
                .unwrap_or_else(|e| panic!("criterion 01: closed form failed: {e}"));
            let closed = report.expanded();
            let dense = dense_spectrum(&model, &probs);
            assert_eq!(
                closed.len(),
                model.q() as usize,
                "criterion 01: expanded spectrum must have q lines ({model:?})"
            );
            let scale = report.lambda1.0.abs().max(1e-300);
            for (i, (&c, &d)) in closed.iter().zip(dense.iter()).enumerate() {
                assert!(
                    (c - d).abs() <= SPECTRUM_REL_TOL * scale,
                    "criterion 01: eigenvalue {i} differs: closed {c} vs dense {d} \
                     (rel {}) for {model:?}",
                    (c - d).abs() / scale
                );
            }
            // Assortative ordering: non-increasing and non-negative.
            for w in closed.windows(2) {
                assert!(
                    w[1] <= w[0] + 1e-12 * scale,
                    "criterion 01: eigenvalues out of order: {closed:?} for {model:?}"
                );
            }
            assert!(
                *closed.last().unwrap() >= -1e-12 * scale,
                "criterion 01: negative eigenvalue {closed:?} for {model:?}"
            );
            checked += 1;
        }
    }
    let elapsed = start.elapsed();
    assert!(
        elapsed < Duration::from_secs(10),
        "criterion 01: {checked} models took {elapsed:?}, budget is 10 s"
    );
    println!(
        "criterion 01: PASS — {checked} models within {SPECTRUM_REL_TOL:.0e} of dense, \
         ordered, in {elapsed:.2?}"
    );
}

// ---------------------------------------------------------------------------
// Criterion 2 — the general SNR collapses to the symmetric formula at eps = 0
// ---------------------------------------------------------------------------

#[test]
fn criterion_02_snr_reduces_when_symmetric() {
    let mut rng = rng::stream(MASTER_SEED, &[2]);
    let mut worst: f64 = 0.0;
    for _ in 0..100 {
        // rho = q_s/q makes every community the same size, and the shared
        // p_out scenario then gives a fully symmetric planted model.
        let (model, probs) = loop {
            let q_s = rng.gen_range(1..=3u32);
            let q_b = rng.gen_range(1..=3u32);
            let q = (q_s + q_b) as f64;
            let rho = q_s as f64 / q;
            let n = rng.gen_range(500..=6000u32);
            let d = rng.gen_range(3.0..=12.0f64);
            let Ok(probe) =
                MinorityModel::new(n, q_s, q_b, rho, 0.0, d, Scenario::ConsistentPout)
            else {
                continue;
            };
            let Ok((lo, hi)) = feasible_delta_range(&probe) else { continue };
            if hi <= 0.0 {
                continue;
            }
            let delta = (hi - lo.max(0.0)) * rng.gen_range(0.05..=0.9) + lo.max(0.0);
            let Ok(model) =
                MinorityModel::new(n, q_s, q_b, rho, delta, d, Scenario::ConsistentPout)
            else {
                continue;
            };
            let Ok(probs) = edge_probabilities(&model) else { continue };
            break (model, probs);
        };
        assert!(model.epsilon().abs() < 1e-12, "criterion 02: sampler must hit eps = 0");
        let report = closed_form_spectrum(&model).expect("criterion 02: closed form");
        let general = report.snr2.expect("criterion 02: second line present");
        // Symmetric-model formula: (d_in - d_out)^2 / d with the group
        // degrees read off the edge probabilities.
        let q = model.q() as f64;
        let group = model.n as f64 / q;
        let d_in = group * probs.p_in;
        let d_out = group * probs.p_out1;
        let symmetric = (d_in - d_out).powi(2) / (d_in + (q - 1.0) * d_out);
        let rel = (general - symmetric).abs() / symmetric.abs().max(1e-300);
        worst = worst.max(rel);
        assert!(
            rel <= SNR_EQUIV_REL_TOL,
            "criterion 02: SNR mismatch rel {rel} (general {general}, symmetric {symmetric}) \
             for {model:?}"
        );
    }
    println!(
        "criterion 02: PASS — 100 symmetric models, worst relative gap {worst:.2e} \
         (tolerance {SNR_EQUIV_REL_TOL:.0e})"
    );
}

// ---------------------------------------------------------------------------
// Criterion 3 — minority-mode determinant degeneracies
// ---------------------------------------------------------------------------

/// `det(Q/n - lambda_hat I)` and `|Q/n|_F` for one model.
fn minority_mode_det(model: &MinorityModel, probs: &EdgeProbabilities) -> (f64, f64) {
    let n = model.n as f64;
    let mut m = signal_matrix(model, probs);
    m /= n;
    let frob = m.norm();
    let lambda = minority_constant_mode(model, probs);
    let q = model.q() as usize;
    for i in 0..q {
        m[(i, i)] -= lambda;
    }
    (m.determinant(), frob)
}

#[test]
fn criterion_03_minority_mode_degeneracies() {
    let mut rng = rng::stream(MASTER_SEED, &[3]);

    // (a) p_out = 0: disconnected types, the minority constant mode is an
    // exact eigenvalue.  Probabilities are built directly so p_out is a
    // literal zero rather than a rounded difference.
    for k in 0..40 {
        let q_s = rng.gen_range(1..=3u32);
        let q_b = rng.gen_range(1..=3u32);
        let q = (q_s + q_b) as f64;
        let n = rng.gen_range(500..=4000u32);
        let rho = rng.gen_range(0.2..=0.9) * (q_s as f64 / q).min(0.49);
        let delta = rng.gen_range(0.001..=0.01);
        let model =
            MinorityModel::new(n, q_s, q_b, rho, delta, 5.0, Scenario::ConsistentPout)
                .expect("criterion 03a: model");
        let probs = EdgeProbabilities { p_in: delta, p_out1: 0.0, p_out2: 0.0 }
            .validated()
            .expect("criterion 03a: probabilities");
        let (det, frob) = minority_mode_det(&model, &probs);
        assert!(
            det.abs() <= DET_TOL_FACTOR * frob,
            "criterion 03a: case {k}: det {det:.3e} exceeds {:.3e} for {model:?}",
            DET_TOL_FACTOR * frob
        );
    }

    // (b) coincidence of the minority constant mode with the majority
    // line: solve the linear equation for the delta where the two closed
    // forms cross, then verify the determinant vanishes there.
    let mut coincidences = 0;
    while coincidences < 40 {
        let q_s = rng.gen_range(1..=3u32);
        let q_b = rng.gen_range(2..=3u32);
        let q = (q_s + q_b) as f64;
        let n = rng.gen_range(500..=4000u32);
        let d = rng.gen_range(3.0..=12.0f64);
        let rho = rng.gen_range(0.2..=0.9) * (q_s as f64 / q);
        let Ok(probe) = MinorityModel::new(n, q_s, q_b, rho, 0.0, d, Scenario::ConsistentPout)
        else {
            continue;
        };
        let Ok((_, hi)) = feasible_delta_range(&probe) else { continue };
        // Majority-line factor: ((1-rho)/q_b - rho/q_s) delta - rho p_out,
        // with p_out = d/n - g delta in the shared-p_out scenario, so the
        // factor vanishes at delta* = rho (d/n) / ((1-rho)/q_b - rho/q_s + rho g).
        let g = (1.0 - rho).powi(2) / q_b as f64 + rho * rho / q_s as f64;
        let base = d / n as f64;
        let denom_star = (1.0 - rho) / q_b as f64 - rho / q_s as f64 + rho * g;
        let delta_star = rho * base / denom_star;
        if !(delta_star > 0.0 && delta_star < hi) {
            continue;
        }
        let Ok(model) =
            MinorityModel::new(n, q_s, q_b, rho, delta_star, d, Scenario::ConsistentPout)
        else {
            continue;
        };
        let Ok(probs) = edge_probabilities(&model) else { continue };
        let (det, frob) = minority_mode_det(&model, &probs);
        assert!(
            det.abs() <= DET_TOL_FACTOR * frob,
            "criterion 03b: det {det:.3e} exceeds {:.3e} at coincidence for {model:?}",
            DET_TOL_FACTOR * frob
        );
        coincidences += 1;
    }

    // (c) generic models stay bounded away from zero.  The determinant
    // scales like (d/n)^q, so q is capped at 4 and the degenerate
    // directions are kept at arm's length: p_out and the majority-line
    // factor must both clear a fixed fraction of d/n.
    let mut generics = 0;
    let mut min_margin = f64::INFINITY;
    while generics < 100 {
        let q_s = rng.gen_range(1..=2u32);
        let q_b = rng.gen_range(1..=(4 - q_s));
        let q = (q_s + q_b) as f64;
        let n = rng.gen_range(400..=1500u32);
        let d = rng.gen_range(4.0..=12.0f64);
        let rho = rng.gen_range(0.15..=0.9 * q_s as f64 / q);
        let Ok(probe) = MinorityModel::new(n, q_s, q_b, rho, 0.0, d, Scenario::ConsistentPout)
        else {
            continue;
        };
        let Ok((lo, hi)) = feasible_delta_range(&probe) else { continue };
        if hi <= 0.0 {
            continue;
        }
        let delta = (hi - lo.max(0.0)) * rng.gen_range(0.3..=0.7) + lo.max(0.0);
        let Ok(model) = MinorityModel::new(n, q_s, q_b, rho, delta, d, Scenario::ConsistentPout)
        else {
            continue;
        };
        let Ok(probs) = edge_probabilities(&model) else { continue };
        let scale = d / n as f64;
        if probs.p_out1 < 0.3 * scale {
            continue;
        }
        let factor = ((1.0 - rho) / q_b as f64 - rho / q_s as f64) * delta - rho * probs.p_out1;
        if factor.abs() < 0.3 * scale {
            continue;
        }
        let (det, frob) = minority_mode_det(&model, &probs);
        let margin = det.abs() / (DET_TOL_FACTOR * frob);
        min_margin = min_margin.min(margin);
        assert!(
            margin > 1.0,
            "criterion 03c: generic determinant {det:.3e} within threshold {:.3e} for {model:?}",
            DET_TOL_FACTOR * frob
        );
        generics += 1;
    }
    println!(
        "criterion 03: PASS — 40 disconnected + 40 coincident models degenerate, \
         100 generic models clear the threshold by ≥ {min_margin:.1e}×"
    );
}

// ---------------------------------------------------------------------------
// Criterion 4 — spectral phase grid: interiors and transitions
// ---------------------------------------------------------------------------

#[test]
fn criterion_04_phase_grid_interiors_and_transitions() {
    let ctx = bh_grid();
    let cells = cell_map(&ctx.result, Method::BH_NEC);
    let overlays = overlay_cells(&ctx.spec, &ctx.result);
    let rho_values = &ctx.result.rho_values;
    let delta_values = &ctx.result.delta_values;

    // Interior cells: at least two grid cells from every threshold curve.
    let mut interior_counts: BTreeMap<&'static str, u32> = BTreeMap::new();
    for i in 0..ctx.spec.rho.steps {
        for j in 0..ctx.spec.delta.steps {
            let stats = cells[&(i, j)];
            if !stats.valid {
                continue;
            }
            let phase =
                cell_phase(&ctx.spec, rho_values[i as usize], delta_values[j as usize])
                    .expect("criterion 04: valid cell has a model");
            let expected = match phase {
                Phase::Undetectable => continue,
                Phase::Detectable => 2.0,
                Phase::Distinguishable => 3.0,
                Phase::Resolvable => 4.0,
            };
            let clearance = overlays
                .iter()
                .map(|(x, y, _)| (i as f64 - x).hypot(j as f64 - y))
                .fold(f64::INFINITY, f64::min);
            if clearance < INTERIOR_CLEARANCE_CELLS {
                continue;
            }
            let mean_q = stats.mean_q.expect("criterion 04: interior cell has replicates");
            assert!(
                (mean_q - expected).abs() <= PHASE_MEAN_Q_TOL,
                "criterion 04: interior cell ({i},{j}) rho {:.3} delta {:.4} in {phase} \
                 has mean q {mean_q:.2}, expected {expected} ± {PHASE_MEAN_Q_TOL}",
                rho_values[i as usize],
                delta_values[j as usize],
            );
            *interior_counts
                .entry(match phase {
                    Phase::Detectable => "detectable",
                    Phase::Distinguishable => "distinguishable",
                    _ => "resolvable",
                })
                .or_insert(0) += 1;
        }
    }
    assert!(
        interior_counts.get("detectable").copied().unwrap_or(0) >= 1,
        "criterion 04: no detectable-phase interior cells"
    );
    assert!(
        interior_counts.get("resolvable").copied().unwrap_or(0) >= 1,
        "criterion 04: no resolvable-phase interior cells"
    );

    // The distinguishable band between the two minority curves is only one
    // to two cells wide anywhere on this grid, so no cell is two cells
    // clear of both curves; a dedicated single-cell run deep in the band
    // carries the middle-phase check instead.
    let interior_distinguishable =
        interior_counts.get("distinguishable").copied().unwrap_or(0);
    if interior_distinguishable == 0 {
        let anchor = SweepSpec {
            rho: GridAxis { min: 0.39, max: 0.39, steps: 1 },
            delta: GridAxis { min: 0.0038, max: 0.0038, steps: 1 },
            probes: vec![],
            ..bh_phase_spec()
        };
        let phase = cell_phase(&anchor, 0.39, 0.0038).expect("criterion 04: anchor model");
        assert_eq!(phase, Phase::Distinguishable, "criterion 04: anchor must sit in the band");
        let (stats, _) = sweep::run_cell(&anchor, 0, 0, Method::BH_NEC);
        let mean_q = stats.mean_q.expect("criterion 04: anchor replicates");
        assert!(
            (mean_q - 3.0).abs() <= PHASE_MEAN_Q_TOL,
            "criterion 04: distinguishable anchor mean q {mean_q:.2}, expected 3.0 ± \
             {PHASE_MEAN_Q_TOL}"
        );
    }

    // Transitions: along each delta row whose minority curve sits well
    // inside the grid, the detected order must step 2 -> 3 (and 3 -> 4)
    // across a pair of adjacent cells no farther than one cell from the
    // closed-form curve.  Rows whose valid band leaves no room on the low
    // side of the curve carry no step to locate and are skipped.
    let mut checked_rows = 0;
    for (curve, threshold) in [("lambda3", 2.5), ("lambda4", 3.5)] {
        for (x_star, y, _) in overlays.iter().filter(|(_, _, c)| c == curve) {
            let j = y.round() as u32;
            assert!(
                (y - j as f64).abs() < 1e-9,
                "criterion 04: overlay rows sit on grid rows"
            );
            if !(2.0..=12.0).contains(x_star) {
                continue;
            }
            let has_low_side = (0..ctx.spec.rho.steps).any(|i| {
                (i as f64) <= x_star - 2.0 && cells.get(&(i, j)).is_some_and(|s| s.valid)
            });
            if !has_low_side {
                continue;
            }
            let (interval, _) = row_transition(&cells, ctx.spec.rho.steps, j, threshold);
            let interval = interval.unwrap_or_else(|| {
                panic!(
                    "criterion 04: no {threshold} step along delta row {j} \
                     (curve {curve} at x = {x_star:.2})"
                )
            });
            let gap = interval_distance(interval, *x_star);
            assert!(
                gap <= TRANSITION_TOL_CELLS,
                "criterion 04: {curve} step along row {j} sits in cells \
                 [{:.0}, {:.0}], {gap:.2} cells from the curve at {x_star:.2}",
                interval.0,
                interval.1
            );
            checked_rows += 1;
        }
    }
    assert!(checked_rows >= 4, "criterion 04: too few transition rows ({checked_rows})");

    assert!(
        ctx.elapsed < GRID_TIME_LIMIT,
        "criterion 04: grid took {:?}, budget {GRID_TIME_LIMIT:?}",
        ctx.elapsed
    );
    println!(
        "criterion 04: PASS — interiors {:?} all within {PHASE_MEAN_Q_TOL} of phase order, \
         {checked_rows} transition rows within {TRANSITION_TOL_CELLS} cell, grid in {:.0?}",
        interior_counts, ctx.elapsed
    );
}

// ---------------------------------------------------------------------------
// Criterion 5 — confusion-matrix anatomy along the probe column
// ---------------------------------------------------------------------------

#[test]
fn criterion_05_probe_confusion_anatomy() {
    let ctx = bh_grid();
    let probe = |rho: f64| -> &sweep::ProbeResult {
        ctx.result
            .probes
            .iter()
            .find(|p| p.method == Method::BH_NEC && (p.rho - rho).abs() < 1e-12)
            .unwrap_or_else(|| panic!("criterion 05: probe at rho = {rho} missing"))
    };

    let anatomy = |rho: f64| -> Vec<Vec<f64>> {
        let p = probe(rho);
        assert_eq!(
            p.n_ok, 10,
            "criterion 05: probe rho = {rho} has {} successful replicates",
            p.n_ok
        );
        let confusion = p.confusion.as_ref().expect("criterion 05: confusion recorded");
        assert_eq!(confusion.rows, 4, "criterion 05: four planted communities");
        confusion.row_normalized()
    };

    // Detectable: minority rows are split across the majority-owned
    // columns rather than detected in their own right.
    let rn = anatomy(0.25);
    let c2 = (0..rn[2].len()).max_by(|&a, &b| rn[2][a].total_cmp(&rn[2][b])).unwrap();
    let c3 = (0..rn[3].len()).max_by(|&a, &b| rn[3][a].total_cmp(&rn[3][b])).unwrap();
    for r in [0usize, 1] {
        let max_share = rn[r].iter().cloned().fold(0.0, f64::max);
        assert!(
            max_share < 0.7,
            "criterion 05: detectable-phase minority row {r} concentrates at {max_share:.2}"
        );
        let majority_mass = rn[r][c2] + if c3 == c2 { 0.0 } else { rn[r][c3] };
        assert!(
            majority_mass > 0.5,
            "criterion 05: detectable-phase minority row {r} puts only {majority_mass:.2} \
             on majority columns"
        );
    }

    // Distinguishable: both minority rows collapse into one shared column.
    let rn = anatomy(0.39);
    let dom0 = (0..rn[0].len()).max_by(|&a, &b| rn[0][a].total_cmp(&rn[0][b])).unwrap();
    let dom1 = (0..rn[1].len()).max_by(|&a, &b| rn[1][a].total_cmp(&rn[1][b])).unwrap();
    assert_eq!(
        dom0, dom1,
        "criterion 05: distinguishable-phase minority rows split across columns"
    );
    for r in [0usize, 1] {
        assert!(
            rn[r][dom0] > 0.8,
            "criterion 05: distinguishable-phase minority row {r} holds only {:.2} \
             of its mass in the shared column",
            rn[r][dom0]
        );
    }

    // Resolvable: the aligned matrix is diagonal-dominant in every row.
    let rn = anatomy(0.44);
    for r in 0..4 {
        assert!(
            rn[r].len() > r && rn[r][r] > 0.8,
            "criterion 05: resolvable-phase row {r} diagonal share {:.2} ≤ 0.8",
            rn[r].get(r).copied().unwrap_or(0.0)
        );
    }

    println!(
        "criterion 05: PASS — probe column shows split minorities (rho 0.25), \
         merged minorities (0.39), and a >0.8 diagonal (0.44) over 10 replicates each"
    );
}

// ---------------------------------------------------------------------------
// Criterion 6 — single minority vs single majority: one transition at SNR 1
// ---------------------------------------------------------------------------

#[test]
fn criterion_06_single_pair_transition() {
    let spec = SweepSpec {
        q_s: 1,
        q_b: 1,
        delta: GridAxis { min: 0.0006, max: 0.0034, steps: 15 },
        probes: vec![],
        ..bh_phase_spec()
    };
    let dir = tmp_dir("acceptance-single-grid");
    let result = run_grid_resumable(&spec, &dir);
    let cells = cell_map(&result, Method::BH_NEC);
    let overlays = overlay_cells(&spec, &result);

    let mut checked_rows = 0;
    let mut worst_gap: f64 = 0.0;
    for (x_star, y, _) in overlays.iter().filter(|(_, _, c)| c == "snr") {
        let j = y.round() as u32;
        if !(2.0..=12.0).contains(x_star) {
            continue;
        }
        let has_low_side = (0..spec.rho.steps)
            .any(|i| (i as f64) <= x_star - 2.0 && cells.get(&(i, j)).is_some_and(|s| s.valid));
        if !has_low_side {
            continue;
        }
        let (interval, count) = row_transition(&cells, spec.rho.steps, j, 1.5);
        assert_eq!(
            count, 1,
            "criterion 06: delta row {j} steps over mean q = 1.5 {count} times, expected exactly once"
        );
        let gap = interval_distance(interval.unwrap(), *x_star);
        worst_gap = worst_gap.max(gap);
        assert!(
            gap <= TRANSITION_TOL_CELLS,
            "criterion 06: transition on row {j} is {gap:.2} cells from the SNR curve at {x_star:.2}"
        );
        checked_rows += 1;
    }
    assert!(
        checked_rows >= 3,
        "criterion 06: only {checked_rows} rows carried an in-grid SNR crossing"
    );
    println!(
        "criterion 06: PASS — {checked_rows} rows each step over mean q = 1.5 exactly once, \
         worst offset {worst_gap:.2} cells from the SNR = 1 curve"
    );
}

// ---------------------------------------------------------------------------
// Criterion 7 — free-energy order selection in the shared-degree model
// ---------------------------------------------------------------------------

#[test]
fn criterion_07_free_energy_selects_full_order() {
    let model = MinorityModel::new(
        3000,
        2,
        3,
        0.24,
        0.0044,
        5.0,
        Scenario::ConsistentDegree,
    )
    .expect("criterion 07: model");
    let opts = MfeOptions {
        q_max: 6,
        restarts: 5,
        em: EmOptions::default(),
        fine_digits: 3,
        coarse_digits: 2,
    };
    let seed = rng::mix(MASTER_SEED, &[7]);
    let mut hits = 0;
    let mut chosen = Vec::new();
    for rep in 0..10u64 {
        let graph = graphgen::sample(&model, rng::mix(seed, &[rep, 0]))
            .expect("criterion 07: sample");
        let (_, trace) = minority_sbm::bp::mfe_select(&graph, &opts, rng::mix(seed, &[rep, 1]))
            .expect("criterion 07: selection");
        chosen.push(trace.chosen);
        if trace.chosen == 4 {
            hits += 1;
        }
    }
    assert!(
        hits >= 8,
        "criterion 07: free energy chose q* = 4 in only {hits}/10 replicates ({chosen:?})"
    );
    println!("criterion 07: PASS — free energy chose q* = 4 in {hits}/10 replicates");
}

// ---------------------------------------------------------------------------
// Criterion 8 — shared-degree construction really equalizes degrees
// ---------------------------------------------------------------------------

#[test]
fn criterion_08_degree_consistency() {
    let mut rng = rng::stream(MASTER_SEED, &[8]);
    let mut worst_z: f64 = 0.0;
    for k in 0..20u64 {
        let (model, probs) = loop {
            let q_s = rng.gen_range(1..=3u32);
            let q_b = rng.gen_range(1..=3u32);
            let q = (q_s + q_b) as f64;
            let rho_cap = (q_s as f64 / q).min(0.45);
            let rho = rng.gen_range(0.3..=0.95) * rho_cap;
            let n = rng.gen_range(1000..=4000u32);
            let d = rng.gen_range(4.0..=10.0f64);
            let Ok(probe) =
                MinorityModel::new(n, q_s, q_b, rho, 0.0, d, Scenario::ConsistentDegree)
            else {
                continue;
            };
            let Ok((lo, hi)) = feasible_delta_range(&probe) else { continue };
            if hi <= 0.0 {
                continue;
            }
            let delta = (hi - lo.max(0.0)) * rng.gen_range(0.2..=0.8) + lo.max(0.0);
            let Ok(model) =
                MinorityModel::new(n, q_s, q_b, rho, delta, d, Scenario::ConsistentDegree)
            else {
                continue;
            };
            let Ok(probs) = edge_probabilities(&model) else { continue };
            break (model, probs);
        };

        // Exact round trip: the closed-form expected degrees of both node
        // types must land back on the target d.
        let report = theory::degree_report(&model, &probs);
        for (name, value) in
            [("minority", report.d_minority), ("majority", report.d_majority)]
        {
            assert!(
                (value - model.d).abs() <= 1e-10 * model.d,
                "criterion 08: {name} degree {value} != d = {} for {model:?}",
                model.d
            );
        }

        // Empirical check: realized group mean degrees agree within three
        // standard deviations of the edge-sampling noise.
        let graph = graphgen::sample(&model, rng::mix(MASTER_SEED, &[8, k]))
            .expect("criterion 08: sample");
        let labels = graph.planted().expect("criterion 08: planted labels").labels().to_vec();
        let sizes = graphgen::block_sizes(&model);
        let q_s = model.q_s as usize;
        let (mut deg_s, mut deg_b) = (0f64, 0f64);
        let (mut n_s, mut n_b) = (0f64, 0f64);
        for (i, &label) in labels.iter().enumerate() {
            let deg = graph.degree(i) as f64;
            if (label as usize) < q_s {
                deg_s += deg;
                n_s += 1.0;
            } else {
                deg_b += deg;
                n_b += 1.0;
            }
        }
        let diff = deg_s / n_s - deg_b / n_b;

        // Variance of the group-mean difference: each within-minority edge
        // moves the minority mean by 2/n_s, cross-type edges move both
        // means at once.
        let var = |p: f64| p * (1.0 - p);
        let (mut var_s, mut var_b) = (0.0, 0.0);
        for r in 0..sizes.len() {
            for s in r..sizes.len() {
                let pairs = if r == s {
                    sizes[r] as f64 * (sizes[r] as f64 - 1.0) / 2.0
                } else {
                    sizes[r] as f64 * sizes[s] as f64
                };
                let minority_r = r < q_s;
                let minority_s = s < q_s;
                let p = if r == s {
                    probs.p_in
                } else if minority_r == minority_s {
                    probs.p_out1
                } else {
                    probs.p_out2
                };
                match (minority_r, minority_s) {
                    (true, true) => var_s += pairs * var(p),
                    (false, false) => var_b += pairs * var(p),
                    _ => {}
                }
            }
        }
        let n_s_tot: f64 = sizes[..q_s].iter().map(|&s| s as f64).sum();
        let n_b_tot: f64 = sizes[q_s..].iter().map(|&s| s as f64).sum();
        let var_cross = n_s_tot * n_b_tot * var(probs.p_out2);
        let sigma = (4.0 * var_s / (n_s_tot * n_s_tot)
            + 4.0 * var_b / (n_b_tot * n_b_tot)
            + var_cross * (1.0 / n_s_tot - 1.0 / n_b_tot).powi(2))
        .sqrt();
        let z = diff.abs() / sigma;
        worst_z = worst_z.max(z);
        assert!(
            z <= 3.0,
            "criterion 08: model {k} group degree gap {diff:.4} is {z:.2} sigma for {model:?}"
        );
    }
    println!(
        "criterion 08: PASS — 20 shared-degree models: exact round trip and empirical \
         degree gap ≤ 3σ (worst {worst_z:.2}σ)"
    );
}

// ---------------------------------------------------------------------------
// Criterion 9 — belief propagation dominates the spectral baseline
// ---------------------------------------------------------------------------

#[test]
fn criterion_09_bp_dominates_spectral_baseline() {
    let bh = bh_grid();
    let bp_spec = phase_grid_spec(vec![Method::BP_MFE], vec![]);
    let dir = tmp_dir("acceptance-bp-grid");
    let start = Instant::now();
    let bp_result = run_grid_resumable(&bp_spec, &dir);
    let elapsed = start.elapsed();

    let bh_cells = cell_map(&bh.result, Method::BH_NEC);
    let bp_cells = cell_map(&bp_result, Method::BP_MFE);
    let mut valid = 0u32;
    let mut dominated = 0u32;
    let mut worst: Vec<(f64, u32, u32)> = Vec::new();
    for i in 0..bp_spec.rho.steps {
        for j in 0..bp_spec.delta.steps {
            let (a, b) = (bh_cells[&(i, j)], bp_cells[&(i, j)]);
            assert_eq!(a.valid, b.valid, "criterion 09: masks must agree at ({i},{j})");
            if !a.valid {
                continue;
            }
            let (Some(bh_ami), Some(bp_ami)) = (a.mean_ami, b.mean_ami) else {
                panic!("criterion 09: valid cell ({i},{j}) lacks AMI on one side");
            };
            valid += 1;
            let gap = bp_ami - bh_ami;
            if gap >= -BP_AMI_SLACK {
                dominated += 1;
            } else {
                worst.push((gap, i, j));
            }
        }
    }
    worst.sort_by(|a, b| a.0.total_cmp(&b.0));
    let fraction = dominated as f64 / valid as f64;
    assert!(
        fraction >= BP_DOMINANCE_FRACTION,
        "criterion 09: BP within {BP_AMI_SLACK} of the spectral AMI in only \
         {dominated}/{valid} cells ({fraction:.3}); worst gaps {:?}",
        &worst[..worst.len().min(5)]
    );
    println!(
        "criterion 09: PASS — BP+MFE within {BP_AMI_SLACK} of BH+NEC in {dominated}/{valid} \
         valid cells ({:.1}%), BP grid in {elapsed:.0?}",
        100.0 * fraction
    );
}

// ---------------------------------------------------------------------------
// Criterion 10 — metric and description-length properties
// ---------------------------------------------------------------------------

/// A random q-way partition of n nodes with every community occupied.
fn random_partition(rng: &mut impl Rng, n: usize, q: u32) -> Partition {
    let mut labels: Vec<u32> = (0..n as u32).map(|i| i % q).collect();
    labels.shuffle(rng);
    Partition::new(labels, q).expect("occupied partition")
}

#[test]
fn criterion_10_metric_properties() {
    let mut rng = rng::stream(MASTER_SEED, &[10]);

    // Permutation invariance of AMI under community relabeling.
    for _ in 0..30 {
        let q_a = rng.gen_range(2..=5u32);
        let q_b = rng.gen_range(2..=5u32);
        let a = random_partition(&mut rng, 500, q_a);
        let b = random_partition(&mut rng, 500, q_b);
        let mut relabel: Vec<u32> = (0..q_b).collect();
        relabel.shuffle(&mut rng);
        let permuted = Partition::new(
            b.labels().iter().map(|&l| relabel[l as usize]).collect(),
            q_b,
        )
        .unwrap();
        let before = metrics::ami(&a, &b).unwrap();
        let after = metrics::ami(&a, &permuted).unwrap();
        assert!(
            (before - after).abs() <= 1e-12,
            "criterion 10: AMI changed under relabeling: {before} vs {after}"
        );
    }

    // Self-comparison is exactly 1.
    for _ in 0..30 {
        let q = rng.gen_range(2..=6u32);
        let a = random_partition(&mut rng, 500, q);
        let self_ami = metrics::ami(&a, &a).unwrap();
        assert!(
            (self_ami - 1.0).abs() <= 1e-12,
            "criterion 10: self-AMI {self_ami} != 1"
        );
    }

    // Independent partitions score near zero.
    let mut worst_indep: f64 = 0.0;
    for _ in 0..20 {
        let a = random_partition(&mut rng, 3000, 4);
        let b = random_partition(&mut rng, 3000, 4);
        let score = metrics::ami(&a, &b).unwrap();
        worst_indep = worst_indep.max(score.abs());
        assert!(
            score.abs() <= AMI_INDEPENDENCE_TOL,
            "criterion 10: independent partitions scored {score}"
        );
    }

    // The adjustment term matches a permutation-null Monte Carlo estimate.
    let a = random_partition(&mut rng, 240, 3);
    let b = random_partition(&mut rng, 240, 4);
    let analytic = metrics::expected_mutual_information(&a, &b).unwrap();
    let shuffles = 10_000;
    let mut labels = b.labels().to_vec();
    let mut samples = Vec::with_capacity(shuffles);
    for _ in 0..shuffles {
        labels.shuffle(&mut rng);
        let shuffled = Partition::new(labels.clone(), b.q()).unwrap();
        samples.push(metrics::mutual_information(&a, &shuffled).unwrap());
    }
    let mean: f64 = samples.iter().sum::<f64>() / shuffles as f64;
    let var: f64 =
        samples.iter().map(|s| (s - mean).powi(2)).sum::<f64>() / (shuffles as f64 - 1.0);
    let se = (var / shuffles as f64).sqrt();
    assert!(
        (analytic - mean).abs() <= 3.0 * se,
        "criterion 10: analytic E[MI] {analytic:.6} vs shuffle mean {mean:.6} ± {se:.2e}"
    );

    // Description length: label-invariant, and exact on a fixture small
    // enough to evaluate by hand.
    let fixture = SparseGraph::from_edges(4, &[(0, 1), (2, 3)], None).unwrap();
    let part = Partition::new(vec![0, 0, 1, 1], 2).unwrap();
    let swapped = Partition::new(vec![1, 1, 0, 0], 2).unwrap();
    for convention in [DlConvention::Ordered, DlConvention::Unordered] {
        let l = description_length(&fixture, &part, convention).unwrap();
        let l_swapped = description_length(&fixture, &swapped, convention).unwrap();
        assert!(
            (l - l_swapped).abs() <= 1e-12,
            "criterion 10: description length changed under relabeling"
        );
    }
    // Two blocks of two nodes, one internal edge each: |E| = 2, q = 2, so
    // L = |E| h(q(q+1)/2|E|) + n ln q - |E| sum m ln(m / (n_r n_s))
    //   = 2 h(1.5) + 4 ln 2 - 2 [0.5 ln 2 + 0.5 ln 2]
    //   = 5 ln 2.5 - 3 ln 1.5 + 2 ln 2.
    let expected = 5.0 * 2.5f64.ln() - 3.0 * 1.5f64.ln() + 2.0 * 2.0f64.ln();
    let l = description_length(&fixture, &part, DlConvention::Ordered).unwrap();
    assert!(
        (l - expected).abs() <= 1e-12,
        "criterion 10: fixture description length {l} != hand-computed {expected}"
    );

    // Label invariance on a non-trivial sampled graph as well.
    let model = MinorityModel::new(200, 1, 2, 0.2, 0.05, 8.0, Scenario::ConsistentPout).unwrap();
    let graph = graphgen::sample(&model, rng::mix(MASTER_SEED, &[10, 99])).unwrap();
    let p = random_partition(&mut rng, graph.n(), 3);
    let mut relabel: Vec<u32> = (0..3).collect();
    relabel.shuffle(&mut rng);
    let p_swapped =
        Partition::new(p.labels().iter().map(|&l| relabel[l as usize]).collect(), 3).unwrap();
    for convention in [DlConvention::Ordered, DlConvention::Unordered] {
        let l = description_length(&graph, &p, convention).unwrap();
        let l_swapped = description_length(&graph, &p_swapped, convention).unwrap();
        assert!(
            (l - l_swapped).abs() <= 1e-9 * l.abs(),
            "criterion 10: sampled-graph description length changed under relabeling"
        );
    }

    println!(
        "criterion 10: PASS — AMI invariant, self = 1, independent ≤ {worst_indep:.4}, \
         E[MI] within 3 SE of {shuffles} shuffles, description length label-invariant \
         and exact on the fixture"
    );
}

// ---------------------------------------------------------------------------
// Criterion 11 — results are independent of thread count
// ---------------------------------------------------------------------------

#[test]
fn criterion_11_thread_count_invariance() {
    let ctx = bh_grid();
    let reference =
        fs::read(ctx.dir.join("results.csv")).expect("criterion 11: reference results.csv");

    // Cold rerun of the same spec in a fresh directory under a deliberately
    // different thread count; the checkpoint from the shared run must not
    // be visible to it.
    let fresh = tempfile::tempdir().expect("criterion 11: temp dir");
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(3)
        .build()
        .expect("criterion 11: pool");
    let rerun = pool.install(|| sweep::run_grid(&ctx.spec, fresh.path()));
    rerun.expect("criterion 11: rerun");
    let repeated =
        fs::read(fresh.path().join("results.csv")).expect("criterion 11: rerun results.csv");

    assert!(
        reference == repeated,
        "criterion 11: results.csv differs between thread counts \
         ({} vs {} bytes)",
        reference.len(),
        repeated.len()
    );
    println!(
        "criterion 11: PASS — results.csv byte-identical across thread counts \
         ({} bytes)",
        reference.len()
    );
}
