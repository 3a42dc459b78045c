//! Sweep configuration: a flat TOML file merged with command-line flags.
//!
//! Every sweep knob can come from either source; a flag always wins over
//! the file.  The same [`SweepDraft`] shape holds both, so merging is one
//! field-by-field `or`.  Unknown config keys are errors — silently ignoring
//! a typo like `replicate = 50` would quietly run the wrong experiment.

use std::path::Path;

use minority_sbm::detect::Method;
use minority_sbm::sweep::{GridAxis, ProbePoint, SweepSpec};
use minority_sbm::theory::Scenario;
use minority_sbm::{Error, Result};
use toml::Value;

/// All sweep knobs, each optional; see [`SweepDraft::into_spec`] for
/// defaults and which are required.
#[derive(Debug, Default, Clone)]
pub struct SweepDraft {
    pub n: Option<u32>,
    pub qs: Option<u32>,
    pub qb: Option<u32>,
    pub d: Option<f64>,
    pub scenario: Option<Scenario>,
    pub rho_min: Option<f64>,
    pub rho_max: Option<f64>,
    pub rho_steps: Option<u32>,
    pub delta_min: Option<f64>,
    pub delta_max: Option<f64>,
    pub delta_steps: Option<u32>,
    pub replicates: Option<u32>,
    pub methods: Option<Vec<Method>>,
    pub seed: Option<u64>,
    pub q_max: Option<u32>,
    pub bp_restarts: Option<u32>,
    pub probes: Option<Vec<ProbePoint>>,
    pub note: Option<String>,
}

fn bad(key: &str, detail: impl std::fmt::Display) -> Error {
    Error::InvalidParameter(format!("config key `{key}`: {detail}"))
}

fn take_int(table: &mut toml::Table, key: &str) -> Result<Option<i64>> {
    match table.remove(key) {
        None => Ok(None),
        Some(Value::Integer(i)) => Ok(Some(i)),
        Some(v) => Err(bad(key, format!("expected an integer, got {v}"))),
    }
}

fn take_u32(table: &mut toml::Table, key: &str) -> Result<Option<u32>> {
    take_int(table, key)?
        .map(|i| u32::try_from(i).map_err(|_| bad(key, format!("{i} is out of range"))))
        .transpose()
}

fn take_u64(table: &mut toml::Table, key: &str) -> Result<Option<u64>> {
    take_int(table, key)?
        .map(|i| u64::try_from(i).map_err(|_| bad(key, format!("{i} is out of range"))))
        .transpose()
}

fn take_f64(table: &mut toml::Table, key: &str) -> Result<Option<f64>> {
    match table.remove(key) {
        None => Ok(None),
        Some(Value::Float(x)) => Ok(Some(x)),
        Some(Value::Integer(i)) => Ok(Some(i as f64)),
        Some(v) => Err(bad(key, format!("expected a number, got {v}"))),
    }
}

fn take_string(table: &mut toml::Table, key: &str) -> Result<Option<String>> {
    match table.remove(key) {
        None => Ok(None),
        Some(Value::String(s)) => Ok(Some(s)),
        Some(v) => Err(bad(key, format!("expected a string, got {v}"))),
    }
}

/// Parses `bh+nec,bp+mfe`-style method lists.
pub fn parse_methods(s: &str) -> Result<Vec<Method>> {
    let methods: Vec<Method> = s
        .split(',')
        .map(str::trim)
        .filter(|p| !p.is_empty())
        .map(str::parse)
        .collect::<Result<_>>()?;
    if methods.is_empty() {
        return Err(Error::InvalidParameter("empty method list".into()));
    }
    Ok(methods)
}

/// Parses `rho:delta` pairs separated by commas, e.g. `0.25:0.0038,0.39:0.0038`.
pub fn parse_probes(s: &str) -> Result<Vec<ProbePoint>> {
    s.split(',')
        .map(str::trim)
        .filter(|p| !p.is_empty())
        .map(|pair| {
            let (r, d) = pair.split_once(':').ok_or_else(|| {
                Error::InvalidParameter(format!("probe `{pair}` is not of the form rho:delta"))
            })?;
            let parse = |tok: &str| -> Result<f64> {
                tok.trim()
                    .parse()
                    .map_err(|e| Error::InvalidParameter(format!("probe `{pair}`: {e}")))
            };
            Ok(ProbePoint { rho: parse(r)?, delta: parse(d)? })
        })
        .collect()
}

impl SweepDraft {
    /// Reads a flat TOML file into a draft, rejecting unknown keys.
    pub fn from_file(path: &Path) -> Result<SweepDraft> {
        let content = std::fs::read_to_string(path)?;
        let mut table: toml::Table = content
            .parse()
            .map_err(|e| Error::InvalidParameter(format!("{}: {e}", path.display())))?;
        let draft = SweepDraft {
            n: take_u32(&mut table, "n")?,
            qs: take_u32(&mut table, "qs")?,
            qb: take_u32(&mut table, "qb")?,
            d: take_f64(&mut table, "d")?,
            scenario: take_string(&mut table, "scenario")?.map(|s| s.parse()).transpose()?,
            rho_min: take_f64(&mut table, "rho_min")?,
            rho_max: take_f64(&mut table, "rho_max")?,
            rho_steps: take_u32(&mut table, "rho_steps")?,
            delta_min: take_f64(&mut table, "delta_min")?,
            delta_max: take_f64(&mut table, "delta_max")?,
            delta_steps: take_u32(&mut table, "delta_steps")?,
            replicates: take_u32(&mut table, "replicates")?,
            methods: take_string(&mut table, "methods")?
                .map(|s| parse_methods(&s))
                .transpose()?,
            seed: take_u64(&mut table, "seed")?,
            q_max: take_u32(&mut table, "q_max")?,
            bp_restarts: take_u32(&mut table, "bp_restarts")?,
            probes: take_string(&mut table, "probes")?
                .map(|s| parse_probes(&s))
                .transpose()?,
            note: take_string(&mut table, "note")?,
        };
        if !table.is_empty() {
            let mut keys: Vec<&str> = table.keys().map(String::as_str).collect();
            keys.sort_unstable();
            return Err(Error::InvalidParameter(format!(
                "unknown config keys: {}",
                keys.join(", ")
            )));
        }
        Ok(draft)
    }

    /// Overlays `self` (the stronger source, i.e. flags) onto `base`.
    pub fn over(self, base: SweepDraft) -> SweepDraft {
        SweepDraft {
            n: self.n.or(base.n),
            qs: self.qs.or(base.qs),
            qb: self.qb.or(base.qb),
            d: self.d.or(base.d),
            scenario: self.scenario.or(base.scenario),
            rho_min: self.rho_min.or(base.rho_min),
            rho_max: self.rho_max.or(base.rho_max),
            rho_steps: self.rho_steps.or(base.rho_steps),
            delta_min: self.delta_min.or(base.delta_min),
            delta_max: self.delta_max.or(base.delta_max),
            delta_steps: self.delta_steps.or(base.delta_steps),
            replicates: self.replicates.or(base.replicates),
            methods: self.methods.or(base.methods),
            seed: self.seed.or(base.seed),
            q_max: self.q_max.or(base.q_max),
            bp_restarts: self.bp_restarts.or(base.bp_restarts),
            probes: self.probes.or(base.probes),
            note: self.note.or(base.note),
        }
    }

    /// Finalizes into a validated spec.  The grid axes have no sensible
    /// defaults and must be given; everything else falls back to the
    /// desk-scale profile.
    pub fn into_spec(self) -> Result<SweepSpec> {
        let need = |key: &str, v: Option<f64>| {
            v.ok_or_else(|| Error::InvalidParameter(format!("missing `{key}` (config or flag)")))
        };
        let need_steps = |key: &str, v: Option<u32>| {
            v.ok_or_else(|| Error::InvalidParameter(format!("missing `{key}` (config or flag)")))
        };
        let spec = SweepSpec {
            n: self.n.unwrap_or(3000),
            q_s: self.qs.unwrap_or(1),
            q_b: self.qb.unwrap_or(1),
            d: self.d.unwrap_or(5.0),
            scenario: self.scenario.unwrap_or(Scenario::ConsistentPout),
            rho: GridAxis::new(
                need("rho_min", self.rho_min)?,
                need("rho_max", self.rho_max)?,
                need_steps("rho_steps", self.rho_steps)?,
            )?,
            delta: GridAxis::new(
                need("delta_min", self.delta_min)?,
                need("delta_max", self.delta_max)?,
                need_steps("delta_steps", self.delta_steps)?,
            )?,
            replicates: self.replicates.unwrap_or(10),
            methods: self.methods.unwrap_or_else(|| vec![Method::BH_NEC]),
            seed: self.seed.unwrap_or(1),
            q_max: self.q_max.unwrap_or(6),
            bp_restarts: self.bp_restarts.unwrap_or(5),
            probes: self.probes.unwrap_or_default(),
            note: self.note,
        };
        spec.validate()?;
        Ok(spec)
    }
}
