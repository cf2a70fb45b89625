//! Run configuration: one JSON document naming exactly one study.
//!
//! ```json
//! {
//!   "system": { "squeezed_frame": { "n_spins": 2, "delta_q": 60, ... } },
//!   "tolerances": { "rtol": 1e-8 },
//!   "output_dir": "out/ghz",
//!   "ghz": { "dissipative": true }
//! }
//! ```
//!
//! Frequencies are bare numbers in 2π·MHz or `{"value": x, "unit": u}`.

use crate::error::RunError;
use magnon_ghz::dynamics::EvolveOptions;
use magnon_ghz::hamiltonians::SystemParams;
use magnon_ghz::units::deserialize_frequency;
use serde::de::DeserializeOwned;
use serde::Deserialize;
use serde_json::{Map, Value};
use std::path::{Path, PathBuf};

const SHARED_KEYS: [&str; 3] = ["system", "tolerances", "output_dir"];

#[derive(Debug)]
pub struct RunConfig {
    pub system: Option<SystemSpec>,
    pub tolerances: EvolveOptions,
    pub output_dir: Option<PathBuf>,
    pub study: String,
    pub block: Value,
    /// The document after overrides, as hashed into the manifest.
    pub resolved: Value,
}

/// Parameters in the lab frame, or directly by their squeezed-frame values
/// with the enhanced coupling G as the natural scale.
#[derive(Clone, Debug, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum SystemSpec {
    Lab(SystemParams),
    SqueezedFrame(FrameSpec),
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FrameSpec {
    pub n_spins: usize,
    #[serde(deserialize_with = "deserialize_frequency")]
    pub delta_q: f64,
    #[serde(deserialize_with = "deserialize_frequency")]
    pub omega_m_tilde: f64,
    #[serde(deserialize_with = "deserialize_frequency")]
    pub big_g: f64,
    pub r: f64,
    #[serde(deserialize_with = "deserialize_frequency", default)]
    pub gamma_m: f64,
    #[serde(deserialize_with = "deserialize_frequency", default)]
    pub gamma_q: f64,
    pub fock_cutoff: usize,
}

impl SystemSpec {
    /// System parameters and squeezing. An explicit `r` replaces the
    /// configured one; in the squeezed frame G stays fixed while it changes.
    pub fn resolve(&self, r: Option<f64>) -> Result<(SystemParams, f64), RunError> {
        let (p, r) = match self {
            SystemSpec::Lab(p) => {
                let r = r.or(p.squeezing_r).ok_or_else(|| {
                    RunError::Config("system.lab.squeezing_r or the study's r must be given".into())
                })?;
                (p.clone(), r)
            }
            SystemSpec::SqueezedFrame(f) => {
                let r = r.unwrap_or(f.r);
                let p = SystemParams::from_squeezed_frame(
                    f.n_spins,
                    f.delta_q,
                    f.omega_m_tilde,
                    f.big_g,
                    r,
                    f.gamma_m,
                    f.gamma_q,
                    f.fock_cutoff,
                );
                (p, r)
            }
        };
        p.validate().map_err(|e| RunError::Config(format!("system: {e}")))?;
        Ok((p, r))
    }

    pub fn with_spins(&self, n: usize) -> SystemSpec {
        match self {
            SystemSpec::Lab(p) => SystemSpec::Lab(SystemParams { n_spins: n, ..p.clone() }),
            SystemSpec::SqueezedFrame(f) => SystemSpec::SqueezedFrame(FrameSpec { n_spins: n, ..f.clone() }),
        }
    }

    pub fn with_cutoff(&self, cutoff: usize) -> SystemSpec {
        match self {
            SystemSpec::Lab(p) => SystemSpec::Lab(SystemParams { fock_cutoff: cutoff, ..p.clone() }),
            SystemSpec::SqueezedFrame(f) => SystemSpec::SqueezedFrame(FrameSpec { fock_cutoff: cutoff, ..f.clone() }),
        }
    }
}

/// Deserializes `value` and names the offending key on failure.
pub fn parse_at<T: DeserializeOwned>(prefix: &str, value: &Value) -> Result<T, RunError> {
    serde_path_to_error::deserialize(value).map_err(|e| {
        let path = e.path().to_string();
        let key = if path == "." { prefix.to_string() } else { format!("{prefix}.{path}") };
        RunError::Config(format!("{key}: {}", e.inner()))
    })
}

/// Applies `a.b.c=value`; the value is read as JSON and falls back to a string.
pub fn apply_override(doc: &mut Value, assignment: &str) -> Result<(), RunError> {
    let (key, raw) = assignment
        .split_once('=')
        .ok_or_else(|| RunError::Config(format!("override `{assignment}` is not key=value")))?;
    let value = serde_json::from_str(raw).unwrap_or_else(|_| Value::String(raw.to_string()));
    let mut node = doc;
    let parts: Vec<&str> = key.split('.').collect();
    if parts.iter().any(|p| p.is_empty()) {
        return Err(RunError::Config(format!("override key `{key}` has an empty segment")));
    }
    for part in &parts[..parts.len() - 1] {
        let map = node
            .as_object_mut()
            .ok_or_else(|| RunError::Config(format!("override `{key}`: `{part}` is inside a non-object")))?;
        node = map.entry(part.to_string()).or_insert_with(|| Value::Object(Map::new()));
    }
    let map = node
        .as_object_mut()
        .ok_or_else(|| RunError::Config(format!("override `{key}` targets a non-object")))?;
    map.insert(parts[parts.len() - 1].to_string(), value);
    Ok(())
}

impl RunConfig {
    pub fn load(path: &Path, overrides: &[String], study_names: &[&str]) -> Result<Self, RunError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| RunError::Config(format!("cannot read {}: {e}", path.display())))?;
        let mut doc: Value = serde_json::from_str(&text)
            .map_err(|e| RunError::Config(format!("{} is not valid JSON: {e}", path.display())))?;
        for assignment in overrides {
            apply_override(&mut doc, assignment)?;
        }
        Self::from_value(doc, study_names)
    }

    pub fn from_value(doc: Value, study_names: &[&str]) -> Result<Self, RunError> {
        let map = doc.as_object().ok_or_else(|| RunError::Config("top level must be an object".into()))?;
        let mut studies = Vec::new();
        for key in map.keys() {
            if study_names.contains(&key.as_str()) {
                studies.push(key.clone());
            } else if !SHARED_KEYS.contains(&key.as_str()) {
                return Err(RunError::Config(format!(
                    "unknown key `{key}` (studies: {})",
                    study_names.join(", ")
                )));
            }
        }
        let study = match studies.as_slice() {
            [one] => one.clone(),
            [] => return Err(RunError::Config(format!("no study block; expected one of {}", study_names.join(", ")))),
            many => return Err(RunError::Config(format!("exactly one study block allowed, found {}", many.join(", ")))),
        };
        let system = map.get("system").map(|v| parse_at("system", v)).transpose()?;
        let tolerances = map.get("tolerances").map(|v| parse_at("tolerances", v)).transpose()?.unwrap_or_default();
        let output_dir = map.get("output_dir").map(|v| parse_at("output_dir", v)).transpose()?;
        Ok(RunConfig { system, tolerances, output_dir, block: map[&study].clone(), study, resolved: doc })
    }

    pub fn system(&self) -> Result<&SystemSpec, RunError> {
        self.system.as_ref().ok_or_else(|| RunError::Config(format!("study `{}` needs a system block", self.study)))
    }
}

/// Evenly spaced grid; `points ≥ 2` and `stop > start`.
#[derive(Clone, Copy, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Grid {
    #[serde(deserialize_with = "deserialize_frequency")]
    pub start: f64,
    #[serde(deserialize_with = "deserialize_frequency")]
    pub stop: f64,
    pub points: usize,
}

impl Grid {
    pub fn values(&self, key: &str) -> Result<Vec<f64>, RunError> {
        if self.points < 2 || !(self.stop > self.start) {
            return Err(RunError::Config(format!("{key}: need points ≥ 2 and stop > start")));
        }
        let step = (self.stop - self.start) / (self.points - 1) as f64;
        Ok((0..self.points).map(|k| self.start + step * k as f64).collect())
    }
}

/// Nonempty and strictly increasing.
pub fn check_list<T: PartialOrd + Copy>(key: &str, values: &[T]) -> Result<(), RunError> {
    if values.is_empty() {
        return Err(RunError::Config(format!("{key}: list is empty")));
    }
    if values.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(RunError::Config(format!("{key}: values must be strictly increasing")));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use serde_json::json;

    const NAMES: [&str; 2] = ["ghz", "broadening"];

    #[test]
    fn exactly_one_study() {
        let two = json!({"ghz": {}, "broadening": {}});
        assert!(matches!(RunConfig::from_value(two, &NAMES), Err(RunError::Config(m)) if m.contains("exactly one")));
        assert!(RunConfig::from_value(json!({"system": {}}), &NAMES).is_err());
        assert!(RunConfig::from_value(json!({"ghz": {}, "extra": 1}), &NAMES).is_err());
        assert_eq!(RunConfig::from_value(json!({"ghz": {}}), &NAMES).unwrap().study, "ghz");
    }

    #[test]
    fn overrides_build_nested_paths() {
        let mut doc = json!({"ghz": {"points": 5}});
        apply_override(&mut doc, "ghz.points=9").unwrap();
        apply_override(&mut doc, "system.squeezed_frame.n_spins=3").unwrap();
        apply_override(&mut doc, "output_dir=runs/a").unwrap();
        assert_eq!(doc["ghz"]["points"], 9);
        assert_eq!(doc["system"]["squeezed_frame"]["n_spins"], 3);
        assert_eq!(doc["output_dir"], "runs/a");
        assert!(apply_override(&mut doc, "ghz.points").is_err());
        assert!(apply_override(&mut doc, "ghz.points.x=1").is_err());
    }

    #[test]
    fn errors_name_the_key() {
        let doc = json!({"ghz": {}, "system": {"squeezed_frame": {"n_spins": "two"}}});
        let err = RunConfig::from_value(doc, &NAMES).unwrap_err().to_string();
        assert!(err.contains("system.squeezed_frame.n_spins"), "{err}");
    }

    #[test]
    fn frequencies_default_to_two_pi_mhz() {
        let spec: SystemSpec = parse_at(
            "system",
            &json!({"squeezed_frame": {"n_spins": 2, "delta_q": {"value": 60, "unit": "natural"},
                "omega_m_tilde": 1, "big_g": {"value": 1, "unit": "natural"}, "r": 3, "fock_cutoff": 6}}),
        )
        .unwrap();
        let SystemSpec::SqueezedFrame(f) = spec else { panic!("wrong variant") };
        assert_eq!(f.delta_q, 60.0);
        assert!((f.omega_m_tilde - std::f64::consts::TAU).abs() < 1e-15);
    }

    #[test]
    fn grids_and_lists_are_validated() {
        let g = Grid { start: 0.0, stop: 1.0, points: 3 };
        assert_eq!(g.values("g").unwrap(), vec![0.0, 0.5, 1.0]);
        assert!(Grid { points: 1, ..g }.values("g").is_err());
        assert!(check_list::<f64>("x", &[]).is_err());
        assert!(check_list("x", &[1.0, 1.0]).is_err());
        assert!(check_list("x", &[1, 2]).is_ok());
    }
}
