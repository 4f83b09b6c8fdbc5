//! JSON run inputs.
//!
//! A trajectory spec:
//!
//! ```json
//! {"profile": {"kind": "trunc_cos", "omega": 1.0},
//!  "axes": "phase_damping:3",
//!  "grid": {"t_max": 4.7, "n": 600}}
//! ```
//!
//! `axes` may instead be `{"l1": {...}, "l2": {...}, "l3": {...}}` with one
//! profile per axis, in which case `profile` is omitted. A mixture spec
//! replaces `axes` by `"weights": [x1, x2, x3]`. `grid` is optional.

use serde_json::{Map, Value};
use thiserror::Error;

use crate::mixtures::Mixture;
use crate::profile::ScalarProfile;
use crate::trajectory::{Axis, EigTrajectory, Grid};

/// Invalid spec, naming the offending field.
#[derive(Debug, Clone, PartialEq, Error)]
#[error("{field}: {message}")]
pub struct SpecError {
    pub field: String,
    pub message: String,
}

impl SpecError {
    fn new(field: &str, message: impl Into<String>) -> Self {
        Self { field: field.to_string(), message: message.into() }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Model {
    Trajectory(EigTrajectory),
    Mixture(Mixture),
}

impl Model {
    pub fn trajectory(&self) -> EigTrajectory {
        match self {
            Model::Trajectory(t) => t.clone(),
            Model::Mixture(m) => m.to_trajectory(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunSpec {
    pub model: Model,
    /// The `profile` field, when present.
    pub profile: Option<ScalarProfile>,
    pub grid: Option<Grid>,
}

const KNOWN_FIELDS: [&str; 4] = ["profile", "axes", "weights", "grid"];

pub fn parse_spec(text: &str) -> Result<RunSpec, SpecError> {
    let root: Value =
        serde_json::from_str(text).map_err(|e| SpecError::new("<root>", format!("malformed JSON: {e}")))?;
    let Value::Object(obj) = root else {
        return Err(SpecError::new("<root>", "expected a JSON object"));
    };
    if let Some(k) = obj.keys().find(|k| !KNOWN_FIELDS.contains(&k.as_str())) {
        return Err(SpecError::new(k, "unknown field"));
    }
    let profile = obj.get("profile").map(|v| parse_profile("profile", v)).transpose()?;
    let grid = obj.get("grid").map(parse_grid).transpose()?;

    let model = match (obj.get("weights"), obj.get("axes")) {
        (Some(_), Some(_)) => {
            return Err(SpecError::new("axes", "a mixture spec with weights must not also give axes"))
        }
        (Some(w), None) => {
            let weights = parse_weights(w)?;
            let profile =
                profile.clone().ok_or_else(|| SpecError::new("profile", "missing (required for a mixture)"))?;
            Model::Mixture(Mixture::new(weights, profile).map_err(|e| SpecError::new("weights", e.to_string()))?)
        }
        (None, Some(axes)) => Model::Trajectory(parse_axes(axes, profile.as_ref())?),
        (None, None) => return Err(SpecError::new("axes", "missing (give axes or weights)")),
    };
    Ok(RunSpec { model, profile, grid })
}

pub fn parse_weights_list(text: &str) -> Result<[f64; 3], SpecError> {
    let parts: Vec<&str> = text.split(',').map(str::trim).collect();
    if parts.len() != 3 {
        return Err(SpecError::new("weights", format!("expected three comma-separated numbers, got {text:?}")));
    }
    let mut w = [0.0; 3];
    for (slot, p) in w.iter_mut().zip(&parts) {
        *slot = p.parse().map_err(|_| SpecError::new("weights", format!("not a number: {p:?}")))?;
    }
    Ok(w)
}

fn parse_profile(field: &str, v: &Value) -> Result<ScalarProfile, SpecError> {
    let p: ScalarProfile = serde_json::from_value(v.clone()).map_err(|e| SpecError::new(field, e.to_string()))?;
    p.validate().map_err(|e| SpecError::new(field, e.to_string()))?;
    Ok(p)
}

fn parse_grid(v: &Value) -> Result<Grid, SpecError> {
    let obj = as_object("grid", v)?;
    if let Some(k) = obj.keys().find(|k| *k != "t_max" && *k != "n") {
        return Err(SpecError::new(&format!("grid.{k}"), "unknown field"));
    }
    let t_max = obj
        .get("t_max")
        .ok_or_else(|| SpecError::new("grid.t_max", "missing"))?
        .as_f64()
        .ok_or_else(|| SpecError::new("grid.t_max", "expected a number"))?;
    let n = obj
        .get("n")
        .ok_or_else(|| SpecError::new("grid.n", "missing"))?
        .as_u64()
        .ok_or_else(|| SpecError::new("grid.n", "expected a nonnegative integer"))?;
    Grid::new(t_max, n as usize).map_err(|e| SpecError::new("grid", e.to_string()))
}

fn parse_weights(v: &Value) -> Result<[f64; 3], SpecError> {
    let arr = v.as_array().ok_or_else(|| SpecError::new("weights", "expected an array of three numbers"))?;
    if arr.len() != 3 {
        return Err(SpecError::new("weights", format!("expected three weights, got {}", arr.len())));
    }
    let mut w = [0.0; 3];
    for (k, item) in arr.iter().enumerate() {
        w[k] = item.as_f64().ok_or_else(|| SpecError::new(&format!("weights[{k}]"), "expected a number"))?;
    }
    Ok(w)
}

fn parse_axes(v: &Value, profile: Option<&ScalarProfile>) -> Result<EigTrajectory, SpecError> {
    match v {
        Value::String(s) => {
            let label = s
                .strip_prefix("phase_damping:")
                .ok_or_else(|| SpecError::new("axes", format!("expected \"phase_damping:<1|2|3>\", got {s:?}")))?;
            let axis = label
                .parse::<usize>()
                .ok()
                .and_then(Axis::from_label)
                .ok_or_else(|| SpecError::new("axes", format!("axis must be 1, 2 or 3, got {label:?}")))?;
            let p = profile.ok_or_else(|| SpecError::new("profile", "missing (required for phase_damping axes)"))?;
            Ok(EigTrajectory::phase_damping(p.clone(), axis))
        }
        Value::Object(_) => {
            let obj = as_object("axes", v)?;
            if let Some(k) = obj.keys().find(|k| !["l1", "l2", "l3"].contains(&k.as_str())) {
                return Err(SpecError::new(&format!("axes.{k}"), "unknown field"));
            }
            let get = |k: &str| {
                let field = format!("axes.{k}");
                obj.get(k).ok_or_else(|| SpecError::new(&field, "missing")).and_then(|p| parse_profile(&field, p))
            };
            Ok(EigTrajectory::from_profiles(get("l1")?, get("l2")?, get("l3")?))
        }
        _ => Err(SpecError::new("axes", "expected a string or an object")),
    }
}

fn as_object<'a>(field: &str, v: &'a Value) -> Result<&'a Map<String, Value>, SpecError> {
    v.as_object().ok_or_else(|| SpecError::new(field, "expected an object"))
}
