//! Turning presets, JSON config files and command-line overrides into one
//! resolved [`ExperimentSpec`].
//!
//! Resolution order: the named preset (command default unless `--preset` or
//! a top-level `"preset"` key says otherwise), then the keys of the config
//! file merged on top, then `--seed` and `--trials`. A `manifest.json`
//! written by a previous run is also accepted as a config; its recorded
//! spec is used verbatim, so the run is reproduced exactly.

use std::path::Path;

use lse_core::harness::{preset, ExperimentSpec, PRESET_NAMES};
use serde_json::{Map, Value};

use crate::CliError;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Command {
    KernelValidate,
    FreqSweep,
    AmpSweep,
    OrderSweep,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::KernelValidate => "kernel-validate",
            Command::FreqSweep => "freq-sweep",
            Command::AmpSweep => "amp-sweep",
            Command::OrderSweep => "order-sweep",
        }
    }

    pub fn default_preset(self) -> &'static str {
        match self {
            Command::KernelValidate => "viiA",
            Command::FreqSweep => "viiB",
            Command::AmpSweep => "viiC",
            Command::OrderSweep => "viiD",
        }
    }
}

#[derive(Clone, Debug, Default)]
pub struct Overrides {
    pub preset: Option<String>,
    pub seed: Option<u64>,
    pub trials: Option<usize>,
}

/// A spec ready to run, plus the preset it started from.
#[derive(Clone, Debug, PartialEq)]
pub struct Resolved {
    pub spec: ExperimentSpec,
    pub preset: String,
}

fn preset_value(name: &str) -> Result<Value, CliError> {
    let spec = preset(name).ok_or_else(|| {
        CliError::Config(format!(
            "preset: unknown preset '{name}' (expected one of {})",
            PRESET_NAMES.join(", ")
        ))
    })?;
    serde_json::to_value(spec).map_err(|e| CliError::Config(e.to_string()))
}

/// Recursive object merge. An override object carrying a different `kind`
/// tag replaces the base object instead of being merged into it.
fn merge(base: &mut Value, over: Value) {
    match (base, over) {
        (Value::Object(b), Value::Object(o)) => {
            let retag = o.get("kind").is_some() && o.get("kind") != b.get("kind");
            if retag {
                *b = o;
                return;
            }
            for (k, v) in o {
                match b.get_mut(&k) {
                    Some(slot) => merge(slot, v),
                    None => {
                        b.insert(k, v);
                    }
                }
            }
        }
        (slot, v) => *slot = v,
    }
}

fn is_manifest(obj: &Map<String, Value>) -> bool {
    obj.get("artifact").and_then(Value::as_str) == Some(crate::output::ARTIFACT)
        && obj.contains_key("spec")
}

fn parse_spec(value: Value) -> Result<ExperimentSpec, CliError> {
    serde_path_to_error::deserialize(value).map_err(|e| {
        let path = e.path().to_string();
        let inner = e.into_inner();
        if path == "." || path.is_empty() {
            CliError::Config(inner.to_string())
        } else {
            CliError::Config(format!("{path}: {inner}"))
        }
    })
}

/// Resolves the spec for `command` from an optional config file.
pub fn resolve(
    command: Command,
    config_path: Option<&Path>,
    overrides: &Overrides,
) -> Result<Resolved, CliError> {
    let file: Option<Map<String, Value>> = match config_path {
        None => None,
        Some(p) => {
            let text = std::fs::read_to_string(p)
                .map_err(|e| CliError::Config(format!("cannot read {}: {e}", p.display())))?;
            match serde_json::from_str::<Value>(&text) {
                Ok(Value::Object(map)) => Some(map),
                Ok(_) => {
                    return Err(CliError::Config(format!(
                        "{}: top level must be a JSON object",
                        p.display()
                    )))
                }
                Err(e) => return Err(CliError::Config(format!("{}: {e}", p.display()))),
            }
        }
    };

    let (mut value, preset_name) = match file {
        Some(mut map) if is_manifest(&map) => {
            let name = map
                .get("preset")
                .and_then(Value::as_str)
                .unwrap_or(command.default_preset())
                .to_string();
            (map.remove("spec").unwrap_or(Value::Null), name)
        }
        file => {
            let mut map = file.unwrap_or_default();
            let from_file = match map.remove("preset") {
                None => None,
                Some(Value::String(s)) => Some(s),
                Some(_) => return Err(CliError::Config("preset: expected a string".into())),
            };
            let name = overrides
                .preset
                .clone()
                .or(from_file)
                .unwrap_or_else(|| command.default_preset().to_string());
            let mut base = preset_value(&name)?;
            merge(&mut base, Value::Object(map));
            (base, name)
        }
    };

    if let Value::Object(obj) = &mut value {
        if let Some(seed) = overrides.seed {
            obj.insert("master_seed".into(), seed.into());
        }
        if let Some(trials) = overrides.trials {
            obj.insert("trials".into(), trials.into());
        }
    }
    let spec = parse_spec(value)?;
    spec.validate()?;
    Ok(Resolved {
        spec,
        preset: preset_name,
    })
}
