//! JSON run configuration. Unknown keys, and keys that the chosen command
//! does not read, are rejected.

use std::path::{Path, PathBuf};

use bosonic_snr::gaussian::NuConvention;
use serde::{Deserialize, Serialize};

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Clone, Debug, Default, PartialEq, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub schema_version: u32,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub command: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub nu_convention: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub out: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub epsilon: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub epsilons: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub temperature: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub temperatures: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub nus: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub zs: Option<Vec<f64>>,
    /// Photon additions per curve.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ms: Option<Vec<usize>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mode_counts: Option<Vec<usize>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub kitten_subtractions: Option<Vec<u64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub fock_n: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub restarts: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub max_evals: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub freeze_displacement: Option<bool>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub max_m: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tolerance: Option<f64>,
}

const COMMON: [&str; 5] = ["schema_version", "command", "nu_convention", "seed", "out"];
const OPTIMIZER: [&str; 2] = ["restarts", "max_evals"];

/// Keys a command reads besides the common ones.
pub fn allowed_keys(command: &str) -> Vec<&'static str> {
    let own: &[&str] = match command {
        "fig2" => &["temperatures", "epsilons"],
        "fig3" => &["nus", "zs"],
        "fig5" => &["epsilon", "temperatures", "ms", "kitten_subtractions", "fock_n", "freeze_displacement"],
        "fig6" => &["epsilon", "temperatures"],
        "fig7" => &["epsilon", "temperature", "ms", "mode_counts"],
        "fig8" => &["temperature", "epsilons", "ms"],
        "oracle-check" => &["nus", "zs", "max_m", "tolerance"],
        _ => &[],
    };
    let mut keys: Vec<&str> = COMMON.to_vec();
    keys.extend_from_slice(own);
    if command.starts_with("fig") && !matches!(command, "fig2" | "fig3") {
        keys.extend_from_slice(&OPTIMIZER);
    }
    keys
}

pub fn parse_convention(name: &str) -> Result<NuConvention, String> {
    match name {
        "coth-half" | "appendixE" => Ok(NuConvention::CothHalf),
        "coth-full" | "eq9" => Ok(NuConvention::CothFull),
        other => Err(format!(
            "unknown nu convention '{other}' (expected coth-half, coth-full, appendixE or eq9)"
        )),
    }
}

pub fn load(path: &Path, command: &str) -> Result<RunConfig, String> {
    let text = std::fs::read_to_string(path).map_err(|e| format!("cannot read {}: {e}", path.display()))?;
    parse(&text, command)
}

pub fn parse(text: &str, command: &str) -> Result<RunConfig, String> {
    let value: serde_json::Value = serde_json::from_str(text).map_err(|e| format!("invalid JSON: {e}"))?;
    let config: RunConfig = serde_json::from_value(value.clone()).map_err(|e| format!("invalid config: {e}"))?;
    if config.schema_version != SCHEMA_VERSION {
        return Err(format!(
            "unsupported schema_version {} (this build reads {SCHEMA_VERSION})",
            config.schema_version
        ));
    }
    if let Some(c) = &config.command {
        if c != command {
            return Err(format!("config is for command '{c}', not '{command}'"));
        }
    }
    let allowed = allowed_keys(command);
    if let Some(obj) = value.as_object() {
        if let Some(k) = obj.keys().find(|k| !allowed.contains(&k.as_str())) {
            return Err(format!("key '{k}' is not used by '{command}'"));
        }
    }
    if let Some(name) = &config.nu_convention {
        parse_convention(name)?;
    }
    Ok(config)
}
