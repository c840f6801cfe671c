//! Subcommand arguments. Every struct doubles as the schema of the
//! command's `--config` JSON file; flags given on the command line take
//! precedence over config keys, which take precedence over defaults.

use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use clap::{Args, ValueEnum};
use serde::de::DeserializeOwned;
use serde::Deserialize;

use txh::numerics::Vec3;
use txh::ModelParams;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, ValueEnum, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    #[default]
    Csv,
    Json,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, ValueEnum, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum State {
    #[default]
    Lower,
    Upper,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Kind {
    #[value(name = "zeeman_rotation")]
    ZeemanRotation,
    #[value(name = "stark_sweep")]
    StarkSweep,
    #[value(name = "stress_sweep")]
    StressSweep,
}

/// Parses `x,y,z`.
pub fn parse_vec3(s: &str) -> Result<Vec3, String> {
    let parts: Vec<&str> = s.split(',').map(str::trim).collect();
    if parts.len() != 3 {
        return Err(format!("expected x,y,z but got `{s}`"));
    }
    let mut v = [0.0; 3];
    for (slot, p) in v.iter_mut().zip(&parts) {
        *slot = p.parse().map_err(|e| format!("`{p}`: {e}"))?;
    }
    Ok(v)
}

macro_rules! merge_from {
    ($dst:expr; $src:expr; $($field:ident),+ $(,)?) => {
        $( if $dst.$field.is_none() { $dst.$field = $src.$field; } )+
    };
}

/// Reads a command's JSON config and fills every option the command line
/// left unset.
pub trait FromConfig: DeserializeOwned + Sized {
    fn config_path(&self) -> Option<&Path>;
    fn fill_from(&mut self, cfg: Self);

    fn resolve(mut self) -> Result<Self> {
        if let Some(path) = self.config_path() {
            let text = std::fs::read_to_string(path)
                .with_context(|| format!("reading {}", path.display()))?;
            let cfg: Self = serde_json::from_str(&text).map_err(txh::Error::from)?;
            self.fill_from(cfg);
        }
        Ok(self)
    }
}

/// Options shared by the sweep commands.
#[derive(Args, Clone, Debug, Default, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Common {
    /// Output format.
    #[arg(long, value_enum)]
    pub format: Option<Format>,
    /// Output file; stdout if omitted.
    #[arg(long)]
    pub output: Option<PathBuf>,
    /// Model parameter JSON file; built-in defaults if omitted.
    #[arg(long)]
    pub params: Option<PathBuf>,
}

impl Common {
    pub fn format(&self) -> Format {
        self.format.unwrap_or_default()
    }

    pub fn model_params(&self) -> Result<ModelParams> {
        match &self.params {
            None => Ok(ModelParams::default()),
            Some(p) => {
                let text = std::fs::read_to_string(p)
                    .with_context(|| format!("reading {}", p.display()))?;
                Ok(serde_json::from_str(&text).map_err(txh::Error::from)?)
            }
        }
    }

    fn fill(&mut self, c: Common) {
        merge_from!(self; c; format, output, params);
    }
}

#[derive(Args, Clone, Debug, Default, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OrientationsArgs {
    #[arg(long)]
    #[serde(skip)]
    pub config: Option<PathBuf>,
    /// Only the 12 proper rotations.
    #[arg(long, num_args = 0..=1, default_missing_value = "true")]
    pub unprimed: Option<bool>,
    #[arg(long, value_enum)]
    pub format: Option<Format>,
    #[arg(long)]
    pub output: Option<PathBuf>,
}

impl FromConfig for OrientationsArgs {
    fn config_path(&self) -> Option<&Path> {
        self.config.as_deref()
    }

    fn fill_from(&mut self, c: Self) {
        merge_from!(self; c; unprimed, format, output);
    }
}

#[derive(Args, Clone, Debug, Default, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ZeemanArgs {
    #[arg(long)]
    #[serde(skip)]
    pub config: Option<PathBuf>,
    /// Field magnitude (mT).
    #[arg(long = "b-mT", alias = "b-mt")]
    #[serde(alias = "b_mT")]
    pub b_mt: Option<f64>,
    /// Start axis, `x,y,z`.
    #[arg(long, value_parser = parse_vec3, allow_hyphen_values = true)]
    pub from_axis: Option<Vec3>,
    /// End axis, `x,y,z`.
    #[arg(long, value_parser = parse_vec3, allow_hyphen_values = true)]
    pub to_axis: Option<Vec3>,
    #[arg(long)]
    pub steps: Option<usize>,
    /// Subset grouping tolerance on line offsets (MHz).
    #[arg(long)]
    pub group_tol_mhz: Option<f64>,
    /// Write the per-step subset grouping as JSON here.
    #[arg(long)]
    pub groups: Option<PathBuf>,
    #[command(flatten)]
    #[serde(flatten)]
    pub common: Common,
}

impl FromConfig for ZeemanArgs {
    fn config_path(&self) -> Option<&Path> {
        self.config.as_deref()
    }

    fn fill_from(&mut self, c: Self) {
        merge_from!(self; c; b_mt, from_axis, to_axis, steps, group_tol_mhz, groups);
        self.common.fill(c.common);
    }
}

#[derive(Args, Clone, Debug, Default, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct StarkArgs {
    #[arg(long)]
    #[serde(skip)]
    pub config: Option<PathBuf>,
    /// Field direction, `x,y,z`.
    #[arg(long, value_parser = parse_vec3, allow_hyphen_values = true)]
    pub direction: Option<Vec3>,
    /// Largest field (V/m).
    #[arg(long)]
    pub e_max: Option<f64>,
    #[arg(long)]
    pub steps: Option<usize>,
    /// Polar misalignment (deg).
    #[arg(long, allow_hyphen_values = true)]
    pub misalign_theta: Option<f64>,
    /// Azimuthal misalignment (deg).
    #[arg(long, allow_hyphen_values = true)]
    pub misalign_phi: Option<f64>,
    /// Dielectric stack: `mount_110`, `mount_001` or a JSON file.
    #[arg(long)]
    pub stack: Option<String>,
    /// Grouping tolerance at the largest field (MHz).
    #[arg(long)]
    pub group_tol_mhz: Option<f64>,
    /// Write the grouping at the largest field as JSON here.
    #[arg(long)]
    pub groups: Option<PathBuf>,
    #[command(flatten)]
    #[serde(flatten)]
    pub common: Common,
}

impl FromConfig for StarkArgs {
    fn config_path(&self) -> Option<&Path> {
        self.config.as_deref()
    }

    fn fill_from(&mut self, c: Self) {
        merge_from!(self; c; direction, e_max, steps, misalign_theta, misalign_phi, stack, group_tol_mhz, groups);
        self.common.fill(c.common);
    }
}

#[derive(Args, Clone, Debug, Default, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct StrainArgs {
    #[arg(long)]
    #[serde(skip)]
    pub config: Option<PathBuf>,
    /// Load direction from [001] towards [110] (deg).
    #[arg(long, allow_hyphen_values = true)]
    pub direction_theta: Option<f64>,
    /// Largest stress (Pa); compression is negative.
    #[arg(long, allow_hyphen_values = true)]
    pub t_max: Option<f64>,
    #[arg(long)]
    pub steps: Option<usize>,
    /// Apply `T` as hydrostatic stress instead of a uniaxial load.
    #[arg(long, num_args = 0..=1, default_missing_value = "true")]
    pub hydrostatic: Option<bool>,
    /// Grouping tolerance on TX0 at the largest stress (MHz).
    #[arg(long)]
    pub group_tol_mhz: Option<f64>,
    /// Write the TX0 grouping at the largest stress as JSON here.
    #[arg(long)]
    pub groups: Option<PathBuf>,
    #[command(flatten)]
    #[serde(flatten)]
    pub common: Common,
}

impl FromConfig for StrainArgs {
    fn config_path(&self) -> Option<&Path> {
        self.config.as_deref()
    }

    fn fill_from(&mut self, c: Self) {
        merge_from!(self; c; direction_theta, t_max, steps, hydrostatic, group_tol_mhz, groups);
        self.common.fill(c.common);
    }
}

#[derive(Args, Clone, Debug, Default, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RbrArgs {
    #[arg(long)]
    #[serde(skip)]
    pub config: Option<PathBuf>,
    /// Field magnitude (mT).
    #[arg(long = "b-mT", alias = "b-mt")]
    #[serde(alias = "b_mT")]
    pub b_mt: Option<f64>,
    /// Polar grid points; the azimuth uses twice as many intervals.
    #[arg(long)]
    pub grid: Option<usize>,
    #[arg(long, value_enum)]
    pub state: Option<State>,
    /// Restrict to one orientation.
    #[arg(long)]
    pub orientation: Option<String>,
    /// Write horizontal and vertical slices through each maximum (CSV).
    #[arg(long)]
    pub slices: Option<PathBuf>,
    #[command(flatten)]
    #[serde(flatten)]
    pub common: Common,
}

impl FromConfig for RbrArgs {
    fn config_path(&self) -> Option<&Path> {
        self.config.as_deref()
    }

    fn fill_from(&mut self, c: Self) {
        merge_from!(self; c; b_mt, grid, state, orientation, slices);
        self.common.fill(c.common);
    }
}

#[derive(Args, Clone, Debug)]
pub struct FitArgs {
    /// Fit configuration JSON (datasets, free parameters, bounds, starts).
    #[arg(long)]
    pub config: PathBuf,
    /// Data files replacing the configured dataset paths, in order.
    #[arg(long, num_args = 1..)]
    pub data: Vec<PathBuf>,
    /// Result file; stdout if omitted.
    #[arg(long)]
    pub output: Option<PathBuf>,
}

#[derive(Args, Clone, Debug, Default, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SynthArgs {
    #[arg(long)]
    #[serde(skip)]
    pub config: Option<PathBuf>,
    #[arg(long, value_enum)]
    pub kind: Option<Kind>,
    #[arg(long)]
    pub steps: Option<usize>,
    /// Zeeman field magnitude (mT).
    #[arg(long = "b-mT", alias = "b-mt")]
    #[serde(alias = "b_mT")]
    pub b_mt: Option<f64>,
    #[arg(long, value_parser = parse_vec3, allow_hyphen_values = true)]
    pub from_axis: Option<Vec3>,
    #[arg(long, value_parser = parse_vec3, allow_hyphen_values = true)]
    pub to_axis: Option<Vec3>,
    /// Stark field direction.
    #[arg(long, value_parser = parse_vec3, allow_hyphen_values = true)]
    pub direction: Option<Vec3>,
    #[arg(long)]
    pub e_max: Option<f64>,
    /// Stress load direction (deg).
    #[arg(long, allow_hyphen_values = true)]
    pub direction_theta: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    pub t_max: Option<f64>,
    /// Line uncertainty for Zeeman and stress data (MHz).
    #[arg(long)]
    pub sigma_mhz: Option<f64>,
    /// Relative uncertainty for Stark data.
    #[arg(long)]
    pub sigma_fraction: Option<f64>,
    /// Add Gaussian noise at the stated uncertainty.
    #[arg(long, num_args = 0..=1, default_missing_value = "true")]
    pub noisy: Option<bool>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub output: Option<PathBuf>,
    #[arg(long)]
    pub params: Option<PathBuf>,
}

impl FromConfig for SynthArgs {
    fn config_path(&self) -> Option<&Path> {
        self.config.as_deref()
    }

    fn fill_from(&mut self, c: Self) {
        merge_from!(
            self; c; kind, steps, b_mt, from_axis, to_axis, direction, e_max, direction_theta, t_max, sigma_mhz,
            sigma_fraction, noisy, seed, output, params
        );
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn vec3_parsing() {
        assert_eq!(parse_vec3("-1, 1,0").unwrap(), [-1.0, 1.0, 0.0]);
        assert!(parse_vec3("1,2").is_err());
        assert!(parse_vec3("1,x,2").is_err());
    }

    #[test]
    fn config_keys_fill_unset_flags() {
        let mut flags = ZeemanArgs {
            steps: Some(5),
            ..ZeemanArgs::default()
        };
        let cfg: ZeemanArgs =
            serde_json::from_str(r#"{"steps": 9, "b_mT": 50.0, "format": "json"}"#).unwrap();
        flags.fill_from(cfg);
        assert_eq!(flags.steps, Some(5));
        assert_eq!(flags.b_mt, Some(50.0));
        assert_eq!(flags.common.format, Some(Format::Json));
    }

    #[test]
    fn unknown_config_keys_rejected() {
        assert!(serde_json::from_str::<StarkArgs>(r#"{"e_max": 1.0, "voltage": 3}"#).is_err());
        assert!(serde_json::from_str::<RbrArgs>(r#"{"grid": 3}"#).is_ok());
    }
}
