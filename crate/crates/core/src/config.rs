//! Experiment configuration: a flat JSON object with unit-suffixed keys.
//!
//! Units are carried in the key names (`_m`, `_mps`, `_kgmps`) so that a
//! config file is self-describing and nm/m mix-ups surface immediately.
//! Unknown keys are rejected. Collision, input and run keys are optional at
//! parse time so that source-only configs can still drive the derived-
//! parameter report; turning a [`Config`] into a [`RunConfig`] requires the
//! full set.

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::collision::CollisionParams;
use crate::constants::IonSpecies;
use crate::phasespace::{CatState, GaussianState};
use crate::source::SourceParams;
use crate::teleport::{InputState, NoiseEntry, NoiseSpec, RunConfig, RunMode};
use crate::{Error, Result};

const fn default_workers() -> usize {
    1
}
const fn default_bins() -> usize {
    60
}
const fn default_hist_range() -> f64 {
    4.0
}
const fn default_grid_points() -> usize {
    2001
}
const fn default_p_instr() -> f64 {
    1e-3
}

/// Raw config file contents. Field names match the JSON keys exactly.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Config {
    pub species: String,
    /// COM wavepacket size D (m).
    #[serde(rename = "D_m")]
    pub d_m: f64,
    /// Vibrational internuclear spread (m).
    pub dd_v_m: f64,
    /// Post-dissociation internuclear spread (m).
    pub dd_m: f64,
    /// Velocity-difference spread (m/s).
    #[serde(default)]
    pub dv01_mps: f64,
    /// Aperture size (m).
    #[serde(rename = "L_m")]
    pub l_m: f64,
    /// Beam speed (m/s), metadata.
    #[serde(default)]
    pub v_z_mps: f64,
    /// Focusing-lens resolution floor (m).
    #[serde(default)]
    pub lens_floor_m: f64,
    /// Transverse approach speed (m/s). Required for collision formulas.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub v_y_mps: Option<f64>,
    /// Collision wavepacket extent (m). Required for runs.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dd_c_m: Option<f64>,
    /// Doppler-readout velocity resolution (m/s).
    #[serde(default = "default_p_instr")]
    pub p_instr_mps: f64,
    #[serde(default)]
    pub noise: NoiseConfig,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub input: Option<InputConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub events: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mode: Option<RunMode>,
    #[serde(default = "default_workers")]
    pub workers: usize,
    #[serde(default = "default_bins")]
    pub bins: usize,
    #[serde(default = "default_hist_range")]
    pub hist_range_sigma: f64,
    #[serde(default = "default_grid_points")]
    pub grid_points: usize,
}

/// Noise block: measurement entries accept a number or the string "auto".
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NoiseConfig {
    #[serde(default = "auto_entry")]
    pub x_meas_m: NoiseEntry,
    #[serde(default = "auto_entry")]
    pub p_meas_kgmps: NoiseEntry,
    #[serde(default)]
    pub x_shift_m: f64,
    #[serde(default)]
    pub p_shift_kgmps: f64,
}

const fn auto_entry() -> NoiseEntry {
    NoiseEntry::AUTO
}

impl Default for NoiseConfig {
    fn default() -> Self {
        NoiseConfig {
            x_meas_m: NoiseEntry::AUTO,
            p_meas_kgmps: NoiseEntry::AUTO,
            x_shift_m: 0.0,
            p_shift_kgmps: 0.0,
        }
    }
}

/// Input block. `type` selects which geometry keys apply.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InputConfig {
    #[serde(rename = "type")]
    pub kind: InputKind,
    /// Gaussian width (m); required for type = "gaussian".
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sigma_x_m: Option<f64>,
    /// Peak separation (m); required for type = "cat".
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub separation_m: Option<f64>,
    /// Peak width (m); required for type = "cat".
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub peak_sigma_m: Option<f64>,
    #[serde(default)]
    pub mean_x_m: f64,
    #[serde(default)]
    pub mean_p_kgmps: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum InputKind {
    Gaussian,
    Cat,
}

impl Config {
    /// Parse config text, reporting syntax errors with line/column info and
    /// rejecting unknown keys by name.
    pub fn from_json(text: &str) -> Result<Config> {
        serde_json::from_str(text).map_err(|e| Error::Config(e.to_string()))
    }

    /// Parse after applying dotted-path `key=value` overrides
    /// (e.g. `v_y_mps=500`, `noise.x_shift_m=1e-9`, `input.type=cat`).
    pub fn from_json_with_overrides(text: &str, overrides: &[(String, String)]) -> Result<Config> {
        let mut tree: Value = serde_json::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        for (path, raw) in overrides {
            set_path(&mut tree, path, raw)?;
        }
        serde_json::from_value(tree).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn species(&self) -> Result<IonSpecies> {
        IonSpecies::preset(&self.species)
    }

    pub fn source_params(&self) -> Result<SourceParams> {
        let params = SourceParams {
            species: self.species()?,
            com_size: self.d_m,
            vib_spread: self.dd_v_m,
            frag_spread: self.dd_m,
            vel_diff_spread: self.dv01_mps,
            aperture: self.l_m,
            beam_speed: self.v_z_mps,
            lens_floor: self.lens_floor_m,
        };
        params.validate()?;
        Ok(params)
    }

    /// Collision parameters, or `None` when the config is source-only.
    pub fn collision_params(&self) -> Result<Option<CollisionParams>> {
        let (Some(v_y), Some(dd_c)) = (self.v_y_mps, self.dd_c_m) else {
            return Ok(None);
        };
        let species = self.species()?;
        let params = CollisionParams {
            instrument_momentum: species.fragment_mass * self.p_instr_mps,
            species,
            approach_speed: v_y,
            packet_extent: dd_c,
        };
        params.validate()?;
        Ok(Some(params))
    }

    pub fn noise_spec(&self) -> NoiseSpec {
        NoiseSpec {
            x_meas: self.noise.x_meas_m,
            p_meas: self.noise.p_meas_kgmps,
            x_shift: self.noise.x_shift_m,
            p_shift: self.noise.p_shift_kgmps,
        }
    }

    pub fn input_state(&self) -> Result<InputState> {
        let input = self
            .input
            .ok_or_else(|| Error::Config("missing key `input`".into()))?;
        match input.kind {
            InputKind::Gaussian => {
                let sigma_x = input
                    .sigma_x_m
                    .ok_or_else(|| Error::Config("input type `gaussian` needs `sigma_x_m`".into()))?;
                if !(sigma_x > 0.0) {
                    return Err(Error::invalid("input.sigma_x_m", "sigma_x > 0"));
                }
                let mus = GaussianState::mus(sigma_x)?;
                Ok(InputState::Gaussian(GaussianState::new(
                    input.mean_x_m,
                    input.mean_p_kgmps,
                    mus.sigma_x,
                    mus.sigma_p,
                    0.0,
                )?))
            }
            InputKind::Cat => {
                let separation = input
                    .separation_m
                    .ok_or_else(|| Error::Config("input type `cat` needs `separation_m`".into()))?;
                let peak_sigma = input
                    .peak_sigma_m
                    .ok_or_else(|| Error::Config("input type `cat` needs `peak_sigma_m`".into()))?;
                Ok(InputState::Cat(CatState::new(
                    separation,
                    peak_sigma,
                    input.mean_x_m,
                )?))
            }
        }
    }

    /// Assemble a full run description; errors name any missing key.
    pub fn run_config(&self) -> Result<RunConfig> {
        let source = self.source_params()?;
        let collision = self
            .collision_params()?
            .ok_or_else(|| Error::Config("runs need `v_y_mps` and `dd_c_m`".into()))?;
        let config = RunConfig {
            source,
            collision,
            noise: self.noise_spec(),
            input: self.input_state()?,
            n_events: self
                .events
                .ok_or_else(|| Error::Config("missing key `events`".into()))?,
            seed: self
                .seed
                .ok_or_else(|| Error::Config("missing key `seed`".into()))?,
            mode: self
                .mode
                .ok_or_else(|| Error::Config("missing key `mode`".into()))?,
            workers: self.workers,
            bins: self.bins,
            hist_range_sigma: self.hist_range_sigma,
            grid_points: self.grid_points,
        };
        config.validate()?;
        Ok(config)
    }
}

/// Set `path` (dot-separated) in a JSON tree to `raw`, parsed as JSON when
/// possible and kept as a string otherwise. Intermediate objects are created.
fn set_path(tree: &mut Value, path: &str, raw: &str) -> Result<()> {
    let parsed: Value = serde_json::from_str(raw).unwrap_or_else(|_| Value::String(raw.to_string()));
    let mut node = tree;
    let parts: Vec<&str> = path.split('.').collect();
    for (i, part) in parts.iter().enumerate() {
        if part.is_empty() {
            return Err(Error::Config(format!("bad override path `{path}`")));
        }
        let obj = node
            .as_object_mut()
            .ok_or_else(|| Error::Config(format!("override path `{path}` does not address an object")))?;
        if i == parts.len() - 1 {
            obj.insert((*part).to_string(), parsed);
            return Ok(());
        }
        node = obj
            .entry((*part).to_string())
            .or_insert_with(|| Value::Object(serde_json::Map::new()));
    }
    unreachable!("empty override path");
}
