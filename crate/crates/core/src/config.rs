//! Run configuration: one TOML table per subsystem, every key optional with
//! a documented default, unknown keys rejected.
//!
//! ```toml
//! [beam]        # E, I, L, K, A, G, R (SI units), profile_variant = "corrected" | "paper"
//! [reference]   # num, den (descending powers of s), dt
//! [plant]       # zeta, omega_n
//! [mrac]        # gamma, theta0, duration, blowup_limit, initial = "equilibrium" | "rest"
//! [nn]          # layers, seed, max_epochs, lambda0, goal_sse, output_activation
//! [train]       # val_fraction, stride
//! [loop]        # direction = "all" | "radial" | ..., angle_deg, duration, online, eta
//! [metrics]     # band, window
//! ```

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::adaptive::InitialCondition;
use crate::beam::{BeamError, BeamParams, ProfileVariant};
use crate::closed_loop::Direction;
use crate::nn::Activation;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("config: {0}")]
    Parse(#[from] toml::de::Error),
    #[error("config: [{section}] {key}: {message}")]
    Invalid {
        section: &'static str,
        key: &'static str,
        message: String,
    },
    #[error("config: [beam] {0}")]
    Beam(#[from] BeamError),
}

fn invalid(section: &'static str, key: &'static str, message: impl Into<String>) -> ConfigError {
    ConfigError::Invalid {
        section,
        key,
        message: message.into(),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct BeamSection {
    #[serde(rename = "E")]
    pub youngs_modulus: f64,
    #[serde(rename = "I")]
    pub area_moment: f64,
    #[serde(rename = "L")]
    pub length: f64,
    #[serde(rename = "K")]
    pub shear_coeff: f64,
    #[serde(rename = "A")]
    pub cross_section_area: f64,
    #[serde(rename = "G")]
    pub shear_modulus: f64,
    #[serde(rename = "R")]
    pub curvature_radius: f64,
    pub profile_variant: ProfileVariant,
}

impl Default for BeamSection {
    fn default() -> Self {
        let p = BeamParams::default();
        Self {
            youngs_modulus: p.youngs_modulus(),
            area_moment: p.area_moment(),
            length: p.length(),
            shear_coeff: p.shear_coeff(),
            cross_section_area: p.cross_section_area(),
            shear_modulus: p.shear_modulus(),
            curvature_radius: p.curvature_radius(),
            profile_variant: ProfileVariant::Corrected,
        }
    }
}

impl BeamSection {
    pub fn params(&self) -> Result<BeamParams, BeamError> {
        BeamParams::new(
            self.youngs_modulus,
            self.area_moment,
            self.length,
            self.shear_coeff,
            self.cross_section_area,
            self.shear_modulus,
            self.curvature_radius,
        )
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ReferenceSection {
    pub num: Vec<f64>,
    pub den: Vec<f64>,
    pub dt: f64,
}

impl Default for ReferenceSection {
    fn default() -> Self {
        Self {
            num: vec![-4.0],
            den: vec![1.0, 3.0, 5.0],
            dt: 1e-3,
        }
    }
}

/// Second-order lag that follows the beam's static gain.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PlantSection {
    pub zeta: f64,
    pub omega_n: f64,
}

impl Default for PlantSection {
    fn default() -> Self {
        Self {
            zeta: 0.7,
            omega_n: 3.0,
        }
    }
}

/// Dataset-generation run. `gamma` = 5e4 converges the 30° step within
/// 20 s without overshoot: the ideal gain is 1/static_gain = 40 N/m and
/// e·y_m is of order 1e-4 m².
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct MracSection {
    pub gamma: f64,
    pub theta0: f64,
    pub duration: f64,
    pub blowup_limit: f64,
    pub initial: InitialCondition,
}

impl Default for MracSection {
    fn default() -> Self {
        Self {
            gamma: 5e4,
            theta0: 0.0,
            duration: 20.0,
            blowup_limit: 1e6,
            initial: InitialCondition::Equilibrium,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct NnSection {
    pub layers: Vec<usize>,
    pub seed: u64,
    pub max_epochs: usize,
    pub lambda0: f64,
    pub goal_sse: f64,
    pub output_activation: Activation,
}

impl Default for NnSection {
    fn default() -> Self {
        Self {
            layers: vec![1, 5, 5, 7, 1],
            seed: 1,
            max_epochs: 1000,
            lambda0: 1e-3,
            goal_sse: 0.0,
            output_activation: Activation::Linear,
        }
    }
}

/// Validation and test partitions are each `val_fraction` of the pairs;
/// every `stride`-th dataset record is used.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TrainSection {
    pub val_fraction: f64,
    pub stride: usize,
}

impl Default for TrainSection {
    fn default() -> Self {
        Self {
            val_fraction: 0.15,
            stride: 10,
        }
    }
}

/// `all` or a single direction.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub enum DirectionChoice {
    All,
    One(Direction),
}

impl DirectionChoice {
    pub fn directions(&self) -> Vec<Direction> {
        match self {
            DirectionChoice::All => Direction::ALL.to_vec(),
            DirectionChoice::One(d) => vec![*d],
        }
    }
}

impl fmt::Display for DirectionChoice {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            DirectionChoice::All => f.write_str("all"),
            DirectionChoice::One(d) => d.fmt(f),
        }
    }
}

impl FromStr for DirectionChoice {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        if s.eq_ignore_ascii_case("all") {
            Ok(DirectionChoice::All)
        } else {
            s.parse().map(DirectionChoice::One)
        }
    }
}

impl TryFrom<String> for DirectionChoice {
    type Error = String;

    fn try_from(s: String) -> Result<Self, Self::Error> {
        s.parse()
    }
}

impl From<DirectionChoice> for String {
    fn from(d: DirectionChoice) -> Self {
        d.to_string()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct LoopSection {
    pub direction: DirectionChoice,
    pub angle_deg: f64,
    pub duration: f64,
    pub online: bool,
    pub eta: f64,
}

impl Default for LoopSection {
    fn default() -> Self {
        Self {
            direction: DirectionChoice::All,
            angle_deg: 30.0,
            duration: 10.0,
            online: false,
            eta: 0.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct MetricsSection {
    pub band: f64,
    pub window: f64,
}

impl Default for MetricsSection {
    fn default() -> Self {
        Self {
            band: 0.02,
            window: 1.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Config {
    pub beam: BeamSection,
    pub reference: ReferenceSection,
    pub plant: PlantSection,
    pub mrac: MracSection,
    pub nn: NnSection,
    pub train: TrainSection,
    #[serde(rename = "loop")]
    pub control_loop: LoopSection,
    pub metrics: MetricsSection,
}

impl Config {
    pub fn from_toml_str(text: &str) -> Result<Self, ConfigError> {
        let config: Config = toml::from_str(text)?;
        config.validate()?;
        Ok(config)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config is always representable as TOML")
    }

    /// First 16 hex digits of the SHA-256 of the resolved config.
    pub fn digest(&self) -> String {
        let hash = Sha256::digest(self.to_toml().as_bytes());
        hex::encode(&hash[..8])
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        self.beam.params()?;
        let positive = |v: f64| v.is_finite() && v > 0.0;
        if !positive(self.reference.dt) {
            return Err(invalid("reference", "dt", "must be positive"));
        }
        if !positive(self.plant.zeta) {
            return Err(invalid("plant", "zeta", "must be positive"));
        }
        if !positive(self.plant.omega_n) {
            return Err(invalid("plant", "omega_n", "must be positive"));
        }
        if !(self.mrac.gamma.is_finite() && self.mrac.gamma >= 0.0) {
            return Err(invalid("mrac", "gamma", "must be non-negative"));
        }
        if !positive(self.mrac.duration) {
            return Err(invalid("mrac", "duration", "must be positive"));
        }
        if !positive(self.mrac.blowup_limit) {
            return Err(invalid("mrac", "blowup_limit", "must be positive"));
        }
        if self.nn.layers.len() < 2
            || self.nn.layers[0] != 1
            || *self.nn.layers.last().unwrap() != 1
            || self.nn.layers.contains(&0)
        {
            return Err(invalid(
                "nn",
                "layers",
                "must start and end with 1 and have no empty layer",
            ));
        }
        if !positive(self.nn.lambda0) {
            return Err(invalid("nn", "lambda0", "must be positive"));
        }
        if self.nn.goal_sse.is_nan() || self.nn.goal_sse < 0.0 {
            return Err(invalid("nn", "goal_sse", "must be non-negative"));
        }
        if !(0.0..0.5).contains(&self.train.val_fraction) {
            return Err(invalid("train", "val_fraction", "must lie in [0, 0.5)"));
        }
        if self.train.stride == 0 {
            return Err(invalid("train", "stride", "must be at least 1"));
        }
        if !(self.control_loop.angle_deg > 0.0 && self.control_loop.angle_deg < 90.0) {
            return Err(invalid("loop", "angle_deg", "must lie in (0, 90)"));
        }
        if !positive(self.control_loop.duration) {
            return Err(invalid("loop", "duration", "must be positive"));
        }
        if !(self.control_loop.eta.is_finite() && self.control_loop.eta >= 0.0) {
            return Err(invalid("loop", "eta", "must be non-negative"));
        }
        if !positive(self.metrics.band) {
            return Err(invalid("metrics", "band", "must be positive"));
        }
        if !positive(self.metrics.window) || self.metrics.window >= self.control_loop.duration {
            return Err(invalid(
                "metrics",
                "window",
                "must be positive and shorter than the loop duration",
            ));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_file_gives_defaults() {
        let c = Config::from_toml_str("").unwrap();
        assert_eq!(c, Config::default());
        assert_eq!(c.beam.params().unwrap(), BeamParams::default());
        assert_eq!(c.reference.num, vec![-4.0]);
        assert_eq!(c.reference.den, vec![1.0, 3.0, 5.0]);
        assert_eq!(c.nn.layers, vec![1, 5, 5, 7, 1]);
        assert_eq!(c.control_loop.direction, DirectionChoice::All);
    }

    #[test]
    fn partial_sections_keep_other_defaults() {
        let c = Config::from_toml_str(
            "[beam]\nR = 0.1\nprofile_variant = \"paper\"\n[loop]\ndirection = \"ulnar\"\n",
        )
        .unwrap();
        assert_eq!(c.beam.curvature_radius, 0.1);
        assert_eq!(c.beam.length, 0.1);
        assert_eq!(c.beam.profile_variant, ProfileVariant::Paper);
        assert_eq!(
            c.control_loop.direction,
            DirectionChoice::One(Direction::UlnarDeviation)
        );
    }

    #[test]
    fn unknown_keys_are_named() {
        let err = Config::from_toml_str("[mrac]\ngama = 3.0\n").unwrap_err();
        assert!(err.to_string().contains("gama"), "{err}");
        let err = Config::from_toml_str("[controller]\nx = 1\n").unwrap_err();
        assert!(err.to_string().contains("controller"), "{err}");
    }

    #[test]
    fn invalid_values_are_rejected() {
        assert!(Config::from_toml_str("[beam]\nE = -1.0\n").is_err());
        assert!(Config::from_toml_str("[train]\nstride = 0\n").is_err());
        assert!(Config::from_toml_str("[loop]\ndirection = \"up\"\n").is_err());
        assert!(Config::from_toml_str("[loop]\nangle_deg = 95.0\n").is_err());
        assert!(Config::from_toml_str("[nn]\nlayers = [2, 3, 1]\n").is_err());
        assert!(Config::from_toml_str("[nn]\noutput_activation = \"tanh\"\n").is_err());
    }

    #[test]
    fn resolved_config_round_trips() {
        let mut c = Config::default();
        c.mrac.gamma = 123.5;
        c.control_loop.direction = DirectionChoice::One(Direction::Flexion);
        let text = c.to_toml();
        let back = Config::from_toml_str(&text).unwrap();
        assert_eq!(back, c);
        assert_eq!(back.digest(), c.digest());
        assert_ne!(Config::default().digest(), c.digest());
        assert_eq!(c.digest().len(), 16);
    }
}
