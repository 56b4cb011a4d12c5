//! Run configuration: a TOML file with `device`, `drive`, `experiment` and
//! `output` sections. Every key is optional and defaults to the reference
//! sample; unknown keys are rejected.

use std::f64::consts::TAU;
use std::path::Path;

use serde::{Deserialize, Serialize, Serializer};
use subradiance::units::{ghz_to_rad_per_ns, mhz_to_rad_per_ns, rate_from_lifetime_ns};
use subradiance::{DeviceParams, SpectroscopyMode, Target};

#[derive(Debug, thiserror::Error)]
pub enum ConfigError {
    #[error("cannot read config {path}: {source}")]
    Read { path: String, source: std::io::Error },
    #[error("invalid config: {0}")]
    Parse(#[from] toml::de::Error),
    #[error("invalid config value: {0}")]
    Invalid(String),
}

fn invalid(msg: impl Into<String>) -> ConfigError {
    ConfigError::Invalid(msg.into())
}

/// Infinite values are written as the string "inf" so they survive JSON.
fn float_or_inf<S: Serializer>(v: &f64, s: S) -> Result<S::Ok, S::Error> {
    if v.is_infinite() {
        s.serialize_str(if *v > 0.0 { "inf" } else { "-inf" })
    } else {
        s.serialize_f64(*v)
    }
}

/// A per-qubit quantity given once for all qubits or as a list.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum PerQubit {
    Uniform(f64),
    Each(Vec<f64>),
}

impl PerQubit {
    fn expand(&self, name: &str, n: usize) -> Result<Vec<f64>, ConfigError> {
        match self {
            PerQubit::Uniform(v) => Ok(vec![*v; n]),
            PerQubit::Each(v) if v.len() == n => Ok(v.clone()),
            PerQubit::Each(v) => Err(invalid(format!("device.{name} has {} entries for {n} qubits", v.len()))),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Range {
    pub start: f64,
    pub stop: f64,
    pub points: usize,
}

/// An explicit list of values or an inclusive evenly spaced range.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Grid {
    Values(Vec<f64>),
    Range(Range),
}

impl Grid {
    fn range(start: f64, stop: f64, points: usize) -> Self {
        Grid::Range(Range { start, stop, points })
    }

    pub fn values(&self) -> Vec<f64> {
        match self {
            Grid::Values(v) => v.clone(),
            Grid::Range(r) => subradiance::experiments::linspace(r.start, r.stop, r.points),
        }
    }

    fn check(&self, name: &str) -> Result<Vec<f64>, ConfigError> {
        let v = self.values();
        if v.is_empty() {
            return Err(invalid(format!("{name} is empty")));
        }
        if v.iter().any(|x| !x.is_finite()) {
            return Err(invalid(format!("{name} contains non-finite values")));
        }
        let up = v.windows(2).all(|w| w[1] > w[0]);
        let down = v.windows(2).all(|w| w[1] < w[0]);
        if !(up || down) {
            return Err(invalid(format!("{name} is not strictly monotone")));
        }
        Ok(v)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DeviceSection {
    pub omega_r_ghz: f64,
    pub omega_q_ghz: PerQubit,
    pub g_mhz: PerQubit,
    pub kappa_mhz: f64,
    #[serde(serialize_with = "float_or_inf")]
    pub t1_intrinsic_us: f64,
    #[serde(serialize_with = "float_or_inf")]
    pub t_phi_ns: f64,
    pub n_max: usize,
    pub n_qubits: usize,
}

impl Default for DeviceSection {
    fn default() -> Self {
        Self {
            omega_r_ghz: 6.937,
            omega_q_ghz: PerQubit::Uniform(6.647),
            g_mhz: PerQubit::Uniform(116.0),
            kappa_mhz: 3.01,
            t1_intrinsic_us: 1.37,
            t_phi_ns: 880.0,
            n_max: 3,
            n_qubits: 2,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DriveSection {
    pub epsilon_mhz: f64,
    pub xi: f64,
    pub phi_rad: f64,
    pub omega_d_ghz: f64,
}

impl Default for DriveSection {
    fn default() -> Self {
        Self { epsilon_mhz: 0.05, xi: 1.0, phi_rad: 0.0, omega_d_ghz: 6.647 }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    Analytic,
    Master,
}

impl From<Mode> for SpectroscopyMode {
    fn from(m: Mode) -> Self {
        match m {
            Mode::Analytic => SpectroscopyMode::Analytic,
            Mode::Master => SpectroscopyMode::MasterEquation,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ExperimentSection {
    /// Optional; when set it must name the subcommand being run.
    #[serde(rename = "type", skip_serializing_if = "Option::is_none")]
    pub kind: Option<String>,
    pub mode: Mode,
    pub phase_offset_rad: f64,
    pub phi_grid: Grid,
    pub omega_d_grid_ghz: Grid,
    pub target: String,
    pub delta_mhz: f64,
    pub delay_grid_ns: Grid,
    pub delta_grid_mhz: Grid,
}

impl Default for ExperimentSection {
    fn default() -> Self {
        Self {
            kind: None,
            mode: Mode::Analytic,
            phase_offset_rad: 0.0,
            phi_grid: Grid::range(0.0, TAU, 73),
            omega_d_grid_ghz: Grid::range(6.50, 6.70, 201),
            target: "psi_a".into(),
            delta_mhz: -290.0,
            delay_grid_ns: Grid::range(0.0, 3000.0, 301),
            delta_grid_mhz: Grid::Values(vec![-500.0, -400.0, -300.0, -200.0]),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OutputSection {
    pub directory: String,
    pub formats: Vec<Format>,
}

impl Default for OutputSection {
    fn default() -> Self {
        Self { directory: "out".into(), formats: vec![Format::Csv, Format::Json] }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Csv,
    Json,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    pub device: DeviceSection,
    pub drive: DriveSection,
    pub experiment: ExperimentSection,
    pub output: OutputSection,
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path)
            .map_err(|source| ConfigError::Read { path: path.display().to_string(), source })?;
        Self::parse(&text)
    }

    pub fn parse(text: &str) -> Result<Self, ConfigError> {
        let cfg: RunConfig = toml::from_str(text)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        let d = &self.device;
        let positive = [
            ("device.omega_r_ghz", d.omega_r_ghz),
            ("device.t1_intrinsic_us", d.t1_intrinsic_us),
            ("device.t_phi_ns", d.t_phi_ns),
            ("drive.epsilon_mhz", self.drive.epsilon_mhz),
            ("drive.omega_d_ghz", self.drive.omega_d_ghz),
        ];
        for (name, v) in positive {
            if !(v > 0.0) {
                return Err(invalid(format!("{name} must be positive, got {v}")));
            }
        }
        if !(d.kappa_mhz >= 0.0 && d.kappa_mhz.is_finite()) {
            return Err(invalid(format!("device.kappa_mhz must be >= 0, got {}", d.kappa_mhz)));
        }
        if d.n_qubits == 0 {
            return Err(invalid("device.n_qubits must be at least 1"));
        }
        if d.n_max < 2 {
            return Err(invalid(format!("device.n_max must be at least 2, got {}", d.n_max)));
        }
        for w in d.omega_q_ghz.expand("omega_q_ghz", d.n_qubits)? {
            if !(w > 0.0 && w.is_finite()) {
                return Err(invalid(format!("device.omega_q_ghz must be positive, got {w}")));
            }
        }
        for g in d.g_mhz.expand("g_mhz", d.n_qubits)? {
            if !(g >= 0.0 && g.is_finite()) {
                return Err(invalid(format!("device.g_mhz must be >= 0, got {g}")));
            }
        }
        if !(self.drive.xi >= 0.0 && self.drive.xi.is_finite()) {
            return Err(invalid(format!("drive.xi must be >= 0, got {}", self.drive.xi)));
        }
        let e = &self.experiment;
        e.phi_grid.check("experiment.phi_grid")?;
        for w in e.omega_d_grid_ghz.check("experiment.omega_d_grid_ghz")? {
            if w <= 0.0 {
                return Err(invalid("experiment.omega_d_grid_ghz must be positive"));
            }
        }
        let delays = e.delay_grid_ns.check("experiment.delay_grid_ns")?;
        if delays[0] != 0.0 || delays.len() < 4 || delays.windows(2).any(|w| w[1] <= w[0]) {
            return Err(invalid("experiment.delay_grid_ns must start at 0, increase, and have at least 4 points"));
        }
        e.delta_grid_mhz.check("experiment.delta_grid_mhz")?;
        if Target::parse(&e.target).is_none() {
            return Err(invalid(format!("experiment.target must be one of psi_a, psi_s, eg, ge; got {:?}", e.target)));
        }
        if !e.delta_mhz.is_finite() || !e.phase_offset_rad.is_finite() || !self.drive.phi_rad.is_finite() {
            return Err(invalid("experiment and drive values must be finite"));
        }
        if let Some(kind) = &e.kind {
            if !["dressed", "spectroscopy", "lifetime", "sweep"].contains(&kind.as_str()) {
                return Err(invalid(format!("experiment.type {kind:?} is not a known experiment")));
            }
        }
        Ok(())
    }

    /// Device parameters in internal units (rad/ns, 1/ns).
    pub fn device_params(&self) -> Result<DeviceParams, ConfigError> {
        let d = &self.device;
        let n = d.n_qubits;
        Ok(DeviceParams {
            omega_r: ghz_to_rad_per_ns(d.omega_r_ghz),
            omega_q: d.omega_q_ghz.expand("omega_q_ghz", n)?.into_iter().map(ghz_to_rad_per_ns).collect(),
            g: d.g_mhz.expand("g_mhz", n)?.into_iter().map(mhz_to_rad_per_ns).collect(),
            kappa: mhz_to_rad_per_ns(d.kappa_mhz),
            gamma_i: vec![rate_from_lifetime_ns(d.t1_intrinsic_us * 1e3); n],
            gamma_phi: vec![rate_from_lifetime_ns(d.t_phi_ns); n],
            n_max: d.n_max,
        })
    }

    pub fn target(&self) -> Target {
        Target::parse(&self.experiment.target).expect("validated target")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_file_gives_reference_defaults() {
        let cfg = RunConfig::parse("").unwrap();
        assert_eq!(cfg, RunConfig::default());
        let d = cfg.device_params().unwrap();
        assert_eq!(d, DeviceParams::reference_sample());
    }

    #[test]
    fn shipped_default_config_matches_built_in_defaults() {
        let text = include_str!("../../../configs/default.toml");
        assert_eq!(RunConfig::parse(text).unwrap(), RunConfig::default());
    }

    #[test]
    fn unknown_keys_are_rejected() {
        let err = RunConfig::parse("[device]\nkapa_mhz = 3.0\n").unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("kapa_mhz"), "{msg}");
        assert!(RunConfig::parse("[devices]\n").is_err());
        assert!(RunConfig::parse("[experiment.phi_grid]\nstart = 0.0\nstop = 1.0\npoints = 3\nstep = 1\n").is_err());
    }

    #[test]
    fn per_qubit_values_and_grids() {
        let text = r#"
            [device]
            omega_q_ghz = [6.6, 6.7]
            t_phi_ns = inf
            [experiment]
            delta_grid_mhz = [-400.0, -300.0]
            phi_grid = { start = 0.0, stop = 3.0, points = 4 }
        "#;
        let cfg = RunConfig::parse(text).unwrap();
        let d = cfg.device_params().unwrap();
        assert_eq!(d.omega_q[1], ghz_to_rad_per_ns(6.7));
        assert_eq!(d.gamma_phi, vec![0.0, 0.0]);
        assert_eq!(cfg.experiment.phi_grid.values(), vec![0.0, 1.0, 2.0, 3.0]);
        assert!(RunConfig::parse("[device]\nomega_q_ghz = [6.6]\n").is_err());
    }

    #[test]
    fn invalid_values_are_rejected() {
        for text in [
            "[device]\nkappa_mhz = -1.0\n",
            "[device]\nn_max = 1\n",
            "[drive]\nxi = -0.5\n",
            "[experiment]\ntarget = \"psi_x\"\n",
            "[experiment]\ndelay_grid_ns = [1.0, 2.0, 3.0, 4.0]\n",
            "[experiment]\nphi_grid = [0.0, 0.0]\n",
            "[experiment]\ntype = \"rabi\"\n",
        ] {
            assert!(matches!(RunConfig::parse(text), Err(ConfigError::Invalid(_))), "{text}");
        }
    }

    #[test]
    fn echo_round_trips_through_json() {
        let mut cfg = RunConfig::default();
        cfg.device.t_phi_ns = f64::INFINITY;
        let json = serde_json::to_value(&cfg).unwrap();
        assert_eq!(json["device"]["t_phi_ns"], "inf");
        assert_eq!(json["device"]["kappa_mhz"], 3.01);
        assert_eq!(json["device"]["omega_r_ghz"], 6.937);
    }
}
