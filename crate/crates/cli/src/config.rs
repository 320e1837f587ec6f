//! Experiment configuration: a TOML file with `[scenario]`, `[targets]` and
//! `[run]` sections. Missing keys are filled from the selected profile and
//! command; the fully resolved form is written next to every output so a
//! run can be repeated from it alone.

use std::fmt;
use std::path::{Path, PathBuf};

use clap::ValueEnum;
use serde::{Deserialize, Serialize};
use smi_core::{dbm_to_watts, Scenario64, Target, TargetSet64};

use crate::error::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Command {
    Eval,
    Fig1,
    Fig2,
    Fig3,
    Optimize,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::Eval => "eval",
            Command::Fig1 => "fig1",
            Command::Fig2 => "fig2",
            Command::Fig3 => "fig3",
            Command::Optimize => "optimize",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, ValueEnum)]
pub enum Profile {
    #[default]
    Desk,
    Paper,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Units {
    #[default]
    Nats,
    Bits,
}

impl Units {
    pub fn convert(self, nats: f64) -> f64 {
        match self {
            Units::Nats => nats,
            Units::Bits => nats / std::f64::consts::LN_2,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum TargetMode {
    Auto,
    Explicit,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PrecoderKind {
    Eigenbeam,
    ScaledRandom,
    File,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TargetEntry {
    pub aod_deg: f64,
    pub aoa_deg: f64,
    /// Defaults to the variance implied by `snr_db`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub reflect_var: Option<f64>,
}

/// File form: every key optional.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConfigFile {
    #[serde(default)]
    pub scenario: ScenarioSection,
    #[serde(default)]
    pub targets: TargetsSection,
    #[serde(default)]
    pub run: RunSection,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioSection {
    pub n_tx: Option<usize>,
    pub n_rx: Option<usize>,
    pub n_targets: Option<usize>,
    pub n_frames: Option<usize>,
    pub power_dbm: Option<f64>,
    pub noise_dbm: Option<f64>,
    pub carrier_hz: Option<f64>,
    pub snr_db: Option<f64>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TargetsSection {
    pub mode: Option<TargetMode>,
    pub angle_min_deg: Option<f64>,
    pub angle_max_deg: Option<f64>,
    pub seed: Option<u64>,
    pub list: Option<Vec<TargetEntry>>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunSection {
    /// Sweep values: frames (fig1), targets (fig2) or SNR in dB (fig3).
    pub grid: Option<Vec<f64>>,
    pub n_trials: Option<usize>,
    pub seed: Option<u64>,
    pub output: Option<PathBuf>,
    pub units: Option<Units>,
    pub precoder: Option<PrecoderKind>,
    pub precoder_file: Option<PathBuf>,
    /// Overrides the precoder power; 0 gives the zero precoder.
    pub precoder_power_w: Option<f64>,
    pub max_iters: Option<usize>,
    pub grad_norm_tol: Option<f64>,
    pub init: Option<PrecoderKind>,
}

/// Fully resolved configuration.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub command: Command,
    pub scenario: Scenario64,
    pub power_dbm: f64,
    pub noise_dbm: f64,
    pub targets: TargetSpec,
    pub grid: Vec<f64>,
    pub n_trials: usize,
    pub seed: u64,
    pub output: PathBuf,
    pub units: Units,
    pub precoder: PrecoderKind,
    pub precoder_file: Option<PathBuf>,
    pub precoder_power_w: Option<f64>,
    pub max_iters: usize,
    pub grad_norm_tol: f64,
    pub init: PrecoderKind,
}

#[derive(Debug, Clone, PartialEq)]
pub enum TargetSpec {
    Auto { lo_deg: f64, hi_deg: f64, seed: u64 },
    Explicit(Vec<TargetEntry>),
}

/// Command-line values that take precedence over the file.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub seed: Option<u64>,
    pub output: Option<PathBuf>,
    pub units: Option<Units>,
}

/// Environment variable that redirects the output directory.
pub const OUTPUT_DIR_ENV: &str = "SMI_OUTPUT_DIR";

struct Defaults {
    dims: (usize, usize, usize, usize),
    grid: Vec<f64>,
    n_trials: usize,
}

fn defaults(command: Command, profile: Profile) -> Defaults {
    let d = |dims, grid: &[f64], n_trials| Defaults {
        dims,
        grid: grid.to_vec(),
        n_trials,
    };
    match (profile, command) {
        (Profile::Desk, Command::Eval | Command::Optimize) => d((8, 4, 3, 16), &[], 2000),
        (Profile::Desk, Command::Fig1) => d((8, 4, 3, 16), &[4.0, 8.0, 16.0, 32.0, 64.0], 5000),
        (Profile::Desk, Command::Fig2) => d((16, 8, 4, 32), &[1.0, 2.0, 4.0, 8.0, 16.0], 1000),
        (Profile::Desk, Command::Fig3) => d((16, 8, 15, 32), &[0.0, 5.0, 10.0, 15.0, 20.0], 500),
        (Profile::Paper, Command::Eval | Command::Optimize) => d((32, 16, 7, 32), &[], 5000),
        (Profile::Paper, Command::Fig1) => d(
            (32, 16, 7, 32),
            &[8.0, 16.0, 24.0, 32.0, 48.0, 64.0, 96.0, 128.0],
            5000,
        ),
        (Profile::Paper, Command::Fig2) => d(
            (32, 16, 7, 32),
            &[1.0, 2.0, 4.0, 8.0, 12.0, 16.0, 24.0, 32.0],
            5000,
        ),
        (Profile::Paper, Command::Fig3) => d(
            (32, 16, 15, 32),
            &[0.0, 5.0, 10.0, 15.0, 20.0, 25.0, 30.0],
            5000,
        ),
    }
}

fn field_err(field: &str, msg: impl fmt::Display) -> CliError {
    CliError::Config(format!("{field}: {msg}"))
}

impl ConfigFile {
    pub fn parse(text: &str, origin: &Path) -> Result<Self, CliError> {
        toml::from_str(text).map_err(|e| CliError::Config(format!("{}: {e}", origin.display())))
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::parse(&text, path)
    }

    /// Fills every missing key; command-line overrides win, then the
    /// output-directory environment variable, then the file.
    pub fn resolve(
        &self,
        command: Command,
        profile: Profile,
        overrides: &Overrides,
        env_output: Option<PathBuf>,
    ) -> Result<ExperimentConfig, CliError> {
        let d = defaults(command, profile);
        let s = &self.scenario;
        let r = &self.run;
        let power_dbm = s.power_dbm.unwrap_or(30.0);
        let noise_dbm = s.noise_dbm.unwrap_or(-90.0);
        let scenario = Scenario64 {
            n_tx: s.n_tx.unwrap_or(d.dims.0),
            n_rx: s.n_rx.unwrap_or(d.dims.1),
            n_targets: s.n_targets.unwrap_or(d.dims.2),
            n_frames: s.n_frames.unwrap_or(d.dims.3),
            noise_power: dbm_to_watts(noise_dbm),
            power_budget: dbm_to_watts(power_dbm),
            carrier_hz: s.carrier_hz.unwrap_or(28e9),
            snr_db: s.snr_db.unwrap_or(20.0),
        };
        let seed = overrides.seed.or(r.seed).unwrap_or(0);
        let t = &self.targets;
        let targets = match (t.mode, &t.list) {
            (Some(TargetMode::Explicit), None) => {
                return Err(field_err(
                    "targets.list",
                    "required when mode = \"explicit\"",
                ))
            }
            (Some(TargetMode::Explicit), Some(list)) | (None, Some(list)) => {
                if t.angle_min_deg.is_some() || t.angle_max_deg.is_some() {
                    return Err(field_err(
                        "targets",
                        "angle range is only used with mode = \"auto\"",
                    ));
                }
                TargetSpec::Explicit(list.clone())
            }
            (Some(TargetMode::Auto), Some(_)) => {
                return Err(field_err(
                    "targets.list",
                    "not allowed with mode = \"auto\"",
                ))
            }
            (Some(TargetMode::Auto), None) | (None, None) => TargetSpec::Auto {
                lo_deg: t.angle_min_deg.unwrap_or(30.0),
                hi_deg: t.angle_max_deg.unwrap_or(60.0),
                seed: t.seed.unwrap_or(seed),
            },
        };
        let output = overrides
            .output
            .clone()
            .or(env_output)
            .or_else(|| r.output.clone())
            .unwrap_or_else(|| PathBuf::from("results"));
        let cfg = ExperimentConfig {
            command,
            scenario,
            power_dbm,
            noise_dbm,
            targets,
            grid: r.grid.clone().unwrap_or(d.grid),
            n_trials: r.n_trials.unwrap_or(d.n_trials),
            seed,
            output,
            units: overrides.units.or(r.units).unwrap_or_default(),
            precoder: r.precoder.unwrap_or(if r.precoder_file.is_some() {
                PrecoderKind::File
            } else {
                PrecoderKind::Eigenbeam
            }),
            precoder_file: r.precoder_file.clone(),
            precoder_power_w: r.precoder_power_w,
            max_iters: r.max_iters.unwrap_or(50),
            grad_norm_tol: r.grad_norm_tol.unwrap_or(1e-5),
            init: r.init.unwrap_or(PrecoderKind::Eigenbeam),
        };
        cfg.validate()?;
        Ok(cfg)
    }
}

fn integer(x: f64) -> Option<usize> {
    (x >= 0.0 && x.fract() == 0.0 && x < 1e9).then_some(x as usize)
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<(), CliError> {
        let s = &self.scenario;
        s.validate().map_err(|e| field_err("scenario", e))?;
        for (name, v) in [
            ("scenario.power_dbm", self.power_dbm),
            ("scenario.noise_dbm", self.noise_dbm),
        ] {
            if !v.is_finite() {
                return Err(field_err(name, "must be finite"));
            }
        }
        match &self.targets {
            TargetSpec::Auto { lo_deg, hi_deg, .. } => {
                if !(-90.0 <= *lo_deg && lo_deg <= hi_deg && *hi_deg <= 90.0) {
                    return Err(field_err(
                        "targets.angle_min_deg/angle_max_deg",
                        "need -90 <= min <= max <= 90",
                    ));
                }
            }
            TargetSpec::Explicit(list) => {
                let need = match self.command {
                    Command::Fig2 => self.grid.iter().fold(0.0f64, |a, &b| a.max(b)) as usize,
                    _ => s.n_targets,
                };
                if list.len() < need {
                    return Err(field_err(
                        "targets.list",
                        format!("{} entries given, {need} needed", list.len()),
                    ));
                }
                for (i, t) in list.iter().enumerate() {
                    if !(t.aod_deg.abs() <= 90.0 && t.aoa_deg.abs() <= 90.0) {
                        return Err(field_err(
                            &format!("targets.list[{i}]"),
                            "angles must lie in [-90, 90]",
                        ));
                    }
                    if let Some(v) = t.reflect_var {
                        if !(v >= 0.0 && v.is_finite()) {
                            return Err(field_err(
                                &format!("targets.list[{i}].reflect_var"),
                                "must be >= 0",
                            ));
                        }
                    }
                }
            }
        }
        let sweeps = matches!(self.command, Command::Fig1 | Command::Fig2 | Command::Fig3);
        if sweeps {
            if self.grid.is_empty() {
                return Err(field_err("run.grid", "must not be empty"));
            }
            if self.grid.iter().any(|x| !x.is_finite()) {
                return Err(field_err("run.grid", "values must be finite"));
            }
            if self.grid.windows(2).any(|w| w[0] >= w[1]) {
                return Err(field_err(
                    "run.grid",
                    "must be sorted in strictly increasing order",
                ));
            }
        }
        match self.command {
            Command::Fig1 => {
                for &x in &self.grid {
                    let n = integer(x).ok_or_else(|| {
                        field_err("run.grid", "frame counts must be whole numbers")
                    })?;
                    if n < s.n_targets {
                        return Err(field_err(
                            "run.grid",
                            format!(
                                "frame count {n} below the number of targets {}",
                                s.n_targets
                            ),
                        ));
                    }
                }
            }
            Command::Fig2 => {
                for &x in &self.grid {
                    let k = integer(x).ok_or_else(|| {
                        field_err("run.grid", "target counts must be whole numbers")
                    })?;
                    if k == 0 || k > s.n_frames || k > s.n_tx {
                        return Err(field_err(
                            "run.grid",
                            format!("target count {k} must lie in 1..=min(n_frames, n_tx)"),
                        ));
                    }
                }
            }
            _ => {}
        }
        if self.command != Command::Optimize && self.n_trials < 2 {
            return Err(field_err("run.n_trials", "must be at least 2"));
        }
        if self.precoder == PrecoderKind::File {
            match &self.precoder_file {
                None => {
                    return Err(field_err(
                        "run.precoder_file",
                        "required when precoder = \"file\"",
                    ))
                }
                Some(p) if !p.is_file() => {
                    return Err(field_err(
                        "run.precoder_file",
                        format!("{} does not exist", p.display()),
                    ))
                }
                _ => {}
            }
        }
        if self.init == PrecoderKind::File {
            return Err(field_err(
                "run.init",
                "must be \"eigenbeam\" or \"scaled-random\"",
            ));
        }
        if let Some(p) = self.precoder_power_w {
            if !(p >= 0.0 && p.is_finite()) {
                return Err(field_err("run.precoder_power_w", "must be finite and >= 0"));
            }
        }
        if !(self.grad_norm_tol >= 0.0) {
            return Err(field_err("run.grad_norm_tol", "must be >= 0"));
        }
        Ok(())
    }

    /// Targets for a scenario with `k` targets.
    pub fn target_set(&self, k: usize, snr_db: f64) -> Result<TargetSet64, CliError> {
        let s = Scenario64 {
            n_targets: k,
            snr_db,
            ..self.scenario
        };
        let var = s.reflect_var();
        let set = match &self.targets {
            TargetSpec::Auto {
                lo_deg,
                hi_deg,
                seed,
            } => TargetSet64::auto(k, *lo_deg, *hi_deg, var, *seed),
            TargetSpec::Explicit(list) => TargetSet64::new(
                list[..k]
                    .iter()
                    .map(|t| Target {
                        aod: t.aod_deg.to_radians(),
                        aoa: t.aoa_deg.to_radians(),
                        reflect_var: t.reflect_var.unwrap_or(var),
                    })
                    .collect(),
            ),
        };
        set.map_err(|e| field_err("targets", e))
    }

    /// The file form with every key present.
    pub fn to_file(&self) -> ConfigFile {
        let s = &self.scenario;
        let targets = match &self.targets {
            TargetSpec::Auto {
                lo_deg,
                hi_deg,
                seed,
            } => TargetsSection {
                mode: Some(TargetMode::Auto),
                angle_min_deg: Some(*lo_deg),
                angle_max_deg: Some(*hi_deg),
                seed: Some(*seed),
                list: None,
            },
            TargetSpec::Explicit(list) => TargetsSection {
                mode: Some(TargetMode::Explicit),
                list: Some(list.clone()),
                ..TargetsSection::default()
            },
        };
        ConfigFile {
            scenario: ScenarioSection {
                n_tx: Some(s.n_tx),
                n_rx: Some(s.n_rx),
                n_targets: Some(s.n_targets),
                n_frames: Some(s.n_frames),
                power_dbm: Some(self.power_dbm),
                noise_dbm: Some(self.noise_dbm),
                carrier_hz: Some(s.carrier_hz),
                snr_db: Some(s.snr_db),
            },
            targets,
            run: RunSection {
                grid: Some(self.grid.clone()),
                n_trials: Some(self.n_trials),
                seed: Some(self.seed),
                output: Some(self.output.clone()),
                units: Some(self.units),
                precoder: Some(self.precoder),
                precoder_file: self.precoder_file.clone(),
                precoder_power_w: self.precoder_power_w,
                max_iters: Some(self.max_iters),
                grad_norm_tol: Some(self.grad_norm_tol),
                init: Some(self.init),
            },
        }
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(&self.to_file()).expect("resolved config serialises")
    }
}

/// Per-point seed derived from the run seed (SplitMix64 finaliser), so
/// each sweep point is reproducible on its own.
pub fn derive_seed(seed: u64, index: u64) -> u64 {
    let mut z = seed ^ index.wrapping_add(1).wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}
