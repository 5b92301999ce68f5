//! End-to-end experiment orchestration behind the `deso` binary.
//!
//! Every command reads an [`ExperimentConfig`] (or files written by an earlier
//! command) and writes fixed file names into an output directory.

mod commands;

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::data::SignalLaw;
use crate::descriptor::PlantModel;
use crate::error::{Error, Result};
use crate::linalg::Tolerances;
use crate::plants;
use crate::synthesis::ObserverKind;

pub use commands::{
    cmd_estimate, cmd_montecarlo, cmd_repro, cmd_simulate, cmd_synthesize, cmd_verify, Agreement,
    CheckTable, ReproSummary, SimulateOutcome, MAX_PE_ATTEMPTS,
};

pub const DATASET: &str = "dataset.csv";
pub const META: &str = "meta.json";
pub const GAINS: &str = "gains.json";
pub const REPORT: &str = "report.json";
pub const RUN: &str = "run.csv";
pub const CHECKS: &str = "checks.json";
pub const SUMMARY: &str = "summary.json";

/// Process exit status of the CLI.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ExitStatus {
    Success = 0,
    Parse = 1,
    Infeasible = 2,
    PeExhausted = 3,
    Io = 4,
}

impl ExitStatus {
    pub fn of(err: &Error) -> Self {
        match err {
            Error::Io(_) => ExitStatus::Io,
            Error::Csv(e) if e.is_io_error() => ExitStatus::Io,
            Error::PeExhausted(_) => ExitStatus::PeExhausted,
            Error::SingularPencil => ExitStatus::Infeasible,
            _ => ExitStatus::Parse,
        }
    }

    pub fn code(self) -> u8 {
        self as u8
    }
}

/// A plant given inline or as a path to a JSON file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum SystemSpec {
    Path(PathBuf),
    Inline(PlantModel),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TestConfig {
    pub steps: usize,
    pub input_law: SignalLaw,
    /// Unknown input or disturbance during the test run.
    pub disturbance_law: Option<SignalLaw>,
    /// `z1(0)` (descriptor) or `x(0)` (state space) entries.
    pub initial: (f64, f64),
    pub observer_initial: (f64, f64),
}

impl Default for TestConfig {
    fn default() -> Self {
        Self {
            steps: 200,
            input_law: SignalLaw::Sinusoid { amplitude: 4.0 },
            disturbance_law: None,
            initial: (0.0, 2.0),
            observer_initial: (0.0, 2.0),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub system: SystemSpec,
    #[serde(rename = "T")]
    pub t: usize,
    #[serde(default)]
    pub seed: u64,
    pub input_law: SignalLaw,
    #[serde(default)]
    pub disturbance_law: Option<SignalLaw>,
    /// Interval for the initial slow state (or plant state) of the experiment.
    #[serde(default = "default_initial")]
    pub initial: (f64, f64),
    #[serde(default)]
    pub tolerances: Tolerances,
    #[serde(default = "default_mode")]
    pub mode: ObserverKind,
    #[serde(default)]
    pub test: TestConfig,
}

fn default_initial() -> (f64, f64) {
    (0.0, 2.0)
}

fn default_mode() -> ObserverKind {
    ObserverKind::Standard
}

impl ExperimentConfig {
    /// Parses a config file; a relative system path is taken relative to it.
    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path)?;
        let mut cfg: Self =
            serde_json::from_str(&text).map_err(|e| Error::Parse(format!("config: {e}")))?;
        if let SystemSpec::Path(p) = &cfg.system {
            if p.is_relative() {
                let base = path.parent().unwrap_or(Path::new("."));
                cfg.system = SystemSpec::Path(base.join(p));
            }
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        std::fs::write(path, serde_json::to_string_pretty(self)? + "\n")?;
        Ok(())
    }

    pub fn plant(&self) -> Result<PlantModel> {
        match &self.system {
            SystemSpec::Inline(p) => Ok(p.clone()),
            SystemSpec::Path(p) => {
                let text = std::fs::read_to_string(p)?;
                serde_json::from_str(&text)
                    .map_err(|e| Error::Parse(format!("system {}: {e}", p.display())))
            }
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.t == 0 {
            return Err(Error::Parse("T must be at least 1".into()));
        }
        self.input_law.validate()?;
        self.test.input_law.validate()?;
        for law in [self.disturbance_law, self.test.disturbance_law]
            .into_iter()
            .flatten()
        {
            law.validate()?;
        }
        for (lo, hi) in [self.initial, self.test.initial, self.test.observer_initial] {
            if !(lo.is_finite() && hi.is_finite() && lo <= hi) {
                return Err(Error::Parse(format!(
                    "initial-state interval ({lo}, {hi}) is malformed"
                )));
            }
        }
        self.tolerances.validate()?;
        if self.mode != ObserverKind::Standard && self.disturbance_law.is_none() {
            return Err(Error::Parse(format!(
                "mode {:?} needs a disturbance_law",
                self.mode
            )));
        }
        if let SystemSpec::Inline(p) = &self.system {
            check_mode(p, self.mode)?;
        }
        Ok(())
    }

    /// The settings used for one of the worked examples (1, 2 or 4).
    pub fn worked_example(example: u8) -> Result<Self> {
        let uniform = |lo, hi| SignalLaw::Uniform { lo, hi };
        let base = |system: PlantModel, t, mode| ExperimentConfig {
            system: SystemSpec::Inline(system),
            t,
            seed: 0,
            input_law: uniform(-5.0, 5.0),
            disturbance_law: None,
            initial: (0.0, 2.0),
            tolerances: Tolerances::default(),
            mode,
            test: TestConfig::default(),
        };
        let cfg = match example {
            1 => base(
                PlantModel::Descriptor(plants::example1()),
                20,
                ObserverKind::Standard,
            ),
            2 => {
                let mut c = base(
                    PlantModel::Descriptor(plants::example2()),
                    20,
                    ObserverKind::Uio,
                );
                c.disturbance_law = Some(uniform(-5.0, 5.0));
                c.test.disturbance_law = Some(uniform(-1.0, 1.0));
                c
            }
            4 => {
                let mut c = base(PlantModel::Lti(plants::example4()), 25, ObserverKind::Eso);
                c.disturbance_law = Some(uniform(-3.0, 3.0));
                c.initial = (-2.0, 0.0);
                c.test.disturbance_law = Some(uniform(-2.0, 2.0));
                c.test.initial = (-2.0, 0.0);
                c
            }
            other => {
                return Err(Error::Parse(format!(
                    "no worked example {other}; choose 1, 2 or 4"
                )))
            }
        };
        Ok(cfg)
    }

    /// Quoted radius for the example this config was built from, if any.
    pub fn reference_radius(example: u8) -> Option<f64> {
        match example {
            1 => Some(plants::EXAMPLE1_REFERENCE_RADIUS),
            2 => Some(plants::EXAMPLE2_REFERENCE_RADIUS),
            4 => Some(plants::EXAMPLE4_REFERENCE_RADIUS),
            _ => None,
        }
    }
}

pub(crate) fn check_mode(plant: &PlantModel, mode: ObserverKind) -> Result<()> {
    match (plant, mode) {
        (PlantModel::Descriptor(s), ObserverKind::Uio) if s.f.is_none() => Err(Error::Parse(
            "mode uio needs a descriptor system with F".into(),
        )),
        (PlantModel::Descriptor(_), ObserverKind::Eso) => Err(Error::Parse(
            "mode eso needs a state-space system (A0, B0, E0, C0, F0)".into(),
        )),
        (PlantModel::Lti(_), ObserverKind::Standard | ObserverKind::Uio) => Err(Error::Parse(
            "a state-space disturbance plant is run in mode eso".into(),
        )),
        _ => Ok(()),
    }
}
