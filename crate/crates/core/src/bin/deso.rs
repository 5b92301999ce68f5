use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use deso::experiments::{
    cmd_estimate, cmd_montecarlo, cmd_repro, cmd_simulate, cmd_synthesize, cmd_verify, ExitStatus,
    ExperimentConfig, GAINS,
};
use deso::synthesis::ObserverKind;
use deso::validation::Equivalence;
use deso::{Error, Result, Tolerances};

#[derive(Parser)]
#[command(
    name = "deso",
    version,
    about = "Data-driven observers for discrete-time descriptor systems"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// Experiment config (JSON).
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Overrides the config seed.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Output directory.
    #[arg(long, global = true, default_value = ".")]
    out: PathBuf,
    #[arg(long, global = true, value_enum)]
    mode: Option<Mode>,
    /// Monte-Carlo trials.
    #[arg(long, global = true, default_value_t = 100)]
    trials: usize,
}

#[derive(Subcommand)]
enum Command {
    /// Collect a persistently exciting dataset.
    Simulate,
    /// Synthesize observer gains from a dataset directory.
    Synthesize { dataset: Option<PathBuf> },
    /// Run saved gains on a fresh test trajectory.
    Estimate { gains: Option<PathBuf> },
    /// Data-side tests next to the model-side oracles.
    Verify { dataset: Option<PathBuf> },
    /// Reproduce a worked example (1, 2 or 4).
    Repro { example: u8 },
    /// Monte-Carlo equivalence of the data and model conditions.
    Montecarlo,
}

#[derive(Clone, Copy, ValueEnum)]
enum Mode {
    Standard,
    Uio,
    Eso,
}

impl From<Mode> for ObserverKind {
    fn from(m: Mode) -> Self {
        match m {
            Mode::Standard => ObserverKind::Standard,
            Mode::Uio => ObserverKind::Uio,
            Mode::Eso => ObserverKind::Eso,
        }
    }
}

impl Cli {
    fn experiment(&self) -> Result<ExperimentConfig> {
        let path = self
            .config
            .as_ref()
            .ok_or_else(|| Error::Parse("--config is required".into()))?;
        let mut cfg = ExperimentConfig::load(path)?;
        if let Some(seed) = self.seed {
            cfg.seed = seed;
        }
        if let Some(mode) = self.mode {
            cfg.mode = mode.into();
            cfg.validate()?;
        }
        Ok(cfg)
    }

    fn tolerances(&self) -> Result<Tolerances> {
        match &self.config {
            Some(_) => Ok(self.experiment()?.tolerances),
            None => Ok(Tolerances::default()),
        }
    }

    fn dataset_dir<'a>(&'a self, given: &'a Option<PathBuf>) -> &'a Path {
        given.as_deref().unwrap_or(&self.out)
    }
}

fn execute(cli: &Cli) -> Result<ExitStatus> {
    let out = &cli.out;
    match &cli.command {
        Command::Simulate => {
            let sim = cmd_simulate(&cli.experiment()?, out)?;
            println!(
                "dataset: T = {}, seed {} after {} attempt(s)",
                sim.meta.t, sim.meta.seed, sim.attempts
            );
            Ok(ExitStatus::Success)
        }
        Command::Synthesize { dataset } => {
            let syn = cmd_synthesize(
                cli.dataset_dir(dataset),
                cli.mode.map(Into::into),
                &cli.tolerances()?,
                out,
            )?;
            let r = &syn.report;
            println!(
                "feasible: {}, spectral radius {:.6}",
                r.feasible, r.spectral_radius
            );
            Ok(if r.feasible {
                ExitStatus::Success
            } else {
                ExitStatus::Infeasible
            })
        }
        Command::Estimate { gains } => {
            let path = gains.clone().unwrap_or_else(|| out.join(GAINS));
            let est = cmd_estimate(&path, &cli.experiment()?, out)?;
            if let Some(e) = est.err.last() {
                println!(
                    "final error {e:.3e}, recursion residual {:.3e}",
                    est.recursion_residual
                );
            }
            Ok(ExitStatus::Success)
        }
        Command::Verify { dataset } => {
            let tol = cli.tolerances()?;
            if dataset.is_none() && cli.config.is_some() {
                cmd_simulate(&cli.experiment()?, out)?;
            }
            let table = cmd_verify(cli.dataset_dir(dataset), &tol, out)?;
            for a in &table.agreement {
                let model = a.model.map_or("n/a".to_string(), |m| m.to_string());
                println!("{:<20} data {:<5} model {model}", a.condition, a.data);
            }
            Ok(ExitStatus::Success)
        }
        Command::Repro { example } => {
            let s = cmd_repro(*example, cli.seed, out)?;
            for (name, ok) in &s.criteria {
                println!("{:<26} {}", name, if *ok { "pass" } else { "FAIL" });
            }
            println!(
                "spectral radius {:.4} (reference {:?})",
                s.spectral_radius, s.reference_radius
            );
            Ok(if s.passed {
                ExitStatus::Success
            } else {
                ExitStatus::Infeasible
            })
        }
        Command::Montecarlo => {
            let mode = match cli.mode.unwrap_or(Mode::Standard) {
                Mode::Standard => Equivalence::Standard,
                Mode::Uio => Equivalence::Uio,
                Mode::Eso => {
                    return Err(Error::Parse(
                        "montecarlo supports --mode standard or uio".into(),
                    ))
                }
            };
            let s = cmd_montecarlo(mode, cli.trials, cli.seed.unwrap_or(0), out)?;
            println!(
                "{} trials, {} excited, {} disagreements",
                s.trials, s.pe_passed, s.disagreements
            );
            Ok(if s.disagreements == 0 {
                ExitStatus::Success
            } else {
                ExitStatus::Infeasible
            })
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() {
                ExitStatus::Parse.code()
            } else {
                0
            });
        }
    };
    match execute(&cli) {
        Ok(status) => ExitCode::from(status.code()),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(ExitStatus::of(&e).code())
        }
    }
}
