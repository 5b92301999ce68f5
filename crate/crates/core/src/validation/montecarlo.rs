use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{model_observer, solve_tn};
use crate::data::{
    collect_descriptor, pe_assumption_check, DataMatrices, Excitation, RecordMeta, SignalLaw,
};
use crate::descriptor::random::{random_plant, PlantRecipe};
use crate::descriptor::DescriptorSystem;
use crate::error::{Error, Result};
use crate::linalg::{
    block_diag, hstack, pencil_rank, rank_drop_candidates, vstack, Mat, Tolerances, C64,
};
use crate::synthesis::{rank_condition_check, synthesize_observer, synthesize_uio, ObserverKind};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Equivalence {
    /// Standard observer: detectability against data feasibility.
    Standard,
    /// Unknown-input observer: matching plus the UIO rank condition.
    Uio,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MonteCarloConfig {
    pub mode: Equivalence,
    pub trials: usize,
    pub seed: u64,
    /// Largest state dimension drawn.
    pub max_n: usize,
    /// Plants with a relevant `λ` in `| |λ| − 1 | < band` are redrawn.
    pub band: f64,
}

impl MonteCarloConfig {
    pub fn new(mode: Equivalence, trials: usize, seed: u64) -> Self {
        Self {
            mode,
            trials,
            seed,
            max_n: 4,
            band: 0.05,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialCase {
    pub trial: usize,
    pub seed: u64,
    pub n1: usize,
    pub n2: usize,
    pub m: usize,
    pub p: usize,
    pub q: usize,
    pub unstable: usize,
    pub hidden: bool,
    pub matching: bool,
    pub pe_valid: bool,
    /// Model side: PBH detectability, or matching plus the UIO rank condition.
    pub model: bool,
    pub model_observer: bool,
    pub synthesis: bool,
    /// Data side rank test (with kernel inclusion for the UIO case).
    pub rank_condition: bool,
    pub agree: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MonteCarloSummary {
    pub mode: Equivalence,
    pub trials: usize,
    pub pe_passed: usize,
    pub agreements: usize,
    pub disagreements: usize,
    pub cases: Vec<TrialCase>,
}

impl MonteCarloSummary {
    pub fn save(&self, path: impl AsRef<std::path::Path>) -> Result<()> {
        std::fs::write(path, serde_json::to_string_pretty(self)? + "\n")?;
        Ok(())
    }
}

fn trial_seed(seed: u64, trial: usize) -> u64 {
    seed ^ (trial as u64 + 1).wrapping_mul(0x9E37_79B9_7F4A_7C15)
}

fn draw_recipe(mode: Equivalence, max_n: usize, rng: &mut impl Rng) -> PlantRecipe {
    let q = usize::from(mode == Equivalence::Uio);
    let min_n = 1 + q;
    let n = rng.random_range(min_n..=max_n.max(min_n));
    let n2 = rng.random_range(0..=(n - 1).min(2));
    let n1 = n - n2;
    let m = rng.random_range(1..=2);
    let p = rng.random_range(1..=2);
    let mut unstable = rng.random_range(0..=n1.min(2));
    let hidden = unstable > 0 && rng.random_bool(0.4);
    let matching = q == 0 || n1 < 2 || rng.random_bool(0.6);
    if !matching {
        unstable = unstable.min(n1 - 1);
    }
    PlantRecipe {
        n1,
        n2,
        m,
        p,
        q,
        unstable,
        hidden: hidden && unstable > 0,
        matching,
    }
}

/// The relevant rank-drop points keep away from the unit circle.
fn clear_of_band(
    sys: &DescriptorSystem,
    mode: Equivalence,
    band: f64,
    tol: &Tolerances,
) -> Result<bool> {
    let near = |l: &C64| (l.norm() - 1.0).abs() < band;
    if sys.finite_spectrum(tol)?.iter().any(near) {
        return Ok(false);
    }
    if mode == Equivalence::Uio {
        let f = sys.f.as_ref().expect("UIO plants carry F");
        let (n, p, q) = (sys.n(), sys.p(), sys.q());
        let lam = block_diag(&sys.e, &Mat::zeros(p, q));
        let constant = vstack(&[
            &hstack(&[&sys.a, f])?,
            &hstack(&[&(-&sys.c), &Mat::zeros(p, q)])?,
        ])?;
        if let Some(cands) = rank_drop_candidates(&lam, &constant, tol)? {
            for l in cands.iter().filter(|l| near(l)) {
                if pencil_rank(&lam, &constant, *l, tol) < n + q {
                    return Ok(false);
                }
            }
        }
    }
    Ok(true)
}

fn run_trial(cfg: &MonteCarloConfig, trial: usize, tol: &Tolerances) -> Result<TrialCase> {
    let seed = trial_seed(cfg.seed, trial);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (recipe, sys) = loop {
        let recipe = draw_recipe(cfg.mode, cfg.max_n, &mut rng);
        let sys = random_plant(&recipe, &mut rng)?;
        if clear_of_band(&sys, cfg.mode, cfg.band, tol)? {
            break (recipe, sys);
        }
    };
    let wf = sys.weierstrass(tol)?;
    let uio = cfg.mode == Equivalence::Uio;
    let latent = wf.n1 + (recipe.m + recipe.q) * (wf.nilpotency + 1);
    let ex = Excitation {
        t: 2 * latent + 5,
        input: SignalLaw::Uniform { lo: -1.0, hi: 1.0 },
        unknown_input: uio.then_some(SignalLaw::Uniform { lo: -1.0, hi: 1.0 }),
        initial: (-1.0, 1.0),
    };
    let meta = RecordMeta {
        seed,
        generator: "chacha8".into(),
    };
    let rec = collect_descriptor(&sys, &wf, &ex, &mut rng, meta)?;
    let pe_valid = pe_assumption_check(&rec, &wf, uio, tol)?;
    let dm = DataMatrices::from_record(&rec);

    let (model, model_obs, synthesis, rank_condition) = if uio {
        let model = sys.matching_condition(tol)? && sys.uio_rank_condition(tol)?;
        let model_obs = match solve_tn(&sys, true, tol)? {
            Some(base) => model_observer(&sys, &base, ObserverKind::Uio, tol)?.is_some(),
            None => false,
        };
        let out = synthesize_uio(&dm, recipe.q, tol)?;
        let rank = out.report.checks["kernel_inclusion"] && out.report.checks["rank_condition"];
        (model, model_obs, out.report.feasible, rank)
    } else {
        let model = sys.pbh_detectable(tol)?;
        let model_obs = match solve_tn(&sys, false, tol)? {
            Some(base) => model_observer(&sys, &base, ObserverKind::Standard, tol)?.is_some(),
            None => false,
        };
        let out = synthesize_observer(&dm, tol)?;
        (
            model,
            model_obs,
            out.report.feasible,
            rank_condition_check(&dm, tol)?,
        )
    };
    let agree = model == model_obs && model == synthesis && model == rank_condition;
    Ok(TrialCase {
        trial,
        seed,
        n1: recipe.n1,
        n2: recipe.n2,
        m: recipe.m,
        p: recipe.p,
        q: recipe.q,
        unstable: recipe.unstable,
        hidden: recipe.hidden,
        matching: recipe.matching,
        pe_valid,
        model,
        model_observer: model_obs,
        synthesis,
        rank_condition,
        agree,
    })
}

/// Random plants with known ground truth; the data-side verdicts must match
/// the model-side ones on every trial whose data pass the richness check.
/// Trials run in parallel, each from its own seed, so the output depends only
/// on the configuration.
pub fn montecarlo_equivalence(
    cfg: &MonteCarloConfig,
    tol: &Tolerances,
) -> Result<MonteCarloSummary> {
    tol.validate()?;
    if cfg.trials == 0 {
        return Err(Error::invalid("trials must be at least 1"));
    }
    if cfg.max_n == 0 || !(cfg.band >= 0.0 && cfg.band < 0.1) {
        return Err(Error::invalid(
            "max_n ≥ 1 and a band in [0, 0.1) are required",
        ));
    }
    let cases = (0..cfg.trials)
        .into_par_iter()
        .map(|i| run_trial(cfg, i, tol).map_err(|e| Error::invalid(format!("trial {i}: {e}"))))
        .collect::<Result<Vec<_>>>()?;
    let pe_passed = cases.iter().filter(|c| c.pe_valid).count();
    let agreements = cases.iter().filter(|c| c.pe_valid && c.agree).count();
    Ok(MonteCarloSummary {
        mode: cfg.mode,
        trials: cfg.trials,
        pe_passed,
        agreements,
        disagreements: pe_passed - agreements,
        cases,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_trials_rejected() {
        let cfg = MonteCarloConfig::new(Equivalence::Standard, 0, 1);
        assert!(montecarlo_equivalence(&cfg, &Tolerances::default()).is_err());
    }

    #[test]
    fn small_runs_agree_and_are_deterministic() {
        for mode in [Equivalence::Standard, Equivalence::Uio] {
            let cfg = MonteCarloConfig::new(mode, 12, 77);
            let a = montecarlo_equivalence(&cfg, &Tolerances::default()).unwrap();
            let b = montecarlo_equivalence(&cfg, &Tolerances::default()).unwrap();
            assert_eq!(a, b);
            assert_eq!(
                a.disagreements,
                0,
                "{:#?}",
                a.cases.iter().filter(|c| !c.agree).collect::<Vec<_>>()
            );
            assert!(a.pe_passed >= 10);
        }
    }
}
