// The column space of the data stack equals the set of one-step system tuples,
// and a model-based observer exists exactly when the data-based one does.

use deso::data::{collect_descriptor, Excitation, RecordMeta, SignalLaw};
use deso::plants::example1;
use deso::synthesis::ObserverKind;
use deso::validation::{model_observer, solve_tn, trajectory_oracle};
use deso::{Result, Tolerances};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub fn run_example() -> Result<bool> {
    let tol = Tolerances::default();
    let sys = example1();
    let wf = sys.weierstrass(&tol)?;
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let ex = Excitation {
        t: 20,
        input: SignalLaw::Uniform { lo: -5.0, hi: 5.0 },
        unknown_input: None,
        initial: (0.0, 2.0),
    };
    let rec = collect_descriptor(&sys, &wf, &ex, &mut rng, RecordMeta::default())?;
    let outcome = trajectory_oracle(&sys, &wf, &rec, 50, &mut rng, &tol)?;
    println!("{outcome:#?}");

    let model_gains = match solve_tn(&sys, false, &tol)? {
        Some(base) => model_observer(&sys, &base, ObserverKind::Standard, &tol)?,
        None => None,
    };
    if let Some(g) = &model_gains {
        println!("model-based observer A_O =\n{:.4}", g.a_o);
    }
    Ok(outcome.holds && model_gains.is_some())
}

fn main() -> Result<()> {
    run_example().map(|_| ())
}
