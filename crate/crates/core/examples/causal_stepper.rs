// Streaming the observer sample by sample without looking ahead.

use deso::data::{uniform_vector, SignalLaw};
use deso::descriptor::simulate;
use deso::experiments::{cmd_simulate, cmd_synthesize, ExperimentConfig};
use deso::runtime::{run, Driver, Stepper};
use deso::synthesis::ObserverGains;
use deso::{Result, Tolerances};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub fn run_example() -> Result<f64> {
    let dir = tempfile::tempdir()?;
    let cfg = ExperimentConfig::worked_example(1)?;
    cmd_simulate(&cfg, dir.path())?;
    cmd_synthesize(dir.path(), None, &cfg.tolerances, dir.path())?;
    let gains = ObserverGains::load(dir.path().join("gains.json"))?;

    let sys = deso::plants::example1();
    let wf = sys.weierstrass(&Tolerances::default())?;
    let mut rng = ChaCha8Rng::seed_from_u64(99);
    let steps = 30;
    let u = SignalLaw::Uniform { lo: -1.0, hi: 1.0 }.sample(&mut rng, steps + sys.n(), 1);
    let traj = simulate(
        &sys,
        &wf,
        &uniform_vector(&mut rng, wf.n1, (0.0, 2.0)),
        &u,
        None,
        steps,
    )?;
    let xhat0 = uniform_vector(&mut rng, sys.n(), (0.0, 2.0));

    let mut stepper = Stepper::new(&gains, xhat0.clone());
    let streamed: Vec<_> = (0..=steps)
        .map(|k| stepper.push(&u[k], &traj.y[k]))
        .collect();
    let batch = run(&gains, &u, &traj.y, &xhat0, None, Driver::NonCausal)?;
    let gap = streamed
        .iter()
        .zip(&batch.xhat)
        .map(|(a, b)| (a - b).norm())
        .fold(0.0, f64::max);
    println!(
        "after {} samples: x̂ = {:.5}",
        stepper.state().k,
        streamed[steps].transpose()
    );
    println!("largest gap to the look-ahead form {gap:.2e}");
    Ok(gap)
}

fn main() -> Result<()> {
    run_example().map(|_| ())
}
