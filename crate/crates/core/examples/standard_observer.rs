// Gains of a state observer computed from one experiment, then run on a test signal.

use deso::data::{
    collect_descriptor, uniform_vector, DataMatrices, Excitation, RecordMeta, SignalLaw,
};
use deso::descriptor::simulate;
use deso::plants::example1;
use deso::runtime::{run, Driver};
use deso::synthesis::synthesize_observer;
use deso::{Error, Result, Tolerances};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub fn run_example() -> Result<(f64, f64)> {
    let tol = Tolerances::default();
    let sys = example1();
    let wf = sys.weierstrass(&tol)?;
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let ex = Excitation {
        t: 20,
        input: SignalLaw::Uniform { lo: -5.0, hi: 5.0 },
        unknown_input: None,
        initial: (0.0, 2.0),
    };
    let rec = collect_descriptor(&sys, &wf, &ex, &mut rng, RecordMeta::default())?;

    let syn = synthesize_observer(&DataMatrices::from_record(&rec), &tol)?;
    let gains = syn.gains.ok_or(Error::MissingData(
        "plant is detectable, synthesis should succeed".into(),
    ))?;
    println!("spectral radius of A_O: {:.4}", syn.report.spectral_radius);
    println!("A_O =\n{:.4}", gains.a_o);

    let steps = 60;
    let u = SignalLaw::Sinusoid { amplitude: 4.0 }.sample(&mut rng, steps + sys.n(), 1);
    let z1 = uniform_vector(&mut rng, wf.n1, (0.0, 2.0));
    let traj = simulate(&sys, &wf, &z1, &u, None, steps)?;
    let xhat0 = uniform_vector(&mut rng, sys.n(), (0.0, 2.0));
    let est = run(
        &gains,
        &u,
        &traj.y,
        &xhat0,
        Some(&traj.x),
        Driver::NonCausal,
    )?;
    for k in [0, 10, 20, 40, 60] {
        println!("k = {k:>2}  ‖e(k)‖ = {:.3e}", est.err[k]);
    }
    Ok((syn.report.spectral_radius, est.err[steps]))
}

fn main() -> Result<()> {
    run_example().map(|_| ())
}
