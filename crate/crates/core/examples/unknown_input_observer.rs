// Observer whose error does not see the unknown input.

use deso::data::{
    collect_descriptor, uniform_vector, DataMatrices, Excitation, RecordMeta, SignalLaw,
};
use deso::descriptor::simulate;
use deso::plants::example2;
use deso::runtime::{run, Driver};
use deso::synthesis::synthesize_uio;
use deso::{Error, Result, Tolerances};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub fn run_example() -> Result<f64> {
    let tol = Tolerances::default();
    let sys = example2();
    let wf = sys.weierstrass(&tol)?;
    println!(
        "matching condition {}, uio rank condition {}",
        sys.matching_condition(&tol)?,
        sys.uio_rank_condition(&tol)?
    );

    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let law = SignalLaw::Uniform { lo: -5.0, hi: 5.0 };
    let ex = Excitation {
        t: 20,
        input: law,
        unknown_input: Some(law),
        initial: (0.0, 2.0),
    };
    let rec = collect_descriptor(&sys, &wf, &ex, &mut rng, RecordMeta::default())?;
    let syn = synthesize_uio(&DataMatrices::from_record(&rec), sys.q(), &tol)?;
    println!(
        "kernel inclusion {:?}",
        syn.report.checks.get("kernel_inclusion")
    );
    let gains = syn
        .gains
        .ok_or(Error::MissingData("uio synthesis should succeed".into()))?;

    let steps = 80;
    let u = SignalLaw::Sinusoid { amplitude: 4.0 }.sample(&mut rng, steps + sys.n(), 1);
    let z1 = uniform_vector(&mut rng, wf.n1, (0.0, 2.0));
    let e0 = uniform_vector(&mut rng, sys.n(), (-1.0, 1.0));
    let mut error_runs = Vec::new();
    for lo_hi in [(-1.0, 1.0), (-10.0, 10.0)] {
        let eta = SignalLaw::Uniform {
            lo: lo_hi.0,
            hi: lo_hi.1,
        }
        .sample(&mut rng, steps + sys.n(), 1);
        let traj = simulate(&sys, &wf, &z1, &u, Some(&eta), steps)?;
        let est = run(
            &gains,
            &u,
            &traj.y,
            &(&traj.x[0] - &e0),
            Some(&traj.x),
            Driver::NonCausal,
        )?;
        println!("η in {lo_hi:?}: ‖e(40)‖ = {:.3e}", est.err[40]);
        error_runs.push(est.errors().expect("truth supplied"));
    }
    let gap = error_runs[0]
        .iter()
        .zip(&error_runs[1])
        .map(|(a, b)| (a - b).norm())
        .fold(0.0, f64::max);
    println!("largest gap between the two error trajectories: {gap:.2e}");
    Ok(gap)
}

fn main() -> Result<()> {
    run_example().map(|_| ())
}
