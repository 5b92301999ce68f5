// Joint estimation of state and a constant disturbance.

use deso::data::{collect_lti, uniform_vector, RecordMeta, SignalLaw};
use deso::descriptor::simulate_lti;
use deso::linalg::Vector;
use deso::plants::example4;
use deso::runtime::{run, Driver};
use deso::synthesis::synthesize_eso;
use deso::{Error, Result, Tolerances};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub fn run_example() -> Result<(f64, f64)> {
    let tol = Tolerances::default();
    let plant = example4();
    println!("strongly detectable: {}", plant.strong_detectability(&tol)?);
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let rec = collect_lti(
        &plant,
        25,
        SignalLaw::Uniform { lo: -5.0, hi: 5.0 },
        SignalLaw::Uniform { lo: -3.0, hi: 3.0 },
        (-2.0, 0.0),
        &mut rng,
        RecordMeta::default(),
    )?;
    let syn = synthesize_eso(&plant, &rec, &tol)?;
    let gains = syn
        .gains
        .ok_or(Error::MissingData("eso synthesis should succeed".into()))?;
    println!(
        "observer order {}, spectral radius {:.4}",
        gains.n(),
        syn.report.spectral_radius
    );

    let steps = 100;
    let u = SignalLaw::Sinusoid { amplitude: 4.0 }.sample(&mut rng, steps + plant.n(), plant.m());
    let d = vec![Vector::from_row_slice(&[0.8, -1.5]); steps + plant.n()];
    let x0 = uniform_vector(&mut rng, plant.n(), (-2.0, 0.0));
    let traj = simulate_lti(&plant, &x0, &u, &d, steps)?;
    let truth = traj.augmented_states();
    let est = run(
        &gains,
        &u,
        &traj.y,
        &Vector::zeros(gains.n()),
        Some(&truth),
        Driver::NonCausal,
    )?;
    let errors = est.errors().expect("truth supplied");
    let (n, r) = (plant.n(), plant.r());
    let state_err = errors[steps].rows(0, n).norm();
    let dist_err = errors[steps].rows(n, r).norm();
    println!(
        "estimated disturbance {:.6}",
        est.xhat[steps].rows(n, r).transpose()
    );
    println!("final state error {state_err:.2e}, disturbance error {dist_err:.2e}");
    Ok((state_err, dist_err))
}

fn main() -> Result<()> {
    run_example().map(|_| ())
}
