//! Acceptance suite: one pass/fail line per criterion, non-zero exit if any fails.

use std::time::{Duration, Instant};

use deso::data::{
    collect_descriptor, collect_lti, pe_assumption_check, pe_lti_check, uniform_vector,
    DataMatrices, DataRecord, Excitation, RecordMeta, SignalLaw,
};
use deso::descriptor::random::{random_plant, uniform_matrix, PlantRecipe};
use deso::descriptor::{simulate, simulate_lti, DescriptorSystem};
use deso::linalg::{null_space_basis, numerical_rank, pseudoinverse, Vector};
use deso::plants::{example1, example2, example4};
use deso::runtime::{run, Driver, EstimationRun};
use deso::synthesis::{synthesize_eso, synthesize_observer, synthesize_uio, ObserverGains};
use deso::validation::{montecarlo_equivalence, trajectory_oracle, Equivalence, MonteCarloConfig};
use deso::{Mat, Result, Tolerances};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const SEEDS: u64 = 100;
const TEST_STEPS: usize = 200;

type Criterion = (u8, &'static str, Option<Duration>, fn() -> Result<Outcome>);

struct Outcome {
    passed: bool,
    detail: String,
}

fn outcome(passed: bool, detail: impl Into<String>) -> Result<Outcome> {
    Ok(Outcome {
        passed,
        detail: detail.into(),
    })
}

fn uniform(lo: f64, hi: f64) -> SignalLaw {
    SignalLaw::Uniform { lo, hi }
}

/// Historical experiment with the worked-example settings.
fn training_record(
    sys: &DescriptorSystem,
    t: usize,
    eta: Option<SignalLaw>,
    seed: u64,
) -> Result<(DataRecord, bool)> {
    let tol = Tolerances::default();
    let wf = sys.weierstrass(&tol)?;
    let ex = Excitation {
        t,
        input: uniform(-5.0, 5.0),
        unknown_input: eta,
        initial: (0.0, 2.0),
    };
    let rec = collect_descriptor(
        sys,
        &wf,
        &ex,
        &mut ChaCha8Rng::seed_from_u64(seed),
        RecordMeta::default(),
    )?;
    let pe = pe_assumption_check(&rec, &wf, eta.is_some(), &tol)?;
    Ok((rec, pe))
}

/// Test run with `u(k) = 4 sin k`, `z1(0)` and `x̂(0)` uniform on (0, 2).
fn descriptor_test_run(
    sys: &DescriptorSystem,
    g: &ObserverGains,
    eta: Option<&[Vector]>,
    rng: &mut ChaCha8Rng,
) -> Result<EstimationRun> {
    let wf = sys.weierstrass(&Tolerances::default())?;
    let u = SignalLaw::Sinusoid { amplitude: 4.0 }.sample(rng, TEST_STEPS + sys.n(), sys.m());
    let z1 = uniform_vector(rng, wf.n1, (0.0, 2.0));
    let xhat0 = uniform_vector(rng, sys.n(), (0.0, 2.0));
    let traj = simulate(sys, &wf, &z1, &u, eta, TEST_STEPS)?;
    run(g, &u, &traj.y, &xhat0, Some(&traj.x), Driver::NonCausal)
}

fn below_from(err: &[f64], threshold: f64) -> Option<usize> {
    (0..err.len()).find(|&k| err[k..].iter().all(|&e| e < threshold))
}

fn example4_gains(seed: u64) -> Result<Option<ObserverGains>> {
    let tol = Tolerances::default();
    let plant = example4();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let rec = collect_lti(
        &plant,
        25,
        uniform(-5.0, 5.0),
        uniform(-3.0, 3.0),
        (-2.0, 0.0),
        &mut rng,
        RecordMeta::default(),
    )?;
    if !pe_lti_check(&rec, &tol)? {
        return Ok(None);
    }
    Ok(synthesize_eso(&plant, &rec, &tol)?.gains)
}

fn example4_runs(g: &ObserverGains, seed: u64) -> Result<(EstimationRun, EstimationRun)> {
    let plant = example4();
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0xE50);
    let u =
        SignalLaw::Sinusoid { amplitude: 4.0 }.sample(&mut rng, TEST_STEPS + plant.n(), plant.m());
    let d = uniform(-2.0, 2.0).sample(&mut rng, TEST_STEPS + plant.n(), plant.r());
    let x0 = uniform_vector(&mut rng, plant.n(), (-2.0, 0.0));
    let xhat0 = uniform_vector(&mut rng, g.n(), (0.0, 2.0));
    let traj = simulate_lti(&plant, &x0, &u, &d, TEST_STEPS)?;
    let truth = traj.augmented_states();
    let noncausal = run(g, &u, &traj.y, &xhat0, Some(&truth), Driver::NonCausal)?;
    let causal = run(g, &u, &traj.y, &xhat0, Some(&truth), Driver::Causal)?;
    Ok((noncausal, causal))
}

fn criterion1() -> Result<Outcome> {
    let sys = example1();
    let (mut valid, mut good) = (0, 0);
    let mut worst_radius: f64 = 0.0;
    for seed in 0..SEEDS {
        let (rec, pe) = training_record(&sys, 20, None, seed)?;
        if !pe {
            continue;
        }
        valid += 1;
        let syn = synthesize_observer(&DataMatrices::from_record(&rec), &Tolerances::default())?;
        let Some(g) = syn.gains else { continue };
        worst_radius = worst_radius.max(syn.report.spectral_radius);
        let est =
            descriptor_test_run(&sys, &g, None, &mut ChaCha8Rng::seed_from_u64(seed + 1_000))?;
        if syn.report.spectral_radius < 1.0 && below_from(&est.err, 1e-6).is_some_and(|k| k <= 50) {
            good += 1;
        }
    }
    outcome(
        valid > 0 && good == valid,
        format!("{good}/{valid} PE-valid seeds converge, worst radius {worst_radius:.4}"),
    )
}

fn criterion2() -> Result<Outcome> {
    let mut worst: f64 = 0.0;
    let mut runs = 0;
    for seed in 0..10 {
        let (rec, _) = training_record(&example1(), 20, None, seed)?;
        if let Some(g) =
            synthesize_observer(&DataMatrices::from_record(&rec), &Tolerances::default())?.gains
        {
            let est =
                descriptor_test_run(&example1(), &g, None, &mut ChaCha8Rng::seed_from_u64(seed))?;
            worst = worst.max(est.recursion_residual);
            runs += 1;
        }
        let sys = example2();
        let (rec, _) = training_record(&sys, 20, Some(uniform(-5.0, 5.0)), seed)?;
        if let Some(g) =
            synthesize_uio(&DataMatrices::from_record(&rec), 1, &Tolerances::default())?.gains
        {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let eta = uniform(-1.0, 1.0).sample(&mut rng, TEST_STEPS + sys.n(), 1);
            let est = descriptor_test_run(&sys, &g, Some(&eta), &mut rng)?;
            worst = worst.max(est.recursion_residual);
            runs += 1;
        }
        if let Some(g) = example4_gains(seed)? {
            worst = worst.max(example4_runs(&g, seed)?.0.recursion_residual);
            runs += 1;
        }
    }
    outcome(
        runs == 30 && worst < 1e-8,
        format!("{runs}/30 runs, max ‖e(k+1) − A_O·e(k)‖ = {worst:.2e}"),
    )
}

fn criterion3() -> Result<Outcome> {
    let sys = example2();
    let wf = sys.weierstrass(&Tolerances::default())?;
    let mut worst: f64 = 0.0;
    let mut runs = 0;
    for seed in 0..20 {
        let (rec, pe) = training_record(&sys, 20, Some(uniform(-5.0, 5.0)), seed)?;
        let Some(g) =
            synthesize_uio(&DataMatrices::from_record(&rec), 1, &Tolerances::default())?.gains
        else {
            continue;
        };
        if !pe {
            continue;
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed + 500);
        let len = TEST_STEPS + sys.n();
        let u = SignalLaw::Sinusoid { amplitude: 4.0 }.sample(&mut rng, len, 1);
        let z1 = uniform_vector(&mut rng, wf.n1, (0.0, 2.0));
        let e0 = uniform_vector(&mut rng, sys.n(), (-2.0, 2.0));
        let errors: Vec<Vec<Vector>> = (0..2)
            .map(|_| {
                let eta = uniform(-1.0, 1.0).sample(&mut rng, len, 1);
                let traj = simulate(&sys, &wf, &z1, &u, Some(&eta), TEST_STEPS)?;
                let est = run(
                    &g,
                    &u,
                    &traj.y,
                    &(&traj.x[0] - &e0),
                    Some(&traj.x),
                    Driver::NonCausal,
                )?;
                Ok(est.errors().expect("truth supplied"))
            })
            .collect::<Result<_>>()?;
        let dev = errors[0]
            .iter()
            .zip(&errors[1])
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max);
        worst = worst.max(dev);
        runs += 1;
    }
    outcome(
        runs == 20 && worst < 1e-9,
        format!("{runs}/20 seeds, max error deviation {worst:.2e}"),
    )
}

fn criterion4() -> Result<Outcome> {
    let tol = Tolerances::default();
    let mut counts = [(0, 0); 2];
    for seed in 0..SEEDS {
        for (i, (sys, eta, expected)) in [
            (example1(), None, 4),
            (example2(), Some(uniform(-5.0, 5.0)), 5),
        ]
        .into_iter()
        .enumerate()
        {
            let (rec, pe) = training_record(&sys, 20, eta, seed)?;
            if pe {
                counts[i].1 += 1;
                let dm = DataMatrices::from_record(&rec);
                let ok = dm.informativity_rank(&tol) == expected
                    && numerical_rank(&dm.stacked(), &tol)? == expected;
                counts[i].0 += usize::from(ok);
            }
        }
    }
    let [(r1, v1), (r2, v2)] = counts;
    outcome(
        v1 == SEEDS as usize && v2 == SEEDS as usize && r1 == v1 && r2 == v2,
        format!("rank 4 on {r1}/{v1}, rank 5 on {r2}/{v2} PE-valid seeds"),
    )
}

fn montecarlo(mode: Equivalence) -> Result<Outcome> {
    let s = montecarlo_equivalence(
        &MonteCarloConfig::new(mode, 50, 2024),
        &Tolerances::default(),
    )?;
    let positive = s.cases.iter().filter(|c| c.pe_valid && c.model).count();
    let mixed = positive > 0 && positive < s.pe_passed;
    outcome(
        s.disagreements == 0 && mixed,
        format!(
            "{} PE-valid of {}, {positive} with an observer, {} disagreements",
            s.pe_passed, s.trials, s.disagreements
        ),
    )
}

fn criterion7() -> Result<Outcome> {
    let tol = Tolerances::default();
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let (mut worst_comb, mut worst_proj, mut worst_map): (f64, f64, f64) = (0.0, 0.0, 0.0);
    let mut held = 0;
    for plant in 0..20 {
        let q = plant % 2;
        let recipe = PlantRecipe {
            n1: rng.random_range(1..=3),
            n2: rng.random_range(0..=2),
            m: rng.random_range(1..=2),
            p: rng.random_range(1..=2),
            q,
            unstable: 0,
            hidden: false,
            matching: true,
        };
        let sys = random_plant(&recipe, &mut rng)?;
        let wf = sys.weierstrass(&tol)?;
        let latent = wf.n1 + (recipe.m + q) * (wf.nilpotency + 1);
        let law = uniform(-1.0, 1.0);
        let ex = Excitation {
            t: 2 * latent + 5,
            input: law,
            unknown_input: (q > 0).then_some(law),
            initial: (-1.0, 1.0),
        };
        let rec = collect_descriptor(&sys, &wf, &ex, &mut rng, RecordMeta::default())?;
        let o = trajectory_oracle(&sys, &wf, &rec, 100, &mut rng, &tol)?;
        worst_comb = worst_comb.max(o.combination_residual);
        worst_proj = worst_proj.max(o.projection_residual);
        worst_map = worst_map.max(o.map_residual);
        held += usize::from(o.holds);
    }
    let ok = held == 20 && worst_comb < 1e-9 && worst_proj < 1e-9 && worst_map < 1e-9;
    outcome(
        ok,
        format!(
            "{held}/20 plants, residuals {worst_comb:.1e} / {worst_proj:.1e} / {worst_map:.1e}"
        ),
    )
}

fn criterion8() -> Result<Outcome> {
    let n = example4().n();
    let (mut good, mut feasible) = (0, 0);
    let mut worst_gap: f64 = 0.0;
    for seed in 0..10 {
        let Some(g) = example4_gains(seed)? else {
            continue;
        };
        feasible += 1;
        let (est, causal) = example4_runs(&g, seed)?;
        let gap = est
            .xhat
            .iter()
            .zip(&causal.xhat)
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max);
        worst_gap = worst_gap.max(gap);
        let errors = est.errors().expect("truth supplied");
        let decays = |start: usize, len: usize| {
            let norms: Vec<f64> = errors.iter().map(|e| e.rows(start, len).norm()).collect();
            below_from(&norms, 1e-5).is_some_and(|k| k <= 100)
        };
        if g.n() == n + 2 && decays(0, n) && decays(n, 2) && gap < 1e-10 {
            good += 1;
        }
    }
    outcome(
        feasible == 10 && good == 10,
        format!("{good}/{feasible} feasible seeds, driver gap {worst_gap:.1e}"),
    )
}

fn criterion9() -> Result<Outcome> {
    let tol = Tolerances::default();
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let mut failures = 0;
    let mut worst: f64 = 0.0;
    for _ in 0..1000 {
        let rows = rng.random_range(1..=20);
        let cols = rng.random_range(1..=20);
        let rank = rng.random_range(0..=rows.min(cols));
        let m = uniform_matrix(&mut rng, rows, rank, -1.0, 1.0)
            * uniform_matrix(&mut rng, rank, cols, -1.0, 1.0);
        let scale = m.norm().max(1.0);
        let pinv = pseudoinverse(&m);
        let penrose = [
            (&m * &pinv * &m - &m).norm() / scale,
            (&pinv * &m * &pinv - &pinv).norm() / pinv.norm().max(1.0),
            ((&m * &pinv).transpose() - &m * &pinv).norm(),
            ((&pinv * &m).transpose() - &pinv * &m).norm(),
        ];
        let kernel = null_space_basis(&m, &tol);
        let null_res = (&m * &kernel).norm() / scale;
        let ortho =
            (kernel.transpose() * &kernel - Mat::identity(kernel.ncols(), kernel.ncols())).norm();
        let r = numerical_rank(&m, &tol)?;
        let local = penrose.iter().copied().fold(null_res.max(ortho), f64::max);
        worst = worst.max(local);
        if r != rank || r + kernel.ncols() != cols || local > 1e-8 {
            failures += 1;
        }
    }
    outcome(
        failures == 0,
        format!("{failures} failures over 1000 matrices, worst residual {worst:.1e}"),
    )
}

fn main() {
    let criteria: [Criterion; 9] = [
        (
            1,
            "example 1 reproduction",
            Some(Duration::from_secs(10)),
            criterion1,
        ),
        (2, "error recursion exactness", None, criterion2),
        (3, "unknown-input decoupling", None, criterion3),
        (4, "data-based assumption tests", None, criterion4),
        (
            5,
            "standard-observer equivalence",
            Some(Duration::from_secs(60)),
            || montecarlo(Equivalence::Standard),
        ),
        (
            6,
            "unknown-input equivalence",
            Some(Duration::from_secs(60)),
            || montecarlo(Equivalence::Uio),
        ),
        (7, "trajectory equivalence oracle", None, criterion7),
        (8, "extended-state observer", None, criterion8),
        (
            9,
            "kernel library properties",
            Some(Duration::from_secs(10)),
            criterion9,
        ),
    ];
    let mut failed = 0;
    for (id, name, budget, check) in criteria {
        let start = Instant::now();
        let result = check();
        let elapsed = start.elapsed();
        let (passed, detail) = match result {
            Ok(o) => (o.passed, o.detail),
            Err(e) => (false, format!("error: {e}")),
        };
        let in_time = budget.is_none_or(|b| elapsed <= b);
        let verdict = if passed && in_time { "PASS" } else { "FAIL" };
        let budget = budget.map_or(String::new(), |b| format!(" (budget {} s)", b.as_secs()));
        println!(
            "criterion {id} {verdict}: {name}: {detail}; {:.2} s{budget}",
            elapsed.as_secs_f64()
        );
        failed += usize::from(verdict == "FAIL");
    }
    println!("acceptance: {} of 9 criteria passed", 9 - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
