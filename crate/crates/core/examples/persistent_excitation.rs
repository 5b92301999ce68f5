// Collecting an offline experiment and testing whether it is informative enough.

use deso::data::{
    collect_descriptor, informativity_test, pe_assumption_check, DataMatrices, Excitation,
    RecordMeta, SignalLaw,
};
use deso::plants::example1;
use deso::{Result, Tolerances};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub fn run_example() -> Result<(bool, bool)> {
    let tol = Tolerances::default();
    let sys = example1();
    let wf = sys.weierstrass(&tol)?;
    let mut verdicts = Vec::new();
    for (name, input) in [
        ("uniform(-5, 5)", SignalLaw::Uniform { lo: -5.0, hi: 5.0 }),
        ("constant 1", SignalLaw::Constant { value: 1.0 }),
    ] {
        let ex = Excitation {
            t: 20,
            input,
            unknown_input: None,
            initial: (0.0, 2.0),
        };
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let rec = collect_descriptor(&sys, &wf, &ex, &mut rng, RecordMeta::default())?;
        let dm = DataMatrices::from_record(&rec);
        let pe = pe_assumption_check(&rec, &wf, false, &tol)?;
        let data_test = informativity_test(&dm, sys.m(), sys.n(), &tol);
        println!(
            "{name:<15} rank[Xp; Up; Yf] = {}  model-side PE {pe}  data-side test {data_test}",
            dm.informativity_rank(&tol)
        );
        verdicts.push(pe && data_test);
    }
    Ok((verdicts[0], verdicts[1]))
}

fn main() -> Result<()> {
    run_example().map(|_| ())
}
