// Data-side and model-side verdicts on random plants.

use deso::validation::{montecarlo_equivalence, Equivalence, MonteCarloConfig};
use deso::{Result, Tolerances};

pub fn run_example() -> Result<usize> {
    let mut disagreements = 0;
    for mode in [Equivalence::Standard, Equivalence::Uio] {
        let s =
            montecarlo_equivalence(&MonteCarloConfig::new(mode, 20, 1), &Tolerances::default())?;
        let positive = s.cases.iter().filter(|c| c.model).count();
        println!(
            "{mode:?}: {} trials, {} excited, {positive} with an observer, {} disagreements",
            s.trials, s.pe_passed, s.disagreements
        );
        disagreements += s.disagreements;
    }
    Ok(disagreements)
}

fn main() -> Result<()> {
    run_example().map(|_| ())
}
