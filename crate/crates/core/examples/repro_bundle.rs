// The three worked examples end to end, each into its own bundle directory.

use deso::experiments::cmd_repro;
use deso::Result;

pub fn run_example() -> Result<Vec<bool>> {
    let root = tempfile::tempdir()?;
    let mut passed = Vec::new();
    for example in [1, 2, 4] {
        let out = root.path().join(format!("example{example}"));
        let s = cmd_repro(example, None, &out)?;
        println!(
            "example {example}: radius {:.4} (quoted {:?}), criteria {}",
            s.spectral_radius,
            s.reference_radius,
            if s.passed { "met" } else { "not met" }
        );
        passed.push(s.passed);
    }
    Ok(passed)
}

fn main() -> Result<()> {
    run_example().map(|_| ())
}
