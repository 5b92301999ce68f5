// Output injection from the stabilizing Riccati solution.

use deso::linalg::{solve_dare, spectral_radius, stabilize_output_injection};
use deso::{Error, Mat, Result, Tolerances};

pub fn run_example() -> Result<f64> {
    let a = Mat::from_row_slice(2, 2, &[1.2, 1.0, 0.0, 0.5]);
    let c = Mat::from_row_slice(1, 2, &[1.0, 0.0]);
    let x = solve_dare(
        &a.transpose(),
        &c.transpose(),
        &Mat::identity(2, 2),
        &Mat::identity(1, 1),
    )?
    .ok_or(Error::MissingData("(A, C) is detectable".into()))?;
    println!("stabilizing solution X =\n{x:.5}");
    let k = stabilize_output_injection(&a, &c, &Tolerances::default())?
        .ok_or(Error::MissingData("(A, C) is detectable".into()))?;
    let closed = &a + &k * &c;
    let rho = spectral_radius(&closed)?;
    println!(
        "K = {:.5}, ρ(A + K·C) = {rho:.4} (open loop {:.4})",
        k.transpose(),
        spectral_radius(&a)?
    );
    Ok(rho)
}

fn main() -> Result<()> {
    run_example().map(|_| ())
}
