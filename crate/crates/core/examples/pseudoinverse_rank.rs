// Numerical rank, Moore-Penrose inverse and kernel bases on a rank-deficient matrix.

use deso::linalg::{null_space_basis, numerical_rank, pseudoinverse, range_basis};
use deso::{Mat, Result, Tolerances};

pub fn run_example() -> Result<(usize, f64)> {
    let tol = Tolerances::default();
    // third row is the sum of the first two
    let m = Mat::from_row_slice(
        3,
        4,
        &[1.0, 2.0, 0.0, 1.0, 0.0, 1.0, 1.0, 3.0, 1.0, 3.0, 1.0, 4.0],
    );
    let rank = numerical_rank(&m, &tol)?;
    let pinv = pseudoinverse(&m);
    let penrose = (&m * &pinv * &m - &m).norm();
    let kernel = null_space_basis(&m, &tol);
    let range = range_basis(&m, &tol);
    println!("rank {rank}, ‖M·M†·M − M‖ = {penrose:.2e}");
    println!(
        "kernel dimension {}, range dimension {}",
        kernel.ncols(),
        range.ncols()
    );
    println!("‖M·N‖ = {:.2e}", (&m * &kernel).norm());
    Ok((rank, penrose))
}

fn main() -> Result<()> {
    run_example().map(|_| ())
}
