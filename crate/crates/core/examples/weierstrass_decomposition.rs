// Slow/fast decoupling of a regular descriptor plant and a consistent trajectory.

use deso::descriptor::simulate;
use deso::linalg::{block_diag, Vector};
use deso::plants::example1;
use deso::{Mat, Result, Tolerances};

pub fn run_example() -> Result<f64> {
    let tol = Tolerances::default();
    let sys = example1();
    let wf = sys.weierstrass(&tol)?;
    println!(
        "n1 = {}, n2 = {}, nilpotency index {}",
        wf.n1, wf.n2, wf.nilpotency
    );
    println!("finite spectrum {:?}", sys.finite_spectrum(&tol)?);

    let see = &wf.s * &sys.e * &wf.p;
    let sap = &wf.s * &sys.a * &wf.p;
    let target_e = block_diag(&Mat::identity(wf.n1, wf.n1), &wf.r);
    let target_a = block_diag(&wf.a1, &Mat::identity(wf.n2, wf.n2));
    let form_residual = (see - target_e).norm() + (sap - target_a).norm();
    println!("block-diagonal residual {form_residual:.2e}");

    let steps = 10;
    let u: Vec<Vector> = (0..steps + wf.nilpotency)
        .map(|k| Vector::from_element(1, (k as f64).cos()))
        .collect();
    let traj = simulate(
        &sys,
        &wf,
        &Vector::from_element(wf.n1, 1.0),
        &u,
        None,
        steps,
    )?;
    let descriptor_residual = (0..steps)
        .map(|k| (&sys.e * &traj.x[k + 1] - &sys.a * &traj.x[k] - &sys.b * &u[k]).norm())
        .fold(0.0, f64::max);
    println!("max ‖E·x(k+1) − A·x(k) − B·u(k)‖ = {descriptor_residual:.2e}");
    Ok(form_residual.max(descriptor_residual))
}

fn main() -> Result<()> {
    run_example().map(|_| ())
}
