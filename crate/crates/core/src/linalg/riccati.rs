//! Discrete algebraic Riccati equation and the output-injection gain built
//! on it.

use super::{ensure_finite, is_schur, Mat, Tolerances};
use crate::error::{Error, Result};

const MAX_DOUBLING_STEPS: usize = 200;
/// A Riccati solution this large means the iteration is diverging toward an
/// unstabilizable mode.
const DIVERGENCE_BOUND: f64 = 1e12;

/// Stabilizing solution of `P = AᵀPA − AᵀPB(R + BᵀPB)⁻¹BᵀPA + Q` by the
/// structure-preserving doubling algorithm. Returns `None` if the iteration
/// diverges or fails to settle.
pub fn solve_dare(a: &Mat, b: &Mat, q: &Mat, r: &Mat) -> Result<Option<Mat>> {
    let n = a.nrows();
    if !a.is_square()
        || b.nrows() != n
        || q.shape() != (n, n)
        || r.shape() != (b.ncols(), b.ncols())
    {
        return Err(Error::dim("solve_dare: inconsistent A, B, Q, R shapes"));
    }
    let Some(r_inv) = r.clone().try_inverse() else {
        return Err(Error::invalid("solve_dare: R must be invertible"));
    };
    let id = Mat::identity(n, n);
    let mut ak = a.clone();
    let mut gk = b * r_inv * b.transpose();
    let mut hk = q.clone();
    for _ in 0..MAX_DOUBLING_STEPS {
        let Some(w_inv) = (&id + &gk * &hk).try_inverse() else {
            return Ok(None);
        };
        let a_next = &ak * &w_inv * &ak;
        let g_next = &gk + &ak * &w_inv * &gk * ak.transpose();
        let h_next = &hk + ak.transpose() * &hk * &w_inv * &ak;
        let step = (&h_next - &hk).norm();
        let size = h_next.norm();
        if !size.is_finite() || size > DIVERGENCE_BOUND {
            return Ok(None);
        }
        ak = a_next;
        gk = g_next;
        hk = h_next;
        if step <= 1e-14 * size.max(1.0) {
            // symmetrize away rounding drift
            let p = (&hk + hk.transpose()) * 0.5;
            return Ok(Some(p));
        }
    }
    Ok(None)
}

/// Find `K` with `M + K·G` Schur, or `None` when `(M, G)` is not detectable.
///
/// A zero gain is returned when `M` is already Schur. Otherwise the dual
/// control problem `(Mᵀ, Gᵀ)` is solved with identity weights and the
/// transposed optimal feedback is returned after a closed-loop check.
pub fn stabilize_output_injection(m: &Mat, g: &Mat, tol: &Tolerances) -> Result<Option<Mat>> {
    let n = m.nrows();
    if !m.is_square() || g.ncols() != n {
        return Err(Error::dim(format!(
            "stabilize_output_injection: M is {:?}, G is {:?}",
            m.shape(),
            g.shape()
        )));
    }
    ensure_finite(m, "M")?;
    ensure_finite(g, "G")?;
    let w = g.nrows();
    if is_schur(m, tol)? {
        return Ok(Some(Mat::zeros(n, w)));
    }
    if w == 0 {
        return Ok(None);
    }
    let a = m.transpose();
    let b = g.transpose();
    let Some(p) = solve_dare(&a, &b, &Mat::identity(n, n), &Mat::identity(w, w))? else {
        return Ok(None);
    };
    let btp = b.transpose() * &p;
    let Some(inner) = (Mat::identity(w, w) + &btp * &b).try_inverse() else {
        return Ok(None);
    };
    let feedback = -(inner * btp * &a);
    let k = feedback.transpose();
    if k.iter().any(|v| !v.is_finite()) {
        return Ok(None);
    }
    if is_schur(&(m + &k * g), tol)? {
        Ok(Some(k))
    } else {
        Ok(None)
    }
}
