//! Regular matrix pencils `λE − A`: decoupling into finite and infinite
//! parts via the Wong sequences, finite spectra, and rank-drop candidates for
//! rectangular pencils.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{
    eigenvalues, ensure_finite, hstack, null_space_scaled, range_scaled, rank_scaled, Mat,
    Tolerances, C64,
};
use crate::error::{Error, Result};

/// Invertible `S`, `P` with `S·E·P = diag(I, R)` and `S·A·P = diag(A1, I)`.
#[derive(Debug, Clone)]
pub struct PencilDecomposition {
    pub s: Mat,
    pub p: Mat,
    pub n1: usize,
    pub a1: Mat,
    pub r: Mat,
}

fn pencil_scale(e: &Mat, a: &Mat) -> f64 {
    e.norm().max(a.norm())
}

fn complement_projector(basis: &Mat, n: usize) -> Mat {
    Mat::identity(n, n) - basis * basis.transpose()
}

impl PencilDecomposition {
    /// Decouple a square pencil. The limits of the Wong sequences
    /// `V_{i+1} = A⁻¹(E·V_i)` and `W_{i+1} = E⁻¹(A·W_i)` span complementary
    /// subspaces exactly when the pencil is regular; `P = [V W]` and
    /// `S = [E·V  A·W]⁻¹` then produce the block-diagonal form directly.
    pub fn new(e: &Mat, a: &Mat, tol: &Tolerances) -> Result<Self> {
        let n = e.nrows();
        if !e.is_square() || a.shape() != e.shape() {
            return Err(Error::dim(format!(
                "pencil needs square E and A of equal size, got {:?} and {:?}",
                e.shape(),
                a.shape()
            )));
        }
        ensure_finite(e, "E")?;
        ensure_finite(a, "A")?;
        let scale = pencil_scale(e, a);

        let mut v = Mat::identity(n, n);
        for _ in 0..=n {
            let img = range_scaled(&(e * &v), tol, scale);
            let next = null_space_scaled(&(complement_projector(&img, n) * a), tol, scale);
            let done = next.ncols() == v.ncols();
            v = next;
            if done {
                break;
            }
        }

        let mut w = Mat::zeros(n, 0);
        for _ in 0..=n {
            let img = range_scaled(&(a * &w), tol, scale);
            let next = null_space_scaled(&(complement_projector(&img, n) * e), tol, scale);
            let done = next.ncols() == w.ncols();
            w = next;
            if done {
                break;
            }
        }

        let n1 = v.ncols();
        if n1 + w.ncols() != n {
            return Err(Error::SingularPencil);
        }
        let p = hstack(&[&v, &w])?;
        let s_inv = hstack(&[&(e * &v), &(a * &w)])?;
        if rank_scaled(&p, tol, 1.0) < n || rank_scaled(&s_inv, tol, scale) < n {
            return Err(Error::SingularPencil);
        }
        let s = s_inv.try_inverse().ok_or(Error::SingularPencil)?;

        let sep = &s * e * &p;
        let sap = &s * a * &p;
        let a1 = sap.view((0, 0), (n1, n1)).into_owned();
        let r = sep.view((n1, n1), (n - n1, n - n1)).into_owned();
        Ok(Self { s, p, n1, a1, r })
    }

    pub fn n2(&self) -> usize {
        self.r.nrows()
    }
}

/// Finite generalized eigenvalues of `(E, A)`, i.e. the roots of
/// `det(λE − A)`.
pub fn finite_spectrum(e: &Mat, a: &Mat, tol: &Tolerances) -> Result<Vec<C64>> {
    let dec = PencilDecomposition::new(e, a, tol)?;
    eigenvalues(&dec.a1)
}

/// Points where the `rows × cols` pencil `λ·lam − constant` (rows ≥ cols) can
/// lose column rank. The result is a superset of the actual drop points;
/// callers evaluate the rank at each candidate. `None` means the pencil has
/// deficient normal rank, so the rank is below `cols` for every λ.
pub fn rank_drop_candidates(
    lam: &Mat,
    constant: &Mat,
    tol: &Tolerances,
) -> Result<Option<Vec<C64>>> {
    if lam.shape() != constant.shape() {
        return Err(Error::dim(
            "rank_drop_candidates: coefficient shapes differ",
        ));
    }
    let (rows, cols) = lam.shape();
    if cols == 0 {
        return Ok(Some(Vec::new()));
    }
    if rows < cols {
        return Ok(None);
    }
    if rows == cols {
        return match finite_spectrum(lam, constant, tol) {
            Ok(ev) => Ok(Some(ev)),
            Err(Error::SingularPencil) => Ok(None),
            Err(e) => Err(e),
        };
    }
    // Any λ where the tall pencil drops rank also makes W·(λ·lam − constant)
    // singular; a generic W keeps the compressed pencil regular.
    for seed in 0..4u64 {
        let mut rng = ChaCha8Rng::seed_from_u64(0x5eed_0000 + seed);
        let w = Mat::from_fn(cols, rows, |_, _| rng.random_range(-1.0..1.0));
        match finite_spectrum(&(&w * lam), &(&w * constant), tol) {
            Ok(ev) => return Ok(Some(ev)),
            Err(Error::SingularPencil) => continue,
            Err(e) => return Err(e),
        }
    }
    Ok(None)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::block_diag;

    fn tol() -> Tolerances {
        Tolerances::default()
    }

    fn ex1() -> (Mat, Mat) {
        (
            Mat::from_row_slice(3, 3, &[1.0, 2.0, 1.0, 0.0, 2.0, 1.0, 1.0, 0.0, 0.0]),
            Mat::from_row_slice(
                3,
                3,
                &[
                    0.153, 0.045, 0.069, 0.156, 0.252, 0.156, 0.135, -0.171, -0.636,
                ],
            ),
        )
    }

    fn det_abs(e: &Mat, a: &Mat, l: C64) -> f64 {
        let m = super::super::to_complex(e) * l - super::super::to_complex(a);
        m.determinant().norm()
    }

    #[test]
    fn identity_e_gives_ordinary_eigenvalues() {
        let a = Mat::from_row_slice(2, 2, &[0.2, 1.0, -0.3, 0.4]);
        let mut got = finite_spectrum(&Mat::identity(2, 2), &a, &tol()).unwrap();
        let mut want = eigenvalues(&a).unwrap();
        got.sort_by(|x, y| x.im.total_cmp(&y.im));
        want.sort_by(|x, y| x.im.total_cmp(&y.im));
        for (g, w) in got.iter().zip(&want) {
            assert!((g - w).norm() < 1e-10);
        }
    }

    #[test]
    fn diagonal_singular_pencil_spectrum() {
        let e = Mat::from_row_slice(2, 2, &[1.0, 0.0, 0.0, 0.0]);
        let a = Mat::from_row_slice(2, 2, &[0.5, 0.0, 0.0, 1.0]);
        let ev = finite_spectrum(&e, &a, &tol()).unwrap();
        assert_eq!(ev.len(), 1);
        assert!((ev[0] - C64::new(0.5, 0.0)).norm() < 1e-12);
    }

    #[test]
    fn example1_pencil_roots_are_determinant_zeros() {
        let (e, a) = ex1();
        let ev = finite_spectrum(&e, &a, &tol()).unwrap();
        assert_eq!(ev.len(), 2);
        // det(λE − A) is a degree-2 polynomial; its scale near the roots is
        // set by |det| at nearby non-root points.
        for l in ev {
            let here = det_abs(&e, &a, l);
            let away = det_abs(&e, &a, l + C64::new(0.5, 0.0));
            assert!(
                here < 1e-10 * away.max(1.0),
                "det at root {here}, nearby {away}"
            );
        }
    }

    #[test]
    fn decomposition_reconstructs_blocks() {
        let (e, a) = ex1();
        let d = PencilDecomposition::new(&e, &a, &tol()).unwrap();
        assert_eq!(d.n1, 2);
        let id = Mat::identity(d.n1, d.n1);
        let sep = &d.s * &e * &d.p;
        let sap = &d.s * &a * &d.p;
        assert!((sep - block_diag(&id, &d.r)).norm() < 1e-10);
        assert!((sap - block_diag(&d.a1, &Mat::identity(d.n2(), d.n2()))).norm() < 1e-10);
    }

    #[test]
    fn zero_pencil_is_singular() {
        let z = Mat::zeros(1, 1);
        assert!(matches!(
            PencilDecomposition::new(&z, &z, &tol()),
            Err(Error::SingularPencil)
        ));
    }

    #[test]
    fn nilpotent_chain_is_detected() {
        // E = [[0,1],[0,0]], A = I: no finite eigenvalues, R nilpotent of index 2.
        let e = Mat::from_row_slice(2, 2, &[0.0, 1.0, 0.0, 0.0]);
        let d = PencilDecomposition::new(&e, &Mat::identity(2, 2), &tol()).unwrap();
        assert_eq!(d.n1, 0);
        assert!(d.r.norm() > 0.5);
        assert!((&d.r * &d.r).norm() < 1e-12);
    }

    #[test]
    fn tall_pencil_candidates_contain_drop() {
        // [λ − 2; 0] has a rank drop at λ = 2 only.
        let lam = Mat::from_row_slice(2, 1, &[1.0, 0.0]);
        let c = Mat::from_row_slice(2, 1, &[2.0, 0.0]);
        let cand = rank_drop_candidates(&lam, &c, &tol()).unwrap().unwrap();
        assert!(cand.iter().any(|z| (z - C64::new(2.0, 0.0)).norm() < 1e-10));
        // [λ − 2; 1] never drops but candidates may still be returned.
        let c = Mat::from_row_slice(2, 1, &[2.0, -1.0]);
        assert!(rank_drop_candidates(&lam, &c, &tol()).unwrap().is_some());
        // normal-rank deficient
        let z = Mat::zeros(3, 1);
        assert!(rank_drop_candidates(&z, &z, &tol()).unwrap().is_none());
    }
}
