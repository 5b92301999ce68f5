use serde::{Deserialize, Serialize};

use super::DescriptorSystem;
use crate::error::{Error, Result};
use crate::linalg::{
    block_diag, ensure_finite, hstack, numerical_rank, pencil_rank, rank_drop_candidates,
    serde_mat, vstack, Mat, Tolerances, Vector,
};

/// `x(k+1) = A0·x + B0·u + E0·d`, `y = C0·x + F0·d` with disturbance `d`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "LtiJson", into = "LtiJson")]
pub struct LtiSystem {
    pub a0: Mat,
    pub b0: Mat,
    pub e0: Mat,
    pub c0: Mat,
    pub f0: Mat,
}

#[derive(Serialize, Deserialize)]
struct LtiJson {
    #[serde(rename = "A0", with = "serde_mat")]
    a0: Mat,
    #[serde(rename = "B0", with = "serde_mat")]
    b0: Mat,
    #[serde(rename = "E0", with = "serde_mat")]
    e0: Mat,
    #[serde(rename = "C0", with = "serde_mat")]
    c0: Mat,
    #[serde(rename = "F0", with = "serde_mat")]
    f0: Mat,
}

impl TryFrom<LtiJson> for LtiSystem {
    type Error = Error;

    fn try_from(j: LtiJson) -> Result<Self> {
        LtiSystem::new(j.a0, j.b0, j.e0, j.c0, j.f0)
    }
}

impl From<LtiSystem> for LtiJson {
    fn from(s: LtiSystem) -> Self {
        LtiJson {
            a0: s.a0,
            b0: s.b0,
            e0: s.e0,
            c0: s.c0,
            f0: s.f0,
        }
    }
}

impl LtiSystem {
    /// Requires `F0` and `[E0; F0]` to have full column rank. Without the
    /// former, `d(k+1)` cannot be recovered from `y(k+1)` and `x(k+1)`.
    pub fn new(a0: Mat, b0: Mat, e0: Mat, c0: Mat, f0: Mat) -> Result<Self> {
        let n = a0.nrows();
        if n == 0 || !a0.is_square() {
            return Err(Error::dim(format!(
                "A0 must be square and non-empty, got {:?}",
                a0.shape()
            )));
        }
        if b0.nrows() != n || b0.ncols() == 0 {
            return Err(Error::dim(format!(
                "B0 must be {n}×m, got {:?}",
                b0.shape()
            )));
        }
        if c0.ncols() != n || c0.nrows() == 0 {
            return Err(Error::dim(format!(
                "C0 must be p×{n}, got {:?}",
                c0.shape()
            )));
        }
        let r = e0.ncols();
        if e0.nrows() != n {
            return Err(Error::dim(format!(
                "E0 must be {n}×r, got {:?}",
                e0.shape()
            )));
        }
        if f0.shape() != (c0.nrows(), r) {
            return Err(Error::dim(format!(
                "F0 must be {}×{r}, got {:?}",
                c0.nrows(),
                f0.shape()
            )));
        }
        for (m, name) in [
            (&a0, "A0"),
            (&b0, "B0"),
            (&e0, "E0"),
            (&c0, "C0"),
            (&f0, "F0"),
        ] {
            ensure_finite(m, name)?;
        }
        let tol = Tolerances::default();
        if r > 0 {
            if numerical_rank(&vstack(&[&e0, &f0])?, &tol)? != r {
                return Err(Error::invalid("[E0; F0] must have full column rank"));
            }
            if numerical_rank(&f0, &tol)? != r {
                return Err(Error::invalid("F0 must have full column rank"));
            }
        }
        Ok(Self { a0, b0, e0, c0, f0 })
    }

    pub fn n(&self) -> usize {
        self.a0.nrows()
    }

    pub fn m(&self) -> usize {
        self.b0.ncols()
    }

    pub fn p(&self) -> usize {
        self.c0.nrows()
    }

    pub fn r(&self) -> usize {
        self.e0.ncols()
    }

    /// `rk[λI − A0, −E0; C0, F0] = n + r` for all `|λ| ≥ 1`.
    pub fn strong_detectability(&self, tol: &Tolerances) -> Result<bool> {
        let (n, p, r) = (self.n(), self.p(), self.r());
        let lam = block_diag(&Mat::identity(n, n), &Mat::zeros(p, r));
        let constant = vstack(&[
            &hstack(&[&self.a0, &self.e0])?,
            &hstack(&[&(-&self.c0), &(-&self.f0)])?,
        ])?;
        let Some(candidates) = rank_drop_candidates(&lam, &constant, tol)? else {
            return Ok(false);
        };
        Ok(candidates
            .into_iter()
            .filter(|l| l.norm() >= 1.0 - tol.schur_margin)
            .all(|l| pencil_rank(&lam, &constant, l, tol) == n + r))
    }

    /// Disturbance appended as a state: `E = diag(I, 0)`, `A = [A0 E0; 0 0]`,
    /// `B = [B0; 0]`, `C = [C0 F0]`.
    pub fn augment_for_eso(&self) -> DescriptorSystem {
        let (n, r) = (self.n(), self.r());
        let e = block_diag(&Mat::identity(n, n), &Mat::zeros(r, r));
        let mut a = Mat::zeros(n + r, n + r);
        a.view_mut((0, 0), (n, n)).copy_from(&self.a0);
        a.view_mut((0, n), (n, r)).copy_from(&self.e0);
        let b = vstack(&[&self.b0, &Mat::zeros(r, self.m())]).expect("column counts match");
        let c = hstack(&[&self.c0, &self.f0]).expect("row counts match");
        DescriptorSystem::new(e, a, b, c, None).expect("augmentation of a valid plant is valid")
    }
}

/// Samples `k = 0..=steps` of state, output, and disturbance.
#[derive(Debug, Clone, PartialEq)]
pub struct LtiTrajectory {
    pub x: Vec<Vector>,
    pub y: Vec<Vector>,
    pub d: Vec<Vector>,
}

impl LtiTrajectory {
    /// `[x(k); d(k)]` for every sample.
    pub fn augmented_states(&self) -> Vec<Vector> {
        self.x
            .iter()
            .zip(&self.d)
            .map(|(x, d)| {
                Vector::from_iterator(x.len() + d.len(), x.iter().chain(d.iter()).copied())
            })
            .collect()
    }
}

/// Needs `steps` inputs and `steps + 1` disturbance samples.
pub fn simulate_lti(
    sys: &LtiSystem,
    x0: &Vector,
    u: &[Vector],
    d: &[Vector],
    steps: usize,
) -> Result<LtiTrajectory> {
    if x0.len() != sys.n() {
        return Err(Error::dim(format!("x(0) must have {} entries", sys.n())));
    }
    if u.len() < steps {
        return Err(Error::Length {
            what: "input u",
            needed: steps,
            got: u.len(),
        });
    }
    if d.len() < steps + 1 {
        return Err(Error::Length {
            what: "disturbance d",
            needed: steps + 1,
            got: d.len(),
        });
    }
    if u[..steps].iter().any(|v| v.len() != sys.m())
        || d[..=steps].iter().any(|v| v.len() != sys.r())
    {
        return Err(Error::dim("input or disturbance sample has the wrong size"));
    }
    let mut xs = Vec::with_capacity(steps + 1);
    let mut ys = Vec::with_capacity(steps + 1);
    let mut x = x0.clone();
    for k in 0..=steps {
        ys.push(&sys.c0 * &x + &sys.f0 * &d[k]);
        xs.push(x.clone());
        if k < steps {
            x = &sys.a0 * &x + &sys.b0 * &u[k] + &sys.e0 * &d[k];
        }
    }
    Ok(LtiTrajectory {
        x: xs,
        y: ys,
        d: d[..=steps].to_vec(),
    })
}

#[cfg(test)]
pub(crate) mod tests {
    use super::*;

    pub use crate::plants::example4;

    fn tol() -> Tolerances {
        Tolerances::default()
    }

    #[test]
    fn scalar_augmentation_blocks() {
        let lti = LtiSystem::new(
            Mat::from_element(1, 1, 0.5),
            Mat::from_element(1, 1, 1.0),
            Mat::from_element(1, 1, 2.0),
            Mat::from_element(1, 1, 1.0),
            Mat::from_element(1, 1, 3.0),
        )
        .unwrap();
        let aug = lti.augment_for_eso();
        assert_eq!(aug.e, Mat::from_row_slice(2, 2, &[1.0, 0.0, 0.0, 0.0]));
        assert_eq!(aug.a, Mat::from_row_slice(2, 2, &[0.5, 2.0, 0.0, 0.0]));
        assert_eq!(aug.b, Mat::from_row_slice(2, 1, &[1.0, 0.0]));
        assert_eq!(aug.c, Mat::from_row_slice(1, 2, &[1.0, 3.0]));
        assert!(aug.dual_normalizability(&tol()));
    }

    #[test]
    fn example4_augmented_and_strongly_detectable() {
        let lti = example4();
        let aug = lti.augment_for_eso();
        assert_eq!(aug.n(), 5);
        assert!(aug.dual_normalizability(&tol()));
        assert!(lti.strong_detectability(&tol()).unwrap());
    }

    #[test]
    fn schur_a0_with_invertible_f0_is_strongly_detectable() {
        let lti = LtiSystem::new(
            Mat::from_row_slice(2, 2, &[0.5, 0.1, 0.0, -0.3]),
            Mat::from_row_slice(2, 1, &[1.0, 0.0]),
            Mat::from_row_slice(2, 1, &[0.0, 1.0]),
            Mat::from_row_slice(1, 2, &[1.0, 1.0]),
            Mat::from_element(1, 1, 2.0),
        )
        .unwrap();
        assert!(lti.strong_detectability(&tol()).unwrap());
    }

    #[test]
    fn hidden_unstable_disturbance_mode_fails() {
        // The disturbance enters an unobservable coordinate with eigenvalue 2.
        let lti = LtiSystem::new(
            Mat::from_row_slice(2, 2, &[2.0, 0.0, 0.0, 0.3]),
            Mat::from_row_slice(2, 1, &[0.0, 1.0]),
            Mat::from_row_slice(2, 1, &[1.0, 0.0]),
            Mat::from_row_slice(2, 2, &[0.0, 1.0, 0.0, 0.0]),
            Mat::from_row_slice(2, 1, &[0.0, 1.0]),
        )
        .unwrap();
        assert!(!lti.strong_detectability(&tol()).unwrap());
        let lam = block_diag(&Mat::identity(2, 2), &Mat::zeros(2, 1));
        let constant = Mat::from_row_slice(
            4,
            3,
            &[2.0, 0.0, 1.0, 0.0, 0.3, 0.0, 0.0, -1.0, 0.0, 0.0, 0.0, -1.0],
        );
        assert!(numerical_rank(&(lam * 2.0 - constant), &tol()).unwrap() < 3);
    }

    #[test]
    fn rejects_rank_deficient_f0() {
        let r = LtiSystem::new(
            Mat::identity(2, 2),
            Mat::from_row_slice(2, 1, &[1.0, 0.0]),
            Mat::from_row_slice(2, 1, &[1.0, 0.0]),
            Mat::from_row_slice(1, 2, &[1.0, 0.0]),
            Mat::zeros(1, 1),
        );
        assert!(r.is_err());
    }

    #[test]
    fn lti_trajectory_and_augmented_relation() {
        let lti = example4();
        let u: Vec<Vector> = (0..10)
            .map(|k| Vector::from_element(1, (k as f64).sin()))
            .collect();
        let d: Vec<Vector> = (0..11)
            .map(|k| Vector::from_vec(vec![0.1 * k as f64, -0.2]))
            .collect();
        let traj = simulate_lti(&lti, &Vector::from_vec(vec![1.0, -1.0, 0.5]), &u, &d, 10).unwrap();
        let aug = lti.augment_for_eso();
        let xt = traj.augmented_states();
        for k in 0..10 {
            let lhs = &aug.e * &xt[k + 1];
            let rhs = &aug.a * &xt[k] + &aug.b * &u[k];
            assert!((lhs - rhs).norm() < 1e-12);
            assert!((&traj.y[k] - &aug.c * &xt[k]).norm() < 1e-12);
        }
        assert!(simulate_lti(&lti, &traj.x[0], &u, &d[..10], 10).is_err());
    }

    #[test]
    fn json_roundtrip() {
        let lti = example4();
        let text = serde_json::to_string(&lti).unwrap();
        assert!(text.contains("\"F0\""));
        let back: LtiSystem = serde_json::from_str(&text).unwrap();
        assert_eq!(back, lti);
    }
}
