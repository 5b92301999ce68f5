//! Descriptor plants `E·x(k+1) = A·x(k) + B·u(k) + F·η(k)`, `y(k) = C·x(k)`.
//!
//! This is the ground-truth side of the crate: it generates data, and it
//! evaluates the model-based structural conditions that the data-driven
//! tests are compared against.

mod eso;
pub mod random;
mod weierstrass;

pub use eso::{simulate_lti, LtiSystem, LtiTrajectory};
pub use weierstrass::{simulate, Trajectory, WeierstrassForm};

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{
    ensure_finite, finite_spectrum, hstack, numerical_rank, pencil_rank, rank_drop_candidates,
    serde_mat, vstack, Mat, Tolerances, C64,
};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "SystemJson", into = "SystemJson")]
pub struct DescriptorSystem {
    pub e: Mat,
    pub a: Mat,
    pub b: Mat,
    pub c: Mat,
    /// Unknown-input channel.
    pub f: Option<Mat>,
}

#[derive(Serialize, Deserialize)]
struct SystemJson {
    #[serde(rename = "E", with = "serde_mat")]
    e: Mat,
    #[serde(rename = "A", with = "serde_mat")]
    a: Mat,
    #[serde(rename = "B", with = "serde_mat")]
    b: Mat,
    #[serde(rename = "C", with = "serde_mat")]
    c: Mat,
    #[serde(
        rename = "F",
        with = "serde_mat::option",
        default,
        skip_serializing_if = "Option::is_none"
    )]
    f: Option<Mat>,
}

impl TryFrom<SystemJson> for DescriptorSystem {
    type Error = Error;

    fn try_from(j: SystemJson) -> Result<Self> {
        DescriptorSystem::new(j.e, j.a, j.b, j.c, j.f)
    }
}

impl From<DescriptorSystem> for SystemJson {
    fn from(s: DescriptorSystem) -> Self {
        SystemJson {
            e: s.e,
            a: s.a,
            b: s.b,
            c: s.c,
            f: s.f,
        }
    }
}

impl DescriptorSystem {
    /// Validates shapes, finiteness, and full column rank of `F`. Regularity
    /// is not required here; the extended-state augmentation is a singular
    /// pencil by construction.
    pub fn new(e: Mat, a: Mat, b: Mat, c: Mat, f: Option<Mat>) -> Result<Self> {
        let n = e.nrows();
        if n == 0 || !e.is_square() {
            return Err(Error::dim(format!(
                "E must be square and non-empty, got {:?}",
                e.shape()
            )));
        }
        if a.shape() != (n, n) {
            return Err(Error::dim(format!(
                "A must be {n}×{n}, got {:?}",
                a.shape()
            )));
        }
        if b.nrows() != n || b.ncols() == 0 {
            return Err(Error::dim(format!(
                "B must be {n}×m with m ≥ 1, got {:?}",
                b.shape()
            )));
        }
        if c.ncols() != n || c.nrows() == 0 {
            return Err(Error::dim(format!(
                "C must be p×{n} with p ≥ 1, got {:?}",
                c.shape()
            )));
        }
        for (m, name) in [(&e, "E"), (&a, "A"), (&b, "B"), (&c, "C")] {
            ensure_finite(m, name)?;
        }
        if let Some(f) = &f {
            if f.nrows() != n || f.ncols() == 0 {
                return Err(Error::dim(format!(
                    "F must be {n}×q with q ≥ 1, got {:?}",
                    f.shape()
                )));
            }
            ensure_finite(f, "F")?;
            if numerical_rank(f, &Tolerances::default())? != f.ncols() {
                return Err(Error::invalid("F must have full column rank"));
            }
        }
        Ok(Self { e, a, b, c, f })
    }

    pub fn n(&self) -> usize {
        self.e.nrows()
    }

    pub fn m(&self) -> usize {
        self.b.ncols()
    }

    pub fn p(&self) -> usize {
        self.c.nrows()
    }

    pub fn q(&self) -> usize {
        self.f.as_ref().map_or(0, |f| f.ncols())
    }

    pub fn without_unknown_input(&self) -> Self {
        Self {
            f: None,
            ..self.clone()
        }
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        std::fs::write(path, self.to_json()?)?;
        Ok(())
    }

    /// `det(λE − A) ≢ 0`.
    pub fn check_regularity(&self, tol: &Tolerances) -> bool {
        crate::linalg::PencilDecomposition::new(&self.e, &self.a, tol).is_ok()
    }

    pub fn weierstrass(&self, tol: &Tolerances) -> Result<WeierstrassForm> {
        WeierstrassForm::new(self, tol)
    }

    pub fn finite_spectrum(&self, tol: &Tolerances) -> Result<Vec<C64>> {
        finite_spectrum(&self.e, &self.a, tol)
    }

    /// `rk[λE − A; C] = n` for every finite pencil eigenvalue with
    /// `|λ| ≥ 1 − schur_margin`. Away from the pencil spectrum `λE − A` is
    /// invertible, so these are the only places the rank can drop.
    pub fn pbh_detectable(&self, tol: &Tolerances) -> Result<bool> {
        let spectrum = self.finite_spectrum(tol)?;
        Ok(spectrum
            .into_iter()
            .filter(|l| l.norm() >= 1.0 - tol.schur_margin)
            .all(|l| self.pbh_rank(l, tol) == self.n()))
    }

    pub fn pbh_rank(&self, lambda: C64, tol: &Tolerances) -> usize {
        let lam = vstack(&[&self.e, &Mat::zeros(self.p(), self.n())]).expect("shapes validated");
        let constant = vstack(&[&self.a, &(-&self.c)]).expect("shapes validated");
        pencil_rank(&lam, &constant, lambda, tol)
    }

    /// `rk[E; C] = n` (observability of the fast subsystem).
    pub fn dual_normalizability(&self, tol: &Tolerances) -> bool {
        let ec = vstack(&[&self.e, &self.c]).expect("shapes validated");
        numerical_rank(&ec, tol).expect("finite") == self.n()
    }

    fn matching_matrix(&self) -> Result<Mat> {
        let f = self
            .f
            .as_ref()
            .ok_or_else(|| Error::MissingData("system has no F".into()))?;
        let top = hstack(&[&self.e, f])?;
        let bottom = hstack(&[&self.c, &Mat::zeros(self.p(), self.q())])?;
        vstack(&[&top, &bottom])
    }

    /// `rk[E F; C 0] = n + q`.
    pub fn matching_condition(&self, tol: &Tolerances) -> Result<bool> {
        Ok(numerical_rank(&self.matching_matrix()?, tol)? == self.n() + self.q())
    }

    /// `rk[λE − A, −F; C, 0] = n + q` for all `|λ| ≥ 1`, checked at the
    /// rank-drop candidates of the pencil.
    pub fn uio_rank_condition(&self, tol: &Tolerances) -> Result<bool> {
        let f = self
            .f
            .as_ref()
            .ok_or_else(|| Error::MissingData("system has no F".into()))?;
        let (n, p, q) = (self.n(), self.p(), self.q());
        let lam = crate::linalg::block_diag(&self.e, &Mat::zeros(p, q));
        let constant = vstack(&[
            &hstack(&[&self.a, f])?,
            &hstack(&[&(-&self.c), &Mat::zeros(p, q)])?,
        ])?;
        let Some(candidates) = rank_drop_candidates(&lam, &constant, tol)? else {
            return Ok(false);
        };
        Ok(candidates
            .into_iter()
            .filter(|l| l.norm() >= 1.0 - tol.schur_margin)
            .all(|l| pencil_rank(&lam, &constant, l, tol) == n + q))
    }
}

/// Either plant kind, as stored next to a dataset.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum PlantModel {
    Descriptor(DescriptorSystem),
    Lti(LtiSystem),
}

/// `[B, AB, …, A^{steps−1}B]`.
pub(crate) fn krylov(a: &Mat, b: &Mat, steps: usize) -> Mat {
    let mut blocks = Vec::with_capacity(steps);
    let mut cur = b.clone();
    for _ in 0..steps {
        blocks.push(cur.clone());
        cur = a * &cur;
    }
    let refs: Vec<&Mat> = blocks.iter().collect();
    hstack(&refs).unwrap_or_else(|_| Mat::zeros(a.nrows(), 0))
}
