//! Dense linear-algebra kernels with explicit numerical tolerances.
//!
//! Every rank decision in the crate goes through [`numerical_rank`] (or the
//! scaled variant used internally), so a single [`Tolerances`] value controls
//! how "exact" rank equalities are realized in floating point.

mod pencil;
mod riccati;

pub use pencil::{finite_spectrum, rank_drop_candidates, PencilDecomposition};
pub use riccati::{solve_dare, stabilize_output_injection};

use nalgebra::{Complex, DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub type Mat = DMatrix<f64>;
pub type Vector = DVector<f64>;
pub type CMat = DMatrix<Complex<f64>>;
pub type C64 = Complex<f64>;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct Tolerances {
    /// Singular values at or below `rank_tol × σ_max` count as zero.
    pub rank_tol: f64,
    /// Absolute Frobenius bound for "equals zero" residual checks.
    pub residual_tol: f64,
    /// A matrix is Schur only if its spectral radius is below `1 − schur_margin`.
    pub schur_margin: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            rank_tol: 1e-9,
            residual_tol: 1e-8,
            schur_margin: 1e-6,
        }
    }
}

impl Tolerances {
    pub fn validate(&self) -> Result<()> {
        let ok = |v: f64| v.is_finite() && v > 0.0;
        if ok(self.rank_tol) && ok(self.residual_tol) && ok(self.schur_margin) {
            Ok(())
        } else {
            Err(Error::invalid(format!(
                "tolerances must be positive and finite: {self:?}"
            )))
        }
    }
}

pub fn ensure_finite(m: &Mat, what: &str) -> Result<()> {
    if m.iter().all(|v| v.is_finite()) {
        Ok(())
    } else {
        Err(Error::invalid(format!(
            "{what} contains non-finite entries"
        )))
    }
}

/// SVD with a full right factor and singular values sorted descending.
pub(crate) struct FullSvd {
    /// `rows × min(rows, cols)` left factor (only the leading columns paired with
    /// nonzero singular values are meaningful when `rows < cols`).
    pub u: Mat,
    pub sigma: Vec<f64>,
    /// `cols × cols` orthogonal right factor.
    pub v: Mat,
}

fn to_faer<T: Copy + nalgebra::Scalar>(m: &DMatrix<T>) -> faer::Mat<T> {
    faer::Mat::from_fn(m.nrows(), m.ncols(), |i, j| m[(i, j)])
}

fn from_faer(m: faer::MatRef<'_, f64>) -> Mat {
    Mat::from_fn(m.nrows(), m.ncols(), |i, j| m[(i, j)])
}

pub(crate) fn full_svd(m: &Mat) -> FullSvd {
    let (rows, cols) = m.shape();
    if rows == 0 || cols == 0 {
        return FullSvd {
            u: Mat::zeros(rows, 0),
            sigma: Vec::new(),
            v: Mat::identity(cols, cols),
        };
    }
    let svd = to_faer(m)
        .svd()
        .expect("SVD iteration converges on finite input");
    let keep = rows.min(cols);
    let s = svd.S().column_vector();
    FullSvd {
        u: from_faer(svd.U().subcols(0, keep)),
        sigma: (0..keep).map(|i| s[i]).collect(),
        v: from_faer(svd.V()),
    }
}

fn singular_values<T: Copy + nalgebra::Scalar + faer::traits::ComplexField<Real = f64>>(
    m: &DMatrix<T>,
) -> Vec<f64> {
    if m.nrows() == 0 || m.ncols() == 0 {
        return Vec::new();
    }
    to_faer(m)
        .singular_values()
        .expect("SVD iteration converges on finite input")
}

fn cutoff(sigma: &[f64], tol: &Tolerances, scale: Option<f64>) -> f64 {
    let smax = sigma.first().copied().unwrap_or(0.0);
    let reference = scale.map_or(smax, |s| s.max(smax));
    tol.rank_tol * reference
}

fn count_above(sigma: &[f64], cut: f64) -> usize {
    sigma.iter().filter(|&&s| s > cut).count()
}

/// Number of singular values above `rank_tol × σ_max`.
pub fn numerical_rank(m: &Mat, tol: &Tolerances) -> Result<usize> {
    ensure_finite(m, "matrix")?;
    Ok(rank_unchecked(m, tol, None))
}

/// Rank with the cutoff taken relative to `max(σ_max, scale)`. Used where a
/// matrix is a derived quantity whose own norm may be tiny, so a purely
/// self-relative cutoff would promote rounding noise to rank.
pub(crate) fn rank_scaled(m: &Mat, tol: &Tolerances, scale: f64) -> usize {
    rank_unchecked(m, tol, Some(scale))
}

fn rank_unchecked(m: &Mat, tol: &Tolerances, scale: Option<f64>) -> usize {
    if m.nrows() == 0 || m.ncols() == 0 {
        return 0;
    }
    let s = singular_values(m);
    count_above(&s, cutoff(&s, tol, scale))
}

pub fn complex_rank(m: &CMat, tol: &Tolerances) -> usize {
    complex_rank_scaled(m, tol, 0.0)
}

/// Rank of `λ·lam − constant`, with the cutoff taken relative to
/// `|λ|·‖lam‖ + ‖constant‖` so that a pencil that vanishes at `λ` is not
/// mistaken for a full-rank one.
pub fn pencil_rank(lam: &Mat, constant: &Mat, lambda: C64, tol: &Tolerances) -> usize {
    let m = to_complex(lam) * lambda - to_complex(constant);
    complex_rank_scaled(&m, tol, lambda.norm() * lam.norm() + constant.norm())
}

pub(crate) fn complex_rank_scaled(m: &CMat, tol: &Tolerances, scale: f64) -> usize {
    if m.nrows() == 0 || m.ncols() == 0 {
        return 0;
    }
    let sv = singular_values(m);
    let smax = sv.first().copied().unwrap_or(0.0);
    let cut = tol.rank_tol * smax.max(scale);
    sv.iter().filter(|&&s| s > cut).count()
}

/// Moore–Penrose inverse using the default relative rank cutoff.
pub fn pseudoinverse(m: &Mat) -> Mat {
    pseudoinverse_with(m, &Tolerances::default())
}

pub fn pseudoinverse_with(m: &Mat, tol: &Tolerances) -> Mat {
    let (rows, cols) = m.shape();
    let svd = full_svd(m);
    let cut = cutoff(&svd.sigma, tol, None);
    let mut out = Mat::zeros(cols, rows);
    for (j, &s) in svd.sigma.iter().enumerate() {
        if s > cut && s > 0.0 {
            out += (svd.v.column(j) / s) * svd.u.column(j).transpose();
        }
    }
    out
}

/// Orthonormal basis of the right kernel, `cols − rank` columns.
pub fn null_space_basis(m: &Mat, tol: &Tolerances) -> Mat {
    null_space_impl(m, tol, None)
}

pub(crate) fn null_space_scaled(m: &Mat, tol: &Tolerances, scale: f64) -> Mat {
    null_space_impl(m, tol, Some(scale))
}

fn null_space_impl(m: &Mat, tol: &Tolerances, scale: Option<f64>) -> Mat {
    let cols = m.ncols();
    let svd = full_svd(m);
    let r = count_above(&svd.sigma, cutoff(&svd.sigma, tol, scale));
    svd.v.columns(r, cols - r).into_owned()
}

/// Orthonormal basis of the column space.
pub fn range_basis(m: &Mat, tol: &Tolerances) -> Mat {
    range_impl(m, tol, None)
}

pub(crate) fn range_scaled(m: &Mat, tol: &Tolerances, scale: f64) -> Mat {
    range_impl(m, tol, Some(scale))
}

fn range_impl(m: &Mat, tol: &Tolerances, scale: Option<f64>) -> Mat {
    let svd = full_svd(m);
    let r = count_above(&svd.sigma, cutoff(&svd.sigma, tol, scale));
    svd.u.columns(0, r).into_owned()
}

pub fn eigenvalues(m: &Mat) -> Result<Vec<C64>> {
    if !m.is_square() {
        return Err(Error::dim(format!(
            "eigenvalues need a square matrix, got {}×{}",
            m.nrows(),
            m.ncols()
        )));
    }
    ensure_finite(m, "matrix")?;
    if m.nrows() == 0 {
        return Ok(Vec::new());
    }
    to_faer(m)
        .eigenvalues()
        .map_err(|e| Error::invalid(format!("eigenvalue iteration failed: {e:?}")))
}

pub fn spectral_radius(m: &Mat) -> Result<f64> {
    Ok(eigenvalues(m)?.iter().map(|z| z.norm()).fold(0.0, f64::max))
}

pub fn is_schur(m: &Mat, tol: &Tolerances) -> Result<bool> {
    Ok(spectral_radius(m)? < 1.0 - tol.schur_margin)
}

pub fn to_complex(m: &Mat) -> CMat {
    m.map(|v| Complex::new(v, 0.0))
}

/// Stack blocks vertically; all blocks must share a column count.
pub fn vstack(blocks: &[&Mat]) -> Result<Mat> {
    let cols = blocks.first().map_or(0, |b| b.ncols());
    if blocks.iter().any(|b| b.ncols() != cols) {
        return Err(Error::dim("vstack: column counts differ"));
    }
    let rows: usize = blocks.iter().map(|b| b.nrows()).sum();
    let mut out = Mat::zeros(rows, cols);
    let mut r = 0;
    for b in blocks {
        out.view_mut((r, 0), (b.nrows(), cols)).copy_from(*b);
        r += b.nrows();
    }
    Ok(out)
}

/// Stack blocks horizontally; all blocks must share a row count.
pub fn hstack(blocks: &[&Mat]) -> Result<Mat> {
    let rows = blocks.first().map_or(0, |b| b.nrows());
    if blocks.iter().any(|b| b.nrows() != rows) {
        return Err(Error::dim("hstack: row counts differ"));
    }
    let cols: usize = blocks.iter().map(|b| b.ncols()).sum();
    let mut out = Mat::zeros(rows, cols);
    let mut c = 0;
    for b in blocks {
        out.view_mut((0, c), (rows, b.ncols())).copy_from(*b);
        c += b.ncols();
    }
    Ok(out)
}

pub fn block_diag(a: &Mat, b: &Mat) -> Mat {
    let mut out = Mat::zeros(a.nrows() + b.nrows(), a.ncols() + b.ncols());
    out.view_mut((0, 0), a.shape()).copy_from(a);
    out.view_mut((a.nrows(), a.ncols()), b.shape()).copy_from(b);
    out
}

/// Row-major nested arrays, as used by the JSON interfaces.
pub fn mat_from_rows(rows: &[Vec<f64>]) -> Result<Mat> {
    let nrows = rows.len();
    let ncols = rows.first().map_or(0, |r| r.len());
    if rows.iter().any(|r| r.len() != ncols) {
        return Err(Error::invalid("ragged matrix rows"));
    }
    let m = Mat::from_fn(nrows, ncols, |i, j| rows[i][j]);
    ensure_finite(&m, "matrix")?;
    Ok(m)
}

pub fn mat_to_rows(m: &Mat) -> Vec<Vec<f64>> {
    m.row_iter().map(|r| r.iter().copied().collect()).collect()
}

/// Serde adapter for `Mat` fields stored as nested row arrays.
pub mod serde_mat {
    use super::{mat_from_rows, mat_to_rows, Mat};
    use serde::{Deserialize, Deserializer, Serialize, Serializer};

    pub fn serialize<S: Serializer>(m: &Mat, s: S) -> Result<S::Ok, S::Error> {
        mat_to_rows(m).serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Mat, D::Error> {
        let rows = Vec::<Vec<f64>>::deserialize(d)?;
        mat_from_rows(&rows).map_err(serde::de::Error::custom)
    }

    pub mod option {
        use super::*;

        pub fn serialize<S: Serializer>(m: &Option<Mat>, s: S) -> Result<S::Ok, S::Error> {
            m.as_ref().map(mat_to_rows).serialize(s)
        }

        pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Option<Mat>, D::Error> {
            Option::<Vec<Vec<f64>>>::deserialize(d)?
                .map(|rows| mat_from_rows(&rows).map_err(serde::de::Error::custom))
                .transpose()
        }
    }
}
