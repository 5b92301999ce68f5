//! Observer synthesis from data: the solution family of `Xf = Σ·D`, the
//! choice of its free parameter, and the data-side existence tests.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::data::{informativity_test, uio_informativity_test, DataMatrices, DataRecord};
use crate::descriptor::LtiSystem;
use crate::error::{Error, Result};
use crate::linalg::{
    complex_rank, eigenvalues, full_svd, is_schur, serde_mat, spectral_radius,
    stabilize_output_injection, to_complex, vstack, Mat, Tolerances, C64,
};

/// Points per circle in the rank-condition scan.
const CIRCLE_POINTS: usize = 720;
const CIRCLE_RADII: [f64; 2] = [1.0, 1.25];

/// `Xf = Σ·D` with `D = [Xp; Up; Yp; Yf]`.
#[derive(Debug, Clone)]
pub struct DataEquation {
    pub d: Mat,
    pub xf: Mat,
    pub d_pinv: Mat,
    /// `I − D·D†`.
    pub projector: Mat,
    /// Orthonormal basis of `Ker(D)`.
    pub kernel_basis: Mat,
    /// Block sizes `(n, m, p)`.
    pub dims: (usize, usize, usize),
}

/// The affine family `Σ(K1) = Σ0 + K1·(I − D·D†)`, whose `Xp` block is
/// `M + K1·G`.
#[derive(Debug, Clone)]
pub struct SolutionFamily {
    pub sigma0: Mat,
    /// `Xf·H_Xp`, the `Xp` block of `Σ0`.
    pub m: Mat,
    /// `Δ_Xp`, the leading `n` columns of the projector.
    pub g: Mat,
}

impl DataEquation {
    pub fn new(dm: &DataMatrices, tol: &Tolerances) -> Self {
        let d = dm.stacked();
        let (rows, cols) = d.shape();
        let svd = full_svd(&d);
        let cut = tol.rank_tol * svd.sigma.first().copied().unwrap_or(0.0);
        let r = svd.sigma.iter().filter(|&&s| s > cut && s > 0.0).count();
        let mut d_pinv = Mat::zeros(cols, rows);
        for j in 0..r {
            d_pinv += (svd.v.column(j) / svd.sigma[j]) * svd.u.column(j).transpose();
        }
        let ur = svd.u.columns(0, r);
        let projector = Mat::identity(rows, rows) - ur * ur.transpose();
        let kernel_basis = svd.v.columns(r, cols - r).into_owned();
        Self {
            d,
            xf: dm.xf.clone(),
            d_pinv,
            projector,
            kernel_basis,
            dims: (dm.n(), dm.m(), dm.p()),
        }
    }

    pub fn family(&self) -> SolutionFamily {
        let n = self.dims.0;
        let sigma0 = &self.xf * &self.d_pinv;
        let m = &self.xf * self.d_pinv.columns(0, n);
        let g = self.projector.columns(0, n).into_owned();
        SolutionFamily { sigma0, m, g }
    }

    /// `‖Xf − Σ·D‖_F`.
    pub fn residual(&self, sigma: &Mat) -> f64 {
        (&self.xf - sigma * &self.d).norm()
    }
}

/// Particular solution, projector, and the `(M, G)` pair of the free parameter.
pub fn solve_family(dm: &DataMatrices, tol: &Tolerances) -> (DataEquation, SolutionFamily) {
    let deq = DataEquation::new(dm, tol);
    let fam = deq.family();
    (deq, fam)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KernelInclusion {
    pub holds: bool,
    /// `‖Xf·Ω‖_F`.
    pub residual: f64,
    pub max_column_norm: f64,
}

/// `Ker(D) ⊆ Ker(Xf)`, tested on an orthonormal kernel basis.
pub fn kernel_inclusion_check(deq: &DataEquation, tol: &Tolerances) -> KernelInclusion {
    let prod = &deq.xf * &deq.kernel_basis;
    let residual = prod.norm();
    let max_column_norm = prod.column_iter().map(|c| c.norm()).fold(0.0, f64::max);
    KernelInclusion {
        holds: residual < tol.residual_tol,
        residual,
        max_column_norm,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ObserverKind {
    Standard,
    Uio,
    Eso,
}

/// `x̂(k+1) = A_O·x̂(k) + B_O^u·u(k) + B_O^y·y(k) + N_O·y(k+1)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "GainsJson", into = "GainsJson")]
pub struct ObserverGains {
    pub a_o: Mat,
    pub b_o_u: Mat,
    pub b_o_y: Mat,
    pub n_o: Mat,
    pub kind: ObserverKind,
}

#[derive(Serialize, Deserialize)]
struct GainsJson {
    kind: ObserverKind,
    #[serde(rename = "A_O", with = "serde_mat")]
    a_o: Mat,
    #[serde(rename = "B_O_u", with = "serde_mat")]
    b_o_u: Mat,
    #[serde(rename = "B_O_y", with = "serde_mat")]
    b_o_y: Mat,
    #[serde(rename = "N_O", with = "serde_mat")]
    n_o: Mat,
}

impl TryFrom<GainsJson> for ObserverGains {
    type Error = Error;

    fn try_from(g: GainsJson) -> Result<Self> {
        ObserverGains::new(
            g.a_o,
            g.b_o_u,
            g.b_o_y,
            g.n_o,
            g.kind,
            &Tolerances::default(),
        )
    }
}

impl From<ObserverGains> for GainsJson {
    fn from(g: ObserverGains) -> Self {
        GainsJson {
            kind: g.kind,
            a_o: g.a_o,
            b_o_u: g.b_o_u,
            b_o_y: g.b_o_y,
            n_o: g.n_o,
        }
    }
}

impl ObserverGains {
    /// Rejects inconsistent shapes and a non-Schur `A_O`.
    pub fn new(
        a_o: Mat,
        b_o_u: Mat,
        b_o_y: Mat,
        n_o: Mat,
        kind: ObserverKind,
        tol: &Tolerances,
    ) -> Result<Self> {
        let n = a_o.nrows();
        if !a_o.is_square()
            || b_o_u.nrows() != n
            || b_o_y.nrows() != n
            || n_o.shape() != b_o_y.shape()
        {
            return Err(Error::dim("observer gains have inconsistent shapes"));
        }
        if !is_schur(&a_o, tol)? {
            return Err(Error::invalid("A_O is not Schur stable"));
        }
        Ok(Self {
            a_o,
            b_o_u,
            b_o_y,
            n_o,
            kind,
        })
    }

    /// Split `Σ = [Σ_Xp Σ_Up Σ_Yp Σ_Yf]` into blocks of width `(n, m, p, p)`.
    pub fn from_sigma(
        sigma: &Mat,
        dims: (usize, usize, usize),
        kind: ObserverKind,
        tol: &Tolerances,
    ) -> Result<Self> {
        let (a, bu, by, no) = split_sigma(sigma, dims)?;
        Self::new(a, bu, by, no, kind, tol)
    }

    pub fn n(&self) -> usize {
        self.a_o.nrows()
    }

    pub fn m(&self) -> usize {
        self.b_o_u.ncols()
    }

    pub fn p(&self) -> usize {
        self.b_o_y.ncols()
    }

    pub fn sigma(&self) -> Mat {
        crate::linalg::hstack(&[&self.a_o, &self.b_o_u, &self.b_o_y, &self.n_o])
            .expect("rows match")
    }

    pub fn load(path: impl AsRef<std::path::Path>) -> Result<Self> {
        serde_json::from_str(&std::fs::read_to_string(path)?)
            .map_err(|e| Error::Parse(format!("gains: {e}")))
    }

    pub fn save(&self, path: impl AsRef<std::path::Path>) -> Result<()> {
        std::fs::write(path, serde_json::to_string_pretty(self)? + "\n")?;
        Ok(())
    }
}

fn split_sigma(sigma: &Mat, (n, m, p): (usize, usize, usize)) -> Result<(Mat, Mat, Mat, Mat)> {
    if sigma.shape() != (n, n + m + 2 * p) {
        return Err(Error::dim(format!(
            "Σ must be {n}×{}, got {:?}",
            n + m + 2 * p,
            sigma.shape()
        )));
    }
    Ok((
        sigma.columns(0, n).into_owned(),
        sigma.columns(n, m).into_owned(),
        sigma.columns(n + m, p).into_owned(),
        sigma.columns(n + m + p, p).into_owned(),
    ))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Infeasibility {
    /// `Ker(D) ⊄ Ker(Xf)`.
    KernelInclusion,
    /// No member of the family has a Schur `Xp` block.
    NotStabilizable,
    /// The data-based assumption test failed, so synthesis was refused.
    DataInformativity,
    /// The chosen `Σ` does not reproduce the data.
    DataResidual,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SynthesisReport {
    pub kind: ObserverKind,
    pub feasible: bool,
    pub reason: Option<Infeasibility>,
    pub spectral_radius: f64,
    pub data_residual: f64,
    pub kernel_inclusion_residual: Option<f64>,
    #[serde(rename = "K1_norm")]
    pub k1_norm: f64,
    #[serde(rename = "K1", with = "serde_mat")]
    pub k1: Mat,
    pub checks: BTreeMap<String, bool>,
    pub informativity_rank: usize,
    #[serde(rename = "A_O", with = "serde_mat")]
    pub a_o: Mat,
    #[serde(rename = "B_O_u", with = "serde_mat")]
    pub b_o_u: Mat,
    #[serde(rename = "B_O_y", with = "serde_mat")]
    pub b_o_y: Mat,
    #[serde(rename = "N_O", with = "serde_mat")]
    pub n_o: Mat,
}

impl SynthesisReport {
    pub fn save(&self, path: impl AsRef<std::path::Path>) -> Result<()> {
        std::fs::write(path, serde_json::to_string_pretty(self)? + "\n")?;
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct Synthesis {
    /// Present exactly when the report is feasible.
    pub gains: Option<ObserverGains>,
    pub report: SynthesisReport,
}

/// Try `K1 = 0`; otherwise stabilize `(M, G)` by output injection. Returns the
/// chosen parameter (`None` if none stabilizes) and the resulting `Σ`.
fn choose_parameter(
    deq: &DataEquation,
    fam: &SolutionFamily,
    tol: &Tolerances,
) -> Result<(Option<Mat>, Mat)> {
    let (n, _, _) = deq.dims;
    let w = deq.d.nrows();
    if is_schur(&fam.m, tol)? {
        return Ok((Some(Mat::zeros(n, w)), fam.sigma0.clone()));
    }
    match stabilize_output_injection(&fam.m, &fam.g, tol)? {
        Some(k1) => {
            let sigma = &fam.sigma0 + &k1 * &deq.projector;
            Ok((Some(k1), sigma))
        }
        None => Ok((None, fam.sigma0.clone())),
    }
}

struct Gate {
    kind: ObserverKind,
    q: usize,
    require_kernel_inclusion: bool,
    require_informativity: bool,
}

fn run_synthesis(dm: &DataMatrices, gate: Gate, tol: &Tolerances) -> Result<Synthesis> {
    tol.validate()?;
    let (n, m) = (dm.n(), dm.m());
    let (deq, fam) = solve_family(dm, tol);
    let mut checks = BTreeMap::new();
    let informative = if gate.kind == ObserverKind::Uio {
        let ok = uio_informativity_test(dm, m, n, gate.q, tol);
        checks.insert("uio_informativity".to_string(), ok);
        ok
    } else {
        let ok = informativity_test(dm, m, n, tol);
        checks.insert("informativity".to_string(), ok);
        ok
    };
    let inclusion = kernel_inclusion_check(&deq, tol);
    checks.insert("kernel_inclusion".to_string(), inclusion.holds);
    checks.insert(
        "rank_condition".to_string(),
        rank_condition_with(dm, &fam.m, tol)?,
    );

    let (k1, sigma) = choose_parameter(&deq, &fam, tol)?;
    checks.insert("detectability_of_family_pair".to_string(), k1.is_some());
    let data_residual = deq.residual(&sigma);
    let (a_o, b_o_u, b_o_y, n_o) = split_sigma(&sigma, deq.dims)?;
    let radius = spectral_radius(&a_o)?;

    let reason = if gate.require_informativity && !informative {
        Some(Infeasibility::DataInformativity)
    } else if gate.require_kernel_inclusion && !inclusion.holds {
        Some(Infeasibility::KernelInclusion)
    } else if k1.is_none() || radius >= 1.0 - tol.schur_margin {
        Some(Infeasibility::NotStabilizable)
    } else if data_residual >= tol.residual_tol {
        Some(Infeasibility::DataResidual)
    } else {
        None
    };
    let feasible = reason.is_none();
    let k1 = k1.unwrap_or_else(|| Mat::zeros(n, deq.d.nrows()));
    let gains = if feasible {
        Some(ObserverGains::new(
            a_o.clone(),
            b_o_u.clone(),
            b_o_y.clone(),
            n_o.clone(),
            gate.kind,
            tol,
        )?)
    } else {
        None
    };
    let report = SynthesisReport {
        kind: gate.kind,
        feasible,
        reason,
        spectral_radius: radius,
        data_residual,
        kernel_inclusion_residual: (gate.kind == ObserverKind::Uio).then_some(inclusion.residual),
        k1_norm: k1.norm(),
        k1,
        checks,
        informativity_rank: dm.informativity_rank(tol),
        a_o,
        b_o_u,
        b_o_y,
        n_o,
    };
    Ok(Synthesis { gains, report })
}

/// Standard observer from data without unknown inputs.
pub fn synthesize_observer(dm: &DataMatrices, tol: &Tolerances) -> Result<Synthesis> {
    let gate = Gate {
        kind: ObserverKind::Standard,
        q: 0,
        require_kernel_inclusion: false,
        require_informativity: false,
    };
    run_synthesis(dm, gate, tol)
}

/// Unknown-input observer. `q` is the number of unknown-input channels, used
/// by the informativity gate `rk[Xp; Up; Yf] = n + m + q`.
pub fn synthesize_uio(dm: &DataMatrices, q: usize, tol: &Tolerances) -> Result<Synthesis> {
    let gate = Gate {
        kind: ObserverKind::Uio,
        q,
        require_kernel_inclusion: true,
        require_informativity: true,
    };
    run_synthesis(dm, gate, tol)
}

/// Extended state observer: the disturbance samples are appended to the
/// state data and the standard pipeline runs on the result.
pub fn synthesize_eso(lti: &LtiSystem, rec: &DataRecord, tol: &Tolerances) -> Result<Synthesis> {
    if rec.n() != lti.n() || rec.m() != lti.m() || rec.p() != lti.p() {
        return Err(Error::dim("record does not match the plant dimensions"));
    }
    if lti.r() == 0 {
        let mut out = synthesize_observer(&DataMatrices::from_record(rec), tol)?;
        relabel(&mut out, ObserverKind::Eso);
        return Ok(out);
    }
    if rec.q() != lti.r() {
        return Err(Error::MissingData(format!(
            "record needs {} disturbance channels",
            lti.r()
        )));
    }
    let aug = rec.with_augmented_state()?;
    let mut out = synthesize_observer(&DataMatrices::from_record(&aug), tol)?;
    relabel(&mut out, ObserverKind::Eso);
    Ok(out)
}

fn relabel(out: &mut Synthesis, kind: ObserverKind) {
    out.report.kind = kind;
    if let Some(g) = &mut out.gains {
        g.kind = kind;
    }
}

/// `rk[λXp − Xf; Up; Yp; Yf] = rk[Xp; Up; Yf]` at every candidate `|λ| ≥ 1`.
///
/// Candidates are the eigenvalues of `Xf·H_Xp` on or outside the unit circle
/// plus 720-point grids on the circles of radius 1 and 1.25. This is exact at
/// the candidates only.
pub fn rank_condition_check(dm: &DataMatrices, tol: &Tolerances) -> Result<bool> {
    let (_, fam) = solve_family(dm, tol);
    rank_condition_with(dm, &fam.m, tol)
}

fn rank_condition_with(dm: &DataMatrices, m: &Mat, tol: &Tolerances) -> Result<bool> {
    let rhs = dm.informativity_rank(tol);
    let rest = to_complex(&vstack(&[&dm.up, &dm.yp, &dm.yf])?);
    let xp = to_complex(&dm.xp);
    let xf = to_complex(&dm.xf);
    let n = dm.n();
    let t = dm.t();
    let mut stacked = crate::linalg::CMat::zeros(n + rest.nrows(), t);
    stacked.rows_mut(n, rest.nrows()).copy_from(&rest);
    let mut lhs_rank = |lambda: C64| {
        stacked.rows_mut(0, n).copy_from(&(&xp * lambda - &xf));
        complex_rank(&stacked, tol)
    };
    let eig = eigenvalues(m)?;
    let on_circles = CIRCLE_RADII.iter().flat_map(|&r| {
        (0..CIRCLE_POINTS).map(move |j| {
            C64::from_polar(r, std::f64::consts::TAU * j as f64 / CIRCLE_POINTS as f64)
        })
    });
    let candidates = eig
        .into_iter()
        .filter(|l| l.norm() >= 1.0 - tol.schur_margin)
        .chain(on_circles);
    for lambda in candidates {
        if lhs_rank(lambda) != rhs {
            return Ok(false);
        }
    }
    Ok(true)
}
