//! Model-based oracles for the data-driven results.

mod montecarlo;

use rand::Rng;

use crate::data::{hankel, DataMatrices, DataRecord};
use crate::descriptor::{simulate, DescriptorSystem, WeierstrassForm};
use crate::error::{Error, Result};
use crate::linalg::{
    hstack, pseudoinverse_with, range_basis, stabilize_output_injection, vstack, Mat, Tolerances,
    Vector,
};
use crate::synthesis::{ObserverGains, ObserverKind};

pub use montecarlo::{
    montecarlo_equivalence, Equivalence, MonteCarloConfig, MonteCarloSummary, TrialCase,
};

/// A solution `[T N]` of `[T N]·W = target` together with the left
/// annihilator `I − W·W†` that spans every other solution.
#[derive(Debug, Clone)]
pub struct TnPair {
    pub t: Mat,
    pub n: Mat,
    pub freedom: Mat,
    /// `‖[T N]·W − target‖_F`.
    pub residual: f64,
}

impl TnPair {
    fn solve(w: &Mat, target: &Mat, n: usize, tol: &Tolerances) -> Self {
        let w_pinv = pseudoinverse_with(w, tol);
        let x = target * &w_pinv;
        let freedom = Mat::identity(w.nrows(), w.nrows()) - w * &w_pinv;
        let residual = (&x * w - target).norm();
        let p = w.nrows() - n;
        Self {
            t: x.columns(0, n).into_owned(),
            n: x.columns(n, p).into_owned(),
            freedom,
            residual,
        }
    }
}

/// `TE + NC = I` and, when the plant has `F`, `T̄E + N̄C = I` with `T̄F = 0`.
#[derive(Debug, Clone)]
pub struct ModelBaseline {
    pub standard: TnPair,
    pub uio: Option<TnPair>,
}

/// Minimum-norm `(T, N)` (and `(T̄, N̄)` when `uio`). `None` when the
/// required rank assumption fails.
pub fn solve_tn(
    sys: &DescriptorSystem,
    uio: bool,
    tol: &Tolerances,
) -> Result<Option<ModelBaseline>> {
    let n = sys.n();
    if !sys.dual_normalizability(tol) {
        return Ok(None);
    }
    let standard = TnPair::solve(&vstack(&[&sys.e, &sys.c])?, &Mat::identity(n, n), n, tol);
    if standard.residual >= tol.residual_tol {
        return Ok(None);
    }
    let uio = match (uio, &sys.f) {
        (false, _) => None,
        (true, None) => return Err(Error::MissingData("UIO baseline needs F".into())),
        (true, Some(f)) => {
            if !sys.matching_condition(tol)? {
                return Ok(None);
            }
            let (p, q) = (sys.p(), sys.q());
            let w = vstack(&[
                &hstack(&[&sys.e, f])?,
                &hstack(&[&sys.c, &Mat::zeros(p, q)])?,
            ])?;
            let target = hstack(&[&Mat::identity(n, n), &Mat::zeros(n, q)])?;
            let pair = TnPair::solve(&w, &target, n, tol);
            if pair.residual >= tol.residual_tol {
                return Ok(None);
            }
            Some(pair)
        }
    };
    Ok(Some(ModelBaseline { standard, uio }))
}

/// Model-based observer `A_O = TA − LC`, `B_O^u = TB`, `B_O^y = L`, `N_O = N`.
///
/// The search ranges over every `[T N]` solution, `[T N] = X0 + Z·Π`, so
/// `(Z, L)` is one output-injection gain for the pair
/// `(T0·A, [Π_T·A; C])`. `None` when no member is Schur.
pub fn model_observer(
    sys: &DescriptorSystem,
    base: &ModelBaseline,
    kind: ObserverKind,
    tol: &Tolerances,
) -> Result<Option<ObserverGains>> {
    let pair = match kind {
        ObserverKind::Uio => base
            .uio
            .as_ref()
            .ok_or_else(|| Error::MissingData("baseline has no UIO pair".into()))?,
        _ => &base.standard,
    };
    let (n, p) = (sys.n(), sys.p());
    let w = n + p;
    let pi_t = pair.freedom.columns(0, n).into_owned();
    let pi_n = pair.freedom.columns(n, p).into_owned();
    let m = &pair.t * &sys.a;
    let g = vstack(&[&(&pi_t * &sys.a), &sys.c])?;
    let Some(k) = stabilize_output_injection(&m, &g, tol)? else {
        return Ok(None);
    };
    let z = k.columns(0, w).into_owned();
    let l = -k.columns(w, p).into_owned();
    let t = &pair.t + &z * pi_t;
    let nn = &pair.n + &z * pi_n;
    let a_o = &t * &sys.a - &l * &sys.c;
    let b_o_u = &t * &sys.b;
    match ObserverGains::new(a_o, b_o_u, l, nn, kind, tol) {
        Ok(g) => Ok(Some(g)),
        Err(Error::InvalidInput(_)) => Ok(None),
        Err(e) => Err(e),
    }
}

/// `‖Xf − Σ·[Xp; Up; Yp; Yf]‖_F` for the gains' `Σ`.
pub fn data_equation_residual(g: &ObserverGains, dm: &DataMatrices) -> Result<f64> {
    if g.n() != dm.n() || g.m() != dm.m() || g.p() != dm.p() {
        return Err(Error::dim("gains do not match the data dimensions"));
    }
    Ok((&dm.xf - g.sigma() * dm.stacked()).norm())
}

/// Linear map from the latent window `[z1(k); ũ(k); …; ũ(k+s)]` to the tuple
/// `[x(k); x(k+1); u(k); y(k); y(k+1)]`, where `ũ` is `u` or `[u; η]`.
#[derive(Debug, Clone)]
pub struct TrajectoryMap {
    pub matrix: Mat,
    pub with_unknown: bool,
    n1: usize,
    width: usize,
    s: usize,
}

impl TrajectoryMap {
    pub fn new(sys: &DescriptorSystem, wf: &WeierstrassForm, with_unknown: bool) -> Result<Self> {
        if with_unknown && sys.f.is_none() {
            return Err(Error::MissingData("unknown-input map needs F".into()));
        }
        let (n, m, p) = (sys.n(), sys.m(), sys.p());
        let (n1, s) = (wf.n1, wf.nilpotency);
        let (bt1, bt2) = wf.input_blocks(with_unknown);
        let width = bt1.ncols();
        let latent = n1 + width * (s + 1);
        let p1 = wf.p1();
        let p2 = wf.p2();

        // x(k) and x(k+1) over the window; z2 uses s samples of ũ.
        let mut x0 = Mat::zeros(n, latent);
        let mut x1 = Mat::zeros(n, latent);
        x0.columns_mut(0, n1).copy_from(&p1);
        x1.columns_mut(0, n1).copy_from(&(&p1 * &wf.a1));
        let add = |target: &mut Mat, col: usize, block: &Mat| {
            let mut v = target.columns_mut(col, width);
            v += block;
        };
        add(&mut x1, n1, &(&p1 * &bt1));
        let mut rb = bt2.clone();
        for j in 0..s {
            let block = -(&p2 * &rb);
            add(&mut x0, n1 + j * width, &block);
            add(&mut x1, n1 + (j + 1) * width, &block);
            rb = &wf.r * rb;
        }
        let mut u0 = Mat::zeros(m, latent);
        u0.view_mut((0, n1), (m, m)).fill_with_identity();
        let matrix = vstack(&[&x0, &x1, &u0, &(&sys.c * &x0), &(&sys.c * &x1)])?;
        debug_assert_eq!(matrix.nrows(), 2 * n + m + 2 * p);
        Ok(Self {
            matrix,
            with_unknown,
            n1,
            width,
            s,
        })
    }

    pub fn latent_dim(&self) -> usize {
        self.matrix.ncols()
    }

    /// `[H1(z1_d); H_{s+1}(ũ_d)]` over the record's `T` columns.
    pub fn latent_data(&self, rec: &DataRecord, wf: &WeierstrassForm) -> Result<Mat> {
        let t = rec.t();
        let inputs = augmented_inputs(rec, self.with_unknown)?;
        let needed = t + self.s;
        if inputs.len() < needed {
            return Err(Error::Length {
                what: "input u",
                needed,
                got: inputs.len(),
            });
        }
        if inputs[0].len() != self.width {
            return Err(Error::dim("record inputs do not match the map"));
        }
        let h_u = hankel(&inputs[..needed], self.s + 1)?;
        let z1 = Mat::from_fn(self.n1, t, |i, j| wf.slow_state(&rec.x[j])[i]);
        vstack(&[&z1, &h_u])
    }

    /// `‖map·latent − [Xp; Xf; Up; Yp; Yf]‖_F`.
    pub fn reproduction_residual(&self, rec: &DataRecord, wf: &WeierstrassForm) -> Result<f64> {
        let latent = self.latent_data(rec, wf)?;
        let stack = DataMatrices::from_record(rec).full_stack();
        Ok((&self.matrix * latent - stack).norm())
    }
}

fn augmented_inputs(rec: &DataRecord, with_unknown: bool) -> Result<Vec<Vector>> {
    if !with_unknown {
        return Ok(rec.u.clone());
    }
    let eta = rec
        .eta
        .as_ref()
        .ok_or_else(|| Error::MissingData("record has no unknown-input samples".into()))?;
    Ok(rec
        .u
        .iter()
        .zip(eta)
        .map(|(u, e)| Vector::from_iterator(u.len() + e.len(), u.iter().chain(e.iter()).copied()))
        .collect())
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrajectoryOutcome {
    pub holds: bool,
    /// Worst model residual of a data combination `S·g`, `‖g‖ = 1`.
    pub combination_residual: f64,
    /// Worst distance of a fresh system tuple from the column space of `S`.
    pub projection_residual: f64,
    /// How well the latent map reproduces the recorded stack.
    pub map_residual: f64,
}

/// Two-way check that the column space of `S = [Xp; Xf; Up; Yp; Yf]` is
/// exactly the set of one-step system tuples. With `F` present in `sys` and
/// `eta` in the record, the descriptor relation is tested modulo `Im F`.
pub fn trajectory_oracle(
    sys: &DescriptorSystem,
    wf: &WeierstrassForm,
    rec: &DataRecord,
    trials: usize,
    rng: &mut impl Rng,
    tol: &Tolerances,
) -> Result<TrajectoryOutcome> {
    let with_unknown = sys.f.is_some() && rec.eta.is_some();
    let (n, m, p) = (sys.n(), sys.m(), sys.p());
    if rec.n() != n || rec.m() != m || rec.p() != p {
        return Err(Error::dim("record does not match the plant"));
    }
    let stack = DataMatrices::from_record(rec).full_stack();
    let t = stack.ncols();
    let annihilate_f = match (&sys.f, with_unknown) {
        (Some(f), true) => Mat::identity(n, n) - f * pseudoinverse_with(f, tol),
        _ => Mat::identity(n, n),
    };
    let tuple_residual = |v: &Vector| -> f64 {
        let x0 = v.rows(0, n);
        let x1 = v.rows(n, n);
        let u = v.rows(2 * n, m);
        let y0 = v.rows(2 * n + m, p);
        let y1 = v.rows(2 * n + m + p, p);
        let dyn_res = &annihilate_f * (&sys.e * x1 - &sys.a * x0 - &sys.b * u);
        let out0 = y0 - &sys.c * x0;
        let out1 = y1 - &sys.c * x1;
        (dyn_res.norm_squared() + out0.norm_squared() + out1.norm_squared()).sqrt()
    };

    let mut combination_residual = 0.0f64;
    for _ in 0..trials {
        let mut g = Vector::from_fn(t, |_, _| rng.random_range(-1.0..1.0));
        g /= g.norm();
        combination_residual = combination_residual.max(tuple_residual(&(&stack * g)));
    }

    let basis = range_basis(&stack, tol);
    let width = if with_unknown { m + sys.q() } else { m };
    let s = wf.nilpotency;
    let mut projection_residual = 0.0f64;
    for _ in 0..trials {
        let z1 = Vector::from_fn(wf.n1, |_, _| rng.random_range(-1.0..1.0));
        let window: Vec<Vector> = (0..=s)
            .map(|_| Vector::from_fn(width, |_, _| rng.random_range(-1.0..1.0)))
            .collect();
        let u: Vec<Vector> = window.iter().map(|w| w.rows(0, m).into_owned()).collect();
        let eta: Option<Vec<Vector>> = with_unknown.then(|| {
            window
                .iter()
                .map(|w| w.rows(m, width - m).into_owned())
                .collect()
        });
        let traj = simulate(sys, wf, &z1, &u, eta.as_deref(), 1)?;
        let v = Vector::from_iterator(
            2 * n + m + 2 * p,
            traj.x[0]
                .iter()
                .chain(traj.x[1].iter())
                .chain(u[0].iter())
                .chain(traj.y[0].iter())
                .chain(traj.y[1].iter())
                .copied(),
        );
        let proj = &basis * (basis.transpose() * &v);
        projection_residual = projection_residual.max((v - proj).norm());
    }

    let map_residual = TrajectoryMap::new(sys, wf, with_unknown)?.reproduction_residual(rec, wf)?;
    let bound = tol.residual_tol;
    Ok(TrajectoryOutcome {
        holds: combination_residual < bound && projection_residual < bound && map_residual < bound,
        combination_residual,
        projection_residual,
        map_residual,
    })
}
