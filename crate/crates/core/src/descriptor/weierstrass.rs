use super::{krylov, DescriptorSystem};
use crate::error::{Error, Result};
use crate::linalg::{hstack, rank_scaled, Mat, PencilDecomposition, Tolerances, Vector};

/// Slow/fast decoupling: `S·E·P = diag(I, R)`, `S·A·P = diag(A1, I)`,
/// `S·B = [B1; B2]`, `C·P = [C1 C2]`, `S·F = [F1; F2]`.
#[derive(Debug, Clone)]
pub struct WeierstrassForm {
    pub s: Mat,
    pub p: Mat,
    pub p_inv: Mat,
    pub n1: usize,
    pub n2: usize,
    /// Nilpotency index of `R`; zero when there is no fast subsystem.
    pub nilpotency: usize,
    pub a1: Mat,
    pub r: Mat,
    pub b1: Mat,
    pub b2: Mat,
    pub c1: Mat,
    pub c2: Mat,
    pub f1: Option<Mat>,
    pub f2: Option<Mat>,
}

impl WeierstrassForm {
    pub fn new(sys: &DescriptorSystem, tol: &Tolerances) -> Result<Self> {
        let dec = PencilDecomposition::new(&sys.e, &sys.a, tol)?;
        let n = sys.n();
        let n1 = dec.n1;
        let n2 = n - n1;
        let p_inv = dec.p.clone().try_inverse().ok_or(Error::SingularPencil)?;
        let sb = &dec.s * &sys.b;
        let cp = &sys.c * &dec.p;
        let (f1, f2) = match &sys.f {
            Some(f) => {
                let sf = &dec.s * f;
                (
                    Some(sf.rows(0, n1).into_owned()),
                    Some(sf.rows(n1, n2).into_owned()),
                )
            }
            None => (None, None),
        };
        let nilpotency = nilpotency_index(&dec.r, tol);
        Ok(Self {
            b1: sb.rows(0, n1).into_owned(),
            b2: sb.rows(n1, n2).into_owned(),
            c1: cp.columns(0, n1).into_owned(),
            c2: cp.columns(n1, n2).into_owned(),
            s: dec.s,
            p: dec.p,
            p_inv,
            n1,
            n2,
            nilpotency,
            a1: dec.a1,
            r: dec.r,
            f1,
            f2,
        })
    }

    pub fn p1(&self) -> Mat {
        self.p.columns(0, self.n1).into_owned()
    }

    pub fn p2(&self) -> Mat {
        self.p.columns(self.n1, self.n2).into_owned()
    }

    /// `z1`-coordinates of a state: the leading block of `P⁻¹·x`.
    pub fn slow_state(&self, x: &Vector) -> Vector {
        (&self.p_inv * x).rows(0, self.n1).into_owned()
    }

    /// `([B1 F1], [B2 F2])` when `with_unknown` and `F` is present, otherwise `(B1, B2)`.
    pub fn input_blocks(&self, with_unknown: bool) -> (Mat, Mat) {
        match (&self.f1, &self.f2, with_unknown) {
            (Some(f1), Some(f2), true) => (
                hstack(&[&self.b1, f1]).expect("row counts match"),
                hstack(&[&self.b2, f2]).expect("row counts match"),
            ),
            _ => (self.b1.clone(), self.b2.clone()),
        }
    }

    /// Slow subsystem `(A1, B1)` is controllable.
    pub fn r_controllable(&self, tol: &Tolerances) -> bool {
        self.slow_controllable(&self.b1, tol)
    }

    /// Slow subsystem controllable through the augmented input `[B1 F1]`.
    pub fn r_controllable_augmented(&self, tol: &Tolerances) -> bool {
        self.slow_controllable(&self.input_blocks(true).0, tol)
    }

    fn slow_controllable(&self, b1: &Mat, tol: &Tolerances) -> bool {
        self.n1 == 0
            || rank_scaled(&krylov(&self.a1, b1, self.n1), tol, self.input_scale()) == self.n1
    }

    /// Size of the whole input map, so that a numerically zero block is not
    /// judged full rank relative to itself.
    fn input_scale(&self) -> f64 {
        let (b1, b2) = self.input_blocks(true);
        (b1.norm_squared() + b2.norm_squared()).sqrt()
    }

    /// R-controllable and `rk[B2, R·B2, …, R^{s−1}·B2] = n2`.
    pub fn c_controllable(&self, tol: &Tolerances) -> bool {
        self.r_controllable(tol)
            && (self.n2 == 0
                || rank_scaled(
                    &krylov(&self.r, &self.b2, self.nilpotency),
                    tol,
                    self.input_scale(),
                ) == self.n2)
    }

    /// `[B2, R·B2, …, R^{s−1}·B2]`.
    pub fn fast_reachability(&self, with_unknown: bool) -> Mat {
        krylov(&self.r, &self.input_blocks(with_unknown).1, self.nilpotency)
    }
}

fn nilpotency_index(r: &Mat, tol: &Tolerances) -> usize {
    let n2 = r.nrows();
    if n2 == 0 {
        return 0;
    }
    let scale = r.norm().max(1.0);
    let mut power = r.clone();
    for k in 1..=n2 {
        if power.norm() <= tol.residual_tol * scale.powi(k as i32) {
            return k;
        }
        power = &power * r;
    }
    n2
}

/// State and output samples `k = 0..=steps`.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub x: Vec<Vector>,
    pub y: Vec<Vector>,
}

/// The unique consistent trajectory seeded by the slow state `z1(0)`.
///
/// The slow part is propagated forward; the fast part is anticipatory,
/// `z2(k) = −Σ_{j<s} R^j·B2·ũ(k+j)`, so `steps + s` input samples are needed.
/// With `eta`, the effective input is `ũ = [u; η]` through `[B F]`.
pub fn simulate(
    sys: &DescriptorSystem,
    wf: &WeierstrassForm,
    z1_init: &Vector,
    u: &[Vector],
    eta: Option<&[Vector]>,
    steps: usize,
) -> Result<Trajectory> {
    if z1_init.len() != wf.n1 {
        return Err(Error::dim(format!(
            "z1(0) must have {} entries, got {}",
            wf.n1,
            z1_init.len()
        )));
    }
    let needed = steps + wf.nilpotency;
    if u.len() < needed {
        return Err(Error::Length {
            what: "input u",
            needed,
            got: u.len(),
        });
    }
    if u[..needed].iter().any(|v| v.len() != sys.m()) {
        return Err(Error::dim(format!(
            "input samples must have {} entries",
            sys.m()
        )));
    }
    if let Some(eta) = eta {
        if sys.f.is_none() {
            return Err(Error::MissingData(
                "eta supplied for a system without F".into(),
            ));
        }
        if eta.len() < needed {
            return Err(Error::Length {
                what: "unknown input eta",
                needed,
                got: eta.len(),
            });
        }
        if eta[..needed].iter().any(|v| v.len() != sys.q()) {
            return Err(Error::dim(format!(
                "eta samples must have {} entries",
                sys.q()
            )));
        }
    }
    let (bt1, bt2) = wf.input_blocks(eta.is_some());
    let u_ext = |k: usize| -> Vector {
        match eta {
            Some(eta) => {
                let mut v = Vector::zeros(sys.m() + sys.q());
                v.rows_mut(0, sys.m()).copy_from(&u[k]);
                v.rows_mut(sys.m(), sys.q()).copy_from(&eta[k]);
                v
            }
            None => u[k].clone(),
        }
    };
    let r_powers_b2: Vec<Mat> = {
        let mut out = Vec::with_capacity(wf.nilpotency);
        let mut cur = bt2.clone();
        for _ in 0..wf.nilpotency {
            out.push(cur.clone());
            cur = &wf.r * &cur;
        }
        out
    };

    let mut x = Vec::with_capacity(steps + 1);
    let mut y = Vec::with_capacity(steps + 1);
    let mut z1 = z1_init.clone();
    let p1 = wf.p1();
    let p2 = wf.p2();
    for k in 0..=steps {
        let mut z2 = Vector::zeros(wf.n2);
        for (j, rb) in r_powers_b2.iter().enumerate() {
            z2 -= rb * u_ext(k + j);
        }
        let xk = &p1 * &z1 + &p2 * &z2;
        y.push(&sys.c * &xk);
        x.push(xk);
        if k < steps {
            z1 = &wf.a1 * &z1 + &bt1 * u_ext(k);
        }
    }
    Ok(Trajectory { x, y })
}

#[cfg(test)]
mod tests {
    use super::super::fixtures::*;
    use super::*;
    use crate::linalg::block_diag;
    use crate::linalg::numerical_rank;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn tol() -> Tolerances {
        Tolerances::default()
    }

    fn uniform_seq(rng: &mut ChaCha8Rng, len: usize, dim: usize, lo: f64, hi: f64) -> Vec<Vector> {
        (0..len)
            .map(|_| Vector::from_fn(dim, |_, _| rng.random_range(lo..hi)))
            .collect()
    }

    #[test]
    fn identity_e_has_no_fast_part() {
        let sys = DescriptorSystem::new(
            Mat::identity(2, 2),
            Mat::from_row_slice(2, 2, &[0.1, 0.9, -0.4, 0.3]),
            Mat::from_row_slice(2, 1, &[1.0, 0.5]),
            Mat::from_row_slice(1, 2, &[1.0, 0.0]),
            None,
        )
        .unwrap();
        let wf = sys.weierstrass(&tol()).unwrap();
        assert_eq!((wf.n1, wf.n2, wf.nilpotency), (2, 0, 0));
        let mut got = crate::linalg::eigenvalues(&wf.a1).unwrap();
        let mut want = crate::linalg::eigenvalues(&sys.a).unwrap();
        got.sort_by(|a, b| a.im.total_cmp(&b.im));
        want.sort_by(|a, b| a.im.total_cmp(&b.im));
        for (g, w) in got.iter().zip(&want) {
            assert!((g - w).norm() < 1e-10);
        }

        // causal special case matches the direct recursion
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let u = uniform_seq(&mut rng, 10, 1, -1.0, 1.0);
        let x0 = Vector::from_vec(vec![0.7, -0.2]);
        let z1 = wf.slow_state(&x0);
        let traj = simulate(&sys, &wf, &z1, &u, None, 10).unwrap();
        let mut x = x0;
        for k in 0..=10 {
            assert!((&traj.x[k] - &x).norm() < 1e-12);
            if k < 10 {
                x = &sys.a * &x + &sys.b * &u[k];
            }
        }
    }

    #[test]
    fn already_decoupled_pencil() {
        let sys = DescriptorSystem::new(
            Mat::from_row_slice(2, 2, &[1.0, 0.0, 0.0, 0.0]),
            Mat::from_row_slice(2, 2, &[0.7, 0.0, 0.0, 1.0]),
            Mat::from_row_slice(2, 1, &[1.0, 2.0]),
            Mat::from_row_slice(1, 2, &[1.0, 1.0]),
            None,
        )
        .unwrap();
        let wf = sys.weierstrass(&tol()).unwrap();
        assert_eq!((wf.n1, wf.n2, wf.nilpotency), (1, 1, 1));
        assert!(wf.r[(0, 0)].abs() < 1e-14);
        assert!((wf.a1[(0, 0)] - 0.7).abs() < 1e-12);
    }

    #[test]
    fn example1_form_invariants() {
        let sys = example2();
        let wf = sys.weierstrass(&tol()).unwrap();
        assert_eq!((wf.n1, wf.n2, wf.nilpotency), (2, 1, 1));
        let sep = &wf.s * &sys.e * &wf.p;
        let sap = &wf.s * &sys.a * &wf.p;
        assert!((sep - block_diag(&Mat::identity(2, 2), &wf.r)).norm() < 1e-8);
        assert!((sap - block_diag(&wf.a1, &Mat::identity(1, 1))).norm() < 1e-8);
        let sb = &wf.s * &sys.b;
        assert!((sb.rows(0, 2) - &wf.b1).norm() < 1e-14);
        let cp = &sys.c * &wf.p;
        assert!((cp.columns(2, 1) - &wf.c2).norm() < 1e-14);
        assert!(wf.f1.is_some() && wf.f2.is_some());
    }

    #[test]
    fn zero_input_zero_state() {
        let sys = example1();
        let wf = sys.weierstrass(&tol()).unwrap();
        let u = vec![Vector::zeros(1); 12];
        let traj = simulate(&sys, &wf, &Vector::zeros(2), &u, None, 10).unwrap();
        assert!(traj.x.iter().chain(&traj.y).all(|v| v.norm() == 0.0));
    }

    #[test]
    fn example1_random_input_satisfies_descriptor_relation() {
        let sys = example2();
        let wf = sys.weierstrass(&tol()).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let u = uniform_seq(&mut rng, 31, 1, -5.0, 5.0);
        let eta = uniform_seq(&mut rng, 31, 1, -5.0, 5.0);
        let z1 = Vector::from_vec(vec![0.4, 1.3]);
        for eta in [None, Some(&eta[..])] {
            let traj = simulate(&sys, &wf, &z1, &u, eta, 30).unwrap();
            assert_eq!(traj.x.len(), 31);
            for k in 0..30 {
                let mut rhs = &sys.a * &traj.x[k] + &sys.b * &u[k];
                if let Some(eta) = eta {
                    rhs += sys.f.as_ref().unwrap() * &eta[k];
                }
                assert!((&sys.e * &traj.x[k + 1] - rhs).norm() < 1e-9);
                assert!((&traj.y[k] - &sys.c * &traj.x[k]).norm() < 1e-12);
            }
        }
    }

    #[test]
    fn insufficient_input_is_a_length_error() {
        let sys = example1();
        let wf = sys.weierstrass(&tol()).unwrap();
        let u = vec![Vector::zeros(1); 10];
        let err = simulate(&sys, &wf, &Vector::zeros(2), &u, None, 10).unwrap_err();
        assert!(matches!(
            err,
            Error::Length {
                needed: 11,
                got: 10,
                ..
            }
        ));
    }

    #[test]
    fn controllability_tests() {
        let sys = example1();
        let wf = sys.weierstrass(&tol()).unwrap();
        // Brute force: states reachable from z1 = 0 by unit impulses applied at
        // each of n1 steps must span the slow space.
        let steps = wf.n1;
        let mut reached = Vec::new();
        for t in 0..steps {
            let mut u = vec![Vector::zeros(1); steps + wf.nilpotency + 1];
            u[t][0] = 1.0;
            let traj = simulate(&sys, &wf, &Vector::zeros(wf.n1), &u, None, steps).unwrap();
            reached.push(wf.slow_state(&traj.x[steps]));
        }
        let reach = Mat::from_columns(&reached);
        let brute = numerical_rank(&reach, &tol()).unwrap() == wf.n1;
        assert_eq!(wf.r_controllable(&tol()), brute);
        assert!(brute);
        // Fast part of Example 1: R = 0, s = 1, B2 ≠ 0
        assert_eq!(wf.c_controllable(&tol()), wf.b2.norm() > 1e-12);

        let mut dead = sys.clone();
        let mut slow_only = Mat::zeros(3, 1);
        slow_only[(0, 0)] = 1.0;
        dead.b = wf.s.clone().try_inverse().unwrap() * slow_only;
        let wf_dead = dead.weierstrass(&tol()).unwrap();
        assert!(wf_dead.b2.norm() < 1e-12, "{}", wf_dead.b2);
        assert!(!wf_dead.c_controllable(&tol()));
    }
}
