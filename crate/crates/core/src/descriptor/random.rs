//! Random plants built in decoupled coordinates with a prescribed slow
//! spectrum and observability pattern, then scrambled by well-conditioned
//! random transforms.

use rand::Rng;

use super::DescriptorSystem;
use crate::error::{Error, Result};
use crate::linalg::{block_diag, hstack, Mat};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PlantRecipe {
    pub n1: usize,
    pub n2: usize,
    pub m: usize,
    pub p: usize,
    /// Unknown-input columns; zero for a plant without `F`.
    pub q: usize,
    /// Number of slow modes with `|λ| > 1`.
    pub unstable: usize,
    /// Hide the first unstable mode from the output.
    pub hidden: bool,
    /// With `q > 0`, `false` routes `F` into an unobservable stable mode so
    /// that the matching rank test fails.
    pub matching: bool,
}

impl PlantRecipe {
    pub fn n(&self) -> usize {
        self.n1 + self.n2
    }

    fn validate(&self) -> Result<()> {
        if self.n() == 0 || self.m == 0 || self.p == 0 {
            return Err(Error::invalid("plant recipe needs n, m, p ≥ 1"));
        }
        if self.unstable > self.n1 || (self.hidden && self.unstable == 0) {
            return Err(Error::invalid(
                "recipe asks for more unstable modes than the slow part holds",
            ));
        }
        if self.q > 0 && !self.matching && self.unstable >= self.n1 {
            return Err(Error::invalid(
                "a matching violation needs one stable slow mode",
            ));
        }
        Ok(())
    }
}

pub fn uniform_matrix(rng: &mut impl Rng, rows: usize, cols: usize, lo: f64, hi: f64) -> Mat {
    Mat::from_fn(rows, cols, |_, _| rng.random_range(lo..hi))
}

/// `Q1·diag(σ)·Q2` with orthogonal `Q1`, `Q2` and `σ ∈ [0.5, 2]`.
pub fn well_conditioned(rng: &mut impl Rng, n: usize) -> Mat {
    let q1 = uniform_matrix(rng, n, n, -1.0, 1.0).qr().q();
    let q2 = uniform_matrix(rng, n, n, -1.0, 1.0).qr().q();
    let sigma = Mat::from_diagonal(&nalgebra::DVector::from_fn(n, |_, _| {
        rng.random_range(0.5..2.0)
    }));
    q1 * sigma * q2
}

/// Real slow eigenvalues: `unstable` of them with `|λ| ∈ [1.1, 1.35]`, the rest
/// with `|λ| ∈ [0.05, 0.9]`, pairwise at least 0.05 apart.
fn slow_poles(rng: &mut impl Rng, n1: usize, unstable: usize) -> Vec<f64> {
    let mut poles: Vec<f64> = Vec::with_capacity(n1);
    while poles.len() < n1 {
        let (lo, hi) = if poles.len() < unstable {
            (1.1, 1.35)
        } else {
            (0.05, 0.9)
        };
        let sign = if rng.random_bool(0.5) { 1.0 } else { -1.0 };
        let cand = sign * rng.random_range(lo..hi);
        if poles.iter().all(|p| (p - cand).abs() > 0.05) {
            poles.push(cand);
        }
    }
    poles
}

/// Nilpotent `n2 × n2` made of Jordan chains, at most `max_chains` of them.
fn nilpotent(rng: &mut impl Rng, n2: usize, max_chains: usize) -> Mat {
    let mut r = Mat::zeros(n2, n2);
    if n2 == 0 {
        return r;
    }
    let chains = rng.random_range(1..=n2.min(max_chains).max(1));
    // chain boundaries: n2 − chains positions carry a superdiagonal one
    let mut links: Vec<usize> = (0..n2 - 1).collect();
    for i in (1..links.len()).rev() {
        links.swap(i, rng.random_range(0..=i));
    }
    for &i in links.iter().take(n2 - chains) {
        r[(i, i + 1)] = 1.0;
    }
    r
}

/// Plant in decoupled coordinates before scrambling.
fn canonical(recipe: &PlantRecipe, rng: &mut impl Rng) -> (Mat, Mat, Mat, Mat, Option<Mat>) {
    let &PlantRecipe {
        n1,
        n2,
        m,
        p,
        q,
        unstable,
        hidden,
        matching,
    } = recipe;
    let poles = slow_poles(rng, n1, unstable);
    let t1 = well_conditioned(rng, n1);
    let t1_inv = t1.clone().try_inverse().expect("well-conditioned");
    let a1 = &t1 * Mat::from_diagonal(&nalgebra::DVector::from_vec(poles)) * &t1_inv;
    let mut c1_modal = uniform_matrix(rng, p, n1, -1.0, 1.0);
    if hidden {
        c1_modal.column_mut(0).fill(0.0);
    }
    let hidden_stable = (q > 0 && !matching).then_some(unstable);
    if let Some(j) = hidden_stable {
        c1_modal.column_mut(j).fill(0.0);
    }
    let c1 = c1_modal * &t1_inv;

    let r0 = nilpotent(rng, n2, p);
    let t2 = well_conditioned(rng, n2);
    let r = &t2 * r0 * t2.clone().try_inverse().expect("well-conditioned");
    let c2 = uniform_matrix(rng, p, n2, -1.0, 1.0);

    let b = uniform_matrix(rng, n1 + n2, m, -1.0, 1.0);
    let c = hstack(&[&c1, &c2]).expect("rows match");
    let f = (q > 0).then(|| {
        let mut f = uniform_matrix(rng, n1 + n2, q, -1.0, 1.0);
        if let Some(j) = hidden_stable {
            let dir = t1.column(j).into_owned();
            f.view_mut((0, 0), (n1, 1)).copy_from(&dir);
            f.view_mut((n1, 0), (n2, 1)).fill(0.0);
        }
        f
    });
    (a1, r, b, c, f)
}

/// A plant following `recipe`. Retries internally until the result is
/// dual normalizable and `F` has full column rank.
pub fn random_plant(recipe: &PlantRecipe, rng: &mut impl Rng) -> Result<DescriptorSystem> {
    recipe.validate()?;
    let n2 = recipe.n2;
    let n = recipe.n();
    for _ in 0..32 {
        let (a1, r, b, c, f) = canonical(recipe, rng);
        let e_w = block_diag(&Mat::identity(recipe.n1, recipe.n1), &r);
        let a_w = block_diag(&a1, &Mat::identity(n2, n2));
        let s = well_conditioned(rng, n);
        let p = well_conditioned(rng, n);
        let s_inv = s.try_inverse().expect("well-conditioned");
        let p_inv = p.try_inverse().expect("well-conditioned");
        let sys = DescriptorSystem::new(
            &s_inv * e_w * &p_inv,
            &s_inv * a_w * &p_inv,
            &s_inv * b,
            c * &p_inv,
            f.map(|f| &s_inv * f),
        );
        let Ok(sys) = sys else { continue };
        if sys.dual_normalizability(&Default::default()) {
            return Ok(sys);
        }
    }
    Err(Error::invalid(
        "could not draw a dual-normalizable plant for this recipe",
    ))
}

/// A random stable, observable `E = I` plant.
pub fn random_state_space(
    rng: &mut impl Rng,
    n: usize,
    m: usize,
    p: usize,
) -> Result<DescriptorSystem> {
    random_plant(
        &PlantRecipe {
            n1: n,
            n2: 0,
            m,
            p,
            q: 0,
            unstable: 0,
            hidden: false,
            matching: true,
        },
        rng,
    )
}
