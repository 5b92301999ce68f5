//! Running a synthesized observer, either in the look-ahead form that uses
//! `y(k+1)` or in the equivalent causal realization.

use std::path::Path;

use crate::error::{Error, Result};
use crate::linalg::Vector;
use crate::synthesis::ObserverGains;

/// `A_O·x̂ + B_O^u·u + B_O^y·y + N_O·y⁺`.
pub fn step_noncausal(
    g: &ObserverGains,
    xhat: &Vector,
    u: &Vector,
    y: &Vector,
    y_next: &Vector,
) -> Vector {
    &g.a_o * xhat + &g.b_o_u * u + &g.b_o_y * y + &g.n_o * y_next
}

/// `ζ⁺ = A_O·ζ + B_O^u·u + (B_O^y + A_O·N_O)·y`, `x̂ = ζ + N_O·y`.
pub fn step_causal(g: &ObserverGains, zeta: &Vector, u: &Vector, y: &Vector) -> (Vector, Vector) {
    let xhat = zeta + &g.n_o * y;
    let zeta_next = &g.a_o * zeta + &g.b_o_u * u + (&g.b_o_y + &g.a_o * &g.n_o) * y;
    (zeta_next, xhat)
}

#[derive(Debug, Clone, PartialEq)]
pub struct ObserverState {
    pub xhat: Vector,
    pub zeta: Vector,
    pub k: usize,
}

/// Pull-based causal driver: feed `(u(k), y(k))`, get `x̂(k)`.
#[derive(Debug, Clone)]
pub struct Stepper<'a> {
    gains: &'a ObserverGains,
    state: ObserverState,
    started: bool,
}

impl<'a> Stepper<'a> {
    /// `ζ(0)` is fixed on the first sample as `x̂(0) − N_O·y(0)`.
    pub fn new(gains: &'a ObserverGains, xhat0: Vector) -> Self {
        let zeta = Vector::zeros(gains.n());
        Self {
            gains,
            state: ObserverState {
                xhat: xhat0,
                zeta,
                k: 0,
            },
            started: false,
        }
    }

    pub fn state(&self) -> &ObserverState {
        &self.state
    }

    pub fn push(&mut self, u: &Vector, y: &Vector) -> Vector {
        if !self.started {
            self.state.zeta = &self.state.xhat - &self.gains.n_o * y;
            self.started = true;
        }
        let (zeta_next, xhat) = step_causal(self.gains, &self.state.zeta, u, y);
        self.state.xhat = xhat.clone();
        self.state.zeta = zeta_next;
        self.state.k += 1;
        xhat
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Driver {
    NonCausal,
    Causal,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EstimationRun {
    pub xhat: Vec<Vector>,
    /// `x(k)` when ground truth was supplied.
    pub x: Option<Vec<Vector>>,
    pub err: Vec<f64>,
    /// `‖e(k+1) − A_O·e(k)‖` per step.
    pub recursion_steps: Vec<f64>,
    pub recursion_residual: f64,
}

impl EstimationRun {
    /// Error vectors `x(k) − x̂(k)`.
    pub fn errors(&self) -> Option<Vec<Vector>> {
        self.x
            .as_ref()
            .map(|x| x.iter().zip(&self.xhat).map(|(x, h)| x - h).collect())
    }

    /// Columns `k, x_*, xhat_*, err_norm, recursion_residual_step`.
    pub fn write_csv(&self, path: impl AsRef<Path>) -> Result<()> {
        let n = self.xhat.first().map_or(0, |v| v.len());
        let mut w = csv::WriterBuilder::new()
            .has_headers(false)
            .from_path(path)?;
        let mut header = vec!["k".to_string()];
        header.extend((0..n).map(|i| format!("x_{i}")));
        header.extend((0..n).map(|i| format!("xhat_{i}")));
        header.push("err_norm".into());
        header.push("recursion_residual_step".into());
        w.write_record(&header)?;
        for (k, xhat) in self.xhat.iter().enumerate() {
            let mut row = vec![k.to_string()];
            match self.x.as_ref().and_then(|x| x.get(k)) {
                Some(x) => row.extend(x.iter().map(|v| v.to_string())),
                None => row.extend(std::iter::repeat_n(String::new(), n)),
            }
            row.extend(xhat.iter().map(|v| v.to_string()));
            row.push(self.err.get(k).map_or(String::new(), |v| v.to_string()));
            row.push(
                self.recursion_steps
                    .get(k)
                    .map_or(String::new(), |v| v.to_string()),
            );
            w.write_record(&row)?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Estimates `x̂(0..=steps)` where `steps = y.len() − 1`; needs `u[..steps]`.
pub fn run(
    g: &ObserverGains,
    u: &[Vector],
    y: &[Vector],
    xhat0: &Vector,
    x_truth: Option<&[Vector]>,
    driver: Driver,
) -> Result<EstimationRun> {
    if y.is_empty() {
        return Err(Error::Length {
            what: "output y",
            needed: 1,
            got: 0,
        });
    }
    let steps = y.len() - 1;
    if u.len() < steps {
        return Err(Error::Length {
            what: "input u",
            needed: steps,
            got: u.len(),
        });
    }
    if xhat0.len() != g.n()
        || u[..steps].iter().any(|v| v.len() != g.m())
        || y.iter().any(|v| v.len() != g.p())
    {
        return Err(Error::dim("signals do not match the observer gains"));
    }
    if let Some(x) = x_truth {
        if x.len() < steps + 1 || x.iter().take(steps + 1).any(|v| v.len() != g.n()) {
            return Err(Error::Length {
                what: "true state x",
                needed: steps + 1,
                got: x.len(),
            });
        }
    }
    let mut xhat = Vec::with_capacity(steps + 1);
    match driver {
        Driver::NonCausal => {
            let mut cur = xhat0.clone();
            for k in 0..steps {
                let next = step_noncausal(g, &cur, &u[k], &y[k], &y[k + 1]);
                xhat.push(std::mem::replace(&mut cur, next));
            }
            xhat.push(cur);
        }
        Driver::Causal => {
            let mut stepper = Stepper::new(g, xhat0.clone());
            let zero = Vector::zeros(g.m());
            for k in 0..=steps {
                // the last input only feeds ζ(steps+1), which is discarded
                let uk = if k < steps { &u[k] } else { &zero };
                xhat.push(stepper.push(uk, &y[k]));
            }
        }
    }
    let x = x_truth.map(|x| x[..=steps].to_vec());
    let (err, recursion_steps) = match &x {
        Some(x) => {
            let e: Vec<Vector> = x.iter().zip(&xhat).map(|(x, h)| x - h).collect();
            let err = e.iter().map(|e| e.norm()).collect();
            let rec = e
                .windows(2)
                .map(|w| (&w[1] - &g.a_o * &w[0]).norm())
                .collect();
            (err, rec)
        }
        None => (Vec::new(), Vec::new()),
    };
    let recursion_residual = recursion_steps.iter().copied().fold(0.0, f64::max);
    Ok(EstimationRun {
        xhat,
        x,
        err,
        recursion_steps,
        recursion_residual,
    })
}
