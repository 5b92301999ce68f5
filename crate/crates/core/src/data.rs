//! Recorded experiments, the stacked data matrices built from them, and the
//! rank tests that decide whether the data are informative enough.

use std::path::Path;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::descriptor::{
    simulate, simulate_lti, DescriptorSystem, LtiSystem, PlantModel, WeierstrassForm,
};
use crate::error::{Error, Result};
use crate::linalg::{numerical_rank, vstack, Mat, Tolerances, Vector};

/// Signal generator for inputs, unknown inputs, and disturbances.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum SignalLaw {
    /// i.i.d. entries drawn from `[lo, hi)`.
    Uniform {
        lo: f64,
        hi: f64,
    },
    /// `amplitude·sin(k)` in every channel.
    Sinusoid {
        amplitude: f64,
    },
    Constant {
        value: f64,
    },
}

impl SignalLaw {
    pub fn validate(&self) -> Result<()> {
        match *self {
            SignalLaw::Uniform { lo, hi } if !(lo.is_finite() && hi.is_finite() && lo < hi) => {
                Err(Error::invalid(format!(
                    "uniform law needs finite lo < hi, got ({lo}, {hi})"
                )))
            }
            SignalLaw::Sinusoid { amplitude: v } | SignalLaw::Constant { value: v }
                if !v.is_finite() =>
            {
                Err(Error::invalid("signal law parameter must be finite"))
            }
            _ => Ok(()),
        }
    }

    pub fn sample(&self, rng: &mut impl Rng, len: usize, dim: usize) -> Vec<Vector> {
        (0..len)
            .map(|k| match *self {
                SignalLaw::Uniform { lo, hi } => {
                    Vector::from_fn(dim, |_, _| rng.random_range(lo..hi))
                }
                SignalLaw::Sinusoid { amplitude } => {
                    Vector::from_element(dim, amplitude * (k as f64).sin())
                }
                SignalLaw::Constant { value } => Vector::from_element(dim, value),
            })
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct RecordMeta {
    pub seed: u64,
    pub generator: String,
}

/// One offline experiment: `x` and `y` hold `T + 1` samples, `u` (and `eta`
/// when present) hold at least `T`.
#[derive(Debug, Clone, PartialEq)]
pub struct DataRecord {
    pub u: Vec<Vector>,
    pub x: Vec<Vector>,
    pub y: Vec<Vector>,
    pub eta: Option<Vec<Vector>>,
    pub meta: RecordMeta,
}

fn common_dim(seq: &[Vector], what: &str) -> Result<usize> {
    let d = seq.first().map_or(0, |v| v.len());
    if d == 0 || seq.iter().any(|v| v.len() != d) {
        return Err(Error::dim(format!(
            "{what} samples must be non-empty and equally sized"
        )));
    }
    Ok(d)
}

impl DataRecord {
    pub fn new(
        u: Vec<Vector>,
        x: Vec<Vector>,
        y: Vec<Vector>,
        eta: Option<Vec<Vector>>,
        meta: RecordMeta,
    ) -> Result<Self> {
        if x.len() < 2 || y.len() != x.len() {
            return Err(Error::invalid(format!(
                "record needs equally long x and y with T ≥ 1, got {} and {}",
                x.len(),
                y.len()
            )));
        }
        let t = x.len() - 1;
        if u.len() < t {
            return Err(Error::Length {
                what: "input u",
                needed: t,
                got: u.len(),
            });
        }
        common_dim(&u, "u")?;
        common_dim(&x, "x")?;
        common_dim(&y, "y")?;
        if let Some(eta) = &eta {
            if eta.len() < t {
                return Err(Error::Length {
                    what: "unknown input eta",
                    needed: t,
                    got: eta.len(),
                });
            }
            common_dim(eta, "eta")?;
        }
        Ok(Self { u, x, y, eta, meta })
    }

    /// Number of state transitions `T`.
    pub fn t(&self) -> usize {
        self.x.len() - 1
    }

    pub fn n(&self) -> usize {
        self.x[0].len()
    }

    pub fn m(&self) -> usize {
        self.u[0].len()
    }

    pub fn p(&self) -> usize {
        self.y[0].len()
    }

    pub fn q(&self) -> usize {
        self.eta.as_ref().map_or(0, |e| e[0].len())
    }

    /// The same record with state `[x; eta]` and no unknown-input channel.
    pub fn with_augmented_state(&self) -> Result<Self> {
        let eta = self.eta.as_ref().ok_or_else(|| {
            Error::MissingData("augmented-state data needs the disturbance samples".into())
        })?;
        if eta.len() < self.x.len() {
            return Err(Error::Length {
                what: "disturbance d",
                needed: self.x.len(),
                got: eta.len(),
            });
        }
        let x = self
            .x
            .iter()
            .zip(eta)
            .map(|(x, d)| {
                Vector::from_iterator(x.len() + d.len(), x.iter().chain(d.iter()).copied())
            })
            .collect();
        Self::new(self.u.clone(), x, self.y.clone(), None, self.meta.clone())
    }

    /// One row per time step; header `k,u_*,eta_*,y_*,x_*`. Rows beyond the
    /// state horizon leave the `y`/`x` cells empty.
    pub fn write_csv(&self, path: impl AsRef<Path>) -> Result<()> {
        let mut w = csv::Writer::from_path(path)?;
        let mut header = vec!["k".to_string()];
        header.extend((0..self.m()).map(|i| format!("u_{i}")));
        header.extend((0..self.q()).map(|i| format!("eta_{i}")));
        header.extend((0..self.p()).map(|i| format!("y_{i}")));
        header.extend((0..self.n()).map(|i| format!("x_{i}")));
        w.write_record(&header)?;
        let rows = self
            .u
            .len()
            .max(self.x.len())
            .max(self.eta.as_ref().map_or(0, |e| e.len()));
        let cells =
            |seq: Option<&Vec<Vector>>, k: usize, dim: usize, row: &mut Vec<String>| match seq
                .and_then(|s| s.get(k))
            {
                Some(v) => row.extend(v.iter().map(|x| x.to_string())),
                None => row.extend(std::iter::repeat_n(String::new(), dim)),
            };
        for k in 0..rows {
            let mut row = vec![k.to_string()];
            cells(Some(&self.u), k, self.m(), &mut row);
            cells(self.eta.as_ref(), k, self.q(), &mut row);
            cells(Some(&self.y), k, self.p(), &mut row);
            cells(Some(&self.x), k, self.n(), &mut row);
            w.write_record(&row)?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn read_csv(path: impl AsRef<Path>) -> Result<Self> {
        let mut r = csv::Reader::from_path(path)?;
        let header = r.headers()?.clone();
        let group = |prefix: &str| -> Vec<usize> {
            header
                .iter()
                .enumerate()
                .filter(|(_, h)| {
                    h.strip_prefix(prefix)
                        .is_some_and(|rest| rest.parse::<usize>().is_ok())
                })
                .map(|(i, _)| i)
                .collect()
        };
        let (iu, ie, iy, ix) = (group("u_"), group("eta_"), group("y_"), group("x_"));
        if iu.is_empty() || iy.is_empty() || ix.is_empty() {
            return Err(Error::Parse(
                "dataset header needs u_*, y_* and x_* columns".into(),
            ));
        }
        let mut u = Vec::new();
        let mut eta = Vec::new();
        let mut y = Vec::new();
        let mut x = Vec::new();
        for (line, row) in r.records().enumerate() {
            let row = row?;
            let pick = |cols: &[usize]| -> Result<Option<Vector>> {
                let raw: Vec<&str> = cols
                    .iter()
                    .map(|&c| row.get(c).unwrap_or("").trim())
                    .collect();
                if raw.iter().all(|s| s.is_empty()) {
                    return Ok(None);
                }
                let vals = raw
                    .iter()
                    .map(|s| {
                        s.parse::<f64>()
                            .map_err(|e| Error::Parse(format!("row {line}: {s:?}: {e}")))
                    })
                    .collect::<Result<Vec<_>>>()?;
                Ok(Some(Vector::from_vec(vals)))
            };
            if let Some(v) = pick(&iu)? {
                u.push(v);
            }
            if !ie.is_empty() {
                if let Some(v) = pick(&ie)? {
                    eta.push(v);
                }
            }
            if let Some(v) = pick(&iy)? {
                y.push(v);
            }
            if let Some(v) = pick(&ix)? {
                x.push(v);
            }
        }
        let eta = (!ie.is_empty()).then_some(eta);
        Self::new(u, x, y, eta, RecordMeta::default())
            .map_err(|e| Error::Parse(format!("dataset: {e}")))
    }
}

/// Sidecar document stored next to a dataset.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetMeta {
    #[serde(rename = "T")]
    pub t: usize,
    pub seed: u64,
    pub generator: String,
    pub system: PlantModel,
}

impl DatasetMeta {
    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        serde_json::from_str(&std::fs::read_to_string(path)?)
            .map_err(|e| Error::Parse(format!("meta: {e}")))
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        std::fs::write(path, serde_json::to_string_pretty(self)? + "\n")?;
        Ok(())
    }
}

/// How an experiment on a descriptor plant is excited.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Excitation {
    pub t: usize,
    pub input: SignalLaw,
    pub unknown_input: Option<SignalLaw>,
    /// `z1(0)` entries are drawn uniformly from this interval.
    pub initial: (f64, f64),
}

/// Input horizon `T + n`: `s` is unknown from data, and `s ≤ n`.
pub fn padded_input_len(t: usize, n: usize) -> usize {
    t + n
}

/// Draw inputs (then unknown inputs, then `z1(0)`) and simulate the plant.
pub fn collect_descriptor(
    sys: &DescriptorSystem,
    wf: &WeierstrassForm,
    ex: &Excitation,
    rng: &mut impl Rng,
    meta: RecordMeta,
) -> Result<DataRecord> {
    let len = padded_input_len(ex.t, sys.n());
    let u = ex.input.sample(rng, len, sys.m());
    let eta = match (ex.unknown_input, sys.q()) {
        (Some(law), q) if q > 0 => Some(law.sample(rng, len, q)),
        (Some(_), _) => {
            return Err(Error::MissingData(
                "unknown-input law given for a plant without F".into(),
            ))
        }
        (None, _) => None,
    };
    let z1 = uniform_vector(rng, wf.n1, ex.initial);
    let traj = simulate(sys, wf, &z1, &u, eta.as_deref(), ex.t)?;
    DataRecord::new(u, traj.x, traj.y, eta, meta)
}

/// As [`collect_descriptor`] for an ESO experiment; `d` is stored as the
/// record's unknown input.
pub fn collect_lti(
    sys: &LtiSystem,
    t: usize,
    input: SignalLaw,
    disturbance: SignalLaw,
    initial: (f64, f64),
    rng: &mut impl Rng,
    meta: RecordMeta,
) -> Result<DataRecord> {
    let len = padded_input_len(t, sys.n());
    let u = input.sample(rng, len, sys.m());
    let d = disturbance.sample(rng, len, sys.r());
    let x0 = uniform_vector(rng, sys.n(), initial);
    let traj = simulate_lti(sys, &x0, &u, &d, t)?;
    DataRecord::new(u, traj.x, traj.y, Some(d), meta)
}

/// Entries i.i.d. uniform on `[lo, hi)`; a degenerate interval gives `lo`.
pub fn uniform_vector(rng: &mut impl Rng, dim: usize, (lo, hi): (f64, f64)) -> Vector {
    Vector::from_fn(dim, |_, _| {
        if lo < hi {
            rng.random_range(lo..hi)
        } else {
            lo
        }
    })
}

/// Block-Hankel matrix of depth `depth`: column `j` stacks `f(j), …, f(j+depth−1)`.
pub fn hankel(f: &[Vector], depth: usize) -> Result<Mat> {
    if depth == 0 || f.len() < depth {
        return Err(Error::invalid(format!(
            "hankel needs 1 ≤ depth ≤ {}, got {depth}",
            f.len()
        )));
    }
    let dim = common_dim(f, "hankel")?;
    let cols = f.len() - depth + 1;
    Ok(Mat::from_fn(depth * dim, cols, |i, j| {
        f[j + i / dim][i % dim]
    }))
}

#[derive(Debug, Clone, PartialEq)]
pub struct DataMatrices {
    pub up: Mat,
    pub yp: Mat,
    pub yf: Mat,
    pub xp: Mat,
    pub xf: Mat,
}

fn columns(seq: &[Vector]) -> Mat {
    Mat::from_columns(seq)
}

impl DataMatrices {
    /// Column `k` holds `x(k), x(k+1), u(k), y(k), y(k+1)`. Unknown inputs never
    /// enter.
    pub fn from_record(rec: &DataRecord) -> Self {
        let t = rec.t();
        Self {
            up: columns(&rec.u[..t]),
            yp: columns(&rec.y[..t]),
            yf: columns(&rec.y[1..=t]),
            xp: columns(&rec.x[..t]),
            xf: columns(&rec.x[1..=t]),
        }
    }

    pub fn t(&self) -> usize {
        self.xp.ncols()
    }

    pub fn n(&self) -> usize {
        self.xp.nrows()
    }

    pub fn m(&self) -> usize {
        self.up.nrows()
    }

    pub fn p(&self) -> usize {
        self.yp.nrows()
    }

    /// `[Xp; Up; Yp; Yf]`.
    pub fn stacked(&self) -> Mat {
        vstack(&[&self.xp, &self.up, &self.yp, &self.yf]).expect("equal column counts")
    }

    /// `[Xp; Xf; Up; Yp; Yf]`.
    pub fn full_stack(&self) -> Mat {
        vstack(&[&self.xp, &self.xf, &self.up, &self.yp, &self.yf]).expect("equal column counts")
    }

    /// `rk[Xp; Up; Yf]`.
    pub fn informativity_rank(&self, tol: &Tolerances) -> usize {
        let m = vstack(&[&self.xp, &self.up, &self.yf]).expect("equal column counts");
        numerical_rank(&m, tol).expect("data are finite")
    }

    /// Recover `(u, x, y)` given the input samples past the state horizon.
    pub fn reconstruct(&self, u_tail: &[Vector]) -> (Vec<Vector>, Vec<Vector>, Vec<Vector>) {
        let cols = |m: &Mat| {
            (0..m.ncols())
                .map(|j| m.column(j).into_owned())
                .collect::<Vec<_>>()
        };
        let mut u = cols(&self.up);
        u.extend_from_slice(u_tail);
        let mut x = cols(&self.xp);
        x.push(self.xf.column(self.t() - 1).into_owned());
        let mut y = cols(&self.yp);
        y.push(self.yf.column(self.t() - 1).into_owned());
        (u, x, y)
    }
}

pub fn build_data_matrices(rec: &DataRecord) -> DataMatrices {
    DataMatrices::from_record(rec)
}

/// Model-aided richness test: `[H1(z1_d); H_{s+1}(u_d)]` (or with `[u_d; η_d]`
/// when `with_unknown`) has full row rank.
pub fn pe_assumption_check(
    rec: &DataRecord,
    wf: &WeierstrassForm,
    with_unknown: bool,
    tol: &Tolerances,
) -> Result<bool> {
    let t = rec.t();
    let depth = wf.nilpotency + 1;
    let inputs: Vec<Vector> = if with_unknown {
        let eta = rec
            .eta
            .as_ref()
            .ok_or_else(|| Error::MissingData("record has no unknown-input samples".into()))?;
        rec.u
            .iter()
            .zip(eta)
            .map(|(u, e)| {
                Vector::from_iterator(u.len() + e.len(), u.iter().chain(e.iter()).copied())
            })
            .collect()
    } else {
        rec.u.clone()
    };
    let needed = t + wf.nilpotency;
    if inputs.len() < needed {
        return Err(Error::Length {
            what: "input u",
            needed,
            got: inputs.len(),
        });
    }
    let h_u = hankel(&inputs[..needed], depth)?;
    let z1: Vec<Vector> = rec.x[..t].iter().map(|x| wf.slow_state(x)).collect();
    let h_z = Mat::from_fn(wf.n1, t, |i, j| z1[j][i]);
    let stacked = vstack(&[&h_z, &h_u])?;
    Ok(numerical_rank(&stacked, tol)? == stacked.nrows())
}

/// Richness of an ESO record: the latent window `[x(k); d(k); u(k); d(k+1)]`
/// over the `T` columns has full row rank `n + 2r + m`.
pub fn pe_lti_check(rec: &DataRecord, tol: &Tolerances) -> Result<bool> {
    let t = rec.t();
    let d = rec
        .eta
        .as_ref()
        .ok_or_else(|| Error::MissingData("ESO record needs the disturbance samples".into()))?;
    if d.len() < t + 1 {
        return Err(Error::Length {
            what: "disturbance d",
            needed: t + 1,
            got: d.len(),
        });
    }
    let latent = vstack(&[
        &columns(&rec.x[..t]),
        &columns(&d[..t]),
        &columns(&rec.u[..t]),
        &columns(&d[1..=t]),
    ])?;
    Ok(numerical_rank(&latent, tol)? == latent.nrows())
}

/// `H_L(u)` has full row rank.
pub fn input_pe_order(u: &[Vector], order: usize, tol: &Tolerances) -> Result<bool> {
    let h = hankel(u, order)?;
    Ok(numerical_rank(&h, tol)? == h.nrows())
}

/// `rk[Xp; Up; Yf] = n + m`.
pub fn informativity_test(dm: &DataMatrices, m: usize, n: usize, tol: &Tolerances) -> bool {
    dm.informativity_rank(tol) == n + m
}

/// `rk[Xp; Up; Yf] = n + m + q`.
pub fn uio_informativity_test(
    dm: &DataMatrices,
    m: usize,
    n: usize,
    q: usize,
    tol: &Tolerances,
) -> bool {
    if q == 0 {
        return informativity_test(dm, m, n, tol);
    }
    dm.informativity_rank(tol) == n + m + q
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn tol() -> Tolerances {
        Tolerances::default()
    }

    fn scalars(v: &[f64]) -> Vec<Vector> {
        v.iter().map(|&x| Vector::from_element(1, x)).collect()
    }

    fn example(with_f: bool) -> DescriptorSystem {
        DescriptorSystem::new(
            Mat::from_row_slice(3, 3, &[1.0, 2.0, 1.0, 0.0, 2.0, 1.0, 1.0, 0.0, 0.0]),
            Mat::from_row_slice(
                3,
                3,
                &[
                    0.153, 0.045, 0.069, 0.156, 0.252, 0.156, 0.135, -0.171, -0.636,
                ],
            ),
            Mat::from_row_slice(3, 1, &[1.0, 1.0, 0.2]),
            Mat::from_row_slice(2, 3, &[1.0, 0.0, 0.0, 1.0, 0.0, 1.0]),
            with_f.then(|| Mat::from_row_slice(3, 1, &[1.0, 0.2, 0.5])),
        )
        .unwrap()
    }

    fn record(
        with_f: bool,
        seed: u64,
        t: usize,
        eta_law: Option<SignalLaw>,
    ) -> (DescriptorSystem, WeierstrassForm, DataRecord) {
        let sys = example(with_f);
        let wf = sys.weierstrass(&tol()).unwrap();
        let ex = Excitation {
            t,
            input: SignalLaw::Uniform { lo: -5.0, hi: 5.0 },
            unknown_input: eta_law,
            initial: (0.0, 2.0),
        };
        let rec = collect_descriptor(
            &sys,
            &wf,
            &ex,
            &mut ChaCha8Rng::seed_from_u64(seed),
            RecordMeta::default(),
        )
        .unwrap();
        (sys, wf, rec)
    }

    #[test]
    fn hankel_definition() {
        let f = scalars(&[1.0, 2.0, 3.0, 4.0]);
        assert_eq!(
            hankel(&f, 2).unwrap(),
            Mat::from_row_slice(2, 3, &[1.0, 2.0, 3.0, 2.0, 3.0, 4.0])
        );
        assert_eq!(
            hankel(&f, 1).unwrap(),
            Mat::from_row_slice(1, 4, &[1.0, 2.0, 3.0, 4.0])
        );
        assert_eq!(
            hankel(&f, 4).unwrap(),
            Mat::from_column_slice(4, 1, &[1.0, 2.0, 3.0, 4.0])
        );
        assert!(hankel(&f, 5).is_err());
        let v = vec![
            Vector::from_vec(vec![1.0, 10.0]),
            Vector::from_vec(vec![2.0, 20.0]),
            Vector::from_vec(vec![3.0, 30.0]),
        ];
        assert_eq!(
            hankel(&v, 2).unwrap(),
            Mat::from_row_slice(4, 2, &[1.0, 2.0, 10.0, 20.0, 2.0, 3.0, 20.0, 30.0])
        );
    }

    #[test]
    fn input_pe_cases() {
        let c = scalars(&[1.0; 6]);
        assert!(input_pe_order(&c, 1, &tol()).unwrap());
        assert!(!input_pe_order(&c, 2, &tol()).unwrap());
        assert!(!input_pe_order(&scalars(&[0.0; 6]), 1, &tol()).unwrap());
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let u = SignalLaw::Uniform { lo: -1.0, hi: 1.0 }.sample(&mut rng, 30, 2);
        assert!(input_pe_order(&u, 4, &tol()).unwrap());
    }

    #[test]
    fn data_matrices_layout() {
        let (_, _, rec) = record(false, 1, 20, None);
        assert_eq!((rec.x.len(), rec.u.len()), (21, 23));
        let dm = DataMatrices::from_record(&rec);
        assert_eq!(dm.t(), 20);
        for k in 0..20 {
            assert_eq!(dm.xp.column(k), rec.x[k].column(0));
            assert_eq!(dm.xf.column(k), rec.x[k + 1].column(0));
            assert_eq!(dm.up.column(k), rec.u[k].column(0));
            assert_eq!(dm.yp.column(k), rec.y[k].column(0));
            assert_eq!(dm.yf.column(k), rec.y[k + 1].column(0));
        }
        assert_eq!(dm.yf.columns(0, 19), dm.yp.columns(1, 19));
        let (u, x, y) = dm.reconstruct(&rec.u[20..]);
        assert_eq!((u, x, y), (rec.u.clone(), rec.x.clone(), rec.y.clone()));

        let one = DataRecord::new(
            rec.u[..1].to_vec(),
            rec.x[..2].to_vec(),
            rec.y[..2].to_vec(),
            None,
            RecordMeta::default(),
        )
        .unwrap();
        assert_eq!(DataMatrices::from_record(&one).t(), 1);
    }

    #[test]
    fn unknown_inputs_never_enter_the_blocks() {
        let (_, _, rec) = record(true, 4, 20, Some(SignalLaw::Uniform { lo: -5.0, hi: 5.0 }));
        let mut stripped = rec.clone();
        stripped.eta = None;
        assert_eq!(
            DataMatrices::from_record(&rec),
            DataMatrices::from_record(&stripped)
        );
    }

    #[test]
    fn pe_assumption_example1() {
        let mut passed = 0;
        for seed in 0..20 {
            let (_, wf, rec) = record(false, seed, 20, None);
            passed += usize::from(pe_assumption_check(&rec, &wf, false, &tol()).unwrap());
        }
        assert!(passed >= 19);
        // fewer columns than rows
        let (_, wf, rec) = record(false, 0, 3, None);
        assert!(!pe_assumption_check(&rec, &wf, false, &tol()).unwrap());
        // zero input
        let sys = example(false);
        let ex = Excitation {
            t: 20,
            input: SignalLaw::Constant { value: 0.0 },
            unknown_input: None,
            initial: (0.0, 2.0),
        };
        let rec = collect_descriptor(
            &sys,
            &wf,
            &ex,
            &mut ChaCha8Rng::seed_from_u64(0),
            RecordMeta::default(),
        )
        .unwrap();
        assert!(!pe_assumption_check(&rec, &wf, false, &tol()).unwrap());
        assert!(matches!(
            pe_assumption_check(&rec, &wf, true, &tol()),
            Err(Error::MissingData(_))
        ));
    }

    #[test]
    fn informativity_ranks() {
        let (_, _, rec) = record(false, 7, 20, None);
        let dm = DataMatrices::from_record(&rec);
        assert_eq!(dm.informativity_rank(&tol()), 4);
        assert!(informativity_test(&dm, 1, 3, &tol()));
        assert!(uio_informativity_test(&dm, 1, 3, 0, &tol()));

        let (_, _, rec) = record(true, 7, 20, Some(SignalLaw::Uniform { lo: -5.0, hi: 5.0 }));
        let dm = DataMatrices::from_record(&rec);
        assert_eq!(dm.informativity_rank(&tol()), 5);
        assert!(uio_informativity_test(&dm, 1, 3, 1, &tol()));

        let (_, _, rec) = record(true, 7, 20, Some(SignalLaw::Constant { value: 0.0 }));
        let dm = DataMatrices::from_record(&rec);
        assert!(!uio_informativity_test(&dm, 1, 3, 1, &tol()));
        assert!(informativity_test(&dm, 1, 3, &tol()));

        let zero = DataMatrices {
            up: Mat::zeros(1, 5),
            yp: Mat::zeros(2, 5),
            yf: Mat::zeros(2, 5),
            xp: Mat::zeros(3, 5),
            xf: Mat::zeros(3, 5),
        };
        assert!(!informativity_test(&zero, 1, 3, &tol()));
    }

    #[test]
    fn csv_roundtrip_with_padding_rows() {
        let (_, _, rec) = record(true, 3, 20, Some(SignalLaw::Uniform { lo: -5.0, hi: 5.0 }));
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("dataset.csv");
        rec.write_csv(&path).unwrap();
        let text = std::fs::read_to_string(&path).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], "k,u_0,eta_0,y_0,y_1,x_0,x_1,x_2");
        assert_eq!(lines.len(), 1 + 23);
        assert!(lines[23].ends_with(",,,,,"));
        let back = DataRecord::read_csv(&path).unwrap();
        assert_eq!(
            (back.u, back.x, back.y, back.eta),
            (rec.u, rec.x, rec.y, rec.eta)
        );
    }

    #[test]
    fn malformed_csv_is_a_parse_error() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("bad.csv");
        std::fs::write(&path, "k,u_0,y_0,x_0\n0,1,abc,2\n").unwrap();
        assert!(matches!(DataRecord::read_csv(&path), Err(Error::Parse(_))));
        std::fs::write(&path, "k,a,b\n0,1,2\n").unwrap();
        assert!(matches!(DataRecord::read_csv(&path), Err(Error::Parse(_))));
    }
}
