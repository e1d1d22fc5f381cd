//! The oscillator coupled linearly to a finite set of harmonic modes, whose
//! Drude spectral strength approaches f(w) as the number of modes grows.
//! The total Hamiltonian is quadratic, so the Gaussian state of system and
//! reservoir is propagated exactly.
//!
//! Oscillator units throughout (hbar = m = omega = 1); reservoir masses equal
//! the system mass.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::mat2::Sym2;
use crate::params::{check_time, PhysParams};
use crate::phase_space::GaussianState;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Discretization {
    /// Bins of equal weight of f(w)/w on [0, w_max]: edges alpha tan(theta)
    /// with theta uniform, each mode at the bin's midpoint in theta.
    #[default]
    EqualWeight,
    /// Equal-width bins on [0, w_max].
    Linear,
    /// [0, w_0] followed by geometric bins from w_0 = 1e-4 w_max to w_max.
    Log,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BathOptions {
    pub scheme: Discretization,
    /// w_max = cutoff_factor * alpha. `None` keeps the whole spectrum and
    /// is only available with equal-weight bins.
    pub cutoff_factor: Option<f64>,
    /// Add sum_n eps_n^2 q^2 / 2 w_n^2 to the system potential, so the
    /// renormalized frequency is omega.
    pub counterterm: bool,
}

impl Default for BathOptions {
    fn default() -> Self {
        Self { scheme: Discretization::EqualWeight, cutoff_factor: None, counterterm: true }
    }
}

const LOG_FIRST_EDGE: f64 = 1e-4;

/// Discretized reservoir. Modes couple through eps_n q x_n.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ReservoirModel {
    pub frequencies: Vec<f64>,
    pub couplings: Vec<f64>,
    /// Bin edges; bin n is [edges[n], edges[n+1]].
    pub edges: Vec<f64>,
    pub kt: f64,
    pub counterterm: bool,
    pub scheme: Discretization,
}

impl ReservoirModel {
    /// Couplings from the weight of f(w)/w in each bin:
    /// eps_n^2 / w_n^2 = (2/pi) kappa alpha [atan(b/alpha) - atan(a/alpha)].
    pub fn new(p: &PhysParams, n_modes: usize, opts: &BathOptions) -> Result<Self> {
        p.validate()?;
        if n_modes < 2 {
            return Err(Error::InvalidParams(format!("need at least 2 reservoir modes, got {n_modes}")));
        }
        let w_max = match (opts.cutoff_factor, opts.scheme) {
            (Some(c), _) if c > 0.0 && c.is_finite() => c * p.dimensionless().alpha,
            (None, Discretization::EqualWeight) => f64::INFINITY,
            (c, scheme) => {
                return Err(Error::InvalidParams(format!("cutoff factor {c:?} is not usable with {scheme:?} bins")))
            }
        };
        let d = p.dimensionless();
        let edges: Vec<f64> = match opts.scheme {
            Discretization::Linear => (0..=n_modes).map(|i| w_max * i as f64 / n_modes as f64).collect(),
            Discretization::Log => {
                let w0 = LOG_FIRST_EDGE * w_max;
                let ratio = (w_max / w0).powf(1.0 / (n_modes - 1) as f64);
                std::iter::once(0.0)
                    .chain((0..n_modes).map(|i| if i + 1 == n_modes { w_max } else { w0 * ratio.powi(i as i32) }))
                    .collect()
            }
            Discretization::EqualWeight => {
                let th = (w_max / d.alpha).atan();
                (0..=n_modes).map(|i| d.alpha * (th * i as f64 / n_modes as f64).tan()).collect()
            }
        };
        let kappa = d.kappa();
        let (frequencies, couplings) = edges
            .windows(2)
            .map(|e| {
                let w = match opts.scheme {
                    Discretization::EqualWeight => {
                        d.alpha * (0.5 * ((e[0] / d.alpha).atan() + (e[1] / d.alpha).atan())).tan()
                    }
                    _ => 0.5 * (e[0] + e[1]),
                };
                let weight = std::f64::consts::FRAC_2_PI
                    * kappa
                    * d.alpha
                    * ((e[1] / d.alpha).atan() - (e[0] / d.alpha).atan());
                (w, weight.sqrt() * w)
            })
            .unzip();
        Ok(Self { frequencies, couplings, edges, kt: d.kt, counterterm: opts.counterterm, scheme: opts.scheme })
    }

    pub fn n_modes(&self) -> usize {
        self.frequencies.len()
    }

    /// 2 pi over the width of the bin containing the system frequency; beyond
    /// it the discrete reservoir returns energy coherently.
    pub fn recurrence_horizon(&self) -> f64 {
        let n = self.edges.windows(2).position(|e| e[0] <= 1.0 && 1.0 < e[1]);
        let width = match n {
            Some(i) => self.edges[i + 1] - self.edges[i],
            None => self.edges.windows(2).map(|e| e[1] - e[0]).fold(f64::INFINITY, f64::min),
        };
        2.0 * std::f64::consts::PI / width
    }

    /// Hessian K of the potential, H = v.v/2 + x.K x/2 with x = (q, x_1, ...).
    pub fn stiffness(&self) -> DMatrix<f64> {
        let n = self.n_modes();
        let mut k = DMatrix::zeros(n + 1, n + 1);
        k[(0, 0)] = 1.0;
        for (j, (&w, &e)) in self.frequencies.iter().zip(&self.couplings).enumerate() {
            if self.counterterm {
                k[(0, 0)] += e * e / (w * w);
            }
            k[(0, j + 1)] = e;
            k[(j + 1, 0)] = e;
            k[(j + 1, j + 1)] = w * w;
        }
        k
    }

    /// Thermal (q, p) variances of reservoir mode j.
    pub fn thermal_variances(&self, j: usize) -> (f64, f64) {
        let w = self.frequencies[j];
        let x = w / (2.0 * self.kt);
        let coth = 1.0 / x.tanh();
        (0.5 * coth / w, 0.5 * w * coth)
    }

    fn propagator(&self) -> Propagator {
        let eig = SymmetricEigen::new(self.stiffness());
        Propagator { u: eig.eigenvectors, lambda: eig.eigenvalues }
    }

    fn check_horizon(&self, times: &[f64]) -> Result<()> {
        let horizon = self.recurrence_horizon();
        for &t in times {
            check_time(t)?;
            if t >= horizon {
                return Err(Error::RecurrenceHorizonExceeded { t, horizon });
            }
        }
        Ok(())
    }

    /// System marginal at each time, oscillator units. The reservoir starts
    /// thermal and uncorrelated with the system.
    pub fn simulate(&self, s0: &GaussianState, times: &[f64]) -> Result<Vec<GaussianState>> {
        self.check_horizon(times)?;
        let prop = self.propagator();
        let n = self.n_modes();
        let (vq, vp): (Vec<f64>, Vec<f64>) = (0..n).map(|j| self.thermal_variances(j)).unzip();
        Ok(times
            .iter()
            .map(|&t| {
                // rows 0 of the position and momentum blocks of the flow
                let [cq, sq, cp, sp] = prop.system_rows(t);
                let mean = [
                    cq[0] * s0.mean[0] + sq[0] * s0.mean[1],
                    cp[0] * s0.mean[0] + sp[0] * s0.mean[1],
                ];
                let cov = |a: (&DVector<f64>, &DVector<f64>), b: (&DVector<f64>, &DVector<f64>)| {
                    let mut r = a.0[0] * b.0[0] * s0.cov.qq
                        + a.1[0] * b.1[0] * s0.cov.pp
                        + (a.0[0] * b.1[0] + a.1[0] * b.0[0]) * s0.cov.qp;
                    for j in 0..n {
                        r += a.0[j + 1] * b.0[j + 1] * vq[j] + a.1[j + 1] * b.1[j + 1] * vp[j];
                    }
                    r
                };
                let q = (&cq, &sq);
                let p = (&cp, &sp);
                GaussianState::new(mean, Sym2::new(cov(q, q), cov(p, p), cov(q, p)))
            })
            .collect())
    }

    /// Full 2(N+1) covariance at time t, ordered (x_0..x_N, v_0..v_N).
    pub fn total_covariance(&self, s0: &GaussianState, t: f64) -> Result<DMatrix<f64>> {
        self.check_horizon(&[t])?;
        let n = self.n_modes() + 1;
        let mut sigma0 = DMatrix::zeros(2 * n, 2 * n);
        sigma0[(0, 0)] = s0.cov.qq;
        sigma0[(n, n)] = s0.cov.pp;
        sigma0[(0, n)] = s0.cov.qp;
        sigma0[(n, 0)] = s0.cov.qp;
        for j in 0..n - 1 {
            let (q, p) = self.thermal_variances(j);
            sigma0[(j + 1, j + 1)] = q;
            sigma0[(n + j + 1, n + j + 1)] = p;
        }
        let phi = self.propagator().flow(t);
        Ok(&phi * sigma0 * phi.transpose())
    }
}

/// x(t) = C x + S v, v(t) = -K S x + C v, from the eigen-decomposition of
/// K; negative eigenvalues (no counterterm, strong coupling) give
/// hyperbolic modes.
struct Propagator {
    u: DMatrix<f64>,
    lambda: DVector<f64>,
}

impl Propagator {
    /// (cos, sin/w, -w sin) of one eigenvalue.
    fn modal(lambda: f64, t: f64) -> (f64, f64, f64) {
        if lambda > 0.0 {
            let w = lambda.sqrt();
            ((w * t).cos(), (w * t).sin() / w, -w * (w * t).sin())
        } else if lambda < 0.0 {
            let g = (-lambda).sqrt();
            ((g * t).cosh(), (g * t).sinh() / g, g * (g * t).sinh())
        } else {
            (1.0, t, 0.0)
        }
    }

    fn blocks(&self, t: f64) -> [DVector<f64>; 3] {
        let m = self.lambda.len();
        let mut c = DVector::zeros(m);
        let mut s = DVector::zeros(m);
        let mut k = DVector::zeros(m);
        for i in 0..m {
            (c[i], s[i], k[i]) = Self::modal(self.lambda[i], t);
        }
        [c, s, k]
    }

    /// Row 0 of C, S, -K S, C.
    fn system_rows(&self, t: f64) -> [DVector<f64>; 4] {
        let [c, s, k] = self.blocks(t);
        let u0 = self.u.row(0).transpose();
        let row = |f: &DVector<f64>| &self.u * u0.component_mul(f);
        let cr = row(&c);
        [cr.clone(), row(&s), row(&k), cr]
    }

    fn flow(&self, t: f64) -> DMatrix<f64> {
        let [c, s, k] = self.blocks(t);
        let m = self.lambda.len();
        let ut = self.u.transpose();
        let block = |f: &DVector<f64>| &self.u * DMatrix::from_diagonal(f) * &ut;
        let mut phi = DMatrix::zeros(2 * m, 2 * m);
        let cb = block(&c);
        phi.view_mut((0, 0), (m, m)).copy_from(&cb);
        phi.view_mut((0, m), (m, m)).copy_from(&block(&s));
        phi.view_mut((m, 0), (m, m)).copy_from(&block(&k));
        phi.view_mut((m, m), (m, m)).copy_from(&cb);
        phi
    }
}

/// System marginals of the discretized model at raw times `times`, raw units,
/// default options with the given scheme.
pub fn microscopic_simulate(
    p: &PhysParams,
    n_modes: usize,
    scheme: Discretization,
    s0: &GaussianState,
    times: &[f64],
) -> Result<Vec<GaussianState>> {
    microscopic_simulate_with(p, n_modes, &BathOptions { scheme, ..BathOptions::default() }, s0, times)
}

pub fn microscopic_simulate_with(
    p: &PhysParams,
    n_modes: usize,
    opts: &BathOptions,
    s0: &GaussianState,
    times: &[f64],
) -> Result<Vec<GaussianState>> {
    let model = ReservoirModel::new(p, n_modes, opts)?;
    let taus: Vec<f64> = times.iter().map(|&t| p.to_internal_time(t)).collect();
    Ok(model
        .simulate(&s0.to_internal(p), &taus)?
        .into_iter()
        .map(|s| s.to_raw(p))
        .collect())
}
