//! The inner propagator J(dt), valid on the O(1/alpha) initial layer, and
//! its closed-form noise weights, entropy growth and uncertainty floors.

use serde::Serialize;

use crate::mat2::{Mat2, Sym2};
use crate::params::PhysParams;
use crate::phase_space::GaussianChannel;

/// Above this value of omega t the inner formulas are reported as outside
/// the initial layer.
pub const LAYER_EDGE: f64 = 0.1;

/// Dimensionless inner-layer variables at one time.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct InnerParams {
    /// alpha t
    pub alpha_tilde: f64,
    /// hbar alpha / k T
    pub beta_max: f64,
    /// alpha / omega
    pub alpha: f64,
    /// omega t > [`LAYER_EDGE`]
    pub outside_layer: bool,
}

impl InnerParams {
    pub fn new(p: &PhysParams, t: f64) -> Self {
        Self {
            alpha_tilde: p.alpha * t,
            beta_max: p.beta_max(),
            alpha: p.alpha / p.omega,
            outside_layer: p.omega * t > LAYER_EDGE,
        }
    }
}

/// e^{-x} + x - 1
pub fn rise(x: f64) -> f64 {
    if x < 1.0 {
        series(x, 2, |k| sign(k) / factorial(k))
    } else {
        (-x).exp() + x - 1.0
    }
}

/// x/6 - 1/2 - e^{-x}/2 - 2e^{-x}/x + 2(1 - e^{-x})/x^2, which behaves as
/// x^3/60 near 0.
pub fn lambda_minus_bracket(x: f64) -> f64 {
    if x < 1.0 {
        series(x, 3, |k| {
            sign(k) * (-0.5 / factorial(k) + 2.0 / factorial(k + 1) - 2.0 / factorial(k + 2))
        })
    } else {
        let e = (-x).exp();
        x / 6.0 - 0.5 - 0.5 * e - 2.0 * e / x + 2.0 * (1.0 - e) / (x * x)
    }
}

/// 2x/3 - 1 - 2e^{-x}/x + 2(1 - e^{-x})/x^2, which behaves as x^2/4 near 0.
pub fn position_floor_bracket(x: f64) -> f64 {
    if x < 1.0 {
        series(x, 2, |k| sign(k) * 2.0 * (1.0 / factorial(k + 1) - 1.0 / factorial(k + 2)))
    } else {
        let e = (-x).exp();
        2.0 * x / 3.0 - 1.0 - 2.0 * e / x + 2.0 * (1.0 - e) / (x * x)
    }
}

fn sign(k: u32) -> f64 {
    if k.is_multiple_of(2) {
        1.0
    } else {
        -1.0
    }
}

fn factorial(k: u32) -> f64 {
    (1..=k).fold(1.0, |a, j| a * j as f64)
}

/// sum_{k >= k0} coef(k) x^k, truncated once terms fall below 1e-17 of the
/// running sum (x < 1).
fn series(x: f64, k0: u32, coef: impl Fn(u32) -> f64) -> f64 {
    if x == 0.0 {
        return 0.0;
    }
    let mut sum = 0.0;
    let mut xk = x.powi(k0 as i32);
    for k in k0..k0 + 30 {
        let term = coef(k) * xk;
        sum += term;
        if term.abs() < 1e-17 * sum.abs() {
            break;
        }
        xk *= x;
    }
    sum
}

/// Inner-limit noise weights (lambda_plus, lambda_minus), both dimensionless.
pub fn inner_lambdas(p: &PhysParams, ip: &InnerParams) -> (f64, f64) {
    let g = p.gamma / p.omega;
    let x = ip.alpha_tilde.max(0.0);
    let lp = 4.0 * g / ip.beta_max * rise(x);
    let ratio = x / ip.alpha;
    let lm = 2.0 * g / ip.beta_max * ratio * ratio * lambda_minus_bracket(x);
    (lp, lm)
}

/// The inner-limit frame [[omega t/2, 1], [1, -omega t/2]], orthogonal only to
/// leading order in omega t.
pub fn inner_s(omega: f64, t: f64) -> Mat2 {
    let h = 0.5 * omega * t;
    Mat2::new(h, 1.0, 1.0, -h)
}

/// The frame of [`inner_s`] with normalized columns.
pub fn inner_s_normalized(omega: f64, t: f64) -> Mat2 {
    let s = inner_s(omega, t);
    s.scale(1.0 / (1.0 + 0.25 * (omega * t).powi(2)).sqrt())
}

/// Unitary part and noise matrix of J(dt), oscillator units.
fn inner_parts(p: &PhysParams, dt: f64) -> (Mat2, Sym2) {
    let t = p.to_internal_time(dt);
    let ip = InnerParams::new(p, dt);
    let g = p.gamma / p.omega;
    let addot = 2.0 * g * (-ip.alpha_tilde).exp_m1();
    let trans = Mat2::new(1.0, t, addot, 1.0);
    let trans = trans.scale(1.0 / trans.det().sqrt());
    let (lp, lm) = inner_lambdas(p, &ip);
    let s = inner_s_normalized(1.0, t);
    let noise = Sym2::outer([s[(0, 0)], s[(1, 0)]]).scale(lp) + Sym2::outer([s[(0, 1)], s[(1, 1)]]).scale(lm);
    (trans, noise)
}

/// J(dt) as a Gaussian channel in raw units: the R-normalized inner unitary
/// followed by smearing along the two axes of the inner frame. The noise
/// matrix is positive semidefinite for every dt.
pub fn inner_channel(p: &PhysParams, dt: f64) -> GaussianChannel {
    if dt <= 0.0 {
        return GaussianChannel::identity();
    }
    let (trans, noise) = inner_parts(p, dt);
    GaussianChannel::new(trans, noise).to_raw(p)
}

/// The unitary part of J(t) alone, raw units.
pub fn inner_unitary(p: &PhysParams, t: f64) -> Mat2 {
    if t <= 0.0 {
        return Mat2::identity();
    }
    p.trans_to_raw(&inner_parts(p, t).0)
}

/// (k/2) ln[(1 + 2 lambda_plus)(1 + 2 lambda_minus)].
pub fn coherent_entropy(p: &PhysParams, t: f64) -> f64 {
    let (lp, lm) = inner_lambdas(p, &InnerParams::new(p, t));
    0.5 * p.kb * ((2.0 * lp).ln_1p() + (2.0 * lm).ln_1p())
}

/// Lower bounds on the position and momentum variances of any state in the
/// image of J(dt).
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct UncertaintyFloors {
    pub dq2_min: f64,
    pub dp2_min: f64,
    /// Leading inner-limit form of `dq2_min`.
    pub dq2_asymptotic: f64,
    /// Leading inner-limit form of `dp2_min`.
    pub dp2_asymptotic: f64,
}

pub fn uncertainty_floors(p: &PhysParams, dt: f64) -> UncertaintyFloors {
    let ip = InnerParams::new(p, dt.max(0.0));
    let (lp, lm) = inner_lambdas(p, &ip);
    let s = inner_s_normalized(1.0, p.to_internal_time(dt.max(0.0)));
    let (s11, s12, s21, s22) = (s[(0, 0)], s[(0, 1)], s[(1, 0)], s[(1, 1)]);
    let q_unit = p.hbar / (p.mass * p.omega);
    let p_unit = p.mass * p.hbar * p.omega;
    let x = ip.alpha_tilde;
    let kt = p.kt();
    UncertaintyFloors {
        dq2_min: q_unit * (lm * s21 * s21 + lp * s22 * s22),
        dp2_min: p_unit * (lm * s11 * s11 + lp * s12 * s12),
        dq2_asymptotic: 2.0 * p.gamma * kt / (p.mass * p.alpha)
            * (x / p.alpha * p.omega).powi(2)
            * position_floor_bracket(x),
        dp2_asymptotic: 4.0 * p.gamma * p.mass * kt / p.alpha * rise(x),
    }
}
