//! Factorization of exp(t2 L) acting on the noise left behind by the inner
//! layer at t1:
//!
//! exp(t2 L) N(t1) = exp(t2 L_H) exp(M(t1, t2)) exp(-{w, ., w}),
//!
//! and the positivity conditions on the middle factor M. Everything is in
//! oscillator units (hbar = m = omega = 1), where a = b = -i/2 and
//! gamma = i Gamma / 2.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exact::{ExactDynamics, NoiseOptions};
use crate::inner::inner_channel;
use crate::mat2::{Mat2, Sym2};
use crate::outer::{hamiltonian_drift, outer_flow};
use crate::params::{check_time, PhysParams};
use crate::phase_space::{GaussianChannel, GeneratorCoeffs};

/// Where the noise weights at t1 come from.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum LambdaSource {
    /// Noise integrals of the exact solution.
    #[default]
    FullPipeline,
    /// Closed-form inner-layer weights.
    InnerLimit,
}

/// Absolute tolerance on imaginary residuals of quantities that must be real.
pub const IMAG_TOL: f64 = 1e-9;

/// Noise matrix accumulated by time t1 (raw), oscillator units.
pub fn first_noise(p: &PhysParams, t1: f64, source: LambdaSource) -> Result<Sym2> {
    check_time(t1)?;
    match source {
        LambdaSource::FullPipeline => Ok(ExactDynamics::new(p)?
            .noise_moments(p.to_internal_time(t1), &NoiseOptions::default())?
            .noise_matrix()),
        LambdaSource::InnerLimit => {
            p.validate()?;
            Ok(inner_channel(p, t1).to_internal(p).noise)
        }
    }
}

/// lambda(t1) = det N / N_pp = lam_plus lam_minus / (S11^2 lam_minus + S12^2 lam_plus).
pub fn lambda_of(n: &Sym2) -> Result<f64> {
    if n.pp <= 0.0 {
        return Err(Error::DivisionByZero("lambda(t1): S11^2 lam_minus + S12^2 lam_plus"));
    }
    Ok((n.det() / n.pp).max(0.0))
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct WeiNormanFactors {
    /// Oscillator times omega t1, omega t2.
    pub t1: f64,
    pub t2: f64,
    pub noise_t1: Sym2,
    pub lam_plus: f64,
    pub lam_minus: f64,
    pub lam: f64,
    pub s1: Complex64,
    pub s2: Complex64,
    pub c: Complex64,
    pub d: Complex64,
    pub e: Complex64,
    pub gamma: Complex64,
    pub a: Complex64,
    pub b: Complex64,
    /// kT / hbar omega
    pub kt: f64,
    /// Gamma / omega
    pub gamma_rate: f64,
}

/// lambda(t1), s1, s2 and C(t2), D(t2), E(t2) at raw times t1, t2.
///
/// C, D, E carry the overall factor -4 kT gamma, which makes the middle
/// generator agree with the moment-level decomposition.
pub fn wei_norman_factors(
    p: &PhysParams,
    t1: f64,
    t2: f64,
    source: LambdaSource,
) -> Result<WeiNormanFactors> {
    check_time(t2)?;
    let n = first_noise(p, t1, source)?;
    let lam = lambda_of(&n)?;
    let (lam_plus, lam_minus) = n.eigenvalues();
    let d = p.dimensionless();
    let i = Complex64::i();
    let a = Complex64::new(0.0, -0.5);
    let b = a;
    let gamma = Complex64::new(0.0, 0.5 * d.gamma);
    let tau = p.to_internal_time(t2);

    let disc = gamma * gamma - a * b;
    let root = disc.sqrt();
    let pref = -4.0 * d.kt * gamma * (-4.0 * i * gamma * tau).exp() / (4.0 * disc);
    let e4 = (4.0 * i * gamma * tau).exp();
    let cos = (4.0 * tau * root).cos();
    let c = pref * root * (4.0 * tau * root).sin();
    let dd = pref * i * a * b * (1.0 - cos);
    let e = pref / (i * gamma) * (a * b * (1.0 - e4) + gamma * gamma * (e4 - cos));

    Ok(WeiNormanFactors {
        t1: p.to_internal_time(t1),
        t2: tau,
        noise_t1: n,
        lam_plus,
        lam_minus,
        lam,
        s1: Complex64::new(0.5 * n.qp, 0.0),
        s2: -n.pp / (4.0 * a),
        c,
        d: dd,
        e,
        gamma,
        a,
        b,
        kt: d.kt,
        gamma_rate: d.gamma,
    })
}

impl WeiNormanFactors {
    /// e^{-4 i gamma t2} = e^{2 Gamma t2}
    pub fn growth(&self) -> f64 {
        (2.0 * self.gamma_rate * self.t2).exp()
    }

    /// Coefficients of M (already multiplied by t2) in the form
    /// -(A{q,.,q} + B{p,.,p} + C{q,.,p} + D{p,.,q}):
    ///
    /// M = gamma t2 [4ia(E + C){q,.,q} + 4ib(E - C - i lam){p,.,p}
    ///     + (e - 1 + 4iD){p,.,q} + (1 - e + 4iD){q,.,p}] / (1 - e),
    /// e = e^{2 Gamma t2}.
    ///
    /// At t2 = 0 the limit M = 0 is returned.
    pub fn middle_coeffs(&self) -> GeneratorCoeffs {
        let zero = Complex64::new(0.0, 0.0);
        if self.t2 == 0.0 {
            return GeneratorCoeffs { a: zero, b: zero, c: zero, d: zero };
        }
        let i = Complex64::i();
        let e = self.growth();
        let pref = self.gamma * self.t2 / (1.0 - e);
        let four_i_d = 4.0 * i * self.d;
        GeneratorCoeffs {
            a: -pref * 4.0 * i * self.a * (self.e + self.c),
            b: -pref * 4.0 * i * self.b * (self.e - self.c - i * self.lam),
            c: -pref * (1.0 - e + four_i_d),
            d: -pref * (e - 1.0 + four_i_d),
        }
    }

    /// Coefficients of the last factor -{w, ., w}, which adds the rank-one
    /// noise N(t1) - lam e_q e_q^T.
    pub fn last_coeffs(&self) -> GeneratorCoeffs {
        additive_coeffs(&self.last_noise())
    }

    pub fn last_noise(&self) -> Sym2 {
        self.noise_t1 - Sym2::new(self.lam, 0.0, 0.0)
    }
}

/// Generator coefficients whose exponential adds the noise `n` and nothing
/// else (oscillator units).
pub fn additive_coeffs(n: &Sym2) -> GeneratorCoeffs {
    let c = Complex64::new(-0.5 * n.qp, 0.0);
    GeneratorCoeffs {
        a: Complex64::new(0.5 * n.pp, 0.0),
        b: Complex64::new(0.5 * n.qq, 0.0),
        c,
        d: c,
    }
}

/// The middle factor computed from the channels themselves:
/// T_M = e^{-Gamma t2}, N_M = e^{-2 Gamma t2} lam e_q e_q^T + T_H^{-1} N_L T_H^{-T},
/// returned as the coefficients of the generator whose unit-time exponential
/// realizes it. Oscillator units, raw t2.
pub fn middle_coeffs_from_channels(p: &PhysParams, t2: f64, lam: f64) -> Result<GeneratorCoeffs> {
    check_time(t2)?;
    let zero = Complex64::new(0.0, 0.0);
    if t2 == 0.0 {
        return Ok(GeneratorCoeffs { a: zero, b: zero, c: zero, d: zero });
    }
    let q = PhysParams::oscillator_units(p.gamma / p.omega, p.alpha / p.omega, p.kt() / (p.hbar * p.omega));
    let tau = p.to_internal_time(t2);
    let g = q.gamma;
    let nl = outer_flow(&q, false).channel(tau).noise;
    let th_inv = hamiltonian_drift(&q).exp_scaled(-tau);
    let nm = Sym2::new(lam * (-2.0 * g * tau).exp(), 0.0, 0.0) + nl.congruence(&th_inv);
    let w = 2.0 * g * tau;
    let dm = nm.scale(w / -(-w).exp_m1());
    let c = Complex64::new(-0.5 * dm.qp, -0.5 * g * tau);
    Ok(GeneratorCoeffs {
        a: Complex64::new(0.5 * dm.pp, 0.0),
        b: Complex64::new(0.5 * dm.qq, 0.0),
        c,
        d: c.conj(),
    })
}

/// The three channels of the right-hand side in the order they act
/// (last factor first), oscillator units.
pub fn factor_channels(p: &PhysParams, f: &WeiNormanFactors) -> [GaussianChannel; 3] {
    let q = PhysParams::oscillator_units(f.gamma_rate, p.alpha / p.omega, f.kt);
    let m = f.middle_coeffs();
    let (rate, diff) = m.moment_action(1.0);
    let flow = crate::outer::MomentFlow {
        drift: Mat2::identity().scale(-rate.re),
        diffusion: Sym2::new(diff[0].re, diff[1].re, diff[2].re),
    };
    [
        GaussianChannel::additive(f.last_noise()),
        flow.channel(1.0),
        GaussianChannel::unitary(hamiltonian_drift(&q).exp_scaled(f.t2)),
    ]
}

/// Both sides of the middle-factor condition.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct MiddleCondition {
    /// |(e^{-4i gamma t2} - 1)/4i + D|^2
    pub lhs: f64,
    /// Re[ab (E + C)(E - C - i lam)]
    pub rhs: f64,
    /// Same with the term 2i lam in place of i lam.
    pub rhs_doubled_lambda: f64,
    pub imag_residual: f64,
    pub holds: bool,
    pub holds_doubled_lambda: bool,
}

impl WeiNormanFactors {
    /// Evaluates the middle-factor condition. The right side must be real; an imaginary part
    /// above [`IMAG_TOL`] (relative to its modulus, or absolute when small)
    /// is an error.
    pub fn middle_condition(&self) -> Result<MiddleCondition> {
        let i = Complex64::i();
        let lhs = ((self.growth() - 1.0) / (4.0 * i) + self.d).norm_sqr();
        let ab = self.a * self.b;
        let r1 = ab * (self.e + self.c) * (self.e - self.c - i * self.lam);
        let r2 = ab * (self.e + self.c) * (self.e - self.c - 2.0 * i * self.lam);
        let imag = r1.im.abs().max(r2.im.abs());
        if imag > IMAG_TOL * r1.norm().max(r2.norm()).max(1.0) {
            return Err(Error::NonRealCriterion { imag });
        }
        // lhs and rhs are equal up to roundoff when N_M is rank deficient
        let slack = 1e-12 * lhs.max(r1.re.abs());
        Ok(MiddleCondition {
            lhs,
            rhs: r1.re,
            rhs_doubled_lambda: r2.re,
            imag_residual: imag,
            holds: lhs <= r1.re + slack,
            holds_doubled_lambda: lhs <= r2.re + slack,
        })
    }
}

pub fn middle_condition(p: &PhysParams, t1: f64, t2: f64, source: LambdaSource) -> Result<bool> {
    Ok(wei_norman_factors(p, t1, t2, source)?.middle_condition()?.holds)
}

/// (9/2)(kT/hbar omega)^2 [(2kT/hbar omega)^2 - 1] lam^2, compared with 1 by
/// the high-temperature condition.
pub fn high_temp_value(p: &PhysParams, t1: f64, source: LambdaSource) -> Result<f64> {
    let kt = p.dimensionless().kt;
    let n = first_noise(p, t1, source)?;
    let lam = if n.pp > 0.0 { lambda_of(&n)? } else { 0.0 };
    Ok(4.5 * kt * kt * (4.0 * kt * kt - 1.0) * lam * lam)
}

pub fn high_temp_condition(p: &PhysParams, t1: f64, source: LambdaSource) -> Result<bool> {
    Ok(high_temp_value(p, t1, source)? > 1.0)
}

/// Smallest raw t1 at which the high-temperature condition holds, searched for alpha t1 up to
/// `max_alpha_tilde` on a geometric grid and refined by bisection. `None`
/// when it never holds on the searched range.
pub fn minimal_patch_time(
    p: &PhysParams,
    source: LambdaSource,
    max_alpha_tilde: f64,
) -> Result<Option<f64>> {
    let kt = p.dimensionless().kt;
    if 2.0 * kt <= 1.0 {
        return Ok(None);
    }
    let to_t = |x: f64| x / p.alpha;
    let holds = |x: f64| high_temp_condition(p, to_t(x), source);
    let n = 60;
    let lo0 = 1e-3f64.min(max_alpha_tilde);
    let ratio = (max_alpha_tilde / lo0).powf(1.0 / n as f64);
    let mut prev = 0.0;
    let mut x = lo0;
    for _ in 0..=n {
        if holds(x)? {
            let (mut lo, mut hi) = (prev, x);
            for _ in 0..60 {
                let mid = 0.5 * (lo + hi);
                if holds(mid)? {
                    hi = mid;
                } else {
                    lo = mid;
                }
                if hi - lo <= 1e-10 * hi {
                    break;
                }
            }
            return Ok(Some(to_t(hi)));
        }
        prev = x;
        x *= ratio;
    }
    Ok(None)
}
