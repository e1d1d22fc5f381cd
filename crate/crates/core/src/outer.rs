//! The conventional propagator exp(tL) at the level of first and second
//! moments, its positivity-preserving modification, and the patch
//! exp((t - dt)L) J(dt).

use nalgebra::Matrix4;
use serde::Serialize;

use crate::error::Result;
use crate::inner::inner_channel;
use crate::mat2::{Mat2, Sym2};
use crate::params::{check_time, PhysParams};
use crate::phase_space::{compose, GaussianChannel, GeneratorCoeffs};
use crate::wei_norman::{high_temp_condition, LambdaSource};

/// Linear moment equations d(mean)/dt = F mean and
/// dSigma/dt = F Sigma + Sigma F^T + D.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct MomentFlow {
    pub drift: Mat2,
    pub diffusion: Sym2,
}

/// Heisenberg drift of H = p^2/2m + Gamma (qp + pq)/2 + m omega^2 q^2 / 2.
pub fn hamiltonian_drift(p: &PhysParams) -> Mat2 {
    Mat2::new(p.gamma, 1.0 / p.mass, -p.mass * p.omega * p.omega, -p.gamma)
}

impl MomentFlow {
    /// Flow of [H, .]/(i hbar) (entering through `hamiltonian_drift`) plus the
    /// dissipator -(A{q,.,q} + B{p,.,p} + C{q,.,p} + D{p,.,q}).
    ///
    /// The imaginary part of C - D and the real part of C + D are what reach
    /// the moments; for C = D* both are exactly real.
    pub fn from_generator(hamiltonian_drift: Mat2, c: &GeneratorCoeffs, hbar: f64) -> Self {
        let (rate, diff) = c.moment_action(hbar);
        Self {
            drift: hamiltonian_drift - Mat2::identity().scale(rate.re),
            diffusion: Sym2::new(diff[0].re, diff[1].re, diff[2].re),
        }
    }

    /// Exact solution of the moment equations over time `t`.
    ///
    /// The noise integral int_0^t e^{Fs} D e^{F^T s} ds is the last column of
    /// the exponential of the augmented 4x4 generator of the covariance
    /// equation, which needs no eigen-decomposition of F and therefore also
    /// covers defective drifts.
    pub fn channel(&self, t: f64) -> GaussianChannel {
        let f = self.drift;
        let (f11, f12, f21, f22) = (f[(0, 0)], f[(0, 1)], f[(1, 0)], f[(1, 1)]);
        let d = self.diffusion;
        // (qq, pp, qp) basis
        #[rustfmt::skip]
        let m = Matrix4::new(
            2.0 * f11, 0.0,       2.0 * f12, d.qq,
            0.0,       2.0 * f22, 2.0 * f21, d.pp,
            f21,       f12,       f11 + f22, d.qp,
            0.0,       0.0,       0.0,       0.0,
        ) * t;
        let e = m.exp();
        GaussianChannel::new(f.exp_scaled(t), Sym2::new(e[(0, 3)], e[(1, 3)], e[(2, 3)]))
    }

    /// Solution of F Sigma + Sigma F^T + D = 0, if unique.
    pub fn stationary(&self) -> Option<Sym2> {
        let f = self.drift;
        let (f11, f12, f21, f22) = (f[(0, 0)], f[(0, 1)], f[(1, 0)], f[(1, 1)]);
        let m = nalgebra::Matrix3::new(
            2.0 * f11, 0.0, 2.0 * f12,
            0.0, 2.0 * f22, 2.0 * f21,
            f21, f12, f11 + f22,
        );
        let rhs = nalgebra::Vector3::new(-self.diffusion.qq, -self.diffusion.pp, -self.diffusion.qp);
        m.lu().solve(&rhs).map(|x| Sym2::new(x[0], x[1], x[2]))
    }
}

/// Moment flow of L, raw units. With `gao` the term -Gamma{p,.,p}/8mkT is
/// included, which adds position diffusion hbar^2 Gamma / 4mkT.
pub fn outer_flow(p: &PhysParams, gao: bool) -> MomentFlow {
    MomentFlow::from_generator(
        hamiltonian_drift(p),
        &GeneratorCoeffs::quantum_brownian(p, gao),
        p.hbar,
    )
}

/// exp(tL) on Gaussian states, raw units.
pub fn outer_channel(p: &PhysParams, t: f64, gao: bool) -> Result<GaussianChannel> {
    check_time(t)?;
    Ok(outer_flow(p, gao).channel(t))
}

/// The patched propagator together with the conditions under which it is
/// guaranteed to preserve positivity.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct PatchedChannel {
    pub channel: GaussianChannel,
    pub dt: f64,
    pub t: f64,
    /// t < dt: only the inner propagator J(t) acts.
    pub inner_only: bool,
    pub underdamped: bool,
    pub high_temp_condition: bool,
    /// omega > Gamma and the high-temperature condition at dt both hold.
    pub cp_certified: bool,
    /// Smallest eigenvalue of N + (i hbar/2)(1 - det T) J; non-negative iff
    /// the channel maps every physical Gaussian to a physical one.
    pub cp_margin: f64,
}

/// exp((t - dt)L) J(dt) for t >= dt, and J(t) for t < dt.
pub fn patched_channel(
    p: &PhysParams,
    dt: f64,
    t: f64,
    gao: bool,
    source: LambdaSource,
) -> Result<PatchedChannel> {
    check_time(dt)?;
    check_time(t)?;
    let inner_only = t < dt;
    let channel = if inner_only {
        inner_channel(p, t)
    } else {
        compose(&outer_channel(p, t - dt, gao)?, &inner_channel(p, dt))
    };
    let underdamped = p.underdamped_positivity_regime();
    let high_t = dt > 0.0 && high_temp_condition(p, dt, source)?;
    Ok(PatchedChannel {
        channel,
        dt,
        t,
        inner_only,
        underdamped,
        high_temp_condition: high_t,
        cp_certified: underdamped && high_t,
        cp_margin: channel.cp_margin(p.hbar),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn p0() -> PhysParams {
        PhysParams { mass: 1.3, omega: 0.8, hbar: 0.9, kb: 1.1, ..PhysParams::oscillator_units(0.1, 100.0, 10.0) }
    }

    #[test]
    fn closed_oscillator_without_damping() {
        let p = PhysParams { gamma: 0.0, ..p0() };
        let f = outer_flow(&p, false);
        assert_eq!(f.diffusion, Sym2::zero());
        assert_eq!(f.drift, Mat2::new(0.0, 1.0 / p.mass, -p.mass * p.omega * p.omega, 0.0));
    }

    #[test]
    fn drift_and_diffusion_structure() {
        let p = p0();
        let f = outer_flow(&p, false);
        assert!((f.drift[(1, 1)] + 2.0 * p.gamma).abs() < 1e-15);
        assert!(f.drift[(0, 0)].abs() < 1e-15);
        assert!((f.diffusion.pp - 4.0 * p.gamma * p.mass * p.kt()).abs() < 1e-12);
        assert_eq!(f.diffusion.qq, 0.0);
        let g = outer_flow(&p, true);
        let expected = p.hbar * p.hbar * p.gamma / (4.0 * p.mass * p.kt());
        assert!((g.diffusion.qq - expected).abs() < 1e-15);
    }

    #[test]
    fn zero_time_is_identity() {
        let ch = outer_channel(&p0(), 0.0, false).unwrap();
        assert_eq!(ch.trans, Mat2::identity());
        assert_eq!(ch.noise, Sym2::zero());
    }

    #[test]
    fn semigroup() {
        let p = p0();
        for gao in [false, true] {
            let a = outer_channel(&p, 0.7, gao).unwrap();
            let b = outer_channel(&p, 1.9, gao).unwrap();
            let ab = outer_channel(&p, 2.6, gao).unwrap();
            assert!(compose(&b, &a).max_abs_diff(&ab) < 1e-10 * ab.noise.max_abs().max(1.0));
        }
    }

    #[test]
    fn long_time_limit_is_stationary() {
        let p = p0();
        let flow = outer_flow(&p, false);
        let st = flow.stationary().unwrap();
        let ch = outer_channel(&p, 400.0, false).unwrap();
        assert!((ch.noise - st).max_abs() < 1e-9 * st.max_abs());
        // equipartition: <p^2>/m = m omega^2 <q^2> = kT
        assert!((st.pp / p.mass - p.kt()).abs() < 1e-9 * p.kt());
        assert!((st.qq * p.mass * p.omega * p.omega - p.kt()).abs() < 1e-9 * p.kt());
    }

    #[test]
    fn noise_matches_quadrature() {
        let p = p0();
        let flow = outer_flow(&p, true);
        let t = 1.7;
        let n = 2000;
        let h = t / n as f64;
        let mut acc = Sym2::zero();
        for j in 0..=n {
            let s = j as f64 * h;
            let w = if j == 0 || j == n { 1.0 } else if j % 2 == 1 { 4.0 } else { 2.0 };
            acc = acc + flow.diffusion.congruence(&flow.drift.exp_scaled(s)).scale(w * h / 3.0);
        }
        assert!((flow.channel(t).noise - acc).max_abs() < 1e-10 * acc.max_abs());
    }
}
