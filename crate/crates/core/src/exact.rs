//! Exact reduced dynamics of the oscillator coupled to a Drude reservoir.
//!
//! The response function A(t) is a sum of three exponentials with poles
//! s1 = 2 Gamma - alpha and s2,3 = -Gamma +/- i Omega. Everything here works
//! in oscillator units (hbar = m = omega = 1) and converts at the boundary.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::mat2::{Mat2, Sym2};
use crate::params::{check_time, Dimensionless, PhysParams};
use crate::phase_space::GaussianChannel;
use crate::quadrature::{integrate, QuadOptions};

/// Thermal factor used in the noise integrals.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum NoiseKernel {
    /// coth(hbar w / 2kT).
    #[default]
    Quantum,
    /// The classical limit 2kT / (hbar w).
    HighTemperature,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct NoiseOptions {
    pub kernel: NoiseKernel,
    pub quad: QuadOptions,
}

impl Default for NoiseOptions {
    fn default() -> Self {
        Self {
            kernel: NoiseKernel::Quantum,
            quad: QuadOptions::default(),
        }
    }
}

/// A(t) and its derivatives at one time, in oscillator units.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct TrajectoryCoeffs {
    /// omega t
    pub t: f64,
    pub a: f64,
    pub adot: f64,
    pub addot: f64,
    /// Damped frequency Omega / omega.
    pub omega_damped: f64,
    /// sqrt(Adot^2 - A Addot)
    pub r: f64,
}

impl TrajectoryCoeffs {
    /// Transition matrix [[Adot, A], [Addot, Adot]] acting on (q, p).
    pub fn transition(&self) -> Mat2 {
        Mat2::new(self.adot, self.a, self.addot, self.adot)
    }
}

/// Noise integrals X, Y, Xdot and the diagonalization of the noise matrix,
/// in oscillator units (so a = X, b = Xdot, c = Y).
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct NoiseMoments {
    pub t: f64,
    pub x: f64,
    pub y: f64,
    pub xdot: f64,
    pub lam_plus: f64,
    pub lam_minus: f64,
    pub s: Mat2,
}

impl NoiseMoments {
    pub fn zero() -> Self {
        let (lam_plus, lam_minus, s) = diagonalize_noise(0.0, 0.0, 0.0);
        Self { t: 0.0, x: 0.0, y: 0.0, xdot: 0.0, lam_plus, lam_minus, s }
    }

    /// [[X, Xdot/2], [Xdot/2, Y]]
    pub fn noise_matrix(&self) -> Sym2 {
        Sym2::new(self.x, self.y, 0.5 * self.xdot)
    }
}

/// Eigen-decomposition of [[a, b/2], [b/2, c]].
///
/// Returns (lam_plus, lam_minus, S) with the eigenvector of lam_plus in the
/// first column. S = [[x, y], [y, -x]] with x >= 0 (y > 0 when x = 0), which
/// is the sign rule "first column negated for b < 0" written without 0/0.
/// det S = -1. At a = c, b = 0 the b -> 0+ limit (1/sqrt2)[[1, 1], [1, -1]]
/// is returned.
pub fn diagonalize_noise(a: f64, b: f64, c: f64) -> (f64, f64, Mat2) {
    let d = c - a;
    let r = d.hypot(b);
    let lam_plus = 0.5 * (c + a + r);
    let det = a * c - 0.25 * b * b;
    let lam_minus = if lam_plus > 0.0 { det / lam_plus } else { 0.5 * (c + a - r) };
    let (mut x, mut y) = if r == 0.0 {
        (1.0, 1.0)
    } else if d >= 0.0 {
        (b, d + r)
    } else {
        (-d + r, b)
    };
    let n = x.hypot(y);
    x /= n;
    y /= n;
    if x < 0.0 || (x == 0.0 && y < 0.0) {
        x = -x;
        y = -y;
    }
    (lam_plus, lam_minus, Mat2::new(x, y, y, -x))
}

fn expm1_c(z: Complex64) -> Complex64 {
    let (x, y) = (z.re, z.im);
    let s = (0.5 * y).sin();
    Complex64::new(x.exp_m1() * y.cos() - 2.0 * s * s, x.exp() * y.sin())
}

/// (e^z - 1)/z
fn phi1(z: Complex64) -> Complex64 {
    if z.norm() < 0.5 {
        let mut term = Complex64::new(1.0, 0.0);
        let mut sum = term;
        for n in 2..20 {
            term = term * z / n as f64;
            sum += term;
        }
        sum
    } else {
        expm1_c(z) / z
    }
}

/// (e^z - 1 - z)/z^2
fn phi2(z: Complex64) -> Complex64 {
    if z.norm() < 0.5 {
        let mut term = Complex64::new(0.5, 0.0);
        let mut sum = term;
        for n in 3..21 {
            term = term * z / n as f64;
            sum += term;
        }
        sum
    } else {
        (phi1(z) - 1.0) / z
    }
}

/// Poles and residues of A(t) for one dimensionless parameter set.
#[derive(Clone, Copy, Debug)]
pub struct ExactDynamics {
    d: Dimensionless,
    kappa: f64,
    omega_damped: f64,
    poles: [Complex64; 3],
    coefs: [Complex64; 3],
}

impl ExactDynamics {
    pub fn new(p: &PhysParams) -> Result<Self> {
        p.validate()?;
        Self::from_dimensionless(p.dimensionless())
    }

    pub fn from_dimensionless(d: Dimensionless) -> Result<Self> {
        let (g, al) = (d.gamma, d.alpha);
        if al <= 2.0 * g {
            return Err(Error::InvalidRegime(format!(
                "cutoff alpha = {al} must exceed 2 Gamma = {}",
                2.0 * g
            )));
        }
        let om2 = d.omega_sq();
        if om2 <= 0.0 {
            return Err(Error::InvalidRegime(format!(
                "Omega^2 = {om2} is not positive (overdamped)"
            )));
        }
        let om = om2.sqrt();
        let den = (al - 3.0 * g).powi(2) + om2;
        let k = (al - 2.0 * g).powi(2) + om2 - g * g;
        let c2 = Complex64::new(-g, -k / (2.0 * om)) / den;
        Ok(Self {
            d,
            kappa: d.kappa(),
            omega_damped: om,
            poles: [
                Complex64::new(2.0 * g - al, 0.0),
                Complex64::new(-g, om),
                Complex64::new(-g, -om),
            ],
            coefs: [Complex64::new(2.0 * g / den, 0.0), c2, c2.conj()],
        })
    }

    pub fn dimensionless(&self) -> Dimensionless {
        self.d
    }

    /// A, Adot, Addot at oscillator time `t`, using expm1 forms where the
    /// value at t = 0 vanishes so small-t values keep full relative precision.
    pub fn response(&self, t: f64) -> (f64, f64, f64) {
        let mut a = Complex64::new(0.0, 0.0);
        let mut ad = a;
        let mut add = a;
        for (&s, &c) in self.poles.iter().zip(&self.coefs) {
            let em1 = expm1_c(s * t);
            a += c * em1;
            ad += c * s * (em1 + 1.0);
            add += c * s * s * em1;
        }
        (a.re, ad.re, add.re)
    }

    /// Trajectory coefficients without the R > 0 check; `r` is NaN when the
    /// radicand is not positive.
    pub fn trajectory_unchecked(&self, t: f64) -> TrajectoryCoeffs {
        let (a, adot, addot) = self.response(t);
        let rad = adot * adot - a * addot;
        TrajectoryCoeffs {
            t,
            a,
            adot,
            addot,
            omega_damped: self.omega_damped,
            r: if rad > 0.0 { rad.sqrt() } else { f64::NAN },
        }
    }

    pub fn trajectory(&self, t: f64) -> Result<TrajectoryCoeffs> {
        check_time(t)?;
        let tc = self.trajectory_unchecked(t);
        if tc.r.is_nan() {
            return Err(Error::RNotPositive { t, radicand: tc.adot * tc.adot - tc.a * tc.addot });
        }
        Ok(tc)
    }

    /// int_0^t e^{i w s} A(s) ds and int_0^t e^{i w s} Adot(s) ds.
    pub fn response_transform(&self, w: f64, t: f64) -> (Complex64, Complex64) {
        let iw = Complex64::new(0.0, w);
        let mut fa = Complex64::new(0.0, 0.0);
        let mut fb = fa;
        for (&s, &c) in self.poles.iter().zip(&self.coefs) {
            fb += c * s * phi1((s + iw) * t);
        }
        fb *= t;
        // sum_k c_k = 0, so summing c_k (e^{z_k t} - 1)/z_k pole by pole
        // cancels terms of size t against a result of size 1/w^2 or t^2.
        if w.abs() * t >= 0.25 {
            // integration by parts, A(0) = 0
            let a_t = self.response(t).0;
            return ((Complex64::from_polar(a_t, w * t) - fb) / iw, fb);
        }
        let zmax = self.poles.iter().map(|&s| (s + iw).norm()).fold(0.0, f64::max);
        if zmax * t <= 0.5 {
            return (self.small_time_transform(w, t), fb);
        }
        for (&s, &c) in self.poles.iter().zip(&self.coefs) {
            let z = s + iw;
            fa += c * z * phi2(z * t);
        }
        (fa * (t * t), fb)
    }

    /// int_0^t e^{iws} A(s) ds from the Taylor moments a_j = A^{(j)}(0),
    /// with a_0 = 0 imposed exactly. Needs |s_k + iw| t <= 1/2.
    fn small_time_transform(&self, w: f64, t: f64) -> Complex64 {
        const TERMS: usize = 24;
        // scaled moments a_j t^j
        let mut a = [Complex64::new(0.0, 0.0); TERMS + 1];
        for (&s, &c) in self.poles.iter().zip(&self.coefs) {
            let mut pw = c;
            for aj in a.iter_mut().skip(1) {
                pw *= s * t;
                *aj += pw;
            }
        }
        let iwt = Complex64::new(0.0, w * t);
        let mut pow_iwt = [Complex64::new(1.0, 0.0); TERMS + 1];
        for j in 1..=TERMS {
            pow_iwt[j] = pow_iwt[j - 1] * iwt;
        }
        // sum_k c_k (z_k t)^m = sum_{j>=1} binom(m, j) (iwt)^{m-j} a_j t^j
        let mut sum = Complex64::new(0.0, 0.0);
        let mut fact = 1.0; // (m+1)!
        for m in 1..TERMS {
            fact *= (m + 1) as f64;
            let mut mu = Complex64::new(0.0, 0.0);
            let mut binom = 1.0;
            for j in (1..=m).rev() {
                binom = if j == m { 1.0 } else { binom * (j + 1) as f64 / (m - j) as f64 };
                mu += a[j] * pow_iwt[m - j] * binom;
            }
            sum += mu / fact;
        }
        sum * t
    }

    /// (1/2) (f(w)/w) times the thermal factor, oscillator units.
    pub fn noise_weight(&self, w: f64, kernel: NoiseKernel) -> f64 {
        let (al, kt) = (self.d.alpha, self.d.kt);
        // w coth(w / 2kT), finite at w = 0
        let w_coth = match kernel {
            NoiseKernel::HighTemperature => 2.0 * kt,
            NoiseKernel::Quantum => {
                let x = w / (2.0 * kt);
                let x_coth = if x < 1e-4 {
                    1.0 + x * x / 3.0 - x.powi(4) / 45.0
                } else {
                    x / x.tanh()
                };
                2.0 * kt * x_coth
            }
        };
        std::f64::consts::FRAC_1_PI * self.kappa * al * al / (al * al + w * w) * w_coth
    }

    /// Split point between the panelled bulk and the asymptotic tail.
    fn split_point(&self, t: f64) -> f64 {
        (20.0 * self.d.alpha).max(200.0 / t)
    }

    fn breakpoints(&self, t: f64) -> Vec<f64> {
        let w_max = self.split_point(t);
        let max_width = std::f64::consts::PI / t;
        let mut breaks = vec![0.0];
        let mut w = 1e-3_f64.min(0.1 / t);
        while w < w_max {
            breaks.push(w);
            w *= 2.0;
        }
        breaks.push(w_max);
        let mut out = vec![0.0];
        for win in breaks.windows(2) {
            let n = ((win[1] - win[0]) / max_width).ceil().clamp(1.0, 65536.0) as usize;
            for j in 1..=n {
                out.push(win[0] + (win[1] - win[0]) * j as f64 / n as f64);
            }
        }
        out
    }

    /// Large-w split of the integrands. With F = P e^{iwt} - Q, each
    /// integrand is smooth(w) + Re(G(w) e^{iwt}); returns (smooth, G).
    fn tail_parts(&self, w: f64, t: f64, a_t: f64, kernel: NoiseKernel) -> ([f64; 3], [Complex64; 3]) {
        let iw = Complex64::new(0.0, w);
        let (mut pb, mut qb) = (Complex64::new(0.0, 0.0), Complex64::new(0.0, 0.0));
        for (&s, &c) in self.poles.iter().zip(&self.coefs) {
            let zi = 1.0 / (s + iw);
            pb += c * s * (s * t).exp() * zi;
            qb += c * s * zi;
        }
        // 1/z_k = (1 - s_k/z_k)/(iw) with sum_k c_k = 0 and sum_k c_k e^{s_k t} = A(t)
        let pa = (a_t - pb) / iw;
        let qa = -qb / iw;
        let wt = self.noise_weight(w, kernel);
        (
            [
                wt * (pa.norm_sqr() + qa.norm_sqr()),
                wt * (pb.norm_sqr() + qb.norm_sqr()),
                wt * 2.0 * a_t * pa.re,
            ],
            [
                -2.0 * wt * pa * qa.conj(),
                -2.0 * wt * pb * qb.conj(),
                -2.0 * wt * a_t * qa.conj(),
            ],
        )
    }

    /// X, Y, Xdot at oscillator time `t`.
    ///
    /// Panels of width at most pi/t cover [0, W]; beyond W the smooth part
    /// is integrated after mapping w = W/u and the oscillating part by two
    /// terms of integration by parts, whose remainder is O(G''/t^3).
    pub fn noise_integrals(&self, t: f64, opts: &NoiseOptions) -> Result<(f64, f64, f64)> {
        check_time(t)?;
        if t == 0.0 {
            return Ok((0.0, 0.0, 0.0));
        }
        let (a_t, _, _) = self.response(t);
        let kernel = opts.kernel;
        let bulk = integrate(
            |w| {
                let (fa, fb) = self.response_transform(w, t);
                let wt = self.noise_weight(w, kernel);
                let phase = Complex64::from_polar(1.0, w * t);
                [
                    wt * fa.norm_sqr(),
                    wt * fb.norm_sqr(),
                    wt * 2.0 * (fa.conj() * phase).re * a_t,
                ]
            },
            &self.breakpoints(t),
            &opts.quad,
        )?;
        let big_w = self.split_point(t);
        let scale = bulk.value.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
        let smooth = integrate(
            |u: f64| {
                let w = big_w / u;
                let jac = big_w / (u * u);
                let (s, _) = self.tail_parts(w, t, a_t, kernel);
                [s[0] * jac, s[1] * jac, s[2] * jac]
            },
            &[0.0, 1.0],
            &QuadOptions { abs_tol: opts.quad.abs_tol.max(opts.quad.rel_tol * scale), ..opts.quad },
        )?;
        let h = 1e-3 * big_w;
        let (_, g0) = self.tail_parts(big_w, t, a_t, kernel);
        let (_, gp) = self.tail_parts(big_w + h, t, a_t, kernel);
        let (_, gm) = self.tail_parts(big_w - h, t, a_t, kernel);
        let phase = Complex64::from_polar(1.0, big_w * t);
        let i = Complex64::i();
        let mut out = [0.0; 3];
        for k in 0..3 {
            let dg = (gp[k] - gm[k]) / (2.0 * h);
            let osc = phase * (i * g0[k] / t - dg / (t * t));
            out[k] = bulk.value[k] + smooth.value[k] + osc.re;
        }
        Ok((out[0], out[1], out[2]))
    }

    pub fn noise_moments(&self, t: f64, opts: &NoiseOptions) -> Result<NoiseMoments> {
        let (x, y, xdot) = self.noise_integrals(t, opts)?;
        let (lam_plus, lam_minus, s) = diagonalize_noise(x, xdot, y);
        Ok(NoiseMoments { t, x, y, xdot, lam_plus, lam_minus, s })
    }

    /// Exact channel at oscillator time `t`, in oscillator units.
    pub fn channel(&self, t: f64, opts: &NoiseOptions) -> Result<GaussianChannel> {
        check_time(t)?;
        let tc = self.trajectory_unchecked(t);
        let nm = self.noise_moments(t, opts)?;
        Ok(GaussianChannel::new(tc.transition(), nm.noise_matrix()))
    }

    /// Factorized form of the exact channel at oscillator time `t`.
    pub fn factorized(&self, t: f64, opts: &NoiseOptions) -> Result<ExactFactors> {
        let tc = self.trajectory(t)?;
        let nm = self.noise_moments(t, opts)?;
        Ok(ExactFactors::build(&tc, &nm))
    }
}

/// The five factors of the exact propagator, each a Gaussian channel in
/// oscillator units, listed in the order they act.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct ExactFactors {
    /// Normalized metaplectic evolution: trans = P_S T / R.
    pub evolution: GaussianChannel,
    /// Rotation into the noise eigenbasis: trans = P_S^{-1}.
    pub frame: GaussianChannel,
    /// Smearing along the first noise axis with weight lam_plus / R^2.
    pub q_noise: GaussianChannel,
    /// Smearing along the second noise axis with weight lam_minus / R^2.
    pub p_noise: GaussianChannel,
    /// Phase-space dilation by R.
    pub dilation: GaussianChannel,
}

impl ExactFactors {
    pub fn build(tc: &TrajectoryCoeffs, nm: &NoiseMoments) -> Self {
        let s = nm.s;
        let perm = Mat2::new(s[(0, 1)], s[(1, 1)], s[(0, 0)], s[(1, 0)]);
        let r = tc.r;
        let r2 = r * r;
        let s1 = [s[(0, 0)], s[(1, 0)]];
        let s2 = [s[(0, 1)], s[(1, 1)]];
        Self {
            evolution: GaussianChannel::unitary((perm * tc.transition()).scale(1.0 / r)),
            frame: GaussianChannel::unitary(perm.inverse()),
            q_noise: GaussianChannel::additive(Sym2::outer(s1).scale(nm.lam_plus / r2)),
            p_noise: GaussianChannel::additive(Sym2::outer(s2).scale(nm.lam_minus / r2)),
            dilation: GaussianChannel::unitary(Mat2::identity().scale(r)),
        }
    }

    pub fn channels(&self) -> [GaussianChannel; 5] {
        [self.evolution, self.frame, self.q_noise, self.p_noise, self.dilation]
    }
}

/// Trajectory coefficients at raw time `t`.
pub fn trajectory(p: &PhysParams, t: f64) -> Result<TrajectoryCoeffs> {
    check_time(t)?;
    ExactDynamics::new(p)?.trajectory(p.to_internal_time(t))
}

/// Noise integrals at raw time `t` with the quantum kernel.
pub fn noise_moments(p: &PhysParams, t: f64) -> Result<NoiseMoments> {
    check_time(t)?;
    ExactDynamics::new(p)?.noise_moments(p.to_internal_time(t), &NoiseOptions::default())
}

/// Exact reduced channel at raw time `t`, in raw units.
pub fn exact_channel(p: &PhysParams, t: f64) -> Result<GaussianChannel> {
    exact_channel_with(p, t, &NoiseOptions::default())
}

pub fn exact_channel_with(p: &PhysParams, t: f64, opts: &NoiseOptions) -> Result<GaussianChannel> {
    check_time(t)?;
    Ok(ExactDynamics::new(p)?
        .channel(p.to_internal_time(t), opts)?
        .to_raw(p))
}

/// The factors of the exact channel at raw time `t`, in raw units and in the
/// order they act.
pub fn factorized_channel(p: &PhysParams, t: f64) -> Result<Vec<GaussianChannel>> {
    check_time(t)?;
    let f = ExactDynamics::new(p)?.factorized(p.to_internal_time(t), &NoiseOptions::default())?;
    Ok(f.channels().iter().map(|c| c.to_raw(p)).collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::phase_space::compose_all;

    fn dyn_(g: f64, al: f64, kt: f64) -> ExactDynamics {
        ExactDynamics::new(&PhysParams::oscillator_units(g, al, kt)).unwrap()
    }

    #[test]
    fn initial_values() {
        let e = dyn_(0.1, 100.0, 10.0);
        let (a, ad, add) = e.response(0.0);
        assert_eq!(a, 0.0);
        assert!((ad - 1.0).abs() < 1e-14);
        assert!(add.abs() < 1e-14);
    }

    #[test]
    fn closed_form_matches_explicit_expression() {
        let (g, al) = (0.1, 100.0);
        let e = dyn_(g, al, 10.0);
        let om = (al / (al - 2.0 * g) - g * g).sqrt();
        let den = (al - 3.0 * g).powi(2) + om * om;
        let k = (al - 2.0 * g).powi(2) + om * om - g * g;
        for t in [0.3, 2.0, 7.5] {
            let explicit = (2.0 * g * (((2.0 * g - al) * t).exp() - (-g * t).exp() * (om * t).cos())
                + k / om * (-g * t).exp() * (om * t).sin())
                / den;
            assert!((e.response(t).0 - explicit).abs() < 1e-14);
        }
    }

    #[test]
    fn derivatives_are_consistent() {
        let e = dyn_(0.1, 20.0, 1.0);
        let t = 1.3;
        let mut prev = f64::INFINITY;
        for h in [1e-2, 5e-3, 2.5e-3] {
            let fd = (e.response(t + h).0 - e.response(t - h).0) / (2.0 * h);
            let fdd = (e.response(t + h).1 - e.response(t - h).1) / (2.0 * h);
            let err = (fd - e.response(t).1).abs() + (fdd - e.response(t).2).abs();
            assert!(err < prev / 3.0, "centered differences must converge at second order");
            prev = err;
        }
    }

    #[test]
    fn response_transform_matches_simpson() {
        let e = dyn_(0.05, 50.0, 10.0);
        for (t, w) in [(0.7, 0.0), (0.7, 0.3), (0.7, 5.0), (0.7, 80.0), (1e-3, 30.0), (1e-3, 900.0), (1e-3, 5e4), (1e-6, 1e5), (1e-6, 3e6)] {
            let n = 20000;
            let h = t / n as f64;
            let mut sa = Complex64::new(0.0, 0.0);
            let mut sb = sa;
            for j in 0..=n {
                let s = j as f64 * h;
                let wj = if j == 0 || j == n { 1.0 } else if j % 2 == 1 { 4.0 } else { 2.0 };
                let (a, ad, _) = e.response(s);
                let ph = Complex64::from_polar(1.0, w * s);
                sa += ph * a * wj;
                sb += ph * ad * wj;
            }
            let (fa, fb) = e.response_transform(w, t);
            assert!((fa - sa * h / 3.0).norm() < 1e-9 * fa.norm(), "{t} {w}");
            assert!((fb - sb * h / 3.0).norm() < 1e-9 * fb.norm(), "{t} {w}");
        }
    }

    #[test]
    fn diagonalization_conventions() {
        let (lp, lm, s) = diagonalize_noise(0.7, 0.0, 0.7);
        assert_eq!((lp, lm), (0.7, 0.7));
        let h = std::f64::consts::FRAC_1_SQRT_2;
        assert!((s - Mat2::new(h, h, h, -h)).max_abs() < 1e-15);

        let (lp, lm, s) = diagonalize_noise(0.0, 0.0, 1.0);
        assert_eq!((lp, lm), (1.0, 0.0));
        assert_eq!(s, Mat2::new(0.0, 1.0, 1.0, -0.0));
        assert_eq!(s.det(), -1.0);
    }

    #[test]
    fn diagonalization_matches_explicit_columns() {
        // first column (b, c - a + r)/norm, negated when b < 0
        for (a, b, c) in [(0.3, 0.8, 1.1), (1.1, -0.4, 0.2), (2.0, 1e-3, 0.5), (0.5, -2.0, 0.5)] {
            let (_, _, s) = diagonalize_noise(a, b, c);
            let r = ((c - a) * (c - a) + b * b).sqrt();
            let n = (2.0 * (r * r + (c - a) * r)).sqrt();
            let sign = if b >= 0.0 { 1.0 } else { -1.0 };
            // the explicit normalization loses digits when c < a and |b| is small
            assert!((s[(0, 0)] - sign * b / n).abs() < 1e-9);
            assert!((s[(1, 0)] - sign * (c - a + r) / n).abs() < 1e-9);
            let n2 = (2.0 * (r * r - (c - a) * r)).sqrt();
            assert!((s[(0, 1)] - b / n2).abs() < 1e-9);
            assert!((s[(1, 1)] - (c - a - r) / n2).abs() < 1e-9);
        }
    }

    #[test]
    fn zero_time_is_identity() {
        let e = dyn_(0.05, 50.0, 10.0);
        let ch = e.channel(0.0, &NoiseOptions::default()).unwrap();
        assert_eq!(ch.trans, Mat2::identity());
        assert_eq!(ch.noise, Sym2::zero());
        let nm = e.noise_moments(0.0, &NoiseOptions::default()).unwrap();
        assert_eq!((nm.lam_plus, nm.lam_minus), (0.0, 0.0));
    }

    #[test]
    fn factors_compose_to_channel() {
        let e = dyn_(0.1, 30.0, 3.0);
        let opts = NoiseOptions::default();
        for t in [0.05, 0.8, 3.0] {
            let f = e.factorized(t, &opts).unwrap();
            let full = e.channel(t, &opts).unwrap();
            let composed = compose_all(&f.channels());
            assert!(composed.max_abs_diff(&full) < 1e-12);
        }
    }

    #[test]
    fn overdamped_or_low_cutoff_is_rejected() {
        let p = PhysParams::oscillator_units(1.0, 1.5, 1.0);
        assert!(matches!(ExactDynamics::new(&p), Err(Error::InvalidRegime(_))));
    }
}
