//! Gaussian states and affine phase-space channels of one bosonic mode.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::mat2::{Mat2, Sym2};
use crate::params::PhysParams;

/// Positivity tolerance on det(cov) - hbar^2/4 (in units of hbar^2).
pub const TOL_PHYS: f64 = 1e-10;
/// Tolerance for algebraic identities.
pub const TOL_ALG: f64 = 1e-9;

/// First moments and symmetrized covariance of a single mode.
///
/// Unphysical covariances are representable on purpose: they are how a
/// positivity violation shows up at the Gaussian level.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(from = "FlatState", into = "FlatState")]
pub struct GaussianState {
    pub mean: [f64; 2],
    pub cov: Sym2,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct FlatState {
    mean_q: f64,
    mean_p: f64,
    cov_qq: f64,
    cov_pp: f64,
    cov_qp: f64,
}

impl From<FlatState> for GaussianState {
    fn from(f: FlatState) -> Self {
        GaussianState {
            mean: [f.mean_q, f.mean_p],
            cov: Sym2::new(f.cov_qq, f.cov_pp, f.cov_qp),
        }
    }
}

impl From<GaussianState> for FlatState {
    fn from(s: GaussianState) -> Self {
        FlatState {
            mean_q: s.mean[0],
            mean_p: s.mean[1],
            cov_qq: s.cov.qq,
            cov_pp: s.cov.pp,
            cov_qp: s.cov.qp,
        }
    }
}

impl GaussianState {
    pub fn new(mean: [f64; 2], cov: Sym2) -> Self {
        Self { mean, cov }
    }

    /// Ground state of the oscillator: cov = diag(hbar/2m omega, m omega hbar/2).
    pub fn vacuum(p: &PhysParams) -> Self {
        Self::new(
            [0.0, 0.0],
            Sym2::new(
                p.hbar / (2.0 * p.mass * p.omega),
                p.mass * p.omega * p.hbar / 2.0,
                0.0,
            ),
        )
    }

    /// Pure squeezed vacuum: variance along angle `phi` scaled by e^{-2r},
    /// orthogonal quadrature by e^{2r} (in oscillator units).
    pub fn squeezed_vacuum(p: &PhysParams, r: f64, phi: f64) -> Self {
        let (c, s) = (phi.cos(), phi.sin());
        let rot = Mat2::new(c, -s, s, c);
        let cov = Sym2::new(0.5 * (-2.0 * r).exp(), 0.5 * (2.0 * r).exp(), 0.0).congruence(&rot);
        Self::new([0.0, 0.0], p.sym_to_raw(&cov))
    }

    pub fn to_internal(&self, p: &PhysParams) -> Self {
        Self::new(p.mean_to_internal(self.mean), p.sym_to_internal(&self.cov))
    }

    pub fn to_raw(&self, p: &PhysParams) -> Self {
        Self::new(p.mean_to_raw(self.mean), p.sym_to_raw(&self.cov))
    }
}

/// Affine map mean -> T mean, cov -> T cov T^T + N.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(from = "FlatChannel", into = "FlatChannel")]
pub struct GaussianChannel {
    pub trans: Mat2,
    pub noise: Sym2,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct FlatChannel {
    trans: [f64; 4],
    noise: [f64; 4],
}

impl From<FlatChannel> for GaussianChannel {
    fn from(f: FlatChannel) -> Self {
        GaussianChannel {
            trans: Mat2::from_row_major(f.trans),
            noise: Sym2::from_mat(&Mat2::from_row_major(f.noise)),
        }
    }
}

impl From<GaussianChannel> for FlatChannel {
    fn from(c: GaussianChannel) -> Self {
        FlatChannel {
            trans: c.trans.to_row_major(),
            noise: c.noise.to_mat().to_row_major(),
        }
    }
}

impl GaussianChannel {
    pub fn new(trans: Mat2, noise: Sym2) -> Self {
        Self { trans, noise }
    }

    pub fn identity() -> Self {
        Self::new(Mat2::identity(), Sym2::zero())
    }

    pub fn unitary(trans: Mat2) -> Self {
        Self::new(trans, Sym2::zero())
    }

    pub fn additive(noise: Sym2) -> Self {
        Self::new(Mat2::identity(), noise)
    }

    pub fn to_raw(&self, p: &PhysParams) -> Self {
        Self::new(p.trans_to_raw(&self.trans), p.sym_to_raw(&self.noise))
    }

    pub fn to_internal(&self, p: &PhysParams) -> Self {
        Self::new(p.trans_to_internal(&self.trans), p.sym_to_internal(&self.noise))
    }

    /// Smallest eigenvalue of the Hermitian matrix N + (i hbar/2)(1 - det T) J.
    ///
    /// The channel maps every physical Gaussian state to a physical one iff
    /// this is non-negative.
    pub fn cp_margin(&self, hbar: f64) -> f64 {
        let off = 0.5 * hbar * (1.0 - self.trans.det());
        let n = &self.noise;
        let half_tr = 0.5 * n.trace();
        let r = (0.25 * (n.qq - n.pp).powi(2) + n.qp * n.qp + off * off).sqrt();
        let hi = half_tr + r;
        let det = n.det() - off * off;
        if hi > 0.0 {
            det / hi
        } else {
            half_tr - r
        }
    }

    pub fn is_cp(&self, hbar: f64, tol: f64) -> bool {
        self.cp_margin(hbar) >= -tol
    }

    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        (self.trans - other.trans)
            .max_abs()
            .max((self.noise - other.noise).max_abs())
    }
}

pub fn apply_channel(ch: &GaussianChannel, s: &GaussianState) -> GaussianState {
    GaussianState::new(ch.trans.apply(s.mean), s.cov.congruence(&ch.trans) + ch.noise)
}

/// The channel that applies `inner` first, then `outer`.
pub fn compose(outer: &GaussianChannel, inner: &GaussianChannel) -> GaussianChannel {
    GaussianChannel::new(
        outer.trans * inner.trans,
        inner.noise.congruence(&outer.trans) + outer.noise,
    )
}

/// Compose a sequence of channels, the first element acting first.
pub fn compose_all<'a>(chs: impl IntoIterator<Item = &'a GaussianChannel>) -> GaussianChannel {
    chs.into_iter()
        .fold(GaussianChannel::identity(), |acc, c| compose(c, &acc))
}

/// det(cov) - hbar^2/4; non-negative iff the Gaussian state is a density operator.
pub fn physicality_deficit(s: &GaussianState, p: &PhysParams) -> f64 {
    s.cov.det() - 0.25 * p.hbar * p.hbar
}

/// -k ln Tr rho^2 with Tr rho^2 = hbar / (2 sqrt(det cov)).
pub fn linear_entropy(s: &GaussianState, p: &PhysParams, tol: f64) -> Result<f64> {
    let deficit = physicality_deficit(s, p);
    if deficit < -tol * p.hbar * p.hbar {
        return Err(Error::NonPhysicalState { deficit });
    }
    let det = s.cov.det().max(0.25 * p.hbar * p.hbar);
    Ok(p.kb * (2.0 * det.sqrt() / p.hbar).ln())
}

/// Coefficients of -(A{q,.,q} + B{p,.,p} + C{q,.,p} + D{p,.,q}) with
/// {X, rho, Y} = Y X^dag rho + rho Y X^dag - 2 X^dag rho Y.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GeneratorCoeffs {
    pub a: Complex64,
    pub b: Complex64,
    pub c: Complex64,
    pub d: Complex64,
}

impl GeneratorCoeffs {
    /// Dissipative part of the quantum Brownian generator, raw units.
    /// With `gao` the term -Gamma {p,.,p} / 8 m k T is included.
    pub fn quantum_brownian(p: &PhysParams, gao: bool) -> Self {
        let g = p.gamma;
        let h = p.hbar;
        let mkt = p.mass * p.kt();
        Self {
            a: Complex64::new(2.0 * g * mkt / (h * h), 0.0),
            b: Complex64::new(if gao { g / (8.0 * mkt) } else { 0.0 }, 0.0),
            c: Complex64::new(0.0, -g / (2.0 * h)),
            d: Complex64::new(0.0, g / (2.0 * h)),
        }
    }

    /// Drift rate and diffusion that the dissipator contributes to the moment
    /// equations: d<z>/dt gets `-rate * <z>`, dSigma/dt gets `-2 rate Sigma + D`.
    ///
    /// Returns complex values; they are real when C - D is imaginary and
    /// C + D is real.
    pub fn moment_action(&self, hbar: f64) -> (Complex64, [Complex64; 3]) {
        let i = Complex64::i();
        let rate = i * hbar * (self.c - self.d);
        let h2 = hbar * hbar;
        let diffusion = [
            2.0 * h2 * self.b,
            2.0 * h2 * self.a,
            -h2 * (self.c + self.d),
        ];
        (rate, diffusion)
    }
}

/// Whether the generator is a sum of -{a_j q + b_j p, ., a_j q + b_j p} terms:
/// A, B real non-negative, C = D*, and A B >= |C|^2.
pub fn lindblad_representable(c: &GeneratorCoeffs, tol: f64) -> bool {
    let scale = [c.a, c.b, c.c, c.d]
        .iter()
        .fold(f64::MIN_POSITIVE, |m, z| m.max(z.norm()));
    let t = tol * scale;
    c.a.im.abs() <= t
        && c.b.im.abs() <= t
        && c.a.re >= -t
        && c.b.re >= -t
        && (c.c - c.d.conj()).norm() <= t
        && c.a.re * c.b.re - c.c.norm_sqr() >= -t * scale
}

#[cfg(test)]
mod tests {
    use super::*;

    fn p1() -> PhysParams {
        PhysParams::oscillator_units(0.1, 50.0, 10.0)
    }

    #[test]
    fn identity_channel_is_neutral() {
        let s = GaussianState::new([0.3, -1.0], Sym2::new(2.0, 0.7, 0.1));
        assert_eq!(apply_channel(&GaussianChannel::identity(), &s), s);
        let ch = GaussianChannel::new(Mat2::new(1.0, 2.0, 0.5, 3.0), Sym2::new(0.1, 0.2, 0.05));
        assert_eq!(compose(&GaussianChannel::identity(), &ch), ch);
        assert_eq!(compose(&ch, &GaussianChannel::identity()), ch);
    }

    #[test]
    fn quarter_turn_exchanges_variances() {
        let p = PhysParams { mass: 2.0, omega: 3.0, ..p1() };
        let vac = GaussianState::vacuum(&p);
        // q -> p/(m omega), p -> -m omega q
        let rot = Mat2::new(0.0, 1.0 / (p.mass * p.omega), -p.mass * p.omega, 0.0);
        let out = apply_channel(&GaussianChannel::unitary(rot), &vac);
        assert!((out.cov.qq - vac.cov.pp / (p.mass * p.omega).powi(2)).abs() < 1e-15);
        assert!((out.cov.qq - vac.cov.qq).abs() < 1e-15);
    }

    #[test]
    fn additive_noise_adds() {
        let s = GaussianState::new([0.0, 0.0], Sym2::new(1.0, 0.4, 0.0));
        let out = apply_channel(&GaussianChannel::additive(Sym2::new(0.0, 0.25, 0.0)), &s);
        assert_eq!(out.cov.pp, 0.65);
    }

    #[test]
    fn deficit_examples() {
        let p = p1();
        let vac = GaussianState::vacuum(&p);
        assert!(physicality_deficit(&vac, &p).abs() < 1e-16);
        let thermal = GaussianState::new([0.0; 2], vac.cov.scale(2.0));
        assert!((physicality_deficit(&thermal, &p) - 0.75).abs() < 1e-15);
        for r in [0.1, 1.0, 2.3] {
            let sq = GaussianState::squeezed_vacuum(&p, r, 0.4);
            assert!(physicality_deficit(&sq, &p).abs() < 1e-12);
        }
    }

    #[test]
    fn entropy_examples() {
        let p = p1();
        let vac = GaussianState::vacuum(&p);
        assert!(linear_entropy(&vac, &p, TOL_PHYS).unwrap().abs() < 1e-15);
        let e = std::f64::consts::E;
        let s = GaussianState::new([0.0; 2], Sym2::new(0.5 * e, 0.5 * e, 0.0));
        assert!((linear_entropy(&s, &p, TOL_PHYS).unwrap() - 1.0).abs() < 1e-14);
        let bad = GaussianState::new([0.0; 2], Sym2::new(0.1, 0.5, 0.0));
        assert!(matches!(
            linear_entropy(&bad, &p, TOL_PHYS),
            Err(Error::NonPhysicalState { .. })
        ));
    }

    #[test]
    fn lindblad_criterion_examples() {
        let one = Complex64::new(1.0, 0.0);
        let zero = Complex64::new(0.0, 0.0);
        let diag = GeneratorCoeffs { a: one, b: one, c: zero, d: zero };
        assert!(lindblad_representable(&diag, TOL_ALG));

        let p = PhysParams { mass: 1.7, hbar: 0.9, ..p1() };
        let bare = GeneratorCoeffs::quantum_brownian(&p, false);
        assert!(!lindblad_representable(&bare, TOL_ALG));
        let gao = GeneratorCoeffs::quantum_brownian(&p, true);
        assert!(lindblad_representable(&gao, TOL_ALG));
        // the added coefficient sits exactly on the AB = |C|^2 boundary
        let gap = gao.a.re * gao.b.re - gao.c.norm_sqr();
        assert!(gap.abs() <= 1e-14 * gao.c.norm_sqr());
        // anything weaker fails
        let weaker = GeneratorCoeffs { b: gao.b * 0.99, ..gao };
        assert!(!lindblad_representable(&weaker, TOL_ALG));
    }

    #[test]
    fn json_schema_is_flat() {
        let s = GaussianState::new([1.0, 2.0], Sym2::new(3.0, 4.0, 5.0));
        let v = serde_json::to_value(s).unwrap();
        assert_eq!(v["mean_q"], 1.0);
        assert_eq!(v["cov_qp"], 5.0);
        let ch = GaussianChannel::new(Mat2::new(1.0, 2.0, 3.0, 4.0), Sym2::new(5.0, 6.0, 7.0));
        let v = serde_json::to_value(ch).unwrap();
        assert_eq!(v["trans"], serde_json::json!([1.0, 2.0, 3.0, 4.0]));
        assert_eq!(v["noise"], serde_json::json!([5.0, 7.0, 7.0, 6.0]));
        let back: GaussianChannel = serde_json::from_value(v).unwrap();
        assert_eq!(back, ch);
    }
}
