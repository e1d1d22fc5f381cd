//! Checks of operator identities in the Fock representation.

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::Serialize;

use super::fock::{dissipator, frob, interior_levels, qbm_generator, CMat, FockBasis, FockDensity, FockSuperop, Superop};
use crate::error::{Error, Result};
use crate::mat2::{Mat2, Sym2};
use crate::outer::outer_flow;
use crate::params::PhysParams;
use crate::phase_space::{GaussianChannel, GaussianState};
use crate::wei_norman::{additive_coeffs, wei_norman_factors, LambdaSource, WeiNormanFactors};

/// Which operator B the smearing exp(-xi{B,.,B}) is built from:
/// B = x q + y p.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct LinearOp {
    pub x: f64,
    pub y: f64,
}

impl LinearOp {
    pub const Q: Self = Self { x: 1.0, y: 0.0 };
    pub const P: Self = Self { x: 0.0, y: 1.0 };

    pub fn matrix(&self, b: &FockBasis) -> CMat {
        b.q.mapv(|z| z * self.x) + b.p.mapv(|z| z * self.y)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct SmearingReport {
    /// Frobenius norm of the difference on the interior block.
    pub residual: f64,
    /// Difference between the quadrature at step h and h/2.
    pub quadrature_error: f64,
    /// Smallest eigenvalue of the quadrature result.
    pub mixture_min_eigenvalue: f64,
}

/// Absolute accuracy demanded of the u-quadrature.
pub const SMEARING_QUAD_TOL: f64 = 1e-10;

/// exp(-xi{B,.,B}) rho computed as a superoperator exponential and as the
/// Gaussian average over u of e^{-iuB} rho e^{iuB} (symmetrized in u).
pub fn verify_smearing_identity(b: &FockBasis, op: LinearOp, xi: f64, rho: &FockDensity) -> Result<SmearingReport> {
    if !(xi > 0.0 && xi.is_finite()) {
        return Err(Error::InvalidParams(format!("xi must be positive, got {xi}")));
    }
    let bm = op.matrix(b);
    let direct = Superop::bracket(&bm, &bm).scale_re(-xi).exp_action(&rho.mat, 1.0);

    let d = b.dim;
    let herm = DMatrix::from_fn(d, d, |i, j| bm[[i, j]]);
    let eig = herm.symmetric_eigen();
    let v = CMat::from_shape_fn((d, d), |(i, j)| eig.eigenvectors[(i, j)]);
    let vh = v.t().mapv(|z| z.conj());
    let lam: Vec<f64> = eig.eigenvalues.iter().cloned().collect();
    let spread = lam.iter().cloned().fold(f64::MIN, f64::max) - lam.iter().cloned().fold(f64::MAX, f64::min);
    let rot = vh.dot(&rho.mat).dot(&v);

    let mixture = |h: f64| -> CMat {
        let umax = (4.0 * xi * 50.0).sqrt();
        let n = (umax / h).ceil() as i64;
        let norm = (std::f64::consts::PI / xi).sqrt() / (2.0 * std::f64::consts::PI);
        let mut acc = CMat::zeros((d, d));
        for k in -n..=n {
            let u = k as f64 * h;
            let w = h * norm * (-u * u / (4.0 * xi)).exp();
            for i in 0..d {
                for j in 0..d {
                    // average of the +u and -u conjugations
                    let ph = (u * (lam[i] - lam[j])).cos();
                    acc[[i, j]] += rot[[i, j]] * (w * ph);
                }
            }
        }
        v.dot(&acc).dot(&vh)
    };
    // trapezoid aliasing error ~ exp(-xi (2 pi / h - spread)^2)
    let h = 2.0 * std::f64::consts::PI / (spread + (60.0 / xi).sqrt());
    let fine = mixture(0.5 * h);
    let coarse = mixture(h);
    let quadrature_error = frob(&(&fine - &coarse));
    if quadrature_error > SMEARING_QUAD_TOL {
        return Err(Error::QuadratureFailure { estimate: quadrature_error, tolerance: SMEARING_QUAD_TOL });
    }
    let k = interior_levels(d);
    let diff = (&direct - &fine).slice(ndarray::s![..k, ..k]).to_owned();
    Ok(SmearingReport {
        residual: frob(&diff),
        quadrature_error,
        mixture_min_eigenvalue: FockDensity { mat: fine }.min_eigenvalue(),
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct DilationReport {
    pub tau: f64,
    /// Largest moment mismatch against the dilation rho -> e^{4 tau} W(e^{2 tau} z).
    pub residual: f64,
    /// Ratio of output to input first moments.
    pub mean_scale: f64,
    /// +1 if the means scale by e^{2 tau}, -1 if by e^{-2 tau}.
    pub sign: i32,
    pub trace_error: f64,
}

/// Applies exp[i tau ({q,.,p} - {p,.,q})] to a displaced squeezed state and
/// compares its moments with the rescaling predicted for a dilation.
pub fn verify_dilation_relation(tau: f64, d: usize) -> Result<DilationReport> {
    if (2.0 * tau).abs() > 0.2 {
        return Err(Error::InvalidParams(format!("|2 tau| must be at most 0.2, got {}", 2.0 * tau)));
    }
    let b = FockBasis::new(d)?;
    let cov = Sym2::new(0.4, 0.625, 0.0);
    let s0 = GaussianState::new([0.5, -0.3], cov);
    let rho = b.gaussian_density(&s0);
    rho.check_truncation()?;
    let g4 = Superop::bracket(&b.q, &b.p).minus(Superop::bracket(&b.p, &b.q));
    let out = FockDensity { mat: g4.scale(Complex64::new(0.0, tau)).exp_action(&rho.mat, 1.0) };
    out.check_truncation()?;
    let m = b.moments(&out);
    let trace_error = (out.trace() - 1.0).norm();
    let mean_scale = m.mean[0] / s0.mean[0];
    let sign = if tau == 0.0 || (mean_scale.ln() * tau) > 0.0 { 1 } else { -1 };
    let f = (2.0 * sign as f64 * tau).exp();
    let residual = [
        (m.mean[0] - f * s0.mean[0]).abs(),
        (m.mean[1] - f * s0.mean[1]).abs(),
        (m.cov - cov.scale(f * f)).max_abs(),
    ]
    .into_iter()
    .fold(0.0, f64::max);
    Ok(DilationReport { tau, residual, mean_scale, sign, trace_error })
}

/// Names of the algebra elements in table order.
pub const ALGEBRA_NAMES: [&str; 5] = ["L_H", "G1", "G2", "G3", "G4"];

/// One entry [X_row, X_col] = sum_k claimed[k] X_k of the commutator table.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TableEntry {
    pub row: usize,
    pub col: usize,
    pub claimed: [Complex64; 5],
}

/// The ten commutators of {L_H, G1, G2, G3, G4} in oscillator units
/// (a = b = -i/2, gamma = i Gamma/2).
pub fn algebra_table(gamma_rate: f64) -> Vec<TableEntry> {
    let i = Complex64::i();
    let z = Complex64::new(0.0, 0.0);
    let g = Complex64::new(0.0, 0.5 * gamma_rate);
    let ab = Complex64::new(0.0, -0.5) * Complex64::new(0.0, -0.5);
    let e = |row, col, c: [Complex64; 5]| TableEntry { row, col, claimed: c };
    vec![
        e(0, 1, [z, z, 4.0 * i * g, z, z]),
        e(0, 2, [z, 4.0 * i * g, z, -4.0 * i * ab, z]),
        e(0, 3, [z, z, 4.0 * i, z, z]),
        e(0, 4, [z; 5]),
        e(1, 2, [z; 5]),
        e(1, 3, [z; 5]),
        e(1, 4, [z, -4.0 * i, z, z, z]),
        e(2, 3, [z; 5]),
        e(2, 4, [z, z, -4.0 * i, z, z]),
        e(3, 4, [z, z, z, -4.0 * i, z]),
    ]
}

/// L_H, G1, G2, G3, G4 as superoperators, with {X, .} read as [X, .].
pub fn algebra_elements(b: &FockBasis, gamma_rate: f64) -> [Superop; 5] {
    let a = Complex64::new(0.0, -0.5);
    let g = Complex64::new(0.0, 0.5 * gamma_rate);
    let (q, p) = (&b.q, &b.p);
    let l_h = Superop::commutator(&q.dot(q))
        .scale(a)
        .plus(Superop::commutator(&p.dot(p)).scale(a))
        .plus(Superop::commutator(&(p.dot(q) + q.dot(p))).scale(-g));
    let qq = Superop::bracket(q, q);
    let pp = Superop::bracket(p, p);
    let pq = Superop::bracket(p, q);
    let qp = Superop::bracket(q, p);
    [
        l_h,
        qq.clone().scale(a).plus(pp.clone().scale(a)),
        qq.scale(a).minus(pp.scale(a)),
        pq.clone().plus(qp.clone()),
        qp.minus(pq),
    ]
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct AlgebraReport {
    pub dim: usize,
    /// (entry name, residual); relative where the claimed value is nonzero.
    pub entries: Vec<(String, f64)>,
    pub max_residual: f64,
}

pub fn verify_algebra_table(gamma_rate: f64, d: usize) -> Result<AlgebraReport> {
    verify_algebra_table_with(gamma_rate, d, &algebra_table(gamma_rate))
}

/// Evaluates each table entry on the interior block of levels [0, 0.8 d).
pub fn verify_algebra_table_with(gamma_rate: f64, d: usize, table: &[TableEntry]) -> Result<AlgebraReport> {
    if d < 20 {
        return Err(Error::DimensionTooSmall { dim: d, min: 20 });
    }
    let b = FockBasis::new(d)?;
    let el = algebra_elements(&b, gamma_rate);
    let k = interior_levels(d);
    let mut entries = Vec::new();
    let mut max_residual: f64 = 0.0;
    for t in table {
        let comm = el[t.row].bracket_with(&el[t.col]);
        let claimed = el
            .iter()
            .zip(t.claimed)
            .filter(|(_, c)| c.norm() > 0.0)
            .fold(Superop::zero(d), |acc, (x, c)| acc.plus(x.clone().scale(c)));
        let cm = claimed.interior_matrix(k);
        let diff = comm.interior_matrix(k) - &cm;
        let n = frob(&cm);
        let r = if n > 0.0 { frob(&diff) / n } else { frob(&diff) };
        max_residual = max_residual.max(r);
        entries.push((format!("[{}, {}]", ALGEBRA_NAMES[t.row], ALGEBRA_NAMES[t.col]), r));
    }
    Ok(AlgebraReport { dim: d, entries, max_residual })
}

/// Quadratic Hamiltonian whose Heisenberg flow over unit time is the
/// symplectic map `t`: H = (c_qq q^2 + c_pp p^2 + c_qp (qp + pq)) / 2.
pub fn metaplectic_hamiltonian(b: &FockBasis, t: &Mat2) -> Result<CMat> {
    let f = t.log_symplectic()?;
    let (c_qp, c_pp, c_qq) = (f[(0, 0)], f[(0, 1)], -f[(1, 0)]);
    let (q, p) = (&b.q, &b.p);
    Ok(q.dot(q).mapv(|z| 0.5 * c_qq * z) + p.dot(p).mapv(|z| 0.5 * c_pp * z) + (q.dot(p) + p.dot(q)).mapv(|z| 0.5 * c_qp * z))
}

/// Applies a Gaussian channel with det T = 1 (oscillator units) to a Fock
/// density: the metaplectic unitary of T followed by the noise N.
pub fn apply_gaussian_channel(b: &FockBasis, ch: &GaussianChannel, rho: &CMat) -> Result<CMat> {
    if (ch.trans.det() - 1.0).abs() > 1e-9 {
        return Err(Error::InvalidParams(format!(
            "channel transition matrix must have det 1, got {}",
            ch.trans.det()
        )));
    }
    let h = metaplectic_hamiltonian(b, &ch.trans)?;
    let u = Superop::hamiltonian(&h).exp_action(rho, 1.0);
    Ok(dissipator(b, &additive_coeffs(&ch.noise)).exp_action(&u, 1.0))
}

/// Moment derivatives at t = 0 and moments along a time grid: Fock
/// evolution under L against the moment flow and `outer_channel`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct FlowReport {
    /// Largest mismatch of d<z>/dt and dSigma/dt at t = 0.
    pub derivative_residual: f64,
    /// Largest moment mismatch along the time grid.
    pub evolution_residual: f64,
    pub min_eigenvalue: f64,
}

pub fn verify_outer_flow(
    gamma_rate: f64,
    kt: f64,
    gao: bool,
    d: usize,
    s0: &GaussianState,
    times: &[f64],
) -> Result<FlowReport> {
    let b = FockBasis::new(d)?;
    let l = qbm_generator(&b, gamma_rate, kt, gao);
    let p = PhysParams::oscillator_units(gamma_rate, 1e3, kt);
    let flow = outer_flow(&p, gao);
    let rho = b.gaussian_density(s0);
    rho.check_truncation()?;

    let dr = l.apply(&rho.mat);
    let ex = |m: &CMat, op: &CMat| m.dot(op).diag().sum().re;
    let (q, pm) = (&b.q, &b.p);
    let dq = ex(&dr, q);
    let dp = ex(&dr, pm);
    let m = s0.mean;
    let dqq = ex(&dr, &q.dot(q)) - 2.0 * m[0] * dq;
    let dpp = ex(&dr, &pm.dot(pm)) - 2.0 * m[1] * dp;
    let dqp = 0.5 * ex(&dr, &(q.dot(pm) + pm.dot(q))) - m[0] * dp - m[1] * dq;
    let f = flow.drift;
    let pred_mean = f.apply(m);
    let fs = f * s0.cov.to_mat();
    let pred_cov = Sym2::from_mat(&(fs + fs.transpose())) + flow.diffusion;
    let derivative_residual = [
        (dq - pred_mean[0]).abs(),
        (dp - pred_mean[1]).abs(),
        (dqq - pred_cov.qq).abs(),
        (dpp - pred_cov.pp).abs(),
        (dqp - pred_cov.qp).abs(),
    ]
    .into_iter()
    .fold(0.0, f64::max);

    let mut evolution_residual: f64 = 0.0;
    let mut min_eigenvalue = f64::INFINITY;
    let mut cur = rho.mat.clone();
    let mut t_prev = 0.0;
    for &t in times {
        cur = l.exp_action(&cur, t - t_prev);
        t_prev = t;
        let out = FockDensity { mat: cur.clone() };
        out.check_truncation()?;
        min_eigenvalue = min_eigenvalue.min(out.min_eigenvalue());
        let got = b.moments(&out);
        let want = crate::phase_space::apply_channel(&flow.channel(t), s0);
        let r = (got.cov - want.cov)
            .max_abs()
            .max((got.mean[0] - want.mean[0]).abs())
            .max((got.mean[1] - want.mean[1]).abs());
        evolution_residual = evolution_residual.max(r);
    }
    Ok(FlowReport { derivative_residual, evolution_residual, min_eigenvalue })
}

/// How the middle factor is read off the explicit (C, D, E) form.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Reading {
    pub name: &'static str,
    /// Overall prefactor of (C, D, E) in units of -4 kT gamma.
    pub prefactor: Complex64,
    /// Multiplier of i lam in the {p,.,p} coefficient.
    pub lambda_factor: f64,
}

impl Reading {
    /// The reading used throughout: prefactor -4 kT gamma, term i lam.
    pub const RESOLVED: Self = Self { name: "prefactor -4kT*gamma, i*lambda", prefactor: Complex64::new(1.0, 0.0), lambda_factor: 1.0 };

    /// Alternatives kept for the record.
    pub fn candidates(f: &WeiNormanFactors, alpha: f64) -> Vec<Self> {
        let lit = Complex64::new(alpha, 0.0) / (-4.0 * f.kt * f.gamma);
        vec![
            Self::RESOLVED,
            Self { name: "prefactor -4kT*gamma, 2i*lambda", prefactor: Complex64::new(1.0, 0.0), lambda_factor: 2.0 },
            Self { name: "prefactor alpha (literal), i*lambda", prefactor: lit, lambda_factor: 1.0 },
        ]
    }

    pub fn apply(&self, f: &WeiNormanFactors) -> WeiNormanFactors {
        let mut g = *f;
        g.c *= self.prefactor;
        g.d *= self.prefactor;
        g.e *= self.prefactor;
        g.lam *= self.lambda_factor;
        g
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct WeiNormanReport {
    pub t1: f64,
    pub t2: f64,
    pub dim: usize,
    /// (reading, relative Frobenius residual on the interior block)
    pub readings: Vec<(String, f64)>,
    pub resolved_residual: f64,
    /// Gaussian-level mismatch between the exact noise matrix and the one
    /// rebuilt with lam_plus and lam_minus exchanged between the columns of S.
    pub swapped_pairing_mismatch: f64,
}

/// Compares exp(t2 L) exp(noise at t1) with exp(t2 L_H) exp(M) exp(-{w,.,w})
/// as dense superoperators. Raw times, oscillator-unit Fock space.
pub fn verify_wei_norman(p: &PhysParams, t1: f64, t2: f64, source: LambdaSource, d: usize) -> Result<WeiNormanReport> {
    let f = wei_norman_factors(p, t1, t2, source)?;
    let b = FockBasis::new(d)?;
    let dl = p.dimensionless();
    let k = interior_levels(d);
    let tau = f.t2;

    let ex = |s: &Superop, t: f64| FockSuperop::from_superop(s).exp(t);
    let lhs = ex(&qbm_generator(&b, dl.gamma, dl.kt, false), tau)
        .compose(&ex(&dissipator(&b, &additive_coeffs(&f.noise_t1)), 1.0));
    let lhs_int = lhs.interior(k);
    let norm = frob(&lhs_int);
    let outer = ex(&Superop::hamiltonian(&b.hamiltonian(dl.gamma)), tau);
    let last = ex(&dissipator(&b, &f.last_coeffs()), 1.0);

    let mut readings = Vec::new();
    let mut resolved_residual = f64::NAN;
    for r in Reading::candidates(&f, dl.alpha) {
        let g = r.apply(&f);
        let mid = ex(&dissipator(&b, &g.middle_coeffs()), 1.0);
        let rhs = outer.compose(&mid).compose(&last);
        let res = frob(&(rhs.interior(k) - &lhs_int)) / norm;
        if r == Reading::RESOLVED {
            resolved_residual = res;
        }
        readings.push((r.name.to_string(), res));
    }

    let (lp, lm) = (f.lam_plus, f.lam_minus);
    let (_, _, s) = crate::exact::diagonalize_noise(f.noise_t1.qq, 2.0 * f.noise_t1.qp, f.noise_t1.pp);
    let swapped = Sym2::outer([s[(0, 0)], s[(1, 0)]]).scale(lm) + Sym2::outer([s[(0, 1)], s[(1, 1)]]).scale(lp);
    Ok(WeiNormanReport {
        t1,
        t2,
        dim: d,
        readings,
        resolved_residual,
        swapped_pairing_mismatch: (swapped - f.noise_t1).max_abs() / f.noise_t1.max_abs(),
    })
}
