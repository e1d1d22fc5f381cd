//! Truncated Fock-space representation of density operators and of
//! superoperators built from q and p, in oscillator units.
//!
//! Densities are vectorized by stacking columns, so vec(A rho B) =
//! (B^T kron A) vec(rho).

use nalgebra::DMatrix;
use ndarray::{s, Array1, Array2, Zip};
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::mat2::Sym2;
use crate::phase_space::{GaussianState, GeneratorCoeffs};

pub type CMat = Array2<Complex64>;

pub const MIN_DIM: usize = 4;
/// Population allowed in the top tenth of the levels before a run is
/// declared unreliable.
pub const TOP_POPULATION_TOL: f64 = 1e-6;

const ZERO: Complex64 = Complex64::new(0.0, 0.0);
const ONE: Complex64 = Complex64::new(1.0, 0.0);
const I: Complex64 = Complex64::new(0.0, 1.0);

/// Number states of an oscillator whose ground state has position variance
/// scale^2 / 2. `scale = 1` is the oscillator's own basis; other values
/// make squeezed states cheap to represent.
#[derive(Clone, Debug)]
pub struct FockBasis {
    pub dim: usize,
    pub scale: f64,
    pub q: CMat,
    pub p: CMat,
}

impl FockBasis {
    pub fn new(dim: usize) -> Result<Self> {
        Self::scaled(dim, 1.0)
    }

    pub fn scaled(dim: usize, scale: f64) -> Result<Self> {
        if dim < MIN_DIM {
            return Err(Error::DimensionTooSmall { dim, min: MIN_DIM });
        }
        let a = Self::lowering(dim);
        let at = a.t().to_owned();
        let c = std::f64::consts::FRAC_1_SQRT_2;
        let q = (&a + &at).mapv(|z| z * (c * scale));
        let p = (&a - &at).mapv(|z| z * Complex64::new(0.0, -c / scale));
        Ok(Self { dim, scale, q, p })
    }

    fn lowering(dim: usize) -> CMat {
        let mut a = CMat::zeros((dim, dim));
        for n in 1..dim {
            a[[n - 1, n]] = Complex64::new((n as f64).sqrt(), 0.0);
        }
        a
    }

    pub fn identity(&self) -> CMat {
        CMat::eye(self.dim)
    }

    /// p^2/2 + q^2/2 + gamma (qp + pq)/2
    pub fn hamiltonian(&self, gamma: f64) -> CMat {
        let q2 = self.q.dot(&self.q);
        let p2 = self.p.dot(&self.p);
        let qp = self.q.dot(&self.p) + self.p.dot(&self.q);
        (p2 + q2).mapv(|z| 0.5 * z) + qp.mapv(|z| 0.5 * gamma * z)
    }

    /// Pure Gaussian state with the given moments (oscillator units), built
    /// as the null vector of its annihilation operator
    /// (p - p0) - i kappa (q - q0), kappa = (1 - 2i cov_qp) / (2 cov_qq).
    pub fn gaussian_ket(&self, s: &GaussianState) -> Array1<Complex64> {
        let kappa = Complex64::new(1.0, -2.0 * s.cov.qp) / (2.0 * s.cov.qq);
        let l = self.scale;
        let r = std::f64::consts::FRAC_1_SQRT_2;
        let mu = -I * r * (1.0 / l + kappa * l);
        let nu = I * r * (1.0 / l - kappa * l);
        let beta = Complex64::new(s.mean[1], 0.0) - I * kappa * s.mean[0];
        let mut c = Array1::<Complex64>::zeros(self.dim);
        c[0] = ONE;
        for n in 0..self.dim - 1 {
            let prev = if n > 0 { nu * (n as f64).sqrt() * c[n - 1] } else { ZERO };
            c[n + 1] = (beta * c[n] - prev) / (mu * ((n + 1) as f64).sqrt());
            // rescale to avoid overflow for displaced states
            let m = c[n + 1].norm();
            if m > 1e150 {
                c.mapv_inplace(|z| z / m);
            }
        }
        let n = c.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        c.mapv(|z| z / n)
    }

    /// Density matrix of a pure Gaussian state. Only `cov.qq` and `cov.qp`
    /// are read; `cov.pp` is implied by det(cov) = 1/4.
    pub fn gaussian_density(&self, s: &GaussianState) -> FockDensity {
        debug_assert!(
            (s.cov.det() - 0.25).abs() < 1e-8 * (1.0 + s.cov.max_abs().powi(2)),
            "gaussian_density needs a pure state, got {s:?}"
        );
        FockDensity::from_ket(&self.gaussian_ket(s))
    }

    pub fn number_state(&self, n: usize) -> FockDensity {
        let mut m = CMat::zeros((self.dim, self.dim));
        m[[n, n]] = ONE;
        FockDensity { mat: m }
    }

    /// Mean and symmetrized covariance of rho in oscillator units.
    pub fn moments(&self, rho: &FockDensity) -> GaussianState {
        let tr = rho.trace().re;
        let ex = |op: &CMat| (rho.mat.dot(op).diag().sum() / tr).re;
        let mq = ex(&self.q);
        let mp = ex(&self.p);
        let qq = ex(&self.q.dot(&self.q)) - mq * mq;
        let pp = ex(&self.p.dot(&self.p)) - mp * mp;
        let sym = self.q.dot(&self.p) + self.p.dot(&self.q);
        let qp = 0.5 * ex(&sym) - mq * mp;
        GaussianState::new([mq, mp], Sym2::new(qq, pp, qp))
    }
}

/// A density matrix in a truncated number basis.
#[derive(Clone, Debug, PartialEq)]
pub struct FockDensity {
    pub mat: CMat,
}

impl FockDensity {
    pub fn from_ket(c: &Array1<Complex64>) -> Self {
        let d = c.len();
        Self { mat: CMat::from_shape_fn((d, d), |(i, j)| c[i] * c[j].conj()) }
    }

    pub fn dim(&self) -> usize {
        self.mat.nrows()
    }

    pub fn trace(&self) -> Complex64 {
        self.mat.diag().sum()
    }

    pub fn hermitized(&self) -> Self {
        let h = (&self.mat + &self.mat.t().mapv(|z| z.conj())).mapv(|z| 0.5 * z);
        Self { mat: h }
    }

    /// Largest |rho - rho^dag| entry.
    pub fn hermiticity_error(&self) -> f64 {
        let mut e: f64 = 0.0;
        Zip::from(&self.mat).and(&self.mat.t()).for_each(|a, b| e = e.max((a - b.conj()).norm()));
        e
    }

    /// Smallest eigenvalue of the Hermitian part.
    pub fn min_eigenvalue(&self) -> f64 {
        let h = self.hermitized();
        let d = self.dim();
        let m = DMatrix::from_fn(d, d, |i, j| h.mat[[i, j]]);
        m.symmetric_eigenvalues().iter().cloned().fold(f64::INFINITY, f64::min)
    }

    /// Population in the top tenth of the levels (at least one level).
    pub fn top_population(&self) -> f64 {
        let d = self.dim();
        let k = (d / 10).max(1);
        (d - k..d).map(|n| self.mat[[n, n]].re.abs()).sum()
    }

    pub fn check_truncation(&self) -> Result<()> {
        let population = self.top_population();
        if population > TOP_POPULATION_TOL {
            return Err(Error::TruncationUnreliable { population });
        }
        Ok(())
    }

    pub fn to_vec(&self) -> Array1<Complex64> {
        let d = self.dim();
        Array1::from_shape_fn(d * d, |k| self.mat[[k % d, k / d]])
    }

    pub fn from_vec(v: &Array1<Complex64>) -> Self {
        let d = (v.len() as f64).sqrt().round() as usize;
        Self { mat: CMat::from_shape_fn((d, d), |(i, j)| v[i + j * d]) }
    }
}

/// One term c A rho B of a superoperator; `None` stands for the identity.
#[derive(Clone, Debug)]
struct Term {
    coef: Complex64,
    left: Option<CMat>,
    right: Option<CMat>,
}

/// A superoperator kept as a sum of terms c A rho B, which can be applied
/// cheaply or assembled into a dense d^2 x d^2 matrix.
#[derive(Clone, Debug)]
pub struct Superop {
    dim: usize,
    terms: Vec<Term>,
}

impl Superop {
    pub fn zero(dim: usize) -> Self {
        Self { dim, terms: Vec::new() }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    fn term(dim: usize, coef: Complex64, left: Option<CMat>, right: Option<CMat>) -> Self {
        Self { dim, terms: vec![Term { coef, left, right }] }
    }

    /// rho -> A rho B
    pub fn sandwich(a: &CMat, b: &CMat) -> Self {
        Self::term(a.nrows(), ONE, Some(a.clone()), Some(b.clone()))
    }

    /// rho -> -i [H, rho]
    pub fn hamiltonian(h: &CMat) -> Self {
        Self::commutator(h).scale(-I)
    }

    /// rho -> [X, rho]
    pub fn commutator(x: &CMat) -> Self {
        let d = x.nrows();
        Self {
            dim: d,
            terms: vec![
                Term { coef: ONE, left: Some(x.clone()), right: None },
                Term { coef: -ONE, left: None, right: Some(x.clone()) },
            ],
        }
    }

    /// rho -> X rho + rho X
    pub fn anticommutator(x: &CMat) -> Self {
        let d = x.nrows();
        Self {
            dim: d,
            terms: vec![
                Term { coef: ONE, left: Some(x.clone()), right: None },
                Term { coef: ONE, left: None, right: Some(x.clone()) },
            ],
        }
    }

    /// {X, rho, Y} = Y X^dag rho + rho Y X^dag - 2 X^dag rho Y
    pub fn bracket(x: &CMat, y: &CMat) -> Self {
        let xd = x.t().mapv(|z| z.conj());
        let yxd = y.dot(&xd);
        Self {
            dim: x.nrows(),
            terms: vec![
                Term { coef: ONE, left: Some(yxd.clone()), right: None },
                Term { coef: ONE, left: None, right: Some(yxd) },
                Term { coef: Complex64::new(-2.0, 0.0), left: Some(xd), right: Some(y.clone()) },
            ],
        }
    }

    pub fn scale(mut self, c: Complex64) -> Self {
        for t in &mut self.terms {
            t.coef *= c;
        }
        self
    }

    pub fn scale_re(self, c: f64) -> Self {
        self.scale(Complex64::new(c, 0.0))
    }

    pub fn plus(mut self, other: Self) -> Self {
        assert_eq!(self.dim, other.dim, "superoperator dimensions differ");
        self.terms.extend(other.terms);
        self
    }

    pub fn minus(self, other: Self) -> Self {
        self.plus(other.scale(-ONE))
    }

    /// The superoperator rho -> self(first(rho)), kept in structured form.
    pub fn compose(&self, first: &Self) -> Self {
        let mul = |x: &Option<CMat>, y: &Option<CMat>| match (x, y) {
            (Some(a), Some(b)) => Some(a.dot(b)),
            (Some(a), None) | (None, Some(a)) => Some(a.clone()),
            (None, None) => None,
        };
        let mut terms = Vec::with_capacity(self.terms.len() * first.terms.len());
        for x in &self.terms {
            for y in &first.terms {
                terms.push(Term {
                    coef: x.coef * y.coef,
                    left: mul(&x.left, &y.left),
                    right: mul(&y.right, &x.right),
                });
            }
        }
        Self { dim: self.dim, terms }
    }

    /// [self, other] = self other - other self as superoperators.
    pub fn bracket_with(&self, other: &Self) -> Self {
        self.compose(other).minus(other.compose(self))
    }

    /// Dense block of the matrix from densities supported on levels < k to
    /// levels < k.
    pub fn interior_matrix(&self, k: usize) -> CMat {
        let mut m = CMat::zeros((k * k, k * k));
        for t in &self.terms {
            let a = t.left.as_ref().map(|a| a.slice(s![..k, ..k]).to_owned()).unwrap_or_else(|| CMat::eye(k));
            let b = t.right.as_ref().map(|b| b.slice(s![..k, ..k]).to_owned()).unwrap_or_else(|| CMat::eye(k));
            for j in 0..k {
                for l in 0..k {
                    let blj = b[[l, j]];
                    if blj == ZERO {
                        continue;
                    }
                    let mut block = m.slice_mut(s![j * k..(j + 1) * k, l * k..(l + 1) * k]);
                    block.scaled_add(t.coef * blj, &a);
                }
            }
        }
        m
    }

    pub fn apply(&self, rho: &CMat) -> CMat {
        let mut out = CMat::zeros((self.dim, self.dim));
        for t in &self.terms {
            let x = match (&t.left, &t.right) {
                (Some(a), Some(b)) => a.dot(rho).dot(b),
                (Some(a), None) => a.dot(rho),
                (None, Some(b)) => rho.dot(b),
                (None, None) => rho.clone(),
            };
            out.scaled_add(t.coef, &x);
        }
        out
    }

    /// Dense d^2 x d^2 matrix acting on column-stacked densities.
    pub fn matrix(&self) -> CMat {
        let d = self.dim;
        let eye = CMat::eye(d);
        let mut m = CMat::zeros((d * d, d * d));
        for t in &self.terms {
            let a = t.left.as_ref().unwrap_or(&eye);
            let b = t.right.as_ref().unwrap_or(&eye);
            // (B^T kron A)[(i + j d), (k + l d)] = B[l, j] A[i, k]
            for j in 0..d {
                for l in 0..d {
                    let blj = b[[l, j]];
                    if blj == ZERO {
                        continue;
                    }
                    let c = t.coef * blj;
                    let mut block = m.slice_mut(s![j * d..(j + 1) * d, l * d..(l + 1) * d]);
                    block.scaled_add(c, a);
                }
            }
        }
        m
    }

    /// Upper bound on the operator 2-norm acting on densities with the
    /// Hilbert-Schmidt norm.
    pub fn norm_bound(&self) -> f64 {
        self.terms
            .iter()
            .map(|t| {
                t.coef.norm()
                    * t.left.as_ref().map_or(1.0, norm2_bound)
                    * t.right.as_ref().map_or(1.0, norm2_bound)
            })
            .sum()
    }

    /// exp(t S) rho by a Taylor series applied in substeps small enough that
    /// each series converges quickly.
    pub fn exp_action(&self, rho: &CMat, t: f64) -> CMat {
        let norm = self.norm_bound() * t.abs();
        let steps = norm.ceil().max(1.0) as usize;
        let h = t / steps as f64;
        let mut x = rho.clone();
        for _ in 0..steps {
            let mut term = x.clone();
            let mut sum = x.clone();
            for k in 1..60 {
                term = self.apply(&term).mapv(|z| z * (h / k as f64));
                sum += &term;
                if frob(&term) <= 1e-17 * frob(&sum) {
                    break;
                }
            }
            x = sum;
        }
        x
    }
}

/// sqrt(||A||_1 ||A||_inf) >= ||A||_2
fn norm2_bound(a: &CMat) -> f64 {
    let col = a.columns().into_iter().map(|c| c.iter().map(|z| z.norm()).sum::<f64>()).fold(0.0, f64::max);
    let row = a.rows().into_iter().map(|r| r.iter().map(|z| z.norm()).sum::<f64>()).fold(0.0, f64::max);
    (col * row).sqrt()
}

pub fn frob(a: &CMat) -> f64 {
    a.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

fn norm1(a: &CMat) -> f64 {
    a.columns().into_iter().map(|c| c.iter().map(|z| z.norm()).sum::<f64>()).fold(0.0, f64::max)
}

/// Matrix exponential by scaling and squaring of a degree-18 Taylor
/// polynomial evaluated with the Paterson-Stockmeyer scheme.
pub fn expm(a: &CMat) -> CMat {
    let n = a.nrows();
    let norm = norm1(a);
    let s = if norm > 1.0 { norm.log2().ceil() as i32 } else { 0 };
    let x = a.mapv(|z| z * 0.5f64.powi(s));
    let eye = CMat::eye(n);
    let x2 = x.dot(&x);
    let x3 = x2.dot(&x);
    let x4 = x3.dot(&x);
    let pw = [&eye, &x, &x2, &x3];
    // coefficients 1/k!, k = 0..=18, grouped as sum_j (sum_i c_{4j+i} X^i) X^{4j}
    let mut c = [0.0; 19];
    c[0] = 1.0;
    for k in 1..19 {
        c[k] = c[k - 1] / k as f64;
    }
    let block = |j: usize| {
        let mut b = CMat::zeros((n, n));
        for (i, p) in pw.iter().enumerate() {
            if 4 * j + i < 19 {
                b.scaled_add(Complex64::new(c[4 * j + i], 0.0), p);
            }
        }
        b
    };
    let mut r = block(4);
    for j in (0..4).rev() {
        r = r.dot(&x4) + block(j);
    }
    for _ in 0..s {
        r = r.dot(&r);
    }
    r
}

/// A dense superoperator matrix together with its dimension.
#[derive(Clone, Debug)]
pub struct FockSuperop {
    pub dim: usize,
    pub mat: CMat,
}

impl FockSuperop {
    pub fn from_superop(s: &Superop) -> Self {
        Self { dim: s.dim(), mat: s.matrix() }
    }

    pub fn exp(&self, t: f64) -> Self {
        Self { dim: self.dim, mat: expm(&self.mat.mapv(|z| z * t)) }
    }

    pub fn compose(&self, first: &Self) -> Self {
        Self { dim: self.dim, mat: self.mat.dot(&first.mat) }
    }

    pub fn apply(&self, rho: &FockDensity) -> FockDensity {
        FockDensity::from_vec(&self.mat.dot(&rho.to_vec()))
    }

    /// Block acting from densities supported on levels < k to levels < k.
    pub fn interior(&self, k: usize) -> CMat {
        let d = self.dim;
        let idx: Vec<usize> = (0..k).flat_map(|j| (0..k).map(move |i| i + j * d)).collect();
        CMat::from_shape_fn((idx.len(), idx.len()), |(r, c)| self.mat[[idx[r], idx[c]]])
    }
}

/// Levels kept by the interior projection: [0, 0.8 d).
pub fn interior_levels(dim: usize) -> usize {
    (4 * dim) / 5
}

/// -(A{q,.,q} + B{p,.,p} + C{q,.,p} + D{p,.,q}) on the basis.
pub fn dissipator(basis: &FockBasis, c: &GeneratorCoeffs) -> Superop {
    let (q, p) = (&basis.q, &basis.p);
    Superop::bracket(q, q)
        .scale(-c.a)
        .plus(Superop::bracket(p, p).scale(-c.b))
        .plus(Superop::bracket(q, p).scale(-c.c))
        .plus(Superop::bracket(p, q).scale(-c.d))
}

/// The quantum Brownian generator in oscillator units with Gamma = `gamma`
/// and k T / hbar omega = `kt`, optionally with the -Gamma{p,.,p}/8kT term.
pub fn qbm_generator(basis: &FockBasis, gamma: f64, kt: f64, gao: bool) -> Superop {
    let p = crate::params::PhysParams::oscillator_units(gamma, 1.0, kt);
    Superop::hamiltonian(&basis.hamiltonian(gamma))
        .plus(dissipator(basis, &GeneratorCoeffs::quantum_brownian(&p, gao)))
}

/// Evolves rho0 under exp(t S) and reports the smallest eigenvalue of the
/// result; fails when the input or output populates the top levels.
pub fn evolve_fock(s: &Superop, rho0: &FockDensity, t: f64) -> Result<(FockDensity, f64)> {
    rho0.check_truncation()?;
    let rho = FockDensity { mat: s.exp_action(&rho0.mat, t) };
    rho.check_truncation()?;
    let min = rho.min_eigenvalue();
    Ok((rho, min))
}
