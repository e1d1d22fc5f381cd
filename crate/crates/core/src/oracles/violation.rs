//! Search for a state and time at which a propagator produces a negative
//! eigenvalue, checked in a truncated Fock space and at the Gaussian level.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::inner::inner_channel;
use crate::oracles::fock::{dissipator, qbm_generator, FockBasis, FockDensity, Superop};
use crate::outer::{outer_channel, patched_channel};
use crate::params::PhysParams;
use crate::phase_space::{apply_channel, physicality_deficit, GaussianState, TOL_PHYS};
use crate::wei_norman::{additive_coeffs, LambdaSource};

/// A Fock eigenvalue below -VIOLATION_TOL counts as a violation.
pub const VIOLATION_TOL: f64 = 1e-6;

/// The smallest dimension the search accepts.
pub const MIN_SEARCH_DIM: usize = 30;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", tag = "kind")]
pub enum Propagator {
    /// exp(tL) with the coefficients of L as they stand.
    Bare,
    /// exp(tL) with the -Gamma{p,.,p}/8mkT term added.
    Gao,
    /// exp((t - dt)L) J(dt), `dt` raw.
    Patched { dt: f64, source: LambdaSource },
}

/// Search box. Squeezing is along q, the direction in which the friction
/// term lowers det(Sigma); times are in units of 1/omega and are measured
/// from dt for the patched propagator.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SearchBox {
    pub r_min: f64,
    pub r_max: f64,
    pub r_points: usize,
    pub t_max: f64,
    pub t_points: usize,
    /// Rounds of grid refinement in r around the best point.
    pub refinements: usize,
}

impl Default for SearchBox {
    fn default() -> Self {
        Self { r_min: 1.5, r_max: 3.0, r_points: 4, t_max: 0.03, t_points: 6, refinements: 2 }
    }
}

/// Most negative point found. `t` is raw, `gaussian_deficit` is
/// det(Sigma) - hbar^2/4 of the Gaussian-level image of the same state.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct ViolationCertificate {
    /// Squeezing of the state entering exp(tL).
    pub squeeze_r: f64,
    /// Initial state, raw units.
    pub initial: GaussianState,
    pub t: f64,
    pub min_eig: f64,
    pub gaussian_deficit: f64,
    /// Both diagnostics report a violation, or neither does.
    pub agree: bool,
    pub dim: usize,
}

impl ViolationCertificate {
    pub fn is_violation(&self) -> bool {
        self.min_eig < -VIOLATION_TOL
    }
}

/// Bare exp(tL), default search box.
pub fn demo_violation(p: &PhysParams, d: usize) -> Result<ViolationCertificate> {
    demo_violation_with(p, d, Propagator::Bare, &SearchBox::default())
}

/// Coarse-to-fine search over squeezing and time. Returns the most negative
/// certificate, or `NoViolationFound` when no eigenvalue drops below
/// -VIOLATION_TOL anywhere in the box.
pub fn demo_violation_with(
    p: &PhysParams,
    d: usize,
    prop: Propagator,
    search: &SearchBox,
) -> Result<ViolationCertificate> {
    if d < MIN_SEARCH_DIM {
        return Err(Error::DimensionTooSmall { dim: d, min: MIN_SEARCH_DIM });
    }
    if !(search.r_min > 0.0 && search.r_max >= search.r_min && search.t_max > 0.0)
        || search.r_points == 0
        || search.t_points == 0
    {
        return Err(Error::InvalidParams(format!("bad search box {search:?}")));
    }
    p.validate()?;

    let grid = |lo: f64, hi: f64, n: usize| -> Vec<f64> {
        if n == 1 {
            vec![0.5 * (lo + hi)]
        } else {
            (0..n).map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64).collect()
        }
    };
    let mut best: Option<ViolationCertificate> = None;
    let consider = |c: ViolationCertificate, best: &mut Option<ViolationCertificate>| {
        if best.is_none_or(|b| c.min_eig < b.min_eig) {
            *best = Some(c);
        }
    };
    let mut rs = grid(search.r_min, search.r_max, search.r_points);
    let mut step = if search.r_points > 1 {
        (search.r_max - search.r_min) / (search.r_points - 1) as f64
    } else {
        search.r_max - search.r_min
    };
    for round in 0..=search.refinements {
        for &r in &rs {
            match trajectory_minimum(p, d, prop, search, r) {
                Ok(c) => consider(c, &mut best),
                Err(Error::TruncationUnreliable { .. }) => {}
                Err(e) => return Err(e),
            }
        }
        if round == search.refinements {
            break;
        }
        let Some(b) = best else { break };
        let r0 = b.squeeze_r;
        step *= 0.5;
        rs = [r0 - step, r0 + step]
            .into_iter()
            .filter(|r| (search.r_min..=search.r_max).contains(r))
            .collect();
    }
    let Some(best) = best else {
        return Err(Error::TruncationUnreliable { population: f64::NAN });
    };
    if !best.is_violation() {
        return Err(Error::NoViolationFound {
            best_min_eig: best.min_eig,
            max_squeeze: search.r_max,
            max_time: search.t_max,
        });
    }
    Ok(best)
}

/// Evolves the squeezed vacuum along the time grid and keeps the point with
/// the smallest eigenvalue, stopping where the truncation becomes unreliable.
fn trajectory_minimum(
    p: &PhysParams,
    d: usize,
    prop: Propagator,
    search: &SearchBox,
    r: f64,
) -> Result<ViolationCertificate> {
    let dl = p.dimensionless();
    // the squeezed vacuum is the ground state of this basis
    let basis = FockBasis::scaled(d, (-r).exp())?;
    let internal = PhysParams::oscillator_units(dl.gamma, dl.alpha, dl.kt);
    let squeezed = GaussianState::squeezed_vacuum(&internal, r, 0.0);
    let mut rho = basis.gaussian_density(&squeezed);

    let (gao, start, s_int) = match prop {
        Propagator::Bare => (false, 0.0, squeezed),
        Propagator::Gao => (true, 0.0, squeezed),
        Propagator::Patched { dt, .. } => {
            // start from the preimage of the squeezed vacuum under the
            // unitary part of J, so the state entering exp(tL) is that
            // squeezed vacuum smeared by the noise of J
            let tau = p.to_internal_time(dt);
            let j = inner_channel(&internal, tau);
            rho = FockDensity { mat: dissipator(&basis, &additive_coeffs(&j.noise)).exp_action(&rho.mat, 1.0) };
            let pre = GaussianState::new([0.0, 0.0], squeezed.cov.congruence(&j.trans.inverse()));
            (false, tau, pre)
        }
    };
    let s_raw = s_int.to_raw(p);
    rho.check_truncation()?;
    let gen: Superop = qbm_generator(&basis, dl.gamma, dl.kt, gao);

    let mut best: Option<ViolationCertificate> = None;
    let mut tau_prev = start;
    for i in 1..=search.t_points {
        let tau = start + search.t_max * i as f64 / search.t_points as f64;
        rho = FockDensity { mat: gen.exp_action(&rho.mat, tau - tau_prev) };
        // the rotating squeezed state leaves the basis; later times only
        // populate the top levels further
        if rho.check_truncation().is_err() {
            break;
        }
        tau_prev = tau;
        let min_eig = rho.min_eigenvalue();
        if best.is_some_and(|b| b.min_eig <= min_eig) {
            continue;
        }
        let t = p.to_raw_time(tau);
        let ch = match prop {
            Propagator::Bare => outer_channel(p, t, false)?,
            Propagator::Gao => outer_channel(p, t, true)?,
            Propagator::Patched { dt, source } => patched_channel(p, dt, t, false, source)?.channel,
        };
        let deficit = physicality_deficit(&apply_channel(&ch, &s_raw), p);
        let fock_violates = min_eig < -VIOLATION_TOL;
        let gauss_violates = deficit < -TOL_PHYS * p.hbar * p.hbar;
        best = Some(ViolationCertificate {
            squeeze_r: r,
            initial: s_raw,
            t,
            min_eig,
            gaussian_deficit: deficit,
            agree: fock_violates == gauss_violates,
            dim: d,
        });
    }
    best.ok_or(Error::TruncationUnreliable { population: rho.top_population() })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_small_dimension_and_bad_box() {
        let p = PhysParams::oscillator_units(0.1, 100.0, 10.0);
        assert!(matches!(demo_violation(&p, 20), Err(Error::DimensionTooSmall { .. })));
        let bad = SearchBox { t_points: 0, ..SearchBox::default() };
        assert!(demo_violation_with(&p, 30, Propagator::Bare, &bad).is_err());
    }

    #[test]
    fn single_point_search_finds_violation() {
        let p = PhysParams::oscillator_units(0.1, 100.0, 10.0);
        let sb = SearchBox { r_min: 2.0, r_max: 2.0, r_points: 1, t_max: 0.01, t_points: 1, refinements: 0 };
        let c = demo_violation_with(&p, 30, Propagator::Bare, &sb).unwrap();
        assert!(c.min_eig < -1e-4 && c.gaussian_deficit < 0.0 && c.agree, "{c:?}");
    }
}
