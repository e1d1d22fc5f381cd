//! The verification suite: every cross-check between independently built
//! objects, reported as {check_name, params, dimension, residual, tolerance,
//! pass}.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::exact::exact_channel;
use crate::mat2::Sym2;
use crate::oracles::fock::FockBasis;
use crate::oracles::micro::{microscopic_simulate_with, BathOptions};
use crate::oracles::verify::{
    algebra_table, verify_algebra_table_with, verify_dilation_relation, verify_outer_flow, verify_smearing_identity,
    verify_wei_norman, LinearOp, Reading,
};
use crate::params::PhysParams;
use crate::phase_space::{apply_channel, GaussianState};
use crate::sampling::StateSampler;
use crate::wei_norman::{minimal_patch_time, LambdaSource};

pub const SMEARING_TOL: f64 = 1e-8;
pub const DILATION_TOL: f64 = 1e-6;
pub const ALGEBRA_TOL: f64 = 1e-6;
pub const FLOW_DERIVATIVE_TOL: f64 = 1e-6;
pub const FLOW_EVOLUTION_TOL: f64 = 1e-5;
pub const MICRO_TOL: f64 = 1e-3;
pub const WEI_NORMAN_TOL: f64 = 1e-4;
/// Trace drift allowed for trace-preserving Fock evolutions.
pub const TRACE_TOL: f64 = 1e-10;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Check {
    Smearing,
    Dilation,
    Algebra,
    OuterFlow,
    ExactVsMicro,
    WeiNorman,
}

impl Check {
    pub const ALL: [Check; 6] =
        [Check::Smearing, Check::Dilation, Check::Algebra, Check::OuterFlow, Check::ExactVsMicro, Check::WeiNorman];
}

/// One (t1, t2) point of the Wei-Norman check: t1 = t1_factor times the
/// smallest patch time satisfying the high-temperature condition, t2 in
/// units of 1/omega.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WeiNormanPoint {
    pub gamma: f64,
    pub alpha: f64,
    pub kt: f64,
    pub t1_factor: f64,
    pub t2: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SuiteConfig {
    /// Gamma/omega, alpha/omega, kT/hbar omega for the Fock and reservoir checks.
    pub gamma: f64,
    pub alpha: f64,
    pub kt: f64,
    pub smearing_dim: usize,
    pub dilation_dim: usize,
    pub algebra_dims: Vec<usize>,
    pub flow_dim: usize,
    pub flow_states: usize,
    pub wei_norman_dim: usize,
    pub wei_norman_points: Vec<WeiNormanPoint>,
    pub micro_modes: usize,
    pub bath: BathOptions,
    pub seed: u64,
    /// Checks to run; empty runs all.
    pub only: Vec<Check>,
    /// Scales the claimed value of this algebra-table entry by 1.01 (a zero
    /// entry becomes 0.01 L_H).
    pub corrupt_algebra_entry: Option<usize>,
}

impl Default for SuiteConfig {
    fn default() -> Self {
        let wn = |gamma, alpha, t1_factor, t2| WeiNormanPoint { gamma, alpha, kt: 10.0, t1_factor, t2 };
        Self {
            gamma: 0.1,
            alpha: 100.0,
            kt: 10.0,
            smearing_dim: 30,
            dilation_dim: 40,
            algebra_dims: vec![20, 30, 40],
            flow_dim: 40,
            flow_states: 10,
            wei_norman_dim: 25,
            wei_norman_points: vec![
                wn(0.01, 100.0, 1.2, 0.02),
                wn(0.01, 100.0, 1.2, 0.05),
                wn(0.01, 100.0, 1.2, 0.1),
                wn(0.01, 10.0, 1.2, 0.05),
                wn(0.01, 10.0, 1.1, 0.02),
            ],
            micro_modes: 400,
            bath: BathOptions::default(),
            seed: 1,
            only: Vec::new(),
            corrupt_algebra_entry: None,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct OracleReport {
    pub check_name: String,
    pub params: BTreeMap<String, f64>,
    pub dimension: Option<usize>,
    pub residual: f64,
    pub tolerance: f64,
    pub pass: bool,
    /// Per-case residuals and auxiliary numbers.
    pub details: BTreeMap<String, f64>,
    pub notes: Vec<String>,
}

impl OracleReport {
    fn new(name: &str, params: &[(&str, f64)], dimension: Option<usize>, tolerance: f64) -> Self {
        Self {
            check_name: name.to_string(),
            params: params.iter().map(|(k, v)| (k.to_string(), *v)).collect(),
            dimension,
            residual: 0.0,
            tolerance,
            pass: false,
            details: BTreeMap::new(),
            notes: Vec::new(),
        }
    }

    fn record(&mut self, key: impl Into<String>, residual: f64) {
        self.residual = self.residual.max(residual);
        self.details.insert(key.into(), residual);
    }

    fn finish(mut self, extra_ok: bool) -> Self {
        self.pass = extra_ok && self.residual.is_finite() && self.residual <= self.tolerance;
        self
    }

    /// A check that could not be evaluated.
    fn failed(mut self, err: impl std::fmt::Display) -> Self {
        self.residual = f64::NAN;
        self.pass = false;
        self.notes.push(format!("error: {err}"));
        self
    }
}

/// Runs the selected checks in order.
pub fn run_suite(cfg: &SuiteConfig) -> Vec<OracleReport> {
    let checks: Vec<Check> = if cfg.only.is_empty() { Check::ALL.to_vec() } else { cfg.only.clone() };
    checks.into_iter().flat_map(|c| run_check(cfg, c)).collect()
}

pub fn run_check(cfg: &SuiteConfig, check: Check) -> Vec<OracleReport> {
    match check {
        Check::Smearing => vec![smearing(cfg)],
        Check::Dilation => vec![dilation(cfg)],
        Check::Algebra => cfg.algebra_dims.iter().map(|&d| algebra(cfg, d)).collect(),
        Check::OuterFlow => outer_flow_checks(cfg),
        Check::ExactVsMicro => vec![exact_vs_micro(cfg)],
        Check::WeiNorman => vec![wei_norman(cfg)],
    }
}

fn smearing(cfg: &SuiteConfig) -> OracleReport {
    let d = cfg.smearing_dim;
    let rep = OracleReport::new("smearing-identity", &[], Some(d), SMEARING_TOL);
    let run = |mut rep: OracleReport| -> Result<OracleReport> {
        let b = FockBasis::new(d)?;
        let rho = b.gaussian_density(&GaussianState::new([0.5, 0.2], Sym2::new(0.5, 0.5, 0.0)));
        let mut min_mix = f64::INFINITY;
        for (name, op) in [("q", LinearOp::Q), ("p", LinearOp::P)] {
            for xi in [0.05, 0.1, 0.5] {
                let r = verify_smearing_identity(&b, op, xi, &rho)?;
                rep.record(format!("{name} xi={xi}"), r.residual);
                min_mix = min_mix.min(r.mixture_min_eigenvalue);
            }
        }
        rep.details.insert("mixture min eigenvalue".into(), min_mix);
        Ok(rep.finish(min_mix >= -1e-10))
    };
    run(rep.clone()).unwrap_or_else(|e| rep.failed(e))
}

fn dilation(cfg: &SuiteConfig) -> OracleReport {
    let d = cfg.dilation_dim;
    let rep = OracleReport::new("dilation-relation", &[], Some(d), DILATION_TOL);
    let run = |mut rep: OracleReport| -> Result<OracleReport> {
        let mut trace_ok = true;
        let mut signs = Vec::new();
        for tau in [-0.05, 0.03, 0.1] {
            let r = verify_dilation_relation(tau, d)?;
            rep.record(format!("tau={tau}"), r.residual);
            rep.details.insert(format!("tau={tau} mean scale"), r.mean_scale);
            trace_ok &= r.trace_error < TRACE_TOL;
            signs.push(r.sign);
        }
        let consistent = signs.iter().all(|&s| s == signs[0]);
        rep.details.insert("sign".into(), signs[0] as f64);
        rep.notes.push(format!(
            "means scale by e^({}2 tau), covariances by the square",
            if signs[0] < 0 { "-" } else { "+" }
        ));
        Ok(rep.finish(trace_ok && consistent))
    };
    run(rep.clone()).unwrap_or_else(|e| rep.failed(e))
}

fn algebra(cfg: &SuiteConfig, d: usize) -> OracleReport {
    let rep = OracleReport::new("algebra-table", &[("gamma", cfg.gamma)], Some(d), ALGEBRA_TOL);
    let mut table = algebra_table(cfg.gamma);
    if let Some(i) = cfg.corrupt_algebra_entry {
        if let Some(e) = table.get_mut(i) {
            if e.claimed.iter().all(|c| c.norm() == 0.0) {
                e.claimed[0] = 0.01.into();
            } else {
                e.claimed.iter_mut().for_each(|c| *c *= 1.01);
            }
        }
    }
    match verify_algebra_table_with(cfg.gamma, d, &table) {
        Ok(r) => {
            let mut rep = rep;
            for (name, res) in r.entries {
                rep.record(name, res);
            }
            if cfg.corrupt_algebra_entry.is_some() {
                rep.notes.push("table deliberately corrupted".into());
            }
            rep.finish(true)
        }
        Err(e) => rep.failed(e),
    }
}

fn outer_flow_checks(cfg: &SuiteConfig) -> Vec<OracleReport> {
    let d = cfg.flow_dim;
    let params = [("gamma", cfg.gamma), ("kt", cfg.kt)];
    let deriv = OracleReport::new("moment-flow-derivatives", &params, Some(d), FLOW_DERIVATIVE_TOL);
    let evol = OracleReport::new("moment-flow-evolution", &params, Some(d), FLOW_EVOLUTION_TOL);
    let run = |mut deriv: OracleReport, mut evol: OracleReport| -> Result<Vec<OracleReport>> {
        let p = PhysParams::oscillator_units(cfg.gamma, cfg.alpha, cfg.kt);
        // mild squeezing keeps the states well inside the truncated space
        let mut sampler = StateSampler::with_range(cfg.seed, 4.0, 0.5);
        // at kT = 10 the diffusion heats the state quickly; short times stay in d = 40
        let times = [0.02, 0.05, 0.1];
        let mut min_eig = f64::INFINITY;
        for i in 0..cfg.flow_states {
            let s0 = sampler.sample(&p).to_internal(&p);
            for gao in [false, true] {
                let r = verify_outer_flow(cfg.gamma, cfg.kt, gao, d, &s0, &times)?;
                let tag = if gao { "gao" } else { "bare" };
                deriv.record(format!("state {i} {tag}"), r.derivative_residual);
                evol.record(format!("state {i} {tag}"), r.evolution_residual);
                if gao {
                    min_eig = min_eig.min(r.min_eigenvalue);
                }
            }
        }
        evol.details.insert("gao min eigenvalue".into(), min_eig);
        Ok(vec![deriv.finish(true), evol.finish(true)])
    };
    run(deriv.clone(), evol.clone()).unwrap_or_else(|e| vec![deriv.failed(&e), evol.failed(&e)])
}

/// Largest relative Frobenius distance between covariances.
pub fn covariance_error(a: &Sym2, b: &Sym2) -> f64 {
    let d = *a - *b;
    let n = |s: &Sym2| (s.qq * s.qq + s.pp * s.pp + 2.0 * s.qp * s.qp).sqrt();
    n(&d) / n(b)
}

fn exact_vs_micro(cfg: &SuiteConfig) -> OracleReport {
    let n = cfg.micro_modes;
    let rep = OracleReport::new(
        "exact-vs-reservoir",
        &[("gamma", cfg.gamma), ("alpha", cfg.alpha), ("kt", cfg.kt), ("modes", n as f64)],
        None,
        MICRO_TOL,
    );
    let run = |mut rep: OracleReport| -> Result<OracleReport> {
        let p = PhysParams::oscillator_units(cfg.gamma, cfg.alpha, cfg.kt);
        let times: Vec<f64> = (0..=20).map(|i| 0.25 * i as f64).collect();
        for (name, s0) in [
            ("vacuum", GaussianState::vacuum(&p)),
            ("squeezed", GaussianState::squeezed_vacuum(&p, 0.5, 0.3)),
        ] {
            let micro = microscopic_simulate_with(&p, n, &cfg.bath, &s0, &times)?;
            let mut worst: f64 = 0.0;
            for (&t, m) in times.iter().zip(&micro) {
                let ex = apply_channel(&exact_channel(&p, t)?, &s0);
                worst = worst.max(covariance_error(&m.cov, &ex.cov));
            }
            rep.record(name, worst);
        }
        Ok(rep.finish(true))
    };
    run(rep.clone()).unwrap_or_else(|e| rep.failed(e))
}

fn wei_norman(cfg: &SuiteConfig) -> OracleReport {
    let d = cfg.wei_norman_dim;
    let mut rep = OracleReport::new("wei-norman", &[], Some(d), WEI_NORMAN_TOL);
    rep.notes.push(format!("resolved reading: {}", Reading::RESOLVED.name));
    let run = |mut rep: OracleReport| -> Result<OracleReport> {
        let mut all_certified = true;
        for (i, pt) in cfg.wei_norman_points.iter().enumerate() {
            let p = PhysParams::oscillator_units(pt.gamma, pt.alpha, pt.kt);
            let source = LambdaSource::FullPipeline;
            let Some(t_min) = minimal_patch_time(&p, source, 200.0)? else {
                all_certified = false;
                rep.notes.push(format!("point {i}: high-temperature condition never holds"));
                continue;
            };
            let t1 = pt.t1_factor * t_min;
            all_certified &= crate::wei_norman::high_temp_condition(&p, t1, source)?;
            let r = verify_wei_norman(&p, t1, pt.t2, source, d)?;
            rep.record(format!("point {i}"), r.resolved_residual);
            rep.details.insert(format!("point {i} t1"), t1);
            for (name, res) in &r.readings {
                if name != Reading::RESOLVED.name {
                    rep.details.insert(format!("point {i} [{name}]"), *res);
                }
            }
        }
        Ok(rep.finish(all_certified && !cfg.wei_norman_points.is_empty()))
    };
    run(rep.clone()).unwrap_or_else(|e| rep.failed(e))
}
