use rayon::prelude::*;
use rayon::ThreadPool;
use serde::Serialize;

use qbm::exact::{exact_channel, ExactDynamics, NoiseOptions};
use qbm::inner::{coherent_entropy, inner_channel, inner_lambdas, inner_unitary, uncertainty_floors, InnerParams};
use qbm::oracles::suite::{run_check, Check, OracleReport};
use qbm::oracles::violation::{demo_violation_with, Propagator, ViolationCertificate};
use qbm::outer::{outer_channel, patched_channel};
use qbm::phase_space::{apply_channel, linear_entropy, physicality_deficit};
use qbm::sampling::StateSampler;
use qbm::wei_norman::{high_temp_value, middle_condition, minimal_patch_time, LambdaSource};
use qbm::{Error, GaussianChannel, GaussianState, PhysParams};

use crate::config::{Config, PropagatorKind, AXIS_NAMES};
use crate::output::{provenance, Out, Reasons};
use crate::CliError;

/// Search range for the smallest admissible patch time, in units of 1/alpha.
const PATCH_SEARCH_MAX: f64 = 200.0;

/// Short kebab-case name of an error, used in `nan_reason` columns.
pub fn error_code(e: &Error) -> &'static str {
    match e {
        Error::InvalidParams(_) => "invalid-params",
        Error::InvalidRegime(_) => "invalid-regime",
        Error::InvalidTime(_) => "invalid-time",
        Error::RNotPositive { .. } => "r-not-positive",
        Error::QuadratureFailure { .. } => "quadrature-failure",
        Error::NonPhysicalState { .. } => "non-physical",
        Error::DivisionByZero(_) => "division-by-zero",
        Error::NonRealCriterion { .. } => "non-real-criterion",
        Error::DimensionTooSmall { .. } => "dimension-too-small",
        Error::TruncationUnreliable { .. } => "truncation-unreliable",
        Error::NoViolationFound { .. } => "no-violation-found",
        Error::RecurrenceHorizonExceeded { .. } => "recurrence-horizon",
        Error::NoRealLogarithm { .. } => "no-real-logarithm",
    }
}

fn with_kt(p: &PhysParams, kt: f64) -> PhysParams {
    PhysParams { temperature: kt * p.hbar * p.omega / p.kb, ..*p }
}

/// `dt` if given, otherwise `factor` times the smallest patch time at which
/// the high-temperature condition holds.
fn patch_time(p: &PhysParams, dt: Option<f64>, factor: f64, source: LambdaSource) -> Result<f64, CliError> {
    if let Some(dt) = dt {
        if !(dt >= 0.0 && dt.is_finite()) {
            return Err(CliError::Config(format!("patch time must be finite and >= 0, got {dt}")));
        }
        return Ok(dt);
    }
    match minimal_patch_time(p, source, PATCH_SEARCH_MAX)? {
        Some(t) => Ok(factor * t),
        None => Err(Error::InvalidRegime(format!(
            "the high-temperature condition never holds for alpha dt <= {PATCH_SEARCH_MAX}"
        ))
        .into()),
    }
}

/// The value, or NaN with the error code recorded.
fn note(r: qbm::Result<f64>, why: &mut Reasons) -> f64 {
    match r {
        Ok(v) => v,
        Err(e) => {
            why.add(error_code(&e));
            f64::NAN
        }
    }
}

fn violation_flag(s: &GaussianState, p: &PhysParams, tol: f64) -> &'static str {
    if physicality_deficit(s, p) < -tol * p.hbar * p.hbar {
        "VIOLATION"
    } else {
        "OK"
    }
}

#[derive(Serialize)]
struct EvolveRow {
    state: usize,
    t: f64,
    omega_t: f64,
    mean_q: f64,
    mean_p: f64,
    cov_qq: f64,
    cov_pp: f64,
    cov_qp: f64,
    deficit: f64,
    linear_entropy: f64,
    dq2_margin: f64,
    dp2_margin: f64,
    flag: &'static str,
    nan_reason: String,
    provenance: String,
}

pub fn evolve(cfg: &Config, out: &Out, pool: &ThreadPool) -> Result<(), CliError> {
    let p = cfg.params.resolve()?;
    let times = cfg.evolve.times.values("evolve.times")?;
    if times[0] < 0.0 {
        return Err(CliError::Config("evolve.times must be >= 0".into()));
    }
    let kind = cfg.propagator.unwrap_or(PropagatorKind::Exact);
    let source = cfg.lambda_source();
    let dt = match kind {
        PropagatorKind::Patched => Some(patch_time(&p, cfg.evolve.dt, cfg.evolve.dt_factor, source)?),
        _ => None,
    };
    let op = match kind {
        PropagatorKind::Exact => "exact::exact_channel",
        PropagatorKind::Inner => "inner::inner_channel",
        PropagatorKind::Outer => "outer::outer_channel",
        PropagatorKind::Gao => "outer::outer_channel(gao)",
        PropagatorKind::Patched => "outer::patched_channel",
    };
    let channel = |t: f64| -> qbm::Result<GaussianChannel> {
        match kind {
            PropagatorKind::Exact => exact_channel(&p, t),
            PropagatorKind::Inner => Ok(inner_channel(&p, t)),
            PropagatorKind::Outer => outer_channel(&p, t, false),
            PropagatorKind::Gao => outer_channel(&p, t, true),
            PropagatorKind::Patched => Ok(patched_channel(&p, dt.unwrap_or(0.0), t, false, source)?.channel),
        }
    };
    let channels: Vec<GaussianChannel> = pool.install(|| times.par_iter().map(|&t| channel(t)).collect::<Result<_, _>>())?;
    let floors = |t: f64| match kind {
        PropagatorKind::Inner => Some(uncertainty_floors(&p, t)),
        PropagatorKind::Patched => Some(uncertainty_floors(&p, dt.unwrap_or(0.0).min(t))),
        _ => None,
    };

    let states = if cfg.evolve.samples > 0 {
        StateSampler::new(cfg.seed).take(&p, cfg.evolve.samples)
    } else {
        vec![cfg.evolve.initial.state(&p)]
    };
    let prov = provenance(op);
    let mut rows = Vec::with_capacity(states.len() * times.len());
    let mut flagged = 0;
    for (i, s0) in states.iter().enumerate() {
        for (&t, ch) in times.iter().zip(&channels) {
            let s = apply_channel(ch, s0);
            let mut why = Reasons::default();
            let entropy = why.or_nan(linear_entropy(&s, &p, cfg.tol_phys).ok(), "non-physical");
            let f = floors(t);
            let dq = why.or_nan(f.map(|f| s.cov.qq - f.dq2_min), "no-floor-for-propagator");
            let dp = why.or_nan(f.map(|f| s.cov.pp - f.dp2_min), "no-floor-for-propagator");
            let flag = violation_flag(&s, &p, cfg.tol_phys);
            flagged += usize::from(flag == "VIOLATION");
            rows.push(EvolveRow {
                state: i,
                t,
                omega_t: p.to_internal_time(t),
                mean_q: s.mean[0],
                mean_p: s.mean[1],
                cov_qq: s.cov.qq,
                cov_pp: s.cov.pp,
                cov_qp: s.cov.qp,
                deficit: physicality_deficit(&s, &p),
                linear_entropy: entropy,
                dq2_margin: dq,
                dp2_margin: dp,
                flag,
                nan_reason: why.finish(),
                provenance: prov.clone(),
            });
        }
    }
    let path = out.csv("evolve.csv", &rows)?;
    let dt_note = dt.map(|d| format!(", dt = {d:.6e}")).unwrap_or_default();
    println!(
        "evolve ({kind:?}{dt_note}): {} rows, {flagged} flagged VIOLATION -> {}",
        rows.len(),
        path.display()
    );
    Ok(())
}

#[derive(Serialize)]
struct RegionRow {
    i: usize,
    j: usize,
    kt: f64,
    alpha_tilde: f64,
    dt: f64,
    high_temp_value: f64,
    high_temp_condition: bool,
    min_alpha_tilde: f64,
    middle_condition_fraction: f64,
    certified: bool,
    nan_reason: String,
    provenance: String,
}

pub fn region_map(cfg: &Config, out: &Out, pool: &ThreadPool) -> Result<(), CliError> {
    let p0 = cfg.params.resolve()?;
    let rc = &cfg.region_map;
    let kts = rc.kt.values("region_map.kt")?;
    let xs = rc.alpha_tilde.values("region_map.alpha_tilde")?;
    let t2s = rc.t2.values("region_map.t2")?;
    if kts[0] <= 0.0 || xs[0] <= 0.0 || t2s[0] < 0.0 {
        return Err(CliError::Config("region_map axes must be positive".into()));
    }
    let source = cfg.lambda_source();
    let min_x: Vec<Result<Option<f64>, Error>> = pool.install(|| {
        kts.par_iter()
            .map(|&kt| {
                let p = with_kt(&p0, kt);
                Ok(minimal_patch_time(&p, source, rc.max_alpha_tilde)?.map(|t| t * p.alpha))
            })
            .collect()
    });
    let cells: Vec<(usize, usize)> = (0..kts.len()).flat_map(|i| (0..xs.len()).map(move |j| (i, j))).collect();
    let prov = provenance("wei_norman::high_temp_value");
    let rows: Vec<RegionRow> = pool.install(|| {
        cells
            .par_iter()
            .map(|&(i, j)| {
                let p = with_kt(&p0, kts[i]);
                let dt = xs[j] / p.alpha;
                let mut why = Reasons::default();
                let htv = match high_temp_value(&p, dt, source) {
                    Ok(v) => v,
                    Err(e) => {
                        why.add(error_code(&e));
                        f64::NAN
                    }
                };
                let min_alpha_tilde = match &min_x[i] {
                    Ok(Some(x)) => *x,
                    Ok(None) => {
                        why.add("never-holds");
                        f64::NAN
                    }
                    Err(e) => {
                        why.add(error_code(e));
                        f64::NAN
                    }
                };
                let mut holds = 0usize;
                let mut failed = false;
                for &t2 in &t2s {
                    match middle_condition(&p, dt, t2 / p.omega, source) {
                        Ok(h) => holds += usize::from(h),
                        Err(e) => {
                            why.add(error_code(&e));
                            failed = true;
                        }
                    }
                }
                let frac = if failed { f64::NAN } else { holds as f64 / t2s.len() as f64 };
                let cond = htv > 1.0;
                RegionRow {
                    i,
                    j,
                    kt: kts[i],
                    alpha_tilde: xs[j],
                    dt,
                    high_temp_value: htv,
                    high_temp_condition: cond,
                    min_alpha_tilde,
                    middle_condition_fraction: frac,
                    certified: cond && p.underdamped_positivity_regime(),
                    nan_reason: why.finish(),
                    provenance: prov.clone(),
                }
            })
            .collect()
    });
    let path = out.csv("region_map.csv", &rows)?;
    let n_true = rows.iter().filter(|r| r.high_temp_condition).count();
    println!(
        "region-map: {} x {} grid, high-temperature condition holds in {n_true} cells -> {}",
        kts.len(),
        xs.len(),
        path.display()
    );
    Ok(())
}

#[derive(Serialize)]
struct EntropyRow {
    alpha_tilde: f64,
    t: f64,
    entropy: f64,
    entropy_check: f64,
    entropy_error: f64,
    dq2_min: f64,
    dp2_min: f64,
    dq2_asymptotic: f64,
    dp2_asymptotic: f64,
    samples: usize,
    floor_violations: usize,
    min_dq2_margin: f64,
    min_dp2_margin: f64,
    nan_reason: String,
    provenance: String,
}

pub fn entropy_curve(cfg: &Config, out: &Out, pool: &ThreadPool) -> Result<(), CliError> {
    let p = cfg.params.resolve()?;
    let xs = cfg.entropy_curve.alpha_tilde.values("entropy_curve.alpha_tilde")?;
    if xs[0] < 0.0 {
        return Err(CliError::Config("entropy_curve.alpha_tilde must be >= 0".into()));
    }
    let n = cfg.entropy_curve.samples;
    let states = StateSampler::new(cfg.seed).take(&p, n);
    let prov = provenance("inner::coherent_entropy");
    let rows: Vec<EntropyRow> = pool.install(|| {
        xs.par_iter()
            .map(|&x| {
                let t = x / p.alpha;
                let mut why = Reasons::default();
                let s = coherent_entropy(&p, t);
                // J applied to the state that its unitary part maps to the vacuum
                let u = inner_unitary(&p, t);
                let vac = GaussianState::vacuum(&p);
                let pre = GaussianState::new([0.0, 0.0], vac.cov.congruence(&u.inverse()));
                let ch = inner_channel(&p, t);
                let check = why.or_nan(linear_entropy(&apply_channel(&ch, &pre), &p, cfg.tol_phys).ok(), "non-physical");
                let f = uncertainty_floors(&p, t);
                let (mut violations, mut mq, mut mp) = (0, f64::INFINITY, f64::INFINITY);
                for s0 in &states {
                    let o = apply_channel(&ch, s0);
                    let (a, b) = (o.cov.qq - f.dq2_min, o.cov.pp - f.dp2_min);
                    violations += usize::from(a < 0.0 || b < 0.0);
                    mq = mq.min(a);
                    mp = mp.min(b);
                }
                if n == 0 {
                    why.add("no-samples");
                    (mq, mp) = (f64::NAN, f64::NAN);
                }
                EntropyRow {
                    alpha_tilde: x,
                    t,
                    entropy: s,
                    entropy_check: check,
                    entropy_error: (s - check).abs(),
                    dq2_min: f.dq2_min,
                    dp2_min: f.dp2_min,
                    dq2_asymptotic: f.dq2_asymptotic,
                    dp2_asymptotic: f.dp2_asymptotic,
                    samples: n,
                    floor_violations: violations,
                    min_dq2_margin: mq,
                    min_dp2_margin: mp,
                    nan_reason: why.finish(),
                    provenance: prov.clone(),
                }
            })
            .collect()
    });
    let path = out.csv("entropy_curve.csv", &rows)?;
    let worst = rows.iter().map(|r| r.entropy_error).fold(0.0, f64::max);
    let increasing = rows.windows(2).all(|w| w[1].entropy > w[0].entropy);
    let violations: usize = rows.iter().map(|r| r.floor_violations).sum();
    println!(
        "entropy-curve: {} points, max entropy mismatch {worst:.2e}, increasing {increasing}, \
         floor violations {violations} -> {}",
        rows.len(),
        path.display()
    );
    Ok(())
}

#[derive(Serialize)]
struct ViolationReport<'a> {
    params: PhysParams,
    propagator: Propagator,
    dim: usize,
    search: &'a qbm::oracles::violation::SearchBox,
    found: bool,
    best_min_eig: f64,
    certificate: Option<ViolationCertificate>,
    provenance: String,
}

#[derive(Serialize)]
struct ViolationRow {
    found: bool,
    squeeze_r: f64,
    t: f64,
    min_eig: f64,
    gaussian_deficit: f64,
    agree: Option<bool>,
    dim: usize,
    nan_reason: String,
    provenance: String,
}

pub fn violation_demo(cfg: &Config, out: &Out) -> Result<(), CliError> {
    let p = cfg.params.resolve()?;
    let vc = &cfg.violation_demo;
    let prop = match cfg.propagator.unwrap_or(PropagatorKind::Outer) {
        PropagatorKind::Outer => Propagator::Bare,
        PropagatorKind::Gao => Propagator::Gao,
        PropagatorKind::Patched => {
            let source = cfg.lambda_source();
            Propagator::Patched { dt: patch_time(&p, vc.dt, vc.dt_factor, source)?, source }
        }
        k => return Err(CliError::Config(format!("violation-demo supports outer, gao and patched, not {k:?}"))),
    };
    let dim = cfg.fock_dim.unwrap_or(40);
    let prov = provenance("oracles::violation::demo_violation");
    let (cert, best) = match demo_violation_with(&p, dim, prop, &vc.search) {
        Ok(c) => (Some(c), c.min_eig),
        Err(Error::NoViolationFound { best_min_eig, .. }) => (None, best_min_eig),
        Err(e) => return Err(e.into()),
    };
    let report = ViolationReport {
        params: p,
        propagator: prop,
        dim,
        search: &vc.search,
        found: cert.is_some(),
        best_min_eig: best,
        certificate: cert,
        provenance: prov.clone(),
    };
    let json = out.json("violation.json", &report)?;
    let mut why = Reasons::default();
    let row = ViolationRow {
        found: cert.is_some(),
        squeeze_r: why.or_nan(cert.map(|c| c.squeeze_r), "no-violation-found"),
        t: why.or_nan(cert.map(|c| c.t), "no-violation-found"),
        min_eig: best,
        gaussian_deficit: why.or_nan(cert.map(|c| c.gaussian_deficit), "no-violation-found"),
        agree: cert.map(|c| c.agree),
        dim,
        nan_reason: why.finish(),
        provenance: prov,
    };
    out.csv("violation.csv", &[row])?;
    match cert {
        Some(c) => println!(
            "violation-demo: minEig {:.3e} at r = {:.3}, t = {:.4e}; Gaussian deficit {:.3e}; agree {} -> {}",
            c.min_eig,
            c.squeeze_r,
            c.t,
            c.gaussian_deficit,
            c.agree,
            json.display()
        ),
        None => println!("violation-demo: no violation found (best minEig {best:.3e}) -> {}", json.display()),
    }
    Ok(())
}

#[derive(Serialize)]
struct VerifyRow {
    check_name: String,
    dimension: Option<usize>,
    residual: f64,
    tolerance: f64,
    pass: bool,
    provenance: String,
}

pub fn verify(cfg: &Config, out: &Out, pool: &ThreadPool) -> Result<(), CliError> {
    let mut suite = cfg.verify.clone();
    if let Some(d) = cfg.fock_dim {
        suite.smearing_dim = d;
        suite.dilation_dim = d;
        suite.algebra_dims = vec![d];
        suite.flow_dim = d;
        suite.wei_norman_dim = d;
    }
    let checks: Vec<Check> = if suite.only.is_empty() { Check::ALL.to_vec() } else { suite.only.clone() };
    let reports: Vec<OracleReport> = pool.install(|| {
        checks
            .par_iter()
            .map(|&c| run_check(&suite, c))
            .collect::<Vec<_>>()
            .into_iter()
            .flatten()
            .collect()
    });
    let prov = provenance("oracles::suite::run_check");
    let mut rows = Vec::new();
    for r in &reports {
        let name = match r.dimension {
            Some(d) => format!("verify/{}-d{d}.json", r.check_name),
            None => format!("verify/{}.json", r.check_name),
        };
        out.json(&name, r)?;
        println!(
            "{:<24} {:>8} residual {:.3e} tol {:.0e} {}",
            r.check_name,
            r.dimension.map(|d| format!("d={d}")).unwrap_or_default(),
            r.residual,
            r.tolerance,
            if r.pass { "PASS" } else { "FAIL" }
        );
        rows.push(VerifyRow {
            check_name: r.check_name.clone(),
            dimension: r.dimension,
            residual: r.residual,
            tolerance: r.tolerance,
            pass: r.pass,
            provenance: prov.clone(),
        });
    }
    out.json("verify_report.json", &serde_json::json!({ "config": suite, "reports": reports }))?;
    out.csv("verify.csv", &rows)?;
    let failed: Vec<&str> = reports.iter().filter(|r| !r.pass).map(|r| r.check_name.as_str()).collect();
    if failed.is_empty() {
        Ok(())
    } else {
        Err(CliError::Verification(format!("failed checks: {}", failed.join(", "))))
    }
}

#[derive(Serialize)]
struct SweepRow {
    index: usize,
    mass: f64,
    omega: f64,
    gamma: f64,
    alpha: f64,
    temperature: f64,
    hbar: f64,
    kb: f64,
    kt: f64,
    t1: f64,
    t2: f64,
    underdamped: bool,
    high_temp_value: f64,
    high_temp_condition: Option<bool>,
    middle_condition: Option<bool>,
    lam_plus: f64,
    lam_minus: f64,
    inner_lam_plus: f64,
    inner_lam_minus: f64,
    cp_margin_exact: f64,
    cp_margin_outer: f64,
    cp_margin_patched: f64,
    nan_reason: String,
    provenance: String,
}

pub fn sweep(cfg: &Config, out: &Out, pool: &ThreadPool) -> Result<(), CliError> {
    let base = cfg.params.resolve()?;
    let sc = &cfg.sweep;
    let mut axes = Vec::new();
    for a in &sc.axes {
        if !AXIS_NAMES.contains(&a.name.as_str()) {
            return Err(CliError::Config(format!("unknown sweep axis {:?}; expected one of {AXIS_NAMES:?}", a.name)));
        }
        if axes.iter().any(|(n, _): &(String, Vec<f64>)| *n == a.name) {
            return Err(CliError::Config(format!("sweep axis {:?} given twice", a.name)));
        }
        axes.push((a.name.clone(), a.values.values(&format!("sweep axis {}", a.name))?));
    }
    // row-major over the axes, the first axis varying slowest
    let total: usize = axes.iter().map(|(_, v)| v.len()).product();
    let source = cfg.lambda_source();
    let prov = provenance("sweep");
    let cell = |index: usize| -> Result<SweepRow, CliError> {
        let mut rest = index;
        let mut picks = vec![0.0; axes.len()];
        for (k, (_, v)) in axes.iter().enumerate().rev() {
            picks[k] = v[rest % v.len()];
            rest /= v.len();
        }
        let get = |name: &str| axes.iter().position(|(n, _)| n == name).map(|k| picks[k]);
        let mut p = base;
        for (name, field) in [
            ("mass", &mut p.mass),
            ("omega", &mut p.omega),
            ("gamma", &mut p.gamma),
            ("alpha", &mut p.alpha),
            ("temperature", &mut p.temperature),
            ("hbar", &mut p.hbar),
            ("kb", &mut p.kb),
        ] {
            if let Some(v) = get(name) {
                *field = v;
            }
        }
        if let Some(kt) = get("kt") {
            p = with_kt(&p, kt);
        }
        p.validate()?;
        let mut why = Reasons::default();
        let t1 = match get("t1").or(sc.t1) {
            Some(t) => t,
            None => match minimal_patch_time(&p, source, PATCH_SEARCH_MAX) {
                Ok(Some(t)) => sc.t1_factor * t,
                Ok(None) => {
                    why.add("never-holds");
                    f64::NAN
                }
                Err(e) => {
                    why.add(error_code(&e));
                    f64::NAN
                }
            },
        };
        let t2 = get("t2").unwrap_or(sc.t2);
        if t1 < 0.0 || t2 < 0.0 {
            return Err(CliError::Config(format!("sweep times must be >= 0, got t1 = {t1}, t2 = {t2}")));
        }
        let t = t1 + t2;
        let have_t1 = t1.is_finite();
        let htv = if have_t1 { note(high_temp_value(&p, t1, source), &mut why) } else { f64::NAN };
        let middle = if have_t1 {
            match middle_condition(&p, t1, t2, source) {
                Ok(h) => Some(h),
                Err(e) => {
                    why.add(error_code(&e));
                    None
                }
            }
        } else {
            None
        };
        let (lp, lm) = if have_t1 {
            match ExactDynamics::new(&p).and_then(|d| d.noise_moments(p.to_internal_time(t1), &NoiseOptions::default())) {
                Ok(nm) => (nm.lam_plus, nm.lam_minus),
                Err(e) => {
                    why.add(error_code(&e));
                    (f64::NAN, f64::NAN)
                }
            }
        } else {
            (f64::NAN, f64::NAN)
        };
        let (ilp, ilm) = if have_t1 { inner_lambdas(&p, &InnerParams::new(&p, t1)) } else { (f64::NAN, f64::NAN) };
        let margin = |c: qbm::Result<GaussianChannel>| c.map(|c| c.cp_margin(p.hbar));
        let exact = if have_t1 { note(margin(exact_channel(&p, t)), &mut why) } else { f64::NAN };
        let outer = if have_t1 { note(margin(outer_channel(&p, t, false)), &mut why) } else { f64::NAN };
        let patched = if have_t1 {
            note(patched_channel(&p, t1, t, false, source).map(|c| c.channel.cp_margin(p.hbar)), &mut why)
        } else {
            f64::NAN
        };
        Ok(SweepRow {
            index,
            mass: p.mass,
            omega: p.omega,
            gamma: p.gamma,
            alpha: p.alpha,
            temperature: p.temperature,
            hbar: p.hbar,
            kb: p.kb,
            kt: p.dimensionless().kt,
            t1,
            t2,
            underdamped: p.underdamped_positivity_regime(),
            high_temp_value: htv,
            high_temp_condition: htv.is_finite().then_some(htv > 1.0),
            middle_condition: middle,
            lam_plus: lp,
            lam_minus: lm,
            inner_lam_plus: ilp,
            inner_lam_minus: ilm,
            cp_margin_exact: exact,
            cp_margin_outer: outer,
            cp_margin_patched: patched,
            nan_reason: why.finish(),
            provenance: prov.clone(),
        })
    };
    let rows: Vec<SweepRow> = pool.install(|| (0..total).into_par_iter().map(cell).collect::<Result<_, _>>())?;
    let path = out.csv("sweep.csv", &rows)?;
    let certified = rows
        .iter()
        .filter(|r| r.underdamped && r.high_temp_condition == Some(true))
        .count();
    println!("sweep: {} cells, {certified} certified by the high-temperature condition -> {}", rows.len(), path.display());
    Ok(())
}
