use proptest::prelude::*;

use qbm::exact::{exact_channel, exact_channel_with, factorized_channel, NoiseKernel, NoiseOptions};
use qbm::inner::inner_channel;
use qbm::outer::{outer_channel, outer_flow, patched_channel};
use qbm::phase_space::{apply_channel, compose, compose_all, physicality_deficit};
use qbm::wei_norman::LambdaSource;
use qbm::{Error, GaussianChannel, GaussianState, Mat2, PhysParams, Sym2};

/// Non-unit mass, frequency and hbar, so unit conversions are exercised.
fn scaled() -> PhysParams {
    PhysParams {
        mass: 2.0,
        omega: 3.0,
        gamma: 0.3,
        alpha: 300.0,
        temperature: 45.0,
        hbar: 1.5,
        kb: 1.0,
    }
}

fn close(a: &GaussianChannel, b: &GaussianChannel, tol: f64) -> bool {
    let scale = a.trans.max_abs().max(a.noise.max_abs()).max(1.0);
    a.max_abs_diff(b) <= tol * scale
}

#[test]
fn exact_channel_starts_at_identity() {
    let ch = exact_channel(&scaled(), 0.0).unwrap();
    assert!(close(&ch, &GaussianChannel::identity(), 1e-14), "{ch:?}");
}

#[test]
fn negative_time_is_rejected() {
    assert!(exact_channel(&scaled(), -1.0).is_err());
    assert!(outer_channel(&scaled(), -1.0, false).is_err());
}

#[test]
fn factors_compose_to_exact_channel() {
    let p = scaled();
    for t in [1e-3, 0.05, 0.4, 2.0] {
        let factors = factorized_channel(&p, t).unwrap();
        let composed = compose_all(&factors);
        let exact = exact_channel(&p, t).unwrap();
        assert!(close(&composed, &exact, 1e-9), "t = {t}: {composed:?} vs {exact:?}");
    }
}

#[test]
fn exact_channel_is_completely_positive() {
    for p in [scaled(), PhysParams::oscillator_units(0.1, 100.0, 10.0), PhysParams::oscillator_units(0.5, 20.0, 0.5)] {
        for k in 0..=30 {
            let t = 1e-4 * 1.4f64.powi(k) / p.omega;
            let ch = exact_channel(&p, t).unwrap();
            let margin = ch.cp_margin(p.hbar);
            assert!(margin >= -1e-10 * p.hbar, "t = {t}: margin {margin}");
        }
    }
}

#[test]
fn patched_channel_switches_at_the_patch_time() {
    let p = PhysParams::oscillator_units(0.1, 1e3, 10.0);
    let dt = 0.2;
    let before = patched_channel(&p, dt, 0.1, false, LambdaSource::FullPipeline).unwrap();
    assert!(before.inner_only);
    assert_eq!(before.channel, inner_channel(&p, 0.1));
    let after = patched_channel(&p, dt, 1.0, false, LambdaSource::FullPipeline).unwrap();
    let expected = compose(&outer_channel(&p, 0.8, false).unwrap(), &inner_channel(&p, dt));
    assert!(!after.inner_only);
    assert!(close(&after.channel, &expected, 1e-15));
}

#[test]
fn inner_channel_tracks_classical_kernel_exact_channel() {
    let p = PhysParams::oscillator_units(0.05, 1e3, 10.0);
    let dt = 2.0 / p.alpha;
    let opts = NoiseOptions { kernel: NoiseKernel::HighTemperature, ..Default::default() };
    let exact = exact_channel_with(&p, dt, &opts).unwrap();
    let inner = inner_channel(&p, dt);
    // the inner limit drops the harmonic force over dt, an O(omega dt) change
    // of the transition matrix
    assert!((exact.trans - inner.trans).max_abs() <= 0.02 * exact.trans.max_abs(), "{exact:?} vs {inner:?}");
    for (a, b) in [(exact.noise.qq, inner.noise.qq), (exact.noise.pp, inner.noise.pp)] {
        assert!((a - b).abs() <= 0.02 * a.abs(), "{a} vs {b}");
    }
}

#[test]
fn outer_flow_relaxes_to_equipartition() {
    let p = scaled();
    let s = outer_flow(&p, false).stationary().unwrap();
    let kt = p.kt();
    assert!((s.pp - p.mass * kt).abs() < 1e-10 * s.pp);
    assert!((s.qq - kt / (p.mass * p.omega * p.omega)).abs() < 1e-10 * s.qq);
    assert!(s.qp.abs() < 1e-10);

    let late = apply_channel(&outer_channel(&p, 200.0 / p.gamma, false).unwrap(), &GaussianState::vacuum(&p));
    assert!((late.cov - s).max_abs() < 1e-8 * s.max_abs());
}

#[test]
fn gao_term_only_adds_position_diffusion() {
    let p = scaled();
    let (bare, gao) = (outer_flow(&p, false), outer_flow(&p, true));
    assert_eq!(bare.drift, gao.drift);
    let extra = gao.diffusion - bare.diffusion;
    let expected = p.hbar * p.hbar * p.gamma / (4.0 * p.mass * p.kt());
    assert!((extra.qq - expected).abs() < 1e-15 * expected);
    assert_eq!((extra.pp, extra.qp), (0.0, 0.0));
}

#[test]
fn params_json_rejects_unknown_fields() {
    let ok = r#"{"mass": 1, "omega": 1, "gamma": 0.1, "alpha": 100, "temperature": 10}"#;
    let p: PhysParams = serde_json::from_str(ok).unwrap();
    assert_eq!(p.hbar, 1.0);
    let bad = r#"{"mass": 1, "omega": 1, "gamma": 0.1, "alpha": 100, "temperature": 10, "tau": 3}"#;
    assert!(serde_json::from_str::<PhysParams>(bad).is_err());
}

#[test]
fn invalid_params_are_reported() {
    let p = PhysParams { gamma: -0.1, ..scaled() };
    assert!(matches!(exact_channel(&p, 1.0), Err(Error::InvalidParams(_))));
}

fn state_strategy() -> impl Strategy<Value = (f64, f64, f64, f64)> {
    (0.0..2.3f64, 0.0..std::f64::consts::PI, -3.0..3.0f64, -3.0..3.0f64)
}

fn state(p: &PhysParams, (r, phi, mq, mp): (f64, f64, f64, f64)) -> GaussianState {
    let mut s = GaussianState::squeezed_vacuum(p, r, phi);
    s.mean = p.mean_to_raw([mq, mp]);
    s
}

fn channel_strategy() -> impl Strategy<Value = GaussianChannel> {
    (-2.0..2.0f64, -2.0..2.0f64, -2.0..2.0f64, 0.1..2.0f64, 0.0..1.0f64, 0.0..1.0f64, -0.5..0.5f64).prop_map(
        |(a, b, c, d, nq, np, nqp)| {
            GaussianChannel::new(Mat2::new(d, a, b, c), Sym2::new(nq + nqp.abs(), np + nqp.abs(), nqp))
        },
    )
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn exact_channel_keeps_states_physical(s in state_strategy(), wt in 0.0..10.0f64) {
        let p = PhysParams::oscillator_units(0.1, 100.0, 10.0);
        let out = apply_channel(&exact_channel(&p, wt).unwrap(), &state(&p, s));
        prop_assert!(physicality_deficit(&out, &p) >= -1e-10);
    }

    #[test]
    fn state_unit_conversion_round_trips(s in state_strategy()) {
        let p = scaled();
        let s = state(&p, s);
        let back = s.to_internal(&p).to_raw(&p);
        prop_assert!((back.cov - s.cov).max_abs() <= 1e-13 * s.cov.max_abs());
        prop_assert!((back.mean[0] - s.mean[0]).abs() <= 1e-13 * (1.0 + s.mean[0].abs()));
    }

    #[test]
    fn composition_matches_sequential_application(
        a in channel_strategy(), b in channel_strategy(), c in channel_strategy(), s in state_strategy()
    ) {
        let p = PhysParams::oscillator_units(0.1, 100.0, 10.0);
        let s = state(&p, s);
        let seq = apply_channel(&c, &apply_channel(&b, &apply_channel(&a, &s)));
        let one = apply_channel(&compose_all([&a, &b, &c]), &s);
        let assoc = compose(&c, &compose(&b, &a));
        prop_assert!(close(&assoc, &compose_all([&a, &b, &c]), 1e-12));
        prop_assert!((seq.cov - one.cov).max_abs() <= 1e-10 * (1.0 + seq.cov.max_abs()));
    }

    #[test]
    fn outer_channel_semigroup(t1 in 0.0..3.0f64, t2 in 0.0..3.0f64) {
        let p = scaled();
        let split = compose(&outer_channel(&p, t2, true).unwrap(), &outer_channel(&p, t1, true).unwrap());
        let whole = outer_channel(&p, t1 + t2, true).unwrap();
        prop_assert!(close(&split, &whole, 1e-10));
    }
}
