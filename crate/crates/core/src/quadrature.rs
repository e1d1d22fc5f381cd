//! Globally adaptive Gauss-Kronrod (10/21) quadrature for vector-valued
//! integrands.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use crate::error::{Error, Result};

#[allow(clippy::excessive_precision)]
const XGK: [f64; 11] = [
    0.995_657_163_025_808_080_735_527_280_689,
    0.973_906_528_517_171_720_077_964_012_084,
    0.930_157_491_355_708_226_001_207_180_060,
    0.865_063_366_688_984_510_732_096_688_424,
    0.780_817_726_586_416_897_063_717_578_345,
    0.679_409_568_299_024_406_234_327_365_115,
    0.562_757_134_668_604_683_339_000_099_273,
    0.433_395_394_129_247_190_799_265_943_166,
    0.294_392_862_701_460_198_131_126_603_104,
    0.148_874_338_981_631_210_884_826_001_130,
    0.0,
];

#[allow(clippy::excessive_precision)]
const WGK: [f64; 11] = [
    0.011_694_638_867_371_874_278_064_396_062,
    0.032_558_162_307_964_727_478_818_972_460,
    0.054_755_896_574_351_996_031_381_300_245,
    0.075_039_674_810_919_952_767_043_140_916,
    0.093_125_454_583_697_605_535_065_465_083,
    0.109_387_158_802_297_641_899_210_590_326,
    0.123_491_976_262_065_851_077_958_109_831,
    0.134_709_217_311_473_325_928_054_001_772,
    0.142_775_938_577_060_080_797_094_273_139,
    0.147_739_104_901_338_491_374_841_515_972,
    0.149_445_554_002_916_905_664_936_468_390,
];

// Gauss weights for the odd-indexed Kronrod nodes.
#[allow(clippy::excessive_precision)]
const WG: [f64; 5] = [
    0.066_671_344_308_688_137_593_568_809_893,
    0.149_451_349_150_580_593_145_776_339_658,
    0.219_086_362_515_982_043_995_534_934_228,
    0.269_266_719_309_996_355_091_226_921_569,
    0.295_524_224_714_752_870_173_892_994_651,
];

/// Accuracy requirements for [`integrate`].
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct QuadOptions {
    /// Per-component relative tolerance.
    pub rel_tol: f64,
    /// Per-component absolute tolerance.
    pub abs_tol: f64,
    /// Maximum number of panels kept at any time.
    pub max_panels: usize,
}

impl Default for QuadOptions {
    fn default() -> Self {
        Self {
            rel_tol: 1e-12,
            abs_tol: 1e-300,
            max_panels: 200_000,
        }
    }
}

#[derive(Clone, Debug)]
pub struct QuadResult<const K: usize> {
    pub value: [f64; K],
    pub error: [f64; K],
    pub evaluations: usize,
}

struct Panel<const K: usize> {
    a: f64,
    b: f64,
    value: [f64; K],
    error: [f64; K],
    abs: [f64; K],
    key: f64,
}

impl<const K: usize> PartialEq for Panel<K> {
    fn eq(&self, o: &Self) -> bool {
        self.key == o.key
    }
}
impl<const K: usize> Eq for Panel<K> {}
impl<const K: usize> PartialOrd for Panel<K> {
    fn partial_cmp(&self, o: &Self) -> Option<Ordering> {
        Some(self.cmp(o))
    }
}
impl<const K: usize> Ord for Panel<K> {
    fn cmp(&self, o: &Self) -> Ordering {
        self.key.total_cmp(&o.key)
    }
}

/// Kronrod estimate, |Kronrod - Gauss| and the Kronrod estimate of int |f|.
fn gk21<const K: usize, F: Fn(f64) -> [f64; K]>(
    f: &F,
    a: f64,
    b: f64,
) -> ([f64; K], [f64; K], [f64; K]) {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let mut kron = [0.0; K];
    let mut gauss = [0.0; K];
    let mut abs = [0.0; K];
    let fc = f(c);
    for k in 0..K {
        kron[k] = WGK[10] * fc[k];
        abs[k] = WGK[10] * fc[k].abs();
    }
    for j in 0..10 {
        let dx = h * XGK[j];
        let f1 = f(c - dx);
        let f2 = f(c + dx);
        for k in 0..K {
            let s = f1[k] + f2[k];
            kron[k] += WGK[j] * s;
            abs[k] += WGK[j] * (f1[k].abs() + f2[k].abs());
            if j % 2 == 1 {
                gauss[k] += WG[j / 2] * s;
            }
        }
    }
    let mut err = [0.0; K];
    for k in 0..K {
        kron[k] *= h;
        err[k] = (kron[k] - gauss[k] * h).abs();
        abs[k] *= h.abs();
    }
    (kron, err, abs)
}

fn neumaier_sum<'a, const K: usize>(vals: impl Iterator<Item = &'a [f64; K]>) -> [f64; K] {
    let mut sum = [0.0; K];
    let mut comp = [0.0; K];
    for v in vals {
        for k in 0..K {
            let t = sum[k] + v[k];
            if sum[k].abs() >= v[k].abs() {
                comp[k] += (sum[k] - t) + v[k];
            } else {
                comp[k] += (v[k] - t) + sum[k];
            }
            sum[k] = t;
        }
    }
    for k in 0..K {
        sum[k] += comp[k];
    }
    sum
}

/// Integrate `f` over the union of the panels `[breaks[i], breaks[i+1]]`,
/// bisecting the panel with the largest scaled error until every component
/// meets `max(abs_tol, rel_tol * |I_k|)`. A floor of 50 eps int |f_k| stops
/// the refinement once the error estimate is dominated by rounding.
pub fn integrate<const K: usize, F: Fn(f64) -> [f64; K]>(
    f: F,
    breaks: &[f64],
    opts: &QuadOptions,
) -> Result<QuadResult<K>> {
    assert!(breaks.len() >= 2, "need at least one panel");
    let mut evaluations = 0usize;
    let mut panels: Vec<Panel<K>> = breaks
        .windows(2)
        .map(|w| {
            let (value, error, abs) = gk21(&f, w[0], w[1]);
            evaluations += 21;
            Panel { a: w[0], b: w[1], value, error, abs, key: 0.0 }
        })
        .collect();
    loop {
        let total = neumaier_sum(panels.iter().map(|p| &p.value));
        let err_tot = neumaier_sum(panels.iter().map(|p| &p.error));
        let abs_tot = neumaier_sum(panels.iter().map(|p| &p.abs));
        let mut tol = [0.0; K];
        for k in 0..K {
            tol[k] = opts
                .abs_tol
                .max(opts.rel_tol * total[k].abs())
                .max(50.0 * f64::EPSILON * abs_tot[k]);
        }
        if (0..K).all(|k| err_tot[k] <= tol[k]) {
            return Ok(QuadResult { value: total, error: err_tot, evaluations });
        }
        let score = |e: &[f64; K]| (0..K).map(|k| e[k] / tol[k]).fold(0.0, f64::max);
        let mut heap: BinaryHeap<Panel<K>> = panels
            .drain(..)
            .map(|mut p| {
                p.key = score(&p.error);
                p
            })
            .collect();
        // Bisect the worst panels, tracking the error sum, until it meets the
        // current tolerance; the totals are then recomputed from scratch.
        let mut running = err_tot;
        for _ in 0..heap.len().max(16) {
            let worst = heap.pop().expect("non-empty heap");
            let m = 0.5 * (worst.a + worst.b);
            if !(m > worst.a && m < worst.b) || heap.len() + 2 > opts.max_panels {
                let k = (0..K)
                    .max_by(|&i, &j| (err_tot[i] / tol[i]).total_cmp(&(err_tot[j] / tol[j])))
                    .unwrap_or(0);
                return Err(Error::QuadratureFailure {
                    estimate: err_tot[k],
                    tolerance: tol[k],
                });
            }
            for (r, e) in running.iter_mut().zip(&worst.error) {
                *r -= e;
            }
            for (a, b) in [(worst.a, m), (m, worst.b)] {
                let (value, error, abs) = gk21(&f, a, b);
                evaluations += 21;
                for (r, e) in running.iter_mut().zip(&error) {
                    *r += e;
                }
                let key = score(&error);
                heap.push(Panel { a, b, value, error, abs, key });
            }
            if (0..K).all(|k| running[k] <= tol[k]) {
                break;
            }
        }
        panels = heap.into_vec();
    }
}

/// Integrate over [0, inf): panels `breaks` (starting at 0) cover the bulk,
/// the tail beyond the last break is mapped to (0, 1] by w = w_last / u.
pub fn integrate_half_line<const K: usize, F: Fn(f64) -> [f64; K]>(
    f: F,
    breaks: &[f64],
    opts: &QuadOptions,
) -> Result<QuadResult<K>> {
    let w_last = *breaks.last().expect("non-empty breaks");
    let bulk = integrate(&f, breaks, opts)?;
    let tail = integrate(
        |u: f64| {
            let w = w_last / u;
            let mut v = f(w);
            let jac = w_last / (u * u);
            for x in v.iter_mut() {
                *x *= jac;
            }
            v
        },
        &[0.0, 1.0],
        &QuadOptions { abs_tol: opts.abs_tol.max(opts.rel_tol * max_abs(&bulk.value)), ..*opts },
    )?;
    let mut value = [0.0; K];
    let mut error = [0.0; K];
    for k in 0..K {
        value[k] = bulk.value[k] + tail.value[k];
        error[k] = bulk.error[k] + tail.error[k];
    }
    Ok(QuadResult { value, error, evaluations: bulk.evaluations + tail.evaluations })
}

fn max_abs(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |m, x| m.max(x.abs()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn polynomial_is_exact() {
        let r = integrate(|x| [x.powi(20), 1.0], &[0.0, 1.0], &QuadOptions::default()).unwrap();
        assert!((r.value[0] - 1.0 / 21.0).abs() < 1e-15);
        assert!((r.value[1] - 1.0).abs() < 1e-15);
    }

    #[test]
    fn oscillatory_and_peaked() {
        let opts = QuadOptions { rel_tol: 1e-12, ..Default::default() };
        let r = integrate(
            |x| [(50.0 * x).sin().powi(2), 1e-3 / (1e-6 + (x - 0.3).powi(2))],
            &[0.0, 1.0],
            &opts,
        )
        .unwrap();
        let exact0 = 0.5 - (100.0f64).sin() / 200.0;
        let exact1 = ((0.7f64 / 1e-3).atan() + (0.3f64 / 1e-3).atan()) * 1.0;
        assert!((r.value[0] - exact0).abs() < 1e-12 * exact0);
        assert!((r.value[1] - exact1).abs() < 1e-11 * exact1);
    }

    #[test]
    fn half_line_lorentzian() {
        let r = integrate_half_line(|x| [1.0 / (1.0 + x * x)], &[0.0, 1.0, 10.0], &QuadOptions::default())
            .unwrap();
        assert!((r.value[0] - PI / 2.0).abs() < 1e-13);
    }

    #[test]
    fn reports_failure() {
        let opts = QuadOptions { max_panels: 8, rel_tol: 1e-14, ..Default::default() };
        let r = integrate(|x: f64| [x.abs().sqrt().recip()], &[-1.0, 1.0], &opts);
        assert!(matches!(r, Err(Error::QuadratureFailure { .. })));
    }
}
