//! JSON run configuration. Unknown keys are rejected everywhere; command-line
//! overrides are applied to the JSON tree before it is parsed, so they go
//! through the same checks.

use std::path::Path;

use serde::{Deserialize, Serialize};
use serde_json::Value;

use qbm::oracles::suite::SuiteConfig;
use qbm::oracles::violation::SearchBox;
use qbm::wei_norman::LambdaSource;
use qbm::{GaussianState, PhysParams, Sym2};

use crate::CliError;

/// Physical parameters, either in full or as the three ratios the dynamics
/// depends on (then m = omega = hbar = k = 1).
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ParamsSpec {
    Raw(PhysParams),
    Ratios(Ratios),
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Ratios {
    /// Gamma / omega
    pub gamma: f64,
    /// alpha / omega
    pub alpha: f64,
    /// k T / hbar omega
    pub kt: f64,
}

impl Default for ParamsSpec {
    fn default() -> Self {
        ParamsSpec::Ratios(Ratios { gamma: 0.1, alpha: 100.0, kt: 10.0 })
    }
}

impl ParamsSpec {
    pub fn resolve(&self) -> Result<PhysParams, CliError> {
        let p = match *self {
            ParamsSpec::Raw(p) => p,
            ParamsSpec::Ratios(r) => PhysParams::oscillator_units(r.gamma, r.alpha, r.kt),
        };
        p.validate()?;
        Ok(p)
    }
}

/// A list of values, or an evenly spaced grid.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Grid {
    Values(Vec<f64>),
    Range(Range),
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Range {
    pub start: f64,
    pub stop: f64,
    pub points: usize,
    /// Geometric spacing; needs start > 0.
    #[serde(default)]
    pub log: bool,
}

impl Grid {
    pub fn range(start: f64, stop: f64, points: usize, log: bool) -> Self {
        Grid::Range(Range { start, stop, points, log })
    }

    /// The grid values, checked to be finite and strictly increasing.
    pub fn values(&self, what: &str) -> Result<Vec<f64>, CliError> {
        let v = match self {
            Grid::Values(v) => v.clone(),
            Grid::Range(r) => {
                if r.points == 0 || (r.log && r.start <= 0.0) {
                    return Err(CliError::Config(format!("{what}: bad range {r:?}")));
                }
                if r.points == 1 {
                    vec![r.start]
                } else {
                    let n = (r.points - 1) as f64;
                    (0..r.points)
                        .map(|i| {
                            let f = i as f64 / n;
                            if r.log {
                                r.start * (r.stop / r.start).powf(f)
                            } else {
                                r.start + (r.stop - r.start) * f
                            }
                        })
                        .collect()
                }
            }
        };
        if v.is_empty() || v.iter().any(|x| !x.is_finite()) || v.windows(2).any(|w| w[1] <= w[0]) {
            return Err(CliError::Config(format!("{what} must be a non-empty, finite, strictly increasing grid")));
        }
        Ok(v)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum PropagatorKind {
    Exact,
    Inner,
    Outer,
    Gao,
    Patched,
}

/// Initial Gaussian state. Means of `squeezed` are in oscillator units.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum InitialSpec {
    Vacuum,
    Squeezed {
        r: f64,
        #[serde(default)]
        phi: f64,
        #[serde(default)]
        mean: [f64; 2],
    },
    /// Raw units.
    State { mean_q: f64, mean_p: f64, cov_qq: f64, cov_pp: f64, cov_qp: f64 },
}

impl InitialSpec {
    pub fn state(&self, p: &PhysParams) -> GaussianState {
        match *self {
            InitialSpec::Vacuum => GaussianState::vacuum(p),
            InitialSpec::Squeezed { r, phi, mean } => {
                let mut s = GaussianState::squeezed_vacuum(p, r, phi);
                s.mean = p.mean_to_raw(mean);
                s
            }
            InitialSpec::State { mean_q, mean_p, cov_qq, cov_pp, cov_qp } => {
                GaussianState::new([mean_q, mean_p], Sym2::new(cov_qq, cov_pp, cov_qp))
            }
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct EvolveConfig {
    /// Raw times.
    pub times: Grid,
    pub initial: InitialSpec,
    /// When non-zero, evolve this many seeded random states instead of `initial`.
    pub samples: usize,
    /// Raw patch time; defaults to `dt_factor` times the smallest time at
    /// which the high-temperature condition holds.
    pub dt: Option<f64>,
    pub dt_factor: f64,
}

impl Default for EvolveConfig {
    fn default() -> Self {
        Self {
            times: Grid::range(0.0, 10.0, 101, false),
            initial: InitialSpec::Vacuum,
            samples: 0,
            dt: None,
            dt_factor: 1.2,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RegionMapConfig {
    /// k T / hbar omega axis.
    pub kt: Grid,
    /// alpha dt axis.
    pub alpha_tilde: Grid,
    /// omega t2 grid for the middle-factor condition.
    pub t2: Grid,
    /// Upper end of the search for the smallest admissible alpha dt.
    pub max_alpha_tilde: f64,
}

impl Default for RegionMapConfig {
    fn default() -> Self {
        Self {
            kt: Grid::range(0.25, 100.0, 13, true),
            alpha_tilde: Grid::range(0.05, 50.0, 16, true),
            t2: Grid::Values(vec![0.01, 0.05, 0.1, 0.5, 1.0]),
            max_alpha_tilde: 200.0,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct EntropyConfig {
    /// alpha t grid inside the inner layer.
    pub alpha_tilde: Grid,
    /// Random pure states pushed through J(t) at every grid point.
    pub samples: usize,
}

impl Default for EntropyConfig {
    fn default() -> Self {
        Self { alpha_tilde: Grid::range(0.0, 10.0, 101, false), samples: 500 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ViolationConfig {
    pub search: SearchBox,
    /// Raw patch time for the patched propagator; defaults as in `evolve`.
    pub dt: Option<f64>,
    pub dt_factor: f64,
}

impl Default for ViolationConfig {
    fn default() -> Self {
        Self { search: SearchBox::default(), dt: None, dt_factor: 1.2 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Axis {
    /// A `PhysParams` field, `kt` (sets the temperature), `t1` or `t2`
    /// (raw times).
    pub name: String,
    pub values: Grid,
}

pub const AXIS_NAMES: [&str; 10] = ["mass", "omega", "gamma", "alpha", "temperature", "hbar", "kb", "kt", "t1", "t2"];

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SweepConfig {
    pub axes: Vec<Axis>,
    /// Raw t1 when no `t1` axis is given; defaults as `evolve.dt`.
    pub t1: Option<f64>,
    pub t1_factor: f64,
    /// Raw t2 when no `t2` axis is given.
    pub t2: f64,
}

impl Default for SweepConfig {
    fn default() -> Self {
        Self {
            axes: vec![
                Axis { name: "gamma".into(), values: Grid::Values(vec![0.02, 0.05, 0.1, 0.2]) },
                Axis { name: "kt".into(), values: Grid::Values(vec![1.0, 3.0, 10.0, 30.0]) },
            ],
            t1: None,
            t1_factor: 1.2,
            t2: 1.0,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Config {
    pub params: ParamsSpec,
    /// Seed for every random draw, including the oracle suite.
    pub seed: u64,
    /// A state is flagged when det(cov) - hbar^2/4 < -tol_phys hbar^2.
    pub tol_phys: f64,
    /// Fock dimension for `violation-demo`; for `verify` it replaces every
    /// oracle dimension.
    pub fock_dim: Option<usize>,
    /// Propagator for `evolve` (default exact) and `violation-demo`
    /// (default outer).
    pub propagator: Option<PropagatorKind>,
    /// Take the noise at the patch time from the inner-limit formulas rather
    /// than the exact noise integrals.
    pub inner_lambda: bool,
    pub evolve: EvolveConfig,
    pub region_map: RegionMapConfig,
    pub entropy_curve: EntropyConfig,
    pub violation_demo: ViolationConfig,
    pub sweep: SweepConfig,
    pub verify: SuiteConfig,
}

impl Default for Config {
    fn default() -> Self {
        Self {
            params: ParamsSpec::default(),
            seed: 1,
            tol_phys: qbm::phase_space::TOL_PHYS,
            fock_dim: None,
            propagator: None,
            inner_lambda: false,
            evolve: EvolveConfig::default(),
            region_map: RegionMapConfig::default(),
            entropy_curve: EntropyConfig::default(),
            violation_demo: ViolationConfig::default(),
            sweep: SweepConfig::default(),
            verify: SuiteConfig::default(),
        }
    }
}

impl Config {
    pub fn lambda_source(&self) -> LambdaSource {
        if self.inner_lambda {
            LambdaSource::InnerLimit
        } else {
            LambdaSource::FullPipeline
        }
    }

    /// Overlays the file at `path` on the defaults, applies `key.path=value`
    /// overrides and parses the result.
    pub fn load(path: Option<&Path>, overrides: &[(String, Value)]) -> Result<Self, CliError> {
        let mut doc = serde_json::to_value(Config::default()).expect("default config serializes");
        if let Some(path) = path {
            let text = std::fs::read_to_string(path)
                .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
            let file: Value =
                serde_json::from_str(&text).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
            let Value::Object(file) = file else {
                return Err(CliError::Config(format!("{}: expected a JSON object", path.display())));
            };
            let Value::Object(base) = &mut doc else { unreachable!() };
            for (key, value) in file {
                // `params` picks one of two shapes, so it is taken whole
                match base.get_mut(&key) {
                    Some(slot) if key != "params" => merge(slot, value),
                    _ => {
                        base.insert(key, value);
                    }
                }
            }
        }
        for (key, value) in overrides {
            set_path(&mut doc, key, value.clone())?;
        }
        let mut cfg: Config = serde_json::from_value(doc).map_err(|e| CliError::Config(e.to_string()))?;
        cfg.verify.seed = cfg.seed;
        if !(cfg.tol_phys >= 0.0 && cfg.tol_phys.is_finite()) {
            return Err(CliError::Config(format!("tol_phys must be finite and >= 0, got {}", cfg.tol_phys)));
        }
        Ok(cfg)
    }
}

/// Parses `a.b.c=value`. The value is read as JSON when it parses, otherwise
/// as a string.
pub fn parse_override(s: &str) -> Result<(String, Value), CliError> {
    let (key, raw) = s
        .split_once('=')
        .ok_or_else(|| CliError::Config(format!("override {s:?} is not of the form key.path=value")))?;
    if key.is_empty() || key.split('.').any(str::is_empty) {
        return Err(CliError::Config(format!("bad override key {key:?}")));
    }
    let value = serde_json::from_str(raw).unwrap_or_else(|_| Value::String(raw.to_string()));
    Ok((key.to_string(), value))
}

/// Overlays `over` on `base`, recursing into objects present in both.
fn merge(base: &mut Value, over: Value) {
    match (base, over) {
        (Value::Object(b), Value::Object(o)) => {
            for (k, v) in o {
                match b.get_mut(&k) {
                    Some(slot) => merge(slot, v),
                    None => {
                        b.insert(k, v);
                    }
                }
            }
        }
        (slot, v) => *slot = v,
    }
}

fn set_path(doc: &mut Value, key: &str, value: Value) -> Result<(), CliError> {
    let mut cur = doc;
    let parts: Vec<&str> = key.split('.').collect();
    for (i, part) in parts.iter().enumerate() {
        let Value::Object(map) = cur else {
            return Err(CliError::Config(format!("override {key}: {} is not an object", parts[..i].join("."))));
        };
        if i + 1 == parts.len() {
            map.insert(part.to_string(), value);
            return Ok(());
        }
        cur = map.entry(part.to_string()).or_insert_with(|| Value::Object(Default::default()));
    }
    Ok(())
}
