//! Physical parameters and the conversion between raw and oscillator units.
//!
//! Internally every computation runs with hbar = m = omega = 1: times are
//! measured in units of 1/omega, positions in sqrt(hbar/(m omega)) and momenta
//! in sqrt(hbar m omega). [`PhysParams`] carries raw values and converts at the
//! API boundary.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::mat2::{Mat2, Sym2};

/// Ratio alpha/omega below which the cutoff is reported as not well separated.
pub const CUTOFF_WARNING_RATIO: f64 = 10.0;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PhysParams {
    /// Oscillator mass m.
    pub mass: f64,
    /// Oscillator angular frequency omega.
    pub omega: f64,
    /// Damping constant Gamma.
    pub gamma: f64,
    /// High-frequency cutoff alpha of the Drude spectral strength.
    pub alpha: f64,
    /// Reservoir temperature T.
    pub temperature: f64,
    #[serde(default = "one")]
    pub hbar: f64,
    #[serde(default = "one")]
    pub kb: f64,
}

fn one() -> f64 {
    1.0
}

/// The dimensionless combinations that the dynamics depends on.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Dimensionless {
    /// Gamma / omega
    pub gamma: f64,
    /// alpha / omega
    pub alpha: f64,
    /// k T / (hbar omega)
    pub kt: f64,
}

impl PhysParams {
    /// Parameters in oscillator units: m = omega = hbar = k = 1.
    pub fn oscillator_units(gamma: f64, alpha: f64, kt: f64) -> Self {
        Self {
            mass: 1.0,
            omega: 1.0,
            gamma,
            alpha,
            temperature: kt,
            hbar: 1.0,
            kb: 1.0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let fields = [
            ("mass", self.mass),
            ("omega", self.omega),
            ("gamma", self.gamma),
            ("alpha", self.alpha),
            ("temperature", self.temperature),
            ("hbar", self.hbar),
            ("kb", self.kb),
        ];
        for (name, v) in fields {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::InvalidParams(format!(
                    "{name} must be finite and strictly positive, got {v}"
                )));
            }
        }
        Ok(())
    }

    /// omega > Gamma, the hypothesis under which the patched propagator is
    /// shown to preserve positivity.
    pub fn underdamped_positivity_regime(&self) -> bool {
        self.omega > self.gamma
    }

    /// True when alpha/omega is below [`CUTOFF_WARNING_RATIO`].
    pub fn cutoff_warning(&self) -> bool {
        self.alpha / self.omega < CUTOFF_WARNING_RATIO
    }

    pub fn kt(&self) -> f64 {
        self.kb * self.temperature
    }

    pub fn dimensionless(&self) -> Dimensionless {
        Dimensionless {
            gamma: self.gamma / self.omega,
            alpha: self.alpha / self.omega,
            kt: self.kt() / (self.hbar * self.omega),
        }
    }

    /// beta_max = hbar alpha / k T.
    pub fn beta_max(&self) -> f64 {
        self.hbar * self.alpha / self.kt()
    }

    /// Coupling strength kappa of the Drude spectral strength that reproduces
    /// the pole structure of the trajectory function A(t) exactly.
    ///
    /// kappa tends to 2 Gamma as alpha grows.
    pub fn kappa(&self) -> f64 {
        let d = self.dimensionless();
        d.kappa() * self.omega
    }

    pub fn length_unit(&self) -> f64 {
        (self.hbar / (self.mass * self.omega)).sqrt()
    }

    pub fn momentum_unit(&self) -> f64 {
        (self.hbar * self.mass * self.omega).sqrt()
    }

    fn unit_diag(&self) -> Mat2 {
        Mat2::diag(self.length_unit(), self.momentum_unit())
    }

    /// Raw time to oscillator time omega * t.
    pub fn to_internal_time(&self, t: f64) -> f64 {
        self.omega * t
    }

    pub fn to_raw_time(&self, tau: f64) -> f64 {
        tau / self.omega
    }

    /// Transition matrix in oscillator units to raw units.
    pub fn trans_to_raw(&self, t: &Mat2) -> Mat2 {
        let u = self.unit_diag();
        u * *t * u.inverse()
    }

    pub fn trans_to_internal(&self, t: &Mat2) -> Mat2 {
        let u = self.unit_diag();
        u.inverse() * *t * u
    }

    /// Second-moment matrix in oscillator units to raw units.
    pub fn sym_to_raw(&self, s: &Sym2) -> Sym2 {
        s.congruence(&self.unit_diag())
    }

    pub fn sym_to_internal(&self, s: &Sym2) -> Sym2 {
        s.congruence(&self.unit_diag().inverse())
    }

    pub fn mean_to_raw(&self, m: [f64; 2]) -> [f64; 2] {
        [m[0] * self.length_unit(), m[1] * self.momentum_unit()]
    }

    pub fn mean_to_internal(&self, m: [f64; 2]) -> [f64; 2] {
        [m[0] / self.length_unit(), m[1] / self.momentum_unit()]
    }
}

impl Dimensionless {
    /// Damped frequency Omega with Omega^2 = alpha/(alpha - 2 Gamma) - Gamma^2.
    pub fn omega_sq(&self) -> f64 {
        self.alpha / (self.alpha - 2.0 * self.gamma) - self.gamma * self.gamma
    }

    pub fn kappa(&self) -> f64 {
        let (g, a) = (self.gamma, self.alpha);
        2.0 * g * (a - 2.0 * g) / a + 2.0 * g / (a * (a - 2.0 * g))
    }

    pub fn beta_max(&self) -> f64 {
        self.alpha / self.kt
    }
}

pub(crate) fn check_time(t: f64) -> Result<()> {
    if t.is_finite() && t >= 0.0 {
        Ok(())
    } else {
        Err(Error::InvalidTime(t))
    }
}
