//! The continuous reference oscillator `s² + b·s + k = 0` in normalized units.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::poly::Complex64;

/// Normalized stiffness `k = k_phys·T²/m` and damping `b = b_phys·T/m`.
///
/// Negative `b` is allowed: it encodes the growing oscillation that an
/// unstable hybrid loop is equivalent to.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ContinuousParams {
    pub k: f64,
    pub b: f64,
}

impl ContinuousParams {
    pub fn new(k: f64, b: f64) -> Self {
        ContinuousParams { k, b }
    }
}

/// Mass and sampling period of the physical setup.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PhysicalUnits {
    pub mass: f64,
    pub period: f64,
}

impl Default for PhysicalUnits {
    fn default() -> Self {
        PhysicalUnits { mass: 1.0, period: 1.0 }
    }
}

impl PhysicalUnits {
    pub fn new(mass: f64, period: f64) -> Result<Self> {
        if !(mass > 0.0 && mass.is_finite()) {
            return Err(Error::InvalidParam(format!("mass must be positive, got {mass}")));
        }
        if !(period > 0.0 && period.is_finite()) {
            return Err(Error::InvalidParam(format!(
                "sampling period must be positive, got {period}"
            )));
        }
        Ok(PhysicalUnits { mass, period })
    }

    pub fn is_normalized(&self) -> bool {
        self.mass == 1.0 && self.period == 1.0
    }

    /// N/m → dimensionless.
    pub fn normalize_stiffness(&self, stiffness: f64) -> f64 {
        stiffness * self.period * self.period / self.mass
    }

    /// N·s/m → dimensionless.
    pub fn normalize_damping(&self, damping: f64) -> f64 {
        damping * self.period / self.mass
    }

    pub fn denormalize_stiffness(&self, stiffness: f64) -> f64 {
        stiffness * self.mass / (self.period * self.period)
    }

    pub fn denormalize_damping(&self, damping: f64) -> f64 {
        damping * self.mass / self.period
    }

    pub fn normalize(&self, k_phys: f64, b_phys: f64) -> ContinuousParams {
        ContinuousParams::new(self.normalize_stiffness(k_phys), self.normalize_damping(b_phys))
    }

    /// Inverse of [`PhysicalUnits::normalize`]: returns `(k_phys, b_phys)`.
    pub fn denormalize(&self, c: ContinuousParams) -> (f64, f64) {
        (self.denormalize_stiffness(c.k), self.denormalize_damping(c.b))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Regime {
    Underdamped,
    Critical,
    Overdamped,
}

/// Poles of `s² + b·s + k`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ContinuousPoles {
    /// `re ± i·im` with `im > 0`.
    Underdamped { re: f64, im: f64 },
    Critical(f64),
    /// Two distinct real poles, slower (larger) first.
    Overdamped(f64, f64),
}

impl ContinuousPoles {
    pub fn regime(&self) -> Regime {
        match self {
            ContinuousPoles::Underdamped { .. } => Regime::Underdamped,
            ContinuousPoles::Critical(_) => Regime::Critical,
            ContinuousPoles::Overdamped(..) => Regime::Overdamped,
        }
    }

    /// Both poles, upper-half-plane member first for a complex pair.
    pub fn as_pair(&self) -> [Complex64; 2] {
        match *self {
            ContinuousPoles::Underdamped { re, im } => {
                [Complex64::new(re, im), Complex64::new(re, -im)]
            }
            ContinuousPoles::Critical(s) => [Complex64::new(s, 0.0); 2],
            ContinuousPoles::Overdamped(s1, s2) => [Complex64::new(s1, 0.0), Complex64::new(s2, 0.0)],
        }
    }

    pub fn sum(&self) -> f64 {
        let [a, b] = self.as_pair();
        (a + b).re
    }

    pub fn product(&self) -> f64 {
        let [a, b] = self.as_pair();
        (a * b).re
    }
}

const CRITICAL_TOLERANCE: f64 = 1e-12;

pub fn poles_of(c: ContinuousParams) -> ContinuousPoles {
    let ContinuousParams { k, b } = c;
    let disc = b * b - 4.0 * k;
    if disc.abs() <= CRITICAL_TOLERANCE * 1f64.max(b * b).max(4.0 * k) {
        return ContinuousPoles::Critical(-b / 2.0);
    }
    if disc < 0.0 {
        return ContinuousPoles::Underdamped { re: -b / 2.0, im: (k - b * b / 4.0).sqrt() };
    }
    // stable split: one pole from the quadratic formula, the other from the product k
    let q = -0.5 * (b + b.signum() * disc.sqrt());
    let (s1, s2) = if q == 0.0 { (0.0, 0.0) } else { (q, k / q) };
    ContinuousPoles::Overdamped(s1.max(s2), s1.min(s2))
}

/// Recovers `(k, b)` from the upper member of a conjugate pair, or from a
/// repeated real pole.
pub fn params_from_pole_pair(s: Complex64) -> ContinuousParams {
    ContinuousParams::new(s.re * s.re + s.im * s.im, -2.0 * s.re)
}

/// `(k, b)` for two real poles: `k = s₁·s₂`, `b = −(s₁ + s₂)`.
pub fn params_from_real_poles(s1: f64, s2: f64) -> ContinuousParams {
    ContinuousParams::new(s1 * s2, -(s1 + s2))
}
