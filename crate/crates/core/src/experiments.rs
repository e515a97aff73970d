//! Assembly experiment: one mass between springs, real or virtual.
//!
//! Systems:
//! - I: mass on a real spring `k`.
//! - II: mass on a virtual spring `K = tune(k)`, sampled without delay.
//! - III: mass between two real springs `k`.
//! - IV: mass between two virtual springs, i.e. one virtual spring `2K`.
//! - V: mass between a real spring `k` and a virtual spring `K`.
//!
//! I and II oscillate at the same frequency by construction of `K`. The
//! three assemblies do not.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::deformation::tune;
use crate::error::{Error, Result};
use crate::poly::Complex64;
use crate::reference::PhysicalUnits;

/// How the sampled spring force is applied to the continuous mass.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ForceReconstruction {
    /// Force held constant over each period.
    #[default]
    ZeroOrderHold,
    /// Force delivered as one momentum kick `F·T` at the sampling instant.
    ImpulseTrain,
}

impl fmt::Display for ForceReconstruction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ForceReconstruction::ZeroOrderHold => "hold",
            ForceReconstruction::ImpulseTrain => "impulse",
        })
    }
}

impl FromStr for ForceReconstruction {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "hold" | "zoh" | "zero_order_hold" => Ok(ForceReconstruction::ZeroOrderHold),
            "impulse" | "impulse_train" => Ok(ForceReconstruction::ImpulseTrain),
            other => Err(Error::UnknownName(format!("force reconstruction {other:?}"))),
        }
    }
}

/// Angular eigenfrequencies of the five systems, in rad per unit time.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Table1Report {
    #[serde(rename = "omega_I")]
    pub omega_i: f64,
    #[serde(rename = "omega_II")]
    pub omega_ii: f64,
    #[serde(rename = "omega_III")]
    pub omega_iii: f64,
    #[serde(rename = "omega_IV")]
    pub omega_iv: f64,
    #[serde(rename = "omega_V")]
    pub omega_v: f64,
    /// `omega_IV / omega_III − 1`.
    #[serde(rename = "detuning_IV")]
    pub detuning_iv: f64,
    /// `omega_V / omega_III − 1`.
    #[serde(rename = "detuning_V")]
    pub detuning_v: f64,
    #[serde(rename = "K_used")]
    pub k_used: f64,
    /// Modulus of system V's dominant pole; above 1 the assembly is unstable.
    pub pole_modulus_v: f64,
    pub force: ForceReconstruction,
}

pub fn run_table1(k: f64, u: PhysicalUnits) -> Result<Table1Report> {
    run_table1_with(k, u, ForceReconstruction::default())
}

pub fn run_table1_with(k: f64, u: PhysicalUnits, force: ForceReconstruction) -> Result<Table1Report> {
    if !(k > 0.0 && k.is_finite()) {
        return Err(Error::InvalidParam(format!("stiffness must be positive, got {k}")));
    }
    let PhysicalUnits { mass: m, period: t } = u;
    let theta_iii = t * (2.0 * k / m).sqrt();
    if theta_iii >= std::f64::consts::PI {
        return Err(Error::NyquistExceeded { theta: theta_iii });
    }

    let k_used = tune(k, u)?;
    let digital = |stiffness: f64| -> Result<f64> {
        let c = 1.0 - stiffness * t * t / (2.0 * m);
        if c < -1.0 {
            return Err(Error::NyquistExceeded { theta: (stiffness * t * t / m).sqrt() });
        }
        Ok(c.acos() / t)
    };

    let omega_i = (k / m).sqrt();
    let omega_ii = digital(k_used)?;
    let omega_iii = (2.0 * k / m).sqrt();
    let omega_iv = digital(2.0 * k_used)?;
    let pole = hybrid_dominant_pole(k, k_used, u, force)?;
    let omega_v = pole.arg().abs() / t;

    Ok(Table1Report {
        omega_i,
        omega_ii,
        omega_iii,
        omega_iv,
        omega_v,
        detuning_iv: omega_iv / omega_iii - 1.0,
        detuning_v: omega_v / omega_iii - 1.0,
        k_used,
        pole_modulus_v: pole.norm(),
        force,
    })
}

/// `sin(ωT)/ω`, continuous at `ω = 0`.
fn sin_over(omega: f64, t: f64) -> f64 {
    let x = omega * t;
    if x.abs() < 1e-4 {
        t * (1.0 - x * x / 6.0)
    } else {
        (x).sin() / omega
    }
}

/// Upper dominant eigenvalue of one period of system V.
///
/// The mass and real spring are integrated exactly over the period; the
/// virtual spring force `−K·x_n` is applied according to `force`.
pub fn hybrid_dominant_pole(
    k: f64,
    stiffness: f64,
    u: PhysicalUnits,
    force: ForceReconstruction,
) -> Result<Complex64> {
    if !(k >= 0.0 && k.is_finite()) {
        return Err(Error::InvalidParam(format!("stiffness must be non-negative, got {k}")));
    }
    if !stiffness.is_finite() {
        return Err(Error::InvalidParam(format!("virtual stiffness must be finite, got {stiffness}")));
    }
    let PhysicalUnits { mass: m, period: t } = u;
    let omega = (k / m).sqrt();
    let c = (omega * t).cos();
    let s = sin_over(omega, t);
    // (1 − cos ωT)/ω² = 2·(sin(ωT/2)/ω)²
    let half = sin_over(omega, t / 2.0);
    let one_minus_cos = 2.0 * half * half;

    let phi = [[c, s], [-omega * omega * s, c]];
    let gamma = match force {
        ForceReconstruction::ZeroOrderHold => [one_minus_cos / m, s / m],
        ForceReconstruction::ImpulseTrain => [s * t / m, c * t / m],
    };
    let a = [
        [phi[0][0] - stiffness * gamma[0], phi[0][1]],
        [phi[1][0] - stiffness * gamma[1], phi[1][1]],
    ];

    let half_trace = 0.5 * (a[0][0] + a[1][1]);
    let det = a[0][0] * a[1][1] - a[0][1] * a[1][0];
    let disc = half_trace * half_trace - det;
    Ok(if disc < 0.0 {
        Complex64::new(half_trace, (-disc).sqrt())
    } else {
        let r = disc.sqrt();
        let (l1, l2) = (half_trace + r, half_trace - r);
        Complex64::new(if l1.abs() >= l2.abs() { l1 } else { l2 }, 0.0)
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    const UNIT: PhysicalUnits = PhysicalUnits { mass: 1.0, period: 1.0 };

    #[test]
    fn unit_stiffness_frequencies() {
        let r = run_table1(1.0, UNIT).unwrap();
        assert!((r.omega_i - 1.0).abs() < 1e-12);
        assert!((r.omega_ii - 1.0).abs() < 1e-12);
        assert!((r.omega_iii - 2f64.sqrt()).abs() < 1e-12);
        let cos1 = 1f64.cos();
        assert!((r.omega_iv - (2.0 * cos1 - 1.0).acos()).abs() < 1e-12);
        assert!((r.omega_iv - 1.490089).abs() < 1e-4);
        assert!((r.detuning_iv - 0.053651).abs() < 1e-4);
        assert!((r.k_used - 0.919395).abs() < 1e-6);
    }

    #[test]
    fn hybrid_regression_values() {
        // frozen from a matrix-exponential discretization of the same loop
        let r = run_table1(1.0, UNIT).unwrap();
        assert!((r.omega_v - 1.29135623).abs() < 1e-7, "{}", r.omega_v);
        assert!((r.pole_modulus_v - 1.19274639).abs() < 1e-7);
        let r = run_table1_with(1.0, UNIT, ForceReconstruction::ImpulseTrain).unwrap();
        assert!((r.omega_v - 1.41670725).abs() < 1e-7, "{}", r.omega_v);
        assert!((r.pole_modulus_v - 1.0).abs() < 1e-12);
    }

    #[test]
    fn assemblies_are_not_equivalent() {
        for force in [ForceReconstruction::ZeroOrderHold, ForceReconstruction::ImpulseTrain] {
            let r = run_table1_with(1.0, UNIT, force).unwrap();
            assert!((r.omega_v - r.omega_iii).abs() > 1e-3);
            assert!((r.omega_v - r.omega_iv).abs() > 1e-3);
        }
    }

    #[test]
    fn open_loop_recovers_real_spring() {
        for force in [ForceReconstruction::ZeroOrderHold, ForceReconstruction::ImpulseTrain] {
            let z = hybrid_dominant_pole(0.7, 0.0, UNIT, force).unwrap();
            assert!((z - Complex64::from_polar(1.0, 0.7f64.sqrt())).norm() < 1e-12);
        }
    }

    #[test]
    fn virtual_spring_alone() {
        for k0 in [1e-2, 1e-3] {
            let big_k = tune(k0, UNIT).unwrap();
            let digital = (1.0 - big_k / 2.0).acos();
            let z = hybrid_dominant_pole(0.0, big_k, UNIT, ForceReconstruction::ImpulseTrain).unwrap();
            assert!((z.arg() - digital).abs() < 1e-12);
            let z = hybrid_dominant_pole(0.0, big_k, UNIT, ForceReconstruction::ZeroOrderHold).unwrap();
            assert!((z.arg() - digital).abs() < big_k, "{} vs {digital}", z.arg());
        }
    }

    #[test]
    fn physical_units_scale() {
        let u = PhysicalUnits::new(0.1, 1e-3).unwrap();
        let r = run_table1(1e4, u).unwrap();
        let n = run_table1(0.1, UNIT).unwrap();
        assert!((r.omega_iv * 1e-3 - n.omega_iv).abs() < 1e-10);
        assert!((r.omega_v * 1e-3 - n.omega_v).abs() < 1e-10);
        assert!((r.detuning_v - n.detuning_v).abs() < 1e-9);
    }

    #[test]
    fn detunings_vanish_linearly() {
        let at = |k: f64| run_table1(k, UNIT).unwrap();
        let (a, b, c) = (at(1e-2), at(1e-3), at(1e-4));
        for d in [|r: &Table1Report| r.detuning_iv, |r: &Table1Report| r.detuning_v] {
            let (da, db, dc) = (d(&a).abs(), d(&b).abs(), d(&c).abs());
            assert!(db <= 0.15 * da && dc <= 0.15 * db, "{da} {db} {dc}");
        }
        assert!(a.detuning_iv > 0.0 && b.detuning_iv > 0.0 && c.detuning_iv > 0.0);
    }

    #[test]
    fn rejections() {
        assert!(matches!(run_table1(5.0, UNIT), Err(Error::NyquistExceeded { .. })));
        // system III is sub-Nyquist here, the doubled virtual spring is not
        assert!(matches!(run_table1(3.0, UNIT), Err(Error::NyquistExceeded { .. })));
        assert!(run_table1(0.0, UNIT).is_err());
        assert!("hold".parse::<ForceReconstruction>().is_ok());
        assert!("linear".parse::<ForceReconstruction>().is_err());
    }
}
