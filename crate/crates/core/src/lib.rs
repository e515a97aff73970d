//! Parameter-space deformation analysis for sampled haptic simulators.
//!
//! A hybrid oscillator is a real mass coupled through a sampled simulator to a
//! virtual spring `K` and damper `B`. Its closed-loop poles are the roots of a
//! characteristic form `P(z)·K + Q(z)·B + R(z) = 0`. This crate maps virtual
//! `(K, B)` settings to the continuous `(k, b)` oscillator with the same
//! dominant poles and back, draws the resulting iso-`k` / iso-`b` grids, and
//! cross-checks every result against independent eigenvalue and
//! time-domain routes.
//!
//! All internal computation uses normalized units (`m = 1`, `T = 1`);
//! [`reference::PhysicalUnits`] converts at the boundary.

pub mod config;
pub mod deformation;
pub mod error;
pub mod experiments;
pub mod grid;
pub mod oracle;
pub mod output;
pub mod poly;
pub mod reference;

pub use config::{CharacteristicForm, DampingVariant, DiscreteParams, Provenance};
pub use deformation::{DistortionMetrics, DominantPoles, PoleReport};
pub use error::{Error, Result};
pub use grid::{DeformationGrid, GridSpec};
pub use poly::{Complex64, Polynomial};
pub use reference::{ContinuousParams, ContinuousPoles, PhysicalUnits, Regime};
