//! The `(K, B) ↔ (k, b)` transformation of a sampled simulator.
//!
//! The inverse map imposes the discrete image `z = e^s` of the continuous
//! poles on the characteristic form and solves the resulting linear system for
//! `(K, B)`. The forward map extracts the roots of the assembled polynomial,
//! selects the dominant pair and takes its principal-branch logarithm.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::config::{CharacteristicForm, DiscreteParams};
use crate::error::{Error, Result};
use crate::poly::{self, Complex64};
use crate::reference::{poles_of, ContinuousParams, ContinuousPoles, PhysicalUnits};

/// Relative slack used when comparing root moduli.
const MODULUS_TIE: f64 = 1e-12;

/// Roots within this distance of the unit circle count as marginal, not stable.
pub const STABILITY_MARGIN: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DominantPoles {
    /// Upper member of a complex conjugate pair.
    Conjugate(Complex64),
    /// Two distinct positive real roots, larger first.
    RealPair(f64, f64),
    RepeatedReal(f64),
}

impl DominantPoles {
    pub fn modulus(&self) -> f64 {
        match *self {
            DominantPoles::Conjugate(z) => z.norm(),
            DominantPoles::RealPair(a, b) => a.abs().max(b.abs()),
            DominantPoles::RepeatedReal(a) => a.abs(),
        }
    }

    /// Continuous `(k, b)` whose poles `s` satisfy `e^s = z` on the principal branch.
    pub fn continuous_equivalent(&self) -> ContinuousParams {
        match *self {
            DominantPoles::Conjugate(z) => {
                let sigma = z.norm().ln();
                let theta = z.arg();
                ContinuousParams::new(sigma * sigma + theta * theta, -2.0 * sigma)
            }
            DominantPoles::RealPair(a, b) => {
                let (la, lb) = (a.ln(), b.ln());
                ContinuousParams::new(la * lb, -(la + lb))
            }
            DominantPoles::RepeatedReal(a) => {
                let la = a.ln();
                ContinuousParams::new(la * la, -2.0 * la)
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ExtraRoot {
    pub root: Complex64,
    pub modulus: f64,
}

/// Roots of an assembled characteristic polynomial with the dominant selection.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PoleReport {
    pub all_roots: Vec<Complex64>,
    pub dominant: Option<DominantPoles>,
    pub dominant_modulus: Option<f64>,
    pub extra_roots: Vec<ExtraRoot>,
    pub representable: bool,
    /// Largest modulus over every root.
    pub max_modulus: f64,
    /// Every root inside the unit circle by more than [`STABILITY_MARGIN`].
    pub stable: bool,
}

/// Applies the dominant-pole rule to a root set.
///
/// Complex pairs take precedence (largest modulus, then lowest frequency).
/// Without one, the two largest positive real roots form the pair. A real
/// root on the non-positive axis that strictly out-sizes the chosen pair makes
/// the set non-representable, as does the absence of any valid pair.
pub fn select_dominant(roots: &[Complex64]) -> PoleReport {
    let max_modulus = roots.iter().fold(0.0_f64, |m, z| m.max(z.norm()));
    let stable = max_modulus < 1.0 - STABILITY_MARGIN;

    let mut chosen: Option<(DominantPoles, Vec<usize>)> = None;

    let mut best_pair: Option<usize> = None;
    for (i, z) in roots.iter().enumerate() {
        if z.im <= 0.0 {
            continue;
        }
        best_pair = match best_pair {
            None => Some(i),
            Some(j) => {
                let (mi, mj) = (z.norm(), roots[j].norm());
                let tie = (mi - mj).abs() <= MODULUS_TIE * mi.max(mj);
                if (!tie && mi > mj) || (tie && z.arg() < roots[j].arg()) {
                    Some(i)
                } else {
                    Some(j)
                }
            }
        };
    }
    if let Some(i) = best_pair {
        let z = roots[i];
        // the mirrored partner
        let partner = roots
            .iter()
            .enumerate()
            .filter(|&(j, w)| j != i && w.im < 0.0)
            .min_by(|a, b| (a.1.conj() - z).norm().total_cmp(&(b.1.conj() - z).norm()))
            .map(|(j, _)| j);
        let mut used = vec![i];
        used.extend(partner);
        chosen = Some((DominantPoles::Conjugate(z), used));
    } else {
        let mut positive: Vec<(usize, f64)> = roots
            .iter()
            .enumerate()
            .filter(|(_, z)| z.im == 0.0 && z.re > 0.0)
            .map(|(i, z)| (i, z.re))
            .collect();
        positive.sort_by(|a, b| b.1.total_cmp(&a.1));
        if positive.len() >= 2 {
            let (a, b) = (positive[0], positive[1]);
            let dom = if a.1 == b.1 {
                DominantPoles::RepeatedReal(a.1)
            } else {
                DominantPoles::RealPair(a.1, b.1)
            };
            chosen = Some((dom, vec![a.0, b.0]));
        }
    }

    let alternating = |bound: f64| {
        roots
            .iter()
            .any(|z| z.im == 0.0 && z.re <= 0.0 && z.norm() > bound * (1.0 + MODULUS_TIE))
    };

    match chosen {
        Some((dom, used)) if !alternating(dom.modulus()) => {
            let extra_roots = roots
                .iter()
                .enumerate()
                .filter(|(i, _)| !used.contains(i))
                .map(|(_, &z)| ExtraRoot { root: z, modulus: z.norm() })
                .collect();
            PoleReport {
                all_roots: roots.to_vec(),
                dominant: Some(dom),
                dominant_modulus: Some(dom.modulus()),
                extra_roots,
                representable: true,
                max_modulus,
                stable,
            }
        }
        _ => PoleReport {
            all_roots: roots.to_vec(),
            dominant: None,
            dominant_modulus: None,
            extra_roots: roots.iter().map(|&z| ExtraRoot { root: z, modulus: z.norm() }).collect(),
            representable: false,
            max_modulus,
            stable,
        },
    }
}

/// Roots and dominant selection of the loop at `d`. Never fails on
/// representability; see [`map`] for that.
pub fn analyze(f: &CharacteristicForm, d: DiscreteParams) -> Result<PoleReport> {
    let poly = f.assemble(d);
    if poly.degree().unwrap_or(0) < 1 {
        return Err(Error::DegenerateModel);
    }
    Ok(select_dominant(&poly.roots()?))
}

/// Forward map `(K, B) → (k, b)`.
pub fn map(f: &CharacteristicForm, d: DiscreteParams) -> Result<(ContinuousParams, PoleReport)> {
    let report = analyze(f, d)?;
    match report.dominant {
        Some(dom) => Ok((dom.continuous_equivalent(), report)),
        None => {
            let worst = report
                .all_roots
                .iter()
                .max_by(|a, b| a.norm().total_cmp(&b.norm()))
                .copied()
                .unwrap_or_default();
            Err(Error::NonRepresentable { re: worst.re, im: worst.im })
        }
    }
}

/// Discrete images `e^{s}` of the continuous poles of `c`, upper member first.
pub fn imposed_roots(c: ContinuousParams) -> Result<[Complex64; 2]> {
    let poles = poles_of(c);
    if let ContinuousPoles::Underdamped { im, .. } = poles {
        if im >= PI {
            return Err(Error::NyquistExceeded { theta: im });
        }
    }
    let [s1, s2] = poles.as_pair();
    Ok([s1.exp(), s2.exp()])
}

/// Inverse map `(k, b) → (K, B)`: the virtual setting whose loop has the
/// discrete images of the poles of `s² + b·s + k` among its roots.
pub fn invmap(f: &CharacteristicForm, c: ContinuousParams) -> Result<DiscreteParams> {
    if !(c.k.is_finite() && c.b.is_finite()) {
        return Err(Error::InvalidParam(format!("non-finite target ({}, {})", c.k, c.b)));
    }
    let poles = poles_of(c);
    let (stiffness, damping) = match poles {
        ContinuousPoles::Underdamped { re, im } => {
            if im >= PI {
                return Err(Error::NyquistExceeded { theta: im });
            }
            let z = Complex64::new(re, im).exp();
            poly::solve_complex_linear(f.p.eval(z), f.q.eval(z), f.r.eval(z))?
        }
        ContinuousPoles::Overdamped(s1, s2) => {
            let (z1, z2) = (s1.exp(), s2.exp());
            if z1 == z2 {
                return Err(Error::SingularSystem("imposed real roots coincide".to_string()));
            }
            poly::solve_real_2x2(
                [[f.p.eval_real(z1), f.q.eval_real(z1)], [f.p.eval_real(z2), f.q.eval_real(z2)]],
                [-f.r.eval_real(z1), -f.r.eval_real(z2)],
            )?
        }
        ContinuousPoles::Critical(s) => {
            // double root: F(z0) = 0 and F'(z0) = 0
            let z0 = s.exp();
            let (dp, dq, dr) = (f.p.derivative(), f.q.derivative(), f.r.derivative());
            poly::solve_real_2x2(
                [[f.p.eval_real(z0), f.q.eval_real(z0)], [dp.eval_real(z0), dq.eval_real(z0)]],
                [-f.r.eval_real(z0), -dr.eval_real(z0)],
            )?
        }
    };
    Ok(DiscreteParams::new(stiffness, damping))
}

/// `|K·P(z) + B·Q(z) + R(z)|` at each imposed root of `c`.
pub fn imposed_residuals(
    f: &CharacteristicForm,
    c: ContinuousParams,
    d: DiscreteParams,
) -> Result<[f64; 2]> {
    let poly = f.assemble(d);
    let [z1, z2] = imposed_roots(c)?;
    Ok([poly.eval(z1).norm(), poly.eval(z2).norm()])
}

/// Whether the roots imposed by `c` are the dominant ones of the loop at `d`:
/// every other root is strictly smaller in modulus than both imposed roots.
pub fn imposed_pair_dominates(
    f: &CharacteristicForm,
    c: ContinuousParams,
    d: DiscreteParams,
) -> Result<bool> {
    let imposed = imposed_roots(c)?;
    let roots = f.assemble(d).roots()?;
    let mut claimed = vec![false; roots.len()];
    for z in imposed {
        let nearest = roots
            .iter()
            .enumerate()
            .filter(|(i, _)| !claimed[*i])
            .min_by(|a, b| (*a.1 - z).norm().total_cmp(&(*b.1 - z).norm()))
            .map(|(i, _)| i);
        match nearest {
            Some(i) => claimed[i] = true,
            None => return Ok(false),
        }
    }
    let floor = imposed[0].norm().min(imposed[1].norm());
    Ok(roots
        .iter()
        .zip(&claimed)
        .filter(|(_, &c)| !c)
        .all(|(z, _)| z.norm() < floor * (1.0 - 1e-9)))
}

/// Virtual stiffness that gives the no-delay digital oscillator the same
/// frequency as a real spring `k` on mass `m`:
/// `K = (m/T²)(2 − 2cos(T·√(k/m)))`.
///
/// `T·√(k/m) = π` is accepted as the boundary case (`K = 4m/T²`).
pub fn tune(k: f64, u: PhysicalUnits) -> Result<f64> {
    if !(k >= 0.0 && k.is_finite()) {
        return Err(Error::InvalidParam(format!("stiffness must be non-negative, got {k}")));
    }
    let theta = u.period * (k / u.mass).sqrt();
    if theta > PI {
        return Err(Error::NyquistExceeded { theta });
    }
    let half = (theta / 2.0).sin();
    Ok(u.mass / (u.period * u.period) * 4.0 * half * half)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoundaryPoint {
    pub theta: f64,
    #[serde(rename = "K")]
    pub stiffness: f64,
    #[serde(rename = "B")]
    pub damping: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SkippedTheta {
    pub theta: f64,
    pub reason: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundaryTrace {
    pub points: Vec<BoundaryPoint>,
    pub skipped: Vec<SkippedTheta>,
}

/// Evenly spaced frequencies over `[lo, hi]`.
pub fn theta_samples(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    (0..n)
        .map(|i| if i + 1 == n { hi } else { lo + (hi - lo) * i as f64 / (n - 1) as f64 })
        .collect()
}

/// The image of the zero-damping line `(k = θ², b = 0)` over the given frequencies.
pub fn boundary_at(f: &CharacteristicForm, thetas: &[f64]) -> BoundaryTrace {
    let mut trace = BoundaryTrace { points: Vec::new(), skipped: Vec::new() };
    for &theta in thetas {
        match invmap(f, ContinuousParams::new(theta * theta, 0.0)) {
            Ok(d) => trace.points.push(BoundaryPoint {
                theta,
                stiffness: d.stiffness,
                damping: d.damping,
            }),
            Err(e) => trace.skipped.push(SkippedTheta { theta, reason: e.to_string() }),
        }
    }
    trace
}

/// Largest-`K` point of the boundary, refined by golden-section search in θ
/// between the neighbours of the largest sample. `None` when that sample is
/// an endpoint or a neighbour failed to map.
pub fn boundary_peak(f: &CharacteristicForm, trace: &BoundaryTrace) -> Option<BoundaryPoint> {
    let pts = &trace.points;
    let i = (0..pts.len()).max_by(|&a, &b| pts[a].stiffness.total_cmp(&pts[b].stiffness))?;
    if i == 0 || i + 1 == pts.len() {
        return None;
    }
    let at = |theta: f64| invmap(f, ContinuousParams::new(theta * theta, 0.0)).ok();
    let (mut lo, mut hi) = (pts[i - 1].theta, pts[i + 1].theta);
    let ratio = 0.5 * (5f64.sqrt() - 1.0);
    let mut x1 = hi - ratio * (hi - lo);
    let mut x2 = lo + ratio * (hi - lo);
    let mut f1 = at(x1)?.stiffness;
    let mut f2 = at(x2)?.stiffness;
    while hi - lo > 1e-12 * hi.max(1.0) {
        if f1 < f2 {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + ratio * (hi - lo);
            f2 = at(x2)?.stiffness;
        } else {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - ratio * (hi - lo);
            f1 = at(x1)?.stiffness;
        }
    }
    let theta = 0.5 * (lo + hi);
    let d = at(theta)?;
    (d.stiffness >= pts[i].stiffness).then_some(BoundaryPoint {
        theta,
        stiffness: d.stiffness,
        damping: d.damping,
    })
}

/// Stability boundary over `n_points` frequencies in `theta_range ⊂ (0, π)`.
pub fn stability_boundary(
    f: &CharacteristicForm,
    theta_range: (f64, f64),
    n_points: usize,
) -> Result<BoundaryTrace> {
    let (lo, hi) = theta_range;
    if !(0.0 < lo && lo < hi && hi < PI) {
        return Err(Error::InvalidParam(format!(
            "theta range ({lo}, {hi}) must satisfy 0 < lo < hi < π"
        )));
    }
    if n_points < 2 {
        return Err(Error::InvalidParam("need at least two boundary points".to_string()));
    }
    Ok(boundary_at(f, &theta_samples(lo, hi, n_points)))
}

/// Local shape of the forward map at one `(K, B)` point.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DistortionMetrics {
    /// `∂(k, b)/∂(K, B)`, rows `k` and `b`.
    pub jacobian: [[f64; 2]; 2],
    /// Acute angle between the iso-`k` and iso-`b` curves through the point.
    pub orthogonality_angle_deg: f64,
    pub singular_values: (f64, f64),
    /// `‖J − I‖_F`.
    pub identity_deviation: f64,
}

impl DistortionMetrics {
    pub fn from_jacobian(j: [[f64; 2]; 2]) -> Self {
        let [[a, b], [c, d]] = j;

        // Tangents of the iso curves are the columns of J⁻¹, i.e. the rows of J
        // rotated by a quarter turn; their angle is the angle between the rows.
        let (n1, n2) = (a.hypot(b), c.hypot(d));
        let orthogonality_angle_deg = if n1 == 0.0 || n2 == 0.0 {
            0.0
        } else {
            ((a * c + b * d).abs() / (n1 * n2)).min(1.0).acos().to_degrees()
        };

        let half_frob = 0.5 * (a * a + b * b + c * c + d * d);
        let det = (a * d - b * c).abs();
        let root = (half_frob * half_frob - det * det).max(0.0).sqrt();
        let s1 = (half_frob + root).sqrt();
        let s2 = if s1 > 0.0 { det / s1 } else { 0.0 };

        let identity_deviation = ((a - 1.0).powi(2) + b * b + c * c + (d - 1.0).powi(2)).sqrt();

        DistortionMetrics {
            jacobian: j,
            orthogonality_angle_deg,
            singular_values: (s1, s2),
            identity_deviation,
        }
    }
}

pub fn default_step(d: DiscreteParams) -> f64 {
    1e-5 * 1f64.max(d.stiffness.abs()).max(d.damping.abs())
}

/// Central-difference Jacobian of the forward map at `d`.
pub fn distortion_at(
    f: &CharacteristicForm,
    d: DiscreteParams,
    step: Option<f64>,
) -> Result<DistortionMetrics> {
    let h = step.unwrap_or_else(|| default_step(d));
    if h.is_nan() || h <= 0.0 {
        return Err(Error::InvalidParam(format!("step must be positive, got {h}")));
    }
    let probe = |dk: f64, db: f64| {
        map(f, DiscreteParams::new(d.stiffness + dk, d.damping + db)).map(|(c, _)| c)
    };
    let (kp, km) = (probe(h, 0.0)?, probe(-h, 0.0)?);
    let (bp, bm) = (probe(0.0, h)?, probe(0.0, -h)?);
    let two_h = 2.0 * h;
    let j = [
        [(kp.k - km.k) / two_h, (bp.k - bm.k) / two_h],
        [(kp.b - km.b) / two_h, (bp.b - bm.b) / two_h],
    ];
    Ok(DistortionMetrics::from_jacobian(j))
}

/// [`map`] for physical inputs: `(K, B)` in N/m and N·s/m, result `(k, b)`
/// in the same units.
pub fn map_physical(
    f: &CharacteristicForm,
    stiffness: f64,
    damping: f64,
    u: PhysicalUnits,
) -> Result<((f64, f64), PoleReport)> {
    let d = DiscreteParams::new(u.normalize_stiffness(stiffness), u.normalize_damping(damping));
    let (c, report) = map(f, d)?;
    Ok((u.denormalize(c), report))
}

/// [`invmap`] for physical inputs, returning physical `(K, B)`.
pub fn invmap_physical(
    f: &CharacteristicForm,
    k: f64,
    b: f64,
    u: PhysicalUnits,
) -> Result<(f64, f64)> {
    let d = invmap(f, u.normalize(k, b))?;
    Ok((u.denormalize_stiffness(d.stiffness), u.denormalize_damping(d.damping)))
}
