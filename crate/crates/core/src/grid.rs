//! Iso-`k` / iso-`b` curve families in the `(K, B)` plane.
//!
//! Each curve sweeps one continuous parameter at a fixed level of the other
//! and pushes every sample through [`invmap`]. Samples that fail break the
//! polyline into segments; nothing is interpolated across a gap.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::config::{CharacteristicForm, DiscreteParams};
use crate::deformation::{
    self, analyze, boundary_at, boundary_peak, distortion_at, imposed_pair_dominates, invmap, BoundaryTrace,
    DistortionMetrics,
};
use crate::error::{Error, Result};
use crate::reference::ContinuousParams;

#[derive(Debug, Clone, PartialEq)]
pub struct GridSpec {
    pub form: CharacteristicForm,
    pub k_values: Vec<f64>,
    pub b_values: Vec<f64>,
    pub samples_per_curve: usize,
    pub theta_max: f64,
}

pub const DEFAULT_K_RANGE: (f64, f64, usize) = (0.05, 2.5, 12);
pub const DEFAULT_B_RANGE: (f64, f64, usize) = (0.0, 1.0, 11);
pub const DEFAULT_SAMPLES: usize = 60;
pub const DEFAULT_THETA_MAX: f64 = 0.95 * PI;

/// `n` evenly spaced values from `lo` to `hi`, endpoints exact.
pub fn linspace(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    match n {
        0 => Vec::new(),
        1 => vec![lo],
        _ => deformation::theta_samples(lo, hi, n),
    }
}

impl GridSpec {
    /// The desk-scale window: k ∈ [0.05, 2.5] (12 levels), b ∈ [0, 1]
    /// (11 levels), 60 samples per curve, θ_max = 0.95π.
    pub fn defaults(form: CharacteristicForm) -> Self {
        let (k0, k1, nk) = DEFAULT_K_RANGE;
        let (b0, b1, nb) = DEFAULT_B_RANGE;
        GridSpec {
            form,
            k_values: linspace(k0, k1, nk),
            b_values: linspace(b0, b1, nb),
            samples_per_curve: DEFAULT_SAMPLES,
            theta_max: DEFAULT_THETA_MAX,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let increasing = |v: &[f64]| v.windows(2).all(|w| w[0] < w[1]) && v.iter().all(|x| x.is_finite());
        if !increasing(&self.k_values) {
            return Err(Error::InvalidParam("k levels must be finite and strictly increasing".into()));
        }
        if !increasing(&self.b_values) {
            return Err(Error::InvalidParam("b levels must be finite and strictly increasing".into()));
        }
        if self.samples_per_curve < 2 {
            return Err(Error::InvalidParam("need at least two samples per curve".into()));
        }
        if !(self.theta_max > 0.0 && self.theta_max < PI) {
            return Err(Error::InvalidParam(format!(
                "theta_max must lie in (0, π), got {}",
                self.theta_max
            )));
        }
        Ok(())
    }

    /// Dense sweep of `b` used along iso-`k` curves.
    fn b_sweep(&self) -> Vec<f64> {
        dense(&self.b_values, self.samples_per_curve)
    }

    fn k_sweep(&self) -> Vec<f64> {
        dense(&self.k_values, self.samples_per_curve)
    }
}

fn dense(levels: &[f64], samples: usize) -> Vec<f64> {
    match levels {
        [] => Vec::new(),
        [only] => vec![*only],
        [first, .., last] => linspace(*first, *last, samples),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CurveVertex {
    pub k: f64,
    pub b: f64,
    #[serde(rename = "K")]
    pub stiffness: f64,
    #[serde(rename = "B")]
    pub damping: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SkippedPoint {
    pub k: f64,
    pub b: f64,
    pub reason: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IsoCurve {
    /// The fixed `k` (iso-`k`) or `b` (iso-`b`) value.
    pub level: f64,
    pub segments: Vec<Vec<CurveVertex>>,
    pub skipped: Vec<SkippedPoint>,
}

impl IsoCurve {
    pub fn vertices(&self) -> impl Iterator<Item = &CurveVertex> {
        self.segments.iter().flatten()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridNode {
    pub k: f64,
    pub b: f64,
    #[serde(rename = "K")]
    pub stiffness: Option<f64>,
    #[serde(rename = "B")]
    pub damping: Option<f64>,
    /// The imposed pair is the dominant root pair of the loop, so `(k, b)` is
    /// what the forward map reports at this `(K, B)`.
    pub representable: bool,
    pub stable: bool,
    pub metrics: Option<DistortionMetrics>,
    pub note: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DeformationGrid {
    pub form: String,
    pub k_values: Vec<f64>,
    pub b_values: Vec<f64>,
    pub samples_per_curve: usize,
    pub theta_max: f64,
    pub iso_k: Vec<IsoCurve>,
    pub iso_b: Vec<IsoCurve>,
    pub boundary: BoundaryTrace,
    /// `nodes[i][j]` sits at `(k_values[i], b_values[j])`.
    pub nodes: Vec<Vec<GridNode>>,
}

impl DeformationGrid {
    pub fn node_count(&self) -> usize {
        self.nodes.iter().map(Vec::len).sum()
    }

    pub fn representable_count(&self) -> usize {
        self.nodes.iter().flatten().filter(|n| n.representable).count()
    }
}

fn check_theta(c: ContinuousParams, theta_max: f64) -> Result<()> {
    let disc = c.k - c.b * c.b / 4.0;
    if disc > 0.0 && disc.sqrt() > theta_max {
        return Err(Error::NyquistExceeded { theta: disc.sqrt() });
    }
    Ok(())
}

fn sweep<F>(form: &CharacteristicForm, level: f64, values: &[f64], theta_max: f64, at: F) -> IsoCurve
where
    F: Fn(f64) -> ContinuousParams,
{
    let mut curve = IsoCurve { level, segments: Vec::new(), skipped: Vec::new() };
    let mut current: Vec<CurveVertex> = Vec::new();
    for &v in values {
        let c = at(v);
        let result = check_theta(c, theta_max).and_then(|_| invmap(form, c));
        match result {
            Ok(d) => current.push(CurveVertex {
                k: c.k,
                b: c.b,
                stiffness: d.stiffness,
                damping: d.damping,
            }),
            Err(e) => {
                if !current.is_empty() {
                    curve.segments.push(std::mem::take(&mut current));
                }
                curve.skipped.push(SkippedPoint { k: c.k, b: c.b, reason: e.to_string() });
            }
        }
    }
    if !current.is_empty() {
        curve.segments.push(current);
    }
    curve
}

fn evaluate_node(form: &CharacteristicForm, k: f64, b: f64, theta_max: f64) -> GridNode {
    let c = ContinuousParams::new(k, b);
    let mut node = GridNode {
        k,
        b,
        stiffness: None,
        damping: None,
        representable: false,
        stable: false,
        metrics: None,
        note: None,
    };
    let d = match check_theta(c, theta_max).and_then(|_| invmap(form, c)) {
        Ok(d) => d,
        Err(e) => {
            node.note = Some(e.to_string());
            return node;
        }
    };
    node.stiffness = Some(d.stiffness);
    node.damping = Some(d.damping);
    match analyze(form, d) {
        Ok(rep) => node.stable = rep.stable,
        Err(e) => {
            node.note = Some(e.to_string());
            return node;
        }
    }
    match imposed_pair_dominates(form, c, d) {
        Ok(true) => node.representable = true,
        Ok(false) => node.note = Some("an extra root dominates the imposed pair".to_string()),
        Err(e) => node.note = Some(e.to_string()),
    }
    if node.representable {
        match distortion_at(form, d, None) {
            Ok(m) => node.metrics = Some(m),
            Err(e) => node.note = Some(format!("metrics unavailable: {e}")),
        }
    }
    node
}

/// Boundary frequencies: `samples` evenly spaced values in `(0, θ_max]`.
fn boundary_thetas(theta_max: f64, samples: usize) -> Vec<f64> {
    (1..=samples).map(|i| theta_max * i as f64 / samples as f64).collect()
}

pub fn generate(spec: &GridSpec) -> Result<DeformationGrid> {
    spec.validate()?;
    let form = &spec.form;
    let b_sweep = spec.b_sweep();
    let k_sweep = spec.k_sweep();

    let iso_k = spec
        .k_values
        .iter()
        .map(|&k| sweep(form, k, &b_sweep, spec.theta_max, |b| ContinuousParams::new(k, b)))
        .collect();
    let iso_b = spec
        .b_values
        .iter()
        .map(|&b| sweep(form, b, &k_sweep, spec.theta_max, |k| ContinuousParams::new(k, b)))
        .collect();
    let mut boundary = boundary_at(form, &boundary_thetas(spec.theta_max, spec.samples_per_curve));
    if let Some(peak) = boundary_peak(form, &boundary) {
        let at = boundary.points.partition_point(|p| p.theta < peak.theta);
        if boundary.points.get(at).is_none_or(|p| p.theta != peak.theta) {
            boundary.points.insert(at, peak);
        }
    }
    let nodes = spec
        .k_values
        .iter()
        .map(|&k| {
            spec.b_values
                .iter()
                .map(|&b| evaluate_node(form, k, b, spec.theta_max))
                .collect()
        })
        .collect();

    Ok(DeformationGrid {
        form: form.name.clone(),
        k_values: spec.k_values.clone(),
        b_values: spec.b_values.clone(),
        samples_per_curve: spec.samples_per_curve,
        theta_max: spec.theta_max,
        iso_k,
        iso_b,
        boundary,
        nodes,
    })
}

/// The identity transformation `K = k`, `B = b` on the same lattice.
pub fn reference_grid(spec: &GridSpec) -> Result<DeformationGrid> {
    spec.validate()?;
    let vertex = |k: f64, b: f64| CurveVertex { k, b, stiffness: k, damping: b };
    let curve = |level: f64, pts: Vec<CurveVertex>| IsoCurve {
        level,
        segments: if pts.is_empty() { Vec::new() } else { vec![pts] },
        skipped: Vec::new(),
    };
    let b_sweep = spec.b_sweep();
    let k_sweep = spec.k_sweep();
    let iso_k = spec
        .k_values
        .iter()
        .map(|&k| curve(k, b_sweep.iter().map(|&b| vertex(k, b)).collect()))
        .collect();
    let iso_b = spec
        .b_values
        .iter()
        .map(|&b| curve(b, k_sweep.iter().map(|&k| vertex(k, b)).collect()))
        .collect();
    let boundary = BoundaryTrace {
        points: boundary_thetas(spec.theta_max, spec.samples_per_curve)
            .into_iter()
            .map(|theta| deformation::BoundaryPoint { theta, stiffness: theta * theta, damping: 0.0 })
            .collect(),
        skipped: Vec::new(),
    };
    let identity = DistortionMetrics::from_jacobian([[1.0, 0.0], [0.0, 1.0]]);
    let nodes = spec
        .k_values
        .iter()
        .map(|&k| {
            spec.b_values
                .iter()
                .map(|&b| GridNode {
                    k,
                    b,
                    stiffness: Some(k),
                    damping: Some(b),
                    representable: true,
                    stable: b > 0.0,
                    metrics: Some(identity),
                    note: None,
                })
                .collect()
        })
        .collect();
    Ok(DeformationGrid {
        form: format!("{} (reference)", spec.form.name),
        k_values: spec.k_values.clone(),
        b_values: spec.b_values.clone(),
        samples_per_curve: spec.samples_per_curve,
        theta_max: spec.theta_max,
        iso_k,
        iso_b,
        boundary,
        nodes,
    })
}

/// Virtual setting of one node, if its inverse map succeeded.
pub fn node_params(node: &GridNode) -> Option<DiscreteParams> {
    Some(DiscreteParams::new(node.stiffness?, node.damping?))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small_spec(form: CharacteristicForm) -> GridSpec {
        GridSpec {
            form,
            k_values: vec![0.5, 1.0],
            b_values: vec![0.0, 0.5],
            samples_per_curve: 2,
            theta_max: DEFAULT_THETA_MAX,
        }
    }

    #[test]
    fn small_no_delay_grid() {
        let g = generate(&small_spec(CharacteristicForm::no_delay())).unwrap();
        assert_eq!(g.node_count(), 4);
        let node = &g.nodes[1][0];
        assert_eq!((node.k, node.b), (1.0, 0.0));
        assert!((node.stiffness.unwrap() - 0.919395).abs() < 1e-6);
        assert!(node.damping.unwrap().abs() < 1e-12);
    }

    #[test]
    fn unit_delay_node() {
        let g = generate(&small_spec(CharacteristicForm::unit_delay())).unwrap();
        let node = &g.nodes[1][0];
        assert!((node.stiffness.unwrap() - 0.074108).abs() < 1e-6);
        assert!((node.damping.unwrap() - 0.919395).abs() < 1e-6);
    }

    #[test]
    fn empty_k_levels_give_only_iso_b() {
        let mut spec = small_spec(CharacteristicForm::no_delay());
        spec.k_values.clear();
        let g = generate(&spec).unwrap();
        assert!(g.iso_k.is_empty());
        assert_eq!(g.iso_b.len(), 2);
        assert!(g.iso_b.iter().all(|c| c.segments.is_empty()));
        assert_eq!(g.node_count(), 0);
    }

    #[test]
    fn rejects_bad_specs() {
        let mut spec = small_spec(CharacteristicForm::no_delay());
        spec.k_values = vec![1.0, 0.5];
        assert!(generate(&spec).is_err());
        let mut spec = small_spec(CharacteristicForm::no_delay());
        spec.samples_per_curve = 1;
        assert!(generate(&spec).is_err());
        let mut spec = small_spec(CharacteristicForm::no_delay());
        spec.theta_max = PI;
        assert!(generate(&spec).is_err());
    }

    #[test]
    fn reference_grid_is_identity() {
        let spec = GridSpec::defaults(CharacteristicForm::unit_delay());
        let r = reference_grid(&spec).unwrap();
        for c in &r.iso_k {
            assert!(c.vertices().all(|v| v.stiffness == c.level));
        }
        let spec = GridSpec {
            k_values: vec![0.5, 1.0],
            b_values: vec![0.0, 0.5],
            ..spec
        };
        let r = reference_grid(&spec).unwrap();
        let n = &r.nodes[1][1];
        assert_eq!((n.stiffness, n.damping), (Some(1.0), Some(0.5)));
    }

    #[test]
    fn no_delay_close_to_reference_near_origin() {
        let f = CharacteristicForm::no_delay();
        let d = invmap(&f, ContinuousParams::new(0.01, 0.01)).unwrap();
        assert!((d.stiffness - 0.01).abs() < 0.01 * 0.01);
        assert!((d.damping - 0.01).abs() < 0.01 * 0.01);
    }

    #[test]
    fn skipped_points_split_segments() {
        let spec = GridSpec {
            form: CharacteristicForm::no_delay(),
            k_values: vec![1.0],
            b_values: vec![0.0, 1.0],
            samples_per_curve: 5,
            theta_max: 0.5,
        };
        let g = generate(&spec).unwrap();
        // θ = √(1 − b²/4) > 0.5 for every b ≤ 1, so every sample is skipped
        assert!(g.iso_k[0].segments.is_empty());
        assert_eq!(g.iso_k[0].skipped.len(), 5);
    }
}
