//! Deterministic text renderings: JSON, CSV, SVG and plain tables.
//!
//! Every float goes through a fixed format so that the same inputs always
//! produce the same bytes.

use std::fmt::Write as _;
use std::io;

use serde::Serialize;
use serde_json::ser::{Formatter, PrettyFormatter};

use crate::experiments::Table1Report;
use crate::grid::{CurveVertex, DeformationGrid};

/// Pretty JSON with every float written as 17 significant digits in
/// scientific notation. Non-finite floats become `null`.
struct FixedFloatFormatter<'a>(PrettyFormatter<'a>);

impl Formatter for FixedFloatFormatter<'_> {
    fn write_f64<W: ?Sized + io::Write>(&mut self, w: &mut W, value: f64) -> io::Result<()> {
        write!(w, "{value:.16e}")
    }

    fn write_f32<W: ?Sized + io::Write>(&mut self, w: &mut W, value: f32) -> io::Result<()> {
        self.write_f64(w, f64::from(value))
    }

    fn begin_array<W: ?Sized + io::Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.begin_array(w)
    }

    fn end_array<W: ?Sized + io::Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.end_array(w)
    }

    fn begin_array_value<W: ?Sized + io::Write>(&mut self, w: &mut W, first: bool) -> io::Result<()> {
        self.0.begin_array_value(w, first)
    }

    fn end_array_value<W: ?Sized + io::Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.end_array_value(w)
    }

    fn begin_object<W: ?Sized + io::Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.begin_object(w)
    }

    fn end_object<W: ?Sized + io::Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.end_object(w)
    }

    fn begin_object_key<W: ?Sized + io::Write>(&mut self, w: &mut W, first: bool) -> io::Result<()> {
        self.0.begin_object_key(w, first)
    }

    fn begin_object_value<W: ?Sized + io::Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.begin_object_value(w)
    }

    fn end_object_value<W: ?Sized + io::Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.end_object_value(w)
    }
}

/// Pretty JSON with a trailing newline.
pub fn to_json<T: Serialize + ?Sized>(value: &T) -> String {
    let mut buf = Vec::new();
    let mut ser = serde_json::Serializer::with_formatter(
        &mut buf,
        FixedFloatFormatter(PrettyFormatter::with_indent(b"  ")),
    );
    value.serialize(&mut ser).expect("serializing into memory does not fail");
    buf.push(b'\n');
    String::from_utf8(buf).expect("serde_json emits UTF-8")
}

/// `%g`-style formatting with `digits` significant digits and trailing zeros
/// removed. Negative zero prints as `0`.
pub fn format_sig(x: f64, digits: usize) -> String {
    if x.is_nan() {
        return "NaN".to_string();
    }
    if x.is_infinite() {
        return if x > 0.0 { "inf" } else { "-inf" }.to_string();
    }
    if x == 0.0 {
        return "0".to_string();
    }
    let digits = digits.max(1);
    let sci = format!("{:.*e}", digits - 1, x);
    let (mantissa, exp) = sci.split_once('e').expect("exponent present");
    let exp: i32 = exp.parse().expect("integer exponent");
    if exp < -5 || exp >= digits as i32 {
        format!("{}e{}", trim_zeros(mantissa), exp)
    } else {
        let decimals = (digits as i32 - 1 - exp).max(0) as usize;
        trim_zeros(&format!("{x:.decimals$}")).to_string()
    }
}

fn trim_zeros(s: &str) -> &str {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.')
    } else {
        s
    }
}

pub const CSV_DIGITS: usize = 9;
pub const CSV_HEADER: &str = "k,b,K,B,stable,representable,identity_deviation,orthogonality_angle_deg";

fn csv_opt(x: Option<f64>) -> String {
    x.map(|v| format_sig(v, CSV_DIGITS)).unwrap_or_default()
}

/// One row per grid node, `k` outer and `b` inner. Missing values are empty.
pub fn grid_csv(grid: &DeformationGrid) -> String {
    let mut out = String::new();
    out.push_str(CSV_HEADER);
    out.push('\n');
    for node in grid.nodes.iter().flatten() {
        let metrics = node.metrics.as_ref();
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{},{}",
            format_sig(node.k, CSV_DIGITS),
            format_sig(node.b, CSV_DIGITS),
            csv_opt(node.stiffness),
            csv_opt(node.damping),
            node.stable,
            node.representable,
            csv_opt(metrics.map(|m| m.identity_deviation)),
            csv_opt(metrics.map(|m| m.orthogonality_angle_deg)),
        );
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SvgOptions {
    /// Added to every plotted `B`; the real-damping offset when the axis shows total damping.
    pub b_offset: f64,
    pub show_reference: bool,
}

impl Default for SvgOptions {
    fn default() -> Self {
        SvgOptions { b_offset: 0.0, show_reference: true }
    }
}

const WIDTH: f64 = 800.0;
const HEIGHT: f64 = 600.0;
const MARGIN: f64 = 60.0;
/// Fraction of the data extent added on each side of the frame.
const PAD: f64 = 0.05;

const STYLE: &str = "\
.axis { stroke: #444; stroke-width: 1; fill: none; }
.iso-k { stroke: #1f5fa8; stroke-width: 1.2; fill: none; }
.iso-b { stroke: #c0392b; stroke-width: 1.2; fill: none; }
.boundary { stroke: #000; stroke-width: 2.5; fill: none; }
.reference { stroke: #999; stroke-width: 0.8; stroke-dasharray: 4 3; fill: none; }
.label { font-family: sans-serif; font-size: 12px; fill: #222; }
";

struct Frame {
    k_lo: f64,
    k_hi: f64,
    b_lo: f64,
    b_hi: f64,
}

impl Frame {
    fn fit(points: impl Iterator<Item = (f64, f64)>) -> Frame {
        let mut f = Frame { k_lo: 0.0, k_hi: 0.0, b_lo: 0.0, b_hi: 0.0 };
        for (k, b) in points.filter(|(k, b)| k.is_finite() && b.is_finite()) {
            f.k_lo = f.k_lo.min(k);
            f.k_hi = f.k_hi.max(k);
            f.b_lo = f.b_lo.min(b);
            f.b_hi = f.b_hi.max(b);
        }
        if f.k_hi - f.k_lo <= 0.0 {
            f.k_hi = f.k_lo + 1.0;
        }
        if f.b_hi - f.b_lo <= 0.0 {
            f.b_hi = f.b_lo + 1.0;
        }
        let (pk, pb) = (PAD * (f.k_hi - f.k_lo), PAD * (f.b_hi - f.b_lo));
        Frame { k_lo: f.k_lo - pk, k_hi: f.k_hi + pk, b_lo: f.b_lo - pb, b_hi: f.b_hi + pb }
    }

    fn x(&self, k: f64) -> f64 {
        MARGIN + (k - self.k_lo) / (self.k_hi - self.k_lo) * (WIDTH - 2.0 * MARGIN)
    }

    fn y(&self, b: f64) -> f64 {
        HEIGHT - MARGIN - (b - self.b_lo) / (self.b_hi - self.b_lo) * (HEIGHT - 2.0 * MARGIN)
    }
}

fn coord(v: f64) -> String {
    let s = format!("{v:.3}");
    if s == "-0.000" { "0.000".to_string() } else { s }
}

fn polyline(out: &mut String, frame: &Frame, class: &str, pts: &[(f64, f64)]) {
    if pts.len() < 2 {
        return;
    }
    let joined: Vec<String> = pts
        .iter()
        .map(|&(k, b)| format!("{},{}", coord(frame.x(k)), coord(frame.y(b))))
        .collect();
    let _ = writeln!(out, r#"<polyline class="{class}" points="{}"/>"#, joined.join(" "));
}

fn segment_points(seg: &[CurveVertex], b_offset: f64) -> Vec<(f64, f64)> {
    seg.iter().map(|v| (v.stiffness, v.damping + b_offset)).collect()
}

/// The deformed grid in the `(K, B)` plane: iso-`k` and iso-`b` curves, the
/// stability boundary, and optionally the undeformed reference lattice.
pub fn grid_svg(grid: &DeformationGrid, opts: SvgOptions) -> String {
    let off = opts.b_offset;
    let curves = grid.iso_k.iter().chain(&grid.iso_b);
    let mut extent: Vec<(f64, f64)> = curves
        .flat_map(|c| c.vertices())
        .map(|v| (v.stiffness, v.damping + off))
        .collect();
    // the boundary can run far from the grid; it only sets the frame when no curve survived
    if extent.is_empty() {
        extent.extend(grid.boundary.points.iter().map(|p| (p.stiffness, p.damping + off)));
    }
    let reference: Vec<Vec<(f64, f64)>> = if opts.show_reference {
        let (k_lo, k_hi) = bounds(&grid.k_values);
        let (b_lo, b_hi) = bounds(&grid.b_values);
        let mut lines: Vec<Vec<(f64, f64)>> =
            grid.k_values.iter().map(|&k| vec![(k, b_lo + off), (k, b_hi + off)]).collect();
        lines.extend(grid.b_values.iter().map(|&b| vec![(k_lo, b + off), (k_hi, b + off)]));
        extent.extend(lines.iter().flatten().copied());
        lines
    } else {
        Vec::new()
    };
    let frame = Frame::fit(extent.into_iter());

    let mut out = String::new();
    let _ = writeln!(
        out,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{w}" height="{h}" viewBox="0 0 {w} {h}">"#,
        w = WIDTH,
        h = HEIGHT
    );
    let _ = writeln!(out, "<style>\n{STYLE}</style>");
    let _ = writeln!(
        out,
        r#"<defs><clipPath id="plot"><rect x="{m}" y="{m}" width="{}" height="{}"/></clipPath></defs>"#,
        coord(WIDTH - 2.0 * MARGIN),
        coord(HEIGHT - 2.0 * MARGIN),
        m = coord(MARGIN)
    );
    let _ = writeln!(out, r#"<g id="reference">"#);
    for line in &reference {
        polyline(&mut out, &frame, "reference", line);
    }
    out.push_str("</g>\n");

    let _ = writeln!(out, r#"<g id="axes">"#);
    let k0 = frame.k_lo.max(0.0).min(frame.k_hi);
    let b0 = frame.b_lo.max(0.0).min(frame.b_hi);
    polyline(&mut out, &frame, "axis", &[(frame.k_lo, b0), (frame.k_hi, b0)]);
    polyline(&mut out, &frame, "axis", &[(k0, frame.b_lo), (k0, frame.b_hi)]);
    let _ = writeln!(
        out,
        r#"<text class="label" x="{}" y="{}">K</text>"#,
        coord(WIDTH - MARGIN + 8.0),
        coord(frame.y(b0) + 4.0)
    );
    let _ = writeln!(
        out,
        r#"<text class="label" x="{}" y="{}">B</text>"#,
        coord(frame.x(k0) - 4.0),
        coord(MARGIN - 8.0)
    );
    let _ = writeln!(
        out,
        r#"<text class="label" x="{}" y="{}">K [{}, {}]  B [{}, {}]  ({})</text>"#,
        coord(MARGIN),
        coord(HEIGHT - MARGIN / 3.0),
        format_sig(frame.k_lo, 4),
        format_sig(frame.k_hi, 4),
        format_sig(frame.b_lo, 4),
        format_sig(frame.b_hi, 4),
        grid.form
    );
    out.push_str("</g>\n");

    for (id, class, family) in [("iso-k", "iso-k", &grid.iso_k), ("iso-b", "iso-b", &grid.iso_b)] {
        let _ = writeln!(out, r#"<g id="{id}">"#);
        for curve in family {
            for seg in &curve.segments {
                polyline(&mut out, &frame, class, &segment_points(seg, off));
            }
        }
        out.push_str("</g>\n");
    }

    let _ = writeln!(out, r#"<g id="boundary" clip-path="url(#plot)">"#);
    let pts: Vec<(f64, f64)> =
        grid.boundary.points.iter().map(|p| (p.stiffness, p.damping + off)).collect();
    polyline(&mut out, &frame, "boundary", &pts);
    out.push_str("</g>\n</svg>\n");
    out
}

fn bounds(values: &[f64]) -> (f64, f64) {
    values
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| (lo.min(v), hi.max(v)))
}

/// Aligned two-column text table of the assembly experiment.
pub fn table1_text(r: &Table1Report) -> String {
    let rows: [(&str, String); 9] = [
        ("omega_I", format_sig(r.omega_i, 9)),
        ("omega_II", format_sig(r.omega_ii, 9)),
        ("omega_III", format_sig(r.omega_iii, 9)),
        ("omega_IV", format_sig(r.omega_iv, 9)),
        ("omega_V", format_sig(r.omega_v, 9)),
        ("detuning_IV", format!("{:+.4}%", 100.0 * r.detuning_iv)),
        ("detuning_V", format!("{:+.4}%", 100.0 * r.detuning_v)),
        ("K_used", format_sig(r.k_used, 9)),
        ("force", r.force.to_string()),
    ];
    let width = rows.iter().map(|(n, _)| n.len()).max().unwrap_or(0);
    let mut out = String::new();
    for (name, value) in rows {
        let _ = writeln!(out, "{name:<width$}  {value:>14}");
    }
    out
}
