//! Real-coefficient polynomials in `z`, evaluated over the complex plane.
//!
//! Root finding is closed-form up to degree 3 (stable quadratic split,
//! trigonometric / Cardano cubic with Newton polish). Higher degrees use the
//! eigenvalues of the companion matrix. Complex roots are always produced as
//! exact conjugate pairs: one member is computed and the other mirrored.

use std::fmt;
use std::ops::{Add, Mul};

use nalgebra::DMatrix;
pub use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Polynomial with coefficients in ascending degree: `coeffs[i]` multiplies `z^i`.
///
/// Trailing zeros are trimmed on construction, so the zero polynomial has an
/// empty coefficient list and the last stored coefficient is never zero.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(from = "Vec<f64>", into = "Vec<f64>")]
pub struct Polynomial {
    coeffs: Vec<f64>,
}

impl From<Vec<f64>> for Polynomial {
    fn from(coeffs: Vec<f64>) -> Self {
        Polynomial::new(coeffs)
    }
}

impl From<Polynomial> for Vec<f64> {
    fn from(p: Polynomial) -> Self {
        p.coeffs
    }
}

impl Polynomial {
    pub fn new(mut coeffs: Vec<f64>) -> Self {
        while coeffs.last() == Some(&0.0) {
            coeffs.pop();
        }
        Polynomial { coeffs }
    }

    pub fn zero() -> Self {
        Polynomial { coeffs: Vec::new() }
    }

    /// The polynomial `z`.
    pub fn identity() -> Self {
        Polynomial::new(vec![0.0, 1.0])
    }

    /// Monic polynomial `Π (z − r)` over the given real roots.
    pub fn from_real_roots(roots: &[f64]) -> Self {
        roots
            .iter()
            .fold(Polynomial::new(vec![1.0]), |acc, &r| {
                &acc * &Polynomial::new(vec![-r, 1.0])
            })
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.is_empty()
    }

    /// `None` for the zero polynomial.
    pub fn degree(&self) -> Option<usize> {
        self.coeffs.len().checked_sub(1)
    }

    pub fn leading(&self) -> Option<f64> {
        self.coeffs.last().copied()
    }

    pub fn max_abs_coeff(&self) -> f64 {
        self.coeffs.iter().fold(0.0_f64, |m, c| m.max(c.abs()))
    }

    pub fn scale(&self, factor: f64) -> Polynomial {
        Polynomial::new(self.coeffs.iter().map(|c| c * factor).collect())
    }

    /// Horner evaluation at a complex argument.
    pub fn eval(&self, z: Complex64) -> Complex64 {
        self.coeffs
            .iter()
            .rev()
            .fold(Complex64::new(0.0, 0.0), |acc, &c| acc * z + c)
    }

    pub fn eval_real(&self, x: f64) -> f64 {
        self.coeffs.iter().rev().fold(0.0, |acc, &c| acc * x + c)
    }

    pub fn derivative(&self) -> Polynomial {
        Polynomial::new(
            self.coeffs
                .iter()
                .enumerate()
                .skip(1)
                .map(|(i, c)| c * i as f64)
                .collect(),
        )
    }

    /// All complex roots, with multiplicity.
    ///
    /// Roots of degree-2 and degree-3 polynomials are computed in closed form;
    /// higher degrees go through the companion matrix. Conjugate pairs are
    /// bitwise mirrored.
    pub fn roots(&self) -> Result<Vec<Complex64>> {
        let deg = match self.degree() {
            None => return Err(Error::ZeroPolynomial),
            Some(0) => return Err(Error::ConstantPolynomial),
            Some(d) => d,
        };
        let c = &self.coeffs;
        let roots = match deg {
            1 => vec![Complex64::new(-c[0] / c[1], 0.0)],
            2 => quadratic_roots(c[2], c[1], c[0]).to_vec(),
            3 => cubic_roots(self),
            _ => companion_roots(self),
        };
        Ok(roots)
    }
}

impl Add for &Polynomial {
    type Output = Polynomial;

    fn add(self, rhs: &Polynomial) -> Polynomial {
        let n = self.coeffs.len().max(rhs.coeffs.len());
        let coeffs = (0..n)
            .map(|i| self.coeffs.get(i).unwrap_or(&0.0) + rhs.coeffs.get(i).unwrap_or(&0.0))
            .collect();
        Polynomial::new(coeffs)
    }
}

impl Mul for &Polynomial {
    type Output = Polynomial;

    fn mul(self, rhs: &Polynomial) -> Polynomial {
        if self.is_zero() || rhs.is_zero() {
            return Polynomial::zero();
        }
        let mut out = vec![0.0; self.coeffs.len() + rhs.coeffs.len() - 1];
        for (i, a) in self.coeffs.iter().enumerate() {
            for (j, b) in rhs.coeffs.iter().enumerate() {
                out[i + j] += a * b;
            }
        }
        Polynomial::new(out)
    }
}

impl fmt::Display for Polynomial {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_zero() {
            return write!(f, "0");
        }
        let mut first = true;
        for (i, &c) in self.coeffs.iter().enumerate().rev() {
            if c == 0.0 {
                continue;
            }
            if !first {
                write!(f, " {} ", if c < 0.0 { '-' } else { '+' })?;
            } else if c < 0.0 {
                write!(f, "-")?;
            }
            first = false;
            let a = c.abs();
            match i {
                0 => write!(f, "{a}")?,
                1 => write!(f, "{a}·z")?,
                _ => write!(f, "{a}·z^{i}")?,
            }
        }
        Ok(())
    }
}

/// Roots of `a·z² + b·z + c` with `a ≠ 0`, larger magnitude first for real
/// roots. The smaller real root is recovered from the product `c/a` to avoid
/// cancellation.
fn quadratic_roots(a: f64, b: f64, c: f64) -> [Complex64; 2] {
    let disc = b * b - 4.0 * a * c;
    if disc >= 0.0 {
        let q = -0.5 * (b + b.signum() * disc.sqrt());
        if q == 0.0 {
            return [Complex64::new(0.0, 0.0); 2];
        }
        let r1 = q / a;
        let r2 = c / q;
        let (big, small) = if r1.abs() >= r2.abs() { (r1, r2) } else { (r2, r1) };
        [Complex64::new(big, 0.0), Complex64::new(small, 0.0)]
    } else {
        let re = -b / (2.0 * a);
        let im = (-disc).sqrt() / (2.0 * a).abs();
        let upper = Complex64::new(re, im);
        [upper, upper.conj()]
    }
}

const POLISH_ITERATIONS: usize = 3;

/// Newton refinement of a complex root; a step is kept only if it lowers |p|.
fn polish_complex(p: &Polynomial, dp: &Polynomial, mut z: Complex64) -> Complex64 {
    let mut fz = p.eval(z).norm();
    for _ in 0..POLISH_ITERATIONS {
        let d = dp.eval(z);
        if d.norm() == 0.0 || fz == 0.0 {
            break;
        }
        let next = z - p.eval(z) / d;
        let fnext = p.eval(next).norm();
        if fnext.is_nan() || fnext >= fz {
            break;
        }
        z = next;
        fz = fnext;
    }
    z
}

fn polish_real(p: &Polynomial, dp: &Polynomial, mut x: f64) -> f64 {
    let mut fx = p.eval_real(x).abs();
    for _ in 0..POLISH_ITERATIONS {
        let d = dp.eval_real(x);
        if d == 0.0 || fx == 0.0 {
            break;
        }
        let next = x - p.eval_real(x) / d;
        let fnext = p.eval_real(next).abs();
        if fnext.is_nan() || fnext >= fx {
            break;
        }
        x = next;
        fx = fnext;
    }
    x
}

/// Roots of a real polynomial given as (real roots, upper-half-plane
/// representatives), polished and expanded into a conjugate-closed list.
fn polish_and_expand(p: &Polynomial, reals: &[f64], uppers: &[Complex64]) -> Vec<Complex64> {
    let dp = p.derivative();
    let mut out = Vec::with_capacity(reals.len() + 2 * uppers.len());
    for &r in reals {
        out.push(Complex64::new(polish_real(p, &dp, r), 0.0));
    }
    for &u in uppers {
        let z = polish_complex(p, &dp, u);
        if z.im == 0.0 {
            // polish landed on the real axis; keep the pair structure
            out.push(z);
            out.push(z);
        } else {
            let z = Complex64::new(z.re, z.im.abs());
            out.push(z);
            out.push(z.conj());
        }
    }
    out
}

fn cubic_roots(p: &Polynomial) -> Vec<Complex64> {
    let c = p.coeffs();
    let lead = c[3];
    let (a2, a1, a0) = (c[2] / lead, c[1] / lead, c[0] / lead);

    // depressed cubic t³ + pt + q with z = t − a2/3
    let shift = a2 / 3.0;
    let pp = a1 - a2 * a2 / 3.0;
    let qq = 2.0 * a2 * a2 * a2 / 27.0 - a2 * a1 / 3.0 + a0;
    let delta = (qq / 2.0).powi(2) + (pp / 3.0).powi(3);

    if delta <= 0.0 {
        // three real roots (trigonometric form)
        if pp == 0.0 {
            return polish_and_expand(p, &[-shift, -shift, -shift], &[]);
        }
        let r = (-pp / 3.0).sqrt();
        let arg = ((3.0 * qq) / (2.0 * pp) * (-3.0 / pp).sqrt()).clamp(-1.0, 1.0);
        let phi = arg.acos() / 3.0;
        let tau = std::f64::consts::TAU;
        let roots: Vec<f64> = (0..3)
            .map(|k| 2.0 * r * (phi - tau * k as f64 / 3.0).cos() - shift)
            .collect();
        return polish_and_expand(p, &roots, &[]);
    }

    // one real root (Cardano), the other two from the deflated quadratic
    let w = -qq / 2.0 - qq.signum() * delta.sqrt();
    let u = w.cbrt();
    let t = if u == 0.0 { 0.0 } else { u - pp / (3.0 * u) };
    let dp = p.derivative();
    let real = polish_real(p, &dp, t - shift);

    // (z − r)(z² + βz + γ): β from the z² coefficient, γ from whichever of
    // the z¹ or z⁰ coefficients carries less rounding
    let beta = a2 + real;
    let gamma_fwd = a1 + real * beta;
    let gamma = if real != 0.0 && (a0 / real).abs() < (a1.abs() + (real * beta).abs()) {
        -a0 / real
    } else {
        gamma_fwd
    };
    let quad = quadratic_roots(1.0, beta, gamma);
    let mut out = vec![Complex64::new(real, 0.0)];
    if quad[0].im != 0.0 {
        out.extend(polish_and_expand(p, &[], &[quad[0]]));
    } else {
        out.extend(polish_and_expand(p, &[quad[0].re, quad[1].re], &[]));
    }
    out
}

fn companion_roots(p: &Polynomial) -> Vec<Complex64> {
    let eig = companion_matrix(p).complex_eigenvalues();
    let uppers: Vec<Complex64> = eig.iter().filter(|z| z.im > 0.0).copied().collect();
    let lowers = eig.iter().filter(|z| z.im < 0.0).count();
    let reals: Vec<f64> = if lowers == uppers.len() {
        eig.iter().filter(|z| z.im == 0.0).map(|z| z.re).collect()
    } else {
        // unpaired Schur output: the surplus lower-half roots are taken as real
        let mut lower: Vec<Complex64> = eig.iter().filter(|z| z.im < 0.0).copied().collect();
        lower.sort_by(|a, b| a.im.total_cmp(&b.im));
        eig.iter()
            .filter(|z| z.im == 0.0)
            .map(|z| z.re)
            .chain(lower[uppers.len()..].iter().map(|z| z.re))
            .collect()
    };
    polish_and_expand(p, &reals, &uppers)
}

/// Top-row companion matrix of the monic normalization of `p`.
///
/// Its characteristic polynomial is `p / leading(p)`.
pub fn companion_matrix(p: &Polynomial) -> DMatrix<f64> {
    let c = p.coeffs();
    let n = c.len() - 1;
    let lead = c[n];
    let mut m = DMatrix::<f64>::zeros(n, n);
    for j in 0..n {
        m[(0, j)] = -c[n - 1 - j] / lead;
    }
    for i in 1..n {
        m[(i, i - 1)] = 1.0;
    }
    m
}

/// Solves the single complex equation `a·x + b·y + c = 0` for real `x`, `y`.
///
/// Real and imaginary parts give a 2×2 real system; it is singular when `a`
/// and `b` are collinear in the complex plane.
pub fn solve_complex_linear(a: Complex64, b: Complex64, c: Complex64) -> Result<(f64, f64)> {
    let det = a.re * b.im - a.im * b.re;
    if det.abs() <= 1e-14 * a.norm() * b.norm() || det == 0.0 {
        return Err(Error::SingularSystem(format!(
            "coefficients {a} and {b} are collinear"
        )));
    }
    let x = (b.re * c.im - c.re * b.im) / det;
    let y = (c.re * a.im - a.re * c.im) / det;
    Ok((x, y))
}

/// Solves the real 2×2 system `m·[x, y]ᵀ = rhs` by Cramer's rule.
pub(crate) fn solve_real_2x2(m: [[f64; 2]; 2], rhs: [f64; 2]) -> Result<(f64, f64)> {
    let det = m[0][0] * m[1][1] - m[0][1] * m[1][0];
    let scale = (m[0][0].hypot(m[0][1])) * (m[1][0].hypot(m[1][1]));
    if det == 0.0 || det.abs() <= 1e-14 * scale {
        return Err(Error::SingularSystem(format!("{m:?} has no unique solution")));
    }
    let x = (rhs[0] * m[1][1] - m[0][1] * rhs[1]) / det;
    let y = (m[0][0] * rhs[1] - rhs[0] * m[1][0]) / det;
    Ok((x, y))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn sorted(mut v: Vec<Complex64>) -> Vec<Complex64> {
        v.sort_by(|a, b| a.re.total_cmp(&b.re).then(a.im.total_cmp(&b.im)));
        v
    }

    #[test]
    fn trims_trailing_zeros() {
        assert_eq!(Polynomial::new(vec![1.0, 2.0, 0.0, 0.0]).coeffs(), &[1.0, 2.0]);
        assert!(Polynomial::new(vec![0.0, 0.0]).is_zero());
        assert_eq!(Polynomial::new(vec![0.0]).degree(), None);
        assert_eq!(Polynomial::new(vec![3.0, 0.0, 1.0]).degree(), Some(2));
    }

    #[test]
    fn eval_examples() {
        let sq = Polynomial::new(vec![1.0, -2.0, 1.0]);
        assert_eq!(sq.eval(c(1.0, 0.0)), c(0.0, 0.0));

        let z = c(0.5, 0.5);
        assert_eq!(Polynomial::identity().eval(z), z);

        // direct expansion of (z − 1)² at z = e^{i}
        let z = Complex64::from_polar(1.0, 1.0);
        let direct = (z - 1.0) * (z - 1.0);
        let v = sq.eval(z);
        assert!((v - direct).norm() < 1e-15);
        assert!((v - c(-0.496751, -0.773644)).norm() < 1e-6);
    }

    #[test]
    fn derivative_examples() {
        assert_eq!(Polynomial::new(vec![1.0, -2.0, 1.0]).derivative().coeffs(), &[-2.0, 2.0]);
        assert!(Polynomial::new(vec![0.0]).derivative().is_zero());
        assert_eq!(
            Polynomial::new(vec![0.0, 0.0, 0.0, 1.0]).derivative().coeffs(),
            &[0.0, 0.0, 3.0]
        );
    }

    #[test]
    fn degenerate_inputs_have_no_roots() {
        assert!(matches!(Polynomial::zero().roots(), Err(Error::ZeroPolynomial)));
        assert!(matches!(
            Polynomial::new(vec![2.5, 0.0, 0.0]).roots(),
            Err(Error::ConstantPolynomial)
        ));
    }

    #[test]
    fn digital_oscillator_roots_lie_on_unit_circle() {
        let p = Polynomial::new(vec![1.0, -2.0 * 1.0_f64.cos(), 1.0]);
        let r = p.roots().unwrap();
        assert_eq!(r[0], r[1].conj());
        for z in &r {
            assert!((z.norm() - 1.0).abs() < 1e-15);
            assert!((z.arg().abs() - 1.0).abs() < 1e-12);
        }
        assert!((r[0].re - 0.540302).abs() < 1e-6);
        assert!((r[0].im.abs() - 0.841471).abs() < 1e-6);
    }

    #[test]
    fn cubic_with_pair_and_real_root() {
        // (z − 0.919395…)(z² − 2cos1·z + 1), the unit-delay construction
        let cos1 = 1.0_f64.cos();
        let third = 2.0 * (1.0 - cos1);
        let quad = Polynomial::new(vec![1.0, -2.0 * cos1, 1.0]);
        let p = &quad * &Polynomial::new(vec![-third, 1.0]);
        let by_im = |mut v: Vec<Complex64>| {
            v.sort_by(|a, b| a.im.total_cmp(&b.im));
            v
        };
        let r = by_im(p.roots().unwrap());
        assert!((r[0].im + 1.0_f64.sin()).abs() < 1e-12);
        assert!((r[2].im - 1.0_f64.sin()).abs() < 1e-12);
        assert_eq!(r[1].im, 0.0);
        assert!((r[1].re - 0.919395).abs() < 1e-6);
        let want = [-third, 1.0 + 2.0 * cos1 * third, -2.0, 1.0];
        assert!(p.coeffs().iter().zip(want).all(|(a, b)| (a - b).abs() < 1e-15));
    }

    #[test]
    fn cubic_three_real_roots() {
        let p = Polynomial::from_real_roots(&[-2.0, 0.5, 3.0]);
        let r = sorted(p.roots().unwrap());
        for (z, want) in r.iter().zip([-2.0, 0.5, 3.0]) {
            assert!(z.im == 0.0 && (z.re - want).abs() < 1e-12);
        }
    }

    #[test]
    fn cubic_with_zero_root_and_double_root() {
        // z(z − 1)², the unit-delay form at K = B = 0
        let p = Polynomial::new(vec![0.0, 1.0, -2.0, 1.0]);
        let r = p.roots().unwrap();
        assert_eq!(r.len(), 3);
        let near_one = r.iter().filter(|z| (*z - 1.0).norm() < 1e-7).count();
        assert_eq!(near_one, 2);
        assert!(r.iter().any(|z| z.norm() < 1e-12));
    }

    #[test]
    fn quartic_uses_companion_and_pairs_exactly() {
        // (z² + 1)(z − 0.5)(z + 2)
        let p = &Polynomial::new(vec![1.0, 0.0, 1.0]) * &Polynomial::from_real_roots(&[0.5, -2.0]);
        let r = p.roots().unwrap();
        assert_eq!(r.len(), 4);
        let uppers: Vec<_> = r.iter().filter(|z| z.im > 0.0).collect();
        assert_eq!(uppers.len(), 1);
        assert!(r.contains(&uppers[0].conj()));
        for z in &r {
            assert!(p.eval(*z).norm() < 1e-12);
        }
    }

    #[test]
    fn complex_linear_examples() {
        let (x, y) = solve_complex_linear(c(1.0, 0.0), c(0.0, 1.0), c(-3.0, -4.0)).unwrap();
        assert!((x - 3.0).abs() < 1e-15 && (y - 4.0).abs() < 1e-15);

        let z = Complex64::from_polar(1.0, 1.0);
        let (x, y) = solve_complex_linear(z, z - 1.0, z * (z - 1.0) * (z - 1.0)).unwrap();
        assert!((x - 0.074108).abs() < 1e-6, "{x}");
        assert!((y - 0.919395).abs() < 1e-6, "{y}");
        // hand elimination of the same system
        let cos1 = 1.0_f64.cos();
        assert!((x - 2.0 * (1.0 - cos1) * (2.0 * cos1 - 1.0)).abs() < 1e-14);
        assert!((y - 2.0 * (1.0 - cos1)).abs() < 1e-14);

        assert!(matches!(
            solve_complex_linear(c(1.0, 0.0), c(2.0, 0.0), c(0.0, 1.0)),
            Err(Error::SingularSystem(_))
        ));
    }

    #[test]
    fn companion_is_top_row_form() {
        let m = companion_matrix(&Polynomial::new(vec![6.0, -5.0, 1.0]).scale(2.0));
        assert_eq!(m[(0, 0)], 5.0);
        assert_eq!(m[(0, 1)], -6.0);
        assert_eq!(m[(1, 0)], 1.0);
        assert_eq!(m[(1, 1)], 0.0);
    }

    #[test]
    fn display_is_readable() {
        assert_eq!(Polynomial::new(vec![1.0, -2.0, 1.0]).to_string(), "1·z^2 - 2·z + 1");
        assert_eq!(Polynomial::zero().to_string(), "0");
    }
}
