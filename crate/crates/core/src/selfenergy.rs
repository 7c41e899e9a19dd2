//! Reduced self-energy
//!
//! ```text
//! Q̄(s) = -i ∫₀^∞ g(x) / (x - i s) dx,     g(x) = x / (1 + x²)⁴
//! ```
//!
//! evaluated in closed form on the physical sheet and on the second sheet
//! reached by crossing the branch cut, plus an independent adaptive
//! quadrature of the defining integral.
//!
//! Branch convention: the logarithm in the closed form has its cut along the
//! negative imaginary axis, i.e. `arg s ∈ (-π/2, 3π/2)` on the first sheet.
//! A principal logarithm would put the cut on the negative real axis, which
//! is exactly where the branch-cut integral of the survival amplitude runs.
//! On the second sheet the argument range is `(-5π/2, -π/2]`, so the
//! second-sheet function is continuous from the third quadrant onto the
//! negative imaginary axis, where it equals the first-sheet boundary value
//! taken from the right.
//!
//! At `s = ±1` the fourth-order zeros of the denominator are cancelled by the
//! numerator. Inside `|s ∓ 1| < 0.25` the closed form is replaced by a
//! 40-term Taylor series whose coefficients come from a Cauchy integral of
//! the closed form on the circle `|s ∓ 1| = 0.5`.

use std::f64::consts::PI;
use std::sync::OnceLock;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::model::g;
use crate::quad::{adaptive, ranges_from_breakpoints, Range, Tolerance};

const I: Complex64 = Complex64::new(0.0, 1.0);

/// Q̄(0⁺) = -i ∫ dx / (1 + x²)⁴ = -i 5π/32.
pub const QBAR_AT_ORIGIN: Complex64 = Complex64::new(0.0, -5.0 * PI / 32.0);

const PATCH_RADIUS: f64 = 0.25;
const SERIES_TERMS: usize = 40;
const CAUCHY_RADIUS: f64 = 0.5;
const CAUCHY_POINTS: usize = 128;
const ASYMPTOTIC_RADIUS: f64 = 1e4;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Sheet {
    First,
    Second,
}

/// A Laplace variable (in units of Λ) together with its Riemann sheet.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SheetPoint {
    pub s: Complex64,
    pub sheet: Sheet,
}

impl SheetPoint {
    pub fn new(s: Complex64, sheet: Sheet) -> Result<Self> {
        let p = SheetPoint { s, sheet };
        p.validate()?;
        Ok(p)
    }

    pub fn first(s: Complex64) -> Result<Self> {
        Self::new(s, Sheet::First)
    }

    pub fn second(s: Complex64) -> Result<Self> {
        Self::new(s, Sheet::Second)
    }

    fn validate(&self) -> Result<()> {
        let s = self.s;
        if !(s.re.is_finite() && s.im.is_finite()) {
            return Err(Error::domain("the self-energy", s));
        }
        match self.sheet {
            Sheet::First => {
                if s.re == 0.0 && s.im <= 0.0 {
                    return Err(Error::domain("the first sheet (branch cut)", s));
                }
            }
            Sheet::Second => {
                if s == Complex64::new(0.0, 0.0)
                    || s == Complex64::new(1.0, 0.0)
                    || s == Complex64::new(-1.0, 0.0)
                {
                    return Err(Error::domain("the second sheet", s));
                }
            }
        }
        Ok(())
    }
}

/// Logarithm on the requested sheet.
fn branch_log(s: Complex64, sheet: Sheet) -> Complex64 {
    let theta = s.im.atan2(s.re);
    let arg = match sheet {
        Sheet::First => {
            if theta <= -0.5 * PI {
                theta + 2.0 * PI
            } else {
                theta
            }
        }
        Sheet::Second => {
            if theta <= -0.5 * PI {
                theta
            } else {
                theta - 2.0 * PI
            }
        }
    };
    Complex64::new(s.norm().ln(), arg)
}

// Polynomial part of the closed-form numerator, lowest degree first.
fn numerator_poly() -> [Complex64; 8] {
    [
        Complex64::new(0.0, -15.0 * PI),
        Complex64::new(-88.0, 48.0 * PI),
        Complex64::new(0.0, -45.0 * PI),
        Complex64::new(144.0, 0.0),
        Complex64::new(0.0, 15.0 * PI),
        Complex64::new(-72.0, 0.0),
        Complex64::new(0.0, -3.0 * PI),
        Complex64::new(16.0, 0.0),
    ]
}

fn horner(coeffs: &[Complex64], s: Complex64) -> Complex64 {
    coeffs
        .iter()
        .rev()
        .fold(Complex64::new(0.0, 0.0), |acc, &c| acc * s + c)
}

fn horner_derivative(coeffs: &[Complex64], s: Complex64) -> Complex64 {
    coeffs
        .iter()
        .enumerate()
        .skip(1)
        .rev()
        .fold(Complex64::new(0.0, 0.0), |acc, (k, &c)| {
            acc * s + c * k as f64
        })
}

fn closed_form(s: Complex64, log_s: Complex64) -> Complex64 {
    let n = horner(&numerator_poly(), s) - 96.0 * s * log_s;
    let d = s * s - 1.0;
    let d2 = d * d;
    n / (96.0 * d2 * d2)
}

fn closed_form_derivative(s: Complex64, log_s: Complex64) -> Complex64 {
    let poly = numerator_poly();
    let n = horner(&poly, s) - 96.0 * s * log_s;
    let dn = horner_derivative(&poly, s) - 96.0 * (log_s + 1.0);
    let d = s * s - 1.0;
    let d2 = d * d;
    (dn * d - 8.0 * s * n) / (96.0 * d2 * d2 * d)
}

/// Jump 2πi s / (s² - 1)⁴ between the two sheets.
pub fn discontinuity(s: Complex64) -> Complex64 {
    let d = s * s - 1.0;
    let d2 = d * d;
    2.0 * PI * I * s / (d2 * d2)
}

fn discontinuity_derivative(s: Complex64) -> Complex64 {
    let d = s * s - 1.0;
    let d2 = d * d;
    2.0 * PI * I * (-7.0 * s * s - 1.0) / (d2 * d2 * d)
}

// Moments ∫ x^k g(x) dx for k = 0..5; the sixth diverges.
const MOMENTS: [f64; 6] = [
    1.0 / 6.0,
    PI / 32.0,
    1.0 / 12.0,
    PI / 32.0,
    1.0 / 6.0,
    5.0 * PI / 32.0,
];

fn asymptotic(s: Complex64) -> (Complex64, Complex64) {
    // Q̄(s) = Σ_k m_k (-i)^k / s^{k+1} + O(s^-7 log s)
    let inv = 1.0 / s;
    let mut value = Complex64::new(0.0, 0.0);
    let mut deriv = Complex64::new(0.0, 0.0);
    let mut phase = Complex64::new(1.0, 0.0);
    let mut pow = inv;
    for (k, m) in MOMENTS.iter().enumerate() {
        value += phase * *m * pow;
        deriv -= phase * (*m * (k + 1) as f64) * pow * inv;
        phase *= -I;
        pow *= inv;
    }
    (value, deriv)
}

struct Series {
    center: f64,
    coeffs: [Complex64; SERIES_TERMS],
}

impl Series {
    fn build(center: f64) -> Series {
        let mut coeffs = [Complex64::new(0.0, 0.0); SERIES_TERMS];
        let n = CAUCHY_POINTS as f64;
        for k in 0..CAUCHY_POINTS {
            let theta = 2.0 * PI * (k as f64 + 0.5) / n;
            let w = Complex64::from_polar(1.0, theta);
            let s = center + CAUCHY_RADIUS * w;
            let f = closed_form(s, branch_log(s, Sheet::First));
            let mut wn = Complex64::new(1.0, 0.0);
            let winv = w.conj();
            for c in coeffs.iter_mut() {
                *c += f * wn;
                wn *= winv;
            }
        }
        let mut scale = 1.0 / n;
        for c in coeffs.iter_mut() {
            *c *= scale;
            scale /= CAUCHY_RADIUS;
        }
        Series { center, coeffs }
    }

    fn eval(&self, s: Complex64) -> (Complex64, Complex64) {
        let delta = s - self.center;
        let mut value = Complex64::new(0.0, 0.0);
        let mut deriv = Complex64::new(0.0, 0.0);
        for (k, &c) in self.coeffs.iter().enumerate().rev() {
            value = value * delta + c;
            if k > 0 {
                deriv = deriv * delta + c * k as f64;
            }
        }
        (value, deriv)
    }
}

fn series_at(center_positive: bool) -> &'static Series {
    static PLUS: OnceLock<Series> = OnceLock::new();
    static MINUS: OnceLock<Series> = OnceLock::new();
    if center_positive {
        PLUS.get_or_init(|| Series::build(1.0))
    } else {
        MINUS.get_or_init(|| Series::build(-1.0))
    }
}

/// First-sheet value and derivative at a point already checked to be valid.
fn first_sheet(s: Complex64) -> (Complex64, Complex64) {
    if s.norm() > ASYMPTOTIC_RADIUS {
        return asymptotic(s);
    }
    if (s - 1.0).norm() < PATCH_RADIUS {
        return series_at(true).eval(s);
    }
    if (s + 1.0).norm() < PATCH_RADIUS {
        return series_at(false).eval(s);
    }
    let log_s = branch_log(s, Sheet::First);
    (closed_form(s, log_s), closed_form_derivative(s, log_s))
}

fn second_sheet(s: Complex64) -> (Complex64, Complex64) {
    let near_patch = s.norm() > ASYMPTOTIC_RADIUS
        || (s - 1.0).norm() < PATCH_RADIUS
        || (s + 1.0).norm() < PATCH_RADIUS;
    if near_patch {
        // The patches sit away from the imaginary axis, where the two sheets
        // differ exactly by the discontinuity term.
        let (v, d) = first_sheet(s);
        return (v + discontinuity(s), d + discontinuity_derivative(s));
    }
    let log_s = branch_log(s, Sheet::Second);
    (closed_form(s, log_s), closed_form_derivative(s, log_s))
}

/// Q̄ at a point on either sheet.
pub fn qbar(p: SheetPoint) -> Result<Complex64> {
    p.validate()?;
    Ok(match p.sheet {
        Sheet::First => first_sheet(p.s).0,
        Sheet::Second => second_sheet(p.s).0,
    })
}

/// dQ̄/ds at a point on either sheet.
pub fn qbar_derivative(p: SheetPoint) -> Result<Complex64> {
    p.validate()?;
    Ok(match p.sheet {
        Sheet::First => first_sheet(p.s).1,
        Sheet::Second => second_sheet(p.s).1,
    })
}

/// Value and derivative together.
pub fn qbar_with_derivative(p: SheetPoint) -> Result<(Complex64, Complex64)> {
    p.validate()?;
    Ok(match p.sheet {
        Sheet::First => first_sheet(p.s),
        Sheet::Second => second_sheet(p.s),
    })
}

/// Boundary value Q̄(0⁺ - i x) on the cut approached from the right.
/// Its real part is π g(x) and its imaginary part is minus the Hilbert
/// transform PV ∫ g(x') / (x' - x) dx'.
pub fn qbar_right_edge(x: f64) -> Result<Complex64> {
    qbar(SheetPoint::second(Complex64::new(0.0, -x))?)
}

/// Q̄(s) on the first sheet by adaptive quadrature of the defining integral,
/// to absolute accuracy `tol`.
pub fn qbar_quadrature(s: Complex64, tol: f64) -> Result<Complex64> {
    SheetPoint::first(s)?;
    if !(tol > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "quadrature tolerance must be positive, got {tol}"
        )));
    }
    let mag = s.norm();
    let mut points = vec![0.0, mag, 1.0, 2.0 * mag];
    // Near-pole of 1/(x - i s) at x = -Im s when s hugs the negative imaginary axis.
    let y = -s.im;
    if y > 0.0 {
        let w = s.re.abs().max(1e-300);
        points.push(y);
        let mut k = w;
        while k < y {
            points.push(y - k);
            points.push(y + k);
            k *= 4.0;
        }
    }
    if mag > 0.0 {
        let mut k = mag * 1e-3;
        while k < mag {
            points.push(k);
            k *= 8.0;
        }
    }
    let far = points.iter().copied().fold(4.0f64, f64::max) * 2.0;
    points.push(far);
    let mut ranges = ranges_from_breakpoints(&points);
    ranges.push(Range::Tail(far));
    let est = adaptive(
        |x| -I * g(x) / (Complex64::new(x, 0.0) - I * s),
        &ranges,
        Tolerance::new(tol, 0.0).with_budget(1_000_000),
    )?;
    Ok(est.value)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn q1(s: Complex64) -> Complex64 {
        qbar(SheetPoint::first(s).unwrap()).unwrap()
    }

    fn q2(s: Complex64) -> Complex64 {
        qbar(SheetPoint::second(s).unwrap()).unwrap()
    }

    #[test]
    fn removable_points() {
        let plus = c(32.0, -5.0 * PI) / 256.0;
        let minus = c(-32.0, -5.0 * PI) / 256.0;
        assert!((q1(c(1.0, 0.0)) - plus).norm() < 1e-14);
        assert!((q1(c(-1.0, 0.0)) - minus).norm() < 1e-14);
        // Series and direct evaluation agree on the patch boundary.
        for k in 0..16 {
            let w = Complex64::from_polar(PATCH_RADIUS, 2.0 * PI * k as f64 / 16.0);
            for center in [1.0, -1.0] {
                let s = center + w;
                let direct = closed_form(s, branch_log(s, Sheet::First));
                let series = series_at(center > 0.0).eval(s).0;
                assert!((direct - series).norm() < 1e-12, "{s}");
            }
        }
    }

    #[test]
    fn origin_limit() {
        let v = q1(c(1e-6, 0.0));
        assert!((v - QBAR_AT_ORIGIN).norm() < 2e-5);
        let quad = qbar_quadrature(c(1e-6, 0.0), 1e-12).unwrap();
        assert!((v - quad).norm() < 1e-9, "{v} vs {quad}");
    }

    #[test]
    fn large_argument_asymptote() {
        let v = q1(c(100.0, 0.0));
        assert!((v.re - 1.0 / 600.0).abs() < 1e-6);
        let quad = qbar_quadrature(c(100.0, 0.0), 1e-13).unwrap();
        assert!((v - quad).norm() < 1e-12);
        // Asymptotic branch joins the closed form smoothly.
        for phase in [-1.2, -0.3, 0.0, 0.7, 1.5, 2.5, 3.0] {
            let s = Complex64::from_polar(ASYMPTOTIC_RADIUS, phase);
            let direct = closed_form(s, branch_log(s, Sheet::First));
            let (asym, dasym) = asymptotic(s);
            assert!((direct - asym).norm() < 1e-14 * asym.norm().max(1e-300) + 1e-19);
            let dd = closed_form_derivative(s, branch_log(s, Sheet::First));
            assert!((dd - dasym).norm() < 1e-10 * dasym.norm());
        }
    }

    #[test]
    fn quadrature_matches_closed_form() {
        for s in [
            c(1.0, 0.0),
            c(-0.5, 0.0),
            c(0.0, 1.0),
            c(0.3, -2.0),
            c(-2.0, -0.5),
            c(0.01, -0.5),
        ] {
            let quad = qbar_quadrature(s, 1e-12).unwrap();
            assert!((quad - q1(s)).norm() < 1e-10, "{s}: {quad} vs {}", q1(s));
        }
    }

    #[test]
    fn domain_errors() {
        assert!(SheetPoint::first(c(0.0, -1.0)).is_err());
        assert!(SheetPoint::first(c(0.0, 0.0)).is_err());
        assert!(SheetPoint::first(c(-0.0, -3.0)).is_err());
        assert!(SheetPoint::first(c(0.0, 2.0)).is_ok());
        assert!(SheetPoint::second(c(1.0, 0.0)).is_err());
        assert!(SheetPoint::second(c(-1.0, 0.0)).is_err());
        assert!(SheetPoint::second(c(0.0, 0.0)).is_err());
        assert!(SheetPoint::second(c(0.0, -1.0)).is_ok());
        assert!(qbar_quadrature(c(0.0, -0.2), 1e-10).is_err());
        assert!(qbar_quadrature(c(1.0, 0.0), 0.0).is_err());
    }

    #[test]
    fn derivative_against_finite_differences() {
        let h = 1e-5;
        for p in [
            c(2.0, 1.0),
            c(-0.4, 0.7),
            c(0.5, -0.5),
            c(1.1, 0.05),
            c(-1.2, -0.1),
        ] {
            let fd = (q1(p + h) - q1(p - h)) / (2.0 * h);
            let d = qbar_derivative(SheetPoint::first(p).unwrap()).unwrap();
            assert!(
                (fd - d).norm() < 1e-8 * d.norm().max(1e-3),
                "{p}: {fd} vs {d}"
            );
        }
        // Removable point survives differentiation; compare to finite differences.
        let d1 = qbar_derivative(SheetPoint::first(c(1.0, 0.0)).unwrap()).unwrap();
        let fd = (q1(c(1.0 + 1e-4, 0.0)) - q1(c(1.0 - 1e-4, 0.0))) / 2e-4;
        assert!(d1.norm().is_finite());
        assert!((d1 - fd).norm() < 1e-7);
    }

    #[test]
    fn second_sheet_derivative_is_linear_in_sheets() {
        let s = c(-0.3, -0.3);
        let d1 = qbar_derivative(SheetPoint::first(s).unwrap()).unwrap();
        let d2 = qbar_derivative(SheetPoint::second(s).unwrap()).unwrap();
        let h = 1e-6;
        let fd_disc = (discontinuity(s + h) - discontinuity(s - h)) / (2.0 * h);
        assert!((d2 - d1 - fd_disc).norm() < 1e-7 * fd_disc.norm());
        assert!((d2 - d1 - discontinuity_derivative(s)).norm() < 1e-12 * fd_disc.norm());
    }

    #[test]
    fn cut_jump_equals_two_pi_g() {
        for x in [0.05, 0.3, 0.9, 1.5, 4.0] {
            let eps = 1e-9;
            let right = q1(c(eps, -x));
            let left = q1(c(-eps, -x));
            let jump = right - left;
            assert!((jump.re - 2.0 * PI * g(x)).abs() < 1e-6, "x={x}");
            assert!(jump.im.abs() < 1e-6);
            // The second sheet continues the right-hand boundary value.
            let edge = qbar_right_edge(x).unwrap();
            assert!((edge - right).norm() < 1e-7);
            assert!((q2(c(-eps, -x)) - right).norm() < 1e-7);
        }
    }

    #[test]
    fn hilbert_part_of_edge_value() {
        // Re Q̄(0⁺ - i x) = π g(x)
        for x in [0.001, 0.25, 2.0] {
            let e = qbar_right_edge(x).unwrap();
            assert!((e.re - PI * g(x)).abs() < 1e-13, "x={x}");
        }
    }

    #[test]
    fn positive_real_axis_signs() {
        for k in 0..60 {
            let sigma = 10f64.powf(-4.0 + 7.0 * k as f64 / 59.0);
            let v = q1(c(sigma, 0.0));
            assert!(v.re > 0.0 && v.im < 0.0, "σ={sigma}: {v}");
        }
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            #[test]
            fn sheets_differ_by_discontinuity(re in -3.0f64..3.0, im in -3.0f64..3.0) {
                let s = c(re, im);
                prop_assume!(!(re == 0.0 && im <= 0.0));
                prop_assume!((s - 1.0).norm() > 1e-2 && (s + 1.0).norm() > 1e-2 && s.norm() > 1e-6);
                let jump = q2(s) - q1(s);
                let disc = discontinuity(s);
                prop_assert!((jump - disc).norm() <= 1e-12 * disc.norm().max(1.0));
            }

            #[test]
            fn right_half_plane_asymptote(phase in -1.5f64..1.5) {
                let s = Complex64::from_polar(100.0, phase);
                prop_assert!((s * q1(s) - 1.0 / 6.0).norm() < 0.01);
            }
        }
    }
}
