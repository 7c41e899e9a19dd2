//! Resolvent ỹ(s) = 1 / (s + i a + χ Q̄(s)), its second-sheet poles, the
//! leading-order rate and shift, and the spectral density on the cut.

use std::f64::consts::PI;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::model::{g, AtomParams};
use crate::quad::{adaptive_real, principal_value, ranges_from_breakpoints, Range, Tolerance};
use crate::selfenergy::{qbar, qbar_right_edge, qbar_with_derivative, SheetPoint};

const I: Complex64 = Complex64::new(0.0, 1.0);

/// Below this modulus the resolvent denominator counts as a pole.
pub const DIVERGENCE_GUARD: f64 = 1e-13;

/// Second-sheet pole and its residue. Rates and shifts are in rad/s.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PoleData {
    pub s_pole: Complex64,
    pub gamma: f64,
    pub delta_e: f64,
    /// 𝒵
    pub residue_modulus: f64,
    /// ζ
    pub residue_phase: f64,
}

impl PoleData {
    fn from_pole(s_pole: Complex64, residue: Complex64, params: &AtomParams) -> PoleData {
        PoleData {
            s_pole,
            gamma: -2.0 * params.cutoff_lambda * s_pole.re,
            delta_e: params.cutoff_lambda * (s_pole.im + params.a),
            residue_modulus: residue.norm(),
            residue_phase: residue.arg(),
        }
    }

    /// 𝒵 e^{iζ}
    pub fn residue(&self) -> Complex64 {
        Complex64::from_polar(self.residue_modulus, self.residue_phase)
    }

    /// Lifetime 1/γ in seconds.
    pub fn lifetime(&self) -> f64 {
        1.0 / self.gamma
    }
}

/// Zero of the second-sheet denominator near the threshold s = -1, swept by
/// the contour when the Bromwich path is folded onto the negative real axis.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ThresholdPole {
    pub s: Complex64,
    pub residue: Complex64,
}

/// s + i a + χ Q̄(s) and its derivative.
pub(crate) fn denominator(p: SheetPoint, params: &AtomParams) -> Result<(Complex64, Complex64)> {
    let (q, dq) = qbar_with_derivative(p)?;
    Ok((p.s + I * params.a + params.chi * q, 1.0 + params.chi * dq))
}

pub fn resolvent_value(p: SheetPoint, params: &AtomParams) -> Result<Complex64> {
    let d = p.s + I * params.a + params.chi * qbar(p)?;
    if d.norm() < DIVERGENCE_GUARD {
        return Err(Error::Divergent {
            magnitude: 1.0 / d.norm(),
        });
    }
    Ok(1.0 / d)
}

fn near_singular_point(s: Complex64, params: &AtomParams) -> bool {
    (s - 1.0).norm() < 0.05 || (s + 1.0).norm() < 0.05 || s.norm() < 1e-3 * params.a
}

/// Newton search for the decay pole on the second sheet, seeded at -i a.
pub fn find_pole(params: &AtomParams, tol: f64, max_iter: usize) -> Result<PoleData> {
    if !(tol > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "pole tolerance must be positive, got {tol}"
        )));
    }
    let mut s = Complex64::new(0.0, -params.a);
    let mut residual = f64::INFINITY;
    for iteration in 0..max_iter {
        let (f, df) = denominator(SheetPoint::second(s)?, params)?;
        residual = f.norm();
        log::trace!("pole iteration {iteration}: s = {s}, |f| = {residual:e}");
        if residual < tol {
            let residue = 1.0 / df;
            return Ok(PoleData::from_pole(s, residue, params));
        }
        let mut step = f / df;
        // Stay in the closed left half-plane, where the second-sheet
        // continuation is the one that hides the pole.
        while (s - step).re > 0.0 {
            step *= 0.5;
        }
        s -= step;
        if !(s.re.is_finite() && s.im.is_finite()) || near_singular_point(s, params) {
            return Err(Error::domain("the pole search", s));
        }
    }
    Err(Error::NoConvergence {
        what: "second-sheet pole",
        iterations: max_iter,
        residual,
    })
}

/// PV ∫₀^∞ g(x') / (x' - x) dx', the Hilbert transform of the form factor,
/// by symmetric excision around `x`.
pub fn level_shift(x: f64) -> Result<f64> {
    if !(x > 0.0 && x.is_finite()) {
        return Err(Error::InvalidParameter(format!(
            "level shift needs a positive frequency, got {x}"
        )));
    }
    let d1 = (1e-3f64).min(0.5 * x);
    principal_value(
        g,
        x,
        0.0,
        None,
        (d1, 0.1 * d1),
        &[0.5, 1.0, 2.0, 4.0, 8.0],
        Tolerance::new(1e-14, 1e-13),
    )
}

/// Leading-order pole: golden-rule rate and second-order shift.
pub fn perturbative_pole(params: &AtomParams) -> Result<PoleData> {
    let a = params.a;
    let gamma = 2.0 * PI * params.chi * params.cutoff_lambda * g(a);
    let delta_e = params.chi * params.cutoff_lambda * level_shift(a)?;
    let edge = SheetPoint::first(Complex64::new(1e-9, -a))?;
    let s_pole = Complex64::new(0.0, -a) - params.chi * qbar(edge)?;
    Ok(PoleData {
        s_pole,
        gamma,
        delta_e,
        residue_modulus: 1.0,
        residue_phase: 0.0,
    })
}

// G(s) = D_I(s) (s² - 1)⁴ + 2πiχ s vanishes exactly where D_II does, without
// the fourth-order pole of the second-sheet continuation at s = ±1.
fn threshold_function(s: Complex64, params: &AtomParams) -> Result<(Complex64, Complex64)> {
    let (d, dd) = denominator(SheetPoint::first(s)?, params)?;
    let w = s * s - 1.0;
    let w3 = w * w * w;
    let w4 = w3 * w;
    let two_pi_i_chi = 2.0 * PI * I * params.chi;
    Ok((
        d * w4 + two_pi_i_chi * s,
        dd * w4 + d * 8.0 * s * w3 + two_pi_i_chi,
    ))
}

/// Second-sheet zeros of the denominator in the third quadrant near s = -1,
/// other than the decay pole itself.
pub fn threshold_poles(params: &AtomParams, pole: &PoleData) -> Result<Vec<ThresholdPole>> {
    let edge = SheetPoint::first(Complex64::new(-1.0 - 1e-8, 0.0))?;
    let (d_edge, _) = denominator(edge, params)?;
    let base = (2.0 * PI * I * params.chi / d_edge).powf(0.25);
    let mut found: Vec<ThresholdPole> = Vec::new();
    for k in 0..4 {
        let w = base * I.powi(k);
        let mut s = -(1.0 + w).sqrt();
        let mut converged = false;
        for _ in 0..100 {
            if s.re >= 0.0 {
                break;
            }
            let (f, df) = threshold_function(s, params)?;
            let step = f / df;
            s -= step;
            if step.norm() < 1e-15 * s.norm() {
                converged = true;
                break;
            }
        }
        if !converged || !(s.re < 0.0 && s.im < 0.0) {
            continue;
        }
        if (s - pole.s_pole).norm() < 1e-8 * (1.0 + pole.s_pole.norm()) {
            continue;
        }
        if found.iter().any(|p| (p.s - s).norm() < 1e-10) {
            continue;
        }
        let (_, dg) = threshold_function(s, params)?;
        let w = s * s - 1.0;
        let w2 = w * w;
        found.push(ThresholdPole {
            s,
            residue: w2 * w2 / dg,
        });
    }
    found.sort_by(|a, b| a.s.re.total_cmp(&b.s.re));
    Ok(found)
}

/// Spectral density of the excited state on the continuum,
/// w(x) = χ g(x) / [(x - a + χ Δ(x))² + π² χ² g(x)²], with Δ the level shift
/// from [`level_shift`].
pub fn spectral_density(x: f64, params: &AtomParams) -> Result<f64> {
    let shift = level_shift(x)?;
    Ok(density_with_shift(x, shift, params))
}

fn density_with_shift(x: f64, shift: f64, params: &AtomParams) -> f64 {
    let chi = params.chi;
    let gx = g(x);
    let detune = x - params.a + chi * shift;
    let width = PI * chi * gx;
    chi * gx / (detune * detune + width * width)
}

/// Same density with Δ(x) = -Im Q̄(0⁺ - i x) from the closed form. Much
/// cheaper than the principal-value route; used on dense grids.
pub(crate) fn spectral_density_closed(x: f64, params: &AtomParams) -> Result<f64> {
    let shift = -qbar_right_edge(x)?.im;
    Ok(density_with_shift(x, shift, params))
}

/// Centre of the resonance x_r = a - χ Δ(a) and its half-width π χ g(a).
pub fn resonance(params: &AtomParams) -> Result<(f64, f64)> {
    let shift = -qbar_right_edge(params.a)?.im;
    Ok((params.a - params.chi * shift, PI * params.chi * g(params.a)))
}

/// Breakpoints resolving the resonance and the smooth background of w.
pub(crate) fn spectral_breakpoints(params: &AtomParams) -> Result<Vec<f64>> {
    let (centre, width) = resonance(params)?;
    let mut pts = vec![
        0.0,
        0.5 * params.a,
        2.0 * params.a,
        0.5,
        1.0,
        2.0,
        4.0,
        8.0,
        16.0,
    ];
    let mut k = 0.25 * width;
    while k < 0.5 * centre {
        pts.push(centre - k);
        pts.push(centre + k);
        k *= 3.0;
    }
    pts.push(centre);
    Ok(pts)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpectralMoments {
    /// ∫ w
    pub norm: f64,
    /// ∫ x w
    pub mean: f64,
    /// ∫ (x - a)² w
    pub variance: f64,
}

/// Zeroth, first and centred second moment of the spectral density, with the
/// shift evaluated by principal-value quadrature.
pub fn spectral_moments(params: &AtomParams, tol: f64) -> Result<SpectralMoments> {
    let pts = spectral_breakpoints(params)?;
    let mut ranges = ranges_from_breakpoints(&pts);
    ranges.push(Range::Tail(16.0));
    let tol = Tolerance::new(tol, 0.0).with_budget(2_000_000);
    let a = params.a;
    let moment = |k: i32| -> Result<f64> {
        let failure = std::cell::Cell::new(None);
        let (v, _) = adaptive_real(
            |x| {
                if x <= 0.0 {
                    return 0.0;
                }
                match spectral_density(x, params) {
                    Ok(w) => w * (x - if k == 2 { a } else { 0.0 }).powi(k),
                    Err(e) => {
                        failure.set(Some(e));
                        0.0
                    }
                }
            },
            &ranges,
            tol,
        )?;
        match failure.into_inner() {
            Some(e) => Err(e),
            None => Ok(v),
        }
    };
    Ok(SpectralMoments {
        norm: moment(0)?,
        mean: moment(1)?,
        variance: moment(2)?,
    })
}
