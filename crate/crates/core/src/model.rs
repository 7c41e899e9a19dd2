//! Physical constants, hydrogen-like parameters and the atomic form factor.
//!
//! Everything downstream works in units of the cutoff Λ: frequencies become
//! `x = ω/Λ` and times `τ = Λ t`. SI quantities only appear here and at the
//! API boundary of [`crate::survival`].

use crate::error::{Error, Result};

/// Factor by which the inverse square Zeno time grows once other atomic
/// levels and counter-rotating terms are included.
pub const ZENO_CORRECTION: f64 = 1.4210;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PhysicalConstants {
    /// Fine-structure constant.
    pub alpha: f64,
    /// Electron rest frequency m_e c² / ħ in rad/s.
    pub m_e: f64,
}

impl PhysicalConstants {
    pub const CODATA: PhysicalConstants = PhysicalConstants {
        alpha: 7.297_352_569_3e-3,
        m_e: 7.763_44e20,
    };

    pub fn new(alpha: f64, m_e: f64) -> Result<Self> {
        if !(alpha > 0.0 && alpha < 0.01) {
            return Err(Error::InvalidParameter(format!(
                "fine-structure constant must lie in (0, 0.01), got {alpha}"
            )));
        }
        if !(m_e > 0.0 && m_e.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "electron frequency must be positive, got {m_e}"
            )));
        }
        Ok(PhysicalConstants { alpha, m_e })
    }
}

impl Default for PhysicalConstants {
    fn default() -> Self {
        Self::CODATA
    }
}

/// Model parameters. `z == 0` marks a synthetic parameter set.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AtomParams {
    pub z: u32,
    /// Form-factor cutoff Λ in rad/s.
    pub cutoff_lambda: f64,
    /// Dimensionless coupling χ.
    pub chi: f64,
    /// Transition frequency in units of Λ.
    pub a: f64,
    /// Transition frequency ω₀ = a Λ in rad/s.
    pub omega0: f64,
}

/// Hydrogen-like parameters for nuclear charge `z`:
/// Λ = (3/2) Z α m_e, χ = (2/π)(2/3)⁹ Z² α³, a = Z α / 4.
pub fn hydrogen_params(constants: PhysicalConstants, z: u32) -> Result<AtomParams> {
    if z < 1 {
        return Err(Error::InvalidParameter(
            "nuclear charge must be at least 1".into(),
        ));
    }
    let zf = z as f64;
    let alpha = constants.alpha;
    let cutoff_lambda = 1.5 * zf * alpha * constants.m_e;
    let chi = (2.0 / std::f64::consts::PI) * (2.0f64 / 3.0).powi(9) * zf * zf * alpha.powi(3);
    let a = zf * alpha / 4.0;
    Ok(AtomParams {
        z,
        cutoff_lambda,
        chi,
        a,
        omega0: a * cutoff_lambda,
    })
}

/// Synthetic parameters (z = 0) for regimes where the full decay is resolvable.
pub fn custom_params(cutoff_lambda: f64, chi: f64, a: f64) -> Result<AtomParams> {
    if !(cutoff_lambda > 0.0 && cutoff_lambda.is_finite()) {
        return Err(Error::InvalidParameter(format!(
            "cutoff must be positive, got {cutoff_lambda}"
        )));
    }
    if !(chi > 0.0 && chi.is_finite()) {
        return Err(Error::InvalidParameter(format!(
            "coupling must be positive, got {chi}"
        )));
    }
    if !(a > 0.0 && a < 1.0) {
        return Err(Error::InvalidParameter(format!(
            "transition frequency ratio must lie in (0, 1), got {a}"
        )));
    }
    Ok(AtomParams {
        z: 0,
        cutoff_lambda,
        chi,
        a,
        omega0: a * cutoff_lambda,
    })
}

impl AtomParams {
    pub fn is_synthetic(&self) -> bool {
        self.z == 0
    }

    /// Converts seconds to dimensionless time τ = Λ t.
    pub fn tau(&self, t: f64) -> f64 {
        self.cutoff_lambda * t
    }

    pub fn seconds(&self, tau: f64) -> f64 {
        tau / self.cutoff_lambda
    }

    /// Power-law prefactor 𝒞 = (1 − 5πχ / 32a)⁻²; for hydrogen this is
    /// (1 − (5/8) π χ / α)⁻².
    pub fn tail_constant(&self) -> f64 {
        let d = 1.0 - 5.0 * std::f64::consts::PI * self.chi / (32.0 * self.a);
        1.0 / (d * d)
    }
}

/// Zeno time in seconds: τ_Z = √(6/χ) / Λ, optionally divided by √1.4210.
pub fn zeno_time(params: &AtomParams, corrected: bool) -> f64 {
    let tz = (6.0 / params.chi).sqrt() / params.cutoff_lambda;
    if corrected {
        tz / ZENO_CORRECTION.sqrt()
    } else {
        tz
    }
}

/// Dimensionless form factor g(x) = x / (1 + x²)⁴. The coupling density per
/// unit ω is χ Λ g(ω/Λ).
pub fn form_factor_squared(x: f64) -> Result<f64> {
    if !(x >= 0.0) {
        return Err(Error::InvalidParameter(format!(
            "form factor needs a non-negative frequency, got {x}"
        )));
    }
    Ok(g(x))
}

/// Unchecked form factor for hot loops; callers guarantee `x >= 0`.
#[inline]
pub(crate) fn g(x: f64) -> f64 {
    let d = 1.0 + x * x;
    let d2 = d * d;
    x / (d2 * d2)
}
