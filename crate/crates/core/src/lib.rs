//! Exact survival probability of an excited hydrogen-like level decaying
//! through a single continuum channel with form factor x/(1+x²)⁴.
//!
//! The amplitude is split into the residue of the second-sheet decay pole
//! and a non-exponential remainder from the branch cut. Three independent
//! oracles (Bromwich inversion, spectral Fourier integral, discretized
//! continuum) recompute it without that split.
//!
//! ```
//! use zenolab::{find_pole, hydrogen_params, PhysicalConstants};
//!
//! let params = hydrogen_params(PhysicalConstants::CODATA, 1).unwrap();
//! let pole = find_pole(&params, 1e-16, 50).unwrap();
//! assert!((pole.lifetime() / 1.595e-9 - 1.0).abs() < 5e-3);
//! ```

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod model;
pub mod oracle;
pub mod par;
pub mod quad;
pub mod resolvent;
pub mod selfenergy;
pub mod survival;

pub use error::{Error, Result};
pub use model::{
    custom_params, form_factor_squared, hydrogen_params, zeno_time, AtomParams, PhysicalConstants,
    ZENO_CORRECTION,
};
pub use oracle::{
    bromwich_inverse, default_abscissa, discretized_evolution, spectral_inverse, DiscretizedModel,
};
pub use par::Execution;
pub use resolvent::{
    find_pole, level_shift, perturbative_pole, resolvent_value, spectral_density, spectral_moments,
    threshold_poles, PoleData, SpectralMoments, ThresholdPole,
};
pub use selfenergy::{qbar, qbar_derivative, qbar_quadrature, Sheet, SheetPoint};
pub use survival::{
    approx_long, approx_short, crossover_time, survival_point, timeseries, timeseries_with,
    y_cut_term, y_pole_term, Crossover, CutMethod, CutQuadratureSpec, GridScale, SurvivalModel,
    SurvivalSample, TimeGrid,
};
