//! Survival amplitude y(t) = y_pole(t) + y_cut(t), probability P = |y|², the
//! cut envelope h(t) and phase η(t), the short and long time laws, and the
//! crossover from exponential decay to the power-law tail.
//!
//! The cut term is integrated along the negative real axis of the Laplace
//! variable, s = -u, with the stabilized integrand
//!
//! ```text
//! χ u e^{-uτ} / ( D_I(-u) [ D_I(-u) (u² - 1)⁴ - 2πiχ u ] ),   D_I(s) = s + ia + χ Q̄(s)
//! ```
//!
//! Folding the Bromwich path onto that axis also sweeps the two threshold
//! zeros of the second-sheet denominator near s = -1, so their residues are
//! part of the non-exponential remainder returned by [`y_cut_term`].

use std::collections::HashMap;
use std::f64::consts::PI;
use std::sync::{Arc, Mutex, OnceLock};

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::model::{zeno_time, AtomParams};
use crate::par::{self, Execution};
use crate::quad::{adaptive, gauss_laguerre_1, ranges_from_breakpoints, Range, Tolerance};
use crate::resolvent::{denominator, threshold_poles, PoleData, ThresholdPole};
use crate::selfenergy::SheetPoint;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SurvivalSample {
    /// Seconds.
    pub t: f64,
    pub tau: f64,
    pub y: Complex64,
    pub p: f64,
    pub y_pole: Complex64,
    pub y_cut: Complex64,
    pub h: f64,
    pub eta: f64,
    /// |y_pole|²
    pub p_exponential: f64,
    /// |y_cut|²
    pub p_powerlaw: f64,
    /// 2 Re(y_pole ȳ_cut), from the envelope/phase form.
    pub p_interference: f64,
}

impl SurvivalSample {
    /// P from the three-term expansion.
    pub fn p_expanded(&self) -> f64 {
        self.p_exponential + self.p_powerlaw + self.p_interference
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CutMethod {
    /// Fixed generalized Gauss–Laguerre rule in ξ = u τ. Only accurate once
    /// the whole integrand structure sits at ξ ≫ 1, i.e. a τ ≫ 500.
    GaussLaguerre,
    /// Globally adaptive Gauss–Kronrod on [0, 50/τ] with breakpoints at every
    /// scale of the integrand.
    AdaptiveTruncated,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CutQuadratureSpec {
    pub method: CutMethod,
    /// Relative tolerance of the integral.
    pub tolerance: f64,
    /// Number of Gauss–Laguerre nodes; the adaptive rule may use up to
    /// 2000 × `max_nodes` integrand evaluations.
    pub max_nodes: usize,
}

impl CutQuadratureSpec {
    pub fn new(method: CutMethod, tolerance: f64, max_nodes: usize) -> Result<Self> {
        if !(tolerance > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "cut tolerance must be positive, got {tolerance}"
            )));
        }
        if max_nodes < 32 {
            return Err(Error::InvalidParameter(format!(
                "cut quadrature needs at least 32 nodes, got {max_nodes}"
            )));
        }
        Ok(CutQuadratureSpec {
            method,
            tolerance,
            max_nodes,
        })
    }
}

impl Default for CutQuadratureSpec {
    fn default() -> Self {
        CutQuadratureSpec {
            method: CutMethod::AdaptiveTruncated,
            tolerance: 1e-10,
            max_nodes: 128,
        }
    }
}

/// Residue term of the decay pole, R e^{s_pole τ}.
pub fn y_pole_term(tau: f64, pole: &PoleData) -> Complex64 {
    let modulus = pole.residue_modulus * (pole.s_pole.re * tau).exp();
    Complex64::from_polar(modulus, pole.residue_phase + pole.s_pole.im * tau)
}

fn check_tau(tau: f64) -> Result<()> {
    if !(tau > 0.0 && tau.is_finite()) {
        return Err(Error::InvalidParameter(format!(
            "cut contribution needs positive finite τ, got {tau}"
        )));
    }
    Ok(())
}

// Everything in the integrand except the factor χ u e^{-uτ}.
fn cut_kernel(u: f64, params: &AtomParams) -> Result<Complex64> {
    let s = Complex64::new(-u, 0.0);
    let (d, _) = denominator(SheetPoint::first(s)?, params)?;
    let w = u * u - 1.0;
    let w2 = w * w;
    let inner = d * (w2 * w2) - Complex64::new(0.0, 2.0 * PI * params.chi * u);
    Ok(1.0 / (d * inner))
}

/// Nodes and weights.
type Rule = Arc<(Vec<f64>, Vec<f64>)>;

fn laguerre_rule(n: usize) -> Rule {
    static CACHE: OnceLock<Mutex<HashMap<usize, Rule>>> = OnceLock::new();
    let cache = CACHE.get_or_init(|| Mutex::new(HashMap::new()));
    let mut guard = cache.lock().unwrap_or_else(|e| e.into_inner());
    guard
        .entry(n)
        .or_insert_with(|| Arc::new(gauss_laguerre_1(n)))
        .clone()
}

fn cut_breakpoints(tau: f64, params: &AtomParams) -> Vec<f64> {
    let a = params.a;
    let r = (2.0 * PI * params.chi).powf(0.25);
    let mut pts = vec![
        0.0,
        0.25 * a,
        0.5 * a,
        a,
        2.0 * a,
        4.0 * a,
        2.0,
        4.0,
        8.0,
        16.0,
    ];
    for k in [0.5, 1.0, 2.0, 4.0, 8.0] {
        pts.push(1.0 - k * r);
        pts.push(1.0 + k * r);
    }
    pts.push(1.0);
    for k in [1.0, 5.0, 20.0] {
        pts.push(k / tau);
    }
    pts.retain(|&p| p >= 0.0);
    pts
}

/// Real-axis part of the cut integral.
fn cut_integral(tau: f64, params: &AtomParams, spec: &CutQuadratureSpec) -> Result<Complex64> {
    let chi = params.chi;
    match spec.method {
        CutMethod::GaussLaguerre => {
            let rule = laguerre_rule(spec.max_nodes);
            let (nodes, weights) = (&rule.0, &rule.1);
            let mut sum = Complex64::new(0.0, 0.0);
            for (xi, w) in nodes.iter().zip(weights) {
                sum += cut_kernel(xi / tau, params)? * *w;
            }
            Ok(sum * (chi / (tau * tau)))
        }
        CutMethod::AdaptiveTruncated => {
            let upper = 50.0 / tau;
            let mut pts: Vec<f64> = cut_breakpoints(tau, params)
                .into_iter()
                .filter(|&p| p < upper)
                .collect();
            let mut ranges;
            if upper > 32.0 {
                pts.push(32.0);
                ranges = ranges_from_breakpoints(&pts);
                ranges.push(Range::Tail(32.0));
            } else {
                pts.push(upper);
                ranges = ranges_from_breakpoints(&pts);
            }
            let failure = std::cell::Cell::new(None);
            let est = adaptive(
                |u| {
                    if u <= 0.0 {
                        return Complex64::new(0.0, 0.0);
                    }
                    match cut_kernel(u, params) {
                        Ok(k) => k * (chi * u * (-u * tau).exp()),
                        Err(e) => {
                            failure.set(Some(e));
                            Complex64::new(0.0, 0.0)
                        }
                    }
                },
                &ranges,
                Tolerance::new(1e-300, spec.tolerance).with_budget(2000 * spec.max_nodes),
            )?;
            if let Some(e) = failure.into_inner() {
                return Err(e);
            }
            Ok(est.value)
        }
    }
}

fn threshold_sum(tau: f64, thresholds: &[ThresholdPole]) -> Complex64 {
    thresholds
        .iter()
        .map(|p| p.residue * (p.s * tau).exp())
        .sum()
}

/// Non-exponential part of the amplitude at dimensionless time τ > 0: the
/// real-axis cut integral plus the threshold residues.
pub fn y_cut_term(tau: f64, params: &AtomParams, spec: &CutQuadratureSpec) -> Result<Complex64> {
    check_tau(tau)?;
    let pole = crate::resolvent::find_pole(params, 1e-14 * params.a, 100)?;
    let thresholds = threshold_poles(params, &pole)?;
    Ok(cut_integral(tau, params, spec)? + threshold_sum(tau, &thresholds))
}

/// Parameters, pole data and threshold residues bundled for repeated
/// evaluation of the amplitude.
#[derive(Debug, Clone)]
pub struct SurvivalModel {
    pub params: AtomParams,
    pub pole: PoleData,
    pub thresholds: Vec<ThresholdPole>,
    pub spec: CutQuadratureSpec,
}

impl SurvivalModel {
    pub fn new(params: AtomParams, pole: PoleData, spec: CutQuadratureSpec) -> Result<Self> {
        let thresholds = threshold_poles(&params, &pole)?;
        Ok(SurvivalModel {
            params,
            pole,
            thresholds,
            spec,
        })
    }

    pub fn y_pole(&self, tau: f64) -> Complex64 {
        y_pole_term(tau, &self.pole)
    }

    pub fn y_cut(&self, tau: f64) -> Result<Complex64> {
        check_tau(tau)?;
        Ok(cut_integral(tau, &self.params, &self.spec)? + threshold_sum(tau, &self.thresholds))
    }

    /// Full amplitude at dimensionless time.
    pub fn amplitude(&self, tau: f64) -> Result<Complex64> {
        Ok(self.y_pole(tau) + self.y_cut(tau)?)
    }

    pub fn sample(&self, t: f64) -> Result<SurvivalSample> {
        if !(t > 0.0 && t.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "survival time must be positive, got {t}"
            )));
        }
        let tau = self.params.tau(t);
        let y_cut = self.y_cut(tau).map_err(|e| Error::AtTime {
            t,
            source: Box::new(e),
        })?;
        Ok(assemble(t, tau, &self.params, &self.pole, y_cut))
    }
}

fn assemble(
    t: f64,
    tau: f64,
    params: &AtomParams,
    pole: &PoleData,
    y_cut: Complex64,
) -> SurvivalSample {
    let decay = pole.residue_modulus * (pole.s_pole.re * tau).exp();
    let pole_phase = pole.residue_phase + pole.s_pole.im * tau;
    let y_pole = Complex64::from_polar(decay, pole_phase);
    let y = y_pole + y_cut;
    let envelope = y_cut.norm();
    let eta = (-y_cut).arg();
    let scale = params.chi * params.tail_constant();
    let wt = params.a * tau;
    SurvivalSample {
        t,
        tau,
        y,
        p: y.norm_sqr(),
        y_pole,
        y_cut,
        h: envelope * wt * wt / scale,
        eta,
        p_exponential: decay * decay,
        p_powerlaw: envelope * envelope,
        p_interference: -2.0 * decay * envelope * (pole_phase - eta).cos(),
    }
}

pub fn survival_point(
    t: f64,
    params: &AtomParams,
    pole: &PoleData,
    spec: &CutQuadratureSpec,
) -> Result<SurvivalSample> {
    SurvivalModel::new(*params, *pole, *spec)?.sample(t)
}

/// Quadratic short-time law 1 - (t/τ_Z)², clamped at zero.
pub fn approx_short(t: f64, params: &AtomParams) -> f64 {
    let r = t / zeno_time(params, false);
    (1.0 - r * r).max(0.0)
}

/// Long-time law: exponential, t⁻⁴ tail, and their interference.
pub fn approx_long(t: f64, params: &AtomParams, pole: &PoleData) -> f64 {
    let tau = params.tau(t);
    let z = pole.residue_modulus;
    let c = params.tail_constant();
    let wt = params.a * tau;
    let tail = params.chi * c / (wt * wt);
    let decay = (pole.s_pole.re * tau).exp();
    let phase = -pole.s_pole.im * tau - pole.residue_phase;
    z * z * decay * decay + tail * tail - 2.0 * z * tail * decay * phase.cos()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Crossover {
    /// Root of 2 ln(ω₀t) - γt/2 = ln χ, seconds.
    pub t_root: f64,
    pub root_lifetimes: f64,
    /// Residual of the transcendental equation at the root.
    pub residual: f64,
    /// Time where |y_pole| = |y_cut|, seconds.
    pub t_equal: f64,
    pub equal_lifetimes: f64,
}

/// Exponential to power-law crossover, from the transcendental estimate and
/// from the direct equality of the two amplitude moduli, both searched on
/// [10, 10⁴] lifetimes.
pub fn crossover_time(
    params: &AtomParams,
    pole: &PoleData,
    spec: &CutQuadratureSpec,
) -> Result<Crossover> {
    let (lo, hi) = (10.0, 1e4);
    let w = params.omega0 / pole.gamma;
    let ln_chi = params.chi.ln();
    // In lifetimes L = γ t.
    let f = |l: f64| 2.0 * (w * l).ln() - 0.5 * l - ln_chi;
    let df = |l: f64| 2.0 / l - 0.5;
    let (mut a, mut b) = (lo, hi);
    let (fa, fb) = (f(a), f(b));
    if fa.signum() == fb.signum() {
        return Err(Error::Bracket {
            what: "2 ln(ω₀t) - γt/2 - ln χ",
            lo: lo / pole.gamma,
            hi: hi / pole.gamma,
        });
    }
    let a_positive = fa > 0.0;
    let mut l = 0.5 * (a + b);
    let mut residual = f(l);
    for _ in 0..200 {
        residual = f(l);
        if residual.abs() < 1e-13 {
            break;
        }
        if (residual > 0.0) == a_positive {
            a = l;
        } else {
            b = l;
        }
        let newton = l - residual / df(l);
        l = if newton > a.min(b) && newton < a.max(b) {
            newton
        } else {
            0.5 * (a + b)
        };
    }
    if residual.abs() >= 1e-10 {
        return Err(Error::NoConvergence {
            what: "crossover equation",
            iterations: 200,
            residual: residual.abs(),
        });
    }
    let root = l;

    let model = SurvivalModel::new(*params, *pole, *spec)?;
    let log_ratio = |l: f64| -> Result<f64> {
        let tau = params.tau(l / pole.gamma);
        let ln_pole = pole.residue_modulus.ln() + pole.s_pole.re * tau;
        Ok(ln_pole - model.y_cut(tau)?.norm().ln())
    };
    let (mut a, mut b) = (lo, hi);
    let ga = log_ratio(a)?;
    let gb = log_ratio(b)?;
    if ga.signum() == gb.signum() {
        return Err(Error::Bracket {
            what: "ln|y_pole| - ln|y_cut|",
            lo: lo / pole.gamma,
            hi: hi / pole.gamma,
        });
    }
    let a_positive = ga > 0.0;
    while (b - a) > 1e-12 * b {
        let mid = 0.5 * (a + b);
        if (log_ratio(mid)? > 0.0) == a_positive {
            a = mid;
        } else {
            b = mid;
        }
    }
    let equal = 0.5 * (a + b);
    Ok(Crossover {
        t_root: root / pole.gamma,
        root_lifetimes: root,
        residual: residual.abs(),
        t_equal: equal / pole.gamma,
        equal_lifetimes: equal,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GridScale {
    Log,
    Linear,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TimeGrid {
    pub t_min: f64,
    pub t_max: f64,
    pub points: usize,
    pub scale: GridScale,
}

impl TimeGrid {
    /// Grid times in seconds, endpoints exact.
    pub fn times(&self) -> Result<Vec<f64>> {
        if !(self.t_min > 0.0 && self.t_min.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "t_min must be positive, got {}",
                self.t_min
            )));
        }
        if !(self.t_max > self.t_min && self.t_max.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "t_max must exceed t_min, got {} <= {}",
                self.t_max, self.t_min
            )));
        }
        if self.points < 2 {
            return Err(Error::InvalidParameter(format!(
                "a time grid needs at least 2 points, got {}",
                self.points
            )));
        }
        let n = self.points - 1;
        let mut ts: Vec<f64> = (0..=n)
            .map(|k| {
                let f = k as f64 / n as f64;
                match self.scale {
                    GridScale::Log => self.t_min * (self.t_max / self.t_min).powf(f),
                    GridScale::Linear => self.t_min + (self.t_max - self.t_min) * f,
                }
            })
            .collect();
        ts[0] = self.t_min;
        ts[n] = self.t_max;
        Ok(ts)
    }
}

/// Samples the survival amplitude on a time grid with the default schedule.
pub fn timeseries(
    params: &AtomParams,
    pole: &PoleData,
    spec: &CutQuadratureSpec,
    grid: &TimeGrid,
) -> Result<Vec<SurvivalSample>> {
    timeseries_with(params, pole, spec, grid, Execution::default())
}

pub fn timeseries_with(
    params: &AtomParams,
    pole: &PoleData,
    spec: &CutQuadratureSpec,
    grid: &TimeGrid,
    exec: Execution,
) -> Result<Vec<SurvivalSample>> {
    let times = grid.times()?;
    let model = SurvivalModel::new(*params, *pole, *spec)?;
    par::map(exec, &times, |&t| model.sample(t))
        .into_iter()
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{custom_params, hydrogen_params, PhysicalConstants};
    use crate::resolvent::find_pole;

    fn hydrogen() -> SurvivalModel {
        let p = hydrogen_params(PhysicalConstants::CODATA, 1).unwrap();
        let pole = find_pole(&p, 1e-16, 50).unwrap();
        SurvivalModel::new(p, pole, CutQuadratureSpec::default()).unwrap()
    }

    fn synthetic() -> SurvivalModel {
        let p = custom_params(1.0, 1e-2, 0.25).unwrap();
        let pole = find_pole(&p, 1e-15, 50).unwrap();
        SurvivalModel::new(p, pole, CutQuadratureSpec::default()).unwrap()
    }

    #[test]
    fn spec_validation() {
        assert!(CutQuadratureSpec::new(CutMethod::GaussLaguerre, 1e-10, 31).is_err());
        assert!(CutQuadratureSpec::new(CutMethod::GaussLaguerre, 0.0, 64).is_err());
        assert!(CutQuadratureSpec::new(CutMethod::AdaptiveTruncated, 1e-8, 32).is_ok());
    }

    #[test]
    fn pole_term_values() {
        let m = hydrogen();
        let y0 = m.y_pole(0.0);
        assert!((y0 - m.pole.residue()).norm() < 1e-15);
        let lifetime_tau = m.params.tau(m.pole.lifetime());
        let y1 = m.y_pole(lifetime_tau);
        assert!((y1.norm() / (m.pole.residue_modulus * (-0.5f64).exp()) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn amplitude_starts_at_one() {
        for m in [hydrogen(), synthetic()] {
            let y = m.amplitude(1e-9).unwrap();
            assert!((y - 1.0).norm() < 1e-5, "{y}");
        }
    }

    #[test]
    fn laguerre_and_adaptive_routes_agree_at_late_times() {
        let m = hydrogen();
        let gl = CutQuadratureSpec::new(CutMethod::GaussLaguerre, 1e-12, 128).unwrap();
        let ad = CutQuadratureSpec::new(CutMethod::AdaptiveTruncated, 1e-12, 128).unwrap();
        for tau in [1e7, 1e9, 1e11] {
            let a = cut_integral(tau, &m.params, &ad).unwrap();
            let b = cut_integral(tau, &m.params, &gl).unwrap();
            assert!((a - b).norm() <= 1e-9 * a.norm(), "τ={tau}: {a} vs {b}");
        }
    }

    #[test]
    fn late_cut_follows_inverse_square_law() {
        let m = hydrogen();
        let tau = 1e9;
        let y = m.y_cut(tau).unwrap();
        let wt = m.params.a * tau;
        let expected = -m.params.chi * m.params.tail_constant() / (wt * wt);
        assert!((y / expected - 1.0).norm() < 1e-3, "{y} vs {expected}");
    }

    #[test]
    fn free_cut_function_stand_alone() {
        let m = synthetic();
        let spec = CutQuadratureSpec::default();
        let a = y_cut_term(7.0, &m.params, &spec).unwrap();
        let b = m.y_cut(7.0).unwrap();
        assert!((a - b).norm() < 1e-15);
        assert!(y_cut_term(0.0, &m.params, &spec).is_err());
    }

    #[test]
    fn sample_identities() {
        let m = hydrogen();
        for t in [1e-18, 3e-17, 1e-15, 1e-12, 5e-9] {
            let s = m.sample(t).unwrap();
            assert!((s.y - s.y_pole - s.y_cut).norm() < 1e-15);
            assert!((s.p - s.y.norm_sqr()).abs() < 1e-15);
            let scale = s.p.max(s.p_exponential + s.p_powerlaw);
            assert!((s.p - s.p_expanded()).abs() <= 1e-10 * scale, "t={t}");
            assert!(s.p <= 1.0 + 1e-6 && s.p >= 0.0);
            let back = s.h * m.params.chi * m.params.tail_constant() / (m.params.a * s.tau).powi(2);
            assert!((back - s.y_cut.norm()).abs() <= 1e-14 * s.y_cut.norm());
        }
        assert!(m.sample(0.0).is_err());
    }

    #[test]
    fn short_time_curvature_synthetic() {
        // P is even in t, so (1 - P(τ))/τ² → χ/6 without a one-sided bias.
        let p = custom_params(1.0, 1e-2, 0.25).unwrap();
        let pole = find_pole(&p, 1e-15, 50).unwrap();
        let spec = CutQuadratureSpec::new(CutMethod::AdaptiveTruncated, 1e-14, 512).unwrap();
        let m = SurvivalModel::new(p, pole, spec).unwrap();
        let h = 1e-2;
        let curvature = (1.0 - m.amplitude(h).unwrap().norm_sqr()) / (h * h);
        assert!(
            (curvature / (p.chi / 6.0) - 1.0).abs() < 0.01,
            "{curvature}"
        );
    }

    #[test]
    fn short_law_values() {
        let p = hydrogen_params(PhysicalConstants::CODATA, 1).unwrap();
        let tz = zeno_time(&p, false);
        assert_eq!(approx_short(0.0, &p), 1.0);
        assert!((approx_short(0.1 * tz, &p) - 0.99).abs() < 1e-15);
        assert_eq!(approx_short(2.0 * tz, &p), 0.0);
    }

    #[test]
    fn long_law_limits() {
        let m = hydrogen();
        let t = 1e-5;
        let wt = m.params.omega0 * t;
        let tail = (m.params.chi * m.params.tail_constant() / (wt * wt)).powi(2);
        assert!((approx_long(t, &m.params, &m.pole) / tail - 1.0).abs() < 1e-12);
    }

    #[test]
    fn grid_shapes() {
        let g = TimeGrid {
            t_min: 1e-18,
            t_max: 1e-15,
            points: 2,
            scale: GridScale::Log,
        };
        assert_eq!(g.times().unwrap(), vec![1e-18, 1e-15]);
        let g = TimeGrid {
            t_min: 1.0,
            t_max: 3.0,
            points: 3,
            scale: GridScale::Linear,
        };
        assert_eq!(g.times().unwrap(), vec![1.0, 2.0, 3.0]);
        let g = TimeGrid {
            t_min: 0.0,
            t_max: 3.0,
            points: 3,
            scale: GridScale::Linear,
        };
        assert!(g.times().is_err());
        let g = TimeGrid {
            t_min: 1.0,
            t_max: 3.0,
            points: 1,
            scale: GridScale::Log,
        };
        assert!(g.times().is_err());
    }

    #[test]
    fn schedules_give_identical_series() {
        let m = hydrogen();
        let grid = TimeGrid {
            t_min: 1e-18,
            t_max: 1e-15,
            points: 24,
            scale: GridScale::Log,
        };
        let a = timeseries_with(&m.params, &m.pole, &m.spec, &grid, Execution::Sequential).unwrap();
        let b = timeseries_with(&m.params, &m.pole, &m.spec, &grid, Execution::Parallel).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.len(), 24);
    }
}
