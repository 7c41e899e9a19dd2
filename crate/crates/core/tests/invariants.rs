use num_complex::Complex64;
use proptest::prelude::*;
use zenolab::{
    bromwich_inverse, crossover_time, custom_params, default_abscissa, discretized_evolution,
    find_pole, hydrogen_params, spectral_density, spectral_inverse, timeseries, timeseries_with,
    AtomParams, CutQuadratureSpec, Execution, GridScale, PhysicalConstants, PoleData,
    SurvivalModel, TimeGrid,
};

fn hydrogen() -> (AtomParams, PoleData) {
    let p = hydrogen_params(PhysicalConstants::CODATA, 1).unwrap();
    let pole = find_pole(&p, 1e-16, 50).unwrap();
    (p, pole)
}

fn synthetic() -> (AtomParams, PoleData) {
    let p = custom_params(1.0, 1e-2, 0.25).unwrap();
    let pole = find_pole(&p, 1e-15, 50).unwrap();
    (p, pole)
}

fn wrap_half_turn(x: f64) -> f64 {
    let pi = std::f64::consts::PI;
    x - pi * (x / pi).round()
}

#[test]
fn eta_at_early_times_matches_residue_angle() {
    let (p, pole) = hydrogen();
    let m = SurvivalModel::new(p, pole, CutQuadratureSpec::default()).unwrap();
    let s = m.sample(1e-22).unwrap();
    let (z, zeta) = (pole.residue_modulus, pole.residue_phase);
    let expected = (z * zeta.sin() / (z * zeta.cos() - 1.0)).atan();
    assert!(
        wrap_half_turn(s.eta - expected).abs() < 1e-3,
        "eta {} vs {} mod pi",
        s.eta,
        expected
    );
}

#[test]
fn late_tail_is_a_pure_inverse_quartic() {
    let (p, pole) = hydrogen();
    let spec = CutQuadratureSpec::default();
    let c = crossover_time(&p, &pole, &spec).unwrap();
    let m = SurvivalModel::new(p, pole, spec).unwrap();
    let scale = (p.chi * p.tail_constant()).powi(2);
    for k in [2.5, 4.0, 8.0, 20.0] {
        let t = k * c.t_root;
        let s = m.sample(t).unwrap();
        let wt = p.omega0 * t;
        let r = s.p * wt.powi(4) / scale;
        assert!((r - 1.0).abs() < 1e-3, "t = {t:e}: P (ω₀t)⁴ / (χC)² = {r}");
    }
}

#[test]
fn synthetic_crossover_estimates_agree() {
    let (p, pole) = synthetic();
    let c = crossover_time(&p, &pole, &CutQuadratureSpec::default()).unwrap();
    assert!(c.residual.abs() < 1e-10);
    let d = (c.root_lifetimes / c.equal_lifetimes - 1.0).abs();
    assert!(
        d < 0.05,
        "root {} vs equality {} lifetimes",
        c.root_lifetimes,
        c.equal_lifetimes
    );
}

#[test]
fn oracles_agree_with_each_other() {
    let (p, pole) = synthetic();
    let m = SurvivalModel::new(p, pole, CutQuadratureSpec::default()).unwrap();
    let taus = [0.5, 5.0, 50.0, 400.0];
    let discrete = discretized_evolution(&p, 4000, 20.0, &taus).unwrap();
    for (&tau, d) in taus.iter().zip(&discrete) {
        let y = m.amplitude(tau).unwrap();
        let b = bromwich_inverse(tau, &p, default_abscissa(tau), 1e-10).unwrap();
        let s = spectral_inverse(tau, &p, 1e-8).unwrap();
        assert!(
            (y - b).norm() < 1e-8,
            "τ = {tau}: pole+cut {y} vs Bromwich {b}"
        );
        assert!(
            (b - s).norm() < 1e-4,
            "τ = {tau}: Bromwich {b} vs spectral {s}"
        );
        assert!(
            (b.norm_sqr() - d.norm_sqr()).abs() < 1e-3,
            "τ = {tau}: Bromwich {b} vs discretized {d}"
        );
    }
}

#[test]
fn timeseries_is_deterministic_across_schedules() {
    let (p, pole) = hydrogen();
    let spec = CutQuadratureSpec::default();
    let grid = TimeGrid {
        t_min: 1e-18,
        t_max: 1e-15,
        points: 200,
        scale: GridScale::Log,
    };
    let a = timeseries(&p, &pole, &spec, &grid).unwrap();
    let b = timeseries(&p, &pole, &spec, &grid).unwrap();
    let c = timeseries_with(&p, &pole, &spec, &grid, Execution::Sequential).unwrap();
    assert_eq!(a, b);
    assert_eq!(a, c);
    assert_eq!(a.len(), 200);
    assert!(a.windows(2).all(|w| w[0].t < w[1].t));
    assert!(a.iter().all(|s| s.p > 0.0 && s.p <= 1.0));
}

#[test]
fn two_point_grid_hits_both_endpoints() {
    let (p, pole) = hydrogen();
    for scale in [GridScale::Log, GridScale::Linear] {
        let grid = TimeGrid {
            t_min: 1e-17,
            t_max: 3e-9,
            points: 2,
            scale,
        };
        let s = timeseries(&p, &pole, &CutQuadratureSpec::default(), &grid).unwrap();
        assert_eq!(s.len(), 2);
        assert_eq!(s[0].t, 1e-17);
        assert_eq!(s[1].t, 3e-9);
    }
}

#[test]
fn survival_amplitude_is_one_at_zero_time() {
    let (p, pole) = synthetic();
    let m = SurvivalModel::new(p, pole, CutQuadratureSpec::default()).unwrap();
    let y = m.amplitude(1e-9).unwrap();
    assert!((y - Complex64::new(1.0, 0.0)).norm() < 1e-8);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn spectral_density_is_nonnegative(x in 1e-4f64..40.0, chi in 1e-6f64..1e-2, a in 0.05f64..0.9) {
        let p = custom_params(1.0, chi, a).unwrap();
        let w = spectral_density(x, &p).unwrap();
        prop_assert!(w >= 0.0 && w.is_finite(), "w({x}) = {w}");
    }
}
