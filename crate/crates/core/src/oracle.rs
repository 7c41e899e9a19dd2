//! Brute-force routes to y(τ) that avoid the pole/cut decomposition:
//! numerical Bromwich inversion, the Fourier integral of the spectral
//! density, and exact evolution of a discretized continuum.

use std::f64::consts::PI;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::model::{g, AtomParams};
use crate::par::{self, Execution};
use crate::quad::{adaptive, gauss_legendre, ranges_from_breakpoints, Range, Tolerance};
use crate::resolvent::{resonance, spectral_breakpoints, spectral_density_closed};
use crate::selfenergy::{qbar, SheetPoint};

const I: Complex64 = Complex64::new(0.0, 1.0);

/// Abscissa min(1, 1/τ): keeps the e^{cτ} amplification of the line
/// integral at most e.
pub fn default_abscissa(tau: f64) -> f64 {
    (1.0f64).min(1.0 / tau)
}

// Laplace inverse of s / (s² + i a s + χ/6), the resolvent with Q̄ replaced
// by its leading 1/(6s) behaviour.
fn rational_inverse(tau: f64, params: &AtomParams) -> Complex64 {
    let a = params.a;
    let root = (a * a + 2.0 * params.chi / 3.0).sqrt();
    let sp = Complex64::new(0.0, 0.5 * (root - a));
    let sm = Complex64::new(0.0, -0.5 * (root + a));
    sp / (sp - sm) * (sp * tau).exp() + sm / (sm - sp) * (sm * tau).exp()
}

/// (1 / 2πi) ∫ e^{sτ} ỹ(s) ds along Re s = `abscissa`, to absolute accuracy
/// `tol`.
pub fn bromwich_inverse(
    tau: f64,
    params: &AtomParams,
    abscissa: f64,
    tol: f64,
) -> Result<Complex64> {
    if !(tau > 0.0 && tau.is_finite()) {
        return Err(Error::InvalidParameter(format!(
            "Bromwich inversion needs τ > 0, got {tau}"
        )));
    }
    if !(abscissa > 0.0) || !(tol > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "Bromwich inversion needs positive abscissa and tolerance, got {abscissa}, {tol}"
        )));
    }
    let a = params.a;
    let chi = params.chi;
    let c = abscissa;
    let growth = (c * tau).exp();
    // Remainder after subtracting the rational part decays like χ/|s|⁴.
    let width = (10.0f64).max((chi * growth / (10.0 * tol)).cbrt());
    let remainder = |omega: f64| -> Result<Complex64> {
        let s = Complex64::new(c, omega);
        let q = qbar(SheetPoint::first(s)?)?;
        let d = s + I * a + chi * q;
        let da = s + I * a + chi / (6.0 * s);
        Ok(chi * (1.0 / (6.0 * s) - q) / (d * da))
    };
    let mut pts = vec![-width, width, 0.0, -a, -1.0, 1.0];
    let mut k = c;
    while k < width {
        for centre in [0.0, -a] {
            pts.push(centre - k);
            pts.push(centre + k);
        }
        k *= 4.0;
    }
    pts.retain(|p| p.abs() <= width);
    let ranges = ranges_from_breakpoints(&pts);
    let failure = std::cell::Cell::new(None);
    let est = adaptive(
        |omega| match remainder(omega) {
            Ok(r) => r * Complex64::from_polar(1.0, omega * tau),
            Err(e) => {
                failure.set(Some(e));
                Complex64::new(0.0, 0.0)
            }
        },
        &ranges,
        Tolerance::new(PI * tol / growth, 0.0).with_budget(20_000_000),
    )?;
    if let Some(e) = failure.into_inner() {
        return Err(e);
    }
    Ok(rational_inverse(tau, params) + est.value * (growth / (2.0 * PI)))
}

/// ∫₀^∞ w(x) e^{-ixτ} dx, with the resonance window a ± 50 Γ̄ resolved
/// separately from the smooth background.
pub fn spectral_inverse(tau: f64, params: &AtomParams, tol: f64) -> Result<Complex64> {
    if !(tau >= 0.0 && tau.is_finite()) {
        return Err(Error::InvalidParameter(format!(
            "spectral inversion needs τ ≥ 0, got {tau}"
        )));
    }
    if !(tol > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "tolerance must be positive, got {tol}"
        )));
    }
    let (centre, width) = resonance(params)?;
    let mut pts = spectral_breakpoints(params)?;
    pts.push(centre - 50.0 * width);
    pts.push(centre + 50.0 * width);
    pts.push(32.0);
    pts.retain(|&p| p >= 0.0);
    let mut ranges = ranges_from_breakpoints(&pts);
    ranges.push(Range::Tail(32.0));
    let failure = std::cell::Cell::new(None);
    let est = adaptive(
        |x| {
            if x <= 0.0 {
                return Complex64::new(0.0, 0.0);
            }
            match spectral_density_closed(x, params) {
                Ok(w) => Complex64::from_polar(w, -x * tau),
                Err(e) => {
                    failure.set(Some(e));
                    Complex64::new(0.0, 0.0)
                }
            }
        },
        &ranges,
        Tolerance::new(tol, 0.0).with_budget(20_000_000),
    )?;
    if let Some(e) = failure.into_inner() {
        return Err(e);
    }
    Ok(est.value)
}

/// Excited level coupled to `n_modes` continuum modes on Gauss–Legendre
/// nodes in [0, x_max], diagonalized through its secular equation.
#[derive(Debug, Clone)]
pub struct DiscretizedModel {
    pub n_modes: usize,
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
    pub couplings: Vec<f64>,
    pub excited_energy: f64,
    /// Eigenvalues, ascending.
    pub energies: Vec<f64>,
    /// |⟨excited|v_m⟩|² for each eigenvalue.
    pub overlaps: Vec<f64>,
    // Eigenvalue m is nodes[anchor[m]] + offset[m], kept split so that
    // distances to the nearest node survive rounding.
    anchor: Vec<usize>,
    offset: Vec<f64>,
}

impl DiscretizedModel {
    pub fn new(params: &AtomParams, n_modes: usize, x_max: f64) -> Result<Self> {
        Self::new_with(params, n_modes, x_max, Execution::default())
    }

    pub fn new_with(
        params: &AtomParams,
        n_modes: usize,
        x_max: f64,
        exec: Execution,
    ) -> Result<Self> {
        if n_modes < 100 {
            return Err(Error::InvalidParameter(format!(
                "discretization needs at least 100 modes, got {n_modes}"
            )));
        }
        if !(x_max >= 10.0 && x_max.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "discretization needs x_max ≥ 10, got {x_max}"
            )));
        }
        let (t, w) = gauss_legendre(n_modes);
        let nodes: Vec<f64> = t.iter().map(|t| 0.5 * x_max * (t + 1.0)).collect();
        let weights: Vec<f64> = w.iter().map(|w| 0.5 * x_max * w).collect();
        let couplings: Vec<f64> = nodes
            .iter()
            .zip(&weights)
            .map(|(&x, &w)| (params.chi * g(x) * w).sqrt())
            .collect();
        let a = params.a;
        warn_on_resolution(&nodes, params);

        let g2: Vec<f64> = couplings.iter().map(|c| c * c).collect();
        let roots = par::map_range(exec, n_modes + 1, |k| secular_root(k, &nodes, &g2, a));
        let mut energies = Vec::with_capacity(n_modes + 1);
        let mut overlaps = Vec::with_capacity(n_modes + 1);
        let mut anchor = Vec::with_capacity(n_modes + 1);
        let mut offset = Vec::with_capacity(n_modes + 1);
        for r in roots {
            let root = r?;
            energies.push(nodes[root.anchor] + root.offset);
            overlaps.push(root.overlap);
            anchor.push(root.anchor);
            offset.push(root.offset);
        }
        Ok(DiscretizedModel {
            n_modes,
            nodes,
            weights,
            couplings,
            excited_energy: a,
            energies,
            overlaps,
            anchor,
            offset,
        })
    }

    /// Amplitude ⟨excited| e^{-iHτ} |excited⟩.
    pub fn amplitude(&self, tau: f64) -> Complex64 {
        self.energies
            .iter()
            .zip(&self.overlaps)
            .map(|(&e, &o)| Complex64::from_polar(o, -e * tau))
            .sum()
    }

    /// Full state e^{-iHτ}|excited⟩: the excited component followed by the
    /// mode components in node order.
    pub fn state(&self, tau: f64) -> Vec<Complex64> {
        let mut out = vec![self.amplitude(tau)];
        for (x, gi) in self.nodes.iter().zip(&self.couplings) {
            let mut c = Complex64::new(0.0, 0.0);
            for m in 0..self.energies.len() {
                let gap = (self.nodes[self.anchor[m]] - x) + self.offset[m];
                c += Complex64::from_polar(self.overlaps[m] * gi / gap, -self.energies[m] * tau);
            }
            out.push(c);
        }
        out
    }

    /// Σ g_i², the discretized energy variance of the excited state.
    pub fn coupling_sum(&self) -> f64 {
        self.couplings.iter().map(|c| c * c).sum()
    }

    /// Largest node spacing within the resonance, compared with its width.
    pub fn resolves_resonance(&self, params: &AtomParams) -> bool {
        spacing_near(&self.nodes, params.a) <= PI * params.chi * g(params.a)
    }
}

fn spacing_near(nodes: &[f64], x: f64) -> f64 {
    let k = nodes.partition_point(|&n| n < x).clamp(1, nodes.len() - 1);
    nodes[k] - nodes[k - 1]
}

fn warn_on_resolution(nodes: &[f64], params: &AtomParams) {
    let spacing = spacing_near(nodes, params.a);
    let width = PI * params.chi * g(params.a);
    if spacing > width {
        log::warn!(
            "level spacing {spacing:e} near the transition exceeds the resonance width {width:e}; \
             the discretized decay will not be resolved"
        );
    }
}

// Root k of λ - a - Σ g_i² / (λ - x_i) = 0. Root 0 lies below x_0, root n
// above x_{n-1}, root k in (x_{k-1}, x_k). Solved in μ = λ - x_ref with x_ref
// the nearer bracketing node, so that small distances to it stay exact.
struct SecularRoot {
    anchor: usize,
    offset: f64,
    /// Excited-state weight 1 / f'(λ).
    overlap: f64,
}

fn secular_root(k: usize, nodes: &[f64], g2: &[f64], a: f64) -> Result<SecularRoot> {
    let n = nodes.len();
    // Arrow-matrix eigenvalues lie within ‖g‖ of the diagonal range.
    let spread = g2.iter().sum::<f64>().sqrt();
    let (anchor, mut lo, mut hi) = if k == 0 {
        (0, a.min(nodes[0]) - spread - nodes[0], 0.0)
    } else if k == n {
        (n - 1, 0.0, a.max(nodes[n - 1]) + spread - nodes[n - 1])
    } else {
        let half = 0.5 * (nodes[k] - nodes[k - 1]);
        if secular(half, nodes[k - 1], nodes, g2, a).0 > 0.0 {
            (k - 1, 0.0, half)
        } else {
            (k, -half, 0.0)
        }
    };
    let reference = nodes[anchor];
    let done = |offset: f64| {
        let (_, df) = secular(offset, reference, nodes, g2, a);
        SecularRoot {
            anchor,
            offset,
            overlap: 1.0 / df,
        }
    };
    let mut mu = 0.5 * (lo + hi);
    for _ in 0..300 {
        let (f, df) = secular(mu, reference, nodes, g2, a);
        if f == 0.0 {
            return Ok(done(mu));
        }
        if f > 0.0 {
            hi = mu;
        } else {
            lo = mu;
        }
        let newton = mu - f / df;
        let next = if newton > lo && newton < hi {
            newton
        } else {
            0.5 * (lo + hi)
        };
        if (next - mu).abs() <= 2.0 * f64::EPSILON * next.abs() || next == lo || next == hi {
            return Ok(done(next));
        }
        mu = next;
    }
    let (f, _) = secular(mu, reference, nodes, g2, a);
    Err(Error::NoConvergence {
        what: "secular equation",
        iterations: 300,
        residual: f.abs(),
    })
}

fn secular(mu: f64, reference: f64, nodes: &[f64], g2: &[f64], a: f64) -> (f64, f64) {
    let mut f = mu + (reference - a);
    let mut df = 1.0;
    for (x, g2i) in nodes.iter().zip(g2) {
        let r = 1.0 / (mu + (reference - x));
        f -= g2i * r;
        df += g2i * r * r;
    }
    (f, df)
}

/// y(τ_k) for each requested τ from one diagonalization.
pub fn discretized_evolution(
    params: &AtomParams,
    n_modes: usize,
    x_max: f64,
    taus: &[f64],
) -> Result<Vec<Complex64>> {
    let model = DiscretizedModel::new(params, n_modes, x_max)?;
    Ok(par::map(Execution::default(), taus, |&t| {
        model.amplitude(t)
    }))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{custom_params, hydrogen_params, PhysicalConstants};
    use crate::resolvent::find_pole;
    use crate::survival::{CutQuadratureSpec, SurvivalModel};

    fn synthetic() -> AtomParams {
        custom_params(1.0, 1e-2, 0.25).unwrap()
    }

    fn h1() -> AtomParams {
        hydrogen_params(PhysicalConstants::CODATA, 1).unwrap()
    }

    fn decomposition(p: AtomParams) -> SurvivalModel {
        let pole = find_pole(&p, 1e-14 * p.a, 50).unwrap();
        let spec =
            CutQuadratureSpec::new(crate::survival::CutMethod::AdaptiveTruncated, 1e-12, 256)
                .unwrap();
        SurvivalModel::new(p, pole, spec).unwrap()
    }

    #[test]
    fn bromwich_free_evolution() {
        let p = AtomParams {
            chi: 0.0,
            ..synthetic()
        };
        for tau in [0.5, 3.0, 40.0] {
            let y = bromwich_inverse(tau, &p, default_abscissa(tau), 1e-10).unwrap();
            assert!((y - Complex64::from_polar(1.0, -p.a * tau)).norm() < 1e-10);
        }
    }

    #[test]
    fn bromwich_near_origin_and_abscissa_independence() {
        let p = synthetic();
        let y = bromwich_inverse(1e-6, &p, 1.0, 1e-10).unwrap();
        assert!((y - 1.0).norm() < 1e-5);
        for tau in [0.3, 2.0, 6.0] {
            let tol = 1e-9;
            let a = bromwich_inverse(tau, &p, 0.5, tol).unwrap();
            let b = bromwich_inverse(tau, &p, 1.0, tol).unwrap();
            assert!((a - b).norm() <= 2.0 * tol, "τ={tau}: {}", (a - b).norm());
        }
    }

    #[test]
    fn bromwich_matches_decomposition() {
        for p in [synthetic(), h1()] {
            let m = decomposition(p);
            for tau in [0.05, 1.0, 30.0, 100.0] {
                let y = bromwich_inverse(tau, &p, default_abscissa(tau), 1e-10).unwrap();
                let d = m.amplitude(tau).unwrap();
                assert!((y - d).norm() < 1e-8, "τ={tau}: {y} vs {d}");
            }
        }
    }

    #[test]
    fn spectral_normalization_and_unitarity() {
        for p in [synthetic(), h1()] {
            let y0 = spectral_inverse(0.0, &p, 1e-10).unwrap();
            assert!((y0 - 1.0).norm() < 1e-6, "{y0}");
            for tau in [0.5, 5.0, 50.0] {
                assert!(spectral_inverse(tau, &p, 1e-10).unwrap().norm() <= 1.0 + 1e-6);
            }
        }
    }

    #[test]
    fn spectral_matches_decomposition_synthetic() {
        let p = synthetic();
        let m = decomposition(p);
        for tau in [0.1, 2.0, 20.0, 150.0, 600.0] {
            let y = spectral_inverse(tau, &p, 1e-10).unwrap();
            let d = m.amplitude(tau).unwrap();
            assert!((y - d).norm() < 1e-4, "τ={tau}: {y} vs {d}");
        }
    }

    #[test]
    fn secular_solver_matches_dense_eigen() {
        let p = synthetic();
        let m = DiscretizedModel::new(&p, 150, 20.0).unwrap();
        let n = m.n_modes + 1;
        let h = nalgebra::DMatrix::<f64>::from_fn(n, n, |i, j| match (i, j) {
            (0, 0) => p.a,
            (0, j) => m.couplings[j - 1],
            (i, 0) => m.couplings[i - 1],
            (i, j) if i == j => m.nodes[i - 1],
            _ => 0.0,
        });
        let eig = nalgebra::SymmetricEigen::new(h);
        let mut pairs: Vec<(f64, f64)> = (0..n)
            .map(|k| (eig.eigenvalues[k], eig.eigenvectors[(0, k)].powi(2)))
            .collect();
        pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
        for (k, (e, o)) in pairs.iter().enumerate() {
            assert!((m.energies[k] - e).abs() < 1e-10, "k={k}");
            assert!((m.overlaps[k] - o).abs() < 1e-10, "k={k}");
        }
    }

    #[test]
    fn discretized_unitarity() {
        let p = synthetic();
        let m = DiscretizedModel::new(&p, 200, 20.0).unwrap();
        assert!((m.amplitude(0.0) - 1.0).norm() < 1e-12);
        for tau in [0.0, 1.0, 37.0, 400.0] {
            let norm: f64 = m.state(tau).iter().map(|c| c.norm_sqr()).sum();
            assert!((norm - 1.0).abs() < 1e-10, "τ={tau}: {norm}");
            assert!(m.amplitude(tau).norm_sqr() <= 1.0 + 1e-10);
        }
    }

    #[test]
    fn discretized_zeno_curvature() {
        let p = synthetic();
        let m = DiscretizedModel::new(&p, 1000, 20.0).unwrap();
        assert!((m.coupling_sum() / (p.chi / 6.0) - 1.0).abs() < 1e-6);
        let h = 1e-2;
        let curvature = (1.0 - m.amplitude(h).norm_sqr()) / (h * h);
        assert!((curvature / (p.chi / 6.0) - 1.0).abs() < 0.01);
    }

    #[test]
    fn discretized_validation() {
        let p = synthetic();
        assert!(DiscretizedModel::new(&p, 99, 20.0).is_err());
        assert!(DiscretizedModel::new(&p, 100, 5.0).is_err());
        assert!(DiscretizedModel::new(&p, 4000, 20.0)
            .unwrap()
            .resolves_resonance(&p));
        assert!(!DiscretizedModel::new(&h1(), 100, 20.0)
            .unwrap()
            .resolves_resonance(&h1()));
    }
}
