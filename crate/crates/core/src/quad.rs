//! Quadrature building blocks: globally adaptive Gauss–Kronrod (7/15) for
//! complex integrands, Gauss–Legendre and generalized Gauss–Laguerre rules,
//! and a principal-value integral by symmetric excision.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use num_complex::Complex64;

use crate::error::{Error, Result};

const XGK: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];
const WGK: [f64; 8] = [
    0.022_935_322_010_529_22,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_2,
    0.140_653_259_715_525_9,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_727_8,
];
// Gauss weights for XGK[1], XGK[3], XGK[5], XGK[7].
const WG: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

/// One integration range handed to [`adaptive`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Range {
    Finite(f64, f64),
    /// `[start, ∞)` with `start > 0`, mapped onto `(0, 1]` by `x = start / v`.
    Tail(f64),
}

/// Builds finite ranges between consecutive sorted, deduplicated breakpoints.
pub fn ranges_from_breakpoints(points: &[f64]) -> Vec<Range> {
    let mut pts: Vec<f64> = points.iter().copied().filter(|p| p.is_finite()).collect();
    pts.sort_by(|a, b| a.partial_cmp(b).unwrap_or(Ordering::Equal));
    pts.dedup_by(|a, b| (*a - *b).abs() <= 1e-15 * b.abs().max(1e-300));
    pts.windows(2)
        .filter(|w| w[1] > w[0])
        .map(|w| Range::Finite(w[0], w[1]))
        .collect()
}

#[derive(Debug, Clone, Copy)]
pub struct Tolerance {
    pub abs: f64,
    pub rel: f64,
    /// Maximum number of integrand evaluations.
    pub max_evals: usize,
}

impl Tolerance {
    pub fn new(abs: f64, rel: f64) -> Self {
        Tolerance {
            abs,
            rel,
            max_evals: 400_000,
        }
    }

    pub fn with_budget(mut self, max_evals: usize) -> Self {
        self.max_evals = max_evals;
        self
    }
}

#[derive(Debug, Clone, Copy)]
pub struct Estimate {
    pub value: Complex64,
    pub error: f64,
    pub evals: usize,
}

#[derive(Debug, Clone, Copy)]
struct Segment {
    range: Range,
    lo: f64,
    hi: f64,
    value: Complex64,
    error: f64,
    floor: f64,
}

impl PartialEq for Segment {
    fn eq(&self, other: &Self) -> bool {
        self.error == other.error
    }
}
impl Eq for Segment {}
impl PartialOrd for Segment {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Segment {
    fn cmp(&self, other: &Self) -> Ordering {
        self.error
            .partial_cmp(&other.error)
            .unwrap_or(Ordering::Equal)
    }
}

// Returns value, error estimate and the roundoff floor of that estimate.
fn kronrod<F>(f: &F, range: Range, lo: f64, hi: f64) -> (Complex64, f64, f64)
where
    F: Fn(f64) -> Complex64,
{
    // On a tail range the abscissa is v in (0, 1] and x = start / v.
    let eval = |v: f64| -> Complex64 {
        match range {
            Range::Finite(..) => f(v),
            Range::Tail(start) => {
                if v <= 0.0 {
                    Complex64::new(0.0, 0.0)
                } else {
                    f(start / v) * (start / (v * v))
                }
            }
        }
    };
    let center = 0.5 * (lo + hi);
    let half = 0.5 * (hi - lo);
    let fc = eval(center);
    let mut k = fc * WGK[7];
    let mut g = fc * WG[3];
    let mut abs_k = fc.norm() * WGK[7];
    let mut fv = [(Complex64::new(0.0, 0.0), Complex64::new(0.0, 0.0)); 7];
    for j in 0..7 {
        let dx = half * XGK[j];
        let f1 = eval(center - dx);
        let f2 = eval(center + dx);
        fv[j] = (f1, f2);
        k += (f1 + f2) * WGK[j];
        abs_k += (f1.norm() + f2.norm()) * WGK[j];
        if j % 2 == 1 {
            g += (f1 + f2) * WG[j / 2];
        }
    }
    let mean = k * 0.5;
    let mut asc = (fc - mean).norm() * WGK[7];
    for j in 0..7 {
        asc += ((fv[j].0 - mean).norm() + (fv[j].1 - mean).norm()) * WGK[j];
    }
    let value = k * half;
    let asc = asc * half.abs();
    let abs_k = abs_k * half.abs();
    let mut err = ((k - g) * half).norm();
    if asc > 0.0 && err > 0.0 {
        err = asc * (200.0 * err / asc).powf(1.5).min(1.0);
    }
    let floor = 50.0 * f64::EPSILON * abs_k;
    if abs_k > f64::MIN_POSITIVE / (50.0 * f64::EPSILON) {
        err = err.max(floor);
    }
    (value, err, floor)
}

/// Globally adaptive Gauss–Kronrod integration of a complex integrand over a
/// union of ranges. Converges when the summed error estimate drops below
/// `max(tol.abs, tol.rel * |I|)`.
pub fn adaptive<F>(f: F, ranges: &[Range], tol: Tolerance) -> Result<Estimate>
where
    F: Fn(f64) -> Complex64,
{
    let mut heap = BinaryHeap::new();
    let mut evals = 0usize;
    let mut total = Complex64::new(0.0, 0.0);
    let mut total_err = 0.0;
    let mut total_floor = 0.0;
    for &range in ranges {
        let (lo, hi) = match range {
            Range::Finite(a, b) => (a, b),
            Range::Tail(start) => {
                assert!(start > 0.0, "tail range must start at a positive abscissa");
                (0.0, 1.0)
            }
        };
        if hi <= lo {
            continue;
        }
        let (value, error, floor) = kronrod(&f, range, lo, hi);
        evals += 15;
        total += value;
        total_err += error;
        total_floor += floor;
        heap.push(Segment {
            range,
            lo,
            hi,
            value,
            error,
            floor,
        });
    }
    // Segments too narrow to split further, or already at their roundoff
    // floor, are parked here.
    let mut frozen_err = 0.0;
    loop {
        let target = tol.abs.max(tol.rel * total.norm());
        if total_err <= target.max(total_floor) {
            return Ok(Estimate {
                value: total,
                error: total_err,
                evals,
            });
        }
        let Some(seg) = heap.pop() else {
            // Everything frozen: accept if what is left above roundoff is small.
            if frozen_err <= 10.0 * target {
                return Ok(Estimate {
                    value: total,
                    error: total_err,
                    evals,
                });
            }
            return Err(Error::Quadrature {
                budget: tol.max_evals,
                error: total_err,
                target,
            });
        };
        if evals + 30 > tol.max_evals {
            return Err(Error::Quadrature {
                budget: tol.max_evals,
                error: total_err,
                target,
            });
        }
        let mid = 0.5 * (seg.lo + seg.hi);
        let narrow =
            !(mid > seg.lo && mid < seg.hi) || (seg.hi - seg.lo) <= 1e-14 * mid.abs().max(1e-300);
        if narrow || seg.error <= seg.floor {
            frozen_err += (seg.error - seg.floor).max(0.0);
            continue;
        }
        let (v1, e1, f1) = kronrod(&f, seg.range, seg.lo, mid);
        let (v2, e2, f2) = kronrod(&f, seg.range, mid, seg.hi);
        evals += 30;
        total += v1 + v2 - seg.value;
        total_err += e1 + e2 - seg.error;
        total_floor += f1 + f2 - seg.floor;
        heap.push(Segment {
            range: seg.range,
            lo: seg.lo,
            hi: mid,
            value: v1,
            error: e1,
            floor: f1,
        });
        heap.push(Segment {
            range: seg.range,
            lo: mid,
            hi: seg.hi,
            value: v2,
            error: e2,
            floor: f2,
        });
    }
}

/// Real-valued convenience wrapper around [`adaptive`].
pub fn adaptive_real<F>(f: F, ranges: &[Range], tol: Tolerance) -> Result<(f64, f64)>
where
    F: Fn(f64) -> f64,
{
    let est = adaptive(|x| Complex64::new(f(x), 0.0), ranges, tol)?;
    Ok((est.value.re, est.error))
}

/// Cauchy principal value of `∫ f(x) / (x - pole) dx` over `[lo, ∞)` (or
/// `[lo, hi]`), by excising `[pole - δ, pole + δ]` for two values of δ and
/// Richardson-extrapolating the remainder, which is 2 f'(pole) δ + O(δ³).
pub fn principal_value<F>(
    f: F,
    pole: f64,
    lo: f64,
    hi: Option<f64>,
    deltas: (f64, f64),
    extra_breaks: &[f64],
    tol: Tolerance,
) -> Result<f64>
where
    F: Fn(f64) -> f64,
{
    let (d1, d2) = deltas;
    assert!(d1 > d2 && d2 > 0.0);
    assert!(
        pole - d1 > lo,
        "excision must stay inside the integration range"
    );
    let excised = |d: f64| -> Result<f64> {
        let mut left: Vec<f64> = vec![lo, pole - d];
        let mut right: Vec<f64> = vec![pole + d];
        for &b in extra_breaks {
            if b > lo && b < pole - d {
                left.push(b);
            }
            if b > pole + d && hi.is_none_or(|h| b < h) {
                right.push(b);
            }
        }
        // Geometric breakpoints toward the excision edges.
        let mut k = 2.0 * d;
        while k < 0.5 * (pole - lo) {
            left.push(pole - k);
            right.push(pole + k);
            k *= 4.0;
        }
        let mut ranges = ranges_from_breakpoints(&left);
        match hi {
            Some(h) => {
                right.push(h);
                ranges.extend(ranges_from_breakpoints(&right));
            }
            None => {
                let far = right.iter().copied().fold(pole + d, f64::max).max(1.0) * 2.0;
                right.push(far);
                ranges.extend(ranges_from_breakpoints(&right));
                ranges.push(Range::Tail(far));
            }
        }
        adaptive_real(|x| f(x) / (x - pole), &ranges, tol).map(|(v, _)| v)
    };
    let i1 = excised(d1)?;
    let i2 = excised(d2)?;
    let r = d2 / d1;
    Ok(i2 + (i2 - i1) * r / (1.0 - r))
}

/// Gauss–Legendre nodes and weights on `[-1, 1]`, ascending.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(n >= 1);
    let mut x = vec![0.0; n];
    let mut w = vec![0.0; n];
    let m = n.div_ceil(2);
    let nf = n as f64;
    for i in 0..m {
        // Tricomi initial guess, then Newton on P_n.
        let theta = std::f64::consts::PI * (i as f64 + 0.75) / (nf + 0.5);
        let mut z = (1.0 - (nf - 1.0) / (8.0 * nf * nf * nf)) * theta.cos();
        for _ in 0..100 {
            let mut p0 = 1.0;
            let mut p1 = z;
            for k in 2..=n {
                let kf = k as f64;
                let p2 = ((2.0 * kf - 1.0) * z * p1 - (kf - 1.0) * p0) / kf;
                p0 = p1;
                p1 = p2;
            }
            if n == 1 {
                p1 = z;
                p0 = 1.0;
            }
            let dp = nf * (z * p1 - p0) / (z * z - 1.0);
            let dz = p1 / dp;
            z -= dz;
            if dz.abs() <= 1e-16 * z.abs().max(1.0) {
                break;
            }
        }
        // Recompute the derivative at the converged node.
        let mut p0 = 1.0;
        let mut p1 = z;
        for k in 2..=n {
            let kf = k as f64;
            let p2 = ((2.0 * kf - 1.0) * z * p1 - (kf - 1.0) * p0) / kf;
            p0 = p1;
            p1 = p2;
        }
        let dp = if n > 1 {
            nf * (z * p1 - p0) / (z * z - 1.0)
        } else {
            1.0
        };
        let wi = 2.0 / ((1.0 - z * z) * dp * dp);
        x[i] = -z;
        x[n - 1 - i] = z;
        w[i] = wi;
        w[n - 1 - i] = wi;
    }
    if n % 2 == 1 {
        x[n / 2] = 0.0;
    }
    (x, w)
}

/// Gauss–Laguerre rule for the weight `ξ e^{-ξ}` on `[0, ∞)` (generalized
/// Laguerre with parameter 1), via the Golub–Welsch eigenproblem.
pub fn gauss_laguerre_1(n: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(n >= 1);
    let alpha = 1.0;
    let jacobi = nalgebra::DMatrix::<f64>::from_fn(n, n, |i, j| {
        if i == j {
            2.0 * i as f64 + alpha + 1.0
        } else if i + 1 == j || j + 1 == i {
            let k = i.max(j) as f64;
            (k * (k + alpha)).sqrt()
        } else {
            0.0
        }
    });
    let eig = nalgebra::SymmetricEigen::new(jacobi);
    // Zeroth moment of ξ e^{-ξ} is Γ(2) = 1.
    let mut pairs: Vec<(f64, f64)> = (0..n)
        .map(|k| (eig.eigenvalues[k], eig.eigenvectors[(0, k)].powi(2)))
        .collect();
    pairs.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap_or(Ordering::Equal));
    pairs.into_iter().unzip()
}
