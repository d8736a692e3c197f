//! Adaptive Gauss–Kronrod quadrature and the endpoint-singular substitutions
//! used by the Penrose, dispersion and BGK computations.

use alloc::collections::BinaryHeap;
use alloc::vec::Vec;
use core::cmp::Ordering;
use core::f64::consts::FRAC_PI_2;
use core::ops::{Add, Mul, Sub};

use num_complex::Complex64;
#[allow(unused_imports)]
use num_traits::Float;

use crate::{Error, Result};

// Kronrod 21-point abscissae on [-1, 1] (non-negative half) and weights.
const XGK: [f64; 11] = [
    0.995_657_163_025_808_080_735_527_280_689_003,
    0.973_906_528_517_171_720_077_964_012_084_452,
    0.930_157_491_355_708_226_001_207_180_059_508,
    0.865_063_366_688_984_510_732_096_688_423_493,
    0.780_817_726_586_416_897_063_717_578_345_042,
    0.679_409_568_299_024_406_234_327_365_114_874,
    0.562_757_134_668_604_683_339_000_099_272_694,
    0.433_395_394_129_247_190_799_265_943_165_784,
    0.294_392_862_701_460_198_131_126_603_103_866,
    0.148_874_338_981_631_210_884_826_001_129_720,
    0.0,
];
const WGK: [f64; 11] = [
    0.011_694_638_867_371_874_278_064_396_062_192,
    0.032_558_162_307_964_727_478_818_972_459_390,
    0.054_755_896_574_351_996_031_381_300_244_580,
    0.075_039_674_810_919_952_767_043_140_916_190,
    0.093_125_454_583_697_605_535_065_465_083_366,
    0.109_387_158_802_297_641_899_210_590_325_805,
    0.123_491_976_262_065_851_077_208_067_521_672,
    0.134_709_217_311_473_325_928_054_001_771_707,
    0.142_775_938_577_060_080_797_094_273_138_717,
    0.147_739_104_901_338_491_374_841_515_972_068,
    0.149_445_554_002_916_905_664_936_468_389_821,
];
// Gauss 10-point weights for XGK[1], XGK[3], ..., XGK[9].
const WG: [f64; 5] = [
    0.066_671_344_308_688_137_593_568_809_893_332,
    0.149_451_349_150_580_593_145_776_339_657_697,
    0.219_086_362_515_982_043_995_534_934_228_163,
    0.269_266_719_309_996_355_091_226_921_569_469,
    0.295_524_224_714_752_870_173_892_994_651_338,
];

/// Values that can be integrated: reals and complex numbers.
pub trait QuadValue:
    Copy + Add<Output = Self> + Sub<Output = Self> + Mul<f64, Output = Self>
{
    fn zero() -> Self;
    fn magnitude(self) -> f64;
}

impl QuadValue for f64 {
    fn zero() -> Self {
        0.0
    }
    fn magnitude(self) -> f64 {
        self.abs()
    }
}

impl QuadValue for Complex64 {
    fn zero() -> Self {
        Complex64::new(0.0, 0.0)
    }
    fn magnitude(self) -> f64 {
        self.norm()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadConfig {
    pub abs_tol: f64,
    pub rel_tol: f64,
    pub max_subdivisions: usize,
}

impl Default for QuadConfig {
    fn default() -> Self {
        Self {
            abs_tol: 1e-13,
            rel_tol: 1e-12,
            max_subdivisions: 4000,
        }
    }
}

impl QuadConfig {
    pub fn with_tol(abs_tol: f64, rel_tol: f64) -> Self {
        Self {
            abs_tol,
            rel_tol,
            ..Self::default()
        }
    }
}

#[derive(Debug, Clone, Copy)]
pub struct QuadResult<T> {
    pub value: T,
    pub error: f64,
    pub evaluations: usize,
}

struct Segment<T> {
    a: f64,
    b: f64,
    value: T,
    error: f64,
}

impl<T> PartialEq for Segment<T> {
    fn eq(&self, other: &Self) -> bool {
        self.error == other.error
    }
}
impl<T> Eq for Segment<T> {}
impl<T> PartialOrd for Segment<T> {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl<T> Ord for Segment<T> {
    fn cmp(&self, other: &Self) -> Ordering {
        self.error.total_cmp(&other.error)
    }
}

/// One 21-point Kronrod rule with its embedded Gauss estimate.
fn kronrod21<T: QuadValue, F: FnMut(f64) -> T>(f: &mut F, a: f64, b: f64) -> (T, f64) {
    let center = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let fc = f(center);
    let mut kronrod = fc * WGK[10];
    let mut gauss = T::zero();
    let mut res_abs = fc.magnitude() * WGK[10];
    let mut fv1 = [T::zero(); 10];
    let mut fv2 = [T::zero(); 10];
    for j in 0..10 {
        let dx = half * XGK[j];
        let f1 = f(center - dx);
        let f2 = f(center + dx);
        fv1[j] = f1;
        fv2[j] = f2;
        kronrod = kronrod + (f1 + f2) * WGK[j];
        res_abs += WGK[j] * (f1.magnitude() + f2.magnitude());
        if j % 2 == 1 {
            gauss = gauss + (f1 + f2) * WG[j / 2];
        }
    }
    let mean = kronrod * 0.5;
    let mut res_asc = WGK[10] * (fc - mean).magnitude();
    for j in 0..10 {
        res_asc += WGK[j] * ((fv1[j] - mean).magnitude() + (fv2[j] - mean).magnitude());
    }
    let scale = half.abs();
    res_asc *= scale;
    res_abs *= scale;
    let mut err = ((kronrod - gauss) * half).magnitude();
    if res_asc != 0.0 && err != 0.0 {
        err = res_asc * (1.0f64).min((200.0 * err / res_asc).powf(1.5));
    }
    if res_abs > f64::MIN_POSITIVE / (50.0 * f64::EPSILON) {
        err = err.max(50.0 * f64::EPSILON * res_abs);
    }
    (kronrod * half, err)
}

/// Globally adaptive integration over the union of the given intervals.
///
/// The interval with the largest error estimate is bisected until the summed
/// estimate is below `max(abs_tol, rel_tol * |I|)`.
pub fn integrate_intervals<T, F>(mut f: F, intervals: &[(f64, f64)], cfg: &QuadConfig) -> Result<QuadResult<T>>
where
    T: QuadValue,
    F: FnMut(f64) -> T,
{
    let mut heap = BinaryHeap::new();
    let mut total = T::zero();
    let mut total_err = 0.0;
    let mut evaluations = 0;
    for &(a, b) in intervals {
        if a == b {
            continue;
        }
        let (v, e) = kronrod21(&mut f, a, b);
        evaluations += 21;
        total = total + v;
        total_err += e;
        heap.push(Segment { a, b, value: v, error: e });
    }
    let mut subdivisions = 0;
    loop {
        let tol = cfg.abs_tol.max(cfg.rel_tol * total.magnitude());
        if total_err <= tol && total.magnitude().is_finite() {
            break;
        }
        let Some(worst) = heap.pop() else { break };
        let mid = 0.5 * (worst.a + worst.b);
        // interval can no longer be split in floating point
        if !(mid > worst.a.min(worst.b) && mid < worst.a.max(worst.b))
            || subdivisions >= cfg.max_subdivisions
            || !total_err.is_finite()
        {
            let (lo, hi) = intervals
                .iter()
                .fold((f64::INFINITY, f64::NEG_INFINITY), |(l, h), &(a, b)| (l.min(a).min(b), h.max(a).max(b)));
            return Err(Error::QuadratureNotConverged {
                a: lo,
                b: hi,
                error: total_err,
                subdivisions,
            });
        }
        let (v1, e1) = kronrod21(&mut f, worst.a, mid);
        let (v2, e2) = kronrod21(&mut f, mid, worst.b);
        evaluations += 42;
        subdivisions += 1;
        total = total - worst.value + v1 + v2;
        total_err += e1 + e2 - worst.error;
        heap.push(Segment { a: worst.a, b: mid, value: v1, error: e1 });
        heap.push(Segment { a: mid, b: worst.b, value: v2, error: e2 });
    }
    // re-sum to shed the cancellation accumulated by incremental updates
    let mut value = T::zero();
    let mut error = 0.0;
    for s in heap.iter() {
        value = value + s.value;
        error += s.error;
    }
    Ok(QuadResult { value, error, evaluations })
}

/// Adaptive integral of `f` over `[a, b]`.
pub fn integrate<T, F>(f: F, a: f64, b: f64, cfg: &QuadConfig) -> Result<QuadResult<T>>
where
    T: QuadValue,
    F: FnMut(f64) -> T,
{
    integrate_intervals(f, &[(a, b)], cfg)
}

/// Adaptive integral over `[points[0], points[last]]` with forced breakpoints.
pub fn integrate_with_breaks<T, F>(f: F, points: &[f64], cfg: &QuadConfig) -> Result<QuadResult<T>>
where
    T: QuadValue,
    F: FnMut(f64) -> T,
{
    let intervals: Vec<(f64, f64)> = points.windows(2).map(|w| (w[0], w[1])).collect();
    integrate_intervals(f, &intervals, cfg)
}

/// `∫_a^∞ f(x) dx` through `x = a + t / (1 - t)`.
pub fn integrate_to_infinity<T, F>(mut f: F, a: f64, cfg: &QuadConfig) -> Result<QuadResult<T>>
where
    T: QuadValue,
    F: FnMut(f64) -> T,
{
    integrate(
        move |t: f64| {
            let s = 1.0 - t;
            f(a + t / s) * (1.0 / (s * s))
        },
        0.0,
        1.0,
        cfg,
    )
}

/// `∫_0^r F(u) u du / √(r² − u²)` with `u = r sin θ`, which removes the
/// inverse square root at `u = r`.
pub fn abel_forward<F: FnMut(f64) -> f64>(mut f: F, r: f64, cfg: &QuadConfig) -> Result<f64> {
    if r <= 0.0 {
        return Ok(0.0);
    }
    integrate(
        |th: f64| {
            let u = r * th.sin();
            f(u) * u
        },
        0.0,
        FRAC_PI_2,
        cfg,
    )
    .map(|q| q.value)
}

/// `∫_0^u G(s) ds / √(u² − s²)` with `s = u sin θ`.
pub fn abel_inverse_kernel<F: FnMut(f64) -> f64>(mut g: F, u: f64, cfg: &QuadConfig) -> Result<f64> {
    if u <= 0.0 {
        return Ok(0.0);
    }
    integrate(|th: f64| g(u * th.sin()), 0.0, FRAC_PI_2, cfg).map(|q| q.value)
}

/// `∫_a^b h(u) u du / √((b² − u²)(u² − a²))` through
/// `u² = a² cos²θ + b² sin²θ`, which maps the integrand to `h(u(θ)) dθ` on
/// `[0, π/2]` and removes both endpoint singularities.
pub fn two_sided_sqrt<F: FnMut(f64) -> f64>(mut h: F, a: f64, b: f64, cfg: &QuadConfig) -> Result<f64> {
    if !(a >= 0.0 && a < b) {
        return Err(Error::param("(a, b)", "need 0 <= a < b"));
    }
    integrate(
        |th: f64| {
            let (s, c) = th.sin_cos();
            let u = (a * a * c * c + b * b * s * s).sqrt();
            h(u)
        },
        0.0,
        FRAC_PI_2,
        cfg,
    )
    .map(|q| q.value)
}

/// Fixed n-point Gauss–Legendre nodes and weights on `[-1, 1]` via Newton
/// iteration on the Legendre recurrence.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut x = alloc::vec![0.0; n];
    let mut w = alloc::vec![0.0; n];
    let m = n.div_ceil(2);
    for i in 0..m {
        let mut z = (core::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut pp = 0.0;
        for _ in 0..100 {
            let mut p1 = 1.0;
            let mut p2 = 0.0;
            for j in 0..n {
                let p3 = p2;
                p2 = p1;
                p1 = ((2 * j + 1) as f64 * z * p2 - j as f64 * p3) / (j + 1) as f64;
            }
            pp = n as f64 * (z * p1 - p2) / (z * z - 1.0);
            let z1 = z;
            z = z1 - p1 / pp;
            if (z - z1).abs() < 1e-15 {
                break;
            }
        }
        x[i] = -z;
        x[n - 1 - i] = z;
        w[i] = 2.0 / ((1.0 - z * z) * pp * pp);
        w[n - 1 - i] = w[i];
    }
    (x, w)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use core::f64::consts::PI;

    #[test]
    fn polynomial_is_exact() {
        let q = integrate(|x: f64| x.powi(5) - 2.0 * x * x + 1.0, -1.0, 2.0, &QuadConfig::default()).unwrap();
        let exact = (64.0 - 1.0) / 6.0 - 2.0 * (8.0 + 1.0) / 3.0 + 3.0;
        assert_relative_eq!(q.value, exact, epsilon = 1e-13);
    }

    #[test]
    fn gaussian_to_infinity() {
        let q = integrate_to_infinity(|x: f64| (-x * x).exp(), 0.0, &QuadConfig::default()).unwrap();
        assert_relative_eq!(q.value, PI.sqrt() / 2.0, epsilon = 1e-12);
    }

    #[test]
    fn complex_integrand() {
        let q: QuadResult<Complex64> =
            integrate(|x: f64| Complex64::new(0.0, x).exp(), 0.0, PI, &QuadConfig::default()).unwrap();
        assert_relative_eq!(q.value.re, 0.0, epsilon = 1e-13);
        assert_relative_eq!(q.value.im, 2.0, epsilon = 1e-13);
    }

    #[test]
    fn abel_forward_of_constant() {
        // ∫_0^r u/√(r²-u²) du = r
        let v = abel_forward(|_| 1.0, 1.7, &QuadConfig::default()).unwrap();
        assert_relative_eq!(v, 1.7, epsilon = 1e-13);
    }

    #[test]
    fn abel_inverse_kernel_of_constant() {
        // ∫_0^u ds/√(u²-s²) = π/2
        let v = abel_inverse_kernel(|_| 1.0, 0.3, &QuadConfig::default()).unwrap();
        assert_relative_eq!(v, PI / 2.0, epsilon = 1e-13);
    }

    #[test]
    fn two_sided_rejects_degenerate_window() {
        assert!(two_sided_sqrt(|_| 1.0, 2.0, 2.0, &QuadConfig::default()).is_err());
        assert!(two_sided_sqrt(|_| 1.0, 3.0, 2.0, &QuadConfig::default()).is_err());
    }

    #[test]
    fn gauss_legendre_weights_sum_to_two() {
        for n in [1, 2, 5, 16, 33] {
            let (x, w) = gauss_legendre(n);
            assert_relative_eq!(w.iter().sum::<f64>(), 2.0, epsilon = 1e-13);
            let m2: f64 = x.iter().zip(&w).map(|(x, w)| w * x * x).sum();
            if n >= 2 {
                assert_relative_eq!(m2, 2.0 / 3.0, epsilon = 1e-13);
            }
        }
    }

    #[test]
    fn nonconvergence_is_reported() {
        let cfg = QuadConfig {
            abs_tol: 1e-15,
            rel_tol: 1e-15,
            max_subdivisions: 3,
        };
        let r: Result<QuadResult<f64>> = integrate(|x: f64| (1.0 / x).sin(), 1e-6, 1.0, &cfg);
        assert!(matches!(r, Err(Error::QuadratureNotConverged { .. })));
        let r: Result<QuadResult<f64>> = integrate(|x: f64| 1.0 / x.abs().sqrt(), -1.0, 1.0, &QuadConfig::default());
        assert!(r.is_err());
    }
}
