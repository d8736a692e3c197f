//! Homogeneous velocity profiles μ(v).
//!
//! Analytic kinds evaluate μ, μ′ and μ″ in closed form. A tabulated profile
//! lives on a uniform grid, takes 4th-order centred differences for μ′ and is
//! evaluated by cubic Hermite interpolation; it refuses to extrapolate.

mod casimir;
mod penrose;

use alloc::vec::Vec;
use core::f64::consts::PI;

#[allow(unused_imports)]
use num_traits::Float;

use crate::interp::Hermite;
use crate::quadrature::{integrate_with_breaks, QuadConfig};
use crate::{Error, Result};

pub use casimir::{CasimirQ, SStableProfile};
pub use penrose::{
    DeltaPrimeReport, DeltaReport, MinimumReport, PenroseReport, DEFAULT_DELTAS, DEFAULT_DELTA_N_MAX,
};

/// Tolerance on `∫ μ dv = 1`.
pub const NORMALIZATION_TOL: f64 = 1e-8;

/// Half-width of the quadrature window around a Gaussian component, in
/// standard deviations. The neglected mass is below 1e-40.
const GAUSS_CUT: f64 = 14.0;

fn gauss(v: f64, m: f64, t: f64) -> (f64, f64, f64) {
    let y = v - m;
    let g = (-y * y / (2.0 * t)).exp() / (2.0 * PI * t).sqrt();
    (g, -y / t * g, (y * y / (t * t) - 1.0 / t) * g)
}

#[derive(Debug, Clone, PartialEq)]
pub enum ProfileKind {
    /// `N(u, T)`.
    Maxwellian { t: f64, u: f64 },
    /// `w₁ N(u, T) + w₂ N(−u, T)`.
    TwoStream { t: f64, u: f64, weights: [f64; 2] },
    /// `(1 − a) N(0, T) + a N(c, w²)`.
    BumpOnTail { t: f64, amplitude: f64, center: f64, width: f64 },
    /// `C exp(−1 / ((b − v)(v − a)))` on `(a, b)`, zero outside.
    CompactBump { a: f64, b: f64 },
    Tabulated(Tabulated),
}

/// Uniformly sampled profile.
#[derive(Debug, Clone, PartialEq)]
pub struct Tabulated {
    v0: f64,
    dv: f64,
    values: Vec<f64>,
    interp: Hermite,
}

impl Tabulated {
    /// Samples `values[i] = μ(v0 + i dv)`.
    pub fn new(v0: f64, dv: f64, values: Vec<f64>) -> Result<Self> {
        let n = values.len();
        if n < 5 {
            return Err(Error::param("tabulated", "need at least 5 samples"));
        }
        if !(dv > 0.0) || !v0.is_finite() {
            return Err(Error::param("tabulated", "grid must be finite and increasing"));
        }
        if let Some(i) = values.iter().position(|x| !(x.is_finite() && *x >= 0.0)) {
            return Err(Error::param("tabulated", alloc::format!("sample {i} is negative or not finite")));
        }
        let xs: Vec<f64> = (0..n).map(|i| v0 + i as f64 * dv).collect();
        let ds = fd4(&values, dv);
        let interp = Hermite::new(xs, values.clone(), ds)?;
        Ok(Self { v0, dv, values, interp })
    }

    /// From `(v, μ)` pairs on a uniform grid (relative spacing error ≤ 1e-9).
    pub fn from_pairs(vs: &[f64], mus: &[f64]) -> Result<Self> {
        if vs.len() != mus.len() || vs.len() < 5 {
            return Err(Error::param("tabulated", "need at least 5 (v, mu) pairs"));
        }
        let dv = (vs[vs.len() - 1] - vs[0]) / (vs.len() - 1) as f64;
        for (i, v) in vs.iter().enumerate() {
            if (v - (vs[0] + i as f64 * dv)).abs() > 1e-9 * dv.abs().max(1e-300) {
                return Err(Error::param("tabulated", alloc::format!("grid is not uniform at row {i} (v = {v})")));
            }
        }
        Self::new(vs[0], dv, mus.to_vec())
    }

    pub fn lo(&self) -> f64 {
        self.v0
    }

    pub fn hi(&self) -> f64 {
        self.v0 + (self.values.len() - 1) as f64 * self.dv
    }

    pub fn step(&self) -> f64 {
        self.dv
    }

    pub fn samples(&self) -> &[f64] {
        &self.values
    }

    /// The finite-difference slopes at the nodes.
    pub fn slopes(&self) -> &[f64] {
        self.interp.slopes()
    }
}

/// 4th-order finite differences: centred inside, one-sided at the two
/// outermost nodes on each side.
fn fd4(y: &[f64], h: f64) -> Vec<f64> {
    let n = y.len();
    let mut d = alloc::vec![0.0; n];
    for i in 2..n - 2 {
        d[i] = (y[i - 2] - 8.0 * y[i - 1] + 8.0 * y[i + 1] - y[i + 2]) / (12.0 * h);
    }
    let fwd = |k: usize| (-25.0 * y[k] + 48.0 * y[k + 1] - 36.0 * y[k + 2] + 16.0 * y[k + 3] - 3.0 * y[k + 4]) / (12.0 * h);
    let skew = |k: usize| (-3.0 * y[k - 1] - 10.0 * y[k] + 18.0 * y[k + 1] - 6.0 * y[k + 2] + y[k + 3]) / (12.0 * h);
    d[0] = fwd(0);
    d[1] = skew(1);
    let bwd = |k: usize| (25.0 * y[k] - 48.0 * y[k - 1] + 36.0 * y[k - 2] - 16.0 * y[k - 3] + 3.0 * y[k - 4]) / (12.0 * h);
    let bskew = |k: usize| (3.0 * y[k + 1] + 10.0 * y[k] - 18.0 * y[k - 1] + 6.0 * y[k - 2] - y[k - 3]) / (12.0 * h);
    d[n - 1] = bwd(n - 1);
    d[n - 2] = bskew(n - 2);
    d
}

/// A normalized homogeneous profile.
#[derive(Debug, Clone, PartialEq)]
pub struct Profile {
    kind: ProfileKind,
    // multiplies the raw formula; 1 except for compact bumps
    scale: f64,
    normalization: f64,
}

impl Profile {
    pub fn new(kind: ProfileKind) -> Result<Self> {
        match &kind {
            ProfileKind::Maxwellian { t, u } => {
                positive("T", *t)?;
                finite("u", *u)?;
            }
            ProfileKind::TwoStream { t, u, weights } => {
                positive("T", *t)?;
                finite("u", *u)?;
                if weights.iter().any(|w| !(*w >= 0.0)) || (weights[0] + weights[1] - 1.0).abs() > 1e-12 {
                    return Err(Error::param("weights", "must be nonnegative and sum to 1"));
                }
            }
            ProfileKind::BumpOnTail { t, amplitude, center, width } => {
                positive("T", *t)?;
                positive("width", *width)?;
                finite("center", *center)?;
                if !(*amplitude >= 0.0 && *amplitude <= 1.0) {
                    return Err(Error::param("amplitude", "must lie in [0, 1]"));
                }
            }
            ProfileKind::CompactBump { a, b } => {
                finite("a", *a)?;
                finite("b", *b)?;
                if !(a < b) {
                    return Err(Error::param("(a, b)", "need a < b"));
                }
            }
            ProfileKind::Tabulated(_) => {}
        }
        let mut p = Self {
            kind,
            scale: 1.0,
            normalization: 1.0,
        };
        let raw = p.moment(0)?;
        if let ProfileKind::CompactBump { .. } = p.kind {
            p.scale = 1.0 / raw;
            p.normalization = p.moment(0)?;
        } else {
            p.normalization = raw;
        }
        if (p.normalization - 1.0).abs() > NORMALIZATION_TOL {
            return Err(Error::param(
                "normalization",
                alloc::format!("∫ mu dv = {} differs from 1", p.normalization),
            ));
        }
        Ok(p)
    }

    pub fn maxwellian(t: f64, u: f64) -> Result<Self> {
        Self::new(ProfileKind::Maxwellian { t, u })
    }

    pub fn two_stream(t: f64, u: f64, weights: [f64; 2]) -> Result<Self> {
        Self::new(ProfileKind::TwoStream { t, u, weights })
    }

    pub fn bump_on_tail(t: f64, amplitude: f64, center: f64, width: f64) -> Result<Self> {
        Self::new(ProfileKind::BumpOnTail { t, amplitude, center, width })
    }

    pub fn compact_bump(a: f64, b: f64) -> Result<Self> {
        Self::new(ProfileKind::CompactBump { a, b })
    }

    pub fn tabulated(t: Tabulated) -> Result<Self> {
        Self::new(ProfileKind::Tabulated(t))
    }

    pub fn kind(&self) -> &ProfileKind {
        &self.kind
    }

    /// `∫ μ dv` as measured at construction.
    pub fn normalization(&self) -> f64 {
        self.normalization
    }

    /// `(μ(v), μ′(v))`.
    pub fn eval(&self, v: f64) -> Result<(f64, f64)> {
        if !v.is_finite() {
            return Err(Error::param("v", "must be finite"));
        }
        if let ProfileKind::Tabulated(t) = &self.kind {
            if v < t.lo() || v > t.hi() {
                return Err(Error::Extrapolation { v, lo: t.lo(), hi: t.hi() });
            }
        }
        let (m, d, _) = self.raw(v);
        Ok((m, d))
    }

    pub fn mu(&self, v: f64) -> Result<f64> {
        self.eval(v).map(|e| e.0)
    }

    pub fn mu_prime(&self, v: f64) -> Result<f64> {
        self.eval(v).map(|e| e.1)
    }

    pub fn mu_second(&self, v: f64) -> Result<f64> {
        self.eval(v)?;
        Ok(self.raw(v).2)
    }

    /// Unchecked evaluation of `(μ, μ′, μ″)`. A tabulated profile reads as 0
    /// outside its grid.
    pub(crate) fn raw(&self, v: f64) -> (f64, f64, f64) {
        match &self.kind {
            ProfileKind::Maxwellian { t, u } => gauss(v, *u, *t),
            ProfileKind::TwoStream { t, u, weights } => {
                let a = gauss(v, *u, *t);
                let b = gauss(v, -*u, *t);
                let (w1, w2) = (weights[0], weights[1]);
                (w1 * a.0 + w2 * b.0, w1 * a.1 + w2 * b.1, w1 * a.2 + w2 * b.2)
            }
            ProfileKind::BumpOnTail { t, amplitude, center, width } => {
                let a = gauss(v, 0.0, *t);
                let b = gauss(v, *center, width * width);
                let (w1, w2) = (1.0 - amplitude, *amplitude);
                (w1 * a.0 + w2 * b.0, w1 * a.1 + w2 * b.1, w1 * a.2 + w2 * b.2)
            }
            ProfileKind::CompactBump { a, b } => {
                if v <= *a || v >= *b {
                    return (0.0, 0.0, 0.0);
                }
                let p = (b - v) * (v - a);
                let dp = a + b - 2.0 * v;
                let m = self.scale * (-1.0 / p).exp();
                let p2 = p * p;
                (m, m * dp / p2, m * (dp * dp - 2.0 * p2 - 2.0 * p * dp * dp) / (p2 * p2))
            }
            ProfileKind::Tabulated(t) => {
                if v < t.lo() || v > t.hi() {
                    return (0.0, 0.0, 0.0);
                }
                let (m, d) = t.interp.eval_with_derivative(v);
                let h = 0.25 * t.dv;
                let dp = t.interp.eval_with_derivative((v + h).min(t.hi())).1;
                let dm = t.interp.eval_with_derivative((v - h).max(t.lo())).1;
                let span = (v + h).min(t.hi()) - (v - h).max(t.lo());
                (m, d, (dp - dm) / span)
            }
        }
    }

    /// Interval outside which μ is zero or negligible (mass below 1e-40).
    pub fn support(&self) -> (f64, f64) {
        match &self.kind {
            ProfileKind::Maxwellian { t, u } => {
                let s = GAUSS_CUT * t.sqrt();
                (u - s, u + s)
            }
            ProfileKind::TwoStream { t, u, .. } => {
                let s = GAUSS_CUT * t.sqrt();
                (-u.abs() - s, u.abs() + s)
            }
            ProfileKind::BumpOnTail { t, center, width, .. } => {
                let s0 = GAUSS_CUT * t.sqrt();
                let s1 = GAUSS_CUT * width;
                ((-s0).min(center - s1), s0.max(center + s1))
            }
            ProfileKind::CompactBump { a, b } => (*a, *b),
            ProfileKind::Tabulated(t) => (t.lo(), t.hi()),
        }
    }

    /// Support endpoints plus interior points where μ has structure.
    pub fn breakpoints(&self) -> Vec<f64> {
        let (lo, hi) = self.support();
        let mut pts = alloc::vec![lo, hi];
        match &self.kind {
            ProfileKind::Maxwellian { u, .. } => pts.push(*u),
            ProfileKind::TwoStream { u, .. } => pts.extend([-*u, 0.0, *u]),
            ProfileKind::BumpOnTail { center, .. } => pts.extend([0.0, *center]),
            ProfileKind::CompactBump { a, b } => pts.push(0.5 * (a + b)),
            ProfileKind::Tabulated(_) => pts.push(0.5 * (lo + hi)),
        }
        pts.retain(|p| *p >= lo && *p <= hi);
        pts.sort_by(f64::total_cmp);
        pts.dedup();
        pts
    }

    /// Breakpoints with `extra` inserted (kept only if inside the support).
    pub(crate) fn breakpoints_with(&self, extra: &[f64]) -> Vec<f64> {
        let (lo, hi) = self.support();
        let mut pts = self.breakpoints();
        pts.extend(extra.iter().copied().filter(|p| *p > lo && *p < hi));
        pts.sort_by(f64::total_cmp);
        pts.dedup();
        pts
    }

    /// `∫ g(v) μ(v) dv` over the support.
    pub fn integrate_against<F: FnMut(f64) -> f64>(&self, mut g: F, cfg: &QuadConfig) -> Result<f64> {
        let pts = self.breakpoints();
        integrate_with_breaks(|v: f64| g(v) * self.raw(v).0, &pts, cfg).map(|q| q.value)
    }

    /// `∫ μ vᵏ dv`.
    pub fn moment(&self, k: i32) -> Result<f64> {
        self.integrate_against(|v| v.powi(k), &QuadConfig::default())
    }

    pub fn mean_velocity(&self) -> Result<f64> {
        Ok(self.moment(1)? / self.normalization)
    }

    /// `∫ μ (1 + |v|^{2+η}) dv`.
    pub fn weighted_moment(&self, eta: f64) -> Result<f64> {
        self.integrate_against(|v| 1.0 + v.abs().powf(2.0 + eta), &QuadConfig::default())
    }

    /// Thermal spread `√(∫ μ (v − ū)² dv)`.
    pub fn thermal_width(&self) -> Result<f64> {
        let m = self.mean_velocity()?;
        Ok(self.integrate_against(|v| (v - m) * (v - m), &QuadConfig::default())?.sqrt())
    }
}

fn positive(name: &'static str, x: f64) -> Result<()> {
    if x.is_finite() && x > 0.0 {
        Ok(())
    } else {
        Err(Error::param(name, alloc::format!("must be positive and finite, got {x}")))
    }
}

fn finite(name: &'static str, x: f64) -> Result<()> {
    if x.is_finite() {
        Ok(())
    } else {
        Err(Error::param(name, "must be finite"))
    }
}
