//! Penrose instability criterion, its screened (α) variant, and the δ / δ′
//! positivity conditions.

use alloc::vec::Vec;

#[allow(unused_imports)]
use num_traits::Float;

use super::Profile;
use crate::quadrature::{integrate, integrate_with_breaks, QuadConfig};
use crate::{Error, Result};

/// Sampling cells used to locate extrema over the support.
const SCAN_CELLS: usize = 8192;
/// `|μ′|` below this fraction of `max |μ′|` counts as zero when scanning.
const FLAT_TOL: f64 = 1e-12;
/// Geometric refinement points on each side of a zero or dip of μ.
const REFINE_POINTS: usize = 96;
/// A δ-condition ratio above this is reported as unbounded.
pub const DELTA_SUP_LIMIT: f64 = 1e8;
pub const DEFAULT_DELTAS: [f64; 8] = [1e-1, 1e-2, 1e-3, 1e-4, 1e-5, 1e-6, 1e-7, 1e-8];
pub const DEFAULT_DELTA_N_MAX: u32 = 3;

#[derive(Debug, Clone, PartialEq)]
pub struct MinimumReport {
    /// Location used for the integral; the midpoint of a flat minimum.
    pub vbar: f64,
    /// Flat minima span `[lo, hi]`; strict ones have `lo == hi == vbar`.
    pub interval: (f64, f64),
    /// `∫ (μ(v) − μ(v̄)) / (v − v̄)² dv`; for a flat minimum the smallest of
    /// the values at both ends and the midpoint.
    pub integral: f64,
    pub satisfies: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DeltaReport {
    pub holds: bool,
    /// `sup |μ′| / ((1 + |v|) μ)` over the scan grid (infinite if μ vanishes).
    pub sup: f64,
    /// First grid point where μ vanishes, if any.
    pub zero_at: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DeltaPrimeReport {
    pub deltas: Vec<f64>,
    /// `∫_{W_δ} |μ′| dv` for each δ.
    pub integrals: Vec<f64>,
    /// For `n = 0..=n_max`: does `δ⁻ⁿ ∫_{W_δ} |μ′|` decay along the δ list.
    pub trend: Vec<(u32, bool)>,
    /// Finite-δ heuristic only: true when every order decays.
    pub holds_heuristic: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PenroseReport {
    pub alpha: f64,
    pub minima: Vec<MinimumReport>,
    pub unstable: bool,
    pub delta_condition: DeltaReport,
    pub delta_prime: DeltaPrimeReport,
}

impl PenroseReport {
    /// The minimum with the largest criterion integral.
    pub fn strongest(&self) -> Option<&MinimumReport> {
        self.minima.iter().max_by(|a, b| a.integral.total_cmp(&b.integral))
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum Extremum {
    Strict(f64),
    Flat(f64, f64),
}

impl Profile {
    fn scan_grid(&self) -> Vec<f64> {
        let (lo, hi) = self.support();
        let h = (hi - lo) / SCAN_CELLS as f64;
        (0..=SCAN_CELLS).map(|i| lo + i as f64 * h).collect()
    }

    fn slope_signs(&self, grid: &[f64]) -> Vec<i8> {
        let d: Vec<f64> = grid.iter().map(|&v| self.raw(v).1).collect();
        let dmax = d.iter().fold(0.0f64, |m, x| m.max(x.abs()));
        d.iter()
            .map(|&x| {
                if x.abs() <= FLAT_TOL * dmax {
                    0
                } else if x > 0.0 {
                    1
                } else {
                    -1
                }
            })
            .collect()
    }

    /// Bisection for the sign change of μ′ in `[a, b]`.
    fn slope_root(&self, mut a: f64, mut b: f64) -> f64 {
        let sa = self.raw(a).1.signum();
        for _ in 0..200 {
            let m = 0.5 * (a + b);
            if m <= a || m >= b {
                break;
            }
            let dm = self.raw(m).1;
            if dm == 0.0 {
                return m;
            }
            if dm.signum() == sa {
                a = m;
            } else {
                b = m;
            }
        }
        0.5 * (a + b)
    }

    /// Extrema where μ′ changes sign from `from` to `-from`.
    fn extrema(&self, from: i8) -> Vec<Extremum> {
        let grid = self.scan_grid();
        let s = self.slope_signs(&grid);
        let mut out = Vec::new();
        let mut i = 0;
        while i < s.len() {
            if s[i] != from {
                i += 1;
                continue;
            }
            let mut j = i + 1;
            while j < s.len() && s[j] == 0 {
                j += 1;
            }
            if j < s.len() && s[j] == -from {
                let zeros = j - i - 1;
                if zeros >= 3 {
                    out.push(Extremum::Flat(grid[i + 1], grid[j - 1]));
                } else {
                    out.push(Extremum::Strict(self.slope_root(grid[i], grid[j])));
                }
            }
            i = j;
        }
        out
    }

    fn local_minima(&self) -> Vec<Extremum> {
        self.extrema(-1)
    }

    /// Local maxima of μ (strict ones at the root of μ′, flat ones by midpoint).
    pub fn local_maxima(&self) -> Vec<f64> {
        self.extrema(1)
            .into_iter()
            .map(|e| match e {
                Extremum::Strict(v) => v,
                Extremum::Flat(a, b) => 0.5 * (a + b),
            })
            .collect()
    }

    /// `∫ (μ(v) − μ(v̄)) / (v − v̄)² dv` over ℝ. Outside the support μ is taken
    /// as 0 and that tail is added in closed form.
    pub fn penrose_integral(&self, vbar: f64, cfg: &QuadConfig) -> Result<f64> {
        let (lo, hi) = self.support();
        if !(vbar > lo && vbar < hi) {
            return Err(Error::param("vbar", "must lie inside the profile support"));
        }
        let (m0, _, m2) = self.raw(vbar);
        let near = 1e-7 * (hi - lo);
        let f = |v: f64| {
            let d = v - vbar;
            if d.abs() < near {
                0.5 * m2
            } else {
                (self.raw(v).0 - m0) / (d * d)
            }
        };
        let pts = self.breakpoints_with(&[vbar]);
        let body = integrate_with_breaks(f, &pts, cfg)?.value;
        Ok(body - m0 * (1.0 / (vbar - lo) + 1.0 / (hi - vbar)))
    }

    /// Penrose check with threshold α: a minimum satisfies it when the
    /// criterion integral exceeds α. `α = 0` is the plain criterion.
    pub fn check_alpha_penrose(&self, alpha: f64, cfg: &QuadConfig) -> Result<PenroseReport> {
        if !(alpha >= 0.0) {
            return Err(Error::param("alpha", alloc::format!("must be >= 0, got {alpha}")));
        }
        let mut minima = Vec::new();
        for e in self.local_minima() {
            let rep = match e {
                Extremum::Strict(v) => {
                    let i = self.penrose_integral(v, cfg)?;
                    MinimumReport {
                        vbar: v,
                        interval: (v, v),
                        integral: i,
                        satisfies: i > alpha,
                    }
                }
                Extremum::Flat(a, b) => {
                    let mid = 0.5 * (a + b);
                    let mut worst = f64::INFINITY;
                    for v in [a, mid, b] {
                        worst = worst.min(self.penrose_integral(v, cfg)?);
                    }
                    MinimumReport {
                        vbar: mid,
                        interval: (a, b),
                        integral: worst,
                        satisfies: worst > alpha,
                    }
                }
            };
            minima.push(rep);
        }
        let unstable = minima.iter().any(|m| m.satisfies);
        Ok(PenroseReport {
            alpha,
            minima,
            unstable,
            delta_condition: self.check_delta_condition(),
            delta_prime: self.check_delta_prime(&DEFAULT_DELTAS, DEFAULT_DELTA_N_MAX)?,
        })
    }

    pub fn check_penrose(&self, cfg: &QuadConfig) -> Result<PenroseReport> {
        self.check_alpha_penrose(0.0, cfg)
    }

    /// `sup |μ′(v)| / ((1 + |v|) μ(v))` over the scan grid of the support.
    pub fn check_delta_condition(&self) -> DeltaReport {
        let mut sup = 0.0f64;
        for v in self.scan_grid() {
            let (m, d, _) = self.raw(v);
            if !(m > 0.0) {
                return DeltaReport {
                    holds: false,
                    sup: f64::INFINITY,
                    zero_at: Some(v),
                };
            }
            sup = sup.max(d.abs() / ((1.0 + v.abs()) * m));
        }
        DeltaReport {
            holds: sup.is_finite() && sup < DELTA_SUP_LIMIT,
            sup,
            zero_at: None,
        }
    }

    /// `W_δ` as merged intervals: the √δ-neighbourhood of
    /// `V_δ = {|μ′| / (1 + |v|) > μ / δ}`.
    pub fn w_delta(&self, delta: f64) -> Vec<(f64, f64)> {
        let (lo, hi) = self.support();
        let r = delta.sqrt();
        let h = ((hi - lo) / SCAN_CELLS as f64).min(r / 8.0).max((hi - lo) / (1 << 20) as f64);
        let n = ((hi - lo) / h).ceil() as usize;
        let mut pts: Vec<f64> = (0..=n).map(|i| (lo + i as f64 * h).min(hi)).collect();
        // V_δ can be much thinner than the grid next to zeros and local minima
        // of μ, so sample geometrically closer to those points
        let mus: Vec<f64> = pts.iter().map(|&v| self.raw(v).0).collect();
        let mut extra = Vec::new();
        for i in 0..pts.len() {
            let left = if i > 0 { mus[i - 1] } else { f64::INFINITY };
            let right = if i + 1 < mus.len() { mus[i + 1] } else { f64::INFINITY };
            let dip = mus[i] <= left && mus[i] <= right;
            let edge = mus[i] == 0.0 && (left > 0.0 && left.is_finite() || right > 0.0 && right.is_finite());
            if dip || edge {
                for k in 0..REFINE_POINTS {
                    let d = h * (1e-14f64).powf(k as f64 / REFINE_POINTS as f64);
                    extra.push(pts[i] - d);
                    extra.push(pts[i] + d);
                }
            }
        }
        pts.extend(extra.into_iter().filter(|v| *v > lo && *v < hi));
        pts.sort_by(f64::total_cmp);
        pts.dedup();
        let inside = |v: f64| {
            let (m, d, _) = self.raw(v);
            d.abs() / (1.0 + v.abs()) > m / delta
        };
        let edge = |mut a: f64, mut b: f64| {
            // a and b straddle the boundary of V_δ
            let ia = inside(a);
            for _ in 0..80 {
                let m = 0.5 * (a + b);
                if m <= a || m >= b {
                    break;
                }
                if inside(m) == ia {
                    a = m;
                } else {
                    b = m;
                }
            }
            0.5 * (a + b)
        };
        let mut v_set: Vec<(f64, f64)> = Vec::new();
        let mut start: Option<f64> = None;
        let mut prev = pts[0];
        let mut prev_in = inside(prev);
        if prev_in {
            start = Some(prev);
        }
        for &v in &pts[1..] {
            let cur = inside(v);
            if cur && !prev_in {
                start = Some(edge(prev, v));
            } else if !cur && prev_in {
                v_set.push((start.take().unwrap_or(prev), edge(prev, v)));
            }
            prev = v;
            prev_in = cur;
        }
        if let Some(s) = start {
            v_set.push((s, hi));
        }
        let mut w: Vec<(f64, f64)> = Vec::new();
        for (a, b) in v_set {
            let (a, b) = (a - r, b + r);
            match w.last_mut() {
                Some(last) if a <= last.1 => last.1 = last.1.max(b),
                _ => w.push((a, b)),
            }
        }
        w
    }

    /// Finite-δ proxy for the δ′-condition. Each order `n ≤ n_max` passes
    /// when `δ⁻ⁿ ∫_{W_δ} |μ′|` is identically zero along the list or its last
    /// value has dropped below 1% of its maximum.
    pub fn check_delta_prime(&self, deltas: &[f64], n_max: u32) -> Result<DeltaPrimeReport> {
        if deltas.is_empty() || deltas.iter().any(|d| !(*d > 0.0)) || deltas.windows(2).any(|w| !(w[1] < w[0])) {
            return Err(Error::param("deltas", "must be positive and strictly decreasing"));
        }
        let (lo, hi) = self.support();
        let cfg = QuadConfig {
            abs_tol: 0.0,
            rel_tol: 1e-8,
            max_subdivisions: 2000,
        };
        let mut integrals = Vec::with_capacity(deltas.len());
        for &d in deltas {
            let mut total = 0.0;
            for (a, b) in self.w_delta(d) {
                let (a, b) = (a.max(lo), b.min(hi));
                if b > a {
                    total += integrate(|v: f64| self.raw(v).1.abs(), a, b, &cfg)?.value;
                }
            }
            integrals.push(total);
        }
        let trend: Vec<(u32, bool)> = (0..=n_max)
            .map(|n| {
                let s: Vec<f64> = deltas.iter().zip(&integrals).map(|(d, i)| i / d.powi(n as i32)).collect();
                let max = s.iter().fold(0.0f64, |m, x| m.max(*x));
                let ok = max == 0.0 || s[s.len() - 1] <= 1e-2 * max;
                (n, ok)
            })
            .collect();
        let holds_heuristic = trend.iter().all(|t| t.1);
        Ok(DeltaPrimeReport {
            deltas: deltas.to_vec(),
            integrals,
            trend,
            holds_heuristic,
        })
    }
}
