//! Single-hump symmetric profiles μ(v) = φ(−|v − v̄|²/2) and the Casimir
//! integrand Q with Q′ = φ⁻¹.

use alloc::vec::Vec;

#[allow(unused_imports)]
use num_traits::Float;

use super::Profile;
use crate::error::SStabilityCondition;
use crate::interp::Hermite;
use crate::quadrature::{integrate, integrate_with_breaks, QuadConfig};
use crate::{Error, Result};

/// Symmetry residual allowed, relative to μ(v̄).
pub const SYMMETRY_TOL: f64 = 1e-8;
/// Allowed slope of the wrong sign, relative to max |μ′|.
pub const MONOTONICITY_TOL: f64 = 1e-10;
const CHECK_POINTS: usize = 4096;
const PHI_TABLE: usize = 256;
/// Velocity-offset nodes of the Casimir table.
pub const CASIMIR_NODES: usize = 4096;

#[derive(Debug, Clone, PartialEq)]
pub struct SStableProfile {
    base: Profile,
    vbar: f64,
    temperature: f64,
    half_width: f64,
    symmetry_residual: f64,
    monotonicity_residual: f64,
    phi_table: Vec<(f64, f64)>,
}

impl SStableProfile {
    /// Locates v̄ and checks the four conditions; fails on the first one
    /// violated beyond tolerance.
    pub fn new(base: &Profile) -> Result<Self> {
        let (lo, hi) = base.support();
        let maxima = base.local_maxima();
        let vbar = match maxima.as_slice() {
            [v] => *v,
            _ => {
                return Err(Error::NotSStable {
                    condition: SStabilityCondition::Monotonicity,
                    residual: maxima.len() as f64,
                })
            }
        };
        let top = base.raw(vbar).0;
        if !(top.is_finite() && top > 0.0) {
            return Err(Error::NotSStable {
                condition: SStabilityCondition::Continuity,
                residual: top,
            });
        }
        let half_width = (vbar - lo).max(hi - vbar);
        let mut sym = 0.0f64;
        let mut mono = 0.0f64;
        let mut dmax = 0.0f64;
        let mut wrong = 0.0f64;
        for i in 0..=CHECK_POINTS {
            let w = half_width * i as f64 / CHECK_POINTS as f64;
            let (mp, dp, _) = base.raw(vbar + w);
            let (mm, dm, _) = base.raw(vbar - w);
            sym = sym.max((mp - mm).abs() / top);
            dmax = dmax.max(dp.abs()).max(dm.abs());
            wrong = wrong.max(dp).max(-dm);
        }
        if dmax > 0.0 {
            mono = wrong.max(0.0) / dmax;
        }
        if mono > MONOTONICITY_TOL {
            return Err(Error::NotSStable {
                condition: SStabilityCondition::Monotonicity,
                residual: mono,
            });
        }
        if sym > SYMMETRY_TOL {
            return Err(Error::NotSStable {
                condition: SStabilityCondition::Symmetry,
                residual: sym,
            });
        }
        let second = base.integrate_against(|v| (v - vbar) * (v - vbar), &QuadConfig::default())?;
        if !second.is_finite() {
            return Err(Error::NotSStable {
                condition: SStabilityCondition::FiniteEnergy,
                residual: second,
            });
        }
        let umin = -0.5 * half_width * half_width;
        let phi_table = (0..PHI_TABLE)
            .map(|k| {
                // log-spaced from -1e-8 down to umin
                let x = k as f64 / (PHI_TABLE - 1) as f64;
                let u = -(1e-8f64.ln() * (1.0 - x) + (-umin).ln() * x).exp();
                (u, base.raw(vbar + (-2.0 * u).sqrt()).0)
            })
            .collect();
        Ok(Self {
            base: base.clone(),
            vbar,
            temperature: 0.5 * second,
            half_width,
            symmetry_residual: sym,
            monotonicity_residual: mono,
            phi_table,
        })
    }

    pub fn base(&self) -> &Profile {
        &self.base
    }

    pub fn vbar(&self) -> f64 {
        self.vbar
    }

    /// `T = ½ ∫ μ |v − v̄|² dv`.
    pub fn temperature(&self) -> f64 {
        self.temperature
    }

    pub fn symmetry_residual(&self) -> f64 {
        self.symmetry_residual
    }

    pub fn monotonicity_residual(&self) -> f64 {
        self.monotonicity_residual
    }

    /// Offset from v̄ beyond which μ is negligible.
    pub fn half_width(&self) -> f64 {
        self.half_width
    }

    /// `φ(u) = μ(v̄ + √(−2u))` for `u ≤ 0`.
    pub fn phi(&self, u: f64) -> f64 {
        if u > 0.0 {
            return f64::NAN;
        }
        self.base.raw(self.vbar + (-2.0 * u).sqrt()).0
    }

    /// `(u, φ(u))` on a log-spaced grid of `u ∈ [−w²/2, −1e−8]`, increasing φ
    /// order reversed (u decreasing).
    pub fn phi_table(&self) -> &[(f64, f64)] {
        &self.phi_table
    }

    /// `∫_{−∞}^0 φ(u) √(−u) du = 2^{−1/2} ∫_0^∞ μ(v̄ + w) w² dw`.
    pub fn phi_sqrt_integral(&self, cfg: &QuadConfig) -> Result<f64> {
        let v = self.vbar;
        let q = integrate_with_breaks(
            |w: f64| {
                let m = self.base.raw(v + w).0;
                m * w * w
            },
            &[0.0, 0.5 * self.half_width, self.half_width],
            cfg,
        )?;
        Ok(q.value / core::f64::consts::SQRT_2)
    }
}

/// Tabulated convex Q on `[0, s_max]` with `Q(0) = 0` and `Q′ = φ⁻¹` on
/// `(0, φ(0)]`, continued linearly past `a = φ(0)`.
///
/// Inside the range of φ the table is a cubic Hermite interpolant in
/// `t = ln s`, with nodes at `s_i = μ(v̄ + w_i)` for uniform `w_i` and the
/// exact slopes `dQ/dt = s φ⁻¹(s)`. Q′ has its own Hermite table in `t`.
#[derive(Debug, Clone, PartialEq)]
pub struct CasimirQ {
    vbar: f64,
    a: f64,
    s_max: f64,
    s_min: f64,
    q_min: f64,
    q_a: f64,
    ext_slope: f64,
    table: Hermite,
    u_table: Hermite,
    nodes_s: Vec<f64>,
    nodes_u: Vec<f64>,
    nodes_q: Vec<f64>,
}

impl CasimirQ {
    pub fn new(sp: &SStableProfile, s_max: f64) -> Result<Self> {
        Self::with_nodes(sp, s_max, CASIMIR_NODES)
    }

    pub fn with_nodes(sp: &SStableProfile, s_max: f64, nodes: usize) -> Result<Self> {
        let a = sp.phi(0.0);
        if !(s_max > a) {
            return Err(Error::param("s_max", alloc::format!("must exceed phi(0) = {a}, got {s_max}")));
        }
        if nodes < 8 {
            return Err(Error::param("nodes", "need at least 8 table nodes"));
        }
        let base = &sp.base;
        let v = sp.vbar;
        let wmax = sp.half_width;
        let dw = wmax / nodes as f64;
        let cfg = QuadConfig::with_tol(1e-300, 1e-13);
        // Φ(w_i) = ∫_{w_i}^{wmax} μ(v̄ + w) w dw, accumulated from the far end
        let mut phi_cum = alloc::vec![0.0; nodes + 1];
        for i in (0..nodes).rev() {
            let (w0, w1) = (i as f64 * dw, (i + 1) as f64 * dw);
            let cell = integrate(|w: f64| base.raw(v + w).0 * w, w0, w1, &cfg)?.value;
            phi_cum[i] = phi_cum[i + 1] + cell;
        }
        let mut ts = Vec::new();
        let mut qs = Vec::new();
        let mut ds = Vec::new();
        let mut dus = Vec::new();
        let mut nodes_s = Vec::new();
        let mut nodes_u = Vec::new();
        let mut nodes_q = Vec::new();
        // walk from the tail inwards so ln s increases
        for i in (0..=nodes).rev() {
            let w = i as f64 * dw;
            let s = base.raw(v + w).0;
            if !(s > 1e-300) {
                continue;
            }
            let t = s.ln();
            if let Some(&last) = ts.last() {
                if !(t > last) {
                    continue;
                }
            }
            let u = -0.5 * w * w;
            let q = u * s - phi_cum[i];
            ts.push(t);
            qs.push(q);
            ds.push(s * u);
            let (_, d1, d2) = base.raw(v + w);
            // du/dt = -w μ / μ′, with the limit -μ / μ″ at the top
            let dudt = if w == 0.0 { -s / d2 } else { -w * s / d1 };
            dus.push(dudt);
            nodes_s.push(s);
            nodes_u.push(u);
            nodes_q.push(q);
        }
        if ts.len() < 4 {
            return Err(Error::Grid("Casimir table has fewer than 4 usable nodes".into()));
        }
        let s_min = nodes_s[0];
        let q_min = nodes_q[0];
        let q_a = *nodes_q.last().unwrap_or(&0.0);
        let m2 = base.raw(v).2;
        let n = nodes_s.len();
        let ext_slope = if m2 < 0.0 && (-1.0 / m2).is_finite() {
            -1.0 / m2
        } else {
            (nodes_u[n - 1] - nodes_u[n - 2]) / (nodes_s[n - 1] - nodes_s[n - 2])
        };
        for i in 0..dus.len() {
            if !dus[i].is_finite() {
                let (j, k) = if i == 0 { (0, 1) } else if i + 1 == dus.len() { (i - 1, i) } else { (i - 1, i + 1) };
                dus[i] = (nodes_u[k] - nodes_u[j]) / (ts[k] - ts[j]);
            }
        }
        let u_table = Hermite::new(ts.clone(), nodes_u.clone(), dus)?;
        let table = Hermite::new(ts, qs, ds)?;
        Ok(Self {
            vbar: v,
            a,
            s_max,
            s_min,
            q_min,
            q_a,
            ext_slope,
            table,
            u_table,
            nodes_s,
            nodes_u,
            nodes_q,
        })
    }

    /// `a = φ(0) = max μ`.
    pub fn a(&self) -> f64 {
        self.a
    }

    pub fn s_max(&self) -> f64 {
        self.s_max
    }

    pub fn vbar(&self) -> f64 {
        self.vbar
    }

    /// Slope of Q′ on `(a, s_max]`.
    pub fn extension_slope(&self) -> f64 {
        self.ext_slope
    }

    /// Table nodes `(s, Q′(s), Q(s))` in increasing `s`.
    pub fn nodes(&self) -> impl Iterator<Item = (f64, f64, f64)> + '_ {
        self.nodes_s
            .iter()
            .zip(&self.nodes_u)
            .zip(&self.nodes_q)
            .map(|((s, u), q)| (*s, *u, *q))
    }

    fn check(&self, s: f64) -> Result<()> {
        if s >= 0.0 && s <= self.s_max {
            Ok(())
        } else {
            Err(Error::CasimirRange { s, s_max: self.s_max })
        }
    }

    /// `Q(s)` without the range check.
    pub(crate) fn value_raw(&self, s: f64) -> f64 {
        if s <= 0.0 {
            0.0
        } else if s < self.s_min {
            self.q_min * (s / self.s_min)
        } else if s <= self.a {
            self.table.eval(s.ln())
        } else {
            let d = s - self.a;
            self.q_a + 0.5 * self.ext_slope * d * d
        }
    }

    pub(crate) fn derivative_raw(&self, s: f64) -> f64 {
        if s <= 0.0 {
            f64::NEG_INFINITY
        } else if s < self.s_min {
            self.q_min / self.s_min
        } else if s <= self.a {
            self.u_table.eval(s.ln())
        } else {
            self.ext_slope * (s - self.a)
        }
    }

    pub fn value(&self, s: f64) -> Result<f64> {
        self.check(s)?;
        Ok(self.value_raw(s))
    }

    pub fn derivative(&self, s: f64) -> Result<f64> {
        self.check(s)?;
        Ok(self.derivative_raw(s))
    }

    /// True if Q′ is strictly increasing over the table nodes.
    pub fn is_convex(&self) -> bool {
        self.nodes_u.windows(2).all(|w| w[1] > w[0]) && self.ext_slope > 0.0
    }

    /// `∫ Q(μ(v)) dv` over the support of μ.
    pub fn integral_of_q_mu(&self, sp: &SStableProfile, cfg: &QuadConfig) -> Result<f64> {
        let v = sp.vbar;
        let w = sp.half_width;
        let q = integrate_with_breaks(
            |x: f64| self.value_raw(sp.base.raw(x).0),
            &[v - w, v - 0.5 * w, v, v + 0.5 * w, v + w],
            cfg,
        )?;
        Ok(q.value)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use core::f64::consts::PI;

    fn maxwell(t: f64) -> SStableProfile {
        SStableProfile::new(&Profile::maxwellian(t, 0.3).unwrap()).unwrap()
    }

    #[test]
    fn maxwellian_vbar_and_phi() {
        let sp = maxwell(0.8);
        assert!((sp.vbar() - 0.3).abs() < 1e-10);
        assert_relative_eq!(sp.temperature(), 0.4, epsilon = 1e-12);
        for u in [-0.01, -0.5, -3.0] {
            let exact = (u / 0.8).exp() / (2.0 * PI * 0.8).sqrt();
            assert_relative_eq!(sp.phi(u), exact, max_relative = 1e-9);
        }
        assert!(sp.phi_table().windows(2).all(|w| w[1].0 < w[0].0 && w[1].1 <= w[0].1));
    }

    #[test]
    fn phi_sqrt_integral_maxwellian() {
        let t = 1.7;
        let sp = maxwell(t);
        let v = sp.phi_sqrt_integral(&QuadConfig::default()).unwrap();
        assert_relative_eq!(v, t / (2.0 * core::f64::consts::SQRT_2), max_relative = 1e-10);
    }

    #[test]
    fn two_stream_fails_monotonicity() {
        let p = Profile::two_stream(0.25, 2.0, [0.5, 0.5]).unwrap();
        match SStableProfile::new(&p) {
            Err(Error::NotSStable { condition, .. }) => assert_eq!(condition, SStabilityCondition::Monotonicity),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn bump_on_tail_without_dip_fails_symmetry() {
        // small skewing bump that keeps a single maximum
        let p = Profile::bump_on_tail(1.0, 0.05, 1.0, 1.0).unwrap();
        match SStableProfile::new(&p) {
            Err(Error::NotSStable { condition, .. }) => assert_eq!(condition, SStabilityCondition::Symmetry),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn maxwellian_q_is_entropy_like() {
        let t = 1.0;
        let sp = maxwell(t);
        let q = CasimirQ::new(&sp, 1.0).unwrap();
        let c = (2.0 * PI * t).sqrt().ln();
        for s in [1e-6, 1e-3, 0.05, 0.2, 0.39] {
            let exact = t * s * s.ln() + t * s * c - t * s;
            assert!((q.value(s).unwrap() - exact).abs() < 1e-10, "s = {s}: {} vs {exact}", q.value(s).unwrap());
            let dexact = t * (s.ln() + c);
            assert!((q.derivative(s).unwrap() - dexact).abs() < 1e-7, "s = {s}: {} vs {dexact}", q.derivative(s).unwrap());
        }
        assert_eq!(q.value(0.0).unwrap(), 0.0);
        assert!(q.is_convex());
    }

    #[test]
    fn q_prime_inverts_phi() {
        let sp = maxwell(0.6);
        let q = CasimirQ::new(&sp, 2.0).unwrap();
        assert!((q.derivative(sp.phi(-1.0)).unwrap() + 1.0).abs() < 1e-8);
        let cb = SStableProfile::new(&Profile::compact_bump(-1.0, 1.0).unwrap()).unwrap();
        let qc = CasimirQ::new(&cb, 5.0).unwrap();
        for u in [-0.01, -0.1, -0.3] {
            assert!((qc.derivative(cb.phi(u)).unwrap() - u).abs() < 1e-6, "u = {u}");
        }
        assert!(qc.is_convex());
    }

    #[test]
    fn extension_is_continuous_and_increasing() {
        let sp = maxwell(1.0);
        let q = CasimirQ::new(&sp, 3.0).unwrap();
        let a = q.a();
        let below = q.derivative(a * (1.0 - 1e-9)).unwrap();
        let above = q.derivative(a * (1.0 + 1e-9)).unwrap();
        assert!(below.abs() < 1e-6 && above.abs() < 1e-6);
        assert!(q.derivative(2.0).unwrap() > 0.0);
        assert_relative_eq!(q.extension_slope(), 1.0 / (a * 1.0), max_relative = 1e-10);
    }

    #[test]
    fn range_errors() {
        let sp = maxwell(1.0);
        assert!(CasimirQ::new(&sp, 0.1).is_err());
        let q = CasimirQ::new(&sp, 1.0).unwrap();
        assert!(matches!(q.value(1.5), Err(Error::CasimirRange { .. })));
        assert!(matches!(q.value(-0.1), Err(Error::CasimirRange { .. })));
    }

    #[test]
    fn trapezoid_of_q_prime_reproduces_q() {
        let sp = maxwell(1.0);
        let q = CasimirQ::new(&sp, 1.0).unwrap();
        // refine each table interval so the trapezoid error is negligible
        let nodes: Vec<(f64, f64, f64)> = q.nodes().collect();
        let mut acc = nodes[0].2;
        let mut worst = 0.0f64;
        for w in nodes.windows(2) {
            let (s0, s1) = (w[0].0, w[1].0);
            let m = 512;
            let h = (s1 - s0) / m as f64;
            let mut part = 0.0;
            for k in 0..m {
                let a = s0 + k as f64 * h;
                part += 0.5 * h * (q.derivative_raw(a) + q.derivative_raw(a + h));
            }
            acc += part;
            worst = worst.max((acc - w[1].2).abs());
        }
        assert!(worst < 1e-10, "worst {worst}");
    }

    #[test]
    fn integral_of_q_mu_maxwellian() {
        // ∫ Q(μ) dv = -3 T / 2 for a Maxwellian with this Q
        for t in [0.5, 1.0, 2.0] {
            let sp = maxwell(t);
            let q = CasimirQ::new(&sp, 2.0).unwrap();
            let v = q.integral_of_q_mu(&sp, &QuadConfig::default()).unwrap();
            assert_relative_eq!(v, -1.5 * t, max_relative = 1e-9);
        }
    }
}
