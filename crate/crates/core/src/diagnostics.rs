//! Functionals evaluated on phase-space snapshots.

use alloc::string::ToString;
use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::PI;

use num_complex::Complex64;
#[allow(unused_imports)]
use num_traits::Float;

use crate::fft::{signed_index, Fft};
use crate::interp::SplineShifter;
use crate::profile::{CasimirQ, SStableProfile};
use crate::solver::{DistributionField, FieldState, ModelKind, PhaseGrid};
use crate::{Error, Result};

/// Orders of the weak-norm proxies written per record.
pub const PROXY_ORDERS: [u32; 3] = [0, 1, 2];
/// Density that a velocity shift may push past `vmax`.
pub const RESOLUTION_FLOOR: f64 = 1e-10;
/// Minimum number of samples in a growth-fit window.
pub const MIN_FIT_POINTS: usize = 8;

#[derive(Debug, Clone, PartialEq)]
pub struct DiagnosticsRecord {
    pub t: f64,
    pub mass: f64,
    pub momentum: f64,
    pub kinetic: f64,
    /// `(ε²/2) ∫ (∂ₓV)²`.
    pub potential_field: f64,
    /// `(α/2) ∫ V²`, zero outside the ion model.
    pub potential_screen: f64,
    pub h_q: f64,
    pub l_eps: f64,
    pub l_o_eps: f64,
    pub rho_l1: f64,
    pub eps_e_l1: f64,
    /// Pairing proxies for `r = 0, 1, 2`.
    pub weak_norm_proxies: [f64; 3],
    pub clipped_mass: f64,
    pub osc_residual: f64,
}

impl DiagnosticsRecord {
    pub fn energy(&self) -> f64 {
        self.kinetic + self.potential_field + self.potential_screen
    }
}

/// `Q′(μ(v)) = −|v − v̄|²/2`, clamped at the edge of a compact support.
fn q_prime_of_mu(sp: &SStableProfile, v: f64) -> f64 {
    let w = (v - sp.vbar()).abs().min(sp.half_width());
    -0.5 * w * w
}

/// `μ` at the velocity nodes of `grid`.
pub fn profile_samples(sp: &SStableProfile, grid: &PhaseGrid) -> Vec<f64> {
    (0..grid.nv).map(|j| sp.base().raw(grid.v(j)).0).collect()
}

/// `H_Q(f) = ∬ [Q(f) − Q(μ) − Q′(μ)(f − μ)]`.
pub fn casimir_h(f: &DistributionField, sp: &SStableProfile, q: &CasimirQ) -> Result<f64> {
    let g = f.grid;
    let mu = profile_samples(sp, &g);
    let qmu: Vec<f64> = mu.iter().map(|m| q.value(*m)).collect::<Result<_>>()?;
    let dq: Vec<f64> = (0..g.nv).map(|j| q_prime_of_mu(sp, g.v(j))).collect();
    let mut s = 0.0;
    for ix in 0..g.nx {
        for (iv, &fv) in f.row(ix).iter().enumerate() {
            s += q.value(fv)? - qmu[iv] - dq[iv] * (fv - mu[iv]);
        }
    }
    Ok(s * g.cell())
}

/// Both sides of `‖f − μ‖²_{L¹} ≤ 2 m H_Q / T` for a Maxwellian of
/// temperature `T` and a state of mass `m`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CkpReport {
    pub lhs: f64,
    pub rhs: f64,
    pub holds: bool,
}

pub fn ckp_check(f: &DistributionField, mu: &[f64], h_q: f64, temperature: f64, slack: f64) -> CkpReport {
    let g = f.grid;
    let mut l1 = 0.0;
    for ix in 0..g.nx {
        l1 += f.row(ix).iter().zip(mu).map(|(a, b)| (a - b).abs()).sum::<f64>();
    }
    l1 *= g.cell();
    let lhs = l1 * l1;
    let rhs = 2.0 * f.mass() * h_q / temperature;
    CkpReport {
        lhs,
        rhs,
        holds: lhs <= rhs + slack,
    }
}

/// `(ε²/2) ∫ E²` and `(α/2) ∫ V²`.
pub fn field_energies(fields: &FieldState, model: &ModelKind, dx: f64) -> (f64, f64) {
    let eps = model.eps();
    let pf = 0.5 * eps * eps * fields.e.iter().map(|e| e * e).sum::<f64>() * dx;
    let ps = 0.5 * model.alpha() * fields.v.iter().map(|v| v * v).sum::<f64>() * dx;
    (pf, ps)
}

/// `H_Q(f) + (ε²/2) ∫ (∂ₓV)² + (α/2) ∫ V²`.
pub fn modulated_energy(
    f: &DistributionField,
    fields: &FieldState,
    model: &ModelKind,
    sp: &SStableProfile,
    q: &CasimirQ,
) -> Result<f64> {
    let (pf, ps) = field_energies(fields, model, f.grid.dx());
    Ok(casimir_h(f, sp, q)? + pf + ps)
}

/// A periodic potential known through its samples on the x grid.
#[derive(Debug, Clone, PartialEq)]
pub struct PeriodicPotential {
    lx: f64,
    coeffs: Vec<Complex64>,
}

impl PeriodicPotential {
    pub fn from_samples(values: &[f64], lx: f64) -> Self {
        let fft = Fft::new(values.len());
        let mut coeffs: Vec<Complex64> = values.iter().map(|v| Complex64::new(*v, 0.0)).collect();
        fft.forward(&mut coeffs);
        Self { lx, coeffs }
    }

    pub fn len(&self) -> usize {
        self.coeffs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.coeffs.is_empty()
    }

    /// `∂ₓ^order V₀(x_i − shift)` on the sample nodes.
    pub fn derivative_shifted(&self, order: u32, shift: f64) -> Vec<f64> {
        let n = self.coeffs.len();
        let fft = Fft::new(n);
        let mut buf = self.coeffs.clone();
        for (k, c) in buf.iter_mut().enumerate() {
            let kk = 2.0 * PI * signed_index(k, n) as f64 / self.lx;
            if order % 2 == 1 && n > 1 && k == n / 2 {
                *c = Complex64::new(0.0, 0.0);
                continue;
            }
            *c *= Complex64::new(0.0, kk).powu(order) * Complex64::from_polar(1.0, -kk * shift);
        }
        fft.inverse(&mut buf);
        buf.iter().map(|c| c.re).collect()
    }

    pub fn sup_derivative(&self, order: u32) -> f64 {
        self.derivative_shifted(order, 0.0).iter().fold(0.0, |m, x| m.max(x.abs()))
    }
}

/// `f(x, v − s(x))` by cubic interpolation in v.
pub fn shift_velocity(f: &DistributionField, s: &[f64]) -> Result<DistributionField> {
    let g = f.grid;
    let dv = g.dv();
    let mut out = f.clone();
    let mut sh = SplineShifter::new(g.nv);
    for (ix, row) in out.values.chunks_exact_mut(g.nv).enumerate() {
        let cells = (s[ix].abs() / dv).ceil() as usize;
        let near = row[..cells.min(g.nv)]
            .iter()
            .chain(&row[g.nv.saturating_sub(cells)..])
            .fold(0.0f64, |m, x| m.max(x.abs()));
        if near > RESOLUTION_FLOOR {
            return Err(Error::Resolution(alloc::format!(
                "velocity shift {:.3e} carries density {near:.3e} across vmax = {}",
                s[ix],
                g.vmax
            )));
        }
        sh.shift_zero(row, s[ix] / dv);
        for x in row.iter_mut() {
            *x = x.max(0.0);
        }
    }
    Ok(out)
}

/// `ℒ^O_ε(t) = H_Q[f(t, x, v − ∂ₓV₀(x − v̄t) sin(t/ε))]
/// + ½ ∫ [ε ∂ₓV − ∂ₓV₀(x − v̄t) cos(t/ε)]²`.
pub fn filtered_energy(
    f: &DistributionField,
    fields: &FieldState,
    eps: f64,
    v0: &PeriodicPotential,
    sp: &SStableProfile,
    q: &CasimirQ,
) -> Result<f64> {
    let t = f.time;
    let dv0 = v0.derivative_shifted(1, sp.vbar() * t);
    let (sn, cs) = (t / eps).sin_cos();
    let s: Vec<f64> = dv0.iter().map(|d| d * sn).collect();
    let shifted = shift_velocity(f, &s)?;
    let h = casimir_h(&shifted, sp, q)?;
    let field: f64 = fields
        .e
        .iter()
        .zip(&dv0)
        .map(|(e, d)| {
            let r = -eps * e - d * cs;
            r * r
        })
        .sum::<f64>()
        * f.grid.dx();
    Ok(h + 0.5 * field)
}

/// `𝒬 = ∬ (|Q(f)| + Q(f)²/f)`, with the second term zero where `f = 0`.
pub fn q_moment(f: &DistributionField, q: &CasimirQ) -> Result<f64> {
    let mut s = 0.0;
    for &x in &f.values {
        let v = q.value(x)?;
        s += v.abs();
        if x > 0.0 {
            s += v * v / x;
        }
    }
    Ok(s * f.grid.cell())
}

/// `K = C (1 + ‖∂ₓₓV₀‖²_∞)(1 + ‖∂ₓₓₓV₀‖_∞ / ‖∂ₓₓV₀‖_∞)`.
pub fn k_constant(d2_sup: f64, d3_sup: f64, c: f64) -> f64 {
    let ratio = if d2_sup > 0.0 { d3_sup / d2_sup } else { 0.0 };
    c * (1.0 + d2_sup * d2_sup) * (1.0 + ratio)
}

/// Langmuir-oscillation filter at one instant.
#[derive(Debug, Clone, PartialEq)]
pub struct OscillationState {
    pub t: f64,
    pub j: Vec<f64>,
    pub eps_v: Vec<f64>,
    pub o: Vec<Complex64>,
    pub u: Vec<Complex64>,
    pub target: Vec<Complex64>,
    /// `‖U − target‖_{L²}`.
    pub residual: f64,
}

/// `O = J + iεV`, `U = e^{−it/ε} O`, target `i V₀(x − v̄t)`.
pub fn oscillation_filter(
    fields: &FieldState,
    eps: f64,
    t: f64,
    v0: Option<&PeriodicPotential>,
    vbar: f64,
    dx: f64,
) -> OscillationState {
    let n = fields.v.len();
    let eps_v: Vec<f64> = fields.v.iter().map(|v| eps * v).collect();
    let o: Vec<Complex64> = fields.jpot.iter().zip(&eps_v).map(|(j, v)| Complex64::new(*j, *v)).collect();
    let rot = Complex64::from_polar(1.0, -t / eps);
    let u: Vec<Complex64> = o.iter().map(|z| rot * z).collect();
    let target: Vec<Complex64> = match v0 {
        Some(p) => p.derivative_shifted(0, vbar * t).into_iter().map(|x| Complex64::new(0.0, x)).collect(),
        None => vec![Complex64::new(0.0, 0.0); n],
    };
    let residual = (u.iter().zip(&target).map(|(a, b)| (a - b).norm_sqr()).sum::<f64>() * dx).sqrt();
    OscillationState {
        t,
        j: fields.jpot.clone(),
        eps_v,
        o,
        u,
        target,
        residual,
    }
}

fn derivative_fd(u: &[f64], h: f64) -> Vec<f64> {
    let n = u.len();
    if n < 2 {
        return vec![0.0; n];
    }
    (0..n)
        .map(|i| {
            if i == 0 {
                (u[1] - u[0]) / h
            } else if i == n - 1 {
                (u[n - 1] - u[n - 2]) / h
            } else {
                (u[i + 1] - u[i - 1]) / (2.0 * h)
            }
        })
        .collect()
}

fn sup(u: &[f64]) -> f64 {
    u.iter().fold(0.0, |m, x| m.max(x.abs()))
}

/// `‖ℓ‖_{W^{k,∞}} = max_{j ≤ k} ‖ℓ^{(j)}‖_∞` by finite differences.
pub fn w_inf_norm(ell: &[f64], k: u32, h: f64) -> f64 {
    let mut d = ell.to_vec();
    let mut m = sup(&d);
    for _ in 0..k {
        d = derivative_fd(&d, h);
        m = m.max(sup(&d));
    }
    m
}

/// `|⟨g, ℓ′⟩| / ‖ℓ‖_{W^{r+1,∞}}`, a lower bound for `‖g‖_{W^{−r,1}}`.
pub fn weak_norm_proxy(g: &[f64], r: u32, ell: &[f64], h: f64) -> f64 {
    let norm = w_inf_norm(ell, r + 1, h);
    if norm == 0.0 {
        return 0.0;
    }
    let dl = derivative_fd(ell, h);
    (g.iter().zip(&dl).map(|(a, b)| a * b).sum::<f64>() * h).abs() / norm
}

/// x-average of `f − μ` as a velocity profile.
pub fn x_averaged_deviation(f: &DistributionField, mu: &[f64]) -> Vec<f64> {
    let g = f.grid;
    let mut avg = vec![0.0; g.nv];
    for ix in 0..g.nx {
        for (a, x) in avg.iter_mut().zip(f.row(ix)) {
            *a += x;
        }
    }
    avg.iter().zip(mu).map(|(a, m)| a / g.nx as f64 - m).collect()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GrowthFit {
    pub rate: f64,
    pub intercept: f64,
    pub r_squared: f64,
    pub window: (f64, f64),
    pub points: usize,
}

/// Least-squares slope of `ln value` against `t`.
///
/// Without an explicit window, the longest run of samples (before the
/// maximum) with `value ∈ [10 floor, 0.1 max]` is used, where `floor` is the
/// smallest value before the maximum.
pub fn growth_fit(series: &[(f64, f64)], window: Option<(f64, f64)>) -> Result<GrowthFit> {
    let pts: Vec<(f64, f64)> = match window {
        Some((a, b)) => series.iter().copied().filter(|(t, _)| *t >= a && *t <= b).collect(),
        None => auto_window(series),
    };
    if pts.len() < MIN_FIT_POINTS {
        return Err(Error::Fit(alloc::format!(
            "{} points in the window, need at least {MIN_FIT_POINTS}",
            pts.len()
        )));
    }
    if let Some((t, v)) = pts.iter().find(|(_, v)| !(*v > 0.0)) {
        return Err(Error::Fit(alloc::format!("nonpositive value {v} at t = {t}")));
    }
    let n = pts.len() as f64;
    let (st, sy) = pts.iter().fold((0.0, 0.0), |(a, b), (t, v)| (a + t, b + v.ln()));
    let (mt, my) = (st / n, sy / n);
    let (mut stt, mut sty, mut syy) = (0.0, 0.0, 0.0);
    for (t, v) in &pts {
        let (dt, dy) = (t - mt, v.ln() - my);
        stt += dt * dt;
        sty += dt * dy;
        syy += dy * dy;
    }
    if stt == 0.0 {
        return Err(Error::Fit("window has zero time extent".to_string()));
    }
    let rate = sty / stt;
    let r_squared = if syy == 0.0 { 1.0 } else { sty * sty / (stt * syy) };
    Ok(GrowthFit {
        rate,
        intercept: my - rate * mt,
        r_squared,
        window: (pts[0].0, pts[pts.len() - 1].0),
        points: pts.len(),
    })
}

fn auto_window(series: &[(f64, f64)]) -> Vec<(f64, f64)> {
    let Some(imax) = series
        .iter()
        .enumerate()
        .max_by(|a, b| a.1 .1.total_cmp(&b.1 .1))
        .map(|(i, _)| i)
    else {
        return Vec::new();
    };
    let top = series[imax].1;
    let floor = series[..=imax].iter().map(|p| p.1).fold(f64::INFINITY, f64::min);
    let (lo, hi) = (10.0 * floor, 0.1 * top);
    let mut best: (usize, usize) = (0, 0);
    let mut start = None;
    for (i, (_, v)) in series[..=imax].iter().enumerate() {
        if *v >= lo && *v <= hi {
            let s = *start.get_or_insert(i);
            if i + 1 - s > best.1 - best.0 {
                best = (s, i + 1);
            }
        } else {
            start = None;
        }
    }
    series[best.0..best.1].to_vec()
}

/// Evaluates full records along a run.
#[derive(Debug, Clone)]
pub struct Diagnostics {
    pub model: ModelKind,
    pub sp: SStableProfile,
    pub q: CasimirQ,
    pub mu: Vec<f64>,
    /// Test function for the weak-norm proxies.
    pub ell: Vec<f64>,
    pub v0: Option<PeriodicPotential>,
}

impl Diagnostics {
    /// `s_max` is the largest value the Casimir table must accept.
    pub fn new(grid: &PhaseGrid, model: ModelKind, sp: SStableProfile, s_max: f64) -> Result<Self> {
        let q = CasimirQ::new(&sp, s_max)?;
        let mu = profile_samples(&sp, grid);
        Ok(Self {
            model,
            ell: mu.clone(),
            sp,
            q,
            mu,
            v0: None,
        })
    }

    pub fn with_ell(mut self, ell: Vec<f64>) -> Self {
        self.ell = ell;
        self
    }

    pub fn with_v0(mut self, v0: PeriodicPotential) -> Self {
        self.v0 = Some(v0);
        self
    }

    pub fn record(&self, f: &DistributionField, fields: &FieldState, clipped_mass: f64) -> Result<DiagnosticsRecord> {
        let g = f.grid;
        let dx = g.dx();
        let eps = self.model.eps();
        let (pf, ps) = field_energies(fields, &self.model, dx);
        let h_q = casimir_h(f, &self.sp, &self.q)?;
        let l_o_eps = match &self.v0 {
            Some(v0) => filtered_energy(f, fields, eps, v0, &self.sp, &self.q)?,
            None => h_q + pf + ps,
        };
        let dev = x_averaged_deviation(f, &self.mu);
        let mut proxies = [0.0; 3];
        for (p, r) in proxies.iter_mut().zip(PROXY_ORDERS) {
            *p = weak_norm_proxy(&dev, r, &self.ell, g.dv());
        }
        let osc = oscillation_filter(fields, eps, f.time, self.v0.as_ref(), self.sp.vbar(), dx);
        Ok(DiagnosticsRecord {
            t: f.time,
            mass: f.mass(),
            momentum: f.momentum(),
            kinetic: f.kinetic(),
            potential_field: pf,
            potential_screen: ps,
            h_q,
            l_eps: h_q + pf + ps,
            l_o_eps,
            rho_l1: fields.rho.iter().map(|r| (r - 1.0).abs()).sum::<f64>() * dx,
            eps_e_l1: eps * fields.e.iter().map(|e| e.abs()).sum::<f64>() * dx,
            weak_norm_proxies: proxies,
            clipped_mass,
            osc_residual: osc.residual,
        })
    }
}
