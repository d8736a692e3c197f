//! Strang-split semi-Lagrangian integrator for the 1D Vlasov–Poisson family.
//!
//! The phase grid is periodic in x and truncated at `|v| = vmax` with zero
//! inflow. Both advections use cubic B-spline interpolation; the field is
//! solved spectrally.

use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::PI;

use num_complex::Complex64;
#[allow(unused_imports)]
use num_traits::Float;

use crate::dispersion::Eigenmode;
use crate::fft::{signed_index, Fft};
use crate::interp::SplineShifter;
use crate::profile::Profile;
use crate::{Error, Result};

/// Tolerance on `mean(ρ) = 1` for the electron and rescaled models.
pub const SOLVABILITY_TOL: f64 = 1e-10;
/// Relative mass drift above which a step renormalizes.
pub const MASS_DRIFT_TOL: f64 = 1e-12;
/// Negativity (relative to `max f`) counted as a clipping event.
pub const CLIP_THRESHOLD: f64 = 1e-10;

/// Uniform phase grid: `x_i = i Δx` on `[0, Lx)`, cell-centred
/// `v_j = −vmax + (j + ½) Δv`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PhaseGrid {
    pub nx: usize,
    pub nv: usize,
    pub lx: f64,
    pub vmax: f64,
}

impl PhaseGrid {
    pub fn new(nx: usize, nv: usize, lx: f64, vmax: f64) -> Result<Self> {
        if !nx.is_power_of_two() || !nv.is_power_of_two() || nv < 4 {
            return Err(Error::Grid(alloc::format!("Nx = {nx} and Nv = {nv} must be powers of two (Nv >= 4)")));
        }
        if !(lx > 0.0 && lx.is_finite()) || !(vmax > 0.0 && vmax.is_finite()) {
            return Err(Error::Grid(alloc::format!("Lx = {lx} and vmax = {vmax} must be positive")));
        }
        Ok(Self { nx, nv, lx, vmax })
    }

    pub fn dx(&self) -> f64 {
        self.lx / self.nx as f64
    }

    pub fn dv(&self) -> f64 {
        2.0 * self.vmax / self.nv as f64
    }

    pub fn x(&self, i: usize) -> f64 {
        i as f64 * self.dx()
    }

    pub fn v(&self, j: usize) -> f64 {
        -self.vmax + (j as f64 + 0.5) * self.dv()
    }

    pub fn xs(&self) -> Vec<f64> {
        (0..self.nx).map(|i| self.x(i)).collect()
    }

    pub fn vs(&self) -> Vec<f64> {
        (0..self.nv).map(|j| self.v(j)).collect()
    }

    pub fn cell(&self) -> f64 {
        self.dx() * self.dv()
    }

    pub fn len(&self) -> usize {
        self.nx * self.nv
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ModelKind {
    /// `−ε² V″ = ρ − 1`.
    Electron { eps: f64 },
    /// `α V − ε² V″ = ρ − 1`.
    Ion { eps: f64, alpha: f64 },
    /// `−V″ = ρ − 1` on the stretched torus.
    Rescaled,
}

impl ModelKind {
    pub fn validate(&self) -> Result<()> {
        match *self {
            Self::Electron { eps } if !(eps > 0.0 && eps.is_finite()) => Err(Error::param("eps", "must be positive")),
            Self::Ion { eps, .. } if !(eps > 0.0 && eps.is_finite()) => Err(Error::param("eps", "must be positive")),
            Self::Ion { alpha, .. } if !(alpha > 0.0 && alpha.is_finite()) => {
                Err(Error::param("alpha", "must be positive"))
            }
            _ => Ok(()),
        }
    }

    pub fn eps(&self) -> f64 {
        match *self {
            Self::Electron { eps } | Self::Ion { eps, .. } => eps,
            Self::Rescaled => 1.0,
        }
    }

    pub fn alpha(&self) -> f64 {
        match *self {
            Self::Ion { alpha, .. } => alpha,
            _ => 0.0,
        }
    }
}

/// Moments and fields at one instant.
#[derive(Debug, Clone, PartialEq)]
pub struct FieldState {
    pub rho: Vec<f64>,
    pub j: Vec<f64>,
    pub v: Vec<f64>,
    pub e: Vec<f64>,
    pub jbar: f64,
    /// Zero-mean antiderivative of `j − jbar`.
    pub jpot: Vec<f64>,
}

/// Spectral Poisson solver bound to one grid.
#[derive(Debug, Clone)]
pub struct PoissonSolver {
    grid: PhaseGrid,
    fft: Fft,
    buf: Vec<Complex64>,
}

impl PoissonSolver {
    pub fn new(grid: PhaseGrid) -> Self {
        Self {
            grid,
            fft: Fft::new(grid.nx),
            buf: vec![Complex64::new(0.0, 0.0); grid.nx],
        }
    }

    fn wavenumber(&self, k: usize) -> f64 {
        2.0 * PI * signed_index(k, self.grid.nx) as f64 / self.grid.lx
    }

    fn is_nyquist(&self, k: usize) -> bool {
        self.grid.nx > 1 && k == self.grid.nx / 2
    }

    /// Solves for `V`, `E = −∂ₓV` and the current potential.
    pub fn solve(&mut self, rho: &[f64], j: &[f64], model: &ModelKind) -> Result<FieldState> {
        model.validate()?;
        let n = self.grid.nx;
        assert!(rho.len() == n && j.len() == n);
        let mean = rho.iter().sum::<f64>() / n as f64;
        if !matches!(model, ModelKind::Ion { .. }) && (mean - 1.0).abs() > SOLVABILITY_TOL {
            return Err(Error::Solvability { mean });
        }
        let (eps, alpha) = (model.eps(), model.alpha());
        for (b, r) in self.buf.iter_mut().zip(rho) {
            *b = Complex64::new(r - mean, 0.0);
        }
        self.fft.forward(&mut self.buf);
        self.buf[0] = Complex64::new(0.0, 0.0);
        for k in 1..n {
            let kk = self.wavenumber(k);
            self.buf[k] /= alpha + eps * eps * kk * kk;
        }
        let vhat = self.buf.clone();
        self.fft.inverse(&mut self.buf);
        let v: Vec<f64> = self.buf.iter().map(|c| c.re).collect();
        for k in 0..n {
            let kk = self.wavenumber(k);
            self.buf[k] = if self.is_nyquist(k) {
                Complex64::new(0.0, 0.0)
            } else {
                -Complex64::new(0.0, kk) * vhat[k]
            };
        }
        self.fft.inverse(&mut self.buf);
        let e: Vec<f64> = self.buf.iter().map(|c| c.re).collect();

        let jbar = j.iter().sum::<f64>() / n as f64;
        for (b, x) in self.buf.iter_mut().zip(j) {
            *b = Complex64::new(x - jbar, 0.0);
        }
        self.fft.forward(&mut self.buf);
        self.buf[0] = Complex64::new(0.0, 0.0);
        for k in 1..n {
            let kk = self.wavenumber(k);
            self.buf[k] = if self.is_nyquist(k) {
                Complex64::new(0.0, 0.0)
            } else {
                self.buf[k] / Complex64::new(0.0, kk)
            };
        }
        self.fft.inverse(&mut self.buf);
        let jpot = self.buf.iter().map(|c| c.re).collect();
        Ok(FieldState {
            rho: rho.to_vec(),
            j: j.to_vec(),
            v,
            e,
            jbar,
            jpot,
        })
    }

    /// Spectral derivative of a periodic sample vector.
    pub fn derivative(&mut self, u: &[f64]) -> Vec<f64> {
        let n = self.grid.nx;
        for (b, x) in self.buf.iter_mut().zip(u) {
            *b = Complex64::new(*x, 0.0);
        }
        self.fft.forward(&mut self.buf);
        for k in 0..n {
            self.buf[k] = if self.is_nyquist(k) {
                Complex64::new(0.0, 0.0)
            } else {
                Complex64::new(0.0, self.wavenumber(k)) * self.buf[k]
            };
        }
        self.fft.inverse(&mut self.buf);
        self.buf.iter().map(|c| c.re).collect()
    }

    /// `(Σ_{k≠0} |ρ̂_k|² / k²)^{1/2}` with `ρ̂_k` the Fourier coefficients of
    /// `u` over one period.
    pub fn h_minus_one(&mut self, u: &[f64]) -> f64 {
        let n = self.grid.nx;
        for (b, x) in self.buf.iter_mut().zip(u) {
            *b = Complex64::new(*x, 0.0);
        }
        self.fft.forward(&mut self.buf);
        let mut s = 0.0;
        for k in 1..n {
            let kk = self.wavenumber(k);
            let c = self.buf[k] * (self.grid.lx / n as f64);
            s += c.norm_sqr() / (kk * kk);
        }
        (s / self.grid.lx).sqrt()
    }
}

/// One-shot convenience around [`PoissonSolver`].
pub fn solve_poisson(rho: &[f64], j: &[f64], model: &ModelKind, grid: &PhaseGrid) -> Result<FieldState> {
    PoissonSolver::new(*grid).solve(rho, j, model)
}

/// Phase-space density `values[ix * Nv + iv]`.
#[derive(Debug, Clone, PartialEq)]
pub struct DistributionField {
    pub grid: PhaseGrid,
    pub values: Vec<f64>,
    pub time: f64,
}

impl DistributionField {
    pub fn zeros(grid: PhaseGrid) -> Self {
        Self {
            grid,
            values: vec![0.0; grid.len()],
            time: 0.0,
        }
    }

    pub fn from_fn<F: FnMut(f64, f64) -> f64>(grid: PhaseGrid, mut f: F) -> Self {
        let mut values = Vec::with_capacity(grid.len());
        for i in 0..grid.nx {
            let x = grid.x(i);
            for j in 0..grid.nv {
                values.push(f(x, grid.v(j)));
            }
        }
        Self { grid, values, time: 0.0 }
    }

    /// `μ(v)` on every x line, normalized to unit mean density.
    pub fn homogeneous(grid: PhaseGrid, mu: &Profile) -> Result<Self> {
        let line = sample_profile(&grid, mu)?;
        let mut values = Vec::with_capacity(grid.len());
        for _ in 0..grid.nx {
            values.extend_from_slice(&line);
        }
        let mut f = Self { grid, values, time: 0.0 };
        f.normalize();
        Ok(f)
    }

    pub fn at(&self, ix: usize, iv: usize) -> f64 {
        self.values[ix * self.grid.nv + iv]
    }

    pub fn row(&self, ix: usize) -> &[f64] {
        let nv = self.grid.nv;
        &self.values[ix * nv..(ix + 1) * nv]
    }

    pub fn density(&self) -> Vec<f64> {
        let dv = self.grid.dv();
        (0..self.grid.nx).map(|i| self.row(i).iter().sum::<f64>() * dv).collect()
    }

    pub fn current(&self) -> Vec<f64> {
        let g = self.grid;
        (0..g.nx)
            .map(|i| self.row(i).iter().enumerate().map(|(j, f)| f * g.v(j)).sum::<f64>() * g.dv())
            .collect()
    }

    /// `∬ f dx dv`; equals `Lx` for unit mean density.
    pub fn mass(&self) -> f64 {
        self.values.iter().sum::<f64>() * self.grid.cell()
    }

    pub fn momentum(&self) -> f64 {
        self.weighted(|v| v)
    }

    /// `½ ∬ f v²`.
    pub fn kinetic(&self) -> f64 {
        self.weighted(|v| 0.5 * v * v)
    }

    fn weighted<W: Fn(f64) -> f64>(&self, w: W) -> f64 {
        let g = self.grid;
        let wv: Vec<f64> = (0..g.nv).map(|j| w(g.v(j))).collect();
        let mut s = 0.0;
        for i in 0..g.nx {
            s += self.row(i).iter().zip(&wv).map(|(f, w)| f * w).sum::<f64>();
        }
        s * g.cell()
    }

    pub fn min(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn max(&self) -> f64 {
        self.values.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    /// Largest value on the first and last velocity rows.
    pub fn boundary_density(&self) -> f64 {
        let nv = self.grid.nv;
        (0..self.grid.nx)
            .map(|i| self.at(i, 0).abs().max(self.at(i, nv - 1).abs()))
            .fold(0.0, f64::max)
    }

    /// Rescales to unit mean density; returns the factor applied.
    pub fn normalize(&mut self) -> f64 {
        let m = self.mass();
        let s = self.grid.lx / m;
        for x in &mut self.values {
            *x *= s;
        }
        s
    }

    /// `‖f − g‖_{L¹}`.
    pub fn l1_distance(&self, other: &Self) -> f64 {
        self.values.iter().zip(&other.values).map(|(a, b)| (a - b).abs()).sum::<f64>() * self.grid.cell()
    }
}

fn sample_profile(grid: &PhaseGrid, mu: &Profile) -> Result<Vec<f64>> {
    (0..grid.nv).map(|j| mu.mu(grid.v(j))).collect()
}

/// Bookkeeping of one step.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct StepLog {
    /// Mass added by zeroing negative values.
    pub clipped_mass: f64,
    /// Nodes below `−CLIP_THRESHOLD · max f` before clipping.
    pub clip_events: usize,
    /// Relative drift corrected by renormalization, if any.
    pub renormalized: Option<f64>,
}

/// Strang-split integrator: half x-advection, field solve, full
/// v-advection, half x-advection.
#[derive(Debug, Clone)]
pub struct Integrator {
    grid: PhaseGrid,
    model: ModelKind,
    poisson: PoissonSolver,
    xshift: SplineShifter,
    vshift: SplineShifter,
    line: Vec<f64>,
}

impl Integrator {
    pub fn new(grid: PhaseGrid, model: ModelKind) -> Result<Self> {
        model.validate()?;
        Ok(Self {
            grid,
            model,
            poisson: PoissonSolver::new(grid),
            xshift: SplineShifter::new(grid.nx),
            vshift: SplineShifter::new(grid.nv),
            line: vec![0.0; grid.nx],
        })
    }

    pub fn grid(&self) -> &PhaseGrid {
        &self.grid
    }

    pub fn model(&self) -> &ModelKind {
        &self.model
    }

    pub fn poisson(&mut self) -> &mut PoissonSolver {
        &mut self.poisson
    }

    pub fn fields(&mut self, f: &DistributionField) -> Result<FieldState> {
        let rho = f.density();
        let j = f.current();
        self.poisson.solve(&rho, &j, &self.model)
    }

    /// `f(x, v) ← f(x − v τ, v)`.
    pub fn advect_x(&mut self, f: &mut DistributionField, tau: f64) {
        let g = self.grid;
        let dx = g.dx();
        for iv in 0..g.nv {
            let d = g.v(iv) * tau / dx;
            for ix in 0..g.nx {
                self.line[ix] = f.values[ix * g.nv + iv];
            }
            self.xshift.shift_periodic(&mut self.line, d);
            for ix in 0..g.nx {
                f.values[ix * g.nv + iv] = self.line[ix];
            }
        }
    }

    /// `f(x, v) ← f(x, v − E(x) τ)` with zero inflow.
    pub fn advect_v(&mut self, f: &mut DistributionField, e: &[f64], tau: f64) {
        let g = self.grid;
        let dv = g.dv();
        for (ix, row) in f.values.chunks_exact_mut(g.nv).enumerate() {
            self.vshift.shift_zero(row, e[ix] * tau / dv);
        }
    }

    /// One self-consistent step.
    pub fn step(&mut self, f: &mut DistributionField, dt: f64) -> Result<StepLog> {
        let target = self.grid.lx;
        self.advect_x(f, 0.5 * dt);
        let fields = self.fields(f)?;
        self.advect_v(f, &fields.e, dt);
        self.advect_x(f, 0.5 * dt);
        f.time += dt;
        Ok(self.cleanup(f, target))
    }

    /// One step under a prescribed field.
    pub fn step_frozen(&mut self, f: &mut DistributionField, e: &[f64], dt: f64) -> StepLog {
        let target = f.mass();
        self.advect_x(f, 0.5 * dt);
        self.advect_v(f, e, dt);
        self.advect_x(f, 0.5 * dt);
        f.time += dt;
        self.cleanup(f, target)
    }

    fn cleanup(&self, f: &mut DistributionField, target: f64) -> StepLog {
        let mut log = StepLog::default();
        let floor = -CLIP_THRESHOLD * f.max();
        let mut neg = 0.0;
        for x in &mut f.values {
            if *x < 0.0 {
                if *x < floor {
                    log.clip_events += 1;
                }
                neg -= *x;
                *x = 0.0;
            }
        }
        log.clipped_mass = neg * self.grid.cell();
        let drift = f.mass() / target - 1.0;
        if drift.abs() > MASS_DRIFT_TOL {
            let s = 1.0 / (1.0 + drift);
            for x in &mut f.values {
                *x *= s;
            }
            log.renormalized = Some(drift);
        }
        log
    }
}

/// Initial data `μ + δ Re h₁`, optionally with the perturbation switched off
/// near `{δ|h₁| > μ}`.
#[derive(Debug, Clone, PartialEq)]
pub struct PerturbedInitial {
    pub field: DistributionField,
    /// Nodes where the perturbation was (partly) removed.
    pub truncated_nodes: usize,
    /// `‖f₀ − (μ + δ Re h₁)‖_{L¹}`.
    pub truncation_l1: f64,
}

/// Builds `μ + δ Re h₁` on the eigenmode's own grid. With `truncate`, the
/// perturbation is multiplied by `ψ(d/√δ)`, where `d` is the velocity
/// distance to the set `{δ|h₁| > μ}` and `ψ` a smooth ramp from 0 to 1, so
/// the result is nonnegative by construction.
pub fn make_perturbed_initial(
    mu: &Profile,
    mode: &Eigenmode,
    grid: PhaseGrid,
    delta: f64,
    truncate: bool,
) -> Result<PerturbedInitial> {
    if !(delta >= 0.0 && delta.is_finite()) {
        return Err(Error::param("delta", "must be nonnegative"));
    }
    if mode.x.len() != grid.nx || mode.v.len() != grid.nv {
        return Err(Error::Grid("eigenmode was sampled on a different grid".into()));
    }
    let base = sample_profile(&grid, mu)?;
    let mut values = Vec::with_capacity(grid.len());
    let mut raw_min = f64::INFINITY;
    let mut truncated_nodes = 0;
    let mut truncation_l1 = 0.0;
    let width = delta.sqrt();
    let dv = grid.dv();
    let mut bad = vec![false; grid.nv];
    let mut dist = vec![f64::INFINITY; grid.nv];
    for ix in 0..grid.nx {
        let h = &mode.h1[ix * grid.nv..(ix + 1) * grid.nv];
        for iv in 0..grid.nv {
            bad[iv] = delta * h[iv].norm() > base[iv];
            let r = base[iv] + delta * h[iv].re;
            raw_min = raw_min.min(r);
        }
        if truncate && bad.iter().any(|b| *b) {
            velocity_distance(&bad, dv, &mut dist);
        } else {
            dist.iter_mut().for_each(|d| *d = f64::INFINITY);
        }
        for iv in 0..grid.nv {
            let p = delta * h[iv].re;
            let w = if truncate { ramp(dist[iv] / width) } else { 1.0 };
            if w < 1.0 {
                truncated_nodes += 1;
                truncation_l1 += ((1.0 - w) * p).abs();
            }
            values.push(base[iv] + w * p);
        }
    }
    if !truncate && raw_min < 0.0 {
        return Err(Error::NegativeInitialData { min: raw_min });
    }
    let mut field = DistributionField { grid, values, time: 0.0 };
    for x in &mut field.values {
        *x = x.max(0.0);
    }
    field.normalize();
    Ok(PerturbedInitial {
        field,
        truncated_nodes,
        truncation_l1: truncation_l1 * grid.cell(),
    })
}

/// Smooth ramp: 0 for `s ≤ 0`, 1 for `s ≥ 1`.
fn ramp(s: f64) -> f64 {
    if s <= 0.0 {
        0.0
    } else if s >= 1.0 {
        1.0
    } else {
        let a = (-1.0 / s).exp();
        let b = (-1.0 / (1.0 - s)).exp();
        a / (a + b)
    }
}

fn velocity_distance(bad: &[bool], dv: f64, out: &mut [f64]) {
    let n = bad.len();
    let mut last = f64::NEG_INFINITY;
    for i in 0..n {
        if bad[i] {
            last = i as f64;
        }
        out[i] = (i as f64 - last) * dv;
    }
    let mut next = f64::INFINITY;
    for i in (0..n).rev() {
        if bad[i] {
            next = i as f64;
        }
        out[i] = out[i].min((next - i as f64) * dv);
    }
}

/// Maps quantities of the rescaled system on `T_M` back to the original
/// variables for `ε = 1/(kM)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScalingReport {
    pub eps: f64,
    pub m: f64,
    pub k: u64,
}

pub fn rescaling_maps(eps: f64, m: f64) -> Result<ScalingReport> {
    if !(eps > 0.0 && m > 0.0 && eps.is_finite() && m.is_finite()) {
        return Err(Error::param("eps", "eps and M must be positive"));
    }
    let k = 1.0 / (eps * m);
    let kr = k.round();
    if kr < 1.0 || (k - kr).abs() > 1e-9 * kr {
        return Err(Error::param(
            "eps",
            alloc::format!("eps = {eps} is not of the form 1/(kM) with integer k for M = {m}"),
        ));
    }
    Ok(ScalingReport { eps, m, k: kr as u64 })
}

impl ScalingReport {
    /// `‖ρ_ε − 1‖_{L¹(T)} = ‖Λ − 1‖_{L¹(T_M)} / M`.
    pub fn rho_l1(&self, rescaled: f64) -> f64 {
        rescaled / self.m
    }

    /// `W^{s,1}` norms pick up `ε^{−s} / M`.
    pub fn sobolev(&self, rescaled: f64, s: f64) -> f64 {
        rescaled * self.eps.powf(-s) / self.m
    }

    /// Rescaled time `t` corresponds to original time `ε t`.
    pub fn time(&self, t: f64) -> f64 {
        self.eps * t
    }
}
