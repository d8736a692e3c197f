//! Stationary BGK waves of the quasineutral Vlasov equation on `[0, 1]`.
//!
//! Incoming data `f₀⁺` (at `x = 0`, `v > 0`) and `f₀⁻` (at `x = 1`, `v < 0`)
//! fix the passing particles. The trapped density depends only on
//! `F(w) = f₀⁺(w) + f₀⁻(−w)`:
//!
//! `f_T(u) = (1/π) ∫₀^∞ F(w) u / (u² + w²) dw = (1/π) ∫₀^{π/2} F(u tan θ) dθ`,
//!
//! which is the unique solution of the neutrality condition
//! `2 ∫₀^r f_T(u) u / √(r² − u²) du = g(r)`.

use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::{FRAC_PI_2, PI};

#[allow(unused_imports)]
use num_traits::Float;

use crate::interp::Hermite;
use crate::quadrature::{abel_forward, abel_inverse_kernel, integrate_with_breaks, two_sided_sqrt, QuadConfig};
use crate::solver::{DistributionField, PhaseGrid};
use crate::{Error, Result};

/// Tolerance on `∫₀^∞ F = 1`.
pub const BOUNDARY_MASS_TOL: f64 = 1e-10;
/// Nodes of the trapped-density table.
pub const FT_TABLE_NODES: usize = 512;
/// Ratio between the smallest and largest table node.
pub const FT_TABLE_SPAN: f64 = 1e-4;
/// Margin kept between the well depth and `ū²`.
pub const ION_MARGIN: f64 = 1e-12;
/// Gaussian tails are cut this many thermal widths out.
const GAUSS_CUT: f64 = 40.0;

fn quad_cfg() -> QuadConfig {
    QuadConfig::with_tol(1e-14, 1e-13)
}

/// Shape of one incoming half-line density, before scaling.
#[derive(Debug, Clone, PartialEq)]
pub enum BoundaryKind {
    Zero,
    /// `exp(−v²/2T)`.
    HalfMaxwellian { t: f64 },
    /// `(1 − v/c)^p` on `[0, c]`.
    PowerLaw { exponent: f64, cutoff: f64 },
    /// Monotone cubic through `(v, f)` samples, zero past the last node.
    Tabulated(Hermite),
}

/// `f(v) = scale · shape(v)` for `v ≥ 0`, with `∫ f = mass`.
#[derive(Debug, Clone, PartialEq)]
pub struct BoundaryFn {
    kind: BoundaryKind,
    scale: f64,
    mass: f64,
}

impl BoundaryFn {
    pub fn zero() -> Self {
        Self {
            kind: BoundaryKind::Zero,
            scale: 0.0,
            mass: 0.0,
        }
    }

    pub fn new(kind: BoundaryKind, mass: f64) -> Result<Self> {
        if !(mass >= 0.0 && mass.is_finite()) {
            return Err(Error::InvalidBoundaryData(alloc::format!("mass {mass} must be nonnegative")));
        }
        match &kind {
            BoundaryKind::HalfMaxwellian { t } if !(*t > 0.0 && t.is_finite()) => {
                return Err(Error::InvalidBoundaryData(alloc::format!("temperature {t} must be positive")))
            }
            BoundaryKind::PowerLaw { exponent, cutoff } if !(*exponent >= 0.0 && *cutoff > 0.0) => {
                return Err(Error::InvalidBoundaryData(alloc::format!(
                    "power law needs exponent >= 0 and cutoff > 0, got {exponent}, {cutoff}"
                )))
            }
            BoundaryKind::Tabulated(h) if h.lo() != 0.0 || h.values().iter().any(|y| !(*y >= 0.0)) => {
                return Err(Error::InvalidBoundaryData(
                    "tabulated data must start at v = 0 and be nonnegative".into(),
                ))
            }
            _ => {}
        }
        let mut f = Self { kind, scale: 1.0, mass };
        if matches!(f.kind, BoundaryKind::Zero) || mass == 0.0 {
            f.scale = 0.0;
            return Ok(f);
        }
        let raw = f.integrate(|_| 1.0)?;
        if !(raw > 0.0) {
            return Err(Error::InvalidBoundaryData("shape has zero mass".into()));
        }
        f.scale = mass / raw;
        Ok(f)
    }

    pub fn half_maxwellian(t: f64, mass: f64) -> Result<Self> {
        Self::new(BoundaryKind::HalfMaxwellian { t }, mass)
    }

    pub fn power_law(exponent: f64, cutoff: f64, mass: f64) -> Result<Self> {
        Self::new(BoundaryKind::PowerLaw { exponent, cutoff }, mass)
    }

    /// From `(v, f)` samples with `v₀ = 0`, increasing `v`.
    pub fn tabulated(vs: Vec<f64>, fs: Vec<f64>, mass: f64) -> Result<Self> {
        let h = Hermite::monotone(vs, fs).map_err(|e| Error::InvalidBoundaryData(alloc::format!("{e}")))?;
        Self::new(BoundaryKind::Tabulated(h), mass)
    }

    pub fn kind(&self) -> &BoundaryKind {
        &self.kind
    }

    pub fn mass(&self) -> f64 {
        self.mass
    }

    /// Beyond this speed the density vanishes (or is below 1e-300).
    pub fn support_end(&self) -> f64 {
        match &self.kind {
            BoundaryKind::Zero => 0.0,
            BoundaryKind::HalfMaxwellian { t } => GAUSS_CUT * t.sqrt(),
            BoundaryKind::PowerLaw { cutoff, .. } => *cutoff,
            BoundaryKind::Tabulated(h) => h.hi(),
        }
    }

    fn shape(&self, v: f64) -> f64 {
        if v < 0.0 {
            return 0.0;
        }
        match &self.kind {
            BoundaryKind::Zero => 0.0,
            BoundaryKind::HalfMaxwellian { t } => (-v * v / (2.0 * t)).exp(),
            BoundaryKind::PowerLaw { exponent, cutoff } => {
                if v >= *cutoff {
                    0.0
                } else {
                    (1.0 - v / cutoff).powf(*exponent)
                }
            }
            BoundaryKind::Tabulated(h) => {
                if v > h.hi() {
                    0.0
                } else {
                    h.eval(v).max(0.0)
                }
            }
        }
    }

    /// Value at speed `v ≥ 0`.
    pub fn eval(&self, v: f64) -> f64 {
        self.scale * self.shape(v)
    }

    fn breaks(&self) -> Vec<f64> {
        let end = self.support_end();
        match &self.kind {
            BoundaryKind::Zero => vec![],
            BoundaryKind::HalfMaxwellian { t } => {
                let s = t.sqrt();
                vec![0.0, s, 3.0 * s, 8.0 * s, end]
            }
            BoundaryKind::PowerLaw { .. } => vec![0.0, 0.5 * end, end],
            BoundaryKind::Tabulated(h) => h.nodes().to_vec(),
        }
    }

    fn integrate<W: Fn(f64) -> f64>(&self, w: W) -> Result<f64> {
        let b = self.breaks();
        if b.len() < 2 {
            return Ok(0.0);
        }
        Ok(integrate_with_breaks(|v: f64| self.eval(v) * w(v), &b, &quad_cfg())?.value)
    }
}

/// Incoming densities at both ends of `[0, 1]`; `minus` is stored as a
/// function of the speed `|v|`.
#[derive(Debug, Clone, PartialEq)]
pub struct BoundaryData {
    pub plus: BoundaryFn,
    pub minus: BoundaryFn,
}

impl BoundaryData {
    pub fn new(plus: BoundaryFn, minus: BoundaryFn) -> Result<Self> {
        let total = plus.mass() + minus.mass();
        if (total - 1.0).abs() > BOUNDARY_MASS_TOL {
            return Err(Error::InvalidBoundaryData(alloc::format!(
                "incoming mass {total} differs from 1"
            )));
        }
        Ok(Self { plus, minus })
    }

    /// `f₀⁺ = 2 e^{−v²/2T} / √(2πT)` and `f₀⁻ = 0`.
    pub fn half_maxwellian(t: f64) -> Result<Self> {
        Self::new(BoundaryFn::half_maxwellian(t, 1.0)?, BoundaryFn::zero())
    }

    /// `F(w) = f₀⁺(w) + f₀⁻(−w)` for `w ≥ 0`.
    pub fn combined(&self, w: f64) -> f64 {
        self.plus.eval(w) + self.minus.eval(w)
    }

    pub fn at_zero(&self) -> f64 {
        self.combined(0.0)
    }

    pub fn support_end(&self) -> f64 {
        self.plus.support_end().max(self.minus.support_end())
    }

    fn breaks(&self) -> Vec<f64> {
        let mut b: Vec<f64> = self.plus.breaks().into_iter().chain(self.minus.breaks()).collect();
        b.sort_by(f64::total_cmp);
        b.dedup();
        b
    }

    /// `∫₀^∞ F(w) k(w) dw`.
    pub fn integrate<K: Fn(f64) -> f64>(&self, k: K) -> Result<f64> {
        let b = self.breaks();
        if b.len() < 2 {
            return Ok(0.0);
        }
        Ok(integrate_with_breaks(|w: f64| self.combined(w) * k(w), &b, &quad_cfg())?.value)
    }
}

/// `f_T(u) = (1/π) ∫₀^{π/2} F(u tan θ) dθ`.
pub fn trapped_density(bd: &BoundaryData, u: f64) -> Result<f64> {
    if !(u > 0.0) {
        return Err(Error::param("u", "trapped speed must be positive"));
    }
    let mut br: Vec<f64> = bd.breaks().iter().filter(|w| **w > 0.0).map(|w| (w / u).atan()).collect();
    br.push(0.0);
    br.push(FRAC_PI_2);
    br.sort_by(f64::total_cmp);
    br.dedup();
    let q = integrate_with_breaks(|th: f64| bd.combined(u * th.tan()), &br, &quad_cfg())?;
    Ok(q.value / PI)
}

/// Ion-model trapped density `f_T(u) − αu/π`.
pub fn trapped_density_ion(bd: &BoundaryData, alpha: f64, u: f64) -> Result<f64> {
    Ok(trapped_density(bd, u)? - alpha * u / PI)
}

/// `ū = inf{u > 0 : f_T^ion(u) < 0}`, or 0 if the ion trapped density is
/// negative arbitrarily close to 0.
pub fn ubar(bd: &BoundaryData, alpha: f64) -> Result<f64> {
    if !(alpha > 0.0 && alpha.is_finite()) {
        return Err(Error::param("alpha", "must be positive"));
    }
    let hi = (2.0 / alpha).sqrt();
    let lo = 1e-10 * hi;
    let n = 4000;
    let node = |i: usize| lo * (hi / lo).powf(i as f64 / n as f64);
    let mut prev = node(0);
    if trapped_density_ion(bd, alpha, prev)? < 0.0 {
        return Ok(0.0);
    }
    for i in 1..=n {
        let u = node(i);
        if trapped_density_ion(bd, alpha, u)? < 0.0 {
            let (mut a, mut b) = (prev, u);
            for _ in 0..200 {
                let m = 0.5 * (a + b);
                if trapped_density_ion(bd, alpha, m)? < 0.0 {
                    b = m;
                } else {
                    a = m;
                }
                if b - a <= 1e-15 * b {
                    break;
                }
            }
            return Ok(a);
        }
        prev = u;
    }
    Err(Error::InvalidBoundaryData(alloc::format!(
        "ion trapped density stays positive up to sqrt(2/alpha) = {hi}"
    )))
}

/// `g(r) = 1 − ∫₀^∞ F(w) w / √(r² + w²) dw`.
pub fn g_function(bd: &BoundaryData, r: f64) -> Result<f64> {
    Ok(1.0 - bd.integrate(|w| if w == 0.0 { 0.0 } else { w / (r * r + w * w).sqrt() })?)
}

/// Independent reconstruction of `f_T` from `g`: samples `g` on a uniform
/// grid, differentiates by finite differences, and evaluates
/// `(1/π) ∫₀^u g′(s) / √(u² − s²) ds`.
pub fn abel_invert_oracle(bd: &BoundaryData, u_grid: &[f64]) -> Result<Vec<f64>> {
    let umax = u_grid.iter().copied().fold(0.0, f64::max);
    if !(umax > 0.0) {
        return Ok(vec![0.0; u_grid.len()]);
    }
    let h = 5e-4 * umax.max(1.0);
    let n = (umax / h).ceil() as usize + 3;
    let g: Vec<f64> = (0..=n).map(|i| g_function(bd, i as f64 * h)).collect::<Result<_>>()?;
    let mut dg = vec![0.0; n + 1];
    for i in 0..=n {
        dg[i] = if i == 0 {
            (-3.0 * g[0] + 4.0 * g[1] - g[2]) / (2.0 * h)
        } else if i == n {
            (3.0 * g[n] - 4.0 * g[n - 1] + g[n - 2]) / (2.0 * h)
        } else {
            (g[i + 1] - g[i - 1]) / (2.0 * h)
        };
    }
    let interp = |s: f64| {
        let x = (s / h).clamp(0.0, n as f64);
        let i = (x.floor() as usize).min(n - 1);
        let t = x - i as f64;
        dg[i] * (1.0 - t) + dg[i + 1] * t
    };
    let cfg = QuadConfig::with_tol(1e-10, 1e-9);
    u_grid
        .iter()
        .map(|&u| Ok(abel_inverse_kernel(interp, u, &cfg)? / PI))
        .collect()
}

/// Checks `∫_a^b u du / √((b² − u²)(u² − a²)) = π/2` on three windows.
pub fn quad_identity_selftest() -> bool {
    [(1.0, 2.0), (0.5, 3.0), (0.1, 10.0)].iter().all(|&(a, b)| {
        two_sided_sqrt(|_| 1.0, a, b, &QuadConfig::default())
            .map(|v| (v - FRAC_PI_2).abs() <= 1e-8)
            .unwrap_or(false)
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum BgkModel {
    Quasineutral,
    Ion { alpha: f64 },
}

/// `f_T` on `FT_TABLE_NODES` log-spaced speeds in
/// `[FT_TABLE_SPAN · u_ref, u_ref]`, cubic Hermite in `ln u`; outside the
/// table the closed form is evaluated directly.
#[derive(Debug, Clone, PartialEq)]
pub struct TrappedTable {
    model: BgkModel,
    u_ref: f64,
    speeds: Vec<f64>,
    values: Vec<f64>,
    interp: Hermite,
    bd: BoundaryData,
}

impl TrappedTable {
    pub fn new(bd: &BoundaryData, model: BgkModel, u_ref: f64) -> Result<Self> {
        if !(u_ref > 0.0 && u_ref.is_finite()) {
            return Err(Error::param("u_ref", "must be positive"));
        }
        let eval = |u: f64| match model {
            BgkModel::Quasineutral => trapped_density(bd, u),
            BgkModel::Ion { alpha } => trapped_density_ion(bd, alpha, u),
        };
        let (a, b) = ((FT_TABLE_SPAN * u_ref).ln(), u_ref.ln());
        let n = FT_TABLE_NODES;
        let ts: Vec<f64> = (0..n).map(|i| a + (b - a) * i as f64 / (n - 1) as f64).collect();
        let speeds: Vec<f64> = ts.iter().map(|t| t.exp()).collect();
        let values: Vec<f64> = speeds.iter().map(|&u| eval(u)).collect::<Result<_>>()?;
        // d f_T / d ln u by fourth-order differences
        let eta = 1e-3;
        let slopes: Vec<f64> = ts
            .iter()
            .map(|&t| {
                let e = |s: f64| eval((t + s).exp());
                Ok((8.0 * (e(eta)? - e(-eta)?) - (e(2.0 * eta)? - e(-2.0 * eta)?)) / (12.0 * eta))
            })
            .collect::<Result<_>>()?;
        let interp = Hermite::new(ts, values.clone(), slopes)?;
        Ok(Self {
            model,
            u_ref,
            speeds,
            values,
            interp,
            bd: bd.clone(),
        })
    }

    pub fn u_ref(&self) -> f64 {
        self.u_ref
    }

    pub fn speeds(&self) -> &[f64] {
        &self.speeds
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn eval(&self, u: f64) -> Result<f64> {
        if u > 0.0 && u >= self.speeds[0] && u <= self.u_ref {
            return Ok(self.interp.eval(u.ln()));
        }
        match self.model {
            BgkModel::Quasineutral => trapped_density(&self.bd, u),
            BgkModel::Ion { alpha } => trapped_density_ion(&self.bd, alpha, u),
        }
    }
}

/// A potential well `V ≤ 0` on `[0, 1]` with `V(0) = V(1) = 0`, stored as
/// cubic Hermite data.
#[derive(Debug, Clone, PartialEq)]
pub struct PotentialWell {
    interp: Hermite,
    vmin: f64,
}

impl PotentialWell {
    /// Samples `v` and `dv` at `n + 1` uniform nodes.
    pub fn from_fn<V: Fn(f64) -> f64, D: Fn(f64) -> f64>(v: V, dv: D, n: usize) -> Result<Self> {
        let xs: Vec<f64> = (0..=n).map(|i| i as f64 / n as f64).collect();
        let ys: Vec<f64> = xs.iter().map(|x| v(*x)).collect();
        let ds: Vec<f64> = xs.iter().map(|x| dv(*x)).collect();
        Self::new(xs, ys, ds)
    }

    pub fn new(xs: Vec<f64>, ys: Vec<f64>, ds: Vec<f64>) -> Result<Self> {
        let n = xs.len();
        if n < 2 || xs[0] != 0.0 || xs[n - 1] != 1.0 {
            return Err(Error::InvalidWell("nodes must span [0, 1]".into()));
        }
        if ys[0].abs() > 1e-12 || ys[n - 1].abs() > 1e-12 {
            return Err(Error::InvalidWell(alloc::format!(
                "V(0) = {} and V(1) = {} must vanish",
                ys[0],
                ys[n - 1]
            )));
        }
        if let Some(i) = ys.iter().position(|y| !(*y <= 1e-14)) {
            return Err(Error::InvalidWell(alloc::format!("V(x) = {} > 0 at x = {}", ys[i], xs[i])));
        }
        let vmin = ys.iter().copied().fold(0.0, f64::min);
        let interp = Hermite::new(xs, ys, ds).map_err(|e| Error::InvalidWell(alloc::format!("{e}")))?;
        Ok(Self { interp, vmin })
    }

    pub fn eval(&self, x: f64) -> f64 {
        self.interp.eval(x.rem_euclid(1.0)).min(0.0)
    }

    pub fn derivative(&self, x: f64) -> f64 {
        self.interp.eval_with_derivative(x.rem_euclid(1.0)).1
    }

    pub fn vmin(&self) -> f64 {
        self.vmin
    }

    /// `√(−2 V_min)`.
    pub fn depth_speed(&self) -> f64 {
        (-2.0 * self.vmin).sqrt()
    }
}

/// Table reference speed for a quasineutral well: the depth speed rounded
/// up to a power of two (at least 1), so wells of similar depth share one
/// table.
pub fn quasineutral_u_ref(well: &PotentialWell) -> f64 {
    let d = well.depth_speed();
    if d <= 1.0 {
        1.0
    } else {
        2f64.powi(d.log2().ceil() as i32)
    }
}

pub struct BgkWave {
    pub bd: BoundaryData,
    pub well: PotentialWell,
    pub table: TrappedTable,
    pub f: DistributionField,
    pub model: BgkModel,
    pub ubar: Option<f64>,
}

impl core::fmt::Debug for BgkWave {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        f.debug_struct("BgkWave")
            .field("model", &self.model)
            .field("ubar", &self.ubar)
            .field("grid", &self.f.grid)
            .finish_non_exhaustive()
    }
}

/// Builds the trapped table for `model`; for the ion model also returns `ū`.
pub fn build_table(bd: &BoundaryData, well: &PotentialWell, model: BgkModel) -> Result<(TrappedTable, Option<f64>)> {
    match model {
        BgkModel::Quasineutral => Ok((TrappedTable::new(bd, model, quasineutral_u_ref(well))?, None)),
        BgkModel::Ion { alpha } => {
            let ub = ubar(bd, alpha)?;
            let depth = -2.0 * well.vmin();
            if depth > 0.0 && !(depth < ub * ub - ION_MARGIN) {
                return Err(Error::WellTooDeep { depth, ubar_sq: ub * ub });
            }
            if ub == 0.0 {
                return Err(Error::WellTooDeep { depth, ubar_sq: 0.0 });
            }
            Ok((TrappedTable::new(bd, model, ub)?, Some(ub)))
        }
    }
}

/// Value of the stationary wave at `(x, v)`.
pub fn wave_value(bd: &BoundaryData, well: &PotentialWell, table: &TrappedTable, x: f64, v: f64) -> Result<f64> {
    let e = 0.5 * v * v + well.eval(x);
    if e >= 0.0 {
        let w = (2.0 * e).sqrt();
        Ok(if v > 0.0 { bd.plus.eval(w) } else { bd.minus.eval(w) })
    } else {
        table.eval((-2.0 * e).sqrt())
    }
}

/// Samples the three-branch wave on `grid` (which must have `Lx = 1`).
pub fn assemble_wave(bd: &BoundaryData, well: &PotentialWell, grid: PhaseGrid, model: BgkModel) -> Result<BgkWave> {
    if (grid.lx - 1.0).abs() > 1e-15 {
        return Err(Error::Grid("BGK waves live on [0, 1]".into()));
    }
    let (table, ub) = build_table(bd, well, model)?;
    let mut values = Vec::with_capacity(grid.len());
    for i in 0..grid.nx {
        let x = grid.x(i);
        for j in 0..grid.nv {
            values.push(wave_value(bd, well, &table, x, grid.v(j))?);
        }
    }
    Ok(BgkWave {
        bd: bd.clone(),
        well: well.clone(),
        table,
        f: DistributionField { grid, values, time: 0.0 },
        model,
        ubar: ub,
    })
}

/// Density of the wave at `x` from the integral form, with the trapped
/// part `2 ∫₀^R f_T(u) u / √(R² − u²) du`, `R = √(−2V(x))`.
pub fn wave_density(wave: &BgkWave, x: f64) -> Result<f64> {
    wave_density_with(&wave.bd, &wave.well, |u| wave.table.eval(u), x)
}

fn wave_density_with<T: Fn(f64) -> Result<f64>>(bd: &BoundaryData, well: &PotentialWell, ft: T, x: f64) -> Result<f64> {
    let r = (-2.0 * well.eval(x)).max(0.0).sqrt();
    let passing = bd.integrate(|w| if w == 0.0 { 0.0 } else { w / (r * r + w * w).sqrt() })?;
    if r == 0.0 {
        return Ok(passing);
    }
    let mut err = None;
    let trapped = abel_forward(
        |u| {
            if u <= 0.0 {
                return ft(r * 1e-300).unwrap_or(0.0);
            }
            ft(u).unwrap_or_else(|e| {
                err = Some(e);
                0.0
            })
        },
        r,
        &quad_cfg(),
    )?;
    if let Some(e) = err {
        return Err(e);
    }
    Ok(passing + 2.0 * trapped)
}

/// Density the wave must reproduce: `1`, or `1 + αV(x)` for the ion model.
pub fn target_density(wave: &BgkWave, x: f64) -> f64 {
    match wave.model {
        BgkModel::Quasineutral => 1.0,
        BgkModel::Ion { alpha } => 1.0 + alpha * wave.well.eval(x),
    }
}

/// `max_x |ρ(x) − ρ_target(x)|` over the wave's x nodes.
pub fn verify_neutrality(wave: &BgkWave) -> Result<f64> {
    let xs = wave.f.grid.xs();
    neutrality_profile(wave, &xs).map(|d| d.iter().fold(0.0, |m, (_, r)| m.max(r.abs())))
}

/// `(x, ρ(x) − ρ_target(x))` at the given positions.
pub fn neutrality_profile(wave: &BgkWave, xs: &[f64]) -> Result<Vec<(f64, f64)>> {
    xs.iter().map(|&x| Ok((x, wave_density(wave, x)? - target_density(wave, x)))).collect()
}

/// Like [`verify_neutrality`] with the trapped density multiplied by
/// `factor`.
pub fn neutrality_with_scaled_trapped(wave: &BgkWave, factor: f64) -> Result<f64> {
    let mut m = 0.0f64;
    for x in wave.f.grid.xs() {
        let rho = wave_density_with(&wave.bd, &wave.well, |u| Ok(factor * wave.table.eval(u)?), x)?;
        m = m.max((rho - target_density(wave, x)).abs());
    }
    Ok(m)
}

/// Frozen field `E = −V′` at the x nodes of `grid`.
pub fn well_field(well: &PotentialWell, grid: &PhaseGrid) -> Vec<f64> {
    grid.xs().iter().map(|&x| -well.derivative(x)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
        use approx::assert_relative_eq;

    fn sin2_well(depth: f64, k: f64) -> PotentialWell {
        PotentialWell::from_fn(
            |x| -depth * (k * PI * x).sin().powi(2),
            |x| -depth * k * PI * (2.0 * k * PI * x).sin(),
            4096,
        )
        .unwrap()
    }

    #[test]
    fn selftest_passes() {
        assert!(quad_identity_selftest());
    }

    #[test]
    fn half_maxwellian_is_normalized() {
        let bd = BoundaryData::half_maxwellian(1.0).unwrap();
        assert_relative_eq!(bd.at_zero(), 2.0 / (2.0 * PI).sqrt(), max_relative = 1e-12);
        assert!(BoundaryData::new(BoundaryFn::half_maxwellian(1.0, 0.7).unwrap(), BoundaryFn::zero()).is_err());
    }

    #[test]
    fn trapped_density_matches_direct_kernel() {
        let bd = BoundaryData::half_maxwellian(1.0).unwrap();
        for u in [0.05, 1.0, 3.0] {
            // 10× tighter oracle on the original kernel
            let direct = integrate_with_breaks(
                |w: f64| bd.combined(w) * u / (u * u + w * w),
                &[0.0, 0.1 * u, u, 10.0 * u, 40.0f64.max(20.0 * u)],
                &QuadConfig { abs_tol: 5e-14, rel_tol: 1e-14, max_subdivisions: 20000 },
            )
            .unwrap()
            .value
                / PI;
            assert_relative_eq!(trapped_density(&bd, u).unwrap(), direct, max_relative = 1e-10);
        }
        // closed form at u = 1: e^{1/2} erfc(1/√2) / √(2π)
        let oracle = 0.5f64.exp() * libm::erfc(1.0 / 2f64.sqrt()) / (2.0 * PI).sqrt();
        assert_relative_eq!(trapped_density(&bd, 1.0).unwrap(), oracle, max_relative = 1e-12);
    }

    #[test]
    fn trapped_density_is_linear_in_data() {
        let a = BoundaryData::half_maxwellian(1.0).unwrap();
        let b = BoundaryData::new(BoundaryFn::zero(), BoundaryFn::power_law(2.0, 1.5, 1.0).unwrap()).unwrap();
        let mix = BoundaryData::new(
            BoundaryFn::half_maxwellian(1.0, 0.3).unwrap(),
            BoundaryFn::power_law(2.0, 1.5, 0.7).unwrap(),
        )
        .unwrap();
        for u in [0.1, 0.8, 2.0] {
            let lhs = trapped_density(&mix, u).unwrap();
            let rhs = 0.3 * trapped_density(&a, u).unwrap() + 0.7 * trapped_density(&b, u).unwrap();
            assert_relative_eq!(lhs, rhs, max_relative = 1e-12);
        }
    }

    #[test]
    fn trapped_limit_at_zero_is_half_boundary_value() {
        let bd = BoundaryData::half_maxwellian(1.0).unwrap();
        let ft = trapped_density(&bd, 1e-7).unwrap();
        assert_relative_eq!(ft, 0.5 * bd.at_zero(), max_relative = 1e-6);
    }

    #[test]
    fn g_function_limits() {
        let bd = BoundaryData::half_maxwellian(1.0).unwrap();
        assert!(g_function(&bd, 0.0).unwrap().abs() < 1e-12);
        let h = 1e-6;
        let slope = g_function(&bd, h).unwrap() / h;
        assert_relative_eq!(slope, bd.at_zero(), max_relative = 1e-4);
    }

    #[test]
    fn abel_oracle_agrees_with_closed_form() {
        let bd = BoundaryData::half_maxwellian(1.0).unwrap();
        let us: Vec<f64> = (0..60).map(|i| 0.01 + 1.99 * i as f64 / 59.0).collect();
        let oracle = abel_invert_oracle(&bd, &us).unwrap();
        for (u, o) in us.iter().zip(&oracle) {
            assert!((trapped_density(&bd, *u).unwrap() - o).abs() < 1e-4);
        }
    }

    #[test]
    fn zero_well_is_homogeneous_extension() {
        let bd = BoundaryData::half_maxwellian(1.0).unwrap();
        let well = PotentialWell::from_fn(|_| 0.0, |_| 0.0, 16).unwrap();
        let g = PhaseGrid::new(8, 64, 1.0, 6.0).unwrap();
        let w = assemble_wave(&bd, &well, g, BgkModel::Quasineutral).unwrap();
        for i in 0..8 {
            for j in 0..64 {
                let v = g.v(j);
                let e = if v > 0.0 { bd.plus.eval(v) } else { 0.0 };
                assert_eq!(w.f.at(i, j), e);
            }
        }
        assert!(verify_neutrality(&w).unwrap() <= 1e-10);
    }

    #[test]
    fn sin2_well_is_neutral_and_perturbation_is_detected() {
        let bd = BoundaryData::half_maxwellian(1.0).unwrap();
        let g = PhaseGrid::new(32, 64, 1.0, 6.0).unwrap();
        let w = assemble_wave(&bd, &sin2_well(0.3, 1.0), g, BgkModel::Quasineutral).unwrap();
        assert!(verify_neutrality(&w).unwrap() <= 1e-6);
        let shallow = assemble_wave(&bd, &sin2_well(0.1, 1.0), g, BgkModel::Quasineutral).unwrap();
        let d_deep = neutrality_with_scaled_trapped(&w, 1.01).unwrap();
        let d_shallow = neutrality_with_scaled_trapped(&shallow, 1.01).unwrap();
        assert!(d_shallow > 1e-4 && d_deep > d_shallow);
    }

    #[test]
    fn tables_do_not_depend_on_the_well() {
        let bd = BoundaryData::half_maxwellian(1.0).unwrap();
        let g = PhaseGrid::new(8, 32, 1.0, 6.0).unwrap();
        let a = assemble_wave(&bd, &sin2_well(0.3, 1.0), g, BgkModel::Quasineutral).unwrap();
        let b = assemble_wave(&bd, &sin2_well(0.2, 2.0), g, BgkModel::Quasineutral).unwrap();
        assert_eq!(a.table.values(), b.table.values());
        assert_eq!(a.table.speeds(), b.table.speeds());
    }

    #[test]
    fn ion_ubar_bounds_and_degenerate_case() {
        let bd = BoundaryData::half_maxwellian(1.0).unwrap();
        for alpha in [0.5, 1.0, 2.0] {
            let u = ubar(&bd, alpha).unwrap();
            assert!(u > 0.0 && u <= (2.0 / alpha).sqrt());
            assert!(trapped_density_ion(&bd, alpha, 0.999 * u).unwrap() >= 0.0);
        }
        // F(0) = 0 and ∫F/w² small against α
        let far = BoundaryData::new(
            BoundaryFn::tabulated(vec![0.0, 2.0, 3.0, 4.0], vec![0.0, 0.0, 1.0, 0.0], 1.0).unwrap(),
            BoundaryFn::zero(),
        )
        .unwrap();
        let int_w2 = far.integrate(|w| if w > 0.0 { 1.0 / (w * w) } else { 0.0 }).unwrap();
        assert!(int_w2 <= 0.5 * 2.0);
        assert_eq!(ubar(&far, 2.0).unwrap(), 0.0);
    }

    #[test]
    fn ion_wave_neutrality_and_depth_check() {
        let bd = BoundaryData::half_maxwellian(1.0).unwrap();
        let alpha = 1.0;
        let ub = ubar(&bd, alpha).unwrap();
        let depth = 0.4 * ub * ub / 2.0;
        let g = PhaseGrid::new(32, 64, 1.0, 6.0).unwrap();
        let w = assemble_wave(&bd, &sin2_well(depth, 1.0), g, BgkModel::Ion { alpha }).unwrap();
        let mut dev = 0.0f64;
        for x in g.xs() {
            dev = dev.max((wave_density(&w, x).unwrap() - 1.0 - alpha * w.well.eval(x)).abs());
        }
        assert!(dev <= 1e-6, "{dev}");
        assert!((verify_neutrality(&w).unwrap() - dev).abs() <= 1e-14);
        let deep = sin2_well(0.6 * ub * ub, 1.0);
        assert!(matches!(
            assemble_wave(&bd, &deep, g, BgkModel::Ion { alpha }),
            Err(Error::WellTooDeep { .. })
        ));
    }

    #[test]
    fn well_validation() {
        assert!(PotentialWell::from_fn(|x| 0.1 * (PI * x).sin(), |x| 0.1 * PI * (PI * x).cos(), 64).is_err());
        assert!(PotentialWell::from_fn(|x| -x, |_| -1.0, 64).is_err());
    }
}
