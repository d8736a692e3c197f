//! Dispersion relation of the linearized rescaled system on the torus of
//! length M, its unstable roots, and the corresponding eigenmodes.
//!
//! With `ζ = iMλ/(2πn)` the relation reads
//! `D(n, λ) = 1 − (M/2πn)² G(ζ)` where `G(ζ) = ∫ μ′(v) / (v − ζ) dv`.

use alloc::vec::Vec;
use core::f64::consts::PI;

use num_complex::Complex64;
#[allow(unused_imports)]
use num_traits::Float;

use crate::profile::Profile;
use crate::quadrature::{integrate_with_breaks, QuadConfig};
use crate::{Error, Result};

/// Constant in front of `i μ′(ξ)` in the boundary value of G on the real
/// axis (the Plemelj jump).
pub const PLEMELJ_C: f64 = PI;
/// Residual a polished root must reach.
pub const ROOT_TOL: f64 = 1e-10;

fn quad_cfg() -> QuadConfig {
    QuadConfig {
        abs_tol: 1e-14,
        rel_tol: 1e-13,
        max_subdivisions: 8000,
    }
}

/// `∫ μ′(v) / (v − ζ) dv` for any non-real ζ.
fn g_integral(p: &Profile, zeta: Complex64) -> Result<Complex64> {
    let (re, im) = (zeta.re, zeta.im.abs());
    let pts = p.breakpoints_with(&[re - 10.0 * im, re - im, re, re + im, re + 10.0 * im]);
    let q = integrate_with_breaks(
        |v: f64| {
            let d = p.raw(v).1;
            Complex64::new(d, 0.0) / (Complex64::new(v, 0.0) - zeta)
        },
        &pts,
        &quad_cfg(),
    )?;
    Ok(q.value)
}

/// `G(ζ)` for `Im ζ > 0`.
pub fn eval_g(p: &Profile, zeta: Complex64) -> Result<Complex64> {
    if !(zeta.im > 0.0) {
        return Err(Error::LowerHalfPlane(zeta.im));
    }
    g_integral(p, zeta)
}

/// Principal value `P.V. ∫ μ′(v) / (v − ξ) dv`, by subtracting μ′(ξ) on a
/// window symmetric about ξ.
pub fn principal_value(p: &Profile, xi: f64) -> Result<f64> {
    let (lo, hi) = p.support();
    let cfg = quad_cfg();
    let f = |v: f64| p.raw(v).1 / (v - xi);
    if xi <= lo || xi >= hi {
        // μ′ vanishes (or is negligible) from the support end onwards
        return integrate_with_breaks(f, &p.breakpoints(), &cfg).map(|q| q.value);
    }
    let h = (xi - lo).min(hi - xi);
    let (_, d0, d2) = p.raw(xi);
    let near = 1e-7 * (hi - lo);
    let window = integrate_with_breaks(
        |v: f64| {
            let d = v - xi;
            if d.abs() < near {
                d2
            } else {
                (p.raw(v).1 - d0) / d
            }
        },
        &[xi - h, xi, xi + h],
        &cfg,
    )?
    .value;
    let mut outer = 0.0;
    if xi - h > lo {
        let pts: Vec<f64> = p.breakpoints().into_iter().filter(|b| *b < xi - h).chain([xi - h]).collect();
        outer += integrate_with_breaks(f, &pts, &cfg)?.value;
    }
    if xi + h < hi {
        let pts: Vec<f64> = [xi + h].into_iter().chain(p.breakpoints().into_iter().filter(|b| *b > xi + h)).collect();
        outer += integrate_with_breaks(f, &pts, &cfg)?.value;
    }
    Ok(window + outer)
}

/// Boundary value of G from the upper half plane:
/// `P.V. ∫ μ′/(v − ξ) dv + i c μ′(ξ)` with `c = PLEMELJ_C`.
pub fn eval_g_real(p: &Profile, xi: f64) -> Result<Complex64> {
    eval_g_real_with(p, xi, PLEMELJ_C)
}

pub fn eval_g_real_with(p: &Profile, xi: f64, plemelj_c: f64) -> Result<Complex64> {
    let pv = principal_value(p, xi)?;
    Ok(Complex64::new(pv, plemelj_c * p.raw(xi).1))
}

/// `ζ = iMλ / (2πn)`.
pub fn zeta_of(n: i64, lambda: Complex64, m: f64) -> Complex64 {
    Complex64::new(0.0, 1.0) * lambda * (m / (2.0 * PI * n as f64))
}

/// `D(n, λ) = 1 − (M/2πn)² G(iMλ/(2πn))`. On the imaginary axis the
/// boundary value is taken from the side `sign(n) Re λ > 0`.
pub fn eval_dispersion(p: &Profile, n: i64, lambda: Complex64, m: f64) -> Result<Complex64> {
    if n == 0 {
        return Err(Error::ZeroMode);
    }
    if !(m > 0.0) {
        return Err(Error::param("M", "must be positive"));
    }
    let zeta = zeta_of(n, lambda, m);
    let scale = (m / (2.0 * PI * n as f64)).powi(2);
    let g = if zeta.im != 0.0 {
        g_integral(p, zeta)?
    } else {
        let b = eval_g_real(p, zeta.re)?;
        if n > 0 {
            b
        } else {
            b.conj()
        }
    };
    Ok(Complex64::new(1.0, 0.0) - g * scale)
}

/// Rectangle of the λ plane.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SearchBox {
    pub re_min: f64,
    pub re_max: f64,
    pub im_min: f64,
    pub im_max: f64,
}

impl SearchBox {
    /// `Re λ ∈ [10⁻³ ω, ω]`, `|Im λ| ≤ ω`.
    pub fn with_omega(omega: f64) -> Self {
        Self {
            re_min: 1e-3 * omega,
            re_max: omega,
            im_min: -omega,
            im_max: omega,
        }
    }

    fn validate(&self) -> Result<()> {
        if !(self.re_min > 0.0 && self.re_max > self.re_min && self.im_max > self.im_min)
            || !(self.re_max.is_finite() && self.im_min.is_finite() && self.im_max.is_finite())
        {
            return Err(Error::param("search_box", "need 0 < re_min < re_max and im_min < im_max, all finite"));
        }
        Ok(())
    }

    pub fn contains(&self, z: Complex64) -> bool {
        z.re >= self.re_min && z.re <= self.re_max && z.im >= self.im_min && z.im <= self.im_max
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DispersionRoot {
    pub n: i64,
    pub lambda: Complex64,
    pub zeta: Complex64,
    pub residual: f64,
    pub m: f64,
}

impl DispersionRoot {
    /// `k = 2πn / M`.
    pub fn wavenumber(&self) -> f64 {
        2.0 * PI * self.n as f64 / self.m
    }

    /// `ξ = −ζ`, so that the eigenfunction reads `μ′(v) / (v + ξ)`.
    pub fn xi(&self) -> Complex64 {
        -self.zeta
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DiscardedStart {
    pub n: i64,
    pub start: Complex64,
    pub reason: &'static str,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RootSearch {
    /// Sorted by `(n, Re λ)`.
    pub roots: Vec<DispersionRoot>,
    /// Newton starts that diverged, left the box or stalled above tolerance.
    pub discarded: Vec<DiscardedStart>,
}

impl RootSearch {
    /// Root with the largest real part.
    pub fn leading(&self) -> Option<&DispersionRoot> {
        self.roots.iter().max_by(|a, b| a.lambda.re.total_cmp(&b.lambda.re))
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RootFinderConfig {
    pub scan_re: usize,
    pub scan_im: usize,
    pub max_newton: usize,
}

impl Default for RootFinderConfig {
    fn default() -> Self {
        Self {
            scan_re: 64,
            scan_im: 64,
            max_newton: 60,
        }
    }
}

fn newton(p: &Profile, n: i64, m: f64, start: Complex64, max_iter: usize) -> core::result::Result<(Complex64, f64), &'static str> {
    let mut z = start;
    let mut dz_prev = f64::INFINITY;
    for _ in 0..max_iter {
        let d = eval_dispersion(p, n, z, m).map_err(|_| "evaluation failed")?;
        let r = d.norm();
        if r <= 1e-13 {
            return Ok((z, r));
        }
        let h = 1e-6 * (1.0 + z.norm());
        let dp = eval_dispersion(p, n, z + h, m).map_err(|_| "evaluation failed")?;
        let dm = eval_dispersion(p, n, z - h, m).map_err(|_| "evaluation failed")?;
        let deriv = (dp - dm) / (2.0 * h);
        if deriv.norm() == 0.0 || !deriv.is_finite() {
            return Err("vanishing derivative");
        }
        let step = d / deriv;
        z -= step;
        if !z.is_finite() || z.re <= 0.0 {
            return Err("left the half plane");
        }
        let s = step.norm();
        if s < 1e-15 * (1.0 + z.norm()) || (s < 1e-12 && s >= dz_prev) {
            let r = eval_dispersion(p, n, z, m).map_err(|_| "evaluation failed")?.norm();
            return Ok((z, r));
        }
        dz_prev = s;
    }
    let r = eval_dispersion(p, n, z, m).map_err(|_| "evaluation failed")?.norm();
    if r <= ROOT_TOL {
        Ok((z, r))
    } else {
        Err("no convergence")
    }
}

/// Unstable roots of `D(n, ·)` in `bx` for every nonzero `n` in `modes`:
/// a coarse scan of `|D|` seeds Newton iterations at its local minima.
pub fn find_unstable_roots(
    p: &Profile,
    m: f64,
    modes: &[i64],
    bx: &SearchBox,
    cfg: &RootFinderConfig,
) -> Result<RootSearch> {
    bx.validate()?;
    if !(m > 0.0) {
        return Err(Error::param("M", "must be positive"));
    }
    if cfg.scan_re < 3 || cfg.scan_im < 3 {
        return Err(Error::param("scan", "need at least 3 x 3 scan points"));
    }
    let mut roots: Vec<DispersionRoot> = Vec::new();
    let mut discarded = Vec::new();
    for &n in modes {
        if n == 0 {
            return Err(Error::ZeroMode);
        }
        let (nr, ni) = (cfg.scan_re, cfg.scan_im);
        let dre = (bx.re_max - bx.re_min) / (nr - 1) as f64;
        let dim = (bx.im_max - bx.im_min) / (ni - 1) as f64;
        let mut grid = alloc::vec![0.0; nr * ni];
        for i in 0..nr {
            for j in 0..ni {
                let z = Complex64::new(bx.re_min + i as f64 * dre, bx.im_min + j as f64 * dim);
                grid[i * ni + j] = eval_dispersion(p, n, z, m)?.norm();
            }
        }
        let mut found: Vec<DispersionRoot> = Vec::new();
        for i in 0..nr {
            for j in 0..ni {
                let c = grid[i * ni + j];
                let mut is_min = true;
                for di in -1i64..=1 {
                    for dj in -1i64..=1 {
                        let (a, b) = (i as i64 + di, j as i64 + dj);
                        if (di, dj) == (0, 0) || a < 0 || b < 0 || a >= nr as i64 || b >= ni as i64 {
                            continue;
                        }
                        if grid[a as usize * ni + b as usize] < c {
                            is_min = false;
                        }
                    }
                }
                if !is_min {
                    continue;
                }
                let start = Complex64::new(bx.re_min + i as f64 * dre, bx.im_min + j as f64 * dim);
                match newton(p, n, m, start, cfg.max_newton) {
                    Ok((z, r)) if r <= ROOT_TOL && bx.contains(z) => {
                        let scale = 1e-7 * (1.0 + z.norm());
                        if !found.iter().any(|f| (f.lambda - z).norm() < scale) {
                            found.push(DispersionRoot {
                                n,
                                lambda: z,
                                zeta: zeta_of(n, z, m),
                                residual: r,
                                m,
                            });
                        }
                    }
                    Ok((z, r)) => {
                        // a minimum of |D| that is not a zero is expected on a coarse scan
                        if r <= ROOT_TOL && !bx.contains(z) {
                            discarded.push(DiscardedStart { n, start, reason: "converged outside the box" });
                        } else if c < 1e-2 {
                            discarded.push(DiscardedStart { n, start, reason: "stalled above tolerance" });
                        }
                    }
                    Err(reason) => {
                        if c < 1e-2 {
                            discarded.push(DiscardedStart { n, start, reason });
                        }
                    }
                }
            }
        }
        roots.extend(found);
    }
    roots.sort_by(|a, b| a.n.cmp(&b.n).then(a.lambda.re.total_cmp(&b.lambda.re)).then(a.lambda.im.total_cmp(&b.lambda.im)));
    Ok(RootSearch { roots, discarded })
}

/// Number of zeros of `D(n, ·)` inside the box, counted by the winding of D
/// along its boundary. The boundary is refined until successive arguments
/// differ by less than π/8.
pub fn winding_count(p: &Profile, n: i64, m: f64, bx: &SearchBox) -> Result<i64> {
    bx.validate()?;
    let corners = [
        Complex64::new(bx.re_min, bx.im_min),
        Complex64::new(bx.re_max, bx.im_min),
        Complex64::new(bx.re_max, bx.im_max),
        Complex64::new(bx.re_min, bx.im_max),
    ];
    let mut total = 0.0;
    for k in 0..4 {
        let (a, b) = (corners[k], corners[(k + 1) % 4]);
        // start from a uniform split so a full turn between two samples
        // cannot hide behind a small net angle
        let pieces = 64;
        let mut vals = Vec::with_capacity(pieces + 1);
        for j in 0..=pieces {
            vals.push(eval_dispersion(p, n, a + (b - a) * (j as f64 / pieces as f64), m)?);
        }
        let mut stack: Vec<(f64, f64, Complex64, Complex64)> = (0..pieces)
            .rev()
            .map(|j| (j as f64 / pieces as f64, (j + 1) as f64 / pieces as f64, vals[j], vals[j + 1]))
            .collect();
        let mut evals = 0usize;
        while let Some((s0, s1, d0, d1)) = stack.pop() {
            let sm = 0.5 * (s0 + s1);
            let dm = eval_dispersion(p, n, a + (b - a) * sm, m)?;
            evals += 1;
            let whole = (d1 / d0).arg();
            let left = (dm / d0).arg();
            let right = (d1 / dm).arg();
            let consistent = (left + right - whole).abs() < 1e-9;
            if (consistent && whole.abs() < PI / 8.0) || s1 - s0 < 1e-12 {
                total += left + right;
                continue;
            }
            if evals > 1_000_000 {
                return Err(Error::Resolution("winding count did not resolve the boundary".into()));
            }
            stack.push((sm, s1, dm, d1));
            stack.push((s0, sm, d0, dm));
        }
    }
    Ok((total / (2.0 * PI)).round() as i64)
}

/// A sampled unstable eigenmode `h₁ = c e^{ikx} μ′(v) / (v − ζ)` with `c`
/// fixing `‖h₁‖_{L¹} = 1` over one period.
#[derive(Debug, Clone, PartialEq)]
pub struct Eigenmode {
    pub root: DispersionRoot,
    pub x: Vec<f64>,
    pub v: Vec<f64>,
    /// `h1[ix * v.len() + iv]`.
    pub h1: Vec<Complex64>,
    pub rho1: Vec<Complex64>,
    /// `ℓ(v) = Im ξ μ′(v) / ((v + Re ξ)² + (Im ξ)²)`.
    pub ell: Vec<f64>,
    /// L¹ normalization constant `c`.
    pub norm: f64,
    /// Density amplitude `κ = c k²` of `½(h₁ + h̄₁)`.
    pub kappa: f64,
    /// Period of the x samples.
    pub length: f64,
}

/// Samples the eigenmode of `root` at the given nodes; `length` is the
/// spatial period (M for the rescaled system).
pub fn build_eigenmode(p: &Profile, root: &DispersionRoot, x: &[f64], v: &[f64], length: f64) -> Result<Eigenmode> {
    if root.residual > ROOT_TOL {
        return Err(Error::param("root", alloc::format!("residual {:e} above tolerance", root.residual)));
    }
    if v.len() < 2 || x.is_empty() {
        return Err(Error::Grid("eigenmode needs a nonempty x grid and at least two v nodes".into()));
    }
    let zeta = root.zeta;
    let k = root.wavenumber();
    let cfg = quad_cfg();
    let pts = p.breakpoints_with(&[zeta.re]);
    let abs_kernel = |w: f64| (p.raw(w).1 / (Complex64::new(w, 0.0) - zeta)).norm();
    let full = integrate_with_breaks(abs_kernel, &pts, &cfg)?.value;
    let (vlo, vhi) = (v[0], v[v.len() - 1]);
    let (slo, shi) = p.support();
    let mut outside = 0.0;
    if slo < vlo {
        let pts: Vec<f64> = pts.iter().copied().filter(|b| *b < vlo).chain([vlo]).collect();
        outside += integrate_with_breaks(abs_kernel, &pts, &cfg)?.value;
    }
    if shi > vhi {
        let pts: Vec<f64> = [vhi].into_iter().chain(pts.iter().copied().filter(|b| *b > vhi)).collect();
        outside += integrate_with_breaks(abs_kernel, &pts, &cfg)?.value;
    }
    if outside > 1e-8 * full {
        return Err(Error::Resolution(alloc::format!(
            "v grid [{vlo}, {vhi}] misses {:.3e} of the eigenfunction L1 norm",
            outside / full
        )));
    }
    let norm = 1.0 / (length * full);
    let mut h1 = Vec::with_capacity(x.len() * v.len());
    let mut rho1 = Vec::with_capacity(x.len());
    let kernel: Vec<Complex64> = v
        .iter()
        .map(|&w| Complex64::new(p.raw(w).1, 0.0) / (Complex64::new(w, 0.0) - zeta))
        .collect();
    for &xi in x {
        let ph = Complex64::from_polar(norm, k * xi);
        h1.extend(kernel.iter().map(|c| ph * c));
        rho1.push(ph * (k * k));
    }
    let xi = root.xi();
    let ell = v
        .iter()
        .map(|&w| {
            let q = (w + xi.re).powi(2) + xi.im * xi.im;
            xi.im * p.raw(w).1 / q
        })
        .collect();
    Ok(Eigenmode {
        root: *root,
        x: x.to_vec(),
        v: v.to_vec(),
        h1,
        rho1,
        ell,
        norm,
        kappa: norm * k * k,
        length,
    })
}

impl Eigenmode {
    /// `ℓ′(v)` at the mode's velocity nodes, in closed form.
    pub fn ell_prime(&self, p: &Profile) -> Vec<f64> {
        let xi = self.root.xi();
        self.v
            .iter()
            .map(|&w| {
                let (_, d1, d2) = p.raw(w);
                let y = w + xi.re;
                let q = y * y + xi.im * xi.im;
                xi.im * (d2 / q - 2.0 * y * d1 / (q * q))
            })
            .collect()
    }

    /// `Re h₁` at node `(ix, iv)`.
    pub fn real_part(&self, ix: usize, iv: usize) -> f64 {
        self.h1[ix * self.v.len() + iv].re
    }
}

/// Coefficient of the x-averaged second-order corrector,
/// `−κ M / (4π n Re λ₁)`, and the samples of ℓ′; the predicted x-average is
/// `coef (e^{2 Re λ₁ t} − 1) ℓ′(v)`.
pub fn h2_xaverage_coefficient(p: &Profile, mode: &Eigenmode) -> (f64, Vec<f64>) {
    let r = &mode.root;
    let coef = -mode.kappa * r.m / (4.0 * PI * r.n as f64 * r.lambda.re);
    (coef, mode.ell_prime(p))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn fixture() -> Profile {
        Profile::two_stream(0.25, 2.0, [0.5, 0.5]).unwrap()
    }

    #[test]
    fn g_decays_at_infinity() {
        let p = Profile::maxwellian(1.0, 0.0).unwrap();
        let a = eval_g(&p, Complex64::new(10.0, 1.0)).unwrap().norm();
        let b = eval_g(&p, Complex64::new(100.0, 1.0)).unwrap().norm();
        assert!(b < a && b < 1e-3);
    }

    #[test]
    fn g_rejects_lower_half_plane() {
        let p = Profile::maxwellian(1.0, 0.0).unwrap();
        assert!(matches!(eval_g(&p, Complex64::new(0.0, -0.5)), Err(Error::LowerHalfPlane(_))));
        assert!(eval_g(&p, Complex64::new(1.0, 0.0)).is_err());
    }

    #[test]
    fn even_profile_symmetrized_integrand() {
        let p = fixture();
        let t = 0.7;
        let g = eval_g(&p, Complex64::new(0.0, t)).unwrap();
        // μ′ odd: Re ∫ μ′ v/(v² + t²) over ℝ equals twice the half-line value
        let half = integrate_with_breaks(
            |v: f64| p.raw(v).1 * v / (v * v + t * t),
            &[0.0, 2.0, p.support().1],
            &quad_cfg(),
        )
        .unwrap()
        .value;
        assert!((g.re - 2.0 * half).abs() < 1e-10);
        assert!(g.im.abs() < 1e-12);
    }

    #[test]
    fn boundary_value_at_minimum_is_penrose_integral() {
        let p = fixture();
        let g = eval_g_real(&p, 0.0).unwrap();
        let i0 = p.penrose_integral(0.0, &QuadConfig::default()).unwrap();
        assert!(g.im.abs() < 1e-15);
        assert_relative_eq!(g.re, i0, max_relative = 1e-9);
    }

    #[test]
    fn boundary_value_is_limit_from_above() {
        let p = Profile::maxwellian(1.0, 0.0).unwrap();
        for xi in [-0.7, 0.3, 1.9] {
            let b = eval_g_real(&p, xi).unwrap();
            let g = eval_g(&p, Complex64::new(xi, 1e-6)).unwrap();
            assert!((b - g).norm() < 1e-5, "xi = {xi}: {b} vs {g}");
        }
    }

    #[test]
    fn dispersion_identity_and_parity() {
        let p = fixture();
        let m = 20.0;
        for (n, l) in [(1, Complex64::new(0.2, 0.1)), (2, Complex64::new(0.5, -0.3)), (-1, Complex64::new(0.1, 0.4))] {
            let d = eval_dispersion(&p, n, l, m).unwrap();
            let z = zeta_of(n, l, m);
            let g = g_integral(&p, z).unwrap();
            let s = (m / (2.0 * PI * n as f64)).powi(2);
            assert!((d - (Complex64::new(1.0, 0.0) - g * s)).norm() < 1e-15);
            let e = eval_dispersion(&p, -n, -l, m).unwrap();
            assert!((d - e).norm() < 1e-13);
        }
        assert!(matches!(eval_dispersion(&p, 0, Complex64::new(1.0, 0.0), m), Err(Error::ZeroMode)));
    }

    #[test]
    fn dispersion_tends_to_one() {
        let p = fixture();
        let d = eval_dispersion(&p, 1, Complex64::new(50.0, 3.0), 20.0).unwrap();
        assert!((d - Complex64::new(1.0, 0.0)).norm() < 1e-2);
    }

    #[test]
    fn maxwellian_has_no_unstable_roots() {
        let p = Profile::maxwellian(1.0, 0.0).unwrap();
        let cfg = RootFinderConfig {
            scan_re: 16,
            scan_im: 16,
            ..Default::default()
        };
        let r = find_unstable_roots(&p, 20.0, &[1, 2], &SearchBox::with_omega(2.0), &cfg).unwrap();
        assert!(r.roots.is_empty());
    }

    #[test]
    fn winding_count_of_known_function_box() {
        // counts agree with the root finder on the fixture
        let p = fixture();
        let bx = SearchBox::with_omega(1.5);
        let r = find_unstable_roots(&p, 20.0, &[1], &bx, &RootFinderConfig {
            scan_re: 24,
            scan_im: 24,
            ..Default::default()
        })
        .unwrap();
        assert_eq!(winding_count(&p, 1, 20.0, &bx).unwrap(), r.roots.len() as i64);
        assert_eq!(r.roots.len(), 1);
        let l = r.roots[0].lambda;
        assert!(l.im.abs() < 1e-9 && l.re > 0.2);
    }

    #[test]
    fn eigenmode_normalization_and_density() {
        let p = fixture();
        let m = 20.0;
        let bx = SearchBox::with_omega(1.5);
        let rs = find_unstable_roots(&p, m, &[1], &bx, &RootFinderConfig {
            scan_re: 16,
            scan_im: 16,
            ..Default::default()
        })
        .unwrap();
        let root = *rs.leading().unwrap();
        let nx = 32;
        let nv = 2048;
        let x: Vec<f64> = (0..nx).map(|i| m * i as f64 / nx as f64).collect();
        let vmax = 6.0;
        let dv = 2.0 * vmax / nv as f64;
        let v: Vec<f64> = (0..nv).map(|j| -vmax + (j as f64 + 0.5) * dv).collect();
        let mode = build_eigenmode(&p, &root, &x, &v, m).unwrap();
        // sampled L1 norm close to 1, density of the pure mode has zero mean
        let l1: f64 = mode.h1.iter().map(|c| c.norm()).sum::<f64>() * dv * (m / nx as f64);
        assert!((l1 - 1.0).abs() < 1e-3, "{l1}");
        let mean: Complex64 = mode.rho1.iter().sum::<Complex64>() / nx as f64;
        assert!(mean.norm() < 1e-12);
        // ∫ h1 dv reproduces rho1
        for ix in [0, 7] {
            let s: Complex64 = mode.h1[ix * nv..(ix + 1) * nv].iter().sum::<Complex64>() * dv;
            assert!((s - mode.rho1[ix]).norm() < 1e-6 * mode.rho1[ix].norm(), "{s} {}", mode.rho1[ix]);
        }
        // real density is κ cos(kx)
        let k = root.wavenumber();
        for ix in 0..nx {
            assert!((mode.rho1[ix].re - mode.kappa * (k * x[ix]).cos()).abs() < 1e-14);
        }
        let (coef, ellp) = h2_xaverage_coefficient(&p, &mode);
        assert!(coef < 0.0);
        assert!(ellp.iter().sum::<f64>().abs() * dv < 1e-10);
        let narrow: Vec<f64> = (0..64).map(|j| -1.0 + j as f64 / 32.0).collect();
        assert!(matches!(build_eigenmode(&p, &root, &x, &narrow, m), Err(Error::Resolution(_))));
    }
}
