//! Executes one scenario and writes its output directory.

use std::f64::consts::PI;
use std::path::Path;

use anyhow::{anyhow, Context, Result};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use qnk_core::bgk::{
    assemble_wave, neutrality_profile, target_density, trapped_density, ubar, verify_neutrality, well_field, BgkModel, BgkWave,
    BoundaryData, BoundaryFn,
};
use qnk_core::diagnostics::{
    field_energies, oscillation_filter, q_moment, weak_norm_proxy, x_averaged_deviation, growth_fit, k_constant,
    Diagnostics, DiagnosticsRecord, PeriodicPotential, PROXY_ORDERS,
};
use qnk_core::dispersion::{build_eigenmode, find_unstable_roots, RootFinderConfig, SearchBox};
use qnk_core::profile::{PenroseReport, Profile, SStableProfile};
use qnk_core::quadrature::QuadConfig;
use qnk_core::solver::{
    make_perturbed_initial, rescaling_maps, DistributionField, FieldState, Integrator, ModelKind, PhaseGrid,
};

use crate::config::{build_analytic, BoundaryConfig, BoundarySide, Expectation, FourierTerm, ProfileConfig, Scenario, ScenarioKind};
use crate::io::{num, read_boundary_csv, read_profile_csv, write_csv, write_diag, write_snapshot, Report};
use crate::well::WellFormula;

/// Box searched for unstable roots.
pub const ROOT_BOX_OMEGA: f64 = 2.0;

/// Runs `s`, writing `report.txt`, `diag.csv`, `config.toml` and the
/// kind-specific files into `dir`. Numerical failures end up in the report.
pub fn run_scenario(s: &Scenario, dir: &Path) -> Result<Report> {
    std::fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    std::fs::write(dir.join("config.toml"), s.echo())?;
    let mut report = Report::new(&s.name, &s.kind.to_string());
    let mut diag = Vec::new();
    log::info!("scenario {} ({})", s.name, s.kind);
    let outcome = match s.kind {
        ScenarioKind::PenroseCheck => penrose_check(s, dir, &mut report),
        ScenarioKind::Instability => instability(s, dir, &mut report, &mut diag),
        ScenarioKind::StableWellPrepared => well_prepared(s, dir, &mut report, &mut diag),
        ScenarioKind::StableIllPrepared => ill_prepared(s, dir, &mut report, &mut diag),
        ScenarioKind::BgkBuild => bgk_build(s, dir, &mut report),
        ScenarioKind::IonVariant => ion_variant(s, dir, &mut report),
    };
    if let Err(e) = outcome {
        log::error!("scenario {}: {e:#}", s.name);
        report.error = Some(format!("{e:#}"));
    }
    write_diag(&dir.join("diag.csv"), &diag)?;
    std::fs::write(dir.join("report.txt"), report.render())?;
    Ok(report)
}

pub fn build_profile(p: &ProfileConfig) -> Result<Profile> {
    match p {
        ProfileConfig::Tabulated { file } => Ok(Profile::tabulated(read_profile_csv(file)?)?),
        other => Ok(build_analytic(other)?),
    }
}

fn build_side(side: &BoundarySide) -> Result<BoundaryFn> {
    Ok(match side {
        BoundarySide::Zero => BoundaryFn::zero(),
        BoundarySide::HalfMaxwellian { t, mass } => BoundaryFn::half_maxwellian(*t, *mass)?,
        BoundarySide::PowerLaw { exponent, cutoff, mass } => BoundaryFn::power_law(*exponent, *cutoff, *mass)?,
        BoundarySide::Tabulated { file, mass } => {
            let (vs, fs) = read_boundary_csv(file)?;
            BoundaryFn::tabulated(vs, fs, *mass)?
        }
    })
}

pub fn build_boundary(b: &BoundaryConfig) -> Result<BoundaryData> {
    Ok(BoundaryData::new(build_side(&b.plus)?, build_side(&b.minus)?)?)
}

fn grid_of(s: &Scenario) -> Result<PhaseGrid> {
    let g = &s.grid;
    let (nx, nv, lx, vmax) = (
        g.nx.context("grid.nx")?,
        g.nv.context("grid.nv")?,
        g.lx.context("grid.lx")?,
        g.vmax.context("grid.vmax")?,
    );
    Ok(PhaseGrid::new(nx, nv, lx, vmax)?)
}

fn steps_of(t_final: f64, dt: f64) -> usize {
    (t_final / dt - 1e-9).ceil().max(0.0) as usize
}

fn penrose_report(r: &PenroseReport, prefix: &str, report: &mut Report) {
    report.text(&format!("{prefix}classification"), if r.unstable { "unstable" } else { "stable" });
    report.scalar(&format!("{prefix}alpha"), r.alpha);
    report.scalar(&format!("{prefix}minima"), r.minima.len() as f64);
    for (i, m) in r.minima.iter().enumerate() {
        report.scalar(&format!("{prefix}minimum_{i}_vbar"), m.vbar);
        report.scalar(&format!("{prefix}minimum_{i}_integral"), m.integral);
        report.text(&format!("{prefix}minimum_{i}_satisfies"), m.satisfies.to_string());
    }
    report.text(&format!("{prefix}delta_condition"), r.delta_condition.holds.to_string());
    report.scalar(&format!("{prefix}delta_sup"), r.delta_condition.sup);
    report.text(&format!("{prefix}delta_prime_heuristic"), r.delta_prime.holds_heuristic.to_string());
}

fn penrose_check(s: &Scenario, dir: &Path, report: &mut Report) -> Result<()> {
    let p = build_profile(s.profile.as_ref().context("profile")?)?;
    let cfg = QuadConfig::default();
    let pr = p.check_penrose(&cfg)?;
    penrose_report(&pr, "", report);
    if let Some(alpha) = s.model.alpha {
        penrose_report(&p.check_alpha_penrose(alpha, &cfg)?, "ion_", report);
    }
    let mut rows = Vec::new();
    if pr.unstable {
        let m = s.model.m.context("model.m")?;
        let modes = s.model.modes.clone().unwrap_or_else(|| vec![1]);
        let search = find_unstable_roots(&p, m, &modes, &SearchBox::with_omega(ROOT_BOX_OMEGA), &RootFinderConfig::default())?;
        report.scalar("torus_m", m);
        report.scalar("roots", search.roots.len() as f64);
        if let Some(l) = search.leading() {
            report.scalar("leading_re_lambda", l.lambda.re);
            report.scalar("leading_im_lambda", l.lambda.im);
        }
        for r in &search.roots {
            rows.push([r.n as f64, r.lambda.re, r.lambda.im, r.residual, r.zeta.re, r.zeta.im]);
        }
    }
    write_csv(
        &dir.join("penrose.csv"),
        &["n", "re_lambda", "im_lambda", "residual", "zeta_re", "zeta_im"],
        rows,
    )?;
    if let Some(exp) = s.assertions.expect {
        let want = exp == Expectation::Unstable;
        report.check(
            "classification",
            pr.unstable == want,
            format!("expected {}, got {}", if want { "unstable" } else { "stable" }, if pr.unstable { "unstable" } else { "stable" }),
        );
    }
    Ok(())
}

/// Diagnostics row for profiles without a Casimir functional: the
/// functional columns are NaN.
fn plain_record(f: &DistributionField, fields: &FieldState, model: &ModelKind, mu: &[f64], ell: &[f64], clipped: f64) -> DiagnosticsRecord {
    let g = f.grid;
    let dx = g.dx();
    let (pf, ps) = field_energies(fields, model, dx);
    let dev = x_averaged_deviation(f, mu);
    let mut proxies = [0.0; 3];
    for (p, r) in proxies.iter_mut().zip(PROXY_ORDERS) {
        *p = weak_norm_proxy(&dev, r, ell, g.dv());
    }
    let eps = model.eps();
    let osc = oscillation_filter(fields, eps, f.time, None, 0.0, dx);
    DiagnosticsRecord {
        t: f.time,
        mass: f.mass(),
        momentum: f.momentum(),
        kinetic: f.kinetic(),
        potential_field: pf,
        potential_screen: ps,
        h_q: f64::NAN,
        l_eps: f64::NAN,
        l_o_eps: f64::NAN,
        rho_l1: fields.rho.iter().map(|r| (r - 1.0).abs()).sum::<f64>() * dx,
        eps_e_l1: eps * fields.e.iter().map(|e| e.abs()).sum::<f64>() * dx,
        weak_norm_proxies: proxies,
        clipped_mass: clipped,
        osc_residual: osc.residual,
    }
}

fn snapshot_due(s: &Scenario, step: usize, last: bool) -> bool {
    match s.run.snapshot_every {
        None => false,
        Some(0) => last,
        Some(k) => last || step % k == 0,
    }
}

fn instability(s: &Scenario, dir: &Path, report: &mut Report, diag: &mut Vec<DiagnosticsRecord>) -> Result<()> {
    let p = build_profile(s.profile.as_ref().context("profile")?)?;
    let m = s.model.m.context("model.m")?;
    let modes = s.model.modes.clone().unwrap_or_else(|| vec![1]);
    let search = find_unstable_roots(&p, m, &modes, &SearchBox::with_omega(ROOT_BOX_OMEGA), &RootFinderConfig::default())?;
    let root = *search.leading().ok_or_else(|| anyhow!("no unstable root for modes {modes:?} at M = {m}"))?;
    report.scalar("n", root.n as f64);
    report.scalar("re_lambda", root.lambda.re);
    report.scalar("im_lambda", root.lambda.im);
    report.scalar("dispersion_residual", root.residual);
    let grid = grid_of(s)?;
    let mode = build_eigenmode(&p, &root, &grid.xs(), &grid.vs(), m)?;
    let delta = s.model.delta.context("model.delta")?;
    let init = make_perturbed_initial(&p, &mode, grid, delta, s.model.truncate.unwrap_or(false))?;
    report.scalar("delta", delta);
    report.scalar("truncated_nodes", init.truncated_nodes as f64);
    report.scalar("truncation_l1", init.truncation_l1);
    let mut f = init.field;
    let mu: Vec<f64> = grid.vs().iter().map(|&v| p.mu(v)).collect::<qnk_core::Result<_>>()?;
    let mut it = Integrator::new(grid, ModelKind::Rescaled)?;
    let dt = s.run.dt.context("run.dt")?;
    let steps = steps_of(s.run.t_final.context("run.t_final")?, dt);
    let stride = s.run.stride.unwrap_or(1).max(1);
    let mut norms = Vec::new();
    let mut clipped = 0.0;
    for step in 0..=steps {
        if step > 0 {
            clipped += it.step(&mut f, dt)?.clipped_mass;
        }
        if step % stride == 0 || step == steps {
            let fields = it.fields(&f)?;
            let rec = plain_record(&f, &fields, it.model(), &mu, &mode.ell, clipped);
            let hm1 = it.poisson().h_minus_one(&fields.rho.iter().map(|r| r - 1.0).collect::<Vec<_>>());
            norms.push([rec.t, rec.rho_l1, hm1, rec.weak_norm_proxies[0]]);
            diag.push(rec);
        }
        if snapshot_due(s, step, step == steps) {
            write_snapshot(dir, &format!("snapshot_{step:06}"), &f)?;
        }
    }
    write_csv(&dir.join("norms.csv"), &["t", "rho_L1", "rho_Hminus1_proxy", "wproxy_xavg_r0"], &norms)?;
    report.scalar("clipped_mass", clipped);
    let rho: Vec<(f64, f64)> = norms.iter().map(|r| (r[0], r[1])).collect();
    let proxy: Vec<(f64, f64)> = norms.iter().map(|r| (r[0], r[3])).collect();
    let target = root.lambda.re;
    let rate_tol = s.assertions.rate_tol;
    let proxy_tol = s.assertions.proxy_tol;
    match growth_fit(&rho, None) {
        Ok(fit) => {
            report.scalar("rho_rate", fit.rate);
            report.scalar("rho_rate_rel_error", fit.rate / target - 1.0);
            report.scalar("rho_window_start", fit.window.0);
            report.scalar("rho_window_end", fit.window.1);
            report.scalar("rho_r_squared", fit.r_squared);
            if let Some(tol) = rate_tol {
                report.check_le("rho_rate", (fit.rate / target - 1.0).abs(), tol);
            }
            if let Some(eps) = s.model.eps {
                let sc = rescaling_maps(eps, m)?;
                report.scalar("eps", eps);
                report.scalar("scaling_k", sc.k as f64);
                report.scalar("physical_window_end", sc.time(fit.window.1));
                report.scalar("physical_rate", fit.rate / eps);
            }
        }
        Err(e) => {
            report.text("rho_rate", format!("fit failed: {e}"));
            if rate_tol.is_some() {
                report.check("rho_rate", false, e.to_string());
            }
        }
    }
    match growth_fit(&proxy, None) {
        Ok(fit) => {
            report.scalar("proxy_rate", fit.rate);
            report.scalar("proxy_rate_rel_error", fit.rate / (2.0 * target) - 1.0);
            report.scalar("proxy_window_start", fit.window.0);
            report.scalar("proxy_window_end", fit.window.1);
            if let Some(tol) = proxy_tol {
                report.check_le("proxy_rate", (fit.rate / (2.0 * target) - 1.0).abs(), tol);
            }
        }
        Err(e) => {
            report.text("proxy_rate", format!("fit failed: {e}"));
            if proxy_tol.is_some() {
                report.check("proxy_rate", false, e.to_string());
            }
        }
    }
    Ok(())
}

fn stable_model(s: &Scenario) -> Result<ModelKind> {
    let eps = s.model.eps.context("model.eps")?;
    let m = match s.model.alpha {
        Some(alpha) if alpha > 0.0 => ModelKind::Ion { eps, alpha },
        _ => ModelKind::Electron { eps },
    };
    m.validate()?;
    Ok(m)
}

/// `½ [μ(v − a cos 2πx/L) + μ(v + a cos 2πx/L)]`: unit density, zero current.
pub fn counter_shifted(grid: PhaseGrid, p: &Profile, a: f64) -> Result<DistributionField> {
    let mut err = None;
    let mut f = DistributionField::from_fn(grid, |x, v| {
        let s = a * (2.0 * PI * x / grid.lx).cos();
        match (p.mu(v - s), p.mu(v + s)) {
            (Ok(l), Ok(r)) => 0.5 * (l + r),
            (Err(e), _) | (_, Err(e)) => {
                err = Some(e);
                0.0
            }
        }
    });
    if let Some(e) = err {
        return Err(e.into());
    }
    f.normalize();
    Ok(f)
}

/// Result of one stable run.
struct StableRun {
    records: Vec<DiagnosticsRecord>,
    clipped: f64,
}

fn run_stable(
    s: &Scenario,
    dir: Option<&Path>,
    grid: PhaseGrid,
    dt: f64,
    stride: usize,
    diagnostics: &Diagnostics,
    mut f: DistributionField,
) -> Result<StableRun> {
    let mut it = Integrator::new(grid, diagnostics.model)?;
    let steps = steps_of(s.run.t_final.context("run.t_final")?, dt);
    let mut records = Vec::new();
    let mut clipped = 0.0;
    for step in 0..=steps {
        if step > 0 {
            clipped += it.step(&mut f, dt)?.clipped_mass;
        }
        if step % stride == 0 || step == steps {
            let fields = it.fields(&f)?;
            records.push(diagnostics.record(&f, &fields, clipped)?);
        }
        if let Some(dir) = dir {
            if snapshot_due(s, step, step == steps) {
                write_snapshot(dir, &format!("snapshot_{step:06}"), &f)?;
            }
        }
    }
    Ok(StableRun { records, clipped })
}

/// `max_t |ℒ(t) − ℒ(0)| / max(ℒ(0), kinetic(0))`.
fn lyapunov_drift(records: &[DiagnosticsRecord]) -> f64 {
    let r0 = &records[0];
    let scale = r0.l_eps.max(r0.kinetic);
    records.iter().map(|r| (r.l_eps - r0.l_eps).abs()).fold(0.0, f64::max) / scale
}

fn well_prepared(s: &Scenario, dir: &Path, report: &mut Report, diag: &mut Vec<DiagnosticsRecord>) -> Result<()> {
    let p = build_profile(s.profile.as_ref().context("profile")?)?;
    let sp = SStableProfile::new(&p)?;
    let model = stable_model(s)?;
    let a = s.model.shift.context("model.shift")?;
    let dt = s.run.dt.context("run.dt")?;
    let stride = s.run.stride.unwrap_or(1).max(1);
    let run = |grid: PhaseGrid, dt: f64, stride: usize, out: Option<&Path>| -> Result<StableRun> {
        let f0 = counter_shifted(grid, &p, a)?;
        let d = Diagnostics::new(&grid, model, sp.clone(), 4.0 * f0.max())?;
        run_stable(s, out, grid, dt, stride, &d, f0)
    };
    let grid = grid_of(s)?;
    let base = run(grid, dt, stride, Some(dir))?;
    let drift = lyapunov_drift(&base.records);
    let r0 = &base.records[0];
    report.scalar("eps", model.eps());
    report.scalar("L_eps_0", r0.l_eps);
    report.scalar("kinetic_0", r0.kinetic);
    report.scalar("lyapunov_drift", drift);
    report.scalar("max_rho_L1", base.records.iter().map(|r| r.rho_l1).fold(0.0, f64::max));
    report.scalar("clipped_mass", base.clipped);
    if let Some(tol) = s.assertions.drift_tol {
        report.check_le("lyapunov_drift", drift, tol);
    }
    if s.run.refine == Some(true) {
        let fine = PhaseGrid::new(2 * grid.nx, 2 * grid.nv, grid.lx, grid.vmax)?;
        let refined = run(fine, 0.5 * dt, 2 * stride, None)?;
        let drift2 = lyapunov_drift(&refined.records);
        let ratio = drift / drift2;
        report.scalar("lyapunov_drift_refined", drift2);
        report.scalar("refinement_ratio", ratio);
        if let Some(min) = s.assertions.refine_ratio {
            report.check("refinement_ratio", ratio >= min, format!("{} >= {}", num(ratio), num(min)));
        }
    }
    *diag = base.records;
    Ok(())
}

/// `V₀` sampled at the x nodes.
pub fn fourier_potential(terms: &[FourierTerm], grid: &PhaseGrid) -> Vec<f64> {
    grid.xs()
        .iter()
        .map(|&x| {
            terms
                .iter()
                .map(|t| {
                    let k = 2.0 * PI * t.n as f64 * x / grid.lx;
                    t.cos * k.cos() + t.sin * k.sin()
                })
                .sum()
        })
        .collect()
}

/// Ill-prepared data `μ(v)(1 − ε ∂ₓₓV₀(x))`, normalized.
pub fn ill_prepared_initial(grid: PhaseGrid, p: &Profile, v0: &PeriodicPotential, eps: f64) -> Result<DistributionField> {
    let d2 = v0.derivative_shifted(2, 0.0);
    let mus: Vec<f64> = grid.vs().iter().map(|&v| p.mu(v)).collect::<qnk_core::Result<_>>()?;
    let mut f = DistributionField::zeros(grid);
    for ix in 0..grid.nx {
        for iv in 0..grid.nv {
            f.values[ix * grid.nv + iv] = mus[iv] * (1.0 - eps * d2[ix]);
        }
    }
    if f.min() < 0.0 {
        return Err(anyhow!("ill-prepared data is negative: eps * max|V0''| must stay below 1"));
    }
    f.normalize();
    Ok(f)
}

/// Summary of an ill-prepared run used for the envelope.
#[derive(Debug, Clone, PartialEq)]
pub struct Envelope {
    pub eps: f64,
    /// `2 ‖∂ₓₓV₀‖_∞`.
    pub growth: f64,
    pub l0: f64,
    pub energy: f64,
    pub q_moment: f64,
    pub series: Vec<(f64, f64)>,
}

impl Envelope {
    /// Smallest `C ≥ 0` with `ℒ(t) ≤ e^{growth·t}[ℒ(0) + C ε (1 + ℰ + 𝒬)]`
    /// at every sample.
    pub fn minimal_constant(&self) -> f64 {
        let w = self.eps * (1.0 + self.energy + self.q_moment);
        self.series
            .iter()
            .map(|&(t, l)| (l * (-self.growth * t).exp() - self.l0) / w)
            .fold(0.0, f64::max)
    }

    pub fn holds(&self, c: f64) -> bool {
        let w = self.eps * (1.0 + self.energy + self.q_moment);
        self.series
            .iter()
            .all(|&(t, l)| l <= (self.growth * t).exp() * (self.l0 + c * w) * (1.0 + 1e-12))
    }

    pub fn sup(&self, t_max: f64) -> f64 {
        self.series.iter().filter(|(t, _)| *t <= t_max + 1e-12).map(|s| s.1).fold(0.0, f64::max)
    }
}

fn ill_prepared(s: &Scenario, dir: &Path, report: &mut Report, diag: &mut Vec<DiagnosticsRecord>) -> Result<()> {
    let p = build_profile(s.profile.as_ref().context("profile")?)?;
    let sp = SStableProfile::new(&p)?;
    let model = stable_model(s)?;
    let eps = model.eps();
    let grid = grid_of(s)?;
    let terms = s.model.v0.as_deref().context("model.v0")?;
    let v0 = PeriodicPotential::from_samples(&fourier_potential(terms, &grid), grid.lx);
    let f0 = ill_prepared_initial(grid, &p, &v0, eps)?;
    let d2 = v0.sup_derivative(2);
    let d3 = v0.sup_derivative(3);
    let diagnostics = Diagnostics::new(&grid, model, sp, 10.0 * f0.max())?.with_v0(v0);
    let q0 = q_moment(&f0, &diagnostics.q)?;
    let dt = s.run.dt.context("run.dt")?;
    let run = run_stable(s, Some(dir), grid, dt, s.run.stride.unwrap_or(1).max(1), &diagnostics, f0)?;
    let r0 = &run.records[0];
    let env = Envelope {
        eps,
        growth: 2.0 * d2,
        l0: r0.l_o_eps,
        energy: r0.energy(),
        q_moment: q0,
        series: run.records.iter().map(|r| (r.t, r.l_o_eps)).collect(),
    };
    report.scalar("eps", eps);
    report.scalar("LO_eps_0", env.l0);
    report.scalar("LO_eps_sup", env.sup(f64::INFINITY));
    report.scalar("energy_0", env.energy);
    report.scalar("q_moment_0", env.q_moment);
    report.scalar("sup_d2_v0", d2);
    report.scalar("sup_d3_v0", d3);
    report.scalar("k_constant_unit_c", k_constant(d2, d3, 1.0));
    report.scalar("minimal_c", env.minimal_constant());
    report.scalar("max_osc_residual", run.records.iter().map(|r| r.osc_residual).fold(0.0, f64::max));
    report.scalar("clipped_mass", run.clipped);
    if let Some(c) = s.assertions.envelope_c {
        report.check("envelope", env.holds(c), format!("minimal constant {} <= {}", num(env.minimal_constant()), num(c)));
    }
    *diag = run.records;
    Ok(())
}

fn write_bgk_files(wave: &BgkWave, dir: &Path) -> Result<f64> {
    let t = &wave.table;
    write_csv(
        &dir.join("ftrapped.csv"),
        &["u", "f_T"],
        t.speeds().iter().zip(t.values()).map(|(u, f)| [*u, *f]),
    )?;
    let g = wave.f.grid;
    let mut rows = Vec::with_capacity(g.len());
    for ix in 0..g.nx {
        for iv in 0..g.nv {
            rows.push([g.x(ix), g.v(iv), wave.f.at(ix, iv)]);
        }
    }
    write_csv(&dir.join("wave.csv"), &["x", "v", "f"], rows)?;
    let prof = neutrality_profile(wave, &g.xs())?;
    write_csv(
        &dir.join("neutrality.csv"),
        &["x", "rho_minus_1", "residual"],
        prof.iter().map(|(x, r)| [*x, *r + target_density(wave, *x) - 1.0, *r]),
    )?;
    Ok(prof.iter().fold(0.0, |m, (_, r)| m.max(r.abs())))
}

fn bgk_wave_checks(s: &Scenario, wave: &BgkWave, dir: &Path, report: &mut Report) -> Result<()> {
    let neutrality = write_bgk_files(wave, dir)?;
    debug_assert_eq!(neutrality, verify_neutrality(wave).unwrap_or(neutrality));
    report.scalar("well_depth", -wave.well.vmin());
    report.scalar("table_u_ref", wave.table.u_ref());
    report.scalar("f0_at_zero", wave.bd.at_zero());
    report.scalar("ftrapped_near_zero", trapped_density(&wave.bd, 1e-8)?);
    report.scalar("neutrality_max", neutrality);
    report.scalar("boundary_density", wave.f.boundary_density());
    if let Some(tol) = s.assertions.neutrality_tol {
        report.check_le("neutrality", neutrality, tol);
    }
    let steps = s.run.steps.unwrap_or(0);
    if steps > 0 {
        let dt = s.run.dt.context("run.dt")?;
        let e = well_field(&wave.well, &wave.f.grid);
        let mut it = Integrator::new(wave.f.grid, ModelKind::Rescaled)?;
        let mut f = wave.f.clone();
        let mut rows = Vec::with_capacity(steps + 1);
        rows.push([0.0, 0.0, 0.0]);
        for k in 1..=steps {
            it.step_frozen(&mut f, &e, dt);
            rows.push([k as f64, f.time, f.l1_distance(&wave.f)]);
        }
        write_csv(&dir.join("stationarity.csv"), &["step", "t", "l1_change"], &rows)?;
        let change = rows[steps][2];
        report.scalar("stationarity_steps", steps as f64);
        report.scalar("stationarity_l1_change", change);
        if let Some(tol) = s.assertions.stationarity_tol {
            report.check_le("stationarity", change, tol);
        }
    }
    Ok(())
}

fn well_of(s: &Scenario) -> Result<qnk_core::bgk::PotentialWell> {
    let w = s.well.as_ref().context("well")?;
    let formula = WellFormula::parse(&w.v)?;
    Ok(formula.to_well(w.intervals)?)
}

fn bgk_build(s: &Scenario, dir: &Path, report: &mut Report) -> Result<()> {
    let bd = build_boundary(s.boundary.as_ref().context("boundary")?)?;
    let well = well_of(s)?;
    let grid = grid_of(s)?;
    let wave = assemble_wave(&bd, &well, grid, BgkModel::Quasineutral)?;
    bgk_wave_checks(s, &wave, dir, report)
}

/// Random admissible boundary data: half-Maxwellian or power-law sides with
/// a random split of the unit incoming mass.
pub fn random_boundary(rng: &mut ChaCha8Rng) -> Result<BoundaryData> {
    let w: f64 = rng.gen_range(0.2..=1.0);
    let mut side = |mass: f64| -> Result<BoundaryFn> {
        if mass == 0.0 {
            return Ok(BoundaryFn::zero());
        }
        Ok(if rng.gen_bool(0.5) {
            BoundaryFn::half_maxwellian(rng.gen_range(0.2..3.0), mass)?
        } else {
            BoundaryFn::power_law(rng.gen_range(0.5..4.0), rng.gen_range(0.5..4.0), mass)?
        })
    };
    let minus_mass = if w > 0.9 { 0.0 } else { 1.0 - w };
    let plus = side(1.0 - minus_mass)?;
    let minus = side(minus_mass)?;
    Ok(BoundaryData::new(plus, minus)?)
}

fn ion_variant(s: &Scenario, dir: &Path, report: &mut Report) -> Result<()> {
    let alpha = s.model.alpha.context("model.alpha")?;
    let bd = build_boundary(s.boundary.as_ref().context("boundary")?)?;
    let bound = (2.0 / alpha).sqrt();
    let ub = ubar(&bd, alpha)?;
    report.scalar("alpha", alpha);
    report.scalar("ubar", ub);
    report.scalar("ubar_bound", bound);
    let check_bound = s.assertions.ubar_bound == Some(true);
    if check_bound {
        report.check("ubar_bound", ub <= bound, format!("{} <= {}", num(ub), num(bound)));
    }
    let n = s.model.random_boundaries.unwrap_or(0);
    if n > 0 {
        let mut rng = ChaCha8Rng::seed_from_u64(s.seed);
        let mut rows = Vec::with_capacity(n);
        for k in 0..n {
            let b = random_boundary(&mut rng)?;
            rows.push([k as f64, b.at_zero(), ubar(&b, alpha)?]);
        }
        let worst = rows.iter().map(|r| r[2]).fold(0.0, f64::max);
        write_csv(&dir.join("ubar_random.csv"), &["draw", "f0_at_zero", "ubar"], &rows)?;
        report.scalar("random_boundaries", n as f64);
        report.scalar("random_ubar_max", worst);
        if check_bound {
            report.check("random_ubar_bound", worst <= bound, format!("{} <= {}", num(worst), num(bound)));
        }
    }
    if let Some(p) = &s.profile {
        let prof = build_profile(p)?;
        penrose_report(&prof.check_alpha_penrose(alpha, &QuadConfig::default())?, "ion_", report);
    }
    if s.well.is_some() {
        let well = well_of(s)?;
        let wave = assemble_wave(&bd, &well, grid_of(s)?, BgkModel::Ion { alpha })?;
        bgk_wave_checks(s, &wave, dir, report)?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn counter_shift_keeps_density_and_current() {
        let g = PhaseGrid::new(16, 128, 1.0, 8.0).unwrap();
        let p = Profile::maxwellian(1.0, 0.0).unwrap();
        let f = counter_shifted(g, &p, 0.5).unwrap();
        assert!(f.density().iter().all(|r| (r - 1.0).abs() < 1e-12));
        assert!(f.current().iter().all(|j| j.abs() < 1e-12));
        assert!(f.min() >= 0.0);
    }

    #[test]
    fn ill_prepared_field_matches_v0() {
        let g = PhaseGrid::new(32, 128, 1.0, 8.0).unwrap();
        let p = Profile::maxwellian(1.0, 0.0).unwrap();
        let terms = [FourierTerm { n: 1, cos: 0.1, sin: 0.0 }];
        let v0 = PeriodicPotential::from_samples(&fourier_potential(&terms, &g), 1.0);
        let eps = 0.05;
        let f = ill_prepared_initial(g, &p, &v0, eps).unwrap();
        let fields = qnk_core::solver::solve_poisson(&f.density(), &f.current(), &ModelKind::Electron { eps }, &g).unwrap();
        let dv0 = v0.derivative_shifted(1, 0.0);
        for (e, d) in fields.e.iter().zip(&dv0) {
            assert!((eps * e + d).abs() < 1e-9, "{e} {d}");
        }
    }

    #[test]
    fn envelope_constant_is_tight() {
        let env = Envelope {
            eps: 0.1,
            growth: 1.0,
            l0: 0.01,
            energy: 0.5,
            q_moment: 0.5,
            series: vec![(0.0, 0.01), (1.0, 0.05), (2.0, 0.02)],
        };
        let c = env.minimal_constant();
        assert!(env.holds(c));
        assert!(!env.holds(0.9 * c));
        assert_eq!(env.sup(1.5), 0.05);
    }

    #[test]
    fn random_boundaries_are_admissible_and_deterministic() {
        let mut a = ChaCha8Rng::seed_from_u64(3);
        let mut b = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..10 {
            let x = random_boundary(&mut a).unwrap();
            let y = random_boundary(&mut b).unwrap();
            assert_eq!(x, y);
            assert!((x.plus.mass() + x.minus.mass() - 1.0).abs() < 1e-12);
        }
    }
}
