use std::f64::consts::PI;

use qnk_core::bgk::{
    assemble_wave, build_table, verify_neutrality, well_field, BgkModel, BoundaryData, BoundaryFn, PotentialWell,
};
use qnk_core::diagnostics::growth_fit;
use qnk_core::dispersion::{build_eigenmode, find_unstable_roots, RootFinderConfig, SearchBox};
use qnk_core::profile::Profile;
use qnk_core::solver::{make_perturbed_initial, DistributionField, Integrator, ModelKind, PhaseGrid};

fn mode_amplitude(rho: &[f64], n: usize, lx: f64) -> f64 {
    let h = lx / rho.len() as f64;
    let (mut c, mut s) = (0.0, 0.0);
    for (i, r) in rho.iter().enumerate() {
        let a = 2.0 * PI * n as f64 * i as f64 * h / lx;
        c += (r - 1.0) * a.cos() * h;
        s += (r - 1.0) * a.sin() * h;
    }
    c.hypot(s)
}

#[test]
fn two_stream_mode_grows_at_the_dispersion_rate() {
    let mu = Profile::two_stream(0.25, 2.0, [0.5, 0.5]).unwrap();
    let m = 20.0;
    let search = find_unstable_roots(&mu, m, &[1, 2, 3], &SearchBox::with_omega(2.0), &RootFinderConfig::default()).unwrap();
    let root = *search.leading().expect("two-stream profile is unstable");
    assert!(root.lambda.re > 0.1);

    let grid = PhaseGrid::new(64, 256, m, 6.0).unwrap();
    let mode = build_eigenmode(&mu, &root, &grid.xs(), &grid.vs(), m).unwrap();
    let init = make_perturbed_initial(&mu, &mode, grid, 1e-6, false).unwrap();
    let mut f = init.field;
    let mass0 = f.mass();
    let mut integ = Integrator::new(grid, ModelKind::Rescaled).unwrap();
    let dt = 0.0625;
    let mut series = Vec::new();
    for k in 0..=400 {
        let t = k as f64 * dt;
        series.push((t, mode_amplitude(&f.density(), root.n as usize, m)));
        integ.step(&mut f, dt).unwrap();
    }
    assert!((f.mass() - mass0).abs() <= 1e-10 * mass0);
    let fit = growth_fit(&series, Some((5.0, 25.0))).unwrap();
    let rel = (fit.rate - root.lambda.re).abs() / root.lambda.re;
    assert!(rel < 0.1, "fitted {} vs {}", fit.rate, root.lambda.re);
}

#[test]
fn maxwellian_is_a_steady_state() {
    let mu = Profile::maxwellian(1.0, 0.0).unwrap();
    let grid = PhaseGrid::new(16, 128, 1.0, 8.0).unwrap();
    let f0 = DistributionField::homogeneous(grid, &mu).unwrap();
    let mut f = f0.clone();
    let mut integ = Integrator::new(grid, ModelKind::Electron { eps: 0.05 }).unwrap();
    for _ in 0..50 {
        integ.step(&mut f, 0.01).unwrap();
    }
    assert!(f.l1_distance(&f0) < 1e-12);
}

#[test]
fn bgk_wave_from_boundary_data() {
    let bd = BoundaryData::new(
        BoundaryFn::half_maxwellian(1.0, 0.6).unwrap(),
        BoundaryFn::power_law(4.0, 2.0, 0.4).unwrap(),
    )
    .unwrap();
    let well = |d: f64| {
        PotentialWell::from_fn(move |x| -d * (PI * x).sin().powi(2), move |x| -d * PI * (2.0 * PI * x).sin(), 2048)
            .unwrap()
    };
    let grid = PhaseGrid::new(64, 128, 1.0, 6.0).unwrap();
    let wave = assemble_wave(&bd, &well(0.3), grid, BgkModel::Quasineutral).unwrap();
    assert!(verify_neutrality(&wave).unwrap() <= 1e-6);
    assert!(wave.f.min() >= 0.0);

    // the trapped profile depends on the data only
    let (a, _) = build_table(&bd, &well(0.3), BgkModel::Quasineutral).unwrap();
    let (b, _) = build_table(&bd, &well(0.1), BgkModel::Quasineutral).unwrap();
    assert_eq!(a.values(), b.values());

    let e = well_field(&wave.well, &grid);
    let mut f = wave.f.clone();
    let mut integ = Integrator::new(grid, ModelKind::Rescaled).unwrap();
    integ.step_frozen(&mut f, &e, 1e-3);
    assert!((f.mass() - wave.f.mass()).abs() <= 1e-9);
}
