//! Built-in oracle checks run by `qnk selftest`.

use qnk_core::bgk::{abel_invert_oracle, quad_identity_selftest, trapped_density, BoundaryData};
use qnk_core::dispersion::{find_unstable_roots, winding_count, RootFinderConfig, SearchBox};
use qnk_core::profile::Profile;
use qnk_core::quadrature::QuadConfig;

#[derive(Debug, Clone, PartialEq)]
pub struct SelfTest {
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
}

fn entry(name: &'static str, r: qnk_core::Result<(bool, String)>) -> SelfTest {
    match r {
        Ok((passed, detail)) => SelfTest { name, passed, detail },
        Err(e) => SelfTest {
            name,
            passed: false,
            detail: e.to_string(),
        },
    }
}

pub fn run() -> Vec<SelfTest> {
    let mut out = vec![SelfTest {
        name: "quadrature identity",
        passed: quad_identity_selftest(),
        detail: "three windows, tolerance 1e-8".into(),
    }];
    out.push(entry("penrose integral oracle", penrose_oracle()));
    out.push(entry("root count vs winding number", winding()));
    out.push(entry("abel inversion oracle", abel()));
    out
}

fn penrose_oracle() -> qnk_core::Result<(bool, String)> {
    let p = Profile::two_stream(0.25, 2.0, [0.5, 0.5])?;
    let coarse = p.penrose_integral(0.0, &QuadConfig::default())?;
    let fine = p.penrose_integral(0.0, &QuadConfig::with_tol(1e-13, 1e-12))?;
    let d = (coarse - fine).abs();
    Ok((coarse > 0.0 && d <= 1e-8, format!("integral {coarse:e}, difference {d:e}")))
}

fn winding() -> qnk_core::Result<(bool, String)> {
    let p = Profile::two_stream(0.25, 2.0, [0.5, 0.5])?;
    let bx = SearchBox::with_omega(1.5);
    let roots = find_unstable_roots(&p, 20.0, &[1], &bx, &RootFinderConfig::default())?;
    let w = winding_count(&p, 1, 20.0, &bx)?;
    let n = roots.roots.len() as i64;
    Ok((n >= 1 && n == w, format!("{n} roots, winding {w}")))
}

fn abel() -> qnk_core::Result<(bool, String)> {
    let bd = BoundaryData::half_maxwellian(1.0)?;
    let us: Vec<f64> = (0..=40).map(|k| 0.01 + k as f64 * (2.0 - 0.01) / 40.0).collect();
    let oracle = abel_invert_oracle(&bd, &us)?;
    let mut err = 0.0f64;
    for (u, o) in us.iter().zip(&oracle) {
        err = err.max((trapped_density(&bd, *u)? - o).abs());
    }
    Ok((err <= 1e-4, format!("sup error {err:e} on [0.01, 2]")))
}
