//! File formats: CSV tables, run reports and phase-space snapshots.

use std::fmt::Write as _;
use std::fs::File;
use std::io::{BufWriter, Read, Write};
use std::path::{Path, PathBuf};

use anyhow::{bail, ensure, Context, Result};

use qnk_core::diagnostics::DiagnosticsRecord;
use qnk_core::profile::Tabulated;
use qnk_core::solver::{DistributionField, PhaseGrid};

pub const DIAG_HEADER: [&str; 16] = [
    "t",
    "mass",
    "momentum",
    "kinetic",
    "pot_field",
    "pot_screen",
    "HQ",
    "L_eps",
    "LO_eps",
    "rho_L1",
    "epsE_L1",
    "wproxy_r0",
    "wproxy_r1",
    "wproxy_r2",
    "clipped_mass",
    "osc_residual",
];

const SNAPSHOT_MAGIC: &[u8; 8] = b"QNKSNAP1";

/// Shortest round-trip representation.
pub fn num(x: f64) -> String {
    if x.is_nan() {
        "nan".into()
    } else {
        format!("{x:e}")
    }
}

fn read_two_columns(path: &Path, second: &str) -> Result<(Vec<f64>, Vec<f64>)> {
    let mut rdr = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_path(path)
        .with_context(|| format!("opening {}", path.display()))?;
    let headers = rdr.headers()?.clone();
    ensure!(
        headers.len() == 2 && &headers[0] == "v" && &headers[1] == second,
        "{}: header must be `v,{second}`, found `{}`",
        path.display(),
        headers.iter().collect::<Vec<_>>().join(",")
    );
    let (mut vs, mut ys) = (Vec::new(), Vec::new());
    for (line, rec) in rdr.records().enumerate() {
        let rec = rec?;
        let parse = |i: usize| -> Result<f64> {
            rec[i]
                .parse::<f64>()
                .with_context(|| format!("{}: row {}: bad number `{}`", path.display(), line + 2, &rec[i]))
        };
        vs.push(parse(0)?);
        ys.push(parse(1)?);
    }
    ensure!(vs.len() >= 4, "{}: need at least 4 rows", path.display());
    Ok((vs, ys))
}

/// Loads a tabulated profile from a `v,mu` CSV on a uniform grid.
pub fn read_profile_csv(path: &Path) -> Result<Tabulated> {
    let (vs, mus) = read_two_columns(path, "mu")?;
    Tabulated::from_pairs(&vs, &mus).with_context(|| format!("{}: not a valid uniform profile table", path.display()))
}

/// Loads tabulated boundary data from a `v,f` CSV.
pub fn read_boundary_csv(path: &Path) -> Result<(Vec<f64>, Vec<f64>)> {
    read_two_columns(path, "f")
}

/// Writes a CSV with the given header and numeric rows.
pub fn write_csv<I, R>(path: &Path, header: &[&str], rows: I) -> Result<()>
where
    I: IntoIterator<Item = R>,
    R: AsRef<[f64]>,
{
    let mut w = csv::Writer::from_path(path).with_context(|| format!("creating {}", path.display()))?;
    w.write_record(header)?;
    for row in rows {
        let row = row.as_ref();
        ensure!(row.len() == header.len(), "row width {} does not match header {}", row.len(), header.len());
        w.write_record(row.iter().map(|x| num(*x)))?;
    }
    w.flush()?;
    Ok(())
}

pub fn diag_row(r: &DiagnosticsRecord) -> [f64; 16] {
    [
        r.t,
        r.mass,
        r.momentum,
        r.kinetic,
        r.potential_field,
        r.potential_screen,
        r.h_q,
        r.l_eps,
        r.l_o_eps,
        r.rho_l1,
        r.eps_e_l1,
        r.weak_norm_proxies[0],
        r.weak_norm_proxies[1],
        r.weak_norm_proxies[2],
        r.clipped_mass,
        r.osc_residual,
    ]
}

pub fn write_diag(path: &Path, records: &[DiagnosticsRecord]) -> Result<()> {
    write_csv(path, &DIAG_HEADER, records.iter().map(diag_row))
}

/// Reads a `diag.csv` back into rows.
pub fn read_diag(path: &Path) -> Result<Vec<[f64; 16]>> {
    let mut rdr = csv::Reader::from_path(path)?;
    let h = rdr.headers()?.clone();
    ensure!(h.iter().eq(DIAG_HEADER.iter().copied()), "unexpected diag header");
    let mut out = Vec::new();
    for rec in rdr.records() {
        let rec = rec?;
        let mut row = [0.0; 16];
        for (k, x) in row.iter_mut().enumerate() {
            *x = rec[k].parse()?;
        }
        out.push(row);
    }
    Ok(out)
}

/// Outcome of one declared assertion.
#[derive(Debug, Clone, PartialEq)]
pub struct Check {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

/// Scalar results and assertions of one scenario.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Report {
    pub scenario: String,
    pub kind: String,
    pub scalars: Vec<(String, String)>,
    pub checks: Vec<Check>,
    pub error: Option<String>,
}

impl Report {
    pub fn new(scenario: &str, kind: &str) -> Self {
        Self {
            scenario: scenario.into(),
            kind: kind.into(),
            ..Default::default()
        }
    }

    pub fn scalar(&mut self, key: &str, value: f64) {
        self.scalars.push((key.into(), num(value)));
    }

    pub fn text(&mut self, key: &str, value: impl Into<String>) {
        self.scalars.push((key.into(), value.into()));
    }

    pub fn check(&mut self, name: &str, passed: bool, detail: impl Into<String>) {
        self.checks.push(Check {
            name: name.into(),
            passed,
            detail: detail.into(),
        });
    }

    /// Checks `value <= tol`.
    pub fn check_le(&mut self, name: &str, value: f64, tol: f64) {
        self.check(name, value <= tol, format!("{} <= {}", num(value), num(tol)));
    }

    pub fn passed(&self) -> bool {
        self.error.is_none() && self.checks.iter().all(|c| c.passed)
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.scalars.iter().find(|(k, _)| k == key).map(|(_, v)| v.as_str())
    }

    pub fn get_f64(&self, key: &str) -> Option<f64> {
        self.get(key).and_then(|v| v.parse().ok())
    }

    pub fn render(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "scenario: {}", self.scenario);
        let _ = writeln!(s, "kind: {}", self.kind);
        let _ = writeln!(s);
        let _ = writeln!(s, "[results]");
        for (k, v) in &self.scalars {
            let _ = writeln!(s, "{k} = {v}");
        }
        let _ = writeln!(s);
        let _ = writeln!(s, "[assertions]");
        for c in &self.checks {
            let tag = if c.passed { "PASS" } else { "FAIL" };
            let _ = writeln!(s, "{tag} {}: {}", c.name, c.detail);
        }
        if let Some(e) = &self.error {
            let _ = writeln!(s, "ERROR {e}");
        }
        let _ = writeln!(s);
        let _ = writeln!(s, "status: {}", if self.passed() { "pass" } else { "fail" });
        s
    }
}

/// Binary phase-space dump plus a text sidecar; returns the binary path.
///
/// Layout: 8-byte magic, then `Nx`, `Nv` as little-endian `u64`, then
/// `Lx`, `vmax`, `t` and the `Nx·Nv` values (x-major) as little-endian `f64`.
pub fn write_snapshot(dir: &Path, stem: &str, f: &DistributionField) -> Result<PathBuf> {
    let bin = dir.join(format!("{stem}.bin"));
    let mut w = BufWriter::new(File::create(&bin).with_context(|| format!("creating {}", bin.display()))?);
    let g = f.grid;
    w.write_all(SNAPSHOT_MAGIC)?;
    w.write_all(&(g.nx as u64).to_le_bytes())?;
    w.write_all(&(g.nv as u64).to_le_bytes())?;
    for x in [g.lx, g.vmax, f.time].iter().chain(&f.values) {
        w.write_all(&x.to_le_bytes())?;
    }
    w.flush()?;
    let meta = format!(
        "format = qnk-snapshot-1\nbyte_order = little_endian\nnx = {}\nnv = {}\nlx = {}\nvmax = {}\nt = {}\nlayout = f[ix * nv + iv]\nx_nodes = ix * lx / nx\nv_nodes = -vmax + (iv + 0.5) * 2 vmax / nv\nmass = {}\n",
        g.nx,
        g.nv,
        num(g.lx),
        num(g.vmax),
        num(f.time),
        num(f.mass())
    );
    std::fs::write(dir.join(format!("{stem}.meta")), meta)?;
    Ok(bin)
}

pub fn read_snapshot(path: &Path) -> Result<DistributionField> {
    let mut bytes = Vec::new();
    File::open(path)
        .with_context(|| format!("opening {}", path.display()))?
        .read_to_end(&mut bytes)?;
    ensure!(bytes.len() >= 48 && &bytes[..8] == SNAPSHOT_MAGIC, "{}: not a snapshot", path.display());
    let word = |i: usize| -> [u8; 8] { bytes[i..i + 8].try_into().expect("8 bytes") };
    let nx = u64::from_le_bytes(word(8)) as usize;
    let nv = u64::from_le_bytes(word(16)) as usize;
    let real = |i: usize| f64::from_le_bytes(word(i));
    let (lx, vmax, t) = (real(24), real(32), real(40));
    let n = nx.checked_mul(nv).context("snapshot size overflow")?;
    if bytes.len() != 48 + 8 * n {
        bail!("{}: expected {} values, file holds {} bytes", path.display(), n, bytes.len());
    }
    let grid = PhaseGrid::new(nx, nv, lx, vmax)?;
    let mut f = DistributionField::zeros(grid);
    for (k, x) in f.values.iter_mut().enumerate() {
        *x = real(48 + 8 * k);
    }
    f.time = t;
    Ok(f)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn snapshot_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let g = PhaseGrid::new(8, 16, 2.0, 5.0).unwrap();
        let mut f = DistributionField::from_fn(g, |x, v| (x + 1.0) * (-v * v).exp());
        f.time = 0.625;
        let path = write_snapshot(dir.path(), "snap", &f).unwrap();
        let back = read_snapshot(&path).unwrap();
        assert_eq!(back.values, f.values);
        assert_eq!(back.time, f.time);
        assert_eq!(back.grid, f.grid);
        let meta = std::fs::read_to_string(dir.path().join("snap.meta")).unwrap();
        assert!(meta.contains("nx = 8") && meta.contains("nv = 16"));
        assert_eq!(std::fs::metadata(&path).unwrap().len(), 48 + 8 * 128);
    }

    #[test]
    fn truncated_snapshot_is_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let g = PhaseGrid::new(4, 4, 1.0, 1.0).unwrap();
        let path = write_snapshot(dir.path(), "s", &DistributionField::zeros(g)).unwrap();
        let bytes = std::fs::read(&path).unwrap();
        std::fs::write(&path, &bytes[..bytes.len() - 8]).unwrap();
        assert!(read_snapshot(&path).is_err());
    }

    #[test]
    fn profile_csv_header_is_checked() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("mu.csv");
        let mut s = String::from("v,mu\n");
        for k in 0..=200 {
            let v = -8.0 + 0.08 * k as f64;
            let _ = writeln!(s, "{v},{}", (-v * v / 2.0).exp() / (2.0 * std::f64::consts::PI).sqrt());
        }
        std::fs::write(&p, &s).unwrap();
        let t = read_profile_csv(&p).unwrap();
        assert_eq!(t.samples().len(), 201);
        std::fs::write(&p, s.replacen("v,mu", "v,f", 1)).unwrap();
        let err = format!("{:#}", read_profile_csv(&p).unwrap_err());
        assert!(err.contains("header"), "{err}");
    }

    #[test]
    fn numbers_round_trip() {
        for x in [0.1, 1.0 / 3.0, -2.5e-300, 6.02e23, 0.0] {
            assert_eq!(num(x).parse::<f64>().unwrap(), x);
        }
        assert_eq!(num(f64::NAN), "nan");
    }

    #[test]
    fn report_status() {
        let mut r = Report::new("a", "bgk_build");
        r.scalar("x", 0.5);
        r.check_le("small", 1e-7, 1e-6);
        assert!(r.passed());
        r.check_le("big", 1e-5, 1e-6);
        assert!(!r.passed());
        let txt = r.render();
        assert!(txt.contains("FAIL big") && txt.contains("status: fail") && txt.contains("x = 5e-1"));
        assert_eq!(r.get_f64("x"), Some(0.5));
    }
}
