//! Scenario configuration files.
//!
//! A config is a TOML document holding an array of `[[scenario]]` tables.
//! Parsing is strict: unknown keys are rejected with their full key path.
//! [`Scenario::resolve`] fills every default so that the echo written next to
//! the outputs reproduces the run exactly.

use std::fmt;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use qnk_core::profile::Profile;
use qnk_core::solver::rescaling_maps;

#[derive(Debug, thiserror::Error)]
pub enum ConfigError {
    #[error("cannot read {path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("syntax error: {0}")]
    Syntax(String),
    #[error("at `{path}`: {message}")]
    Schema { path: String, message: String },
    #[error("scenario `{scenario}`: {message}")]
    Invalid { scenario: String, message: String },
}

impl ConfigError {
    fn invalid(s: &Scenario, message: impl Into<String>) -> Self {
        ConfigError::Invalid {
            scenario: s.name.clone(),
            message: message.into(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ScenarioKind {
    PenroseCheck,
    Instability,
    StableWellPrepared,
    StableIllPrepared,
    BgkBuild,
    IonVariant,
}

impl fmt::Display for ScenarioKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Self::PenroseCheck => "penrose_check",
            Self::Instability => "instability",
            Self::StableWellPrepared => "stable_well_prepared",
            Self::StableIllPrepared => "stable_ill_prepared",
            Self::BgkBuild => "bgk_build",
            Self::IonVariant => "ion_variant",
        };
        f.write_str(s)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConfigFile {
    pub scenario: Vec<Scenario>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    pub name: String,
    pub kind: ScenarioKind,
    #[serde(default)]
    pub seed: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub profile: Option<ProfileConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub boundary: Option<BoundaryConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub well: Option<WellConfig>,
    #[serde(default)]
    pub grid: GridConfig,
    #[serde(default)]
    pub model: ModelConfig,
    #[serde(default)]
    pub run: RunConfig,
    #[serde(default, rename = "assert")]
    pub assertions: AssertConfig,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ProfileConfig {
    Maxwellian {
        #[serde(default = "one")]
        t: f64,
        #[serde(default)]
        u: f64,
    },
    TwoStream {
        t: f64,
        u: f64,
        #[serde(default = "halves")]
        weights: [f64; 2],
    },
    BumpOnTail {
        t: f64,
        amplitude: f64,
        center: f64,
        width: f64,
    },
    CompactBump {
        a: f64,
        b: f64,
    },
    /// Two-column CSV with header `v,mu` on a uniform grid; relative paths are
    /// taken from the config file's directory.
    Tabulated {
        file: PathBuf,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BoundaryConfig {
    pub plus: BoundarySide,
    #[serde(default = "BoundarySide::zero")]
    pub minus: BoundarySide,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum BoundarySide {
    Zero,
    HalfMaxwellian {
        #[serde(default = "one")]
        t: f64,
        mass: f64,
    },
    PowerLaw {
        exponent: f64,
        cutoff: f64,
        mass: f64,
    },
    /// CSV with header `v,f` on `[0, v_max]`.
    Tabulated {
        file: PathBuf,
        mass: f64,
    },
}

impl BoundarySide {
    fn zero() -> Self {
        BoundarySide::Zero
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WellConfig {
    /// Formula in `x` on `[0, 1]`, e.g. `-0.3*sin^2(pi*x)`.
    pub v: String,
    /// Sampling intervals on `[0, 1]`.
    #[serde(default = "well_intervals")]
    pub intervals: usize,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub nx: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub nv: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lx: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub vmax: Option<f64>,
}

/// One Fourier term `cos_amp cos(2πnx) + sin_amp sin(2πnx)` of `V₀`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FourierTerm {
    pub n: u32,
    #[serde(default)]
    pub cos: f64,
    #[serde(default)]
    pub sin: f64,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub eps: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub alpha: Option<f64>,
    /// Period of the rescaled torus.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub m: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub delta: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub truncate: Option<bool>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub modes: Option<Vec<i64>>,
    /// Velocity amplitude of the counter-shifted well-prepared data.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub shift: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub v0: Option<Vec<FourierTerm>>,
    /// Number of random boundary data drawn by `ion_variant`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub random_boundaries: Option<usize>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub t_final: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dt: Option<f64>,
    /// Steps between diagnostics rows.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub stride: Option<usize>,
    /// Steps between snapshot dumps; 0 writes only the final state.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub snapshot_every: Option<usize>,
    /// Frozen-field steps applied to a BGK wave.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub steps: Option<usize>,
    /// Repeat a stable run on the doubled grid with halved dt.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub refine: Option<bool>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AssertConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub expect: Option<Expectation>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rate_tol: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub proxy_tol: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub drift_tol: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub refine_ratio: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub neutrality_tol: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub stationarity_tol: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub envelope_c: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ubar_bound: Option<bool>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Expectation {
    Stable,
    Unstable,
}

fn one() -> f64 {
    1.0
}

fn halves() -> [f64; 2] {
    [0.5, 0.5]
}

fn well_intervals() -> usize {
    2048
}

/// Parses a config document; `base` resolves relative file paths.
pub fn parse_config(text: &str, base: &Path) -> Result<Vec<Scenario>, ConfigError> {
    let value: toml::Value = toml::from_str(text).map_err(|e| ConfigError::Syntax(e.to_string()))?;
    let file: ConfigFile = serde_path_to_error::deserialize(value).map_err(|e| ConfigError::Schema {
        path: e.path().to_string(),
        message: e.inner().to_string(),
    })?;
    let mut names = std::collections::BTreeSet::new();
    let mut out = Vec::with_capacity(file.scenario.len());
    for mut s in file.scenario {
        if !names.insert(s.name.clone()) {
            return Err(ConfigError::invalid(&s, "duplicate scenario name"));
        }
        s.absolutize(base);
        s.resolve()?;
        out.push(s);
    }
    Ok(out)
}

/// Reads and validates a config file.
pub fn load_config(path: &Path) -> Result<Vec<Scenario>, ConfigError> {
    let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    let base = path.parent().unwrap_or_else(|| Path::new("."));
    parse_config(&text, base)
}

impl Scenario {
    fn absolutize(&mut self, base: &Path) {
        let fix = |p: &mut PathBuf| {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        };
        if let Some(ProfileConfig::Tabulated { file }) = &mut self.profile {
            fix(file);
        }
        if let Some(b) = &mut self.boundary {
            for side in [&mut b.plus, &mut b.minus] {
                if let BoundarySide::Tabulated { file, .. } = side {
                    fix(file);
                }
            }
        }
    }

    fn need<T>(&self, v: &Option<T>, what: &str) -> Result<(), ConfigError> {
        if v.is_none() {
            return Err(ConfigError::invalid(self, format!("`{what}` is required for kind {}", self.kind)));
        }
        Ok(())
    }

    /// Fills defaults and checks cross-field constraints.
    pub fn resolve(&mut self) -> Result<(), ConfigError> {
        use ScenarioKind::*;
        match self.kind {
            PenroseCheck | Instability | StableWellPrepared | StableIllPrepared => {
                self.need(&self.profile, "profile")?;
            }
            BgkBuild => {
                self.need(&self.boundary, "boundary")?;
                self.need(&self.well, "well")?;
            }
            IonVariant => {
                self.need(&self.boundary, "boundary")?;
                self.need(&self.model.alpha, "model.alpha")?;
            }
        }
        if let Some(a) = self.model.alpha {
            if !(a >= 0.0 && a.is_finite()) {
                return Err(ConfigError::invalid(self, "model.alpha must be finite and >= 0"));
            }
        }
        let m = &mut self.model;
        let r = &mut self.run;
        let g = &mut self.grid;
        let a = &mut self.assertions;
        match self.kind {
            PenroseCheck => {
                if m.m.is_none() {
                    m.m = Some(20.0);
                }
                m.modes.get_or_insert_with(|| vec![1]);
            }
            Instability => {
                let mm = *m.m.get_or_insert(20.0);
                m.delta.get_or_insert(1e-5);
                m.truncate.get_or_insert(false);
                m.modes.get_or_insert_with(|| vec![1]);
                g.nx.get_or_insert(256);
                g.nv.get_or_insert(512);
                g.lx = Some(mm);
                r.dt.get_or_insert(1.0 / 16.0);
                r.t_final.get_or_insert(60.0);
                r.stride.get_or_insert(1);
                a.rate_tol.get_or_insert(0.10);
                a.proxy_tol.get_or_insert(0.15);
                if let Some(eps) = m.eps {
                    rescaling_maps(eps, mm).map_err(|e| ConfigError::Invalid {
                        scenario: self.name.clone(),
                        message: format!("rescaling parameter: {e}"),
                    })?;
                }
            }
            StableWellPrepared | StableIllPrepared => {
                let eps = *m.eps.get_or_insert(0.05);
                if !(eps > 0.0 && eps.is_finite()) {
                    return Err(ConfigError::Invalid {
                        scenario: self.name.clone(),
                        message: "model.eps must be positive".into(),
                    });
                }
                if self.kind == StableWellPrepared {
                    m.shift.get_or_insert(0.5);
                    r.t_final.get_or_insert(5.0);
                    r.refine.get_or_insert(false);
                    a.drift_tol.get_or_insert(1e-3);
                    if r.refine == Some(true) {
                        a.refine_ratio.get_or_insert(4.0);
                    }
                } else {
                    m.v0.get_or_insert_with(|| {
                        vec![FourierTerm {
                            n: 1,
                            cos: 0.1,
                            sin: 0.0,
                        }]
                    });
                    r.t_final.get_or_insert(3.0);
                }
                g.nx.get_or_insert(64);
                g.nv.get_or_insert(256);
                g.lx.get_or_insert(1.0);
                let dt = *r.dt.get_or_insert(eps / 16.0);
                r.stride.get_or_insert(((1.0 / (16.0 * dt)).round() as usize).max(1));
            }
            BgkBuild | IonVariant => {
                g.nx.get_or_insert(256);
                g.nv.get_or_insert(512);
                g.lx = Some(1.0);
                r.steps.get_or_insert(0);
                r.dt.get_or_insert(1e-3);
                if self.well.is_some() {
                    a.neutrality_tol.get_or_insert(1e-6);
                }
                if self.kind == IonVariant {
                    m.random_boundaries.get_or_insert(0);
                    a.ubar_bound.get_or_insert(true);
                }
            }
        }
        if let Some(ProfileConfig::Tabulated { file }) = &self.profile {
            if !file.exists() {
                return Err(ConfigError::invalid(self, format!("profile file {} not found", file.display())));
            }
        }
        if self.grid.vmax.is_none() && self.kind != PenroseCheck {
            let vmax = match &self.profile {
                Some(p) => default_vmax(p)?,
                None => 6.0,
            };
            self.grid.vmax = Some(vmax);
        }
        if self.kind != PenroseCheck {
            for (n, name) in [(self.grid.nx, "grid.nx"), (self.grid.nv, "grid.nv")] {
                match n {
                    Some(n) if n.is_power_of_two() && n >= 4 => {}
                    _ => return Err(ConfigError::invalid(self, format!("`{name}` must be a power of two >= 4"))),
                }
            }
        }
        if let Some(dt) = self.run.dt {
            if !(dt > 0.0 && dt.is_finite()) {
                return Err(ConfigError::invalid(self, "run.dt must be positive"));
            }
        }
        Ok(())
    }

    /// The echo of the resolved scenario.
    pub fn echo(&self) -> String {
        let file = ConfigFile {
            scenario: vec![self.clone()],
        };
        toml::to_string(&file).expect("scenario serializes")
    }
}

/// `6 (thermal width + |mean velocity|)`.
fn default_vmax(p: &ProfileConfig) -> Result<f64, ConfigError> {
    let wrap = |e: qnk_core::Error| ConfigError::Invalid {
        scenario: String::new(),
        message: e.to_string(),
    };
    let profile = match p {
        ProfileConfig::Tabulated { file } => {
            let t = crate::io::read_profile_csv(file).map_err(|e| ConfigError::Invalid {
                scenario: String::new(),
                message: format!("{e:#}"),
            })?;
            Profile::tabulated(t).map_err(wrap)?
        }
        other => build_analytic(other).map_err(wrap)?,
    };
    let w = profile.thermal_width().map_err(wrap)?;
    let m = profile.mean_velocity().map_err(wrap)?;
    Ok(6.0 * (w + m.abs()))
}

pub(crate) fn build_analytic(p: &ProfileConfig) -> qnk_core::Result<Profile> {
    match *p {
        ProfileConfig::Maxwellian { t, u } => Profile::maxwellian(t, u),
        ProfileConfig::TwoStream { t, u, weights } => Profile::two_stream(t, u, weights),
        ProfileConfig::BumpOnTail {
            t,
            amplitude,
            center,
            width,
        } => Profile::bump_on_tail(t, amplitude, center, width),
        ProfileConfig::CompactBump { a, b } => Profile::compact_bump(a, b),
        ProfileConfig::Tabulated { .. } => unreachable!("tabulated profiles are loaded from file"),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parse(s: &str) -> Result<Vec<Scenario>, ConfigError> {
        parse_config(s, Path::new("."))
    }

    const MINIMAL: &str = r#"
[[scenario]]
name = "ts"
kind = "instability"
profile = { kind = "two_stream", t = 0.25, u = 2.0 }
"#;

    #[test]
    fn defaults_are_filled_and_echoed() {
        let s = &parse(MINIMAL).unwrap()[0];
        assert_eq!(s.grid.nx, Some(256));
        assert_eq!(s.model.m, Some(20.0));
        assert_eq!(s.run.dt, Some(1.0 / 16.0));
        let vmax = s.grid.vmax.unwrap();
        assert!((vmax - 6.0 * 4.25f64.sqrt()).abs() < 1e-8, "{vmax}");
        let echo = s.echo();
        assert!(echo.contains("nx = 256"), "{echo}");
        assert!(echo.contains("weights = [0.5, 0.5]"), "{echo}");
        let again = parse(&echo).unwrap();
        assert_eq!(&again[0], s);
    }

    #[test]
    fn misspelled_key_names_the_path() {
        let text = format!("{MINIMAL}\n[scenario.grid]\nnxx = 64\n");
        let err = parse(&text).unwrap_err().to_string();
        assert!(err.contains("scenario[0].grid"), "{err}");
        assert!(err.contains("nxx"), "{err}");
    }

    #[test]
    fn unknown_profile_key_is_rejected() {
        let text = MINIMAL.replace("u = 2.0", "u = 2.0, temp = 1.0");
        let err = parse(&text).unwrap_err().to_string();
        assert!(err.contains("temp"), "{err}");
    }

    #[test]
    fn epsilon_must_match_the_torus() {
        let ok = format!("{MINIMAL}\n[scenario.model]\neps = 0.025\n");
        assert!(parse(&ok).is_ok());
        let bad = format!("{MINIMAL}\n[scenario.model]\neps = 0.03\n");
        let err = parse(&bad).unwrap_err().to_string();
        assert!(err.contains("rescaling parameter"), "{err}");
    }

    #[test]
    fn stride_follows_dt() {
        let text = r#"
[[scenario]]
name = "wp"
kind = "stable_well_prepared"
profile = { kind = "maxwellian" }
model = { eps = 0.05 }
"#;
        let s = &parse(text).unwrap()[0];
        assert_eq!(s.run.dt, Some(0.05 / 16.0));
        assert_eq!(s.run.stride, Some(20));
    }

    #[test]
    fn missing_sections_are_reported() {
        let text = "[[scenario]]\nname = \"b\"\nkind = \"bgk_build\"\n";
        let err = parse(text).unwrap_err().to_string();
        assert!(err.contains("boundary"), "{err}");
        let dup = format!("{MINIMAL}{MINIMAL}");
        assert!(parse(&dup).unwrap_err().to_string().contains("duplicate"));
    }

    #[test]
    fn grid_must_be_power_of_two() {
        let text = format!("{MINIMAL}\n[scenario.grid]\nnx = 100\n");
        assert!(parse(&text).unwrap_err().to_string().contains("grid.nx"));
    }
}
