//! Flat `key = value` experiment configuration.
//!
//! Grammar (one entry per line):
//!
//! ```text
//! line    := blank | comment | entry
//! comment := '#' any*
//! entry   := key ws* '=' ws* value ws* comment?
//! key     := ident ('.' ident)*          ident := [a-z0-9_]+
//! value   := any non-empty text without '#', trimmed
//! ```
//!
//! Keys are unique. Lists are comma separated (`imethod.n_list = 8, 16, 32`).
//! `inf` is accepted wherever an exponent is expected. The canonical form
//! sorts the keys and writes `key = value` with single spaces.

use std::cell::RefCell;
use std::collections::{BTreeMap, BTreeSet};
use std::path::{Path, PathBuf};

use nls_core::dynamics::SolverConfig;
use nls_core::morawetz::{MorawetzConfig, DEFAULT_BUDGET};
use nls_core::spectral::make_grid;
use sha2::{Digest, Sha256};

use crate::data::{Family, InitialDataSpec};
use crate::error::LabError;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ConfigText {
    entries: BTreeMap<String, String>,
}

fn valid_key(key: &str) -> bool {
    !key.is_empty()
        && key.split('.').all(|part| {
            !part.is_empty()
                && part
                    .chars()
                    .all(|c| c.is_ascii_lowercase() || c.is_ascii_digit() || c == '_')
        })
}

impl ConfigText {
    pub fn parse(text: &str) -> Result<Self, LabError> {
        let mut entries = BTreeMap::new();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| LabError::Syntax {
                line: i + 1,
                message: "expected `key = value`".into(),
            })?;
            let (key, value) = (key.trim(), value.trim());
            if !valid_key(key) {
                return Err(LabError::Syntax {
                    line: i + 1,
                    message: format!("malformed key `{key}`"),
                });
            }
            if value.is_empty() {
                return Err(LabError::Syntax {
                    line: i + 1,
                    message: format!("empty value for `{key}`"),
                });
            }
            if entries.insert(key.to_string(), value.to_string()).is_some() {
                return Err(LabError::Syntax {
                    line: i + 1,
                    message: format!("duplicate key `{key}`"),
                });
            }
        }
        Ok(Self { entries })
    }

    pub fn canonical(&self) -> String {
        self.entries
            .iter()
            .map(|(k, v)| format!("{k} = {v}\n"))
            .collect()
    }

    /// SHA-256 of the canonical form, hex encoded.
    pub fn hash(&self) -> String {
        hex::encode(Sha256::digest(self.canonical().as_bytes()))
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.entries.get(key).map(String::as_str)
    }

    pub fn set(&mut self, key: &str, value: impl Into<String>) {
        self.entries.insert(key.to_string(), value.into());
    }

    pub fn keys(&self) -> impl Iterator<Item = &str> {
        self.entries.keys().map(String::as_str)
    }
}

/// Typed reads that remember which keys were consumed.
struct Reader<'a> {
    text: &'a ConfigText,
    used: RefCell<BTreeSet<String>>,
}

fn bad(key: &str, message: impl Into<String>) -> LabError {
    LabError::Field {
        key: key.to_string(),
        message: message.into(),
    }
}

fn parse_f64(key: &str, v: &str) -> Result<f64, LabError> {
    match v {
        "inf" | "+inf" | "infinity" => Ok(f64::INFINITY),
        _ => v
            .parse::<f64>()
            .ok()
            .filter(|x| x.is_finite())
            .ok_or_else(|| bad(key, format!("expected a number, got `{v}`"))),
    }
}

impl<'a> Reader<'a> {
    fn raw(&self, key: &str) -> Option<&'a str> {
        self.used.borrow_mut().insert(key.to_string());
        self.text.get(key)
    }

    fn f64_or(&self, key: &str, default: f64) -> Result<f64, LabError> {
        self.raw(key).map_or(Ok(default), |v| parse_f64(key, v))
    }

    fn f64_req(&self, key: &str) -> Result<f64, LabError> {
        let v = self.raw(key).ok_or_else(|| bad(key, "missing"))?;
        parse_f64(key, v)
    }

    fn opt_f64(&self, key: &str) -> Result<Option<f64>, LabError> {
        self.raw(key).map(|v| parse_f64(key, v)).transpose()
    }

    fn u64_or(&self, key: &str, default: u64) -> Result<u64, LabError> {
        self.raw(key).map_or(Ok(default), |v| {
            v.parse()
                .map_err(|_| bad(key, format!("expected a non-negative integer, got `{v}`")))
        })
    }

    fn bool_or(&self, key: &str, default: bool) -> Result<bool, LabError> {
        self.raw(key).map_or(Ok(default), |v| match v {
            "true" => Ok(true),
            "false" => Ok(false),
            _ => Err(bad(key, format!("expected true or false, got `{v}`"))),
        })
    }

    fn list_or(&self, key: &str, default: &[f64]) -> Result<Vec<f64>, LabError> {
        match self.raw(key) {
            None => Ok(default.to_vec()),
            Some(v) => {
                let out = v
                    .split(',')
                    .map(|s| parse_f64(key, s.trim()))
                    .collect::<Result<Vec<_>, _>>()?;
                if out.is_empty() {
                    Err(bad(key, "empty list"))
                } else {
                    Ok(out)
                }
            }
        }
    }

    fn str_req(&self, key: &str) -> Result<&'a str, LabError> {
        self.raw(key).ok_or_else(|| bad(key, "missing"))
    }

    fn unused(&self) -> Vec<String> {
        let used = self.used.borrow();
        self.text
            .keys()
            .filter(|k| !used.contains(*k))
            .map(str::to_string)
            .collect()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum ExperimentKind {
    Conservation,
    Dispersive,
    Bernstein,
    Morawetz,
    ImethodSweep,
    Scattering,
    L8Budget,
}

impl ExperimentKind {
    pub const ALL: [ExperimentKind; 7] = [
        ExperimentKind::Conservation,
        ExperimentKind::Dispersive,
        ExperimentKind::Bernstein,
        ExperimentKind::Morawetz,
        ExperimentKind::ImethodSweep,
        ExperimentKind::Scattering,
        ExperimentKind::L8Budget,
    ];

    pub fn name(self) -> &'static str {
        match self {
            ExperimentKind::Conservation => "conservation",
            ExperimentKind::Dispersive => "dispersive",
            ExperimentKind::Bernstein => "bernstein",
            ExperimentKind::Morawetz => "morawetz",
            ExperimentKind::ImethodSweep => "imethod_sweep",
            ExperimentKind::Scattering => "scattering",
            ExperimentKind::L8Budget => "l8_budget",
        }
    }

    pub fn from_name(name: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|k| k.name() == name)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ConservationOptions {
    /// Also run at `dt/2` and check the drift ratio.
    pub refine: bool,
    pub mass_tol: f64,
    pub energy_tol: f64,
    pub ratio_range: (f64, f64),
}

#[derive(Clone, Debug, PartialEq)]
pub struct DispersiveOptions {
    pub times: Vec<f64>,
    pub tol: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct BernsteinOptions {
    pub n_list: Vec<f64>,
    pub seeds: u64,
    pub s: f64,
    pub p: f64,
    pub q: f64,
    /// Every ratio must stay below this.
    pub bound: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct MorawetzOptions {
    pub config: MorawetzConfig,
    pub quad_rel: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ImethodOptions {
    pub s: f64,
    pub n_list: Vec<f64>,
    pub eta: f64,
    pub floor_factor: f64,
    pub slope_max: f64,
    pub min_points: usize,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ScatteringOptions {
    pub s: f64,
    /// Snapshots at `T/2^m` for `m = 0..=levels`.
    pub levels: u32,
    /// Extra uniformly spaced snapshots on `[T/2, T]`.
    pub tail_samples: u32,
    pub decay_max: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct L8Options {
    pub delta: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub enum ModuleOptions {
    Conservation(ConservationOptions),
    Dispersive(DispersiveOptions),
    Bernstein(BernsteinOptions),
    Morawetz(MorawetzOptions),
    ImethodSweep(ImethodOptions),
    Scattering(ScatteringOptions),
    L8Budget(L8Options),
}

#[derive(Clone, Debug, PartialEq)]
pub struct GridParams {
    pub length: f64,
    pub n: usize,
}

/// A fully validated experiment description.
#[derive(Clone, Debug, PartialEq)]
pub struct ExperimentConfig {
    pub kind: ExperimentKind,
    pub seed: u64,
    pub grid: GridParams,
    pub solver: SolverConfig,
    pub data: InitialDataSpec,
    pub options: ModuleOptions,
    pub output: Option<PathBuf>,
    text: ConfigText,
}

impl ExperimentConfig {
    pub fn parse(text: &str) -> Result<Self, LabError> {
        Self::from_text(ConfigText::parse(text)?)
    }

    pub fn from_file(path: &Path) -> Result<Self, LabError> {
        let text = std::fs::read_to_string(path).map_err(|e| LabError::io(path, e))?;
        Self::parse(&text)
    }

    /// Validates every field; unknown keys are rejected.
    pub fn from_text(text: ConfigText) -> Result<Self, LabError> {
        let r = Reader {
            text: &text,
            used: RefCell::new(BTreeSet::new()),
        };
        let kind_name = r.str_req("experiment")?;
        let kind = ExperimentKind::from_name(kind_name).ok_or_else(|| {
            let names: Vec<_> = ExperimentKind::ALL.iter().map(|k| k.name()).collect();
            bad(
                "experiment",
                format!("unknown `{kind_name}`; expected one of {names:?}"),
            )
        })?;
        let seed = r.u64_or("seed", 0)?;

        let length = r.f64_req("grid.length")?;
        let n = r.u64_or("grid.n", 0)? as usize;
        let grid = make_grid(length, n).map_err(|e| bad("grid", e.to_string()))?;

        let k = r.opt_f64("solver.k")?;
        let p = r.opt_f64("solver.p")?;
        let exponent = match (k, p) {
            (Some(_), Some(_)) => {
                return Err(bad("solver.k", "give solver.k or solver.p, not both"))
            }
            (Some(k), None) => {
                if k.fract() != 0.0 || k < 1.0 {
                    return Err(bad(
                        "solver.k",
                        format!("must be a positive integer, got {k}"),
                    ));
                }
                Some(k)
            }
            (None, Some(p)) => Some(p),
            (None, None) => None,
        };
        let linear = r.bool_or("solver.linear", false)?;
        let dt = r.f64_or("solver.dt", 1e-3)?;
        let t_final = r.f64_or("solver.t_final", 1.0)?;
        let stride = r.f64_or("solver.diag_stride", t_final)?;
        let tail = r.f64_or(
            "solver.tail_threshold",
            nls_core::dynamics::DEFAULT_TAIL_THRESHOLD,
        )?;
        let solver = match (linear, exponent) {
            (true, _) => SolverConfig::free(dt, t_final, stride),
            (false, Some(p)) => SolverConfig::with_exponent(p, dt, t_final, stride),
            (false, None) => return Err(bad("solver.k", "missing (or set solver.linear = true)")),
        }
        .and_then(|c| c.with_tail_threshold(tail))
        .map_err(|e| bad("solver", e.to_string()))?;

        let data = read_data(&r, seed)?;

        let options = match kind {
            ExperimentKind::Conservation => ModuleOptions::Conservation(ConservationOptions {
                refine: r.bool_or("conservation.refine", true)?,
                mass_tol: r.f64_or("conservation.mass_tol", 1e-10)?,
                energy_tol: r.f64_or("conservation.energy_tol", 1e-6)?,
                ratio_range: (
                    r.f64_or("conservation.ratio_min", 3.2)?,
                    r.f64_or("conservation.ratio_max", 4.8)?,
                ),
            }),
            ExperimentKind::Dispersive => {
                let times = r.list_or("dispersive.times", &[0.1, 0.25, 0.5, 1.0, 2.0])?;
                if times.contains(&0.0) {
                    return Err(bad("dispersive.times", "times must be nonzero"));
                }
                ModuleOptions::Dispersive(DispersiveOptions {
                    times,
                    tol: r.f64_or("dispersive.tol", 1e-3)?,
                })
            }
            ExperimentKind::Bernstein => {
                let o = BernsteinOptions {
                    n_list: r.list_or("bernstein.n_list", &[4.0, 8.0, 16.0, 32.0, 64.0])?,
                    seeds: r.u64_or("bernstein.seeds", 50)?,
                    s: r.f64_or("bernstein.s", 1.0)?,
                    p: r.f64_or("bernstein.p", 2.0)?,
                    q: r.f64_or("bernstein.q", f64::INFINITY)?,
                    bound: r.f64_or("bernstein.bound", 16.0)?,
                };
                if o.s <= 0.0 {
                    return Err(bad("bernstein.s", "must be positive"));
                }
                if !(o.p >= 1.0 && o.q >= o.p) {
                    return Err(bad("bernstein.q", "need 1 <= p <= q"));
                }
                if o.seeds == 0 {
                    return Err(bad("bernstein.seeds", "must be positive"));
                }
                ModuleOptions::Bernstein(o)
            }
            ExperimentKind::Morawetz => {
                let config = MorawetzConfig {
                    n_sub: r.u64_or("morawetz.n_sub", 48)? as usize,
                    window: r.opt_f64("morawetz.window")?,
                    center: r.opt_f64("morawetz.center")?,
                    budget: r.u64_or("morawetz.budget", DEFAULT_BUDGET as u64)? as u128,
                    loss_tolerance: r.f64_or("morawetz.loss_tolerance", 1e-4)?,
                    ..MorawetzConfig::default()
                };
                config
                    .validate(&grid)
                    .map_err(|e| bad("morawetz.n_sub", e.to_string()))?;
                ModuleOptions::Morawetz(MorawetzOptions {
                    config,
                    quad_rel: r.f64_or(
                        "morawetz.quad_rel",
                        nls_core::morawetz::DEFAULT_QUADRATURE_REL,
                    )?,
                })
            }
            ExperimentKind::ImethodSweep => {
                let o = ImethodOptions {
                    s: r.f64_or("imethod.s", 0.7)?,
                    n_list: r.list_or("imethod.n_list", &[8.0, 16.0, 32.0, 64.0])?,
                    eta: r.f64_or("imethod.eta", 0.1)?,
                    floor_factor: r.f64_or("imethod.floor_factor", 10.0)?,
                    slope_max: r.f64_or("imethod.slope_max", -0.5)?,
                    min_points: r.u64_or("imethod.min_points", 3)? as usize,
                };
                if !(o.s > 0.0 && o.s < 1.0) {
                    return Err(bad("imethod.s", "must lie in (0, 1)"));
                }
                if o.n_list.iter().any(|&n| n <= 1.0) {
                    return Err(bad("imethod.n_list", "every N must exceed 1"));
                }
                if solver.nonlinearity.exponent().is_none() {
                    return Err(bad("solver.linear", "the sweep needs a nonlinear flow"));
                }
                ModuleOptions::ImethodSweep(o)
            }
            ExperimentKind::Scattering => {
                let o = ScatteringOptions {
                    s: r.f64_or("scattering.s", 1.0)?,
                    levels: r.u64_or("scattering.levels", 3)? as u32,
                    tail_samples: r.u64_or("scattering.tail_samples", 4)? as u32,
                    decay_max: r.f64_or("scattering.decay_max", 0.5)?,
                };
                if o.levels < 3 {
                    return Err(bad(
                        "scattering.levels",
                        "need at least 3 (four geometric times)",
                    ));
                }
                let finest = t_final / 2f64.powi(o.levels as i32);
                if (finest / dt - (finest / dt).round()).abs() > 1e-6 {
                    return Err(bad(
                        "scattering.levels",
                        format!("T/2^levels = {finest} is not a whole number of steps"),
                    ));
                }
                ModuleOptions::Scattering(o)
            }
            ExperimentKind::L8Budget => {
                let delta = r.f64_or("l8.delta", 0.5)?;
                if delta <= 0.0 {
                    return Err(bad("l8.delta", "must be positive"));
                }
                ModuleOptions::L8Budget(L8Options { delta })
            }
        };
        let output = r.raw("output").map(PathBuf::from);

        let unused = r.unused();
        if let Some(key) = unused.first() {
            return Err(bad(key, "unknown key"));
        }
        drop(r);
        Ok(Self {
            kind,
            seed,
            grid: GridParams { length, n },
            solver,
            data,
            options,
            output,
            text,
        })
    }

    pub fn text(&self) -> &ConfigText {
        &self.text
    }

    pub fn canonical(&self) -> String {
        self.text.canonical()
    }

    pub fn hash(&self) -> String {
        self.text.hash()
    }

    /// Replaces the seed (and the data seed when it was derived from it).
    pub fn with_seed(&self, seed: u64) -> Result<Self, LabError> {
        let mut text = self.text.clone();
        text.set("seed", seed.to_string());
        Self::from_text(text)
    }
}

/// Config paths listed in a matrix file: one per line, relative to the
/// matrix file, `#` starts a comment.
pub fn read_matrix(path: &Path) -> Result<Vec<PathBuf>, LabError> {
    let text = std::fs::read_to_string(path).map_err(|e| LabError::io(path, e))?;
    let base = path.parent().unwrap_or(Path::new("."));
    Ok(text
        .lines()
        .map(|l| l.split('#').next().unwrap_or("").trim())
        .filter(|l| !l.is_empty())
        .map(|l| base.join(l))
        .collect())
}

fn read_data(r: &Reader<'_>, seed: u64) -> Result<InitialDataSpec, LabError> {
    let family = match r.raw("data.family").unwrap_or("gaussian") {
        "gaussian" => Family::Gaussian,
        "boosted_gaussian" => Family::BoostedGaussian,
        "random_band" => Family::RandomBand,
        other => {
            return Err(bad(
                "data.family",
                format!("unknown `{other}`; expected gaussian, boosted_gaussian or random_band"),
            ))
        }
    };
    let spec = InitialDataSpec {
        family,
        amplitude: r.f64_or("data.amplitude", 1.0)?,
        width: r.f64_or("data.width", std::f64::consts::FRAC_1_SQRT_2)?,
        center: r.f64_or("data.center", 0.0)?,
        velocity: r.f64_or("data.velocity", 0.0)?,
        focus: r.f64_or("data.focus", 0.0)?,
        band: (r.f64_or("data.k_lo", 1.0)?, r.f64_or("data.k_hi", 4.0)?),
        hs_order: r.f64_or("data.s", 1.0)?,
        hs_norm: r.f64_or("data.norm", 1.0)?,
        envelope: r.f64_or("data.envelope", 1.5)?,
        seed: r.u64_or("data.seed", seed)?,
    };
    spec.validate().map_err(|(key, msg)| bad(key, msg))?;
    Ok(spec)
}
