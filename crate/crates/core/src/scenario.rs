//! Scenario configs and the runner behind the command-line tool.
//!
//! A config is a JSON object whose `scenario` key selects one of the record
//! types below. Every other key must belong to that record.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use serde_json::{json, Map, Value};

use crate::angle::Angle;
use crate::cfs::{build_shift_cfs, CfsDoc, DiscreteCfs};
use crate::error::{Error, Result};
use crate::homotopy::{
    asymptotic_check, homotopy_sweep, lifetime_index0, lifetime_problem, lifetime_right, BumpProfile,
    HomotopyPath, PathFamily, Verdict, ASYMPTOTIC_GRID, MIN_GRID,
};
use crate::index::{noether_index, subspace_sine, ChiralProblem, IndexReport, PolicySettings};
use crate::report::{canonical_json, singular_values_csv, sweep_csv};
use crate::spectral::C64;
use crate::spiral::{
    assemble_spiral_sl_with_mu, assemble_spiral_sr_with_mu, build_mu, constant_mu_entries, required_order,
    spiral_index, MuCoefficients,
};
use crate::torus::{assemble_torus_sl, assemble_torus_sr, torus_index0, unpaired_left_modes, ConformalFactor};

pub const SCENARIOS: [&str; 6] = ["shift", "torus", "spiral", "lifetime", "conformal-homotopy", "cfs-file"];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ShiftConfig {
    #[serde(default = "one")]
    pub p: usize,
    #[serde(rename = "N", default = "shift_n")]
    pub n: usize,
    #[serde(default)]
    pub negate_gamma: bool,
    #[serde(default)]
    pub policy: PolicySettings,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TorusConfig {
    #[serde(default = "one_u32")]
    pub p: u32,
    #[serde(rename = "K", default = "torus_k")]
    pub k: usize,
    /// Shorthand for a Poisson-kernel factor; excludes `conformal`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub r: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub conformal: Option<ConformalFactor>,
    #[serde(default)]
    pub policy: PolicySettings,
}

impl TorusConfig {
    pub fn factor(&self) -> Result<ConformalFactor> {
        match (&self.r, &self.conformal) {
            (Some(_), Some(_)) => Err(Error::Config("give either r or conformal, not both".into())),
            (Some(r), None) => Ok(ConformalFactor::Poisson { r: *r }),
            (None, Some(c)) => Ok(c.clone()),
            (None, None) => Ok(ConformalFactor::Poisson { r: 0.5 }),
        }
    }
}

/// Explicit μ coefficients as (index, re, im).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CoefficientList {
    #[serde(default)]
    pub a: Vec<(i64, f64, f64)>,
    #[serde(default)]
    pub b: Vec<(i64, f64, f64)>,
    pub bound: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SpiralConfig {
    #[serde(default = "one_u32")]
    pub p: u32,
    #[serde(rename = "K", default = "spiral_k")]
    pub k: usize,
    #[serde(default = "spiral_nu")]
    pub nu: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub amplitude: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub decay: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub coefficients: Option<CoefficientList>,
    #[serde(default)]
    pub policy: PolicySettings,
}

impl SpiralConfig {
    pub fn mu_coefficients(&self) -> Result<MuCoefficients> {
        match &self.coefficients {
            Some(list) => {
                if self.seed.is_some() || self.amplitude.is_some() || self.decay.is_some() {
                    return Err(Error::Config(
                        "explicit coefficients exclude seed, amplitude and decay".into(),
                    ));
                }
                let collect = |v: &[(i64, f64, f64)], what: &str| {
                    let mut map = BTreeMap::new();
                    for &(k, re, im) in v {
                        if map.insert(k, C64::new(re, im)).is_some() {
                            return Err(Error::Config(format!("coefficient {what}_{k} given twice")));
                        }
                    }
                    Ok(map)
                };
                MuCoefficients::new(collect(&list.a, "a")?, collect(&list.b, "b")?, self.nu, list.bound)
            }
            None => MuCoefficients::seeded(
                self.seed.unwrap_or(0),
                self.amplitude.unwrap_or(0.05),
                self.decay.unwrap_or(0.7),
                required_order(self.p, 2 * self.k),
                self.nu,
            ),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LifetimeConfig {
    #[serde(rename = "T")]
    pub t: Angle,
    #[serde(rename = "K", default = "lifetime_k")]
    pub k: usize,
    #[serde(default)]
    pub policy: PolicySettings,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "scenario", rename_all = "lowercase", deny_unknown_fields)]
pub enum PathConfig {
    Lifetime {
        from: Angle,
        to: Angle,
        #[serde(default = "nine")]
        steps: usize,
    },
    Conformal {
        #[serde(rename = "T", default = "Angle::pi")]
        t: Angle,
        from: BumpProfile,
        to: BumpProfile,
        #[serde(default = "nine")]
        steps: usize,
        #[serde(default = "min_grid")]
        grid: usize,
    },
}

impl PathConfig {
    pub fn path(&self) -> HomotopyPath {
        match *self {
            PathConfig::Lifetime { from, to, steps } => HomotopyPath {
                steps,
                family: PathFamily::Lifetime { from, to },
            },
            PathConfig::Conformal {
                t,
                from,
                to,
                steps,
                grid,
            } => HomotopyPath {
                steps,
                family: PathFamily::Conformal {
                    t_end: t,
                    from,
                    to,
                    grid,
                },
            },
        }
    }
}

impl Default for PathConfig {
    fn default() -> Self {
        PathConfig::Conformal {
            t: Angle::pi(),
            from: BumpProfile::COS4,
            to: BumpProfile {
                amplitude: 0.75,
                power: 6,
            },
            steps: 9,
            grid: MIN_GRID,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AsymptoticsConfig {
    #[serde(rename = "K", default = "asymptotic_k")]
    pub k: usize,
    #[serde(rename = "T", default = "Angle::pi")]
    pub t: Angle,
    #[serde(default = "cos4")]
    pub bump: BumpProfile,
    #[serde(default = "asymptotic_grid")]
    pub grid: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HomotopyConfig {
    #[serde(default)]
    pub path: PathConfig,
    #[serde(rename = "K", default = "homotopy_k")]
    pub k: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub asymptotics: Option<AsymptoticsConfig>,
    #[serde(default)]
    pub policy: PolicySettings,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CfsFileConfig {
    pub file: PathBuf,
    #[serde(default)]
    pub negate_gamma: bool,
    #[serde(default)]
    pub policy: PolicySettings,
}

fn one() -> usize {
    1
}
fn one_u32() -> u32 {
    1
}
fn nine() -> usize {
    9
}
fn shift_n() -> usize {
    40
}
fn torus_k() -> usize {
    40
}
fn spiral_k() -> usize {
    16
}
fn spiral_nu() -> f64 {
    0.3
}
fn lifetime_k() -> usize {
    50
}
fn homotopy_k() -> usize {
    20
}
fn asymptotic_k() -> usize {
    128
}
fn min_grid() -> usize {
    MIN_GRID
}
fn asymptotic_grid() -> usize {
    ASYMPTOTIC_GRID
}
fn cos4() -> BumpProfile {
    BumpProfile::COS4
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "scenario", rename_all = "kebab-case")]
pub enum ScenarioConfig {
    Shift(ShiftConfig),
    Torus(TorusConfig),
    Spiral(SpiralConfig),
    Lifetime(LifetimeConfig),
    ConformalHomotopy(HomotopyConfig),
    CfsFile(CfsFileConfig),
}

/// Command-line overrides applied to the config object before validation.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub seed: Option<u64>,
    pub truncation: Option<usize>,
    pub file: Option<PathBuf>,
}

impl ScenarioConfig {
    /// Validates `value` as the config of `scenario`. A `scenario` key inside
    /// the object, if present, must agree with the requested one.
    pub fn parse(scenario: &str, value: Value, overrides: &Overrides) -> Result<Self> {
        if !SCENARIOS.contains(&scenario) {
            return Err(Error::Config(format!("unknown scenario {scenario:?}")));
        }
        let mut map = match value {
            Value::Object(m) => m,
            Value::Null => Map::new(),
            other => return Err(Error::Config(format!("config must be a JSON object, got {other}"))),
        };
        match map.remove("scenario") {
            None => {}
            Some(Value::String(s)) if s == scenario => {}
            Some(other) => {
                return Err(Error::Config(format!(
                    "config declares scenario {other} but {scenario:?} was requested"
                )))
            }
        }
        if let Some(seed) = overrides.seed {
            if scenario != "spiral" {
                return Err(Error::Config(format!("--seed does not apply to scenario {scenario}")));
            }
            map.insert("seed".into(), json!(seed));
        }
        if let Some(k) = overrides.truncation {
            let key = match scenario {
                "shift" => "N",
                "cfs-file" => {
                    return Err(Error::Config("--truncation does not apply to scenario cfs-file".into()))
                }
                _ => "K",
            };
            map.insert(key.into(), json!(k));
        }
        if let Some(file) = &overrides.file {
            map.insert("file".into(), json!(file));
        }
        let v = Value::Object(map);
        let bad = |e: serde_json::Error| Error::Config(format!("{scenario}: {e}"));
        let cfg = match scenario {
            "shift" => ScenarioConfig::Shift(serde_json::from_value(v).map_err(bad)?),
            "torus" => ScenarioConfig::Torus(serde_json::from_value(v).map_err(bad)?),
            "spiral" => ScenarioConfig::Spiral(serde_json::from_value(v).map_err(bad)?),
            "lifetime" => ScenarioConfig::Lifetime(serde_json::from_value(v).map_err(bad)?),
            "conformal-homotopy" => ScenarioConfig::ConformalHomotopy(serde_json::from_value(v).map_err(bad)?),
            _ => ScenarioConfig::CfsFile(serde_json::from_value(v).map_err(bad)?),
        };
        cfg.validate()?;
        Ok(cfg)
    }

    fn validate(&self) -> Result<()> {
        let positive = |k: usize, what: &str| {
            if k == 0 {
                Err(Error::Config(format!("{what} must be positive")))
            } else {
                Ok(())
            }
        };
        match self {
            ScenarioConfig::Shift(c) => {
                positive(c.p, "p")?;
                if c.n < c.p + 2 {
                    return Err(Error::Config(format!("N = {} must be at least p + 2", c.n)));
                }
            }
            ScenarioConfig::Torus(c) => {
                positive(c.p as usize, "p")?;
                positive(c.k, "K")?;
                c.factor()?;
            }
            ScenarioConfig::Spiral(c) => {
                positive(c.p as usize, "p")?;
                positive(c.k, "K")?;
            }
            ScenarioConfig::Lifetime(c) => {
                positive(c.k, "K")?;
                if !(c.t.value() > 0.0) {
                    return Err(Error::Config(format!("T = {} must be positive", c.t)));
                }
            }
            ScenarioConfig::ConformalHomotopy(c) => {
                positive(c.k, "K")?;
                let steps = match c.path {
                    PathConfig::Lifetime { steps, .. } | PathConfig::Conformal { steps, .. } => steps,
                };
                if steps < 3 {
                    return Err(Error::Config(format!("a sweep needs at least 3 steps, got {steps}")));
                }
            }
            ScenarioConfig::CfsFile(_) => {}
        }
        Ok(())
    }

    pub fn name(&self) -> &'static str {
        match self {
            ScenarioConfig::Shift(_) => "shift",
            ScenarioConfig::Torus(_) => "torus",
            ScenarioConfig::Spiral(_) => "spiral",
            ScenarioConfig::Lifetime(_) => "lifetime",
            ScenarioConfig::ConformalHomotopy(_) => "conformal-homotopy",
            ScenarioConfig::CfsFile(_) => "cfs-file",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Status {
    Finite,
    NotFinite,
}

impl Status {
    pub fn exit_code(self) -> i32 {
        match self {
            Status::Finite => 0,
            Status::NotFinite => 2,
        }
    }
}

#[derive(Debug, Clone)]
pub struct ScenarioOutput {
    pub report: Value,
    pub status: Status,
    /// CSV artifacts as (file name, contents).
    pub csv: Vec<(String, String)>,
}

impl ScenarioOutput {
    /// Writes report.json and, when `emit_csv` is set, the CSV artifacts.
    pub fn write(&self, dir: &Path, emit_csv: bool) -> Result<Vec<PathBuf>> {
        std::fs::create_dir_all(dir)?;
        let mut written = Vec::new();
        let path = dir.join("report.json");
        std::fs::write(&path, canonical_json(&self.report)?)?;
        written.push(path);
        if emit_csv {
            for (name, body) in &self.csv {
                let path = dir.join(name);
                std::fs::write(&path, body)?;
                written.push(path);
            }
        }
        Ok(written)
    }
}

/// Structural checks shared by the assembled scenarios.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Invariants {
    /// max |(S_L*)_{ij} − (S_R)_{ij}| with S_R assembled independently.
    pub adjoint_defect: f64,
    /// max |S − S_L − S_R|, for causal fermion systems.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub sum_defect: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub pseudoscalar_valid: Option<bool>,
}

fn index_status(r: &IndexReport) -> Status {
    if r.finite {
        Status::Finite
    } else {
        Status::NotFinite
    }
}

fn wrap(config: &ScenarioConfig, result: Value, invariants: Option<&Invariants>) -> Result<Value> {
    let mut doc = json!({
        "scenario": config.name(),
        "config": serde_json::to_value(config)?,
        "result": result,
    });
    if let Some(inv) = invariants {
        doc["invariants"] = serde_json::to_value(inv)?;
    }
    Ok(doc)
}

fn cfs_run(config: &ScenarioConfig, cfs: &DiscreteCfs, negate: bool, policy: &PolicySettings) -> Result<ScenarioOutput> {
    let cfs = if negate { cfs.negate_gamma() } else { cfs.clone() };
    let (s_l, _) = cfs.assemble_chiral()?;
    let s_r = cfs.assemble_chiral_right()?;
    let s = cfs.assemble_signature()?;
    let invariants = Invariants {
        adjoint_defect: s_l.adjoint().max_abs_diff(&s_r)?,
        sum_defect: Some(s.max_abs_diff(&s_l.try_add(&s_r)?)?),
        pseudoscalar_valid: Some(cfs.validate().iter().all(|r| r.valid)),
    };
    let report = noether_index(&s_l, &policy.policy_for(cfs.hilbert_dim())?)?;
    Ok(ScenarioOutput {
        status: index_status(&report),
        csv: vec![
            ("singular_values.csv".into(), singular_values_csv(&report)),
            ("s_l.csv".into(), s_l.to_csv()),
        ],
        report: wrap(config, serde_json::to_value(&report)?, Some(&invariants))?,
    })
}

/// Runs one scenario. Nothing is written to disk.
pub fn run_scenario(config: &ScenarioConfig) -> Result<ScenarioOutput> {
    match config {
        ScenarioConfig::Shift(c) => {
            let cfs = build_shift_cfs(c.p, c.n)?;
            cfs_run(config, &cfs, c.negate_gamma, &c.policy)
        }
        ScenarioConfig::CfsFile(c) => {
            let text = std::fs::read_to_string(&c.file)?;
            let doc: CfsDoc = serde_json::from_str(&text)
                .map_err(|e| Error::Config(format!("{}: {e}", c.file.display())))?;
            cfs_run(config, &DiscreteCfs::from_doc(&doc)?, c.negate_gamma, &c.policy)
        }
        ScenarioConfig::Torus(c) => {
            let factor = c.factor()?;
            let report = torus_index0(&factor, c.p, c.k, &c.policy)?;
            let fhat = factor.series(2 * c.k + c.p as usize)?;
            let (s_l, _) = assemble_torus_sl(&fhat, c.p, c.k)?;
            let invariants = Invariants {
                adjoint_defect: s_l.adjoint().max_abs_diff(&assemble_torus_sr(&fhat, c.p, c.k)?)?,
                sum_defect: None,
                pseudoscalar_valid: None,
            };
            let sine = subspace_sine(&report.kernel_l, &unpaired_left_modes(c.p));
            let result = json!({
                "index": serde_json::to_value(&report)?,
                "kernel_subspace_sine": sine,
                "realness_defect": fhat.realness_defect(),
            });
            Ok(ScenarioOutput {
                status: index_status(&report),
                csv: vec![
                    ("singular_values.csv".into(), singular_values_csv(&report)),
                    ("s_l.csv".into(), s_l.to_csv()),
                ],
                report: wrap(config, result, Some(&invariants))?,
            })
        }
        ScenarioConfig::Spiral(c) => {
            let co = c.mu_coefficients()?;
            let (mu, positivity) = build_mu(&co)?;
            let report = spiral_index(&co, c.p, c.k, &c.policy)?;
            let s_l = assemble_spiral_sl_with_mu(&mu, co.nu, c.p, c.k)?;
            let s_r = assemble_spiral_sr_with_mu(&mu, co.nu, c.p, c.k)?;
            let invariants = Invariants {
                adjoint_defect: s_l.adjoint().max_abs_diff(&s_r)?,
                sum_defect: None,
                pseudoscalar_valid: None,
            };
            let constant: Vec<Value> = constant_mu_entries(c.p, c.k, co.nu)?
                .into_iter()
                .map(|(row, col, v)| json!({"row": row.to_string(), "col": col.to_string(), "re": v.re, "im": v.im}))
                .collect();
            let result = json!({
                "index": serde_json::to_value(&report)?,
                "kernel_subspace_sine": subspace_sine(&report.kernel_l, &unpaired_left_modes(c.p)),
                "mu_terms": mu.len(),
                "positivity": serde_json::to_value(positivity)?,
                "constant_mu_entries": constant,
            });
            Ok(ScenarioOutput {
                status: index_status(&report),
                csv: vec![
                    ("singular_values.csv".into(), singular_values_csv(&report)),
                    ("s_l.csv".into(), s_l.to_csv()),
                ],
                report: wrap(config, result, Some(&invariants))?,
            })
        }
        ScenarioConfig::Lifetime(c) => {
            let out = lifetime_index0(&c.t, c.k, &c.policy)?;
            let ChiralProblem::Odd { left, .. } = lifetime_problem(&c.t, c.k)? else {
                unreachable!("lifetime problems are odd")
            };
            let invariants = Invariants {
                adjoint_defect: left.adjoint().max_abs_diff(&lifetime_right(&c.t, c.k))?,
                sum_defect: None,
                pseudoscalar_valid: None,
            };
            Ok(ScenarioOutput {
                status: index_status(&out.report),
                csv: vec![
                    ("singular_values.csv".into(), singular_values_csv(&out.report)),
                    ("s_l.csv".into(), left.to_csv()),
                ],
                report: wrap(config, serde_json::to_value(&out)?, Some(&invariants))?,
            })
        }
        ScenarioConfig::ConformalHomotopy(c) => {
            let sweep = homotopy_sweep(&c.path.path(), c.k, &c.policy)?;
            let mut result = json!({ "sweep": serde_json::to_value(&sweep)? });
            if let Some(a) = &c.asymptotics {
                let samples = a.bump.samples(a.t.value(), a.grid);
                result["asymptotics"] = serde_json::to_value(asymptotic_check(&samples, a.t.value(), a.k)?)?;
            }
            let mut csv = vec![("sweep.csv".to_string(), sweep_csv(&sweep))];
            for (i, step) in sweep.steps.iter().enumerate() {
                csv.push((format!("singular_values_step{i}.csv"), singular_values_csv(&step.report)));
            }
            let status = match sweep.verdict {
                Verdict::Undefined(_) => Status::NotFinite,
                Verdict::Constant | Verdict::Jump(_) => Status::Finite,
            };
            Ok(ScenarioOutput {
                status,
                csv,
                report: wrap(config, result, None)?,
            })
        }
    }
}
