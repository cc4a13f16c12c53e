//! Experiment configuration read from a TOML document.
//!
//! ```toml
//! mass = 2.0
//! seed = 7
//!
//! [model]
//! kind = "circle"
//! radius = 1.0
//! truncation = 5
//!
//! [observation]
//! kind = "angular_interval"
//! a = 0.0
//! b = 3.141592653589793
//! ```

use std::path::PathBuf;

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::calculus::Mass;
use crate::error::{Error, Result};
use crate::forward::{PotentialSpec, SourceShape};
use crate::gelfand::{CompareTolerances, GelfandMode, GelfandOptions};
use crate::manifold::{Isometry, ModelKind, ObservationDescriptor};
use crate::ucp::{RecoveryOptions, UcpOptions};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SourceConfig {
    pub count: usize,
    pub radius: Option<f64>,
    pub jitter: f64,
}

impl Default for SourceConfig {
    fn default() -> Self {
        Self {
            count: 5,
            radius: None,
            jitter: 0.0,
        }
    }
}

impl SourceConfig {
    pub fn shape(&self) -> SourceShape {
        SourceShape {
            radius: self.radius,
            jitter: self.jitter,
        }
    }
}

/// Uniform time grid; when absent the extraction default is used.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TimeGridSpec {
    pub t_min: f64,
    pub t_max: f64,
    pub samples: usize,
}

impl TimeGridSpec {
    pub fn times(&self) -> Vec<f64> {
        (0..self.samples)
            .map(|i| self.t_min + (self.t_max - self.t_min) * i as f64 / (self.samples - 1) as f64)
            .collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Tolerances {
    pub eigenvalue: f64,
    pub angle: f64,
    pub fit: f64,
    pub ucp_null: f64,
    pub recovery: f64,
    pub gauge: f64,
    pub kernel: f64,
    /// Bound on the equation residual of a Cauchy record.
    pub residual: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            eigenvalue: 1e-6,
            angle: 1e-5,
            fit: 1e-8,
            ucp_null: 1e-9,
            recovery: 1e-4,
            gauge: 1e-10,
            kernel: 1e-8,
            residual: 1e-9,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct HeatCheckConfig {
    /// Second model for the kernel-equality comparison.
    pub compare_model: Option<ModelKind>,
    pub times: Vec<f64>,
    /// Number of random probe points; pairs are all combinations.
    pub probe_points: usize,
}

impl Default for HeatCheckConfig {
    fn default() -> Self {
        Self {
            compare_model: None,
            times: (0..50).map(|i| 0.05 * (40.0_f64).powf(i as f64 / 49.0)).collect(),
            probe_points: 5,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub model: ModelKind,
    pub truncation: usize,
    pub resolution: Option<Vec<usize>>,
    pub mass: Mass,
    pub potential: PotentialSpec,
    pub observation: ObservationDescriptor,
    pub sources: SourceConfig,
    pub time_grid: Option<TimeGridSpec>,
    pub tolerances: Tolerances,
    pub gelfand_mode: GelfandMode,
    pub ucp: UcpOptions,
    pub recovery: RecoveryOptions,
    pub isometry: Option<Isometry>,
    pub heatcheck: HeatCheckConfig,
    pub out: Option<PathBuf>,
    pub seed: u64,
}

const TOP_LEVEL: &[&str] = &[
    "model",
    "mass",
    "potential",
    "observation",
    "sources",
    "time_grid",
    "tolerances",
    "gelfand",
    "ucp",
    "recovery",
    "isometry",
    "heatcheck",
    "out",
    "seed",
];

fn convert<T: DeserializeOwned>(value: toml::Value, field: &str) -> Result<T> {
    value.try_into().map_err(|e: toml::de::Error| Error::config(field, e.message().trim().to_string()))
}

fn take<T: DeserializeOwned>(table: &mut toml::Table, key: &str, field: &str) -> Result<Option<T>> {
    table.remove(key).map(|v| convert(v, field)).transpose()
}

fn section(table: &mut toml::Table, key: &str) -> Result<Option<toml::Table>> {
    match table.remove(key) {
        None => Ok(None),
        Some(toml::Value::Table(t)) => Ok(Some(t)),
        Some(_) => Err(Error::config(key, "expected a table")),
    }
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct GelfandSection {
    #[serde(default = "internal")]
    mode: GelfandMode,
}

fn internal() -> GelfandMode {
    GelfandMode::Internal
}

#[derive(Deserialize)]
#[serde(default, deny_unknown_fields)]
struct UcpSection {
    node_multiplier: usize,
}

impl Default for UcpSection {
    fn default() -> Self {
        Self { node_multiplier: 2 }
    }
}

#[derive(Deserialize)]
#[serde(default, deny_unknown_fields)]
struct RecoverySection {
    mask_rel: f64,
    disagreement: f64,
}

impl Default for RecoverySection {
    fn default() -> Self {
        let d = RecoveryOptions::default();
        Self {
            mask_rel: d.mask_rel,
            disagreement: d.disagreement_tol,
        }
    }
}

impl ExperimentConfig {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        let mut root: toml::Table = text
            .parse()
            .map_err(|e: toml::de::Error| Error::config("<document>", e.message().trim().to_string()))?;
        if let Some(k) = root.keys().find(|k| !TOP_LEVEL.contains(&k.as_str())) {
            return Err(Error::config(k.clone(), "unknown field"));
        }

        let mut model_t = section(&mut root, "model")?.ok_or_else(|| Error::config("model", "missing"))?;
        let truncation: usize = take(&mut model_t, "truncation", "model.truncation")?
            .ok_or_else(|| Error::config("model.truncation", "missing"))?;
        if truncation < 2 {
            return Err(Error::config("model.truncation", format!("K = {truncation} must be at least 2")));
        }
        let resolution: Option<Vec<usize>> = take(&mut model_t, "resolution", "model.resolution")?;
        let model: ModelKind = convert(toml::Value::Table(model_t), "model")?;
        model.validate().map_err(|e| Error::config("model", e.to_string()))?;

        let mass_raw: f64 = take(&mut root, "mass", "mass")?.ok_or_else(|| Error::config("mass", "missing"))?;
        let mass = Mass::new(mass_raw).map_err(|e| Error::config("mass", e.to_string()))?;

        let potential: PotentialSpec = take(&mut root, "potential", "potential")?.unwrap_or(PotentialSpec::Zero);
        let observation: ObservationDescriptor =
            take(&mut root, "observation", "observation")?.ok_or_else(|| Error::config("observation", "missing"))?;
        observation
            .validate(&model)
            .map_err(|e| Error::config("observation", e.to_string()))?;

        let sources: SourceConfig = take(&mut root, "sources", "sources")?.unwrap_or_default();
        if sources.count == 0 {
            return Err(Error::config("sources.count", "must be at least 1"));
        }
        if !(0.0..=1.0).contains(&sources.jitter) {
            return Err(Error::config("sources.jitter", "must lie in [0, 1]"));
        }
        if let Some(r) = sources.radius {
            if !(r > 0.0) {
                return Err(Error::config("sources.radius", "must be positive"));
            }
        }

        let time_grid: Option<TimeGridSpec> = take(&mut root, "time_grid", "time_grid")?;
        if let Some(g) = &time_grid {
            if !(g.t_min > 0.0 && g.t_max > g.t_min) {
                return Err(Error::config("time_grid", "need 0 < t_min < t_max"));
            }
            if g.samples < 4 {
                return Err(Error::config("time_grid.samples", "need at least 4 samples"));
            }
        }

        let tolerances: Tolerances = take(&mut root, "tolerances", "tolerances")?.unwrap_or_default();
        for (name, v) in [
            ("eigenvalue", tolerances.eigenvalue),
            ("angle", tolerances.angle),
            ("fit", tolerances.fit),
            ("ucp_null", tolerances.ucp_null),
            ("recovery", tolerances.recovery),
            ("gauge", tolerances.gauge),
            ("kernel", tolerances.kernel),
            ("residual", tolerances.residual),
        ] {
            if !(v > 0.0) {
                return Err(Error::config(format!("tolerances.{name}"), "must be positive"));
            }
        }

        let gelfand: Option<GelfandSection> = take(&mut root, "gelfand", "gelfand")?;
        let ucp: UcpSection = take(&mut root, "ucp", "ucp")?.unwrap_or_default();
        if ucp.node_multiplier == 0 {
            return Err(Error::config("ucp.node_multiplier", "must be at least 1"));
        }
        let recovery: RecoverySection = take(&mut root, "recovery", "recovery")?.unwrap_or_default();
        if !(recovery.mask_rel > 0.0) {
            return Err(Error::config("recovery.mask_rel", "must be positive"));
        }
        if !(recovery.disagreement > 0.0) {
            return Err(Error::config("recovery.disagreement", "must be positive"));
        }
        let isometry: Option<Isometry> = take(&mut root, "isometry", "isometry")?;
        if let Some(iso) = &isometry {
            iso.check_kind(&model).map_err(|e| Error::config("isometry", e.to_string()))?;
        }
        let heatcheck: HeatCheckConfig = take(&mut root, "heatcheck", "heatcheck")?.unwrap_or_default();
        if heatcheck.times.is_empty() || heatcheck.times.iter().any(|&t| !(t > 0.0)) {
            return Err(Error::config("heatcheck.times", "need positive times"));
        }
        let out: Option<PathBuf> = take(&mut root, "out", "out")?;
        let seed: u64 = take(&mut root, "seed", "seed")?.unwrap_or(0);

        Ok(Self {
            model,
            truncation,
            resolution,
            mass,
            potential,
            observation,
            sources,
            time_grid,
            tolerances,
            gelfand_mode: gelfand.map_or(GelfandMode::Internal, |g| g.mode),
            ucp: UcpOptions {
                node_multiplier: ucp.node_multiplier,
                null_rel: tolerances.ucp_null,
            },
            recovery: RecoveryOptions {
                mask_rel: recovery.mask_rel,
                disagreement_tol: recovery.disagreement,
            },
            isometry,
            heatcheck,
            out,
            seed,
        })
    }

    pub fn load(path: &std::path::Path) -> Result<Self> {
        Self::from_toml_str(&std::fs::read_to_string(path)?)
    }

    pub fn gelfand_options(&self) -> GelfandOptions {
        let mut opts = GelfandOptions {
            mode: self.gelfand_mode,
            ..GelfandOptions::default()
        };
        opts.pencil.fit_tolerance = self.tolerances.fit;
        opts
    }

    pub fn compare_tolerances(&self) -> CompareTolerances {
        CompareTolerances {
            eigenvalue: self.tolerances.eigenvalue,
            angle: self.tolerances.angle,
        }
    }
}
