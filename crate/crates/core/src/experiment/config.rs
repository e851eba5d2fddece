//! JSON scenario files.
//!
//! ```json
//! {
//!   "label": "near_source",
//!   "beta": 0.5,
//!   "diffusion_coefficient_cm2_s": 1e-6,
//!   "mui": { "mean": 4e16, "cov": 0.3 },
//!   "molecules": 1e9,
//!   "split_rule": "uniform",
//!   "relays": [ { "d_sr_um": 10, "d_rd_um": 20 } ],
//!   "direct_d_um": 25,
//!   "baseline_d_um": 25,
//!   "miso_emitters": 2,
//!   "simo_receivers": 2,
//!   "sweep": { "parameter": "molecules", "min": 1e9, "max": 1e11, "points": 9,
//!              "spacing": "log", "systems": ["cooperative", "siso"],
//!              "relay_counts": [1, 2, 3], "trials": 0, "seed": 1, "detector": "linear" }
//! }
//! ```
//!
//! Only `molecules`, `direct_d_um` and (for cooperative runs) `relays` are
//! required. `mui` may instead be derived from identical interferers:
//! `{ "interferers": { "count": 5, "molecules": 3e9, "distance_um": 30 }, "cov": 0.3 }`,
//! and `std` may replace `cov`. Unknown keys are rejected.

use std::path::Path;

use serde::{Deserialize, Serialize};

use super::sweep::{Grid, Spacing, SweepParameter, SweepSpec};
use super::ExperimentError;
use crate::analytics::{NetworkConfig, RelayBranch, System, SystemKind};
use crate::channel::{um_to_cm, Emission, Link, Medium, MuiModel};
use crate::simulator::DetectorChoice;

pub const DEFAULT_BETA: f64 = 0.5;
pub const DEFAULT_DIFFUSION_CM2_S: f64 = 1e-6;
pub const DEFAULT_MUI_MEAN: f64 = 4e16;
pub const DEFAULT_COV: f64 = 0.3;
pub const DEFAULT_SEED: u64 = 1;
/// Smallest Monte Carlo run a sweep accepts.
pub const MIN_SWEEP_TRIALS: u64 = 1_000;

/// How the molecule budget `Q` is spread over transmitting nodes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum SplitRule {
    /// `Q` divided equally among the transmitters of each system:
    /// `Q/(N+1)` per cooperative node, `Q/M` per MISO emitter, `Q` for SISO/SIMO.
    #[default]
    Uniform,
    /// Every transmitting node releases `Q`.
    PerNode,
    /// Cooperative counts come from `source_molecules` and `relays[].molecules`.
    Explicit,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct ScenarioFile {
    label: Option<String>,
    #[serde(default = "default_beta")]
    beta: f64,
    #[serde(default = "default_diffusion")]
    diffusion_coefficient_cm2_s: f64,
    #[serde(default)]
    mui: MuiFile,
    molecules: f64,
    #[serde(default)]
    split_rule: SplitRule,
    source_molecules: Option<f64>,
    #[serde(default)]
    relays: Vec<RelayFile>,
    direct_d_um: f64,
    baseline_d_um: Option<f64>,
    #[serde(default = "default_two")]
    miso_emitters: usize,
    #[serde(default = "default_two")]
    simo_receivers: usize,
    sweep: Option<SweepFile>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct MuiFile {
    mean: Option<f64>,
    cov: Option<f64>,
    std: Option<f64>,
    interferers: Option<InterferersFile>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct InterferersFile {
    count: u32,
    molecules: f64,
    distance_um: f64,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RelayFile {
    d_sr_um: f64,
    d_rd_um: f64,
    molecules: Option<f64>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct SweepFile {
    parameter: SweepParameter,
    min: f64,
    max: f64,
    points: usize,
    #[serde(default)]
    spacing: Spacing,
    systems: Option<Vec<SystemKind>>,
    relay_counts: Option<Vec<usize>>,
    #[serde(default)]
    trials: u64,
    #[serde(default = "default_seed")]
    seed: u64,
    #[serde(default)]
    detector: DetectorChoice,
}

fn default_beta() -> f64 {
    DEFAULT_BETA
}
fn default_diffusion() -> f64 {
    DEFAULT_DIFFUSION_CM2_S
}
fn default_two() -> usize {
    2
}
fn default_seed() -> u64 {
    DEFAULT_SEED
}

/// Relay position and optional explicit emission, lengths in cm.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RelayPlacement {
    pub source_link: Link,
    pub destination_link: Link,
    pub molecules: Option<Emission>,
}

/// A validated scenario.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Scenario {
    pub label: Option<String>,
    pub prior: f64,
    pub medium: Medium,
    pub mui: MuiModel,
    /// The molecule budget `Q`; its meaning depends on [`split`](Self::split).
    pub molecules: Emission,
    pub split: SplitRule,
    pub source_molecules: Option<Emission>,
    pub relays: Vec<RelayPlacement>,
    pub direct_link: Link,
    /// Transmitter-receiver distance of the MISO and SIMO baselines.
    pub baseline_link: Link,
    pub miso_emitters: usize,
    pub simo_receivers: usize,
    pub sweep: SweepSpec,
}

/// Where in parameter space a system is evaluated.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OperatingPoint {
    pub molecules: f64,
    /// Direct source-destination distance; the whole geometry scales with it.
    pub distance: Link,
}

fn invalid(key: impl Into<String>, message: impl Into<String>) -> ExperimentError {
    ExperimentError::Config {
        key: key.into(),
        message: message.into(),
    }
}

fn positive(key: &str, v: f64) -> Result<f64, ExperimentError> {
    if v.is_finite() && v > 0.0 {
        Ok(v)
    } else {
        Err(invalid(key, format!("must be finite and > 0, got {v}")))
    }
}

fn link_um(key: &str, v: f64) -> Result<Link, ExperimentError> {
    Link::new(um_to_cm(positive(key, v)?)).map_err(|e| invalid(key, e.to_string()))
}

impl Scenario {
    /// Parses and validates one scenario object.
    pub fn from_json(text: &str) -> Result<Self, ExperimentError> {
        let de = &mut serde_json::Deserializer::from_str(text);
        let file: ScenarioFile = serde_path_to_error::deserialize(de).map_err(parse_error)?;
        Self::validate(file)
    }

    fn validate(f: ScenarioFile) -> Result<Self, ExperimentError> {
        if !(f.beta > 0.0 && f.beta < 1.0) {
            return Err(invalid(
                "beta",
                format!("must lie strictly between 0 and 1, got {}", f.beta),
            ));
        }
        let medium = Medium::new(positive(
            "diffusion_coefficient_cm2_s",
            f.diffusion_coefficient_cm2_s,
        )?)
        .map_err(|e| invalid("diffusion_coefficient_cm2_s", e.to_string()))?;
        let mui = mui_model(&f.mui)?;
        let molecules = Emission::new(positive("molecules", f.molecules)?)
            .map_err(|e| invalid("molecules", e.to_string()))?;

        let mut relays = Vec::with_capacity(f.relays.len());
        for (i, r) in f.relays.iter().enumerate() {
            let molecules = match r.molecules {
                Some(m) => Some(
                    Emission::new(positive(&format!("relays[{i}].molecules"), m)?)
                        .map_err(|e| invalid(format!("relays[{i}].molecules"), e.to_string()))?,
                ),
                None => None,
            };
            relays.push(RelayPlacement {
                source_link: link_um(&format!("relays[{i}].d_sr_um"), r.d_sr_um)?,
                destination_link: link_um(&format!("relays[{i}].d_rd_um"), r.d_rd_um)?,
                molecules,
            });
        }

        let source_molecules = match f.source_molecules {
            Some(m) => Some(
                Emission::new(positive("source_molecules", m)?)
                    .map_err(|e| invalid("source_molecules", e.to_string()))?,
            ),
            None => None,
        };
        if f.split_rule == SplitRule::Explicit {
            if source_molecules.is_none() {
                return Err(invalid(
                    "source_molecules",
                    "required when split_rule is explicit",
                ));
            }
            if let Some(i) = relays.iter().position(|r| r.molecules.is_none()) {
                return Err(invalid(
                    format!("relays[{i}].molecules"),
                    "required when split_rule is explicit",
                ));
            }
        } else {
            if source_molecules.is_some() {
                return Err(invalid(
                    "source_molecules",
                    "only allowed when split_rule is explicit",
                ));
            }
            if let Some(i) = relays.iter().position(|r| r.molecules.is_some()) {
                return Err(invalid(
                    format!("relays[{i}].molecules"),
                    "only allowed when split_rule is explicit",
                ));
            }
        }

        let direct_link = link_um("direct_d_um", f.direct_d_um)?;
        let baseline_link = match f.baseline_d_um {
            Some(d) => link_um("baseline_d_um", d)?,
            None => direct_link,
        };
        if f.miso_emitters == 0 {
            return Err(invalid("miso_emitters", "must be >= 1"));
        }
        if f.simo_receivers == 0 {
            return Err(invalid("simo_receivers", "must be >= 1"));
        }

        let sweep = sweep_spec(f.sweep, relays.len(), f.split_rule)?;
        Ok(Self {
            label: f.label,
            prior: f.beta,
            medium,
            mui,
            molecules,
            split: f.split_rule,
            source_molecules,
            relays,
            direct_link,
            baseline_link,
            miso_emitters: f.miso_emitters,
            simo_receivers: f.simo_receivers,
            sweep,
        })
    }

    /// The scenario's own operating point (no sweep applied).
    pub fn base_point(&self) -> OperatingPoint {
        OperatingPoint {
            molecules: self.molecules.molecules(),
            distance: self.direct_link,
        }
    }

    /// Operating point for one grid value of the sweep.
    pub fn point(
        &self,
        parameter: SweepParameter,
        value: f64,
    ) -> Result<OperatingPoint, ExperimentError> {
        let mut p = self.base_point();
        match parameter {
            SweepParameter::Molecules => p.molecules = value,
            SweepParameter::DistanceUm => {
                p.distance = Link::from_um(value).map_err(|e| invalid("sweep", e.to_string()))?
            }
        }
        Ok(p)
    }

    fn scale(&self, point: &OperatingPoint) -> f64 {
        point.distance.distance_cm() / self.direct_link.distance_cm()
    }

    /// Cooperative network with the first `relays` relays at `point`.
    pub fn network(
        &self,
        relays: usize,
        point: &OperatingPoint,
    ) -> Result<NetworkConfig, ExperimentError> {
        if relays == 0 || relays > self.relays.len() {
            return Err(invalid(
                "relays",
                format!(
                    "{relays} relays requested but {} configured",
                    self.relays.len()
                ),
            ));
        }
        let scale = self.scale(point);
        let q = point.molecules;
        let per_node = match self.split {
            SplitRule::Uniform => q / (relays as f64 + 1.0),
            SplitRule::PerNode => q,
            SplitRule::Explicit => f64::NAN,
        };
        let emission = |explicit: Option<Emission>| -> Result<Emission, ExperimentError> {
            match explicit {
                Some(e) if self.split == SplitRule::Explicit => Ok(e),
                _ => Emission::new(per_node).map_err(|e| invalid("molecules", e.to_string())),
            }
        };
        let branches = self.relays[..relays]
            .iter()
            .map(|r| {
                Ok(RelayBranch {
                    source_link: r.source_link.scaled(scale)?,
                    relay_mui: self.mui,
                    emission: emission(r.molecules)?,
                    destination_link: r.destination_link.scaled(scale)?,
                    destination_mui: self.mui,
                })
            })
            .collect::<Result<Vec<_>, ExperimentError>>()?;
        Ok(NetworkConfig::new(
            self.prior,
            emission(self.source_molecules)?,
            branches,
        )?)
    }

    /// The `kind` system at `point`. `relays` only applies to the cooperative one.
    pub fn system(
        &self,
        kind: SystemKind,
        relays: usize,
        point: &OperatingPoint,
    ) -> Result<System, ExperimentError> {
        let q = point.molecules;
        let scale = self.scale(point);
        let em = |m: f64| Emission::new(m).map_err(|e| invalid("molecules", e.to_string()));
        Ok(match kind {
            SystemKind::Cooperative => System::Cooperative(self.network(relays, point)?),
            SystemKind::Siso => System::Siso {
                prior: self.prior,
                emission: em(q)?,
                link: point.distance,
                mui: self.mui,
            },
            SystemKind::Miso => {
                let each = match self.split {
                    SplitRule::PerNode => q,
                    _ => q / self.miso_emitters as f64,
                };
                let link = self.baseline_link.scaled(scale)?;
                System::Miso {
                    prior: self.prior,
                    emitters: vec![(em(each)?, link); self.miso_emitters],
                    mui: self.mui,
                }
            }
            SystemKind::Simo => System::Simo {
                prior: self.prior,
                emission: em(q)?,
                receivers: vec![(self.baseline_link.scaled(scale)?, self.mui); self.simo_receivers],
            },
        })
    }

    /// Branch count reported in the CSV `N` column.
    pub fn branch_count(&self, kind: SystemKind, relays: usize) -> usize {
        match kind {
            SystemKind::Cooperative => relays,
            SystemKind::Siso => 1,
            SystemKind::Miso => self.miso_emitters,
            SystemKind::Simo => self.simo_receivers,
        }
    }
}

fn mui_model(m: &MuiFile) -> Result<MuiModel, ExperimentError> {
    let mean = match (&m.interferers, m.mean) {
        (Some(_), Some(_)) => {
            return Err(invalid("mui", "give either mean or interferers, not both"))
        }
        (Some(i), None) => {
            if i.count == 0 {
                return Err(invalid("mui.interferers.count", "must be >= 1"));
            }
            let each = Emission::new(positive("mui.interferers.molecules", i.molecules)?)
                .map_err(|e| invalid("mui.interferers.molecules", e.to_string()))?;
            let link = link_um("mui.interferers.distance_um", i.distance_um)?;
            // cov is irrelevant for the mean
            MuiModel::from_interferers(i.count, each, link, 1.0)
                .map_err(|e| invalid("mui.interferers", e.to_string()))?
                .mean()
        }
        (None, Some(mean)) => {
            if !(mean.is_finite() && mean >= 0.0) {
                return Err(invalid(
                    "mui.mean",
                    format!("must be finite and >= 0, got {mean}"),
                ));
            }
            mean
        }
        (None, None) => DEFAULT_MUI_MEAN,
    };
    match (m.cov, m.std) {
        (Some(_), Some(_)) => Err(invalid("mui", "give either cov or std, not both")),
        (_, Some(std)) => MuiModel::new(mean, positive("mui.std", std)?)
            .map_err(|e| invalid("mui.std", e.to_string())),
        (cov, None) => {
            let cov = positive("mui.cov", cov.unwrap_or(DEFAULT_COV))?;
            MuiModel::with_cov(mean, cov).map_err(|e| invalid("mui.cov", e.to_string()))
        }
    }
}

fn sweep_spec(
    f: Option<SweepFile>,
    relay_total: usize,
    split: SplitRule,
) -> Result<SweepSpec, ExperimentError> {
    let Some(f) = f else {
        return Ok(SweepSpec::single_point(relay_total));
    };
    if f.points < 2 {
        return Err(invalid(
            "sweep.points",
            format!("must be >= 2, got {}", f.points),
        ));
    }
    positive("sweep.min", f.min)?;
    positive("sweep.max", f.max)?;
    if f.min >= f.max {
        return Err(invalid(
            "sweep.max",
            format!("must exceed sweep.min ({} >= {})", f.min, f.max),
        ));
    }
    if f.trials != 0 && f.trials < MIN_SWEEP_TRIALS {
        return Err(invalid(
            "sweep.trials",
            format!(
                "Monte Carlo sweeps need at least {MIN_SWEEP_TRIALS} trials, got {}",
                f.trials
            ),
        ));
    }
    if split == SplitRule::Explicit && f.parameter == SweepParameter::Molecules {
        return Err(invalid(
            "sweep.parameter",
            "a molecules sweep cannot use split_rule explicit",
        ));
    }
    let systems = f.systems.unwrap_or_else(|| vec![SystemKind::Cooperative]);
    if systems.is_empty() {
        return Err(invalid("sweep.systems", "must not be empty"));
    }
    let relay_counts = f.relay_counts.unwrap_or_else(|| vec![relay_total]);
    check_relay_counts(&systems, &relay_counts, relay_total)?;
    Ok(SweepSpec {
        parameter: Some(f.parameter),
        grid: Some(Grid {
            min: f.min,
            max: f.max,
            points: f.points,
            spacing: f.spacing,
        }),
        systems,
        relay_counts,
        trials: f.trials,
        seed: f.seed,
        detector: f.detector,
    })
}

pub(crate) fn check_relay_counts(
    systems: &[SystemKind],
    relay_counts: &[usize],
    relay_total: usize,
) -> Result<(), ExperimentError> {
    if !systems.contains(&SystemKind::Cooperative) {
        return Ok(());
    }
    if relay_total == 0 {
        return Err(invalid(
            "relays",
            "at least one relay is required for the cooperative system",
        ));
    }
    if relay_counts.is_empty() {
        return Err(invalid("sweep.relay_counts", "must not be empty"));
    }
    for (i, &n) in relay_counts.iter().enumerate() {
        if n == 0 || n > relay_total {
            return Err(invalid(
                format!("sweep.relay_counts[{i}]"),
                format!("must lie in 1..={relay_total}, got {n}"),
            ));
        }
    }
    Ok(())
}

fn parse_error(e: serde_path_to_error::Error<serde_json::Error>) -> ExperimentError {
    let path = e.path().to_string();
    let mut key = if path == "." { String::new() } else { path };
    let message = e.inner().to_string();
    // serde reports a missing field at its parent; name the field itself
    if let Some(field) = message
        .strip_prefix("missing field `")
        .and_then(|r| r.split('`').next())
    {
        key = if key.is_empty() {
            field.to_string()
        } else {
            format!("{key}.{field}")
        };
    }
    invalid(key, message)
}

/// Reads one or more scenarios: a file may hold a single object or an array.
pub fn load_scenarios(path: &Path) -> Result<Vec<Scenario>, ExperimentError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| invalid("", format!("{}: {e}", path.display())))?;
    scenarios_from_json(&text)
}

pub fn scenarios_from_json(text: &str) -> Result<Vec<Scenario>, ExperimentError> {
    let value: serde_json::Value =
        serde_json::from_str(text).map_err(|e| invalid("", e.to_string()))?;
    match value {
        serde_json::Value::Array(items) => items
            .iter()
            .enumerate()
            .map(|(i, v)| {
                Scenario::from_json(&v.to_string()).map_err(|e| match e {
                    ExperimentError::Config { key, message } => {
                        let key = if key.is_empty() {
                            format!("[{i}]")
                        } else {
                            format!("[{i}].{key}")
                        };
                        invalid(key, message)
                    }
                    other => other,
                })
            })
            .collect(),
        _ => Ok(vec![Scenario::from_json(text)?]),
    }
}

/// Reads a single scenario file.
pub fn load_config(path: &Path) -> Result<Scenario, ExperimentError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| invalid("", format!("{}: {e}", path.display())))?;
    Scenario::from_json(&text)
}
