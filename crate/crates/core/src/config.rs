//! Toolkit configuration, read from a TOML file.
//!
//! ```toml
//! [models]
//! ped_vs_av = "models/ped_vs_av.json"
//! av_vs_ped = "models/av_vs_ped.json"
//!
//! [monitor]
//! k = 1.0
//! score_threshold = 0.9
//! debounce = 0.5
//!
//! [scenario.S1]
//! av_start = 32.0
//!
//! [batch]
//! scenarios = ["S1"]
//! policies = ["none", "fixed", "ir"]
//! peds = ["hesitant", "ehmi_responsive"]
//! seeds = 30
//!
//! [service]
//! port = 8080
//! ```
//!
//! Relative paths are taken from the directory holding the file.

use crate::calibration::{load_model, CalibrationError};
use crate::cooperation::{MonitorParams, TriggerKind, TriggerPolicy, DEFAULT_GAIN};
use crate::intent::{BoundaryParams, Perspective};
use crate::sim::{build_scenario, PedestrianKind, PedestrianPolicy, ScenarioId, ScenarioOverrides, TrialConfig};
use serde::Deserialize;
use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use thiserror::Error;

pub const CONFIG_ENV: &str = "CROSSWALK_IR_CONFIG";

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("{path}: {source}")]
    Io { path: String, source: std::io::Error },
    #[error("{path}: {source}")]
    Parse { path: String, source: toml::de::Error },
    #[error("invalid configuration: {0}")]
    Invalid(String),
    #[error("model {path}: {source}")]
    Model { path: String, source: CalibrationError },
}

#[derive(Debug, Clone, Default, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelPaths {
    pub ped_vs_av: Option<PathBuf>,
    pub av_vs_ped: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct MonitorConfig {
    pub k: f64,
    pub score_threshold: f64,
    pub debounce: f64,
    pub latch: bool,
    /// Along-road distance for the fixed-distance trigger.
    pub distance_threshold: f64,
}

impl Default for MonitorConfig {
    fn default() -> Self {
        let p = TriggerPolicy::new(TriggerKind::IntentRecognition);
        Self {
            k: DEFAULT_GAIN,
            score_threshold: p.score_threshold,
            debounce: p.debounce,
            latch: p.latch,
            distance_threshold: p.distance_threshold,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct BatchPlan {
    pub scenarios: Vec<String>,
    pub policies: Vec<String>,
    pub peds: Vec<String>,
    pub seeds: u64,
    /// Trial `i` of a condition uses seed `base_seed + i`.
    pub base_seed: u64,
    pub dt: f64,
    pub max_time: f64,
}

impl Default for BatchPlan {
    fn default() -> Self {
        Self {
            scenarios: vec!["S1".into(), "S2".into()],
            policies: vec!["none".into(), "fixed".into(), "ir".into()],
            peds: PedestrianKind::SCRIPTED.iter().map(|k| k.as_str().to_string()).collect(),
            seeds: 30,
            base_seed: 1,
            dt: 0.05,
            max_time: 60.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ServiceConfig {
    pub port: u16,
}

impl Default for ServiceConfig {
    fn default() -> Self {
        Self { port: 8080 }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ToolkitConfig {
    pub models: ModelPaths,
    pub monitor: MonitorConfig,
    pub scenario: BTreeMap<String, ScenarioOverrides>,
    pub batch: BatchPlan,
    pub service: ServiceConfig,
}

/// One cell of a batch plan with its trial configurations.
#[derive(Debug, Clone, PartialEq)]
pub struct Condition {
    pub scenario: ScenarioId,
    pub trigger: TriggerKind,
    pub pedestrian: PedestrianKind,
    pub trials: Vec<TrialConfig>,
}

impl Condition {
    pub fn label(&self) -> String {
        format!("{}/{}/{}", self.scenario, self.trigger.short_name(), self.pedestrian)
    }
}

fn invalid(msg: impl Into<String>) -> ConfigError {
    ConfigError::Invalid(msg.into())
}

pub fn parse_trigger(s: &str) -> Result<TriggerKind, ConfigError> {
    TriggerKind::parse(s).ok_or_else(|| invalid(format!("unknown policy {s:?} (none, fixed, ir)")))
}

impl ToolkitConfig {
    /// Parses and validates; relative model paths are resolved against `base`.
    pub fn from_toml(text: &str, base: &Path) -> Result<Self, ConfigError> {
        let mut cfg: ToolkitConfig = toml::from_str(text)
            .map_err(|source| ConfigError::Parse { path: base.display().to_string(), source })?;
        for p in [&mut cfg.models.ped_vs_av, &mut cfg.models.av_vs_ped].into_iter().flatten() {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path)
            .map_err(|source| ConfigError::Io { path: path.display().to_string(), source })?;
        let base = path.parent().unwrap_or(Path::new("."));
        Self::from_toml(&text, base).map_err(|e| match e {
            ConfigError::Parse { source, .. } => ConfigError::Parse { path: path.display().to_string(), source },
            other => other,
        })
    }

    /// Loads `explicit`, else the file named by `CROSSWALK_IR_CONFIG`, else
    /// returns the defaults.
    pub fn resolve(explicit: Option<&Path>) -> Result<Self, ConfigError> {
        match explicit {
            Some(p) => Self::load(p),
            None => match std::env::var_os(CONFIG_ENV) {
                Some(p) if !p.is_empty() => Self::load(Path::new(&p)),
                _ => Ok(Self::default()),
            },
        }
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        for p in [&self.models.ped_vs_av, &self.models.av_vs_ped].into_iter().flatten() {
            if !p.exists() {
                return Err(invalid(format!("model file {} does not exist", p.display())));
            }
        }
        let m = &self.monitor;
        if !(m.k > 0.0 && m.k.is_finite()) {
            return Err(invalid(format!("monitor.k must be positive, got {}", m.k)));
        }
        self.trigger(TriggerKind::IntentRecognition).validate().map_err(ConfigError::Invalid)?;
        for (id, o) in &self.scenario {
            let id: ScenarioId = id.parse().map_err(|e| invalid(format!("[scenario.{id}]: {e}")))?;
            build_scenario(id).with_overrides(o).map_err(|e| invalid(format!("[scenario.{id}]: {e}")))?;
        }
        let b = &self.batch;
        if b.seeds == 0 {
            return Err(invalid("batch.seeds must be at least 1"));
        }
        if b.scenarios.is_empty() || b.policies.is_empty() || b.peds.is_empty() {
            return Err(invalid("batch needs at least one scenario, policy and pedestrian"));
        }
        if b.base_seed.checked_add(b.seeds).is_none() {
            return Err(invalid("batch.base_seed + batch.seeds overflows"));
        }
        self.conditions().map(|_| ())
    }

    pub fn trigger(&self, kind: TriggerKind) -> TriggerPolicy {
        let m = &self.monitor;
        TriggerPolicy {
            kind,
            distance_threshold: m.distance_threshold,
            score_threshold: m.score_threshold,
            debounce: m.debounce,
            latch: m.latch,
        }
    }

    /// Boundaries from the configured model files, falling back to the
    /// published parameter rows.
    pub fn monitor_params(&self) -> Result<MonitorParams, ConfigError> {
        let load = |p: &Option<PathBuf>, fallback: BoundaryParams, want: Perspective| match p {
            None => Ok(fallback),
            Some(p) => {
                let m = load_model(p).map_err(|source| ConfigError::Model { path: p.display().to_string(), source })?;
                if m.params.perspective != want {
                    return Err(invalid(format!("{} holds a {} model, expected {want}", p.display(), m.params.perspective)));
                }
                Ok(m.params)
            }
        };
        Ok(MonitorParams {
            ped: load(&self.models.ped_vs_av, BoundaryParams::PED_VS_AV, Perspective::PedVsAv)?,
            av: load(&self.models.av_vs_ped, BoundaryParams::AV_VS_PED, Perspective::AvVsPed)?,
            k: self.monitor.k,
        })
    }

    /// A single trial with this configuration's overrides and monitor; the
    /// model files are not read (see [`Self::monitor_params`]).
    pub fn trial(&self, scenario: ScenarioId, trigger: TriggerKind, ped: PedestrianKind, seed: u64) -> TrialConfig {
        let mut spec = build_scenario(scenario);
        if let Some(o) = self.scenario.get(&scenario.to_string()) {
            spec = spec.with_overrides(o).expect("overrides checked in validate");
        }
        TrialConfig {
            scenario: spec,
            trigger: self.trigger(trigger),
            monitor: MonitorParams { k: self.monitor.k, ..MonitorParams::default() },
            pedestrian: PedestrianPolicy::new(ped),
            seed,
            dt: self.batch.dt,
            max_time: self.batch.max_time,
        }
    }

    /// Expands the batch plan into conditions (scenario-major, then policy,
    /// then pedestrian), each with `seeds` trials.
    pub fn conditions(&self) -> Result<Vec<Condition>, ConfigError> {
        let b = &self.batch;
        let mut out = Vec::new();
        for s in &b.scenarios {
            let scenario: ScenarioId = s.parse().map_err(|e| invalid(format!("batch.scenarios: {e}")))?;
            for p in &b.policies {
                let trigger = parse_trigger(p)?;
                for ped in &b.peds {
                    let pedestrian: PedestrianKind =
                        ped.parse().map_err(|e| invalid(format!("batch.peds: {e}")))?;
                    if pedestrian == PedestrianKind::Manual {
                        return Err(invalid("batch.peds: manual pedestrians need a live controller"));
                    }
                    let trials = (0..b.seeds).map(|i| self.trial(scenario, trigger, pedestrian, b.base_seed + i)).collect();
                    out.push(Condition { scenario, trigger, pedestrian, trials });
                }
            }
        }
        for c in out.iter().flat_map(|c| &c.trials).take(1) {
            c.validate().map_err(|e| invalid(e.to_string()))?;
        }
        Ok(out)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::calibration::{save_model, ClassifierMetrics, TrainedModel};

    #[test]
    fn empty_file_gives_defaults() {
        let c = ToolkitConfig::from_toml("", Path::new(".")).unwrap();
        assert_eq!(c, ToolkitConfig::default());
        assert_eq!(c.conditions().unwrap().len(), 2 * 3 * 4);
        assert_eq!(c.monitor_params().unwrap(), MonitorParams::default());
    }

    #[test]
    fn plan_expands_seeds_from_base() {
        let c = ToolkitConfig::from_toml(
            "[batch]\nscenarios=[\"S1\"]\npolicies=[\"ir\",\"fixed\"]\npeds=[\"hesitant\"]\nseeds=3\nbase_seed=10\n",
            Path::new("."),
        )
        .unwrap();
        let conds = c.conditions().unwrap();
        assert_eq!(conds.len(), 2);
        assert_eq!(conds[1].label(), "S1/fixed/hesitant");
        let seeds: Vec<u64> = conds[0].trials.iter().map(|t| t.seed).collect();
        assert_eq!(seeds, [10, 11, 12]);
    }

    #[test]
    fn overrides_and_monitor_reach_the_trial() {
        let c = ToolkitConfig::from_toml(
            "[monitor]\nk=2.0\ndebounce=0.25\n[scenario.S1]\nav_start=40.0\n",
            Path::new("."),
        )
        .unwrap();
        let t = c.trial(ScenarioId::S1, TriggerKind::IntentRecognition, PedestrianKind::Hesitant, 1);
        assert_eq!(t.scenario.av_start, 40.0);
        assert_eq!(t.monitor.k, 2.0);
        assert_eq!(t.trigger.debounce, 0.25);
        assert_eq!(c.trial(ScenarioId::S2, TriggerKind::NoEhmi, PedestrianKind::Hesitant, 1).scenario.av_start, 35.0);
    }

    #[test]
    fn bad_values_are_rejected() {
        for text in [
            "[monitor]\nscore_threshold=1.5\n",
            "[monitor]\nk=0\n",
            "[scenario.S3]\nav_start=1.0\n",
            "[scenario.S1]\nwarp=1.0\n",
            "[batch]\npolicies=[\"always\"]\n",
            "[batch]\nseeds=0\n",
            "[batch]\ndt=0.5\n",
            "[models]\nped_vs_av=\"/nonexistent/m.json\"\n",
            "[nonsense]\n",
        ] {
            assert!(ToolkitConfig::from_toml(text, Path::new(".")).is_err(), "{text}");
        }
    }

    #[test]
    fn model_paths_are_relative_to_the_file() {
        let dir = tempfile::tempdir().unwrap();
        let m = TrainedModel {
            params: BoundaryParams::new(-0.002, 0.05, 0.3, Perspective::PedVsAv),
            metrics: ClassifierMetrics { accuracy: 1.0, precision: 1.0, recall: 1.0, f1: 1.0, degenerate: false },
            n_samples: 10,
            regularization: 1.0,
        };
        save_model(&dir.path().join("ped.json"), &m, None).unwrap();
        let cfg_path = dir.path().join("toolkit.toml");
        std::fs::write(&cfg_path, "[models]\nped_vs_av = \"ped.json\"\n").unwrap();
        let c = ToolkitConfig::load(&cfg_path).unwrap();
        let mp = c.monitor_params().unwrap();
        assert_eq!(mp.ped, m.params);
        assert_eq!(mp.av, BoundaryParams::AV_VS_PED);

        std::fs::write(&cfg_path, "[models]\nav_vs_ped = \"ped.json\"\n").unwrap();
        assert!(ToolkitConfig::load(&cfg_path).unwrap().monitor_params().is_err());
    }
}
