//! Flat `key=value` run configuration with dotted sections.
//!
//! ```text
//! # comments start with '#'
//! bundle = data/synth
//! task.name = yield
//! model.kind = GBT
//! ```

use std::collections::BTreeMap;
use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;

use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::climate::GddThresholds;
use crate::dataset::LabelTask;
use crate::evaluate::{BenchmarkConfig, Direction, GroupKey, Scheme};
use crate::featurize::{Crop, FeatureSet, MissingPolicy, SeasonAnchor, SeasonSpec, TaskConfig};
use crate::models::{MaxFeatures, ModelKind, ModelSpec};
use crate::synth::{LabelSpec, SynthSpec};

#[derive(Debug, Error, PartialEq)]
#[error("{origin}: key '{key}': {message}")]
pub struct ConfigError {
    pub origin: String,
    pub key: String,
    pub message: String,
}

type Check = fn(&str) -> Result<(), String>;

fn any(_: &str) -> Result<(), String> {
    Ok(())
}

fn parsed<T: FromStr>(v: &str) -> Result<(), String>
where
    T::Err: fmt::Display,
{
    v.trim().parse::<T>().map(|_| ()).map_err(|e| e.to_string())
}

fn optional<T: FromStr>(v: &str) -> Result<(), String>
where
    T::Err: fmt::Display,
{
    if is_unset(v) {
        Ok(())
    } else {
        parsed::<T>(v)
    }
}

fn is_unset(v: &str) -> bool {
    matches!(v.trim(), "" | "default" | "none")
}

fn task_name(v: &str) -> Result<(), String> {
    parse_task(v).map(|_| ())
}

fn years(v: &str) -> Result<(), String> {
    parse_years(v).map(|_| ())
}

fn terms(v: &str) -> Result<(), String> {
    parse_terms(v).map(|_| ())
}

fn season(v: &str) -> Result<(), String> {
    parse_season(v).map(|_| ())
}

/// Every accepted key with its default and value check.
const KEYS: &[(&str, &str, Check)] = &[
    ("bundle", "", any),
    ("out", "out", any),
    ("base_seed", "42", parsed::<u64>),
    ("threads", "0", parsed::<usize>),
    ("n_repeats", "5", parsed::<usize>),
    ("task.name", "yield", task_name),
    ("task.crop", "corn", parsed::<Crop>),
    ("task.feature_set", "RS", parsed::<FeatureSet>),
    ("task.missing_policy", "drop", parsed::<MissingPolicy>),
    ("task.season_start", "default", optional::<SeasonAnchor>),
    ("task.season_end", "default", optional::<SeasonAnchor>),
    ("task.gdd_base", "default", optional::<f64>),
    ("task.gdd_cap", "default", optional::<f64>),
    ("task.gcvi_minus_one", "false", parsed::<bool>),
    ("task.gdd_per_day", "false", parsed::<bool>),
    ("task.min_climate_coverage", "0.8", parsed::<f64>),
    ("model.kind", "RF", parsed::<ModelKind>),
    ("model.n_trees", "200", parsed::<usize>),
    ("model.max_depth", "default", optional::<usize>),
    ("model.learning_rate", "0.1", parsed::<f64>),
    ("model.max_features", "default", optional::<MaxFeatures>),
    ("model.min_samples_leaf", "1", parsed::<usize>),
    ("scheme.name", "group_cv", parsed::<Scheme>),
    ("scheme.k", "5", parsed::<usize>),
    ("scheme.group_key", "auto", parsed::<GroupKey>),
    ("scheme.direction", "east_to_west", parsed::<Direction>),
    ("synth.states", "IL,IN,OH,IA,NE,KS", any),
    ("synth.counties_per_state", "6", parsed::<usize>),
    ("synth.fields_per_county", "0", parsed::<usize>),
    ("synth.years", "2018-2022", years),
    ("synth.season", "corn", season),
    ("synth.climate", "true", parsed::<bool>),
    ("synth.latent_dim", "4", parsed::<usize>),
    ("synth.obs_noise", "0.004", parsed::<f64>),
    ("synth.revisit_min", "8", parsed::<u32>),
    ("synth.revisit_max", "16", parsed::<u32>),
    ("synth.dropout", "0.1", parsed::<f64>),
    ("synth.sparse_fraction", "0", parsed::<f64>),
    ("synth.embedding_noise", "0.1", parsed::<f64>),
    ("synth.region_offset", "0", parsed::<f64>),
    ("synth.r2_ceiling", "0.9", parsed::<f64>),
    ("synth.yield_terms", "GCVI_peak:1", terms),
    ("synth.tillage_terms", "z0:1,z1:-0.5", terms),
    ("synth.covercrop_terms", "z2:1", terms),
];

/// Keys that do not change results and stay out of the config hash.
const UNHASHED: [&str; 2] = ["threads", "out"];

fn parse_task(v: &str) -> Result<LabelTask, String> {
    match v.trim().to_ascii_lowercase().as_str() {
        "tillage" => Ok(LabelTask::TillageRatio),
        "covercrop" | "cover_crop" => Ok(LabelTask::CovercropClass),
        other => other.parse(),
    }
}

/// `2018-2022` or `2018,2020,2021`.
fn parse_years(v: &str) -> Result<Vec<i32>, String> {
    let v = v.trim();
    let bad = || format!("expected YYYY-YYYY or a comma list, got '{v}'");
    let out: Vec<i32> = match v.split_once('-') {
        Some((a, b)) => {
            let (a, b): (i32, i32) = (a.trim().parse().map_err(|_| bad())?, b.trim().parse().map_err(|_| bad())?);
            if a > b {
                return Err(bad());
            }
            (a..=b).collect()
        }
        None => v
            .split(',')
            .map(|y| y.trim().parse().map_err(|_| bad()))
            .collect::<Result<_, _>>()?,
    };
    if out.is_empty() {
        return Err(bad());
    }
    Ok(out)
}

/// `name:weight,name:weight`.
fn parse_terms(v: &str) -> Result<Vec<(String, f64)>, String> {
    v.split(',')
        .filter(|t| !t.trim().is_empty())
        .map(|t| {
            let (name, w) = t
                .split_once(':')
                .ok_or_else(|| format!("term '{t}' is not name:weight"))?;
            let w: f64 = w.trim().parse().map_err(|_| format!("bad weight in '{t}'"))?;
            Ok((name.trim().to_string(), w))
        })
        .collect()
}

fn parse_season(v: &str) -> Result<SeasonSpec, String> {
    match v.trim().to_ascii_lowercase().as_str() {
        "covercrop" | "cover_crop" => Ok(SeasonSpec::COVER_CROP),
        crop => crop
            .parse::<Crop>()
            .map(|c| SeasonSpec::default_for(LabelTask::Yield, c))
            .map_err(|_| format!("unknown season '{v}' (expected corn|soybean|winter_wheat|covercrop)")),
    }
}

/// Effective configuration: defaults overlaid by a file, then by flags.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    values: BTreeMap<String, String>,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            values: KEYS.iter().map(|(k, d, _)| (k.to_string(), d.to_string())).collect(),
        }
    }
}

impl RunConfig {
    /// Parses `text` on top of the defaults. `origin` names the source in
    /// errors.
    pub fn parse(text: &str, origin: &str) -> Result<Self, ConfigError> {
        let mut cfg = Self::default();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let at = format!("{origin}:{}", i + 1);
            let (key, value) = line.split_once('=').ok_or_else(|| ConfigError {
                origin: at.clone(),
                key: line.to_string(),
                message: "expected key=value".into(),
            })?;
            cfg.set_at(key.trim(), value.trim(), &at)?;
        }
        Ok(cfg)
    }

    pub fn set(&mut self, key: &str, value: &str) -> Result<(), ConfigError> {
        self.set_at(key, value, "--set")
    }

    /// Applies a `key=value` override.
    pub fn set_pair(&mut self, pair: &str) -> Result<(), ConfigError> {
        let (k, v) = pair.split_once('=').ok_or_else(|| ConfigError {
            origin: "--set".into(),
            key: pair.to_string(),
            message: "expected key=value".into(),
        })?;
        self.set(k.trim(), v.trim())
    }

    fn set_at(&mut self, key: &str, value: &str, origin: &str) -> Result<(), ConfigError> {
        let err = |message: String| ConfigError {
            origin: origin.to_string(),
            key: key.to_string(),
            message,
        };
        let (_, _, check) = KEYS
            .iter()
            .find(|(k, _, _)| *k == key)
            .ok_or_else(|| err("unknown key".into()))?;
        check(value).map_err(err)?;
        self.values.insert(key.to_string(), value.to_string());
        Ok(())
    }

    pub fn get(&self, key: &str) -> &str {
        self.values.get(key).map(String::as_str).unwrap_or_else(|| panic!("unregistered key {key}"))
    }

    fn typed<T: FromStr>(&self, key: &str) -> T
    where
        T::Err: fmt::Debug,
    {
        self.get(key).trim().parse().expect("validated on insert")
    }

    fn optional<T: FromStr>(&self, key: &str) -> Option<T>
    where
        T::Err: fmt::Debug,
    {
        let v = self.get(key);
        (!is_unset(v)).then(|| v.trim().parse().expect("validated on insert"))
    }

    pub fn bundle(&self) -> Option<PathBuf> {
        let v = self.get("bundle").trim();
        (!v.is_empty()).then(|| PathBuf::from(v))
    }

    pub fn out(&self) -> PathBuf {
        PathBuf::from(self.get("out").trim())
    }

    pub fn threads(&self) -> usize {
        self.typed("threads")
    }

    pub fn base_seed(&self) -> u64 {
        self.typed("base_seed")
    }

    pub fn task_config(&self) -> Result<TaskConfig, ConfigError> {
        let err = |key: &str, message: String| ConfigError {
            origin: "config".into(),
            key: key.to_string(),
            message,
        };
        let task = parse_task(self.get("task.name")).expect("validated");
        let crop: Crop = self.typed("task.crop");
        let mut cfg = TaskConfig::new(task, crop, self.typed("task.feature_set"));
        cfg.missing_policy = self.typed("task.missing_policy");
        cfg.gcvi_minus_one = self.typed("task.gcvi_minus_one");
        cfg.gdd_per_day = self.typed("task.gdd_per_day");
        cfg.min_climate_coverage = self.typed("task.min_climate_coverage");
        if let Some(s) = self.optional::<SeasonAnchor>("task.season_start") {
            cfg.season.start = s;
        }
        if let Some(e) = self.optional::<SeasonAnchor>("task.season_end") {
            cfg.season.end = e;
        }
        let base = self.optional::<f64>("task.gdd_base").unwrap_or(cfg.gdd.t_base());
        let cap = self.optional::<f64>("task.gdd_cap").unwrap_or(cfg.gdd.t_cap());
        cfg.gdd = GddThresholds::new(base, cap).map_err(|e| err("task.gdd_base", e.to_string()))?;
        cfg.validate().map_err(|e| err("task.name", e.to_string()))?;
        Ok(cfg)
    }

    /// Model spec for `task`; `seed` is replaced per fold by the benchmark.
    pub fn model_spec(&self, task: LabelTask) -> Result<ModelSpec, ConfigError> {
        let mut spec = ModelSpec::new(self.typed("model.kind"), BenchmarkConfig::objective(task), self.base_seed());
        spec.n_trees = self.typed("model.n_trees");
        spec.learning_rate = self.typed("model.learning_rate");
        spec.min_samples_leaf = self.typed("model.min_samples_leaf");
        if let Some(d) = self.optional::<usize>("model.max_depth") {
            spec.max_depth = Some(d);
        }
        if let Some(m) = self.optional::<MaxFeatures>("model.max_features") {
            spec.max_features = m;
        }
        spec.validate().map_err(|e| ConfigError {
            origin: "config".into(),
            key: "model".into(),
            message: e.to_string(),
        })?;
        Ok(spec)
    }

    pub fn scheme(&self) -> Scheme {
        match self.typed::<Scheme>("scheme.name") {
            Scheme::GroupCv { .. } => Scheme::GroupCv {
                k: self.typed("scheme.k"),
                key: self.typed("scheme.group_key"),
            },
            Scheme::SpaceTransfer { .. } => Scheme::SpaceTransfer {
                direction: self.typed("scheme.direction"),
            },
            other => other,
        }
    }

    pub fn benchmark_config(&self) -> Result<BenchmarkConfig, ConfigError> {
        let task = self.task_config()?;
        Ok(BenchmarkConfig {
            model: self.model_spec(task.task)?,
            task,
            scheme: self.scheme(),
            n_repeats: self.typed("n_repeats"),
            base_seed: self.base_seed(),
        })
    }

    pub fn synth_spec(&self) -> Result<SynthSpec, ConfigError> {
        let ceiling: f64 = self.typed("synth.r2_ceiling");
        let label = |task: LabelTask, key: &str| LabelSpec {
            r2_ceiling: Some(ceiling),
            ..LabelSpec::new(task, parse_terms(self.get(key)).expect("validated"))
        };
        let season = parse_season(self.get("synth.season")).expect("validated");
        let labels = if season == SeasonSpec::COVER_CROP {
            vec![label(LabelTask::CovercropClass, "synth.covercrop_terms")]
        } else {
            vec![
                label(LabelTask::Yield, "synth.yield_terms"),
                label(LabelTask::TillageRatio, "synth.tillage_terms"),
                label(LabelTask::TillageClass, "synth.tillage_terms"),
            ]
        };
        let spec = SynthSpec {
            states: self
                .get("synth.states")
                .split(',')
                .map(|s| s.trim().to_string())
                .filter(|s| !s.is_empty())
                .collect(),
            counties_per_state: self.typed("synth.counties_per_state"),
            fields_per_county: self.typed("synth.fields_per_county"),
            years: parse_years(self.get("synth.years")).expect("validated"),
            season,
            climate: self.typed("synth.climate"),
            latent_dim: self.typed("synth.latent_dim"),
            obs_noise: self.typed("synth.obs_noise"),
            revisit_days: (self.typed("synth.revisit_min"), self.typed("synth.revisit_max")),
            dropout: self.typed("synth.dropout"),
            sparse_fraction: self.typed("synth.sparse_fraction"),
            labels,
            embedding_noise: self.typed("synth.embedding_noise"),
            region_offset: self.typed("synth.region_offset"),
        };
        spec.validate().map_err(|e| ConfigError {
            origin: "config".into(),
            key: "synth".into(),
            message: e.to_string(),
        })?;
        Ok(spec)
    }

    /// `key=value` lines of every key, sorted.
    pub fn echo(&self) -> String {
        let mut out = String::new();
        for (k, v) in &self.values {
            out.push_str(k);
            out.push('=');
            out.push_str(v);
            out.push('\n');
        }
        out
    }

    /// Content hash over every key that can change results.
    pub fn hash(&self) -> String {
        let mut h = Sha256::new();
        for (k, v) in self.values.iter().filter(|(k, _)| !UNHASHED.contains(&k.as_str())) {
            h.update(k.as_bytes());
            h.update(b"=");
            h.update(v.trim().as_bytes());
            h.update(b"\n");
        }
        hex::encode(h.finalize())
    }
}
