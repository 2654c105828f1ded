//! Seeded synthetic bundles with known generating functions.
//!
//! Every unit-year draws a latent vector `z`. Raw-band reflectance follows a
//! second-order harmonic whose coefficients are perturbed by `z`; embeddings
//! are a fixed linear map of `z` plus an optional West-region offset; labels
//! are a linear map of named true features plus Gaussian noise sized to hit
//! a target R² ceiling. `truth.csv` records all of it.

use std::collections::BTreeMap;
use std::io::Write;
use std::path::Path;

use chrono::{Datelike, Days, NaiveDate};
use rand::seq::SliceRandom;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp, Normal, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::dataset::{
    default_ecoregion, write_bundle, ClimateDaily, DataError, EmbeddingVector, LabelRecord, LabelTask, Level,
    Observation, RowCounts, SpectralBand, UnitMeta, EMBEDDING_DIM,
};
use crate::featurize::{Crop, SeasonSpec};
use crate::harmonics::{eval_harmonic, HarmonicCoefficients, HarmonicFit, SeasonWindow};
use crate::indices::{compute_index, IndexOptions};
use crate::seed;

pub const TRUTH_FILE: &str = "truth.csv";
pub const TRUTH_HEADER: [&str; 5] = ["kind", "unit_id", "year", "key", "value"];

/// Baseline `[c, a1, b1, a2, b2]` per raw band, peaking in mid-summer on a
/// calendar-year time axis.
const BASE_COEFFICIENTS: [(SpectralBand, [f64; 5]); 6] = [
    (SpectralBand::Red, [0.08, 0.025, 0.008, 0.004, -0.002]),
    (SpectralBand::Green, [0.09, -0.012, -0.004, 0.003, 0.002]),
    (SpectralBand::Blue, [0.06, 0.012, 0.004, -0.002, 0.001]),
    (SpectralBand::Nir, [0.30, -0.11, -0.03, 0.015, 0.006]),
    (SpectralBand::Swir1, [0.22, 0.04, 0.012, -0.006, 0.003]),
    (SpectralBand::Swir2, [0.14, 0.035, 0.01, -0.004, 0.002]),
];

#[derive(Debug, Error)]
pub enum SynthError {
    #[error("invalid synth spec: {0}")]
    Spec(String),
    #[error(transparent)]
    Data(#[from] DataError),
    #[error("writing {file}: {source}")]
    Io {
        file: String,
        #[source]
        source: std::io::Error,
    },
}

/// Linear label model over named true features.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LabelSpec {
    pub task: LabelTask,
    pub intercept: f64,
    /// `(feature, weight)`; features are `z{k}`, `{band}_peak` or `elev`.
    pub terms: Vec<(String, f64)>,
    /// Target R² ceiling; sets the noise σ from the signal variance.
    pub r2_ceiling: Option<f64>,
    /// Noise σ used when no ceiling is given.
    pub noise_sigma: f64,
}

impl LabelSpec {
    pub fn new(task: LabelTask, terms: Vec<(String, f64)>) -> Self {
        Self {
            task,
            intercept: if task == LabelTask::Yield { 10.0 } else { 0.0 },
            terms,
            r2_ceiling: Some(0.9),
            noise_sigma: 0.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SynthSpec {
    pub states: Vec<String>,
    pub counties_per_state: usize,
    pub fields_per_county: usize,
    pub years: Vec<i32>,
    /// Observation season; scenes are generated only inside it.
    pub season: SeasonSpec,
    /// Generate daily climate inside the season.
    pub climate: bool,
    pub latent_dim: usize,
    /// σ of additive reflectance noise.
    pub obs_noise: f64,
    /// Inclusive range of days between consecutive scenes.
    pub revisit_days: (u32, u32),
    /// Probability that a scene is lost.
    pub dropout: f64,
    /// Fraction of unit-years reduced to a handful of scenes.
    pub sparse_fraction: f64,
    pub labels: Vec<LabelSpec>,
    pub embedding_noise: f64,
    /// Added to every embedding dimension of West-region units.
    pub region_offset: f64,
}

/// Scenes kept in a sparse unit-year, too few for a harmonic fit.
pub const SPARSE_SCENES: usize = 4;

impl Default for SynthSpec {
    fn default() -> Self {
        Self {
            states: ["IL", "IN", "OH", "IA", "NE", "KS"].map(String::from).to_vec(),
            counties_per_state: 6,
            fields_per_county: 0,
            years: (2018..=2022).collect(),
            season: SeasonSpec::CORN_SOY,
            climate: true,
            latent_dim: 4,
            obs_noise: 0.004,
            revisit_days: (8, 16),
            dropout: 0.1,
            sparse_fraction: 0.0,
            labels: vec![
                LabelSpec::new(LabelTask::Yield, vec![("GCVI_peak".into(), 1.0)]),
                LabelSpec::new(LabelTask::TillageRatio, vec![("z0".into(), 1.0), ("z1".into(), -0.5)]),
                LabelSpec::new(LabelTask::TillageClass, vec![("z2".into(), 1.0)]),
            ],
            embedding_noise: 0.1,
            region_offset: 0.0,
        }
    }
}

impl SynthSpec {
    /// Defaults with the observation season and climate of a crop.
    pub fn for_crop(crop: Crop) -> Self {
        Self {
            season: SeasonSpec::default_for(LabelTask::Yield, crop),
            ..Self::default()
        }
    }

    pub fn true_feature_names(&self) -> Vec<String> {
        let mut names: Vec<String> = (0..self.latent_dim).map(|k| format!("z{k}")).collect();
        names.extend(SpectralBand::VEGETATION.iter().map(|b| format!("{b}_peak")));
        names.push("elev".to_string());
        names
    }

    pub fn validate(&self) -> Result<(), SynthError> {
        let bad = |m: String| Err(SynthError::Spec(m));
        if self.states.is_empty() || self.counties_per_state == 0 || self.years.is_empty() {
            return bad("need at least one state, county and year".into());
        }
        if self.latent_dim == 0 {
            return bad("latent_dim must be at least 1".into());
        }
        for (name, v) in [
            ("obs_noise", self.obs_noise),
            ("embedding_noise", self.embedding_noise),
        ] {
            if !(v.is_finite() && v >= 0.0) {
                return bad(format!("{name} must be a finite σ >= 0"));
            }
        }
        if !self.region_offset.is_finite() {
            return bad("region_offset must be finite".into());
        }
        if !(0.0..1.0).contains(&self.dropout) {
            return bad("dropout must lie in [0, 1)".into());
        }
        if !(0.0..=1.0).contains(&self.sparse_fraction) {
            return bad("sparse_fraction must lie in [0, 1]".into());
        }
        let (lo, hi) = self.revisit_days;
        if lo == 0 || lo > hi {
            return bad(format!("revisit range {lo}..{hi} is invalid"));
        }
        for y in &self.years {
            self.season.resolve(*y).map_err(|e| SynthError::Spec(e.to_string()))?;
        }
        let known = self.true_feature_names();
        for label in &self.labels {
            if let Some((name, _)) = label.terms.iter().find(|(n, _)| !known.contains(n)) {
                return bad(format!("label {} references unknown feature '{name}'", label.task));
            }
            if label.terms.is_empty() {
                return bad(format!("label {} has no terms", label.task));
            }
            if let Some(c) = label.r2_ceiling {
                if !(c > 0.0 && c <= 1.0) {
                    return bad(format!("r2_ceiling {c} must lie in (0, 1]"));
                }
            }
            if !(label.noise_sigma.is_finite() && label.noise_sigma >= 0.0) {
                return bad("label noise σ must be >= 0".into());
            }
        }
        Ok(())
    }
}

/// Counts and label statistics of a generated bundle.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SynthSummary {
    pub rows: RowCounts,
    pub sparse_unit_years: usize,
    pub labels: BTreeMap<String, LabelStats>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LabelStats {
    pub signal_variance: f64,
    pub noise_sigma: f64,
    /// `σ²_signal + σ²_noise` for continuous labels.
    pub label_variance: f64,
    /// `1 − σ²_noise / label_variance`.
    pub r2_ceiling: f64,
}

struct UnitYear {
    unit: usize,
    year: i32,
    z: Vec<f64>,
    coefs: Vec<(SpectralBand, HarmonicCoefficients)>,
    truth: BTreeMap<String, f64>,
    sparse: bool,
}

fn perturbed(base: [f64; 5], band_idx: usize, z: &[f64]) -> HarmonicCoefficients {
    let d = z.len();
    let [c, a1, b1, a2, b2] = base;
    HarmonicCoefficients {
        c: c * (1.0 + 0.05 * z[band_idx % d].tanh()),
        a1: a1 * (1.0 + 0.3 * z[(band_idx + 1) % d].tanh()),
        b1: b1 + 0.15 * c * z[(band_idx + 2) % d].tanh(),
        a2: a2 + 0.4 * a1.abs() * z[(band_idx + 3) % d].tanh(),
        b2,
    }
}

/// True peak of every vegetation band on a daily grid over `window`.
fn true_peaks(coefs: &[(SpectralBand, HarmonicCoefficients)], window: SeasonWindow) -> BTreeMap<String, f64> {
    let fits: Vec<(SpectralBand, HarmonicFit)> = coefs
        .iter()
        .map(|(b, c)| (*b, HarmonicFit::from_coefficients(*c, *b, window)))
        .collect();
    let mut peaks: BTreeMap<SpectralBand, f64> = BTreeMap::new();
    for day in window.days() {
        let raw: BTreeMap<SpectralBand, f64> = fits.iter().map(|(b, f)| (*b, eval_harmonic(f, day))).collect();
        for band in SpectralBand::VEGETATION {
            let v = if band.is_raw() {
                raw[&band]
            } else {
                compute_index(band, &raw, IndexOptions::default()).expect("generated reflectance is positive")
            };
            let e = peaks.entry(band).or_insert(f64::NEG_INFINITY);
            *e = e.max(v);
        }
    }
    peaks.into_iter().map(|(b, v)| (format!("{b}_peak"), v)).collect()
}

fn std_normal(rng: &mut ChaCha8Rng) -> f64 {
    StandardNormal.sample(rng)
}

fn normal(rng: &mut ChaCha8Rng, sigma: f64) -> f64 {
    if sigma == 0.0 {
        0.0
    } else {
        sigma * std_normal(rng)
    }
}

fn build_units(spec: &SynthSpec, seed_: u64) -> Vec<UnitMeta> {
    let mut units = Vec::new();
    for state in &spec.states {
        for c in 0..spec.counties_per_state {
            let county = format!("{state}C{:02}", c + 1);
            let mut rng = seed::rng(seed::mix_str(seed_, &county));
            units.push(UnitMeta {
                unit_id: county.clone(),
                level: Level::County,
                state: state.clone(),
                county_id: county.clone(),
                ecoregion: default_ecoregion(state),
                elevation_m: (rng.random_range(150.0..450.0f64) * 10.0).round() / 10.0,
            });
            for f in 0..spec.fields_per_county {
                let id = format!("{county}F{:02}", f + 1);
                let mut rng = seed::rng(seed::mix_str(seed_, &id));
                units.push(UnitMeta {
                    unit_id: id,
                    level: Level::Field,
                    state: state.clone(),
                    county_id: county.clone(),
                    ecoregion: default_ecoregion(state),
                    elevation_m: (rng.random_range(150.0..450.0f64) * 10.0).round() / 10.0,
                });
            }
        }
    }
    units
}

struct Generated {
    units: Vec<UnitMeta>,
    observations: Vec<Observation>,
    climate: Vec<ClimateDaily>,
    embeddings: Vec<EmbeddingVector>,
    labels: Vec<LabelRecord>,
    truth: Vec<(String, String, String, String, f64)>,
    summary: SynthSummary,
}

fn generate_all(spec: &SynthSpec, seed_: u64) -> Result<Generated, SynthError> {
    spec.validate()?;
    let units = build_units(spec, seed_);
    let d = spec.latent_dim;

    // latent draws and ground truth per unit-year
    let mut unit_years: Vec<UnitYear> = units
        .par_iter()
        .enumerate()
        .flat_map_iter(|(ui, u)| {
            let unit_seed = seed::mix_str(seed_, &u.unit_id);
            spec.years.iter().map(move |&year| {
                let mut rng = seed::rng(seed::mix(seed::mix_str(unit_seed, "latent"), year as u64));
                let z: Vec<f64> = (0..d).map(|_| std_normal(&mut rng)).collect();
                let coefs: Vec<(SpectralBand, HarmonicCoefficients)> = BASE_COEFFICIENTS
                    .iter()
                    .enumerate()
                    .map(|(bi, (b, base))| (*b, perturbed(*base, bi, &z)))
                    .collect();
                let window = spec.season.resolve(year).expect("validated season");
                let mut truth = true_peaks(&coefs, window);
                for (k, v) in z.iter().enumerate() {
                    truth.insert(format!("z{k}"), *v);
                }
                truth.insert("elev".to_string(), u.elevation_m);
                UnitYear {
                    unit: ui,
                    year,
                    z,
                    coefs,
                    truth,
                    sparse: false,
                }
            })
        })
        .collect();

    let n_sparse = (spec.sparse_fraction * unit_years.len() as f64).round() as usize;
    let mut order: Vec<usize> = (0..unit_years.len()).collect();
    order.shuffle(&mut seed::rng(seed::mix_str(seed_, "sparse")));
    for &i in &order[..n_sparse] {
        unit_years[i].sparse = true;
    }

    // observations and climate per unit-year
    let per_uy: Vec<(Vec<Observation>, Vec<ClimateDaily>)> = unit_years
        .par_iter()
        .map(|uy| {
            let u = &units[uy.unit];
            let unit_seed = seed::mix_str(seed_, &u.unit_id);
            let mut rng = seed::rng(seed::mix(seed::mix_str(unit_seed, "scenes"), uy.year as u64));
            let window = spec.season.resolve(uy.year).expect("validated season");
            let mut dates = Vec::new();
            let mut date = window.start() + Days::new(u64::from(rng.random_range(0..spec.revisit_days.0)));
            while date <= window.end() {
                if !rng.random_bool(spec.dropout) {
                    dates.push(date);
                }
                date = date + Days::new(u64::from(rng.random_range(spec.revisit_days.0..=spec.revisit_days.1)));
            }
            if uy.sparse && dates.len() > SPARSE_SCENES {
                let step = dates.len() / SPARSE_SCENES;
                dates = (0..SPARSE_SCENES).map(|i| dates[i * step]).collect();
            }
            let mut obs = Vec::with_capacity(dates.len() * 6);
            for (band, coefs) in &uy.coefs {
                let fit = HarmonicFit::from_coefficients(*coefs, *band, window);
                for &day in &dates {
                    let v = eval_harmonic(&fit, day) + normal(&mut rng, spec.obs_noise);
                    obs.push(Observation {
                        unit_id: u.unit_id.clone(),
                        band: *band,
                        date: day,
                        value: v.clamp(1e-4, 1.5),
                    });
                }
            }
            let climate = if spec.climate {
                climate_days(&u.unit_id, window, &mut rng)
            } else {
                Vec::new()
            };
            (obs, climate)
        })
        .collect();
    let mut observations = Vec::new();
    let mut climate = Vec::new();
    for (o, c) in per_uy {
        observations.extend(o);
        climate.extend(c);
    }
    // windows of consecutive years may overlap; keep the first day seen
    climate.sort_by(|a, b| (&a.unit_id, a.date).cmp(&(&b.unit_id, b.date)));
    climate.dedup_by(|a, b| a.unit_id == b.unit_id && a.date == b.date);
    observations.sort_by(|a, b| (&a.unit_id, a.band, a.date).cmp(&(&b.unit_id, b.band, b.date)));
    observations.dedup_by(|a, b| a.unit_id == b.unit_id && a.band == b.band && a.date == b.date);

    // embeddings for every label year and the year before
    let mut w_rng = seed::rng(seed::mix_str(seed_, "embedding_map"));
    let scale = 1.0 / (d as f64).sqrt();
    let w: Vec<Vec<f64>> = (0..EMBEDDING_DIM)
        .map(|_| (0..d).map(|_| scale * std_normal(&mut w_rng)).collect())
        .collect();
    let mut emb_years: Vec<i32> = spec.years.clone();
    emb_years.push(spec.years.iter().min().expect("nonempty") - 1);
    emb_years.sort_unstable();
    emb_years.dedup();
    let latent_of: BTreeMap<(usize, i32), &Vec<f64>> = unit_years.iter().map(|uy| ((uy.unit, uy.year), &uy.z)).collect();
    let embeddings: Vec<EmbeddingVector> = units
        .par_iter()
        .enumerate()
        .flat_map_iter(|(ui, u)| {
            let unit_seed = seed::mix_str(seed_, &u.unit_id);
            let w = &w;
            let latent_of = &latent_of;
            emb_years.iter().map(move |&year| {
                let mut rng = seed::rng(seed::mix(seed::mix_str(unit_seed, "embedding"), year as u64));
                let drawn: Vec<f64>;
                let z = match latent_of.get(&(ui, year)) {
                    Some(z) => *z,
                    None => {
                        drawn = (0..d).map(|_| std_normal(&mut rng)).collect();
                        &drawn
                    }
                };
                let offset = if u.ecoregion == crate::dataset::Ecoregion::West {
                    spec.region_offset
                } else {
                    0.0
                };
                let mut values = [0.0; EMBEDDING_DIM];
                for (j, v) in values.iter_mut().enumerate() {
                    let lin: f64 = w[j].iter().zip(z).map(|(a, b)| a * b).sum();
                    *v = lin + offset + normal(&mut rng, spec.embedding_noise);
                }
                EmbeddingVector {
                    unit_id: u.unit_id.clone(),
                    year,
                    values,
                }
            })
        })
        .collect();

    // labels
    let mut labels = Vec::new();
    let mut stats = BTreeMap::new();
    for label in &spec.labels {
        let signal: Vec<f64> = unit_years
            .iter()
            .map(|uy| label.terms.iter().map(|(n, wgt)| wgt * uy.truth[n]).sum())
            .collect();
        let mean = crate::numeric::mean(&signal);
        let var = signal.iter().map(|s| (s - mean) * (s - mean)).sum::<f64>() / signal.len() as f64;
        let sigma = match label.r2_ceiling {
            Some(c) => (var * (1.0 - c) / c).sqrt(),
            None => label.noise_sigma,
        };
        let label_var = var + sigma * sigma;
        stats.insert(
            label.task.name().to_string(),
            LabelStats {
                signal_variance: var,
                noise_sigma: sigma,
                label_variance: label_var,
                r2_ceiling: if label_var > 0.0 { 1.0 - sigma * sigma / label_var } else { 1.0 },
            },
        );
        let sd = var.sqrt().max(f64::MIN_POSITIVE);
        for (uy, s) in unit_years.iter().zip(&signal) {
            let u = &units[uy.unit];
            let mut rng = seed::rng(seed::mix(
                seed::mix_str(seed::mix_str(seed_, &u.unit_id), label.task.name()),
                uy.year as u64,
            ));
            let noisy = s + normal(&mut rng, sigma);
            let value = match label.task {
                LabelTask::Yield => label.intercept + noisy,
                LabelTask::TillageRatio => 1.0 / (1.0 + (-(label.intercept + (noisy - mean) / sd)).exp()),
                LabelTask::TillageClass | LabelTask::CovercropClass => {
                    f64::from(u8::from(label.intercept + (noisy - mean) / sd > 0.0))
                }
            };
            labels.push(LabelRecord {
                unit_id: u.unit_id.clone(),
                year: uy.year,
                task: label.task,
                value,
            });
        }
    }

    let mut truth = Vec::new();
    for (task, s) in &stats {
        for (key, v) in [
            ("signal_variance", s.signal_variance),
            ("noise_sigma", s.noise_sigma),
            ("label_variance", s.label_variance),
            ("r2_ceiling", s.r2_ceiling),
        ] {
            truth.push(("meta".into(), String::new(), String::new(), format!("{task}.{key}"), v));
        }
    }
    for (j, row) in w.iter().enumerate() {
        for (k, v) in row.iter().enumerate() {
            truth.push((
                "embedding_map".into(),
                String::new(),
                String::new(),
                format!("{}_z{k}", crate::dataset::embedding_column(j)),
                *v,
            ));
        }
    }
    for uy in &unit_years {
        let u = &units[uy.unit].unit_id;
        for (band, c) in &uy.coefs {
            for (name, v) in HarmonicCoefficients::NAMES.iter().zip(c.to_array()) {
                truth.push(("coef".into(), u.clone(), uy.year.to_string(), format!("{band}_{name}"), v));
            }
        }
        for (k, v) in &uy.truth {
            truth.push(("feature".into(), u.clone(), uy.year.to_string(), k.clone(), *v));
        }
        truth.push((
            "flag".into(),
            u.clone(),
            uy.year.to_string(),
            "sparse".into(),
            f64::from(u8::from(uy.sparse)),
        ));
    }

    let summary = SynthSummary {
        rows: RowCounts {
            units: units.len(),
            observations: observations.len(),
            climate: climate.len(),
            embeddings: embeddings.len(),
            labels: labels.len(),
        },
        sparse_unit_years: n_sparse,
        labels: stats,
    };
    Ok(Generated {
        units,
        observations,
        climate,
        embeddings,
        labels,
        truth,
        summary,
    })
}

/// Daily temperature on a seasonal sinusoid plus noise; showers on about a
/// third of days.
fn climate_days(unit_id: &str, window: SeasonWindow, rng: &mut ChaCha8Rng) -> Vec<ClimateDaily> {
    let rain: Exp<f64> = Exp::new(1.0 / 8.0).expect("positive rate");
    let jitter: Normal<f64> = Normal::new(0.0, 2.0).expect("positive σ");
    window
        .days()
        .map(|date: NaiveDate| {
            let doy = f64::from(date.ordinal());
            let mean = 11.0 - 14.0 * (2.0 * std::f64::consts::PI * (doy - 15.0) / 365.25).cos();
            let mid = mean + jitter.sample(rng);
            let half = 5.0 + rng.random_range(0.0..3.0);
            let ppt = if rng.random_bool(0.33) {
                (rain.sample(rng) * 10.0).round() / 10.0
            } else {
                0.0
            };
            ClimateDaily {
                unit_id: unit_id.to_string(),
                date,
                tmin_c: ((mid - half) * 10.0).round() / 10.0,
                tmax_c: ((mid + half) * 10.0).round() / 10.0,
                ppt_mm: ppt,
            }
        })
        .collect()
}

/// Writes a bundle and its `truth.csv` sidecar to `dir`.
pub fn generate(spec: &SynthSpec, seed: u64, dir: &Path) -> Result<SynthSummary, SynthError> {
    let g = generate_all(spec, seed)?;
    write_bundle(dir, &g.units, &g.observations, &g.climate, &g.embeddings, &g.labels)?;
    let path = dir.join(TRUTH_FILE);
    let io_err = |source: std::io::Error| SynthError::Io {
        file: TRUTH_FILE.to_string(),
        source,
    };
    let file = std::fs::File::create(&path).map_err(io_err)?;
    let mut w = csv::Writer::from_writer(std::io::BufWriter::new(file));
    let csv_err = |e: csv::Error| io_err(std::io::Error::other(e));
    w.write_record(TRUTH_HEADER).map_err(csv_err)?;
    for (kind, unit, year, key, value) in &g.truth {
        w.write_record([kind.as_str(), unit.as_str(), year.as_str(), key.as_str(), &value.to_string()])
            .map_err(csv_err)?;
    }
    w.into_inner()
        .map_err(|e| io_err(e.into_error()))?
        .flush()
        .map_err(io_err)?;
    Ok(g.summary)
}

/// Rows of a `truth.csv` sidecar.
#[derive(Debug, Clone, PartialEq, Deserialize)]
pub struct TruthRecord {
    pub kind: String,
    pub unit_id: String,
    pub year: String,
    pub key: String,
    pub value: f64,
}

pub fn read_truth(dir: &Path) -> Result<Vec<TruthRecord>, SynthError> {
    let path = dir.join(TRUTH_FILE);
    let mut r = csv::Reader::from_path(&path).map_err(|e| SynthError::Io {
        file: TRUTH_FILE.to_string(),
        source: std::io::Error::other(e),
    })?;
    r.deserialize()
        .collect::<Result<Vec<TruthRecord>, _>>()
        .map_err(|e| SynthError::Io {
            file: TRUTH_FILE.to_string(),
            source: std::io::Error::other(e),
        })
}
