//! Shared data model and the five-table CSV bundle.
//!
//! A bundle directory holds `units.csv`, `observations.csv`, `climate.csv`,
//! `embeddings.csv` and `labels.csv`. [`load_dataset`] parses and validates
//! all five and returns an immutable [`Dataset`] indexed for featurization.

mod io;

use std::collections::BTreeMap;
use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;

use chrono::{Datelike, NaiveDate};
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use io::{load_dataset, load_dataset_with, write_bundle, LoadOptions, BUNDLE_FILES};

pub const EMBEDDING_DIM: usize = 64;

/// Upper bound accepted for raw surface reflectance; values slightly above
/// 1 occur after atmospheric correction.
pub const MAX_RAW_REFLECTANCE: f64 = 1.5;

#[derive(Debug, Error)]
pub enum DataError {
    #[error("{file}: missing file (expected at {path})")]
    MissingFile { file: String, path: PathBuf },
    #[error("{file}: {source}")]
    Io {
        file: String,
        #[source]
        source: std::io::Error,
    },
    #[error("{file}:{line}: column '{column}': {message}")]
    Malformed {
        file: String,
        line: u64,
        column: String,
        message: String,
    },
    #[error("{file}:{line}: {message}")]
    Invariant {
        file: String,
        line: u64,
        message: String,
    },
    #[error("series {unit_id}/{band}: {message}")]
    Series {
        unit_id: String,
        band: SpectralBand,
        message: String,
    },
    #[error("no valid pixels")]
    NoValidPixels,
    #[error("pixel values ({values}) and mask ({mask}) differ in length")]
    MaskLength { values: usize, mask: usize },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum SpectralBand {
    Red,
    Green,
    Blue,
    Nir,
    Swir1,
    Swir2,
    Ndvi,
    Gcvi,
    Ndti,
    Sti,
    Crc,
}

impl SpectralBand {
    pub const RAW: [SpectralBand; 6] = [
        SpectralBand::Red,
        SpectralBand::Green,
        SpectralBand::Blue,
        SpectralBand::Nir,
        SpectralBand::Swir1,
        SpectralBand::Swir2,
    ];

    /// Raw bands plus the two vegetation indices.
    pub const VEGETATION: [SpectralBand; 8] = [
        SpectralBand::Red,
        SpectralBand::Green,
        SpectralBand::Blue,
        SpectralBand::Nir,
        SpectralBand::Swir1,
        SpectralBand::Swir2,
        SpectralBand::Ndvi,
        SpectralBand::Gcvi,
    ];

    pub const ALL: [SpectralBand; 11] = [
        SpectralBand::Red,
        SpectralBand::Green,
        SpectralBand::Blue,
        SpectralBand::Nir,
        SpectralBand::Swir1,
        SpectralBand::Swir2,
        SpectralBand::Ndvi,
        SpectralBand::Gcvi,
        SpectralBand::Ndti,
        SpectralBand::Sti,
        SpectralBand::Crc,
    ];

    pub fn name(self) -> &'static str {
        match self {
            SpectralBand::Red => "Red",
            SpectralBand::Green => "Green",
            SpectralBand::Blue => "Blue",
            SpectralBand::Nir => "NIR",
            SpectralBand::Swir1 => "SWIR1",
            SpectralBand::Swir2 => "SWIR2",
            SpectralBand::Ndvi => "NDVI",
            SpectralBand::Gcvi => "GCVI",
            SpectralBand::Ndti => "NDTI",
            SpectralBand::Sti => "STI",
            SpectralBand::Crc => "CRC",
        }
    }

    pub fn is_raw(self) -> bool {
        Self::RAW.contains(&self)
    }

    pub fn is_derived(self) -> bool {
        !self.is_raw()
    }
}

impl fmt::Display for SpectralBand {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for SpectralBand {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        SpectralBand::ALL
            .into_iter()
            .find(|b| b.name().eq_ignore_ascii_case(s.trim()))
            .ok_or_else(|| format!("unknown band '{s}'"))
    }
}

/// Dated samples of one band for one spatial unit.
#[derive(Debug, Clone, PartialEq)]
pub struct ObservationSeries {
    pub unit_id: String,
    pub band: SpectralBand,
    samples: Vec<(NaiveDate, f64)>,
}

impl ObservationSeries {
    /// Validates strictly increasing dates, finite values and, for raw
    /// bands, the reflectance range.
    pub fn new(
        unit_id: impl Into<String>,
        band: SpectralBand,
        samples: Vec<(NaiveDate, f64)>,
    ) -> Result<Self, DataError> {
        let unit_id = unit_id.into();
        let err = |message: String| DataError::Series {
            unit_id: unit_id.clone(),
            band,
            message,
        };
        for w in samples.windows(2) {
            if w[1].0 <= w[0].0 {
                return Err(err(format!("dates not strictly increasing at {}", w[1].0)));
            }
        }
        for &(date, v) in &samples {
            if !v.is_finite() {
                return Err(err(format!("non-finite value on {date}")));
            }
            if band.is_raw() && !(0.0..=MAX_RAW_REFLECTANCE).contains(&v) {
                return Err(err(format!("reflectance {v} on {date} outside [0, 1.5]")));
            }
        }
        Ok(Self {
            unit_id,
            band,
            samples,
        })
    }

    pub fn samples(&self) -> &[(NaiveDate, f64)] {
        &self.samples
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    /// Samples dated within `[start, end]` (inclusive).
    pub fn between(&self, start: NaiveDate, end: NaiveDate) -> &[(NaiveDate, f64)] {
        let lo = self.samples.partition_point(|s| s.0 < start);
        let hi = self.samples.partition_point(|s| s.0 <= end);
        &self.samples[lo..hi.max(lo)]
    }

    /// A copy restricted to `[start, end]`.
    pub fn restricted(&self, start: NaiveDate, end: NaiveDate) -> ObservationSeries {
        ObservationSeries {
            unit_id: self.unit_id.clone(),
            band: self.band,
            samples: self.between(start, end).to_vec(),
        }
    }
}

/// One row of `observations.csv`.
#[derive(Debug, Clone, PartialEq)]
pub struct Observation {
    pub unit_id: String,
    pub band: SpectralBand,
    pub date: NaiveDate,
    pub value: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ClimateDaily {
    pub unit_id: String,
    pub date: NaiveDate,
    pub tmin_c: f64,
    pub tmax_c: f64,
    pub ppt_mm: f64,
}

impl ClimateDaily {
    pub fn validate(&self) -> Result<(), String> {
        if !(self.tmin_c.is_finite() && self.tmax_c.is_finite() && self.ppt_mm.is_finite()) {
            return Err("non-finite climate value".into());
        }
        if self.tmin_c > self.tmax_c {
            return Err(format!("tmin_c {} > tmax_c {}", self.tmin_c, self.tmax_c));
        }
        if self.ppt_mm < 0.0 {
            return Err(format!("negative ppt_mm {}", self.ppt_mm));
        }
        Ok(())
    }
}

/// Annual 64-dimensional embedding (bands A00..A63) for one unit.
#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingVector {
    pub unit_id: String,
    pub year: i32,
    pub values: [f64; EMBEDDING_DIM],
}

pub fn embedding_column(i: usize) -> String {
    format!("A{i:02}")
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Level {
    County,
    Field,
}

impl Level {
    pub fn name(self) -> &'static str {
        match self {
            Level::County => "county",
            Level::Field => "field",
        }
    }
}

impl FromStr for Level {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "county" => Ok(Level::County),
            "field" => Ok(Level::Field),
            other => Err(format!("unknown level '{other}' (expected county|field)")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Ecoregion {
    East,
    West,
    Other,
}

impl Ecoregion {
    pub fn name(self) -> &'static str {
        match self {
            Ecoregion::East => "East",
            Ecoregion::West => "West",
            Ecoregion::Other => "Other",
        }
    }
}

impl FromStr for Ecoregion {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "east" => Ok(Ecoregion::East),
            "west" => Ok(Ecoregion::West),
            "other" => Ok(Ecoregion::Other),
            other => Err(format!("unknown ecoregion '{other}' (expected East|West|Other)")),
        }
    }
}

/// Eastern Temperate Forests states of the Corn Belt.
pub const EAST_STATES: [&str; 5] = ["IL", "IN", "MI", "OH", "WI"];
/// Great Plains states of the Corn Belt.
pub const WEST_STATES: [&str; 7] = ["IA", "KS", "MN", "MO", "ND", "NE", "SD"];

pub fn default_ecoregion(state: &str) -> Ecoregion {
    let state = state.trim().to_ascii_uppercase();
    if EAST_STATES.contains(&state.as_str()) {
        Ecoregion::East
    } else if WEST_STATES.contains(&state.as_str()) {
        Ecoregion::West
    } else {
        Ecoregion::Other
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct UnitMeta {
    pub unit_id: String,
    pub level: Level,
    pub state: String,
    /// For fields, the containing county; for counties, the county itself.
    pub county_id: String,
    pub ecoregion: Ecoregion,
    pub elevation_m: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum LabelTask {
    Yield,
    TillageRatio,
    TillageClass,
    CovercropClass,
}

impl LabelTask {
    pub const ALL: [LabelTask; 4] = [
        LabelTask::Yield,
        LabelTask::TillageRatio,
        LabelTask::TillageClass,
        LabelTask::CovercropClass,
    ];

    pub fn name(self) -> &'static str {
        match self {
            LabelTask::Yield => "yield",
            LabelTask::TillageRatio => "tillage_ratio",
            LabelTask::TillageClass => "tillage_class",
            LabelTask::CovercropClass => "covercrop_class",
        }
    }

    pub fn is_classification(self) -> bool {
        matches!(self, LabelTask::TillageClass | LabelTask::CovercropClass)
    }

    /// Checks that `value` has the type the task expects.
    pub fn check_value(self, value: f64) -> Result<(), String> {
        if !value.is_finite() {
            return Err("non-finite label".into());
        }
        match self {
            LabelTask::Yield => Ok(()),
            LabelTask::TillageRatio if (0.0..=1.0).contains(&value) => Ok(()),
            LabelTask::TillageRatio => Err(format!("tillage_ratio {value} outside [0, 1]")),
            _ if value == 0.0 || value == 1.0 => Ok(()),
            _ => Err(format!("class label {value} not in {{0, 1}}")),
        }
    }
}

impl fmt::Display for LabelTask {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for LabelTask {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let s = s.trim().to_ascii_lowercase();
        LabelTask::ALL
            .into_iter()
            .find(|t| t.name() == s)
            .ok_or_else(|| {
                format!("unknown task '{s}' (expected yield|tillage_ratio|tillage_class|covercrop_class)")
            })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LabelRecord {
    pub unit_id: String,
    pub year: i32,
    pub task: LabelTask,
    pub value: f64,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct RowCounts {
    pub units: usize,
    pub observations: usize,
    pub climate: usize,
    pub embeddings: usize,
    pub labels: usize,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct Manifest {
    /// `(file name, path)` for every table that was read.
    pub sources: Vec<(String, PathBuf)>,
    pub rows: RowCounts,
}

/// A year-month pair.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct YearMonth {
    pub year: i32,
    pub month: u32,
}

impl YearMonth {
    pub fn new(year: i32, month: u32) -> Self {
        assert!((1..=12).contains(&month), "month {month} out of range");
        Self { year, month }
    }

    pub fn of(date: NaiveDate) -> Self {
        Self::new(date.year(), date.month())
    }

    pub fn first_day(self) -> NaiveDate {
        NaiveDate::from_ymd_opt(self.year, self.month, 1).expect("valid month")
    }

    pub fn last_day(self) -> NaiveDate {
        self.next().first_day().pred_opt().expect("valid date")
    }

    pub fn days(self) -> u32 {
        (self.last_day() - self.first_day()).num_days() as u32 + 1
    }

    pub fn next(self) -> Self {
        if self.month == 12 {
            Self::new(self.year + 1, 1)
        } else {
            Self::new(self.year, self.month + 1)
        }
    }

    /// Three-letter lowercase month abbreviation used in feature names.
    pub fn abbrev(self) -> &'static str {
        MONTH_ABBREV[(self.month - 1) as usize]
    }
}

pub const MONTH_ABBREV: [&str; 12] = [
    "jan", "feb", "mar", "apr", "may", "jun", "jul", "aug", "sep", "oct", "nov", "dec",
];

/// Validated, immutable collection of the five input tables.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Dataset {
    pub units: BTreeMap<String, UnitMeta>,
    pub observations: BTreeMap<(String, SpectralBand), ObservationSeries>,
    pub climate: BTreeMap<String, BTreeMap<NaiveDate, ClimateDaily>>,
    pub embeddings: BTreeMap<(String, i32), EmbeddingVector>,
    /// Sorted by `(unit_id, year, task)`.
    pub labels: Vec<LabelRecord>,
    pub manifest: Manifest,
}

impl Dataset {
    pub fn series(&self, unit_id: &str, band: SpectralBand) -> Option<&ObservationSeries> {
        self.observations.get(&(unit_id.to_string(), band))
    }

    /// Daily climate rows of one unit falling in `month`, in date order.
    pub fn climate_month(&self, unit_id: &str, month: YearMonth) -> Vec<&ClimateDaily> {
        self.climate
            .get(unit_id)
            .map(|days| {
                days.range(month.first_day()..=month.last_day())
                    .map(|(_, d)| d)
                    .collect()
            })
            .unwrap_or_default()
    }

    pub fn embedding(&self, unit_id: &str, year: i32) -> Option<&EmbeddingVector> {
        self.embeddings.get(&(unit_id.to_string(), year))
    }

    pub fn labels_for(&self, task: LabelTask) -> impl Iterator<Item = &LabelRecord> {
        self.labels.iter().filter(move |l| l.task == task)
    }

    /// Canonical serialization: the five tables written back in sorted
    /// order. Two loads of the same bundle produce identical bytes.
    pub fn canonical_bytes(&self) -> Vec<u8> {
        io::canonical_bytes(self)
    }
}

/// Mean of `pixel_values` where `keep_mask` is 1.
pub fn masked_mean(pixel_values: &[f64], keep_mask: &[u8]) -> Result<f64, DataError> {
    if pixel_values.len() != keep_mask.len() {
        return Err(DataError::MaskLength {
            values: pixel_values.len(),
            mask: keep_mask.len(),
        });
    }
    let (sum, n) = pixel_values
        .iter()
        .zip(keep_mask)
        .filter(|(_, &m)| m != 0)
        .fold((0.0, 0usize), |(s, n), (&v, _)| (s + v, n + 1));
    if n == 0 {
        return Err(DataError::NoValidPixels);
    }
    Ok(sum / n as f64)
}
