//! Per-task predictor tables.
//!
//! | task family | RS columns                                   | AEF columns |
//! |-------------|----------------------------------------------|-------------|
//! | yield       | 8 bands × 10 harmonic/phenology + GDD & PPT  | 64          |
//! | tillage     | 11 bands × Apr–Jun × {min,max} + elevation   | 64          |
//! | cover crop  | 8 bands × Oct–May × {min,max} + Tmean & PPT  | 128         |
//!
//! Yield with corn or soybean uses May–Sep climate (90 RS columns); winter
//! wheat uses Jan–Jun (92).

mod rows;
mod table;

use std::fmt;
use std::str::FromStr;

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::climate::{GddOptions, GddThresholds};
use crate::dataset::{embedding_column, LabelTask, SpectralBand, YearMonth, EMBEDDING_DIM};
use crate::harmonics::{FitError, SeasonWindow};
use crate::indices::IndexOptions;

pub use rows::{
    build_aef_features, build_covercrop_features, build_row, build_tillage_features, build_yield_features,
    MissingCause, PartialRow,
};
pub use table::{assemble_table, AssembledTable, BuildLog, FeatureTable, Provenance, RowKey};

#[derive(Debug, Error)]
pub enum FeatureError {
    #[error("no rows survive the missing-data policy ({labeled} labeled unit-years)")]
    NoRows { labeled: usize },
    #[error("cannot impute column '{column}': no complete rows")]
    NoCompleteRows { column: String },
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("season window: {0}")]
    Window(#[from] FitError),
    #[error("schema mismatch: {0}")]
    Schema(String),
    #[error("feature table row {row}: {message}")]
    Table { row: usize, message: String },
    #[error("writing feature table: {0}")]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Crop {
    Corn,
    Soybean,
    WinterWheat,
}

impl Crop {
    pub fn name(self) -> &'static str {
        match self {
            Crop::Corn => "corn",
            Crop::Soybean => "soybean",
            Crop::WinterWheat => "winter_wheat",
        }
    }

    pub fn default_gdd(self) -> GddThresholds {
        match self {
            Crop::Corn => GddThresholds::CORN_DEFAULT,
            Crop::Soybean => GddThresholds::SOYBEAN,
            Crop::WinterWheat => GddThresholds::WINTER_WHEAT,
        }
    }

    /// Growing-season climate months, as `(year offset, month)` relative to
    /// the label year.
    pub fn climate_months(self) -> Vec<(i32, u32)> {
        match self {
            Crop::Corn | Crop::Soybean => (5..=9).map(|m| (0, m)).collect(),
            Crop::WinterWheat => (1..=6).map(|m| (0, m)).collect(),
        }
    }
}

impl FromStr for Crop {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "corn" => Ok(Crop::Corn),
            "soybean" | "soy" => Ok(Crop::Soybean),
            "winter_wheat" | "wheat" => Ok(Crop::WinterWheat),
            other => Err(format!("unknown crop '{other}' (expected corn|soybean|winter_wheat)")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum FeatureSet {
    /// Annual embedding vectors.
    Aef,
    /// Remote sensing, climate and terrain predictors.
    Rs,
}

impl FeatureSet {
    pub fn name(self) -> &'static str {
        match self {
            FeatureSet::Aef => "AEF",
            FeatureSet::Rs => "RS",
        }
    }
}

impl FromStr for FeatureSet {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_uppercase().as_str() {
            "AEF" => Ok(FeatureSet::Aef),
            "RS" => Ok(FeatureSet::Rs),
            other => Err(format!("unknown feature set '{other}' (expected AEF|RS)")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum MissingPolicy {
    Drop,
    ImputeMean,
}

impl FromStr for MissingPolicy {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "drop" => Ok(MissingPolicy::Drop),
            "impute_mean" => Ok(MissingPolicy::ImputeMean),
            other => Err(format!("unknown missing policy '{other}' (expected drop|impute_mean)")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum FeatureFamily {
    Yield,
    Tillage,
    CoverCrop,
}

impl From<LabelTask> for FeatureFamily {
    fn from(task: LabelTask) -> Self {
        match task {
            LabelTask::Yield => FeatureFamily::Yield,
            LabelTask::TillageRatio | LabelTask::TillageClass => FeatureFamily::Tillage,
            LabelTask::CovercropClass => FeatureFamily::CoverCrop,
        }
    }
}

/// A month/day anchored to the label year (`year_offset = -1` means the
/// year before).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SeasonAnchor {
    pub year_offset: i32,
    pub month: u32,
    pub day: u32,
}

impl SeasonAnchor {
    pub const fn new(year_offset: i32, month: u32, day: u32) -> Self {
        Self { year_offset, month, day }
    }

    pub fn resolve(&self, year: i32) -> Option<NaiveDate> {
        NaiveDate::from_ymd_opt(year + self.year_offset, self.month, self.day)
    }
}

impl fmt::Display for SeasonAnchor {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.year_offset == 0 {
            write!(f, "y:{:02}-{:02}", self.month, self.day)
        } else {
            write!(f, "y{:+}:{:02}-{:02}", self.year_offset, self.month, self.day)
        }
    }
}

impl FromStr for SeasonAnchor {
    type Err = String;

    /// Parses `y:MM-DD`, `y-1:MM-DD` or a bare `MM-DD`.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let s = s.trim();
        let (offset, md) = match s.split_once(':') {
            Some((y, md)) => {
                let off = match y.trim() {
                    "y" => 0,
                    other => other
                        .strip_prefix('y')
                        .and_then(|o| o.parse::<i32>().ok())
                        .ok_or_else(|| format!("bad year anchor '{y}' in '{s}'"))?,
                };
                (off, md)
            }
            None => (0, s),
        };
        let (m, d) = md
            .split_once('-')
            .ok_or_else(|| format!("expected MM-DD in '{s}'"))?;
        let month: u32 = m.parse().map_err(|_| format!("bad month in '{s}'"))?;
        let day: u32 = d.parse().map_err(|_| format!("bad day in '{s}'"))?;
        // validate against a leap year so Feb 29 is representable
        NaiveDate::from_ymd_opt(2000, month, day).ok_or_else(|| format!("invalid month/day in '{s}'"))?;
        Ok(Self::new(offset, month, day))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SeasonSpec {
    pub start: SeasonAnchor,
    pub end: SeasonAnchor,
}

impl SeasonSpec {
    pub const CORN_SOY: SeasonSpec = SeasonSpec {
        start: SeasonAnchor::new(0, 4, 1),
        end: SeasonAnchor::new(0, 10, 31),
    };
    pub const WINTER_WHEAT: SeasonSpec = SeasonSpec {
        start: SeasonAnchor::new(-1, 9, 1),
        end: SeasonAnchor::new(0, 7, 15),
    };
    pub const COVER_CROP: SeasonSpec = SeasonSpec {
        start: SeasonAnchor::new(-1, 10, 1),
        end: SeasonAnchor::new(0, 5, 31),
    };
    /// Spring months used for tillage extrema.
    pub const TILLAGE: SeasonSpec = SeasonSpec {
        start: SeasonAnchor::new(0, 4, 1),
        end: SeasonAnchor::new(0, 6, 30),
    };

    pub fn default_for(task: LabelTask, crop: Crop) -> SeasonSpec {
        match FeatureFamily::from(task) {
            FeatureFamily::Yield if crop == Crop::WinterWheat => Self::WINTER_WHEAT,
            FeatureFamily::Yield => Self::CORN_SOY,
            FeatureFamily::Tillage => Self::TILLAGE,
            FeatureFamily::CoverCrop => Self::COVER_CROP,
        }
    }

    pub fn resolve(&self, year: i32) -> Result<SeasonWindow, FitError> {
        let start = self.start.resolve(year);
        let end = self.end.resolve(year);
        match (start, end) {
            (Some(s), Some(e)) => SeasonWindow::new(s, e),
            _ => {
                let fallback = NaiveDate::from_ymd_opt(year, 1, 1).expect("valid year");
                Err(FitError::InvalidWindow {
                    start: start.unwrap_or(fallback),
                    end: end.unwrap_or(fallback),
                    reason: "anchor does not exist in this year",
                })
            }
        }
    }

    /// Calendar months touched by the window for label year `year`.
    pub fn months(&self, year: i32) -> Result<Vec<YearMonth>, FitError> {
        let w = self.resolve(year)?;
        let mut out = Vec::new();
        let mut m = YearMonth::of(w.start());
        let last = YearMonth::of(w.end());
        while m <= last {
            out.push(m);
            m = m.next();
        }
        Ok(out)
    }
}

/// Everything that determines the content of a feature table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TaskConfig {
    pub task: LabelTask,
    /// Crop of the yield labels; ignored by other tasks.
    pub crop: Crop,
    pub feature_set: FeatureSet,
    pub season: SeasonSpec,
    /// `(year offset, month)` of climate predictors for yield.
    pub climate_months: Vec<(i32, u32)>,
    pub gdd: GddThresholds,
    pub missing_policy: MissingPolicy,
    pub gcvi_minus_one: bool,
    pub gdd_per_day: bool,
    /// Months whose daily climate coverage falls below this are missing.
    pub min_climate_coverage: f64,
}

pub const DEFAULT_MIN_CLIMATE_COVERAGE: f64 = 0.8;

impl TaskConfig {
    pub fn new(task: LabelTask, crop: Crop, feature_set: FeatureSet) -> Self {
        Self {
            task,
            crop,
            feature_set,
            season: SeasonSpec::default_for(task, crop),
            climate_months: crop.climate_months(),
            gdd: crop.default_gdd(),
            missing_policy: MissingPolicy::Drop,
            gcvi_minus_one: false,
            gdd_per_day: false,
            min_climate_coverage: DEFAULT_MIN_CLIMATE_COVERAGE,
        }
    }

    pub fn family(&self) -> FeatureFamily {
        self.task.into()
    }

    pub fn index_options(&self) -> IndexOptions {
        IndexOptions {
            gcvi_minus_one: self.gcvi_minus_one,
        }
    }

    pub fn gdd_options(&self) -> GddOptions {
        GddOptions {
            gdd_per_day: self.gdd_per_day,
        }
    }

    pub fn validate(&self) -> Result<(), FeatureError> {
        if self.family() == FeatureFamily::Yield && self.climate_months != self.crop.climate_months() {
            return Err(FeatureError::Config(format!(
                "climate months {:?} inconsistent with crop {}",
                self.climate_months,
                self.crop.name()
            )));
        }
        if !(0.0..=1.0).contains(&self.min_climate_coverage) {
            return Err(FeatureError::Config("min_climate_coverage must lie in [0, 1]".into()));
        }
        // the window must resolve for an ordinary year
        self.season.resolve(2001)?;
        Ok(())
    }

    /// Notes on defaults that are not backed by a published value.
    pub fn flags(&self) -> Vec<String> {
        let mut flags = Vec::new();
        if self.feature_set == FeatureSet::Rs
            && self.family() == FeatureFamily::Yield
            && self.crop == Crop::Corn
            && self.gdd == GddThresholds::CORN_DEFAULT
        {
            flags.push("corn_gdd_thresholds_default(base=10C,cap=30C)".to_string());
        }
        if self.feature_set == FeatureSet::Rs && self.family() == FeatureFamily::Yield {
            flags.push(if self.gdd_per_day {
                "gdd_units=degree_days".to_string()
            } else {
                "gdd_units=degree_hours".to_string()
            });
        }
        if self.gcvi_minus_one {
            flags.push("gcvi_form=nir_over_green_minus_one".to_string());
        }
        flags
    }

    /// Short content hash of the configuration.
    pub fn hash(&self) -> String {
        let json = serde_json::to_string(self).expect("config serializes");
        let digest = Sha256::digest(json.as_bytes());
        hex::encode(&digest[..8])
    }

    /// Feature names in column order.
    pub fn feature_names(&self) -> Vec<String> {
        feature_names(self)
    }

    pub fn tillage_months(year: i32) -> [YearMonth; 3] {
        [YearMonth::new(year, 4), YearMonth::new(year, 5), YearMonth::new(year, 6)]
    }
}

pub const HARMONIC_FEATURES: [&str; 10] = [
    "c", "a1", "b1", "a2", "b2", "peak", "b30", "a30", "b30int", "a30int",
];

fn month_abbrev(month: u32) -> &'static str {
    crate::dataset::MONTH_ABBREV[(month - 1) as usize]
}

/// Months of the cover-crop season in order (Oct of the prior year to May).
pub fn covercrop_months(year: i32) -> Vec<YearMonth> {
    SeasonSpec::COVER_CROP.months(year).expect("fixed window resolves")
}

pub fn feature_names(cfg: &TaskConfig) -> Vec<String> {
    let mut names = Vec::new();
    match (cfg.feature_set, cfg.family()) {
        (FeatureSet::Aef, FeatureFamily::CoverCrop) => {
            names.extend((0..EMBEDDING_DIM).map(|i| format!("py_{}", embedding_column(i))));
            names.extend((0..EMBEDDING_DIM).map(embedding_column));
        }
        (FeatureSet::Aef, _) => names.extend((0..EMBEDDING_DIM).map(embedding_column)),
        (FeatureSet::Rs, FeatureFamily::Yield) => {
            for band in SpectralBand::VEGETATION {
                names.extend(HARMONIC_FEATURES.iter().map(|f| format!("{band}_{f}")));
            }
            for &(_, m) in &cfg.climate_months {
                names.push(format!("gdd_{}", month_abbrev(m)));
            }
            for &(_, m) in &cfg.climate_months {
                names.push(format!("ppt_{}", month_abbrev(m)));
            }
        }
        (FeatureSet::Rs, FeatureFamily::Tillage) => {
            for band in SpectralBand::ALL {
                for m in TaskConfig::tillage_months(2001) {
                    names.push(format!("{band}_{}_min", m.abbrev()));
                    names.push(format!("{band}_{}_max", m.abbrev()));
                }
            }
            names.push("elev".to_string());
        }
        (FeatureSet::Rs, FeatureFamily::CoverCrop) => {
            let months = covercrop_months(2001);
            for band in SpectralBand::VEGETATION {
                for m in &months {
                    names.push(format!("{band}_{}_min", m.abbrev()));
                    names.push(format!("{band}_{}_max", m.abbrev()));
                }
            }
            names.extend(months.iter().map(|m| format!("tmean_{}", m.abbrev())));
            names.extend(months.iter().map(|m| format!("ppt_{}", m.abbrev())));
        }
    }
    names
}

/// Expected column count for a task/feature-set pair.
pub fn expected_width(cfg: &TaskConfig) -> usize {
    match (cfg.feature_set, cfg.family()) {
        (FeatureSet::Aef, FeatureFamily::CoverCrop) => 2 * EMBEDDING_DIM,
        (FeatureSet::Aef, _) => EMBEDDING_DIM,
        (FeatureSet::Rs, FeatureFamily::Yield) => 80 + 2 * cfg.climate_months.len(),
        (FeatureSet::Rs, FeatureFamily::Tillage) => 67,
        (FeatureSet::Rs, FeatureFamily::CoverCrop) => 144,
    }
}
