use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};

use super::{covercrop_months, FeatureFamily, FeatureSet, TaskConfig, HARMONIC_FEATURES};
use crate::climate::{monthly_gdd, monthly_ppt, monthly_tmean};
use crate::dataset::{Dataset, ObservationSeries, SpectralBand, YearMonth, EMBEDDING_DIM};
use crate::harmonics::{fit_harmonic, monthly_extrema, phenology_metrics, ExtremaSource, FitError, SeasonWindow};
use crate::indices::{derive_index_series, IndexError};

/// Why a cell could not be computed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MissingCause {
    InsufficientObservations,
    DegenerateDesign,
    MissingMonth,
    NoCotemporal,
    IndexDomain,
    MissingClimate,
    LowClimateCoverage,
    MissingEmbedding,
    InvalidWindow,
}

impl MissingCause {
    pub fn name(self) -> &'static str {
        match self {
            MissingCause::InsufficientObservations => "insufficient_observations",
            MissingCause::DegenerateDesign => "degenerate_design",
            MissingCause::MissingMonth => "missing_month",
            MissingCause::NoCotemporal => "no_cotemporal",
            MissingCause::IndexDomain => "index_domain",
            MissingCause::MissingClimate => "missing_climate",
            MissingCause::LowClimateCoverage => "low_climate_coverage",
            MissingCause::MissingEmbedding => "missing_embedding",
            MissingCause::InvalidWindow => "invalid_window",
        }
    }
}

impl fmt::Display for MissingCause {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl From<&FitError> for MissingCause {
    fn from(e: &FitError) -> Self {
        match e {
            FitError::InsufficientObservations { .. } => MissingCause::InsufficientObservations,
            FitError::DegenerateDesign => MissingCause::DegenerateDesign,
            FitError::MissingMonth { .. } | FitError::MonthOutsideWindow { .. } => MissingCause::MissingMonth,
            FitError::InvalidWindow { .. } | FitError::InvalidSpan { .. } => MissingCause::InvalidWindow,
        }
    }
}

impl From<&IndexError> for MissingCause {
    fn from(e: &IndexError) -> Self {
        match e {
            IndexError::NoCotemporal { .. } | IndexError::MissingInput { .. } => MissingCause::NoCotemporal,
            _ => MissingCause::IndexDomain,
        }
    }
}

/// One feature row before the missing-data policy is applied.
#[derive(Debug, Clone, PartialEq)]
pub struct PartialRow {
    pub cells: Vec<Option<f64>>,
    /// Causes in the order they were first met.
    pub causes: Vec<MissingCause>,
}

impl PartialRow {
    fn with_capacity(n: usize) -> Self {
        Self {
            cells: Vec::with_capacity(n),
            causes: Vec::new(),
        }
    }

    fn push(&mut self, v: f64) {
        self.cells.push(Some(v));
    }

    fn push_missing(&mut self, n: usize, cause: MissingCause) {
        self.cells.extend(std::iter::repeat_n(None, n));
        if !self.causes.contains(&cause) {
            self.causes.push(cause);
        }
    }

    pub fn is_complete(&self) -> bool {
        self.cells.iter().all(Option::is_some)
    }
}

fn empty_series(unit_id: &str, band: SpectralBand) -> ObservationSeries {
    ObservationSeries::new(unit_id.to_string(), band, Vec::new()).expect("empty series is valid")
}

/// Raw and derived series of one unit restricted to `window`.
fn band_series(
    ds: &Dataset,
    unit_id: &str,
    window: &SeasonWindow,
    bands: &[SpectralBand],
    cfg: &TaskConfig,
) -> BTreeMap<SpectralBand, Result<ObservationSeries, MissingCause>> {
    let raw: BTreeMap<SpectralBand, ObservationSeries> = SpectralBand::RAW
        .iter()
        .map(|&b| {
            let s = ds
                .series(unit_id, b)
                .map(|s| s.restricted(window.start(), window.end()))
                .unwrap_or_else(|| empty_series(unit_id, b));
            (b, s)
        })
        .collect();
    let raw_refs: BTreeMap<SpectralBand, &ObservationSeries> = raw.iter().map(|(&b, s)| (b, s)).collect();
    bands
        .iter()
        .map(|&b| {
            let s = if b.is_raw() {
                Ok(raw[&b].clone())
            } else {
                derive_index_series(&raw_refs, b, cfg.index_options()).map_err(|e| MissingCause::from(&e))
            };
            (b, s)
        })
        .collect()
}

/// Harmonic coefficients and phenology metrics for 8 bands, then monthly
/// GDD and precipitation.
pub fn build_yield_features(ds: &Dataset, unit_id: &str, year: i32, cfg: &TaskConfig) -> PartialRow {
    let per_band = HARMONIC_FEATURES.len();
    let n_months = cfg.climate_months.len();
    let mut row = PartialRow::with_capacity(SpectralBand::VEGETATION.len() * per_band + 2 * n_months);
    match cfg.season.resolve(year) {
        Ok(window) => {
            let series = band_series(ds, unit_id, &window, &SpectralBand::VEGETATION, cfg);
            for band in SpectralBand::VEGETATION {
                let fit = series[&band]
                    .as_ref()
                    .map_err(|c| *c)
                    .and_then(|s| fit_harmonic(s, window).map_err(|e| MissingCause::from(&e)));
                match fit {
                    Ok(fit) => {
                        let p = phenology_metrics(&fit);
                        for v in fit.coefficients().to_array() {
                            row.push(v);
                        }
                        for v in [p.peak_value, p.b30, p.a30, p.b30_int, p.a30_int] {
                            row.push(v);
                        }
                    }
                    Err(cause) => row.push_missing(per_band, cause),
                }
            }
        }
        Err(_) => row.push_missing(SpectralBand::VEGETATION.len() * per_band, MissingCause::InvalidWindow),
    }

    let months: Vec<YearMonth> = cfg
        .climate_months
        .iter()
        .map(|&(off, m)| YearMonth::new(year + off, m))
        .collect();
    let mut ppt = Vec::with_capacity(n_months);
    for &m in &months {
        let days = ds.climate_month(unit_id, m);
        match climate_cause(&days, m, cfg) {
            Some(cause) => {
                row.push_missing(1, cause);
                ppt.push(Err(cause));
            }
            None => {
                let gdd = monthly_gdd(&days, cfg.gdd, cfg.gdd_options()).expect("validated month");
                row.push(gdd.value);
                ppt.push(Ok(monthly_ppt(&days).expect("validated month")));
            }
        }
    }
    for p in ppt {
        match p {
            Ok(v) => row.push(v),
            Err(cause) => row.push_missing(1, cause),
        }
    }
    row
}

/// A month counts as missing when it has no rows or its daily coverage
/// falls below the configured fraction.
fn climate_cause(days: &[&crate::dataset::ClimateDaily], month: YearMonth, cfg: &TaskConfig) -> Option<MissingCause> {
    if days.is_empty() {
        return Some(MissingCause::MissingClimate);
    }
    let coverage = days.len() as f64 / f64::from(month.days());
    (coverage < cfg.min_climate_coverage).then_some(MissingCause::LowClimateCoverage)
}

/// Observed monthly min/max of all 11 bands over April–June, plus
/// elevation.
pub fn build_tillage_features(ds: &Dataset, unit_id: &str, year: i32, cfg: &TaskConfig) -> PartialRow {
    let months = TaskConfig::tillage_months(year);
    let mut row = PartialRow::with_capacity(SpectralBand::ALL.len() * months.len() * 2 + 1);
    let window = SeasonWindow::new(months[0].first_day(), months[2].last_day()).expect("three-month window");
    let series = band_series(ds, unit_id, &window, &SpectralBand::ALL, cfg);
    for band in SpectralBand::ALL {
        for &m in &months {
            let extrema = series[&band]
                .as_ref()
                .map_err(|c| *c)
                .and_then(|s| monthly_extrema(ExtremaSource::Raw(s), m).map_err(|e| MissingCause::from(&e)));
            match extrema {
                Ok((lo, hi)) => {
                    row.push(lo);
                    row.push(hi);
                }
                Err(cause) => row.push_missing(2, cause),
            }
        }
    }
    row.push(ds.units[unit_id].elevation_m);
    row
}

/// Monthly min/max of fitted curves for 8 bands over October–May, then
/// monthly mean temperature and precipitation.
pub fn build_covercrop_features(ds: &Dataset, unit_id: &str, year: i32, cfg: &TaskConfig) -> PartialRow {
    let months = covercrop_months(year);
    let per_band = 2 * months.len();
    let mut row = PartialRow::with_capacity(SpectralBand::VEGETATION.len() * per_band + 2 * months.len());
    match cfg.season.resolve(year) {
        Ok(window) => {
            let series = band_series(ds, unit_id, &window, &SpectralBand::VEGETATION, cfg);
            for band in SpectralBand::VEGETATION {
                let fit = series[&band]
                    .as_ref()
                    .map_err(|c| *c)
                    .and_then(|s| fit_harmonic(s, window).map_err(|e| MissingCause::from(&e)));
                match fit {
                    Ok(fit) => {
                        for &m in &months {
                            match monthly_extrema(ExtremaSource::Fitted(&fit), m) {
                                Ok((lo, hi)) => {
                                    row.push(lo);
                                    row.push(hi);
                                }
                                Err(e) => row.push_missing(2, MissingCause::from(&e)),
                            }
                        }
                    }
                    Err(cause) => row.push_missing(per_band, cause),
                }
            }
        }
        Err(_) => row.push_missing(SpectralBand::VEGETATION.len() * per_band, MissingCause::InvalidWindow),
    }

    let mut ppt = Vec::with_capacity(months.len());
    for &m in &months {
        let days = ds.climate_month(unit_id, m);
        match climate_cause(&days, m, cfg) {
            Some(cause) => {
                row.push_missing(1, cause);
                ppt.push(Err(cause));
            }
            None => {
                row.push(monthly_tmean(&days).expect("validated month"));
                ppt.push(Ok(monthly_ppt(&days).expect("validated month")));
            }
        }
    }
    for p in ppt {
        match p {
            Ok(v) => row.push(v),
            Err(cause) => row.push_missing(1, cause),
        }
    }
    row
}

/// Embedding of the label year; cover crop prepends the prior year.
pub fn build_aef_features(ds: &Dataset, unit_id: &str, year: i32, cfg: &TaskConfig) -> PartialRow {
    let years: &[i32] = if cfg.family() == FeatureFamily::CoverCrop {
        &[year - 1, year]
    } else {
        &[year]
    };
    let mut row = PartialRow::with_capacity(years.len() * EMBEDDING_DIM);
    for &y in years {
        match ds.embedding(unit_id, y) {
            Some(e) => e.values.iter().for_each(|&v| row.push(v)),
            None => row.push_missing(EMBEDDING_DIM, MissingCause::MissingEmbedding),
        }
    }
    row
}

pub fn build_row(ds: &Dataset, unit_id: &str, year: i32, cfg: &TaskConfig) -> PartialRow {
    match (cfg.feature_set, cfg.family()) {
        (FeatureSet::Aef, _) => build_aef_features(ds, unit_id, year, cfg),
        (FeatureSet::Rs, FeatureFamily::Yield) => build_yield_features(ds, unit_id, year, cfg),
        (FeatureSet::Rs, FeatureFamily::Tillage) => build_tillage_features(ds, unit_id, year, cfg),
        (FeatureSet::Rs, FeatureFamily::CoverCrop) => build_covercrop_features(ds, unit_id, year, cfg),
    }
}
