//! Spectral indices computed from co-temporal raw-band reflectances.

use std::collections::BTreeMap;

use chrono::NaiveDate;
use thiserror::Error;

use crate::dataset::{DataError, ObservationSeries, SpectralBand};

#[derive(Debug, Error)]
pub enum IndexError {
    #[error("{0} is a raw band, not a derived index")]
    NotDerived(SpectralBand),
    #[error("{index}: missing input band {band}")]
    MissingInput {
        index: SpectralBand,
        band: SpectralBand,
    },
    #[error("{index}: non-finite input {band}={value}")]
    NonFinite {
        index: SpectralBand,
        band: SpectralBand,
        value: f64,
    },
    #[error("{index}: zero denominator for inputs {inputs}")]
    ZeroDenominator { index: SpectralBand, inputs: String },
    #[error("{index}: no co-temporal observations")]
    NoCotemporal { index: SpectralBand },
    #[error(transparent)]
    Series(#[from] DataError),
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct IndexOptions {
    /// Use the NIR/Green − 1 form of GCVI instead of plain NIR/Green.
    pub gcvi_minus_one: bool,
}

/// Raw bands each derived index reads.
pub fn required_bands(kind: SpectralBand) -> Result<&'static [SpectralBand], IndexError> {
    use SpectralBand::*;
    Ok(match kind {
        Ndvi => &[Nir, Red],
        Gcvi => &[Nir, Green],
        Ndti | Sti => &[Swir1, Swir2],
        Crc => &[Swir1, Blue],
        raw => return Err(IndexError::NotDerived(raw)),
    })
}

/// Evaluates one derived index from a map of raw-band reflectances.
pub fn compute_index(
    kind: SpectralBand,
    inputs: &BTreeMap<SpectralBand, f64>,
    options: IndexOptions,
) -> Result<f64, IndexError> {
    let bands = required_bands(kind)?;
    let mut vals = [0.0; 2];
    for (slot, &band) in vals.iter_mut().zip(bands) {
        let value = *inputs
            .get(&band)
            .ok_or(IndexError::MissingInput { index: kind, band })?;
        if !value.is_finite() {
            return Err(IndexError::NonFinite {
                index: kind,
                band,
                value,
            });
        }
        *slot = value;
    }
    let [p, q] = vals;
    let zero = || IndexError::ZeroDenominator {
        index: kind,
        inputs: format!("{}={p}, {}={q}", bands[0], bands[1]),
    };
    use SpectralBand::*;
    match kind {
        // normalized differences: (p - q) / (p + q)
        Ndvi | Ndti | Crc => {
            let den = p + q;
            if den == 0.0 {
                return Err(zero());
            }
            Ok((p - q) / den)
        }
        // simple ratios: p / q
        Gcvi | Sti => {
            if q == 0.0 {
                return Err(zero());
            }
            let ratio = p / q;
            Ok(if kind == Gcvi && options.gcvi_minus_one {
                ratio - 1.0
            } else {
                ratio
            })
        }
        _ => unreachable!("required_bands rejects raw bands"),
    }
}

/// Derives an index series from raw-band series of one unit. Only dates
/// present in every required raw series are kept.
pub fn derive_index_series(
    raw: &BTreeMap<SpectralBand, &ObservationSeries>,
    kind: SpectralBand,
    options: IndexOptions,
) -> Result<ObservationSeries, IndexError> {
    let bands = required_bands(kind)?;
    let mut inputs: Vec<&ObservationSeries> = Vec::with_capacity(bands.len());
    for &band in bands {
        inputs.push(
            raw.get(&band)
                .copied()
                .ok_or(IndexError::MissingInput { index: kind, band })?,
        );
    }
    let unit_id = inputs[0].unit_id.clone();

    // Dates of the first series that every other series also has.
    let lookups: Vec<BTreeMap<NaiveDate, f64>> = inputs
        .iter()
        .map(|s| s.samples().iter().copied().collect())
        .collect();
    let mut samples = Vec::new();
    let mut values = BTreeMap::new();
    'dates: for &(date, _) in inputs[0].samples() {
        values.clear();
        for (&band, lookup) in bands.iter().zip(&lookups) {
            match lookup.get(&date) {
                Some(&v) => {
                    values.insert(band, v);
                }
                None => continue 'dates,
            }
        }
        samples.push((date, compute_index(kind, &values, options)?));
    }
    if samples.is_empty() {
        return Err(IndexError::NoCotemporal { index: kind });
    }
    Ok(ObservationSeries::new(unit_id, kind, samples)?)
}
