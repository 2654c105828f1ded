use std::collections::btree_map::Entry;
use std::collections::BTreeMap;
use std::fs::File;
use std::io::Write;
use std::path::Path;

use chrono::NaiveDate;
use csv::StringRecord;

use super::{
    default_ecoregion, embedding_column, ClimateDaily, DataError, Dataset, Ecoregion,
    EmbeddingVector, LabelRecord, LabelTask, Level, Manifest, Observation, ObservationSeries,
    RowCounts, SpectralBand, UnitMeta, EMBEDDING_DIM, MAX_RAW_REFLECTANCE,
};

pub const BUNDLE_FILES: [&str; 5] = [
    "units.csv",
    "observations.csv",
    "climate.csv",
    "embeddings.csv",
    "labels.csv",
];

const UNITS_HEADER: [&str; 6] = ["unit_id", "level", "state", "county_id", "ecoregion", "elevation_m"];
const OBS_HEADER: [&str; 4] = ["unit_id", "band", "date", "value"];
const CLIMATE_HEADER: [&str; 5] = ["unit_id", "date", "tmin_c", "tmax_c", "ppt_mm"];
const LABELS_HEADER: [&str; 4] = ["unit_id", "year", "task", "value"];

fn embeddings_header() -> Vec<String> {
    let mut h = vec!["unit_id".to_string(), "year".to_string()];
    h.extend((0..EMBEDDING_DIM).map(embedding_column));
    h
}

#[derive(Debug, Clone, Copy, Default)]
pub struct LoadOptions {
    /// Accept a `units.csv` ecoregion that disagrees with the default
    /// state map. Without it such rows are rejected.
    pub allow_ecoregion_override: bool,
}

/// One parsed CSV record with enough context for precise error messages.
struct Row<'a> {
    file: &'a str,
    line: u64,
    header: &'a [String],
    record: &'a StringRecord,
}

impl Row<'_> {
    fn field(&self, idx: usize) -> &str {
        self.record.get(idx).unwrap_or("").trim()
    }

    fn malformed(&self, idx: usize, message: impl Into<String>) -> DataError {
        DataError::Malformed {
            file: self.file.to_string(),
            line: self.line,
            column: self.header[idx].clone(),
            message: message.into(),
        }
    }

    fn invariant(&self, message: impl Into<String>) -> DataError {
        DataError::Invariant {
            file: self.file.to_string(),
            line: self.line,
            message: message.into(),
        }
    }

    fn text(&self, idx: usize) -> Result<String, DataError> {
        let s = self.field(idx);
        if s.is_empty() {
            return Err(self.malformed(idx, "empty value"));
        }
        Ok(s.to_string())
    }

    fn parse<T: std::str::FromStr>(&self, idx: usize) -> Result<T, DataError>
    where
        T::Err: std::fmt::Display,
    {
        let s = self.field(idx);
        s.parse::<T>()
            .map_err(|e| self.malformed(idx, format!("cannot parse '{s}': {e}")))
    }

    fn real(&self, idx: usize) -> Result<f64, DataError> {
        let v: f64 = self.parse(idx)?;
        if !v.is_finite() {
            return Err(self.malformed(idx, "non-finite value"));
        }
        Ok(v)
    }

    fn date(&self, idx: usize) -> Result<NaiveDate, DataError> {
        let s = self.field(idx);
        NaiveDate::parse_from_str(s, "%Y-%m-%d")
            .map_err(|e| self.malformed(idx, format!("invalid ISO date '{s}': {e}")))
    }
}

fn read_table<F>(dir: &Path, file: &str, header: &[String], mut on_row: F) -> Result<usize, DataError>
where
    F: FnMut(&Row<'_>) -> Result<(), DataError>,
{
    let path = dir.join(file);
    if !path.is_file() {
        return Err(DataError::MissingFile {
            file: file.to_string(),
            path,
        });
    }
    let handle = File::open(&path).map_err(|source| DataError::Io {
        file: file.to_string(),
        source,
    })?;
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .from_reader(handle);
    let csv_err = |e: csv::Error| DataError::Invariant {
        file: file.to_string(),
        line: e.position().map(|p| p.line()).unwrap_or(0),
        message: e.to_string(),
    };

    let mut records = reader.records();
    let first = match records.next() {
        Some(r) => r.map_err(csv_err)?,
        None => {
            return Err(DataError::Invariant {
                file: file.to_string(),
                line: 1,
                message: "missing header row".into(),
            })
        }
    };
    let found: Vec<&str> = first.iter().map(str::trim).collect();
    if found.len() != header.len() || found.iter().zip(header).any(|(a, b)| a != b) {
        let col = found
            .iter()
            .zip(header)
            .position(|(a, b)| a != b)
            .unwrap_or(found.len().min(header.len()));
        return Err(DataError::Malformed {
            file: file.to_string(),
            line: 1,
            column: header.get(col).cloned().unwrap_or_else(|| format!("#{}", col + 1)),
            message: format!("header mismatch: expected '{}'", header.join(",")),
        });
    }

    let mut n = 0;
    for record in records {
        let record = record.map_err(csv_err)?;
        let line = record.position().map(|p| p.line()).unwrap_or(0);
        if record.len() == 1 && record.get(0).is_some_and(|s| s.trim().is_empty()) {
            continue;
        }
        if record.len() != header.len() {
            return Err(DataError::Invariant {
                file: file.to_string(),
                line,
                message: format!("expected {} fields, found {}", header.len(), record.len()),
            });
        }
        on_row(&Row {
            file,
            line,
            header,
            record: &record,
        })?;
        n += 1;
    }
    Ok(n)
}

fn owned(h: &[&str]) -> Vec<String> {
    h.iter().map(|s| s.to_string()).collect()
}

pub fn load_dataset(bundle_dir: &Path) -> Result<Dataset, DataError> {
    load_dataset_with(bundle_dir, LoadOptions::default())
}

/// Date, value and source line of one observation.
type DatedSample = (NaiveDate, f64, u64);

pub fn load_dataset_with(bundle_dir: &Path, options: LoadOptions) -> Result<Dataset, DataError> {
    let mut ds = Dataset::default();
    let n_units = read_table(bundle_dir, "units.csv", &owned(&UNITS_HEADER), |row| {
        let unit_id = row.text(0)?;
        let level: Level = row.parse(1)?;
        let state = row.text(2)?.to_ascii_uppercase();
        let county_id = match row.field(3) {
            "" if level == Level::County => unit_id.clone(),
            "" => return Err(row.malformed(3, "field units need a county_id")),
            s => s.to_string(),
        };
        let expected = default_ecoregion(&state);
        let ecoregion = match row.field(4) {
            "" => expected,
            _ => {
                let e: Ecoregion = row.parse(4)?;
                if e != expected && !options.allow_ecoregion_override {
                    return Err(row.invariant(format!(
                        "ecoregion {} disagrees with default {} for state {state}",
                        e.name(),
                        expected.name()
                    )));
                }
                e
            }
        };
        let elevation_m = row.real(5)?;
        let meta = UnitMeta {
            unit_id: unit_id.clone(),
            level,
            state,
            county_id,
            ecoregion,
            elevation_m,
        };
        match ds.units.entry(unit_id) {
            Entry::Occupied(e) => Err(row.invariant(format!("duplicate unit_id '{}'", e.key()))),
            Entry::Vacant(e) => {
                e.insert(meta);
                Ok(())
            }
        }
    })?;

    let mut obs: BTreeMap<(String, SpectralBand), Vec<DatedSample>> = BTreeMap::new();
    let n_observations = read_table(bundle_dir, "observations.csv", &owned(&OBS_HEADER), |row| {
        let unit_id = row.text(0)?;
        let band: SpectralBand = row.parse(1)?;
        let date = row.date(2)?;
        let value = row.real(3)?;
        if band.is_raw() && !(0.0..=MAX_RAW_REFLECTANCE).contains(&value) {
            return Err(row.malformed(3, format!("reflectance {value} outside [0, 1.5]")));
        }
        obs.entry((unit_id, band)).or_default().push((date, value, row.line));
        Ok(())
    })?;
    for ((unit_id, band), mut samples) in obs {
        samples.sort_by_key(|s| (s.0, s.2));
        if let Some(w) = samples.windows(2).find(|w| w[0].0 == w[1].0) {
            return Err(DataError::Invariant {
                file: "observations.csv".into(),
                line: w[1].2,
                message: format!("duplicate observation ({unit_id}, {band}, {})", w[1].0),
            });
        }
        let series = ObservationSeries::new(
            unit_id.clone(),
            band,
            samples.into_iter().map(|(d, v, _)| (d, v)).collect(),
        )?;
        ds.observations.insert((unit_id, band), series);
    }

    let n_climate = read_table(bundle_dir, "climate.csv", &owned(&CLIMATE_HEADER), |row| {
        let day = ClimateDaily {
            unit_id: row.text(0)?,
            date: row.date(1)?,
            tmin_c: row.real(2)?,
            tmax_c: row.real(3)?,
            ppt_mm: row.real(4)?,
        };
        day.validate().map_err(|m| row.invariant(m))?;
        let per_unit = ds.climate.entry(day.unit_id.clone()).or_default();
        match per_unit.entry(day.date) {
            Entry::Occupied(_) => Err(row.invariant(format!(
                "duplicate climate day ({}, {})",
                day.unit_id, day.date
            ))),
            Entry::Vacant(e) => {
                e.insert(day);
                Ok(())
            }
        }
    })?;

    let n_embeddings = read_table(bundle_dir, "embeddings.csv", &embeddings_header(), |row| {
        let unit_id = row.text(0)?;
        let year: i32 = row.parse(1)?;
        let mut values = [0.0; EMBEDDING_DIM];
        for (i, v) in values.iter_mut().enumerate() {
            *v = row.real(i + 2)?;
        }
        match ds.embeddings.entry((unit_id.clone(), year)) {
            Entry::Occupied(_) => Err(row.invariant(format!("duplicate embedding ({unit_id}, {year})"))),
            Entry::Vacant(e) => {
                e.insert(EmbeddingVector {
                    unit_id,
                    year,
                    values,
                });
                Ok(())
            }
        }
    })?;

    let mut labels: BTreeMap<(String, i32, LabelTask), LabelRecord> = BTreeMap::new();
    let n_labels = read_table(bundle_dir, "labels.csv", &owned(&LABELS_HEADER), |row| {
        let unit_id = row.text(0)?;
        let year: i32 = row.parse(1)?;
        let task: LabelTask = row.parse(2)?;
        let value = row.real(3)?;
        if !ds.units.contains_key(&unit_id) {
            return Err(row.invariant(format!("label references unknown unit '{unit_id}'")));
        }
        task.check_value(value).map_err(|m| row.malformed(3, m))?;
        match labels.entry((unit_id.clone(), year, task)) {
            Entry::Occupied(_) => Err(row.invariant(format!("duplicate label ({unit_id}, {year}, {task})"))),
            Entry::Vacant(e) => {
                e.insert(LabelRecord {
                    unit_id,
                    year,
                    task,
                    value,
                });
                Ok(())
            }
        }
    })?;
    ds.labels = labels.into_values().collect();

    ds.manifest = Manifest {
        sources: BUNDLE_FILES
            .iter()
            .map(|f| (f.to_string(), bundle_dir.join(f)))
            .collect(),
        rows: RowCounts {
            units: n_units,
            observations: n_observations,
            climate: n_climate,
            embeddings: n_embeddings,
            labels: n_labels,
        },
    };
    Ok(ds)
}

fn csv_writer<W: Write>(w: W) -> csv::Writer<W> {
    csv::WriterBuilder::new().has_headers(false).from_writer(w)
}

fn write_units<W: Write>(w: W, units: &[&UnitMeta]) -> csv::Result<()> {
    let mut wr = csv_writer(w);
    wr.write_record(UNITS_HEADER)?;
    for u in units {
        wr.write_record([
            u.unit_id.as_str(),
            u.level.name(),
            u.state.as_str(),
            u.county_id.as_str(),
            u.ecoregion.name(),
            &u.elevation_m.to_string(),
        ])?;
    }
    wr.flush()?;
    Ok(())
}

fn write_observations<'a, W: Write>(
    w: W,
    obs: impl Iterator<Item = (&'a str, SpectralBand, NaiveDate, f64)>,
) -> csv::Result<()> {
    let mut wr = csv_writer(w);
    wr.write_record(OBS_HEADER)?;
    for (unit, band, date, value) in obs {
        wr.write_record([unit, band.name(), &date.to_string(), &value.to_string()])?;
    }
    wr.flush()?;
    Ok(())
}

fn write_climate<W: Write>(w: W, days: &[&ClimateDaily]) -> csv::Result<()> {
    let mut wr = csv_writer(w);
    wr.write_record(CLIMATE_HEADER)?;
    for d in days {
        wr.write_record([
            d.unit_id.as_str(),
            &d.date.to_string(),
            &d.tmin_c.to_string(),
            &d.tmax_c.to_string(),
            &d.ppt_mm.to_string(),
        ])?;
    }
    wr.flush()?;
    Ok(())
}

fn write_embeddings<W: Write>(w: W, emb: &[&EmbeddingVector]) -> csv::Result<()> {
    let mut wr = csv_writer(w);
    wr.write_record(embeddings_header())?;
    for e in emb {
        let mut rec = vec![e.unit_id.clone(), e.year.to_string()];
        rec.extend(e.values.iter().map(f64::to_string));
        wr.write_record(&rec)?;
    }
    wr.flush()?;
    Ok(())
}

fn write_labels<W: Write>(w: W, labels: &[&LabelRecord]) -> csv::Result<()> {
    let mut wr = csv_writer(w);
    wr.write_record(LABELS_HEADER)?;
    for l in labels {
        wr.write_record([
            l.unit_id.as_str(),
            &l.year.to_string(),
            l.task.name(),
            &l.value.to_string(),
        ])?;
    }
    wr.flush()?;
    Ok(())
}

fn io_err(file: &str) -> impl Fn(csv::Error) -> DataError + '_ {
    move |e| DataError::Io {
        file: file.to_string(),
        source: std::io::Error::other(e.to_string()),
    }
}

/// Writes the five bundle tables into `dir` (created if absent). Rows are
/// written in the order given.
pub fn write_bundle(
    dir: &Path,
    units: &[UnitMeta],
    observations: &[Observation],
    climate: &[ClimateDaily],
    embeddings: &[EmbeddingVector],
    labels: &[LabelRecord],
) -> Result<(), DataError> {
    std::fs::create_dir_all(dir).map_err(|source| DataError::Io {
        file: dir.display().to_string(),
        source,
    })?;
    let create = |file: &str| {
        File::create(dir.join(file))
            .map(std::io::BufWriter::new)
            .map_err(|source| DataError::Io {
                file: file.to_string(),
                source,
            })
    };
    write_units(create("units.csv")?, &units.iter().collect::<Vec<_>>()).map_err(io_err("units.csv"))?;
    write_observations(
        create("observations.csv")?,
        observations
            .iter()
            .map(|o| (o.unit_id.as_str(), o.band, o.date, o.value)),
    )
    .map_err(io_err("observations.csv"))?;
    write_climate(create("climate.csv")?, &climate.iter().collect::<Vec<_>>()).map_err(io_err("climate.csv"))?;
    write_embeddings(create("embeddings.csv")?, &embeddings.iter().collect::<Vec<_>>())
        .map_err(io_err("embeddings.csv"))?;
    write_labels(create("labels.csv")?, &labels.iter().collect::<Vec<_>>()).map_err(io_err("labels.csv"))?;
    Ok(())
}

pub(super) fn canonical_bytes(ds: &Dataset) -> Vec<u8> {
    let mut out = Vec::new();
    let units: Vec<_> = ds.units.values().collect();
    write_units(&mut out, &units).expect("in-memory write");
    write_observations(
        &mut out,
        ds.observations.values().flat_map(|s| {
            s.samples()
                .iter()
                .map(move |&(d, v)| (s.unit_id.as_str(), s.band, d, v))
        }),
    )
    .expect("in-memory write");
    let days: Vec<_> = ds.climate.values().flat_map(|m| m.values()).collect();
    write_climate(&mut out, &days).expect("in-memory write");
    let emb: Vec<_> = ds.embeddings.values().collect();
    write_embeddings(&mut out, &emb).expect("in-memory write");
    let labels: Vec<_> = ds.labels.iter().collect();
    write_labels(&mut out, &labels).expect("in-memory write");
    out
}
