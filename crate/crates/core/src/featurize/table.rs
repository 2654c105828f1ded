use std::collections::BTreeMap;
use std::io::Write;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{build_row, expected_width, FeatureError, FeatureSet, MissingPolicy, TaskConfig};
use crate::dataset::{Dataset, LabelTask};

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct RowKey {
    pub unit_id: String,
    pub year: i32,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Provenance {
    pub task: LabelTask,
    pub feature_set: FeatureSet,
    pub config_hash: String,
}

/// Dense, finite, row-major predictor matrix keyed by `(unit, year)`.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureTable {
    keys: Vec<RowKey>,
    names: Vec<String>,
    values: Vec<f64>,
    pub provenance: Provenance,
}

impl FeatureTable {
    pub fn new(
        names: Vec<String>,
        keys: Vec<RowKey>,
        rows: Vec<Vec<f64>>,
        provenance: Provenance,
    ) -> Result<Self, FeatureError> {
        if keys.len() != rows.len() {
            return Err(FeatureError::Schema(format!("{} keys for {} rows", keys.len(), rows.len())));
        }
        let mut values = Vec::with_capacity(rows.len() * names.len());
        for (i, row) in rows.into_iter().enumerate() {
            if row.len() != names.len() {
                return Err(FeatureError::Table {
                    row: i,
                    message: format!("{} values for {} columns", row.len(), names.len()),
                });
            }
            if let Some(j) = row.iter().position(|v| !v.is_finite()) {
                return Err(FeatureError::Table {
                    row: i,
                    message: format!("non-finite value in column '{}'", names[j]),
                });
            }
            values.extend(row);
        }
        Ok(Self {
            keys,
            names,
            values,
            provenance,
        })
    }

    pub fn n_rows(&self) -> usize {
        self.keys.len()
    }

    pub fn n_cols(&self) -> usize {
        self.names.len()
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn keys(&self) -> &[RowKey] {
        &self.keys
    }

    pub fn row(&self, i: usize) -> &[f64] {
        let w = self.n_cols();
        &self.values[i * w..(i + 1) * w]
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.values[i * self.n_cols() + j]
    }

    pub fn column(&self, j: usize) -> Vec<f64> {
        (0..self.n_rows()).map(|i| self.get(i, j)).collect()
    }

    pub fn select_rows(&self, rows: &[usize]) -> FeatureTable {
        let mut values = Vec::with_capacity(rows.len() * self.n_cols());
        for &i in rows {
            values.extend_from_slice(self.row(i));
        }
        FeatureTable {
            keys: rows.iter().map(|&i| self.keys[i].clone()).collect(),
            names: self.names.clone(),
            values,
            provenance: self.provenance.clone(),
        }
    }

    /// CSV with `unit_id,year,label,<features>`.
    pub fn write_csv<W: Write>(&self, out: W, labels: &[f64]) -> Result<(), FeatureError> {
        let mut w = csv::Writer::from_writer(out);
        let mut header = vec!["unit_id".to_string(), "year".to_string(), "label".to_string()];
        header.extend(self.names.iter().cloned());
        w.write_record(&header).map_err(csv_io)?;
        for (i, key) in self.keys.iter().enumerate() {
            let mut rec = vec![key.unit_id.clone(), key.year.to_string(), labels[i].to_string()];
            rec.extend(self.row(i).iter().map(f64::to_string));
            w.write_record(&rec).map_err(csv_io)?;
        }
        w.flush()?;
        Ok(())
    }
}

fn csv_io(e: csv::Error) -> FeatureError {
    FeatureError::Io(std::io::Error::other(e))
}

/// Counts of labeled unit-years that were excluded or imputed, by cause.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct BuildLog {
    pub labeled: usize,
    pub kept: usize,
    /// Excluded rows keyed by the first cause met.
    pub excluded: BTreeMap<String, usize>,
    /// Imputed cells keyed by cause.
    pub imputed_cells: BTreeMap<String, usize>,
}

#[derive(Debug, Clone)]
pub struct AssembledTable {
    pub table: FeatureTable,
    pub labels: Vec<f64>,
    pub log: BuildLog,
}

/// Builds the predictor table for every labeled unit-year of `cfg.task`.
pub fn assemble_table(ds: &Dataset, cfg: &TaskConfig) -> Result<AssembledTable, FeatureError> {
    cfg.validate()?;
    let names = cfg.feature_names();
    debug_assert_eq!(names.len(), expected_width(cfg));
    let mut labeled: Vec<(RowKey, f64)> = ds
        .labels_for(cfg.task)
        .map(|l| {
            (
                RowKey {
                    unit_id: l.unit_id.clone(),
                    year: l.year,
                },
                l.value,
            )
        })
        .collect();
    labeled.sort_by(|a, b| a.0.cmp(&b.0));

    let partial: Vec<_> = labeled
        .par_iter()
        .map(|(key, _)| build_row(ds, &key.unit_id, key.year, cfg))
        .collect();

    let mut log = BuildLog {
        labeled: labeled.len(),
        ..BuildLog::default()
    };
    let mut keys = Vec::new();
    let mut rows = Vec::new();
    let mut labels = Vec::new();
    match cfg.missing_policy {
        MissingPolicy::Drop => {
            for ((key, label), row) in labeled.into_iter().zip(partial) {
                if row.is_complete() {
                    keys.push(key);
                    labels.push(label);
                    rows.push(row.cells.into_iter().map(|c| c.expect("complete")).collect());
                } else {
                    *log.excluded.entry(row.causes[0].name().to_string()).or_default() += 1;
                }
            }
        }
        MissingPolicy::ImputeMean => {
            let means = complete_row_means(&partial, &names)?;
            for ((key, label), row) in labeled.into_iter().zip(partial) {
                if !row.is_complete() {
                    let n = row.cells.iter().filter(|c| c.is_none()).count();
                    *log.imputed_cells.entry(row.causes[0].name().to_string()).or_default() += n;
                }
                keys.push(key);
                labels.push(label);
                rows.push(
                    row.cells
                        .iter()
                        .zip(&means)
                        .map(|(c, m)| c.unwrap_or(*m))
                        .collect(),
                );
            }
        }
    }
    if keys.is_empty() {
        return Err(FeatureError::NoRows { labeled: log.labeled });
    }
    log.kept = keys.len();
    let provenance = Provenance {
        task: cfg.task,
        feature_set: cfg.feature_set,
        config_hash: cfg.hash(),
    };
    Ok(AssembledTable {
        table: FeatureTable::new(names, keys, rows, provenance)?,
        labels,
        log,
    })
}

fn complete_row_means(rows: &[super::PartialRow], names: &[String]) -> Result<Vec<f64>, FeatureError> {
    let complete: Vec<_> = rows.iter().filter(|r| r.is_complete()).collect();
    if complete.is_empty() {
        if rows.iter().all(|r| r.is_complete()) {
            return Ok(vec![0.0; names.len()]);
        }
        return Err(FeatureError::NoCompleteRows {
            column: names.first().cloned().unwrap_or_default(),
        });
    }
    Ok((0..names.len())
        .map(|j| {
            let col = complete.iter().map(|r| r.cells[j].expect("complete"));
            crate::numeric::exact_sum(col) / complete.len() as f64
        })
        .collect())
}
