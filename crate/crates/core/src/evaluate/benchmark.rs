use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::io::Write;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{build_split_plan, classification_metrics, regression_metrics, row_meta, EvalError, Scheme, SplitPlan};
use crate::dataset::{Dataset, LabelTask};
use crate::featurize::{assemble_table, BuildLog, FeatureFamily, TaskConfig};
use crate::models::{train, ModelSpec, Objective};
use crate::seed;

/// Fold/seed label of aggregate rows.
pub const AGGREGATE: &str = "mean";
/// Fold label of yearly_cv metrics over pooled predictions.
pub const POOLED_FOLD: &str = "All";

const REGRESSION_METRICS: [&str; 2] = ["R2", "RMSE"];
const CLASSIFICATION_METRICS: [&str; 4] = ["Accuracy", "F1_class0", "F1_class1", "F1_weighted"];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchmarkConfig {
    pub task: TaskConfig,
    /// Template spec; each (repeat, fold) gets its own derived seed.
    pub model: ModelSpec,
    pub scheme: Scheme,
    pub n_repeats: usize,
    pub base_seed: u64,
}

impl BenchmarkConfig {
    pub fn objective(task: LabelTask) -> Objective {
        if task.is_classification() {
            Objective::Classification
        } else {
            Objective::Regression
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportContext {
    pub task: String,
    pub crop: String,
    pub feature_set: String,
    pub model: String,
    pub scheme: String,
    pub group_key: String,
    pub config_hash: String,
    pub flags: Vec<String>,
    pub n_repeats: usize,
    pub base_seed: u64,
    pub seeds: Vec<u64>,
    pub n_rows: usize,
    pub n_features: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricEntry {
    pub fold: String,
    pub seed: String,
    pub metric: String,
    /// `None` for an undefined value (R² on constant truth).
    pub value: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricReport {
    pub context: ReportContext,
    pub exclusions: BuildLog,
    /// Per-(fold, seed) rows, then per-fold seed means, then the overall mean.
    pub entries: Vec<MetricEntry>,
}

fn mean_defined(values: &[Option<f64>]) -> Option<f64> {
    let defined: Vec<f64> = values.iter().flatten().copied().collect();
    (!defined.is_empty()).then(|| defined.iter().sum::<f64>() / defined.len() as f64)
}

fn metric_values(objective: Objective, truth: &[f64], pred: &[f64]) -> Result<Vec<Option<f64>>, EvalError> {
    Ok(match objective {
        Objective::Regression => {
            let m = regression_metrics(truth, pred)?;
            vec![m.r2, Some(m.rmse)]
        }
        Objective::Classification => {
            let m = classification_metrics(truth, pred)?;
            vec![Some(m.accuracy), Some(m.f1_class0), Some(m.f1_class1), Some(m.f1_weighted)]
        }
    })
}

fn metric_names(objective: Objective) -> &'static [&'static str] {
    match objective {
        Objective::Regression => &REGRESSION_METRICS,
        Objective::Classification => &CLASSIFICATION_METRICS,
    }
}

struct FoldResult {
    values: Vec<Option<f64>>,
    test: Vec<usize>,
    pred: Vec<f64>,
}

/// Featurizes, then trains and scores every fold of `n_repeats` split plans.
pub fn run_benchmark(ds: &Dataset, cfg: &BenchmarkConfig) -> Result<MetricReport, EvalError> {
    let objective = BenchmarkConfig::objective(cfg.task.task);
    if cfg.model.objective != objective {
        return Err(EvalError::Report(format!(
            "model objective {:?} does not match task {}",
            cfg.model.objective, cfg.task.task
        )));
    }
    if cfg.n_repeats == 0 {
        return Err(EvalError::Report("n_repeats must be at least 1".into()));
    }
    let assembled = assemble_table(ds, &cfg.task)?;
    let table = &assembled.table;
    let labels = &assembled.labels;
    let meta = row_meta(ds, table)?;

    let seeds: Vec<u64> = (1..=cfg.n_repeats as u64).map(|i| seed::mix(cfg.base_seed, i)).collect();
    let plans: Vec<SplitPlan> = seeds
        .iter()
        .map(|&s| build_split_plan(&meta, &cfg.scheme, s))
        .collect::<Result<_, _>>()?;
    for plan in &plans {
        if let Some(f) = plan.folds.iter().find(|f| f.test.is_empty()) {
            return Err(EvalError::EmptyTest { fold: f.label.clone() });
        }
    }

    let jobs: Vec<(usize, usize)> = plans
        .iter()
        .enumerate()
        .flat_map(|(r, p)| (0..p.folds.len()).map(move |f| (r, f)))
        .collect();
    let results: Vec<FoldResult> = jobs
        .par_iter()
        .map(|&(r, f)| {
            let fold = &plans[r].folds[f];
            let spec = ModelSpec {
                seed: seed::mix(seeds[r], f as u64),
                ..cfg.model.clone()
            };
            let train_y: Vec<f64> = fold.train.iter().map(|&i| labels[i]).collect();
            let model = train(&spec, &table.select_rows(&fold.train), &train_y)?;
            let pred = model.predict(&table.select_rows(&fold.test))?;
            let truth: Vec<f64> = fold.test.iter().map(|&i| labels[i]).collect();
            Ok(FoldResult {
                values: metric_values(objective, &truth, &pred)?,
                test: fold.test.clone(),
                pred,
            })
        })
        .collect::<Result<_, EvalError>>()?;

    let names = metric_names(objective);
    let n_folds = plans[0].folds.len();
    let fold_labels: Vec<String> = plans[0].folds.iter().map(|f| f.label.clone()).collect();
    let result = |r: usize, f: usize| &results[r * n_folds + f];
    let mut entries = Vec::new();
    let push = |entries: &mut Vec<MetricEntry>, fold: &str, seed: &str, values: &[Option<f64>]| {
        for (name, v) in names.iter().zip(values) {
            entries.push(MetricEntry {
                fold: fold.to_string(),
                seed: seed.to_string(),
                metric: name.to_string(),
                value: *v,
            });
        }
    };

    let mut fold_means = Vec::with_capacity(n_folds);
    for (f, label) in fold_labels.iter().enumerate() {
        for (r, s) in seeds.iter().enumerate() {
            push(&mut entries, label, &s.to_string(), &result(r, f).values);
        }
        let means: Vec<Option<f64>> = (0..names.len())
            .map(|m| mean_defined(&(0..seeds.len()).map(|r| result(r, f).values[m]).collect::<Vec<_>>()))
            .collect();
        push(&mut entries, label, AGGREGATE, &means);
        fold_means.push(means);
    }

    if matches!(cfg.scheme, Scheme::YearlyCv) {
        let mut pooled = Vec::with_capacity(seeds.len());
        for (r, s) in seeds.iter().enumerate() {
            let mut truth = Vec::with_capacity(labels.len());
            let mut pred = Vec::with_capacity(labels.len());
            for f in 0..n_folds {
                let res = result(r, f);
                truth.extend(res.test.iter().map(|&i| labels[i]));
                pred.extend_from_slice(&res.pred);
            }
            let values = metric_values(objective, &truth, &pred)?;
            push(&mut entries, POOLED_FOLD, &s.to_string(), &values);
            pooled.push(values);
        }
        let means: Vec<Option<f64>> = (0..names.len())
            .map(|m| mean_defined(&pooled.iter().map(|v| v[m]).collect::<Vec<_>>()))
            .collect();
        push(&mut entries, POOLED_FOLD, AGGREGATE, &means);
    }

    let overall: Vec<Option<f64>> = (0..names.len())
        .map(|m| mean_defined(&fold_means.iter().map(|v| v[m]).collect::<Vec<_>>()))
        .collect();
    push(&mut entries, AGGREGATE, AGGREGATE, &overall);

    let crop = if cfg.task.family() == FeatureFamily::Yield {
        cfg.task.crop.name().to_string()
    } else {
        "na".to_string()
    };
    Ok(MetricReport {
        context: ReportContext {
            task: cfg.task.task.name().to_string(),
            crop,
            feature_set: cfg.task.feature_set.name().to_string(),
            model: cfg.model.kind.name().to_string(),
            scheme: cfg.scheme.name().to_string(),
            group_key: plans[0].group_key.clone(),
            config_hash: table.provenance.config_hash.clone(),
            flags: cfg.task.flags(),
            n_repeats: cfg.n_repeats,
            base_seed: cfg.base_seed,
            seeds,
            n_rows: table.n_rows(),
            n_features: table.n_cols(),
        },
        exclusions: assembled.log,
        entries,
    })
}

fn format_value(v: Option<f64>) -> String {
    v.map_or_else(|| "NA".to_string(), |x| x.to_string())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FoldSummary {
    pub fold: String,
    pub metrics: BTreeMap<String, Option<f64>>,
}

/// Seed-averaged view of a report, one row per fold plus the overall mean.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportSummary {
    pub context: ReportContext,
    pub exclusions: BuildLog,
    pub metrics: Vec<String>,
    pub folds: Vec<FoldSummary>,
    /// Tillage ratios are shown as percent RMSE.
    pub percent_rmse: bool,
}

impl MetricReport {
    /// Value of one entry.
    pub fn value(&self, fold: &str, seed: &str, metric: &str) -> Option<f64> {
        self.entries
            .iter()
            .find(|e| e.fold == fold && e.seed == seed && e.metric == metric)
            .and_then(|e| e.value)
    }

    /// Fold labels in report order, without the overall aggregate.
    pub fn folds(&self) -> Vec<String> {
        let mut out: Vec<String> = Vec::new();
        for e in &self.entries {
            if e.fold != AGGREGATE && !out.contains(&e.fold) {
                out.push(e.fold.clone());
            }
        }
        out
    }

    pub fn metrics(&self) -> Vec<String> {
        let mut out: Vec<String> = Vec::new();
        for e in &self.entries {
            if !out.contains(&e.metric) {
                out.push(e.metric.clone());
            }
        }
        out
    }

    /// Long-format CSV: `task,crop,feature_set,model,scheme,fold,seed,metric,value`.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<(), EvalError> {
        let mut w = csv::Writer::from_writer(out);
        let err = |e: csv::Error| EvalError::Io(std::io::Error::other(e));
        w.write_record(["task", "crop", "feature_set", "model", "scheme", "fold", "seed", "metric", "value"])
            .map_err(err)?;
        let c = &self.context;
        for e in &self.entries {
            w.write_record([
                c.task.as_str(),
                c.crop.as_str(),
                c.feature_set.as_str(),
                c.model.as_str(),
                c.scheme.as_str(),
                e.fold.as_str(),
                e.seed.as_str(),
                e.metric.as_str(),
                format_value(e.value).as_str(),
            ])
            .map_err(err)?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn summary(&self) -> ReportSummary {
        let metrics = self.metrics();
        let mut folds: Vec<FoldSummary> = self
            .folds()
            .into_iter()
            .map(|fold| FoldSummary {
                metrics: metrics
                    .iter()
                    .map(|m| (m.clone(), self.value(&fold, AGGREGATE, m)))
                    .collect(),
                fold,
            })
            .collect();
        folds.push(FoldSummary {
            fold: AGGREGATE.to_string(),
            metrics: metrics
                .iter()
                .map(|m| (m.clone(), self.value(AGGREGATE, AGGREGATE, m)))
                .collect(),
        });
        ReportSummary {
            context: self.context.clone(),
            exclusions: self.exclusions.clone(),
            metrics,
            folds,
            percent_rmse: self.context.task == LabelTask::TillageRatio.name(),
        }
    }
}

impl ReportSummary {
    pub fn to_json(&self) -> Result<String, EvalError> {
        serde_json::to_string_pretty(self).map_err(|e| EvalError::Report(e.to_string()))
    }

    pub fn from_json(text: &str) -> Result<Self, EvalError> {
        serde_json::from_str(text).map_err(|e| EvalError::Report(e.to_string()))
    }

    /// Plain-text table of seed-mean metrics per fold.
    pub fn render(&self) -> String {
        let c = &self.context;
        let mut out = String::new();
        let _ = writeln!(
            out,
            "task={} crop={} features={} model={} scheme={} ({}) repeats={} rows={} cols={} config={}",
            c.task,
            c.crop,
            c.feature_set,
            c.model,
            c.scheme,
            c.group_key,
            c.n_repeats,
            c.n_rows,
            c.n_features,
            c.config_hash
        );
        for flag in &c.flags {
            let _ = writeln!(out, "flag: {flag}");
        }
        if !self.exclusions.excluded.is_empty() {
            let parts: Vec<String> = self.exclusions.excluded.iter().map(|(k, v)| format!("{k}={v}")).collect();
            let _ = writeln!(out, "excluded: {}", parts.join(" "));
        }
        let headers: Vec<String> = self
            .metrics
            .iter()
            .map(|m| if self.percent_rmse && m == "RMSE" { "RMSE(%)".to_string() } else { m.clone() })
            .collect();
        let _ = write!(out, "{:<14}", "fold");
        for h in &headers {
            let _ = write!(out, "{h:>12}");
        }
        out.push('\n');
        for f in &self.folds {
            let _ = write!(out, "{:<14}", f.fold);
            for m in &self.metrics {
                let v = f.metrics.get(m).copied().flatten();
                let cell = match v {
                    Some(x) if self.percent_rmse && m == "RMSE" => format!("{:.2}", 100.0 * x),
                    Some(x) => format!("{x:.4}"),
                    None => "NA".to_string(),
                };
                let _ = write!(out, "{cell:>12}");
            }
            out.push('\n');
        }
        out
    }
}
