//! Evaluation schemes, metrics and the repeated-seed benchmark.

mod benchmark;

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::str::FromStr;

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::dataset::{Dataset, Ecoregion, Level};
use crate::featurize::{FeatureError, FeatureTable};
use crate::models::ModelError;
use crate::seed;

pub use benchmark::{
    run_benchmark, BenchmarkConfig, FoldSummary, MetricEntry, MetricReport, ReportContext, ReportSummary, AGGREGATE,
    POOLED_FOLD,
};

pub const DEFAULT_FOLDS: usize = 5;
pub const DEFAULT_REPEATS: usize = 5;

#[derive(Debug, Error)]
pub enum EvalError {
    #[error("group_cv needs at least {k} groups, found {groups}")]
    TooFewGroups { groups: usize, k: usize },
    #[error("group_cv needs k >= 2, got {0}")]
    BadK(usize),
    #[error("yearly_cv needs at least two years, found {0}")]
    SingleYear(usize),
    #[error("{scheme}: {side} side is empty")]
    EmptySide { scheme: String, side: &'static str },
    #[error("fold '{fold}' has an empty test set")]
    EmptyTest { fold: String },
    #[error("no rows to split")]
    NoRows,
    #[error("metric inputs: {0}")]
    Metric(String),
    #[error("row {unit_id}/{year} has no unit metadata")]
    UnknownUnit { unit_id: String, year: i32 },
    #[error(transparent)]
    Feature(#[from] FeatureError),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error("report: {0}")]
    Report(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum GroupKey {
    /// State-year for county rows, county-year once field rows are present.
    Auto,
    StateYear,
    CountyYear,
}

impl FromStr for GroupKey {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "auto" => Ok(GroupKey::Auto),
            "state_year" => Ok(GroupKey::StateYear),
            "county_year" => Ok(GroupKey::CountyYear),
            other => Err(format!("unknown group key '{other}' (expected auto|state_year|county_year)")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Direction {
    EastToWest,
    WestToEast,
}

impl Direction {
    pub fn source(self) -> Ecoregion {
        match self {
            Direction::EastToWest => Ecoregion::East,
            Direction::WestToEast => Ecoregion::West,
        }
    }

    pub fn target(self) -> Ecoregion {
        match self {
            Direction::EastToWest => Ecoregion::West,
            Direction::WestToEast => Ecoregion::East,
        }
    }
}

impl fmt::Display for Direction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}->{}", self.source().name(), self.target().name())
    }
}

impl FromStr for Direction {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let norm: String = s
            .chars()
            .filter(|c| c.is_ascii_alphabetic())
            .collect::<String>()
            .to_ascii_lowercase();
        match norm.as_str() {
            "easttowest" | "eastwest" => Ok(Direction::EastToWest),
            "westtoeast" | "westeast" => Ok(Direction::WestToEast),
            _ => Err(format!("unknown direction '{s}' (expected east_to_west|west_to_east)")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Scheme {
    GroupCv { k: usize, key: GroupKey },
    YearlyCv,
    ScaleTransfer,
    SpaceTransfer { direction: Direction },
}

impl Scheme {
    pub fn name(&self) -> &'static str {
        match self {
            Scheme::GroupCv { .. } => "group_cv",
            Scheme::YearlyCv => "yearly_cv",
            Scheme::ScaleTransfer => "scale_transfer",
            Scheme::SpaceTransfer { .. } => "space_transfer",
        }
    }

    pub fn group_cv() -> Self {
        Scheme::GroupCv {
            k: DEFAULT_FOLDS,
            key: GroupKey::Auto,
        }
    }
}

impl FromStr for Scheme {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "group_cv" => Ok(Scheme::group_cv()),
            "yearly_cv" => Ok(Scheme::YearlyCv),
            "scale_transfer" => Ok(Scheme::ScaleTransfer),
            "space_transfer" => Ok(Scheme::SpaceTransfer {
                direction: Direction::EastToWest,
            }),
            other => Err(format!(
                "unknown scheme '{other}' (expected group_cv|yearly_cv|scale_transfer|space_transfer)"
            )),
        }
    }
}

/// Metadata of one table row needed to split it.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RowMeta {
    pub unit_id: String,
    pub year: i32,
    pub level: Level,
    pub state: String,
    pub county_id: String,
    pub ecoregion: Ecoregion,
}

pub fn row_meta(ds: &Dataset, table: &FeatureTable) -> Result<Vec<RowMeta>, EvalError> {
    table
        .keys()
        .iter()
        .map(|k| {
            let u = ds.units.get(&k.unit_id).ok_or_else(|| EvalError::UnknownUnit {
                unit_id: k.unit_id.clone(),
                year: k.year,
            })?;
            Ok(RowMeta {
                unit_id: k.unit_id.clone(),
                year: k.year,
                level: u.level,
                state: u.state.clone(),
                county_id: u.county_id.clone(),
                ecoregion: u.ecoregion,
            })
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Fold {
    pub label: String,
    pub train: Vec<usize>,
    pub test: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SplitPlan {
    pub scheme: Scheme,
    pub folds: Vec<Fold>,
    pub seed: u64,
    pub group_key: String,
    /// Group identifier of every row (group_cv only).
    pub row_groups: Vec<String>,
}

fn resolve_key(rows: &[RowMeta], key: GroupKey) -> GroupKey {
    match key {
        GroupKey::Auto if rows.iter().any(|r| r.level == Level::Field) => GroupKey::CountyYear,
        GroupKey::Auto => GroupKey::StateYear,
        k => k,
    }
}

/// Partitions row indices `0..rows.len()` according to `scheme`.
pub fn build_split_plan(rows: &[RowMeta], scheme: &Scheme, seed: u64) -> Result<SplitPlan, EvalError> {
    if rows.is_empty() {
        return Err(EvalError::NoRows);
    }
    let all = 0..rows.len();
    let mut plan = SplitPlan {
        scheme: *scheme,
        folds: Vec::new(),
        seed,
        group_key: String::new(),
        row_groups: Vec::new(),
    };
    match *scheme {
        Scheme::GroupCv { k, key } => {
            if k < 2 {
                return Err(EvalError::BadK(k));
            }
            let key = resolve_key(rows, key);
            plan.group_key = match key {
                GroupKey::CountyYear => "county_year",
                _ => "state_year",
            }
            .to_string();
            plan.row_groups = rows
                .iter()
                .map(|r| match key {
                    GroupKey::CountyYear => format!("{}|{}", r.county_id, r.year),
                    _ => format!("{}|{}", r.state, r.year),
                })
                .collect();
            let mut groups: Vec<&String> = plan.row_groups.iter().collect::<BTreeSet<_>>().into_iter().collect();
            if groups.len() < k {
                return Err(EvalError::TooFewGroups { groups: groups.len(), k });
            }
            groups.shuffle(&mut seed::rng(seed));
            let fold_of: BTreeMap<&String, usize> = chunk_sizes(groups.len(), k)
                .enumerate()
                .flat_map(|(f, (start, len))| groups[start..start + len].iter().map(move |g| (*g, f)))
                .collect();
            for f in 0..k {
                let (test, train): (Vec<usize>, Vec<usize>) =
                    all.clone().partition(|&i| fold_of[&plan.row_groups[i]] == f);
                plan.folds.push(Fold {
                    label: format!("fold{}", f + 1),
                    train,
                    test,
                });
            }
        }
        Scheme::YearlyCv => {
            plan.group_key = "year".to_string();
            let years: BTreeSet<i32> = rows.iter().map(|r| r.year).collect();
            if years.len() < 2 {
                return Err(EvalError::SingleYear(years.len()));
            }
            for y in years {
                let (test, train) = all.clone().partition(|&i| rows[i].year == y);
                plan.folds.push(Fold {
                    label: y.to_string(),
                    train,
                    test,
                });
            }
        }
        Scheme::ScaleTransfer => {
            plan.group_key = "level".to_string();
            let (train, test): (Vec<usize>, Vec<usize>) = all.partition(|&i| rows[i].level == Level::County);
            check_sides(scheme, &train, &test)?;
            plan.folds.push(Fold {
                label: "county->field".to_string(),
                train,
                test,
            });
        }
        Scheme::SpaceTransfer { direction } => {
            plan.group_key = "ecoregion".to_string();
            let train: Vec<usize> = all.clone().filter(|&i| rows[i].ecoregion == direction.source()).collect();
            let test: Vec<usize> = all.filter(|&i| rows[i].ecoregion == direction.target()).collect();
            check_sides(scheme, &train, &test)?;
            plan.folds.push(Fold {
                label: direction.to_string(),
                train,
                test,
            });
        }
    }
    Ok(plan)
}

/// `(start, len)` of `k` contiguous chunks of `n` items differing in size
/// by at most one.
fn chunk_sizes(n: usize, k: usize) -> impl Iterator<Item = (usize, usize)> {
    let (base, extra) = (n / k, n % k);
    (0..k).map(move |f| {
        let len = base + usize::from(f < extra);
        let start = f * base + f.min(extra);
        (start, len)
    })
}

fn check_sides(scheme: &Scheme, train: &[usize], test: &[usize]) -> Result<(), EvalError> {
    if train.is_empty() {
        return Err(EvalError::EmptySide {
            scheme: scheme.name().to_string(),
            side: "train",
        });
    }
    if test.is_empty() {
        return Err(EvalError::EmptySide {
            scheme: scheme.name().to_string(),
            side: "test",
        });
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RegressionMetrics {
    /// `None` when the truth is constant.
    pub r2: Option<f64>,
    pub rmse: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ClassificationMetrics {
    pub accuracy: f64,
    pub f1_class0: f64,
    pub f1_class1: f64,
    pub f1_weighted: f64,
}

fn check_lengths(truth: &[f64], pred: &[f64]) -> Result<(), EvalError> {
    if truth.is_empty() || truth.len() != pred.len() {
        return Err(EvalError::Metric(format!(
            "need equal nonzero lengths, got {} and {}",
            truth.len(),
            pred.len()
        )));
    }
    Ok(())
}

/// Coefficient of determination and root mean squared error.
pub fn regression_metrics(truth: &[f64], pred: &[f64]) -> Result<RegressionMetrics, EvalError> {
    check_lengths(truth, pred)?;
    let n = truth.len() as f64;
    let mean = crate::numeric::mean(truth);
    let ss_res: f64 = truth.iter().zip(pred).map(|(t, p)| (t - p) * (t - p)).sum();
    let ss_tot: f64 = truth.iter().map(|t| (t - mean) * (t - mean)).sum();
    let constant = truth.iter().all(|&t| t == truth[0]);
    Ok(RegressionMetrics {
        r2: (!constant).then(|| 1.0 - ss_res / ss_tot),
        rmse: (ss_res / n).sqrt(),
    })
}

fn f1(tp: usize, fp: usize, fn_: usize) -> f64 {
    let ratio = |a: usize, b: usize| if b == 0 { 0.0 } else { a as f64 / b as f64 };
    let precision = ratio(tp, tp + fp);
    let recall = ratio(tp, tp + fn_);
    if precision + recall == 0.0 {
        0.0
    } else {
        2.0 * precision * recall / (precision + recall)
    }
}

/// Accuracy, per-class F1 and the support-weighted F1.
pub fn classification_metrics(truth: &[f64], pred: &[f64]) -> Result<ClassificationMetrics, EvalError> {
    check_lengths(truth, pred)?;
    let class = |v: f64| -> Result<bool, EvalError> {
        match v {
            0.0 => Ok(false),
            1.0 => Ok(true),
            other => Err(EvalError::Metric(format!("label {other} is not 0 or 1"))),
        }
    };
    let (mut tp, mut tn, mut fp, mut fn_) = (0, 0, 0, 0);
    for (&t, &p) in truth.iter().zip(pred) {
        match (class(t)?, class(p)?) {
            (true, true) => tp += 1,
            (false, false) => tn += 1,
            (false, true) => fp += 1,
            (true, false) => fn_ += 1,
        }
    }
    let n = truth.len() as f64;
    let f1_class1 = f1(tp, fp, fn_);
    let f1_class0 = f1(tn, fn_, fp);
    let n1 = (tp + fn_) as f64;
    let n0 = (tn + fp) as f64;
    Ok(ClassificationMetrics {
        accuracy: (tp + tn) as f64 / n,
        f1_class0,
        f1_class1,
        f1_weighted: (n0 / n) * f1_class0 + (n1 / n) * f1_class1,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn meta(unit: &str, year: i32, level: Level, state: &str, county: &str) -> RowMeta {
        RowMeta {
            unit_id: unit.into(),
            year,
            level,
            state: state.into(),
            county_id: county.into(),
            ecoregion: crate::dataset::default_ecoregion(state),
        }
    }

    #[test]
    fn regression_fixture() {
        let m = regression_metrics(&[0.0, 1.0, 2.0, 3.0], &[0.0, 0.0, 2.0, 2.0]).unwrap();
        assert!((m.rmse - 0.5f64.sqrt()).abs() < 1e-12);
        assert!((m.r2.unwrap() - 0.6).abs() < 1e-12);
        let perfect = regression_metrics(&[1.0, 2.0], &[1.0, 2.0]).unwrap();
        assert_eq!((perfect.r2, perfect.rmse), (Some(1.0), 0.0));
        let mean = regression_metrics(&[1.0, 2.0, 3.0], &[2.0, 2.0, 2.0]).unwrap();
        assert_eq!(mean.r2, Some(0.0));
        let bad = regression_metrics(&[1.0, 2.0, 3.0], &[9.0, -4.0, 7.0]).unwrap();
        assert!(bad.r2.unwrap() < 0.0);
        let constant = regression_metrics(&[2.0, 2.0], &[1.0, 3.0]).unwrap();
        assert_eq!(constant.r2, None);
        assert_eq!(constant.rmse, 1.0);
        assert!(regression_metrics(&[], &[]).is_err());
        assert!(regression_metrics(&[1.0], &[1.0, 2.0]).is_err());
    }

    #[test]
    fn classification_fixture() {
        let m = classification_metrics(&[1.0, 1.0, 1.0, 0.0], &[1.0, 1.0, 0.0, 0.0]).unwrap();
        assert!((m.accuracy - 0.75).abs() < 1e-12);
        assert!((m.f1_class1 - 0.8).abs() < 1e-12);
        assert!((m.f1_class0 - 2.0 / 3.0).abs() < 1e-12);
        assert!((m.f1_weighted - (0.75 * 0.8 + 0.25 * 2.0 / 3.0)).abs() < 1e-12);
        let none = classification_metrics(&[1.0, 1.0], &[0.0, 0.0]).unwrap();
        assert_eq!((none.accuracy, none.f1_class1, none.f1_class0), (0.0, 0.0, 0.0));
        let all = classification_metrics(&[0.0, 1.0], &[0.0, 1.0]).unwrap();
        assert_eq!((all.accuracy, all.f1_class0, all.f1_class1, all.f1_weighted), (1.0, 1.0, 1.0, 1.0));
        assert!(classification_metrics(&[0.5], &[0.0]).is_err());
    }

    #[test]
    fn yearly_cv_one_fold_per_year() {
        let rows: Vec<RowMeta> = (2017..=2024)
            .flat_map(|y| (0..3).map(move |u| meta(&format!("c{u}"), y, Level::County, "IA", &format!("c{u}"))))
            .collect();
        let plan = build_split_plan(&rows, &Scheme::YearlyCv, 1).unwrap();
        assert_eq!(plan.folds.len(), 8);
        let mut seen = vec![0; rows.len()];
        for f in &plan.folds {
            for &i in &f.test {
                seen[i] += 1;
                assert_eq!(rows[i].year.to_string(), f.label);
            }
            assert_eq!(f.train.len() + f.test.len(), rows.len());
        }
        assert!(seen.iter().all(|&c| c == 1));
        let one_year = &rows[..3];
        assert!(matches!(build_split_plan(one_year, &Scheme::YearlyCv, 1), Err(EvalError::SingleYear(1))));
    }

    #[test]
    fn group_cv_ten_groups_five_folds() {
        let states = ["IA", "IL", "NE", "OH", "KS"];
        let rows: Vec<RowMeta> = states
            .iter()
            .flat_map(|s| {
                [2019, 2020].into_iter().flat_map(move |y| {
                    (0..4).map(move |u| meta(&format!("{s}{u}"), y, Level::County, s, &format!("{s}{u}")))
                })
            })
            .collect();
        let plan = build_split_plan(&rows, &Scheme::group_cv(), 42).unwrap();
        assert_eq!(plan.group_key, "state_year");
        assert_eq!(plan.folds.len(), 5);
        for f in &plan.folds {
            let test_groups: BTreeSet<_> = f.test.iter().map(|&i| &plan.row_groups[i]).collect();
            let train_groups: BTreeSet<_> = f.train.iter().map(|&i| &plan.row_groups[i]).collect();
            assert_eq!(test_groups.len(), 2);
            assert!(test_groups.is_disjoint(&train_groups));
        }
        let err = build_split_plan(&rows, &Scheme::GroupCv { k: 11, key: GroupKey::Auto }, 1).unwrap_err();
        assert!(matches!(err, EvalError::TooFewGroups { groups: 10, k: 11 }));
    }

    #[test]
    fn field_rows_group_by_county_year() {
        let rows = vec![
            meta("f1", 2020, Level::Field, "IA", "c1"),
            meta("f2", 2020, Level::Field, "IA", "c1"),
            meta("f3", 2020, Level::Field, "IA", "c2"),
        ];
        let plan = build_split_plan(&rows, &Scheme::GroupCv { k: 2, key: GroupKey::Auto }, 3).unwrap();
        assert_eq!(plan.group_key, "county_year");
        assert_eq!(plan.row_groups[0], plan.row_groups[1]);
    }

    #[test]
    fn transfer_plans() {
        let rows = vec![
            meta("c1", 2020, Level::County, "IL", "c1"),
            meta("c2", 2020, Level::County, "IA", "c2"),
            meta("c3", 2020, Level::County, "TX", "c3"),
            meta("f1", 2020, Level::Field, "IA", "c2"),
        ];
        let st = build_split_plan(&rows, &Scheme::ScaleTransfer, 0).unwrap();
        assert_eq!(st.folds[0].train, vec![0, 1, 2]);
        assert_eq!(st.folds[0].test, vec![3]);
        let ew = build_split_plan(
            &rows,
            &Scheme::SpaceTransfer {
                direction: Direction::EastToWest,
            },
            0,
        )
        .unwrap();
        assert_eq!(ew.folds[0].label, "East->West");
        assert_eq!(ew.folds[0].train, vec![0]);
        assert_eq!(ew.folds[0].test, vec![1, 3]);
        let only_county = &rows[..3];
        assert!(matches!(
            build_split_plan(only_county, &Scheme::ScaleTransfer, 0),
            Err(EvalError::EmptySide { side: "test", .. })
        ));
    }

    #[test]
    fn chunks_are_near_equal() {
        let sizes: Vec<_> = chunk_sizes(11, 4).collect();
        assert_eq!(sizes, vec![(0, 3), (3, 3), (6, 3), (9, 2)]);
    }

    proptest! {
        #[test]
        fn relabeling_swaps_per_class_f1(pairs in prop::collection::vec((0u8..2, 0u8..2), 1..60)) {
            let truth: Vec<f64> = pairs.iter().map(|p| f64::from(p.0)).collect();
            let pred: Vec<f64> = pairs.iter().map(|p| f64::from(p.1)).collect();
            let flip = |v: &[f64]| v.iter().map(|x| 1.0 - x).collect::<Vec<_>>();
            let a = classification_metrics(&truth, &pred).unwrap();
            let b = classification_metrics(&flip(&truth), &flip(&pred)).unwrap();
            prop_assert_eq!(a.accuracy, b.accuracy);
            prop_assert_eq!(a.f1_class0, b.f1_class1);
            prop_assert_eq!(a.f1_class1, b.f1_class0);
            prop_assert!((a.f1_weighted - b.f1_weighted).abs() < 1e-12);
        }

        #[test]
        fn group_cv_never_leaks(seed in any::<u64>(), k in 2usize..7, n_states in 2usize..6, n_years in 1usize..5) {
            let rows: Vec<RowMeta> = (0..n_states)
                .flat_map(|s| (0..n_years).flat_map(move |y| (0..3).map(move |u| {
                    let st = format!("S{s}");
                    meta(&format!("{st}-{u}"), 2000 + y as i32, Level::County, &st, &format!("{st}-{u}"))
                })))
                .collect();
            match build_split_plan(&rows, &Scheme::GroupCv { k, key: GroupKey::Auto }, seed) {
                Ok(plan) => {
                    let mut tested = vec![0; rows.len()];
                    for f in &plan.folds {
                        let test: BTreeSet<_> = f.test.iter().map(|&i| &plan.row_groups[i]).collect();
                        prop_assert!(f.train.iter().all(|&i| !test.contains(&plan.row_groups[i])));
                        f.test.iter().for_each(|&i| tested[i] += 1);
                    }
                    prop_assert!(tested.iter().all(|&c| c == 1));
                }
                Err(EvalError::TooFewGroups { groups, .. }) => prop_assert!(groups < k),
                Err(e) => prop_assert!(false, "{e}"),
            }
        }
    }
}
