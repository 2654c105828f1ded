//! Second-order harmonic regression on irregular time series.
//!
//! The model is
//!
//! ```text
//! y(t) = c + a1·cos(2πt) + b1·sin(2πt) + a2·cos(4πt) + b2·sin(4πt)
//! ```
//!
//! with `t` in years (365.25 days) measured from January 1 of the season
//! window's start year. Fits are ordinary least squares solved through a
//! Householder QR factorization of the n×5 design matrix. Phenology metrics
//! (peak, values 30 days around it, and partial integrals) are read off the
//! fitted curve; integrals use the closed-form antiderivative.

use std::f64::consts::PI;

use chrono::{Datelike, Days, NaiveDate};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::dataset::{ObservationSeries, SpectralBand, YearMonth};

pub const DAYS_PER_YEAR: f64 = 365.25;
pub const MIN_OBSERVATIONS: usize = 6;
pub const MAX_WINDOW_DAYS: i64 = 400;
/// Offset of the b30/a30 points from the peak, in days.
pub const PHENOLOGY_OFFSET_DAYS: u64 = 30;

/// Relative threshold on the diagonal of R below which the design is
/// treated as rank deficient.
const RANK_TOLERANCE: f64 = 1e-10;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum FitError {
    #[error("insufficient observations: {n} in window, need at least {MIN_OBSERVATIONS}")]
    InsufficientObservations { n: usize },
    #[error("degenerate design")]
    DegenerateDesign,
    #[error("invalid season window {start}..{end}: {reason}")]
    InvalidWindow {
        start: NaiveDate,
        end: NaiveDate,
        reason: &'static str,
    },
    #[error("integration span {from}..{to} is empty or reversed")]
    InvalidSpan { from: NaiveDate, to: NaiveDate },
    #[error("missing month {year}-{month:02}")]
    MissingMonth { year: i32, month: u32 },
    #[error("month {year}-{month:02} does not overlap the fit window")]
    MonthOutsideWindow { year: i32, month: u32 },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SeasonWindow {
    start: NaiveDate,
    end: NaiveDate,
}

impl SeasonWindow {
    pub fn new(start: NaiveDate, end: NaiveDate) -> Result<Self, FitError> {
        if start >= end {
            return Err(FitError::InvalidWindow {
                start,
                end,
                reason: "start must precede end",
            });
        }
        if (end - start).num_days() > MAX_WINDOW_DAYS {
            return Err(FitError::InvalidWindow {
                start,
                end,
                reason: "longer than 400 days",
            });
        }
        Ok(Self { start, end })
    }

    pub fn start(&self) -> NaiveDate {
        self.start
    }

    pub fn end(&self) -> NaiveDate {
        self.end
    }

    /// January 1 of the start year; the `t = 0` reference.
    pub fn t_origin(&self) -> NaiveDate {
        NaiveDate::from_ymd_opt(self.start.year(), 1, 1).expect("valid year")
    }

    pub fn contains(&self, date: NaiveDate) -> bool {
        self.start <= date && date <= self.end
    }

    /// Every calendar day of the window, inclusive at both ends.
    pub fn days(&self) -> impl Iterator<Item = NaiveDate> {
        let end = self.end;
        self.start.iter_days().take_while(move |d| *d <= end)
    }
}

/// Time in years of `date` relative to `origin`.
pub fn years_since(origin: NaiveDate, date: NaiveDate) -> f64 {
    (date - origin).num_days() as f64 / DAYS_PER_YEAR
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct HarmonicCoefficients {
    pub c: f64,
    pub a1: f64,
    pub b1: f64,
    pub a2: f64,
    pub b2: f64,
}

impl HarmonicCoefficients {
    pub const NAMES: [&'static str; 5] = ["c", "a1", "b1", "a2", "b2"];

    pub fn to_array(self) -> [f64; 5] {
        [self.c, self.a1, self.b1, self.a2, self.b2]
    }

    pub fn from_array(v: [f64; 5]) -> Self {
        Self {
            c: v[0],
            a1: v[1],
            b1: v[2],
            a2: v[3],
            b2: v[4],
        }
    }

    pub fn eval(&self, t: f64) -> f64 {
        let w = 2.0 * PI * t;
        self.c
            + self.a1 * w.cos()
            + self.b1 * w.sin()
            + self.a2 * (2.0 * w).cos()
            + self.b2 * (2.0 * w).sin()
    }

    /// Derivative with respect to `t`.
    pub fn derivative(&self, t: f64) -> f64 {
        let w = 2.0 * PI * t;
        2.0 * PI * (self.b1 * w.cos() - self.a1 * w.sin())
            + 4.0 * PI * (self.b2 * (2.0 * w).cos() - self.a2 * (2.0 * w).sin())
    }

    /// Minimum and maximum over the closed interval `[t0, t1]`.
    ///
    /// Candidates are the endpoints, a quarter-day scan, and every sign
    /// change of the derivative refined by bisection.
    pub fn extrema(&self, t0: f64, t1: f64) -> (f64, f64) {
        let step = 0.25 / DAYS_PER_YEAR;
        let n = ((t1 - t0) / step).ceil().max(1.0) as usize;
        let node = |i: usize| if i == n { t1 } else { t0 + (t1 - t0) * i as f64 / n as f64 };
        let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
        let mut take = |v: f64| {
            lo = lo.min(v);
            hi = hi.max(v);
        };
        let mut prev = (node(0), self.derivative(node(0)));
        take(self.eval(prev.0));
        for i in 1..=n {
            let t = node(i);
            let g = self.derivative(t);
            take(self.eval(t));
            if prev.1 * g < 0.0 {
                let (mut a, mut b, mut ga) = (prev.0, t, prev.1);
                for _ in 0..60 {
                    let m = 0.5 * (a + b);
                    let gm = self.derivative(m);
                    if ga * gm <= 0.0 {
                        b = m;
                    } else {
                        a = m;
                        ga = gm;
                    }
                }
                take(self.eval(0.5 * (a + b)));
            }
            prev = (t, g);
        }
        (lo, hi)
    }

    /// Closed-form antiderivative at `t`.
    pub fn antiderivative(&self, t: f64) -> f64 {
        let w = 2.0 * PI * t;
        self.c * t + (self.a1 * w.sin() - self.b1 * w.cos()) / (2.0 * PI)
            + (self.a2 * (2.0 * w).sin() - self.b2 * (2.0 * w).cos()) / (4.0 * PI)
    }
}

/// Design-matrix row for time `t`.
pub fn basis(t: f64) -> [f64; 5] {
    let w = 2.0 * PI * t;
    [1.0, w.cos(), w.sin(), (2.0 * w).cos(), (2.0 * w).sin()]
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HarmonicFit {
    pub c: f64,
    pub a1: f64,
    pub b1: f64,
    pub a2: f64,
    pub b2: f64,
    pub band: SpectralBand,
    pub window: SeasonWindow,
    /// Number of in-window samples the fit used; 0 for curves built from
    /// known coefficients.
    pub n_obs: usize,
    pub t_origin: NaiveDate,
}

impl HarmonicFit {
    /// A curve with known coefficients (no estimation involved).
    pub fn from_coefficients(coefs: HarmonicCoefficients, band: SpectralBand, window: SeasonWindow) -> Self {
        Self {
            c: coefs.c,
            a1: coefs.a1,
            b1: coefs.b1,
            a2: coefs.a2,
            b2: coefs.b2,
            band,
            window,
            n_obs: 0,
            t_origin: window.t_origin(),
        }
    }

    pub fn coefficients(&self) -> HarmonicCoefficients {
        HarmonicCoefficients {
            c: self.c,
            a1: self.a1,
            b1: self.b1,
            a2: self.a2,
            b2: self.b2,
        }
    }

    pub fn t(&self, date: NaiveDate) -> f64 {
        years_since(self.t_origin, date)
    }

    pub fn residual_sum_of_squares(&self, samples: &[(NaiveDate, f64)]) -> f64 {
        let coefs = self.coefficients();
        samples
            .iter()
            .map(|&(d, y)| (y - coefs.eval(self.t(d))).powi(2))
            .sum()
    }
}

/// Least-squares fit of the five harmonic coefficients to `(t, y)` pairs.
///
/// Solved by Householder QR; a diagonal entry of R that is tiny relative to
/// the largest one signals a rank-deficient design.
pub fn fit_coefficients(samples: &[(f64, f64)]) -> Result<HarmonicCoefficients, FitError> {
    let n = samples.len();
    if n < MIN_OBSERVATIONS {
        return Err(FitError::InsufficientObservations { n });
    }
    let mut a: Vec<[f64; 5]> = samples.iter().map(|&(t, _)| basis(t)).collect();
    let mut b: Vec<f64> = samples.iter().map(|&(_, y)| y).collect();

    let mut diag = [0.0; 5];
    let mut v = vec![0.0; n];
    for k in 0..5 {
        let norm = a[k..].iter().map(|r| r[k] * r[k]).sum::<f64>().sqrt();
        if norm == 0.0 {
            return Err(FitError::DegenerateDesign);
        }
        let alpha = if a[k][k] > 0.0 { -norm } else { norm };
        for (vi, row) in v[k..n].iter_mut().zip(&a[k..n]) {
            *vi = row[k];
        }
        v[k] -= alpha;
        let vnorm2: f64 = v[k..n].iter().map(|x| x * x).sum();
        if vnorm2 > 0.0 {
            for j in k..5 {
                let s: f64 = (k..n).map(|i| v[i] * a[i][j]).sum();
                let f = 2.0 * s / vnorm2;
                for (row, vi) in a[k..n].iter_mut().zip(&v[k..n]) {
                    row[j] -= f * vi;
                }
            }
            let s: f64 = (k..n).map(|i| v[i] * b[i]).sum();
            let f = 2.0 * s / vnorm2;
            for (bi, vi) in b[k..n].iter_mut().zip(&v[k..n]) {
                *bi -= f * vi;
            }
        }
        diag[k] = a[k][k];
    }

    let scale = diag.iter().fold(0.0f64, |m, d| m.max(d.abs()));
    if diag.iter().any(|d| d.abs() <= RANK_TOLERANCE * scale) {
        return Err(FitError::DegenerateDesign);
    }

    let mut x = [0.0; 5];
    for k in (0..5).rev() {
        let s: f64 = (k + 1..5).map(|j| a[k][j] * x[j]).sum();
        x[k] = (b[k] - s) / a[k][k];
    }
    if x.iter().any(|v| !v.is_finite()) {
        return Err(FitError::DegenerateDesign);
    }
    Ok(HarmonicCoefficients::from_array(x))
}

/// Fits the harmonic model to the samples of `series` inside `window`.
pub fn fit_harmonic(series: &ObservationSeries, window: SeasonWindow) -> Result<HarmonicFit, FitError> {
    let origin = window.t_origin();
    let in_window = series.between(window.start(), window.end());
    let samples: Vec<(f64, f64)> = in_window
        .iter()
        .map(|&(d, y)| (years_since(origin, d), y))
        .collect();
    let coefs = fit_coefficients(&samples)?;
    Ok(HarmonicFit {
        n_obs: samples.len(),
        ..HarmonicFit::from_coefficients(coefs, series.band, window)
    })
}

pub fn eval_harmonic(fit: &HarmonicFit, date: NaiveDate) -> f64 {
    fit.coefficients().eval(fit.t(date))
}

/// Exact integral of the fitted curve between two dates, in value·years.
pub fn harmonic_integral(fit: &HarmonicFit, from: NaiveDate, to: NaiveDate) -> Result<f64, FitError> {
    if from >= to {
        return Err(FitError::InvalidSpan { from, to });
    }
    let coefs = fit.coefficients();
    Ok(coefs.antiderivative(fit.t(to)) - coefs.antiderivative(fit.t(from)))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PhenologyMetrics {
    pub peak_value: f64,
    pub peak_date: NaiveDate,
    pub b30: f64,
    pub a30: f64,
    pub b30_int: f64,
    pub a30_int: f64,
}

/// Peak of the fitted curve on a daily grid over the fit window (earliest
/// day wins ties) and the curve values/areas 30 days either side of it.
/// The b30/a30 points may fall outside the window.
pub fn phenology_metrics(fit: &HarmonicFit) -> PhenologyMetrics {
    let mut best: Option<(NaiveDate, f64)> = None;
    for day in fit.window.days() {
        let v = eval_harmonic(fit, day);
        if best.is_none_or(|(_, bv)| v > bv) {
            best = Some((day, v));
        }
    }
    let (peak_date, peak_value) = best.expect("window holds at least one day");
    let offset = Days::new(PHENOLOGY_OFFSET_DAYS);
    let before = peak_date - offset;
    let after = peak_date + offset;
    PhenologyMetrics {
        peak_value,
        peak_date,
        b30: eval_harmonic(fit, before),
        a30: eval_harmonic(fit, after),
        b30_int: harmonic_integral(fit, before, peak_date).expect("positive span"),
        a30_int: harmonic_integral(fit, peak_date, after).expect("positive span"),
    }
}

pub enum ExtremaSource<'a> {
    /// Observed samples.
    Raw(&'a ObservationSeries),
    /// A fitted curve, taken continuously over the month days inside its
    /// window.
    Fitted(&'a HarmonicFit),
}

/// Minimum and maximum within one calendar month.
pub fn monthly_extrema(source: ExtremaSource<'_>, month: YearMonth) -> Result<(f64, f64), FitError> {
    let (first, last) = (month.first_day(), month.last_day());
    let values: Vec<f64> = match source {
        ExtremaSource::Raw(series) => series.between(first, last).iter().map(|s| s.1).collect(),
        ExtremaSource::Fitted(fit) => {
            let lo = first.max(fit.window.start());
            let hi = last.min(fit.window.end());
            if lo > hi {
                return Err(FitError::MonthOutsideWindow {
                    year: month.year,
                    month: month.month,
                });
            }
            return Ok(fit.coefficients().extrema(fit.t(lo), fit.t(hi)));
        }
    };
    if values.is_empty() {
        return Err(FitError::MissingMonth {
            year: month.year,
            month: month.month,
        });
    }
    let min = values.iter().copied().fold(f64::INFINITY, f64::min);
    let max = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    Ok((min, max))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn d(y: i32, m: u32, day: u32) -> NaiveDate {
        NaiveDate::from_ymd_opt(y, m, day).unwrap()
    }

    fn year_window() -> SeasonWindow {
        SeasonWindow::new(d(2020, 1, 1), d(2020, 12, 31)).unwrap()
    }

    fn curve(c: [f64; 5]) -> HarmonicFit {
        HarmonicFit::from_coefficients(HarmonicCoefficients::from_array(c), SpectralBand::Ndvi, year_window())
    }

    fn series_from(dates: &[NaiveDate], f: impl Fn(NaiveDate) -> f64) -> ObservationSeries {
        ObservationSeries::new("u", SpectralBand::Ndvi, dates.iter().map(|&x| (x, f(x))).collect()).unwrap()
    }

    #[test]
    fn window_validation() {
        assert!(SeasonWindow::new(d(2020, 5, 1), d(2020, 5, 1)).is_err());
        assert!(SeasonWindow::new(d(2020, 1, 1), d(2021, 3, 1)).is_err());
        let w = SeasonWindow::new(d(2019, 9, 1), d(2020, 7, 15)).unwrap();
        assert_eq!(w.t_origin(), d(2019, 1, 1));
    }

    #[test]
    fn constant_series_recovers_intercept() {
        let dates: Vec<_> = (0..6).map(|i| d(2020, 4, 1) + Days::new(i * 20)).collect();
        let s = series_from(&dates, |_| 2.0);
        let w = SeasonWindow::new(d(2020, 4, 1), d(2020, 10, 31)).unwrap();
        let fit = fit_harmonic(&s, w).unwrap();
        assert_eq!(fit.n_obs, 6);
        assert!((fit.c - 2.0).abs() < 1e-9);
        for v in [fit.a1, fit.b1, fit.a2, fit.b2] {
            assert!(v.abs() < 1e-9, "{v}");
        }
    }

    #[test]
    fn in_family_sine_is_recovered() {
        let w = year_window();
        let dates: Vec<_> = (0..12).map(|i| d(2020, 1, 5) + Days::new(i * 30)).collect();
        let s = series_from(&dates, |x| 1.0 + 0.5 * (2.0 * PI * years_since(w.t_origin(), x)).sin());
        let fit = fit_harmonic(&s, w).unwrap();
        let got = fit.coefficients().to_array();
        let want = [1.0, 0.0, 0.5, 0.0, 0.0];
        for (g, e) in got.iter().zip(want) {
            assert!((g - e).abs() < 1e-9, "{got:?}");
        }
    }

    #[test]
    fn too_few_and_degenerate() {
        let dates: Vec<_> = (0..5).map(|i| d(2020, 5, 1) + Days::new(i * 10)).collect();
        let s = series_from(&dates, |_| 1.0);
        assert_eq!(
            fit_harmonic(&s, year_window()).unwrap_err(),
            FitError::InsufficientObservations { n: 5 }
        );
        // out-of-window samples do not count
        let dates: Vec<_> = (0..8).map(|i| d(2021, 1, 1) + Days::new(i * 10)).collect();
        let s = series_from(&dates, |_| 1.0);
        assert!(matches!(
            fit_harmonic(&s, year_window()),
            Err(FitError::InsufficientObservations { n: 0 })
        ));
        let same_time: Vec<(f64, f64)> = (0..8).map(|i| (0.3, i as f64)).collect();
        assert_eq!(fit_coefficients(&same_time).unwrap_err(), FitError::DegenerateDesign);
        let err = fit_coefficients(&same_time[..3]).unwrap_err();
        assert_eq!(err.to_string(), "insufficient observations: 3 in window, need at least 6");
    }

    #[test]
    fn eval_examples() {
        let fit = curve([1.0, 1.0, 0.0, 0.0, 0.0]);
        let at = |t: f64| fit.coefficients().eval(t);
        assert!((at(0.0) - 2.0).abs() < 1e-15);
        assert!((at(0.25) - 1.0).abs() < 1e-15);
        assert!(at(0.5).abs() < 1e-15);
        assert!((eval_harmonic(&fit, d(2020, 1, 1)) - 2.0).abs() < 1e-15);
    }

    #[test]
    fn integral_examples() {
        let constant = curve([2.0, 0.0, 0.0, 0.0, 0.0]);
        let v = harmonic_integral(&constant, d(2020, 6, 1), d(2020, 7, 1)).unwrap();
        assert!((v - 2.0 * 30.0 / 365.25).abs() < 1e-14);
        assert!((v - 0.164271).abs() < 1e-6);

        let cosine = curve([0.0, 1.0, 0.0, 0.0, 0.0]);
        let coefs = cosine.coefficients();
        let full = coefs.antiderivative(1.0) - coefs.antiderivative(0.0);
        assert!(full.abs() < 1e-12);

        assert!(matches!(
            harmonic_integral(&constant, d(2020, 7, 1), d(2020, 7, 1)),
            Err(FitError::InvalidSpan { .. })
        ));
    }

    #[test]
    fn phenology_examples() {
        let m = phenology_metrics(&curve([5.0, 0.0, 0.0, 0.0, 0.0]));
        assert_eq!(m.peak_value, 5.0);
        assert_eq!(m.peak_date, d(2020, 1, 1), "ties break to the earliest day");
        assert_eq!((m.b30, m.a30), (5.0, 5.0));
        assert!((m.b30_int - 5.0 * 30.0 / 365.25).abs() < 1e-13);
        assert!((m.a30_int - 5.0 * 30.0 / 365.25).abs() < 1e-13);

        let m = phenology_metrics(&curve([0.0, 1.0, 0.0, 0.0, 0.0]));
        assert_eq!(m.peak_date, d(2020, 1, 1));
        assert!((m.peak_value - 1.0).abs() < 1e-15);
        let expected = (2.0 * PI * 30.0 / 365.25).cos();
        assert!((m.a30 - expected).abs() < 1e-12);
        assert!((expected - 0.869_764).abs() < 1e-6);
        // b30 lies before the window and is evaluated without clipping
        assert!((m.b30 - expected).abs() < 1e-12);
    }

    #[test]
    fn extrema_examples() {
        let s = ObservationSeries::new(
            "u",
            SpectralBand::Red,
            vec![(d(2020, 4, 30), 0.9), (d(2020, 5, 3), 0.2), (d(2020, 5, 20), 0.6)],
        )
        .unwrap();
        let may = YearMonth::new(2020, 5);
        assert_eq!(monthly_extrema(ExtremaSource::Raw(&s), may).unwrap(), (0.2, 0.6));
        assert_eq!(
            monthly_extrema(ExtremaSource::Raw(&s), YearMonth::new(2020, 6)).unwrap_err(),
            FitError::MissingMonth { year: 2020, month: 6 }
        );

        let constant = curve([1.0, 0.0, 0.0, 0.0, 0.0]);
        assert_eq!(monthly_extrema(ExtremaSource::Fitted(&constant), may).unwrap(), (1.0, 1.0));
        assert!(matches!(
            monthly_extrema(ExtremaSource::Fitted(&constant), YearMonth::new(2021, 5)),
            Err(FitError::MonthOutsideWindow { .. })
        ));

        let cosine = curve([0.0, 1.0, 0.0, 0.0, 0.0]);
        let (lo, hi) = monthly_extrema(ExtremaSource::Fitted(&cosine), YearMonth::new(2020, 1)).unwrap();
        assert!((hi - 1.0).abs() < 1e-15);
        // fine-grid oracle: 0.01-day scan of the known curve over Jan 1..Jan 31
        let oracle_min = (0..=3000)
            .map(|i| (2.0 * PI * (i as f64 * 0.01) / 365.25).cos())
            .fold(f64::INFINITY, f64::min);
        assert!((lo - oracle_min).abs() < 1e-12);
        assert!((lo - (2.0 * PI * 30.0 / 365.25).cos()).abs() < 1e-12);
    }

    fn coefs() -> impl Strategy<Value = [f64; 5]> {
        (0.2f64..1.0, -0.3f64..0.3, -0.3f64..0.3, -0.15f64..0.15, -0.15f64..0.15)
            .prop_map(|(c, a1, b1, a2, b2)| [c, a1, b1, a2, b2])
    }

    proptest! {
        #[test]
        fn integral_is_additive(c in coefs(), a in 0u64..200, b in 1u64..200, e in 1u64..200) {
            let fit = curve(c);
            let x = d(2020, 1, 1) + Days::new(a);
            let y = x + Days::new(b);
            let z = y + Days::new(e);
            let whole = harmonic_integral(&fit, x, z).unwrap();
            let parts = harmonic_integral(&fit, x, y).unwrap() + harmonic_integral(&fit, y, z).unwrap();
            prop_assert!((whole - parts).abs() < 1e-12);
        }

        #[test]
        fn curve_is_one_year_periodic(c in coefs(), t in -2.0f64..3.0) {
            let k = HarmonicCoefficients::from_array(c);
            prop_assert!((k.eval(t) - k.eval(t + 1.0)).abs() < 1e-9);
        }

        #[test]
        fn month_extrema_match_fine_grid(c in coefs(), m in 1u32..=12) {
            let fit = curve(c);
            let month = YearMonth::new(2020, m);
            let (lo, hi) = monthly_extrema(ExtremaSource::Fitted(&fit), month).unwrap();
            let t0 = fit.t(month.first_day());
            let steps = (month.days() - 1) * 100;
            let k = fit.coefficients();
            let grid: Vec<f64> = (0..=steps).map(|i| k.eval(t0 + i as f64 * 0.01 / DAYS_PER_YEAR)).collect();
            let glo = grid.iter().copied().fold(f64::INFINITY, f64::min);
            let ghi = grid.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            prop_assert!(lo <= glo + 1e-12 && hi >= ghi - 1e-12);
            prop_assert!((lo - glo).abs() < 1e-8 && (hi - ghi).abs() < 1e-8);
        }

        #[test]
        fn peak_is_grid_maximum(c in coefs()) {
            let fit = curve(c);
            let m = phenology_metrics(&fit);
            let grid_max = fit.window.days().map(|x| eval_harmonic(&fit, x)).fold(f64::NEG_INFINITY, f64::max);
            prop_assert_eq!(m.peak_value, grid_max);
        }

        #[test]
        fn ols_is_locally_optimal(
            c in coefs(),
            noise in prop::collection::vec(-0.05f64..0.05, 25),
            gaps in prop::collection::vec(5u64..14, 25),
        ) {
            let w = SeasonWindow::new(d(2020, 4, 1), d(2020, 10, 31)).unwrap();
            let truth = curve(c);
            let mut day = w.start();
            let mut pts = Vec::new();
            for (n, g) in noise.iter().zip(&gaps) {
                if day > w.end() { break; }
                pts.push((day, eval_harmonic(&truth, day) + n));
                day = day + Days::new(*g);
            }
            let s = ObservationSeries::new("u", SpectralBand::Ndvi, pts.clone()).unwrap();
            let fit = fit_harmonic(&s, w).unwrap();
            let base = fit.residual_sum_of_squares(&pts);
            for k in 0..5 {
                for delta in [1e-3, -1e-3] {
                    let mut arr = fit.coefficients().to_array();
                    arr[k] += delta;
                    let perturbed = HarmonicFit::from_coefficients(HarmonicCoefficients::from_array(arr), fit.band, w);
                    prop_assert!(perturbed.residual_sum_of_squares(&pts) >= base);
                }
            }
        }
    }
}
