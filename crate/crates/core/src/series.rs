//! Quarterly series data model, CSV ingestion, and the deterministic
//! transforms (growth rates, log ratios, demeaning, differencing) that feed
//! every downstream module.

use std::collections::BTreeMap;
use std::fmt;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};

/// A calendar quarter, totally ordered as (year, quarter).
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct QuarterDate {
    year: i32,
    quarter: u8,
}

impl QuarterDate {
    pub fn new(year: i32, quarter: u8) -> Result<Self> {
        if !(1..=4).contains(&quarter) {
            return Err(Error::InvalidParameter {
                detail: format!("quarter must be in 1..=4, got {quarter}"),
            });
        }
        Ok(Self { year, quarter })
    }

    pub fn year(&self) -> i32 {
        self.year
    }

    pub fn quarter(&self) -> u8 {
        self.quarter
    }

    /// The quarter immediately after this one; (y, 4) rolls over to (y+1, 1).
    pub fn next(self) -> Self {
        self.add_quarters(1)
    }

    pub fn add_quarters(self, n: i64) -> Self {
        let idx = self.index() + n;
        Self::from_index(idx)
    }

    /// Number of quarters from `earlier` to `self` (negative if earlier is later).
    pub fn quarters_since(self, earlier: Self) -> i64 {
        self.index() - earlier.index()
    }

    fn index(self) -> i64 {
        self.year as i64 * 4 + (self.quarter as i64 - 1)
    }

    fn from_index(idx: i64) -> Self {
        Self {
            year: idx.div_euclid(4) as i32,
            quarter: (idx.rem_euclid(4) + 1) as u8,
        }
    }
}

impl fmt::Display for QuarterDate {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}Q{}", self.year, self.quarter)
    }
}

impl FromStr for QuarterDate {
    type Err = Error;

    /// Accepts "1976Q1" / "1976q1" and ISO month forms "1976-03" or
    /// "1976-03-31" (month mapped to its quarter).
    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        let err = || Error::ParseDate { text: s.into() };
        if let Some(pos) = s.find(['Q', 'q']) {
            let year: i32 = s[..pos].parse().map_err(|_| err())?;
            let quarter: u8 = s[pos + 1..].parse().map_err(|_| err())?;
            return QuarterDate::new(year, quarter).map_err(|_| err());
        }
        let mut parts = s.split('-');
        let year: i32 = parts.next().ok_or_else(err)?.parse().map_err(|_| err())?;
        let month: u8 = parts.next().ok_or_else(err)?.parse().map_err(|_| err())?;
        if !(1..=12).contains(&month) {
            return Err(err());
        }
        QuarterDate::new(year, (month - 1) / 3 + 1)
    }
}

impl Serialize for QuarterDate {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        serializer.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for QuarterDate {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// What the numbers in a series mean.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum SeriesKind {
    /// Positive index levels.
    IndexLevel,
    /// Quarterly log growth rates (or arbitrary real increments).
    GrowthRate,
    /// Log of a ratio of two index levels.
    LogRatio,
}

impl SeriesKind {
    pub fn name(self) -> &'static str {
        match self {
            SeriesKind::IndexLevel => "IndexLevel",
            SeriesKind::GrowthRate => "GrowthRate",
            SeriesKind::LogRatio => "LogRatio",
        }
    }
}

/// A gapless quarterly sequence anchored at `start`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QuarterlySeries {
    start: QuarterDate,
    values: Vec<f64>,
    label: String,
    kind: SeriesKind,
}

impl QuarterlySeries {
    pub fn new(
        start: QuarterDate,
        values: Vec<f64>,
        label: impl Into<String>,
        kind: SeriesKind,
    ) -> Result<Self> {
        let label = label.into();
        if values.is_empty() {
            return Err(Error::EmptySeries);
        }
        for (i, &v) in values.iter().enumerate() {
            if !v.is_finite() {
                return Err(Error::Numeric {
                    detail: format!("non-finite value in {label:?} at {}", start.add_quarters(i as i64)),
                });
            }
            if kind == SeriesKind::IndexLevel && v <= 0.0 {
                return Err(Error::NonPositiveValue {
                    label,
                    date: start.add_quarters(i as i64),
                    value: v,
                });
            }
        }
        Ok(Self {
            start,
            values,
            label,
            kind,
        })
    }

    pub fn start(&self) -> QuarterDate {
        self.start
    }

    /// Date of the last observation.
    pub fn end(&self) -> QuarterDate {
        self.start.add_quarters(self.values.len() as i64 - 1)
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        false // non-emptiness is a construction invariant
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn kind(&self) -> SeriesKind {
        self.kind
    }

    pub fn date_at(&self, i: usize) -> QuarterDate {
        self.start.add_quarters(i as i64)
    }

    /// Index of `date` in the series, if covered.
    pub fn index_of(&self, date: QuarterDate) -> Option<usize> {
        let off = date.quarters_since(self.start);
        if off >= 0 && (off as usize) < self.values.len() {
            Some(off as usize)
        } else {
            None
        }
    }

    pub fn value_at(&self, date: QuarterDate) -> Option<f64> {
        self.index_of(date).map(|i| self.values[i])
    }

    pub fn covers(&self, date: QuarterDate) -> bool {
        self.index_of(date).is_some()
    }
}

/// A regional/national pair with identical start, length, and kind.
#[derive(Debug, Clone)]
pub struct AlignedPair {
    regional: QuarterlySeries,
    national: QuarterlySeries,
}

impl AlignedPair {
    pub fn new(regional: QuarterlySeries, national: QuarterlySeries) -> Result<Self> {
        if regional.start != national.start || regional.len() != national.len() {
            return Err(Error::Misaligned {
                detail: format!(
                    "{:?} spans {}..{} ({} obs), {:?} spans {}..{} ({} obs)",
                    regional.label,
                    regional.start(),
                    regional.end(),
                    regional.len(),
                    national.label,
                    national.start(),
                    national.end(),
                    national.len()
                ),
            });
        }
        if regional.kind != national.kind
            || !matches!(regional.kind, SeriesKind::IndexLevel | SeriesKind::GrowthRate)
        {
            return Err(Error::KindMismatch {
                expected: "matching IndexLevel or GrowthRate pair",
                got: regional.kind.name(),
            });
        }
        Ok(Self { regional, national })
    }

    pub fn regional(&self) -> &QuarterlySeries {
        &self.regional
    }

    pub fn national(&self) -> &QuarterlySeries {
        &self.national
    }
}

/// A demeaned log-ratio series together with the subtracted mean and the
/// window it was computed over.
#[derive(Debug, Clone, Serialize)]
pub struct DemeanedRatio {
    series: QuarterlySeries,
    mean: f64,
    mean_window: (QuarterDate, QuarterDate),
}

impl DemeanedRatio {
    pub fn series(&self) -> &QuarterlySeries {
        &self.series
    }

    pub fn mean(&self) -> f64 {
        self.mean
    }

    pub fn mean_window(&self) -> (QuarterDate, QuarterDate) {
        self.mean_window
    }

    /// Demeaned values; convenience passthrough.
    pub fn values(&self) -> &[f64] {
        self.series.values()
    }
}

/// Load index-level series from a CSV file.
///
/// The file must have a header row; `date_column` holds dates as "YYYYQn" or
/// ISO month strings, and each requested value column becomes one
/// `IndexLevel` series. Rows are sorted by date and must form a gapless,
/// duplicate-free quarterly sequence. Lines starting with `#` are comments.
pub fn load_csv(
    path: impl AsRef<Path>,
    date_column: &str,
    value_columns: &[String],
) -> Result<BTreeMap<String, QuarterlySeries>> {
    let mut reader = csv::ReaderBuilder::new()
        .comment(Some(b'#'))
        .trim(csv::Trim::All)
        .from_path(path.as_ref())?;

    let headers = reader.headers()?.clone();
    let col_index = |name: &str| -> Result<usize> {
        headers
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| Error::MissingColumn {
                column: name.to_string(),
            })
    };
    let date_idx = col_index(date_column)?;
    let value_idx: Vec<usize> = value_columns
        .iter()
        .map(|c| col_index(c))
        .collect::<Result<_>>()?;

    let mut rows: Vec<(QuarterDate, Vec<f64>)> = Vec::new();
    for record in reader.records() {
        let record = record?;
        let date: QuarterDate = record
            .get(date_idx)
            .ok_or_else(|| Error::MissingColumn {
                column: date_column.to_string(),
            })?
            .parse()?;
        let mut vals = Vec::with_capacity(value_idx.len());
        for (&idx, name) in value_idx.iter().zip(value_columns) {
            let raw = record.get(idx).unwrap_or("");
            if raw.is_empty() {
                return Err(Error::MissingValue {
                    column: name.clone(),
                    date,
                });
            }
            let v: f64 = raw.parse().map_err(|_| Error::Numeric {
                detail: format!("cannot parse {raw:?} in column {name:?} at {date}"),
            })?;
            vals.push(v);
        }
        rows.push((date, vals));
    }
    if rows.is_empty() {
        return Err(Error::EmptySeries);
    }
    rows.sort_by_key(|(d, _)| *d);

    // Contiguity: consecutive rows must be consecutive quarters.
    for w in rows.windows(2) {
        let expected = w[0].0.next();
        let found = w[1].0;
        if found != expected {
            return Err(Error::Contiguity { expected, found });
        }
    }

    let start = rows[0].0;
    let mut out = BTreeMap::new();
    for (j, name) in value_columns.iter().enumerate() {
        let values: Vec<f64> = rows.iter().map(|(_, v)| v[j]).collect();
        let series = QuarterlySeries::new(start, values, name.clone(), SeriesKind::IndexLevel)?;
        out.insert(name.clone(), series);
    }
    Ok(out)
}

/// Quarterly log growth of an index-level series: `ln(v_t / v_{t-1})`.
///
/// The result starts one quarter after the input and is one observation
/// shorter.
pub fn hpa(index: &QuarterlySeries) -> Result<QuarterlySeries> {
    if index.kind != SeriesKind::IndexLevel {
        return Err(Error::KindMismatch {
            expected: "IndexLevel",
            got: index.kind.name(),
        });
    }
    if index.len() < 2 {
        return Err(Error::InsufficientData {
            needed: 2,
            got: index.len(),
        });
    }
    let values: Vec<f64> = index
        .values
        .windows(2)
        .map(|w| (w[1] / w[0]).ln())
        .collect();
    QuarterlySeries::new(
        index.start.next(),
        values,
        format!("hpa({})", index.label),
        SeriesKind::GrowthRate,
    )
}

/// Log ratio of regional to national index levels.
pub fn log_ratio(pair: &AlignedPair) -> Result<QuarterlySeries> {
    if pair.regional.kind != SeriesKind::IndexLevel {
        return Err(Error::KindMismatch {
            expected: "IndexLevel",
            got: pair.regional.kind.name(),
        });
    }
    let values: Vec<f64> = pair
        .regional
        .values
        .iter()
        .zip(&pair.national.values)
        .map(|(r, n)| (r / n).ln())
        .collect();
    QuarterlySeries::new(
        pair.regional.start,
        values,
        format!("ratio({}/{})", pair.regional.label, pair.national.label),
        SeriesKind::LogRatio,
    )
}

/// Subtract the mean over `window` (default: whole series) from a log-ratio
/// series, recording the subtracted value.
pub fn demean(
    series: &QuarterlySeries,
    window: Option<(QuarterDate, QuarterDate)>,
) -> Result<DemeanedRatio> {
    if series.kind != SeriesKind::LogRatio {
        return Err(Error::KindMismatch {
            expected: "LogRatio",
            got: series.kind.name(),
        });
    }
    let (lo, hi) = window.unwrap_or((series.start(), series.end()));
    if lo > hi {
        return Err(Error::BadWindow);
    }
    let (i, j) = match (series.index_of(lo), series.index_of(hi)) {
        (Some(i), Some(j)) => (i, j),
        _ => return Err(Error::BadWindow),
    };
    let slice = &series.values[i..=j];
    let mean = slice.iter().sum::<f64>() / slice.len() as f64;
    let values: Vec<f64> = series.values.iter().map(|v| v - mean).collect();
    let series = QuarterlySeries::new(
        series.start,
        values,
        format!("demeaned({})", series.label),
        SeriesKind::LogRatio,
    )?;
    Ok(DemeanedRatio {
        series,
        mean,
        mean_window: (lo, hi),
    })
}

/// First differences; the result starts one quarter later.
pub fn diff(series: &QuarterlySeries) -> Result<QuarterlySeries> {
    if series.len() < 2 {
        return Err(Error::InsufficientData {
            needed: 2,
            got: series.len(),
        });
    }
    let values: Vec<f64> = series.values.windows(2).map(|w| w[1] - w[0]).collect();
    QuarterlySeries::new(
        series.start.next(),
        values,
        format!("diff({})", series.label),
        SeriesKind::GrowthRate,
    )
}

/// Descriptive statistics of one series.
///
/// Conventions: sample standard deviation with an (n-1) denominator, biased
/// moment ratios for skewness, kurtosis reported as excess (normal -> 0).
/// Zero-variance series report skewness/kurtosis of 0 with `degenerate` set.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SeriesSummary {
    pub label: String,
    pub count: usize,
    pub min: f64,
    pub max: f64,
    pub last: f64,
    pub mean: f64,
    pub median: f64,
    pub std_dev: f64,
    pub skewness: f64,
    pub excess_kurtosis: f64,
    pub degenerate: bool,
}

pub fn describe(series: &QuarterlySeries) -> SeriesSummary {
    let v = &series.values;
    let n = v.len();
    let mean = v.iter().sum::<f64>() / n as f64;
    let min = v.iter().cloned().fold(f64::INFINITY, f64::min);
    let max = v.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let last = *v.last().expect("series non-empty");

    let mut sorted = v.clone();
    sorted.sort_by(|a, b| a.partial_cmp(b).expect("finite values"));
    let median = if n % 2 == 1 {
        sorted[n / 2]
    } else {
        0.5 * (sorted[n / 2 - 1] + sorted[n / 2])
    };

    let m2 = v.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / n as f64;
    let m3 = v.iter().map(|x| (x - mean).powi(3)).sum::<f64>() / n as f64;
    let m4 = v.iter().map(|x| (x - mean).powi(4)).sum::<f64>() / n as f64;
    let std_dev = if n > 1 {
        (v.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1) as f64).sqrt()
    } else {
        0.0
    };
    let degenerate = m2 <= 0.0;
    let (skewness, excess_kurtosis) = if degenerate {
        (0.0, 0.0)
    } else {
        (m3 / m2.powf(1.5), m4 / (m2 * m2) - 3.0)
    };

    SeriesSummary {
        label: series.label.clone(),
        count: n,
        min,
        max,
        last,
        mean,
        median,
        std_dev,
        skewness,
        excess_kurtosis,
        degenerate,
    }
}
