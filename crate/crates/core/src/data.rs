//! Interval-censored observations, datasets, evaluation grids and CSV I/O.
//!
//! An observation records that the event time lies in `(lower, upper]`.
//! `upper` may be `+inf` (right-censored), `lower` may be `0`
//! (left-censored), and `lower == upper` marks an exactly observed time.
//!
//! On disk a dataset is a CSV file with header `l,r`. The upper column
//! accepts `inf`, `Inf` or an empty field for `+inf`, and lines starting with
//! `#` are skipped.

use std::cmp::Ordering;
use std::io::{Read, Write};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::scalar::Scalar;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CensoringKind {
    Exact,
    LeftCensored,
    RightCensored,
    Interval,
}

impl CensoringKind {
    /// Classification as a pure function of the endpoints.
    ///
    /// `(0, inf)` carries no information; it is reported as right-censored.
    pub fn classify<T: Scalar>(lower: T, upper: T) -> Self {
        if lower == upper {
            CensoringKind::Exact
        } else if upper.is_infinite() {
            CensoringKind::RightCensored
        } else if lower == T::zero() {
            CensoringKind::LeftCensored
        } else {
            CensoringKind::Interval
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Error)]
pub enum ObservationError {
    #[error("lower endpoint is negative")]
    NegativeLower,
    #[error("lower endpoint is not finite")]
    LowerNotFinite,
    #[error("endpoint is NaN")]
    NotANumber,
    #[error("upper < lower")]
    UpperBelowLower,
}

#[derive(Debug, Error)]
pub enum DataError {
    #[error("dataset is empty")]
    Empty,
    #[error("{source} at row {row}")]
    Invalid {
        row: usize,
        #[source]
        source: ObservationError,
    },
    #[error("non-numeric value {value:?} in column {column} at row {row}")]
    NonNumeric {
        row: usize,
        column: &'static str,
        value: String,
    },
    #[error("expected 2 fields at row {row}, found {found}")]
    FieldCount { row: usize, found: usize },
    #[error("expected header `l,r`, found `{0}`")]
    BadHeader(String),
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
    #[error("dataset has no positive finite endpoint to span a grid")]
    NoFiniteEndpoints,
    #[error("invalid grid: {0}")]
    InvalidGrid(&'static str),
}

/// One censoring interval `(lower, upper]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Observation<T> {
    lower: T,
    upper: T,
    kind: CensoringKind,
}

impl<T: Scalar> Observation<T> {
    pub fn new(lower: T, upper: T) -> Result<Self, ObservationError> {
        if lower.is_nan() || upper.is_nan() {
            return Err(ObservationError::NotANumber);
        }
        if !lower.is_finite() {
            return Err(ObservationError::LowerNotFinite);
        }
        if lower < T::zero() {
            return Err(ObservationError::NegativeLower);
        }
        if upper < lower {
            return Err(ObservationError::UpperBelowLower);
        }
        Ok(Self {
            lower,
            upper,
            kind: CensoringKind::classify(lower, upper),
        })
    }

    pub fn exact(t: T) -> Result<Self, ObservationError> {
        Self::new(t, t)
    }

    pub fn right_censored(lower: T) -> Result<Self, ObservationError> {
        Self::new(lower, T::infinity())
    }

    #[inline]
    pub fn lower(&self) -> T {
        self.lower
    }

    #[inline]
    pub fn upper(&self) -> T {
        self.upper
    }

    #[inline]
    pub fn kind(&self) -> CensoringKind {
        self.kind
    }

    #[inline]
    pub fn is_exact(&self) -> bool {
        self.kind == CensoringKind::Exact
    }

    /// `(0, inf)`: compatible with every distribution function.
    pub fn is_uninformative(&self) -> bool {
        self.lower == T::zero() && self.upper.is_infinite()
    }

    /// Midpoint used to rank observations when a chain is started.
    /// `t_max` replaces `inf` so right-censored observations rank by `lower`.
    pub fn midpoint(&self, t_max: T) -> T {
        let two = T::of(2.0);
        if self.upper.is_infinite() {
            self.lower + t_max / two
        } else {
            (self.lower + self.upper) / two
        }
    }

    /// Ordering key of the open end. An exact time `t` behaves as `(t-, t]`,
    /// so its open end sits strictly below every other endpoint at `t`.
    #[inline]
    pub(crate) fn lower_key(&self) -> Endpoint<T> {
        Endpoint {
            value: self.lower,
            tier: if self.is_exact() { 0 } else { 2 },
        }
    }

    #[inline]
    pub(crate) fn upper_key(&self) -> Endpoint<T> {
        Endpoint {
            value: self.upper,
            tier: 1,
        }
    }

    /// `self` lies entirely before `other`: `upper(self) <= lower(other)`,
    /// with exact observations treated as `(t-, t]`.
    #[inline]
    pub fn precedes(&self, other: &Self) -> bool {
        self.upper_key() <= other.lower_key()
    }
}

/// Endpoint with a tie-breaking tier. At equal values the order is
/// exact open end < closing end < regular open end.
#[derive(Debug, Clone, Copy, PartialEq)]
pub(crate) struct Endpoint<T> {
    pub value: T,
    pub tier: u8,
}

impl<T: Scalar> PartialOrd for Endpoint<T> {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(
            self.value
                .cmp_total(&other.value)
                .then(self.tier.cmp(&other.tier)),
        )
    }
}

impl<T: Scalar> Endpoint<T> {
    pub fn cmp_total(&self, other: &Self) -> Ordering {
        self.partial_cmp(other).unwrap_or(Ordering::Equal)
    }
}

/// A validated, non-empty collection of observations in input order.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset<T> {
    observations: Vec<Observation<T>>,
}

impl<T: Scalar> Dataset<T> {
    pub fn new(observations: Vec<Observation<T>>) -> Result<Self, DataError> {
        if observations.is_empty() {
            return Err(DataError::Empty);
        }
        Ok(Self { observations })
    }

    /// Build from raw `(lower, upper)` pairs; rows are numbered from 1.
    pub fn from_pairs<I>(pairs: I) -> Result<Self, DataError>
    where
        I: IntoIterator<Item = (T, T)>,
    {
        let observations = pairs
            .into_iter()
            .enumerate()
            .map(|(i, (l, r))| {
                Observation::new(l, r).map_err(|source| DataError::Invalid { row: i + 1, source })
            })
            .collect::<Result<Vec<_>, _>>()?;
        Self::new(observations)
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.observations.len()
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.observations.is_empty()
    }

    #[inline]
    pub fn observations(&self) -> &[Observation<T>] {
        &self.observations
    }

    pub fn iter(&self) -> std::slice::Iter<'_, Observation<T>> {
        self.observations.iter()
    }

    /// Largest finite endpoint over both columns.
    pub fn max_finite_endpoint(&self) -> T {
        self.observations
            .iter()
            .flat_map(|o| [o.lower, o.upper])
            .filter(|x| x.is_finite())
            .fold(T::zero(), T::max)
    }

    pub fn uninformative_count(&self) -> usize {
        self.observations.iter().filter(|o| o.is_uninformative()).count()
    }

    /// True when every observation is left- or right-censored.
    pub fn is_current_status(&self) -> bool {
        self.observations.iter().all(|o| {
            matches!(
                o.kind,
                CensoringKind::LeftCensored | CensoringKind::RightCensored
            )
        })
    }
}

impl<'a, T> IntoIterator for &'a Dataset<T> {
    type Item = &'a Observation<T>;
    type IntoIter = std::slice::Iter<'a, Observation<T>>;

    fn into_iter(self) -> Self::IntoIter {
        self.observations.iter()
    }
}

fn parse_field<T: Scalar>(raw: &str, row: usize, column: &'static str) -> Result<T, DataError> {
    let trimmed = raw.trim();
    if column == "r" && trimmed.is_empty() {
        return Ok(T::infinity());
    }
    match trimmed.parse::<T>() {
        Ok(v) if !v.is_nan() => Ok(v),
        _ => Err(DataError::NonNumeric {
            row,
            column,
            value: raw.to_string(),
        }),
    }
}

/// Read a dataset from CSV text with header `l,r`.
pub fn parse_dataset<T: Scalar, R: Read>(source: R) -> Result<Dataset<T>, DataError> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .comment(Some(b'#'))
        .trim(csv::Trim::All)
        .flexible(true)
        .from_reader(source);

    let headers = reader.headers()?.clone();
    if headers.is_empty() {
        return Err(DataError::Empty);
    }
    if headers.len() != 2 || &headers[0] != "l" || &headers[1] != "r" {
        return Err(DataError::BadHeader(headers.iter().collect::<Vec<_>>().join(",")));
    }

    let mut observations = Vec::new();
    for (i, record) in reader.records().enumerate() {
        let record = record?;
        let row = i + 1;
        if record.len() != 2 {
            return Err(DataError::FieldCount {
                row,
                found: record.len(),
            });
        }
        let l = parse_field::<T>(&record[0], row, "l")?;
        let r = parse_field::<T>(&record[1], row, "r")?;
        let obs = Observation::new(l, r).map_err(|source| DataError::Invalid { row, source })?;
        observations.push(obs);
    }
    Dataset::new(observations)
}

/// Write a dataset in the format accepted by [`parse_dataset`].
pub fn write_dataset<T: Scalar, W: Write>(ds: &Dataset<T>, mut sink: W) -> std::io::Result<()> {
    writeln!(sink, "l,r")?;
    for o in ds {
        if o.upper.is_infinite() {
            writeln!(sink, "{},inf", o.lower)?;
        } else {
            writeln!(sink, "{},{}", o.lower, o.upper)?;
        }
    }
    Ok(())
}

/// Strictly increasing evaluation times, at least two of them.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct TimeGrid<T> {
    times: Vec<T>,
}

impl<T: Scalar> TimeGrid<T> {
    pub fn new(times: Vec<T>) -> Result<Self, DataError> {
        if times.len() < 2 {
            return Err(DataError::InvalidGrid("need at least two points"));
        }
        if times.iter().any(|t| !t.is_finite() || *t < T::zero()) {
            return Err(DataError::InvalidGrid("times must be finite and non-negative"));
        }
        if times.windows(2).any(|w| w[0] >= w[1]) {
            return Err(DataError::InvalidGrid("times must be strictly increasing"));
        }
        Ok(Self { times })
    }

    /// `points` equally spaced times on `[start, end]`.
    pub fn uniform(start: T, end: T, points: usize) -> Result<Self, DataError> {
        if points < 2 {
            return Err(DataError::InvalidGrid("need at least two points"));
        }
        let steps = T::of((points - 1) as f64);
        let span = end - start;
        let mut times: Vec<T> = (0..points)
            .map(|k| start + span * T::of(k as f64) / steps)
            .collect();
        times[points - 1] = end;
        Self::new(times)
    }

    #[inline]
    pub fn times(&self) -> &[T] {
        &self.times
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.times.len()
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    /// Piecewise-linear evaluation of `values` (one per grid time) at `t`,
    /// held constant outside the grid.
    pub fn interpolate(&self, values: &[T], t: T) -> T {
        debug_assert_eq!(values.len(), self.times.len());
        let m = self.times.len();
        if t <= self.times[0] {
            return values[0];
        }
        if t >= self.times[m - 1] {
            return values[m - 1];
        }
        let hi = self.times.partition_point(|&x| x <= t);
        let lo = hi - 1;
        let (t0, t1) = (self.times[lo], self.times[hi]);
        let w = (t - t0) / (t1 - t0);
        values[lo] + (values[hi] - values[lo]) * w
    }
}

/// `points` equally spaced times spanning `[0, max finite endpoint]`.
pub fn default_grid<T: Scalar>(ds: &Dataset<T>, points: usize) -> Result<TimeGrid<T>, DataError> {
    if points < 2 {
        return Err(DataError::InvalidGrid("need at least two points"));
    }
    let t_max = ds.max_finite_endpoint();
    if t_max <= T::zero() {
        return Err(DataError::NoFiniteEndpoints);
    }
    TimeGrid::uniform(T::zero(), t_max, points)
}
