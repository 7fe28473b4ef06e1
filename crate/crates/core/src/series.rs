//! Observed time series with an explicit observation mask.
//!
//! Missing samples are tracked by the mask only; the numeric payload at a
//! masked position is never read by any routine in this crate. Series are
//! indexed uniformly by `t = 0..N-1`.

use std::fmt::Write as _;
use std::path::Path;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};
use crate::scalar::Real;

/// Shortest series accepted anywhere (second-order differencing needs four points).
pub const MIN_LEN: usize = 4;

/// A uniformly sampled series plus its observation mask (`true` = observed).
///
/// Equality compares the mask and the observed values only.
#[derive(Debug, Clone)]
pub struct ObservedSeries<T> {
    values: Vec<T>,
    mask: Vec<bool>,
}

impl<T: PartialEq> PartialEq for ObservedSeries<T> {
    fn eq(&self, other: &Self) -> bool {
        self.mask == other.mask
            && self
                .values
                .iter()
                .zip(&other.values)
                .zip(&self.mask)
                .all(|((a, b), &m)| !m || a == b)
    }
}

impl<T: Real> ObservedSeries<T> {
    pub fn new(values: Vec<T>, mask: Vec<bool>) -> Result<Self> {
        if values.len() != mask.len() {
            return Err(Error::LengthMismatch {
                values: values.len(),
                mask: mask.len(),
            });
        }
        if values.len() < MIN_LEN {
            return Err(Error::TooShort {
                len: values.len(),
                min: MIN_LEN,
            });
        }
        if !mask.iter().any(|&m| m) {
            return Err(Error::NoObservations);
        }
        if let Some(index) = (0..values.len()).find(|&i| mask[i] && !values[i].is_finite()) {
            return Err(Error::NonFinite { index });
        }
        Ok(Self { values, mask })
    }

    pub fn fully_observed(values: Vec<T>) -> Result<Self> {
        let mask = vec![true; values.len()];
        Self::new(values, mask)
    }

    /// Builds a series from optional samples; `None` becomes a masked zero.
    pub fn from_options(samples: &[Option<T>]) -> Result<Self> {
        let values = samples.iter().map(|v| v.unwrap_or_else(T::zero)).collect();
        let mask = samples.iter().map(Option::is_some).collect();
        Self::new(values, mask)
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Raw payload, including arbitrary placeholders at masked positions.
    pub fn values(&self) -> &[T] {
        &self.values
    }

    pub fn mask(&self) -> &[bool] {
        &self.mask
    }

    pub fn is_observed(&self, t: usize) -> bool {
        self.mask[t]
    }

    pub fn get(&self, t: usize) -> Option<T> {
        self.mask[t].then(|| self.values[t])
    }

    pub fn observed_count(&self) -> usize {
        self.mask.iter().filter(|&&m| m).count()
    }

    pub fn is_fully_observed(&self) -> bool {
        self.mask.iter().all(|&m| m)
    }

    /// `(t, y_t)` for every observed position.
    pub fn observed(&self) -> impl Iterator<Item = (usize, T)> + '_ {
        self.values
            .iter()
            .zip(&self.mask)
            .enumerate()
            .filter(|(_, (_, &m))| m)
            .map(|(t, (&v, _))| (t, v))
    }

    /// Samples as options, `None` where masked.
    pub fn to_options(&self) -> Vec<Option<T>> {
        (0..self.len()).map(|t| self.get(t)).collect()
    }

    /// Zero-filled payload: `y_t * I_t`.
    pub fn zero_filled(&self) -> Vec<T> {
        self.values
            .iter()
            .zip(&self.mask)
            .map(|(&v, &m)| if m { v } else { T::zero() })
            .collect()
    }

    /// Applies `f` to every observed value, keeping the mask.
    pub fn map_observed(&self, mut f: impl FnMut(usize, T) -> T) -> Self {
        let values = self
            .values
            .iter()
            .zip(&self.mask)
            .enumerate()
            .map(|(t, (&v, &m))| if m { f(t, v) } else { T::zero() })
            .collect();
        Self {
            values,
            mask: self.mask.clone(),
        }
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string(self)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }

    /// One-column CSV with a `value` header; missing samples are empty cells.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("value\n");
        for v in self.to_options() {
            if let Some(v) = v {
                let _ = write!(out, "{v}");
            }
            out.push('\n');
        }
        out
    }
}

#[derive(Serialize, Deserialize)]
struct SeriesRepr<T> {
    values: Vec<Option<T>>,
    mask: Vec<u8>,
}

impl<T: Real> Serialize for ObservedSeries<T> {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        SeriesRepr {
            values: self.to_options(),
            mask: self.mask.iter().map(|&m| u8::from(m)).collect(),
        }
        .serialize(serializer)
    }
}

impl<'de, T: Real> Deserialize<'de> for ObservedSeries<T> {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        use serde::de::Error as _;
        let repr = SeriesRepr::<T>::deserialize(deserializer)?;
        if repr.values.len() != repr.mask.len() {
            return Err(D::Error::custom("values and mask lengths differ"));
        }
        let mut values = Vec::with_capacity(repr.values.len());
        let mut mask = Vec::with_capacity(repr.mask.len());
        for (t, (v, m)) in repr.values.into_iter().zip(repr.mask).enumerate() {
            let observed = match m {
                0 => false,
                1 => true,
                other => return Err(D::Error::custom(format!("mask[{t}] = {other}, expected 0 or 1"))),
            };
            match (observed, v) {
                (true, Some(v)) => values.push(v),
                (true, None) => {
                    return Err(D::Error::custom(format!("mask[{t}] = 1 but value is null")))
                }
                (false, _) => values.push(T::zero()),
            }
            mask.push(observed);
        }
        ObservedSeries::new(values, mask).map_err(D::Error::custom)
    }
}

/// A maximal run of missing samples.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct MissingBlock {
    pub start: usize,
    pub len: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MissingBlockReport {
    pub blocks: Vec<MissingBlock>,
    pub max_block_len: usize,
    pub missing_ratio: f64,
    /// `max_block_len < floor(N / 3)`: the regime where a single block cannot
    /// zero out any pair count.
    pub within_safe_regime: bool,
}

pub fn scan_missing_blocks<T: Real>(s: &ObservedSeries<T>) -> MissingBlockReport {
    scan_mask(s.mask())
}

/// Block scan over a bare mask.
pub fn scan_mask(mask: &[bool]) -> MissingBlockReport {
    let mut blocks = Vec::new();
    let mut t = 0;
    while t < mask.len() {
        if mask[t] {
            t += 1;
            continue;
        }
        let start = t;
        while t < mask.len() && !mask[t] {
            t += 1;
        }
        blocks.push(MissingBlock {
            start,
            len: t - start,
        });
    }
    let max_block_len = blocks.iter().map(|b| b.len).max().unwrap_or(0);
    let missing: usize = blocks.iter().map(|b| b.len).sum();
    let n = mask.len();
    MissingBlockReport {
        blocks,
        max_block_len,
        missing_ratio: if n == 0 { 0.0 } else { missing as f64 / n as f64 },
        within_safe_regime: max_block_len < n / 3,
    }
}

/// Mean over observed positions only.
pub fn observed_mean<T: Real>(s: &ObservedSeries<T>) -> T {
    let (sum, count) = s
        .observed()
        .fold((T::zero(), 0usize), |(acc, c), (_, v)| (acc + v, c + 1));
    sum / T::from_count(count)
}

/// Fills gaps by linear interpolation between the nearest observed neighbours.
/// Leading and trailing gaps take the nearest observed value.
pub fn linear_interpolate<T: Real>(s: &ObservedSeries<T>) -> Result<ObservedSeries<T>> {
    let observed: Vec<(usize, T)> = s.observed().collect();
    if observed.len() < 2 {
        return Err(Error::TooFewObserved {
            needed: 2,
            found: observed.len(),
        });
    }
    let n = s.len();
    let mut out = vec![T::zero(); n];
    let (first_t, first_v) = observed[0];
    let (last_t, last_v) = observed[observed.len() - 1];
    out[..first_t].fill(first_v);
    out[last_t + 1..].fill(last_v);
    for pair in observed.windows(2) {
        let (t0, v0) = pair[0];
        let (t1, v1) = pair[1];
        out[t0] = v0;
        let span = T::from_count(t1 - t0);
        for (offset, slot) in out[t0 + 1..t1].iter_mut().enumerate() {
            let frac = T::from_count(offset + 1) / span;
            *slot = v0 + (v1 - v0) * frac;
        }
    }
    out[last_t] = last_v;
    ObservedSeries::fully_observed(out)
}

/// Which CSV column holds the series.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ColumnSelector {
    Index(usize),
    Name(String),
}

impl std::str::FromStr for ColumnSelector {
    type Err = std::convert::Infallible;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        Ok(match s.parse::<usize>() {
            Ok(i) => ColumnSelector::Index(i),
            Err(_) => ColumnSelector::Name(s.to_string()),
        })
    }
}

const MISSING_MARKERS: [&str; 4] = ["", "NaN", "nan", "null"];

fn is_missing_marker(cell: &str) -> bool {
    MISSING_MARKERS.contains(&cell)
}

fn split_cells(line: &str) -> Vec<&str> {
    line.split(',')
        .map(|c| c.trim().trim_matches('"').trim())
        .collect()
}

pub fn load_csv<T: Real>(path: impl AsRef<Path>, column: Option<&ColumnSelector>) -> Result<ObservedSeries<T>> {
    let text = std::fs::read_to_string(path)?;
    parse_csv(&text, column)
}

/// Parses CSV text with an optional header row. Blank cells, `NaN`, `nan`
/// and `null` are missing; anything else must parse as a number.
pub fn parse_csv<T: Real>(text: &str, column: Option<&ColumnSelector>) -> Result<ObservedSeries<T>> {
    let text = text.strip_prefix('\u{feff}').unwrap_or(text);
    let lines: Vec<&str> = text.lines().map(|l| l.trim_end_matches('\r')).collect();
    if lines.is_empty() {
        return Err(Error::TooShort { len: 0, min: MIN_LEN });
    }

    let first = split_cells(lines[0]);
    let (col, body_start) = match column {
        Some(ColumnSelector::Name(name)) => {
            let idx = first
                .iter()
                .position(|c| c == name)
                .ok_or_else(|| Error::MissingColumn(name.clone()))?;
            (idx, 1)
        }
        Some(ColumnSelector::Index(i)) => {
            let looks_like_header = first
                .get(*i)
                .is_some_and(|c| !is_missing_marker(c) && c.parse::<T>().is_err());
            (*i, usize::from(looks_like_header))
        }
        None => {
            let looks_like_header = first
                .first()
                .is_some_and(|c| !is_missing_marker(c) && c.parse::<T>().is_err());
            (0, usize::from(looks_like_header))
        }
    };

    let mut samples = Vec::with_capacity(lines.len());
    for (row, line) in lines.iter().enumerate().skip(body_start) {
        let cells = split_cells(line);
        let cell = cells.get(col).copied().unwrap_or("");
        if is_missing_marker(cell) {
            samples.push(None);
        } else {
            let v = cell.parse::<T>().map_err(|_| Error::Parse {
                row: row + 1,
                cell: cell.to_string(),
            })?;
            samples.push(Some(v));
        }
    }
    ObservedSeries::from_options(&samples)
}
