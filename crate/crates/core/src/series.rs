//! Time-series data model and the elementary transforms that feed the
//! analysis: price → log-price → returns → profile, slicing and seeded
//! return shuffling.

use std::fmt;

use chrono::NaiveDate;
use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Representation {
    Price,
    LogPrice,
    Return,
    Profile,
}

impl Representation {
    pub fn as_str(self) -> &'static str {
        match self {
            Representation::Price => "price",
            Representation::LogPrice => "log-price",
            Representation::Return => "return",
            Representation::Profile => "profile",
        }
    }
}

impl fmt::Display for Representation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// An ordered sequence of finite samples treated as equally spaced ticks.
///
/// Constructed through [`Series::new`] or [`Series::with_timestamps`], which
/// enforce finiteness, positivity of prices and alignment of timestamps.
/// Values are immutable afterwards.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Series {
    values: Vec<f64>,
    representation: Representation,
    label: String,
    timestamps: Option<Vec<NaiveDate>>,
}

impl Series {
    pub fn new(
        values: Vec<f64>,
        representation: Representation,
        label: impl Into<String>,
    ) -> Result<Self> {
        if let Some(index) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite { index });
        }
        if representation == Representation::Price {
            if let Some(index) = values.iter().position(|&v| v <= 0.0) {
                return Err(Error::NonPositiveValue {
                    index,
                    value: values[index],
                });
            }
        }
        Ok(Series {
            values,
            representation,
            label: label.into(),
            timestamps: None,
        })
    }

    pub fn with_timestamps(
        values: Vec<f64>,
        representation: Representation,
        label: impl Into<String>,
        timestamps: Vec<NaiveDate>,
    ) -> Result<Self> {
        if timestamps.len() != values.len() {
            return Err(Error::Timestamps(format!(
                "{} timestamps for {} values",
                timestamps.len(),
                values.len()
            )));
        }
        if let Some(i) = timestamps.windows(2).position(|w| w[0] >= w[1]) {
            return Err(Error::Timestamps(format!(
                "dates not strictly increasing at {} -> {}",
                timestamps[i],
                timestamps[i + 1]
            )));
        }
        let mut series = Series::new(values, representation, label)?;
        series.timestamps = Some(timestamps);
        Ok(series)
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn representation(&self) -> Representation {
        self.representation
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn timestamps(&self) -> Option<&[NaiveDate]> {
        self.timestamps.as_deref()
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn relabel(mut self, label: impl Into<String>) -> Self {
        self.label = label.into();
        self
    }

    /// Same samples reinterpreted under another representation tag.
    pub fn reinterpret(self, representation: Representation) -> Result<Self> {
        let Series {
            values,
            label,
            timestamps,
            ..
        } = self;
        let mut out = Series::new(values, representation, label)?;
        out.timestamps = timestamps;
        Ok(out)
    }

    fn derived(&self, values: Vec<f64>, representation: Representation) -> Series {
        Series {
            values,
            representation,
            label: self.label.clone(),
            timestamps: None,
        }
    }
}

/// Half-open index range `[start, end)` into a series.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SliceSpec {
    pub start: usize,
    pub end: usize,
}

impl SliceSpec {
    pub fn new(start: usize, end: usize) -> Self {
        SliceSpec { start, end }
    }

    fn check(&self, len: usize) -> Result<()> {
        if self.start < self.end && self.end <= len {
            Ok(())
        } else {
            Err(Error::OutOfRange {
                start: self.start,
                end: self.end,
                len,
            })
        }
    }
}

pub fn to_log(series: &Series) -> Result<Series> {
    if let Some(index) = series.values.iter().position(|&v| v <= 0.0) {
        return Err(Error::NonPositiveValue {
            index,
            value: series.values[index],
        });
    }
    if series.representation != Representation::Price {
        return Err(Error::WrongRepresentation {
            expected: "price",
            found: series.representation,
        });
    }
    let mut out = series.derived(
        series.values.iter().map(|v| v.ln()).collect(),
        Representation::LogPrice,
    );
    out.timestamps = series.timestamps.clone();
    Ok(out)
}

/// Inverse of [`to_log`]: `exp` of a log-price series, timestamps kept.
pub fn to_price(series: &Series) -> Result<Series> {
    if series.representation != Representation::LogPrice {
        return Err(Error::WrongRepresentation {
            expected: "log-price",
            found: series.representation,
        });
    }
    let values: Vec<f64> = series.values.iter().map(|v| v.exp()).collect();
    let mut out = Series::new(values, Representation::Price, series.label.clone())?;
    out.timestamps = series.timestamps.clone();
    Ok(out)
}

/// First differences `x[i+1] - x[i]`.
pub fn to_returns(series: &Series) -> Result<Series> {
    if series.representation == Representation::Return {
        return Err(Error::WrongRepresentation {
            expected: "price, log-price or profile",
            found: series.representation,
        });
    }
    if series.len() < 2 {
        return Err(Error::TooShort {
            len: series.len(),
            min: 2,
        });
    }
    let diffs = series.values.windows(2).map(|w| w[1] - w[0]).collect();
    Ok(series.derived(diffs, Representation::Return))
}

/// Cumulative sum of mean-subtracted returns.
pub fn to_profile(series: &Series) -> Result<Series> {
    if series.representation != Representation::Return {
        return Err(Error::WrongRepresentation {
            expected: "return",
            found: series.representation,
        });
    }
    if series.is_empty() {
        return Err(Error::TooShort { len: 0, min: 1 });
    }
    let mean = series.values.iter().sum::<f64>() / series.len() as f64;
    let profile = series
        .values
        .iter()
        .scan(0.0, |acc, &r| {
            *acc += r - mean;
            Some(*acc)
        })
        .collect();
    Ok(series.derived(profile, Representation::Profile))
}

/// Rebuilds a level series from returns, starting at `anchor`.
///
/// The output is tagged `representation`, which must not be `Return`.
pub fn integrate_returns(
    returns: &Series,
    anchor: f64,
    representation: Representation,
) -> Result<Series> {
    if returns.representation != Representation::Return {
        return Err(Error::WrongRepresentation {
            expected: "return",
            found: returns.representation,
        });
    }
    if representation == Representation::Return {
        return Err(Error::InvalidParams(
            "integrated returns cannot be tagged as returns".into(),
        ));
    }
    Series::new(
        integrate(&returns.values, anchor),
        representation,
        returns.label.clone(),
    )
}

pub(crate) fn integrate(returns: &[f64], anchor: f64) -> Vec<f64> {
    let mut out = Vec::with_capacity(returns.len() + 1);
    let mut level = anchor;
    out.push(level);
    for &r in returns {
        level += r;
        out.push(level);
    }
    out
}

pub fn slice(series: &Series, spec: SliceSpec) -> Result<Series> {
    spec.check(series.len())?;
    let mut out = series.derived(
        series.values[spec.start..spec.end].to_vec(),
        series.representation,
    );
    out.timestamps = series
        .timestamps
        .as_ref()
        .map(|ts| ts[spec.start..spec.end].to_vec());
    Ok(out)
}

/// Shuffle surrogate: permutes the returns uniformly at random with a seeded
/// generator and reintegrates from the original first value.
///
/// The first and last values, the length and the multiset of returns are
/// preserved; only the temporal ordering of increments is destroyed.
pub fn shuffle_returns(series: &Series, seed: u64) -> Result<Series> {
    let mut returns = to_returns(series)?.values;
    let mut rng = crate::seeded_rng(seed);
    returns.shuffle(&mut rng);
    let values = integrate(&returns, series.values[0]);
    // Floating-point reassociation can nudge a positive price to zero only in
    // pathological cases; the constructor catches that.
    let mut out = Series::new(values, series.representation, series.label.clone())?;
    out.timestamps = series.timestamps.clone();
    Ok(out)
}
