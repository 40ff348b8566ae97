//! Excision of abrupt events: differentiate, drop the event returns,
//! reintegrate from the original first value.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::series::{integrate, to_returns, Series};

/// Half-open interval `[start, end)` of return indices.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Interval {
    pub start: usize,
    pub end: usize,
}

impl Interval {
    pub fn new(start: usize, end: usize) -> Self {
        Interval { start, end }
    }

    pub fn len(&self) -> usize {
        self.end - self.start
    }

    pub fn is_empty(&self) -> bool {
        self.end <= self.start
    }
}

/// Sorted, pairwise disjoint, non-empty intervals over a return series.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "Vec<Interval>", into = "Vec<Interval>")]
pub struct ExcisionSpec {
    intervals: Vec<Interval>,
}

impl TryFrom<Vec<Interval>> for ExcisionSpec {
    type Error = Error;

    fn try_from(intervals: Vec<Interval>) -> Result<Self> {
        ExcisionSpec::new(intervals)
    }
}

impl From<ExcisionSpec> for Vec<Interval> {
    fn from(spec: ExcisionSpec) -> Self {
        spec.intervals
    }
}

impl ExcisionSpec {
    pub fn new(mut intervals: Vec<Interval>) -> Result<Self> {
        if let Some(bad) = intervals.iter().find(|i| i.is_empty()) {
            return Err(Error::InvalidParams(format!(
                "empty excision interval {}..{}",
                bad.start, bad.end
            )));
        }
        intervals.sort();
        if let Some(w) = intervals.windows(2).find(|w| w[1].start < w[0].end) {
            return Err(Error::OverlappingIntervals {
                first: (w[0].start, w[0].end),
                second: (w[1].start, w[1].end),
            });
        }
        Ok(ExcisionSpec { intervals })
    }

    pub fn empty() -> Self {
        ExcisionSpec::default()
    }

    pub fn intervals(&self) -> &[Interval] {
        &self.intervals
    }

    pub fn is_empty(&self) -> bool {
        self.intervals.is_empty()
    }

    pub fn removed_count(&self) -> usize {
        self.intervals.iter().map(Interval::len).sum()
    }

    pub fn contains(&self, index: usize) -> bool {
        self.intervals
            .iter()
            .any(|i| i.start <= index && index < i.end)
    }

    /// Both sets of intervals; they must not overlap.
    pub fn union(&self, other: &ExcisionSpec) -> Result<ExcisionSpec> {
        let mut all = self.intervals.clone();
        all.extend_from_slice(&other.intervals);
        ExcisionSpec::new(all)
    }

    /// The same intervals expressed in the index space left after `removed`
    /// has been excised. `self` must be disjoint from `removed`.
    pub fn reindex_after(&self, removed: &ExcisionSpec) -> Result<ExcisionSpec> {
        self.union(removed)?;
        let shift = |index: usize| {
            removed
                .intervals
                .iter()
                .filter(|r| r.end <= index)
                .map(Interval::len)
                .sum::<usize>()
        };
        let mut out: Vec<Interval> = self
            .intervals
            .iter()
            .map(|i| Interval::new(i.start - shift(i.start), i.end - shift(i.start)))
            .collect();
        // Intervals that were separated only by removed returns become adjacent.
        out.dedup_by(|b, a| {
            if b.start == a.end {
                a.end = b.end;
                true
            } else {
                false
            }
        });
        ExcisionSpec::new(out)
    }

    fn check_bounds(&self, return_len: usize) -> Result<()> {
        match self.intervals.last() {
            Some(last) if last.end > return_len => Err(Error::OutOfRange {
                start: last.start,
                end: last.end,
                len: return_len,
            }),
            _ => Ok(()),
        }
    }
}

/// Returns outside every interval of `spec`, in their original order.
pub fn retained_returns(returns: &[f64], spec: &ExcisionSpec) -> Result<Vec<f64>> {
    spec.check_bounds(returns.len())?;
    let mut out = Vec::with_capacity(returns.len() - spec.removed_count());
    let mut next = 0;
    for interval in &spec.intervals {
        out.extend_from_slice(&returns[next..interval.start]);
        next = interval.end;
    }
    out.extend_from_slice(&returns[next..]);
    Ok(out)
}

#[derive(Debug, Clone, PartialEq)]
pub struct Excision {
    pub series: Series,
    /// The retained input returns, bit-identical and in order.
    pub retained_returns: Vec<f64>,
    pub removed: usize,
}

pub fn excise(series: &Series, spec: &ExcisionSpec) -> Result<Series> {
    excise_detailed(series, spec).map(|e| e.series)
}

/// [`excise`] that also reports the retained returns.
///
/// Timestamps, when present, follow the retained returns: each output sample
/// carries the date at which its return ended.
pub fn excise_detailed(series: &Series, spec: &ExcisionSpec) -> Result<Excision> {
    let returns = to_returns(series)?;
    let retained = retained_returns(returns.values(), spec)?;
    if spec.is_empty() {
        return Ok(Excision {
            series: series.clone(),
            retained_returns: retained,
            removed: 0,
        });
    }
    let values = integrate(&retained, series.values()[0]);
    let label = format!("{} (excised {} returns)", series.label(), spec.removed_count());
    let out = match series.timestamps() {
        Some(ts) => {
            let kept = std::iter::once(ts[0]).chain(
                (0..returns.len())
                    .filter(|&i| !spec.contains(i))
                    .map(|i| ts[i + 1]),
            );
            Series::with_timestamps(values, series.representation(), label, kept.collect())?
        }
        None => Series::new(values, series.representation(), label)?,
    };
    Ok(Excision {
        series: out,
        retained_returns: retained,
        removed: spec.removed_count(),
    })
}
