//! MF-DFA kernel: box partitioning, per-box polynomial detrending and the
//! q-moment fluctuation function.
//!
//! For a profile of length `L` and window size `s` there are `N = L / s`
//! boxes tiling the profile from the start and another `N` tiling it from the
//! end, `2N` in total. Each box is detrended by a least-squares polynomial of
//! order `m` and contributes its residual variance `F²(s, k)`. The fluctuation
//! function is the q-th power mean of these variances:
//!
//! ```text
//! F(s, q) = { 1/(2N) Σ_k [F²(s, k)]^(q/2) }^(1/q)      q ≠ 0
//! F(s, 0) = exp{ 1/(4N) Σ_k ln F²(s, k) }
//! ```
//!
//! Boxes whose residual standard deviation falls below
//! [`MfdfaConfig::min_box_std`] are degenerate and excluded from both sums.

use std::ops::Range;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::series::{Representation, Series};

/// Switch to log-space accumulation above this `|q|`.
const LOG_SPACE_Q: f64 = 8.0;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum WindowSizes {
    /// `count` sizes spaced evenly in `ln s` from `min` to `max`, rounded and
    /// deduplicated. `max = None` means a quarter of the series length.
    LogSpaced {
        min: usize,
        max: Option<usize>,
        count: usize,
    },
    Explicit(Vec<usize>),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MfdfaConfig {
    pub order: usize,
    pub windows: WindowSizes,
    pub q_grid: Vec<f64>,
    pub min_box_std: f64,
}

impl Default for MfdfaConfig {
    fn default() -> Self {
        MfdfaConfig {
            order: 2,
            windows: WindowSizes::LogSpaced {
                min: 10,
                max: None,
                count: 40,
            },
            q_grid: q_range(-5.0, 5.0, 0.25),
            min_box_std: 1e-12,
        }
    }
}

/// `min, min + step, ..., max`, with values snapped to 1e-9 so that grid
/// points such as 0 and 2 come out exact.
pub fn q_range(min: f64, max: f64, step: f64) -> Vec<f64> {
    if !(step > 0.0) || max < min {
        return Vec::new();
    }
    let count = ((max - min) / step + 1e-9).floor() as usize + 1;
    (0..count)
        .map(|i| {
            let q = min + i as f64 * step;
            (q * 1e9).round() / 1e9
        })
        .collect()
}

pub(crate) fn q_matches(a: f64, b: f64) -> bool {
    (a - b).abs() < 1e-9
}

impl MfdfaConfig {
    pub fn with_q_grid(mut self, q_grid: Vec<f64>) -> Self {
        self.q_grid = q_grid;
        self
    }

    pub fn with_order(mut self, order: usize) -> Self {
        self.order = order;
        self
    }

    pub fn with_windows(mut self, windows: WindowSizes) -> Self {
        self.windows = windows;
        self
    }

    fn validate_static(&self) -> Result<()> {
        if !(1..=5).contains(&self.order) {
            return Err(Error::InvalidParams(format!(
                "detrending order must be in 1..=5, got {}",
                self.order
            )));
        }
        if self.q_grid.iter().any(|q| !q.is_finite())
            || self.q_grid.windows(2).any(|w| w[0] >= w[1])
        {
            return Err(Error::InvalidParams(
                "q grid must be finite and strictly increasing".into(),
            ));
        }
        for required in [0.0, 2.0] {
            if !self.q_grid.iter().any(|&q| q_matches(q, required)) {
                return Err(Error::InvalidParams(format!(
                    "q grid must contain {required}"
                )));
            }
        }
        if !(self.min_box_std > 0.0) {
            return Err(Error::InvalidParams("min_box_std must be positive".into()));
        }
        Ok(())
    }

    /// Window sizes for a profile of length `len`, checked against
    /// `order + 2 <= s <= len / 4`.
    pub fn resolve_windows(&self, len: usize) -> Result<Vec<usize>> {
        self.validate_static()?;
        let smallest = self.order + 2;
        let largest = len / 4;
        let sizes = match &self.windows {
            WindowSizes::Explicit(sizes) => {
                if sizes.is_empty() || sizes.windows(2).any(|w| w[0] >= w[1]) {
                    return Err(Error::InvalidParams(
                        "window sizes must be non-empty and strictly increasing".into(),
                    ));
                }
                if let Some(&s) = sizes.iter().find(|&&s| s < smallest) {
                    return Err(Error::InvalidParams(format!(
                        "window size {s} is below order + 2 = {smallest}"
                    )));
                }
                if let Some(&s) = sizes.iter().find(|&&s| s > largest) {
                    return Err(Error::WindowTooLarge { s, len });
                }
                sizes.clone()
            }
            &WindowSizes::LogSpaced { min, max, count } => {
                let lo = min.max(smallest);
                let hi = max.unwrap_or(largest);
                if hi > largest {
                    return Err(Error::WindowTooLarge { s: hi, len });
                }
                if hi < lo || count < 2 {
                    return Err(Error::TooShort {
                        len,
                        min: 4 * lo.max(1),
                    });
                }
                let (a, b) = ((lo as f64).ln(), (hi as f64).ln());
                let mut sizes: Vec<usize> = (0..count)
                    .map(|i| (a + (b - a) * i as f64 / (count - 1) as f64).exp().round() as usize)
                    .map(|s| s.clamp(lo, hi))
                    .collect();
                sizes.dedup();
                sizes
            }
        };
        Ok(sizes)
    }
}

/// Residual variance of one detrended box.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoxVariance {
    pub window_size: usize,
    /// 1-based: `1..=N` forward boxes, `N+1..=2N` backward boxes.
    pub box_index: usize,
    pub variance: f64,
    pub degenerate: bool,
}

/// The `2N` boxes of size `s`: `N` from the start forward, then `N` from the
/// end backward (listed in increasing position).
///
/// Requires at least two boxes per pass; the stricter `s <= len / 4` rule is
/// enforced when a [`MfdfaConfig`] is resolved.
pub fn partition_boxes(len: usize, s: usize) -> Result<Vec<Range<usize>>> {
    if s == 0 || 2 * s > len {
        return Err(Error::WindowTooLarge { s, len });
    }
    let n = len / s;
    let offset = len - n * s;
    let forward = (0..n).map(|k| k * s..(k + 1) * s);
    let backward = (0..n).map(|k| offset + k * s..offset + (k + 1) * s);
    Ok(forward.chain(backward).collect())
}

/// Least-squares polynomial detrending for boxes of a fixed size, using an
/// orthonormal polynomial basis over the abscissae `0..s`.
#[derive(Debug, Clone)]
pub struct Detrender {
    size: usize,
    order: usize,
    basis: Vec<Vec<f64>>,
}

impl Detrender {
    pub fn new(size: usize, order: usize) -> Result<Self> {
        let deficient = Error::RankDeficient { s: size, order };
        if size < order + 1 {
            return Err(deficient);
        }
        // Abscissae mapped to [-1, 1] keep the monomials well scaled.
        let half = (size as f64 - 1.0) / 2.0;
        let scale = if half > 0.0 { half } else { 1.0 };
        let x: Vec<f64> = (0..size).map(|t| (t as f64 - half) / scale).collect();

        let mut basis: Vec<Vec<f64>> = Vec::with_capacity(order + 1);
        for degree in 0..=order {
            let raw: Vec<f64> = x.iter().map(|&xi| xi.powi(degree as i32)).collect();
            let raw_norm = norm(&raw);
            let mut v = raw;
            // Two Gram-Schmidt sweeps for orthogonality to working precision.
            for _ in 0..2 {
                for b in &basis {
                    let c = dot(&v, b);
                    v.iter_mut().zip(b).for_each(|(vi, bi)| *vi -= c * bi);
                }
            }
            let n = norm(&v);
            if !(n > 1e-10 * raw_norm) {
                return Err(deficient);
            }
            v.iter_mut().for_each(|vi| *vi /= n);
            basis.push(v);
        }
        Ok(Detrender { size, order, basis })
    }

    pub fn size(&self) -> usize {
        self.size
    }

    pub fn order(&self) -> usize {
        self.order
    }

    /// Mean squared residual of `y` after removing its best polynomial fit.
    pub fn residual_variance(&self, y: &[f64]) -> f64 {
        debug_assert_eq!(y.len(), self.size);
        let mut r = y.to_vec();
        for b in &self.basis {
            let c = dot(&r, b);
            r.iter_mut().zip(b).for_each(|(ri, bi)| *ri -= c * bi);
        }
        r.iter().map(|v| v * v).sum::<f64>() / self.size as f64
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

fn require_profile(profile: &Series) -> Result<()> {
    if profile.representation() == Representation::Profile {
        Ok(())
    } else {
        Err(Error::WrongRepresentation {
            expected: "profile",
            found: profile.representation(),
        })
    }
}

/// Detrended variance of a single box of `profile`.
pub fn box_variance(
    profile: &Series,
    range: Range<usize>,
    order: usize,
    min_box_std: f64,
) -> Result<BoxVariance> {
    require_profile(profile)?;
    let len = profile.len();
    if range.start >= range.end || range.end > len {
        return Err(Error::OutOfRange {
            start: range.start,
            end: range.end,
            len,
        });
    }
    let s = range.len();
    if s < order + 2 {
        return Err(Error::InvalidParams(format!(
            "box of {s} samples is too small for order {order}"
        )));
    }
    let variance = Detrender::new(s, order)?.residual_variance(&profile.values()[range]);
    Ok(BoxVariance {
        window_size: s,
        box_index: 1,
        variance,
        degenerate: variance.sqrt() < min_box_std,
    })
}

/// All `2N` box variances at window size `s`, in box order.
pub fn box_variances(values: &[f64], s: usize, order: usize) -> Result<Vec<f64>> {
    let detrender = Detrender::new(s, order)?;
    Ok(partition_boxes(values.len(), s)?
        .into_iter()
        .map(|r| detrender.residual_variance(&values[r]))
        .collect())
}

/// q-th power mean of the retained variances, raised to `1/2` (so the result
/// is a fluctuation amplitude, not a variance).
pub fn q_moment(variances: &[f64], q: f64) -> f64 {
    let n = variances.len() as f64;
    if q == 0.0 {
        let log_sum: f64 = variances.iter().map(|v| v.ln()).sum();
        (log_sum / (2.0 * n)).exp()
    } else if q.abs() > LOG_SPACE_Q {
        let logs: Vec<f64> = variances.iter().map(|v| 0.5 * q * v.ln()).collect();
        let peak = logs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let sum: f64 = logs.iter().map(|a| (a - peak).exp()).sum();
        ((peak + (sum / n).ln()) / q).exp()
    } else {
        let sum: f64 = variances.iter().map(|v| v.powf(0.5 * q)).sum();
        (sum / n).powf(1.0 / q)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FluctuationSurface {
    pub series_len: usize,
    pub config: MfdfaConfig,
    /// Retained window sizes, increasing.
    pub window_sizes: Vec<usize>,
    pub q_grid: Vec<f64>,
    /// `values[i][j] = F(window_sizes[i], q_grid[j])`.
    pub values: Vec<Vec<f64>>,
    /// Total boxes `2N` per retained window size.
    pub box_counts: Vec<usize>,
    pub degenerate_counts: Vec<usize>,
    /// Per-box variances per retained window size, in box order.
    pub box_variances: Vec<Vec<f64>>,
    /// Window sizes dropped because every box was degenerate.
    pub dropped_windows: Vec<usize>,
}

impl FluctuationSurface {
    pub fn q_index(&self, q: f64) -> Option<usize> {
        self.q_grid.iter().position(|&g| q_matches(g, q))
    }

    /// `(s, F(s, q))` pairs for one moment order.
    pub fn column(&self, q: f64) -> Option<Vec<(usize, f64)>> {
        let j = self.q_index(q)?;
        Some(
            self.window_sizes
                .iter()
                .zip(&self.values)
                .map(|(&s, row)| (s, row[j]))
                .collect(),
        )
    }

    pub fn boxes(&self, window: usize) -> Vec<BoxVariance> {
        let Some(i) = self.window_sizes.iter().position(|&s| s == window) else {
            return Vec::new();
        };
        let floor = self.config.min_box_std;
        self.box_variances[i]
            .iter()
            .enumerate()
            .map(|(k, &variance)| BoxVariance {
                window_size: window,
                box_index: k + 1,
                variance,
                degenerate: variance.sqrt() < floor,
            })
            .collect()
    }
}

pub fn fluctuation_surface(profile: &Series, config: &MfdfaConfig) -> Result<FluctuationSurface> {
    require_profile(profile)?;
    let values = profile.values();
    let sizes = config.resolve_windows(values.len())?;

    let rows: Vec<(usize, Vec<f64>)> = sizes
        .par_iter()
        .map(|&s| box_variances(values, s, config.order).map(|v| (s, v)))
        .collect::<Result<_>>()?;

    let mut surface = FluctuationSurface {
        series_len: values.len(),
        config: config.clone(),
        window_sizes: Vec::with_capacity(rows.len()),
        q_grid: config.q_grid.clone(),
        values: Vec::with_capacity(rows.len()),
        box_counts: Vec::with_capacity(rows.len()),
        degenerate_counts: Vec::with_capacity(rows.len()),
        box_variances: Vec::with_capacity(rows.len()),
        dropped_windows: Vec::new(),
    };
    for (s, variances) in rows {
        let retained: Vec<f64> = variances
            .iter()
            .copied()
            .filter(|v| v.sqrt() >= config.min_box_std)
            .collect();
        if retained.is_empty() {
            log::warn!("window size {s}: every box is degenerate, dropped");
            surface.dropped_windows.push(s);
            continue;
        }
        let row = config.q_grid.iter().map(|&q| q_moment(&retained, q)).collect();
        surface.window_sizes.push(s);
        surface.values.push(row);
        surface.box_counts.push(variances.len());
        surface.degenerate_counts.push(variances.len() - retained.len());
        surface.box_variances.push(variances);
    }
    if surface.window_sizes.is_empty() {
        return Err(Error::AllBoxesDegenerate { s: sizes[0] });
    }
    Ok(surface)
}
