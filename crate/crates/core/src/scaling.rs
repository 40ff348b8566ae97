//! Generalized Hurst exponents from the log-log slope of `F(s, q)` against
//! `s`, fitted over a per-q scaling range.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::mfdfa::{q_matches, FluctuationSurface};

/// Minimum number of points for any slope fit.
pub const MIN_FIT_POINTS: usize = 4;

/// Inclusive window-size bounds; the fit uses every surface window inside.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ScaleBounds {
    pub s_lo: usize,
    pub s_hi: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SelectionMode {
    Manual,
    Auto,
    Full,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScalingRange {
    pub q: f64,
    pub s_lo: usize,
    pub s_hi: usize,
    pub mode: SelectionMode,
    pub r2: f64,
    pub npoints: usize,
}

impl ScalingRange {
    pub fn bounds(&self) -> ScaleBounds {
        ScaleBounds {
            s_lo: self.s_lo,
            s_hi: self.s_hi,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LineFit {
    pub slope: f64,
    pub intercept: f64,
    pub stderr: f64,
    pub r2: f64,
    /// Residual standard error, `sqrt(SSres / (n - 2))`.
    pub residual_se: f64,
    pub npoints: usize,
}

/// Ordinary least squares of `y` on `x`.
pub fn ols(x: &[f64], y: &[f64]) -> LineFit {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let (mut sxx, mut sxy, mut syy) = (0.0, 0.0, 0.0);
    for (&xi, &yi) in x.iter().zip(y) {
        let (dx, dy) = (xi - mx, yi - my);
        sxx += dx * dx;
        sxy += dx * dy;
        syy += dy * dy;
    }
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let ss_res = x
        .iter()
        .zip(y)
        .map(|(&xi, &yi)| (yi - intercept - slope * xi).powi(2))
        .sum::<f64>();
    let dof = (x.len() as f64 - 2.0).max(1.0);
    let residual_se = (ss_res / dof).sqrt();
    let r2 = if syy > 0.0 {
        (1.0 - ss_res / syy).clamp(0.0, 1.0)
    } else {
        1.0
    };
    LineFit {
        slope,
        intercept,
        stderr: residual_se / sxx.sqrt(),
        r2,
        residual_se,
        npoints: x.len(),
    }
}

fn log_column(surface: &FluctuationSurface, q: f64) -> Result<(Vec<usize>, Vec<f64>, Vec<f64>)> {
    let column = surface.column(q).ok_or(Error::MissingQ { q })?;
    let sizes = column.iter().map(|&(s, _)| s).collect();
    let x = column.iter().map(|&(s, _)| (s as f64).ln()).collect();
    let y = column.iter().map(|&(_, f)| f.ln()).collect();
    Ok((sizes, x, y))
}

/// Slope of `ln F(s, q)` on `ln s` over the surface windows inside `bounds`.
pub fn fit_h(surface: &FluctuationSurface, q: f64, bounds: ScaleBounds) -> Result<LineFit> {
    let (sizes, x, y) = log_column(surface, q)?;
    let idx: Vec<usize> = (0..sizes.len())
        .filter(|&i| sizes[i] >= bounds.s_lo && sizes[i] <= bounds.s_hi)
        .collect();
    if idx.len() < MIN_FIT_POINTS {
        return Err(Error::TooFewPoints {
            q,
            got: idx.len(),
            min: MIN_FIT_POINTS,
        });
    }
    let xs: Vec<f64> = idx.iter().map(|&i| x[i]).collect();
    let ys: Vec<f64> = idx.iter().map(|&i| y[i]).collect();
    Ok(ols(&xs, &ys))
}

/// Rules for the automatic scaling-range search.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AutoRangePolicy {
    pub r2_min: f64,
    pub min_points: usize,
    /// Required span `log10(s_hi / s_lo)`, capped at the span of the surface.
    pub min_decades: f64,
    /// A candidate's residual standard error may not exceed this multiple of
    /// the median residual standard error of `min_points`-point sub-windows.
    /// `None` disables the check.
    pub noise_factor: Option<f64>,
}

impl Default for AutoRangePolicy {
    fn default() -> Self {
        AutoRangePolicy {
            r2_min: 0.98,
            min_points: 6,
            min_decades: 1.0,
            noise_factor: Some(3.0),
        }
    }
}

// Absolute slack on the residual check so exact power laws tie at zero.
const NOISE_SLACK: f64 = 1e-9;

/// Widest contiguous window range whose log-log fit is admissible.
///
/// Admissible ranges have at least `min_points` points, span at least
/// `min_decades` (or the whole surface if it is shorter), reach
/// `r2 >= r2_min`, and have residuals no larger than the local noise floor
/// allows. Among admissible ranges the one with most points wins, then the
/// larger span in `s`, then the smaller `s_lo`.
pub fn auto_range(
    surface: &FluctuationSurface,
    q: f64,
    policy: &AutoRangePolicy,
) -> Result<ScalingRange> {
    let (sizes, x, y) = log_column(surface, q)?;
    let n = sizes.len();
    let min_points = policy.min_points.max(MIN_FIT_POINTS);
    if n < 8 || n < min_points {
        return Err(Error::TooFewPoints {
            q,
            got: n,
            min: min_points.max(8),
        });
    }
    let full_span = (sizes[n - 1] as f64 / sizes[0] as f64).log10();
    let required_span = policy.min_decades.min(full_span) - 1e-12;

    let threshold = policy.noise_factor.map(|factor| {
        let mut local: Vec<f64> = (0..=n - min_points)
            .map(|i| ols(&x[i..i + min_points], &y[i..i + min_points]).residual_se)
            .collect();
        local.sort_by(f64::total_cmp);
        let m = local.len();
        let median = if m % 2 == 1 {
            local[m / 2]
        } else {
            0.5 * (local[m / 2 - 1] + local[m / 2])
        };
        factor * median + NOISE_SLACK
    });

    let mut best: Option<(usize, usize, LineFit)> = None;
    for lo in 0..n {
        for hi in lo + min_points - 1..n {
            let span = (sizes[hi] as f64 / sizes[lo] as f64).log10();
            if span < required_span {
                continue;
            }
            let fit = ols(&x[lo..=hi], &y[lo..=hi]);
            if fit.r2 < policy.r2_min || threshold.is_some_and(|t| fit.residual_se > t) {
                continue;
            }
            let better = match &best {
                None => true,
                Some((blo, bhi, _)) => {
                    let (count, bcount) = (hi - lo, bhi - blo);
                    let bspan = (sizes[*bhi] as f64 / sizes[*blo] as f64).log10();
                    count > bcount
                        || (count == bcount && span > bspan)
                        || (count == bcount && span == bspan && sizes[lo] < sizes[*blo])
                }
            };
            if better {
                best = Some((lo, hi, fit));
            }
        }
    }
    let (lo, hi, fit) = best.ok_or(Error::NoAdmissibleRange { q })?;
    Ok(ScalingRange {
        q,
        s_lo: sizes[lo],
        s_hi: sizes[hi],
        mode: SelectionMode::Auto,
        r2: fit.r2,
        npoints: fit.npoints,
    })
}

/// Per-q manual bounds, as read from a ranges file.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ManualRanges(pub Vec<(f64, ScaleBounds)>);

impl ManualRanges {
    pub fn get(&self, q: f64) -> Option<ScaleBounds> {
        self.0
            .iter()
            .find(|(g, _)| q_matches(*g, q))
            .map(|&(_, b)| b)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum RangeSelection {
    /// Every window of the surface for every q.
    Full,
    Auto(AutoRangePolicy),
    Manual(ManualRanges),
}

impl Default for RangeSelection {
    fn default() -> Self {
        RangeSelection::Auto(AutoRangePolicy::default())
    }
}

/// The bounds to fit for one q, and whether they are a fallback.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RangeChoice {
    pub q: f64,
    pub bounds: ScaleBounds,
    pub mode: SelectionMode,
    /// True when the requested selection failed for this q and the full
    /// range was used instead.
    pub fallback: bool,
}

/// Resolves a selection into per-q bounds. Automatic or manual selections
/// that fail for some q fall back to the full range and are flagged.
pub fn choose_ranges(surface: &FluctuationSurface, selection: &RangeSelection) -> Vec<RangeChoice> {
    let full = ScaleBounds {
        s_lo: surface.window_sizes[0],
        s_hi: *surface.window_sizes.last().unwrap(),
    };
    let fallback = |q: f64| RangeChoice {
        q,
        bounds: full,
        mode: SelectionMode::Full,
        fallback: true,
    };
    surface
        .q_grid
        .iter()
        .map(|&q| match selection {
            RangeSelection::Full => RangeChoice {
                fallback: false,
                ..fallback(q)
            },
            RangeSelection::Auto(policy) => match auto_range(surface, q, policy) {
                Ok(r) => RangeChoice {
                    q,
                    bounds: r.bounds(),
                    mode: SelectionMode::Auto,
                    fallback: false,
                },
                Err(e) => {
                    log::warn!("q = {q}: {e}; using the full range");
                    fallback(q)
                }
            },
            RangeSelection::Manual(manual) => match manual.get(q) {
                Some(bounds) => RangeChoice {
                    q,
                    bounds,
                    mode: SelectionMode::Manual,
                    fallback: false,
                },
                None => {
                    log::warn!("q = {q}: no manual range; using the full range");
                    fallback(q)
                }
            },
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HurstRecord {
    pub q: f64,
    pub h: f64,
    pub stderr: f64,
    pub intercept: f64,
    pub range: ScalingRange,
    pub fallback: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HurstFunction {
    /// Fitted records in increasing q.
    pub records: Vec<HurstRecord>,
    /// Grid values that could not be fitted.
    pub dropped_q: Vec<f64>,
    pub monotone_nonincreasing: bool,
    pub twist_detected: bool,
}

// Slack for the monotonicity flag so an exactly constant h(q) counts as monotone.
const MONOTONE_SLACK: f64 = 1e-9;

impl HurstFunction {
    /// Assembles records (sorted by q) and derives the diagnostic flags.
    pub fn from_records(mut records: Vec<HurstRecord>, dropped_q: Vec<f64>) -> Self {
        records.sort_by(|a, b| a.q.total_cmp(&b.q));
        let monotone_nonincreasing = records
            .windows(2)
            .all(|w| w[1].h <= w[0].h + MONOTONE_SLACK);
        let twist_detected = records.iter().enumerate().any(|(i, lo)| {
            records[i + 1..]
                .iter()
                .any(|hi| lo.h < hi.h - 2.0 * (lo.stderr + hi.stderr))
        });
        HurstFunction {
            records,
            dropped_q,
            monotone_nonincreasing,
            twist_detected,
        }
    }

    pub fn get(&self, q: f64) -> Option<&HurstRecord> {
        self.records.iter().find(|r| q_matches(r.q, q))
    }

    /// `h(2)`, the classical Hurst exponent.
    pub fn hurst(&self) -> f64 {
        self.get(2.0).map(|r| r.h).expect("h(2) is always fitted")
    }

    pub fn q_values(&self) -> Vec<f64> {
        self.records.iter().map(|r| r.q).collect()
    }

    pub fn h_values(&self) -> Vec<f64> {
        self.records.iter().map(|r| r.h).collect()
    }

    pub fn fallback_count(&self) -> usize {
        self.records.iter().filter(|r| r.fallback).count()
    }
}

/// Fits every q with its chosen bounds. Failed fits are dropped, except at
/// `q = 2`, which is required.
pub fn hurst_function(surface: &FluctuationSurface, choices: &[RangeChoice]) -> Result<HurstFunction> {
    let mut records = Vec::with_capacity(surface.q_grid.len());
    let mut dropped = Vec::new();
    for &q in &surface.q_grid {
        let Some(choice) = choices.iter().find(|c| q_matches(c.q, q)) else {
            dropped.push(q);
            continue;
        };
        match fit_h(surface, q, choice.bounds) {
            Ok(fit) => {
                let (sizes, _, _) = log_column(surface, q)?;
                let inside: Vec<usize> = sizes
                    .into_iter()
                    .filter(|&s| s >= choice.bounds.s_lo && s <= choice.bounds.s_hi)
                    .collect();
                records.push(HurstRecord {
                    q,
                    h: fit.slope,
                    stderr: fit.stderr,
                    intercept: fit.intercept,
                    range: ScalingRange {
                        q,
                        s_lo: inside[0],
                        s_hi: *inside.last().unwrap(),
                        mode: choice.mode,
                        r2: fit.r2,
                        npoints: fit.npoints,
                    },
                    fallback: choice.fallback,
                });
            }
            Err(e) if q_matches(q, 2.0) => return Err(Error::NoHurstExponent(Box::new(e))),
            Err(e) => {
                log::warn!("q = {q} dropped: {e}");
                dropped.push(q);
            }
        }
    }
    if !records.iter().any(|r| q_matches(r.q, 2.0)) {
        return Err(Error::NoHurstExponent(Box::new(Error::MissingQ { q: 2.0 })));
    }
    Ok(HurstFunction::from_records(records, dropped))
}

/// [`choose_ranges`] followed by [`hurst_function`].
pub fn estimate_hurst(surface: &FluctuationSurface, selection: &RangeSelection) -> Result<HurstFunction> {
    hurst_function(surface, &choose_ranges(surface, selection))
}
