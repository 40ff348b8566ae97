//! Singularity spectrum from the generalized Hurst exponents.
//!
//! With `s(q) = q h(q) - 1`, the Hölder exponent is `α = ds/dq` and the
//! spectrum is the Legendre transform `f(α) = q α - s(q)`. The exponent
//! `s(q)` is what much of the literature calls `τ(q)`.

use serde::{Deserialize, Serialize};

use crate::calibrate::CalibrationReport;
use crate::error::{Error, Result};
use crate::scaling::HurstFunction;

/// `α(q)` must increase by more than this between neighbours to count as a twist.
pub const TWIST_THRESHOLD: f64 = 1e-6;

/// `s(q) = q h(q) - 1` for each record of `h`.
pub fn tau_of_q(h: &HurstFunction) -> Vec<(f64, f64)> {
    h.records.iter().map(|r| (r.q, r.q * r.h - 1.0)).collect()
}

/// Derivative of `tau` with respect to `q` on a possibly nonuniform grid:
/// three-point central stencil inside (exact for quadratics), two-point
/// one-sided differences at the ends.
pub fn alpha_of_q(q: &[f64], tau: &[f64]) -> Result<Vec<f64>> {
    let n = q.len();
    if n < 3 || tau.len() != n {
        return Err(Error::GridTooSmall(n.min(tau.len())));
    }
    let mut alpha = Vec::with_capacity(n);
    alpha.push((tau[1] - tau[0]) / (q[1] - q[0]));
    for i in 1..n - 1 {
        let (h1, h2) = (q[i] - q[i - 1], q[i + 1] - q[i]);
        alpha.push(
            -h2 / (h1 * (h1 + h2)) * tau[i - 1]
                + (h2 - h1) / (h1 * h2) * tau[i]
                + h1 / (h2 * (h1 + h2)) * tau[i + 1],
        );
    }
    alpha.push((tau[n - 1] - tau[n - 2]) / (q[n - 1] - q[n - 2]));
    Ok(alpha)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpectrumPoint {
    pub q: f64,
    pub alpha: f64,
    pub f: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SingularitySpectrum {
    pub points: Vec<SpectrumPoint>,
    pub width: f64,
    pub alpha_min: f64,
    pub alpha_max: f64,
    pub peak_alpha: f64,
    pub peak_f: f64,
    /// `α(q)` is not monotonically decreasing: the folded top of `f(α)`.
    pub twisted: bool,
}

impl SingularitySpectrum {
    pub fn from_points(points: Vec<SpectrumPoint>) -> Self {
        let alpha_min = points.iter().map(|p| p.alpha).fold(f64::INFINITY, f64::min);
        let alpha_max = points.iter().map(|p| p.alpha).fold(f64::NEG_INFINITY, f64::max);
        let peak = points
            .iter()
            .copied()
            .reduce(|best, p| if p.f > best.f { p } else { best })
            .expect("spectrum has at least three points");
        let twisted = points
            .windows(2)
            .any(|w| w[1].alpha > w[0].alpha + TWIST_THRESHOLD);
        SingularitySpectrum {
            width: alpha_max - alpha_min,
            alpha_min,
            alpha_max,
            peak_alpha: peak.alpha,
            peak_f: peak.f,
            twisted,
            points,
        }
    }

    pub fn at_q(&self, q: f64) -> Option<&SpectrumPoint> {
        self.points.iter().find(|p| (p.q - q).abs() < 1e-9)
    }
}

pub fn legendre_spectrum(h: &HurstFunction) -> Result<SingularitySpectrum> {
    let (q, tau): (Vec<f64>, Vec<f64>) = tau_of_q(h).into_iter().unzip();
    let alpha = alpha_of_q(&q, &tau)?;
    let points = q
        .iter()
        .zip(&tau)
        .zip(&alpha)
        .map(|((&q, &t), &a)| SpectrumPoint {
            q,
            alpha: a,
            f: q * a - t,
        })
        .collect();
    Ok(SingularitySpectrum::from_points(points))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Baseline {
    pub length: usize,
    pub hurst: f64,
    pub mean_width: f64,
    pub std_width: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsRecord {
    pub series_len: usize,
    pub hurst: f64,
    pub width: f64,
    pub alpha_min: f64,
    pub alpha_max: f64,
    pub peak_alpha: f64,
    pub peak_f: f64,
    pub twisted: bool,
    pub h_monotone_nonincreasing: bool,
    pub h_twist_detected: bool,
    pub baseline: Option<Baseline>,
    /// `width - baseline.mean_width`.
    pub excess_width: Option<f64>,
    pub verdict: String,
}

/// Summary diagnostics, optionally against a finite-length background.
///
/// With a baseline, an excess width within two ensemble standard deviations
/// of zero (or negative) is reported as consistent with a monofractal.
pub fn spectrum_metrics(
    spectrum: &SingularitySpectrum,
    h: &HurstFunction,
    series_len: usize,
    baseline: Option<&CalibrationReport>,
) -> Result<MetricsRecord> {
    let hurst = h.hurst();
    let baseline = baseline
        .map(|report| {
            report.baseline_lookup(series_len, hurst).map(|e| Baseline {
                length: e.length,
                hurst: e.hurst,
                mean_width: e.mean_width,
                std_width: e.std_width,
            })
        })
        .transpose()?;
    let excess_width = baseline.as_ref().map(|b| spectrum.width - b.mean_width);
    let verdict = match (&baseline, excess_width) {
        (Some(b), Some(excess)) if excess <= 2.0 * b.std_width => {
            "consistent with monofractal".to_string()
        }
        (Some(_), Some(_)) => "multifractal beyond finite-length background".to_string(),
        _ if spectrum.width < 1e-9 => "consistent with monofractal".to_string(),
        _ => "no baseline".to_string(),
    };
    Ok(MetricsRecord {
        series_len,
        hurst,
        width: spectrum.width,
        alpha_min: spectrum.alpha_min,
        alpha_max: spectrum.alpha_max,
        peak_alpha: spectrum.peak_alpha,
        peak_f: spectrum.peak_f,
        twisted: spectrum.twisted,
        h_monotone_nonincreasing: h.monotone_nonincreasing,
        h_twist_detected: h.twist_detected,
        baseline,
        excess_width,
        verdict,
    })
}
