//! Random midpoint displacement (RMD) generator for monofractal traces with a
//! prescribed Hurst exponent.

use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::series::{Representation, Series};

pub const ALGORITHM_ID: &str = "rmd-variance-corrected-v1";

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RmdParams {
    pub hurst: f64,
    /// Number of refinement levels; the trace has `2^levels + 1` samples.
    pub levels: u32,
    pub seed: u64,
    pub initial_sigma: f64,
    /// Drop the final sample so the trace has exactly `2^levels` samples.
    pub trim_to_power_of_two: bool,
}

impl RmdParams {
    pub fn new(hurst: f64, levels: u32, seed: u64) -> Self {
        RmdParams {
            hurst,
            levels,
            seed,
            initial_sigma: 1.0,
            trim_to_power_of_two: false,
        }
    }

    pub fn trimmed(mut self) -> Self {
        self.trim_to_power_of_two = true;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.hurst > 0.0 && self.hurst < 1.0) {
            return Err(Error::InvalidParams(format!(
                "Hurst exponent must lie in (0, 1), got {}",
                self.hurst
            )));
        }
        if self.levels == 0 || self.levels > 30 {
            return Err(Error::InvalidParams(format!(
                "levels must be in 1..=30, got {}",
                self.levels
            )));
        }
        if !(self.initial_sigma >= 0.0 && self.initial_sigma.is_finite()) {
            return Err(Error::InvalidParams(format!(
                "initial sigma must be finite and non-negative, got {}",
                self.initial_sigma
            )));
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        let n = 1usize << self.levels;
        if self.trim_to_power_of_two {
            n
        } else {
            n + 1
        }
    }
}

/// Generates an fBm-like trace, tagged as a profile.
///
/// The first endpoint is drawn from `N(0, σ²)` and the second from the first
/// plus an `N(0, σ²)` increment. At refinement level `k` every midpoint is the
/// average of its two neighbours plus a Gaussian displacement of variance
/// `σ² (1 - 2^(2H-2)) 2^(-2Hk)`, which keeps the increment variance at
/// spacing `δ` equal to `σ² δ^(2H)`.
pub fn generate_rmd(params: &RmdParams) -> Result<Series> {
    params.validate()?;
    let n = 1usize << params.levels;
    let sigma = params.initial_sigma;
    let h = params.hurst;
    let mut rng = crate::seeded_rng(params.seed);
    let mut gauss = || -> f64 { StandardNormal.sample(&mut rng) };

    let mut trace = vec![0.0; n + 1];
    trace[0] = sigma * gauss();
    trace[n] = trace[0] + sigma * gauss();

    let correction = (1.0 - 2f64.powf(2.0 * h - 2.0)).sqrt();
    let mut step = n;
    for level in 1..=params.levels {
        let half = step / 2;
        let sd = sigma * correction * 2f64.powf(-h * level as f64);
        let mut i = half;
        while i < n {
            trace[i] = 0.5 * (trace[i - half] + trace[i + half]) + sd * gauss();
            i += step;
        }
        step = half;
    }
    if params.trim_to_power_of_two {
        trace.truncate(n);
    }
    Series::new(
        trace,
        Representation::Profile,
        format!("rmd H={} levels={} seed={}", h, params.levels, params.seed),
    )
}
