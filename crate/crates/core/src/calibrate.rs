//! Finite-length background of the singularity spectrum.
//!
//! Monofractal RMD traces of finite length still show a spectrum of nonzero
//! width. An ensemble over seeds `base_seed, base_seed + 1, ...` measures
//! that spurious width (and the peak position) for each length and input
//! Hurst exponent, so it can be subtracted from real spectra.

use std::fs;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::mfdfa::MfdfaConfig;
use crate::pipeline::analyze_profile;
use crate::rmdgen::{generate_rmd, RmdParams, ALGORITHM_ID};
use crate::scaling::{AutoRangePolicy, RangeSelection};
use crate::series::{slice, SliceSpec};

pub const SCHEMA_VERSION: u32 = 1;
pub const MIN_LENGTH: usize = 1 << 7;
/// Entries with a larger fraction of failed members are unreliable.
pub const MAX_FAILURE_FRACTION: f64 = 0.25;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CalibrationEntry {
    pub length: usize,
    pub hurst: f64,
    pub ensemble: usize,
    pub seeds: Vec<u64>,
    pub failures: usize,
    pub unreliable: bool,
    pub mean_width: f64,
    pub std_width: f64,
    pub mean_peak: f64,
    pub std_peak: f64,
    pub mean_h2: f64,
    pub std_h2: f64,
    pub twisted_fraction: f64,
    pub widths: Vec<f64>,
    pub peaks: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CalibrationReport {
    pub schema_version: u32,
    pub config_fingerprint: String,
    pub rng: String,
    pub rmd_algorithm: String,
    pub config: MfdfaConfig,
    pub policy: AutoRangePolicy,
    pub base_seed: u64,
    pub entries: Vec<CalibrationEntry>,
}

/// Hex SHA-256 over the analysis configuration, range policy and generator
/// identities.
pub fn config_fingerprint(config: &MfdfaConfig, policy: &AutoRangePolicy) -> String {
    let key = serde_json::json!({
        "config": config,
        "policy": policy,
        "rng": crate::RNG_ALGORITHM,
        "rmd": ALGORITHM_ID,
    });
    hex::encode(Sha256::digest(key.to_string().as_bytes()))
}

fn mean_std(values: &[f64]) -> (f64, f64) {
    let n = values.len();
    if n == 0 {
        return (f64::NAN, f64::NAN);
    }
    let mean = values.iter().sum::<f64>() / n as f64;
    if n < 2 {
        return (mean, 0.0);
    }
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
    (mean, var.sqrt())
}

struct Member {
    width: f64,
    peak: f64,
    h2: f64,
    twisted: bool,
}

fn run_member(length: usize, hurst: f64, seed: u64, config: &MfdfaConfig, policy: &AutoRangePolicy) -> Result<Member> {
    let levels = length.next_power_of_two().trailing_zeros();
    let trace = generate_rmd(&RmdParams::new(hurst, levels, seed).trimmed())?;
    let trace = if trace.len() == length {
        trace
    } else {
        slice(&trace, SliceSpec::new(0, length))?
    };
    let analysis = analyze_profile(&trace, config, &RangeSelection::Auto(*policy))?;
    Ok(Member {
        width: analysis.spectrum.width,
        peak: analysis.spectrum.peak_alpha,
        h2: analysis.hurst.hurst(),
        twisted: analysis.spectrum.twisted,
    })
}

/// Ensemble statistics for one `(length, hurst)` cell over explicit seeds.
pub fn calibrate_entry(
    length: usize,
    hurst: f64,
    seeds: &[u64],
    config: &MfdfaConfig,
    policy: &AutoRangePolicy,
) -> Result<CalibrationEntry> {
    if length < MIN_LENGTH {
        return Err(Error::InvalidParams(format!(
            "calibration length {length} is below {MIN_LENGTH}"
        )));
    }
    if seeds.len() < 2 {
        return Err(Error::InvalidParams("ensemble size must be at least 2".into()));
    }
    let results: Vec<Result<Member>> = seeds
        .par_iter()
        .map(|&seed| run_member(length, hurst, seed, config, policy))
        .collect();
    let mut members = Vec::with_capacity(results.len());
    let mut failures = 0;
    for (seed, r) in seeds.iter().zip(results) {
        match r {
            Ok(m) => members.push(m),
            Err(e) => {
                log::warn!("calibration L={length} H={hurst} seed={seed}: {e}");
                failures += 1;
            }
        }
    }
    if members.is_empty() {
        return Err(Error::InvalidParams(format!(
            "every calibration member failed at L={length}, H={hurst}"
        )));
    }
    let widths: Vec<f64> = members.iter().map(|m| m.width).collect();
    let peaks: Vec<f64> = members.iter().map(|m| m.peak).collect();
    let h2: Vec<f64> = members.iter().map(|m| m.h2).collect();
    let (mean_width, std_width) = mean_std(&widths);
    let (mean_peak, std_peak) = mean_std(&peaks);
    let (mean_h2, std_h2) = mean_std(&h2);
    Ok(CalibrationEntry {
        length,
        hurst,
        ensemble: seeds.len(),
        seeds: seeds.to_vec(),
        failures,
        unreliable: failures as f64 > MAX_FAILURE_FRACTION * seeds.len() as f64,
        mean_width,
        std_width,
        mean_peak,
        std_peak,
        mean_h2,
        std_h2,
        twisted_fraction: members.iter().filter(|m| m.twisted).count() as f64 / members.len() as f64,
        widths,
        peaks,
    })
}

/// Calibration over every `(length, hurst)` pair, with seeds
/// `base_seed..base_seed + ensemble` shared by all cells.
pub fn run_calibration(
    lengths: &[usize],
    hursts: &[f64],
    ensemble: usize,
    base_seed: u64,
    config: &MfdfaConfig,
    policy: &AutoRangePolicy,
) -> Result<CalibrationReport> {
    let seeds: Vec<u64> = (0..ensemble as u64).map(|i| base_seed.wrapping_add(i)).collect();
    let mut entries = Vec::with_capacity(lengths.len() * hursts.len());
    for &length in lengths {
        for &hurst in hursts {
            entries.push(calibrate_entry(length, hurst, &seeds, config, policy)?);
        }
    }
    Ok(CalibrationReport {
        schema_version: SCHEMA_VERSION,
        config_fingerprint: config_fingerprint(config, policy),
        rng: crate::RNG_ALGORITHM.to_string(),
        rmd_algorithm: ALGORITHM_ID.to_string(),
        config: config.clone(),
        policy: *policy,
        base_seed,
        entries,
    })
}

impl CalibrationReport {
    /// Entry nearest in `ln L`, then in `H`; refuses lengths more than a
    /// factor 2 away.
    pub fn baseline_lookup(&self, length: usize, hurst: f64) -> Result<&CalibrationEntry> {
        let log_gap = |e: &CalibrationEntry| ((e.length as f64).ln() - (length as f64).ln()).abs();
        let nearest = self
            .entries
            .iter()
            .min_by(|a, b| {
                log_gap(a)
                    .total_cmp(&log_gap(b))
                    .then((a.hurst - hurst).abs().total_cmp(&(b.hurst - hurst).abs()))
            })
            .ok_or(Error::EmptyReport)?;
        if log_gap(nearest) > 2f64.ln() + 1e-12 {
            return Err(Error::BaselineLengthMismatch {
                len: length,
                nearest: nearest.length,
            });
        }
        Ok(nearest)
    }

    pub fn entry(&self, length: usize, hurst: f64) -> Option<&CalibrationEntry> {
        self.entries
            .iter()
            .find(|e| e.length == length && (e.hurst - hurst).abs() < 1e-12)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let text = serde_json::to_string_pretty(self)?;
        fs::write(path, text + "\n").map_err(|e| Error::io(path, e))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let report: CalibrationReport = serde_json::from_str(&text)?;
        if report.schema_version != SCHEMA_VERSION {
            return Err(Error::InvalidParams(format!(
                "{}: unsupported calibration schema version {}",
                path.display(),
                report.schema_version
            )));
        }
        Ok(report)
    }
}

/// Cache file for a calibration run inside `dir`.
pub fn cache_path(
    dir: &Path,
    lengths: &[usize],
    hursts: &[f64],
    ensemble: usize,
    base_seed: u64,
    config: &MfdfaConfig,
    policy: &AutoRangePolicy,
) -> PathBuf {
    let key = serde_json::json!({
        "fingerprint": config_fingerprint(config, policy),
        "lengths": lengths,
        "hursts": hursts,
        "ensemble": ensemble,
        "base_seed": base_seed,
    });
    let digest = hex::encode(Sha256::digest(key.to_string().as_bytes()));
    dir.join(format!("calibration-{}.json", &digest[..16]))
}

/// Loads a cached report for these arguments or runs and caches it.
pub fn cached_calibration(
    dir: &Path,
    lengths: &[usize],
    hursts: &[f64],
    ensemble: usize,
    base_seed: u64,
    config: &MfdfaConfig,
    policy: &AutoRangePolicy,
) -> Result<CalibrationReport> {
    let path = cache_path(dir, lengths, hursts, ensemble, base_seed, config, policy);
    if path.exists() {
        return CalibrationReport::load(&path);
    }
    let report = run_calibration(lengths, hursts, ensemble, base_seed, config, policy)?;
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    report.save(&path)?;
    Ok(report)
}
