//! End-to-end analysis: representation chain, fluctuation surface, h(q) and
//! the singularity spectrum.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::mfdfa::{fluctuation_surface, FluctuationSurface, MfdfaConfig};
use crate::scaling::{estimate_hurst, HurstFunction, RangeSelection};
use crate::series::{to_log, to_profile, to_returns, Representation, Series};
use crate::spectrum::{legendre_spectrum, SingularitySpectrum};

/// How raw input values become the profile that is detrended.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Pipeline {
    /// price → log-price → returns → profile.
    #[default]
    LogReturns,
    /// values → first differences → profile.
    RawDiff,
    /// Values are already a profile (for example an RMD trace).
    AsProfile,
}

impl Pipeline {
    pub fn as_str(self) -> &'static str {
        match self {
            Pipeline::LogReturns => "log-returns",
            Pipeline::RawDiff => "raw-diff",
            Pipeline::AsProfile => "as-profile",
        }
    }

    /// Representation assumed for values read from a file.
    pub fn input_representation(self) -> Representation {
        match self {
            Pipeline::LogReturns => Representation::Price,
            // raw differences treat the column as an additive level
            Pipeline::RawDiff => Representation::LogPrice,
            Pipeline::AsProfile => Representation::Profile,
        }
    }

    /// Representation chain applied, for manifests.
    pub fn chain(self) -> Vec<Representation> {
        use Representation::*;
        match self {
            Pipeline::LogReturns => vec![Price, LogPrice, Return, Profile],
            Pipeline::RawDiff => vec![LogPrice, Return, Profile],
            Pipeline::AsProfile => vec![Profile],
        }
    }

    pub fn profile(self, series: &Series) -> Result<Series> {
        match self {
            Pipeline::LogReturns => to_profile(&to_returns(&to_log(series)?)?),
            Pipeline::RawDiff => to_profile(&to_returns(series)?),
            Pipeline::AsProfile => match series.representation() {
                Representation::Profile => Ok(series.clone()),
                Representation::Return => Err(Error::WrongRepresentation {
                    expected: "level or profile",
                    found: Representation::Return,
                }),
                _ => series.clone().reinterpret(Representation::Profile),
            },
        }
    }
}

impl fmt::Display for Pipeline {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Pipeline {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s {
            "log-returns" => Ok(Pipeline::LogReturns),
            "raw-diff" => Ok(Pipeline::RawDiff),
            "as-profile" => Ok(Pipeline::AsProfile),
            other => Err(format!(
                "unknown pipeline '{other}' (expected log-returns, raw-diff or as-profile)"
            )),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Analysis {
    pub series_len: usize,
    pub surface: FluctuationSurface,
    pub hurst: HurstFunction,
    pub spectrum: SingularitySpectrum,
}

/// Full MF-DFA of a profile.
pub fn analyze_profile(
    profile: &Series,
    config: &MfdfaConfig,
    selection: &RangeSelection,
) -> Result<Analysis> {
    let surface = fluctuation_surface(profile, config)?;
    let hurst = estimate_hurst(&surface, selection)?;
    let spectrum = legendre_spectrum(&hurst)?;
    Ok(Analysis {
        series_len: profile.len(),
        surface,
        hurst,
        spectrum,
    })
}

/// Full MF-DFA of a raw series through `pipeline`.
pub fn analyze(
    series: &Series,
    pipeline: Pipeline,
    config: &MfdfaConfig,
    selection: &RangeSelection,
) -> Result<Analysis> {
    analyze_profile(&pipeline.profile(series)?, config, selection)
}
