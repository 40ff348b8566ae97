//! Multifractal detrended fluctuation analysis (MF-DFA) of financial and
//! synthetic time series.
//!
//! The crate is organised along the analysis pipeline:
//!
//! - [`series`]: data model, price → log → returns → profile, slicing and
//!   shuffle surrogates.
//! - [`rmdgen`]: monofractal test traces by random midpoint displacement.
//! - [`mfdfa`]: box partitioning, polynomial detrending and the q-moment
//!   fluctuation function `F(s, q)`.
//! - [`scaling`]: log-log fits of `F(s, q) ~ s^h(q)` over manual or automatic
//!   scaling ranges, giving the generalized Hurst exponents.
//! - [`spectrum`]: `s(q) = q h(q) - 1`, Hölder exponents and the `f(α)`
//!   singularity spectrum with width, peak and twist diagnostics.
//! - [`surgery`]: removal of abrupt events at the return level.
//! - [`calibrate`]: finite-length background of the spectrum width from
//!   ensembles of monofractal traces.
//! - [`pipeline`] and [`io`]: end-to-end analysis and file formats used by
//!   the `mfscale` binary ([`cli`]).

pub mod calibrate;
pub mod cli;
pub mod error;
pub mod io;
pub mod mfdfa;
pub mod pipeline;
pub mod rmdgen;
pub mod scaling;
pub mod series;
pub mod spectrum;
pub mod surgery;

pub use crate::calibrate::{run_calibration, CalibrationEntry, CalibrationReport};
pub use crate::error::{Error, Result};
pub use crate::mfdfa::{fluctuation_surface, FluctuationSurface, MfdfaConfig, WindowSizes};
pub use crate::pipeline::{analyze, analyze_profile, Analysis, Pipeline};
pub use crate::rmdgen::{generate_rmd, RmdParams};
pub use crate::scaling::{
    auto_range, fit_h, hurst_function, AutoRangePolicy, HurstFunction, RangeSelection,
    ScaleBounds, ScalingRange,
};
pub use crate::series::{Representation, Series, SliceSpec};
pub use crate::spectrum::{legendre_spectrum, spectrum_metrics, MetricsRecord, SingularitySpectrum};
pub use crate::surgery::{excise, ExcisionSpec};

use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;

/// Identity of the seeded generator behind every random draw in the crate.
pub const RNG_ALGORITHM: &str = "ChaCha20 (rand_chacha 0.9, seed_from_u64)";

/// Seeded generator used by the shuffle surrogate and the RMD generator.
pub fn seeded_rng(seed: u64) -> ChaCha20Rng {
    ChaCha20Rng::seed_from_u64(seed)
}
