//! Analyse a price CSV (date,close) through the log-return pipeline and print
//! h(q) and the spectrum.
//!
//! cargo run --release --example analyze_csv -- prices.csv
//!
//! Without an argument a synthetic geometric random walk is analysed.

use std::path::PathBuf;

use mfscale::io::read_series;
use mfscale::{analyze, generate_rmd, MfdfaConfig, Pipeline, RangeSelection, Representation, RmdParams, Series};

fn main() -> mfscale::Result<()> {
    let series = match std::env::args().nth(1) {
        Some(path) => read_series(&PathBuf::from(path), Representation::Price)?,
        None => {
            let walk = generate_rmd(&RmdParams::new(0.5, 12, 3))?;
            let prices = walk.values().iter().map(|x| 100.0 * (0.01 * x).exp()).collect();
            Series::new(prices, Representation::Price, "synthetic")?
        }
    };
    let analysis = analyze(
        &series,
        Pipeline::LogReturns,
        &MfdfaConfig::default(),
        &RangeSelection::default(),
    )?;

    println!("{:>6} {:>8} {:>8} {:>6} {:>6}", "q", "h", "stderr", "s_lo", "s_hi");
    for r in analysis.hurst.records.iter().step_by(4) {
        println!(
            "{:>6.2} {:>8.4} {:>8.4} {:>6} {:>6}",
            r.q, r.h, r.stderr, r.range.s_lo, r.range.s_hi
        );
    }
    let s = &analysis.spectrum;
    println!(
        "H = {:.4}  width = {:.4}  peak = ({:.4}, {:.4})  twisted = {}",
        analysis.hurst.hurst(),
        s.width,
        s.peak_alpha,
        s.peak_f,
        s.twisted
    );
    Ok(())
}
