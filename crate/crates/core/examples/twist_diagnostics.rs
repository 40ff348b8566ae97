//! Monotonicity and twist diagnostics of h(q) and α(q) for a monofractal
//! trace and for the same trace with a level shift halfway through.
//!
//! cargo run --release --example twist_diagnostics

use mfscale::{analyze_profile, generate_rmd, MfdfaConfig, RangeSelection, RmdParams, Series};

fn main() -> mfscale::Result<()> {
    let config = MfdfaConfig::default();
    let selection = RangeSelection::default();
    let trace = generate_rmd(&RmdParams::new(0.5, 13, 2).trimmed())?;
    let v = trace.values();
    let span = v.iter().cloned().fold(f64::NEG_INFINITY, f64::max) - v.iter().cloned().fold(f64::INFINITY, f64::min);
    let shifted: Vec<f64> = v
        .iter()
        .enumerate()
        .map(|(i, &x)| if i >= v.len() / 2 { x + 3.0 * span } else { x })
        .collect();
    let shifted = Series::new(shifted, trace.representation(), "shifted")?;

    for (name, series) in [("monofractal", &trace), ("shifted", &shifted)] {
        let a = analyze_profile(series, &config, &selection)?;
        println!(
            "{name}: h monotone {}  h twist {}  spectrum twisted {}  width {:.3}",
            a.hurst.monotone_nonincreasing,
            a.hurst.twist_detected,
            a.spectrum.twisted,
            a.spectrum.width
        );
        let rising: Vec<String> = a
            .spectrum
            .points
            .windows(2)
            .filter(|w| w[1].alpha > w[0].alpha)
            .map(|w| format!("{}", w[1].q))
            .collect();
        println!("  α rises at q = [{}]", rising.join(", "));
    }
    Ok(())
}
