//! Inject a jump into a monofractal trace, watch h(q) twist, excise the jump
//! and watch the twist disappear.
//!
//! cargo run --release --example excision

use mfscale::surgery::{excise_detailed, Interval};
use mfscale::{analyze_profile, generate_rmd, ExcisionSpec, MfdfaConfig, RangeSelection, RmdParams, Series};

fn main() -> mfscale::Result<()> {
    let config = MfdfaConfig::default();
    let selection = RangeSelection::default();
    let trace = generate_rmd(&RmdParams::new(0.5, 13, 4).trimmed())?;
    let v = trace.values();
    let mean = v.iter().sum::<f64>() / v.len() as f64;
    let sigma = (v.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / v.len() as f64).sqrt();
    let mid = v.len() / 2;
    let jumped: Vec<f64> = v
        .iter()
        .enumerate()
        .map(|(i, &x)| if i >= mid { x + 10.0 * sigma } else { x })
        .collect();
    let jumped = Series::new(jumped, trace.representation(), "jumped")?;

    // the jump is the return from sample mid - 1 to sample mid
    let spec = ExcisionSpec::new(vec![Interval::new(mid - 1, mid)])?;
    let excised = excise_detailed(&jumped, &spec)?;

    for (name, series) in [("original", &trace), ("jumped", &jumped), ("excised", &excised.series)] {
        let a = analyze_profile(series, &config, &selection)?;
        let h = &a.hurst;
        println!(
            "{name:>8}: len {:>5}  h(-5) {:.3}  h(2) {:.3}  h(5) {:.3}  twist {}",
            series.len(),
            h.get(-5.0).map_or(f64::NAN, |r| r.h),
            h.hurst(),
            h.get(5.0).map_or(f64::NAN, |r| r.h),
            h.twist_detected
        );
    }
    println!("removed {} return(s)", excised.removed);
    Ok(())
}
