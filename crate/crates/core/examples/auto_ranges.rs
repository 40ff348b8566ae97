//! Automatic scaling-range selection on a surface with a crossover, and the
//! manual override that a ranges file provides.
//!
//! cargo run --release --example auto_ranges

use mfscale::scaling::{estimate_hurst, ManualRanges};
use mfscale::{
    auto_range, fit_h, fluctuation_surface, generate_rmd, AutoRangePolicy, MfdfaConfig, RangeSelection,
    RmdParams, ScaleBounds,
};

fn main() -> mfscale::Result<()> {
    let trace = generate_rmd(&RmdParams::new(0.6, 14, 11))?;
    let surface = fluctuation_surface(&trace, &MfdfaConfig::default())?;
    let policy = AutoRangePolicy::default();
    for q in [-4.0, -2.0, 0.0, 2.0, 4.0] {
        let r = auto_range(&surface, q, &policy)?;
        let fit = fit_h(&surface, q, r.bounds())?;
        println!(
            "q {q:>5}: s in [{:>4}, {:>4}] ({} points, r2 {:.4})  h = {:.4}",
            r.s_lo, r.s_hi, r.npoints, r.r2, fit.slope
        );
    }

    let manual = ManualRanges(vec![(2.0, ScaleBounds { s_lo: 20, s_hi: 2000 })]);
    let h = estimate_hurst(&surface, &RangeSelection::Manual(manual))?;
    println!(
        "manual range for q = 2 only: h(2) = {:.4}, {} q values fell back to the full range",
        h.hurst(),
        h.fallback_count()
    );
    Ok(())
}
