//! Finite-length background of the spectrum width for monofractal H = 0.5
//! traces at 2^8 ... 2^14 samples.
//!
//! cargo run --release --example calibrate_table -- 20

use mfscale::{run_calibration, AutoRangePolicy, MfdfaConfig};

fn main() -> mfscale::Result<()> {
    let ensemble: usize = std::env::args().nth(1).map_or(20, |a| a.parse().expect("ensemble size"));
    let lengths = [1 << 8, 1 << 10, 1 << 12, 1 << 14];
    let report = run_calibration(
        &lengths,
        &[0.5],
        ensemble,
        1,
        &MfdfaConfig::default(),
        &AutoRangePolicy::default(),
    )?;
    println!("{:>7} {:>14} {:>14} {:>10} {:>9}", "L", "width", "peak", "h(2)", "twisted");
    for e in &report.entries {
        println!(
            "{:>7} {:>7.3} ± {:<5.3} {:>6.3} ± {:<5.3} {:>10.3} {:>8.0}%{}",
            e.length,
            e.mean_width,
            e.std_width,
            e.mean_peak,
            e.std_peak,
            e.mean_h2,
            100.0 * e.twisted_fraction,
            if e.unreliable { "  unreliable" } else { "" }
        );
    }
    println!("config fingerprint {}", report.config_fingerprint);
    Ok(())
}
