//! Shuffling the returns of a persistent trace destroys its memory: h(2)
//! falls from about 0.7 to about 0.5.
//!
//! cargo run --release --example shuffle_surrogate

use mfscale::series::{shuffle_returns, to_profile, to_returns};
use mfscale::{analyze_profile, generate_rmd, MfdfaConfig, RangeSelection, RmdParams};

fn main() -> mfscale::Result<()> {
    let config = MfdfaConfig::default();
    let selection = RangeSelection::default();
    for seed in 1..=5 {
        let trace = generate_rmd(&RmdParams::new(0.7, 14, seed))?;
        let original = analyze_profile(&trace, &config, &selection)?;
        let shuffled = shuffle_returns(&trace, 1000 + seed)?;
        let surrogate = analyze_profile(&to_profile(&to_returns(&shuffled)?)?, &config, &selection)?;
        println!(
            "seed {seed}: h(2) original {:.3}  shuffled {:.3}",
            original.hurst.hurst(),
            surrogate.hurst.hurst()
        );
    }
    Ok(())
}
