//! Seeded ensemble properties of the generator and the shuffle surrogate.

use mfscale::series::{shuffle_returns, to_returns};
use mfscale::{analyze_profile, generate_rmd, MfdfaConfig, RangeSelection, RmdParams, Series};
use rayon::prelude::*;

fn rmd(hurst: f64, levels: u32, seed: u64) -> Series {
    generate_rmd(&RmdParams::new(hurst, levels, seed).trimmed()).unwrap()
}

fn h2(series: &Series) -> f64 {
    analyze_profile(series, &MfdfaConfig::default(), &RangeSelection::default())
        .unwrap()
        .hurst
        .hurst()
}

fn mean(v: &[f64]) -> f64 {
    v.iter().sum::<f64>() / v.len() as f64
}

#[test]
fn shuffling_removes_persistence() {
    let shuffled: Vec<f64> = (1..=20u64)
        .into_par_iter()
        .map(|seed| h2(&shuffle_returns(&rmd(0.7, 14, seed), seed + 100).unwrap()))
        .collect();
    let m = mean(&shuffled);
    assert!((m - 0.5).abs() <= 0.05, "mean h(2) of shuffled H = 0.7 traces {m}");
}

#[test]
fn memoryless_increments_are_balanced() {
    let fractions: Vec<f64> = (1..=20u64)
        .map(|seed| {
            let r = to_returns(&rmd(0.5, 14, seed)).unwrap();
            r.values().iter().filter(|&&x| x > 0.0).count() as f64 / r.len() as f64
        })
        .collect();
    let m = mean(&fractions);
    assert!((0.45..=0.55).contains(&m), "positive fraction {m}");
}

#[test]
fn hurst_estimate_follows_the_input() {
    for seed in 1..=10u64 {
        let h: Vec<f64> = [0.3, 0.5, 0.7].iter().map(|&hurst| h2(&rmd(hurst, 13, seed))).collect();
        assert!(h[0] < h[1] && h[1] < h[2], "seed {seed}: {h:?}");
    }
}
