use mfscale::mfdfa::{fluctuation_surface, q_range, FluctuationSurface, MfdfaConfig, WindowSizes};
use mfscale::scaling::{auto_range, estimate_hurst, fit_h, AutoRangePolicy, RangeSelection, ScaleBounds};
use mfscale::series::{integrate_returns, shuffle_returns, slice, to_profile, to_returns};
use mfscale::spectrum::{legendre_spectrum, TWIST_THRESHOLD};
use mfscale::surgery::{excise, excise_detailed, Interval};
use mfscale::{ExcisionSpec, HurstFunction, Representation, Series, SliceSpec};
use proptest::prelude::*;

fn close(a: f64, b: f64, rel: f64) -> bool {
    (a - b).abs() <= rel * a.abs().max(b.abs())
}

fn profile(values: Vec<f64>) -> Series {
    Series::new(values, Representation::Profile, "p").unwrap()
}

fn walk(steps: &[f64]) -> Vec<f64> {
    steps
        .iter()
        .scan(0.0, |acc, &r| {
            *acc += r;
            Some(*acc)
        })
        .collect()
}

fn small_config(order: usize, windows: Vec<usize>) -> MfdfaConfig {
    MfdfaConfig::default()
        .with_order(order)
        .with_windows(WindowSizes::Explicit(windows))
}

fn steps(len: std::ops::Range<usize>) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(-1.0f64..1.0, len)
}

fn hurst_of(q: &[f64], h: impl Fn(f64) -> f64) -> HurstFunction {
    let surface = power_surface(&log_sizes(10, 1000, 12), q, &h);
    estimate_hurst(&surface, &RangeSelection::Full).unwrap()
}

fn log_sizes(lo: usize, hi: usize, n: usize) -> Vec<usize> {
    let (a, b) = ((lo as f64).ln(), (hi as f64).ln());
    let mut v: Vec<usize> = (0..n)
        .map(|i| (a + (b - a) * i as f64 / (n - 1) as f64).exp().round() as usize)
        .collect();
    v.dedup();
    v
}

/// Surface with `F(s, q) = c(q) s^h(q)` exactly.
fn power_surface(sizes: &[usize], q: &[f64], h: impl Fn(f64) -> f64) -> FluctuationSurface {
    let values = sizes
        .iter()
        .map(|&s| q.iter().map(|&q| (0.3 + 0.01 * q).exp() * (s as f64).powf(h(q))).collect())
        .collect();
    FluctuationSurface {
        series_len: 4 * sizes[sizes.len() - 1],
        config: MfdfaConfig::default().with_q_grid(q.to_vec()),
        window_sizes: sizes.to_vec(),
        q_grid: q.to_vec(),
        values,
        box_counts: vec![2; sizes.len()],
        degenerate_counts: vec![0; sizes.len()],
        box_variances: vec![vec![]; sizes.len()],
        dropped_windows: vec![],
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn returns_round_trip(levels in prop::collection::vec(-50.0f64..50.0, 2..300)) {
        let x = Series::new(levels, Representation::LogPrice, "x").unwrap();
        let back = integrate_returns(&to_returns(&x).unwrap(), x.values()[0], Representation::LogPrice).unwrap();
        let scale = x.values().iter().fold(1.0f64, |m, v| m.max(v.abs()));
        for (a, b) in back.values().iter().zip(x.values()) {
            prop_assert!((a - b).abs() <= 1e-10 * scale);
        }
    }

    #[test]
    fn shuffle_preserves_endpoints_and_returns(levels in prop::collection::vec(-5.0f64..5.0, 2..200), seed in any::<u64>()) {
        let x = Series::new(levels, Representation::LogPrice, "x").unwrap();
        let y = shuffle_returns(&x, seed).unwrap();
        prop_assert_eq!(y.len(), x.len());
        prop_assert_eq!(y.values()[0], x.values()[0]);
        let n = x.len() - 1;
        prop_assert!((y.values()[n] - x.values()[n]).abs() < 1e-9);
        let sorted = |s: &Series| {
            let mut r = to_returns(s).unwrap().into_values();
            r.sort_by(f64::total_cmp);
            r
        };
        for (a, b) in sorted(&x).iter().zip(sorted(&y)) {
            prop_assert!((a - b).abs() < 1e-9);
        }
        prop_assert_eq!(shuffle_returns(&x, seed).unwrap(), y);
    }

    #[test]
    fn profile_ends_at_zero(r in prop::collection::vec(-1e3f64..1e3, 1..500)) {
        let max = r.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        let n = r.len();
        let p = to_profile(&Series::new(r, Representation::Return, "r").unwrap()).unwrap();
        prop_assert!(p.values()[n - 1].abs() <= 1e-9 * n as f64 * max.max(f64::MIN_POSITIVE));
    }

    #[test]
    fn slices_compose(len in 2usize..100, cuts in prop::array::uniform4(0.0f64..1.0)) {
        let x = Series::new((0..len).map(|i| i as f64).collect(), Representation::Return, "x").unwrap();
        let a = (cuts[0] * len as f64) as usize % len;
        let b = a + 1 + (cuts[1] * (len - a) as f64) as usize % (len - a);
        let w = b - a;
        let c = (cuts[2] * w as f64) as usize % w;
        let d = c + 1 + (cuts[3] * (w - c) as f64) as usize % (w - c);
        let nested = slice(&slice(&x, SliceSpec::new(a, b)).unwrap(), SliceSpec::new(c, d)).unwrap();
        prop_assert_eq!(nested, slice(&x, SliceSpec::new(a + c, a + d)).unwrap());
    }

    #[test]
    fn fluctuation_is_nondecreasing_in_q(r in steps(200..800), order in 1usize..4) {
        let p = profile(walk(&r));
        let surface = fluctuation_surface(&p, &small_config(order, vec![6, 9, 15, 24, 40])).unwrap();
        for row in &surface.values {
            for w in row.windows(2) {
                prop_assert!(w[0] <= w[1], "{} > {}", w[0], w[1]);
            }
        }
    }

    #[test]
    fn amplitude_scaling(r in steps(200..600), lambda in 1e-3f64..1e3) {
        let config = small_config(2, vec![8, 12, 20, 32, 50]);
        let base = fluctuation_surface(&profile(walk(&r)), &config).unwrap();
        let scaled_values: Vec<f64> = walk(&r).iter().map(|v| lambda * v).collect();
        let scaled = fluctuation_surface(&profile(scaled_values), &config).unwrap();
        for (a, b) in base.values.iter().flatten().zip(scaled.values.iter().flatten()) {
            prop_assert!(close(lambda * a, *b, 1e-12), "{} vs {}", lambda * a, b);
        }
        let h = estimate_hurst(&base, &RangeSelection::Full).unwrap();
        let hs = estimate_hurst(&scaled, &RangeSelection::Full).unwrap();
        for (a, b) in h.h_values().iter().zip(hs.h_values()) {
            prop_assert!((a - b).abs() < 1e-9);
        }
    }

    #[test]
    fn reversal_symmetry(r in steps(100..400), order in 1usize..4) {
        let mut values = walk(&r);
        let sizes = vec![5, 8, 10];
        let n = values.len() / 40 * 40;
        values.truncate(n.max(40));
        if values.len() < 40 {
            values.resize(40, 0.5);
        }
        let config = small_config(order, sizes);
        let forward = fluctuation_surface(&profile(values.clone()), &config).unwrap();
        values.reverse();
        let backward = fluctuation_surface(&profile(values), &config).unwrap();
        for (a, b) in forward.values.iter().flatten().zip(backward.values.iter().flatten()) {
            prop_assert!(close(*a, *b, 1e-10), "{} vs {}", a, b);
        }
    }

    #[test]
    fn global_polynomials_are_invisible(
        r in steps(200..500),
        order in 1usize..4,
        coeffs in prop::array::uniform4(-1.0f64..1.0),
    ) {
        let config = small_config(order, vec![8, 12, 20, 32]);
        let values = walk(&r);
        let base = fluctuation_surface(&profile(values.clone()), &config).unwrap();
        let n = values.len() as f64;
        let shifted: Vec<f64> = values
            .iter()
            .enumerate()
            .map(|(t, v)| {
                let x = t as f64 / n;
                v + (0..=order).map(|k| 10.0 * coeffs[k] * x.powi(k as i32)).sum::<f64>()
            })
            .collect();
        let moved = fluctuation_surface(&profile(shifted), &config).unwrap();
        for (a, b) in base.values.iter().flatten().zip(moved.values.iter().flatten()) {
            prop_assert!(close(*a, *b, 1e-9), "{} vs {}", a, b);
        }
    }

    #[test]
    fn sub_range_of_exact_power_law(h in 0.1f64..1.5, lo in 0usize..10, width in 4usize..10) {
        let sizes = log_sizes(10, 5000, 30);
        let q = q_range(-2.0, 2.0, 0.5);
        let surface = power_surface(&sizes, &q, |_| h);
        let hi = (lo + width).min(sizes.len() - 1);
        let part = fit_h(&surface, 2.0, ScaleBounds { s_lo: sizes[lo], s_hi: sizes[hi] }).unwrap();
        let full = fit_h(&surface, 2.0, ScaleBounds { s_lo: sizes[0], s_hi: sizes[sizes.len() - 1] }).unwrap();
        prop_assert!((part.slope - full.slope).abs() < 1e-10);
        prop_assert!((part.slope - h).abs() < 1e-10);
    }

    #[test]
    fn auto_range_is_deterministic(r in steps(1500..3000)) {
        let surface = fluctuation_surface(&profile(walk(&r)), &MfdfaConfig::default()).unwrap();
        let policy = AutoRangePolicy::default();
        for q in [-3.0, 0.0, 2.0] {
            let a = auto_range(&surface, q, &policy).ok();
            let b = auto_range(&surface.clone(), q, &policy).ok();
            prop_assert_eq!(a, b);
        }
    }

    #[test]
    fn legendre_anchor_and_bounds(a in 0.2f64..0.9, b in 0.0f64..0.05, c in 0.0f64..0.004) {
        // h(q) = a - b q - c q^3 is nonincreasing, so f stays at or below 1
        let grid = q_range(-5.0, 5.0, 0.25);
        let hf = hurst_of(&grid, |q| a - b * q - c * q.powi(3));
        let spectrum = legendre_spectrum(&hf).unwrap();
        let zero = spectrum.at_q(0.0).unwrap();
        prop_assert!((zero.f - 1.0).abs() < 1e-12);
        for p in &spectrum.points {
            prop_assert!(p.f <= 1.0 + 0.02, "f = {} at q = {}", p.f, p.q);
        }
        // df/dα between neighbours approximates the midpoint q
        for w in spectrum.points.windows(2) {
            let da = w[1].alpha - w[0].alpha;
            if da.abs() > 1e-9 {
                let slope = (w[1].f - w[0].f) / da;
                let mid = 0.5 * (w[0].q + w[1].q);
                prop_assert!((slope - mid).abs() <= 1.5 * 0.25, "slope {} at q {}", slope, mid);
            }
        }
    }

    #[test]
    fn twisted_flag_matches_alpha(bump in -0.05f64..0.05, centre in -3.0f64..3.0) {
        let grid = q_range(-5.0, 5.0, 0.25);
        let hf = hurst_of(&grid, |q| 0.5 - 0.01 * q + bump * (-(q - centre).powi(2)).exp());
        let spectrum = legendre_spectrum(&hf).unwrap();
        let rises = spectrum.points.windows(2).any(|w| w[1].alpha > w[0].alpha + TWIST_THRESHOLD);
        prop_assert_eq!(spectrum.twisted, rises);
    }

    #[test]
    fn excision_bookkeeping(levels in prop::collection::vec(-5.0f64..5.0, 10..120), picks in prop::collection::vec(0.0f64..1.0, 4)) {
        let x = Series::new(levels, Representation::LogPrice, "x").unwrap();
        let n = x.len() - 1;
        let mut cuts: Vec<usize> = picks.iter().map(|p| (p * n as f64) as usize).collect();
        cuts.sort();
        cuts.dedup();
        let intervals: Vec<Interval> = cuts
            .chunks(2)
            .filter(|c| c.len() == 2 && c[0] < c[1])
            .map(|c| Interval::new(c[0], c[1]))
            .collect();
        let spec = ExcisionSpec::new(intervals.clone()).unwrap();
        let out = excise_detailed(&x, &spec).unwrap();
        prop_assert_eq!(out.series.len(), x.len() - spec.removed_count());
        let returns = to_returns(&x).unwrap();
        let expected: Vec<f64> = (0..n).filter(|&i| !spec.contains(i)).map(|i| returns.values()[i]).collect();
        prop_assert_eq!(
            out.retained_returns.iter().map(|v| v.to_bits()).collect::<Vec<_>>(),
            expected.iter().map(|v| v.to_bits()).collect::<Vec<_>>()
        );

        // two halves in either order match the union
        let (first, second): (Vec<_>, Vec<_>) = intervals.iter().enumerate().partition(|(i, _)| i % 2 == 0);
        let a = ExcisionSpec::new(first.into_iter().map(|(_, iv)| *iv).collect()).unwrap();
        let b = ExcisionSpec::new(second.into_iter().map(|(_, iv)| *iv).collect()).unwrap();
        let ab = excise(&excise(&x, &a).unwrap(), &b.reindex_after(&a).unwrap()).unwrap();
        let ba = excise(&excise(&x, &b).unwrap(), &a.reindex_after(&b).unwrap()).unwrap();
        let both = excise(&x, &spec).unwrap();
        for ((p, q), r) in ab.values().iter().zip(ba.values()).zip(both.values()) {
            prop_assert!((p - r).abs() < 1e-10 && (q - r).abs() < 1e-10);
        }
        prop_assert_eq!(excise(&x, &ExcisionSpec::empty()).unwrap(), x);
    }
}
