use lrvoter_core::analytic::window_covariance;
use lrvoter_core::coalesce::default_t_max;
use lrvoter_core::field::{conditional_variance, microscopic_time, recolored_sum, sample_equilibrium_field, ColoringLaw};
use lrvoter_core::stats::{mean_stderr, variance_stderr};
use lrvoter_core::{AnalyticConstants, StepLaw};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

#[test]
fn single_site_is_bernoulli() {
    let law = StepLaw::canonical(0.5).unwrap();
    let p = 0.3;
    let reps = 20_000;
    let mut ups = 0;
    for r in 0..reps {
        let mut rng = ChaCha8Rng::seed_from_u64(r);
        let f = sample_equilibrium_field(&law, p, 0, &[0], 10, &mut rng).unwrap();
        if f.value(0, 0) == 1 {
            ups += 1;
        }
    }
    let freq = ups as f64 / reps as f64;
    assert!((freq - p).abs() < 3.0 * (p * (1.0 - p) / reps as f64).sqrt());
}

#[test]
fn rejects_bad_inputs() {
    let law = StepLaw::canonical(0.5).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(0);
    assert!(sample_equilibrium_field(&law, 1.0, 10, &[0], 10, &mut rng).is_err());
    assert!(sample_equilibrium_field(&law, 0.5, 10, &[], 10, &mut rng).is_err());
    let f = sample_equilibrium_field(&law, 0.5, 10, &[0], 10, &mut rng).unwrap();
    assert!(f.partial_sum(1.5, 0).is_err());
    assert!(f.partial_sum(0.5, 1).is_err());
    assert!(f.rescaled(0.0, 0.5, 0).is_err());
}

#[test]
fn partial_sums_are_walks() {
    let law = StepLaw::canonical(0.5).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let n = 500;
    let f = sample_equilibrium_field(&law, 0.5, n, &[0, 7], 2000, &mut rng).unwrap();
    for slice in 0..2 {
        assert_eq!(f.partial_sum(0.0, slice).unwrap(), f.value(0, slice) as i64);
        let mut prev = f.partial_sum(0.0, slice).unwrap();
        for i in 1..=n {
            let s = f.partial_sum(i as f64 / n as f64, slice).unwrap();
            assert_eq!((s - prev).abs(), 1);
            assert_eq!(s - prev, f.value(i, slice) as i64);
            prev = s;
        }
        assert!(f.rescaled(40.0, 0.0, slice).unwrap().abs() <= 1.0 / 40.0);
    }
}

#[test]
fn nearly_certain_color_gives_counting_sums() {
    let law = StepLaw::canonical(0.5).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let n = 200;
    let f = sample_equilibrium_field(&law, 1.0 - 1e-15, n, &[0], 100, &mut rng).unwrap();
    for x in [0.0, 0.13, 0.5, 1.0] {
        let m = (x * n as f64).floor() as i64;
        assert_eq!(f.partial_sum(x, 0).unwrap(), m + 1);
    }
}

#[test]
fn same_component_same_value() {
    let law = StepLaw::canonical(0.5).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let n = 300;
    let f = sample_equilibrium_field(&law, 0.5, n, &[0, 0, 30], 3000, &mut rng).unwrap();
    let width = n + 1;
    let labels = f.labeling().labels();
    let levels = [0usize, 2];
    for (a, &sa) in levels.iter().enumerate() {
        for (b, &sb) in levels.iter().enumerate() {
            for i in (0..width).step_by(7) {
                for j in (0..width).step_by(11) {
                    if labels[a * width + i] == labels[b * width + j] {
                        assert_eq!(f.value(i, sa), f.value(j, sb));
                    }
                }
            }
        }
    }
    for i in 0..width {
        assert_eq!(f.value(i, 0), f.value(i, 1));
    }
}

#[test]
fn site_mean_is_two_p_minus_one() {
    let law = StepLaw::canonical(0.5).unwrap();
    let p = 0.3;
    let means: Vec<f64> = (0..400)
        .map(|r| {
            let mut rng = ChaCha8Rng::seed_from_u64(r);
            let f = sample_equilibrium_field(&law, p, 64, &[0], 200, &mut rng).unwrap();
            f.value(17, 0) as f64
        })
        .collect();
    let (m, se) = mean_stderr(&means);
    assert!((m - (2.0 * p - 1.0)).abs() < 3.0 * se);
}

#[test]
fn increments_are_stationary() {
    let law = StepLaw::canonical(0.5).unwrap();
    let n = 256;
    let mut left = Vec::new();
    let mut right = Vec::new();
    for r in 0..600 {
        let mut rng = ChaCha8Rng::seed_from_u64(r);
        let f = sample_equilibrium_field(&law, 0.5, n, &[0], 1000, &mut rng).unwrap();
        left.push((f.value(3, 0) * f.value(5, 0)) as f64);
        right.push((f.value(200, 0) * f.value(202, 0)) as f64);
    }
    let (a, sa) = mean_stderr(&left);
    let (b, sb) = mean_stderr(&right);
    assert!((a - b).abs() < 4.0 * (sa * sa + sb * sb).sqrt());
    assert!(a > 0.0);
}

#[test]
fn recoloring_matches_conditional_variance() {
    let law = StepLaw::canonical(0.5).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let f = sample_equilibrium_field(&law, 0.5, 400, &[0], 2000, &mut rng).unwrap();
    let w = f.component_sums(0, |_| 1.0);
    assert_eq!(w.iter().sum::<f64>(), 401.0);
    for coloring in [ColoringLaw::Bernoulli { p: 0.5 }, ColoringLaw::Bernoulli { p: 0.2 }, ColoringLaw::Uniform] {
        let target = conditional_variance(&w, coloring);
        let draws: Vec<f64> = (0..20_000).map(|_| recolored_sum(&w, coloring, &mut rng)).collect();
        let (m, se) = mean_stderr(&draws);
        assert!(m.abs() < 4.0 * se);
        let (v, vse) = variance_stderr(&draws).unwrap();
        assert!((v - target).abs() < 4.0 * vse, "{v} vs {target}");
    }
    // The field's own colors are one such draw.
    let own: f64 = (0..=400).map(|i| f.value(i, 0) as f64).sum();
    assert_eq!(own as i64, f.prefix_sum(400, 0));
}

#[test]
fn slice_times() {
    let law = StepLaw::canonical(0.5).unwrap();
    assert_eq!(microscopic_time(&law, 1.0, 1 << 14), 128);
    assert_eq!(microscopic_time(&law, 2.0, 1 << 13), 181);
    assert_eq!(microscopic_time(&law, 0.0, 1 << 13), 0);
}

#[test]
fn variance_close_to_exact_window_value() {
    // Sample variance of S(n,0)/σ_n against the exact finite-window variance.
    let law = StepLaw::canonical(0.5).unwrap();
    let k = AnalyticConstants::new(&law).unwrap();
    let n = 1024usize;
    let sigma = k.sigma_n(0.5, n as u64).unwrap();
    let t_max = default_t_max(&law, n as u64, 8.0);
    let xs: Vec<f64> = (0..1000)
        .map(|r| {
            let mut rng = ChaCha8Rng::seed_from_u64(r);
            let f = sample_equilibrium_field(&law, 0.5, n, &[0], t_max, &mut rng).unwrap();
            f.rescaled(sigma, 1.0, 0).unwrap()
        })
        .collect();
    let (m, se) = mean_stderr(&xs);
    assert!(m.abs() < 3.0 * se);
    let (v, vse) = variance_stderr(&xs).unwrap();
    let exact = window_covariance(&law, k.q_norm2, 0.5, n as u64, n as u64, 0).unwrap() / (sigma * sigma);
    assert!((v - exact).abs() < 3.0 * vse + 0.01, "{v} ± {vse} vs {exact}");
    assert!((v - 1.0).abs() < 0.1);
}
