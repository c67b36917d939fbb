use lrvoter_core::analytic::q_norm_squared;
use lrvoter_core::coalesce::{
    coalesce_prob_fourier, coalesce_prob_mc, default_t_max, far_field_hitting, run_backward, CoalescenceFrontier,
    ESCAPE_RADIUS,
};
use lrvoter_core::{Error, Site, StepLaw};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn row(n: i64, t: i64) -> Vec<Site> {
    (0..n).map(|i| Site::new(i, t)).collect()
}

#[test]
fn degenerate_inputs() {
    let law = StepLaw::canonical(0.5).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(0);
    let lab = run_backward(&[Site::new(0, 0)], &law, 0, &mut rng).unwrap();
    assert_eq!((lab.component_count(), lab.residual_clusters()), (1, 1));
    assert!(matches!(
        run_backward(&[Site::new(4, 2), Site::new(4, 2)], &law, 5, &mut rng),
        Err(Error::DuplicateSite { space: 4, time: 2 })
    ));
    let mc = coalesce_prob_mc(&law, 0, 10, 5, ESCAPE_RADIUS, &mut rng).unwrap();
    assert!(mc.degenerate);
    assert_eq!(mc.estimate, 1.0);
    assert!(coalesce_prob_mc(&law, 3, 10, 0, ESCAPE_RADIUS, &mut rng).is_err());
}

#[test]
fn one_step_matches_convolution() {
    // P(D₁ = 0) = Σ_m pmf(m)·pmf(m+k).
    let law = StepLaw::canonical(0.5).unwrap();
    for k in [1i64, 3] {
        let mut exact = 0.0;
        for m in -2_000_000i64..=2_000_000 {
            exact += law.pmf(m) * law.pmf(m + k);
        }
        let mut rng = ChaCha8Rng::seed_from_u64(k as u64);
        let mc = coalesce_prob_mc(&law, k, 1, 200_000, ESCAPE_RADIUS, &mut rng).unwrap();
        assert!((mc.estimate - exact).abs() < 3.0 * mc.stderr, "k {k}: {} vs {exact}", mc.estimate);
        assert!(mc.live_fraction + mc.escaped_fraction + mc.estimate > 0.999_999);
    }
}

#[test]
fn fourier_probability_shape() {
    let law = StepLaw::canonical(0.5).unwrap();
    let q = q_norm_squared(&law).unwrap().value;
    assert!((coalesce_prob_fourier(&law, 0, q).unwrap() - 1.0).abs() < 1e-10);
    let ks = [1i64, 2, 5, 10, 20, 100, 1000, 10_000];
    let ps: Vec<f64> = ks.iter().map(|&k| coalesce_prob_fourier(&law, k, q).unwrap()).collect();
    // Not monotone at the first step: the law has no atom at 0, so k = 1 is
    // harder to close than k = 2.
    assert!(ps[0] < ps[1]);
    for w in ps[1..].windows(2) {
        assert!(w[1] < w[0]);
    }
    assert!(ps[ps.len() - 1] < 0.01);
    // Infinitely many components: merging is unlikely beyond a finite range.
    let threshold = ks.iter().zip(&ps).find(|(_, &p)| p < 0.5).map(|(&k, _)| k).unwrap();
    assert!(threshold <= 20);
    // Far field: P ≈ Γ(1−α)sin(πα/2)k^(α−1)/(2π·a·‖Q‖²).
    let far = coalesce_prob_fourier(&law, 10_000, q).unwrap();
    let lead = far_field_hitting(&law, 10_000.0, q);
    assert!((far / lead - 1.0).abs() < 0.02, "{far} vs {lead}");
}

#[test]
fn symmetric_in_k() {
    let law = StepLaw::canonical(0.7).unwrap();
    let q = q_norm_squared(&law).unwrap().value;
    assert_eq!(coalesce_prob_fourier(&law, 7, q).unwrap(), coalesce_prob_fourier(&law, -7, q).unwrap());
}

#[test]
fn frontier_matches_difference_walk() {
    // Both estimate P(merge within t_max steps) for the pair {(0,0),(1,0)}.
    let law = StepLaw::canonical(0.5).unwrap();
    let t_max = 2000;
    let reps = 20_000u64;
    let sites = [Site::new(0, 0), Site::new(1, 0)];
    let mut merged = 0u64;
    for r in 0..reps {
        let mut rng = ChaCha8Rng::seed_from_u64(r);
        if run_backward(&sites, &law, t_max, &mut rng).unwrap().component_count() == 1 {
            merged += 1;
        }
    }
    let f = merged as f64 / reps as f64;
    let se_f = (f * (1.0 - f) / reps as f64).sqrt();
    let mut rng = ChaCha8Rng::seed_from_u64(99);
    let mc = coalesce_prob_mc(&law, 1, t_max, reps, i64::MAX / 4, &mut rng).unwrap();
    let se = (se_f * se_f + mc.stderr * mc.stderr).sqrt();
    assert!((f - mc.estimate).abs() < 3.0 * se, "{f} vs {}", mc.estimate);
}

#[test]
fn merging_is_monotone_in_horizon() {
    let law = StepLaw::canonical(0.5).unwrap();
    let sites = row(300, 0);
    for seed in 0..5 {
        let mut prev = usize::MAX;
        let mut prev_comp = usize::MAX;
        for t_max in [0u64, 1, 10, 100, 1000] {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let lab = run_backward(&sites, &law, t_max, &mut rng).unwrap();
            assert!(lab.residual_clusters() <= prev);
            assert!(lab.component_count() <= prev_comp);
            prev = lab.residual_clusters();
            prev_comp = lab.component_count();
        }
    }
}

#[test]
fn shift_gives_same_labeling() {
    let law = StepLaw::canonical(0.6).unwrap();
    let a = row(200, 0);
    let b: Vec<Site> = a.iter().map(|s| Site::new(s.space + 12345, s.time)).collect();
    let la = run_backward(&a, &law, 500, &mut ChaCha8Rng::seed_from_u64(4)).unwrap();
    let lb = run_backward(&b, &law, 500, &mut ChaCha8Rng::seed_from_u64(4)).unwrap();
    assert_eq!(la.labels(), lb.labels());
}

#[test]
fn shift_preserves_component_law() {
    // Distributional version across seeds: mean component count is equal.
    let law = StepLaw::canonical(0.5).unwrap();
    let a = row(64, 0);
    let b: Vec<Site> = (0..64).map(|i| Site::new(i - 1000, 7)).collect();
    let count = |sites: &[Site], base: u64| -> Vec<f64> {
        (0..400)
            .map(|r| {
                let mut rng = ChaCha8Rng::seed_from_u64(base + r);
                run_backward(sites, &law, 300, &mut rng).unwrap().component_count() as f64
            })
            .collect()
    };
    let (ma, sa) = lrvoter_core::stats::mean_stderr(&count(&a, 0));
    let (mb, sb) = lrvoter_core::stats::mean_stderr(&count(&b, 10_000));
    assert!((ma - mb).abs() < 4.0 * (sa * sa + sb * sb).sqrt());
}

#[test]
fn slice_sizes() {
    let law = StepLaw::canonical(0.5).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let lab = run_backward(&row(40, 0), &law, 0, &mut rng).unwrap();
    assert_eq!(lab.component_slice_sizes(0).unwrap(), vec![1; 40]);
    // A long horizon on a short row merges everything.
    let lab = run_backward(&row(4, 0), &law, 1_000_000, &mut rng).unwrap();
    if lab.component_count() == 1 {
        assert_eq!(lab.component_slice_sizes(0).unwrap(), vec![4]);
    }
    let total: usize = lab.component_slice_sizes(0).unwrap().iter().sum();
    assert_eq!(total, 4);
}

#[test]
fn labels_are_dense_in_first_appearance_order() {
    let law = StepLaw::canonical(0.5).unwrap();
    let mut sites = row(100, 0);
    sites.extend(row(100, 20));
    let lab = run_backward(&sites, &law, 400, &mut ChaCha8Rng::seed_from_u64(8)).unwrap();
    let mut next = 0;
    for &l in lab.labels() {
        assert!(l <= next);
        if l == next {
            next += 1;
        }
    }
    assert_eq!(next as usize, lab.component_count());
    assert!(lab.residual_clusters() <= lab.component_count());
}

#[test]
fn frontier_reports_progress() {
    let law = StepLaw::canonical(0.5).unwrap();
    let sites = row(1000, 0);
    let mut f = CoalescenceFrontier::new(&sites, &law).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    assert_eq!(f.live_count(), 1000);
    for _ in 0..50 {
        f.step(&mut rng);
    }
    assert!(f.live_count() < 1000);
    assert!(f.clusters() <= 1000);
    assert!(f.finished(50));
    let lab = f.into_labeling(50);
    assert_eq!(lab.cutoff_used(), 50);
}

#[test]
fn default_horizon() {
    let law = StepLaw::canonical(0.5).unwrap();
    let t = default_t_max(&law, 1024, 8.0);
    assert_eq!(t, (8.0 * 32.0 * 1024f64.ln()).ceil() as u64);
}
