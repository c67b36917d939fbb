use std::f64::consts::PI;

use approx::assert_relative_eq;
use lrvoter_core::analytic::{
    c_alpha, fgn_variance, q_norm_squared, sample_w_exact, v_integral, v_zero_closed_form, w_covariance,
    window_covariance, GaussianSampler, GridFunction,
};
use lrvoter_core::stats::empirical_covariance;
use lrvoter_core::{AnalyticConstants, Error, LimitField, SpaceTimePoint, StepLaw};
use nalgebra::DMatrix;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

const SQRT_PI: f64 = 1.772_453_850_905_516;
const GAMMA_QUARTER: f64 = 3.625_609_908_221_908;

fn simpson<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, panels: usize) -> f64 {
    let h = (b - a) / panels as f64;
    let mut s = f(a) + f(b);
    for k in 1..panels {
        s += if k % 2 == 1 { 4.0 } else { 2.0 } * f(a + k as f64 * h);
    }
    s * h / 3.0
}

// Halve the Simpson step until three successive refinements agree.
fn halving<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, start: usize, tol: f64) -> f64 {
    let mut panels = start;
    let mut prev = [simpson(f, a, b, panels), f64::NAN];
    loop {
        panels *= 2;
        let cur = simpson(f, a, b, panels);
        if (cur - prev[0]).abs() < tol && (prev[0] - prev[1]).abs() < tol {
            return cur;
        }
        assert!(panels < 1 << 24, "oracle did not settle: {cur} {:?}", prev);
        prev = [cur, prev[0]];
    }
}

// Brute-force V(τ,1): u = w^10 turns both u^{−α} and u^α into integer powers
// of w for α ∈ 0.1ℤ, so Simpson sees a smooth integrand on [0,1]. Plain
// Simpson on [1, 4000], analytic tail of the non-oscillating part.
fn v_oracle(alpha: f64, tau: f64) -> f64 {
    let c = (0.5 * alpha * PI).cos() * lrvoter_core::special::gamma(1.0 - alpha);
    let g = |u: f64| 2.0 * (0.5 * u).sin().powi(2) / u.powf(2.0 + alpha) * (-c * tau * u.powf(alpha)).exp();
    let near = |w: f64| if w == 0.0 { 0.0 } else { g(w.powi(10)) * 10.0 * w.powi(9) };
    let upper = 4000.0;
    let mut v = halving(&near, 0.0, 1.0, 64, 1e-9) + halving(&g, 1.0, upper, 1 << 14, 1e-9);
    if tau == 0.0 {
        v += upper.powf(-1.0 - alpha) / (1.0 + alpha);
    }
    v
}

fn fbm(h: f64, a: f64, b: f64) -> f64 {
    0.5 * (a.abs().powf(2.0 * h) + b.abs().powf(2.0 * h) - (a - b).abs().powf(2.0 * h))
}

#[test]
fn c_alpha_values() {
    assert_relative_eq!(c_alpha(0.5).unwrap(), (0.25 * PI).cos() * SQRT_PI, epsilon = 1e-14);
    assert!((c_alpha(0.5).unwrap() - 1.2533141).abs() < 1e-7);
    assert!((c_alpha(1e-9).unwrap() - 1.0).abs() < 1e-6);
    assert!((c_alpha(0.9).unwrap() - 1.4882).abs() < 1e-4);
    assert!(c_alpha(1.0).is_err());
}

#[test]
fn v_zero_matches_closed_form_and_oracle() {
    for alpha in [0.3, 0.5, 0.7, 0.9] {
        let v = v_integral(alpha, 0.0, 1.0).unwrap();
        assert_relative_eq!(v, v_zero_closed_form(alpha).unwrap(), max_relative = 1e-12);
    }
    let v = v_integral(0.5, 0.0, 1.0).unwrap();
    assert!((v - v_oracle(0.5, 0.0)).abs() < 1e-8);
    assert!((v - 1.671_085).abs() < 1e-5);
}

#[test]
fn v_matches_brute_force() {
    for alpha in [0.3, 0.5, 0.8] {
        for tau in [0.5, 1.0, 2.0] {
            let got = v_integral(alpha, tau, 1.0).unwrap();
            let want = v_oracle(alpha, tau);
            assert!((got - want).abs() < 1e-8, "alpha {alpha} tau {tau}: {got} vs {want}");
        }
    }
}

#[test]
fn v_depends_on_ratio_only() {
    let alpha = 0.5;
    assert_eq!(v_integral(alpha, 0.0, 3.7).unwrap(), v_integral(alpha, 0.0, 1.0).unwrap());
    for (t, x) in [(0.7, 2.0), (3.0, 0.25), (1.0, 9.0)] {
        let lhs = v_integral(alpha, t, x).unwrap();
        let rhs = v_integral(alpha, t / x.powf(alpha), 1.0).unwrap();
        assert_relative_eq!(lhs, rhs, max_relative = 1e-10);
    }
}

#[test]
fn v_decreases_to_zero() {
    let field = LimitField::new(0.5).unwrap();
    let mut prev = field.v0();
    for k in 1..40 {
        let v = field.v(0.1 * k as f64, 1.0).unwrap();
        assert!(v < prev);
        prev = v;
    }
    // V(t,1) decays like t^{−(1−α)/α}.
    assert!(field.v(1e8, 1.0).unwrap() < 1e-6);
    assert!(field.cached_values() > 1);
}

#[test]
fn q_norm_exceeds_one_and_grows_with_alpha() {
    let q5 = q_norm_squared(&StepLaw::canonical(0.5).unwrap()).unwrap().value;
    let q95 = q_norm_squared(&StepLaw::canonical(0.95).unwrap()).unwrap().value;
    assert!(q5 > 1.0);
    assert!(q95 > q5);
    // Regression value.
    assert!((q5 - 1.106_032_362_663).abs() < 1e-9);
}

#[test]
fn c_tilde_properties() {
    let k = AnalyticConstants::new(&StepLaw::canonical(0.5).unwrap()).unwrap();
    let half = k.c_tilde_p(0.5).unwrap();
    assert_relative_eq!(half, 1.0 / (2.0 * PI * k.c_alpha * k.q_norm2), max_relative = 1e-14);
    for p in [0.05, 0.2, 0.4, 0.6, 0.95] {
        assert!(k.c_tilde_p(p).unwrap() < half);
    }
    assert_relative_eq!(k.c_tilde_p(0.1).unwrap(), k.c_tilde_p(0.9).unwrap(), max_relative = 1e-14);
    assert!(k.c_tilde_p(1e-9).unwrap() < 1e-8);
    assert!(k.c_tilde_p(0.0).is_err());
    assert!(k.c_tilde_p(1.0).is_err());
}

#[test]
fn sigma_n_scaling() {
    let k = AnalyticConstants::new(&StepLaw::canonical(0.5).unwrap()).unwrap();
    for n in [16u64, 1024, 1 << 20] {
        let r = k.sigma_n(0.5, 2 * n).unwrap() / k.sigma_n(0.5, n).unwrap();
        assert_relative_eq!(r, 2f64.powf(0.75), max_relative = 1e-13);
        let q = k.sigma_n(0.5, n).unwrap() / k.sigma_n(0.25, n).unwrap();
        assert_relative_eq!(q, (0.5f64 / 0.375).sqrt(), max_relative = 1e-13);
    }
    // 2L(1) = 1 for the canonical law.
    let s1 = k.sigma_n(0.5, 1).unwrap();
    assert_relative_eq!(s1 * s1, 2.0 * k.limit_field().v0() * k.c_tilde_p(0.5).unwrap(), max_relative = 1e-14);
    assert!(k.sigma_n(0.5, 0).is_err());
}

#[test]
fn exact_window_variance_approaches_one() {
    let law = StepLaw::canonical(0.5).unwrap();
    let k = AnalyticConstants::new(&law).unwrap();
    let mut prev = f64::INFINITY;
    for n in [1u64 << 8, 1 << 10, 1 << 12, 1 << 14] {
        let s = k.sigma_n(0.5, n).unwrap();
        let r = window_covariance(&law, k.q_norm2, 0.5, n, n, 0).unwrap() / (s * s);
        let dev = (r - 1.0).abs();
        assert!(dev < prev, "n {n}: {r}");
        prev = dev;
    }
    assert!(prev < 0.01);
}

#[test]
fn window_covariance_of_single_site() {
    // n = 0: Var X = 4p(1−p).
    let law = StepLaw::canonical(0.5).unwrap();
    let k = AnalyticConstants::new(&law).unwrap();
    let v = window_covariance(&law, k.q_norm2, 0.3, 0, 0, 0).unwrap();
    assert_relative_eq!(v, 4.0 * 0.3 * 0.7, max_relative = 1e-10);
}

#[test]
fn gram_unit_variance_and_fbm_restriction() {
    let alpha = 0.5;
    let g = w_covariance(alpha, &[SpaceTimePoint::new(1.0, 0.0)]).unwrap();
    assert_relative_eq!(g[(0, 0)], 1.0, epsilon = 1e-14);
    let h = 0.5 * (1.0 + alpha);
    let xs = [0.2, 0.5, 1.0, 1.7, 3.0];
    for t in [0.0, 0.8] {
        let pts: Vec<SpaceTimePoint> = xs.iter().map(|&x| SpaceTimePoint::new(x, t)).collect();
        let g = w_covariance(alpha, &pts).unwrap();
        for i in 0..xs.len() {
            for j in 0..xs.len() {
                assert!((g[(i, j)] - fbm(h, xs[i], xs[j])).abs() < 1e-8);
            }
        }
    }
}

#[test]
fn temporal_covariance_is_normalized_v() {
    let field = LimitField::new(0.5).unwrap();
    let mut prev = 1.0 + 1e-12;
    for t in [0.0, 0.5, 1.0, 2.0] {
        let c = field.covariance(SpaceTimePoint::new(1.0, 0.0), SpaceTimePoint::new(1.0, t)).unwrap();
        assert_relative_eq!(c, field.v(t, 1.0).unwrap() / field.v0(), max_relative = 1e-13);
        assert!(c < prev);
        prev = c;
    }
    assert!((field.v(1.0, 1.0).unwrap() / field.v0() - 0.406474).abs() < 1e-5);
}

#[test]
fn self_similarity_and_stationarity() {
    let alpha = 0.6;
    let field = LimitField::new(alpha).unwrap();
    let pts = [
        SpaceTimePoint::new(0.3, 0.0),
        SpaceTimePoint::new(1.0, 0.4),
        SpaceTimePoint::new(2.2, 1.5),
        SpaceTimePoint::new(-0.7, 0.9),
    ];
    let g = field.gram(&pts).unwrap();
    let r = 2.5f64;
    let scaled: Vec<SpaceTimePoint> =
        pts.iter().map(|p| SpaceTimePoint::new(r * p.x, r.powf(alpha) * p.t)).collect();
    let gs = field.gram(&scaled).unwrap();
    let f = r.powf(1.0 + alpha);
    for i in 0..4 {
        for j in 0..4 {
            assert!((gs[(i, j)] - f * g[(i, j)]).abs() < 1e-6 * f.max(1.0));
        }
    }
    let c = |t1: f64, t2: f64| {
        field.covariance(SpaceTimePoint::new(1.3, t1), SpaceTimePoint::new(1.3, t2)).unwrap()
    };
    assert_relative_eq!(c(0.0, 0.7), c(2.0, 2.7), max_relative = 1e-12);
    assert_relative_eq!(c(0.7, 0.0), c(0.0, 0.7), max_relative = 1e-12);
}

#[test]
fn sampler_statistics() {
    let alpha = 0.5;
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    // Identical points: perfectly correlated.
    let twin = [SpaceTimePoint::new(1.0, 0.0), SpaceTimePoint::new(1.0, 0.0)];
    for _ in 0..50 {
        let z = sample_w_exact(alpha, &twin, &mut rng).unwrap();
        assert!((z[0] - z[1]).abs() < 1e-6 * (1.0 + z[0].abs()));
    }
    let pts = [SpaceTimePoint::new(0.5, 0.0), SpaceTimePoint::new(1.0, 0.0), SpaceTimePoint::new(1.0, 1.0)];
    let field = LimitField::new(alpha).unwrap();
    let sampler = field.sampler(&pts).unwrap();
    let rows: Vec<Vec<f64>> = (0..100_000).map(|_| sampler.sample(&mut rng).iter().copied().collect()).collect();
    let est = empirical_covariance(&rows).unwrap();
    let g = sampler.gram();
    for i in 0..3 {
        for j in 0..3 {
            let d = (est.covariance[(i, j)] - g[(i, j)]).abs();
            assert!(d < 3.0 * est.stderr[(i, j)], "entry ({i},{j}) off by {d}");
        }
    }
}

#[test]
fn indefinite_matrix_is_rejected() {
    let m = DMatrix::from_row_slice(2, 2, &[1.0, 2.0, 2.0, 1.0]);
    assert!(matches!(GaussianSampler::new(m), Err(Error::NotPositiveSemidefinite { .. })));
    assert!(w_covariance(0.5, &[SpaceTimePoint::new(f64::NAN, 0.0)]).is_err());
}

#[test]
fn fgn_variance_of_gaussian_bump() {
    let phi = GridFunction::from_fn(-10.0, 0.0025, 8001, |x| (-0.5 * x * x).exp());
    let v = fgn_variance(0.5, &phi).unwrap();
    let exact = 2f64.sqrt() * SQRT_PI * GAMMA_QUARTER;
    assert!((v.value - exact).abs() < 1e-6 * exact, "{} vs {exact}", v.value);
    assert!(v.refinement_error < 1e-4);
}

#[test]
fn fgn_variance_edge_cases() {
    let zero = GridFunction::from_fn(0.0, 0.01, 101, |_| 0.0);
    assert_eq!(fgn_variance(0.5, &zero).unwrap().value, 0.0);
    let bump = |x: f64| (-8.0 * (x - 0.5) * (x - 0.5)).exp();
    let a = fgn_variance(0.4, &GridFunction::from_fn(-3.0, 0.01, 701, bump)).unwrap();
    let shifted = GridFunction::from_fn(-3.0 + 1.37, 0.01, 701, |x| bump(x - 1.37));
    let b = fgn_variance(0.4, &shifted).unwrap();
    assert_relative_eq!(a.value, b.value, max_relative = 1e-9);
    // Mass at the grid edges means the function was cut off.
    let cut = GridFunction::from_fn(0.0, 0.01, 101, |_| 1.0);
    assert!(fgn_variance(0.5, &cut).is_err());
}
