//! Transition kernels p_t(0,·) of the step-law random walk.

#[cfg(not(feature = "std"))]
use num_traits::Float;

use alloc::vec::Vec;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::analytic::q_norm_squared;
use crate::error::{invalid, Error, Result};
use crate::quad::{Estimate, Tolerance};
use crate::special::{gamma, hurwitz_zeta};
use crate::spectral::{char_power, circle_integral};
use crate::stats::linear_fit;
use crate::steplaw::StepLaw;

/// p_t(0, n) for |n| ≤ M, with the mass that fell outside the window.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KernelTable {
    pub t: u64,
    pub half_width: usize,
    /// masses[n + M] = p_t(0, n).
    pub masses: Vec<f64>,
    pub leaked_mass: f64,
}

impl KernelTable {
    pub fn mass(&self, n: i64) -> f64 {
        let m = self.half_width as i64;
        if n.abs() > m {
            0.0
        } else {
            self.masses[(n + m) as usize]
        }
    }

    pub fn supnorm(&self) -> f64 {
        self.masses.iter().cloned().fold(0.0, f64::max)
    }

    pub fn window_mass(&self) -> f64 {
        self.masses.iter().sum()
    }
}

/// Window M = max(10⁴, 50·t^(1/α)).
pub fn default_half_width(law: &StepLaw, t: u64) -> usize {
    let w = 50.0 * (t as f64).powf(1.0 / law.alpha());
    w.max(1e4).min(1e9) as usize
}

/// p_t on [−M, M] by FFT convolution powers of the truncated one-step law.
/// Entries are lower bounds of the true kernel; their deficit is at most
/// `leaked_mass = 1 − Σ masses`.
#[cfg(feature = "std")]
pub fn convolve_power(law: &StepLaw, t: u64, half_width: usize) -> Result<KernelTable> {
    use rustfft::num_complex::Complex;
    use rustfft::FftPlanner;

    if t == 0 {
        return Err(invalid("t", "must be >= 1"));
    }
    let m = half_width;
    let width = 2 * m + 1;
    let size = (2 * width).next_power_of_two();
    let mut planner = FftPlanner::<f64>::new();
    let forward = planner.plan_fft_forward(size);
    let inverse = planner.plan_fft_inverse(size);
    let one_step: Vec<f64> = (0..width).map(|i| law.pmf(i as i64 - m as i64)).collect();

    let conv = |a: &[f64], b: &[f64]| -> Vec<f64> {
        let mut fa: Vec<Complex<f64>> = a.iter().map(|&v| Complex::new(v, 0.0)).collect();
        fa.resize(size, Complex::new(0.0, 0.0));
        let mut fb: Vec<Complex<f64>> = b.iter().map(|&v| Complex::new(v, 0.0)).collect();
        fb.resize(size, Complex::new(0.0, 0.0));
        forward.process(&mut fa);
        forward.process(&mut fb);
        for (x, y) in fa.iter_mut().zip(&fb) {
            *x *= y;
        }
        inverse.process(&mut fa);
        let scale = 1.0 / size as f64;
        // Linear convolution index k + 2M holds offset k; keep |k| ≤ M.
        let mut out: Vec<f64> = (0..width).map(|i| (fa[i + m].re * scale).max(0.0)).collect();
        for i in 0..m {
            let s = 0.5 * (out[i] + out[width - 1 - i]);
            out[i] = s;
            out[width - 1 - i] = s;
        }
        out
    };

    let mut result: Option<Vec<f64>> = None;
    let mut base = one_step;
    let mut e = t;
    loop {
        if e & 1 == 1 {
            result = Some(match result {
                None => base.clone(),
                Some(r) => conv(&r, &base),
            });
        }
        e >>= 1;
        if e == 0 {
            break;
        }
        base = conv(&base, &base);
    }
    let masses = result.unwrap_or_default();
    let leaked_mass = 1.0 - masses.iter().sum::<f64>();
    if leaked_mass > 1e-3 {
        log_leak_warning(t, leaked_mass);
    }
    Ok(KernelTable { t, half_width: m, masses, leaked_mass })
}

#[cfg(feature = "std")]
fn log_leak_warning(t: u64, leak: f64) {
    std::eprintln!("warning: kernel window leaks {leak:.3e} of the mass at t = {t}");
}

fn concentration_scale(law: &StepLaw, t: u64) -> f64 {
    let alpha = law.alpha();
    let a = 2.0 * law.slowly_varying_limit() * (0.5 * core::f64::consts::PI * alpha).cos() * gamma(1.0 - alpha);
    (t.max(1) as f64 * a).powf(-1.0 / alpha)
}

/// p_t(0,0) = (1/2π)∫ P(x)^t dx.
pub fn return_prob(law: &StepLaw, t: u64) -> Result<Estimate> {
    if t == 0 {
        return Ok(Estimate { value: 1.0, error: 0.0, evaluations: 0 });
    }
    circle_integral(law, 0.0, Some(concentration_scale(law, t)), Tolerance::new(1e-16, 1e-12), |_, omp| {
        char_power(omp, t)
    })
}

/// p_t(0, n) = (1/2π)∫ cos(nx)P(x)^t dx.
pub fn transition_prob(law: &StepLaw, t: u64, n: i64) -> Result<Estimate> {
    let nf = n.unsigned_abs() as f64;
    circle_integral(law, nf, Some(concentration_scale(law, t)), Tolerance::new(1e-16, 1e-12), |x, omp| {
        (nf * x).cos() * char_power(omp, t)
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SupnormRow {
    /// Step count actually evaluated (even).
    pub t: u64,
    pub supnorm: f64,
    /// Certified numerical error of the supnorm value; plays the role of the
    /// leaked mass of a truncated convolution.
    pub certified_error: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SupnormFit {
    pub slope: f64,
    pub slope_stderr: f64,
    pub rows: Vec<SupnormRow>,
}

/// Regress log max_n p_t(0,n) on log t. For even t the maximum sits at the
/// origin (p_{2s}(0,n) = Σ_m p_s(m)p_s(n−m) ≤ p_{2s}(0,0) by Cauchy–Schwarz),
/// so odd grid points are moved up to the next even step count.
pub fn supnorm_exponent(law: &StepLaw, t_grid: &[u64]) -> Result<SupnormFit> {
    if t_grid.len() < 2 {
        return Err(Error::TooFewPoints { needed: 2, got: t_grid.len() });
    }
    let mut rows = Vec::with_capacity(t_grid.len());
    for &t in t_grid {
        let t = t.max(1).div_ceil(2) * 2;
        let est = return_prob(law, t)?;
        if est.error > 1e-3 {
            return Err(Error::Uncertified { bound: est.error, limit: 1e-3 });
        }
        rows.push(SupnormRow { t, supnorm: est.value, certified_error: est.error });
    }
    let lx: Vec<f64> = rows.iter().map(|r| (r.t as f64).ln()).collect();
    let ly: Vec<f64> = rows.iter().map(|r| r.supnorm.ln()).collect();
    let fit = linear_fit(&lx, &ly)?;
    Ok(SupnormFit { slope: fit.slope, slope_stderr: fit.slope_stderr, rows })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OccupationSum {
    pub n: u64,
    pub k: i64,
    pub t_cut: u64,
    pub value: f64,
    /// Rigorous bound on Σ_{t>t_cut} Σ_{n₁≤n} p_t(0, n₁−k).
    pub tail_bound: f64,
    pub quadrature_error: f64,
}

/// Σ_{t=0}^{t_cut} Σ_{n₁=0}^{n} p_t(0, n₁ − k), as the single integral
/// (1/2π)∫ Re[e^{ikx}·conj(D_n(x))]·(1 − P^{t_cut+1})/(1 − P) dx, with the
/// tail bounded by (n+1)·(1/2π)∫ |P|^{t_cut+1}/(1 − |P|) dx.
/// Fails unless the tail bound is below 1% of the value.
pub fn occupation_sum(law: &StepLaw, k: i64, n: u64, t_cut: u64) -> Result<OccupationSum> {
    let o = occupation_partial(law, k, n, t_cut)?;
    if o.tail_bound > 0.01 * o.value.abs() {
        return Err(Error::Uncertified { bound: o.tail_bound, limit: 0.01 * o.value.abs() });
    }
    Ok(o)
}

/// [`occupation_sum`] without the certification check, for windows whose
/// sum is too small for a relative bound to mean anything.
pub fn occupation_partial(law: &StepLaw, k: i64, n: u64, t_cut: u64) -> Result<OccupationSum> {
    if t_cut == 0 {
        return Err(invalid("t_cut", "must be >= 1"));
    }
    let a = (n + 1) as f64;
    let shift = k as f64 - 0.5 * n as f64;
    let osc = (0.5 * a).max(shift.abs());
    let powers = t_cut + 1;
    let tol = Tolerance::new(1e-13, 1e-11);
    let est = circle_integral(law, osc, None, tol, |x, omp| {
        let s = (0.5 * x).sin();
        let kernel = (shift * x).cos() * (0.5 * a * x).sin() / s;
        let geometric = if omp <= 1.0 {
            -libm::expm1(powers as f64 * libm::log1p(-omp)) / omp
        } else {
            (1.0 - char_power(omp, powers)) / omp
        };
        kernel * geometric
    })?;
    let tail = circle_integral(law, 0.0, Some(concentration_scale(law, powers)), tol, |_, omp| {
        // |P| and 1 − |P| without cancellation on either side of P = 0.
        let (log_abs, gap) = if omp <= 1.0 { (libm::log1p(-omp), omp) } else { ((omp - 1.0).ln(), 2.0 - omp) };
        (powers as f64 * log_abs).exp() / gap
    })?;
    Ok(OccupationSum {
        n,
        k,
        t_cut,
        value: est.value,
        tail_bound: a * (tail.value + tail.error),
        quadrature_error: est.error,
    })
}

/// Σ_{s≥0} p_{2s}(0) from individual return probabilities up to 2T plus a
/// fitted tail A·τ^(−1/α)(1 + B/τ + C·τ^(1−2/α)) summed in closed form.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QNormSeries {
    pub pairs: u64,
    pub partial_sum: f64,
    pub tail: f64,
    pub total: f64,
    pub amplitude: f64,
}

pub fn q_norm_series(law: &StepLaw, pairs: u64) -> Result<QNormSeries> {
    if pairs < 64 {
        return Err(invalid("pairs", "need at least 64 terms"));
    }
    let alpha = law.alpha();
    let mut partial = 1.0;
    let mut fit_x = Vec::new();
    let mut fit_y = Vec::new();
    for s in 1..=pairs {
        let tau = 2 * s;
        let p = return_prob(law, tau)?.value;
        partial += p;
        if s >= pairs / 4 {
            fit_x.push(tau as f64);
            fit_y.push(p * (tau as f64).powf(1.0 / alpha));
        }
    }
    let e1 = -1.0;
    let e2 = 1.0 - 2.0 / alpha;
    let design = DMatrix::from_fn(fit_x.len(), 3, |i, j| match j {
        0 => 1.0,
        1 => fit_x[i].powf(e1),
        _ => fit_x[i].powf(e2),
    });
    let rhs = DVector::from_vec(fit_y);
    let coef = design
        .svd(true, true)
        .solve(&rhs, 1e-14)
        .map_err(|_| invalid("pairs", "tail fit is singular"))?;
    let first = pairs as f64 + 1.0;
    let sum_pow = |s: f64| 2f64.powf(-s) * hurwitz_zeta(s, first);
    let tail = coef[0] * sum_pow(1.0 / alpha) + coef[1] * sum_pow(1.0 / alpha - e1) + coef[2] * sum_pow(1.0 / alpha - e2);
    Ok(QNormSeries { pairs, partial_sum: partial, tail, total: partial + tail, amplitude: coef[0] })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QNormCheck {
    pub quadrature: f64,
    pub series: QNormSeries,
    pub relative_difference: f64,
}

pub fn q_norm_cross_check(law: &StepLaw, pairs: u64) -> Result<QNormCheck> {
    let q = q_norm_squared(law)?.value;
    let series = q_norm_series(law, pairs)?;
    Ok(QNormCheck { quadrature: q, series, relative_difference: (series.total - q).abs() / q })
}
