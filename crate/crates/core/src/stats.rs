//! Estimators that turn replicate samples into verdicts.

#[cfg(not(feature = "std"))]
use num_traits::Float;

use alloc::collections::BTreeMap;
use alloc::string::String;
use alloc::vec::Vec;

use nalgebra::DMatrix;
use rand::RngCore;
use serde::{Deserialize, Serialize};

use crate::coalesce::{run_backward, ComponentLabeling, Site};
use crate::error::{invalid, Error, Result};
use crate::special::normal_cdf;
use crate::steplaw::StepLaw;

/// Replicate statistics with provenance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentResult {
    pub estimator: String,
    pub estimates: Vec<f64>,
    pub stderrs: Vec<f64>,
    pub replicates: usize,
    pub seeds: Vec<u64>,
    pub config: BTreeMap<String, String>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LinearFit {
    pub slope: f64,
    pub intercept: f64,
    pub slope_stderr: f64,
    pub intercept_stderr: f64,
    pub residuals: Vec<f64>,
}

/// Ordinary least squares y ≈ intercept + slope·x.
pub fn linear_fit(x: &[f64], y: &[f64]) -> Result<LinearFit> {
    weighted_linear_fit(x, y, &alloc::vec![1.0; x.len()])
}

/// Weighted least squares; weights are relative inverse variances and the
/// residual scale is estimated from the data.
pub fn weighted_linear_fit(x: &[f64], y: &[f64], w: &[f64]) -> Result<LinearFit> {
    let n = x.len();
    if n != y.len() || n != w.len() {
        return Err(invalid("y", "length differs from x"));
    }
    if n < 2 {
        return Err(Error::TooFewPoints { needed: 2, got: n });
    }
    if w.iter().any(|v| !(*v > 0.0)) {
        return Err(invalid("w", "weights must be positive"));
    }
    let nf = n as f64;
    let sw: f64 = w.iter().sum();
    let mx = x.iter().zip(w).map(|(a, c)| a * c).sum::<f64>() / sw;
    let my = y.iter().zip(w).map(|(a, c)| a * c).sum::<f64>() / sw;
    let sxx: f64 = x.iter().zip(w).map(|(v, c)| c * (v - mx) * (v - mx)).sum();
    if sxx == 0.0 {
        return Err(invalid("x", "all abscissae coincide"));
    }
    let sxy: f64 = x.iter().zip(y).zip(w).map(|((a, b), c)| c * (a - mx) * (b - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let residuals: Vec<f64> = x.iter().zip(y).map(|(a, b)| b - intercept - slope * a).collect();
    let (slope_stderr, intercept_stderr) = if n > 2 {
        let s2 = residuals.iter().zip(w).map(|(r, c)| c * r * r).sum::<f64>() / (nf - 2.0);
        ((s2 / sxx).sqrt(), (s2 * (1.0 / sw + mx * mx / sxx)).sqrt())
    } else {
        (0.0, 0.0)
    };
    Ok(LinearFit { slope, intercept, slope_stderr, intercept_stderr, residuals })
}

/// Sample mean and its standard error.
pub fn mean_stderr(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let m = xs.iter().sum::<f64>() / n;
    if xs.len() < 2 {
        return (m, 0.0);
    }
    let v = xs.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / (n - 1.0);
    (m, (v / n).sqrt())
}

/// Unbiased sample variance with a normal-theory standard error
/// sqrt(2/(n−1))·s².
pub fn variance_stderr(xs: &[f64]) -> Result<(f64, f64)> {
    if xs.len() < 2 {
        return Err(Error::TooFewPoints { needed: 2, got: xs.len() });
    }
    let n = xs.len() as f64;
    let m = xs.iter().sum::<f64>() / n;
    let v = xs.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / (n - 1.0);
    Ok((v, v * (2.0 / (n - 1.0)).sqrt()))
}

#[derive(Debug, Clone, PartialEq)]
pub struct CovarianceEstimate {
    pub covariance: DMatrix<f64>,
    /// Gaussian fourth-moment approximation sqrt((c_ij² + c_ii·c_jj)/(N−1)).
    pub stderr: DMatrix<f64>,
    pub replicates: usize,
}

impl CovarianceEstimate {
    /// Sample correlation and its delta-method stderr (1 − r²)/sqrt(N−1).
    pub fn correlation(&self, i: usize, j: usize) -> (f64, f64) {
        let c = &self.covariance;
        let denom = (c[(i, i)] * c[(j, j)]).sqrt();
        let r = if denom > 0.0 { c[(i, j)] / denom } else { 0.0 };
        (r, (1.0 - r * r) / ((self.replicates as f64) - 1.0).sqrt())
    }
}

/// Sample covariance of replicate rows.
pub fn empirical_covariance(samples: &[Vec<f64>]) -> Result<CovarianceEstimate> {
    let reps = samples.len();
    if reps < 2 {
        return Err(Error::TooFewPoints { needed: 2, got: reps });
    }
    let d = samples[0].len();
    if samples.iter().any(|r| r.len() != d) {
        return Err(invalid("samples", "rows have different lengths"));
    }
    let nf = reps as f64;
    let mut mean = alloc::vec![0.0; d];
    for row in samples {
        for (m, v) in mean.iter_mut().zip(row) {
            *m += v;
        }
    }
    for m in mean.iter_mut() {
        *m /= nf;
    }
    let mut cov: DMatrix<f64> = DMatrix::zeros(d, d);
    for row in samples {
        for i in 0..d {
            let di = row[i] - mean[i];
            for j in i..d {
                cov[(i, j)] += di * (row[j] - mean[j]);
            }
        }
    }
    for i in 0..d {
        for j in i..d {
            let v = cov[(i, j)] / (nf - 1.0);
            cov[(i, j)] = v;
            cov[(j, i)] = v;
        }
    }
    let stderr = DMatrix::from_fn(d, d, |i, j| {
        ((cov[(i, j)] * cov[(i, j)] + cov[(i, i)] * cov[(j, j)]) / (nf - 1.0)).sqrt()
    });
    Ok(CovarianceEstimate { covariance: cov, stderr, replicates: reps })
}

#[derive(Debug, Clone, PartialEq)]
pub struct HurstEstimate {
    pub h: f64,
    pub stderr: f64,
    pub block_sizes: Vec<usize>,
    pub mean_squares: Vec<f64>,
}

/// Aggregated-variance Hurst estimate of a path S(0), S(1), ...
///
/// For dyadic lags m = 8 .. len/8 the mean square of the overlapping
/// increments S(i+m) − S(i) is regressed on m in log-log scale; H = slope/2.
/// Unweighted: on lattice fields the short lags still carry an H = 1/2
/// diagonal part, and down-weighting the long lags amplifies it.
/// Increments are not re-centered: the caller removes any known drift,
/// since subtracting the sample mean biases long-memory paths downwards.
pub fn hurst_estimate(path: &[f64]) -> Result<HurstEstimate> {
    let len = path.len();
    if len < 1024 || !len.is_power_of_two() {
        return Err(invalid("path", "length must be a power of two >= 1024"));
    }
    let mut block_sizes = Vec::new();
    let mut mean_squares = Vec::new();
    let mut m = 8;
    while m <= len / 8 {
        let count = len - m;
        let ms = (0..count).map(|i| {
            let d = path[i + m] - path[i];
            d * d
        }).sum::<f64>() / count as f64;
        if ms <= 0.0 {
            return Err(Error::ZeroVariance);
        }
        block_sizes.push(m);
        mean_squares.push(ms);
        m *= 2;
    }
    let lx: Vec<f64> = block_sizes.iter().map(|&m| (m as f64).ln()).collect();
    let ly: Vec<f64> = mean_squares.iter().map(|v| v.ln()).collect();
    let fit = linear_fit(&lx, &ly)?;
    Ok(HurstEstimate { h: fit.slope / 2.0, stderr: fit.slope_stderr / 2.0, block_sizes, mean_squares })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GaussianityReport {
    pub mean: f64,
    pub variance: f64,
    pub skewness: f64,
    pub excess_kurtosis: f64,
    /// sup |F_emp − Φ((x − mean)/sd)|.
    pub ks_distance: f64,
}

pub fn gaussianity(xs: &[f64]) -> Result<GaussianityReport> {
    if xs.len() < 3 {
        return Err(Error::TooFewPoints { needed: 3, got: xs.len() });
    }
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    let (mut m2, mut m3, mut m4) = (0.0, 0.0, 0.0);
    for x in xs {
        let d = x - mean;
        let d2 = d * d;
        m2 += d2;
        m3 += d2 * d;
        m4 += d2 * d2;
    }
    m2 /= n;
    m3 /= n;
    m4 /= n;
    if m2 <= 0.0 {
        return Err(Error::ZeroVariance);
    }
    let sd = (m2 * n / (n - 1.0)).sqrt();
    let mut sorted = xs.to_vec();
    sorted.sort_by(f64::total_cmp);
    let mut ks: f64 = 0.0;
    for (i, x) in sorted.iter().enumerate() {
        let f = normal_cdf((x - mean) / sd);
        ks = ks.max((f - i as f64 / n).abs()).max(((i + 1) as f64 / n - f).abs());
    }
    Ok(GaussianityReport {
        mean,
        variance: sd * sd,
        skewness: m3 / m2.powf(1.5),
        excess_kurtosis: m4 / (m2 * m2) - 3.0,
        ks_distance: ks,
    })
}

/// Constant normalizing the discrete noise functional: sqrt(α(α/2 + 1/2)).
pub fn fgn_prefactor(alpha: f64) -> f64 {
    (alpha * (0.5 * alpha + 0.5)).sqrt()
}

/// Relative |φ| mass of `phi` on the lattice i/n outside the window 0..=n
/// (probed over −n..2n).
pub fn mass_outside_window<F: Fn(f64) -> f64>(phi: &F, n: usize) -> f64 {
    let nf = n as f64;
    let mut inside = 0.0;
    let mut outside = 0.0;
    for i in -(n as i64)..=(2 * n as i64) {
        let v = phi(i as f64 / nf).abs();
        if i >= 0 && i <= n as i64 {
            inside += v;
        } else {
            outside += v;
        }
    }
    if inside + outside == 0.0 {
        0.0
    } else {
        outside / (inside + outside)
    }
}

/// Per-component weights Σ_{i ∈ T_β ∩ slice} φ(i/n), in component order.
pub fn component_weights<F: Fn(f64) -> f64>(field: &crate::field::SpaceTimeField, slice: usize, phi: &F) -> Vec<f64> {
    let n = field.window_width() as f64;
    field.component_sums(slice, |i| phi(i as f64 / n))
}

/// F = Σ_i φ(i/n)(ξ(i) − (2p−1)) / (σ_n·sqrt(α(α/2+1/2))) on the given slice.
pub fn fgn_functional<F: Fn(f64) -> f64>(
    field: &crate::field::SpaceTimeField,
    phi: &F,
    sigma_n: f64,
    slice: usize,
) -> Result<f64> {
    let n = field.window_width();
    let outside = mass_outside_window(phi, n);
    if outside > 1e-3 {
        return Err(Error::NonDecayingTestFunction(outside));
    }
    let drift = 2.0 * field.p() - 1.0;
    let nf = n as f64;
    let mut acc = 0.0;
    for i in 0..=n {
        acc += phi(i as f64 / nf) * (field.value(i, slice) as f64 - drift);
    }
    Ok(acc / (sigma_n * fgn_prefactor(field.law().alpha)))
}

/// Per-replicate quantities behind the component moment scaling check.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ComponentMoments {
    /// Σ_q |T_q|² / (n+1) = Σ_β |T_β|³ / (n+1).
    pub per_site_second_moment: f64,
    /// Σ_β |T_β|², before division by σ_n².
    pub sum_of_squares: f64,
    pub components: usize,
    pub residual_clusters: usize,
}

/// Sample one slice labeling of sites 0..=n and summarize its component sizes.
pub fn component_moments<R: RngCore + ?Sized>(
    law: &StepLaw,
    n: usize,
    t_max: u64,
    rng: &mut R,
) -> Result<ComponentMoments> {
    let sites: Vec<Site> = (0..=n as i64).map(|i| Site::new(i, 0)).collect();
    let labeling = run_backward(&sites, law, t_max, rng)?;
    Ok(moments_of(&labeling))
}

pub fn moments_of(labeling: &ComponentLabeling) -> ComponentMoments {
    let width = labeling.sites().len() as f64;
    let mut sizes = alloc::vec![0u64; labeling.component_count()];
    for &l in labeling.labels() {
        sizes[l as usize] += 1;
    }
    let mut s2 = 0.0;
    let mut s3 = 0.0;
    for &s in &sizes {
        let s = s as f64;
        s2 += s * s;
        s3 += s * s * s;
    }
    ComponentMoments {
        per_site_second_moment: s3 / width,
        sum_of_squares: s2,
        components: sizes.len(),
        residual_clusters: labeling.residual_clusters(),
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScalingRow {
    pub n: usize,
    pub mean_second_moment: f64,
    pub second_moment_stderr: f64,
    /// Var over replicates of V_n = Σ_β |T_β|²/σ_n².
    pub var_vn: f64,
    pub mean_vn: f64,
    pub mean_residual_clusters: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScalingReport {
    pub rows: Vec<ScalingRow>,
    pub second_moment_exponent: f64,
    pub second_moment_exponent_stderr: f64,
    pub var_vn_slope: f64,
    pub var_vn_strictly_decreasing: bool,
}

/// Regress the per-site second moment and Var(V_n) on n.
/// `samples[k]` holds the replicates for `n_grid[k]`; `sigma_n[k]` the
/// normalization at that n.
pub fn component_moment_scaling(
    n_grid: &[usize],
    sigma_n: &[f64],
    samples: &[Vec<ComponentMoments>],
) -> Result<ScalingReport> {
    if n_grid.len() < 2 || n_grid.len() != samples.len() || n_grid.len() != sigma_n.len() {
        return Err(Error::TooFewPoints { needed: 2, got: n_grid.len().min(samples.len()) });
    }
    let mut rows = Vec::with_capacity(n_grid.len());
    for ((&n, &sigma), reps) in n_grid.iter().zip(sigma_n).zip(samples) {
        if reps.len() < 2 {
            return Err(Error::TooFewPoints { needed: 2, got: reps.len() });
        }
        let sm: Vec<f64> = reps.iter().map(|r| r.per_site_second_moment).collect();
        let vn: Vec<f64> = reps.iter().map(|r| r.sum_of_squares / (sigma * sigma)).collect();
        let (mean_sm, se_sm) = mean_stderr(&sm);
        let (var_vn, _) = variance_stderr(&vn)?;
        let (mean_vn, _) = mean_stderr(&vn);
        let resid = reps.iter().map(|r| r.residual_clusters as f64).sum::<f64>() / reps.len() as f64;
        rows.push(ScalingRow {
            n,
            mean_second_moment: mean_sm,
            second_moment_stderr: se_sm,
            var_vn,
            mean_vn,
            mean_residual_clusters: resid,
        });
    }
    let lx: Vec<f64> = rows.iter().map(|r| (r.n as f64).ln()).collect();
    let ly: Vec<f64> = rows.iter().map(|r| r.mean_second_moment.ln()).collect();
    let sm_fit = linear_fit(&lx, &ly)?;
    let lv: Vec<f64> = rows.iter().map(|r| r.var_vn.max(f64::MIN_POSITIVE).ln()).collect();
    let v_fit = linear_fit(&lx, &lv)?;
    let decreasing = rows.windows(2).all(|w| w[1].var_vn < w[0].var_vn);
    Ok(ScalingReport {
        rows,
        second_moment_exponent: sm_fit.slope,
        second_moment_exponent_stderr: sm_fit.slope_stderr,
        var_vn_slope: v_fit.slope,
        var_vn_strictly_decreasing: decreasing,
    })
}
