//! Replicate ensembles and the raw numbers each check is judged on.
//! Nothing here applies a threshold.

use crate::error::Result;
use crate::runner::{sub_seed, Runner};
use lrvoter_core::analytic::{fgn_variance, min_eigenvalue, FgnVariance, GridFunction};
use lrvoter_core::coalesce::{coalesce_prob_fourier, coalesce_prob_mc, McEstimate};
use lrvoter_core::field::{conditional_variance, microscopic_time, sample_equilibrium_field, ColoringLaw};
use lrvoter_core::heatkernel::{occupation_sum, q_norm_cross_check, return_prob, supnorm_exponent, OccupationSum, QNormCheck};
use lrvoter_core::stats::{
    component_moment_scaling, component_moments, component_weights, empirical_covariance, fgn_functional, fgn_prefactor,
    hurst_estimate, linear_fit, ScalingReport,
};
use lrvoter_core::{AnalyticConstants, Error, LimitField, SpaceTimeField, SpaceTimePoint, StepLaw};
use rand::Rng;
use serde::Serialize;

/// Gaussian bump exp(−(x−c)²/(2w²)).
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Bump {
    pub center: f64,
    pub width: f64,
}

impl Bump {
    pub fn eval(&self, x: f64) -> f64 {
        let z = (x - self.center) / self.width;
        (-0.5 * z * z).exp()
    }

    /// Samples on ±7 widths, 400 per width.
    pub fn grid(&self) -> GridFunction {
        let h = self.width / 400.0;
        GridFunction::from_fn(self.center - 7.0 * self.width, h, 5601, |x| self.eval(x))
    }

    pub fn variance_target(&self, alpha: f64) -> Result<FgnVariance> {
        Ok(fgn_variance(alpha, &self.grid())?)
    }
}

/// Per-replicate statistics of the slice-0 field on 0..=n.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SliceSample {
    /// S_n(1,0)/σ_n.
    pub rescaled: f64,
    /// E[rescaled² | ancestral graph] = Var(B)·Σ_β|T_β|²/σ_n².
    pub conditional_variance: f64,
    /// E[rescaled⁴ | ancestral graph]; the colors are independent given the graph.
    pub conditional_fourth_moment: f64,
    pub fgn: Option<f64>,
    pub fgn_conditional_variance: Option<f64>,
    pub hurst: Option<f64>,
    pub residual_clusters: usize,
}

#[derive(Debug, Clone, Copy)]
pub struct SliceJob<'a> {
    pub law: &'a StepLaw,
    pub p: f64,
    pub n: usize,
    pub t_max: u64,
    pub sigma_n: f64,
    pub bump: Option<Bump>,
    pub hurst: bool,
}

/// Ensemble at one window size. Streams come from `sub_seed(seed, n)`, so
/// every check at the same (seed, n) sees the same fields.
pub fn slice_samples(job: SliceJob<'_>, reps: u64, runner: &Runner) -> Result<Vec<SliceSample>> {
    let SliceJob { law, p, n, t_max, sigma_n, bump, hurst } = job;
    let coloring = ColoringLaw::Bernoulli { p };
    let drift = 2.0 * p - 1.0;
    runner.with_seed(sub_seed(runner.seed, n as u64)).map(reps, |_, rng| {
        let f = sample_equilibrium_field(law, p, n, &[0], t_max, rng)?;
        let ones = f.component_sums(0, |_| 1.0);
        let (fgn, fgn_cv) = match bump {
            Some(b) => {
                let phi = |x: f64| b.eval(x);
                let scale = sigma_n * fgn_prefactor(law.alpha());
                let w = component_weights(&f, 0, &phi);
                (Some(fgn_functional(&f, &phi, sigma_n, 0)?), Some(conditional_variance(&w, coloring) / (scale * scale)))
            }
            None => (None, None),
        };
        let hurst = if hurst {
            let len = if n.is_power_of_two() { n } else { 1usize << (usize::BITS - 1 - (n + 1).leading_zeros()) };
            let path: Vec<f64> =
                f.prefix_sums(0)[..len].iter().enumerate().map(|(i, &s)| s as f64 - drift * (i + 1) as f64).collect();
            Some(hurst_estimate(&path)?.h)
        } else {
            None
        };
        Ok(SliceSample {
            rescaled: f.rescaled(sigma_n, 1.0, 0)?,
            conditional_variance: conditional_variance(&ones, coloring) / (sigma_n * sigma_n),
            conditional_fourth_moment: conditional_fourth_moment(&ones, p) / sigma_n.powi(4),
            fgn,
            fgn_conditional_variance: fgn_cv,
            hurst,
            residual_clusters: f.labeling().residual_clusters(),
        })
    })
}

/// E[(Σ w_β Y_β)⁴] for independent centered ±1 colors with P(+1) = p.
pub fn conditional_fourth_moment(weights: &[f64], p: f64) -> f64 {
    let pq = p * (1.0 - p);
    let var = 4.0 * pq;
    let mu4 = 16.0 * pq * (1.0 - 3.0 * pq);
    let s2: f64 = weights.iter().map(|w| w * w).sum();
    let s4: f64 = weights.iter().map(|w| w.powi(4)).sum();
    3.0 * var * var * s2 * s2 + (mu4 - 3.0 * var * var) * s4
}

/// Microscopic slice times for macroscopic `times` at window n.
pub fn micro_times(law: &StepLaw, times: &[f64], n: usize) -> Vec<i64> {
    times.iter().map(|&t| microscopic_time(law, t, n as u64)).collect()
}

/// Rescaled S_n(x, t) at every (slice, x) for each replicate; rows are
/// slice-major. One backward run per replicate covers all slices.
pub fn field_values(
    law: &StepLaw,
    p: f64,
    n: usize,
    times: &[f64],
    x_grid: &[f64],
    t_max: u64,
    sigma_n: f64,
    reps: u64,
    runner: &Runner,
) -> Result<Vec<FieldReplicate>> {
    let micro = micro_times(law, times, n);
    runner.with_seed(sub_seed(runner.seed, n as u64)).map(reps, |_, rng| {
        let f: SpaceTimeField = sample_equilibrium_field(law, p, n, &micro, t_max, rng)?;
        let mut values = Vec::with_capacity(times.len());
        for s in 0..times.len() {
            values.push(x_grid.iter().map(|&x| f.rescaled(sigma_n, x, s)).collect::<lrvoter_core::Result<Vec<f64>>>()?);
        }
        Ok(FieldReplicate { values, residual_clusters: f.labeling().residual_clusters() })
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct FieldReplicate {
    /// values[slice][x].
    pub values: Vec<Vec<f64>>,
    pub residual_clusters: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CorrelationRow {
    pub t: f64,
    pub correlation: f64,
    pub stderr: f64,
    /// V(t,1)/V(0,1).
    pub target: f64,
}

/// Corr(S_n(1, 0), S_n(1, t)) for every slice t > 0, from replicates whose
/// first slice is t = 0 and whose x-grid ends at 1.
pub fn temporal_correlations(alpha: f64, times: &[f64], reps: &[FieldReplicate]) -> Result<Vec<CorrelationRow>> {
    let field = LimitField::new(alpha)?;
    let rows: Vec<Vec<f64>> = reps.iter().map(|r| r.values.iter().map(|v| *v.last().unwrap_or(&0.0)).collect()).collect();
    let cov = empirical_covariance(&rows)?;
    let mut out = Vec::new();
    for (j, &t) in times.iter().enumerate().skip(1) {
        let (c, se) = cov.correlation(0, j);
        out.push(CorrelationRow { t, correlation: c, stderr: se, target: field.v(t, 1.0)? / field.v0() });
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CoalesceRow {
    pub mc: McEstimate,
    pub fourier: f64,
}

/// Monte Carlo vs Fourier coalescence probabilities; k-list entry i uses
/// stream i.
pub fn coalescence_table(
    law: &StepLaw,
    ks: &[i64],
    reps: u64,
    t_max: u64,
    escape_radius: i64,
    runner: &Runner,
) -> Result<Vec<CoalesceRow>> {
    let q = AnalyticConstants::new(law)?.q_norm2;
    runner.map(ks.len() as u64, |i, rng| {
        let k = ks[i as usize];
        Ok(CoalesceRow {
            mc: coalesce_prob_mc(law, k, t_max, reps, escape_radius, rng)?,
            fourier: coalesce_prob_fourier(law, k, q)?,
        })
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct KernelRow {
    pub t: u64,
    /// max_n p_t(0,n), at the even step count `t_even`.
    pub t_even: u64,
    pub supnorm: f64,
    /// Certified numerical error of `supnorm`.
    pub leak: f64,
    /// p_t(0,0) at the requested t.
    pub return_prob: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct KernelReport {
    pub rows: Vec<KernelRow>,
    pub slope: f64,
    pub slope_stderr: f64,
}

pub fn heat_kernel_decay(law: &StepLaw, t_grid: &[u64]) -> Result<KernelReport> {
    let fit = supnorm_exponent(law, t_grid)?;
    let rows = t_grid
        .iter()
        .zip(&fit.rows)
        .map(|(&t, r)| {
            Ok(KernelRow {
                t,
                t_even: r.t,
                supnorm: r.supnorm,
                leak: r.certified_error,
                return_prob: return_prob(law, t)?.value,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(KernelReport { rows, slope: fit.slope, slope_stderr: fit.slope_stderr })
}

#[derive(Debug, Clone, PartialEq)]
pub struct OccupationReport {
    pub rows: Vec<OccupationSum>,
    pub exponent: f64,
    pub exponent_stderr: f64,
}

/// Σ_{t ≤ T} Σ_{m=0}^{n} p_t(0,m) on an n-grid. T starts at 64·n² and is
/// raised until the tail bound certifies the sum to 1%.
pub fn occupation_scaling(law: &StepLaw, n_grid: &[usize]) -> Result<OccupationReport> {
    let mut rows = Vec::with_capacity(n_grid.len());
    for &n in n_grid {
        let n = n as u64;
        let mut t_cut = 64 * n * n;
        let row = loop {
            match occupation_sum(law, 0, n, t_cut) {
                Err(Error::Uncertified { .. }) if t_cut < 1 << 50 => t_cut *= 16,
                other => break other?,
            }
        };
        rows.push(row);
    }
    let lx: Vec<f64> = rows.iter().map(|r| (r.n as f64).ln()).collect();
    let ly: Vec<f64> = rows.iter().map(|r| r.value.ln()).collect();
    let fit = linear_fit(&lx, &ly)?;
    Ok(OccupationReport { rows, exponent: fit.slope, exponent_stderr: fit.slope_stderr })
}

pub fn q_norm_consistency(law: &StepLaw) -> Result<QNormCheck> {
    Ok(q_norm_cross_check(law, 2000)?)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SamplerCheck {
    pub points: Vec<(f64, f64)>,
    /// Smallest Gram eigenvalue over trace.
    pub min_eigenvalue_over_trace: f64,
    /// max over entries of |sample cov − Gram| / stderr.
    pub max_standardized_error: f64,
    /// max |Gram at common t − fBm Gram|.
    pub fbm_error: f64,
    /// max |Gram(r·x, r^α·t) − r^(1+α)·Gram(x,t)| over max |r^(1+α)·Gram|.
    pub self_similarity_error: f64,
}

/// Exact W_α sampler on `sets` random point sets of 1..=6 points; set i
/// uses stream i.
pub fn sampler_self_test(alpha: f64, sets: u64, reps: usize, runner: &Runner) -> Result<Vec<SamplerCheck>> {
    LimitField::new(alpha)?;
    runner.map(sets, |_, rng| {
        // The V cache is not shared across workers.
        let field = LimitField::new(alpha)?;
        let size = rng.random_range(1..=6usize);
        let pts: Vec<SpaceTimePoint> =
            (0..size).map(|_| SpaceTimePoint::new(rng.random_range(-3.0..3.0), rng.random_range(0.0..3.0))).collect();
        let g = field.gram(&pts)?;
        let min_eig = min_eigenvalue(&g) / g.trace().max(f64::MIN_POSITIVE);
        let sampler = field.sampler(&pts)?;
        let rows: Vec<Vec<f64>> = (0..reps).map(|_| sampler.sample(rng).iter().copied().collect()).collect();
        let est = empirical_covariance(&rows)?;
        let mut max_z: f64 = 0.0;
        for i in 0..size {
            for j in 0..size {
                let d = (est.covariance[(i, j)] - g[(i, j)]).abs();
                let se = est.stderr[(i, j)];
                max_z = max_z.max(if se > 0.0 { d / se } else if d == 0.0 { 0.0 } else { f64::INFINITY });
            }
        }
        let h2 = 1.0 + alpha;
        let t0 = pts[0].t;
        let same: Vec<SpaceTimePoint> = pts.iter().map(|q| SpaceTimePoint::new(q.x, t0)).collect();
        let gs = field.gram(&same)?;
        let mut fbm_error: f64 = 0.0;
        for i in 0..size {
            for j in 0..size {
                let (a, b) = (same[i].x, same[j].x);
                let fbm = 0.5 * (a.abs().powf(h2) + b.abs().powf(h2) - (a - b).abs().powf(h2));
                fbm_error = fbm_error.max((gs[(i, j)] - fbm).abs());
            }
        }
        let r: f64 = rng.random_range(0.3..4.0);
        let scaled: Vec<SpaceTimePoint> = pts.iter().map(|s| SpaceTimePoint::new(r * s.x, r.powf(alpha) * s.t)).collect();
        let gq = field.gram(&scaled)?;
        let target = &g * r.powf(h2);
        let ss = (&gq - &target).abs().max() / target.abs().max().max(f64::MIN_POSITIVE);
        Ok(SamplerCheck {
            points: pts.iter().map(|q| (q.x, q.t)).collect(),
            min_eigenvalue_over_trace: min_eig,
            max_standardized_error: max_z,
            fbm_error,
            self_similarity_error: ss,
        })
    })
}

/// Component moments on an n-grid; n uses streams of `sub_seed(seed, n)`.
/// A positive cutoff that leaves every replicate all-singleton at some n is
/// a cutoff failure.
pub fn component_scaling(
    law: &StepLaw,
    p: f64,
    n_grid: &[usize],
    t_max: impl Fn(usize) -> u64,
    reps: u64,
    runner: &Runner,
) -> Result<ScalingReport> {
    let k = AnalyticConstants::new(law)?;
    let mut sigma = Vec::with_capacity(n_grid.len());
    let mut samples = Vec::with_capacity(n_grid.len());
    for &n in n_grid {
        let cut = t_max(n);
        let reps_n = runner.with_seed(sub_seed(runner.seed, n as u64)).map(reps, |_, rng| Ok(component_moments(law, n, cut, rng)?))?;
        if cut > 0 && reps_n.iter().all(|m| m.components == n + 1) {
            return Err(Error::CutoffFailure { t_max: cut }.into());
        }
        sigma.push(k.sigma_n(p, n as u64)?);
        samples.push(reps_n);
    }
    Ok(component_moment_scaling(n_grid, &sigma, &samples)?)
}
