//! One function per subcommand: validate, compute, write artifacts, judge.
//!
//! CSV column orders:
//!
//! | file | columns |
//! |---|---|
//! | `analytic.csv` | quantity, argument, value |
//! | `field_n{n}.csv` | replicate, slice, t, `x=<x>` for each x in the grid |
//! | `coalescence.csv` | k, mc_estimate, stderr, live_fraction, fourier_value, escaped_fraction |
//! | `supnorm.csv` | t, supnorm, leak, return_prob |
//! | `occupation.csv` | n, occupation_sum, tail_bound |
//! | `hurst.csv` | n, replicate, h |
//! | `gauss.csv` | n, replicate, rescaled, conditional_variance |
//! | `fgn.csv` | replicate, functional, conditional_variance |
//! | `scaling.csv` | n, mean_second_moment, second_moment_stderr, var_vn, mean_vn, mean_residual_clusters |

use crate::config::{Command, ExperimentConfig};
use crate::error::Result;
use crate::experiments::{self, Bump, SliceJob};
use crate::output::{num, Artifacts, Verdict};
use crate::runner::Runner;
use lrvoter_core::stats::{gaussianity, mean_stderr, variance_stderr};
use lrvoter_core::{AnalyticConstants, StepLaw};
use serde::Serialize;
use std::path::PathBuf;

#[derive(Debug)]
pub struct Outcome {
    pub verdicts: Vec<Verdict>,
    pub manifest: PathBuf,
    /// CSV printed to stdout, if the command has one.
    pub stdout: Option<String>,
}

impl Outcome {
    pub fn all_pass(&self) -> bool {
        self.verdicts.iter().all(|v| v.pass)
    }
}

pub fn run(command: Command, config: &ExperimentConfig) -> Result<Outcome> {
    let law = config.validate(command)?;
    let runner = Runner::new(config.seed.unwrap_or(0), config.threads);
    let mut art = Artifacts::create(config, command)?;
    let k = AnalyticConstants::new(&law)?;
    art.constants.insert("alpha".into(), k.alpha);
    art.constants.insert("c_alpha".into(), k.c_alpha);
    art.constants.insert("q_norm2".into(), k.q_norm2);
    art.constants.insert("v0".into(), k.limit_field().v0());
    art.constants.insert("c_tilde_p".into(), k.c_tilde_p(config.p)?);
    let (verdicts, stdout) = match command {
        Command::Analytic => analytic(config, &law, &k, &mut art)?,
        Command::SimulateField => (simulate_field(config, &law, &k, &runner, &mut art)?, None),
        Command::CoalesceProb => (coalesce_prob(config, &law, &runner, &mut art)?, None),
        Command::HeatKernel => (heat_kernel(config, &law, &mut art)?, None),
        Command::Hurst => (hurst(config, &law, &k, &runner, &mut art)?, None),
        Command::GaussTest => (gauss_test(config, &law, &k, &runner, &mut art)?, None),
        Command::FgnTest => (fgn_test(config, &law, &k, &runner, &mut art)?, None),
        Command::ComponentScaling => (component_scaling(config, &law, &runner, &mut art)?, None),
    };
    let manifest = art.finish(&verdicts)?;
    Ok(Outcome { verdicts, manifest, stdout })
}

fn header(cols: &[&str]) -> Vec<String> {
    cols.iter().map(|c| c.to_string()).collect()
}

fn sigma_for(k: &AnalyticConstants, art: &mut Artifacts, p: f64, n: usize) -> Result<f64> {
    let s = k.sigma_n(p, n as u64)?;
    art.constants.insert(format!("sigma_n[{n}]"), s);
    Ok(s)
}

fn analytic(
    config: &ExperimentConfig,
    law: &StepLaw,
    k: &AnalyticConstants,
    art: &mut Artifacts,
) -> Result<(Vec<Verdict>, Option<String>)> {
    let mut rows = vec![
        vec!["alpha".into(), String::new(), num(k.alpha)],
        vec!["c_alpha".into(), String::new(), num(k.c_alpha)],
        vec!["q_norm2".into(), String::new(), num(k.q_norm2)],
        vec!["q_norm2_error".into(), String::new(), num(k.q_norm2_error)],
    ];
    for &t in &config.slice_times {
        rows.push(vec!["v".into(), format!("t={t}"), num(k.v(t, 1.0)?)]);
    }
    rows.push(vec!["c_tilde_p".into(), format!("p={}", config.p), num(k.c_tilde_p(config.p)?)]);
    for &n in &config.n {
        rows.push(vec!["sigma_n".into(), format!("n={n}"), num(sigma_for(k, art, config.p, n)?)]);
    }
    let check = experiments::q_norm_consistency(law)?;
    rows.push(vec!["q_norm2_series".into(), String::new(), num(check.series.total)]);
    let cols = header(&["quantity", "argument", "value"]);
    let mut text = cols.join(",") + "\n";
    for r in &rows {
        text += &(r.join(",") + "\n");
    }
    art.write_csv("analytic.csv", &cols, rows)?;
    let th = config.thresholds.qnorm_relative;
    let v = Verdict::new(
        "q_norm_consistency",
        check.relative_difference,
        0.0,
        th,
        check.relative_difference < th,
        "relative difference <",
    );
    Ok((vec![v], Some(text)))
}

#[derive(Serialize)]
struct FieldSidecar<'a> {
    law: lrvoter_core::steplaw::LawParams,
    p: f64,
    n: usize,
    sigma_n: f64,
    t_max: u64,
    slice_times: &'a [f64],
    microscopic_slice_times: Vec<i64>,
    c_alpha: f64,
    q_norm2: f64,
    v0: f64,
    residual_clusters: Vec<usize>,
}

fn simulate_field(
    config: &ExperimentConfig,
    law: &StepLaw,
    k: &AnalyticConstants,
    runner: &Runner,
    art: &mut Artifacts,
) -> Result<Vec<Verdict>> {
    let th = &config.thresholds;
    let mut verdicts = Vec::new();
    for &n in &config.n {
        let sigma = sigma_for(k, art, config.p, n)?;
        let t_max = config.t_max.resolve(law, n as u64);
        let reps = experiments::field_values(law, config.p, n, &config.slice_times, &config.x_grid, t_max, sigma, config.reps, runner)?;
        let mut cols = header(&["replicate", "slice", "t"]);
        cols.extend(config.x_grid.iter().map(|x| format!("x={x}")));
        let rows = reps.iter().enumerate().flat_map(|(r, rep)| {
            rep.values.iter().enumerate().map(move |(s, vals)| {
                let mut row = vec![r.to_string(), s.to_string(), num(config.slice_times[s])];
                row.extend(vals.iter().map(|&v| num(v)));
                row
            })
        });
        art.write_csv(&format!("field_n{n}.csv"), &cols, rows)?;
        art.write_json(
            &format!("field_n{n}.json"),
            &FieldSidecar {
                law: law.params(),
                p: config.p,
                n,
                sigma_n: sigma,
                t_max,
                slice_times: &config.slice_times,
                microscopic_slice_times: experiments::micro_times(law, &config.slice_times, n),
                c_alpha: k.c_alpha,
                q_norm2: k.q_norm2,
                v0: k.limit_field().v0(),
                residual_clusters: reps.iter().map(|r| r.residual_clusters).collect(),
            },
        )?;
        let temporal = config.slice_times.len() >= 2
            && config.slice_times[0] == 0.0
            && config.x_grid.last() == Some(&1.0)
            && reps.len() >= 30;
        if temporal {
            for row in experiments::temporal_correlations(law.alpha(), &config.slice_times, &reps)? {
                let tol = th.correlation_sigmas * row.stderr + th.correlation_allowance;
                let dev = (row.correlation - row.target).abs();
                verdicts.push(Verdict::new(
                    format!("corr_n{n}_t{}", row.t),
                    row.correlation,
                    row.stderr,
                    row.target,
                    dev <= tol,
                    format!("within {tol:.4} of"),
                ));
            }
        }
    }
    Ok(verdicts)
}

fn coalesce_prob(config: &ExperimentConfig, law: &StepLaw, runner: &Runner, art: &mut Artifacts) -> Result<Vec<Verdict>> {
    let t_max = config.t_max.resolve(law, config.n[0] as u64);
    let table = experiments::coalescence_table(law, &config.k, config.reps, t_max, config.escape_radius, runner)?;
    let cols = header(&["k", "mc_estimate", "stderr", "live_fraction", "fourier_value", "escaped_fraction"]);
    let rows = table.iter().map(|r| {
        vec![
            r.mc.k.to_string(),
            num(r.mc.estimate),
            num(r.mc.stderr),
            num(r.mc.live_fraction),
            num(r.fourier),
            num(r.mc.escaped_fraction),
        ]
    });
    art.write_csv("coalescence.csv", &cols, rows)?;
    let th = &config.thresholds;
    Ok(table
        .iter()
        .map(|r| {
            let tol = th.coalesce_sigmas * r.mc.stderr + th.coalesce_allowance;
            Verdict::new(
                format!("coalesce_k{}", r.mc.k),
                r.mc.estimate,
                r.mc.stderr,
                r.fourier,
                (r.mc.estimate - r.fourier).abs() <= tol,
                format!("within {tol:.5} of"),
            )
        })
        .collect())
}

fn heat_kernel(config: &ExperimentConfig, law: &StepLaw, art: &mut Artifacts) -> Result<Vec<Verdict>> {
    let th = &config.thresholds;
    let kr = experiments::heat_kernel_decay(law, &config.t_grid)?;
    let rows = kr.rows.iter().map(|r| vec![r.t.to_string(), num(r.supnorm), num(r.leak), num(r.return_prob)]);
    art.write_csv("supnorm.csv", &header(&["t", "supnorm", "leak", "return_prob"]), rows)?;
    let occ = experiments::occupation_scaling(law, &config.n)?;
    let rows = occ.rows.iter().map(|r| vec![r.n.to_string(), num(r.value), num(r.tail_bound)]);
    art.write_csv("occupation.csv", &header(&["n", "occupation_sum", "tail_bound"]), rows)?;
    let target = -1.0 / law.alpha();
    let max_leak = kr.rows.iter().map(|r| r.leak).fold(0.0, f64::max);
    let bound = law.alpha() + th.occupation_margin;
    Ok(vec![
        Verdict::new(
            "supnorm_slope",
            kr.slope,
            kr.slope_stderr,
            target,
            (kr.slope - target).abs() <= th.supnorm_slope_tolerance,
            format!("within {} of", th.supnorm_slope_tolerance),
        ),
        Verdict::new("supnorm_leak", max_leak, 0.0, th.max_leak, max_leak < th.max_leak, "max over grid <"),
        Verdict::new("occupation_exponent", occ.exponent, occ.exponent_stderr, bound, occ.exponent <= bound, "<="),
    ])
}

fn hurst(
    config: &ExperimentConfig,
    law: &StepLaw,
    k: &AnalyticConstants,
    runner: &Runner,
    art: &mut Artifacts,
) -> Result<Vec<Verdict>> {
    let target = 0.5 * (1.0 + law.alpha());
    let tol = config.thresholds.hurst_tolerance;
    let mut rows = Vec::new();
    let mut verdicts = Vec::new();
    for &n in &config.n {
        let sigma = sigma_for(k, art, config.p, n)?;
        let job = SliceJob { law, p: config.p, n, t_max: config.t_max.resolve(law, n as u64), sigma_n: sigma, bump: None, hurst: true };
        let hs: Vec<f64> = experiments::slice_samples(job, config.reps, runner)?.iter().filter_map(|s| s.hurst).collect();
        rows.extend(hs.iter().enumerate().map(|(r, h)| vec![n.to_string(), r.to_string(), num(*h)]));
        let (m, se) = mean_stderr(&hs);
        verdicts.push(Verdict::new(format!("hurst_n{n}"), m, se, target, (m - target).abs() <= tol, format!("within {tol} of")));
    }
    art.write_csv("hurst.csv", &header(&["n", "replicate", "h"]), rows)?;
    Ok(verdicts)
}

fn gauss_test(
    config: &ExperimentConfig,
    law: &StepLaw,
    k: &AnalyticConstants,
    runner: &Runner,
    art: &mut Artifacts,
) -> Result<Vec<Verdict>> {
    let th = &config.thresholds;
    let band = th.variance_band;
    let mut rows = Vec::new();
    let mut verdicts = Vec::new();
    let mut deviations = Vec::new();
    let mut last = Vec::new();
    for &n in &config.n {
        let sigma = sigma_for(k, art, config.p, n)?;
        let job = SliceJob { law, p: config.p, n, t_max: config.t_max.resolve(law, n as u64), sigma_n: sigma, bump: None, hurst: false };
        let samples = experiments::slice_samples(job, config.reps, runner)?;
        rows.extend(samples.iter().enumerate().map(|(r, s)| {
            vec![n.to_string(), r.to_string(), num(s.rescaled), num(s.conditional_variance)]
        }));
        let xs: Vec<f64> = samples.iter().map(|s| s.rescaled).collect();
        let cv: Vec<f64> = samples.iter().map(|s| s.conditional_variance).collect();
        let (v, vse) = variance_stderr(&xs)?;
        let (rb, rbse) = mean_stderr(&cv);
        verdicts.push(Verdict::new(format!("variance_n{n}"), v, vse, band, (v - 1.0).abs() <= band, "|estimate - 1| <="));
        verdicts.push(Verdict::new(
            format!("conditional_variance_n{n}"),
            rb,
            rbse,
            band,
            (rb - 1.0).abs() <= band,
            "|estimate - 1| <=",
        ));
        deviations.push((rb - 1.0).abs());
        last = xs;
    }
    if deviations.len() >= 2 {
        let ok = deviations.windows(2).all(|w| w[1] <= w[0]);
        let worst = deviations.windows(2).map(|w| w[1] - w[0]).fold(f64::NEG_INFINITY, f64::max);
        verdicts.push(Verdict::new("variance_deviation_nonincreasing", worst, 0.0, 0.0, ok, "largest step in |Var - 1| <="));
    }
    let g = gaussianity(&last)?;
    let ks_max = th.ks_factor * 1.63 / (last.len() as f64).sqrt();
    verdicts.push(Verdict::new(
        "skewness",
        g.skewness,
        0.0,
        th.max_abs_skewness,
        g.skewness.abs() < th.max_abs_skewness,
        "|estimate| <",
    ));
    verdicts.push(Verdict::new(
        "excess_kurtosis",
        g.excess_kurtosis,
        0.0,
        th.max_abs_excess_kurtosis,
        g.excess_kurtosis.abs() < th.max_abs_excess_kurtosis,
        "|estimate| <",
    ));
    verdicts.push(Verdict::new("ks_distance", g.ks_distance, 0.0, ks_max, g.ks_distance < ks_max, "<"));
    art.write_csv("gauss.csv", &header(&["n", "replicate", "rescaled", "conditional_variance"]), rows)?;
    Ok(verdicts)
}

fn fgn_test(
    config: &ExperimentConfig,
    law: &StepLaw,
    k: &AnalyticConstants,
    runner: &Runner,
    art: &mut Artifacts,
) -> Result<Vec<Verdict>> {
    let n = *config.n.last().unwrap_or(&1);
    let sigma = sigma_for(k, art, config.p, n)?;
    let bump = Bump { center: config.bump_center, width: config.bump_width };
    let target = bump.variance_target(law.alpha())?;
    art.constants.insert("fgn_variance".into(), target.value);
    let job = SliceJob { law, p: config.p, n, t_max: config.t_max.resolve(law, n as u64), sigma_n: sigma, bump: Some(bump), hurst: false };
    let samples = experiments::slice_samples(job, config.reps, runner)?;
    let fs: Vec<f64> = samples.iter().filter_map(|s| s.fgn).collect();
    let cv: Vec<f64> = samples.iter().filter_map(|s| s.fgn_conditional_variance).collect();
    let rows = fs.iter().zip(&cv).enumerate().map(|(r, (f, c))| vec![r.to_string(), num(*f), num(*c)]);
    art.write_csv("fgn.csv", &header(&["replicate", "functional", "conditional_variance"]), rows)?;
    let tol = config.thresholds.fgn_relative;
    let (v, vse) = variance_stderr(&fs)?;
    let (rb, rbse) = mean_stderr(&cv);
    let (r1, r2) = (v / target.value, rb / target.value);
    Ok(vec![
        Verdict::new("fgn_variance_ratio", r1, vse / target.value, tol, (r1 - 1.0).abs() <= tol, "|estimate - 1| <="),
        Verdict::new("fgn_conditional_variance_ratio", r2, rbse / target.value, tol, (r2 - 1.0).abs() <= tol, "|estimate - 1| <="),
    ])
}

fn component_scaling(config: &ExperimentConfig, law: &StepLaw, runner: &Runner, art: &mut Artifacts) -> Result<Vec<Verdict>> {
    let rep = experiments::component_scaling(law, config.p, &config.n, |n| config.t_max.resolve(law, n as u64), config.reps, runner)?;
    let rows = rep.rows.iter().map(|r| {
        vec![
            r.n.to_string(),
            num(r.mean_second_moment),
            num(r.second_moment_stderr),
            num(r.var_vn),
            num(r.mean_vn),
            num(r.mean_residual_clusters),
        ]
    });
    art.write_csv(
        "scaling.csv",
        &header(&["n", "mean_second_moment", "second_moment_stderr", "var_vn", "mean_vn", "mean_residual_clusters"]),
        rows,
    )?;
    let bound = 2.0 * law.alpha() + config.thresholds.moment_margin;
    Ok(vec![
        Verdict::new(
            "second_moment_exponent",
            rep.second_moment_exponent,
            rep.second_moment_exponent_stderr,
            bound,
            rep.second_moment_exponent <= bound,
            "<=",
        ),
        Verdict::new(
            "var_vn_strictly_decreasing",
            if rep.var_vn_strictly_decreasing { 1.0 } else { 0.0 },
            0.0,
            1.0,
            rep.var_vn_strictly_decreasing,
            "==",
        ),
        Verdict::new("var_vn_slope", rep.var_vn_slope, 0.0, 0.0, rep.var_vn_slope < 0.0, "<"),
    ])
}
