use clap::{Parser, Subcommand};
use lrvoter_lab::{commands, exit, Command, ExperimentConfig, LabError};
use std::path::PathBuf;
use std::process::ExitCode;

#[derive(Parser)]
#[command(name = "lrvoter", version, about = "Long-range voter model experiments")]
struct Cli {
    #[command(subcommand)]
    command: Sub,
}

#[derive(Subcommand)]
enum Sub {
    /// Closed-form constants, V(t,1), σ_n, and the ‖Q‖² cross-check.
    Analytic(Args),
    /// Sample equilibrium fields and write rescaled partial sums.
    SimulateField(Args),
    /// Coalescence probabilities: Monte Carlo against Fourier.
    CoalesceProb(Args),
    /// Heat-kernel supnorm decay and occupation sums.
    HeatKernel(Args),
    /// Hurst exponent of the field's partial-sum path.
    Hurst(Args),
    /// Variance normalization and Gaussianity of S_n(1,0)/σ_n.
    GaussTest(Args),
    /// Variance of the discrete noise functional against its limit.
    FgnTest(Args),
    /// Component-size moments across an n-grid.
    ComponentScaling(Args),
}

#[derive(clap::Args)]
struct Args {
    /// Versioned key = value config file; flags override it.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    threads: Option<usize>,
    /// Exit nonzero when a verdict fails.
    #[arg(long)]
    enforce: bool,
    #[arg(long, allow_hyphen_values = true)]
    alpha: Option<String>,
    #[arg(long)]
    tail_constant: Option<String>,
    /// `constant` or `log_corrected`.
    #[arg(long)]
    slowly_varying: Option<String>,
    #[arg(long)]
    p: Option<String>,
    /// Window size or comma-separated grid.
    #[arg(long, visible_alias = "n-grid")]
    n: Option<String>,
    #[arg(long)]
    slice_times: Option<String>,
    /// Integer, or `auto:c` for c·n^α·ln n.
    #[arg(long)]
    t_max: Option<String>,
    #[arg(long)]
    reps: Option<String>,
    #[arg(long, visible_alias = "k-list")]
    k: Option<String>,
    #[arg(long)]
    t_grid: Option<String>,
    #[arg(long)]
    x_grid: Option<String>,
    #[arg(long)]
    escape_radius: Option<String>,
    #[arg(long)]
    bump_center: Option<String>,
    #[arg(long)]
    bump_width: Option<String>,
    /// Any other config key, e.g. `threshold.variance_band=0.1`.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    set: Vec<String>,
}

impl Sub {
    fn split(self) -> (Command, Args) {
        match self {
            Sub::Analytic(a) => (Command::Analytic, a),
            Sub::SimulateField(a) => (Command::SimulateField, a),
            Sub::CoalesceProb(a) => (Command::CoalesceProb, a),
            Sub::HeatKernel(a) => (Command::HeatKernel, a),
            Sub::Hurst(a) => (Command::Hurst, a),
            Sub::GaussTest(a) => (Command::GaussTest, a),
            Sub::FgnTest(a) => (Command::FgnTest, a),
            Sub::ComponentScaling(a) => (Command::ComponentScaling, a),
        }
    }
}

fn build_config(command: Command, a: &Args) -> Result<ExperimentConfig, LabError> {
    let mut c = ExperimentConfig::defaults_for(command);
    if let Some(path) = &a.config {
        let text = std::fs::read_to_string(path).map_err(|e| LabError::io(path, e))?;
        c.apply_text(&text)?;
    }
    let flags = [
        ("alpha", &a.alpha),
        ("tail_constant", &a.tail_constant),
        ("slowly_varying", &a.slowly_varying),
        ("p", &a.p),
        ("n", &a.n),
        ("slice_times", &a.slice_times),
        ("t_max", &a.t_max),
        ("reps", &a.reps),
        ("k", &a.k),
        ("t_grid", &a.t_grid),
        ("x_grid", &a.x_grid),
        ("escape_radius", &a.escape_radius),
        ("bump_center", &a.bump_center),
        ("bump_width", &a.bump_width),
    ];
    for (key, value) in flags {
        if let Some(v) = value {
            c.set(key, v)?;
        }
    }
    for kv in &a.set {
        let (k, v) = kv
            .split_once('=')
            .ok_or_else(|| LabError::ConfigValue { key: kv.clone(), reason: "expected KEY=VALUE".into() })?;
        c.set(k.trim(), v.trim())?;
    }
    if let Some(s) = a.seed {
        c.seed = Some(s);
    }
    if let Some(o) = &a.out {
        c.out = o.clone();
    }
    if let Some(t) = a.threads {
        c.threads = t;
    }
    Ok(c)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { exit::USAGE } else { exit::PASS };
            let _ = e.print();
            return ExitCode::from(code as u8);
        }
    };
    let (command, args) = cli.command.split();
    let outcome = build_config(command, &args).and_then(|c| commands::run(command, &c));
    match outcome {
        Ok(o) => {
            if let Some(text) = &o.stdout {
                print!("{text}");
            }
            for v in &o.verdicts {
                println!("{}", v.line());
            }
            println!("manifest: {}", o.manifest.display());
            let code = if args.enforce && !o.all_pass() { exit::ACCEPTANCE } else { exit::PASS };
            ExitCode::from(code as u8)
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
