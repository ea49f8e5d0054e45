use std::fs::File;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::Arc;

use clap::{Args, Parser, Subcommand};

use walkmax::approximation::Approximation;
use walkmax::config::{parse_config, CalibrationConfig, ExperimentConfig};
use walkmax::diagnostics::{default_sampler_cases, run_sampler_case, SamplerCase};
use walkmax::experiment::{resolve_safety, run_experiment, summary_rows};
use walkmax::report::{write_rows, MarginRecord};
use walkmax::validation::{run_suite, SuiteOptions, CHECK_NAMES};
use walkmax::{Error, Result};

#[derive(Parser)]
#[command(name = "walkmax", version, about = "Rare-event simulation of P(M > b) for heavy-tailed random walks")]
struct Cli {
    /// Worker threads (default: machine parallelism).
    #[arg(long, global = true)]
    workers: Option<usize>,

    /// Overrides the master seed.
    #[arg(long, global = true)]
    seed: Option<u64>,

    /// CSV destination (default: the config's output.path, else stdout).
    #[arg(long, global = true)]
    out: Option<PathBuf>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy)]
enum GammaArg {
    Auto,
    Value(f64),
}

fn parse_gamma(s: &str) -> std::result::Result<GammaArg, String> {
    if s == "auto" {
        return Ok(GammaArg::Auto);
    }
    match s.parse::<f64>() {
        Ok(g) if g > 0.0 && g < 1.0 => Ok(GammaArg::Value(g)),
        Ok(g) => Err(format!("must lie in (0, 1), got {g}")),
        Err(e) => Err(e.to_string()),
    }
}

#[derive(Args)]
struct CalibrationFlags {
    /// A value in (0, 1), or `auto` to pick the one with the smallest
    /// second-moment bound.
    #[arg(long, value_parser = parse_gamma)]
    gamma: Option<GammaArg>,
    /// Uses this shift instead of scanning for one.
    #[arg(long = "a-star", allow_hyphen_values = true)]
    a_star: Option<f64>,
    #[arg(long = "y-min", allow_hyphen_values = true)]
    y_min: Option<f64>,
    #[arg(long = "grid-step")]
    grid_step: Option<f64>,
}

#[derive(Subcommand)]
enum Command {
    /// Runs the configured estimator at every level and writes one row per level.
    Estimate {
        #[arg(long)]
        config: PathBuf,
        #[command(flatten)]
        calibration: CalibrationFlags,
    },
    /// Scans for the safety shift and writes the margin grid.
    FindAStar {
        #[arg(long)]
        config: PathBuf,
        #[command(flatten)]
        calibration: CalibrationFlags,
    },
    /// Runs the exact lattice oracle checks.
    Validate {
        /// Comma-separated subset of the checks.
        #[arg(long, value_delimiter = ',')]
        checks: Option<Vec<String>>,
        #[arg(long)]
        replications: Option<u64>,
        #[arg(long = "v-scale", hide = true, default_value_t = 1.0)]
        v_scale: f64,
    },
    /// Compares sampler draws with the exact conditional law.
    SamplerTest {
        /// Tests the model and scheme of this config instead of the built-in cases.
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long, value_delimiter = ',')]
        beta: Option<Vec<f64>>,
        #[arg(long, default_value_t = 100_000)]
        draws: usize,
        #[arg(long, default_value_t = 10)]
        stride: usize,
    },
}

fn load_config(path: &Path, cli: &Cli, cal: &CalibrationFlags) -> Result<ExperimentConfig> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::config(0, format!("{}: {e}", path.display())))?;
    let mut cfg = parse_config(&text)?;
    if let Some(s) = cli.seed {
        cfg.seed = s;
    }
    match cal.gamma {
        Some(GammaArg::Auto) => cfg.calibration.optimize_gamma = true,
        Some(GammaArg::Value(g)) => {
            cfg.calibration.gamma = g;
            cfg.calibration.optimize_gamma = false;
        }
        None => {}
    }
    if cal.a_star.is_some() {
        cfg.calibration.a_star = cal.a_star;
    }
    if cal.y_min.is_some() {
        cfg.calibration.y_min = cal.y_min;
    }
    if let Some(h) = cal.grid_step {
        cfg.calibration.grid_step = h;
    }
    Ok(cfg)
}

fn output(cli: &Cli, cfg: Option<&ExperimentConfig>) -> Result<Box<dyn Write>> {
    match cli.out.clone().or_else(|| cfg.and_then(|c| c.output.clone())) {
        Some(p) => Ok(Box::new(File::create(&p).map_err(|e| Error::Io(format!("{}: {e}", p.display())))?)),
        None => Ok(Box::new(io::stdout())),
    }
}

fn workers(cli: &Cli) -> usize {
    cli.workers
        .unwrap_or_else(|| std::thread::available_parallelism().map(|n| n.get()).unwrap_or(1))
        .max(1)
}

fn estimate(cli: &Cli, config: &Path, cal: &CalibrationFlags) -> Result<()> {
    let cfg = load_config(config, cli, cal)?;
    let results = run_experiment(&cfg, workers(cli))?;
    for r in &results {
        eprintln!(
            "b = {}: estimate {:.5e} (stderr {:.2e}, cv {:.3}, mean steps {:.1})",
            r.b, r.summary.mean, r.summary.stderr, r.summary.cv, r.summary.mean_steps
        );
    }
    write_rows(output(cli, Some(&cfg))?, &summary_rows(&cfg, &results))
}

fn find_shift(cli: &Cli, config: &Path, cal: &CalibrationFlags) -> Result<()> {
    let cfg = load_config(config, cli, cal)?;
    let approx = Arc::new(Approximation::new(cfg.model.build()?)?);
    let b_max = cfg.levels.iter().copied().fold(0.0, f64::max);
    let c = &cfg.calibration;
    let scan = CalibrationConfig {
        a_star: None,
        ..c.clone()
    };
    let sp = resolve_safety(&approx, &scan, b_max)?;
    eprintln!(
        "gamma = {}: a_star = {} (kappa = {:.5e}, bound constant {:.4e})",
        sp.gamma,
        sp.a_star,
        sp.kappa,
        sp.bound_constant()
    );
    if let Some(manual) = c.a_star {
        let ok = sp
            .verified_grid
            .iter()
            .filter(|r| r.y <= manual && r.v > 0.0)
            .all(|r| r.margin >= 0.0);
        eprintln!("manual a_star = {manual}: margins nonnegative on the grid below it: {ok}");
    }
    let rows: Vec<MarginRecord> = sp.verified_grid.iter().map(MarginRecord::from).collect();
    write_rows(output(cli, Some(&cfg))?, &rows)
}

fn validate(cli: &Cli, checks: &Option<Vec<String>>, replications: Option<u64>, v_scale: f64) -> Result<()> {
    let mut opts = SuiteOptions {
        workers: workers(cli),
        v_scale,
        ..SuiteOptions::default()
    };
    if let Some(s) = cli.seed {
        opts.seed = s;
    }
    if let Some(n) = replications {
        opts.replications = n;
    }
    let selection: Vec<&str> = match checks {
        Some(list) => list.iter().map(|s| s.trim()).filter(|s| !s.is_empty()).collect(),
        None => CHECK_NAMES.to_vec(),
    };
    if selection.is_empty() {
        return Err(Error::config(0, format!("empty check selection (known: {})", CHECK_NAMES.join(", "))));
    }
    let outcomes = run_suite(&selection, &opts)?;
    let mut out = output(cli, None)?;
    let width = outcomes.iter().map(|o| o.name.len()).max().unwrap_or(0);
    for o in &outcomes {
        writeln!(out, "{:<width$}  {}  {}", o.name, if o.passed { "PASS" } else { "FAIL" }, o.detail)?;
    }
    match outcomes.iter().find(|o| !o.passed) {
        Some(o) => Err(Error::ValidationFailure(format!("{}: {}", o.name, o.detail))),
        None => Ok(()),
    }
}

fn sampler_test(cli: &Cli, config: &Option<PathBuf>, beta: &Option<Vec<f64>>, draws: usize, stride: usize) -> Result<()> {
    let mut cases = match config {
        Some(p) => {
            let none = CalibrationFlags {
                gamma: None,
                a_star: None,
                y_min: None,
                grid_step: None,
            };
            let cfg = load_config(p, cli, &none)?;
            vec![SamplerCase {
                model: cfg.model,
                scheme: cfg.sampler.scheme,
                betas: vec![5.0, 30.0, 100.0],
            }]
        }
        None => default_sampler_cases(),
    };
    if let Some(b) = beta {
        for c in &mut cases {
            c.betas = b.clone();
        }
    }
    let seed = cli.seed.unwrap_or(1);
    let mut out = output(cli, None)?;
    writeln!(out, "model,scheme,beta,draws,ks_statistic,ks_p_value,decile_gap,dkw_epsilon,acceptance_rate,predicted_acceptance,pass")?;
    let mut failed = Vec::new();
    for case in &cases {
        for c in run_sampler_case(case, draws, seed, stride)? {
            let pass = c.passes(0.01);
            writeln!(
                out,
                "{},{},{:.5e},{},{:.5e},{:.5e},{:.5e},{:.5e},{:.5e},{:.5e},{}",
                case.model.name(),
                c.scheme,
                c.beta,
                c.draws,
                c.ks_statistic,
                c.ks_p_value,
                c.decile_gap,
                c.dkw_epsilon,
                c.acceptance_rate,
                c.predicted_acceptance,
                pass
            )?;
            if !pass {
                failed.push(format!("{} {} beta={}", case.model.name(), c.scheme, c.beta));
            }
        }
    }
    if failed.is_empty() {
        Ok(())
    } else {
        Err(Error::ValidationFailure(format!("sampler checks failed: {}", failed.join("; "))))
    }
}

fn run(cli: &Cli) -> Result<()> {
    if let Some(n) = cli.workers {
        if n == 0 {
            return Err(Error::config(0, "--workers must be at least 1"));
        }
    }
    match &cli.command {
        Command::Estimate { config, calibration } => estimate(cli, config, calibration),
        Command::FindAStar { config, calibration } => find_shift(cli, config, calibration),
        Command::Validate {
            checks,
            replications,
            v_scale,
        } => validate(cli, checks, *replications, *v_scale),
        Command::SamplerTest {
            config,
            beta,
            draws,
            stride,
        } => sampler_test(cli, config, beta, *draws, *stride),
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
