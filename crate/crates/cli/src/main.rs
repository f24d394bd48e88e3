use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use conclab::catalog::{list_catalog, parse_key};
use conclab::dvoretzky::{estimate_k_eps_grid, success_csv, SearchOptions, DEFAULT_TRIALS};
use conclab::fmt::to_json;
use conclab::mc::{constants_from, estimate_stats, linear_grid, sample_values_and_grad_sq, tail_curve, CenterKind, ScaleKind};
use conclab::rearrangement::{check_rearrangement_properties, gaussian_rearrangement, probability_grid, GRID_POINTS};
use conclab::report::{emit_plot_data, run_and_write, ExperimentConfig, PlotData};
use conclab::{Error, Result};

#[derive(Parser)]
#[command(name = "conclab", version, about = "Gaussian concentration laboratory")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// Worker threads (default: all cores)
    #[arg(long, global = true)]
    threads: Option<usize>,
}

#[derive(Args, Clone)]
struct Common {
    /// Override the dimension parameter `n` of the key
    #[arg(long)]
    n: Option<usize>,
    #[arg(long, default_value_t = 100_000)]
    samples: usize,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    /// Output directory
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// Variance, 𝔼‖∇f‖², ov, s and moments of f(Z)
    Estimate {
        key: String,
        #[command(flatten)]
        common: Common,
    },
    /// Tail probabilities around the median in Lipschitz (or SD) units
    Tails {
        key: String,
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value_t = 0.25)]
        step: f64,
        #[arg(long, default_value_t = 25)]
        points: usize,
    },
    /// Gaussian rearrangement and its property checks
    Rearrange {
        key: String,
        #[command(flatten)]
        common: Common,
    },
    /// Run inequality checks on one key
    Check {
        key: String,
        /// Comma-separated check names
        #[arg(long, value_delimiter = ',', required = true)]
        suite: Vec<String>,
        #[command(flatten)]
        common: Common,
    },
    /// Estimate k(X, ε) over an ε grid
    Dvoretzky {
        key: String,
        /// Comma-separated ε values
        #[arg(long, value_delimiter = ',', required = true)]
        eps: Vec<f64>,
        #[arg(long, default_value_t = DEFAULT_TRIALS)]
        trials: usize,
        /// Directions per section (default max(10⁴, 200k))
        #[arg(long)]
        directions: Option<usize>,
        #[command(flatten)]
        common: Common,
    },
    /// List the built-in catalog
    Catalog,
    /// Run a TOML experiment config
    Run {
        config: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn with_n(key: &str, n: Option<usize>) -> String {
    let Some(n) = n else { return key.to_string() };
    let mut found = false;
    let mut parts: Vec<String> = key
        .split(':')
        .map(|p| {
            if p.starts_with("n=") {
                found = true;
                format!("n={n}")
            } else {
                p.to_string()
            }
        })
        .collect();
    if !found {
        parts.push(format!("n={n}"));
    }
    parts.join(":")
}

fn write(dir: &Path, name: &str, text: &str) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(|e| Error::Io {
        path: dir.to_path_buf(),
        source: e,
    })?;
    let path = dir.join(name);
    std::fs::write(&path, text).map_err(|e| Error::Io { path, source: e })
}

/// Ok(true) when everything requested passed.
fn run(cli: Cli) -> Result<bool> {
    match cli.command {
        Command::Catalog => {
            print!("{}", list_catalog());
            Ok(true)
        }
        Command::Estimate { key, common } => {
            let spec = parse_key(&with_n(&key, common.n))?;
            let (emp, g) = sample_values_and_grad_sq(&spec, common.samples, common.seed)?;
            let constants = constants_from(&spec, &emp, &g);
            let stats = estimate_stats(&emp, &[1.0, 2.0, 4.0]);
            let body = to_json(&(constants, stats))?;
            print!("{body}");
            if let Some(out) = &common.out {
                write(out, "estimate.json", &body)?;
            }
            Ok(true)
        }
        Command::Tails {
            key,
            common,
            step,
            points,
        } => {
            let spec = parse_key(&with_n(&key, common.n))?;
            let (emp, _) = sample_values_and_grad_sq(&spec, common.samples, common.seed)?;
            let grid = linear_grid(0.0, step, points);
            let (scale, kind) = match spec.lipschitz() {
                Some(l) => (l, ScaleKind::Lipschitz),
                None => (emp.variance().sqrt(), ScaleKind::StdDev),
            };
            let profile = tail_curve(&emp, emp.median(), CenterKind::Median, scale, kind, &grid)?;
            print!("{}", profile.to_csv());
            if let Some(out) = &common.out {
                write(out, "profile.json", &to_json(&profile)?)?;
                write(out, "profile.csv", &profile.to_csv())?;
                let up = |t: f64| (-t * t / 2.0).exp();
                let lo = |_: f64| 0.0;
                let data = PlotData::Profile {
                    profile: &profile,
                    bound_upper: &up,
                    bound_lower: &lo,
                };
                emit_plot_data(&data, &out.join("profile_plot.csv"))?;
            }
            Ok(true)
        }
        Command::Rearrange { key, common } => {
            let spec = parse_key(&with_n(&key, common.n))?;
            let (emp, g) = sample_values_and_grad_sq(&spec, common.samples, common.seed)?;
            let grad = constants_from(&spec, &emp, &g).grad_sq_mean;
            let curve = gaussian_rearrangement(&emp, &probability_grid(GRID_POINTS))?;
            let report = check_rearrangement_properties(&curve, &emp, &spec, Some(grad), common.seed);
            println!(
                "ks {:.6}  lip {:.6}  convexity_z {:.3}  dirichlet {:.6}",
                report.ks_distance, report.lip_estimate, report.convexity_z, report.dirichlet
            );
            if let Some(out) = &common.out {
                write(out, "rearrangement.json", &to_json(&report)?)?;
                emit_plot_data(&PlotData::Rearrangement(&curve), &out.join("rearrangement.csv"))?;
            }
            Ok(true)
        }
        Command::Check { key, suite, common } => {
            let key = with_n(&key, common.n);
            let checks: Vec<&str> = suite.iter().map(String::as_str).collect();
            let cfg = ExperimentConfig::new(&[key.as_str()], common.samples, common.seed, &checks);
            let out = common.out.unwrap_or_else(|| PathBuf::from("out"));
            let report = run_and_write(&cfg, &out)?;
            for e in &report.entries {
                match &e.error {
                    Some(msg) => println!("{:<24} {:<28} error: {msg}", e.check, e.key),
                    None => println!("{:<24} {:<28} {}", e.check, e.key, e.status),
                }
            }
            Ok(report.passed)
        }
        Command::Dvoretzky {
            key,
            eps,
            trials,
            directions,
            common,
        } => {
            let spec = parse_key(&with_n(&key, common.n))?;
            let opts = SearchOptions {
                trials,
                directions,
                ..SearchOptions::default()
            };
            let est = estimate_k_eps_grid(&spec, &eps, opts, common.seed)?;
            for e in &est {
                println!("epsilon {}  k {}", e.epsilon, e.k_estimate);
            }
            if let Some(out) = &common.out {
                write(out, "dvoretzky.json", &to_json(&est)?)?;
                write(out, "dvoretzky.csv", &success_csv(&est))?;
            }
            Ok(true)
        }
        Command::Run { config, out } => {
            let cfg = ExperimentConfig::load(&config)?;
            let out = out.or_else(|| cfg.out.clone()).unwrap_or_else(|| PathBuf::from("out"));
            let report = run_and_write(&cfg, &out)?;
            let failed = report.entries.iter().filter(|e| e.failed()).count();
            println!("{} checks, {failed} failed; report in {}", report.entries.len(), out.display());
            Ok(report.passed)
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(t) = cli.threads {
        if let Err(e) = conclab::set_threads(t) {
            eprintln!("error: {e}");
            return ExitCode::from(2);
        }
    }
    match run(cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
