use std::path::PathBuf;
use std::process::ExitCode;

use aurora::config::{RunConfig, Variant};
use aurora::experiment::{self, Metric, Resources, SuiteReport};
use aurora::tasks::TaskKind;
use clap::{Parser, Subcommand};

#[derive(Parser)]
#[command(
    name = "aurora",
    version,
    about = "Quality-diversity runs with learned behavioural descriptors"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one configuration and write its record.
    Run {
        #[arg(long)]
        config: PathBuf,
        /// Overrides `run.seed`.
        #[arg(long)]
        seed: Option<u64>,
        /// Defaults to `<AURORA_OUT_DIR or runs>/<variant>/seed_<seed>`.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run every variant of `suite.variants` over several seeds.
    Suite {
        #[arg(long)]
        config: PathBuf,
        /// Overrides `suite.replications`.
        #[arg(long)]
        replications: Option<usize>,
        /// Concurrent runs; overrides `suite.parallel`.
        #[arg(long, env = "AURORA_PARALLEL")]
        parallel: Option<usize>,
        /// Comma-separated list overriding `suite.variants`.
        #[arg(long, value_delimiter = ',')]
        variants: Vec<String>,
        #[arg(long, env = "AURORA_OUT_DIR", default_value = "runs")]
        out: PathBuf,
    },
    /// Write per-variant median/quartile series and archive scatter files.
    Export {
        /// Directory searched recursively for finished runs.
        #[arg(long)]
        runs: PathBuf,
        #[arg(long)]
        metric: String,
        /// Defaults to `<runs>/plots`.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Build a CVT centroid set and store it for reuse.
    Centroids {
        #[arg(long)]
        config: PathBuf,
        /// `cvt_prior` or `cvt_blind`.
        #[arg(long)]
        variant: String,
        #[arg(long)]
        out: PathBuf,
    },
}

fn main() -> ExitCode {
    match dispatch(Cli::parse().command) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}

fn dispatch(command: Command) -> aurora::Result<ExitCode> {
    match command {
        Command::Run { config, seed, out } => {
            let mut cfg = RunConfig::load(&config)?;
            if let Some(s) = seed {
                cfg.run.seed = s;
            }
            let out = out.unwrap_or_else(|| {
                let root = std::env::var_os("AURORA_OUT_DIR")
                    .map_or_else(|| PathBuf::from("runs"), PathBuf::from);
                experiment::run_dir(&root, cfg.run.variant, cfg.run.seed)
            });
            let record = experiment::run(&cfg, &Resources::new(), Some(&out))?;
            let s = &record.summary;
            println!(
                "{} seed {}: size {} klc {} diversity {} rmse {} ({:.1}s) -> {}",
                s.variant,
                s.seed,
                s.final_size,
                fmt(s.final_klc),
                fmt(s.final_diversity),
                fmt(s.final_rmse),
                s.duration_secs,
                out.display()
            );
            Ok(ExitCode::SUCCESS)
        }
        Command::Suite {
            config,
            replications,
            parallel,
            variants,
            out,
        } => {
            let cfg = RunConfig::load(&config)?;
            let variants = if variants.is_empty() {
                cfg.suite.variants.clone()
            } else {
                variants
                    .iter()
                    .map(|v| Variant::parse(v.trim()))
                    .collect::<aurora::Result<_>>()?
            };
            for &v in &variants {
                cfg.check_variant(v)?;
            }
            let reps = replications.unwrap_or(cfg.suite.replications);
            let configs = experiment::suite_configs(&cfg, &variants, reps, cfg.suite.base_seed);
            let report = experiment::run_suite(
                &configs,
                parallel.unwrap_or(cfg.suite.parallel),
                &Resources::new(),
                Some(&out),
            )?;
            print_report(&report, cfg.run.task);
            println!("suite tables in {}", out.display());
            Ok(if report.failures().next().is_some() {
                ExitCode::FAILURE
            } else {
                ExitCode::SUCCESS
            })
        }
        Command::Export { runs, metric, out } => {
            let metric: Metric = metric.parse()?;
            let out = out.unwrap_or_else(|| runs.join("plots"));
            let files = experiment::export_plot_data(&runs, metric, &out)?;
            println!("wrote {} files to {}", files.len(), out.display());
            Ok(ExitCode::SUCCESS)
        }
        Command::Centroids {
            config,
            variant,
            out,
        } => {
            let cfg = RunConfig::load(&config)?;
            let v = Variant::parse(&variant)?;
            cfg.check_variant(v)?;
            let set = experiment::build_centroids(&cfg, v)?;
            set.write_binary(&out)?;
            println!(
                "{} centroids of dimension {} -> {}",
                set.k(),
                set.dim(),
                out.display()
            );
            Ok(ExitCode::SUCCESS)
        }
    }
}

fn fmt(v: Option<f64>) -> String {
    v.map_or_else(|| "-".to_string(), |x| format!("{x:.4}"))
}

fn print_report(report: &SuiteReport, task: TaskKind) {
    println!(
        "{:<12} {:<10} {:>4} {:>12} {:>12} {:>12}",
        "variant", "metric", "n", "median", "q1", "q3"
    );
    for s in &report.stats {
        println!(
            "{:<12} {:<10} {:>4} {:>12.5} {:>12.5} {:>12.5}",
            s.variant.name(),
            s.metric.name(),
            s.n,
            s.median,
            s.q1,
            s.q3
        );
    }
    for r in report.failures() {
        println!(
            "FAILED {} seed {}: {}",
            r.variant,
            r.seed,
            r.error.as_deref().unwrap_or("")
        );
    }
    let (metric, sep) = match task {
        TaskKind::Ballistic => (Metric::Klc, " < "),
        TaskKind::Airhockey => (Metric::Diversity, " > "),
    };
    let mut order = report.ordering(metric);
    if task == TaskKind::Airhockey {
        order.reverse();
    }
    let names: Vec<String> = order.iter().map(|(v, m)| format!("{v} ({m:.4})")).collect();
    if !names.is_empty() {
        println!("median final {metric}: {}", names.join(sep));
    }
}
