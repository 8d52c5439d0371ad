use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use distill_lab::error::{Error, Result};
use distill_lab::expcli::{
    emit, run, ExperimentConfig, ExperimentResult, LowerBoundConfig, Pipeline, SweepConfig, Tolerances,
};
use distill_lab::parallel::configure_threads;

#[derive(Parser)]
#[command(name = "distill-lab", version, about = "Certify samplers, teachers and distillation pipelines on synthetic noisy distributions")]
struct Cli {
    /// Worker threads (capped by DISTILL_LAB_THREADS). Never changes results.
    #[arg(long, global = true)]
    threads: Option<usize>,

    /// Print progress and a summary on stderr.
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    verbose: u8,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the pipeline described by a JSON config.
    Run {
        config: PathBuf,
        /// Override the config's seed.
        #[arg(long)]
        seed: Option<u64>,
        /// Output directory (defaults to the config's output_path, then ".").
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Sweep the teacher count for the config's ensemble / EPL / RPL pipeline.
    Sweep {
        config: PathBuf,
        /// Comma-separated teacher counts; overrides the config's sweep section.
        #[arg(long, value_delimiter = ',')]
        k: Option<Vec<usize>>,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Exact expected error of the majority rule on the two single-atom
    /// distributions with γ = sqrt(ln(4/3)/2M).
    LowerBound {
        #[arg(long = "big-m")]
        big_m: usize,
        /// Comma-separated sample sizes.
        #[arg(long, value_delimiter = ',', required = true)]
        m: Vec<usize>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Pretty-print a result.json.
    Show { result: PathBuf },
}

fn sweep_config(mut config: ExperimentConfig, k: Option<Vec<usize>>) -> Result<ExperimentConfig> {
    let inner = match (&config.sweep, config.pipeline) {
        (Some(s), _) => s.inner,
        (None, p @ (Pipeline::EnsembleInfer | Pipeline::Epl | Pipeline::Rpl)) => p,
        (None, p) => return Err(Error::Config(format!("cannot sweep teachers of a {p:?} pipeline"))),
    };
    let k_values = match (k, &config.sweep) {
        (Some(k), _) => k,
        (None, Some(s)) => s.k_values.clone(),
        (None, None) => return Err(Error::Config("no k values: pass --k or add a sweep section".into())),
    };
    config.pipeline = Pipeline::SweepTeachers;
    config.sweep = Some(SweepConfig { k_values, inner });
    config.validate()?;
    Ok(config)
}

fn output_dir(out: Option<PathBuf>, config: &ExperimentConfig) -> PathBuf {
    out.or_else(|| config.output_path.clone()).unwrap_or_else(|| PathBuf::from("."))
}

fn execute(config: ExperimentConfig, out: Option<PathBuf>, verbose: u8) -> Result<i32> {
    let dir = output_dir(out, &config);
    if verbose > 0 {
        eprintln!("running {:?} with seed {}", config.pipeline, config.seed);
    }
    let result = run(&config)?;
    let written = emit(&result, &dir)?;
    if verbose > 0 {
        summarize(&result);
        for p in &written {
            eprintln!("wrote {}", p.display());
        }
        eprintln!("wall time {:.2?}", result.wall_time);
    }
    Ok(result.exit_code())
}

fn summarize(result: &ExperimentResult) {
    for c in &result.certificates {
        eprintln!("{:?} certificate: {}", c.kind, c.verdict);
    }
    for (name, v) in &result.losses {
        eprintln!("  {name} = {v:.6}");
    }
}

fn show(path: &Path) -> Result<()> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::Io { path: path.into(), source: e })?;
    let value: serde_json::Value = serde_json::from_str(&text)?;
    if let Some(certs) = value["certificates"].as_array() {
        for c in certs {
            println!("{} certificate: {}", c["kind"].as_str().unwrap_or("?"), c["verdict"].as_str().unwrap_or("?"));
            if let Some(stats) = c["statistics"].as_object() {
                for (k, v) in stats {
                    println!("  {k:<24} {v}");
                }
            }
        }
    }
    if let Some(losses) = value["losses"].as_object() {
        println!("losses:");
        for (k, v) in losses {
            println!("  {k:<28} {v}");
        }
    }
    if let Some(rows) = value["sweep_rows"].as_array().filter(|r| !r.is_empty()) {
        println!("{:>6}  {:>12}  {:>10}", "k", "mean loss", "± ci");
        for r in rows {
            println!(
                "{:>6}  {:>12.6}  {:>10.6}",
                r["k"],
                r["mean_clean_loss"].as_f64().unwrap_or(f64::NAN),
                r["ci_halfwidth"].as_f64().unwrap_or(f64::NAN)
            );
        }
    }
    if let Some(rows) = value["lower_bound_rows"].as_array().filter(|r| !r.is_empty()) {
        println!("{:>6}  {:>12}", "m", "error");
        for r in rows {
            println!("{:>6}  {:>12.6}", r["m"], r["expected_error"].as_f64().unwrap_or(f64::NAN));
        }
    }
    if let Some(conf) = value["confusion"]["matrix"].as_array() {
        println!("confusion (Bayes label → prediction):");
        for row in conf {
            let cells: Vec<String> = row
                .as_array()
                .into_iter()
                .flatten()
                .map(|v| format!("{:.4}", v.as_f64().unwrap_or(f64::NAN)))
                .collect();
            println!("  {}", cells.join("  "));
        }
    }
    Ok(())
}

fn main_inner(cli: Cli) -> Result<i32> {
    let threads = configure_threads(cli.threads);
    if cli.verbose > 1 {
        eprintln!("{threads} worker threads");
    }
    match cli.command {
        Command::Run { config, seed, out } => {
            let mut config = ExperimentConfig::load(&config)?;
            if let Some(s) = seed {
                config.seed = s;
            }
            execute(config, out, cli.verbose)
        }
        Command::Sweep { config, k, seed, out } => {
            let mut config = ExperimentConfig::load(&config)?;
            if let Some(s) = seed {
                config.seed = s;
            }
            execute(sweep_config(config, k)?, out, cli.verbose)
        }
        Command::LowerBound { big_m, m, out } => {
            let config = ExperimentConfig {
                seed: 0,
                distribution: None,
                teacher: None,
                student: None,
                pipeline: Pipeline::LowerBound,
                trials: 1,
                tolerances: Tolerances::default(),
                output_path: None,
                sweep: None,
                lower_bound: Some(LowerBoundConfig { big_m, m_values: m }),
            };
            config.validate()?;
            execute(config, out, cli.verbose)
        }
        Command::Show { result } => show(&result).map(|_| 0),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match main_inner(cli) {
        Ok(code) => ExitCode::from(code as u8),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
