//! Command-line front end for the staged pipeline.

use std::ffi::OsString;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use rfclust::config::AlgorithmSpec;
use rfclust::ela::Sampler;
use rfclust::report::Format;
use rfclust::suite::SUITE_NAMES;
use rfclust::{io, pipeline, ExperimentConfig};

pub const EXIT_OK: i32 = 0;
pub const EXIT_RUNTIME: i32 = 1;
pub const EXIT_USAGE: i32 = 2;

#[derive(Debug, Parser)]
#[command(
    name = "rfclust",
    version,
    about = "Leave-one-problem-out performance prediction with similarity calibration"
)]
pub struct Cli {
    /// JSON configuration; its fields take precedence over flags.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,

    /// Worker threads (defaults to all cores).
    #[arg(long, global = true)]
    pub jobs: Option<usize>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Benchmark suite inspection.
    Suite {
        #[command(subcommand)]
        action: SuiteAction,
    },
    /// Run the DE configurations on every suite instance.
    Optimize {
        #[command(flatten)]
        common: CommonArgs,
        /// Algorithm presets (de1, de2, de3).
        #[arg(long, value_delimiter = ',')]
        algs: Option<Vec<String>>,
        #[arg(long)]
        runs: Option<usize>,
        #[arg(long)]
        budget_factor: Option<usize>,
        /// Output directory, or the aggregate CSV path (per-run rows go to `<stem>_runs.csv`).
        #[arg(long, default_value = ".")]
        out: PathBuf,
    },
    /// Compute landscape features for every suite instance.
    Features {
        #[command(flatten)]
        common: CommonArgs,
        #[arg(long)]
        sample_factor: Option<usize>,
        #[arg(long, alias = "reps")]
        repetitions: Option<usize>,
        #[arg(long, value_enum)]
        sampler: Option<SamplerArg>,
        /// Output directory or CSV path.
        #[arg(long, default_value = ".")]
        out: PathBuf,
    },
    /// LOPO comparison of the forest and its calibrated variant.
    Experiment {
        #[command(flatten)]
        common: CommonArgs,
        #[arg(long, default_value = pipeline::PERFORMANCE_FILE)]
        performance: PathBuf,
        #[arg(long, default_value = pipeline::FEATURES_FILE)]
        features: PathBuf,
        #[arg(long, value_delimiter = ',')]
        thresholds: Option<Vec<f64>>,
        #[arg(long, value_delimiter = ',')]
        portfolios: Option<Vec<usize>>,
        #[arg(long, default_value = ".")]
        out: PathBuf,
    },
    /// All stages in sequence.
    Run {
        #[command(flatten)]
        common: CommonArgs,
        #[arg(long, default_value = ".")]
        out: PathBuf,
    },
    /// Pairwise similarity and performance gap for one held-out class.
    Diagnose {
        #[command(flatten)]
        common: CommonArgs,
        #[arg(long, default_value = pipeline::PERFORMANCE_FILE)]
        performance: PathBuf,
        #[arg(long, default_value = pipeline::FEATURES_FILE)]
        features: PathBuf,
        #[arg(long)]
        algorithm: String,
        #[arg(long = "class")]
        class_id: u32,
        /// Importance ranking written by `experiment`.
        #[arg(long, requires = "top")]
        importance: Option<PathBuf>,
        #[arg(long, requires = "importance")]
        top: Option<usize>,
        /// Output file; stdout when absent.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Re-render tables from a stored bundle.
    Report {
        #[arg(long, default_value = "bundle.json")]
        bundle: PathBuf,
        #[arg(long, value_enum, default_value = "csv")]
        format: FormatArg,
        #[arg(long, default_value = ".")]
        out: PathBuf,
    },
}

#[derive(Debug, Subcommand)]
pub enum SuiteAction {
    /// Print the problem classes of a suite as CSV.
    List {
        #[arg(long, default_value = SUITE_NAMES[1], value_parser = clap::builder::PossibleValuesParser::new(SUITE_NAMES))]
        name: String,
        #[arg(long)]
        dimension: Option<usize>,
        #[arg(long, value_enum, default_value = "csv")]
        format: CatalogFormat,
    },
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum CatalogFormat {
    Csv,
}

#[derive(Debug, Args)]
pub struct CommonArgs {
    #[arg(long, value_parser = clap::builder::PossibleValuesParser::new(SUITE_NAMES))]
    pub suite: Option<String>,
    #[arg(long)]
    pub dimension: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum SamplerArg {
    Lhs,
    ImprovedLhs,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum FormatArg {
    Csv,
    Markdown,
}

fn apply_common(cfg: &mut ExperimentConfig, c: &CommonArgs) {
    if let Some(s) = &c.suite {
        cfg.suite = s.clone();
    }
    if let Some(d) = c.dimension {
        cfg.dimension = d;
    }
    if let Some(s) = c.seed {
        cfg.master_seed = s;
    }
}

/// Flag-built configuration with the fields of the config file laid over it.
fn merge_config(file: Option<&Path>, flags: ExperimentConfig) -> Result<ExperimentConfig> {
    Ok(match file {
        None => flags,
        Some(path) => {
            let text = io::read_text(path)?;
            let overlay: serde_json::Value = serde_json::from_str(&text).with_context(|| format!("{}: invalid JSON", path.display()))?;
            let serde_json::Value::Object(fields) = overlay else {
                anyhow::bail!("{}: configuration must be a JSON object", path.display());
            };
            let mut merged = serde_json::to_value(&flags)?;
            let target = merged.as_object_mut().expect("config serialises to an object");
            for (k, v) in fields {
                target.insert(k, v);
            }
            serde_json::from_value(merged).with_context(|| format!("{}: invalid configuration", path.display()))?
        }
    })
}

fn resolve_config(file: Option<&Path>, flags: ExperimentConfig) -> Result<ExperimentConfig> {
    let cfg = merge_config(file, flags)?;
    cfg.validate()?;
    Ok(cfg)
}

fn is_csv(path: &Path) -> bool {
    path.extension().is_some_and(|e| e.eq_ignore_ascii_case("csv"))
}

fn print_paths(paths: &[PathBuf]) {
    for p in paths {
        println!("{}", p.display());
    }
}

fn dispatch(cli: Cli) -> Result<()> {
    let mut cfg = ExperimentConfig::default();
    match cli.command {
        Command::Suite {
            action: SuiteAction::List { name, dimension, .. },
        } => {
            cfg.suite = name;
            if let Some(d) = dimension {
                cfg.dimension = d;
            }
            let cfg = merge_config(cli.config.as_deref(), cfg)?;
            print!("{}", pipeline::catalog(&cfg)?);
        }
        Command::Optimize {
            common,
            algs,
            runs,
            budget_factor,
            out,
        } => {
            apply_common(&mut cfg, &common);
            if let Some(ids) = algs {
                cfg.algorithms = ids.iter().map(|id| AlgorithmSpec::preset(id)).collect::<rfclust::Result<_>>()?;
            }
            if let Some(r) = runs {
                cfg.runs = r;
            }
            if let Some(b) = budget_factor {
                cfg.budget_factor = b;
            }
            let cfg = resolve_config(cli.config.as_deref(), cfg)?;
            let paths = if is_csv(&out) {
                let mut runs = out.clone();
                runs.set_file_name(format!("{}_runs.csv", out.file_stem().unwrap_or_default().to_string_lossy()));
                pipeline::optimize_files(&cfg, &out, &runs)?
            } else {
                pipeline::optimize_to(&cfg, &out)?
            };
            print_paths(&paths);
        }
        Command::Features {
            common,
            sample_factor,
            repetitions,
            sampler,
            out,
        } => {
            apply_common(&mut cfg, &common);
            if let Some(s) = sample_factor {
                cfg.sample_factor = s;
            }
            if let Some(r) = repetitions {
                cfg.repetitions = r;
            }
            if let Some(s) = sampler {
                cfg.sampler = match s {
                    SamplerArg::Lhs => Sampler::Lhs,
                    SamplerArg::ImprovedLhs => Sampler::ImprovedLhs,
                };
            }
            let cfg = resolve_config(cli.config.as_deref(), cfg)?;
            let path = if is_csv(&out) {
                pipeline::features_file(&cfg, &out)?
            } else {
                pipeline::features_to(&cfg, &out)?
            };
            print_paths(&[path]);
        }
        Command::Experiment {
            common,
            performance,
            features,
            thresholds,
            portfolios,
            out,
        } => {
            apply_common(&mut cfg, &common);
            if let Some(t) = thresholds {
                cfg.thresholds = t;
            }
            if let Some(p) = portfolios {
                cfg.portfolios = p;
            }
            let cfg = resolve_config(cli.config.as_deref(), cfg)?;
            print_paths(&pipeline::experiment_to(&cfg, &performance, &features, &out)?);
        }
        Command::Run { common, out } => {
            apply_common(&mut cfg, &common);
            let cfg = resolve_config(cli.config.as_deref(), cfg)?;
            print_paths(&pipeline::run_all(&cfg, &out)?);
        }
        Command::Diagnose {
            common,
            performance,
            features,
            algorithm,
            class_id,
            importance,
            top,
            out,
        } => {
            apply_common(&mut cfg, &common);
            let cfg = resolve_config(cli.config.as_deref(), cfg)?;
            let ranking = importance.as_deref().zip(top);
            let pairs = pipeline::diagnose(&cfg, &performance, &features, &algorithm, class_id, ranking)?;
            let text = pipeline::diagnostics_csv(&pairs, cfg.master_seed)?;
            match out {
                Some(p) => {
                    io::write_text(&p, &text)?;
                    print_paths(&[p]);
                }
                None => print!("{text}"),
            }
        }
        Command::Report { bundle, format, out } => {
            let format = match format {
                FormatArg::Csv => Format::Csv,
                FormatArg::Markdown => Format::Markdown,
            };
            print_paths(&pipeline::report_to(&bundle, format, &out)?);
        }
    }
    Ok(())
}

/// Parses `args` (program name first) and runs the command.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let _ = env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).try_init();
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
        }
    };
    let mut pool = rayon::ThreadPoolBuilder::new();
    if let Some(n) = cli.jobs {
        if n == 0 {
            eprintln!("error: --jobs must be at least 1");
            return EXIT_USAGE;
        }
        pool = pool.num_threads(n);
    }
    let pool = match pool.build() {
        Ok(p) => p,
        Err(e) => {
            eprintln!("error: {e}");
            return EXIT_RUNTIME;
        }
    };
    match pool.install(|| dispatch(cli)) {
        Ok(()) => EXIT_OK,
        Err(e) => {
            eprintln!("error: {e:#}");
            EXIT_RUNTIME
        }
    }
}
