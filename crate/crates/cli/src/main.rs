use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use labelsphere::PmiMode;

mod commands;
mod config;

use config::{PipelineConfig, Solver};

#[derive(Parser)]
#[command(name = "labelsphere", version, about = "PMI label embeddings: build, query, evaluate, train")]
struct Cli {
    #[command(flatten)]
    overrides: Overrides,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Overrides {
    /// TOML run manifest; flags take precedence over its values.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Write the effective configuration to this path before running.
    #[arg(long, global = true)]
    save_config: Option<PathBuf>,
    #[arg(long, global = true)]
    annotations: Option<PathBuf>,
    #[arg(long, global = true)]
    vocab: Option<PathBuf>,
    #[arg(long, global = true)]
    embeddings: Option<PathBuf>,
    #[arg(long, global = true)]
    weights: Option<PathBuf>,
    #[arg(long, global = true)]
    k: Option<usize>,
    #[arg(long, global = true)]
    min_count: Option<u64>,
    #[arg(long, global = true, value_parser = parse_mode)]
    pmi_mode: Option<PmiMode>,
    #[arg(long, global = true)]
    alpha: Option<f64>,
    #[arg(long, global = true)]
    zero_diagonal: bool,
    #[arg(long, global = true, value_enum)]
    solver: Option<Solver>,
    #[arg(long, global = true)]
    p: Option<usize>,
    #[arg(long, global = true)]
    cap_min: Option<f64>,
    #[arg(long, global = true)]
    cap_max: Option<f64>,
    #[arg(long, global = true)]
    seed: Option<u64>,
}

fn parse_mode(s: &str) -> Result<PmiMode, String> {
    s.parse().map_err(|e: labelsphere::Error| e.to_string())
}

#[derive(Subcommand)]
enum Command {
    /// Build the vocabulary and label embedding from an annotation file.
    Build,
    /// Rank labels by cosine proximity to a query.
    Query {
        #[arg(long, value_enum, default_value_t = QueryMode::Nearest)]
        mode: QueryMode,
        /// Query label; repeat for label sets.
        #[arg(long = "label", required = true)]
        labels: Vec<String>,
        /// Subtracted label in arithmetic mode; repeatable.
        #[arg(long)]
        minus: Vec<String>,
    },
    /// Class-weighted MAP@100 of ranked predictions against ground truth.
    Eval {
        #[arg(long)]
        predictions: PathBuf,
        #[arg(long)]
        truth: PathBuf,
        /// Weight scale; defaults to the number of classes.
        #[arg(long)]
        weight_scale: Option<f64>,
    },
    /// Insert a new class into an existing embedding from its annotations.
    ZeroShot {
        /// Label whose co-occurrences define the new class.
        #[arg(long)]
        label: String,
        /// Name for the inserted row; required when `--label` already exists.
        #[arg(long = "as")]
        name: Option<String>,
        #[arg(long)]
        output: PathBuf,
    },
    /// Train cosine-regression and logistic arms on a synthetic clustered task.
    TrainDemo {
        #[arg(long)]
        out_dir: PathBuf,
        #[arg(long)]
        steps: Option<usize>,
    },
    /// Corpus and PMI statistics for an annotation file.
    Stats,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum QueryMode {
    Nearest,
    EncodeDecode,
    Arithmetic,
}

impl Overrides {
    fn resolve(&self) -> anyhow::Result<PipelineConfig> {
        let mut c = match &self.config {
            Some(path) => PipelineConfig::load(path)?,
            None => PipelineConfig::default(),
        };
        macro_rules! set {
            ($($field:ident),*) => {
                $(if let Some(v) = &self.$field { c.$field = v.clone(); })*
            };
        }
        set!(min_count, pmi_mode, alpha, solver, p, cap_min, cap_max, seed);
        macro_rules! set_opt {
            ($($field:ident),*) => {
                $(if self.$field.is_some() { c.$field = self.$field.clone(); })*
            };
        }
        set_opt!(annotations, vocab, embeddings, weights, k);
        if self.zero_diagonal {
            c.zero_diagonal = true;
        }
        c.validate()?;
        Ok(c)
    }
}

fn run(cli: Cli) -> anyhow::Result<()> {
    let mut config = cli.overrides.resolve()?;
    if let Command::TrainDemo { steps: Some(s), .. } = &cli.command {
        config.demo.steps = *s;
    }
    if let Some(path) = &cli.overrides.save_config {
        std::fs::write(path, config.to_toml()?)?;
    }
    let mut out = std::io::stdout().lock();
    match cli.command {
        Command::Build => commands::build(&config, &mut out),
        Command::Query { mode, labels, minus } => {
            let mode = match mode {
                QueryMode::Nearest => commands::Query::Nearest,
                QueryMode::EncodeDecode => commands::Query::EncodeDecode,
                QueryMode::Arithmetic => commands::Query::Arithmetic,
            };
            commands::query(&config, mode, &labels, &minus, &mut out)
        }
        Command::Eval {
            predictions,
            truth,
            weight_scale,
        } => commands::eval(&config, &predictions, &truth, weight_scale, &mut out),
        Command::ZeroShot { label, name, output } => commands::zero_shot(&config, &label, name.as_deref(), &output, &mut out),
        Command::TrainDemo { out_dir, .. } => commands::train_demo(&config, &out_dir, &mut out),
        Command::Stats => commands::stats(&config, &mut out),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err:#}");
            match err.downcast_ref::<labelsphere::Error>() {
                Some(e) if e.is_argument() => ExitCode::from(2),
                _ => ExitCode::FAILURE,
            }
        }
    }
}
