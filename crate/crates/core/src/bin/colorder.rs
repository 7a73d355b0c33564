use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use causal_colorder::pipeline::{run_stage, PipelineConfig, Stage};
use causal_colorder::{Error, ErrorClass};

#[derive(Parser)]
#[command(name = "colorder", version, about = "Causal column ordering and reweighting for tabular anomaly detection")]
struct Cli {
    #[command(subcommand)]
    command: Command,

    /// TOML pipeline config; flags below override its values.
    #[arg(long, short, global = true)]
    config: Option<PathBuf>,

    /// Seed for the train/test split and every other random step.
    #[arg(long, global = true)]
    seed: Option<u64>,

    /// Worker thread cap.
    #[arg(long, global = true)]
    threads: Option<usize>,

    #[command(flatten)]
    overrides: Overrides,
}

#[derive(Subcommand, Clone, Copy)]
enum Command {
    /// Learn a factor graph with PC and write it as JSON.
    Discover,
    /// Project the factor graph onto a column preference matrix.
    Project,
    /// Solve the ordering problem and write the top-k orderings.
    Order,
    /// Fit the surrogate column scorer on the training rows.
    Fit,
    /// Score rows (surrogate, or external NLLs when configured).
    Score,
    /// Export serialized sequences for an external scorer.
    Export,
    /// Run the ordering x weighting comparison grid.
    Eval,
    /// discover, project, order, fit, score, eval.
    Pipeline,
}

#[derive(Args)]
struct Overrides {
    #[arg(long, global = true)]
    table: Option<PathBuf>,
    #[arg(long, global = true)]
    schema: Option<PathBuf>,
    #[arg(long, global = true)]
    labels: Option<PathBuf>,
    #[arg(long, global = true)]
    label_column: Option<String>,
    #[arg(long, global = true)]
    factor_defs: Option<PathBuf>,
    #[arg(long, global = true)]
    factor_values: Option<PathBuf>,
    #[arg(long, global = true)]
    graph: Option<PathBuf>,
    #[arg(long, global = true)]
    preference: Option<PathBuf>,
    #[arg(long, global = true)]
    orderings: Option<PathBuf>,
    #[arg(long, global = true)]
    scorer: Option<PathBuf>,
    #[arg(long, global = true)]
    scores: Option<PathBuf>,
    #[arg(long, global = true)]
    breakdown: Option<PathBuf>,
    #[arg(long, global = true)]
    sequences: Option<PathBuf>,
    #[arg(long, global = true)]
    external_nll: Option<PathBuf>,
    #[arg(long, global = true)]
    report: Option<PathBuf>,
    #[arg(long, global = true)]
    report_table: Option<PathBuf>,
    #[arg(long, global = true)]
    delimiter: Option<char>,
    #[arg(long, global = true)]
    no_header: bool,
    #[arg(long, global = true)]
    alpha: Option<f64>,
    #[arg(long, global = true)]
    max_cond: Option<usize>,
    #[arg(long, short, global = true)]
    k: Option<usize>,
    #[arg(long, global = true)]
    threshold_ratio: Option<f64>,
    #[arg(long, global = true)]
    solution_cap: Option<usize>,
    #[arg(long, global = true)]
    bins: Option<usize>,
    #[arg(long, global = true)]
    smoothing: Option<f64>,
    #[arg(long, global = true, value_delimiter = ',')]
    seeds: Option<Vec<u64>>,
    #[arg(long, global = true)]
    train_fraction: Option<f64>,
}

fn set<T>(slot: &mut T, value: Option<T>) {
    if let Some(v) = value {
        *slot = v;
    }
}

fn set_opt<T>(slot: &mut Option<T>, value: Option<T>) {
    if value.is_some() {
        *slot = value;
    }
}

impl Overrides {
    fn apply(self, c: &mut PipelineConfig) {
        let p = &mut c.paths;
        set_opt(&mut p.table, self.table);
        set_opt(&mut p.schema, self.schema);
        set_opt(&mut p.labels, self.labels);
        set_opt(&mut p.label_column, self.label_column);
        set_opt(&mut p.factor_defs, self.factor_defs);
        set_opt(&mut p.factor_values, self.factor_values);
        set_opt(&mut p.graph, self.graph);
        set_opt(&mut p.preference, self.preference);
        set_opt(&mut p.orderings, self.orderings);
        set_opt(&mut p.scorer, self.scorer);
        set_opt(&mut p.scores, self.scores);
        set_opt(&mut p.breakdown, self.breakdown);
        set_opt(&mut p.sequences, self.sequences);
        set_opt(&mut p.external_nll, self.external_nll);
        set_opt(&mut p.report, self.report);
        set_opt(&mut p.report_table, self.report_table);
        set(&mut c.input.delimiter, self.delimiter);
        if self.no_header {
            c.input.header = false;
        }
        set(&mut c.discovery.alpha, self.alpha);
        set(&mut c.discovery.max_cond, self.max_cond);
        set(&mut c.ordering.k, self.k);
        set(&mut c.ordering.threshold_ratio, self.threshold_ratio);
        set(&mut c.ordering.solution_cap, self.solution_cap);
        set(&mut c.scorer.bins, self.bins);
        set(&mut c.scorer.smoothing, self.smoothing);
        set_opt(&mut c.eval.seeds, self.seeds);
        set(&mut c.eval.train_fraction, self.train_fraction);
    }
}

fn run(cli: Cli) -> Result<(), Error> {
    let mut config = match &cli.config {
        Some(path) => PipelineConfig::load(path)?,
        None => PipelineConfig::default(),
    };
    set(&mut config.seed, cli.seed);
    cli.overrides.apply(&mut config);

    if let Some(n) = cli.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| Error::Internal(e.to_string()))?;
    }

    let stage = match cli.command {
        Command::Discover => Stage::Discover,
        Command::Project => Stage::Project,
        Command::Order => Stage::Order,
        Command::Fit => Stage::Fit,
        Command::Score => Stage::Score,
        Command::Export => Stage::Export,
        Command::Eval => Stage::Eval,
        Command::Pipeline => Stage::Pipeline,
    };
    for summary in run_stage(stage, &config)? {
        println!("{:?}: {} ({})", summary.stage, summary.artifact.display(), summary.detail);
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            let code = match e.class() {
                ErrorClass::Usage => 2,
                ErrorClass::Data => 3,
                ErrorClass::Resource => 4,
                ErrorClass::Internal => 1,
            };
            ExitCode::from(code)
        }
    }
}
