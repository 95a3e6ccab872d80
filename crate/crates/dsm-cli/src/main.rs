use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use dsm_cli::config::PipelineConfig;
use dsm_cli::io;
use dsm_cli::pipeline::{self, StageResult};
use dsm_cli::synth::{write_synth, SynthSpec};

/// Document-structure measures, graph datasets, and structure-aware
/// relational GCN training, end to end.
#[derive(Parser)]
#[command(name = "dsm", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct StageArgs {
    /// Pipeline config (JSON); relative paths resolve against its directory.
    #[arg(long)]
    config: PathBuf,
    /// Override the config's output directory.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Override every seed in the config (split and variants).
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Args)]
struct SynthArgs {
    /// Generation spec (JSON); omitted = the built-in benchmark spec.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Directory to generate into.
    #[arg(long)]
    out: PathBuf,
    /// Override the spec's seed.
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Subcommand)]
enum Command {
    /// Validate the corpus and write canonical document forms.
    Parse(StageArgs),
    /// Annotate entity mentions and enrich them with title/heading context.
    Annotate(StageArgs),
    /// Build the structure-aware co-occurrence index.
    Index(StageArgs),
    /// Score both directions of every triple pair.
    Dsm(StageArgs),
    /// Parse the triples file into a typed graph with self-loops.
    BuildGraph(StageArgs),
    /// Assign stratified train/val/test splits.
    Split(StageArgs),
    /// Train every configured variant.
    Train(StageArgs),
    /// Score checkpoints on the test split and write the reports.
    Eval(StageArgs),
    /// Generate a synthetic corpus, triples, ledger, and pipeline config.
    Synth(SynthArgs),
    /// Run the whole pipeline: parse through eval.
    Run(StageArgs),
}

fn load_config(args: &StageArgs) -> StageResult<PipelineConfig> {
    let mut config = PipelineConfig::load(&args.config)?;
    if let Some(out) = &args.out {
        config.output_dir = out.clone();
    }
    if let Some(seed) = args.seed {
        config.override_seed(seed);
    }
    Ok(config)
}

fn run(command: &Command) -> StageResult<()> {
    match command {
        Command::Parse(args) => {
            let config = load_config(args)?;
            let docs = pipeline::stage_parse(&config)?;
            println!(
                "parse: {docs} documents -> {}",
                config.output_dir.join("canonical").display()
            );
        }
        Command::Annotate(args) => {
            let config = load_config(args)?;
            let mentions = pipeline::stage_annotate(&config)?;
            println!("annotate: {mentions} mentions -> mentions.json");
        }
        Command::Index(args) => {
            let config = load_config(args)?;
            pipeline::stage_index(&config)?;
            println!("index: -> index.json");
        }
        Command::Dsm(args) => {
            let config = load_config(args)?;
            let records = pipeline::stage_dsm(&config)?;
            println!("dsm: {records} pair records -> dsm.json");
        }
        Command::BuildGraph(args) => {
            let config = load_config(args)?;
            let stats = pipeline::stage_build_graph(&config)?;
            println!(
                "build-graph: {} nodes, {} relation types -> graph.json",
                stats.nodes, stats.relation_types
            );
        }
        Command::Split(args) => {
            let config = load_config(args)?;
            pipeline::stage_split(&config)?;
            println!("split: seed {} -> graph.json", config.split.seed);
        }
        Command::Train(args) => {
            let config = load_config(args)?;
            for summary in pipeline::stage_train(&config)? {
                println!(
                    "train: {} ({} epochs, best val acc {:.4})",
                    summary.name, summary.epochs, summary.best_val_accuracy
                );
            }
        }
        Command::Eval(args) => {
            let config = load_config(args)?;
            let report = pipeline::stage_eval(&config)?;
            for variant in &report.variants {
                println!(
                    "eval: {} test acc {:.4}",
                    variant.name, variant.test_accuracy
                );
            }
            println!("eval: -> report.csv, classwise.csv, report.json");
        }
        Command::Synth(args) => {
            let spec: SynthSpec = match &args.config {
                Some(path) => io::load_json("synth", path)?,
                None => SynthSpec::default(),
            };
            let spec = match args.seed {
                Some(seed) => SynthSpec { seed, ..spec },
                None => spec,
            };
            let ledger = write_synth(&spec, &args.out)?;
            println!(
                "synth: {} documents, {} triples ({} structural) -> {}",
                spec.n_entities * spec.docs_per_entity,
                ledger.triples.len(),
                ledger.structural_count,
                args.out.display()
            );
        }
        Command::Run(args) => {
            let config = load_config(args)?;
            let report = pipeline::run_pipeline(&config)?;
            for variant in &report.variants {
                println!(
                    "run: {} test acc {:.4}",
                    variant.name, variant.test_accuracy
                );
            }
            println!("run: reports in {}", config.output_dir.display());
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err}");
            ExitCode::FAILURE
        }
    }
}
