use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

use taxoforge::corpus::Corpus;
use taxoforge::eval::{coherence_proxy, relation_f1, sibling_distinctiveness, AncestorPairSet, MetricReport, PairMode, SynonymMap};
use taxoforge::pipeline::{self, RunConfig, Stage};
use taxoforge::synthetic::{self, SyntheticConfig};
use taxoforge::taxonomy::Taxonomy;
use taxoforge::Error;

const EXIT_CONFIG: u8 = 2;
const EXIT_STAGE: u8 = 3;

/// Seed-guided topical taxonomy construction.
#[derive(Parser)]
#[command(name = "taxoforge", version, about)]
struct Cli {
    /// Log verbosity (-v info, -vv debug).
    #[arg(short, long, action = clap::ArgAction::Count, global = true)]
    verbose: u8,
    #[command(subcommand)]
    command: Cmd,
}

#[derive(clap::Args)]
struct ConfigArg {
    /// Run configuration (TOML).
    #[arg(short, long)]
    config: PathBuf,
}

#[derive(Clone, Copy, ValueEnum)]
enum Mode {
    Transitive,
    Direct,
}

#[derive(Clone, Copy, ValueEnum)]
enum Backend {
    Oracle,
    Heuristic,
}

#[derive(Subcommand)]
enum Cmd {
    /// Ingest the corpus and check the seed against its vocabulary.
    Ingest(ConfigArg),
    /// Build the relation training set from the seed.
    BuildRelset(ConfigArg),
    /// Train the external relation model (remote backend only).
    TrainScorer(ConfigArg),
    /// Find common roots of the seed topics.
    DiscoverRoots(ConfigArg),
    /// Attach first-layer topics under the root.
    Expand(ConfigArg),
    /// Extract subtopic candidates and train the joint embedding.
    TrainEmbed(ConfigArg),
    /// Build Topic-Type matrices, co-cluster and attach subtopics.
    Cluster(ConfigArg),
    /// Write the topical taxonomy export.
    Export(ConfigArg),
    /// Full pipeline.
    Run(ConfigArg),
    /// Score a taxonomy against gold ancestor pairs.
    Evaluate {
        /// Taxonomy JSON or edge list.
        #[arg(long)]
        taxonomy: PathBuf,
        /// Gold pairs, `ancestor<TAB>descendant` per line.
        #[arg(long)]
        gold: PathBuf,
        /// Synonym map, `alias<TAB>canonical` per line.
        #[arg(long)]
        synonyms: Option<PathBuf>,
        #[arg(long, value_enum, default_value = "transitive")]
        mode: Mode,
        /// Corpus for the NPMI coherence proxy.
        #[arg(long)]
        corpus: Option<PathBuf>,
        #[arg(long, default_value_t = 10)]
        top_k: usize,
    },
    /// Write the planted synthetic workspace (corpus, seed, oracle, gold, config).
    Synth {
        #[arg(long)]
        out: PathBuf,
        #[arg(long, value_enum, default_value = "oracle")]
        backend: Backend,
        #[arg(long, default_value_t = 7)]
        seed: u64,
    },
}

fn exit_code(e: &Error) -> u8 {
    match e {
        Error::Config(_) => EXIT_CONFIG,
        _ => EXIT_STAGE,
    }
}

fn stage_command(config: &Path, stage: Stage) -> Result<(), Error> {
    let cfg = RunConfig::load(config)?;
    let out = pipeline::run_until(&cfg, stage)?;
    print!("{}", out.report.to_text());
    Ok(())
}

fn read(path: &Path) -> Result<String, Error> {
    std::fs::read_to_string(path).map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let level = match cli.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();

    let result = match cli.command {
        Cmd::Ingest(a) => stage_command(&a.config, Stage::Ingest),
        Cmd::BuildRelset(a) => stage_command(&a.config, Stage::BuildRelset),
        Cmd::TrainScorer(a) => stage_command(&a.config, Stage::TrainScorer),
        Cmd::DiscoverRoots(a) => stage_command(&a.config, Stage::DiscoverRoots),
        Cmd::Expand(a) => stage_command(&a.config, Stage::Expand),
        Cmd::TrainEmbed(a) => stage_command(&a.config, Stage::TrainEmbed),
        Cmd::Cluster(a) => stage_command(&a.config, Stage::Cluster),
        Cmd::Export(a) | Cmd::Run(a) => stage_command(&a.config, Stage::Export),
        Cmd::Evaluate {
            taxonomy,
            gold,
            synonyms,
            mode,
            corpus,
            top_k,
        } => evaluate(&taxonomy, &gold, synonyms.as_deref(), mode, corpus.as_deref(), top_k),
        Cmd::Synth { out, backend, seed } => synth(&out, backend, seed),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}

fn evaluate(
    taxonomy: &Path,
    gold: &Path,
    synonyms: Option<&Path>,
    mode: Mode,
    corpus: Option<&Path>,
    top_k: usize,
) -> Result<(), Error> {
    let tax_text = read(taxonomy)?;
    let gold_text = read(gold)?;
    let syn = match synonyms {
        Some(p) => SynonymMap::parse(&read(p)?)?,
        None => SynonymMap::default(),
    };
    let corpus_text = corpus.map(read).transpose()?;
    let tax = Taxonomy::load(tax_text.as_bytes())?;
    let mode = match mode {
        Mode::Transitive => PairMode::Transitive,
        Mode::Direct => PairMode::Direct,
    };
    let pred = AncestorPairSet::from_taxonomy(&tax, mode, &syn);
    let gold = AncestorPairSet::parse(&gold_text, &syn)?;
    let coherence = match corpus_text {
        Some(text) => Some(coherence_proxy(&tax, &Corpus::ingest_str(&text, 1)?, top_k)),
        None => None,
    };
    let report = MetricReport {
        f1: Some(relation_f1(&pred, &gold)?),
        sibling_distinctiveness: sibling_distinctiveness(&tax, top_k),
        coherence,
    };
    print!("{}", report.to_kv());
    Ok(())
}

fn synth(out: &Path, backend: Backend, seed: u64) -> Result<(), Error> {
    let data = synthetic::generate(&SyntheticConfig {
        seed,
        ..Default::default()
    });
    let name = match backend {
        Backend::Oracle => "oracle",
        Backend::Heuristic => "heuristic",
    };
    let config = pipeline::write_synthetic_workspace(out, &data, name)?;
    println!("{}", config.display());
    Ok(())
}
