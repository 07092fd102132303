use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};

use qdensity::empirical::{BasisChoice, EmpiricalGraph, SequenceDataset};
use qdensity::entailment::{self, CorpusState, Pattern};
use qdensity::fca::{self, ConceptLabels, EigenConceptReport};
use qdensity::io;
use qdensity::mps::{self, MatrixProductState, TrainConfig};
use qdensity::qprob;

#[derive(Parser)]
#[command(name = "qdensity", version, about = "Reduced densities of joint distributions")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Reduced densities, spectra, marginals and entropies of a distribution.
    Reduce(ReduceArgs),
    /// Formal concepts of a relation, optionally against the eigenpairs.
    Concepts(ConceptsArgs),
    /// Loewner-order comparison of two pattern densities in a corpus.
    Entail(EntailArgs),
    /// Matrix product state models of even-parity bitstrings.
    #[command(subcommand)]
    Parity(ParityCommand),
}

#[derive(Args)]
struct ReduceArgs {
    /// Distribution CSV with header `x,y,p`.
    #[arg(long, conflicts_with_all = ["dataset", "cut"], required_unless_present = "dataset")]
    csv: Option<PathBuf>,
    /// Sample file, one sequence per line.
    #[arg(long, requires = "cut")]
    dataset: Option<PathBuf>,
    /// Number of leading positions forming the prefix.
    #[arg(long)]
    cut: Option<usize>,
    /// Basis for dataset input: observed prefixes/suffixes or every string.
    #[arg(long, value_enum, default_value_t = BasisArg::Observed, requires = "dataset")]
    basis: BasisArg,
    /// File listing the X symbols in order, one per line.
    #[arg(long, requires = "csv")]
    x_order: Option<PathBuf>,
    /// File listing the Y symbols in order, one per line.
    #[arg(long, requires = "csv")]
    y_order: Option<PathBuf>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum)]
enum BasisArg {
    Observed,
    Full,
}

#[derive(Args)]
struct ConceptsArgs {
    /// Relation CSV with header `x,y`.
    file: PathBuf,
    #[arg(long)]
    compare_eigen: bool,
    /// Include concepts with an empty extent or intent.
    #[arg(long)]
    all: bool,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct EntailArgs {
    /// Corpus file, one space-separated sentence per line.
    corpus: PathBuf,
    /// Pattern such as `pos3=orange`.
    #[arg(long)]
    pattern: Pattern,
    #[arg(long)]
    against: Pattern,
    /// Compare raw densities instead of trace-normalized ones.
    #[arg(long)]
    unnormalized: bool,
    /// Override the factor applied to the `--against` density.
    #[arg(long)]
    scale: Option<f64>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Subcommand)]
enum ParityCommand {
    /// Train on a draw of even strings (or on a sample file).
    Train(TrainArgs),
    /// Distance to the parity state across fractions and replicas, as CSV.
    Experiment(ExperimentArgs),
    /// Draw strings from a trained model.
    Sample(SampleArgs),
    /// Distance of a trained model to the parity state.
    Eval(EvalArgs),
}

#[derive(Args)]
struct TrainArgs {
    #[arg(long, required_unless_present = "data")]
    n: Option<usize>,
    /// Share of the 2^(n-1) even strings to train on.
    #[arg(long, default_value_t = 1.0)]
    fraction: f64,
    /// Train on this sample file instead of a random draw.
    #[arg(long, conflicts_with = "n")]
    data: Option<PathBuf>,
    #[arg(long, default_value_t = 2)]
    chi: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Model output path (stdout if absent).
    #[arg(long, alias = "model")]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct ExperimentArgs {
    #[arg(long)]
    n: usize,
    #[arg(long, value_delimiter = ',', required = true)]
    fractions: Vec<f64>,
    #[arg(long, default_value_t = 10)]
    replicas: usize,
    #[arg(long, default_value_t = 2)]
    chi: usize,
    /// Base seed; replica r uses seed + r.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct SampleArgs {
    #[arg(long)]
    model: PathBuf,
    #[arg(long)]
    count: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct EvalArgs {
    #[arg(long)]
    model: PathBuf,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Serialize, Deserialize)]
struct ConceptsOutput {
    x_labels: Vec<String>,
    y_labels: Vec<String>,
    concepts: Vec<ConceptLabels>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    comparison: Option<EigenConceptReport>,
}

#[derive(Debug, Serialize, Deserialize)]
struct EvalOutput {
    n: usize,
    norm_squared: f64,
    bhattacharyya: f64,
    /// Born mass on odd-parity strings, when the chain is small enough to enumerate.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    odd_mass: Option<f64>,
}

fn read(path: &Path) -> Result<String> {
    fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))
}

fn emit(out: Option<&Path>, text: &str) -> Result<()> {
    match out {
        Some(p) => fs::write(p, text).with_context(|| format!("writing {}", p.display())),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn reduce(a: &ReduceArgs) -> Result<()> {
    let pi = match (&a.csv, &a.dataset) {
        (Some(csv), _) => {
            let x = a.x_order.as_deref().map(|p| read(p).and_then(|t| Ok(io::parse_ordering(&t)?))).transpose()?;
            let y = a.y_order.as_deref().map(|p| read(p).and_then(|t| Ok(io::parse_ordering(&t)?))).transpose()?;
            io::parse_distribution_csv(&read(csv)?, x.as_ref(), y.as_ref())
                .with_context(|| format!("in {}", csv.display()))?
        }
        (None, Some(path)) => {
            let ds = SequenceDataset::parse(&read(path)?).with_context(|| format!("in {}", path.display()))?;
            let basis = match a.basis {
                BasisArg::Observed => BasisChoice::Observed,
                BasisArg::Full => BasisChoice::Full,
            };
            let cut = a.cut.expect("clap requires --cut with --dataset");
            EmpiricalGraph::from_dataset(&ds, cut, basis)?.to_distribution()?
        }
        (None, None) => bail!("one of --csv or --dataset is required"),
    };
    emit(a.out.as_deref(), &io::to_json(&qprob::reduce(&pi)?)?)
}

fn concepts(a: &ConceptsArgs) -> Result<()> {
    let r = io::parse_relation_csv(&read(&a.file)?).with_context(|| format!("in {}", a.file.display()))?;
    let list = if a.all {
        fca::formal_concepts(&r)?
    } else {
        fca::nontrivial_concepts(&r)?
    };
    let out = ConceptsOutput {
        x_labels: r.x_labels(r.all_x()),
        y_labels: r.y_labels(r.all_y()),
        concepts: list
            .iter()
            .map(|c| ConceptLabels {
                extent: r.x_labels(c.extent),
                intent: r.y_labels(c.intent),
            })
            .collect(),
        comparison: if a.compare_eigen {
            Some(fca::compare_eigen_concepts(&r)?)
        } else {
            None
        },
    };
    emit(a.out.as_deref(), &io::to_json(&out)?)
}

fn entail(a: &EntailArgs) -> Result<()> {
    let ds = SequenceDataset::parse(&read(&a.corpus)?).with_context(|| format!("in {}", a.corpus.display()))?;
    let cs = CorpusState::new(ds)?;
    let v = entailment::entail(&cs, &a.pattern, &a.against, !a.unnormalized, a.scale)?;
    emit(a.out.as_deref(), &io::to_json(&v)?)
}

fn load_model(path: &Path) -> Result<MatrixProductState> {
    serde_json::from_str(&read(path)?).with_context(|| format!("parsing model {}", path.display()))
}

fn parity(cmd: &ParityCommand) -> Result<()> {
    match cmd {
        ParityCommand::Train(a) => {
            let cfg = TrainConfig { chi: a.chi, seed: a.seed, ..Default::default() };
            let ds = match (&a.data, a.n) {
                (Some(p), _) => SequenceDataset::parse(&read(p)?).with_context(|| format!("in {}", p.display()))?,
                (None, Some(n)) => {
                    if !(3..=mps::MAX_EXPERIMENT_N).contains(&n) {
                        bail!("--n must be in 3..={}", mps::MAX_EXPERIMENT_N);
                    }
                    mps::draw_even_dataset(n, mps::samples_for_fraction(n, a.fraction)?, a.seed)?
                }
                (None, None) => bail!("one of --n or --data is required"),
            };
            let model = mps::train(&ds, &cfg)?;
            emit(a.out.as_deref(), &io::to_json(&model)?)
        }
        ParityCommand::Experiment(a) => {
            let cfg = TrainConfig { chi: a.chi, seed: a.seed, ..Default::default() };
            let rows = mps::run_experiment(a.n, &a.fractions, a.replicas, a.seed, &cfg)?;
            emit(a.out.as_deref(), &io::experiment_csv(&rows))
        }
        ParityCommand::Sample(a) => {
            let model = load_model(&a.model)?;
            let sep = if model.physical_dim() <= 10 { "" } else { " " };
            let mut text = String::new();
            for s in mps::sample(&model, a.count, a.seed) {
                let tokens: Vec<String> = s.iter().map(u32::to_string).collect();
                text.push_str(&tokens.join(sep));
                text.push('\n');
            }
            emit(a.out.as_deref(), &text)
        }
        ParityCommand::Eval(a) => {
            let model = load_model(&a.model)?;
            if model.physical_dim() != 2 {
                bail!("parity evaluation needs a binary model, got physical dimension {}", model.physical_dim());
            }
            let target = mps::parity_target(model.n())?;
            let odd_mass = mps::born_distribution(&model).ok().map(|p| {
                p.iter()
                    .enumerate()
                    .filter(|(k, _)| k.count_ones() % 2 == 1)
                    .map(|(_, q)| q)
                    .sum()
            });
            let out = EvalOutput {
                n: model.n(),
                norm_squared: model.norm_squared(),
                bhattacharyya: mps::bhattacharyya_states(&model, &target)?,
                odd_mass,
            };
            emit(a.out.as_deref(), &io::to_json(&out)?)
        }
    }
}

fn configure_threads() -> Result<()> {
    let Ok(v) = std::env::var("QDENSITY_THREADS") else {
        return Ok(());
    };
    let n: usize = v
        .trim()
        .parse()
        .ok()
        .filter(|n| *n > 0)
        .with_context(|| format!("QDENSITY_THREADS must be a positive integer, got `{v}`"))?;
    rayon::ThreadPoolBuilder::new().num_threads(n).build_global()?;
    Ok(())
}

fn run(cli: &Cli) -> Result<()> {
    configure_threads()?;
    match &cli.command {
        Command::Reduce(a) => reduce(a),
        Command::Concepts(a) => concepts(a),
        Command::Entail(a) => entail(a),
        Command::Parity(p) => parity(p),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
