use std::fs;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use hybrid_diffusion::data::{self, DatasetConfig, DatasetFormat, SplitSpec};
use hybrid_diffusion::experiment::{self, CurveAxis, Evaluation, SweepConfig};
use hybrid_diffusion::graph::{build_graph, EdgeList, InteractionGraph, Labels};
use hybrid_diffusion::kernels::{build_model, Family, KernelSpec, DEFAULT_MATERIALIZE_THRESHOLD};
use hybrid_diffusion::metrics::HdMode;
use hybrid_diffusion::recommender::{recommend_all, FillPolicy};
use hybrid_diffusion::{Error, Result};

#[derive(Parser)]
#[command(version, about = "Hybrid CF/diffusion recommenders and benchmark sweeps")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Split a dataset by edges and write train/test files plus a manifest.
    Split {
        #[arg(long)]
        input: PathBuf,
        #[arg(long, default_value = "generic")]
        format: DatasetFormat,
        #[arg(long)]
        threshold: Option<f64>,
        #[arg(long)]
        ratio: f64,
        #[arg(long)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Write top-K lists as `user item rank score` lines.
    Recommend {
        #[arg(long)]
        train: PathBuf,
        #[command(flatten)]
        kernel: KernelArgs,
        #[arg(long, default_value_t = 20)]
        k: usize,
        #[arg(long, default_value = "popularity")]
        fill: FillPolicy,
        #[arg(long)]
        out: PathBuf,
    },
    /// Evaluate one kernel on a train/test pair and write a JSON report.
    Eval {
        #[arg(long)]
        train: PathBuf,
        #[arg(long)]
        test: PathBuf,
        #[command(flatten)]
        kernel: KernelArgs,
        #[arg(long, default_value_t = 20)]
        k: usize,
        #[arg(long, default_value = "popularity")]
        fill: FillPolicy,
        #[arg(long)]
        out: PathBuf,
    },
    /// Run a parameter sweep and write tables, grid points and curves.
    Sweep {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
}

#[derive(Args)]
struct KernelArgs {
    #[arg(long)]
    family: Family,
    #[arg(long)]
    epsilon: Option<f64>,
    #[arg(long)]
    lambda: Option<f64>,
}

impl KernelArgs {
    fn spec(&self) -> Result<KernelSpec> {
        KernelSpec::new(self.family, self.epsilon, self.lambda)
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Split {
            input,
            format,
            threshold,
            ratio,
            seed,
            out,
        } => {
            let config = DatasetConfig {
                path: input,
                format,
                rating_threshold: threshold,
            };
            let edges = data::load(&config)?;
            let spec = SplitSpec::new(ratio, seed)?;
            let (train, test) = data::split(&edges, spec)?;
            let manifest = data::export_split(&out, spec, &train, &test)?;
            println!(
                "{} train / {} test edges written to {}",
                manifest.train_edges,
                manifest.test_edges,
                out.display()
            );
            Ok(())
        }
        Command::Recommend {
            train,
            kernel,
            k,
            fill,
            out,
        } => {
            let graph = build_graph(&data::read_edge_list(&train)?)?;
            let model = build_model(&graph, kernel.spec()?, DEFAULT_MATERIALIZE_THRESHOLD)?;
            let lists = recommend_all(&model, &graph, k, fill)?;
            write_lists(&out, &graph, &lists)
        }
        Command::Eval {
            train,
            test,
            kernel,
            k,
            fill,
            out,
        } => {
            let train = data::read_edge_list(&train)?;
            let test = read_optional_empty(&test)?;
            let eval = Evaluation::from_edges(&train, &test)?;
            let report = eval.evaluate_spec(kernel.spec()?, k, fill, HdMode::Exact)?;
            let json = report.to_json()?;
            fs::write(&out, json + "\n")
                .map_err(|e| Error::Config(format!("writing {}: {e}", out.display())))?;
            println!(
                "P@{k}={:.3} R@{k}={:.3} F1@{k}={:.3} Diversity={} HD={:.3} Novelty={:.3} users={}",
                report.precision,
                report.recall,
                report.f1,
                report.diversity_in_top_k,
                report.hd,
                report.novelty,
                report.users_evaluated
            );
            Ok(())
        }
        Command::Sweep { config, out } => {
            let config = SweepConfig::from_path(&config)?;
            let result = experiment::run_sweep(&config)?;
            let (tables, points, json, curves) = experiment::output_paths(&out);
            experiment::export_tables(&result, &tables)?;
            experiment::export_points(&result, &points)?;
            experiment::write_result_json(&result, &json)?;
            experiment::export_curves(&result, CurveAxis::Lambda, &curves)?;
            experiment::export_curves(&result, CurveAxis::Epsilon, &curves)?;
            print!("{}", fs::read_to_string(&tables).unwrap_or_default());
            Ok(())
        }
    }
}

/// Test files may legitimately be empty; the generic loader rejects that.
fn read_optional_empty(path: &Path) -> Result<EdgeList> {
    match data::read_edge_list(path) {
        Err(Error::EmptyDataset(_)) => Ok(EdgeList::default()),
        other => other,
    }
}

fn write_lists(
    path: &Path,
    graph: &InteractionGraph,
    lists: &[hybrid_diffusion::RecommendationList],
) -> Result<()> {
    let labels: &Labels = graph.labels();
    let file = fs::File::create(path)
        .map_err(|e| Error::Config(format!("creating {}: {e}", path.display())))?;
    let mut w = BufWriter::new(file);
    let io = |e: std::io::Error| Error::Config(format!("writing {}: {e}", path.display()));
    for list in lists {
        let user = labels.user_label(list.user).unwrap_or_default();
        for (rank, (item, score)) in list.items.iter().zip(&list.scores).enumerate() {
            let item = labels.item_label(*item).unwrap_or_default();
            writeln!(w, "{user}\t{item}\t{}\t{score}", rank + 1).map_err(io)?;
        }
    }
    w.flush().map_err(io)
}
