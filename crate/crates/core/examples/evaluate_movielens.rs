//! Evaluates the parameter-free kernels on one MovieLens-100k split.
//!
//! ```text
//! cargo run --release --example evaluate_movielens -- data/ml-100k/u.data 0.8 1
//! ```

use std::path::PathBuf;
use std::sync::Arc;
use std::time::Instant;

use hybrid_diffusion::data::{self, DatasetConfig, SplitSpec};
use hybrid_diffusion::experiment::Evaluation;
use hybrid_diffusion::graph::Labels;
use hybrid_diffusion::metrics::HdMode;
use hybrid_diffusion::{Family, FillPolicy, KernelSpec};

fn main() -> hybrid_diffusion::Result<()> {
    let mut args = std::env::args().skip(1);
    let path = PathBuf::from(args.next().unwrap_or_else(|| "data/ml-100k/u.data".into()));
    let ratio: f64 = args.next().map_or(0.8, |s| s.parse().expect("ratio"));
    let seed: u64 = args.next().map_or(1, |s| s.parse().expect("seed"));

    let edges = data::load(&DatasetConfig::movielens(&path))?;
    let labels = Arc::new(Labels::from_edges(&edges));
    println!(
        "{} edges, {} users, {} items",
        edges.len(),
        labels.num_users(),
        labels.num_items()
    );
    let (train, test) = data::split(&edges, SplitSpec::new(ratio, seed)?)?;
    let eval = Evaluation::with_labels(&train, &test, labels)?;

    println!("family   P@20   R@20   F1@20  Div   HD     Novelty");
    for family in [Family::ItemCf, Family::UserCf, Family::Md, Family::Hc] {
        let start = Instant::now();
        let r = eval.evaluate_spec(KernelSpec::plain(family), 20, FillPolicy::Popularity, HdMode::Exact)?;
        println!(
            "{:<8} {:.3}  {:.3}  {:.3}  {:<5} {:.3}  {:.2}   ({:.2?})",
            family.name(),
            r.precision,
            r.recall,
            r.f1,
            r.diversity_in_top_k,
            r.hd,
            r.novelty,
            start.elapsed()
        );
    }
    Ok(())
}
