//! Splits a dataset into train/test files with a manifest, re-imports the
//! split and evaluates ItemCF on it.
//!
//! ```text
//! cargo run --release --example split_manifest -- data/ml-100k/u.data out/split
//! ```

use std::path::PathBuf;

use hybrid_diffusion::data::{self, DatasetConfig, DatasetFormat, SplitSpec};
use hybrid_diffusion::experiment::Evaluation;
use hybrid_diffusion::metrics::HdMode;
use hybrid_diffusion::{Family, FillPolicy, KernelSpec};

fn main() -> hybrid_diffusion::Result<()> {
    let mut args = std::env::args().skip(1);
    let input = PathBuf::from(
        args.next()
            .unwrap_or_else(|| "crates/core/examples/data/toy.tsv".into()),
    );
    let out = PathBuf::from(args.next().unwrap_or_else(|| "out/split".into()));

    let format = if input.file_name().is_some_and(|n| n == "u.data") {
        DatasetFormat::Movielens
    } else {
        DatasetFormat::Generic
    };
    let edges = data::load(&DatasetConfig {
        path: input,
        format,
        rating_threshold: None,
    })?;
    let spec = SplitSpec::new(0.8, 42)?;
    let (train, test) = data::split(&edges, spec)?;
    let written = data::export_split(&out, spec, &train, &test)?;
    println!("wrote {}: {}", out.display(), serde_json::to_string(&written)?);

    let (manifest, train, test) = data::import_split(&out)?;
    assert_eq!(manifest, written);
    println!("re-imported {} train / {} test edges, hash verified", train.len(), test.len());

    let eval = Evaluation::from_edges(&train, &test)?;
    if eval.users.len() >= 2 {
        let r = eval.evaluate_spec(KernelSpec::plain(Family::ItemCf), 20, FillPolicy::Popularity, HdMode::Exact)?;
        println!("ItemCF: {}", r.to_json()?);
    }
    Ok(())
}
