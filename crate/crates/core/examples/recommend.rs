//! Trains one kernel on an edge list and prints top-K lists for a few users.
//!
//! ```text
//! cargo run --release --example recommend -- crates/core/examples/data/toy.tsv HI-BD 0.5 0.5
//! cargo run --release --example recommend -- data/ml-100k/u.data MD
//! ```

use std::path::PathBuf;

use hybrid_diffusion::data::{self, DatasetConfig, DatasetFormat};
use hybrid_diffusion::kernels::{build_model, DEFAULT_MATERIALIZE_THRESHOLD};
use hybrid_diffusion::recommender::recommend_all;
use hybrid_diffusion::{build_graph, Family, FillPolicy, KernelSpec};

fn main() -> hybrid_diffusion::Result<()> {
    let mut args = std::env::args().skip(1);
    let path = PathBuf::from(
        args.next()
            .unwrap_or_else(|| "crates/core/examples/data/toy.tsv".into()),
    );
    let family: Family = args.next().unwrap_or_else(|| "HI-MD".into()).parse()?;
    let first: Option<f64> = args.next().map(|s| s.parse().expect("parameter"));
    let second: Option<f64> = args.next().map(|s| s.parse().expect("parameter"));
    let (epsilon, lambda) = match (family.uses_epsilon(), family.uses_lambda()) {
        (true, true) => (first.or(Some(0.5)), second.or(Some(0.5))),
        (true, false) => (first.or(Some(0.5)), None),
        (false, true) => (None, first.or(Some(0.5))),
        (false, false) => (None, None),
    };
    let spec = KernelSpec::new(family, epsilon, lambda)?;

    let format = if path.file_name().is_some_and(|n| n == "u.data") {
        DatasetFormat::Movielens
    } else {
        DatasetFormat::Generic
    };
    let config = DatasetConfig {
        path,
        format,
        rating_threshold: None,
    };
    let graph = build_graph(&data::load(&config)?)?;
    let model = build_model(&graph, spec, DEFAULT_MATERIALIZE_THRESHOLD)?;
    let lists = recommend_all(&model, &graph, 5, FillPolicy::Popularity)?;

    let labels = graph.labels();
    println!(
        "{family} on {} users x {} items (epsilon {epsilon:?}, lambda {lambda:?})",
        graph.num_users(),
        graph.num_items()
    );
    for list in lists.iter().take(10) {
        let items: Vec<&str> = list
            .items
            .iter()
            .map(|&i| labels.item_label(i).unwrap_or("?"))
            .collect();
        println!("{:>8}: {}", labels.user_label(list.user).unwrap_or("?"), items.join(" "));
    }
    Ok(())
}
