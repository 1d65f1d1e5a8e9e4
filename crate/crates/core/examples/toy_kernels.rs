//! Prints the item-item similarity table of every kernel family on a small
//! hand-written graph, and the top-2 lists each kernel produces.
//!
//! ```text
//! cargo run --example toy_kernels
//! ```

use hybrid_diffusion::graph::build_graph;
use hybrid_diffusion::kernels::{build_model, DEFAULT_MATERIALIZE_THRESHOLD};
use hybrid_diffusion::recommender::recommend_all;
use hybrid_diffusion::{EdgeList, Family, FillPolicy, KernelSpec};

fn main() -> hybrid_diffusion::Result<()> {
    let edges = EdgeList::from_pairs([
        ("u1", "i1"),
        ("u1", "i2"),
        ("u2", "i1"),
        ("u2", "i3"),
        ("u3", "i2"),
        ("u3", "i4"),
        ("u4", "i4"),
    ]);
    let graph = build_graph(&edges)?;
    let labels = graph.labels().clone();
    let item = |i: usize| labels.item_label(i).unwrap_or("?").to_string();
    let user = |u: usize| labels.user_label(u).unwrap_or("?").to_string();

    for family in Family::ALL {
        let spec = KernelSpec::new(
            family,
            family.uses_epsilon().then_some(0.5),
            family.uses_lambda().then_some(0.5),
        )?;
        let model = build_model(&graph, spec, DEFAULT_MATERIALIZE_THRESHOLD)?;
        println!("{family} (epsilon {:?}, lambda {:?})", spec.epsilon, spec.lambda);

        if family != Family::UserCf {
            let table = model.to_dense(&graph)?;
            let header: Vec<String> = (0..graph.num_items()).map(|s| format!("{:>7}", item(s))).collect();
            println!("  s(t,s)  {}", header.join(""));
            for (t, row) in table.iter().enumerate() {
                let cells: Vec<String> = row.iter().map(|v| format!("{v:>7.3}")).collect();
                println!("  {:<7} {}", item(t), cells.join(""));
            }
        }

        for list in recommend_all(&model, &graph, 2, FillPolicy::Truncate)? {
            let items: Vec<String> = list
                .items
                .iter()
                .zip(&list.scores)
                .map(|(&i, s)| format!("{}:{s:.3}", item(i)))
                .collect();
            println!("  {} -> [{}]", user(list.user), items.join(", "));
        }
        println!();
    }
    Ok(())
}
