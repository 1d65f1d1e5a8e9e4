//! Runs a parameter sweep from a TOML/JSON config and writes tables, grid
//! points and curves, like the `sweep` subcommand.
//!
//! ```text
//! cargo run --release --example sweep -- crates/core/examples/configs/movielens_dense.toml out/dense
//! ```

use std::path::PathBuf;
use std::time::Instant;

use hybrid_diffusion::experiment::{self, CurveAxis, SweepConfig};

fn main() -> hybrid_diffusion::Result<()> {
    let mut args = std::env::args().skip(1);
    let config = PathBuf::from(
        args.next()
            .unwrap_or_else(|| "crates/core/examples/configs/movielens_dense.toml".into()),
    );
    let out = PathBuf::from(args.next().unwrap_or_else(|| "out/sweep".into()));

    let config = SweepConfig::from_path(&config)?;
    let start = Instant::now();
    let result = experiment::run_sweep(&config)?;
    eprintln!(
        "{} grid points x {} seeds in {:.1?}",
        result.points.len(),
        result.seeds.len(),
        start.elapsed()
    );

    let (tables, points, json, curves) = experiment::output_paths(&out);
    experiment::export_tables(&result, &tables)?;
    experiment::export_points(&result, &points)?;
    experiment::write_result_json(&result, &json)?;
    experiment::export_curves(&result, CurveAxis::Lambda, &curves)?;
    experiment::export_curves(&result, CurveAxis::Epsilon, &curves)?;

    let k = result.k;
    println!(
        "{:<9} {:<7} {:<5} {:<6} {:<6} {:<6} {:<7} {:<6} Novelty",
        "family",
        "lambda",
        "eps",
        format!("P@{k}"),
        format!("R@{k}"),
        format!("F1@{k}"),
        "Div",
        "HD"
    );
    for opt in &result.optima {
        let m = &opt.mean;
        let p = |v: Option<f64>| v.map_or("na".to_string(), |x| x.to_string());
        println!(
            "{:<9} {:<7} {:<5} {:<6.3} {:<6.3} {:<6.3} {:<7.1} {:<6.3} {:.2}",
            opt.spec.family.name(),
            p(opt.spec.lambda),
            p(opt.spec.epsilon),
            m.precision,
            m.recall,
            m.f1,
            m.diversity_in_top_k,
            m.hd,
            m.novelty
        );
    }
    println!("written to {}", out.display());
    Ok(())
}
