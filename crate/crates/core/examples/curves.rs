//! Reads a saved sweep result and prints F1 and Diversity along the λ and ε
//! axes of one family, holding the other parameter at its optimum.
//!
//! ```text
//! cargo run --release --example sweep -- crates/core/examples/configs/synthetic.toml out/synthetic
//! cargo run --release --example curves -- out/synthetic/result.json HI-BD
//! ```

use std::path::PathBuf;

use hybrid_diffusion::experiment::{self, CurveAxis};
use hybrid_diffusion::Family;

fn main() -> hybrid_diffusion::Result<()> {
    let mut args = std::env::args().skip(1);
    let path = PathBuf::from(args.next().unwrap_or_else(|| "out/synthetic/result.json".into()));
    let family: Family = args.next().unwrap_or_else(|| "HI-BD".into()).parse()?;

    let result = experiment::read_result_json(&path)?;
    let Some(opt) = result.optimum(family) else {
        println!("{family} was not part of this sweep");
        return Ok(());
    };
    println!(
        "{family} optimum: lambda {:?}, epsilon {:?}, F1 {:.4}",
        opt.lambda_opt(),
        opt.epsilon_opt(),
        opt.mean.f1
    );

    for axis in [CurveAxis::Lambda, CurveAxis::Epsilon] {
        let (uses, fixed) = match axis {
            CurveAxis::Lambda => (family.uses_lambda(), opt.epsilon_opt()),
            CurveAxis::Epsilon => (family.uses_epsilon(), opt.lambda_opt()),
        };
        if !uses {
            continue;
        }
        println!("\n{:>8}  F1      Diversity", axis.to_string());
        let mut points: Vec<_> = result
            .points_of(family)
            .filter(|p| match axis {
                CurveAxis::Lambda => p.spec.epsilon == fixed,
                CurveAxis::Epsilon => p.spec.lambda == fixed,
            })
            .collect();
        points.sort_by(|a, b| {
            let x = |p: &experiment::GridPoint| match axis {
                CurveAxis::Lambda => p.spec.lambda,
                CurveAxis::Epsilon => p.spec.epsilon,
            };
            x(a).partial_cmp(&x(b)).unwrap()
        });
        let best = points.iter().map(|p| p.mean.f1).fold(0.0, f64::max);
        for p in points {
            let x = match axis {
                CurveAxis::Lambda => p.spec.lambda,
                CurveAxis::Epsilon => p.spec.epsilon,
            }
            .unwrap_or(0.0);
            let bar = if best > 0.0 { (30.0 * p.mean.f1 / best) as usize } else { 0 };
            println!(
                "{x:>8.2}  {:.4}  {:>8.1}  {}",
                p.mean.f1,
                p.mean.diversity_in_top_k,
                "#".repeat(bar)
            );
        }
    }
    Ok(())
}
