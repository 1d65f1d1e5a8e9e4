use std::collections::{HashMap, HashSet};
use std::sync::Arc;

use rayon::prelude::*;

use super::{
    seeded_evaluation, select_optimum, Evaluation, FamilyOptimum, GridPoint, MeanReport, Selection,
    SweepConfig, SweepResult,
};
use crate::data::{load, SplitSpec};
use crate::error::{Error, Result};
use crate::graph::{EdgeList, Labels};
use crate::kernels::{Family, KernelCache, KernelSpec, SimilarityModel};
use crate::metrics::EvalReport;

/// Mixed into a split seed to derive the inner fit/validation split seed.
const VALIDATION_SEED_SALT: u64 = 0x5851_f42d_4c95_7f2d;

/// Specs that evaluate identically share one evaluation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
enum MemoKey {
    Form(u64, u64, u64),
    UserCf,
}

/// Unique specs sharing one ε (`None` for UserCF).
type EpsilonGroup = (Option<u64>, Vec<(MemoKey, KernelSpec)>);

fn memo_key(spec: &KernelSpec) -> MemoKey {
    match spec.form() {
        Some(form) => {
            let (e, a, b) = form.key();
            MemoKey::Form(e, a, b)
        }
        None => MemoKey::UserCf,
    }
}

/// Evaluates every configured grid point on every seed and selects per-family
/// optima by mean F1@K.
pub fn run_sweep(config: &SweepConfig) -> Result<SweepResult> {
    config.validate()?;
    match config.workers {
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build()
            .map_err(|e| Error::Config(format!("thread pool: {e}")))?
            .install(|| sweep(config)),
        None => sweep(config),
    }
}

fn sweep(config: &SweepConfig) -> Result<SweepResult> {
    let edges = load(&config.dataset).map_err(|e| e.context("loading dataset"))?;
    let labels = Arc::new(Labels::from_edges(&edges));
    let specs = config.grid_points();
    let seeds = &config.split.seeds;

    let mut per_point: Vec<Vec<EvalReport>> = vec![Vec::with_capacity(seeds.len()); specs.len()];
    for &seed in seeds {
        let split = SplitSpec::new(config.split.train_ratio, seed)?;
        let (eval, train_edges) = seeded_evaluation(&edges, &labels, split)
            .map_err(|e| e.context(format!("split seed {seed}")))?;
        let selection_eval = match config.selection {
            Selection::Test => eval,
            Selection::Validation { fit_ratio } => {
                inner_evaluation(&train_edges, &labels, fit_ratio, seed)?
            }
        };
        let reports = evaluate_grid(&selection_eval, &specs, config)
            .map_err(|e| e.context(format!("seed {seed}")))?;
        for (slot, report) in per_point.iter_mut().zip(reports) {
            slot.push(report);
        }
    }

    let points: Vec<GridPoint> = specs
        .into_iter()
        .zip(per_point)
        .map(|(spec, reports)| GridPoint {
            spec,
            mean: MeanReport::of(&reports),
            reports,
        })
        .collect();

    let mut families: Vec<Family> = Vec::new();
    for &f in &config.families {
        if !families.contains(&f) {
            families.push(f);
        }
    }
    let mut optima = Vec::with_capacity(families.len());
    for family in families {
        let best = select_optimum(points.iter().filter(|p| p.spec.family == family))
            .expect("every family has at least one grid point");
        let optimum = match config.selection {
            Selection::Test => FamilyOptimum {
                spec: best.spec,
                reports: best.reports.clone(),
                mean: best.mean.clone(),
            },
            Selection::Validation { .. } => refit_on_test(config, &edges, &labels, best.spec)?,
        };
        optima.push(optimum);
    }

    Ok(SweepResult {
        dataset: config.dataset_name(),
        train_ratio: config.split.train_ratio,
        seeds: seeds.clone(),
        k: config.k,
        selection: config.selection,
        points,
        optima,
    })
}

fn inner_evaluation(
    train_edges: &EdgeList,
    labels: &Arc<Labels>,
    fit_ratio: f64,
    seed: u64,
) -> Result<Evaluation> {
    let inner = SplitSpec::new(fit_ratio, seed ^ VALIDATION_SEED_SALT)?;
    seeded_evaluation(train_edges, labels, inner)
        .map(|(eval, _)| eval)
        .map_err(|e| e.context(format!("validation split for seed {seed}")))
}

fn refit_on_test(
    config: &SweepConfig,
    edges: &EdgeList,
    labels: &Arc<Labels>,
    spec: KernelSpec,
) -> Result<FamilyOptimum> {
    let mut reports = Vec::with_capacity(config.split.seeds.len());
    for &seed in &config.split.seeds {
        let split = SplitSpec::new(config.split.train_ratio, seed)?;
        let (eval, _) = seeded_evaluation(edges, labels, split)?;
        let model = if eval.train.num_items() <= config.materialize_threshold {
            KernelCache::new(&eval.train).model(&eval.train, spec)?
        } else {
            SimilarityModel::lazy(&eval.train, spec)?
        };
        reports.push(eval.evaluate_model(&model, config.k, config.fill, config.hd)?);
    }
    Ok(FamilyOptimum {
        spec,
        mean: MeanReport::of(&reports),
        reports,
    })
}

/// Scores `specs` on one evaluation. Specs with the same closed form are
/// evaluated once; specs sharing ε share one blended table.
pub(crate) fn evaluate_grid(
    eval: &Evaluation,
    specs: &[KernelSpec],
    config: &SweepConfig,
) -> Result<Vec<EvalReport>> {
    let mut unique: Vec<(MemoKey, KernelSpec)> = Vec::new();
    let mut seen: HashSet<MemoKey> = HashSet::new();
    for spec in specs {
        let key = memo_key(spec);
        if seen.insert(key) {
            unique.push((key, *spec));
        }
    }

    // group by ε in order of first appearance
    let mut groups: Vec<EpsilonGroup> = Vec::new();
    for (key, spec) in unique {
        let eps = spec.form().map(|f| f.epsilon.to_bits());
        match groups.iter_mut().find(|(e, _)| *e == eps) {
            Some((_, members)) => members.push((key, spec)),
            None => groups.push((eps, vec![(key, spec)])),
        }
    }

    let materialize = eval.train.num_items() <= config.materialize_threshold;
    let mut cache = materialize.then(|| KernelCache::new(&eval.train));
    let mut memo: HashMap<MemoKey, EvalReport> = HashMap::new();
    for (eps, members) in groups {
        let table = match (&mut cache, eps) {
            (Some(cache), Some(_)) => {
                let form = members[0].1.form().expect("item-side spec");
                Some(cache.blended_table(&form))
            }
            _ => None,
        };
        let reports: Vec<Result<EvalReport>> = members
            .par_iter()
            .map(|(_, spec)| {
                let model = match &table {
                    Some(t) => SimilarityModel::from_blended(&eval.train, *spec, t.clone())?,
                    None => SimilarityModel::lazy(&eval.train, *spec)?,
                };
                eval.evaluate_model(&model, config.k, config.fill, config.hd)
                    .map_err(|e| e.context(spec.to_string()))
            })
            .collect();
        for ((key, _), report) in members.iter().zip(reports) {
            memo.insert(*key, report?);
        }
        if let Some(cache) = &mut cache {
            cache.clear_blended();
        }
    }

    Ok(specs
        .iter()
        .map(|s| memo[&memo_key(s)].clone())
        .collect())
}
