//! Benchmark orchestration: seeded splits, kernel × parameter grid sweeps,
//! optimum selection by F1@K and table/curve export.

mod export;
mod sweep;

use std::path::{Path, PathBuf};
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::data::{DatasetConfig, SplitSpec};
use crate::error::{Error, Result};
use crate::graph::{EdgeList, InteractionGraph, Labels};
use crate::kernels::{build_model, Family, KernelSpec, SimilarityModel, DEFAULT_MATERIALIZE_THRESHOLD};
use crate::metrics::{evaluate, evaluated_users, EvalReport, HdMode, TestSet};
use crate::recommender::{recommend_users, FillPolicy, DEFAULT_K};

pub use export::{export_curves, export_points, export_tables, read_result_json, write_result_json, CurveAxis};
pub use sweep::run_sweep;

/// `0.0, 0.1, …, 1.0`.
pub fn default_grid() -> Vec<f64> {
    (0..=10).map(|i| i as f64 / 10.0).collect()
}

fn default_k() -> usize {
    DEFAULT_K
}

fn default_materialize_threshold() -> usize {
    DEFAULT_MATERIALIZE_THRESHOLD
}

/// Training fraction and one or more split seeds.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SplitConfig {
    pub train_ratio: f64,
    pub seeds: Vec<u64>,
}

/// Which held-out edges drive optimum selection.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase", tag = "mode")]
pub enum Selection {
    /// Grid points are scored on the test edges and the optimum is read off
    /// those same scores.
    #[default]
    Test,
    /// The training edges are split again (`fit_ratio` kept for fitting);
    /// optima are chosen on the validation edges, then refit on the full
    /// training set and scored on the test edges.
    Validation { fit_ratio: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepConfig {
    /// Label used in exported tables; defaults to the dataset file stem.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub name: Option<String>,
    pub dataset: DatasetConfig,
    pub split: SplitConfig,
    pub families: Vec<Family>,
    #[serde(default = "default_grid")]
    pub epsilon_grid: Vec<f64>,
    #[serde(default = "default_grid")]
    pub lambda_grid: Vec<f64>,
    #[serde(default = "default_k")]
    pub k: usize,
    #[serde(default)]
    pub fill: FillPolicy,
    #[serde(default)]
    pub hd: HdMode,
    #[serde(default)]
    pub selection: Selection,
    /// Worker threads; `None` uses every available core.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub workers: Option<usize>,
    #[serde(default = "default_materialize_threshold")]
    pub materialize_threshold: usize,
}

impl SweepConfig {
    pub fn new(dataset: DatasetConfig, train_ratio: f64, seeds: Vec<u64>, families: Vec<Family>) -> Self {
        SweepConfig {
            name: None,
            dataset,
            split: SplitConfig { train_ratio, seeds },
            families,
            epsilon_grid: default_grid(),
            lambda_grid: default_grid(),
            k: DEFAULT_K,
            fill: FillPolicy::default(),
            hd: HdMode::default(),
            selection: Selection::default(),
            workers: None,
            materialize_threshold: DEFAULT_MATERIALIZE_THRESHOLD,
        }
    }

    /// Reads a TOML or JSON config (by extension; anything but `.json` is
    /// parsed as TOML). A relative dataset path is resolved against the
    /// config file's directory.
    pub fn from_path(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::io(format!("reading {}", path.display()), e))?;
        let mut config: SweepConfig = if path.extension().is_some_and(|e| e == "json") {
            serde_json::from_str(&text)?
        } else {
            toml::from_str(&text).map_err(|e| Error::Config(e.to_string()))?
        };
        if config.dataset.path.is_relative() {
            if let Some(dir) = path.parent() {
                config.dataset.path = dir.join(&config.dataset.path);
            }
        }
        Ok(config)
    }

    pub fn dataset_name(&self) -> String {
        self.name.clone().unwrap_or_else(|| {
            self.dataset
                .path
                .file_stem()
                .map(|s| s.to_string_lossy().into_owned())
                .unwrap_or_else(|| "dataset".into())
        })
    }

    pub fn validate(&self) -> Result<()> {
        SplitSpec::new(self.split.train_ratio, 0)?;
        if self.split.seeds.is_empty() {
            return Err(Error::Config("at least one split seed is required".into()));
        }
        if self.families.is_empty() {
            return Err(Error::Config("no kernel families configured".into()));
        }
        for (name, grid) in [("epsilon_grid", &self.epsilon_grid), ("lambda_grid", &self.lambda_grid)] {
            if grid.is_empty() {
                return Err(Error::Config(format!("{name} is empty")));
            }
            if let Some(v) = grid.iter().find(|v| !(0.0..=1.0).contains(*v)) {
                return Err(Error::Config(format!("{name} value {v} outside [0, 1]")));
            }
        }
        if self.k == 0 {
            return Err(Error::Config("k must be at least 1".into()));
        }
        if let Selection::Validation { fit_ratio } = self.selection {
            SplitSpec::new(fit_ratio, 0)?;
        }
        if self.workers == Some(0) {
            return Err(Error::Config("workers must be at least 1".into()));
        }
        Ok(())
    }

    /// Every grid point per family, ordered by ascending λ then ascending ε.
    pub fn grid_points(&self) -> Vec<KernelSpec> {
        let eps = sorted_unique(&self.epsilon_grid);
        let lam = sorted_unique(&self.lambda_grid);
        let mut out = Vec::new();
        for &family in &self.families {
            let lambdas: Vec<Option<f64>> = if family.uses_lambda() {
                lam.iter().copied().map(Some).collect()
            } else {
                vec![None]
            };
            let epsilons: Vec<Option<f64>> = if family.uses_epsilon() {
                eps.iter().copied().map(Some).collect()
            } else {
                vec![None]
            };
            for &l in &lambdas {
                for &e in &epsilons {
                    out.push(KernelSpec {
                        family,
                        epsilon: e,
                        lambda: l,
                    });
                }
            }
        }
        out
    }
}

fn sorted_unique(grid: &[f64]) -> Vec<f64> {
    let mut v = grid.to_vec();
    v.sort_by(f64::total_cmp);
    v.dedup();
    v
}

/// Arithmetic mean of [`EvalReport`] fields over seeds.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MeanReport {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub diversity_in_top_k: f64,
    pub hd: f64,
    pub novelty: f64,
    pub users_evaluated: f64,
}

impl MeanReport {
    pub fn of(reports: &[EvalReport]) -> Self {
        let n = reports.len() as f64;
        let mean = |f: fn(&EvalReport) -> f64| reports.iter().map(f).sum::<f64>() / n;
        MeanReport {
            precision: mean(|r| r.precision),
            recall: mean(|r| r.recall),
            f1: mean(|r| r.f1),
            diversity_in_top_k: mean(|r| r.diversity_in_top_k as f64),
            hd: mean(|r| r.hd),
            novelty: mean(|r| r.novelty),
            users_evaluated: mean(|r| r.users_evaluated as f64),
        }
    }
}

/// Reports of one grid point, one per seed, plus their mean.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridPoint {
    pub spec: KernelSpec,
    pub reports: Vec<EvalReport>,
    pub mean: MeanReport,
}

/// Selected parameters of one family and the reports at that point.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FamilyOptimum {
    pub spec: KernelSpec,
    pub reports: Vec<EvalReport>,
    pub mean: MeanReport,
}

impl FamilyOptimum {
    pub fn family(&self) -> Family {
        self.spec.family
    }

    pub fn epsilon_opt(&self) -> Option<f64> {
        self.spec.epsilon
    }

    pub fn lambda_opt(&self) -> Option<f64> {
        self.spec.lambda
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepResult {
    pub dataset: String,
    pub train_ratio: f64,
    pub seeds: Vec<u64>,
    pub k: usize,
    pub selection: Selection,
    /// Every evaluated grid point. Under validation selection these reports
    /// are validation scores.
    pub points: Vec<GridPoint>,
    /// One entry per family, in configuration order. Reports are always
    /// test-set scores.
    pub optima: Vec<FamilyOptimum>,
}

impl SweepResult {
    pub fn optimum(&self, family: Family) -> Option<&FamilyOptimum> {
        self.optima.iter().find(|o| o.spec.family == family)
    }

    pub fn points_of(&self, family: Family) -> impl Iterator<Item = &GridPoint> {
        self.points.iter().filter(move |p| p.spec.family == family)
    }
}

/// Picks the point with the highest mean F1; ties go to the lowest λ, then
/// the lowest ε.
pub fn select_optimum<'a>(points: impl IntoIterator<Item = &'a GridPoint>) -> Option<&'a GridPoint> {
    let key = |p: &GridPoint| (p.spec.lambda.unwrap_or(0.0), p.spec.epsilon.unwrap_or(0.0));
    points.into_iter().fold(None, |best: Option<&GridPoint>, p| match best {
        None => Some(p),
        Some(b) => {
            let better = p.mean.f1 > b.mean.f1
                || (p.mean.f1 == b.mean.f1 && {
                    let (pl, pe) = key(p);
                    let (bl, be) = key(b);
                    pl < bl || (pl == bl && pe < be)
                });
            Some(if better { p } else { b })
        }
    })
}

/// A training graph with its held-out edges and evaluated users.
#[derive(Debug, Clone)]
pub struct Evaluation {
    pub train: InteractionGraph,
    pub test: TestSet,
    pub users: Vec<usize>,
}

impl Evaluation {
    /// Indexes `train` and `test` in one label space (training labels first).
    pub fn from_edges(train: &EdgeList, test: &EdgeList) -> Result<Self> {
        let mut labels = Labels::from_edges(train);
        labels.extend(test);
        Self::with_labels(train, test, Arc::new(labels))
    }

    pub fn with_labels(train: &EdgeList, test: &EdgeList, labels: Arc<Labels>) -> Result<Self> {
        let train = InteractionGraph::with_labels(train, Arc::clone(&labels))?;
        let test = TestSet::from_edges(&labels, test)?;
        let users = evaluated_users(&train, &test);
        Ok(Evaluation { train, test, users })
    }

    pub fn evaluate_model(
        &self,
        model: &SimilarityModel,
        k: usize,
        fill: FillPolicy,
        hd: HdMode,
    ) -> Result<EvalReport> {
        if self.users.is_empty() {
            return Err(Error::EmptyEvaluation);
        }
        let lists = recommend_users(model, &self.train, &self.users, k, fill)?;
        evaluate(&self.train, &self.test, &lists, k, hd)
    }

    pub fn evaluate_spec(
        &self,
        spec: KernelSpec,
        k: usize,
        fill: FillPolicy,
        hd: HdMode,
    ) -> Result<EvalReport> {
        let model = build_model(&self.train, spec, DEFAULT_MATERIALIZE_THRESHOLD)?;
        self.evaluate_model(&model, k, fill, hd)
    }
}

/// Splits `edges` and builds the evaluation for one seed, sharing `labels`.
pub(crate) fn seeded_evaluation(
    edges: &EdgeList,
    labels: &Arc<Labels>,
    spec: SplitSpec,
) -> Result<(Evaluation, EdgeList)> {
    let (train, test) = crate::data::split(edges, spec)?;
    let eval = Evaluation::with_labels(&train, &test, Arc::clone(labels))?;
    Ok((eval, train))
}

/// Default location of the sweep outputs inside `dir`.
pub fn output_paths(dir: &Path) -> (PathBuf, PathBuf, PathBuf, PathBuf) {
    (
        dir.join("tables.csv"),
        dir.join("points.csv"),
        dir.join("result.json"),
        dir.join("curves"),
    )
}

#[cfg(test)]
mod tests {
    use super::*;

    fn point(family: Family, eps: Option<f64>, lambda: Option<f64>, f1: f64) -> GridPoint {
        GridPoint {
            spec: KernelSpec {
                family,
                epsilon: eps,
                lambda,
            },
            reports: vec![],
            mean: MeanReport {
                precision: 0.0,
                recall: 0.0,
                f1,
                diversity_in_top_k: 0.0,
                hd: 0.0,
                novelty: 0.0,
                users_evaluated: 0.0,
            },
        }
    }

    #[test]
    fn selection_prefers_f1_then_low_lambda_then_low_epsilon() {
        let pts = [
            point(Family::HiHhp, Some(0.5), Some(0.3), 0.2),
            point(Family::HiHhp, Some(0.4), Some(0.3), 0.2),
            point(Family::HiHhp, Some(0.1), Some(0.1), 0.2),
            point(Family::HiHhp, Some(0.0), Some(0.1), 0.1),
        ];
        let best = select_optimum(pts.iter().rev()).unwrap();
        assert_eq!(best.spec.lambda, Some(0.1));
        assert_eq!(best.spec.epsilon, Some(0.1));
        let best = select_optimum(pts[..2].iter()).unwrap();
        assert_eq!(best.spec.epsilon, Some(0.4));
    }

    #[test]
    fn grid_points_cover_parameters() {
        let cfg = SweepConfig::new(
            DatasetConfig::generic("x"),
            0.8,
            vec![1],
            vec![Family::Md, Family::Hhp, Family::HiMd, Family::HiBd],
        );
        let pts = cfg.grid_points();
        assert_eq!(pts.len(), 1 + 11 + 11 + 121);
        assert!(pts.iter().all(|s| s.validate().is_ok()));
    }

    #[test]
    fn default_grid_is_tenths() {
        let g = default_grid();
        assert_eq!(g.len(), 11);
        assert_eq!(g[3], 0.3);
        assert_eq!(g[10], 1.0);
    }

    #[test]
    fn config_validation() {
        let mut cfg = SweepConfig::new(DatasetConfig::generic("x"), 0.8, vec![1], vec![Family::Md]);
        assert!(cfg.validate().is_ok());
        cfg.epsilon_grid = vec![1.5];
        assert!(cfg.validate().is_err());
        cfg.epsilon_grid = default_grid();
        cfg.split.seeds.clear();
        assert!(cfg.validate().is_err());
    }

    #[test]
    fn toml_config_parses_with_defaults() {
        let text = r#"
            families = ["MD", "HI-HHP"]
            [dataset]
            path = "u.data"
            format = "movielens"
            [split]
            train_ratio = 0.8
            seeds = [1, 2]
        "#;
        let cfg: SweepConfig = toml::from_str(text).unwrap();
        assert_eq!(cfg.k, 20);
        assert_eq!(cfg.epsilon_grid, default_grid());
        assert_eq!(cfg.families, vec![Family::Md, Family::HiHhp]);
        assert_eq!(cfg.dataset.effective_threshold(), Some(3.0));
        assert_eq!(cfg.selection, Selection::Test);
    }
}
