use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::{GridPoint, SweepResult};
use crate::error::{Error, Result};
use crate::kernels::Family;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CurveAxis {
    Epsilon,
    Lambda,
}

impl CurveAxis {
    fn name(self) -> &'static str {
        match self {
            CurveAxis::Epsilon => "epsilon",
            CurveAxis::Lambda => "lambda",
        }
    }

    fn applies_to(self, family: Family) -> bool {
        match self {
            CurveAxis::Epsilon => family.uses_epsilon(),
            CurveAxis::Lambda => family.uses_lambda(),
        }
    }
}

impl fmt::Display for CurveAxis {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for CurveAxis {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "epsilon" | "eps" => Ok(CurveAxis::Epsilon),
            "lambda" => Ok(CurveAxis::Lambda),
            other => Err(Error::InvalidParameter(format!("unknown curve axis {other:?}"))),
        }
    }
}

fn create_parent(path: &Path) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(|e| Error::io(format!("creating {}", dir.display()), e))?;
    }
    Ok(())
}

fn param(v: Option<f64>) -> String {
    v.map_or_else(|| "na".to_string(), |x| x.to_string())
}

fn csv_writer(path: &Path) -> Result<csv::Writer<fs::File>> {
    create_parent(path)?;
    Ok(csv::Writer::from_path(path)?)
}

/// One row per family at its selected parameters, rounded to three decimals
/// with coverage as an integer.
pub fn export_tables(result: &SweepResult, path: &Path) -> Result<()> {
    let k = result.k;
    let mut w = csv_writer(path)?;
    w.write_record([
        "dataset".to_string(),
        "ratio".to_string(),
        "family".to_string(),
        "lambda_opt".to_string(),
        "epsilon_opt".to_string(),
        format!("P@{k}"),
        format!("R@{k}"),
        format!("F1@{k}"),
        format!("Diversity@{k}"),
        format!("HD@{k}"),
        format!("Novelty@{k}"),
    ])?;
    for opt in &result.optima {
        let m = &opt.mean;
        w.write_record([
            result.dataset.clone(),
            result.train_ratio.to_string(),
            opt.spec.family.to_string(),
            param(opt.spec.lambda),
            param(opt.spec.epsilon),
            format!("{:.3}", m.precision),
            format!("{:.3}", m.recall),
            format!("{:.3}", m.f1),
            format!("{:.0}", m.diversity_in_top_k),
            format!("{:.3}", m.hd),
            format!("{:.3}", m.novelty),
        ])?;
    }
    w.flush().map_err(|e| Error::io("writing tables", e))
}

/// Every grid point's mean metrics at full precision.
pub fn export_points(result: &SweepResult, path: &Path) -> Result<()> {
    let mut w = csv_writer(path)?;
    w.write_record([
        "family",
        "lambda",
        "epsilon",
        "precision",
        "recall",
        "f1",
        "diversity",
        "hd",
        "novelty",
        "users",
    ])?;
    for p in &result.points {
        let m = &p.mean;
        w.write_record([
            p.spec.family.to_string(),
            param(p.spec.lambda),
            param(p.spec.epsilon),
            m.precision.to_string(),
            m.recall.to_string(),
            m.f1.to_string(),
            m.diversity_in_top_k.to_string(),
            m.hd.to_string(),
            m.novelty.to_string(),
            m.users_evaluated.to_string(),
        ])?;
    }
    w.flush().map_err(|e| Error::io("writing points", e))
}

/// For every family that has `axis`, writes `<family>_<axis>.csv` into `dir`
/// with F1, coverage and novelty along the axis, holding the other parameter
/// at the family's optimum. Returns the written paths.
pub fn export_curves(result: &SweepResult, axis: CurveAxis, dir: &Path) -> Result<Vec<PathBuf>> {
    let mut written = Vec::new();
    for opt in &result.optima {
        let family = opt.spec.family;
        if !axis.applies_to(family) {
            continue;
        }
        let on_curve = |p: &&GridPoint| {
            p.spec.family == family
                && match axis {
                    CurveAxis::Epsilon => p.spec.lambda == opt.spec.lambda,
                    CurveAxis::Lambda => p.spec.epsilon == opt.spec.epsilon,
                }
        };
        let path = dir.join(format!("{}_{}.csv", family.name().to_ascii_lowercase(), axis));
        let mut w = csv_writer(&path)?;
        w.write_record([axis.name(), "f1", "diversity", "novelty"])?;
        for p in result.points.iter().filter(on_curve) {
            let value = match axis {
                CurveAxis::Epsilon => p.spec.epsilon,
                CurveAxis::Lambda => p.spec.lambda,
            };
            w.write_record([
                param(value),
                p.mean.f1.to_string(),
                p.mean.diversity_in_top_k.to_string(),
                p.mean.novelty.to_string(),
            ])?;
        }
        w.flush().map_err(|e| Error::io("writing curve", e))?;
        written.push(path);
    }
    Ok(written)
}

pub fn write_result_json(result: &SweepResult, path: &Path) -> Result<()> {
    create_parent(path)?;
    let json = serde_json::to_string_pretty(result)?;
    fs::write(path, json + "\n").map_err(|e| Error::io(format!("writing {}", path.display()), e))
}

pub fn read_result_json(path: &Path) -> Result<SweepResult> {
    let text =
        fs::read_to_string(path).map_err(|e| Error::io(format!("reading {}", path.display()), e))?;
    Ok(serde_json::from_str(&text)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::experiment::{FamilyOptimum, MeanReport, Selection};
    use crate::kernels::KernelSpec;
    use crate::metrics::EvalReport;

    fn report(f1: f64) -> EvalReport {
        EvalReport {
            k: 20,
            precision: 0.4951,
            recall: 0.1789,
            f1,
            diversity_in_top_k: 396,
            hd: 0.6504,
            novelty: 3.8123,
            users_evaluated: 900,
        }
    }

    fn sample() -> SweepResult {
        let mut points = Vec::new();
        for lambda in [0.0, 0.5, 1.0] {
            for eps in [0.0, 1.0] {
                let reports = vec![report(0.1 + lambda / 10.0 + eps / 100.0)];
                points.push(GridPoint {
                    spec: KernelSpec::new(Family::HiHhp, Some(eps), Some(lambda)).unwrap(),
                    mean: MeanReport::of(&reports),
                    reports,
                });
            }
        }
        let md = vec![report(0.263)];
        points.push(GridPoint {
            spec: KernelSpec::plain(Family::Md),
            mean: MeanReport::of(&md),
            reports: md.clone(),
        });
        let best = points[5].clone();
        SweepResult {
            dataset: "toy".into(),
            train_ratio: 0.2,
            seeds: vec![1],
            k: 20,
            selection: Selection::Test,
            optima: vec![
                FamilyOptimum {
                    spec: best.spec,
                    reports: best.reports,
                    mean: best.mean,
                },
                FamilyOptimum {
                    spec: KernelSpec::plain(Family::Md),
                    mean: MeanReport::of(&md),
                    reports: md,
                },
            ],
            points,
        }
    }

    #[test]
    fn table_rows_are_rounded() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("t.csv");
        export_tables(&sample(), &path).unwrap();
        let text = fs::read_to_string(&path).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(
            lines[0],
            "dataset,ratio,family,lambda_opt,epsilon_opt,P@20,R@20,F1@20,Diversity@20,HD@20,Novelty@20"
        );
        assert_eq!(lines[2], "toy,0.2,MD,na,na,0.495,0.179,0.263,396,0.650,3.812");
        assert!(lines[1].starts_with("toy,0.2,HI-HHP,1,1,"));
    }

    #[test]
    fn empty_result_gives_header_only() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("t.csv");
        let mut empty = sample();
        empty.points.clear();
        empty.optima.clear();
        export_tables(&empty, &path).unwrap();
        assert_eq!(fs::read_to_string(&path).unwrap().lines().count(), 1);
    }

    #[test]
    fn curves_have_one_row_per_grid_value() {
        let dir = tempfile::tempdir().unwrap();
        let files = export_curves(&sample(), CurveAxis::Lambda, dir.path()).unwrap();
        assert_eq!(files.len(), 1);
        let text = fs::read_to_string(&files[0]).unwrap();
        assert_eq!(text.lines().count(), 1 + 3);
        let files = export_curves(&sample(), CurveAxis::Epsilon, dir.path()).unwrap();
        assert!(files[0].ends_with("hi-hhp_epsilon.csv"));
        assert_eq!(fs::read_to_string(&files[0]).unwrap().lines().count(), 1 + 2);
    }

    #[test]
    fn json_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("r.json");
        let result = sample();
        write_result_json(&result, &path).unwrap();
        assert_eq!(read_result_json(&path).unwrap(), result);
    }
}
