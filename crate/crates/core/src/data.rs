//! Dataset ingestion, rating thresholding and seeded edge-level splits.

use std::fmt;
use std::fs;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::str::FromStr;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::graph::{Edge, EdgeList};

/// Rating at or above which a MovieLens interaction counts as positive.
pub const DEFAULT_MOVIELENS_THRESHOLD: f64 = 3.0;

pub const MANIFEST_FILE: &str = "split.json";
pub const TRAIN_FILE: &str = "train.tsv";
pub const TEST_FILE: &str = "test.tsv";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub enum DatasetFormat {
    /// `user item [rating] [timestamp ...]`, whitespace separated.
    #[default]
    #[serde(rename = "generic", alias = "generic-edge-list")]
    Generic,
    /// `user item rating timestamp`, as in MovieLens `u.data`.
    #[serde(rename = "movielens", alias = "movielens-ratings")]
    Movielens,
}

impl FromStr for DatasetFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "generic" | "generic-edge-list" => Ok(DatasetFormat::Generic),
            "movielens" | "movielens-ratings" => Ok(DatasetFormat::Movielens),
            other => Err(Error::InvalidParameter(format!("unknown dataset format {other:?}"))),
        }
    }
}

impl fmt::Display for DatasetFormat {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            DatasetFormat::Generic => "generic",
            DatasetFormat::Movielens => "movielens",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetConfig {
    pub path: PathBuf,
    #[serde(default)]
    pub format: DatasetFormat,
    /// Keep interactions rated at or above this value. For MovieLens input a
    /// missing threshold means [`DEFAULT_MOVIELENS_THRESHOLD`].
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rating_threshold: Option<f64>,
}

impl DatasetConfig {
    pub fn generic(path: impl Into<PathBuf>) -> Self {
        DatasetConfig {
            path: path.into(),
            format: DatasetFormat::Generic,
            rating_threshold: None,
        }
    }

    pub fn movielens(path: impl Into<PathBuf>) -> Self {
        DatasetConfig {
            path: path.into(),
            format: DatasetFormat::Movielens,
            rating_threshold: Some(DEFAULT_MOVIELENS_THRESHOLD),
        }
    }

    pub fn effective_threshold(&self) -> Option<f64> {
        match self.format {
            DatasetFormat::Movielens => {
                Some(self.rating_threshold.unwrap_or(DEFAULT_MOVIELENS_THRESHOLD))
            }
            DatasetFormat::Generic => self.rating_threshold,
        }
    }
}

/// Reads a dataset into a deduplicated edge list.
pub fn load(config: &DatasetConfig) -> Result<EdgeList> {
    let file = fs::File::open(&config.path)
        .map_err(|e| Error::io(format!("opening {}", config.path.display()), e))?;
    let edges = parse(
        BufReader::new(file),
        &config.path,
        config.format,
        config.effective_threshold(),
    )?;
    if edges.is_empty() {
        return Err(Error::EmptyDataset(config.path.clone()));
    }
    Ok(edges)
}

/// Parses interaction lines. Blank lines and lines starting with `#` are skipped.
pub fn parse<R: BufRead>(
    reader: R,
    path: &Path,
    format: DatasetFormat,
    threshold: Option<f64>,
) -> Result<EdgeList> {
    let mut edges = EdgeList::default();
    for (n, line) in reader.lines().enumerate() {
        let line = line.map_err(|e| Error::io(format!("reading {}", path.display()), e))?;
        let line_no = n + 1;
        let trimmed = line.trim();
        if trimmed.is_empty() || trimmed.starts_with('#') {
            continue;
        }
        let err = |message: String| Error::Parse {
            path: path.to_path_buf(),
            line: line_no,
            message,
        };
        let mut cols = trimmed.split_whitespace();
        let (Some(user), Some(item)) = (cols.next(), cols.next()) else {
            return Err(err("expected at least `user item`".into()));
        };
        let rating = cols.next();
        let needs_rating = format == DatasetFormat::Movielens || threshold.is_some();
        if needs_rating {
            let raw = rating.ok_or_else(|| err("missing rating column".into()))?;
            let value: f64 = raw
                .parse()
                .map_err(|_| err(format!("rating {raw:?} is not a number")))?;
            if threshold.is_some_and(|t| value < t) {
                continue;
            }
        }
        edges.push(Edge::new(user, item));
    }
    edges.dedup();
    Ok(edges)
}

/// Reads a plain `user item` file (extra columns ignored).
pub fn read_edge_list(path: &Path) -> Result<EdgeList> {
    load(&DatasetConfig::generic(path))
}

/// Writes `user<TAB>item` lines.
pub fn write_edge_list(path: &Path, edges: &EdgeList) -> Result<()> {
    let context = || format!("writing {}", path.display());
    let file = fs::File::create(path).map_err(|e| Error::io(context(), e))?;
    let mut w = BufWriter::new(file);
    for e in edges {
        writeln!(w, "{}\t{}", e.user, e.item).map_err(|e| Error::io(context(), e))?;
    }
    w.flush().map_err(|e| Error::io(context(), e))
}

/// Training fraction and seed of an edge-level random split.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SplitSpec {
    pub train_ratio: f64,
    pub seed: u64,
}

impl SplitSpec {
    pub fn new(train_ratio: f64, seed: u64) -> Result<Self> {
        let spec = SplitSpec { train_ratio, seed };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        if self.train_ratio > 0.0 && self.train_ratio < 1.0 {
            Ok(())
        } else {
            Err(Error::InvalidParameter(format!(
                "train ratio must lie in (0, 1), got {}",
                self.train_ratio
            )))
        }
    }

    pub fn train_size(&self, num_edges: usize) -> usize {
        (self.train_ratio * num_edges as f64).round() as usize
    }
}

/// Uniform random edge partition. A seeded Fisher–Yates shuffle picks the
/// training edges; both halves keep the input order.
pub fn split(edges: &EdgeList, spec: SplitSpec) -> Result<(EdgeList, EdgeList)> {
    spec.validate()?;
    let n = edges.len();
    let mut order: Vec<usize> = (0..n).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    order.shuffle(&mut rng);
    let mut in_train = vec![false; n];
    for &i in &order[..spec.train_size(n)] {
        in_train[i] = true;
    }
    let all = edges.as_slice();
    let train = (0..n).filter(|&i| in_train[i]).map(|i| all[i].clone()).collect();
    let test = (0..n).filter(|&i| !in_train[i]).map(|i| all[i].clone()).collect();
    Ok((train, test))
}

/// Order-independent SHA-256 of an edge set, hex encoded.
pub fn edge_set_hash<'a>(edges: impl IntoIterator<Item = &'a Edge>) -> String {
    let mut lines: Vec<String> = edges
        .into_iter()
        .map(|e| format!("{}\t{}\n", e.user, e.item))
        .collect();
    lines.sort_unstable();
    let mut hasher = Sha256::new();
    for line in &lines {
        hasher.update(line.as_bytes());
    }
    format!("{:x}", hasher.finalize())
}

/// Header written next to an exported split so it can be replayed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SplitManifest {
    pub seed: u64,
    pub ratio: f64,
    pub source_hash: String,
    pub train_file: String,
    pub test_file: String,
    pub train_edges: usize,
    pub test_edges: usize,
}

/// Writes `train.tsv`, `test.tsv` and `split.json` into `dir`.
pub fn export_split(
    dir: &Path,
    spec: SplitSpec,
    train: &EdgeList,
    test: &EdgeList,
) -> Result<SplitManifest> {
    fs::create_dir_all(dir).map_err(|e| Error::io(format!("creating {}", dir.display()), e))?;
    write_edge_list(&dir.join(TRAIN_FILE), train)?;
    write_edge_list(&dir.join(TEST_FILE), test)?;
    let manifest = SplitManifest {
        seed: spec.seed,
        ratio: spec.train_ratio,
        source_hash: edge_set_hash(train.iter().chain(test.iter())),
        train_file: TRAIN_FILE.into(),
        test_file: TEST_FILE.into(),
        train_edges: train.len(),
        test_edges: test.len(),
    };
    let path = dir.join(MANIFEST_FILE);
    let json = serde_json::to_string_pretty(&manifest)?;
    fs::write(&path, json + "\n").map_err(|e| Error::io(format!("writing {}", path.display()), e))?;
    Ok(manifest)
}

/// Reads a split written by [`export_split`] and checks it against its header.
pub fn import_split(dir: &Path) -> Result<(SplitManifest, EdgeList, EdgeList)> {
    let path = dir.join(MANIFEST_FILE);
    let text =
        fs::read_to_string(&path).map_err(|e| Error::io(format!("reading {}", path.display()), e))?;
    let manifest: SplitManifest = serde_json::from_str(&text)?;
    let train = read_edge_list(&dir.join(&manifest.train_file))?;
    let test = read_edge_list(&dir.join(&manifest.test_file))?;
    if train.len() != manifest.train_edges || test.len() != manifest.test_edges {
        return Err(Error::Manifest(format!(
            "expected {}/{} edges, found {}/{}",
            manifest.train_edges,
            manifest.test_edges,
            train.len(),
            test.len()
        )));
    }
    if edge_set_hash(train.iter().chain(test.iter())) != manifest.source_hash {
        return Err(Error::Manifest("edge set hash differs from header".into()));
    }
    Ok((manifest, train, test))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parse_str(text: &str, format: DatasetFormat, threshold: Option<f64>) -> Result<EdgeList> {
        parse(text.as_bytes(), Path::new("mem"), format, threshold)
    }

    fn numbered(n: usize) -> EdgeList {
        EdgeList::from_pairs((0..n).map(|i| (format!("u{}", i % 7), format!("i{i}"))))
    }

    #[test]
    fn generic_lines() {
        let edges = parse_str("u1 i1\nu1\ti2\n\nu2 i1 5 999\n# note\nu2 i3\nu3 i2\n", DatasetFormat::Generic, None).unwrap();
        assert_eq!(edges.len(), 5);
    }

    #[test]
    fn duplicates_are_collapsed() {
        let edges = parse_str("a x\na x\nb x\n", DatasetFormat::Generic, None).unwrap();
        assert_eq!(edges, EdgeList::from_pairs([("a", "x"), ("b", "x")]));
    }

    #[test]
    fn movielens_threshold_filters() {
        let text = "1\t10\t5\t1\n1\t11\t2\t2\n2\t10\t3\t3\n";
        let edges = parse_str(text, DatasetFormat::Movielens, Some(3.0)).unwrap();
        assert_eq!(edges, EdgeList::from_pairs([("1", "10"), ("2", "10")]));
    }

    #[test]
    fn malformed_line_reports_line_number() {
        let err = parse_str("1 10 5 0\n1\n", DatasetFormat::Movielens, Some(3.0)).unwrap_err();
        assert!(err.to_string().contains("mem:2"), "{err}");
        let err = parse_str("1 10 x 0\n", DatasetFormat::Movielens, None).unwrap_err();
        assert!(err.to_string().contains("mem:1"), "{err}");
        assert!(parse_str("a b\n", DatasetFormat::Generic, Some(3.0)).is_err());
    }

    #[test]
    fn everything_filtered_is_an_error() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("r.tsv");
        fs::write(&path, "1\t2\t1\t0\n").unwrap();
        let err = load(&DatasetConfig::movielens(&path)).unwrap_err();
        assert!(matches!(err, Error::EmptyDataset(_)));
    }

    #[test]
    fn split_sizes_round() {
        let (train, test) = split(&numbered(10), SplitSpec::new(0.8, 1).unwrap()).unwrap();
        assert_eq!((train.len(), test.len()), (8, 2));
        let (train, _) = split(&numbered(7), SplitSpec::new(0.5, 1).unwrap()).unwrap();
        assert_eq!(train.len(), 4);
    }

    #[test]
    fn split_is_deterministic_and_seed_sensitive() {
        let edges = numbered(200);
        let spec = SplitSpec::new(0.8, 42).unwrap();
        assert_eq!(split(&edges, spec).unwrap(), split(&edges, spec).unwrap());
        let other = split(&edges, SplitSpec::new(0.8, 43).unwrap()).unwrap();
        assert_ne!(split(&edges, spec).unwrap(), other);
    }

    #[test]
    fn bad_ratio_rejected() {
        assert!(SplitSpec::new(0.0, 1).is_err());
        assert!(SplitSpec::new(1.0, 1).is_err());
    }

    #[test]
    fn manifest_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let spec = SplitSpec::new(0.2, 9).unwrap();
        let edges = numbered(50);
        let (train, test) = split(&edges, spec).unwrap();
        let written = export_split(dir.path(), spec, &train, &test).unwrap();
        assert_eq!(written.source_hash, edge_set_hash(&edges));
        let (manifest, t2, s2) = import_split(dir.path()).unwrap();
        assert_eq!(manifest, written);
        assert_eq!((t2, s2), (train, test));

        fs::write(dir.path().join(TEST_FILE), "zz yy\n").unwrap();
        assert!(import_split(dir.path()).is_err());
    }

    #[test]
    fn formats_parse() {
        assert_eq!("movielens".parse::<DatasetFormat>().unwrap(), DatasetFormat::Movielens);
        assert_eq!("generic-edge-list".parse::<DatasetFormat>().unwrap(), DatasetFormat::Generic);
        assert!("csv".parse::<DatasetFormat>().is_err());
    }
}
