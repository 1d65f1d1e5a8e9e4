//! Accuracy, diversity and novelty of top-K lists against held-out edges.

use std::collections::HashSet;
use std::io::Write;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{EdgeList, InteractionGraph, Labels};
use crate::recommender::RecommendationList;

/// Held-out items per user, sorted and duplicate-free.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TestSet {
    per_user: Vec<Vec<usize>>,
}

impl TestSet {
    pub fn from_pairs(
        num_users: usize,
        pairs: impl IntoIterator<Item = (usize, usize)>,
    ) -> Result<Self> {
        let mut per_user = vec![Vec::new(); num_users];
        for (u, i) in pairs {
            per_user
                .get_mut(u)
                .ok_or(Error::IndexOutOfRange {
                    kind: "user",
                    index: u,
                    size: num_users,
                })?
                .push(i);
        }
        for row in &mut per_user {
            row.sort_unstable();
            row.dedup();
        }
        Ok(TestSet { per_user })
    }

    pub fn from_edges(labels: &Labels, edges: &EdgeList) -> Result<Self> {
        Self::from_pairs(labels.num_users(), labels.index_edges(edges)?)
    }

    pub fn items_of(&self, user: usize) -> &[usize] {
        self.per_user.get(user).map_or(&[], Vec::as_slice)
    }

    pub fn num_edges(&self) -> usize {
        self.per_user.iter().map(Vec::len).sum()
    }
}

/// Users with at least one training and at least one test interaction.
pub fn evaluated_users(train: &InteractionGraph, test: &TestSet) -> Vec<usize> {
    (0..train.num_users())
        .filter(|&u| train.user_degree(u) > 0 && !test.items_of(u).is_empty())
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub k: usize,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub diversity_in_top_k: usize,
    pub hd: f64,
    pub novelty: f64,
    pub users_evaluated: usize,
}

impl EvalReport {
    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    /// Writes the reports as CSV with a header row.
    pub fn write_csv<W: Write>(reports: &[EvalReport], out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        for r in reports {
            w.serialize(r)?;
        }
        w.flush().map_err(|e| Error::io("writing csv", e))?;
        Ok(())
    }
}

/// How HD@K is computed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase", tag = "mode")]
pub enum HdMode {
    #[default]
    Exact,
    /// Mean over `pairs` user pairs drawn uniformly with replacement.
    Sampled { pairs: usize, seed: u64 },
}

fn hits(list: &RecommendationList, test: &TestSet) -> usize {
    let truth = test.items_of(list.user);
    list.items
        .iter()
        .filter(|i| truth.binary_search(i).is_ok())
        .count()
}

/// Total number of recommended items that appear in the users' test sets.
pub fn total_hits(lists: &[RecommendationList], test: &TestSet) -> usize {
    lists.iter().map(|l| hits(l, test)).sum()
}

/// Mean per-user Precision@K (hits / K) and Recall@K (hits / |test items|).
pub fn precision_recall(
    lists: &[RecommendationList],
    test: &TestSet,
    k: usize,
) -> Result<(f64, f64)> {
    if lists.is_empty() {
        return Err(Error::EmptyEvaluation);
    }
    if k == 0 {
        return Err(Error::InvalidParameter("k must be at least 1".into()));
    }
    let mut precision = 0.0;
    let mut recall = 0.0;
    for list in lists {
        let relevant = test.items_of(list.user).len();
        if relevant == 0 {
            return Err(Error::InvalidParameter(format!(
                "user {} has no test items",
                list.user
            )));
        }
        let h = hits(list, test) as f64;
        precision += h / k as f64;
        recall += h / relevant as f64;
    }
    let n = lists.len() as f64;
    Ok((precision / n, recall / n))
}

/// Harmonic mean of aggregate precision and recall.
pub fn f1(precision: f64, recall: f64) -> f64 {
    if precision + recall == 0.0 {
        0.0
    } else {
        2.0 * precision * recall / (precision + recall)
    }
}

/// Number of distinct items recommended to at least one user.
pub fn diversity_in_top_k(lists: &[RecommendationList]) -> usize {
    lists
        .iter()
        .flat_map(|l| l.items.iter().copied())
        .collect::<HashSet<_>>()
        .len()
}

/// Mean over user pairs of `1 - |L_i ∩ L_j| / K`.
pub fn hamming_diversity(lists: &[RecommendationList], k: usize, mode: HdMode) -> Result<f64> {
    let n = lists.len();
    if n < 2 {
        return Err(Error::TooFewUsers(n));
    }
    if k == 0 {
        return Err(Error::InvalidParameter("k must be at least 1".into()));
    }
    match mode {
        HdMode::Exact => {
            // Σ over pairs of overlap = Σ over items of C(c, 2), where c is the
            // number of lists holding the item
            let mut holders: std::collections::HashMap<usize, u64> = Default::default();
            for l in lists {
                for &i in &l.items {
                    *holders.entry(i).or_default() += 1;
                }
            }
            let overlap: u64 = holders.values().map(|&c| c * (c - 1) / 2).sum();
            let pairs = (n as u64) * (n as u64 - 1) / 2;
            Ok(1.0 - overlap as f64 / (k as f64 * pairs as f64))
        }
        HdMode::Sampled { pairs, seed } => {
            if pairs == 0 {
                return Err(Error::InvalidParameter("sampled HD needs pairs > 0".into()));
            }
            let sets: Vec<HashSet<usize>> = lists
                .iter()
                .map(|l| l.items.iter().copied().collect())
                .collect();
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let mut total = 0.0;
            for _ in 0..pairs {
                let a = rng.gen_range(0..n);
                let mut b = rng.gen_range(0..n - 1);
                if b >= a {
                    b += 1;
                }
                let overlap = sets[a].intersection(&sets[b]).count();
                total += 1.0 - overlap as f64 / k as f64;
            }
            Ok(total / pairs as f64)
        }
    }
}

/// Mean self-information `log2(m / k_item)` over every recommended position,
/// with `m` the number of users and `k_item` the item's training degree.
pub fn novelty(lists: &[RecommendationList], train: &InteractionGraph) -> Result<f64> {
    let m = train.num_users() as f64;
    let mut total = 0.0;
    let mut count = 0usize;
    for l in lists {
        for &item in &l.items {
            train.check_item(item)?;
            let k = train.item_degree(item);
            if k == 0 {
                return Err(Error::InvalidParameter(format!(
                    "item {item} has no training interactions"
                )));
            }
            total += (m / k as f64).log2();
            count += 1;
        }
    }
    Ok(if count == 0 { 0.0 } else { total / count as f64 })
}

/// Computes every metric for lists that were produced for the evaluated users.
pub fn evaluate(
    train: &InteractionGraph,
    test: &TestSet,
    lists: &[RecommendationList],
    k: usize,
    hd_mode: HdMode,
) -> Result<EvalReport> {
    let (precision, recall) = precision_recall(lists, test, k)?;
    Ok(EvalReport {
        k,
        precision,
        recall,
        f1: f1(precision, recall),
        diversity_in_top_k: diversity_in_top_k(lists),
        hd: hamming_diversity(lists, k, hd_mode)?,
        novelty: novelty(lists, train)?,
        users_evaluated: lists.len(),
    })
}
