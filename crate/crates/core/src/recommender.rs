//! Per-user scoring and top-K selection.

use std::cmp::Ordering;
use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::InteractionGraph;
use crate::kernels::{Family, SimilarityModel};

/// List length used throughout the benchmark tables.
pub const DEFAULT_K: usize = 20;

/// What to do when fewer than K candidates have a positive score.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FillPolicy {
    /// Pad with the most popular training items the user has not collected.
    #[default]
    Popularity,
    /// Return the shorter list.
    Truncate,
}

impl FromStr for FillPolicy {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "popularity" => Ok(FillPolicy::Popularity),
            "truncate" => Ok(FillPolicy::Truncate),
            other => Err(Error::InvalidParameter(format!("unknown fill policy {other:?}"))),
        }
    }
}

impl fmt::Display for FillPolicy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            FillPolicy::Popularity => "popularity",
            FillPolicy::Truncate => "truncate",
        })
    }
}

/// Score of every item for one user; `None` marks items in the user's profile.
#[derive(Debug, Clone, PartialEq)]
pub struct UserScores {
    pub user: usize,
    pub scores: Vec<Option<f64>>,
}

impl UserScores {
    pub fn get(&self, item: usize) -> Option<f64> {
        self.scores.get(item).copied().flatten()
    }

    pub fn is_excluded(&self, item: usize) -> bool {
        self.scores[item].is_none()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RecommendationList {
    pub user: usize,
    pub items: Vec<usize>,
    pub scores: Vec<f64>,
}

impl RecommendationList {
    pub fn len(&self) -> usize {
        self.items.len()
    }

    pub fn is_empty(&self) -> bool {
        self.items.is_empty()
    }
}

/// Items with nonzero training degree, most popular first, ties by index.
#[derive(Debug, Clone)]
pub struct PopularityOrder(Vec<usize>);

impl PopularityOrder {
    pub fn from_graph(graph: &InteractionGraph) -> Self {
        let degrees = graph.item_degrees();
        let mut items: Vec<usize> = (0..degrees.len()).filter(|&i| degrees[i] > 0).collect();
        items.sort_by(|&a, &b| degrees[b].cmp(&degrees[a]).then(a.cmp(&b)));
        PopularityOrder(items)
    }

    pub fn items(&self) -> &[usize] {
        &self.0
    }
}

/// Scores every item for `user` as the summed similarity of the item to the
/// user's training items. For UserCF, the score of an item is the summed
/// cosine of the user to every other user who collected it.
pub fn score_user(
    model: &SimilarityModel,
    graph: &InteractionGraph,
    user: usize,
) -> Result<UserScores> {
    graph.check_user(user)?;
    model.check_graph(graph)?;
    let n = graph.num_items();
    let profile = graph.items_of(user);
    let mut acc = vec![0.0; n];
    if model.spec().family == Family::UserCf {
        accumulate_user_cf(graph, user, &mut acc);
    } else {
        let target_scale = model.accumulate_item_scores(graph, profile, &mut acc);
        for (a, &t) in acc.iter_mut().zip(target_scale) {
            *a *= t;
        }
    }
    let mut scores: Vec<Option<f64>> = acc.into_iter().map(Some).collect();
    for &item in profile {
        scores[item] = None;
    }
    Ok(UserScores { user, scores })
}

fn accumulate_user_cf(graph: &InteractionGraph, user: usize, acc: &mut [f64]) {
    let mut common = vec![0u32; graph.num_users()];
    let mut neighbours = Vec::new();
    for &item in graph.items_of(user) {
        for &other in graph.users_of(item) {
            if other == user {
                continue;
            }
            if common[other] == 0 {
                neighbours.push(other);
            }
            common[other] += 1;
        }
    }
    neighbours.sort_unstable();
    let ku = graph.user_degree(user) as f64;
    for other in neighbours {
        let sim = common[other] as f64 / (ku * graph.user_degree(other) as f64).sqrt();
        for &item in graph.items_of(other) {
            acc[item] += sim;
        }
    }
}

fn by_score_then_index(a: &(usize, f64), b: &(usize, f64)) -> Ordering {
    b.1.total_cmp(&a.1).then(a.0.cmp(&b.0))
}

/// The `k` best positive-score, non-excluded items, highest first, ties by
/// ascending index. Remaining slots follow `fill`.
pub fn top_k(
    scores: &UserScores,
    k: usize,
    fill: FillPolicy,
    popularity: &PopularityOrder,
) -> RecommendationList {
    let mut candidates: Vec<(usize, f64)> = scores
        .scores
        .iter()
        .enumerate()
        .filter_map(|(i, s)| match s {
            Some(v) if *v > 0.0 => Some((i, *v)),
            _ => None,
        })
        .collect();
    if k == 0 {
        candidates.clear();
    } else if candidates.len() > k {
        candidates.select_nth_unstable_by(k - 1, by_score_then_index);
        candidates.truncate(k);
    }
    candidates.sort_unstable_by(by_score_then_index);

    let mut items: Vec<usize> = candidates.iter().map(|c| c.0).collect();
    let mut values: Vec<f64> = candidates.iter().map(|c| c.1).collect();
    if fill == FillPolicy::Popularity && items.len() < k {
        let picked = items.clone();
        for &item in popularity.items() {
            if items.len() == k {
                break;
            }
            if scores.is_excluded(item) || picked.contains(&item) {
                continue;
            }
            items.push(item);
            values.push(scores.scores[item].unwrap_or(0.0));
        }
    }
    RecommendationList {
        user: scores.user,
        items,
        scores: values,
    }
}

/// Top-K lists for `users`, in the given order. Users are scored in parallel.
pub fn recommend_users(
    model: &SimilarityModel,
    graph: &InteractionGraph,
    users: &[usize],
    k: usize,
    fill: FillPolicy,
) -> Result<Vec<RecommendationList>> {
    if k == 0 {
        return Err(Error::InvalidParameter("k must be at least 1".into()));
    }
    let popularity = PopularityOrder::from_graph(graph);
    users
        .par_iter()
        .map(|&u| score_user(model, graph, u).map(|s| top_k(&s, k, fill, &popularity)))
        .collect()
}

/// Top-K lists for every user with at least one training interaction.
pub fn recommend_all(
    model: &SimilarityModel,
    graph: &InteractionGraph,
    k: usize,
    fill: FillPolicy,
) -> Result<Vec<RecommendationList>> {
    let users: Vec<usize> = (0..graph.num_users())
        .filter(|&u| graph.user_degree(u) > 0)
        .collect();
    recommend_users(model, graph, &users, k, fill)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kernels::{build_model, KernelSpec};
    use crate::testutil::toy_graph;

    fn md_model(g: &InteractionGraph) -> SimilarityModel {
        build_model(g, KernelSpec::plain(Family::Md), usize::MAX).unwrap()
    }

    #[test]
    fn md_scores_for_toy_user() {
        let g = toy_graph();
        let s = score_user(&md_model(&g), &g, 2).unwrap();
        assert!((s.get(0).unwrap() - 0.25).abs() < 1e-12);
        assert_eq!(s.get(2), Some(0.0));
        assert!(s.is_excluded(1));

        let pop = PopularityOrder::from_graph(&g);
        let list = top_k(&s, 1, FillPolicy::Truncate, &pop);
        assert_eq!(list.items, vec![0]);
    }

    #[test]
    fn user_owning_everything_gets_nothing() {
        let g = InteractionGraph::from_pairs(2, 2, [(0, 0), (0, 1), (1, 0)]).unwrap();
        let s = score_user(&md_model(&g), &g, 0).unwrap();
        assert!(s.scores.iter().all(Option::is_none));
        let pop = PopularityOrder::from_graph(&g);
        assert!(top_k(&s, 5, FillPolicy::Popularity, &pop).is_empty());
    }

    #[test]
    fn zero_scores_fall_back_to_popularity() {
        let scores = UserScores {
            user: 0,
            scores: vec![None, Some(0.0), Some(0.0), Some(0.0), Some(0.0)],
        };
        let g = InteractionGraph::from_pairs(
            3,
            5,
            [(0, 0), (1, 3), (2, 3), (1, 1), (2, 2), (0, 2)],
        )
        .unwrap();
        let pop = PopularityOrder::from_graph(&g);
        assert_eq!(pop.items(), &[2, 3, 0, 1]);
        let list = top_k(&scores, 2, FillPolicy::Popularity, &pop);
        assert_eq!(list.items, vec![2, 3]);
        assert!(top_k(&scores, 2, FillPolicy::Truncate, &pop).is_empty());
    }

    #[test]
    fn ties_go_to_lower_index() {
        let scores = UserScores {
            user: 0,
            scores: vec![Some(0.5), Some(0.7), Some(0.5), Some(0.7)],
        };
        let g = InteractionGraph::from_pairs(1, 4, [(0, 0)]).unwrap();
        let pop = PopularityOrder::from_graph(&g);
        let list = top_k(&scores, 3, FillPolicy::Truncate, &pop);
        assert_eq!(list.items, vec![1, 3, 0]);
        assert_eq!(list.scores, vec![0.7, 0.7, 0.5]);
    }

    #[test]
    fn itemcf_endpoint_of_hybrid_scores_like_itemcf() {
        let g = toy_graph();
        let cf = build_model(&g, KernelSpec::plain(Family::ItemCf), usize::MAX).unwrap();
        let hi = build_model(
            &g,
            KernelSpec::new(Family::HiMd, Some(1.0), None).unwrap(),
            usize::MAX,
        )
        .unwrap();
        for u in 0..3 {
            assert_eq!(score_user(&cf, &g, u).unwrap(), score_user(&hi, &g, u).unwrap());
        }
    }

    #[test]
    fn usercf_scores_follow_neighbours() {
        let g = toy_graph();
        let m = build_model(&g, KernelSpec::plain(Family::UserCf), usize::MAX).unwrap();
        // u1 = {i1, i2}; neighbours u2 (cos 1/2, owns i3) and u3 (cos 1/sqrt2, owns i2)
        let s = score_user(&m, &g, 0).unwrap();
        assert!((s.get(2).unwrap() - 0.5).abs() < 1e-12);
        assert!(s.is_excluded(0) && s.is_excluded(1));
    }

    #[test]
    fn fill_policy_parses() {
        assert_eq!("Popularity".parse::<FillPolicy>().unwrap(), FillPolicy::Popularity);
        assert_eq!("truncate".parse::<FillPolicy>().unwrap(), FillPolicy::Truncate);
        assert!("none".parse::<FillPolicy>().is_err());
    }

    #[test]
    fn zero_k_is_rejected() {
        let g = toy_graph();
        assert!(recommend_all(&md_model(&g), &g, 0, FillPolicy::Truncate).is_err());
    }
}
