//! Bipartite user–item interaction graph.
//!
//! Users and items are addressed by dense 0-based indices assigned in order of
//! first appearance. Both adjacency directions are kept sorted so that common
//! neighbours of two nodes can be found with a linear merge.

use std::collections::HashSet;
use std::sync::Arc;

use indexmap::IndexSet;

use crate::error::{Error, Result};

/// One implicit-feedback interaction between external user and item labels.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Edge {
    pub user: String,
    pub item: String,
}

impl Edge {
    pub fn new(user: impl Into<String>, item: impl Into<String>) -> Self {
        Edge {
            user: user.into(),
            item: item.into(),
        }
    }
}

/// Interactions keyed by external labels, before any index assignment.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct EdgeList {
    edges: Vec<Edge>,
}

impl EdgeList {
    pub fn new(edges: Vec<Edge>) -> Self {
        EdgeList { edges }
    }

    pub fn from_pairs<U, I>(pairs: impl IntoIterator<Item = (U, I)>) -> Self
    where
        U: Into<String>,
        I: Into<String>,
    {
        EdgeList {
            edges: pairs.into_iter().map(|(u, i)| Edge::new(u, i)).collect(),
        }
    }

    pub fn len(&self) -> usize {
        self.edges.len()
    }

    pub fn is_empty(&self) -> bool {
        self.edges.is_empty()
    }

    pub fn iter(&self) -> std::slice::Iter<'_, Edge> {
        self.edges.iter()
    }

    pub fn as_slice(&self) -> &[Edge] {
        &self.edges
    }

    pub fn push(&mut self, edge: Edge) {
        self.edges.push(edge);
    }

    /// Drops repeated (user, item) pairs, keeping the first occurrence.
    pub fn dedup(&mut self) {
        let mut seen = HashSet::with_capacity(self.edges.len());
        self.edges.retain(|e| seen.insert((e.user.clone(), e.item.clone())));
    }

    pub fn into_inner(self) -> Vec<Edge> {
        self.edges
    }
}

impl FromIterator<Edge> for EdgeList {
    fn from_iter<T: IntoIterator<Item = Edge>>(iter: T) -> Self {
        EdgeList {
            edges: iter.into_iter().collect(),
        }
    }
}

impl<'a> IntoIterator for &'a EdgeList {
    type Item = &'a Edge;
    type IntoIter = std::slice::Iter<'a, Edge>;

    fn into_iter(self) -> Self::IntoIter {
        self.edges.iter()
    }
}

/// Bidirectional map between external labels and dense indices.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Labels {
    users: IndexSet<String>,
    items: IndexSet<String>,
}

impl Labels {
    pub fn from_edges(edges: &EdgeList) -> Self {
        let mut labels = Labels::default();
        labels.extend(edges);
        labels
    }

    /// Appends labels not seen yet; existing indices are unchanged.
    pub fn extend(&mut self, edges: &EdgeList) {
        for e in edges {
            if !self.users.contains(&e.user) {
                self.users.insert(e.user.clone());
            }
            if !self.items.contains(&e.item) {
                self.items.insert(e.item.clone());
            }
        }
    }

    /// Labels `0..num_users` and `0..num_items` by their decimal index.
    pub fn numeric(num_users: usize, num_items: usize) -> Self {
        Labels {
            users: (0..num_users).map(|u| u.to_string()).collect(),
            items: (0..num_items).map(|i| i.to_string()).collect(),
        }
    }

    pub fn num_users(&self) -> usize {
        self.users.len()
    }

    pub fn num_items(&self) -> usize {
        self.items.len()
    }

    pub fn user_index(&self, label: &str) -> Option<usize> {
        self.users.get_index_of(label)
    }

    pub fn item_index(&self, label: &str) -> Option<usize> {
        self.items.get_index_of(label)
    }

    pub fn user_label(&self, index: usize) -> Option<&str> {
        self.users.get_index(index).map(String::as_str)
    }

    pub fn item_label(&self, index: usize) -> Option<&str> {
        self.items.get_index(index).map(String::as_str)
    }

    /// Resolves every edge to `(user, item)` indices.
    pub fn index_edges(&self, edges: &EdgeList) -> Result<Vec<(usize, usize)>> {
        edges
            .iter()
            .map(|e| {
                let u = self.user_index(&e.user).ok_or_else(|| Error::UnknownLabel {
                    kind: "user",
                    label: e.user.clone(),
                })?;
                let i = self.item_index(&e.item).ok_or_else(|| Error::UnknownLabel {
                    kind: "item",
                    label: e.item.clone(),
                })?;
                Ok((u, i))
            })
            .collect()
    }
}

/// Immutable bipartite adjacency with both directions sorted and deduplicated.
#[derive(Debug, Clone)]
pub struct InteractionGraph {
    user_items: Vec<Vec<usize>>,
    item_users: Vec<Vec<usize>>,
    num_edges: usize,
    labels: Arc<Labels>,
}

/// Builds a graph over a fresh label space assigned by first appearance.
pub fn build_graph(edges: &EdgeList) -> Result<InteractionGraph> {
    let labels = Arc::new(Labels::from_edges(edges));
    InteractionGraph::with_labels(edges, labels)
}

impl InteractionGraph {
    /// Builds a graph whose index space is `labels`, which may contain users
    /// and items that have no edge here (they get degree 0).
    pub fn with_labels(edges: &EdgeList, labels: Arc<Labels>) -> Result<Self> {
        if edges.is_empty() {
            return Err(Error::EmptyGraph);
        }
        let pairs = labels.index_edges(edges)?;
        Self::assemble(labels.num_users(), labels.num_items(), pairs, labels)
    }

    /// Builds a graph directly from index pairs, labelling nodes by index.
    pub fn from_pairs(
        num_users: usize,
        num_items: usize,
        pairs: impl IntoIterator<Item = (usize, usize)>,
    ) -> Result<Self> {
        let pairs: Vec<_> = pairs.into_iter().collect();
        if pairs.is_empty() {
            return Err(Error::EmptyGraph);
        }
        let labels = Arc::new(Labels::numeric(num_users, num_items));
        Self::assemble(num_users, num_items, pairs, labels)
    }

    fn assemble(
        num_users: usize,
        num_items: usize,
        pairs: Vec<(usize, usize)>,
        labels: Arc<Labels>,
    ) -> Result<Self> {
        let mut user_items = vec![Vec::new(); num_users];
        for (u, i) in pairs {
            if u >= num_users {
                return Err(Error::IndexOutOfRange {
                    kind: "user",
                    index: u,
                    size: num_users,
                });
            }
            if i >= num_items {
                return Err(Error::IndexOutOfRange {
                    kind: "item",
                    index: i,
                    size: num_items,
                });
            }
            user_items[u].push(i);
        }
        for row in &mut user_items {
            row.sort_unstable();
            row.dedup();
        }
        let item_users = transpose(&user_items, num_items);
        let num_edges = user_items.iter().map(Vec::len).sum();
        Ok(InteractionGraph {
            user_items,
            item_users,
            num_edges,
            labels,
        })
    }

    pub fn num_users(&self) -> usize {
        self.user_items.len()
    }

    pub fn num_items(&self) -> usize {
        self.item_users.len()
    }

    pub fn num_edges(&self) -> usize {
        self.num_edges
    }

    pub fn labels(&self) -> &Arc<Labels> {
        &self.labels
    }

    /// Items collected by `user`, ascending. Panics on an out-of-range index.
    pub fn items_of(&self, user: usize) -> &[usize] {
        &self.user_items[user]
    }

    /// Users who collected `item`, ascending. Panics on an out-of-range index.
    pub fn users_of(&self, item: usize) -> &[usize] {
        &self.item_users[item]
    }

    pub fn user_degree(&self, user: usize) -> usize {
        self.user_items[user].len()
    }

    pub fn item_degree(&self, item: usize) -> usize {
        self.item_users[item].len()
    }

    pub fn user_degrees(&self) -> Vec<usize> {
        self.user_items.iter().map(Vec::len).collect()
    }

    pub fn item_degrees(&self) -> Vec<usize> {
        self.item_users.iter().map(Vec::len).collect()
    }

    pub fn has_edge(&self, user: usize, item: usize) -> bool {
        self.user_items
            .get(user)
            .is_some_and(|row| row.binary_search(&item).is_ok())
    }

    pub(crate) fn check_item(&self, item: usize) -> Result<()> {
        if item < self.num_items() {
            Ok(())
        } else {
            Err(Error::IndexOutOfRange {
                kind: "item",
                index: item,
                size: self.num_items(),
            })
        }
    }

    pub(crate) fn check_user(&self, user: usize) -> Result<()> {
        if user < self.num_users() {
            Ok(())
        } else {
            Err(Error::IndexOutOfRange {
                kind: "user",
                index: user,
                size: self.num_users(),
            })
        }
    }

    /// Users who collected both `a` and `b`, ascending.
    pub fn common_users(&self, a: usize, b: usize) -> Result<Vec<usize>> {
        self.check_item(a)?;
        self.check_item(b)?;
        Ok(intersect_sorted(&self.item_users[a], &self.item_users[b]))
    }

    /// Items collected by both users `a` and `b`, ascending.
    pub fn common_items(&self, a: usize, b: usize) -> Result<Vec<usize>> {
        self.check_user(a)?;
        self.check_user(b)?;
        Ok(intersect_sorted(&self.user_items[a], &self.user_items[b]))
    }
}

fn transpose(rows: &[Vec<usize>], num_cols: usize) -> Vec<Vec<usize>> {
    let mut cols = vec![Vec::new(); num_cols];
    // rows are visited in ascending order, so each column comes out sorted
    for (r, row) in rows.iter().enumerate() {
        for &c in row {
            cols[c].push(r);
        }
    }
    cols
}

/// Merge-intersection of two ascending, duplicate-free slices.
pub fn intersect_sorted(a: &[usize], b: &[usize]) -> Vec<usize> {
    let mut out = Vec::new();
    let (mut i, mut j) = (0, 0);
    while i < a.len() && j < b.len() {
        match a[i].cmp(&b[j]) {
            std::cmp::Ordering::Less => i += 1,
            std::cmp::Ordering::Greater => j += 1,
            std::cmp::Ordering::Equal => {
                out.push(a[i]);
                i += 1;
                j += 1;
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn toy() -> InteractionGraph {
        let edges = EdgeList::from_pairs([
            ("u1", "i1"),
            ("u1", "i2"),
            ("u2", "i1"),
            ("u2", "i3"),
            ("u3", "i2"),
        ]);
        build_graph(&edges).unwrap()
    }

    #[test]
    fn toy_counts() {
        let g = toy();
        assert_eq!(g.num_users(), 3);
        assert_eq!(g.num_items(), 3);
        assert_eq!(g.item_degrees(), vec![2, 2, 1]);
        assert_eq!(g.user_degrees(), vec![2, 2, 1]);
        assert_eq!(g.num_edges(), 5);
    }

    #[test]
    fn duplicate_edge_collapses() {
        let g = build_graph(&EdgeList::from_pairs([("u1", "i1"), ("u1", "i1")])).unwrap();
        assert_eq!(g.num_edges(), 1);
        assert_eq!(g.item_degree(0), 1);
    }

    #[test]
    fn empty_graph_is_an_error() {
        let err = build_graph(&EdgeList::default()).unwrap_err();
        assert_eq!(err.to_string(), "empty graph");
    }

    #[test]
    fn common_users_on_toy() {
        let g = toy();
        assert_eq!(g.common_users(0, 1).unwrap(), vec![0]);
        assert!(g.common_users(1, 2).unwrap().is_empty());
        assert_eq!(g.common_users(0, 0).unwrap(), vec![0, 1]);
        assert!(g.common_users(0, 3).is_err());
    }

    #[test]
    fn labels_follow_first_appearance() {
        let g = toy();
        let labels = g.labels();
        assert_eq!(labels.user_index("u3"), Some(2));
        assert_eq!(labels.item_label(2), Some("i3"));
    }

    #[test]
    fn shared_labels_leave_unseen_nodes_isolated() {
        let all = EdgeList::from_pairs([("a", "x"), ("b", "y"), ("c", "z")]);
        let labels = Arc::new(Labels::from_edges(&all));
        let train = EdgeList::from_pairs([("a", "x"), ("b", "x")]);
        let g = InteractionGraph::with_labels(&train, labels).unwrap();
        assert_eq!(g.num_users(), 3);
        assert_eq!(g.num_items(), 3);
        assert_eq!(g.item_degrees(), vec![2, 0, 0]);
        assert_eq!(g.user_degree(2), 0);
    }

    #[test]
    fn out_of_range_pair_is_rejected() {
        assert!(InteractionGraph::from_pairs(2, 2, [(0, 2)]).is_err());
        assert!(InteractionGraph::from_pairs(2, 2, [(2, 0)]).is_err());
    }
}
