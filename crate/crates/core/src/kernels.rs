//! Item–item similarity kernels.
//!
//! Every item-side family except UserCF can be written in one closed form over
//! the common-neighbour statistics of a pair of items `(target, source)`:
//!
//! ```text
//! s = N^ε · C^(1-ε) · k_target^(-a) · k_source^(-b)
//! ```
//!
//! where `N` is the number of common users, `C` is the sum of `1/k_l` over
//! those users, and `(ε, a, b)` depend on the family and its parameters (see
//! [`KernelForm`]). The per-pair functions [`sim_itemcf`], [`sim_diffusion`]
//! and [`sim_hybrid`] evaluate the textbook formulas directly; the
//! [`SimilarityModel`] uses the closed form, which lets `N` and `C` be computed
//! once per training graph and shared across a whole parameter grid.
//!
//! Direction convention: `s(target, source)` is the similarity of a candidate
//! item `target` to an item `source` already collected by the user.

use std::collections::HashMap;
use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::InteractionGraph;

/// Item count at or below which [`build_model`] precomputes the full table.
pub const DEFAULT_MATERIALIZE_THRESHOLD: usize = 20_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Family {
    #[serde(rename = "ItemCF")]
    ItemCf,
    #[serde(rename = "UserCF")]
    UserCf,
    #[serde(rename = "MD")]
    Md,
    #[serde(rename = "HC")]
    Hc,
    #[serde(rename = "HHP")]
    Hhp,
    #[serde(rename = "BHC")]
    Bhc,
    #[serde(rename = "BD")]
    Bd,
    #[serde(rename = "HI-MD")]
    HiMd,
    #[serde(rename = "HI-HHP")]
    HiHhp,
    #[serde(rename = "HI-BHC")]
    HiBhc,
    #[serde(rename = "HI-BD")]
    HiBd,
}

impl Family {
    pub const ALL: [Family; 11] = [
        Family::ItemCf,
        Family::UserCf,
        Family::Md,
        Family::Hc,
        Family::Hhp,
        Family::Bhc,
        Family::Bd,
        Family::HiMd,
        Family::HiHhp,
        Family::HiBhc,
        Family::HiBd,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Family::ItemCf => "ItemCF",
            Family::UserCf => "UserCF",
            Family::Md => "MD",
            Family::Hc => "HC",
            Family::Hhp => "HHP",
            Family::Bhc => "BHC",
            Family::Bd => "BD",
            Family::HiMd => "HI-MD",
            Family::HiHhp => "HI-HHP",
            Family::HiBhc => "HI-BHC",
            Family::HiBd => "HI-BD",
        }
    }

    pub fn uses_epsilon(self) -> bool {
        self.diffusion_base().is_some()
    }

    pub fn uses_lambda(self) -> bool {
        matches!(
            self,
            Family::Hhp
                | Family::Bhc
                | Family::Bd
                | Family::HiHhp
                | Family::HiBhc
                | Family::HiBd
        )
    }

    pub fn is_diffusion(self) -> bool {
        matches!(
            self,
            Family::Md | Family::Hc | Family::Hhp | Family::Bhc | Family::Bd
        )
    }

    /// The diffusion family an HI-hybrid blends with ItemCF.
    pub fn diffusion_base(self) -> Option<Family> {
        match self {
            Family::HiMd => Some(Family::Md),
            Family::HiHhp => Some(Family::Hhp),
            Family::HiBhc => Some(Family::Bhc),
            Family::HiBd => Some(Family::Bd),
            _ => None,
        }
    }

    /// The HI-hybrid built on this diffusion family, if there is one.
    pub fn hybrid(self) -> Option<Family> {
        match self {
            Family::Md => Some(Family::HiMd),
            Family::Hhp => Some(Family::HiHhp),
            Family::Bhc => Some(Family::HiBhc),
            Family::Bd => Some(Family::HiBd),
            _ => None,
        }
    }

    /// Degree exponents `(a, b)` of a diffusion family, so that
    /// `s = C / (k_target^a · k_source^b)`.
    fn diffusion_exponents(self, lambda: f64) -> (f64, f64) {
        match self {
            Family::Md => (0.0, 1.0),
            Family::Hc => (1.0, 0.0),
            Family::Hhp => (1.0 - lambda, lambda),
            Family::Bhc => (lambda, 0.0),
            Family::Bd => (lambda, lambda),
            _ => unreachable!("{self} is not a diffusion family"),
        }
    }
}

impl fmt::Display for Family {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Family {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let wanted = s.trim().to_ascii_uppercase().replace('_', "-");
        Family::ALL
            .into_iter()
            .find(|f| f.name().to_ascii_uppercase() == wanted)
            .ok_or_else(|| Error::InvalidParameter(format!("unknown kernel family {s:?}")))
    }
}

/// A kernel family together with its mixing exponent ε and tuning exponent λ.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KernelSpec {
    pub family: Family,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub epsilon: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lambda: Option<f64>,
}

impl KernelSpec {
    /// Builds and validates a spec. Parameters the family does not use must be
    /// `None`; parameters it does use are required.
    pub fn new(family: Family, epsilon: Option<f64>, lambda: Option<f64>) -> Result<Self> {
        let spec = KernelSpec {
            family,
            epsilon,
            lambda,
        };
        spec.validate()?;
        Ok(spec)
    }

    /// Spec for a parameter-free family. Panics if `family` takes parameters.
    pub fn plain(family: Family) -> Self {
        Self::new(family, None, None).expect("family requires parameters")
    }

    pub fn validate(&self) -> Result<()> {
        check_param(self.family, "epsilon", self.epsilon, self.family.uses_epsilon())?;
        check_param(self.family, "lambda", self.lambda, self.family.uses_lambda())
    }

    pub fn epsilon_or_zero(&self) -> f64 {
        self.epsilon.unwrap_or(0.0)
    }

    pub fn lambda_or_zero(&self) -> f64 {
        self.lambda.unwrap_or(0.0)
    }

    /// Closed-form exponents; `None` for UserCF, which is user-side.
    pub fn form(&self) -> Option<KernelForm> {
        let family = self.family;
        let lambda = self.lambda_or_zero();
        match family {
            Family::UserCf => None,
            Family::ItemCf => Some(KernelForm {
                epsilon: 1.0,
                target_exp: 0.5,
                source_exp: 0.5,
            }),
            f if f.is_diffusion() => {
                let (a, b) = f.diffusion_exponents(lambda);
                Some(KernelForm {
                    epsilon: 0.0,
                    target_exp: a,
                    source_exp: b,
                })
            }
            f => {
                let base = f.diffusion_base().expect("hybrid family");
                let eps = self.epsilon_or_zero();
                let (a, b) = base.diffusion_exponents(lambda);
                Some(KernelForm {
                    epsilon: eps,
                    target_exp: eps * 0.5 + (1.0 - eps) * a,
                    source_exp: eps * 0.5 + (1.0 - eps) * b,
                })
            }
        }
    }
}

impl fmt::Display for KernelSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.family)?;
        if let Some(e) = self.epsilon {
            write!(f, " eps={e}")?;
        }
        if let Some(l) = self.lambda {
            write!(f, " lambda={l}")?;
        }
        Ok(())
    }
}

fn check_param(family: Family, name: &str, value: Option<f64>, used: bool) -> Result<()> {
    match (value, used) {
        (Some(v), true) if (0.0..=1.0).contains(&v) => Ok(()),
        (Some(v), true) => Err(Error::InvalidParameter(format!(
            "{name} must lie in [0, 1], got {v}"
        ))),
        (Some(_), false) => Err(Error::InvalidParameter(format!(
            "{family} does not take {name}"
        ))),
        (None, true) => Err(Error::InvalidParameter(format!("{family} requires {name}"))),
        (None, false) => Ok(()),
    }
}

/// Exponents of the closed form `N^ε · C^(1-ε) · k_target^(-a) · k_source^(-b)`.
///
/// Two specs with the same form produce bit-identical models, which the sweep
/// uses to skip re-evaluating equivalent grid points (HI-X at ε=0 versus X,
/// every HI-X at ε=1 versus ItemCF, HHP at λ=1 versus MD, and so on).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KernelForm {
    pub epsilon: f64,
    pub target_exp: f64,
    pub source_exp: f64,
}

impl KernelForm {
    pub fn key(&self) -> (u64, u64, u64) {
        (
            self.epsilon.to_bits(),
            self.target_exp.to_bits(),
            self.source_exp.to_bits(),
        )
    }

    /// `N^ε · C^(1-ε)`, zero whenever the pair has no common user.
    #[inline]
    pub fn blend(&self, common: u32, resource: f64) -> f64 {
        if common == 0 {
            0.0
        } else if self.epsilon == 0.0 {
            resource
        } else if self.epsilon == 1.0 {
            common as f64
        } else {
            (common as f64).powf(self.epsilon) * resource.powf(1.0 - self.epsilon)
        }
    }

    fn degree_scales(&self, degrees: &[usize], exp: f64) -> Vec<f64> {
        degrees
            .iter()
            .map(|&k| if k == 0 { 0.0 } else { (k as f64).powf(-exp) })
            .collect()
    }
}

/// Cosine similarity of two items over their user sets.
pub fn sim_itemcf(graph: &InteractionGraph, a: usize, b: usize) -> Result<f64> {
    let common = graph.common_users(a, b)?;
    let (ka, kb) = (graph.item_degree(a), graph.item_degree(b));
    if common.is_empty() || ka == 0 || kb == 0 {
        return Ok(0.0);
    }
    Ok(common.len() as f64 / ((ka * kb) as f64).sqrt())
}

/// Cosine similarity of two users over their item sets.
pub fn sim_usercf(graph: &InteractionGraph, a: usize, b: usize) -> Result<f64> {
    let common = graph.common_items(a, b)?;
    let (ka, kb) = (graph.user_degree(a), graph.user_degree(b));
    if common.is_empty() || ka == 0 || kb == 0 {
        return Ok(0.0);
    }
    Ok(common.len() as f64 / ((ka * kb) as f64).sqrt())
}

/// Two-step resource-spreading similarity of `target` to `source` for one of
/// MD, HC, HHP, BHC or BD. `lambda` is ignored by MD and HC.
pub fn sim_diffusion(
    graph: &InteractionGraph,
    target: usize,
    source: usize,
    family: Family,
    lambda: f64,
) -> Result<f64> {
    if !family.is_diffusion() {
        return Err(Error::InvalidParameter(format!(
            "{family} is not a diffusion family"
        )));
    }
    if !(0.0..=1.0).contains(&lambda) {
        return Err(Error::InvalidParameter(format!(
            "lambda must lie in [0, 1], got {lambda}"
        )));
    }
    let common = graph.common_users(target, source)?;
    let resource: f64 = common.iter().map(|&l| 1.0 / graph.user_degree(l) as f64).sum();
    if resource == 0.0 {
        return Ok(0.0);
    }
    let kt = graph.item_degree(target) as f64;
    let ks = graph.item_degree(source) as f64;
    let s = match family {
        Family::Md => resource / ks,
        Family::Hc => resource / kt,
        Family::Hhp => resource / (kt.powf(1.0 - lambda) * ks.powf(lambda)),
        Family::Bhc => resource / kt.powf(lambda),
        Family::Bd => resource / (kt * ks).powf(lambda),
        _ => unreachable!(),
    };
    Ok(s)
}

/// Geometric blend `itemcf^ε · diffusion^(1-ε)` of ItemCF with a diffusion
/// family (MD, HHP, BHC or BD).
pub fn sim_hybrid(
    graph: &InteractionGraph,
    target: usize,
    source: usize,
    base: Family,
    epsilon: f64,
    lambda: f64,
) -> Result<f64> {
    if base.hybrid().is_none() {
        return Err(Error::InvalidParameter(format!(
            "{base} cannot be blended with ItemCF"
        )));
    }
    if !(0.0..=1.0).contains(&epsilon) {
        return Err(Error::InvalidParameter(format!(
            "epsilon must lie in [0, 1], got {epsilon}"
        )));
    }
    let cf = sim_itemcf(graph, target, source)?;
    let diff = sim_diffusion(graph, target, source, base, lambda)?;
    if cf == 0.0 || diff == 0.0 {
        return Ok(0.0);
    }
    Ok(cf.powf(epsilon) * diff.powf(1.0 - epsilon))
}

/// Evaluates `s(target, source)` for any item-side spec through the per-pair
/// functions above.
pub fn sim_pair(
    graph: &InteractionGraph,
    spec: &KernelSpec,
    target: usize,
    source: usize,
) -> Result<f64> {
    spec.validate()?;
    match spec.family {
        Family::ItemCf => sim_itemcf(graph, target, source),
        Family::UserCf => Err(Error::InvalidParameter(
            "UserCF has no item-item similarity".into(),
        )),
        f if f.is_diffusion() => sim_diffusion(graph, target, source, f, spec.lambda_or_zero()),
        f => sim_hybrid(
            graph,
            target,
            source,
            f.diffusion_base().unwrap(),
            spec.epsilon_or_zero(),
            spec.lambda_or_zero(),
        ),
    }
}

/// Scratch buffers for accumulating one co-occurrence row.
struct RowScratch {
    common: Vec<u32>,
    resource: Vec<f64>,
    touched: Vec<usize>,
}

impl RowScratch {
    fn new(num_items: usize) -> Self {
        RowScratch {
            common: vec![0; num_items],
            resource: vec![0.0; num_items],
            touched: Vec::new(),
        }
    }

    /// Fills `out` with `(other, N, C)` for every item co-occurring with
    /// `source`, ascending by item. `C` accumulates in ascending user order,
    /// matching a merge over the two sorted user lists.
    fn row(&mut self, graph: &InteractionGraph, source: usize, out: &mut Vec<(u32, u32, f64)>) {
        out.clear();
        for &l in graph.users_of(source) {
            let w = 1.0 / graph.user_degree(l) as f64;
            for &other in graph.items_of(l) {
                if self.common[other] == 0 {
                    self.touched.push(other);
                }
                self.common[other] += 1;
                self.resource[other] += w;
            }
        }
        self.touched.sort_unstable();
        for &other in &self.touched {
            out.push((other as u32, self.common[other], self.resource[other]));
            self.common[other] = 0;
            self.resource[other] = 0.0;
        }
        self.touched.clear();
    }
}

/// Parameter-independent common-neighbour statistics for every item pair
/// sharing at least one user, stored as sparse rows keyed by source item.
///
/// Both `N` and `C` are symmetric, so row `b` also lists column `b`.
#[derive(Debug, Clone)]
pub struct Cooccurrence {
    row_ptr: Vec<usize>,
    cols: Vec<u32>,
    common: Vec<u32>,
    resource: Vec<f64>,
    num_items: usize,
}

impl Cooccurrence {
    pub fn build(graph: &InteractionGraph) -> Self {
        let n = graph.num_items();
        let rows: Vec<Vec<(u32, u32, f64)>> = (0..n)
            .into_par_iter()
            .map_init(
                || RowScratch::new(n),
                |scratch, source| {
                    let mut row = Vec::new();
                    scratch.row(graph, source, &mut row);
                    row
                },
            )
            .collect();
        let nnz = rows.iter().map(Vec::len).sum();
        let mut row_ptr = Vec::with_capacity(n + 1);
        let mut cols = Vec::with_capacity(nnz);
        let mut common = Vec::with_capacity(nnz);
        let mut resource = Vec::with_capacity(nnz);
        row_ptr.push(0);
        for row in rows {
            for (c, k, r) in row {
                cols.push(c);
                common.push(k);
                resource.push(r);
            }
            row_ptr.push(cols.len());
        }
        Cooccurrence {
            row_ptr,
            cols,
            common,
            resource,
            num_items: n,
        }
    }

    pub fn num_items(&self) -> usize {
        self.num_items
    }

    pub fn nnz(&self) -> usize {
        self.cols.len()
    }

    fn range(&self, source: usize) -> std::ops::Range<usize> {
        self.row_ptr[source]..self.row_ptr[source + 1]
    }

    /// `(N, C)` for the pair, or `(0, 0.0)` when they share no user.
    pub fn get(&self, target: usize, source: usize) -> (u32, f64) {
        let range = self.range(source);
        match self.cols[range.clone()].binary_search(&(target as u32)) {
            Ok(pos) => {
                let idx = range.start + pos;
                (self.common[idx], self.resource[idx])
            }
            Err(_) => (0, 0.0),
        }
    }

    /// Applies `form.blend` to every stored pair.
    pub fn blend(&self, form: &KernelForm) -> Vec<f64> {
        self.common
            .par_iter()
            .zip(self.resource.par_iter())
            .map(|(&k, &r)| form.blend(k, r))
            .collect()
    }
}

/// Materialized `N^ε · C^(1-ε)` values aligned with a [`Cooccurrence`].
#[derive(Debug, Clone)]
pub struct BlendedTable {
    cooc: Arc<Cooccurrence>,
    epsilon: f64,
    values: Arc<Vec<f64>>,
}

#[derive(Debug, Clone)]
enum Repr {
    Materialized(BlendedTable),
    Lazy,
    UserCosine,
}

/// Directed item–item similarity produced by a kernel over a training graph.
///
/// Both representations return identical values for the same graph and spec:
/// the lazy one recomputes the co-occurrence row of each source item on demand
/// with the same accumulation order as the materialized table.
#[derive(Debug, Clone)]
pub struct SimilarityModel {
    spec: KernelSpec,
    form: Option<KernelForm>,
    repr: Repr,
    target_scale: Vec<f64>,
    source_scale: Vec<f64>,
    shape: (usize, usize, usize),
}

/// Builds a model, precomputing the table when the graph has at most
/// `materialize_threshold` items.
pub fn build_model(
    graph: &InteractionGraph,
    spec: KernelSpec,
    materialize_threshold: usize,
) -> Result<SimilarityModel> {
    spec.validate()?;
    if spec.family == Family::UserCf || graph.num_items() > materialize_threshold {
        return SimilarityModel::lazy(graph, spec);
    }
    let cooc = Arc::new(Cooccurrence::build(graph));
    SimilarityModel::from_cooccurrence(graph, spec, cooc)
}

fn graph_shape(graph: &InteractionGraph) -> (usize, usize, usize) {
    (graph.num_users(), graph.num_items(), graph.num_edges())
}

impl SimilarityModel {
    pub fn lazy(graph: &InteractionGraph, spec: KernelSpec) -> Result<Self> {
        spec.validate()?;
        let form = spec.form();
        let (repr, target_scale, source_scale) = match form {
            None => (Repr::UserCosine, Vec::new(), Vec::new()),
            Some(form) => {
                let degrees = graph.item_degrees();
                (
                    Repr::Lazy,
                    form.degree_scales(&degrees, form.target_exp),
                    form.degree_scales(&degrees, form.source_exp),
                )
            }
        };
        Ok(SimilarityModel {
            spec,
            form,
            repr,
            target_scale,
            source_scale,
            shape: graph_shape(graph),
        })
    }

    /// Materialized model over a shared co-occurrence table.
    pub fn from_cooccurrence(
        graph: &InteractionGraph,
        spec: KernelSpec,
        cooc: Arc<Cooccurrence>,
    ) -> Result<Self> {
        spec.validate()?;
        let Some(form) = spec.form() else {
            return Self::lazy(graph, spec);
        };
        let values = Arc::new(cooc.blend(&form));
        let table = BlendedTable {
            cooc,
            epsilon: form.epsilon,
            values,
        };
        Self::from_blended(graph, spec, table)
    }

    /// Materialized model reusing an already blended table; the table's ε
    /// must match the closed form of `spec`.
    pub fn from_blended(
        graph: &InteractionGraph,
        spec: KernelSpec,
        table: BlendedTable,
    ) -> Result<Self> {
        spec.validate()?;
        let form = spec
            .form()
            .ok_or_else(|| Error::InvalidParameter("UserCF cannot use a blended table".into()))?;
        if form.epsilon.to_bits() != table.epsilon.to_bits() {
            return Err(Error::InvalidParameter(format!(
                "blended table built for epsilon {} but spec needs {}",
                table.epsilon, form.epsilon
            )));
        }
        if table.cooc.num_items() != graph.num_items() {
            return Err(Error::InvalidParameter(
                "co-occurrence table was built on a different graph".into(),
            ));
        }
        let degrees = graph.item_degrees();
        Ok(SimilarityModel {
            spec,
            form: Some(form),
            target_scale: form.degree_scales(&degrees, form.target_exp),
            source_scale: form.degree_scales(&degrees, form.source_exp),
            repr: Repr::Materialized(table),
            shape: graph_shape(graph),
        })
    }

    pub fn spec(&self) -> &KernelSpec {
        &self.spec
    }

    pub fn is_materialized(&self) -> bool {
        matches!(self.repr, Repr::Materialized(_))
    }

    pub(crate) fn check_graph(&self, graph: &InteractionGraph) -> Result<()> {
        if self.shape != graph_shape(graph) {
            return Err(Error::InvalidParameter(
                "model was built on a different graph".into(),
            ));
        }
        Ok(())
    }

    /// `s(target, source)`. For UserCF the arguments are user indices and the
    /// result is the user–user cosine.
    pub fn similarity(&self, graph: &InteractionGraph, target: usize, source: usize) -> Result<f64> {
        self.check_graph(graph)?;
        let form = match (&self.repr, self.form) {
            (Repr::UserCosine, _) => return sim_usercf(graph, target, source),
            (_, Some(form)) => form,
            _ => unreachable!(),
        };
        graph.check_item(target)?;
        graph.check_item(source)?;
        let blended = match &self.repr {
            Repr::Materialized(table) => {
                let range = table.cooc.range(source);
                match table.cooc.cols[range.clone()].binary_search(&(target as u32)) {
                    Ok(pos) => table.values[range.start + pos],
                    Err(_) => 0.0,
                }
            }
            Repr::Lazy => {
                let common = graph.common_users(target, source)?;
                let resource: f64 = common
                    .iter()
                    .map(|&l| 1.0 / graph.user_degree(l) as f64)
                    .sum();
                form.blend(common.len() as u32, resource)
            }
            Repr::UserCosine => unreachable!(),
        };
        Ok(self.target_scale[target] * (blended * self.source_scale[source]))
    }

    /// Full `n × n` table indexed `[target][source]`, for inspection on small graphs.
    pub fn to_dense(&self, graph: &InteractionGraph) -> Result<Vec<Vec<f64>>> {
        let n = graph.num_items();
        (0..n)
            .map(|t| (0..n).map(|s| self.similarity(graph, t, s)).collect())
            .collect()
    }

    /// Adds `Σ_{source ∈ profile} s(target, source)` into `acc` for every
    /// target, before the target-side degree scaling. Returns the target
    /// scale to apply afterwards.
    pub(crate) fn accumulate_item_scores(
        &self,
        graph: &InteractionGraph,
        profile: &[usize],
        acc: &mut [f64],
    ) -> &[f64] {
        let form = self.form.expect("item-side model");
        match &self.repr {
            Repr::Materialized(table) => {
                let cooc = &table.cooc;
                for &source in profile {
                    let w = self.source_scale[source];
                    if w == 0.0 {
                        continue;
                    }
                    let range = cooc.range(source);
                    let cols = &cooc.cols[range.clone()];
                    let vals = &table.values[range];
                    for (&t, &v) in cols.iter().zip(vals) {
                        acc[t as usize] += v * w;
                    }
                }
            }
            Repr::Lazy => {
                let mut scratch = RowScratch::new(graph.num_items());
                let mut row = Vec::new();
                for &source in profile {
                    let w = self.source_scale[source];
                    if w == 0.0 {
                        continue;
                    }
                    scratch.row(graph, source, &mut row);
                    for &(t, k, r) in &row {
                        acc[t as usize] += form.blend(k, r) * w;
                    }
                }
            }
            Repr::UserCosine => unreachable!(),
        }
        &self.target_scale
    }
}

/// Shares one co-occurrence table and a small set of blended tables across
/// many specs over the same training graph.
#[derive(Debug)]
pub struct KernelCache {
    cooc: Arc<Cooccurrence>,
    blended: HashMap<u64, BlendedTable>,
}

impl KernelCache {
    pub fn new(graph: &InteractionGraph) -> Self {
        KernelCache {
            cooc: Arc::new(Cooccurrence::build(graph)),
            blended: HashMap::new(),
        }
    }

    pub fn cooccurrence(&self) -> &Arc<Cooccurrence> {
        &self.cooc
    }

    /// Blended table for `form.epsilon`, computed on first request.
    pub fn blended_table(&mut self, form: &KernelForm) -> BlendedTable {
        let cooc = &self.cooc;
        self.blended
            .entry(form.epsilon.to_bits())
            .or_insert_with(|| BlendedTable {
                cooc: Arc::clone(cooc),
                epsilon: form.epsilon,
                values: Arc::new(cooc.blend(form)),
            })
            .clone()
    }

    /// Builds a model for `spec`, blending `N` and `C` at most once per ε.
    pub fn model(&mut self, graph: &InteractionGraph, spec: KernelSpec) -> Result<SimilarityModel> {
        spec.validate()?;
        let Some(form) = spec.form() else {
            return SimilarityModel::lazy(graph, spec);
        };
        let table = self.blended_table(&form);
        SimilarityModel::from_blended(graph, spec, table)
    }

    /// Drops cached blended tables; the co-occurrence table is kept.
    pub fn clear_blended(&mut self) {
        self.blended.clear();
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::testutil::toy_graph;

    const TOL: f64 = 1e-12;

    fn spec(family: Family, eps: Option<f64>, lambda: Option<f64>) -> KernelSpec {
        KernelSpec::new(family, eps, lambda).unwrap()
    }

    #[test]
    fn itemcf_toy_values() {
        let g = toy_graph();
        assert!((sim_itemcf(&g, 0, 1).unwrap() - 0.5).abs() < TOL);
        assert_eq!(sim_itemcf(&g, 1, 2).unwrap(), 0.0);
        assert!((sim_itemcf(&g, 0, 2).unwrap() - 0.5f64.sqrt()).abs() < TOL);
    }

    #[test]
    fn md_toy_values_are_asymmetric() {
        let g = toy_graph();
        assert!((sim_diffusion(&g, 0, 2, Family::Md, 0.0).unwrap() - 0.5).abs() < TOL);
        assert!((sim_diffusion(&g, 2, 0, Family::Md, 0.0).unwrap() - 0.25).abs() < TOL);
    }

    #[test]
    fn hybrid_toy_value() {
        let g = toy_graph();
        let v = sim_hybrid(&g, 0, 2, Family::Md, 0.5, 0.0).unwrap();
        assert!((v - 0.594_603_557_501_360_5).abs() < 1e-12, "{v}");
        assert_eq!(sim_hybrid(&g, 1, 2, Family::Md, 0.0, 0.0).unwrap(), 0.0);
        assert_eq!(sim_hybrid(&g, 1, 2, Family::Md, 1.0, 0.0).unwrap(), 0.0);
    }

    #[test]
    fn usercf_toy_values() {
        let g = toy_graph();
        assert!((sim_usercf(&g, 0, 1).unwrap() - 0.5).abs() < TOL);
        assert_eq!(sim_usercf(&g, 2, 1).unwrap(), 0.0);
        assert!((sim_usercf(&g, 0, 0).unwrap() - 1.0).abs() < TOL);
    }

    #[test]
    fn hybrid_endpoints_match_components() {
        let g = toy_graph();
        for t in 0..3 {
            for s in 0..3 {
                let md = sim_diffusion(&g, t, s, Family::Md, 0.0).unwrap();
                let cf = sim_itemcf(&g, t, s).unwrap();
                assert_eq!(sim_hybrid(&g, t, s, Family::Md, 0.0, 0.0).unwrap(), md);
                assert_eq!(sim_hybrid(&g, t, s, Family::Md, 1.0, 0.0).unwrap(), cf);
            }
        }
    }

    #[test]
    fn spec_validation() {
        assert!(KernelSpec::new(Family::Md, Some(0.5), None).is_err());
        assert!(KernelSpec::new(Family::Hhp, None, None).is_err());
        assert!(KernelSpec::new(Family::HiHhp, Some(0.2), Some(1.5)).is_err());
        assert!(KernelSpec::new(Family::HiMd, Some(0.2), Some(0.5)).is_err());
        assert!(KernelSpec::new(Family::HiBd, Some(0.2), Some(0.5)).is_ok());
        assert!(KernelSpec::new(Family::ItemCf, None, None).is_ok());
    }

    #[test]
    fn family_names_round_trip() {
        for f in Family::ALL {
            assert_eq!(f.name().parse::<Family>().unwrap(), f);
            let json = serde_json::to_string(&f).unwrap();
            assert_eq!(json, format!("\"{}\"", f.name()));
        }
        assert_eq!("hi_hhp".parse::<Family>().unwrap(), Family::HiHhp);
        assert!("XYZ".parse::<Family>().is_err());
    }

    #[test]
    fn sim_diffusion_rejects_non_diffusion_family() {
        let g = toy_graph();
        assert!(sim_diffusion(&g, 0, 1, Family::ItemCf, 0.0).is_err());
        assert!(sim_hybrid(&g, 0, 1, Family::Hc, 0.5, 0.0).is_err());
    }

    #[test]
    fn materialized_and_lazy_agree_on_toy() {
        let g = toy_graph();
        for s in [
            spec(Family::ItemCf, None, None),
            spec(Family::Md, None, None),
            spec(Family::HiBd, Some(0.3), Some(0.7)),
        ] {
            let dense = build_model(&g, s, usize::MAX).unwrap();
            let lazy = build_model(&g, s, 0).unwrap();
            assert!(dense.is_materialized());
            assert!(!lazy.is_materialized());
            assert_eq!(dense.to_dense(&g).unwrap(), lazy.to_dense(&g).unwrap());
        }
    }

    #[test]
    fn md_unit_mass_per_source_item() {
        let g = toy_graph();
        let m = build_model(&g, spec(Family::Md, None, None), usize::MAX).unwrap();
        let table = m.to_dense(&g).unwrap();
        for source in 0..3 {
            let col: f64 = table.iter().map(|row| row[source]).sum();
            assert!((col - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn degree_zero_items_have_zero_similarity() {
        let g = InteractionGraph::from_pairs(2, 3, [(0, 0), (1, 0), (1, 1)]).unwrap();
        for family in [Family::Md, Family::Hc, Family::ItemCf] {
            let m = build_model(&g, KernelSpec::plain(family), usize::MAX).unwrap();
            for other in 0..3 {
                assert_eq!(m.similarity(&g, 2, other).unwrap(), 0.0);
                assert_eq!(m.similarity(&g, other, 2).unwrap(), 0.0);
            }
        }
    }

    #[test]
    fn cache_reuses_blended_tables() {
        let g = toy_graph();
        let mut cache = KernelCache::new(&g);
        let a = cache.model(&g, spec(Family::HiHhp, Some(0.4), Some(0.2))).unwrap();
        let b = cache.model(&g, spec(Family::HiHhp, Some(0.4), Some(0.9))).unwrap();
        assert_eq!(cache.blended.len(), 1);
        let fresh = build_model(&g, spec(Family::HiHhp, Some(0.4), Some(0.9)), usize::MAX).unwrap();
        assert_eq!(b.to_dense(&g).unwrap(), fresh.to_dense(&g).unwrap());
        assert_ne!(a.to_dense(&g).unwrap(), b.to_dense(&g).unwrap());
    }

    #[test]
    fn blended_table_must_match_epsilon() {
        let g = toy_graph();
        let cooc = Arc::new(Cooccurrence::build(&g));
        let form = spec(Family::HiMd, Some(0.5), None).form().unwrap();
        let table = BlendedTable {
            values: Arc::new(cooc.blend(&form)),
            cooc,
            epsilon: form.epsilon,
        };
        assert!(SimilarityModel::from_blended(&g, spec(Family::Md, None, None), table).is_err());
    }
}
