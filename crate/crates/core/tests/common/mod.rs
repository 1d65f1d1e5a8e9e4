#![allow(dead_code)]

use std::path::PathBuf;

use hybrid_diffusion::{Family, InteractionGraph, KernelSpec};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Random bipartite graph with at most `max_side` users and items, each edge
/// present with a seeded probability. Returns the graph and its raw pairs.
pub fn random_graph(seed: u64, max_side: usize) -> (InteractionGraph, Vec<(usize, usize)>) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let m = rng.gen_range(2..=max_side);
    let n = rng.gen_range(2..=max_side);
    let density = rng.gen_range(0.05..0.6);
    let mut pairs = Vec::new();
    for u in 0..m {
        for i in 0..n {
            if rng.gen_bool(density) {
                pairs.push((u, i));
            }
        }
    }
    if pairs.is_empty() {
        pairs.push((0, 0));
    }
    let graph = InteractionGraph::from_pairs(m, n, pairs.iter().copied()).unwrap();
    (graph, pairs)
}

/// Dense 0/1 adjacency `a[user][item]` built straight from the edge pairs.
pub struct Dense {
    pub a: Vec<Vec<bool>>,
    pub m: usize,
    pub n: usize,
    user_deg: Vec<f64>,
    item_deg: Vec<f64>,
}

impl Dense {
    pub fn new(m: usize, n: usize, pairs: &[(usize, usize)]) -> Self {
        let mut a = vec![vec![false; n]; m];
        for &(u, i) in pairs {
            a[u][i] = true;
        }
        let user_deg = (0..m)
            .map(|l| a[l].iter().filter(|&&x| x).count() as f64)
            .collect();
        let item_deg = (0..n)
            .map(|i| (0..m).filter(|&l| a[l][i]).count() as f64)
            .collect();
        Dense { a, m, n, user_deg, item_deg }
    }

    pub fn item_degree(&self, i: usize) -> f64 {
        self.item_deg[i]
    }

    pub fn user_degree(&self, l: usize) -> f64 {
        self.user_deg[l]
    }

    fn common(&self, x: usize, y: usize) -> f64 {
        (0..self.m).filter(|&l| self.a[l][x] && self.a[l][y]).count() as f64
    }

    fn resource(&self, x: usize, y: usize) -> f64 {
        let mut total = 0.0;
        for l in 0..self.m {
            if self.a[l][x] && self.a[l][y] {
                total += 1.0 / self.user_degree(l);
            }
        }
        total
    }

    pub fn itemcf(&self, t: usize, s: usize) -> f64 {
        let (kt, ks) = (self.item_degree(t), self.item_degree(s));
        if kt == 0.0 || ks == 0.0 {
            return 0.0;
        }
        self.common(t, s) / (kt * ks).sqrt()
    }

    pub fn usercf(&self, a: usize, b: usize) -> f64 {
        let (ka, kb) = (self.user_degree(a), self.user_degree(b));
        if ka == 0.0 || kb == 0.0 {
            return 0.0;
        }
        let common = (0..self.n).filter(|&i| self.a[a][i] && self.a[b][i]).count() as f64;
        common / (ka * kb).sqrt()
    }

    pub fn diffusion(&self, t: usize, s: usize, family: Family, lambda: f64) -> f64 {
        let c = self.resource(t, s);
        if c == 0.0 {
            return 0.0;
        }
        let (kt, ks) = (self.item_degree(t), self.item_degree(s));
        match family {
            Family::Md => c / ks,
            Family::Hc => c / kt,
            Family::Hhp => c / (kt.powf(1.0 - lambda) * ks.powf(lambda)),
            Family::Bhc => c / kt.powf(lambda),
            Family::Bd => c / (kt * ks).powf(lambda),
            other => panic!("{other} is not a diffusion family"),
        }
    }

    pub fn eval(&self, spec: &KernelSpec, t: usize, s: usize) -> f64 {
        let lambda = spec.lambda.unwrap_or(0.0);
        match spec.family {
            Family::ItemCf => self.itemcf(t, s),
            Family::Md | Family::Hc | Family::Hhp | Family::Bhc | Family::Bd => {
                self.diffusion(t, s, spec.family, lambda)
            }
            Family::UserCf => panic!("UserCF is user-side"),
            hybrid => {
                let base = match hybrid {
                    Family::HiMd => Family::Md,
                    Family::HiHhp => Family::Hhp,
                    Family::HiBhc => Family::Bhc,
                    Family::HiBd => Family::Bd,
                    _ => unreachable!(),
                };
                let eps = spec.epsilon.unwrap();
                let cf = self.itemcf(t, s);
                let d = self.diffusion(t, s, base, lambda);
                if cf == 0.0 || d == 0.0 {
                    0.0
                } else {
                    cf.powf(eps) * d.powf(1.0 - eps)
                }
            }
        }
    }
}

/// Every item-side spec over a coarse grid.
pub fn item_specs() -> Vec<KernelSpec> {
    let grid = [0.0, 0.1, 0.35, 0.5, 0.9, 1.0];
    let mut specs = Vec::new();
    for family in Family::ALL {
        if family == Family::UserCf {
            continue;
        }
        let eps: Vec<Option<f64>> = if family.uses_epsilon() {
            grid.iter().copied().map(Some).collect()
        } else {
            vec![None]
        };
        let lam: Vec<Option<f64>> = if family.uses_lambda() {
            grid.iter().copied().map(Some).collect()
        } else {
            vec![None]
        };
        for &e in &eps {
            for &l in &lam {
                specs.push(KernelSpec::new(family, e, l).unwrap());
            }
        }
    }
    specs
}

pub fn max_abs_diff(a: &[Vec<f64>], b: &[Vec<f64>]) -> f64 {
    a.iter()
        .flatten()
        .zip(b.iter().flatten())
        .map(|(x, y)| (x - y).abs())
        .fold(0.0, f64::max)
}

/// MovieLens-100k ratings file: `$HYBRID_DIFFUSION_ML100K`, else
/// `data/ml-100k/u.data` under the workspace root.
pub fn movielens_path() -> PathBuf {
    std::env::var_os("HYBRID_DIFFUSION_ML100K")
        .map(PathBuf::from)
        .unwrap_or_else(|| {
            PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../data/ml-100k/u.data")
        })
}
