//! CART trees (Gini impurity) and a bootstrap random forest.

use rand::distr::{weighted::WeightedIndex, Distribution};
use rand::seq::index::sample;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::check_training_set;
use crate::error::{Error, Result};
use crate::synth::derive_seed;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ForestConfig {
    pub n_trees: usize,
    pub max_depth: usize,
    /// Smallest number of samples in either child of a split.
    pub min_leaf: usize,
    /// Features tried per split; `None` means `round(sqrt(d))`.
    pub max_features: Option<usize>,
    pub bootstrap: bool,
}

impl Default for ForestConfig {
    fn default() -> Self {
        Self {
            n_trees: 100,
            max_depth: 12,
            min_leaf: 2,
            max_features: None,
            bootstrap: true,
        }
    }
}

pub const MIN_FOREST_ROWS: usize = 10;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Node {
    Leaf {
        /// Weighted fraction of positive samples.
        positive: f64,
    },
    Split {
        feature: usize,
        threshold: f64,
        left: usize,
        right: usize,
    },
}

/// Nodes in an arena; the root is node 0. Rows with `x[feature] <= threshold`
/// go left.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecisionTree {
    pub nodes: Vec<Node>,
}

impl DecisionTree {
    pub fn predict_proba(&self, row: &[f64]) -> f64 {
        let mut i = 0;
        loop {
            match self.nodes[i] {
                Node::Leaf { positive } => return positive,
                Node::Split {
                    feature,
                    threshold,
                    left,
                    right,
                } => {
                    i = if row[feature] <= threshold {
                        left
                    } else {
                        right
                    }
                }
            }
        }
    }

    pub fn predict(&self, row: &[f64]) -> bool {
        self.predict_proba(row) >= 0.5
    }

    pub fn depth(&self) -> usize {
        fn walk(nodes: &[Node], i: usize) -> usize {
            match nodes[i] {
                Node::Leaf { .. } => 0,
                Node::Split { left, right, .. } => 1 + walk(nodes, left).max(walk(nodes, right)),
            }
        }
        walk(&self.nodes, 0)
    }
}

struct Grower<'a> {
    x: &'a [Vec<f64>],
    y: &'a [bool],
    w: &'a [f64],
    cfg: &'a ForestConfig,
    mtry: usize,
    rng: ChaCha8Rng,
    nodes: Vec<Node>,
}

fn gini(pos: f64, total: f64) -> f64 {
    if total <= 0.0 {
        return 0.0;
    }
    let p = pos / total;
    2.0 * p * (1.0 - p)
}

impl Grower<'_> {
    fn leaf(&self, idx: &[usize]) -> Node {
        let (pos, total) = self.counts(idx);
        Node::Leaf {
            positive: if total > 0.0 { pos / total } else { 0.5 },
        }
    }

    fn counts(&self, idx: &[usize]) -> (f64, f64) {
        idx.iter().fold((0.0, 0.0), |(p, t), &i| {
            (p + if self.y[i] { self.w[i] } else { 0.0 }, t + self.w[i])
        })
    }

    /// Best (impurity decrease, feature, threshold) among `mtry` sampled
    /// features.
    fn best_split(&mut self, idx: &[usize]) -> Option<(usize, f64)> {
        let d = self.x[0].len();
        let (pos, total) = self.counts(idx);
        let parent = gini(pos, total);
        let mut best: Option<(f64, usize, f64)> = None;
        let features = sample(&mut self.rng, d, self.mtry.min(d));
        let mut sorted: Vec<usize> = idx.to_vec();
        for f in features.iter() {
            sorted.sort_by(|&a, &b| self.x[a][f].total_cmp(&self.x[b][f]).then(a.cmp(&b)));
            let (mut lp, mut lt) = (0.0, 0.0);
            for k in 0..sorted.len() - 1 {
                let i = sorted[k];
                lt += self.w[i];
                if self.y[i] {
                    lp += self.w[i];
                }
                let (left_n, right_n) = (k + 1, sorted.len() - k - 1);
                if left_n < self.cfg.min_leaf || right_n < self.cfg.min_leaf {
                    continue;
                }
                let (a, b) = (self.x[i][f], self.x[sorted[k + 1]][f]);
                if a == b {
                    continue;
                }
                let child = (lt * gini(lp, lt) + (total - lt) * gini(pos - lp, total - lt)) / total;
                let gain = parent - child;
                if gain > 1e-12 && best.is_none_or(|(g, _, _)| gain > g) {
                    best = Some((gain, f, 0.5 * (a + b)));
                }
            }
        }
        best.map(|(_, f, t)| (f, t))
    }

    fn grow(&mut self, idx: Vec<usize>, depth: usize) -> usize {
        let id = self.nodes.len();
        self.nodes.push(Node::Leaf { positive: 0.5 });
        let (pos, total) = self.counts(&idx);
        let pure = pos <= 0.0 || pos >= total;
        let split = if depth >= self.cfg.max_depth || pure || idx.len() < 2 * self.cfg.min_leaf {
            None
        } else {
            self.best_split(&idx)
        };
        match split {
            None => self.nodes[id] = self.leaf(&idx),
            Some((feature, threshold)) => {
                let (l, r): (Vec<usize>, Vec<usize>) =
                    idx.iter().partition(|&&i| self.x[i][feature] <= threshold);
                let left = self.grow(l, depth + 1);
                let right = self.grow(r, depth + 1);
                self.nodes[id] = Node::Split {
                    feature,
                    threshold,
                    left,
                    right,
                };
            }
        }
        id
    }
}

/// Grows one tree on `rows` (indices into `x`, repeats allowed).
pub fn grow_tree(
    x: &[Vec<f64>],
    y: &[bool],
    w: &[f64],
    rows: Vec<usize>,
    cfg: &ForestConfig,
    seed: u64,
) -> DecisionTree {
    let d = x[0].len();
    let mtry = cfg
        .max_features
        .unwrap_or_else(|| ((d as f64).sqrt().round() as usize).max(1));
    let mut grower = Grower {
        x,
        y,
        w,
        cfg,
        mtry,
        rng: ChaCha8Rng::seed_from_u64(seed),
        nodes: Vec::new(),
    };
    grower.grow(rows, 0);
    DecisionTree {
        nodes: grower.nodes,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RandomForest {
    pub trees: Vec<DecisionTree>,
    /// Out-of-bag accuracy over rows left out by at least one tree.
    pub oob_accuracy: Option<f64>,
}

impl RandomForest {
    /// Fraction of trees voting positive.
    pub fn vote_fraction(&self, row: &[f64]) -> f64 {
        self.trees.iter().filter(|t| t.predict(row)).count() as f64 / self.trees.len() as f64
    }

    /// Majority of tree votes; a tie goes to the positive class.
    pub fn predict(&self, row: &[f64]) -> bool {
        self.vote_fraction(row) >= 0.5
    }
}

pub fn train_rf(
    x: &[Vec<f64>],
    y: &[bool],
    sample_weights: &[f64],
    cfg: &ForestConfig,
    seed: u64,
) -> Result<RandomForest> {
    check_training_set(x, y, sample_weights)?;
    if x.len() < MIN_FOREST_ROWS {
        return Err(Error::Training(format!(
            "random forest needs >= {MIN_FOREST_ROWS} rows, got {}",
            x.len()
        )));
    }
    if cfg.n_trees == 0 || cfg.min_leaf == 0 {
        return Err(Error::Training(
            "random forest needs n_trees >= 1 and min_leaf >= 1".into(),
        ));
    }
    let n = x.len();
    // bootstrap draws are proportional to sample weight; trees then see unit weights
    let draw = WeightedIndex::new(sample_weights)
        .map_err(|e| Error::Training(format!("invalid sample weights: {e}")))?;
    let unit = vec![1.0; n];
    let grown: Vec<(DecisionTree, Vec<bool>)> = (0..cfg.n_trees)
        .into_par_iter()
        .map(|t| {
            let tree_seed = derive_seed(seed, &[t as u64]);
            let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(tree_seed, &[0]));
            let mut in_bag = vec![false; n];
            let rows: Vec<usize> = if cfg.bootstrap {
                (0..n)
                    .map(|_| {
                        let i = draw.sample(&mut rng);
                        in_bag[i] = true;
                        i
                    })
                    .collect()
            } else {
                in_bag.iter_mut().for_each(|b| *b = true);
                (0..n).collect()
            };
            let w = if cfg.bootstrap { &unit } else { sample_weights };
            (grow_tree(x, y, w, rows, cfg, tree_seed), in_bag)
        })
        .collect();

    let mut votes = vec![(0usize, 0usize); n];
    for (tree, in_bag) in &grown {
        for i in (0..n).filter(|&i| !in_bag[i]) {
            votes[i].1 += 1;
            if tree.predict(&x[i]) {
                votes[i].0 += 1;
            }
        }
    }
    let scored: Vec<bool> = votes
        .iter()
        .zip(y)
        .filter(|((_, total), _)| *total > 0)
        .map(|((pos, total), &label)| (2 * pos >= *total) == label)
        .collect();
    let oob_accuracy = (!scored.is_empty())
        .then(|| scored.iter().filter(|c| **c).count() as f64 / scored.len() as f64);
    Ok(RandomForest {
        trees: grown.into_iter().map(|(t, _)| t).collect(),
        oob_accuracy,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::testdata::xor;

    #[test]
    fn forest_learns_xor() {
        let (x, y) = xor(400, 5);
        let (tx, ty) = xor(400, 6);
        let rf = train_rf(&x, &y, &vec![1.0; y.len()], &ForestConfig::default(), 1).unwrap();
        let acc = tx
            .iter()
            .zip(&ty)
            .filter(|(r, l)| rf.predict(r) == **l)
            .count() as f64
            / ty.len() as f64;
        assert!(acc >= 0.9, "{acc}");
        assert!((rf.oob_accuracy.unwrap() - acc).abs() <= 0.1);
        assert!(rf.trees.iter().all(|t| t.depth() <= 12));
    }

    #[test]
    fn stump_finds_the_optimal_threshold() {
        // labels flip at 0.37; the grid spacing is 0.01
        let x: Vec<Vec<f64>> = (0..100).map(|i| vec![i as f64 / 100.0]).collect();
        let y: Vec<bool> = x.iter().map(|r| r[0] > 0.37).collect();
        let cfg = ForestConfig {
            n_trees: 1,
            max_depth: 1,
            min_leaf: 1,
            max_features: Some(1),
            bootstrap: false,
        };
        let rf = train_rf(&x, &y, &vec![1.0; 100], &cfg, 0).unwrap();
        // exhaustive oracle: the misclassification-free cut lies between 0.37 and 0.38
        match rf.trees[0].nodes[0] {
            Node::Split { threshold, .. } => {
                assert!((threshold - 0.375).abs() <= 0.01, "{threshold}")
            }
            ref other => panic!("{other:?}"),
        }
    }

    #[test]
    fn degenerate_inputs_are_rejected() {
        let x = vec![vec![0.0]; 20];
        assert!(train_rf(&x, &[true; 20], &[1.0; 20], &ForestConfig::default(), 0).is_err());
        let y: Vec<bool> = (0..5).map(|i| i % 2 == 0).collect();
        assert!(train_rf(&x[..5], &y, &[1.0; 5], &ForestConfig::default(), 0).is_err());
    }

    #[test]
    fn seeds_determine_the_forest() {
        let (x, y) = xor(100, 8);
        let w = vec![1.0; y.len()];
        let cfg = ForestConfig {
            n_trees: 10,
            ..ForestConfig::default()
        };
        assert_eq!(
            train_rf(&x, &y, &w, &cfg, 3).unwrap(),
            train_rf(&x, &y, &w, &cfg, 3).unwrap()
        );
    }
}
