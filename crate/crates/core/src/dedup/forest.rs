//! Random forest of CART trees (Gini impurity) over columns that may be
//! missing.
//!
//! Every split is three-way: `value <= threshold`, `value > threshold`, and
//! missing. A branch that received no training samples becomes a leaf
//! carrying its parent's class fraction.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "node", rename_all = "snake_case")]
pub enum Node {
    Leaf {
        /// Fraction of training samples in the leaf that are positive.
        positive: f64,
        samples: u32,
    },
    Split {
        column: u16,
        threshold: f64,
        le: Box<Node>,
        gt: Box<Node>,
        missing: Box<Node>,
    },
}

impl Node {
    pub fn predict(&self, x: &[Option<f64>]) -> f64 {
        let mut node = self;
        loop {
            match node {
                Node::Leaf { positive, .. } => return *positive,
                Node::Split {
                    column,
                    threshold,
                    le,
                    gt,
                    missing,
                } => {
                    node = match x[*column as usize] {
                        None => missing,
                        Some(v) if v <= *threshold => le,
                        Some(_) => gt,
                    };
                }
            }
        }
    }

    pub fn depth(&self) -> usize {
        match self {
            Node::Leaf { .. } => 0,
            Node::Split { le, gt, missing, .. } => {
                1 + le.depth().max(gt.depth()).max(missing.depth())
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ForestParams {
    pub trees: usize,
    /// `None` grows until leaves are pure.
    pub max_depth: Option<usize>,
    /// Candidate columns per split; `None` means `floor(sqrt(columns))`.
    pub max_features: Option<usize>,
    pub bootstrap: bool,
    pub seed: u64,
}

impl Default for ForestParams {
    fn default() -> Self {
        ForestParams {
            trees: 100,
            max_depth: None,
            max_features: None,
            bootstrap: true,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FittedForest {
    pub trees: Vec<Node>,
    /// Mean impurity decrease per column, normalized to sum to one.
    pub column_importances: Vec<f64>,
}

fn gini(pos: f64, n: f64) -> f64 {
    if n <= 0.0 {
        return 0.0;
    }
    let p = pos / n;
    1.0 - p * p - (1.0 - p) * (1.0 - p)
}

struct TreeBuilder<'a> {
    x: &'a [Vec<Option<f64>>],
    y: &'a [bool],
    max_depth: Option<usize>,
    max_features: usize,
    root_samples: f64,
    importances: Vec<f64>,
    rng: ChaCha8Rng,
}

struct BestSplit {
    column: usize,
    threshold: f64,
    impurity: f64,
}

impl TreeBuilder<'_> {
    fn leaf(&self, idx: &[usize]) -> Node {
        let pos = idx.iter().filter(|&&i| self.y[i]).count();
        Node::Leaf {
            positive: if idx.is_empty() { 0.0 } else { pos as f64 / idx.len() as f64 },
            samples: idx.len() as u32,
        }
    }

    fn build(&mut self, idx: &[usize], depth: usize) -> Node {
        let n = idx.len();
        let pos = idx.iter().filter(|&&i| self.y[i]).count();
        if n < 2 || pos == 0 || pos == n || self.max_depth.is_some_and(|d| depth >= d) {
            return self.leaf(idx);
        }
        let parent = gini(pos as f64, n as f64);
        let Some(best) = self.find_split(idx) else {
            return self.leaf(idx);
        };
        self.importances[best.column] +=
            (n as f64 / self.root_samples) * (parent - best.impurity).max(0.0);

        let (mut le, mut gt, mut missing) = (Vec::new(), Vec::new(), Vec::new());
        for &i in idx {
            match self.x[i][best.column] {
                None => missing.push(i),
                Some(v) if v <= best.threshold => le.push(i),
                Some(_) => gt.push(i),
            }
        }
        let prior = pos as f64 / n as f64;
        let child = |part: &[usize], this: &mut Self| {
            if part.is_empty() {
                Box::new(Node::Leaf {
                    positive: prior,
                    samples: 0,
                })
            } else {
                Box::new(this.build(part, depth + 1))
            }
        };
        let le = child(&le, self);
        let gt = child(&gt, self);
        let missing = child(&missing, self);
        Node::Split {
            column: best.column as u16,
            threshold: best.threshold,
            le,
            gt,
            missing,
        }
    }

    fn find_split(&mut self, idx: &[usize]) -> Option<BestSplit> {
        let n_cols = self.x[idx[0]].len();
        let mut columns: Vec<usize> = (0..n_cols).collect();
        columns.shuffle(&mut self.rng);
        let mut best: Option<BestSplit> = None;
        let mut evaluated = 0;
        let mut values: Vec<(f64, bool)> = Vec::with_capacity(idx.len());
        for column in columns {
            if evaluated >= self.max_features {
                break;
            }
            values.clear();
            let (mut n_missing, mut pos_missing) = (0usize, 0usize);
            for &i in idx {
                match self.x[i][column] {
                    Some(v) => values.push((v, self.y[i])),
                    None => {
                        n_missing += 1;
                        pos_missing += self.y[i] as usize;
                    }
                }
            }
            if values.is_empty() {
                continue;
            }
            values.sort_by(|a, b| a.0.total_cmp(&b.0));
            let constant = values.first().map(|v| v.0) == values.last().map(|v| v.0);
            if constant && n_missing == 0 {
                continue;
            }
            evaluated += 1;

            let n = idx.len() as f64;
            let total_present = values.len();
            let pos_present = values.iter().filter(|v| v.1).count();
            let missing_term = n_missing as f64 * gini(pos_missing as f64, n_missing as f64);
            let mut consider = |left_n: usize, left_pos: usize, threshold: f64| {
                let right_n = total_present - left_n;
                let right_pos = pos_present - left_pos;
                let impurity = (left_n as f64 * gini(left_pos as f64, left_n as f64)
                    + right_n as f64 * gini(right_pos as f64, right_n as f64)
                    + missing_term)
                    / n;
                if best.as_ref().is_none_or(|b| impurity < b.impurity) {
                    best = Some(BestSplit {
                        column,
                        threshold,
                        impurity,
                    });
                }
            };
            let mut left_pos = 0;
            for k in 1..total_present {
                left_pos += values[k - 1].1 as usize;
                if values[k].0 > values[k - 1].0 {
                    consider(k, left_pos, (values[k - 1].0 + values[k].0) / 2.0);
                }
            }
            if n_missing > 0 {
                // present vs missing
                consider(total_present, pos_present, values[total_present - 1].0);
            }
        }
        best
    }
}

/// Grows one tree on `sample` (a bootstrap multiset of row indices).
/// Returns the tree and its unnormalized per-column impurity decrease.
pub fn fit_tree(
    x: &[Vec<Option<f64>>],
    y: &[bool],
    sample: &[usize],
    max_depth: Option<usize>,
    max_features: usize,
    rng: ChaCha8Rng,
) -> (Node, Vec<f64>) {
    let n_cols = x.first().map_or(0, Vec::len);
    let mut builder = TreeBuilder {
        x,
        y,
        max_depth,
        max_features: max_features.max(1),
        root_samples: sample.len().max(1) as f64,
        importances: vec![0.0; n_cols],
        rng,
    };
    let root = builder.build(sample, 0);
    (root, builder.importances)
}

/// Per-tree RNG: the master seed on a tree-specific ChaCha stream.
fn tree_rng(seed: u64, tree: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(tree as u64);
    rng
}

pub fn fit_forest(x: &[Vec<Option<f64>>], y: &[bool], params: &ForestParams) -> FittedForest {
    assert_eq!(x.len(), y.len(), "one label per row");
    let n = x.len();
    let n_cols = x.first().map_or(0, Vec::len);
    let max_features = params
        .max_features
        .unwrap_or_else(|| ((n_cols as f64).sqrt().floor() as usize).max(1));
    let fitted: Vec<(Node, Vec<f64>)> = (0..params.trees)
        .into_par_iter()
        .map(|t| {
            let mut rng = tree_rng(params.seed, t);
            let sample: Vec<usize> = if params.bootstrap {
                (0..n).map(|_| rng.random_range(0..n)).collect()
            } else {
                (0..n).collect()
            };
            fit_tree(x, y, &sample, params.max_depth, max_features, rng)
        })
        .collect();

    let mut column_importances = vec![0.0; n_cols];
    let mut trees = Vec::with_capacity(fitted.len());
    for (tree, imp) in fitted {
        let total: f64 = imp.iter().sum();
        if total > 0.0 {
            for (acc, v) in column_importances.iter_mut().zip(&imp) {
                *acc += v / total;
            }
        }
        trees.push(tree);
    }
    let total: f64 = column_importances.iter().sum();
    if total > 0.0 {
        column_importances.iter_mut().for_each(|v| *v /= total);
    }
    FittedForest {
        trees,
        column_importances,
    }
}

/// Mean of the trees' leaf class fractions.
pub fn predict_forest(trees: &[Node], x: &[Option<f64>]) -> f64 {
    if trees.is_empty() {
        return 0.0;
    }
    trees.iter().map(|t| t.predict(x)).sum::<f64>() / trees.len() as f64
}
