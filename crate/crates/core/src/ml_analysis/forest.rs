//! Random forest of CART trees with Gini splits and bootstrap sampling.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ForestParams {
    pub trees: usize,
    pub max_depth: usize,
    pub min_leaf: usize,
    /// Features examined per split.
    pub mtry: usize,
}

impl Default for ForestParams {
    fn default() -> Self {
        Self {
            trees: 100,
            max_depth: 10,
            min_leaf: 2,
            mtry: 5,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Node {
    Leaf {
        prob: f64,
    },
    Split {
        feature: usize,
        threshold: f64,
        left: Box<Node>,
        right: Box<Node>,
    },
}

impl Node {
    pub fn predict(&self, x: &[f64]) -> f64 {
        let mut node = self;
        loop {
            match node {
                Node::Leaf { prob } => return *prob,
                Node::Split {
                    feature,
                    threshold,
                    left,
                    right,
                } => node = if x[*feature] <= *threshold { left } else { right },
            }
        }
    }

    pub fn depth(&self) -> usize {
        match self {
            Node::Leaf { .. } => 0,
            Node::Split { left, right, .. } => 1 + left.depth().max(right.depth()),
        }
    }

    /// Every feature index used by a split in this subtree.
    pub fn features(&self, out: &mut Vec<usize>) {
        if let Node::Split {
            feature, left, right, ..
        } = self
        {
            out.push(*feature);
            left.features(out);
            right.features(out);
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Forest {
    pub n_features: usize,
    pub params: ForestParams,
    pub seed: u64,
    pub trees: Vec<Node>,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum ForestError {
    #[error("training set is empty")]
    Empty,
    #[error("training set has only {0} instances")]
    SingleClass(&'static str),
    #[error("rows have inconsistent lengths")]
    Ragged,
    #[error("feature values must be finite")]
    NonFinite,
    #[error("invalid parameters: {0}")]
    Params(&'static str),
}

struct Builder<'a> {
    rows: &'a [Vec<f64>],
    labels: &'a [bool],
    n_features: usize,
    params: ForestParams,
}

fn gini(pos: usize, n: usize) -> f64 {
    if n == 0 {
        return 0.0;
    }
    let p = pos as f64 / n as f64;
    2.0 * p * (1.0 - p)
}

struct BestSplit {
    feature: usize,
    threshold: f64,
    gain: f64,
}

impl Builder<'_> {
    fn grow(&self, samples: &mut [usize], depth: usize, rng: &mut ChaCha8Rng) -> Node {
        let n = samples.len();
        let pos = samples.iter().filter(|&&i| self.labels[i]).count();
        let leaf = Node::Leaf {
            prob: pos as f64 / n as f64,
        };
        if pos == 0 || pos == n || depth >= self.params.max_depth || n < 2 * self.params.min_leaf {
            return leaf;
        }
        let Some(best) = self.best_split(samples, pos, rng) else {
            return leaf;
        };
        let split = stable_partition(samples, |&i| self.rows[i][best.feature] <= best.threshold);
        let (l, r) = samples.split_at_mut(split);
        Node::Split {
            feature: best.feature,
            threshold: best.threshold,
            left: Box::new(self.grow(l, depth + 1, rng)),
            right: Box::new(self.grow(r, depth + 1, rng)),
        }
    }

    fn best_split(&self, samples: &[usize], pos: usize, rng: &mut ChaCha8Rng) -> Option<BestSplit> {
        let n = samples.len();
        let parent = gini(pos, n);
        let mut order: Vec<usize> = (0..self.n_features).collect();
        let mut best: Option<BestSplit> = None;
        let mut visited = 0;
        let mut drawn = 0;
        let mut values: Vec<(f64, bool)> = Vec::with_capacity(n);
        // draw features without replacement; constant ones do not count
        while visited < self.params.mtry && drawn < order.len() {
            let j = rng.random_range(drawn..order.len());
            order.swap(drawn, j);
            let f = order[drawn];
            drawn += 1;

            values.clear();
            values.extend(samples.iter().map(|&i| (self.rows[i][f], self.labels[i])));
            values.sort_by(|a, b| a.0.total_cmp(&b.0));
            if values[0].0 == values[n - 1].0 {
                continue;
            }
            visited += 1;

            let mut left_pos = 0;
            for k in 0..n - 1 {
                left_pos += usize::from(values[k].1);
                let left_n = k + 1;
                if values[k].0 == values[k + 1].0
                    || left_n < self.params.min_leaf
                    || n - left_n < self.params.min_leaf
                {
                    continue;
                }
                let right_n = n - left_n;
                let child = (left_n as f64 * gini(left_pos, left_n)
                    + right_n as f64 * gini(pos - left_pos, right_n))
                    / n as f64;
                let gain = parent - child;
                let better = match &best {
                    None => true,
                    Some(b) => gain > b.gain || (gain == b.gain && f < b.feature),
                };
                if better {
                    let (a, b) = (values[k].0, values[k + 1].0);
                    let mid = a + (b - a) / 2.0;
                    let threshold = if mid < b { mid } else { a };
                    best = Some(BestSplit {
                        feature: f,
                        threshold,
                        gain,
                    });
                }
            }
        }
        best
    }
}

/// Stable in-place partition; returns the number of elements satisfying `pred`.
fn stable_partition(v: &mut [usize], pred: impl Fn(&usize) -> bool) -> usize {
    let (yes, no): (Vec<usize>, Vec<usize>) = v.iter().partition(|x| pred(x));
    let k = yes.len();
    v[..k].copy_from_slice(&yes);
    v[k..].copy_from_slice(&no);
    k
}

/// Trains a forest. Tree `t` draws its bootstrap sample and feature subsets
/// from a ChaCha stream keyed by `(seed, t)`, so the result does not depend
/// on thread scheduling.
pub fn train_forest(
    rows: &[Vec<f64>],
    labels: &[bool],
    params: ForestParams,
    seed: u64,
) -> Result<Forest, ForestError> {
    if rows.is_empty() || rows.len() != labels.len() {
        return Err(ForestError::Empty);
    }
    let n_features = rows[0].len();
    if rows.iter().any(|r| r.len() != n_features) {
        return Err(ForestError::Ragged);
    }
    if rows.iter().flatten().any(|x| !x.is_finite()) {
        return Err(ForestError::NonFinite);
    }
    if params.trees == 0 || params.min_leaf == 0 || params.mtry == 0 {
        return Err(ForestError::Params("trees, min_leaf and mtry must be positive"));
    }
    let pos = labels.iter().filter(|&&l| l).count();
    if pos == 0 {
        return Err(ForestError::SingleClass("negative"));
    }
    if pos == labels.len() {
        return Err(ForestError::SingleClass("positive"));
    }

    let builder = Builder {
        rows,
        labels,
        n_features,
        params: ForestParams {
            mtry: params.mtry.min(n_features),
            ..params
        },
    };
    let n = rows.len();
    let trees = (0..params.trees)
        .into_par_iter()
        .map(|t| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(t as u64);
            let mut sample: Vec<usize> = (0..n).map(|_| rng.random_range(0..n)).collect();
            sample.sort_unstable();
            builder.grow(&mut sample, 0, &mut rng)
        })
        .collect();
    Ok(Forest {
        n_features,
        params,
        seed,
        trees,
    })
}

impl Forest {
    /// Mean positive fraction of the leaves reached by `x`.
    pub fn predict_prob(&self, x: &[f64]) -> f64 {
        let sum: f64 = self.trees.iter().map(|t| t.predict(x)).sum();
        (sum / self.trees.len() as f64).clamp(0.0, 1.0)
    }
}

pub fn predict_prob(forest: &Forest, x: &[f64]) -> f64 {
    forest.predict_prob(x)
}
