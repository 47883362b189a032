use rand::seq::index::sample;
use serde::{Deserialize, Serialize};

use crate::rng::SimRng;

/// A regression tree. Rows with `x[feature] <= threshold` go left.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "node", rename_all = "lowercase")]
pub enum TreeNode {
    Leaf {
        value: f64,
    },
    Split {
        feature: usize,
        threshold: f64,
        left: Box<TreeNode>,
        right: Box<TreeNode>,
    },
}

impl TreeNode {
    pub fn predict(&self, x: &[f64]) -> f64 {
        let mut node = self;
        loop {
            match node {
                TreeNode::Leaf { value } => return *value,
                TreeNode::Split {
                    feature,
                    threshold,
                    left,
                    right,
                } => {
                    node = if x[*feature] <= *threshold {
                        left
                    } else {
                        right
                    };
                }
            }
        }
    }

    /// Number of split levels; a lone leaf has depth 0.
    pub fn depth(&self) -> usize {
        match self {
            TreeNode::Leaf { .. } => 0,
            TreeNode::Split { left, right, .. } => 1 + left.depth().max(right.depth()),
        }
    }

    pub fn num_leaves(&self) -> usize {
        match self {
            TreeNode::Leaf { .. } => 1,
            TreeNode::Split { left, right, .. } => left.num_leaves() + right.num_leaves(),
        }
    }
}

pub(crate) struct TreeParams {
    pub max_depth: usize,
    pub min_samples_leaf: usize,
    pub colsample: f64,
}

/// Column-major training matrix.
pub(crate) struct Columns<'a> {
    pub cols: &'a [Vec<f64>],
}

#[derive(Debug, Clone, Copy)]
struct Candidate {
    feature: usize,
    threshold: f64,
    gain: f64,
}

pub(crate) struct TreeBuilder<'a> {
    data: Columns<'a>,
    targets: &'a [f64],
    params: &'a TreeParams,
    rng: &'a mut SimRng,
    pub importance: Vec<f64>,
}

impl<'a> TreeBuilder<'a> {
    pub fn new(
        data: Columns<'a>,
        targets: &'a [f64],
        params: &'a TreeParams,
        rng: &'a mut SimRng,
    ) -> Self {
        let d = data.cols.len();
        Self {
            data,
            targets,
            params,
            rng,
            importance: vec![0.0; d],
        }
    }

    pub fn build(&mut self) -> TreeNode {
        let mut rows: Vec<usize> = (0..self.targets.len()).collect();
        self.grow(&mut rows, 0)
    }

    fn grow(&mut self, rows: &mut [usize], depth: usize) -> TreeNode {
        let n = rows.len();
        let sum: f64 = rows.iter().map(|&r| self.targets[r]).sum();
        let leaf = TreeNode::Leaf {
            value: sum / n as f64,
        };
        if depth >= self.params.max_depth || n < 2 * self.params.min_samples_leaf.max(1) {
            return leaf;
        }
        let Some(best) = self.best_split(rows, sum) else {
            return leaf;
        };
        self.importance[best.feature] += best.gain;

        let col = &self.data.cols[best.feature];
        let mut split = 0;
        for i in 0..n {
            if col[rows[i]] <= best.threshold {
                rows.swap(i, split);
                split += 1;
            }
        }
        let (l, r) = rows.split_at_mut(split);
        TreeNode::Split {
            feature: best.feature,
            threshold: best.threshold,
            left: Box::new(self.grow(l, depth + 1)),
            right: Box::new(self.grow(r, depth + 1)),
        }
    }

    fn candidate_features(&mut self) -> Vec<usize> {
        let d = self.data.cols.len();
        let k = ((self.params.colsample * d as f64).floor() as usize).clamp(1, d);
        if k == d {
            return (0..d).collect();
        }
        let mut features = sample(self.rng, d, k).into_vec();
        features.sort_unstable();
        features
    }

    /// Exact greedy search maximising `S_L²/n_L + S_R²/n_R − S²/n`.
    /// Ties keep the earlier (lower feature, lower threshold) candidate.
    fn best_split(&mut self, rows: &[usize], sum: f64) -> Option<Candidate> {
        let n = rows.len();
        let min_leaf = self.params.min_samples_leaf.max(1);
        let parent = sum * sum / n as f64;
        let mut best: Option<Candidate> = None;
        let mut pairs: Vec<(f64, f64)> = Vec::with_capacity(n);

        for feature in self.candidate_features() {
            let col = &self.data.cols[feature];
            pairs.clear();
            pairs.extend(rows.iter().map(|&r| (col[r], self.targets[r])));
            pairs.sort_by(|a, b| a.0.total_cmp(&b.0));

            let mut left_sum = 0.0;
            for i in 0..n - 1 {
                left_sum += pairs[i].1;
                let (lo, hi) = (pairs[i].0, pairs[i + 1].0);
                let n_left = i + 1;
                if lo == hi || n_left < min_leaf || n - n_left < min_leaf {
                    continue;
                }
                let right_sum = sum - left_sum;
                let gain = left_sum * left_sum / n_left as f64
                    + right_sum * right_sum / (n - n_left) as f64
                    - parent;
                if best.is_none_or(|b| gain > b.gain) {
                    let mid = lo + (hi - lo) / 2.0;
                    let threshold = if mid < hi { mid } else { lo };
                    best = Some(Candidate {
                        feature,
                        threshold,
                        gain,
                    });
                }
            }
        }
        let floor = 1e-12 * (1.0 + parent.abs());
        best.filter(|b| b.gain > floor)
    }
}
