use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use super::NUM_FEATURES;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Node {
    Split {
        feature: usize,
        threshold: f64,
        left: usize,
        right: usize,
    },
    /// Training-sample counts `[negative, positive]` that reached the leaf.
    Leaf { counts: [usize; 2] },
}

/// Binary CART tree stored as a flat node list, root at index 0. Samples with
/// `x[feature] <= threshold` go left.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecisionTree {
    pub nodes: Vec<Node>,
}

pub(super) struct TreeParams {
    pub max_depth: Option<usize>,
    pub min_samples_leaf: usize,
    pub features_per_split: usize,
}

fn gini(counts: [usize; 2]) -> f64 {
    let n = (counts[0] + counts[1]) as f64;
    if n == 0.0 {
        return 0.0;
    }
    let p = counts[1] as f64 / n;
    2.0 * p * (1.0 - p)
}

fn count(labels: &[bool], idx: &[usize]) -> [usize; 2] {
    let pos = idx.iter().filter(|&&i| labels[i]).count();
    [idx.len() - pos, pos]
}

struct BestSplit {
    feature: usize,
    threshold: f64,
    /// `n_left * gini_left + n_right * gini_right`.
    weighted_impurity: f64,
}

impl DecisionTree {
    /// Leaf reached by `x`.
    pub fn leaf(&self, x: &[f64; NUM_FEATURES]) -> [usize; 2] {
        let mut i = 0;
        loop {
            match &self.nodes[i] {
                Node::Split { feature, threshold, left, right } => {
                    i = if x[*feature] <= *threshold { *left } else { *right };
                }
                Node::Leaf { counts } => return *counts,
            }
        }
    }

    /// Majority class of the leaf; ties vote positive.
    pub fn vote(&self, x: &[f64; NUM_FEATURES]) -> bool {
        let [neg, pos] = self.leaf(x);
        pos >= neg
    }

    /// Grows a tree on the rows `sample` (repeats allowed) and adds each
    /// split's impurity decrease to `importances`.
    pub(super) fn grow<R: Rng>(
        rows: &[[f64; NUM_FEATURES]],
        labels: &[bool],
        sample: Vec<usize>,
        params: &TreeParams,
        rng: &mut R,
        importances: &mut [f64; NUM_FEATURES],
    ) -> Self {
        let mut tree = DecisionTree { nodes: Vec::new() };
        tree.build(rows, labels, sample, 0, params, rng, importances);
        tree
    }

    #[allow(clippy::too_many_arguments)]
    fn build<R: Rng>(
        &mut self,
        rows: &[[f64; NUM_FEATURES]],
        labels: &[bool],
        idx: Vec<usize>,
        depth: usize,
        params: &TreeParams,
        rng: &mut R,
        importances: &mut [f64; NUM_FEATURES],
    ) -> usize {
        let counts = count(labels, &idx);
        let me = self.nodes.len();
        self.nodes.push(Node::Leaf { counts });

        let pure = counts[0] == 0 || counts[1] == 0;
        let depth_reached = params.max_depth.is_some_and(|d| depth >= d);
        if pure || depth_reached || idx.len() < 2 * params.min_samples_leaf {
            return me;
        }
        let Some(best) = find_split(rows, labels, &idx, params, rng) else {
            return me;
        };

        let n = idx.len() as f64;
        importances[best.feature] += n * gini(counts) - best.weighted_impurity;

        let (left_idx, right_idx): (Vec<usize>, Vec<usize>) =
            idx.into_iter().partition(|&i| rows[i][best.feature] <= best.threshold);
        let left = self.build(rows, labels, left_idx, depth + 1, params, rng, importances);
        let right = self.build(rows, labels, right_idx, depth + 1, params, rng, importances);
        self.nodes[me] = Node::Split {
            feature: best.feature,
            threshold: best.threshold,
            left,
            right,
        };
        me
    }
}

/// Searches a random subset of `features_per_split` features; when none of
/// them admits a valid split the remaining features are tried in the same
/// shuffled order. Zero-gain splits are accepted so impure nodes keep
/// splitting while any feature still separates them.
fn find_split<R: Rng>(
    rows: &[[f64; NUM_FEATURES]],
    labels: &[bool],
    idx: &[usize],
    params: &TreeParams,
    rng: &mut R,
) -> Option<BestSplit> {
    let mut features: Vec<usize> = (0..NUM_FEATURES).collect();
    features.shuffle(rng);
    let k = params.features_per_split.clamp(1, NUM_FEATURES);

    let mut best: Option<BestSplit> = None;
    for (tried, &f) in features.iter().enumerate() {
        if tried >= k && best.is_some() {
            break;
        }
        if let Some(candidate) = best_threshold(rows, labels, idx, f, params.min_samples_leaf) {
            if best.as_ref().is_none_or(|b| candidate.weighted_impurity < b.weighted_impurity) {
                best = Some(candidate);
            }
        }
    }
    best
}

fn best_threshold(
    rows: &[[f64; NUM_FEATURES]],
    labels: &[bool],
    idx: &[usize],
    feature: usize,
    min_leaf: usize,
) -> Option<BestSplit> {
    let mut sorted: Vec<(f64, bool)> = idx.iter().map(|&i| (rows[i][feature], labels[i])).collect();
    sorted.sort_by(|a, b| a.0.total_cmp(&b.0));

    let total = count(labels, idx);
    let n = sorted.len();
    let mut left = [0usize; 2];
    let mut best: Option<BestSplit> = None;
    for i in 0..n - 1 {
        left[sorted[i].1 as usize] += 1;
        let (lo, hi) = (sorted[i].0, sorted[i + 1].0);
        if lo == hi {
            continue;
        }
        let n_left = i + 1;
        if n_left < min_leaf || n - n_left < min_leaf {
            continue;
        }
        let right = [total[0] - left[0], total[1] - left[1]];
        let impurity = n_left as f64 * gini(left) + (n - n_left) as f64 * gini(right);
        if best.as_ref().is_none_or(|b| impurity < b.weighted_impurity) {
            let mid = lo + (hi - lo) / 2.0;
            // Midpoint can round up to `hi` for adjacent floats.
            let threshold = if mid < hi { mid } else { lo };
            best = Some(BestSplit { feature, threshold, weighted_impurity: impurity });
        }
    }
    best
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gini_values() {
        assert_eq!(gini([5, 0]), 0.0);
        assert_eq!(gini([2, 2]), 0.5);
        assert_eq!(gini([0, 0]), 0.0);
    }

    #[test]
    fn threshold_between_distinct_values() {
        let rows: Vec<[f64; NUM_FEATURES]> = [1.0, 2.0, 3.0, 4.0].iter().map(|&v| [v, 0.0, 0.0, 0.0, 0.0, 0.0]).collect();
        let labels = [false, false, true, true];
        let best = best_threshold(&rows, &labels, &[0, 1, 2, 3], 0, 1).unwrap();
        assert_eq!(best.threshold, 2.5);
        assert_eq!(best.weighted_impurity, 0.0);
        assert!(best_threshold(&rows, &labels, &[0, 1, 2, 3], 1, 1).is_none());
    }
}
