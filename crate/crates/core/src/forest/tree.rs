//! Binary recursive partitioning with Gini impurity.
//!
//! Split scores are compared in exact integer arithmetic, so ties between
//! candidate splits are detected exactly and broken deterministically
//! (lower feature index first, then lower threshold).

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::Dataset;
use crate::{seed, Class};

/// A fitted tree. Rows with `value < threshold` go left.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum TreeNode {
    Split {
        feature: usize,
        threshold: f64,
        left: Box<TreeNode>,
        right: Box<TreeNode>,
    },
    Leaf {
        leaf_class: Class,
        /// Training rows per class, indexed by [`Class::index`].
        counts: [usize; 2],
    },
}

impl TreeNode {
    pub fn predict(&self, row: &[f64]) -> Class {
        let mut node = self;
        loop {
            match node {
                TreeNode::Leaf { leaf_class, .. } => return *leaf_class,
                TreeNode::Split {
                    feature,
                    threshold,
                    left,
                    right,
                } => {
                    node = if row[*feature] < *threshold { left } else { right };
                }
            }
        }
    }

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

    /// Number of internal nodes splitting on each feature.
    pub fn split_counts(&self, counts: &mut [usize]) {
        if let TreeNode::Split {
            feature,
            left,
            right,
            ..
        } = self
        {
            counts[*feature] += 1;
            left.split_counts(counts);
            right.split_counts(counts);
        }
    }
}

/// When to stop growing.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct StopRule {
    /// Minimum rows in each child of a split (terminal node size).
    pub min_node_size: usize,
    /// Maximum depth; `None` grows until purity.
    pub max_depth: Option<usize>,
}

impl Default for StopRule {
    fn default() -> Self {
        Self {
            min_node_size: 1,
            max_depth: None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Split {
    pub feature: usize,
    pub threshold: f64,
    /// `Gini(parent) − Σ (n_child/n)·Gini(child)`.
    pub impurity_decrease: f64,
}

fn class_counts(data: &Dataset, rows: &[usize]) -> [usize; 2] {
    let mut c = [0usize; 2];
    for &r in rows {
        c[data.label(r).index()] += 1;
    }
    c
}

fn sum_sq(c: [usize; 2]) -> u128 {
    (c[0] as u128).pow(2) + (c[1] as u128).pow(2)
}

/// Majority class; ties go to `NonSeizure`.
pub(crate) fn majority(counts: [usize; 2]) -> Class {
    if counts[1] > counts[0] {
        Class::Seizure
    } else {
        Class::NonSeizure
    }
}

/// Best Gini split of `rows` over the `candidates` features.
///
/// Thresholds are midpoints between consecutive distinct sorted values.
/// Splits leaving fewer than `min_node_size` rows on either side are
/// skipped. Returns `None` when no split strictly reduces impurity.
pub fn best_split(
    data: &Dataset,
    rows: &[usize],
    candidates: &[usize],
    min_node_size: usize,
) -> Option<Split> {
    let n = rows.len();
    if n < 2 {
        return None;
    }
    let total = class_counts(data, rows);
    let parent = sum_sq(total);
    let min_child = min_node_size.max(1);

    let mut features = candidates.to_vec();
    features.sort_unstable();
    features.dedup();

    // Best score so far as a fraction num/den of
    // Σ_c l_c²/n_l + Σ_c r_c²/n_r.
    let mut best: Option<(u128, u128, usize, f64)> = None;
    let mut sorted: Vec<(f64, Class)> = Vec::with_capacity(n);
    for &f in &features {
        sorted.clear();
        sorted.extend(rows.iter().map(|&r| (data.value(r, f), data.label(r))));
        sorted.sort_by(|a, b| a.0.total_cmp(&b.0));
        let mut left = [0usize; 2];
        for i in 0..n - 1 {
            left[sorted[i].1.index()] += 1;
            let (lo, hi) = (sorted[i].0, sorted[i + 1].0);
            if lo >= hi {
                continue;
            }
            let n_l = i + 1;
            let n_r = n - n_l;
            if n_l < min_child || n_r < min_child {
                continue;
            }
            let right = [total[0] - left[0], total[1] - left[1]];
            let num = n_r as u128 * sum_sq(left) + n_l as u128 * sum_sq(right);
            let den = n_l as u128 * n_r as u128;
            let improves = match best {
                None => true,
                Some((bn, bd, _, _)) => num * bd > bn * den,
            };
            if improves {
                let mut threshold = 0.5 * (lo + hi);
                if threshold <= lo || threshold > hi {
                    threshold = hi;
                }
                best = Some((num, den, f, threshold));
            }
        }
    }

    let (num, den, feature, threshold) = best?;
    // Strict decrease: num/den > parent/n.
    if num * n as u128 <= parent * den {
        return None;
    }
    let nf = n as f64;
    let impurity_decrease = (num as f64 / den as f64 - parent as f64 / nf) / nf;
    Some(Split {
        feature,
        threshold,
        impurity_decrease,
    })
}

/// Grow one tree on `rows` (duplicates allowed, as in a bootstrap sample).
pub fn train_tree(data: &Dataset, rows: &[usize], m_try: usize, seed: u64, stop: StopRule) -> TreeNode {
    let mut rng = seed::rng(seed);
    let m_try = m_try.clamp(1, data.n_features());
    grow(data, rows.to_vec(), m_try, &mut rng, stop, 0)
}

fn grow<R: Rng>(
    data: &Dataset,
    rows: Vec<usize>,
    m_try: usize,
    rng: &mut R,
    stop: StopRule,
    depth: usize,
) -> TreeNode {
    let counts = class_counts(data, &rows);
    let leaf = TreeNode::Leaf {
        leaf_class: majority(counts),
        counts,
    };
    let pure = counts[0] == 0 || counts[1] == 0;
    if pure || rows.len() < 2 || stop.max_depth.is_some_and(|d| depth >= d) {
        return leaf;
    }
    let candidates = rand::seq::index::sample(rng, data.n_features(), m_try).into_vec();
    let Some(split) = best_split(data, &rows, &candidates, stop.min_node_size) else {
        return leaf;
    };
    let (left, right): (Vec<usize>, Vec<usize>) = rows
        .into_iter()
        .partition(|&r| data.value(r, split.feature) < split.threshold);
    TreeNode::Split {
        feature: split.feature,
        threshold: split.threshold,
        left: Box::new(grow(data, left, m_try, rng, stop, depth + 1)),
        right: Box::new(grow(data, right, m_try, rng, stop, depth + 1)),
    }
}
