//! Random forest: bagged decision trees over random feature subspaces.
//!
//! Each tree `j` gets its seed `θ_j = derive(master, j)`. The bootstrap
//! sample is drawn from `derive(θ_j, 0)` and the per-node feature subsets
//! from `derive(θ_j, 1)`, so every tree is reproducible on its own and trees
//! can be trained in any order. Prediction is an unweighted majority vote;
//! a tied vote goes to `NonSeizure`.

mod tree;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use tree::{best_split, train_tree, Split, StopRule, TreeNode};

use crate::{par, seed, Class};

#[derive(Debug, Error, PartialEq)]
pub enum ForestError {
    #[error("dataset is empty")]
    EmptyDataset,
    #[error("dataset has {values} values, not a multiple of {n_features} features for {rows} labels")]
    ShapeMismatch {
        values: usize,
        n_features: usize,
        rows: usize,
    },
    #[error("non-finite feature {feature} in row {row}")]
    NonFiniteFeature { row: usize, feature: usize },
    #[error("training data contains a single class")]
    SingleClassDataset,
    #[error("invalid forest configuration: {0}")]
    InvalidConfig(String),
}

/// Row-major feature matrix with one class label per row.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    n_features: usize,
    values: Vec<f64>,
    labels: Vec<Class>,
}

impl Dataset {
    pub fn new(n_features: usize, values: Vec<f64>, labels: Vec<Class>) -> Result<Self, ForestError> {
        if n_features == 0 || values.len() != n_features * labels.len() {
            return Err(ForestError::ShapeMismatch {
                values: values.len(),
                n_features,
                rows: labels.len(),
            });
        }
        if labels.is_empty() {
            return Err(ForestError::EmptyDataset);
        }
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(ForestError::NonFiniteFeature {
                row: i / n_features,
                feature: i % n_features,
            });
        }
        Ok(Self {
            n_features,
            values,
            labels,
        })
    }

    pub fn from_rows<const F: usize>(rows: &[[f64; F]], labels: Vec<Class>) -> Result<Self, ForestError> {
        Self::new(F, rows.iter().flatten().copied().collect(), labels)
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn n_features(&self) -> usize {
        self.n_features
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.values[i * self.n_features..(i + 1) * self.n_features]
    }

    pub fn value(&self, row: usize, feature: usize) -> f64 {
        self.values[row * self.n_features + feature]
    }

    pub fn label(&self, i: usize) -> Class {
        self.labels[i]
    }

    pub fn labels(&self) -> &[Class] {
        &self.labels
    }

    pub fn class_counts(&self) -> [usize; 2] {
        let mut c = [0; 2];
        for l in &self.labels {
            c[l.index()] += 1;
        }
        c
    }
}

/// A bootstrap draw and its out-of-bag complement.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Bootstrap {
    pub indices: Vec<usize>,
    /// Sorted rows never drawn.
    pub oob: Vec<usize>,
}

/// `n` draws with replacement from `0..n`.
pub fn bootstrap_sample(n: usize, seed: u64) -> Bootstrap {
    use rand::Rng;
    let mut rng = seed::rng(seed);
    let indices: Vec<usize> = (0..n).map(|_| rng.random_range(0..n)).collect();
    let mut drawn = vec![false; n];
    for &i in &indices {
        drawn[i] = true;
    }
    let oob = (0..n).filter(|&i| !drawn[i]).collect();
    Bootstrap { indices, oob }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ForestConfig {
    pub trees: usize,
    pub m_try: usize,
    pub min_node_size: usize,
    pub max_depth: Option<usize>,
    /// Train every tree on the full dataset instead of a bootstrap sample.
    /// Debug aid; disables the out-of-bag estimate.
    pub bootstrap: bool,
}

impl Default for ForestConfig {
    fn default() -> Self {
        Self {
            trees: 100,
            m_try: 2,
            min_node_size: 1,
            max_depth: None,
            bootstrap: true,
        }
    }
}

impl ForestConfig {
    pub fn stop_rule(&self) -> StopRule {
        StopRule {
            min_node_size: self.min_node_size,
            max_depth: self.max_depth,
        }
    }

    fn validate(&self, n_features: usize) -> Result<(), ForestError> {
        if self.trees == 0 {
            return Err(ForestError::InvalidConfig("need at least one tree".into()));
        }
        if self.m_try == 0 || self.m_try > n_features {
            return Err(ForestError::InvalidConfig(format!(
                "m_try = {} outside 1..={n_features}",
                self.m_try
            )));
        }
        if self.min_node_size == 0 {
            return Err(ForestError::InvalidConfig("min_node_size must be at least 1".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ForestModel {
    #[serde(rename = "J")]
    pub num_trees: usize,
    pub m_try: usize,
    pub n_features: usize,
    pub seeds: Vec<u64>,
    /// Fraction of rows misclassified by the trees that did not see them;
    /// `None` without bootstrap or when every row was in every sample.
    pub oob_error: Option<f64>,
    pub trees: Vec<TreeNode>,
}

impl ForestModel {
    /// Votes per class, indexed by [`Class::index`]. Sums to `J`.
    pub fn votes(&self, row: &[f64]) -> [usize; 2] {
        let mut v = [0usize; 2];
        for t in &self.trees {
            v[t.predict(row).index()] += 1;
        }
        v
    }

    pub fn predict(&self, row: &[f64]) -> Class {
        tree::majority(self.votes(row))
    }

    pub fn oob_accuracy(&self) -> Option<f64> {
        self.oob_error.map(|e| 1.0 - e)
    }

    /// Split counts per feature over the whole forest.
    pub fn split_counts(&self) -> Vec<usize> {
        let mut c = vec![0; self.n_features];
        for t in &self.trees {
            t.split_counts(&mut c);
        }
        c
    }
}

/// Train `config.trees` trees, each on its own bootstrap sample.
pub fn train_forest(data: &Dataset, config: &ForestConfig, master_seed: u64) -> Result<ForestModel, ForestError> {
    config.validate(data.n_features())?;
    let counts = data.class_counts();
    if counts[0] == 0 || counts[1] == 0 {
        return Err(ForestError::SingleClassDataset);
    }
    let n = data.len();
    let seeds: Vec<u64> = (0..config.trees as u64).map(|j| seed::derive(master_seed, j)).collect();
    let stop = config.stop_rule();

    let fitted: Vec<(TreeNode, Vec<usize>)> = par::map(&seeds, |&theta| {
        let (rows, oob) = if config.bootstrap {
            let b = bootstrap_sample(n, seed::derive(theta, 0));
            (b.indices, b.oob)
        } else {
            ((0..n).collect(), Vec::new())
        };
        let tree = train_tree(data, &rows, config.m_try, seed::derive(theta, 1), stop);
        (tree, oob)
    });

    let oob_error = if config.bootstrap {
        let mut votes = vec![[0usize; 2]; n];
        for (tree, oob) in &fitted {
            for &r in oob {
                votes[r][tree.predict(data.row(r)).index()] += 1;
            }
        }
        let mut seen = 0usize;
        let mut wrong = 0usize;
        for (r, v) in votes.iter().enumerate() {
            if v[0] + v[1] > 0 {
                seen += 1;
                if tree::majority(*v) != data.label(r) {
                    wrong += 1;
                }
            }
        }
        (seen > 0).then(|| wrong as f64 / seen as f64)
    } else {
        None
    };

    Ok(ForestModel {
        num_trees: config.trees,
        m_try: config.m_try,
        n_features: data.n_features(),
        seeds,
        oob_error,
        trees: fitted.into_iter().map(|(t, _)| t).collect(),
    })
}

pub fn predict(model: &ForestModel, row: &[f64]) -> Class {
    model.predict(row)
}
