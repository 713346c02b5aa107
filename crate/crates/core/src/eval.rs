//! Repeated k-fold cross-validation and confusion-matrix metrics.
//!
//! Within a repeat the confusion counts of all k held-out folds are pooled;
//! rates are then summarised as mean and sample standard deviation across
//! repeats. A rate whose denominator is zero is reported as undefined.

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::features::{fit_scaler, FeatureError, FeatureScaler, FeatureVector, NUM_FEATURES};
use crate::forest::{train_forest, Dataset, ForestConfig, ForestError};
use crate::{par, seed, Class};

#[derive(Debug, Error, PartialEq)]
pub enum EvalError {
    #[error("k = {k} folds is invalid for {n} rows (need 2 <= k <= n)")]
    BadK { k: usize, n: usize },
    #[error("at least one repeat is required")]
    NoRepeats,
    #[error("{predicted} predictions for {actual} labels")]
    LengthMismatch { predicted: usize, actual: usize },
    #[error("nothing to evaluate")]
    Empty,
    #[error("no positive (seizure) rows; sensitivity is undefined")]
    NoPositives,
    #[error("no negative (non-seizure) rows; specificity is undefined")]
    NoNegatives,
    #[error("row {0} has no label")]
    Unlabeled(usize),
    #[error(transparent)]
    Forest(#[from] ForestError),
    #[error(transparent)]
    Feature(#[from] FeatureError),
}

/// Assignment of rows to folds.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FoldPlan {
    pub k: usize,
    pub seed: u64,
    /// Fold id of each row.
    pub assignments: Vec<usize>,
}

impl FoldPlan {
    /// Held-out rows of fold `f`, ascending.
    pub fn test_rows(&self, f: usize) -> Vec<usize> {
        (0..self.assignments.len()).filter(|&i| self.assignments[i] == f).collect()
    }

    /// Training rows for fold `f`, ascending.
    pub fn train_rows(&self, f: usize) -> Vec<usize> {
        (0..self.assignments.len()).filter(|&i| self.assignments[i] != f).collect()
    }

    pub fn sizes(&self) -> Vec<usize> {
        let mut s = vec![0; self.k];
        for &a in &self.assignments {
            s[a] += 1;
        }
        s
    }
}

/// Shuffle `0..n` with `seed` and deal the permutation round-robin into `k` folds.
pub fn kfold_split(n: usize, k: usize, seed: u64) -> Result<FoldPlan, EvalError> {
    if k < 2 || k > n {
        return Err(EvalError::BadK { k, n });
    }
    let mut perm: Vec<usize> = (0..n).collect();
    perm.shuffle(&mut seed::rng(seed));
    let mut assignments = vec![0; n];
    for (i, &row) in perm.iter().enumerate() {
        assignments[row] = i % k;
    }
    Ok(FoldPlan { k, seed, assignments })
}

/// Like [`kfold_split`] but deals whole groups, so rows sharing a group id
/// (an epoch) never straddle a train/test boundary.
pub fn grouped_kfold_split(groups: &[usize], k: usize, seed: u64) -> Result<FoldPlan, EvalError> {
    let mut ids: Vec<usize> = groups.to_vec();
    ids.sort_unstable();
    ids.dedup();
    if k < 2 || k > ids.len() {
        return Err(EvalError::BadK { k, n: ids.len() });
    }
    ids.shuffle(&mut seed::rng(seed));
    let fold_of = |g: usize| ids.iter().position(|&x| x == g).unwrap() % k;
    Ok(FoldPlan {
        k,
        seed,
        assignments: groups.iter().map(|&g| fold_of(g)).collect(),
    })
}

/// Confusion counts with seizure as the positive class.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Counts {
    pub tp: usize,
    #[serde(rename = "fn")]
    pub fn_: usize,
    pub tn: usize,
    pub fp: usize,
}

impl Counts {
    pub fn record(&mut self, predicted: Class, actual: Class) {
        match (actual, predicted) {
            (Class::Seizure, Class::Seizure) => self.tp += 1,
            (Class::Seizure, Class::NonSeizure) => self.fn_ += 1,
            (Class::NonSeizure, Class::NonSeizure) => self.tn += 1,
            (Class::NonSeizure, Class::Seizure) => self.fp += 1,
        }
    }

    pub fn total(&self) -> usize {
        self.tp + self.fn_ + self.tn + self.fp
    }

    fn add(&mut self, other: Counts) {
        self.tp += other.tp;
        self.fn_ += other.fn_;
        self.tn += other.tn;
        self.fp += other.fp;
    }
}

/// Counts and derived rates. `None` marks an undefined rate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Metrics {
    #[serde(flatten)]
    pub counts: Counts,
    pub tpr: Option<f64>,
    pub tnr: Option<f64>,
    pub fpr: Option<f64>,
    pub accuracy: Option<f64>,
}

impl Metrics {
    pub fn from_counts(counts: Counts) -> Self {
        let ratio = |num: usize, den: usize| (den > 0).then(|| num as f64 / den as f64);
        let Counts { tp, fn_, tn, fp } = counts;
        Self {
            counts,
            tpr: ratio(tp, tp + fn_),
            tnr: ratio(tn, tn + fp),
            fpr: ratio(fp, tn + fp),
            accuracy: ratio(tp + tn, counts.total()),
        }
    }

    /// Sensitivity.
    pub fn sensitivity(&self) -> Result<f64, EvalError> {
        self.tpr.ok_or(EvalError::NoPositives)
    }

    /// Specificity.
    pub fn specificity(&self) -> Result<f64, EvalError> {
        self.tnr.ok_or(EvalError::NoNegatives)
    }

    pub fn false_positive_rate(&self) -> Result<f64, EvalError> {
        self.fpr.ok_or(EvalError::NoNegatives)
    }
}

pub fn confusion_metrics(predicted: &[Class], actual: &[Class]) -> Result<Metrics, EvalError> {
    if predicted.len() != actual.len() {
        return Err(EvalError::LengthMismatch {
            predicted: predicted.len(),
            actual: actual.len(),
        });
    }
    if actual.is_empty() {
        return Err(EvalError::Empty);
    }
    let mut c = Counts::default();
    for (&p, &a) in predicted.iter().zip(actual) {
        c.record(p, a);
    }
    Ok(Metrics::from_counts(c))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CvConfig {
    pub folds: usize,
    pub repeats: usize,
    /// Keep every epoch inside a single fold.
    pub group_by_epoch: bool,
}

impl Default for CvConfig {
    fn default() -> Self {
        Self {
            folds: 20,
            repeats: 25,
            group_by_epoch: false,
        }
    }
}

/// Mean and sample standard deviation of a rate over the repeats where it
/// is defined.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub mean: Option<f64>,
    pub sd: Option<f64>,
    pub defined_in: usize,
}

impl Summary {
    fn of(values: impl Iterator<Item = Option<f64>>) -> Self {
        let v: Vec<f64> = values.flatten().collect();
        let n = v.len();
        if n == 0 {
            return Self {
                mean: None,
                sd: None,
                defined_in: 0,
            };
        }
        let mean = v.iter().sum::<f64>() / n as f64;
        let sd = if n > 1 {
            (v.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1) as f64).sqrt()
        } else {
            0.0
        };
        Self {
            mean: Some(mean),
            sd: Some(sd),
            defined_in: n,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub seed: u64,
    pub cv: CvConfig,
    pub forest: ForestConfig,
    pub rows: usize,
    pub per_repeat: Vec<Metrics>,
    pub tpr: Summary,
    pub tnr: Summary,
    pub fpr: Summary,
    pub accuracy: Summary,
}

impl EvalReport {
    /// One-line human summary.
    pub fn summary_line(&self) -> String {
        let fmt = |s: &Summary| match (s.mean, s.sd) {
            (Some(m), Some(sd)) => format!("{m:.4}±{sd:.4}"),
            _ => "undefined".to_string(),
        };
        format!(
            "accuracy={} tpr={} tnr={} fpr={} folds={} repeats={} rows={}",
            fmt(&self.accuracy),
            fmt(&self.tpr),
            fmt(&self.tnr),
            fmt(&self.fpr),
            self.cv.folds,
            self.cv.repeats,
            self.rows
        )
    }
}

/// What one fold saw; passed to the observer of [`cross_validate_observed`].
#[derive(Debug)]
pub struct FoldEvent<'a> {
    pub repeat: usize,
    pub fold: usize,
    pub train: &'a [usize],
    pub test: &'a [usize],
    pub scaler: &'a FeatureScaler,
}

pub fn cross_validate(
    features: &[FeatureVector],
    cv: &CvConfig,
    forest: &ForestConfig,
    seed: u64,
) -> Result<EvalReport, EvalError> {
    cross_validate_observed(features, cv, forest, seed, &|_| {})
}

/// Repeated k-fold cross-validation.
///
/// Repeat `r` uses seed `ρ_r = derive(seed, r)`: its fold plan is drawn from
/// `derive(ρ_r, 0)` and the forest of fold `f` from `derive(ρ_r, f + 1)`.
/// For every fold the min-max scaler and the forest are fit on the training
/// rows only.
pub fn cross_validate_observed(
    features: &[FeatureVector],
    cv: &CvConfig,
    forest: &ForestConfig,
    seed: u64,
    observer: &(dyn Fn(&FoldEvent<'_>) + Sync),
) -> Result<EvalReport, EvalError> {
    if cv.repeats == 0 {
        return Err(EvalError::NoRepeats);
    }
    if features.is_empty() {
        return Err(EvalError::Empty);
    }
    let labels: Vec<Class> = features
        .iter()
        .enumerate()
        .map(|(i, v)| v.label.ok_or(EvalError::Unlabeled(i)))
        .collect::<Result<_, _>>()?;
    let epochs: Vec<usize> = features.iter().map(|v| v.provenance.epoch).collect();
    let n = features.len();

    let plans: Vec<FoldPlan> = (0..cv.repeats)
        .map(|r| {
            let plan_seed = seed::derive(seed::derive(seed, r as u64), 0);
            if cv.group_by_epoch {
                grouped_kfold_split(&epochs, cv.folds, plan_seed)
            } else {
                kfold_split(n, cv.folds, plan_seed)
            }
        })
        .collect::<Result<_, _>>()?;

    let k = cv.folds;
    let units = par::map_range(cv.repeats * k, |u| -> Result<Counts, EvalError> {
        let (r, f) = (u / k, u % k);
        let plan = &plans[r];
        let train = plan.train_rows(f);
        let test = plan.test_rows(f);
        let scaler = fit_scaler(train.iter().map(|&i| &features[i]))?;
        observer(&FoldEvent {
            repeat: r,
            fold: f,
            train: &train,
            test: &test,
            scaler: &scaler,
        });
        let mut values = Vec::with_capacity(train.len() * NUM_FEATURES);
        for &i in &train {
            values.extend(scaler.scale_values(features[i].values()));
        }
        let data = Dataset::new(NUM_FEATURES, values, train.iter().map(|&i| labels[i]).collect())?;
        let fold_seed = seed::derive(seed::derive(seed, r as u64), f as u64 + 1);
        let model = train_forest(&data, forest, fold_seed)?;
        let mut c = Counts::default();
        for &i in &test {
            c.record(model.predict(&scaler.scale_values(features[i].values())), labels[i]);
        }
        Ok(c)
    });

    let mut pooled = vec![Counts::default(); cv.repeats];
    for (u, c) in units.into_iter().enumerate() {
        pooled[u / k].add(c?);
    }
    let per_repeat: Vec<Metrics> = pooled.into_iter().map(Metrics::from_counts).collect();
    Ok(EvalReport {
        seed,
        cv: *cv,
        forest: forest.clone(),
        rows: n,
        tpr: Summary::of(per_repeat.iter().map(|m| m.tpr)),
        tnr: Summary::of(per_repeat.iter().map(|m| m.tnr)),
        fpr: Summary::of(per_repeat.iter().map(|m| m.fpr)),
        accuracy: Summary::of(per_repeat.iter().map(|m| m.accuracy)),
        per_repeat,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::features::{GoodnessOfFit, Provenance};
    use rand_distr::{Distribution, Normal};
    use std::sync::Mutex;

    fn counts(tp: usize, fn_: usize, tn: usize, fp: usize) -> Counts {
        Counts { tp, fn_, tn, fp }
    }

    #[test]
    fn metric_arithmetic() {
        let m = Metrics::from_counts(counts(46, 4, 48, 2));
        assert_eq!(m.tpr, Some(0.92));
        assert_eq!(m.tnr, Some(0.96));
        assert_eq!(m.fpr, Some(0.04));
        assert_eq!(m.accuracy, Some(0.94));
    }

    #[test]
    fn confusion_from_labels() {
        use Class::*;
        let actual = [Seizure, Seizure, NonSeizure, NonSeizure];
        let m = confusion_metrics(&actual, &actual).unwrap();
        assert_eq!(m.accuracy, Some(1.0));
        let m = confusion_metrics(&[Seizure, NonSeizure, Seizure, NonSeizure], &actual).unwrap();
        assert_eq!(m.counts, counts(1, 1, 1, 1));
        let negatives = [NonSeizure, NonSeizure];
        let m = confusion_metrics(&negatives, &negatives).unwrap();
        assert_eq!(m.tpr, None);
        assert_eq!(m.sensitivity(), Err(EvalError::NoPositives));
        assert_eq!(m.specificity(), Ok(1.0));
        assert!(matches!(
            confusion_metrics(&[Seizure], &actual),
            Err(EvalError::LengthMismatch { .. })
        ));
        assert_eq!(confusion_metrics(&[], &[]), Err(EvalError::Empty));
    }

    #[test]
    fn fold_sizes() {
        let p = kfold_split(100, 20, 1).unwrap();
        assert!(p.sizes().iter().all(|&s| s == 5));
        let mut s = kfold_split(66, 20, 1).unwrap().sizes();
        s.sort_unstable();
        assert_eq!(s.iter().filter(|&&x| x == 4).count(), 6);
        assert_eq!(s.iter().filter(|&&x| x == 3).count(), 14);
        assert_eq!(kfold_split(10, 1, 0), Err(EvalError::BadK { k: 1, n: 10 }));
        assert_eq!(kfold_split(3, 4, 0), Err(EvalError::BadK { k: 4, n: 3 }));
        assert_eq!(kfold_split(50, 7, 3), kfold_split(50, 7, 3));
        assert_ne!(kfold_split(50, 7, 3), kfold_split(50, 7, 4));
    }

    #[test]
    fn grouped_folds_keep_groups_together() {
        let groups: Vec<usize> = (0..60).map(|i| i / 6).collect();
        let p = grouped_kfold_split(&groups, 5, 2).unwrap();
        for g in 0..10 {
            let folds: Vec<usize> = (0..60).filter(|&i| groups[i] == g).map(|i| p.assignments[i]).collect();
            assert!(folds.windows(2).all(|w| w[0] == w[1]));
        }
        assert!(grouped_kfold_split(&groups, 11, 0).is_err());
    }

    fn separable(n: usize, seed: u64) -> Vec<FeatureVector> {
        let mut rng = seed::rng(seed);
        let noise = Normal::new(0.0, 0.05).unwrap();
        (0..n)
            .map(|i| {
                let class = if i % 2 == 0 { Class::NonSeizure } else { Class::Seizure };
                let c = if class == Class::Seizure { 3.0 } else { 1.0 };
                let v: [f64; 4] = std::array::from_fn(|_| c + noise.sample(&mut rng));
                FeatureVector::new(
                    GoodnessOfFit::from_array(v),
                    Provenance {
                        epoch: i / 4,
                        channel: 0,
                        segment: i,
                    },
                    Some(class),
                )
            })
            .collect()
    }

    fn small_forest() -> ForestConfig {
        ForestConfig {
            trees: 20,
            ..Default::default()
        }
    }

    #[test]
    fn separable_features_score_high() {
        let data = separable(200, 3);
        let cv = CvConfig {
            folds: 20,
            repeats: 10,
            group_by_epoch: false,
        };
        let report = cross_validate(&data, &cv, &small_forest(), 11).unwrap();
        assert_eq!(report.per_repeat.len(), 10);
        assert!(report.accuracy.mean.unwrap() >= 0.95);
        for m in &report.per_repeat {
            assert_eq!(m.counts.total(), 200);
            let c = m.counts;
            assert_eq!(m.accuracy.unwrap(), (c.tp + c.tn) as f64 / 200.0);
        }
    }

    #[test]
    fn deterministic_report() {
        let data = separable(80, 5);
        let cv = CvConfig {
            folds: 5,
            repeats: 3,
            group_by_epoch: false,
        };
        let a = cross_validate(&data, &cv, &small_forest(), 2).unwrap();
        let b = cross_validate(&data, &cv, &small_forest(), 2).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn each_row_tested_once_and_scaler_uses_train_only() {
        let data = separable(60, 8);
        let cv = CvConfig {
            folds: 6,
            repeats: 2,
            group_by_epoch: true,
        };
        let seen = Mutex::new(vec![vec![0usize; 60]; 2]);
        cross_validate_observed(&data, &cv, &small_forest(), 4, &|ev| {
            let expected = fit_scaler(ev.train.iter().map(|&i| &data[i])).unwrap();
            assert_eq!(*ev.scaler, expected);
            assert!(ev.test.iter().all(|t| !ev.train.contains(t)));
            let mut s = seen.lock().unwrap();
            for &t in ev.test {
                s[ev.repeat][t] += 1;
            }
        })
        .unwrap();
        assert!(seen.into_inner().unwrap().iter().flatten().all(|&c| c == 1));
    }

    #[test]
    fn config_errors() {
        let data = separable(20, 0);
        let cv = CvConfig {
            repeats: 0,
            ..Default::default()
        };
        assert_eq!(
            cross_validate(&data, &cv, &small_forest(), 0),
            Err(EvalError::NoRepeats)
        );
        let cv = CvConfig {
            folds: 21,
            repeats: 1,
            group_by_epoch: false,
        };
        assert!(matches!(
            cross_validate(&data, &cv, &small_forest(), 0),
            Err(EvalError::BadK { .. })
        ));
        let mut unlabeled = data.clone();
        unlabeled[3].label = None;
        let cv = CvConfig {
            folds: 2,
            repeats: 1,
            group_by_epoch: false,
        };
        assert_eq!(
            cross_validate(&unlabeled, &cv, &small_forest(), 0),
            Err(EvalError::Unlabeled(3))
        );
    }

    #[test]
    fn summary_statistics() {
        let s = Summary::of([Some(0.5), None, Some(1.0)].into_iter());
        assert_eq!(s.mean, Some(0.75));
        assert_eq!(s.defined_in, 2);
        assert!((s.sd.unwrap() - (0.125f64).sqrt()).abs() < 1e-15);
        assert_eq!(Summary::of([None].into_iter()).mean, None);
    }
}
