use eegfit::edf::{read_recording, write_edf, EegRecording};
use eegfit::eval::{confusion_metrics, kfold_split};
use eegfit::forest::{best_split, train_forest, Dataset, ForestConfig};
use eegfit::segment::segment;
use eegfit::Class;
use ndarray::{Array2, Axis};
use proptest::prelude::*;

fn recording(n: usize, m: usize, values: &[f64]) -> EegRecording {
    let samples = Array2::from_shape_fn((n, m), |(i, j)| values[(i * m + j) % values.len()]);
    let labels = (0..m).map(|j| format!("C{j}")).collect();
    EegRecording::new(samples, 256.0, labels).unwrap()
}

fn class(bit: bool) -> Class {
    if bit {
        Class::Seizure
    } else {
        Class::NonSeizure
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn edf_round_trip_within_one_step(
        seconds in 1usize..4,
        m in 1usize..4,
        values in prop::collection::vec(-500.0f64..500.0, 1..64),
    ) {
        let rec = recording(256 * seconds, m, &values);
        let mut bytes = Vec::new();
        write_edf(&rec, &mut bytes).unwrap();
        let (header, back) = read_recording::<_, &str>(bytes.as_slice(), None).unwrap();
        prop_assert_eq!(back.num_samples(), rec.num_samples());
        prop_assert_eq!(back.channel_labels(), rec.channel_labels());
        for (j, sig) in header.signals.iter().enumerate() {
            let step = sig.quantization_step();
            for (a, b) in rec.samples().column(j).iter().zip(back.samples().column(j)) {
                prop_assert!((a - b).abs() <= step, "{a} vs {b}, step {step}");
            }
        }
    }

    #[test]
    fn segments_tile_the_recording(n in 256usize..2000, m in 1usize..4) {
        let values: Vec<f64> = (0..97).map(f64::from).collect();
        let rec = recording(n, m, &values);
        let segs = segment(&rec, 1.0).unwrap();
        prop_assert_eq!(segs.len(), n / 256);
        let views: Vec<_> = segs.iter().map(|s| s.samples.view()).collect();
        let joined = ndarray::concatenate(Axis(0), &views).unwrap();
        prop_assert_eq!(joined.view(), rec.samples().slice(ndarray::s![..segs.len() * 256, ..]));
        for (i, s) in segs.iter().enumerate() {
            prop_assert_eq!(s.start_s, i as f64);
        }
    }

    #[test]
    fn folds_partition_rows(n in 2usize..300, k in 2usize..25, seed in any::<u64>()) {
        prop_assume!(k <= n);
        let plan = kfold_split(n, k, seed).unwrap();
        let sizes = plan.sizes();
        prop_assert_eq!(sizes.iter().sum::<usize>(), n);
        prop_assert!(sizes.iter().max().unwrap() - sizes.iter().min().unwrap() <= 1);
        for f in 0..k {
            let test = plan.test_rows(f);
            let train = plan.train_rows(f);
            prop_assert_eq!(test.len() + train.len(), n);
            prop_assert!(test.iter().all(|t| train.binary_search(t).is_err()));
        }
    }

    #[test]
    fn pooled_accuracy_is_exact(pairs in prop::collection::vec((any::<bool>(), any::<bool>()), 1..200)) {
        let predicted: Vec<Class> = pairs.iter().map(|p| class(p.0)).collect();
        let actual: Vec<Class> = pairs.iter().map(|p| class(p.1)).collect();
        let m = confusion_metrics(&predicted, &actual).unwrap();
        let c = m.counts;
        prop_assert_eq!(c.total(), pairs.len());
        prop_assert_eq!(m.accuracy, Some((c.tp + c.tn) as f64 / pairs.len() as f64));
        if let (Some(tnr), Some(fpr)) = (m.tnr, m.fpr) {
            prop_assert!((tnr + fpr - 1.0).abs() < 1e-15);
        }
    }

    #[test]
    fn split_decrease_is_non_negative(
        rows in prop::collection::vec(((0u8..5, 0u8..5, 0u8..5, 0u8..5), any::<bool>()), 1..40),
        m_try in 1usize..=4,
    ) {
        let values: Vec<f64> = rows.iter().flat_map(|((a, b, c, d), _)| [*a, *b, *c, *d].map(f64::from)).collect();
        let data = Dataset::new(4, values, rows.iter().map(|r| class(r.1)).collect()).unwrap();
        let idx: Vec<usize> = (0..rows.len()).collect();
        let features: Vec<usize> = (0..m_try).collect();
        if let Some(s) = best_split(&data, &idx, &features, 1) {
            prop_assert!(s.impurity_decrease > 0.0);
            let left = idx.iter().filter(|&&r| data.value(r, s.feature) < s.threshold).count();
            prop_assert!(left > 0 && left < rows.len());
        }
    }

    #[test]
    fn unbagged_full_tree_fits_consistent_data(
        raw in prop::collection::vec((prop::array::uniform4(0.0f64..1.0), any::<bool>()), 2..80),
        seed in any::<u64>(),
    ) {
        // Continuous features make conflicting duplicates practically impossible.
        prop_assume!(raw.iter().any(|r| r.1) && raw.iter().any(|r| !r.1));
        let data = Dataset::new(
            4,
            raw.iter().flat_map(|r| r.0).collect(),
            raw.iter().map(|r| class(r.1)).collect(),
        ).unwrap();
        let cfg = ForestConfig { trees: 1, m_try: 4, bootstrap: false, ..Default::default() };
        let model = train_forest(&data, &cfg, seed).unwrap();
        for r in 0..data.len() {
            prop_assert_eq!(model.predict(data.row(r)), data.label(r));
        }
    }

    #[test]
    fn forest_is_deterministic_with_full_vote(
        raw in prop::collection::vec((prop::array::uniform4(0.0f64..1.0), any::<bool>()), 4..60),
        probes in prop::collection::vec(prop::array::uniform4(0.0f64..1.0), 1..20),
        seed in any::<u64>(),
        trees in 1usize..12,
    ) {
        prop_assume!(raw.iter().any(|r| r.1) && raw.iter().any(|r| !r.1));
        let data = Dataset::new(
            4,
            raw.iter().flat_map(|r| r.0).collect(),
            raw.iter().map(|r| class(r.1)).collect(),
        ).unwrap();
        let cfg = ForestConfig { trees, ..Default::default() };
        let a = train_forest(&data, &cfg, seed).unwrap();
        let b = train_forest(&data, &cfg, seed).unwrap();
        for p in &probes {
            let v = a.votes(p);
            prop_assert_eq!(v[0] + v[1], trees);
            prop_assert_eq!(a.predict(p), b.predict(p));
        }
    }
}

#[test]
fn seizure_bursts_separate_in_feature_space() {
    use eegfit::pipeline::{extract, synthesize, FeatureSettings};
    use eegfit::synth::SyntheticSpec;

    let spec = SyntheticSpec {
        num_channels: 2,
        ..SyntheticSpec::alternating_epochs(4, 4.0)
    };
    let rec = synthesize(&spec, 5).unwrap();
    let rows = extract(&rec, &FeatureSettings::default(), 0).unwrap().features;
    let median_psi = |c: Class| {
        let mut v: Vec<f64> = rows.iter().filter(|r| r.label == Some(c)).map(|r| r.stats.psi).collect();
        v.sort_by(f64::total_cmp);
        v[v.len() / 2]
    };
    assert!(median_psi(Class::Seizure) > 10.0 * median_psi(Class::NonSeizure));
}
