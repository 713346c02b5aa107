//! Acceptance checks. Runs as a plain binary so every criterion prints one
//! PASS/FAIL line; exits nonzero if any gating criterion fails.
//!
//! Criterion 8 needs the CHB-MIT epochs. Point `EEGFIT_CHBMIT_CONFIG` at a
//! pipeline config JSON with recorded input to run it; it is informative and
//! never gates.

use std::time::{Duration, Instant};

use eegfit::eval::{CvConfig, Metrics};
use eegfit::features::{gof, FeatureVector};
use eegfit::filter::{apply_filter, frequency_grid, frequency_response, skip_factor, FirKernel};
use eegfit::fit::{fit_model, QuadraticPairs};
use eegfit::forest::{best_split, train_forest, Dataset, ForestConfig};
use eegfit::pipeline::{self, FeatureSettings, PipelineConfig};
use eegfit::synth::SyntheticSpec;
use eegfit::{seed, Class};
use num_complex::Complex64;
use rand::Rng;
use rand_distr::{Distribution, Normal};

struct Outcome {
    passed: bool,
    detail: String,
}

fn outcome(passed: bool, detail: impl Into<String>) -> Outcome {
    Outcome {
        passed,
        detail: detail.into(),
    }
}

fn timed(budget: Duration, f: impl FnOnce() -> Outcome) -> Outcome {
    let t0 = Instant::now();
    let o = f();
    let dt = t0.elapsed();
    let within = dt < budget;
    Outcome {
        passed: o.passed && within,
        detail: format!("{}; {:.2?} (budget {:?})", o.detail, dt, budget),
    }
}

fn rel_err(got: f64, want: f64) -> f64 {
    (got - want).abs() / want.abs().max(1.0)
}

fn filter_exactness() -> Outcome {
    let fs = 256.0;
    let kernel = FirKernel::for_sampling_rate(fs, None).unwrap();
    let l = kernel.skip();
    let n = 4096;
    let ramp: Vec<f64> = (0..n).map(|i| i as f64).collect();
    let y = apply_filter(&ramp, &kernel);
    let worst = y[l..n - l].iter().map(|v| rel_err(*v, 256.0)).fold(0.0, f64::max);
    let flat = apply_filter(&vec![3.7; n], &kernel);
    let flat_max = flat[l..n - l].iter().fold(0.0f64, |m, v| m.max(v.abs()));
    outcome(
        l == 51 && worst <= 1e-12 && flat_max == 0.0,
        format!("L={l}, ramp rel err {worst:.1e}, constant max {flat_max:e}"),
    )
}

/// `H(Ω) = Σ_k b[k]·e^{−jΩk}` summed over every tap.
fn dtft(kernel: &FirKernel, f: f64, fs: f64) -> Complex64 {
    let l = kernel.skip() as isize;
    let omega = 2.0 * std::f64::consts::PI * f / fs;
    (-l..=l)
        .map(|k| kernel.coefficient(k) * Complex64::from_polar(1.0, -omega * k as f64))
        .sum()
}

fn frequency_response_agreement() -> Outcome {
    let fs = 256.0;
    let kernel = FirKernel::for_sampling_rate(fs, None).unwrap();
    let grid = frequency_grid(fs, 1024);
    let closed = frequency_response(&kernel, &grid, fs).unwrap();
    let max_err = grid
        .iter()
        .zip(&closed)
        .map(|(&f, h)| (dtft(&kernel, f, fs) - h).norm())
        .fold(0.0, f64::max);
    let step = grid[1] - grid[0];
    let mag: Vec<f64> = closed.iter().map(|h| h.norm()).collect();
    let first_min = (1..mag.len() - 1)
        .find(|&i| mag[i] <= mag[i - 1] && mag[i] <= mag[i + 1])
        .map(|i| grid[i]);
    let null = fs / (2.0 * kernel.skip() as f64);
    let null_ok = first_min.is_some_and(|f| (f - null).abs() <= step);
    outcome(
        max_err < 1e-9 && mag[0] == 0.0 && null_ok,
        format!(
            "max |Δ| {max_err:.1e}, |H(0)|={}, first null {:.3} Hz vs {null:.3} Hz (grid {step:.3} Hz)",
            mag[0],
            first_min.unwrap_or(f64::NAN)
        ),
    )
}

/// Normal equations `(AᵀWA)θ = AᵀWy` with column equilibration, solved by
/// Gaussian elimination with partial pivoting.
fn normal_equations(x: &[f64], y: &[f64], w: &[f64]) -> [f64; 3] {
    let basis = |x: f64| [(x - std::f64::consts::PI).sin(), (x - 10.0) * (x - 10.0), 1.0];
    let mut m = [[0.0f64; 4]; 3];
    for i in 0..x.len() {
        let a = basis(x[i]);
        for r in 0..3 {
            for c in 0..3 {
                m[r][c] += w[i] * a[r] * a[c];
            }
            m[r][3] += w[i] * a[r] * y[i];
        }
    }
    let d: [f64; 3] = std::array::from_fn(|j| m[j][j].sqrt());
    for r in 0..3 {
        for c in 0..3 {
            m[r][c] /= d[r] * d[c];
        }
        m[r][3] /= d[r];
    }
    for col in 0..3 {
        let p = (col..3).max_by(|&a, &b| m[a][col].abs().total_cmp(&m[b][col].abs())).unwrap();
        m.swap(col, p);
        let pivot = m[col];
        for row in m.iter_mut().skip(col + 1) {
            let f = row[col] / pivot[col];
            for (v, p) in row.iter_mut().zip(pivot).skip(col) {
                *v -= f * p;
            }
        }
    }
    let mut z = [0.0; 3];
    for r in (0..3).rev() {
        let s: f64 = (r + 1..3).map(|c| m[r][c] * z[c]).sum();
        z[r] = (m[r][3] - s) / m[r][r];
    }
    std::array::from_fn(|j| z[j] / d[j])
}

fn least_squares_oracle() -> Outcome {
    let mut rng = seed::rng(2024);
    let mut worst = 0.0f64;
    for _ in 0..100 {
        let n = rng.random_range(10..=500);
        let theta = [
            rng.random_range(-5.0..5.0),
            rng.random_range(-5.0..5.0),
            rng.random_range(-50.0..50.0),
        ];
        let noise = Normal::new(0.0, 2.0).unwrap();
        let x: Vec<f64> = (0..n).map(|_| rng.random_range(-30.0..30.0)).collect();
        let y: Vec<f64> = x
            .iter()
            .map(|&v| {
                theta[0] * (v - std::f64::consts::PI).sin()
                    + theta[1] * (v - 10.0) * (v - 10.0)
                    + theta[2]
                    + noise.sample(&mut rng)
            })
            .collect();
        let w: Vec<f64> = (0..n).map(|_| rng.random_range(0.2..5.0)).collect();
        let oracle = normal_equations(&x, &y, &w);
        let fit = fit_model(&QuadraticPairs::new(x, y, w).unwrap()).unwrap();
        for (g, o) in fit.coefficients().iter().zip(oracle) {
            worst = worst.max(rel_err(*g, o));
        }
    }
    let x: Vec<f64> = (-50..=50).map(f64::from).collect();
    let y: Vec<f64> = x.iter().map(|v| (v - 10.0) * (v - 10.0)).collect();
    let exact = fit_model(&QuadraticPairs::new(x, y, vec![1.0; 101]).unwrap()).unwrap();
    let recovery = [exact.a, exact.b - 1.0, exact.c].iter().fold(0.0f64, |m, v| m.max(v.abs()));
    outcome(
        worst <= 1e-8 && recovery <= 1e-9,
        format!("100 instances, worst rel err {worst:.1e}; exact recovery err {recovery:.1e}"),
    )
}

fn wide_grid_shape() -> Outcome {
    let mut parts = Vec::new();
    let mut ok = true;
    for (half, step) in [(1000.0, 1.0), (500.0, 0.5), (2000.0, 4.0)] {
        let n = (2.0 * half / step) as usize + 1;
        let x: Vec<f64> = (0..n).map(|i| -half + i as f64 * step).collect();
        let y: Vec<f64> = x.iter().map(|v| v * v).collect();
        let fit = fit_model(&QuadraticPairs::new(x, y, vec![1.0; n]).unwrap()).unwrap();
        ok &= (0.99..=1.01).contains(&fit.b);
        parts.push(format!("[±{half}, step {step}] b={:.6}", fit.b));
    }
    outcome(ok, parts.join(", "))
}

fn gof_identities() -> Outcome {
    let spec = SyntheticSpec {
        num_channels: 3,
        ..SyntheticSpec::alternating_epochs(4, 5.0)
    };
    let rec = pipeline::synthesize(&spec, 9).unwrap();
    let features: Vec<FeatureVector> = pipeline::extract(&rec, &FeatureSettings::default(), 0).unwrap().features;
    let (n, m) = (256.0, 3.0);
    let violations = features
        .iter()
        .filter(|v| {
            let s = v.stats;
            s.psi != (s.zeta / (n - m)).sqrt() || s.sigma_adj != 1.0 - (1.0 - s.phi) * (n - 1.0) / (n - m - 1.0)
        })
        .count();
    let y: Vec<f64> = (0..20).map(|i| (i as f64).sin() * 4.0 + i as f64).collect();
    let perfect = gof(&y, &y, &[1.0; 20], 3).unwrap().to_array();
    outcome(
        violations == 0 && perfect == [0.0, 1.0, 1.0, 0.0],
        format!("{} vectors, {violations} violations; perfect fit {perfect:?}", features.len()),
    )
}

/// Largest Gini decrease over every candidate split, by direct evaluation,
/// and the first split (feature, then threshold order) attaining it.
fn gini_oracle(rows: &[([f64; 2], usize)]) -> (f64, Option<(usize, f64)>) {
    let gini = |idx: &[usize]| {
        if idx.is_empty() {
            return 0.0;
        }
        let p = idx.iter().filter(|&&i| rows[i].1 == 1).count() as f64 / idx.len() as f64;
        1.0 - p * p - (1.0 - p) * (1.0 - p)
    };
    let all: Vec<usize> = (0..rows.len()).collect();
    let parent = gini(&all);
    let n = rows.len() as f64;
    let mut candidates = Vec::new();
    for f in 0..2 {
        let mut vals: Vec<f64> = rows.iter().map(|r| r.0[f]).collect();
        vals.sort_by(f64::total_cmp);
        vals.dedup();
        for t in vals.windows(2).map(|w| (w[0] + w[1]) / 2.0) {
            let (l, r): (Vec<usize>, Vec<usize>) = all.iter().partition(|&&i| rows[i].0[f] < t);
            let dec = parent - (l.len() as f64 / n) * gini(&l) - (r.len() as f64 / n) * gini(&r);
            candidates.push((f, t, dec));
        }
    }
    let best = candidates.iter().map(|c| c.2).fold(0.0, f64::max);
    let first = candidates.iter().find(|c| c.2 >= best - 1e-12).map(|c| (c.0, c.1));
    (best, first)
}

fn forest_sanity() -> Outcome {
    let mut rng = seed::rng(77);
    let noise = Normal::new(0.0, 0.08).unwrap();
    let mut values = Vec::new();
    let mut labels = Vec::new();
    for i in 0..400 {
        let class = if i < 200 { Class::NonSeizure } else { Class::Seizure };
        let centre = if class == Class::Seizure { 0.7 } else { 0.3 };
        for _ in 0..4 {
            values.push(centre + noise.sample(&mut rng));
        }
        labels.push(class);
    }
    let data = Dataset::new(4, values, labels).unwrap();
    let model = train_forest(&data, &ForestConfig::default(), 12345).unwrap();
    let oob = model.oob_accuracy().unwrap();

    let mut checked = 0usize;
    let mut mismatches = 0usize;
    let levels = |n: usize| -> usize { if n <= 4 { 3 } else { 2 } };
    for n in 1..=6usize {
        let k = levels(n);
        let per_row = k * k * 2;
        for code in 0..per_row.pow(n as u32) {
            let mut c = code;
            let rows: Vec<([f64; 2], usize)> = (0..n)
                .map(|_| {
                    let r = c % per_row;
                    c /= per_row;
                    ([(r % k) as f64, ((r / k) % k) as f64], r / (k * k))
                })
                .collect();
            let data = Dataset::new(
                2,
                rows.iter().flat_map(|r| r.0).collect(),
                rows.iter().map(|r| Class::from_index(r.1).unwrap()).collect(),
            )
            .unwrap();
            let idx: Vec<usize> = (0..n).collect();
            let got = best_split(&data, &idx, &[0, 1], 1);
            let (best, first) = gini_oracle(&rows);
            let agrees = match got {
                None => best <= 1e-12,
                Some(s) => {
                    s.impurity_decrease >= 0.0
                        && (s.impurity_decrease - best).abs() <= 1e-12
                        && first == Some((s.feature, s.threshold))
                }
            };
            checked += 1;
            mismatches += usize::from(!agrees);
        }
    }
    outcome(
        oob >= 0.95 && mismatches == 0,
        format!("OOB accuracy {oob:.4} (J=100, m_try=2); Gini oracle {checked} datasets, {mismatches} mismatches"),
    )
}

fn e2e_config(seed: u64) -> PipelineConfig {
    let spec = SyntheticSpec {
        num_channels: 4,
        ..SyntheticSpec::alternating_epochs(33, 6.0)
    };
    let mut cfg = PipelineConfig::from_json(r#"{"input": {"synthetic": {"duration_s": 1}}}"#, "inline".as_ref()).unwrap();
    cfg.input = pipeline::InputSource::Synthetic(spec);
    cfg.cv = CvConfig {
        folds: 20,
        repeats: 25,
        group_by_epoch: false,
    };
    cfg.seed = seed;
    cfg
}

fn end_to_end() -> Outcome {
    let cfg = e2e_config(7);
    let recs = pipeline::load_input(&cfg).unwrap();
    let ex = pipeline::extract_all(&recs, &cfg.features).unwrap();
    let report = pipeline::evaluate(&ex.features, &cfg.cv, &cfg.forest, cfg.seed).unwrap();
    let acc = report.accuracy.mean.unwrap_or(0.0);
    let tpr = report.tpr.mean.unwrap_or(0.0);
    // A shorter rerun must reproduce the leading repeats exactly.
    let mut short = cfg.cv;
    short.repeats = 2;
    let again = pipeline::evaluate(&ex.features, &short, &cfg.forest, cfg.seed).unwrap();
    let deterministic = again.per_repeat[..] == report.per_repeat[..2];
    outcome(
        acc >= 0.90 && tpr >= 0.85 && deterministic,
        format!(
            "{} rows, 66 epochs; accuracy {acc:.4}, sensitivity {tpr:.4}, deterministic {deterministic}",
            ex.features.len()
        ),
    )
}

fn chb_mit() -> Option<Outcome> {
    let path = std::env::var_os("EEGFIT_CHBMIT_CONFIG")?;
    let mut cfg = match PipelineConfig::load(path.as_ref()) {
        Ok(c) => c,
        Err(e) => return Some(outcome(false, format!("config: {e}"))),
    };
    cfg.cv = CvConfig {
        folds: 20,
        repeats: 1000,
        group_by_epoch: false,
    };
    let run = || -> eegfit::Result<_> {
        let recs = pipeline::load_input(&cfg)?;
        let ex = pipeline::extract_all(&recs, &cfg.features)?;
        pipeline::evaluate(&ex.features, &cfg.cv, &cfg.forest, cfg.seed)
    };
    Some(match run() {
        Ok(r) => outcome(
            r.accuracy.mean.is_some_and(|a| a >= 0.85),
            format!("{} (target accuracy >= 0.85)", r.summary_line()),
        ),
        Err(e) => outcome(false, e.to_string()),
    })
}

fn metrics_arithmetic() -> Outcome {
    let m = Metrics::from_counts(eegfit::eval::Counts {
        tp: 46,
        fn_: 4,
        tn: 48,
        fp: 2,
    });
    let got = (m.tpr, m.tnr, m.fpr, m.accuracy);
    outcome(
        got == (Some(0.92), Some(0.96), Some(0.04), Some(0.94)),
        format!("{got:?}"),
    )
}

fn main() {
    assert_eq!(skip_factor(256.0), 51);
    let gating: Vec<(&str, Outcome)> = vec![
        ("1 filter exactness", timed(Duration::from_secs(1), filter_exactness)),
        ("2 frequency response", frequency_response_agreement()),
        ("3 least-squares oracle", timed(Duration::from_secs(5), least_squares_oracle)),
        ("4 wide-grid b coefficient", wide_grid_shape()),
        ("5 goodness-of-fit identities", gof_identities()),
        ("6 forest sanity", timed(Duration::from_secs(10), forest_sanity)),
        ("7 synthetic end-to-end", timed(Duration::from_secs(60), end_to_end)),
        ("9 metrics arithmetic", metrics_arithmetic()),
    ];
    let mut failed = 0;
    for (name, o) in &gating {
        println!("[{}] {name}: {}", if o.passed { "PASS" } else { "FAIL" }, o.detail);
        failed += usize::from(!o.passed);
    }
    match chb_mit() {
        Some(o) => println!(
            "[{}] 8 CHB-MIT reproduction (informative): {}",
            if o.passed { "PASS" } else { "MISS" },
            o.detail
        ),
        None => println!("[SKIP] 8 CHB-MIT reproduction (informative): EEGFIT_CHBMIT_CONFIG not set"),
    }
    println!("{} of {} gating criteria passed", gating.len() - failed, gating.len());
    if failed > 0 {
        std::process::exit(1);
    }
}
