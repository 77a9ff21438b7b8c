//! Acceptance suite: one PASS/FAIL line per criterion, nonzero exit if any
//! criterion fails. Run with `cargo test --test acceptance`.

use std::path::Path;
use std::process::Command;
use std::time::{Duration, Instant};

use ndarray::Array2;
use num_rational::Ratio;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use annotator_models::aggregate::{
    all_binary, disagreement, dist_binary, dist_multiclass, majority_binary, majority_multiclass, one_binary, Target, TieMode,
    ValidLabelSet,
};
use annotator_models::classifiers::forest::Node;
use annotator_models::classifiers::{
    compute_class_weights, gini, mlp_loss_and_grad, oversample_indices, train_forest, train_svm_with_report, ForestConfig, Gamma,
    MlpBatch, MlpShape, ModelParams, SvmConfig,
};
use annotator_models::corpus::{count_labels, split_train_validation, Label};
use annotator_models::metrics::{js_distance, macro_f1, score_subtask1, score_subtask2};
use annotator_models::pipeline::{
    explore, gold_subtask1, gold_subtask2, run_subtask1, run_subtask2, subtask1_from_multisets, train_all_annotators,
    ExperimentConfig,
};
use annotator_models::synthetic::{generate, SyntheticSpec, SMALL_CONFIG};

type Outcome = Result<String, String>;

macro_rules! ensure {
    ($cond:expr, $($fmt:tt)+) => {
        if !$cond {
            return Err(format!($($fmt)+));
        }
    };
}

fn labels(values: &[u8]) -> Vec<Label> {
    values.iter().map(|&v| Label::new(v).unwrap()).collect()
}

fn set(values: &[u8]) -> ValidLabelSet {
    ValidLabelSet::from_categories(values.iter().copied()).unwrap()
}

/// Every multiset of size 1..=max over the five labels, as sorted vectors.
fn multisets(max: usize) -> Vec<Vec<u8>> {
    fn extend(prefix: &mut Vec<u8>, from: u8, max: usize, out: &mut Vec<Vec<u8>>) {
        if !prefix.is_empty() {
            out.push(prefix.clone());
        }
        if prefix.len() == max {
            return;
        }
        for v in from..5 {
            prefix.push(v);
            extend(prefix, v, max, out);
            prefix.pop();
        }
    }
    let mut out = Vec::new();
    extend(&mut Vec::new(), 0, max, &mut out);
    out
}

fn aggregation_oracle() -> Outcome {
    let all = multisets(6);
    ensure!(all.len() == 461, "expected 461 non-empty multisets, got {}", all.len());
    let size6 = all.iter().filter(|m| m.len() == 6).count();
    ensure!(size6 == 210, "expected 210 multisets of size 6, got {size6}");
    for m in &all {
        let l = labels(m);
        let n = m.len();
        let mut counts = [0usize; 5];
        for &v in m {
            counts[v as usize] += 1;
        }
        let sexist = n - counts[0];

        let bin_maj = if sexist > counts[0] {
            set(&[1])
        } else if sexist < counts[0] {
            set(&[0])
        } else {
            set(&[0, 1])
        };
        let max = *counts.iter().max().unwrap();
        let at_max: Vec<u8> = (0..5).filter(|&c| counts[c as usize] == max).collect();
        let assigned: Vec<u8> = (0..5).filter(|&c| counts[c as usize] > 0).collect();
        let multi_all = if at_max.len() == 1 { set(&at_max) } else { set(&assigned) };
        let dist_bin: Vec<f64> = vec![counts[0] as f64 / n as f64, sexist as f64 / n as f64];
        let dist_multi: Vec<f64> = counts.iter().map(|&c| c as f64 / n as f64).collect();

        let checks = [
            ("majority_binary", majority_binary(&l).unwrap() == bin_maj),
            ("one_binary", one_binary(&l).unwrap() == u8::from(sexist >= 1)),
            ("all_binary", all_binary(&l).unwrap() == u8::from(sexist == n)),
            ("majority_multiclass", majority_multiclass(&l, TieMode::Maximal).unwrap() == set(&at_max)),
            ("majority_multiclass(all_assigned)", majority_multiclass(&l, TieMode::AllAssigned).unwrap() == multi_all),
            ("disagreement", disagreement(&l).unwrap() == u8::from(counts[0] > 0 && sexist > 0)),
            ("dist_binary", dist_binary(&l).unwrap().probs() == dist_bin.as_slice()),
            ("dist_multiclass", dist_multiclass(&l).unwrap().probs() == dist_multi.as_slice()),
        ];
        if let Some((name, _)) = checks.iter().find(|(_, ok)| !ok) {
            return Err(format!("{name} disagrees with the counting oracle on {m:?}"));
        }
    }
    Ok(format!("{} multisets ({size6} of size 6), 7 operations, both tie modes", all.len()))
}

fn worked_examples() -> Outcome {
    let ex1 = labels(&[0, 2, 3, 3, 3, 3, 3, 4, 4, 4]);
    let ex2 = labels(&[0, 0, 0, 0]);
    ensure!(majority_binary(&ex1).unwrap() == set(&[1]), "example 1 bin_maj");
    ensure!(one_binary(&ex1).unwrap() == 1, "example 1 bin_one");
    ensure!(all_binary(&ex1).unwrap() == 0, "example 1 bin_all");
    ensure!(majority_multiclass(&ex1, TieMode::Maximal).unwrap() == set(&[3]), "example 1 multi_maj");
    ensure!(disagreement(&ex1).unwrap() == 1, "example 1 disagree_bin");
    ensure!(dist_binary(&ex1).unwrap().probs() == [0.1, 0.9], "example 1 binary distribution");
    ensure!(
        dist_multiclass(&ex1).unwrap().probs() == [0.1, 0.0, 0.1, 0.5, 0.3],
        "example 1 multiclass distribution"
    );
    ensure!(majority_binary(&ex2).unwrap() == set(&[0]), "example 2 bin_maj");
    ensure!(one_binary(&ex2).unwrap() == 0, "example 2 bin_one");
    ensure!(all_binary(&ex2).unwrap() == 0, "example 2 bin_all");
    ensure!(majority_multiclass(&ex2, TieMode::Maximal).unwrap() == set(&[0]), "example 2 multi_maj");
    ensure!(disagreement(&ex2).unwrap() == 0, "example 2 disagree_bin");
    ensure!(dist_binary(&ex2).unwrap().probs() == [1.0, 0.0], "example 2 binary distribution");
    ensure!(
        dist_multiclass(&ex2).unwrap().probs() == [1.0, 0.0, 0.0, 0.0, 0.0],
        "example 2 multiclass distribution"
    );
    let emitted = subtask1_from_multisets(vec!["e1".into(), "e2".into()], &[ex1, ex2], TieMode::Maximal).unwrap();
    let expected: [(Target, [u8; 2]); 5] = [
        (Target::BinMaj, [1, 0]),
        (Target::BinOne, [1, 0]),
        (Target::BinAll, [0, 0]),
        (Target::MultiMaj, [3, 0]),
        (Target::DisagreeBin, [1, 0]),
    ];
    for (t, values) in expected {
        ensure!(emitted.targets[&t] == values, "emitted {} = {:?}", t.name(), emitted.targets[&t]);
    }
    Ok("both examples, five targets and two distributions".into())
}

/// Weighted mean cross-entropy computed with plain loops.
fn oracle_loss(params: &[f64], s: MlpShape, x: &Array2<f64>, y: &[usize], w: &[f64]) -> f64 {
    let (w1, rest) = params.split_at(s.inputs * s.hidden);
    let (b1, rest) = rest.split_at(s.hidden);
    let (w2, b2) = rest.split_at(s.hidden * s.outputs);
    let mut total = 0.0;
    for r in 0..x.nrows() {
        let h: Vec<f64> = (0..s.hidden)
            .map(|j| (b1[j] + (0..s.inputs).map(|i| x[[r, i]] * w1[i * s.hidden + j]).sum::<f64>()).max(0.0))
            .collect();
        let logits: Vec<f64> = (0..s.outputs)
            .map(|k| b2[k] + (0..s.hidden).map(|j| h[j] * w2[j * s.outputs + k]).sum::<f64>())
            .collect();
        let m = logits.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let lse = m + logits.iter().map(|z| (z - m).exp()).sum::<f64>().ln();
        total += w[r] * (lse - logits[y[r]]);
    }
    total / x.nrows() as f64
}

fn min_abs_preactivation(params: &[f64], s: MlpShape, x: &Array2<f64>) -> f64 {
    let (w1, rest) = params.split_at(s.inputs * s.hidden);
    let b1 = &rest[..s.hidden];
    let mut min = f64::INFINITY;
    for r in 0..x.nrows() {
        for j in 0..s.hidden {
            let z = b1[j] + (0..s.inputs).map(|i| x[[r, i]] * w1[i * s.hidden + j]).sum::<f64>();
            min = min.min(z.abs());
        }
    }
    min
}

fn mlp_gradient_check() -> Outcome {
    const H: f64 = 1e-5;
    let mut rng = ChaCha8Rng::seed_from_u64(20);
    let mut networks = 0;
    let mut rejected = 0;
    let mut worst: f64 = 0.0;
    while networks < 25 {
        let shape = MlpShape {
            inputs: rng.random_range(1..=8),
            hidden: rng.random_range(1..=16),
            outputs: rng.random_range(2..=5),
        };
        let n = rng.random_range(1..=6);
        let params: Vec<f64> = (0..shape.n_params()).map(|_| rng.random_range(-1.0..1.0)).collect();
        let x = Array2::from_shape_fn((n, shape.inputs), |_| rng.random_range(-2.0..2.0));
        let y: Vec<usize> = (0..n).map(|_| rng.random_range(0..shape.outputs)).collect();
        let w: Vec<f64> = (0..n).map(|_| rng.random_range(0.1..3.0)).collect();
        // Finite differences straddling a ReLU kink are meaningless.
        if min_abs_preactivation(&params, shape, &x) < 1e-3 {
            rejected += 1;
            continue;
        }
        let batch = MlpBatch {
            x: x.view(),
            y: &y,
            weights: &w,
        };
        let (loss, grad) = mlp_loss_and_grad(&params, shape, &batch).map_err(|e| e.to_string())?;
        let expected = oracle_loss(&params, shape, &x, &y, &w);
        ensure!((loss - expected).abs() <= 1e-12 * expected.abs().max(1.0), "loss {loss} vs oracle {expected}");
        let mut probe = params.clone();
        for i in 0..params.len() {
            probe[i] = params[i] + H;
            let up = oracle_loss(&probe, shape, &x, &y, &w);
            probe[i] = params[i] - H;
            let down = oracle_loss(&probe, shape, &x, &y, &w);
            probe[i] = params[i];
            let numeric = (up - down) / (2.0 * H);
            let rel = (grad[i] - numeric).abs() / grad[i].abs().max(numeric.abs()).max(1e-6);
            worst = worst.max(rel);
        }
        networks += 1;
    }
    ensure!(worst < 1e-4, "max relative error {worst:.3e}");
    Ok(format!("{networks} networks ({rejected} redrawn near kinks), max relative error {worst:.2e}"))
}

fn svm_correctness() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(31);
    let mut problems = 0;
    for case in 0..12 {
        let noisy = case % 2 == 1;
        let n_classes = rng.random_range(2..=4);
        let n = rng.random_range(12..=40);
        let dim = rng.random_range(2..=5);
        let y: Vec<Label> = (0..n).map(|i| Label::new((i % n_classes) as u8).unwrap()).collect();
        let x = Array2::from_shape_fn((n, dim), |(r, c)| {
            let centre = if noisy { 0.0 } else { 6.0 * (((y[r].value() as usize + c) % n_classes) as f64) };
            centre + rng.random_range(-1.0..1.0)
        });
        let c = if noisy { 1.0 } else { 10.0 };
        let weights = compute_class_weights(&count_labels(y.iter().copied())).map_err(|e| e.to_string())?;
        let cfg = SvmConfig {
            c,
            ..SvmConfig::default()
        };
        let (model, report) = train_svm_with_report(x.view(), &y, &cfg, &weights).map_err(|e| e.to_string())?;
        ensure!(report.pairs.len() == n_classes * (n_classes - 1) / 2, "case {case}: pair count");
        for pair in &report.pairs {
            problems += 1;
            ensure!(pair.converged, "case {case}: pair ({}, {}) did not converge", pair.positive, pair.negative);
            let mut balance = 0.0;
            for (i, (&a, &yi)) in pair.alpha.iter().zip(&pair.y).enumerate() {
                let label = y[pair.rows[i]];
                let bound = c * weights.get(label.index()).unwrap();
                ensure!((pair.upper[i] - bound).abs() <= 1e-12 * bound, "case {case}: bound {} vs C·w = {bound}", pair.upper[i]);
                ensure!(a >= 0.0 && a <= pair.upper[i], "case {case}: alpha {a} outside [0, {}]", pair.upper[i]);
                balance += a * yi;
            }
            ensure!(balance.abs() < 1e-6, "case {case}: |Σαy| = {balance:.3e}");
        }
        if !noisy {
            let pred = model.predict(x.view()).map_err(|e| e.to_string())?;
            ensure!(pred == y, "case {case}: separable training set not fitted");
        }
    }

    let x = Array2::from_shape_vec((4, 2), vec![0.0, 0.0, 1.0, 1.0, 0.0, 1.0, 1.0, 0.0]).unwrap();
    let y = labels(&[0, 0, 1, 1]);
    let cfg = SvmConfig {
        c: 10.0,
        gamma: Gamma::Value(1.0),
        ..SvmConfig::default()
    };
    let weights = compute_class_weights(&count_labels(y.iter().copied())).unwrap();
    let (model, _) = train_svm_with_report(x.view(), &y, &cfg, &weights).map_err(|e| e.to_string())?;
    ensure!(model.predict(x.view()).unwrap() == y, "XOR not separated");
    Ok(format!("{problems} pairwise problems feasible, XOR 4/4"))
}

fn forest_structure() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(41);
    let mut trees = 0;
    for config in 0..100 {
        let n = rng.random_range(10..=60);
        let dim = rng.random_range(1..=8);
        let k = rng.random_range(2..=5);
        let x = Array2::from_shape_fn((n, dim), |_| rng.random_range(-1.0..1.0));
        let y: Vec<Label> = (0..n).map(|_| Label::new(rng.random_range(0..k)).unwrap()).collect();
        let max_depth = if rng.random_bool(0.7) { rng.random_range(1..=6) } else { rng.random_range(1..=91) };
        let cfg = ForestConfig {
            n_estimators: rng.random_range(10..=20),
            max_depth,
            seed: config,
        };
        let weights = compute_class_weights(&count_labels(y.iter().copied())).unwrap();
        let model = train_forest(x.view(), &y, &cfg, &weights).map_err(|e| e.to_string())?;
        let ModelParams::Forest(p) = &model.params else {
            return Err(format!("config {config}: not a forest"));
        };
        for t in &p.trees {
            trees += 1;
            ensure!(t.depth() <= max_depth, "config {config}: depth {} > {max_depth}", t.depth());
            for node in &t.nodes {
                if let Node::Leaf { dist } = node {
                    ensure!((dist.iter().sum::<f64>() - 1.0).abs() < 1e-9, "config {config}: leaf does not sum to one");
                }
            }
        }
    }
    ensure!(gini(&[7.0, 0.0]).unwrap() == 0.0, "pure two-class node");
    ensure!(gini(&[0.0, 0.0, 3.0, 0.0, 0.0]).unwrap() == 0.0, "pure five-class node");
    ensure!(gini(&[5.0, 5.0]).unwrap() == 0.5, "balanced two-class node");
    Ok(format!("{trees} trees over 100 configs within max_depth; gini 0 and 0.5 exact"))
}

fn random_distribution(rng: &mut ChaCha8Rng, len: usize) -> Vec<f64> {
    let mut v: Vec<f64> = (0..len)
        .map(|_| if rng.random_bool(0.2) { 0.0 } else { rng.random_range(0.0..1.0) })
        .collect();
    if v.iter().all(|x| *x == 0.0) {
        v[rng.random_range(0..len)] = 1.0;
    }
    let s: f64 = v.iter().sum();
    v.iter_mut().for_each(|x| *x /= s);
    v
}

fn metric_properties() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(51);
    let mut worst_sym: f64 = 0.0;
    let mut worst_zero: f64 = 0.0;
    let mut worst_triangle = f64::NEG_INFINITY;
    for _ in 0..1000 {
        let len = if rng.random_bool(0.5) { 2 } else { 5 };
        let p = random_distribution(&mut rng, len);
        let q = random_distribution(&mut rng, len);
        let r = random_distribution(&mut rng, len);
        let d = |a: &[f64], b: &[f64]| js_distance(a, b, 2.0).unwrap();
        worst_sym = worst_sym.max((d(&p, &q) - d(&q, &p)).abs());
        worst_zero = worst_zero.max(d(&p, &p)).max(d(&q, &q)).max(d(&r, &r));
        worst_triangle = worst_triangle.max(d(&p, &r) - d(&p, &q) - d(&q, &r));
    }
    ensure!(worst_sym <= 1e-9, "symmetry error {worst_sym:.3e}");
    ensure!(worst_zero <= 1e-12, "self distance {worst_zero:.3e}");
    // Rounding slack of a few ulps on values of order one.
    ensure!(worst_triangle <= 1e-12, "triangle inequality violated by {worst_triangle:.3e}");

    let mut enlarged = 0;
    for case in 0..1000 {
        let domain: &[u8] = if rng.random_bool(0.5) { &[0, 1] } else { &[0, 1, 2, 3, 4] };
        let n = rng.random_range(1..=25);
        let pick = |rng: &mut ChaCha8Rng| domain[rng.random_range(0..domain.len())];
        let preds: Vec<u8> = (0..n).map(|_| pick(&mut rng)).collect();
        let golds: Vec<ValidLabelSet> = (0..n)
            .map(|_| {
                let mut s = ValidLabelSet::single(pick(&mut rng));
                if rng.random_bool(0.2) {
                    s = s.union(ValidLabelSet::single(pick(&mut rng)));
                }
                s
            })
            .collect();
        let mut bigger = golds.clone();
        for g in bigger.iter_mut() {
            if rng.random_bool(0.3) {
                *g = g.union(ValidLabelSet::single(pick(&mut rng)));
            }
        }
        let at = rng.random_range(0..n);
        bigger[at] = bigger[at].union(ValidLabelSet::single(pick(&mut rng)));
        enlarged += bigger.iter().zip(&golds).filter(|(b, g)| b.len() > g.len()).count();
        let before = macro_f1(&preds, &golds, domain).map_err(|e| e.to_string())?;
        let after = macro_f1(&preds, &bigger, domain).map_err(|e| e.to_string())?;
        ensure!(after >= before, "case {case}: enlarging gold sets lowered macro-F1 from {before} to {after}");
    }
    Ok(format!(
        "JS symmetry {worst_sym:.1e}, self {worst_zero:.1e}, triangle slack {:.1e}; {enlarged} gold sets enlarged without loss",
        worst_triangle.max(0.0)
    ))
}

fn cli(args: &[&str], config: &Path, out: &Path) -> Result<(), String> {
    let status = Command::new(env!("CARGO_BIN_EXE_annotator-models"))
        .arg("--config")
        .arg(config)
        .arg("--output-dir")
        .arg(out)
        .args(args)
        .output()
        .map_err(|e| e.to_string())?;
    ensure!(
        status.status.success(),
        "`{}` failed: {}",
        args.join(" "),
        String::from_utf8_lossy(&status.stderr).trim()
    );
    Ok(())
}

fn end_to_end_determinism() -> Outcome {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let corpus = generate(&SyntheticSpec::default()).map_err(|e| e.to_string())?;
    let files = corpus.write_to_dir(dir.path()).map_err(|e| e.to_string())?;
    let mut outputs = Vec::new();
    for run in ["run1", "run2"] {
        let out = dir.path().join(run);
        for args in [&["tune"][..], &["train"], &["predict"], &["export", "--task", "1"], &["export", "--task", "2"]] {
            cli(args, &files.config, &out)?;
        }
        let read = |name: &str| std::fs::read(out.join(name)).map_err(|e| format!("{name}: {e}"));
        outputs.push((
            read("submission_task1.tsv")?,
            read("submission_task2.tsv")?,
            read("models/manifest.json")?,
        ));
    }
    ensure!(outputs[0].0 == outputs[1].0, "task 1 submissions differ");
    ensure!(outputs[0].1 == outputs[1].1, "task 2 submissions differ");
    ensure!(outputs[0].2 == outputs[1].2, "model digests differ");
    let rows = outputs[0].0.iter().filter(|&&b| b == b'\n').count() - 1;
    Ok(format!("{rows}-row submissions and model store byte-identical across two runs"))
}

fn synthetic_recoverability() -> Outcome {
    let corpus = generate(&SyntheticSpec::default()).map_err(|e| e.to_string())?;
    let cfg = ExperimentConfig::from_toml_str(SMALL_CONFIG).map_err(|e| e.to_string())?;
    let (train, validation) = split_train_validation(&corpus.train, cfg.split_ratio, cfg.seed).map_err(|e| e.to_string())?;
    let exploration = explore(&train, &validation, &corpus.embeddings, &cfg).map_err(|e| e.to_string())?;
    let choices = &exploration.evaluation(exploration.best).unwrap().choices;
    let store = train_all_annotators(&corpus.train, &corpus.embeddings, choices, &cfg.models(), cfg.seed).map_err(|e| e.to_string())?;
    let pred1 = run_subtask1(&corpus.test, &store, &corpus.embeddings, cfg.tie_mode).map_err(|e| e.to_string())?;
    let pred2 = run_subtask2(&corpus.test, &store, &corpus.embeddings).map_err(|e| e.to_string())?;
    let f1 = score_subtask1(&pred1, &gold_subtask1(&corpus.test_gold, cfg.tie_mode).unwrap()).map_err(|e| e.to_string())?;
    let js = score_subtask2(&pred2, &gold_subtask2(&corpus.test_gold).unwrap(), cfg.js_base).map_err(|e| e.to_string())?;
    let worst_js = js.get("dist_multi").unwrap().max(js.get("dist_bin").unwrap());
    ensure!(f1.average >= 0.95, "subtask 1 average macro-F1 {:.4} < 0.95", f1.average);
    ensure!(js.average <= 0.05, "subtask 2 mean JS distance {:.4} > 0.05", js.average);
    Ok(format!(
        "family {}, macro-F1 {:.4}, JS {:.4} (worst target {:.4})",
        exploration.best, f1.average, js.average, worst_js
    ))
}

fn class_balance() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(61);
    for case in 0..500 {
        let counts: Vec<usize> = (0..5)
            .map(|_| if rng.random_bool(0.25) { 0 } else { rng.random_range(1..200) })
            .collect();
        let n: usize = counts.iter().sum();
        if n == 0 {
            continue;
        }
        let w = compute_class_weights(&counts).map_err(|e| e.to_string())?;
        let total = counts
            .iter()
            .enumerate()
            .filter(|(_, &c)| c > 0)
            .fold(Ratio::from_integer(0u64), |acc, (i, &c)| acc + w.exact(i).unwrap() * Ratio::from_integer(c as u64));
        ensure!(total == Ratio::from_integer(n as u64), "case {case}: Σ w·n = {total} for n = {n}");

        let y: Vec<Label> = counts
            .iter()
            .enumerate()
            .flat_map(|(c, &k)| std::iter::repeat_n(Label::new(c as u8).unwrap(), k))
            .collect();
        let idx = oversample_indices(&y, case);
        ensure!(idx[..y.len()] == (0..y.len()).collect::<Vec<_>>()[..], "case {case}: originals not kept in place");
        let after = count_labels(idx.iter().map(|&i| y[i]));
        let majority = *counts.iter().max().unwrap();
        for c in 0..5 {
            let expected = if counts[c] > 0 { majority } else { 0 };
            ensure!(after[c] == expected, "case {case}: class {c} has {} rows, expected {expected}", after[c]);
        }
    }
    Ok("500 random count vectors: exact weighted sums, equalized oversampling".into())
}

fn main() {
    let criteria: [(&str, fn() -> Outcome, Duration); 9] = [
        ("aggregation oracle equivalence", aggregation_oracle, Duration::from_secs(1)),
        ("worked-example walkthrough", worked_examples, Duration::from_secs(1)),
        ("MLP gradient check", mlp_gradient_check, Duration::from_secs(30)),
        ("SVM correctness", svm_correctness, Duration::from_secs(30)),
        ("forest structure", forest_structure, Duration::MAX),
        ("metric properties", metric_properties, Duration::MAX),
        ("end-to-end determinism", end_to_end_determinism, Duration::from_secs(300)),
        ("synthetic recoverability", synthetic_recoverability, Duration::from_secs(300)),
        ("class-balance arithmetic", class_balance, Duration::MAX),
    ];
    let filter: Vec<String> = std::env::args().skip(1).filter(|a| !a.starts_with('-')).collect();
    let mut failed = 0;
    for (name, check, limit) in criteria {
        if !filter.is_empty() && !filter.iter().any(|f| name.contains(f.as_str())) {
            continue;
        }
        let start = Instant::now();
        let outcome = check();
        let elapsed = start.elapsed();
        let outcome = match outcome {
            Ok(detail) if elapsed > limit => Err(format!("{detail}; took {elapsed:.2?}, limit {limit:.0?}")),
            other => other,
        };
        match outcome {
            Ok(detail) => println!("PASS  {name:<32} {elapsed:>10.2?}  {detail}"),
            Err(reason) => {
                failed += 1;
                println!("FAIL  {name:<32} {elapsed:>10.2?}  {reason}");
            }
        }
    }
    if failed > 0 {
        println!("{failed} criteria failed");
        std::process::exit(1);
    }
}
