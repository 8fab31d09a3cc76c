//! Acceptance suite: one PASS/FAIL line per criterion.
//!
//! Criteria 1-3 read the public UCI phishing table from `PHISHGUARD_UCI_CSV`
//! (CSV or ARFF), falling back to `data/uci/phishing.{csv,arff}` under the
//! workspace root. Without the file those criteria report FAIL with the
//! reason. The process exits non-zero when a criterion that ran fails; set
//! `PHISHGUARD_ACCEPTANCE_STRICT=1` to also fail on missing data.

mod common;

use std::collections::HashSet;
use std::path::PathBuf;
use std::sync::Barrier;
use std::time::{Duration, Instant};

use phishguard::datasets::{feature_report, generate_synthetic_urls, load_table, Dataset, GenerationConfig, Provenance, Sample};
use phishguard::explain::{entropy_bits, information_gain, shap_exact, shap_linear, shap_sampled};
use phishguard::features::{extract_offline, parse_url, Feature, FEATURE_COUNT};
use phishguard::learners::{
    train_gbt, train_linear, train_tree, Activation, GbtParams, LinearModel, LinearSpec, MlpModel, ModelFile,
    ModelKind, TrainConfig, TrainedModel, TreeParams,
};
use phishguard::mcp::{PcsConfig, Server};
use phishguard::metrics::{cross_validate_reports, roc_auc, MetricsReport};
use phishguard::robustness::{run_strategy, AttackSpec, Harness, Strategy};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const UCI_ENV: &str = "PHISHGUARD_UCI_CSV";
const STRICT_ENV: &str = "PHISHGUARD_ACCEPTANCE_STRICT";
/// Absolute deviation treated as rounding noise in the sampled-vs-exact check.
const FLOAT_FLOOR: f64 = 1e-12;
/// Seed shared by every randomized criterion, fixed before any run.
const SEED: u64 = 7;

enum Outcome {
    Pass(String),
    Fail(String),
    /// Required input data is absent.
    Missing(String),
}

fn verdict(ok: bool, detail: String) -> Outcome {
    if ok {
        Outcome::Pass(detail)
    } else {
        Outcome::Fail(detail)
    }
}

fn within(elapsed: Duration, limit: Duration) -> String {
    format!("{:.2}s of {:.0}s", elapsed.as_secs_f64(), limit.as_secs_f64())
}

fn uci_path() -> Option<PathBuf> {
    if let Some(p) = std::env::var_os(UCI_ENV) {
        return Some(PathBuf::from(p));
    }
    let root = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../data/uci");
    ["phishing.csv", "phishing.arff", "Training Dataset.arff"]
        .iter()
        .map(|n| root.join(n))
        .find(|p| p.exists())
}

fn load_uci() -> Result<(Dataset, Duration), String> {
    let path = uci_path().ok_or_else(|| format!("UCI table not found; set {UCI_ENV}"))?;
    let start = Instant::now();
    let (ds, _) = load_table(&path, Provenance::Uci).map_err(|e| format!("{}: {e}", path.display()))?;
    Ok((ds, start.elapsed()))
}

fn c1_ingestion(uci: &Result<(Dataset, Duration), String>) -> Outcome {
    match uci {
        Err(e) => Outcome::Missing(e.clone()),
        Ok((ds, t)) => {
            let dist = ds.class_distribution();
            verdict(
                ds.len() == 5849 && dist == (3019, 2830) && *t < Duration::from_secs(5),
                format!("{} samples {:?}, {}", ds.len(), dist, within(*t, Duration::from_secs(5))),
            )
        }
    }
}

fn cv_accuracy_auc(kind: ModelKind, ds: &Dataset) -> phishguard::Result<(f64, f64, Duration)> {
    let cfg = TrainConfig { seed: SEED, ..TrainConfig::default() };
    let start = Instant::now();
    let reports = match kind {
        ModelKind::Gbt => {
            let params = GbtParams { n_rounds: 500, learning_rate: 0.1, max_depth: 4, ..GbtParams::default() };
            cross_validate_reports(|d| train_gbt(d, &params).map(TrainedModel::Ensemble), ds, 5, SEED)?
        }
        _ => cross_validate_reports(|d| kind.train(d, &cfg), ds, 5, SEED)?,
    };
    let mean = MetricsReport::mean(&reports).expect("five folds");
    Ok((mean.accuracy, mean.roc_auc.unwrap_or(f64::NAN), start.elapsed()))
}

fn c2_c3_models(uci: &Result<(Dataset, Duration), String>) -> (Outcome, Outcome) {
    let ds = match uci {
        Err(e) => return (Outcome::Missing(e.clone()), Outcome::Missing(e.clone())),
        Ok((ds, _)) => ds,
    };
    let logistic = cv_accuracy_auc(ModelKind::Logistic, ds);
    let c2 = match &logistic {
        Err(e) => Outcome::Fail(e.to_string()),
        Ok((acc, auc, t)) => verdict(
            (acc - 0.92).abs() <= 0.02 && *auc >= 0.95 && *t < Duration::from_secs(60),
            format!("accuracy {acc:.4}, AUC {auc:.4}, {}", within(*t, Duration::from_secs(60))),
        ),
    };
    let c3 = match (cv_accuracy_auc(ModelKind::Gbt, ds), &logistic) {
        (Err(e), _) => Outcome::Fail(e.to_string()),
        (Ok(_), Err(e)) => Outcome::Fail(format!("logistic baseline failed: {e}")),
        (Ok((acc, auc, t)), Ok((lacc, _, _))) => verdict(
            acc >= 0.94 && auc >= 0.98 && acc > *lacc && t < Duration::from_secs(300),
            format!("accuracy {acc:.4} (logistic {lacc:.4}), AUC {auc:.4}, {}", within(t, Duration::from_secs(300))),
        ),
    };
    (c2, c3)
}

fn random_rows(rng: &mut ChaCha8Rng, n: usize, d: usize) -> Vec<Vec<f64>> {
    (0..n).map(|_| (0..d).map(|_| rng.gen_range(-1.0..1.0)).collect()).collect()
}

fn c4_shapley_oracles() -> Outcome {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(SEED);
    let mut max_dev: f64 = 0.0;
    for _ in 0..100 {
        let d = rng.gen_range(1..=10);
        let bg = common::dataset(random_rows(&mut rng, 30, d), vec![0; 30]);
        let lin = LinearModel::new((0..d).map(|_| rng.gen_range(-3.0..3.0)).collect(), rng.gen_range(-1.0..1.0));
        let x: Vec<f64> = (0..d).map(|_| rng.gen_range(-2.0..2.0)).collect();
        let closed = shap_linear(&lin, &x, &bg).unwrap();
        let logit = |v: &[f64]| lin.decision(v);
        let exact = shap_exact(&logit, &x, &bg, 15).unwrap();
        for (a, b) in closed.values.iter().zip(&exact.values) {
            max_dev = max_dev.max((a - b).abs());
        }
        max_dev = max_dev.max((closed.base_value - exact.base_value).abs());
    }
    let (mut worst_z, mut misses) = (0.0f64, 0);
    for t in 0..20 {
        let rows = random_rows(&mut rng, 200, 8);
        let labels = rows.iter().map(|r| u8::from(r[0] * r[1] + 0.5 * r[2] - r[5] * r[6] > rng.gen_range(-0.3..0.3))).collect();
        let ds = common::dataset(rows, labels);
        let params = TreeParams { max_depth: 3, ..TreeParams::default() };
        let tree = TrainedModel::Tree(train_tree(&ds, &params, t).unwrap());
        let bg = ds.subset(&(0..50).collect::<Vec<_>>());
        let x: Vec<f64> = (0..8).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let exact = shap_exact(&tree, &x, &bg, 15).unwrap();
        let sampled = shap_sampled(&tree, &x, &bg, 10_000, SEED + t).unwrap();
        let se = sampled.standard_errors.as_ref().unwrap();
        for ((s, e), se) in sampled.values.iter().zip(&exact.values).zip(se) {
            let dev = (s - e).abs();
            // Deviations at floating-point accumulation level pass outright.
            if dev <= FLOAT_FLOOR {
                continue;
            }
            let z = if *se > 0.0 { dev / se } else { f64::INFINITY };
            worst_z = worst_z.max(z);
            if z > 3.0 {
                misses += 1;
            }
        }
    }
    let t = start.elapsed();
    verdict(
        max_dev < 1e-9 && misses == 0 && t < Duration::from_secs(120),
        format!(
            "linear max |Δ| {max_dev:.2e}, tree worst deviation {worst_z:.2} SE ({misses} beyond 3 SE of 160), {}",
            within(t, Duration::from_secs(120))
        ),
    )
}

fn c5_local_accuracy() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(SEED + 1);
    let mut worst: f64 = 0.0;
    for i in 0..1000 {
        let d = 1 + i % 10;
        let bg = common::dataset(random_rows(&mut rng, 20, d), vec![0; 20]);
        let lin = LinearModel::new((0..d).map(|_| rng.gen_range(-3.0..3.0)).collect(), rng.gen_range(-1.0..1.0));
        let x: Vec<f64> = (0..d).map(|_| rng.gen_range(-2.0..2.0)).collect();
        let closed = shap_linear(&lin, &x, &bg).unwrap();
        worst = worst.max((closed.total() - lin.decision(&x)).abs());
        let model = TrainedModel::Linear(lin);
        let exact = shap_exact(&model, &x, &bg, 15).unwrap();
        worst = worst.max((exact.total() - model.proba(&x)).abs());
        let wavy = |v: &[f64]| v.iter().enumerate().map(|(j, a)| (a * (j + 1) as f64).sin()).product::<f64>();
        let e = shap_exact(&wavy, &x, &bg, 15).unwrap();
        worst = worst.max((e.total() - wavy(&x)).abs());
    }
    verdict(worst < 1e-9, format!("1000 instances, worst |φ0 + Σφ − f(x)| {worst:.2e}"))
}

fn c6_auc_oracle() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(SEED + 2);
    let (mut worst, mut done): (f64, usize) = (0.0, 0);
    while done < 1000 {
        let n = rng.gen_range(2..=50);
        let labels: Vec<u8> = (0..n).map(|_| rng.gen_range(0..=1)).collect();
        if !labels.contains(&0) || !labels.contains(&1) {
            continue;
        }
        let levels = rng.gen_range(1..=10);
        let scores: Vec<f64> = (0..n).map(|_| f64::from(rng.gen_range(0..levels)) / 10.0).collect();
        let (_, auc) = roc_auc(&labels, &scores).unwrap();
        worst = worst.max((auc - common::pairwise_auc(&labels, &scores)).abs());
        done += 1;
    }
    verdict(worst < 1e-9, format!("1000 instances, worst |Δ| {worst:.2e}"))
}

fn c7_information_gain() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(SEED + 3);
    let (mut copies_exact, mut constants_zero, mut bounded) = (true, true, true);
    for _ in 0..1000 {
        let n = rng.gen_range(2..80);
        let d = rng.gen_range(1..5);
        let labels: Vec<u8> = (0..n).map(|_| rng.gen_range(0..=1)).collect();
        let rows: Vec<Vec<f64>> = labels
            .iter()
            .map(|&y| {
                let mut r: Vec<f64> = (0..d).map(|_| f64::from(rng.gen_range(-1i8..=1))).collect();
                r.push(if y == 1 { 1.0 } else { -1.0 });
                r.push(0.0);
                r
            })
            .collect();
        let ds = common::dataset(rows, labels.clone());
        let ones = labels.iter().filter(|&&y| y == 1).count();
        let h = entropy_bits(&[n - ones, ones]);
        copies_exact &= information_gain(&ds, &format!("f{d}")).unwrap() == h
            && (h - common::label_entropy(&labels)).abs() < 1e-12;
        constants_zero &= information_gain(&ds, &format!("f{}", d + 1)).unwrap() == 0.0;
        for j in 0..d {
            let ig = information_gain(&ds, &format!("f{j}")).unwrap();
            bounded &= (0.0..=h + 1e-12).contains(&ig);
        }
    }
    verdict(
        copies_exact && constants_zero && bounded,
        format!("label-copy = H(Y): {copies_exact}, constant = 0: {constants_zero}, 0 <= IG <= H(Y): {bounded}"),
    )
}

fn c8_mlp_gradient() -> Outcome {
    let mut worst: f64 = 0.0;
    for hidden in [Activation::Sigmoid, Activation::Relu] {
        let mut model = MlpModel::init(4, &[6, 5, 1], hidden, SEED).unwrap();
        for l in &mut model.layers {
            l.bias.iter_mut().enumerate().for_each(|(i, b)| *b = 0.05 + 0.02 * i as f64);
        }
        let data = [vec![0.5, -1.0, 0.25, 1.5], vec![-0.75, 0.5, 1.25, -0.2], vec![1.0, 0.1, -0.6, 0.8]];
        let xs: Vec<&[f64]> = data.iter().map(Vec::as_slice).collect();
        let ys = [1.0, 0.0, 1.0];
        let (_, grad) = model.loss_and_gradient(&xs, &ys);
        let theta = model.flat_parameters();
        let eps = 1e-5;
        for k in 0..theta.len() {
            let mut probe = model.clone();
            let mut t = theta.clone();
            t[k] += eps;
            probe.set_flat_parameters(&t);
            let up = probe.loss_and_gradient(&xs, &ys).0;
            t[k] -= 2.0 * eps;
            probe.set_flat_parameters(&t);
            let down = probe.loss_and_gradient(&xs, &ys).0;
            let numeric = (up - down) / (2.0 * eps);
            worst = worst.max((numeric - grad[k]).abs() / numeric.abs().max(grad[k].abs()).max(1e-6));
        }
    }
    verdict(worst < 1e-4, format!("sigmoid and ReLU [6, 5, 1], worst relative error {worst:.2e}"))
}

/// Ternary canonical table labelled by a noisy rule on lexical features.
fn canonical_toy(n: usize, seed: u64) -> Dataset {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let samples = (0..n)
        .map(|i| {
            let mut x: Vec<f64> = (0..FEATURE_COUNT).map(|_| f64::from(rng.gen_range(-1i8..=1))).collect();
            x[Feature::UrlLength.index()] = f64::from(rng.gen_range(10u8..120));
            let s = 1.5 * x[Feature::HavingIpAddress.index()] + x[Feature::HavingAtSymbol.index()]
                + x[Feature::PrefixSuffix.index()]
                + rng.gen_range(-0.8..0.8);
            Sample {
                features: x,
                label: u8::from(s > 0.0),
                provenance: [Provenance::Uci, Provenance::OpenPhish, Provenance::GenAI][i % 3],
            }
        })
        .collect();
    Dataset::new("toy", Feature::canonical_names(), samples).unwrap()
}

fn c9_serial_equivalence() -> Outcome {
    let start = Instant::now();
    let ds = canonical_toy(400, SEED);
    let model = train_linear(&ds, &LinearSpec::logistic(), &TrainConfig::default()).unwrap();
    let file = ModelFile::new(ModelKind::Logistic, Feature::canonical_names(), TrainedModel::Linear(model));
    let build = || Server::new(file.clone(), None, PcsConfig::new(&ds, 5, 0.5).unwrap(), &ds).unwrap();
    let urls = generate_synthetic_urls(&GenerationConfig { target_count: 64, seed: SEED, ..GenerationConfig::default() }).unwrap();
    let lines: Vec<String> = urls
        .iter()
        .enumerate()
        .map(|(i, u)| serde_json::json!({"id": format!("req-{i}"), "tool": "classify_url", "arguments": {"url": u}}).to_string())
        .collect();
    let serial_server = build();
    let serial: Vec<String> = lines.iter().map(|l| serial_server.handle_line(l, "serial")).collect();
    let server = build();
    let barrier = Barrier::new(lines.len());
    let concurrent: Vec<String> = std::thread::scope(|s| {
        let handles: Vec<_> = lines
            .iter()
            .enumerate()
            .map(|(i, l)| {
                let (server, barrier) = (&server, &barrier);
                s.spawn(move || {
                    barrier.wait();
                    server.handle_line(l, &format!("session-{i}"))
                })
            })
            .collect();
        handles.into_iter().map(|h| h.join().unwrap()).collect()
    });
    let identical = serial == concurrent && serial.iter().all(|r| r.contains("\"status\":\"ok\""));
    let log = server.audit().snapshot();
    let ids: HashSet<&str> = log.iter().map(|e| e.context_id.as_str()).collect();
    let cross_refs = log
        .iter()
        .filter(|e| concurrent.iter().any(|r| r.contains(&e.context_id)))
        .count();
    let contexts_match = log.iter().all(|e| {
        let i: usize = e.request_id.trim_start_matches("req-").parse().unwrap();
        let expected = extract_offline(&urls[i]).unwrap().to_canonical_vector().unwrap();
        e.context.as_ref().is_some_and(|c| c.features() == expected.as_slice() && c.is_sealed())
    });
    let t = start.elapsed();
    verdict(
        identical && log.len() == 64 && ids.len() == 64 && cross_refs == 0 && contexts_match && t < Duration::from_secs(10),
        format!(
            "byte-identical {identical}, {} distinct context ids, {cross_refs} cross-references, {}",
            ids.len(),
            within(t, Duration::from_secs(10))
        ),
    )
}

fn c10_robustness_pattern() -> Outcome {
    let start = Instant::now();
    let ds = canonical_toy(600, SEED + 4);
    let model = TrainedModel::Linear(train_linear(&ds, &LinearSpec::logistic(), &TrainConfig::default()).unwrap());
    let pcs = PcsConfig::new(&ds, 5, 0.5).unwrap();
    let harness = Harness::new(&model, &pcs);
    let mut notes = Vec::new();
    let mut ok = true;
    for s in Strategy::ALL {
        let r = run_strategy(&ds, &harness, s, &AttackSpec::null()).unwrap();
        let null_ok = r.cis == 1.0 && r.apf == 0.0 && r.mre.is_none_or(|m| m == 0.0) && r.csi_stability == 1.0 && r.contexts == 200;
        ok &= null_ok;
        if !null_ok {
            notes.push(format!("null {}: {r:?}", s.as_str()));
        }
    }
    let spec = AttackSpec { contamination_rate: 0.3, delta: 1.0, seed: SEED };
    for s in Strategy::ALL {
        let r = run_strategy(&ds, &harness, s, &spec).unwrap();
        match s {
            Strategy::Isolation => {
                ok &= r.apf == 0.0 && r.links == 0;
                notes.push(format!("isolation APF {:.4}", r.apf));
            }
            _ => {
                let mre = r.mre.unwrap_or(f64::NAN);
                ok &= r.cis == 1.0 && mre > 0.0;
                notes.push(format!("{} CIS {:.4} MRE {mre:.4}", s.as_str(), r.cis));
            }
        }
    }
    let t = start.elapsed();
    ok &= t < Duration::from_secs(30);
    notes.push(within(t, Duration::from_secs(30)));
    verdict(ok, notes.join(", "))
}

fn c11_synthetic_generation() -> Outcome {
    let start = Instant::now();
    let urls = generate_synthetic_urls(&GenerationConfig { target_count: 1000, seed: SEED, ..GenerationConfig::default() }).unwrap();
    let unique: HashSet<&String> = urls.iter().collect();
    let parse_ok = urls.iter().all(|u| parse_url(u).is_ok());
    let report = feature_report(&urls);
    let oracle_ok = report.total == urls.len()
        && report.counts.iter().all(|(f, &count)| {
            urls.iter().filter(|u| extract_offline(u).unwrap().get(*f) == Some(1.0)).count() == count
        });
    let t = start.elapsed();
    verdict(
        urls.len() == 1000 && unique.len() == 1000 && parse_ok && oracle_ok && t < Duration::from_secs(5),
        format!(
            "{} URLs, {} unique, re-parse {parse_ok}, report matches extractor {oracle_ok}, {}",
            urls.len(),
            unique.len(),
            within(t, Duration::from_secs(5))
        ),
    )
}

fn main() {
    // libtest-style flags from `cargo test` are accepted and ignored.
    let strict = std::env::var(STRICT_ENV).is_ok_and(|v| v == "1");
    let uci = load_uci();
    let (c2, c3) = c2_c3_models(&uci);
    let results = [
        ("UCI ingestion 5849 (3019/2830)", c1_ingestion(&uci)),
        ("UCI logistic 5-fold accuracy 0.92 +/- 0.02, AUC >= 0.95", c2),
        ("UCI GBT accuracy >= 0.94, AUC >= 0.98, beats logistic", c3),
        ("Shapley oracle equivalence", c4_shapley_oracles()),
        ("Shapley local accuracy", c5_local_accuracy()),
        ("AUC oracle equivalence", c6_auc_oracle()),
        ("Information-gain properties", c7_information_gain()),
        ("MLP gradient check", c8_mlp_gradient()),
        ("MCP serial equivalence (64 concurrent)", c9_serial_equivalence()),
        ("Robustness pattern reproduction", c10_robustness_pattern()),
        ("Synthetic generation (1000 unique)", c11_synthetic_generation()),
    ];
    let (mut failed, mut missing) = (0, 0);
    for (i, (name, outcome)) in results.iter().enumerate() {
        let (tag, detail) = match outcome {
            Outcome::Pass(d) => ("PASS", d.clone()),
            Outcome::Fail(d) => {
                failed += 1;
                ("FAIL", d.clone())
            }
            Outcome::Missing(d) => {
                missing += 1;
                ("FAIL", format!("data unavailable: {d}"))
            }
        };
        println!("[{tag}] {:>2}. {name}: {detail}", i + 1);
    }
    let passed = results.len() - failed - missing;
    println!("acceptance: {passed} passed, {failed} failed, {missing} failed for missing data");
    if failed > 0 || (strict && missing > 0) {
        std::process::exit(1);
    }
}
