use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicBool, Ordering};
use std::sync::{mpsc, Arc};

use anyhow::{anyhow, bail, Context, Result};
use phishguard::datasets::{
    align_features, feature_report, generate_synthetic_urls, load_table, Dataset, GenerationConfig, Provenance, Sample,
};
use phishguard::explain::{
    background_sample, fuse_weights, information_gains, lime_explain, mean_absolute_attributions, rank_attributions,
    render_bars, shap_exact, shap_linear, shap_sampled, FusionWeights, LimeConfig, ShapExplanation, BACKGROUND_ROWS,
    MAX_EXACT_FEATURES,
};
use phishguard::features::{extract_offline, Feature};
use phishguard::learners::{ModelFile, ModelKind, TrainConfig, TrainedModel};
use phishguard::mcp::{fusion_vector, serve, AuditLog, PcsConfig, Server, Transport};
use phishguard::metrics::{cross_validate_reports, evaluate, format_table, pr_curve, roc_auc, MetricsReport};
use phishguard::robustness::{run_strategy, AttackSpec, Harness, RobustnessReport, Strategy};

use crate::manifest::RunManifest;
use crate::{
    Cli, Command, EvaluateArgs, ExplainArgs, ExplainMethod, FusionArgs, GenerateArgs, IngestArgs, ModelArg,
    RobustnessArgs, ServeArgs, TrainArgs, TransportArg,
};

/// Rejected flag or argument combination; exits with status 2.
#[derive(Debug)]
pub struct UsageError(pub String);

impl std::fmt::Display for UsageError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for UsageError {}

fn usage(msg: impl Into<String>) -> anyhow::Error {
    UsageError(msg.into()).into()
}

/// 2 for usage and input errors, 1 for everything else.
pub fn exit_code(e: &anyhow::Error) -> u8 {
    for cause in e.chain() {
        if cause.is::<UsageError>() {
            return 2;
        }
        if let Some(err) = cause.downcast_ref::<phishguard::Error>() {
            return if err.is_input_error() { 2 } else { 1 };
        }
        if cause.is::<std::io::Error>() {
            return 2;
        }
    }
    1
}

/// Shapley samples per instance when exact enumeration is too wide.
const SHAP_SAMPLES: usize = 1000;
/// Shapley samples per row when estimating fusion importances.
const FUSION_SHAP_SAMPLES: usize = 100;

pub fn run(cli: Cli) -> Result<()> {
    let seed = cli.seed;
    let name = match &cli.command {
        Command::Ingest(_) => "ingest",
        Command::Generate(_) => "generate",
        Command::Train(_) => "train",
        Command::Evaluate(_) => "evaluate",
        Command::Explain(_) => "explain",
        Command::Serve(_) => "serve",
        Command::Robustness(_) => "robustness",
    };
    let mut manifest = RunManifest::start(name, seed);
    let result = match &cli.command {
        Command::Ingest(a) => ingest(a, &mut manifest),
        Command::Generate(a) => generate(a, seed, &mut manifest),
        Command::Train(a) => train(a, seed, &mut manifest),
        Command::Evaluate(a) => evaluate_cmd(a, &mut manifest),
        Command::Explain(a) => explain(a, seed, &mut manifest),
        Command::Serve(a) => serve_cmd(a, seed, &mut manifest),
        Command::Robustness(a) => robustness(a, seed, &mut manifest),
    };
    let status = match &result {
        Ok(()) => "ok".to_string(),
        Err(e) => format!("error: {e:#}"),
    };
    manifest.finish(&status, cli.manifest.as_deref())?;
    result
}

fn parse_provenance(s: &str) -> Result<Provenance> {
    s.parse::<Provenance>().map_err(|e| usage(e.to_string()))
}

/// `PROVENANCE=PATH` or a bare path with the default provenance.
fn parse_source(spec: &str, default: Provenance) -> Result<(PathBuf, Provenance)> {
    if let Some((prefix, path)) = spec.split_once('=') {
        if let Ok(p) = prefix.parse::<Provenance>() {
            return Ok((PathBuf::from(path), p));
        }
    }
    Ok((PathBuf::from(spec), default))
}

fn load(path: &Path, provenance: Provenance, manifest: &mut RunManifest) -> Result<Dataset> {
    manifest.input(path);
    let (ds, _) = load_table(path, provenance).with_context(|| format!("loading {}", path.display()))?;
    Ok(ds)
}

/// Loads `path` restricted to the model's features in model order.
fn load_for_model(path: &Path, provenance: Provenance, model: &ModelFile, manifest: &mut RunManifest) -> Result<Dataset> {
    let ds = load(path, provenance, manifest)?;
    let mut aligned = align_features(&[ds], &model.feature_names)?;
    Ok(aligned.remove(0))
}

fn load_model(path: &Path, manifest: &mut RunManifest) -> Result<ModelFile> {
    manifest.input(path);
    ModelFile::load(path).with_context(|| format!("loading model {}", path.display()))
}

fn model_kind(m: ModelArg) -> ModelKind {
    match m {
        ModelArg::Logistic => ModelKind::Logistic,
        ModelArg::Ridge => ModelKind::Ridge,
        ModelArg::Sgd => ModelKind::Sgd,
        ModelArg::Elastic => ModelKind::Elastic,
        ModelArg::Svm => ModelKind::Svm,
        ModelArg::Tree => ModelKind::Tree,
        ModelArg::Forest => ModelKind::Forest,
        ModelArg::Extra => ModelKind::Extra,
        ModelArg::Gbt => ModelKind::Gbt,
        ModelArg::Mlp => ModelKind::Mlp,
    }
}

fn ingest(a: &IngestArgs, manifest: &mut RunManifest) -> Result<()> {
    let provenance = parse_provenance(&a.provenance)?;
    manifest.set("provenance", provenance);
    manifest.set("keep_columns", a.keep_columns);
    manifest.input(&a.input);
    let (ds, report) = load_table(&a.input, provenance).with_context(|| format!("loading {}", a.input.display()))?;
    let ds = if a.keep_columns {
        ds
    } else {
        align_features(&[ds], &Feature::canonical_names())?.remove(0)
    };
    ds.write_csv(&a.out)?;
    manifest.output(&a.out);
    let (legit, phish) = ds.class_distribution();
    println!("{} samples ({legit}/{phish})", ds.len());
    println!(
        "rows read {}, duplicates removed {}, features {}",
        report.rows_read,
        report.duplicates_removed,
        ds.n_features()
    );
    Ok(())
}

fn generate(a: &GenerateArgs, seed: u64, manifest: &mut RunManifest) -> Result<()> {
    let mut cfg = GenerationConfig {
        target_count: a.count,
        seed,
        ..GenerationConfig::default()
    };
    if let Some(path) = &a.legit {
        manifest.input(path);
        let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        cfg.legit_urls = phishguard::bundled::entries(&text).map(str::to_string).collect();
    }
    manifest.set("count", a.count);
    let urls = generate_synthetic_urls(&cfg)?;
    let mut text = urls.join("\n");
    text.push('\n');
    std::fs::write(&a.out, text).with_context(|| format!("writing {}", a.out.display()))?;
    manifest.output(&a.out);
    let report = feature_report(&urls);
    if let Some(path) = &a.report {
        std::fs::write(path, report.to_text())?;
        manifest.output(path);
    }
    if let Some(path) = &a.features_out {
        let samples = urls
            .iter()
            .map(|u| {
                Ok(Sample {
                    features: extract_offline(u)?.to_canonical_vector()?,
                    label: 1,
                    provenance: Provenance::GenAI,
                })
            })
            .collect::<phishguard::Result<Vec<_>>>()?;
        Dataset::new("generated", Feature::canonical_names(), samples)?.write_csv(path)?;
        manifest.output(path);
    }
    println!("{} unique URLs written to {}", urls.len(), a.out.display());
    print!("{}", report.to_text());
    Ok(())
}

fn train(a: &TrainArgs, seed: u64, manifest: &mut RunManifest) -> Result<()> {
    let kind = model_kind(a.model);
    let cfg = TrainConfig {
        folds: a.folds,
        seed,
        ..TrainConfig::default()
    };
    cfg.validate()?;
    manifest.set("model", kind);
    manifest.set("folds", a.folds);
    let ds = load(&a.data, Provenance::Unknown, manifest)?;
    if !a.no_cv {
        let reports = cross_validate_reports(|train| kind.train(train, &cfg), &ds, a.folds, seed)?;
        let mean = MetricsReport::mean(&reports).ok_or_else(|| anyhow!("no folds evaluated"))?;
        print!("{}", format_table(&[(kind.as_str().to_string(), mean)]));
    }
    let model = kind.train(&ds, &cfg)?;
    ModelFile::new(kind, ds.feature_names.clone(), model).save(&a.out)?;
    manifest.output(&a.out);
    Ok(())
}

fn evaluate_cmd(a: &EvaluateArgs, manifest: &mut RunManifest) -> Result<()> {
    let model = load_model(&a.model, manifest)?;
    let ds = load_for_model(&a.data, Provenance::Unknown, &model, manifest)?;
    let report = evaluate(&model.model, &ds)?;
    print!("{}", format_table(&[(model.kind.as_str().to_string(), report)]));
    let scores: Vec<f64> = ds.samples.iter().map(|s| model.model.proba(&s.features)).collect();
    let labels = ds.labels();
    if let Some(path) = &a.roc_csv {
        let (curve, _) = roc_auc(&labels, &scores)?;
        let mut out = String::from("fpr,tpr,threshold\n");
        for i in 0..curve.fpr.len() {
            let _ = writeln!(out, "{},{},{}", curve.fpr[i], curve.tpr[i], curve.thresholds[i]);
        }
        std::fs::write(path, out)?;
        manifest.output(path);
    }
    if let Some(path) = &a.pr_csv {
        let mut out = String::from("threshold,precision,recall\n");
        for (t, p, r) in pr_curve(&labels, &scores)? {
            let _ = writeln!(out, "{t},{p},{r}");
        }
        std::fs::write(path, out)?;
        manifest.output(path);
    }
    Ok(())
}

/// Shapley values on the model's own output scale: logit for linear models
/// against the full-data means, probability otherwise against `background`.
fn shap_for(
    model: &TrainedModel,
    x: &[f64],
    data: &Dataset,
    background: &Dataset,
    n_samples: usize,
    seed: u64,
) -> Result<ShapExplanation> {
    Ok(match model.as_linear() {
        Some(lin) => shap_linear(lin, x, data)?,
        None if x.len() <= MAX_EXACT_FEATURES => shap_exact(model, x, background, MAX_EXACT_FEATURES)?,
        None => shap_sampled(model, x, background, n_samples, seed)?,
    })
}

fn explain(a: &ExplainArgs, seed: u64, manifest: &mut RunManifest) -> Result<()> {
    let model = load_model(&a.model, manifest)?;
    let ds = load_for_model(&a.data, Provenance::Unknown, &model, manifest)?;
    manifest.set("method", format!("{:?}", a.method).to_lowercase());
    let names = &model.feature_names;
    if a.method == ExplainMethod::Ig {
        let ig = information_gains(&ds)?;
        println!("label entropy {:.6} bits", ig.label_entropy);
        let mut rows: Vec<_> = ig.gains.clone();
        rows.sort_by(|x, y| y.1.total_cmp(&x.1));
        let width = rows.iter().map(|r| r.0.len()).max().unwrap_or(0);
        let peak = rows.first().map_or(0.0, |r| r.1);
        for (name, g) in rows {
            let len = if peak > 0.0 { (g / peak * a.width as f64).round() as usize } else { 0 };
            println!("{name:<width$}  {g:>10.6}  {}", "#".repeat(len));
        }
        return Ok(());
    }
    let x: Vec<f64> = match (&a.url, a.index) {
        (Some(url), _) => {
            manifest.set("url", url);
            let named = extract_offline(url)?.to_named_map();
            names
                .iter()
                .map(|n| named.get(n).copied().ok_or_else(|| usage(format!("model feature {n} is not extractable"))))
                .collect::<Result<_>>()?
        }
        (None, Some(i)) => {
            manifest.set("index", i);
            ds.samples
                .get(i)
                .map(|s| s.features.clone())
                .ok_or_else(|| usage(format!("index {i} out of range (dataset has {} rows)", ds.len())))?
        }
        (None, None) => bail!(usage("explain needs --url or --index (or --method ig)")),
    };
    let background = background_sample(&ds, BACKGROUND_ROWS, seed);
    let p = model.model.predict_proba(&x)?;
    println!("P(phishing) = {p:.6}");
    let attributions = match a.method {
        ExplainMethod::Shap => {
            let e = shap_for(&model.model, &x, &ds, &background, SHAP_SAMPLES, seed)?;
            println!("base value {:.6} ({:?} scale)", e.base_value, e.scale);
            e.values
        }
        ExplainMethod::Lime => {
            let cfg = LimeConfig {
                seed,
                ..LimeConfig::default()
            };
            let e = lime_explain(&model.model, &x, &background, &cfg)?;
            println!("surrogate intercept {:.6}, kernel width {:.4}", e.intercept, e.kernel_width);
            e.coefficients
        }
        ExplainMethod::Ig => unreachable!("handled above"),
    };
    print!("{}", render_bars(&rank_attributions(names, &x, &attributions), a.width));
    Ok(())
}

/// Fused weights from information gain on `ds` and mean |φ| over a
/// background sample.
fn fusion_for(model: &ModelFile, ds: &Dataset, alpha: f64, seed: u64) -> Result<FusionWeights> {
    let ig = information_gains(ds)?;
    let background = background_sample(ds, BACKGROUND_ROWS, seed);
    let explanations = background
        .samples
        .iter()
        .map(|s| shap_for(&model.model, &s.features, ds, &background, FUSION_SHAP_SAMPLES, seed))
        .collect::<Result<Vec<_>>>()?;
    let importance: BTreeMap<String, f64> = model
        .feature_names
        .iter()
        .cloned()
        .zip(mean_absolute_attributions(&explanations))
        .collect();
    Ok(fuse_weights(&ig, &importance, alpha)?)
}

fn load_sources(specs: &[String], default: &str, model: &ModelFile, manifest: &mut RunManifest) -> Result<Vec<Dataset>> {
    let default = parse_provenance(default)?;
    specs
        .iter()
        .map(|spec| {
            let (path, prov) = parse_source(spec, default)?;
            load_for_model(&path, prov, model, manifest)
        })
        .collect()
}

fn record_fusion_flags(f: &FusionArgs, manifest: &mut RunManifest) {
    manifest.set("alpha", f.alpha);
    manifest.set("pcs_k", f.pcs_k);
    manifest.set("pcs_threshold", f.pcs_threshold);
}

fn serve_cmd(a: &ServeArgs, seed: u64, manifest: &mut RunManifest) -> Result<()> {
    let model = load_model(&a.model, manifest)?;
    let references = load_sources(&a.reference, &a.provenance, &model, manifest)?;
    let reference = Dataset::concat("reference", &references)?;
    record_fusion_flags(&a.fusion, manifest);
    let fusion = a
        .fusion
        .alpha
        .map(|alpha| fusion_for(&model, &reference, alpha, seed))
        .transpose()?;
    let pcs = PcsConfig::new(&reference, a.fusion.pcs_k, a.fusion.pcs_threshold)?;
    let mut server = Server::new(model, fusion.as_ref(), pcs, &reference)?;
    if let Some(path) = &a.audit_log {
        server = server.with_audit(AuditLog::with_file(path)?);
        manifest.output(path);
    }
    let transport = match (a.tcp, a.transport) {
        (Some(port), _) => Transport::Tcp { port },
        (None, TransportArg::Tcp) => Transport::Tcp { port: a.port },
        (None, TransportArg::Stdio) => Transport::Stdio,
    };
    manifest.set("transport", format!("{transport:?}"));
    let server = Arc::new(server);
    let shutdown = Arc::new(AtomicBool::new(false));
    let (tx, rx) = mpsc::channel::<Option<std::io::Result<()>>>();
    {
        let (tx, shutdown) = (tx.clone(), Arc::clone(&shutdown));
        ctrlc::set_handler(move || {
            shutdown.store(true, Ordering::SeqCst);
            let _ = tx.send(None);
        })
        .context("installing interrupt handler")?;
    }
    if let Transport::Tcp { port } = transport {
        eprintln!("listening on 127.0.0.1:{port}");
    }
    {
        let (server, shutdown) = (Arc::clone(&server), Arc::clone(&shutdown));
        // Detached: a stdio worker blocked on read ends with the process.
        std::thread::spawn(move || {
            let _ = tx.send(Some(serve(server, transport, shutdown)));
        });
    }
    let outcome = rx.recv().unwrap_or(None);
    server.audit().flush();
    match outcome {
        Some(result) => result.context("serving")?,
        None => {
            manifest.set("interrupted", true);
            eprintln!("shutting down");
        }
    }
    Ok(())
}

fn robustness(a: &RobustnessArgs, seed: u64, manifest: &mut RunManifest) -> Result<()> {
    let model = load_model(&a.model, manifest)?;
    let datasets = load_sources(&a.data, &a.provenance, &model, manifest)?;
    let strategies = a
        .strategies
        .iter()
        .map(|s| s.parse::<Strategy>().map_err(|e| usage(e.to_string())))
        .collect::<Result<Vec<_>>>()?;
    let spec = AttackSpec {
        contamination_rate: a.rate,
        delta: a.delta,
        seed,
    };
    spec.validate().map_err(|e| usage(e.to_string()))?;
    record_fusion_flags(&a.fusion, manifest);
    manifest.set("attack", spec);
    manifest.set("strategies", &a.strategies);
    manifest.set("contexts", a.contexts);
    let pooled = Dataset::concat("reference", &datasets)?;
    let pcs = PcsConfig::new(&pooled, a.fusion.pcs_k, a.fusion.pcs_threshold)?;
    let mut harness = Harness::new(&model.model, &pcs);
    harness.n_contexts = a.contexts;
    if let Some(alpha) = a.fusion.alpha {
        let fusion = fusion_for(&model, &pooled, alpha, seed)?;
        let mask = model.feature_names.iter().map(|n| fusion.f_final.contains(n)).collect();
        harness = harness.with_fusion(fusion_vector(&fusion, &model.feature_names), mask);
    }
    let started = std::time::Instant::now();
    let mut report = RobustnessReport::default();
    for ds in &datasets {
        for &strategy in &strategies {
            report.rows.push(run_strategy(ds, &harness, strategy, &spec)?);
        }
    }
    if a.json {
        print!("{}", report.to_json_lines()?);
    } else {
        print!("{}", report.to_table());
    }
    eprintln!("elapsed {:.3}s", started.elapsed().as_secs_f64());
    Ok(())
}
