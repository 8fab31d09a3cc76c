//! Context-contamination harness: seeded attacks on a store of isolated
//! contexts, isolation/validation mitigation, and the CIS, APF, CSI and MRE
//! scores.

use std::collections::HashSet;
use std::fmt::Write as _;

use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::datasets::Dataset;
use crate::error::{Error, Result};
use crate::learners::{label_for, Scorer, TrainedModel};
use crate::mcp::{IsolatedContext, PcsConfig};

/// Contexts drawn from a dataset per harness run.
pub const DEFAULT_CONTEXTS: usize = 200;
/// Monte-Carlo trials per context for CSI.
pub const DEFAULT_CSI_TRIALS: usize = 10;

const TERNARY: [f64; 3] = [-1.0, 0.0, 1.0];

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Phase {
    PreAttack,
    PostAttack,
    PostMitigation,
}

/// A cross-context copy from `source` into `target` (indices into the set).
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct ContaminationLink {
    pub source: usize,
    pub target: usize,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ContextSet {
    pub phase: Phase,
    pub contexts: Vec<IsolatedContext>,
    /// Copies recorded by the injector; empty outside `PostAttack`.
    pub links: Vec<ContaminationLink>,
}

impl ContextSet {
    pub fn new(contexts: Vec<IsolatedContext>) -> Result<Self> {
        let mut seen = HashSet::new();
        for c in &contexts {
            if !seen.insert(c.id()) {
                return Err(Error::IdMismatch(format!("duplicate context id {}", c.id())));
            }
        }
        Ok(Self {
            phase: Phase::PreAttack,
            contexts,
            links: Vec::new(),
        })
    }

    /// Seals one context per sample with the scorer's output.
    pub fn from_dataset<S: Scorer + ?Sized>(ds: &Dataset, scorer: &S) -> Self {
        let contexts = ds
            .samples
            .iter()
            .enumerate()
            .map(|(i, s)| {
                let p = scorer.score(&s.features);
                IsolatedContext::seal(
                    format!("ctx-{i:05}"),
                    format!("req-{i:05}"),
                    "robustness".into(),
                    s.features.clone(),
                    p,
                    label_for(p),
                    s.provenance,
                )
            })
            .collect();
        Self {
            phase: Phase::PreAttack,
            contexts,
            links: Vec::new(),
        }
    }

    pub fn len(&self) -> usize {
        self.contexts.len()
    }

    pub fn is_empty(&self) -> bool {
        self.contexts.is_empty()
    }

    fn check_matched(&self, other: &ContextSet) -> Result<()> {
        if self.len() != other.len() {
            return Err(Error::IdMismatch(format!("{} vs {} contexts", self.len(), other.len())));
        }
        match self.contexts.iter().zip(&other.contexts).find(|(a, b)| a.id() != b.id()) {
            Some((a, b)) => Err(Error::IdMismatch(format!("{} vs {}", a.id(), b.id()))),
            None => Ok(()),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct AttackSpec {
    pub contamination_rate: f64,
    pub delta: f64,
    pub seed: u64,
}

impl AttackSpec {
    pub fn null() -> Self {
        Self {
            contamination_rate: 0.0,
            delta: 0.0,
            seed: 0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.contamination_rate) {
            return Err(Error::InvalidConfig(format!(
                "contamination rate {} outside [0, 1]",
                self.contamination_rate
            )));
        }
        if !(self.delta >= 0.0 && self.delta.is_finite()) {
            return Err(Error::InvalidConfig(format!("delta {} must be finite and >= 0", self.delta)));
        }
        Ok(())
    }
}

fn nearest_ternary(v: f64) -> f64 {
    TERNARY
        .into_iter()
        .min_by(|a, b| (a - v).abs().total_cmp(&(b - v).abs()))
        .unwrap_or(0.0)
}

/// Columns whose pre-attack values all lie in {-1, 0, 1}.
fn ternary_columns(set: &ContextSet) -> Vec<bool> {
    let d = set.contexts.first().map_or(0, |c| c.features().len());
    (0..d)
        .map(|j| set.contexts.iter().all(|c| TERNARY.contains(&c.features()[j])))
        .collect()
}

/// Outcome of an injection, including copies refused under isolation.
#[derive(Clone, Debug)]
pub struct Injection {
    pub post: ContextSet,
    pub blocked_copies: usize,
}

/// Contaminates a seeded ⌈rate·N⌉ subset. Targets come from one seeded
/// permutation and each target's choices from its own RNG stream, so the
/// subset and its links grow monotonically with the rate.
pub fn inject<S: Scorer + ?Sized>(pre: &ContextSet, spec: &AttackSpec, scorer: &S, isolated: bool) -> Result<Injection> {
    spec.validate()?;
    if pre.is_empty() {
        return Err(Error::EmptyInput);
    }
    let n = pre.len();
    let ternary = ternary_columns(pre);
    let d = ternary.len();
    let n_targets = ((spec.contamination_rate * n as f64).ceil() as usize).min(n);
    let mut order = ChaCha8Rng::seed_from_u64(spec.seed);
    let targets = sample(&mut order, n, n).into_vec();

    let mut post = pre.clone();
    post.phase = Phase::PostAttack;
    let mut blocked = 0;
    for &t in &targets[..n_targets] {
        let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
        rng.set_stream(t as u64 + 1);
        let mut x = pre.contexts[t].features().to_vec();
        if n > 1 && d > 0 {
            let source = (t + rng.gen_range(1..n)) % n;
            let k = rng.gen_range(1..=d);
            let fields = sample(&mut rng, d, k);
            if isolated {
                blocked += 1;
            } else {
                let src = pre.contexts[source].features();
                for j in fields.iter() {
                    x[j] = src[j];
                }
                post.links.push(ContaminationLink { source, target: t });
            }
        }
        if spec.delta > 0.0 {
            for (j, v) in x.iter_mut().enumerate() {
                if ternary[j] {
                    *v = nearest_ternary(*v + spec.delta * rng.gen_range(-1.0..=1.0));
                }
            }
        }
        if x != pre.contexts[t].features() {
            let p = scorer.score(&x);
            post.contexts[t] = pre.contexts[t].tampered(x, p, label_for(p));
        }
    }
    post.links.sort_by_key(|l| (l.target, l.source));
    Ok(Injection {
        post,
        blocked_copies: blocked,
    })
}

/// Cross-context contamination with no isolation in place.
pub fn inject_attack<S: Scorer + ?Sized>(pre: &ContextSet, spec: &AttackSpec, scorer: &S) -> Result<ContextSet> {
    inject(pre, spec, scorer, false).map(|i| i.post)
}

fn state_vector(c: &IsolatedContext) -> Vec<f64> {
    let mut v = c.features().to_vec();
    v.push(c.probability());
    v
}

/// Cosine similarity of [x ‖ p] mapped to [0, 1]; exactly 1 for equal
/// vectors and 0.5 when either vector is zero.
pub fn context_similarity(a: &IsolatedContext, b: &IsolatedContext) -> f64 {
    let (u, v) = (state_vector(a), state_vector(b));
    if u == v {
        return 1.0;
    }
    let dot: f64 = u.iter().zip(&v).map(|(x, y)| x * y).sum();
    let nu = u.iter().map(|x| x * x).sum::<f64>().sqrt();
    let nv = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    if nu == 0.0 || nv == 0.0 {
        return 0.5;
    }
    ((dot / (nu * nv)).clamp(-1.0, 1.0) + 1.0) / 2.0
}

pub fn cis(pre: &ContextSet, post: &ContextSet) -> Result<f64> {
    pre.check_matched(post)?;
    if pre.is_empty() {
        return Ok(1.0);
    }
    let total: f64 = pre
        .contexts
        .iter()
        .zip(&post.contexts)
        .map(|(a, b)| context_similarity(a, b))
        .sum();
    Ok(total / pre.len() as f64)
}

/// (feature index, value bits) pairs plus the predicted label, keyed by
/// index `d`.
fn context_items(c: &IsolatedContext) -> HashSet<(usize, u64)> {
    let x = c.features();
    x.iter()
        .enumerate()
        .map(|(j, v)| (j, v.to_bits()))
        .chain(std::iter::once((x.len(), u64::from(c.label()))))
        .collect()
}

/// (1/N)·Σ over recorded links (i → j) of |C_i^pre ∩ C_j^post| / |C_i^pre|.
pub fn apf(pre: &ContextSet, post: &ContextSet) -> Result<f64> {
    pre.check_matched(post)?;
    if pre.is_empty() {
        return Ok(0.0);
    }
    let mut total = 0.0;
    for link in &post.links {
        if link.source == link.target || link.source >= pre.len() || link.target >= pre.len() {
            return Err(Error::IdMismatch(format!("invalid link {} -> {}", link.source, link.target)));
        }
        let ci = context_items(&pre.contexts[link.source]);
        let cj = context_items(&post.contexts[link.target]);
        total += ci.intersection(&cj).count() as f64 / ci.len() as f64;
    }
    Ok(total / pre.len() as f64)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct CsiScores {
    pub csi_raw: f64,
    pub csi_stability: f64,
}

/// Mean |p(x) − p(x + δu)| over contexts and trials, u ~ U[-1, 1] on the
/// columns where `mask` is set; each context draws from its own stream.
pub fn csi<S: Scorer + ?Sized>(scorer: &S, contexts: &ContextSet, mask: &[bool], delta: f64, n_trials: usize, seed: u64) -> Result<CsiScores> {
    if !(delta >= 0.0 && delta.is_finite()) {
        return Err(Error::InvalidConfig(format!("delta {delta} must be finite and >= 0")));
    }
    if n_trials == 0 {
        return Err(Error::InvalidConfig("csi needs at least one trial".into()));
    }
    if contexts.is_empty() || delta == 0.0 {
        return Ok(CsiScores {
            csi_raw: 0.0,
            csi_stability: 1.0,
        });
    }
    let mut total = 0.0;
    for (i, c) in contexts.contexts.iter().enumerate() {
        let x = c.features();
        if mask.len() != x.len() {
            return Err(Error::DimensionMismatch {
                expected: x.len(),
                got: mask.len(),
            });
        }
        let base = scorer.score(x);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(i as u64);
        for _ in 0..n_trials {
            let moved: Vec<f64> = x
                .iter()
                .zip(mask)
                .map(|(v, &m)| if m { v + delta * rng.gen_range(-1.0..=1.0) } else { *v })
                .collect();
            total += (base - scorer.score(&moved)).abs();
        }
    }
    let csi_raw = (total / (contexts.len() * n_trials) as f64).clamp(0.0, 1.0);
    Ok(CsiScores {
        csi_raw,
        csi_stability: 1.0 - csi_raw,
    })
}

pub fn mre(cis_pre: f64, cis_post_attack: f64, cis_post_mitigation: f64) -> Result<f64> {
    if cis_pre <= 0.0 {
        return Err(Error::ZeroBaseline);
    }
    Ok((cis_post_mitigation - cis_post_attack) / cis_pre)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Strategy {
    Isolation,
    Validation,
    Hybrid,
}

impl Strategy {
    pub const ALL: [Strategy; 3] = [Strategy::Isolation, Strategy::Validation, Strategy::Hybrid];

    pub fn as_str(self) -> &'static str {
        match self {
            Strategy::Isolation => "isolation",
            Strategy::Validation => "validation",
            Strategy::Hybrid => "hybrid",
        }
    }

    fn isolates(self) -> bool {
        matches!(self, Strategy::Isolation | Strategy::Hybrid)
    }

    fn validates(self) -> bool {
        matches!(self, Strategy::Validation | Strategy::Hybrid)
    }
}

impl std::str::FromStr for Strategy {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Strategy::ALL
            .into_iter()
            .find(|k| k.as_str() == s)
            .ok_or_else(|| Error::InvalidConfig(format!("unknown strategy {s:?}")))
    }
}

/// Flags contexts whose digest no longer matches or whose PCS falls below
/// the threshold, and restores them from the pre-attack snapshot.
pub fn validate_and_restore(pre: &ContextSet, post: &ContextSet, pcs: &PcsConfig) -> Result<(ContextSet, usize)> {
    pre.check_matched(post)?;
    let mut restored = post.clone();
    restored.phase = Phase::PostMitigation;
    restored.links.clear();
    let mut flagged = 0;
    for (i, c) in post.contexts.iter().enumerate() {
        if !c.is_sealed() || pcs.score(c.features(), c.provenance())?.flagged {
            restored.contexts[i] = pre.contexts[i].clone();
            flagged += 1;
        }
    }
    Ok((restored, flagged))
}

/// Fixed inputs shared by every strategy run.
pub struct Harness<'a> {
    pub model: &'a TrainedModel,
    pub pcs: &'a PcsConfig,
    /// Fusion multipliers applied before scoring; 1 outside F_final.
    pub weights: Vec<f64>,
    /// Columns perturbed by CSI.
    pub f_final: Vec<bool>,
    pub n_contexts: usize,
    pub csi_trials: usize,
}

impl<'a> Harness<'a> {
    pub fn new(model: &'a TrainedModel, pcs: &'a PcsConfig) -> Self {
        let d = model.n_features();
        Self {
            model,
            pcs,
            weights: vec![1.0; d],
            f_final: vec![true; d],
            n_contexts: DEFAULT_CONTEXTS,
            csi_trials: DEFAULT_CSI_TRIALS,
        }
    }

    pub fn with_fusion(mut self, weights: Vec<f64>, f_final: Vec<bool>) -> Self {
        self.weights = weights;
        self.f_final = f_final;
        self
    }

    fn score(&self, x: &[f64]) -> f64 {
        let z: Vec<f64> = x.iter().zip(&self.weights).map(|(a, w)| a * w).collect();
        self.model.proba(&z)
    }
}

impl Scorer for Harness<'_> {
    fn score(&self, x: &[f64]) -> f64 {
        Harness::score(self, x)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ReportRow {
    pub dataset: String,
    pub strategy: Strategy,
    /// Final-phase CIS: post-mitigation for validation and hybrid,
    /// post-attack for isolation.
    pub cis: f64,
    pub apf: f64,
    /// Absent for isolation, which runs no mitigation pass.
    pub mre: Option<f64>,
    pub csi_raw: f64,
    pub csi_stability: f64,
    pub cis_post_attack: f64,
    pub contexts: usize,
    pub links: usize,
    pub blocked_copies: usize,
    pub flagged: usize,
}

pub fn run_strategy(ds: &Dataset, harness: &Harness<'_>, strategy: Strategy, spec: &AttackSpec) -> Result<ReportRow> {
    let d = harness.model.n_features();
    if ds.n_features() != d {
        return Err(Error::DimensionMismatch {
            expected: d,
            got: ds.n_features(),
        });
    }
    for len in [harness.weights.len(), harness.f_final.len()] {
        if len != d {
            return Err(Error::DimensionMismatch { expected: d, got: len });
        }
    }
    if ds.is_empty() {
        return Err(Error::EmptyDataset);
    }
    let subset = crate::explain::background_sample(ds, harness.n_contexts, spec.seed);
    let pre = ContextSet::from_dataset(&subset, harness);
    let injection = inject(&pre, spec, harness, strategy.isolates())?;
    let post = injection.post;
    let cis_pre = cis(&pre, &pre)?;
    let cis_post_attack = cis(&pre, &post)?;
    let apf = apf(&pre, &post)?;
    let (cis_final, mre, flagged) = if strategy.validates() {
        let (mitigated, flagged) = validate_and_restore(&pre, &post, harness.pcs)?;
        let cis_mitigated = cis(&pre, &mitigated)?;
        (cis_mitigated, Some(mre(cis_pre, cis_post_attack, cis_mitigated)?), flagged)
    } else {
        (cis_post_attack, None, 0)
    };
    let scores = csi(harness, &pre, &harness.f_final, spec.delta, harness.csi_trials, spec.seed)?;
    Ok(ReportRow {
        dataset: ds.name.clone(),
        strategy,
        cis: cis_final,
        apf,
        mre,
        csi_raw: scores.csi_raw,
        csi_stability: scores.csi_stability,
        cis_post_attack,
        contexts: pre.len(),
        links: post.links.len(),
        blocked_copies: injection.blocked_copies,
        flagged,
    })
}

#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct RobustnessReport {
    pub rows: Vec<ReportRow>,
}

impl RobustnessReport {
    /// Aligned table with columns CIS, APF, MRE, CSI; "--" marks an
    /// unreported MRE.
    pub fn to_table(&self) -> String {
        let mut out = format!(
            "{:<16} {:<11} {:>8} {:>8} {:>8} {:>8}\n",
            "Dataset", "Strategy", "CIS", "APF", "MRE", "CSI"
        );
        for r in &self.rows {
            let mre = r.mre.map_or_else(|| "--".to_string(), |m| format!("{m:.4}"));
            let _ = writeln!(
                out,
                "{:<16} {:<11} {:>8.4} {:>8.4} {:>8} {:>8.4}",
                r.dataset,
                r.strategy.as_str(),
                r.cis,
                r.apf,
                mre,
                r.csi_stability
            );
        }
        out
    }

    /// One JSON object per row.
    pub fn to_json_lines(&self) -> Result<String> {
        let mut out = String::new();
        for r in &self.rows {
            out.push_str(&serde_json::to_string(r)?);
            out.push('\n');
        }
        Ok(out)
    }
}
