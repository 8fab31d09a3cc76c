//! Line-delimited JSON tool server with per-request isolated contexts,
//! provenance scoring and fused-weight classification.

mod classify;
mod context;
mod pcs;
mod protocol;
mod transport;

use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::Arc;

use serde_json::{json, Map, Value};

use crate::datasets::{Dataset, Provenance};
use crate::error::{Error, Result};
use crate::explain::{background_sample, rank_attributions, shap_linear, shap_sampled, FusionWeights, BACKGROUND_ROWS};
use crate::features::{extract, FeatureResolver, OfflineResolver};
use crate::learners::{ModelFile, MODEL_FORMAT_VERSION};

pub use classify::{classify_with_fusion, fusion_vector, Classification, RATIONALE_LEN};
pub use context::{state_digest, AuditEntry, AuditLog, IsolatedContext};
pub use pcs::{provenance_score, PcsConfig, PcsResult};
pub use protocol::{round6, ErrorBody, ErrorCode, RequestEnvelope, ResponseEnvelope, Status};
pub use transport::{serve, serve_lines, serve_listener, Transport, STDIO_SESSION};

pub const TOOLS: [&str; 4] = ["server_info", "extract_features", "classify_url", "explain_url"];

/// Shapley samples used by `explain_url` for non-linear models.
const EXPLAIN_SAMPLES: usize = 200;

/// Immutable after construction; shared read-only by every session.
pub struct Server {
    model: ModelFile,
    weights: Vec<f64>,
    pcs: PcsConfig,
    background: Dataset,
    resolver: Arc<dyn FeatureResolver + Send + Sync>,
    audit: AuditLog,
    next_context: AtomicU64,
}

impl Server {
    /// `reference` seeds both the PCS neighbours and the explanation
    /// background. Without fusion weights every feature passes through
    /// with weight 1.
    pub fn new(model: ModelFile, fusion: Option<&FusionWeights>, pcs: PcsConfig, reference: &Dataset) -> Result<Self> {
        let d = model.model.n_features();
        if reference.n_features() != d {
            return Err(Error::DimensionMismatch {
                expected: d,
                got: reference.n_features(),
            });
        }
        let weights = match fusion {
            Some(f) => fusion_vector(f, &model.feature_names),
            None => vec![1.0; d],
        };
        // Linear attributions use full-reference means; others a seeded sample.
        let mut background = if model.model.as_linear().is_some() {
            reference.clone()
        } else {
            background_sample(reference, BACKGROUND_ROWS, 0)
        };
        for s in &mut background.samples {
            s.features.iter_mut().zip(&weights).for_each(|(v, w)| *v *= w);
        }
        Ok(Self {
            model,
            weights,
            pcs,
            background,
            resolver: Arc::new(OfflineResolver),
            audit: AuditLog::new(),
            next_context: AtomicU64::new(0),
        })
    }

    pub fn with_resolver(mut self, resolver: Arc<dyn FeatureResolver + Send + Sync>) -> Self {
        self.resolver = resolver;
        self
    }

    pub fn with_audit(mut self, audit: AuditLog) -> Self {
        self.audit = audit;
        self
    }

    pub fn audit(&self) -> &AuditLog {
        &self.audit
    }

    pub fn fusion_weights(&self) -> &[f64] {
        &self.weights
    }

    /// Handles one request line and returns one response line.
    pub fn handle_line(&self, line: &str, default_session: &str) -> String {
        self.handle(line, default_session).to_line()
    }

    pub fn handle(&self, line: &str, default_session: &str) -> ResponseEnvelope {
        let value: Value = match serde_json::from_str(line) {
            Ok(v) => v,
            Err(e) => return ResponseEnvelope::error(None, ErrorCode::ParseError, format!("invalid JSON: {e}")),
        };
        let echoed = value.get("id").and_then(Value::as_str).map(str::to_string);
        let request: RequestEnvelope = match serde_json::from_value(value) {
            Ok(r) => r,
            Err(e) => return ResponseEnvelope::error(echoed, ErrorCode::ParseError, format!("invalid request: {e}")),
        };
        if request.id.is_empty() {
            return ResponseEnvelope::error(None, ErrorCode::ParseError, "request id must be non-empty");
        }
        if !TOOLS.contains(&request.tool.as_str()) {
            return ResponseEnvelope::error(
                Some(request.id),
                ErrorCode::ToolNotFound,
                format!("unknown tool {:?}", request.tool),
            );
        }
        let session = if request.session.is_empty() {
            default_session.to_string()
        } else {
            request.session.clone()
        };
        let context_id = format!("ctx-{:016x}", self.next_context.fetch_add(1, Ordering::Relaxed));
        let outcome = self.dispatch(&request, &session, &context_id);
        let (response, context) = match outcome {
            Ok((result, context)) => (ResponseEnvelope::ok(request.id.clone(), result), context),
            Err(e) => {
                let code = match e {
                    Error::MalformedUrl { .. } => ErrorCode::MalformedUrl,
                    _ => ErrorCode::Internal,
                };
                (ResponseEnvelope::error(Some(request.id.clone()), code, e.to_string()), None)
            }
        };
        self.audit.append(AuditEntry {
            context_id,
            request_id: request.id,
            session,
            tool: request.tool,
            ok: response.status == Status::Ok,
            context,
        });
        response
    }

    fn url_argument(args: &Map<String, Value>) -> Result<&str> {
        args.get("url").and_then(Value::as_str).ok_or_else(|| Error::MalformedUrl {
            url: String::new(),
            reason: "missing string argument \"url\"".into(),
        })
    }

    fn features_for(&self, url: &str) -> Result<Vec<f64>> {
        let fv = extract(url, self.resolver.as_ref())?;
        let named = fv.to_named_map();
        self.model
            .feature_names
            .iter()
            .map(|n| {
                named
                    .get(n)
                    .copied()
                    .ok_or_else(|| Error::MissingFeature(vec![n.clone()]))
            })
            .collect()
    }

    fn dispatch(&self, request: &RequestEnvelope, session: &str, context_id: &str) -> Result<(Value, Option<IsolatedContext>)> {
        match request.tool.as_str() {
            "server_info" => Ok((
                json!({
                    "name": "phishguard",
                    "version": env!("CARGO_PKG_VERSION"),
                    "tools": TOOLS,
                    "model_kind": self.model.kind,
                    "model_version": MODEL_FORMAT_VERSION,
                    "feature_count": self.model.feature_names.len(),
                }),
                None,
            )),
            "extract_features" => {
                let url = Self::url_argument(&request.arguments)?;
                let fv = extract(url, self.resolver.as_ref())?;
                Ok((json!(fv.to_named_map()), None))
            }
            "classify_url" | "explain_url" => {
                let url = Self::url_argument(&request.arguments)?;
                let claimed = match request.arguments.get("provenance").and_then(Value::as_str) {
                    Some(p) => p.parse::<Provenance>()?,
                    None => Provenance::Unknown,
                };
                let x = self.features_for(url)?;
                let c = classify_with_fusion(&x, &self.model.model, &self.weights, &self.model.feature_names)?;
                let pcs = self.pcs.score(&x, claimed)?;
                let context = IsolatedContext::seal(
                    context_id.to_string(),
                    request.id.clone(),
                    session.to_string(),
                    x.clone(),
                    c.probability,
                    c.label,
                    claimed,
                );
                let mut result = json!({
                    "label": if c.label == 1 { "phishing" } else { "legitimate" },
                    "probability": round6(c.probability),
                    "rationale": c.rationale,
                    "pcs": round6(pcs.pcs),
                    "flagged": pcs.flagged,
                });
                if request.tool == "explain_url" {
                    result["attributions"] = self.explain(&x)?;
                }
                Ok((result, Some(context)))
            }
            other => Err(Error::InvalidConfig(format!("unrouted tool {other}"))),
        }
    }

    fn explain(&self, x: &[f64]) -> Result<Value> {
        let z: Vec<f64> = x.iter().zip(&self.weights).map(|(a, w)| a * w).collect();
        let (explanation, scale) = match self.model.model.as_linear() {
            Some(lin) => (shap_linear(lin, &z, &self.background)?, "logit"),
            None => (
                shap_sampled(&self.model.model, &z, &self.background, EXPLAIN_SAMPLES, 0)?,
                "probability",
            ),
        };
        let rows = rank_attributions(&self.model.feature_names, x, &explanation.values);
        Ok(json!({
            "scale": scale,
            "base_value": round6(explanation.base_value),
            "features": rows
                .iter()
                .map(|r| json!({
                    "feature": r.feature,
                    "value": r.value,
                    "attribution": round6(r.attribution),
                    "direction": r.direction,
                }))
                .collect::<Vec<_>>(),
        }))
    }
}
