use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;
use std::sync::Mutex;
use std::time::{SystemTime, UNIX_EPOCH};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::datasets::Provenance;
use crate::error::{Error, Result};

/// SHA-256 over the inference state (x, p, ŷ, provenance).
pub fn state_digest(features: &[f64], probability: f64, label: u8, provenance: Provenance) -> String {
    let mut h = Sha256::new();
    for v in features {
        h.update(v.to_bits().to_le_bytes());
    }
    h.update(probability.to_bits().to_le_bytes());
    h.update([label]);
    h.update(provenance.as_str().as_bytes());
    h.finalize().iter().map(|b| format!("{b:02x}")).collect()
}

/// One request's sealed inference state C_i = {x_i, f(x_i), ŷ_i} plus
/// provenance. Fields are read-only after [`IsolatedContext::seal`].
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct IsolatedContext {
    id: String,
    request_id: String,
    session: String,
    features: Vec<f64>,
    probability: f64,
    label: u8,
    provenance: Provenance,
    created_at_ms: u64,
    digest: String,
}

impl IsolatedContext {
    pub fn seal(
        id: String,
        request_id: String,
        session: String,
        features: Vec<f64>,
        probability: f64,
        label: u8,
        provenance: Provenance,
    ) -> Self {
        let created_at_ms = SystemTime::now()
            .duration_since(UNIX_EPOCH)
            .map_or(0, |d| d.as_millis() as u64);
        let digest = state_digest(&features, probability, label, provenance);
        Self {
            id,
            request_id,
            session,
            features,
            probability,
            label,
            provenance,
            created_at_ms,
            digest,
        }
    }

    pub fn id(&self) -> &str {
        &self.id
    }

    pub fn request_id(&self) -> &str {
        &self.request_id
    }

    pub fn session(&self) -> &str {
        &self.session
    }

    pub fn features(&self) -> &[f64] {
        &self.features
    }

    pub fn probability(&self) -> f64 {
        self.probability
    }

    pub fn label(&self) -> u8 {
        self.label
    }

    pub fn provenance(&self) -> Provenance {
        self.provenance
    }

    pub fn created_at_ms(&self) -> u64 {
        self.created_at_ms
    }

    pub fn digest(&self) -> &str {
        &self.digest
    }

    /// Copy with replaced inference state that keeps the original digest,
    /// so `is_sealed` turns false whenever the state actually changed.
    pub(crate) fn tampered(&self, features: Vec<f64>, probability: f64, label: u8) -> Self {
        Self {
            features,
            probability,
            label,
            ..self.clone()
        }
    }

    pub fn is_sealed(&self) -> bool {
        self.digest == state_digest(&self.features, self.probability, self.label, self.provenance)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AuditEntry {
    pub context_id: String,
    pub request_id: String,
    pub session: String,
    pub tool: String,
    pub ok: bool,
    /// Present for tools that ran inference.
    pub context: Option<IsolatedContext>,
}

/// Append-only log behind a mutex, optionally mirrored to a JSON-lines
/// file flushed after every entry.
#[derive(Default)]
pub struct AuditLog {
    entries: Mutex<Vec<AuditEntry>>,
    sink: Mutex<Option<BufWriter<File>>>,
}

impl AuditLog {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn with_file(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let file = File::options()
            .create(true)
            .append(true)
            .open(path)
            .map_err(|e| Error::io(path, e))?;
        Ok(Self {
            entries: Mutex::new(Vec::new()),
            sink: Mutex::new(Some(BufWriter::new(file))),
        })
    }

    pub fn append(&self, entry: AuditEntry) {
        let line = serde_json::to_string(&entry).expect("audit entry serializes");
        let mut entries = self.entries.lock().unwrap_or_else(|p| p.into_inner());
        if let Some(sink) = self.sink.lock().unwrap_or_else(|p| p.into_inner()).as_mut() {
            let _ = writeln!(sink, "{line}").and_then(|_| sink.flush());
        }
        entries.push(entry);
    }

    pub fn len(&self) -> usize {
        self.entries.lock().unwrap_or_else(|p| p.into_inner()).len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn snapshot(&self) -> Vec<AuditEntry> {
        self.entries.lock().unwrap_or_else(|p| p.into_inner()).clone()
    }

    pub fn flush(&self) {
        if let Some(sink) = self.sink.lock().unwrap_or_else(|p| p.into_inner()).as_mut() {
            let _ = sink.flush();
        }
    }
}
