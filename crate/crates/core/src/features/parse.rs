use serde::{Deserialize, Serialize};
use url::Url;

use crate::error::{Error, Result};

/// A URL decomposed into its components. `raw` keeps the original input,
/// including any userinfo that was stripped from `host`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct UrlParts {
    pub scheme: String,
    pub host: String,
    pub port: Option<u16>,
    pub path: String,
    pub query: String,
    pub fragment: String,
    pub raw: String,
}

impl UrlParts {
    /// Normalized reassembly: `scheme://host[:port]path[?query][#fragment]`.
    pub fn normalized(&self) -> String {
        let mut out = format!("{}://{}", self.scheme, self.host);
        if let Some(port) = self.port {
            out.push_str(&format!(":{port}"));
        }
        out.push_str(&self.path);
        if !self.query.is_empty() {
            out.push('?');
            out.push_str(&self.query);
        }
        if !self.fragment.is_empty() {
            out.push('#');
            out.push_str(&self.fragment);
        }
        out
    }
}

fn malformed(raw: &str, reason: impl Into<String>) -> Error {
    Error::MalformedUrl {
        url: raw.to_string(),
        reason: reason.into(),
    }
}

/// Splits `raw` into [`UrlParts`]. A missing scheme defaults to `http`.
pub fn parse_url(raw: &str) -> Result<UrlParts> {
    let trimmed = raw.trim();
    if trimmed.is_empty() {
        return Err(malformed(raw, "empty input"));
    }
    let candidate = if trimmed.contains("://") {
        trimmed.to_string()
    } else if let Some(rest) = trimmed.strip_prefix("//") {
        format!("http://{rest}")
    } else {
        format!("http://{trimmed}")
    };
    let url = Url::parse(&candidate).map_err(|e| malformed(raw, e.to_string()))?;
    let host = url
        .host_str()
        .map(|h| h.trim_end_matches('.').to_ascii_lowercase())
        .filter(|h| !h.is_empty())
        .ok_or_else(|| malformed(raw, "no host"))?;

    Ok(UrlParts {
        scheme: url.scheme().to_string(),
        host,
        port: url.port(),
        path: url.path().to_string(),
        query: url.query().unwrap_or_default().to_string(),
        fragment: url.fragment().unwrap_or_default().to_string(),
        raw: raw.to_string(),
    })
}
