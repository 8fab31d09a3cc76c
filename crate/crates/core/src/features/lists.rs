use std::collections::HashSet;
use std::sync::OnceLock;

use crate::bundled;

/// Suffix and shortener lists consulted by lexical extraction.
#[derive(Debug, Clone)]
pub struct LexicalLists {
    suffixes: HashSet<String>,
    shorteners: HashSet<String>,
}

impl LexicalLists {
    pub fn from_text(suffixes: &str, shorteners: &str) -> Self {
        let lower = |s: &str| s.trim_matches('.').to_ascii_lowercase();
        Self {
            suffixes: bundled::entries(suffixes).map(lower).collect(),
            shorteners: bundled::entries(shorteners).map(lower).collect(),
        }
    }

    /// Lists loaded once per process from the bundled (or overridden) files.
    pub fn global() -> &'static LexicalLists {
        static LISTS: OnceLock<LexicalLists> = OnceLock::new();
        LISTS.get_or_init(|| {
            LexicalLists::from_text(
                &bundled::read(bundled::SUFFIXES),
                &bundled::read(bundled::SHORTENERS),
            )
        })
    }

    pub fn is_suffix(&self, candidate: &str) -> bool {
        self.suffixes.contains(candidate)
    }

    pub fn is_shortener(&self, host: &str) -> bool {
        self.shorteners.contains(host)
    }

    /// Shortener hosts in sorted order.
    pub fn shorteners(&self) -> Vec<&str> {
        let mut hosts: Vec<&str> = self.shorteners.iter().map(String::as_str).collect();
        hosts.sort_unstable();
        hosts
    }
}
