//! Plain-text data files shipped with the crate.
//!
//! Each file holds one entry per line; blank lines and lines starting with
//! `#` are ignored. Setting `PHISHGUARD_DATA_DIR` makes the loader read
//! same-named files from that directory instead of the compiled-in copies.

use std::path::PathBuf;

pub const DATA_DIR_ENV: &str = "PHISHGUARD_DATA_DIR";

pub const SHORTENERS: &str = "shorteners.txt";
pub const SUFFIXES: &str = "suffixes.txt";
pub const ALIASES: &str = "aliases.txt";

fn builtin(name: &str) -> &'static str {
    match name {
        SHORTENERS => include_str!("../data/shorteners.txt"),
        SUFFIXES => include_str!("../data/suffixes.txt"),
        ALIASES => include_str!("../data/aliases.txt"),
        _ => "",
    }
}

/// Text of the data file `name`, preferring the override directory.
pub fn read(name: &str) -> String {
    if let Some(dir) = std::env::var_os(DATA_DIR_ENV) {
        let path = PathBuf::from(dir).join(name);
        if let Ok(text) = std::fs::read_to_string(&path) {
            return text;
        }
    }
    builtin(name).to_string()
}

/// Non-empty, non-comment lines, trimmed.
pub fn entries(text: &str) -> impl Iterator<Item = &str> {
    text.lines()
        .map(str::trim)
        .filter(|l| !l.is_empty() && !l.starts_with('#'))
}
