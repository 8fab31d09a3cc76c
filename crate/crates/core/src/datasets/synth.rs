//! Rule-based synthesis of phishing-like URLs.
//!
//! [`generate_synthetic_urls`] draws a legitimate base URL, applies one or
//! more transformation rules and keeps the variant if its normalized form
//! has not been seen. [`generate_feature_rich_domains`] produces a fixed
//! number of variants per lexical feature and reports how many outputs
//! trigger each feature.

use std::collections::{BTreeMap, HashSet};
use std::fmt;
use std::str::FromStr;
use std::sync::OnceLock;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use regex::Regex;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::features::{parse_url, registrable_domain, Feature, LexicalLists};

/// Transformation rules, applied in declaration order when combined.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Rule {
    /// Character-level look-alike or typo in the brand label.
    Homoglyph,
    /// `brand-word.tld` or `word-brand.tld`.
    HyphenatedBrand,
    /// Brand host nested under an attacker domain.
    MisleadingSubdomain,
    /// Host replaced by a literal IPv4 address.
    IpHost,
    /// `https://brand@attacker/...`.
    AtRedirect,
    /// Security-themed words in the path and query.
    SecurityWord,
}

impl Rule {
    pub const ALL: [Rule; 6] = [
        Rule::Homoglyph,
        Rule::HyphenatedBrand,
        Rule::MisleadingSubdomain,
        Rule::IpHost,
        Rule::AtRedirect,
        Rule::SecurityWord,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Rule::Homoglyph => "homoglyph",
            Rule::HyphenatedBrand => "hyphenated-brand",
            Rule::MisleadingSubdomain => "misleading-subdomain",
            Rule::IpHost => "ip-host",
            Rule::AtRedirect => "at-redirect",
            Rule::SecurityWord => "security-word",
        }
    }
}

impl fmt::Display for Rule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Rule {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Rule::ALL
            .into_iter()
            .find(|r| r.as_str() == s)
            .ok_or_else(|| Error::InvalidConfig(format!("unknown rule {s:?}")))
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GenerationConfig {
    pub legit_urls: Vec<String>,
    pub target_count: usize,
    pub rules: Vec<Rule>,
    pub seed: u64,
    pub per_feature_target: usize,
    pub domain_base: String,
}

impl Default for GenerationConfig {
    fn default() -> Self {
        Self {
            legit_urls: vec!["https://example.com".to_string()],
            target_count: 100,
            rules: Rule::ALL.to_vec(),
            seed: 0,
            per_feature_target: 10,
            domain_base: "example-login.net".to_string(),
        }
    }
}

const SECURITY_WORDS: &[&str] = &[
    "verify", "secure", "account", "login", "signin", "update", "confirm", "support",
    "billing", "security", "auth", "unlock", "recovery", "validate", "wallet", "alert",
    "session", "password", "webscr", "service",
];

const BRANDS: &[&str] = &[
    "paypal", "google", "microsoft", "apple", "amazon", "netflix", "facebook", "outlook",
    "office365", "chase", "wellsfargo", "dropbox", "linkedin", "instagram", "icloud",
];

const HOMOGLYPHS: &[(&str, &str)] = &[
    ("o", "0"),
    ("l", "1"),
    ("i", "1"),
    ("e", "3"),
    ("a", "4"),
    ("s", "5"),
    ("m", "rn"),
    ("w", "vv"),
    ("g", "q"),
    ("b", "d"),
];

/// Lowercases, strips trailing '/', and collapses repeated '/' in the path.
pub fn normalize_url(url: &str) -> String {
    let lower = url.trim().to_ascii_lowercase();
    let (prefix, rest) = match lower.find("://") {
        Some(i) => lower.split_at(i + 3),
        None => ("", lower.as_str()),
    };
    let mut collapsed = String::with_capacity(rest.len());
    let mut previous_slash = false;
    for c in rest.chars() {
        if c == '/' && previous_slash {
            continue;
        }
        previous_slash = c == '/';
        collapsed.push(c);
    }
    format!("{prefix}{}", collapsed.trim_end_matches('/'))
}

fn url_hash(url: &str) -> [u8; 32] {
    Sha256::digest(normalize_url(url).as_bytes()).into()
}

#[derive(Clone, Debug)]
struct Variant {
    scheme: String,
    userinfo: Option<String>,
    host: String,
    path: String,
    query: String,
}

impl Variant {
    fn render(&self) -> String {
        let mut out = format!("{}://", self.scheme);
        if let Some(user) = &self.userinfo {
            out.push_str(user);
            out.push('@');
        }
        out.push_str(&self.host);
        out.push_str(&self.path);
        if !self.query.is_empty() {
            out.push('?');
            out.push_str(&self.query);
        }
        out
    }
}

fn pick<'a>(rng: &mut ChaCha8Rng, items: &'a [&'a str]) -> &'a str {
    items[rng.gen_range(0..items.len())]
}

fn random_ipv4(rng: &mut ChaCha8Rng) -> String {
    format!(
        "{}.{}.{}.{}",
        rng.gen_range(11..=223),
        rng.gen_range(0..=255),
        rng.gen_range(0..=255),
        rng.gen_range(1..=254)
    )
}

fn token(rng: &mut ChaCha8Rng, len: usize) -> String {
    const ALPHABET: &[u8] = b"abcdefghijklmnopqrstuvwxyz0123456789";
    (0..len)
        .map(|_| ALPHABET[rng.gen_range(0..ALPHABET.len())] as char)
        .collect()
}

/// Splits a host into (labels before the brand, brand label, suffix).
fn split_brand(host: &str) -> (String, String, String) {
    let registrable = registrable_domain(host, LexicalLists::global());
    let prefix = host
        .strip_suffix(&registrable)
        .unwrap_or("")
        .trim_end_matches('.')
        .to_string();
    match registrable.split_once('.') {
        Some((brand, suffix)) => (prefix, brand.to_string(), suffix.to_string()),
        None => (prefix, registrable, "com".to_string()),
    }
}

fn join_host(prefix: &str, brand: &str, suffix: &str) -> String {
    if prefix.is_empty() {
        format!("{brand}.{suffix}")
    } else {
        format!("{prefix}.{brand}.{suffix}")
    }
}

fn homoglyph(rng: &mut ChaCha8Rng, label: &str) -> String {
    let options: Vec<(usize, &str, &str)> = HOMOGLYPHS
        .iter()
        .flat_map(|&(from, to)| label.match_indices(from).map(move |(i, _)| (i, from, to)))
        .collect();
    if !options.is_empty() && rng.gen_bool(0.7) {
        let (i, from, to) = options[rng.gen_range(0..options.len())];
        return format!("{}{}{}", &label[..i], to, &label[i + from.len()..]);
    }
    // Typo: doubled or dropped character.
    let chars: Vec<char> = label.chars().collect();
    let i = rng.gen_range(0..chars.len());
    let mut out: String = chars[..i].iter().collect();
    if chars.len() > 3 && rng.gen_bool(0.5) {
        out.extend(&chars[i + 1..]);
    } else {
        out.push(chars[i]);
        out.extend(&chars[i..]);
    }
    out
}

fn apply_rules(rng: &mut ChaCha8Rng, base: &str, rules: &[Rule], domain_base: &str) -> Result<Variant> {
    let parts = parse_url(base)?;
    let (prefix, mut brand, suffix) = split_brand(&parts.host);
    let mut variant = Variant {
        scheme: if rng.gen_bool(0.5) { "https" } else { "http" }.to_string(),
        userinfo: None,
        host: parts.host.clone(),
        path: if parts.path == "/" { String::new() } else { parts.path.clone() },
        query: parts.query.clone(),
    };

    for &rule in rules {
        match rule {
            Rule::Homoglyph => {
                brand = homoglyph(rng, &brand);
                variant.host = join_host(&prefix, &brand, &suffix);
            }
            Rule::HyphenatedBrand => {
                let word = pick(rng, SECURITY_WORDS);
                brand = if rng.gen_bool(0.5) {
                    format!("{brand}-{word}")
                } else {
                    format!("{word}-{brand}")
                };
                variant.host = join_host(&prefix, &brand, &suffix);
            }
            Rule::MisleadingSubdomain => {
                let word = pick(rng, SECURITY_WORDS);
                let nested = join_host(&prefix, &brand, &suffix);
                variant.host = if rng.gen_bool(0.5) {
                    format!("{nested}.{word}.{domain_base}")
                } else {
                    format!("{word}.{nested}.{domain_base}")
                };
            }
            Rule::IpHost => {
                let original = join_host(&prefix, &brand, &suffix);
                variant.host = random_ipv4(rng);
                variant.path = format!("/{original}{}", variant.path);
            }
            Rule::AtRedirect => {
                let original = join_host(&prefix, &brand, &suffix);
                variant.userinfo = Some(original);
                if variant.host.parse::<std::net::Ipv4Addr>().is_err() {
                    variant.host = format!("{}-{}.{domain_base}", pick(rng, SECURITY_WORDS), token(rng, 4));
                }
            }
            Rule::SecurityWord => {
                let word = pick(rng, SECURITY_WORDS);
                variant.path = if rng.gen_bool(0.5) {
                    format!("/{word}{}", variant.path)
                } else {
                    format!("{}/{word}-{}", variant.path, pick(rng, SECURITY_WORDS))
                };
                if rng.gen_bool(0.5) {
                    let param = format!("{}={}", pick(rng, &["session", "token", "id", "ref"]), token(rng, 8));
                    variant.query = if variant.query.is_empty() {
                        param
                    } else {
                        format!("{}&{param}", variant.query)
                    };
                }
            }
        }
    }
    Ok(variant)
}

fn validate(cfg: &GenerationConfig) -> Result<()> {
    if cfg.legit_urls.is_empty() {
        return Err(Error::InvalidConfig("no legitimate base URLs".into()));
    }
    if cfg.target_count == 0 {
        return Err(Error::InvalidConfig("target count must be at least 1".into()));
    }
    if cfg.rules.is_empty() {
        return Err(Error::InvalidConfig("no transformation rules".into()));
    }
    Ok(())
}

/// Exactly `cfg.target_count` unique phishing-like URLs, deterministic for a
/// fixed seed.
pub fn generate_synthetic_urls(cfg: &GenerationConfig) -> Result<Vec<String>> {
    validate(cfg)?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut rules: Vec<Rule> = cfg.rules.clone();
    rules.sort();
    rules.dedup();

    let budget = 100 * cfg.target_count;
    let mut out = Vec::with_capacity(cfg.target_count);
    let mut seen = HashSet::with_capacity(cfg.target_count);
    for base in &cfg.legit_urls {
        seen.insert(url_hash(base));
    }
    let mut attempts = 0;
    while out.len() < cfg.target_count {
        if attempts == budget {
            return Err(Error::ExhaustedRuleSpace {
                requested: cfg.target_count,
                produced: out.len(),
                attempts,
            });
        }
        attempts += 1;
        let base = &cfg.legit_urls[rng.gen_range(0..cfg.legit_urls.len())];
        let how_many = rng.gen_range(1..=rules.len().min(3));
        let mut chosen: Vec<Rule> = rules.choose_multiple(&mut rng, how_many).copied().collect();
        chosen.sort();
        let candidate = apply_rules(&mut rng, base, &chosen, &cfg.domain_base)?.render();
        if parse_url(&candidate).is_err() {
            continue;
        }
        if seen.insert(url_hash(&candidate)) {
            out.push(candidate);
        }
    }
    Ok(out)
}

/// Per-feature trigger counts over a URL list.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct FeatureReport {
    pub total: usize,
    pub counts: BTreeMap<Feature, usize>,
}

impl FeatureReport {
    pub fn count(&self, feature: Feature) -> usize {
        self.counts.get(&feature).copied().unwrap_or(0)
    }

    /// `name count` lines in canonical feature order.
    pub fn to_text(&self) -> String {
        let mut text = format!("total {}\n", self.total);
        for (feature, count) in &self.counts {
            text.push_str(&format!("{feature} {count}\n"));
        }
        text
    }
}

/// Lexical features that synthesis can deliberately trigger.
pub const TARGETABLE: [Feature; 7] = [
    Feature::HavingIpAddress,
    Feature::HavingAtSymbol,
    Feature::DoubleSlashRedirecting,
    Feature::PrefixSuffix,
    Feature::HavingSubDomain,
    Feature::ShorteningService,
    Feature::HttpsToken,
];

fn host_pattern() -> &'static Regex {
    static HOST: OnceLock<Regex> = OnceLock::new();
    HOST.get_or_init(|| {
        Regex::new(r"^(?:[A-Za-z][A-Za-z0-9+.\-]*://|//)?(?:[^/?#]*@)?(\[[^\]]*\]|[^:/?#]*)")
            .expect("valid host regex")
    })
}

fn ipv4_pattern() -> &'static Regex {
    static IP: OnceLock<Regex> = OnceLock::new();
    IP.get_or_init(|| Regex::new(r"^(\d{1,3})\.(\d{1,3})\.(\d{1,3})\.(\d{1,3})$").expect("valid ip regex"))
}

/// Pattern-based detection of the targetable features on the raw string,
/// used for generation reports.
fn triggered(url: &str, lists: &LexicalLists) -> Vec<Feature> {
    let url = url.trim();
    let host = host_pattern()
        .captures(url)
        .and_then(|c| c.get(1))
        .map(|m| m.as_str().trim_end_matches('.').to_ascii_lowercase())
        .unwrap_or_default();
    let is_ip = ipv4_pattern()
        .captures(&host)
        .is_some_and(|c| (1..=4).all(|i| c[i].parse::<u32>().is_ok_and(|o| o <= 255)));
    let bare = host.strip_prefix("www.").unwrap_or(&host);

    let mut hits = Vec::new();
    if is_ip {
        hits.push(Feature::HavingIpAddress);
    }
    if url.contains('@') {
        hits.push(Feature::HavingAtSymbol);
    }
    if url.rfind("//").is_some_and(|b| url[..b].chars().count() > 7) {
        hits.push(Feature::DoubleSlashRedirecting);
    }
    if !is_ip {
        let registrable = registrable_domain(&host, lists);
        if registrable.contains('-') {
            hits.push(Feature::PrefixSuffix);
        }
        let labels = bare.split('.').filter(|l| !l.is_empty()).count();
        let owner = registrable_domain(bare, lists).split('.').count();
        if labels.saturating_sub(owner) > 2 {
            hits.push(Feature::HavingSubDomain);
        }
    }
    if lists.is_shortener(bare) {
        hits.push(Feature::ShorteningService);
    }
    if host.contains("https") {
        hits.push(Feature::HttpsToken);
    }
    hits
}

/// Counts, per targetable feature, the URLs whose raw string shows the
/// feature's pattern.
pub fn feature_report(urls: &[String]) -> FeatureReport {
    let lists = LexicalLists::global();
    let mut counts: BTreeMap<Feature, usize> = TARGETABLE.iter().map(|&f| (f, 0)).collect();
    for url in urls {
        for f in triggered(url, lists) {
            *counts.entry(f).or_default() += 1;
        }
    }
    FeatureReport {
        total: urls.len(),
        counts,
    }
}

fn feature_variant(rng: &mut ChaCha8Rng, feature: Feature, brand_host: &str, domain_base: &str) -> String {
    let (_, brand, suffix) = split_brand(brand_host);
    let word = pick(rng, SECURITY_WORDS);
    let tag = token(rng, 5);
    match feature {
        Feature::HavingIpAddress => format!("http://{}/{brand}/{word}-{tag}", random_ipv4(rng)),
        Feature::HavingAtSymbol => format!("https://{brand}.{suffix}@{word}-{tag}.{domain_base}/"),
        Feature::DoubleSlashRedirecting => {
            format!("http://{word}-{tag}.{domain_base}//{brand}.{suffix}/{word}")
        }
        Feature::PrefixSuffix => format!("https://{brand}-{word}{}.{suffix}/{tag}", rng.gen_range(0..100)),
        Feature::HavingSubDomain => {
            format!("https://{brand}.{word}.{tag}.{}.{domain_base}/", pick(rng, SECURITY_WORDS))
        }
        Feature::ShorteningService => {
            let hosts = LexicalLists::global().shorteners();
            format!("https://{}/{}", pick(rng, &hosts), token(rng, 7))
        }
        Feature::HttpsToken => format!("http://https-{brand}-{tag}.{suffix}/{word}"),
        other => unreachable!("{other} is not targetable"),
    }
}

/// Output of [`generate_feature_rich_domains`].
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FeatureRichOutput {
    /// Shuffled phishing-style variants.
    pub phishing: Vec<String>,
    /// Matching legitimate URL for each entry of `phishing`.
    pub legitimate: Vec<String>,
    pub report: FeatureReport,
}

/// For each requested feature, `cfg.per_feature_target` unique variants
/// that trigger it, shuffled by seed, plus a per-feature report.
pub fn generate_feature_rich_domains(cfg: &GenerationConfig, features: &[Feature]) -> Result<FeatureRichOutput> {
    if cfg.per_feature_target == 0 {
        return Err(Error::InvalidConfig("per-feature target must be at least 1".into()));
    }
    if let Some(f) = features.iter().find(|f| !TARGETABLE.contains(f)) {
        return Err(Error::InvalidConfig(format!("feature {f} cannot be targeted")));
    }
    let lists = LexicalLists::global();
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let brands: Vec<String> = if cfg.legit_urls.is_empty() {
        BRANDS.iter().map(|b| format!("{b}.com")).collect()
    } else {
        cfg.legit_urls
            .iter()
            .map(|u| parse_url(u).map(|p| p.host))
            .collect::<Result<_>>()?
    };

    let mut pairs: Vec<(String, String)> = Vec::new();
    let mut seen = HashSet::new();
    for &feature in features {
        let budget = 100 * cfg.per_feature_target;
        let mut made = 0;
        let mut attempts = 0;
        while made < cfg.per_feature_target {
            if attempts == budget {
                return Err(Error::ExhaustedRuleSpace {
                    requested: cfg.per_feature_target,
                    produced: made,
                    attempts,
                });
            }
            attempts += 1;
            let brand_host = &brands[rng.gen_range(0..brands.len())];
            let candidate = feature_variant(&mut rng, feature, brand_host, &cfg.domain_base);
            if parse_url(&candidate).is_err() || !triggered(&candidate, lists).contains(&feature) {
                continue;
            }
            if seen.insert(url_hash(&candidate)) {
                pairs.push((candidate, format!("https://{brand_host}/")));
                made += 1;
            }
        }
    }
    pairs.shuffle(&mut rng);
    let (phishing, legitimate): (Vec<String>, Vec<String>) = pairs.into_iter().unzip();
    let report = feature_report(&phishing);
    Ok(FeatureRichOutput {
        phishing,
        legitimate,
        report,
    })
}
