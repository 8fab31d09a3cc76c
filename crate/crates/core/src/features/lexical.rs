use super::{Feature, FeatureVector, LexicalLists, UrlParts};

fn ternary(flag: bool) -> f64 {
    if flag {
        1.0
    } else {
        -1.0
    }
}

/// Dotted-quad (decimal or `0x` hex octets) IPv4 host.
pub(crate) fn is_ipv4_host(host: &str) -> bool {
    let octets: Vec<&str> = host.split('.').collect();
    octets.len() == 4
        && octets.iter().all(|o| {
            if let Some(hex) = o.strip_prefix("0x").or_else(|| o.strip_prefix("0X")) {
                !hex.is_empty() && u32::from_str_radix(hex, 16).is_ok_and(|v| v <= 255)
            } else {
                !o.is_empty()
                    && o.len() <= 3
                    && o.bytes().all(|b| b.is_ascii_digit())
                    && o.parse::<u32>().is_ok_and(|v| v <= 255)
            }
        })
}

fn strip_www(host: &str) -> &str {
    host.strip_prefix("www.").unwrap_or(host)
}

/// Number of labels belonging to the public suffix of `labels`.
fn suffix_len(labels: &[&str], lists: &LexicalLists) -> usize {
    // Longest matching suffix that still leaves one label for the owner.
    (1..labels.len())
        .rev()
        .find(|&n| lists.is_suffix(&labels[labels.len() - n..].join(".")))
        .unwrap_or(1)
}

/// Registrable domain of `host`: one label plus its public suffix. IP hosts
/// and single-label hosts are returned unchanged.
pub fn registrable_domain(host: &str, lists: &LexicalLists) -> String {
    if is_ipv4_host(host) || host.starts_with('[') {
        return host.to_string();
    }
    let labels: Vec<&str> = host.split('.').filter(|l| !l.is_empty()).collect();
    if labels.len() <= 1 {
        return host.to_string();
    }
    let keep = (suffix_len(&labels, lists) + 1).min(labels.len());
    labels[labels.len() - keep..].join(".")
}

/// Subdomain labels left of the registrable domain, after removing a
/// leading `www.`.
pub fn subdomain_depth(host: &str, lists: &LexicalLists) -> usize {
    if is_ipv4_host(host) || host.starts_with('[') {
        return 0;
    }
    let host = strip_www(host);
    let labels = host.split('.').filter(|l| !l.is_empty()).count();
    let registrable = registrable_domain(host, lists)
        .split('.')
        .filter(|l| !l.is_empty())
        .count();
    labels.saturating_sub(registrable)
}

fn double_slash_after_scheme(raw: &str) -> bool {
    raw.rfind("//")
        .map(|byte| raw[..byte].chars().count())
        .is_some_and(|pos| pos > 7)
}

/// Fills the eight lexical features from the URL string.
pub fn extract_lexical(parts: &UrlParts) -> FeatureVector {
    extract_lexical_with(parts, LexicalLists::global())
}

pub(crate) fn extract_lexical_with(parts: &UrlParts, lists: &LexicalLists) -> FeatureVector {
    let host = parts.host.as_str();
    let raw = parts.raw.as_str();
    let mut fv = FeatureVector::new();

    fv.set(Feature::UrlLength, raw.chars().count() as f64);
    fv.set(Feature::HavingIpAddress, ternary(is_ipv4_host(host)));
    fv.set(Feature::HavingAtSymbol, ternary(raw.contains('@')));
    fv.set(
        Feature::DoubleSlashRedirecting,
        ternary(double_slash_after_scheme(raw)),
    );
    fv.set(
        Feature::PrefixSuffix,
        ternary(registrable_domain(host, lists).contains('-')),
    );
    let depth = subdomain_depth(host, lists);
    fv.set(
        Feature::HavingSubDomain,
        match depth {
            0 | 1 => -1.0,
            2 => 0.0,
            _ => 1.0,
        },
    );
    fv.set(
        Feature::ShorteningService,
        ternary(lists.is_shortener(strip_www(host))),
    );
    fv.set(Feature::HttpsToken, ternary(host.contains("https")));
    fv
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::features::parse_url;

    fn lex(raw: &str) -> FeatureVector {
        extract_lexical(&parse_url(raw).unwrap())
    }

    #[test]
    fn ip_host_is_flagged() {
        assert_eq!(lex("http://192.168.1.1/login").get(Feature::HavingIpAddress), Some(1.0));
        assert_eq!(lex("http://0x7f.0x0.0x0.0x1/").get(Feature::HavingIpAddress), Some(1.0));
        assert_eq!(lex("http://a.com/").get(Feature::HavingIpAddress), Some(-1.0));
        assert!(!is_ipv4_host("1.2.3.256"));
        assert!(!is_ipv4_host("1.2.3"));
    }

    #[test]
    fn length_and_at_symbol() {
        let fv = lex("https://a.com");
        assert_eq!(fv.get(Feature::UrlLength), Some(13.0));
        assert_eq!(fv.get(Feature::HavingAtSymbol), Some(-1.0));
        assert_eq!(lex("http://a.com@b.net").get(Feature::HavingAtSymbol), Some(1.0));
    }

    #[test]
    fn hyphen_in_registrable_domain() {
        assert_eq!(
            lex("http://secure-login.example.com").get(Feature::PrefixSuffix),
            Some(-1.0),
            "hyphen only in a subdomain label"
        );
        assert_eq!(lex("http://secure-example.com").get(Feature::PrefixSuffix), Some(1.0));
        assert_eq!(lex("http://login.pay-pal.co.uk").get(Feature::PrefixSuffix), Some(1.0));
    }

    #[test]
    fn subdomain_depth_bands() {
        let lists = LexicalLists::global();
        assert_eq!(subdomain_depth("www.example.com", lists), 0);
        assert_eq!(subdomain_depth("mail.example.co.uk", lists), 1);
        assert_eq!(lex("http://mail.example.com").get(Feature::HavingSubDomain), Some(-1.0));
        assert_eq!(lex("http://a.b.example.com").get(Feature::HavingSubDomain), Some(0.0));
        assert_eq!(lex("http://a.b.c.example.com").get(Feature::HavingSubDomain), Some(1.0));
        assert_eq!(registrable_domain("x.y.unknowntld", lists), "y.unknowntld");
    }

    #[test]
    fn double_slash_position() {
        assert_eq!(lex("https://a.com/x").get(Feature::DoubleSlashRedirecting), Some(-1.0));
        assert_eq!(
            lex("http://a.com//http://b.com").get(Feature::DoubleSlashRedirecting),
            Some(1.0)
        );
        assert_eq!(lex("a.com//x").get(Feature::DoubleSlashRedirecting), Some(-1.0));
    }

    #[test]
    fn shortener_and_https_token() {
        assert_eq!(lex("https://bit.ly/abc").get(Feature::ShorteningService), Some(1.0));
        assert_eq!(lex("https://www.bit.ly/abc").get(Feature::ShorteningService), Some(1.0));
        assert_eq!(lex("https://notbit.ly/abc").get(Feature::ShorteningService), Some(-1.0));
        assert_eq!(lex("http://https-paypal.com").get(Feature::HttpsToken), Some(1.0));
        assert_eq!(lex("https://paypal.com").get(Feature::HttpsToken), Some(-1.0));
    }

    #[test]
    fn exactly_the_lexical_subset_is_filled() {
        let fv = lex("http://example.com");
        assert_eq!(fv.len(), 8);
        assert!(fv.iter().all(|(f, _)| f.is_lexical()));
    }
}
