//! URL parsing and the 23-feature canonical representation.
//!
//! Eight features are lexical and computed from the URL string alone. The
//! remaining fifteen describe page content or reputation and come from a
//! [`FeatureResolver`]; the offline resolver answers 0 ("unknown") for all of
//! them so that live serving and training on precomputed tables share one
//! code path.

mod lexical;
mod lists;
mod parse;
mod resolver;

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use lexical::{extract_lexical, registrable_domain, subdomain_depth};
pub use lists::LexicalLists;
pub use parse::{parse_url, UrlParts};
pub use resolver::{
    resolve_remaining, AnswerSource, FeatureResolver, OfflineResolver, PrecomputedResolver,
    ResolverAnswer,
};

macro_rules! features {
    ($($variant:ident => $name:literal, $lexical:literal;)*) => {
        /// One of the 23 canonical features, declared in canonical order.
        #[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
        pub enum Feature {
            $(
                #[serde(rename = $name)]
                $variant,
            )*
        }

        impl Feature {
            pub const ALL: [Feature; 23] = [$(Feature::$variant),*];

            pub fn name(self) -> &'static str {
                match self {
                    $(Feature::$variant => $name,)*
                }
            }

            /// Whether the feature is computed from the URL string alone.
            pub fn is_lexical(self) -> bool {
                match self {
                    $(Feature::$variant => $lexical,)*
                }
            }
        }
    };
}

features! {
    AbnormalUrl => "Abnormal_URL", false;
    DnsRecord => "DNSRecord", false;
    GoogleIndex => "Google_Index", false;
    HttpsToken => "HTTPS_token", true;
    Iframe => "Iframe", false;
    LinksInTags => "Links_in_tags", false;
    LinksPointingToPage => "Links_pointing_to_page", false;
    PrefixSuffix => "Prefix_Suffix", true;
    Redirect => "Redirect", false;
    RequestUrl => "Request_URL", false;
    RightClick => "RightClick", false;
    Sfh => "SFH", false;
    ShorteningService => "Shortening_Service", true;
    StatisticalReport => "Statistical_report", false;
    SubmittingToEmail => "Submitting_to_email", false;
    UrlLength => "URL_Length", true;
    UrlOfAnchor => "URL_of_Anchor", false;
    DoubleSlashRedirecting => "double_slash_redirecting", true;
    HavingAtSymbol => "having_At_Symbol", true;
    HavingIpAddress => "having_IP_Address", true;
    HavingSubDomain => "having_Sub_Domain", true;
    OnMouseover => "on_mouseover", false;
    WebTraffic => "web_traffic", false;
}

pub const FEATURE_COUNT: usize = Feature::ALL.len();

impl Feature {
    /// Position in the canonical order.
    pub fn index(self) -> usize {
        Feature::ALL
            .iter()
            .position(|&f| f == self)
            .expect("every feature is listed in ALL")
    }

    /// Every feature except `URL_Length` is ternary.
    pub fn is_ternary(self) -> bool {
        self != Feature::UrlLength
    }

    pub fn lexical() -> impl Iterator<Item = Feature> {
        Feature::ALL.into_iter().filter(|f| f.is_lexical())
    }

    pub fn non_lexical() -> impl Iterator<Item = Feature> {
        Feature::ALL.into_iter().filter(|f| !f.is_lexical())
    }

    /// Canonical names in canonical order.
    pub fn canonical_names() -> Vec<String> {
        Feature::ALL.iter().map(|f| f.name().to_string()).collect()
    }

    /// Short human-readable description of the feature taking `value`,
    /// used for classification rationales.
    pub fn describe(self, value: f64) -> String {
        let on = value > 0.0;
        let unknown = value == 0.0;
        let text = match self {
            Feature::HavingIpAddress if on => "IP address present in host",
            Feature::HavingIpAddress => "host is a domain name",
            Feature::HavingAtSymbol if on => "'@' symbol hides the real destination",
            Feature::HavingAtSymbol => "no '@' symbol in URL",
            Feature::DoubleSlashRedirecting if on => "'//' redirect inside the path",
            Feature::DoubleSlashRedirecting => "no embedded '//' redirect",
            Feature::PrefixSuffix if on => "hyphenated registrable domain",
            Feature::PrefixSuffix => "registrable domain has no hyphen",
            Feature::HavingSubDomain if on => "many nested subdomains",
            Feature::HavingSubDomain if unknown => "several subdomains",
            Feature::HavingSubDomain => "few or no subdomains",
            Feature::ShorteningService if on => "URL shortening service",
            Feature::ShorteningService => "not a shortening service",
            Feature::HttpsToken if on => "'https' token inside the host name",
            Feature::HttpsToken => "no 'https' token in host",
            Feature::UrlLength => return format!("URL length {value}"),
            _ => {
                let state = if on {
                    "phishing-leaning"
                } else if unknown {
                    "unknown/suspicious"
                } else {
                    "legitimate-leaning"
                };
                return format!("{} is {state}", self.name());
            }
        };
        text.to_string()
    }
}

impl fmt::Display for Feature {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Feature {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Feature::ALL
            .into_iter()
            .find(|f| f.name() == s)
            .ok_or_else(|| Error::UnknownFeature(s.to_string()))
    }
}

/// Feature values for one URL. May be partial while extraction is in
/// progress; [`FeatureVector::to_canonical_vector`] requires all 23.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct FeatureVector {
    values: BTreeMap<Feature, f64>,
}

impl FeatureVector {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn set(&mut self, feature: Feature, value: f64) {
        self.values.insert(feature, value);
    }

    pub fn get(&self, feature: Feature) -> Option<f64> {
        self.values.get(&feature).copied()
    }

    pub fn remove(&mut self, feature: Feature) -> Option<f64> {
        self.values.remove(&feature)
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn is_complete(&self) -> bool {
        self.values.len() == FEATURE_COUNT
    }

    pub fn iter(&self) -> impl Iterator<Item = (Feature, f64)> + '_ {
        self.values.iter().map(|(&f, &v)| (f, v))
    }

    /// Values in canonical order. Fails listing every absent feature.
    pub fn to_canonical_vector(&self) -> Result<Vec<f64>> {
        let missing: Vec<String> = Feature::ALL
            .iter()
            .filter(|f| !self.values.contains_key(f))
            .map(|f| f.name().to_string())
            .collect();
        if !missing.is_empty() {
            return Err(Error::MissingFeature(missing));
        }
        Ok(Feature::ALL.iter().map(|f| self.values[f]).collect())
    }

    /// Rebinds a canonical-order sequence to feature names.
    pub fn from_canonical(values: &[f64]) -> Result<Self> {
        if values.len() != FEATURE_COUNT {
            return Err(Error::DimensionMismatch {
                expected: FEATURE_COUNT,
                got: values.len(),
            });
        }
        Ok(Self {
            values: Feature::ALL.iter().copied().zip(values.iter().copied()).collect(),
        })
    }

    /// Name → value map, as served by the `extract_features` tool.
    pub fn to_named_map(&self) -> BTreeMap<String, f64> {
        self.values
            .iter()
            .map(|(f, &v)| (f.name().to_string(), v))
            .collect()
    }
}

/// Free-function form of [`FeatureVector::to_canonical_vector`].
pub fn to_canonical_vector(fv: &FeatureVector) -> Result<Vec<f64>> {
    fv.to_canonical_vector()
}

/// Parses `raw` and extracts the full vector using `resolver` for the
/// non-lexical features.
pub fn extract(raw: &str, resolver: &dyn FeatureResolver) -> Result<FeatureVector> {
    let parts = parse_url(raw)?;
    let lexical = extract_lexical(&parts);
    resolve_remaining(&parts, lexical, resolver)
}

/// [`extract`] with the offline resolver.
pub fn extract_offline(raw: &str) -> Result<FeatureVector> {
    extract(raw, &OfflineResolver)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn canonical_order_starts_and_ends_as_documented() {
        assert_eq!(Feature::ALL[0].name(), "Abnormal_URL");
        assert_eq!(Feature::ALL[22].name(), "web_traffic");
        assert_eq!(Feature::lexical().count(), 8);
        assert_eq!(Feature::non_lexical().count(), 15);
    }

    #[test]
    fn names_round_trip() {
        for f in Feature::ALL {
            assert_eq!(f.name().parse::<Feature>().unwrap(), f);
            assert_eq!(Feature::ALL[f.index()], f);
        }
        assert!("nonexistent".parse::<Feature>().is_err());
    }

    #[test]
    fn missing_feature_is_reported_by_name() {
        let mut fv = FeatureVector::from_canonical(&[0.0; 23]).unwrap();
        fv.remove(Feature::WebTraffic);
        match fv.to_canonical_vector() {
            Err(Error::MissingFeature(names)) => assert_eq!(names, vec!["web_traffic"]),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn canonical_vector_is_deterministic() {
        let fv = extract_offline("http://secure-login.example.com/a").unwrap();
        let a = fv.to_canonical_vector().unwrap();
        let b = fv.to_canonical_vector().unwrap();
        assert_eq!(a.len(), 23);
        assert_eq!(a, b);
    }

    #[test]
    fn serializes_as_named_map() {
        let fv = extract_offline("https://a.com").unwrap();
        let json = serde_json::to_value(&fv).unwrap();
        assert_eq!(json["URL_Length"], 13.0);
        assert_eq!(json.as_object().unwrap().len(), 23);
    }
}
