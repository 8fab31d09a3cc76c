use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use super::{Feature, FeatureVector, UrlParts};
use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AnswerSource {
    OfflineDefault,
    Precomputed,
    External,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ResolverAnswer {
    pub feature: Feature,
    pub value: f64,
    pub source: AnswerSource,
}

impl ResolverAnswer {
    pub fn offline(feature: Feature) -> Self {
        Self {
            feature,
            value: 0.0,
            source: AnswerSource::OfflineDefault,
        }
    }
}

/// Source of content and reputation features.
pub trait FeatureResolver {
    /// Answer for one non-lexical feature. An `Err` carries the reason.
    fn resolve(&self, parts: &UrlParts, feature: Feature) -> std::result::Result<ResolverAnswer, String>;

    /// Whether one instance may serve concurrent callers.
    fn shareable(&self) -> bool {
        false
    }
}

/// Answers 0 ("unknown") for everything.
#[derive(Clone, Copy, Debug, Default)]
pub struct OfflineResolver;

impl FeatureResolver for OfflineResolver {
    fn resolve(&self, _parts: &UrlParts, feature: Feature) -> std::result::Result<ResolverAnswer, String> {
        Ok(ResolverAnswer::offline(feature))
    }

    fn shareable(&self) -> bool {
        true
    }
}

/// Looks up feature rows keyed by the URL's normalized form, falling back to
/// the offline default for unknown URLs or features.
#[derive(Clone, Debug, Default)]
pub struct PrecomputedResolver {
    rows: HashMap<String, FeatureVector>,
}

impl PrecomputedResolver {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn insert(&mut self, parts: &UrlParts, values: FeatureVector) {
        self.rows.insert(parts.normalized(), values);
    }
}

impl FeatureResolver for PrecomputedResolver {
    fn resolve(&self, parts: &UrlParts, feature: Feature) -> std::result::Result<ResolverAnswer, String> {
        Ok(self
            .rows
            .get(&parts.normalized())
            .and_then(|row| row.get(feature))
            .map(|value| ResolverAnswer {
                feature,
                value,
                source: AnswerSource::Precomputed,
            })
            .unwrap_or_else(|| ResolverAnswer::offline(feature)))
    }

    fn shareable(&self) -> bool {
        true
    }
}

/// Completes a lexical vector with the fifteen non-lexical features.
pub fn resolve_remaining(
    parts: &UrlParts,
    mut lexical: FeatureVector,
    resolver: &dyn FeatureResolver,
) -> Result<FeatureVector> {
    for feature in Feature::non_lexical() {
        let answer = resolver
            .resolve(parts, feature)
            .map_err(|reason| Error::ResolverFailure {
                feature: feature.name().to_string(),
                reason,
            })?;
        if answer.feature != feature {
            return Err(Error::ResolverFailure {
                feature: feature.name().to_string(),
                reason: format!("answered for {} instead", answer.feature),
            });
        }
        if ![-1.0, 0.0, 1.0].contains(&answer.value) {
            return Err(Error::ResolverFailure {
                feature: feature.name().to_string(),
                reason: format!("value {} outside {{-1, 0, 1}}", answer.value),
            });
        }
        lexical.set(feature, answer.value);
    }
    Ok(lexical)
}
