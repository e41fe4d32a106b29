use super::{UsageSample, VocabEntry};
use serde::{Deserialize, Serialize};
use std::collections::HashSet;
use std::fmt;
use std::sync::Arc;

/// Decides whether a usage is written in the target language.
pub trait LanguageDetector: Send + Sync {
    fn is_target_language(&self, tokens: &[&str]) -> bool;
}

/// Accepts every usage. Used when no wordlist is configured.
#[derive(Clone, Copy, Debug, Default)]
pub struct AcceptAllLanguage;

impl LanguageDetector for AcceptAllLanguage {
    fn is_target_language(&self, _tokens: &[&str]) -> bool {
        true
    }
}

/// Flags a usage when fewer than `min_fraction` of its tokens are in the wordlist.
#[derive(Clone, Debug)]
pub struct WordlistDetector {
    words: HashSet<String>,
    min_fraction: f64,
}

impl WordlistDetector {
    pub const DEFAULT_MIN_FRACTION: f64 = 0.05;

    pub fn new(words: impl IntoIterator<Item = String>) -> Self {
        WordlistDetector {
            words: words.into_iter().map(|w| w.to_lowercase()).collect(),
            min_fraction: Self::DEFAULT_MIN_FRACTION,
        }
    }

    pub fn with_min_fraction(mut self, min_fraction: f64) -> Self {
        self.min_fraction = min_fraction;
        self
    }

    /// One word per line; blank lines and `#` comments skipped.
    pub fn from_text(text: &str) -> Self {
        Self::new(
            text.lines()
                .map(str::trim)
                .filter(|l| !l.is_empty() && !l.starts_with('#'))
                .map(str::to_owned),
        )
    }
}

impl LanguageDetector for WordlistDetector {
    fn is_target_language(&self, tokens: &[&str]) -> bool {
        if tokens.is_empty() {
            return false;
        }
        let known = tokens
            .iter()
            .filter(|t| self.words.contains(&t.to_lowercase()))
            .count();
        known as f64 / tokens.len() as f64 >= self.min_fraction
    }
}

/// Supplies a POS tag for lemmas whose vocabulary entry has none.
pub trait PosTagger: Send + Sync {
    fn tag(&self, lemma: &str, usages: &[UsageSample]) -> Option<String>;
}

/// Never tags anything; the POS rule is then skipped (degraded mode).
#[derive(Clone, Copy, Debug, Default)]
pub struct NoTagger;

impl PosTagger for NoTagger {
    fn tag(&self, _lemma: &str, _usages: &[UsageSample]) -> Option<String> {
        None
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum PosClass {
    Noun,
    ProperNoun,
    Verb,
    Adjective,
    Other,
}

impl PosClass {
    /// Coarse class of an STTS, Universal Dependencies or Penn tag.
    pub fn of_tag(tag: &str) -> PosClass {
        let upper = tag.trim().to_ascii_uppercase();
        match upper.as_str() {
            "NE" | "PROPN" | "NNP" | "NNPS" | "PROPER NOUN" | "PROPER_NOUN" => PosClass::ProperNoun,
            "NN" | "NNS" | "NOUN" => PosClass::Noun,
            "VERB" => PosClass::Verb,
            "ADJ" | "ADJECTIVE" => PosClass::Adjective,
            t if t.starts_with("VV") || t.starts_with("VA") || t.starts_with("VM") => PosClass::Verb,
            t if t.starts_with("VB") => PosClass::Verb,
            t if t.starts_with("ADJ") || t.starts_with("JJ") => PosClass::Adjective,
            _ => PosClass::Other,
        }
    }

    pub fn is_content(self) -> bool {
        matches!(self, PosClass::Noun | PosClass::Verb | PosClass::Adjective)
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum RejectReason {
    Pos { tag: String },
    UsageQuality { flagged: usize, total: usize },
    NoUsages,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum FilterVerdict {
    Pass,
    Reject(RejectReason),
}

impl FilterVerdict {
    pub fn passed(&self) -> bool {
        matches!(self, FilterVerdict::Pass)
    }
}

impl fmt::Display for FilterVerdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            FilterVerdict::Pass => f.write_str("pass"),
            FilterVerdict::Reject(RejectReason::Pos { .. }) => f.write_str("reject:pos"),
            FilterVerdict::Reject(RejectReason::UsageQuality { .. }) => f.write_str("reject:usage_quality"),
            FilterVerdict::Reject(RejectReason::NoUsages) => f.write_str("reject:no_usages"),
        }
    }
}

#[derive(Clone)]
pub struct FilterConfig {
    pub pos_rule: bool,
    pub usage_rule: bool,
    /// A usage is flagged when its punctuation-token ratio exceeds this.
    pub max_punctuation_ratio: f64,
    /// A lemma is rejected when its flagged-usage fraction exceeds this.
    pub max_flagged_fraction: f64,
    pub detector: Arc<dyn LanguageDetector>,
    pub tagger: Arc<dyn PosTagger>,
}

impl Default for FilterConfig {
    fn default() -> Self {
        FilterConfig {
            pos_rule: true,
            usage_rule: true,
            max_punctuation_ratio: 0.25,
            max_flagged_fraction: 0.10,
            detector: Arc::new(AcceptAllLanguage),
            tagger: Arc::new(NoTagger),
        }
    }
}

impl fmt::Debug for FilterConfig {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("FilterConfig")
            .field("pos_rule", &self.pos_rule)
            .field("usage_rule", &self.usage_rule)
            .field("max_punctuation_ratio", &self.max_punctuation_ratio)
            .field("max_flagged_fraction", &self.max_flagged_fraction)
            .finish_non_exhaustive()
    }
}

/// A token is punctuation when none of its characters is alphanumeric.
pub(crate) fn is_punctuation(token: &str) -> bool {
    !token.is_empty() && token.chars().all(|c| !c.is_alphanumeric())
}

fn punctuation_ratio(tokens: &[&str]) -> f64 {
    if tokens.is_empty() {
        return 0.0;
    }
    tokens.iter().filter(|t| is_punctuation(t)).count() as f64 / tokens.len() as f64
}

impl FilterConfig {
    pub fn usage_flagged(&self, usage: &UsageSample) -> bool {
        let tokens: Vec<&str> = usage.tokens().collect();
        !self.detector.is_target_language(&tokens) || punctuation_ratio(&tokens) > self.max_punctuation_ratio
    }
}

/// Apply the POS and usage-quality rules to one candidate lemma.
pub fn filter_candidate(
    lemma: &str,
    usages: &[UsageSample],
    vocab: &VocabEntry,
    config: &FilterConfig,
) -> FilterVerdict {
    if config.pos_rule {
        let tag = vocab.pos.clone().or_else(|| config.tagger.tag(lemma, usages));
        if let Some(tag) = tag {
            if !PosClass::of_tag(&tag).is_content() {
                return FilterVerdict::Reject(RejectReason::Pos { tag });
            }
        }
    }
    if config.usage_rule {
        if usages.is_empty() {
            return FilterVerdict::Reject(RejectReason::NoUsages);
        }
        let flagged = usages.iter().filter(|u| config.usage_flagged(u)).count();
        if flagged as f64 / usages.len() as f64 > config.max_flagged_fraction {
            return FilterVerdict::Reject(RejectReason::UsageQuality {
                flagged,
                total: usages.len(),
            });
        }
    }
    FilterVerdict::Pass
}
