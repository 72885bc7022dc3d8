//! Session-to-feature-vector pipeline.
//!
//! Twenty feature families describe a session from six angles (user, query,
//! URL, action sequence, timeline, click position). Each family emits
//! discrete tokens; a (family, token) pair maps to one stable 64-bit feature
//! id via namespaced FNV-1a hashing, giving the binary 1-in-N encoding the
//! model consumes without any train/test vocabulary coordination.

mod buckets;
mod extract;
mod stats;

pub use buckets::{bucket, BucketingConfig, ConfigError};
pub use extract::{
    extract_position_features, extract_query_features, extract_sequence_features,
    extract_timeline_features, extract_url_features, extract_user_features,
};
pub use stats::{
    build_corpus_stats, load_corpus_stats, save_corpus_stats, CorpusStats, StatsFormatError,
    SwitchCounts, STATS_FORMAT_VERSION,
};

use std::collections::HashSet;

use crate::logs::Session;
use crate::model::{FeatureId, FeatureVector};

/// The twenty feature families, in canonical order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum FamilyTag {
    UserId,
    UserSwitchRatio,
    QueryId,
    QueryCount,
    QueryDuplicate,
    QueryIdPopularity,
    UrlId,
    QueryUrlIdList,
    UrlPopularity,
    ClickedUrlFiltered,
    ActionSequence,
    Pattern4GramNormed,
    Pattern5GramNormed,
    Pattern6GramNormed,
    Pattern7GramNormed,
    QueryIdTime,
    QueryClickInterval,
    ClickNextQueryInterval,
    ClickPositionCount,
    Mrr,
}

impl FamilyTag {
    pub const ALL: [FamilyTag; 20] = [
        FamilyTag::UserId,
        FamilyTag::UserSwitchRatio,
        FamilyTag::QueryId,
        FamilyTag::QueryCount,
        FamilyTag::QueryDuplicate,
        FamilyTag::QueryIdPopularity,
        FamilyTag::UrlId,
        FamilyTag::QueryUrlIdList,
        FamilyTag::UrlPopularity,
        FamilyTag::ClickedUrlFiltered,
        FamilyTag::ActionSequence,
        FamilyTag::Pattern4GramNormed,
        FamilyTag::Pattern5GramNormed,
        FamilyTag::Pattern6GramNormed,
        FamilyTag::Pattern7GramNormed,
        FamilyTag::QueryIdTime,
        FamilyTag::QueryClickInterval,
        FamilyTag::ClickNextQueryInterval,
        FamilyTag::ClickPositionCount,
        FamilyTag::Mrr,
    ];

    /// Canonical name, also the hash namespace for the family's tokens.
    pub fn name(self) -> &'static str {
        match self {
            FamilyTag::UserId => "UserID",
            FamilyTag::UserSwitchRatio => "User_switch_ratio",
            FamilyTag::QueryId => "QueryID",
            FamilyTag::QueryCount => "Query_Count",
            FamilyTag::QueryDuplicate => "Query_Duplicate",
            FamilyTag::QueryIdPopularity => "QueryID_Popularity",
            FamilyTag::UrlId => "URLID",
            FamilyTag::QueryUrlIdList => "Query_URLid_List",
            FamilyTag::UrlPopularity => "URL_Popularity",
            FamilyTag::ClickedUrlFiltered => "ClickedURL_Filtered",
            FamilyTag::ActionSequence => "Action_Sequence",
            FamilyTag::Pattern4GramNormed => "Pattern_4gram_Normed",
            FamilyTag::Pattern5GramNormed => "Pattern_5gram_Normed",
            FamilyTag::Pattern6GramNormed => "Pattern_6gram_Normed",
            FamilyTag::Pattern7GramNormed => "Pattern_7gram_Normed",
            FamilyTag::QueryIdTime => "QueryID_Time",
            FamilyTag::QueryClickInterval => "Query_Click_Interval",
            FamilyTag::ClickNextQueryInterval => "Click_NextQuery_Interval",
            FamilyTag::ClickPositionCount => "Click_Position_Count",
            FamilyTag::Mrr => "MRR",
        }
    }

    pub fn index(self) -> usize {
        FamilyTag::ALL.iter().position(|t| *t == self).unwrap()
    }
}

impl std::fmt::Display for FamilyTag {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for FamilyTag {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        FamilyTag::ALL
            .iter()
            .find(|t| t.name().eq_ignore_ascii_case(s))
            .copied()
            .ok_or_else(|| format!("unknown feature family {s:?}"))
    }
}

/// One emitted feature: a family plus its discrete token.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FeatureFamily {
    pub tag: FamilyTag,
    pub value: String,
}

impl FeatureFamily {
    pub fn new(tag: FamilyTag, value: impl Into<String>) -> Self {
        FeatureFamily {
            tag,
            value: value.into(),
        }
    }
}

/// Which families to emit; all twenty by default. Used by the ablation
/// workflow to train with and without a candidate family.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct FamilySelection(u32);

impl FamilySelection {
    pub fn all() -> Self {
        FamilySelection((1 << FamilyTag::ALL.len()) - 1)
    }

    pub fn none() -> Self {
        FamilySelection(0)
    }

    pub fn with(mut self, tag: FamilyTag) -> Self {
        self.0 |= 1 << tag.index();
        self
    }

    pub fn without(mut self, tag: FamilyTag) -> Self {
        self.0 &= !(1 << tag.index());
        self
    }

    pub fn contains(self, tag: FamilyTag) -> bool {
        self.0 & (1 << tag.index()) != 0
    }
}

impl FromIterator<FamilyTag> for FamilySelection {
    fn from_iter<I: IntoIterator<Item = FamilyTag>>(iter: I) -> Self {
        iter.into_iter()
            .fold(FamilySelection::none(), FamilySelection::with)
    }
}

impl Default for FamilySelection {
    fn default() -> Self {
        FamilySelection::all()
    }
}

/// Deterministic 64-bit id for a (family, token) pair: FNV-1a over the
/// family name, a 0x1f separator byte, then the token bytes. Fixed constants
/// (offset 0xcbf29ce484222325, prime 0x100000001b3) make ids stable across
/// runs and platforms.
pub fn feature_id(tag: FamilyTag, value: &str) -> FeatureId {
    const OFFSET: u64 = 0xcbf2_9ce4_8422_2325;
    const PRIME: u64 = 0x0000_0100_0000_01b3;
    let mut hash = OFFSET;
    for byte in tag
        .name()
        .bytes()
        .chain(std::iter::once(0x1f))
        .chain(value.bytes())
    {
        hash ^= u64::from(byte);
        hash = hash.wrapping_mul(PRIME);
    }
    FeatureId(hash)
}

/// Hashes families into a sparse binary vector, de-duplicating repeated
/// (family, token) pairs while keeping first-occurrence order.
pub fn encode(features: &[FeatureFamily]) -> FeatureVector {
    let mut seen = HashSet::with_capacity(features.len());
    let mut ids = Vec::with_capacity(features.len());
    for f in features {
        let id = feature_id(f.tag, &f.value);
        if seen.insert(id) {
            ids.push(id);
        }
    }
    FeatureVector::new(ids).expect("hash-deduplicated ids cannot repeat")
}

/// Extraction settings beyond the bucket edges.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ExtractorConfig {
    /// Only the top K shown results per query emit URL-level tokens.
    pub top_k_urls: usize,
    /// When false (the default), switch records contribute nothing — the
    /// test-period view of a session. When true, `S` letters appear in the
    /// action sequence.
    pub include_switch_events: bool,
    pub selection: FamilySelection,
}

impl Default for ExtractorConfig {
    fn default() -> Self {
        ExtractorConfig {
            top_k_urls: 10,
            include_switch_events: false,
            selection: FamilySelection::all(),
        }
    }
}

/// Everything produced by extracting one session.
#[derive(Debug, Clone, PartialEq)]
pub struct Extraction {
    pub features: Vec<FeatureFamily>,
    /// Clicks whose url id was not in the owning SERP's shown list (skipped
    /// by position features).
    pub skipped_clicks: u32,
}

/// Runs all (selected) family extractors against sessions, sharing the
/// corpus stats and bucket config.
#[derive(Debug, Clone, Copy)]
pub struct FeatureExtractor<'a> {
    pub stats: &'a CorpusStats,
    pub buckets: &'a BucketingConfig,
    pub config: ExtractorConfig,
}

impl<'a> FeatureExtractor<'a> {
    pub fn new(stats: &'a CorpusStats, buckets: &'a BucketingConfig) -> Self {
        FeatureExtractor {
            stats,
            buckets,
            config: ExtractorConfig::default(),
        }
    }

    pub fn with_config(mut self, config: ExtractorConfig) -> Self {
        self.config = config;
        self
    }

    /// All selected feature families for one session, in canonical
    /// extractor order (user, query, url, sequence, timeline, position).
    pub fn extract(&self, session: &Session) -> Extraction {
        let mut features = extract_user_features(session, self.stats, self.buckets);
        features.extend(extract_query_features(session, self.stats, self.buckets));
        features.extend(extract_url_features(
            session,
            self.stats,
            self.buckets,
            self.config.top_k_urls,
        ));
        features.extend(extract_sequence_features(
            session,
            self.config.include_switch_events,
        ));
        features.extend(extract_timeline_features(session, self.buckets));
        let (position, skipped_clicks) = extract_position_features(session, self.buckets);
        features.extend(position);
        if self.config.selection != FamilySelection::all() {
            features.retain(|f| self.config.selection.contains(f.tag));
        }
        Extraction {
            features,
            skipped_clicks,
        }
    }

    /// Extract and hash-encode in one step.
    pub fn encode(&self, session: &Session) -> FeatureVector {
        encode(&self.extract(session).features)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fnv_reference_vector() {
        // FNV-1a of the empty input is the offset basis; of "a" is the
        // published test vector.
        const OFFSET: u64 = 0xcbf2_9ce4_8422_2325;
        const PRIME: u64 = 0x0000_0100_0000_01b3;
        let mut h = OFFSET;
        h ^= u64::from(b'a');
        h = h.wrapping_mul(PRIME);
        assert_eq!(h, 0xaf63_dc4c_8601_ec8c);
    }

    #[test]
    fn encode_dedups_and_namespaces() {
        let fs = vec![
            FeatureFamily::new(FamilyTag::UserId, "7"),
            FeatureFamily::new(FamilyTag::UserId, "7"),
            FeatureFamily::new(FamilyTag::QueryId, "7"),
        ];
        let x = encode(&fs);
        assert_eq!(x.len(), 2);
        assert_ne!(x.ids()[0], x.ids()[1]);
    }

    #[test]
    fn feature_ids_are_stable() {
        // Pinned: a changed hash would silently orphan every saved model.
        assert_eq!(feature_id(FamilyTag::UserId, "7").0, 0x9326_00d8_004f_9a35);
    }

    #[test]
    fn family_names_round_trip() {
        for tag in FamilyTag::ALL {
            let parsed: FamilyTag = tag.name().parse().unwrap();
            assert_eq!(parsed, tag);
        }
        assert!("NotAFamily".parse::<FamilyTag>().is_err());
    }

    #[test]
    fn selection_set_operations() {
        let sel = FamilySelection::none()
            .with(FamilyTag::UserId)
            .with(FamilyTag::Mrr);
        assert!(sel.contains(FamilyTag::UserId));
        assert!(sel.contains(FamilyTag::Mrr));
        assert!(!sel.contains(FamilyTag::QueryId));
        assert!(!sel.without(FamilyTag::Mrr).contains(FamilyTag::Mrr));
        assert_eq!(
            FamilySelection::all(),
            FamilyTag::ALL.into_iter().collect()
        );
    }
}
