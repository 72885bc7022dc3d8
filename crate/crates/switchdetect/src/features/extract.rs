//! The per-category feature extractors. Each one is a pure function of a
//! session (plus frozen corpus stats / bucket edges) and emits tokens for
//! its families; hashing and de-duplication happen later in `encode`.

use std::collections::HashMap;

use crate::logs::{QueryEvent, Session, SessionEvent, SwitchType};

use super::buckets::BucketingConfig;
use super::stats::CorpusStats;
use super::{FamilyTag, FeatureFamily};

/// Count tokens saturate here so the token vocabulary stays bounded.
const COUNT_CAP: u64 = 100;
/// Action sequences longer than this keep only their head and tail.
const ACTION_SEQUENCE_CAP: usize = 50;
/// Within-session n-gram frequencies are bucketed into this many equal bins.
const NGRAM_FREQ_BINS: usize = 8;

fn capped(n: u64) -> String {
    n.min(COUNT_CAP).to_string()
}

/// UserID plus the user's historical switch ratio per switch type (P, B, H),
/// bucketed. Users absent from the stats emit explicit "unknown" ratios.
pub fn extract_user_features(
    session: &Session,
    stats: &CorpusStats,
    buckets: &BucketingConfig,
) -> Vec<FeatureFamily> {
    let mut out = vec![FeatureFamily::new(
        FamilyTag::UserId,
        session.user_id.to_string(),
    )];
    for st in [SwitchType::P, SwitchType::B, SwitchType::H] {
        let value = match stats.user_counts(session.user_id) {
            Some(counts) => format!("{st}:{}", buckets.ratio_bucket(counts.ratio(st))),
            None => format!("{st}:unknown"),
        };
        out.push(FeatureFamily::new(FamilyTag::UserSwitchRatio, value));
    }
    out
}

/// QueryID per query, session query count, the maximum repeat count of any
/// query id, and per-query corpus popularity buckets.
pub fn extract_query_features(
    session: &Session,
    stats: &CorpusStats,
    buckets: &BucketingConfig,
) -> Vec<FeatureFamily> {
    let mut out = Vec::new();
    let mut repeats: HashMap<u64, u64> = HashMap::new();
    let mut query_count = 0u64;
    for q in session.queries() {
        query_count += 1;
        *repeats.entry(q.query_id).or_default() += 1;
        out.push(FeatureFamily::new(
            FamilyTag::QueryId,
            q.query_id.to_string(),
        ));
        let popularity = match stats.query_count(q.query_id) {
            0 => "unknown".to_string(),
            n => buckets.popularity_bucket(n).to_string(),
        };
        out.push(FeatureFamily::new(FamilyTag::QueryIdPopularity, popularity));
    }
    out.push(FeatureFamily::new(FamilyTag::QueryCount, capped(query_count)));
    let max_dup = repeats.values().copied().max().unwrap_or(0);
    out.push(FeatureFamily::new(FamilyTag::QueryDuplicate, capped(max_dup)));
    out
}

/// Shown-URL identity, (query, url, position) composition, shown-URL corpus
/// popularity, and clicked-URL identity. URL-level tokens only cover the top
/// `top_k` positions of each result list.
pub fn extract_url_features(
    session: &Session,
    stats: &CorpusStats,
    buckets: &BucketingConfig,
    top_k: usize,
) -> Vec<FeatureFamily> {
    let mut out = Vec::new();
    for q in session.queries() {
        for (i, url) in q.urls.iter().take(top_k).enumerate() {
            out.push(FeatureFamily::new(FamilyTag::UrlId, url.to_string()));
            out.push(FeatureFamily::new(
                FamilyTag::QueryUrlIdList,
                format!("{}:{}:{}", q.query_id, url, i + 1),
            ));
            let popularity = match stats.url_count(*url) {
                0 => "unknown".to_string(),
                n => buckets.popularity_bucket(n).to_string(),
            };
            out.push(FeatureFamily::new(FamilyTag::UrlPopularity, popularity));
        }
    }
    for c in session.clicks() {
        out.push(FeatureFamily::new(
            FamilyTag::ClickedUrlFiltered,
            c.url_id.to_string(),
        ));
    }
    out
}

/// The session's action-type string. Starts with `M` for the metadata
/// record, then one letter per event in time order; switch events only
/// appear when `include_switch_events` is set.
pub fn action_sequence(session: &Session, include_switch_events: bool) -> String {
    let mut s = String::with_capacity(session.events.len() + 1);
    s.push('M');
    for event in &session.events {
        if matches!(event, SessionEvent::Switch(_)) && !include_switch_events {
            continue;
        }
        s.push(event.type_letter());
    }
    s
}

fn cap_action_sequence(s: &str) -> String {
    if s.len() <= ACTION_SEQUENCE_CAP {
        return s.to_string();
    }
    let half = ACTION_SEQUENCE_CAP / 2;
    format!("{}|{}", &s[..half], &s[s.len() - half..])
}

/// Full action sequence (length-capped) plus contiguous n-grams (n = 4..=7)
/// tokenised together with their within-session frequency bucket. N-grams
/// come from the uncapped string; the cap only bounds the sequence token
/// vocabulary itself.
pub fn extract_sequence_features(
    session: &Session,
    include_switch_events: bool,
) -> Vec<FeatureFamily> {
    let seq = action_sequence(session, include_switch_events);
    let mut out = vec![FeatureFamily::new(
        FamilyTag::ActionSequence,
        cap_action_sequence(&seq),
    )];
    let chars: Vec<char> = seq.chars().collect();
    for (n, tag) in [
        (4, FamilyTag::Pattern4GramNormed),
        (5, FamilyTag::Pattern5GramNormed),
        (6, FamilyTag::Pattern6GramNormed),
        (7, FamilyTag::Pattern7GramNormed),
    ] {
        if chars.len() < n {
            continue;
        }
        let total = chars.len() - n + 1;
        let mut counts: HashMap<&[char], usize> = HashMap::new();
        for gram in chars.windows(n) {
            *counts.entry(gram).or_default() += 1;
        }
        // iterate grams in string order so output order is deterministic
        for gram in chars.windows(n) {
            let freq = counts[gram] as f64 / total as f64;
            let bin = ((freq * NGRAM_FREQ_BINS as f64) as usize).min(NGRAM_FREQ_BINS - 1);
            let gram: String = gram.iter().collect();
            out.push(FeatureFamily::new(tag, format!("{gram}:{bin}")));
        }
    }
    out
}

/// Query start-time buckets, query-to-first-click intervals per SERP, and
/// last-click-to-next-query intervals per adjacent query pair.
pub fn extract_timeline_features(
    session: &Session,
    buckets: &BucketingConfig,
) -> Vec<FeatureFamily> {
    let mut out = Vec::new();
    let queries: Vec<&QueryEvent> = session.queries().collect();
    for q in &queries {
        out.push(FeatureFamily::new(
            FamilyTag::QueryIdTime,
            buckets.time_bucket(q.time_passed).to_string(),
        ));
        let first_click = session
            .clicks()
            .filter(|c| c.serp_id == q.serp_id)
            .map(|c| c.time_passed)
            .min();
        if let Some(t) = first_click {
            out.push(FeatureFamily::new(
                FamilyTag::QueryClickInterval,
                buckets
                    .interval_bucket(t.saturating_sub(q.time_passed))
                    .to_string(),
            ));
        }
    }
    for pair in queries.windows(2) {
        let (prev, next) = (pair[0], pair[1]);
        let last_click = session
            .clicks()
            .filter(|c| c.serp_id == prev.serp_id && c.time_passed < next.time_passed)
            .map(|c| c.time_passed)
            .max();
        if let Some(t) = last_click {
            out.push(FeatureFamily::new(
                FamilyTag::ClickNextQueryInterval,
                buckets
                    .interval_bucket(next.time_passed.saturating_sub(t))
                    .to_string(),
            ));
        }
    }
    out
}

/// Per-query count of clicks landing on positions 5..=10, and the session's
/// mean reciprocal clicked position (bucketed). Positions are 1-based within
/// the owning SERP's shown list; clicks on URLs absent from that list are
/// skipped and counted.
pub fn extract_position_features(
    session: &Session,
    buckets: &BucketingConfig,
) -> (Vec<FeatureFamily>, u32) {
    let mut out = Vec::new();
    let mut skipped = 0u32;
    let mut reciprocal_sum = 0.0;
    let mut click_count = 0u64;

    // first query event per SERP defines its shown list
    let mut serp_urls: HashMap<u64, &[u64]> = HashMap::new();
    let queries: Vec<&QueryEvent> = session.queries().collect();
    for q in &queries {
        serp_urls.entry(q.serp_id).or_insert(&q.urls);
    }

    let mut deep_clicks: HashMap<u64, u64> = HashMap::new();
    for c in session.clicks() {
        let position = serp_urls
            .get(&c.serp_id)
            .and_then(|urls| urls.iter().position(|u| *u == c.url_id));
        match position {
            Some(p) => {
                let position = p as u64 + 1;
                if (5..=10).contains(&position) {
                    *deep_clicks.entry(c.serp_id).or_default() += 1;
                }
                reciprocal_sum += 1.0 / position as f64;
                click_count += 1;
            }
            None => skipped += 1,
        }
    }

    for q in &queries {
        let count = deep_clicks.get(&q.serp_id).copied().unwrap_or(0);
        out.push(FeatureFamily::new(
            FamilyTag::ClickPositionCount,
            capped(count),
        ));
    }
    let mrr = if click_count == 0 {
        "no-click".to_string()
    } else {
        buckets
            .ratio_bucket(reciprocal_sum / click_count as f64)
            .to_string()
    };
    out.push(FeatureFamily::new(FamilyTag::Mrr, mrr));
    (out, skipped)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::logs::{ClickEvent, SwitchEvent};

    fn query(t: u64, serp: u64, qid: u64, urls: &[u64]) -> SessionEvent {
        SessionEvent::Query(QueryEvent {
            time_passed: t,
            serp_id: serp,
            query_id: qid,
            urls: urls.to_vec(),
        })
    }

    fn click(t: u64, serp: u64, url: u64) -> SessionEvent {
        SessionEvent::Click(ClickEvent {
            time_passed: t,
            serp_id: serp,
            url_id: url,
        })
    }

    fn session(events: Vec<SessionEvent>) -> Session {
        Session {
            session_id: 1,
            day: 1,
            user_id: 7,
            switch_type: SwitchType::N,
            events,
            unmatched_clicks: 0,
        }
    }

    fn values(features: &[FeatureFamily], tag: FamilyTag) -> Vec<&str> {
        features
            .iter()
            .filter(|f| f.tag == tag)
            .map(|f| f.value.as_str())
            .collect()
    }

    #[test]
    fn user_features_with_history_and_unknown() {
        use crate::features::build_corpus_stats;
        let history = vec![
            session(vec![]),
            session(vec![]),
            Session {
                switch_type: SwitchType::B,
                ..session(vec![])
            },
        ];
        let stats = build_corpus_stats(&history);
        let buckets = BucketingConfig::default();

        let fs = extract_user_features(&session(vec![]), &stats, &buckets);
        assert_eq!(values(&fs, FamilyTag::UserId), ["7"]);
        // ratio(B) = 1/3 -> bucket 3; P and H are 0 -> bucket 0
        assert_eq!(
            values(&fs, FamilyTag::UserSwitchRatio),
            ["P:0", "B:3", "H:0"]
        );

        let mut unseen = session(vec![]);
        unseen.user_id = 99;
        let fs = extract_user_features(&unseen, &stats, &buckets);
        assert_eq!(
            values(&fs, FamilyTag::UserSwitchRatio),
            ["P:unknown", "B:unknown", "H:unknown"]
        );
    }

    #[test]
    fn query_count_and_duplicate() {
        let s = session(vec![
            query(0, 1, 10, &[1]),
            query(100, 2, 20, &[1]),
            query(200, 3, 10, &[1]),
        ]);
        let fs = extract_query_features(&s, &CorpusStats::default(), &BucketingConfig::default());
        assert_eq!(values(&fs, FamilyTag::QueryCount), ["3"]);
        assert_eq!(values(&fs, FamilyTag::QueryDuplicate), ["2"]);
        assert_eq!(values(&fs, FamilyTag::QueryId), ["10", "20", "10"]);
        // no corpus history -> every popularity token unknown
        assert!(values(&fs, FamilyTag::QueryIdPopularity)
            .iter()
            .all(|v| *v == "unknown"));

        let single = session(vec![query(0, 1, 10, &[1])]);
        let fs =
            extract_query_features(&single, &CorpusStats::default(), &BucketingConfig::default());
        assert_eq!(values(&fs, FamilyTag::QueryCount), ["1"]);
        assert_eq!(values(&fs, FamilyTag::QueryDuplicate), ["1"]);
    }

    #[test]
    fn url_features_shown_and_clicked() {
        let s = session(vec![query(0, 1, 9, &[5, 6]), click(10, 1, 6)]);
        let fs = extract_url_features(&s, &CorpusStats::default(), &BucketingConfig::default(), 10);
        assert_eq!(values(&fs, FamilyTag::UrlId), ["5", "6"]);
        assert_eq!(values(&fs, FamilyTag::ClickedUrlFiltered), ["6"]);
        assert_eq!(
            values(&fs, FamilyTag::QueryUrlIdList),
            ["9:5:1", "9:6:2"]
        );

        let no_clicks = session(vec![query(0, 1, 9, &[5, 6])]);
        let fs = extract_url_features(
            &no_clicks,
            &CorpusStats::default(),
            &BucketingConfig::default(),
            10,
        );
        assert!(values(&fs, FamilyTag::ClickedUrlFiltered).is_empty());
    }

    #[test]
    fn url_features_respect_top_k() {
        let urls: Vec<u64> = (1..=15).collect();
        let s = session(vec![query(0, 1, 9, &urls)]);
        let fs = extract_url_features(&s, &CorpusStats::default(), &BucketingConfig::default(), 10);
        assert_eq!(values(&fs, FamilyTag::UrlId).len(), 10);
    }

    #[test]
    fn action_sequence_masking_and_ngrams() {
        let s = session(vec![
            query(0, 1, 10, &[1]),
            click(50, 1, 1),
            query(100, 2, 20, &[1]),
            click(150, 2, 1),
            query(200, 3, 30, &[1]),
            SessionEvent::Switch(SwitchEvent { time_passed: 300 }),
        ]);
        assert_eq!(action_sequence(&s, false), "MQCQCQ");
        assert_eq!(action_sequence(&s, true), "MQCQCQS");

        let fs = extract_sequence_features(&s, false);
        assert_eq!(values(&fs, FamilyTag::ActionSequence), ["MQCQCQ"]);
        let grams4 = values(&fs, FamilyTag::Pattern4GramNormed);
        // "MQCQCQ": MQCQ, QCQC, CQCQ each once out of 3 -> freq 1/3 -> bin 2
        assert_eq!(grams4, ["MQCQ:2", "QCQC:2", "CQCQ:2"]);
    }

    #[test]
    fn short_string_has_no_ngrams() {
        let s = session(vec![query(0, 1, 10, &[1])]); // "MQ"
        let fs = extract_sequence_features(&s, false);
        for tag in [
            FamilyTag::Pattern4GramNormed,
            FamilyTag::Pattern5GramNormed,
            FamilyTag::Pattern6GramNormed,
            FamilyTag::Pattern7GramNormed,
        ] {
            assert!(values(&fs, tag).is_empty());
        }
    }

    #[test]
    fn uniform_string_single_ngram_full_frequency() {
        // "MQQQ" gives a single 4-gram with frequency 1.0 -> top bin
        let s = session(vec![
            query(0, 1, 1, &[1]),
            query(1, 2, 2, &[1]),
            query(2, 3, 3, &[1]),
        ]);
        let fs = extract_sequence_features(&s, false);
        assert_eq!(values(&fs, FamilyTag::Pattern4GramNormed), ["MQQQ:7"]);
    }

    #[test]
    fn long_sequences_are_capped() {
        let events: Vec<SessionEvent> = (0..60).map(|i| query(i, i, i, &[1])).collect();
        let s = session(events);
        let fs = extract_sequence_features(&s, false);
        let value = values(&fs, FamilyTag::ActionSequence)[0];
        assert_eq!(value.len(), ACTION_SEQUENCE_CAP + 1);
        assert!(value.contains('|'));
    }

    #[test]
    fn timeline_intervals() {
        let s = session(vec![
            query(0, 1, 10, &[1]),
            click(50, 1, 1),
            query(400, 2, 20, &[1]),
        ]);
        let buckets = BucketingConfig::default();
        let fs = extract_timeline_features(&s, &buckets);
        // first click at +50 -> bucket of 50 = [32,64) = 6
        assert_eq!(values(&fs, FamilyTag::QueryClickInterval), ["6"]);
        // next query 350 after last click -> [256,512) = 9
        assert_eq!(values(&fs, FamilyTag::ClickNextQueryInterval), ["9"]);
        // query times 0 and 400
        assert_eq!(values(&fs, FamilyTag::QueryIdTime), ["0", "9"]);
    }

    #[test]
    fn serp_without_click_emits_no_interval() {
        let s = session(vec![query(0, 1, 10, &[1]), query(500, 2, 20, &[1])]);
        let fs = extract_timeline_features(&s, &BucketingConfig::default());
        assert!(values(&fs, FamilyTag::QueryClickInterval).is_empty());
        assert!(values(&fs, FamilyTag::ClickNextQueryInterval).is_empty());
    }

    #[test]
    fn position_counts_and_mrr() {
        let urls: Vec<u64> = (1..=10).collect();
        let s = session(vec![
            query(0, 1, 10, &urls),
            click(10, 1, 1), // position 1
            click(20, 1, 6), // position 6
            click(30, 1, 9), // position 9
        ]);
        let (fs, skipped) = extract_position_features(&s, &BucketingConfig::default());
        assert_eq!(skipped, 0);
        assert_eq!(values(&fs, FamilyTag::ClickPositionCount), ["2"]);
        // MRR = (1 + 1/6 + 1/9)/3 ~ 0.4259 -> tenth bucket 4
        assert_eq!(values(&fs, FamilyTag::Mrr), ["4"]);
    }

    #[test]
    fn top_position_click_and_no_click() {
        let s = session(vec![query(0, 1, 10, &[1, 2]), click(10, 1, 1)]);
        let (fs, _) = extract_position_features(&s, &BucketingConfig::default());
        assert_eq!(values(&fs, FamilyTag::ClickPositionCount), ["0"]);
        // MRR = 1.0 -> top tenth bucket
        assert_eq!(values(&fs, FamilyTag::Mrr), ["9"]);

        let (fs, _) =
            extract_position_features(&session(vec![query(0, 1, 10, &[1])]), &BucketingConfig::default());
        assert_eq!(values(&fs, FamilyTag::Mrr), ["no-click"]);
    }

    #[test]
    fn clicks_off_the_shown_list_are_skipped_and_counted() {
        let s = session(vec![query(0, 1, 10, &[1, 2]), click(10, 1, 99)]);
        let (fs, skipped) = extract_position_features(&s, &BucketingConfig::default());
        assert_eq!(skipped, 1);
        assert_eq!(values(&fs, FamilyTag::Mrr), ["no-click"]);
    }
}
