//! Corpus-level statistics gathered from the training period: per-user
//! switch-type history and session-level document frequencies for queries
//! and URLs. Test-time extraction reads these, never the other way around.

use std::collections::{HashMap, HashSet};
use std::io::{self, BufRead, Write};

use thiserror::Error;

use crate::logs::{Session, SwitchType};

/// Sessions per switch type for one user.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct SwitchCounts {
    pub n: u64,
    pub p: u64,
    pub b: u64,
    pub h: u64,
}

impl SwitchCounts {
    pub fn count(&self, st: SwitchType) -> u64 {
        match st {
            SwitchType::N => self.n,
            SwitchType::P => self.p,
            SwitchType::B => self.b,
            SwitchType::H => self.h,
        }
    }

    fn count_mut(&mut self, st: SwitchType) -> &mut u64 {
        match st {
            SwitchType::N => &mut self.n,
            SwitchType::P => &mut self.p,
            SwitchType::B => &mut self.b,
            SwitchType::H => &mut self.h,
        }
    }

    pub fn total(&self) -> u64 {
        self.n + self.p + self.b + self.h
    }

    /// Fraction of the user's sessions with the given switch type.
    pub fn ratio(&self, st: SwitchType) -> f64 {
        let total = self.total();
        if total == 0 {
            0.0
        } else {
            self.count(st) as f64 / total as f64
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct CorpusStats {
    /// Number of sessions in which each query id appeared at least once.
    pub query_frequency: HashMap<u64, u64>,
    /// Number of sessions in which each url id was shown at least once.
    pub url_frequency: HashMap<u64, u64>,
    pub user_switch_counts: HashMap<u64, SwitchCounts>,
}

impl CorpusStats {
    pub fn query_count(&self, query_id: u64) -> u64 {
        self.query_frequency.get(&query_id).copied().unwrap_or(0)
    }

    pub fn url_count(&self, url_id: u64) -> u64 {
        self.url_frequency.get(&url_id).copied().unwrap_or(0)
    }

    pub fn user_counts(&self, user_id: u64) -> Option<&SwitchCounts> {
        self.user_switch_counts.get(&user_id)
    }
}

/// Tallies stats over training sessions. Queries and URLs are counted once
/// per session they appear in.
pub fn build_corpus_stats<'a, I>(sessions: I) -> CorpusStats
where
    I: IntoIterator<Item = &'a Session>,
{
    let mut stats = CorpusStats::default();
    for session in sessions {
        *stats
            .user_switch_counts
            .entry(session.user_id)
            .or_default()
            .count_mut(session.switch_type) += 1;
        let mut session_queries = HashSet::new();
        let mut session_urls = HashSet::new();
        for query in session.queries() {
            session_queries.insert(query.query_id);
            session_urls.extend(query.urls.iter().copied());
        }
        for qid in session_queries {
            *stats.query_frequency.entry(qid).or_default() += 1;
        }
        for uid in session_urls {
            *stats.url_frequency.entry(uid).or_default() += 1;
        }
    }
    stats
}

// ---------------------------------------------------------------------------
// Stats file format
// ---------------------------------------------------------------------------

pub const STATS_FORMAT_VERSION: &str = "switchdetect-stats-v1";

#[derive(Debug, Error)]
pub enum StatsFormatError {
    #[error(transparent)]
    Io(#[from] io::Error),
    #[error("missing or unsupported version header: {0:?}")]
    UnsupportedVersion(String),
    #[error("malformed stats file at line {line}: {message}")]
    Malformed { line: u64, message: String },
}

/// Sectioned text format, ids sorted ascending for reproducible bytes:
///
/// ```text
/// switchdetect-stats-v1
/// [users]
/// user_id<TAB>n<TAB>p<TAB>b<TAB>h
/// [queries]
/// query_id<TAB>count
/// [urls]
/// url_id<TAB>count
/// ```
pub fn save_corpus_stats<W: Write>(stats: &CorpusStats, mut out: W) -> Result<(), StatsFormatError> {
    writeln!(out, "{STATS_FORMAT_VERSION}")?;
    writeln!(out, "[users]")?;
    let mut users: Vec<_> = stats.user_switch_counts.iter().collect();
    users.sort_unstable_by_key(|(id, _)| **id);
    for (id, c) in users {
        writeln!(out, "{id}\t{}\t{}\t{}\t{}", c.n, c.p, c.b, c.h)?;
    }
    for (section, map) in [
        ("[queries]", &stats.query_frequency),
        ("[urls]", &stats.url_frequency),
    ] {
        writeln!(out, "{section}")?;
        let mut entries: Vec<_> = map.iter().collect();
        entries.sort_unstable_by_key(|(id, _)| **id);
        for (id, count) in entries {
            writeln!(out, "{id}\t{count}")?;
        }
    }
    Ok(())
}

pub fn load_corpus_stats<R: BufRead>(input: R) -> Result<CorpusStats, StatsFormatError> {
    let mut stats = CorpusStats::default();
    let mut section = "";
    let mut line_no = 0u64;
    let malformed = |line_no: u64, message: String| StatsFormatError::Malformed {
        line: line_no,
        message,
    };
    for line in input.lines() {
        let line = line?;
        line_no += 1;
        if line_no == 1 {
            if line != STATS_FORMAT_VERSION {
                return Err(StatsFormatError::UnsupportedVersion(line));
            }
            continue;
        }
        if line.starts_with('[') {
            section = match line.as_str() {
                "[users]" => "users",
                "[queries]" => "queries",
                "[urls]" => "urls",
                other => return Err(malformed(line_no, format!("unknown section {other:?}"))),
            };
            continue;
        }
        let fields: Vec<&str> = line.split('\t').collect();
        let parse = |s: &str| -> Result<u64, StatsFormatError> {
            s.parse()
                .map_err(|_| malformed(line_no, format!("bad integer {s:?}")))
        };
        match section {
            "users" => {
                if fields.len() != 5 {
                    return Err(malformed(line_no, "expected 5 user fields".into()));
                }
                stats.user_switch_counts.insert(
                    parse(fields[0])?,
                    SwitchCounts {
                        n: parse(fields[1])?,
                        p: parse(fields[2])?,
                        b: parse(fields[3])?,
                        h: parse(fields[4])?,
                    },
                );
            }
            "queries" | "urls" => {
                if fields.len() != 2 {
                    return Err(malformed(line_no, "expected id and count".into()));
                }
                let map = if section == "queries" {
                    &mut stats.query_frequency
                } else {
                    &mut stats.url_frequency
                };
                map.insert(parse(fields[0])?, parse(fields[1])?);
            }
            _ => return Err(malformed(line_no, "record before any section".into())),
        }
    }
    Ok(stats)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::logs::{QueryEvent, SessionEvent};

    fn session(user_id: u64, switch_type: SwitchType, queries: &[(u64, &[u64])]) -> Session {
        Session {
            session_id: 1,
            day: 1,
            user_id,
            switch_type,
            events: queries
                .iter()
                .map(|(qid, urls)| {
                    SessionEvent::Query(QueryEvent {
                        time_passed: 0,
                        serp_id: *qid,
                        query_id: *qid,
                        urls: urls.to_vec(),
                    })
                })
                .collect(),
            unmatched_clicks: 0,
        }
    }

    #[test]
    fn user_switch_counts_tally_sessions() {
        let sessions = vec![
            session(7, SwitchType::N, &[]),
            session(7, SwitchType::N, &[]),
            session(7, SwitchType::B, &[]),
        ];
        let stats = build_corpus_stats(&sessions);
        let c = stats.user_counts(7).unwrap();
        assert_eq!((c.n, c.b, c.p, c.h), (2, 1, 0, 0));
        assert!((c.ratio(SwitchType::B) - 1.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn query_frequency_counts_sessions_not_occurrences() {
        let sessions = vec![
            session(1, SwitchType::N, &[(7, &[1, 2][..]), (7, &[2, 3][..])]),
            session(2, SwitchType::N, &[(7, &[1][..])]),
            session(3, SwitchType::N, &[(7, &[9][..])]),
        ];
        let stats = build_corpus_stats(&sessions);
        assert_eq!(stats.query_count(7), 3);
        assert_eq!(stats.url_count(2), 1);
        assert_eq!(stats.url_count(1), 2);
        assert_eq!(stats.query_count(999), 0);
    }

    #[test]
    fn empty_stream_gives_empty_stats() {
        let stats = build_corpus_stats(std::iter::empty());
        assert!(stats.query_frequency.is_empty());
        assert!(stats.url_frequency.is_empty());
        assert!(stats.user_switch_counts.is_empty());
    }

    #[test]
    fn stats_round_trip() {
        let sessions = vec![
            session(7, SwitchType::B, &[(1, &[10, 11][..])]),
            session(8, SwitchType::N, &[(2, &[11][..])]),
        ];
        let stats = build_corpus_stats(&sessions);
        let mut buf = Vec::new();
        save_corpus_stats(&stats, &mut buf).unwrap();
        let back = load_corpus_stats(buf.as_slice()).unwrap();
        assert_eq!(stats, back);
    }

    #[test]
    fn bad_stats_files_rejected() {
        assert!(matches!(
            load_corpus_stats("nope\n".as_bytes()),
            Err(StatsFormatError::UnsupportedVersion(_))
        ));
        let text = format!("{STATS_FORMAT_VERSION}\n[users]\n1\t2\n");
        assert!(matches!(
            load_corpus_stats(text.as_bytes()),
            Err(StatsFormatError::Malformed { line: 3, .. })
        ));
    }
}
