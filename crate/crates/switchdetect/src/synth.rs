//! Seeded synthetic search-log generator with a known probit ground truth.
//!
//! Every session's switch probability is Φ(z/β) where z sums contributions
//! the feature pipeline can actually see: a per-user propensity weight,
//! whether any popular query was issued, a deep-click-position regime, and a
//! slow inter-query timing regime. Labels are Bernoulli draws from that
//! probability, so a learner consuming those features can recover the
//! ranking and the generator can promise a target positive rate.
//!
//! Switching sessions are assigned a channel-dependent switch type (P/B/H)
//! driven by a per-user toolbar-vs-SERP affinity, which gives the one-vs-rest
//! tasks a real per-type signal. The intercept is calibrated against the
//! drawn population so the empirical positive rate lands on
//! `base_switch_rate`. Everything flows from one 64-bit seed; identical
//! parameters produce byte-identical output files.

use std::io::{self, Write};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use thiserror::Error;

use crate::logs::{
    format_record, ClickEvent, LogRecord, MetadataRecord, QueryEvent, SwitchEvent, SwitchType,
};
use crate::model::Label;
use crate::probit::normal_cdf;

#[derive(Debug, Error, PartialEq)]
pub enum SynthError {
    #[error("invalid generator parameter {name}: {message}")]
    BadParam {
        name: &'static str,
        message: String,
    },
}

#[derive(Debug, Clone, PartialEq)]
pub struct GeneratorParams {
    pub seed: u64,
    pub n_users: u64,
    pub n_sessions: u64,
    pub n_queries: u64,
    pub n_urls: u64,
    /// Target fraction of switching sessions; the intercept is calibrated so
    /// the expected positive rate matches this.
    pub base_switch_rate: f64,
    /// Spread of the per-user propensity weights.
    pub user_weight_sd: f64,
    /// Ground-truth probit noise scale.
    pub noise_beta: f64,
}

impl Default for GeneratorParams {
    fn default() -> Self {
        GeneratorParams {
            seed: 42,
            n_users: 1000,
            n_sessions: 50_000,
            n_queries: 5000,
            n_urls: 20_000,
            base_switch_rate: 0.3,
            user_weight_sd: 1.5,
            noise_beta: 1.0,
        }
    }
}

impl GeneratorParams {
    pub fn validate(&self) -> Result<(), SynthError> {
        let positive = |name: &'static str, v: u64| {
            if v == 0 {
                Err(SynthError::BadParam {
                    name,
                    message: "must be > 0".into(),
                })
            } else {
                Ok(())
            }
        };
        positive("n_users", self.n_users)?;
        positive("n_queries", self.n_queries)?;
        positive("n_urls", self.n_urls)?;
        if !(self.base_switch_rate > 0.0 && self.base_switch_rate < 1.0) {
            return Err(SynthError::BadParam {
                name: "base_switch_rate",
                message: format!("must be in (0,1), got {}", self.base_switch_rate),
            });
        }
        if !(self.user_weight_sd.is_finite() && self.user_weight_sd >= 0.0) {
            return Err(SynthError::BadParam {
                name: "user_weight_sd",
                message: format!("must be >= 0, got {}", self.user_weight_sd),
            });
        }
        if !(self.noise_beta.is_finite() && self.noise_beta > 0.0) {
            return Err(SynthError::BadParam {
                name: "noise_beta",
                message: format!("must be > 0, got {}", self.noise_beta),
            });
        }
        Ok(())
    }
}

/// Ground-truth score contributions of the non-user factors.
const HOT_QUERY_WEIGHT: f64 = -0.6;
const DEEP_CLICK_WEIGHT: f64 = 0.9;
const SLOW_TIMING_WEIGHT: f64 = 0.7;
/// Session-level regime probabilities.
const DEEP_CLICK_RATE: f64 = 0.35;
const SLOW_TIMING_RATE: f64 = 0.30;
/// Chance a query (or url) draw comes from the hot pool (first 1% of ids).
const HOT_DRAW_RATE: f64 = 0.5;
const HOT_URL_DRAW_RATE: f64 = 0.3;
/// Channel affinities: primary channel fires often, the other rarely.
const PRIMARY_CHANNEL_RATE: f64 = 0.9;
const SECONDARY_CHANNEL_RATE: f64 = 0.12;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Channel {
    Toolbar,
    Serp,
}

/// Per-session ground truth, persisted alongside the log.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SessionTruth {
    pub session_id: u64,
    pub true_probability: f64,
    pub label: Label,
    pub switch_type: SwitchType,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GroundTruth {
    pub params: GeneratorParams,
    /// Calibrated intercept added to every session's score.
    pub intercept: f64,
    pub user_weights: Vec<f64>,
    pub user_channels: Vec<Channel>,
    pub sessions: Vec<SessionTruth>,
}

impl GroundTruth {
    pub fn positive_rate(&self) -> f64 {
        if self.sessions.is_empty() {
            return 0.0;
        }
        self.sessions
            .iter()
            .filter(|s| s.label.is_positive())
            .count() as f64
            / self.sessions.len() as f64
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticLog {
    pub records: Vec<LogRecord>,
    pub truth: GroundTruth,
}

struct SessionDraft {
    user: u64,
    day: u64,
    score: f64,
    events: Vec<DraftEvent>,
    last_time: u64,
}

enum DraftEvent {
    Query(QueryEvent),
    Click(ClickEvent),
}

fn weighted_query_count(rng: &mut ChaCha8Rng) -> usize {
    let r: f64 = rng.random();
    match r {
        _ if r < 0.45 => 1,
        _ if r < 0.70 => 2,
        _ if r < 0.85 => 3,
        _ if r < 0.95 => 4,
        _ => 5,
    }
}

fn shallow_click_position(rng: &mut ChaCha8Rng) -> u64 {
    let r: f64 = rng.random();
    match r {
        _ if r < 0.55 => 1,
        _ if r < 0.80 => 2,
        _ if r < 0.92 => 3,
        _ => 4,
    }
}

/// Inverts Φ by bisection; plenty for intercept calibration.
fn normal_quantile(p: f64) -> f64 {
    let (mut lo, mut hi) = (-10.0f64, 10.0f64);
    for _ in 0..80 {
        let mid = 0.5 * (lo + hi);
        if normal_cdf(mid) < p {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// Generates the full log and its ground truth in memory.
pub fn generate(params: &GeneratorParams) -> Result<SyntheticLog, SynthError> {
    params.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(params.seed);

    let normal = Normal::new(0.0, params.user_weight_sd.max(f64::MIN_POSITIVE)).unwrap();
    let user_weights: Vec<f64> = (0..params.n_users)
        .map(|_| {
            if params.user_weight_sd == 0.0 {
                0.0
            } else {
                normal.sample(&mut rng)
            }
        })
        .collect();
    let user_channels: Vec<Channel> = (0..params.n_users)
        .map(|_| {
            if rng.random_bool(0.5) {
                Channel::Toolbar
            } else {
                Channel::Serp
            }
        })
        .collect();

    let hot_queries = (params.n_queries / 100).max(1);
    let hot_urls = (params.n_urls / 100).max(1);

    // Pass 1: draw session structure and raw scores.
    let mut drafts: Vec<SessionDraft> = Vec::with_capacity(params.n_sessions as usize);
    for _ in 0..params.n_sessions {
        let user = rng.random_range(0..params.n_users);
        let day = rng.random_range(1..=27);
        let deep_clicks = rng.random_bool(DEEP_CLICK_RATE);
        let slow_timing = rng.random_bool(SLOW_TIMING_RATE);
        let n_queries = weighted_query_count(&mut rng);

        let mut any_hot_query = false;
        let mut events = Vec::new();
        let mut cursor = 0u64;
        for serp in 0..n_queries {
            let query_id = if rng.random_bool(HOT_DRAW_RATE) {
                rng.random_range(0..hot_queries)
            } else {
                rng.random_range(0..params.n_queries)
            };
            any_hot_query |= query_id < hot_queries;
            let urls: Vec<u64> = (0..10)
                .map(|_| {
                    if rng.random_bool(HOT_URL_DRAW_RATE) {
                        rng.random_range(0..hot_urls)
                    } else {
                        rng.random_range(0..params.n_urls)
                    }
                })
                .collect();
            let serp_id = serp as u64 + 1;
            events.push(DraftEvent::Query(QueryEvent {
                time_passed: cursor,
                serp_id,
                query_id,
                urls: urls.clone(),
            }));
            let mut last = cursor;
            if rng.random_bool(0.8) {
                let position = if deep_clicks {
                    rng.random_range(5..=10)
                } else {
                    shallow_click_position(&mut rng)
                };
                let click_time = cursor + rng.random_range(20..80);
                events.push(DraftEvent::Click(ClickEvent {
                    time_passed: click_time,
                    serp_id,
                    url_id: urls[(position - 1) as usize],
                }));
                last = click_time;
            }
            cursor = last
                + if slow_timing {
                    rng.random_range(400..1200)
                } else {
                    rng.random_range(50..150)
                };
        }

        let mut score = user_weights[user as usize];
        if any_hot_query {
            score += HOT_QUERY_WEIGHT;
        }
        if deep_clicks {
            score += DEEP_CLICK_WEIGHT;
        }
        if slow_timing {
            score += SLOW_TIMING_WEIGHT;
        }
        drafts.push(SessionDraft {
            user,
            day,
            score,
            events,
            last_time: cursor,
        });
    }

    // Calibrate the intercept so mean Φ((score+b)/β) hits the target rate.
    // Bisection over b; mean probability is monotone in b.
    let intercept = if drafts.is_empty() {
        normal_quantile(params.base_switch_rate) * params.noise_beta
    } else {
        let mean_p = |b: f64| {
            drafts
                .iter()
                .map(|d| normal_cdf((d.score + b) / params.noise_beta))
                .sum::<f64>()
                / drafts.len() as f64
        };
        let (mut lo, mut hi) = (-30.0f64, 30.0f64);
        for _ in 0..60 {
            let mid = 0.5 * (lo + hi);
            if mean_p(mid) < params.base_switch_rate {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        0.5 * (lo + hi)
    };

    // Pass 2: labels, switch types, final records.
    let mut records = Vec::new();
    let mut sessions = Vec::with_capacity(drafts.len());
    for (i, draft) in drafts.into_iter().enumerate() {
        let session_id = i as u64 + 1;
        let true_probability = normal_cdf((draft.score + intercept) / params.noise_beta);
        let label = if rng.random_bool(true_probability) {
            Label::Switch
        } else {
            Label::NoSwitch
        };
        let switch_type = if label.is_positive() {
            let (toolbar_rate, serp_rate) = match user_channels[draft.user as usize] {
                Channel::Toolbar => (PRIMARY_CHANNEL_RATE, SECONDARY_CHANNEL_RATE),
                Channel::Serp => (SECONDARY_CHANNEL_RATE, PRIMARY_CHANNEL_RATE),
            };
            let toolbar = rng.random_bool(toolbar_rate);
            let serp = rng.random_bool(serp_rate);
            match (toolbar, serp) {
                (true, true) => SwitchType::H,
                (true, false) => SwitchType::B,
                (false, true) => SwitchType::P,
                // neither channel fired: fall back to the user's primary
                (false, false) => match user_channels[draft.user as usize] {
                    Channel::Toolbar => SwitchType::B,
                    Channel::Serp => SwitchType::P,
                },
            }
        } else {
            SwitchType::N
        };

        records.push(LogRecord::Metadata(MetadataRecord {
            session_id,
            day: draft.day,
            user_id: draft.user,
            switch_type,
        }));
        for event in draft.events {
            records.push(match event {
                DraftEvent::Query(event) => LogRecord::Query { session_id, event },
                DraftEvent::Click(event) => LogRecord::Click { session_id, event },
            });
        }
        if label.is_positive() {
            let switch_time = draft.last_time + rng.random_range(10..100);
            records.push(LogRecord::Switch {
                session_id,
                event: SwitchEvent {
                    time_passed: switch_time,
                },
            });
        }

        sessions.push(SessionTruth {
            session_id,
            true_probability,
            label,
            switch_type,
        });
    }

    Ok(SyntheticLog {
        records,
        truth: GroundTruth {
            params: params.clone(),
            intercept,
            user_weights,
            user_channels,
            sessions,
        },
    })
}

/// Writes the records as a plain text log (one line per record, LF endings).
pub fn write_log<W: Write>(records: &[LogRecord], mut out: W) -> io::Result<()> {
    for record in records {
        writeln!(out, "{}", format_record(record))?;
    }
    Ok(())
}

pub const TRUTH_FORMAT_VERSION: &str = "switchdetect-truth-v1";

/// Sidecar with the generating weights and the per-session ground truth.
pub fn write_truth<W: Write>(truth: &GroundTruth, mut out: W) -> io::Result<()> {
    writeln!(out, "{TRUTH_FORMAT_VERSION}")?;
    let p = &truth.params;
    writeln!(
        out,
        "seed={} n_users={} n_sessions={} n_queries={} n_urls={} base_switch_rate={} user_weight_sd={} noise_beta={} intercept={}",
        p.seed, p.n_users, p.n_sessions, p.n_queries, p.n_urls, p.base_switch_rate,
        p.user_weight_sd, p.noise_beta, truth.intercept
    )?;
    writeln!(out, "[users]")?;
    for (i, (weight, channel)) in truth
        .user_weights
        .iter()
        .zip(&truth.user_channels)
        .enumerate()
    {
        let channel = match channel {
            Channel::Toolbar => "toolbar",
            Channel::Serp => "serp",
        };
        writeln!(out, "{i}\t{weight}\t{channel}")?;
    }
    writeln!(out, "[sessions]")?;
    for s in &truth.sessions {
        writeln!(
            out,
            "{}\t{}\t{}\t{}",
            s.session_id,
            s.true_probability,
            if s.label.is_positive() { 1 } else { -1 },
            s.switch_type
        )?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::logs::{assemble_sessions, parse_record, LogError};

    fn small_params() -> GeneratorParams {
        GeneratorParams {
            n_users: 50,
            n_sessions: 2000,
            n_queries: 500,
            n_urls: 2000,
            ..GeneratorParams::default()
        }
    }

    #[test]
    fn same_seed_is_byte_identical() {
        let params = small_params();
        let a = generate(&params).unwrap();
        let b = generate(&params).unwrap();
        let mut buf_a = Vec::new();
        let mut buf_b = Vec::new();
        write_log(&a.records, &mut buf_a).unwrap();
        write_log(&b.records, &mut buf_b).unwrap();
        assert_eq!(buf_a, buf_b);

        let mut truth_a = Vec::new();
        let mut truth_b = Vec::new();
        write_truth(&a.truth, &mut truth_a).unwrap();
        write_truth(&b.truth, &mut truth_b).unwrap();
        assert_eq!(truth_a, truth_b);

        let different = generate(&GeneratorParams {
            seed: 43,
            ..params
        })
        .unwrap();
        assert_ne!(a.records, different.records);
    }

    #[test]
    fn zero_sessions_gives_empty_valid_log() {
        let log = generate(&GeneratorParams {
            n_sessions: 0,
            ..small_params()
        })
        .unwrap();
        assert!(log.records.is_empty());
        let mut buf = Vec::new();
        write_log(&log.records, &mut buf).unwrap();
        assert!(buf.is_empty());
    }

    #[test]
    fn output_parses_cleanly_with_zero_skips() {
        let log = generate(&small_params()).unwrap();
        let mut buf = Vec::new();
        write_log(&log.records, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let records: Vec<_> = text
            .lines()
            .map(|l| parse_record(l).map_err(|source| LogError::Parse { line: 0, source }))
            .collect();
        assert_eq!(records.len(), log.records.len());
        let sessions = assemble_sessions(records).collect::<Result<Vec<_>, _>>().unwrap();
        assert_eq!(sessions.len(), 2000);
    }

    #[test]
    fn positive_rate_matches_configured_propensity() {
        let log = generate(&small_params()).unwrap();
        let rate = log.truth.positive_rate();
        assert!(
            (rate - 0.3).abs() <= 0.02,
            "positive rate {rate} vs configured 0.3"
        );
    }

    #[test]
    fn switching_sessions_carry_switch_records_and_types() {
        let log = generate(&small_params()).unwrap();
        for (truth, record) in log.truth.sessions.iter().zip(
            log.records
                .iter()
                .filter(|r| matches!(r, LogRecord::Metadata(_))),
        ) {
            let LogRecord::Metadata(m) = record else {
                unreachable!()
            };
            assert_eq!(m.session_id, truth.session_id);
            assert_eq!(m.switch_type, truth.switch_type);
            assert_eq!(truth.label.is_positive(), truth.switch_type != SwitchType::N);
        }
        let n_switch_records = log
            .records
            .iter()
            .filter(|r| matches!(r, LogRecord::Switch { .. }))
            .count();
        let n_positive = log
            .truth
            .sessions
            .iter()
            .filter(|s| s.label.is_positive())
            .count();
        assert_eq!(n_switch_records, n_positive);
    }

    #[test]
    fn invalid_params_rejected() {
        assert!(generate(&GeneratorParams {
            n_users: 0,
            ..small_params()
        })
        .is_err());
        assert!(generate(&GeneratorParams {
            base_switch_rate: 1.5,
            ..small_params()
        })
        .is_err());
        assert!(generate(&GeneratorParams {
            noise_beta: 0.0,
            ..small_params()
        })
        .is_err());
    }
}
