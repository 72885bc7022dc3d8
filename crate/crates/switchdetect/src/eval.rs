//! Ranking, rank fusion, AUC, and dataset bookkeeping.
//!
//! Fusion works on ranks alone: each input ranking assigns rank 1 to its
//! most switch-likely session, the fused score of a session is the harmonic
//! mean of its three ranks, and the fused order sorts that score ascending.
//! AUC uses the Mann–Whitney formulation with half credit for ties.

use std::collections::{HashMap, HashSet};

use thiserror::Error;

use crate::logs::Session;
use crate::model::Label;

#[derive(Debug, Error, PartialEq)]
pub enum EvalError {
    #[error("duplicate session id {0}")]
    DuplicateSession(u64),
    #[error("score for session {0} is not finite")]
    NonFiniteScore(u64),
    #[error("rankings cover different session sets; {0} ids differ (e.g. {1:?})")]
    MismatchedSessions(usize, Vec<u64>),
    #[error("session {0} has a score but no label")]
    MissingLabel(u64),
    #[error("AUC undefined: need at least one positive and one negative label")]
    DegenerateLabels,
    #[error("split modulus must be >= 2, got {0}")]
    BadModulus(u64),
    #[error("split residue {residue} must be < modulus {modulus}")]
    BadResidue { residue: u64, modulus: u64 },
}

/// A scored session list with its induced 1-based ranking. Rank 1 is the
/// highest score; ties break toward the smaller session id so rankings are
/// deterministic.
#[derive(Debug, Clone, PartialEq)]
pub struct RankedPrediction {
    entries: Vec<(u64, f64)>,
    ranks: HashMap<u64, u64>,
}

impl RankedPrediction {
    pub fn from_scores(entries: Vec<(u64, f64)>) -> Result<Self, EvalError> {
        let mut order: Vec<(u64, f64)> = Vec::with_capacity(entries.len());
        let mut seen = HashSet::with_capacity(entries.len());
        for (id, score) in &entries {
            if !score.is_finite() {
                return Err(EvalError::NonFiniteScore(*id));
            }
            if !seen.insert(*id) {
                return Err(EvalError::DuplicateSession(*id));
            }
            order.push((*id, *score));
        }
        order.sort_by(|a, b| b.1.total_cmp(&a.1).then(a.0.cmp(&b.0)));
        let ranks = order
            .iter()
            .enumerate()
            .map(|(i, (id, _))| (*id, i as u64 + 1))
            .collect();
        Ok(RankedPrediction { entries, ranks })
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Original (session_id, score) pairs in input order.
    pub fn entries(&self) -> &[(u64, f64)] {
        &self.entries
    }

    pub fn rank(&self, session_id: u64) -> Option<u64> {
        self.ranks.get(&session_id).copied()
    }

    /// Sessions from rank 1 downward, with their scores.
    pub fn by_rank(&self) -> Vec<(u64, f64)> {
        let mut sorted = self.entries.clone();
        sorted.sort_by_key(|(id, _)| self.ranks[id]);
        sorted
    }
}

/// Harmonic-mean rank fusion of three rankings over the same session set:
/// rank_score(i) = 3 / (1/rank₁ + 1/rank₂ + 1/rank₃). The fused ranking
/// orders sessions by ascending rank_score; the score it carries is
/// 1/rank_score so that, as everywhere else, higher means more switch-likely.
pub fn rank_fuse(rankings: &[RankedPrediction; 3]) -> Result<RankedPrediction, EvalError> {
    let base: HashSet<u64> = rankings[0].ranks.keys().copied().collect();
    for other in &rankings[1..] {
        let theirs: HashSet<u64> = other.ranks.keys().copied().collect();
        if theirs != base {
            let mut diff: Vec<u64> = base.symmetric_difference(&theirs).copied().collect();
            diff.sort_unstable();
            let count = diff.len();
            diff.truncate(8);
            return Err(EvalError::MismatchedSessions(count, diff));
        }
    }
    let mut fused: Vec<(u64, f64)> = base
        .iter()
        .map(|id| {
            let reciprocal_sum: f64 = rankings.iter().map(|r| 1.0 / r.ranks[id] as f64).sum();
            // 1/rank_score = (1/3)·Σ 1/rank_k
            (*id, reciprocal_sum / 3.0)
        })
        .collect();
    fused.sort_unstable_by_key(|(id, _)| *id);
    RankedPrediction::from_scores(fused)
}

/// Mann–Whitney AUC: the probability a random positive outranks a random
/// negative, ties counting half. Tie-aware rank sums, O(n log n).
pub fn auc(scores: &[(u64, f64)], labels: &[(u64, Label)]) -> Result<f64, EvalError> {
    let label_by_id: HashMap<u64, Label> = labels.iter().copied().collect();
    let mut scored: Vec<(f64, bool)> = Vec::with_capacity(scores.len());
    let mut seen = HashSet::with_capacity(scores.len());
    for (id, score) in scores {
        if !score.is_finite() {
            return Err(EvalError::NonFiniteScore(*id));
        }
        if !seen.insert(*id) {
            return Err(EvalError::DuplicateSession(*id));
        }
        let label = label_by_id.get(id).ok_or(EvalError::MissingLabel(*id))?;
        scored.push((*score, label.is_positive()));
    }
    let positives = scored.iter().filter(|(_, pos)| *pos).count();
    let negatives = scored.len() - positives;
    if positives == 0 || negatives == 0 {
        return Err(EvalError::DegenerateLabels);
    }
    scored.sort_by(|a, b| a.0.total_cmp(&b.0));

    // average rank within each tie group keeps every sum a multiple of 0.5,
    // so the result is exactly the brute-force pair count
    let mut rank_sum_pos = 0.0f64;
    let mut i = 0;
    while i < scored.len() {
        let mut j = i;
        while j < scored.len() && scored[j].0 == scored[i].0 {
            j += 1;
        }
        let avg_rank = (i + j + 1) as f64 / 2.0; // mean of ranks i+1 ..= j
        for item in &scored[i..j] {
            if item.1 {
                rank_sum_pos += avg_rank;
            }
        }
        i = j;
    }
    let n_pos = positives as f64;
    let n_neg = negatives as f64;
    Ok((rank_sum_pos - n_pos * (n_pos + 1.0) / 2.0) / (n_pos * n_neg))
}

/// True iff the session id falls in the validation residue class.
pub fn in_validation(session_id: u64, modulus: u64, residue: u64) -> Result<bool, EvalError> {
    if modulus < 2 {
        return Err(EvalError::BadModulus(modulus));
    }
    if residue >= modulus {
        return Err(EvalError::BadResidue { residue, modulus });
    }
    Ok(session_id % modulus == residue)
}

/// Splits sessions into (sub_training, validation) by session-id residue:
/// a session validates iff `session_id % modulus == residue`.
pub fn proportional_split<I>(
    sessions: I,
    modulus: u64,
    residue: u64,
) -> Result<(Vec<Session>, Vec<Session>), EvalError>
where
    I: IntoIterator<Item = Session>,
{
    in_validation(0, modulus, residue)?;
    let mut training = Vec::new();
    let mut validation = Vec::new();
    for session in sessions {
        if session.session_id % modulus == residue {
            validation.push(session);
        } else {
            training.push(session);
        }
    }
    Ok((training, validation))
}

/// Table-style corpus counts: sessions, distinct users, distinct query ids,
/// distinct url ids (shown or clicked).
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct DatasetStats {
    pub sessions: u64,
    pub users: u64,
    pub queries: u64,
    pub urls: u64,
}

pub fn dataset_stats<'a, I>(sessions: I) -> DatasetStats
where
    I: IntoIterator<Item = &'a Session>,
{
    let mut users = HashSet::new();
    let mut queries = HashSet::new();
    let mut urls = HashSet::new();
    let mut count = 0u64;
    for session in sessions {
        count += 1;
        users.insert(session.user_id);
        for q in session.queries() {
            queries.insert(q.query_id);
            urls.extend(q.urls.iter().copied());
        }
        for c in session.clicks() {
            urls.insert(c.url_id);
        }
    }
    DatasetStats {
        sessions: count,
        users: users.len() as u64,
        queries: queries.len() as u64,
        urls: urls.len() as u64,
    }
}
