//! Training and prediction orchestration for the binary task and the
//! one-vs-rest multi-category extensions.
//!
//! A three-category task trains B and P models (blended H sessions count
//! positive for both); a four-category task adds an H model. Prediction
//! takes the maximum per-type probability as the session's switching
//! probability. Each session is extracted once and fed to every constituent
//! model, in stream order.

use std::collections::BTreeMap;

use thiserror::Error;

use crate::eval::{auc, EvalError};
use crate::features::{
    BucketingConfig, CorpusStats, ExtractorConfig, FamilySelection, FamilyTag, FeatureExtractor,
};
use crate::logs::{session_label, LabelMode, Session, SwitchType};
use crate::model::{ModelConfig, ModelError, ModelState};

/// Minimum validation-AUC gain for a candidate feature family to be kept.
/// The boundary is inclusive: a gain of exactly this much keeps the family.
pub const AUC_IMPROVEMENT_THRESHOLD: f64 = 0.0005;

#[derive(Debug, Error)]
pub enum TaskError {
    #[error("session {session_id}: {source}")]
    Update {
        session_id: u64,
        #[source]
        source: ModelError,
    },
    #[error(transparent)]
    Eval(#[from] EvalError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TaskKind {
    Binary,
    ThreeCategory,
    FourCategory,
}

impl TaskKind {
    /// The label modes of the task's constituent models.
    pub fn label_modes(self) -> Vec<LabelMode> {
        match self {
            TaskKind::Binary => vec![LabelMode::Binary],
            TaskKind::ThreeCategory => vec![
                LabelMode::OneVsRest(SwitchType::B),
                LabelMode::OneVsRest(SwitchType::P),
            ],
            TaskKind::FourCategory => vec![
                LabelMode::OneVsRest(SwitchType::B),
                LabelMode::OneVsRest(SwitchType::P),
                LabelMode::OneVsRest(SwitchType::H),
            ],
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TaskSpec {
    pub kind: TaskKind,
    pub model: ModelConfig,
    pub extractor: ExtractorConfig,
    /// Passes over the training stream; online learning defaults to one.
    pub epochs: u32,
}

impl TaskSpec {
    pub fn new(kind: TaskKind) -> Self {
        TaskSpec {
            kind,
            model: ModelConfig::default(),
            extractor: ExtractorConfig::default(),
            epochs: 1,
        }
    }
}

/// The constituent models of one trained task.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainedTask {
    pub kind: TaskKind,
    pub models: Vec<(LabelMode, ModelState)>,
}

/// One session's prediction. For multi-category tasks `per_type` holds the
/// per-channel probabilities and `probability` is their maximum.
#[derive(Debug, Clone, PartialEq)]
pub struct SessionPrediction {
    pub session_id: u64,
    pub probability: f64,
    pub per_type: Option<BTreeMap<SwitchType, f64>>,
}

/// Trains every constituent model with one `update` per session per epoch,
/// in stream order. H-typed sessions are positive for both the B and the P
/// model (and the H model when present).
pub fn train<'a, I>(
    spec: &TaskSpec,
    sessions: I,
    stats: &CorpusStats,
    buckets: &BucketingConfig,
) -> Result<TrainedTask, TaskError>
where
    I: IntoIterator<Item = &'a Session>,
    I::IntoIter: Clone,
{
    let extractor = FeatureExtractor::new(stats, buckets).with_config(spec.extractor);
    let modes = spec.kind.label_modes();
    let mut models: Vec<(LabelMode, ModelState)> = modes
        .iter()
        .map(|mode| (*mode, ModelState::new(spec.model)))
        .collect();
    let sessions = sessions.into_iter();
    for _ in 0..spec.epochs.max(1) {
        for session in sessions.clone() {
            let x = extractor.encode(session);
            for (mode, model) in &mut models {
                let label = session_label(session, *mode);
                model.update(&x, label).map_err(|source| TaskError::Update {
                    session_id: session.session_id,
                    source,
                })?;
            }
        }
    }
    Ok(TrainedTask {
        kind: spec.kind,
        models,
    })
}

/// Predicts every session with every constituent model. Extraction uses the
/// spec's extractor config, which masks switch evidence by default.
pub fn predict_task<'a, I>(
    spec: &TaskSpec,
    trained: &TrainedTask,
    sessions: I,
    stats: &CorpusStats,
    buckets: &BucketingConfig,
) -> Vec<SessionPrediction>
where
    I: IntoIterator<Item = &'a Session>,
{
    let extractor = FeatureExtractor::new(stats, buckets).with_config(spec.extractor);
    sessions
        .into_iter()
        .map(|session| {
            let x = extractor.encode(session);
            if trained.kind == TaskKind::Binary {
                SessionPrediction {
                    session_id: session.session_id,
                    probability: trained.models[0].1.predict(&x),
                    per_type: None,
                }
            } else {
                let per_type: BTreeMap<SwitchType, f64> = trained
                    .models
                    .iter()
                    .map(|(mode, model)| {
                        let LabelMode::OneVsRest(st) = mode else {
                            unreachable!("multi-category models are one-vs-rest")
                        };
                        (*st, model.predict(&x))
                    })
                    .collect();
                let probability = per_type.values().copied().fold(f64::MIN, f64::max);
                SessionPrediction {
                    session_id: session.session_id,
                    probability,
                    per_type: Some(per_type),
                }
            }
        })
        .collect()
}

/// Outcome of one add-a-feature experiment.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AblationReport {
    pub candidate: FamilyTag,
    pub auc_without: f64,
    pub auc_with: f64,
    pub delta: f64,
    pub keep: bool,
}

/// Trains a binary model on `baseline` families with and without the
/// candidate, compares validation AUC, and keeps the candidate iff the gain
/// reaches [`AUC_IMPROVEMENT_THRESHOLD`].
#[allow(clippy::too_many_arguments)]
pub fn feature_ablation_report(
    baseline: FamilySelection,
    candidate: FamilyTag,
    model: ModelConfig,
    training: &[Session],
    validation: &[Session],
    stats: &CorpusStats,
    buckets: &BucketingConfig,
) -> Result<AblationReport, TaskError> {
    let run = |selection: FamilySelection| -> Result<f64, TaskError> {
        let spec = TaskSpec {
            kind: TaskKind::Binary,
            model,
            extractor: ExtractorConfig {
                selection,
                ..ExtractorConfig::default()
            },
            epochs: 1,
        };
        let trained = train(&spec, training, stats, buckets)?;
        let predictions = predict_task(&spec, &trained, validation, stats, buckets);
        let scores: Vec<(u64, f64)> = predictions
            .iter()
            .map(|p| (p.session_id, p.probability))
            .collect();
        let labels: Vec<_> = validation
            .iter()
            .map(|s| (s.session_id, session_label(s, LabelMode::Binary)))
            .collect();
        Ok(auc(&scores, &labels)?)
    };
    let auc_without = run(baseline.without(candidate))?;
    let auc_with = run(baseline.with(candidate))?;
    let delta = auc_with - auc_without;
    Ok(AblationReport {
        candidate,
        auc_without,
        auc_with,
        delta,
        keep: delta >= AUC_IMPROVEMENT_THRESHOLD,
    })
}
