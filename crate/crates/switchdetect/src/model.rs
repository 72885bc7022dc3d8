//! Online Bayesian probit regression over sparse one-hot features.
//!
//! Each feature weight carries an independent Gaussian belief. One labelled
//! observation updates the beliefs of its active features in closed form
//! (moment matching of the exact posterior); prediction maps the summed
//! belief through the probit link. Training is order-dependent, so `update`
//! takes `&mut self` while `predict`/`total_moments` are read-only and safe
//! to run concurrently on a frozen state.

use std::collections::HashMap;
use std::io::{self, BufRead, Write};

use thiserror::Error;

use crate::probit::{self, v_unchecked, w_unchecked};

/// Variances are clamped here after each update; analytically they stay
/// positive, but accumulated rounding over millions of updates might not.
pub const VARIANCE_FLOOR: f64 = 1e-12;

/// Opaque 64-bit feature identifier produced by the hashing encoder.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct FeatureId(pub u64);

/// Observation label: did the session contain a switch or not.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Label {
    Switch,
    NoSwitch,
}

impl Label {
    /// +1 for switch, -1 for no switch.
    pub fn sign(self) -> f64 {
        match self {
            Label::Switch => 1.0,
            Label::NoSwitch => -1.0,
        }
    }

    pub fn is_positive(self) -> bool {
        matches!(self, Label::Switch)
    }
}

#[derive(Debug, Error, PartialEq)]
pub enum ModelError {
    #[error("feature vector is empty; refusing a no-op update")]
    EmptyFeatureVector,
    #[error("duplicate feature id {0:?} in one vector")]
    DuplicateFeature(FeatureId),
    #[error("invalid model config: {0}")]
    InvalidConfig(String),
    #[error("invalid belief: variance must be positive, got {0}")]
    InvalidVariance(f64),
    #[error(transparent)]
    Probit(#[from] probit::ProbitError),
}

/// Gaussian belief over one feature weight.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GaussianBelief {
    mean: f64,
    variance: f64,
}

impl GaussianBelief {
    pub fn new(mean: f64, variance: f64) -> Result<Self, ModelError> {
        if !(variance.is_finite() && variance > 0.0) || !mean.is_finite() {
            return Err(ModelError::InvalidVariance(variance));
        }
        Ok(GaussianBelief { mean, variance })
    }

    pub fn mean(&self) -> f64 {
        self.mean
    }

    pub fn variance(&self) -> f64 {
        self.variance
    }
}

/// Sparse binary feature vector: one active id per feature-family instance.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FeatureVector {
    active_ids: Vec<FeatureId>,
}

impl FeatureVector {
    /// Builds a vector, rejecting duplicate ids (a duplicate means the
    /// one-active-coordinate-per-family contract was broken upstream).
    pub fn new(active_ids: Vec<FeatureId>) -> Result<Self, ModelError> {
        let mut seen = std::collections::HashSet::with_capacity(active_ids.len());
        for id in &active_ids {
            if !seen.insert(*id) {
                return Err(ModelError::DuplicateFeature(*id));
            }
        }
        Ok(FeatureVector { active_ids })
    }

    pub fn ids(&self) -> &[FeatureId] {
        &self.active_ids
    }

    pub fn len(&self) -> usize {
        self.active_ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.active_ids.is_empty()
    }
}

/// Hyperparameters: probit noise scale and the shared prior belief.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModelConfig {
    pub beta: f64,
    pub prior_mean: f64,
    pub prior_variance: f64,
}

impl ModelConfig {
    pub fn new(beta: f64, prior_mean: f64, prior_variance: f64) -> Result<Self, ModelError> {
        let cfg = ModelConfig {
            beta,
            prior_mean,
            prior_variance,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<(), ModelError> {
        if !(self.beta.is_finite() && self.beta > 0.0) {
            return Err(ModelError::InvalidConfig(format!(
                "beta must be > 0, got {}",
                self.beta
            )));
        }
        if !(self.prior_variance.is_finite() && self.prior_variance > 0.0) {
            return Err(ModelError::InvalidConfig(format!(
                "prior_variance must be > 0, got {}",
                self.prior_variance
            )));
        }
        if !self.prior_mean.is_finite() {
            return Err(ModelError::InvalidConfig(format!(
                "prior_mean must be finite, got {}",
                self.prior_mean
            )));
        }
        Ok(())
    }

    fn prior(&self) -> GaussianBelief {
        GaussianBelief {
            mean: self.prior_mean,
            variance: self.prior_variance,
        }
    }
}

impl Default for ModelConfig {
    /// β = 5.0 with a zero-mean unit-variance prior.
    fn default() -> Self {
        ModelConfig {
            beta: 5.0,
            prior_mean: 0.0,
            prior_variance: 1.0,
        }
    }
}

/// Summed belief over one feature vector: U and Σ² (which includes β²).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TotalMoments {
    pub total_mean: f64,
    pub total_variance: f64,
}

/// The trainable model: a belief per seen feature id plus hyperparameters.
/// Ids never seen by `update` behave exactly as if they held the prior.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelState {
    weights: HashMap<FeatureId, GaussianBelief>,
    config: ModelConfig,
    observations_seen: u64,
    variance_clamps: u64,
}

impl ModelState {
    pub fn new(config: ModelConfig) -> Self {
        ModelState {
            weights: HashMap::new(),
            config,
            observations_seen: 0,
            variance_clamps: 0,
        }
    }

    pub fn config(&self) -> &ModelConfig {
        &self.config
    }

    pub fn observations_seen(&self) -> u64 {
        self.observations_seen
    }

    /// How often the post-update variance hit [`VARIANCE_FLOOR`].
    pub fn variance_clamps(&self) -> u64 {
        self.variance_clamps
    }

    /// Number of feature ids with a stored (non-prior) belief.
    pub fn tracked_features(&self) -> usize {
        self.weights.len()
    }

    /// Belief for `id`: the stored one, or the prior if never updated.
    pub fn belief(&self, id: FeatureId) -> GaussianBelief {
        self.weights.get(&id).copied().unwrap_or(self.config.prior())
    }

    /// U = Σ active means, Σ² = Σ active variances + β².
    pub fn total_moments(&self, x: &FeatureVector) -> TotalMoments {
        let mut total_mean = 0.0;
        let mut total_variance = self.config.beta * self.config.beta;
        for id in x.ids() {
            let b = self.belief(*id);
            total_mean += b.mean;
            total_variance += b.variance;
        }
        TotalMoments {
            total_mean,
            total_variance,
        }
    }

    /// Predictive switch probability Φ(U/Σ), strictly inside (0, 1).
    pub fn predict(&self, x: &FeatureVector) -> f64 {
        let m = self.total_moments(x);
        probit::normal_cdf(m.total_mean / m.total_variance.sqrt())
    }

    /// One online learning step: moment-matched posterior for every active
    /// feature, inactive beliefs untouched. Every updated variance strictly
    /// decreases and stays positive.
    pub fn update(&mut self, x: &FeatureVector, y: Label) -> Result<(), ModelError> {
        if x.is_empty() {
            return Err(ModelError::EmptyFeatureVector);
        }
        let m = self.total_moments(x);
        let sigma = m.total_variance.sqrt();
        let t = y.sign() * m.total_mean / sigma;
        let vt = v_unchecked(t);
        let wt = w_unchecked(t);
        for id in x.ids() {
            let b = self.weights.entry(*id).or_insert(self.config.prior());
            let mean = b.mean + y.sign() * (b.variance / sigma) * vt;
            let mut variance = b.variance * (1.0 - (b.variance / m.total_variance) * wt);
            if variance < VARIANCE_FLOOR {
                variance = VARIANCE_FLOOR;
                self.variance_clamps += 1;
            }
            *b = GaussianBelief { mean, variance };
        }
        self.observations_seen += 1;
        Ok(())
    }

    /// Stored beliefs in unspecified order.
    pub fn iter_weights(&self) -> impl Iterator<Item = (FeatureId, GaussianBelief)> + '_ {
        self.weights.iter().map(|(id, b)| (*id, *b))
    }
}

// ---------------------------------------------------------------------------
// Model file format
// ---------------------------------------------------------------------------

/// First line of every model file.
pub const MODEL_FORMAT_VERSION: &str = "switchdetect-model-v1";

#[derive(Debug, Error)]
pub enum ModelFormatError {
    #[error(transparent)]
    Io(#[from] io::Error),
    #[error("missing or unsupported version header: {0:?}")]
    UnsupportedVersion(String),
    #[error("malformed model file at line {line}: {message}")]
    Malformed { line: u64, message: String },
    #[error("truncated model file: header promised {expected} weights, found {found}")]
    Truncated { expected: u64, found: u64 },
}

/// Writes the versioned line-oriented text format: a version line, a header
/// with hyperparameters and counters, then one `id<TAB>mean<TAB>variance`
/// record per feature id, sorted by id. Floats use the shortest decimal that
/// round-trips to the same f64, so serialize/deserialize is bit-exact; being
/// text, the format has no byte-order concerns.
pub fn serialize_model<W: Write>(state: &ModelState, mut out: W) -> Result<(), ModelFormatError> {
    writeln!(out, "{MODEL_FORMAT_VERSION}")?;
    writeln!(
        out,
        "beta={} prior_mean={} prior_variance={} observations_seen={} variance_clamps={} weights={}",
        state.config.beta,
        state.config.prior_mean,
        state.config.prior_variance,
        state.observations_seen,
        state.variance_clamps,
        state.weights.len()
    )?;
    let mut ids: Vec<FeatureId> = state.weights.keys().copied().collect();
    ids.sort_unstable();
    for id in ids {
        let b = state.weights[&id];
        writeln!(out, "{}\t{}\t{}", id.0, b.mean, b.variance)?;
    }
    Ok(())
}

pub fn deserialize_model<R: BufRead>(input: R) -> Result<ModelState, ModelFormatError> {
    let mut lines = input.lines();
    let version = lines
        .next()
        .transpose()?
        .ok_or_else(|| ModelFormatError::UnsupportedVersion(String::new()))?;
    if version != MODEL_FORMAT_VERSION {
        return Err(ModelFormatError::UnsupportedVersion(version));
    }
    let header = lines.next().transpose()?.ok_or(ModelFormatError::Malformed {
        line: 2,
        message: "missing header line".into(),
    })?;

    let mut fields: HashMap<&str, &str> = HashMap::new();
    for kv in header.split(' ') {
        let (k, v) = kv.split_once('=').ok_or_else(|| ModelFormatError::Malformed {
            line: 2,
            message: format!("expected key=value, got {kv:?}"),
        })?;
        fields.insert(k, v);
    }
    fn field<T: std::str::FromStr>(
        fields: &HashMap<&str, &str>,
        key: &str,
    ) -> Result<T, ModelFormatError> {
        fields
            .get(key)
            .ok_or_else(|| ModelFormatError::Malformed {
                line: 2,
                message: format!("missing header field {key}"),
            })?
            .parse()
            .map_err(|_| ModelFormatError::Malformed {
                line: 2,
                message: format!("unparseable header field {key}"),
            })
    }

    let config = ModelConfig {
        beta: field(&fields, "beta")?,
        prior_mean: field(&fields, "prior_mean")?,
        prior_variance: field(&fields, "prior_variance")?,
    };
    config.validate().map_err(|e| ModelFormatError::Malformed {
        line: 2,
        message: e.to_string(),
    })?;
    let observations_seen: u64 = field(&fields, "observations_seen")?;
    let variance_clamps: u64 = field(&fields, "variance_clamps")?;
    let expected: u64 = field(&fields, "weights")?;

    let mut weights = HashMap::with_capacity(expected as usize);
    let mut line_no = 2u64;
    for line in lines {
        let line = line?;
        line_no += 1;
        let mut parts = line.split('\t');
        let (id, mean, variance) = match (parts.next(), parts.next(), parts.next(), parts.next()) {
            (Some(id), Some(mean), Some(var), None) => (id, mean, var),
            _ => {
                return Err(ModelFormatError::Malformed {
                    line: line_no,
                    message: "expected id<TAB>mean<TAB>variance".into(),
                })
            }
        };
        let id: u64 = id.parse().map_err(|_| ModelFormatError::Malformed {
            line: line_no,
            message: format!("bad feature id {id:?}"),
        })?;
        let parse_f = |s: &str| -> Result<f64, ModelFormatError> {
            s.parse().map_err(|_| ModelFormatError::Malformed {
                line: line_no,
                message: format!("bad float {s:?}"),
            })
        };
        let belief = GaussianBelief::new(parse_f(mean)?, parse_f(variance)?).map_err(|e| {
            ModelFormatError::Malformed {
                line: line_no,
                message: e.to_string(),
            }
        })?;
        if weights.insert(FeatureId(id), belief).is_some() {
            return Err(ModelFormatError::Malformed {
                line: line_no,
                message: format!("duplicate feature id {id}"),
            });
        }
    }
    if weights.len() as u64 != expected {
        return Err(ModelFormatError::Truncated {
            expected,
            found: weights.len() as u64,
        });
    }
    Ok(ModelState {
        weights,
        config,
        observations_seen,
        variance_clamps,
    })
}
