//! Bucket boundaries for continuous-ish feature values.
//!
//! Times and intervals default to powers-of-two edges (heavy-tailed log
//! data), popularities to decades, ratios to tenths. Everything is
//! overridable from the config file.

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum ConfigError {
    #[error("{name}: edges must be non-empty, start at 0 and be strictly ascending")]
    BadEdges { name: &'static str },
    #[error("invalid value for {name}: {message}")]
    BadValue { name: &'static str, message: String },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct BucketingConfig {
    pub time_bucket_edges: Vec<f64>,
    pub interval_bucket_edges: Vec<f64>,
    pub popularity_bucket_edges: Vec<f64>,
    pub ratio_bucket_edges: Vec<f64>,
}

fn powers_of_two_edges() -> Vec<f64> {
    let mut edges = vec![0.0];
    edges.extend((0..=14).map(|k| f64::from(1u32 << k)));
    edges
}

impl Default for BucketingConfig {
    fn default() -> Self {
        BucketingConfig {
            time_bucket_edges: powers_of_two_edges(),
            interval_bucket_edges: powers_of_two_edges(),
            popularity_bucket_edges: vec![0.0, 1.0, 10.0, 100.0, 1e3, 1e4, 1e5, 1e6],
            ratio_bucket_edges: (0..10).map(|k| f64::from(k) / 10.0).collect(),
        }
    }
}

/// Index of the half-open bucket [edges[i], edges[i+1]) containing `x`; the
/// last bucket is unbounded above. `x` below the first edge clamps to 0.
pub fn bucket(edges: &[f64], x: f64) -> usize {
    edges.partition_point(|e| *e <= x).saturating_sub(1)
}

impl BucketingConfig {
    pub fn validate(&self) -> Result<(), ConfigError> {
        for (name, edges) in [
            ("time_bucket_edges", &self.time_bucket_edges),
            ("interval_bucket_edges", &self.interval_bucket_edges),
            ("popularity_bucket_edges", &self.popularity_bucket_edges),
            ("ratio_bucket_edges", &self.ratio_bucket_edges),
        ] {
            let ascending = edges.windows(2).all(|w| w[0] < w[1]);
            if edges.is_empty() || edges[0] != 0.0 || !ascending {
                return Err(ConfigError::BadEdges { name });
            }
        }
        Ok(())
    }

    pub fn time_bucket(&self, t: u64) -> usize {
        bucket(&self.time_bucket_edges, t as f64)
    }

    pub fn interval_bucket(&self, dt: u64) -> usize {
        bucket(&self.interval_bucket_edges, dt as f64)
    }

    pub fn popularity_bucket(&self, count: u64) -> usize {
        bucket(&self.popularity_bucket_edges, count as f64)
    }

    pub fn ratio_bucket(&self, r: f64) -> usize {
        bucket(&self.ratio_bucket_edges, r)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_edges_are_valid() {
        BucketingConfig::default().validate().unwrap();
    }

    #[test]
    fn bucket_boundaries() {
        let cfg = BucketingConfig::default();
        assert_eq!(cfg.time_bucket(0), 0);
        assert_eq!(cfg.time_bucket(1), 1);
        assert_eq!(cfg.time_bucket(3), 2);
        assert_eq!(cfg.time_bucket(50), 6); // [32, 64)
        assert_eq!(cfg.time_bucket(350), 9); // [256, 512)
        assert_eq!(cfg.time_bucket(1 << 20), 15); // beyond last edge
        assert_eq!(cfg.ratio_bucket(0.0), 0);
        assert_eq!(cfg.ratio_bucket(1.0 / 3.0), 3);
        assert_eq!(cfg.ratio_bucket(1.0), 9);
        assert_eq!(cfg.popularity_bucket(0), 0);
        assert_eq!(cfg.popularity_bucket(7), 1);
        assert_eq!(cfg.popularity_bucket(1000), 4);
    }

    #[test]
    fn invalid_edges_rejected() {
        let mut cfg = BucketingConfig::default();
        cfg.ratio_bucket_edges = vec![0.1, 0.2];
        assert!(cfg.validate().is_err());
        cfg.ratio_bucket_edges = vec![0.0, 0.2, 0.2];
        assert!(cfg.validate().is_err());
        cfg.ratio_bucket_edges = vec![];
        assert!(cfg.validate().is_err());
    }
}
