use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Which splittable cluster is divided first.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SplitOrder {
    #[default]
    LargestLambda2,
    LargestLambdaRatio,
    LargestSize,
    SmallestAvgSim,
    SmallestMinSim,
}

impl SplitOrder {
    pub const ALL: [SplitOrder; 5] = [
        SplitOrder::LargestLambda2,
        SplitOrder::LargestLambdaRatio,
        SplitOrder::LargestSize,
        SplitOrder::SmallestAvgSim,
        SplitOrder::SmallestMinSim,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            SplitOrder::LargestLambda2 => "largest_lambda2",
            SplitOrder::LargestLambdaRatio => "largest_lambda_ratio",
            SplitOrder::LargestSize => "largest_size",
            SplitOrder::SmallestAvgSim => "smallest_avg_sim",
            SplitOrder::SmallestMinSim => "smallest_min_sim",
        }
    }
}

impl fmt::Display for SplitOrder {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Accepts both the long names and the short CLI aliases
/// (`lambda2`, `lambda_ratio`, `size`, `avg_sim`, `min_sim`).
impl FromStr for SplitOrder {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let short = s
            .strip_prefix("largest_")
            .or_else(|| s.strip_prefix("smallest_"))
            .unwrap_or(s);
        match short {
            "lambda2" => Ok(SplitOrder::LargestLambda2),
            "lambda_ratio" => Ok(SplitOrder::LargestLambdaRatio),
            "size" => Ok(SplitOrder::LargestSize),
            "avg_sim" => Ok(SplitOrder::SmallestAvgSim),
            "min_sim" => Ok(SplitOrder::SmallestMinSim),
            _ => Err(Error::InvalidConfig(format!("unknown split order `{s}`"))),
        }
    }
}

/// Stopping rules and split ordering for [`cluster_variables`](super::cluster_variables).
///
/// A cluster stops splitting as soon as any configured rule fires. Ties in
/// split ordering go to the cluster created first.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClusteringConfig {
    /// Stop when the second eigenvalue falls below this.
    pub stop_lambda2: f64,
    /// Clusters with at most this many members are never split.
    pub stop_min_size: usize,
    /// Stop when the mean member S_c² to PC1 reaches this.
    pub stop_min_avg_sim: Option<f64>,
    /// Stop when the smallest member S_c² to PC1 reaches this.
    pub stop_min_min_sim: Option<f64>,
    pub max_clusters: Option<usize>,
    pub split_order: SplitOrder,
}

impl Default for ClusteringConfig {
    fn default() -> Self {
        Self {
            stop_lambda2: 1.0,
            stop_min_size: 1,
            stop_min_avg_sim: None,
            stop_min_min_sim: None,
            max_clusters: None,
            split_order: SplitOrder::default(),
        }
    }
}

impl ClusteringConfig {
    pub fn with_stop_lambda2(mut self, v: f64) -> Self {
        self.stop_lambda2 = v;
        self
    }

    pub fn with_max_clusters(mut self, v: usize) -> Self {
        self.max_clusters = Some(v);
        self
    }

    pub fn with_split_order(mut self, v: SplitOrder) -> Self {
        self.split_order = v;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !self.stop_lambda2.is_finite() || self.stop_lambda2 < 0.0 {
            return Err(Error::InvalidConfig(format!(
                "stop_lambda2 must be a finite non-negative number, got {}",
                self.stop_lambda2
            )));
        }
        for (name, v) in [
            ("stop_min_avg_sim", self.stop_min_avg_sim),
            ("stop_min_min_sim", self.stop_min_min_sim),
        ] {
            if let Some(v) = v {
                if !(0.0..=1.0).contains(&v) {
                    return Err(Error::InvalidConfig(format!("{name} must lie in [0, 1], got {v}")));
                }
            }
        }
        if self.max_clusters == Some(0) {
            return Err(Error::InvalidConfig("max_clusters must be at least 1".into()));
        }
        Ok(())
    }
}
