//! Divisive variable clustering.
//!
//! Starting from one cluster holding every column, the engine repeatedly
//! picks a splittable cluster, divides it by comparing each member's squared
//! cosine similarity to the cluster's first and second principal components,
//! then sweeps all columns once, moving any column whose similarity to a
//! foreign cluster's first component beats its own.

mod config;
mod engine;

use std::collections::BTreeSet;

pub use config::{ClusteringConfig, SplitOrder};
pub use engine::{
    cluster_variables, cluster_variables_traced, reassignment_pass, representative,
    select_split_candidate, should_split, split_cluster, ClusteringRun, Representative, Split,
    SplitRecord,
};

use crate::error::Result;
use crate::matrix::{component_scores, ObservationMatrix};
use crate::similarity::squared_cosine_similarity;

/// Two squared similarities closer than this are treated as tied.
pub const SIMILARITY_TIE_TOL: f64 = 1e-12;

/// Eigenvalues within this (relative) distance of a stopping threshold count
/// as reaching it.
pub const LAMBDA_TIE_TOL: f64 = 1e-12;

/// A group of columns with cached leading eigenpairs.
#[derive(Debug, Clone, PartialEq)]
pub struct Cluster {
    id: usize,
    members: Vec<usize>,
    lambda1: f64,
    lambda2: f64,
    pc1: Vec<f64>,
    pc2: Option<Vec<f64>>,
    member_sim: Vec<f64>,
    unsplittable: bool,
}

impl Cluster {
    /// Builds a cluster over `members` (any order, no duplicates) of the
    /// centered matrix `m`.
    pub fn new(id: usize, mut members: Vec<usize>, m: &ObservationMatrix) -> Result<Self> {
        members.sort_unstable();
        members.dedup();
        let mut c = Self {
            id,
            members,
            lambda1: 0.0,
            lambda2: 0.0,
            pc1: Vec::new(),
            pc2: None,
            member_sim: Vec::new(),
            unsplittable: false,
        };
        c.refresh(m)?;
        Ok(c)
    }

    /// Recomputes the eigen caches from the current members.
    pub(crate) fn refresh(&mut self, m: &ObservationMatrix) -> Result<()> {
        assert!(!self.members.is_empty(), "cluster {} has no members", self.id);
        let sub = m.select_columns(&self.members);
        let k = self.members.len().min(2).min(m.n_rows());
        let mut pcs = component_scores(&sub, k)?;
        self.lambda1 = pcs.eigenvalues[0];
        if k == 2 {
            self.lambda2 = pcs.eigenvalues[1];
            self.pc2 = pcs.scores.pop();
        } else {
            self.lambda2 = 0.0;
            self.pc2 = None;
        }
        self.pc1 = pcs.scores.pop().expect("at least one component");
        self.member_sim = self
            .members
            .iter()
            .map(|&j| squared_cosine_similarity(m.column(j), &self.pc1))
            .collect::<Result<_>>()?;
        self.unsplittable = false;
        Ok(())
    }

    /// Creation index; the root is 0 and each split hands out the next one.
    pub fn id(&self) -> usize {
        self.id
    }

    /// Column indices, ascending.
    pub fn members(&self) -> &[usize] {
        &self.members
    }

    pub fn size(&self) -> usize {
        self.members.len()
    }

    pub fn lambda1(&self) -> f64 {
        self.lambda1
    }

    /// Zero for singletons.
    pub fn lambda2(&self) -> f64 {
        self.lambda2
    }

    pub fn pc1_score(&self) -> &[f64] {
        &self.pc1
    }

    pub fn pc2_score(&self) -> Option<&[f64]> {
        self.pc2.as_deref()
    }

    /// S_c² of each member to PC1, aligned with [`members`](Self::members).
    pub fn member_similarities(&self) -> &[f64] {
        &self.member_sim
    }

    pub fn avg_similarity(&self) -> f64 {
        self.member_sim.iter().sum::<f64>() / self.member_sim.len() as f64
    }

    pub fn min_similarity(&self) -> f64 {
        self.member_sim.iter().copied().fold(f64::INFINITY, f64::min)
    }

    /// Set after a split attempt produced an empty child.
    pub fn is_unsplittable(&self) -> bool {
        self.unsplittable
    }

    pub(crate) fn mark_unsplittable(&mut self) {
        self.unsplittable = true;
    }

    pub(crate) fn members_mut(&mut self) -> &mut Vec<usize> {
        &mut self.members
    }
}

/// Disjoint clusters covering every column, ordered by creation index.
#[derive(Debug, Clone, PartialEq)]
pub struct Partition {
    clusters: Vec<Cluster>,
    n_cols: usize,
}

impl Partition {
    /// The single-cluster partition of all columns.
    pub fn root(m: &ObservationMatrix) -> Result<Self> {
        let root = Cluster::new(0, (0..m.n_cols()).collect(), m)?;
        Ok(Self {
            clusters: vec![root],
            n_cols: m.n_cols(),
        })
    }

    /// Assembles a partition from prebuilt clusters, checking coverage.
    pub fn from_clusters(mut clusters: Vec<Cluster>, n_cols: usize) -> Result<Self> {
        clusters.sort_by_key(|c| c.id);
        let p = Self { clusters, n_cols };
        p.validate()?;
        Ok(p)
    }

    pub fn clusters(&self) -> &[Cluster] {
        &self.clusters
    }

    pub(crate) fn clusters_mut(&mut self) -> &mut Vec<Cluster> {
        &mut self.clusters
    }

    pub fn len(&self) -> usize {
        self.clusters.len()
    }

    pub fn is_empty(&self) -> bool {
        self.clusters.is_empty()
    }

    pub fn n_cols(&self) -> usize {
        self.n_cols
    }

    /// Position in [`clusters`](Self::clusters) of each column's cluster.
    pub fn assignment(&self) -> Vec<usize> {
        let mut out = vec![usize::MAX; self.n_cols];
        for (ci, c) in self.clusters.iter().enumerate() {
            for &j in &c.members {
                out[j] = ci;
            }
        }
        out
    }

    /// Membership as a set of sets, ignoring order and cached numbers.
    pub fn member_sets(&self) -> BTreeSet<Vec<usize>> {
        self.clusters.iter().map(|c| c.members.clone()).collect()
    }

    /// Checks the partition invariants: non-empty clusters, disjoint, covering
    /// `0..n_cols`.
    pub fn validate(&self) -> Result<()> {
        let mut seen = vec![false; self.n_cols];
        for c in &self.clusters {
            if c.members.is_empty() {
                return Err(crate::Error::InvalidMatrix(format!("cluster {} is empty", c.id)));
            }
            for &j in &c.members {
                if j >= self.n_cols || seen[j] {
                    return Err(crate::Error::InvalidMatrix(format!(
                        "column {j} out of range or assigned twice"
                    )));
                }
                seen[j] = true;
            }
        }
        if let Some(j) = seen.iter().position(|s| !s) {
            return Err(crate::Error::InvalidMatrix(format!("column {j} is unassigned")));
        }
        Ok(())
    }
}
