//! Synthetic data with known cluster structure.
//!
//! [`factor_matrix`] builds observation matrices whose columns are noisy
//! multiples of mutually orthogonal latent factors, so the generating factor
//! of each column is the ground-truth cluster label. [`factor_panel`] builds
//! raw monthly panels (random-walk factors) in the ingest format.

use std::collections::BTreeSet;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::ingest::{PanelVariable, TimeSeriesPanel, VariableKind, VariableMeta};
use crate::matrix::{dot, mean, ObservationMatrix};
use crate::month::{Month, MonthRange};

pub const CATEGORIES: [&str; 5] = [
    "general economy",
    "housing market",
    "labor market",
    "rates",
    "spread",
];

#[derive(Debug, Clone, PartialEq)]
pub struct FactorMatrixSpec {
    pub n_rows: usize,
    pub n_cols: usize,
    pub n_factors: usize,
    /// Standard deviation of additive Gaussian noise; factors have unit sd.
    pub noise: f64,
    pub seed: u64,
}

/// A generated matrix together with the factor behind each column.
#[derive(Debug, Clone)]
pub struct SyntheticMatrix {
    pub matrix: ObservationMatrix,
    pub factor_of: Vec<usize>,
}

impl SyntheticMatrix {
    /// Ground-truth clusters: column indices grouped by factor.
    pub fn blocks(&self) -> BTreeSet<Vec<usize>> {
        group_by_factor(&self.factor_of)
    }
}

pub(crate) fn group_by_factor(factor_of: &[usize]) -> BTreeSet<Vec<usize>> {
    let k = factor_of.iter().max().map_or(0, |m| m + 1);
    let mut groups = vec![Vec::new(); k];
    for (j, &f) in factor_of.iter().enumerate() {
        groups[f].push(j);
    }
    groups.into_iter().filter(|g| !g.is_empty()).collect()
}

/// Demeaned, mutually orthogonal factor series with unit sample sd.
fn orthogonal_factors(n: usize, k: usize, rng: &mut ChaCha8Rng) -> Vec<Vec<f64>> {
    let mut out: Vec<Vec<f64>> = Vec::with_capacity(k);
    while out.len() < k {
        let mut v: Vec<f64> = (0..n).map(|_| rng.sample(StandardNormal)).collect();
        // two rounds of Gram-Schmidt against the constant vector and prior factors
        for _ in 0..2 {
            let mu = mean(&v);
            v.iter_mut().for_each(|x| *x -= mu);
            for f in &out {
                let proj = dot(&v, f) / dot(f, f);
                v.iter_mut().zip(f).for_each(|(x, y)| *x -= proj * y);
            }
        }
        let norm = dot(&v, &v).sqrt();
        if norm < 1e-8 {
            continue;
        }
        let scale = ((n - 1) as f64).sqrt() / norm;
        v.iter_mut().for_each(|x| *x *= scale);
        out.push(v);
    }
    out
}

/// Balanced random assignment of `p` items to `k` factors, each factor used
/// at least `p / k` times.
fn assign_factors(p: usize, k: usize, rng: &mut ChaCha8Rng) -> Vec<usize> {
    let mut a: Vec<usize> = (0..p).map(|j| j % k).collect();
    a.shuffle(rng);
    a
}

fn loading(rng: &mut ChaCha8Rng) -> f64 {
    let mag = rng.random_range(0.5..1.5);
    if rng.random_bool(0.5) {
        mag
    } else {
        -mag
    }
}

/// Columns `a_j · f_{b(j)} + c_j + noise · ε`, with orthogonal factors `f`,
/// loadings `|a_j| ∈ [0.5, 1.5)` of random sign and random offsets `c_j`.
pub fn factor_matrix(spec: &FactorMatrixSpec) -> Result<SyntheticMatrix> {
    let FactorMatrixSpec {
        n_rows: n,
        n_cols: p,
        n_factors: k,
        noise,
        seed,
    } = *spec;
    if k == 0 || k > p || k + 1 > n {
        return Err(Error::InvalidConfig(format!(
            "{k} orthogonal factors need 1 <= k <= {p} columns and k < {n} rows"
        )));
    }
    if !(noise >= 0.0 && noise.is_finite()) {
        return Err(Error::InvalidConfig(format!("noise must be >= 0, got {noise}")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let factors = orthogonal_factors(n, k, &mut rng);
    let factor_of = assign_factors(p, k, &mut rng);
    let columns = factor_of
        .iter()
        .map(|&b| {
            let a = loading(&mut rng);
            let offset = rng.random_range(-5.0..5.0);
            factors[b]
                .iter()
                .map(|f| {
                    let eps: f64 = rng.sample(StandardNormal);
                    a * f + offset + noise * eps
                })
                .collect()
        })
        .collect();
    let labels = (0..p).map(|j| format!("v{j:03}")).collect();
    Ok(SyntheticMatrix {
        matrix: ObservationMatrix::from_columns(columns, labels)?,
        factor_of,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct FactorPanelSpec {
    pub n_factors: usize,
    pub n_vars: usize,
    pub n_months: usize,
    pub noise: f64,
    pub seed: u64,
    pub start: Month,
}

#[derive(Debug, Clone)]
pub struct SyntheticPanel {
    pub panel: TimeSeriesPanel,
    pub factor_of: Vec<usize>,
}

/// Raw monthly panel driven by independent Gaussian random-walk factors.
///
/// Rate variables are `a·W_b(t) + noise·ε_t`; level variables are
/// `100·exp(0.05·(a·W_b(t) + noise·ε_t))`, so they stay strictly positive.
pub fn factor_panel(spec: &FactorPanelSpec) -> Result<SyntheticPanel> {
    let k = spec.n_factors;
    if k == 0 || k > spec.n_vars {
        return Err(Error::InvalidConfig(format!(
            "need 1 <= factors <= vars, got {k} factors for {} vars",
            spec.n_vars
        )));
    }
    if spec.n_months < 2 {
        return Err(Error::InvalidConfig("need at least two months".into()));
    }
    if !(spec.noise >= 0.0 && spec.noise.is_finite()) {
        return Err(Error::InvalidConfig(format!("noise must be >= 0, got {}", spec.noise)));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let walks: Vec<Vec<f64>> = (0..k)
        .map(|_| {
            let mut level = 0.0;
            (0..spec.n_months)
                .map(|_| {
                    let shock: f64 = rng.sample(StandardNormal);
                    level += shock;
                    level
                })
                .collect()
        })
        .collect();
    let factor_of = assign_factors(spec.n_vars, k, &mut rng);
    let variables = factor_of
        .iter()
        .enumerate()
        .map(|(j, &b)| {
            let kind = if rng.random_bool(0.5) {
                VariableKind::Rate
            } else {
                VariableKind::Level
            };
            let a = loading(&mut rng);
            let values = walks[b]
                .iter()
                .map(|w| {
                    let eps: f64 = rng.sample(StandardNormal);
                    let x = a * w + spec.noise * eps;
                    match kind {
                        VariableKind::Rate => x,
                        VariableKind::Level => 100.0 * (0.05 * x).exp(),
                    }
                })
                .collect();
            PanelVariable {
                meta: VariableMeta {
                    name: format!("mev{j:02}"),
                    kind,
                    category: CATEGORIES[j % CATEGORIES.len()].to_owned(),
                },
                values,
            }
        })
        .collect();
    let axis = MonthRange::with_len(spec.start, spec.n_months).expect("n_months >= 2");
    Ok(SyntheticPanel {
        panel: TimeSeriesPanel::new(axis, variables)?,
        factor_of,
    })
}
