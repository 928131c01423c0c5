use super::{dot, eigen_symmetric, mean, sample_covariance, ObservationMatrix, SymmetricMatrix};
use crate::error::{Error, Result};

/// Leading principal components of a centered observation matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct PrincipalComponentSet {
    /// Non-increasing eigenvalues of the sample covariance.
    pub eigenvalues: Vec<f64>,
    /// Unit-norm weight vectors of length p.
    pub loadings: Vec<Vec<f64>>,
    /// Score vectors `X·w_i` of length n.
    pub scores: Vec<Vec<f64>>,
}

/// Eigenvalues and score vectors without loadings.
#[derive(Debug, Clone, PartialEq)]
pub struct ComponentScores {
    pub eigenvalues: Vec<f64>,
    pub scores: Vec<Vec<f64>>,
}

pub(crate) fn check_centered(m: &ObservationMatrix) -> Result<()> {
    for (j, c) in m.columns().enumerate() {
        let mu = mean(c);
        let rms = (dot(c, c) / c.len() as f64).sqrt();
        if mu.abs() > 1e-8 * rms.max(1.0) {
            return Err(Error::NotCentered {
                label: m.label(j).to_owned(),
                mean: mu,
            });
        }
    }
    Ok(())
}

fn check_k(m: &ObservationMatrix, k: usize) -> Result<()> {
    let limit = m.n_rows().min(m.n_cols());
    if k == 0 || k > limit {
        return Err(Error::InvalidConfig(format!(
            "k = {k} components requested, allowed 1..={limit}"
        )));
    }
    Ok(())
}

/// First `k` principal components from the eigenvectors of the sample
/// covariance. Columns must already be centered.
pub fn principal_components(m: &ObservationMatrix, k: usize) -> Result<PrincipalComponentSet> {
    check_k(m, k)?;
    check_centered(m)?;
    let cov = sample_covariance(m);
    let pairs = eigen_symmetric(&cov, k)?;
    let mut out = PrincipalComponentSet {
        eigenvalues: Vec::with_capacity(k),
        loadings: Vec::with_capacity(k),
        scores: Vec::with_capacity(k),
    };
    for pair in pairs {
        let mut score = vec![0.0; m.n_rows()];
        for (w, col) in pair.eigenvector.iter().zip(m.columns()) {
            for (s, x) in score.iter_mut().zip(col) {
                *s += w * x;
            }
        }
        out.eigenvalues.push(pair.eigenvalue);
        out.loadings.push(pair.eigenvector);
        out.scores.push(score);
    }
    Ok(out)
}

/// Eigenvalues and scores of the first `k` components, computed on whichever
/// side of the data is smaller.
///
/// When p > n the n×n matrix `X·Xᵀ/(n−1)` shares the nonzero spectrum of the
/// covariance, and each score equals `sqrt((n−1)·λ)·u` for its unit
/// eigenvector `u`. Scores may differ in sign from [`principal_components`];
/// components with zero eigenvalue come back as zero vectors.
pub fn component_scores(m: &ObservationMatrix, k: usize) -> Result<ComponentScores> {
    check_k(m, k)?;
    if m.n_cols() <= m.n_rows() {
        let pcs = principal_components(m, k)?;
        return Ok(ComponentScores {
            eigenvalues: pcs.eigenvalues,
            scores: pcs.scores,
        });
    }
    check_centered(m)?;
    let n = m.n_rows();
    let denom = (n - 1) as f64;
    let mut gram = vec![0.0; n * n];
    for col in m.columns() {
        for a in 0..n {
            let xa = col[a];
            for b in a..n {
                gram[a * n + b] += xa * col[b];
            }
        }
    }
    for a in 0..n {
        for b in a..n {
            let v = gram[a * n + b] / denom;
            gram[a * n + b] = v;
            gram[b * n + a] = v;
        }
    }
    let gram = SymmetricMatrix::from_row_major(n, gram)?;
    let pairs = eigen_symmetric(&gram, k)?;
    let mut out = ComponentScores {
        eigenvalues: Vec::with_capacity(k),
        scores: Vec::with_capacity(k),
    };
    for pair in pairs {
        let lambda = pair.eigenvalue;
        let scale = (denom * lambda.max(0.0)).sqrt();
        out.eigenvalues.push(lambda);
        out.scores.push(pair.eigenvector.iter().map(|u| scale * u).collect());
    }
    Ok(out)
}
