//! Cosine similarity and its squared and demeaned (Pearson) variants.

use crate::error::{Error, Result};
use crate::matrix::{dot, mean};

const MIN_NORM: f64 = 1e-300;

/// A cosine of an angle, always inside [−1, 1].
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd)]
pub struct SimilarityValue(f64);

impl SimilarityValue {
    pub fn value(self) -> f64 {
        self.0
    }
}

fn check_lengths(x1: &[f64], x2: &[f64], min: usize) -> Result<()> {
    if x1.len() != x2.len() {
        return Err(Error::LengthMismatch {
            left: x1.len(),
            right: x2.len(),
        });
    }
    if x1.len() < min {
        return Err(Error::LengthMismatch {
            left: x1.len(),
            right: min,
        });
    }
    Ok(())
}

/// ⟨x1, x2⟩ / (‖x1‖·‖x2‖), clamped to [−1, 1].
pub fn cosine_similarity(x1: &[f64], x2: &[f64]) -> Result<SimilarityValue> {
    check_lengths(x1, x2, 1)?;
    let n1 = dot(x1, x1);
    let n2 = dot(x2, x2);
    if n1.sqrt() <= MIN_NORM || n2.sqrt() <= MIN_NORM {
        return Err(Error::ZeroNormVector);
    }
    // one square root of the product is exact for parallel integer vectors
    let denom = (n1 * n2).sqrt();
    let c = if denom.is_finite() && denom > 0.0 {
        dot(x1, x2) / denom
    } else {
        dot(x1, x2) / (n1.sqrt() * n2.sqrt())
    };
    Ok(SimilarityValue(c.clamp(-1.0, 1.0)))
}

/// Square of [`cosine_similarity`]; insensitive to the sign of either vector.
pub fn squared_cosine_similarity(x1: &[f64], x2: &[f64]) -> Result<f64> {
    let c = cosine_similarity(x1, x2)?.value();
    Ok(c * c)
}

/// Sample correlation, computed as the cosine of the demeaned vectors.
pub fn pearson_correlation(x1: &[f64], x2: &[f64]) -> Result<SimilarityValue> {
    check_lengths(x1, x2, 2)?;
    let m1 = mean(x1);
    let m2 = mean(x2);
    let d1: Vec<f64> = x1.iter().map(|v| v - m1).collect();
    let d2: Vec<f64> = x2.iter().map(|v| v - m2).collect();
    cosine_similarity(&d1, &d2)
}
