//! Cyclic Jacobi eigensolver for dense symmetric matrices.
//!
//! Each rotation annihilates one off-diagonal entry; sweeping the upper
//! triangle row by row drives the matrix to diagonal form while the
//! accumulated rotations converge to the eigenvectors. Rotations whose target
//! entry is already negligible next to its two diagonal entries are skipped,
//! so degenerate eigenspaces are left as they are instead of being mixed by
//! 45° turns on rounding noise.

use super::SymmetricMatrix;
use crate::error::{Error, Result};

/// Sweep budget before [`Error::NonConvergence`] is raised.
pub const MAX_SWEEPS: usize = 100;

const SYMMETRY_TOL: f64 = 1e-10;
// entries within this distance of the largest |v_i| count as tied for sign fixing
const SIGN_TIE_TOL: f64 = 1e-12;

/// One eigenvalue with its unit-norm eigenvector.
///
/// The vector's sign is fixed: its largest-magnitude entry is positive, ties
/// resolved in favour of the lowest index.
#[derive(Debug, Clone, PartialEq)]
pub struct EigenPair {
    pub eigenvalue: f64,
    pub eigenvector: Vec<f64>,
}

/// Top `k` eigenpairs of `a`, sorted by descending eigenvalue.
///
/// Equal eigenvalues keep the solver's diagonal order. Output is a pure
/// function of the input bits.
pub fn eigen_symmetric(a: &SymmetricMatrix, k: usize) -> Result<Vec<EigenPair>> {
    let n = a.order();
    if k == 0 || k > n {
        return Err(Error::InvalidConfig(format!(
            "requested {k} eigenpairs of a matrix of order {n}"
        )));
    }
    check_symmetric(a)?;

    let mut m = a.as_slice().to_vec();
    let mut v = vec![0.0; n * n];
    for i in 0..n {
        v[i * n + i] = 1.0;
    }
    let scale = m.iter().map(|x| x * x).sum::<f64>().sqrt();
    let floor = f64::EPSILON * f64::EPSILON * scale;

    let mut converged = false;
    for _ in 0..MAX_SWEEPS {
        let mut rotations = 0usize;
        for p in 0..n.saturating_sub(1) {
            for q in p + 1..n {
                let apq = m[p * n + q];
                let app = m[p * n + p];
                let aqq = m[q * n + q];
                if apq.abs() <= f64::EPSILON * 0.5 * (app.abs() + aqq.abs()) || apq.abs() <= floor {
                    continue;
                }
                rotate(&mut m, &mut v, n, p, q);
                rotations += 1;
            }
        }
        if rotations == 0 {
            converged = true;
            break;
        }
    }
    if !converged {
        return Err(Error::NonConvergence(MAX_SWEEPS));
    }

    let mut order: Vec<usize> = (0..n).collect();
    // stable: equal eigenvalues stay in diagonal order
    order.sort_by(|&i, &j| m[j * n + j].total_cmp(&m[i * n + i]));

    Ok(order
        .into_iter()
        .take(k)
        .map(|i| {
            let mut vec: Vec<f64> = (0..n).map(|r| v[r * n + i]).collect();
            let norm = vec.iter().map(|x| x * x).sum::<f64>().sqrt();
            for x in &mut vec {
                *x /= norm;
            }
            fix_sign(&mut vec);
            EigenPair {
                eigenvalue: m[i * n + i],
                eigenvector: vec,
            }
        })
        .collect())
}

fn check_symmetric(a: &SymmetricMatrix) -> Result<()> {
    let n = a.order();
    let max_abs = a.as_slice().iter().fold(0.0f64, |acc, x| acc.max(x.abs()));
    let tol = SYMMETRY_TOL * max_abs.max(1.0);
    for i in 0..n {
        for j in i + 1..n {
            let gap = (a.get(i, j) - a.get(j, i)).abs();
            if gap > tol || gap.is_nan() {
                return Err(Error::NotSymmetric {
                    row: i,
                    col: j,
                    gap,
                });
            }
        }
    }
    Ok(())
}

/// Applies the rotation zeroing m[p,q] to the full symmetric matrix and
/// accumulates it into the eigenvector columns of `v`.
fn rotate(m: &mut [f64], v: &mut [f64], n: usize, p: usize, q: usize) {
    let apq = m[p * n + q];
    let app = m[p * n + p];
    let aqq = m[q * n + q];
    let tau = (aqq - app) / (2.0 * apq);
    let t = if tau >= 0.0 {
        1.0 / (tau + tau.hypot(1.0))
    } else {
        -1.0 / (-tau + tau.hypot(1.0))
    };
    let c = 1.0 / t.hypot(1.0);
    let s = t * c;

    for k in 0..n {
        if k == p || k == q {
            continue;
        }
        let akp = m[k * n + p];
        let akq = m[k * n + q];
        let new_kp = c * akp - s * akq;
        let new_kq = s * akp + c * akq;
        m[k * n + p] = new_kp;
        m[p * n + k] = new_kp;
        m[k * n + q] = new_kq;
        m[q * n + k] = new_kq;
    }
    m[p * n + p] = app - t * apq;
    m[q * n + q] = aqq + t * apq;
    m[p * n + q] = 0.0;
    m[q * n + p] = 0.0;

    for k in 0..n {
        let vkp = v[k * n + p];
        let vkq = v[k * n + q];
        v[k * n + p] = c * vkp - s * vkq;
        v[k * n + q] = s * vkp + c * vkq;
    }
}

fn fix_sign(vec: &mut [f64]) {
    let max_abs = vec.iter().fold(0.0f64, |acc, x| acc.max(x.abs()));
    if max_abs == 0.0 {
        return;
    }
    let pivot = vec
        .iter()
        .position(|x| x.abs() >= max_abs - SIGN_TIE_TOL)
        .unwrap_or(0);
    if vec[pivot] < 0.0 {
        for x in vec.iter_mut() {
            *x = -*x;
        }
    }
}
