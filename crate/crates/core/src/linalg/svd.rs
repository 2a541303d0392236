//! One-sided Jacobi SVD and the spectral quantities built on it.

use serde::{Deserialize, Serialize};

use super::{axpy, dot, norm, DenseMatrix};
use crate::error::{Error, Result};

const MAX_SWEEPS: usize = 80;

/// Thin SVD truncated at the numerical rank: `A ≈ U · diag(sigma) · Vᵀ`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SvdFactors {
    /// m × r, orthonormal columns.
    pub u: DenseMatrix,
    /// Strictly positive, nonincreasing.
    pub sigma: Vec<f64>,
    /// n × r, orthonormal columns.
    pub v: DenseMatrix,
    pub numerical_rank: usize,
    /// Absolute cutoff below which singular values were discarded.
    pub tolerance: f64,
}

impl SvdFactors {
    pub fn sigma_max(&self) -> f64 {
        self.sigma[0]
    }

    pub fn sigma_min(&self) -> f64 {
        self.sigma[self.numerical_rank - 1]
    }

    /// `Σ σᵢ² / σ_min²`, i.e. `‖A†‖²‖A‖_F²` over the retained spectrum.
    pub fn scaled_condition(&self) -> f64 {
        let s = self.sigma_min();
        self.sigma.iter().map(|x| x * x).sum::<f64>() / (s * s)
    }

    pub fn condition_number(&self) -> f64 {
        self.sigma_max() / self.sigma_min()
    }

    pub fn reconstruct(&self) -> DenseMatrix {
        let us = scale_columns(&self.u, &self.sigma);
        us.matmul(&self.v.transpose()).expect("factor shapes agree")
    }

    /// `V · diag(1/σ) · Uᵀ`.
    pub fn pseudoinverse(&self) -> DenseMatrix {
        let inv: Vec<f64> = self.sigma.iter().map(|s| 1.0 / s).collect();
        let vs = scale_columns(&self.v, &inv);
        vs.matmul(&self.u.transpose()).expect("factor shapes agree")
    }

    pub fn u_column(&self, i: usize) -> Vec<f64> {
        self.u.column(i)
    }

    pub fn v_column(&self, i: usize) -> Vec<f64> {
        self.v.column(i)
    }
}

fn scale_columns(m: &DenseMatrix, s: &[f64]) -> DenseMatrix {
    let mut out = m.clone();
    for i in 0..m.rows() {
        for (j, &sj) in s.iter().enumerate() {
            out[(i, j)] *= sj;
        }
    }
    out
}

/// Relative truncation threshold `max(m, n) · ε`.
pub fn default_rank_tolerance(a: &DenseMatrix) -> f64 {
    a.rows().max(a.cols()) as f64 * f64::EPSILON
}

pub fn svd(a: &DenseMatrix) -> Result<SvdFactors> {
    svd_with_tolerance(a, default_rank_tolerance(a))
}

/// SVD keeping singular values above `rel_tol · σ₁`.
pub fn svd_with_tolerance(a: &DenseMatrix, rel_tol: f64) -> Result<SvdFactors> {
    if !a.all_finite() {
        return Err(Error::NonFinite(0));
    }
    if a.is_zero() {
        return Err(Error::ZeroMatrix);
    }
    let transposed = a.rows() < a.cols();
    let work = if transposed { a.transpose() } else { a.clone() };
    let (m, n) = work.shape();

    // Columns of `work`, orthogonalised in place; `vcols` accumulates the rotations.
    let mut cols: Vec<Vec<f64>> = (0..n).map(|j| work.column(j)).collect();
    let mut vcols: Vec<Vec<f64>> = (0..n)
        .map(|j| {
            let mut e = vec![0.0; n];
            e[j] = 1.0;
            e
        })
        .collect();
    let threshold = f64::EPSILON * m as f64;

    for _ in 0..MAX_SWEEPS {
        let mut rotated = false;
        for p in 0..n.saturating_sub(1) {
            for q in p + 1..n {
                let alpha = dot(&cols[p], &cols[p]);
                let beta = dot(&cols[q], &cols[q]);
                let gamma = dot(&cols[p], &cols[q]);
                if alpha == 0.0 || beta == 0.0 || gamma.abs() <= threshold * (alpha * beta).sqrt() {
                    continue;
                }
                rotated = true;
                let zeta = (beta - alpha) / (2.0 * gamma);
                let t = zeta.signum() / (zeta.abs() + (1.0 + zeta * zeta).sqrt());
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = c * t;
                rotate(&mut cols, p, q, c, s);
                rotate(&mut vcols, p, q, c, s);
            }
        }
        if !rotated {
            break;
        }
    }

    let mut order: Vec<(usize, f64)> = cols.iter().map(|c| norm(c)).enumerate().collect();
    order.sort_by(|x, y| y.1.total_cmp(&x.1).then(x.0.cmp(&y.0)));
    let sigma1 = order[0].1;
    let tolerance = rel_tol * sigma1;
    let kept: Vec<(usize, f64)> = order.into_iter().filter(|&(_, s)| s > tolerance).collect();
    let rank = kept.len();

    let left: Vec<Vec<f64>> = kept.iter().map(|&(j, s)| cols[j].iter().map(|x| x / s).collect()).collect();
    let right: Vec<Vec<f64>> = kept.iter().map(|&(j, _)| vcols[j].clone()).collect();
    let sigma: Vec<f64> = kept.iter().map(|&(_, s)| s).collect();

    let left = DenseMatrix::from_columns(m, &left)?;
    let right = DenseMatrix::from_columns(n, &right)?;
    let (u, v) = if transposed { (right, left) } else { (left, right) };
    Ok(SvdFactors { u, sigma, v, numerical_rank: rank, tolerance })
}

fn rotate(cols: &mut [Vec<f64>], p: usize, q: usize, c: f64, s: f64) {
    let (lo, hi) = cols.split_at_mut(q);
    for (x, y) in lo[p].iter_mut().zip(hi[0].iter_mut()) {
        let (xp, xq) = (*x, *y);
        *x = c * xp - s * xq;
        *y = s * xp + c * xq;
    }
}

/// Moore–Penrose pseudoinverse over singular values above `rel_tol · σ₁`.
/// A non-positive `rel_tol` selects the default cutoff. The zero matrix maps
/// to the zero matrix of transposed shape.
pub fn pseudoinverse(a: &DenseMatrix, rel_tol: f64) -> Result<DenseMatrix> {
    if a.is_zero() && a.all_finite() {
        return Ok(DenseMatrix::zeros(a.cols(), a.rows()));
    }
    let tol = if rel_tol > 0.0 { rel_tol } else { default_rank_tolerance(a) };
    Ok(svd_with_tolerance(a, tol)?.pseudoinverse())
}

pub fn pseudoinverse_default(a: &DenseMatrix) -> Result<DenseMatrix> {
    pseudoinverse(a, 0.0)
}

pub fn spectral_norm(a: &DenseMatrix) -> Result<f64> {
    Ok(svd(a)?.sigma_max())
}

pub fn frobenius_norm(a: &DenseMatrix) -> f64 {
    norm(a.as_slice())
}

pub fn sigma_min_nonzero(a: &DenseMatrix) -> Result<f64> {
    Ok(svd(a)?.sigma_min())
}

/// `R = ‖A†‖² ‖A‖_F²`.
pub fn scaled_condition_r(a: &DenseMatrix) -> Result<f64> {
    Ok(svd(a)?.scaled_condition())
}

/// Modified Gram–Schmidt with one reorthogonalisation pass.
pub fn orthonormalize_columns(a: &DenseMatrix) -> Result<DenseMatrix> {
    let (m, n) = a.shape();
    let mut q: Vec<Vec<f64>> = Vec::with_capacity(n);
    let mut first_pivot = None;
    for j in 0..n {
        let mut v = a.column(j);
        for _ in 0..2 {
            for qk in &q {
                let c = dot(qk, &v);
                axpy(-c, qk, &mut v);
            }
        }
        let pivot = norm(&v);
        let reference = *first_pivot.get_or_insert(pivot);
        if pivot == 0.0 || pivot < 1e-12 * reference {
            return Err(Error::DependentColumns(j));
        }
        v.iter_mut().for_each(|x| *x /= pivot);
        q.push(v);
    }
    DenseMatrix::from_columns(m, &q)
}
