//! Symmetric eigendecomposition (cyclic Jacobi), PSD testing,
//! orthonormalization, and principal-angle cosines.

use crate::error::{Error, Result};
use crate::matrix::{dot, norm2, DenseMatrix};
use crate::tolerance::ToleranceConfig;

/// Eigendecomposition of a symmetric matrix. Eigenvalues sorted descending,
/// eigenvectors are the matching orthonormal columns.
#[derive(Debug, Clone)]
pub struct SymEigen {
    pub eigenvalues: Vec<f64>,
    pub eigenvectors: DenseMatrix,
}

/// Outcome of a PSD test: the decision plus the smallest eigenvalue so
/// callers can certify strictness.
#[derive(Debug, Clone, Copy)]
pub struct PsdReport {
    pub is_psd: bool,
    /// Smallest eigenvalue of the symmetrized input.
    pub min_eigenvalue: f64,
    /// Threshold used: psd_tol * ||S||_1.
    pub threshold: f64,
}

/// Eigendecompose the symmetric part of `s` with the cyclic Jacobi method.
///
/// Deterministic: fixed sweep order and a fixed eigenvector sign convention
/// (first component of nonnegligible magnitude is positive).
pub fn sym_eigen(s: &DenseMatrix, cfg: &ToleranceConfig) -> Result<SymEigen> {
    if !s.is_square() {
        return Err(Error::Dimension(format!(
            "sym_eigen needs a square matrix, got {}x{}",
            s.rows(),
            s.cols()
        )));
    }
    let n = s.rows();
    let mut a = s.symmetrize()?;
    let mut v = DenseMatrix::identity(n);

    let fro: f64 = a.entries().iter().map(|x| x * x).sum::<f64>().sqrt();
    let stop = cfg.eig_tol * fro.max(f64::MIN_POSITIVE);

    for _sweep in 0..100 {
        let mut off = 0.0;
        for p in 0..n {
            for q in (p + 1)..n {
                off += a.get(p, q).abs();
            }
        }
        if off <= stop {
            break;
        }
        for p in 0..n {
            for q in (p + 1)..n {
                let apq = a.get(p, q);
                if apq.abs() <= f64::MIN_POSITIVE {
                    continue;
                }
                let app = a.get(p, p);
                let aqq = a.get(q, q);
                let theta = (aqq - app) / (2.0 * apq);
                // Smaller-magnitude root of t^2 + 2*theta*t - 1 = 0.
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let c = 1.0 / (t * t + 1.0).sqrt();
                let sn = t * c;

                for k in 0..n {
                    let akp = a.get(k, p);
                    let akq = a.get(k, q);
                    a.set(k, p, c * akp - sn * akq);
                    a.set(k, q, sn * akp + c * akq);
                }
                for k in 0..n {
                    let apk = a.get(p, k);
                    let aqk = a.get(q, k);
                    a.set(p, k, c * apk - sn * aqk);
                    a.set(q, k, sn * apk + c * aqk);
                }
                for k in 0..n {
                    let vkp = v.get(k, p);
                    let vkq = v.get(k, q);
                    v.set(k, p, c * vkp - sn * vkq);
                    v.set(k, q, sn * vkp + c * vkq);
                }
            }
        }
    }

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| a.get(j, j).partial_cmp(&a.get(i, i)).unwrap());

    let eigenvalues: Vec<f64> = order.iter().map(|&i| a.get(i, i)).collect();
    let mut columns: Vec<Vec<f64>> = order.iter().map(|&i| v.column(i)).collect();
    for col in &mut columns {
        let max = col.iter().fold(0.0_f64, |m, &x| m.max(x.abs()));
        if let Some(first) = col.iter().find(|x| x.abs() > 1e-12 * max) {
            if *first < 0.0 {
                col.iter_mut().for_each(|x| *x = -*x);
            }
        }
    }
    let eigenvectors = DenseMatrix::from_columns(n, &columns)?;
    Ok(SymEigen { eigenvalues, eigenvectors })
}

/// Test whether the symmetric part of `s` is PSD with relative slack
/// psd_tol * ||S||_1. The scale is floored at 1 so that near-zero matrices
/// (e.g. I - R^T R for an exact isometry) keep a usable absolute slack.
pub fn is_psd(s: &DenseMatrix, cfg: &ToleranceConfig) -> Result<PsdReport> {
    let eig = sym_eigen(s, cfg)?;
    let min_eigenvalue = eig.eigenvalues.last().copied().unwrap_or(0.0);
    let threshold = cfg.psd_tol * s.one_norm().max(1.0);
    Ok(PsdReport {
        is_psd: min_eigenvalue >= -threshold,
        min_eigenvalue,
        threshold,
    })
}

/// Orthonormalize the columns of `m` with modified Gram-Schmidt plus one
/// re-orthogonalization pass. Columns whose residual falls below
/// rank_tol * (largest input column norm) are dropped; the result may have
/// fewer columns than the input (possibly zero).
pub fn orthonormalize(m: &DenseMatrix, cfg: &ToleranceConfig) -> DenseMatrix {
    let n = m.rows();
    let max_norm = (0..m.cols())
        .map(|j| norm2(&m.column(j)))
        .fold(0.0, f64::max);
    let cutoff = cfg.rank_tol * max_norm;

    let mut kept: Vec<Vec<f64>> = Vec::new();
    for j in 0..m.cols() {
        let mut w = m.column(j);
        for _pass in 0..2 {
            for q in &kept {
                let c = dot(&w, q);
                for (wi, qi) in w.iter_mut().zip(q) {
                    *wi -= c * qi;
                }
            }
        }
        let nw = norm2(&w);
        if nw > cutoff && nw > 0.0 {
            w.iter_mut().for_each(|x| *x /= nw);
            kept.push(w);
        }
    }
    DenseMatrix::from_columns(n, &kept).expect("columns share row count")
}

/// Principal-angle cosines between two orthonormal bases: the singular values
/// of Qu^T Qv, descending and clamped to [0, 1]. Computed as square roots of
/// the eigenvalues of the Gram matrix (Qu^T Qv)^T (Qu^T Qv).
pub fn singular_cosines(
    qu: &DenseMatrix,
    qv: &DenseMatrix,
    cfg: &ToleranceConfig,
) -> Result<Vec<f64>> {
    if qu.rows() != qv.rows() {
        return Err(Error::Dimension(format!(
            "bases live in different ambient spaces: {} vs {}",
            qu.rows(),
            qv.rows()
        )));
    }
    let k = qu.cols().min(qv.cols());
    if k == 0 {
        return Ok(Vec::new());
    }
    let g = qu.transpose().matmul(qv)?;
    let gram = g.transpose().matmul(&g)?;
    let eig = sym_eigen(&gram, cfg)?;
    Ok(eig
        .eigenvalues
        .iter()
        .take(k)
        .map(|&l| l.clamp(0.0, 1.0).sqrt().clamp(0.0, 1.0))
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use rand::prelude::*;
    use rand_chacha::ChaCha8Rng;

    fn cfg() -> ToleranceConfig {
        ToleranceConfig::default()
    }

    #[test]
    fn eigen_diagonal() {
        let s = DenseMatrix::from_rows(&[vec![2.0, 0.0], vec![0.0, 1.0]]).unwrap();
        let e = sym_eigen(&s, &cfg()).unwrap();
        assert_abs_diff_eq!(e.eigenvalues[0], 2.0, epsilon = 1e-12);
        assert_abs_diff_eq!(e.eigenvalues[1], 1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(e.eigenvectors.get(0, 0), 1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(e.eigenvectors.get(1, 1), 1.0, epsilon = 1e-12);
    }

    #[test]
    fn eigen_b_matrix_of_worked_example() {
        // (1/2)[[2,-1],[-1,4]] has eigenvalues (3 +/- sqrt 2)/2.
        let s = DenseMatrix::from_rows(&[vec![1.0, -0.5], vec![-0.5, 2.0]]).unwrap();
        let e = sym_eigen(&s, &cfg()).unwrap();
        let s2 = 2.0_f64.sqrt();
        assert_abs_diff_eq!(e.eigenvalues[0], (3.0 + s2) / 2.0, epsilon = 1e-12);
        assert_abs_diff_eq!(e.eigenvalues[1], (3.0 - s2) / 2.0, epsilon = 1e-12);
    }

    fn random_symmetric(n: usize, rng: &mut impl Rng) -> DenseMatrix {
        let mut m = DenseMatrix::zeros(n, n);
        for i in 0..n {
            for j in i..n {
                let v: f64 = rng.gen_range(-1.0..1.0);
                m.set(i, j, v);
                m.set(j, i, v);
            }
        }
        m
    }

    #[test]
    fn eigen_reconstruction_random_6x6() {
        let mut rng = ChaCha8Rng::seed_from_u64(42);
        let s = random_symmetric(6, &mut rng);
        let e = sym_eigen(&s, &cfg()).unwrap();
        let n = 6;
        // V Lambda V^T
        let mut lam = DenseMatrix::zeros(n, n);
        for i in 0..n {
            lam.set(i, i, e.eigenvalues[i]);
        }
        let rec = e
            .eigenvectors
            .matmul(&lam)
            .unwrap()
            .matmul(&e.eigenvectors.transpose())
            .unwrap();
        let err = rec.sub(&s).unwrap().max_abs();
        assert!(err < 1e-10, "reconstruction error {err}");
        // V^T V = I
        let vtv = e.eigenvectors.transpose().matmul(&e.eigenvectors).unwrap();
        let dev = vtv.sub(&DenseMatrix::identity(n)).unwrap().max_abs();
        assert!(dev < 1e-12);
    }

    #[test]
    fn eigen_rejects_nonsquare() {
        let m = DenseMatrix::zeros(2, 3);
        assert!(sym_eigen(&m, &cfg()).is_err());
    }

    #[test]
    fn psd_identity() {
        let r = is_psd(&DenseMatrix::identity(3), &cfg()).unwrap();
        assert!(r.is_psd);
        assert_abs_diff_eq!(r.min_eigenvalue, 1.0, epsilon = 1e-12);
    }

    #[test]
    fn psd_indefinite() {
        let s = DenseMatrix::from_rows(&[vec![1.0, 2.0], vec![2.0, 1.0]]).unwrap();
        let r = is_psd(&s, &cfg()).unwrap();
        assert!(!r.is_psd);
        assert_abs_diff_eq!(r.min_eigenvalue, -1.0, epsilon = 1e-12);
    }

    #[test]
    fn orthonormalize_single_column() {
        let m = DenseMatrix::from_rows(&[vec![1.0], vec![1.0]]).unwrap();
        let q = orthonormalize(&m, &cfg());
        let r = 1.0 / 2.0_f64.sqrt();
        assert_abs_diff_eq!(q.get(0, 0), r, epsilon = 1e-12);
        assert_abs_diff_eq!(q.get(1, 0), r, epsilon = 1e-12);
    }

    #[test]
    fn orthonormalize_drops_dependent_columns() {
        let m = DenseMatrix::from_rows(&[vec![1.0, 2.0], vec![0.0, 0.0]]).unwrap();
        let q = orthonormalize(&m, &cfg());
        assert_eq!(q.cols(), 1);
        assert_abs_diff_eq!(q.get(0, 0), 1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(q.get(1, 0), 0.0, epsilon = 1e-12);
    }

    #[test]
    fn orthonormalize_full_rank_gram() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let mut m = DenseMatrix::zeros(8, 5);
        for i in 0..8 {
            for j in 0..5 {
                m.set(i, j, rng.gen_range(-1.0..1.0));
            }
        }
        let q = orthonormalize(&m, &cfg());
        assert_eq!(q.cols(), 5);
        let g = q.transpose().matmul(&q).unwrap();
        let dev = g.sub(&DenseMatrix::identity(5)).unwrap().max_abs();
        assert!(dev < 1e-12, "Gram deviation {dev}");
    }

    #[test]
    fn orthonormalize_empty_input() {
        let m = DenseMatrix::zeros(3, 0);
        let q = orthonormalize(&m, &cfg());
        assert_eq!(q.cols(), 0);
        assert_eq!(q.rows(), 3);
    }

    #[test]
    fn cosines_line_pair() {
        let qu = DenseMatrix::from_rows(&[vec![1.0], vec![0.0]]).unwrap();
        let r = 1.0 / 2.0_f64.sqrt();
        let qv = DenseMatrix::from_rows(&[vec![r], vec![r]]).unwrap();
        let cos = singular_cosines(&qu, &qv, &cfg()).unwrap();
        assert_eq!(cos.len(), 1);
        assert_abs_diff_eq!(cos[0], r, epsilon = 1e-12);
    }

    #[test]
    fn cosines_identical_and_orthogonal() {
        let e1 = DenseMatrix::from_rows(&[vec![1.0], vec![0.0]]).unwrap();
        let e2 = DenseMatrix::from_rows(&[vec![0.0], vec![1.0]]).unwrap();
        let same = singular_cosines(&e1, &e1, &cfg()).unwrap();
        assert_abs_diff_eq!(same[0], 1.0, epsilon = 1e-12);
        let orth = singular_cosines(&e1, &e2, &cfg()).unwrap();
        assert_abs_diff_eq!(orth[0], 0.0, epsilon = 1e-12);
    }

    #[test]
    fn cosines_row_mismatch() {
        let a = DenseMatrix::zeros(2, 1);
        let b = DenseMatrix::zeros(3, 1);
        assert!(singular_cosines(&a, &b, &cfg()).is_err());
    }
}
