//! Seeded random instance generation for tests, property suites, and the
//! `random` CLI subcommand.

use rand::prelude::*;
use rand_distr::StandardNormal;

use crate::linalg::sym_eigen;
use crate::matrix::DenseMatrix;
use crate::subspace::Subspace;
use crate::tolerance::ToleranceConfig;

/// Matrix with i.i.d. standard normal entries.
pub fn random_gaussian(rows: usize, cols: usize, rng: &mut impl Rng) -> DenseMatrix {
    let entries: Vec<f64> = (0..rows * cols).map(|_| rng.sample(StandardNormal)).collect();
    DenseMatrix::new(rows, cols, entries).expect("gaussian entries are finite")
}

/// Spectral norm, via the largest eigenvalue of M^T M.
pub fn spectral_norm(m: &DenseMatrix, cfg: &ToleranceConfig) -> f64 {
    let gram = m.transpose().matmul(m).expect("shapes agree");
    let eig = sym_eigen(&gram, cfg).expect("square by construction");
    eig.eigenvalues.first().copied().unwrap_or(0.0).max(0.0).sqrt()
}

/// Random nonexpansive matrix: normal entries divided by the spectral norm.
pub fn random_nonexpansive(n: usize, rng: &mut impl Rng, cfg: &ToleranceConfig) -> DenseMatrix {
    random_nonexpansive_scaled(n, 1.0, rng, cfg)
}

/// As [`random_nonexpansive`], then shrunk by `scale` in (0, 1].
pub fn random_nonexpansive_scaled(
    n: usize,
    scale: f64,
    rng: &mut impl Rng,
    cfg: &ToleranceConfig,
) -> DenseMatrix {
    let g = random_gaussian(n, n, rng);
    let s = spectral_norm(&g, cfg);
    if s == 0.0 {
        return DenseMatrix::zeros(n, n);
    }
    g.scale(scale / s)
}

/// Random kappa-averaged matrix: (1-kappa) I + kappa N with N nonexpansive.
pub fn random_averaged(
    n: usize,
    kappa: f64,
    rng: &mut impl Rng,
    cfg: &ToleranceConfig,
) -> DenseMatrix {
    let nex = random_nonexpansive(n, rng, cfg);
    DenseMatrix::identity(n)
        .scale(1.0 - kappa)
        .add(&nex.scale(kappa))
        .expect("shapes agree")
}

/// Random d-dimensional subspace of R^n (orthonormalized Gaussian columns).
pub fn random_subspace(n: usize, d: usize, rng: &mut impl Rng, cfg: &ToleranceConfig) -> Subspace {
    Subspace::new(&random_gaussian(n, d, rng), cfg)
}

/// Random nonexpansive matrix with an engineered fixed subspace of the given
/// dimension: orthogonally conjugated block diag(I_k, N) where the moving
/// block N has spectral norm at most `contraction` < 1.
pub fn random_with_fixed_subspace(
    n: usize,
    fixed_dim: usize,
    contraction: f64,
    rng: &mut impl Rng,
    cfg: &ToleranceConfig,
) -> DenseMatrix {
    assert!(fixed_dim <= n);
    assert!((0.0..1.0).contains(&contraction));
    let q = Subspace::new(&random_gaussian(n, n, rng), cfg);
    let q = q.basis();
    let mut block = DenseMatrix::zeros(n, n);
    for i in 0..fixed_dim {
        block.set(i, i, 1.0);
    }
    if fixed_dim < n {
        let moving = random_nonexpansive_scaled(n - fixed_dim, contraction, rng, cfg);
        for i in 0..n - fixed_dim {
            for j in 0..n - fixed_dim {
                block.set(fixed_dim + i, fixed_dim + j, moving.get(i, j));
            }
        }
    }
    q.matmul(&block)
        .and_then(|m| m.matmul(&q.transpose()))
        .expect("shapes agree")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::averaged::is_nonexpansive;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn generated_matrices_are_nonexpansive() {
        let cfg = ToleranceConfig::default();
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        for _ in 0..10 {
            let m = random_nonexpansive(5, &mut rng, &cfg);
            assert!(is_nonexpansive(&m, &cfg).unwrap().is_psd);
        }
    }

    #[test]
    fn fixed_subspace_is_fixed() {
        let cfg = ToleranceConfig::default();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let r = random_with_fixed_subspace(6, 2, 0.9, &mut rng, &cfg);
        assert!(is_nonexpansive(&r, &cfg).unwrap().is_psd);
        // I - R has rank 4: the fixed subspace has dimension 2.
        let res = DenseMatrix::identity(6).sub(&r).unwrap();
        let gram = res.transpose().matmul(&res).unwrap();
        let eig = sym_eigen(&gram, &cfg).unwrap();
        let rank = eig.eigenvalues.iter().filter(|&&x| x > 1e-8).count();
        assert_eq!(rank, 4);
    }

    #[test]
    fn deterministic_per_seed() {
        let cfg = ToleranceConfig::default();
        let a = random_nonexpansive(4, &mut ChaCha8Rng::seed_from_u64(7), &cfg);
        let b = random_nonexpansive(4, &mut ChaCha8Rng::seed_from_u64(7), &cfg);
        assert_eq!(a, b);
    }
}
