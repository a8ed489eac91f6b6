//! Modulus of averagedness of nonexpansive matrices.
//!
//! The exact route reduces kappa(M) to the largest eigenvalue of
//! D^{-1} U^T A U D^{-1} with A = (I-M)^T (I-M) and B = 2I - (M+M^T);
//! the bisection route works directly on the monotone PSD characterization
//! (2k-1)I - (M^T M - (1-k)(M+M^T)) >= 0; the sampling route evaluates the
//! Rayleigh-type quotient ||z-Mz||^2 / (2<z, z-Mz>) on random unit vectors
//! and yields a lower bound.

use rand::prelude::*;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{is_psd, sym_eigen, PsdReport};
use crate::matrix::{dot, norm2, DenseMatrix};
use crate::tolerance::ToleranceConfig;

/// How a modulus value was obtained.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Route {
    ExactEig,
    Bisection,
    ClosedForm,
    QuotientSample,
}

/// Evidence attached to a computed modulus.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Certificate {
    /// Largest eigenvalue of the reduced matrix C (exact route) or the
    /// final kappa estimate (bisection).
    pub achieving_eigenvalue: f64,
    /// Smallest eigenvalue of the averagedness matrix at kappa.
    pub psd_margin_at_kappa: f64,
    /// Smallest eigenvalue of the averagedness matrix at kappa - 1e-6;
    /// expected negative when kappa is minimal and positive.
    pub psd_margin_below: f64,
    /// Direction achieving the modulus, when available.
    pub witness: Option<Vec<f64>>,
}

/// Computed modulus of averagedness with its certificate.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ModulusReport {
    pub kappa: f64,
    pub route: Route,
    pub certificate: Option<Certificate>,
    /// Number of positive eigenvalues of B = 2I - (M + M^T).
    pub d: usize,
}

/// Test nonexpansiveness: I - M^T M must be PSD.
pub fn is_nonexpansive(m: &DenseMatrix, cfg: &ToleranceConfig) -> Result<PsdReport> {
    if !m.is_square() {
        return Err(Error::Dimension("nonexpansiveness needs a square matrix".into()));
    }
    let n = m.rows();
    let s = DenseMatrix::identity(n).sub(&m.transpose().matmul(m)?)?;
    is_psd(&s, cfg)
}

fn require_nonexpansive(m: &DenseMatrix, cfg: &ToleranceConfig) -> Result<()> {
    let rep = is_nonexpansive(m, cfg)?;
    if !rep.is_psd {
        return Err(Error::Precondition(format!(
            "matrix is not nonexpansive (min eigenvalue of I - M^T M is {:.6e})",
            rep.min_eigenvalue
        )));
    }
    Ok(())
}

/// The matrix whose positive semidefiniteness characterizes
/// kappa-averagedness: (2k-1)I - (M^T M - (1-k)(M+M^T)).
fn averagedness_matrix(m: &DenseMatrix, kappa: f64) -> Result<DenseMatrix> {
    let n = m.rows();
    let id = DenseMatrix::identity(n);
    let mtm = m.transpose().matmul(m)?;
    let sym = m.add(&m.transpose())?;
    id.scale(2.0 * kappa - 1.0)
        .sub(&mtm.sub(&sym.scale(1.0 - kappa))?)
}

/// PSD test of the averagedness characterization at a given kappa.
/// At kappa = 0 the test degenerates to -(I-M)^T(I-M) >= 0, i.e. M = I.
pub fn is_kappa_averaged(m: &DenseMatrix, kappa: f64, cfg: &ToleranceConfig) -> Result<PsdReport> {
    if !(0.0..=1.0).contains(&kappa) {
        return Err(Error::Domain(format!("kappa must lie in [0, 1], got {kappa}")));
    }
    require_nonexpansive(m, cfg)?;
    is_psd(&averagedness_matrix(m, kappa)?, cfg)
}

struct GammaDetail {
    gamma: f64,
    d: usize,
    witness: Option<Vec<f64>>,
}

fn check_symmetric_psd(name: &str, s: &DenseMatrix, cfg: &ToleranceConfig) -> Result<()> {
    if !s.is_square() {
        return Err(Error::Dimension(format!("{name} must be square")));
    }
    let asym = s.sub(&s.transpose())?.max_abs();
    if asym > cfg.psd_tol * s.one_norm().max(1.0) {
        return Err(Error::Precondition(format!(
            "{name} is not symmetric (max asymmetry {asym:.3e})"
        )));
    }
    let rep = is_psd(s, cfg)?;
    if !rep.is_psd {
        return Err(Error::Precondition(format!(
            "{name} is not PSD (min eigenvalue {:.6e})",
            rep.min_eigenvalue
        )));
    }
    Ok(())
}

fn smallest_gamma_detail(
    a: &DenseMatrix,
    b: &DenseMatrix,
    cfg: &ToleranceConfig,
) -> Result<GammaDetail> {
    check_symmetric_psd("A", a, cfg)?;
    check_symmetric_psd("B", b, cfg)?;
    if a.rows() != b.rows() {
        return Err(Error::Dimension("A and B must share dimensions".into()));
    }
    let n = b.rows();
    let eig = sym_eigen(b, cfg)?;
    let beta_max = eig.eigenvalues.first().copied().unwrap_or(0.0).max(0.0);
    let cut = cfg.rank_tol * beta_max;
    let d = eig.eigenvalues.iter().filter(|&&x| x > cut).count();

    // ker B must be contained in ker A, otherwise no finite gamma exists.
    if d < n {
        let null_idx: Vec<usize> = (d..n).collect();
        let u_null = eig.eigenvectors.select_columns(&null_idx);
        let restricted = u_null.transpose().matmul(a)?.matmul(&u_null)?;
        let top = sym_eigen(&restricted, cfg)?
            .eigenvalues
            .first()
            .copied()
            .unwrap_or(0.0);
        if top > cfg.psd_tol * a.one_norm().max(1.0) {
            return Err(Error::Infeasible(format!(
                "ker B is not contained in ker A (residual {top:.3e}); no finite gamma exists"
            )));
        }
    }
    if d == 0 {
        return Ok(GammaDetail { gamma: 0.0, d: 0, witness: None });
    }

    let pos_idx: Vec<usize> = (0..d).collect();
    let u = eig.eigenvectors.select_columns(&pos_idx);
    let inv_sqrt: Vec<f64> = eig.eigenvalues[..d].iter().map(|&x| 1.0 / x.sqrt()).collect();
    // C = D^{-1} U^T A U D^{-1}
    let uau = u.transpose().matmul(a)?.matmul(&u)?;
    let mut c = DenseMatrix::zeros(d, d);
    for i in 0..d {
        for j in 0..d {
            c.set(i, j, inv_sqrt[i] * uau.get(i, j) * inv_sqrt[j]);
        }
    }
    let ceig = sym_eigen(&c, cfg)?;
    let gamma = ceig.eigenvalues[0].max(0.0);
    // Map the top eigenvector back to the ambient space: x = U D^{-1} z.
    let z = ceig.eigenvectors.column(0);
    let dz: Vec<f64> = z.iter().zip(&inv_sqrt).map(|(zi, s)| zi * s).collect();
    let mut x = u.apply(&dz)?;
    let nx = norm2(&x);
    if nx > 0.0 {
        x.iter_mut().for_each(|v| *v /= nx);
    }
    Ok(GammaDetail { gamma, d, witness: Some(x) })
}

/// Smallest gamma >= 0 with A <= gamma * B (Loewner order), for symmetric
/// PSD A, B with ker B contained in ker A.
pub fn smallest_gamma(a: &DenseMatrix, b: &DenseMatrix, cfg: &ToleranceConfig) -> Result<f64> {
    Ok(smallest_gamma_detail(a, b, cfg)?.gamma)
}

fn margins_at(m: &DenseMatrix, kappa: f64, cfg: &ToleranceConfig) -> Result<(f64, f64)> {
    let at = is_psd(&averagedness_matrix(m, kappa)?, cfg)?.min_eigenvalue;
    let below = is_psd(&averagedness_matrix(m, kappa - 1e-6)?, cfg)?.min_eigenvalue;
    Ok((at, below))
}

/// Exact modulus of averagedness via the generalized eigenvalue reduction.
pub fn kappa_exact(m: &DenseMatrix, cfg: &ToleranceConfig) -> Result<ModulusReport> {
    require_nonexpansive(m, cfg)?;
    let n = m.rows();
    let id = DenseMatrix::identity(n);
    let res = id.sub(m)?;
    let a = res.transpose().matmul(&res)?;
    let b = id.scale(2.0).sub(&m.add(&m.transpose())?)?;
    let detail = smallest_gamma_detail(&a, &b, cfg)?;
    let kappa = detail.gamma.clamp(0.0, 1.0);
    let (at, below) = margins_at(m, kappa, cfg)?;
    Ok(ModulusReport {
        kappa,
        route: Route::ExactEig,
        certificate: Some(Certificate {
            achieving_eigenvalue: detail.gamma,
            psd_margin_at_kappa: at,
            psd_margin_below: below,
            witness: detail.witness,
        }),
        d: detail.d,
    })
}

/// Independent oracle: bisection on the monotone averagedness predicate.
pub fn kappa_bisection(m: &DenseMatrix, cfg: &ToleranceConfig) -> Result<ModulusReport> {
    require_nonexpansive(m, cfg)?;
    let d = count_positive_b_eigenvalues(m, cfg)?;
    // Bisect on the sign of the raw smallest eigenvalue. Any certification
    // slack would bias the root: near the crossing the smallest eigenvalue
    // can be nearly flat in kappa, so even a tiny slack shifts the flip
    // point by far more than bisect_tol.
    let averaged_at = |k: f64| -> Result<bool> {
        let s = averagedness_matrix(m, k)?;
        Ok(is_psd(&s, cfg)?.min_eigenvalue >= 0.0)
    };
    let kappa = if averaged_at(0.0)? {
        0.0
    } else {
        let mut lo = 0.0;
        let mut hi = 1.0;
        while hi - lo > cfg.bisect_tol {
            let mid = 0.5 * (lo + hi);
            if averaged_at(mid)? {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        0.5 * (lo + hi)
    };
    let (at, below) = margins_at(m, kappa, cfg)?;
    Ok(ModulusReport {
        kappa,
        route: Route::Bisection,
        certificate: Some(Certificate {
            achieving_eigenvalue: kappa,
            psd_margin_at_kappa: at,
            psd_margin_below: below,
            witness: None,
        }),
        d,
    })
}

fn count_positive_b_eigenvalues(m: &DenseMatrix, cfg: &ToleranceConfig) -> Result<usize> {
    let n = m.rows();
    let b = DenseMatrix::identity(n).scale(2.0).sub(&m.add(&m.transpose())?)?;
    let eig = sym_eigen(&b, cfg)?;
    let beta_max = eig.eigenvalues.first().copied().unwrap_or(0.0).max(0.0);
    Ok(eig.eigenvalues.iter().filter(|&&x| x > cfg.rank_tol * beta_max).count())
}

/// Sampled lower bound on the modulus: max of the quotient
/// ||z-Mz||^2 / (2<z, z-Mz>) over random unit vectors. Deterministic per seed.
pub fn kappa_quotient_sample(
    m: &DenseMatrix,
    sample_count: usize,
    seed: u64,
    cfg: &ToleranceConfig,
) -> Result<f64> {
    require_nonexpansive(m, cfg)?;
    let n = m.rows();
    if m.sub(&DenseMatrix::identity(n))?.max_abs() <= cfg.rank_tol {
        return Err(Error::Domain(
            "quotient sampling is undefined for the identity operator".into(),
        ));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut best = 0.0_f64;
    for _ in 0..sample_count {
        let mut z: Vec<f64> = (0..n).map(|_| rng.sample(StandardNormal)).collect();
        let nz = norm2(&z);
        if nz == 0.0 {
            continue;
        }
        z.iter_mut().for_each(|x| *x /= nz);
        let mz = m.apply(&z)?;
        let w: Vec<f64> = z.iter().zip(&mz).map(|(a, b)| a - b).collect();
        let nw = norm2(&w);
        if nw <= cfg.rank_tol {
            continue;
        }
        let denom = 2.0 * dot(&z, &w);
        if denom <= 0.0 {
            // Nonexpansiveness forces the denominator positive off Fix M;
            // a nonpositive value here is floating-point noise near Fix M.
            continue;
        }
        best = best.max(nw * nw / denom);
    }
    Ok(best)
}

/// Modulus of the relaxation (1-beta) I + beta R, reduced to the compression
/// of R to the orthogonal complement of Fix R.
pub fn kappa_relaxed(r: &DenseMatrix, beta: f64, cfg: &ToleranceConfig) -> Result<ModulusReport> {
    if !(0.0..=1.0).contains(&beta) {
        return Err(Error::Domain(format!("beta must lie in [0, 1], got {beta}")));
    }
    require_nonexpansive(r, cfg)?;
    let n = r.rows();
    let id = DenseMatrix::identity(n);
    let t = id.scale(1.0 - beta).add(&r.scale(beta))?;

    // Fix R = ker(I - R), detected through the spectrum of (I-R)^T (I-R).
    let res = id.sub(r)?;
    let s = res.transpose().matmul(&res)?;
    let eig = sym_eigen(&s, cfg)?;
    let lam_max = eig.eigenvalues.first().copied().unwrap_or(0.0).max(0.0);
    let cut = cfg.rank_tol * lam_max;
    let moving: Vec<usize> = (0..n).filter(|&i| eig.eigenvalues[i] > cut).collect();

    if beta == 0.0 || moving.is_empty() {
        // T = Id (either no relaxation step or Fix R is the whole space).
        let (at, below) = margins_at(&t, 0.0, cfg)?;
        return Ok(ModulusReport {
            kappa: 0.0,
            route: Route::ExactEig,
            certificate: Some(Certificate {
                achieving_eigenvalue: 0.0,
                psd_margin_at_kappa: at,
                psd_margin_below: below,
                witness: None,
            }),
            d: 0,
        });
    }

    // W spans (Fix R)^perp; the compression W^T R W represents
    // P_{V^perp} R restricted to V^perp.
    let w = eig.eigenvectors.select_columns(&moving);
    let restricted = w.transpose().matmul(r)?.matmul(&w)?;
    let sub = kappa_exact(&restricted, cfg)?;
    let kappa = (beta * sub.kappa).clamp(0.0, 1.0);
    let (at, below) = margins_at(&t, kappa, cfg)?;
    let witness = sub
        .certificate
        .as_ref()
        .and_then(|c| c.witness.as_ref())
        .map(|y| w.apply(y))
        .transpose()?;
    Ok(ModulusReport {
        kappa,
        route: Route::ExactEig,
        certificate: Some(Certificate {
            achieving_eigenvalue: sub.certificate.map(|c| c.achieving_eigenvalue).unwrap_or(0.0),
            psd_margin_at_kappa: at,
            psd_margin_below: below,
            witness,
        }),
        d: sub.d,
    })
}

/// Modulus of a differentiable nonexpansive scalar function, from the
/// infimum of its derivative: (1 - mu) / 2.
pub fn kappa_scalar(inf_derivative: f64) -> Result<f64> {
    if !(-1.0..=1.0).contains(&inf_derivative) {
        return Err(Error::Domain(format!(
            "inf derivative must lie in [-1, 1] for a nonexpansive function, got {inf_derivative}"
        )));
    }
    Ok((1.0 - inf_derivative) / 2.0)
}
