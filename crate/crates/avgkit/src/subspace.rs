//! Linear subspaces of R^n: projectors, reflectors, complements, and the
//! Dixmier / Friedrichs angles.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{orthonormalize, singular_cosines, sym_eigen};
use crate::matrix::DenseMatrix;
use crate::tolerance::ToleranceConfig;

/// A closed linear subspace of R^n, stored as an orthonormal column basis.
/// The basis may have zero columns (the zero subspace) or n columns (the
/// full space). Immutable after construction.
#[derive(Debug, Clone, PartialEq)]
pub struct Subspace {
    ambient_dim: usize,
    basis: DenseMatrix,
}

/// Wire format: spanning vectors need not be orthonormal; construction
/// orthonormalizes them.
#[derive(Serialize, Deserialize)]
pub struct SubspaceWire {
    pub ambient_dim: usize,
    pub spanning_vectors: Vec<Vec<f64>>,
}

/// Principal-angle summary of a subspace pair.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct AngleReport {
    /// Principal-angle cosines, descending.
    pub cosines: Vec<f64>,
    /// Number of cosines clustered at 1, i.e. dim(U ∩ V).
    pub dim_intersection: usize,
    /// Dixmier (minimal) angle cosine.
    pub dixmier: f64,
    /// Friedrichs angle cosine.
    pub friedrichs: f64,
}

impl Subspace {
    /// Build from arbitrary spanning vectors (columns of `spanning`);
    /// orthonormalizes and drops dependent directions.
    pub fn new(spanning: &DenseMatrix, cfg: &ToleranceConfig) -> Subspace {
        Subspace {
            ambient_dim: spanning.rows(),
            basis: orthonormalize(spanning, cfg),
        }
    }

    /// Wrap a matrix that is already orthonormal, verifying the Gram matrix.
    pub fn from_orthonormal(basis: DenseMatrix) -> Result<Subspace> {
        let g = basis.transpose().matmul(&basis)?;
        let dev = g.sub(&DenseMatrix::identity(basis.cols()))?.max_abs();
        if dev > 1e-10 {
            return Err(Error::Precondition(format!(
                "basis is not orthonormal (Gram deviation {dev:.3e})"
            )));
        }
        Ok(Subspace { ambient_dim: basis.rows(), basis })
    }

    pub fn zero(ambient_dim: usize) -> Subspace {
        Subspace { ambient_dim, basis: DenseMatrix::zeros(ambient_dim, 0) }
    }

    pub fn full(ambient_dim: usize) -> Subspace {
        Subspace { ambient_dim, basis: DenseMatrix::identity(ambient_dim) }
    }

    /// Span of the listed vectors (each of length `ambient_dim`).
    pub fn span(ambient_dim: usize, vectors: &[Vec<f64>], cfg: &ToleranceConfig) -> Result<Subspace> {
        let m = DenseMatrix::from_columns(ambient_dim, vectors)?;
        Ok(Subspace::new(&m, cfg))
    }

    pub fn from_wire(wire: &SubspaceWire, cfg: &ToleranceConfig) -> Result<Subspace> {
        for v in &wire.spanning_vectors {
            if v.len() != wire.ambient_dim {
                return Err(Error::Parse(format!(
                    "spanning vector length {} does not match ambient_dim {}",
                    v.len(),
                    wire.ambient_dim
                )));
            }
        }
        Subspace::span(wire.ambient_dim, &wire.spanning_vectors, cfg)
    }

    pub fn to_wire(&self) -> SubspaceWire {
        SubspaceWire {
            ambient_dim: self.ambient_dim,
            spanning_vectors: (0..self.basis.cols()).map(|j| self.basis.column(j)).collect(),
        }
    }

    pub fn ambient_dim(&self) -> usize {
        self.ambient_dim
    }

    pub fn dim(&self) -> usize {
        self.basis.cols()
    }

    pub fn is_full(&self) -> bool {
        self.dim() == self.ambient_dim
    }

    pub fn is_zero(&self) -> bool {
        self.dim() == 0
    }

    pub fn basis(&self) -> &DenseMatrix {
        &self.basis
    }
}

/// Orthogonal projector onto the subspace: Q Q^T.
pub fn projector(s: &Subspace) -> DenseMatrix {
    let q = s.basis();
    if q.cols() == 0 {
        return DenseMatrix::zeros(s.ambient_dim(), s.ambient_dim());
    }
    q.matmul(&q.transpose()).expect("projector shapes agree")
}

/// Reflector through the subspace: 2P - I.
pub fn reflector(s: &Subspace) -> DenseMatrix {
    let p = projector(s);
    p.scale(2.0)
        .sub(&DenseMatrix::identity(s.ambient_dim()))
        .expect("reflector shapes agree")
}

/// Orthonormal basis of the orthogonal complement, via the eigenvectors of
/// I - P with eigenvalue near 1 (the spectrum of I - P is exactly {0, 1}).
pub fn complement(s: &Subspace, cfg: &ToleranceConfig) -> Subspace {
    let n = s.ambient_dim();
    let ip = DenseMatrix::identity(n)
        .sub(&projector(s))
        .expect("shapes agree");
    let eig = sym_eigen(&ip, cfg).expect("square by construction");
    let keep: Vec<usize> = (0..n).filter(|&i| eig.eigenvalues[i] > 0.5).collect();
    let basis = eig.eigenvectors.select_columns(&keep);
    Subspace { ambient_dim: n, basis }
}

/// Dixmier and Friedrichs angle cosines plus the full principal-angle list.
///
/// The intersection count k is the number of cosines >= 1 - cluster_tol;
/// the Friedrichs cosine is the (k+1)-th cosine, or 0 past the end. Both
/// cosines are 0 when either subspace is trivial.
pub fn angles(u: &Subspace, v: &Subspace, cfg: &ToleranceConfig) -> Result<AngleReport> {
    if u.ambient_dim() != v.ambient_dim() {
        return Err(Error::Dimension(format!(
            "ambient dimensions differ: {} vs {}",
            u.ambient_dim(),
            v.ambient_dim()
        )));
    }
    let cosines = singular_cosines(u.basis(), v.basis(), cfg)?;
    let k = cosines.iter().filter(|&&c| c >= 1.0 - cfg.cluster_tol).count();
    let dixmier = cosines.first().copied().unwrap_or(0.0);
    let friedrichs = cosines.get(k).copied().unwrap_or(0.0);
    Ok(AngleReport { cosines, dim_intersection: k, dixmier, friedrichs })
}

/// Basis of U ∩ V: the principal vectors of U whose cosines cluster at 1.
pub fn intersection(u: &Subspace, v: &Subspace, cfg: &ToleranceConfig) -> Result<Subspace> {
    if u.ambient_dim() != v.ambient_dim() {
        return Err(Error::Dimension(format!(
            "ambient dimensions differ: {} vs {}",
            u.ambient_dim(),
            v.ambient_dim()
        )));
    }
    let n = u.ambient_dim();
    if u.dim() == 0 || v.dim() == 0 {
        return Ok(Subspace::zero(n));
    }
    // Principal vectors of U are Qu * y_i where y_i are eigenvectors of
    // G G^T, G = Qu^T Qv, with eigenvalue cos^2.
    let g = u.basis().transpose().matmul(v.basis())?;
    let ggt = g.matmul(&g.transpose())?;
    let eig = sym_eigen(&ggt, cfg)?;
    let keep: Vec<usize> = (0..eig.eigenvalues.len())
        .filter(|&i| eig.eigenvalues[i].clamp(0.0, 1.0).sqrt() >= 1.0 - cfg.cluster_tol)
        .collect();
    let y = eig.eigenvectors.select_columns(&keep);
    let basis = u.basis().matmul(&y)?;
    Subspace::from_orthonormal(basis)
}
