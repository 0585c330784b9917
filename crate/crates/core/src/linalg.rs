//! Dense complex linear algebra and the lattice of closed subspaces.
//!
//! Every routine here works on `nalgebra` matrices of [`Complex64`]. A
//! multi-qubit basis index uses the little-endian qubit convention: qubit `i`
//! (1-based) carries weight `2^(i-1)`, so qubit 1 is the least significant
//! bit. The standard Kronecker product `a ⊗ b` puts `a` on the most
//! significant positions, hence a state on qubits `1..=k` followed by a
//! state on qubits `k+1..=n` is `kron(high, low)`; see [`tensor_qubits`].

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::tol;

pub type CMatrix = DMatrix<Complex64>;
pub type CVector = DVector<Complex64>;

#[inline]
pub fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

#[inline]
pub fn cr(re: f64) -> Complex64 {
    Complex64::new(re, 0.0)
}

/// Standard Kronecker product, `a` on the high-order positions.
pub fn kron(a: &CMatrix, b: &CMatrix) -> CMatrix {
    a.kronecker(b)
}

/// Joint operator/state of two registers where `first` holds the low-order
/// qubits and `second` the qubits after them.
pub fn tensor_qubits(first: &CMatrix, second: &CMatrix) -> CMatrix {
    second.kronecker(first)
}

/// Computational basis vector `|index>` of dimension `dim`.
pub fn basis_vector(dim: usize, index: usize) -> CVector {
    let mut v = CVector::zeros(dim);
    v[index] = cr(1.0);
    v
}

/// `|v><v|`
pub fn outer(v: &CVector) -> CMatrix {
    v * v.adjoint()
}

pub fn trace(m: &CMatrix) -> Complex64 {
    m.diagonal().iter().sum()
}

/// Largest entry modulus.
pub fn max_abs(m: &CMatrix) -> f64 {
    m.iter().fold(0.0, |acc, z| acc.max(z.norm()))
}

pub fn dim_to_qubits(dim: usize) -> Option<usize> {
    if dim.is_power_of_two() {
        Some(dim.trailing_zeros() as usize)
    } else {
        None
    }
}

/// Row-major vectorisation, the convention under which
/// `vec(A X B) = (A ⊗ Bᵀ) vec(X)`.
pub fn vec_row_major(m: &CMatrix) -> CVector {
    let (r, cols) = m.shape();
    CVector::from_fn(r * cols, |k, _| m[(k / cols, k % cols)])
}

pub fn unvec_row_major(v: &CVector, rows: usize, cols: usize) -> CMatrix {
    CMatrix::from_fn(rows, cols, |i, j| v[i * cols + j])
}

pub fn check_hermitian(m: &CMatrix) -> Result<()> {
    if !m.is_square() {
        return Err(Error::InvalidDensityMatrix(format!(
            "matrix is {}x{}, not square",
            m.nrows(),
            m.ncols()
        )));
    }
    let scale = max_abs(m).max(1.0);
    let skew = max_abs(&(m - m.adjoint()));
    if skew > tol::HERM * scale {
        return Err(Error::InvalidDensityMatrix(format!(
            "not Hermitian (max |A - A†| = {skew:.3e})"
        )));
    }
    Ok(())
}

/// Eigen-decomposition of a Hermitian matrix (symmetrised first).
/// Eigenvalues are returned in the solver's order, not sorted.
pub fn hermitian_eigen(m: &CMatrix) -> (Vec<f64>, CMatrix) {
    let sym = (m + m.adjoint()).scale(0.5);
    let eig = sym.symmetric_eigen();
    (eig.eigenvalues.iter().copied().collect(), eig.eigenvectors)
}

/// Singular triples `(σ, u, v)` with `M v = σ u`, `σ` above `tol::EIG`
/// times the largest, in descending order. Read off the positive spectrum of
/// the Hermitian dilation `[[0, M], [M†, 0]]`, whose eigenvectors are
/// `(u, v)/√2`; nalgebra's complex SVD loses accuracy on rank-deficient input.
pub fn singular_triples(m: &CMatrix) -> Vec<(f64, CVector, CVector)> {
    singular_triples_above(m, tol::EIG)
}

/// [`singular_triples`] with the relative cut `rel` instead of `tol::EIG`.
pub fn singular_triples_above(m: &CMatrix, rel: f64) -> Vec<(f64, CVector, CVector)> {
    let (r, k) = m.shape();
    let mut h = CMatrix::zeros(r + k, r + k);
    h.view_mut((0, r), (r, k)).copy_from(m);
    h.view_mut((r, 0), (k, r)).copy_from(&m.adjoint());
    let (vals, vecs) = hermitian_eigen(&h);
    let sigma_max = vals.iter().copied().fold(0.0, f64::max);
    if sigma_max == 0.0 {
        return Vec::new();
    }
    let mut out: Vec<(f64, CVector, CVector)> = vals
        .iter()
        .enumerate()
        .filter(|(_, &s)| s > rel * sigma_max)
        .map(|(j, &s)| {
            let w = vecs.column(j);
            // halves renormalised apart: near-zero σ mixes with -σ
            let u = w.rows(0, r).normalize();
            let v = w.rows(r, k).normalize();
            (s, u, v)
        })
        .collect();
    out.sort_by(|a, b| b.0.total_cmp(&a.0));
    out
}

/// Smallest eigenvalue of a Hermitian matrix.
pub fn min_eigenvalue(m: &CMatrix) -> f64 {
    let (vals, _) = hermitian_eigen(m);
    vals.into_iter().fold(f64::INFINITY, f64::min)
}

/// Closed subspace of `C^ambient_dim`, stored as an orthonormal basis.
///
/// Two subspaces are equal when each contains the other
/// ([`Subspace::approx_eq`]); bases are never canonicalised.
#[derive(Debug, Clone)]
pub struct Subspace {
    basis: CMatrix,
}

impl Subspace {
    pub fn zero(ambient_dim: usize) -> Self {
        Subspace {
            basis: CMatrix::zeros(ambient_dim, 0),
        }
    }

    pub fn full(ambient_dim: usize) -> Self {
        Subspace {
            basis: CMatrix::identity(ambient_dim, ambient_dim),
        }
    }

    /// Wraps a basis whose columns are already orthonormal.
    pub fn from_orthonormal(basis: CMatrix) -> Result<Self> {
        let k = basis.ncols();
        let gram = basis.adjoint() * &basis;
        let defect = max_abs(&(gram - CMatrix::identity(k, k)));
        if defect > tol::ORTHO {
            return Err(Error::dims(format!(
                "basis columns are not orthonormal (defect {defect:.3e})"
            )));
        }
        Ok(Subspace { basis })
    }

    /// Span of the columns of `m`, with numerical rank decided relative to
    /// the largest singular value.
    pub fn column_space(m: &CMatrix) -> Self {
        let d = m.nrows();
        if m.ncols() == 0 || max_abs(m) == 0.0 {
            return Subspace::zero(d);
        }
        let us: Vec<CVector> = singular_triples(m).into_iter().map(|(_, u, _)| u).collect();
        if us.is_empty() {
            return Subspace::zero(d);
        }
        // clustered σ leave the u's orthonormal only to the cluster gap
        let q = CMatrix::from_columns(&us).qr().q();
        Subspace { basis: q }
    }

    pub fn span(vectors: &[CVector]) -> Result<Self> {
        let first = vectors
            .first()
            .ok_or_else(|| Error::dims("span of an empty list has no ambient dimension"))?;
        let d = first.len();
        if let Some(v) = vectors.iter().find(|v| v.len() != d) {
            return Err(Error::dims(format!(
                "vectors of length {} and {} in one span",
                d,
                v.len()
            )));
        }
        let m = CMatrix::from_fn(d, vectors.len(), |i, j| vectors[j][i]);
        Ok(Subspace::column_space(&m))
    }

    pub fn ambient_dim(&self) -> usize {
        self.basis.nrows()
    }

    pub fn dim(&self) -> usize {
        self.basis.ncols()
    }

    pub fn is_zero(&self) -> bool {
        self.dim() == 0
    }

    pub fn basis(&self) -> &CMatrix {
        &self.basis
    }

    pub fn basis_vectors(&self) -> Vec<CVector> {
        self.basis.column_iter().map(|c| c.into_owned()).collect()
    }

    pub fn projector(&self) -> CMatrix {
        &self.basis * self.basis.adjoint()
    }

    pub fn orthocomplement(&self) -> Subspace {
        let d = self.ambient_dim();
        match self.dim() {
            0 => return Subspace::full(d),
            k if k == d => return Subspace::zero(d),
            _ => {}
        }
        // Eigenvalues of a projector are 0 or 1; the 0-eigenspace is X^⊥.
        let (vals, vecs) = hermitian_eigen(&self.projector());
        let keep: Vec<usize> = vals
            .iter()
            .enumerate()
            .filter(|(_, &v)| v < 0.5)
            .map(|(i, _)| i)
            .collect();
        Subspace {
            basis: vecs.select_columns(keep.iter()),
        }
    }

    pub fn join(&self, other: &Subspace) -> Result<Subspace> {
        join(&[self.clone(), other.clone()])
    }

    pub fn intersect(&self, other: &Subspace) -> Result<Subspace> {
        intersect(self, other)
    }

    /// `‖(I - P)v‖`, the distance of `v` from the subspace.
    pub fn residual_vector(&self, v: &CVector) -> Result<f64> {
        if v.len() != self.ambient_dim() {
            return Err(Error::dims(format!(
                "vector of length {} against subspace of C^{}",
                v.len(),
                self.ambient_dim()
            )));
        }
        let coeffs = self.basis.adjoint() * v;
        Ok((v - &self.basis * coeffs).norm())
    }

    /// Largest residual of an orthonormal basis of `other` w.r.t. `self`.
    pub fn residual(&self, other: &Subspace) -> Result<f64> {
        if other.ambient_dim() != self.ambient_dim() {
            return Err(Error::dims(format!(
                "subspaces of C^{} and C^{}",
                self.ambient_dim(),
                other.ambient_dim()
            )));
        }
        let mut worst: f64 = 0.0;
        for col in other.basis.column_iter() {
            worst = worst.max(self.residual_vector(&col.into_owned())?);
        }
        Ok(worst)
    }

    pub fn contains_vector(&self, v: &CVector) -> Result<bool> {
        let r = self.residual_vector(v)?;
        Ok(r <= tol::MEMBER * v.norm())
    }

    pub fn contains(&self, other: &Subspace) -> Result<bool> {
        Ok(self.residual(other)? <= tol::MEMBER)
    }

    /// Equality as mutual containment.
    pub fn approx_eq(&self, other: &Subspace) -> Result<bool> {
        Ok(self.dim() == other.dim() && self.contains(other)? && other.contains(self)?)
    }

    /// Mutual containment residual, `max(res(self ⊇ other), res(other ⊇ self))`.
    pub fn distance(&self, other: &Subspace) -> Result<f64> {
        Ok(self.residual(other)?.max(other.residual(self)?))
    }
}

/// Support of a positive semidefinite matrix: the span of eigenvectors whose
/// eigenvalue exceeds `tol::EIG` times the largest one.
pub fn support(rho: &CMatrix) -> Result<Subspace> {
    check_hermitian(rho)?;
    let d = rho.nrows();
    let (vals, vecs) = hermitian_eigen(rho);
    let scale = vals.iter().fold(0.0_f64, |acc, v| acc.max(v.abs()));
    if scale == 0.0 {
        return Ok(Subspace::zero(d));
    }
    let lambda_min = vals.iter().copied().fold(f64::INFINITY, f64::min);
    if lambda_min < -tol::EIG * scale {
        return Err(Error::InvalidDensityMatrix(format!(
            "not positive semidefinite (eigenvalue {lambda_min:.3e})"
        )));
    }
    let lambda_max = vals.iter().copied().fold(0.0, f64::max);
    let keep: Vec<usize> = vals
        .iter()
        .enumerate()
        .filter(|(_, &v)| v > tol::EIG * lambda_max)
        .map(|(i, _)| i)
        .collect();
    Ok(Subspace {
        basis: vecs.select_columns(keep.iter()),
    })
}

pub fn join(xs: &[Subspace]) -> Result<Subspace> {
    let first = xs
        .first()
        .ok_or_else(|| Error::dims("join of an empty family has no ambient dimension"))?;
    let d = first.ambient_dim();
    if let Some(x) = xs.iter().find(|x| x.ambient_dim() != d) {
        return Err(Error::dims(format!(
            "join of subspaces of C^{} and C^{}",
            d,
            x.ambient_dim()
        )));
    }
    let total: usize = xs.iter().map(Subspace::dim).sum();
    let mut stacked = CMatrix::zeros(d, total);
    let mut at = 0;
    for x in xs {
        stacked.columns_mut(at, x.dim()).copy_from(&x.basis);
        at += x.dim();
    }
    Ok(Subspace::column_space(&stacked))
}

/// `X ∩ Y = (X^⊥ ∨ Y^⊥)^⊥`
pub fn intersect(x: &Subspace, y: &Subspace) -> Result<Subspace> {
    Ok(join(&[x.orthocomplement(), y.orthocomplement()])?.orthocomplement())
}

#[derive(Debug, Clone)]
pub struct SchmidtTerm {
    pub coefficient: f64,
    pub left: CVector,
    pub right: CVector,
}

/// Schmidt decomposition of `phi ∈ C^d ⊗ C^d`, where `phi[a*d + b]` is the
/// amplitude of `|a> ⊗ |b>` (left factor on the high-order positions).
/// Terms with coefficient at or below `tol::EIG` times the largest are dropped.
pub fn schmidt(phi: &CVector, d: usize) -> Result<Vec<SchmidtTerm>> {
    if d == 0 || phi.len() != d * d {
        return Err(Error::dims(format!(
            "vector of length {} is not on a {d}x{d} bipartite space",
            phi.len()
        )));
    }
    let m = unvec_row_major(phi, d, d);
    if max_abs(&m) == 0.0 {
        return Ok(Vec::new());
    }
    Ok(singular_triples(&m)
        .into_iter()
        .map(|(s, u, v)| SchmidtTerm {
            coefficient: s,
            left: u,
            right: v.map(|z| z.conj()),
        })
        .collect())
}
