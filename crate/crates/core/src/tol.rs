//! Numerical tolerances shared by every module.

/// Relative cut for numerical rank (eigenvalues, singular values, Schmidt
/// coefficients), measured against the largest one.
pub const EIG: f64 = 1e-8;
/// Orthonormality defect allowed in a subspace basis.
pub const ORTHO: f64 = 1e-9;
/// Relative residual allowed for subspace membership.
pub const MEMBER: f64 = 1e-7;
/// Hermiticity defect allowed for density matrices.
pub const HERM: f64 = 1e-9;
/// Normalisation defect for Kraus sets, measurements and unit vectors.
pub const NORM: f64 = 1e-9;
/// Reconstruction error allowed for Schmidt decompositions.
pub const RECON: f64 = 1e-10;
/// Branches with probability at or below this are pruned.
pub const PROB: f64 = 1e-12;
/// Entrywise distance under which two configuration states are merged.
pub const FP: f64 = 1e-7;
/// Decimal places kept when fingerprinting a density matrix.
pub const FP_DECIMALS: i32 = 7;
