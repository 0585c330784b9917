//! Random states, channels and subspaces for self-tests and benchmarks.

use rand::Rng;
use rand_distr::StandardNormal;

use crate::channel::SuperOperator;
use crate::linalg::{c, outer, trace, CMatrix, CVector, Subspace};

fn gaussian<R: Rng + ?Sized>(rng: &mut R) -> num_complex::Complex64 {
    let re: f64 = rng.sample(StandardNormal);
    let im: f64 = rng.sample(StandardNormal);
    c(re, im)
}

/// Matrix with i.i.d. complex Gaussian entries.
pub fn gaussian_matrix<R: Rng + ?Sized>(rng: &mut R, rows: usize, cols: usize) -> CMatrix {
    CMatrix::from_fn(rows, cols, |_, _| gaussian(rng))
}

/// Haar-random unit vector.
pub fn state<R: Rng + ?Sized>(rng: &mut R, dim: usize) -> CVector {
    let v = CVector::from_fn(dim, |_, _| gaussian(rng));
    let n = v.norm();
    v.unscale(n)
}

/// Random density matrix of the given rank (at most `dim`).
pub fn density<R: Rng + ?Sized>(rng: &mut R, dim: usize, rank: usize) -> CMatrix {
    let g = gaussian_matrix(rng, dim, rank.clamp(1, dim));
    let rho = &g * g.adjoint();
    let t = trace(&rho).re;
    rho.unscale(t)
}

/// Pure state `|ψ><ψ|` for a Haar-random `ψ`.
pub fn pure_density<R: Rng + ?Sized>(rng: &mut R, dim: usize) -> CMatrix {
    outer(&state(rng, dim))
}

/// Haar-random unitary from the QR decomposition of a Gaussian matrix.
pub fn unitary<R: Rng + ?Sized>(rng: &mut R, dim: usize) -> CMatrix {
    let qr = gaussian_matrix(rng, dim, dim).qr();
    let mut q = qr.q();
    let r = qr.r();
    for j in 0..dim {
        let d = r[(j, j)];
        let phase = if d.norm() > 0.0 {
            d / d.norm()
        } else {
            c(1.0, 0.0)
        };
        let mut col = q.column_mut(j);
        col *= phase;
    }
    q
}

/// `k` Kraus operators on `C^dim` cut from a random isometry, so
/// `Σ E_i† E_i = I` exactly up to rounding.
pub fn kraus_set<R: Rng + ?Sized>(rng: &mut R, dim: usize, k: usize) -> Vec<CMatrix> {
    let g = gaussian_matrix(rng, dim * k, dim);
    let q = g.qr().q();
    (0..k).map(|i| q.rows(i * dim, dim).into_owned()).collect()
}

/// Random trace-preserving channel on `n_qubits` with `n_kraus` operators.
pub fn channel<R: Rng + ?Sized>(rng: &mut R, n_qubits: usize, n_kraus: usize) -> SuperOperator {
    SuperOperator::new(kraus_set(rng, 1 << n_qubits, n_kraus.max(1)))
        .expect("isometry blocks form a trace-preserving Kraus set")
}

/// Random trace-preserving channel that leaves a random `k`-dimensional
/// subspace invariant, so reachable spaces can be proper.
pub fn block_channel<R: Rng + ?Sized>(
    rng: &mut R,
    dim: usize,
    k: usize,
    n_kraus: usize,
) -> SuperOperator {
    let k = k.clamp(1, dim);
    let frame = unitary(rng, dim);
    let inner = kraus_set(rng, k, n_kraus.max(1));
    let outer_block = if k < dim {
        kraus_set(rng, dim - k, n_kraus.max(1))
    } else {
        Vec::new()
    };
    let ops = (0..n_kraus.max(1))
        .map(|i| {
            let mut m = CMatrix::zeros(dim, dim);
            m.view_mut((0, 0), (k, k)).copy_from(&inner[i]);
            if k < dim {
                m.view_mut((k, k), (dim - k, dim - k))
                    .copy_from(&outer_block[i]);
            }
            &frame * m * frame.adjoint()
        })
        .collect();
    SuperOperator::new(ops).expect("block-diagonal isometry is trace preserving")
}

/// Random unitary channel.
pub fn unitary_channel<R: Rng + ?Sized>(rng: &mut R, n_qubits: usize) -> SuperOperator {
    SuperOperator::unitary(unitary(rng, 1 << n_qubits)).expect("QR factor is unitary")
}

/// Random `k`-dimensional subspace of `C^dim`.
pub fn subspace<R: Rng + ?Sized>(rng: &mut R, dim: usize, k: usize) -> Subspace {
    if k == 0 {
        return Subspace::zero(dim);
    }
    Subspace::column_space(&gaussian_matrix(rng, dim, k.min(dim)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::TraceClass;
    use crate::linalg::max_abs;
    use rand::SeedableRng;

    #[test]
    fn generators_respect_invariants() {
        let mut rng = rand::rngs::StdRng::seed_from_u64(7);
        for d in [2, 4, 8] {
            let u = unitary(&mut rng, d);
            assert!(max_abs(&(u.adjoint() * &u - CMatrix::identity(d, d))) < 1e-12);
            let e = channel(&mut rng, d.trailing_zeros() as usize, 3);
            assert_eq!(e.trace_class(), TraceClass::Preserving);
            let b = block_channel(&mut rng, d, d / 2, 2);
            assert_eq!(b.trace_class(), TraceClass::Preserving);
            let rho = density(&mut rng, d, 2);
            assert!((trace(&rho).re - 1.0).abs() < 1e-12);
            assert_eq!(subspace(&mut rng, d, d / 2).dim(), d / 2);
        }
    }
}
