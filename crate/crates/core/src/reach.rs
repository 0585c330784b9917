//! Reachable subspaces of quantum Markov chains.
//!
//! `R_C(ρ)` is computed three ways that must agree: the closed form
//! `supp(Σ_{i<d} E^i(ρ))`, the vectorised accumulation
//! `|Φ> = Σ_{i<d} M_E^i (ρ ⊗ I)|Ψ>` followed by a Schmidt decomposition, and
//! the least fixed point of `X ↦ supp(ρ) ∨ E(X)`.

use num_complex::Complex64;

use crate::channel::{SuperOperator, TraceClass};
use crate::error::{Error, Result};
use crate::linalg::{
    hermitian_eigen, schmidt, singular_triples_above, support, unvec_row_major, vec_row_major,
    CMatrix, CVector, Subspace,
};
use crate::tensor::{contract_network, Tensor, TensorNetwork};
use crate::tol;

/// A Hilbert space together with a trace-preserving channel on it.
#[derive(Debug, Clone)]
pub struct QuantumMarkovChain {
    channel: SuperOperator,
}

impl QuantumMarkovChain {
    pub fn new(channel: SuperOperator) -> Result<Self> {
        if channel.trace_class() != TraceClass::Preserving {
            return Err(Error::BadParameter(
                "a quantum Markov chain needs a trace-preserving channel".into(),
            ));
        }
        Ok(QuantumMarkovChain { channel })
    }

    pub fn dim(&self) -> usize {
        self.channel.dim()
    }

    pub fn channel(&self) -> &SuperOperator {
        &self.channel
    }
}

fn check_square(m: &CMatrix, d: usize, what: &str) -> Result<()> {
    if m.shape() != (d, d) {
        return Err(Error::dims(format!(
            "{what} is {}x{}, expected {d}x{d}",
            m.nrows(),
            m.ncols()
        )));
    }
    Ok(())
}

/// Support of a non-zero initial state, checked against the chain.
fn initial_support(c: &QuantumMarkovChain, rho: &CMatrix) -> Result<Subspace> {
    check_square(rho, c.dim(), "initial state")?;
    let s = support(rho)?;
    if s.is_zero() {
        return Err(Error::InvalidDensityMatrix("initial state is zero".into()));
    }
    Ok(s)
}

/// `E(X)`, the join of `supp(E(|ψ><ψ|))` over `|ψ> ∈ X`, computed as
/// `supp(E(P_X))`.
pub fn image(e: &SuperOperator, x: &Subspace) -> Result<Subspace> {
    if x.ambient_dim() != e.dim() {
        return Err(Error::dims(format!(
            "subspace of C^{} under a channel on C^{}",
            x.ambient_dim(),
            e.dim()
        )));
    }
    if x.is_zero() {
        return Ok(Subspace::zero(e.dim()));
    }
    support(&e.apply(&x.projector())?)
}

/// `ρ → σ` iff `supp(σ) ⊆ E(supp(ρ))`.
pub fn adjacent(c: &QuantumMarkovChain, rho: &CMatrix, sigma: &CMatrix) -> Result<bool> {
    check_square(sigma, c.dim(), "target state")?;
    let target = support(sigma)?;
    image(&c.channel, &initial_support(c, rho)?)?.contains(&target)
}

/// `ρ → |φ>` iff `|φ> ∈ E(supp(ρ))`.
pub fn adjacent_vector(c: &QuantumMarkovChain, rho: &CMatrix, phi: &CVector) -> Result<bool> {
    image(&c.channel, &initial_support(c, rho)?)?.contains_vector(phi)
}

/// Closed form `supp(Σ_{i=0}^{d-1} E^i(ρ))`. Each power is carried as a
/// factor `E^i(ρ) = G G†` with `G ↦ [K_1 G | ... | K_k G]`, and the sum as a
/// factor of the stacked powers, so ranks are decided on singular values
/// rather than on their squares.
pub fn reachable_subspace(c: &QuantumMarkovChain, rho: &CMatrix) -> Result<Subspace> {
    initial_support(c, rho)?;
    let d = c.dim();
    let mut g = factor(rho);
    let mut acc = g.clone();
    for _ in 1..d {
        let pushed: Vec<CMatrix> = c.channel.kraus().iter().map(|k| k * &g).collect();
        g = compress(&hstack(d, &pushed));
        let norm = g.norm();
        if norm == 0.0 {
            break;
        }
        g.unscale_mut(norm);
        acc = compress(&hstack(d, &[acc, g.clone()]));
    }
    Ok(Subspace::column_space(&acc))
}

/// `G` with `G G† = ρ / tr ρ`, dropping eigenvalues below the support cut.
fn factor(rho: &CMatrix) -> CMatrix {
    let (vals, vecs) = hermitian_eigen(rho);
    let top = vals.iter().copied().fold(0.0, f64::max);
    let cols: Vec<CVector> = vals
        .iter()
        .enumerate()
        .filter(|(_, &v)| v > tol::EIG * top)
        .map(|(j, &v)| vecs.column(j).scale(v.sqrt()))
        .collect();
    let g = CMatrix::from_columns(&cols);
    let norm = g.norm();
    g.unscale(norm)
}

/// Same Gram matrix `G G†` with at most `d` columns. Only rounding-level
/// directions are cut; the support decision is left to the caller.
fn compress(g: &CMatrix) -> CMatrix {
    let cols: Vec<CVector> = singular_triples_above(g, 1e-14)
        .into_iter()
        .map(|(s, u, _)| u.scale(s))
        .collect();
    if cols.is_empty() {
        return CMatrix::zeros(g.nrows(), 0);
    }
    CMatrix::from_columns(&cols)
}

fn hstack(rows: usize, parts: &[CMatrix]) -> CMatrix {
    let width = parts.iter().map(|p| p.ncols()).sum();
    let mut out = CMatrix::zeros(rows, width);
    let mut at = 0;
    for p in parts {
        out.columns_mut(at, p.ncols()).copy_from(p);
        at += p.ncols();
    }
    out
}

/// How [`reachable_subspace_vectorized_with`] applies `M_E`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum VectorRoute {
    /// Dense `d² x d²` matrix powers.
    Dense,
    /// Contraction of the Kraus tensors with the vectorised state.
    Tensor,
    /// Tensor contraction from three qubits on, dense below.
    Auto,
}

/// Registers at or above this many qubits use tensor contraction under
/// [`VectorRoute::Auto`].
pub const TENSOR_CROSSOVER_QUBITS: usize = 3;

pub fn reachable_subspace_vectorized(c: &QuantumMarkovChain, rho: &CMatrix) -> Result<Subspace> {
    reachable_subspace_vectorized_with(c, rho, VectorRoute::Auto)
}

/// Builds `|Φ> = Σ_{i<d} M_E^i (ρ ⊗ I)|Ψ>` and returns the span of its left
/// Schmidt vectors.
pub fn reachable_subspace_vectorized_with(
    c: &QuantumMarkovChain,
    rho: &CMatrix,
    route: VectorRoute,
) -> Result<Subspace> {
    initial_support(c, rho)?;
    let d = c.dim();
    let use_tensor = match route {
        VectorRoute::Dense => false,
        VectorRoute::Tensor => true,
        VectorRoute::Auto => c.channel.n_qubits() >= TENSOR_CROSSOVER_QUBITS,
    };
    // (ρ ⊗ I)|Ψ> has amplitude ρ[a][k] on |a>|k>, i.e. vec(ρ) row-major.
    let mut v = vec_row_major(rho);
    let scale = v.norm();
    v.unscale_mut(scale);
    let mut phi = v.clone();
    let m = if use_tensor {
        None
    } else {
        Some(c.channel.matrix_rep())
    };
    for _ in 1..d {
        v = match &m {
            Some(m) => m * &v,
            None => apply_matrix_rep_tensor(&c.channel, &v)?,
        };
        let n = v.norm();
        if n == 0.0 {
            break;
        }
        v.unscale_mut(n);
        phi += &v;
    }
    let terms = schmidt(&phi, d)?;
    let lefts: Vec<CVector> = terms.into_iter().map(|t| t.left).collect();
    if lefts.is_empty() {
        return Ok(Subspace::zero(d));
    }
    Subspace::span(&lefts)
}

fn bit_names(prefix: &str, n: usize) -> Vec<String> {
    (1..=n).map(|j| format!("{prefix}{j}")).collect()
}

/// `M_E v` by contracting the network `E(r, c, k) · conj(E)(r', c', k) ·
/// X(c, c')`, where `X` is `v` read as a row-major matrix and `k` enumerates
/// the Kraus operators in binary.
pub fn apply_matrix_rep_tensor(e: &SuperOperator, v: &CVector) -> Result<CVector> {
    let n = e.n_qubits();
    let d = e.dim();
    if v.len() != d * d {
        return Err(Error::dims(format!(
            "vector of length {} for a channel on C^{d}",
            v.len()
        )));
    }
    let kraus = e.kraus();
    let m = kraus.len().next_power_of_two().trailing_zeros() as usize;
    let (r, cc, rb, cb, k) = (
        bit_names("r", n),
        bit_names("c", n),
        bit_names("rb", n),
        bit_names("cb", n),
        bit_names("k", m),
    );
    let kraus_tensor = |rows: &[String], cols: &[String], conj: bool| -> Result<Tensor> {
        let mut indices = rows.to_vec();
        indices.extend_from_slice(cols);
        indices.extend_from_slice(&k);
        let data = (0..1usize << (2 * n + m))
            .map(|off| {
                let (row, col, which) = (off & (d - 1), (off >> n) & (d - 1), off >> (2 * n));
                match kraus.get(which) {
                    Some(op) if conj => op[(row, col)].conj(),
                    Some(op) => op[(row, col)],
                    None => Complex64::new(0.0, 0.0),
                }
            })
            .collect();
        Tensor::new(indices, data)
    };
    let mut x_indices = cc.clone();
    x_indices.extend_from_slice(&cb);
    // bit layout: c on the low bits, c' on the high bits, so offset = c + d c'
    let x = unvec_row_major(v, d, d);
    let x_data = (0..d * d).map(|off| x[(off & (d - 1), off >> n)]).collect();
    let nodes = vec![
        Tensor::new(x_indices, x_data)?,
        kraus_tensor(&r, &cc, false)?,
        kraus_tensor(&rb, &cb, true)?,
    ];
    let mut open = r.clone();
    open.extend_from_slice(&rb);
    let out = contract_network(&TensorNetwork::new(nodes, open)?)?;
    // row-major vec index r*d + r' puts r' on the low bits
    let mut order = rb;
    order.extend(r);
    out.to_vector(&order)
}

/// Least fixed point of `X ↦ X ∨ E(X)` from `supp(ρ)`.
pub fn reachable_fixpoint_oracle(c: &QuantumMarkovChain, rho: &CMatrix) -> Result<Subspace> {
    Ok(fixpoint_chain(c, rho)?
        .pop()
        .expect("chain starts with supp(ρ)"))
}

/// The ascending chain `X_0 = supp(ρ) ⊆ X_1 ⊆ ...` up to its first repeat.
pub fn fixpoint_chain(c: &QuantumMarkovChain, rho: &CMatrix) -> Result<Vec<Subspace>> {
    let mut chain = vec![initial_support(c, rho)?];
    loop {
        let x = chain.last().expect("non-empty");
        let next = x.join(&image(&c.channel, x)?)?;
        if next.dim() <= x.dim() {
            return Ok(chain);
        }
        chain.push(next);
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::{gate, noise};
    use crate::linalg::{basis_vector, cr, outer};
    use crate::random;
    use rand::SeedableRng;

    fn ket(i: usize) -> CMatrix {
        outer(&basis_vector(2, i))
    }

    fn plus() -> CVector {
        CVector::from_vec(vec![cr(1.0), cr(1.0)]).unscale(2f64.sqrt())
    }

    fn x_chain() -> QuantumMarkovChain {
        QuantumMarkovChain::new(gate("X", &[]).unwrap()).unwrap()
    }

    fn span(v: CVector) -> Subspace {
        Subspace::span(&[v]).unwrap()
    }

    #[test]
    fn image_examples() {
        let s0 = span(basis_vector(2, 0));
        assert!(image(&SuperOperator::identity(1), &s0)
            .unwrap()
            .approx_eq(&s0)
            .unwrap());
        let img = image(x_chain().channel(), &s0).unwrap();
        assert!(img.approx_eq(&span(basis_vector(2, 1))).unwrap());
        assert_eq!(
            image(&noise("bitflip", 0.5).unwrap(), &s0).unwrap().dim(),
            2
        );
        assert!(image(&SuperOperator::identity(2), &s0).is_err());
    }

    #[test]
    fn adjacency_examples() {
        let id = QuantumMarkovChain::new(SuperOperator::identity(1)).unwrap();
        assert!(adjacent(&id, &ket(0), &ket(0)).unwrap());
        assert!(adjacent(&x_chain(), &ket(0), &ket(1)).unwrap());
        assert!(!adjacent(&x_chain(), &ket(0), &outer(&plus())).unwrap());
        assert!(adjacent_vector(&x_chain(), &ket(0), &basis_vector(2, 1)).unwrap());
        assert!(!adjacent_vector(&x_chain(), &ket(0), &plus()).unwrap());
    }

    #[test]
    fn reachable_examples() {
        let id = QuantumMarkovChain::new(SuperOperator::identity(1)).unwrap();
        let s0 = span(basis_vector(2, 0));
        for f in [
            reachable_subspace,
            reachable_subspace_vectorized,
            reachable_fixpoint_oracle,
        ] {
            assert!(f(&id, &ket(0)).unwrap().approx_eq(&s0).unwrap());
            assert_eq!(f(&x_chain(), &ket(0)).unwrap().dim(), 2);
        }
        let pf = QuantumMarkovChain::new(noise("phaseflip", 0.5).unwrap()).unwrap();
        assert_eq!(
            reachable_fixpoint_oracle(&pf, &outer(&plus()))
                .unwrap()
                .dim(),
            2
        );
        assert_eq!(reachable_subspace(&pf, &outer(&plus())).unwrap().dim(), 2);
        let chain = fixpoint_chain(&x_chain(), &ket(0)).unwrap();
        assert_eq!(
            chain.iter().map(Subspace::dim).collect::<Vec<_>>(),
            vec![1, 2]
        );
    }

    #[test]
    fn tensor_application_matches_dense() {
        let mut rng = rand::rngs::StdRng::seed_from_u64(11);
        for (n, k) in [(1, 1), (1, 3), (2, 2), (3, 5)] {
            let e = random::channel(&mut rng, n, k);
            let d = e.dim();
            let v = random::state(&mut rng, d * d);
            let dense = e.matrix_rep() * &v;
            let via_tensor = apply_matrix_rep_tensor(&e, &v).unwrap();
            assert!((dense - via_tensor).norm() < 1e-12);
        }
    }

    #[test]
    fn routes_agree_on_block_channels() {
        let mut rng = rand::rngs::StdRng::seed_from_u64(5);
        for d in [2, 4, 8] {
            let e = random::block_channel(&mut rng, d, d / 2, 2);
            let c = QuantumMarkovChain::new(e).unwrap();
            let rho = random::pure_density(&mut rng, d);
            let a = reachable_subspace(&c, &rho).unwrap();
            let b = reachable_subspace_vectorized_with(&c, &rho, VectorRoute::Dense).unwrap();
            let t = reachable_subspace_vectorized_with(&c, &rho, VectorRoute::Tensor).unwrap();
            let f = reachable_fixpoint_oracle(&c, &rho).unwrap();
            for other in [&b, &t, &f] {
                assert_eq!(a.dim(), other.dim());
                assert!(a.distance(other).unwrap() < 1e-7);
            }
        }
    }

    #[test]
    fn unitary_orbit_fills_the_space() {
        // one new direction per step; the last one is faint in the summed state
        let mut rng = rand::rngs::StdRng::seed_from_u64(11);
        for _ in 0..50 {
            let c = QuantumMarkovChain::new(random::unitary_channel(&mut rng, 3)).unwrap();
            let rho = random::pure_density(&mut rng, 8);
            assert_eq!(reachable_subspace(&c, &rho).unwrap().dim(), 8);
            assert_eq!(reachable_fixpoint_oracle(&c, &rho).unwrap().dim(), 8);
        }
    }

    #[test]
    fn rejects_bad_inputs() {
        assert!(reachable_subspace(&x_chain(), &CMatrix::zeros(2, 2)).is_err());
        assert!(reachable_subspace(&x_chain(), &CMatrix::identity(4, 4)).is_err());
        let reducing = crate::qts::OpSpec::measure(&[1], 0).to_channel(1).unwrap();
        assert!(QuantumMarkovChain::new(reducing).is_err());
    }
}
