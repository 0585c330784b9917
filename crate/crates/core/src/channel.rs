//! Super-operators in Kraus form.
//!
//! A [`SuperOperator`] on `n` qubits is a non-empty list of `2^n x 2^n` Kraus
//! matrices acting as `E(ρ) = Σ_i E_i ρ E_i†`. Measurement branches are
//! trace-reducing super-operators with a single Kraus matrix `M_m`.
//!
//! # Vectorisation conventions
//!
//! [`SuperOperator::matrix_rep`] is `M_E = Σ_i E_i ⊗ conj(E_i)` with the
//! standard Kronecker product, and density matrices are vectorised row-major
//! ([`vec_row_major`]). Under this convention `vec(E(A)) = M_E vec(A)` and
//! `(E(A) ⊗ I)|Ψ> = M_E (A ⊗ I)|Ψ>` for `|Ψ> = Σ_k |kk>`.
//!
//! Consequences for composition:
//!
//! * [`compose_sequential`]`(e, f)` runs `e` first and then `f`, and its
//!   matrix representation is `M_F · M_E`.
//! * [`compose_parallel`]`(e, f)` puts `e` on the low qubits and `f` on the
//!   qubits after them. Its matrix representation is `M_F ⊗ M_E` with the two
//!   middle tensor factors exchanged: entry `((r_f, r_e), (c_f, c_e))` of the
//!   composite's row index corresponds to `(r_f, c_f), (r_e, c_e)` of
//!   `M_F ⊗ M_E`. [`parallel_matrix_rep`] builds it that way.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::linalg::{
    basis_vector, c, check_hermitian, cr, dim_to_qubits, kron, max_abs, min_eigenvalue, trace,
    vec_row_major, CMatrix, CVector,
};
use crate::tol;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TraceClass {
    Preserving,
    Reducing,
}

#[derive(Debug, Clone)]
pub struct SuperOperator {
    n_qubits: usize,
    kraus: Vec<CMatrix>,
    trace_class: TraceClass,
}

impl SuperOperator {
    /// Validates shapes and classifies the Kraus set as trace preserving
    /// (`Σ E†E = I`) or trace reducing (`Σ E†E ≼ I`).
    pub fn new(kraus: Vec<CMatrix>) -> Result<Self> {
        let first = kraus.first().ok_or_else(|| {
            Error::BadParameter("a super-operator needs at least one Kraus operator".into())
        })?;
        let dim = first.nrows();
        let n_qubits = dim_to_qubits(dim)
            .ok_or_else(|| Error::dims(format!("Kraus dimension {dim} is not a power of two")))?;
        for k in &kraus {
            if k.nrows() != dim || k.ncols() != dim {
                return Err(Error::dims(format!(
                    "Kraus operator is {}x{}, expected {dim}x{dim}",
                    k.nrows(),
                    k.ncols()
                )));
            }
        }
        let effect = effect_of(&kraus);
        let defect = max_abs(&(&effect - CMatrix::identity(dim, dim)));
        let trace_class = if defect <= tol::NORM {
            TraceClass::Preserving
        } else if min_eigenvalue(&(CMatrix::identity(dim, dim) - &effect)) >= -tol::NORM {
            TraceClass::Reducing
        } else {
            return Err(Error::NotTraceNonIncreasing(defect));
        };
        Ok(SuperOperator {
            n_qubits,
            kraus,
            trace_class,
        })
    }

    pub fn unitary(u: CMatrix) -> Result<Self> {
        let op = SuperOperator::new(vec![u])?;
        if op.trace_class != TraceClass::Preserving {
            return Err(Error::BadParameter("matrix is not unitary".into()));
        }
        Ok(op)
    }

    pub fn identity(n_qubits: usize) -> Self {
        let d = 1 << n_qubits;
        SuperOperator {
            n_qubits,
            kraus: vec![CMatrix::identity(d, d)],
            trace_class: TraceClass::Preserving,
        }
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn dim(&self) -> usize {
        1 << self.n_qubits
    }

    pub fn kraus(&self) -> &[CMatrix] {
        &self.kraus
    }

    pub fn trace_class(&self) -> TraceClass {
        self.trace_class
    }

    /// `Σ_i E_i† E_i`
    pub fn effect(&self) -> CMatrix {
        effect_of(&self.kraus)
    }

    pub fn apply(&self, rho: &CMatrix) -> Result<CMatrix> {
        let d = self.dim();
        if rho.shape() != (d, d) {
            return Err(Error::dims(format!(
                "{}-qubit channel applied to a {}x{} matrix",
                self.n_qubits,
                rho.nrows(),
                rho.ncols()
            )));
        }
        let mut out = CMatrix::zeros(d, d);
        for k in &self.kraus {
            out += k * rho * k.adjoint();
        }
        Ok(out)
    }

    /// `M_E = Σ_i E_i ⊗ conj(E_i)`, a `4^n x 4^n` matrix.
    pub fn matrix_rep(&self) -> CMatrix {
        let d = self.dim();
        let mut m = CMatrix::zeros(d * d, d * d);
        for k in &self.kraus {
            m += kron(k, &k.conjugate());
        }
        m
    }

    pub fn then(&self, next: &SuperOperator) -> Result<SuperOperator> {
        compose_sequential(self, next)
    }
}

fn effect_of(kraus: &[CMatrix]) -> CMatrix {
    let d = kraus[0].nrows();
    kraus
        .iter()
        .fold(CMatrix::zeros(d, d), |acc, k| acc + k.adjoint() * k)
}

fn classify(kraus: Vec<CMatrix>, n_qubits: usize, a: TraceClass, b: TraceClass) -> SuperOperator {
    let trace_class = if a == TraceClass::Preserving && b == TraceClass::Preserving {
        TraceClass::Preserving
    } else {
        TraceClass::Reducing
    };
    SuperOperator {
        n_qubits,
        kraus,
        trace_class,
    }
}

/// `e` followed by `f`. The Kraus set is every product `F_j E_i`; it is not
/// minimised.
pub fn compose_sequential(e: &SuperOperator, f: &SuperOperator) -> Result<SuperOperator> {
    if e.n_qubits != f.n_qubits {
        return Err(Error::dims(format!(
            "sequential composition of {}- and {}-qubit channels",
            e.n_qubits, f.n_qubits
        )));
    }
    let kraus = f
        .kraus
        .iter()
        .flat_map(|fj| e.kraus.iter().map(move |ei| fj * ei))
        .collect();
    Ok(classify(kraus, e.n_qubits, e.trace_class, f.trace_class))
}

/// `e` on qubits `1..=n_e`, `f` on qubits `n_e+1..=n_e+n_f`.
pub fn compose_parallel(e: &SuperOperator, f: &SuperOperator) -> SuperOperator {
    let kraus = f
        .kraus
        .iter()
        .flat_map(|fj| e.kraus.iter().map(move |ei| kron(fj, ei)))
        .collect();
    classify(kraus, e.n_qubits + f.n_qubits, e.trace_class, f.trace_class)
}

/// Matrix representation of `e ⊗ f` assembled from `M_E` and `M_F`: the
/// Kronecker product `M_F ⊗ M_E` with its middle factors exchanged.
pub fn parallel_matrix_rep(m_e: &CMatrix, m_f: &CMatrix, d_e: usize, d_f: usize) -> CMatrix {
    let mf_me = kron(m_f, m_e);
    let d = d_e * d_f;
    // composite index (r, c) with r = r_f*d_e + r_e, c = c_f*d_e + c_e
    // maps to ((r_f*d_f + c_f) * d_e^2 + r_e*d_e + c_e) in M_F ⊗ M_E.
    let shuffle = |idx: usize| {
        let (r, col) = (idx / d, idx % d);
        let (r_f, r_e) = (r / d_e, r % d_e);
        let (c_f, c_e) = (col / d_e, col % d_e);
        (r_f * d_f + c_f) * d_e * d_e + r_e * d_e + c_e
    };
    CMatrix::from_fn(d * d, d * d, |i, j| mf_me[(shuffle(i), shuffle(j))])
}

fn check_targets(targets: &[usize], total: usize) -> Result<()> {
    for (i, &t) in targets.iter().enumerate() {
        if t == 0 || t > total {
            return Err(Error::TargetOutOfRange { target: t, total });
        }
        if targets[..i].contains(&t) {
            return Err(Error::RepeatedQubit(t));
        }
    }
    Ok(())
}

/// Lifts a local `k x k` operator to `total` qubits: local qubit `j`
/// (weight `2^(j-1)` in the local index) is placed on `targets[j-1]`.
pub fn embed_matrix(local: &CMatrix, targets: &[usize], total: usize) -> Result<CMatrix> {
    check_targets(targets, total)?;
    if local.nrows() != 1 << targets.len() || !local.is_square() {
        return Err(Error::dims(format!(
            "{}x{} operator on {} target qubits",
            local.nrows(),
            local.ncols(),
            targets.len()
        )));
    }
    let dim = 1usize << total;
    let target_mask: usize = targets.iter().map(|&t| 1 << (t - 1)).sum();
    let local_index = |x: usize| {
        targets
            .iter()
            .enumerate()
            .map(|(j, &t)| ((x >> (t - 1)) & 1) << j)
            .sum::<usize>()
    };
    let locals: Vec<usize> = (0..dim).map(local_index).collect();
    let mut out = CMatrix::zeros(dim, dim);
    for x in 0..dim {
        for y in 0..dim {
            if x & !target_mask == y & !target_mask {
                out[(x, y)] = local[(locals[x], locals[y])];
            }
        }
    }
    Ok(out)
}

pub fn embed(e: &SuperOperator, targets: &[usize], total: usize) -> Result<SuperOperator> {
    if targets.len() != e.n_qubits {
        return Err(Error::dims(format!(
            "{}-qubit channel placed on {} targets",
            e.n_qubits,
            targets.len()
        )));
    }
    let kraus = e
        .kraus
        .iter()
        .map(|k| embed_matrix(k, targets, total))
        .collect::<Result<Vec<_>>>()?;
    Ok(SuperOperator {
        n_qubits: total,
        kraus,
        trace_class: e.trace_class,
    })
}

/// Both sides of `(E(A) ⊗ I)|Ψ> = M_E (A ⊗ I)|Ψ>`, evaluated literally.
pub fn vectorize_check(e: &SuperOperator, a: &CMatrix) -> Result<(CVector, CVector)> {
    let d = e.dim();
    if a.shape() != (d, d) {
        return Err(Error::dims(format!(
            "{}x{} matrix for a {d}-dimensional channel",
            a.nrows(),
            a.ncols()
        )));
    }
    let psi = max_entangled(d);
    let id = CMatrix::identity(d, d);
    let lhs = kron(&e.apply(a)?, &id) * &psi;
    let rhs = e.matrix_rep() * (kron(a, &id) * &psi);
    Ok((lhs, rhs))
}

/// Unnormalised `|Ψ> = Σ_k |k>|k>` on `C^d ⊗ C^d`.
pub fn max_entangled(d: usize) -> CVector {
    (0..d).fold(CVector::zeros(d * d), |acc, k| {
        acc + basis_vector(d * d, k * d + k)
    })
}

/// `vec(ρ)` for use with [`SuperOperator::matrix_rep`].
pub fn vectorize(rho: &CMatrix) -> CVector {
    vec_row_major(rho)
}

#[derive(Debug, Clone)]
pub struct Measurement {
    n_qubits: usize,
    branches: Vec<(u64, CMatrix)>,
}

#[derive(Debug, Clone)]
pub struct MeasureOutcome {
    pub outcome: u64,
    pub probability: f64,
    pub post_state: CMatrix,
}

impl Measurement {
    pub fn new(branches: Vec<(u64, CMatrix)>) -> Result<Self> {
        let ops: Vec<CMatrix> = branches.iter().map(|(_, m)| m.clone()).collect();
        let op = SuperOperator::new(ops)?;
        if op.trace_class != TraceClass::Preserving {
            let defect = max_abs(&(op.effect() - CMatrix::identity(op.dim(), op.dim())));
            return Err(Error::BadParameter(format!(
                "measurement operators do not satisfy Σ M†M = I (defect {defect:.3e})"
            )));
        }
        Ok(Measurement {
            n_qubits: op.n_qubits,
            branches,
        })
    }

    /// Projective measurement of `k` qubits in the computational basis;
    /// outcome `x` is the local basis index.
    pub fn computational(k: usize) -> Self {
        let d = 1usize << k;
        let branches = (0..d)
            .map(|x| {
                let mut m = CMatrix::zeros(d, d);
                m[(x, x)] = cr(1.0);
                (x as u64, m)
            })
            .collect();
        Measurement {
            n_qubits: k,
            branches,
        }
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn branches(&self) -> &[(u64, CMatrix)] {
        &self.branches
    }

    pub fn outcomes(&self) -> impl Iterator<Item = u64> + '_ {
        self.branches.iter().map(|(m, _)| *m)
    }

    /// Branch `outcome` as the trace-reducing channel `{M_m}`.
    pub fn branch(&self, outcome: u64) -> Option<SuperOperator> {
        self.branches
            .iter()
            .find(|(m, _)| *m == outcome)
            .map(|(_, op)| SuperOperator {
                n_qubits: self.n_qubits,
                kraus: vec![op.clone()],
                trace_class: TraceClass::Reducing,
            })
    }
}

pub fn check_density(rho: &CMatrix) -> Result<()> {
    check_hermitian(rho)?;
    let tr = trace(rho);
    if (tr.re - 1.0).abs() > 1e-9 || tr.im.abs() > 1e-9 {
        return Err(Error::InvalidDensityMatrix(format!(
            "trace is {:.12} + {:.3e}i, expected 1",
            tr.re, tr.im
        )));
    }
    Ok(())
}

/// `p_m = tr(M_m† M_m ρ)` and post-state `M_m ρ M_m† / p_m`; branches with
/// `p_m <= tol::PROB` are omitted.
pub fn measure(m: &Measurement, rho: &CMatrix) -> Result<Vec<MeasureOutcome>> {
    check_density(rho)?;
    let d = 1usize << m.n_qubits;
    if rho.shape() != (d, d) {
        return Err(Error::dims(format!(
            "{}-qubit measurement on a {}x{} state",
            m.n_qubits,
            rho.nrows(),
            rho.ncols()
        )));
    }
    let mut out = Vec::new();
    for (outcome, op) in &m.branches {
        let unnormalised = op * rho * op.adjoint();
        let p = trace(&unnormalised).re;
        if p > tol::PROB {
            out.push(MeasureOutcome {
                outcome: *outcome,
                probability: p,
                post_state: unnormalised.unscale(p),
            });
        }
    }
    Ok(out)
}

/// Names accepted by [`gate_matrix`].
pub const GATE_NAMES: &[&str] = &[
    "I", "H", "X", "Y", "Z", "S", "SDG", "T", "TDG", "RX", "RY", "RZ", "P", "CNOT", "CX", "CZ",
    "SWAP",
];

/// Names accepted by [`noise`].
pub const NOISE_NAMES: &[&str] = &["bitflip", "phaseflip", "bitphaseflip"];

pub fn pauli_x() -> CMatrix {
    CMatrix::from_row_slice(2, 2, &[cr(0.0), cr(1.0), cr(1.0), cr(0.0)])
}

pub fn pauli_y() -> CMatrix {
    CMatrix::from_row_slice(2, 2, &[cr(0.0), c(0.0, -1.0), c(0.0, 1.0), cr(0.0)])
}

pub fn pauli_z() -> CMatrix {
    CMatrix::from_row_slice(2, 2, &[cr(1.0), cr(0.0), cr(0.0), cr(-1.0)])
}

pub fn hadamard() -> CMatrix {
    let s = std::f64::consts::FRAC_1_SQRT_2;
    CMatrix::from_row_slice(2, 2, &[cr(s), cr(s), cr(s), cr(-s)])
}

/// `block-diag(I, X)`: local qubit 2 (the high bit) controls local qubit 1.
pub fn cnot() -> CMatrix {
    let mut m = CMatrix::zeros(4, 4);
    m[(0, 0)] = cr(1.0);
    m[(1, 1)] = cr(1.0);
    m[(2, 3)] = cr(1.0);
    m[(3, 2)] = cr(1.0);
    m
}

fn diag_phase(phase: Complex64) -> CMatrix {
    CMatrix::from_row_slice(2, 2, &[cr(1.0), cr(0.0), cr(0.0), phase])
}

fn expect_params(name: &str, params: &[f64], n: usize) -> Result<()> {
    if params.len() != n {
        return Err(Error::BadParameter(format!(
            "gate {name} takes {n} parameter(s), got {}",
            params.len()
        )));
    }
    if let Some(p) = params.iter().find(|p| !p.is_finite()) {
        return Err(Error::BadParameter(format!(
            "non-finite parameter {p} for {name}"
        )));
    }
    Ok(())
}

/// Matrix of a named gate in its local frame. Gate names are
/// case-insensitive; rotation gates take an angle in radians.
pub fn gate_matrix(name: &str, params: &[f64]) -> Result<CMatrix> {
    let upper = name.to_ascii_uppercase();
    let rot = |params: &[f64]| -> Result<f64> {
        expect_params(&upper, params, 1)?;
        Ok(params[0])
    };
    let m = match upper.as_str() {
        "RX" | "RY" | "RZ" | "P" => {
            let theta = rot(params)?;
            let (cs, sn) = ((theta / 2.0).cos(), (theta / 2.0).sin());
            match upper.as_str() {
                "RX" => CMatrix::from_row_slice(2, 2, &[cr(cs), c(0.0, -sn), c(0.0, -sn), cr(cs)]),
                "RY" => CMatrix::from_row_slice(2, 2, &[cr(cs), cr(-sn), cr(sn), cr(cs)]),
                "RZ" => CMatrix::from_row_slice(
                    2,
                    2,
                    &[
                        Complex64::from_polar(1.0, -theta / 2.0),
                        cr(0.0),
                        cr(0.0),
                        Complex64::from_polar(1.0, theta / 2.0),
                    ],
                ),
                _ => diag_phase(Complex64::from_polar(1.0, theta)),
            }
        }
        other => {
            expect_params(&upper, params, 0)?;
            match other {
                "I" => CMatrix::identity(2, 2),
                "H" => hadamard(),
                "X" => pauli_x(),
                "Y" => pauli_y(),
                "Z" => pauli_z(),
                "S" => diag_phase(c(0.0, 1.0)),
                "SDG" => diag_phase(c(0.0, -1.0)),
                "T" => diag_phase(Complex64::from_polar(1.0, std::f64::consts::FRAC_PI_4)),
                "TDG" => diag_phase(Complex64::from_polar(1.0, -std::f64::consts::FRAC_PI_4)),
                "CNOT" | "CX" => cnot(),
                "CZ" => CMatrix::from_diagonal(&CVector::from_vec(vec![
                    cr(1.0),
                    cr(1.0),
                    cr(1.0),
                    cr(-1.0),
                ])),
                "SWAP" => {
                    let mut m = CMatrix::zeros(4, 4);
                    m[(0, 0)] = cr(1.0);
                    m[(1, 2)] = cr(1.0);
                    m[(2, 1)] = cr(1.0);
                    m[(3, 3)] = cr(1.0);
                    m
                }
                _ => return Err(Error::UnknownGate(name.to_string())),
            }
        }
    };
    Ok(m)
}

pub fn gate(name: &str, params: &[f64]) -> Result<SuperOperator> {
    SuperOperator::unitary(gate_matrix(name, params)?)
}

/// Local frame of a named gate applied to `args` as written in a circuit.
/// Controlled-X takes `[control, target]`, while its matrix has the control on
/// local qubit 2, so the pair is swapped; every other gate maps in order.
pub fn gate_targets(name: &str, args: &[usize]) -> Vec<usize> {
    match name.to_ascii_uppercase().as_str() {
        "CNOT" | "CX" if args.len() == 2 => vec![args[1], args[0]],
        _ => args.to_vec(),
    }
}

/// Single-qubit Pauli noise `{√p I, √(1-p) P}`: the Pauli `P` is applied with
/// probability `1 - p`.
pub fn noise(name: &str, p: f64) -> Result<SuperOperator> {
    if !(0.0..=1.0).contains(&p) {
        return Err(Error::BadParameter(format!(
            "noise probability {p} not in [0, 1]"
        )));
    }
    let pauli = match name.to_ascii_lowercase().as_str() {
        "bitflip" | "bit_flip" => pauli_x(),
        "phaseflip" | "phase_flip" => pauli_z(),
        "bitphaseflip" | "bit_phase_flip" => pauli_y(),
        _ => return Err(Error::UnknownGate(name.to_string())),
    };
    SuperOperator::new(vec![
        CMatrix::identity(2, 2).scale(p.sqrt()),
        pauli.scale((1.0 - p).sqrt()),
    ])
}
