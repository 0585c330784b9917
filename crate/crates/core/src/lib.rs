//! Model checking of quantum circuits.
//!
//! Circuits (combinational, noisy, dynamic and sequential) are compiled into
//! quantum transition systems whose transitions carry super-operators in
//! Kraus form. On top of that the crate provides
//!
//! * [`linalg`]: the subspace lattice (support, join, orthocomplement,
//!   intersection) and Schmidt decomposition,
//! * [`tensor`]: tensors over named binary indices and network contraction
//!   with a greedy ordering,
//! * [`channel`]: super-operators, their matrix representation and
//!   composition, plus gate, noise and measurement libraries,
//! * [`qts`]: transition systems, the circuit compiler and the model format,
//! * [`reach`]: reachable subspaces of quantum Markov chains, computed three
//!   independent ways,
//! * [`logic`]: subspace-valued propositions and CTQL formulas with their
//!   parsers,
//! * [`checker`]: CTQL checking over the explicit configuration graph with
//!   witness and counterexample traces.
//!
//! Qubits are numbered from 1 and qubit `i` has weight `2^(i-1)` in a basis
//! index; ket strings such as `|10>` list qubits 1, 2, ... from left to right.

pub mod channel;
pub mod checker;
pub mod error;
pub mod linalg;
pub mod logic;
pub mod qts;
pub mod random;
pub mod reach;
pub mod tensor;
pub mod tol;

mod lexer;

pub use channel::{Measurement, SuperOperator, TraceClass};
pub use checker::{check, Closure, ConfigurationGraph, Verdict, VerdictKind};
pub use error::{Error, Pos, Result};
pub use linalg::{CMatrix, CVector, Subspace};
pub use logic::{Bindings, PathFormula, Proposition, StateFormula};
pub use num_complex::Complex64;
pub use qts::{CircuitIR, Configuration, QuantumTransitionSystem};
pub use reach::QuantumMarkovChain;
pub use tensor::{Tensor, TensorNetwork};
