//! Workloads shared by the benchmarks.

use qmc_core::channel::{gate_matrix, gate_targets};
use qmc_core::random;
use qmc_core::tensor::CircuitNetwork;
use qmc_core::{QuantumMarkovChain, TensorNetwork};
use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};

/// `layers` of random single-qubit unitaries followed by a CX ladder.
pub fn brickwork(n_qubits: usize, layers: usize, seed: u64) -> TensorNetwork {
    let mut rng = StdRng::seed_from_u64(seed);
    let mut circuit = CircuitNetwork::new(n_qubits);
    let cx = gate_matrix("CX", &[]).expect("CX is a known gate");
    for layer in 0..layers {
        for q in 1..=n_qubits {
            circuit
                .gate(&random::unitary(&mut rng, 2), &[q])
                .expect("qubit in range");
        }
        for q in (1 + layer % 2..n_qubits).step_by(2) {
            circuit
                .gate(&cx, &gate_targets("CX", &[q, q + 1]))
                .expect("qubits in range");
        }
    }
    circuit
        .into_network()
        .expect("circuit wires are consistent")
}

/// Random block-invariant chain on `n_qubits` with a random pure state.
pub fn chain(n_qubits: usize, seed: u64) -> (QuantumMarkovChain, qmc_core::CMatrix) {
    let mut rng = StdRng::seed_from_u64(seed);
    let d = 1 << n_qubits;
    let block = rng.random_range(1..=d);
    let e = random::block_channel(&mut rng, d, block, 2);
    let rho = random::pure_density(&mut rng, d);
    (
        QuantumMarkovChain::new(e).expect("block channels preserve trace"),
        rho,
    )
}
