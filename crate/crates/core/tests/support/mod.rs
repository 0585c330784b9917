//! Shared generators and a path-enumeration reference evaluator for CTQL.
//!
//! The evaluator explores configurations with its own linear-scan dedup and
//! decides path formulas by enumerating simple paths, so it shares no code
//! with the checker's fixpoint labelling.

#![allow(dead_code)]

use qmc_core::channel::{embed_matrix, gate_matrix, gate_targets};
use qmc_core::linalg::{basis_vector, c, cr, max_abs, outer, support, CMatrix, CVector, Subspace};
use qmc_core::logic::satisfies_atomic;
use qmc_core::qts::{GateOp, OpSpec};
use qmc_core::tensor::ContractionStep;
use qmc_core::{
    Bindings, PathFormula, Proposition, QuantumTransitionSystem, StateFormula, Tensor,
    TensorNetwork,
};
use rand::seq::IndexedRandom;
use rand::Rng;

pub const ONE_QUBIT_CLIFFORDS: &[&str] = &["I", "H", "X", "Y", "Z", "S"];
pub const TWO_QUBIT_CLIFFORDS: &[&str] = &["CX", "CZ", "SWAP"];

/// A random named Clifford gate and its targets on `n` qubits.
pub fn random_clifford<R: Rng>(rng: &mut R, n: usize) -> (String, Vec<usize>) {
    if n >= 2 && rng.random_bool(0.35) {
        let name = *TWO_QUBIT_CLIFFORDS.choose(rng).unwrap();
        let a = rng.random_range(1..=n);
        let mut b = rng.random_range(1..=n);
        while b == a {
            b = rng.random_range(1..=n);
        }
        (name.to_string(), vec![a, b])
    } else {
        let name = *ONE_QUBIT_CLIFFORDS.choose(rng).unwrap();
        (name.to_string(), vec![rng.random_range(1..=n)])
    }
}

/// Full-register matrix of a named gate.
pub fn full_matrix(name: &str, qubits: &[usize], n: usize) -> CMatrix {
    let local = gate_matrix(name, &[]).unwrap();
    embed_matrix(&local, &gate_targets(name, qubits), n).unwrap()
}

/// Random stabilizer state, sometimes mixed on the first qubit.
pub fn random_stabilizer_density<R: Rng>(rng: &mut R, n: usize) -> CMatrix {
    let d = 1 << n;
    let mut psi: CVector = basis_vector(d, 0);
    for _ in 0..4 {
        let (name, qs) = random_clifford(rng, n);
        psi = full_matrix(&name, &qs, n) * psi;
    }
    let rho = outer(&psi);
    if rng.random_bool(0.25) {
        let flipped = full_matrix("X", &[1], n);
        (&rho + &flipped * &rho * flipped.adjoint()).unscale(2.0)
    } else {
        rho
    }
}

/// Random QTS over 1..=3 locations whose channels map stabilizer states to
/// stabilizer states, so configuration graphs stay finite. Every location
/// is normalised: a unitary step, a one-qubit measurement, an even mixture
/// of two unitaries, or nothing (the auto self-loop).
pub fn random_clifford_qts<R: Rng>(rng: &mut R, n: usize) -> QuantumTransitionSystem {
    let n_loc = rng.random_range(1..=3);
    let names: Vec<String> = (0..n_loc).map(|i| format!("l{i}")).collect();
    let mut transitions = Vec::new();
    for l in 0..n_loc {
        match rng.random_range(0..4) {
            0 => {
                let (name, qs) = random_clifford(rng, n);
                transitions.push((l, rng.random_range(0..n_loc), OpSpec::gate(&name, &qs)));
            }
            1 => {
                let q = rng.random_range(1..=n);
                for outcome in 0..2 {
                    transitions.push((
                        l,
                        rng.random_range(0..n_loc),
                        OpSpec::measure(&[q], outcome),
                    ));
                }
            }
            2 => {
                let all: Vec<usize> = (1..=n).collect();
                for _ in 0..2 {
                    let (name, qs) = random_clifford(rng, n);
                    let k = full_matrix(&name, &qs, n).scale(std::f64::consts::FRAC_1_SQRT_2);
                    transitions.push((
                        l,
                        rng.random_range(0..n_loc),
                        OpSpec::Apply {
                            op: GateOp::Kraus(vec![k]),
                            qubits: all.clone(),
                        },
                    ));
                }
            }
            _ => {}
        }
    }
    QuantumTransitionSystem::new(n, names, 0, transitions).expect("generated system is normalised")
}

/// Explicit configuration graph built by the reference evaluator.
pub struct RefGraph {
    pub locations: Vec<usize>,
    pub states: Vec<CMatrix>,
    pub succ: Vec<Vec<usize>>,
}

/// Explores every configuration reachable from `rho0`, or `None` when more
/// than `limit` are found.
pub fn explore(sys: &QuantumTransitionSystem, rho0: &CMatrix, limit: usize) -> Option<RefGraph> {
    let root = sys.start(rho0.clone()).ok()?;
    let mut g = RefGraph {
        locations: vec![root.location],
        states: vec![root.state],
        succ: vec![Vec::new()],
    };
    let mut next = 0;
    while next < g.states.len() {
        let cfg = qmc_core::Configuration {
            location: g.locations[next],
            state: g.states[next].clone(),
            probability: 1.0,
        };
        for (c, _) in sys.step(&cfg).ok()? {
            let found = (0..g.states.len()).find(|&j| {
                g.locations[j] == c.location && max_abs(&(&g.states[j] - &c.state)) <= 1e-7
            });
            let j = match found {
                Some(j) => j,
                None => {
                    if g.states.len() == limit {
                        return None;
                    }
                    g.locations.push(c.location);
                    g.states.push(c.state);
                    g.succ.push(Vec::new());
                    g.states.len() - 1
                }
            };
            if !g.succ[next].contains(&j) {
                g.succ[next].push(j);
            }
        }
        next += 1;
    }
    Some(g)
}

/// Reference satisfaction of a state formula at node `v`.
pub fn holds(g: &RefGraph, v: usize, f: &StateFormula, b: &Bindings) -> bool {
    match f {
        StateFormula::Prop(p) => satisfies_atomic(&g.states[v], p, b).unwrap(),
        StateFormula::Not(a) => !holds(g, v, a, b),
        StateFormula::And(x, y) => holds(g, v, x, b) && holds(g, v, y, b),
        StateFormula::Exists(PathFormula::Next(a)) => g.succ[v].iter().any(|&w| holds(g, w, a, b)),
        StateFormula::Forall(PathFormula::Next(a)) => g.succ[v].iter().all(|&w| holds(g, w, a, b)),
        StateFormula::Exists(PathFormula::Until(x, y)) => {
            let sx: Vec<bool> = (0..g.states.len()).map(|u| holds(g, u, x, b)).collect();
            let sy: Vec<bool> = (0..g.states.len()).map(|u| holds(g, u, y, b)).collect();
            let mut on_path = vec![false; g.states.len()];
            some_until_path(g, v, &sx, &sy, &mut on_path)
        }
        StateFormula::Forall(PathFormula::Until(x, y)) => {
            let sx: Vec<bool> = (0..g.states.len()).map(|u| holds(g, u, x, b)).collect();
            let sy: Vec<bool> = (0..g.states.len()).map(|u| holds(g, u, y, b)).collect();
            let mut on_path = vec![false; g.states.len()];
            !some_path_violates_until(g, v, &sx, &sy, &mut on_path)
        }
    }
}

/// Is there a simple path from `u` through `x`-states ending in a `y`-state?
fn some_until_path(g: &RefGraph, u: usize, sx: &[bool], sy: &[bool], on_path: &mut [bool]) -> bool {
    if sy[u] {
        return true;
    }
    if !sx[u] {
        return false;
    }
    on_path[u] = true;
    let found = g.succ[u]
        .iter()
        .any(|&w| !on_path[w] && some_until_path(g, w, sx, sy, on_path));
    on_path[u] = false;
    found
}

/// Is there a path from `u` violating `x U y`: one reaching a state with
/// neither `x` nor `y` first, or one looping forever in `x ∧ ¬y`?
fn some_path_violates_until(
    g: &RefGraph,
    u: usize,
    sx: &[bool],
    sy: &[bool],
    on_path: &mut [bool],
) -> bool {
    if sy[u] {
        return false;
    }
    if !sx[u] {
        return true;
    }
    on_path[u] = true;
    let bad = g.succ[u]
        .iter()
        .any(|&w| on_path[w] || some_path_violates_until(g, w, sx, sy, on_path));
    on_path[u] = false;
    bad
}

/// Candidate atom meanings on `n` qubits: basis-state spans, the supports
/// of some explored states and joins of those.
pub fn atom_pool<R: Rng>(rng: &mut R, n: usize, states: &[CMatrix]) -> Vec<Subspace> {
    let d = 1 << n;
    let mut pool = vec![
        Subspace::span(&[basis_vector(d, 0)]).unwrap(),
        Subspace::span(&[basis_vector(d, d - 1)]).unwrap(),
        Subspace::span(&[CVector::from_fn(d, |_, _| cr(1.0))]).unwrap(),
    ];
    for _ in 0..4 {
        let rho = states.choose(rng).unwrap();
        pool.push(support(rho).unwrap());
    }
    let a = pool.choose(rng).unwrap().clone();
    let b = pool.choose(rng).unwrap().clone();
    pool.push(a.join(&b).unwrap());
    pool
}

pub fn bindings_from_pool<R: Rng>(rng: &mut R, n: usize, pool: &[Subspace]) -> Bindings {
    let mut b = Bindings::new(1 << n);
    for name in ["a", "b", "c"] {
        b.insert(name, pool.choose(rng).unwrap().clone()).unwrap();
    }
    b
}

pub fn random_proposition<R: Rng>(rng: &mut R, depth: usize) -> Proposition {
    let atom = |rng: &mut R| Proposition::atom(["a", "b", "c"].choose(rng).unwrap());
    if depth == 0 {
        return match rng.random_range(0..6) {
            0 => Proposition::True,
            1 => Proposition::False,
            _ => atom(rng),
        };
    }
    match rng.random_range(0..4) {
        0 => Proposition::not(random_proposition(rng, depth - 1)),
        1 => Proposition::and(
            random_proposition(rng, depth - 1),
            random_proposition(rng, depth - 1),
        ),
        2 => Proposition::or(
            random_proposition(rng, depth - 1),
            random_proposition(rng, depth - 1),
        ),
        _ => atom(rng),
    }
}

/// Random formula over the core connectives with `depth() <= depth`.
pub fn random_formula<R: Rng>(rng: &mut R, depth: usize) -> StateFormula {
    if depth == 0 || rng.random_bool(0.15) {
        return StateFormula::prop(random_proposition(rng, 1));
    }
    let sub = |rng: &mut R| random_formula(rng, depth - 1);
    match rng.random_range(0..7) {
        0 => StateFormula::not(sub(rng)),
        1 => StateFormula::and(sub(rng), sub(rng)),
        2 => StateFormula::ex(sub(rng)),
        3 => StateFormula::ax(sub(rng)),
        4 => StateFormula::eu(sub(rng), sub(rng)),
        5 => StateFormula::au(sub(rng), sub(rng)),
        _ => StateFormula::prop(random_proposition(rng, 2)),
    }
}

pub fn random_tensor<R: Rng>(rng: &mut R, indices: Vec<String>) -> Tensor {
    let n = 1usize << indices.len();
    let data = (0..n)
        .map(|_| c(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)))
        .collect();
    Tensor::new(indices, data).unwrap()
}

/// Random network on `n` nodes: each pair shares a bond with probability
/// one half and each node carries up to two open legs.
pub fn random_network<R: Rng>(rng: &mut R, n: usize) -> TensorNetwork {
    let mut legs: Vec<Vec<String>> = vec![Vec::new(); n];
    let mut open = Vec::new();
    for i in 0..n {
        for j in i + 1..n {
            if rng.random_bool(0.5) {
                let name = format!("b{i}_{j}");
                legs[i].push(name.clone());
                legs[j].push(name);
            }
        }
        for k in 0..rng.random_range(0..=2) {
            let name = format!("o{i}_{k}");
            legs[i].push(name.clone());
            open.push(name);
        }
        if legs[i].is_empty() {
            let name = format!("o{i}_x");
            legs[i].push(name.clone());
            open.push(name);
        }
    }
    let nodes = legs.into_iter().map(|l| random_tensor(rng, l)).collect();
    TensorNetwork::new(nodes, open).unwrap()
}

/// Every pairwise contraction schedule of an `n`-node network.
pub fn all_plans(n: usize) -> Vec<Vec<ContractionStep>> {
    fn go(
        live: Vec<usize>,
        next: usize,
        prefix: &mut Vec<ContractionStep>,
        out: &mut Vec<Vec<ContractionStep>>,
    ) {
        if live.len() == 1 {
            out.push(prefix.clone());
            return;
        }
        for a in 0..live.len() {
            for b in a + 1..live.len() {
                let mut rest: Vec<usize> = live
                    .iter()
                    .enumerate()
                    .filter(|&(k, _)| k != a && k != b)
                    .map(|(_, &v)| v)
                    .collect();
                rest.push(next);
                prefix.push(ContractionStep {
                    left: live[a],
                    right: live[b],
                });
                go(rest, next + 1, prefix, out);
                prefix.pop();
            }
        }
    }
    let mut out = Vec::new();
    go((0..n).collect(), n, &mut Vec::new(), &mut out);
    out
}
