//! Tensors over named binary indices and tensor-network contraction.
//!
//! A tensor of rank `r` stores `2^r` amplitudes; the bit assigned to its
//! `i`-th index carries weight `2^i` in the flat data offset, the same
//! little-endian convention used for qubits.
//!
//! Operators become tensors over `inputs ++ outputs` with
//! `T(in = y, out = x) = U[x][y]`, so contracting a state on the input
//! names yields `U|ψ>` on the output names.

use std::collections::{BTreeMap, BTreeSet};

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::linalg::{CMatrix, CVector};

/// Dense tensors above this rank are refused.
pub const MAX_RANK: usize = 26;

#[derive(Debug, Clone, PartialEq)]
pub struct Tensor {
    indices: Vec<String>,
    data: Vec<Complex64>,
}

impl Tensor {
    pub fn new(indices: Vec<String>, data: Vec<Complex64>) -> Result<Self> {
        check_rank(indices.len())?;
        for (i, name) in indices.iter().enumerate() {
            if indices[..i].contains(name) {
                return Err(Error::IndexCollision(name.clone()));
            }
        }
        if data.len() != 1 << indices.len() {
            return Err(Error::dims(format!(
                "rank-{} tensor needs {} entries, got {}",
                indices.len(),
                1usize << indices.len(),
                data.len()
            )));
        }
        Ok(Tensor { indices, data })
    }

    pub fn scalar(z: Complex64) -> Self {
        Tensor {
            indices: Vec::new(),
            data: vec![z],
        }
    }

    /// State tensor: `names[i]` is qubit `i + 1` of `v`.
    pub fn from_state(v: &CVector, names: &[String]) -> Result<Self> {
        Tensor::new(names.to_vec(), v.iter().copied().collect())
    }

    /// Operator tensor over `inputs ++ outputs` (see module docs).
    pub fn from_operator(m: &CMatrix, inputs: &[String], outputs: &[String]) -> Result<Self> {
        let k_in = inputs.len();
        if m.ncols() != 1 << k_in || m.nrows() != 1 << outputs.len() {
            return Err(Error::dims(format!(
                "{}x{} operator with {} input and {} output indices",
                m.nrows(),
                m.ncols(),
                k_in,
                outputs.len()
            )));
        }
        let mut indices = inputs.to_vec();
        indices.extend_from_slice(outputs);
        check_rank(indices.len())?;
        let data = (0..1usize << indices.len())
            .map(|idx| m[(idx >> k_in, idx & ((1 << k_in) - 1))])
            .collect();
        Tensor::new(indices, data)
    }

    pub fn rank(&self) -> usize {
        self.indices.len()
    }

    pub fn indices(&self) -> &[String] {
        &self.indices
    }

    pub fn data(&self) -> &[Complex64] {
        &self.data
    }

    pub fn position(&self, name: &str) -> Option<usize> {
        self.indices.iter().position(|n| n == name)
    }

    /// Entry for an assignment given in index order.
    pub fn get(&self, bits: &[u8]) -> Complex64 {
        let offset = bits
            .iter()
            .enumerate()
            .map(|(i, &b)| (b as usize & 1) << i)
            .sum::<usize>();
        self.data[offset]
    }

    /// Same tensor with indices reordered to `order`.
    pub fn permuted(&self, order: &[String]) -> Result<Tensor> {
        if order.len() != self.rank() {
            return Err(Error::dims(format!(
                "permutation of length {} for a rank-{} tensor",
                order.len(),
                self.rank()
            )));
        }
        let src: Vec<usize> = order
            .iter()
            .map(|n| {
                self.position(n)
                    .ok_or_else(|| Error::dims(format!("tensor has no index `{n}`")))
            })
            .collect::<Result<_>>()?;
        let data = (0..self.data.len())
            .map(|new| {
                let old = src
                    .iter()
                    .enumerate()
                    .map(|(j, &p)| ((new >> j) & 1) << p)
                    .sum::<usize>();
                self.data[old]
            })
            .collect();
        Tensor::new(order.to_vec(), data)
    }

    /// Flattens to a vector with `order[i]` as bit `i`.
    pub fn to_vector(&self, order: &[String]) -> Result<CVector> {
        let t = self.permuted(order)?;
        Ok(CVector::from_vec(t.data))
    }

    /// Largest entrywise difference after aligning index order.
    pub fn max_diff(&self, other: &Tensor) -> Result<f64> {
        let aligned = other.permuted(&self.indices)?;
        Ok(self
            .data
            .iter()
            .zip(&aligned.data)
            .fold(0.0, |acc, (a, b)| acc.max((a - b).norm())))
    }
}

fn check_rank(rank: usize) -> Result<()> {
    if rank > MAX_RANK {
        Err(Error::RankTooLarge {
            rank,
            max: MAX_RANK,
        })
    } else {
        Ok(())
    }
}

/// Offsets obtained by scattering the bits of `0..2^positions.len()` onto
/// the given bit positions.
fn scatter_table(positions: &[usize]) -> Vec<usize> {
    (0..1usize << positions.len())
        .map(|v| {
            positions
                .iter()
                .enumerate()
                .map(|(j, &p)| ((v >> j) & 1) << p)
                .sum()
        })
        .collect()
}

/// Contracts every index shared by name. The result is indexed by `a`'s free
/// indices followed by `b`'s, each in their original order.
pub fn contract_pair(a: &Tensor, b: &Tensor) -> Result<Tensor> {
    let shared: Vec<&String> = a.indices.iter().filter(|n| b.indices.contains(n)).collect();
    let a_free: Vec<usize> = (0..a.rank())
        .filter(|&i| !shared.contains(&&a.indices[i]))
        .collect();
    let b_free: Vec<usize> = (0..b.rank())
        .filter(|&i| !shared.contains(&&b.indices[i]))
        .collect();
    let out_rank = a_free.len() + b_free.len();
    check_rank(out_rank)?;

    let a_shared: Vec<usize> = shared.iter().map(|n| a.position(n).unwrap()).collect();
    let b_shared: Vec<usize> = shared.iter().map(|n| b.position(n).unwrap()).collect();
    let a_free_tab = scatter_table(&a_free);
    let b_free_tab = scatter_table(&b_free);
    let a_sh_tab = scatter_table(&a_shared);
    let b_sh_tab = scatter_table(&b_shared);

    let a_mask = (1usize << a_free.len()) - 1;
    let shift = a_free.len();
    let data = (0..1usize << out_rank)
        .map(|out| {
            let ao = a_free_tab[out & a_mask];
            let bo = b_free_tab[out >> shift];
            a_sh_tab
                .iter()
                .zip(&b_sh_tab)
                .map(|(sa, sb)| a.data[ao | sa] * b.data[bo | sb])
                .sum()
        })
        .collect();

    let mut indices: Vec<String> = a_free.iter().map(|&i| a.indices[i].clone()).collect();
    indices.extend(b_free.iter().map(|&i| b.indices[i].clone()));
    Tensor::new(indices, data)
}

/// Network of tensors; each index name is either open (one node) or shared
/// by exactly two nodes.
#[derive(Debug, Clone)]
pub struct TensorNetwork {
    nodes: Vec<Tensor>,
    open: Vec<String>,
}

/// One pairwise contraction. Input nodes have ids `0..n`; step `s` creates
/// node `n + s`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ContractionStep {
    pub left: usize,
    pub right: usize,
}

impl TensorNetwork {
    pub fn new(nodes: Vec<Tensor>, open: Vec<String>) -> Result<Self> {
        if nodes.is_empty() {
            return Err(Error::MalformedNetwork("network has no nodes".into()));
        }
        let mut counts: BTreeMap<&str, usize> = BTreeMap::new();
        for t in &nodes {
            for n in &t.indices {
                *counts.entry(n.as_str()).or_default() += 1;
            }
        }
        let open_set: BTreeSet<&str> = open.iter().map(String::as_str).collect();
        if open_set.len() != open.len() {
            return Err(Error::MalformedNetwork("open index listed twice".into()));
        }
        for (name, &count) in &counts {
            match (count, open_set.contains(name)) {
                (1, true) | (2, false) => {}
                (1, false) => {
                    return Err(Error::MalformedNetwork(format!(
                        "index `{name}` is dangling but not declared open"
                    )))
                }
                (2, true) => {
                    return Err(Error::MalformedNetwork(format!(
                        "open index `{name}` is shared by two nodes"
                    )))
                }
                _ => {
                    return Err(Error::MalformedNetwork(format!(
                        "index `{name}` appears in {count} nodes"
                    )))
                }
            }
        }
        if let Some(missing) = open.iter().find(|n| !counts.contains_key(n.as_str())) {
            return Err(Error::MalformedNetwork(format!(
                "open index `{missing}` does not occur in any node"
            )));
        }
        Ok(TensorNetwork { nodes, open })
    }

    pub fn nodes(&self) -> &[Tensor] {
        &self.nodes
    }

    pub fn open_indices(&self) -> &[String] {
        &self.open
    }
}

fn symmetric_difference(a: &BTreeSet<String>, b: &BTreeSet<String>) -> BTreeSet<String> {
    a.symmetric_difference(b).cloned().collect()
}

/// Greedy schedule: repeatedly contract the pair whose result has the
/// fewest entries, ties broken by the lexicographically smallest id pair.
pub fn plan_order(net: &TensorNetwork) -> Vec<ContractionStep> {
    let mut live: Vec<(usize, BTreeSet<String>)> = net
        .nodes
        .iter()
        .enumerate()
        .map(|(i, t)| (i, t.indices.iter().cloned().collect()))
        .collect();
    let mut next_id = net.nodes.len();
    let mut steps = Vec::new();
    while live.len() > 1 {
        let mut best: Option<(usize, usize, usize, usize, usize)> = None; // rank, id_l, id_r, pos_l, pos_r
        for i in 0..live.len() {
            for j in i + 1..live.len() {
                let rank = symmetric_difference(&live[i].1, &live[j].1).len();
                let (l, r) = (live[i].0.min(live[j].0), live[i].0.max(live[j].0));
                let key = (rank, l, r);
                if best.is_none_or(|b| key < (b.0, b.1, b.2)) {
                    best = Some((rank, l, r, i, j));
                }
            }
        }
        let (_, l, r, i, j) = best.expect("at least two live nodes");
        let merged = symmetric_difference(&live[i].1, &live[j].1);
        live.remove(j);
        live.remove(i);
        live.push((next_id, merged));
        next_id += 1;
        steps.push(ContractionStep { left: l, right: r });
    }
    steps
}

/// Executes a schedule and returns the result over the network's open
/// indices, in declaration order.
pub fn contract_with_plan(net: &TensorNetwork, plan: &[ContractionStep]) -> Result<Tensor> {
    let n = net.nodes.len();
    if plan.len() + 1 != n {
        return Err(Error::MalformedNetwork(format!(
            "plan has {} steps for {n} nodes",
            plan.len()
        )));
    }
    let mut slots: Vec<Option<Tensor>> = net.nodes.iter().cloned().map(Some).collect();
    for step in plan {
        let take = |slots: &mut Vec<Option<Tensor>>, id: usize| {
            slots.get_mut(id).and_then(Option::take).ok_or_else(|| {
                Error::MalformedNetwork(format!("plan uses node {id} twice or before it exists"))
            })
        };
        let a = take(&mut slots, step.left)?;
        let b = take(&mut slots, step.right)?;
        slots.push(Some(contract_pair(&a, &b)?));
    }
    let result = slots
        .pop()
        .flatten()
        .ok_or_else(|| Error::MalformedNetwork("empty plan result".into()))?;
    result.permuted(&net.open)
}

pub fn contract_network(net: &TensorNetwork) -> Result<Tensor> {
    contract_with_plan(net, &plan_order(net))
}

/// Largest intermediate rank a schedule produces.
pub fn max_intermediate_rank(net: &TensorNetwork, plan: &[ContractionStep]) -> usize {
    let mut sets: Vec<BTreeSet<String>> = net
        .nodes
        .iter()
        .map(|t| t.indices.iter().cloned().collect())
        .collect();
    let mut worst = 0;
    for s in plan {
        let merged = symmetric_difference(&sets[s.left], &sets[s.right]);
        worst = worst.max(merged.len());
        sets.push(merged);
    }
    worst
}

/// Builds the tensor network of a gate sequence. Each qubit wire is renamed
/// with a fresh prime after every gate touching it: `q1`, `q1'`, `q1''`, ...
#[derive(Debug, Clone)]
pub struct CircuitNetwork {
    n_qubits: usize,
    nodes: Vec<Tensor>,
    inputs: Vec<String>,
    wires: Vec<String>,
    has_input_state: bool,
}

impl CircuitNetwork {
    pub fn new(n_qubits: usize) -> Self {
        let wires: Vec<String> = (1..=n_qubits).map(|q| format!("q{q}")).collect();
        CircuitNetwork {
            n_qubits,
            nodes: Vec::new(),
            inputs: wires.clone(),
            wires,
            has_input_state: false,
        }
    }

    pub fn with_input(state: &CVector) -> Result<Self> {
        let n = crate::linalg::dim_to_qubits(state.len())
            .ok_or_else(|| Error::dims(format!("state of length {}", state.len())))?;
        let mut net = CircuitNetwork::new(n);
        net.nodes.push(Tensor::from_state(state, &net.wires)?);
        net.has_input_state = true;
        Ok(net)
    }

    /// Appends a gate; local qubit `j` of `matrix` acts on `targets[j-1]`.
    pub fn gate(&mut self, matrix: &CMatrix, targets: &[usize]) -> Result<&mut Self> {
        for (i, &t) in targets.iter().enumerate() {
            if t == 0 || t > self.n_qubits {
                return Err(Error::TargetOutOfRange {
                    target: t,
                    total: self.n_qubits,
                });
            }
            if targets[..i].contains(&t) {
                return Err(Error::RepeatedQubit(t));
            }
        }
        let inputs: Vec<String> = targets.iter().map(|&t| self.wires[t - 1].clone()).collect();
        let outputs: Vec<String> = inputs.iter().map(|w| format!("{w}'")).collect();
        self.nodes
            .push(Tensor::from_operator(matrix, &inputs, &outputs)?);
        for (&t, out) in targets.iter().zip(outputs) {
            self.wires[t - 1] = out;
        }
        Ok(self)
    }

    /// Current (output) wire names, qubit 1 first.
    pub fn output_wires(&self) -> &[String] {
        &self.wires
    }

    pub fn input_wires(&self) -> &[String] {
        &self.inputs
    }

    /// Network whose open indices are the inputs (absent with an input
    /// state) followed by the outputs.
    pub fn into_network(self) -> Result<TensorNetwork> {
        let mut open = Vec::new();
        if !self.has_input_state {
            for (i, o) in self.inputs.iter().zip(&self.wires) {
                if i == o {
                    return Err(Error::MalformedNetwork(format!(
                        "wire `{i}` is untouched; nothing to contract on it"
                    )));
                }
            }
            open.extend(self.inputs.iter().cloned());
        }
        open.extend(self.wires.iter().cloned());
        TensorNetwork::new(self.nodes, open)
    }
}
