//! Quantum transition systems.
//!
//! A [`QuantumTransitionSystem`] has a finite set of named locations, an
//! initial location and transitions `l -> l'` labelled by super-operators on
//! the whole register. Every location with outgoing transitions satisfies
//! `Σ_τ Σ_k E_{τ,k}† E_{τ,k} = I`; locations without any get an identity
//! self-loop, so every configuration has a successor.
//!
//! Each transition keeps the [`OpSpec`] it was built from, which is what the
//! model format serialises and what equality compares.
//!
//! # Model format
//!
//! ```text
//! qubits 3
//! locations l0 l1 l2
//! initial l0
//! transitions
//!   l0 -> l1 : gate CX[1, 2]            # control first
//!   l1 -> l2 : gate RZ(0.5)[3]
//!   l1 -> l2 : noise bitflip(0.9)[1]
//!   l1 -> l2 : kraus { [[1, 0], [0, 0.5i]] ; [[0, 0], [0, 0.8]] }[2]
//!   l2 -> l2 : measure M[2] = 1
//! ```
//!
//! ```text
//! model      = "qubits" uint "locations" ident+ "initial" ident
//!              "transitions" transition*
//! transition = ident "->" ident ":" op
//! op         = "gate" ident [ "(" real { "," real } ")" ] targets
//!            | "noise" ident "(" real ")" targets
//!            | "kraus" "{" matrix { ";" matrix } "}" targets
//!            | "measure" "M" targets "=" uint
//! targets    = "[" uint { "," uint } "]"
//! matrix     = "[" row { "," row } "]"
//! row        = "[" complex { "," complex } "]"
//! complex    = [ "+" | "-" ] term { ( "+" | "-" ) term }
//! term       = real | real "i" | "i"
//! ```

use std::collections::{HashMap, VecDeque};
use std::fmt::Write as _;

use crate::channel::{self, check_density, embed, embed_matrix, SuperOperator};
use crate::error::{Error, Pos, Result};
use crate::lexer::{format_matrix, tokenize, Cursor, Tok};
use crate::linalg::{cr, max_abs, outer, trace, CMatrix, CVector};
use crate::tol;

/// A unitary gate, a noise channel or an explicit Kraus set, in the local
/// frame of its target qubits.
#[derive(Debug, Clone, PartialEq)]
pub enum GateOp {
    Named { name: String, params: Vec<f64> },
    Noise { name: String, p: f64 },
    Kraus(Vec<CMatrix>),
}

impl GateOp {
    pub fn named(name: &str) -> Self {
        GateOp::Named {
            name: name.to_string(),
            params: Vec::new(),
        }
    }

    fn local_channel(&self, arity: usize) -> Result<SuperOperator> {
        let op = match self {
            GateOp::Named { name, params } => channel::gate(name, params)?,
            GateOp::Noise { name, p } => channel::noise(name, *p)?,
            GateOp::Kraus(ms) => SuperOperator::new(ms.clone())?,
        };
        if op.n_qubits() != arity {
            return Err(Error::dims(format!(
                "{}-qubit operation applied to {arity} target(s)",
                op.n_qubits()
            )));
        }
        Ok(op)
    }

    /// Targets in the local frame of the operator's matrix.
    fn frame(&self, qubits: &[usize]) -> Vec<usize> {
        match self {
            GateOp::Named { name, .. } => channel::gate_targets(name, qubits),
            _ => qubits.to_vec(),
        }
    }
}

/// Label of a transition as written in a model file.
#[derive(Debug, Clone, PartialEq)]
pub enum OpSpec {
    Apply {
        op: GateOp,
        qubits: Vec<usize>,
    },
    /// Computational-basis measurement of `qubits` yielding `outcome`; bit
    /// `j` of the outcome is the value of `qubits[j]`.
    Measure {
        qubits: Vec<usize>,
        outcome: u64,
    },
}

impl OpSpec {
    pub fn gate(name: &str, qubits: &[usize]) -> Self {
        OpSpec::Apply {
            op: GateOp::named(name),
            qubits: qubits.to_vec(),
        }
    }

    pub fn measure(qubits: &[usize], outcome: u64) -> Self {
        OpSpec::Measure {
            qubits: qubits.to_vec(),
            outcome,
        }
    }

    pub fn qubits(&self) -> &[usize] {
        match self {
            OpSpec::Apply { qubits, .. } | OpSpec::Measure { qubits, .. } => qubits,
        }
    }

    /// The super-operator on `n_qubits` that this label denotes.
    pub fn to_channel(&self, n_qubits: usize) -> Result<SuperOperator> {
        match self {
            OpSpec::Apply { op, qubits } => {
                let local = op.local_channel(qubits.len())?;
                embed(&local, &op.frame(qubits), n_qubits)
            }
            OpSpec::Measure { qubits, outcome } => {
                let k = qubits.len();
                if k == 0 || *outcome >= 1u64 << k {
                    return Err(Error::BadParameter(format!(
                        "outcome {outcome} impossible for a {k}-qubit measurement"
                    )));
                }
                let mut proj = CMatrix::zeros(1 << k, 1 << k);
                proj[(*outcome as usize, *outcome as usize)] = cr(1.0);
                SuperOperator::new(vec![embed_matrix(&proj, qubits, n_qubits)?])
            }
        }
    }
}

#[derive(Debug, Clone)]
pub struct Transition {
    pub pre: usize,
    pub post: usize,
    pub spec: OpSpec,
    op: SuperOperator,
}

impl Transition {
    pub fn op(&self) -> &SuperOperator {
        &self.op
    }
}

impl PartialEq for Transition {
    fn eq(&self, other: &Self) -> bool {
        self.pre == other.pre && self.post == other.post && self.spec == other.spec
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct QuantumTransitionSystem {
    n_qubits: usize,
    locations: Vec<String>,
    initial: usize,
    transitions: Vec<Transition>,
    outgoing: Vec<Vec<usize>>,
}

/// `(pre, post, label, source position)`; the position is only used in
/// diagnostics.
pub type TransitionDecl = (usize, usize, OpSpec, Pos);

impl QuantumTransitionSystem {
    pub fn new(
        n_qubits: usize,
        locations: Vec<String>,
        initial: usize,
        transitions: Vec<(usize, usize, OpSpec)>,
    ) -> Result<Self> {
        let decls = transitions
            .into_iter()
            .map(|(a, b, s)| (a, b, s, Pos::default()))
            .collect();
        Self::with_positions(n_qubits, locations, initial, decls)
    }

    pub fn with_positions(
        n_qubits: usize,
        locations: Vec<String>,
        initial: usize,
        decls: Vec<TransitionDecl>,
    ) -> Result<Self> {
        if n_qubits == 0 {
            return Err(Error::MalformedCircuit(
                "a system needs at least one qubit".into(),
            ));
        }
        let n_loc = locations.len();
        if initial >= n_loc {
            return Err(Error::UnknownLocation(format!("#{initial}")));
        }
        for (i, name) in locations.iter().enumerate() {
            if locations[..i].contains(name) {
                return Err(Error::MalformedCircuit(format!(
                    "location `{name}` declared twice"
                )));
            }
        }
        let dim = 1usize << n_qubits;
        let mut transitions = Vec::with_capacity(decls.len());
        let mut first_pos: Vec<Option<Pos>> = vec![None; n_loc];
        for (pre, post, spec, pos) in decls {
            for l in [pre, post] {
                if l >= n_loc {
                    return Err(Error::UnknownLocation(format!("#{l}")));
                }
            }
            first_pos[pre].get_or_insert(pos);
            let op = match spec.to_channel(n_qubits) {
                Ok(op) => op,
                Err(Error::NotTraceNonIncreasing(defect)) => {
                    return Err(Error::NormalisationViolation {
                        location: locations[pre].clone(),
                        defect,
                        pos,
                    })
                }
                Err(e) => return Err(e),
            };
            transitions.push(Transition {
                pre,
                post,
                spec,
                op,
            });
        }
        let mut effects = vec![CMatrix::zeros(dim, dim); n_loc];
        for t in &transitions {
            effects[t.pre] += t.op.effect();
        }
        let id = CMatrix::identity(dim, dim);
        for l in 0..n_loc {
            match first_pos[l] {
                Some(pos) => {
                    let defect = max_abs(&(&effects[l] - &id));
                    if defect > tol::NORM {
                        return Err(Error::NormalisationViolation {
                            location: locations[l].clone(),
                            defect,
                            pos,
                        });
                    }
                }
                None => {
                    let spec = OpSpec::gate("I", &[1]);
                    let op = spec.to_channel(n_qubits)?;
                    transitions.push(Transition {
                        pre: l,
                        post: l,
                        spec,
                        op,
                    });
                }
            }
        }
        let mut outgoing = vec![Vec::new(); n_loc];
        for (i, t) in transitions.iter().enumerate() {
            outgoing[t.pre].push(i);
        }
        Ok(QuantumTransitionSystem {
            n_qubits,
            locations,
            initial,
            transitions,
            outgoing,
        })
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn dim(&self) -> usize {
        1 << self.n_qubits
    }

    pub fn locations(&self) -> &[String] {
        &self.locations
    }

    pub fn location_name(&self, l: usize) -> &str {
        &self.locations[l]
    }

    pub fn location_index(&self, name: &str) -> Option<usize> {
        self.locations.iter().position(|n| n == name)
    }

    pub fn initial(&self) -> usize {
        self.initial
    }

    pub fn transitions(&self) -> &[Transition] {
        &self.transitions
    }

    pub fn outgoing(&self, l: usize) -> impl Iterator<Item = &Transition> {
        self.outgoing[l].iter().map(|&i| &self.transitions[i])
    }

    /// Sum of all transition channels: the Markov chain obtained by
    /// forgetting locations. Only meaningful for single-location systems.
    pub fn total_channel(&self) -> Result<SuperOperator> {
        let kraus = self
            .transitions
            .iter()
            .flat_map(|t| t.op.kraus().iter().cloned())
            .collect();
        SuperOperator::new(kraus)
    }

    /// The initial configuration for state `rho`.
    pub fn start(&self, rho: CMatrix) -> Result<Configuration> {
        if rho.shape() != (self.dim(), self.dim()) {
            return Err(Error::dims(format!(
                "{}x{} initial state for a {}-qubit system",
                rho.nrows(),
                rho.ncols(),
                self.n_qubits
            )));
        }
        check_density(&rho)?;
        Ok(Configuration {
            location: self.initial,
            state: rho,
            probability: 1.0,
        })
    }

    /// Successors of `cfg`: for each outgoing transition with
    /// `p = tr(E(ρ)) > tol::PROB`, the configuration `(l', E(ρ)/p)` carrying
    /// path probability `p · cfg.probability`, together with `p`.
    pub fn step(&self, cfg: &Configuration) -> Result<Vec<(Configuration, f64)>> {
        if cfg.location >= self.locations.len() {
            return Err(Error::UnknownLocation(format!("#{}", cfg.location)));
        }
        let mut out = Vec::new();
        for t in self.outgoing(cfg.location) {
            let next = t.op.apply(&cfg.state)?;
            let p = trace(&next).re;
            if p > tol::PROB {
                let state = (&next + next.adjoint()).unscale(2.0 * p);
                out.push((
                    Configuration {
                        location: t.post,
                        state,
                        probability: cfg.probability * p,
                    },
                    p,
                ));
            }
        }
        Ok(out)
    }
}

#[derive(Debug, Clone)]
pub struct Configuration {
    pub location: usize,
    /// Normalised density matrix.
    pub state: CMatrix,
    /// Probability of the branch that led here.
    pub probability: f64,
}

/// Dynamic circuits: gates, sequencing and measurement-conditioned branches.
#[derive(Debug, Clone, PartialEq)]
pub enum CircuitIR {
    Gate {
        op: GateOp,
        qubits: Vec<usize>,
    },
    Seq(Box<CircuitIR>, Box<CircuitIR>),
    /// Measure `qubits` in the computational basis and continue with the
    /// branch for the observed outcome.
    Cond {
        qubits: Vec<usize>,
        branches: Vec<(u64, CircuitIR)>,
    },
}

impl CircuitIR {
    pub fn gate(name: &str, qubits: &[usize]) -> Self {
        CircuitIR::Gate {
            op: GateOp::named(name),
            qubits: qubits.to_vec(),
        }
    }

    /// Left-nested sequence of `parts`, which must be non-empty.
    pub fn seq(parts: Vec<CircuitIR>) -> Self {
        let mut it = parts.into_iter();
        let first = it.next().expect("empty sequence");
        it.fold(first, |acc, c| CircuitIR::Seq(Box::new(acc), Box::new(c)))
    }

    pub fn max_qubit(&self) -> usize {
        match self {
            CircuitIR::Gate { qubits, .. } => qubits.iter().copied().max().unwrap_or(0),
            CircuitIR::Seq(a, b) => a.max_qubit().max(b.max_qubit()),
            CircuitIR::Cond { qubits, branches } => branches
                .iter()
                .map(|(_, b)| b.max_qubit())
                .chain(qubits.iter().copied())
                .max()
                .unwrap_or(0),
        }
    }

    fn validate(&self, n: usize) -> Result<()> {
        let check = |qubits: &[usize]| -> Result<()> {
            if qubits.is_empty() {
                return Err(Error::MalformedCircuit("operation without qubits".into()));
            }
            for (i, &q) in qubits.iter().enumerate() {
                if q == 0 || q > n {
                    return Err(Error::MalformedCircuit(format!(
                        "qubit {q} outside 1..={n}"
                    )));
                }
                if qubits[..i].contains(&q) {
                    return Err(Error::MalformedCircuit(format!("qubit {q} repeated")));
                }
            }
            Ok(())
        };
        match self {
            CircuitIR::Gate { qubits, .. } => check(qubits),
            CircuitIR::Seq(a, b) => {
                a.validate(n)?;
                b.validate(n)
            }
            CircuitIR::Cond { qubits, branches } => {
                check(qubits)?;
                for x in 0..1u64 << qubits.len() {
                    if branches.iter().filter(|(o, _)| *o == x).count() != 1 {
                        return Err(Error::MalformedCircuit(format!(
                            "measurement of {qubits:?} needs exactly one branch for outcome {x}"
                        )));
                    }
                }
                if branches.len() != 1 << qubits.len() {
                    return Err(Error::MalformedCircuit(format!(
                        "measurement of {qubits:?} has a branch for an impossible outcome"
                    )));
                }
                branches.iter().try_for_each(|(_, b)| b.validate(n))
            }
        }
    }
}

struct Tree {
    children: Vec<Vec<(usize, OpSpec)>>,
}

impl Tree {
    fn node(&mut self) -> usize {
        self.children.push(Vec::new());
        self.children.len() - 1
    }

    /// Adds `ir` below `from`; returns the exit nodes.
    fn build(&mut self, ir: &CircuitIR, from: usize) -> Vec<usize> {
        match ir {
            CircuitIR::Gate { op, qubits } => {
                let to = self.node();
                self.children[from].push((
                    to,
                    OpSpec::Apply {
                        op: op.clone(),
                        qubits: qubits.clone(),
                    },
                ));
                vec![to]
            }
            CircuitIR::Seq(a, b) => self
                .build(a, from)
                .into_iter()
                .flat_map(|exit| self.build(b, exit))
                .collect(),
            CircuitIR::Cond { qubits, branches } => {
                let mut sorted: Vec<&(u64, CircuitIR)> = branches.iter().collect();
                sorted.sort_by_key(|(o, _)| *o);
                let heads: Vec<(usize, &CircuitIR)> = sorted
                    .into_iter()
                    .map(|(outcome, body)| {
                        let to = self.node();
                        self.children[from].push((to, OpSpec::measure(qubits, *outcome)));
                        (to, body)
                    })
                    .collect();
                heads
                    .into_iter()
                    .flat_map(|(head, body)| self.build(body, head))
                    .collect()
            }
        }
    }
}

/// Compiles `ir` on as many qubits as it mentions.
pub fn compile(ir: &CircuitIR) -> Result<QuantumTransitionSystem> {
    compile_on(ir, ir.max_qubit())
}

/// Compiles `ir` into a tree-shaped system on `n_qubits` qubits. Locations
/// are named `l0, l1, ...` in breadth-first order from the root, with
/// measurement branches ordered by outcome; leaves get identity self-loops.
pub fn compile_on(ir: &CircuitIR, n_qubits: usize) -> Result<QuantumTransitionSystem> {
    ir.validate(n_qubits)?;
    let mut tree = Tree {
        children: vec![Vec::new()],
    };
    tree.build(ir, 0);
    let mut order = Vec::with_capacity(tree.children.len());
    let mut queue = VecDeque::from([0usize]);
    while let Some(v) = queue.pop_front() {
        order.push(v);
        queue.extend(tree.children[v].iter().map(|(c, _)| *c));
    }
    let mut rank = vec![0; order.len()];
    for (i, &v) in order.iter().enumerate() {
        rank[v] = i;
    }
    let locations = (0..order.len()).map(|i| format!("l{i}")).collect();
    let mut transitions = Vec::new();
    for &v in &order {
        for (child, spec) in &tree.children[v] {
            transitions.push((rank[v], rank[*child], spec.clone()));
        }
    }
    QuantumTransitionSystem::new(n_qubits, locations, 0, transitions)
}

/// Synchronous sequential circuit: one location whose self-loop applies
/// `combinational` on `state_qubits + memory_qubits` qubits every cycle.
pub fn build_sequential(
    combinational: &SuperOperator,
    state_qubits: usize,
    memory_qubits: usize,
) -> Result<QuantumTransitionSystem> {
    let n = state_qubits + memory_qubits;
    if combinational.n_qubits() != n {
        return Err(Error::dims(format!(
            "combinational part acts on {} qubits, expected {state_qubits} + {memory_qubits}",
            combinational.n_qubits()
        )));
    }
    let spec = OpSpec::Apply {
        op: GateOp::Kraus(combinational.kraus().to_vec()),
        qubits: (1..=n).collect(),
    };
    QuantumTransitionSystem::new(n, vec!["s0".into()], 0, vec![(0, 0, spec)])
}

/// Teleportation of qubit 1 to qubit 3 using a Bell pair on qubits 2, 3.
pub fn teleportation_ir() -> CircuitIR {
    let second = |first: &str| {
        CircuitIR::Seq(
            Box::new(CircuitIR::gate(first, &[3])),
            Box::new(CircuitIR::Cond {
                qubits: vec![1],
                branches: vec![
                    (0, CircuitIR::gate("I", &[3])),
                    (1, CircuitIR::gate("Z", &[3])),
                ],
            }),
        )
    };
    CircuitIR::seq(vec![
        CircuitIR::gate("CX", &[1, 2]),
        CircuitIR::gate("H", &[1]),
        CircuitIR::Cond {
            qubits: vec![2],
            branches: vec![(0, second("I")), (1, second("X"))],
        },
    ])
}

pub fn teleportation() -> QuantumTransitionSystem {
    compile(&teleportation_ir()).expect("teleportation circuit is well formed")
}

/// `|ψ><ψ|` on qubit 1 with `(|00> + |11>)/√2` on qubits 2 and 3.
pub fn teleportation_input(psi: &CVector) -> CMatrix {
    let s = std::f64::consts::FRAC_1_SQRT_2;
    // index = q1 + 2 q2 + 4 q3; the Bell pair needs q2 == q3
    let v = CVector::from_fn(8, |x, _| {
        let (q1, q2, q3) = (x & 1, (x >> 1) & 1, (x >> 2) & 1);
        if q2 == q3 {
            psi[q1] * s
        } else {
            cr(0.0)
        }
    });
    outer(&v)
}

/// The five-gate combinational circuit `Z[1] H[2] CX[1,2] Y[1] H[2]`.
pub fn five_gate_ir() -> CircuitIR {
    CircuitIR::seq(vec![
        CircuitIR::gate("Z", &[1]),
        CircuitIR::gate("H", &[2]),
        CircuitIR::gate("CX", &[1, 2]),
        CircuitIR::gate("Y", &[1]),
        CircuitIR::gate("H", &[2]),
    ])
}

/// Reduced state on `keep` (1-based, listed low qubit first) of an
/// `n_qubits` density matrix.
pub fn partial_trace(rho: &CMatrix, keep: &[usize], n_qubits: usize) -> Result<CMatrix> {
    let dim = 1usize << n_qubits;
    if rho.shape() != (dim, dim) {
        return Err(Error::dims(format!(
            "{}x{} matrix for {n_qubits} qubits",
            rho.nrows(),
            rho.ncols()
        )));
    }
    for (i, &q) in keep.iter().enumerate() {
        if q == 0 || q > n_qubits {
            return Err(Error::TargetOutOfRange {
                target: q,
                total: n_qubits,
            });
        }
        if keep[..i].contains(&q) {
            return Err(Error::RepeatedQubit(q));
        }
    }
    let k = keep.len();
    let keep_mask: usize = keep.iter().map(|&q| 1 << (q - 1)).sum();
    let local = |x: usize| -> usize {
        keep.iter()
            .enumerate()
            .map(|(j, &q)| ((x >> (q - 1)) & 1) << j)
            .sum()
    };
    let mut out = CMatrix::zeros(1 << k, 1 << k);
    for x in 0..dim {
        for y in 0..dim {
            if x & !keep_mask == y & !keep_mask {
                out[(local(x), local(y))] += rho[(x, y)];
            }
        }
    }
    Ok(out)
}

fn format_targets(qubits: &[usize]) -> String {
    let parts: Vec<String> = qubits.iter().map(|q| q.to_string()).collect();
    format!("[{}]", parts.join(", "))
}

/// Canonical text of a model; [`parse_model`] reads it back to an equal
/// system.
pub fn serialize_model(sys: &QuantumTransitionSystem) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "qubits {}", sys.n_qubits);
    let _ = writeln!(out, "locations {}", sys.locations.join(" "));
    let _ = writeln!(out, "initial {}", sys.locations[sys.initial]);
    out.push_str("transitions\n");
    for t in &sys.transitions {
        let op = match &t.spec {
            OpSpec::Apply { op, qubits } => {
                let targets = format_targets(qubits);
                match op {
                    GateOp::Named { name, params } if params.is_empty() => {
                        format!("gate {name}{targets}")
                    }
                    GateOp::Named { name, params } => {
                        let ps: Vec<String> = params.iter().map(|p| format!("{p:?}")).collect();
                        format!("gate {name}({}){targets}", ps.join(", "))
                    }
                    GateOp::Noise { name, p } => format!("noise {name}({p:?}){targets}"),
                    GateOp::Kraus(ms) => {
                        let ms: Vec<String> = ms.iter().map(format_matrix).collect();
                        format!("kraus {{ {} }}{targets}", ms.join(" ; "))
                    }
                }
            }
            OpSpec::Measure { qubits, outcome } => {
                format!("measure M{} = {outcome}", format_targets(qubits))
            }
        };
        let _ = writeln!(
            out,
            "  {} -> {} : {op}",
            sys.locations[t.pre], sys.locations[t.post]
        );
    }
    out
}

const KEYWORDS: &[&str] = &["qubits", "locations", "initial", "transitions"];

struct ModelParser {
    cur: Cursor,
    n_qubits: usize,
}

impl ModelParser {
    fn targets(&mut self) -> Result<Vec<usize>> {
        self.cur.expect_punct("[")?;
        let mut out: Vec<usize> = Vec::new();
        loop {
            let (q, pos) = self.cur.expect_uint("qubit index")?;
            let q = q as usize;
            if q == 0 || q > self.n_qubits {
                return Err(Error::syntax(
                    pos,
                    format!("qubit {q} outside 1..={}", self.n_qubits),
                ));
            }
            if out.contains(&q) {
                return Err(Error::syntax(pos, format!("qubit {q} listed twice")));
            }
            out.push(q);
            if !self.cur.eat_punct(",") {
                break;
            }
        }
        self.cur.expect_punct("]")?;
        Ok(out)
    }

    fn op(&mut self) -> Result<OpSpec> {
        let (kind, kind_pos) = self
            .cur
            .expect_ident("an operation (gate, noise, kraus, measure)")?;
        match kind.as_str() {
            "gate" => {
                let (name, pos) = self.cur.expect_ident("a gate name")?;
                let mut params = Vec::new();
                if self.cur.eat_punct("(") {
                    params.push(self.cur.expect_real()?);
                    while self.cur.eat_punct(",") {
                        params.push(self.cur.expect_real()?);
                    }
                    self.cur.expect_punct(")")?;
                }
                let local = channel::gate_matrix(&name, &params).map_err(|e| match e {
                    Error::UnknownGate(_) => Error::syntax(
                        pos,
                        format!(
                            "unknown gate `{name}` (known: {})",
                            channel::GATE_NAMES.join(" ")
                        ),
                    ),
                    other => Error::syntax(pos, other.to_string()),
                })?;
                let tpos = self.cur.pos();
                let qubits = self.targets()?;
                if local.nrows() != 1 << qubits.len() {
                    return Err(Error::syntax(
                        tpos,
                        format!(
                            "gate `{name}` needs {} target(s)",
                            local.nrows().trailing_zeros()
                        ),
                    ));
                }
                Ok(OpSpec::Apply {
                    op: GateOp::Named { name, params },
                    qubits,
                })
            }
            "noise" => {
                let (name, pos) = self.cur.expect_ident("a noise name")?;
                self.cur.expect_punct("(")?;
                let p = self.cur.expect_real()?;
                self.cur.expect_punct(")")?;
                channel::noise(&name, p).map_err(|e| match e {
                    Error::UnknownGate(_) => Error::syntax(
                        pos,
                        format!(
                            "unknown noise `{name}` (known: {})",
                            channel::NOISE_NAMES.join(" ")
                        ),
                    ),
                    other => Error::syntax(pos, other.to_string()),
                })?;
                let tpos = self.cur.pos();
                let qubits = self.targets()?;
                if qubits.len() != 1 {
                    return Err(Error::syntax(tpos, "noise acts on exactly one qubit"));
                }
                Ok(OpSpec::Apply {
                    op: GateOp::Noise { name, p },
                    qubits,
                })
            }
            "kraus" => {
                self.cur.expect_punct("{")?;
                let mpos = self.cur.pos();
                let mut ms = vec![self.cur.expect_matrix()?];
                while self.cur.eat_punct(";") {
                    ms.push(self.cur.expect_matrix()?);
                }
                self.cur.expect_punct("}")?;
                let qubits = self.targets()?;
                let d = 1usize << qubits.len();
                if let Some(m) = ms.iter().find(|m| m.shape() != (d, d)) {
                    return Err(Error::syntax(
                        mpos,
                        format!(
                            "{}x{} Kraus matrix on {} target(s), expected {d}x{d}",
                            m.nrows(),
                            m.ncols(),
                            qubits.len()
                        ),
                    ));
                }
                Ok(OpSpec::Apply {
                    op: GateOp::Kraus(ms),
                    qubits,
                })
            }
            "measure" => {
                self.cur.expect_keyword("M")?;
                let qubits = self.targets()?;
                self.cur.expect_punct("=")?;
                let (outcome, pos) = self.cur.expect_uint("a measurement outcome")?;
                if outcome >= 1u64 << qubits.len() {
                    return Err(Error::syntax(
                        pos,
                        format!(
                            "outcome {outcome} impossible for {} measured qubit(s)",
                            qubits.len()
                        ),
                    ));
                }
                Ok(OpSpec::Measure { qubits, outcome })
            }
            other => Err(Error::syntax(
                kind_pos,
                format!("unknown operation `{other}`, expected gate, noise, kraus or measure"),
            )),
        }
    }

    fn location(&mut self, index: &HashMap<String, usize>) -> Result<usize> {
        let (name, pos) = self.cur.expect_ident("a location")?;
        index
            .get(&name)
            .copied()
            .ok_or_else(|| Error::syntax(pos, format!("undeclared location `{name}`")))
    }

    fn model(&mut self) -> Result<QuantumTransitionSystem> {
        self.cur.expect_keyword("qubits")?;
        let (n, npos) = self.cur.expect_uint("a qubit count")?;
        if n == 0 || n > 12 {
            return Err(Error::syntax(
                npos,
                format!("qubit count {n} outside 1..=12"),
            ));
        }
        self.n_qubits = n as usize;
        self.cur.expect_keyword("locations")?;
        let mut locations: Vec<String> = Vec::new();
        let mut index = HashMap::new();
        while let Tok::Ident(w) = self.cur.peek().clone() {
            if KEYWORDS.contains(&w.as_str()) {
                break;
            }
            let pos = self.cur.pos();
            self.cur.bump();
            if index.insert(w.clone(), locations.len()).is_some() {
                return Err(Error::syntax(pos, format!("location `{w}` declared twice")));
            }
            locations.push(w);
        }
        if locations.is_empty() {
            return Err(self.cur.error("expected at least one location"));
        }
        self.cur.expect_keyword("initial")?;
        let initial = self.location(&index)?;
        self.cur.expect_keyword("transitions")?;
        let mut decls = Vec::new();
        while !self.cur.at_eof() {
            let pos = self.cur.pos();
            let pre = self.location(&index)?;
            self.cur.expect_punct("->")?;
            let post = self.location(&index)?;
            self.cur.expect_punct(":")?;
            let spec = self.op()?;
            decls.push((pre, post, spec, pos));
        }
        QuantumTransitionSystem::with_positions(self.n_qubits, locations, initial, decls)
    }
}

pub fn parse_model(text: &str) -> Result<QuantumTransitionSystem> {
    let toks = tokenize(text, Pos { line: 1, col: 1 }, false)?;
    ModelParser {
        cur: Cursor::new(toks),
        n_qubits: 0,
    }
    .model()
}
