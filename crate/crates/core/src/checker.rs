//! CTQL model checking over the explicit configuration graph.
//!
//! The graph is explored breadth first from `(l0, ρ0)`. Configurations are
//! merged when they share a location and their density matrices agree
//! entrywise within `tol::FP`; a SHA-256 fingerprint of the matrix rounded to
//! `tol::FP_DECIMALS` places is the first lookup, a scan of the location's
//! nodes the fallback.
//!
//! With a bound `k`, nodes at depth `k` are kept only when all of their
//! successors are already known; otherwise they stay unexpanded and the
//! graph is truncated. Formulas are then evaluated three-valued: every
//! subformula gets a set of nodes where it definitely holds and a set where
//! it possibly holds, unexpanded nodes being allowed to continue arbitrarily.

use std::collections::{HashMap, VecDeque};
use std::fmt;

use rayon::prelude::*;
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::linalg::{support, CMatrix, Subspace};
use crate::logic::{eval_prop, Bindings, PathFormula, Proposition, StateFormula};
use crate::qts::{Configuration, QuantumTransitionSystem};
use crate::tol;

pub const DEFAULT_BOUND: usize = 64;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Closure {
    Complete,
    Truncated(usize),
}

impl fmt::Display for Closure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Closure::Complete => f.write_str("complete"),
            Closure::Truncated(k) => write!(f, "truncated({k})"),
        }
    }
}

#[derive(Debug, Clone)]
pub struct Node {
    pub config: Configuration,
    pub depth: usize,
    /// Hex of the first 8 bytes of the state fingerprint.
    pub digest: String,
    pub support: Subspace,
    /// BFS tree parent and the probability of the edge from it.
    pub parent: Option<(usize, f64)>,
    pub expanded: bool,
}

#[derive(Debug, Clone)]
pub struct ConfigurationGraph {
    nodes: Vec<Node>,
    succ: Vec<Vec<(usize, f64)>>,
    closure: Closure,
}

#[derive(Debug, Clone, Copy)]
pub struct ExploreOptions {
    pub bound: usize,
    /// Merge configurations with equal fingerprints; without it every path
    /// prefix is its own node.
    pub dedup: bool,
}

impl Default for ExploreOptions {
    fn default() -> Self {
        ExploreOptions {
            bound: DEFAULT_BOUND,
            dedup: true,
        }
    }
}

fn rounded(state: &CMatrix) -> Vec<i64> {
    let herm = (state + state.adjoint()).scale(0.5);
    let scale = 10f64.powi(tol::FP_DECIMALS);
    herm.iter()
        .flat_map(|z| [(z.re * scale).round() as i64, (z.im * scale).round() as i64])
        .collect()
}

/// Fingerprint of a configuration: location and rounded, symmetrised state.
pub fn fingerprint(location: usize, state: &CMatrix) -> [u8; 8] {
    let mut h = Sha256::new();
    h.update((location as u64).to_le_bytes());
    for x in rounded(state) {
        h.update(x.to_le_bytes());
    }
    let full = h.finalize();
    let mut out = [0u8; 8];
    out.copy_from_slice(&full[..8]);
    out
}

/// Hex digest of a density matrix alone, as reported in traces.
pub fn state_digest(state: &CMatrix) -> String {
    let mut h = Sha256::new();
    for x in rounded(state) {
        h.update(x.to_le_bytes());
    }
    hex::encode(&h.finalize()[..8])
}

fn same_state(a: &CMatrix, b: &CMatrix) -> bool {
    a.iter()
        .zip(b.iter())
        .all(|(x, y)| (x - y).norm() <= tol::FP)
}

struct Discovered {
    config: Configuration,
    key: [u8; 8],
    digest: String,
    support: Subspace,
}

fn discover(config: Configuration) -> Result<Discovered> {
    let support = support(&config.state)?;
    Ok(Discovered {
        key: fingerprint(config.location, &config.state),
        digest: state_digest(&config.state),
        config,
        support,
    })
}

pub fn build_graph(
    sys: &QuantumTransitionSystem,
    rho0: &CMatrix,
    bound: usize,
) -> Result<ConfigurationGraph> {
    build_graph_with(sys, rho0, ExploreOptions { bound, dedup: true })
}

pub fn build_graph_with(
    sys: &QuantumTransitionSystem,
    rho0: &CMatrix,
    opts: ExploreOptions,
) -> Result<ConfigurationGraph> {
    let root = discover(sys.start(rho0.clone())?)?;
    let mut nodes: Vec<Node> = Vec::new();
    let mut succ: Vec<Vec<(usize, f64)>> = Vec::new();
    let mut by_key: HashMap<[u8; 8], Vec<usize>> = HashMap::new();
    let mut by_location: HashMap<usize, Vec<usize>> = HashMap::new();

    let find = |nodes: &[Node],
                by_key: &HashMap<[u8; 8], Vec<usize>>,
                by_location: &HashMap<usize, Vec<usize>>,
                d: &Discovered|
     -> Option<usize> {
        if !opts.dedup {
            return None;
        }
        let loc = d.config.location;
        let matches = |&&i: &&usize| {
            nodes[i].config.location == loc && same_state(&nodes[i].config.state, &d.config.state)
        };
        by_key
            .get(&d.key)
            .and_then(|b| b.iter().find(matches))
            .or_else(|| by_location.get(&loc).and_then(|b| b.iter().find(matches)))
            .copied()
    };

    let push = |nodes: &mut Vec<Node>,
                succ: &mut Vec<Vec<(usize, f64)>>,
                by_key: &mut HashMap<[u8; 8], Vec<usize>>,
                by_location: &mut HashMap<usize, Vec<usize>>,
                d: Discovered,
                depth: usize,
                parent: Option<(usize, f64)>| {
        let id = nodes.len();
        by_key.entry(d.key).or_default().push(id);
        by_location.entry(d.config.location).or_default().push(id);
        nodes.push(Node {
            config: d.config,
            depth,
            digest: d.digest,
            support: d.support,
            parent,
            expanded: false,
        });
        succ.push(Vec::new());
        id
    };

    push(
        &mut nodes,
        &mut succ,
        &mut by_key,
        &mut by_location,
        root,
        0,
        None,
    );
    let mut layer = vec![0usize];
    let mut truncated = false;
    let mut depth = 0;
    while !layer.is_empty() {
        let expansions: Vec<Vec<(Discovered, f64)>> = layer
            .par_iter()
            .map(|&v| {
                sys.step(&nodes[v].config)?
                    .into_iter()
                    .map(|(c, p)| discover(c).map(|d| (d, p)))
                    .collect::<Result<Vec<_>>>()
            })
            .collect::<Result<Vec<_>>>()?;
        let mut next_layer = Vec::new();
        for (&v, succs) in layer.iter().zip(expansions) {
            if depth >= opts.bound {
                // keep the node only if it closes onto known configurations
                let known: Option<Vec<(usize, f64)>> = succs
                    .iter()
                    .map(|(d, p)| find(&nodes, &by_key, &by_location, d).map(|t| (t, *p)))
                    .collect();
                match known {
                    Some(edges) => {
                        add_edges(&mut succ[v], edges);
                        nodes[v].expanded = true;
                    }
                    None => truncated = true,
                }
                continue;
            }
            let mut edges = Vec::with_capacity(succs.len());
            for (d, p) in succs {
                let target = match find(&nodes, &by_key, &by_location, &d) {
                    Some(t) => t,
                    None => {
                        let t = push(
                            &mut nodes,
                            &mut succ,
                            &mut by_key,
                            &mut by_location,
                            d,
                            depth + 1,
                            Some((v, p)),
                        );
                        next_layer.push(t);
                        t
                    }
                };
                edges.push((target, p));
            }
            add_edges(&mut succ[v], edges);
            nodes[v].expanded = true;
        }
        layer = next_layer;
        depth += 1;
    }
    Ok(ConfigurationGraph {
        nodes,
        succ,
        closure: if truncated {
            Closure::Truncated(opts.bound)
        } else {
            Closure::Complete
        },
    })
}

/// Parallel edges to the same node are merged, adding their probabilities.
fn add_edges(out: &mut Vec<(usize, f64)>, edges: Vec<(usize, f64)>) {
    for (t, p) in edges {
        match out.iter_mut().find(|(u, _)| *u == t) {
            Some(e) => e.1 += p,
            None => out.push((t, p)),
        }
    }
}

impl ConfigurationGraph {
    pub fn nodes(&self) -> &[Node] {
        &self.nodes
    }

    pub fn successors(&self, v: usize) -> &[(usize, f64)] {
        &self.succ[v]
    }

    pub fn closure(&self) -> Closure {
        self.closure
    }

    pub fn edge_count(&self) -> usize {
        self.succ.iter().map(Vec::len).sum()
    }

    /// `A ∈ L(l, σ)` iff `supp(σ) ⊆ ⟦A⟧`, for every node.
    pub fn label(&self, p: &Proposition, bindings: &Bindings) -> Result<Vec<bool>> {
        let space = eval_prop(p, bindings)?;
        if let Some(n) = self.nodes.first() {
            if n.support.ambient_dim() != space.ambient_dim() {
                return Err(Error::dims(format!(
                    "propositions over C^{} for a system on C^{}",
                    space.ambient_dim(),
                    n.support.ambient_dim()
                )));
            }
        }
        self.nodes
            .iter()
            .map(|n| space.contains(&n.support))
            .collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum VerdictKind {
    Holds,
    Fails,
    Unknown,
}

impl VerdictKind {
    pub fn as_str(self) -> &'static str {
        match self {
            VerdictKind::Holds => "holds",
            VerdictKind::Fails => "fails",
            VerdictKind::Unknown => "unknown",
        }
    }

    /// Process exit code for this verdict.
    pub fn exit_code(self) -> i32 {
        match self {
            VerdictKind::Holds => 0,
            VerdictKind::Fails => 1,
            VerdictKind::Unknown => 2,
        }
    }
}

impl fmt::Display for VerdictKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TraceStep {
    pub node: usize,
    pub location: String,
    /// Probability of the edge into this step (1 for the first).
    pub probability: f64,
    pub state_digest: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Trace {
    pub steps: Vec<TraceStep>,
    /// For lasso-shaped counterexamples, the index in `steps` that the last
    /// step loops back to.
    pub loop_start: Option<usize>,
}

impl Trace {
    /// Number of transitions taken.
    pub fn len(&self) -> usize {
        self.steps.len().saturating_sub(1)
    }

    pub fn is_empty(&self) -> bool {
        self.steps.len() <= 1
    }
}

#[derive(Debug, Clone)]
pub struct Verdict {
    pub formula: String,
    pub kind: VerdictKind,
    pub trace: Result<Trace, String>,
}

/// Definite and possible satisfaction sets of one formula.
#[derive(Debug, Clone)]
struct Sat {
    must: Vec<bool>,
    may: Vec<bool>,
}

struct Evaluator<'a> {
    graph: &'a ConfigurationGraph,
    labels: Vec<(Proposition, Vec<bool>)>,
}

impl<'a> Evaluator<'a> {
    fn new(
        graph: &'a ConfigurationGraph,
        formula: &StateFormula,
        bindings: &Bindings,
    ) -> Result<Self> {
        formula.check_bound(bindings)?;
        let labels = formula
            .propositions()
            .into_iter()
            .map(|p| Ok((p.clone(), graph.label(p, bindings)?)))
            .collect::<Result<Vec<_>>>()?;
        Ok(Evaluator { graph, labels })
    }

    fn n(&self) -> usize {
        self.graph.nodes.len()
    }

    fn expanded(&self, v: usize) -> bool {
        self.graph.nodes[v].expanded
    }

    fn eval(&self, f: &StateFormula) -> Sat {
        match f {
            StateFormula::Prop(p) => {
                let l = &self
                    .labels
                    .iter()
                    .find(|(q, _)| q == p)
                    .expect("labelled")
                    .1;
                Sat {
                    must: l.clone(),
                    may: l.clone(),
                }
            }
            StateFormula::Not(a) => {
                let s = self.eval(a);
                Sat {
                    must: s.may.iter().map(|x| !x).collect(),
                    may: s.must.iter().map(|x| !x).collect(),
                }
            }
            StateFormula::And(a, b) => {
                let (x, y) = (self.eval(a), self.eval(b));
                Sat {
                    must: x.must.iter().zip(&y.must).map(|(p, q)| *p && *q).collect(),
                    may: x.may.iter().zip(&y.may).map(|(p, q)| *p && *q).collect(),
                }
            }
            StateFormula::Exists(PathFormula::Next(a)) => self.next(&self.eval(a), true),
            StateFormula::Forall(PathFormula::Next(a)) => self.next(&self.eval(a), false),
            StateFormula::Exists(PathFormula::Until(a, b)) => {
                self.until(&self.eval(a), &self.eval(b), true)
            }
            StateFormula::Forall(PathFormula::Until(a, b)) => {
                self.until(&self.eval(a), &self.eval(b), false)
            }
        }
    }

    fn quantify(&self, v: usize, set: &[bool], exists: bool) -> bool {
        let mut it = self.graph.succ[v].iter().map(|(t, _)| set[*t]);
        if exists {
            it.any(|x| x)
        } else {
            it.all(|x| x)
        }
    }

    fn next(&self, a: &Sat, exists: bool) -> Sat {
        let n = self.n();
        Sat {
            must: (0..n)
                .map(|v| self.expanded(v) && self.quantify(v, &a.must, exists))
                .collect(),
            may: (0..n)
                .map(|v| !self.expanded(v) || self.quantify(v, &a.may, exists))
                .collect(),
        }
    }

    fn until(&self, a: &Sat, b: &Sat, exists: bool) -> Sat {
        Sat {
            must: self.lfp(&a.must, &b.must, exists, false),
            may: self.lfp(&a.may, &b.may, exists, true),
        }
    }

    /// Least `Z` with `Z = b ∨ (a ∧ step(Z))`, where unexpanded nodes satisfy
    /// `step` iff `optimistic`.
    fn lfp(&self, a: &[bool], b: &[bool], exists: bool, optimistic: bool) -> Vec<bool> {
        let n = self.n();
        let mut z = b.to_vec();
        loop {
            let mut changed = false;
            for v in 0..n {
                if z[v] || !a[v] {
                    continue;
                }
                let step = if self.expanded(v) {
                    self.quantify(v, &z, exists)
                } else {
                    optimistic
                };
                if step {
                    z[v] = true;
                    changed = true;
                }
            }
            if !changed {
                return z;
            }
        }
    }

    fn step(&self, v: usize, probability: f64) -> TraceStep {
        let node = &self.graph.nodes[v];
        TraceStep {
            node: v,
            location: String::new(),
            probability,
            state_digest: node.digest.clone(),
        }
    }

    fn path_to(&self, path: &[(usize, f64)], loop_start: Option<usize>) -> Trace {
        Trace {
            steps: path.iter().map(|&(v, p)| self.step(v, p)).collect(),
            loop_start,
        }
    }

    /// Shortest path from the root through nodes in `through` to a node in
    /// `target`, as `(node, edge probability)` pairs.
    fn shortest(&self, through: &[bool], target: &[bool]) -> Option<Vec<(usize, f64)>> {
        let n = self.n();
        let mut prev: Vec<Option<(usize, f64)>> = vec![None; n];
        let mut seen = vec![false; n];
        let mut queue = VecDeque::from([0usize]);
        seen[0] = true;
        while let Some(v) = queue.pop_front() {
            if target[v] {
                let mut path = vec![(v, 1.0)];
                let mut cur = v;
                while let Some((u, p)) = prev[cur] {
                    path.last_mut().expect("non-empty").1 = p;
                    path.push((u, 1.0));
                    cur = u;
                }
                path.reverse();
                return Some(path);
            }
            if !through[v] {
                continue;
            }
            for &(t, p) in &self.graph.succ[v] {
                if !seen[t] {
                    seen[t] = true;
                    prev[t] = Some((v, p));
                    queue.push_back(t);
                }
            }
        }
        None
    }

    /// Evidence that the root satisfies (`polarity`) or violates `f`.
    fn evidence(&self, f: &StateFormula, polarity: bool) -> Result<Trace, String> {
        let root_only = || self.path_to(&[(0, 1.0)], None);
        match (f, polarity) {
            (StateFormula::Prop(_), _) => Ok(root_only()),
            (StateFormula::Not(a), _) => self.evidence(a, !polarity),
            (StateFormula::And(a, b), false) => {
                if !self.eval(a).may[0] {
                    self.evidence(a, false)
                } else {
                    self.evidence(b, false)
                }
            }
            (StateFormula::And(..), true) => Err("a conjunction has no single witness path".into()),
            (StateFormula::Exists(PathFormula::Next(a)), true) => {
                let s = self.eval(a);
                let (t, p) = *self.graph.succ[0]
                    .iter()
                    .find(|(t, _)| s.must[*t])
                    .ok_or("no successor satisfies the operand")?;
                Ok(self.path_to(&[(0, 1.0), (t, p)], None))
            }
            (StateFormula::Forall(PathFormula::Next(a)), false) => {
                let s = self.eval(a);
                let (t, p) = *self.graph.succ[0]
                    .iter()
                    .find(|(t, _)| !s.may[*t])
                    .ok_or("no successor violates the operand")?;
                Ok(self.path_to(&[(0, 1.0), (t, p)], None))
            }
            (StateFormula::Exists(PathFormula::Until(a, b)), true) => {
                let (sa, sb) = (self.eval(a), self.eval(b));
                self.shortest(&sa.must, &sb.must)
                    .map(|path| self.path_to(&path, None))
                    .ok_or_else(|| "no witness path within the explored graph".into())
            }
            (StateFormula::Forall(PathFormula::Until(a, b)), false) => {
                let (sa, sb) = (self.eval(a), self.eval(b));
                let bad = self
                    .until(&sa, &sb, false)
                    .may
                    .iter()
                    .map(|x| !x)
                    .collect::<Vec<_>>();
                // a finite counterexample ends where neither operand can hold
                let dead: Vec<bool> = (0..self.n())
                    .map(|v| bad[v] && !sa.may[v] && !sb.may[v])
                    .collect();
                if let Some(path) = self.shortest(&bad, &dead) {
                    return Ok(self.path_to(&path, None));
                }
                // otherwise the violating nodes contain a cycle avoiding `b`
                let mut path = vec![(0usize, 1.0)];
                let mut pos_of = HashMap::from([(0usize, 0usize)]);
                loop {
                    let v = path.last().expect("non-empty").0;
                    let &(t, p) = self.graph.succ[v]
                        .iter()
                        .find(|(t, _)| bad[*t])
                        .ok_or("counterexample leaves the explored graph")?;
                    if let Some(&i) = pos_of.get(&t) {
                        return Ok(self.path_to(&path, Some(i)));
                    }
                    pos_of.insert(t, path.len());
                    path.push((t, p));
                }
            }
            (StateFormula::Exists(_), false) => {
                Err("refuting an existential formula needs every path, not a trace".into())
            }
            (StateFormula::Forall(_), true) => {
                Err("a universal formula that holds has no finite witness".into())
            }
        }
    }
}

/// Checks `formula` at the root of an explored graph.
pub fn check_graph(
    graph: &ConfigurationGraph,
    sys: &QuantumTransitionSystem,
    formula: &StateFormula,
    bindings: &Bindings,
) -> Result<Verdict> {
    let ev = Evaluator::new(graph, formula, bindings)?;
    let sat = ev.eval(formula);
    let kind = match (sat.must[0], sat.may[0]) {
        (true, _) => VerdictKind::Holds,
        (false, false) => VerdictKind::Fails,
        (false, true) => VerdictKind::Unknown,
    };
    let trace = match kind {
        VerdictKind::Unknown => Err("the verdict is unknown within the bound".to_string()),
        _ => ev
            .evidence(formula, kind == VerdictKind::Holds)
            .map(|mut t| {
                for s in &mut t.steps {
                    s.location = sys
                        .location_name(graph.nodes[s.node].config.location)
                        .to_string();
                }
                t
            }),
    };
    Ok(Verdict {
        formula: formula.to_string(),
        kind,
        trace,
    })
}

pub fn check(
    sys: &QuantumTransitionSystem,
    rho0: &CMatrix,
    formula: &StateFormula,
    bindings: &Bindings,
    bound: usize,
) -> Result<Verdict> {
    formula.check_bound(bindings)?;
    let graph = build_graph(sys, rho0, bound)?;
    check_graph(&graph, sys, formula, bindings)
}

/// The witness or counterexample of a verdict, or why there is none.
pub fn extract_trace(verdict: &Verdict) -> Result<&Trace> {
    verdict
        .trace
        .as_ref()
        .map_err(|why| Error::NoTraceAvailable(why.clone()))
}
