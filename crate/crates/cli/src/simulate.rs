use anyhow::bail;
use qmc_core::checker::state_digest;
use qmc_core::{Configuration, QuantumTransitionSystem};
use serde::Serialize;

use crate::input::{initial_state, load_model};
use crate::numfmt::sig;
use crate::{Format, SimulateArgs};

const MAX_TREE_NODES: usize = 1 << 20;

#[derive(Serialize)]
struct Node {
    location: String,
    /// Probability of the branch into this node.
    probability: f64,
    path_probability: f64,
    state_digest: String,
    children: Vec<Node>,
}

#[derive(Serialize)]
struct Report {
    model: String,
    depth: usize,
    /// Total path probability at each depth.
    level_mass: Vec<f64>,
    tree: Node,
}

fn expand(
    sys: &QuantumTransitionSystem,
    cfg: Configuration,
    p: f64,
    left: usize,
    level: usize,
    mass: &mut [f64],
    budget: &mut usize,
) -> anyhow::Result<Node> {
    if *budget == 0 {
        bail!("the tree exceeds {MAX_TREE_NODES} nodes; lower --depth");
    }
    *budget -= 1;
    mass[level] += cfg.probability;
    let children = if left == 0 {
        Vec::new()
    } else {
        sys.step(&cfg)?
            .into_iter()
            .map(|(c, q)| expand(sys, c, q, left - 1, level + 1, mass, budget))
            .collect::<anyhow::Result<_>>()?
    };
    Ok(Node {
        location: sys.location_name(cfg.location).to_string(),
        probability: p,
        path_probability: cfg.probability,
        state_digest: state_digest(&cfg.state),
        children,
    })
}

fn print_node(n: &Node, indent: usize) {
    println!(
        "{:indent$}{} p={} path={} {}",
        "",
        n.location,
        sig(n.probability),
        sig(n.path_probability),
        n.state_digest,
        indent = indent * 2
    );
    for c in &n.children {
        print_node(c, indent + 1);
    }
}

pub fn run(args: &SimulateArgs) -> anyhow::Result<u8> {
    let sys = load_model(&args.model)?;
    let rho = initial_state(&args.init, sys.n_qubits())?;
    let root = sys.start(rho)?;
    let mut mass = vec![0.0; args.depth + 1];
    let mut budget = MAX_TREE_NODES;
    let tree = expand(&sys, root, 1.0, args.depth, 0, &mut mass, &mut budget)?;
    if let Some((k, m)) = mass
        .iter()
        .enumerate()
        .find(|(_, m)| (**m - 1.0).abs() > 1e-9)
    {
        bail!("probabilities at depth {k} sum to {m}, not 1");
    }
    let report = Report {
        model: args.model.display().to_string(),
        depth: args.depth,
        level_mass: mass,
        tree,
    };
    match args.format {
        Format::Json => println!("{}", serde_json::to_string_pretty(&report)?),
        Format::Text => print_node(&report.tree, 0),
    }
    Ok(0)
}
