use std::time::Instant;

use qmc_core::checker::{build_graph, check_graph, Trace};
use qmc_core::logic::bind;
use serde::Serialize;

use crate::input::{initial_state, load_assertions, load_model, with_file};
use crate::numfmt::sig;
use crate::{CheckArgs, Format};

#[derive(Serialize)]
struct Report {
    model: String,
    label: String,
    formula: String,
    verdict: &'static str,
    closure: String,
    nodes: usize,
    edges: usize,
    trace: Option<Vec<Step>>,
    loop_start: Option<usize>,
    timings: Option<Timings>,
}

#[derive(Serialize)]
struct Step {
    location: String,
    probability: f64,
    state_digest: String,
}

#[derive(Serialize, Clone, Copy)]
struct Timings {
    explore_ms: f64,
    check_ms: f64,
}

fn steps(t: &Trace) -> Vec<Step> {
    t.steps
        .iter()
        .map(|s| Step {
            location: s.location.clone(),
            probability: s.probability,
            state_digest: s.state_digest.clone(),
        })
        .collect()
}

pub fn run(args: &CheckArgs) -> anyhow::Result<u8> {
    let sys = load_model(&args.model)?;
    let file = load_assertions(&args.assertions)?;
    let bindings = with_file(&args.assertions, bind(&file, sys.n_qubits()))?;
    for a in &file.assertions {
        with_file(&args.assertions, a.formula.check_bound(&bindings))?;
    }
    let rho = initial_state(&args.init, sys.n_qubits())?;

    let started = Instant::now();
    let graph = build_graph(&sys, &rho, args.bound as usize)?;
    let explore_ms = started.elapsed().as_secs_f64() * 1e3;

    let mut reports = Vec::new();
    let mut notes = Vec::new();
    let mut worst = 0u8;
    for a in &file.assertions {
        let started = Instant::now();
        let verdict = check_graph(&graph, &sys, &a.formula, &bindings)?;
        let check_ms = started.elapsed().as_secs_f64() * 1e3;
        worst = worst.max(verdict.kind.exit_code() as u8);
        notes.push(verdict.trace.as_ref().err().cloned());
        reports.push(Report {
            model: args.model.display().to_string(),
            label: a.label.clone(),
            formula: verdict.formula.clone(),
            verdict: verdict.kind.as_str(),
            closure: graph.closure().to_string(),
            nodes: graph.nodes().len(),
            edges: graph.edge_count(),
            trace: verdict.trace.as_ref().ok().map(steps),
            loop_start: verdict.trace.as_ref().ok().and_then(|t| t.loop_start),
            timings: args.timings.then_some(Timings {
                explore_ms,
                check_ms,
            }),
        });
    }

    match args.format {
        Format::Json => println!("{}", serde_json::to_string_pretty(&reports)?),
        Format::Text => print_text(&reports, &notes),
    }
    Ok(worst)
}

fn print_text(reports: &[Report], notes: &[Option<String>]) {
    for (r, note) in reports.iter().zip(notes) {
        println!("[{}] {}: {}", r.verdict, r.label, r.formula);
        println!(
            "  closure {}, {} nodes, {} edges",
            r.closure, r.nodes, r.edges
        );
        match (&r.trace, note) {
            (Some(steps), _) => {
                let kind = if r.verdict == "holds" {
                    "witness"
                } else {
                    "counterexample"
                };
                println!("  {kind} ({} steps):", steps.len().saturating_sub(1));
                for (i, s) in steps.iter().enumerate() {
                    let back = match r.loop_start {
                        Some(j) if i + 1 == steps.len() => format!("  -> back to step {j}"),
                        _ => String::new(),
                    };
                    println!(
                        "    {i}: {} p={} {}{back}",
                        s.location,
                        sig(s.probability),
                        s.state_digest
                    );
                }
            }
            (None, Some(why)) => println!("  no trace: {why}"),
            (None, None) => {}
        }
        if let Some(t) = r.timings {
            println!(
                "  explore {} ms, check {} ms",
                sig(t.explore_ms),
                sig(t.check_ms)
            );
        }
    }
}
