use anyhow::bail;
use qmc_core::reach::{
    reachable_fixpoint_oracle, reachable_subspace, reachable_subspace_vectorized,
};
use qmc_core::{QuantumMarkovChain, Subspace};
use serde::Serialize;

use crate::input::{initial_state, load_model};
use crate::numfmt::{canonical_basis, ket, sig};
use crate::{Format, ReachArgs};

#[derive(Serialize)]
struct Report {
    model: String,
    dim: usize,
    basis: Vec<String>,
    /// Canonical basis vectors as `[re, im]` pairs, full precision.
    vectors: Vec<Vec<[f64; 2]>>,
    verify: Option<Verify>,
}

#[derive(Serialize)]
struct Verify {
    dims: Dims,
    residual: f64,
    agree: bool,
}

#[derive(Serialize)]
struct Dims {
    direct: usize,
    vectorized: usize,
    fixpoint: usize,
}

fn max_residual(xs: &[&Subspace]) -> qmc_core::Result<f64> {
    let mut worst: f64 = 0.0;
    for a in xs {
        for b in xs {
            worst = worst.max(a.residual(b)?);
        }
    }
    Ok(worst)
}

pub fn run(args: &ReachArgs) -> anyhow::Result<u8> {
    let sys = load_model(&args.model)?;
    if sys.locations().len() != 1 {
        bail!(
            "{}: reach needs a single-location model (a sequential circuit); this one has {} locations",
            args.model.display(),
            sys.locations().len()
        );
    }
    let chain = QuantumMarkovChain::new(sys.total_channel()?)?;
    let rho = initial_state(&args.init, sys.n_qubits())?;
    let r = reachable_subspace(&chain, &rho)?;
    let n = sys.n_qubits();
    let basis = canonical_basis(&r);

    let verify = if args.verify {
        let vec = reachable_subspace_vectorized(&chain, &rho)?;
        let fix = reachable_fixpoint_oracle(&chain, &rho)?;
        let residual = max_residual(&[&r, &vec, &fix])?;
        Some(Verify {
            dims: Dims {
                direct: r.dim(),
                vectorized: vec.dim(),
                fixpoint: fix.dim(),
            },
            agree: residual < args.tol && r.dim() == vec.dim() && r.dim() == fix.dim(),
            residual,
        })
    } else {
        None
    };

    let report = Report {
        model: args.model.display().to_string(),
        dim: r.dim(),
        basis: basis.iter().map(|v| ket(v, n)).collect(),
        vectors: basis
            .iter()
            .map(|v| v.iter().map(|z| [z.re, z.im]).collect())
            .collect(),
        verify,
    };
    match args.format {
        Format::Json => println!("{}", serde_json::to_string_pretty(&report)?),
        Format::Text => {
            println!("dim {}", report.dim);
            for k in &report.basis {
                println!("  {k}");
            }
            if let Some(v) = &report.verify {
                println!(
                    "verify: dims direct={} vectorized={} fixpoint={}, max residual {} ({})",
                    v.dims.direct,
                    v.dims.vectorized,
                    v.dims.fixpoint,
                    sig(v.residual),
                    if v.agree { "agree" } else { "DISAGREE" }
                );
            }
        }
    }
    Ok(match &report.verify {
        Some(v) if !v.agree => 1,
        _ => 0,
    })
}
