use qmc_core::channel::{compose_sequential, vectorize_check};
use qmc_core::linalg::max_abs;
use qmc_core::random;
use qmc_core::reach::{
    reachable_fixpoint_oracle, reachable_subspace, reachable_subspace_vectorized,
};
use qmc_core::QuantumMarkovChain;
use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};
use serde::Serialize;

use crate::numfmt::sig;
use crate::{Format, SelftestArgs};

#[derive(Serialize)]
struct Report {
    seed: u64,
    cases: usize,
    reach_residual: f64,
    reach_dims_agree: bool,
    composition_residual: f64,
    vectorization_residual: f64,
    pass: bool,
}

pub fn run(args: &SelftestArgs) -> anyhow::Result<u8> {
    let mut rng = StdRng::seed_from_u64(args.seed);
    let mut reach_residual: f64 = 0.0;
    let mut dims_agree = true;
    let mut composition: f64 = 0.0;
    let mut vectorization: f64 = 0.0;
    for _ in 0..args.cases {
        let n = rng.random_range(1..=3);
        let d = 1usize << n;
        let k = rng.random_range(1..=3);
        let block = rng.random_range(1..=d);
        let e = random::block_channel(&mut rng, d, block, k);
        let rho = random::density(&mut rng, d, 1);

        let chain = QuantumMarkovChain::new(e.clone())?;
        let a = reachable_subspace(&chain, &rho)?;
        let b = reachable_subspace_vectorized(&chain, &rho)?;
        let c = reachable_fixpoint_oracle(&chain, &rho)?;
        dims_agree &= a.dim() == b.dim() && a.dim() == c.dim();
        for (x, y) in [(&a, &b), (&a, &c), (&b, &c)] {
            reach_residual = reach_residual.max(x.distance(y)?);
        }

        let f = random::channel(&mut rng, n, k);
        let m = compose_sequential(&e, &f)?.matrix_rep();
        composition = composition.max(max_abs(&(m - f.matrix_rep() * e.matrix_rep())));

        let x = random::gaussian_matrix(&mut rng, d, d);
        let (lhs, rhs) = vectorize_check(&e, &x)?;
        vectorization = vectorization.max((lhs - rhs).camax());
    }
    let pass =
        dims_agree && reach_residual < args.tol && composition < 1e-10 && vectorization < 1e-10;
    let report = Report {
        seed: args.seed,
        cases: args.cases,
        reach_residual,
        reach_dims_agree: dims_agree,
        composition_residual: composition,
        vectorization_residual: vectorization,
        pass,
    };
    match args.format {
        Format::Json => println!("{}", serde_json::to_string_pretty(&report)?),
        Format::Text => {
            println!("seed {} cases {}", report.seed, report.cases);
            println!(
                "  reach residual {} (dims agree: {})",
                sig(reach_residual),
                dims_agree
            );
            println!("  M(E;F) - M_F M_E: {}", sig(composition));
            println!(
                "  (E(A) x I)|Psi> - M_E (A x I)|Psi>: {}",
                sig(vectorization)
            );
            println!("{}", if pass { "pass" } else { "FAIL" });
        }
    }
    Ok(u8::from(!pass))
}
