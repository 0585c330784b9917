use std::path::Path;

use anyhow::{anyhow, bail, Context};
use qmc_core::linalg::outer;
use qmc_core::logic::{parse_assertions, parse_ket, parse_matrix, AssertionFile};
use qmc_core::qts::parse_model;
use qmc_core::{CMatrix, QuantumTransitionSystem};

use crate::InitArgs;

pub fn read(path: &Path) -> anyhow::Result<String> {
    std::fs::read_to_string(path).with_context(|| format!("cannot read {}", path.display()))
}

/// `file:line:col: message` for errors with a position, `file: message`
/// otherwise.
fn located(path: &Path, e: qmc_core::Error) -> anyhow::Error {
    use qmc_core::Error::*;
    let p = path.display();
    match &e {
        Syntax { .. } | NormalisationViolation { .. } => anyhow!("{p}:{e}"),
        UnboundAtom { name, pos } => anyhow!("{p}:{pos}: unbound atomic proposition `{name}`"),
        _ => anyhow!("{p}: {e}"),
    }
}

pub fn load_model(path: &Path) -> anyhow::Result<QuantumTransitionSystem> {
    parse_model(&read(path)?).map_err(|e| located(path, e))
}

pub fn load_assertions(path: &Path) -> anyhow::Result<AssertionFile> {
    parse_assertions(&read(path)?).map_err(|e| located(path, e))
}

pub fn with_file<T>(path: &Path, r: qmc_core::Result<T>) -> anyhow::Result<T> {
    r.map_err(|e| located(path, e))
}

/// The initial density matrix on `n_qubits`, from a ket or a matrix file.
pub fn initial_state(args: &InitArgs, n_qubits: usize) -> anyhow::Result<CMatrix> {
    if let Some(ket) = &args.init {
        let v = parse_ket(ket, n_qubits).map_err(|e| anyhow!("--init {ket:?}: {e}"))?;
        let norm = v.norm();
        if norm <= 1e-12 {
            bail!("--init {ket:?} is the zero vector");
        }
        return Ok(outer(&v.unscale(norm)));
    }
    let path = args
        .init_density
        .as_deref()
        .expect("clap requires one initial state");
    let rho = with_file(path, parse_matrix(&read(path)?))?;
    let d = 1usize << n_qubits;
    if rho.shape() != (d, d) {
        bail!(
            "{}: {}x{} matrix for a {n_qubits}-qubit model",
            path.display(),
            rho.nrows(),
            rho.ncols()
        );
    }
    qmc_core::channel::check_density(&rho).map_err(|e| located(path, e))?;
    Ok(rho)
}
