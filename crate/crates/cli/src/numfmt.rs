use qmc_core::linalg::{CMatrix, CVector, Subspace};
use qmc_core::Complex64;

/// `x` rounded to 10 significant digits, printed without trailing zeros.
pub fn sig(x: f64) -> String {
    if x == 0.0 || !x.is_finite() {
        return format!("{}", if x == 0.0 { 0.0 } else { x });
    }
    let v: f64 = format!("{x:.9e}").parse().expect("formatted float parses");
    if (1e-5..1e15).contains(&v.abs()) {
        format!("{v}")
    } else {
        format!("{v:e}")
    }
}

pub fn complex(z: Complex64) -> String {
    let (re, im) = (round_small(z.re), round_small(z.im));
    match (re == 0.0, im == 0.0) {
        (_, true) => sig(re),
        (true, false) => format!("{}i", sig(im)),
        (false, false) if im < 0.0 => format!("{}-{}i", sig(re), sig(-im)),
        _ => format!("{}+{}i", sig(re), sig(im)),
    }
}

fn round_small(x: f64) -> f64 {
    if x.abs() < 1e-10 {
        0.0
    } else {
        x
    }
}

/// Basis label with qubit 1 leftmost.
pub fn ket_label(index: usize, n_qubits: usize) -> String {
    let bits: String = (0..n_qubits)
        .map(|q| if (index >> q) & 1 == 1 { '1' } else { '0' })
        .collect();
    format!("|{bits}>")
}

/// A vector as a sum of basis kets, e.g. `0.7071067812|00> + 0.7071067812|11>`.
pub fn ket(v: &CVector, n_qubits: usize) -> String {
    let mut out = String::new();
    for (i, z) in v.iter().enumerate() {
        let z = Complex64::new(round_small(z.re), round_small(z.im));
        if z == Complex64::new(0.0, 0.0) {
            continue;
        }
        let label = ket_label(i, n_qubits);
        let (sign, coeff) = if z.im == 0.0 && z.re < 0.0 {
            ("-", Complex64::new(-z.re, 0.0))
        } else {
            ("+", z)
        };
        if !out.is_empty() {
            out.push_str(&format!(" {sign} "));
        } else if sign == "-" {
            out.push('-');
        }
        let c = complex(coeff);
        if c == "1" {
            out.push_str(&label);
        } else if coeff.im != 0.0 && coeff.re != 0.0 {
            out.push_str(&format!("({c}){label}"));
        } else {
            out.push_str(&format!("{c}{label}"));
        }
    }
    if out.is_empty() {
        out.push('0');
    }
    out
}

/// A basis of `x` in reduced column-echelon form, each vector normalised,
/// so that coordinate subspaces print as plain kets.
pub fn canonical_basis(x: &Subspace) -> Vec<CVector> {
    let mut rows: CMatrix = x.basis().transpose();
    let (k, d) = rows.shape();
    let mut pivot_row = 0;
    for col in 0..d {
        if pivot_row == k {
            break;
        }
        let (best, mag) = (pivot_row..k).map(|r| (r, rows[(r, col)].norm())).fold(
            (pivot_row, 0.0),
            |acc, cur| if cur.1 > acc.1 { cur } else { acc },
        );
        if mag < 1e-9 {
            continue;
        }
        rows.swap_rows(pivot_row, best);
        let p = rows[(pivot_row, col)];
        let scaled = rows.row(pivot_row).map(|z| z / p);
        rows.set_row(pivot_row, &scaled);
        for r in 0..k {
            if r != pivot_row {
                let f = rows[(r, col)];
                if f.norm() > 0.0 {
                    let update = rows.row(r) - scaled.map(|z| z * f);
                    rows.set_row(r, &update);
                }
            }
        }
        pivot_row += 1;
    }
    (0..pivot_row)
        .map(|r| {
            let v: CVector = rows.row(r).transpose();
            let n = v.norm();
            v.unscale(n)
        })
        .collect()
}
