//! Writes a [`LinearProgram`] in CPLEX LP text format for cross-checking
//! with external solvers. Variables are named `x0, x1, …` and rows
//! `c0, c1, …` by index.

use std::fmt::Write;

use super::{LinearProgram, Relation, Sense};

pub fn write_lp_format(lp: &LinearProgram) -> String {
    let mut out = String::new();
    out.push_str(match lp.sense {
        Sense::Maximize => "Maximize\n",
        Sense::Minimize => "Minimize\n",
    });
    out.push_str(" obj:");
    let terms: Vec<(usize, f64)> = lp
        .objective
        .iter()
        .enumerate()
        .filter(|(_, c)| **c != 0.0)
        .map(|(j, c)| (j, *c))
        .collect();
    push_terms(&mut out, &terms);
    out.push_str("\nSubject To\n");
    for (i, row) in lp.constraints.iter().enumerate() {
        let _ = write!(out, " c{i}:");
        push_terms(&mut out, &row.coeffs);
        let rel = match row.relation {
            Relation::Le => "<=",
            Relation::Eq => "=",
            Relation::Ge => ">=",
        };
        let _ = writeln!(out, " {rel} {:?}", row.rhs);
    }
    out.push_str("Bounds\n");
    for j in 0..lp.n_vars() {
        let (l, u) = (lp.lower[j], lp.upper[j]);
        match (l.is_finite(), u.is_finite()) {
            (true, true) if l == u => {
                let _ = writeln!(out, " x{j} = {l:?}");
            }
            (true, true) => {
                let _ = writeln!(out, " {l:?} <= x{j} <= {u:?}");
            }
            (true, false) => {
                let _ = writeln!(out, " x{j} >= {l:?}");
            }
            (false, true) => {
                let _ = writeln!(out, " -inf <= x{j} <= {u:?}");
            }
            (false, false) => {
                let _ = writeln!(out, " x{j} free");
            }
        }
    }
    out.push_str("End\n");
    out
}

fn push_terms(out: &mut String, terms: &[(usize, f64)]) {
    if terms.is_empty() {
        out.push_str(" 0 x0");
        return;
    }
    for &(j, c) in terms {
        if c < 0.0 {
            let _ = write!(out, " - {:?} x{j}", -c);
        } else {
            let _ = write!(out, " + {c:?} x{j}");
        }
    }
}
