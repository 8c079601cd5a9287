//! Brute-force LP oracle: enumerates every basic solution of a small,
//! fully boxed program and keeps the best feasible one.

use netalloc::lp::{LinearProgram, Relation, Sense};
use rand::Rng;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum OracleOutcome {
    Optimal(f64),
    Infeasible,
}

fn row_dense(lp: &LinearProgram, i: usize) -> Vec<f64> {
    let mut a = vec![0.0; lp.n_vars()];
    for &(j, v) in &lp.constraints[i].coeffs {
        a[j] += v;
    }
    a
}

fn solve_square(mut a: Vec<Vec<f64>>, mut b: Vec<f64>) -> Option<Vec<f64>> {
    let n = b.len();
    for col in 0..n {
        let piv = (col..n).max_by(|&x, &y| a[x][col].abs().total_cmp(&a[y][col].abs()))?;
        if a[piv][col].abs() < 1e-10 {
            return None;
        }
        a.swap(col, piv);
        b.swap(col, piv);
        for r in 0..n {
            if r != col {
                let f = a[r][col] / a[col][col];
                if f != 0.0 {
                    for c in col..n {
                        a[r][c] -= f * a[col][c];
                    }
                    b[r] -= f * b[col];
                }
            }
        }
    }
    Some((0..n).map(|i| b[i] / a[i][i]).collect())
}

/// Requires every variable to have finite bounds.
pub fn vertex_oracle(lp: &LinearProgram) -> OracleOutcome {
    let n = lp.n_vars();
    let m = lp.n_constraints();
    assert!(lp.lower.iter().chain(&lp.upper).all(|b| b.is_finite()));
    let rows: Vec<Vec<f64>> = (0..m).map(|i| row_dense(lp, i)).collect();
    let feasible = |x: &[f64]| -> bool {
        let tol = 1e-9;
        for j in 0..n {
            if x[j] < lp.lower[j] - tol || x[j] > lp.upper[j] + tol {
                return false;
            }
        }
        for (i, row) in lp.constraints.iter().enumerate() {
            let lhs: f64 = rows[i].iter().zip(x).map(|(a, v)| a * v).sum();
            let scale = 1.0 + row.rhs.abs();
            let ok = match row.relation {
                Relation::Le => lhs <= row.rhs + tol * scale,
                Relation::Ge => lhs >= row.rhs - tol * scale,
                Relation::Eq => (lhs - row.rhs).abs() <= tol * scale,
            };
            if !ok {
                return false;
            }
        }
        true
    };
    let sign = if lp.sense == Sense::Maximize { 1.0 } else { -1.0 };
    let mut best: Option<f64> = None;
    // each variable: 0 = at lower, 1 = at upper, 2 = determined by tight rows
    let mut status = vec![0u8; n];
    loop {
        let free: Vec<usize> = (0..n).filter(|&j| status[j] == 2).collect();
        let f = free.len();
        if f <= m {
            for_each_subset(m, f, |tight| {
                let mut x: Vec<f64> = (0..n)
                    .map(|j| match status[j] {
                        0 => lp.lower[j],
                        1 => lp.upper[j],
                        _ => 0.0,
                    })
                    .collect();
                if f > 0 {
                    let a: Vec<Vec<f64>> = tight
                        .iter()
                        .map(|&i| free.iter().map(|&j| rows[i][j]).collect())
                        .collect();
                    let b: Vec<f64> = tight
                        .iter()
                        .map(|&i| {
                            let fixed: f64 = (0..n)
                                .filter(|&j| status[j] != 2)
                                .map(|j| rows[i][j] * x[j])
                                .sum();
                            lp.constraints[i].rhs - fixed
                        })
                        .collect();
                    match solve_square(a, b) {
                        Some(sol) => {
                            for (k, &j) in free.iter().enumerate() {
                                x[j] = sol[k];
                            }
                        }
                        None => return,
                    }
                }
                if feasible(&x) {
                    let v = sign * lp.objective_at(&x);
                    best = Some(best.map_or(v, |b: f64| b.max(v)));
                }
            });
        }
        // next status vector in base 3
        let mut k = 0;
        loop {
            if k == n {
                return match best {
                    Some(v) => OracleOutcome::Optimal(sign * v),
                    None => OracleOutcome::Infeasible,
                };
            }
            status[k] += 1;
            if status[k] < 3 {
                break;
            }
            status[k] = 0;
            k += 1;
        }
    }
}

fn for_each_subset(m: usize, f: usize, mut visit: impl FnMut(&[usize])) {
    fn rec(start: usize, m: usize, f: usize, cur: &mut Vec<usize>, visit: &mut dyn FnMut(&[usize])) {
        if cur.len() == f {
            visit(cur);
            return;
        }
        for i in start..m {
            cur.push(i);
            rec(i + 1, m, f, cur, visit);
            cur.pop();
        }
    }
    rec(0, m, f, &mut Vec::new(), &mut visit);
}

/// Small random boxed LP with integer data, up to 6 variables and 6 rows.
pub fn random_small_lp<R: Rng>(rng: &mut R) -> LinearProgram {
    let sense = if rng.gen_bool(0.5) { Sense::Maximize } else { Sense::Minimize };
    let mut lp = LinearProgram::new(sense);
    let n = rng.gen_range(1..=6);
    let m = rng.gen_range(0..=6);
    for _ in 0..n {
        let lower = -(rng.gen_range(0..=3) as f64);
        let upper = lower + rng.gen_range(0..=8) as f64;
        lp.add_var(rng.gen_range(-5..=5) as f64, lower, upper);
    }
    for _ in 0..m {
        let mut coeffs = Vec::new();
        for j in 0..n {
            if rng.gen_bool(0.7) {
                let a = rng.gen_range(-5..=5) as f64;
                if a != 0.0 {
                    coeffs.push((j, a));
                }
            }
        }
        let relation = match rng.gen_range(0..5) {
            0 => Relation::Eq,
            1 | 2 => Relation::Ge,
            _ => Relation::Le,
        };
        lp.add_constraint(coeffs, relation, rng.gen_range(-10..=10) as f64);
    }
    lp
}
