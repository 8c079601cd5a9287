//! Two-phase revised primal simplex with bounded variables.
//!
//! Every row `i` gets a logical column `e_i` so that `A x + s = b`, with the
//! logical's bounds encoding the row relation. Rows whose logical cannot
//! absorb the initial residual receive an artificial column; phase one
//! drives those to zero, after which they are fixed at zero and phase two
//! optimizes the real objective. Pricing is Dantzig's rule, falling back to
//! Bland's rule while the objective stalls on degenerate pivots.

use super::factor::{Factorization, SparseCol};
use super::{LinearProgram, LpError, Relation, Sense, SolveReport, SolveStatus};
use super::{FEASIBILITY_TOL, OPTIMALITY_TOL};

const PIVOT_TOL: f64 = 1e-9;
const RATIO_TIE_TOL: f64 = 1e-12;
const DEGENERATE_STEP: f64 = 1e-12;

#[derive(Debug, Clone)]
pub struct SimplexOptions {
    /// Iteration budget; `None` means `50 · (n_vars + n_constraints)`.
    pub max_iterations: Option<usize>,
    /// Number of eta updates between refactorizations.
    pub refactor_interval: usize,
    /// Consecutive degenerate pivots before switching to Bland's rule.
    pub stall_threshold: usize,
}

impl Default for SimplexOptions {
    fn default() -> Self {
        SimplexOptions {
            max_iterations: None,
            refactor_interval: 100,
            stall_threshold: 50,
        }
    }
}

pub fn solve_lp(lp: &LinearProgram) -> Result<SolveReport, LpError> {
    solve_lp_with(lp, &SimplexOptions::default())
}

pub fn solve_lp_with(lp: &LinearProgram, opts: &SimplexOptions) -> Result<SolveReport, LpError> {
    lp.validate()?;
    let budget = opts
        .max_iterations
        .unwrap_or(50 * (lp.n_vars() + lp.n_constraints()).max(1));
    let mut s = Simplex::new(lp, opts.clone(), budget);
    s.run(lp)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum VarState {
    Basic,
    AtLower,
    AtUpper,
    /// Nonbasic free variable resting at zero.
    Free,
}

enum PhaseEnd {
    Optimal,
    Unbounded,
}

struct Simplex {
    m: usize,
    n_struct: usize,
    col_start: Vec<usize>,
    col_rows: Vec<usize>,
    col_vals: Vec<f64>,
    lower: Vec<f64>,
    upper: Vec<f64>,
    cost: Vec<f64>,
    x: Vec<f64>,
    state: Vec<VarState>,
    head: Vec<usize>,
    rhs: Vec<f64>,
    factor: Option<Factorization>,
    opts: SimplexOptions,
    budget: usize,
    iterations: usize,
}

impl Simplex {
    fn new(lp: &LinearProgram, opts: SimplexOptions, budget: usize) -> Self {
        let m = lp.n_constraints();
        let n = lp.n_vars();
        let mut counts = vec![0usize; n];
        for row in &lp.constraints {
            for &(j, _) in &row.coeffs {
                counts[j] += 1;
            }
        }
        let mut col_start = Vec::with_capacity(n + 2 * m + 1);
        col_start.push(0);
        for c in &counts {
            col_start.push(col_start.last().unwrap() + c);
        }
        let nnz = *col_start.last().unwrap();
        let mut col_rows = vec![0usize; nnz];
        let mut col_vals = vec![0.0f64; nnz];
        let mut fill = col_start[..n].to_vec();
        for (i, row) in lp.constraints.iter().enumerate() {
            for &(j, a) in &row.coeffs {
                // duplicate entries are summed by the factorization and pricing alike
                col_rows[fill[j]] = i;
                col_vals[fill[j]] = a;
                fill[j] += 1;
            }
        }
        let sign = match lp.sense {
            Sense::Minimize => 1.0,
            Sense::Maximize => -1.0,
        };
        let mut cost: Vec<f64> = lp.objective.iter().map(|c| sign * c).collect();
        let mut lower = lp.lower.clone();
        let mut upper = lp.upper.clone();
        let mut x = Vec::with_capacity(n + m);
        let mut state = Vec::with_capacity(n + m);
        for j in 0..n {
            let (v, st) = if lower[j].is_finite() {
                (lower[j], VarState::AtLower)
            } else if upper[j].is_finite() {
                (upper[j], VarState::AtUpper)
            } else {
                (0.0, VarState::Free)
            };
            x.push(v);
            state.push(st);
        }
        let mut s = Simplex {
            m,
            n_struct: n,
            col_start,
            col_rows,
            col_vals,
            lower: Vec::new(),
            upper: Vec::new(),
            cost: Vec::new(),
            x: Vec::new(),
            state: Vec::new(),
            head: Vec::with_capacity(m),
            rhs: lp.constraints.iter().map(|r| r.rhs).collect(),
            factor: None,
            opts,
            budget,
            iterations: 0,
        };
        // logicals
        for (i, row) in lp.constraints.iter().enumerate() {
            s.col_rows.push(i);
            s.col_vals.push(1.0);
            s.col_start.push(s.col_rows.len());
            let (l, u) = match row.relation {
                Relation::Le => (0.0, f64::INFINITY),
                Relation::Ge => (f64::NEG_INFINITY, 0.0),
                Relation::Eq => (0.0, 0.0),
            };
            lower.push(l);
            upper.push(u);
            cost.push(0.0);
        }
        // residual each logical must absorb given the nonbasic structurals
        let mut resid = s.rhs.clone();
        for j in 0..n {
            if x[j] != 0.0 {
                for idx in s.col_start[j]..s.col_start[j + 1] {
                    resid[s.col_rows[idx]] -= s.col_vals[idx] * x[j];
                }
            }
        }
        let mut artificial_rows = Vec::new();
        for i in 0..m {
            let j = n + i;
            let r = resid[i];
            if r >= lower[j] && r <= upper[j] {
                x.push(r);
                state.push(VarState::Basic);
                s.head.push(j);
            } else {
                let (v, st) = if r < lower[j] {
                    (lower[j], VarState::AtLower)
                } else {
                    (upper[j], VarState::AtUpper)
                };
                x.push(v);
                state.push(st);
                s.head.push(usize::MAX);
                artificial_rows.push((i, r - v));
            }
        }
        for (i, gap) in artificial_rows {
            let j = s.col_start.len() - 1;
            s.col_rows.push(i);
            s.col_vals.push(gap.signum());
            s.col_start.push(s.col_rows.len());
            lower.push(0.0);
            upper.push(f64::INFINITY);
            cost.push(0.0);
            x.push(gap.abs());
            state.push(VarState::Basic);
            s.head[i] = j;
        }
        s.lower = lower;
        s.upper = upper;
        s.cost = cost;
        s.x = x;
        s.state = state;
        s
    }

    fn n_total(&self) -> usize {
        self.col_start.len() - 1
    }

    fn first_artificial(&self) -> usize {
        self.n_struct + self.m
    }

    fn refactor(&mut self) -> Result<(), LpError> {
        for _attempt in 0..=self.m {
            let head = &self.head;
            let result = Factorization::new(self.m, |p| {
                let j = head[p];
                let r = self.col_start[j]..self.col_start[j + 1];
                SparseCol {
                    rows: &self.col_rows[r.clone()],
                    vals: &self.col_vals[r],
                }
            });
            match result {
                Ok(f) => {
                    self.factor = Some(f);
                    self.recompute_basics();
                    return Ok(());
                }
                Err(singular) => {
                    for (pos, row) in singular.replacements {
                        let out = self.head[pos];
                        self.make_nonbasic_nearest(out);
                        let logical = self.n_struct + row;
                        self.state[logical] = VarState::Basic;
                        self.head[pos] = logical;
                    }
                }
            }
        }
        Err(LpError::NumericalFailure {
            iterations: self.iterations,
        })
    }

    fn make_nonbasic_nearest(&mut self, j: usize) {
        let (l, u, v) = (self.lower[j], self.upper[j], self.x[j]);
        let (val, st) = match (l.is_finite(), u.is_finite()) {
            (true, true) => {
                if (v - l).abs() <= (u - v).abs() {
                    (l, VarState::AtLower)
                } else {
                    (u, VarState::AtUpper)
                }
            }
            (true, false) => (l, VarState::AtLower),
            (false, true) => (u, VarState::AtUpper),
            (false, false) => (0.0, VarState::Free),
        };
        self.x[j] = val;
        self.state[j] = st;
    }

    fn recompute_basics(&mut self) {
        let mut r = self.rhs.clone();
        for j in 0..self.n_total() {
            if self.state[j] != VarState::Basic && self.x[j] != 0.0 {
                let xj = self.x[j];
                for idx in self.col_start[j]..self.col_start[j + 1] {
                    r[self.col_rows[idx]] -= self.col_vals[idx] * xj;
                }
            }
        }
        self.factor.as_mut().unwrap().ftran(&mut r);
        for (p, &j) in self.head.iter().enumerate() {
            self.x[j] = r[p];
        }
    }

    fn duals(&mut self, cost: &[f64]) -> Vec<f64> {
        let mut pi: Vec<f64> = self.head.iter().map(|&j| cost[j]).collect();
        self.factor.as_mut().unwrap().btran(&mut pi);
        pi
    }

    fn reduced_cost(&self, j: usize, cost: &[f64], pi: &[f64]) -> f64 {
        let mut d = cost[j];
        for idx in self.col_start[j]..self.col_start[j + 1] {
            d -= pi[self.col_rows[idx]] * self.col_vals[idx];
        }
        d
    }

    /// Returns the entering column and its direction (+1 increase, -1 decrease).
    fn price(&self, cost: &[f64], pi: &[f64], bland: bool) -> Option<(usize, f64)> {
        let mut best: Option<(usize, f64)> = None;
        let mut best_score = 0.0;
        for j in 0..self.n_total() {
            let st = self.state[j];
            if st == VarState::Basic || self.lower[j] == self.upper[j] {
                continue;
            }
            let d = self.reduced_cost(j, cost, pi);
            let dir = match st {
                VarState::AtLower if d < -OPTIMALITY_TOL => 1.0,
                VarState::AtUpper if d > OPTIMALITY_TOL => -1.0,
                VarState::Free if d.abs() > OPTIMALITY_TOL => -d.signum(),
                _ => continue,
            };
            if bland {
                return Some((j, dir));
            }
            if d.abs() > best_score {
                best_score = d.abs();
                best = Some((j, dir));
            }
        }
        best
    }

    fn run_phase(&mut self, cost: &[f64]) -> Result<PhaseEnd, LpError> {
        let mut stalled = 0usize;
        let mut alpha = vec![0.0; self.m];
        loop {
            if self.factor.as_ref().map_or(true, |f| f.eta_count() >= self.opts.refactor_interval) {
                self.refactor()?;
            }
            let pi = self.duals(cost);
            let bland = stalled >= self.opts.stall_threshold;
            let Some((q, dir)) = self.price(cost, &pi, bland) else {
                return Ok(PhaseEnd::Optimal);
            };
            if self.iterations >= self.budget {
                return Err(LpError::NumericalFailure {
                    iterations: self.iterations,
                });
            }
            self.iterations += 1;

            alpha.iter_mut().for_each(|a| *a = 0.0);
            for idx in self.col_start[q]..self.col_start[q + 1] {
                alpha[self.col_rows[idx]] += self.col_vals[idx];
            }
            self.factor.as_mut().unwrap().ftran(&mut alpha);

            // basic p moves by -dir * t * alpha[p]
            let mut t_min = f64::INFINITY;
            for (p, &a) in alpha.iter().enumerate() {
                if a.abs() <= PIVOT_TOL {
                    continue;
                }
                if let Some(r) = self.ratio(p, dir * a) {
                    t_min = t_min.min(r);
                }
            }
            let flip = self.upper[q] - self.lower[q];
            if flip <= t_min {
                let t = flip;
                if !t.is_finite() {
                    return Ok(PhaseEnd::Unbounded);
                }
                self.x[q] += dir * t;
                self.state[q] = if dir > 0.0 {
                    VarState::AtUpper
                } else {
                    VarState::AtLower
                };
                self.x[q] = if dir > 0.0 { self.upper[q] } else { self.lower[q] };
                for (p, &a) in alpha.iter().enumerate() {
                    if a != 0.0 {
                        let j = self.head[p];
                        self.x[j] -= dir * t * a;
                    }
                }
                stalled = if t <= DEGENERATE_STEP { stalled + 1 } else { 0 };
                continue;
            }
            if !t_min.is_finite() {
                return Ok(PhaseEnd::Unbounded);
            }

            let cutoff = t_min + RATIO_TIE_TOL * (1.0 + t_min);
            let mut leave: Option<usize> = None;
            for (p, &a) in alpha.iter().enumerate() {
                if a.abs() <= PIVOT_TOL {
                    continue;
                }
                let Some(r) = self.ratio(p, dir * a) else {
                    continue;
                };
                if r > cutoff {
                    continue;
                }
                leave = match leave {
                    None => Some(p),
                    Some(b) if bland => {
                        if self.head[p] < self.head[b] {
                            Some(p)
                        } else {
                            Some(b)
                        }
                    }
                    Some(b) => {
                        if a.abs() > alpha[b].abs() {
                            Some(p)
                        } else {
                            Some(b)
                        }
                    }
                };
            }
            let r = leave.expect("a blocking row exists when t_min is finite");
            let t = t_min;
            let out = self.head[r];
            let decreasing = dir * alpha[r] > 0.0;

            self.x[q] += dir * t;
            for (p, &a) in alpha.iter().enumerate() {
                if a != 0.0 && p != r {
                    let j = self.head[p];
                    self.x[j] -= dir * t * a;
                }
            }
            if decreasing {
                self.x[out] = self.lower[out];
                self.state[out] = VarState::AtLower;
            } else {
                self.x[out] = self.upper[out];
                self.state[out] = VarState::AtUpper;
            }
            self.state[q] = VarState::Basic;
            self.head[r] = q;
            self.factor.as_mut().unwrap().push_eta(r, &alpha);
            stalled = if t <= DEGENERATE_STEP { stalled + 1 } else { 0 };
        }
    }

    /// Step length at which basic position `p` reaches a bound, given that
    /// it moves by `-t * signed_alpha`.
    fn ratio(&self, p: usize, signed_alpha: f64) -> Option<f64> {
        let j = self.head[p];
        let v = self.x[j];
        if signed_alpha > 0.0 {
            let l = self.lower[j];
            l.is_finite().then(|| ((v - l) / signed_alpha).max(0.0))
        } else {
            let u = self.upper[j];
            u.is_finite().then(|| ((u - v) / -signed_alpha).max(0.0))
        }
    }

    fn run(&mut self, lp: &LinearProgram) -> Result<SolveReport, LpError> {
        let first_art = self.first_artificial();
        let n_total = self.n_total();
        if n_total > first_art {
            let mut phase1 = vec![0.0; n_total];
            phase1[first_art..].iter_mut().for_each(|c| *c = 1.0);
            match self.run_phase(&phase1)? {
                PhaseEnd::Optimal => {}
                PhaseEnd::Unbounded => {
                    return Err(LpError::NumericalFailure {
                        iterations: self.iterations,
                    })
                }
            }
            self.refactor()?;
            let infeasibility: f64 = (first_art..n_total).map(|j| self.x[j].max(0.0)).sum();
            let scale = 1.0 + self.rhs.iter().fold(0.0f64, |a, b| a.max(b.abs()));
            if infeasibility > FEASIBILITY_TOL * scale {
                return Ok(SolveReport {
                    status: SolveStatus::Infeasible,
                    objective_value: None,
                    primal: self.x[..self.n_struct].to_vec(),
                    duals: Vec::new(),
                    iterations: self.iterations,
                });
            }
            for j in first_art..n_total {
                self.upper[j] = 0.0;
                if self.state[j] != VarState::Basic {
                    self.x[j] = 0.0;
                    self.state[j] = VarState::AtLower;
                }
            }
        }
        let cost = self.cost.clone();
        let end = self.run_phase(&cost)?;
        let mut primal = self.x[..self.n_struct].to_vec();
        if let PhaseEnd::Unbounded = end {
            return Ok(SolveReport {
                status: SolveStatus::Unbounded,
                objective_value: None,
                primal,
                duals: Vec::new(),
                iterations: self.iterations,
            });
        }
        self.refactor()?;
        primal.copy_from_slice(&self.x[..self.n_struct]);
        for (j, v) in primal.iter_mut().enumerate() {
            *v = v.clamp(lp.lower[j], lp.upper[j]);
        }
        let pi = self.duals(&cost);
        let sign = match lp.sense {
            Sense::Minimize => 1.0,
            Sense::Maximize => -1.0,
        };
        let duals = pi.into_iter().map(|p| sign * p).collect();
        Ok(SolveReport {
            status: SolveStatus::Optimal,
            objective_value: Some(lp.objective_at(&primal)),
            primal,
            duals,
            iterations: self.iterations,
        })
    }
}
