mod support;

use netalloc::lp::{
    check_solution, dual_objective, solve_lp, LinearProgram, Relation, Sense, SolveStatus,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use support::vertex_oracle::{random_small_lp, vertex_oracle, OracleOutcome};

#[test]
fn solver_matches_vertex_enumeration_on_random_small_lps() {
    let mut rng = ChaCha8Rng::seed_from_u64(20240601);
    let mut optimal = 0;
    for case in 0..1000 {
        let lp = random_small_lp(&mut rng);
        let report = solve_lp(&lp).unwrap();
        match vertex_oracle(&lp) {
            OracleOutcome::Optimal(v) => {
                optimal += 1;
                assert_eq!(report.status, SolveStatus::Optimal, "case {case}: {lp:?}");
                let got = report.objective_value.unwrap();
                assert!((got - v).abs() <= 1e-7 * (1.0 + v.abs()), "case {case}: {got} vs {v}");
            }
            OracleOutcome::Infeasible => {
                assert_eq!(report.status, SolveStatus::Infeasible, "case {case}: {lp:?}");
            }
        }
    }
    assert!(optimal > 300, "too few feasible instances: {optimal}");
}

fn random_medium_lp(rng: &mut ChaCha8Rng) -> LinearProgram {
    // feasible by construction: rows are built around a known interior point
    let n = rng.gen_range(5..40);
    let m = rng.gen_range(3..30);
    let mut lp = LinearProgram::new(if rng.gen_bool(0.5) { Sense::Maximize } else { Sense::Minimize });
    let mut point = Vec::new();
    for _ in 0..n {
        let lower = rng.gen_range(-5.0..0.0);
        let upper = if rng.gen_bool(0.3) { f64::INFINITY } else { lower + rng.gen_range(0.5..10.0) };
        let cost = rng.gen_range(-3.0..3.0);
        lp.add_var(cost, lower, upper);
        point.push(lower + 0.25);
    }
    for _ in 0..m {
        let mut coeffs = Vec::new();
        for j in 0..n {
            if rng.gen_bool(0.3) {
                coeffs.push((j, rng.gen_range(-4.0..4.0)));
            }
        }
        let lhs: f64 = coeffs.iter().map(|&(j, a)| a * point[j]).sum();
        let (relation, rhs) = match rng.gen_range(0..3) {
            0 => (Relation::Eq, lhs),
            1 => (Relation::Le, lhs + rng.gen_range(0.0..5.0)),
            _ => (Relation::Ge, lhs - rng.gen_range(0.0..5.0)),
        };
        lp.add_constraint(coeffs, relation, rhs);
    }
    // a bounding row keeps most instances from being unbounded
    let all: Vec<(usize, f64)> = (0..n).map(|j| (j, 1.0)).collect();
    let total: f64 = point.iter().sum();
    lp.add_constraint(all.clone(), Relation::Le, total + 50.0);
    lp.add_constraint(all, Relation::Ge, total - 50.0);
    lp
}

#[test]
fn optimal_solutions_are_feasible_dual_feasible_and_complementary() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let mut checked = 0;
    for case in 0..100 {
        let lp = random_medium_lp(&mut rng);
        let r = solve_lp(&lp).unwrap();
        if r.status != SolveStatus::Optimal {
            continue;
        }
        checked += 1;
        let res = check_solution(&lp, &r.primal).unwrap();
        assert!(res.max_violation() <= 1e-9, "case {case}: {res:?}");
        let primal = r.objective_value.unwrap();
        let dual = dual_objective(&lp, &r.duals);
        assert!(
            (primal - dual).abs() <= 1e-7 * (1.0 + primal.abs()),
            "case {case}: primal {primal} dual {dual}"
        );
        for (row, &y) in lp.constraints.iter().zip(&r.duals) {
            let lhs: f64 = row.coeffs.iter().map(|&(j, a)| a * r.primal[j]).sum();
            let slack = row.rhs - lhs;
            assert!((y * slack).abs() <= 1e-6, "case {case}: dual {y} slack {slack}");
            let sign_ok = match (lp.sense, row.relation) {
                (_, Relation::Eq) => true,
                (Sense::Maximize, Relation::Le) | (Sense::Minimize, Relation::Ge) => y >= -1e-9,
                _ => y <= 1e-9,
            };
            assert!(sign_ok, "case {case}: wrong dual sign {y} on {:?}", row.relation);
        }
    }
    assert!(checked >= 50, "only {checked} optimal instances");
}

#[test]
fn identical_inputs_give_identical_reports() {
    let mut rng = ChaCha8Rng::seed_from_u64(99);
    for _ in 0..20 {
        let lp = random_medium_lp(&mut rng);
        assert_eq!(solve_lp(&lp).unwrap(), solve_lp(&lp.clone()).unwrap());
    }
}
