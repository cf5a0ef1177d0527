mod common;

use common::{brute_force, random_lp, OracleAnswer};
use leggett_core::lp::{solve, verify_certificate, LinearProgram, Status};

#[test]
fn agrees_with_vertex_enumeration() {
    let mut r = common::rng(9);
    let mut seen = [0usize; 3];
    for i in 0..300 {
        let lp = random_lp(&mut r);
        let oracle = brute_force(&lp);
        let got = solve(&lp).unwrap();
        assert_eq!(got.status, oracle.status(), "lp #{i}: {lp:?}");
        let cert = got.certificate.as_ref().unwrap();
        assert!(verify_certificate(&lp, cert).ok, "lp #{i}");
        match oracle {
            OracleAnswer::Optimal(v) => {
                seen[0] += 1;
                assert!((got.objective.unwrap() - v).abs() < 1e-7 * (1.0 + v.abs()), "lp #{i}");
            }
            OracleAnswer::Infeasible => seen[1] += 1,
            OracleAnswer::Unbounded => seen[2] += 1,
        }
    }
    // the generator must exercise every status
    assert!(seen.iter().all(|&c| c > 10), "{seen:?}");
}

#[test]
fn row_scaling_keeps_status() {
    let mut r = common::rng(17);
    for _ in 0..100 {
        let lp = random_lp(&mut r);
        let mut scaled = LinearProgram::new(lp.n_vars());
        for (i, row) in lp.equalities().iter().enumerate() {
            let s = 0.01 + (i as f64 + 1.0) * 7.3;
            scaled.add_equality(row.coeffs.iter().map(|&(j, a)| (j, a * s)).collect(), row.rhs * s).unwrap();
        }
        for (i, row) in lp.inequalities().iter().enumerate() {
            let s = 1e-3 + (i as f64) * 13.0;
            scaled.add_inequality(row.coeffs.iter().map(|&(j, a)| (j, a * s)).collect(), row.rhs * s).unwrap();
        }
        scaled.set_objective(lp.objective().unwrap().to_vec()).unwrap();
        assert_eq!(solve(&lp).unwrap().status, solve(&scaled).unwrap().status);
    }
}

#[test]
fn non_undecided_statuses_always_verify() {
    let mut r = common::rng(23);
    for _ in 0..200 {
        let mut lp = random_lp(&mut r);
        if r_bool(&mut r) {
            // Feasibility-only variant.
            lp = strip_objective(&lp);
        }
        let got = solve(&lp).unwrap();
        if got.status != Status::Undecided {
            assert!(verify_certificate(&lp, got.certificate.as_ref().unwrap()).ok);
        }
    }
}

fn r_bool(r: &mut impl rand::Rng) -> bool {
    r.gen_bool(0.5)
}

fn strip_objective(lp: &LinearProgram) -> LinearProgram {
    let mut out = LinearProgram::new(lp.n_vars());
    for row in lp.equalities() {
        out.add_equality(row.coeffs.clone(), row.rhs).unwrap();
    }
    for row in lp.inequalities() {
        out.add_inequality(row.coeffs.clone(), row.rhs).unwrap();
    }
    out
}
