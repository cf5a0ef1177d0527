//! CPLEX-style LP text export, readable by GLPK, HiGHS, CBC and friends.

use std::fmt::Write;

use super::LinearProgram;

fn term(out: &mut String, first: &mut bool, j: usize, a: f64) {
    if *first {
        let _ = write!(out, " {a:+e} x{j}");
        *first = false;
    } else {
        let _ = write!(out, " {} {:e} x{j}", if a < 0.0 { '-' } else { '+' }, a.abs());
    }
}

fn row(out: &mut String, name: &str, coeffs: &[(usize, f64)], sense: &str, rhs: f64) {
    let _ = write!(out, " {name}:");
    let mut first = true;
    for &(j, a) in coeffs {
        term(out, &mut first, j, a);
    }
    if first {
        out.push_str(" 0 x0");
    }
    let _ = writeln!(out, " {sense} {rhs:e}");
}

/// Sections: objective, `Subject To` (equalities `e*`, then `i*`), `Bounds`, `End`.
pub fn to_lp_format(lp: &LinearProgram) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "\\ {} variables, {} equalities, {} inequalities", lp.n_vars(), lp.equalities().len(), lp.inequalities().len());
    out.push_str("Maximize\n obj:");
    let mut first = true;
    if let Some(c) = lp.objective() {
        for (j, &cj) in c.iter().enumerate() {
            if cj != 0.0 {
                term(&mut out, &mut first, j, cj);
            }
        }
    }
    if first {
        out.push_str(" 0 x0");
    }
    out.push_str("\nSubject To\n");
    for (i, r) in lp.equalities().iter().enumerate() {
        row(&mut out, &format!("e{i}"), &r.coeffs, "=", r.rhs);
    }
    for (i, r) in lp.inequalities().iter().enumerate() {
        row(&mut out, &format!("i{i}"), &r.coeffs, "<=", r.rhs);
    }
    out.push_str("Bounds\n");
    for (j, l) in lp.lower_bounds().iter().enumerate() {
        match l {
            None => {
                let _ = writeln!(out, " x{j} free");
            }
            Some(l) => {
                let _ = writeln!(out, " x{j} >= {l:e}");
            }
        }
    }
    out.push_str("End\n");
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sections_in_order() {
        let mut lp = LinearProgram::new(2);
        lp.add_equality(vec![(0, 1.0), (1, -2.0)], 1.0).unwrap();
        lp.add_inequality(vec![(1, 1.0)], 3.0).unwrap();
        lp.set_lower(1, None).unwrap();
        lp.set_objective(vec![1.0, 0.0]).unwrap();
        let s = to_lp_format(&lp);
        let pos = |k: &str| s.find(k).unwrap();
        assert!(pos("Maximize") < pos("Subject To") && pos("Subject To") < pos("Bounds") && pos("Bounds") < pos("End"));
        assert!(s.contains(" e0: +1e0 x0 - 2e0 x1 = 1e0"));
        assert!(s.contains(" x1 free"));
    }
}
