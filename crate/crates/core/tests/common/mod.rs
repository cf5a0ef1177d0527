//! Independent oracles shared by the integration and acceptance tests.
#![allow(dead_code)]

use leggett_core::linalg::{CMatrix, C64};
use leggett_core::lp::{LinearProgram, Status};
use leggett_core::polarization::PolarizationVector;
use leggett_core::state::DensityMatrix;
use rand::Rng;
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    use rand::SeedableRng;
    ChaCha8Rng::seed_from_u64(seed)
}

fn gaussian(r: &mut impl Rng) -> f64 {
    // Box-Muller; one normal deviate per call is enough here.
    let u: f64 = r.gen_range(f64::EPSILON..1.0);
    let v: f64 = r.gen();
    (-2.0 * u.ln()).sqrt() * (2.0 * std::f64::consts::PI * v).cos()
}

pub fn random_direction(r: &mut impl Rng) -> PolarizationVector {
    let n = [gaussian(r), gaussian(r), gaussian(r)];
    PolarizationVector::from_bloch_vector(n).unwrap()
}

/// Ginibre-distributed mixed state: G G† / tr.
pub fn random_state(r: &mut impl Rng, dim: usize) -> DensityMatrix {
    let g: Vec<C64> = (0..dim * dim).map(|_| C64::new(gaussian(r), gaussian(r))).collect();
    let g = CMatrix::from_entries(&g).unwrap();
    let m = g.checked_mul(&g.adjoint()).unwrap();
    let t = m.trace().re;
    DensityMatrix::new(m.scale(1.0 / t).symmetrized()).unwrap()
}

/// Mixture of `k` random pure product states, with the directions used.
pub fn random_separable(r: &mut impl Rng, k: usize) -> (DensityMatrix, Vec<(f64, PolarizationVector, PolarizationVector)>) {
    let mut parts = Vec::with_capacity(k);
    let mut weights: Vec<f64> = (0..k).map(|_| r.gen::<f64>() + 1e-3).collect();
    let total: f64 = weights.iter().sum();
    weights.iter_mut().for_each(|w| *w /= total);
    let mut comps = Vec::with_capacity(k);
    for w in weights {
        let u = random_direction(r);
        let v = random_direction(r);
        let rho = DensityMatrix::product(&DensityMatrix::from_polarization(&u), &DensityMatrix::from_polarization(&v)).unwrap();
        parts.push((w, rho));
        comps.push((w, u, v));
    }
    (DensityMatrix::mixture(&parts).unwrap(), comps)
}

// ---------------------------------------------------------------------------
// Brute-force LP oracle over basic solutions of the standard form.

/// Dense standard form [A 0; G I](x, s) = (b, h), all variables ≥ 0.
struct Dense {
    rows: Vec<Vec<f64>>,
    rhs: Vec<f64>,
    cost: Vec<f64>,
}

fn densify(lp: &LinearProgram) -> Dense {
    let n = lp.n_vars();
    let k = lp.inequalities().len();
    let mut rows = Vec::new();
    let mut rhs = Vec::new();
    for r in lp.equalities() {
        let mut row = vec![0.0; n + k];
        for &(j, a) in &r.coeffs {
            row[j] += a;
        }
        rows.push(row);
        rhs.push(r.rhs);
    }
    for (i, r) in lp.inequalities().iter().enumerate() {
        let mut row = vec![0.0; n + k];
        for &(j, a) in &r.coeffs {
            row[j] += a;
        }
        row[n + i] = 1.0;
        rows.push(row);
        rhs.push(r.rhs);
    }
    let mut cost = vec![0.0; n + k];
    if let Some(c) = lp.objective() {
        cost[..n].copy_from_slice(c);
    }
    Dense { rows, rhs, cost }
}

/// Solves rows[:, cols]·z = rhs when the chosen columns are independent and
/// the system is consistent.
fn basic_solution(rows: &[Vec<f64>], rhs: &[f64], cols: &[usize]) -> Option<Vec<f64>> {
    let m = rows.len();
    let s = cols.len();
    let mut a: Vec<Vec<f64>> = (0..m).map(|i| cols.iter().map(|&j| rows[i][j]).chain([rhs[i]]).collect()).collect();
    let mut r = 0;
    for c in 0..s {
        let p = (r..m).max_by(|&i, &j| a[i][c].abs().total_cmp(&a[j][c].abs()))?;
        if a[p][c].abs() < 1e-9 {
            return None;
        }
        a.swap(p, r);
        for i in 0..m {
            if i != r {
                let f = a[i][c] / a[r][c];
                for j in c..=s {
                    a[i][j] -= f * a[r][j];
                }
            }
        }
        r += 1;
    }
    if (s..m).any(|i| a[i][s].abs() > 1e-9) {
        return None;
    }
    Some((0..s).map(|i| a[i][s] / a[i][i]).collect())
}

fn for_each_subset(n: usize, max_size: usize, f: &mut impl FnMut(&[usize])) {
    fn rec(start: usize, n: usize, max_size: usize, cur: &mut Vec<usize>, f: &mut impl FnMut(&[usize])) {
        f(cur);
        if cur.len() == max_size {
            return;
        }
        for j in start..n {
            cur.push(j);
            rec(j + 1, n, max_size, cur, f);
            cur.pop();
        }
    }
    rec(0, n, max_size, &mut Vec::new(), f);
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum OracleAnswer {
    Infeasible,
    Unbounded,
    Optimal(f64),
}

impl OracleAnswer {
    pub fn status(&self) -> Status {
        match self {
            OracleAnswer::Infeasible => Status::Infeasible,
            OracleAnswer::Unbounded => Status::Unbounded,
            OracleAnswer::Optimal(_) => Status::Optimal,
        }
    }
}

/// Status of an LP with all lower bounds zero, by enumerating basic
/// feasible solutions and extreme rays.
pub fn brute_force(lp: &LinearProgram) -> OracleAnswer {
    assert!(lp.lower_bounds().iter().all(|l| *l == Some(0.0)));
    let d = densify(lp);
    let n = d.cost.len();
    let m = d.rows.len();
    let mut best: Option<f64> = None;
    for_each_subset(n, m, &mut |cols| {
        if let Some(z) = basic_solution(&d.rows, &d.rhs, cols) {
            if z.iter().all(|&v| v >= -1e-9) {
                let val: f64 = cols.iter().zip(&z).map(|(&j, v)| d.cost[j] * v).sum();
                best = Some(best.map_or(val, |b: f64| b.max(val)));
            }
        }
    });
    let Some(best) = best else { return OracleAnswer::Infeasible };
    // Extreme rays: vertices of {A d = 0, d ≥ 0, Σ d = 1}.
    let mut rows = d.rows.clone();
    rows.push(vec![1.0; n]);
    let mut rhs = vec![0.0; m];
    rhs.push(1.0);
    let mut unbounded = false;
    for_each_subset(n, m + 1, &mut |cols| {
        if unbounded || cols.is_empty() {
            return;
        }
        if let Some(z) = basic_solution(&rows, &rhs, cols) {
            if z.iter().all(|&v| v >= -1e-9) {
                let gain: f64 = cols.iter().zip(&z).map(|(&j, v)| d.cost[j] * v).sum();
                if gain > 1e-9 {
                    unbounded = true;
                }
            }
        }
    });
    if unbounded {
        OracleAnswer::Unbounded
    } else {
        OracleAnswer::Optimal(best)
    }
}

/// Random LP with ≤ 20 variables and ≤ 4 general rows; small integer data
/// to provoke degeneracy.
pub fn random_lp(r: &mut impl Rng) -> LinearProgram {
    let n = r.gen_range(1..=20);
    let m_eq = r.gen_range(0..=2);
    let k = r.gen_range(usize::from(m_eq == 0)..=(4 - m_eq));
    let integer = r.gen_bool(0.6);
    let coef = |r: &mut dyn rand::RngCore| -> f64 {
        if integer {
            r.gen_range(-3i32..=3) as f64
        } else {
            r.gen_range(-1.0..1.0)
        }
    };
    let mut lp = LinearProgram::new(n);
    for _ in 0..m_eq {
        let row: Vec<(usize, f64)> = (0..n).map(|j| (j, coef(r))).filter(|e| e.1 != 0.0).collect();
        lp.add_equality(row, r.gen_range(-2i32..=4) as f64).unwrap();
    }
    for _ in 0..k {
        let row: Vec<(usize, f64)> = (0..n).map(|j| (j, coef(r))).filter(|e| e.1 != 0.0).collect();
        lp.add_inequality(row, r.gen_range(-2i32..=5) as f64).unwrap();
    }
    let c: Vec<f64> = (0..n).map(|_| coef(r)).collect();
    lp.set_objective(c).unwrap();
    lp
}
