//! Two-phase revised simplex on min cᵀx, Ax = b (b ≥ 0), x ≥ 0.
//!
//! The basis inverse is kept dense and updated by elementary row operations,
//! with a fresh Gauss-Jordan factorization every `REFACTOR_EVERY` pivots.
//! Columns can be appended between calls, which is what column generation
//! needs: the current basis stays valid and the next phase resumes from it.

use super::Tolerances;

pub(crate) type SparseVec = Vec<(usize, f64)>;

const REFACTOR_EVERY: usize = 50;
const DEGENERATE_BEFORE_BLAND: usize = 50;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Var {
    Structural(usize),
    Artificial(usize),
}

#[derive(Debug, Clone, PartialEq)]
pub(crate) enum PhaseEnd {
    Optimal,
    /// Entering column and its B⁻¹-image; the objective decreases without bound.
    Unbounded { entering: usize, alpha: Vec<f64> },
    PivotLimit,
    Singular,
}

#[derive(Debug, Clone)]
pub(crate) struct Engine {
    m: usize,
    b: Vec<f64>,
    cols: Vec<SparseVec>,
    cost: Vec<f64>,
    basis: Vec<Var>,
    in_basis: Vec<bool>,
    binv: Vec<f64>,
    xb: Vec<f64>,
    tol: Tolerances,
    pub(crate) pivots: usize,
    since_refactor: usize,
}

impl Engine {
    /// Starts from the all-artificial basis. Requires b ≥ 0.
    pub fn new(b: Vec<f64>, tol: Tolerances) -> Self {
        let m = b.len();
        debug_assert!(b.iter().all(|&v| v >= 0.0));
        let mut binv = vec![0.0; m * m];
        for i in 0..m {
            binv[i * m + i] = 1.0;
        }
        Self {
            m,
            xb: b.clone(),
            b,
            cols: Vec::new(),
            cost: Vec::new(),
            basis: (0..m).map(Var::Artificial).collect(),
            in_basis: Vec::new(),
            binv,
            tol,
            pivots: 0,
            since_refactor: 0,
        }
    }

    pub fn add_column(&mut self, col: SparseVec, cost: f64) -> usize {
        self.cols.push(col);
        self.cost.push(cost);
        self.in_basis.push(false);
        self.cols.len() - 1
    }

    /// Replaces artificials by unit columns (+1 in a single row) where possible.
    /// Only valid before the first pivot, while B⁻¹ is still the identity.
    pub fn crash_unit_columns(&mut self) {
        debug_assert_eq!(self.pivots, 0);
        for (j, col) in self.cols.iter().enumerate() {
            if let [(i, v)] = col.as_slice() {
                if *v == 1.0 && self.basis[*i] == Var::Artificial(*i) {
                    self.basis[*i] = Var::Structural(j);
                    self.in_basis[j] = true;
                }
            }
        }
    }

    fn column_of(&self, v: Var) -> SparseVec {
        match v {
            Var::Structural(j) => self.cols[j].clone(),
            Var::Artificial(i) => vec![(i, 1.0)],
        }
    }

    fn ftran(&self, col: &[(usize, f64)]) -> Vec<f64> {
        let m = self.m;
        let mut out = vec![0.0; m];
        for (k, o) in out.iter_mut().enumerate() {
            let row = &self.binv[k * m..(k + 1) * m];
            *o = col.iter().map(|&(i, a)| row[i] * a).sum();
        }
        out
    }

    /// π = c_Bᵀ B⁻¹ for the given phase.
    fn duals(&self, phase_one: bool) -> Vec<f64> {
        let m = self.m;
        let mut pi = vec![0.0; m];
        for (k, v) in self.basis.iter().enumerate() {
            let c = match (phase_one, v) {
                (true, Var::Artificial(_)) => 1.0,
                (true, Var::Structural(_)) => 0.0,
                (false, Var::Artificial(_)) => 0.0,
                (false, Var::Structural(j)) => self.cost[*j],
            };
            if c != 0.0 {
                let row = &self.binv[k * m..(k + 1) * m];
                for (p, r) in pi.iter_mut().zip(row) {
                    *p += c * r;
                }
            }
        }
        pi
    }

    pub fn phase_one_duals(&self) -> Vec<f64> {
        self.duals(true)
    }

    pub fn phase_two_duals(&self) -> Vec<f64> {
        self.duals(false)
    }

    pub fn reduced_cost(&self, j: usize, pi: &[f64], phase_one: bool) -> f64 {
        let c = if phase_one { 0.0 } else { self.cost[j] };
        c - self.cols[j].iter().map(|&(i, a)| pi[i] * a).sum::<f64>()
    }

    /// Sum of artificial values (the phase-one objective).
    pub fn infeasibility(&self) -> f64 {
        self.basis
            .iter()
            .zip(&self.xb)
            .filter(|(v, _)| matches!(v, Var::Artificial(_)))
            .map(|(_, x)| x.max(0.0))
            .sum()
    }

    pub fn primal(&self) -> Vec<f64> {
        let mut x = vec![0.0; self.cols.len()];
        for (k, v) in self.basis.iter().enumerate() {
            if let Var::Structural(j) = v {
                x[*j] = self.xb[k].max(0.0);
            }
        }
        x
    }

    fn refactor(&mut self) -> bool {
        let m = self.m;
        // Dense B, then Gauss-Jordan with partial pivoting into B⁻¹.
        let mut a = vec![0.0; m * m];
        for (k, v) in self.basis.iter().enumerate() {
            for (i, x) in self.column_of(*v) {
                a[i * m + k] = x;
            }
        }
        let mut inv = vec![0.0; m * m];
        for i in 0..m {
            inv[i * m + i] = 1.0;
        }
        for c in 0..m {
            let p = (c..m).max_by(|&i, &j| a[i * m + c].abs().total_cmp(&a[j * m + c].abs())).unwrap();
            let piv = a[p * m + c];
            if piv.abs() < 1e-13 {
                return false;
            }
            if p != c {
                for j in 0..m {
                    a.swap(p * m + j, c * m + j);
                    inv.swap(p * m + j, c * m + j);
                }
            }
            let s = 1.0 / piv;
            for j in 0..m {
                a[c * m + j] *= s;
                inv[c * m + j] *= s;
            }
            for i in 0..m {
                if i != c {
                    let f = a[i * m + c];
                    if f != 0.0 {
                        for j in 0..m {
                            a[i * m + j] -= f * a[c * m + j];
                            inv[i * m + j] -= f * inv[c * m + j];
                        }
                    }
                }
            }
        }
        self.binv = inv;
        let b = self.b.clone();
        let dense: SparseVec = b.iter().copied().enumerate().filter(|(_, v)| *v != 0.0).collect();
        self.xb = self.ftran(&dense);
        for x in self.xb.iter_mut() {
            if *x < 0.0 && *x > -self.tol.feasibility {
                *x = 0.0;
            }
        }
        self.since_refactor = 0;
        true
    }

    fn pivot(&mut self, r: usize, entering: Var, alpha: &[f64], theta: f64) {
        let m = self.m;
        for (k, x) in self.xb.iter_mut().enumerate() {
            if k != r {
                *x -= theta * alpha[k];
                if *x < 0.0 && *x > -self.tol.feasibility {
                    *x = 0.0;
                }
            }
        }
        self.xb[r] = theta;
        let ar = alpha[r];
        for j in 0..m {
            self.binv[r * m + j] /= ar;
        }
        let (head, tail) = self.binv.split_at_mut(r * m);
        let (pivot_row, rest) = tail.split_at_mut(m);
        for (k, &ak) in alpha.iter().enumerate() {
            if k == r || ak == 0.0 {
                continue;
            }
            let row = if k < r { &mut head[k * m..(k + 1) * m] } else { &mut rest[(k - r - 1) * m..(k - r) * m] };
            for (x, p) in row.iter_mut().zip(pivot_row.iter()) {
                *x -= ak * p;
            }
        }
        if let Var::Structural(j) = self.basis[r] {
            self.in_basis[j] = false;
        }
        if let Var::Structural(j) = entering {
            self.in_basis[j] = true;
        }
        self.basis[r] = entering;
        self.pivots += 1;
        self.since_refactor += 1;
    }

    /// Runs the simplex loop for phase one (minimize artificials) or two.
    pub fn run(&mut self, phase_one: bool) -> PhaseEnd {
        let mut degenerate = 0usize;
        loop {
            if self.pivots >= self.tol.max_pivots {
                return PhaseEnd::PivotLimit;
            }
            if self.since_refactor >= REFACTOR_EVERY && !self.refactor() {
                return PhaseEnd::Singular;
            }
            let bland = degenerate >= DEGENERATE_BEFORE_BLAND;
            let pi = self.duals(phase_one);
            let mut entering = None;
            let mut best = -self.tol.optimality;
            for j in 0..self.cols.len() {
                if self.in_basis[j] {
                    continue;
                }
                let d = self.reduced_cost(j, &pi, phase_one);
                if d < best {
                    entering = Some(j);
                    if bland {
                        break;
                    }
                    best = d;
                }
            }
            let Some(j) = entering else {
                return PhaseEnd::Optimal;
            };
            let alpha = self.ftran(&self.cols[j]);
            match self.ratio_test(&alpha, phase_one, bland) {
                None => return PhaseEnd::Unbounded { entering: j, alpha },
                Some((r, theta)) => {
                    if theta <= 1e-12 {
                        degenerate += 1;
                    } else {
                        degenerate = 0;
                    }
                    self.pivot(r, Var::Structural(j), &alpha, theta);
                }
            }
        }
    }

    fn ratio_test(&self, alpha: &[f64], phase_one: bool, bland: bool) -> Option<(usize, f64)> {
        let piv = self.tol.pivot;
        // Zero-level artificials left in the basis after phase one must not move.
        let blocks_at_zero = |k: usize| !phase_one && matches!(self.basis[k], Var::Artificial(_)) && alpha[k].abs() > piv;
        // Harris widens the first pass by the feasibility tolerance; under
        // Bland the exact minimum ratio is needed for the anti-cycling guarantee.
        let widen = if bland { 0.0 } else { self.tol.feasibility };
        let mut bound = f64::INFINITY;
        for k in 0..self.m {
            if blocks_at_zero(k) {
                bound = 0.0;
            } else if alpha[k] > piv {
                bound = bound.min((self.xb[k].max(0.0) + widen) / alpha[k]);
            }
        }
        if bound.is_infinite() {
            return None;
        }
        let mut pick: Option<usize> = None;
        for k in 0..self.m {
            let eligible = blocks_at_zero(k) || (alpha[k] > piv && self.xb[k].max(0.0) / alpha[k] <= bound * (1.0 + 1e-12));
            if !eligible {
                continue;
            }
            pick = match pick {
                None => Some(k),
                Some(p) => {
                    let better = if bland {
                        self.var_order(self.basis[k]) < self.var_order(self.basis[p])
                    } else {
                        alpha[k].abs() > alpha[p].abs()
                    };
                    Some(if better { k } else { p })
                }
            };
        }
        let r = pick?;
        let theta = if blocks_at_zero(r) { 0.0 } else { (self.xb[r].max(0.0) / alpha[r]).max(0.0) };
        Some((r, theta))
    }

    fn var_order(&self, v: Var) -> usize {
        match v {
            Var::Structural(j) => j,
            Var::Artificial(i) => self.cols.len() + i,
        }
    }

    /// Pivots zero-level artificials out of the basis where a structural
    /// column can replace them. Rows where none can are linearly dependent.
    pub fn drive_out_artificials(&mut self) {
        let m = self.m;
        for r in 0..m {
            if !matches!(self.basis[r], Var::Artificial(_)) {
                continue;
            }
            let row = self.binv[r * m..(r + 1) * m].to_vec();
            let mut best: Option<(usize, f64)> = None;
            for j in 0..self.cols.len() {
                if self.in_basis[j] {
                    continue;
                }
                let v: f64 = self.cols[j].iter().map(|&(i, a)| row[i] * a).sum();
                if v.abs() > 1e-7 && best.is_none_or(|(_, b)| v.abs() > b.abs()) {
                    best = Some((j, v));
                }
            }
            if let Some((j, _)) = best {
                let alpha = self.ftran(&self.cols[j]);
                let theta = self.xb[r] / alpha[r];
                self.pivot(r, Var::Structural(j), &alpha, theta);
            }
        }
        self.refactor();
    }

    /// Maps a phase-two unbounded direction to structural coordinates.
    pub fn ray(&self, entering: usize, alpha: &[f64]) -> Vec<f64> {
        let mut d = vec![0.0; self.cols.len()];
        d[entering] = 1.0;
        for (k, v) in self.basis.iter().enumerate() {
            if let Var::Structural(j) = v {
                d[*j] = -alpha[k];
            }
        }
        d
    }
}
