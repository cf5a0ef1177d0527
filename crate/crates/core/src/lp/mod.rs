//! Linear programs with checkable answers.
//!
//! Problems are stated as maximize cᵀx subject to Ax = b, Gx ≤ h and
//! x_j ≥ l_j (or x_j free). Every status other than `Undecided` comes with a
//! [`FeasibilityCertificate`] that [`verify_certificate`] re-checks from the
//! problem data alone.

mod dump;
pub(crate) mod simplex;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use simplex::{Engine, PhaseEnd, SparseVec};

pub use dump::to_lp_format;

/// Centralized solver tolerances.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct Tolerances {
    pub pivot: f64,
    pub feasibility: f64,
    /// Reduced-cost threshold for choosing an entering column.
    pub optimality: f64,
    /// Relative duality gap accepted for an optimal certificate.
    pub gap: f64,
    /// Margin a certificate must clear in [`verify_certificate`].
    pub verify: f64,
    pub max_pivots: usize,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self { pivot: 1e-10, feasibility: 1e-9, optimality: 1e-9, gap: 1e-8, verify: 1e-9, max_pivots: 1_000_000 }
    }
}

impl Tolerances {
    pub fn strict() -> Self {
        Self { feasibility: 1e-10, optimality: 1e-10, gap: 1e-9, ..Self::default() }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Constraint {
    pub coeffs: Vec<(usize, f64)>,
    pub rhs: f64,
}

impl Constraint {
    fn dot(&self, x: &[f64]) -> f64 {
        self.coeffs.iter().map(|&(j, a)| a * x[j]).sum()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct LinearProgram {
    n_vars: usize,
    equalities: Vec<Constraint>,
    inequalities: Vec<Constraint>,
    /// `None` marks a free variable.
    lower: Vec<Option<f64>>,
    objective: Option<Vec<f64>>,
}

impl LinearProgram {
    /// `n_vars` variables, all with lower bound 0 and no objective.
    pub fn new(n_vars: usize) -> Self {
        Self { n_vars, equalities: Vec::new(), inequalities: Vec::new(), lower: vec![Some(0.0); n_vars], objective: None }
    }

    pub fn n_vars(&self) -> usize {
        self.n_vars
    }

    pub fn equalities(&self) -> &[Constraint] {
        &self.equalities
    }

    pub fn inequalities(&self) -> &[Constraint] {
        &self.inequalities
    }

    pub fn lower_bounds(&self) -> &[Option<f64>] {
        &self.lower
    }

    pub fn objective(&self) -> Option<&[f64]> {
        self.objective.as_deref()
    }

    fn check_row(&self, coeffs: &[(usize, f64)], rhs: f64) -> Result<()> {
        if !rhs.is_finite() {
            return Err(Error::Shape(format!("non-finite right-hand side {rhs}")));
        }
        for &(j, a) in coeffs {
            if j >= self.n_vars {
                return Err(Error::Shape(format!("variable index {j} out of range (nVars = {})", self.n_vars)));
            }
            if !a.is_finite() {
                return Err(Error::Shape(format!("non-finite coefficient on variable {j}")));
            }
        }
        Ok(())
    }

    /// Adds Σ aⱼxⱼ = rhs and returns the row index among equalities.
    pub fn add_equality(&mut self, coeffs: Vec<(usize, f64)>, rhs: f64) -> Result<usize> {
        self.check_row(&coeffs, rhs)?;
        self.equalities.push(Constraint { coeffs, rhs });
        Ok(self.equalities.len() - 1)
    }

    /// Adds Σ gⱼxⱼ ≤ rhs and returns the row index among inequalities.
    pub fn add_inequality(&mut self, coeffs: Vec<(usize, f64)>, rhs: f64) -> Result<usize> {
        self.check_row(&coeffs, rhs)?;
        self.inequalities.push(Constraint { coeffs, rhs });
        Ok(self.inequalities.len() - 1)
    }

    /// Σ aⱼxⱼ ≥ rhs, stored negated as a ≤ row.
    pub fn add_greater_equal(&mut self, coeffs: Vec<(usize, f64)>, rhs: f64) -> Result<usize> {
        self.add_inequality(coeffs.into_iter().map(|(j, a)| (j, -a)).collect(), -rhs)
    }

    pub fn set_lower(&mut self, j: usize, lower: Option<f64>) -> Result<()> {
        if j >= self.n_vars {
            return Err(Error::Shape(format!("variable index {j} out of range")));
        }
        if lower.is_some_and(|l| !l.is_finite()) {
            return Err(Error::Shape("lower bound must be finite; use None for free".into()));
        }
        self.lower[j] = lower;
        Ok(())
    }

    /// Objective to maximize.
    pub fn set_objective(&mut self, c: Vec<f64>) -> Result<()> {
        if c.len() != self.n_vars {
            return Err(Error::Shape(format!("objective has {} entries, expected {}", c.len(), self.n_vars)));
        }
        if c.iter().any(|v| !v.is_finite()) {
            return Err(Error::Shape("non-finite objective coefficient".into()));
        }
        self.objective = Some(c);
        Ok(())
    }

    pub fn objective_value(&self, x: &[f64]) -> f64 {
        self.objective.as_ref().map_or(0.0, |c| c.iter().zip(x).map(|(c, x)| c * x).sum())
    }

    /// Largest scaled violation of any constraint or bound at `x`.
    pub fn max_violation(&self, x: &[f64]) -> f64 {
        let mut worst: f64 = 0.0;
        for r in &self.equalities {
            worst = worst.max((r.dot(x) - r.rhs).abs() / (1.0 + r.rhs.abs()));
        }
        for r in &self.inequalities {
            worst = worst.max((r.dot(x) - r.rhs) / (1.0 + r.rhs.abs()));
        }
        for (xj, l) in x.iter().zip(&self.lower) {
            if let Some(l) = l {
                worst = worst.max((l - xj) / (1.0 + l.abs()));
            }
        }
        if x.iter().any(|v| !v.is_finite()) {
            return f64::INFINITY;
        }
        worst
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Status {
    Optimal,
    Feasible,
    Infeasible,
    Unbounded,
    Undecided,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CertificateKind {
    Feasible,
    Optimal,
    Infeasible,
    Unbounded,
}

/// Multipliers for the equality rows and the ≤ rows, in insertion order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Multipliers {
    pub equalities: Vec<f64>,
    pub inequalities: Vec<f64>,
}

impl Multipliers {
    fn max_abs(&self) -> f64 {
        self.equalities.iter().chain(&self.inequalities).fold(0.0, |m, v| m.max(v.abs()))
    }

    fn scaled(mut self, s: f64) -> Self {
        self.equalities.iter_mut().chain(self.inequalities.iter_mut()).for_each(|v| *v *= s);
        self
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct FeasibilityCertificate {
    pub kind: CertificateKind,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub primal: Option<Vec<f64>>,
    /// Optimal dual multipliers (kind = optimal).
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub dual: Option<Multipliers>,
    /// Farkas multipliers (kind = infeasible).
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub dual_ray: Option<Multipliers>,
    /// Improving direction (kind = unbounded).
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub primal_ray: Option<Vec<f64>>,
    /// Max constraint violation of the primal point, or the Farkas margin.
    pub residual: f64,
}

impl FeasibilityCertificate {
    pub fn feasible(lp: &LinearProgram, x: Vec<f64>) -> Self {
        let residual = lp.max_violation(&x);
        Self { kind: CertificateKind::Feasible, primal: Some(x), dual: None, dual_ray: None, primal_ray: None, residual }
    }

    pub fn infeasible(ray: Multipliers, margin: f64) -> Self {
        Self {
            kind: CertificateKind::Infeasible,
            primal: None,
            dual: None,
            dual_ray: Some(ray),
            primal_ray: None,
            residual: margin,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct SolveResult {
    pub status: Status,
    pub certificate: Option<FeasibilityCertificate>,
    pub objective: Option<f64>,
    pub pivots: usize,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub note: Option<String>,
}

impl SolveResult {
    fn undecided(pivots: usize, note: impl Into<String>) -> Self {
        Self { status: Status::Undecided, certificate: None, objective: None, pivots, note: Some(note.into()) }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct Verification {
    pub ok: bool,
    /// Positive when the certificate holds with room to spare.
    pub margin: f64,
    pub max_violation: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RowKind {
    Equality,
    Inequality,
}

/// Accumulates a Farkas check Σ w_j l_j − (bᵀy + hᵀz) > 0 with w = Aᵀy + Gᵀz,
/// w ≥ 0 on bounded columns, w = 0 on free columns and z ≥ 0. Rows and
/// columns can be fed block by block, so problems too large to materialize
/// can still be audited.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FarkasAudit {
    rhs_sum: f64,
    wl_sum: f64,
    worst_column: f64,
    worst_row: f64,
    max_multiplier: f64,
    pub rows: usize,
    pub columns: usize,
}

impl Default for FarkasAudit {
    fn default() -> Self {
        Self::new()
    }
}

impl FarkasAudit {
    pub fn new() -> Self {
        Self { rhs_sum: 0.0, wl_sum: 0.0, worst_column: 0.0, worst_row: 0.0, max_multiplier: 0.0, rows: 0, columns: 0 }
    }

    pub fn add_row(&mut self, kind: RowKind, rhs: f64, multiplier: f64) {
        self.rhs_sum += rhs * multiplier;
        self.max_multiplier = self.max_multiplier.max(multiplier.abs());
        if kind == RowKind::Inequality {
            self.worst_row = self.worst_row.max(-multiplier);
        }
        self.rows += 1;
    }

    /// `w` is the column's combination Σᵢ aᵢⱼ·multiplierᵢ.
    pub fn add_column(&mut self, w: f64, lower: Option<f64>) {
        match lower {
            Some(l) => {
                self.worst_column = self.worst_column.max(-w);
                self.wl_sum += w * l;
            }
            None => self.worst_column = self.worst_column.max(w.abs()),
        }
        self.columns += 1;
    }

    pub fn merge(&mut self, other: &FarkasAudit) {
        self.rhs_sum += other.rhs_sum;
        self.wl_sum += other.wl_sum;
        self.worst_column = self.worst_column.max(other.worst_column);
        self.worst_row = self.worst_row.max(other.worst_row);
        self.max_multiplier = self.max_multiplier.max(other.max_multiplier);
        self.rows += other.rows;
        self.columns += other.columns;
    }

    /// Margin and violation are reported relative to the largest multiplier.
    pub fn finish(&self, tol: f64) -> Verification {
        if !(self.max_multiplier > 0.0) || !self.rhs_sum.is_finite() || !self.wl_sum.is_finite() {
            return REJECT;
        }
        let margin = (self.wl_sum - self.rhs_sum) / self.max_multiplier;
        let violation = self.worst_column.max(self.worst_row) / self.max_multiplier;
        Verification { ok: margin > tol && violation <= tol, margin, max_violation: violation }
    }

    /// Absolute check for problems whose variables are all bounded below by
    /// zero and whose feasible points satisfy Σⱼ xⱼ ≤ `mass`. A column
    /// combination wⱼ ≥ −ε then costs at most ε·mass, which is charged
    /// against the margin instead of being tolerated.
    pub fn finish_with_mass_bound(&self, mass: f64, tol: f64) -> Verification {
        if !self.rhs_sum.is_finite() || !self.wl_sum.is_finite() || self.worst_row > 0.0 {
            return Verification { ok: false, margin: f64::NEG_INFINITY, max_violation: self.worst_row.max(self.worst_column) };
        }
        let charge = self.worst_column.max(0.0) * mass;
        let margin = self.wl_sum - self.rhs_sum - charge;
        Verification { ok: margin > tol, margin, max_violation: self.worst_column }
    }
}

fn column_combination(lp: &LinearProgram, y: &Multipliers) -> Vec<f64> {
    let mut w = vec![0.0; lp.n_vars];
    for (r, &yi) in lp.equalities.iter().zip(&y.equalities) {
        for &(j, a) in &r.coeffs {
            w[j] += a * yi;
        }
    }
    for (r, &zi) in lp.inequalities.iter().zip(&y.inequalities) {
        for &(j, a) in &r.coeffs {
            w[j] += a * zi;
        }
    }
    w
}

fn multipliers_match(lp: &LinearProgram, y: &Multipliers) -> bool {
    y.equalities.len() == lp.equalities.len()
        && y.inequalities.len() == lp.inequalities.len()
        && y.equalities.iter().chain(&y.inequalities).all(|v| v.is_finite())
}

const REJECT: Verification = Verification { ok: false, margin: f64::NEG_INFINITY, max_violation: f64::INFINITY };

/// Re-checks a certificate against the problem data alone.
pub fn verify_certificate(lp: &LinearProgram, cert: &FeasibilityCertificate) -> Verification {
    verify_with(lp, cert, &Tolerances::default())
}

pub fn verify_with(lp: &LinearProgram, cert: &FeasibilityCertificate, tol: &Tolerances) -> Verification {
    let t = tol.verify;
    match cert.kind {
        CertificateKind::Feasible => {
            let Some(x) = cert.primal.as_ref().filter(|x| x.len() == lp.n_vars) else { return REJECT };
            let v = lp.max_violation(x);
            Verification { ok: v <= t, margin: t - v, max_violation: v }
        }
        CertificateKind::Infeasible => {
            let Some(y) = cert.dual_ray.as_ref().filter(|y| multipliers_match(lp, y)) else { return REJECT };
            let mut audit = FarkasAudit::new();
            for (r, &yi) in lp.equalities.iter().zip(&y.equalities) {
                audit.add_row(RowKind::Equality, r.rhs, yi);
            }
            for (r, &zi) in lp.inequalities.iter().zip(&y.inequalities) {
                audit.add_row(RowKind::Inequality, r.rhs, zi);
            }
            for (w, l) in column_combination(lp, y).into_iter().zip(&lp.lower) {
                audit.add_column(w, *l);
            }
            audit.finish(t)
        }
        CertificateKind::Optimal => {
            let (Some(x), Some(y), Some(c)) = (cert.primal.as_ref(), cert.dual.as_ref(), lp.objective.as_ref()) else {
                return REJECT;
            };
            if x.len() != lp.n_vars || !multipliers_match(lp, y) {
                return REJECT;
            }
            let primal_violation = lp.max_violation(x);
            // r = c − Aᵀy − Gᵀz must be ≤ 0 on bounded and 0 on free columns.
            let w = column_combination(lp, y);
            let scale = 1.0 + y.max_abs() + c.iter().fold(0.0f64, |m, v| m.max(v.abs()));
            let mut dual_violation: f64 = y.inequalities.iter().fold(0.0, |m, &z| m.max(-z));
            let mut bound_term = 0.0;
            for ((cj, wj), l) in c.iter().zip(&w).zip(&lp.lower) {
                let r = cj - wj;
                match l {
                    Some(l) => {
                        dual_violation = dual_violation.max(r);
                        bound_term += r * l;
                    }
                    None => dual_violation = dual_violation.max(r.abs()),
                }
            }
            dual_violation /= scale;
            let dual_obj: f64 = lp.equalities.iter().zip(&y.equalities).map(|(r, v)| r.rhs * v).sum::<f64>()
                + lp.inequalities.iter().zip(&y.inequalities).map(|(r, v)| r.rhs * v).sum::<f64>()
                + bound_term;
            let primal_obj = lp.objective_value(x);
            let allowed_gap = tol.gap * (1.0 + primal_obj.abs());
            let gap = (dual_obj - primal_obj).abs();
            let worst = primal_violation.max(dual_violation);
            Verification {
                ok: worst <= t && gap <= allowed_gap,
                margin: (t - worst).min(allowed_gap - gap),
                max_violation: worst,
            }
        }
        CertificateKind::Unbounded => {
            let (Some(x), Some(d), Some(c)) = (cert.primal.as_ref(), cert.primal_ray.as_ref(), lp.objective.as_ref()) else {
                return REJECT;
            };
            if x.len() != lp.n_vars || d.len() != lp.n_vars {
                return REJECT;
            }
            let norm = d.iter().fold(0.0f64, |m, v| m.max(v.abs()));
            if !(norm > 0.0) || !norm.is_finite() {
                return REJECT;
            }
            let mut worst = lp.max_violation(x);
            for r in &lp.equalities {
                worst = worst.max(r.dot(d).abs() / norm);
            }
            for r in &lp.inequalities {
                worst = worst.max(r.dot(d) / norm);
            }
            for (dj, l) in d.iter().zip(&lp.lower) {
                if l.is_some() {
                    worst = worst.max(-dj / norm);
                }
            }
            let gain = c.iter().zip(d).map(|(c, d)| c * d).sum::<f64>() / norm;
            Verification { ok: worst <= t && gain > t, margin: gain.min(t - worst), max_violation: worst }
        }
    }
}

/// Map from original variables and rows onto the standard form.
struct StandardMap {
    /// Standard column(s) of each original variable: (plus, minus for free).
    var_cols: Vec<(usize, Option<usize>)>,
    /// Row sign flips applied so that the right-hand side is non-negative.
    sigma: Vec<f64>,
    n_std: usize,
}

fn to_standard(lp: &LinearProgram) -> (StandardMap, Vec<SparseVec>, Vec<f64>, Vec<f64>) {
    let m_eq = lp.equalities.len();
    let m = m_eq + lp.inequalities.len();
    let mut var_cols = Vec::with_capacity(lp.n_vars);
    let mut n_std = 0;
    for l in &lp.lower {
        match l {
            Some(_) => {
                var_cols.push((n_std, None));
                n_std += 1;
            }
            None => {
                var_cols.push((n_std, Some(n_std + 1)));
                n_std += 2;
            }
        }
    }
    let slack_base = n_std;
    n_std += lp.inequalities.len();

    let rows = lp.equalities.iter().chain(&lp.inequalities);
    let mut rhs = Vec::with_capacity(m);
    let mut sigma = Vec::with_capacity(m);
    for r in rows.clone() {
        let shifted = r.rhs - r.coeffs.iter().map(|&(j, a)| a * lp.lower[j].unwrap_or(0.0)).sum::<f64>();
        let s = if shifted < 0.0 { -1.0 } else { 1.0 };
        sigma.push(s);
        rhs.push(s * shifted);
    }
    let mut cols: Vec<SparseVec> = vec![Vec::new(); n_std];
    for (i, r) in rows.enumerate() {
        for &(j, a) in &r.coeffs {
            let (p, minus) = var_cols[j];
            cols[p].push((i, sigma[i] * a));
            if let Some(q) = minus {
                cols[q].push((i, -sigma[i] * a));
            }
        }
    }
    for k in 0..lp.inequalities.len() {
        let i = m_eq + k;
        cols[slack_base + k].push((i, sigma[i]));
    }
    // Merge repeated (row, variable) entries.
    for col in cols.iter_mut() {
        col.sort_by_key(|e| e.0);
        col.dedup_by(|b, a| {
            if a.0 == b.0 {
                a.1 += b.1;
                true
            } else {
                false
            }
        });
        col.retain(|e| e.1 != 0.0);
    }
    let mut cost = vec![0.0; n_std];
    if let Some(c) = &lp.objective {
        for (j, &cj) in c.iter().enumerate() {
            let (p, minus) = var_cols[j];
            cost[p] = -cj;
            if let Some(q) = minus {
                cost[q] = cj;
            }
        }
    }
    (StandardMap { var_cols, sigma, n_std }, cols, rhs, cost)
}

impl StandardMap {
    fn primal(&self, lp: &LinearProgram, xs: &[f64]) -> Vec<f64> {
        self.var_cols
            .iter()
            .zip(&lp.lower)
            .map(|(&(p, minus), l)| match minus {
                Some(q) => xs[p] - xs[q],
                None => l.unwrap_or(0.0) + xs[p],
            })
            .collect()
    }

    fn ray(&self, ds: &[f64]) -> Vec<f64> {
        self.var_cols.iter().map(|&(p, minus)| ds[p] - minus.map_or(0.0, |q| ds[q])).collect()
    }

    /// y_orig = −σ·π for both optimal duals and phase-one Farkas rays.
    fn multipliers(&self, lp: &LinearProgram, pi: &[f64]) -> Multipliers {
        let m_eq = lp.equalities.len();
        let y: Vec<f64> = pi.iter().zip(&self.sigma).map(|(p, s)| -s * p).collect();
        Multipliers { equalities: y[..m_eq].to_vec(), inequalities: y[m_eq..].to_vec() }
    }
}

pub fn solve(lp: &LinearProgram) -> Result<SolveResult> {
    solve_with(lp, &Tolerances::default())
}

pub fn solve_with(lp: &LinearProgram, tol: &Tolerances) -> Result<SolveResult> {
    if lp.lower.len() != lp.n_vars {
        return Err(Error::Shape("bound vector length differs from nVars".into()));
    }
    for r in lp.equalities.iter().chain(&lp.inequalities) {
        lp.check_row(&r.coeffs, r.rhs)?;
    }
    let (map, cols, rhs, cost) = to_standard(lp);
    debug_assert_eq!(cols.len(), map.n_std);
    let b_norm = rhs.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let mut engine = Engine::new(rhs, *tol);
    for (col, c) in cols.into_iter().zip(cost) {
        engine.add_column(col, c);
    }
    engine.crash_unit_columns();

    match engine.run(true) {
        PhaseEnd::Optimal => {}
        PhaseEnd::PivotLimit => return Ok(SolveResult::undecided(engine.pivots, "pivot limit reached in phase one")),
        PhaseEnd::Singular => return Ok(SolveResult::undecided(engine.pivots, "basis became singular")),
        PhaseEnd::Unbounded { .. } => unreachable!("phase one is bounded below by zero"),
    }
    if engine.infeasibility() > tol.feasibility * (1.0 + b_norm) {
        let ray = map.multipliers(lp, &engine.phase_one_duals());
        let s = ray.max_abs();
        let ray = if s > 0.0 { ray.scaled(1.0 / s) } else { ray };
        let mut cert = FeasibilityCertificate::infeasible(ray, 0.0);
        let check = verify_with(lp, &cert, tol);
        cert.residual = check.margin;
        if !check.ok {
            return Ok(SolveResult::undecided(
                engine.pivots,
                format!("phase one ended infeasible but the Farkas ray did not verify (margin {:e})", check.margin),
            ));
        }
        return Ok(SolveResult {
            status: Status::Infeasible,
            certificate: Some(cert),
            objective: None,
            pivots: engine.pivots,
            note: None,
        });
    }
    engine.drive_out_artificials();

    if lp.objective.is_none() {
        let x = map.primal(lp, &engine.primal());
        let cert = FeasibilityCertificate::feasible(lp, x);
        if !verify_with(lp, &cert, tol).ok {
            return Ok(SolveResult::undecided(engine.pivots, format!("primal residual {:e} too large", cert.residual)));
        }
        return Ok(SolveResult { status: Status::Feasible, certificate: Some(cert), objective: None, pivots: engine.pivots, note: None });
    }

    match engine.run(false) {
        PhaseEnd::Optimal => {
            let x = map.primal(lp, &engine.primal());
            let dual = map.multipliers(lp, &engine.phase_two_duals());
            let objective = lp.objective_value(&x);
            let mut cert = FeasibilityCertificate::feasible(lp, x);
            cert.kind = CertificateKind::Optimal;
            cert.dual = Some(dual);
            if !verify_with(lp, &cert, tol).ok {
                return Ok(SolveResult::undecided(engine.pivots, "optimality certificate did not verify"));
            }
            Ok(SolveResult { status: Status::Optimal, certificate: Some(cert), objective: Some(objective), pivots: engine.pivots, note: None })
        }
        PhaseEnd::Unbounded { entering, alpha } => {
            let x = map.primal(lp, &engine.primal());
            let d = map.ray(&engine.ray(entering, &alpha));
            let mut cert = FeasibilityCertificate::feasible(lp, x);
            cert.kind = CertificateKind::Unbounded;
            cert.primal_ray = Some(d);
            if !verify_with(lp, &cert, tol).ok {
                return Ok(SolveResult::undecided(engine.pivots, "unbounded ray did not verify"));
            }
            Ok(SolveResult { status: Status::Unbounded, certificate: Some(cert), objective: None, pivots: engine.pivots, note: None })
        }
        PhaseEnd::PivotLimit => Ok(SolveResult::undecided(engine.pivots, "pivot limit reached in phase two")),
        PhaseEnd::Singular => Ok(SolveResult::undecided(engine.pivots, "basis became singular")),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn maximize_single_variable() {
        let mut lp = LinearProgram::new(1);
        lp.add_inequality(vec![(0, 1.0)], 1.0).unwrap();
        lp.set_objective(vec![1.0]).unwrap();
        let r = solve(&lp).unwrap();
        assert_eq!(r.status, Status::Optimal);
        assert!((r.objective.unwrap() - 1.0).abs() < 1e-12);
        assert!(verify_certificate(&lp, r.certificate.as_ref().unwrap()).ok);
    }

    #[test]
    fn negative_upper_bound_is_infeasible() {
        let mut lp = LinearProgram::new(1);
        lp.add_inequality(vec![(0, 1.0)], -1.0).unwrap();
        let r = solve(&lp).unwrap();
        assert_eq!(r.status, Status::Infeasible);
        let cert = r.certificate.unwrap();
        assert!(verify_certificate(&lp, &cert).ok);
        let mut flipped = cert.clone();
        let ray = flipped.dual_ray.as_mut().unwrap();
        ray.inequalities.iter_mut().for_each(|v| *v = -*v);
        assert!(!verify_certificate(&lp, &flipped).ok);
    }

    #[test]
    fn transportation_toy() {
        // x_ij: supply i to demand j, cost identity (diagonal free, off-diagonal 1).
        let mut lp = LinearProgram::new(4);
        lp.add_equality(vec![(0, 1.0), (1, 1.0)], 1.0).unwrap();
        lp.add_equality(vec![(2, 1.0), (3, 1.0)], 1.0).unwrap();
        lp.add_equality(vec![(0, 1.0), (2, 1.0)], 1.0).unwrap();
        lp.add_equality(vec![(1, 1.0), (3, 1.0)], 1.0).unwrap();
        // maximize −cost with cost 0 on the matching x00, x11 and 1 elsewhere.
        lp.set_objective(vec![0.0, -1.0, -1.0, 0.0]).unwrap();
        let r = solve(&lp).unwrap();
        assert_eq!(r.status, Status::Optimal);
        assert!(r.objective.unwrap().abs() < 1e-12);
        let x = r.certificate.as_ref().unwrap().primal.clone().unwrap();
        assert!((x[0] - 1.0).abs() < 1e-12 && (x[3] - 1.0).abs() < 1e-12);
        assert!(verify_certificate(&lp, r.certificate.as_ref().unwrap()).ok);
    }

    #[test]
    fn free_and_shifted_variables() {
        // maximize −|x − 3| style: x free, y ≥ 2, x + y = 1, maximize x
        let mut lp = LinearProgram::new(2);
        lp.set_lower(0, None).unwrap();
        lp.set_lower(1, Some(2.0)).unwrap();
        lp.add_equality(vec![(0, 1.0), (1, 1.0)], 1.0).unwrap();
        lp.set_objective(vec![1.0, 0.0]).unwrap();
        let r = solve(&lp).unwrap();
        assert_eq!(r.status, Status::Optimal);
        assert!((r.objective.unwrap() + 1.0).abs() < 1e-12);
        assert!(verify_certificate(&lp, r.certificate.as_ref().unwrap()).ok);
    }

    #[test]
    fn unbounded_with_ray() {
        let mut lp = LinearProgram::new(2);
        lp.add_inequality(vec![(0, 1.0), (1, -1.0)], 1.0).unwrap();
        lp.set_objective(vec![1.0, 0.0]).unwrap();
        let r = solve(&lp).unwrap();
        assert_eq!(r.status, Status::Unbounded);
        assert!(verify_certificate(&lp, r.certificate.as_ref().unwrap()).ok);
    }

    #[test]
    fn farkas_margin_tracks_rhs_shift() {
        // x ≥ 0, x ≤ −1: the normalized ray z = 1 has margin 1; shifting h by 1e-3 moves it by 1e-3.
        let mut lp = LinearProgram::new(1);
        lp.add_inequality(vec![(0, 1.0)], -1.0).unwrap();
        let cert = solve(&lp).unwrap().certificate.unwrap();
        let m0 = verify_certificate(&lp, &cert).margin;
        let mut shifted = LinearProgram::new(1);
        shifted.add_inequality(vec![(0, 1.0)], -1.0 + 1e-3).unwrap();
        let m1 = verify_certificate(&shifted, &cert).margin;
        assert!((m0 - m1 - 1e-3).abs() < 1e-12, "{m0} {m1}");
    }

    #[test]
    fn redundant_equalities() {
        let mut lp = LinearProgram::new(2);
        lp.add_equality(vec![(0, 1.0), (1, 1.0)], 1.0).unwrap();
        lp.add_equality(vec![(0, 2.0), (1, 2.0)], 2.0).unwrap();
        lp.set_objective(vec![1.0, 2.0]).unwrap();
        let r = solve(&lp).unwrap();
        assert_eq!(r.status, Status::Optimal);
        assert!((r.objective.unwrap() - 2.0).abs() < 1e-12);
        assert!(verify_certificate(&lp, r.certificate.as_ref().unwrap()).ok);
    }

    #[test]
    fn bad_index_rejected() {
        let mut lp = LinearProgram::new(1);
        assert!(lp.add_equality(vec![(3, 1.0)], 0.0).is_err());
        assert!(lp.set_objective(vec![1.0, 2.0]).is_err());
    }
}
