//! Membership in the crypto-nonlocal set on a grid of definite polarizations,
//! and Bell optimization over it.
//!
//! A behavior P(a,b|x,y) is a member when it averages subensembles labelled
//! by grid pairs (u, v) whose Alice marginals follow Malus' law for u and Bob
//! marginals for v. Writing μ = p·q for each pair's weight p and conditional
//! table q makes the problem a linear feasibility question. It is solved by
//! column generation ([`master`]); infeasibility is reported through a
//! compact certificate (multipliers λ on the reconstruction rows plus γ on
//! the normalization row) that [`verify_membership_certificate`] expands and
//! audits block by block against the full LP.

pub mod explicit;
mod master;
mod tables;

use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::behavior::{Behavior, BellFunctional, SettingsSet};
use crate::error::{Error, Result};
use crate::grid::{slack_bound, PolarizationGrid};
use crate::lp::{FarkasAudit, RowKind, Tolerances, Verification};
use crate::polarization::PolarizationVector;
use tables::{LocalDual, LocalProblem};

pub use master::MasterStats;

/// Tolerances applied to models handed back to callers.
pub const MODEL_TOL: f64 = 1e-10;
pub const RECONSTRUCTION_TOL: f64 = 1e-8;

/// Problem data shared by the master, the certificate and the explicit LP.
#[derive(Debug, Clone)]
pub(crate) struct Instance {
    pub n_a: usize,
    pub n_b: usize,
    pub nu: usize,
    pub nv: usize,
    /// Malus value of outcome 0: `ma[u·n_a + x]`, `mb[v·n_b + y]`.
    pub ma: Vec<f64>,
    pub mb: Vec<f64>,
    pub p: Vec<f64>,
    /// Cells with P > 0, per setting pair.
    pub support: Vec<[bool; 4]>,
    pub slack: f64,
}

fn malus_table(settings: &[crate::behavior::Setting], grid: &PolarizationGrid) -> Result<Vec<f64>> {
    let effects: Vec<_> = settings.iter().map(|s| s.effects().map(|e| e[0])).collect::<Result<_>>()?;
    let mut out = Vec::with_capacity(grid.len() * settings.len());
    for u in grid.points() {
        let amps = u.amplitudes();
        for e in &effects {
            out.push(e.expectation(&amps).re.clamp(0.0, 1.0));
        }
    }
    Ok(out)
}

impl Instance {
    /// `b = None` gives full support and a zero table (Bell optimization).
    pub fn new(b: Option<&Behavior>, s: &SettingsSet, gu: &PolarizationGrid, gv: &PolarizationGrid, slack: f64) -> Result<Self> {
        let (n_a, n_b) = (s.n_alice(), s.n_bob());
        if let Some(b) = b {
            if b.n_alice() != n_a || b.n_bob() != n_b {
                return Err(Error::Shape(format!(
                    "behavior has {}×{} settings but the settings file has {n_a}×{n_b}",
                    b.n_alice(),
                    b.n_bob()
                )));
            }
        }
        if gu.is_empty() || gv.is_empty() {
            return Err(Error::Shape("empty grid".into()));
        }
        if !(slack >= 0.0) || !slack.is_finite() {
            return Err(Error::Range(format!("slack must be finite and ≥ 0, got {slack}")));
        }
        let p = b.map_or_else(|| vec![0.0; 4 * n_a * n_b], |b| b.table().to_vec());
        let support = p
            .chunks(4)
            .map(|c| if b.is_some() { [c[0] > 0.0, c[1] > 0.0, c[2] > 0.0, c[3] > 0.0] } else { [true; 4] })
            .collect();
        Ok(Self {
            n_a,
            n_b,
            nu: gu.len(),
            nv: gv.len(),
            ma: malus_table(&s.alice, gu)?,
            mb: malus_table(&s.bob, gv)?,
            p,
            support,
            slack,
        })
    }

    fn with_slack(&self, slack: f64) -> Self {
        Self { slack, ..self.clone() }
    }

    fn n_xy(&self) -> usize {
        self.n_a * self.n_b
    }

    fn local_problem(&self, lambda: &[f64], u: usize, v: usize, xy: usize) -> LocalProblem {
        let (x, y) = (xy / self.n_b, xy % self.n_b);
        LocalProblem {
            lambda: lambda[4 * xy..4 * xy + 4].try_into().unwrap(),
            support: self.support[xy],
            ma: self.ma[u * self.n_a + x],
            mb: self.mb[v * self.n_b + y],
            slack: self.slack,
        }
    }
}

// ---------------------------------------------------------------------------
// Subensemble models

/// One grid pair's weight and conditional table, nested `[x][y][a][b]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct SubensembleEntry {
    pub u_id: usize,
    pub v_id: usize,
    pub u: PolarizationVector,
    pub v: PolarizationVector,
    pub weight: f64,
    pub conditional: Vec<Vec<[[f64; 2]; 2]>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct SubensembleModel {
    pub n_alice: usize,
    pub n_bob: usize,
    pub entries: Vec<SubensembleEntry>,
}

/// Worst deviations of a model from the subensemble invariants.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct ModelCheck {
    pub ok: bool,
    /// |Σ weights − 1|, or the most negative weight.
    pub weight_error: f64,
    pub normalization_error: f64,
    pub signalling: f64,
    /// Largest Malus deviation beyond the allowed slack.
    pub malus_excess: f64,
}

impl SubensembleModel {
    fn shape_ok(&self) -> Result<()> {
        for e in &self.entries {
            if e.conditional.len() != self.n_alice || e.conditional.iter().any(|row| row.len() != self.n_bob) {
                return Err(Error::Shape(format!("conditional of pair ({}, {}) has the wrong shape", e.u_id, e.v_id)));
            }
        }
        Ok(())
    }

    /// Σ_uv P(u,v) P(a,b|x,y,u,v).
    pub fn average(&self) -> Result<Behavior> {
        self.shape_ok()?;
        let mut p = vec![0.0; 4 * self.n_alice * self.n_bob];
        for e in &self.entries {
            for (i, q) in flatten(&e.conditional).enumerate() {
                p[i] += e.weight * q;
            }
        }
        Behavior::new(self.n_alice, self.n_bob, p)
    }

    pub fn weights(&self) -> Vec<(PolarizationVector, PolarizationVector, f64)> {
        self.entries.iter().map(|e| (e.u, e.v, e.weight)).collect()
    }

    /// Checks the invariants, with Malus marginals allowed to deviate by `slack`.
    pub fn check(&self, s: &SettingsSet, slack: f64) -> Result<ModelCheck> {
        self.shape_ok()?;
        if s.n_alice() != self.n_alice || s.n_bob() != self.n_bob {
            return Err(Error::Shape("model and settings disagree on setting counts".into()));
        }
        let ea: Vec<_> = s.alice.iter().map(|x| x.effects().map(|e| e[0])).collect::<Result<_>>()?;
        let eb: Vec<_> = s.bob.iter().map(|y| y.effects().map(|e| e[0])).collect::<Result<_>>()?;
        let total: f64 = self.entries.iter().map(|e| e.weight).sum();
        let most_negative = self.entries.iter().map(|e| -e.weight).fold(0.0, f64::max);
        let mut c = ModelCheck {
            ok: false,
            weight_error: (total - 1.0).abs().max(most_negative),
            normalization_error: 0.0,
            signalling: 0.0,
            malus_excess: 0.0,
        };
        for e in &self.entries {
            let (ua, va) = (e.u.amplitudes(), e.v.amplitudes());
            let ma: Vec<f64> = ea.iter().map(|m| m.expectation(&ua).re).collect();
            let mb: Vec<f64> = eb.iter().map(|m| m.expectation(&va).re).collect();
            for x in 0..self.n_alice {
                for y in 0..self.n_bob {
                    let t = e.conditional[x][y];
                    let sum = t[0][0] + t[0][1] + t[1][0] + t[1][1];
                    let neg = t.iter().flatten().map(|v| -v).fold(0.0, f64::max);
                    c.normalization_error = c.normalization_error.max((sum - 1.0).abs()).max(neg);
                    let alpha = t[0][0] + t[0][1];
                    let beta = t[0][0] + t[1][0];
                    c.malus_excess = c.malus_excess.max((alpha - ma[x]).abs() - slack).max((beta - mb[y]).abs() - slack);
                    // marginals must not depend on the other party's setting
                    let t0 = e.conditional[x][0];
                    c.signalling = c.signalling.max((alpha - t0[0][0] - t0[0][1]).abs());
                    let s0 = e.conditional[0][y];
                    c.signalling = c.signalling.max((beta - s0[0][0] - s0[1][0]).abs());
                }
            }
        }
        c.ok = c.weight_error <= MODEL_TOL
            && c.normalization_error <= MODEL_TOL
            && c.signalling <= MODEL_TOL
            && c.malus_excess <= MODEL_TOL;
        Ok(c)
    }
}

fn flatten(nested: &[Vec<[[f64; 2]; 2]>]) -> impl Iterator<Item = f64> + '_ {
    nested.iter().flatten().flat_map(|t| [t[0][0], t[0][1], t[1][0], t[1][1]])
}

fn nest(n_a: usize, n_b: usize, tables: &[[f64; 4]]) -> Vec<Vec<[[f64; 2]; 2]>> {
    (0..n_a)
        .map(|x| {
            (0..n_b)
                .map(|y| {
                    let q = tables[x * n_b + y];
                    [[q[0], q[1]], [q[2], q[3]]]
                })
                .collect()
        })
        .collect()
}

/// Merges weighted columns into one entry per grid pair; weights renormalized.
fn model_from_columns(
    inst: &Instance,
    gu: &PolarizationGrid,
    gv: &PolarizationGrid,
    columns: &[((usize, usize), Vec<[f64; 4]>, f64)],
) -> SubensembleModel {
    let mut merged: Vec<((usize, usize), Vec<[f64; 4]>, f64)> = Vec::new();
    let mut order: Vec<&((usize, usize), Vec<[f64; 4]>, f64)> = columns.iter().filter(|c| c.2 > 0.0).collect();
    order.sort_by_key(|c| c.0);
    for (pair, tables, w) in order {
        match merged.last_mut() {
            Some(last) if last.0 == *pair => {
                for (acc, q) in last.1.iter_mut().zip(tables) {
                    for c in 0..4 {
                        acc[c] += w * q[c];
                    }
                }
                last.2 += w;
            }
            _ => merged.push((*pair, tables.iter().map(|q| q.map(|v| v * w)).collect(), *w)),
        }
    }
    let total: f64 = merged.iter().map(|m| m.2).sum();
    let entries = merged
        .into_iter()
        .map(|((u, v), acc, w)| {
            let tables: Vec<[f64; 4]> = acc.iter().map(|q| q.map(|c| c / w)).collect();
            SubensembleEntry {
                u_id: u,
                v_id: v,
                u: gu.points()[u],
                v: gv.points()[v],
                weight: w / total,
                conditional: nest(inst.n_a, inst.n_b, &tables),
            }
        })
        .collect();
    SubensembleModel { n_alice: inst.n_a, n_bob: inst.n_b, entries }
}

// ---------------------------------------------------------------------------
// Membership

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Slack {
    /// slack_bound(Gu) + slack_bound(Gv).
    Auto,
    Value(f64),
}

impl FromStr for Slack {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        if s.eq_ignore_ascii_case("auto") {
            return Ok(Slack::Auto);
        }
        match s.parse::<f64>() {
            Ok(v) if v >= 0.0 && v.is_finite() => Ok(Slack::Value(v)),
            _ => Err(Error::Range(format!("slack must be \"auto\" or a number ≥ 0, got {s:?}"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Verdict {
    Member,
    Refuted,
    Undecided,
}

/// Farkas multipliers for the membership LP in compact form. The local
/// multipliers of every (pair, setting pair) block are recomputed from
/// these by [`verify_membership_certificate`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct MembershipCertificate {
    pub slack: f64,
    /// Reconstruction-row multipliers, flat `[x][y][a][b]`; zero cells are ignored.
    pub lambda: Vec<f64>,
    /// Normalization-row multiplier.
    pub gamma: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MembershipOptions {
    pub tolerances: Tolerances,
    pub max_rounds: usize,
    /// Columns added per pricing round.
    pub per_round: usize,
}

impl Default for MembershipOptions {
    fn default() -> Self {
        Self { tolerances: Tolerances::default(), max_rounds: 20_000, per_round: 16 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct MembershipResult {
    pub verdict: Verdict,
    /// Slack of the decisive solve.
    pub slack: f64,
    pub auto_slack: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub model: Option<SubensembleModel>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub model_check: Option<ModelCheck>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub certificate: Option<MembershipCertificate>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub verification: Option<Verification>,
    pub stats: Vec<MasterStats>,
    pub note: String,
}

/// Decides membership of `b` on the grid pair (Gu, Gv).
///
/// Feasible at slack 0 gives `Member` with the grid model. Otherwise the
/// problem is re-solved at the requested slack: infeasibility there with a
/// slack at least the discretization bound gives `Refuted`; anything else is
/// `Undecided`, carrying a certificate whenever one was found.
pub fn membership_lp(b: &Behavior, s: &SettingsSet, gu: &PolarizationGrid, gv: &PolarizationGrid, slack: Slack) -> Result<MembershipResult> {
    membership_lp_with(b, s, gu, gv, slack, &MembershipOptions::default())
}

pub fn membership_lp_with(
    b: &Behavior,
    s: &SettingsSet,
    gu: &PolarizationGrid,
    gv: &PolarizationGrid,
    slack: Slack,
    opts: &MembershipOptions,
) -> Result<MembershipResult> {
    let auto_slack = slack_bound(gu) + slack_bound(gv);
    let target = match slack {
        Slack::Auto => auto_slack,
        Slack::Value(v) => v,
    };
    let exact = Instance::new(Some(b), s, gu, gv, 0.0)?;
    let mut result = MembershipResult {
        verdict: Verdict::Undecided,
        slack: 0.0,
        auto_slack,
        model: None,
        model_check: None,
        certificate: None,
        verification: None,
        stats: Vec::new(),
        note: String::new(),
    };

    let (outcome, stats) = run_master(&exact, opts);
    result.stats.push(stats);
    match outcome {
        master::MasterOutcome::Feasible { columns, weights } => {
            let cols: Vec<_> = columns.into_iter().zip(weights).map(|(c, w)| (c.pair, c.tables, w)).collect();
            let model = model_from_columns(&exact, gu, gv, &cols);
            let check = audit_model(&model, b, s, 0.0)?;
            result.model_check = Some(check);
            if check.ok {
                result.verdict = Verdict::Member;
                result.note = format!("grid model with {} subensembles", model.entries.len());
            } else {
                result.note = "grid model failed its audit".into();
            }
            result.model = Some(model);
            return Ok(result);
        }
        master::MasterOutcome::Undecided(note) => {
            result.note = note;
            return Ok(result);
        }
        master::MasterOutcome::Infeasible { y_cells, y_sum } => {
            if target == 0.0 {
                let cert = build_certificate(&exact, y_cells, y_sum);
                let ver = audit_certificate(&exact, &cert, opts.tolerances.verify);
                result.note = if auto_slack == 0.0 && ver.ok {
                    result.verdict = Verdict::Refuted;
                    "infeasible with zero discretization slack".into()
                } else {
                    "no exact grid model; slack 0 is below the discretization bound".into()
                };
                result.certificate = Some(cert);
                result.verification = Some(ver);
                return Ok(result);
            }
        }
    }

    let relaxed = exact.with_slack(target);
    result.slack = target;
    let (outcome, stats) = run_master(&relaxed, opts);
    result.stats.push(stats);
    match outcome {
        master::MasterOutcome::Feasible { .. } => {
            result.note = format!("no exact grid model, but feasible at slack {target:.6}; the continuum question is open");
        }
        master::MasterOutcome::Undecided(note) => result.note = note,
        master::MasterOutcome::Infeasible { y_cells, y_sum } => {
            let cert = build_certificate(&relaxed, y_cells, y_sum);
            let ver = audit_certificate(&relaxed, &cert, opts.tolerances.verify);
            if !ver.ok {
                result.note = format!("certificate audit failed (margin {:e})", ver.margin);
            } else if target >= auto_slack {
                result.verdict = Verdict::Refuted;
                result.note = format!("infeasible at slack {target:.6} ≥ discretization bound {auto_slack:.6}");
            } else {
                result.note = format!("infeasible at slack {target:.6}, below the discretization bound {auto_slack:.6}");
            }
            result.certificate = Some(cert);
            result.verification = Some(ver);
        }
    }
    Ok(result)
}

fn run_master(inst: &Instance, opts: &MembershipOptions) -> (master::MasterOutcome, MasterStats) {
    let kept = master::prune(inst);
    master::solve_master(inst, &kept, &opts.tolerances, opts.max_rounds, opts.per_round)
}

/// Re-averages `model` and checks it against `b` and the subensemble invariants.
pub fn audit_model(model: &SubensembleModel, b: &Behavior, s: &SettingsSet, slack: f64) -> Result<ModelCheck> {
    let mut check = model.check(s, slack)?;
    let avg = model.average()?;
    if avg.n_alice() != b.n_alice() || avg.n_bob() != b.n_bob() || avg.max_abs_diff(b) > RECONSTRUCTION_TOL {
        check.ok = false;
    }
    Ok(check)
}

/// Compact certificate from master duals: λ normalized to unit max norm and γ
/// the smallest value keeping every bounded pair's column combination ≥ 0.
fn build_certificate(inst: &Instance, mut lambda: Vec<f64>, y_sum: f64) -> MembershipCertificate {
    for (c, l) in lambda.iter_mut().enumerate() {
        if !inst.support[c / 4][c % 4] {
            *l = 0.0;
        }
    }
    let scale = lambda.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
    if scale > 0.0 {
        lambda.iter_mut().for_each(|v| *v /= scale);
    }
    let worst = (0..inst.nu)
        .into_par_iter()
        .map(|u| {
            let mut worst = f64::NEG_INFINITY;
            'pairs: for v in 0..inst.nv {
                let mut cost = 0.0;
                for xy in 0..inst.n_xy() {
                    let (x, y) = (xy / inst.n_b, xy % inst.n_b);
                    let w: [f64; 4] = lambda[4 * xy..4 * xy + 4].try_into().unwrap();
                    match inst.table_box(u, v, x, y).min_on_face(&w, &inst.support[xy]) {
                        Some((val, _)) => cost -= val,
                        None => continue 'pairs,
                    }
                }
                worst = worst.max(cost);
            }
            worst
        })
        .reduce(|| f64::NEG_INFINITY, f64::max);
    let lp_dot: f64 = lambda.iter().zip(&inst.p).map(|(l, p)| l * p).sum();
    let gamma = if worst.is_finite() {
        worst + 1e-12 * (1.0 + worst.abs())
    } else {
        // every pair has an empty face: any γ works
        let _ = y_sum;
        -lp_dot - 1.0
    };
    MembershipCertificate { slack: inst.slack, lambda, gamma }
}

/// Local multipliers of every setting-pair block of pair (u, v), chosen so
/// the pair's weight column has a non-negative combination.
fn pair_duals(inst: &Instance, lambda: &[f64], gamma: f64, u: usize, v: usize) -> Vec<LocalDual> {
    let zero = LocalDual { eta: 0.0, za_plus: 0.0, za_minus: 0.0, zb_plus: 0.0, zb_minus: 0.0 };
    let mut out = vec![zero; inst.n_xy()];
    let mut empty = Vec::new();
    let mut total = 0.0;
    for (xy, slot) in out.iter_mut().enumerate() {
        let lp = inst.local_problem(lambda, u, v, xy);
        match lp.descent_ray() {
            None => {
                let (val, d) = lp.minimize();
                total += val;
                *slot = d;
            }
            Some(ray) => empty.push((xy, lp, ray)),
        }
    }
    let last = empty.len().saturating_sub(1);
    for (i, (xy, lp, ray)) in empty.into_iter().enumerate() {
        let target = if i == last { gamma - total } else { 0.0 };
        let (val, d) = lp.push_below(ray, target);
        total += val;
        out[xy] = d;
    }
    out
}

/// a = 0 and b = 0 indicators per cell.
const A0: [f64; 4] = [1.0, 1.0, 0.0, 0.0];
const B0: [f64; 4] = [1.0, 0.0, 1.0, 0.0];

/// Coefficient of a pair's weight column in one block's rows, dotted with its multipliers.
fn weight_column_share(d: &LocalDual, ma: f64, mb: f64, s: f64) -> f64 {
    -d.eta - (ma + s) * d.za_plus + (ma - s) * d.za_minus - (mb + s) * d.zb_plus + (mb - s) * d.zb_minus
}

/// Column combination of μ for cell c in a block, excluding the λ term.
fn table_column_share(d: &LocalDual, c: usize) -> f64 {
    d.eta + (d.za_plus - d.za_minus) * A0[c] + (d.zb_plus - d.zb_minus) * B0[c]
}

/// Audits a compact certificate against the membership LP of `inst`.
/// Zero cells get the smallest multiplier keeping their columns
/// non-negative; the remaining violations are charged through the mass
/// bound Σ vars ≤ 1 + n_a·n_b.
fn audit_certificate(inst: &Instance, cert: &MembershipCertificate, tol: f64) -> Verification {
    let n_xy = inst.n_xy();
    if cert.lambda.len() != 4 * n_xy || !cert.gamma.is_finite() || cert.lambda.iter().any(|v| !v.is_finite()) {
        return Verification { ok: false, margin: f64::NEG_INFINITY, max_violation: f64::INFINITY };
    }
    let inst = &inst.with_slack(cert.slack);
    let parts: Vec<(FarkasAudit, Vec<f64>)> = (0..inst.nu)
        .into_par_iter()
        .map(|u| {
            let mut audit = FarkasAudit::new();
            let mut need = vec![f64::NEG_INFINITY; 4 * n_xy];
            for v in 0..inst.nv {
                let duals = pair_duals(inst, &cert.lambda, cert.gamma, u, v);
                let mut weight_w = cert.gamma;
                for (xy, d) in duals.iter().enumerate() {
                    let (x, y) = (xy / inst.n_b, xy % inst.n_b);
                    let (ma, mb) = (inst.ma[u * inst.n_a + x], inst.mb[v * inst.n_b + y]);
                    audit.add_row(RowKind::Equality, 0.0, d.eta);
                    for z in [d.za_plus, d.za_minus, d.zb_plus, d.zb_minus] {
                        audit.add_row(RowKind::Inequality, 0.0, z);
                    }
                    weight_w += weight_column_share(d, ma, mb, inst.slack);
                    for c in 0..4 {
                        let share = table_column_share(d, c);
                        if inst.support[xy][c] {
                            audit.add_column(share + cert.lambda[4 * xy + c], Some(0.0));
                        } else {
                            need[4 * xy + c] = need[4 * xy + c].max(-share);
                        }
                    }
                }
                audit.add_column(weight_w, Some(0.0));
            }
            (audit, need)
        })
        .collect();
    let mut audit = FarkasAudit::new();
    let mut need = vec![f64::NEG_INFINITY; 4 * n_xy];
    for (a, n) in &parts {
        audit.merge(a);
        for (acc, v) in need.iter_mut().zip(n) {
            *acc = acc.max(*v);
        }
    }
    for c in 0..4 * n_xy {
        if inst.support[c / 4][c % 4] {
            audit.add_row(RowKind::Equality, inst.p[c], cert.lambda[c]);
        } else if need[c].is_finite() {
            // every block's column for this cell is ≥ (multiplier − need) = 0
            audit.add_row(RowKind::Equality, 0.0, need[c]);
            audit.add_column(0.0, Some(0.0));
        }
    }
    audit.add_row(RowKind::Equality, 1.0, cert.gamma);
    audit.finish_with_mass_bound(1.0 + n_xy as f64, tol)
}

/// Independent check of a membership certificate from the problem data.
pub fn verify_membership_certificate(
    b: &Behavior,
    s: &SettingsSet,
    gu: &PolarizationGrid,
    gv: &PolarizationGrid,
    cert: &MembershipCertificate,
    tol: f64,
) -> Result<Verification> {
    let inst = Instance::new(Some(b), s, gu, gv, cert.slack)?;
    Ok(audit_certificate(&inst, cert, tol))
}

// ---------------------------------------------------------------------------
// Bell optimization

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct BellOptimum {
    pub value: f64,
    pub model: SubensembleModel,
    pub model_check: ModelCheck,
    pub pairs: usize,
}

/// Maximum of Σ c·P over behaviors with an exact model on (Gu, Gv).
///
/// Without reconstruction rows the LP decouples: its optimum is a point mass
/// on the best pair, whose tables each maximize one setting pair's
/// coefficients over its Malus polytope.
pub fn maximize_bell(f: &BellFunctional, s: &SettingsSet, gu: &PolarizationGrid, gv: &PolarizationGrid) -> Result<BellOptimum> {
    if f.n_alice() != s.n_alice() || f.n_bob() != s.n_bob() {
        return Err(Error::Shape("functional and settings disagree on setting counts".into()));
    }
    let inst = Instance::new(None, s, gu, gv, 0.0)?;
    let coeffs = f.coefficients();
    let best_of = |u: usize, v: usize| -> (f64, Vec<[f64; 4]>) {
        let mut total = 0.0;
        let mut tables = Vec::with_capacity(inst.n_xy());
        for xy in 0..inst.n_xy() {
            let (x, y) = (xy / inst.n_b, xy % inst.n_b);
            let w: [f64; 4] = coeffs[4 * xy..4 * xy + 4].try_into().unwrap();
            let (val, q) = inst.table_box(u, v, x, y).max(&w);
            total += val;
            tables.push(q);
        }
        (total, tables)
    };
    // ties go to the lowest (u, v) for reproducibility
    let (value, u, v) = (0..inst.nu)
        .into_par_iter()
        .map(|u| {
            (0..inst.nv).fold((f64::NEG_INFINITY, u, 0), |best, v| {
                let val = best_of(u, v).0;
                if val > best.0 {
                    (val, u, v)
                } else {
                    best
                }
            })
        })
        .reduce(
            || (f64::NEG_INFINITY, usize::MAX, usize::MAX),
            |a, b| if b.0 > a.0 || (b.0 == a.0 && (b.1, b.2) < (a.1, a.2)) { b } else { a },
        );
    let (_, tables) = best_of(u, v);
    let model = model_from_columns(&inst, gu, gv, &[((u, v), tables, 1.0)]);
    let model_check = model.check(s, 0.0)?;
    Ok(BellOptimum { value, model, model_check, pairs: inst.nu * inst.nv })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::behavior::quantum_behavior;
    use crate::grid::build_grid;
    use crate::state::DensityMatrix;

    fn six_on_equator() -> SettingsSet {
        let dirs: Vec<(f64, f64)> = (0..3).map(|k| (std::f64::consts::FRAC_PI_2, k as f64 * std::f64::consts::PI / 3.0)).collect();
        SettingsSet::from_bloch(&dirs, &dirs).unwrap()
    }

    #[test]
    fn product_state_on_grid_is_member() {
        let g = build_grid(32).unwrap();
        let (u0, v0) = (g.points()[5], g.points()[17]);
        let rho = DensityMatrix::product(&DensityMatrix::from_polarization(&u0), &DensityMatrix::from_polarization(&v0)).unwrap();
        let s = six_on_equator();
        let b = quantum_behavior(&rho, &s).unwrap();
        let r = membership_lp(&b, &s, &g, &g, Slack::Auto).unwrap();
        assert_eq!(r.verdict, Verdict::Member, "{}", r.note);
        let m = r.model.unwrap();
        assert!(m.average().unwrap().max_abs_diff(&b) < 1e-9);
    }

    #[test]
    fn signalling_behavior_is_refuted() {
        // Alice's marginal depends on Bob's setting; no subensemble mixture can do that.
        let s = SettingsSet::chsh_optimal();
        let p = vec![0.5, 0.0, 0.0, 0.5, 1.0, 0.0, 0.0, 0.0, 0.5, 0.0, 0.0, 0.5, 0.0, 0.0, 0.0, 1.0];
        let b = Behavior::new(2, 2, p).unwrap();
        let g = build_grid(40).unwrap();
        let r = membership_lp(&b, &s, &g, &g, Slack::Auto).unwrap();
        assert_eq!(r.verdict, Verdict::Refuted, "{}", r.note);
        let cert = r.certificate.unwrap();
        let ver = verify_membership_certificate(&b, &s, &g, &g, &cert, 1e-9).unwrap();
        assert!(ver.ok && ver.margin > 0.0);
        // tampering with λ breaks it
        let mut bad = cert.clone();
        bad.lambda.iter_mut().for_each(|v| *v = -*v);
        assert!(!verify_membership_certificate(&b, &s, &g, &g, &bad, 1e-9).unwrap().ok);
    }

    #[test]
    fn slack_from_str() {
        assert_eq!("auto".parse::<Slack>().unwrap(), Slack::Auto);
        assert_eq!("0.25".parse::<Slack>().unwrap(), Slack::Value(0.25));
        assert!("-1".parse::<Slack>().is_err());
    }

    #[test]
    fn chsh_reaches_four_with_pole_points() {
        let g = build_grid(16).unwrap();
        let opt = maximize_bell(&BellFunctional::chsh(), &SettingsSet::chsh_optimal(), &g, &g).unwrap();
        assert!((opt.value - 4.0).abs() < 1e-12);
        assert!(opt.model_check.ok);
    }
}
