//! The membership and Bell LPs written out in full.
//!
//! Only practical for small grids; used to cross-check the column
//! generation route with the general solver and [`crate::lp::verify_certificate`].
//!
//! Variable layout: the weight pᵤᵥ of pair k = u·|Gv| + v is variable k;
//! μ_k(a,b|x,y) follows at K + 4(k·n_xy + xy) + 2a + b. Equality rows are the
//! per-block normalizations, then (membership only) one reconstruction row
//! per cell, then Σ p = 1. Inequality rows come four per block: Alice upper,
//! Alice lower, Bob upper, Bob lower, all on outcome 0 (outcome 1 follows
//! from the normalization).

use super::{pair_duals, table_column_share, Instance, MembershipCertificate, SubensembleModel};
use crate::behavior::{Behavior, BellFunctional, SettingsSet};
use crate::error::{Error, Result};
use crate::grid::PolarizationGrid;
use crate::lp::{FeasibilityCertificate, LinearProgram, Multipliers};

#[derive(Debug, Clone)]
pub struct ExplicitLp {
    lp: LinearProgram,
    inst: Instance,
    reconstruction: bool,
}

impl ExplicitLp {
    fn build(inst: Instance, reconstruction: bool, objective: Option<&[f64]>) -> Result<Self> {
        let k_pairs = inst.nu * inst.nv;
        let n_xy = inst.n_xy();
        let mu = |k: usize, xy: usize, c: usize| k_pairs + 4 * (k * n_xy + xy) + c;
        let mut lp = LinearProgram::new(k_pairs * (1 + 4 * n_xy));
        let s = inst.slack;
        for k in 0..k_pairs {
            for xy in 0..n_xy {
                let mut row: Vec<(usize, f64)> = (0..4).map(|c| (mu(k, xy, c), 1.0)).collect();
                row.push((k, -1.0));
                lp.add_equality(row, 0.0)?;
            }
        }
        if reconstruction {
            for xy in 0..n_xy {
                for c in 0..4 {
                    lp.add_equality((0..k_pairs).map(|k| (mu(k, xy, c), 1.0)).collect(), inst.p[4 * xy + c])?;
                }
            }
        }
        lp.add_equality((0..k_pairs).map(|k| (k, 1.0)).collect(), 1.0)?;
        for k in 0..k_pairs {
            let (u, v) = (k / inst.nv, k % inst.nv);
            for xy in 0..n_xy {
                let (x, y) = (xy / inst.n_b, xy % inst.n_b);
                let (ma, mb) = (inst.ma[u * inst.n_a + x], inst.mb[v * inst.n_b + y]);
                let alice = [(mu(k, xy, 0), 1.0), (mu(k, xy, 1), 1.0)];
                let bob = [(mu(k, xy, 0), 1.0), (mu(k, xy, 2), 1.0)];
                for (cells, m) in [(alice, ma), (bob, mb)] {
                    let mut upper = cells.to_vec();
                    upper.push((k, -(m + s)));
                    lp.add_inequality(upper, 0.0)?;
                    let mut lower: Vec<(usize, f64)> = cells.iter().map(|&(j, a)| (j, -a)).collect();
                    lower.push((k, m - s));
                    lp.add_inequality(lower, 0.0)?;
                }
            }
        }
        if let Some(c) = objective {
            let mut obj = vec![0.0; lp.n_vars()];
            for k in 0..k_pairs {
                for (i, &ci) in c.iter().enumerate() {
                    obj[mu(k, i / 4, i % 4)] = ci;
                }
            }
            lp.set_objective(obj)?;
        }
        Ok(Self { lp, inst, reconstruction })
    }

    pub fn lp(&self) -> &LinearProgram {
        &self.lp
    }

    /// The LP point corresponding to a subensemble model.
    pub fn point_from_model(&self, model: &SubensembleModel) -> Result<Vec<f64>> {
        let inst = &self.inst;
        let k_pairs = inst.nu * inst.nv;
        let n_xy = inst.n_xy();
        if model.n_alice != inst.n_a || model.n_bob != inst.n_b {
            return Err(Error::Shape("model and LP disagree on setting counts".into()));
        }
        let mut x = vec![0.0; self.lp.n_vars()];
        for e in &model.entries {
            if e.u_id >= inst.nu || e.v_id >= inst.nv {
                return Err(Error::Shape(format!("grid ids ({}, {}) out of range", e.u_id, e.v_id)));
            }
            let k = e.u_id * inst.nv + e.v_id;
            x[k] += e.weight;
            for (xy, q) in e.conditional.iter().flatten().enumerate() {
                for (c, val) in [q[0][0], q[0][1], q[1][0], q[1][1]].into_iter().enumerate() {
                    x[k_pairs + 4 * (k * n_xy + xy) + c] += e.weight * val;
                }
            }
        }
        Ok(x)
    }

    /// Full Farkas multipliers for this LP from a compact membership certificate.
    pub fn expand_certificate(&self, cert: &MembershipCertificate) -> Result<FeasibilityCertificate> {
        if !self.reconstruction {
            return Err(Error::Shape("certificate expansion needs the membership LP".into()));
        }
        let inst = &self.inst.with_slack(cert.slack);
        let n_xy = inst.n_xy();
        if cert.lambda.len() != 4 * n_xy {
            return Err(Error::Shape(format!("certificate has {} multipliers, expected {}", cert.lambda.len(), 4 * n_xy)));
        }
        let k_pairs = inst.nu * inst.nv;
        let mut eq = vec![0.0; k_pairs * n_xy + 4 * n_xy + 1];
        let mut ineq = vec![0.0; 4 * k_pairs * n_xy];
        let mut need = vec![f64::NEG_INFINITY; 4 * n_xy];
        for k in 0..k_pairs {
            let duals = pair_duals(inst, &cert.lambda, cert.gamma, k / inst.nv, k % inst.nv);
            for (xy, d) in duals.iter().enumerate() {
                let block = k * n_xy + xy;
                eq[block] = d.eta;
                ineq[4 * block..4 * block + 4].copy_from_slice(&[d.za_plus, d.za_minus, d.zb_plus, d.zb_minus]);
                for c in 0..4 {
                    if !inst.support[xy][c] {
                        need[4 * xy + c] = need[4 * xy + c].max(-table_column_share(d, c));
                    }
                }
            }
        }
        let mut margin = -cert.gamma;
        for c in 0..4 * n_xy {
            let l = if inst.support[c / 4][c % 4] { cert.lambda[c] } else { need[c].max(0.0) };
            eq[k_pairs * n_xy + c] = l;
            margin -= l * inst.p[c];
        }
        eq[k_pairs * n_xy + 4 * n_xy] = cert.gamma;
        Ok(FeasibilityCertificate::infeasible(Multipliers { equalities: eq, inequalities: ineq }, margin))
    }
}

pub fn membership(b: &Behavior, s: &SettingsSet, gu: &PolarizationGrid, gv: &PolarizationGrid, slack: f64) -> Result<ExplicitLp> {
    ExplicitLp::build(Instance::new(Some(b), s, gu, gv, slack)?, true, None)
}

/// maximize Σ c·μ without reconstruction rows, at slack 0.
pub fn bell(f: &BellFunctional, s: &SettingsSet, gu: &PolarizationGrid, gv: &PolarizationGrid) -> Result<ExplicitLp> {
    if f.n_alice() != s.n_alice() || f.n_bob() != s.n_bob() {
        return Err(Error::Shape("functional and settings disagree on setting counts".into()));
    }
    ExplicitLp::build(Instance::new(None, s, gu, gv, 0.0)?, false, Some(f.coefficients()))
}
