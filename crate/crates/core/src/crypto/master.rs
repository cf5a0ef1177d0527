//! Column generation for the membership LP.
//!
//! The master problem keeps one variable per (pair, table choice) column:
//! Σ λ·q = P on the behavior's support cells and Σ λ = 1. Its phase-one
//! duals price new columns; when no pair offers a column of negative reduced
//! cost, the duals are a Farkas ray for the full problem.

use rayon::prelude::*;

use super::tables::TableBox;
use super::Instance;
use crate::lp::simplex::{Engine, PhaseEnd};
use crate::lp::Tolerances;

pub(crate) struct Column {
    pub pair: (usize, usize),
    pub tables: Vec<[f64; 4]>,
}

pub(crate) enum MasterOutcome {
    Feasible { columns: Vec<Column>, weights: Vec<f64> },
    /// y on every cell (0 off the support) and on the normalization row.
    Infeasible { y_cells: Vec<f64>, y_sum: f64 },
    Undecided(String),
}

#[derive(Debug, Clone, Copy, Default, PartialEq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct MasterStats {
    pub pairs_total: usize,
    pub pairs_kept: usize,
    pub rounds: usize,
    pub columns: usize,
    pub pivots: usize,
}

/// Pairs whose slack boxes admit a table vanishing off the support, for every setting pair.
pub(crate) fn prune(inst: &Instance) -> Vec<(usize, usize)> {
    let constrained: Vec<usize> = (0..inst.n_a * inst.n_b).filter(|&xy| inst.support[xy].iter().any(|s| !s)).collect();
    (0..inst.nu)
        .into_par_iter()
        .flat_map_iter(|u| {
            let constrained = &constrained;
            (0..inst.nv).filter_map(move |v| {
                let ok = constrained.iter().all(|&xy| {
                    let (x, y) = (xy / inst.n_b, xy % inst.n_b);
                    inst.table_box(u, v, x, y).min_on_face(&[0.0; 4], &inst.support[xy]).is_some()
                });
                ok.then_some((u, v))
            })
        })
        .collect()
}

/// Best column for one pair under cell prices `y`: Σ_xy min_q y_xy·q.
fn price_pair(inst: &Instance, y_cells: &[f64], u: usize, v: usize) -> Option<(f64, Vec<[f64; 4]>)> {
    let mut total = 0.0;
    let mut tables = Vec::with_capacity(inst.n_a * inst.n_b);
    for x in 0..inst.n_a {
        for y in 0..inst.n_b {
            let xy = x * inst.n_b + y;
            let w: [f64; 4] = y_cells[4 * xy..4 * xy + 4].try_into().unwrap();
            let (v, q) = inst.table_box(u, v, x, y).min_on_face(&w, &inst.support[xy])?;
            total += v;
            tables.push(q);
        }
    }
    Some((total, tables))
}

pub(crate) fn solve_master(
    inst: &Instance,
    kept: &[(usize, usize)],
    tol: &Tolerances,
    max_rounds: usize,
    per_round: usize,
) -> (MasterOutcome, MasterStats) {
    let cells = inst.n_a * inst.n_b * 4;
    let mut row_of = vec![usize::MAX; cells];
    let mut rhs = Vec::new();
    for c in 0..cells {
        if inst.support[c / 4][c % 4] {
            row_of[c] = rhs.len();
            rhs.push(inst.p[c]);
        }
    }
    let sum_row = rhs.len();
    rhs.push(1.0);
    let mut stats = MasterStats { pairs_total: inst.nu * inst.nv, pairs_kept: kept.len(), ..Default::default() };
    let mut engine = Engine::new(rhs, *tol);
    let mut columns: Vec<Column> = Vec::new();

    for round in 0..max_rounds {
        stats.rounds = round + 1;
        match engine.run(true) {
            PhaseEnd::Optimal => {}
            PhaseEnd::PivotLimit => {
                stats.pivots = engine.pivots;
                return (MasterOutcome::Undecided("pivot limit reached".into()), stats);
            }
            PhaseEnd::Singular => {
                stats.pivots = engine.pivots;
                return (MasterOutcome::Undecided("master basis became singular".into()), stats);
            }
            PhaseEnd::Unbounded { .. } => unreachable!("phase one is bounded"),
        }
        stats.pivots = engine.pivots;
        if engine.infeasibility() <= tol.feasibility * 2.0 {
            let weights = engine.primal();
            stats.columns = columns.len();
            return (MasterOutcome::Feasible { columns, weights }, stats);
        }
        let pi = engine.phase_one_duals();
        let mut y_cells = vec![0.0; cells];
        for c in 0..cells {
            if row_of[c] != usize::MAX {
                y_cells[c] = -pi[row_of[c]];
            }
        }
        let y_sum = -pi[sum_row];

        let mut priced: Vec<(f64, usize, Vec<[f64; 4]>)> = kept
            .par_iter()
            .enumerate()
            .filter_map(|(k, &(u, v))| {
                let (val, tables) = price_pair(inst, &y_cells, u, v)?;
                Some((val + y_sum, k, tables))
            })
            .collect();
        // infeasibility + min reduced cost is a Lagrangian lower bound on the
        // full phase-one optimum; once it is clearly positive the duals
        // already prove infeasibility and the degenerate tail can be skipped.
        let min_reduced = priced.iter().map(|p| p.0).fold(0.0, f64::min);
        let lower = engine.infeasibility() + min_reduced;
        priced.retain(|p| p.0 < -tol.optimality);
        if priced.is_empty() || (lower > 1e-6 && lower >= 0.5 * engine.infeasibility()) {
            stats.columns = columns.len();
            return (MasterOutcome::Infeasible { y_cells, y_sum }, stats);
        }
        priced.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
        priced.truncate(per_round);
        for (_, k, tables) in priced {
            let mut col: Vec<(usize, f64)> = Vec::with_capacity(cells / 2 + 1);
            for (xy, q) in tables.iter().enumerate() {
                for (c, &val) in q.iter().enumerate() {
                    let r = row_of[4 * xy + c];
                    if r != usize::MAX && val != 0.0 {
                        col.push((r, val));
                    }
                }
            }
            col.push((sum_row, 1.0));
            col.sort_by_key(|e| e.0);
            engine.add_column(col, 0.0);
            columns.push(Column { pair: kept[k], tables });
        }
    }
    stats.columns = columns.len();
    (MasterOutcome::Undecided(format!("no decision after {max_rounds} pricing rounds")), stats)
}

impl Instance {
    pub(crate) fn table_box(&self, u: usize, v: usize, x: usize, y: usize) -> TableBox {
        TableBox::new(self.ma[u * self.n_a + x], self.mb[v * self.n_b + y], self.slack)
    }
}
