//! The realistic-polarization axioms as executable checks.
//!
//! A model satisfying the axioms attaches to every subensemble (u, v) and
//! every Alice result (x, a) an ensemble of definite polarizations for Bob's
//! photon. Averaged over a, those ensembles must give back Bob's own pure
//! state |v⟩⟨v|, and a pure state has no nontrivial convex decomposition.
//! [`enforce_axioms`] runs that argument on concrete models and reports how
//! far the conditionals are from the product of the two Malus laws.

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::behavior::{Setting, SettingsSet};
use crate::crypto::{SubensembleEntry, SubensembleModel};
use crate::error::{Error, Result};
use crate::grid::PolarizationGrid;
use crate::linalg::{self, CMatrix, Side, C64};
use crate::polarization::{Outcome, PolarizationVector};
use crate::state::DensityMatrix;

pub const WEIGHT_TOL: f64 = 1e-12;
/// Σ P(a) ρₐ must equal |v⟩⟨v| to this (max-abs entry) before purity is judged.
pub const MIXTURE_TOL: f64 = 1e-10;
pub const STATE_TOL: f64 = 1e-9;
pub const TABLE_TOL: f64 = 1e-8;
/// Conditionals must agree with the post-selection ensembles to this.
pub const CONSISTENCY_TOL: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WeightedDirection {
    pub weight: f64,
    pub w: PolarizationVector,
}

/// Distribution of Bob's photon polarization after Alice obtained `a` on
/// direction `x`, in subensemble (u, v).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PostSelectionEnsemble {
    pub x: PolarizationVector,
    pub a: Outcome,
    pub u: PolarizationVector,
    pub v: PolarizationVector,
    pub mixture: Vec<WeightedDirection>,
}

fn check_weights(mixture: &[WeightedDirection]) -> Result<()> {
    if mixture.is_empty() {
        return Err(Error::Range("empty mixture".into()));
    }
    let total: f64 = mixture.iter().map(|m| m.weight).sum();
    if mixture.iter().any(|m| !(m.weight >= 0.0)) || (total - 1.0).abs() > WEIGHT_TOL {
        return Err(Error::Range(format!("mixture weights must be ≥ 0 and sum to 1 (sum {total})")));
    }
    Ok(())
}

/// Σ_w μ(w)|w⟩⟨w| over a normalized mixture of polarizations.
fn mixture_state(mixture: &[WeightedDirection]) -> Result<DensityMatrix> {
    check_weights(mixture)?;
    let parts: Vec<(f64, DensityMatrix)> = mixture.iter().map(|m| (m.weight, DensityMatrix::from_polarization(&m.w))).collect();
    DensityMatrix::mixture(&parts)
}

impl PostSelectionEnsemble {
    pub fn validate(&self) -> Result<()> {
        if self.a > 1 {
            return Err(Error::Range(format!("outcome must be 0 or 1, got {}", self.a)));
        }
        check_weights(&self.mixture)
    }
}

/// ρ = Σ_w μ(w)|w⟩⟨w|.
pub fn conditional_state(e: &PostSelectionEnsemble) -> Result<DensityMatrix> {
    e.validate()?;
    mixture_state(&e.mixture)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct PurityReport {
    pub holds: bool,
    pub max_deviation: f64,
}

/// Checks that every part of a decomposition of |v⟩⟨v| is |v⟩⟨v| itself.
///
/// Fails with [`Error::PremiseViolated`] when the parts do not mix to |v⟩⟨v|;
/// otherwise reports the largest trace distance from |v⟩⟨v| among parts of
/// probability above 1e-12.
pub fn purity_forcing_check(v: &PolarizationVector, parts: &[(f64, DensityMatrix)]) -> Result<PurityReport> {
    if parts.is_empty() {
        return Err(Error::Range("no parts given".into()));
    }
    let total: f64 = parts.iter().map(|p| p.0).sum();
    if parts.iter().any(|p| !(p.0 >= 0.0)) || (total - 1.0).abs() > WEIGHT_TOL {
        return Err(Error::Range(format!("probabilities must be ≥ 0 and sum to 1 (sum {total})")));
    }
    if parts.iter().any(|p| p.1.dim() != 2) {
        return Err(Error::Shape("parts must be single-photon states".into()));
    }
    let target = DensityMatrix::from_polarization(v);
    let mut mix = CMatrix::zeros(2)?;
    for (p, rho) in parts {
        mix = mix.checked_add(&rho.matrix().scale(*p))?;
    }
    let gap = mix.max_abs_diff(target.matrix());
    if gap > MIXTURE_TOL {
        return Err(Error::PremiseViolated(format!("parts mix to a state {gap:e} away from |v⟩⟨v|")));
    }
    let mut worst: f64 = 0.0;
    for (p, rho) in parts {
        if *p > 1e-12 {
            worst = worst.max(rho.trace_distance(&target)?);
        }
    }
    Ok(PurityReport { holds: worst <= STATE_TOL, max_deviation: worst })
}

fn detection(u: &PolarizationVector, e: &CMatrix) -> f64 {
    e.expectation(&u.amplitudes()).re
}

fn effects(settings: &[Setting]) -> Result<Vec<[CMatrix; 2]>> {
    settings.iter().map(|s| s.effects()).collect()
}

// ---------------------------------------------------------------------------
// Bipartite models

/// A subensemble model together with Bob's post-selection ensembles,
/// `ensembles[entry][x][a]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AxiomModel {
    pub settings: SettingsSet,
    pub model: SubensembleModel,
    pub ensembles: Vec<Vec<[PostSelectionEnsemble; 2]>>,
}

impl AxiomModel {
    /// Shapes, the subensemble invariants (exact Malus on both sides) and
    /// consistency of the conditionals with the post-selection ensembles.
    pub fn validate(&self) -> Result<()> {
        let m = &self.model;
        if self.ensembles.len() != m.entries.len() || self.ensembles.iter().any(|e| e.len() != m.n_alice) {
            return Err(Error::Shape("one ensemble pair is needed per subensemble and Alice setting".into()));
        }
        let check = m.check(&self.settings, 0.0)?;
        if !check.ok {
            return Err(Error::PremiseViolated(format!(
                "subensemble invariants fail (normalization {:e}, signalling {:e}, Malus {:e}, weights {:e})",
                check.normalization_error, check.signalling, check.malus_excess, check.weight_error
            )));
        }
        let eb = effects(&self.settings.bob)?;
        for (k, (entry, ens)) in m.entries.iter().zip(&self.ensembles).enumerate() {
            for (x, pair) in ens.iter().enumerate() {
                for (a, e) in pair.iter().enumerate() {
                    e.validate()?;
                    if e.a != a {
                        return Err(Error::Shape(format!("ensemble for outcome {a} is labelled {}", e.a)));
                    }
                    let rho = mixture_state(&e.mixture)?;
                    let pa = entry.conditional[x][0][a][0] + entry.conditional[x][0][a][1];
                    if pa <= 1e-12 {
                        continue;
                    }
                    for (y, eff) in eb.iter().enumerate() {
                        for b in 0..2 {
                            let from_model = entry.conditional[x][y][a][b] / pa;
                            let from_state = rho.expectation(&eff[b])?;
                            if (from_model - from_state).abs() > CONSISTENCY_TOL {
                                return Err(Error::PremiseViolated(format!(
                                    "subensemble {k} (u {}, v {}): P(b={b}|x={x},a={a},y={y}) is {from_model} in the table but {from_state} from Bob's ensemble",
                                    entry.u_id, entry.v_id
                                )));
                            }
                        }
                    }
                }
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct AxiomReport {
    pub product_form: bool,
    pub reconstructed: SubensembleModel,
    /// Largest table difference between the input and product conditionals.
    pub max_deviation: f64,
    /// Largest trace distance seen by the purity step.
    pub max_state_deviation: f64,
}

fn product_conditional(u: &PolarizationVector, v: &PolarizationVector, ea: &[[CMatrix; 2]], eb: &[[CMatrix; 2]]) -> Vec<Vec<[[f64; 2]; 2]>> {
    ea.iter()
        .map(|ex| {
            let pa = [detection(u, &ex[0]), detection(u, &ex[1])];
            eb.iter()
                .map(|ey| {
                    let pb = [detection(v, &ey[0]), detection(v, &ey[1])];
                    [[pa[0] * pb[0], pa[0] * pb[1]], [pa[1] * pb[0], pa[1] * pb[1]]]
                })
                .collect()
        })
        .collect()
}

/// Runs the purity-forcing argument on every subensemble and replaces the
/// conditionals by products of Malus probabilities.
pub fn enforce_axioms(m: &AxiomModel) -> Result<AxiomReport> {
    m.validate()?;
    let ea = effects(&m.settings.alice)?;
    let eb = effects(&m.settings.bob)?;
    let per_entry: Vec<Result<(SubensembleEntry, f64, f64)>> = m
        .model
        .entries
        .par_iter()
        .zip(&m.ensembles)
        .map(|(entry, ens)| {
            let mut state_dev: f64 = 0.0;
            for (x, pair) in ens.iter().enumerate() {
                let parts = pair
                    .iter()
                    .enumerate()
                    .map(|(a, e)| Ok((entry.conditional[x][0][a][0] + entry.conditional[x][0][a][1], mixture_state(&e.mixture)?)))
                    .collect::<Result<Vec<_>>>()?;
                let report = purity_forcing_check(&entry.v, &parts).map_err(|err| match err {
                    Error::PremiseViolated(msg) => {
                        Error::PremiseViolated(format!("subensemble (u {}, v {}), Alice setting {x}: {msg}", entry.u_id, entry.v_id))
                    }
                    other => other,
                })?;
                state_dev = state_dev.max(report.max_deviation);
            }
            let product = product_conditional(&entry.u, &entry.v, &ea, &eb);
            let dev = entry
                .conditional
                .iter()
                .flatten()
                .zip(product.iter().flatten())
                .flat_map(|(t, q)| (0..4).map(move |c| (t[c / 2][c % 2] - q[c / 2][c % 2]).abs()))
                .fold(0.0, f64::max);
            Ok((SubensembleEntry { conditional: product, ..entry.clone() }, dev, state_dev))
        })
        .collect();
    let mut entries = Vec::with_capacity(per_entry.len());
    let (mut dev, mut state_dev) = (0.0_f64, 0.0_f64);
    for r in per_entry {
        let (e, d, s) = r?;
        entries.push(e);
        dev = dev.max(d);
        state_dev = state_dev.max(s);
    }
    Ok(AxiomReport {
        product_form: dev <= TABLE_TOL && state_dev <= STATE_TOL,
        reconstructed: SubensembleModel { n_alice: m.model.n_alice, n_bob: m.model.n_bob, entries },
        max_deviation: dev,
        max_state_deviation: state_dev,
    })
}

/// A random decomposition of |v⟩⟨v|. The only pure states that can appear
/// are phase copies of v (purity forcing), so the freedom left is in the
/// number of pieces, their weights and their global phases.
fn random_decomposition(r: &mut impl Rng, v: &PolarizationVector) -> Vec<WeightedDirection> {
    let k = r.gen_range(1..=4);
    let mut weights: Vec<f64> = (0..k).map(|_| r.gen::<f64>() + 1e-3).collect();
    let total: f64 = weights.iter().sum();
    weights.iter_mut().for_each(|w| *w /= total);
    let [c0, c1] = v.amplitudes();
    weights
        .into_iter()
        .map(|weight| {
            let phase = C64::from_polar(1.0, r.gen_range(0.0..std::f64::consts::TAU));
            WeightedDirection { weight, w: PolarizationVector::new(c0 * phase, c1 * phase).expect("unit vector") }
        })
        .collect()
}

/// Random axiom-compliant model on `k` grid pairs: Alice's results follow
/// Malus for u and Bob's ensembles are random decompositions of |v⟩⟨v|.
pub fn random_axiom_model(r: &mut impl Rng, s: &SettingsSet, gu: &PolarizationGrid, gv: &PolarizationGrid, k: usize) -> Result<AxiomModel> {
    if k == 0 {
        return Err(Error::Range("need at least one subensemble".into()));
    }
    let ea = effects(&s.alice)?;
    let eb = effects(&s.bob)?;
    let mut weights: Vec<f64> = (0..k).map(|_| r.gen::<f64>() + 1e-3).collect();
    let total: f64 = weights.iter().sum();
    weights.iter_mut().for_each(|w| *w /= total);
    let mut entries = Vec::with_capacity(k);
    let mut ensembles = Vec::with_capacity(k);
    for weight in weights {
        let (u_id, v_id) = (r.gen_range(0..gu.len()), r.gen_range(0..gv.len()));
        let (u, v) = (gu.points()[u_id], gv.points()[v_id]);
        let mut per_x = Vec::with_capacity(ea.len());
        let mut conditional = Vec::with_capacity(ea.len());
        for (x, ex) in s.alice.iter().zip(&ea) {
            let pair = [0, 1].map(|a| PostSelectionEnsemble { x: x.direction, a, u, v, mixture: random_decomposition(r, &v) });
            let rhos = [mixture_state(&pair[0].mixture)?, mixture_state(&pair[1].mixture)?];
            let pa = [detection(&u, &ex[0]), detection(&u, &ex[1])];
            let row = eb
                .iter()
                .map(|ey| {
                    let pb = |a: usize, b: usize| rhos[a].expectation(&ey[b]).unwrap();
                    [[pa[0] * pb(0, 0), pa[0] * pb(0, 1)], [pa[1] * pb(1, 0), pa[1] * pb(1, 1)]]
                })
                .collect();
            conditional.push(row);
            per_x.push(pair);
        }
        entries.push(SubensembleEntry { u_id, v_id, u, v, weight, conditional });
        ensembles.push(per_x);
    }
    Ok(AxiomModel {
        settings: s.clone(),
        model: SubensembleModel { n_alice: s.n_alice(), n_bob: s.n_bob(), entries },
        ensembles,
    })
}

// ---------------------------------------------------------------------------
// Weak model of any two-qubit state

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct WeakModel {
    /// Subensembles indexed by spectral directions of ρ_A and ρ_B.
    pub model: SubensembleModel,
    /// Set when the input was a non-positive witness; weights may then be negative.
    pub witness: bool,
    pub alice_malus_gap: f64,
    /// max |Bob's subensemble marginal − |⟨y|v⟩|²|.
    pub bob_malus_gap: f64,
    /// max dependence of Bob's subensemble marginal on Alice's setting.
    pub bob_signalling: f64,
}

/// Spectral directions of a one-photon operator, dropping zero weights.
fn spectral(m: &CMatrix) -> Result<Vec<(f64, PolarizationVector)>> {
    let mut out = Vec::new();
    for pair in linalg::hermitian_eigensystem(m)? {
        if pair.value.abs() > 1e-12 {
            out.push((pair.value, PolarizationVector::new(pair.vector[0], pair.vector[1])?.canonical()));
        }
    }
    Ok(out)
}

/// Alice-side Malus model of any two-qubit state: P(u,v) = P_A(u)P_B(v)
/// from the spectral decompositions of the marginals, and conditionals
/// tr{|u⟩⟨u|Πˣₐ}·tr{ρ_{B|x,a}Πʸ_b}. Non-positive witnesses need `allow_witness`.
pub fn weak_model(rho: &DensityMatrix, s: &SettingsSet, allow_witness: bool) -> Result<WeakModel> {
    if rho.dim() != 4 {
        return Err(Error::InvalidState(format!("need a two-qubit operator, got dimension {}", rho.dim())));
    }
    let witness = linalg::min_eigenvalue(rho.matrix())? < -crate::state::PSD_TOL;
    if witness && !allow_witness {
        return Err(Error::InvalidState("operator is not positive; pass the witness flag to accept it".into()));
    }
    let ea = effects(&s.alice)?;
    let eb = effects(&s.bob)?;
    let alice = spectral(&linalg::partial_trace(rho.matrix(), Side::A)?)?;
    let bob = spectral(&linalg::partial_trace(rho.matrix(), Side::B)?)?;
    let id = CMatrix::identity(2)?;
    // Bob's unnormalized conditional states tr_A[(Πˣₐ ⊗ I)ρ] and their traces
    let mut bob_given = Vec::with_capacity(ea.len());
    for ex in &ea {
        let mut pair = Vec::with_capacity(2);
        for e in ex {
            let op = linalg::tensor_product(e, &id)?;
            let sigma = linalg::partial_trace(&op.checked_mul(rho.matrix())?, Side::B)?;
            let p = sigma.trace().re;
            pair.push(if p.abs() > 1e-14 { sigma.scale(1.0 / p) } else { id.scale(0.5) });
        }
        bob_given.push(pair);
    }
    let mut entries = Vec::new();
    let (mut alice_gap, mut bob_gap, mut signalling) = (0.0_f64, 0.0_f64, 0.0_f64);
    for (i, &(wa, u)) in alice.iter().enumerate() {
        for (j, &(wb, v)) in bob.iter().enumerate() {
            let mut conditional = Vec::with_capacity(ea.len());
            for (x, ex) in ea.iter().enumerate() {
                let pa = [detection(&u, &ex[0]), detection(&u, &ex[1])];
                let row: Vec<[[f64; 2]; 2]> = eb
                    .iter()
                    .map(|ey| {
                        let pb = |a: usize, b: usize| bob_given[x][a].trace_product(&ey[b]).re;
                        [[pa[0] * pb(0, 0), pa[0] * pb(0, 1)], [pa[1] * pb(1, 0), pa[1] * pb(1, 1)]]
                    })
                    .collect();
                for (y, t) in row.iter().enumerate() {
                    alice_gap = alice_gap.max((t[0][0] + t[0][1] - pa[0]).abs());
                    let beta = t[0][0] + t[1][0];
                    bob_gap = bob_gap.max((beta - detection(&v, &eb[y][0])).abs());
                    if x > 0 {
                        let t0: &[[f64; 2]; 2] = &conditional.first().map(|r: &Vec<[[f64; 2]; 2]>| r[y]).unwrap();
                        signalling = signalling.max((beta - t0[0][0] - t0[1][0]).abs());
                    }
                }
                conditional.push(row);
            }
            entries.push(SubensembleEntry { u_id: i, v_id: j, u, v, weight: wa * wb, conditional });
        }
    }
    Ok(WeakModel {
        model: SubensembleModel { n_alice: s.n_alice(), n_bob: s.n_bob(), entries },
        witness,
        alice_malus_gap: alice_gap,
        bob_malus_gap: bob_gap,
        bob_signalling: signalling,
    })
}

/// Σ P(u,v) P(a,b|x,y,u,v) without normalization checks, flat `[x][y][a][b]`.
/// Works for witness inputs, whose averages need not be probabilities.
pub fn weak_average(m: &WeakModel) -> Vec<f64> {
    let mut p = vec![0.0; 4 * m.model.n_alice * m.model.n_bob];
    for e in &m.model.entries {
        for (i, t) in e.conditional.iter().flatten().enumerate() {
            for c in 0..4 {
                p[4 * i + c] += e.weight * t[c / 2][c % 2];
            }
        }
    }
    p
}

// ---------------------------------------------------------------------------
// Three parties

/// One tripartite subensemble. Tables are flat `[x1][x2][x3][a1][a2][a3]`;
/// `second[x1][a1]` is party 2's photon after party 1 measured, and
/// `third[((x1·n2 + x2)·2 + a1)·2 + a2]` is party 3's after parties 1 and 2.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TripartiteEntry {
    pub u: [PolarizationVector; 3],
    pub weight: f64,
    pub conditional: Vec<f64>,
    pub second: Vec<[Vec<WeightedDirection>; 2]>,
    pub third: Vec<Vec<WeightedDirection>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TripartiteModel {
    pub settings: [Vec<Setting>; 3],
    pub entries: Vec<TripartiteEntry>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct InductionReport {
    pub fully_separable: bool,
    pub max_deviation: f64,
    pub max_state_deviation: f64,
}

fn tri_index(n: [usize; 3], x: [usize; 3], a: [usize; 3]) -> usize {
    ((((x[0] * n[1] + x[1]) * n[2] + x[2]) * 2 + a[0]) * 2 + a[1]) * 2 + a[2]
}

/// Parties 1 and 2 measure first (in that order); purity forcing is applied
/// to party 2's photon after party 1, then to party 3's after both.
pub fn multiparty_induction_check(m: &TripartiteModel) -> Result<InductionReport> {
    let n = [m.settings[0].len(), m.settings[1].len(), m.settings[2].len()];
    if n.contains(&0) {
        return Err(Error::Shape("every party needs a setting".into()));
    }
    let e = [effects(&m.settings[0])?, effects(&m.settings[1])?, effects(&m.settings[2])?];
    let total: f64 = m.entries.iter().map(|t| t.weight).sum();
    if m.entries.iter().any(|t| !(t.weight >= 0.0)) || (total - 1.0).abs() > WEIGHT_TOL {
        return Err(Error::Range(format!("weights must be ≥ 0 and sum to 1 (sum {total})")));
    }
    let per_entry: Vec<Result<(f64, f64)>> = m
        .entries
        .par_iter()
        .enumerate()
        .map(|(k, t)| {
            let cells = 8 * n[0] * n[1] * n[2];
            if t.conditional.len() != cells || t.second.len() != n[0] || t.third.len() != 4 * n[0] * n[1] {
                return Err(Error::Shape(format!("tripartite subensemble {k} has the wrong shape")));
            }
            let ctx = |msg: String| Error::PremiseViolated(format!("tripartite subensemble {k}: {msg}"));
            let second: Vec<[DensityMatrix; 2]> =
                t.second.iter().map(|p| Ok([mixture_state(&p[0])?, mixture_state(&p[1])?])).collect::<Result<_>>()?;
            let third: Vec<DensityMatrix> = t.third.iter().map(|p| mixture_state(p)).collect::<Result<_>>()?;
            let p1 = |x1: usize, a1: usize| detection(&t.u[0], &e[0][x1][a1]);
            let p2 = |x1: usize, a1: usize, x2: usize, a2: usize| second[x1][a1].expectation(&e[1][x2][a2]).unwrap();
            let th = |x1: usize, x2: usize, a1: usize, a2: usize| &third[((x1 * n[1] + x2) * 2 + a1) * 2 + a2];

            // consistency of the table with the axioms' sequential description
            let mut dev: f64 = 0.0;
            for x1 in 0..n[0] {
                for x2 in 0..n[1] {
                    for x3 in 0..n[2] {
                        for a in 0..8 {
                            let a = [a >> 2, (a >> 1) & 1, a & 1];
                            let seq = p1(x1, a[0]) * p2(x1, a[0], x2, a[1]) * th(x1, x2, a[0], a[1]).expectation(&e[2][x3][a[2]])?;
                            let got = t.conditional[tri_index(n, [x1, x2, x3], a)];
                            if (got - seq).abs() > CONSISTENCY_TOL {
                                return Err(ctx(format!("table entry {got} disagrees with the post-selection ensembles ({seq})")));
                            }
                            let product = p1(x1, a[0]) * detection(&t.u[1], &e[1][x2][a[1]]) * detection(&t.u[2], &e[2][x3][a[2]]);
                            dev = dev.max((got - product).abs());
                        }
                    }
                }
            }

            let mut state_dev: f64 = 0.0;
            for x1 in 0..n[0] {
                let parts = [(p1(x1, 0), second[x1][0]), (p1(x1, 1), second[x1][1])];
                let r = purity_forcing_check(&t.u[1], &parts).map_err(|err| match err {
                    Error::PremiseViolated(msg) => ctx(format!("party 2 after setting {x1}: {msg}")),
                    other => other,
                })?;
                state_dev = state_dev.max(r.max_deviation);
                for x2 in 0..n[1] {
                    let mut parts = Vec::with_capacity(4);
                    for a1 in 0..2 {
                        for a2 in 0..2 {
                            parts.push((p1(x1, a1) * p2(x1, a1, x2, a2), *th(x1, x2, a1, a2)));
                        }
                    }
                    let r = purity_forcing_check(&t.u[2], &parts).map_err(|err| match err {
                        Error::PremiseViolated(msg) => ctx(format!("party 3 after settings ({x1}, {x2}): {msg}")),
                        other => other,
                    })?;
                    state_dev = state_dev.max(r.max_deviation);
                }
            }
            Ok((dev, state_dev))
        })
        .collect();
    let (mut dev, mut state_dev) = (0.0_f64, 0.0_f64);
    for r in per_entry {
        let (d, s) = r?;
        dev = dev.max(d);
        state_dev = state_dev.max(s);
    }
    Ok(InductionReport { fully_separable: dev <= TABLE_TOL && state_dev <= STATE_TOL, max_deviation: dev, max_state_deviation: state_dev })
}

/// Random axiom-compliant tripartite model on `k` subensembles drawn from `grid`.
pub fn random_tripartite_model(r: &mut impl Rng, settings: &[Vec<Setting>; 3], grid: &PolarizationGrid, k: usize) -> Result<TripartiteModel> {
    if k == 0 {
        return Err(Error::Range("need at least one subensemble".into()));
    }
    let n = [settings[0].len(), settings[1].len(), settings[2].len()];
    let e = [effects(&settings[0])?, effects(&settings[1])?, effects(&settings[2])?];
    let mut weights: Vec<f64> = (0..k).map(|_| r.gen::<f64>() + 1e-3).collect();
    let total: f64 = weights.iter().sum();
    weights.iter_mut().for_each(|w| *w /= total);
    let mut entries = Vec::with_capacity(k);
    for weight in weights {
        let u = [0, 1, 2].map(|_| grid.points()[r.gen_range(0..grid.len())]);
        let second: Vec<[Vec<WeightedDirection>; 2]> =
            (0..n[0]).map(|_| [random_decomposition(r, &u[1]), random_decomposition(r, &u[1])]).collect();
        let third: Vec<Vec<WeightedDirection>> = (0..4 * n[0] * n[1]).map(|_| random_decomposition(r, &u[2])).collect();
        let s2: Vec<[DensityMatrix; 2]> = second.iter().map(|p| Ok([mixture_state(&p[0])?, mixture_state(&p[1])?])).collect::<Result<_>>()?;
        let s3: Vec<DensityMatrix> = third.iter().map(|p| mixture_state(p)).collect::<Result<_>>()?;
        let mut conditional = vec![0.0; 8 * n[0] * n[1] * n[2]];
        for x1 in 0..n[0] {
            for x2 in 0..n[1] {
                for x3 in 0..n[2] {
                    for a in 0..8 {
                        let a = [a >> 2, (a >> 1) & 1, a & 1];
                        conditional[tri_index(n, [x1, x2, x3], a)] = detection(&u[0], &e[0][x1][a[0]])
                            * s2[x1][a[0]].expectation(&e[1][x2][a[1]])?
                            * s3[((x1 * n[1] + x2) * 2 + a[0]) * 2 + a[1]].expectation(&e[2][x3][a[2]])?;
                    }
                }
            }
        }
        entries.push(TripartiteEntry { u, weight, conditional, second, third });
    }
    Ok(TripartiteModel { settings: settings.clone(), entries })
}
