//! Finite-setting correlation tables P(a,b|x,y) and Bell functionals.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{self, CMatrix};
use crate::polarization::{imperfect_effect, projector, ImperfectPolarizer, Outcome, PolarizationVector};
use crate::state::DensityMatrix;

/// Entries at or above −this are clamped to zero on ingest.
pub const NEGATIVE_CLAMP: f64 = 1e-12;
/// Per-setting normalization tolerance.
pub const NORMALIZATION_TOL: f64 = 1e-10;

/// One measurement setting: a polarizer direction and, optionally, its (ε, ε′).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Setting {
    pub direction: PolarizationVector,
    pub imperfection: Option<(f64, f64)>,
}

impl Setting {
    pub fn ideal(direction: PolarizationVector) -> Self {
        Self { direction, imperfection: None }
    }

    pub fn from_bloch(theta: f64, phi: f64) -> Self {
        Self::ideal(PolarizationVector::from_bloch(theta, phi))
    }

    /// The two-outcome measurement for this setting, indexed by outcome.
    pub fn effects(&self) -> Result<[CMatrix; 2]> {
        match self.imperfection {
            None => Ok([projector(&self.direction, 0)?.matrix, projector(&self.direction, 1)?.matrix]),
            Some((eps, eps_prime)) => {
                let p = ImperfectPolarizer::new(eps, eps_prime, self.direction)?;
                Ok([imperfect_effect(&p, 0)?, imperfect_effect(&p, 1)?])
            }
        }
    }

    pub fn bloch_vector(&self) -> [f64; 3] {
        self.direction.bloch_vector()
    }
}

/// Alice's and Bob's setting lists.
#[derive(Debug, Clone, PartialEq)]
pub struct SettingsSet {
    pub alice: Vec<Setting>,
    pub bob: Vec<Setting>,
}

impl SettingsSet {
    pub fn new(alice: Vec<Setting>, bob: Vec<Setting>) -> Result<Self> {
        if alice.is_empty() || bob.is_empty() {
            return Err(Error::InvalidBehavior("each party needs at least one setting".into()));
        }
        Ok(Self { alice, bob })
    }

    pub fn ideal(alice: &[PolarizationVector], bob: &[PolarizationVector]) -> Result<Self> {
        Self::new(alice.iter().copied().map(Setting::ideal).collect(), bob.iter().copied().map(Setting::ideal).collect())
    }

    /// Bloch angles (θ, φ) per party.
    pub fn from_bloch(alice: &[(f64, f64)], bob: &[(f64, f64)]) -> Result<Self> {
        Self::new(
            alice.iter().map(|&(t, p)| Setting::from_bloch(t, p)).collect(),
            bob.iter().map(|&(t, p)| Setting::from_bloch(t, p)).collect(),
        )
    }

    /// Alice at Bloch azimuths {0, π/2}, Bob at {5π/4, 3π/4}, all on the
    /// equator. The singlet reaches +2√2 on [`BellFunctional::chsh`] here.
    pub fn chsh_optimal() -> Self {
        use std::f64::consts::{FRAC_PI_2, FRAC_PI_4};
        Self::from_bloch(
            &[(FRAC_PI_2, 0.0), (FRAC_PI_2, FRAC_PI_2)],
            &[(FRAC_PI_2, 5.0 * FRAC_PI_4), (FRAC_PI_2, 3.0 * FRAC_PI_4)],
        )
        .unwrap()
    }

    /// Both parties measure along the three Bloch axes z, x, y.
    pub fn pauli_axes() -> Self {
        use std::f64::consts::FRAC_PI_2;
        let axes = [(0.0, 0.0), (FRAC_PI_2, 0.0), (FRAC_PI_2, FRAC_PI_2)];
        Self::from_bloch(&axes, &axes).unwrap()
    }

    pub fn n_alice(&self) -> usize {
        self.alice.len()
    }

    pub fn n_bob(&self) -> usize {
        self.bob.len()
    }

    pub fn is_ideal(&self) -> bool {
        self.alice.iter().chain(&self.bob).all(|s| s.imperfection.is_none())
    }
}

/// P(a,b|x,y) for binary outcomes, stored `[x][y][a][b]` row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct Behavior {
    n_a: usize,
    n_b: usize,
    p: Vec<f64>,
}

#[inline]
pub(crate) fn cell(n_b: usize, x: usize, y: usize, a: usize, b: usize) -> usize {
    ((x * n_b + y) * 2 + a) * 2 + b
}

impl Behavior {
    /// Builds a behavior from a flat `[x][y][a][b]` table. Entries in
    /// [−1e-12, 0) are clamped to zero and each setting pair renormalized.
    pub fn new(n_a: usize, n_b: usize, mut p: Vec<f64>) -> Result<Self> {
        if n_a == 0 || n_b == 0 {
            return Err(Error::InvalidBehavior("setting counts must be positive".into()));
        }
        if p.len() != 4 * n_a * n_b {
            return Err(Error::InvalidBehavior(format!("expected {} entries, got {}", 4 * n_a * n_b, p.len())));
        }
        for (i, v) in p.iter_mut().enumerate() {
            if !v.is_finite() {
                return Err(Error::InvalidBehavior(format!("entry {i} is not finite")));
            }
            if *v < 0.0 {
                if *v < -NEGATIVE_CLAMP {
                    return Err(Error::InvalidBehavior(format!("entry {i} is negative ({v:e})")));
                }
                *v = 0.0;
            }
        }
        for block in p.chunks_mut(4) {
            let s: f64 = block.iter().sum();
            if (s - 1.0).abs() > NORMALIZATION_TOL {
                return Err(Error::InvalidBehavior(format!("setting pair sums to {s}")));
            }
            // Leave sums within a few ulps alone so that re-parsing is idempotent.
            if (s - 1.0).abs() > 8.0 * f64::EPSILON {
                for v in block.iter_mut() {
                    *v /= s;
                }
            }
        }
        Ok(Self { n_a, n_b, p })
    }

    pub fn n_alice(&self) -> usize {
        self.n_a
    }

    pub fn n_bob(&self) -> usize {
        self.n_b
    }

    pub fn get(&self, a: Outcome, b: Outcome, x: usize, y: usize) -> f64 {
        self.p[cell(self.n_b, x, y, a, b)]
    }

    pub fn table(&self) -> &[f64] {
        &self.p
    }

    /// Σ_b P(a,b|x,y)
    pub fn alice_marginal(&self, a: Outcome, x: usize, y: usize) -> f64 {
        self.get(a, 0, x, y) + self.get(a, 1, x, y)
    }

    /// Σ_a P(a,b|x,y)
    pub fn bob_marginal(&self, b: Outcome, x: usize, y: usize) -> f64 {
        self.get(0, b, x, y) + self.get(1, b, x, y)
    }

    /// E(x,y) = Σ (−1)^{a+b} P(a,b|x,y)
    pub fn correlator(&self, x: usize, y: usize) -> f64 {
        self.get(0, 0, x, y) - self.get(0, 1, x, y) - self.get(1, 0, x, y) + self.get(1, 1, x, y)
    }

    /// λ·self + (1−λ)·other
    pub fn mix(&self, other: &Behavior, lambda: f64) -> Result<Behavior> {
        if self.n_a != other.n_a || self.n_b != other.n_b {
            return Err(Error::Shape("behaviors have different setting counts".into()));
        }
        let p = self.p.iter().zip(&other.p).map(|(a, b)| lambda * a + (1.0 - lambda) * b).collect();
        Behavior::new(self.n_a, self.n_b, p)
    }

    pub fn max_abs_diff(&self, other: &Behavior) -> f64 {
        self.p.iter().zip(&other.p).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max)
    }

    /// Nested `[x][y][a][b]` form used by the JSON interchange.
    pub fn nested(&self) -> Vec<Vec<[[f64; 2]; 2]>> {
        (0..self.n_a)
            .map(|x| {
                (0..self.n_b)
                    .map(|y| {
                        [[self.get(0, 0, x, y), self.get(0, 1, x, y)], [self.get(1, 0, x, y), self.get(1, 1, x, y)]]
                    })
                    .collect()
            })
            .collect()
    }

    pub fn from_nested(n_a: usize, n_b: usize, nested: &[Vec<[[f64; 2]; 2]>]) -> Result<Self> {
        if nested.len() != n_a || nested.iter().any(|row| row.len() != n_b) {
            return Err(Error::InvalidBehavior(format!("table shape does not match nA = {n_a}, nB = {n_b}")));
        }
        let flat = nested.iter().flat_map(|row| row.iter().flat_map(|t| [t[0][0], t[0][1], t[1][0], t[1][1]])).collect();
        Self::new(n_a, n_b, flat)
    }
}

/// P(a,b|x,y) = tr{(Πˣₐ ⊗ Πʸ_b) ρ}.
pub fn quantum_behavior(rho: &DensityMatrix, s: &SettingsSet) -> Result<Behavior> {
    if rho.dim() != 4 {
        return Err(Error::InvalidState(format!("need a two-qubit state, got dimension {}", rho.dim())));
    }
    let alice: Vec<[CMatrix; 2]> = s.alice.iter().map(|x| x.effects()).collect::<Result<_>>()?;
    let bob: Vec<[CMatrix; 2]> = s.bob.iter().map(|y| y.effects()).collect::<Result<_>>()?;
    let (n_a, n_b) = (alice.len(), bob.len());
    let mut p = vec![0.0; 4 * n_a * n_b];
    for (x, ea) in alice.iter().enumerate() {
        for (y, eb) in bob.iter().enumerate() {
            for a in 0..2 {
                for b in 0..2 {
                    let op = linalg::tensor_product(&ea[a], &eb[b])?;
                    p[cell(n_b, x, y, a, b)] = rho.expectation(&op)?;
                }
            }
        }
    }
    clamp_rounding(&mut p);
    Behavior::new(n_a, n_b, p)
}

/// Snaps round-off around zero (|p| < 1e-15) to exactly zero so that
/// structural zeros of the statistics are recognized downstream.
pub(crate) fn clamp_rounding(p: &mut [f64]) {
    for v in p.iter_mut() {
        if v.abs() < 1e-15 {
            *v = 0.0;
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Party {
    Alice,
    Bob,
}

/// Location of the largest marginal discrepancy.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SignallingWitness {
    /// Whose marginal changes.
    pub party: Party,
    pub outcome: Outcome,
    /// That party's own setting.
    pub setting: usize,
    /// The two settings of the other party being compared.
    pub other: (usize, usize),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct NoSignallingReport {
    pub ok: bool,
    pub max_violation: f64,
    pub worst_indices: Option<SignallingWitness>,
}

pub fn check_no_signalling(b: &Behavior, tol: f64) -> NoSignallingReport {
    let mut worst = 0.0;
    let mut at = None;
    for a in 0..2 {
        for x in 0..b.n_a {
            for y in 0..b.n_b {
                for y2 in (y + 1)..b.n_b {
                    let d = (b.alice_marginal(a, x, y) - b.alice_marginal(a, x, y2)).abs();
                    if d > worst {
                        worst = d;
                        at = Some(SignallingWitness { party: Party::Alice, outcome: a, setting: x, other: (y, y2) });
                    }
                }
            }
        }
    }
    for bo in 0..2 {
        for y in 0..b.n_b {
            for x in 0..b.n_a {
                for x2 in (x + 1)..b.n_a {
                    let d = (b.bob_marginal(bo, x, y) - b.bob_marginal(bo, x2, y)).abs();
                    if d > worst {
                        worst = d;
                        at = Some(SignallingWitness { party: Party::Bob, outcome: bo, setting: y, other: (x, x2) });
                    }
                }
            }
        }
    }
    NoSignallingReport { ok: worst <= tol, max_violation: worst, worst_indices: at }
}

/// Linear functional Σ c(a,b,x,y)·P(a,b|x,y), stored like [`Behavior`].
#[derive(Debug, Clone, PartialEq)]
pub struct BellFunctional {
    n_a: usize,
    n_b: usize,
    c: Vec<f64>,
}

impl BellFunctional {
    pub fn new(n_a: usize, n_b: usize, c: Vec<f64>) -> Result<Self> {
        if n_a == 0 || n_b == 0 || c.len() != 4 * n_a * n_b {
            return Err(Error::Shape(format!("functional needs {} coefficients for {n_a}×{n_b} settings", 4 * n_a * n_b)));
        }
        if c.iter().any(|v| !v.is_finite()) {
            return Err(Error::Shape("functional coefficients must be finite".into()));
        }
        Ok(Self { n_a, n_b, c })
    }

    /// E(0,0) + E(0,1) + E(1,0) − E(1,1)
    pub fn chsh() -> Self {
        let mut c = vec![0.0; 16];
        for x in 0..2 {
            for y in 0..2 {
                let sign = if x == 1 && y == 1 { -1.0 } else { 1.0 };
                for a in 0..2 {
                    for b in 0..2 {
                        let parity = if (a + b) % 2 == 0 { 1.0 } else { -1.0 };
                        c[cell(2, x, y, a, b)] = sign * parity;
                    }
                }
            }
        }
        Self { n_a: 2, n_b: 2, c }
    }

    pub fn n_alice(&self) -> usize {
        self.n_a
    }

    pub fn n_bob(&self) -> usize {
        self.n_b
    }

    pub fn coefficients(&self) -> &[f64] {
        &self.c
    }

    pub fn get(&self, a: Outcome, b: Outcome, x: usize, y: usize) -> f64 {
        self.c[cell(self.n_b, x, y, a, b)]
    }

    pub fn nested(&self) -> Vec<Vec<[[f64; 2]; 2]>> {
        (0..self.n_a)
            .map(|x| {
                (0..self.n_b)
                    .map(|y| [[self.get(0, 0, x, y), self.get(0, 1, x, y)], [self.get(1, 0, x, y), self.get(1, 1, x, y)]])
                    .collect()
            })
            .collect()
    }

    pub fn from_nested(n_a: usize, n_b: usize, nested: &[Vec<[[f64; 2]; 2]>]) -> Result<Self> {
        if nested.len() != n_a || nested.iter().any(|row| row.len() != n_b) {
            return Err(Error::Shape(format!("functional shape does not match nA = {n_a}, nB = {n_b}")));
        }
        let flat = nested.iter().flat_map(|row| row.iter().flat_map(|t| [t[0][0], t[0][1], t[1][0], t[1][1]])).collect();
        Self::new(n_a, n_b, flat)
    }
}

pub fn bell_value(b: &Behavior, f: &BellFunctional) -> Result<f64> {
    if b.n_a != f.n_a || b.n_b != f.n_b {
        return Err(Error::Shape(format!(
            "functional is {}×{} but behavior is {}×{}",
            f.n_a, f.n_b, b.n_a, b.n_b
        )));
    }
    Ok(b.p.iter().zip(&f.c).map(|(p, c)| p * c).sum())
}

// ---------------------------------------------------------------------------
// JSON interchange

#[derive(Serialize, Deserialize)]
#[serde(rename_all = "camelCase", deny_unknown_fields)]
struct SettingRepr {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    bloch: Option<[f64; 2]>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    c0: Option<[f64; 2]>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    c1: Option<[f64; 2]>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    eps: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    eps_prime: Option<f64>,
}

impl TryFrom<SettingRepr> for Setting {
    type Error = Error;

    fn try_from(r: SettingRepr) -> Result<Self> {
        let direction = match (r.bloch, r.c0, r.c1) {
            (Some([theta, phi]), None, None) => {
                if !theta.is_finite() || !phi.is_finite() {
                    return Err(Error::Range("bloch angles must be finite".into()));
                }
                PolarizationVector::from_bloch(theta, phi)
            }
            (None, Some(c0), Some(c1)) => {
                PolarizationVector::new(linalg::C64::new(c0[0], c0[1]), linalg::C64::new(c1[0], c1[1]))?
            }
            _ => return Err(Error::Shape("a setting needs either \"bloch\" or both \"c0\" and \"c1\"".into())),
        };
        let imperfection = match (r.eps, r.eps_prime) {
            (None, None) => None,
            (Some(e), Some(ep)) => {
                ImperfectPolarizer::new(e, ep, direction)?;
                Some((e, ep))
            }
            _ => return Err(Error::Shape("\"eps\" and \"epsPrime\" must be given together".into())),
        };
        Ok(Setting { direction, imperfection })
    }
}

impl Serialize for Setting {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        let [c0, c1] = self.direction.amplitudes();
        SettingRepr {
            bloch: None,
            c0: Some([c0.re, c0.im]),
            c1: Some([c1.re, c1.im]),
            eps: self.imperfection.map(|i| i.0),
            eps_prime: self.imperfection.map(|i| i.1),
        }
        .serialize(s)
    }
}

impl<'de> Deserialize<'de> for Setting {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        Setting::try_from(SettingRepr::deserialize(d)?).map_err(serde::de::Error::custom)
    }
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct SettingsRepr {
    alice: Vec<Setting>,
    bob: Vec<Setting>,
}

impl Serialize for SettingsSet {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        SettingsRepr { alice: self.alice.clone(), bob: self.bob.clone() }.serialize(s)
    }
}

impl<'de> Deserialize<'de> for SettingsSet {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let r = SettingsRepr::deserialize(d)?;
        SettingsSet::new(r.alice, r.bob).map_err(serde::de::Error::custom)
    }
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct TableRepr {
    #[serde(rename = "nA")]
    n_a: usize,
    #[serde(rename = "nB")]
    n_b: usize,
    #[serde(alias = "c")]
    p: Vec<Vec<[[f64; 2]; 2]>>,
}

impl Serialize for Behavior {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        TableRepr { n_a: self.n_a, n_b: self.n_b, p: self.nested() }.serialize(s)
    }
}

impl<'de> Deserialize<'de> for Behavior {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let r = TableRepr::deserialize(d)?;
        Behavior::from_nested(r.n_a, r.n_b, &r.p).map_err(serde::de::Error::custom)
    }
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct FunctionalRepr {
    #[serde(rename = "nA")]
    n_a: usize,
    #[serde(rename = "nB")]
    n_b: usize,
    c: Vec<Vec<[[f64; 2]; 2]>>,
}

impl Serialize for BellFunctional {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        FunctionalRepr { n_a: self.n_a, n_b: self.n_b, c: self.nested() }.serialize(s)
    }
}

impl<'de> Deserialize<'de> for BellFunctional {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let r = FunctionalRepr::deserialize(d)?;
        BellFunctional::from_nested(r.n_a, r.n_b, &r.c).map_err(serde::de::Error::custom)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::C64;
    use std::f64::consts::{FRAC_PI_2, PI, SQRT_2};

    #[test]
    fn product_state_table() {
        let h = PolarizationVector::horizontal();
        let rho = DensityMatrix::pure(&[C64::new(1.0, 0.0), C64::new(0.0, 0.0), C64::new(0.0, 0.0), C64::new(0.0, 0.0)])
            .unwrap();
        let b = quantum_behavior(&rho, &SettingsSet::ideal(&[h], &[h]).unwrap()).unwrap();
        assert_eq!(b.table(), &[1.0, 0.0, 0.0, 0.0]);
    }

    #[test]
    fn maximally_mixed_is_uniform() {
        let rho = DensityMatrix::maximally_mixed(4).unwrap();
        let b = quantum_behavior(&rho, &SettingsSet::chsh_optimal()).unwrap();
        assert!(b.table().iter().all(|p| (p - 0.25).abs() < 1e-15));
        assert!(bell_value(&b, &BellFunctional::chsh()).unwrap().abs() < 1e-15);
    }

    #[test]
    fn singlet_orthogonal_directions() {
        // Bloch angles 0 and π are orthogonal polarizations; the singlet is
        // anticorrelated, so "Alice detects, Bob detects" has probability ½.
        let s = SettingsSet::from_bloch(&[(0.0, 0.0)], &[(PI, 0.0)]).unwrap();
        let b = quantum_behavior(&DensityMatrix::singlet(), &s).unwrap();
        assert!((b.get(0, 0, 0, 0) - 0.5).abs() < 1e-12);
    }

    #[test]
    fn tsirelson_value() {
        let b = quantum_behavior(&DensityMatrix::singlet(), &SettingsSet::chsh_optimal()).unwrap();
        let v = bell_value(&b, &BellFunctional::chsh()).unwrap();
        assert!((v - 2.0 * SQRT_2).abs() < 1e-9, "{v}");
    }

    #[test]
    fn quarter_turn_bob_settings_need_relabelled_functional() {
        use std::f64::consts::FRAC_PI_4;
        let s = SettingsSet::from_bloch(
            &[(FRAC_PI_2, 0.0), (FRAC_PI_2, FRAC_PI_2)],
            &[(FRAC_PI_2, FRAC_PI_4), (FRAC_PI_2, 3.0 * FRAC_PI_4)],
        )
        .unwrap();
        let b = quantum_behavior(&DensityMatrix::singlet(), &s).unwrap();
        assert!(bell_value(&b, &BellFunctional::chsh()).unwrap().abs() < 1e-12);
        let relabelled = b.correlator(0, 0) - b.correlator(0, 1) + b.correlator(1, 0) + b.correlator(1, 1);
        assert!((relabelled.abs() - 2.0 * SQRT_2).abs() < 1e-9);
    }

    #[test]
    fn deterministic_chsh() {
        let mut p = vec![0.0; 16];
        for x in 0..2 {
            for y in 0..2 {
                p[cell(2, x, y, 0, 0)] = 1.0;
            }
        }
        let b = Behavior::new(2, 2, p).unwrap();
        assert_eq!(bell_value(&b, &BellFunctional::chsh()).unwrap(), 2.0);
        let f = BellFunctional::new(1, 1, vec![1.0; 4]).unwrap();
        assert!(matches!(bell_value(&b, &f), Err(Error::Shape(_))));
    }

    #[test]
    fn signalling_report() {
        // Alice's marginal P(a=0|x=0) is 1 when y=0 and 0.5 when y=1.
        let p = vec![0.5, 0.5, 0.0, 0.0, 0.25, 0.25, 0.25, 0.25];
        let b = Behavior::new(1, 2, p).unwrap();
        let r = check_no_signalling(&b, 1e-10);
        assert!(!r.ok);
        assert!((r.max_violation - 0.5).abs() < 1e-15);
        let w = r.worst_indices.unwrap();
        assert_eq!(w.party, Party::Alice);
        assert_eq!(w.other, (0, 1));

        let q = quantum_behavior(&DensityMatrix::singlet(), &SettingsSet::chsh_optimal()).unwrap();
        let r = check_no_signalling(&q, 1e-10);
        assert!(r.ok && r.max_violation <= 1e-10);
    }

    #[test]
    fn ingest_rules() {
        let mut p = vec![0.25; 4];
        p[0] = 0.25 + 5e-13;
        p[1] = 0.25 - 5e-13 - 5e-13;
        p[3] = 0.25 + 5e-13;
        assert!(Behavior::new(1, 1, p).is_ok());
        assert!(Behavior::new(1, 1, vec![1.0 + 1e-9, -1e-9, 0.0, 0.0]).is_err());
        let b = Behavior::new(1, 1, vec![1.0 + 1e-13, -1e-13, 0.0, 0.0]).unwrap();
        assert_eq!(b.get(0, 1, 0, 0), 0.0);
        assert!(Behavior::new(1, 1, vec![0.5, 0.5, 0.5, 0.0]).is_err());
        assert!(Behavior::new(2, 1, vec![0.25; 4]).is_err());
    }

    #[test]
    fn imperfect_settings_shift_marginals() {
        let mut s = SettingsSet::from_bloch(&[(FRAC_PI_2, 0.0)], &[(0.0, 0.0)]).unwrap();
        s.alice[0].imperfection = Some((0.2, 0.1));
        let b = quantum_behavior(&DensityMatrix::maximally_mixed(4).unwrap(), &s).unwrap();
        // detection probability ε′ + (1−ε)/2 = 0.5
        assert!((b.alice_marginal(0, 0, 0) - 0.5).abs() < 1e-15);
        s.alice[0].imperfection = Some((0.4, 0.0));
        let b = quantum_behavior(&DensityMatrix::maximally_mixed(4).unwrap(), &s).unwrap();
        assert!((b.alice_marginal(0, 0, 0) - 0.3).abs() < 1e-15);
    }

    #[test]
    fn json_round_trips() {
        let s = SettingsSet::chsh_optimal();
        let txt = serde_json::to_string(&s).unwrap();
        let back: SettingsSet = serde_json::from_str(&txt).unwrap();
        assert_eq!(back, s);
        assert_eq!(serde_json::to_string(&back).unwrap(), txt);

        let b = quantum_behavior(&DensityMatrix::singlet(), &s).unwrap();
        let txt = serde_json::to_string(&b).unwrap();
        let back: Behavior = serde_json::from_str(&txt).unwrap();
        assert_eq!(serde_json::to_string(&back).unwrap(), txt);

        let f = BellFunctional::chsh();
        let back: BellFunctional = serde_json::from_str(&serde_json::to_string(&f).unwrap()).unwrap();
        assert_eq!(back, f);
    }

    #[test]
    fn settings_accept_bloch_form() {
        let txt = r#"{"alice":[{"bloch":[1.5707963267948966,0.0]}],"bob":[{"bloch":[0.0,0.0],"eps":0.1,"epsPrime":0.02}]}"#;
        let s: SettingsSet = serde_json::from_str(txt).unwrap();
        assert_eq!(s.bob[0].imperfection, Some((0.1, 0.02)));
        assert!(serde_json::from_str::<SettingsSet>(r#"{"alice":[{"eps":0.1}],"bob":[]}"#).is_err());
        let err = serde_json::from_str::<Behavior>(r#"{"nA":1,"nB":1}"#).unwrap_err().to_string();
        assert!(err.contains("`p`"), "{err}");
    }
}
