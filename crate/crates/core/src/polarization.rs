//! Photon polarization directions and polarizer effects.
//!
//! Directions are unnormalized vectors in C²; every effect normalizes by
//! ⟨z|z⟩ so rescaling a direction never changes the physics. Outcome `0`
//! means the photon passed the polarizer and was detected.

use std::f64::consts::PI;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};
use crate::linalg::{CMatrix, C64};

/// Squared norms at or below this are rejected.
pub const MIN_NORM_SQR: f64 = 1e-12;

/// Binary polarizer outcome: `0` detected, `1` not detected.
pub type Outcome = usize;

/// A pure polarization direction in C², not necessarily normalized.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PolarizationVector {
    c0: C64,
    c1: C64,
}

impl PolarizationVector {
    pub fn new(c0: C64, c1: C64) -> Result<Self> {
        let n = c0.norm_sqr() + c1.norm_sqr();
        if !(n > MIN_NORM_SQR) || !n.is_finite() {
            return Err(Error::ZeroVector(n));
        }
        Ok(Self { c0, c1 })
    }

    pub fn from_real(c0: f64, c1: f64) -> Result<Self> {
        Self::new(C64::new(c0, 0.0), C64::new(c1, 0.0))
    }

    /// |u(θ,φ)⟩ = (cos(θ/2), e^{iφ} sin(θ/2)).
    pub fn from_bloch(theta: f64, phi: f64) -> Self {
        Self {
            c0: C64::new((theta / 2.0).cos(), 0.0),
            c1: C64::from_polar((theta / 2.0).sin(), phi),
        }
    }

    /// Point on the Poincaré sphere given as a Cartesian vector (need not be unit).
    pub fn from_bloch_vector(n: [f64; 3]) -> Result<Self> {
        let r = (n[0] * n[0] + n[1] * n[1] + n[2] * n[2]).sqrt();
        if !(r > 1e-12) {
            return Err(Error::ZeroVector(r));
        }
        let theta = (n[2] / r).clamp(-1.0, 1.0).acos();
        let phi = n[1].atan2(n[0]);
        Ok(Self::from_bloch(theta, phi))
    }

    /// Linear polarization at physical angle `angle` from horizontal.
    pub fn linear(angle: f64) -> Self {
        Self::from_bloch(PI / 2.0, 2.0 * angle)
    }

    pub fn horizontal() -> Self {
        Self { c0: C64::new(1.0, 0.0), c1: C64::new(0.0, 0.0) }
    }

    pub fn vertical() -> Self {
        Self { c0: C64::new(0.0, 0.0), c1: C64::new(1.0, 0.0) }
    }

    pub fn amplitudes(&self) -> [C64; 2] {
        [self.c0, self.c1]
    }

    pub fn norm_sqr(&self) -> f64 {
        self.c0.norm_sqr() + self.c1.norm_sqr()
    }

    pub fn normalized(&self) -> Self {
        let n = self.norm_sqr().sqrt();
        Self { c0: self.c0 / n, c1: self.c1 / n }
    }

    /// Unit norm with the first nonzero amplitude real and non-negative.
    pub fn canonical(&self) -> Self {
        let u = self.normalized();
        let lead = if u.c0.norm() > 1e-15 { u.c0 } else { u.c1 };
        let phase = lead.conj() / lead.norm();
        Self { c0: u.c0 * phase, c1: u.c1 * phase }
    }

    /// The orthogonal direction (antipode on the Poincaré sphere).
    pub fn orthogonal(&self) -> Self {
        Self { c0: -self.c1.conj(), c1: self.c0.conj() }
    }

    /// Bloch vector ⟨z|σ|z⟩/⟨z|z⟩.
    pub fn bloch_vector(&self) -> [f64; 3] {
        let n = self.norm_sqr();
        let x = self.c0.conj() * self.c1;
        [2.0 * x.re / n, 2.0 * x.im / n, (self.c0.norm_sqr() - self.c1.norm_sqr()) / n]
    }

    /// (θ, φ) in the fixed Bloch chart.
    pub fn bloch_angles(&self) -> (f64, f64) {
        let [x, y, z] = self.bloch_vector();
        (z.clamp(-1.0, 1.0).acos(), y.atan2(x))
    }

    /// |z⟩⟨z| / ⟨z|z⟩
    pub fn density(&self) -> CMatrix {
        CMatrix::outer(&[self.c0, self.c1]).unwrap().scale(1.0 / self.norm_sqr())
    }

    /// Angle between the two points on the Poincaré sphere.
    pub fn bloch_angle_to(&self, other: &Self) -> f64 {
        let a = self.bloch_vector();
        let b = other.bloch_vector();
        let dot = a[0] * b[0] + a[1] * b[1] + a[2] * b[2];
        dot.clamp(-1.0, 1.0).acos()
    }
}

#[derive(Serialize, Deserialize)]
struct AmplitudeRepr {
    c0: [f64; 2],
    c1: [f64; 2],
}

impl Serialize for PolarizationVector {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        AmplitudeRepr { c0: [self.c0.re, self.c0.im], c1: [self.c1.re, self.c1.im] }.serialize(s)
    }
}

impl<'de> Deserialize<'de> for PolarizationVector {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let r = AmplitudeRepr::deserialize(d)?;
        PolarizationVector::new(C64::new(r.c0[0], r.c0[1]), C64::new(r.c1[0], r.c1[1]))
            .map_err(serde::de::Error::custom)
    }
}

fn check_outcome(a: Outcome) -> Result<()> {
    if a > 1 {
        return Err(Error::Range(format!("outcome must be 0 or 1, got {a}")));
    }
    Ok(())
}

/// Ideal polarizer effect Π^z_a = a·I + (−1)^a |z⟩⟨z|/⟨z|z⟩.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PolarizerEffect {
    pub direction: PolarizationVector,
    pub outcome: Outcome,
    pub matrix: CMatrix,
}

pub fn projector(z: &PolarizationVector, a: Outcome) -> Result<PolarizerEffect> {
    check_outcome(a)?;
    if !(z.norm_sqr() > MIN_NORM_SQR) {
        return Err(Error::ZeroVector(z.norm_sqr()));
    }
    let p = z.density();
    let matrix = if a == 0 { p } else { CMatrix::identity(2)? - p };
    Ok(PolarizerEffect { direction: *z, outcome: a, matrix })
}

/// tr{Π^x_a |û⟩⟨û|}; for a = 0 this is Malus' law |⟨x̂|û⟩|².
pub fn malus_probability(u: &PolarizationVector, x: &PolarizationVector, a: Outcome) -> Result<f64> {
    check_outcome(a)?;
    for v in [u, x] {
        if !(v.norm_sqr() > MIN_NORM_SQR) {
            return Err(Error::ZeroVector(v.norm_sqr()));
        }
    }
    let [x0, x1] = x.amplitudes();
    let [u0, u1] = u.amplitudes();
    let overlap = (x0.conj() * u0 + x1.conj() * u1).norm_sqr() / (x.norm_sqr() * u.norm_sqr());
    let p0 = overlap.clamp(0.0, 1.0);
    Ok(if a == 0 { p0 } else { 1.0 - p0 })
}

/// Malus detection probability from Bloch vectors: (1 + n_x·n_u)/2.
pub fn malus_from_bloch(u: &[f64; 3], x: &[f64; 3]) -> f64 {
    0.5 * (1.0 + u[0] * x[0] + u[1] * x[1] + u[2] * x[2])
}

/// Non-ideal polarizer with efficiency loss ε and background ε′.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct ImperfectPolarizer {
    pub eps: f64,
    pub eps_prime: f64,
    pub direction: PolarizationVector,
}

/// How the pair of imperfect effects is completed into a measurement.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum EffectReading {
    /// Π̃₀ = ε′I + (1−ε)Π₀ and Π̃₁ = I − Π̃₀.
    #[default]
    DetectionOnly,
    /// Π̃ₐ = ε′I + (1−ε)Πₐ for both outcomes; only complete when ε = 2ε′.
    BothOutcomes,
}

impl ImperfectPolarizer {
    pub fn new(eps: f64, eps_prime: f64, direction: PolarizationVector) -> Result<Self> {
        let p = Self { eps, eps_prime, direction };
        p.validate()?;
        Ok(p)
    }

    pub fn ideal(direction: PolarizationVector) -> Self {
        Self { eps: 0.0, eps_prime: 0.0, direction }
    }

    pub fn validate(&self) -> Result<()> {
        let (e, ep) = (self.eps, self.eps_prime);
        if !(e.is_finite() && ep.is_finite()) || ep < 0.0 || ep > e || e >= 1.0 {
            return Err(Error::Range(format!("need 0 ≤ ε′ ≤ ε < 1, got ε = {e}, ε′ = {ep}")));
        }
        if !(self.direction.norm_sqr() > MIN_NORM_SQR) {
            return Err(Error::ZeroVector(self.direction.norm_sqr()));
        }
        Ok(())
    }

    /// Probability of detection given tr(ρΠ₀).
    pub fn detection_from_ideal(&self, ideal: f64) -> f64 {
        self.eps_prime + (1.0 - self.eps) * ideal
    }

    /// Inverse of [`Self::detection_from_ideal`].
    pub fn ideal_from_detection(&self, freq: f64) -> f64 {
        (freq - self.eps_prime) / (1.0 - self.eps)
    }
}

pub fn imperfect_effect(p: &ImperfectPolarizer, a: Outcome) -> Result<CMatrix> {
    imperfect_effect_with(p, a, EffectReading::DetectionOnly)
}

pub fn imperfect_effect_with(p: &ImperfectPolarizer, a: Outcome, reading: EffectReading) -> Result<CMatrix> {
    p.validate()?;
    check_outcome(a)?;
    let id = CMatrix::identity(2)?;
    let detect = id.scale(p.eps_prime) + projector(&p.direction, 0)?.matrix.scale(1.0 - p.eps);
    match reading {
        EffectReading::DetectionOnly => Ok(if a == 0 { detect } else { id - detect }),
        EffectReading::BothOutcomes => {
            if (p.eps - 2.0 * p.eps_prime).abs() > 1e-12 {
                return Err(Error::Range(format!(
                    "both-outcome effects sum to identity only when ε = 2ε′ (ε = {}, ε′ = {})",
                    p.eps, p.eps_prime
                )));
            }
            Ok(id.scale(p.eps_prime) + projector(&p.direction, a)?.matrix.scale(1.0 - p.eps))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::FRAC_1_SQRT_2;

    fn v(a: f64, b: f64) -> PolarizationVector {
        PolarizationVector::from_real(a, b).unwrap()
    }

    #[test]
    fn rejects_zero_vector() {
        assert!(matches!(PolarizationVector::from_real(0.0, 1e-7), Err(Error::ZeroVector(_))));
        assert!(PolarizationVector::from_real(0.0, 1e-5).is_ok());
    }

    #[test]
    fn projector_examples() {
        let p = projector(&v(1.0, 0.0), 0).unwrap();
        assert_eq!(p.matrix, CMatrix::diag(&[1.0, 0.0]).unwrap());
        let p2 = projector(&v(2.0, 0.0), 0).unwrap();
        assert!(p2.matrix.max_abs_diff(&p.matrix) < 1e-15);
        let d = projector(&v(FRAC_1_SQRT_2, FRAC_1_SQRT_2), 1).unwrap();
        let want = CMatrix::from_real(&[&[0.5, -0.5], &[-0.5, 0.5]]).unwrap();
        assert!(d.matrix.max_abs_diff(&want) < 1e-15);
        assert!(projector(&v(1.0, 0.0), 2).is_err());
    }

    #[test]
    fn malus_examples() {
        assert_eq!(malus_probability(&v(1.0, 0.0), &v(0.0, 1.0), 0).unwrap(), 0.0);
        let h = FRAC_1_SQRT_2;
        assert!((malus_probability(&v(1.0, 0.0), &v(h, h), 0).unwrap() - 0.5).abs() < 1e-15);
        let circ = PolarizationVector::new(C64::new(h, 0.0), C64::new(0.0, h)).unwrap();
        assert!((malus_probability(&circ, &v(1.0, 0.0), 0).unwrap() - 0.5).abs() < 1e-15);
    }

    #[test]
    fn imperfect_examples() {
        let z = v(1.0, 0.0);
        let ideal = ImperfectPolarizer::ideal(z);
        for a in 0..2 {
            assert_eq!(imperfect_effect(&ideal, a).unwrap(), projector(&z, a).unwrap().matrix);
        }
        let p = ImperfectPolarizer::new(0.2, 0.1, z).unwrap();
        assert!(imperfect_effect(&p, 0).unwrap().max_abs_diff(&CMatrix::diag(&[0.9, 0.1]).unwrap()) < 1e-15);
        assert!(imperfect_effect(&p, 1).unwrap().max_abs_diff(&CMatrix::diag(&[0.1, 0.9]).unwrap()) < 1e-15);
        assert!(ImperfectPolarizer::new(0.1, 0.2, z).is_err());
        assert!(ImperfectPolarizer::new(1.0, 0.0, z).is_err());
        assert!(ImperfectPolarizer::new(0.2, -0.01, z).is_err());
    }

    #[test]
    fn both_outcome_reading_requires_balanced_parameters() {
        let z = v(0.6, 0.8);
        let bad = ImperfectPolarizer::new(0.2, 0.05, z).unwrap();
        assert!(imperfect_effect_with(&bad, 1, EffectReading::BothOutcomes).is_err());
        let ok = ImperfectPolarizer::new(0.2, 0.1, z).unwrap();
        let e0 = imperfect_effect_with(&ok, 0, EffectReading::BothOutcomes).unwrap();
        let e1 = imperfect_effect_with(&ok, 1, EffectReading::BothOutcomes).unwrap();
        assert!((e0 + e1).max_abs_diff(&CMatrix::identity(2).unwrap()) < 1e-15);
        assert!(e1.max_abs_diff(&imperfect_effect(&ok, 1).unwrap()) < 1e-15);
    }

    #[test]
    fn bloch_chart_round_trip() {
        for &(t, p) in &[(0.3, 1.2), (2.0, -2.5), (PI / 2.0, 0.0)] {
            let u = PolarizationVector::from_bloch(t, p);
            let (t2, p2) = u.bloch_angles();
            assert!((t - t2).abs() < 1e-12 && (p - p2).abs() < 1e-12);
            let n = u.bloch_vector();
            assert!((n[2] - t.cos()).abs() < 1e-12);
        }
        let u = PolarizationVector::from_bloch(0.7, 0.4);
        assert!((u.bloch_angle_to(&u.orthogonal()) - PI).abs() < 1e-7);
    }

    #[test]
    fn canonical_form() {
        let u = PolarizationVector::new(C64::new(0.0, 3.0), C64::new(4.0, 0.0)).unwrap();
        let c = u.canonical();
        assert!((c.norm_sqr() - 1.0).abs() < 1e-15);
        assert!(c.amplitudes()[0].im.abs() < 1e-15 && c.amplitudes()[0].re > 0.0);
        let w = PolarizationVector::new(C64::new(0.0, 0.0), C64::new(0.0, -2.0)).unwrap();
        assert!((w.canonical().amplitudes()[1] - C64::new(1.0, 0.0)).norm() < 1e-15);
    }

    #[test]
    fn json_form() {
        let u = PolarizationVector::new(C64::new(0.6, 0.0), C64::new(0.0, 0.8)).unwrap();
        let s = serde_json::to_string(&u).unwrap();
        assert_eq!(s, r#"{"c0":[0.6,0.0],"c1":[0.0,0.8]}"#);
        assert!(serde_json::from_str::<PolarizationVector>(r#"{"c0":[0,0],"c1":[0,0]}"#).is_err());
    }
}
