//! Density matrices for one and two photons.

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};
use crate::linalg::{self, CMatrix, Side, C64};
use crate::polarization::PolarizationVector;

pub const TRACE_TOL: f64 = 1e-10;
pub const PSD_TOL: f64 = 1e-10;

/// A positive, unit-trace Hermitian 2×2 or 4×4 matrix.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DensityMatrix {
    matrix: CMatrix,
}

impl DensityMatrix {
    /// Validates Hermiticity, trace and positivity.
    pub fn new(matrix: CMatrix) -> Result<Self> {
        if !matrix.is_hermitian() {
            return Err(Error::InvalidState(format!(
                "not Hermitian (defect {:e})",
                matrix.hermiticity_defect()
            )));
        }
        let m = matrix.symmetrized();
        let tr = m.trace().re;
        if (tr - 1.0).abs() > TRACE_TOL {
            return Err(Error::InvalidState(format!("trace is {tr}, expected 1")));
        }
        let min = linalg::min_eigenvalue(&m)?;
        if min < -PSD_TOL {
            return Err(Error::InvalidState(format!("negative eigenvalue {min:e}")));
        }
        Ok(Self { matrix: m })
    }

    /// Accepts any Hermitian unit-trace operator, e.g. a normalized
    /// entanglement witness. Positivity is not checked.
    pub fn new_unchecked_positivity(matrix: CMatrix) -> Result<Self> {
        if !matrix.is_hermitian() {
            return Err(Error::InvalidState("not Hermitian".into()));
        }
        let m = matrix.symmetrized();
        let tr = m.trace().re;
        if (tr - 1.0).abs() > TRACE_TOL {
            return Err(Error::InvalidState(format!("trace is {tr}, expected 1")));
        }
        Ok(Self { matrix: m })
    }

    pub fn pure(ket: &[C64]) -> Result<Self> {
        let n: f64 = ket.iter().map(|z| z.norm_sqr()).sum();
        if !(n > 1e-12) {
            return Err(Error::InvalidState("zero ket".into()));
        }
        Self::new(CMatrix::outer(ket)?.scale(1.0 / n))
    }

    pub fn from_polarization(u: &PolarizationVector) -> Self {
        Self { matrix: u.density() }
    }

    pub fn maximally_mixed(dim: usize) -> Result<Self> {
        Ok(Self { matrix: CMatrix::identity(dim)?.scale(1.0 / dim as f64) })
    }

    /// (|01⟩ − |10⟩)/√2, perfectly anticorrelated in every basis.
    pub fn singlet() -> Self {
        let h = std::f64::consts::FRAC_1_SQRT_2;
        let z = C64::new(0.0, 0.0);
        Self::pure(&[z, C64::new(h, 0.0), C64::new(-h, 0.0), z]).unwrap()
    }

    /// w·singlet + (1 − w)·I/4.
    pub fn werner(w: f64) -> Result<Self> {
        let m = Self::singlet().matrix.scale(w) + CMatrix::identity(4)?.scale((1.0 - w) / 4.0);
        Self::new(m)
    }

    pub fn product(a: &DensityMatrix, b: &DensityMatrix) -> Result<Self> {
        Self::new(linalg::tensor_product(&a.matrix, &b.matrix)?)
    }

    /// Convex mixture Σ wᵢ ρᵢ; weights must be non-negative and sum to one.
    pub fn mixture(parts: &[(f64, DensityMatrix)]) -> Result<Self> {
        let first = parts.first().ok_or_else(|| Error::InvalidState("empty mixture".into()))?;
        let mut acc = CMatrix::zeros(first.1.dim())?;
        for (w, rho) in parts {
            if *w < 0.0 {
                return Err(Error::InvalidState(format!("negative mixture weight {w}")));
            }
            acc = acc.checked_add(&rho.matrix.scale(*w))?;
        }
        Self::new(acc)
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.matrix
    }

    pub fn dim(&self) -> usize {
        self.matrix.dim()
    }

    pub fn reduced(&self, keep: Side) -> Result<DensityMatrix> {
        Ok(Self { matrix: linalg::partial_trace(&self.matrix, keep)? })
    }

    pub fn expectation(&self, op: &CMatrix) -> Result<f64> {
        if op.dim() != self.dim() {
            return Err(Error::Shape(format!("operator dim {} vs state dim {}", op.dim(), self.dim())));
        }
        Ok(self.matrix.trace_product(op).re)
    }

    pub fn trace_distance(&self, other: &DensityMatrix) -> Result<f64> {
        linalg::trace_distance(&self.matrix, &other.matrix)
    }

    pub fn min_eigenvalue(&self) -> f64 {
        linalg::min_eigenvalue(&self.matrix).expect("density matrices are Hermitian")
    }
}

impl Serialize for DensityMatrix {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        self.matrix.serialize(s)
    }
}

impl<'de> Deserialize<'de> for DensityMatrix {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let m = CMatrix::deserialize(d)?;
        DensityMatrix::new(m).map_err(serde::de::Error::custom)
    }
}

/// Nearest (Frobenius) positive unit-trace matrix: eigenvalues projected
/// onto the probability simplex, eigenvectors kept.
pub fn project_to_state(m: &CMatrix) -> Result<DensityMatrix> {
    let pairs = linalg::hermitian_eigensystem(m)?;
    let values: Vec<f64> = pairs.iter().map(|p| p.value).collect();
    let projected = project_to_simplex(&values);
    let mut out = CMatrix::zeros(m.dim())?;
    for (p, &w) in pairs.iter().zip(&projected) {
        out = out + CMatrix::outer(&p.vector)?.scale(w);
    }
    DensityMatrix::new(out.symmetrized())
}

/// Euclidean projection onto {x ≥ 0, Σx = 1}.
pub fn project_to_simplex(v: &[f64]) -> Vec<f64> {
    let mut sorted = v.to_vec();
    sorted.sort_by(|a, b| b.total_cmp(a));
    let mut cum = 0.0;
    let mut shift = 0.0;
    for (k, &s) in sorted.iter().enumerate() {
        cum += s;
        let t = (cum - 1.0) / (k + 1) as f64;
        if s - t > 0.0 {
            shift = t;
        }
    }
    v.iter().map(|&x| (x - shift).max(0.0)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn validation() {
        assert!(DensityMatrix::new(CMatrix::diag(&[0.5, 0.6]).unwrap()).is_err());
        assert!(DensityMatrix::new(CMatrix::diag(&[1.2, -0.2]).unwrap()).is_err());
        assert!(DensityMatrix::new(CMatrix::diag(&[0.3, 0.7]).unwrap()).is_ok());
        let w = CMatrix::diag(&[1.2, -0.2]).unwrap();
        assert!(DensityMatrix::new_unchecked_positivity(w).is_ok());
    }

    #[test]
    fn werner_range() {
        assert!(DensityMatrix::werner(1.0).is_ok());
        assert!(DensityMatrix::werner(-1.0 / 3.0).is_ok());
        assert!(DensityMatrix::werner(1.1).is_err());
    }

    #[test]
    fn simplex_projection() {
        let p = project_to_simplex(&[1.1, -0.1]);
        assert!((p[0] - 1.0).abs() < 1e-15 && p[1] == 0.0);
        let q = project_to_simplex(&[0.25, 0.25, 0.25, 0.25]);
        assert!(q.iter().all(|x| (x - 0.25).abs() < 1e-15));
    }

    #[test]
    fn json_round_trip() {
        let s = serde_json::to_string(&DensityMatrix::singlet()).unwrap();
        let back: DensityMatrix = serde_json::from_str(&s).unwrap();
        assert!(back.matrix().max_abs_diff(DensityMatrix::singlet().matrix()) < 1e-16);
    }
}
