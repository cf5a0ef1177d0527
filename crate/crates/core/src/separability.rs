//! Two-qubit separability: the PPT decision, separable states built from
//! subensemble weights, and witness values.

use serde::{Deserialize, Serialize};

use crate::behavior::{BellFunctional, SettingsSet};
use crate::crypto::SubensembleModel;
use crate::error::{Error, Result};
use crate::linalg::{self, CMatrix};
use crate::polarization::PolarizationVector;
use crate::state::DensityMatrix;

/// Half-width of the band around zero reported as [`PptClass::Boundary`].
pub const BOUNDARY_BAND: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PptClass {
    Separable,
    Boundary,
    Entangled,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct SeparabilityVerdict {
    /// min eigenvalue of the partial transpose ≥ −1e-10; boundary states count as separable.
    pub separable: bool,
    pub class: PptClass,
    pub min_partial_transpose_eigenvalue: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub witness_value: Option<f64>,
}

/// Exact for two qubits: ρ is separable iff ρ^{T_B} ⪰ 0.
pub fn ppt_check(rho: &DensityMatrix) -> Result<SeparabilityVerdict> {
    if rho.dim() != 4 {
        return Err(Error::InvalidState(format!("PPT needs a two-qubit state, got dimension {}", rho.dim())));
    }
    if rho.min_eigenvalue() < -crate::state::PSD_TOL {
        return Err(Error::InvalidState("operator is not positive semidefinite".into()));
    }
    let min = linalg::min_eigenvalue(&linalg::partial_transpose(rho.matrix())?)?;
    let class = if min > BOUNDARY_BAND {
        PptClass::Separable
    } else if min >= -BOUNDARY_BAND {
        PptClass::Boundary
    } else {
        PptClass::Entangled
    };
    Ok(SeparabilityVerdict { separable: class != PptClass::Entangled, class, min_partial_transpose_eigenvalue: min, witness_value: None })
}

/// Σ P(u,v) |u⟩⟨u| ⊗ |v⟩⟨v|.
pub fn separable_from_weights(parts: &[(f64, PolarizationVector, PolarizationVector)]) -> Result<DensityMatrix> {
    if parts.is_empty() {
        return Err(Error::Range("no weights given".into()));
    }
    let total: f64 = parts.iter().map(|p| p.0).sum();
    if parts.iter().any(|p| !(p.0 >= 0.0)) || (total - 1.0).abs() > 1e-12 {
        return Err(Error::Range(format!("weights must be ≥ 0 and sum to 1 (sum {total})")));
    }
    let mut m = CMatrix::zeros(4)?;
    for (w, u, v) in parts {
        let term = linalg::tensor_product(&u.density(), &v.density())?;
        m = m.checked_add(&term.scale(*w))?;
    }
    DensityMatrix::new(m)
}

/// The separable state behind a subensemble model, Σ P(u,v)|u⟩⟨u|⊗|v⟩⟨v|.
pub fn separable_from_model(model: &SubensembleModel) -> Result<DensityMatrix> {
    let parts: Vec<_> = model.entries.iter().map(|e| (e.weight, e.u, e.v)).collect();
    separable_from_weights(&parts)
}

/// tr(Wρ) for a Hermitian W.
pub fn witness_value(w: &CMatrix, rho: &DensityMatrix) -> Result<f64> {
    if w.dim() != rho.dim() {
        return Err(Error::Shape(format!("witness dim {} vs state dim {}", w.dim(), rho.dim())));
    }
    if !w.is_hermitian() {
        return Err(Error::InvalidState(format!("witness is not Hermitian (defect {:e})", w.hermiticity_defect())));
    }
    Ok(rho.matrix().trace_product(w).re)
}

/// W = (|e⟩⟨e|)^{T_B} for the eigenvector e of ρ^{T_B} with the smallest
/// eigenvalue, so tr(Wρ) equals that eigenvalue and tr(Wσ) ≥ 0 on every
/// separable σ.
pub fn ppt_witness(rho: &DensityMatrix) -> Result<CMatrix> {
    if rho.dim() != 4 {
        return Err(Error::InvalidState(format!("PPT needs a two-qubit state, got dimension {}", rho.dim())));
    }
    let pairs = linalg::hermitian_eigensystem(&linalg::partial_transpose(rho.matrix())?)?;
    linalg::partial_transpose(&CMatrix::outer(&pairs[0].vector)?)
}

/// B = Σ c(a,b|x,y) Πˣₐ ⊗ Πʸ_b, so that tr(Bρ) is the functional's value on
/// the quantum behavior of ρ.
pub fn bell_operator(f: &BellFunctional, s: &SettingsSet) -> Result<CMatrix> {
    if f.n_alice() != s.n_alice() || f.n_bob() != s.n_bob() {
        return Err(Error::Shape("functional and settings disagree on setting counts".into()));
    }
    let mut m = CMatrix::zeros(4)?;
    for (x, sa) in s.alice.iter().enumerate() {
        let ea = sa.effects()?;
        for (y, sb) in s.bob.iter().enumerate() {
            let eb = sb.effects()?;
            for a in 0..2 {
                for b in 0..2 {
                    let c = f.get(a, b, x, y);
                    if c != 0.0 {
                        m = m.checked_add(&linalg::tensor_product(&ea[a], &eb[b])?.scale(c))?;
                    }
                }
            }
        }
    }
    Ok(m)
}

/// The CHSH witness 2·I − B_CHSH: tr(Wρ) < 0 certifies a CHSH violation.
pub fn chsh_witness(s: &SettingsSet) -> Result<CMatrix> {
    let b = bell_operator(&BellFunctional::chsh(), s)?;
    CMatrix::identity(4)?.scale(2.0).checked_sub(&b)
}
