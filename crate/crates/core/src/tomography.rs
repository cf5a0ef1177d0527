//! Single-photon state tomography with non-ideal polarizers.
//!
//! Each record gives a polarizer direction, its (ε, ε′) response and the
//! observed detection frequency. Frequencies are first mapped back to ideal
//! projector expectations, then the Bloch parameters are obtained by a
//! least-squares pseudo-inverse together with the normalization row.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{self, CMatrix, C64};
use crate::polarization::{ImperfectPolarizer, PolarizationVector};
use crate::state::{self, DensityMatrix};

/// Reconstructions with eigenvalues above this are projected onto the state space.
pub const PROJECTION_FLOOR: f64 = -1e-6;

const RANK_TOL: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct TomographyRecord {
    pub direction: PolarizationVector,
    pub eps: f64,
    pub eps_prime: f64,
    pub freq: f64,
}

impl TomographyRecord {
    pub fn polarizer(&self) -> Result<ImperfectPolarizer> {
        ImperfectPolarizer::new(self.eps, self.eps_prime, self.direction)
    }
}

/// Exact detection frequencies for `rho` under the given polarizers.
pub fn simulate(rho: &DensityMatrix, polarizers: &[ImperfectPolarizer]) -> Result<Vec<TomographyRecord>> {
    polarizers
        .iter()
        .map(|p| {
            p.validate()?;
            let ideal = rho.expectation(&p.direction.density())?;
            Ok(TomographyRecord {
                direction: p.direction,
                eps: p.eps,
                eps_prime: p.eps_prime,
                freq: p.detection_from_ideal(ideal),
            })
        })
        .collect()
}

pub fn tomographic_reconstruct(stats: &[TomographyRecord]) -> Result<DensityMatrix> {
    // ρ = (a₀ I + a·σ)/2; a row (1, n)/2 per record plus tr ρ = a₀ = 1.
    let mut rows: Vec<([f64; 4], f64)> = Vec::with_capacity(stats.len() + 1);
    rows.push(([1.0, 0.0, 0.0, 0.0], 1.0));
    for r in stats {
        let pol = r.polarizer()?;
        if !r.freq.is_finite() {
            return Err(Error::Range(format!("frequency {} is not finite", r.freq)));
        }
        let n = r.direction.bloch_vector();
        rows.push(([0.5, 0.5 * n[0], 0.5 * n[1], 0.5 * n[2]], pol.ideal_from_detection(r.freq)));
    }

    let mut gram = [[0.0f64; 4]; 4];
    let mut rhs = [0.0f64; 4];
    for (d, t) in &rows {
        for i in 0..4 {
            rhs[i] += d[i] * t;
            for j in 0..4 {
                gram[i][j] += d[i] * d[j];
            }
        }
    }
    let entries: Vec<C64> = gram.iter().flat_map(|r| r.iter().map(|&x| C64::new(x, 0.0))).collect();
    let pairs = linalg::hermitian_eigensystem(&CMatrix::from_entries(&entries)?)?;
    let top = pairs.last().map(|p| p.value).unwrap_or(0.0);
    let rank = pairs.iter().filter(|p| p.value > RANK_TOL * top.max(1.0)).count();
    if rank < 4 {
        return Err(Error::NotTomographicallyComplete { rank });
    }
    // a = Σ vᵢ (vᵢ† rhs)/λᵢ; the sum is real because the Gram matrix is.
    let mut a = [0.0f64; 4];
    for p in &pairs {
        let proj: C64 = p.vector.iter().zip(rhs.iter()).map(|(v, r)| v.conj() * r).sum::<C64>() / p.value;
        for i in 0..4 {
            a[i] += (p.vector[i] * proj).re;
        }
    }

    let half = 0.5;
    let m = CMatrix::from_entries(&[
        C64::new(half * (a[0] + a[3]), 0.0),
        C64::new(half * a[1], -half * a[2]),
        C64::new(half * a[1], half * a[2]),
        C64::new(half * (a[0] - a[3]), 0.0),
    ])?;
    let min = linalg::min_eigenvalue(&m)?;
    if min < PROJECTION_FLOOR {
        return Err(Error::InconsistentStatistics { min_eigenvalue: min });
    }
    if min < 0.0 || (m.trace().re - 1.0).abs() > state::TRACE_TOL {
        return state::project_to_state(&m);
    }
    DensityMatrix::new(m)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn axes() -> Vec<PolarizationVector> {
        vec![
            PolarizationVector::from_bloch(PI / 2.0, 0.0),
            PolarizationVector::from_bloch(PI / 2.0, PI / 2.0),
            PolarizationVector::from_bloch(0.0, 0.0),
        ]
    }

    #[test]
    fn maximally_mixed_from_three_axes() {
        let stats: Vec<TomographyRecord> = axes()
            .into_iter()
            .map(|d| TomographyRecord { direction: d, eps: 0.0, eps_prime: 0.0, freq: 0.5 })
            .collect();
        let rho = tomographic_reconstruct(&stats).unwrap();
        assert!(rho.matrix().max_abs_diff(&CMatrix::identity(2).unwrap().scale(0.5)) < 1e-12);
    }

    #[test]
    fn imperfect_pure_state() {
        let pols: Vec<ImperfectPolarizer> =
            axes().into_iter().map(|d| ImperfectPolarizer::new(0.2, 0.1, d).unwrap()).collect();
        let zero = DensityMatrix::from_polarization(&PolarizationVector::horizontal());
        let stats = simulate(&zero, &pols).unwrap();
        let rho = tomographic_reconstruct(&stats).unwrap();
        assert!(rho.matrix().max_abs_diff(zero.matrix()) < 1e-10);
    }

    #[test]
    fn rank_deficient_directions() {
        let d = PolarizationVector::from_bloch(PI / 2.0, 0.0);
        let stats = vec![
            TomographyRecord { direction: d, eps: 0.0, eps_prime: 0.0, freq: 0.5 },
            TomographyRecord { direction: d.orthogonal(), eps: 0.0, eps_prime: 0.0, freq: 0.5 },
            TomographyRecord { direction: PolarizationVector::horizontal(), eps: 0.0, eps_prime: 0.0, freq: 0.5 },
        ];
        assert!(matches!(tomographic_reconstruct(&stats), Err(Error::NotTomographicallyComplete { rank: 3 })));
    }

    #[test]
    fn inconsistent_statistics() {
        let stats: Vec<TomographyRecord> = axes()
            .into_iter()
            .map(|d| TomographyRecord { direction: d, eps: 0.0, eps_prime: 0.0, freq: 1.0 })
            .collect();
        assert!(matches!(tomographic_reconstruct(&stats), Err(Error::InconsistentStatistics { .. })));
    }

    #[test]
    fn slightly_unphysical_is_projected() {
        let mut stats: Vec<TomographyRecord> = axes()
            .into_iter()
            .map(|d| TomographyRecord { direction: d, eps: 0.0, eps_prime: 0.0, freq: 0.5 })
            .collect();
        stats[2].freq = 1.0 + 2e-7;
        let rho = tomographic_reconstruct(&stats).unwrap();
        assert!(rho.min_eigenvalue() >= -1e-12);
    }
}
