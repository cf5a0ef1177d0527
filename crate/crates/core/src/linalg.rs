//! Fixed-shape complex matrices for one and two qubits.
//!
//! Everything here works on 2×2 or 4×4 matrices stored inline, so a
//! [`CMatrix`] is `Copy` and all operations are pure functions.

use std::fmt;
use std::ops::{Add, Index, Mul, Sub};

use num_complex::Complex64;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};

pub type C64 = Complex64;

/// Entries closer than this to Hermitian are accepted and symmetrized.
pub const HERMITIAN_TOL: f64 = 1e-12;

/// Jacobi sweeps stop once the off-diagonal Frobenius mass drops below this.
const JACOBI_OFF_TOL: f64 = 1e-14;
const JACOBI_MAX_SWEEPS: usize = 64;

const ZERO: C64 = C64::new(0.0, 0.0);
const ONE: C64 = C64::new(1.0, 0.0);

/// Which tensor factor of a two-qubit operator to keep.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Side {
    A,
    B,
}

/// A 2×2 or 4×4 complex matrix, row-major.
#[derive(Clone, Copy, PartialEq)]
pub struct CMatrix {
    dim: usize,
    data: [C64; 16],
}

impl fmt::Debug for CMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "CMatrix({}x{})", self.dim, self.dim)?;
        for i in 0..self.dim {
            let row: Vec<String> = (0..self.dim)
                .map(|j| {
                    let z = self.get(i, j);
                    format!("{:+.6}{:+.6}i", z.re, z.im)
                })
                .collect();
            writeln!(f, "  [{}]", row.join(", "))?;
        }
        Ok(())
    }
}

fn check_dim(dim: usize) -> Result<()> {
    if dim == 2 || dim == 4 {
        Ok(())
    } else {
        Err(Error::Shape(format!("dimension must be 2 or 4, got {dim}")))
    }
}

impl CMatrix {
    pub fn zeros(dim: usize) -> Result<Self> {
        check_dim(dim)?;
        Ok(Self { dim, data: [ZERO; 16] })
    }

    pub fn identity(dim: usize) -> Result<Self> {
        let mut m = Self::zeros(dim)?;
        for i in 0..dim {
            m.data[i * dim + i] = ONE;
        }
        Ok(m)
    }

    /// Builds a matrix from row-major entries; the entry count fixes the dimension.
    pub fn from_entries(entries: &[C64]) -> Result<Self> {
        let dim = match entries.len() {
            4 => 2,
            16 => 4,
            n => return Err(Error::Shape(format!("expected 4 or 16 entries, got {n}"))),
        };
        let mut data = [ZERO; 16];
        data[..entries.len()].copy_from_slice(entries);
        Ok(Self { dim, data })
    }

    pub fn from_real(rows: &[&[f64]]) -> Result<Self> {
        let entries: Vec<C64> = rows.iter().flat_map(|r| r.iter().map(|&x| C64::new(x, 0.0))).collect();
        let m = Self::from_entries(&entries)?;
        if rows.len() != m.dim {
            return Err(Error::Shape("matrix must be square".into()));
        }
        Ok(m)
    }

    pub fn diag(values: &[f64]) -> Result<Self> {
        let mut m = Self::zeros(values.len())?;
        for (i, &v) in values.iter().enumerate() {
            m.data[i * m.dim + i] = C64::new(v, 0.0);
        }
        Ok(m)
    }

    /// |ψ⟩⟨ψ| for a ket of length 2 or 4 (not normalized here).
    pub fn outer(ket: &[C64]) -> Result<Self> {
        let mut m = Self::zeros(ket.len())?;
        let d = m.dim;
        for i in 0..d {
            for j in 0..d {
                m.data[i * d + j] = ket[i] * ket[j].conj();
            }
        }
        Ok(m)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn get(&self, i: usize, j: usize) -> C64 {
        self.data[i * self.dim + j]
    }

    pub fn entries(&self) -> &[C64] {
        &self.data[..self.dim * self.dim]
    }

    pub fn map(&self, f: impl Fn(C64) -> C64) -> Self {
        let mut out = *self;
        for z in out.data[..self.dim * self.dim].iter_mut() {
            *z = f(*z);
        }
        out
    }

    pub fn scale(&self, s: f64) -> Self {
        self.map(|z| z * s)
    }

    pub fn adjoint(&self) -> Self {
        let d = self.dim;
        let mut out = *self;
        for i in 0..d {
            for j in 0..d {
                out.data[i * d + j] = self.data[j * d + i].conj();
            }
        }
        out
    }

    pub fn transpose(&self) -> Self {
        let d = self.dim;
        let mut out = *self;
        for i in 0..d {
            for j in 0..d {
                out.data[i * d + j] = self.data[j * d + i];
            }
        }
        out
    }

    pub fn trace(&self) -> C64 {
        (0..self.dim).map(|i| self.get(i, i)).sum()
    }

    /// max |A[i][j] − conj(A[j][i])|
    pub fn hermiticity_defect(&self) -> f64 {
        let d = self.dim;
        let mut worst = 0.0f64;
        for i in 0..d {
            for j in i..d {
                worst = worst.max((self.get(i, j) - self.get(j, i).conj()).norm());
            }
        }
        worst
    }

    pub fn is_hermitian(&self) -> bool {
        self.hermiticity_defect() <= HERMITIAN_TOL
    }

    /// (A + A†)/2
    pub fn symmetrized(&self) -> Self {
        let adj = self.adjoint();
        let mut out = *self;
        for (z, w) in out.data.iter_mut().zip(adj.data.iter()) {
            *z = (*z + *w) * 0.5;
        }
        out
    }

    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        debug_assert_eq!(self.dim, other.dim);
        self.entries()
            .iter()
            .zip(other.entries())
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max)
    }

    /// tr(A·B) without forming the product.
    pub fn trace_product(&self, other: &Self) -> C64 {
        let d = self.dim;
        let mut acc = ZERO;
        for i in 0..d {
            for k in 0..d {
                acc += self.data[i * d + k] * other.data[k * d + i];
            }
        }
        acc
    }

    /// Expectation ⟨ψ|A|ψ⟩ for a ket of matching length.
    pub fn expectation(&self, ket: &[C64]) -> C64 {
        let d = self.dim;
        let mut acc = ZERO;
        for i in 0..d {
            let mut row = ZERO;
            for j in 0..d {
                row += self.data[i * d + j] * ket[j];
            }
            acc += ket[i].conj() * row;
        }
        acc
    }

    pub fn checked_add(&self, other: &Self) -> Result<Self> {
        same_dim(self, other)?;
        Ok(*self + *other)
    }

    pub fn checked_sub(&self, other: &Self) -> Result<Self> {
        same_dim(self, other)?;
        Ok(*self - *other)
    }

    pub fn checked_mul(&self, other: &Self) -> Result<Self> {
        same_dim(self, other)?;
        Ok(*self * *other)
    }
}

fn same_dim(a: &CMatrix, b: &CMatrix) -> Result<()> {
    if a.dim != b.dim {
        return Err(Error::Shape(format!("dimension mismatch: {} vs {}", a.dim, b.dim)));
    }
    Ok(())
}

impl Index<(usize, usize)> for CMatrix {
    type Output = C64;
    fn index(&self, (i, j): (usize, usize)) -> &C64 {
        &self.data[i * self.dim + j]
    }
}

impl Add for CMatrix {
    type Output = CMatrix;
    fn add(self, rhs: CMatrix) -> CMatrix {
        assert_eq!(self.dim, rhs.dim, "dimension mismatch");
        let mut out = self;
        for (z, w) in out.data.iter_mut().zip(rhs.data.iter()) {
            *z += *w;
        }
        out
    }
}

impl Sub for CMatrix {
    type Output = CMatrix;
    fn sub(self, rhs: CMatrix) -> CMatrix {
        assert_eq!(self.dim, rhs.dim, "dimension mismatch");
        let mut out = self;
        for (z, w) in out.data.iter_mut().zip(rhs.data.iter()) {
            *z -= *w;
        }
        out
    }
}

impl Mul for CMatrix {
    type Output = CMatrix;
    fn mul(self, rhs: CMatrix) -> CMatrix {
        assert_eq!(self.dim, rhs.dim, "dimension mismatch");
        let d = self.dim;
        let mut out = CMatrix { dim: d, data: [ZERO; 16] };
        for i in 0..d {
            for k in 0..d {
                let a = self.data[i * d + k];
                if a == ZERO {
                    continue;
                }
                for j in 0..d {
                    out.data[i * d + j] += a * rhs.data[k * d + j];
                }
            }
        }
        out
    }
}

impl Serialize for CMatrix {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        MatrixRepr::from(self).serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for CMatrix {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let repr = MatrixRepr::deserialize(deserializer)?;
        repr.try_into().map_err(serde::de::Error::custom)
    }
}

/// Wire form: `{"dim": n, "entries": [[re, im], ...]}` row-major.
#[derive(Serialize, Deserialize)]
struct MatrixRepr {
    dim: usize,
    entries: Vec<[f64; 2]>,
}

impl From<&CMatrix> for MatrixRepr {
    fn from(m: &CMatrix) -> Self {
        MatrixRepr { dim: m.dim, entries: m.entries().iter().map(|z| [z.re, z.im]).collect() }
    }
}

impl TryFrom<MatrixRepr> for CMatrix {
    type Error = Error;
    fn try_from(r: MatrixRepr) -> Result<Self> {
        check_dim(r.dim)?;
        if r.entries.len() != r.dim * r.dim {
            return Err(Error::Shape(format!(
                "dim {} needs {} entries, got {}",
                r.dim,
                r.dim * r.dim,
                r.entries.len()
            )));
        }
        let entries: Vec<C64> = r.entries.iter().map(|p| C64::new(p[0], p[1])).collect();
        CMatrix::from_entries(&entries)
    }
}

/// One eigenpair of a Hermitian matrix.
#[derive(Debug, Clone)]
pub struct EigenPair {
    pub value: f64,
    pub vector: Vec<C64>,
}

/// Eigen-decomposition of a Hermitian matrix by cyclic complex Jacobi
/// rotations. Eigenvalues come back ascending with orthonormal eigenvectors.
pub fn hermitian_eigensystem(m: &CMatrix) -> Result<Vec<EigenPair>> {
    let defect = m.hermiticity_defect();
    if defect > HERMITIAN_TOL {
        return Err(Error::Shape(format!("matrix is not Hermitian (defect {defect:e})")));
    }
    let d = m.dim;
    let mut a = m.symmetrized();
    let mut v = CMatrix::identity(d)?;
    let scale = a.entries().iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt().max(1.0);

    for _ in 0..JACOBI_MAX_SWEEPS {
        if off_diagonal_norm(&a) <= JACOBI_OFF_TOL * scale {
            break;
        }
        for p in 0..d {
            for q in (p + 1)..d {
                let apq = a.data[p * d + q];
                let mag = apq.norm();
                if mag == 0.0 {
                    continue;
                }
                // Phase so the (p,q) entry becomes real, then a real Givens rotation.
                let phase = apq / mag;
                let app = a.data[p * d + p].re;
                let aqq = a.data[q * d + q].re;
                let tau = (aqq - app) / (2.0 * mag);
                let t = if tau >= 0.0 {
                    1.0 / (tau + (1.0 + tau * tau).sqrt())
                } else {
                    -1.0 / (-tau + (1.0 + tau * tau).sqrt())
                };
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = t * c;
                // G acts on columns p and q: G_pp = c, G_pq = s·phase, G_qp = −s·conj(phase), G_qq = c
                let mut g = CMatrix::identity(d)?;
                g.data[p * d + p] = C64::new(c, 0.0);
                g.data[q * d + q] = C64::new(c, 0.0);
                g.data[p * d + q] = phase * s;
                g.data[q * d + p] = -phase.conj() * s;
                a = g.adjoint() * a * g;
                a.data[p * d + q] = ZERO;
                a.data[q * d + p] = ZERO;
                v = v * g;
            }
        }
    }

    let mut pairs: Vec<EigenPair> = (0..d)
        .map(|k| EigenPair {
            value: a.data[k * d + k].re,
            vector: (0..d).map(|i| v.data[i * d + k]).collect(),
        })
        .collect();
    pairs.sort_by(|x, y| x.value.total_cmp(&y.value));
    Ok(pairs)
}

fn off_diagonal_norm(a: &CMatrix) -> f64 {
    let d = a.dim;
    let mut acc = 0.0;
    for i in 0..d {
        for j in 0..d {
            if i != j {
                acc += a.data[i * d + j].norm_sqr();
            }
        }
    }
    acc.sqrt()
}

pub fn eigenvalues(m: &CMatrix) -> Result<Vec<f64>> {
    Ok(hermitian_eigensystem(m)?.into_iter().map(|p| p.value).collect())
}

pub fn min_eigenvalue(m: &CMatrix) -> Result<f64> {
    Ok(eigenvalues(m)?[0])
}

/// Σ λᵢ vᵢ vᵢ†
pub fn reconstruct(pairs: &[EigenPair]) -> Result<CMatrix> {
    let d = pairs.len();
    let mut out = CMatrix::zeros(d)?;
    for p in pairs {
        out = out + CMatrix::outer(&p.vector)?.scale(p.value);
    }
    Ok(out)
}

/// Kronecker product: entry (2i+k, 2j+l) = a[i][j]·b[k][l].
pub fn tensor_product(a: &CMatrix, b: &CMatrix) -> Result<CMatrix> {
    if a.dim != 2 || b.dim != 2 {
        return Err(Error::Shape(format!("tensor_product needs 2×2 factors, got {} and {}", a.dim, b.dim)));
    }
    let mut out = CMatrix::zeros(4)?;
    for i in 0..2 {
        for j in 0..2 {
            for k in 0..2 {
                for l in 0..2 {
                    out.data[(2 * i + k) * 4 + (2 * j + l)] = a.get(i, j) * b.get(k, l);
                }
            }
        }
    }
    Ok(out)
}

/// Traces out one qubit of a 4×4 operator and returns the factor on `keep`.
pub fn partial_trace(m: &CMatrix, keep: Side) -> Result<CMatrix> {
    if m.dim != 4 {
        return Err(Error::Shape(format!("partial_trace needs a 4×4 matrix, got {}", m.dim)));
    }
    let mut out = CMatrix::zeros(2)?;
    for r in 0..2 {
        for c in 0..2 {
            let mut acc = ZERO;
            for t in 0..2 {
                acc += match keep {
                    Side::A => m.get(2 * r + t, 2 * c + t),
                    Side::B => m.get(2 * t + r, 2 * t + c),
                };
            }
            out.data[r * 2 + c] = acc;
        }
    }
    Ok(out)
}

/// Transpose on the B factor: (2i+k, 2j+l) ↦ (2i+l, 2j+k).
pub fn partial_transpose(m: &CMatrix) -> Result<CMatrix> {
    if m.dim != 4 {
        return Err(Error::Shape(format!("partial_transpose needs a 4×4 matrix, got {}", m.dim)));
    }
    let mut out = *m;
    for i in 0..2 {
        for j in 0..2 {
            for k in 0..2 {
                for l in 0..2 {
                    out.data[(2 * i + k) * 4 + (2 * j + l)] = m.data[(2 * i + l) * 4 + (2 * j + k)];
                }
            }
        }
    }
    Ok(out)
}

/// ½·Σ|eigenvalues(a − b)| for two Hermitian matrices of equal dimension.
pub fn trace_distance(a: &CMatrix, b: &CMatrix) -> Result<f64> {
    let diff = a.checked_sub(b)?;
    let eig = eigenvalues(&diff)?;
    Ok(0.5 * eig.iter().map(|x| x.abs()).sum::<f64>())
}

pub fn pauli_x() -> CMatrix {
    CMatrix::from_real(&[&[0.0, 1.0], &[1.0, 0.0]]).unwrap()
}

pub fn pauli_y() -> CMatrix {
    CMatrix::from_entries(&[ZERO, C64::new(0.0, -1.0), C64::new(0.0, 1.0), ZERO]).unwrap()
}

pub fn pauli_z() -> CMatrix {
    CMatrix::diag(&[1.0, -1.0]).unwrap()
}
