//! Finite point sets on the Poincaré sphere and their covering angles.
//!
//! The covering angle is measured on a latitude-longitude probe mesh. Each
//! probe is the centre of a mesh cell, and every point of the cell lies within
//! the cell radius of it, so "nearest-point distance at the probe + cell
//! radius" bounds the true covering angle from above. That bound is what the
//! membership slack uses.

use std::f64::consts::PI;

use rayon::prelude::*;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};
use crate::polarization::PolarizationVector;

/// Minimum number of probes used to measure a covering angle.
pub const MIN_PROBES: usize = 100_000;

/// Points closer than this (Bloch angle) are treated as duplicates.
const DUPLICATE_ANGLE: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq)]
pub struct PolarizationGrid {
    points: Vec<PolarizationVector>,
    bloch: Vec<[f64; 3]>,
    covering_angle: f64,
    covering_bound: f64,
    probes: usize,
}

fn dot(a: &[f64; 3], b: &[f64; 3]) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

/// Pole-including Fibonacci lattice: zᵢ = 1 − 2i/(n−1), φᵢ = i·π(3 − √5).
pub fn fibonacci_points(n: usize) -> Vec<[f64; 3]> {
    let golden = PI * (3.0 - 5f64.sqrt());
    (0..n)
        .map(|i| {
            let z = if n == 1 { 1.0 } else { 1.0 - 2.0 * i as f64 / (n - 1) as f64 };
            let r = (1.0 - z * z).max(0.0).sqrt();
            let phi = i as f64 * golden;
            [r * phi.cos(), r * phi.sin(), z]
        })
        .collect()
}

pub fn build_grid(n: usize) -> Result<PolarizationGrid> {
    if n < 2 {
        return Err(Error::Range(format!("grid needs at least 2 points, got {n}")));
    }
    PolarizationGrid::from_bloch_vectors(fibonacci_points(n))
}

/// sin(θ/2): the largest change of any polarizer probability when a pure
/// state moves by Bloch angle θ.
pub fn slack_for_angle(angle: f64) -> f64 {
    (angle.clamp(0.0, PI) / 2.0).sin()
}

/// Rigorous per-grid slack, from the certified covering bound.
pub fn slack_bound(g: &PolarizationGrid) -> f64 {
    slack_for_angle(g.covering_bound)
}

/// Sorted-by-z index for nearest-neighbour queries.
struct ZIndex<'a> {
    pts: &'a [[f64; 3]],
    order: Vec<usize>,
    zs: Vec<f64>,
}

impl<'a> ZIndex<'a> {
    fn new(pts: &'a [[f64; 3]]) -> Self {
        let mut order: Vec<usize> = (0..pts.len()).collect();
        order.sort_by(|&a, &b| pts[a][2].total_cmp(&pts[b][2]));
        let zs = order.iter().map(|&i| pts[i][2]).collect();
        Self { pts, order, zs }
    }

    /// Largest dot product with any point, i.e. cos of the nearest angle.
    fn best_dot(&self, q: &[f64; 3]) -> f64 {
        let start = self.zs.partition_point(|&z| z < q[2]);
        let mut best = -2.0f64;
        // chord² = 2 − 2·dot ≥ Δz², so points with Δz² > 2 − 2·best are useless.
        let mut lo = start;
        let mut hi = start;
        loop {
            let limit = (2.0 - 2.0 * best).max(0.0);
            let mut advanced = false;
            if hi < self.zs.len() {
                let dz = self.zs[hi] - q[2];
                if dz * dz <= limit {
                    best = best.max(dot(&self.pts[self.order[hi]], q));
                    hi += 1;
                    advanced = true;
                }
            }
            if lo > 0 {
                let dz = q[2] - self.zs[lo - 1];
                if dz * dz <= limit {
                    best = best.max(dot(&self.pts[self.order[lo - 1]], q));
                    lo -= 1;
                    advanced = true;
                }
            }
            if !advanced {
                return best;
            }
        }
    }
}

/// Returns (sampled covering angle, certified upper bound, probe count).
fn measure_covering(pts: &[[f64; 3]]) -> (f64, f64, usize) {
    let n = pts.len();
    let h = (4.0 * PI / MIN_PROBES as f64).sqrt().min(0.4 / (n as f64).sqrt());
    // An odd number of bands puts one band centre on the equator.
    let mut bands = (PI / h).ceil() as usize;
    if bands % 2 == 0 {
        bands += 1;
    }
    let dtheta = PI / bands as f64;
    let index = ZIndex::new(pts);
    let per_band: Vec<(f64, f64, usize)> = (0..bands)
        .into_par_iter()
        .map(|b| {
            let theta = (b as f64 + 0.5) * dtheta;
            let sin_max = if theta - dtheta / 2.0 <= PI / 2.0 && theta + dtheta / 2.0 >= PI / 2.0 {
                1.0
            } else {
                (theta - dtheta / 2.0).sin().max((theta + dtheta / 2.0).sin())
            };
            let cells = ((2.0 * PI * sin_max / h).ceil() as usize).max(1);
            let dphi = 2.0 * PI / cells as f64;
            let radius = dtheta / 2.0 + sin_max * dphi / 2.0;
            let (st, ct) = theta.sin_cos();
            let mut worst = 0.0f64;
            for c in 0..cells {
                let phi = (c as f64 + 0.5) * dphi;
                let q = [st * phi.cos(), st * phi.sin(), ct];
                worst = worst.max(index.best_dot(&q).clamp(-1.0, 1.0).acos());
            }
            (worst, worst + radius, cells)
        })
        .collect();
    let mut sampled = 0.0f64;
    let mut bound = 0.0f64;
    let mut probes = 0;
    for (s, u, c) in per_band {
        sampled = sampled.max(s);
        bound = bound.max(u);
        probes += c;
    }
    (sampled, bound.min(PI), probes)
}

impl PolarizationGrid {
    /// Builds a grid from Bloch vectors (normalized here); duplicates are dropped.
    pub fn from_bloch_vectors(vectors: Vec<[f64; 3]>) -> Result<Self> {
        let mut bloch: Vec<[f64; 3]> = Vec::with_capacity(vectors.len());
        let mut points = Vec::with_capacity(vectors.len());
        for v in vectors {
            let p = PolarizationVector::from_bloch_vector(v)?;
            let n = p.bloch_vector();
            bloch.push(n);
            points.push(p.canonical());
        }
        dedupe(&mut points, &mut bloch);
        if points.len() < 2 {
            return Err(Error::Range("grid needs at least 2 distinct points".into()));
        }
        let (covering_angle, covering_bound, probes) = measure_covering(&bloch);
        Ok(Self { points, bloch, covering_angle, covering_bound, probes })
    }

    pub fn from_points(points: &[PolarizationVector]) -> Result<Self> {
        Self::from_bloch_vectors(points.iter().map(|p| p.bloch_vector()).collect())
    }

    /// A new grid with `extra` appended (existing ids are kept).
    pub fn with_points(&self, extra: &[PolarizationVector]) -> Result<Self> {
        let mut v = self.bloch.clone();
        v.extend(extra.iter().map(|p| p.bloch_vector()));
        Self::from_bloch_vectors(v)
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn points(&self) -> &[PolarizationVector] {
        &self.points
    }

    pub fn bloch_vectors(&self) -> &[[f64; 3]] {
        &self.bloch
    }

    /// Largest nearest-point distance found over the probe mesh.
    pub fn covering_angle(&self) -> f64 {
        self.covering_angle
    }

    /// Upper bound on the true covering angle.
    pub fn covering_bound(&self) -> f64 {
        self.covering_bound
    }

    pub fn probes(&self) -> usize {
        self.probes
    }

    /// Id of the point nearest to `u`, with its Bloch angle.
    pub fn nearest(&self, u: &PolarizationVector) -> (usize, f64) {
        let n = u.bloch_vector();
        let mut best = (0, -2.0);
        for (i, b) in self.bloch.iter().enumerate() {
            let d = dot(b, &n);
            if d > best.1 {
                best = (i, d);
            }
        }
        (best.0, best.1.clamp(-1.0, 1.0).acos())
    }

    pub fn contains(&self, u: &PolarizationVector) -> bool {
        self.nearest(u).1 <= DUPLICATE_ANGLE
    }
}

fn dedupe(points: &mut Vec<PolarizationVector>, bloch: &mut Vec<[f64; 3]>) {
    let cos_tol = DUPLICATE_ANGLE.cos();
    let mut keep: Vec<usize> = Vec::with_capacity(bloch.len());
    for i in 0..bloch.len() {
        let dup = keep.iter().any(|&j| (bloch[j][2] - bloch[i][2]).abs() < 1e-8 && dot(&bloch[j], &bloch[i]) >= cos_tol);
        if !dup {
            keep.push(i);
        }
    }
    *points = keep.iter().map(|&i| points[i]).collect();
    *bloch = keep.iter().map(|&i| bloch[i]).collect();
}

#[derive(Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
struct GridFile {
    /// Bloch angles (θ, φ) per point, in id order.
    points: Vec<[f64; 2]>,
    covering_angle: f64,
    covering_bound: f64,
    probes: usize,
}

impl Serialize for PolarizationGrid {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        GridFile {
            points: self.points.iter().map(|p| {
                let (t, f) = p.bloch_angles();
                [t, f]
            }).collect(),
            covering_angle: self.covering_angle,
            covering_bound: self.covering_bound,
            probes: self.probes,
        }
        .serialize(s)
    }
}

impl<'de> Deserialize<'de> for PolarizationGrid {
    /// Stored covering figures are ignored and re-measured.
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let f = GridFile::deserialize(d)?;
        let pts: Vec<PolarizationVector> = f.points.iter().map(|a| PolarizationVector::from_bloch(a[0], a[1])).collect();
        PolarizationGrid::from_points(&pts).map_err(serde::de::Error::custom)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn two_points_cover_with_right_angle() {
        let g = build_grid(2).unwrap();
        assert_eq!(g.len(), 2);
        assert!((g.covering_angle() - PI / 2.0).abs() < 1e-12);
        assert!(g.covering_bound() >= g.covering_angle());
        assert!(g.probes() >= MIN_PROBES);
    }

    #[test]
    fn fibonacci_six() {
        // The six-point pole lattice is not an octahedron; its covering angle is ≈ 1.229.
        let g = build_grid(6).unwrap();
        assert!((g.covering_angle() - 1.2292).abs() < 2e-3, "{}", g.covering_angle());
    }

    #[test]
    fn thousand_points() {
        let g = build_grid(1000).unwrap();
        assert!(g.covering_angle() < 0.15);
        assert!(g.covering_bound() < 0.15);
    }

    #[test]
    fn covering_shrinks() {
        let mut last = PI;
        for n in [8, 64, 512, 2048] {
            let g = build_grid(n).unwrap();
            assert!(g.covering_angle() < last);
            last = g.covering_angle();
        }
    }

    #[test]
    fn slack_examples() {
        assert_eq!(slack_for_angle(0.0), 0.0);
        assert!((slack_for_angle(PI) - 1.0).abs() < 1e-15);
        assert!((slack_for_angle(0.2) - 0.1f64.sin()).abs() < 1e-15);
    }

    #[test]
    fn insertion_keeps_ids_and_drops_duplicates() {
        let g = build_grid(8).unwrap();
        let extra = PolarizationVector::from_bloch(1.0, 0.3);
        let h = g.with_points(&[extra, g.points()[0]]).unwrap();
        assert_eq!(h.len(), 9);
        assert!(h.contains(&extra));
        for (a, b) in h.points()[..8].iter().zip(g.points()) {
            assert!(a.bloch_angle_to(b) < 1e-7);
        }
        assert!(h.covering_angle() <= g.covering_angle() + 1e-12);
    }

    #[test]
    fn json_round_trip() {
        let g = build_grid(16).unwrap();
        let s = serde_json::to_string(&g).unwrap();
        let back: PolarizationGrid = serde_json::from_str(&s).unwrap();
        assert_eq!(back.len(), 16);
        for (a, b) in g.bloch_vectors().iter().zip(back.bloch_vectors()) {
            assert!(dot(a, b) > 1.0 - 1e-14);
        }
    }
}
