//! The per-(pair, setting-pair) table polytope and its small dual.
//!
//! For fixed (u, v, x, y) a conditional table q = (q00, q01, q10, q11) is
//! feasible when it is a probability vector whose Alice marginal α = q00+q01
//! and Bob marginal β = q00+q10 lie in the slack boxes around the Malus
//! values. In coordinates (α, β, t = q00) the polytope is
//! box × {max(0, α+β−1) ≤ t ≤ min(α, β)}, so its vertices are found among a
//! handful of candidate points.

/// Table mass allowed on cells outside the behavior's support.
pub(crate) const FACE_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq)]
pub(crate) struct TableBox {
    pub a_lo: f64,
    pub a_hi: f64,
    pub b_lo: f64,
    pub b_hi: f64,
}

impl TableBox {
    pub fn new(ma: f64, mb: f64, slack: f64) -> Self {
        Self {
            a_lo: (ma - slack).clamp(0.0, 1.0),
            a_hi: (ma + slack).clamp(0.0, 1.0),
            b_lo: (mb - slack).clamp(0.0, 1.0),
            b_hi: (mb + slack).clamp(0.0, 1.0),
        }
    }

    /// Calls `f` on a superset of the polytope's vertices.
    pub fn for_each_vertex(&self, mut f: impl FnMut([f64; 4])) {
        let mut pts: [(f64, f64); 13] = [(f64::NAN, f64::NAN); 13];
        let mut n = 0;
        let mut push = |a: f64, b: f64| {
            if a >= self.a_lo && a <= self.a_hi && b >= self.b_lo && b <= self.b_hi {
                pts[n] = (a, b);
                n += 1;
            }
        };
        push(self.a_lo, self.b_lo);
        push(self.a_lo, self.b_hi);
        push(self.a_hi, self.b_lo);
        push(self.a_hi, self.b_hi);
        if self.a_lo < self.a_hi || self.b_lo < self.b_hi {
            // α = β and α + β = 1 against the box edges, and their crossing.
            for b in [self.b_lo, self.b_hi] {
                push(b, b);
                push(1.0 - b, b);
            }
            for a in [self.a_lo, self.a_hi] {
                push(a, a);
                push(a, 1.0 - a);
            }
            push(0.5, 0.5);
        }
        for &(a, b) in &pts[..n] {
            let lo = (a + b - 1.0).max(0.0);
            let hi = a.min(b);
            f([lo, a - lo, b - lo, 1.0 - a - b + lo]);
            if hi != lo {
                f([hi, a - hi, b - hi, 1.0 - a - b + hi]);
            }
        }
    }

    /// Minimum of Σ w·q over the face {q_c = 0 for c outside `support`}.
    /// Returns `None` when that face is empty.
    pub fn min_on_face(&self, w: &[f64; 4], support: &[bool; 4]) -> Option<(f64, [f64; 4])> {
        let mut best: Option<(f64, [f64; 4])> = None;
        self.for_each_vertex(|q| {
            let off: f64 = (0..4).filter(|&c| !support[c]).map(|c| q[c]).sum();
            if off > FACE_TOL {
                return;
            }
            let mut q = q;
            for c in 0..4 {
                if !support[c] {
                    q[c] = 0.0;
                }
            }
            let v: f64 = (0..4).filter(|&c| support[c]).map(|c| w[c] * q[c]).sum();
            if best.is_none_or(|(b, _)| v < b) {
                best = Some((v, q));
            }
        });
        best
    }

    /// Maximum of Σ w·q over the whole polytope.
    pub fn max(&self, w: &[f64; 4]) -> (f64, [f64; 4]) {
        let mut best = (f64::NEG_INFINITY, [0.0; 4]);
        self.for_each_vertex(|q| {
            let v = w[0] * q[0] + w[1] * q[1] + w[2] * q[2] + w[3] * q[3];
            if v > best.0 {
                best = (v, q);
            }
        });
        best
    }
}

/// Multipliers of the local rows of one (pair, setting-pair) block: the
/// normalization equality (η) and the four marginal inequalities.
#[derive(Debug, Clone, Copy, PartialEq)]
pub(crate) struct LocalDual {
    pub eta: f64,
    pub za_plus: f64,
    pub za_minus: f64,
    pub zb_plus: f64,
    pub zb_minus: f64,
}

impl LocalDual {
    fn from_z(za: f64, zb: f64, eta: f64) -> Self {
        Self { eta, za_plus: za.max(0.0), za_minus: (-za).max(0.0), zb_plus: zb.max(0.0), zb_minus: (-zb).max(0.0) }
    }
}

/// The block's contribution −(p-column coefficient·multipliers) as a function of (zA, zB):
/// f = max_{c∈S}(−λ_c − zA[a=0] − zB[b=0]) + mA·zA + s|zA| + mB·zB + s|zB|.
#[derive(Debug, Clone, Copy)]
pub(crate) struct LocalProblem {
    pub lambda: [f64; 4],
    pub support: [bool; 4],
    pub ma: f64,
    pub mb: f64,
    pub slack: f64,
}

/// a = 0 for cells 0, 1; b = 0 for cells 0, 2.
const A0: [f64; 4] = [1.0, 1.0, 0.0, 0.0];
const B0: [f64; 4] = [1.0, 0.0, 1.0, 0.0];

/// Directions that contain every extreme ray of the dual's recession cone.
const RAYS: [(f64, f64); 8] = [(1.0, 0.0), (-1.0, 0.0), (0.0, 1.0), (0.0, -1.0), (1.0, 1.0), (-1.0, -1.0), (1.0, -1.0), (-1.0, 1.0)];

impl LocalProblem {
    fn eta(&self, za: f64, zb: f64) -> f64 {
        (0..4)
            .filter(|&c| self.support[c])
            .map(|c| -self.lambda[c] - za * A0[c] - zb * B0[c])
            .fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn value(&self, za: f64, zb: f64) -> f64 {
        self.eta(za, zb) + self.ma * za + self.slack * za.abs() + self.mb * zb + self.slack * zb.abs()
    }

    fn slope(&self, da: f64, db: f64) -> f64 {
        let lead = (0..4).filter(|&c| self.support[c]).map(|c| -da * A0[c] - db * B0[c]).fold(f64::NEG_INFINITY, f64::max);
        lead + self.ma * da + self.slack * da.abs() + self.mb * db + self.slack * db.abs()
    }

    pub fn dual_at(&self, za: f64, zb: f64) -> LocalDual {
        LocalDual::from_z(za, zb, self.eta(za, zb))
    }

    /// A direction along which the block value decreases without bound
    /// (the table face is empty), if any.
    pub fn descent_ray(&self) -> Option<(f64, f64)> {
        RAYS.iter().copied().filter(|&(a, b)| self.slope(a, b) < -1e-12).min_by(|x, y| self.slope(x.0, x.1).total_cmp(&self.slope(y.0, y.1)))
    }

    /// Minimizes the convex piecewise-linear block value over arrangement vertices.
    /// Only meaningful when [`descent_ray`](Self::descent_ray) is `None`.
    pub fn minimize(&self) -> (f64, LocalDual) {
        // Lines a·zA + b·zB = c where two pieces tie, plus the axes.
        let mut lines: Vec<(f64, f64, f64)> = vec![(1.0, 0.0, 0.0), (0.0, 1.0, 0.0)];
        for c in 0..4 {
            for d in (c + 1)..4 {
                if self.support[c] && self.support[d] {
                    // −λc − zA·A0c − zB·B0c = −λd − zA·A0d − zB·B0d
                    let a = A0[d] - A0[c];
                    let b = B0[d] - B0[c];
                    let rhs = self.lambda[c] - self.lambda[d];
                    if a != 0.0 || b != 0.0 {
                        lines.push((a, b, rhs));
                    }
                }
            }
        }
        let mut best = (self.value(0.0, 0.0), (0.0, 0.0));
        for i in 0..lines.len() {
            for j in (i + 1)..lines.len() {
                let (a1, b1, c1) = lines[i];
                let (a2, b2, c2) = lines[j];
                let det = a1 * b2 - a2 * b1;
                if det.abs() < 1e-14 {
                    continue;
                }
                let za = (c1 * b2 - c2 * b1) / det;
                let zb = (a1 * c2 - a2 * c1) / det;
                let v = self.value(za, zb);
                if v < best.0 {
                    best = (v, (za, zb));
                }
            }
        }
        let (za, zb) = best.1;
        (best.0, self.dual_at(za, zb))
    }

    /// Multipliers with block value at most `target`, walking along the
    /// descent ray when the table face is empty.
    pub fn push_below(&self, ray: (f64, f64), target: f64) -> (f64, LocalDual) {
        let mut t = 1.0;
        for _ in 0..200 {
            let v = self.value(t * ray.0, t * ray.1);
            if v <= target {
                return (v, self.dual_at(t * ray.0, t * ray.1));
            }
            t *= 2.0;
        }
        let v = self.value(t * ray.0, t * ray.1);
        (v, self.dual_at(t * ray.0, t * ray.1))
    }
}
