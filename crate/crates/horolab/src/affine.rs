//! The semidirect product `G = SL(2,ℝ) ⋉ (ℝ²)^k`, its projections to `k = 1`,
//! planar grids, and the gap function `S_{g,q}(T)`.
//!
//! Elements are stored as pairs `(M, v)` with `v` a `k×2` matrix, and the
//! product is `(M, v)(M′, v′) = (MM′, vM′ + v′)`. The element written
//! `(1, ξ)M` in torus coordinates is the pair `(M, ξM)`; see
//! [`GroupElement::from_torus`].

use crate::error::{domain, validation, Result};
use crate::numeric;
use crate::sl2core::Sl2Matrix;

/// A row vector in `ℝ²`.
pub type Row = [f64; 2];

fn row_times(v: Row, m: &Sl2Matrix) -> Row {
    [v[0] * m.a + v[1] * m.c, v[0] * m.b + v[1] * m.d]
}

/// An element `(M, v)` of `SL(2,ℝ) ⋉ (ℝ²)^k`.
#[derive(Debug, Clone, PartialEq)]
pub struct GroupElement {
    pub m: Sl2Matrix,
    pub v: Vec<Row>,
}

impl GroupElement {
    pub fn new(m: Sl2Matrix, v: Vec<Row>) -> Result<Self> {
        if v.is_empty() {
            return Err(validation("torus rank k must be at least 1"));
        }
        if !v.iter().flatten().all(|x| x.is_finite()) {
            return Err(validation("translation part must be finite"));
        }
        Ok(Self { m, v })
    }

    /// `(1, ξ) · M`, i.e. the pair `(M, ξM)`.
    pub fn from_torus(xi: &[Row], m: Sl2Matrix) -> Result<Self> {
        Self::new(m, xi.iter().map(|r| row_times(*r, &m)).collect())
    }

    pub fn identity(k: usize) -> Self {
        Self {
            m: Sl2Matrix::IDENTITY,
            v: vec![[0.0; 2]; k],
        }
    }

    pub fn k(&self) -> usize {
        self.v.len()
    }

    /// The torus coordinate `ξ = vM⁻¹`, so that `self = (1, ξ)M`.
    pub fn torus_part(&self) -> Vec<Row> {
        let inv = self.m.inverse();
        self.v.iter().map(|r| row_times(*r, &inv)).collect()
    }

    pub fn multiply(&self, o: &GroupElement) -> Result<GroupElement> {
        if self.k() != o.k() {
            return Err(domain(format!("rank mismatch {} vs {}", self.k(), o.k())));
        }
        let v = self
            .v
            .iter()
            .zip(&o.v)
            .map(|(a, b)| {
                let r = row_times(*a, &o.m);
                [r[0] + b[0], r[1] + b[1]]
            })
            .collect();
        Ok(GroupElement { m: self.m * o.m, v })
    }

    /// `(M⁻¹, −vM⁻¹)`.
    pub fn inverse(&self) -> GroupElement {
        let inv = self.m.inverse();
        GroupElement {
            m: inv,
            v: self
                .v
                .iter()
                .map(|r| {
                    let w = row_times(*r, &inv);
                    [-w[0], -w[1]]
                })
                .collect(),
        }
    }

    /// Right multiplication by `(A, 0)`.
    pub fn mul_matrix(&self, a: &Sl2Matrix) -> GroupElement {
        GroupElement {
            m: self.m * *a,
            v: self.v.iter().map(|r| row_times(*r, a)).collect(),
        }
    }

    /// `p_q(M, v) = (M, qv)` with `qv` the `1×2` product.
    pub fn project(&self, q: &[i64]) -> Result<GroupElement> {
        Ok(GroupElement {
            m: self.m,
            v: vec![self.combine(q)?],
        })
    }

    fn combine(&self, q: &[i64]) -> Result<Row> {
        if q.len() != self.k() {
            return Err(domain(format!("q has length {}, expected {}", q.len(), self.k())));
        }
        let mut out = [0.0; 2];
        for (qi, r) in q.iter().zip(&self.v) {
            out[0] += *qi as f64 * r[0];
            out[1] += *qi as f64 * r[1];
        }
        Ok(out)
    }

    /// The grid `ℤ² p_q(g) = ℤ²M + qv`.
    pub fn grid(&self, q: &[i64]) -> Result<PlanarGrid> {
        PlanarGrid::new([[self.m.a, self.m.b], [self.m.c, self.m.d]], self.combine(q)?)
    }

    /// `S_{g,q}(T)`: the supremum of `S ≥ 0` such that `S·R_T` meets the grid
    /// `ℤ²p_q(g)` at most in the origin (`q = 0`) or not at all (`q ≠ 0`).
    pub fn gap(&self, q: &[i64], t: f64) -> Result<f64> {
        Ok(self.gap_detailed(q, t)?.value)
    }

    pub fn gap_detailed(&self, q: &[i64], t: f64) -> Result<GridGap> {
        if !(t >= 1.0 && t.is_finite()) {
            return Err(domain(format!("T must be at least 1, got {t}")));
        }
        let lattice_only = q.iter().all(|&x| x == 0);
        let grid = self.grid(q)?.stretched(t);
        let w = grid.shortest_sup(lattice_only)?;
        Ok(GridGap {
            value: t.sqrt() * w.norm,
            coeffs: w.coeffs,
        })
    }
}

/// `S_{g,q}(T)` together with the integer coefficients of the grid point that
/// realises it.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridGap {
    pub value: f64,
    pub coeffs: [i64; 2],
}

/// The rectangle `R_T = [−1/T, 1/T] × [−1, 1]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RectangleRT {
    t: f64,
}

impl RectangleRT {
    pub fn new(t: f64) -> Result<Self> {
        if !(t >= 1.0 && t.is_finite()) {
            return Err(domain(format!("T must be at least 1, got {t}")));
        }
        Ok(Self { t })
    }

    /// Whether `w ∈ S·R_T`.
    pub fn contains_scaled(&self, s: f64, w: Row) -> bool {
        w[0].abs() * self.t <= s && w[1].abs() <= s
    }
}

/// A translate `ℤ²B + o` of a lattice with basis rows `B`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PlanarGrid {
    pub basis: [Row; 2],
    pub offset: Row,
}

/// A grid point of minimal sup-norm.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SupMinimum {
    pub norm: f64,
    /// Coefficients in the original basis.
    pub coeffs: [i64; 2],
}

const MEMBERSHIP_TOL: f64 = 1e-9;
const MAX_CANDIDATES: i64 = 1 << 22;

impl PlanarGrid {
    pub fn new(basis: [Row; 2], offset: Row) -> Result<Self> {
        let det = basis[0][0] * basis[1][1] - basis[0][1] * basis[1][0];
        if !(det.abs() > 0.0) || !basis.iter().flatten().chain(&offset).all(|x| x.is_finite()) {
            return Err(validation("grid basis must be finite and invertible"));
        }
        Ok(Self { basis, offset })
    }

    fn det(&self) -> f64 {
        self.basis[0][0] * self.basis[1][1] - self.basis[0][1] * self.basis[1][0]
    }

    /// The point with integer coefficients `n`, evaluated in the original basis.
    pub fn point(&self, n: [i64; 2]) -> Row {
        let (m1, m2) = (n[0] as f64, n[1] as f64);
        [
            m1 * self.basis[0][0] + m2 * self.basis[1][0] + self.offset[0],
            m1 * self.basis[0][1] + m2 * self.basis[1][1] + self.offset[1],
        ]
    }

    /// Coordinates of `w − offset` in the basis.
    pub fn coordinates(&self, w: Row) -> Row {
        let det = self.det();
        let x = [w[0] - self.offset[0], w[1] - self.offset[1]];
        [
            (x[0] * self.basis[1][1] - x[1] * self.basis[1][0]) / det,
            (-x[0] * self.basis[0][1] + x[1] * self.basis[0][0]) / det,
        ]
    }

    pub fn contains(&self, w: Row) -> bool {
        self.coordinates(w)
            .iter()
            .all(|c| (c - c.round()).abs() <= MEMBERSHIP_TOL)
    }

    /// The image under `w ↦ w a_T`.
    pub fn stretched(&self, t: f64) -> PlanarGrid {
        let (s, r) = (t.sqrt(), t.sqrt().recip());
        PlanarGrid {
            basis: [
                [self.basis[0][0] * s, self.basis[0][1] * r],
                [self.basis[1][0] * s, self.basis[1][1] * r],
            ],
            offset: [self.offset[0] * s, self.offset[1] * r],
        }
    }

    /// Minimal sup-norm over grid points, excluding the origin coefficient
    /// pair when `exclude_origin` is set.
    ///
    /// The basis is Lagrange-reduced, an upper bound `r₀` is taken from a few
    /// nearby points, and every coefficient pair whose point could have
    /// sup-norm at most `r₀` is then examined. Norms are always evaluated in
    /// the original basis.
    pub fn shortest_sup(&self, exclude_origin: bool) -> Result<SupMinimum> {
        let (red, u) = lagrange_reduce(self.basis);
        let det = red[0][0] * red[1][1] - red[0][1] * red[1][0];
        // Rows of the inverse matrix: inv[j][i] with n_i = Σ_j x_j inv[j][i].
        let inv = [
            [red[1][1] / det, -red[0][1] / det],
            [-red[1][0] / det, red[0][0] / det],
        ];
        let centre = [
            -(self.offset[0] * inv[0][0] + self.offset[1] * inv[1][0]),
            -(self.offset[0] * inv[0][1] + self.offset[1] * inv[1][1]),
        ];
        let to_orig = |n: [i64; 2]| -> [i64; 2] {
            [n[0] * u[0][0] + n[1] * u[1][0], n[0] * u[0][1] + n[1] * u[1][1]]
        };
        let sup = |n: [i64; 2]| -> f64 {
            let p = self.point(to_orig(n));
            p[0].abs().max(p[1].abs())
        };

        let base = [centre[0].round() as i64, centre[1].round() as i64];
        let mut r0 = f64::INFINITY;
        for i in -1..=1 {
            for j in -1..=1 {
                let n = [base[0] + i, base[1] + j];
                if exclude_origin && to_orig(n) == [0, 0] {
                    continue;
                }
                r0 = r0.min(sup(n));
            }
        }

        let slack = 1e-9 * (1.0 + r0);
        let mut range = [(0i64, 0i64); 2];
        for (i, rg) in range.iter_mut().enumerate() {
            let spread = (r0 + slack) * (inv[0][i].abs() + inv[1][i].abs());
            let lo = (centre[i] - spread).floor();
            let hi = (centre[i] + spread).ceil();
            if !(lo.is_finite() && hi.is_finite()) || hi - lo > MAX_CANDIDATES as f64 {
                return Err(crate::Error::ResourceGuard {
                    what: "grid enumeration box".into(),
                    needed: hi - lo,
                    limit: MAX_CANDIDATES as f64,
                });
            }
            *rg = (lo as i64, hi as i64);
        }

        let mut best = SupMinimum {
            norm: f64::INFINITY,
            coeffs: [0, 0],
        };
        for n0 in range[0].0..=range[0].1 {
            for n1 in range[1].0..=range[1].1 {
                let m = to_orig([n0, n1]);
                if exclude_origin && m == [0, 0] {
                    continue;
                }
                let p = self.point(m);
                let s = p[0].abs().max(p[1].abs());
                if s < best.norm || (s == best.norm && m < best.coeffs) {
                    best = SupMinimum { norm: s, coeffs: m };
                }
            }
        }
        Ok(best)
    }
}

/// Lagrange–Gauss reduction of a planar basis. Returns the reduced rows and
/// the unimodular integer matrix `U` with `reduced = U · basis`.
pub fn lagrange_reduce(basis: [Row; 2]) -> ([Row; 2], [[i64; 2]; 2]) {
    let dot = |x: Row, y: Row| x[0] * y[0] + x[1] * y[1];
    let (mut b1, mut b2) = (basis[0], basis[1]);
    let mut u1 = [1i64, 0];
    let mut u2 = [0i64, 1];
    if dot(b1, b1) > dot(b2, b2) {
        std::mem::swap(&mut b1, &mut b2);
        std::mem::swap(&mut u1, &mut u2);
    }
    for _ in 0..200 {
        let mu = (dot(b1, b2) / dot(b1, b1)).round();
        if mu == 0.0 || !mu.is_finite() || mu.abs() > 1e15 {
            break;
        }
        let k = mu as i64;
        b2 = [b2[0] - mu * b1[0], b2[1] - mu * b1[1]];
        u2 = [u2[0] - k * u1[0], u2[1] - k * u1[1]];
        if dot(b2, b2) < dot(b1, b1) {
            std::mem::swap(&mut b1, &mut b2);
            std::mem::swap(&mut u1, &mut u2);
        } else {
            break;
        }
    }
    ([b1, b2], [u1, u2])
}

/// `ℒ_j(x) = x·(log(2 + 1/x))^j` for `x > 0`.
pub fn script_l(j: u32, x: f64) -> Result<f64> {
    if !(x > 0.0 && x.is_finite()) {
        return Err(domain(format!("ℒ_j needs x > 0, got {x}")));
    }
    Ok(numeric::script_l(j, x))
}
