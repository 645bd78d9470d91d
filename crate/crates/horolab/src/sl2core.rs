//! Geometry of `SL(2,ℝ)`: matrices, the Iwasawa chart, the `[u,v,s]` chart,
//! reduction to the standard fundamental domain of `SL(2,ℤ)`, and numerical
//! Lie derivatives along the basis fields `X1, X2, X3`.
//!
//! Matrices act on the upper half-plane by Möbius transformations, so that
//! `M(i) = u + iv` when `M = u_u · a_v · k_θ`.

use crate::error::{domain, validation, Error, Result};
use num_complex::Complex64;
use std::f64::consts::TAU;
use std::ops::Mul;

/// Relative determinant tolerance accepted by [`Sl2Matrix::new`].
pub const DET_TOLERANCE: f64 = 1e-9;
/// Determinant drift beyond which products are rescaled back onto `SL(2,ℝ)`.
pub const DET_RENORMALIZE: f64 = 1e-12;

/// A real 2×2 matrix `(a b; c d)` of determinant one.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Sl2Matrix {
    pub a: f64,
    pub b: f64,
    pub c: f64,
    pub d: f64,
}

impl Sl2Matrix {
    pub const IDENTITY: Sl2Matrix = Sl2Matrix {
        a: 1.0,
        b: 0.0,
        c: 0.0,
        d: 1.0,
    };

    /// Builds a matrix, rejecting non-finite entries and determinants that are
    /// not one up to [`DET_TOLERANCE`]. Small drift is removed by rescaling.
    pub fn new(a: f64, b: f64, c: f64, d: f64) -> Result<Self> {
        if ![a, b, c, d].iter().all(|x| x.is_finite()) {
            return Err(validation("matrix entries must be finite"));
        }
        let det = a * d - b * c;
        let scale = (a * d).abs().max((b * c).abs()).max(1.0);
        if (det - 1.0).abs() > DET_TOLERANCE * scale {
            return Err(validation(format!("determinant {det} is not 1")));
        }
        Ok(Self { a, b, c, d }.renormalized())
    }

    /// Builds a matrix without checking the determinant.
    pub const fn new_unchecked(a: f64, b: f64, c: f64, d: f64) -> Self {
        Self { a, b, c, d }
    }

    pub fn det(&self) -> f64 {
        self.a * self.d - self.b * self.c
    }

    fn renormalized(self) -> Self {
        let det = self.det();
        if (det - 1.0).abs() > DET_RENORMALIZE && det > 0.0 {
            let s = det.sqrt().recip();
            Self {
                a: self.a * s,
                b: self.b * s,
                c: self.c * s,
                d: self.d * s,
            }
        } else {
            self
        }
    }

    /// `a_y = diag(√y, 1/√y)`.
    pub fn a_y(y: f64) -> Result<Self> {
        if !(y > 0.0 && y.is_finite()) {
            return Err(domain(format!("a_y needs y > 0, got {y}")));
        }
        let r = y.sqrt();
        Ok(Self::new_unchecked(r, 0.0, 0.0, r.recip()))
    }

    /// `u_x = (1 x; 0 1)`.
    pub fn u_x(x: f64) -> Self {
        Self::new_unchecked(1.0, x, 0.0, 1.0)
    }

    /// Lower unipotent `(1 0; t 1)`.
    pub fn n_t(t: f64) -> Self {
        Self::new_unchecked(1.0, 0.0, t, 1.0)
    }

    /// Rotation `k_θ = (cos θ, −sin θ; sin θ, cos θ)`.
    pub fn k_theta(theta: f64) -> Self {
        let (s, c) = theta.sin_cos();
        Self::new_unchecked(c, -s, s, c)
    }

    pub fn inverse(&self) -> Self {
        Self::new_unchecked(self.d, -self.b, -self.c, self.a)
    }

    pub fn transpose(&self) -> Self {
        Self::new_unchecked(self.a, self.c, self.b, self.d)
    }

    /// Frobenius norm `√(a² + b² + c² + d²)`.
    pub fn frob_norm(&self) -> f64 {
        self.frob_norm_sq().sqrt()
    }

    pub fn frob_norm_sq(&self) -> f64 {
        self.a * self.a + self.b * self.b + self.c * self.c + self.d * self.d
    }

    /// `M(τ) = (aτ + b)/(cτ + d)` for `τ` in the upper half-plane.
    pub fn mobius(&self, tau: Complex64) -> Result<Complex64> {
        if !(tau.im > 0.0 && tau.re.is_finite() && tau.im.is_finite()) {
            return Err(domain(format!("{tau} is not in the upper half-plane")));
        }
        Ok((tau * self.a + self.b) / (tau * self.c + self.d))
    }

    /// `M(i)`, computed from the bottom row to keep full precision.
    pub fn orbit_point(&self) -> Complex64 {
        let den = self.c * self.c + self.d * self.d;
        Complex64::new((self.a * self.c + self.b * self.d) / den, den.recip())
    }

    /// Iwasawa coordinates `(u, v, θ)` with `M = u_u a_v k_θ`, `θ ∈ [0, 2π)`.
    pub fn iwasawa(&self) -> Iwasawa {
        let z = self.orbit_point();
        let mut theta = self.c.atan2(self.d);
        if theta < 0.0 {
            theta += TAU;
        }
        if theta >= TAU {
            theta -= TAU;
        }
        Iwasawa {
            u: z.re,
            v: z.im,
            theta,
        }
    }

    /// The `[u,v,s]` coordinates `(a, c, (ab + cd)/(a² + c²))`.
    pub fn uvs(&self) -> Uvs {
        let r2 = self.a * self.a + self.c * self.c;
        Uvs {
            u: self.a,
            v: self.c,
            s: (self.a * self.b + self.c * self.d) / r2,
        }
    }

    /// Reduces `M(i)` into the standard fundamental domain
    /// `{|Re τ| ≤ 1/2, |τ| ≥ 1}`.
    ///
    /// Translations are applied so that `Re τ ∈ [−1/2, 1/2)`, and an inversion
    /// is applied only while `|τ| < 1` strictly.
    pub fn reduce(&self) -> Result<Reduction> {
        if ![self.a, self.b, self.c, self.d].iter().all(|x| x.is_finite()) {
            return Err(domain("cannot reduce a matrix with non-finite entries"));
        }
        const MAX_STEPS: usize = 10_000;
        let mut m = *self;
        let mut gamma = IntMatrix::IDENTITY;
        for _ in 0..MAX_STEPS {
            let z = m.orbit_point();
            let n = (z.re + 0.5).floor();
            if n.abs() > 9.0e15 {
                return Err(domain("orbit point too far out to reduce"));
            }
            if n != 0.0 {
                m = Self::new_unchecked(m.a - n * m.c, m.b - n * m.d, m.c, m.d);
                gamma = gamma.checked_mul(&IntMatrix::u(n as i64))?;
            }
            let z = m.orbit_point();
            if z.norm_sqr() < 1.0 - 1e-13 {
                m = Self::new_unchecked(-m.c, -m.d, m.a, m.b);
                gamma = gamma.checked_mul(&IntMatrix::S_INV)?;
            } else {
                return Ok(Reduction {
                    gamma,
                    reduced: m,
                    tau: m.orbit_point(),
                });
            }
        }
        Err(Error::NonConvergence {
            what: "fundamental domain reduction".into(),
            estimate: m.orbit_point().im,
            error: f64::NAN,
        })
    }

    /// Cuspidal height `𝒴(M) = max_{γ ∈ SL(2,ℤ)} Im γM(i)`.
    pub fn cuspidal_height(&self) -> Result<f64> {
        Ok(self.reduce()?.tau.im)
    }
}

impl Mul for Sl2Matrix {
    type Output = Sl2Matrix;

    fn mul(self, o: Sl2Matrix) -> Sl2Matrix {
        Sl2Matrix {
            a: self.a * o.a + self.b * o.c,
            b: self.a * o.b + self.b * o.d,
            c: self.c * o.a + self.d * o.c,
            d: self.c * o.b + self.d * o.d,
        }
        .renormalized()
    }
}

impl Mul<&Sl2Matrix> for &Sl2Matrix {
    type Output = Sl2Matrix;

    fn mul(self, o: &Sl2Matrix) -> Sl2Matrix {
        *self * *o
    }
}

/// Result of [`Sl2Matrix::reduce`]: `M = γ · reduced` and `tau = reduced(i)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Reduction {
    pub gamma: IntMatrix,
    pub reduced: Sl2Matrix,
    pub tau: Complex64,
}

/// Iwasawa coordinates; `v > 0` and `θ ∈ [0, 2π)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Iwasawa {
    pub u: f64,
    pub v: f64,
    pub theta: f64,
}

impl Iwasawa {
    pub fn new(u: f64, v: f64, theta: f64) -> Result<Self> {
        if !(v > 0.0 && u.is_finite() && v.is_finite() && theta.is_finite()) {
            return Err(domain(format!("invalid Iwasawa triple ({u}, {v}, {theta})")));
        }
        Ok(Self { u, v, theta })
    }

    pub fn to_matrix(&self) -> Sl2Matrix {
        let rv = self.v.sqrt();
        let (s, c) = self.theta.sin_cos();
        // u_u a_v k_θ written out.
        Sl2Matrix::new_unchecked(
            rv * c + self.u * s / rv,
            -rv * s + self.u * c / rv,
            s / rv,
            c / rv,
        )
    }

    /// `‖M‖² = (u² + v² + 1)/v`.
    pub fn frob_norm_sq(&self) -> f64 {
        (self.u * self.u + self.v * self.v + 1.0) / self.v
    }
}

/// Coordinates in the chart
/// `[u,v,s] = (u, −v/(u²+v²); v, u/(u²+v²)) · u_s`, defined for `(u,v) ≠ 0`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Uvs {
    pub u: f64,
    pub v: f64,
    pub s: f64,
}

impl Uvs {
    pub fn new(u: f64, v: f64, s: f64) -> Result<Self> {
        if !(u.is_finite() && v.is_finite() && s.is_finite()) || (u == 0.0 && v == 0.0) {
            return Err(domain(format!("invalid [u,v,s] triple ({u}, {v}, {s})")));
        }
        Ok(Self { u, v, s })
    }

    pub fn to_matrix(&self) -> Sl2Matrix {
        let r2 = self.u * self.u + self.v * self.v;
        let b0 = -self.v / r2;
        let d0 = self.u / r2;
        Sl2Matrix::new_unchecked(self.u, self.u * self.s + b0, self.v, self.v * self.s + d0)
    }

    /// `‖[u,v,s]‖² = (u² + v²)(1 + s²) + 1/(u² + v²)`.
    pub fn frob_norm_sq(&self) -> f64 {
        let r2 = self.u * self.u + self.v * self.v;
        r2 * (1.0 + self.s * self.s) + r2.recip()
    }
}

/// The basis `X1 = (0 1; 0 0)`, `X2 = (0 0; 1 0)`, `X3 = (1 0; 0 −1)` of the
/// Lie algebra, acting as left-invariant fields `φ ↦ d/dt φ(M exp(tX))`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum LieField {
    X1,
    X2,
    X3,
}

impl LieField {
    pub const ALL: [LieField; 3] = [LieField::X1, LieField::X2, LieField::X3];

    pub fn exp(self, t: f64) -> Sl2Matrix {
        match self {
            LieField::X1 => Sl2Matrix::u_x(t),
            LieField::X2 => Sl2Matrix::n_t(t),
            LieField::X3 => Sl2Matrix::new_unchecked(t.exp(), 0.0, 0.0, (-t).exp()),
        }
    }

    /// Coefficients of `(∂u, ∂v, ∂θ)` expressing the field in Iwasawa
    /// coordinates at `(v, θ)`; the field does not depend on `u`.
    pub fn iwasawa_coefficients(self, v: f64, theta: f64) -> [f64; 3] {
        let (s2, c2) = (2.0 * theta).sin_cos();
        let (s, c) = theta.sin_cos();
        match self {
            LieField::X1 => [c2 * v, -s2 * v, -s * s],
            LieField::X2 => [c2 * v, -s2 * v, c * c],
            LieField::X3 => [2.0 * s2 * v, 2.0 * c2 * v, s2],
        }
    }
}

/// Coefficients `[x1, x2, x3]` such that `∂/∂u = x1 X1 + x2 X2 + x3 X3`
/// in the `[u,v,s]` chart.
pub fn uvs_partial_u(p: &Uvs) -> [f64; 3] {
    let (u, v, s) = (p.u, p.v, p.s);
    let r2 = u * u + v * v;
    [
        v / (r2 * r2) + 2.0 * u * s / r2 + v * s * s,
        -v,
        u / r2 + v * s,
    ]
}

/// Coefficients `[x1, x2, x3]` such that `∂/∂v = x1 X1 + x2 X2 + x3 X3`
/// in the `[u,v,s]` chart.
pub fn uvs_partial_v(p: &Uvs) -> [f64; 3] {
    let (u, v, s) = (p.u, p.v, p.s);
    let r2 = u * u + v * v;
    [
        -u / (r2 * r2) + 2.0 * v * s / r2 - u * s * s,
        u,
        v / r2 - u * s,
    ]
}

/// Numerical Lie derivative `X_{w₁} X_{w₂} ⋯ X_{w_s} φ` at `m`.
///
/// Each letter is a central difference with step `h`, improved by one
/// Richardson extrapolation against step `h/2`. The cost is `4^s` evaluations.
pub fn lie_derivative<F>(phi: &F, m: &Sl2Matrix, word: &[LieField], h: f64) -> Result<f64>
where
    F: Fn(&Sl2Matrix) -> f64,
{
    if !(h > 0.0 && h.is_finite()) {
        return Err(domain(format!("step must be positive, got {h}")));
    }
    Ok(lie_rec(phi, m, word, h))
}

fn lie_rec<F: Fn(&Sl2Matrix) -> f64>(phi: &F, m: &Sl2Matrix, word: &[LieField], h: f64) -> f64 {
    match word.split_first() {
        None => phi(m),
        Some((&x, rest)) => {
            let central = |step: f64| {
                let plus = lie_rec(phi, &(*m * x.exp(step)), rest, h);
                let minus = lie_rec(phi, &(*m * x.exp(-step)), rest, h);
                (plus - minus) / (2.0 * step)
            };
            let coarse = central(h);
            let fine = central(0.5 * h);
            (4.0 * fine - coarse) / 3.0
        }
    }
}

/// An element `(a b; c d)` of `SL(2,ℤ)` (or an integer matrix under reduction).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct IntMatrix {
    pub a: i64,
    pub b: i64,
    pub c: i64,
    pub d: i64,
}

impl IntMatrix {
    pub const IDENTITY: IntMatrix = IntMatrix::new(1, 0, 0, 1);
    /// `S = (0 −1; 1 0)`, acting as `τ ↦ −1/τ`.
    pub const S: IntMatrix = IntMatrix::new(0, -1, 1, 0);
    pub const S_INV: IntMatrix = IntMatrix::new(0, 1, -1, 0);

    pub const fn new(a: i64, b: i64, c: i64, d: i64) -> Self {
        Self { a, b, c, d }
    }

    pub const fn u(n: i64) -> Self {
        Self::new(1, n, 0, 1)
    }

    pub fn det(&self) -> i64 {
        self.a * self.d - self.b * self.c
    }

    /// Inverse of a determinant-one matrix (the adjugate).
    pub fn inverse(&self) -> Self {
        Self::new(self.d, -self.b, -self.c, self.a)
    }

    pub fn transpose(&self) -> Self {
        Self::new(self.a, self.c, self.b, self.d)
    }

    pub fn to_real(&self) -> Sl2Matrix {
        Sl2Matrix::new_unchecked(self.a as f64, self.b as f64, self.c as f64, self.d as f64)
    }

    pub fn frob_norm_sq(&self) -> i64 {
        self.a * self.a + self.b * self.b + self.c * self.c + self.d * self.d
    }

    pub fn checked_mul(&self, o: &IntMatrix) -> Result<IntMatrix> {
        let f = |x: i64, y: i64, z: i64, w: i64| {
            x.checked_mul(y)
                .and_then(|p| z.checked_mul(w).and_then(|q| p.checked_add(q)))
        };
        match (
            f(self.a, o.a, self.b, o.c),
            f(self.a, o.b, self.b, o.d),
            f(self.c, o.a, self.d, o.c),
            f(self.c, o.b, self.d, o.d),
        ) {
            (Some(a), Some(b), Some(c), Some(d)) => Ok(Self::new(a, b, c, d)),
            _ => Err(domain("integer matrix product overflows i64")),
        }
    }

    /// Entries reduced into `[0, n)`.
    pub fn reduce_mod(&self, n: i64) -> Self {
        Self::new(
            self.a.rem_euclid(n),
            self.b.rem_euclid(n),
            self.c.rem_euclid(n),
            self.d.rem_euclid(n),
        )
    }

    /// Applies the matrix to a row vector: `(x, y) · T`.
    pub fn act_row(&self, v: [i64; 2]) -> [i64; 2] {
        [v[0] * self.a + v[1] * self.c, v[0] * self.b + v[1] * self.d]
    }
}

impl Mul for IntMatrix {
    type Output = IntMatrix;

    fn mul(self, o: IntMatrix) -> IntMatrix {
        self.checked_mul(&o).expect("integer matrix product overflow")
    }
}

impl Mul<Sl2Matrix> for IntMatrix {
    type Output = Sl2Matrix;

    fn mul(self, o: Sl2Matrix) -> Sl2Matrix {
        self.to_real() * o
    }
}
