//! Cosets of `Γ(N)` in Frobenius balls and smooth linear exponential sums
//! over them.
//!
//! The enumeration walks first rows `t₁` with `‖t₁M‖ ≤ ρ` (lattice points of
//! `ℤ²M` in a disc, found through a reduced basis), completes each primitive
//! `t₁` to a matrix with a particular second row, and then runs through the
//! one-parameter family `t₂ + n·t₁`. First rows are processed in parallel and
//! reassembled in sorted order.

use crate::affine::lagrange_reduce;
use crate::arith::{dist_to_z, gcd, tau};
use crate::error::{domain, validation, Result};
use crate::numeric::{bump6, e, smooth_step, KahanSum, KahanSumC};
use crate::quadrature::Quadrature;
use crate::sl2core::{IntMatrix, Sl2Matrix, Uvs};
use num_complex::Complex64;
use rayon::prelude::*;
use std::fmt;
use std::sync::Arc;

/// The coset `[R] = {T ∈ SL(2,ℤ) : T ≡ R mod N}`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CosetSpec {
    n: i64,
    r: IntMatrix,
}

impl CosetSpec {
    pub fn new(n: i64, r: IntMatrix) -> Result<Self> {
        if n < 1 {
            return Err(validation("level N must be positive"));
        }
        let red = r.reduce_mod(n);
        if red != r {
            return Err(validation(format!("{r:?} is not reduced modulo {n}")));
        }
        if (r.det() - 1).rem_euclid(n) != 0 {
            return Err(validation(format!("{r:?} has determinant ≢ 1 mod {n}")));
        }
        Ok(Self { n, r })
    }

    /// `Γ(N)` itself, the class of the identity.
    pub fn principal(n: i64) -> Result<Self> {
        Self::new(n, IntMatrix::IDENTITY.reduce_mod(n.max(1)))
    }

    pub fn level(&self) -> i64 {
        self.n
    }

    pub fn residue(&self) -> IntMatrix {
        self.r
    }

    pub fn contains(&self, t: &IntMatrix) -> bool {
        t.det() == 1 && t.reduce_mod(self.n) == self.r
    }
}

/// Membership predicate shared by the enumerator and its oracles:
/// `‖TM‖² ≤ ρ²`, evaluated exactly in integers when `M` is absent.
pub fn in_ball(t: &IntMatrix, m: Option<&Sl2Matrix>, rho: f64) -> bool {
    match m {
        None => (t.frob_norm_sq() as f64) <= rho * rho,
        Some(m) => (t.to_real() * *m).frob_norm_sq() <= rho * rho,
    }
}

fn ext_gcd(a: i64, b: i64) -> (i64, i64, i64) {
    if b == 0 {
        (a.signum() * a, a.signum(), 0)
    } else {
        let (g, x, y) = ext_gcd(b, a.rem_euclid(b));
        (g, y, x - a.div_euclid(b) * y)
    }
}

fn row_image(t: [i64; 2], m: &Sl2Matrix) -> [f64; 2] {
    let (p, q) = (t[0] as f64, t[1] as f64);
    [p * m.a + q * m.c, p * m.b + q * m.d]
}

/// Primitive `t₁ ∈ ℤ²` with `‖t₁M‖ ≤ ρ` (up to a relative slack of `10⁻⁹`),
/// sorted lexicographically.
fn first_rows(rho: f64, m: &Sl2Matrix) -> Vec<[i64; 2]> {
    let basis = [[m.a, m.b], [m.c, m.d]];
    let (red, u) = lagrange_reduce(basis);
    let det = red[0][0] * red[1][1] - red[0][1] * red[1][0];
    let inv = [
        [red[1][1] / det, -red[0][1] / det],
        [-red[1][0] / det, red[0][0] / det],
    ];
    let reach = rho * (1.0 + 1e-9) + 1e-9;
    let span = |i: usize| (reach * ((inv[0][i]).hypot(inv[1][i]))).ceil() as i64;
    let (s0, s1) = (span(0), span(1));
    let mut out = Vec::new();
    for n0 in -s0..=s0 {
        for n1 in -s1..=s1 {
            let t = [n0 * u[0][0] + n1 * u[1][0], n0 * u[0][1] + n1 * u[1][1]];
            if gcd(t[0], t[1]) != 1 {
                continue;
            }
            let w = row_image(t, m);
            if w[0].hypot(w[1]) <= reach {
                out.push(t);
            }
        }
    }
    out.sort_unstable();
    out
}

/// All `T` with first row `t1`, in `[R]`, and `‖TM‖ ≤ ρ`, in order of the
/// family parameter.
fn completions(
    t1: [i64; 2],
    cs: &CosetSpec,
    rho: f64,
    m: Option<&Sl2Matrix>,
) -> Vec<IntMatrix> {
    let mm = m.copied().unwrap_or(Sl2Matrix::IDENTITY);
    let (_, x, y) = ext_gcd(t1[0], t1[1]);
    // p·x + q·y = 1, so (−y, x) completes (p, q) to determinant one.
    let t2 = [-y, x];
    let w = row_image(t1, &mm);
    let p0 = row_image(t2, &mm);
    let w2 = w[0] * w[0] + w[1] * w[1];
    let reach2 = (rho * (1.0 + 1e-9) + 1e-9).powi(2);
    let room = reach2 - w2 - 1.0 / w2;
    if room < -1e-9 * reach2 {
        return Vec::new();
    }
    let centre = -(p0[0] * w[0] + p0[1] * w[1]) / w2;
    let half = room.max(0.0).sqrt() / w2.sqrt() + 1e-9;
    let lo = (centre - half).floor() as i64;
    let hi = (centre + half).ceil() as i64;
    (lo..=hi)
        .filter_map(|n| {
            let t = IntMatrix::new(t1[0], t1[1], t2[0] + n * t1[0], t2[1] + n * t1[1]);
            (cs.contains(&t) && in_ball(&t, m, rho)).then_some(t)
        })
        .collect()
}

/// Every `T ∈ [R]` with `‖TM‖ ≤ ρ`, each exactly once, ordered by first row
/// and then by the family parameter. Empty when `ρ < √2`.
pub fn enumerate_coset_ball(cs: &CosetSpec, rho: f64, m: Option<&Sl2Matrix>) -> Vec<IntMatrix> {
    if !(rho >= std::f64::consts::SQRT_2) {
        return Vec::new();
    }
    let mm = m.copied().unwrap_or(Sl2Matrix::IDENTITY);
    let rows = first_rows(rho, &mm);
    if rows.len() < PARALLEL_ROWS {
        rows.iter().flat_map(|&t1| completions(t1, cs, rho, m)).collect()
    } else {
        rows.par_iter()
            .flat_map_iter(|&t1| completions(t1, cs, rho, m))
            .collect()
    }
}

/// Below this many first rows the enumeration stays on the calling thread.
const PARALLEL_ROWS: usize = 256;

/// A smooth weight on `ℝ⁴` supported in `[−B, B]⁴`.
#[derive(Clone)]
pub enum WeightFn {
    /// `∏ (1 − (x_i/B)²)⁶`, each factor cut off outside `[−B, B]`.
    Bump6Product { b: f64 },
    /// A caller-supplied weight, assumed to vanish outside `[−B, B]⁴`.
    Custom {
        f: Arc<dyn Fn([f64; 4]) -> f64 + Send + Sync>,
        b: f64,
    },
}

impl fmt::Debug for WeightFn {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            WeightFn::Bump6Product { b } => write!(f, "Bump6Product {{ b: {b} }}"),
            WeightFn::Custom { b, .. } => write!(f, "Custom {{ b: {b} }}"),
        }
    }
}

impl Default for WeightFn {
    fn default() -> Self {
        WeightFn::Bump6Product { b: 1.0 }
    }
}

impl WeightFn {
    pub fn support(&self) -> f64 {
        match self {
            WeightFn::Bump6Product { b } | WeightFn::Custom { b, .. } => *b,
        }
    }

    pub fn eval(&self, x: [f64; 4]) -> f64 {
        match self {
            WeightFn::Bump6Product { b } => x.iter().map(|t| bump6(t / b)).product(),
            WeightFn::Custom { f, .. } => f(x),
        }
    }
}

fn entries(t: &IntMatrix) -> [f64; 4] {
    [t.a as f64, t.b as f64, t.c as f64, t.d as f64]
}

/// `Σ_{T ∈ [R], ‖T‖_∞ ≤ BX} e(α·T) w(T/X)`, with `T` read as `(a₁, a₂, a₃, a₄)`.
pub fn weighted_expsum_lhs(cs: &CosetSpec, alpha: [f64; 4], x: f64, w: &WeightFn) -> Result<Complex64> {
    if !(x >= 1.0 && x.is_finite()) {
        return Err(domain(format!("X must be at least 1, got {x}")));
    }
    let bx = w.support() * x;
    let rho = 2.0 * bx;
    let rows = first_rows(rho, &Sl2Matrix::IDENTITY);
    let partial: Vec<Complex64> = rows
        .par_iter()
        .map(|&t1| {
            let mut acc = KahanSumC::new();
            if (t1[0].abs() as f64) > bx || (t1[1].abs() as f64) > bx {
                return acc.value();
            }
            for t in completions(t1, cs, rho, None) {
                let a = entries(&t);
                if a.iter().any(|v| v.abs() > bx) {
                    continue;
                }
                let weight = w.eval([a[0] / x, a[1] / x, a[2] / x, a[3] / x]);
                if weight != 0.0 {
                    let phase: f64 = (0..4).map(|i| alpha[i] * a[i]).sum();
                    acc.add(e(phase) * weight);
                }
            }
            acc.value()
        })
        .collect();
    let total: KahanSumC = partial.into_iter().collect();
    Ok(total.value())
}

/// `X² Σ_{1 ≤ q ≤ X} τ(q) q^{−3/2} (1 + X‖qα‖_ℤ/q)^{−1}`.
pub fn expsum_rhs(alpha: [f64; 4], x: f64) -> Result<f64> {
    if !(x >= 1.0 && x.is_finite()) {
        return Err(domain(format!("X must be at least 1, got {x}")));
    }
    let mut acc = KahanSum::new();
    for q in 1..=(x.floor() as u64) {
        let qf = q as f64;
        let qa: Vec<f64> = alpha.iter().map(|a| qf * a).collect();
        acc.add(tau(q) as f64 * qf.powf(-1.5) / (1.0 + x * dist_to_z(&qa) / qf));
    }
    Ok(x * x * acc.value())
}

/// One line of a cancellation sweep.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CancellationRow {
    pub x: f64,
    pub lhs: Complex64,
    pub rhs: f64,
    /// `|LHS|/RHS`.
    pub ratio: f64,
}

pub fn cancellation_report(
    cs: &CosetSpec,
    alpha: [f64; 4],
    xs: &[f64],
    w: &WeightFn,
) -> Result<Vec<CancellationRow>> {
    if xs.is_empty() {
        return Err(validation("X list must not be empty"));
    }
    xs.iter()
        .map(|&x| {
            let lhs = weighted_expsum_lhs(cs, alpha, x, w)?;
            let rhs = expsum_rhs(alpha, x)?;
            Ok(CancellationRow {
                x,
                lhs,
                rhs,
                ratio: lhs.norm() / rhs,
            })
        })
        .collect()
}

/// `(φ, φ², φ³, φ⁴)/4` for the golden ratio `φ`.
pub fn golden_alpha() -> [f64; 4] {
    let g = (1.0 + 5f64.sqrt()) / 2.0;
    [g / 4.0, g * g / 4.0, g.powi(3) / 4.0, g.powi(4) / 4.0]
}

/// A real function on `SL(2,ℝ)` vanishing where `‖M‖ > radius`.
#[derive(Clone)]
pub struct SupportedField {
    pub f: Arc<dyn Fn(&Sl2Matrix) -> f64 + Send + Sync>,
    pub radius: f64,
}

impl fmt::Debug for SupportedField {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "SupportedField {{ radius: {} }}", self.radius)
    }
}

impl SupportedField {
    pub fn new(f: impl Fn(&Sl2Matrix) -> f64 + Send + Sync + 'static, radius: f64) -> Self {
        Self {
            f: Arc::new(f),
            radius,
        }
    }

    pub fn eval(&self, m: &Sl2Matrix) -> f64 {
        (self.f)(m)
    }
}

/// The plateau `ω`: one on `[−1, 1]`, zero outside `[−2, 2]`, `C⁵` throughout.
pub fn plateau(t: f64) -> f64 {
    1.0 - smooth_step(t.abs() - 1.0)
}

/// `F(x) = y ω(x₁x₄ − x₂x₃) ∫ φ([x₁, x₃, s]) h(ys − (x₁x₂ + x₃x₄)/(x₁² + x₃²)) ds`.
///
/// The `s`-range is cut down to where `‖[x₁, x₃, s]‖ ≤ radius`.
pub fn midapproach_transform<H>(
    phi: &SupportedField,
    h: H,
    y: f64,
    x: [f64; 4],
    quad: &Quadrature,
) -> Result<f64>
where
    H: Fn(f64) -> f64 + Sync,
{
    if !(y > 0.0 && y <= 1.0) {
        return Err(domain(format!("y must lie in (0, 1], got {y}")));
    }
    let r2 = x[0] * x[0] + x[2] * x[2];
    if r2 == 0.0 {
        return Ok(0.0);
    }
    let om = plateau(x[0] * x[3] - x[1] * x[2]);
    if om == 0.0 {
        return Ok(0.0);
    }
    let rho2 = phi.radius * phi.radius;
    let s_max2 = (rho2 - 1.0 / r2) / r2 - 1.0;
    if s_max2 <= 0.0 {
        return Ok(0.0);
    }
    let s_max = s_max2.sqrt();
    let shift = (x[0] * x[1] + x[2] * x[3]) / r2;
    let integrand = |s: f64| {
        let m = Uvs { u: x[0], v: x[2], s }.to_matrix();
        phi.eval(&m) * h(y * s - shift)
    };
    let r = quad.integrate(integrand, -s_max, s_max)?;
    Ok(y * om * r.value)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn brute(cs: &CosetSpec, rho: f64) -> Vec<IntMatrix> {
        let r = rho.floor() as i64;
        let mut out = Vec::new();
        for a in -r..=r {
            for b in -r..=r {
                for c in -r..=r {
                    for d in -r..=r {
                        let t = IntMatrix::new(a, b, c, d);
                        if cs.contains(&t) && in_ball(&t, None, rho) {
                            out.push(t);
                        }
                    }
                }
            }
        }
        out.sort();
        out
    }

    #[test]
    fn small_balls() {
        let cs = CosetSpec::principal(1).unwrap();
        let mut got = enumerate_coset_ball(&cs, 1.5, None);
        got.sort();
        let mut want = vec![
            IntMatrix::IDENTITY,
            IntMatrix::new(-1, 0, 0, -1),
            IntMatrix::S,
            IntMatrix::S_INV,
        ];
        want.sort();
        assert_eq!(got, want);
        let cs2 = CosetSpec::principal(2).unwrap();
        assert_eq!(enumerate_coset_ball(&cs2, 3.0, None).len(), 10);
        assert!(enumerate_coset_ball(&cs, 1.4, None).is_empty());
    }

    #[test]
    fn completeness_against_brute_force() {
        let classes = [
            (1, IntMatrix::IDENTITY.reduce_mod(1)),
            (2, IntMatrix::IDENTITY),
            (3, IntMatrix::new(2, 1, 0, 2)),
            (4, IntMatrix::new(1, 3, 0, 1)),
        ];
        for (n, r) in classes {
            let cs = CosetSpec::new(n, r).unwrap();
            for rho in [2.0, 5.5, 9.0] {
                let mut got = enumerate_coset_ball(&cs, rho, None);
                got.sort();
                assert_eq!(got, brute(&cs, rho), "N={n}, ρ={rho}");
            }
        }
    }

    #[test]
    fn coset_validation() {
        assert!(CosetSpec::new(3, IntMatrix::new(1, 0, 0, 2)).is_err());
        assert!(CosetSpec::new(3, IntMatrix::new(4, 0, 0, 1)).is_err());
        assert!(CosetSpec::new(0, IntMatrix::IDENTITY).is_err());
    }

    #[test]
    fn unit_scale_weight_vanishes() {
        let cs = CosetSpec::principal(1).unwrap();
        let v = weighted_expsum_lhs(&cs, [0.3, 0.1, 0.2, 0.7], 1.0, &WeightFn::default()).unwrap();
        assert_eq!(v, Complex64::new(0.0, 0.0));
    }

    #[test]
    fn rhs_examples() {
        assert!((expsum_rhs([0.0; 4], 1.0).unwrap() - 1.0).abs() < 1e-15);
        let want = 16.0 * (1.0 + 2.0 / 2f64.powf(1.5) + 2.0 / 3f64.powf(1.5) + 3.0 / 8.0);
        assert!((expsum_rhs([0.0; 4], 4.0).unwrap() - want).abs() < 1e-12);
    }

    #[test]
    fn plateau_shape() {
        assert_eq!(plateau(0.0), 1.0);
        assert_eq!(plateau(0.999), 1.0);
        assert_eq!(plateau(-1.0), 1.0);
        assert_eq!(plateau(2.0), 0.0);
        assert_eq!(plateau(-3.0), 0.0);
        assert!((plateau(1.5) - 0.5).abs() < 1e-12);
    }

    fn gaussian_field() -> SupportedField {
        SupportedField::new(
            |m: &Sl2Matrix| {
                let n = m.frob_norm_sq();
                if n >= 9.0 {
                    0.0
                } else {
                    (-(n - 2.0)).exp() * bump6((n - 2.0) / 7.0) * (1.0 + 0.3 * m.b)
                }
            },
            3.0,
        )
    }

    #[test]
    fn transform_vanishes_for_zero_weight_and_large_determinant() {
        let q = Quadrature::default();
        let phi = gaussian_field();
        assert_eq!(midapproach_transform(&phi, |_| 0.0, 0.5, [1.0, 0.2, 0.1, 1.02], &q).unwrap(), 0.0);
        assert_eq!(midapproach_transform(&phi, |_| 1.0, 0.5, [2.0, 0.0, 0.0, 1.0], &q).unwrap(), 0.0);
        assert_eq!(midapproach_transform(&phi, |_| 1.0, 0.5, [0.0, 1.0, 0.0, 1.0], &q).unwrap(), 0.0);
    }

    #[test]
    fn transform_identity() {
        let q = Quadrature::default().with_rel_tol(1e-11).with_panels(16);
        let phi = gaussian_field();
        let h = |t: f64| bump6(t / 2.0) * (1.0 + 0.5 * t);
        let y: f64 = 0.5;
        for (a, b, c) in [(1.1, 0.3, -0.2), (0.6, -0.4, 0.5), (-0.9, 0.2, 0.8)] {
            let d = (1.0 + b * c) / a;
            let m = Sl2Matrix::new(a, b, c, d).unwrap();
            let ry = y.sqrt();
            let f = midapproach_transform(&phi, h, y, [ry * a, ry * b, ry * c, ry * d], &q).unwrap();
            let ay = Sl2Matrix::a_y(y).unwrap();
            let direct = q
                .integrate(|x| phi.eval(&(m * Sl2Matrix::u_x(x) * ay)) * h(x), -2.0, 2.0)
                .unwrap()
                .value;
            assert!((f - direct).abs() < 1e-6, "{f} vs {direct}");
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(24))]

        #[test]
        fn conjugation_symmetry(a0 in -1.0f64..1.0, a1 in -1.0f64..1.0, a2 in -1.0f64..1.0, a3 in -1.0f64..1.0) {
            let cs = CosetSpec::principal(1).unwrap();
            let w = WeightFn::default();
            let p = weighted_expsum_lhs(&cs, [a0, a1, a2, a3], 6.0, &w).unwrap();
            let m = weighted_expsum_lhs(&cs, [-a0, -a1, -a2, -a3], 6.0, &w).unwrap();
            prop_assert!((p - m.conj()).norm() < 1e-9);
            let zero = weighted_expsum_lhs(&cs, [0.0; 4], 6.0, &w).unwrap();
            prop_assert!(p.norm() <= zero.re + 1e-9);
        }

        #[test]
        fn twisted_ball_matches_filter(u in -1.0f64..1.0, lv in -0.7f64..0.7, th in 0.0f64..6.28, rho in 2.0f64..7.0) {
            let m = crate::sl2core::Iwasawa { u, v: lv.exp(), theta: th }.to_matrix();
            let cs = CosetSpec::principal(1).unwrap();
            let mut got = enumerate_coset_ball(&cs, rho, Some(&m));
            got.sort();
            let bound = (rho * m.inverse().frob_norm()).ceil() as i64;
            let mut want = Vec::new();
            for a in -bound..=bound {
                for b in -bound..=bound {
                    for c in -bound..=bound {
                        if a == 0 && b == 0 { continue; }
                        for d in -bound..=bound {
                            let t = IntMatrix::new(a, b, c, d);
                            if t.det() == 1 && in_ball(&t, Some(&m), rho) {
                                want.push(t);
                            }
                        }
                    }
                }
            }
            want.sort();
            prop_assert_eq!(got, want);
        }
    }
}
