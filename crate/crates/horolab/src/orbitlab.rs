//! Orbit experiments on `Γ\G`: expanding translates of horocycle pieces,
//! smeared and long orbit averages, the splitting of a long orbit into short
//! pieces near the cusp, and slope fitting for decay tables.
//!
//! All orbit integrals go through one routine that integrates
//! `x ↦ f((1₂, ξ)M u_x a_y) w(x)`. Its initial panels are one per two units
//! of horocycle flow time, so the panel count grows like `1/y` and the
//! adaptive refinement only has to resolve the shape of `f` inside each.

use crate::affine::{GroupElement, Row};
use crate::autofns::{PoincareTestFn, TorusField};
use crate::error::{domain, validation, Result};
use crate::majorant::{delta_m, MajorantParams};
use crate::numeric::{bump6, least_squares, smooth_step, BUMP6_INTEGRAL};
use crate::quadrature::Quadrature;
use crate::sl2core::{IntMatrix, Sl2Matrix};
use num_complex::Complex64;
use std::f64::consts::PI;
use std::fmt;
use std::sync::Arc;

/// Weights on the real line.
#[derive(Clone)]
pub enum Weight1D {
    Zero,
    Constant(f64),
    /// `bump6(x/w)`, supported on `[−w, w]`.
    Bump6 { half_width: f64 },
    /// `(1 + x²)^{−22}`, integrated over `[−3, 3]`.
    Decay44,
    Custom {
        f: Arc<dyn Fn(f64) -> f64 + Send + Sync>,
        cutoff: f64,
    },
}

impl fmt::Debug for Weight1D {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Weight1D::Zero => write!(f, "Zero"),
            Weight1D::Constant(c) => write!(f, "Constant({c})"),
            Weight1D::Bump6 { half_width } => write!(f, "Bump6 {{ half_width: {half_width} }}"),
            Weight1D::Decay44 => write!(f, "Decay44"),
            Weight1D::Custom { cutoff, .. } => write!(f, "Custom {{ cutoff: {cutoff} }}"),
        }
    }
}

/// Beyond `|x| = 3` the weight `(1 + x²)^{−22}` is below `10⁻²⁰`.
const DECAY44_WINDOW: f64 = 3.0;

impl Weight1D {
    pub fn custom(f: impl Fn(f64) -> f64 + Send + Sync + 'static, cutoff: f64) -> Self {
        Weight1D::Custom {
            f: Arc::new(f),
            cutoff,
        }
    }

    pub fn eval(&self, x: f64) -> f64 {
        match self {
            Weight1D::Zero => 0.0,
            Weight1D::Constant(c) => *c,
            Weight1D::Bump6 { half_width } => bump6(x / half_width),
            Weight1D::Decay44 => (1.0 + x * x).powi(-22),
            Weight1D::Custom { f, cutoff } => {
                if x.abs() <= *cutoff {
                    f(x)
                } else {
                    0.0
                }
            }
        }
    }

    /// Half-width of the window outside which the weight is treated as zero.
    pub fn cutoff(&self) -> f64 {
        match self {
            Weight1D::Zero => 0.0,
            Weight1D::Constant(_) => f64::INFINITY,
            Weight1D::Bump6 { half_width } => *half_width,
            Weight1D::Decay44 => DECAY44_WINDOW,
            Weight1D::Custom { cutoff, .. } => *cutoff,
        }
    }

    pub fn is_zero(&self) -> bool {
        matches!(self, Weight1D::Zero)
    }

    /// `∫_ℝ h`.
    pub fn integral(&self, quad: &Quadrature) -> Result<f64> {
        match self {
            Weight1D::Zero => Ok(0.0),
            Weight1D::Constant(_) => Err(validation("a constant weight is not integrable")),
            Weight1D::Bump6 { half_width } => Ok(half_width * BUMP6_INTEGRAL),
            // π·(41!!)/(42!!)
            Weight1D::Decay44 => Ok((1..=21).fold(PI, |acc, i| acc * (2 * i - 1) as f64 / (2 * i) as f64)),
            Weight1D::Custom { cutoff, .. } => {
                Ok(quad.with_panels(16).integrate(|x| self.eval(x), -cutoff, *cutoff)?.value)
            }
        }
    }
}

/// `Φ = bump6/∫bump6`: nonnegative, supported on `[−1, 1]`, total mass one.
pub fn unit_bump(u: f64) -> f64 {
    bump6(u) / BUMP6_INTEGRAL
}

/// Checks that a schedule is nonempty and strictly monotone.
pub fn validate_schedule(points: &[f64]) -> Result<()> {
    if points.is_empty() {
        return Err(validation("schedule must not be empty"));
    }
    let up = points.windows(2).all(|w| w[0] < w[1]);
    let down = points.windows(2).all(|w| w[0] > w[1]);
    if !(up || down) {
        return Err(validation("schedule must be strictly monotone"));
    }
    Ok(())
}

/// `M u_x a_y` written out entrywise.
fn horocycle_point(m: &Sl2Matrix, x: f64, y: f64) -> Sl2Matrix {
    let r = y.sqrt();
    Sl2Matrix::new_unchecked(
        m.a * r,
        (m.a * x + m.b) / r,
        m.c * r,
        (m.c * x + m.d) / r,
    )
}

/// `∫_a^b f((1₂, ξ)M u_x a_y) w(x) dx`.
pub fn orbit_integral<F, W>(
    f: &F,
    xi: &[Row],
    m: &Sl2Matrix,
    y: f64,
    w: W,
    a: f64,
    b: f64,
    quad: &Quadrature,
) -> Result<Complex64>
where
    F: TorusField,
    W: Fn(f64) -> f64 + Sync,
{
    if !(y > 0.0 && y.is_finite()) {
        return Err(domain(format!("y must be positive, got {y}")));
    }
    if !(b > a) {
        return Ok(Complex64::new(0.0, 0.0));
    }
    let panels = ((b - a) / (2.0 * y)).ceil().min(1e7) as usize;
    let q = quad.with_panels(panels.max(quad.initial_panels));
    let integrand = |x: f64| {
        let wx = w(x);
        if wx == 0.0 {
            Complex64::new(0.0, 0.0)
        } else {
            f.eval_split(xi, &horocycle_point(m, x, y)) * wx
        }
    };
    Ok(q.integrate_complex(integrand, a, b)?.value)
}

/// The data of a translate experiment: `f`, the weight `h`, the initial point
/// `(1₂, ξ)M`, and numerical settings.
#[derive(Debug, Clone)]
pub struct OrbitExperiment {
    pub f: PoincareTestFn,
    pub h: Weight1D,
    pub xi: Vec<Row>,
    pub m: Sl2Matrix,
    pub quad: Quadrature,
    pub majorant: MajorantParams,
}

impl OrbitExperiment {
    pub fn new(
        f: PoincareTestFn,
        h: Weight1D,
        xi: Vec<Row>,
        m: Sl2Matrix,
        majorant: MajorantParams,
    ) -> Result<Self> {
        if xi.len() != f.k() {
            return Err(validation(format!("ξ has {} rows, f has k = {}", xi.len(), f.k())));
        }
        if majorant.k != f.k() {
            return Err(validation("majorant rank differs from the rank of f"));
        }
        if !h.cutoff().is_finite() {
            return Err(validation("h must be integrable"));
        }
        Ok(Self {
            f,
            h,
            xi,
            m,
            quad: Quadrature::default(),
            majorant,
        })
    }

    pub fn with_quadrature(mut self, quad: Quadrature) -> Self {
        self.quad = quad;
        self
    }
}

fn check_unit_y(y: f64) -> Result<()> {
    if !(y > 0.0 && y <= 1.0) {
        return Err(domain(format!("y must lie in (0, 1], got {y}")));
    }
    Ok(())
}

/// `∫ f(Γ(1₂, ξ)M u_x a_y) h(x) dx`.
pub fn translate_integral(exp: &OrbitExperiment, y: f64) -> Result<Complex64> {
    check_unit_y(y)?;
    if exp.h.is_zero() {
        return Ok(Complex64::new(0.0, 0.0));
    }
    let cut = exp.h.cutoff();
    orbit_integral(&exp.f, &exp.xi, &exp.m, y, |x| exp.h.eval(x), -cut, cut, &exp.quad)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EquidistError {
    pub value: Complex64,
    /// `∫_X f dμ · ∫ h`.
    pub main: f64,
    pub error: f64,
    /// `‖M‖¹³ δ_m(y; ξ)`.
    pub bound: f64,
    pub ratio: f64,
}

pub fn equidist_error(exp: &OrbitExperiment, y: f64) -> Result<EquidistError> {
    let value = translate_integral(exp, y)?;
    let main = exp.f.mean_value() * exp.h.integral(&exp.quad)?;
    let error = (value - main).norm();
    let delta = delta_m(&exp.majorant, y, &exp.xi)?;
    let bound = exp.m.frob_norm().powi(13) * delta.value;
    Ok(EquidistError {
        value,
        main,
        error,
        bound,
        ratio: error / bound,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Smeared {
    pub value: Complex64,
    /// `∫_X f dμ · ∫ η(Tx) h(x) dx`.
    pub main: f64,
}

impl Smeared {
    pub fn error(&self) -> f64 {
        (self.value - self.main).norm()
    }
}

fn check_smearing(y: f64, t: f64, h: &Weight1D) -> Result<()> {
    check_unit_y(y)?;
    if !(t >= 1.0 && t.is_finite()) {
        return Err(domain(format!("T must be at least 1, got {t}")));
    }
    if !h.cutoff().is_finite() {
        return Err(validation("h must be integrable"));
    }
    Ok(())
}

/// `(1/T) ∫ f(Γ(1₂, ξ)u_x a_y) η(x) h(x/T) dx`, integrated over
/// `|x| ≤ T·cutoff(h)`. The matrix part of `exp` is not used.
pub fn smeared_average(exp: &OrbitExperiment, y: f64, t: f64, eta: &Weight1D) -> Result<Smeared> {
    check_smearing(y, t, &exp.h)?;
    if exp.h.is_zero() || eta.is_zero() {
        return Ok(Smeared {
            value: Complex64::new(0.0, 0.0),
            main: 0.0,
        });
    }
    let span = t * exp.h.cutoff();
    let weight = |x: f64| eta.eval(x) * exp.h.eval(x / t);
    let value = orbit_integral(
        &exp.f,
        &exp.xi,
        &Sl2Matrix::IDENTITY,
        y,
        weight,
        -span,
        span,
        &exp.quad,
    )? / t;
    let panels = (span / y).ceil().min(1e7) as usize;
    let mass = exp
        .quad
        .with_panels(panels.max(exp.quad.initial_panels))
        .integrate(weight, -span, span)?
        .value;
    Ok(Smeared {
        value,
        main: exp.f.mean_value() * mass / t,
    })
}

/// The partition `ω(x) = 1 − S(|x|/N)` on `[−N, N]`; its `N`-translates sum
/// to one because `S(1 − u) = 1 − S(u)`.
pub fn window(x: f64, n: f64) -> f64 {
    if x.abs() >= n {
        0.0
    } else {
        1.0 - smooth_step(x.abs() / n)
    }
}

/// The smeared average recomputed window by window: the piece of the orbit
/// over `[jN − N, jN + N]` is moved back to `[−N, N]` by `u_{jN} ∈ Γ(N)`,
/// which replaces `ξ` with `ξu_{jN}`.
pub fn smeared_average_windows(exp: &OrbitExperiment, y: f64, t: f64, eta: &Weight1D) -> Result<Complex64> {
    check_smearing(y, t, &exp.h)?;
    if exp.h.is_zero() || eta.is_zero() {
        return Ok(Complex64::new(0.0, 0.0));
    }
    let n = exp.f.level() as f64;
    let span = t * exp.h.cutoff();
    let j_max = (span / n).ceil() as i64 + 1;
    let mut total = Complex64::new(0.0, 0.0);
    for j in -j_max..=j_max {
        let shift = j as f64 * n;
        let xi_j: Vec<Row> = exp.xi.iter().map(|r| [r[0], shift * r[0] + r[1]]).collect();
        let weight = |x: f64| window(x, n) * eta.eval(x + shift) * exp.h.eval((x + shift) / t);
        total += orbit_integral(&exp.f, &xi_j, &Sl2Matrix::IDENTITY, y, weight, -n, n, &exp.quad)?;
    }
    Ok(total / t)
}

fn check_long_orbit(t: f64, h: &Weight1D) -> Result<()> {
    if !(t >= 1.0 && t.is_finite()) {
        return Err(domain(format!("T must be at least 1, got {t}")));
    }
    if h.cutoff() > 1.0 {
        return Err(validation("h must be supported in [−1, 1]"));
    }
    Ok(())
}

/// `(1/T) ∫ f(Γ g u_t) h(t/T) dt`, computed as `∫ f(Γ g u_{Tx}) h(x) dx`.
pub fn long_orbit_average<F: TorusField>(
    f: &F,
    g: &GroupElement,
    t: f64,
    h: &Weight1D,
    quad: &Quadrature,
) -> Result<Complex64> {
    check_long_orbit(t, h)?;
    if h.is_zero() {
        return Ok(Complex64::new(0.0, 0.0));
    }
    let xi = g.torus_part();
    let m = g.m;
    let cut = h.cutoff();
    let panels = (t * cut).ceil().min(1e7) as usize;
    let q = quad.with_panels(panels.max(quad.initial_panels));
    let integrand = |x: f64| {
        let hx = h.eval(x);
        if hx == 0.0 {
            return Complex64::new(0.0, 0.0);
        }
        let s = t * x;
        let mu = Sl2Matrix::new_unchecked(m.a, m.a * s + m.b, m.c, m.c * s + m.d);
        f.eval_split(&xi, &mu) * hx
    };
    Ok(q.integrate_complex(integrand, -cut, cut)?.value)
}

/// `ξ·T` for a real row and an integer matrix.
fn row_times_int(r: Row, t: &IntMatrix) -> Row {
    let (a, b, c, d) = (t.a as f64, t.b as f64, t.c as f64, t.d as f64);
    [r[0] * a + r[1] * c, r[0] * b + r[1] * d]
}

/// The same average written as `∫ f(Γ(1₂, ξγ)γ⁻¹M a_T u_x a_{1/T}) h(x) dx`,
/// with `γ` reducing `M a_T` to the fundamental domain. At level `N > 1`
/// the reduction is skipped, since `γ` need not lie in `Γ(N)`.
pub fn long_orbit_translate_form(
    f: &PoincareTestFn,
    g: &GroupElement,
    t: f64,
    h: &Weight1D,
    quad: &Quadrature,
) -> Result<Complex64> {
    check_long_orbit(t, h)?;
    if h.is_zero() {
        return Ok(Complex64::new(0.0, 0.0));
    }
    let mat = g.m * Sl2Matrix::a_y(t)?;
    let xi = g.torus_part();
    let (xi, base) = if f.level() == 1 {
        let red = mat.reduce()?;
        (xi.iter().map(|r| row_times_int(*r, &red.gamma)).collect(), red.reduced)
    } else {
        (xi, mat)
    };
    let cut = h.cutoff();
    orbit_integral(f, &xi, &base, 1.0 / t, |x| h.eval(x), -cut, cut, quad)
}

/// `y_g(T) = 𝒴(M a_T)/T`.
pub fn y_g(g: &GroupElement, t: f64) -> Result<f64> {
    if !(t >= 1.0 && t.is_finite()) {
        return Err(domain(format!("T must be at least 1, got {t}")));
    }
    Ok((g.m * Sl2Matrix::a_y(t)?).cuspidal_height()? / t)
}

/// Local data for the piece of a long orbit near the point `z`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SplitData {
    /// `(cz + d)^{−2}`.
    pub t: f64,
    /// `⌊(az + b)/(cz + d)⌋`.
    pub j: i64,
    /// `u_{−j} (a b; c d) a_{1/t} u_{tz}`.
    pub m_tilde: Sl2Matrix,
    /// `γ` with `(a b; c d) = γ⁻¹ M a_T` reduced.
    pub gamma: IntMatrix,
    pub base: Sl2Matrix,
    /// `𝒴(M a_T)`.
    pub height: f64,
}

pub fn orbit_split(g: &GroupElement, t: f64, z: f64) -> Result<SplitData> {
    if !(t >= 1.0 && t.is_finite()) {
        return Err(domain(format!("T must be at least 1, got {t}")));
    }
    let red = (g.m * Sl2Matrix::a_y(t)?).reduce()?;
    split_at(&red.reduced, red.gamma, red.tau.im, z)
}

fn split_at(base: &Sl2Matrix, gamma: IntMatrix, height: f64, z: f64) -> Result<SplitData> {
    let Sl2Matrix { a, b, c, d } = *base;
    let den = c * z + d;
    if den == 0.0 {
        return Err(domain(format!("z = {z} is the pole −d/c")));
    }
    let tz = den.powi(-2);
    let ratio = (a * z + b) / den;
    if !ratio.is_finite() || ratio.abs() > 9.0e15 {
        return Err(domain(format!("z = {z} is too close to the pole −d/c")));
    }
    let j = ratio.floor();
    let rt = tz.sqrt();
    let m_tilde = Sl2Matrix::new_unchecked((a - j * c) / rt, (a * z + b - j * den) * rt, c / rt, den * rt);
    Ok(SplitData {
        t: tz,
        j: j as i64,
        m_tilde,
        gamma,
        base: *base,
        height,
    })
}

/// `(cs + d)^{−2} ∫ Φ((z − s)/(cs + d)²) dz`, which is one.
pub fn partition_identity(c: f64, d: f64, s: f64, quad: &Quadrature) -> Result<f64> {
    let w = (c * s + d).powi(2);
    if w == 0.0 {
        return Err(domain("cs + d = 0"));
    }
    let r = quad
        .with_panels(4)
        .integrate(|z| unit_bump((z - s) / w), s - w, s + w)?;
    Ok(r.value / w)
}

/// The long orbit average assembled from its split form:
///
/// ```text
/// ∫ dz (1/t) ∫ f(Γ(1₂, ξγu_j) M̃ u_x a_{t/T}) h̃_z(x) dx,
/// h̃_z(x) = h(s) Φ((z − s)/(cs + d)²)(cs + d)^{−2},  s = z + x/t.
/// ```
///
/// The outer integral starts from `z_panels` panels. Only level one is
/// supported, because `γ` ranges over all of `SL(2,ℤ)`.
pub fn split_form_average(
    f: &PoincareTestFn,
    g: &GroupElement,
    t: f64,
    h: &Weight1D,
    z_panels: usize,
    quad: &Quadrature,
) -> Result<Complex64> {
    check_long_orbit(t, h)?;
    if f.level() != 1 {
        return Err(validation("the split form needs level N = 1"));
    }
    if h.is_zero() {
        return Ok(Complex64::new(0.0, 0.0));
    }
    let red = (g.m * Sl2Matrix::a_y(t)?).reduce()?;
    let base = red.reduced;
    let (c, d) = (base.c, base.d);
    let cut = h.cutoff();
    let reach = (d - c * cut).powi(2).max((d + c * cut).powi(2));
    let xi: Vec<Row> = g.torus_part().iter().map(|r| row_times_int(*r, &red.gamma)).collect();
    let z_span = 2.0 * (cut + reach);
    let floor = quad.rel_tol * h.integral(quad)?.abs() / z_span;
    let inner = |z: f64| -> Result<Complex64> {
        let sd = match split_at(&base, red.gamma, red.tau.im, z) {
            Ok(sd) => sd,
            Err(_) => return Ok(Complex64::new(0.0, 0.0)),
        };
        let lo = (z - reach).max(-cut);
        let hi = (z + reach).min(cut);
        if lo >= hi {
            return Ok(Complex64::new(0.0, 0.0));
        }
        let jj = sd.j as f64;
        let xi_j: Vec<Row> = xi.iter().map(|r| [r[0], jj * r[0] + r[1]]).collect();
        let tz = sd.t;
        let weight = |x: f64| {
            let s = z + x / tz;
            let w = (c * s + d).powi(2);
            if w == 0.0 {
                0.0
            } else {
                h.eval(s) * unit_bump((z - s) / w) / w
            }
        };
        let q = quad.with_abs_tol(quad.abs_tol.max(floor * tz));
        let v = orbit_integral(f, &xi_j, &sd.m_tilde, tz / t, weight, tz * (lo - z), tz * (hi - z), &q)?;
        Ok(v / tz)
    };
    let zq = quad.with_panels(z_panels.max(1));
    let failure = std::sync::Mutex::new(None);
    let r = zq.integrate_complex(
        |z| match inner(z) {
            Ok(v) => v,
            Err(e) => {
                failure.lock().expect("poisoned").get_or_insert(e);
                Complex64::new(0.0, 0.0)
            }
        },
        -cut - reach,
        cut + reach,
    )?;
    if let Some(e) = failure.into_inner().expect("poisoned") {
        return Err(e);
    }
    Ok(r.value)
}

/// Rows `(y, |∫ f̂(M u_x a_y, 0) h dx − ∫f dμ ∫h|)` for an `f` with `m₀ = 0`.
pub fn horocycle_main_term(
    f: &PoincareTestFn,
    m: &Sl2Matrix,
    h: &Weight1D,
    ys: &[f64],
    quad: &Quadrature,
) -> Result<Vec<(f64, f64)>> {
    if !f.frequency().is_zero() {
        return Err(validation("the horocycle main term needs m₀ = 0"));
    }
    if !h.cutoff().is_finite() {
        return Err(validation("h must be integrable"));
    }
    validate_schedule(ys)?;
    let main = f.mean_value() * h.integral(quad)?;
    let origin = vec![[0.0; 2]; f.k()];
    ys.iter()
        .map(|&y| {
            check_unit_y(y)?;
            if h.is_zero() {
                return Ok((y, 0.0));
            }
            let cut = h.cutoff();
            let v = orbit_integral(f, &origin, m, y, |x| h.eval(x), -cut, cut, quad)?;
            Ok((y, (v.re - main).abs()))
        })
        .collect()
}

/// A least-squares line through `(log x, log v)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DecayFit {
    pub slope: f64,
    pub intercept: f64,
    /// Root-mean-square residual in log space.
    pub residual: f64,
}

pub fn decay_fit(points: &[(f64, f64)]) -> Result<DecayFit> {
    if points.len() < 3 {
        return Err(validation(format!("need at least 3 points, got {}", points.len())));
    }
    if let Some(p) = points.iter().find(|(x, v)| !(*x > 0.0 && *v > 0.0)) {
        return Err(domain(format!("decay fit needs positive data, got {p:?}")));
    }
    let logs: Vec<(f64, f64)> = points.iter().map(|(x, v)| (x.ln(), v.ln())).collect();
    let (slope, intercept, residual) = least_squares(&logs);
    Ok(DecayFit {
        slope,
        intercept,
        residual,
    })
}
