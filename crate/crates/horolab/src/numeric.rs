//! Small numerical helpers: the additive character `e(x)`, compensated
//! summation, and least-squares slope fitting.

use num_complex::Complex64;
use std::f64::consts::TAU;

/// `e(x) = exp(2πi x)`.
///
/// The argument is reduced modulo 1 first so that large integer parts do not
/// eat into the precision of the phase.
#[inline]
pub fn e(x: f64) -> Complex64 {
    let r = x - x.round();
    let (s, c) = (TAU * r).sin_cos();
    Complex64::new(c, s)
}

/// Neumaier's variant of Kahan summation for `f64`.
#[derive(Debug, Clone, Copy, Default)]
pub struct KahanSum {
    sum: f64,
    comp: f64,
}

impl KahanSum {
    pub fn new() -> Self {
        Self::default()
    }

    #[inline]
    pub fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.comp += (self.sum - t) + x;
        } else {
            self.comp += (x - t) + self.sum;
        }
        self.sum = t;
    }

    pub fn value(&self) -> f64 {
        self.sum + self.comp
    }
}

impl Extend<f64> for KahanSum {
    fn extend<I: IntoIterator<Item = f64>>(&mut self, iter: I) {
        for x in iter {
            self.add(x);
        }
    }
}

impl FromIterator<f64> for KahanSum {
    fn from_iter<I: IntoIterator<Item = f64>>(iter: I) -> Self {
        let mut s = Self::new();
        s.extend(iter);
        s
    }
}

/// Compensated summation of complex numbers, one accumulator per component.
#[derive(Debug, Clone, Copy, Default)]
pub struct KahanSumC {
    re: KahanSum,
    im: KahanSum,
}

impl KahanSumC {
    pub fn new() -> Self {
        Self::default()
    }

    #[inline]
    pub fn add(&mut self, z: Complex64) {
        self.re.add(z.re);
        self.im.add(z.im);
    }

    pub fn value(&self) -> Complex64 {
        Complex64::new(self.re.value(), self.im.value())
    }
}

impl Extend<Complex64> for KahanSumC {
    fn extend<I: IntoIterator<Item = Complex64>>(&mut self, iter: I) {
        for z in iter {
            self.add(z);
        }
    }
}

impl FromIterator<Complex64> for KahanSumC {
    fn from_iter<I: IntoIterator<Item = Complex64>>(iter: I) -> Self {
        let mut s = Self::new();
        s.extend(iter);
        s
    }
}

/// Ordinary least-squares line through `(x, y)` pairs.
///
/// Returns `(slope, intercept, rms_residual)`. Needs at least two distinct
/// abscissae; otherwise the slope is `NaN`.
pub fn least_squares(points: &[(f64, f64)]) -> (f64, f64, f64) {
    let n = points.len() as f64;
    let mx = points.iter().map(|p| p.0).sum::<f64>() / n;
    let my = points.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = points.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = points.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let ss: f64 = points
        .iter()
        .map(|p| (p.1 - intercept - slope * p.0).powi(2))
        .sum();
    (slope, intercept, (ss / n).sqrt())
}

/// The logarithmic gauge `ℒ_j(x) = x·(log(2 + 1/x))^j` for `x > 0`, with
/// `ℒ_j(0) = 0` by continuity.
pub fn script_l(j: u32, x: f64) -> f64 {
    if x == 0.0 {
        return 0.0;
    }
    x * (2.0 + 1.0 / x).ln().powi(j as i32)
}

/// The compactly supported weight `(1 − t²)⁶` on `[−1, 1]`, zero outside.
///
/// It is five times continuously differentiable on the whole line.
#[inline]
pub fn bump6(t: f64) -> f64 {
    if t.abs() >= 1.0 {
        0.0
    } else {
        (1.0 - t * t).powi(6)
    }
}

/// `∫_{−1}^{1} (1 − t²)⁶ dt = 2048/3003`.
pub const BUMP6_INTEGRAL: f64 = 2048.0 / 3003.0;

/// Regularised incomplete beta `I_u(6, 6)`: a `C⁵` step from 0 at `u ≤ 0` to 1
/// at `u ≥ 1`, symmetric in the sense `S(u) + S(1 − u) = 1`.
pub fn smooth_step(u: f64) -> f64 {
    if u <= 0.0 {
        return 0.0;
    }
    if u >= 1.0 {
        return 1.0;
    }
    if u > 0.5 {
        return 1.0 - smooth_step(1.0 - u);
    }
    // ∫₀ᵘ t⁵(1−t)⁵ dt expanded in powers of t, divided by B(6,6) = 1/2772.
    const BINOM5: [f64; 6] = [1.0, 5.0, 10.0, 10.0, 5.0, 1.0];
    let mut acc = 0.0;
    let mut sign = 1.0;
    for (j, b) in BINOM5.iter().enumerate() {
        acc += sign * b * u.powi(6 + j as i32) / (6 + j) as f64;
        sign = -sign;
    }
    2772.0 * acc
}
