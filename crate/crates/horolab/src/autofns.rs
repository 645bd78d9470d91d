//! Poincaré-series test functions on `Γ\G`.
//!
//! A function is built from a bump profile `φ` on `SL(2,ℝ)` and one integer
//! frequency `m₀`:
//!
//! ```text
//! f(Γ(1, ξ)M) = Σ_{T ∈ Γ(N)} φ(TM) e(tr(m₀ ᵗT⁻¹ ᵗξ)).
//! ```
//!
//! Because `φ` has compact support the sum is finite, the Fourier coefficients
//! are finite sums over the frequency orbit, and the mean is an explicit Haar
//! integral divided by the covolume of `Γ(N)`.

use crate::affine::{GroupElement, Row};
use crate::error::{validation, Error, Result};
use crate::expsum::{enumerate_coset_ball, CosetSpec};
use crate::numeric::{bump6, e, KahanSum, KahanSumC};
use crate::rng;
use crate::sl2core::{IntMatrix, Iwasawa, Sl2Matrix};
use num_complex::Complex64;
use rand::Rng;
use rayon::prelude::*;
use std::f64::consts::PI;

/// An integer `k × 2` matrix, stored row by row.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Freq(pub Vec<[i64; 2]>);

impl Freq {
    pub fn zero(k: usize) -> Self {
        Freq(vec![[0, 0]; k])
    }

    pub fn k(&self) -> usize {
        self.0.len()
    }

    pub fn is_zero(&self) -> bool {
        self.0.iter().all(|r| *r == [0, 0])
    }

    /// `m·T`.
    pub fn times(&self, t: &IntMatrix) -> Freq {
        Freq(self.0.iter().map(|r| t.act_row(*r)).collect())
    }

    /// `m·ᵗT⁻¹`, the action through which `Γ` moves frequencies.
    pub fn dual_action(&self, t: &IntMatrix) -> Freq {
        self.times(&t.inverse().transpose())
    }

    /// `tr(m ᵗξ) = Σ m_ij ξ_ij`.
    pub fn pair(&self, xi: &[Row]) -> f64 {
        self.0
            .iter()
            .zip(xi)
            .map(|(m, x)| m[0] as f64 * x[0] + m[1] as f64 * x[1])
            .sum()
    }
}

/// The radial bump `bump6((‖M‖² − 2)/(ρ₀² − 2))`, optionally modulated by
/// `1 + amplitude·cos θ(M)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BumpProfile {
    rho0: f64,
    amplitude: f64,
}

impl BumpProfile {
    pub fn new(rho0: f64, amplitude: f64) -> Result<Self> {
        if !(rho0 > std::f64::consts::SQRT_2 && rho0.is_finite()) {
            return Err(validation(format!("support radius must exceed √2, got {rho0}")));
        }
        if !(amplitude.abs() <= 1.0) {
            return Err(validation(format!("amplitude must lie in [−1, 1], got {amplitude}")));
        }
        Ok(Self { rho0, amplitude })
    }

    pub fn radius(&self) -> f64 {
        self.rho0
    }

    pub fn amplitude(&self) -> f64 {
        self.amplitude
    }

    pub fn eval(&self, m: &Sl2Matrix) -> f64 {
        let n2 = m.frob_norm_sq();
        let r2 = self.rho0 * self.rho0;
        if n2 >= r2 {
            return 0.0;
        }
        let radial = bump6((n2 - 2.0).max(0.0) / (r2 - 2.0));
        if self.amplitude == 0.0 {
            radial
        } else {
            let cos_theta = m.d / m.c.hypot(m.d);
            radial * (1.0 + self.amplitude * cos_theta)
        }
    }

    /// `∫ φ dHaar` for the measure `v⁻² du dv dθ`, `θ ∈ [0, 2π)`.
    ///
    /// In Iwasawa coordinates `‖M‖² = (u² + v² + 1)/v`, so the level sets
    /// are hyperbolic circles and `{‖M‖² − 2 ≤ s}` has area `πs`.
    pub fn haar_integral(&self) -> f64 {
        2.0 * PI * PI * (self.rho0 * self.rho0 - 2.0) * 1024.0 / 3003.0
    }
}

/// A function on `Γ\G` read through the split `g = (1₂, ξ)M`.
pub trait TorusField: Sync {
    fn k(&self) -> usize;
    fn eval_split(&self, xi: &[Row], m: &Sl2Matrix) -> Complex64;

    fn evaluate(&self, g: &GroupElement) -> Result<Complex64> {
        if g.k() != self.k() {
            return Err(validation(format!("expected k = {}, got {}", self.k(), g.k())));
        }
        Ok(self.eval_split(&g.torus_part(), &g.m))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PoincareTestFn {
    level: i64,
    m0: Freq,
    profile: BumpProfile,
}

impl PoincareTestFn {
    pub fn new(level: i64, m0: Freq, profile: BumpProfile) -> Result<Self> {
        if level < 1 {
            return Err(validation("level N must be positive"));
        }
        if m0.k() == 0 {
            return Err(validation("frequency needs at least one row"));
        }
        Ok(Self { level, m0, profile })
    }

    pub fn level(&self) -> i64 {
        self.level
    }

    pub fn frequency(&self) -> &Freq {
        &self.m0
    }

    pub fn profile(&self) -> &BumpProfile {
        &self.profile
    }

    /// The `T ∈ Γ(N)` that contribute at `M`, i.e. `‖TM‖ ≤ ρ₀`.
    pub fn contributing(&self, m: &Sl2Matrix) -> Vec<IntMatrix> {
        let cs = CosetSpec::principal(self.level).expect("level validated on construction");
        enumerate_coset_ball(&cs, self.profile.rho0, Some(m))
    }

    /// `f̂(M, m) = Σ_{T : m₀ᵗT⁻¹ = m} φ(TM)`.
    pub fn coefficient_exact(&self, m: &Sl2Matrix, freq: &Freq) -> f64 {
        let acc: KahanSum = self
            .contributing(m)
            .into_iter()
            .filter(|t| self.m0.dual_action(t) == *freq)
            .map(|t| self.profile.eval(&(t.to_real() * *m)))
            .collect();
        acc.value()
    }

    /// The frequencies `m₀ᵗT⁻¹` carried by the torus slice over `M`.
    pub fn frequencies_at(&self, m: &Sl2Matrix) -> Vec<Freq> {
        let mut out: Vec<Freq> = self
            .contributing(m)
            .iter()
            .map(|t| self.m0.dual_action(t))
            .collect();
        out.sort();
        out.dedup();
        out
    }

    /// `∫_X f dμ` for the Haar probability `μ`.
    pub fn mean_value(&self) -> f64 {
        if !self.m0.is_zero() {
            return 0.0;
        }
        self.profile.haar_integral() / covolume(self.level as u64)
    }
}

impl TorusField for PoincareTestFn {
    fn k(&self) -> usize {
        self.m0.k()
    }

    fn eval_split(&self, xi: &[Row], m: &Sl2Matrix) -> Complex64 {
        let acc: KahanSumC = self
            .contributing(m)
            .into_iter()
            .map(|t| {
                let w = self.profile.eval(&(t.to_real() * *m));
                e(self.m0.dual_action(&t).pair(xi)) * w
            })
            .collect();
        acc.value()
    }
}

/// `f_R(M, v) = f(R⁻¹M, v)` for `R ∈ SL(2,ℤ)`.
#[derive(Debug, Clone)]
pub struct TwistedFn<'a, F: TorusField> {
    base: &'a F,
    r: IntMatrix,
}

pub fn twist_fr<F: TorusField>(base: &F, r: IntMatrix) -> Result<TwistedFn<'_, F>> {
    if r.det() != 1 {
        return Err(validation(format!("{r:?} does not have determinant one")));
    }
    Ok(TwistedFn { base, r })
}

impl<F: TorusField> TorusField for TwistedFn<'_, F> {
    fn k(&self) -> usize {
        self.base.k()
    }

    fn eval_split(&self, xi: &[Row], m: &Sl2Matrix) -> Complex64 {
        // (M, ξM) ↦ (R⁻¹M, ξM) moves the torus coordinate to ξR.
        let rr = self.r.to_real();
        let shifted: Vec<Row> = xi
            .iter()
            .map(|x| [x[0] * rr.a + x[1] * rr.c, x[0] * rr.b + x[1] * rr.d])
            .collect();
        self.base.eval_split(&shifted, &(self.r.inverse().to_real() * *m))
    }
}

/// Work limit for the tensor grid in [`fourier_coefficient`].
pub const MAX_TORUS_NODES: u64 = 1 << 24;

/// `∫_{(ℝ/ℤ)^{2k}} f((1₂, ξ)M) e(−tr(m ᵗξ)) dξ` by the periodic trapezoid
/// rule with `panels` nodes per torus coordinate.
pub fn fourier_coefficient<F: TorusField>(
    f: &F,
    m: &Sl2Matrix,
    freq: &Freq,
    panels: usize,
) -> Result<Complex64> {
    let k = f.k();
    if freq.k() != k {
        return Err(validation(format!("frequency has {} rows, field has {k}", freq.k())));
    }
    if panels < 4 {
        return Err(validation(format!("need at least 4 panels, got {panels}")));
    }
    let dims = 2 * k as u32;
    let total = (panels as f64).powi(dims as i32);
    if total > MAX_TORUS_NODES as f64 {
        return Err(Error::ResourceGuard {
            what: "torus quadrature nodes".into(),
            needed: total,
            limit: MAX_TORUS_NODES as f64,
        });
    }
    let total = total as u64;
    let p = panels as u64;
    let inner = total / p;
    let h = 1.0 / panels as f64;
    let partial: Vec<Complex64> = (0..p)
        .into_par_iter()
        .map(|outer| {
            let mut acc = KahanSumC::new();
            let mut xi = vec![[0.0; 2]; k];
            for j in 0..inner {
                let mut idx = outer * inner + j;
                for c in (0..2 * k).rev() {
                    xi[c / 2][c % 2] = (idx % p) as f64 * h;
                    idx /= p;
                }
                acc.add(f.eval_split(&xi, m) * e(-freq.pair(&xi)));
            }
            acc.value()
        })
        .collect();
    let sum: KahanSumC = partial.into_iter().collect();
    Ok(sum.value() / total as f64)
}

/// `|SL(2, ℤ/N)| = N³ ∏_{p | N} (1 − p⁻²)`.
pub fn sl2_mod_order(n: u64) -> u64 {
    let mut order = n * n * n;
    let mut rest = n;
    let mut p = 2;
    while p * p <= rest {
        if rest % p == 0 {
            order = order / (p * p) * (p * p - 1);
            while rest % p == 0 {
                rest /= p;
            }
        }
        p += 1;
    }
    if rest > 1 {
        order = order / (rest * rest) * (rest * rest - 1);
    }
    order
}

/// `vol(Γ(N)\SL(2,ℝ)) = |SL(2,ℤ/N)|·π²/3` for `v⁻² du dv dθ`.
pub fn covolume(n: u64) -> f64 {
    sl2_mod_order(n) as f64 * PI * PI / 3.0
}

/// The elements of `SL(2, ℤ/N)`, entries in `[0, N)`, in lexicographic order.
pub fn sl2_mod_elements(n: i64) -> Vec<IntMatrix> {
    let mut out = Vec::new();
    for a in 0..n {
        for b in 0..n {
            for c in 0..n {
                for d in 0..n {
                    let t = IntMatrix::new(a, b, c, d);
                    if (t.det() - 1).rem_euclid(n) == 0 {
                        out.push(t);
                    }
                }
            }
        }
    }
    out
}

/// Representatives of `Γ(N)\SL(2,ℤ)`: the smallest-norm lift of each residue.
pub fn coset_representatives(n: i64) -> Result<Vec<IntMatrix>> {
    sl2_mod_elements(n)
        .into_iter()
        .map(|r| {
            let cs = CosetSpec::new(n, r)?;
            let mut rho = 2.0;
            loop {
                let mut lifts = enumerate_coset_ball(&cs, rho, None);
                if !lifts.is_empty() {
                    lifts.sort_by_key(|t| (t.frob_norm_sq(), *t));
                    return Ok(lifts[0]);
                }
                rho *= 2.0;
            }
        })
        .collect()
}

/// Monte-Carlo estimate of the mean with its standard error.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MeanEstimate {
    pub mean: f64,
    pub std_error: f64,
    pub samples: usize,
}

/// A Haar-random point of `Γ\G`: a random coset of `Γ(N)` in `SL(2,ℤ)`, a
/// point of the modular fundamental domain (rejection from the Siegel set
/// `|u| ≤ ½, v ≥ √3/2`), `θ ∈ [0, π)` and a uniform torus point.
pub fn sample_quotient<R: Rng>(rng: &mut R, reps: &[IntMatrix], k: usize) -> GroupElement {
    let gamma = reps[rng.gen_range(0..reps.len())];
    let v0 = 3f64.sqrt() / 2.0;
    let (u, v) = loop {
        let u: f64 = rng.gen_range(-0.5..0.5);
        let v = v0 / (1.0 - rng.gen::<f64>());
        if u * u + v * v >= 1.0 {
            break (u, v);
        }
    };
    let theta = rng.gen_range(0.0..PI);
    let m = gamma.to_real() * Iwasawa { u, v, theta }.to_matrix();
    GroupElement::from_torus(&rng::torus_point(rng, k), m)
        .expect("torus point has k rows")
}

/// Average of `Re f` over `samples` Haar-random points, drawn in `blocks`
/// independent streams of `seed`.
pub fn monte_carlo_mean(
    f: &PoincareTestFn,
    samples: usize,
    seed: u64,
    blocks: usize,
) -> Result<MeanEstimate> {
    if samples < 2 || blocks == 0 {
        return Err(validation("need at least two samples and one block"));
    }
    let reps = coset_representatives(f.level())?;
    let per = samples.div_ceil(blocks);
    let sums: Vec<(f64, f64, usize)> = (0..blocks)
        .into_par_iter()
        .map(|b| {
            let mut rng = rng::stream(seed, b as u64);
            let count = per.min(samples.saturating_sub(b * per));
            let (mut s, mut s2) = (KahanSum::new(), KahanSum::new());
            for _ in 0..count {
                let g = sample_quotient(&mut rng, &reps, f.k());
                let x = f.eval_split(&g.torus_part(), &g.m).re;
                s.add(x);
                s2.add(x * x);
            }
            (s.value(), s2.value(), count)
        })
        .collect();
    let n: usize = sums.iter().map(|s| s.2).sum();
    let total: f64 = sums.iter().map(|s| s.0).sum();
    let total2: f64 = sums.iter().map(|s| s.1).sum();
    let mean = total / n as f64;
    let var = (total2 / n as f64 - mean * mean).max(0.0) * n as f64 / (n as f64 - 1.0);
    Ok(MeanEstimate {
        mean,
        std_error: (var / n as f64).sqrt(),
        samples: n,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum OrbitTag {
    Zero,
    A,
    B,
}

/// The class of `m` under `m ↦ mT`, `T ∈ SL(2,ℤ)`, with a normal form and a
/// matrix `T` such that `m·T = canonical`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct OrbitClass {
    pub tag: OrbitTag,
    pub canonical: Freq,
    pub transform: IntMatrix,
}

fn column_op(rows: &mut [[i64; 2]], t: &mut IntMatrix, op: IntMatrix) {
    for r in rows.iter_mut() {
        *r = op.act_row(*r);
    }
    *t = *t * op;
}

/// Normal form under the right `SL(2,ℤ)` action.
///
/// The first nonzero row is brought to `(g, 0)` with `g > 0`; its stabiliser
/// is `{(1 0; c 1)}`, which then fixes the first entry of the next row with a
/// nonzero second entry `y` to the range `[0, |y|)`. The result is unique on
/// each orbit, and the second column vanishes exactly on A-orbits.
pub fn classify_orbit(m: &Freq) -> OrbitClass {
    let mut rows = m.0.clone();
    let mut t = IntMatrix::IDENTITY;
    let Some(p) = rows.iter().position(|r| *r != [0, 0]) else {
        return OrbitClass {
            tag: OrbitTag::Zero,
            canonical: m.clone(),
            transform: t,
        };
    };
    while rows[p][1] != 0 {
        let q = rows[p][0].div_euclid(rows[p][1]);
        column_op(&mut rows, &mut t, IntMatrix::new(1, 0, -q, 1));
        column_op(&mut rows, &mut t, IntMatrix::S);
    }
    if rows[p][0] < 0 {
        column_op(&mut rows, &mut t, IntMatrix::new(-1, 0, 0, -1));
    }
    let tag = match rows[p + 1..].iter().position(|r| r[1] != 0) {
        None => OrbitTag::A,
        Some(off) => {
            let [x, y] = rows[p + 1 + off];
            let c = (x.rem_euclid(y.abs()) - x) / y;
            column_op(&mut rows, &mut t, IntMatrix::new(1, 0, c, 1));
            OrbitTag::B
        }
    };
    OrbitClass {
        tag,
        canonical: Freq(rows),
        transform: t,
    }
}
