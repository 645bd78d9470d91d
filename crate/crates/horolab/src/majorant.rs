//! The Diophantine majorant
//!
//! `δ_m(y; ξ) = Σ_{q ≠ 0} Σ_{d ≥ 1} τ(d) ‖q‖^{−m} d^{−3/2} (1 + ‖dqξ‖_ℤ/(d√y))^{−1}`,
//!
//! evaluated as a truncated sum with a certified bound on the remainder, plus
//! the closely related bound of the long-orbit theorem, an LFD scanner, and
//! the one-dimensional sum that drives the splitting argument.
//!
//! Sums run over `q` by increasing `‖q‖` (ties broken lexicographically) and
//! over `d` in increasing order. Per-`q` partial sums may be computed in
//! parallel but are always combined in that order.

use crate::affine::{GroupElement, Row};
use crate::arith::{tau, PreciseReal};
use crate::error::{domain, validation, Result};
use crate::numeric::{script_l, KahanSum};
use rayon::prelude::*;

/// `ζ(3/2)²`, rounded up; bounds `Σ_d τ(d) d^{−3/2}`.
pub const ZETA_THREE_HALVES_SQ: f64 = 6.824_505_7;

/// Truncation and exponent data for `δ_m`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MajorantParams {
    pub m: u32,
    pub k: usize,
    /// Frequencies `q` with `0 < ‖q‖ ≤ q_max` are summed exactly.
    pub q_max: u32,
    /// Moduli `d ≤ d_max` are summed exactly; `None` means `⌈y^{−1/2}⌉`
    /// (for the long-orbit bound, `⌈T^{1/2}⌉`).
    pub d_max: Option<u64>,
}

impl MajorantParams {
    pub const DEFAULT_Q_MAX: u32 = 20;

    pub fn new(m: u32, k: usize, q_max: u32, d_max: Option<u64>) -> Result<Self> {
        if k == 0 {
            return Err(validation("k must be at least 1"));
        }
        if m as usize <= k {
            return Err(domain(format!("δ_m needs m > k, got m = {m}, k = {k}")));
        }
        if q_max == 0 || d_max == Some(0) {
            return Err(validation("truncation bounds must be at least 1"));
        }
        Ok(Self { m, k, q_max, d_max })
    }

    /// `Q_max = 20` and the `y`-dependent default for `D_max`.
    pub fn with_defaults(m: u32, k: usize) -> Result<Self> {
        Self::new(m, k, Self::DEFAULT_Q_MAX, None)
    }

    fn d_for_y(&self, y: f64) -> u64 {
        self.d_max.unwrap_or_else(|| (y.powf(-0.5) - 1e-9).ceil().max(1.0) as u64)
    }

    /// `Σ_{‖q‖ > Q} ‖q‖^{−m} ≤ 2^k k Q^{k−m} (1 + 1/(m − k))`.
    pub fn q_tail(&self) -> f64 {
        let (k, m, q) = (self.k as f64, self.m as f64, self.q_max as f64);
        2f64.powf(k) * k * q.powf(k - m) * (1.0 + 1.0 / (m - k))
    }

    /// Bound on `Σ_{d > D} τ(d) d^{−3/2}`.
    pub fn d_tail(d_max: u64) -> f64 {
        let d = d_max as f64;
        8.0 * d.powf(-0.5) * (d.ln() + 2.0)
    }
}

/// Nonzero `q ∈ ℤ^k` with `‖q‖ ≤ q_max`, sorted by `‖q‖²` then
/// lexicographically.
pub fn frequencies(k: usize, q_max: u32) -> Vec<Vec<i64>> {
    let r = q_max as i64;
    let r2 = r * r;
    let mut out = Vec::new();
    let mut cur = vec![-r; k];
    loop {
        let n2: i64 = cur.iter().map(|x| x * x).sum();
        if n2 > 0 && n2 <= r2 {
            out.push(cur.clone());
        }
        let mut i = k;
        loop {
            if i == 0 {
                out.sort_by_key(|q| (q.iter().map(|x| x * x).sum::<i64>(), q.clone()));
                return out;
            }
            i -= 1;
            if cur[i] < r {
                cur[i] += 1;
                for c in cur.iter_mut().skip(i + 1) {
                    *c = -r;
                }
                break;
            }
        }
    }
}

fn norm(q: &[i64]) -> f64 {
    (q.iter().map(|x| (x * x) as f64).sum::<f64>()).sqrt()
}

/// Truncated value and a certified bound on what the truncation dropped.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DeltaResult {
    pub value: f64,
    pub tail_bound: f64,
    pub q_max: u32,
    pub d_max: u64,
}

impl DeltaResult {
    pub fn upper(&self) -> f64 {
        self.value + self.tail_bound
    }
}

fn check_y(y: f64) -> Result<()> {
    if !(y > 0.0 && y <= 1.0) {
        return Err(domain(format!("y must lie in (0, 1], got {y}")));
    }
    Ok(())
}

fn combine(q: &[i64], xi: &[Row]) -> Row {
    let mut out = [0.0; 2];
    for (qi, r) in q.iter().zip(xi) {
        out[0] += *qi as f64 * r[0];
        out[1] += *qi as f64 * r[1];
    }
    out
}

/// `δ_m(y; ξ)` for a `k×2` matrix `ξ` given by its rows.
pub fn delta_m(p: &MajorantParams, y: f64, xi: &[Row]) -> Result<DeltaResult> {
    check_y(y)?;
    if xi.len() != p.k {
        return Err(validation(format!("ξ has {} rows, expected k = {}", xi.len(), p.k)));
    }
    let d_max = p.d_for_y(y);
    let qs = frequencies(p.k, p.q_max);
    let weights: Vec<f64> = (1..=d_max).map(|d| tau(d) as f64 * (d as f64).powf(-1.5)).collect();
    let inv_sqrt_y = y.sqrt().recip();

    let per_q: Vec<f64> = qs
        .par_iter()
        .map(|q| {
            let qx = combine(q, xi);
            let mut acc = KahanSum::new();
            for (i, w) in weights.iter().enumerate() {
                let d = (i + 1) as f64;
                let (a, b) = (d * qx[0], d * qx[1]);
                let (ra, rb) = (a - a.round(), b - b.round());
                let dist = (ra * ra + rb * rb).sqrt();
                acc.add(w / (1.0 + dist * inv_sqrt_y / d));
            }
            acc.value() * norm(q).powi(-(p.m as i32))
        })
        .collect();
    let value: KahanSum = per_q.into_iter().collect();

    let q_mass: f64 = qs.iter().map(|q| norm(q).powi(-(p.m as i32))).sum();
    let tail_bound = ZETA_THREE_HALVES_SQ * p.q_tail() + q_mass * MajorantParams::d_tail(d_max);
    Ok(DeltaResult {
        value: value.value(),
        tail_bound,
        q_max: p.q_max,
        d_max,
    })
}

/// `δ_m(y; ψ)`: the majorant of the matrix whose left column is `ψ` and whose
/// right column vanishes.
pub fn delta_m_column(p: &MajorantParams, y: f64, psi: &[f64]) -> Result<DeltaResult> {
    let xi: Vec<Row> = psi.iter().map(|&x| [x, 0.0]).collect();
    delta_m(p, y, &xi)
}

/// `min_y δ_m(y; ξ)/(y^{1/4} log(1/y + 1))` over the grid.
pub fn delta_lower_check(p: &MajorantParams, ys: &[f64], xi: &[Row]) -> Result<f64> {
    let mut best = f64::INFINITY;
    for &y in ys {
        let v = delta_m(p, y, xi)?.value;
        best = best.min(v / (y.powf(0.25) * (1.0 / y + 1.0).ln()));
    }
    Ok(best)
}

/// Outcome of an LFD scan.
#[derive(Debug, Clone, PartialEq)]
pub enum LfdOutcome {
    Pass,
    /// The first `(d, q)` in scan order with `‖dq·ᵗξ‖_ℤ < c d^{−α} ‖q‖^{−κ}`.
    Witness { d: u64, q: Vec<i64> },
}

/// Scans `‖dq·ᵗξ‖_ℤ ≥ c·d^{−α}‖q‖^{−κ}` over `1 ≤ d ≤ d_max` and nonzero
/// `q ∈ ℤ^k` with `‖q‖_∞ ≤ q_max`.
///
/// Since the condition is invariant under `q ↦ −q`, only `q` whose first
/// nonzero entry is positive are visited. The scan order is `q` by increasing
/// Euclidean norm (then lexicographic) and, for each `q`, `d` ascending.
pub fn lfd_test(
    xi: &[PreciseReal],
    kappa: f64,
    alpha: f64,
    c: f64,
    d_max: u64,
    q_max: u32,
) -> Result<LfdOutcome> {
    if xi.is_empty() {
        return Err(validation("ξ must have at least one entry"));
    }
    if d_max == 0 || q_max == 0 {
        return Err(validation("scan bounds must be at least 1"));
    }
    if !(c > 0.0) || !(alpha >= 1.0) || !(kappa >= xi.len() as f64) {
        return Err(domain("need c > 0, α ≥ 1 and κ ≥ k"));
    }
    let k = xi.len();
    let r = q_max as i64;
    let mut qs: Vec<Vec<i64>> = Vec::new();
    let mut cur = vec![-r; k];
    'outer: loop {
        if let Some(first) = cur.iter().find(|&&x| x != 0) {
            if *first > 0 {
                qs.push(cur.clone());
            }
        }
        let mut i = k;
        loop {
            if i == 0 {
                break 'outer;
            }
            i -= 1;
            if cur[i] < r {
                cur[i] += 1;
                for c in cur.iter_mut().skip(i + 1) {
                    *c = -r;
                }
                break;
            }
        }
    }
    qs.sort_by_key(|q| (q.iter().map(|x| x * x).sum::<i64>(), q.clone()));

    let hit = qs.par_iter().find_map_first(|q| {
        let qn = norm(q).powf(-kappa);
        for d in 1..=d_max {
            let mut frac = 0.0;
            for (qi, x) in q.iter().zip(xi) {
                frac += x.frac_centered(d as i64 * qi);
            }
            let dist = (frac - frac.round()).abs();
            if dist < c * (d as f64).powf(-alpha) * qn {
                return Some(LfdOutcome::Witness { d, q: q.clone() });
            }
        }
        None
    });
    Ok(hit.unwrap_or(LfdOutcome::Pass))
}

/// The two parts of the long-orbit bound and the truncation remainder.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Theorem4Bound {
    /// `ℒ₃(S_{g,0}(T)^{−1/2})`.
    pub term0: f64,
    /// `Σ_q Σ_d τ(d)‖q‖^{−m}d^{−3/2} ℒ₁(1/(1 + S_{g,dq}(T)/d))`, truncated.
    pub series: f64,
    pub tail: f64,
    pub d_max: u64,
}

impl Theorem4Bound {
    pub fn value(&self) -> f64 {
        self.term0 + self.series
    }
}

/// Evaluates the right-hand side of the long-orbit bound at `g` and `T`.
///
/// The series is truncated at `‖q‖ ≤ Q_max` and `d ≤ D_max` (default
/// `⌈T^{1/2}⌉`); since `ℒ₁ ≤ log 3` on `(0, 1]`, the remainder is at most
/// `log 3` times the tail bound used for `δ_m`.
pub fn theorem4_rhs(g: &GroupElement, t: f64, p: &MajorantParams) -> Result<Theorem4Bound> {
    if !(t >= 2.0 && t.is_finite()) {
        return Err(domain(format!("T must be at least 2, got {t}")));
    }
    if g.k() != p.k {
        return Err(validation(format!("g has rank {}, expected k = {}", g.k(), p.k)));
    }
    let d_max = p.d_max.unwrap_or_else(|| t.sqrt().ceil() as u64);
    let zero = vec![0i64; p.k];
    let s0 = g.gap(&zero, t)?;
    let term0 = script_l(3, s0.powf(-0.5));

    let lattice = g.grid(&zero)?.stretched(t);
    let qs = frequencies(p.k, p.q_max);
    let sqrt_t = t.sqrt();
    let per_q: Vec<Result<f64>> = qs
        .par_iter()
        .map(|q| {
            let v = g.project(q)?.v[0];
            let mut acc = KahanSum::new();
            for d in 1..=d_max {
                let df = d as f64;
                let off = [df * v[0] * sqrt_t, df * v[1] / sqrt_t];
                let grid = crate::affine::PlanarGrid {
                    basis: lattice.basis,
                    offset: off,
                };
                let s = sqrt_t * grid.shortest_sup(false)?.norm;
                let w = tau(d) as f64 * df.powf(-1.5);
                acc.add(w * script_l(1, 1.0 / (1.0 + s / df)));
            }
            Ok(acc.value() * norm(q).powi(-(p.m as i32)))
        })
        .collect();
    let mut series = KahanSum::new();
    for r in per_q {
        series.add(r?);
    }
    let q_mass: f64 = qs.iter().map(|q| norm(q).powi(-(p.m as i32))).sum();
    let tail = 3f64.ln()
        * (ZETA_THREE_HALVES_SQ * p.q_tail() + q_mass * MajorantParams::d_tail(d_max));
    Ok(Theorem4Bound {
        term0,
        series: series.value(),
        tail,
        d_max,
    })
}

/// Both sides of the one-dimensional splitting estimate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Lemma72 {
    /// The sum over `|j| ≤ J_max`.
    pub lhs: f64,
    /// `2α/J_max`, bounding the terms with `|j| > J_max`.
    pub tail: f64,
    pub rhs: f64,
    /// `(lhs + tail)/rhs`.
    pub ratio: f64,
}

/// `Σ_{|j| ≤ J} α/(α+|j|)² (1 + αβ(w₁ + ‖jw₁ + w₂‖_ℤ)/(α+|j|))^{−1}` against
/// `ℒ₁(1/(1 + αβw₁ + βw₂)) + ℒ₂(1/(1 + β))`.
pub fn lemma72_sum(w1: f64, w2: f64, alpha: f64, beta: f64, j_max: u64) -> Result<Lemma72> {
    if !(0.0..=0.5).contains(&w1) || !(0.0..=0.5).contains(&w2) {
        return Err(domain("w₁ and w₂ must lie in [0, 1/2]"));
    }
    if !(alpha >= 0.1) || !(beta > 0.0) || j_max == 0 {
        return Err(domain("need α ≥ 1/10, β > 0 and J_max ≥ 1"));
    }
    let term = |j: i64| {
        let aj = alpha + j.unsigned_abs() as f64;
        let x = j as f64 * w1 + w2;
        let dist = (x - x.round()).abs();
        alpha / (aj * aj) / (1.0 + alpha * beta * (w1 + dist) / aj)
    };
    let mut acc = KahanSum::new();
    acc.add(term(0));
    for j in 1..=j_max as i64 {
        acc.add(term(j));
        acc.add(term(-j));
    }
    let lhs = acc.value();
    let tail = 2.0 * alpha / j_max as f64;
    let rhs = script_l(1, 1.0 / (1.0 + alpha * beta * w1 + beta * w2))
        + script_l(2, 1.0 / (1.0 + beta));
    Ok(Lemma72 {
        lhs,
        tail,
        rhs,
        ratio: (lhs + tail) / rhs,
    })
}
