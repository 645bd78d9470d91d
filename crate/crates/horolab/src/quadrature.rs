//! Adaptive composite Gauss–Legendre quadrature.
//!
//! Each panel is integrated with a 15-point rule and compared against the sum
//! over its two halves. Panels whose discrepancy exceeds their share of the
//! tolerance are bisected, up to a fixed depth. The initial panels are
//! processed in parallel and their results are summed in index order, so the
//! output does not depend on thread scheduling.

use crate::error::{Error, Result};
use gauss_quad::legendre::GaussLegendre;
use num_complex::Complex64;
use rayon::prelude::*;
use std::num::NonZeroUsize;
use std::sync::OnceLock;

const POINTS: usize = 15;

fn rule() -> &'static [(f64, f64)] {
    static RULE: OnceLock<Vec<(f64, f64)>> = OnceLock::new();
    RULE.get_or_init(|| {
        let gl = GaussLegendre::new(NonZeroUsize::new(POINTS).expect("nonzero"));
        gl.as_node_weight_pairs().to_vec()
    })
}

fn panel<F: Fn(f64) -> Complex64>(f: &F, a: f64, b: f64) -> (Complex64, f64) {
    let half = 0.5 * (b - a);
    let mid = 0.5 * (a + b);
    let mut acc = Complex64::new(0.0, 0.0);
    let mut mass = 0.0;
    for &(x, w) in rule() {
        let v = f(mid + half * x);
        acc += v * w;
        mass += v.norm() * w;
    }
    (acc * half, mass * half.abs())
}

/// Outcome of an adaptive integration.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadResult<T> {
    pub value: T,
    pub error_estimate: f64,
    pub panels: usize,
}

/// Settings for [`Quadrature::integrate`] and friends.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Quadrature {
    /// Tolerance relative to the estimated `∫|f|`.
    pub rel_tol: f64,
    pub abs_tol: f64,
    /// Maximum number of bisections applied to any initial panel.
    pub max_depth: u32,
    /// Number of equal panels the interval is cut into before adapting.
    pub initial_panels: usize,
}

impl Default for Quadrature {
    fn default() -> Self {
        Self {
            rel_tol: 1e-8,
            abs_tol: 0.0,
            max_depth: 20,
            initial_panels: 1,
        }
    }
}

struct Local {
    value: Complex64,
    error: f64,
    panels: usize,
    converged: bool,
}

impl Quadrature {
    pub fn with_panels(mut self, n: usize) -> Self {
        self.initial_panels = n.max(1);
        self
    }

    pub fn with_rel_tol(mut self, tol: f64) -> Self {
        self.rel_tol = tol;
        self
    }

    pub fn with_abs_tol(mut self, tol: f64) -> Self {
        self.abs_tol = tol;
        self
    }

    /// Integrates a complex-valued function over `[a, b]`.
    pub fn integrate_complex<F>(&self, f: F, a: f64, b: f64) -> Result<QuadResult<Complex64>>
    where
        F: Fn(f64) -> Complex64 + Sync,
    {
        if !(a.is_finite() && b.is_finite()) {
            return Err(Error::Domain(format!("non-finite interval [{a}, {b}]")));
        }
        if a == b {
            return Ok(QuadResult {
                value: Complex64::new(0.0, 0.0),
                error_estimate: 0.0,
                panels: 0,
            });
        }
        let n = self.initial_panels.max(1);
        let width = (b - a) / n as f64;
        let edges: Vec<(f64, f64)> = (0..n)
            .map(|i| {
                let lo = a + width * i as f64;
                let hi = if i + 1 == n { b } else { a + width * (i + 1) as f64 };
                (lo, hi)
            })
            .collect();

        let coarse: Vec<(Complex64, f64)> =
            edges.par_iter().map(|&(lo, hi)| panel(&f, lo, hi)).collect();
        let mass: f64 = coarse.iter().map(|c| c.1).sum();
        let tol = self.abs_tol.max(self.rel_tol * mass);

        let locals: Vec<Local> = edges
            .par_iter()
            .zip(coarse.par_iter())
            .map(|(&(lo, hi), &(whole, _))| {
                let budget = tol * (hi - lo) / (b - a);
                self.refine(&f, lo, hi, whole, budget, 0)
            })
            .collect();

        let mut value = Complex64::new(0.0, 0.0);
        let mut error = 0.0;
        let mut panels = 0;
        let mut converged = true;
        for l in &locals {
            value += l.value;
            error += l.error;
            panels += l.panels;
            converged &= l.converged;
        }
        if !converged && error > tol {
            return Err(Error::NonConvergence {
                what: "adaptive Gauss-Legendre quadrature".into(),
                estimate: value.norm(),
                error,
            });
        }
        Ok(QuadResult {
            value,
            error_estimate: error,
            panels,
        })
    }

    /// Integrates a real-valued function over `[a, b]`.
    pub fn integrate<F>(&self, f: F, a: f64, b: f64) -> Result<QuadResult<f64>>
    where
        F: Fn(f64) -> f64 + Sync,
    {
        let r = self.integrate_complex(|x| Complex64::new(f(x), 0.0), a, b)?;
        Ok(QuadResult {
            value: r.value.re,
            error_estimate: r.error_estimate,
            panels: r.panels,
        })
    }

    fn refine<F: Fn(f64) -> Complex64>(
        &self,
        f: &F,
        a: f64,
        b: f64,
        whole: Complex64,
        budget: f64,
        depth: u32,
    ) -> Local {
        let mid = 0.5 * (a + b);
        let (left, _) = panel(f, a, mid);
        let (right, _) = panel(f, mid, b);
        let halves = left + right;
        let err = (halves - whole).norm();
        if err <= budget || mid <= a || mid >= b {
            return Local {
                value: halves,
                error: err,
                panels: 2,
                converged: true,
            };
        }
        if depth + 1 >= self.max_depth {
            return Local {
                value: halves,
                error: err,
                panels: 2,
                converged: false,
            };
        }
        let l = self.refine(f, a, mid, left, 0.5 * budget, depth + 1);
        let r = self.refine(f, mid, b, right, 0.5 * budget, depth + 1);
        Local {
            value: l.value + r.value,
            error: l.error + r.error,
            panels: l.panels + r.panels,
            converged: l.converged && r.converged,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numeric::{bump6, BUMP6_INTEGRAL};

    #[test]
    fn polynomial_is_exact() {
        let q = Quadrature::default();
        let r = q.integrate(|x| x.powi(6), 0.0, 2.0).unwrap();
        assert!((r.value - 128.0 / 7.0).abs() < 1e-12);
    }

    #[test]
    fn bump_integral() {
        let q = Quadrature::default().with_panels(4).with_rel_tol(1e-13);
        let r = q.integrate(bump6, -1.5, 1.5).unwrap();
        assert!((r.value - BUMP6_INTEGRAL).abs() < 1e-11);
    }

    #[test]
    fn oscillatory_integrand() {
        let q = Quadrature::default().with_panels(8);
        let r = q.integrate(|x| (50.0 * x).cos(), 0.0, 3.0).unwrap();
        assert!((r.value - (150.0f64).sin() / 50.0).abs() < 1e-9);
    }

    #[test]
    fn narrow_peak_needs_initial_panels() {
        let g = |x: f64| bump6((x - 0.3137) / 1e-3);
        let q = Quadrature::default().with_panels(2000);
        let r = q.integrate(g, -1.0, 1.0).unwrap();
        assert!((r.value - 1e-3 * BUMP6_INTEGRAL).abs() < 1e-12);
    }

    #[test]
    fn reports_non_convergence() {
        let q = Quadrature {
            max_depth: 3,
            ..Quadrature::default()
        };
        let r = q.integrate(|x: f64| if x < 0.123_456 { 0.0 } else { 1.0 }, 0.0, 1.0);
        assert!(matches!(r, Err(Error::NonConvergence { .. })));
    }
}
