//! Numerical experiments for unipotent orbits on `Γ\G`, where
//! `G = SL(2,ℝ) ⋉ (ℝ²)^k` and `Γ = Γ(N) ⋉ (ℤ²)^k`.
//!
//! The crate is organised bottom-up:
//!
//! * [`sl2core`]: matrices, charts, fundamental-domain reduction, Lie fields.
//! * [`affine`]: the semidirect product, grids and the gap function `S_{g,q}(T)`.
//! * [`arith`]: divisor counts, Kloosterman sums, quadratic exponential sums.
//! * [`majorant`]: the Diophantine majorant `δ_m`, LFD scans, bound evaluators.
//! * [`expsum`]: `SL(2,ℤ)` coset enumeration and smooth exponential sums.
//! * [`autofns`]: automorphic test functions and their Fourier coefficients.
//! * [`orbitlab`]: translate, horocycle and long-orbit integrals.

pub mod affine;
pub mod arith;
pub mod autofns;
pub mod error;
pub mod expsum;
pub mod majorant;
pub mod numeric;
pub mod orbitlab;
pub mod quadrature;
pub mod rng;
pub mod sl2core;

pub use error::{Error, Result};
