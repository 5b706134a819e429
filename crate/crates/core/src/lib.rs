//! Numerical realization of the spherical Whittaker transform on SL(n,ℝ)/GL(n,ℝ)
//! and the quantum non-periodic Toda lattice at ranks one and two.
//!
//! Module map:
//!
//! * [`algebra`] — type-A restricted roots, ρ, the Cartan subspace and the Weyl group.
//! * [`special`] — complex log-gamma, Beta, and `K_{iμ}` of imaginary order.
//! * [`groups`] — Iwasawa factorizations, the norms `|g|`, `‖g‖`, and brute-force
//!   quadrature oracles over `N` (c-function, Jacquet integral, kernel probe).
//! * [`plancherel`] — Gindikin–Karpelevič product and the Plancherel density.
//! * [`whittaker`] — fundamental series solutions and the class-one Whittaker function.
//! * [`toda`] — finite-difference Toda operators, conjugation identities, `D₁`,
//!   and the classical flow.
//! * [`transform`] — forward/inverse Whittaker transform and Parseval.
//!
//! Batch loops go through [`exec`], which uses rayon when the `parallel`
//! feature is enabled and a plain iterator otherwise. Reductions are always
//! performed in node order with pairwise summation, so results do not depend
//! on the worker count.

pub mod algebra;
pub mod error;
pub mod exec;
pub mod groups;
pub mod plancherel;
pub mod quadrature;
pub mod special;
pub mod toda;
pub mod transform;
pub mod whittaker;

pub use error::{Error, Result};
pub use num_complex::Complex64;
