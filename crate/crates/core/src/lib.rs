//! Unbiased estimation under Bregman losses.
//!
//! For a strictly convex generator `φ`, the two losses `D_φ(θ, δ)` and
//! `D_φ(δ, θ)` each admit a bias–variance decomposition. The second one leads
//! back to classical unbiasedness; the first one asks for unbiasedness of
//! `∇φ(δ)` in the dual space ("type-I"), and its optimal unbiased estimators
//! are obtained by Rao–Blackwellizing in the dual space and mapping back
//! through `(∇φ)⁻¹`.
//!
//! | module              | contents                                                     |
//! |---------------------|--------------------------------------------------------------|
//! | [`generators`]      | `φ`, `∇φ`, `(∇φ)⁻¹`, `φ*` for the four builtin generators    |
//! | [`divergence`]      | `D_φ`, dual transport, Bregman means, decompositions         |
//! | [`models`]          | exponential, lognormal and normal families                   |
//! | [`estimators`]      | estimator objects, dual maps, permutation Rao–Blackwellization |
//! | [`risk_lab`]        | Monte Carlo risks, unbiasedness tests, paired comparisons    |
//! | [`discrete_oracle`] | exact enumeration over finite-support i.i.d. models          |
//! | [`cli`]             | the `bregman-umvue` command-line front end                   |
//!
//! ```
//! use bregman_umvue::divergence::bregman_div;
//! use bregman_umvue::generators::Generator;
//!
//! let is = Generator::neg_log(1);
//! let d = bregman_div(&is, &[2.0], &[1.0]).unwrap();
//! assert!((d - (1.0 - 2f64.ln())).abs() < 1e-15);
//! ```

pub mod cli;
pub mod discrete_oracle;
pub mod divergence;
pub mod error;
pub mod estimators;
pub mod generators;
pub mod models;
pub mod risk_lab;
pub mod rng;
pub mod stats;

pub use error::{Error, Result};

/// Crate version, embedded in every emitted report.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");
