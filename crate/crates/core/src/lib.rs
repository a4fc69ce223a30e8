//! Spectral toolkit for Laplacians on radial metric trees.
//!
//! After symmetry reduction a radial tree with vertex distances `t_n` and
//! branching numbers `b_n` becomes a family of half-line operators `-d²/dt²`
//! with the jump conditions
//!
//! ```text
//! f(t_n+) = √b_n f(t_n−),    f'(t_n+) = f'(t_n−) / √b_n
//! ```
//!
//! The crate computes the Weyl m-function of these operators along two
//! independent routes (a Krein-type block resolvent system and projective
//! transfer-matrix propagation), together with the diagnostics built on top
//! of it: boundary values, spectral densities, Weyl disks, reflectionless
//! defects, right-limits and Simon–Stolz sparseness integrals.
//!
//! Module map:
//!
//! - [`measure`]: atomic measures `Σ β_n δ_{t_n}`, class bounds, weak distance,
//!   right-limits, sparse densification, periodicity of branching sequences.
//! - [`transfer`]: 2×2 transfer matrices, solutions, Simon–Stolz integrals.
//! - [`krein`]: free Green kernel, block system `T(z) + B`, resolvent kernel
//!   and the block formula for `m_+`.
//! - [`weyl`]: Riccati/projective `m_±`, Weyl disks, boundary values,
//!   spectral density and reflectionless defect.
//! - [`treeops`]: direct-sum decomposition of the tree and aggregated reports.

pub mod error;
pub mod krein;
pub mod measure;
pub mod transfer;
pub mod treeops;
pub mod weyl;

pub use error::{Error, Result};
pub use num_complex::Complex64;

/// Complex scalar used throughout the crate.
pub type C64 = Complex64;
