//! Numerical toolkit for conformally compact Einstein 4-manifolds.
//!
//! The crate is organised bottom-up:
//!
//! * [`tensor`]: chart metrics and the pointwise curvature packet
//!   (Riemann, Ricci, Schouten, σ₂, Weyl and its self-dual split);
//! * [`fg`]: geodesic normal forms `g = s⁻²(ds² + g_s)` and expansion
//!   coefficients of `g_s`;
//! * [`volume`]: volumes of `{s > ε}` and the renormalized volume fit;
//! * [`compactify`]: the positive eigenfunction `Δu = 4u` and the
//!   compactification `u⁻²g`;
//! * [`gb`]: curvature integrals, Gauss–Bonnet and signature identities;
//! * [`topology`]: the renormalized-volume decision criteria;
//! * [`models`]: model metrics with closed-form data;
//! * [`pipeline`]: configuration, the analysis pipeline, invariant checks
//!   and report/CSV output used by the command line tool.

#![allow(clippy::needless_range_loop, clippy::neg_cmp_op_on_partial_ord, clippy::suspicious_arithmetic_impl)]

pub mod chebyshev;
pub mod compactify;
pub mod error;
pub mod fg;
pub mod gb;
pub mod jet;
pub mod lstsq;
pub mod models;
pub mod pipeline;
pub mod quadrature;
pub mod tensor;
pub mod topology;
pub mod volume;

pub use error::{Error, Result};
pub use jet::Jet;
pub use tensor::{CurvaturePacket, MetricField};
