//! Genus-0 entire functions, their heat kernels, and certified
//! complete-monotonicity scans.
//!
//! An entire function `f` of order below one with `f(0) > 0` factors as
//! `f(z) = f(0) Π (1 + z/λ_n)`. When every `λ_n` satisfies
//! `Re λ_n ≥ β₀ |λ_n| > 0`, all `λ_n` are positive exactly when every
//!
//! ```text
//! G_k(x) = ∫_0^∞ e^{-xt} (-t)^k Θ^{(k)}(t) dt = k! Σ λ_n^k / (x + λ_n)^{k+1},   Θ(t) = Σ e^{-λ_n t},
//! ```
//!
//! is completely monotonic on `(0, ∞)`. This crate evaluates these objects at
//! arbitrary precision with explicit error bounds:
//!
//! - [`numcore`]: precision policy, bounded values, series, quadrature, bisection;
//! - [`jets`]: truncated Taylor arithmetic;
//! - [`efun`]: coefficient streams, zero sequences, presets, `β₀`, the even transform;
//! - [`heatkernel`]: `Θ`, its derivatives, decay and Laplace checks;
//! - [`gk`]: `G_k` from zeros and from jets, and the literal operator iterate;
//! - [`cmcheck`]: scans with certified verdicts;
//! - [`riemann`]: `ξ(1/2 + √s)` through `Φ`, zero ingestion, and the scan runner.
//!
//! ```
//! use genus0::prelude::*;
//!
//! let ctx = PrecisionContext::default();
//! let zeros = ZeroSequence::from_reals(&[1.0], &ctx)?;
//! let g = gk_from_zeros(&zeros, &ctx.float(2), 2, 0, &ctx)?;
//! assert!(g.value.contains(&(ctx.float(2) / 27u32)));
//! # Ok::<(), genus0::Error>(())
//! ```

pub mod cmcheck;
pub mod efun;
mod error;
pub mod gk;
pub mod heatkernel;
pub mod jets;
pub mod numcore;
pub mod riemann;

pub use error::{Error, Result};
pub use rug;

/// The types and functions most programs need.
pub mod prelude {
    pub use crate::cmcheck::{cm_scan, difference_crosscheck, theta_cm_scan, CMReport, Grid, ScanPlan, Summary, Verdict};
    pub use crate::efun::{
        beta0_compute, even_to_genus0, expand_preset, order_estimate, CoefficientStream, EvenFunction, FunctionModel,
        Preset, TailModel, ZeroSequence,
    };
    pub use crate::gk::{discrepancy_probe, euler_iterate, gk_from_jets, gk_from_zeros, verified_margins, GkSource};
    pub use crate::heatkernel::{decay_check, laplace_residual, theta_deriv, theta_k, ThetaKernel};
    pub use crate::jets::Jet;
    pub use crate::numcore::{BoundedValue, PrecisionContext};
    pub use crate::riemann::{corollary4_run, ingest_zeros, to_lambda, xi_coefficients, xi_on_real_axis, XiSqrtModel};
    pub use crate::Error;
}

// The book chapters are compiled as doc comments so that `cargo test --doc`
// runs every snippet in them.
#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../book/src/introduction.md")]
    mod introduction {}
    #[doc = include_str!("../../../book/src/precision.md")]
    mod precision {}
    #[doc = include_str!("../../../book/src/jets.md")]
    mod jets {}
    #[doc = include_str!("../../../book/src/entire-functions.md")]
    mod entire_functions {}
    #[doc = include_str!("../../../book/src/heat-kernel.md")]
    mod heat_kernel {}
    #[doc = include_str!("../../../book/src/gk.md")]
    mod gk {}
    #[doc = include_str!("../../../book/src/cm-scans.md")]
    mod cm_scans {}
    #[doc = include_str!("../../../book/src/riemann.md")]
    mod riemann {}
    #[doc = include_str!("../../../book/src/cli.md")]
    mod cli {}
}
