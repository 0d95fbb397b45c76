//! Numerical laboratory for weak-value-amplified phase measurement in a
//! shot-noise limited interferometer.
//!
//! The crate computes full-order post-selected pointer statistics (no
//! weak-coupling expansion), the photon shot noise of the pointer shift
//! estimate, the closed-form signal-to-noise ratio and its optimum over the
//! measurement strength, and the resulting mirror displacement detection
//! limit. A Monte Carlo photon-counting simulation validates the analytic
//! shot-noise variance.
//!
//! Units: core routines work in dimensionless quantities (`s = 2 g² σ_ω²`,
//! `β = 2 g ω₀`, g-scaled moments). Physical units only enter in
//! [`detection`] and at the CLI boundary.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cli;
pub mod detection;
pub mod error;
pub mod pointer;
pub mod quadrature;
pub mod shot_noise;
pub mod snr;

pub use error::{Error, Result};
pub use pointer::{
    gaussian_moments, gaussian_trig_expectations, moment_general, post_selected_pdf,
    selection_overlap, weak_value, CouplingParams, PointerState, PostSelectedMoments,
    SelectionAngle, WeakValue,
};
