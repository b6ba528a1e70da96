//! Signal processing toolkit for dual-polarized satellite links.
//!
//! The crate covers three loosely coupled areas:
//!
//! * 4D constellations for the fixed forward link ([`constellation`],
//!   [`labeling`], [`infometrics`]): Cartesian QAM products and D4 lattice
//!   (LAM) designs, Gray and GA-optimized labelings, and Monte Carlo AIR/PAIR
//!   estimators over the dual-polar AWGN channel.
//! * Physical layer abstraction and link adaptation for the mobile link
//!   ([`pla`], [`channel`], [`linkadapt`]): MIESM lookup tables, per-MIMO-scheme
//!   post-detection SINR, a dual-polar land mobile satellite channel generator
//!   and a delayed-feedback MODCOD/MIMO selection simulator.
//! * Full-duplex self-interference budgets and an analog tapped-delay-line
//!   canceller simulation ([`fullduplex`]).

// Negated comparisons are used on purpose so that NaN fails validation.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod channel;
pub mod constellation;
mod error;
pub mod ga;
pub mod infometrics;
pub mod labeling;
pub mod linkadapt;
pub mod pla;
pub mod fullduplex;
pub mod rng;

pub use error::{Error, Result};
pub use num_complex::Complex64;
