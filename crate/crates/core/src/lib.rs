//! Tactile Internet reference architecture model, interface compliance
//! checks, and a system-level Monte Carlo simulator comparing normal-grade
//! single connectivity against ultra-grade dual connectivity with packet
//! duplication.

// `!(x > 0.0)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod alloc;
pub mod arch;
pub mod grades;
pub mod protocol;
pub mod radio;
pub mod sim;
