// Negated float comparisons are deliberate: they send NaN down the failure path.
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod approx;
pub mod config;
pub mod error;
pub mod nfunc;
pub mod quad;
pub mod solver;
pub mod tensor;
pub mod verify;
