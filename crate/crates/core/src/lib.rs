#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod expr;
pub mod hierarchy;
pub mod model;
pub mod pde;
pub mod quad;
pub mod radial;
pub mod surface;
pub mod symmetrize;
pub mod verify;

pub use error::{Error, Result};
