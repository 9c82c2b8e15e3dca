//! Cohomogeneity-one Kähler-Einstein metrics along a divisor in complex
//! hyperbolic space: the profile ODE, curvature operators, comparison with the
//! ball, radial gluing and very strong negativity checks.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod ball;
pub mod cli;
pub mod comparison;
pub mod curvature;
pub mod decay;
pub mod error;
pub mod gluing;
pub mod io;
pub mod ode;
pub mod profile;
pub mod quad;
pub mod tensor;

pub use error::{Error, Result};
