//! Lane-free cruise controllers for bicycle-model vehicles, the particle and
//! grid discretisations of the resulting macroscopic traffic models, and the
//! LWR/ARZ baselines they are compared against.

pub mod controllers;
pub mod energy;
pub mod error;
pub mod fleet;
pub mod harness;
pub mod macrolab;
pub mod microsim;
pub mod shapes;

pub use error::{Error, Result};
