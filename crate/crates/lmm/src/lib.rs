//! Sorted distribution estimation by local moment matching, together with
//! the exact small-scale machinery around profile maximum likelihood and a
//! constructive Poisson polynomial approximation of Lipschitz functions.

pub mod error;
pub mod harness;
pub mod intervals;
pub mod lmm;
pub mod lp;
pub mod model;
pub mod moments;
pub mod pmf;
pub mod pml;
pub mod poisson_approx;
pub mod wasserstein;

pub use error::{Error, Result};
