//! Numerical laboratory for the pure connection formulation of Einstein metrics in four
//! dimensions: chiral curvature blocks, definite SO(3)-connections, the metric built from
//! a connection, Plebanski residuals, and the Hessian and gauge-fixing machinery.

pub mod connection;
pub mod curvature;
pub mod error;
pub mod exterior;
pub mod fd;
pub mod gauge;
pub mod models;
pub mod plebanski;
pub mod quadrature;
pub mod scalar;

pub use error::{Error, Result};
