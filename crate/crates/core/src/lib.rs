//! Delivery probability and ARQ delay for content cached at mm-wave small
//! cells, served to users that pick the best of several correlated ports.
//!
//! The analytical path combines a Gauss-Laguerre rule over the serving
//! distance with a Gaussian-copula model of the best-port gain; the [`mc`]
//! module simulates the same model end to end as an independent check.

pub mod adaptive;
pub mod channel;
pub mod corr;
pub mod error;
pub mod mc;
pub mod metrics;
pub mod mvn;
pub mod net;
pub mod rng;
pub mod specfun;

pub use error::{Error, Result};
