//! Step skew products `F(xi, x) = (sigma xi, f_{xi_0}(x))` over the full
//! 2-shift with interval fibers.

pub mod error;
pub mod fiber;
pub mod symbolic;
pub mod dynamics;
pub mod measure;
pub mod itinerary;
pub mod walk;

pub use error::{ErrorCategory, Result, SkewError};

/// Library version embedded in reports.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");
