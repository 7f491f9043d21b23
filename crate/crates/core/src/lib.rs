//! Relative-error H2 model order reduction for continuous-time LTI systems.

pub mod algorithms;
pub mod error;
pub mod io;
pub mod linalg;
pub mod random;
pub mod relerr;
pub mod report;
pub mod ss;

pub use error::{MorError, Result};
