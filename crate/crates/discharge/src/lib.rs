//! File formats, parallel corpus generation and the command-line front end
//! for the `discharge-core` models.

pub mod cli;
pub mod clock;
pub mod config;
pub mod error;
pub mod formats;
pub mod pipeline;

pub use clock::WallClock;
pub use config::RunConfig;
pub use error::{Error, Result};
