pub mod cli_io;
pub mod cox;
pub mod data;
pub mod error;
pub mod experiments;
pub mod glm;
mod linalg;
pub mod simulate;
pub mod stats;
pub mod two_stage;

pub use error::{Error, Result};
