pub mod batch;
pub mod candidates;
pub mod error;
pub mod extract;
pub mod instance;
pub mod oracle;
pub mod penalty;
pub mod search;
pub mod synth;
pub mod tour;
pub mod tsplib;

pub use error::{Error, Result};
