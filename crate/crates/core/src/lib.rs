pub mod control;
pub mod config;
pub mod error;
pub mod io;
pub mod learner;
pub mod linalg;
pub mod pipeline;
pub mod sim;

pub use error::{Error, Result};
