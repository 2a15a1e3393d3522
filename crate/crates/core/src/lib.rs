pub mod conditional;
pub mod data;
pub mod dea;
pub mod distribution;
pub mod effects;
pub mod error;
pub mod lp;
pub mod oracle;
pub mod pipeline;
pub mod synthetic;
pub mod weights;

pub use error::{Error, Result};
