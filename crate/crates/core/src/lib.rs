pub mod bellman;
pub mod chain;
pub mod cli;
pub mod error;
pub mod function_kit;
pub mod optimize;
pub mod recursion;
pub mod report;
pub mod shift;

pub use error::{Error, Result};
pub use function_kit::FunctionSpec;
