//! Command-line front end: specification files in, JSON or text reports out.

pub mod commands;
pub mod input;
pub mod report;

pub use commands::{run, Command, Outcome, Request};
pub use report::Report;
