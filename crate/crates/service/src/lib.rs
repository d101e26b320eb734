//! Guidance service and command-line front end for the `corebody` engine.

pub mod cli;
pub mod offline;
pub mod server;
pub mod wire;
