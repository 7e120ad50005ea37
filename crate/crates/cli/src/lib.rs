//! Command line and HTTP front end for the portalis engine.

pub mod cli;
pub mod server;
pub mod service;

pub use cli::{run, Cli, CliError, Command, Mode};
pub use service::{Gateway, GatewayError};
