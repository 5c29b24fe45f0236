//! Library side of the `docrestore` command: layered settings, the work
//! behind each subcommand and the HTTP tuning service.

pub mod commands;
pub mod config;
#[cfg(feature = "service")]
pub mod service;
