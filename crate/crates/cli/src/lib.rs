//! Command-line pipeline around `sawtooth-core`: config parsing, file
//! formats and the seven run commands.

pub mod commands;
pub mod config;
pub mod io;
