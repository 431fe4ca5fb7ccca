//! Files, configuration, commands and simulation studies for `hmpsbm`.

pub mod commands;
pub mod config;
pub mod io;
pub mod study;
