//! File formats, trace serialization and the command-line front end for
//! [`bpdyn_core`].

pub mod cli;
pub mod format;
pub mod sweep;
pub mod trace_io;
