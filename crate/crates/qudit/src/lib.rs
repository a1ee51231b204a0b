//! File formats, command-line front end and benchmark harness for
//! [`qudit_core`].

pub mod benchmark;
pub mod cli;
pub mod io;
