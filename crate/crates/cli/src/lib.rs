//! `logtally` command-line front end and the HTTP counting service.
//!
//! Both front ends parse counting options through the same [`options`]
//! definitions so a query string and a flag list with the same values give
//! byte-identical reports.

pub mod cli;
pub mod options;
pub mod server;

pub use cli::{dispatch, run, CliExit};
