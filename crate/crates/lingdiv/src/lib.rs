//! File formats, configuration, the cached end-to-end pipeline and the
//! `lingdiv` command line, on top of [`lingdiv_core`].

pub mod cli;
pub mod config;
pub mod error;
pub mod fixtures;
pub mod io;
pub mod pipeline;
pub mod report;

pub use error::{Error, Result};
