//! Command-line experiments, file formats and reports for the oddball
//! speller simulator in `speller-core`.

pub mod cli;
pub mod config;
pub mod formats;
pub mod manifest;
pub mod report;
