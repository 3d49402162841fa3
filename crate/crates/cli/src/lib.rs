//! Driver for `eternal-profile`: configuration, mode dispatch, and the CSV,
//! JSON and SVG writers behind the `eternal-profile` binary.

pub mod config;
pub mod export;
pub mod json;
pub mod plot;
pub mod run;
