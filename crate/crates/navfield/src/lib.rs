//! Scene files, scene catalog, parallel batch runs and output formats for
//! the `navfield` command-line tool.
pub use navfield_core as core;

pub mod batch;
pub mod catalog;
pub mod manifest;
pub mod output;
pub mod scene_file;
