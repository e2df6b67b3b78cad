//! Std companion of `dac-core`: synthetic datasets on disk, file formats,
//! evaluation, the pipeline stages and the `dac` command line tool.

pub mod dataset;
pub mod eval;
pub mod formats;
pub mod pipeline;
pub mod settings;
pub mod stages;
