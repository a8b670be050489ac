//! File formats, dataset layout and command drivers for the `evdesnow` tool.

pub mod commands;
pub mod dataset;
pub mod error;
pub mod io;
pub mod scene;

pub use error::{CliError, IoError};

/// Size of the worker pool from `EVDESNOW_THREADS`; 0 or unset means automatic.
pub fn configure_threads() -> Result<(), CliError> {
    let threads = match std::env::var("EVDESNOW_THREADS") {
        Ok(v) => v
            .trim()
            .parse::<usize>()
            .map_err(|_| CliError::Usage(format!("EVDESNOW_THREADS must be a count, got {v:?}")))?,
        Err(_) => 0,
    };
    rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build_global()
        .map_err(|e| CliError::Processing(e.to_string()))
}
