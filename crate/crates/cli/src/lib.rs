//! Operational shell around `nsvar-core`: configuration, CSV ingestion,
//! orchestration and report serialization.

pub mod config;
pub mod data;
pub mod lab;
pub mod report;
pub mod run;

use nsvar_core::Error as CoreError;

pub const EXIT_OK: u8 = 0;
pub const EXIT_FAILURE: u8 = 1;
pub const EXIT_CONFIG: u8 = 2;
pub const EXIT_DATA: u8 = 3;
pub const EXIT_ZERO_PLAUSIBILITY: u8 = 4;

/// Maps an error chain to the process exit code.
pub fn exit_code(err: &anyhow::Error) -> u8 {
    if err.downcast_ref::<data::DataError>().is_some() {
        return EXIT_DATA;
    }
    if err.downcast_ref::<config::ConfigError>().is_some() {
        return EXIT_CONFIG;
    }
    match err.downcast_ref::<CoreError>() {
        Some(
            CoreError::Config(_) | CoreError::Parse { .. } | CoreError::NonlinearRestriction(_) | CoreError::Index(_),
        ) => EXIT_CONFIG,
        Some(CoreError::Dimension(_) | CoreError::ImproperPosterior { .. } | CoreError::NotPositiveDefinite { .. }) => {
            EXIT_DATA
        }
        Some(CoreError::ZeroPlausibility) => EXIT_ZERO_PLAUSIBILITY,
        _ => EXIT_FAILURE,
    }
}
