//! Command-line front end and JSON-over-HTTP service for the triangle-graph
//! price oracle.

pub mod commands;
pub mod service;
pub mod wire;

/// Environment variable holding the default snapshot path.
pub const SNAPSHOT_ENV: &str = "TRIANGLE_ORACLE_SNAPSHOT";
/// Endpoint samples per query when the caller does not say.
pub const DEFAULT_SAMPLES: u32 = 5;
