//! Scenario files and report emission for the `clusterwatt` binary.
//!
//! The library half of the crate so integration tests can drive parsing and
//! CSV output without shelling out.

pub mod report;
pub mod scenario;
