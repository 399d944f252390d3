//! Analytic performance and energy models for parallel hash joins on
//! shared-nothing clusters built from one or two node types, together with a
//! fluid simulator that replays the same workloads event by event, and a
//! design-space explorer that sweeps cluster mixes and ranks them by
//! energy-delay trade-offs.
//!
//! The crate is organized bottom-up:
//!
//! * [`domain`] holds the vocabulary types: node specs, cluster designs,
//!   query descriptions, and the execution-mode selector that decides whether
//!   a design runs every node identically or concentrates the hash table on
//!   the large-memory nodes.
//! * [`power`] evaluates and calibrates utilization-to-watts curves.
//! * [`model`] contains the closed-form phase estimators (scan/shuffle and
//!   broadcast, cold and warm) and their energy integration.
//! * [`sim`] is an independent event-driven fluid simulator used to
//!   cross-check the closed forms and to study concurrent jobs.
//! * [`explorer`] sweeps design spaces, computes ratios against a reference
//!   design, finds ingestion knees, and recommends designs under a
//!   performance floor.

pub mod domain;
pub mod error;
pub mod explorer;
pub mod model;
pub mod power;
pub mod sim;

#[cfg(test)]
pub(crate) mod testkit;

pub use error::Error;
