//! Experiment plumbing for the `irsnet` binary: configuration loading and
//! flag overlay, the experiment drivers that turn a resolved plan into
//! deterministic CSV/JSON outputs, and the self-validation suite.
//!
//! Everything the binary does lives here so that integration tests can
//! drive the exact same code paths in-process.

pub mod config;
pub mod runner;
pub mod validate;
