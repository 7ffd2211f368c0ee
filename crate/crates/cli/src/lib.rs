//! Scenario-driven command-line harness for `matweight`.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod report;
pub mod scenario;
pub mod tasks;
