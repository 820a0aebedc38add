//! Config-driven experiment runner and verification battery.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod config;
pub mod run;
pub mod verify;

pub use config::{Config, ConfigError};
pub use run::{RunError, BUILD_ID};
pub use verify::{CriterionResult, Mutation, Suite, VerifyOptions};
