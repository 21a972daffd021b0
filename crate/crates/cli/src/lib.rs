//! Config-driven experiment runner for lapkit.

pub mod config;
pub mod report;
pub mod runner;
