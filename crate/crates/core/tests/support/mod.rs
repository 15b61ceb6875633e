//! Test-only oracles and shared fixtures.
#![allow(dead_code)]

pub mod oracle;
pub mod fixtures;
