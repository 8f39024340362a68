//! Manifest-driven front end for `convpoly`.

pub mod commands;
pub mod manifest;
