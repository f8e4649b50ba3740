//! Library half of the command-line front end. The binary stays a thin
//! argument parser; everything testable lives here.

pub mod config;
pub mod fail;
pub mod report;
pub mod sample;
mod scales;
pub mod verify;
