//! Configuration, file formats and the command-line driver for
//! [`kflock_core`].

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cli;
pub mod config;
pub mod experiments;
pub mod format;
pub mod manifest;
