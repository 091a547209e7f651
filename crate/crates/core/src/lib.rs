//! Spectra of one-dimensional quasiperiodic differential operators.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cli;
pub mod config;
pub mod contfrac;
pub mod error;
pub mod interface;
pub mod io;
pub mod numerics;
pub mod potentials;
pub mod supercell;
pub mod superspace;
pub mod tiling;
pub mod transfermap;

pub use error::{Error, Result};
