//! Core process-calculus workbench: names and relabellings, pi and CCS
//! syntax, operational semantics, the pi-to-CCS translations, and
//! bisimilarity checking. No IO here; the companion crate `picalc`
//! carries the command line front end.

#![no_std]

extern crate alloc;

pub mod names;
pub mod syntax;
pub mod parse;
pub mod pi_sos;
pub mod ccs_sos;
pub mod encode;
pub mod equiv;
