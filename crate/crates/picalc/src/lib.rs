//! Replayable fixtures shared by the picalc binary and its test
//! suites. The command line front end lives in the binary target.

pub mod fixtures;
