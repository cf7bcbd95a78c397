//! Scenario files, trace files, and node addressing for the command-line
//! front end; the binary in `main.rs` wires these to the library.

pub mod addr;
pub mod scenario;
pub mod trace;
