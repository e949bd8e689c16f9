//! Library surface of the command-line front end: the serialization format
//! and the command implementations, exposed for integration tests.

pub mod commands;
pub mod serial;
