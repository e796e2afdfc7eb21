//! Library side of the `showdown` binary, split out so it can be tested.

pub mod commands;
pub mod server;
