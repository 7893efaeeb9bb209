//! Node, HTTP API, `vax` CLI and load harness over [`vax_core`].
//!
//! A node owns one data directory: the ledger journal and blocks, the
//! content store, the keystore for its role keys and the verifier's
//! sessions. [`node::Node`] is usable in-process; [`server`] puts it behind
//! HTTP and [`cli`] drives it from the shell.

pub mod api;
pub mod bench;
pub mod cli;
pub mod config;
pub mod error;
pub mod keystore;
pub mod node;
pub mod server;

pub use config::NodeConfig;
pub use error::{Error, Result};
pub use node::{Node, SealMode};
