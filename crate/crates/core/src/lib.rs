//! Agent-based two-asset market on a multiplex network.
//!
//! Traders sit on a small-world lattice that carries information. Each step a
//! global drive pushes one trader over its information threshold and the
//! resulting avalanche makes every toppled trader copy its orders. All orders
//! then meet in two unit-quantity order books, and each asset's next price is
//! its last trade price shifted by the other book's imbalance.

pub mod agents;
pub mod book;
pub mod cli;
pub mod config;
pub mod engine;
pub mod error;
pub mod herding;
pub mod io;
pub mod rng;
pub mod stats;
pub mod topology;

pub use config::SimConfig;
pub use engine::{run, Market, RunRecord};
pub use error::{Error, Result};
