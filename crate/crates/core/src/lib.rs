//! Regret minimization with negative momentum for two-player zero-sum
//! games.
//!
//! Normal-form games live on a pair of simplices ([`nfg`], [`simplex`]);
//! extensive-form games live on a pair of treeplexes ([`efg`], [`cfr`],
//! [`dilated`]). [`momentum`] holds the restarting aggregated momentum
//! buffer shared by both, and [`games`] builds the benchmark instances.

pub mod cfr;
pub mod dilated;
pub mod efg;
pub mod error;
pub mod games;
pub mod momentum;
pub mod nfg;
pub mod simplex;
mod vecops;

pub use error::{Error, Result};
