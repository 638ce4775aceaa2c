//! Payment-channel network simulator for griefing attacks.
//!
//! The crate models a Lightning-style channel graph, the economics of locked
//! collateral, the two-player forwarding games for HTLC and HTLC-GP, the
//! HTLC-GP and HTLC-GP-zeta contract state machines, a budgeted attacker, and
//! the experiment drivers built on top of them.

pub mod attacker;
pub mod contracts;
pub mod economics;
mod error;
pub mod experiments;
pub mod games;
pub mod netmodel;
pub mod penalty;

pub use economics::{EconomicParams, TimeoutSchedule, Timing};
pub use error::{Error, Result};
pub use netmodel::{BalanceMode, Channel, ChannelGraph, ChannelId, Direction, NodeId, PaymentPath};
