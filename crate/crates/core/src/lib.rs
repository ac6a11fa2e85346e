//! Control-plane update budgeting for networks of LRU caches.
//!
//! A cache fleet reports item presence to a content resolution system (CRS).
//! Given tolerated false-negative / false-positive probabilities for the CRS
//! view, this crate computes the minimum update rate each cache must sustain,
//! prices updates and downloads, picks the cost-optimal caching popularity
//! threshold, and simulates the fleet to measure what the closed forms promise.
//!
//! Modules, bottom-up:
//! - [`ratecore`]: one binary on/off state under a distortion budget.
//! - [`lrumodel`]: Zipf popularity, Che occupancy, per-item fleet update rates.
//! - [`costmodel`]: packet length, update/download cost, threshold optimizer.
//! - [`workload`]: synthetic Poisson/Zipf streams and MovieLens trace ingestion.
//! - [`simkernel`]: discrete-event LRU fleet + CRS simulator and exact oracles.

pub mod costmodel;
pub mod error;
pub mod lrumodel;
pub mod ratecore;
pub mod simkernel;
pub mod workload;

pub use error::{Error, Result};
