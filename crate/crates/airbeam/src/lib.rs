//! Downlink multi-user massive MIMO-OFDM physical-layer simulator.
//!
//! The crate covers the full chain needed for link-level Monte Carlo studies
//! of imperfect-CSI beamforming:
//!
//! * sparse multipath channel generation for uniform planar arrays
//!   ([`channel`]),
//! * estimation-error injection with calibrated NMSE ([`channel`]),
//! * a CSI-error-aware weighted-MMSE beamformer with per-subcarrier
//!   water-filling power allocation ([`beamforming`]),
//! * power-constrained transmission, propagation, and per-user equalization
//!   ([`link`]),
//! * a scenario/sweep harness with deterministic CSV/JSON emission and a
//!   binary channel-export format ([`config`], [`sweep`], [`dataset`]).
//!
//! Everything is reproducible: each trial draws from a dedicated
//! (seed, stream) pair, so results are byte-identical for a fixed
//! configuration regardless of thread count.

pub mod beamforming;
pub mod channel;
pub mod config;
pub mod dataset;
pub mod error;
pub mod exec;
pub mod link;
pub mod selftest;
pub mod sweep;
pub mod tensor;

pub use error::{Error, Result};
pub use exec::Execution;
pub use tensor::{CMat, ComplexTensor, Prng, RandomSource, RealMatrix};
