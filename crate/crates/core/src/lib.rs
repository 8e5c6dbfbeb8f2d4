//! Simulation and optimization toolkit for distributed coherent group
//! communications.
//!
//! A group of single-antenna transmitters sends phase-aligned copies of one
//! signal to a group of receivers. This crate computes the resulting power and
//! SIR gains relative to a point-to-point link, selects transmit phases with a
//! family of protocols, partitions pooled nodes into per-stream groups, and
//! evaluates the overhead/Doppler link budget that bounds when coherent
//! operation pays off.
//!
//! Module map:
//!
//! - [`scenario`]: node placement and channel construction
//! - [`gain`]: coherent power gain, SIR gain, bounds and the energy oracle
//! - [`beamforming`]: phase-selection protocols (RB, RT, BT, SF, IO, ES)
//! - [`formation`]: stream formation policies and the joint protocols
//! - [`linkbudget`]: Doppler tolerance, training overhead, rate comparison
//! - [`harness`]: experiment configs, seeded runner, CSV/markdown output

pub mod beamforming;
pub mod error;
pub mod formation;
pub mod gain;
pub mod harness;
pub mod linkbudget;
pub mod rng;
pub mod scenario;

pub use error::{Error, Result};
