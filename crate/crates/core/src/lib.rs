//! Dark vertical conductance of n-doped heterostructures embedded in a single-mode cavity.
//!
//! The pipeline runs from the vertical Schrödinger problem ([`subbands`]) through the Fermi
//! sea ([`occupancy`]), the light-matter and depolarization couplings ([`couplings`]) and
//! the Hopfield-Bogoliubov polariton problem ([`polariton`]) to the nonlocal Kubo
//! conductance ([`kubo`]). [`harness`] drives parameter sweeps from a JSON config.

pub mod config;
pub mod couplings;
pub mod error;
pub mod grid;
pub mod harness;
pub mod kubo;
pub mod occupancy;
pub mod polariton;
pub mod potential;
pub mod subbands;
pub mod units;

pub use error::{Error, Result};
