//! Noise-assisted quantum transport in one-dimensional tight-binding chains.
//!
//! The crate builds disordered, biased single-excitation chains, attaches a
//! pump/trap transport scheme plus on-site dephasing (either phenomenological
//! Lindblad pure dephasing or a finite-temperature, nonsecular Bloch-Redfield
//! bath), and searches for the dephasing rate that maximises the steady-state
//! current. Ensemble sweeps relate that optimum to eigenstate localisation.
//!
//! Interchangeable pieces (transport models, steady-state solvers, peak
//! finders, spectral densities) sit behind traits and are looked up by name
//! in a [`registry::Registries`] so that configs and the CLI can pick them at
//! runtime.

pub mod chain;
pub mod config;
pub mod error;
pub mod fit;
pub mod lindblad;
pub mod liouvillian;
pub mod model;
pub mod optimizer;
pub mod propagate;
pub mod redfield;
pub mod registry;
pub mod seed;
pub mod solver;
pub mod spectral;
pub mod sweep;

pub use error::{Error, Result};

/// Complex scalar used throughout.
pub type C64 = nalgebra::Complex<f64>;
