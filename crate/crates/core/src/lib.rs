//! Position optimization for a receive movable antenna without channel state
//! information.
//!
//! - [`channel`]: far-field multipath channel, receive SNR and the noisy
//!   measurement oracle.
//! - [`optimizer`]: zeroth-order adaptive-moment (ZO-AdaMM) search driven by
//!   `|y|²` only.
//! - [`baseline`]: CSI-based comparison (OMP over an angular dictionary plus
//!   grid search).
//! - [`harness`]: Monte Carlo sweeps, SNR maps and CSV output.
//! - [`cli`]: the `mazo` command-line front end.

pub mod baseline;
pub mod channel;
pub mod cli;
pub mod error;
pub mod harness;
pub mod optimizer;
pub mod rng;

pub use channel::{ChannelRealization, MeasurementOracle, PathComponent, Position, Probe, Region};
pub use error::{Error, Result};
pub use optimizer::{HyperParams, OptimizerState, Trajectory};
