//! Joint trajectory and multi-user beamforming simulator for a UAV downlink
//! operating under finite-blocklength reliability constraints.
//!
//! The library covers the scenario model (channels, propulsion, rates), the
//! convex surrogate machinery with its validity audits, the per-window
//! alternating optimizer built on the `conic` interior-point backend, the
//! receding-horizon mission controller, the open-loop and fixed-trajectory
//! baselines, and the experiment sweeps behind the `uavsim` CLI.

pub mod channel;
pub mod experiments;
pub mod fbl;
pub mod geom;
pub mod propulsion;
pub mod scenario;
pub mod baselines;
pub mod mpc;
pub mod optim;
pub mod surrogate;
