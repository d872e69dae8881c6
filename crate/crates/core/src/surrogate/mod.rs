//! SCA surrogate construction and validity audits.

pub mod audit;
pub mod beam;
pub mod traj;
