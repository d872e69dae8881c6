//! Per-window joint optimization: the max-min warm start, the convexified
//! beamforming and trajectory subproblems, the alternating loop with its
//! monotonicity guard, and the true-objective evaluation.

pub mod ao;
pub mod beams;
pub mod objective;
pub mod path;
pub mod warm;

use num_complex::Complex64;

use crate::channel::ChannelRealization;
use crate::geom::Vec3;
use crate::scenario::{ScenarioConfig, UserSet};

/// Beams for every slot of a window: `per_slot[k][n]` is user n's beam.
#[derive(Debug, Clone, PartialEq)]
pub struct BeamPlan {
    pub per_slot: Vec<Vec<Vec<Complex64>>>,
}

impl BeamPlan {
    pub fn zero(slots: usize, users: usize, antennas: usize) -> Self {
        BeamPlan { per_slot: vec![vec![vec![Complex64::new(0.0, 0.0); antennas]; users]; slots] }
    }

    pub fn slot_sq_norms(&self, k: usize) -> Vec<f64> {
        self.per_slot[k]
            .iter()
            .map(|w| w.iter().map(|v| v.norm_sqr()).sum())
            .collect()
    }

    /// Check the communication power budget on every slot.
    pub fn within_budget(&self, p_com_max: f64, eta: f64, tol: f64) -> bool {
        (0..self.per_slot.len()).all(|k| {
            self.slot_sq_norms(k).iter().sum::<f64>() / eta <= p_com_max + tol
        })
    }

    /// Rescale any slot that exceeds the budget by solver slop back onto it.
    pub fn clamp_to_budget(&mut self, p_com_max: f64, eta: f64) {
        for k in 0..self.per_slot.len() {
            let used: f64 = self.slot_sq_norms(k).iter().sum::<f64>() / eta;
            if used > p_com_max {
                let scale = (p_com_max / used).sqrt();
                for w in &mut self.per_slot[k] {
                    for v in w.iter_mut() {
                        *v *= scale;
                    }
                }
            }
        }
    }
}

/// Positions, velocities and auxiliary distances of a window.
/// `positions[0]` is the (fixed) state at the start of the window;
/// `positions[k+1] = positions[k] + velocities[k] * t_c` exactly.
#[derive(Debug, Clone, PartialEq)]
pub struct TrajectoryPlan {
    pub positions: Vec<Vec3>,
    pub velocities: Vec<Vec3>,
    /// `aux_distance[k][n]` for slots k = 1..S-1 is meaningful to the
    /// trajectory subproblem; slot 0 holds the fixed actual distances.
    pub aux_distance: Vec<Vec<f64>>,
}

impl TrajectoryPlan {
    pub fn slots(&self) -> usize {
        self.velocities.len()
    }
}

/// Everything a window solve needs to know.
#[derive(Debug, Clone)]
pub struct WindowCtx<'a> {
    pub cfg: &'a ScenarioConfig,
    pub users: &'a UserSet,
    /// Position at the start of the window.
    pub start_pos: Vec3,
    /// Velocity applied in the step before the window (acceleration link).
    pub prev_velocity: Vec3,
    /// Absolute time index of the window's first slot.
    pub abs_step: usize,
}

impl WindowCtx<'_> {
    pub fn slots(&self) -> usize {
        self.cfg.horizon_slots
    }

    /// Channels at each slot of a candidate trajectory (NLoS frozen per
    /// (user, absolute step), geometry from the candidate positions).
    pub fn channels_for(
        &self,
        positions: &[Vec3],
    ) -> Result<Vec<ChannelRealization>, crate::channel::ChannelError> {
        (0..self.slots())
            .map(|k| {
                crate::channel::synthesize_step(
                    self.cfg,
                    self.users,
                    positions[k],
                    self.abs_step + k,
                )
            })
            .collect()
    }
}

/// Result of one subproblem, feeding the fallback logic.
#[derive(Debug, thiserror::Error)]
pub enum SubproblemError {
    #[error("subproblem infeasible")]
    Infeasible,
    #[error("solver failed: {0}")]
    Solver(String),
    #[error("channel synthesis failed: {0}")]
    Channel(#[from] crate::channel::ChannelError),
}
