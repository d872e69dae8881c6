//! Receding-horizon mission execution: plan a window, apply the first-step
//! control, inject the position disturbance, advance, and record everything
//! needed to replay and audit the run.

use rand::Rng;
use serde::Serialize;

use crate::channel::{synthesize_step, UavState};
use crate::geom::{add3, norm3, scale3, sub3, Vec3};
use crate::optim::ao::{ao_loop, AoDiagnostics};
use crate::optim::objective::objective_eval;
use crate::optim::{BeamPlan, WindowCtx};
use crate::propulsion::{propulsion_power, comm_power};
use crate::scenario::{stream, ScenarioConfig, StreamKind, UserSet};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum TerminationReason {
    Arrived,
    StepCap,
}

/// One executed step of a mission.
#[derive(Debug, Clone, Serialize)]
pub struct TraceStep {
    pub step: usize,
    pub position_before: Vec3,
    pub applied_velocity: Vec3,
    pub disturbance: Vec3,
    pub position_after: Vec3,
    pub per_user_sinr: Vec<f64>,
    pub per_user_rate: Vec<f64>,
    pub prop_power_w: f64,
    pub comm_power_w: f64,
    pub total_power_w: f64,
    pub window_phi: f64,
    pub ao_iterations: usize,
    pub ao_p2_failures: usize,
    pub ao_p3_failures: usize,
    pub hover_fallback: bool,
}

/// Full mission record.
#[derive(Debug, Clone, Serialize)]
pub struct MissionTrace {
    pub steps: Vec<TraceStep>,
    pub termination: TerminationReason,
    pub terminal_distance_m: f64,
    pub energy_j: f64,
    pub seed: u64,
    pub disturbance_m: f64,
}

impl MissionTrace {
    pub fn per_step_min_rate(&self) -> Vec<f64> {
        self.steps
            .iter()
            .map(|s| s.per_user_rate.iter().cloned().fold(f64::INFINITY, f64::min))
            .collect()
    }

    pub fn mean_sum_rate(&self) -> f64 {
        if self.steps.is_empty() {
            return 0.0;
        }
        self.steps.iter().map(|s| s.per_user_rate.iter().sum::<f64>()).sum::<f64>()
            / self.steps.len() as f64
    }

    /// Replay the kinematic ledger: every recorded position must follow from
    /// the previous one, the applied velocity, and the disturbance.
    pub fn replay_positions(&self, start: Vec3, t_c: f64) -> Vec<Vec3> {
        let mut out = vec![start];
        for s in &self.steps {
            let prev = *out.last().unwrap();
            out.push(add3(add3(prev, scale3(s.applied_velocity, t_c)), s.disturbance));
        }
        out
    }

    /// One row per step. Header comments carry the schema version; per-user
    /// columns are suffixed with the user index.
    pub fn write_csv<W: std::io::Write>(&self, out: &mut W) -> std::io::Result<()> {
        writeln!(out, "# schema=uavsim-trace-v1")?;
        let users = self.steps.first().map(|s| s.per_user_rate.len()).unwrap_or(0);
        let mut header = vec![
            "step", "rx", "ry", "rz", "vx", "vy", "vz", "dx", "dy", "dz", "rx_after",
            "ry_after", "rz_after",
        ]
        .into_iter()
        .map(String::from)
        .collect::<Vec<_>>();
        for n in 0..users {
            header.push(format!("sinr_{n}"));
        }
        for n in 0..users {
            header.push(format!("rate_{n}"));
        }
        header.extend(
            ["prop_w", "comm_w", "total_w", "phi", "ao_iters", "hover_fallback"]
                .into_iter()
                .map(String::from),
        );
        writeln!(out, "{}", header.join(","))?;
        for s in &self.steps {
            let mut row = vec![
                s.step.to_string(),
                format!("{:?}", s.position_before[0]),
                format!("{:?}", s.position_before[1]),
                format!("{:?}", s.position_before[2]),
                format!("{:?}", s.applied_velocity[0]),
                format!("{:?}", s.applied_velocity[1]),
                format!("{:?}", s.applied_velocity[2]),
                format!("{:?}", s.disturbance[0]),
                format!("{:?}", s.disturbance[1]),
                format!("{:?}", s.disturbance[2]),
                format!("{:?}", s.position_after[0]),
                format!("{:?}", s.position_after[1]),
                format!("{:?}", s.position_after[2]),
            ];
            for v in &s.per_user_sinr {
                row.push(format!("{v:?}"));
            }
            for v in &s.per_user_rate {
                row.push(format!("{v:?}"));
            }
            row.push(format!("{:?}", s.prop_power_w));
            row.push(format!("{:?}", s.comm_power_w));
            row.push(format!("{:?}", s.total_power_w));
            row.push(format!("{:?}", s.window_phi));
            row.push(s.ao_iterations.to_string());
            row.push(s.hover_fallback.to_string());
            writeln!(out, "{}", row.join(","))?;
        }
        Ok(())
    }

    pub fn summary(&self, r_min: f64) -> TraceSummary {
        TraceSummary {
            schema_version: "uavsim-trace-v1",
            termination: self.termination,
            terminal_distance_m: self.terminal_distance_m,
            energy_j: self.energy_j,
            steps: self.steps.len(),
            mean_sum_rate_npcu: self.mean_sum_rate(),
            satisfaction_pct: crate::baselines::qos_satisfaction(
                &self.per_step_min_rate(),
                r_min,
            ),
            seed: self.seed,
            disturbance_m: self.disturbance_m,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct TraceSummary {
    pub schema_version: &'static str,
    pub termination: TerminationReason,
    pub terminal_distance_m: f64,
    pub energy_j: f64,
    pub steps: usize,
    pub mean_sum_rate_npcu: f64,
    pub satisfaction_pct: f64,
    pub seed: u64,
    pub disturbance_m: f64,
}

/// Bounded position disturbance: uniform direction, magnitude uniform on
/// [0, delta].
pub fn disturbance(rng: &mut rand_chacha::ChaCha12Rng, delta: f64) -> Vec3 {
    if delta == 0.0 {
        // keep the stream advancing identically regardless of magnitude
        let _ = rng.random::<f64>();
        let _ = rng.random::<f64>();
        let _ = rng.random::<f64>();
        return [0.0, 0.0, 0.0];
    }
    let z: f64 = rng.random::<f64>() * 2.0 - 1.0;
    let phi: f64 = rng.random::<f64>() * std::f64::consts::TAU;
    let mag: f64 = rng.random::<f64>() * delta;
    let r = (1.0 - z * z).max(0.0).sqrt();
    [mag * r * phi.cos(), mag * r * phi.sin(), mag * z]
}

/// Post-disturbance altitude clamp; the effective disturbance recorded in
/// the trace is the clamped one so replay stays exact.
fn clamp_altitude(pos: Vec3, cfg: &ScenarioConfig) -> Vec3 {
    [
        pos[0],
        pos[1],
        pos[2].clamp(cfg.altitude_range_m[0], cfg.altitude_range_m[1]),
    ]
}

/// Re-check of the applied control against the motion and power envelopes,
/// independent of any solver output.
pub fn control_within_envelopes(
    cfg: &ScenarioConfig,
    v_prev: Vec3,
    v: Vec3,
    beam_sq_norms: &[f64],
) -> bool {
    let tol = 1e-6;
    let vh = (v[0] * v[0] + v[1] * v[1]).sqrt();
    if vh > cfg.v_max_mps + tol || v[2].abs() > cfg.u_max_mps + tol {
        return false;
    }
    if norm3(sub3(v, v_prev)) > cfg.a_max_mps2 * cfg.time_step_s + tol {
        return false;
    }
    let p_com = comm_power(beam_sq_norms.iter().copied(), cfg.amp_efficiency);
    if p_com > cfg.p_com_max_w + tol {
        return false;
    }
    let total = propulsion_power(v, &cfg.propulsion()) + p_com;
    total <= cfg.p_max_w + tol
}

pub struct MissionOutcome {
    pub trace: MissionTrace,
    pub users: UserSet,
}

/// Closed-loop mission per the receding-horizon procedure: plan, apply the
/// first-step control, disturb, measure, repeat.
pub fn run_mission(cfg: &ScenarioConfig, users: &UserSet) -> MissionTrace {
    run_mission_with(cfg, users, cfg.rng_seed, true)
}

/// Shared driver for the closed-loop controller and the windowed open-loop
/// baseline: `closed_loop` decides whether the planner sees the measured
/// (disturbed) state or propagates its own prediction.
pub fn run_mission_with(
    cfg: &ScenarioConfig,
    users: &UserSet,
    disturbance_seed: u64,
    closed_loop: bool,
) -> MissionTrace {
    let mut dist_rng = stream(disturbance_seed, StreamKind::Disturbance);
    let mut steps = Vec::new();
    let mut actual = UavState { position: cfg.r_a_m, velocity: [0.0, 0.0, 0.0] };
    // what the planner believes: equals the measured state in closed loop,
    // the disturbance-free propagation in open loop
    let mut planned = actual;
    let mut energy = 0.0;
    for step in 0..cfg.mission_cap_slots {
        // open loop has no feedback anywhere, including its stopping rule
        let steering_state = if closed_loop { actual } else { planned };
        if norm3(sub3(steering_state.position, cfg.r_b_m)) <= cfg.arrival_tol_m {
            break;
        }
        let plan_state = steering_state;
        let ctx = WindowCtx {
            cfg,
            users,
            start_pos: plan_state.position,
            prev_velocity: plan_state.velocity,
            abs_step: step,
        };
        let (v_apply, beams_apply, phi, diag, fallback) = match ao_loop(&ctx) {
            Ok(out) => {
                let v = out.trajectory.velocities[0];
                let b = out.beams.per_slot[0].clone();
                (v, b, out.objective.phi, out.diag, false)
            }
            Err(_) => {
                // hover fallback: zero velocity, no transmission this step
                (
                    [0.0, 0.0, 0.0],
                    vec![
                        vec![num_complex::Complex64::new(0.0, 0.0); cfg.num_antennas];
                        cfg.num_users
                    ],
                    f64::NEG_INFINITY,
                    AoDiagnostics::default(),
                    true,
                )
            }
        };
        let beam_sq: Vec<f64> =
            beams_apply.iter().map(|w| w.iter().map(|v| v.norm_sqr()).sum()).collect();
        // independent re-check of the applied control; a violating control
        // (possible when a window falls back to its kinematic plan) is
        // projected onto the envelopes before application
        let v_apply = if control_within_envelopes(cfg, plan_state.velocity, v_apply, &beam_sq) {
            v_apply
        } else {
            crate::optim::path::safe_step(cfg, plan_state.velocity, v_apply)
        };
        // transmission happens from the actual position
        let (sinrs, rates) = match synthesize_step(cfg, users, actual.position, step) {
            Ok(real) => {
                let hs: Vec<Vec<num_complex::Complex64>> =
                    real.per_user.iter().map(|u| u.h.clone()).collect();
                let sigma2 = cfg.noise_power_w();
                let fp = cfg.fbl();
                let sinrs: Vec<f64> = (0..cfg.num_users)
                    .map(|n| crate::channel::sinr(&hs, &beams_apply, n, sigma2))
                    .collect();
                let rates = sinrs.iter().map(|&g| crate::fbl::fbl_rate(g, &fp)).collect();
                (sinrs, rates)
            }
            Err(_) => (vec![0.0; cfg.num_users], vec![0.0; cfg.num_users]),
        };
        let p_prop = propulsion_power(v_apply, &cfg.propulsion());
        let p_com = comm_power(beam_sq.iter().copied(), cfg.amp_efficiency);
        energy += (p_prop + p_com) * cfg.time_step_s;

        let d = disturbance(&mut dist_rng, cfg.disturbance_m);
        let moved = add3(actual.position, scale3(v_apply, cfg.time_step_s));
        let landed = clamp_altitude(add3(moved, d), cfg);
        let effective_d = sub3(landed, moved);
        steps.push(TraceStep {
            step,
            position_before: actual.position,
            applied_velocity: v_apply,
            disturbance: effective_d,
            position_after: landed,
            per_user_sinr: sinrs,
            per_user_rate: rates,
            prop_power_w: p_prop,
            comm_power_w: p_com,
            total_power_w: p_prop + p_com,
            window_phi: phi,
            ao_iterations: diag.iterations_run,
            ao_p2_failures: diag.p2_slot_failures,
            ao_p3_failures: diag.p3_failures,
            hover_fallback: fallback,
        });
        actual = UavState { position: landed, velocity: v_apply };
        planned = UavState {
            position: add3(planned.position, scale3(v_apply, cfg.time_step_s)),
            velocity: v_apply,
        };
    }
    let mut termination = TerminationReason::StepCap;
    if norm3(sub3(actual.position, cfg.r_b_m)) <= cfg.arrival_tol_m {
        termination = TerminationReason::Arrived;
    }
    MissionTrace {
        terminal_distance_m: norm3(sub3(actual.position, cfg.r_b_m)),
        steps,
        termination,
        energy_j: energy,
        seed: cfg.rng_seed,
        disturbance_m: cfg.disturbance_m,
    }
}

/// Window-level objective of a plan against the true model; re-exported
/// here so trace consumers can recompute diagnostics.
pub fn window_phi(
    cfg: &ScenarioConfig,
    users: &UserSet,
    start: Vec3,
    velocities: &[Vec3],
    beams: &BeamPlan,
    abs_step: usize,
) -> Option<f64> {
    let mut positions = vec![start];
    for v in velocities {
        let last = *positions.last().unwrap();
        positions.push(add3(last, scale3(*v, cfg.time_step_s)));
    }
    let ctx = WindowCtx { cfg, users, start_pos: start, prev_velocity: [0.0; 3], abs_step };
    let chans = ctx.channels_for(&positions).ok()?;
    Some(objective_eval(cfg, &chans, &positions, velocities, beams).phi)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scenario::{default_scenario, place_users};

    #[test]
    fn zero_delta_draws_zero_vector() {
        let mut rng = stream(1, StreamKind::Disturbance);
        assert_eq!(disturbance(&mut rng, 0.0), [0.0, 0.0, 0.0]);
    }

    #[test]
    fn disturbance_statistics() {
        let mut rng = stream(2, StreamKind::Disturbance);
        let n = 100_000;
        let mut max_norm = 0.0f64;
        let mut mean = 0.0;
        for _ in 0..n {
            let d = disturbance(&mut rng, 6.0);
            let nm = norm3(d);
            max_norm = max_norm.max(nm);
            mean += nm;
        }
        mean /= n as f64;
        assert!(max_norm <= 6.0, "norm bound: {max_norm}");
        assert!((mean - 3.0).abs() / 3.0 < 0.02, "mean magnitude {mean}");
    }

    #[test]
    fn disturbance_is_deterministic_per_seed() {
        let mut a = stream(7, StreamKind::Disturbance);
        let mut b = stream(7, StreamKind::Disturbance);
        for _ in 0..100 {
            assert_eq!(disturbance(&mut a, 3.0), disturbance(&mut b, 3.0));
        }
    }

    #[test]
    fn trivial_mission_terminates_immediately() {
        let mut cfg = default_scenario();
        cfg.r_b_m = cfg.r_a_m;
        let users = place_users(&cfg, &mut stream(1, crate::scenario::StreamKind::UserPlacement));
        let trace = run_mission(&cfg, &users);
        assert_eq!(trace.termination, TerminationReason::Arrived);
        assert!(trace.steps.is_empty(), "no steps applied when already at the goal");
    }

    #[test]
    fn default_mission_arrives_without_disturbance() {
        let cfg = default_scenario();
        let users = place_users(&cfg, &mut stream(1, crate::scenario::StreamKind::UserPlacement));
        let trace = run_mission(&cfg, &users);
        assert_eq!(
            trace.termination,
            TerminationReason::Arrived,
            "terminal distance {}",
            trace.terminal_distance_m
        );
        assert!(trace.terminal_distance_m <= cfg.arrival_tol_m);
        // kinematic ledger: replay reproduces every recorded position
        let replayed = trace.replay_positions(cfg.r_a_m, cfg.time_step_s);
        for (i, s) in trace.steps.iter().enumerate() {
            for axis in 0..3 {
                assert!(
                    (replayed[i + 1][axis] - s.position_after[axis]).abs() < 1e-12,
                    "replay mismatch at step {i}"
                );
            }
        }
        // applied controls satisfy the envelopes on re-check
        let mut v_prev = [0.0, 0.0, 0.0];
        for s in &trace.steps {
            let beam_sq = vec![s.comm_power_w * cfg.amp_efficiency];
            assert!(control_within_envelopes(&cfg, v_prev, s.applied_velocity, &beam_sq));
            v_prev = s.applied_velocity;
        }
    }
}
