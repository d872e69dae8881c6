//! Alternating optimization over one prediction window: warm-started beams,
//! then beamforming and trajectory subproblems in turn, accepting an
//! iteration only if the true objective does not decrease beyond the slack.
//! Surrogate bound failures therefore cannot walk the plan downhill: the
//! last accepted snapshot is restored and the loop stops.

use conic::Settings;

use crate::optim::beams::solve_p2;
use crate::optim::objective::{objective_eval, PhiBreakdown};
use crate::optim::path::{init_trajectory, solve_p3};
use crate::optim::warm::warm_start_slot;
use crate::optim::{BeamPlan, SubproblemError, TrajectoryPlan, WindowCtx};

/// Relative slack for the non-decrease acceptance test.
pub const PHI_SLACK: f64 = 1e-6;

#[derive(Debug, Clone, Default)]
pub struct AoDiagnostics {
    /// Accepted objective values, starting with the initialization.
    pub phi_history: Vec<f64>,
    /// Candidate that was rejected by the guard, when one exists.
    pub rejected_phi: Option<f64>,
    pub p2_slot_failures: usize,
    pub p3_failures: usize,
    pub warm_start_failures: usize,
    pub stopped_on_decrease: bool,
    pub stopped_on_failure: bool,
    pub iterations_run: usize,
}

#[derive(Debug, Clone)]
pub struct AoResult {
    pub beams: BeamPlan,
    pub trajectory: TrajectoryPlan,
    pub objective: PhiBreakdown,
    pub diag: AoDiagnostics,
}

/// Run the window optimization from the straight-run initialization.
/// Errors only when the window cannot even be set up (channel synthesis at
/// the initialization fails); sub-solve failures fall back internally.
pub fn ao_loop(ctx: &WindowCtx<'_>) -> Result<AoResult, SubproblemError> {
    let cfg = ctx.cfg;
    let settings = Settings {
        tol: cfg.solver_tol,
        max_iter: cfg.solver_max_iters,
        verbose: false,
    };
    let mut diag = AoDiagnostics::default();

    let mut traj = init_trajectory(ctx);
    let mut chans = ctx.channels_for(&traj.positions)?;

    // warm-start beams per slot; zero beams are always a feasible stand-in
    let mut beams = BeamPlan::zero(ctx.slots(), cfg.num_users, cfg.num_antennas);
    for k in 0..ctx.slots() {
        let hs: Vec<Vec<num_complex::Complex64>> =
            chans[k].per_user.iter().map(|u| u.h.clone()).collect();
        match warm_start_slot(
            &hs,
            cfg.noise_power_w(),
            cfg.p_com_max_w,
            cfg.amp_efficiency,
            &settings,
        ) {
            Ok(ws) => beams.per_slot[k] = ws.beams,
            Err(_) => diag.warm_start_failures += 1,
        }
    }
    beams.clamp_to_budget(cfg.p_com_max_w, cfg.amp_efficiency);

    let mut objective = objective_eval(cfg, &chans, &traj.positions, &traj.velocities, &beams);
    diag.phi_history.push(objective.phi);

    for i in 0..cfg.ao_max_iters {
        diag.iterations_run = i + 1;
        // trajectory first, then beams re-matched to the channels at the
        // moved geometry; the pair is accepted or rejected as a whole
        let mut failed = false;
        let (new_traj, new_chans) = match solve_p3(ctx, &beams, &traj, &chans, &settings) {
            Ok(t) => match ctx.channels_for(&t.positions) {
                Ok(c) => (t, c),
                Err(_) => {
                    diag.p3_failures += 1;
                    failed = true;
                    (traj.clone(), chans.clone())
                }
            },
            Err(_) => {
                diag.p3_failures += 1;
                failed = true;
                (traj.clone(), chans.clone())
            }
        };
        let (new_beams, p2_failures) = solve_p2(cfg, &new_chans, &beams, &settings);
        diag.p2_slot_failures += p2_failures;
        failed |= p2_failures > 0;
        let candidate =
            objective_eval(cfg, &new_chans, &new_traj.positions, &new_traj.velocities, &new_beams);
        let slack = PHI_SLACK * objective.phi.abs().max(1.0);
        if cfg.objective_guard && candidate.phi < objective.phi - slack {
            diag.rejected_phi = Some(candidate.phi);
            diag.stopped_on_decrease = true;
            break;
        }
        beams = new_beams;
        traj = new_traj;
        chans = new_chans;
        objective = candidate;
        diag.phi_history.push(objective.phi);
        if failed {
            diag.stopped_on_failure = true;
            break;
        }
    }

    Ok(AoResult { beams, trajectory: traj, objective, diag })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scenario::{default_scenario, place_users, stream, StreamKind};

    fn run(seed: u64, mutate: impl Fn(&mut crate::scenario::ScenarioConfig)) -> AoResult {
        let mut cfg = default_scenario();
        mutate(&mut cfg);
        cfg.rng_seed = seed;
        let users = place_users(&cfg, &mut stream(seed, StreamKind::UserPlacement));
        let ctx = WindowCtx {
            cfg: &cfg,
            users: &users,
            start_pos: cfg.r_a_m,
            prev_velocity: [0.0, 0.0, 0.0],
            abs_step: 0,
        };
        ao_loop(&ctx).unwrap()
    }

    #[test]
    fn zero_iteration_cap_returns_initialization() {
        let out = run(3, |c| c.ao_max_iters = 0);
        assert_eq!(out.diag.phi_history.len(), 1);
        assert_eq!(out.diag.iterations_run, 0);
    }

    #[test]
    fn history_is_monotone_within_slack() {
        let mut accepted_any = 0;
        for seed in [1u64, 2, 3, 4, 5] {
            let out = run(seed, |c| c.ao_max_iters = 6);
            let h = &out.diag.phi_history;
            for w in h.windows(2) {
                assert!(
                    w[1] >= w[0] - PHI_SLACK * w[0].abs().max(1.0),
                    "phi history must not decrease: {h:?}"
                );
            }
            // a window either makes accepted progress or stops on a guarded
            // rejection; both satisfy the monotonicity contract
            if h.len() >= 2 {
                accepted_any += 1;
            } else {
                assert!(out.diag.rejected_phi.is_some() || out.diag.stopped_on_failure);
            }
        }
        assert!(accepted_any >= 2, "AO should make progress on most seeds");
    }

    #[test]
    fn impossible_rate_floor_falls_back_to_initialization() {
        let out = run(7, |c| {
            c.r_min_npcu = 1e3;
            c.ao_max_iters = 3;
        });
        // every subproblem infeasible: beams stay at warm start, trajectory
        // stays at the straight-run initialization, loop stops immediately
        assert!(out.diag.stopped_on_failure);
        assert_eq!(out.diag.iterations_run, 1);
        assert!(out.diag.p2_slot_failures > 0);
    }
}
