//! Convexified trajectory subproblem: with beams fixed, optimize positions,
//! velocities and auxiliary user distances over the window. Rates enter
//! through affine distance-domain surrogates; the propulsion power enters
//! through its convex upper bound in epigraph form (inverse-square-root and
//! cubic pieces as cones); the goal penalty is an exact quadratic epigraph.

use conic::{ConicProblem, LinExpr, Settings, Status, VarId};

use crate::channel::{distance, ChannelRealization};
use crate::geom::{add3, scale3, sub3, Vec3};
use crate::optim::{BeamPlan, SubproblemError, TrajectoryPlan, WindowCtx};
use crate::propulsion::{propulsion_power, propulsion_surrogate, DOMAIN_FLOOR_REL};
use crate::surrogate::traj::{DistanceRate, TrajLinPoint};

/// Per-(user, slot) affine rate data for the solve.
enum RateLin {
    /// a_gain = 0: the rate is identically zero regardless of distance.
    Zero,
    Point(TrajLinPoint),
}

pub fn solve_p3(
    ctx: &WindowCtx<'_>,
    beams: &BeamPlan,
    incumbent: &TrajectoryPlan,
    channels_at_incumbent: &[ChannelRealization],
    settings: &Settings,
) -> Result<TrajectoryPlan, SubproblemError> {
    let cfg = ctx.cfg;
    let slots = ctx.slots();
    let n_users = cfg.num_users;
    let t_c = cfg.time_step_s;
    let sigma2 = cfg.noise_power_w();
    let kappa = sigma2 / cfg.ref_gain_b0;
    let c_pen = cfg.fbl().penalty_coeff;
    let prop = cfg.propulsion();
    let parasite_coeff = prop.parasite_coeff();

    // fixed communication powers per slot
    let p_com: Vec<f64> = (0..slots)
        .map(|k| beams.slot_sq_norms(k).iter().sum::<f64>() / cfg.amp_efficiency)
        .collect();

    // rate linearizations at the incumbent geometry
    let mut rate_lin: Vec<Vec<RateLin>> = Vec::with_capacity(slots);
    for k in 0..slots {
        let mut per_user = Vec::with_capacity(n_users);
        for n in 0..n_users {
            if k == 0 {
                per_user.push(RateLin::Zero); // slot-0 geometry is fixed
                continue;
            }
            let hhat = &channels_at_incumbent[k].per_user[n].h_hat;
            let a_gain = crate::channel::inner(hhat, &beams.per_slot[k][n]).norm_sqr();
            let b_gain: f64 = beams.per_slot[k]
                .iter()
                .enumerate()
                .filter(|(j, _)| *j != n)
                .map(|(_, w)| crate::channel::inner(hhat, w).norm_sqr())
                .sum();
            let model =
                DistanceRate { a_gain, b_gain, kappa, rho: cfg.pathloss_exp, c_pen };
            let d_here = distance(ctx.users.positions[n], incumbent.positions[k])
                .clamp(cfg.d_min_m, cfg.d_max_m);
            match TrajLinPoint::new(model, d_here) {
                Ok(pt) => per_user.push(RateLin::Point(pt)),
                Err(_) => per_user.push(RateLin::Zero),
            }
        }
        rate_lin.push(per_user);
    }
    // a zero-gain user cannot meet a positive rate floor at any distance
    if cfg.r_min_npcu > 0.0 {
        for row in rate_lin.iter().skip(1) {
            if row.iter().any(|r| matches!(r, RateLin::Zero)) {
                return Err(SubproblemError::Infeasible);
            }
        }
    }

    // Nondimensionalization: positions and distances in mission-length
    // units, velocities in V_max units, powers in hover-power units. Every
    // variable then sits near unit scale, which keeps the embedding's tau
    // healthy and the endgame well conditioned.
    let scale = crate::scenario::mission_length(cfg).max(100.0);
    let vscale = cfg.v_max_mps;
    let hover = prop.hover_power();
    // Psi at hover equals 2 V_h^2; in these units the induced-power
    // epigraph is exactly t >= s^(-1/2)
    let psi_scale = 2.0 * prop.v_hover * prop.v_hover;
    let mut p = ConicProblem::new();
    // variables
    let r_vars: Vec<[VarId; 3]> = (0..slots)
        .map(|_| {
            let v = p.add_vars(3);
            [v[0], v[1], v[2]]
        })
        .collect(); // r(1)..r(S)
    let v_vars: Vec<[VarId; 3]> = (0..slots)
        .map(|_| {
            let v = p.add_vars(3);
            [v[0], v[1], v[2]]
        })
        .collect(); // v(0)..v(S-1)
    let d_vars: Vec<Vec<VarId>> = (1..slots).map(|_| p.add_vars(n_users)).collect();

    // scaled position expression at slot k (k = 0 fixed start)
    let pos_expr = |k: usize, axis: usize| -> LinExpr {
        if k == 0 {
            LinExpr::constant(ctx.start_pos[axis] / scale)
        } else {
            LinExpr::var(r_vars[k - 1][axis])
        }
    };

    // C1 kinematics (scaled)
    for k in 0..slots {
        for axis in 0..3 {
            let expr = pos_expr(k, axis)
                .add_term(v_vars[k][axis], t_c * vscale / scale)
                .minus(&LinExpr::var(r_vars[k][axis]));
            p.add_linear_eq(expr);
        }
    }
    // C2 position boxes on r(1)..r(S)
    for k in 0..slots {
        let bounds = [cfg.x_range_m, cfg.y_range_m, cfg.altitude_range_m];
        for axis in 0..3 {
            p.add_linear_ge(
                LinExpr::var(r_vars[k][axis]).add_constant(-bounds[axis][0] / scale),
            );
            p.add_linear_ge(
                LinExpr::term(r_vars[k][axis], -1.0).add_constant(bounds[axis][1] / scale),
            );
        }
    }
    // C3 horizontal speed, C4 vertical speed (velocities in V_max units)
    for k in 0..slots {
        p.add_soc(
            LinExpr::constant(1.0),
            vec![LinExpr::var(v_vars[k][0]), LinExpr::var(v_vars[k][1])],
        );
        p.add_linear_ge(
            LinExpr::var(v_vars[k][2]).add_constant(cfg.u_max_mps / vscale),
        );
        p.add_linear_ge(
            LinExpr::term(v_vars[k][2], -1.0).add_constant(cfg.u_max_mps / vscale),
        );
    }
    // C5 acceleration, including the link to the previously applied velocity
    for k in 0..slots {
        let tail: Vec<LinExpr> = (0..3)
            .map(|axis| {
                if k == 0 {
                    LinExpr::var(v_vars[0][axis])
                        .add_constant(-ctx.prev_velocity[axis] / vscale)
                } else {
                    LinExpr::var(v_vars[k][axis]).minus(&LinExpr::var(v_vars[k - 1][axis]))
                }
            })
            .collect();
        p.add_soc(LinExpr::constant(cfg.a_max_mps2 * t_c / vscale), tail);
    }

    let mut objective = LinExpr::constant(0.0);

    // goal penalty epigraphs on r(1)..r(S): q >= ||r~ - r_B~||^2 in scaled
    // units, weighted by psi2 * scale^2
    for k in 0..slots {
        let q = p.add_var();
        let mut tail = vec![LinExpr::var(q).add_constant(-1.0)];
        for axis in 0..3 {
            tail.push(
                LinExpr::var(r_vars[k][axis])
                    .add_constant(-cfg.r_b_m[axis] / scale)
                    .scaled(2.0),
            );
        }
        p.add_soc(LinExpr::var(q).add_constant(1.0), tail);
        objective = objective.add_term(q, -cfg.weight_goal * scale * scale);
    }

    // propulsion surrogate epigraphs per slot (scaled velocities, powers in
    // hover units)
    for k in 0..slots {
        let v_ref = [incumbent.velocities[k][0], incumbent.velocities[k][1]];
        let sur = propulsion_surrogate(v_ref, &prop);
        // linearized Psi in hover units: s~ = Psi_lin / (2 V_h^2)
        let s_tilde = LinExpr::constant(
            (sur.a - sur.grad[0] * v_ref[0] - sur.grad[1] * v_ref[1]) / psi_scale,
        )
        .add_term(v_vars[k][0], sur.grad[0] * vscale / psi_scale)
        .add_term(v_vars[k][1], sur.grad[1] * vscale / psi_scale);
        p.add_linear_ge(
            s_tilde.clone().add_constant(-DOMAIN_FLOOR_REL * sur.a / psi_scale),
        );
        // induced power: hover * t_ind with t_ind >= s~^(-1/2)
        let t_ind = p.add_var();
        p.add_inv_sqrt_epigraph(LinExpr::var(t_ind), s_tilde);
        // climb power: t_cl >= v_z (scaled), t_cl >= 0
        let t_cl = p.add_var();
        p.add_linear_ge(LinExpr::var(t_cl).minus(&LinExpr::var(v_vars[k][2])));
        p.add_linear_ge(LinExpr::var(t_cl));
        // parasite power: q_cub >= ||v_h||^3 in V_max^3 units
        let s_nrm = p.add_var();
        p.add_soc(
            LinExpr::var(s_nrm),
            vec![LinExpr::var(v_vars[k][0]), LinExpr::var(v_vars[k][1])],
        );
        let q_cub = p.add_var();
        p.add_cubic_epigraph(LinExpr::var(q_cub), LinExpr::var(s_nrm));
        // upper bound of the propulsion power in watts
        let prop_ub = LinExpr::term(t_ind, hover)
            .add_term(t_cl, prop.weight_n * vscale)
            .add_term(q_cub, parasite_coeff * vscale * vscale * vscale);
        // C6
        p.add_linear_ge(
            prop_ub.clone().scaled(-1.0 / hover).add_constant((cfg.p_max_w - p_com[k]) / hover),
        );
        objective = objective.plus(&prop_ub.scaled(-cfg.weight_prop));
    }

    // distance SOCs, bounds, rate surrogates and C8
    for k in 1..slots {
        for n in 0..n_users {
            let dv = d_vars[k - 1][n];
            let tail: Vec<LinExpr> = (0..3)
                .map(|axis| {
                    LinExpr::constant(ctx.users.positions[n][axis] / scale)
                        .minus(&pos_expr(k, axis))
                })
                .collect();
            p.add_soc(LinExpr::var(dv), tail);
            p.add_linear_ge(LinExpr::var(dv).add_constant(-cfg.d_min_m / scale));
            p.add_linear_ge(LinExpr::term(dv, -1.0).add_constant(cfg.d_max_m / scale));
            let rate = match &rate_lin[k][n] {
                RateLin::Zero => LinExpr::constant(0.0),
                RateLin::Point(pt) => {
                    let slope = pt.shannon_slope - pt.disp_slope;
                    LinExpr::term(dv, slope * scale)
                        .add_constant(pt.shannon_i - pt.disp_i - slope * pt.d_i)
                }
            };
            p.add_linear_ge(rate.clone().add_constant(-cfg.r_min_npcu));
            objective = objective.plus(&rate.scaled(cfg.weight_rate));
        }
    }

    p.maximize(objective);
    let result = p.solve(settings).map_err(|e| SubproblemError::Solver(e.to_string()))?;
    match result.status {
        Status::Optimal => {
            let x = result.x.unwrap();
            let velocities: Vec<Vec3> = (0..slots)
                .map(|k| {
                    [
                        x[v_vars[k][0].index()] * vscale,
                        x[v_vars[k][1].index()] * vscale,
                        x[v_vars[k][2].index()] * vscale,
                    ]
                })
                .collect();
            // rebuild positions from the kinematics so C1 holds exactly
            let mut positions = Vec::with_capacity(slots + 1);
            positions.push(ctx.start_pos);
            for k in 0..slots {
                let last = *positions.last().unwrap();
                positions.push(add3(last, scale3(velocities[k], t_c)));
            }
            let mut aux = Vec::with_capacity(slots);
            for k in 0..slots {
                if k == 0 {
                    aux.push(
                        (0..n_users)
                            .map(|n| {
                                distance(ctx.users.positions[n], ctx.start_pos)
                                    .clamp(cfg.d_min_m, cfg.d_max_m)
                            })
                            .collect(),
                    );
                } else {
                    aux.push(
                        (0..n_users).map(|n| x[d_vars[k - 1][n].index()] * scale).collect(),
                    );
                }
            }
            Ok(TrajectoryPlan { positions, velocities, aux_distance: aux })
        }
        Status::Infeasible => Err(SubproblemError::Infeasible),
        s => Err(SubproblemError::Solver(format!("trajectory subproblem ended {s:?}"))),
    }
}

/// Largest climb rate that keeps the propulsion power within the total
/// budget (after reserving the full communication budget) at a horizontal
/// speed. Hover is below the budget for any sane parameter set, so this is
/// nonnegative in practice.
pub fn climb_cap(cfg: &crate::scenario::ScenarioConfig, vh: f64) -> f64 {
    let prop = cfg.propulsion();
    let base = propulsion_power([vh, 0.0, 0.0], &prop);
    let budget = cfg.p_max_w - cfg.p_com_max_w;
    ((budget - base) / prop.weight_n).max(0.0)
}

/// Horizontal speed minimizing level-flight propulsion power (coarse grid).
pub fn efficient_speed(cfg: &crate::scenario::ScenarioConfig) -> f64 {
    let prop = cfg.propulsion();
    let mut best = (0.0, f64::INFINITY);
    let mut vh = 0.0;
    while vh <= cfg.v_max_mps {
        let p = propulsion_power([vh, 0.0, 0.0], &prop);
        if p < best.1 {
            best = (vh, p);
        }
        vh += 0.25;
    }
    best.0
}

fn envelope_ok(cfg: &crate::scenario::ScenarioConfig, v_prev: Vec3, v: Vec3) -> bool {
    let tol = 1e-9;
    let vh = (v[0] * v[0] + v[1] * v[1]).sqrt();
    vh <= cfg.v_max_mps + tol
        && v[2].abs() <= cfg.u_max_mps + tol
        && crate::geom::norm3(sub3(v, v_prev)) <= cfg.a_max_mps2 * cfg.time_step_s + tol
        && v[2] <= climb_cap(cfg, vh) + tol
}

/// Project a desired velocity onto the motion and propulsion envelopes,
/// starting from a feasible previous velocity. Falls back to a bisection
/// toward the previous velocity, which is itself feasible.
pub fn safe_step(cfg: &crate::scenario::ScenarioConfig, v_prev: Vec3, v_des: Vec3) -> Vec3 {
    let t_c = cfg.time_step_s;
    let mut v = v_des;
    for _ in 0..4 {
        let vh = (v[0] * v[0] + v[1] * v[1]).sqrt();
        if vh > cfg.v_max_mps {
            let s = cfg.v_max_mps / vh;
            v[0] *= s;
            v[1] *= s;
        }
        v[2] = v[2].clamp(-cfg.u_max_mps, cfg.u_max_mps);
        let vh = (v[0] * v[0] + v[1] * v[1]).sqrt();
        v[2] = v[2].min(climb_cap(cfg, vh) * 0.999);
        let dv = sub3(v, v_prev);
        let dvn = crate::geom::norm3(dv);
        let max_dv = cfg.a_max_mps2 * t_c;
        if dvn > max_dv {
            v = add3(v_prev, scale3(dv, max_dv / dvn));
        }
        if envelope_ok(cfg, v_prev, v) {
            return v;
        }
    }
    // bisect toward the feasible previous velocity
    let (mut lo, mut hi) = (0.0f64, 1.0f64);
    for _ in 0..40 {
        let mid = 0.5 * (lo + hi);
        let cand = add3(v_prev, scale3(sub3(v, v_prev), mid));
        if envelope_ok(cfg, v_prev, cand) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let out = add3(v_prev, scale3(sub3(v, v_prev), lo));
    if envelope_ok(cfg, v_prev, out) {
        out
    } else {
        v_prev
    }
}

/// Feasible straight-run initialization toward the goal: accelerate along
/// the goal direction as hard as the acceleration, speed and power
/// envelopes allow, braking so the remaining distance can absorb the speed,
/// plus box clamps.
pub fn init_trajectory(ctx: &WindowCtx<'_>) -> TrajectoryPlan {
    let cfg = ctx.cfg;
    let slots = ctx.slots();
    let t_c = cfg.time_step_s;
    let mut positions = vec![ctx.start_pos];
    let mut velocities = Vec::with_capacity(slots);
    let mut v_prev = ctx.prev_velocity;
    for _ in 0..slots {
        let r = *positions.last().unwrap();
        // Aim slightly above the goal: descents have full power authority
        // while climbs are capped near 230 W, so approaching from above
        // turns most disturbance corrections into descents. The offset is
        // inside the arrival tolerance.
        let z_lead = (0.6 * cfg.arrival_tol_m).min(3.0);
        let aim = [cfg.r_b_m[0], cfg.r_b_m[1], cfg.r_b_m[2] + z_lead];
        let to_goal = sub3(aim, r);
        let dist = crate::geom::norm3(to_goal);
        let dir = if dist > 1e-9 { scale3(to_goal, 1.0 / dist) } else { [0.0, 0.0, 0.0] };
        // speed cap: envelope, braking margin, and do-not-overshoot
        let vcap = cfg
            .v_max_mps
            .min((2.0 * cfg.a_max_mps2 * dist).sqrt())
            .min(dist / t_c);
        let mut v_des = scale3(dir, vcap);
        // Climb authority grows with horizontal speed (induced power falls
        // off). Far from the goal, fly a needed climb at speed instead of
        // pulling up in place; near the goal the overshoot would cost more
        // than the climb saves.
        let want_up = v_des[2];
        if want_up > 0.0 && dist > 20.0 {
            let vh_des = (v_des[0] * v_des[0] + v_des[1] * v_des[1]).sqrt();
            if want_up > 0.9 * climb_cap(cfg, vh_des) {
                let v_eff = efficient_speed(cfg);
                let heading = if vh_des > 1e-6 {
                    [v_des[0] / vh_des, v_des[1] / vh_des]
                } else {
                    [1.0, 0.0]
                };
                let vh_new = vh_des.max(v_eff.min(cfg.v_max_mps));
                v_des = [
                    heading[0] * vh_new,
                    heading[1] * vh_new,
                    want_up.min(climb_cap(cfg, vh_new) * 0.9),
                ];
            }
        }
        let mut v_next = safe_step(cfg, v_prev, v_des);
        // keep the altitude inside its box (descent only; climbs were
        // already power-capped and the box is wide)
        let z_next = r[2] + v_next[2] * t_c;
        if z_next < cfg.altitude_range_m[0] {
            v_next[2] = (cfg.altitude_range_m[0] - r[2]) / t_c;
        } else if z_next > cfg.altitude_range_m[1] {
            v_next[2] = ((cfg.altitude_range_m[1] - r[2]) / t_c).min(v_next[2]);
        }
        velocities.push(v_next);
        positions.push(add3(r, scale3(v_next, t_c)));
        v_prev = v_next;
    }
    let aux = (0..slots)
        .map(|k| {
            (0..cfg.num_users)
                .map(|n| {
                    distance(ctx.users.positions[n], positions[k])
                        .clamp(cfg.d_min_m, cfg.d_max_m)
                })
                .collect()
        })
        .collect();
    TrajectoryPlan { positions, velocities, aux_distance: aux }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geom::norm3;
    use crate::scenario::{default_scenario, place_users, stream, StreamKind};

    fn ctx<'a>(
        cfg: &'a crate::scenario::ScenarioConfig,
        users: &'a crate::scenario::UserSet,
    ) -> WindowCtx<'a> {
        WindowCtx {
            cfg,
            users,
            start_pos: cfg.r_a_m,
            prev_velocity: [0.0, 0.0, 0.0],
            abs_step: 0,
        }
    }

    #[test]
    fn init_trajectory_is_kinematically_feasible() {
        let cfg = default_scenario();
        let users = place_users(&cfg, &mut stream(1, StreamKind::UserPlacement));
        let c = ctx(&cfg, &users);
        let plan = init_trajectory(&c);
        let mut v_prev = [0.0, 0.0, 0.0];
        for k in 0..plan.slots() {
            let v = plan.velocities[k];
            assert!((v[0] * v[0] + v[1] * v[1]).sqrt() <= cfg.v_max_mps + 1e-9);
            assert!(v[2].abs() <= cfg.u_max_mps + 1e-9);
            assert!(
                norm3(sub3(v, v_prev)) <= cfg.a_max_mps2 * cfg.time_step_s + 1e-9,
                "acceleration limit at slot {k}"
            );
            v_prev = v;
            let z = plan.positions[k + 1][2];
            assert!(z >= cfg.altitude_range_m[0] - 1e-9 && z <= cfg.altitude_range_m[1] + 1e-9);
        }
    }

    #[test]
    fn pure_goal_weight_points_velocity_at_goal() {
        // one slot, zero start velocity, only the goal term active
        let mut cfg = default_scenario();
        cfg.horizon_slots = 1;
        cfg.weight_rate = 0.0;
        cfg.weight_prop = 0.0;
        cfg.r_min_npcu = 0.0;
        let users = place_users(&cfg, &mut stream(1, StreamKind::UserPlacement));
        let c = ctx(&cfg, &users);
        let incumbent = init_trajectory(&c);
        let chans = c.channels_for(&incumbent.positions).unwrap();
        let beams = BeamPlan::zero(1, cfg.num_users, cfg.num_antennas);
        let plan =
            solve_p3(&c, &beams, &incumbent, &chans, &conic::Settings::default()).unwrap();
        let v = plan.velocities[0];
        let dir = sub3(cfg.r_b_m, cfg.r_a_m);
        let cosine = crate::geom::dot3(v, dir) / (norm3(v) * norm3(dir));
        assert!(cosine >= 0.99, "velocity should point at the goal, cos = {cosine}");
    }

    #[test]
    fn time_optimal_straight_run_matches_kinematic_oracle() {
        // no rate or propulsion pressure: the plan should close the distance
        // as a bang-coast profile within the speed and acceleration limits
        let mut cfg = default_scenario();
        cfg.weight_rate = 0.0;
        cfg.weight_prop = 0.0;
        cfg.r_min_npcu = 0.0;
        cfg.horizon_slots = 5;
        let users = place_users(&cfg, &mut stream(4, StreamKind::UserPlacement));
        let c = ctx(&cfg, &users);
        let incumbent = init_trajectory(&c);
        let chans = c.channels_for(&incumbent.positions).unwrap();
        let beams = BeamPlan::zero(cfg.horizon_slots, cfg.num_users, cfg.num_antennas);
        let plan =
            solve_p3(&c, &beams, &incumbent, &chans, &conic::Settings::default()).unwrap();
        // 1D oracle along the goal direction: ramp speed by a_max*t_c up to
        // the envelope cap each slot
        let dist0 = norm3(sub3(cfg.r_b_m, cfg.r_a_m));
        let dir = scale3(sub3(cfg.r_b_m, cfg.r_a_m), 1.0 / dist0);
        // envelope cap for this geometry (direction fixed): limited by both
        // the horizontal and vertical components
        let dh = (dir[0] * dir[0] + dir[1] * dir[1]).sqrt();
        let cap = (cfg.v_max_mps / dh).min(cfg.u_max_mps / dir[2].abs());
        let mut covered_oracle = 0.0;
        let mut speed: f64 = 0.0;
        for _ in 0..cfg.horizon_slots {
            speed = (speed + cfg.a_max_mps2 * cfg.time_step_s).min(cap);
            covered_oracle += speed * cfg.time_step_s;
        }
        let covered = dist0 - norm3(sub3(cfg.r_b_m, plan.positions[cfg.horizon_slots]));
        assert!(
            (covered - covered_oracle).abs() <= 0.01 * covered_oracle,
            "bang-coast oracle {covered_oracle} vs plan {covered}"
        );
    }

    #[test]
    fn aux_distances_are_tight_when_rates_push() {
        let cfg = default_scenario();
        let users = place_users(&cfg, &mut stream(6, StreamKind::UserPlacement));
        let c = ctx(&cfg, &users);
        let incumbent = init_trajectory(&c);
        let chans = c.channels_for(&incumbent.positions).unwrap();
        // interference-aware beams at the incumbent geometry
        let per_slot: Vec<Vec<Vec<num_complex::Complex64>>> = chans
            .iter()
            .map(|cr| {
                let hs: Vec<Vec<num_complex::Complex64>> =
                    cr.per_user.iter().map(|u| u.h.clone()).collect();
                crate::baselines::zf_beams(&hs, cfg.p_com_max_w, cfg.amp_efficiency)
                    .unwrap_or_else(|_| {
                        crate::baselines::mrt_beams(&hs, cfg.p_com_max_w, cfg.amp_efficiency)
                    })
            })
            .collect();
        let beams = BeamPlan { per_slot };
        let plan =
            solve_p3(&c, &beams, &incumbent, &chans, &conic::Settings::default()).unwrap();
        for k in 1..cfg.horizon_slots {
            for n in 0..cfg.num_users {
                let actual = distance(users.positions[n], plan.positions[k]);
                let aux = plan.aux_distance[k][n];
                assert!(
                    aux >= actual - 1e-6 || aux >= cfg.d_min_m - 1e-9,
                    "aux distance below the cone at ({k}, {n}): {aux} vs {actual}"
                );
                // the rate term pulls the auxiliary distance onto the larger
                // of the true distance and its floor
                let target = actual.max(cfg.d_min_m);
                assert!(
                    (aux - target).abs() <= 1e-4 * target,
                    "complementarity at ({k}, {n}): aux {aux} vs {target}"
                );
            }
        }
    }
}
