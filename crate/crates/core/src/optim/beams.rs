//! Convexified beamforming subproblem: maximize the summed surrogate rate
//! over all window slots subject to the power budget, the per-user rate
//! floor, and the trust regions that keep the surrogates in their declared
//! validity regions. Slots do not couple, so each solves independently.

use conic::{ConicProblem, LinExpr, Settings, Status, VarId};
use num_complex::Complex64;

use crate::channel::ChannelRealization;
use crate::optim::warm::inner_product_forms;
use crate::optim::{BeamPlan, SubproblemError};
use crate::scenario::ScenarioConfig;
use crate::surrogate::beam::BeamLinPoint;

/// Relative floor for the linearized signal positivity constraint.
const SIGNAL_FLOOR_REL: f64 = 1e-8;

struct SlotProblem {
    problem: ConicProblem,
    re_vars: Vec<Vec<VarId>>,
    im_vars: Vec<Vec<VarId>>,
}

/// Beams of one slot (noise-normalized channels internally: sigma^2 = 1).
fn solve_slot(
    cfg: &ScenarioConfig,
    channels: &[Vec<Complex64>],
    reference: &[Vec<Complex64>],
    settings: &Settings,
) -> Result<Vec<Vec<Complex64>>, SubproblemError> {
    let n_users = channels.len();
    let m = channels[0].len();
    let sigma = cfg.noise_power_w().sqrt();
    let c_pen = cfg.fbl().penalty_coeff;
    // Two-stage normalization keeps every variable near unit scale: channels
    // to noise units first, then per user to unit total received power at
    // the linearization point. SINR and every surrogate value are invariant.
    let noise_scaled: Vec<Vec<Complex64>> =
        channels.iter().map(|h| h.iter().map(|v| v / sigma).collect()).collect();
    let raw_points: Vec<BeamLinPoint> = (0..n_users)
        .map(|n| BeamLinPoint::new(&noise_scaled[n], reference, n, 1.0, c_pen))
        .collect();
    let user_scale: Vec<f64> =
        raw_points.iter().map(|pt| 1.0 / (pt.s_i + pt.i_i).sqrt()).collect();
    let scaled: Vec<Vec<Complex64>> = noise_scaled
        .iter()
        .zip(&user_scale)
        .map(|(h, a)| h.iter().map(|v| v * *a).collect())
        .collect();
    let sigma2_n: Vec<f64> = user_scale.iter().map(|a| a * a).collect();
    let points: Vec<BeamLinPoint> = (0..n_users)
        .map(|n| BeamLinPoint::new(&scaled[n], reference, n, sigma2_n[n], c_pen))
        .collect();

    let mut sp = {
        let mut problem = ConicProblem::new();
        let re_vars: Vec<Vec<VarId>> = (0..n_users).map(|_| problem.add_vars(m)).collect();
        let im_vars: Vec<Vec<VarId>> = (0..n_users).map(|_| problem.add_vars(m)).collect();
        SlotProblem { problem, re_vars, im_vars }
    };
    let q_vars: Vec<VarId> = (0..n_users).map(|_| sp.problem.add_var()).collect();

    // C7: || vec w || <= sqrt(eta P)
    let budget_norm = (cfg.amp_efficiency * cfg.p_com_max_w).sqrt();
    let mut tail = Vec::with_capacity(2 * m * n_users);
    for n in 0..n_users {
        for v in sp.re_vars[n].iter().chain(sp.im_vars[n].iter()) {
            tail.push(LinExpr::var(*v));
        }
    }
    sp.problem.add_soc(LinExpr::constant(budget_norm), tail);

    let mut objective = LinExpr::constant(0.0);
    for n in 0..n_users {
        let pt = &points[n];
        // q_n >= sum_k |h_n^H w_k|^2 + sigma2_n  via a rotated cone on
        // x = q_n - sigma2_n:  head x+1, tail [x-1, 2v]
        let mut quad_tail =
            vec![LinExpr::var(q_vars[n]).add_constant(-sigma2_n[n] - 1.0)];
        for k in 0..n_users {
            let (re, im) = inner_product_forms(&scaled[n], &sp.re_vars[k], &sp.im_vars[k]);
            quad_tail.push(re.scaled(2.0));
            quad_tail.push(im.scaled(2.0));
        }
        sp.problem
            .add_soc(LinExpr::var(q_vars[n]).add_constant(-sigma2_n[n] + 1.0), quad_tail);

        // affine pieces at the candidate; with chi = a+jb and h^H w = re+j im,
        // Re{chi^* (re + j im)} = a*re + b*im
        let chi = pt.chi[n];
        let (re_o, im_o) = inner_product_forms(&scaled[n], &sp.re_vars[n], &sp.im_vars[n]);
        let s_bar = re_o
            .clone()
            .scaled(2.0 * chi.re)
            .plus(&im_o.clone().scaled(2.0 * chi.im))
            .add_constant(-pt.s_i);
        let mut i_bar = LinExpr::constant(sigma2_n[n]);
        for k in 0..n_users {
            if k == n {
                continue;
            }
            let (re_k, im_k) = inner_product_forms(&scaled[n], &sp.re_vars[k], &sp.im_vars[k]);
            let chik = pt.chi[k];
            i_bar = i_bar
                .plus(&re_k.scaled(2.0 * chik.re))
                .plus(&im_k.scaled(2.0 * chik.im))
                .add_constant(-chik.norm_sqr());
        }

        // trust regions (skipped for a silent user: chi ~ 0 carries no
        // signal information and the surrogate degenerates gracefully)
        if pt.s_i > 0.0 {
            sp.problem
                .add_linear_ge(s_bar.clone().add_constant(-SIGNAL_FLOOR_REL * pt.s_i));
            let total_i = pt.s_i + pt.i_i;
            sp.problem.add_linear_ge(
                LinExpr::constant(2.0 * total_i).minus(&s_bar.clone().plus(&i_bar)),
            );
            // (s_bar + i_bar)/total_i <= 2 i_bar / i_i
            sp.problem.add_linear_ge(
                i_bar
                    .clone()
                    .scaled(2.0 / pt.i_i)
                    .minus(&s_bar.clone().plus(&i_bar).scaled(1.0 / total_i)),
            );
        }

        // C_bar = ln(1+gamma_i) + 2 Re{chi^* h^H w_n}/i_i - gamma_i - eta_i q_n
        let c_bar = re_o
            .scaled(2.0 * chi.re / pt.i_i)
            .plus(&im_o.scaled(2.0 * chi.im / pt.i_i))
            .add_constant((1.0 + pt.gamma_i).ln() - pt.gamma_i)
            .add_term(q_vars[n], -pt.eta_i);
        // D_bar
        let d_bar = if pt.degenerate_dispersion {
            LinExpr::constant(pt.c_pen)
        } else {
            let xi = i_bar
                .clone()
                .scaled(pt.alpha)
                .plus(&s_bar.clone().plus(&i_bar).scaled(pt.beta))
                .add_constant(pt.psi);
            xi.scaled(-pt.a_sqrt * pt.c_pen).add_constant(pt.c_pen * pt.b_sqrt)
        };
        let rate = c_bar.minus(&d_bar);
        // C8
        sp.problem.add_linear_ge(rate.clone().add_constant(-cfg.r_min_npcu));
        objective = objective.plus(&rate);
    }
    sp.problem.maximize(objective);
    let result =
        sp.problem.solve(settings).map_err(|e| SubproblemError::Solver(e.to_string()))?;
    match result.status {
        Status::Optimal => {
            let x = result.x.unwrap();
            Ok((0..n_users)
                .map(|n| {
                    (0..m)
                        .map(|mm| {
                            Complex64::new(
                                x[sp.re_vars[n][mm].index()],
                                x[sp.im_vars[n][mm].index()],
                            )
                        })
                        .collect()
                })
                .collect())
        }
        Status::Infeasible => Err(SubproblemError::Infeasible),
        s => Err(SubproblemError::Solver(format!("beamforming subproblem ended {s:?}"))),
    }
}

/// Single-slot surrogate pass against a feasible reference beam set (also
/// the building block of the fixed-trajectory proposed scheme).
pub fn optimize_slot_beams(
    cfg: &ScenarioConfig,
    channels: &[Vec<Complex64>],
    reference: &[Vec<Complex64>],
    settings: &Settings,
) -> Result<Vec<Vec<Complex64>>, SubproblemError> {
    solve_slot(cfg, channels, reference, settings)
}

/// One SCA pass over every slot of the window. The reference plan is the
/// incumbent; slots whose solve fails keep their incumbent beams and the
/// failure count is reported back.
pub fn solve_p2(
    cfg: &ScenarioConfig,
    channels: &[ChannelRealization],
    reference: &BeamPlan,
    settings: &Settings,
) -> (BeamPlan, usize) {
    let mut out = reference.clone();
    let mut failures = 0;
    for (k, real) in channels.iter().enumerate() {
        let hs: Vec<Vec<Complex64>> = real.per_user.iter().map(|u| u.h.clone()).collect();
        match solve_slot(cfg, &hs, &reference.per_slot[k], settings) {
            Ok(beams) => out.per_slot[k] = beams,
            Err(_) => failures += 1,
        }
    }
    out.clamp_to_budget(cfg.p_com_max_w, cfg.amp_efficiency);
    (out, failures)
}
