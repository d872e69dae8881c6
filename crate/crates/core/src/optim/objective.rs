//! True (non-surrogate) window objective: summed FBL rates, goal-distance
//! penalty and propulsion power, weighted per the scenario.

use crate::channel::{sinr, ChannelRealization};
use crate::fbl;
use crate::geom::{norm3, sub3, Vec3};
use crate::optim::BeamPlan;
use crate::propulsion::propulsion_power;
use crate::scenario::ScenarioConfig;

#[derive(Debug, Clone)]
pub struct PhiBreakdown {
    pub phi: f64,
    pub rate_term: f64,
    pub goal_term: f64,
    pub prop_term: f64,
    /// `rates[k][n]`, nats per channel use.
    pub rates: Vec<Vec<f64>>,
    pub prop_powers: Vec<f64>,
}

/// Evaluate the window objective at a candidate plan:
/// each slot k contributes the true rates at `positions[k]`, the squared
/// goal distance at `positions[k+1]`, and the propulsion power of
/// `velocities[k]`.
pub fn objective_eval(
    cfg: &ScenarioConfig,
    channels: &[ChannelRealization],
    positions: &[Vec3],
    velocities: &[Vec3],
    beams: &BeamPlan,
) -> PhiBreakdown {
    let slots = velocities.len();
    let sigma2 = cfg.noise_power_w();
    let fp = cfg.fbl();
    let prop = cfg.propulsion();
    let mut rate_term = 0.0;
    let mut goal_term = 0.0;
    let mut prop_term = 0.0;
    let mut rates = Vec::with_capacity(slots);
    let mut prop_powers = Vec::with_capacity(slots);
    for k in 0..slots {
        let hs: Vec<Vec<num_complex::Complex64>> =
            channels[k].per_user.iter().map(|u| u.h.clone()).collect();
        let slot_rates: Vec<f64> = (0..hs.len())
            .map(|n| fbl::fbl_rate(sinr(&hs, &beams.per_slot[k], n, sigma2), &fp))
            .collect();
        rate_term += slot_rates.iter().sum::<f64>();
        rates.push(slot_rates);
        let gd = norm3(sub3(positions[k + 1], cfg.r_b_m));
        goal_term += gd * gd;
        let pw = propulsion_power(velocities[k], &prop);
        prop_term += pw;
        prop_powers.push(pw);
    }
    PhiBreakdown {
        phi: cfg.weight_rate * rate_term
            - cfg.weight_goal * goal_term
            - cfg.weight_prop * prop_term,
        rate_term,
        goal_term,
        prop_term,
        rates,
        prop_powers,
    }
}
