//! Geometry, pathloss, array steering, Rician channel synthesis and SINR.

use crate::geom::{norm3, sub3, Vec3};
use crate::scenario::{stream, ScenarioConfig, StreamKind, UserSet};
use num_complex::Complex64;
use rand::Rng;
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum ChannelError {
    #[error("pathloss needs d > 0, got {0}")]
    NonPositiveDistance(f64),
    #[error("steering angle cosine {0} outside [-1, 1]")]
    BadAngleCosine(f64),
    #[error("UAV-user distance {0} below the configured minimum {1}")]
    BelowMinDistance(f64, f64),
}

/// UAV kinematic state.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct UavState {
    pub position: Vec3,
    pub velocity: Vec3,
}

/// Channel of one user at one step: the full vector, its normalized part,
/// the linear pathloss, the frozen NLoS draw and the steering cosine.
#[derive(Debug, Clone)]
pub struct UserChannel {
    pub h: Vec<Complex64>,
    pub h_hat: Vec<Complex64>,
    pub pathloss: f64,
    pub nlos: Vec<Complex64>,
    pub cos_theta: f64,
}

/// Channels of all users at one step.
#[derive(Debug, Clone)]
pub struct ChannelRealization {
    pub per_user: Vec<UserChannel>,
}

/// Three-dimensional UAV-user distance.
pub fn distance(user: Vec3, uav: Vec3) -> f64 {
    norm3(sub3(user, uav))
}

/// Distance-dependent large-scale gain `B0 * d^-rho`.
pub fn pathloss(b0: f64, rho: f64, d: f64) -> Result<f64, ChannelError> {
    if !(d > 0.0) {
        return Err(ChannelError::NonPositiveDistance(d));
    }
    Ok(b0 * d.powf(-rho))
}

/// Half-wavelength ULA steering vector: entry m is `exp(j m pi cos_theta)`.
pub fn steering_vector(m: usize, cos_theta: f64) -> Result<Vec<Complex64>, ChannelError> {
    if !(-1.0..=1.0).contains(&cos_theta) {
        return Err(ChannelError::BadAngleCosine(cos_theta));
    }
    Ok((0..m)
        .map(|k| Complex64::from_polar(1.0, k as f64 * std::f64::consts::PI * cos_theta))
        .collect())
}

/// Departure-angle cosine of the x-aligned array: `(x_n - r_x)/d`.
pub fn angle_cosine(user: Vec3, uav: Vec3) -> f64 {
    let d = distance(user, uav);
    if d == 0.0 {
        0.0
    } else {
        ((user[0] - uav[0]) / d).clamp(-1.0, 1.0)
    }
}

/// Draw the NLoS component for (user, absolute step): `M` i.i.d. unit-variance
/// circularly-symmetric complex Gaussians from the dedicated stream. Entry
/// `m` only depends on the draw index, so a larger array extends a smaller
/// one instead of reshuffling it.
pub fn nlos_draw(seed: u64, user: usize, step: usize, m: usize) -> Vec<Complex64> {
    let mut rng = stream(seed, StreamKind::Nlos { user, step });
    (0..m)
        .map(|_| {
            let re: f64 = rng.sample(rand_distr::StandardNormal);
            let im: f64 = rng.sample(rand_distr::StandardNormal);
            Complex64::new(re, im) / std::f64::consts::SQRT_2
        })
        .collect()
}

/// Rician synthesis for one user at one step. `nlos` is the frozen draw for
/// the (user, absolute step) pair.
pub fn synthesize_user(
    cfg: &ScenarioConfig,
    user_pos: Vec3,
    uav_pos: Vec3,
    nlos: &[Complex64],
) -> Result<UserChannel, ChannelError> {
    let d = distance(user_pos, uav_pos);
    if d < cfg.d_min_m {
        return Err(ChannelError::BelowMinDistance(d, cfg.d_min_m));
    }
    let cos_theta = angle_cosine(user_pos, uav_pos);
    let a = steering_vector(cfg.num_antennas, cos_theta)?;
    let k = cfg.rician_k_linear();
    let (w_los, w_nlos) = ((k / (k + 1.0)).sqrt(), (1.0 / (k + 1.0)).sqrt());
    let h_hat: Vec<Complex64> =
        a.iter().zip(nlos).map(|(av, gv)| w_los * av + w_nlos * gv).collect();
    let beta = pathloss(cfg.ref_gain_b0, cfg.pathloss_exp, d)?;
    let h = h_hat.iter().map(|v| v * beta.sqrt()).collect();
    Ok(UserChannel { h, h_hat, pathloss: beta, nlos: nlos.to_vec(), cos_theta })
}

/// Channels of every user at an absolute step, with NLoS draws frozen per
/// (user, step) under the scenario seed.
pub fn synthesize_step(
    cfg: &ScenarioConfig,
    users: &UserSet,
    uav_pos: Vec3,
    step: usize,
) -> Result<ChannelRealization, ChannelError> {
    let per_user = users
        .positions
        .iter()
        .enumerate()
        .map(|(n, &u)| {
            let g = nlos_draw(cfg.rng_seed, n, step, cfg.num_antennas);
            synthesize_user(cfg, u, uav_pos, &g)
        })
        .collect::<Result<Vec<_>, _>>()?;
    Ok(ChannelRealization { per_user })
}

pub fn inner(h: &[Complex64], w: &[Complex64]) -> Complex64 {
    h.iter().zip(w).map(|(a, b)| a.conj() * b).sum()
}

/// SINR of user `n` under the beam set `w`:
/// `|h_n^H w_n|^2 / (sum_{k != n} |h_n^H w_k|^2 + sigma^2)`.
pub fn sinr(channels: &[Vec<Complex64>], beams: &[Vec<Complex64>], n: usize, sigma2: f64) -> f64 {
    let h = &channels[n];
    let signal = inner(h, &beams[n]).norm_sqr();
    let interference: f64 =
        beams.iter().enumerate().filter(|(k, _)| *k != n).map(|(_, w)| inner(h, w).norm_sqr()).sum();
    signal / (interference + sigma2)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scenario::{default_scenario, place_users};

    #[test]
    fn distance_cases() {
        assert_eq!(distance([3.0, 4.0, 0.0], [0.0, 0.0, 0.0]), 5.0);
        assert_eq!(distance([1.0, 2.0, 3.0], [1.0, 2.0, 3.0]), 0.0);
        let d = distance([800.0, 100.0, 1.5], [750.0, 50.0, 500.0]);
        let expect = (50f64.powi(2) + 50f64.powi(2) + 498.5f64.powi(2)).sqrt();
        assert!((d - expect).abs() < 1e-12);
    }

    #[test]
    fn pathloss_cases() {
        assert_eq!(pathloss(1.0, 2.3, 1.0).unwrap(), 1.0);
        assert!((pathloss(1.0, 2.0, 10.0).unwrap() - 0.01).abs() < 1e-15);
        let g = pathloss(1e-3, 2.3, 100.0).unwrap();
        assert!((g - 1e-3 * 10f64.powf(-4.6)).abs() / g < 1e-12, "g = {g}");
        assert!(pathloss(1.0, 2.3, 0.0).is_err());
    }

    #[test]
    fn pathloss_monotone_in_distance() {
        let mut last = f64::INFINITY;
        for i in 1..=500 {
            let d = i as f64 * 4.0;
            let g = pathloss(1e-3, 2.3, d).unwrap();
            assert!(g < last, "pathloss must strictly decrease, d = {d}");
            last = g;
        }
    }

    #[test]
    fn steering_cases() {
        let a = steering_vector(4, 0.0).unwrap();
        for v in &a {
            assert!((v - Complex64::new(1.0, 0.0)).norm() < 1e-15);
        }
        let b = steering_vector(2, 1.0).unwrap();
        assert!((b[1] - Complex64::new(-1.0, 0.0)).norm() < 1e-12, "e^{{j pi}} = -1");
        for m in [1, 3, 8] {
            for &ct in &[-1.0, -0.3, 0.7] {
                for v in steering_vector(m, ct).unwrap() {
                    assert!((v.norm() - 1.0).abs() < 1e-14, "unit modulus");
                }
            }
        }
        assert!(steering_vector(4, 1.5).is_err());
    }

    #[test]
    fn los_only_limit_matches_steering() {
        let mut cfg = default_scenario();
        cfg.rician_k_db = 300.0; // K -> infinity
        let users = place_users(&cfg, &mut stream(1, StreamKind::UserPlacement));
        let g = nlos_draw(cfg.rng_seed, 0, 0, cfg.num_antennas);
        let ch = synthesize_user(&cfg, users.positions[0], cfg.r_a_m, &g).unwrap();
        let a = steering_vector(cfg.num_antennas, ch.cos_theta).unwrap();
        for (hv, av) in ch.h_hat.iter().zip(&a) {
            assert!((hv - av).norm() < 1e-7, "K->inf: h_hat -> steering");
        }
    }

    #[test]
    fn nlos_only_limit_matches_draw() {
        let mut cfg = default_scenario();
        cfg.rician_k_db = -300.0; // K -> 0
        let users = place_users(&cfg, &mut stream(1, StreamKind::UserPlacement));
        let g = nlos_draw(cfg.rng_seed, 0, 0, cfg.num_antennas);
        let ch = synthesize_user(&cfg, users.positions[0], cfg.r_a_m, &g).unwrap();
        for (hv, gv) in ch.h_hat.iter().zip(&g) {
            assert!((hv - gv).norm() < 1e-7, "K->0: h_hat -> nlos draw");
        }
    }

    #[test]
    fn channel_norm_concentrates_at_m_beta() {
        let cfg = default_scenario();
        let users = place_users(&cfg, &mut stream(9, StreamKind::UserPlacement));
        let u = users.positions[0];
        let mut acc = 0.0;
        let n_draws = 10_000;
        let mut beta = 0.0;
        for step in 0..n_draws {
            let g = nlos_draw(cfg.rng_seed, 0, step, cfg.num_antennas);
            let ch = synthesize_user(&cfg, u, cfg.r_a_m, &g).unwrap();
            beta = ch.pathloss;
            acc += ch.h.iter().map(|v| v.norm_sqr()).sum::<f64>();
        }
        let mean = acc / n_draws as f64;
        let expect = cfg.num_antennas as f64 * beta;
        assert!(
            (mean - expect).abs() / expect < 0.02,
            "E||h||^2 = {mean} vs M*beta = {expect}"
        );
    }

    #[test]
    fn reconstruction_h_equals_sqrt_beta_hhat() {
        let cfg = default_scenario();
        let users = place_users(&cfg, &mut stream(3, StreamKind::UserPlacement));
        let ch = synthesize_step(&cfg, &users, cfg.r_a_m, 0).unwrap();
        for u in &ch.per_user {
            let root = u.pathloss.sqrt();
            for (hv, hh) in u.h.iter().zip(&u.h_hat) {
                assert!((hv - hh * root).norm() <= 1e-18 + 1e-15 * hv.norm());
            }
        }
    }

    #[test]
    fn too_close_is_an_error() {
        let mut cfg = default_scenario();
        cfg.d_min_m = 1000.0;
        let users = place_users(&cfg, &mut stream(1, StreamKind::UserPlacement));
        let g = nlos_draw(cfg.rng_seed, 0, 0, cfg.num_antennas);
        let e = synthesize_user(&cfg, users.positions[0], cfg.r_a_m, &g).unwrap_err();
        assert!(matches!(e, ChannelError::BelowMinDistance(_, _)));
    }

    #[test]
    fn sinr_single_user_has_no_interference() {
        let h = vec![vec![Complex64::new(1.0, 0.0), Complex64::new(0.0, 1.0)]];
        let w = vec![vec![Complex64::new(0.5, 0.0), Complex64::new(0.0, -0.5)]];
        // h^H w = 0.5 + conj(j)*(-0.5j) = 0.5 - 0.5 j^2 ... compute directly
        let s = inner(&h[0], &w[0]).norm_sqr();
        let got = sinr(&h, &w, 0, 1e-2);
        assert!((got - s / 1e-2).abs() < 1e-12);
    }

    #[test]
    fn sinr_zero_beam_is_zero() {
        let h = vec![
            vec![Complex64::new(1.0, 0.2); 4],
            vec![Complex64::new(0.3, -0.1); 4],
        ];
        let w = vec![vec![Complex64::new(0.0, 0.0); 4], vec![Complex64::new(0.1, 0.4); 4]];
        assert_eq!(sinr(&h, &w, 0, 1e-3), 0.0);
    }

    #[test]
    fn sinr_invariant_under_common_phase_rotation() {
        let cfg = default_scenario();
        let users = place_users(&cfg, &mut stream(5, StreamKind::UserPlacement));
        let ch = synthesize_step(&cfg, &users, cfg.r_a_m, 0).unwrap();
        let hs: Vec<Vec<Complex64>> = ch.per_user.iter().map(|u| u.h.clone()).collect();
        let mut beams: Vec<Vec<Complex64>> = hs
            .iter()
            .map(|h| h.iter().map(|v| v * Complex64::new(0.2, 0.1)).collect())
            .collect();
        let before: Vec<f64> =
            (0..3).map(|n| sinr(&hs, &beams, n, cfg.noise_power_w())).collect();
        let rot = Complex64::from_polar(1.0, 1.234);
        for v in beams[1].iter_mut() {
            *v *= rot;
        }
        for (n, b) in before.iter().enumerate() {
            let after = sinr(&hs, &beams, n, cfg.noise_power_w());
            assert!((after - b).abs() / b < 1e-12, "phase rotation must not change SINR");
        }
    }
}
