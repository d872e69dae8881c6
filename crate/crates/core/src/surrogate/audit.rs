//! Seeded validity audits for every surrogate family.
//!
//! Beamforming side: the Shannon lower bound is asserted violation-free
//! inside its signal-positivity trust region; the dispersion upper bound's
//! product-of-bounds construction is exercised under both of its trust
//! regions and its violations are *counted and reported*, not asserted
//! away (see [`crate::surrogate::beam`]).
//!
//! Trajectory side: both bounds are tangent lines whose direction rests on
//! a curvature premise (Shannon convex, dispersion concave in the distance).
//! The premise is itself verified numerically per draw, the certified
//! sub-interval is reported, and tangents are asserted violation-free inside
//! it. In interference-heavy draws the Shannon premise fails below a
//! crossover distance; the audit measures that instead of hiding it.

use num_complex::Complex64;
use rand::Rng;

use crate::baselines::{mrt_beams, zf_beams};
use crate::channel::synthesize_step;
use crate::scenario::{place_users, stream, ScenarioConfig, StreamKind};
use crate::surrogate::beam::{true_rate_parts, BeamLinPoint};
use crate::surrogate::traj::{second_difference_min, DistanceRate, TrajLinPoint};

#[derive(Debug, Clone, Default)]
pub struct BeamAuditReport {
    pub samples_drawn: usize,
    pub trust_rejections: usize,
    pub shannon_checked: usize,
    pub shannon_violations: usize,
    pub shannon_max_gap: f64,
    pub shannon_point_gap: f64,
    pub dispersion_checked: usize,
    pub dispersion_violations: usize,
    pub dispersion_max_gap: f64,
    pub dispersion_point_gap: f64,
}

impl BeamAuditReport {
    pub fn to_text(&self) -> String {
        format!(
            "beam-surrogate-audit v1\n\
             samples_drawn = {}\n\
             trust_rejections = {}\n\
             shannon_checked = {}\n\
             shannon_violations = {}\n\
             shannon_max_gap = {:.3e}\n\
             shannon_point_gap = {:.3e}\n\
             dispersion_checked = {}\n\
             dispersion_violations = {}\n\
             dispersion_max_gap = {:.3e}\n\
             dispersion_point_gap = {:.3e}\n",
            self.samples_drawn,
            self.trust_rejections,
            self.shannon_checked,
            self.shannon_violations,
            self.shannon_max_gap,
            self.shannon_point_gap,
            self.dispersion_checked,
            self.dispersion_violations,
            self.dispersion_max_gap,
            self.dispersion_point_gap,
        )
    }
}

/// Draw reference points from seeded geometry with interference-aware and
/// matched-filter beams, then stress the beamforming surrogates with random
/// in-budget candidates.
pub fn audit_beam_surrogates(
    cfg: &ScenarioConfig,
    seed: u64,
    reference_points: usize,
    candidates_per_point: usize,
) -> BeamAuditReport {
    let users = place_users(cfg, &mut stream(seed, StreamKind::UserPlacement));
    let sigma2 = cfg.noise_power_w();
    let c_pen = cfg.fbl().penalty_coeff;
    let mut rng = stream(seed, StreamKind::Audit { tag: 0xbea });
    let mut report = BeamAuditReport::default();
    for point_idx in 0..reference_points {
        let pos = sample_uav_position(cfg, &mut rng);
        let chans: Vec<Vec<Complex64>> = match synthesize_step(cfg, &users, pos, point_idx) {
            Ok(c) => c.per_user.into_iter().map(|u| u.h).collect(),
            Err(_) => continue,
        };
        let ref_beams = if point_idx % 2 == 0 {
            mrt_beams(&chans, cfg.p_com_max_w, cfg.amp_efficiency)
        } else {
            zf_beams(&chans, cfg.p_com_max_w, cfg.amp_efficiency)
                .unwrap_or_else(|_| mrt_beams(&chans, cfg.p_com_max_w, cfg.amp_efficiency))
        };
        for (n, h) in chans.iter().enumerate() {
            let pt = BeamLinPoint::new(h, &ref_beams, n, sigma2, c_pen);
            // first-order tightness at the point itself
            let cbar0 = pt.shannon_lb(h, n, &ref_beams);
            let ctrue0 = (1.0 + pt.gamma_i).ln();
            report.shannon_point_gap =
                report.shannon_point_gap.max((cbar0 - ctrue0).abs() / ctrue0.abs().max(1e-12));
            if !pt.degenerate_dispersion {
                let dbar0 = pt.dispersion_ub(h, n, &ref_beams);
                let dtrue0 = pt.c_pen * pt.v_i.sqrt();
                report.dispersion_point_gap = report
                    .dispersion_point_gap
                    .max((dbar0 - dtrue0).abs() / dtrue0.abs().max(1e-12));
            }
            for c_idx in 0..candidates_per_point {
                report.samples_drawn += 1;
                // Mostly local moves around the reference (how SCA actually
                // steps), with occasional global redraws.
                let cand = if c_idx % 4 == 0 {
                    random_in_budget_beams(cfg, &mut rng, chans.len(), cfg.num_antennas)
                } else {
                    perturbed_beams(cfg, &mut rng, &ref_beams)
                };
                if !pt.trust_signal(h, n, &cand[n]) {
                    report.trust_rejections += 1;
                    continue;
                }
                let (ctrue, dtrue) = true_rate_parts(h, n, &cand, sigma2, c_pen);
                report.shannon_checked += 1;
                let cbar = pt.shannon_lb(h, n, &cand);
                let gap = cbar - ctrue;
                if gap > 1e-9 * ctrue.abs().max(1.0) {
                    report.shannon_violations += 1;
                    report.shannon_max_gap = report.shannon_max_gap.max(gap);
                }
                if pt.trust_total(h, n, &cand) && pt.trust_ratio(h, n, &cand) {
                    report.dispersion_checked += 1;
                    let dbar = pt.dispersion_ub(h, n, &cand);
                    let dgap = dtrue - dbar;
                    if dgap > 1e-9 * dtrue.abs().max(1.0) {
                        report.dispersion_violations += 1;
                        report.dispersion_max_gap = report.dispersion_max_gap.max(dgap);
                    }
                }
            }
        }
    }
    report
}

fn sample_uav_position(
    cfg: &ScenarioConfig,
    rng: &mut rand_chacha::ChaCha12Rng,
) -> [f64; 3] {
    let t: f64 = rng.random();
    let lat: f64 = (rng.random::<f64>() - 0.5) * cfg.corridor_width_m;
    let alt = cfg.altitude_range_m[0]
        + rng.random::<f64>() * (cfg.altitude_range_m[1] - cfg.altitude_range_m[0]);
    let a = cfg.r_a_m;
    let b = cfg.r_b_m;
    [
        a[0] + t * (b[0] - a[0]) + lat * 0.2,
        a[1] + t * (b[1] - a[1]) + lat,
        alt,
    ]
}

/// Random perturbation of a reference beam set, projected back into the
/// power budget when it overshoots.
fn perturbed_beams(
    cfg: &ScenarioConfig,
    rng: &mut rand_chacha::ChaCha12Rng,
    reference: &[Vec<Complex64>],
) -> Vec<Vec<Complex64>> {
    let ref_norm: f64 = reference
        .iter()
        .map(|w| w.iter().map(|v| v.norm_sqr()).sum::<f64>())
        .sum::<f64>()
        .sqrt();
    let radius = ref_norm * rng.random::<f64>() * 0.5;
    let mut beams: Vec<Vec<Complex64>> = reference
        .iter()
        .map(|w| {
            w.iter()
                .map(|v| {
                    v + Complex64::new(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5)
                        * radius
                        / (w.len() as f64).sqrt()
                })
                .collect()
        })
        .collect();
    let total: f64 = beams.iter().map(|w| w.iter().map(|v| v.norm_sqr()).sum::<f64>()).sum();
    let budget = cfg.amp_efficiency * cfg.p_com_max_w;
    if total > budget {
        let scale = (budget / total).sqrt();
        for w in &mut beams {
            for v in w.iter_mut() {
                *v *= scale;
            }
        }
    }
    beams
}

fn random_in_budget_beams(
    cfg: &ScenarioConfig,
    rng: &mut rand_chacha::ChaCha12Rng,
    n: usize,
    m: usize,
) -> Vec<Vec<Complex64>> {
    let mut beams: Vec<Vec<Complex64>> = (0..n)
        .map(|_| {
            (0..m)
                .map(|_| Complex64::new(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5))
                .collect()
        })
        .collect();
    let total: f64 = beams.iter().map(|w| w.iter().map(|v| v.norm_sqr()).sum::<f64>()).sum();
    let budget = cfg.amp_efficiency * cfg.p_com_max_w * rng.random::<f64>();
    let scale = (budget / total).sqrt();
    for w in &mut beams {
        for v in w.iter_mut() {
            *v *= scale;
        }
    }
    beams
}

/// Distance-domain rate models realized from seeded geometry and beams, the
/// inputs of the trajectory-side audits.
pub fn realistic_distance_models(
    cfg: &ScenarioConfig,
    seed: u64,
    draws: usize,
) -> Vec<DistanceRate> {
    let users = place_users(cfg, &mut stream(seed, StreamKind::UserPlacement));
    let sigma2 = cfg.noise_power_w();
    let c_pen = cfg.fbl().penalty_coeff;
    let kappa = sigma2 / cfg.ref_gain_b0;
    let mut rng = stream(seed, StreamKind::Audit { tag: 0x7a1 });
    let mut models = Vec::new();
    let mut draw_idx = 0usize;
    while models.len() < draws {
        let pos = sample_uav_position(cfg, &mut rng);
        let step = 100_000 + draw_idx;
        draw_idx += 1;
        let Ok(real) = synthesize_step(cfg, &users, pos, step) else { continue };
        let hhat: Vec<Vec<Complex64>> = real.per_user.iter().map(|u| u.h_hat.clone()).collect();
        let full: Vec<Vec<Complex64>> = real.per_user.iter().map(|u| u.h.clone()).collect();
        let beams = if draw_idx % 2 == 0 {
            mrt_beams(&full, cfg.p_com_max_w, cfg.amp_efficiency)
        } else {
            zf_beams(&full, cfg.p_com_max_w, cfg.amp_efficiency)
                .unwrap_or_else(|_| mrt_beams(&full, cfg.p_com_max_w, cfg.amp_efficiency))
        };
        for n in 0..hhat.len() {
            if models.len() >= draws {
                break;
            }
            let a_gain = crate::channel::inner(&hhat[n], &beams[n]).norm_sqr();
            let b_gain: f64 = beams
                .iter()
                .enumerate()
                .filter(|(k, _)| *k != n)
                .map(|(_, w)| crate::channel::inner(&hhat[n], w).norm_sqr())
                .sum();
            if a_gain <= 0.0 {
                continue;
            }
            models.push(DistanceRate {
                a_gain,
                b_gain,
                kappa,
                rho: cfg.pathloss_exp,
                c_pen,
            });
        }
    }
    models
}

#[derive(Debug, Clone, Default)]
pub struct TrajAuditReport {
    pub draws: usize,
    pub grid_step: f64,
    pub interval: [f64; 2],
    /// Shannon-term convexity premise: draws certified on the full interval,
    /// and the average certified fraction of the interval.
    pub shannon_full_premise: usize,
    pub shannon_mean_coverage: f64,
    pub shannon_checked: usize,
    pub shannon_violations: usize,
    pub shannon_point_gap: f64,
    /// Dispersion concavity premise and tangent checks.
    pub dispersion_full_premise: usize,
    pub dispersion_mean_coverage: f64,
    pub dispersion_checked: usize,
    pub dispersion_violations: usize,
    pub dispersion_point_gap: f64,
    /// Worst (largest) central second difference of the dispersion penalty
    /// across draws; strictly negative certifies concavity everywhere.
    pub dispersion_worst_second_diff: f64,
}

impl TrajAuditReport {
    pub fn to_text(&self) -> String {
        format!(
            "trajectory-surrogate-audit v1\n\
             draws = {}\n\
             grid_step = {}\n\
             interval = {} {}\n\
             shannon_full_premise = {}\n\
             shannon_mean_coverage = {:.4}\n\
             shannon_checked = {}\n\
             shannon_violations = {}\n\
             shannon_point_gap = {:.3e}\n\
             dispersion_full_premise = {}\n\
             dispersion_mean_coverage = {:.4}\n\
             dispersion_checked = {}\n\
             dispersion_violations = {}\n\
             dispersion_point_gap = {:.3e}\n\
             dispersion_worst_second_diff = {:.6e}\n",
            self.draws,
            self.grid_step,
            self.interval[0],
            self.interval[1],
            self.shannon_full_premise,
            self.shannon_mean_coverage,
            self.shannon_checked,
            self.shannon_violations,
            self.shannon_point_gap,
            self.dispersion_full_premise,
            self.dispersion_mean_coverage,
            self.dispersion_checked,
            self.dispersion_violations,
            self.dispersion_point_gap,
            self.dispersion_worst_second_diff,
        )
    }
}

/// Curvature tolerance separating genuine premise failures from grid noise.
const PREMISE_TOL: f64 = 1e-12;

/// Largest grid suffix `[d*, hi]` on which `f` is convex to within the
/// noise tolerance; returns `d*`.
fn convex_suffix_start(f: impl Fn(f64) -> f64, interval: [f64; 2], h: f64) -> f64 {
    let [lo, hi] = interval;
    let n = ((hi - lo) / h).round() as usize;
    let mut start = hi;
    let mut k = n as i64 - 1;
    while k >= 1 {
        let d = lo + k as f64 * h;
        if d + h > hi {
            k -= 1;
            continue;
        }
        let dd = (f(d + h) - 2.0 * f(d) + f(d - h)) / (h * h);
        if dd < -PREMISE_TOL {
            break;
        }
        start = d - h;
        k -= 1;
    }
    start
}

/// Audit of the trajectory-side tangent bounds over realized models.
pub fn audit_traj_surrogates(
    models: &[DistanceRate],
    interval: [f64; 2],
    grid_step: f64,
    tangents_per_draw: usize,
    seed: u64,
) -> TrajAuditReport {
    let mut rng = stream(seed, StreamKind::Audit { tag: 0x7a2 });
    let mut rep = TrajAuditReport {
        draws: models.len(),
        grid_step,
        interval,
        dispersion_worst_second_diff: f64::NEG_INFINITY,
        ..Default::default()
    };
    let [lo, hi] = interval;
    let span = hi - lo;
    let mut sh_cov = 0.0;
    let mut di_cov = 0.0;
    for model in models {
        // Shannon premise: convexity of C(d); certified on a suffix.
        let sh_lo = convex_suffix_start(|d| model.shannon(d), interval, grid_step);
        if sh_lo <= lo + grid_step {
            rep.shannon_full_premise += 1;
        }
        sh_cov += (hi - sh_lo) / span;
        // Dispersion premise: concavity of D(d), i.e. convexity of c - D.
        let di_lo = convex_suffix_start(|d| model.penalty_gap(d), interval, grid_step);
        if di_lo <= lo + grid_step {
            rep.dispersion_full_premise += 1;
        }
        di_cov += (hi - di_lo) / span;
        let worst_dd = -second_difference_min(|d| model.penalty_gap(d), interval, grid_step);
        rep.dispersion_worst_second_diff = rep.dispersion_worst_second_diff.max(worst_dd);

        for _ in 0..tangents_per_draw {
            // Shannon tangents inside the certified suffix
            let d_i = sh_lo + rng.random::<f64>() * (hi - sh_lo);
            if let Ok(pt) = TrajLinPoint::new(*model, d_i) {
                rep.shannon_point_gap = rep.shannon_point_gap.max(
                    (pt.shannon_lb(d_i, lo, hi).unwrap() - model.shannon(d_i)).abs()
                        / model.shannon(d_i).abs().max(1e-12),
                );
                let mut d = sh_lo;
                while d <= hi {
                    rep.shannon_checked += 1;
                    let bound = pt.shannon_i + pt.shannon_slope * (d - d_i);
                    let truth = model.shannon(d);
                    if bound > truth + 1e-9 * truth.abs().max(1.0) {
                        rep.shannon_violations += 1;
                    }
                    d += grid_step * 16.0;
                }
            }
            // Dispersion tangents inside the certified (concave) suffix
            let d_i = di_lo + rng.random::<f64>() * (hi - di_lo);
            if let Ok(pt) = TrajLinPoint::new(*model, d_i) {
                rep.dispersion_point_gap = rep.dispersion_point_gap.max(
                    (pt.dispersion_ub(d_i, lo, hi).unwrap() - model.dispersion_penalty(d_i))
                        .abs()
                        .max(0.0),
                );
                let gap_i = model.penalty_gap(d_i);
                let mut d = di_lo;
                while d <= hi {
                    rep.dispersion_checked += 1;
                    // tangent >= D  <=>  gap_i - g_D (d - d_i) <= gap(d)
                    let tangent_gap = gap_i - pt.disp_slope * (d - d_i);
                    let truth_gap = model.penalty_gap(d);
                    if tangent_gap > truth_gap + 1e-9 * truth_gap.abs().max(1e-9) {
                        rep.dispersion_violations += 1;
                    }
                    d += grid_step * 16.0;
                }
            }
        }
    }
    if !models.is_empty() {
        rep.shannon_mean_coverage = sh_cov / models.len() as f64;
        rep.dispersion_mean_coverage = di_cov / models.len() as f64;
    }
    rep
}
