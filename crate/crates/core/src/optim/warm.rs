//! Warm-start beams: per-slot max-min Shannon-SINR balancing under the
//! communication power budget, solved by bisection on the common SINR
//! target with a power-minimization second-order cone program as the
//! feasibility probe (each user's inner product is phase-rotated to the
//! real axis, which makes the SINR constraint a cone).

use conic::{ConicProblem, LinExpr, Settings, Status};
use num_complex::Complex64;

use crate::optim::SubproblemError;

/// Diagnostics of one slot's bisection.
#[derive(Debug, Clone)]
pub struct WarmStartInfo {
    pub target_lo: f64,
    pub target_hi: f64,
    pub probes: usize,
}

pub struct WarmStart {
    pub beams: Vec<Vec<Complex64>>,
    pub info: WarmStartInfo,
}

/// Linear forms of Re/Im of `h^H w` over the stacked real variables.
pub(crate) fn inner_product_forms(
    h: &[Complex64],
    re_vars: &[conic::VarId],
    im_vars: &[conic::VarId],
) -> (LinExpr, LinExpr) {
    let mut re = LinExpr::constant(0.0);
    let mut im = LinExpr::constant(0.0);
    for (m, hv) in h.iter().enumerate() {
        // conj(h_m) * (x_m + j y_m)
        re = re.add_term(re_vars[m], hv.re).add_term(im_vars[m], hv.im);
        im = im.add_term(im_vars[m], hv.re).add_term(re_vars[m], -hv.im);
    }
    (re, im)
}

struct Probe {
    feasible: bool,
    beams: Option<Vec<Vec<Complex64>>>,
}

/// Margin-maximizing feasibility probe at a common SINR target: maximize m
/// with `(1/sqrt(t)) Re(h_n^H w_n) - m >= ||[cross, sigma]||` under the
/// power budget. The probe problem is always feasible and bounded, and the
/// target is feasible exactly when the optimal margin is nonnegative.
fn probe_target(
    channels: &[Vec<Complex64>],
    sigma: f64,
    target: f64,
    budget_norm: f64,
    settings: &Settings,
) -> Result<Probe, SubproblemError> {
    let n_users = channels.len();
    let m = channels[0].len();
    let mut p = ConicProblem::new();
    let mut re_vars = Vec::with_capacity(n_users);
    let mut im_vars = Vec::with_capacity(n_users);
    for _ in 0..n_users {
        re_vars.push(p.add_vars(m));
        im_vars.push(p.add_vars(m));
    }
    let margin = p.add_var();
    p.minimize(LinExpr::term(margin, -1.0));
    // ||vec w|| <= budget
    let mut tail = Vec::with_capacity(2 * m * n_users);
    for n in 0..n_users {
        for v in re_vars[n].iter().chain(im_vars[n].iter()) {
            tail.push(LinExpr::var(*v));
        }
    }
    p.add_soc(LinExpr::constant(budget_norm), tail);
    for n in 0..n_users {
        let (re_own, im_own) = inner_product_forms(&channels[n], &re_vars[n], &im_vars[n]);
        // fix the phase: own inner product real and nonnegative
        p.add_linear_eq(im_own);
        let mut cone_tail = Vec::new();
        for k in 0..n_users {
            if k == n {
                continue;
            }
            let (re_k, im_k) = inner_product_forms(&channels[n], &re_vars[k], &im_vars[k]);
            cone_tail.push(re_k);
            cone_tail.push(im_k);
        }
        cone_tail.push(LinExpr::constant(sigma));
        p.add_soc(
            re_own.scaled(1.0 / target.sqrt()).add_term(margin, -1.0),
            cone_tail,
        );
    }
    let result = p.solve(settings).map_err(|e| SubproblemError::Solver(e.to_string()))?;
    match result.status {
        Status::Optimal => {
            let x = result.x.unwrap();
            let feasible = x[margin.index()] >= -1e-9;
            let beams = feasible.then(|| {
                (0..n_users)
                    .map(|n| {
                        (0..m)
                            .map(|mm| {
                                Complex64::new(
                                    x[re_vars[n][mm].index()],
                                    x[im_vars[n][mm].index()],
                                )
                            })
                            .collect()
                    })
                    .collect()
            });
            Ok(Probe { feasible, beams })
        }
        // a numerically failed probe is treated as an infeasible target so
        // the bisection backs off conservatively
        Status::Infeasible | Status::NumericalFailure | Status::IterationLimit => {
            Ok(Probe { feasible: false, beams: None })
        }
        s => Err(SubproblemError::Solver(format!("probe ended with {s:?}"))),
    }
}

/// Max-min SINR beams for one slot's channels.
pub fn warm_start_slot(
    channels: &[Vec<Complex64>],
    sigma2: f64,
    p_com_max: f64,
    eta: f64,
    settings: &Settings,
) -> Result<WarmStart, SubproblemError> {
    let n_users = channels.len();
    let m = channels[0].len();
    let budget = eta * p_com_max;
    let budget_norm = budget.sqrt();
    // probes run in noise units: SINR targets are invariant to scaling the
    // channels by 1/sigma while the noise becomes 1
    let raw_sigma = sigma2.sqrt();
    let channels: Vec<Vec<Complex64>> =
        channels.iter().map(|h| h.iter().map(|v| v / raw_sigma).collect()).collect();
    let channels = &channels;
    let sigma = 1.0;
    // upper bound: best single-user SNR at full budget
    let hi0 = channels
        .iter()
        .map(|h| h.iter().map(|v| v.norm_sqr()).sum::<f64>() * budget)
        .fold(0.0f64, f64::max);
    let mut lo = 0.0f64;
    let mut hi = hi0.max(1e-6);
    let mut best: Option<Vec<Vec<Complex64>>> = None;
    let mut probes = 0;
    // establish a feasible floor quickly
    let mut t = hi0 * 1e-3;
    while t > 1e-12 {
        probes += 1;
        let pr = probe_target(channels, sigma, t, budget_norm, settings)?;
        if pr.feasible {
            lo = t;
            best = pr.beams;
            break;
        }
        hi = t;
        t *= 1e-3;
    }
    while hi - lo > 1e-4 * lo.max(1.0) {
        let mid = if lo > 0.0 { (lo * hi).sqrt() } else { 0.5 * (lo + hi) };
        probes += 1;
        let pr = probe_target(channels, sigma, mid, budget_norm, settings)?;
        if pr.feasible {
            lo = mid;
            best = pr.beams;
        } else {
            hi = mid;
        }
        if probes > 96 {
            break;
        }
    }
    let beams = best.unwrap_or_else(|| {
        vec![vec![Complex64::new(0.0, 0.0); m]; n_users]
    });
    Ok(WarmStart { beams, info: WarmStartInfo { target_lo: lo, target_hi: hi, probes } })
}
