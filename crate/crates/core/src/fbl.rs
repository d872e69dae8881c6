//! Finite-blocklength rate model: Gaussian Q-function and its inverse,
//! channel dispersion, and the normal-approximation achievable rate in
//! nats per channel use.

use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum FblError {
    #[error("error probability {0} outside (0, 1)")]
    BadErrorProb(f64),
    #[error("blocklength must be >= 1, got {0}")]
    BadBlocklength(usize),
}

const FRAC_2_SQRT_PI: f64 = 1.1283791670955126; // 2/sqrt(pi)

/// erf by Taylor series, accurate for |x| < 1.5.
fn erf_series(x: f64) -> f64 {
    let x2 = x * x;
    let mut term = x;
    let mut sum = x;
    for n in 1..200 {
        term *= -x2 / n as f64;
        let add = term / (2 * n + 1) as f64;
        sum += add;
        if add.abs() < 1e-18 * sum.abs() {
            break;
        }
    }
    FRAC_2_SQRT_PI * sum
}

/// erfc by the Laplace continued fraction, accurate for x >= 1.5.
fn erfc_cf(x: f64) -> f64 {
    // erfc(x) = exp(-x^2)/sqrt(pi) * 1/(x + (1/2)/(x + 1/(x + (3/2)/(x + ...))))
    // evaluated by the modified Lentz algorithm.
    let tiny = 1e-300;
    let mut f = x;
    let mut c = x;
    let mut d = 0.0;
    for k in 1..200 {
        let a = k as f64 / 2.0;
        d = x + a * d;
        if d.abs() < tiny {
            d = tiny;
        }
        c = x + a / c;
        if c.abs() < tiny {
            c = tiny;
        }
        d = 1.0 / d;
        let delta = c * d;
        f *= delta;
        if (delta - 1.0).abs() < 1e-17 {
            break;
        }
    }
    (-x * x).exp() / (std::f64::consts::PI.sqrt() * f)
}

/// Complementary error function to near machine precision.
pub fn erfc(x: f64) -> f64 {
    if x < 0.0 {
        2.0 - erfc(-x)
    } else if x < 1.5 {
        1.0 - erf_series(x)
    } else if x > 27.0 {
        0.0
    } else {
        erfc_cf(x)
    }
}

/// Gaussian tail probability Q(x) = P(N(0,1) > x).
pub fn q_function(x: f64) -> f64 {
    0.5 * erfc(x / std::f64::consts::SQRT_2)
}

/// Inverse of the Gaussian Q-function by monotone bisection with a Newton
/// polish, absolute accuracy better than 1e-12.
pub fn inv_q(eps: f64) -> Result<f64, FblError> {
    if !(eps > 0.0 && eps < 1.0) {
        return Err(FblError::BadErrorProb(eps));
    }
    let (mut lo, mut hi) = (-40.0f64, 40.0f64);
    // Q is strictly decreasing: Q(lo) ~ 1, Q(hi) ~ 0.
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if q_function(mid) > eps {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo < 1e-14 {
            break;
        }
    }
    let mut x = 0.5 * (lo + hi);
    let phi = |t: f64| (-0.5 * t * t).exp() / (2.0 * std::f64::consts::PI).sqrt();
    for _ in 0..3 {
        let d = phi(x);
        if d > 0.0 {
            x += (q_function(x) - eps) / d;
        }
    }
    Ok(x)
}

/// Finite-blocklength parameters; `penalty_coeff` is Q^-1(eps)/sqrt(L).
#[derive(Debug, Clone, Copy)]
pub struct FblParams {
    pub blocklength: usize,
    pub error_prob: f64,
    pub penalty_coeff: f64,
}

impl FblParams {
    pub fn new(blocklength: usize, error_prob: f64) -> Result<Self, FblError> {
        if blocklength == 0 {
            return Err(FblError::BadBlocklength(blocklength));
        }
        let penalty_coeff = inv_q(error_prob)? / (blocklength as f64).sqrt();
        Ok(FblParams { blocklength, error_prob, penalty_coeff })
    }
}

/// Channel dispersion `1 - (1+gamma)^-2`, increasing from 0 towards 1.
pub fn dispersion(gamma: f64) -> f64 {
    let g = 1.0 + gamma;
    1.0 - 1.0 / (g * g)
}

/// Achievable rate `ln(1+gamma) - c*sqrt(V(gamma))` in nats per channel use.
/// May be negative at small SINR; callers clamp where they need to.
pub fn fbl_rate(gamma: f64, params: &FblParams) -> f64 {
    (1.0 + gamma).ln() - params.penalty_coeff * dispersion(gamma).sqrt()
}
