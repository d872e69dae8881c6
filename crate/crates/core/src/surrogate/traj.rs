//! Trajectory-side SCA surrogates over the auxiliary UAV-user distance:
//! an affine lower bound of the Shannon term and an affine upper bound of
//! the dispersion penalty, with numerical curvature audits of the premises
//! they rest on (convexity of the Shannon term, concavity of the
//! dispersion) over the feasible distance interval.

use crate::fbl;
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum TrajSurrogateError {
    #[error("distance {0} outside [{1}, {2}]")]
    OutOfInterval(f64, f64, f64),
    #[error("dispersion slope is singular at zero SINR")]
    ZeroSinr,
}

/// Distance-domain SINR model `gamma(d) = A / (B + kappa d^rho)` with the
/// rate pieces derived from it.
#[derive(Debug, Clone, Copy)]
pub struct DistanceRate {
    /// Normalized own-beam gain `|hhat^H w_n|^2`.
    pub a_gain: f64,
    /// Normalized interference gain `sum |hhat^H w_k|^2`.
    pub b_gain: f64,
    /// `sigma^2 / B0`.
    pub kappa: f64,
    pub rho: f64,
    /// FBL penalty coefficient.
    pub c_pen: f64,
}

impl DistanceRate {
    pub fn gamma(&self, d: f64) -> f64 {
        self.a_gain / (self.b_gain + self.kappa * d.powf(self.rho))
    }

    pub fn shannon(&self, d: f64) -> f64 {
        (1.0 + self.gamma(d)).ln()
    }

    pub fn dispersion_penalty(&self, d: f64) -> f64 {
        self.c_pen * fbl::dispersion(self.gamma(d)).sqrt()
    }

    /// `c - D(d)`, evaluated without the `1 - (1+gamma)^-2` cancellation:
    /// `c (1 - sqrt(V)) = c u / (1 + sqrt(V))` with `u = (1+gamma)^-2`.
    /// At high SINR D saturates at `c` and loses all relative precision,
    /// while the gap keeps it; curvature audits difference this instead.
    pub fn penalty_gap(&self, d: f64) -> f64 {
        let g = self.gamma(d);
        let u = 1.0 / ((1.0 + g) * (1.0 + g));
        self.c_pen * u / (1.0 + (1.0 - u).max(0.0).sqrt())
    }

    pub fn rate(&self, d: f64) -> f64 {
        self.shannon(d) - self.dispersion_penalty(d)
    }
}

/// Linearization of both rate pieces at a reference distance.
#[derive(Debug, Clone, Copy)]
pub struct TrajLinPoint {
    pub model: DistanceRate,
    pub d_i: f64,
    pub gamma_i: f64,
    /// Shannon value and slope at the point (slope <= 0).
    pub shannon_i: f64,
    pub shannon_slope: f64,
    /// Dispersion value and slope at the point.
    pub disp_i: f64,
    pub disp_slope: f64,
}

impl TrajLinPoint {
    pub fn new(model: DistanceRate, d_i: f64) -> Result<Self, TrajSurrogateError> {
        let gamma_i = model.gamma(d_i);
        if gamma_i <= 0.0 {
            return Err(TrajSurrogateError::ZeroSinr);
        }
        let denom = model.b_gain + model.kappa * d_i.powf(model.rho);
        let dgamma_dd =
            -model.a_gain * model.kappa * model.rho * d_i.powf(model.rho - 1.0) / (denom * denom);
        // d/dd ln(1 + gamma(d)) = gamma'(d) / (1 + gamma)
        let shannon_slope = dgamma_dd / (1.0 + gamma_i);
        let v = fbl::dispersion(gamma_i);
        // dD/dgamma = c (1+gamma)^-3 / sqrt(V)
        let ddisp_dgamma = model.c_pen * (1.0 + gamma_i).powi(-3) / v.sqrt();
        Ok(TrajLinPoint {
            model,
            d_i,
            gamma_i,
            shannon_i: (1.0 + gamma_i).ln(),
            shannon_slope,
            disp_i: model.c_pen * v.sqrt(),
            disp_slope: ddisp_dgamma * dgamma_dd,
        })
    }

    /// Affine Shannon lower bound at a candidate distance.
    pub fn shannon_lb(
        &self,
        d: f64,
        d_min: f64,
        d_max: f64,
    ) -> Result<f64, TrajSurrogateError> {
        if !(d_min..=d_max).contains(&d) {
            return Err(TrajSurrogateError::OutOfInterval(d, d_min, d_max));
        }
        Ok(self.shannon_i + self.shannon_slope * (d - self.d_i))
    }

    /// Affine dispersion upper bound at a candidate distance.
    pub fn dispersion_ub(
        &self,
        d: f64,
        d_min: f64,
        d_max: f64,
    ) -> Result<f64, TrajSurrogateError> {
        if !(d_min..=d_max).contains(&d) {
            return Err(TrajSurrogateError::OutOfInterval(d, d_min, d_max));
        }
        Ok(self.disp_i + self.disp_slope * (d - self.d_i))
    }

    /// Affine surrogate of the rate.
    pub fn rate_lb(&self, d: f64, d_min: f64, d_max: f64) -> Result<f64, TrajSurrogateError> {
        Ok(self.shannon_lb(d, d_min, d_max)? - self.dispersion_ub(d, d_min, d_max)?)
    }
}

/// Maximum central second difference of the dispersion penalty over a grid;
/// a negative value certifies concavity numerically. Differenced through the
/// stable gap `c - D` so the high-SINR near field does not reduce to
/// rounding noise.
pub fn dispersion_second_derivative_audit(
    model: &DistanceRate,
    interval: [f64; 2],
    grid_step: f64,
) -> f64 {
    -second_difference_min(|d| model.penalty_gap(d), interval, grid_step)
}

/// Maximum central second difference of any scalar function over a grid.
pub fn second_difference_max(f: impl Fn(f64) -> f64, interval: [f64; 2], h: f64) -> f64 {
    let [lo, hi] = interval;
    let mut worst = f64::NEG_INFINITY;
    let mut d = lo + h;
    while d <= hi - h {
        let dd = (f(d + h) - 2.0 * f(d) + f(d - h)) / (h * h);
        if dd > worst {
            worst = dd;
        }
        d += h;
    }
    worst
}

/// Minimum central second difference (used to certify convexity of the
/// Shannon term; a nonnegative value confirms the premise).
pub fn second_difference_min(f: impl Fn(f64) -> f64, interval: [f64; 2], h: f64) -> f64 {
    -second_difference_max(|d| -f(d), interval, h)
}

/// Central second differences at fixed evaluation points with a chosen
/// stencil width, for discretization-stability comparisons.
pub fn second_difference_max_at(
    f: impl Fn(f64) -> f64,
    points: impl Iterator<Item = f64>,
    h: f64,
) -> f64 {
    points
        .map(|d| (f(d + h) - 2.0 * f(d) + f(d - h)) / (h * h))
        .fold(f64::NEG_INFINITY, f64::max)
}
