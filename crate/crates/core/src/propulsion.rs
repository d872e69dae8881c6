//! Rotary-wing propulsion power, communication power, mission energy, and
//! the convex upper-bounding surrogate used by the trajectory subproblem.
//!
//! The power model is induced + climb + parasite:
//!
//!   P(v) = W^2/(sqrt(2) rho S) * Psi(v_h)^(-1/2) + W max(v_z, 0)
//!          + zeta rho S / 8 * ||v_h||^3,
//!   Psi(v_h) = ||v_h||^2 + sqrt(||v_h||^4 + 4 V_h^4).
//!
//! Psi is convex, so its first-order lower bound composed with the
//! decreasing convex x^(-1/2) yields a global convex upper bound on the
//! induced term; climb and parasite terms are already convex and are kept
//! exactly.

use crate::geom::Vec3;
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum PropulsionError {
    #[error("propulsion parameter {0} must be positive, got {1}")]
    NonPositive(&'static str, f64),
    #[error("surrogate linearization evaluated below its domain floor at v_h = ({0}, {1}): {2} < {3}")]
    DomainFloor(f64, f64, f64, f64),
}

/// Rotor and airframe constants with the derived hover parameter.
#[derive(Debug, Clone, Copy)]
pub struct PropulsionParams {
    /// UAV weight in Newtons.
    pub weight_n: f64,
    /// Air density, kg/m^3.
    pub air_density: f64,
    /// Rotor disk area, m^2.
    pub rotor_area: f64,
    /// Profile drag coefficient.
    pub drag_coeff: f64,
    /// Hover parameter `sqrt(W / (2 rho S))`, m/s.
    pub v_hover: f64,
}

impl PropulsionParams {
    pub fn new(
        weight_n: f64,
        air_density: f64,
        rotor_area: f64,
        drag_coeff: f64,
    ) -> Result<Self, PropulsionError> {
        for (name, v) in [
            ("weight_n", weight_n),
            ("air_density", air_density),
            ("rotor_area", rotor_area),
            ("drag_coeff", drag_coeff),
        ] {
            if !(v > 0.0) {
                return Err(PropulsionError::NonPositive(name, v));
            }
        }
        let v_hover = (weight_n / (2.0 * air_density * rotor_area)).sqrt();
        Ok(PropulsionParams { weight_n, air_density, rotor_area, drag_coeff, v_hover })
    }

    /// Coefficient of the induced term, `W^2 / (sqrt(2) rho S)`.
    pub fn induced_coeff(&self) -> f64 {
        self.weight_n * self.weight_n
            / (std::f64::consts::SQRT_2 * self.air_density * self.rotor_area)
    }

    /// Coefficient of the parasite term, `zeta rho S / 8`.
    pub fn parasite_coeff(&self) -> f64 {
        self.drag_coeff * self.air_density * self.rotor_area / 8.0
    }

    /// Power needed to hover, `W^(3/2) / sqrt(2 rho S)`.
    pub fn hover_power(&self) -> f64 {
        self.weight_n.powf(1.5) / (2.0 * self.air_density * self.rotor_area).sqrt()
    }

    /// `Psi(v_h) = s + sqrt(s^2 + 4 V_h^4)` with `s = ||v_h||^2`.
    pub fn psi(&self, vh_sq: f64) -> f64 {
        let vh4 = self.v_hover.powi(4);
        vh_sq + (vh_sq * vh_sq + 4.0 * vh4).sqrt()
    }
}

/// Instantaneous propulsion power, exactly per the model above. Descent
/// contributes no climb power: the climb term is `W * max(v_z, 0)`.
pub fn propulsion_power(v: Vec3, p: &PropulsionParams) -> f64 {
    let vh_sq = v[0] * v[0] + v[1] * v[1];
    let induced = p.induced_coeff() / p.psi(vh_sq).sqrt();
    let climb = p.weight_n * v[2].max(0.0);
    let parasite = p.parasite_coeff() * vh_sq.powf(1.5);
    induced + climb + parasite
}

/// Communication power `(1/eta) * sum ||w_n||^2` from per-beam squared norms.
pub fn comm_power<I: IntoIterator<Item = f64>>(beam_sq_norms: I, eta: f64) -> f64 {
    beam_sq_norms.into_iter().sum::<f64>() / eta
}

/// Total power at one step.
pub fn total_power(v: Vec3, beam_sq_norms: &[f64], p: &PropulsionParams, eta: f64) -> f64 {
    propulsion_power(v, p) + comm_power(beam_sq_norms.iter().copied(), eta)
}

/// Mission energy as the per-step total power times the step length.
pub fn mission_energy<I: IntoIterator<Item = f64>>(step_total_powers: I, t_c: f64) -> f64 {
    step_total_powers.into_iter().map(|p| p * t_c).sum()
}

/// First-order data of Psi at a horizontal linearization velocity.
#[derive(Debug, Clone, Copy)]
pub struct PropulsionSurrogate {
    pub a: f64,
    pub grad: [f64; 2],
    pub v_ref: [f64; 2],
    pub params: PropulsionParams,
}

/// Relative floor applied to the linearized Psi before taking the inverse
/// square root; also imposed as a linear constraint wherever the surrogate
/// enters an optimization problem.
pub const DOMAIN_FLOOR_REL: f64 = 1e-6;

pub fn propulsion_surrogate(v_ref: [f64; 2], p: &PropulsionParams) -> PropulsionSurrogate {
    let s = v_ref[0] * v_ref[0] + v_ref[1] * v_ref[1];
    let vh4 = p.v_hover.powi(4);
    let root = (s * s + 4.0 * vh4).sqrt();
    let a = s + root;
    let gscale = 2.0 * (1.0 + s / root);
    PropulsionSurrogate { a, grad: [gscale * v_ref[0], gscale * v_ref[1]], v_ref, params: *p }
}

impl PropulsionSurrogate {
    /// The linearized Psi value at a candidate horizontal velocity.
    pub fn lin_psi(&self, vh: [f64; 2]) -> f64 {
        self.a + self.grad[0] * (vh[0] - self.v_ref[0]) + self.grad[1] * (vh[1] - self.v_ref[1])
    }

    pub fn domain_floor(&self) -> f64 {
        DOMAIN_FLOOR_REL * self.a
    }

    /// Upper bound on the propulsion power at `v`; exact in the climb and
    /// parasite terms, and an over-estimate of the induced term away from
    /// the linearization point.
    pub fn eval_ub(&self, v: Vec3) -> Result<f64, PropulsionError> {
        let lin = self.lin_psi([v[0], v[1]]);
        let floor = self.domain_floor();
        if lin < floor {
            return Err(PropulsionError::DomainFloor(v[0], v[1], lin, floor));
        }
        let p = &self.params;
        let vh_sq = v[0] * v[0] + v[1] * v[1];
        Ok(p.induced_coeff() / lin.sqrt()
            + p.weight_n * v[2].max(0.0)
            + p.parasite_coeff() * vh_sq.powf(1.5))
    }
}
