//! Beamforming-side SCA surrogates: the concave lower bound of the Shannon
//! term and the affine upper bound of the dispersion penalty, both built
//! from a linearization point, plus the trust-region predicates that the
//! convex subproblem imposes as linear constraints.
//!
//! The dispersion surrogate linearizes the square root and replaces its
//! fractional argument by an affine combination built from two
//! factor-wise bounds. That combination is not a certified global bound
//! (it is not even tight at its own linearization point), so its
//! violations are measured by the audits and the optimizer relies on the
//! true-objective acceptance guard rather than on this bound's direction.

use num_complex::Complex64;

use crate::channel::inner;
use crate::fbl;

/// Linearization data of one (user, slot) pair: the inner products of the
/// user's channel with every beam at the reference iterate, and the derived
/// surrogate coefficients.
#[derive(Debug, Clone)]
pub struct BeamLinPoint {
    /// `h_n^H w_k` at the reference beams, k = 0..N.
    pub chi: Vec<Complex64>,
    /// Own-signal power at the point.
    pub s_i: f64,
    /// Interference-plus-noise power at the point (includes sigma^2).
    pub i_i: f64,
    pub sigma2: f64,
    pub gamma_i: f64,
    /// `S / (I (S + I))`, the coefficient of the total-power quadratic.
    pub eta_i: f64,
    /// Dispersion at the point.
    pub v_i: f64,
    /// Square-root stage coefficients: `A = 1/(2 sqrt(V))`, `B = A + sqrt(V)/2`.
    pub a_sqrt: f64,
    pub b_sqrt: f64,
    /// Fraction-stage coefficients of `I^2/(S+I)^2 <= alpha I + beta (S+I) + psi`.
    pub alpha: f64,
    pub beta: f64,
    pub psi: f64,
    /// FBL penalty coefficient `Q^-1(eps)/sqrt(L)`.
    pub c_pen: f64,
    /// Set when the point had too little dispersion to linearize the square
    /// root; the surrogate then falls back to the global constant bound `c`.
    pub degenerate_dispersion: bool,
}

/// Below this dispersion the square-root linearization is numerically
/// meaningless and the constant bound `D <= c` is used instead.
pub const DISPERSION_FLOOR: f64 = 1e-12;

impl BeamLinPoint {
    pub fn new(
        h: &[Complex64],
        ref_beams: &[Vec<Complex64>],
        own: usize,
        sigma2: f64,
        c_pen: f64,
    ) -> Self {
        let chi: Vec<Complex64> = ref_beams.iter().map(|w| inner(h, w)).collect();
        let s_i = chi[own].norm_sqr();
        let i_i = chi
            .iter()
            .enumerate()
            .filter(|(k, _)| *k != own)
            .map(|(_, x)| x.norm_sqr())
            .sum::<f64>()
            + sigma2;
        let gamma_i = s_i / i_i;
        let eta_i = s_i / (i_i * (s_i + i_i));
        let v_i = fbl::dispersion(gamma_i);
        let degenerate = v_i < DISPERSION_FLOOR;
        let (a_sqrt, b_sqrt) = if degenerate {
            (0.0, 1.0)
        } else {
            let a = 1.0 / (2.0 * v_i.sqrt());
            (a, a + v_i.sqrt() / 2.0)
        };
        let total = s_i + i_i;
        let alpha = 4.0 * i_i / (total * total);
        let beta = 2.0 * i_i * i_i / (total * total * total);
        let psi = i_i * i_i / (total * total);
        BeamLinPoint {
            chi,
            s_i,
            i_i,
            sigma2,
            gamma_i,
            eta_i,
            v_i,
            a_sqrt,
            b_sqrt,
            alpha,
            beta,
            psi,
            c_pen,
            degenerate_dispersion: degenerate,
        }
    }

    /// Affine lower bound of the own-signal power at a candidate:
    /// `2 Re{chi^* x} - |chi|^2` with `x = h^H w`.
    pub fn s_bar(&self, h: &[Complex64], own: usize, w_own: &[Complex64]) -> f64 {
        let x = inner(h, w_own);
        2.0 * (self.chi[own].conj() * x).re - self.s_i
    }

    /// Affine lower bound of interference-plus-noise at a candidate.
    pub fn i_bar(&self, h: &[Complex64], own: usize, beams: &[Vec<Complex64>]) -> f64 {
        let mut acc = self.sigma2;
        for (k, w) in beams.iter().enumerate() {
            if k == own {
                continue;
            }
            let x = inner(h, w);
            acc += 2.0 * (self.chi[k].conj() * x).re - self.chi[k].norm_sqr();
        }
        acc
    }

    fn total_power(&self, h: &[Complex64], beams: &[Vec<Complex64>]) -> f64 {
        beams.iter().map(|w| inner(h, w).norm_sqr()).sum::<f64>() + self.sigma2
    }

    /// Concave Shannon lower bound evaluated at a candidate beam set.
    pub fn shannon_lb(&self, h: &[Complex64], own: usize, beams: &[Vec<Complex64>]) -> f64 {
        let x = inner(h, &beams[own]);
        let affine = 2.0 * (self.chi[own].conj() * x).re / self.i_i - self.gamma_i;
        let quad = self.total_power(h, beams);
        (1.0 + self.gamma_i).ln() + affine - self.eta_i * quad
    }

    /// Affine dispersion bound evaluated at a candidate beam set; see the
    /// module docs for why this direction is monitored, not trusted.
    pub fn dispersion_ub(&self, h: &[Complex64], own: usize, beams: &[Vec<Complex64>]) -> f64 {
        if self.degenerate_dispersion {
            return self.c_pen;
        }
        let sb = self.s_bar(h, own, &beams[own]);
        let ib = self.i_bar(h, own, beams);
        let xi = self.alpha * ib + self.beta * (sb + ib) + self.psi;
        self.c_pen * (self.b_sqrt - self.a_sqrt * xi)
    }

    /// Surrogate rate `C_bar - D_bar`.
    pub fn rate_surrogate(&self, h: &[Complex64], own: usize, beams: &[Vec<Complex64>]) -> f64 {
        self.shannon_lb(h, own, beams) - self.dispersion_ub(h, own, beams)
    }

    /// Signal-positivity trust region (linear in the beams).
    pub fn trust_signal(&self, h: &[Complex64], own: usize, w_own: &[Complex64]) -> bool {
        self.s_bar(h, own, w_own) > 0.0
    }

    /// Total-power trust region `S_bar + I_bar <= 2 (S_i + I_i)`.
    pub fn trust_total(&self, h: &[Complex64], own: usize, beams: &[Vec<Complex64>]) -> bool {
        self.s_bar(h, own, &beams[own]) + self.i_bar(h, own, beams)
            <= 2.0 * (self.s_i + self.i_i) + 1e-12
    }

    /// Interference-ratio trust region
    /// `(S_bar + I_bar)/(S_i + I_i) <= 2 I_bar / I_i`.
    pub fn trust_ratio(&self, h: &[Complex64], own: usize, beams: &[Vec<Complex64>]) -> bool {
        let sb = self.s_bar(h, own, &beams[own]);
        let ib = self.i_bar(h, own, beams);
        (sb + ib) / (self.s_i + self.i_i) <= 2.0 * ib / self.i_i + 1e-12
    }
}

/// True instantaneous rate pieces at a candidate (used by audits).
pub fn true_rate_parts(
    h: &[Complex64],
    own: usize,
    beams: &[Vec<Complex64>],
    sigma2: f64,
    c_pen: f64,
) -> (f64, f64) {
    let signal = inner(h, &beams[own]).norm_sqr();
    let interf: f64 = beams
        .iter()
        .enumerate()
        .filter(|(k, _)| *k != own)
        .map(|(_, w)| inner(h, w).norm_sqr())
        .sum();
    let gamma = signal / (interf + sigma2);
    ((1.0 + gamma).ln(), c_pen * fbl::dispersion(gamma).sqrt())
}
