//! Nesterov-Todd scaling blocks and Jordan-algebra helpers for the
//! nonnegative orthant and second-order cones.
//!
//! For each proper cone block the scaling point W is the unique symmetric
//! positive map with `W^2 z = s`; the scaled variable `lambda = W z = W^-1 s`
//! drives the Mehrotra corrector. For the orthant W is diagonal; for a
//! second-order cone it is `eta * P(q)` where `P(u) x = 2u(u'x) - det(u) Jx`
//! is the quadratic representation and `q` is the Jordan square root of the
//! normalized scaling point.

#[derive(Debug, Clone)]
pub(crate) enum ScalingBlock {
    Nonneg { w: Vec<f64>, lambda: Vec<f64> },
    Soc { eta: f64, wbar: Vec<f64>, q: Vec<f64>, lambda: Vec<f64> },
}

fn jdot(a: &[f64], b: &[f64]) -> f64 {
    // a' J b with J = diag(1, -1, ..., -1)
    let mut v = a[0] * b[0];
    for i in 1..a.len() {
        v -= a[i] * b[i];
    }
    v
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// `out = 2u(u'x) - det * Jx`
fn quad_rep(u: &[f64], det: f64, x: &[f64], out: &mut [f64]) {
    let ux = dot(u, x);
    out[0] = 2.0 * u[0] * ux - det * x[0];
    for i in 1..x.len() {
        out[i] = 2.0 * u[i] * ux + det * x[i];
    }
}

impl ScalingBlock {
    /// Build the NT scaling for one cone block from interior points s, z.
    /// Returns None when either point has drifted out of the interior.
    pub fn compute(soc: bool, s: &[f64], z: &[f64]) -> Option<ScalingBlock> {
        if !soc {
            let mut w = Vec::with_capacity(s.len());
            let mut lambda = Vec::with_capacity(s.len());
            for i in 0..s.len() {
                if s[i] <= 0.0 || z[i] <= 0.0 {
                    return None;
                }
                w.push((s[i] / z[i]).sqrt());
                lambda.push((s[i] * z[i]).sqrt());
            }
            return Some(ScalingBlock::Nonneg { w, lambda });
        }
        let ds = jdot(s, s);
        let dz = jdot(z, z);
        if ds <= 0.0 || dz <= 0.0 || s[0] <= 0.0 || z[0] <= 0.0 {
            return None;
        }
        let (rds, rdz) = (ds.sqrt(), dz.sqrt());
        let gamma = ((1.0 + dot(s, z) / (rds * rdz)) / 2.0).sqrt();
        let k = s.len();
        let mut wbar = vec![0.0; k];
        wbar[0] = (s[0] / rds + z[0] / rdz) / (2.0 * gamma);
        for i in 1..k {
            wbar[i] = (s[i] / rds - z[i] / rdz) / (2.0 * gamma);
        }
        // Jordan square root of wbar (det(wbar) = 1 by construction).
        let w1 = wbar[1..].iter().map(|v| v * v).sum::<f64>().sqrt();
        let (lp, lm) = (wbar[0] + w1, wbar[0] - w1);
        if lm <= 0.0 {
            return None;
        }
        let (sp, sm) = (lp.sqrt(), lm.sqrt());
        let mut q = vec![0.0; k];
        q[0] = (sp + sm) / 2.0;
        if w1 > 1e-300 {
            let f = (sp - sm) / (2.0 * w1);
            for i in 1..k {
                q[i] = wbar[i] * f;
            }
        }
        let eta = (ds / dz).powf(0.25);
        let mut lambda = vec![0.0; k];
        // lambda = W z = eta * P(q) z   (det(q) = 1)
        quad_rep(&q, 1.0, z, &mut lambda);
        for v in &mut lambda {
            *v *= eta;
        }
        Some(ScalingBlock::Soc { eta, wbar, q, lambda })
    }

    pub fn lambda(&self) -> &[f64] {
        match self {
            ScalingBlock::Nonneg { lambda, .. } => lambda,
            ScalingBlock::Soc { lambda, .. } => lambda,
        }
    }

    /// out = W x
    pub fn apply_w(&self, x: &[f64], out: &mut [f64]) {
        match self {
            ScalingBlock::Nonneg { w, .. } => {
                for i in 0..x.len() {
                    out[i] = w[i] * x[i];
                }
            }
            ScalingBlock::Soc { eta, q, .. } => {
                quad_rep(q, 1.0, x, out);
                for v in out.iter_mut() {
                    *v *= *eta;
                }
            }
        }
    }

    /// out = W^-1 x
    pub fn apply_winv(&self, x: &[f64], out: &mut [f64]) {
        match self {
            ScalingBlock::Nonneg { w, .. } => {
                for i in 0..x.len() {
                    out[i] = x[i] / w[i];
                }
            }
            ScalingBlock::Soc { eta, q, .. } => {
                // W^-1 = eta^-1 P(q^-1), q^-1 = J q since det(q) = 1.
                let jq: Vec<f64> =
                    q.iter().enumerate().map(|(i, v)| if i == 0 { *v } else { -*v }).collect();
                quad_rep(&jq, 1.0, x, out);
                for v in out.iter_mut() {
                    *v /= *eta;
                }
            }
        }
    }

    /// out = W^2 x, composed as W(Wx) so its error behaves like the Gram
    /// accumulation used in the reduced KKT assembly.
    pub fn apply_h(&self, x: &[f64], out: &mut [f64]) {
        match self {
            ScalingBlock::Nonneg { w, .. } => {
                for i in 0..x.len() {
                    out[i] = w[i] * w[i] * x[i];
                }
            }
            ScalingBlock::Soc { .. } => {
                let mut tmp = vec![0.0; x.len()];
                self.apply_w(x, &mut tmp);
                self.apply_w(&tmp, out);
            }
        }
    }
}

/// Jordan product u o v for one cone block.
pub(crate) fn jordan_prod(soc: bool, u: &[f64], v: &[f64], out: &mut [f64]) {
    if !soc {
        for i in 0..u.len() {
            out[i] = u[i] * v[i];
        }
    } else {
        out[0] = dot(u, v);
        for i in 1..u.len() {
            out[i] = u[0] * v[i] + v[0] * u[i];
        }
    }
}

/// Solve `lambda o u = d` for u.
pub(crate) fn jordan_div(soc: bool, lambda: &[f64], d: &[f64], out: &mut [f64]) {
    if !soc {
        for i in 0..d.len() {
            out[i] = d[i] / lambda[i];
        }
    } else {
        let det = jdot(lambda, lambda);
        let l1d1 = dot(&lambda[1..], &d[1..]);
        let u0 = (lambda[0] * d[0] - l1d1) / det;
        out[0] = u0;
        for i in 1..d.len() {
            out[i] = (d[i] - u0 * lambda[i]) / lambda[0];
        }
    }
}

/// Cone identity element.
pub(crate) fn unit_e(soc: bool, out: &mut [f64]) {
    if !soc {
        for v in out.iter_mut() {
            *v = 1.0;
        }
    } else {
        out[0] = 1.0;
        for v in out[1..].iter_mut() {
            *v = 0.0;
        }
    }
}

/// Largest step a with `u + a du` still in the cone (may be infinite).
pub(crate) fn step_to_boundary(soc: bool, u: &[f64], du: &[f64]) -> f64 {
    if !soc {
        let mut alpha = f64::INFINITY;
        for i in 0..u.len() {
            if du[i] < 0.0 {
                alpha = alpha.min(-u[i] / du[i]);
            }
        }
        return alpha;
    }
    let c0 = jdot(u, u);
    let c1 = 2.0 * jdot(u, du);
    let c2 = jdot(du, du);
    let mut alpha = f64::INFINITY;
    if du[0] < 0.0 {
        alpha = alpha.min(-u[0] / du[0]);
    }
    let root = if c2.abs() < 1e-300 {
        if c1 < 0.0 {
            Some(-c0 / c1)
        } else {
            None
        }
    } else {
        let disc = c1 * c1 - 4.0 * c2 * c0;
        if disc < 0.0 {
            None
        } else {
            let sq = disc.sqrt();
            let (r1, r2) = ((-c1 - sq) / (2.0 * c2), (-c1 + sq) / (2.0 * c2));
            let (lo, hi) = if r1 <= r2 { (r1, r2) } else { (r2, r1) };
            if lo > 0.0 {
                Some(lo)
            } else if hi > 0.0 {
                Some(hi)
            } else {
                None
            }
        }
    };
    if let Some(r) = root {
        alpha = alpha.min(r);
    }
    alpha.max(0.0)
}
