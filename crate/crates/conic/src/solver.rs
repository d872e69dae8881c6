//! Homogeneous self-dual interior-point core.
//!
//! Solves `min c'x  s.t.  Ax + s = b, s in K` through the embedding
//!
//!   A'z + c*tau = 0,   Ax + s - b*tau = 0,   kappa + c'x + b'z = 0,
//!   s o z = mu e,      tau*kappa = mu,
//!
//! driven to mu -> 0 by a Mehrotra predictor-corrector with Nesterov-Todd
//! scaling. `tau -> 0` with `kappa > 0` exposes Farkas certificates, which
//! is how infeasible and unbounded problems are reported.

use crate::kkt::{KktSystem, Span};
use crate::lower::{ConeKind, SolveForm};
use crate::scaling::{self, ScalingBlock};

#[derive(Debug, Clone)]
pub struct Settings {
    /// Feasibility / duality-gap tolerance.
    pub tol: f64,
    pub max_iter: usize,
    pub verbose: bool,
}

impl Default for Settings {
    fn default() -> Self {
        Settings { tol: 1e-8, max_iter: 200, verbose: false }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Status {
    Optimal,
    Infeasible,
    Unbounded,
    IterationLimit,
    NumericalFailure,
}

#[derive(Debug, Clone, Copy, Default)]
pub struct Residuals {
    pub primal: f64,
    pub dual: f64,
    pub gap: f64,
}

#[derive(Debug, Clone)]
pub struct SolveResult {
    pub status: Status,
    /// Primal point, present exactly when the status is Optimal.
    pub x: Option<Vec<f64>>,
    pub objective: Option<f64>,
    pub iterations: usize,
    pub residuals: Residuals,
}

struct Flat {
    n: usize,
    m: usize,
    rows: Vec<Vec<(usize, f64)>>,
    b: Vec<f64>,
    spans: Vec<Span>,
    c: Vec<f64>,
    // equilibration state
    col_scale: Vec<f64>,
    cost_scale: f64,
}

fn flatten(form: &SolveForm) -> Flat {
    let mut rows = Vec::new();
    let mut b = Vec::new();
    let mut spans = Vec::new();
    for blk in &form.blocks {
        let start = rows.len();
        for (coeffs, rhs) in &blk.rows {
            rows.push(coeffs.clone());
            b.push(*rhs);
        }
        spans.push(Span { kind: blk.kind, start, len: blk.rows.len() });
    }
    Flat {
        n: form.n,
        m: rows.len(),
        rows,
        b,
        spans,
        c: form.c.clone(),
        col_scale: vec![1.0; form.n],
        cost_scale: 1.0,
    }
}

/// Ruiz equilibration. SOC blocks get one common row scale so the cone
/// geometry is preserved.
fn equilibrate(f: &mut Flat) {
    let mut dr = vec![1.0f64; f.m];
    let mut dc = vec![1.0f64; f.n];
    for _ in 0..6 {
        // row pass
        let mut rnorm = vec![0.0f64; f.m];
        for (i, row) in f.rows.iter().enumerate() {
            for &(j, v) in row {
                rnorm[i] = rnorm[i].max((v * dr[i] * dc[j]).abs());
            }
        }
        for sp in &f.spans {
            if sp.kind == ConeKind::Soc {
                let mx = (sp.start..sp.start + sp.len).map(|i| rnorm[i]).fold(0.0, f64::max);
                for i in sp.start..sp.start + sp.len {
                    rnorm[i] = mx;
                }
            }
        }
        for i in 0..f.m {
            if rnorm[i] > 1e-12 {
                dr[i] = (dr[i] / rnorm[i].sqrt()).clamp(1e-6, 1e6);
            }
        }
        // column pass
        let mut cnorm = vec![0.0f64; f.n];
        for (i, row) in f.rows.iter().enumerate() {
            for &(j, v) in row {
                cnorm[j] = cnorm[j].max((v * dr[i] * dc[j]).abs());
            }
        }
        for j in 0..f.n {
            if cnorm[j] > 1e-12 {
                dc[j] = (dc[j] / cnorm[j].sqrt()).clamp(1e-6, 1e6);
            }
        }
    }
    for (i, row) in f.rows.iter_mut().enumerate() {
        for t in row.iter_mut() {
            t.1 *= dr[i] * dc[t.0];
        }
        f.b[i] *= dr[i];
    }
    for j in 0..f.n {
        f.c[j] *= dc[j];
    }
    let cmax = f.c.iter().fold(0.0f64, |a, v| a.max(v.abs()));
    f.cost_scale = if cmax > 1.0 { 1.0 / cmax } else { 1.0 };
    for v in &mut f.c {
        *v *= f.cost_scale;
    }
    f.col_scale = dc;
}

fn a_mul(f: &Flat, x: &[f64], out: &mut [f64]) {
    for (i, row) in f.rows.iter().enumerate() {
        let mut acc = 0.0;
        for &(j, v) in row {
            acc += v * x[j];
        }
        out[i] = acc;
    }
}

fn at_mul(f: &Flat, z: &[f64], out: &mut [f64]) {
    out.iter_mut().for_each(|v| *v = 0.0);
    for (i, row) in f.rows.iter().enumerate() {
        let zi = z[i];
        if zi != 0.0 {
            for &(j, v) in row {
                out[j] += v * zi;
            }
        }
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn norm2(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

/// Per-proper-cone iteration workspace addressed by spans.
struct ConeWork {
    proper: Vec<Span>,
}

impl ConeWork {
    fn new(flat: &Flat) -> Self {
        let proper = flat.spans.iter().copied().filter(|sp| sp.kind != ConeKind::Zero).collect();
        ConeWork { proper }
    }

    fn degree(&self) -> f64 {
        self.proper
            .iter()
            .map(|sp| match sp.kind {
                ConeKind::Nonneg => sp.len as f64,
                ConeKind::Soc => 1.0,
                ConeKind::Zero => 0.0,
            })
            .sum()
    }

    fn shift_into_interior(&self, v: &mut [f64]) {
        for sp in &self.proper {
            let blk = &mut v[sp.start..sp.start + sp.len];
            match sp.kind {
                ConeKind::Nonneg => {
                    let mn = blk.iter().cloned().fold(f64::INFINITY, f64::min);
                    if mn <= 1e-10 {
                        let shift = 1.0 - mn.min(0.0);
                        for e in blk.iter_mut() {
                            *e += shift;
                        }
                    }
                }
                ConeKind::Soc => {
                    let tail = blk[1..].iter().map(|x| x * x).sum::<f64>().sqrt();
                    if blk[0] - tail <= 1e-10 {
                        blk[0] += 1.0 + (tail - blk[0]).max(0.0);
                    }
                }
                ConeKind::Zero => {}
            }
        }
    }
}

pub(crate) fn solve(form: &SolveForm, settings: &Settings) -> SolveResult {
    let mut flat = flatten(form);
    let verbose = settings.verbose;
    let failure = move |iterations| {
        if verbose {
            eprintln!("      numerical failure at iteration {iterations}");
        }
        SolveResult {
        status: Status::NumericalFailure,
        x: None,
        objective: None,
        iterations,
        residuals: Residuals::default(),
    }};
    if flat.n == 0 || flat.m == 0 {
        // Degenerate container: no variables or no constraints.
        let unconstrained_ok = flat.c.iter().all(|&v| v == 0.0);
        return SolveResult {
            status: if unconstrained_ok { Status::Optimal } else { Status::Unbounded },
            x: if unconstrained_ok { Some(vec![0.0; flat.n]) } else { None },
            objective: if unconstrained_ok { Some(0.0) } else { None },
            iterations: 0,
            residuals: Residuals::default(),
        };
    }
    equilibrate(&mut flat);
    let work = ConeWork::new(&flat);
    let nu = work.degree();
    let (n, m) = (flat.n, flat.m);
    let norm_b = norm2(&flat.b);
    let norm_c = norm2(&flat.c);

    let mut kkt = KktSystem::new(n, flat.rows.clone(), flat.spans.clone(), 1e-8);

    // KKT solve with iterative refinement against the Newton matrix
    // [[0, A'], [A, -H]]; the regularized factorization is the
    // preconditioner and exact residuals recover what it perturbs.
    let kkt_solve = |kkt: &mut KktSystem,
                     scalings: Option<&[ScalingBlock]>,
                     r1: &[f64],
                     r2: &[f64]|
     -> (Vec<f64>, Vec<f64>) {
        let (mut dx, mut dz) = kkt.solve(r1, r2);
        let scale = 1.0
            + r1.iter().fold(0.0f64, |a, v| a.max(v.abs()))
            + r2.iter().fold(0.0f64, |a, v| a.max(v.abs()));
        // residual of the full system at the current direction estimate
        let residual = |dx: &[f64], dz: &[f64]| -> (Vec<f64>, Vec<f64>, f64) {
            let mut res1 = vec![0.0; n];
            at_mul(&flat, dz, &mut res1);
            for j in 0..n {
                res1[j] = r1[j] - res1[j];
            }
            let mut res2 = vec![0.0; m];
            a_mul(&flat, dx, &mut res2);
            for i in 0..m {
                res2[i] = r2[i] - res2[i];
            }
            for (k, sp) in work.proper.iter().enumerate() {
                let mut hdz = vec![0.0; sp.len];
                match scalings {
                    None => hdz.copy_from_slice(&dz[sp.start..sp.start + sp.len]),
                    Some(s) => s[k].apply_h(&dz[sp.start..sp.start + sp.len], &mut hdz),
                }
                for (t, i) in (sp.start..sp.start + sp.len).enumerate() {
                    res2[i] += hdz[t];
                }
            }
            let worst =
                res1.iter().chain(res2.iter()).fold(0.0f64, |a, v| a.max(v.abs()));
            (res1, res2, worst)
        };
        let (mut res1, mut res2, mut worst) = residual(&dx, &dz);
        let mut best = (dx.clone(), dz.clone(), worst);
        for _ in 0..12 {
            if worst <= 1e-14 * scale {
                break;
            }
            let (ex, ez) = kkt.solve(&res1, &res2);
            for j in 0..n {
                dx[j] += ex[j];
            }
            for i in 0..m {
                dz[i] += ez[i];
            }
            let (r1n, r2n, wn) = residual(&dx, &dz);
            if wn < best.2 {
                best = (dx.clone(), dz.clone(), wn);
            }
            if wn >= 0.5 * worst {
                break; // refinement no longer contracting
            }
            res1 = r1n;
            res2 = r2n;
            worst = wn;
        }
        (best.0, best.1)
    };

    // ---- initialization ----------------------------------------------
    if kkt.factor(None).is_err() {
        return failure(0);
    }
    let zeros_n = vec![0.0; n];
    let zeros_m = vec![0.0; m];
    let (x0, _) = kkt_solve(&mut kkt, None, &zeros_n, &flat.b);
    let mut x = x0;
    let mut s = vec![0.0; m];
    {
        let mut ax = vec![0.0; m];
        a_mul(&flat, &x, &mut ax);
        for i in 0..m {
            s[i] = flat.b[i] - ax[i];
        }
        work.shift_into_interior(&mut s);
        for sp in &flat.spans {
            if sp.kind == ConeKind::Zero {
                for i in sp.start..sp.start + sp.len {
                    s[i] = 0.0;
                }
            }
        }
    }
    let neg_c: Vec<f64> = flat.c.iter().map(|v| -v).collect();
    let (_, z0) = kkt_solve(&mut kkt, None, &neg_c, &zeros_m);
    let mut z = z0;
    work.shift_into_interior(&mut z);
    let mut tau = 1.0f64;
    let mut kappa = 1.0f64;

    let mut rd = vec![0.0; n];
    let mut rp = vec![0.0; m];
    let mut residuals = Residuals::default();

    for iter in 0..settings.max_iter {
        // residuals
        at_mul(&flat, &z, &mut rd);
        for j in 0..n {
            rd[j] += flat.c[j] * tau;
        }
        let mut ax = vec![0.0; m];
        a_mul(&flat, &x, &mut ax);
        for i in 0..m {
            rp[i] = ax[i] + s[i] - flat.b[i] * tau;
        }
        let cx = dot(&flat.c, &x);
        let bz = dot(&flat.b, &z);
        let rg = kappa + cx + bz;
        let stz = dot(&s, &z);
        let mu = (stz + tau * kappa) / (nu + 1.0);

        let pres = norm2(&rp) / (tau * (1.0 + norm_b));
        let dres = norm2(&rd) / (tau * (1.0 + norm_c));
        let pcost = cx / tau;
        let gap = stz / (tau * tau);
        let relgap = gap / f64::max(1.0, pcost.abs());
        residuals = Residuals { primal: pres, dual: dres, gap };
        if settings.verbose {
            eprintln!(
                "it {iter:3}  mu {mu:9.2e}  pres {pres:9.2e}  dres {dres:9.2e}  gap {gap:9.2e}  tau {tau:9.2e}  kappa {kappa:9.2e}"
            );
        }

        if pres <= settings.tol && dres <= settings.tol && (gap <= settings.tol || relgap <= settings.tol)
        {
            let mut xr: Vec<f64> = x.iter().map(|v| v / tau).collect();
            let obj = dot(&flat.c, &xr) / flat.cost_scale;
            for j in 0..n {
                xr[j] *= flat.col_scale[j];
            }
            return SolveResult {
                status: Status::Optimal,
                x: Some(xr),
                objective: Some(obj),
                iterations: iter,
                residuals,
            };
        }
        // Farkas certificates
        if bz < -1e-12 {
            let mut atz = vec![0.0; n];
            at_mul(&flat, &z, &mut atz);
            if norm2(&atz) / (-bz) <= settings.tol * (1.0 + norm_c) {
                return SolveResult {
                    status: Status::Infeasible,
                    x: None,
                    objective: None,
                    iterations: iter,
                    residuals,
                };
            }
        }
        if cx < -1e-12 {
            let mut axs = vec![0.0; m];
            a_mul(&flat, &x, &mut axs);
            for i in 0..m {
                axs[i] += s[i];
            }
            if norm2(&axs) / (-cx) <= settings.tol * (1.0 + norm_b) {
                return SolveResult {
                    status: Status::Unbounded,
                    x: None,
                    objective: None,
                    iterations: iter,
                    residuals,
                };
            }
        }

        // NT scaling
        let mut scalings = Vec::with_capacity(work.proper.len());
        for sp in &work.proper {
            match ScalingBlock::compute(
                sp.kind == ConeKind::Soc,
                &s[sp.start..sp.start + sp.len],
                &z[sp.start..sp.start + sp.len],
            ) {
                Some(blk) => scalings.push(blk),
                None => {
                    if verbose { eprintln!("      cone left interior: kind {:?} start {}", sp.kind, sp.start); }
                    return failure(iter);
                }
            }
        }
        if kkt.factor(Some(&scalings)).is_err() {
            if verbose { eprintln!("      factorization breakdown"); }
            return failure(iter);
        }
        let neg_c2: Vec<f64> = flat.c.iter().map(|v| -v).collect();
        let (q1x, q1z) = kkt_solve(&mut kkt, Some(&scalings), &neg_c2, &flat.b);
        let denom = dot(&flat.c, &q1x) + dot(&flat.b, &q1z) - kappa / tau;
        if !denom.is_finite() || denom.abs() < 1e-300 {
            if verbose { eprintln!("      singular tau denominator {denom:e}"); }
            return failure(iter);
        }

        // one direction computation shared by predictor and corrector
        let direction = |kkt: &mut KktSystem,
                         scalings: &[ScalingBlock],
                         ds: &[f64],
                         dkappa_rhs: f64,
                         gamma: f64|
         -> (Vec<f64>, Vec<f64>, Vec<f64>, f64, f64) {
            let r1: Vec<f64> = rd.iter().map(|v| -gamma * v).collect();
            let mut r2: Vec<f64> = rp.iter().map(|v| -gamma * v).collect();
            // r2 -= W (lambda \ ds) on proper cones
            let mut wlds = vec![0.0; m];
            for (k, sp) in work.proper.iter().enumerate() {
                let lam = scalings[k].lambda();
                let mut u = vec![0.0; sp.len];
                scaling::jordan_div(sp.kind == ConeKind::Soc, lam, &ds[sp.start..sp.start + sp.len], &mut u);
                let dst = &mut wlds[sp.start..sp.start + sp.len];
                scalings[k].apply_w(&u, dst);
            }
            for i in 0..m {
                r2[i] -= wlds[i];
            }
            let (q2x, q2z) = kkt_solve(kkt, Some(scalings), &r1, &r2);
            let rg_rhs = -gamma * rg - dkappa_rhs / tau;
            let dtau = (rg_rhs - dot(&flat.c, &q2x) - dot(&flat.b, &q2z)) / denom;
            let dx: Vec<f64> = q2x.iter().zip(&q1x).map(|(a, b)| a + dtau * b).collect();
            let dz: Vec<f64> = q2z.iter().zip(&q1z).map(|(a, b)| a + dtau * b).collect();
            // dsig = W(lambda \ ds) - H dz  on proper cones, 0 on zero cones
            let mut dsv = vec![0.0; m];
            for (k, sp) in work.proper.iter().enumerate() {
                let mut hdz = vec![0.0; sp.len];
                scalings[k].apply_h(&dz[sp.start..sp.start + sp.len], &mut hdz);
                for (t, i) in (sp.start..sp.start + sp.len).enumerate() {
                    dsv[i] = wlds[i] - hdz[t];
                }
            }
            let dkappa = (dkappa_rhs - kappa * dtau) / tau;
            (dx, dz, dsv, dtau, dkappa)
        };

        let max_step = |s: &[f64], ds: &[f64], z: &[f64], dz: &[f64], dtau: f64, dkappa: f64| -> f64 {
            let mut alpha = f64::INFINITY;
            for sp in &work.proper {
                let soc = sp.kind == ConeKind::Soc;
                let a_s = scaling::step_to_boundary(
                    soc,
                    &s[sp.start..sp.start + sp.len],
                    &ds[sp.start..sp.start + sp.len],
                );
                let a_z = scaling::step_to_boundary(
                    soc,
                    &z[sp.start..sp.start + sp.len],
                    &dz[sp.start..sp.start + sp.len],
                );
                if verbose && a_s.min(a_z) < 1e-10 {
                    eprintln!(
                        "      blocking cone at row {} ({:?}): a_s {a_s:e} a_z {a_z:e} s {:?} z {:?}",
                        sp.start, sp.kind,
                        &s[sp.start..sp.start + sp.len],
                        &z[sp.start..sp.start + sp.len]
                    );
                }
                alpha = alpha.min(a_s).min(a_z);
            }
            if dtau < 0.0 {
                alpha = alpha.min(-tau / dtau);
            }
            if dkappa < 0.0 {
                alpha = alpha.min(-kappa / dkappa);
            }
            alpha
        };

        // predictor (affine scaling direction)
        let mut ds_aff = vec![0.0; m];
        for (k, sp) in work.proper.iter().enumerate() {
            let lam = scalings[k].lambda();
            let dst = &mut ds_aff[sp.start..sp.start + sp.len];
            scaling::jordan_prod(sp.kind == ConeKind::Soc, lam, lam, dst);
            for v in dst.iter_mut() {
                *v = -*v;
            }
        }
        let (_dx_a, dz_a, ds_a, dtau_a, dkappa_a) =
            direction(&mut kkt, &scalings, &ds_aff, -tau * kappa, 1.0);
        let alpha_aff = max_step(&s, &ds_a, &z, &dz_a, dtau_a, dkappa_a).min(1.0);
        let mut mu_aff = (tau + alpha_aff * dtau_a) * (kappa + alpha_aff * dkappa_a);
        {
            let mut sn = s.clone();
            let mut zn = z.clone();
            for i in 0..m {
                sn[i] += alpha_aff * ds_a[i];
                zn[i] += alpha_aff * dz_a[i];
            }
            mu_aff += dot(&sn, &zn);
            mu_aff /= nu + 1.0;
        }
        let sigma = (mu_aff / mu).powi(3).clamp(0.0, 1.0);

        // corrector
        let mut ds_comb = vec![0.0; m];
        for (k, sp) in work.proper.iter().enumerate() {
            let soc = sp.kind == ConeKind::Soc;
            let lam = scalings[k].lambda();
            let rng = sp.start..sp.start + sp.len;
            let mut ll = vec![0.0; sp.len];
            scaling::jordan_prod(soc, lam, lam, &mut ll);
            let mut winv_ds = vec![0.0; sp.len];
            scalings[k].apply_winv(&ds_a[rng.clone()], &mut winv_ds);
            let mut w_dz = vec![0.0; sp.len];
            scalings[k].apply_w(&dz_a[rng.clone()], &mut w_dz);
            let mut corr = vec![0.0; sp.len];
            scaling::jordan_prod(soc, &winv_ds, &w_dz, &mut corr);
            let mut e = vec![0.0; sp.len];
            scaling::unit_e(soc, &mut e);
            let dst = &mut ds_comb[rng];
            for t in 0..sp.len {
                dst[t] = -ll[t] - corr[t] + sigma * mu * e[t];
            }
        }
        let dkappa_rhs = -tau * kappa - dtau_a * dkappa_a + sigma * mu;
        let (dx, dz, dsv, dtau, dkappa) =
            direction(&mut kkt, &scalings, &ds_comb, dkappa_rhs, 1.0 - sigma);
        let alpha = (0.99 * max_step(&s, &dsv, &z, &dz, dtau, dkappa)).min(1.0);
        if !alpha.is_finite() || alpha <= 1e-14 {
            if verbose { eprintln!("      vanishing step {alpha:e}"); }
            return failure(iter);
        }
        for j in 0..n {
            x[j] += alpha * dx[j];
        }
        for i in 0..m {
            z[i] += alpha * dz[i];
            s[i] += alpha * dsv[i];
        }
        tau += alpha * dtau;
        kappa += alpha * dkappa;
        if tau <= 0.0 || kappa <= 0.0 || !tau.is_finite() {
            if verbose { eprintln!("      tau/kappa left the positive orthant"); }
            return failure(iter);
        }
    }

    SolveResult {
        status: Status::IterationLimit,
        x: None,
        objective: None,
        iterations: settings.max_iter,
        residuals,
    }
}
