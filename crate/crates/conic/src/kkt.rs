//! Full augmented KKT system for the interior-point core:
//!
//!   [ d I    A' ] [dx]   [r1]
//!   [ A    -H   ] [dz] = [r2],   H = W^2 blockwise (0 on equality rows),
//!
//! factored as a no-pivot LDL' with sign-aware static and dynamic
//! regularization. Indices are permuted by reverse Cuthill-McKee before
//! factoring: multistage problems produce banded patterns under it, and the
//! skip-zero right-looking update then costs dim * bandwidth^2 instead of
//! dim^3.

use crate::lower::ConeKind;
use crate::scaling::ScalingBlock;

#[derive(Debug, Clone, Copy)]
pub(crate) struct Span {
    pub kind: ConeKind,
    pub start: usize,
    pub len: usize,
}

pub(crate) struct KktSystem {
    n: usize,
    m: usize,
    dim: usize,
    rows: Vec<Vec<(usize, f64)>>,
    spans: Vec<Span>,
    perm: Vec<usize>,  // new index -> old index
    iperm: Vec<usize>, // old index -> new index
    sign: Vec<f64>,    // expected pivot sign per new index
    static_reg: f64,
    assembled: Vec<f64>, // dim x dim column-major symmetric K
    fac: Vec<f64>,       // working copy; lower triangle holds L
    d: Vec<f64>,
    rhs_buf: Vec<f64>,
}

/// Reverse Cuthill-McKee over an undirected adjacency list.
fn rcm_order(adj: &[Vec<usize>]) -> Vec<usize> {
    let n = adj.len();
    let mut visited = vec![false; n];
    let mut order = Vec::with_capacity(n);
    let degree: Vec<usize> = adj.iter().map(|a| a.len()).collect();
    let mut nodes: Vec<usize> = (0..n).collect();
    nodes.sort_unstable_by_key(|&i| degree[i]);
    for &root in &nodes {
        if visited[root] {
            continue;
        }
        visited[root] = true;
        let mut queue = std::collections::VecDeque::new();
        queue.push_back(root);
        while let Some(u) = queue.pop_front() {
            order.push(u);
            let mut nbrs: Vec<usize> =
                adj[u].iter().copied().filter(|&v| !visited[v]).collect();
            nbrs.sort_unstable_by_key(|&v| degree[v]);
            for v in nbrs {
                visited[v] = true;
                queue.push_back(v);
            }
        }
    }
    order.reverse();
    order
}

impl KktSystem {
    pub fn new(
        n: usize,
        rows: Vec<Vec<(usize, f64)>>,
        spans: Vec<Span>,
        static_reg: f64,
    ) -> Self {
        let m = rows.len();
        let dim = n + m;
        // adjacency of the KKT pattern: variable j <-> row i when A[i,j] != 0,
        // row i <-> row i' when both live in one SOC block (dense H block)
        let mut adj: Vec<Vec<usize>> = vec![Vec::new(); dim];
        for (i, row) in rows.iter().enumerate() {
            for &(j, _) in row {
                adj[j].push(n + i);
                adj[n + i].push(j);
            }
        }
        for sp in &spans {
            if sp.kind == ConeKind::Soc {
                for a in sp.start..sp.start + sp.len {
                    for b in sp.start..sp.start + sp.len {
                        if a != b {
                            adj[n + a].push(n + b);
                        }
                    }
                }
            }
        }
        let perm = rcm_order(&adj);
        let mut iperm = vec![0usize; dim];
        for (new, &old) in perm.iter().enumerate() {
            iperm[old] = new;
        }
        let sign = perm.iter().map(|&old| if old < n { 1.0 } else { -1.0 }).collect();
        KktSystem {
            n,
            m,
            dim,
            rows,
            spans,
            perm,
            iperm,
            sign,
            static_reg,
            assembled: vec![0.0; dim * dim],
            fac: vec![0.0; dim * dim],
            d: vec![0.0; dim],
            rhs_buf: vec![0.0; dim],
        }
    }

    /// Assemble and factor for the given scalings (`None` = identity H).
    /// Breakdown (overflowing pivots) escalates the regularization and
    /// refactors; iterative refinement in the caller absorbs the
    /// perturbation.
    pub fn factor(&mut self, scalings: Option<&[ScalingBlock]>) -> Result<(), ()> {
        self.assemble(scalings)?;
        let mut reg = self.static_reg;
        for _ in 0..5 {
            if self.ldlt(reg).is_ok() {
                // overflow can leave infinities in trailing columns while
                // every pivot stays finite; treat that as a breakdown too
                if self.fac.iter().all(|v| v.is_finite()) {
                    return Ok(());
                }
            }
            reg *= 1e3;
        }
        Err(())
    }

    fn assemble(&mut self, scalings: Option<&[ScalingBlock]>) -> Result<(), ()> {
        let dim = self.dim;
        let n = self.n;
        self.assembled.iter_mut().for_each(|v| *v = 0.0);
        let set = |fac: &mut Vec<f64>, iperm: &Vec<usize>, r: usize, c: usize, v: f64| {
            let (pr, pc) = (iperm[r], iperm[c]);
            // store both triangles; the factorization reads the lower one
            fac[pc * dim + pr] += v;
            fac[pr * dim + pc] += if pr == pc { 0.0 } else { v };
        };
        for (i, row) in self.rows.iter().enumerate() {
            for &(j, v) in row {
                set(&mut self.assembled, &self.iperm, n + i, j, v);
            }
        }
        // -H blocks
        let mut pc_idx = 0usize;
        for sp in &self.spans {
            if sp.kind == ConeKind::Zero {
                continue;
            }
            match (scalings, sp.kind) {
                (None, _) => {
                    for i in sp.start..sp.start + sp.len {
                        set(&mut self.assembled, &self.iperm, n + i, n + i, -1.0);
                    }
                }
                (Some(s), ConeKind::Nonneg) => {
                    let ScalingBlock::Nonneg { w, .. } = &s[pc_idx] else {
                        return Err(());
                    };
                    for (t, i) in (sp.start..sp.start + sp.len).enumerate() {
                        set(&mut self.assembled, &self.iperm, n + i, n + i, -w[t] * w[t]);
                    }
                }
                (Some(s), ConeKind::Soc) => {
                    let ScalingBlock::Soc { eta, wbar, .. } = &s[pc_idx] else {
                        return Err(());
                    };
                    let e2 = eta * eta;
                    for a in 0..sp.len {
                        for b in 0..=a {
                            let jab = if a == b {
                                if a == 0 {
                                    1.0
                                } else {
                                    -1.0
                                }
                            } else {
                                0.0
                            };
                            let h = e2 * (2.0 * wbar[a] * wbar[b] - jab);
                            let (ra, rb) = (n + sp.start + a, n + sp.start + b);
                            set(&mut self.assembled, &self.iperm, ra, rb, -h);
                        }
                    }
                }
                (_, ConeKind::Zero) => unreachable!(),
            }
            pc_idx += 1;
        }
        Ok(())
    }

    fn ldlt(&mut self, reg: f64) -> Result<(), ()> {
        let dim = self.dim;
        self.fac.copy_from_slice(&self.assembled);
        // data is Ruiz-equilibrated to order one; fixed floors are enough
        let eps_dyn = reg.max(1e-9);
        for j in 0..dim {
            self.fac[j * dim + j] += self.sign[j] * reg;
        }
        for j in 0..dim {
            let mut dj = self.fac[j * dim + j];
            if self.sign[j] * dj < eps_dyn {
                dj = self.sign[j] * eps_dyn;
            }
            if !dj.is_finite() || dj == 0.0 {
                return Err(());
            }
            self.d[j] = dj;
            let inv = 1.0 / dj;
            let col_j_start = j * dim;
            for i in (j + 1)..dim {
                self.fac[col_j_start + i] *= inv;
            }
            for k in (j + 1)..dim {
                let ljk = self.fac[col_j_start + k];
                if ljk == 0.0 {
                    continue;
                }
                let f = ljk * dj;
                let (head, tail) = self.fac.split_at_mut(k * dim);
                let col_j = &head[col_j_start..col_j_start + dim];
                let col_k = &mut tail[..dim];
                for i in k..dim {
                    col_k[i] -= f * col_j[i];
                }
            }
        }
        Ok(())
    }

    /// One solve of the factored system; rhs over (x, z) in original order.
    pub fn solve(&mut self, r1: &[f64], r2: &[f64]) -> (Vec<f64>, Vec<f64>) {
        let dim = self.dim;
        let n = self.n;
        for (old, &v) in r1.iter().enumerate() {
            self.rhs_buf[self.iperm[old]] = v;
        }
        for (i, &v) in r2.iter().enumerate() {
            self.rhs_buf[self.iperm[n + i]] = v;
        }
        let v = &mut self.rhs_buf;
        for j in 0..dim {
            let vj = v[j];
            if vj != 0.0 {
                let col = j * dim;
                for i in (j + 1)..dim {
                    let l = self.fac[col + i];
                    if l != 0.0 {
                        v[i] -= l * vj;
                    }
                }
            }
        }
        for j in 0..dim {
            v[j] /= self.d[j];
        }
        for j in (0..dim).rev() {
            let col = j * dim;
            let mut acc = v[j];
            for i in (j + 1)..dim {
                let l = self.fac[col + i];
                if l != 0.0 {
                    acc -= l * v[i];
                }
            }
            v[j] = acc;
        }
        let mut dx = vec![0.0; n];
        let mut dz = vec![0.0; self.m];
        for new in 0..dim {
            let old = self.perm[new];
            if old < n {
                dx[old] = v[new];
            } else {
                dz[old - n] = v[new];
            }
        }
        (dx, dz)
    }
}
