//! Sparse CSR matrices, ILU(0) preconditioning, and BiCGSTAB for the
//! generally non-symmetric systems assembled by the solve module.

// index arithmetic over band/CSR layouts reads better with plain ranges
#![allow(clippy::needless_range_loop)]

use crate::error::{Error, Result};

#[derive(Clone, Debug)]
pub struct Csr {
    pub n: usize,
    pub indptr: Vec<usize>,
    pub indices: Vec<usize>,
    pub data: Vec<f64>,
}

impl Csr {
    /// Build from (row, col, value) triplets; duplicates are summed.
    pub fn from_triplets(n: usize, triplets: &[(usize, usize, f64)]) -> Csr {
        let mut per_row: Vec<Vec<(usize, f64)>> = vec![Vec::new(); n];
        for &(r, c, v) in triplets {
            per_row[r].push((c, v));
        }
        let mut indptr = Vec::with_capacity(n + 1);
        let mut indices = Vec::new();
        let mut data = Vec::new();
        indptr.push(0);
        for row in per_row.iter_mut() {
            row.sort_by_key(|&(c, _)| c);
            let mut k = 0;
            while k < row.len() {
                let col = row[k].0;
                let mut v = 0.0;
                while k < row.len() && row[k].0 == col {
                    v += row[k].1;
                    k += 1;
                }
                indices.push(col);
                data.push(v);
            }
            indptr.push(indices.len());
        }
        Csr { n, indptr, indices, data }
    }

    pub fn matvec(&self, x: &[f64], y: &mut [f64]) {
        for r in 0..self.n {
            let mut acc = 0.0;
            for k in self.indptr[r]..self.indptr[r + 1] {
                acc += self.data[k] * x[self.indices[k]];
            }
            y[r] = acc;
        }
    }

    pub fn is_symmetric(&self, tol: f64) -> bool {
        for r in 0..self.n {
            for k in self.indptr[r]..self.indptr[r + 1] {
                let c = self.indices[k];
                if c < r {
                    continue;
                }
                let vt = self.get(c, r).unwrap_or(0.0);
                if (self.data[k] - vt).abs() > tol {
                    return false;
                }
            }
        }
        true
    }

    pub fn get(&self, r: usize, c: usize) -> Option<f64> {
        let lo = self.indptr[r];
        let hi = self.indptr[r + 1];
        self.indices[lo..hi]
            .binary_search(&c)
            .ok()
            .map(|k| self.data[lo + k])
    }
}

/// Incomplete LU factorization with zero fill-in, on the matrix pattern.
pub struct Ilu0 {
    lu: Csr,
    diag_pos: Vec<usize>,
    scale: f64,
}

impl Ilu0 {
    pub fn factor(a: &Csr) -> Ilu0 {
        let mut lu = a.clone();
        let n = lu.n;
        let mut diag_pos = vec![usize::MAX; n];
        for r in 0..n {
            for k in lu.indptr[r]..lu.indptr[r + 1] {
                if lu.indices[k] == r {
                    diag_pos[r] = k;
                }
            }
        }
        // scale for the small-pivot guard
        let scale = lu.data.iter().fold(0.0f64, |m, v| m.max(v.abs())).max(1e-300);
        let mut colmap = vec![usize::MAX; n];
        for i in 0..n {
            let (lo, hi) = (lu.indptr[i], lu.indptr[i + 1]);
            for k in lo..hi {
                colmap[lu.indices[k]] = k;
            }
            for kk in lo..hi {
                let k = lu.indices[kk];
                if k >= i {
                    break;
                }
                let dk = diag_pos[k];
                let mut piv = if dk != usize::MAX { lu.data[dk] } else { 0.0 };
                if piv.abs() < 1e-14 * scale {
                    piv = if piv >= 0.0 { 1e-14 * scale } else { -1e-14 * scale };
                }
                let factor = lu.data[kk] / piv;
                lu.data[kk] = factor;
                for kj in (if diag_pos[k] != usize::MAX { diag_pos[k] + 1 } else { lu.indptr[k] })
                    ..lu.indptr[k + 1]
                {
                    let j = lu.indices[kj];
                    let pos = colmap[j];
                    if pos != usize::MAX && pos >= lo && pos < hi {
                        lu.data[pos] -= factor * lu.data[kj];
                    }
                }
            }
            for k in lo..hi {
                colmap[lu.indices[k]] = usize::MAX;
            }
        }
        Ilu0 { lu, diag_pos, scale }
    }

    /// z = (LU)^{-1} r.
    pub fn apply(&self, r: &[f64], z: &mut [f64]) {
        let n = self.lu.n;
        let scale = self.scale;
        // forward: L z = r (unit diagonal)
        for i in 0..n {
            let mut acc = r[i];
            for k in self.lu.indptr[i]..self.lu.indptr[i + 1] {
                let j = self.lu.indices[k];
                if j >= i {
                    break;
                }
                acc -= self.lu.data[k] * z[j];
            }
            z[i] = acc;
        }
        // backward: U z = z
        for i in (0..n).rev() {
            let mut acc = z[i];
            let dp = self.diag_pos[i];
            let start = if dp != usize::MAX { dp + 1 } else { self.lu.indptr[i] };
            for k in start..self.lu.indptr[i + 1] {
                acc -= self.lu.data[k] * z[self.lu.indices[k]];
            }
            let mut piv = if dp != usize::MAX { self.lu.data[dp] } else { 1.0 };
            if piv.abs() < 1e-14 * scale {
                piv = if piv >= 0.0 { 1e-14 * scale } else { -1e-14 * scale };
            }
            z[i] = acc / piv;
        }
    }
}

pub struct SolveStats {
    pub iterations: usize,
    pub residual: f64,
}

/// Preconditioned BiCGSTAB with relative residual stopping.
pub fn bicgstab(
    a: &Csr,
    b: &[f64],
    precond: &Ilu0,
    tol_rel: f64,
    max_iter: usize,
) -> Result<(Vec<f64>, SolveStats)> {
    let n = a.n;
    let bnorm = norm2(b);
    if bnorm == 0.0 {
        return Ok((vec![0.0; n], SolveStats { iterations: 0, residual: 0.0 }));
    }
    let mut x = vec![0.0; n];
    let mut r = b.to_vec();
    let r0 = r.clone();
    let mut rho = 1.0;
    let mut alpha = 1.0;
    let mut omega = 1.0;
    let mut v = vec![0.0; n];
    let mut p = vec![0.0; n];
    let mut phat = vec![0.0; n];
    let mut shat = vec![0.0; n];
    let mut t = vec![0.0; n];
    let mut res = norm2(&r) / bnorm;
    for it in 1..=max_iter {
        let rho_new = dot(&r0, &r);
        if rho_new.abs() < 1e-300 {
            return Err(Error::SolverDiverged { iters: it, residual: res });
        }
        let beta = (rho_new / rho) * (alpha / omega);
        rho = rho_new;
        for i in 0..n {
            p[i] = r[i] + beta * (p[i] - omega * v[i]);
        }
        precond.apply(&p, &mut phat);
        a.matvec(&phat, &mut v);
        alpha = rho / dot(&r0, &v);
        let s: Vec<f64> = (0..n).map(|i| r[i] - alpha * v[i]).collect();
        let snorm = norm2(&s) / bnorm;
        if snorm < tol_rel {
            for i in 0..n {
                x[i] += alpha * phat[i];
            }
            return Ok((x, SolveStats { iterations: it, residual: snorm }));
        }
        precond.apply(&s, &mut shat);
        a.matvec(&shat, &mut t);
        let tt = dot(&t, &t);
        if tt == 0.0 {
            return Err(Error::SolverDiverged { iters: it, residual: snorm });
        }
        omega = dot(&t, &s) / tt;
        for i in 0..n {
            x[i] += alpha * phat[i] + omega * shat[i];
            r[i] = s[i] - omega * t[i];
        }
        res = norm2(&r) / bnorm;
        if res < tol_rel {
            return Ok((x, SolveStats { iterations: it, residual: res }));
        }
        if omega.abs() < 1e-300 {
            return Err(Error::SolverDiverged { iters: it, residual: res });
        }
    }
    Err(Error::SolverDiverged { iters: max_iter, residual: res })
}

/// Banded LU without pivoting. The assembled systems have positive
/// definite symmetric part, which keeps elimination stable.
pub struct BandedLu {
    n: usize,
    kl: usize,
    ku: usize,
    // row-major, row i holds columns i-kl ..= i+ku
    ab: Vec<f64>,
}

impl BandedLu {
    pub fn factor(a: &Csr) -> Result<BandedLu> {
        let n = a.n;
        let (mut kl, mut ku) = (0usize, 0usize);
        for r in 0..n {
            for k in a.indptr[r]..a.indptr[r + 1] {
                let c = a.indices[k];
                if c < r {
                    kl = kl.max(r - c);
                } else {
                    ku = ku.max(c - r);
                }
            }
        }
        let w = kl + ku + 1;
        let mut ab = vec![0.0; n * w];
        for r in 0..n {
            for k in a.indptr[r]..a.indptr[r + 1] {
                let c = a.indices[k];
                ab[r * w + (c + kl - r)] = a.data[k];
            }
        }
        let scale = a.data.iter().fold(0.0f64, |m, v| m.max(v.abs())).max(1e-300);
        for i in 0..n {
            let piv = ab[i * w + kl];
            if piv.abs() < 1e-14 * scale {
                return Err(Error::SolverDiverged { iters: i, residual: piv.abs() });
            }
            let rmax = (i + kl).min(n - 1);
            for r in i + 1..=rmax {
                // column i sits at offset (i + kl - r) in row r
                let off = i + kl - r;
                let f = ab[r * w + off] / piv;
                ab[r * w + off] = f;
                if f != 0.0 {
                    let cmax = (i + ku).min(n - 1);
                    for c in i + 1..=cmax {
                        ab[r * w + (c + kl - r)] -= f * ab[i * w + (c + kl - i)];
                    }
                }
            }
        }
        Ok(BandedLu { n, kl, ku, ab })
    }

    pub fn solve(&self, b: &[f64]) -> Vec<f64> {
        let (n, kl, ku) = (self.n, self.kl, self.ku);
        let w = kl + ku + 1;
        let mut x = b.to_vec();
        for i in 0..n {
            let lo = i.saturating_sub(kl);
            let mut acc = x[i];
            for c in lo..i {
                acc -= self.ab[i * w + (c + kl - i)] * x[c];
            }
            x[i] = acc;
        }
        for i in (0..n).rev() {
            let hi = (i + ku).min(n - 1);
            let mut acc = x[i];
            for c in i + 1..=hi {
                acc -= self.ab[i * w + (c + kl - i)] * x[c];
            }
            x[i] = acc / self.ab[i * w + kl];
        }
        x
    }
}

/// Direct solve when the band is affordable, Krylov otherwise. One round
/// of iterative refinement cleans up the direct solution.
pub fn solve_linear(a: &Csr, b: &[f64], tol_rel: f64) -> Result<(Vec<f64>, SolveStats)> {
    let n = a.n;
    let mut bw = 0usize;
    for r in 0..n {
        for k in a.indptr[r]..a.indptr[r + 1] {
            bw = bw.max(a.indices[k].abs_diff(r));
        }
    }
    let banded_cost = n.saturating_mul(2 * bw + 1);
    if banded_cost <= 40_000_000 && bw + 1 < n {
        let lu = BandedLu::factor(a)?;
        let mut x = lu.solve(b);
        for _ in 0..2 {
            let mut r = vec![0.0; n];
            a.matvec(&x, &mut r);
            for i in 0..n {
                r[i] = b[i] - r[i];
            }
            let dx = lu.solve(&r);
            for i in 0..n {
                x[i] += dx[i];
            }
        }
        let mut r = vec![0.0; n];
        a.matvec(&x, &mut r);
        let bnorm = norm2(b).max(1e-300);
        for i in 0..n {
            r[i] = b[i] - r[i];
        }
        Ok((x, SolveStats { iterations: 0, residual: norm2(&r) / bnorm }))
    } else {
        let pc = Ilu0::factor(a);
        bicgstab(a, b, &pc, tol_rel, 50_000)
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn norm2(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn laplace_1d(n: usize) -> Csr {
        let mut t = Vec::new();
        for i in 0..n {
            t.push((i, i, 2.0));
            if i > 0 {
                t.push((i, i - 1, -1.0));
            }
            if i + 1 < n {
                t.push((i, i + 1, -1.0));
            }
        }
        Csr::from_triplets(n, &t)
    }

    #[test]
    fn csr_matvec() {
        let a = Csr::from_triplets(2, &[(0, 0, 2.0), (0, 1, 1.0), (1, 0, 0.5), (1, 1, 3.0)]);
        let mut y = vec![0.0; 2];
        a.matvec(&[1.0, 2.0], &mut y);
        assert_eq!(y, vec![4.0, 6.5]);
    }

    #[test]
    fn duplicate_triplets_summed() {
        let a = Csr::from_triplets(1, &[(0, 0, 1.0), (0, 0, 2.5)]);
        assert_eq!(a.get(0, 0), Some(3.5));
    }

    #[test]
    fn bicgstab_solves_spd() {
        let n = 50;
        let a = laplace_1d(n);
        let x_true: Vec<f64> = (0..n).map(|i| (i as f64 * 0.3).sin()).collect();
        let mut b = vec![0.0; n];
        a.matvec(&x_true, &mut b);
        let pc = Ilu0::factor(&a);
        let (x, stats) = bicgstab(&a, &b, &pc, 1e-13, 1000).unwrap();
        assert!(stats.residual < 1e-12);
        for i in 0..n {
            assert!((x[i] - x_true[i]).abs() < 1e-9, "i={i}");
        }
    }

    #[test]
    fn bicgstab_solves_nonsymmetric() {
        let n = 40;
        let mut t = Vec::new();
        for i in 0..n {
            t.push((i, i, 4.0));
            if i > 0 {
                t.push((i, i - 1, -1.5));
            }
            if i + 1 < n {
                t.push((i, i + 1, -0.5));
            }
        }
        let a = Csr::from_triplets(n, &t);
        let x_true: Vec<f64> = (0..n).map(|i| 1.0 + (i % 7) as f64).collect();
        let mut b = vec![0.0; n];
        a.matvec(&x_true, &mut b);
        let pc = Ilu0::factor(&a);
        let (x, _) = bicgstab(&a, &b, &pc, 1e-13, 1000).unwrap();
        for i in 0..n {
            assert!((x[i] - x_true[i]).abs() < 1e-9);
        }
    }
}
