//! Real symmetric band matrices and their orthogonal reduction to tridiagonal form.
//!
//! Storage is the lower band, column by column: entry `(i, j)` with `i >= j` and
//! `i - j <= kd` lives at `data[j * (kd + 1) + (i - j)]`.

use std::collections::hash_map::DefaultHasher;
use std::hash::{Hash, Hasher};

use nalgebra::DMatrix;

use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq)]
pub struct SymBand {
    dim: usize,
    kd: usize,
    data: Vec<f64>,
}

impl SymBand {
    pub fn zeros(dim: usize, kd: usize) -> Self {
        let kd = kd.min(dim.saturating_sub(1));
        Self {
            dim,
            kd,
            data: vec![0.0; dim * (kd + 1)],
        }
    }

    pub fn from_diagonal(diag: &[f64]) -> Self {
        Self {
            dim: diag.len(),
            kd: 0,
            data: diag.to_vec(),
        }
    }

    /// Extracts the band of a dense matrix. Entries outside `kd` must vanish.
    pub fn from_dense(m: &DMatrix<f64>, kd: usize) -> Result<Self> {
        if m.nrows() != m.ncols() {
            return Err(Error::InvalidParameter("matrix is not square".into()));
        }
        let n = m.nrows();
        let mut out = Self::zeros(n, kd);
        for j in 0..n {
            for i in j..n {
                let a = m[(i, j)];
                if a != m[(j, i)] {
                    return Err(Error::InvalidParameter(format!(
                        "matrix is not symmetric at ({i}, {j})"
                    )));
                }
                if i - j > out.kd {
                    if a != 0.0 {
                        return Err(Error::InvalidParameter(format!(
                            "entry ({i}, {j}) lies outside bandwidth {kd}"
                        )));
                    }
                } else {
                    out.set(i, j, a);
                }
            }
        }
        Ok(out)
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Half bandwidth.
    #[inline]
    pub fn kd(&self) -> usize {
        self.kd
    }

    #[inline]
    fn offset(&self, i: usize, j: usize) -> Option<usize> {
        let (hi, lo) = if i >= j { (i, j) } else { (j, i) };
        if hi - lo > self.kd || hi >= self.dim {
            None
        } else {
            Some(lo * (self.kd + 1) + (hi - lo))
        }
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.offset(i, j).map_or(0.0, |o| self.data[o])
    }

    /// Sets the symmetric pair `(i, j)`, `(j, i)`.
    ///
    /// Panics if the entry lies outside the band.
    #[inline]
    pub fn set(&mut self, i: usize, j: usize, value: f64) {
        let o = self
            .offset(i, j)
            .unwrap_or_else(|| panic!("({i}, {j}) outside band {}", self.kd));
        self.data[o] = value;
    }

    pub fn diagonal(&self) -> Vec<f64> {
        (0..self.dim).map(|i| self.get(i, i)).collect()
    }

    pub fn is_diagonal(&self) -> bool {
        (0..self.dim).all(|j| {
            (1..=self.kd).all(|d| j + d >= self.dim || self.data[j * (self.kd + 1) + d] == 0.0)
        })
    }

    /// Returns `self + scale * other`, widening the band if needed.
    pub fn add_scaled(&self, other: &SymBand, scale: f64) -> SymBand {
        assert_eq!(self.dim, other.dim, "dimension mismatch");
        let kd = self.kd.max(other.kd);
        let mut out = SymBand::zeros(self.dim, kd);
        for j in 0..self.dim {
            for d in 0..=kd {
                let i = j + d;
                if i >= self.dim {
                    break;
                }
                let v = self.get(i, j) + scale * other.get(i, j);
                if v != 0.0 || d <= out.kd {
                    out.set(i, j, v);
                }
            }
        }
        out
    }

    /// Adds `diag` to the main diagonal.
    pub fn add_diagonal(&mut self, diag: &[f64]) {
        assert_eq!(diag.len(), self.dim);
        let stride = self.kd + 1;
        for (j, d) in diag.iter().enumerate() {
            self.data[j * stride] += d;
        }
    }

    pub fn matvec(&self, x: &[f64]) -> Vec<f64> {
        let mut y = vec![0.0; self.dim];
        self.matvec_into(x, &mut y);
        y
    }

    pub fn matvec_into(&self, x: &[f64], y: &mut [f64]) {
        assert_eq!(x.len(), self.dim);
        assert_eq!(y.len(), self.dim);
        y.iter_mut().for_each(|v| *v = 0.0);
        let stride = self.kd + 1;
        for j in 0..self.dim {
            let col = &self.data[j * stride..(j + 1) * stride];
            y[j] += col[0] * x[j];
            for d in 1..stride {
                let i = j + d;
                if i >= self.dim {
                    break;
                }
                let a = col[d];
                y[i] += a * x[j];
                y[j] += a * x[i];
            }
        }
    }

    /// Bilinear form `x^T A y`.
    pub fn bilinear(&self, x: &[f64], y: &[f64]) -> f64 {
        let ay = self.matvec(y);
        x.iter().zip(&ay).map(|(a, b)| a * b).sum()
    }

    /// Infinity norm (maximum absolute row sum).
    pub fn norm_inf(&self) -> f64 {
        let mut rows = vec![0.0f64; self.dim];
        let stride = self.kd + 1;
        for j in 0..self.dim {
            for d in 0..stride {
                let i = j + d;
                if i >= self.dim {
                    break;
                }
                let a = self.data[j * stride + d].abs();
                rows[i] += a;
                if d > 0 {
                    rows[j] += a;
                }
            }
        }
        rows.into_iter().fold(0.0, f64::max)
    }

    pub fn to_dense(&self) -> DMatrix<f64> {
        let mut m = DMatrix::zeros(self.dim, self.dim);
        for j in 0..self.dim {
            for d in 0..=self.kd {
                let i = j + d;
                if i >= self.dim {
                    break;
                }
                let a = self.get(i, j);
                m[(i, j)] = a;
                m[(j, i)] = a;
            }
        }
        m
    }

    /// Stable hash of the stored bits, used to identify a matrix in error reports.
    pub fn fingerprint(&self) -> u64 {
        let mut h = DefaultHasher::new();
        self.dim.hash(&mut h);
        self.kd.hash(&mut h);
        for v in &self.data {
            v.to_bits().hash(&mut h);
        }
        h.finish()
    }

    /// Reduces the matrix to symmetric tridiagonal form `T = Q^T A Q` by Givens
    /// rotations (diagonal-by-diagonal band elimination with bulge chasing).
    ///
    /// Every vector in `tracked` is overwritten with `Q^T v`, so that after the
    /// tridiagonal eigenproblem is solved the projections of the original
    /// vectors onto the eigenvectors of `A` are available without ever forming `Q`.
    pub fn tridiagonalize(&self, tracked: &mut [Vec<f64>]) -> Tridiagonal {
        let n = self.dim;
        for v in tracked.iter() {
            assert_eq!(v.len(), n, "tracked vector has wrong length");
        }
        if self.kd <= 1 {
            let diag = self.diagonal();
            let off = (0..n.saturating_sub(1))
                .map(|i| self.get(i + 1, i))
                .collect();
            return Tridiagonal { diag, off };
        }

        // working copy with room for one bulge diagonal
        let cap = self.kd + 1;
        let w = cap + 1;
        let mut a = vec![0.0; n * w];
        for j in 0..n {
            for d in 0..=self.kd {
                if j + d < n {
                    a[j * w + d] = self.data[j * (self.kd + 1) + d];
                }
            }
        }
        let idx = |i: usize, j: usize| j * w + (i - j);

        // Chases started from consecutive columns are run as a pipeline, each one
        // LAG steps behind its predecessor. Steps that far apart touch disjoint
        // entries, so the result equals the one-chase-at-a-time order while the
        // active part of the band stays in cache.
        const BLOCK: usize = 32;
        const LAG: usize = 2;
        for k in (2..=self.kd).rev() {
            let last = n.saturating_sub(k);
            let mut i0 = 0;
            while i0 < last {
                let count = BLOCK.min(last - i0);
                let mut state: Vec<Option<(usize, usize)>> =
                    (0..count).map(|b| Some((i0 + b, i0 + b + k))).collect();
                let mut t = 0;
                while state.iter().any(Option::is_some) {
                    for (b, slot) in state.iter_mut().enumerate() {
                        if t < LAG * b {
                            break;
                        }
                        if let Some((c, r)) = *slot {
                            *slot = chase_step(&mut a, w, n, k, c, r, tracked);
                        }
                    }
                    t += 1;
                }
                i0 += count;
            }
        }

        let diag = (0..n).map(|i| a[idx(i, i)]).collect();
        let off = (0..n.saturating_sub(1)).map(|i| a[idx(i + 1, i)]).collect();
        Tridiagonal { diag, off }
    }
}

/// Symmetric tridiagonal matrix: `diag[i]` and `off[i] = T[i + 1][i]`.
#[derive(Clone, Debug)]
pub struct Tridiagonal {
    pub diag: Vec<f64>,
    pub off: Vec<f64>,
}

/// One elimination step of a bulge chase: annihilates `A[r][c]` with a rotation
/// of rows/columns `(r - 1, r)` and returns the position of the new bulge.
#[allow(clippy::too_many_arguments)]
fn chase_step(
    a: &mut [f64],
    w: usize,
    n: usize,
    k: usize,
    c: usize,
    r: usize,
    tracked: &mut [Vec<f64>],
) -> Option<(usize, usize)> {
    let idx = |i: usize, j: usize| j * w + (i - j);
    let x = a[idx(r - 1, c)];
    let y = a[idx(r, c)];
    if y == 0.0 {
        return None;
    }
    let rho = x.hypot(y);
    let (cs, sn) = (x / rho, y / rho);
    let p = r - 1;
    let q = r;

    // columns left of p: pairs (A[p][x], A[q][x]), adjacent in memory
    let x_lo = q.saturating_sub(k + 1);
    let stride = w - 1;
    let start = idx(p, x_lo);
    let end = idx(p, p - 1) + 2;
    if x_lo < p {
        for pair in a[start..end].chunks_mut(stride) {
            let ap = pair[0];
            let aq = pair[1];
            pair[0] = cs * ap + sn * aq;
            pair[1] = -sn * ap + cs * aq;
        }
    }
    a[idx(p, c)] = rho;
    if c < p {
        a[idx(q, c)] = 0.0;
    }

    // 2x2 diagonal block
    let app = a[idx(p, p)];
    let aqp = a[idx(q, p)];
    let aqq = a[idx(q, q)];
    let cc = cs * cs;
    let ss = sn * sn;
    let csn = cs * sn;
    a[idx(p, p)] = cc * app + 2.0 * csn * aqp + ss * aqq;
    a[idx(q, q)] = ss * app - 2.0 * csn * aqp + cc * aqq;
    a[idx(q, p)] = csn * (aqq - app) + (cc - ss) * aqp;

    // rows below q: pairs (A[y][p], A[y][q]), two contiguous runs
    let y_hi = (q + k).min(n - 1);
    if y_hi > q {
        let (left, right) = a.split_at_mut(q * w);
        let col_p = &mut left[p * w + 2..p * w + 1 + (y_hi - p)];
        let col_q = &mut right[1..=y_hi - q];
        for (ap, aq) in col_p.iter_mut().zip(col_q.iter_mut()) {
            let (u, v) = (*ap, *aq);
            *ap = cs * u + sn * v;
            *aq = -sn * u + cs * v;
        }
    }

    for v in tracked.iter_mut() {
        let vp = v[p];
        let vq = v[q];
        v[p] = cs * vp + sn * vq;
        v[q] = -sn * vp + cs * vq;
    }

    // bulge now sits at A[q + k][p]
    let r = q + k;
    (r < n).then_some((p, r))
}
