//! Symmetric eigensolvers.
//!
//! Two independent routes are provided. The dense route hands the full matrix to
//! nalgebra and returns every eigenvector. The band route reduces the band
//! matrix to tridiagonal form, runs implicit QL, and carries a handful of
//! vectors through all rotations, so strength functions of large problems are
//! obtained in `O(n^2 kd)` time and `O(n kd)` memory.

pub mod band;
pub mod inverse;
pub mod tridiag;

use nalgebra::{DMatrix, SymmetricEigen};
use rayon::prelude::*;

pub use band::{SymBand, Tridiagonal};

use crate::error::{Error, Result};

/// Ascending eigenvalues and, for every tracked input vector `y`, the list of
/// overlaps `<phi_l | y>` aligned with the eigenvalues.
#[derive(Clone, Debug)]
pub struct BandSpectrum {
    pub energies: Vec<f64>,
    pub projections: Vec<Vec<f64>>,
}

pub fn band_spectrum(a: &SymBand, tracked: Vec<Vec<f64>>) -> Result<BandSpectrum> {
    let mut tracked = tracked;
    let t = a.tridiagonalize(&mut tracked);
    let energies = tridiag::ql_implicit(t, &mut tracked).ok_or(Error::NoConvergence {
        dim: a.dim(),
        fingerprint: a.fingerprint(),
    })?;
    Ok(BandSpectrum {
        energies,
        projections: tracked,
    })
}

pub fn band_eigenvalues(a: &SymBand) -> Result<Vec<f64>> {
    band_spectrum(a, Vec::new()).map(|s| s.energies)
}

/// Eigenvectors of the selected `levels` (ascending) by inverse iteration,
/// each passed to `f` as soon as its cluster is done. Clusters of nearly
/// degenerate levels are solved together; independent clusters run in
/// parallel. Results keep the order of `levels`.
pub fn band_eigenvectors_map<T, F>(a: &SymBand, energies: &[f64], levels: &[usize], f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize, Vec<f64>) -> T + Sync,
{
    let scale = a.norm_inf().max(f64::MIN_POSITIVE);
    let mut groups: Vec<Vec<usize>> = Vec::new();
    for &l in levels {
        match groups.last_mut() {
            Some(g) if energies[l] - energies[*g.last().unwrap()] < 1e-7 * scale => g.push(l),
            _ => groups.push(vec![l]),
        }
    }
    groups
        .par_iter()
        .map(|g| {
            inverse::eigenvectors(a, energies, g)
                .into_iter()
                .zip(g)
                .map(|(v, &l)| f(l, v))
                .collect::<Vec<_>>()
        })
        .collect::<Vec<_>>()
        .into_iter()
        .flatten()
        .collect()
}

/// Smallest eigenvalue, by Sturm bisection on the tridiagonal form.
pub fn band_lowest_eigenvalue(a: &SymBand) -> f64 {
    let t = a.tridiagonalize(&mut []);
    let n = t.diag.len();
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for i in 0..n {
        let r = if i > 0 { t.off[i - 1].abs() } else { 0.0 }
            + if i + 1 < n { t.off[i].abs() } else { 0.0 };
        lo = lo.min(t.diag[i] - r);
        hi = hi.max(t.diag[i] + r);
    }
    let tol = 2.0 * f64::EPSILON * lo.abs().max(hi.abs()).max(f64::MIN_POSITIVE);
    while hi - lo > tol {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if tridiag::count_below(&t, mid) >= 1 {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    0.5 * (lo + hi)
}

/// Full dense eigendecomposition: ascending eigenvalues and the matching
/// eigenvectors as columns, each with its largest-magnitude component positive.
pub fn dense_eigen(m: &DMatrix<f64>) -> Result<(Vec<f64>, DMatrix<f64>)> {
    let n = m.nrows();
    if n == 0 {
        return Ok((Vec::new(), DMatrix::zeros(0, 0)));
    }
    let eig = SymmetricEigen::try_new(m.clone(), f64::EPSILON, 0).ok_or_else(|| {
        let band = SymBand::from_dense(m, n - 1).ok();
        Error::NoConvergence {
            dim: n,
            fingerprint: band.map_or(0, |b| b.fingerprint()),
        }
    })?;
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| {
        eig.eigenvalues[a]
            .total_cmp(&eig.eigenvalues[b])
            .then(a.cmp(&b))
    });
    let energies = order.iter().map(|&k| eig.eigenvalues[k]).collect();
    let mut vectors = DMatrix::zeros(n, n);
    for (col, &k) in order.iter().enumerate() {
        let mut v: Vec<f64> = eig.eigenvectors.column(k).iter().copied().collect();
        inverse::fix_sign(&mut v);
        vectors.set_column(col, &nalgebra::DVector::from_vec(v));
    }
    Ok((energies, vectors))
}
