//! Implicit QL iteration for symmetric tridiagonal matrices.

use super::band::Tridiagonal;

/// Eigenvalues of `t` in ascending order, together with the eigen-coordinates
/// of every tracked vector.
///
/// On entry `tracked[k]` holds a vector `y` in the tridiagonal basis; on exit it
/// holds `Z^T y`, where the columns of `Z` are the eigenvectors of `t` in the
/// returned (ascending) order. Returns `None` if some eigenvalue needs more than
/// `MAX_SWEEPS` QL sweeps.
pub fn ql_implicit(t: Tridiagonal, tracked: &mut [Vec<f64>]) -> Option<Vec<f64>> {
    const MAX_SWEEPS: usize = 60;

    let n = t.diag.len();
    let mut d = t.diag;
    let mut e = t.off;
    e.push(0.0);
    for v in tracked.iter() {
        assert_eq!(v.len(), n);
    }

    for l in 0..n {
        let mut sweeps = 0;
        loop {
            let mut m = l;
            while m + 1 < n {
                let dd = d[m].abs() + d[m + 1].abs();
                if e[m].abs() <= f64::EPSILON * dd {
                    break;
                }
                m += 1;
            }
            if m == l {
                break;
            }
            sweeps += 1;
            if sweeps > MAX_SWEEPS {
                return None;
            }

            let mut g = (d[l + 1] - d[l]) / (2.0 * e[l]);
            let mut r = g.hypot(1.0);
            g = d[m] - d[l] + e[l] / (g + r.copysign(g));
            let mut s = 1.0;
            let mut c = 1.0;
            let mut p = 0.0;
            let mut underflow = false;
            let mut i = m;
            while i > l {
                i -= 1;
                let f = s * e[i];
                let b = c * e[i];
                r = f.hypot(g);
                e[i + 1] = r;
                if r == 0.0 {
                    d[i + 1] -= p;
                    e[m] = 0.0;
                    underflow = true;
                    break;
                }
                s = f / r;
                c = g / r;
                g = d[i + 1] - p;
                r = (d[i] - g) * s + 2.0 * c * b;
                p = s * r;
                d[i + 1] = g + p;
                g = c * r - b;
                for v in tracked.iter_mut() {
                    let f = v[i + 1];
                    v[i + 1] = s * v[i] + c * f;
                    v[i] = c * v[i] - s * f;
                }
            }
            if underflow {
                continue;
            }
            d[l] -= p;
            e[l] = g;
            e[m] = 0.0;
        }
    }

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| d[a].total_cmp(&d[b]).then(a.cmp(&b)));
    for v in tracked.iter_mut() {
        let permuted: Vec<f64> = order.iter().map(|&k| v[k]).collect();
        *v = permuted;
    }
    Some(order.iter().map(|&k| d[k]).collect())
}

/// Number of eigenvalues of `t` strictly below `x` (Sturm sequence count).
pub fn count_below(t: &Tridiagonal, x: f64) -> usize {
    let n = t.diag.len();
    let mut count = 0;
    let mut q = 1.0f64;
    for i in 0..n {
        let off2 = if i == 0 { 0.0 } else { t.off[i - 1] * t.off[i - 1] };
        q = if i == 0 {
            t.diag[0] - x
        } else {
            t.diag[i] - x - off2 / q
        };
        if q == 0.0 {
            q = -f64::EPSILON * (t.diag[i].abs() + x.abs()).max(f64::MIN_POSITIVE);
        }
        if q < 0.0 {
            count += 1;
        }
    }
    count
}
