//! Eigenvectors of band matrices for known eigenvalues, by inverse iteration on
//! a pivoted band LU factorization of `A - sigma I`.

use super::band::SymBand;

/// Band LU factorization with partial pivoting. Rows are stored with room for
/// the fill produced by row exchanges: row `i` covers columns `i - kd ..= i + 2 kd`.
struct BandLu {
    n: usize,
    kd: usize,
    width: usize,
    rows: Vec<f64>,
    pivots: Vec<usize>,
    multipliers: Vec<f64>,
}

impl BandLu {
    fn factor(a: &SymBand, sigma: f64, tiny: f64) -> Self {
        let n = a.dim();
        let kd = a.kd();
        let width = 3 * kd + 1;
        let mut rows = vec![0.0; n * width];
        // column j of row i sits at i * width + (j + kd - i)
        for i in 0..n {
            let lo = i.saturating_sub(kd);
            let hi = (i + kd).min(n - 1);
            for j in lo..=hi {
                let mut v = a.get(i, j);
                if i == j {
                    v -= sigma;
                }
                rows[i * width + (j + kd - i)] = v;
            }
        }
        let mut pivots = vec![0; n];
        let mut multipliers = vec![0.0; n * kd.max(1)];

        for c in 0..n {
            let last = (c + kd).min(n - 1);
            let mut piv = c;
            let mut best = rows[c * width + kd].abs();
            for r in c + 1..=last {
                let v = rows[r * width + (c + kd - r)].abs();
                if v > best {
                    best = v;
                    piv = r;
                }
            }
            pivots[c] = piv;
            let span_hi = (c + 2 * kd).min(n - 1);
            if piv != c {
                for j in c..=span_hi {
                    let oc = c * width + (j + kd - c);
                    // row piv only reaches column piv + 2 kd >= span_hi
                    let op = piv * width + (j + kd - piv);
                    rows.swap(oc, op);
                }
            }
            let diag = &mut rows[c * width + kd];
            if diag.abs() < tiny {
                *diag = if *diag < 0.0 { -tiny } else { tiny };
            }
            let pivot = rows[c * width + kd];
            for r in c + 1..=last {
                let o = r * width + (c + kd - r);
                let l = rows[o] / pivot;
                multipliers[c * kd.max(1) + (r - c - 1)] = l;
                rows[o] = 0.0;
                if l != 0.0 {
                    for j in c + 1..=span_hi {
                        let u = rows[c * width + (j + kd - c)];
                        if u != 0.0 {
                            rows[r * width + (j + kd - r)] -= l * u;
                        }
                    }
                }
            }
        }
        Self {
            n,
            kd,
            width,
            rows,
            pivots,
            multipliers,
        }
    }

    fn solve(&self, b: &mut [f64]) {
        let (n, kd, w) = (self.n, self.kd, self.width);
        for c in 0..n {
            let piv = self.pivots[c];
            if piv != c {
                b.swap(c, piv);
            }
            let last = (c + kd).min(n - 1);
            let bc = b[c];
            for r in c + 1..=last {
                b[r] -= self.multipliers[c * kd.max(1) + (r - c - 1)] * bc;
            }
        }
        for c in (0..n).rev() {
            let span_hi = (c + 2 * kd).min(n - 1);
            let mut s = b[c];
            for j in c + 1..=span_hi {
                s -= self.rows[c * w + (j + kd - c)] * b[j];
            }
            b[c] = s / self.rows[c * w + kd];
        }
    }
}

fn normalize(v: &mut [f64]) -> f64 {
    let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    if norm > 0.0 {
        v.iter_mut().for_each(|x| *x /= norm);
    }
    norm
}

/// Deterministic, non-degenerate start vector.
fn start_vector(n: usize, salt: usize) -> Vec<f64> {
    let mut state = 0x9e37_79b9_7f4a_7c15u64 ^ (salt as u64).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    (0..n)
        .map(|_| {
            state ^= state << 13;
            state ^= state >> 7;
            state ^= state << 17;
            (state >> 11) as f64 / (1u64 << 53) as f64 - 0.5
        })
        .collect()
}

/// Computes unit eigenvectors of `a` for the sorted eigenvalue list `energies`
/// at positions `levels`. Vectors belonging to (near-)degenerate eigenvalues are
/// orthogonalized against each other.
pub fn eigenvectors(a: &SymBand, energies: &[f64], levels: &[usize]) -> Vec<Vec<f64>> {
    let n = a.dim();
    let scale = a.norm_inf().max(f64::MIN_POSITIVE);
    let tiny = f64::EPSILON * scale;
    let cluster_gap = 1e-7 * scale;
    let mut out: Vec<(usize, Vec<f64>)> = Vec::with_capacity(levels.len());

    let mut sorted: Vec<usize> = levels.to_vec();
    sorted.sort_unstable();
    sorted.dedup();

    for &l in &sorted {
        let lambda = energies[l];
        let lu = BandLu::factor(a, lambda, tiny);
        let partners: Vec<usize> = out
            .iter()
            .enumerate()
            .filter(|(_, (k, _))| (energies[*k] - lambda).abs() < cluster_gap)
            .map(|(pos, _)| pos)
            .collect();
        let mut x = start_vector(n, l);
        normalize(&mut x);
        for _ in 0..6 {
            lu.solve(&mut x);
            for &pos in &partners {
                let other = &out[pos].1;
                let dot: f64 = x.iter().zip(other).map(|(a, b)| a * b).sum();
                x.iter_mut().zip(other).for_each(|(a, b)| *a -= dot * b);
            }
            normalize(&mut x);
            let ax = a.matvec(&x);
            let res = ax
                .iter()
                .zip(&x)
                .map(|(p, q)| (p - lambda * q).powi(2))
                .sum::<f64>()
                .sqrt();
            if res <= 1e-12 * scale {
                break;
            }
        }
        fix_sign(&mut x);
        out.push((l, x));
    }

    levels
        .iter()
        .map(|l| {
            out.iter()
                .find(|(k, _)| k == l)
                .map(|(_, v)| v.clone())
                .expect("level computed above")
        })
        .collect()
}

/// Largest-magnitude component positive; ties resolved by the lowest index.
pub fn fix_sign(v: &mut [f64]) {
    let mut best = 0usize;
    for (i, x) in v.iter().enumerate() {
        if x.abs() > v[best].abs() {
            best = i;
        }
    }
    if v.get(best).is_some_and(|&x| x < 0.0) {
        v.iter_mut().for_each(|x| *x = -*x);
    }
}
