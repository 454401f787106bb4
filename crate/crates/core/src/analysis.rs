//! Post-processing of strength functions and time series.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::quench::{QuenchResult, TimeSeries};
use crate::spectral::EigenSystem;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SpacingRecord {
    pub l: usize,
    pub spacing: f64,
    pub mean_pop: f64,
}

/// Spacings `E_l - E_{l-1}` with the mean population of the two levels.
pub fn spacing_population_table(result: &QuenchResult) -> Vec<SpacingRecord> {
    let e = &result.final_energies;
    let w = result.weights();
    (1..e.len())
        .map(|l| SpacingRecord {
            l,
            spacing: e[l] - e[l - 1],
            mean_pop: 0.5 * (w[l] + w[l - 1]),
        })
        .collect()
}

pub fn populated_spacings(result: &QuenchResult, floor: f64) -> Vec<SpacingRecord> {
    spacing_population_table(result)
        .into_iter()
        .filter(|r| r.mean_pop >= floor)
        .collect()
}

/// `E_l ~ e0 + e1 l + e2 l^2`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct QuadraticFit {
    pub e0: f64,
    pub e1: f64,
    pub e2: f64,
    pub rms_residual: f64,
    pub points: usize,
}

impl QuadraticFit {
    /// `|e2 / e1|`.
    pub fn curvature_ratio(&self) -> f64 {
        (self.e2 / self.e1).abs()
    }
}

/// Least-squares quadratic through `values[l]` against `l = 0, 1, ...`.
pub fn fit_quadratic(values: &[f64]) -> Result<QuadraticFit> {
    let m = values.len();
    if m < 4 {
        return Err(Error::SingularFit(format!("{m} points, need at least 4")));
    }
    let a = DMatrix::from_fn(m, 3, |i, k| (i as f64).powi(k as i32));
    let y = DVector::from_column_slice(values);
    let qr = a.clone().qr();
    let r = qr.r();
    let rmax = (0..3).map(|k| r[(k, k)].abs()).fold(0.0, f64::max);
    if (0..3).any(|k| r[(k, k)].abs() <= 1e-12 * rmax) {
        return Err(Error::SingularFit("rank-deficient design matrix".into()));
    }
    let qty = qr.q().transpose() * &y;
    let coef = r
        .solve_upper_triangular(&qty)
        .ok_or_else(|| Error::SingularFit("triangular solve failed".into()))?;
    let res = &a * &coef - y;
    Ok(QuadraticFit {
        e0: coef[0],
        e1: coef[1],
        e2: coef[2],
        rms_residual: (res.norm_squared() / m as f64).sqrt(),
        points: m,
    })
}

/// Quadratic fit of the populated final energies (`s_l^2 >= floor`), re-indexed
/// contiguously after filtering.
pub fn quadratic_sampling_fit(result: &QuenchResult, floor: f64) -> Result<QuadraticFit> {
    let e: Vec<f64> = result
        .final_energies
        .iter()
        .zip(&result.amplitudes)
        .filter(|(_, s)| *s * *s >= floor)
        .map(|(e, _)| *e)
        .collect();
    fit_quadratic(&e)
}

/// Power-law fit of the revival peaks of a time series.
#[derive(Clone, Debug, PartialEq)]
pub struct EnvelopeFit {
    /// Decay exponent of the peak heights of `P`; `None` if fewer than
    /// [`MIN_PEAKS`] peaks were found.
    pub alpha: Option<f64>,
    /// The same decay expressed for the amplitude `|A| = sqrt(P)`.
    pub amplitude_alpha: Option<f64>,
    /// Coefficient of determination of the log-log fit.
    pub r_squared: Option<f64>,
    pub peaks: Vec<(f64, f64)>,
}

impl EnvelopeFit {
    pub fn is_defined(&self) -> bool {
        self.alpha.is_some()
    }
}

pub const MIN_PEAKS: usize = 5;

/// Strict local maxima inside `[t_a, t_b]`. With `min_separation`, peaks closer
/// than that to a higher peak are discarded.
pub fn local_maxima(series: &TimeSeries, t_a: f64, t_b: f64, min_separation: f64) -> Vec<(f64, f64)> {
    let (t, v) = (&series.times, &series.values);
    let mut peaks: Vec<(f64, f64)> = (1..t.len().saturating_sub(1))
        .filter(|&k| t[k] >= t_a && t[k] <= t_b && v[k] > v[k - 1] && v[k] > v[k + 1])
        .map(|k| (t[k], v[k]))
        .collect();
    if min_separation > 0.0 {
        let mut by_height = peaks.clone();
        by_height.sort_by(|a, b| b.1.total_cmp(&a.1).then(a.0.total_cmp(&b.0)));
        let mut kept: Vec<(f64, f64)> = Vec::new();
        for p in by_height {
            if kept.iter().all(|q| (q.0 - p.0).abs() >= min_separation) {
                kept.push(p);
            }
        }
        kept.sort_by(|a, b| a.0.total_cmp(&b.0));
        peaks = kept;
    }
    peaks
}

pub fn envelope_exponent(
    series: &TimeSeries,
    window: (f64, f64),
    min_separation: f64,
) -> Result<EnvelopeFit> {
    let (t_a, t_b) = window;
    if !(t_b > t_a && t_a > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "envelope window must satisfy 0 < t_a < t_b, got [{t_a}, {t_b}]"
        )));
    }
    let first = series.times.first().copied().unwrap_or(f64::NAN);
    let last = series.times.last().copied().unwrap_or(f64::NAN);
    if t_a < first || t_b > last {
        return Err(Error::InvalidParameter(format!(
            "envelope window [{t_a}, {t_b}] outside the grid [{first}, {last}]"
        )));
    }
    let peaks: Vec<(f64, f64)> = local_maxima(series, t_a, t_b, min_separation)
        .into_iter()
        .filter(|p| p.1 > 0.0)
        .collect();
    if peaks.len() < MIN_PEAKS {
        return Ok(EnvelopeFit {
            alpha: None,
            amplitude_alpha: None,
            r_squared: None,
            peaks,
        });
    }
    let xs: Vec<f64> = peaks.iter().map(|p| p.0.ln()).collect();
    let ys: Vec<f64> = peaks.iter().map(|p| p.1.ln()).collect();
    let (slope, r2) = linear_fit(&xs, &ys);
    Ok(EnvelopeFit {
        alpha: Some(-slope),
        amplitude_alpha: Some(-slope / 2.0),
        r_squared: Some(r2),
        peaks,
    })
}

fn linear_fit(x: &[f64], y: &[f64]) -> (f64, f64) {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxx: f64 = x.iter().map(|a| (a - mx).powi(2)).sum();
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let syy: f64 = y.iter().map(|b| (b - my).powi(2)).sum();
    let slope = sxy / sxx;
    let r2 = if syy > 0.0 { sxy * sxy / (sxx * syy) } else { 1.0 };
    (slope, r2)
}

/// Largest sampling step that resolves the fastest beat among the ten most
/// populated levels with 40 points per period.
pub fn beat_resolving_step(result: &QuenchResult) -> f64 {
    let w = result.weights();
    let mut order: Vec<usize> = (0..w.len()).collect();
    order.sort_by(|&a, &b| w[b].total_cmp(&w[a]));
    order.truncate(10);
    let e: Vec<f64> = order.iter().map(|&l| result.final_energies[l]).collect();
    let lo = e.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = e.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if hi > lo {
        2.0 * std::f64::consts::PI / (hi - lo) / 40.0
    } else {
        f64::INFINITY
    }
}

/// Gaussian-smoothed function tabulated on a uniform energy grid.
#[derive(Clone, Debug, PartialEq)]
pub struct Tabulated {
    pub energies: Vec<f64>,
    pub values: Vec<f64>,
}

impl Tabulated {
    /// Trapezoidal integral.
    pub fn integral(&self) -> f64 {
        self.energies
            .windows(2)
            .zip(self.values.windows(2))
            .map(|(e, v)| 0.5 * (v[0] + v[1]) * (e[1] - e[0]))
            .sum()
    }

    pub fn argmax(&self) -> Option<f64> {
        self.values
            .iter()
            .enumerate()
            .max_by(|a, b| a.1.total_cmp(b.1))
            .map(|(k, _)| self.energies[k])
    }
}

fn gauss(x: f64, width: f64) -> f64 {
    let z = x / width;
    (-0.5 * z * z).exp() / (width * (2.0 * std::f64::consts::PI).sqrt())
}

fn uniform(lo: f64, hi: f64, points: usize) -> Vec<f64> {
    (0..points)
        .map(|k| lo + (hi - lo) * k as f64 / (points - 1).max(1) as f64)
        .collect()
}

fn smooth(energies: &[f64], weights: Option<&[f64]>, width: f64, grid: &[f64]) -> Vec<f64> {
    // levels are sorted; only those within 10 widths contribute
    grid.iter()
        .map(|&x| {
            let a = energies.partition_point(|e| *e < x - 10.0 * width);
            let b = energies.partition_point(|e| *e <= x + 10.0 * width);
            (a..b)
                .map(|l| weights.map_or(1.0, |w| w[l]) * gauss(x - energies[l], width))
                .sum()
        })
        .collect()
}

/// Level density `sum_l g(E - E_l)` with a normalized Gaussian kernel.
/// `energies` must be sorted ascending.
pub fn smoothed_density(
    energies: &[f64],
    kernel_width: f64,
    range: (f64, f64),
    points: usize,
) -> Result<Tabulated> {
    if !(kernel_width > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "kernel width must be > 0, got {kernel_width}"
        )));
    }
    if !(range.1 > range.0) || points < 2 {
        return Err(Error::InvalidGrid("density grid needs hi > lo and >= 2 points".into()));
    }
    let grid = uniform(range.0, range.1, points);
    let values = smooth(energies, None, kernel_width, &grid);
    Ok(Tabulated {
        energies: grid,
        values,
    })
}

/// Energy span `[lo, hi]` of the levels with `s_l^2 >= floor`.
pub fn strength_support(result: &QuenchResult, floor: f64) -> Option<(f64, f64)> {
    let mut it = result
        .final_energies
        .iter()
        .zip(&result.amplitudes)
        .filter(|(_, s)| *s * *s >= floor)
        .map(|(e, _)| *e);
    let first = it.next()?;
    let last = it.last().unwrap_or(first);
    Some((first, last))
}

/// Five times the mean level spacing inside the strength support.
pub fn default_kernel_width(result: &QuenchResult) -> f64 {
    let (lo, hi) = strength_support(result, 1e-6).unwrap_or((0.0, 0.0));
    let inside = result
        .final_energies
        .iter()
        .filter(|e| **e >= lo && **e <= hi)
        .count();
    if inside >= 2 && hi > lo {
        5.0 * (hi - lo) / (inside - 1) as f64
    } else {
        // isolated level: fall back to the global mean spacing
        let e = &result.final_energies;
        let span = e.last().copied().unwrap_or(0.0) - e.first().copied().unwrap_or(0.0);
        5.0 * span.max(f64::MIN_POSITIVE) / (e.len().max(2) - 1) as f64
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ApproxParticipation {
    pub approx: f64,
    pub exact: f64,
}

/// `1 / N ~ integral S(E)^2 / rho(E) dE` with kernel-smoothed strength and density.
pub fn approx_participation(result: &QuenchResult, kernel_width: f64) -> Result<ApproxParticipation> {
    if !(kernel_width > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "kernel width must be > 0, got {kernel_width}"
        )));
    }
    let w = result.weights();
    let exact = 1.0 / w.iter().map(|x| x * x).sum::<f64>();
    let (lo, hi) = strength_support(result, 1e-12).ok_or_else(|| {
        Error::InvalidParameter("empty strength function".into())
    })?;
    let (a, b) = (lo - 6.0 * kernel_width, hi + 6.0 * kernel_width);
    let points = (((b - a) / kernel_width) * 20.0).ceil().clamp(200.0, 400_000.0) as usize;
    let grid = uniform(a, b, points);
    let e = &result.final_energies;
    let s = smooth(e, Some(&w), kernel_width, &grid);
    let rho = smooth(e, None, kernel_width, &grid);
    let smax = s.iter().copied().fold(0.0, f64::max);
    let mut integrand = Vec::with_capacity(points);
    for (k, (sv, rv)) in s.iter().zip(&rho).enumerate() {
        if *sv > 1e-12 * smax {
            if *rv <= f64::MIN_POSITIVE {
                return Err(Error::VanishingDensity { energy: grid[k] });
            }
            integrand.push(sv * sv / rv);
        } else {
            integrand.push(0.0);
        }
    }
    let inv = Tabulated {
        energies: grid,
        values: integrand,
    }
    .integral();
    Ok(ApproxParticipation {
        approx: 1.0 / inv,
        exact,
    })
}

/// One point of a Peres lattice.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PeresPoint {
    pub l: usize,
    pub energy: f64,
    pub expectation: f64,
    pub population: f64,
}

/// `(E_l, <l|O|l>)` for every eigenstate, with quench populations when given.
pub fn peres_lattice(
    eig: &EigenSystem,
    observable: &[f64],
    overlay: Option<&QuenchResult>,
) -> Result<Vec<PeresPoint>> {
    if let Some(r) = overlay {
        if r.dim() != eig.dim() {
            return Err(Error::InvalidParameter(format!(
                "overlay has {} levels, lattice has {}",
                r.dim(),
                eig.dim()
            )));
        }
    }
    Ok((0..eig.dim())
        .map(|l| PeresPoint {
            l,
            energy: eig.energies[l],
            expectation: eig.diagonal_expectation(l, observable),
            population: overlay.map_or(0.0, |r| r.amplitudes[l].powi(2)),
        })
        .collect())
}

/// Peres points for a subset of levels with vectors computed elsewhere.
pub fn peres_points(
    levels: &[usize],
    energies: &[f64],
    vectors: &[Vec<f64>],
    observable: &[f64],
    overlay: Option<&QuenchResult>,
) -> Vec<PeresPoint> {
    levels
        .iter()
        .zip(vectors)
        .map(|(&l, v)| PeresPoint {
            l,
            energy: energies[l],
            expectation: v.iter().zip(observable).map(|(a, o)| a * a * o).sum(),
            population: overlay.map_or(0.0, |r| r.amplitudes[l].powi(2)),
        })
        .collect()
}

/// Two dominant humps of the strength function and the dip between them.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Bimodality {
    pub lower_peak: (f64, f64),
    pub upper_peak: (f64, f64),
    pub dip: (f64, f64),
}

/// Local maxima of `s_l^2` (as `(E_l, s_l^2)`) over the levels with `s_l^2 >= floor`.
pub fn strength_maxima(result: &QuenchResult, floor: f64) -> Vec<(f64, f64)> {
    let pts: Vec<(f64, f64)> = result
        .final_energies
        .iter()
        .zip(&result.amplitudes)
        .map(|(e, s)| (*e, s * s))
        .filter(|p| p.1 >= floor)
        .collect();
    (0..pts.len())
        .filter(|&k| {
            let left = k == 0 || pts[k].1 > pts[k - 1].1;
            let right = k + 1 == pts.len() || pts[k].1 > pts[k + 1].1;
            left && right
        })
        .map(|k| pts[k])
        .collect()
}

/// The two highest local maxima of the strength function and the least
/// populated level between them; `None` for a unimodal distribution.
pub fn bimodality(result: &QuenchResult, floor: f64) -> Option<Bimodality> {
    let mut maxima = strength_maxima(result, floor);
    if maxima.len() < 2 {
        return None;
    }
    maxima.sort_by(|a, b| b.1.total_cmp(&a.1));
    let (mut a, mut b) = (maxima[0], maxima[1]);
    if a.0 > b.0 {
        std::mem::swap(&mut a, &mut b);
    }
    let dip = result
        .final_energies
        .iter()
        .zip(&result.amplitudes)
        .map(|(e, s)| (*e, s * s))
        .filter(|p| p.0 > a.0 && p.0 < b.0)
        .min_by(|x, y| x.1.total_cmp(&y.1))?;
    Some(Bimodality {
        lower_peak: a,
        upper_peak: b,
        dip,
    })
}
