//! Sudden quenches `lambda_i -> lambda_f`: strength functions, survival
//! probabilities, characteristic times and observable dynamics.

use std::f64::consts::PI;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::linalg::{self, inverse};
use crate::model::{assemble, build_basis, BasisSpec, BasisState, HamiltonianSplit, ModelParams};
use crate::spectral::EigenSystem;

/// How the pre-quench state is chosen.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum InitialState {
    /// `k`-th eigenstate (ascending) of `H(lambda_i)`.
    Eigenstate(usize),
    /// A product state `|n>|m>`; only meaningful at `lambda_i = 0`.
    Basis(BasisState),
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct QuenchSpec {
    pub lambda_i: f64,
    pub lambda_f: f64,
    pub initial: InitialState,
    pub basis: BasisSpec,
}

impl QuenchSpec {
    pub fn delta_lambda(&self) -> f64 {
        self.lambda_f - self.lambda_i
    }
}

/// Initial state resolved on a concrete basis.
#[derive(Clone, Debug)]
pub struct PreparedState {
    pub lambda_i: f64,
    pub initial: InitialState,
    pub vector: Vec<f64>,
    /// `<psi|H(lambda_i)|psi>`.
    pub energy: f64,
}

/// Strength function of one quench.
///
/// `amplitudes[l] = <phi_l|psi>` over every final eigenstate. The overall sign
/// of each `phi_l` is whatever the eigensolver produced, so only `s_l^2` and
/// sign-insensitive combinations are meaningful; [`populated_states`] returns
/// amplitudes against sign-fixed eigenvectors.
#[derive(Clone, Debug)]
pub struct QuenchResult {
    pub spec: QuenchSpec,
    pub amplitudes: Vec<f64>,
    pub final_energies: Vec<f64>,
    pub initial_energy: f64,
    pub initial_state: Vec<f64>,
    /// `<psi|V|psi>`, the slope of the initial level.
    pub mean_v: f64,
    /// `<psi|V^2|psi> - <psi|V|psi>^2`.
    pub dispersion_v: f64,
    /// `omega0 j`.
    pub energy_scale: f64,
    /// Infinity norm of `H(lambda_f)`.
    pub final_norm: f64,
}

impl QuenchResult {
    pub fn dim(&self) -> usize {
        self.amplitudes.len()
    }

    pub fn weights(&self) -> Vec<f64> {
        self.amplitudes.iter().map(|s| s * s).collect()
    }

    /// Index and weight of the most populated level.
    pub fn dominant_level(&self) -> (usize, f64) {
        self.amplitudes
            .iter()
            .enumerate()
            .map(|(l, s)| (l, s * s))
            .fold((0, f64::NEG_INFINITY), |a, b| if b.1 > a.1 { b } else { a })
    }
}

pub fn prepare_state(
    split: &HamiltonianSplit,
    lambda_i: f64,
    initial: InitialState,
) -> Result<PreparedState> {
    match initial {
        InitialState::Basis(state) => {
            if lambda_i != 0.0 {
                return Err(Error::ExplicitStateNeedsZeroLambda(lambda_i));
            }
            let vector = split.basis.unit_vector(state)?;
            let k = split.basis.index_of(state).expect("checked above");
            Ok(PreparedState {
                lambda_i,
                initial,
                vector,
                energy: split.h0[k],
            })
        }
        InitialState::Eigenstate(k) => {
            let dim = split.dim();
            if k >= dim {
                return Err(Error::IndexOutOfRange { index: k, dim });
            }
            let h = split.hamiltonian(lambda_i);
            let energies = linalg::band_eigenvalues(&h)?;
            let tol = 1e-10 * h.norm_inf().max(1.0);
            let mut first = k;
            while first > 0 && energies[k] - energies[first - 1] <= tol {
                first -= 1;
            }
            let mut last = k;
            while last + 1 < dim && energies[last + 1] - energies[k] <= tol {
                last += 1;
            }
            if first != last {
                return Err(Error::DegenerateInitialState {
                    index: k,
                    lambda: lambda_i,
                    first,
                    last,
                });
            }
            let vector = inverse::eigenvectors(&h, &energies, &[k]).remove(0);
            Ok(PreparedState {
                lambda_i,
                initial,
                vector,
                energy: energies[k],
            })
        }
    }
}

/// Builds the sector, prepares the initial state and projects it onto the
/// eigenstates of `H(lambda_f)`.
pub fn run_quench(params: &ModelParams, spec: &QuenchSpec) -> Result<QuenchResult> {
    let basis = build_basis(params, spec.basis)?;
    let split = assemble(params, &basis);
    run_quench_on(params, &split, spec)
}

pub fn run_quench_on(
    params: &ModelParams,
    split: &HamiltonianSplit,
    spec: &QuenchSpec,
) -> Result<QuenchResult> {
    let state = prepare_state(split, spec.lambda_i, spec.initial)?;
    quench_prepared(params, split, &state, spec.lambda_f)
}

pub fn quench_prepared(
    params: &ModelParams,
    split: &HamiltonianSplit,
    state: &PreparedState,
    lambda_f: f64,
) -> Result<QuenchResult> {
    let h = split.hamiltonian(lambda_f);
    let spectrum = linalg::band_spectrum(&h, vec![state.vector.clone()])?;
    let vpsi = split.v.matvec(&state.vector);
    let mean_v: f64 = vpsi.iter().zip(&state.vector).map(|(a, b)| a * b).sum();
    let sq: f64 = vpsi.iter().map(|a| a * a).sum();
    Ok(QuenchResult {
        spec: QuenchSpec {
            lambda_i: state.lambda_i,
            lambda_f,
            initial: state.initial,
            basis: split.basis.spec(),
        },
        amplitudes: spectrum.projections.into_iter().next().unwrap_or_default(),
        final_energies: spectrum.energies,
        initial_energy: state.energy,
        initial_state: state.vector.clone(),
        mean_v,
        dispersion_v: (sq - mean_v * mean_v).max(0.0),
        energy_scale: params.energy_scale(),
        final_norm: h.norm_inf(),
    })
}

/// Quenches from one initial state to every `lambda_f`; results keep the input order.
pub fn run_sweep(
    params: &ModelParams,
    split: &HamiltonianSplit,
    state: &PreparedState,
    lambda_fs: &[f64],
) -> Result<Vec<QuenchResult>> {
    lambda_fs
        .par_iter()
        .map(|&lf| quench_prepared(params, split, state, lf))
        .collect()
}

// ---------------------------------------------------------------------------
// time grids and series

/// Strictly increasing, non-negative sample times.
#[derive(Clone, Debug, PartialEq)]
pub struct TimeGrid {
    times: Vec<f64>,
}

impl TimeGrid {
    pub fn from_times(times: Vec<f64>) -> Result<Self> {
        crate::spectral::check_grid(&times)?;
        if times[0] < 0.0 {
            return Err(Error::InvalidGrid("negative time".into()));
        }
        Ok(Self { times })
    }

    /// `points` logarithmically spaced samples on `[t_min, t_max]`, optionally preceded by `t = 0`.
    pub fn log(t_min: f64, t_max: f64, points: usize, with_zero: bool) -> Result<Self> {
        if !(t_min > 0.0 && t_max > t_min && points >= 2) {
            return Err(Error::InvalidGrid(format!(
                "log grid needs 0 < t_min < t_max and >= 2 points, got [{t_min}, {t_max}] x {points}"
            )));
        }
        let (a, b) = (t_min.ln(), t_max.ln());
        let mut times = Vec::with_capacity(points + 1);
        if with_zero {
            times.push(0.0);
        }
        for k in 0..points {
            let x = a + (b - a) * k as f64 / (points - 1) as f64;
            times.push(x.exp());
        }
        Self::from_times(times)
    }

    pub fn linear(t_a: f64, t_b: f64, points: usize) -> Result<Self> {
        if !(t_b > t_a && t_a >= 0.0 && points >= 2) {
            return Err(Error::InvalidGrid(format!(
                "linear grid needs 0 <= t_a < t_b and >= 2 points, got [{t_a}, {t_b}] x {points}"
            )));
        }
        let times = (0..points)
            .map(|k| t_a + (t_b - t_a) * k as f64 / (points - 1) as f64)
            .collect();
        Self::from_times(times)
    }

    /// Logarithmic grid from `1e-2 t_s` to `1e3 t_H` with 2000 points plus `t = 0`.
    /// Falls back to `[0, 1]` for stationary initial states.
    pub fn default_for(scalars: &QuenchScalars) -> Self {
        let lo = 1e-2 * scalars.t_s;
        let hi = scalars.t_h.map_or(f64::NAN, |t| 1e3 * t);
        Self::log(lo, hi, 2000, true).unwrap_or_else(|_| {
            Self::linear(0.0, 1.0, 2).expect("valid fallback grid")
        })
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct TimeSeries {
    pub times: Vec<f64>,
    pub values: Vec<f64>,
}

impl TimeSeries {
    /// Plain sample mean.
    pub fn mean(&self) -> f64 {
        self.values.iter().sum::<f64>() / self.values.len() as f64
    }

    /// First sample time from which every later value stays within `tol`
    /// (relative) of `target`.
    pub fn settling_time(&self, target: f64, tol: f64) -> Option<f64> {
        let band = tol * target.abs();
        let mut idx = None;
        for (k, v) in self.values.iter().enumerate().rev() {
            if (v - target).abs() > band {
                break;
            }
            idx = Some(k);
        }
        idx.map(|k| self.times[k])
    }

    /// Time average over `[t_a, t_b]` (trapezoid rule on the samples, with
    /// linear interpolation at the ends).
    pub fn window_mean(&self, t_a: f64, t_b: f64) -> Option<f64> {
        let (t, v) = (&self.times, &self.values);
        if !(t_b > t_a) || t.is_empty() || t_a < t[0] || t_b > t[t.len() - 1] {
            return None;
        }
        let at = |x: f64| {
            let k = t.partition_point(|&s| s <= x).clamp(1, t.len() - 1);
            let f = (x - t[k - 1]) / (t[k] - t[k - 1]);
            v[k - 1] + f * (v[k] - v[k - 1])
        };
        let mut pts = vec![(t_a, at(t_a))];
        pts.extend(t.iter().zip(v).filter(|(s, _)| **s > t_a && **s < t_b).map(|(s, x)| (*s, *x)));
        pts.push((t_b, at(t_b)));
        let area: f64 = pts.windows(2).map(|w| 0.5 * (w[0].1 + w[1].1) * (w[1].0 - w[0].0)).sum();
        Some(area / (t_b - t_a))
    }

    /// Earliest sample time `t` such that the running average over
    /// `[t', factor t']` lies within `tol` (relative) of `target` for every
    /// sample `t' >= t` whose window fits in the series. Fast oscillations
    /// are averaged out; slow drifts and revivals are not.
    pub fn smoothed_settling_time(&self, target: f64, tol: f64, factor: f64) -> Option<f64> {
        let band = tol * target.abs();
        let end = *self.times.last()?;
        let mut found = None;
        for &t in self.times.iter().rev() {
            if t <= 0.0 || factor * t > end {
                continue;
            }
            let m = self.window_mean(t, factor * t)?;
            if (m - target).abs() > band {
                break;
            }
            found = Some(t);
        }
        found
    }
}

// ---------------------------------------------------------------------------
// survival probability

fn centroid(energies: &[f64], weights: &[f64]) -> f64 {
    energies.iter().zip(weights).map(|(e, w)| e * w).sum::<f64>() / weights.iter().sum::<f64>()
}

/// `P(t) = |sum_l s_l^2 exp(-i E_l t)|^2` by direct summation.
pub fn survival_probability(result: &QuenchResult, grid: &TimeGrid) -> TimeSeries {
    let w = result.weights();
    let e0 = centroid(&result.final_energies, &w);
    let shifted: Vec<f64> = result.final_energies.iter().map(|e| e - e0).collect();
    let values = grid
        .times()
        .par_iter()
        .map(|&t| {
            let (mut re, mut im) = (0.0, 0.0);
            for (e, wl) in shifted.iter().zip(&w) {
                let (s, c) = (e * t).sin_cos();
                re += wl * c;
                im -= wl * s;
            }
            re * re + im * im
        })
        .collect();
    TimeSeries {
        times: grid.times().to_vec(),
        values,
    }
}

/// Cumulative weight discarded by the pair-sum route.
pub const COSINE_DROP_MASS: f64 = 1e-13;

/// `P(t) = 1 / N + 2 sum_{l < l'} s_l^2 s_l'^2 cos((E_l - E_l') t)`.
///
/// The pair sum skips the least populated levels whose weights add up to at
/// most [`COSINE_DROP_MASS`]; the diagonal term uses every level.
pub fn survival_cosine(result: &QuenchResult, grid: &TimeGrid) -> TimeSeries {
    let w = result.weights();
    let diag: f64 = w.iter().map(|x| x * x).sum();
    let mut order: Vec<usize> = (0..w.len()).collect();
    order.sort_by(|&a, &b| w[a].total_cmp(&w[b]));
    let mut removed = 0.0;
    let mut cut = 0;
    while cut < order.len() && removed + w[order[cut]] <= COSINE_DROP_MASS {
        removed += w[order[cut]];
        cut += 1;
    }
    let mut kept: Vec<usize> = order[cut..].to_vec();
    kept.sort_unstable();
    let e: Vec<f64> = kept.iter().map(|&l| result.final_energies[l]).collect();
    let wk: Vec<f64> = kept.iter().map(|&l| w[l]).collect();
    let values = grid
        .times()
        .par_iter()
        .map(|&t| {
            let mut s = 0.0;
            for a in 0..e.len() {
                let mut inner = 0.0;
                for b in a + 1..e.len() {
                    inner += wk[b] * ((e[a] - e[b]) * t).cos();
                }
                s += wk[a] * inner;
            }
            diag + 2.0 * s
        })
        .collect();
    TimeSeries {
        times: grid.times().to_vec(),
        values,
    }
}

/// Discrete strength function: levels with equal energy merged into one atom.
pub fn strength_atoms(result: &QuenchResult) -> Vec<(f64, f64)> {
    let w = result.weights();
    let tol = 4.0 * f64::EPSILON * result.final_norm.max(1.0);
    let mut atoms: Vec<(f64, f64)> = Vec::new();
    for (e, wl) in result.final_energies.iter().zip(&w) {
        match atoms.last_mut() {
            Some(last) if (e - last.0).abs() <= tol => last.1 += wl,
            _ => atoms.push((*e, *wl)),
        }
    }
    atoms
}

/// `P(t) = |integral S(E) exp(-i E t) dE|^2` over the atomic strength function,
/// summed with compensation.
pub fn survival_via_fourier(result: &QuenchResult, grid: &TimeGrid) -> TimeSeries {
    let atoms = strength_atoms(result);
    let mass: f64 = atoms.iter().map(|a| a.1).sum();
    let e0 = atoms.iter().map(|a| a.0 * a.1).sum::<f64>() / mass;
    let values = grid
        .times()
        .par_iter()
        .map(|&t| {
            let (mut re, mut im) = (Kahan::default(), Kahan::default());
            for &(e, s) in &atoms {
                let phase = (e - e0) * t;
                re.add(s * phase.cos());
                im.add(-s * phase.sin());
            }
            let (re, im) = (re.value(), im.value());
            re * re + im * im
        })
        .collect();
    TimeSeries {
        times: grid.times().to_vec(),
        values,
    }
}

#[derive(Default)]
struct Kahan {
    sum: f64,
    carry: f64,
}

impl Kahan {
    fn add(&mut self, x: f64) {
        let y = x - self.carry;
        let t = self.sum + y;
        self.carry = (t - self.sum) - y;
        self.sum = t;
    }

    fn value(&self) -> f64 {
        self.sum
    }
}

/// `exp(-t^2 / t_s^2)`.
pub fn gaussian_reference(t_s: f64, grid: &TimeGrid) -> TimeSeries {
    TimeSeries {
        times: grid.times().to_vec(),
        values: grid
            .times()
            .iter()
            .map(|t| (-(t / t_s).powi(2)).exp())
            .collect(),
    }
}

/// Binned autocorrelation of the strength function; bin `k` collects pair
/// distances in `[(k - 1/2) w, (k + 1/2) w)`.
#[derive(Clone, Debug, PartialEq)]
pub struct Autocorrelation {
    pub bin_width: f64,
    /// Bin index of the first mass entry (negative).
    pub first_bin: i64,
    pub masses: Vec<f64>,
}

impl Autocorrelation {
    pub fn centers(&self) -> Vec<f64> {
        (0..self.masses.len())
            .map(|k| (self.first_bin + k as i64) as f64 * self.bin_width)
            .collect()
    }

    pub fn mass_at(&self, bin: i64) -> f64 {
        let k = bin - self.first_bin;
        if k < 0 {
            return 0.0;
        }
        self.masses.get(k as usize).copied().unwrap_or(0.0)
    }

    /// `P(t) = integral C(E) exp(i E t) dE` over bin centers.
    pub fn survival(&self, t: f64) -> f64 {
        self.centers()
            .iter()
            .zip(&self.masses)
            .map(|(e, m)| m * (e * t).cos())
            .sum()
    }
}

pub fn autocorrelation(result: &QuenchResult, bin_width: f64) -> Result<Autocorrelation> {
    if !(bin_width > 0.0 && bin_width.is_finite()) {
        return Err(Error::InvalidParameter(format!(
            "bin width must be > 0, got {bin_width}"
        )));
    }
    let w = result.weights();
    let lv: Vec<(f64, f64)> = result
        .final_energies
        .iter()
        .zip(&w)
        .filter(|(_, x)| **x > 0.0)
        .map(|(e, x)| (*e, *x))
        .collect();
    let (lo, hi) = match (lv.first(), lv.last()) {
        (Some(a), Some(b)) => (a.0, b.0),
        _ => {
            return Ok(Autocorrelation {
                bin_width,
                first_bin: 0,
                masses: vec![],
            })
        }
    };
    let kmax = ((hi - lo) / bin_width).round() as i64 + 1;
    let mut masses = vec![0.0; (2 * kmax + 1) as usize];
    for &(ea, wa) in &lv {
        for &(eb, wb) in &lv {
            let k = ((eb - ea) / bin_width).round() as i64;
            masses[(k + kmax) as usize] += wa * wb;
        }
    }
    Ok(Autocorrelation {
        bin_width,
        first_bin: -kmax,
        masses,
    })
}

// ---------------------------------------------------------------------------
// scalar characteristics

/// Population threshold defining the reduced level set of the modified Heisenberg time.
pub const MODIFIED_THRESHOLD: f64 = 0.005;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct QuenchScalars {
    pub mean_ef: f64,
    pub var_ef: f64,
    pub t_s: f64,
    /// `None` for a single final level.
    pub t_h: Option<f64>,
    /// Levels with `s_l^2 >= threshold`.
    pub t_h_mod: Option<f64>,
    /// Alternative reading: least populated levels removed up to cumulative `threshold`.
    pub t_h_mod_cumulative: Option<f64>,
    pub retained_mod: usize,
    pub participation: f64,
    pub p_infinity: f64,
    pub p_variance: f64,
    pub mean_v: f64,
    pub initial_energy: f64,
}

/// `2 pi / sum_l (w_{l+1} + w_l) / 2 (E_{l+1} - E_l)` over the given sorted levels.
pub fn heisenberg_time(energies: &[f64], weights: &[f64]) -> Option<f64> {
    if energies.len() < 2 {
        return None;
    }
    let s: f64 = (0..energies.len() - 1)
        .map(|l| 0.5 * (weights[l + 1] + weights[l]) * (energies[l + 1] - energies[l]))
        .sum();
    (s > 0.0).then(|| 2.0 * PI / s)
}

pub fn scalars(result: &QuenchResult) -> QuenchScalars {
    scalars_with(result, MODIFIED_THRESHOLD)
}

pub fn scalars_with(result: &QuenchResult, threshold: f64) -> QuenchScalars {
    let w = result.weights();
    let e = &result.final_energies;
    let total: f64 = w.iter().sum();
    let mean_ef = e.iter().zip(&w).map(|(a, b)| a * b).sum::<f64>() / total;
    let var_ef = e
        .iter()
        .zip(&w)
        .map(|(a, b)| b * (a - mean_ef).powi(2))
        .sum::<f64>()
        / total;
    let sum2: f64 = w.iter().map(|x| x * x).sum();
    let sum4: f64 = w.iter().map(|x| x.powi(4)).sum();
    let participation = 1.0 / sum2;

    let (kept_e, kept_w): (Vec<f64>, Vec<f64>) = e
        .iter()
        .zip(&w)
        .filter(|(_, x)| **x >= threshold)
        .map(|(a, b)| (*a, *b))
        .unzip();

    let mut order: Vec<usize> = (0..w.len()).collect();
    order.sort_by(|&a, &b| w[a].total_cmp(&w[b]).then(a.cmp(&b)));
    let mut removed = 0.0;
    let mut cut = 0;
    while cut < order.len() && removed + w[order[cut]] <= threshold {
        removed += w[order[cut]];
        cut += 1;
    }
    let mut rest: Vec<usize> = order[cut..].to_vec();
    rest.sort_unstable();
    let ce: Vec<f64> = rest.iter().map(|&l| e[l]).collect();
    let cw: Vec<f64> = rest.iter().map(|&l| w[l]).collect();

    QuenchScalars {
        mean_ef,
        var_ef,
        t_s: 1.0 / var_ef.sqrt(),
        t_h: heisenberg_time(e, &w),
        t_h_mod: heisenberg_time(&kept_e, &kept_w),
        t_h_mod_cumulative: heisenberg_time(&ce, &cw),
        retained_mod: kept_e.len(),
        participation,
        p_infinity: sum2,
        p_variance: (sum2 * sum2 - sum4).max(0.0),
        mean_v: result.mean_v,
        initial_energy: result.initial_energy,
    }
}

/// Coefficient `c` of `1 - P(t) = c t^2 + d t^4`, fitted on `t <= fraction * t_s`.
pub fn short_time_coefficient(result: &QuenchResult, t_s: f64, fraction: f64) -> Result<f64> {
    let t_max = fraction * t_s;
    let grid = TimeGrid::linear(0.1 * t_max, t_max, 24)?;
    let p = survival_probability(result, &grid);
    // least squares for y / t^2 = c + d t^2
    let (mut sx, mut sy, mut sxx, mut sxy) = (0.0, 0.0, 0.0, 0.0);
    let m = grid.len() as f64;
    for (t, v) in p.times.iter().zip(&p.values) {
        let x = t * t;
        let y = (1.0 - v) / x;
        sx += x;
        sy += y;
        sxx += x * x;
        sxy += x * y;
    }
    let det = m * sxx - sx * sx;
    if det.abs() <= f64::EPSILON * m * sxx {
        return Err(Error::SingularFit("short-time window too narrow".into()));
    }
    Ok((sxx * sy - sx * sxy) / det)
}

// ---------------------------------------------------------------------------
// observables

/// Final eigenstates above a population floor, with sign-fixed eigenvectors.
#[derive(Clone, Debug)]
pub struct PopulatedStates {
    pub levels: Vec<usize>,
    pub energies: Vec<f64>,
    /// `<phi_l|psi>` against the vectors below.
    pub amplitudes: Vec<f64>,
    pub vectors: Vec<Vec<f64>>,
    /// Total weight of the levels below the floor.
    pub dropped_weight: f64,
    pub floor: f64,
}

fn check_floor(floor: f64) -> Result<()> {
    if !(0.0..1.0).contains(&floor) {
        return Err(Error::InvalidParameter(format!(
            "population floor must lie in [0, 1), got {floor}"
        )));
    }
    Ok(())
}

fn populated_levels(result: &QuenchResult, floor: f64) -> (Vec<usize>, f64) {
    let mut dropped = 0.0;
    let mut levels = Vec::new();
    for (l, s) in result.amplitudes.iter().enumerate() {
        let w = s * s;
        if w >= floor && w > 0.0 {
            levels.push(l);
        } else {
            dropped += w;
        }
    }
    (levels, dropped)
}

fn finish_states(
    result: &QuenchResult,
    levels: Vec<usize>,
    vectors: Vec<Vec<f64>>,
    dropped: f64,
    floor: f64,
) -> PopulatedStates {
    let amplitudes = vectors
        .iter()
        .map(|v| v.iter().zip(&result.initial_state).map(|(a, b)| a * b).sum())
        .collect();
    PopulatedStates {
        energies: levels.iter().map(|&l| result.final_energies[l]).collect(),
        levels,
        amplitudes,
        vectors,
        dropped_weight: dropped,
        floor,
    }
}

/// Eigenvectors of the populated final levels by inverse iteration.
pub fn populated_states(
    split: &HamiltonianSplit,
    result: &QuenchResult,
    floor: f64,
) -> Result<PopulatedStates> {
    check_floor(floor)?;
    let (levels, dropped) = populated_levels(result, floor);
    let h = split.hamiltonian(result.spec.lambda_f);
    let vectors = linalg::band_eigenvectors_map(&h, &result.final_energies, &levels, |_, v| v);
    Ok(finish_states(result, levels, vectors, dropped, floor))
}

/// Same as [`populated_states`] with vectors taken from a full eigensystem.
pub fn populated_states_dense(
    eig: &EigenSystem,
    result: &QuenchResult,
    floor: f64,
) -> Result<PopulatedStates> {
    check_floor(floor)?;
    let (levels, dropped) = populated_levels(result, floor);
    let vectors = levels.iter().map(|&l| eig.vector(l)).collect();
    Ok(finish_states(result, levels, vectors, dropped, floor))
}

#[derive(Clone, Debug)]
pub struct ObservableEvolution {
    pub series: TimeSeries,
    /// Infinite-time average `sum_l s_l^2 O_ll` over the populated levels.
    pub saturation: f64,
    /// `<psi|O|psi>` from the full initial vector.
    pub initial_expectation: f64,
    /// Bound on the error caused by the population floor:
    /// `max|O| (2 sqrt(w_d) + w_d)` with `w_d` the dropped weight.
    pub error_bound: f64,
}

/// Time dependence of a diagonal observable after the quench.
pub fn observable_evolution(
    states: &PopulatedStates,
    initial_state: &[f64],
    observable: &[f64],
    grid: &TimeGrid,
) -> Result<ObservableEvolution> {
    check_floor(states.floor)?;
    let l = states.levels.len();
    // O in the populated eigenbasis
    let mut o = vec![0.0; l * l];
    let weighted: Vec<Vec<f64>> = states
        .vectors
        .iter()
        .map(|v| v.iter().zip(observable).map(|(a, b)| a * b).collect())
        .collect();
    for a in 0..l {
        for b in a..l {
            let x: f64 = weighted[a].iter().zip(&states.vectors[b]).map(|(p, q)| p * q).sum();
            o[a * l + b] = x;
            o[b * l + a] = x;
        }
    }
    let s = &states.amplitudes;
    let e = &states.energies;
    let saturation: f64 = (0..l).map(|a| s[a] * s[a] * o[a * l + a]).sum();
    let e0 = if l > 0 {
        e.iter().sum::<f64>() / l as f64
    } else {
        0.0
    };
    let values = grid
        .times()
        .par_iter()
        .map(|&t| {
            let (re, im): (Vec<f64>, Vec<f64>) = (0..l)
                .map(|a| {
                    let (sn, cs) = ((e[a] - e0) * t).sin_cos();
                    (s[a] * cs, -s[a] * sn)
                })
                .unzip();
            let mut total = 0.0;
            for a in 0..l {
                let row = &o[a * l..(a + 1) * l];
                let (mut ur, mut ui) = (0.0, 0.0);
                for b in 0..l {
                    ur += row[b] * re[b];
                    ui += row[b] * im[b];
                }
                total += re[a] * ur + im[a] * ui;
            }
            total
        })
        .collect();
    let initial_expectation = initial_state
        .iter()
        .zip(observable)
        .map(|(p, q)| p * p * q)
        .sum();
    let omax = observable.iter().fold(0.0f64, |m, x| m.max(x.abs()));
    let wd = states.dropped_weight;
    Ok(ObservableEvolution {
        series: TimeSeries {
            times: grid.times().to_vec(),
            values,
        },
        saturation,
        initial_expectation,
        error_bound: omax * (2.0 * wd.sqrt() + wd),
    })
}

// ---------------------------------------------------------------------------
// truncation audit

/// Weight on the photon-number edge `n > n_max - width`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TruncationReport {
    pub n_max: Option<u32>,
    pub initial_edge_weight: f64,
    /// `sum_l s_l^2 |P_edge phi_l|^2` over the populated levels.
    pub ensemble_edge_weight: f64,
    pub levels_checked: usize,
    pub threshold: f64,
}

/// Edge weight allowed by the audit.
pub const TRUNCATION_THRESHOLD: f64 = 1e-8;
/// Boson numbers within this distance of `n_max` count as the edge.
pub const EDGE_WIDTH: u32 = 3;

impl TruncationReport {
    pub fn passes(&self) -> bool {
        self.initial_edge_weight < self.threshold && self.ensemble_edge_weight < self.threshold
    }

    pub fn check(&self) -> Result<()> {
        if self.passes() {
            Ok(())
        } else {
            Err(Error::Truncation {
                n_max: self.n_max.unwrap_or(0),
                weight: self.initial_edge_weight.max(self.ensemble_edge_weight),
            })
        }
    }
}

pub fn truncation_audit(split: &HamiltonianSplit, result: &QuenchResult, states: &PopulatedStates) -> TruncationReport {
    let n_max = match split.basis.spec() {
        BasisSpec::FullParity { n_max, .. } | BasisSpec::Full { n_max } => Some(n_max),
        BasisSpec::MSubspace { .. } => None,
    };
    let Some(nm) = n_max else {
        return TruncationReport {
            n_max,
            initial_edge_weight: 0.0,
            ensemble_edge_weight: 0.0,
            levels_checked: 0,
            threshold: TRUNCATION_THRESHOLD,
        };
    };
    let edge: Vec<bool> = split
        .basis
        .states()
        .iter()
        .map(|s| s.n + EDGE_WIDTH > nm)
        .collect();
    let edge_weight = |v: &[f64]| -> f64 {
        v.iter()
            .zip(&edge)
            .filter(|(_, e)| **e)
            .map(|(x, _)| x * x)
            .sum()
    };
    let ensemble = states
        .vectors
        .iter()
        .zip(&states.amplitudes)
        .map(|(v, s)| s * s * edge_weight(v))
        .sum();
    TruncationReport {
        n_max,
        initial_edge_weight: edge_weight(&result.initial_state),
        ensemble_edge_weight: ensemble,
        levels_checked: states.levels.len(),
        threshold: TRUNCATION_THRESHOLD,
    }
}
