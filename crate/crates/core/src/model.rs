//! Extended Dicke Hamiltonian: parameters, basis enumeration and matrix assembly.
//!
//! The Hamiltonian is
//!
//! ```text
//! H = omega b^dag b + omega0 J_z
//!     + lambda / sqrt(N) [ b^dag J_- + b J_+ + delta (b^dag J_+ + b J_-) ]
//! ```
//!
//! on the fully symmetric `j = N / 2` atomic multiplet. Basis states `|n>|m>`
//! carry the boson number `n` and the quasi-spin projection `m`, stored as the
//! integer `2m` so that half-integer `j` needs no floating-point labels.

use std::fmt;

use crate::error::{Error, Result};
use crate::linalg::SymBand;

/// Physical constants of one model instance plus the photon truncation.
///
/// The coupling `lambda` is deliberately absent: one assembled
/// [`HamiltonianSplit`] serves every `lambda`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ModelParams {
    pub omega: f64,
    pub omega0: f64,
    pub delta: f64,
    pub two_j: u32,
    pub n_max: u32,
}

impl ModelParams {
    pub fn new(omega: f64, omega0: f64, delta: f64, two_j: u32, n_max: u32) -> Result<Self> {
        let p = Self {
            omega,
            omega0,
            delta,
            two_j,
            n_max,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.omega.is_finite() && self.omega > 0.0) {
            return Err(Error::InvalidParameter(format!("omega must be > 0, got {}", self.omega)));
        }
        if !(self.omega0.is_finite() && self.omega0 > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "omega0 must be > 0, got {}",
                self.omega0
            )));
        }
        if !(0.0..=1.0).contains(&self.delta) {
            return Err(Error::InvalidParameter(format!(
                "delta must lie in [0, 1], got {}",
                self.delta
            )));
        }
        if self.two_j == 0 {
            return Err(Error::InvalidParameter("2j must be at least 1".into()));
        }
        Ok(())
    }

    /// Quasi-spin `j = N / 2`.
    pub fn j(&self) -> f64 {
        f64::from(self.two_j) / 2.0
    }

    /// Number of atoms `N = 2j`.
    pub fn atoms(&self) -> u32 {
        self.two_j
    }

    /// Energy unit `omega0 * j` used for scaled outputs.
    pub fn energy_scale(&self) -> f64 {
        self.omega0 * self.j()
    }

    pub fn is_resonant(&self) -> bool {
        (self.omega - self.omega0).abs() <= 1e-12 * self.omega.max(self.omega0)
    }
}

/// One product state `|n>|m>`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct BasisState {
    pub n: u32,
    pub two_m: i32,
}

impl BasisState {
    pub fn m(&self) -> f64 {
        f64::from(self.two_m) / 2.0
    }

    /// Number of excited atoms `n* = m + j`.
    pub fn excited_atoms(&self, two_j: u32) -> u32 {
        ((self.two_m + two_j as i32) / 2) as u32
    }

    /// Value of the conserved quantity `M = n + m + j` (at `delta = 0`).
    pub fn excitations(&self, two_j: u32) -> u32 {
        self.n + self.excited_atoms(two_j)
    }
}

impl fmt::Display for BasisState {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.two_m % 2 == 0 {
            write!(f, "|n={}, m={}>", self.n, self.two_m / 2)
        } else {
            write!(f, "|n={}, m={}/2>", self.n, self.two_m)
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Parity {
    Even,
    Odd,
}

impl Parity {
    pub fn of(excitations: u32) -> Self {
        if excitations % 2 == 0 {
            Parity::Even
        } else {
            Parity::Odd
        }
    }
}

impl fmt::Display for Parity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Parity::Even => "even",
            Parity::Odd => "odd",
        })
    }
}

/// Which Hilbert-space sector to build.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum BasisSpec {
    /// States with `n <= n_max` and `(-1)^M` fixed; conserved for every `delta`.
    FullParity { parity: Parity, n_max: u32 },
    /// States with `n + m + j = M`; conserved only at `delta = 0`, never truncated.
    MSubspace { m_total: u32 },
    /// Both parities, `n <= n_max`. Used for symmetry checks.
    Full { n_max: u32 },
}

impl fmt::Display for BasisSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            BasisSpec::FullParity { parity, n_max } => write!(f, "parity={parity} n_max={n_max}"),
            BasisSpec::MSubspace { m_total } => write!(f, "M={m_total}"),
            BasisSpec::Full { n_max } => write!(f, "full n_max={n_max}"),
        }
    }
}

/// Ordered basis (lexicographic in `n`, then `m` ascending).
#[derive(Clone, Debug, PartialEq)]
pub struct Basis {
    spec: BasisSpec,
    two_j: u32,
    states: Vec<BasisState>,
}

impl Basis {
    pub fn spec(&self) -> BasisSpec {
        self.spec
    }

    pub fn two_j(&self) -> u32 {
        self.two_j
    }

    pub fn states(&self) -> &[BasisState] {
        &self.states
    }

    pub fn len(&self) -> usize {
        self.states.len()
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }

    pub fn index_of(&self, state: BasisState) -> Option<usize> {
        self.states.binary_search(&state).ok()
    }

    /// Largest boson number present in the basis.
    pub fn max_n(&self) -> u32 {
        self.states.iter().map(|s| s.n).max().unwrap_or(0)
    }

    /// Unit vector on the given basis state.
    pub fn unit_vector(&self, state: BasisState) -> Result<Vec<f64>> {
        let k = self.index_of(state).ok_or(Error::StateNotInBasis {
            n: state.n,
            two_m: state.two_m,
        })?;
        let mut v = vec![0.0; self.len()];
        v[k] = 1.0;
        Ok(v)
    }
}

pub fn build_basis(params: &ModelParams, spec: BasisSpec) -> Result<Basis> {
    params.validate()?;
    let two_j = params.two_j;
    let tj = two_j as i32;
    let mut states = Vec::new();
    match spec {
        BasisSpec::MSubspace { m_total } => {
            let lo = m_total.saturating_sub(two_j);
            for n in lo..=m_total {
                let excited = (m_total - n) as i32;
                states.push(BasisState {
                    n,
                    two_m: 2 * excited - tj,
                });
            }
        }
        BasisSpec::FullParity { parity, n_max } => {
            for n in 0..=n_max {
                for two_m in (-tj..=tj).step_by(2) {
                    let s = BasisState { n, two_m };
                    if Parity::of(s.excitations(two_j)) == parity {
                        states.push(s);
                    }
                }
            }
        }
        BasisSpec::Full { n_max } => {
            for n in 0..=n_max {
                for two_m in (-tj..=tj).step_by(2) {
                    states.push(BasisState { n, two_m });
                }
            }
        }
    }
    if states.is_empty() {
        return Err(Error::EmptyBasis(format!("{spec} with 2j = {two_j}")));
    }
    Ok(Basis {
        spec,
        two_j,
        states,
    })
}

/// `<m + 1| J_+ |m>` for the multiplet `j`, with `2m` given.
fn j_plus(two_j: u32, two_m: i32) -> f64 {
    let j = f64::from(two_j) / 2.0;
    let m = f64::from(two_m) / 2.0;
    (j * (j + 1.0) - m * (m + 1.0)).max(0.0).sqrt()
}

/// Free and interaction parts of `H(lambda) = h0 + lambda v` on one basis.
#[derive(Clone, Debug)]
pub struct HamiltonianSplit {
    pub basis: Basis,
    /// Diagonal of `omega b^dag b + omega0 J_z`.
    pub h0: Vec<f64>,
    /// `[b^dag J_- + b J_+ + delta (b^dag J_+ + b J_-)] / sqrt(N)`.
    pub v: SymBand,
}

impl HamiltonianSplit {
    pub fn dim(&self) -> usize {
        self.basis.len()
    }

    pub fn hamiltonian(&self, lambda: f64) -> SymBand {
        let mut h = SymBand::zeros(self.dim(), 0).add_scaled(&self.v, lambda);
        h.add_diagonal(&self.h0);
        h
    }

    pub fn h0_matrix(&self) -> SymBand {
        SymBand::from_diagonal(&self.h0)
    }
}

pub fn assemble(params: &ModelParams, basis: &Basis) -> HamiltonianSplit {
    let two_j = params.two_j;
    let norm = f64::from(two_j).sqrt();
    let states = basis.states();
    let h0: Vec<f64> = states
        .iter()
        .map(|s| params.omega * f64::from(s.n) + params.omega0 * s.m())
        .collect();

    // couplings to the states with one more boson
    let mut entries = Vec::new();
    let mut kd = 0;
    for (i, s) in states.iter().enumerate() {
        let boson = f64::from(s.n + 1).sqrt();
        // b^dag J_-: (n, m) -> (n + 1, m - 1)
        if s.two_m > -(two_j as i32) {
            let target = BasisState {
                n: s.n + 1,
                two_m: s.two_m - 2,
            };
            if let Some(k) = basis.index_of(target) {
                let amp = boson * j_plus(two_j, s.two_m - 2) / norm;
                entries.push((k, i, amp));
                kd = kd.max(k.abs_diff(i));
            }
        }
        // delta b^dag J_+: (n, m) -> (n + 1, m + 1)
        if params.delta != 0.0 && s.two_m < two_j as i32 {
            let target = BasisState {
                n: s.n + 1,
                two_m: s.two_m + 2,
            };
            if let Some(k) = basis.index_of(target) {
                let amp = params.delta * boson * j_plus(two_j, s.two_m) / norm;
                entries.push((k, i, amp));
                kd = kd.max(k.abs_diff(i));
            }
        }
    }
    let mut v = SymBand::zeros(states.len(), kd);
    for (k, i, amp) in entries {
        v.set(k, i, v.get(k, i) + amp);
    }
    HamiltonianSplit {
        basis: basis.clone(),
        h0,
        v,
    }
}

/// Diagonal observables available in the `|n>|m>` basis.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Operator {
    PhotonNumber,
    Jz,
    Excitations,
    Parity,
}

impl Operator {
    pub fn diagonal(&self, basis: &Basis) -> Vec<f64> {
        let two_j = basis.two_j();
        basis
            .states()
            .iter()
            .map(|s| match self {
                Operator::PhotonNumber => f64::from(s.n),
                Operator::Jz => s.m(),
                Operator::Excitations => f64::from(s.excitations(two_j)),
                Operator::Parity => {
                    if s.excitations(two_j) % 2 == 0 {
                        1.0
                    } else {
                        -1.0
                    }
                }
            })
            .collect()
    }
}

pub fn operator_matrix(basis: &Basis, which: Operator) -> SymBand {
    SymBand::from_diagonal(&which.diagonal(basis))
}

/// Closed-form variance of the interaction term in the product state `|n>|m>`.
pub fn interaction_dispersion_analytic(params: &ModelParams, n: u32, two_m: i32) -> f64 {
    let j = params.j();
    let m = f64::from(two_m) / 2.0;
    let d2 = params.delta * params.delta;
    ((1.0 + d2) * (j * j - m * m + j) * (2.0 * f64::from(n) + 1.0) + (1.0 - d2) * m) / (2.0 * j)
}

/// `<e|V^2|e> - <e|V|e>^2` for the basis vector `e` at `index`, read off the
/// assembled matrix. Exact whenever `V|e>` fits inside the basis.
pub fn interaction_dispersion_numeric(split: &HamiltonianSplit, index: usize) -> f64 {
    let n = split.dim();
    let v = &split.v;
    let lo = index.saturating_sub(v.kd());
    let hi = (index + v.kd()).min(n - 1);
    let mut sq = 0.0;
    for k in lo..=hi {
        let a = v.get(k, index);
        sq += a * a;
    }
    let mean = v.get(index, index);
    sq - mean * mean
}

#[cfg(test)]
mod tests {
    use super::*;

    fn params(two_j: u32, delta: f64, n_max: u32) -> ModelParams {
        ModelParams::new(1.0, 1.0, delta, two_j, n_max).unwrap()
    }

    #[test]
    fn rejects_invalid_parameters() {
        assert!(ModelParams::new(0.0, 1.0, 0.0, 2, 3).is_err());
        assert!(ModelParams::new(1.0, -1.0, 0.0, 2, 3).is_err());
        assert!(ModelParams::new(1.0, 1.0, 1.5, 2, 3).is_err());
        assert!(ModelParams::new(1.0, 1.0, 0.5, 0, 3).is_err());
    }

    #[test]
    fn m_subspace_dimensions() {
        let p = params(4, 0.0, 0);
        let b0 = build_basis(&p, BasisSpec::MSubspace { m_total: 0 }).unwrap();
        assert_eq!(b0.states(), &[BasisState { n: 0, two_m: -4 }]);
        let b8 = build_basis(&p, BasisSpec::MSubspace { m_total: 8 }).unwrap();
        assert_eq!(b8.len(), 5);
        assert!(b8.states().iter().all(|s| s.excitations(4) == 8));
        assert_eq!(b8.states()[0], BasisState { n: 4, two_m: 4 });
    }

    #[test]
    fn even_parity_enumeration_matches_brute_force() {
        let p = params(2, 0.0, 2);
        let b = build_basis(
            &p,
            BasisSpec::FullParity {
                parity: Parity::Even,
                n_max: 2,
            },
        )
        .unwrap();
        let mut expected = Vec::new();
        for n in 0..=2u32 {
            for m in [-1i32, 0, 1] {
                if (n as i32 + m + 1) % 2 == 0 {
                    expected.push(BasisState { n, two_m: 2 * m });
                }
            }
        }
        assert_eq!(b.states(), expected.as_slice());
    }

    #[test]
    fn empty_sector_is_an_error() {
        // 2j = 1, n_max = 0: only M = 0 and M = 1 exist
        let p = params(1, 0.0, 0);
        let e = build_basis(
            &p,
            BasisSpec::FullParity {
                parity: Parity::Even,
                n_max: 0,
            },
        );
        assert!(e.is_ok());
        let p2 = ModelParams::new(1.0, 1.0, 0.0, 1, 0).unwrap();
        let full = build_basis(&p2, BasisSpec::Full { n_max: 0 }).unwrap();
        assert_eq!(full.len(), 2);
    }

    #[test]
    fn h0_diagonal_entry() {
        let p = ModelParams::new(2.0, 1.0, 0.0, 4, 5).unwrap();
        let b = build_basis(&p, BasisSpec::Full { n_max: 5 }).unwrap();
        let split = assemble(&p, &b);
        let k = b.index_of(BasisState { n: 3, two_m: -2 }).unwrap();
        assert_eq!(split.h0[k], 5.0);
    }

    #[test]
    fn two_atom_matrix_by_hand() {
        // 2j = 2, n_max = 1, delta = 1: basis (0,-1) (0,0) (0,1) (1,-1) (1,0) (1,1)
        let p = ModelParams::new(1.0, 1.0, 1.0, 2, 1).unwrap();
        let b = build_basis(&p, BasisSpec::Full { n_max: 1 }).unwrap();
        let split = assemble(&p, &b);
        let v = split.v.to_dense();
        // J_+ elements for j = 1 are sqrt(2); sqrt(n + 1) = 1; 1/sqrt(N) = 1/sqrt(2)
        let mut expected = nalgebra::DMatrix::zeros(6, 6);
        let pairs = [(0usize, 4usize), (1, 3), (1, 5), (2, 4)];
        for (a, c) in pairs {
            expected[(a, c)] = 1.0;
            expected[(c, a)] = 1.0;
        }
        assert!((v - expected).abs().max() < 1e-15);
        assert_eq!(split.h0, vec![-1.0, 0.0, 1.0, 0.0, 1.0, 2.0]);
    }

    #[test]
    fn dispersion_closed_form_special_values() {
        let p = ModelParams::new(2.0, 1.0, 0.0, 40, 0).unwrap();
        assert_eq!(interaction_dispersion_analytic(&p, 0, -40), 0.0);
        assert!((interaction_dispersion_analytic(&p, 0, 40) - 1.0).abs() < 1e-15);
    }

    #[test]
    fn operators_are_diagonal_labels() {
        let p = params(4, 0.3, 6);
        let b = build_basis(&p, BasisSpec::MSubspace { m_total: 5 }).unwrap();
        let m = Operator::Excitations.diagonal(&b);
        assert!(m.iter().all(|&x| x == 5.0));
        let n = Operator::PhotonNumber.diagonal(&b);
        let k = b.index_of(BasisState { n: 5, two_m: -4 }).unwrap();
        assert_eq!(n[k], 5.0);
        assert!(Operator::Parity.diagonal(&b).iter().all(|&x| x == -1.0));
    }
}
