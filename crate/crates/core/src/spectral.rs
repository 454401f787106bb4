//! Spectra, level dynamics and the closed-form critical structure of the model.

use std::fmt;

use nalgebra::DMatrix;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::linalg::{self, SymBand};
use crate::model::{assemble, build_basis, Basis, BasisSpec, ModelParams, Parity};

/// Full spectrum: ascending energies and matching orthonormal eigenvectors
/// (columns), each with its largest-magnitude component positive.
#[derive(Clone, Debug)]
pub struct EigenSystem {
    pub energies: Vec<f64>,
    pub vectors: DMatrix<f64>,
    pub basis: Basis,
    pub lambda: f64,
}

impl EigenSystem {
    pub fn dim(&self) -> usize {
        self.energies.len()
    }

    pub fn vector(&self, l: usize) -> Vec<f64> {
        self.vectors.column(l).iter().copied().collect()
    }

    /// `<v_l| O |v_l>` for a diagonal operator given by its diagonal.
    pub fn diagonal_expectation(&self, l: usize, diag: &[f64]) -> f64 {
        self.vectors
            .column(l)
            .iter()
            .zip(diag)
            .map(|(v, o)| v * v * o)
            .sum()
    }
}

pub fn diagonalize(h: &SymBand, basis: &Basis, lambda: f64) -> Result<EigenSystem> {
    let (energies, vectors) = linalg::dense_eigen(&h.to_dense())?;
    Ok(EigenSystem {
        energies,
        vectors,
        basis: basis.clone(),
        lambda,
    })
}

/// Builds, assembles and diagonalizes `H(lambda)` on the given sector.
pub fn diagonalize_at(params: &ModelParams, spec: BasisSpec, lambda: f64) -> Result<EigenSystem> {
    let basis = build_basis(params, spec)?;
    let split = assemble(params, &basis);
    diagonalize(&split.hamiltonian(lambda), &basis, lambda)
}

/// Ascending eigenvalues of `H(lambda)` without eigenvectors.
pub fn energies_at(params: &ModelParams, spec: BasisSpec, lambda: f64) -> Result<Vec<f64>> {
    let basis = build_basis(params, spec)?;
    let split = assemble(params, &basis);
    linalg::band_eigenvalues(&split.hamiltonian(lambda))
}

/// One row per coupling, computed independently (no level tracking).
pub fn level_dynamics(
    params: &ModelParams,
    spec: BasisSpec,
    lambdas: &[f64],
) -> Result<Vec<(f64, Vec<f64>)>> {
    check_grid(lambdas)?;
    let basis = build_basis(params, spec)?;
    let split = assemble(params, &basis);
    lambdas
        .par_iter()
        .map(|&l| linalg::band_eigenvalues(&split.hamiltonian(l)).map(|e| (l, e)))
        .collect()
}

pub(crate) fn check_grid(grid: &[f64]) -> Result<()> {
    if grid.is_empty() {
        return Err(Error::InvalidGrid("empty grid".into()));
    }
    if grid.iter().any(|x| !x.is_finite()) {
        return Err(Error::InvalidGrid("non-finite grid value".into()));
    }
    if grid.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::InvalidGrid("grid must be strictly increasing".into()));
    }
    Ok(())
}

/// Numerical ground-state energy (raw units) of the whole truncated model.
///
/// At `delta = 0` the minimum runs over the excitation subspaces
/// `M = 0 ..= n_max + 2j`, which are exact; otherwise over both parity sectors
/// with the photon cutoff `n_max`.
pub fn ground_state_energy_numeric(params: &ModelParams, lambda: f64) -> Result<f64> {
    params.validate()?;
    let specs: Vec<BasisSpec> = if params.delta == 0.0 {
        (0..=params.n_max + params.two_j)
            .map(|m_total| BasisSpec::MSubspace { m_total })
            .collect()
    } else {
        [Parity::Even, Parity::Odd]
            .into_iter()
            .map(|parity| BasisSpec::FullParity {
                parity,
                n_max: params.n_max,
            })
            .collect()
    };
    let mut best = f64::INFINITY;
    for spec in specs {
        let basis = match build_basis(params, spec) {
            Ok(b) => b,
            Err(Error::EmptyBasis(_)) => continue,
            Err(e) => return Err(e),
        };
        let split = assemble(params, &basis);
        best = best.min(linalg::band_lowest_eigenvalue(&split.hamiltonian(lambda)));
    }
    Ok(best)
}

/// Large-size ground-state energy in units of `omega0 j`.
pub fn ground_state_energy_analytic(params: &ModelParams, lambda: f64) -> f64 {
    CriticalStructure::new(params).ground_state(lambda)
}

/// Mean-field photon number of the ground state, a guide for choosing `n_max`.
pub fn ground_state_photons(params: &ModelParams, lambda: f64) -> f64 {
    let lc = CriticalStructure::new(params).lambda_c;
    if lambda <= lc {
        return 0.0;
    }
    let r = (lambda / lc).powi(2);
    params.j() * params.omega0 * (r - 1.0 / r) / (2.0 * params.omega)
}

/// Closed-form critical couplings and borderlines, energies in units of `omega0 j`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CriticalStructure {
    pub lambda_c: f64,
    /// Infinite at `delta = 1`.
    pub lambda_0: f64,
    /// Present only for `omega > omega0`.
    pub lambda_bar_c: Option<f64>,
    pub omega: f64,
    pub omega0: f64,
}

/// Type labels of the borderlines, `(f, r)` = (degrees of freedom, rank).
pub const ESQPT_TYPES: [(&str, &str); 4] = [
    ("E_c1", "(2,1)"),
    ("E_c2", "(2,2)"),
    ("E_c3", "(2,2)"),
    ("E_c4", "non-analytic, M = N"),
];

impl CriticalStructure {
    pub fn new(params: &ModelParams) -> Self {
        let root = (params.omega * params.omega0).sqrt();
        let lambda_0 = if params.delta >= 1.0 {
            f64::INFINITY
        } else {
            root / (1.0 - params.delta)
        };
        let lambda_bar_c =
            (params.omega > params.omega0).then(|| (params.omega - params.omega0) / 2.0);
        Self {
            lambda_c: root / (1.0 + params.delta),
            lambda_0,
            lambda_bar_c,
            omega: params.omega,
            omega0: params.omega0,
        }
    }

    pub fn ground_state(&self, lambda: f64) -> f64 {
        if lambda < self.lambda_c {
            -1.0
        } else {
            let r = (lambda / self.lambda_c).powi(2);
            -0.5 * (1.0 / r + r)
        }
    }

    pub fn e_c1(&self, lambda: f64) -> Option<f64> {
        if lambda < self.lambda_c {
            None
        } else if lambda < self.lambda_0 {
            Some(-1.0)
        } else {
            let r = (lambda / self.lambda_0).powi(2);
            Some(-0.5 * (1.0 / r + r))
        }
    }

    pub fn e_c2(&self, lambda: f64) -> Option<f64> {
        (lambda >= self.lambda_0).then_some(-1.0)
    }

    pub fn e_c3(&self, _lambda: f64) -> Option<f64> {
        Some(1.0)
    }

    fn bar_c(&self) -> Result<f64> {
        self.lambda_bar_c.ok_or(Error::NotDetuned {
            omega: self.omega,
            omega0: self.omega0,
        })
    }

    /// Lowest level of the `M = N` subspace.
    pub fn lowest_critical_subspace(&self, lambda: f64) -> Result<f64> {
        let lb = self.bar_c()?;
        if lambda <= lb {
            return Ok(1.0);
        }
        let x = lb / lambda;
        let g = 2.0 / 3.0 - 2.0 / 9.0 * x * x - 2.0 / 9.0 * x * (x * x + 3.0).sqrt();
        Ok(1.0 - 4.0 / self.omega0 * g * (lambda * (1.0 - g).sqrt() - lb))
    }

    pub fn e_c4(&self, lambda: f64) -> Result<Option<f64>> {
        let lb = self.bar_c()?;
        Ok((lambda >= lb).then_some(1.0))
    }

    /// All curves at one coupling; curves outside their range are `None`.
    pub fn tabulate(&self, lambda: f64) -> CriticalRow {
        CriticalRow {
            lambda,
            ground_state: self.ground_state(lambda),
            e_c1: self.e_c1(lambda),
            e_c2: self.e_c2(lambda),
            e_c3: self.e_c3(lambda),
            lowest_critical_subspace: self.lowest_critical_subspace(lambda).ok(),
            e_c4: self.e_c4(lambda).ok().flatten(),
        }
    }
}

/// Curves at one coupling in units of `omega0 j`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CriticalRow {
    pub lambda: f64,
    pub ground_state: f64,
    pub e_c1: Option<f64>,
    pub e_c2: Option<f64>,
    pub e_c3: Option<f64>,
    pub lowest_critical_subspace: Option<f64>,
    pub e_c4: Option<f64>,
}

/// Builds the critical structure, failing when the `M = N` curves are requested
/// for a non-detuned model.
pub fn esqpt_lines(params: &ModelParams, need_critical_subspace: bool) -> Result<CriticalStructure> {
    params.validate()?;
    let cs = CriticalStructure::new(params);
    if need_critical_subspace && cs.lambda_bar_c.is_none() {
        return Err(Error::NotDetuned {
            omega: params.omega,
            omega0: params.omega0,
        });
    }
    Ok(cs)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Phase {
    Normal,
    Dicke,
    TavisCummings,
    Saturated,
    Atomic,
    Field,
    Critical,
}

impl fmt::Display for Phase {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Phase::Normal => "N",
            Phase::Dicke => "D",
            Phase::TavisCummings => "TC",
            Phase::Saturated => "S",
            Phase::Atomic => "A",
            Phase::Field => "F",
            Phase::Critical => "critical",
        })
    }
}

/// Which phase diagram to classify against.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum PhaseDiagram {
    Full,
    CriticalSubspace,
}

/// Energies within this distance (units of `omega0 j`) of a borderline are critical.
pub const BORDER_TOLERANCE: f64 = 1e-9;

/// Classifies the raw energy `energy` at coupling `lambda`.
pub fn phase_label(
    params: &ModelParams,
    lambda: f64,
    energy: f64,
    diagram: PhaseDiagram,
) -> Result<Phase> {
    let cs = esqpt_lines(params, diagram == PhaseDiagram::CriticalSubspace)?;
    let e = energy / params.energy_scale();
    let near = |line: Option<f64>| line.is_some_and(|x| (e - x).abs() <= BORDER_TOLERANCE);
    match diagram {
        PhaseDiagram::CriticalSubspace => {
            let c4 = cs.e_c4(lambda)?;
            if near(c4) {
                return Ok(Phase::Critical);
            }
            Ok(match c4 {
                Some(x) if e > x => Phase::Field,
                _ => Phase::Atomic,
            })
        }
        PhaseDiagram::Full => {
            let (c1, c2, c3) = (cs.e_c1(lambda), cs.e_c2(lambda), cs.e_c3(lambda));
            if near(c1) || near(c2) || near(c3) {
                return Ok(Phase::Critical);
            }
            if e > 1.0 {
                Ok(Phase::Saturated)
            } else if e > -1.0 {
                Ok(Phase::Normal)
            } else if c1.is_some_and(|x| e < x) {
                Ok(Phase::Dicke)
            } else if c2.is_some() {
                Ok(Phase::TavisCummings)
            } else {
                // below -1 with lambda in [lambda_c, lambda_0) and delta = 0 boundary cases
                Ok(Phase::Dicke)
            }
        }
    }
}
