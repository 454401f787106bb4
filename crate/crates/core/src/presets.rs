//! Named parameter sets for the figure-class runs.
//!
//! A preset fixes the model, the sector and the protocol. Thresholds, time
//! grids and output locations are left to the caller.

use std::fmt;
use std::str::FromStr;

use crate::model::{BasisSpec, BasisState, ModelParams, Operator, Parity};
use crate::quench::InitialState;
use crate::{Error, Result};

/// Sector selection that survives a change of `j`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum BasisChoice {
    Parity(Parity),
    /// Both parities (truncated at `n_max`).
    Full,
    M(u32),
    /// `M = 2j`, the subspace holding the critical structure.
    MAtoms,
    /// `M = j`.
    MHalf,
}

impl BasisChoice {
    pub fn resolve(self, two_j: u32, n_max: u32) -> Result<BasisSpec> {
        Ok(match self {
            BasisChoice::Parity(parity) => BasisSpec::FullParity { parity, n_max },
            BasisChoice::Full => BasisSpec::Full { n_max },
            BasisChoice::M(m_total) => BasisSpec::MSubspace { m_total },
            BasisChoice::MAtoms => BasisSpec::MSubspace { m_total: two_j },
            BasisChoice::MHalf => {
                if two_j % 2 != 0 {
                    return Err(Error::InvalidParameter(format!(
                        "M = j needs integer j, got 2j = {two_j}"
                    )));
                }
                BasisSpec::MSubspace { m_total: two_j / 2 }
            }
        })
    }

    /// Truncated sectors depend on `n_max`; `M` subspaces do not.
    pub fn is_truncated(self) -> bool {
        matches!(self, BasisChoice::Parity(_) | BasisChoice::Full)
    }
}

impl fmt::Display for BasisChoice {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            BasisChoice::Parity(Parity::Even) => write!(f, "even"),
            BasisChoice::Parity(Parity::Odd) => write!(f, "odd"),
            BasisChoice::Full => write!(f, "full"),
            BasisChoice::M(m) => write!(f, "m={m}"),
            BasisChoice::MAtoms => write!(f, "m=2j"),
            BasisChoice::MHalf => write!(f, "m=j"),
        }
    }
}

impl FromStr for BasisChoice {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim().to_ascii_lowercase();
        match s.as_str() {
            "even" => return Ok(BasisChoice::Parity(Parity::Even)),
            "odd" => return Ok(BasisChoice::Parity(Parity::Odd)),
            "full" => return Ok(BasisChoice::Full),
            "m=2j" => return Ok(BasisChoice::MAtoms),
            "m=j" => return Ok(BasisChoice::MHalf),
            _ => {}
        }
        s.strip_prefix("m=")
            .and_then(|m| m.parse().ok())
            .map(BasisChoice::M)
            .ok_or_else(|| {
                Error::InvalidParameter(format!(
                    "basis must be even, odd, full, m=2j, m=j or m=<M>; got {s:?}"
                ))
            })
    }
}

/// Initial-state selector relative to the sector dimension.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum InitialChoice {
    /// `k`-th eigenstate of `H(lambda_i)`, counted from the bottom.
    Index(usize),
    Highest,
    /// Eigenstate `dim / 2`.
    Middle,
    Basis(BasisState),
}

impl InitialChoice {
    pub fn resolve(self, dim: usize) -> InitialState {
        match self {
            InitialChoice::Index(k) => InitialState::Eigenstate(k),
            InitialChoice::Highest => InitialState::Eigenstate(dim.saturating_sub(1)),
            InitialChoice::Middle => InitialState::Eigenstate(dim / 2),
            InitialChoice::Basis(s) => InitialState::Basis(s),
        }
    }
}

impl fmt::Display for InitialChoice {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            InitialChoice::Index(k) => write!(f, "{k}"),
            InitialChoice::Highest => write!(f, "highest"),
            InitialChoice::Middle => write!(f, "middle"),
            InitialChoice::Basis(s) => write!(f, "state:{},{}", s.n, s.two_m),
        }
    }
}

impl FromStr for InitialChoice {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        let bad = || {
            Error::InvalidParameter(format!(
                "initial must be an index, highest, middle or state:<n>,<2m>; got {s:?}"
            ))
        };
        match s {
            "highest" => Ok(InitialChoice::Highest),
            "middle" => Ok(InitialChoice::Middle),
            "ground" => Ok(InitialChoice::Index(0)),
            _ => {
                if let Some(rest) = s.strip_prefix("state:") {
                    let (n, m) = rest.split_once(',').ok_or_else(bad)?;
                    let n = n.trim().parse().map_err(|_| bad())?;
                    let two_m = m.trim().parse().map_err(|_| bad())?;
                    Ok(InitialChoice::Basis(BasisState { n, two_m }))
                } else {
                    s.parse().map(InitialChoice::Index).map_err(|_| bad())
                }
            }
        }
    }
}

/// Which protocol a preset drives.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Command {
    Levels,
    Quench,
    Sweep,
    Peres,
    Observable,
    Dispersion,
}

impl fmt::Display for Command {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Command::Levels => "levels",
            Command::Quench => "quench",
            Command::Sweep => "sweep",
            Command::Peres => "peres",
            Command::Observable => "observable",
            Command::Dispersion => "dispersion",
        };
        f.write_str(s)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Preset {
    pub name: &'static str,
    pub command: Command,
    pub omega: f64,
    pub omega0: f64,
    pub delta: f64,
    pub two_j: u32,
    pub n_max: u32,
    pub basis: BasisChoice,
    pub lambda_i: f64,
    pub lambda_f: f64,
    /// Coupling grid `(start, stop, points)` for level dynamics, or the final
    /// couplings of a sweep.
    pub lambda_grid: Option<(f64, f64, usize)>,
    pub initial: InitialChoice,
    pub observable: Operator,
    /// Coupling of the Peres lattice (the final coupling of the overlay quench).
    pub lambda_lattice: Option<f64>,
}

impl Preset {
    pub fn params(&self) -> Result<ModelParams> {
        ModelParams::new(self.omega, self.omega0, self.delta, self.two_j, self.n_max)
    }

    pub fn basis_spec(&self) -> Result<BasisSpec> {
        self.basis.resolve(self.two_j, self.n_max)
    }

    pub fn lambdas(&self) -> Vec<f64> {
        self.lambda_grid.map_or_else(Vec::new, |(a, b, n)| uniform_grid(a, b, n))
    }

    /// Same protocol at a different atom number. Truncated sectors get
    /// `n_max` scaled in proportion to `j`, since the photon content of the
    /// states involved grows linearly with `j`.
    pub fn with_two_j(&self, two_j: u32) -> Self {
        let mut p = self.clone();
        if p.basis.is_truncated() && two_j != p.two_j {
            let scaled = (p.n_max as u64 * two_j as u64).div_ceil(p.two_j as u64);
            p.n_max = scaled.max(1) as u32;
        }
        p.two_j = two_j;
        p
    }
}

/// `points` evenly spaced values on `[a, b]`.
pub fn uniform_grid(a: f64, b: f64, points: usize) -> Vec<f64> {
    if points < 2 {
        return vec![a];
    }
    (0..points)
        .map(|k| a + (b - a) * k as f64 / (points - 1) as f64)
        .collect()
}

fn base(name: &'static str, command: Command) -> Preset {
    Preset {
        name,
        command,
        omega: 1.0,
        omega0: 1.0,
        delta: 0.0,
        two_j: 40,
        n_max: 0,
        basis: BasisChoice::Parity(Parity::Even),
        lambda_i: 0.0,
        lambda_f: 0.0,
        lambda_grid: None,
        initial: InitialChoice::Index(0),
        observable: Operator::PhotonNumber,
        lambda_lattice: None,
    }
}

fn levels(name: &'static str, delta: f64) -> Preset {
    Preset {
        delta,
        two_j: 6,
        n_max: 12,
        basis: BasisChoice::Full,
        lambda_grid: Some((0.0, 2.0, 201)),
        ..base(name, Command::Levels)
    }
}

fn subspace_levels(name: &'static str, basis: BasisChoice) -> Preset {
    Preset {
        omega: 2.0,
        basis,
        lambda_grid: Some((0.0, 2.5, 251)),
        ..base(name, Command::Levels)
    }
}

/// Quench inside an `M` subspace of the rotating-wave model at `j = 2000`.
fn integrable(name: &'static str, command: Command, basis: BasisChoice, li: f64, lf: f64, initial: InitialChoice) -> Preset {
    Preset {
        omega: 2.0,
        two_j: 4000,
        basis,
        lambda_i: li,
        lambda_f: lf,
        initial,
        ..base(name, command)
    }
}

/// `delta = 0.3`, `j = 20`, quenches back from the `lambda = 6` ground state.
fn mixed_back(name: &'static str, command: Command, lf: f64) -> Preset {
    Preset {
        delta: 0.3,
        n_max: 780,
        lambda_i: 6.0,
        lambda_f: lf,
        ..base(name, command)
    }
}

/// `delta = 1`, `j = 20`, quenches back from the `lambda = 4` ground state.
fn dicke_back(name: &'static str, command: Command, lf: f64) -> Preset {
    Preset {
        delta: 1.0,
        n_max: 800,
        lambda_i: 4.0,
        lambda_f: lf,
        ..base(name, command)
    }
}

fn forward_mixed(name: &'static str, lf: f64) -> Preset {
    Preset {
        delta: 0.3,
        n_max: 450,
        lambda_f: lf,
        ..base(name, Command::Quench)
    }
}

/// Every known preset, in a fixed order.
pub fn all() -> Vec<Preset> {
    use BasisChoice::{MAtoms, MHalf};
    use Command::*;
    use InitialChoice::{Highest, Index, Middle};
    let mut v = vec![
        levels("fig1a", 0.0),
        levels("fig1b", 0.3),
        subspace_levels("fig2a", MAtoms),
        subspace_levels("fig2b", MHalf),
        Preset {
            omega: 2.0,
            n_max: 81,
            basis: BasisChoice::Full,
            ..base("dispersion", Dispersion)
        },
        integrable("fig3a", Quench, MAtoms, 0.0, 2.5, Highest),
        integrable("fig3b", Quench, MAtoms, 0.0, 2.5, Middle),
        integrable("fig3c", Quench, MAtoms, 0.0, 2.5, Index(0)),
        integrable("fig3d", Quench, MHalf, 0.0, 2.5, Highest),
        integrable("fig3e", Quench, MHalf, 0.0, 2.5, Middle),
        integrable("fig3f", Quench, MHalf, 0.0, 2.5, Index(0)),
        integrable("fig4a", Quench, MAtoms, 2.5, 0.5, Index(0)),
        integrable("fig4b", Quench, MAtoms, 2.5, 0.772, Index(0)),
        integrable("fig4c", Quench, MAtoms, 2.5, 0.8, Index(0)),
        integrable("fig4d", Quench, MAtoms, 2.5, 1.0, Index(0)),
        Preset {
            lambda_grid: Some((0.0, 2.5, 251)),
            ..integrable("fig5a", Sweep, MAtoms, 2.5, 0.0, Index(0))
        },
        Preset {
            lambda_grid: Some((0.0, 2.5, 251)),
            ..integrable("fig5b", Sweep, MHalf, 2.5, 0.0, Index(0))
        },
        forward_mixed("fig6a", 1.1),
        forward_mixed("fig6b", 2.5),
        mixed_back("fig7a", Quench, 3.1),
        mixed_back("fig7b", Quench, 2.9),
        mixed_back("fig7c", Quench, 3.5),
        mixed_back("fig7d", Quench, 3.27),
        Preset {
            lambda_lattice: Some(3.27),
            ..mixed_back("fig8", Peres, 3.27)
        },
        Preset {
            lambda_grid: Some((2.8, 3.8, 21)),
            ..mixed_back("fig9", Sweep, 0.0)
        },
        Preset {
            lambda_lattice: Some(2.06),
            ..dicke_back("fig10", Peres, 2.06)
        },
        dicke_back("fig10a", Quench, 1.5),
        dicke_back("fig10b", Quench, 2.06),
        dicke_back("fig10c", Quench, 3.0),
        mixed_back("fig11a", Observable, 3.1),
        mixed_back("fig11b", Observable, 3.27),
        mixed_back("fig11c", Observable, 3.5),
        dicke_back("fig11d", Observable, 1.5),
        dicke_back("fig11e", Observable, 2.06),
        dicke_back("fig11f", Observable, 3.0),
    ];
    for p in &mut v {
        if p.lambda_lattice.is_none() && p.command == Peres {
            p.lambda_lattice = Some(p.lambda_f);
        }
    }
    v
}

pub fn names() -> Vec<&'static str> {
    all().iter().map(|p| p.name).collect()
}

pub fn find(name: &str) -> Result<Preset> {
    all().into_iter().find(|p| p.name == name).ok_or_else(|| {
        Error::InvalidParameter(format!(
            "unknown preset {name:?}; known: {}",
            names().join(", ")
        ))
    })
}
