//! One function per subcommand. Each returns the paths it wrote.

use std::path::PathBuf;
use std::time::Instant;

use log::info;
use rayon::prelude::*;

use dicke_quench::analysis::spacing_population_table;
use dicke_quench::linalg;
use dicke_quench::model::{
    assemble, build_basis, interaction_dispersion_analytic, interaction_dispersion_numeric, BasisSpec,
    HamiltonianSplit, ModelParams,
};
use dicke_quench::presets::Command;
use dicke_quench::quench::{
    gaussian_reference, observable_evolution, populated_states, prepare_state, quench_prepared,
    scalars_with, survival_probability, truncation_audit, PreparedState, QuenchResult, QuenchScalars,
    TimeGrid, TruncationReport,
};
use dicke_quench::spectral::{esqpt_lines, level_dynamics};
use dicke_quench::{Error, Result};

use crate::config::{DispersionMode, RunConfig};
use crate::output::{Cell, Table};
use crate::CliError;

type Written = std::result::Result<Vec<PathBuf>, CliError>;

pub fn run(command: Command, cfg: &RunConfig) -> Written {
    match command {
        Command::Levels => levels(cfg),
        Command::Quench => quench(cfg),
        Command::Sweep => sweep(cfg),
        Command::Peres => peres(cfg),
        Command::Observable => observable(cfg),
        Command::Dispersion => dispersion(cfg),
    }
}

struct Setup {
    params: ModelParams,
    split: HamiltonianSplit,
}

fn setup(cfg: &RunConfig) -> Result<Setup> {
    let params = cfg.params()?;
    let spec = cfg.basis.resolve(cfg.two_j, cfg.n_max)?;
    let t = Instant::now();
    let basis = build_basis(&params, spec)?;
    let split = assemble(&params, &basis);
    info!("sector {spec}: dimension {}, band width {} ({:.2?})", split.dim(), split.v.kd(), t.elapsed());
    Ok(Setup { params, split })
}

fn prepare(cfg: &RunConfig, s: &Setup) -> Result<PreparedState> {
    let t = Instant::now();
    let initial = cfg.initial.resolve(s.split.dim());
    let state = prepare_state(&s.split, cfg.lambda_i, initial)?;
    info!("initial state {initial:?} at lambda_i = {} ({:.2?})", cfg.lambda_i, t.elapsed());
    Ok(state)
}

fn quench_to(s: &Setup, state: &PreparedState, lambda_f: f64) -> Result<QuenchResult> {
    let t = Instant::now();
    let r = quench_prepared(&s.params, &s.split, state, lambda_f)?;
    info!("quench to lambda_f = {lambda_f} ({:.2?})", t.elapsed());
    Ok(r)
}

fn scaled(x: f64, s: &Setup) -> f64 {
    x / s.params.energy_scale()
}

fn time_grid(cfg: &RunConfig, sc: &QuenchScalars) -> Result<TimeGrid> {
    Ok(cfg.time_grid()?.unwrap_or_else(|| TimeGrid::default_for(sc)))
}

/// Runs the truncation audit for truncated sectors and fails when it does not pass.
fn audit(cfg: &RunConfig, s: &Setup, r: &QuenchResult) -> Result<Option<TruncationReport>> {
    if !cfg.basis.is_truncated() {
        return Ok(None);
    }
    let t = Instant::now();
    let states = populated_states(&s.split, r, cfg.population_floor)?;
    let report = truncation_audit(&s.split, r, &states);
    info!(
        "truncation audit: initial edge weight {:e}, ensemble edge weight {:e} ({:.2?})",
        report.initial_edge_weight,
        report.ensemble_edge_weight,
        t.elapsed()
    );
    report.check()?;
    Ok(Some(report))
}

fn write(table: &Table, cfg: &RunConfig, name: &str) -> std::result::Result<PathBuf, CliError> {
    table.write(&cfg.out, name).map_err(|e| CliError::Io(format!("{}: {e}", cfg.out.join(name).display())))
}

fn table(cfg: &RunConfig, command: &str, header: &[&'static str]) -> Table {
    Table::new(command, &cfg.provenance(), header)
}

pub fn levels(cfg: &RunConfig) -> Written {
    let params = cfg.params()?;
    let spec = cfg.basis.resolve(cfg.two_j, cfg.n_max)?;
    let lambdas = cfg.lambdas()?;
    let t = Instant::now();
    let rows = level_dynamics(&params, spec, &lambdas)?;
    info!("{} couplings diagonalized ({:.2?})", rows.len(), t.elapsed());
    let scale = params.energy_scale();
    let mut lv = table(cfg, "levels", &["lambda", "level_index", "E", "E_over_w0j"]);
    for (l, energies) in &rows {
        for (k, e) in energies.iter().enumerate() {
            lv.row(vec![(*l).into(), k.into(), (*e).into(), (e / scale).into()]);
        }
    }
    let cs = esqpt_lines(&params, false)?;
    let mut cl = table(
        cfg,
        "levels",
        &[
            "lambda", "E_gs", "E_c1", "E_c1_valid", "E_c2", "E_c2_valid", "E_c3", "E_c3_valid", "E_ls",
            "E_ls_valid", "E_c4", "E_c4_valid",
        ],
    );
    cl.note("analytic curves in units of omega0 j; empty cells lie outside a curve's range");
    for &l in &lambdas {
        let r = cs.tabulate(l);
        let pair = |x: Option<f64>| -> [Cell; 2] { [x.into(), x.is_some().into()] };
        let mut cells: Vec<Cell> = vec![l.into(), r.ground_state.into()];
        for x in [r.e_c1, r.e_c2, r.e_c3, r.lowest_critical_subspace, r.e_c4] {
            cells.extend(pair(x));
        }
        cl.row(cells);
    }
    Ok(vec![write(&lv, cfg, "levels.csv")?, write(&cl, cfg, "critical_lines.csv")?])
}

pub fn quench(cfg: &RunConfig) -> Written {
    let s = setup(cfg)?;
    let state = prepare(cfg, &s)?;
    let r = quench_to(&s, &state, cfg.lambda_f)?;
    let report = audit(cfg, &s, &r)?;
    let sc = scalars_with(&r, cfg.threshold);
    let grid = time_grid(cfg, &sc)?;

    let mut st = table(cfg, "quench", &["l", "E_fl", "E_over_w0j", "s_l", "s_l2"]);
    for (l, (e, a)) in r.final_energies.iter().zip(&r.amplitudes).enumerate() {
        st.row(vec![l.into(), (*e).into(), scaled(*e, &s).into(), (*a).into(), (a * a).into()]);
    }
    st.note("eigenvector signs are arbitrary; s_l is defined up to sign");

    let t = Instant::now();
    let p = survival_probability(&r, &grid);
    let g = gaussian_reference(sc.t_s, &grid);
    info!("survival probability on {} times ({:.2?})", grid.len(), t.elapsed());
    let mut sv = table(cfg, "quench", &["t", "P", "P_gaussian_ref"]);
    for k in 0..grid.len() {
        sv.row(vec![p.times[k].into(), p.values[k].into(), g.values[k].into()]);
    }

    // long-time mean of P over [100 t'_H, 200 t'_H]
    let late = match sc.t_h_mod {
        Some(th) => Some(survival_probability(&r, &TimeGrid::linear(100.0 * th, 200.0 * th, 4001)?).mean()),
        None => None,
    };
    let (dom, w_dom) = r.dominant_level();
    let mut sc_t = table(
        cfg,
        "quench",
        &[
            "lambda_i", "lambda_f", "E_i", "E_i_over_w0j", "mean_Ef", "mean_Ef_over_w0j", "var_Ef", "t_s", "t_H",
            "t_H_mod", "t_H_mod_cumulative", "retained_mod", "participation", "p_infinity", "p_variance",
            "p_late_mean", "mean_V", "dispersion_V", "max_s_l2", "max_level", "max_level_E_over_w0j",
            "initial_edge_weight", "ensemble_edge_weight",
        ],
    );
    sc_t.row(vec![
        cfg.lambda_i.into(),
        cfg.lambda_f.into(),
        sc.initial_energy.into(),
        scaled(sc.initial_energy, &s).into(),
        sc.mean_ef.into(),
        scaled(sc.mean_ef, &s).into(),
        sc.var_ef.into(),
        sc.t_s.into(),
        sc.t_h.into(),
        sc.t_h_mod.into(),
        sc.t_h_mod_cumulative.into(),
        sc.retained_mod.into(),
        sc.participation.into(),
        sc.p_infinity.into(),
        sc.p_variance.into(),
        late.into(),
        r.mean_v.into(),
        r.dispersion_v.into(),
        w_dom.into(),
        dom.into(),
        scaled(r.final_energies[dom], &s).into(),
        report.as_ref().map(|a| a.initial_edge_weight).into(),
        report.as_ref().map(|a| a.ensemble_edge_weight).into(),
    ]);

    let mut sp = table(cfg, "quench", &["l", "E_fl", "spacing", "spacing_over_w0j", "mean_population"]);
    for rec in spacing_population_table(&r) {
        sp.row(vec![
            rec.l.into(),
            r.final_energies[rec.l].into(),
            rec.spacing.into(),
            scaled(rec.spacing, &s).into(),
            rec.mean_pop.into(),
        ]);
    }
    Ok(vec![
        write(&st, cfg, "strength.csv")?,
        write(&sv, cfg, "survival.csv")?,
        write(&sc_t, cfg, "scalars.csv")?,
        write(&sp, cfg, "spacing.csv")?,
    ])
}

pub fn sweep(cfg: &RunConfig) -> Written {
    let s = setup(cfg)?;
    let lambdas = cfg.lambdas()?;
    let state = prepare(cfg, &s)?;
    let total = lambdas.len();
    let done = std::sync::atomic::AtomicUsize::new(0);
    let results: Vec<QuenchScalars> = lambdas
        .par_iter()
        .map(|&lf| {
            let r = quench_prepared(&s.params, &s.split, &state, lf)?;
            let k = done.fetch_add(1, std::sync::atomic::Ordering::Relaxed) + 1;
            info!("[{k}/{total}] lambda_f = {lf}");
            Ok(scalars_with(&r, cfg.threshold))
        })
        .collect::<Result<_>>()?;
    let mut t = table(
        cfg,
        "sweep",
        &[
            "lambda_f", "mean_Ef", "mean_Ef_over_w0j", "var_Ef", "t_s", "t_H", "t_H_mod", "participation",
            "p_infinity",
        ],
    );
    for (lf, sc) in lambdas.iter().zip(&results) {
        t.row(vec![
            (*lf).into(),
            sc.mean_ef.into(),
            scaled(sc.mean_ef, &s).into(),
            sc.var_ef.into(),
            sc.t_s.into(),
            sc.t_h.into(),
            sc.t_h_mod.into(),
            sc.participation.into(),
            sc.p_infinity.into(),
        ]);
    }
    Ok(vec![write(&t, cfg, "sweep.csv")?])
}

pub fn peres(cfg: &RunConfig) -> Written {
    let s = setup(cfg)?;
    let lambda = cfg.lambda_lattice.unwrap_or(cfg.lambda_f);
    let overlay = if cfg.overlay {
        let state = prepare(cfg, &s)?;
        Some(quench_to(&s, &state, lambda)?)
    } else {
        None
    };
    let h = s.split.hamiltonian(lambda);
    let energies = match &overlay {
        Some(r) => r.final_energies.clone(),
        None => linalg::band_eigenvalues(&h)?,
    };
    let scale = s.params.energy_scale();
    let levels: Vec<usize> = (0..energies.len())
        .filter(|&l| cfg.energy_window.is_none_or(|(a, b)| (a..=b).contains(&(energies[l] / scale))))
        .collect();
    let obs = cfg.observable.diagonal(&s.split.basis);
    let t = Instant::now();
    let expectations = linalg::band_eigenvectors_map(&h, &energies, &levels, |_, v| {
        v.iter().zip(&obs).map(|(a, o)| a * a * o).sum::<f64>()
    });
    info!("{} lattice points ({:.2?})", levels.len(), t.elapsed());
    let mut tb = table(cfg, "peres", &["l", "E", "E_over_w0j", "expect_n", "population"]);
    if overlay.is_none() {
        tb.note("no quench overlay; population column is zero");
    }
    for (&l, x) in levels.iter().zip(&expectations) {
        let pop = overlay.as_ref().map_or(0.0, |r| r.amplitudes[l].powi(2));
        tb.row(vec![l.into(), energies[l].into(), (energies[l] / scale).into(), (*x).into(), pop.into()]);
    }
    Ok(vec![write(&tb, cfg, "peres.csv")?])
}

pub fn observable(cfg: &RunConfig) -> Written {
    let s = setup(cfg)?;
    let state = prepare(cfg, &s)?;
    let r = quench_to(&s, &state, cfg.lambda_f)?;
    let t = Instant::now();
    let states = populated_states(&s.split, &r, cfg.population_floor)?;
    info!("{} populated levels, dropped weight {:e} ({:.2?})", states.levels.len(), states.dropped_weight, t.elapsed());
    if cfg.basis.is_truncated() {
        truncation_audit(&s.split, &r, &states).check()?;
    }
    let sc = scalars_with(&r, cfg.threshold);
    let grid = time_grid(cfg, &sc)?;
    let obs = cfg.observable.diagonal(&s.split.basis);
    let t = Instant::now();
    let ev = observable_evolution(&states, &r.initial_state, &obs, &grid)?;
    info!("evolution on {} times ({:.2?})", grid.len(), t.elapsed());
    let mut tb = table(cfg, "observable", &["t", "expectation", "diagonal_saturation_value"]);
    tb.note(format!(
        "initial_expectation={}; error_bound={}; populated_levels={}; dropped_weight={}",
        crate::config::fmt_f64(ev.initial_expectation),
        crate::config::fmt_f64(ev.error_bound),
        states.levels.len(),
        crate::config::fmt_f64(states.dropped_weight)
    ));
    for (t, v) in ev.series.times.iter().zip(&ev.series.values) {
        tb.row(vec![(*t).into(), (*v).into(), ev.saturation.into()]);
    }
    Ok(vec![write(&tb, cfg, "observable.csv")?])
}

pub fn dispersion(cfg: &RunConfig) -> Written {
    let params = cfg.params()?;
    if cfg.dispersion_mode == DispersionMode::Lowest && params.omega <= params.omega0 {
        // the lowest state of each M is only unambiguous for omega > omega0
        return Err(Error::NotDetuned {
            omega: params.omega,
            omega0: params.omega0,
        }
        .into());
    }
    if params.is_resonant() {
        log::warn!("resonant model: the closed form is quoted for detuned systems");
    }
    let n_max = cfg.n_max;
    let m_max = match cfg.m_max {
        Some(m) if m >= n_max => {
            return Err(Error::InvalidParameter(format!(
                "m_max = {m} must be below n_max = {n_max} so that V acting on every listed state stays in the basis"
            ))
            .into())
        }
        Some(m) => m,
        None => n_max.saturating_sub(1),
    };
    let basis = build_basis(&params, BasisSpec::Full { n_max })?;
    let split = assemble(&params, &basis);
    let two_j = params.two_j;
    let mut rows: Vec<(u32, usize)> = basis
        .states()
        .iter()
        .enumerate()
        .map(|(k, st)| (st.excitations(two_j), k))
        .filter(|(m, _)| *m <= m_max)
        .collect();
    rows.sort_by_key(|&(m, k)| (m, basis.states()[k].n));
    if cfg.dispersion_mode == DispersionMode::Lowest {
        let mut lowest: Vec<(u32, usize)> = Vec::new();
        for (m, k) in rows {
            match lowest.last_mut() {
                Some(last) if last.0 == m => {
                    if split.h0[k] < split.h0[last.1] {
                        last.1 = k;
                    }
                }
                _ => lowest.push((m, k)),
            }
        }
        rows = lowest;
    }
    let scale = params.energy_scale();
    let mut tb = table(
        cfg,
        "dispersion",
        &["M", "n", "m", "E_at_lambda0", "E_over_w0j", "dispersion_analytic", "dispersion_numeric"],
    );
    for (m_total, k) in rows {
        let st = basis.states()[k];
        tb.row(vec![
            m_total.into(),
            st.n.into(),
            st.m().into(),
            split.h0[k].into(),
            (split.h0[k] / scale).into(),
            interaction_dispersion_analytic(&params, st.n, st.two_m).into(),
            interaction_dispersion_numeric(&split, k).into(),
        ]);
    }
    Ok(vec![write(&tb, cfg, "dispersion.csv")?])
}
