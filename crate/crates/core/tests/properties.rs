use approx::assert_relative_eq;
use nalgebra::DMatrix;
use proptest::prelude::*;

use dicke_quench::analysis::smoothed_density;
use dicke_quench::linalg::{band_eigenvalues, band_spectrum, dense_eigen, SymBand};
use dicke_quench::model::{
    assemble, build_basis, interaction_dispersion_analytic, interaction_dispersion_numeric, BasisSpec,
    ModelParams, Parity,
};
use dicke_quench::quench::{prepare_state, quench_prepared, survival_probability, InitialState, TimeGrid};

fn small_model() -> impl Strategy<Value = (ModelParams, u32)> {
    (0.2..3.0f64, 0.2..3.0f64, prop_oneof![Just(0.0), 0.0..=1.0f64], 1u32..7, 2u32..9)
        .prop_map(|(w, w0, d, two_j, n_max)| (ModelParams::new(w, w0, d, two_j, n_max).unwrap(), n_max))
}

fn parity() -> impl Strategy<Value = Parity> {
    prop_oneof![Just(Parity::Even), Just(Parity::Odd)]
}

fn random_band() -> impl Strategy<Value = SymBand> {
    (2usize..40, 0usize..6).prop_flat_map(|(n, kd)| {
        let kd = kd.min(n - 1);
        prop::collection::vec(-2.0..2.0f64, n * (kd + 1)).prop_map(move |vals| {
            let mut a = SymBand::zeros(n, kd);
            let mut it = vals.into_iter();
            for i in 0..n {
                for j in i..(i + kd + 1).min(n) {
                    a.set(i, j, it.next().unwrap());
                }
            }
            a
        })
    })
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 48, failure_persistence: None, ..ProptestConfig::default() })]

    #[test]
    fn hamiltonian_is_symmetric_and_matvec_matches_dense(
        (params, n_max) in small_model(), lambda in 0.0..3.0f64, x in prop::collection::vec(-1.0..1.0f64, 200)
    ) {
        let basis = build_basis(&params, BasisSpec::Full { n_max }).unwrap();
        let h = assemble(&params, &basis).hamiltonian(lambda);
        let d = h.to_dense();
        prop_assert!((&d - d.transpose()).amax() == 0.0);
        let n = h.dim();
        let x: Vec<f64> = (0..n).map(|k| x[k % x.len()]).collect();
        let y = h.matvec(&x);
        let yd = &d * DMatrix::from_column_slice(n, 1, &x);
        for k in 0..n {
            prop_assert!((y[k] - yd[k]).abs() <= 1e-12 * (1.0 + yd[k].abs()));
        }
    }

    #[test]
    fn coupling_respects_conserved_quantities((params, n_max) in small_model(), lambda in 0.1..3.0f64) {
        let basis = build_basis(&params, BasisSpec::Full { n_max }).unwrap();
        let h = assemble(&params, &basis).hamiltonian(lambda).to_dense();
        let states = basis.states();
        let two_j = params.two_j;
        for a in 0..states.len() {
            for b in 0..states.len() {
                if h[(a, b)] == 0.0 {
                    continue;
                }
                let (ma, mb) = (states[a].excitations(two_j), states[b].excitations(two_j));
                prop_assert_eq!(ma % 2, mb % 2);
                if params.delta == 0.0 {
                    prop_assert_eq!(ma, mb);
                }
            }
        }
    }

    #[test]
    fn excitation_number_blocks_at_zero_counter_rotation(
        w in 0.2..3.0f64, two_j in 1u32..7, n_max in 2u32..9, lambda in 0.1..3.0f64
    ) {
        let params = ModelParams::new(w, 1.0, 0.0, two_j, n_max).unwrap();
        let basis = build_basis(&params, BasisSpec::Full { n_max }).unwrap();
        let h = assemble(&params, &basis).hamiltonian(lambda).to_dense();
        let states = basis.states();
        for a in 0..states.len() {
            for b in 0..states.len() {
                if states[a].excitations(two_j) != states[b].excitations(two_j) {
                    prop_assert_eq!(h[(a, b)], 0.0);
                }
            }
        }
    }

    #[test]
    fn dispersion_closed_form_matches_matrix((params, n_max) in small_model(), p in parity()) {
        let basis = build_basis(&params, BasisSpec::FullParity { parity: p, n_max }).unwrap();
        let split = assemble(&params, &basis);
        for (k, s) in basis.states().iter().enumerate().filter(|(_, s)| s.n < n_max) {
            let a = interaction_dispersion_analytic(&params, s.n, s.two_m);
            let b = interaction_dispersion_numeric(&split, k);
            prop_assert!((a - b).abs() <= 1e-12 * (1.0 + a.abs()), "{} vs {}", a, b);
        }
    }

    #[test]
    fn dense_eigensystem_reconstructs_matrix(a in random_band()) {
        let d = a.to_dense();
        let (vals, vecs) = dense_eigen(&d).unwrap();
        let rebuilt = &vecs * DMatrix::from_diagonal(&nalgebra::DVector::from_vec(vals.clone())) * vecs.transpose();
        prop_assert!((&rebuilt - &d).amax() <= 1e-11 * (1.0 + d.amax()));
        prop_assert!(vals.windows(2).all(|w| w[0] <= w[1]));
    }

    #[test]
    fn band_eigenvalues_match_dense(a in random_band()) {
        let band = band_eigenvalues(&a).unwrap();
        let (dense, _) = dense_eigen(&a.to_dense()).unwrap();
        let scale = 1.0 + a.norm_inf();
        for (x, y) in band.iter().zip(&dense) {
            prop_assert!((x - y).abs() <= 1e-11 * scale);
        }
    }

    #[test]
    fn band_projections_match_dense(a in random_band(), seed in prop::collection::vec(-1.0..1.0f64, 40)) {
        let n = a.dim();
        let y: Vec<f64> = seed[..n].to_vec();
        let spec = band_spectrum(&a, vec![y.clone()]).unwrap();
        let (vals, vecs) = dense_eigen(&a.to_dense()).unwrap();
        // compare squared projections summed over (near-)degenerate clusters
        let tol = 1e-8 * (1.0 + a.norm_inf());
        let mut l = 0;
        while l < n {
            let mut r = l + 1;
            while r < n && vals[r] - vals[r - 1] <= tol {
                r += 1;
            }
            let band_w: f64 = spec.projections[0][l..r].iter().map(|p| p * p).sum();
            let dense_w: f64 = (l..r)
                .map(|k| vecs.column(k).iter().zip(&y).map(|(v, x)| v * x).sum::<f64>().powi(2))
                .sum();
            prop_assert!((band_w - dense_w).abs() <= 1e-9 * (1.0 + dense_w));
            l = r;
        }
    }

    #[test]
    fn quench_sum_rules(
        (params, n_max) in small_model(), p in parity(), li in 0.0..2.5f64, lf in 0.0..2.5f64, level in 0usize..4,
        times in prop::collection::vec(0.0..50.0f64, 1..20)
    ) {
        let spec = BasisSpec::FullParity { parity: p, n_max };
        let basis = build_basis(&params, spec).unwrap();
        let split = assemble(&params, &basis);
        let level = level.min(split.dim() - 1);
        let state = prepare_state(&split, li, InitialState::Eigenstate(level)).unwrap();
        let r = quench_prepared(&params, &split, &state, lf).unwrap();
        assert_relative_eq!(r.weights().iter().sum::<f64>(), 1.0, epsilon = 1e-10);
        let mut t = vec![0.0];
        let mut rest = times;
        rest.sort_by(f64::total_cmp);
        rest.dedup();
        t.extend(rest.into_iter().filter(|x| *x > 0.0));
        let series = survival_probability(&r, &TimeGrid::from_times(t).unwrap());
        prop_assert!((series.values[0] - 1.0).abs() <= 1e-12);
        prop_assert!(series.values.iter().all(|v| *v <= 1.0 + 1e-12 && *v >= -1e-12));
    }

    #[test]
    fn smoothed_density_counts_levels(
        mut levels in prop::collection::vec(-5.0..5.0f64, 1..60), width in 0.05..0.5f64
    ) {
        levels.sort_by(f64::total_cmp);
        let d = smoothed_density(&levels, width, (-5.0 - 12.0 * width, 5.0 + 12.0 * width), 4000).unwrap();
        assert_relative_eq!(d.integral(), levels.len() as f64, max_relative = 1e-6);
    }
}
