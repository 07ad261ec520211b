use nalgebra::DMatrix;
use proptest::prelude::*;
use wgqed::hamiltonian::{build_hamiltonian, site_index, EMITTER};
use wgqed::model::LatticeModel;

fn dense_eigenvalues(model: &LatticeModel) -> Vec<f64> {
    let h = build_hamiltonian(model);
    let rows = h.to_dense();
    let n = rows.len();
    let m = DMatrix::from_fn(n, n, |i, j| rows[i][j]);
    let mut ev: Vec<f64> = m.symmetric_eigenvalues().iter().copied().collect();
    ev.sort_by(f64::total_cmp);
    ev
}

#[test]
fn bisection_matches_dense_solver() {
    for n_half in [1, 2, 5, 10, 20] {
        for (g0, det) in [(0.3, 0.0), (1.7, 0.4), (0.0, -1.1)] {
            let model = LatticeModel::new(0.0, det, 1.0, g0, n_half).unwrap();
            let ours = build_hamiltonian(&model).eigenvalues();
            let dense = dense_eigenvalues(&model);
            assert_eq!(ours.len(), dense.len());
            for (a, b) in ours.iter().zip(&dense) {
                assert!((a - b).abs() < 1e-10, "N={n_half} g0={g0}: {a} vs {b}");
            }
        }
    }
}

#[test]
fn dense_matrix_layout() {
    let model = LatticeModel::resonant(0.3, 3).unwrap();
    let rows = build_hamiltonian(&model).to_dense();
    let s0 = site_index(3, 0);
    assert_eq!(rows[EMITTER][s0], 0.3);
    assert_eq!(rows[s0][EMITTER], 0.3);
    assert_eq!(rows[site_index(3, -1)][site_index(3, 0)], -1.0);
    assert_eq!(rows[EMITTER][site_index(3, 1)], 0.0);
}

#[test]
fn strong_coupling_bound_states_leave_the_band() {
    // Above the band edge the emitter-photon dressed states split off.
    let model = LatticeModel::resonant(1.5, 200).unwrap();
    let (lo, hi) = build_hamiltonian(&model).spectral_range();
    assert!(lo < -2.0 - 1e-3 && hi > 2.0 + 1e-3);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn random_models_agree_with_dense(g0 in 0.0f64..3.0, det in -3.0f64..3.0, n_half in 1usize..15) {
        let model = LatticeModel::new(0.0, det, 1.0, g0, n_half).unwrap();
        let ours = build_hamiltonian(&model).eigenvalues();
        let dense = dense_eigenvalues(&model);
        for (a, b) in ours.iter().zip(&dense) {
            prop_assert!((a - b).abs() < 1e-10);
        }
    }

    #[test]
    fn spectrum_within_gershgorin(g0 in 0.0f64..3.0, det in -3.0f64..3.0) {
        let model = LatticeModel::new(0.0, det, 1.0, g0, 12).unwrap();
        let h = build_hamiltonian(&model);
        let (lo, hi) = h.gershgorin();
        let (a, b) = h.spectral_range();
        prop_assert!(lo <= a && b <= hi);
        prop_assert!(b.abs().max(a.abs()) <= model.spectral_bound() + 1e-12);
    }
}
