use nalgebra::{DMatrix, DVector};
use num_complex::Complex64 as C64;
use proptest::prelude::*;
use wgqed::dynamics::{edge_effect_horizon, evolve, evolve_kspace, EvolutionConfig};
use wgqed::hamiltonian::build_hamiltonian;
use wgqed::model::{ContinuumModel, LatticeModel};
use wgqed::state::{make_virtual_bound_state, spectral_to_wannier, wannier_to_spectral, JointState};
use wgqed::Error;

fn cfg(dt: f64, t_max: f64, sample_every: usize) -> EvolutionConfig {
    EvolutionConfig {
        dt,
        t_max,
        sample_every,
        ..EvolutionConfig::default()
    }
}

/// `exp(-i H t) psi0` through a dense eigendecomposition.
fn dense_propagate(model: &LatticeModel, psi0: &[C64], t: f64) -> Vec<C64> {
    let rows = build_hamiltonian(model).to_dense();
    let n = rows.len();
    let h = DMatrix::from_fn(n, n, |i, j| rows[i][j]);
    let eig = h.symmetric_eigen();
    let v = eig.eigenvectors.map(|x| C64::new(x, 0.0));
    let psi = DVector::from_column_slice(psi0);
    let coeffs = v.adjoint() * psi;
    let phased = DVector::from_iterator(
        n,
        coeffs
            .iter()
            .zip(eig.eigenvalues.iter())
            .map(|(c, e)| c * C64::from_polar(1.0, -e * t)),
    );
    (v * phased).iter().copied().collect()
}

fn normalized(values: Vec<C64>) -> Vec<C64> {
    let n = values.iter().map(|v| v.norm_sqr()).sum::<f64>().sqrt();
    values.into_iter().map(|v| v / n).collect()
}

#[test]
fn matches_dense_exponential_on_small_lattice() {
    let model = LatticeModel::new(0.0, 0.3, 1.0, 0.8, 12).unwrap();
    let psi0 = normalized(
        (0..model.sites() + 1)
            .map(|i| C64::new((i as f64).sin(), (0.3 * i as f64).cos()))
            .collect(),
    );
    let state = JointState::from_parts(psi0[0], psi0[1..].to_vec(), 0.0).unwrap();
    let c = EvolutionConfig {
        store_field: true,
        edge_guard: false,
        ..cfg(0.005, 8.0, 400)
    };
    let tr = evolve(&state, &model, &c).unwrap();
    let snaps = tr.field_snapshots.as_ref().unwrap();
    for (i, &t) in tr.times.iter().enumerate() {
        let want = dense_propagate(&model, &psi0, t);
        assert!((tr.c_a[i] - want[0]).norm() < 1e-8, "t {t}");
        for (a, b) in snaps[i].iter().zip(&want[1..]) {
            assert!((a - b).norm() < 1e-8);
        }
    }
}

#[test]
fn fourth_order_in_dt() {
    let model = LatticeModel::resonant(0.3, 60).unwrap();
    let state = make_virtual_bound_state(&model, 10).unwrap();
    let run = |dt: f64| {
        let c = EvolutionConfig {
            norm_tolerance: 1e-3,
            ..cfg(dt, 20.0, (1.0 / dt).round() as usize)
        };
        *evolve(&state, &model, &c).unwrap().c_a.last().unwrap()
    };
    let reference = run(0.0125);
    let e1 = (run(0.1) - reference).norm();
    let e2 = (run(0.05) - reference).norm();
    let ratio = e1 / e2;
    assert!((ratio - 16.0).abs() < 3.0, "ratio {ratio}");
}

#[test]
fn broadband_state_trips_norm_guard_at_coarse_step() {
    let model = LatticeModel::resonant(0.3, 20).unwrap();
    let psi = normalized(
        (0..42)
            .map(|i| C64::new(if i % 2 == 0 { 1.0 } else { -1.0 }, 0.0))
            .collect(),
    );
    let s = JointState::from_parts(psi[0], psi[1..].to_vec(), 0.0).unwrap();
    let coarse = EvolutionConfig {
        edge_guard: false,
        ..cfg(0.05, 20.0, 10)
    };
    assert!(matches!(evolve(&s, &model, &coarse), Err(Error::NormDrift { .. })));
    let fine = EvolutionConfig {
        edge_guard: false,
        ..cfg(0.005, 20.0, 10)
    };
    assert!(evolve(&s, &model, &fine).is_ok());
}

#[test]
fn survival_independent_of_frame_phase() {
    // A global phase on the initial state leaves |c_a|^2 unchanged.
    let model = LatticeModel::resonant(0.3, 100).unwrap();
    let s = make_virtual_bound_state(&model, 20).unwrap();
    let phase = C64::from_polar(1.0, 0.7);
    let rotated = JointState::from_parts(s.c_a * phase, s.photon.iter().map(|q| q * phase).collect(), 0.0).unwrap();
    let a = evolve(&s, &model, &cfg(0.02, 30.0, 5)).unwrap();
    let b = evolve(&rotated, &model, &cfg(0.02, 30.0, 5)).unwrap();
    for (x, y) in a.survival.iter().zip(&b.survival) {
        assert!((x - y).abs() < 1e-13);
    }
}

#[test]
fn edge_horizon_is_reported() {
    let model = LatticeModel::resonant(0.3, 100).unwrap();
    let s = make_virtual_bound_state(&model, 20).unwrap();
    let tr = evolve(&s, &model, &cfg(0.02, 10.0, 5)).unwrap();
    assert_eq!(tr.metadata.edge_horizon, Some(edge_effect_horizon(&model, &s)));
    assert_eq!(tr.metadata.solver, "exact");
    match evolve(&s, &model, &cfg(0.02, 41.0, 5)) {
        Err(Error::EdgeHorizonExceeded { horizon, .. }) => assert_eq!(horizon, 40.0),
        other => panic!("expected horizon error, got {other:?}"),
    }
}

#[test]
fn bloch_mode_snapshots_transform_back_to_lattice_field() {
    let model = LatticeModel::resonant(0.3, 80).unwrap();
    let s = make_virtual_bound_state(&model, 15).unwrap();
    let c = EvolutionConfig {
        store_field: true,
        ..cfg(0.02, 20.0, 250)
    };
    let lattice = evolve(&s, &model, &c).unwrap();
    let continuum = ContinuumModel::from_lattice(&model, model.sites()).unwrap();
    let phi = wannier_to_spectral(&s.photon, model.sites()).unwrap();
    let bloch = evolve_kspace(&phi, s.c_a, &continuum, &c).unwrap();
    let (ls, bs) = (lattice.field_snapshots.unwrap(), bloch.field_snapshots.unwrap());
    for (q, samples) in ls.iter().zip(bs) {
        let back = spectral_to_wannier(&wgqed::SpectralAmplitude { samples }, model.n_half).unwrap();
        for (a, b) in q.iter().zip(&back) {
            assert!((a - b).norm() < 1e-10);
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    // Broadband states: one RK4 step scales a mode of energy E by
    // |R|^2 = 1 - (E dt)^6 / 72 + ..., so dt = 0.005 keeps the drift
    // over 4000 steps below 1e-8 for |E| <= 4.
    #[test]
    fn norm_is_conserved(
        g0 in 0.0f64..1.0,
        det in -1.0f64..1.0,
        amps in prop::collection::vec((-1.0f64..1.0, -1.0f64..1.0), 42)
    ) {
        let model = LatticeModel::new(0.0, det, 1.0, g0, 20).unwrap();
        let psi = normalized(amps.iter().map(|(a, b)| C64::new(*a, *b)).collect());
        prop_assume!(psi.iter().all(|v| v.is_finite()));
        let s = JointState::from_parts(psi[0], psi[1..].to_vec(), 0.0).unwrap();
        let c = EvolutionConfig { edge_guard: false, ..cfg(0.005, 20.0, 40) };
        let tr = evolve(&s, &model, &c).unwrap();
        prop_assert!(tr.max_norm_deviation() < 1e-8);
        prop_assert!(tr.metadata.max_energy_drift.unwrap() < 1e-8);
    }

    #[test]
    fn lattice_and_bloch_agree_for_random_packets(
        g0 in 0.05f64..1.0,
        amps in prop::collection::vec((-1.0f64..1.0, -1.0f64..1.0), 11)
    ) {
        let model = LatticeModel::resonant(g0, 60).unwrap();
        let mut photon = vec![C64::new(0.0, 0.0); model.sites()];
        for (i, (a, b)) in amps.iter().enumerate() {
            photon[55 + i] = C64::new(*a, *b);
        }
        let mut psi = vec![C64::new(0.3, 0.1)];
        psi.extend(photon);
        let psi = normalized(psi);
        prop_assume!(psi.iter().all(|v| v.is_finite()));
        let s = JointState::from_parts(psi[0], psi[1..].to_vec(), 0.0).unwrap();
        let c = cfg(0.005, 20.0, 40);
        let lattice = evolve(&s, &model, &c).unwrap();
        let continuum = ContinuumModel::from_lattice(&model, model.sites()).unwrap();
        let phi = wannier_to_spectral(&s.photon, model.sites()).unwrap();
        let bloch = evolve_kspace(&phi, s.c_a, &continuum, &c).unwrap();
        for (a, b) in lattice.c_a.iter().zip(&bloch.c_a) {
            prop_assert!((a - b).norm() < 1e-10);
        }
    }
}
