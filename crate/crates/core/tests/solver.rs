mod common;

use common::*;
use escher::scheme::{run_simulation, Integrator};
use escher::{build_icosphere, build_torus_mesh, InitialData, LevelSetSurface, PhaseState, Potential, SchemeKind};

#[test]
fn mass_is_conserved_on_evolving_surfaces() {
    let pot = Potential::quartic();
    let meshes = [
        build_icosphere(&LevelSetSurface::oscillating_sphere(), 2, 0.0).unwrap(),
        build_torus_mesh(&LevelSetSurface::constant_area_torus(), 20, 10, 0.0).unwrap(),
        build_torus_mesh(&LevelSetSurface::periodic_torus(), 20, 10, 0.0).unwrap(),
    ];
    for mesh in &meshes {
        let initial = if mesh.surface().is_torus() { InitialData::Torus } else { InitialData::SphereEoc };
        let alpha0 = initial.interpolate(mesh);
        for kind in [SchemeKind::FullyImplicit, SchemeKind::Imex] {
            let traj = run_simulation(&scheme(kind, 0.05, 1e-4, 1e-2), &pot, mesh, &alpha0).unwrap();
            assert_eq!(traj.records.len(), 101);
            let drift = traj.max_relative_mass_drift();
            assert!(drift < 1e-8, "{} {}: drift {drift:e}", mesh.surface().name(), kind.name());
        }
    }
}

#[test]
fn step_solution_is_unique_below_the_bound() {
    let mesh = build_icosphere(&LevelSetSurface::oscillating_sphere(), 2, 0.0).unwrap();
    for seed in 0..3 {
        let gap = uniqueness_gap(&mesh, 1e-4, 0.05, seed);
        assert!(gap < 1e-9, "gap {gap:e}");
    }
}

#[test]
fn energy_decays_on_a_static_sphere() {
    let pot = Potential::quartic();
    let mesh = build_icosphere(&LevelSetSurface::unit_sphere(), 2, 0.0).unwrap();
    let alpha0 = InitialData::SmoothRandom { seed: 9 }.interpolate(&mesh);
    for (kind, tau) in [(SchemeKind::Imex, 1e-2), (SchemeKind::Imex, 1e-3), (SchemeKind::FullyImplicit, 2.5e-4)] {
        let traj = run_simulation(&scheme(kind, 0.05, tau, 100.0 * tau), &pot, &mesh, &alpha0).unwrap();
        let up = max_energy_increase(&traj);
        assert!(up <= 1e-10, "{} tau {tau}: energy rose by {up:e}", kind.name());
    }
}

#[test]
fn schemes_differ_at_first_order() {
    // both schemes are first order in time, so their difference halves with tau
    let pot = Potential::quartic();
    let mesh = build_icosphere(&LevelSetSurface::oscillating_sphere(), 2, 0.0).unwrap();
    let alpha0 = InitialData::SphereEoc.interpolate(&mesh);
    let gap = |tau: f64| {
        let run = |kind| run_simulation(&scheme(kind, 0.2, tau, 0.02), &pot, &mesh, &alpha0).unwrap().final_state.alpha;
        max_abs_diff(&run(SchemeKind::FullyImplicit), &run(SchemeKind::Imex))
    };
    let ratio = gap(2e-3) / gap(1e-3);
    assert!((1.6..=2.4).contains(&ratio), "ratio {ratio}");
}

#[test]
fn newton_converges_superlinearly() {
    let mesh = build_icosphere(&LevelSetSurface::oscillating_sphere(), 3, 0.0).unwrap();
    let mut integ = Integrator::new(&mesh, scheme(SchemeKind::FullyImplicit, 0.05, 1e-4, 1e-4), Potential::quartic());
    let alpha = InitialData::SphereEoc.interpolate(&mesh);
    let beta = integ.chemical_potential(&mesh, &alpha).unwrap();
    let state = PhaseState { alpha, beta, time: 0.0, step: 0 };
    let next = mesh.advance_mesh(1e-4).unwrap();
    let res = integ.step(&mesh, &next, &state).unwrap().residuals;
    assert!(*res.last().unwrap() <= 1e-11);
    // contraction factors shrink along the tail
    let rates: Vec<f64> = res.windows(2).filter(|w| w[0] > 1e-10).map(|w| w[1] / w[0]).collect();
    assert!(!rates.is_empty());
    assert!(rates.windows(2).all(|r| r[1] < r[0]), "residuals {res:?}");
    assert!(*rates.last().unwrap() < 1e-2, "residuals {res:?}");
}

#[test]
fn pure_phase_is_a_fixed_point() {
    let pot = Potential::quartic();
    let mesh = build_icosphere(&LevelSetSurface::unit_sphere(), 2, 0.0).unwrap();
    let ones = vec![1.0; mesh.node_count()];
    for kind in [SchemeKind::FullyImplicit, SchemeKind::Imex] {
        let traj = run_simulation(&scheme(kind, 0.05, 1e-3, 1e-2), &pot, &mesh, &ones).unwrap();
        assert!(max_abs_diff(&traj.final_state.alpha, &ones) < 1e-13);
        assert!(max_abs(&traj.final_state.beta) < 1e-12);
        assert!(traj.records.iter().all(|r| r.energy == 0.0));
    }
}
