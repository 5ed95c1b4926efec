mod common;

use common::*;
use escher::assembly::{assemble_mass, assemble_stiffness};
use escher::sparse::SparseMatrix;
use escher::{build_icosphere, build_torus_mesh, LevelSetSurface, Potential};

#[test]
fn element_matrices_match_closed_forms() {
    let (dm, dk) = element_matrix_deviation(11, 500);
    assert!(dm < 1e-13, "mass deviation {dm:e}");
    assert!(dk < 1e-13, "stiffness deviation {dk:e}");
}

#[test]
fn nonlinear_load_matches_over_integration() {
    let pot = Potential::quartic();
    let mut r = rng(3);
    for mesh in [
        build_icosphere(&LevelSetSurface::oscillating_sphere(), 2, 0.0).unwrap(),
        build_torus_mesh(&LevelSetSurface::periodic_torus(), 16, 8, 0.3).unwrap(),
    ] {
        let alpha = random_vector(&mut r, mesh.node_count(), 1.5);
        let d = nonlinear_load_deviation(&mesh, &alpha, &pot);
        assert!(d < 1e-13, "load deviation {d:e}");
    }
}

#[test]
fn jacobian_matches_finite_differences() {
    let pot = Potential::quartic();
    let mesh = build_icosphere(&LevelSetSurface::unit_sphere(), 2, 0.0).unwrap();
    let mut r = rng(5);
    for _ in 0..5 {
        let alpha = random_vector(&mut r, mesh.node_count(), 1.2);
        let v = random_vector(&mut r, mesh.node_count(), 1.0);
        let d = jacobian_fd_deviation(&mesh, &alpha, &v, &pot);
        assert!(d < 1e-6, "jacobian deviation {d:e}");
    }
}

/// Dense Cholesky; `None` when a pivot is not positive.
fn cholesky(mut a: Vec<Vec<f64>>) -> Option<Vec<Vec<f64>>> {
    let n = a.len();
    for j in 0..n {
        let d = a[j][j] - (0..j).map(|k| a[j][k] * a[j][k]).sum::<f64>();
        if d <= 0.0 {
            return None;
        }
        a[j][j] = d.sqrt();
        for i in j + 1..n {
            let s = a[i][j] - (0..j).map(|k| a[i][k] * a[j][k]).sum::<f64>();
            a[i][j] = s / a[j][j];
        }
    }
    Some(a)
}

fn dense_plus(a: &SparseMatrix, shift: f64) -> Vec<Vec<f64>> {
    let mut d = a.to_dense();
    for (i, row) in d.iter_mut().enumerate() {
        row[i] += shift;
    }
    d
}

#[test]
fn mass_is_spd_and_stiffness_psd() {
    for mesh in [
        build_icosphere(&LevelSetSurface::oscillating_sphere(), 2, 0.4).unwrap(),
        build_torus_mesh(&LevelSetSurface::constant_area_torus(), 12, 6, 0.0).unwrap(),
    ] {
        let m = assemble_mass(&mesh).unwrap();
        let a = assemble_stiffness(&mesh).unwrap();
        assert!(m.is_symmetric(1e-15) && a.is_symmetric(1e-14));
        assert!(cholesky(m.to_dense()).is_some(), "mass not positive definite");
        // A has the constants as kernel and is positive definite on the rest,
        // so any positive shift makes it definite.
        assert!(cholesky(dense_plus(&a, 1e-9)).is_some(), "stiffness not semidefinite");
        assert!(max_abs(&a.row_sums()) < 1e-12);
        let total: f64 = m.values().iter().sum();
        assert!((total - mesh.area()).abs() < 1e-12 * mesh.area());
    }
}

#[test]
fn lumped_mass_of_constants_is_area() {
    let mesh = build_icosphere(&LevelSetSurface::unit_sphere(), 3, 0.0).unwrap();
    let m = assemble_mass(&mesh).unwrap();
    let ones = vec![1.0; mesh.node_count()];
    assert!((m.bilinear(&ones, &ones) - mesh.area()).abs() < 1e-12);
    // icospheres approach 4 pi from below at second order in h
    let gap = 4.0 * std::f64::consts::PI - mesh.area();
    assert!(gap > 0.0 && gap < 4.0 * mesh.mesh_size_h().powi(2), "gap {gap}");
}
