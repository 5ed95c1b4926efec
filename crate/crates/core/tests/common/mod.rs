//! Independent reference computations shared by the integration tests.
#![allow(dead_code)]

use escher::Vec3;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Gauss-Legendre nodes and weights on [-1, 1], by Newton iteration on P_n.
pub fn legendre_rule(n: usize) -> Vec<(f64, f64)> {
    (0..n)
        .map(|i| {
            let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
            let mut dp = 0.0;
            for _ in 0..100 {
                let (mut p0, mut p1) = (1.0, x);
                for k in 2..=n {
                    let p2 = ((2 * k - 1) as f64 * x * p1 - (k - 1) as f64 * p0) / k as f64;
                    p0 = p1;
                    p1 = p2;
                }
                dp = n as f64 * (x * p1 - p0) / (x * x - 1.0);
                let dx = p1 / dp;
                x -= dx;
                if dx.abs() < 1e-16 {
                    break;
                }
            }
            (x, 2.0 / ((1.0 - x * x) * dp * dp))
        })
        .collect()
}

/// Integrates `f(l0, l1, l2)` over a triangle of area `area` with a collapsed
/// 6x6 Gauss product rule, exact for polynomials of degree 10.
pub fn integrate_deg10(area: f64, f: impl Fn([f64; 3]) -> f64) -> f64 {
    let g = legendre_rule(6);
    let mut sum = 0.0;
    for &(xi, wi) in &g {
        for &(eta, wj) in &g {
            let s = 0.5 * (xi + 1.0);
            let t = 0.5 * (eta + 1.0);
            // (s, t) on the square -> (l1, l2) = (s (1 - t), t) on the triangle
            let l1 = s * (1.0 - t);
            let l2 = t;
            let jac = 0.25 * (1.0 - t);
            sum += wi * wj * jac * f([1.0 - l1 - l2, l1, l2]);
        }
    }
    2.0 * area * sum
}

pub fn triangle_area(v: [Vec3; 3]) -> f64 {
    0.5 * (v[1] - v[0]).cross(v[2] - v[0]).norm()
}

/// Cotangent form of the P1 stiffness matrix.
pub fn cotangent_stiffness(v: [Vec3; 3]) -> [[f64; 3]; 3] {
    let mut k = [[0.0; 3]; 3];
    for c in 0..3 {
        let (a, b) = ((c + 1) % 3, (c + 2) % 3);
        let (e1, e2) = (v[a] - v[c], v[b] - v[c]);
        let cot = e1.dot(e2) / e1.cross(e2).norm();
        k[a][b] -= 0.5 * cot;
        k[b][a] -= 0.5 * cot;
        k[a][a] += 0.5 * cot;
        k[b][b] += 0.5 * cot;
    }
    k
}

pub fn random_triangle(r: &mut impl Rng) -> [Vec3; 3] {
    loop {
        let mut p = || Vec3::new(r.random_range(-1.0..1.0), r.random_range(-1.0..1.0), r.random_range(-1.0..1.0));
        let v = [p(), p(), p()];
        if triangle_area(v) > 0.05 {
            return v;
        }
    }
}

pub fn max_abs_diff(a: &[f64], b: &[f64]) -> f64 {
    assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

pub fn max_abs(a: &[f64]) -> f64 {
    a.iter().fold(0.0f64, |m, v| m.max(v.abs()))
}

/// Largest entry deviation of the element mass and stiffness matrices from
/// the degree-10 quadrature of `l_i l_j` and the cotangent formula, relative
/// to the largest entry, over `count` random triangles.
pub fn element_matrix_deviation(seed: u64, count: usize) -> (f64, f64) {
    let mut r = rng(seed);
    let (mut dm, mut dk) = (0.0f64, 0.0f64);
    for _ in 0..count {
        let v = random_triangle(&mut r);
        let area = triangle_area(v);
        let m = escher::assembly::element_mass(area);
        let k = escher::assembly::element_stiffness(v);
        let cot = cotangent_stiffness(v);
        let kscale = k.iter().flatten().fold(0.0f64, |a, b| a.max(b.abs()));
        for i in 0..3 {
            for j in 0..3 {
                let exact = integrate_deg10(area, |l| l[i] * l[j]);
                dm = dm.max((m[i][j] - exact).abs() / (area / 6.0));
                dk = dk.max((k[i][j] - cot[i][j]).abs() / kscale);
            }
        }
    }
    (dm, dk)
}

/// `int F1'(U) phi_j` assembled element by element with the degree-10 rule.
pub fn nonlinear_load_oracle(mesh: &escher::SurfaceMesh, alpha: &[f64], pot: &escher::Potential) -> Vec<f64> {
    let mut load = vec![0.0; mesh.node_count()];
    for (k, t) in mesh.triangles().iter().enumerate() {
        let area = triangle_area(mesh.triangle_vertices(k));
        for j in 0..3 {
            load[t[j]] += integrate_deg10(area, |l| {
                let u = l[0] * alpha[t[0]] + l[1] * alpha[t[1]] + l[2] * alpha[t[2]];
                (pot.df1)(u) * l[j]
            });
        }
    }
    load
}

/// Relative max deviation between the assembled nonlinear load and the oracle.
pub fn nonlinear_load_deviation(mesh: &escher::SurfaceMesh, alpha: &[f64], pot: &escher::Potential) -> f64 {
    let load = escher::assembly::assemble_nonlinear_load(mesh, alpha, pot);
    let oracle = nonlinear_load_oracle(mesh, alpha, pot);
    max_abs_diff(&load, &oracle) / max_abs(&oracle)
}

/// Relative max deviation between `J v` and the central difference of the
/// nonlinear load along `v`.
pub fn jacobian_fd_deviation(mesh: &escher::SurfaceMesh, alpha: &[f64], v: &[f64], pot: &escher::Potential) -> f64 {
    let d = 1e-5;
    let shifted = |s: f64| -> Vec<f64> {
        let a: Vec<f64> = alpha.iter().zip(v).map(|(a, v)| a + s * v).collect();
        escher::assembly::assemble_nonlinear_load(mesh, &a, pot)
    };
    let (plus, minus) = (shifted(d), shifted(-d));
    let fd: Vec<f64> = plus.iter().zip(&minus).map(|(p, m)| (p - m) / (2.0 * d)).collect();
    let jv = escher::assembly::assemble_nonlinear_jacobian(mesh, alpha, pot).mul_vec(v);
    max_abs_diff(&fd, &jv) / max_abs(&jv)
}

pub fn random_vector(r: &mut impl Rng, n: usize, scale: f64) -> Vec<f64> {
    (0..n).map(|_| r.random_range(-scale..scale)).collect()
}

/// Interpolation errors of a smooth function on icospheres `base..base+levels`,
/// measured on an icosphere `extra` levels finer than the finest one.
/// Returns `(h, L2 error, H1-semi error)` per level.
pub fn interpolation_errors(base: usize, levels: usize, extra: usize) -> Vec<(f64, f64, f64)> {
    use escher::diagnostics::{h1_semi_error, l2_error};
    let f = |x: Vec3| (2.0 * x.x).sin() * x.y.cos() + x.z * x.z;
    let coarse = escher::build_icosphere(&escher::LevelSetSurface::unit_sphere(), base, 0.0).unwrap();
    let mut hier = escher::MeshHierarchy::new(coarse);
    for _ in 0..levels - 1 + extra {
        hier.refine_finest().unwrap();
    }
    let top = hier.len() - 1;
    let fine = hier.finest();
    let exact: Vec<f64> = fine.nodes().iter().map(|&x| f(x)).collect();
    (0..levels)
        .map(|l| {
            let m = hier.level(l).unwrap();
            let vals: Vec<f64> = m.nodes().iter().map(|&x| f(x)).collect();
            let p = hier.prolong_to(l, top, &vals).unwrap();
            (m.mesh_size_h(), l2_error(fine, &p, &exact).unwrap(), h1_semi_error(fine, &p, &exact).unwrap())
        })
        .collect()
}

pub fn scheme(kind: escher::SchemeKind, epsilon: f64, tau: f64, t_final: f64) -> escher::SchemeConfig {
    escher::SchemeConfig {
        epsilon,
        tau,
        t_final,
        scheme: kind,
        ..Default::default()
    }
}

/// Largest step-to-step energy increase (negative when strictly decreasing).
pub fn max_energy_increase(traj: &escher::scheme::Trajectory) -> f64 {
    traj.records
        .windows(2)
        .map(|w| w[1].energy - w[0].energy)
        .fold(f64::NEG_INFINITY, f64::max)
}

/// Solves one fully implicit step from the given state twice, from the
/// previous state and from a scrambled guess, and returns the max-norm
/// distance of the two solutions.
pub fn uniqueness_gap(mesh: &escher::SurfaceMesh, tau: f64, epsilon: f64, seed: u64) -> f64 {
    use escher::scheme::Integrator;
    let pot = escher::Potential::quartic();
    let cfg = scheme(escher::SchemeKind::FullyImplicit, epsilon, tau, tau);
    let mut integ = Integrator::new(mesh, cfg, pot);
    let alpha = escher::InitialData::SphereEoc.interpolate(mesh);
    let beta = integ.chemical_potential(mesh, &alpha).unwrap();
    let state = escher::PhaseState {
        alpha,
        beta,
        time: mesh.time(),
        step: 0,
    };
    let next = mesh.advance_mesh(mesh.time() + tau).unwrap();
    let a = integ.step(mesh, &next, &state).unwrap().state;
    let mut r = rng(seed);
    let ga = random_vector(&mut r, mesh.node_count(), 1.0);
    let gb = random_vector(&mut r, mesh.node_count(), 5.0);
    let b = integ.step_from(mesh, &next, &state, &ga, &gb).unwrap().state;
    max_abs_diff(&a.alpha, &b.alpha).max(max_abs_diff(&a.beta, &b.beta))
}
