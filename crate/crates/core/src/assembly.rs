//! Piecewise-linear surface finite element assembly.
//!
//! All operators share the vertex-adjacency pattern of the mesh. Element
//! contributions are computed independently (in parallel with the `parallel`
//! feature) and then scattered in triangle order, so assembled values do not
//! depend on the thread count.

use std::sync::Arc;

use crate::error::{Error, Result};
use crate::mesh::{SurfaceMesh, MIN_TRIANGLE_AREA};
use crate::potential::Potential;
use crate::quadrature::{quadrature_rule, QuadratureRule};
use crate::sparse::{CsrPattern, SparseMatrix};
use crate::vec3::Vec3;

type ElementMatrix = [[f64; 3]; 3];

/// Mass and stiffness matrices on one mesh.
#[derive(Debug, Clone)]
pub struct AssembledOperators {
    pub mass: SparseMatrix,
    pub stiffness: SparseMatrix,
    pub time: f64,
}

impl AssembledOperators {
    pub fn node_count(&self) -> usize {
        self.mass.nrows()
    }
}

/// Assembly context for one mesh connectivity. Node positions may change
/// between calls; the triangle list may not.
#[derive(Debug, Clone)]
pub struct Assembler {
    pattern: Arc<CsrPattern>,
    /// CSR positions of the nine local entries of each triangle.
    slots: Vec<[usize; 9]>,
    rule: QuadratureRule,
}

impl Assembler {
    pub fn new(mesh: &SurfaceMesh) -> Self {
        let n = mesh.node_count();
        let mut rows: Vec<Vec<usize>> = (0..n).map(|i| vec![i]).collect();
        for t in mesh.triangles() {
            for &a in t {
                rows[a].extend_from_slice(t);
            }
        }
        let pattern = Arc::new(CsrPattern::from_rows(n, rows));
        let slots = mesh
            .triangles()
            .iter()
            .map(|t| {
                let mut s = [0; 9];
                for i in 0..3 {
                    for j in 0..3 {
                        s[3 * i + j] = pattern.position(t[i], t[j]).unwrap();
                    }
                }
                s
            })
            .collect();
        Assembler {
            pattern,
            slots,
            rule: quadrature_rule(4).unwrap(),
        }
    }

    pub fn pattern(&self) -> &Arc<CsrPattern> {
        &self.pattern
    }

    fn check_mesh(&self, mesh: &SurfaceMesh) {
        assert_eq!(mesh.triangle_count(), self.slots.len(), "assembler used with a different connectivity");
    }

    fn scatter(&self, elements: &[ElementMatrix]) -> SparseMatrix {
        let mut m = SparseMatrix::zeros(self.pattern.clone());
        let values = m.values_mut();
        for (e, slots) in elements.iter().zip(&self.slots) {
            for i in 0..3 {
                for j in 0..3 {
                    values[slots[3 * i + j]] += e[i][j];
                }
            }
        }
        m
    }

    pub fn mass(&self, mesh: &SurfaceMesh) -> Result<SparseMatrix> {
        self.check_mesh(mesh);
        let elements = try_element_map(mesh, |k| {
            let area = checked_area(mesh, k)?;
            Ok(element_mass(area))
        })?;
        Ok(self.scatter(&elements))
    }

    pub fn stiffness(&self, mesh: &SurfaceMesh) -> Result<SparseMatrix> {
        self.check_mesh(mesh);
        let elements = try_element_map(mesh, |k| {
            checked_area(mesh, k)?;
            Ok(element_stiffness(mesh.triangle_vertices(k)))
        })?;
        Ok(self.scatter(&elements))
    }

    pub fn operators(&self, mesh: &SurfaceMesh) -> Result<AssembledOperators> {
        Ok(AssembledOperators {
            mass: self.mass(mesh)?,
            stiffness: self.stiffness(mesh)?,
            time: mesh.time(),
        })
    }

    /// `F_j = int F1'(U) phi_j` with the degree-4 rule, exact for the quartic.
    pub fn nonlinear_load(&self, mesh: &SurfaceMesh, alpha: &[f64], pot: &Potential) -> Vec<f64> {
        self.check_mesh(mesh);
        assert_eq!(alpha.len(), mesh.node_count());
        let locals = element_map(mesh, |k| {
            let t = mesh.triangles()[k];
            let area = mesh.triangle_area(k);
            let a = [alpha[t[0]], alpha[t[1]], alpha[t[2]]];
            let mut local = [0.0; 3];
            for (p, w) in self.rule.points.iter().zip(&self.rule.weights) {
                let u = interpolate(p, a);
                let f = area * w * (pot.df1)(u);
                for j in 0..3 {
                    local[j] += f * p[j];
                }
            }
            local
        });
        let mut load = vec![0.0; mesh.node_count()];
        for (t, local) in mesh.triangles().iter().zip(&locals) {
            for j in 0..3 {
                load[t[j]] += local[j];
            }
        }
        load
    }

    /// `J_ij = int F1''(U) phi_i phi_j`, the derivative of [`nonlinear_load`](Self::nonlinear_load).
    pub fn nonlinear_jacobian(&self, mesh: &SurfaceMesh, alpha: &[f64], pot: &Potential) -> SparseMatrix {
        self.check_mesh(mesh);
        assert_eq!(alpha.len(), mesh.node_count());
        let elements = element_map(mesh, |k| {
            let t = mesh.triangles()[k];
            let area = mesh.triangle_area(k);
            let a = [alpha[t[0]], alpha[t[1]], alpha[t[2]]];
            let mut e = [[0.0; 3]; 3];
            for (p, w) in self.rule.points.iter().zip(&self.rule.weights) {
                let u = interpolate(p, a);
                let f = area * w * (pot.d2f1)(u);
                for i in 0..3 {
                    for j in 0..3 {
                        e[i][j] += f * p[i] * p[j];
                    }
                }
            }
            e
        });
        self.scatter(&elements)
    }

    /// `int F(U)` over the discrete surface.
    pub fn potential_integral(&self, mesh: &SurfaceMesh, alpha: &[f64], pot: &Potential) -> f64 {
        let locals = element_map(mesh, |k| {
            let t = mesh.triangles()[k];
            let area = mesh.triangle_area(k);
            self.rule
                .points
                .iter()
                .zip(&self.rule.weights)
                .map(|(p, w)| {
                    let u = interpolate(p, [alpha[t[0]], alpha[t[1]], alpha[t[2]]]);
                    area * w * pot.value(u)
                })
                .sum::<f64>()
        });
        locals.iter().sum()
    }

    /// `int |grad U|^2`, evaluated element-wise from nodal differences so
    /// that constants give exactly zero.
    pub fn dirichlet_energy(&self, mesh: &SurfaceMesh, alpha: &[f64]) -> f64 {
        let locals = element_map(mesh, |k| {
            let t = mesh.triangles()[k];
            let verts = mesh.triangle_vertices(k);
            let g = hat_gradients(verts);
            let grad = g[1] * (alpha[t[1]] - alpha[t[0]]) + g[2] * (alpha[t[2]] - alpha[t[0]]);
            mesh.triangle_area(k) * grad.norm_squared()
        });
        locals.iter().sum()
    }

    /// `int f` over the discrete surface for a pointwise function.
    pub fn integrate_function(&self, mesh: &SurfaceMesh, f: impl Fn(Vec3) -> f64 + Sync) -> f64 {
        let locals = element_map(mesh, |k| {
            let [a, b, c] = mesh.triangle_vertices(k);
            let area = mesh.triangle_area(k);
            self.rule
                .points
                .iter()
                .zip(&self.rule.weights)
                .map(|(p, w)| area * w * f(a * p[0] + b * p[1] + c * p[2]))
                .sum::<f64>()
        });
        locals.iter().sum()
    }

    /// `b_j = int g . grad phi_j` for a pointwise vector field `g`.
    pub fn gradient_load(&self, mesh: &SurfaceMesh, g: impl Fn(Vec3) -> Vec3 + Sync) -> Vec<f64> {
        let locals = element_map(mesh, |k| {
            let verts = mesh.triangle_vertices(k);
            let [a, b, c] = verts;
            let area = mesh.triangle_area(k);
            let grads = hat_gradients(verts);
            let mut local = [0.0; 3];
            for (p, w) in self.rule.points.iter().zip(&self.rule.weights) {
                let gx = g(a * p[0] + b * p[1] + c * p[2]);
                for j in 0..3 {
                    local[j] += area * w * gx.dot(grads[j]);
                }
            }
            local
        });
        let mut load = vec![0.0; mesh.node_count()];
        for (t, local) in mesh.triangles().iter().zip(&locals) {
            for j in 0..3 {
                load[t[j]] += local[j];
            }
        }
        load
    }
}

pub fn assemble_mass(mesh: &SurfaceMesh) -> Result<SparseMatrix> {
    Assembler::new(mesh).mass(mesh)
}

pub fn assemble_stiffness(mesh: &SurfaceMesh) -> Result<SparseMatrix> {
    Assembler::new(mesh).stiffness(mesh)
}

pub fn assemble_nonlinear_load(mesh: &SurfaceMesh, alpha: &[f64], pot: &Potential) -> Vec<f64> {
    Assembler::new(mesh).nonlinear_load(mesh, alpha, pot)
}

pub fn assemble_nonlinear_jacobian(mesh: &SurfaceMesh, alpha: &[f64], pot: &Potential) -> SparseMatrix {
    Assembler::new(mesh).nonlinear_jacobian(mesh, alpha, pot)
}

/// `|K| / 12 * [[2,1,1],[1,2,1],[1,1,2]]`.
pub fn element_mass(area: f64) -> ElementMatrix {
    let d = area / 6.0;
    let o = area / 12.0;
    [[d, o, o], [o, d, o], [o, o, d]]
}

/// Tangential gradients of the three hat functions in the triangle plane.
pub fn hat_gradients(v: [Vec3; 3]) -> [Vec3; 3] {
    let n = (v[1] - v[0]).cross(v[2] - v[0]);
    let twice_area_sq = n.norm_squared();
    // grad lambda_i = n x e_i / |n|^2, e_i the edge opposite vertex i
    let edges = [v[2] - v[1], v[0] - v[2], v[1] - v[0]];
    edges.map(|e| n.cross(e) / twice_area_sq)
}

/// `K_ij = e_i . e_j / (4 |K|)` with `e_i` the edge opposite vertex `i`.
pub fn element_stiffness(v: [Vec3; 3]) -> ElementMatrix {
    let edges = [v[2] - v[1], v[0] - v[2], v[1] - v[0]];
    let area = 0.5 * (v[1] - v[0]).cross(v[2] - v[0]).norm();
    let mut k = [[0.0; 3]; 3];
    for i in 0..3 {
        for j in 0..3 {
            k[i][j] = edges[i].dot(edges[j]) / (4.0 * area);
        }
    }
    k
}

/// P1 interpolant at a barycentric point, written so that constant data is
/// reproduced exactly.
#[inline]
fn interpolate(p: &[f64; 3], a: [f64; 3]) -> f64 {
    a[0] + p[1] * (a[1] - a[0]) + p[2] * (a[2] - a[0])
}

fn checked_area(mesh: &SurfaceMesh, k: usize) -> Result<f64> {
    let area = mesh.triangle_area(k);
    if area > MIN_TRIANGLE_AREA {
        Ok(area)
    } else {
        Err(Error::DegenerateTriangle { triangle: k, area })
    }
}

#[cfg(feature = "parallel")]
fn element_map<T: Send>(mesh: &SurfaceMesh, f: impl Fn(usize) -> T + Sync) -> Vec<T> {
    use rayon::prelude::*;
    (0..mesh.triangle_count()).into_par_iter().map(&f).collect()
}

#[cfg(not(feature = "parallel"))]
fn element_map<T>(mesh: &SurfaceMesh, f: impl Fn(usize) -> T) -> Vec<T> {
    (0..mesh.triangle_count()).map(f).collect()
}

fn try_element_map<T: Send>(mesh: &SurfaceMesh, f: impl Fn(usize) -> Result<T> + Sync + Send) -> Result<Vec<T>> {
    element_map(mesh, f).into_iter().collect()
}
