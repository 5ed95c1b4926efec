//! Evolving triangulated surfaces with fixed connectivity.

use std::collections::HashMap;
use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::surface::LevelSetSurface;
use crate::vec3::Vec3;

/// Nodes may sit this far from the zero set.
pub const NODE_TOL: f64 = 1e-10;
/// Smallest admissible triangle area.
pub const MIN_TRIANGLE_AREA: f64 = 1e-14;

#[derive(Debug, Clone, PartialEq)]
pub struct SurfaceMesh {
    nodes: Vec<Vec3>,
    triangles: Vec<[usize; 3]>,
    surface: LevelSetSurface,
    time: f64,
    level: usize,
}

impl SurfaceMesh {
    /// Builds a mesh from raw parts and checks admissibility.
    pub fn new(
        nodes: Vec<Vec3>,
        triangles: Vec<[usize; 3]>,
        surface: LevelSetSurface,
        time: f64,
        level: usize,
    ) -> Result<Self> {
        let mesh = SurfaceMesh {
            nodes,
            triangles,
            surface,
            time,
            level,
        };
        mesh.validate()?;
        Ok(mesh)
    }

    pub fn nodes(&self) -> &[Vec3] {
        &self.nodes
    }

    pub fn triangles(&self) -> &[[usize; 3]] {
        &self.triangles
    }

    pub fn surface(&self) -> &LevelSetSurface {
        &self.surface
    }

    pub fn time(&self) -> f64 {
        self.time
    }

    pub fn level(&self) -> usize {
        self.level
    }

    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    pub fn triangle_count(&self) -> usize {
        self.triangles.len()
    }

    pub fn triangle_vertices(&self, k: usize) -> [Vec3; 3] {
        let [a, b, c] = self.triangles[k];
        [self.nodes[a], self.nodes[b], self.nodes[c]]
    }

    pub fn triangle_area(&self, k: usize) -> f64 {
        let [a, b, c] = self.triangle_vertices(k);
        0.5 * (b - a).cross(c - a).norm()
    }

    /// Area of the discrete surface.
    pub fn area(&self) -> f64 {
        (0..self.triangle_count()).map(|k| self.triangle_area(k)).sum()
    }

    /// Largest triangle diameter (longest edge).
    pub fn mesh_size_h(&self) -> f64 {
        (0..self.triangle_count())
            .map(|k| {
                let [a, b, c] = self.triangle_vertices(k);
                (b - a).norm().max((c - b).norm()).max((a - c).norm())
            })
            .fold(0.0, f64::max)
    }

    /// Smallest inradius divided by `h`; a quasi-uniformity indicator.
    pub fn shape_regularity(&self) -> f64 {
        let min_inradius = (0..self.triangle_count())
            .map(|k| {
                let [a, b, c] = self.triangle_vertices(k);
                let perimeter = (b - a).norm() + (c - b).norm() + (a - c).norm();
                2.0 * self.triangle_area(k) / perimeter
            })
            .fold(f64::INFINITY, f64::min);
        min_inradius / self.mesh_size_h()
    }

    /// Checks closedness, consistent orientation, node placement and
    /// non-degeneracy.
    pub fn validate(&self) -> Result<()> {
        let n = self.nodes.len();
        let mut directed: HashMap<(usize, usize), usize> = HashMap::with_capacity(3 * self.triangles.len());
        for (k, tri) in self.triangles.iter().enumerate() {
            if tri.iter().any(|&i| i >= n) {
                return Err(Error::InvalidMesh(format!("triangle {k} references a missing node")));
            }
            for e in 0..3 {
                let key = (tri[e], tri[(e + 1) % 3]);
                if directed.insert(key, k).is_some() {
                    return Err(Error::InvalidMesh(format!(
                        "edge ({}, {}) is traversed twice in the same direction",
                        key.0, key.1
                    )));
                }
            }
            let area = self.triangle_area(k);
            if !(area > MIN_TRIANGLE_AREA) {
                return Err(Error::DegenerateTriangle { triangle: k, area });
            }
        }
        for &(a, b) in directed.keys() {
            if !directed.contains_key(&(b, a)) {
                return Err(Error::InvalidMesh(format!("edge ({a}, {b}) has only one incident triangle")));
            }
        }
        for (i, &x) in self.nodes.iter().enumerate() {
            let residual = self.surface.level_set_value(x, self.time).abs();
            if !(residual <= NODE_TOL) {
                return Err(Error::InvalidMesh(format!("node {i} is off the surface (|phi| = {residual:e})")));
            }
        }
        Ok(())
    }

    /// Moves every node along the surface flow to time `t1`.
    pub fn advance_mesh(&self, t1: f64) -> Result<SurfaceMesh> {
        let nodes = self
            .nodes
            .iter()
            .map(|&x| self.surface.move_node(x, self.time, t1))
            .collect::<Result<Vec<_>>>()?;
        Ok(SurfaceMesh {
            nodes,
            triangles: self.triangles.clone(),
            surface: self.surface,
            time: t1,
            level: self.level,
        })
    }

    /// Uniform red refinement: each triangle is split into four through its
    /// edge midpoints, and the midpoints are projected onto the surface.
    pub fn refine(&self) -> Result<SurfaceMesh> {
        self.refine_with_parents().map(|(mesh, _)| mesh)
    }

    /// Like [`refine`](Self::refine), also returning the parent record of every
    /// fine node.
    pub fn refine_with_parents(&self) -> Result<(SurfaceMesh, Vec<Parent>)> {
        let mut nodes = self.nodes.clone();
        let mut parents: Vec<Parent> = (0..self.nodes.len()).map(Parent::Vertex).collect();
        let mut midpoint_of: HashMap<(usize, usize), usize> = HashMap::with_capacity(self.triangles.len() * 3 / 2);
        let mut triangles = Vec::with_capacity(4 * self.triangles.len());

        for tri in &self.triangles {
            let mut mid = [0usize; 3];
            for e in 0..3 {
                let (a, b) = (tri[e], tri[(e + 1) % 3]);
                let key = (a.min(b), a.max(b));
                mid[e] = match midpoint_of.get(&key) {
                    Some(&m) => m,
                    None => {
                        let p = self
                            .surface
                            .project_to_surface((self.nodes[a] + self.nodes[b]) * 0.5, self.time)?;
                        nodes.push(p);
                        parents.push(Parent::Edge([key.0, key.1]));
                        midpoint_of.insert(key, nodes.len() - 1);
                        nodes.len() - 1
                    }
                };
            }
            let [a, b, c] = *tri;
            let [ab, bc, ca] = mid;
            triangles.push([a, ab, ca]);
            triangles.push([ab, b, bc]);
            triangles.push([ca, bc, c]);
            triangles.push([ab, bc, ca]);
        }

        let mesh = SurfaceMesh::new(nodes, triangles, self.surface, self.time, self.level + 1)?;
        Ok((mesh, parents))
    }

    /// Applies a node relabelling: new node `i` is old node `perm[i]`.
    pub fn permuted(&self, perm: &[usize]) -> Result<SurfaceMesh> {
        if perm.len() != self.nodes.len() {
            return Err(Error::LengthMismatch {
                expected: self.nodes.len(),
                found: perm.len(),
            });
        }
        let mut inverse = vec![usize::MAX; perm.len()];
        for (new, &old) in perm.iter().enumerate() {
            inverse[old] = new;
        }
        let nodes = perm.iter().map(|&old| self.nodes[old]).collect();
        let triangles = self
            .triangles
            .iter()
            .map(|t| [inverse[t[0]], inverse[t[1]], inverse[t[2]]])
            .collect();
        SurfaceMesh::new(nodes, triangles, self.surface, self.time, self.level)
    }
}

/// Icosahedron refined `subdivisions` times with all nodes on the sphere at `t0`.
pub fn build_icosphere(surface: &LevelSetSurface, subdivisions: usize, t0: f64) -> Result<SurfaceMesh> {
    let mut mesh = icosahedron(surface, t0)?;
    for _ in 0..subdivisions {
        mesh = mesh.refine()?;
    }
    Ok(mesh)
}

fn icosahedron(surface: &LevelSetSurface, t0: f64) -> Result<SurfaceMesh> {
    if !surface.is_sphere() {
        return Err(Error::WrongSurfaceKind {
            expected: "sphere",
            found: surface.name(),
        });
    }
    let g = (1.0 + 5f64.sqrt()) / 2.0;
    let raw = [
        [-1.0, g, 0.0],
        [1.0, g, 0.0],
        [-1.0, -g, 0.0],
        [1.0, -g, 0.0],
        [0.0, -1.0, g],
        [0.0, 1.0, g],
        [0.0, -1.0, -g],
        [0.0, 1.0, -g],
        [g, 0.0, -1.0],
        [g, 0.0, 1.0],
        [-g, 0.0, -1.0],
        [-g, 0.0, 1.0],
    ];
    let nodes = raw
        .iter()
        .map(|&p| surface.project_to_surface(Vec3::from(p), t0))
        .collect::<Result<Vec<_>>>()?;
    let triangles = vec![
        [0, 11, 5],
        [0, 5, 1],
        [0, 1, 7],
        [0, 7, 10],
        [0, 10, 11],
        [1, 5, 9],
        [5, 11, 4],
        [11, 10, 2],
        [10, 7, 6],
        [7, 1, 8],
        [3, 9, 4],
        [3, 4, 2],
        [3, 2, 6],
        [3, 6, 8],
        [3, 8, 9],
        [4, 9, 5],
        [2, 4, 11],
        [6, 2, 10],
        [8, 6, 7],
        [9, 8, 1],
    ];
    SurfaceMesh::new(nodes, triangles, *surface, t0, 0)
}

/// Structured angular grid on a torus, each quad split into two triangles.
pub fn build_torus_mesh(surface: &LevelSetSurface, n_major: usize, n_minor: usize, t0: f64) -> Result<SurfaceMesh> {
    if !surface.is_torus() {
        return Err(Error::WrongSurfaceKind {
            expected: "torus",
            found: surface.name(),
        });
    }
    if n_major < 3 || n_minor < 3 {
        return Err(Error::validation(
            "mesh",
            format!("torus grid needs at least 3x3 cells, got {n_major}x{n_minor}"),
        ));
    }
    let index = |i: usize, j: usize| (i % n_major) * n_minor + (j % n_minor);
    let mut nodes = Vec::with_capacity(n_major * n_minor);
    for i in 0..n_major {
        let azimuth = 2.0 * PI * i as f64 / n_major as f64;
        for j in 0..n_minor {
            let poloidal = 2.0 * PI * j as f64 / n_minor as f64;
            nodes.push(surface.torus_parametrisation(azimuth, poloidal, t0).unwrap());
        }
    }
    let mut triangles = Vec::with_capacity(2 * n_major * n_minor);
    for i in 0..n_major {
        for j in 0..n_minor {
            let (a, b, c, d) = (index(i, j), index(i + 1, j), index(i + 1, j + 1), index(i, j + 1));
            triangles.push([a, b, c]);
            triangles.push([a, c, d]);
        }
    }
    SurfaceMesh::new(nodes, triangles, *surface, t0, 0)
}

/// Where a fine node came from on the next coarser level.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Parent {
    Vertex(usize),
    Edge([usize; 2]),
    Triangle([usize; 3], [f64; 3]),
}

impl Parent {
    /// Coarse nodes and barycentric weights; weights sum to one.
    pub fn entries(&self) -> Vec<(usize, f64)> {
        match *self {
            Parent::Vertex(i) => vec![(i, 1.0)],
            Parent::Edge([a, b]) => vec![(a, 0.5), (b, 0.5)],
            Parent::Triangle(n, w) => n.into_iter().zip(w).collect(),
        }
    }

    fn interpolate(&self, values: &[f64]) -> f64 {
        match *self {
            Parent::Vertex(i) => values[i],
            Parent::Edge([a, b]) => 0.5 * (values[a] + values[b]),
            Parent::Triangle(n, w) => w[0] * values[n[0]] + w[1] * values[n[1]] + w[2] * values[n[2]],
        }
    }
}

/// Nested sequence of uniformly refined meshes with coarse-to-fine parent maps.
#[derive(Debug, Clone)]
pub struct MeshHierarchy {
    levels: Vec<SurfaceMesh>,
    /// `parents[l][i]` is the parent on level `l` of node `i` on level `l + 1`.
    parents: Vec<Vec<Parent>>,
}

impl MeshHierarchy {
    pub fn new(coarse: SurfaceMesh) -> Self {
        MeshHierarchy {
            levels: vec![coarse],
            parents: Vec::new(),
        }
    }

    /// Icosphere hierarchy with `levels` meshes, the coarsest being
    /// `base_subdivisions` times refined.
    pub fn icosphere(surface: &LevelSetSurface, base_subdivisions: usize, levels: usize, t0: f64) -> Result<Self> {
        let mut hier = MeshHierarchy::new(build_icosphere(surface, base_subdivisions, t0)?);
        for _ in 1..levels {
            hier.refine_finest()?;
        }
        Ok(hier)
    }

    /// Appends one refinement of the finest level.
    pub fn refine_finest(&mut self) -> Result<&SurfaceMesh> {
        let (fine, parents) = self.finest().refine_with_parents()?;
        self.levels.push(fine);
        self.parents.push(parents);
        Ok(self.finest())
    }

    pub fn len(&self) -> usize {
        self.levels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.levels.is_empty()
    }

    pub fn level(&self, l: usize) -> Result<&SurfaceMesh> {
        self.levels.get(l).ok_or(Error::LevelOutOfRange {
            level: l,
            levels: self.levels.len(),
        })
    }

    pub fn finest(&self) -> &SurfaceMesh {
        self.levels.last().expect("hierarchy has at least one level")
    }

    pub fn levels(&self) -> &[SurfaceMesh] {
        &self.levels
    }

    pub fn parents(&self, coarse_level: usize) -> Result<&[Parent]> {
        self.parents
            .get(coarse_level)
            .map(Vec::as_slice)
            .ok_or(Error::LevelOutOfRange {
                level: coarse_level,
                levels: self.levels.len(),
            })
    }

    /// P1 interpolation of a nodal vector from `coarse_level` to the next level.
    pub fn prolong(&self, coarse_level: usize, values: &[f64]) -> Result<Vec<f64>> {
        let parents = self.parents(coarse_level)?;
        let expected = self.levels[coarse_level].node_count();
        if values.len() != expected {
            return Err(Error::LengthMismatch {
                expected,
                found: values.len(),
            });
        }
        Ok(parents.iter().map(|p| p.interpolate(values)).collect())
    }

    /// Repeated prolongation from level `from` up to level `to`.
    pub fn prolong_to(&self, from: usize, to: usize, values: &[f64]) -> Result<Vec<f64>> {
        if to < from || to >= self.levels.len() {
            return Err(Error::LevelOutOfRange {
                level: to,
                levels: self.levels.len(),
            });
        }
        let mut v = values.to_vec();
        for l in from..to {
            v = self.prolong(l, &v)?;
        }
        Ok(v)
    }
}
