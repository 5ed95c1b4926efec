//! WebAssembly bindings for the browser demo in `www/`.
//!
//! Three operations are exported: building a surface mesh at a given time,
//! stepping a Cahn-Hilliard simulation, and the interpolation convergence
//! check on refined icospheres.

use escher::diagnostics::{eoc, ginzburg_landau_energy, h1_semi_error, l2_error};
use escher::scheme::Integrator;
use escher::{build_icosphere, build_torus_mesh, InitialData, LevelSetSurface, MeshHierarchy, PhaseState, Potential, SchemeConfig, SchemeKind, SurfaceMesh};
use wasm_bindgen::prelude::*;

fn js_err(e: escher::Error) -> JsError {
    JsError::new(&e.to_string())
}

fn surface_by_name(name: &str) -> Result<LevelSetSurface, JsError> {
    LevelSetSurface::by_name(name).ok_or_else(|| JsError::new(&format!("unknown surface `{name}`")))
}

/// Icosphere with `resolution` subdivisions for spheres, a
/// `4 resolution x 2 resolution` grid for tori.
fn build_mesh(surface: &LevelSetSurface, resolution: u32, t: f64) -> escher::Result<SurfaceMesh> {
    let r = resolution as usize;
    if surface.is_sphere() {
        build_icosphere(surface, r, t)
    } else {
        build_torus_mesh(surface, 4 * r.max(1), 2 * r.max(2), t)
    }
}

fn flat_positions(mesh: &SurfaceMesh) -> Vec<f64> {
    mesh.nodes().iter().flat_map(|p| [p.x, p.y, p.z]).collect()
}

fn flat_triangles(mesh: &SurfaceMesh) -> Vec<u32> {
    mesh.triangles().iter().flat_map(|t| t.map(|i| i as u32)).collect()
}

/// A triangulated surface as flat arrays.
#[wasm_bindgen]
pub struct MeshData {
    positions: Vec<f64>,
    triangles: Vec<u32>,
    area: f64,
    h: f64,
}

#[wasm_bindgen]
impl MeshData {
    /// `x0 y0 z0 x1 ...`
    #[wasm_bindgen(getter)]
    pub fn positions(&self) -> Vec<f64> {
        self.positions.clone()
    }

    /// Node index triples.
    #[wasm_bindgen(getter)]
    pub fn triangles(&self) -> Vec<u32> {
        self.triangles.clone()
    }

    #[wasm_bindgen(getter)]
    pub fn area(&self) -> f64 {
        self.area
    }

    #[wasm_bindgen(getter)]
    pub fn h(&self) -> f64 {
        self.h
    }
}

/// The named surface triangulated at time `t`.
#[wasm_bindgen]
pub fn surface_mesh(surface: &str, resolution: u32, t: f64) -> Result<MeshData, JsError> {
    let s = surface_by_name(surface)?;
    let mesh = build_mesh(&s, resolution, t).map_err(js_err)?;
    Ok(MeshData {
        positions: flat_positions(&mesh),
        triangles: flat_triangles(&mesh),
        area: mesh.area(),
        h: mesh.mesh_size_h(),
    })
}

/// A running simulation from smooth random initial data.
#[wasm_bindgen]
pub struct Simulation {
    integrator: Integrator,
    mesh: SurfaceMesh,
    state: PhaseState,
    potential: Potential,
    epsilon: f64,
    tau: f64,
    energies: Vec<f64>,
    times: Vec<f64>,
}

#[wasm_bindgen]
impl Simulation {
    #[wasm_bindgen(constructor)]
    pub fn new(surface: &str, resolution: u32, scheme: &str, epsilon: f64, tau: f64, seed: u32) -> Result<Simulation, JsError> {
        let s = surface_by_name(surface)?;
        let kind = SchemeKind::from_name(scheme).ok_or_else(|| JsError::new(&format!("unknown scheme `{scheme}`")))?;
        let cfg = SchemeConfig {
            epsilon,
            tau,
            t_final: tau,
            scheme: kind,
            ..SchemeConfig::default()
        };
        cfg.validate().map_err(js_err)?;
        let potential = Potential::quartic();
        let mesh = build_mesh(&s, resolution, 0.0).map_err(js_err)?;
        let alpha = InitialData::SmoothRandom { seed: seed as u64 }.interpolate(&mesh);
        let integrator = Integrator::new(&mesh, cfg, potential);
        let beta = integrator.chemical_potential(&mesh, &alpha).map_err(js_err)?;
        let energy = ginzburg_landau_energy(&mesh, &alpha, &potential, epsilon).map_err(js_err)?;
        Ok(Simulation {
            integrator,
            state: PhaseState {
                alpha,
                beta,
                time: 0.0,
                step: 0,
            },
            mesh,
            potential,
            epsilon,
            tau,
            energies: vec![energy],
            times: vec![0.0],
        })
    }

    /// Advances `n` time steps.
    pub fn advance(&mut self, n: u32) -> Result<(), JsError> {
        for _ in 0..n {
            let t = (self.state.step + 1) as f64 * self.tau;
            let next = self.mesh.advance_mesh(t).map_err(js_err)?;
            let out = self.integrator.step(&self.mesh, &next, &self.state).map_err(js_err)?;
            self.state = out.state;
            self.mesh = next;
            let e = ginzburg_landau_energy(&self.mesh, &self.state.alpha, &self.potential, self.epsilon).map_err(js_err)?;
            self.energies.push(e);
            self.times.push(t);
        }
        Ok(())
    }

    #[wasm_bindgen(getter)]
    pub fn time(&self) -> f64 {
        self.state.time
    }

    #[wasm_bindgen(getter)]
    pub fn positions(&self) -> Vec<f64> {
        flat_positions(&self.mesh)
    }

    #[wasm_bindgen(getter)]
    pub fn triangles(&self) -> Vec<u32> {
        flat_triangles(&self.mesh)
    }

    /// Nodal order parameter.
    #[wasm_bindgen(getter)]
    pub fn u(&self) -> Vec<f64> {
        self.state.alpha.clone()
    }

    /// Ginzburg-Landau energy after every step so far.
    #[wasm_bindgen(getter)]
    pub fn energies(&self) -> Vec<f64> {
        self.energies.clone()
    }

    #[wasm_bindgen(getter)]
    pub fn times(&self) -> Vec<f64> {
        self.times.clone()
    }
}

/// Interpolation errors of `sin(2x) cos(y) + z^2` on icospheres with
/// subdivisions `1..=levels`. Returns rows `h, L2 error, L2 EOC, H1 error,
/// H1 EOC` flattened, with NaN for the undefined first EOCs.
#[wasm_bindgen]
pub fn interpolation_eoc(levels: u32) -> Result<Vec<f64>, JsError> {
    let levels = levels.clamp(2, 6) as usize;
    let s = LevelSetSurface::unit_sphere();
    let f = |x: escher::Vec3| (2.0 * x.x).sin() * x.y.cos() + x.z * x.z;
    let mut hier = MeshHierarchy::new(build_icosphere(&s, 1, 0.0).map_err(js_err)?);
    for _ in 0..levels {
        hier.refine_finest().map_err(js_err)?;
    }
    let fine = hier.finest();
    let exact: Vec<f64> = fine.nodes().iter().map(|&p| f(p)).collect();
    let (mut l2, mut h1, mut hs) = (Vec::new(), Vec::new(), Vec::new());
    for l in 0..levels {
        let mesh = hier.level(l).map_err(js_err)?;
        let coarse: Vec<f64> = mesh.nodes().iter().map(|&p| f(p)).collect();
        let up = hier.prolong_to(l, levels, &coarse).map_err(js_err)?;
        l2.push(l2_error(fine, &up, &exact).map_err(js_err)?);
        h1.push(h1_semi_error(fine, &up, &exact).map_err(js_err)?);
        hs.push(mesh.mesh_size_h());
    }
    let t2 = eoc(&l2, &hs).map_err(js_err)?;
    let t1 = eoc(&h1, &hs).map_err(js_err)?;
    Ok(t2
        .rows
        .iter()
        .zip(&t1.rows)
        .flat_map(|(a, b)| [a.h, a.error, a.eoc.unwrap_or(f64::NAN), b.error, b.eoc.unwrap_or(f64::NAN)])
        .collect())
}
