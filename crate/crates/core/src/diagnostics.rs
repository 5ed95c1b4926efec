//! Energies, norms, errors, and experimental orders of convergence.

use std::time::Instant;

use log::info;

use crate::assembly::{AssembledOperators, Assembler};
use crate::error::{Error, Result};
use crate::mesh::{MeshHierarchy, SurfaceMesh};
use crate::potential::Potential;
use crate::scheme::{run_simulation, InitialData, Integrator, PhaseState, SchemeConfig, SchemeKind};
use crate::sparse::{dot, solve_mean_zero_spd};

/// Scalar summary of one time level.
#[derive(Debug, Clone, PartialEq)]
pub struct DiagnosticRecord {
    pub step: usize,
    pub time: f64,
    /// Discrete Ginzburg-Landau energy.
    pub energy: f64,
    /// `int U`.
    pub mass: f64,
    pub area: f64,
    pub h: f64,
    pub newton_iterations: usize,
    /// Discrete H^-1 norm of the mean-free part of `U`, when requested.
    pub hminus1: Option<f64>,
}

pub(crate) fn record(
    integrator: &Integrator,
    mesh: &SurfaceMesh,
    ops: &AssembledOperators,
    state: &PhaseState,
    newton_iterations: usize,
) -> Result<DiagnosticRecord> {
    let cfg = integrator.config();
    let energy = energy_with(integrator.assembler(), mesh, &state.alpha, integrator.potential(), cfg.epsilon);
    let lumped = ops.mass.row_sums();
    let mass = dot(&lumped, &state.alpha);
    let area: f64 = lumped.iter().sum();
    let hminus1 = if cfg.record_hminus1 {
        let mean = mass / area;
        let z: Vec<f64> = state.alpha.iter().map(|a| a - mean).collect();
        Some(hminus1_norm_with(ops, &z)?)
    } else {
        None
    };
    Ok(DiagnosticRecord {
        step: state.step,
        time: state.time,
        energy,
        mass,
        area,
        h: mesh.mesh_size_h(),
        newton_iterations,
        hminus1,
    })
}

fn energy_with(assembler: &Assembler, mesh: &SurfaceMesh, alpha: &[f64], pot: &Potential, epsilon: f64) -> f64 {
    0.5 * epsilon * assembler.dirichlet_energy(mesh, alpha) + assembler.potential_integral(mesh, alpha, pot) / epsilon
}

/// `(eps / 2) int |grad U|^2 + (1 / eps) int F(U)`.
pub fn ginzburg_landau_energy(mesh: &SurfaceMesh, alpha: &[f64], pot: &Potential, epsilon: f64) -> Result<f64> {
    check_len(mesh, alpha)?;
    let assembler = Assembler::new(mesh);
    for k in 0..mesh.triangle_count() {
        let area = mesh.triangle_area(k);
        if !(area > crate::mesh::MIN_TRIANGLE_AREA) {
            return Err(Error::DegenerateTriangle { triangle: k, area });
        }
    }
    Ok(energy_with(&assembler, mesh, alpha, pot, epsilon))
}

/// `1^T M alpha`.
pub fn discrete_mass(mesh: &SurfaceMesh, alpha: &[f64]) -> Result<f64> {
    check_len(mesh, alpha)?;
    let m = Assembler::new(mesh).mass(mesh)?;
    Ok(dot(&m.row_sums(), alpha))
}

/// Discrete H^-1 norm `||grad G z||` of a mean-free nodal vector, where
/// `G z` solves `A x = M z` with zero mean.
pub fn hminus1_norm(mesh: &SurfaceMesh, z: &[f64]) -> Result<f64> {
    check_len(mesh, z)?;
    let ops = Assembler::new(mesh).operators(mesh)?;
    hminus1_norm_with(&ops, z)
}

fn hminus1_norm_with(ops: &AssembledOperators, z: &[f64]) -> Result<f64> {
    let x = inverse_laplacian(ops, z)?;
    Ok(ops.stiffness.bilinear(&x, &x).max(0.0).sqrt())
}

/// Discrete inverse Laplacian `G z`.
pub fn inverse_laplacian(ops: &AssembledOperators, z: &[f64]) -> Result<Vec<f64>> {
    let rhs = ops.mass.mul_vec(z);
    solve_mean_zero_spd(&ops.stiffness, &rhs, &ops.mass)
}

pub fn l2_error(mesh_ref: &SurfaceMesh, a: &[f64], b: &[f64]) -> Result<f64> {
    let d = difference(mesh_ref, a, b)?;
    let m = Assembler::new(mesh_ref).mass(mesh_ref)?;
    Ok(m.bilinear(&d, &d).max(0.0).sqrt())
}

pub fn h1_semi_error(mesh_ref: &SurfaceMesh, a: &[f64], b: &[f64]) -> Result<f64> {
    let d = difference(mesh_ref, a, b)?;
    let s = Assembler::new(mesh_ref).stiffness(mesh_ref)?;
    Ok(s.bilinear(&d, &d).max(0.0).sqrt())
}

fn difference(mesh: &SurfaceMesh, a: &[f64], b: &[f64]) -> Result<Vec<f64>> {
    check_len(mesh, a)?;
    check_len(mesh, b)?;
    Ok(a.iter().zip(b).map(|(x, y)| x - y).collect())
}

fn check_len(mesh: &SurfaceMesh, v: &[f64]) -> Result<()> {
    if v.len() == mesh.node_count() {
        Ok(())
    } else {
        Err(Error::LengthMismatch {
            expected: mesh.node_count(),
            found: v.len(),
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NormKind {
    L2,
    H1Semi,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Variable {
    U,
    W,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EocRow {
    pub h: f64,
    pub error: f64,
    /// Undefined on the first row.
    pub eoc: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EocTable {
    pub variable: Variable,
    pub norm: NormKind,
    pub rows: Vec<EocRow>,
}

impl EocTable {
    pub fn labelled(mut self, variable: Variable, norm: NormKind) -> Self {
        self.variable = variable;
        self.norm = norm;
        self
    }

    /// EOC values, skipping the undefined first row.
    pub fn orders(&self) -> Vec<f64> {
        self.rows.iter().filter_map(|r| r.eoc).collect()
    }
}

/// `eoc_k = log(e_{k-1} / e_k) / log(h_{k-1} / h_k)`.
pub fn eoc(errors: &[f64], hs: &[f64]) -> Result<EocTable> {
    if errors.len() != hs.len() {
        return Err(Error::LengthMismatch {
            expected: hs.len(),
            found: errors.len(),
        });
    }
    if errors.len() < 2 {
        return Err(Error::validation("levels", "an EOC table needs at least two rows"));
    }
    if hs.windows(2).any(|w| !(w[1] < w[0])) {
        return Err(Error::validation("h", "mesh sizes must be strictly decreasing"));
    }
    if let Some(k) = errors.iter().position(|&e| e == 0.0) {
        return Err(Error::ZeroError(k));
    }
    let rows = (0..errors.len())
        .map(|k| EocRow {
            h: hs[k],
            error: errors[k],
            eoc: (k > 0).then(|| (errors[k - 1] / errors[k]).ln() / (hs[k - 1] / hs[k]).ln()),
        })
        .collect();
    Ok(EocTable {
        variable: Variable::U,
        norm: NormKind::L2,
        rows,
    })
}

/// Setup of a convergence study on a uniformly refined hierarchy.
#[derive(Debug, Clone)]
pub struct EocStudyConfig {
    /// Number of levels that enter the tables.
    pub levels: usize,
    /// Scheme for the study levels; `tau` is the step on the finest study
    /// level and is multiplied by four per coarser level.
    pub scheme: SchemeConfig,
    pub initial: InitialData,
    /// Run the levels concurrently.
    pub parallel: bool,
    /// Upper limit for the coarse-level steps. `None` uses the fully
    /// implicit uniqueness bound `4 eps^3 / theta^2`: beyond it Newton may
    /// fail to find the step solution on coarse meshes.
    pub tau_max: Option<f64>,
}

impl EocStudyConfig {
    pub fn new(levels: usize, scheme: SchemeConfig, initial: InitialData) -> Self {
        EocStudyConfig {
            levels,
            scheme,
            initial,
            parallel: false,
            tau_max: None,
        }
    }

    /// Step for study level `l` (0 = coarsest): `tau * 4^(levels - 1 - l)`,
    /// with the power reduced until the step is below the cap.
    pub fn level_tau(&self, l: usize, theta: f64) -> f64 {
        let cap = self.tau_max.unwrap_or_else(|| self.scheme.uniqueness_bound(theta));
        let mut k = (self.levels - 1 - l.min(self.levels - 1)) as i32;
        while k > 0 && self.scheme.tau * 4f64.powi(k) >= cap {
            k -= 1;
        }
        self.scheme.tau * 4f64.powi(k)
    }
}

#[derive(Debug, Clone)]
pub struct LevelRun {
    pub level: usize,
    pub nodes: usize,
    pub h: f64,
    pub tau: f64,
    pub steps: usize,
    pub newton_iterations: usize,
    pub seconds: f64,
}

#[derive(Debug, Clone)]
pub struct EocStudy {
    pub u: EocTable,
    pub w: EocTable,
    /// Study levels followed by the reference run.
    pub runs: Vec<LevelRun>,
}

struct Terminal {
    state: PhaseState,
    mesh: SurfaceMesh,
    run: LevelRun,
}

/// Fully implicit solution one level above the finest study level, at a
/// quarter of the finest study step. It depends only on the hierarchy
/// depth, `tau`, `t_final`, `epsilon` and the initial data, so one reference
/// serves studies of both schemes.
pub struct EocReference {
    hierarchy: MeshHierarchy,
    levels: usize,
    terminal: Terminal,
}

impl EocReference {
    pub fn run(&self) -> &LevelRun {
        &self.terminal.run
    }

    pub fn state(&self) -> &PhaseState {
        &self.terminal.state
    }

    pub fn hierarchy(&self) -> &MeshHierarchy {
        &self.hierarchy
    }
}

fn level_error(level: usize) -> impl Fn(Error) -> Error {
    move |e| Error::Level {
        level,
        source: Box::new(e),
    }
}

fn run_level(mesh: &SurfaceMesh, level: usize, cfg: &SchemeConfig, pot: &Potential, initial: &InitialData) -> Result<Terminal> {
    cfg.validate().map_err(level_error(level))?;
    let alpha0 = initial.interpolate(mesh);
    let start = Instant::now();
    let traj = run_simulation(cfg, pot, mesh, &alpha0).map_err(level_error(level))?;
    let run = LevelRun {
        level,
        nodes: mesh.node_count(),
        h: mesh.mesh_size_h(),
        tau: cfg.tau,
        steps: cfg.step_count(),
        newton_iterations: traj.total_newton_iterations(),
        seconds: start.elapsed().as_secs_f64(),
    };
    info!(
        "level {} ({} nodes, tau = {:e}): {} steps, {} Newton iterations, {:.1}s",
        run.level, run.nodes, run.tau, run.steps, run.newton_iterations, run.seconds
    );
    Ok(Terminal {
        state: traj.final_state,
        mesh: traj.final_mesh,
        run,
    })
}

/// Builds the hierarchy for `study` from `coarse` and computes the reference
/// solution on its top level.
pub fn eoc_reference(study: &EocStudyConfig, pot: &Potential, coarse: &SurfaceMesh) -> Result<EocReference> {
    if study.levels < 2 {
        return Err(Error::validation("levels", "at least two levels are required"));
    }
    let mut hierarchy = MeshHierarchy::new(coarse.clone());
    for _ in 0..study.levels {
        hierarchy.refine_finest()?;
    }
    let cfg = SchemeConfig {
        tau: study.scheme.tau / 4.0,
        scheme: SchemeKind::FullyImplicit,
        ..study.scheme.clone()
    };
    let terminal = run_level(hierarchy.finest(), study.levels, &cfg, pot, &study.initial)?;
    Ok(EocReference {
        hierarchy,
        levels: study.levels,
        terminal,
    })
}

/// Runs the study levels and tabulates their L2 errors against `reference`.
pub fn eoc_study_against(study: &EocStudyConfig, pot: &Potential, reference: &EocReference) -> Result<EocStudy> {
    if study.levels != reference.levels {
        return Err(Error::validation(
            "levels",
            format!("reference was computed for {} levels, study has {}", reference.levels, study.levels),
        ));
    }
    let hier = &reference.hierarchy;
    let jobs: Vec<(usize, SchemeConfig)> = (0..study.levels)
        .map(|l| {
            let cfg = SchemeConfig {
                tau: study.level_tau(l, pot.theta),
                ..study.scheme.clone()
            };
            (l, cfg)
        })
        .collect();
    let terminals = map_jobs(&jobs, study.parallel, |(l, cfg)| run_level(hier.level(*l)?, *l, cfg, pot, &study.initial))?;

    let top = study.levels;
    let reference_state = &reference.terminal.state;
    let ref_mesh = &reference.terminal.mesh;
    let (mut eu, mut ew, mut hs) = (Vec::new(), Vec::new(), Vec::new());
    for t in &terminals {
        let u = hier.prolong_to(t.run.level, top, &t.state.alpha)?;
        let w = hier.prolong_to(t.run.level, top, &t.state.beta)?;
        eu.push(l2_error(ref_mesh, &u, &reference_state.alpha)?);
        ew.push(l2_error(ref_mesh, &w, &reference_state.beta)?);
        hs.push(t.run.h);
    }
    let mut runs: Vec<LevelRun> = terminals.into_iter().map(|t| t.run).collect();
    runs.push(reference.terminal.run.clone());
    Ok(EocStudy {
        u: eoc(&eu, &hs)?.labelled(Variable::U, NormKind::L2),
        w: eoc(&ew, &hs)?.labelled(Variable::W, NormKind::L2),
        runs,
    })
}

/// Runs the scheme on every level of a hierarchy built from `coarse` with
/// `tau ~ h^2` (see [`EocStudyConfig::level_tau`]), compares the prolonged
/// terminal states with a fully implicit reference computed one level finer
/// at a quarter of the finest step, and tabulates the L2 errors of `u` and
/// `w`.
pub fn eoc_study(study: &EocStudyConfig, pot: &Potential, coarse: &SurfaceMesh) -> Result<EocStudy> {
    let reference = eoc_reference(study, pot, coarse)?;
    eoc_study_against(study, pot, &reference)
}

#[cfg(feature = "parallel")]
fn map_jobs<J: Sync, T: Send>(jobs: &[J], parallel: bool, f: impl Fn(&J) -> Result<T> + Sync) -> Result<Vec<T>> {
    use rayon::prelude::*;
    if parallel {
        jobs.par_iter().map(&f).collect()
    } else {
        jobs.iter().map(f).collect()
    }
}

#[cfg(not(feature = "parallel"))]
fn map_jobs<J, T>(jobs: &[J], _parallel: bool, f: impl Fn(&J) -> Result<T>) -> Result<Vec<T>> {
    jobs.iter().map(f).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::build_icosphere;
    use crate::surface::LevelSetSurface;
    use std::f64::consts::PI;

    #[test]
    fn eoc_examples() {
        let t = eoc(&[6.837856e-1, 2.181480e-1], &[6.123724e-1, 3.061862e-1]).unwrap();
        assert!((t.rows[1].eoc.unwrap() - 1.648237).abs() < 5e-6);
        assert_eq!(t.rows[0].eoc, None);
        let t = eoc(&[4.0, 1.0], &[1.0, 0.5]).unwrap();
        assert!((t.rows[1].eoc.unwrap() - 2.0).abs() < 1e-15);
        let t = eoc(&[2.0, 1.0], &[1.0, 0.5]).unwrap();
        assert!((t.rows[1].eoc.unwrap() - 1.0).abs() < 1e-15);
        assert!(matches!(eoc(&[1.0, 0.0], &[1.0, 0.5]), Err(Error::ZeroError(1))));
        assert!(eoc(&[1.0, 0.5], &[0.5, 1.0]).is_err());
    }

    #[test]
    fn energy_examples() {
        let sphere = LevelSetSurface::unit_sphere();
        let m = build_icosphere(&sphere, 4, 0.0).unwrap();
        let pot = Potential::quartic();
        let n = m.node_count();
        assert_eq!(ginzburg_landau_energy(&m, &vec![1.0; n], &pot, 0.05).unwrap(), 0.0);
        let e0 = ginzburg_landau_energy(&m, &vec![0.0; n], &pot, 0.05).unwrap();
        // (1 / eps) * (1/4) * |Gamma_h|
        assert!((e0 - m.area() / 4.0 / 0.05).abs() < 1e-10);
        assert!((e0 - PI / 0.05).abs() / (PI / 0.05) < 2e-3);
    }

    #[test]
    fn mass_examples() {
        let m = build_icosphere(&LevelSetSurface::unit_sphere(), 2, 0.0).unwrap();
        let n = m.node_count();
        assert!((discrete_mass(&m, &vec![1.0; n]).unwrap() - m.area()).abs() < 1e-12);
        assert_eq!(discrete_mass(&m, &vec![0.0; n]).unwrap(), 0.0);
    }

    #[test]
    fn error_norm_examples() {
        let m = build_icosphere(&LevelSetSurface::unit_sphere(), 2, 0.0).unwrap();
        let n = m.node_count();
        let a: Vec<f64> = m.nodes().iter().map(|x| x.x).collect();
        assert_eq!(l2_error(&m, &a, &a).unwrap(), 0.0);
        let b: Vec<f64> = a.iter().map(|v| v - 0.5).collect();
        assert!((l2_error(&m, &a, &b).unwrap() - 0.5 * m.area().sqrt()).abs() < 1e-12);
        assert!(h1_semi_error(&m, &a, &b).unwrap() < 1e-12);
        assert!(matches!(l2_error(&m, &a, &[0.0; 3]), Err(Error::LengthMismatch { .. })));
        let _ = n;
    }

    #[test]
    fn hminus1_examples() {
        let m = build_icosphere(&LevelSetSurface::unit_sphere(), 2, 0.0).unwrap();
        let n = m.node_count();
        assert_eq!(hminus1_norm(&m, &vec![0.0; n]).unwrap(), 0.0);
        let z: Vec<f64> = m.nodes().iter().map(|x| x.z).collect();
        let a = hminus1_norm(&m, &z).unwrap();
        let z3: Vec<f64> = z.iter().map(|v| -3.0 * v).collect();
        assert!((hminus1_norm(&m, &z3).unwrap() - 3.0 * a).abs() < 1e-10 * a);
        // z restricted to the unit sphere is an eigenfunction with eigenvalue 2
        let l2 = l2_error(&m, &z, &vec![0.0; n]).unwrap();
        assert!((a - l2 / 2f64.sqrt()).abs() / a < 2e-2);
        assert!(matches!(hminus1_norm(&m, &vec![1.0; n]), Err(Error::IncompatibleRhs { .. })));
    }
}
