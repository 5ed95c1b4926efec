//! Fully implicit and implicit-explicit time stepping on an evolving mesh.
//!
//! Both schemes solve, at every step, the nonlinear block system
//!
//! ```text
//! [ M^n            tau A^n ] [alpha^n]          [      0       ]   [ M^{n-1} alpha^{n-1} ]
//! [ -eps A^n + c M^n   M^n ] [ beta^n] - 1/eps  [ F^n(alpha^n) ] = [          g          ]
//! ```
//!
//! with `c = theta / eps, g = 0` for the fully implicit scheme and
//! `c = 0, g = -(theta / eps) M^{n-1} alpha^{n-1}` for the implicit-explicit
//! one. `alpha` and `beta` are the nodal values of the order parameter and
//! the chemical potential. Nodes are identified across time levels, so the
//! previous solution is carried to the new mesh by its nodal values.

use std::sync::Arc;

use log::{debug, warn};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::assembly::{AssembledOperators, Assembler};
use crate::diagnostics::{self, DiagnosticRecord};
use crate::error::{Error, Result};
use crate::mesh::SurfaceMesh;
use crate::potential::Potential;
use crate::sparse::{self, bicgstab, block_2x2, block_pattern, conjugate_gradient, norm_inf, CsrPattern, LinearSolverKind, LuSolver, SparseMatrix, SymmetricSolver};
use crate::vec3::Vec3;

/// Smallest Newton step fraction tried by the line search.
const MIN_NEWTON_DAMPING: f64 = 1.0 / 1024.0;
/// Residuals this small are at roundoff level and always take the full step.
const LINE_SEARCH_FLOOR: f64 = 1e-9;

/// Above this many nodes the Newton systems are solved iteratively.
pub const DIRECT_SOLVE_MAX_NODES: usize = 50_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum SchemeKind {
    #[default]
    FullyImplicit,
    Imex,
}

impl SchemeKind {
    pub fn name(&self) -> &'static str {
        match self {
            SchemeKind::FullyImplicit => "fully_implicit",
            SchemeKind::Imex => "imex",
        }
    }

    pub fn from_name(s: &str) -> Option<Self> {
        match s {
            "fully_implicit" | "implicit" => Some(SchemeKind::FullyImplicit),
            "imex" | "implicit_explicit" => Some(SchemeKind::Imex),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SchemeConfig {
    /// Interface width.
    pub epsilon: f64,
    /// Time step.
    pub tau: f64,
    /// Final time.
    pub t_final: f64,
    pub scheme: SchemeKind,
    pub newton_tol: f64,
    pub newton_max_iter: usize,
    pub linear_solver: LinearSolverKind,
    /// Also record the discrete H^-1 norm of the mean-free order parameter.
    pub record_hminus1: bool,
}

impl Default for SchemeConfig {
    fn default() -> Self {
        SchemeConfig {
            epsilon: 0.05,
            tau: 1e-4,
            t_final: 0.1,
            scheme: SchemeKind::FullyImplicit,
            newton_tol: 1e-11,
            newton_max_iter: 25,
            linear_solver: LinearSolverKind::SymmetricIndefinite,
            record_hminus1: false,
        }
    }
}

impl SchemeConfig {
    pub fn validate(&self) -> Result<()> {
        let positive = |field: &str, v: f64| {
            if v.is_finite() && v > 0.0 {
                Ok(())
            } else {
                Err(Error::validation(field, format!("must be finite and positive, got {v}")))
            }
        };
        positive("epsilon", self.epsilon)?;
        positive("tau", self.tau)?;
        positive("newton_tol", self.newton_tol)?;
        if !(self.t_final.is_finite() && self.t_final >= 0.0) {
            return Err(Error::validation("t_final", format!("must be finite and non-negative, got {}", self.t_final)));
        }
        if self.t_final > 0.0 && self.tau > self.t_final {
            return Err(Error::validation("tau", format!("time step {} exceeds final time {}", self.tau, self.t_final)));
        }
        let steps = (self.t_final / self.tau).round();
        if (steps * self.tau - self.t_final).abs() > 1e-9 * self.t_final.max(self.tau) {
            return Err(Error::validation(
                "tau",
                format!("final time {} is not a whole number of steps of {}", self.t_final, self.tau),
            ));
        }
        if self.newton_max_iter == 0 {
            return Err(Error::validation("newton_max_iter", "must be at least 1"));
        }
        Ok(())
    }

    pub fn step_count(&self) -> usize {
        (self.t_final / self.tau).round() as usize
    }

    /// Time step bound `4 eps^3 / theta^2` below which the fully implicit
    /// step has a unique solution.
    pub fn uniqueness_bound(&self, theta: f64) -> f64 {
        if theta == 0.0 {
            f64::INFINITY
        } else {
            4.0 * self.epsilon.powi(3) / (theta * theta)
        }
    }

    /// Non-fatal configuration concerns.
    pub fn warnings(&self, pot: &Potential) -> Vec<String> {
        let mut w = Vec::new();
        let bound = self.uniqueness_bound(pot.theta);
        if self.scheme == SchemeKind::FullyImplicit && self.tau >= bound {
            w.push(format!(
                "tau = {} is not below 4 eps^3 / theta^2 = {}; the fully implicit step may not be unique",
                self.tau, bound
            ));
        }
        w
    }
}

/// Nodal coefficients at one time level.
#[derive(Debug, Clone, PartialEq)]
pub struct PhaseState {
    /// Order parameter `u`.
    pub alpha: Vec<f64>,
    /// Chemical potential `w`.
    pub beta: Vec<f64>,
    pub time: f64,
    pub step: usize,
}

#[derive(Debug, Clone)]
pub struct StepOutcome {
    pub state: PhaseState,
    pub newton_iterations: usize,
    /// Residual infinity norms, one per Newton iterate (starting guess first).
    pub residuals: Vec<f64>,
    /// Operators on the new mesh.
    pub operators: AssembledOperators,
}

/// Reusable stepping context for one mesh connectivity.
pub struct Integrator {
    cfg: SchemeConfig,
    pot: Potential,
    assembler: Assembler,
    block: Arc<CsrPattern>,
    lu: LuSolver,
    ldlt: SymmetricSolver,
}

impl Integrator {
    pub fn new(mesh: &SurfaceMesh, cfg: SchemeConfig, pot: Potential) -> Self {
        let assembler = Assembler::new(mesh);
        let block = Arc::new(block_pattern(assembler.pattern()));
        Integrator {
            cfg,
            pot,
            assembler,
            block,
            lu: LuSolver::new(),
            ldlt: SymmetricSolver::new(),
        }
    }

    pub fn config(&self) -> &SchemeConfig {
        &self.cfg
    }

    pub fn potential(&self) -> &Potential {
        &self.pot
    }

    pub fn assembler(&self) -> &Assembler {
        &self.assembler
    }

    /// Advances `state` from `prev` to `next` using the previous state as the
    /// Newton starting guess.
    pub fn step(&mut self, prev: &SurfaceMesh, next: &SurfaceMesh, state: &PhaseState) -> Result<StepOutcome> {
        self.step_from(prev, next, state, &state.alpha, &state.beta)
    }

    /// As [`step`](Self::step) with an explicit Newton starting guess.
    pub fn step_from(
        &mut self,
        prev: &SurfaceMesh,
        next: &SurfaceMesh,
        state: &PhaseState,
        alpha_guess: &[f64],
        beta_guess: &[f64],
    ) -> Result<StepOutcome> {
        let n = next.node_count();
        for v in [&state.alpha, &state.beta] {
            if v.len() != n {
                return Err(Error::LengthMismatch {
                    expected: n,
                    found: v.len(),
                });
            }
        }
        let cfg = self.cfg.clone();
        let (eps, tau, theta) = (cfg.epsilon, cfg.tau, self.pot.theta);

        let old_mass = self.assembler.mass(prev)?;
        let carried = old_mass.mul_vec(&state.alpha);
        let ops = self.assembler.operators(next)?;
        let (m, a) = (&ops.mass, &ops.stiffness);

        // Second block row: lin * alpha + M beta - F(alpha) / eps = g
        let (lin, g) = match cfg.scheme {
            SchemeKind::FullyImplicit => (SparseMatrix::linear_combination(&[(-eps, a), (theta / eps, m)]), vec![0.0; n]),
            SchemeKind::Imex => (a.scaled(-eps), carried.iter().map(|v| -theta / eps * v).collect()),
        };
        let tau_a = a.scaled(tau);

        let mut alpha = alpha_guess.to_vec();
        let mut beta = beta_guess.to_vec();
        let mut residuals = Vec::new();
        let residual = |alpha: &[f64], beta: &[f64], load: &[f64]| -> Vec<f64> {
            let m_alpha = m.mul_vec(alpha);
            let a_beta = tau_a.mul_vec(beta);
            let lin_alpha = lin.mul_vec(alpha);
            let m_beta = m.mul_vec(beta);
            let mut r = Vec::with_capacity(2 * n);
            r.extend((0..n).map(|i| m_alpha[i] + a_beta[i] - carried[i]));
            r.extend((0..n).map(|i| lin_alpha[i] + m_beta[i] - load[i] / eps - g[i]));
            r
        };

        let mut iterations = 0;
        let mut r = residual(&alpha, &beta, &self.assembler.nonlinear_load(next, &alpha, &self.pot));
        loop {
            let res = norm_inf(&r);
            residuals.push(res);
            if !res.is_finite() {
                return Err(Error::NewtonDivergence {
                    iterations,
                    residual: res,
                });
            }
            if res <= cfg.newton_tol {
                break;
            }
            if iterations == cfg.newton_max_iter {
                return Err(Error::NewtonDivergence {
                    iterations,
                    residual: res,
                });
            }
            iterations += 1;

            let jac = self.assembler.nonlinear_jacobian(next, &alpha, &self.pot);
            let lower_left = SparseMatrix::linear_combination(&[(1.0, &lin), (-1.0 / eps, &jac)]);
            let delta = self.newton_update(m, &tau_a, &lower_left, &r)?;

            // Backtracking on ||r||_2; the full step is taken whenever it
            // reduces the residual, so the local quadratic rate is kept.
            let r_norm = sparse::norm2(&r);
            let mut lambda = 1.0;
            loop {
                let trial_alpha: Vec<f64> = (0..n).map(|i| alpha[i] + lambda * delta[i]).collect();
                let trial_beta: Vec<f64> = (0..n).map(|i| beta[i] + lambda * delta[n + i]).collect();
                let trial_r = residual(&trial_alpha, &trial_beta, &self.assembler.nonlinear_load(next, &trial_alpha, &self.pot));
                let trial_norm = sparse::norm2(&trial_r);
                if trial_norm <= (1.0 - 1e-4 * lambda) * r_norm || lambda < MIN_NEWTON_DAMPING || r_norm < LINE_SEARCH_FLOOR {
                    alpha = trial_alpha;
                    beta = trial_beta;
                    r = trial_r;
                    break;
                }
                lambda *= 0.5;
            }
            if lambda < 1.0 {
                debug!("t = {:.6}: Newton step damped by {lambda}", next.time());
            }
        }
        debug!("t = {:.6}: Newton converged in {iterations} iterations, residuals {residuals:?}", next.time());

        Ok(StepOutcome {
            state: PhaseState {
                alpha,
                beta,
                time: next.time(),
                step: state.step + 1,
            },
            newton_iterations: iterations,
            residuals,
            operators: ops,
        })
    }

    /// Solves `[[M, tau A], [L, M]] (da; db) = -r`.
    ///
    /// All four blocks are symmetric, so swapping the block rows gives the
    /// symmetric system `[[tau A, M], [M, L]] (db; da) = -(r1; r2)`, which is
    /// what the symmetric solver factorises. If that fails the unsymmetric
    /// form goes through LU.
    fn newton_update(&mut self, m: &SparseMatrix, tau_a: &SparseMatrix, lower_left: &SparseMatrix, r: &[f64]) -> Result<Vec<f64>> {
        let n = m.nrows();
        let rhs: Vec<f64> = r.iter().map(|v| -v).collect();
        let kind = if n > DIRECT_SOLVE_MAX_NODES { LinearSolverKind::BiCgStab } else { self.cfg.linear_solver };
        match kind {
            LinearSolverKind::SymmetricIndefinite => {
                let system = block_2x2(&self.block, tau_a, m, m, lower_left);
                match self.ldlt.factor(&system).and_then(|f| f.solve(&rhs)) {
                    Ok(x) => {
                        let mut delta = x[n..].to_vec();
                        delta.extend_from_slice(&x[..n]);
                        return Ok(delta);
                    }
                    Err(e) => debug!("symmetric solve failed ({e}), falling back to LU"),
                }
                let system = block_2x2(&self.block, m, tau_a, lower_left, m);
                self.lu.factor(&system)?.solve(&rhs)
            }
            LinearSolverKind::Lu => {
                let system = block_2x2(&self.block, m, tau_a, lower_left, m);
                self.lu.factor(&system)?.solve(&rhs)
            }
            LinearSolverKind::BiCgStab => {
                let system = block_2x2(&self.block, m, tau_a, lower_left, m);
                bicgstab(&system, &rhs, None, 1e-13, 20 * n)
            }
        }
    }

    /// Chemical potential consistent with `alpha` on `mesh`:
    /// `M beta = eps A alpha + (F(alpha) - theta M alpha) / eps`.
    pub fn chemical_potential(&self, mesh: &SurfaceMesh, alpha: &[f64]) -> Result<Vec<f64>> {
        let eps = self.cfg.epsilon;
        let ops = self.assembler.operators(mesh)?;
        let load = self.assembler.nonlinear_load(mesh, alpha, &self.pot);
        let a_alpha = ops.stiffness.mul_vec(alpha);
        let m_alpha = ops.mass.mul_vec(alpha);
        let rhs: Vec<f64> = (0..alpha.len())
            .map(|i| eps * a_alpha[i] + (load[i] - self.pot.theta * m_alpha[i]) / eps)
            .collect();
        conjugate_gradient(&ops.mass, &rhs, 1e-14, 10 * alpha.len() + 100)
    }
}

/// One fully implicit step with a fresh integrator.
pub fn step_fully_implicit(
    mesh_prev: &SurfaceMesh,
    mesh_next: &SurfaceMesh,
    state: &PhaseState,
    cfg: &SchemeConfig,
    pot: &Potential,
) -> Result<PhaseState> {
    let cfg = SchemeConfig {
        scheme: SchemeKind::FullyImplicit,
        ..cfg.clone()
    };
    Integrator::new(mesh_next, cfg, *pot)
        .step(mesh_prev, mesh_next, state)
        .map(|o| o.state)
}

/// One implicit-explicit step with a fresh integrator.
pub fn step_imex(
    mesh_prev: &SurfaceMesh,
    mesh_next: &SurfaceMesh,
    state: &PhaseState,
    cfg: &SchemeConfig,
    pot: &Potential,
) -> Result<PhaseState> {
    let cfg = SchemeConfig {
        scheme: SchemeKind::Imex,
        ..cfg.clone()
    };
    Integrator::new(mesh_next, cfg, *pot)
        .step(mesh_prev, mesh_next, state)
        .map(|o| o.state)
}

#[derive(Debug, Clone)]
pub struct Trajectory {
    pub records: Vec<DiagnosticRecord>,
    /// `max(|int U0|, int |U0|)`, the scale for relative mass drift. The
    /// second term keeps the drift meaningful for mean-free initial data.
    pub mass_scale: f64,
    pub final_state: PhaseState,
    pub final_mesh: SurfaceMesh,
}

impl Trajectory {
    pub fn max_relative_mass_drift(&self) -> f64 {
        let m0 = self.records[0].mass;
        let scale = self.mass_scale.max(f64::MIN_POSITIVE);
        self.records.iter().map(|r| (r.mass - m0).abs() / scale).fold(0.0, f64::max)
    }

    pub fn total_newton_iterations(&self) -> usize {
        self.records.iter().map(|r| r.newton_iterations).sum()
    }
}

/// Runs the scheme from `alpha0` on `mesh` to `cfg.t_final`.
pub fn run_simulation(cfg: &SchemeConfig, pot: &Potential, mesh: &SurfaceMesh, alpha0: &[f64]) -> Result<Trajectory> {
    run_simulation_with(cfg, pot, mesh, alpha0, |_, _, _| Ok(()))
}

/// Like [`run_simulation`], calling `observer` after the initial state and
/// after every step.
pub fn run_simulation_with(
    cfg: &SchemeConfig,
    pot: &Potential,
    mesh: &SurfaceMesh,
    alpha0: &[f64],
    mut observer: impl FnMut(&SurfaceMesh, &PhaseState, &DiagnosticRecord) -> Result<()>,
) -> Result<Trajectory> {
    cfg.validate()?;
    for w in cfg.warnings(pot) {
        warn!("{w}");
    }
    if alpha0.len() != mesh.node_count() {
        return Err(Error::LengthMismatch {
            expected: mesh.node_count(),
            found: alpha0.len(),
        });
    }
    let mut integrator = Integrator::new(mesh, cfg.clone(), *pot);
    let t0 = mesh.time();
    let beta0 = integrator.chemical_potential(mesh, alpha0)?;
    let mut state = PhaseState {
        alpha: alpha0.to_vec(),
        beta: beta0,
        time: t0,
        step: 0,
    };
    let ops = integrator.assembler.operators(mesh)?;
    let record = diagnostics::record(&integrator, mesh, &ops, &state, 0)?;
    let lumped = ops.mass.row_sums();
    let mass_scale = record.mass.abs().max(lumped.iter().zip(alpha0).map(|(m, a)| m * a.abs()).sum());
    observer(mesh, &state, &record)?;
    let mut records = vec![record];

    let mut current = mesh.clone();
    for n in 1..=cfg.step_count() {
        let t = t0 + n as f64 * cfg.tau;
        let wrap = |e: Error| Error::Step {
            step: n,
            time: t,
            source: Box::new(e),
        };
        let next = current.advance_mesh(t).map_err(wrap)?;
        let outcome = integrator.step(&current, &next, &state).map_err(wrap)?;
        state = outcome.state;
        let record = diagnostics::record(&integrator, &next, &outcome.operators, &state, outcome.newton_iterations).map_err(wrap)?;
        observer(&next, &state, &record)?;
        records.push(record);
        current = next;
    }
    Ok(Trajectory {
        records,
        mass_scale,
        final_state: state,
        final_mesh: current,
    })
}

/// Builtin initial conditions.
#[derive(Debug, Clone, PartialEq)]
pub enum InitialData {
    /// `0.5 x sin(pi y)`.
    SphereEoc,
    /// `0.5 x y sin(10 pi z)`.
    Torus,
    Constant(f64),
    /// Sum of a few random plane waves, amplitude below one.
    SmoothRandom { seed: u64 },
}

impl InitialData {
    pub fn name(&self) -> &'static str {
        match self {
            InitialData::SphereEoc => "sphere_eoc",
            InitialData::Torus => "torus",
            InitialData::Constant(_) => "constant",
            InitialData::SmoothRandom { .. } => "smooth_random",
        }
    }

    /// Pointwise evaluator.
    pub fn function(&self) -> Box<dyn Fn(Vec3) -> f64 + Send + Sync> {
        use std::f64::consts::PI;
        match *self {
            InitialData::SphereEoc => Box::new(|x: Vec3| 0.5 * x.x * (PI * x.y).sin()),
            InitialData::Torus => Box::new(|x: Vec3| 0.5 * x.x * x.y * (10.0 * PI * x.z).sin()),
            InitialData::Constant(c) => Box::new(move |_| c),
            InitialData::SmoothRandom { seed } => {
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                let waves: Vec<(Vec3, f64, f64)> = (0..6)
                    .map(|_| {
                        let k = Vec3::new(rng.random_range(-3.0..3.0), rng.random_range(-3.0..3.0), rng.random_range(-3.0..3.0));
                        (k, rng.random_range(0.0..2.0 * PI), rng.random_range(0.5..1.0))
                    })
                    .collect();
                let total: f64 = waves.iter().map(|w| w.2).sum();
                Box::new(move |x: Vec3| 0.9 * waves.iter().map(|(k, phase, amp)| amp * (k.dot(x) + phase).sin()).sum::<f64>() / total)
            }
        }
    }

    pub fn interpolate(&self, mesh: &SurfaceMesh) -> Vec<f64> {
        initial_data_interpolate(mesh, self.function())
    }
}

/// Lagrange interpolant: nodal values of `u0`.
pub fn initial_data_interpolate(mesh: &SurfaceMesh, u0: impl Fn(Vec3) -> f64) -> Vec<f64> {
    mesh.nodes().iter().map(|&x| u0(x)).collect()
}

/// Discrete Ritz projection: `A pi = int grad z . grad phi` with the same
/// integral as `z`. Integrals are taken over the discrete surface.
pub fn ritz_projection(
    mesh: &SurfaceMesh,
    z: impl Fn(Vec3) -> f64 + Sync,
    grad_z: impl Fn(Vec3) -> Vec3 + Sync,
) -> Result<Vec<f64>> {
    let assembler = Assembler::new(mesh);
    let ops = assembler.operators(mesh)?;
    let rhs = assembler.gradient_load(mesh, grad_z);
    let mut x = sparse::solve_mean_zero_spd(&ops.stiffness, &rhs, &ops.mass)?;
    let target = assembler.integrate_function(mesh, z);
    let lumped = ops.mass.row_sums();
    let area: f64 = lumped.iter().sum();
    let c = (target - sparse::dot(&lumped, &x)) / area;
    x.iter_mut().for_each(|v| *v += c);
    Ok(x)
}
