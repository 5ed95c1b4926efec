//! The operations behind the command-line subcommands.

use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};

use log::{info, warn};

use crate::config::{parse_config, MeshSpec, RunConfig};
use crate::diagnostics::{eoc_study, EocStudy, EocStudyConfig, EocTable};
use crate::error::{Error, Result};
use crate::mesh::build_icosphere;
use crate::output::{write_eoc_csv, write_vtk, DiagnosticsWriter};
use crate::scheme::{run_simulation_with, SchemeKind, Trajectory};

/// Reads and parses a configuration file.
pub fn load_config(path: &Path) -> Result<RunConfig> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_config(&text)
}

#[derive(Debug)]
pub struct RunSummary {
    pub trajectory: Trajectory,
    pub diagnostics: PathBuf,
    pub snapshots: Vec<PathBuf>,
}

/// Runs a simulation, streaming `diagnostics.csv` and writing
/// `snapshot_NNNNNN.vtk` every `snapshot_every` steps into the output
/// directory.
pub fn cmd_run(cfg: &RunConfig) -> Result<RunSummary> {
    let pot = cfg.potential();
    let mesh = cfg.build_mesh()?;
    let alpha0 = cfg.initial.interpolate(&mesh);
    let dir = &cfg.output_dir;
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let diagnostics = dir.join("diagnostics.csv");
    let mut writer = DiagnosticsWriter::create(&diagnostics)?;
    let mut snapshots = Vec::new();
    info!(
        "{} on {} ({} nodes, {} triangles), {} steps of {}",
        cfg.scheme.scheme.name(),
        cfg.surface.name(),
        mesh.node_count(),
        mesh.triangle_count(),
        cfg.scheme.step_count(),
        cfg.scheme.tau
    );
    let trajectory = run_simulation_with(&cfg.scheme, &pot, &mesh, &alpha0, |m, state, record| {
        writer.write(record)?;
        if cfg.snapshot_every > 0 && state.step % cfg.snapshot_every == 0 {
            let path = dir.join(format!("snapshot_{:06}.vtk", state.step));
            write_vtk(m, &[("u", &state.alpha), ("w", &state.beta)], &path)?;
            snapshots.push(path);
        }
        Ok(())
    })?;
    writer.finish()?;
    let drift = trajectory.max_relative_mass_drift();
    if drift > 1e-8 {
        warn!("relative mass drift {drift:e}");
    }
    Ok(RunSummary {
        trajectory,
        diagnostics,
        snapshots,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct EocOptions {
    pub levels: usize,
    /// Replaces the configured scheme with the IMEX scheme.
    pub imex: bool,
    pub parallel_levels: bool,
}

#[derive(Debug)]
pub struct EocSummary {
    pub study: EocStudy,
    pub u_path: PathBuf,
    pub w_path: PathBuf,
}

/// Convergence study on a hierarchy refined from the configured mesh (for
/// spheres, from the icosphere with `eoc.base_subdivisions`). `tau` in the
/// configuration is the step on the finest study level. Writes `eoc_u.csv`
/// and `eoc_w.csv`.
pub fn cmd_eoc(cfg: &RunConfig, opts: EocOptions) -> Result<EocSummary> {
    let pot = cfg.potential();
    let coarse = match cfg.mesh {
        MeshSpec::Icosphere { .. } => build_icosphere(&cfg.surface, cfg.eoc_base_subdivisions, 0.0)?,
        MeshSpec::Torus { .. } => cfg.build_mesh()?,
    };
    let mut scheme = cfg.scheme.clone();
    if opts.imex {
        scheme.scheme = SchemeKind::Imex;
    }
    let mut study = EocStudyConfig::new(opts.levels, scheme, cfg.initial.clone());
    study.parallel = opts.parallel_levels;
    let result = eoc_study(&study, &pot, &coarse)?;
    let dir = &cfg.output_dir;
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let u_path = dir.join("eoc_u.csv");
    let w_path = dir.join("eoc_w.csv");
    write_eoc_csv(&result.u, &u_path)?;
    write_eoc_csv(&result.w, &w_path)?;
    Ok(EocSummary {
        study: result,
        u_path,
        w_path,
    })
}

/// Plain-text rendering of an EOC table.
pub fn format_eoc_table(title: &str, table: &EocTable) -> String {
    let mut s = format!("{title}\n{:>14}  {:>14}  {:>9}\n", "h", "error", "EOC");
    for row in &table.rows {
        let eoc = row.eoc.map_or_else(|| "-".to_string(), |e| format!("{e:.6}"));
        s.push_str(&format!("{:>14.6e}  {:>14.6e}  {:>9}\n", row.h, row.error, eoc));
    }
    s
}

#[derive(Debug, Clone)]
pub struct MeshInfo {
    pub surface: &'static str,
    pub nodes: usize,
    pub triangles: usize,
    pub h: f64,
    pub area: f64,
    pub exact_area: f64,
    pub shape_regularity: f64,
    pub steps: usize,
    pub uniqueness_bound: f64,
    pub warnings: Vec<String>,
}

impl fmt::Display for MeshInfo {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "surface           {}", self.surface)?;
        writeln!(f, "nodes             {}", self.nodes)?;
        writeln!(f, "triangles         {}", self.triangles)?;
        writeln!(f, "h                 {:.6e}", self.h)?;
        writeln!(f, "area              {:.9}", self.area)?;
        writeln!(f, "exact area        {:.9}", self.exact_area)?;
        writeln!(f, "shape regularity  {:.4}", self.shape_regularity)?;
        writeln!(f, "time steps        {}", self.steps)?;
        write!(f, "4 eps^3/theta^2   {:.6e}", self.uniqueness_bound)?;
        for w in &self.warnings {
            write!(f, "\nwarning: {w}")?;
        }
        Ok(())
    }
}

/// Builds the configured mesh and reports its statistics.
pub fn mesh_info(cfg: &RunConfig) -> Result<MeshInfo> {
    let mesh = cfg.build_mesh()?;
    let pot = cfg.potential();
    Ok(MeshInfo {
        surface: cfg.surface.name(),
        nodes: mesh.node_count(),
        triangles: mesh.triangle_count(),
        h: mesh.mesh_size_h(),
        area: mesh.area(),
        exact_area: cfg.surface.exact_area(0.0),
        shape_regularity: mesh.shape_regularity(),
        steps: cfg.scheme.step_count(),
        uniqueness_bound: cfg.scheme.uniqueness_bound(pot.theta),
        warnings: cfg.scheme.warnings(&pot),
    })
}
