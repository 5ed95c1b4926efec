//! CSV and legacy VTK writers.
//!
//! Reals are written in scientific notation with 17 significant digits, which
//! round-trips every double exactly.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use crate::diagnostics::{DiagnosticRecord, EocTable};
use crate::error::{Error, Result};
use crate::mesh::SurfaceMesh;

/// Column order of the diagnostics CSV.
pub const DIAGNOSTICS_HEADER: &str = "step,time,energy,mass,area,h,newton_iters";
/// Column order of the EOC CSVs.
pub const EOC_HEADER: &str = "h,error,eoc";

/// Formats a real with 17 significant digits.
pub fn fmt_real(v: f64) -> String {
    format!("{v:.16e}")
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    File::create(path).map(BufWriter::new).map_err(|e| Error::io(path, e))
}

/// Writes `mesh` and the named nodal arrays as legacy ASCII VTK polydata.
/// With no arrays the file holds geometry only.
pub fn write_vtk(mesh: &SurfaceMesh, arrays: &[(&str, &[f64])], path: &Path) -> Result<()> {
    let n = mesh.node_count();
    for (_, values) in arrays {
        if values.len() != n {
            return Err(Error::LengthMismatch {
                expected: n,
                found: values.len(),
            });
        }
    }
    let mut w = create(path)?;
    write_vtk_to(&mut w, mesh, arrays)
        .and_then(|()| w.flush())
        .map_err(|e| Error::io(path, e))
}

fn write_vtk_to(w: &mut impl Write, mesh: &SurfaceMesh, arrays: &[(&str, &[f64])]) -> std::io::Result<()> {
    writeln!(w, "# vtk DataFile Version 2.0")?;
    writeln!(w, "{} t={}", mesh.surface().name(), fmt_real(mesh.time()))?;
    writeln!(w, "ASCII")?;
    writeln!(w, "DATASET POLYDATA")?;
    writeln!(w, "POINTS {} double", mesh.node_count())?;
    for p in mesh.nodes() {
        writeln!(w, "{} {} {}", fmt_real(p.x), fmt_real(p.y), fmt_real(p.z))?;
    }
    let nt = mesh.triangle_count();
    writeln!(w, "POLYGONS {} {}", nt, 4 * nt)?;
    for t in mesh.triangles() {
        writeln!(w, "3 {} {} {}", t[0], t[1], t[2])?;
    }
    if !arrays.is_empty() {
        writeln!(w, "POINT_DATA {}", mesh.node_count())?;
        for (name, values) in arrays {
            writeln!(w, "SCALARS {name} double 1")?;
            writeln!(w, "LOOKUP_TABLE default")?;
            for v in values.iter() {
                writeln!(w, "{}", fmt_real(*v))?;
            }
        }
    }
    Ok(())
}

/// Streams diagnostic records to a CSV file.
pub struct DiagnosticsWriter {
    path: std::path::PathBuf,
    out: BufWriter<File>,
}

impl DiagnosticsWriter {
    pub fn create(path: &Path) -> Result<Self> {
        let mut out = create(path)?;
        writeln!(out, "{DIAGNOSTICS_HEADER}").map_err(|e| Error::io(path, e))?;
        Ok(DiagnosticsWriter {
            path: path.to_path_buf(),
            out,
        })
    }

    pub fn write(&mut self, r: &DiagnosticRecord) -> Result<()> {
        writeln!(self.out, "{}", diagnostics_row(r)).map_err(|e| Error::io(&self.path, e))
    }

    pub fn finish(mut self) -> Result<()> {
        self.out.flush().map_err(|e| Error::io(&self.path, e))
    }
}

pub fn diagnostics_row(r: &DiagnosticRecord) -> String {
    format!(
        "{},{},{},{},{},{},{}",
        r.step,
        fmt_real(r.time),
        fmt_real(r.energy),
        fmt_real(r.mass),
        fmt_real(r.area),
        fmt_real(r.h),
        r.newton_iterations
    )
}

/// Writes a complete trajectory.
pub fn write_diagnostics_csv(records: &[DiagnosticRecord], path: &Path) -> Result<()> {
    let mut w = DiagnosticsWriter::create(path)?;
    for r in records {
        w.write(r)?;
    }
    w.finish()
}

/// Writes `h,error,eoc` rows; the first row leaves `eoc` empty.
pub fn write_eoc_csv(table: &EocTable, path: &Path) -> Result<()> {
    let mut w = create(path)?;
    let mut body = format!("{EOC_HEADER}\n");
    for row in &table.rows {
        let eoc = row.eoc.map(fmt_real).unwrap_or_default();
        body.push_str(&format!("{},{},{}\n", fmt_real(row.h), fmt_real(row.error), eoc));
    }
    w.write_all(body.as_bytes())
        .and_then(|()| w.flush())
        .map_err(|e| Error::io(path, e))
}
