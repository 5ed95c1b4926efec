//! Run configuration files.
//!
//! The format is a flat list of `key = value` lines. Blank lines and
//! everything after `#` are ignored, values may be wrapped in double quotes,
//! and groups of related keys share a dotted prefix:
//!
//! ```text
//! surface = oscillating_sphere
//! mesh.subdivisions = 3
//! epsilon = 0.05
//! tau = 1e-4
//! t_final = 0.1
//! scheme = fully_implicit
//! initial = sphere_eoc
//! output.dir = "out"
//! ```
//!
//! Recognised keys:
//!
//! | key | meaning | default |
//! |-----|---------|---------|
//! | `surface` | `static_sphere`, `oscillating_sphere`, `constant_area_torus`, `periodic_torus` | required |
//! | `surface.radius` | static sphere radius | 1 |
//! | `surface.mean`, `surface.amplitude`, `surface.omega` | oscillating sphere `r^2 = mean + amplitude cos(omega t)`; periodic torus `r = minor + amplitude sin(omega t)` | builtin surface |
//! | `surface.major`, `surface.minor`, `surface.rate` | torus radii and growth rate | builtin surface |
//! | `mesh.subdivisions` | icosphere refinement (spheres) | 3 |
//! | `mesh.n_major`, `mesh.n_minor` | torus grid (tori) | 64, 47 |
//! | `epsilon` | interface width | 0.05 |
//! | `theta` | concave coefficient of the potential | potential default |
//! | `potential` | `quartic` | `quartic` |
//! | `tau`, `t_final` | time step and final time | required |
//! | `scheme` | `fully_implicit` or `imex` | `fully_implicit` |
//! | `initial` | `sphere_eoc`, `torus`, `constant`, `smooth_random` | `sphere_eoc` on spheres, `torus` on tori |
//! | `initial.value` | value for `constant` | 0 |
//! | `seed` | seed for `smooth_random` | 0 |
//! | `newton.tol`, `newton.max_iter` | Newton stopping rule | 1e-11, 25 |
//! | `linear.solver` | `ldlt`, `lu` or `bicgstab` | `ldlt` |
//! | `output.dir` | output directory | `output` |
//! | `output.snapshot_every` | VTK cadence in steps, 0 for none | 0 |
//! | `eoc.base_subdivisions` | coarsest icosphere of a convergence study | 1 |

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::PathBuf;

use crate::error::{Error, Result};
use crate::mesh::{build_icosphere, build_torus_mesh, SurfaceMesh};
use crate::potential::Potential;
use crate::scheme::{InitialData, SchemeConfig, SchemeKind};
use crate::sparse::LinearSolverKind;
use crate::surface::LevelSetSurface;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MeshSpec {
    Icosphere { subdivisions: usize },
    Torus { n_major: usize, n_minor: usize },
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub surface: LevelSetSurface,
    pub mesh: MeshSpec,
    pub potential: String,
    /// Overrides the potential's own `theta` when set.
    pub theta: Option<f64>,
    pub scheme: SchemeConfig,
    pub initial: InitialData,
    pub output_dir: PathBuf,
    pub snapshot_every: usize,
    pub seed: u64,
    pub eoc_base_subdivisions: usize,
}

const KEYS: &[&str] = &[
    "surface",
    "surface.radius",
    "surface.mean",
    "surface.amplitude",
    "surface.omega",
    "surface.major",
    "surface.minor",
    "surface.rate",
    "mesh.subdivisions",
    "mesh.n_major",
    "mesh.n_minor",
    "epsilon",
    "theta",
    "potential",
    "tau",
    "t_final",
    "scheme",
    "initial",
    "initial.value",
    "seed",
    "newton.tol",
    "newton.max_iter",
    "linear.solver",
    "output.dir",
    "output.snapshot_every",
    "eoc.base_subdivisions",
];

struct Entry {
    line: usize,
    value: String,
}

struct Document {
    entries: BTreeMap<String, Entry>,
}

impl Document {
    fn parse(text: &str) -> Result<Self> {
        let mut entries = BTreeMap::new();
        for (i, raw) in text.lines().enumerate() {
            let line = i + 1;
            let content = strip_comment(raw).trim();
            if content.is_empty() {
                continue;
            }
            let (key, value) = content.split_once('=').ok_or_else(|| Error::Parse {
                line,
                message: format!("expected `key = value`, found `{content}`"),
            })?;
            let key = key.trim();
            if key.is_empty() || !key.chars().all(|c| c.is_ascii_alphanumeric() || c == '_' || c == '.') {
                return Err(Error::Parse {
                    line,
                    message: format!("invalid key `{key}`"),
                });
            }
            if !KEYS.contains(&key) {
                return Err(Error::Parse {
                    line,
                    message: format!("unknown key `{key}`"),
                });
            }
            let value = unquote(value.trim()).ok_or_else(|| Error::Parse {
                line,
                message: format!("unterminated string in value of `{key}`"),
            })?;
            if value.is_empty() {
                return Err(Error::Parse {
                    line,
                    message: format!("missing value for `{key}`"),
                });
            }
            if let Some(prev) = entries.insert(key.to_string(), Entry { line, value }) {
                return Err(Error::Parse {
                    line,
                    message: format!("`{key}` already set on line {}", prev.line),
                });
            }
        }
        Ok(Document { entries })
    }

    fn text(&self, key: &str) -> Option<&str> {
        self.entries.get(key).map(|e| e.value.as_str())
    }

    fn required(&self, key: &str) -> Result<&str> {
        self.text(key).ok_or_else(|| Error::validation(key, "required key is missing"))
    }

    fn number<T: std::str::FromStr>(&self, key: &str) -> Result<Option<T>> {
        match self.entries.get(key) {
            None => Ok(None),
            Some(e) => e.value.parse().map(Some).map_err(|_| Error::Parse {
                line: e.line,
                message: format!("`{key}`: cannot parse `{}` as a number", e.value),
            }),
        }
    }

    fn real(&self, key: &str) -> Result<Option<f64>> {
        self.number(key)
    }

    fn reject(&self, key: &str, reason: &str) -> Result<()> {
        if self.entries.contains_key(key) {
            Err(Error::validation(key, reason))
        } else {
            Ok(())
        }
    }
}

fn strip_comment(line: &str) -> &str {
    let mut in_quotes = false;
    for (i, c) in line.char_indices() {
        match c {
            '"' => in_quotes = !in_quotes,
            '#' if !in_quotes => return &line[..i],
            _ => {}
        }
    }
    line
}

fn unquote(v: &str) -> Option<String> {
    match v.strip_prefix('"') {
        Some(rest) => rest.strip_suffix('"').map(str::to_string),
        None => Some(v.to_string()),
    }
}

fn positive(field: &str, v: f64) -> Result<f64> {
    if v.is_finite() && v > 0.0 {
        Ok(v)
    } else {
        Err(Error::validation(field, format!("must be finite and positive, got {v}")))
    }
}

fn finite(field: &str, v: f64) -> Result<f64> {
    if v.is_finite() {
        Ok(v)
    } else {
        Err(Error::validation(field, format!("must be finite, got {v}")))
    }
}

fn parse_surface(doc: &Document) -> Result<LevelSetSurface> {
    let name = doc.required("surface")?;
    let get = |key: &str, default: f64| -> Result<f64> { Ok(doc.real(key)?.unwrap_or(default)) };
    let surface = match LevelSetSurface::by_name(name) {
        Some(LevelSetSurface::StaticSphere { radius }) => {
            for k in ["surface.mean", "surface.amplitude", "surface.omega", "surface.major", "surface.minor", "surface.rate"] {
                doc.reject(k, "not a parameter of static_sphere")?;
            }
            LevelSetSurface::StaticSphere {
                radius: positive("surface.radius", get("surface.radius", radius)?)?,
            }
        }
        Some(LevelSetSurface::OscillatingSphere { mean, amplitude, omega }) => {
            for k in ["surface.radius", "surface.major", "surface.minor", "surface.rate"] {
                doc.reject(k, "not a parameter of oscillating_sphere")?;
            }
            let mean = positive("surface.mean", get("surface.mean", mean)?)?;
            let amplitude = finite("surface.amplitude", get("surface.amplitude", amplitude)?)?;
            if amplitude.abs() >= mean {
                return Err(Error::validation("surface.amplitude", "must be smaller than surface.mean in magnitude"));
            }
            LevelSetSurface::OscillatingSphere {
                mean,
                amplitude,
                omega: finite("surface.omega", get("surface.omega", omega)?)?,
            }
        }
        Some(LevelSetSurface::ConstantAreaTorus { major, minor, rate }) => {
            for k in ["surface.radius", "surface.mean", "surface.amplitude", "surface.omega"] {
                doc.reject(k, "not a parameter of constant_area_torus")?;
            }
            let major = positive("surface.major", get("surface.major", major)?)?;
            let minor = positive("surface.minor", get("surface.minor", minor)?)?;
            if minor >= major {
                return Err(Error::validation("surface.minor", "must be smaller than surface.major"));
            }
            LevelSetSurface::ConstantAreaTorus {
                major,
                minor,
                rate: finite("surface.rate", get("surface.rate", rate)?)?,
            }
        }
        Some(LevelSetSurface::PeriodicTorus {
            major,
            minor,
            amplitude,
            omega,
        }) => {
            for k in ["surface.radius", "surface.mean", "surface.rate"] {
                doc.reject(k, "not a parameter of periodic_torus")?;
            }
            let major = positive("surface.major", get("surface.major", major)?)?;
            let minor = positive("surface.minor", get("surface.minor", minor)?)?;
            let amplitude = finite("surface.amplitude", get("surface.amplitude", amplitude)?)?;
            if amplitude.abs() >= minor || minor + amplitude.abs() >= major {
                return Err(Error::validation("surface.amplitude", "the tube radius must stay in (0, surface.major)"));
            }
            LevelSetSurface::PeriodicTorus {
                major,
                minor,
                amplitude,
                omega: finite("surface.omega", get("surface.omega", omega)?)?,
            }
        }
        None => return Err(Error::validation("surface", format!("unknown surface `{name}`"))),
    };
    Ok(surface)
}

fn parse_mesh(doc: &Document, surface: &LevelSetSurface) -> Result<MeshSpec> {
    if surface.is_sphere() {
        doc.reject("mesh.n_major", "spheres use mesh.subdivisions")?;
        doc.reject("mesh.n_minor", "spheres use mesh.subdivisions")?;
        let subdivisions = doc.number("mesh.subdivisions")?.unwrap_or(3);
        if subdivisions > 9 {
            return Err(Error::validation("mesh.subdivisions", "at most 9 subdivisions"));
        }
        Ok(MeshSpec::Icosphere { subdivisions })
    } else {
        doc.reject("mesh.subdivisions", "tori use mesh.n_major and mesh.n_minor")?;
        let n_major = doc.number("mesh.n_major")?.unwrap_or(64);
        let n_minor = doc.number("mesh.n_minor")?.unwrap_or(47);
        if n_major < 3 {
            return Err(Error::validation("mesh.n_major", "must be at least 3"));
        }
        if n_minor < 3 {
            return Err(Error::validation("mesh.n_minor", "must be at least 3"));
        }
        Ok(MeshSpec::Torus { n_major, n_minor })
    }
}

fn parse_initial(doc: &Document, surface: &LevelSetSurface, seed: u64) -> Result<InitialData> {
    let default = if surface.is_sphere() { "sphere_eoc" } else { "torus" };
    let name = doc.text("initial").unwrap_or(default);
    if name != "constant" {
        doc.reject("initial.value", "only used with initial = constant")?;
    }
    match name {
        "sphere_eoc" => Ok(InitialData::SphereEoc),
        "torus" => Ok(InitialData::Torus),
        "constant" => Ok(InitialData::Constant(finite("initial.value", doc.real("initial.value")?.unwrap_or(0.0))?)),
        "smooth_random" => Ok(InitialData::SmoothRandom { seed }),
        other => Err(Error::validation("initial", format!("unknown initial data `{other}`"))),
    }
}

/// Parses and validates a configuration document.
pub fn parse_config(text: &str) -> Result<RunConfig> {
    let doc = Document::parse(text)?;
    let surface = parse_surface(&doc)?;
    let mesh = parse_mesh(&doc, &surface)?;

    let potential = doc.text("potential").unwrap_or("quartic").to_string();
    let base = Potential::by_name(&potential).ok_or_else(|| Error::validation("potential", format!("unknown potential `{potential}`")))?;
    let theta = doc.real("theta")?;
    if let Some(t) = theta {
        if !(t.is_finite() && t >= 0.0) {
            return Err(Error::validation("theta", format!("must be finite and non-negative, got {t}")));
        }
    }

    let defaults = SchemeConfig::default();
    let tau = doc.real("tau")?.ok_or_else(|| Error::validation("tau", "required key is missing"))?;
    let t_final = doc.real("t_final")?.ok_or_else(|| Error::validation("t_final", "required key is missing"))?;
    let scheme_name = doc.text("scheme").unwrap_or(defaults.scheme.name());
    let linear_name = doc.text("linear.solver").unwrap_or(defaults.linear_solver.name());
    let scheme = SchemeConfig {
        epsilon: doc.real("epsilon")?.unwrap_or(defaults.epsilon),
        tau,
        t_final,
        scheme: SchemeKind::from_name(scheme_name).ok_or_else(|| Error::validation("scheme", format!("unknown scheme `{scheme_name}`")))?,
        newton_tol: doc.real("newton.tol")?.unwrap_or(defaults.newton_tol),
        newton_max_iter: doc.number("newton.max_iter")?.unwrap_or(defaults.newton_max_iter),
        linear_solver: LinearSolverKind::from_name(linear_name)
            .ok_or_else(|| Error::validation("linear.solver", format!("unknown linear solver `{linear_name}`")))?,
        record_hminus1: false,
    };
    scheme.validate().map_err(|e| match e {
        Error::Validation { field, message } => Error::Validation {
            field: match field.as_str() {
                "newton_tol" => "newton.tol".into(),
                "newton_max_iter" => "newton.max_iter".into(),
                _ => field,
            },
            message,
        },
        other => other,
    })?;

    let seed = doc.number("seed")?.unwrap_or(0);
    let initial = parse_initial(&doc, &surface, seed)?;
    let eoc_base_subdivisions = doc.number("eoc.base_subdivisions")?.unwrap_or(1);

    let cfg = RunConfig {
        surface,
        mesh,
        potential,
        theta: theta.filter(|&t| t != base.theta),
        scheme,
        initial,
        output_dir: PathBuf::from(doc.text("output.dir").unwrap_or("output")),
        snapshot_every: doc.number("output.snapshot_every")?.unwrap_or(0),
        seed,
        eoc_base_subdivisions,
    };
    Ok(cfg)
}

impl RunConfig {
    /// The potential with the configured `theta`.
    pub fn potential(&self) -> Potential {
        let mut pot = Potential::by_name(&self.potential).unwrap_or_default();
        if let Some(theta) = self.theta {
            pot.theta = theta;
        }
        pot
    }

    /// Builds the initial mesh at `t = 0`.
    pub fn build_mesh(&self) -> Result<SurfaceMesh> {
        match self.mesh {
            MeshSpec::Icosphere { subdivisions } => build_icosphere(&self.surface, subdivisions, 0.0),
            MeshSpec::Torus { n_major, n_minor } => build_torus_mesh(&self.surface, n_major, n_minor, 0.0),
        }
    }

    /// Writes the configuration back in the file format, one key per line
    /// with every value explicit.
    pub fn emit(&self) -> String {
        let mut out = String::new();
        let mut kv = |k: &str, v: String| {
            let _ = writeln!(out, "{k} = {v}");
        };
        kv("surface", self.surface.name().into());
        match self.surface {
            LevelSetSurface::StaticSphere { radius } => kv("surface.radius", format!("{radius:?}")),
            LevelSetSurface::OscillatingSphere { mean, amplitude, omega } => {
                kv("surface.mean", format!("{mean:?}"));
                kv("surface.amplitude", format!("{amplitude:?}"));
                kv("surface.omega", format!("{omega:?}"));
            }
            LevelSetSurface::ConstantAreaTorus { major, minor, rate } => {
                kv("surface.major", format!("{major:?}"));
                kv("surface.minor", format!("{minor:?}"));
                kv("surface.rate", format!("{rate:?}"));
            }
            LevelSetSurface::PeriodicTorus {
                major,
                minor,
                amplitude,
                omega,
            } => {
                kv("surface.major", format!("{major:?}"));
                kv("surface.minor", format!("{minor:?}"));
                kv("surface.amplitude", format!("{amplitude:?}"));
                kv("surface.omega", format!("{omega:?}"));
            }
        }
        match self.mesh {
            MeshSpec::Icosphere { subdivisions } => kv("mesh.subdivisions", subdivisions.to_string()),
            MeshSpec::Torus { n_major, n_minor } => {
                kv("mesh.n_major", n_major.to_string());
                kv("mesh.n_minor", n_minor.to_string());
            }
        }
        kv("potential", self.potential.clone());
        if let Some(theta) = self.theta {
            kv("theta", format!("{theta:?}"));
        }
        let s = &self.scheme;
        kv("epsilon", format!("{:?}", s.epsilon));
        kv("tau", format!("{:?}", s.tau));
        kv("t_final", format!("{:?}", s.t_final));
        kv("scheme", s.scheme.name().into());
        kv("newton.tol", format!("{:?}", s.newton_tol));
        kv("newton.max_iter", s.newton_max_iter.to_string());
        kv("linear.solver", s.linear_solver.name().into());
        kv("initial", self.initial.name().into());
        if let InitialData::Constant(c) = self.initial {
            kv("initial.value", format!("{c:?}"));
        }
        kv("seed", self.seed.to_string());
        kv("output.dir", format!("\"{}\"", self.output_dir.display()));
        kv("output.snapshot_every", self.snapshot_every.to_string());
        kv("eoc.base_subdivisions", self.eoc_base_subdivisions.to_string());
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = "surface = oscillating_sphere\nmesh.subdivisions = 2\nepsilon = 0.05\ntau = 1e-4\nt_final = 0.1\nscheme = fully_implicit\n";

    #[test]
    fn minimal_sphere_config_gets_defaults() {
        let cfg = parse_config(MINIMAL).unwrap();
        assert_eq!(cfg.surface, LevelSetSurface::oscillating_sphere());
        assert_eq!(cfg.mesh, MeshSpec::Icosphere { subdivisions: 2 });
        assert_eq!(cfg.scheme.newton_tol, 1e-11);
        assert_eq!(cfg.initial, InitialData::SphereEoc);
        assert_eq!(cfg.snapshot_every, 0);
    }

    #[test]
    fn negative_tau_names_the_field() {
        let text = MINIMAL.replace("tau = 1e-4", "tau = -1");
        match parse_config(&text) {
            Err(Error::Validation { field, .. }) => assert_eq!(field, "tau"),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn tau_above_final_time_is_rejected() {
        let text = MINIMAL.replace("tau = 1e-4", "tau = 0.2");
        assert!(matches!(parse_config(&text), Err(Error::Validation { field, .. }) if field == "tau"));
    }

    #[test]
    fn torus_experiment_config_is_accepted() {
        let text = "surface = periodic_torus\nepsilon = 0.05\ntau = 5e-5\nt_final = 1\n";
        let cfg = parse_config(text).unwrap();
        assert_eq!(cfg.mesh, MeshSpec::Torus { n_major: 64, n_minor: 47 });
        assert!(cfg.scheme.warnings(&cfg.potential()).is_empty());
        assert!(5e-5 < cfg.scheme.uniqueness_bound(1.0));
    }

    #[test]
    fn parse_errors_carry_line_numbers() {
        let text = "surface = static_sphere\n# comment\nbogus line\n";
        assert!(matches!(parse_config(text), Err(Error::Parse { line: 3, .. })));
        let text = "surface = static_sphere\ntau = abc\n";
        assert!(matches!(parse_config(text), Err(Error::Parse { line: 2, .. })));
        let text = "surface = static_sphere\nsurface = static_sphere\n";
        assert!(matches!(parse_config(text), Err(Error::Parse { line: 2, .. })));
        let text = "surface = static_sphere\nunknown.key = 1\n";
        assert!(matches!(parse_config(text), Err(Error::Parse { line: 2, .. })));
    }

    #[test]
    fn comments_and_quotes() {
        let text = "surface = static_sphere # trailing\ntau = 0.01\nt_final = 0.1\noutput.dir = \"runs/#1\"\n";
        let cfg = parse_config(text).unwrap();
        assert_eq!(cfg.output_dir, PathBuf::from("runs/#1"));
    }

    #[test]
    fn mismatched_mesh_keys_are_rejected() {
        let text = "surface = static_sphere\nmesh.n_major = 8\ntau = 0.01\nt_final = 0.1\n";
        assert!(matches!(parse_config(text), Err(Error::Validation { field, .. }) if field == "mesh.n_major"));
    }

    #[test]
    fn emit_round_trips() {
        let texts = [
            MINIMAL.to_string(),
            "surface = constant_area_torus\nmesh.n_major = 40\nmesh.n_minor = 19\ntau = 1e-3\nt_final = 0.1\nscheme = imex\ninitial = constant\ninitial.value = 0.25\ntheta = 0.5\n".into(),
            "surface = static_sphere\nsurface.radius = 2\ntau = 1e-3\nt_final = 0\ninitial = smooth_random\nseed = 7\nlinear.solver = lu\n".into(),
        ];
        for text in texts {
            let cfg = parse_config(&text).unwrap();
            assert_eq!(parse_config(&cfg.emit()).unwrap(), cfg);
        }
    }
}
