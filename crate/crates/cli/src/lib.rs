//! Batch front end: reconstruct saved projects, validate meshes, write
//! synthetic fixture projects.

use clap::{Parser, Subcommand, ValueEnum};
use orthomodel_core::annotations::PartId;
use orthomodel_core::mesh::{export_obj, import_obj, validate, ValidationReport};
use orthomodel_core::pipeline::{reconstruct_project_file, PartStatus, PipelineConfig, Reconstruction};
use orthomodel_core::synth::Fixture;
use serde::Serialize;
use std::path::{Path, PathBuf};

pub const REPORT_VERSION: u32 = 1;

pub const EXIT_OK: u8 = 0;
pub const EXIT_FAILED: u8 = 1;
pub const EXIT_USAGE: u8 = 2;

#[derive(Debug, Parser)]
#[command(name = "orthomodel", version, about = "Reconstruct 3D parts from two annotated orthographic drawings")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Reconstruct every part of a project into one OBJ scene.
    Reconstruct {
        #[arg(long)]
        project: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Pipeline parameters as JSON; missing fields take defaults.
        #[arg(long)]
        config: Option<PathBuf>,
        /// Where to write the per-part diagnostics report.
        #[arg(long)]
        report: Option<PathBuf>,
    },
    /// Check every object of an OBJ file for manifoldness, closure and
    /// outward winding.
    Validate {
        #[arg(long)]
        mesh: PathBuf,
    },
    /// Write a rendered synthetic project (drawings plus project file).
    Fixture {
        #[arg(value_enum)]
        kind: FixtureKind,
        #[arg(long)]
        dir: PathBuf,
        /// Sphere radius, or bottom radius of the taper, in pixels.
        #[arg(long, default_value_t = 200.0)]
        radius: f64,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum FixtureKind {
    Sphere,
    Taper,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Report {
    pub version: u32,
    pub parts: Vec<PartReport>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PartReport {
    pub id: PartId,
    pub name: String,
    pub status: PartStatus,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
    pub objective_before: f64,
    pub objective_after: f64,
    pub validation: Option<ValidationReport>,
}

impl Report {
    pub fn from_reconstruction(rec: &Reconstruction) -> Self {
        let parts = rec
            .diagnostics
            .iter()
            .map(|d| PartReport {
                id: d.id,
                name: d.name.clone(),
                status: d.status,
                error: d.error.clone(),
                objective_before: d.objective_before,
                objective_after: d.objective_after,
                validation: d.validation.clone(),
            })
            .collect();
        Self { version: REPORT_VERSION, parts }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
struct MeshReport {
    object: PartId,
    #[serde(flatten)]
    report: ValidationReport,
}

/// Run a parsed command, printing to stdout/stderr, and return the exit
/// code.
pub fn run(cli: Cli) -> u8 {
    let result = match cli.command {
        Command::Reconstruct { project, out, config, report } => {
            cmd_reconstruct(&project, &out, config.as_deref(), report.as_deref())
        }
        Command::Validate { mesh } => cmd_validate(&mesh),
        Command::Fixture { kind, dir, radius } => cmd_fixture(kind, &dir, radius),
    };
    result.unwrap_or_else(|msg| {
        eprintln!("error: {msg}");
        EXIT_USAGE
    })
}

fn read(path: &Path) -> Result<String, String> {
    std::fs::read_to_string(path).map_err(|e| format!("reading {}: {e}", path.display()))
}

fn write(path: &Path, text: &str) -> Result<(), String> {
    std::fs::write(path, text).map_err(|e| format!("writing {}: {e}", path.display()))
}

pub fn load_config(path: Option<&Path>) -> Result<PipelineConfig, String> {
    let Some(path) = path else {
        return Ok(PipelineConfig::default());
    };
    let text = read(path)?;
    let config: PipelineConfig =
        serde_json::from_str(&text).map_err(|e| format!("{}: {e}", path.display()))?;
    config.check().map_err(|e| e.to_string())?;
    Ok(config)
}

fn cmd_reconstruct(
    project: &Path,
    out: &Path,
    config: Option<&Path>,
    report: Option<&Path>,
) -> Result<u8, String> {
    let config = load_config(config)?;
    let rec = reconstruct_project_file(project, &config).map_err(|e| e.to_string())?;
    write(out, &export_obj(&rec.scene))?;
    let summary = Report::from_reconstruction(&rec);
    if let Some(path) = report {
        let text = serde_json::to_string_pretty(&summary).expect("report serializes");
        write(path, &text)?;
    }
    for p in summary.parts.iter().filter(|p| p.status == PartStatus::Failed) {
        eprintln!("{} ({}) failed: {}", p.id, p.name, p.error.as_deref().unwrap_or("unknown error"));
    }
    Ok(if rec.all_ok() { EXIT_OK } else { EXIT_FAILED })
}

fn cmd_validate(mesh: &Path) -> Result<u8, String> {
    let scene = import_obj(&read(mesh)?).map_err(|e| format!("{}: {e}", mesh.display()))?;
    if scene.parts().is_empty() {
        return Err(format!("{}: no mesh objects", mesh.display()));
    }
    let reports: Vec<MeshReport> = scene
        .parts()
        .iter()
        .map(|m| MeshReport { object: m.part, report: validate(m) })
        .collect();
    println!("{}", serde_json::to_string_pretty(&reports).expect("report serializes"));
    let mut ok = true;
    for r in reports.iter().filter(|r| !r.report.passed) {
        ok = false;
        eprintln!(
            "{}: {} boundary edges, {} non-manifold edges, {} inconsistent faces",
            r.object,
            r.report.boundary_edges,
            r.report.non_manifold_edges,
            r.report.inconsistent_faces.len()
        );
    }
    Ok(if ok { EXIT_OK } else { EXIT_FAILED })
}

fn cmd_fixture(kind: FixtureKind, dir: &Path, radius: f64) -> Result<u8, String> {
    if !(radius > 0.0 && radius < 240.0) {
        return Err(format!("radius {radius} does not fit the 512 px drawings"));
    }
    let f = match kind {
        FixtureKind::Sphere => Fixture::sphere(radius),
        FixtureKind::Taper => Fixture::tapered_cylinder(radius, (radius * 2.0).min(240.0), 300.0, 10.0),
    };
    std::fs::create_dir_all(dir).map_err(|e| format!("creating {}: {e}", dir.display()))?;
    let path = f.write_to(dir).map_err(|e| format!("writing fixture: {e}"))?;
    println!("{}", path.display());
    Ok(EXIT_OK)
}
