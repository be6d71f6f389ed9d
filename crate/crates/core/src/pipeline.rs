//! End-to-end conversion: IFC and occupant CSV in, Turtle and a run report
//! out. [`convert`] works in memory; [`run`] adds file handling.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::io::Write as _;
use std::path::{Path, PathBuf};
use std::time::Instant;

use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::brick::{build_graph, serialize_turtle, BrickGraph, BuildError, GraphOptions, Mode, DEFAULT_OCC_NS};
use crate::diagnostics::{Diagnostic, Severity};
use crate::geo::{GeoError, GeoSample, SiteTransform};
use crate::ifc::{extract_model, ModelError};
use crate::inference::{infer_all, RelationKind};
use crate::occupants::{filter_defined, load_occupants, localize, OccupantError};
use crate::step::{parse_step_bytes, StepError};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SiteConfig {
    pub origin_lat: f64,
    pub origin_lon: f64,
    pub origin_alt: f64,
    pub rotation_deg: f64,
    pub scale: f64,
}

impl SiteConfig {
    pub fn transform(&self) -> Result<SiteTransform, GeoError> {
        SiteTransform::from_geodetic(
            &GeoSample::new(self.origin_lat, self.origin_lon, self.origin_alt),
            self.rotation_deg,
            self.scale,
        )
    }
}

/// Settings that affect the produced graph.
#[derive(Debug, Clone, PartialEq)]
pub struct ConvertOptions {
    pub mode: Mode,
    pub site: Option<SiteConfig>,
    pub as_of: Option<DateTime<Utc>>,
    pub occupant_namespace: String,
}

impl ConvertOptions {
    pub fn new(mode: Mode) -> Self {
        ConvertOptions { mode, site: None, as_of: None, occupant_namespace: DEFAULT_OCC_NS.to_owned() }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub ifc_path: PathBuf,
    pub occupants_path: Option<PathBuf>,
    pub out_path: PathBuf,
    pub report_path: Option<PathBuf>,
    pub strict: bool,
    pub options: ConvertOptions,
}

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error("config: {0}")]
    Config(String),
    #[error("io: {path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("step: {0}")]
    Step(#[from] StepError),
    #[error("ifc: {0}")]
    Model(#[from] ModelError),
    #[error("occupants: {0}")]
    Occupants(#[from] OccupantError),
    #[error("geo: {0}")]
    Geo(#[from] GeoError),
    #[error("brick: {0}")]
    Build(#[from] BuildError),
}

impl PipelineError {
    /// Configuration problems are usage errors; everything else is a
    /// runtime failure.
    pub fn is_usage(&self) -> bool {
        matches!(self, PipelineError::Config(_))
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct OccupantSummary {
    pub subjects: usize,
    pub validated: usize,
    pub dropped: Vec<crate::occupants::Dropped>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunReport {
    pub mode: Mode,
    pub output_path: Option<PathBuf>,
    pub nodes_by_class: BTreeMap<String, usize>,
    pub triples_by_predicate: BTreeMap<String, usize>,
    pub relations_by_kind: BTreeMap<RelationKind, usize>,
    pub total_nodes: usize,
    pub total_triples: usize,
    pub occupants: Option<OccupantSummary>,
    pub notices: Vec<String>,
    pub diagnostics: Vec<Diagnostic>,
    /// Stage name and wall-clock milliseconds, in execution order.
    pub timings_ms: Vec<(String, f64)>,
}

impl RunReport {
    /// Diagnostics that `--strict` turns into a failure.
    pub fn warning_count(&self) -> usize {
        self.diagnostics.iter().filter(|d| d.severity >= Severity::Warning).count()
    }

    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "mode: {}", self.mode);
        if let Some(p) = &self.output_path {
            let _ = writeln!(out, "output: {}", p.display());
        }
        let _ = writeln!(out, "nodes: {}", self.total_nodes);
        for (c, n) in &self.nodes_by_class {
            let _ = writeln!(out, "  {c:<32} {n}");
        }
        let _ = writeln!(out, "triples: {}", self.total_triples);
        for (p, n) in &self.triples_by_predicate {
            let _ = writeln!(out, "  {p:<32} {n}");
        }
        let _ = writeln!(out, "inferred relations:");
        for (k, n) in &self.relations_by_kind {
            let name = serde_json::to_value(k).ok().and_then(|v| v.as_str().map(str::to_owned)).unwrap_or_default();
            let _ = writeln!(out, "  {name:<32} {n}");
        }
        if let Some(o) = &self.occupants {
            let _ = writeln!(
                out,
                "occupants: {} subjects, {} validated, {} dropped",
                o.subjects,
                o.validated,
                o.dropped.len()
            );
        }
        for n in &self.notices {
            let _ = writeln!(out, "notice: {n}");
        }
        let _ = writeln!(
            out,
            "diagnostics: {} warnings, {} info",
            self.warning_count(),
            self.diagnostics.len() - self.warning_count()
        );
        let stages: Vec<String> = self.timings_ms.iter().map(|(s, ms)| format!("{s} {ms:.1}")).collect();
        let _ = writeln!(out, "timings (ms): {}", stages.join(", "));
        out
    }
}

#[derive(Debug, Clone)]
pub struct Conversion {
    pub graph: BrickGraph,
    pub turtle: String,
    pub report: RunReport,
}

struct Stopwatch {
    last: Instant,
    timings: Vec<(String, f64)>,
}

impl Stopwatch {
    fn lap(&mut self, stage: &str) {
        let now = Instant::now();
        self.timings.push((stage.to_owned(), (now - self.last).as_secs_f64() * 1e3));
        self.last = now;
    }
}

/// Runs every stage in memory. `occupants_csv` is ignored (with a notice)
/// in BMS mode and required otherwise, as is a site transform.
pub fn convert(
    ifc: &[u8],
    occupants_csv: Option<&[u8]>,
    options: &ConvertOptions,
) -> Result<Conversion, PipelineError> {
    let mut clock = Stopwatch { last: Instant::now(), timings: Vec::new() };
    let mut notices = Vec::new();
    let mut diagnostics = Vec::new();

    let file = parse_step_bytes(ifc)?;
    clock.lap("parse");
    let extraction = extract_model(&file)?;
    diagnostics.extend(extraction.diagnostics);
    let model = extraction.model;
    clock.lap("extract");

    let mut occupants = Vec::new();
    let mut summary = None;
    if options.mode.includes_people() {
        let csv = occupants_csv
            .ok_or_else(|| PipelineError::Config(format!("mode {} needs an occupant dataset", options.mode)))?;
        let site = options.site.ok_or_else(|| {
            PipelineError::Config(format!("mode {} needs the site origin (origin_lat, origin_lon)", options.mode))
        })?;
        let transform = site.transform()?;
        let loaded = load_occupants(csv)?;
        diagnostics.extend(loaded.diagnostics);
        let subjects = loaded.records.len();
        let (kept, dropped) = filter_defined(loaded.records);
        for d in &dropped {
            diagnostics.push(Diagnostic::info("occupant-dropped", Some(&d.subject_id), d.reason));
        }
        clock.lap("occupants");
        let (localized, d) = localize(kept, &transform);
        diagnostics.extend(d);
        clock.lap("localize");
        summary = Some(OccupantSummary { subjects, validated: localized.len(), dropped });
        occupants = localized;
    } else if occupants_csv.is_some() {
        notices.push("occupant dataset ignored in bms mode".to_owned());
    }

    let inference = infer_all(&model, &occupants, options.as_of);
    diagnostics.extend(inference.diagnostics);
    clock.lap("infer");

    let graph_options = GraphOptions { occupant_namespace: options.occupant_namespace.clone() };
    let graph = build_graph(&model, &inference.relations, &occupants, options.mode, &graph_options)?;
    clock.lap("build");
    let turtle = serialize_turtle(&graph);
    clock.lap("serialize");

    let mut relations_by_kind = BTreeMap::new();
    for r in &inference.relations {
        *relations_by_kind.entry(r.kind).or_insert(0) += 1;
    }
    let report = RunReport {
        mode: options.mode,
        output_path: None,
        nodes_by_class: graph.nodes_by_class(),
        triples_by_predicate: graph.triples_by_predicate(),
        relations_by_kind,
        total_nodes: graph.nodes().len(),
        total_triples: graph.triples.len(),
        occupants: summary,
        notices,
        diagnostics,
        timings_ms: clock.timings,
    };
    Ok(Conversion { graph, turtle, report })
}

fn read(path: &Path) -> Result<Vec<u8>, PipelineError> {
    std::fs::read(path).map_err(|source| PipelineError::Io { path: path.to_owned(), source })
}

/// Writes through a temporary file in the target directory and renames it
/// into place.
pub fn write_atomically(path: &Path, contents: &[u8]) -> Result<(), PipelineError> {
    let io = |source| PipelineError::Io { path: path.to_owned(), source };
    let dir = match path.parent() {
        Some(d) if !d.as_os_str().is_empty() => d,
        _ => Path::new("."),
    };
    let mut tmp = tempfile::NamedTempFile::new_in(dir).map_err(io)?;
    tmp.write_all(contents).map_err(io)?;
    tmp.as_file().sync_all().map_err(io)?;
    tmp.persist(path).map_err(|e| io(e.error))?;
    Ok(())
}

/// Reads the inputs, converts, writes the Turtle file and the optional
/// JSON report. Strict-mode handling is left to the caller.
pub fn run(config: &RunConfig) -> Result<RunReport, PipelineError> {
    let ifc = read(&config.ifc_path)?;
    let occupants = match &config.occupants_path {
        Some(p) if config.options.mode.includes_people() => Some(read(p)?),
        Some(_) => Some(Vec::new()),
        None => None,
    };
    let Conversion { turtle, mut report, .. } = convert(&ifc, occupants.as_deref(), &config.options)?;
    let started = Instant::now();
    write_atomically(&config.out_path, turtle.as_bytes())?;
    report.timings_ms.push(("write".to_owned(), started.elapsed().as_secs_f64() * 1e3));
    report.output_path = Some(config.out_path.clone());
    if let Some(path) = &config.report_path {
        let json = serde_json::to_string_pretty(&report).expect("report serializes");
        write_atomically(path, json.as_bytes())?;
    }
    Ok(report)
}

/// Keys accepted in a `--config` file. Relative paths are taken relative to
/// the file's directory.
#[derive(Debug, Clone, Default, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FileConfig {
    pub ifc: Option<PathBuf>,
    pub occupants: Option<PathBuf>,
    pub mode: Option<String>,
    pub out: Option<PathBuf>,
    pub report: Option<PathBuf>,
    pub as_of: Option<String>,
    pub strict: Option<bool>,
    pub origin_lat: Option<f64>,
    pub origin_lon: Option<f64>,
    pub origin_alt: Option<f64>,
    pub rotation_deg: Option<f64>,
    pub scale: Option<f64>,
    pub occupant_namespace: Option<String>,
}

impl FileConfig {
    pub fn load(path: &Path) -> Result<FileConfig, PipelineError> {
        let text =
            std::fs::read_to_string(path).map_err(|source| PipelineError::Io { path: path.to_owned(), source })?;
        let mut cfg: FileConfig =
            toml::from_str(&text).map_err(|e| PipelineError::Config(format!("{}: {}", path.display(), e.message())))?;
        let base = path.parent().unwrap_or(Path::new(""));
        for p in [&mut cfg.ifc, &mut cfg.occupants, &mut cfg.out, &mut cfg.report].into_iter().flatten() {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        }
        Ok(cfg)
    }

    /// `self` overrides `lower` field by field.
    pub fn or(self, lower: FileConfig) -> FileConfig {
        FileConfig {
            ifc: self.ifc.or(lower.ifc),
            occupants: self.occupants.or(lower.occupants),
            mode: self.mode.or(lower.mode),
            out: self.out.or(lower.out),
            report: self.report.or(lower.report),
            as_of: self.as_of.or(lower.as_of),
            strict: self.strict.or(lower.strict),
            origin_lat: self.origin_lat.or(lower.origin_lat),
            origin_lon: self.origin_lon.or(lower.origin_lon),
            origin_alt: self.origin_alt.or(lower.origin_alt),
            rotation_deg: self.rotation_deg.or(lower.rotation_deg),
            scale: self.scale.or(lower.scale),
            occupant_namespace: self.occupant_namespace.or(lower.occupant_namespace),
        }
    }

    /// Applies defaults and checks that the mode has the inputs it needs.
    pub fn resolve(self) -> Result<RunConfig, PipelineError> {
        let missing = |what: &str| PipelineError::Config(format!("missing {what}"));
        let mode: Mode = match &self.mode {
            Some(m) => m.parse().map_err(PipelineError::Config)?,
            None => Mode::DigitalTwin,
        };
        let as_of = self
            .as_of
            .as_deref()
            .map(|s| {
                DateTime::parse_from_rfc3339(s)
                    .map(|t| t.with_timezone(&Utc))
                    .map_err(|e| PipelineError::Config(format!("as_of {s:?}: {e}")))
            })
            .transpose()?;
        let site = match (self.origin_lat, self.origin_lon) {
            (Some(lat), Some(lon)) => Some(SiteConfig {
                origin_lat: lat,
                origin_lon: lon,
                origin_alt: self.origin_alt.unwrap_or(0.0),
                rotation_deg: self.rotation_deg.unwrap_or(0.0),
                scale: self.scale.unwrap_or(1.0),
            }),
            (None, None) => None,
            _ => return Err(PipelineError::Config("origin_lat and origin_lon must be given together".into())),
        };
        if mode.includes_people() {
            if self.occupants.is_none() {
                return Err(missing(&format!("occupant dataset (--occupants), required in {mode} mode")));
            }
            if site.is_none() {
                return Err(missing(&format!("site origin (--origin-lat, --origin-lon), required in {mode} mode")));
            }
        }
        Ok(RunConfig {
            ifc_path: self.ifc.ok_or_else(|| missing("IFC input (--ifc)"))?,
            occupants_path: self.occupants,
            out_path: self.out.ok_or_else(|| missing("output path (--out)"))?,
            report_path: self.report,
            strict: self.strict.unwrap_or(false),
            options: ConvertOptions {
                mode,
                site,
                as_of,
                occupant_namespace: self.occupant_namespace.unwrap_or_else(|| DEFAULT_OCC_NS.to_owned()),
            },
        })
    }
}
