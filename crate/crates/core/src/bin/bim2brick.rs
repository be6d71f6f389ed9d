use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use bim2brick::brick::{diff_by_source_id, parse_turtle};
use bim2brick::pipeline::{self, FileConfig};

const EXIT_FATAL: u8 = 1;
const EXIT_STRICT: u8 = 2;
const EXIT_CHANGED: u8 = 3;
const EXIT_USAGE: u8 = 64;

#[derive(Parser)]
#[command(name = "bim2brick", version, about = "Convert an IFC model and occupant data into a BRICK graph")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Convert a model to Turtle.
    Run(RunArgs),
    /// Compare two generated Turtle files by source id.
    Diff(DiffArgs),
}

#[derive(Args)]
struct RunArgs {
    #[arg(long, value_name = "PATH")]
    ifc: Option<PathBuf>,
    #[arg(long, value_name = "PATH")]
    occupants: Option<PathBuf>,
    /// people, bms or digital-twin (default digital-twin)
    #[arg(long)]
    mode: Option<String>,
    #[arg(long, value_name = "PATH")]
    out: Option<PathBuf>,
    /// TOML file with the same keys as the flags (snake_case)
    #[arg(long, value_name = "PATH")]
    config: Option<PathBuf>,
    /// Locate occupants by their last sample at or before this instant
    #[arg(long, value_name = "RFC3339")]
    as_of: Option<String>,
    /// Also write the run report as JSON
    #[arg(long, value_name = "PATH")]
    report: Option<PathBuf>,
    /// Exit with status 2 when any warning was reported
    #[arg(long)]
    strict: bool,
    #[arg(long, allow_negative_numbers = true)]
    origin_lat: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    origin_lon: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    origin_alt: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    rotation_deg: Option<f64>,
    #[arg(long)]
    scale: Option<f64>,
}

#[derive(Clone, Copy, ValueEnum)]
enum DiffFormat {
    Text,
    Jsonl,
}

#[derive(Args)]
struct DiffArgs {
    old: PathBuf,
    new: PathBuf,
    #[arg(long, value_enum, default_value = "text")]
    format: DiffFormat,
}

fn cmd_run(args: RunArgs) -> ExitCode {
    let flags = FileConfig {
        ifc: args.ifc,
        occupants: args.occupants,
        mode: args.mode,
        out: args.out,
        report: args.report,
        as_of: args.as_of,
        strict: args.strict.then_some(true),
        origin_lat: args.origin_lat,
        origin_lon: args.origin_lon,
        origin_alt: args.origin_alt,
        rotation_deg: args.rotation_deg,
        scale: args.scale,
        occupant_namespace: None,
    };
    let merged = match &args.config {
        Some(path) => FileConfig::load(path).map(|file| flags.or(file)),
        None => Ok(flags),
    };
    let config = match merged.and_then(FileConfig::resolve) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(if e.is_usage() { EXIT_USAGE } else { EXIT_FATAL });
        }
    };
    match pipeline::run(&config) {
        Ok(report) => {
            for d in &report.diagnostics {
                eprintln!("{d}");
            }
            print!("{}", report.to_text());
            if config.strict && report.warning_count() > 0 {
                eprintln!("error: {} warnings in strict mode", report.warning_count());
                return ExitCode::from(EXIT_STRICT);
            }
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(if e.is_usage() { EXIT_USAGE } else { EXIT_FATAL })
        }
    }
}

fn cmd_diff(args: DiffArgs) -> ExitCode {
    let load = |path: &PathBuf| {
        let text = std::fs::read_to_string(path).map_err(|e| format!("{}: {e}", path.display()))?;
        parse_turtle(&text).map_err(|e| format!("{}: {e}", path.display()))
    };
    let graphs = load(&args.old).and_then(|old| Ok((old, load(&args.new)?)));
    let report = graphs.and_then(|(old, new)| diff_by_source_id(&old, &new).map_err(|e| e.to_string()));
    match report {
        Ok(r) => {
            match args.format {
                DiffFormat::Text => print!("{}", r.to_text()),
                DiffFormat::Jsonl => print!("{}", r.to_json_lines()),
            }
            if r.is_empty() {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(EXIT_CHANGED)
            }
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(EXIT_FATAL)
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(EXIT_USAGE) } else { ExitCode::SUCCESS };
        }
    };
    match cli.command {
        Command::Run(args) => cmd_run(args),
        Command::Diff(args) => cmd_diff(args),
    }
}
