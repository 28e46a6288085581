use std::fs;
use std::io::{self, Read, Write};
use std::path::PathBuf;
use std::process::ExitCode;
use std::time::{SystemTime, UNIX_EPOCH};

use clap::Parser;
use nilreturn_cli::{run_job, JobDocument, ReportDocumentError, EXIT_VALIDATION};

/// Return-map coefficients of a nilpotent monodromic singularity, with an
/// optional numeric cross-check.
#[derive(Parser, Debug)]
#[command(name = "nilreturn", version)]
struct Args {
    /// Job document (JSON); `-` reads standard input.
    #[arg(long)]
    input: PathBuf,
    /// Where to write the report; defaults to the document's `output_path`,
    /// then standard output.
    #[arg(long)]
    output: Option<PathBuf>,
    #[arg(long)]
    order: Option<usize>,
    /// Run the numeric oracle.
    #[arg(long)]
    verify: bool,
    /// Comma-separated ε values for verification.
    #[arg(long, value_delimiter = ',')]
    epsilons: Option<Vec<f64>>,
    /// Integrator tolerance.
    #[arg(long)]
    tol: Option<f64>,
    #[arg(long)]
    no_timestamp: bool,
    /// Write tab-separated (ε, Z_series, Z_numeric, residual) rows instead of
    /// the JSON report. Implies --verify.
    #[arg(long)]
    table: bool,
}

fn read_input(path: &PathBuf) -> io::Result<String> {
    if path.as_os_str() == "-" {
        let mut s = String::new();
        io::stdin().read_to_string(&mut s)?;
        Ok(s)
    } else {
        fs::read_to_string(path)
    }
}

fn emit(target: Option<&PathBuf>, text: &str) -> io::Result<()> {
    match target {
        Some(p) => fs::write(p, text),
        None => io::stdout().write_all(text.as_bytes()),
    }
}

fn main() -> ExitCode {
    let args = Args::parse();

    let doc = read_input(&args.input)
        .map_err(|e| format!("{}: {e}", args.input.display()))
        .and_then(|text| JobDocument::from_json(&text));
    let mut doc = match doc {
        Ok(d) => d,
        Err(message) => {
            eprintln!("nilreturn: {message}");
            let report = ReportDocumentError::unreadable(message);
            if let Err(e) = emit(args.output.as_ref(), &(report.to_json() + "\n")) {
                eprintln!("nilreturn: cannot write report: {e}");
            }
            return ExitCode::from(EXIT_VALIDATION);
        }
    };

    if let Some(order) = args.order {
        doc.order = order;
    }
    if args.verify || args.table {
        doc.verify = true;
    }
    if let Some(eps) = args.epsilons {
        doc.epsilons = eps;
    }
    if let Some(tol) = args.tol {
        doc.tolerances.integrator = Some(tol);
    }
    let target = args.output.clone().or_else(|| doc.output_path.clone().map(PathBuf::from));

    let mut report = run_job(doc);
    if !args.no_timestamp {
        report.timestamp = SystemTime::now().duration_since(UNIX_EPOCH).ok().map(|d| d.as_secs());
    }
    for e in &report.errors {
        eprintln!("nilreturn: [{}] {}: {}", e.stage, e.code, e.message);
    }

    let text = if args.table {
        report.table()
    } else {
        report.to_json() + "\n"
    };
    if let Err(e) = emit(target.as_ref(), &text) {
        eprintln!("nilreturn: cannot write report: {e}");
        return ExitCode::from(EXIT_VALIDATION);
    }
    ExitCode::from(report.status.exit_code())
}
