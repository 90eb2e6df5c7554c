use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use echomem::scan::{self, ScanResult, ScanSpec, DEFAULT_CONTOUR, OUT_ENV};
use echomem::Error;

#[derive(Parser)]
#[command(name = "echomem", version, about = "Photon-echo memory scans and maps")]
struct Cli {
    /// Worker threads for scan points (overrides scan.workers)
    #[arg(long, global = true)]
    workers: Option<usize>,
    /// Output directory (overrides $ECHOMEM_OUT and scan.out)
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the scan and write scan.csv, maps and manifest.json
    Run { config: PathBuf },
    /// Write the requested maps only
    Map { config: PathBuf },
    /// Render a map or scan CSV to SVG
    Render {
        csv: PathBuf,
        #[arg(long, default_value_t = DEFAULT_CONTOUR)]
        contour: f64,
        /// Column to plot; default abs_prod, eta or p_e
        #[arg(long)]
        value: Option<String>,
        /// SVG path; default is the CSV path with .svg
        #[arg(short = 'o', long = "svg")]
        svg: Option<PathBuf>,
    },
}

fn out_dir(cli: Option<&Path>, spec: &ScanSpec) -> PathBuf {
    if let Some(p) = cli {
        return p.to_path_buf();
    }
    match std::env::var_os(OUT_ENV) {
        Some(v) if !v.is_empty() => PathBuf::from(v),
        _ => spec.out.clone(),
    }
}

fn load(path: &Path, workers: Option<usize>) -> Result<ScanSpec, Error> {
    let mut spec = scan::load_config(path)?;
    if let Some(w) = workers {
        if w == 0 {
            return Err(Error::Config("--workers must be >= 1".into()));
        }
        spec.workers = w;
    }
    Ok(spec)
}

fn report(result: &ScanResult) {
    for p in result.points.iter().filter(|p| p.error.is_some()) {
        eprintln!(
            "point detuning={} zeta_L={} failed: {}",
            p.detuning,
            p.zeta_l,
            p.error.as_deref().unwrap_or("")
        );
    }
    for f in &result.files {
        println!("{}", result.out_dir.join(&f.path).display());
    }
    println!("{}", result.out_dir.join("manifest.json").display());
    if !result.points.is_empty() {
        println!("{} points, {} failed", result.points.len(), result.failures());
    }
}

fn exec(cli: Cli) -> Result<i32, Error> {
    match cli.command {
        Command::Run { config } => {
            let spec = load(&config, cli.workers)?;
            let result = scan::run_scan(&spec, &out_dir(cli.out.as_deref(), &spec))?;
            report(&result);
            Ok(result.exit_code())
        }
        Command::Map { config } => {
            let spec = load(&config, cli.workers)?;
            let result = scan::run_maps(&spec, &out_dir(cli.out.as_deref(), &spec))?;
            report(&result);
            Ok(0)
        }
        Command::Render { csv, contour, value, svg } => {
            let svg = match (svg, cli.out) {
                (Some(p), _) => p,
                (None, Some(dir)) => {
                    let name = csv.with_extension("svg");
                    dir.join(name.file_name().unwrap_or_default())
                }
                (None, None) => csv.with_extension("svg"),
            };
            if let Some(parent) = svg.parent().filter(|p| !p.as_os_str().is_empty()) {
                std::fs::create_dir_all(parent).map_err(|e| Error::io(parent, e))?;
            }
            scan::render_map(&csv, contour, value.as_deref(), &svg)?;
            println!("{}", svg.display());
            Ok(0)
        }
    }
}

fn main() -> ExitCode {
    // usage errors are config errors (1); clap would use 2
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 1 } else { 0 });
        }
    };
    match exec(cli) {
        Ok(code) => ExitCode::from(code as u8),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
