use clap::{Args, Parser, Subcommand};
use masslab::fractional::KernelGrid;
use masslab::limits::ScanFamily;
use masslab::verify::Suite;
use masslab::Family;
use masslab_cli::commands::{self, ExponentQuery, ScanQuery};
use masslab_cli::config::{load, FracRunConfig};
use masslab_cli::svg::{line_plot, Axes, Table};
use masslab_cli::{CliError, Result};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

/// Mass conservation and mass loss experiments for nonlinear diffusion.
///
/// Exit codes: 0 success, 1 invalid input, 2 failed acceptance criterion,
/// 3 numerical failure.
#[derive(Parser)]
#[command(name = "masslab", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Critical and similarity exponents, regime and conservation verdict.
    Exponents(ExponentArgs),
    /// Radial finite-volume runs from a TOML config, with optional sweeps.
    Solve {
        config: PathBuf,
        /// Overrides `output.dir`.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Fractional evolutions and kernels.
    #[command(subcommand)]
    Frac(FracCommand),
    /// Concentration scans near the critical exponents.
    Scan(ScanArgs),
    /// Runs the acceptance criteria.
    Verify {
        /// `fast` or `full`.
        #[arg(default_value = "fast")]
        suite: String,
        /// Run only these criteria (comma separated ids).
        #[arg(long, value_delimiter = ',')]
        ids: Vec<u8>,
        /// Also print every check.
        #[arg(long)]
        verbose: bool,
        /// Write the per-check CSV report here.
        #[arg(long)]
        report: Option<PathBuf>,
        /// Print the outcomes as JSON instead of text.
        #[arg(long)]
        json: bool,
    },
    /// Line plot of CSV columns as SVG.
    Plot {
        csv: PathBuf,
        #[arg(long)]
        x: String,
        /// One or more y columns, comma separated.
        #[arg(long, value_delimiter = ',', required = true)]
        y: Vec<String>,
        #[arg(long)]
        logx: bool,
        #[arg(long)]
        logy: bool,
        #[arg(short, long)]
        output: PathBuf,
    },
}

#[derive(Args)]
struct ExponentArgs {
    /// he, pme (or fde), ple, fhe, fpme, fple, logdiff, tvf, dnle, aniso_pme, aniso_ple.
    #[arg(long)]
    family: String,
    #[arg(long = "N", short = 'N', default_value_t = 1)]
    n: usize,
    /// One value or a comma-separated list.
    #[arg(long, value_delimiter = ',', allow_negative_numbers = true)]
    m: Vec<f64>,
    #[arg(long, value_delimiter = ',', allow_negative_numbers = true)]
    p: Vec<f64>,
    #[arg(long, allow_negative_numbers = true)]
    s: Option<f64>,
    /// Per-axis exponents of the anisotropic families.
    #[arg(long, value_delimiter = ',')]
    exps: Option<Vec<f64>>,
    #[arg(long)]
    json: bool,
}

#[derive(Subcommand)]
enum FracCommand {
    /// FHE or FPME evolution from a TOML config.
    Run {
        config: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Fractional heat kernel at t = 1.
    Kernel {
        #[arg(long)]
        s: f64,
        #[arg(long = "N", short = 'N', default_value_t = 1)]
        n: usize,
        /// Grid spacing; with `--size` and `--window` overrides the defaults.
        #[arg(long, requires_all = ["size", "window"])]
        h: Option<f64>,
        #[arg(long)]
        size: Option<usize>,
        #[arg(long)]
        window: Option<f64>,
        #[arg(long, default_value = "runs")]
        out: PathBuf,
    },
}

#[derive(Args)]
struct ScanArgs {
    /// pme, ple or ple1d (the one-dimensional p → 1 scan).
    #[arg(long)]
    family: String,
    #[arg(long = "N", short = 'N', default_value_t = 3)]
    n: usize,
    /// Largest distance to the critical exponent; later rows halve it.
    #[arg(long, default_value_t = 5e-3)]
    eps: f64,
    #[arg(long, default_value_t = 8)]
    halvings: usize,
    #[arg(long, default_value = "runs")]
    out: PathBuf,
}

fn print_output(out: &commands::RunOutput) {
    println!("config hash {}", out.hash);
    for f in &out.files {
        println!("wrote {}", f.display());
    }
}

fn cmd_exponents(a: ExponentArgs) -> Result<()> {
    let family: Family = a.family.parse()?;
    let q = ExponentQuery { family, n: a.n, m: a.m, p: a.p, s: a.s, exps: a.exps };
    let rows = commands::exponents(&q)?;
    if a.json {
        println!("{}", serde_json::to_string_pretty(&rows).expect("rows serialize"));
    } else {
        print!("{}", commands::exponents_table(&rows));
    }
    Ok(())
}

fn cmd_solve(config: &Path, out: Option<&Path>) -> Result<()> {
    let (output, rows) = commands::solve_file(config, out)?;
    println!("label,{}", commands::SOLVE_SUMMARY_COLUMNS.join(","));
    for r in &rows {
        println!(
            "{},{},{},{:.6e},{:.6e},{:.6e},{:.6e},{:.6e},{:.6e}",
            r.label, r.param, r.radius, r.mass0, r.mass_end, r.loss_frac, r.extinction_time, r.loss_rate, r.l1_final
        );
    }
    print_output(&output);
    Ok(())
}

fn cmd_frac(c: FracCommand) -> Result<()> {
    match c {
        FracCommand::Run { config, out } => {
            let cfg: FracRunConfig = load(&config)?;
            print_output(&commands::frac_solve(&cfg, out.as_deref())?);
        }
        FracCommand::Kernel { s, n, h, size, window, out } => {
            let grid = match (h, size, window) {
                (Some(h), Some(size), Some(window)) => Some(KernelGrid { h, size, window }),
                _ => None,
            };
            let (output, slope, mass) = commands::frac_kernel(s, n, grid, &out)?;
            println!("s = {s}, N = {n}: tail slope {slope:.4} (expected {:.4}), mass {mass:.6}", -(n as f64 + 2.0 * s));
            print_output(&output);
        }
    }
    Ok(())
}

fn cmd_scan(a: ScanArgs) -> Result<()> {
    let family = match a.family.to_ascii_lowercase().as_str() {
        "ple1d" => {
            let (output, rows) = commands::scan_ple1d(a.eps, a.halvings, &a.out)?;
            println!("{}", commands::PLE1D_COLUMNS.join(","));
            for r in rows {
                println!("{}", r.iter().map(|x| format!("{x:.6e}")).collect::<Vec<_>>().join(","));
            }
            print_output(&output);
            return Ok(());
        }
        "pme" | "fde" => ScanFamily::Pme,
        "ple" => ScanFamily::Ple,
        other => return Err(CliError::Usage(format!("unknown scan family {other:?}; use pme, ple or ple1d"))),
    };
    let (output, rows) = commands::scan(&ScanQuery { family, n: a.n, eps0: a.eps, halvings: a.halvings }, &a.out)?;
    println!("eps,ln_C,ln_K,d,outer_mass_frac,clean");
    for r in &rows {
        println!("{:.6e},{:.6e},{:.6e},{:.6e},{:.6e},{}", r.eps, r.ln_c, r.ln_k, r.d, r.outer_mass_frac, r.is_clean());
    }
    print_output(&output);
    Ok(())
}

fn cmd_verify(suite: &str, ids: &[u8], verbose: bool, report: Option<&Path>, json: bool) -> Result<()> {
    let suite: Suite = suite.parse()?;
    let outcomes = commands::verify(suite, ids)?;
    if json {
        println!("{}", serde_json::to_string_pretty(&outcomes).expect("outcomes serialize"));
    } else {
        for o in &outcomes {
            println!("{}", if verbose { o.report() } else { o.line() });
        }
    }
    if let Some(path) = report {
        std::fs::write(path, commands::verify_csv(&outcomes)).map_err(|source| CliError::Io { path: path.into(), source })?;
    }
    let failed = outcomes.iter().filter(|o| !o.pass).count();
    if failed > 0 {
        return Err(CliError::CriteriaFailed { failed, total: outcomes.len() });
    }
    Ok(())
}

fn cmd_plot(csv: &Path, x: &str, y: &[String], axes: Axes, output: &Path) -> Result<()> {
    let text = std::fs::read_to_string(csv).map_err(|source| CliError::Io { path: csv.into(), source })?;
    let table = Table::parse(&text)?;
    let ys: Vec<&str> = y.iter().map(String::as_str).collect();
    let title = csv.file_name().map(|f| f.to_string_lossy().into_owned()).unwrap_or_default();
    let svg = line_plot(&table, x, &ys, axes, &title)?;
    std::fs::write(output, svg).map_err(|source| CliError::Io { path: output.into(), source })?;
    println!("wrote {}", output.display());
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            // clap uses 2 for usage errors; here 2 means a failed criterion
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    let result = match cli.command {
        Command::Exponents(a) => cmd_exponents(a),
        Command::Solve { config, out } => cmd_solve(&config, out.as_deref()),
        Command::Frac(c) => cmd_frac(c),
        Command::Scan(a) => cmd_scan(a),
        Command::Verify { suite, ids, verbose, report, json } => cmd_verify(&suite, &ids, verbose, report.as_deref(), json),
        Command::Plot { csv, x, y, logx, logy, output } => cmd_plot(&csv, &x, &y, Axes { log_x: logx, log_y: logy }, &output),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
