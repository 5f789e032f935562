//! Command-line front end for `polcorr`.
//!
//! Exit codes are a stable contract: 0 ok, 2 configuration, 3 I/O,
//! 4 event-file version, 5 oracle failure (1 for anything else).

use std::fs::File;
use std::io::{self, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use serde::Serialize;

use polcorr::analysis::{write_concurrence_csv, write_histogram_csv, Analyzer, FitMethod};
use polcorr::config::RunConfig;
use polcorr::entanglement::{factorization_grid, ThreeComptonConfig, ThreeComptonModel};
use polcorr::events::Classifier;
use polcorr::io::{fmt_sig, EventFileHeader, EventReader, EventWriter};
use polcorr::montecarlo::run_simulation;
use polcorr::physics::{Compton, ELECTRON_MASS_KEV};

pub mod verify;

pub const EXIT_OK: u8 = 0;
pub const EXIT_CONFIG: u8 = 2;
pub const EXIT_IO: u8 = 3;
pub const EXIT_VERSION: u8 = 4;
pub const EXIT_ORACLE: u8 = 5;

/// Largest allowed disagreement between the visibility evaluations.
pub const FACTORIZATION_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Parser)]
#[command(name = "polcorr", version, about = "Compton polarimetry of correlated photon pairs")]
pub struct Cli {
    #[command(flatten)]
    pub global: GlobalArgs,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args)]
pub struct GlobalArgs {
    /// Run configuration (JSON).
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Output file; stdout when omitted.
    #[arg(long, global = true)]
    pub output: Option<PathBuf>,
    /// Worker threads for simulation (default: available cores).
    #[arg(long, global = true)]
    pub workers: Option<usize>,
    /// Overrides the configured seed.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Overrides the configured fit method.
    #[arg(long, global = true, value_enum)]
    pub method: Option<MethodArg>,
    #[arg(long, global = true)]
    pub energy_kev: Option<f64>,
    /// Angular step of the curve grid, degrees.
    #[arg(long, global = true)]
    pub grid_deg: Option<f64>,
}

#[derive(Clone, Copy, Debug, clap::ValueEnum)]
pub enum MethodArg {
    Direct,
    Chsh,
}

impl From<MethodArg> for FitMethod {
    fn from(m: MethodArg) -> Self {
        match m {
            MethodArg::Direct => FitMethod::Direct,
            MethodArg::Chsh => FitMethod::Chsh,
        }
    }
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Export C_qft, C of the pure-state model and A versus θ as CSV.
    Curves,
    /// Compare the three visibility evaluations on a grid or one configuration.
    Factorize(FactorizeArgs),
    /// Generate an event file.
    Simulate,
    /// Extract the concurrence curve from an event file.
    Analyze(AnalyzeArgs),
    /// Run the analytic oracle suite.
    Verify,
}

#[derive(Debug, Args)]
pub struct FactorizeArgs {
    /// Pre-scattering angle, degrees.
    #[arg(long, requires_all = ["theta_a", "theta_b"])]
    pub theta: Option<f64>,
    #[arg(long, requires = "theta")]
    pub theta_a: Option<f64>,
    #[arg(long, requires = "theta")]
    pub theta_b: Option<f64>,
    /// Number of random grid configurations.
    #[arg(long, default_value_t = 100)]
    pub count: usize,
}

#[derive(Debug, Args)]
pub struct AnalyzeArgs {
    /// Event file written by `simulate`.
    pub events: PathBuf,
}

/// A failed command: message plus exit code.
#[derive(Debug)]
pub struct Failure {
    pub code: u8,
    pub error: anyhow::Error,
}

impl Failure {
    pub fn new(code: u8, error: impl Into<anyhow::Error>) -> Self {
        Self { code, error: error.into() }
    }
}

impl From<polcorr::Error> for Failure {
    fn from(e: polcorr::Error) -> Self {
        use polcorr::Error as E;
        let code = match &e {
            E::Config { .. } => EXIT_CONFIG,
            E::VersionMismatch { .. } => EXIT_VERSION,
            E::Io(_) | E::Output { .. } | E::Format { .. } | E::Json(_) => EXIT_IO,
            E::Quadrature { .. } => EXIT_ORACLE,
            _ => 1,
        };
        Failure::new(code, e)
    }
}

fn io_failure(path: &Path, e: io::Error) -> Failure {
    Failure::new(EXIT_IO, anyhow::anyhow!("{}: {e}", path.display()))
}

pub type CmdResult = Result<(), Failure>;

pub fn run(cli: Cli) -> CmdResult {
    match &cli.command {
        Command::Curves => cmd_curves(&cli.global),
        Command::Factorize(args) => cmd_factorize(&cli.global, args),
        Command::Simulate => cmd_simulate(&cli.global),
        Command::Analyze(args) => cmd_analyze(&cli.global, args),
        Command::Verify => cmd_verify(),
    }
}

fn echo<T: Serialize>(what: &str, value: &T) {
    eprintln!("# effective {what}: {}", serde_json::to_string(value).expect("serializable"));
}

fn open_output(path: Option<&Path>) -> Result<Box<dyn Write>, Failure> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(File::create(p).map_err(|e| io_failure(p, e))?)),
        None => Box::new(BufWriter::new(io::stdout().lock())),
    })
}

/// Loads `--config` (or defaults) and applies the command-line overrides.
pub fn load_config(global: &GlobalArgs) -> Result<RunConfig, Failure> {
    let mut cfg = match &global.config {
        Some(path) => {
            let text = std::fs::read_to_string(path).map_err(|e| {
                Failure::new(EXIT_CONFIG, anyhow::anyhow!("cannot read config {}: {e}", path.display()))
            })?;
            RunConfig::from_json_str(&text)?
        }
        None => RunConfig::default().resolved()?,
    };
    apply_overrides(&mut cfg, global)?;
    Ok(cfg)
}

fn apply_overrides(cfg: &mut RunConfig, global: &GlobalArgs) -> Result<(), Failure> {
    if let Some(seed) = global.seed {
        cfg.source.seed = seed;
    }
    if let Some(m) = global.method {
        cfg.analysis.method = m.into();
    }
    if let Some(e) = global.energy_kev {
        cfg.source.energy_kev = e;
        // binning follows the source energy unless given explicitly
        if global.config.is_none() {
            cfg.binning = None;
        }
    }
    if let Some(p) = &global.output {
        cfg.output.path = Some(p.clone());
    }
    *cfg = std::mem::take(cfg).resolved()?;
    Ok(())
}

fn workers(global: &GlobalArgs) -> usize {
    global
        .workers
        .unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |n| n.get()))
}

#[derive(Serialize)]
struct CurvesParams {
    energy_kev: f64,
    grid_deg: f64,
}

pub const CURVES_CSV_HEADER: &str = "theta_deg,c_qft,c_pure_model,analyzing_power";

/// Angles `0, step, …, 180` (180 always included).
pub fn curve_grid(step_deg: f64) -> Vec<f64> {
    let n = (180.0 / step_deg + 1e-9).floor() as usize;
    let mut grid: Vec<f64> = (0..=n).map(|i| i as f64 * step_deg).collect();
    if 180.0 - grid[n] > 1e-9 {
        grid.push(180.0);
    } else {
        grid[n] = 180.0;
    }
    grid
}

pub fn write_curves<W: Write>(compton: &Compton, energy: f64, step_deg: f64, mut w: W) -> io::Result<()> {
    writeln!(w, "{CURVES_CSV_HEADER}")?;
    for deg in curve_grid(step_deg) {
        let t = deg.to_radians();
        writeln!(
            w,
            "{},{},{},{}",
            fmt_sig(deg),
            fmt_sig(compton.concurrence_qft(energy, t)),
            fmt_sig(compton.concurrence_pure_model(energy, t)),
            fmt_sig(compton.analyzing_power(energy, t)),
        )?;
    }
    w.flush()
}

pub fn cmd_curves(global: &GlobalArgs) -> CmdResult {
    let params = CurvesParams {
        energy_kev: global.energy_kev.unwrap_or(ELECTRON_MASS_KEV),
        grid_deg: global.grid_deg.unwrap_or(1.0),
    };
    echo("parameters", &params);
    if !(params.energy_kev > 0.0 && params.energy_kev.is_finite()) {
        return Err(Failure::new(EXIT_CONFIG, anyhow::anyhow!("--energy-kev must be positive")));
    }
    if !(params.grid_deg > 0.0 && params.grid_deg <= 180.0) {
        return Err(Failure::new(EXIT_CONFIG, anyhow::anyhow!("--grid-deg must be in (0, 180]")));
    }
    let out = open_output(global.output.as_deref())?;
    write_curves(&Compton::STANDARD, params.energy_kev, params.grid_deg, out)
        .map_err(|e| Failure::new(EXIT_IO, e))
}

#[derive(Serialize)]
struct FactorizeParams {
    configs: Vec<[f64; 4]>,
}

pub const FACTORIZE_CSV_HEADER: &str =
    "energy_kev,theta_deg,theta_a_deg,theta_b_deg,nu_quadrature,nu_closed_form,nu_factorized,residual";

pub fn cmd_factorize(global: &GlobalArgs, args: &FactorizeArgs) -> CmdResult {
    let configs = match (args.theta, args.theta_a, args.theta_b) {
        (Some(t), Some(ta), Some(tb)) => {
            for (name, v) in [("--theta", t), ("--theta-a", ta), ("--theta-b", tb)] {
                if !(0.0..=180.0).contains(&v) {
                    return Err(Failure::new(EXIT_CONFIG, anyhow::anyhow!("{name} must be in [0, 180]")));
                }
            }
            let e = global.energy_kev.unwrap_or(ELECTRON_MASS_KEV);
            if !(e > 0.0 && e.is_finite()) {
                return Err(Failure::new(EXIT_CONFIG, anyhow::anyhow!("--energy-kev must be positive")));
            }
            vec![ThreeComptonConfig::new(e, t.to_radians(), ta.to_radians(), tb.to_radians())]
        }
        _ => factorization_grid(args.count, global.seed.unwrap_or(1)),
    };
    echo(
        "parameters",
        &FactorizeParams {
            configs: configs
                .iter()
                .map(|c| [c.e_in, c.theta.to_degrees(), c.theta_a.to_degrees(), c.theta_b.to_degrees()])
                .collect(),
        },
    );
    let model = ThreeComptonModel::default();
    let mut out = open_output(global.output.as_deref())?;
    let io_err = |e| Failure::new(EXIT_IO, e);
    writeln!(out, "{FACTORIZE_CSV_HEADER}").map_err(io_err)?;
    let mut worst = 0f64;
    for cfg in &configs {
        let r = model.factorization(cfg)?;
        let residual = r.max_residual();
        worst = worst.max(residual);
        writeln!(
            out,
            "{},{},{},{},{},{},{},{}",
            fmt_sig(cfg.e_in),
            fmt_sig(cfg.theta.to_degrees()),
            fmt_sig(cfg.theta_a.to_degrees()),
            fmt_sig(cfg.theta_b.to_degrees()),
            fmt_sig(r.nu_quadrature),
            fmt_sig(r.nu_closed_form),
            fmt_sig(r.nu_factorized),
            fmt_sig(residual),
        )
        .map_err(io_err)?;
    }
    out.flush().map_err(io_err)?;
    eprintln!("max residual {worst:.3e} over {} configurations", configs.len());
    if worst < FACTORIZATION_TOLERANCE {
        Ok(())
    } else {
        Err(Failure::new(
            EXIT_ORACLE,
            anyhow::anyhow!("max residual {worst:e} exceeds {FACTORIZATION_TOLERANCE:e}"),
        ))
    }
}

pub fn cmd_simulate(global: &GlobalArgs) -> CmdResult {
    let cfg = load_config(global)?;
    eprintln!("# effective config:\n{}", cfg.to_json_pretty());
    let path = cfg.output.path.clone();
    let out = open_output(path.as_deref())?;
    let header = EventFileHeader::new(&cfg);
    let mut writer = EventWriter::new(out, cfg.output.format, &header)?;
    let keep_lost = cfg.output.keep_lost;
    let summary = run_simulation(&cfg.source, &cfg.geometry, workers(global), |r| {
        if keep_lost || !r.lost {
            writer.write(r)?;
        }
        Ok(())
    })?;
    let written = writer.written();
    writer.finish().map_err(|e| Failure::new(EXIT_IO, e))?;
    eprintln!(
        "pairs {}  lost {} ({:.4})  written {}  sampler acceptance {:.4}",
        summary.pairs,
        summary.lost,
        if summary.pairs > 0 { summary.lost as f64 / summary.pairs as f64 } else { 0.0 },
        written,
        summary.sampler.acceptance(),
    );
    Ok(())
}

/// Histogram file for one class, next to the concurrence CSV.
pub fn histogram_path(csv: &Path, label: &str) -> PathBuf {
    let stem = csv.file_stem().map_or_else(|| "concurrence".into(), |s| s.to_string_lossy().into_owned());
    csv.with_file_name(format!("{stem}.hist.{label}.csv"))
}

/// Effective-config sidecar next to an analysis output.
pub fn config_sidecar_path(csv: &Path) -> PathBuf {
    let stem = csv.file_stem().map_or_else(|| "concurrence".into(), |s| s.to_string_lossy().into_owned());
    csv.with_file_name(format!("{stem}.config.json"))
}

pub fn cmd_analyze(global: &GlobalArgs, args: &AnalyzeArgs) -> CmdResult {
    let file = File::open(&args.events).map_err(|e| io_failure(&args.events, e))?;
    let reader = EventReader::new(BufReader::new(file))?;
    // the generating config is the default; --config replaces it
    let cfg = match &global.config {
        Some(_) => load_config(global)?,
        None => {
            let mut cfg = reader.header().effective_config.clone();
            apply_overrides(&mut cfg, global)?;
            cfg
        }
    };
    eprintln!("# effective config:\n{}", cfg.to_json_pretty());
    let classifier = Classifier::new(cfg.binning().clone(), cfg.source.energy_kev);
    let mut analyzer = Analyzer::new(classifier, cfg.geometry.clone());
    for rec in reader {
        analyzer.add(&rec?);
    }
    let method = cfg.analysis.method;
    let points = analyzer.concurrence_curve(method);

    let mut out = open_output(global.output.as_deref())?;
    write_concurrence_csv(&points, &mut out).map_err(|e| Failure::new(EXIT_IO, e))?;
    out.flush().map_err(|e| Failure::new(EXIT_IO, e))?;
    if let Some(csv) = &global.output {
        for (tag, acc) in analyzer.classes() {
            let path = histogram_path(csv, &tag.label());
            let f = File::create(&path).map_err(|e| io_failure(&path, e))?;
            let mut w = BufWriter::new(f);
            write_histogram_csv(&acc.histogram, &mut w)
                .and_then(|_| w.flush())
                .map_err(|e| io_failure(&path, e))?;
        }
        let path = config_sidecar_path(csv);
        std::fs::write(&path, cfg.to_json_pretty() + "\n").map_err(|e| io_failure(&path, e))?;
    }

    eprintln!("{} events read, {} rejected, method {:?}", analyzer.total, analyzer.rejected(), method);
    eprintln!("{:<12} {:>9} {:>10} {:>10} {:>8} {:>8} {:>10} {:>10}", "class", "events", "nu", "sigma_nu", "A_a", "A_b", "C", "sigma_C");
    for p in &points {
        eprintln!(
            "{:<12} {:>9} {:>10.5} {:>10.5} {:>8.4} {:>8.4} {:>10.5} {:>10.5}{}",
            p.class.label(),
            p.events,
            p.nu.nu,
            p.nu.sigma_nu,
            p.mean_a_a.value,
            p.mean_a_b.value,
            p.c,
            p.sigma_c,
            if p.low_statistics { "  (low statistics)" } else { "" }
        );
    }
    Ok(())
}

pub fn cmd_verify() -> CmdResult {
    echo("parameters", &serde_json::json!({ "electron_mass_kev": ELECTRON_MASS_KEV }));
    let results = verify::run_all();
    let mut failed = 0;
    for r in &results {
        println!("{} {:<28} {}", if r.pass { "PASS" } else { "FAIL" }, r.name, r.detail);
        failed += !r.pass as usize;
    }
    if failed == 0 {
        println!("all {} oracles passed", results.len());
        Ok(())
    } else {
        Err(Failure::new(EXIT_ORACLE, anyhow::anyhow!("{failed} of {} oracles failed", results.len())))
    }
}
