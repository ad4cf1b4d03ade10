//! Command-line front end: `rank`, `dos`, `threshold`, `gen` and `oracle`.
//!
//! [`run`] parses arguments, executes one subcommand and returns the process
//! exit code:
//!
//! | code | meaning |
//! |------|---------|
//! | 0 | success |
//! | 1 | numerical failure |
//! | 2 | usage error |
//! | 3 | no spectral gap found (diagnostics written) |
//! | 4 | input or parse error |

use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use specrank::dos::DosCurve;
use specrank::gen::{self, MaternGrid, NoiseModel, SpectrumProfile, Synthetic};
use specrank::io::{
    read_dos, read_matrix_market, write_dos, write_matrix_market, write_report, DosFormat, InputDescriptor,
    LoadedMatrix, MethodParameters, ReportDocument,
};
use specrank::kpm::{chebyshev_moments, evaluate_dos, rank_kpm};
use specrank::lanczos::spectrum_bounds_psd;
use specrank::ldos::{collect_ritz, estimate_rank_lanczos, evaluate_dos_lanczos};
use specrank::oracle::{dense_eigs_with, exact_count, OracleOptions, DEFAULT_CAP};
use specrank::probe::generate_probes;
use specrank::threshold::{select_eps_tau, select_threshold_dos, ThresholdDiagnostics, DEFAULT_TOL};
use specrank::{
    DampingKind, Error, EstimatorKind, KpmOptions, LanczosOptions, ProbeConfig, ProbeDistribution, RankEstimate,
    Reorthogonalization, SymmetricOperator, ThresholdOptions, ThresholdResult, ThresholdStrategy,
};

pub const EXIT_OK: i32 = 0;
pub const EXIT_FAILURE: i32 = 1;
pub const EXIT_USAGE: i32 = 2;
pub const EXIT_NO_GAP: i32 = 3;
pub const EXIT_INPUT: i32 = 4;

#[derive(Debug, Parser)]
#[command(name = "specrank", version, about = "Numerical rank estimation from approximate spectral densities")]
struct Cli {
    /// Worker threads for the probe loop; defaults to all cores.
    #[arg(long, global = true, env = "SPECRANK_THREADS")]
    threads: Option<usize>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Estimate the numerical rank of a symmetric PSD matrix.
    Rank(RankArgs),
    /// Sample the spectral density of a matrix.
    Dos(DosArgs),
    /// Select the rank threshold from a density curve.
    Threshold(ThresholdArgs),
    /// Write a synthetic test matrix and its ground truth.
    Gen(GenArgs),
    /// Exact eigenvalue count of a small dense matrix.
    Oracle(OracleArgs),
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum Method {
    Kpm,
    Lanczos,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum Damping {
    Jackson,
    Sigma,
    None,
}

impl From<Damping> for DampingKind {
    fn from(d: Damping) -> Self {
        match d {
            Damping::Jackson => DampingKind::Jackson,
            Damping::Sigma => DampingKind::LanczosSigma,
            Damping::None => DampingKind::None,
        }
    }
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum Strategy {
    Deriv,
    Valley,
    Tau,
}

impl From<Strategy> for ThresholdStrategy {
    fn from(s: Strategy) -> Self {
        match s {
            Strategy::Deriv => ThresholdStrategy::Derivative,
            Strategy::Valley => ThresholdStrategy::Valley,
            Strategy::Tau => ThresholdStrategy::Tau,
        }
    }
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum Distribution {
    Gaussian,
    Rademacher,
}

impl From<Distribution> for ProbeDistribution {
    fn from(d: Distribution) -> Self {
        match d {
            Distribution::Gaussian => ProbeDistribution::Gaussian,
            Distribution::Rademacher => ProbeDistribution::Rademacher,
        }
    }
}

#[derive(Debug, Args)]
struct SpectralArgs {
    /// Matrix Market input.
    #[arg(long = "in")]
    input: PathBuf,
    #[arg(long, value_enum, default_value = "lanczos")]
    method: Method,
    /// Chebyshev degree (KPM) or Lanczos steps.
    #[arg(short = 'm', long = "degree", default_value_t = 50)]
    degree: usize,
    /// Number of probe vectors.
    #[arg(long, default_value_t = 30)]
    nv: usize,
    /// KPM damping kernel.
    #[arg(long, value_enum, default_value = "jackson")]
    damping: Damping,
    #[arg(long, value_enum, default_value = "gaussian")]
    distribution: Distribution,
    #[arg(long, default_value_t = 42)]
    seed: u64,
    /// Points on the density grid.
    #[arg(long, default_value_t = 400)]
    grid: usize,
    /// Gaussian width of the Lanczos density; defaults to a width from the Ritz range.
    #[arg(long)]
    blur: Option<f64>,
}

impl SpectralArgs {
    fn probe_config(&self) -> ProbeConfig {
        ProbeConfig::new(self.nv, self.distribution.into(), self.seed)
    }
}

#[derive(Debug, Args)]
struct RankArgs {
    #[command(flatten)]
    spectral: SpectralArgs,
    /// Use this threshold instead of selecting one.
    #[arg(long)]
    eps: Option<f64>,
    #[arg(long, value_enum, default_value = "valley")]
    strategy: Strategy,
    /// Slope tolerance of the threshold rules.
    #[arg(long, default_value_t = DEFAULT_TOL, allow_negative_numbers = true)]
    tol: f64,
    /// Write a JSON report here.
    #[arg(long)]
    report: Option<PathBuf>,
    /// Include the density curve in the report.
    #[arg(long)]
    report_dos: bool,
}

#[derive(Debug, Args)]
struct DosArgs {
    #[command(flatten)]
    spectral: SpectralArgs,
    /// Output file; `.json` keeps the metadata, anything else is CSV.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Debug, Args)]
struct ThresholdArgs {
    /// Density curve written by `dos`.
    #[arg(long)]
    dos: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "valley")]
    strategy: Strategy,
    #[arg(long, default_value_t = DEFAULT_TOL, allow_negative_numbers = true)]
    tol: f64,
    /// Matrix for the tau rule, which works on Lanczos data.
    #[arg(long = "in")]
    input: Option<PathBuf>,
    /// Lanczos steps for the tau rule.
    #[arg(short = 'm', long = "degree", default_value_t = 50)]
    degree: usize,
    #[arg(long, default_value_t = 30)]
    nv: usize,
    #[arg(long, default_value_t = 42)]
    seed: u64,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum Family {
    Hadamard,
    Matern,
    Planted,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum Noise {
    Gram,
    Symmetric,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum Profile {
    UniformLowRank,
    Clustered,
    QuadraticDecay,
}

#[derive(Debug, Args)]
struct GenArgs {
    #[arg(long, value_enum)]
    family: Family,
    /// Matrix dimension (1D grid size for Matérn).
    #[arg(long)]
    n: Option<usize>,
    /// Rank of the signal (Hadamard) or relevant eigenvalue count (planted profiles).
    #[arg(long)]
    k: Option<usize>,
    /// Noise level (Hadamard).
    #[arg(long, default_value_t = 0.001)]
    sigma: f64,
    #[arg(long, value_enum, default_value = "gram")]
    noise: Noise,
    #[arg(long, default_value_t = 42)]
    seed: u64,
    /// 2D Matérn grid rows; with `--q`, selects the 2D grid.
    #[arg(long)]
    p: Option<usize>,
    /// 2D Matérn grid columns.
    #[arg(long)]
    q: Option<usize>,
    /// Matérn smoothness: 0.5, 1.5 or 2.5.
    #[arg(long, default_value_t = 0.5)]
    nu: f64,
    /// Matérn length scale; defaults to 0.05 in 1D and 0.1 in 2D.
    #[arg(long)]
    length_scale: Option<f64>,
    /// Planted spectrum, whitespace-separated values.
    #[arg(long)]
    eigenvalues: Option<PathBuf>,
    /// Planted spectrum shape, when no eigenvalue file is given.
    #[arg(long, value_enum)]
    profile: Option<Profile>,
    /// Keep a planted spectrum diagonal instead of mixing it with reflections.
    #[arg(long)]
    no_rotate: bool,
    /// Matrix Market output; the ground truth goes next to it as `.json`.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Debug, Args)]
struct OracleArgs {
    /// Matrix Market input.
    #[arg(long = "in")]
    input: PathBuf,
    /// Lower end of the counting interval (exclusive).
    #[arg(long, allow_negative_numbers = true)]
    a: Option<f64>,
    /// Upper end (inclusive); defaults to above the largest eigenvalue.
    #[arg(long, allow_negative_numbers = true)]
    b: Option<f64>,
    /// Largest dimension the dense solver accepts.
    #[arg(long, default_value_t = DEFAULT_CAP)]
    cap: usize,
}

/// A failure with the exit code it maps to.
#[derive(Debug)]
struct Failure {
    code: i32,
    message: String,
}

impl Failure {
    fn usage(message: impl Into<String>) -> Self {
        Self { code: EXIT_USAGE, message: message.into() }
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let code = match &e {
            Error::Parse { .. } | Error::Io(_) | Error::Json(_) | Error::DimensionMismatch { .. } => EXIT_INPUT,
            Error::NoGap { .. } => EXIT_NO_GAP,
            Error::InvalidConfig(_)
            | Error::InvalidInterval { .. }
            | Error::InvalidWindow { .. }
            | Error::KrylovTooLarge { .. }
            | Error::CapExceeded { .. } => EXIT_USAGE,
            _ => EXIT_FAILURE,
        };
        Self { code, message: e.to_string() }
    }
}

type Outcome = std::result::Result<(), Failure>;

/// Runs the command line `args` (program name first) and returns the exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
        }
    };
    let result = match cli.threads {
        Some(0) => Err(Failure::usage("--threads must be at least 1")),
        Some(n) => match rayon::ThreadPoolBuilder::new().num_threads(n).build() {
            Ok(pool) => pool.install(|| dispatch(cli.command)),
            Err(e) => Err(Failure { code: EXIT_FAILURE, message: format!("cannot start thread pool: {e}") }),
        },
        None => dispatch(cli.command),
    };
    match result {
        Ok(()) => EXIT_OK,
        Err(f) => {
            eprintln!("error: {}", f.message);
            f.code
        }
    }
}

fn dispatch(command: Command) -> Outcome {
    match command {
        Command::Rank(a) => rank(a),
        Command::Dos(a) => dos(a),
        Command::Threshold(a) => threshold(a),
        Command::Gen(a) => generate(a),
        Command::Oracle(a) => oracle(a),
    }
}

fn load(path: &Path) -> std::result::Result<LoadedMatrix, Failure> {
    let loaded = read_matrix_market(path)
        .map_err(|e| Failure { code: EXIT_INPUT, message: format!("{}: {e}", path.display()) })?;
    for w in &loaded.warnings {
        eprintln!("warning: {w}");
    }
    Ok(loaded)
}

fn rank(args: RankArgs) -> Outcome {
    let s = &args.spectral;
    let strategy: ThresholdStrategy = args.strategy.into();
    if matches!((s.method, strategy), (Method::Kpm, ThresholdStrategy::Tau)) {
        return Err(Failure::usage("the tau rule needs Lanczos data; use --method lanczos"));
    }
    let loaded = load(&s.input)?;
    let op = &loaded.operator;
    let probes = generate_probes(op.dim(), &s.probe_config())?;
    let threshold = ThresholdOptions { strategy, tol: args.tol };

    let (estimate, damping) = match s.method {
        Method::Kpm => {
            let opts = KpmOptions {
                degree: s.degree,
                damping: s.damping.into(),
                grid_points: s.grid,
                threshold,
                ..KpmOptions::default()
            };
            (rank_kpm(op, &probes, &opts, args.eps), Some(opts.damping))
        }
        Method::Lanczos => {
            let opts = LanczosOptions {
                steps: s.degree,
                grid_points: s.grid,
                blur: s.blur,
                threshold,
                ..LanczosOptions::default()
            };
            (estimate_rank_lanczos(op, &probes, &opts, args.eps), None)
        }
    };
    let estimate = match estimate {
        Ok(e) => e,
        Err(Error::NoGap { reason, diagnostics, dos }) => {
            write_no_gap(&reason, &diagnostics, dos.as_deref(), args.report.as_deref())?;
            return Err(Failure { code: EXIT_NO_GAP, message: format!("no spectral gap detected: {reason}") });
        }
        Err(e) => return Err(e.into()),
    };

    print_estimate(&estimate);
    if let Some(path) = &args.report {
        let params = MethodParameters {
            method: estimate.method,
            degree: estimate.degree,
            nv: estimate.nv,
            distribution: s.distribution.into(),
            damping,
            seed: s.seed,
            strategy,
            tol: args.tol,
        };
        let input = InputDescriptor::new(s.input.display().to_string(), op, loaded.warnings.clone());
        write_report(&ReportDocument::new(input, params, &estimate, args.report_dos), path)?;
        println!("report: {}", path.display());
    }
    Ok(())
}

fn print_estimate(e: &RankEstimate) {
    let method = match e.method {
        EstimatorKind::Kpm => "kpm",
        EstimatorKind::Lanczos => "lanczos",
    };
    let rule = e.threshold.as_ref().map_or("manual".to_string(), |t| format!("{:?}", t.method));
    let t = e.timings;
    println!("method: {method} (degree {}, {} probes, n = {})", e.degree, e.nv, e.n);
    println!("eps: {} ({rule})", e.eps);
    println!("mean rank: {:.4}", e.mean);
    println!("std error: {:.4}", e.series.std_error());
    println!(
        "time: bounds {:.3}s, spectral {:.3}s, threshold {:.3}s, count {:.3}s, total {:.3}s",
        t.bounds,
        t.spectral,
        t.threshold,
        t.count,
        t.total()
    );
}

#[derive(Serialize)]
struct NoGapReport<'a> {
    error: &'a str,
    diagnostics: &'a ThresholdDiagnostics,
    dos: Option<&'a DosCurve>,
}

fn write_no_gap(
    reason: &str,
    diagnostics: &ThresholdDiagnostics,
    dos: Option<&DosCurve>,
    path: Option<&Path>,
) -> Outcome {
    let doc = NoGapReport { error: reason, diagnostics, dos };
    let json = serde_json::to_string_pretty(&doc).map_err(Error::from)?;
    match path {
        Some(p) => {
            std::fs::write(p, json + "\n").map_err(Error::from)?;
            eprintln!("diagnostics: {}", p.display());
        }
        None => {
            let mut err = std::io::stderr().lock();
            let _ = writeln!(err, "{json}");
        }
    }
    Ok(())
}

fn dos(args: DosArgs) -> Outcome {
    let s = &args.spectral;
    let loaded = load(&s.input)?;
    let op = &loaded.operator;
    let probes = generate_probes(op.dim(), &s.probe_config())?;
    let curve = match s.method {
        Method::Kpm => {
            let defaults = KpmOptions::default();
            let window = spectrum_bounds_psd(op, defaults.bounds_steps, defaults.safety)?;
            let moments = chebyshev_moments(op, window, s.degree, &probes)?;
            evaluate_dos(&moments, s.damping.into(), s.grid)?
        }
        Method::Lanczos => {
            let data = collect_ritz(op, s.degree.min(op.dim()), &probes, Reorthogonalization::Auto)?;
            evaluate_dos_lanczos(&data, s.grid, s.blur)?
        }
    };
    write_dos(&curve, &args.out, DosFormat::from_path(&args.out))?;
    println!(
        "dos: {} points on [{}, {}], integral {:.6}",
        curve.len(),
        curve.t[0],
        curve.t[curve.len() - 1],
        curve.integral()
    );
    println!("written: {}", args.out.display());
    Ok(())
}

fn threshold(args: ThresholdArgs) -> Outcome {
    let strategy: ThresholdStrategy = args.strategy.into();
    let result = match strategy {
        ThresholdStrategy::Tau => {
            let path =
                args.input.as_ref().ok_or_else(|| Failure::usage("--strategy tau needs --in with the matrix"))?;
            let loaded = load(path)?;
            let op = &loaded.operator;
            let probes = generate_probes(op.dim(), &ProbeConfig::new(args.nv, ProbeDistribution::Gaussian, args.seed))?;
            let data = collect_ritz(op, args.degree.min(op.dim()), &probes, Reorthogonalization::Auto)?;
            select_eps_tau(&data)
        }
        _ => {
            let path = args.dos.as_ref().ok_or_else(|| Failure::usage("--dos is required for this strategy"))?;
            let curve = read_dos(path)
                .map_err(|e| Failure { code: EXIT_INPUT, message: format!("{}: {e}", path.display()) })?;
            select_threshold_dos(&curve, &ThresholdOptions { strategy, tol: args.tol })
        }
    };
    match result {
        Ok(r) => {
            print_threshold(&r);
            Ok(())
        }
        Err(Error::NoGap { reason, diagnostics, dos }) => {
            write_no_gap(&reason, &diagnostics, dos.as_deref(), None)?;
            Err(Failure { code: EXIT_NO_GAP, message: format!("no spectral gap detected: {reason}") })
        }
        Err(e) => Err(e.into()),
    }
}

fn print_threshold(r: &ThresholdResult) {
    println!("eps: {} ({:?})", r.eps, r.method);
    if let Some(i) = r.diagnostics.grid_index {
        println!("grid index: {i}");
    }
    if let Some((lo, hi)) = r.diagnostics.valley {
        println!("valley: [{lo}, {hi}]");
    }
}

fn read_values(path: &Path) -> std::result::Result<Vec<f64>, Failure> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Failure { code: EXIT_INPUT, message: format!("{}: {e}", path.display()) })?;
    text.split_whitespace()
        .map(|tok| {
            tok.parse::<f64>()
                .map_err(|_| Failure { code: EXIT_INPUT, message: format!("{}: bad value '{tok}'", path.display()) })
        })
        .collect()
}

fn generate(args: GenArgs) -> Outcome {
    let synth: Synthetic = match args.family {
        Family::Hadamard => {
            let noise = match args.noise {
                Noise::Gram => NoiseModel::Gram,
                Noise::Symmetric => NoiseModel::Symmetric,
            };
            gen::hadamard_lowrank(args.n.unwrap_or(2048), args.k.unwrap_or(128), args.sigma, args.seed, noise)?
        }
        Family::Matern => {
            let grid = match (args.p, args.q) {
                (Some(p), Some(q)) => MaternGrid::TwoD(p, q),
                (None, None) => MaternGrid::OneD(args.n.unwrap_or(2048)),
                _ => return Err(Failure::usage("a 2D Matérn grid needs both --p and --q")),
            };
            let ls = args.length_scale.unwrap_or_else(|| grid.default_length_scale());
            gen::matern_covariance(grid, args.nu, ls)?
        }
        Family::Planted => {
            let eigs = match (&args.eigenvalues, args.profile) {
                (Some(path), None) => read_values(path)?,
                (None, Some(profile)) => {
                    let profile = match profile {
                        Profile::UniformLowRank => SpectrumProfile::UniformLowRank,
                        Profile::Clustered => SpectrumProfile::Clustered,
                        Profile::QuadraticDecay => SpectrumProfile::QuadraticDecay,
                    };
                    let n = args.n.unwrap_or(1000);
                    let k = args.k.unwrap_or(n / 10);
                    if k > n {
                        return Err(Failure::usage(format!("--k {k} exceeds --n {n}")));
                    }
                    gen::profile_eigenvalues(profile, n, k, args.seed)
                }
                _ => return Err(Failure::usage("planted spectra need exactly one of --eigenvalues and --profile")),
            };
            gen::planted_spectrum(eigs, !args.no_rotate, args.seed)?
        }
    };
    write_matrix_market(&args.out, &synth.operator)?;
    let sidecar = args.out.with_extension("json");
    std::fs::write(&sidecar, serde_json::to_string_pretty(&synth.truth).map_err(Error::from)? + "\n")
        .map_err(Error::from)?;

    let t = &synth.truth;
    println!("n: {}", t.n);
    if let Some(r) = t.rank {
        println!("rank: {r}");
    }
    if let Some(snr) = t.snr_db {
        println!("snr: {snr:.2} dB");
    }
    println!("written: {} ({})", args.out.display(), sidecar.display());
    Ok(())
}

fn oracle(args: OracleArgs) -> Outcome {
    let loaded = load(&args.input)?;
    let n = loaded.operator.dim();
    if n > args.cap {
        return Err(Error::CapExceeded { n, cap: args.cap }.into());
    }
    let out =
        dense_eigs_with(&loaded.operator.to_dense(), &OracleOptions { cap: args.cap, ..OracleOptions::default() })?;
    let spec = out.spectrum;
    println!("n: {n}");
    println!("eigenvalues: [{}, {}]", spec.min(), spec.max());
    if let Some(res) = &out.residuals {
        let worst = res.iter().fold(0.0f64, |m, r| m.max(r.residual));
        println!("max verified residual: {worst:e}");
    }
    if args.a.is_some() || args.b.is_some() {
        let a = args.a.unwrap_or(spec.min() - 1.0);
        let b = args.b.unwrap_or(spec.max() + 1.0);
        println!("count: {}", exact_count(&spec, a, b)?);
    }
    Ok(())
}
