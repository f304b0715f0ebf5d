//! `chi-dlog`: experiment runner for chi-state preparation and the
//! two-register discrete logarithm algorithm.
//!
//! Exit codes: 0 success, 1 invariant failure, 2 invalid group,
//! 3 resource cap, 4 artifact mismatch.

use std::fs;
use std::io::{self, Write};
use std::path::PathBuf;
use std::process::ExitCode;
use std::sync::Arc;

use chi_dlog::chi::{prepare_chi, ChiHandle, PrepMode};
use chi_dlog::dlog::{resource_report, run_dlog, run_dlog_repeated, DlogMode, DlogResult};
use chi_dlog::qstate::DEFAULT_DIM_CAP;
use chi_dlog::verify;
use chi_dlog::{validate_group, Error, FourierPath, GroupElement, GroupSpec, SimOptions, VerifyLevel};
use clap::{Args, Parser, Subcommand, ValueEnum};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

const DIM_CAP_ENV: &str = "CHI_DLOG_DIM_CAP";

#[derive(Parser)]
#[command(name = "chi-dlog", version, about = "Chi-state discrete logarithm simulator")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Prepare a chi state and report the preparation statistics.
    PrepareChi(PrepareArgs),
    /// Compute discrete logarithms from a chi state.
    Dlog(DlogArgs),
    /// Run the invariant suites up to a group order.
    Verify(VerifyArgs),
    /// Print the resource comparison table.
    Resources(GroupArgs),
}

#[derive(Args, Clone)]
struct GroupArgs {
    /// Modulus of (Z/nZ)^x.
    #[arg(long)]
    n: u64,
    /// Generator of (Z/nZ)^x.
    #[arg(long)]
    g: u64,
}

#[derive(Args, Clone)]
struct SimArgs {
    /// Amplitude cap; overrides CHI_DLOG_DIM_CAP.
    #[arg(long)]
    dim_cap: Option<usize>,
    #[arg(long, value_enum, default_value_t = VerifyArg::Auto)]
    verify_level: VerifyArg,
    /// Use the FFT path for the Fourier transform instead of the dense matrix.
    #[arg(long)]
    fast_fourier: bool,
}

#[derive(Clone, Copy, ValueEnum)]
enum VerifyArg {
    Auto,
    Always,
    Never,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum ModeArg {
    Sampled,
    Exhaustive,
}

#[derive(Args)]
struct PrepareArgs {
    #[command(flatten)]
    group: GroupArgs,
    #[command(flatten)]
    sim: SimArgs,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, value_enum, default_value_t = ModeArg::Sampled)]
    mode: ModeArg,
    /// Independent preparations; trial i uses seed + i.
    #[arg(long, default_value_t = 1)]
    trials: u64,
    /// Write the chi dump of the first trial here.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Write the JSON-lines report here instead of standard output.
    #[arg(long)]
    report: Option<PathBuf>,
}

#[derive(Args)]
struct DlogArgs {
    #[command(flatten)]
    group: GroupArgs,
    #[command(flatten)]
    sim: SimArgs,
    /// Element whose logarithm is computed.
    #[arg(long, conflicts_with_all = ["sweep_all_x", "x_count"])]
    x: Option<u64>,
    /// Compute the logarithm of every group element.
    #[arg(long)]
    sweep_all_x: bool,
    /// Compute the logarithms of this many seeded random elements.
    #[arg(long, conflicts_with = "sweep_all_x")]
    x_count: Option<usize>,
    /// Chi dump to load.
    #[arg(long, conflicts_with = "prepare")]
    chi: Option<PathBuf>,
    /// Prepare the chi state in-process first.
    #[arg(long)]
    prepare: bool,
    /// Write the post-run chi state here.
    #[arg(long)]
    chi_out: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = ModeArg::Sampled)]
    mode: ModeArg,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Write the JSON-lines report here instead of standard output.
    #[arg(long)]
    report: Option<PathBuf>,
}

#[derive(Args)]
struct VerifyArgs {
    #[arg(long, default_value_t = 24)]
    max_m: u64,
    /// Also check this chi dump (needs --n and --g).
    #[arg(long, requires_all = ["n", "g"])]
    chi: Option<PathBuf>,
    #[arg(long)]
    n: Option<u64>,
    #[arg(long)]
    g: Option<u64>,
    #[command(flatten)]
    sim: SimArgs,
}

/// A failure with its exit code.
struct Failure {
    code: u8,
    message: String,
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let code = match e {
            Error::InvalidModulus(_)
            | Error::ModulusTooLarge(_)
            | Error::NotCoprime { .. }
            | Error::NotAGenerator { .. }
            | Error::InvalidGroupTable(_)
            | Error::NotInGroup(_) => 2,
            Error::CapExceeded { .. } | Error::OrderTooLarge { .. } | Error::RetryCapExceeded(_) => 3,
            Error::ArtifactMismatch(_) | Error::Parse(_) => 4,
            _ => 1,
        };
        Failure { code, message: e.to_string() }
    }
}

impl From<io::Error> for Failure {
    fn from(e: io::Error) -> Self {
        Failure { code: 4, message: e.to_string() }
    }
}

type CmdResult = Result<(), Failure>;

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::PrepareChi(args) => cmd_prepare_chi(args),
        Command::Dlog(args) => cmd_dlog(args),
        Command::Verify(args) => cmd_verify(args),
        Command::Resources(args) => cmd_resources(args),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}

fn sim_options(sim: &SimArgs) -> Result<SimOptions, Failure> {
    let dim_cap = match sim.dim_cap {
        Some(cap) => cap,
        None => match std::env::var(DIM_CAP_ENV) {
            Ok(v) => v.trim().parse().map_err(|_| Failure {
                code: 2,
                message: format!("{DIM_CAP_ENV}={v:?} is not a positive integer"),
            })?,
            Err(_) => DEFAULT_DIM_CAP,
        },
    };
    Ok(SimOptions {
        dim_cap,
        fourier: if sim.fast_fourier { FourierPath::Fast } else { FourierPath::Dense },
        verify: match sim.verify_level {
            VerifyArg::Auto => VerifyLevel::Auto,
            VerifyArg::Always => VerifyLevel::Always,
            VerifyArg::Never => VerifyLevel::Never,
        },
        ..SimOptions::default()
    })
}

fn load_group(args: &GroupArgs) -> Result<Arc<GroupSpec>, Failure> {
    Ok(Arc::new(validate_group(args.n, args.g, true)?))
}

/// Collects JSON lines and writes them in one go, so output order is fixed.
struct Lines(Vec<u8>);

impl Lines {
    fn push(&mut self, record: &impl Serialize) {
        serde_json::to_writer(&mut self.0, record).expect("records serialize");
        self.0.push(b'\n');
    }

    fn flush(self, path: Option<&PathBuf>) -> CmdResult {
        match path {
            Some(p) => fs::write(p, &self.0)?,
            None => io::stdout().write_all(&self.0)?,
        }
        Ok(())
    }
}

#[derive(Serialize)]
struct PrepRecord<'a> {
    n: u64,
    g: u64,
    m: u64,
    seed: u64,
    trial: u64,
    attempts: usize,
    observed_s: &'a [u64],
    success_s: u64,
    acceptance_probability: Option<f64>,
    fidelity: f64,
    version: &'static str,
}

fn cmd_prepare_chi(args: PrepareArgs) -> CmdResult {
    let spec = load_group(&args.group)?;
    let opts = sim_options(&args.sim)?;
    let mut lines = Lines(Vec::new());
    for trial in 0..args.trials {
        let seed = args.seed.wrapping_add(trial);
        let mode = match args.mode {
            ModeArg::Sampled => PrepMode::Sampled { seed },
            ModeArg::Exhaustive => PrepMode::Exhaustive,
        };
        let (chi, stats) = prepare_chi::<f64>(&spec, mode, &opts)?;
        let fidelity = chi.reference_fidelity()?;
        lines.push(&PrepRecord {
            n: args.group.n,
            g: spec.generator().label(),
            m: spec.order(),
            seed,
            trial,
            attempts: stats.attempts,
            observed_s: &stats.observed_s,
            success_s: stats.success_s,
            acceptance_probability: stats.acceptance_probability,
            fidelity,
            version: chi_dlog::VERSION,
        });
        if trial == 0 {
            if let Some(path) = &args.out {
                fs::write(path, chi.to_dump())?;
            }
        }
    }
    lines.flush(args.report.as_ref())
}

fn cmd_dlog(args: DlogArgs) -> CmdResult {
    let spec = load_group(&args.group)?;
    let opts = sim_options(&args.sim)?;

    let mut chi = if args.prepare {
        prepare_chi::<f64>(&spec, PrepMode::Sampled { seed: args.seed }, &opts)?.0
    } else if let Some(path) = &args.chi {
        let text = fs::read_to_string(path)?;
        let mut chi = ChiHandle::<f64>::from_dump(&spec, &text)?;
        let fidelity = chi.verify()?;
        if !chi.is_verified() || chi.power().value() != 1 % spec.order() {
            return Err(Failure {
                code: 1,
                message: format!(
                    "chi fidelity check failed: power {} fidelity {fidelity}",
                    chi.power().value()
                ),
            });
        }
        chi
    } else {
        return Err(Failure { code: 4, message: "no chi state: pass --chi <file> or --prepare".into() });
    };

    let xs: Vec<GroupElement> = if args.sweep_all_x {
        spec.elements().to_vec()
    } else if let Some(k) = args.x_count {
        let mut rng = ChaCha8Rng::seed_from_u64(args.seed);
        (0..k).map(|_| *spec.elements().choose(&mut rng).expect("groups are nonempty")).collect()
    } else if let Some(x) = args.x {
        vec![spec.check(GroupElement::new(x))?]
    } else {
        return Err(Failure { code: 2, message: "pass --x, --x-count or --sweep-all-x".into() });
    };

    let results: Vec<DlogResult> = match args.mode {
        ModeArg::Sampled => run_dlog_repeated(&spec, &mut chi, &xs, args.seed, &opts)?,
        ModeArg::Exhaustive => xs
            .iter()
            .map(|&x| run_dlog(&spec, &mut chi, x, DlogMode::Exhaustive, &opts))
            .collect::<Result<_, _>>()?,
    };

    let mut lines = Lines(Vec::new());
    for r in &results {
        let mut record = r.record(&spec);
        record.seed = Some(args.seed);
        lines.push(&record);
    }
    if let Some(path) = &args.chi_out {
        fs::write(path, chi.to_dump())?;
    }
    lines.flush(args.report.as_ref())
}

fn cmd_verify(args: VerifyArgs) -> CmdResult {
    let opts = sim_options(&args.sim)?;
    let mut reports = verify::run_all(args.max_m, &opts)?;
    if let (Some(path), Some(n), Some(g)) = (&args.chi, args.n, args.g) {
        let spec = Arc::new(validate_group(n, g, true)?);
        let text = fs::read_to_string(path)?;
        reports.push(verify::chi_dump_suite(&spec, &text));
    }
    let mut failed = Vec::new();
    for report in &reports {
        println!("{report}");
        for f in &report.failures {
            failed.push(format!("{}: {f}", report.name));
        }
    }
    if failed.is_empty() {
        Ok(())
    } else {
        for f in failed.iter().take(20) {
            eprintln!("{f}");
        }
        Err(Failure { code: 1, message: format!("{} invariant check(s) failed; first: {}", failed.len(), failed[0]) })
    }
}

fn cmd_resources(args: GroupArgs) -> CmdResult {
    let spec = load_group(&args)?;
    let report = resource_report(&spec, &SimOptions::default())?;
    println!("group: n={} g={} m={}", args.n, spec.generator().label(), spec.order());
    println!("{report}");
    Ok(())
}
