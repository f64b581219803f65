mod bench;

use std::fs;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use ising_relax::dichotomized::{beta_min, load_covariance, DichotomizedGaussianModel, FERRO_BETA};
use ising_relax::estimate::{build_report, CSV_HEADER};
use ising_relax::model::{generate, load_instance, store_instance, Ensemble, WeightDist};
use ising_relax::oracle::{exact_log_partition, gibbs_distribution, ENUMERATION_LIMIT};
use ising_relax::relax::{solve_relaxation, PseudoMomentSolution, SolverConfig};
use ising_relax::rounding::{
    charikar_distribution, round_gw, round_uniform, rounded_gibbs_objective, RoundedDistribution,
    RoundingKind,
};
use ising_relax::{Error, FunctionalKind, IsingInstance, SpinVector, SymMatrix};

/// Largest `n` for which reports include the exact log-partition function.
pub const EXACT_LIMIT: usize = 12;

#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Numerical(String),
}

impl CliError {
    fn code(&self) -> u8 {
        match self {
            CliError::Usage(_) => 1,
            CliError::Numerical(_) => 2,
        }
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        match e {
            Error::EigenNotConverged { .. }
            | Error::Factorization { .. }
            | Error::ProjectionStalled { .. }
            | Error::InconsistentReport(_) => CliError::Numerical(e.to_string()),
            _ => CliError::Usage(e.to_string()),
        }
    }
}

type CliResult<T> = std::result::Result<T, CliError>;

#[derive(Parser)]
#[command(
    name = "ising-relax",
    version,
    about = "Pseudo-moment relaxations, roundings and exact oracles for Ising models"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a random instance file.
    Gen(GenArgs),
    /// Exact log-partition function by enumeration.
    Exact(ExactArgs),
    /// Solve the degree-2 pseudo-moment relaxation.
    Relax(RelaxArgs),
    /// Round a relaxation solution and report its Gibbs objective.
    Round(RoundArgs),
    /// Sample ±1 vectors from a dichotomized Gaussian.
    MaxentSample(MaxentArgs),
    /// Generate, relax, round and compare a batch of instances.
    #[command(after_help = format!("CSV columns, in order:\n  {}", CSV_HEADER.replace(',', ", ")))]
    Bench(bench::BenchArgs),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum EnsembleName {
    Ferro,
    Spinglass,
    Er,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum WeightName {
    Pm1,
    Uniform,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum KindName {
    Pair,
    Sqdiff,
}

impl From<KindName> for FunctionalKind {
    fn from(k: KindName) -> Self {
        match k {
            KindName::Pair => FunctionalKind::PairProduct,
            KindName::Sqdiff => FunctionalKind::SquaredDifference,
        }
    }
}

#[derive(Args, Clone, Debug)]
pub struct EnsembleArgs {
    #[arg(long, value_enum)]
    pub ensemble: EnsembleName,
    #[arg(long)]
    pub n: usize,
    /// Edge probability for `er`.
    #[arg(long, default_value_t = 0.5)]
    pub p: f64,
    /// Weight distribution for `er`.
    #[arg(long, value_enum, default_value_t = WeightName::Pm1)]
    pub weights: WeightName,
    /// Lower end of uniform weights (`ferro`, `er --weights uniform`).
    #[arg(long, default_value_t = 0.5, allow_negative_numbers = true)]
    pub weight_lo: f64,
    #[arg(long, default_value_t = 1.5, allow_negative_numbers = true)]
    pub weight_hi: f64,
    #[arg(long, value_enum, default_value_t = KindName::Pair)]
    pub kind: KindName,
}

impl EnsembleArgs {
    pub fn ensemble(&self) -> Ensemble {
        match self.ensemble {
            EnsembleName::Ferro => Ensemble::FerromagneticUniform {
                lo: self.weight_lo,
                hi: self.weight_hi,
            },
            EnsembleName::Spinglass => Ensemble::SpinGlassPm1,
            EnsembleName::Er => Ensemble::ErdosRenyi {
                p: self.p,
                weights: match self.weights {
                    WeightName::Pm1 => WeightDist::PlusMinusOne,
                    WeightName::Uniform => WeightDist::Uniform {
                        lo: self.weight_lo,
                        hi: self.weight_hi,
                    },
                },
            },
        }
    }

    pub fn generate(&self, seed: u64) -> CliResult<IsingInstance> {
        Ok(generate(self.ensemble(), self.n, seed)?.with_kind(self.kind.into()))
    }
}

#[derive(Args, Clone, Debug)]
pub struct SolverArgs {
    /// Relative objective change treated as converged.
    #[arg(long)]
    pub tol_objective: Option<f64>,
    /// Allowed constraint violation of the returned matrix.
    #[arg(long)]
    pub tol_feasibility: Option<f64>,
    #[arg(long)]
    pub max_iterations: Option<usize>,
    #[arg(long)]
    pub dykstra_iterations: Option<usize>,
    /// Gradient step (default 1/‖J‖).
    #[arg(long)]
    pub step_size: Option<f64>,
}

impl SolverArgs {
    pub fn config(&self, ferro: bool) -> SolverConfig {
        let base = SolverConfig {
            ferro,
            ..Default::default()
        };
        SolverConfig {
            step_size: self.step_size.or(base.step_size),
            max_iterations: self.max_iterations.unwrap_or(base.max_iterations),
            objective_tolerance: self.tol_objective.unwrap_or(base.objective_tolerance),
            feasibility_tolerance: self.tol_feasibility.unwrap_or(base.feasibility_tolerance),
            dykstra_iterations: self.dykstra_iterations.unwrap_or(base.dykstra_iterations),
            ferro,
        }
    }
}

#[derive(Args)]
struct GenArgs {
    #[command(flatten)]
    ensemble: EnsembleArgs,
    #[arg(long)]
    seed: u64,
    #[arg(short, long)]
    output: Option<PathBuf>,
}

#[derive(Args)]
struct ExactArgs {
    instance: PathBuf,
    /// Also print the Gibbs table, one `x_0 .. x_{n-1} probability` line per state.
    #[arg(long)]
    table: bool,
    #[arg(short, long)]
    output: Option<PathBuf>,
}

#[derive(Args)]
struct RelaxArgs {
    instance: PathBuf,
    /// Add the nonnegativity constraints (requires J > 0).
    #[arg(long)]
    ferro: bool,
    #[command(flatten)]
    solver: SolverArgs,
    #[arg(short, long)]
    output: Option<PathBuf>,
}

#[derive(Args)]
struct RoundArgs {
    #[arg(long)]
    solution: PathBuf,
    #[arg(long)]
    instance: PathBuf,
    #[arg(long, value_parser = parse_rounding)]
    rounding: RoundingKind,
    #[arg(long, default_value_t = FERRO_BETA)]
    beta: f64,
    /// Monte Carlo draws for `charikar`.
    #[arg(long, default_value_t = 10_000)]
    samples: usize,
    #[arg(long)]
    seed: u64,
    #[arg(short, long)]
    output: Option<PathBuf>,
}

#[derive(Args)]
struct MaxentArgs {
    covariance: PathBuf,
    #[arg(long, default_value_t = beta_min())]
    beta: f64,
    #[arg(long)]
    samples: usize,
    #[arg(long)]
    seed: u64,
    #[arg(short, long)]
    output: Option<PathBuf>,
}

pub fn parse_rounding(s: &str) -> std::result::Result<RoundingKind, String> {
    s.parse::<RoundingKind>().map_err(|e| e.to_string())
}

fn read(path: &Path) -> CliResult<String> {
    fs::read_to_string(path).map_err(|e| CliError::Usage(format!("{}: {e}", path.display())))
}

pub fn writer(path: Option<&Path>) -> CliResult<Box<dyn Write>> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(
            fs::File::create(p).map_err(|e| CliError::Usage(format!("{}: {e}", p.display())))?,
        )),
        None => Box::new(BufWriter::new(io::stdout().lock())),
    })
}

pub fn io_err(e: io::Error) -> CliError {
    CliError::Usage(format!("write failed: {e}"))
}

fn load_instance_file(path: &Path) -> CliResult<IsingInstance> {
    load_instance(&read(path)?).map_err(|e| CliError::Usage(format!("{}: {e}", path.display())))
}

/// Exit-code policy for a finished solve: an unconverged run is only an error
/// when its residuals also fail the tolerance.
pub fn check_solution(
    sol: &PseudoMomentSolution,
    config: &SolverConfig,
    label: &str,
) -> CliResult<()> {
    if sol.converged {
        return Ok(());
    }
    if sol
        .residuals
        .passes(sol.ferro, config.feasibility_tolerance)
    {
        eprintln!(
            "warning: {label}: relaxation stopped after {} iterations without converging",
            sol.iterations
        );
        Ok(())
    } else {
        Err(CliError::Numerical(format!(
            "{label}: relaxation did not converge, residuals {}",
            sol.residuals
        )))
    }
}

pub fn rounded_distribution(
    kind: RoundingKind,
    m: &SymMatrix,
    beta: f64,
) -> CliResult<RoundedDistribution> {
    Ok(match kind {
        RoundingKind::Uniform => round_uniform(m.n())?,
        RoundingKind::Gw => round_gw(m, beta)?,
        RoundingKind::Charikar => charikar_distribution(m)?,
    })
}

fn spins_line(x: &SpinVector) -> String {
    x.values()
        .iter()
        .map(|v| v.to_string())
        .collect::<Vec<_>>()
        .join(" ")
}

fn cmd_gen(args: GenArgs) -> CliResult<()> {
    let inst = args.ensemble.generate(args.seed)?;
    let mut out = writer(args.output.as_deref())?;
    writeln!(out, "{}", store_instance(&inst)).map_err(io_err)?;
    out.flush().map_err(io_err)
}

fn cmd_exact(args: ExactArgs) -> CliResult<()> {
    let inst = load_instance_file(&args.instance)?;
    if inst.n() > ENUMERATION_LIMIT {
        return Err(CliError::Usage(format!(
            "n = {} exceeds the enumeration limit {ENUMERATION_LIMIT}",
            inst.n()
        )));
    }
    let mut out = writer(args.output.as_deref())?;
    writeln!(out, "{}", exact_log_partition(&inst)?).map_err(io_err)?;
    if args.table {
        let table = gibbs_distribution(&inst)?;
        for (index, p) in table.probabilities().iter().enumerate() {
            let x = SpinVector::from_index(index as u64, inst.n());
            writeln!(out, "{} {p}", spins_line(&x)).map_err(io_err)?;
        }
    }
    out.flush().map_err(io_err)
}

fn cmd_relax(args: RelaxArgs) -> CliResult<()> {
    let inst = load_instance_file(&args.instance)?;
    let config = args.solver.config(args.ferro);
    let sol = solve_relaxation(&inst, &config)?;
    check_solution(&sol, &config, &args.instance.display().to_string())?;
    let mut out = writer(args.output.as_deref())?;
    writeln!(out, "{}", sol.to_json()).map_err(io_err)?;
    out.flush().map_err(io_err)
}

fn cmd_round(args: RoundArgs) -> CliResult<()> {
    let inst = load_instance_file(&args.instance)?;
    let sol = PseudoMomentSolution::from_json(&read(&args.solution)?)
        .map_err(|e| CliError::Usage(format!("{}: {e}", args.solution.display())))?;
    let dist = rounded_distribution(args.rounding, &sol.m, args.beta)?;
    let est = rounded_gibbs_objective(&inst, &dist, args.samples, args.seed)?;
    let exact = if inst.n() <= EXACT_LIMIT {
        Some(exact_log_partition(&inst)?)
    } else {
        None
    };
    let id = args
        .instance
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default();
    let report = build_report(
        &id,
        &inst,
        &sol,
        args.rounding.name(),
        &est,
        exact,
        args.seed,
    )?;
    let mut out = writer(args.output.as_deref())?;
    writeln!(out, "{}", report.to_json_line()).map_err(io_err)?;
    out.flush().map_err(io_err)
}

fn cmd_maxent_sample(args: MaxentArgs) -> CliResult<()> {
    let sigma = load_covariance(&read(&args.covariance)?)
        .map_err(|e| CliError::Usage(format!("{}: {e}", args.covariance.display())))?;
    let model = DichotomizedGaussianModel::build(&sigma, args.beta)?;
    if model.below_entropy_hypothesis() {
        eprintln!(
            "warning: beta = {} is below 3^(-1/2); no entropy guarantee",
            args.beta
        );
    }
    let mut out = writer(args.output.as_deref())?;
    for x in model.stream(args.seed).take(args.samples) {
        writeln!(out, "{}", spins_line(&x)).map_err(io_err)?;
    }
    out.flush().map_err(io_err)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return match e.kind() {
                clap::error::ErrorKind::DisplayHelp | clap::error::ErrorKind::DisplayVersion => {
                    ExitCode::SUCCESS
                }
                _ => ExitCode::from(1),
            };
        }
    };
    let result = match cli.command {
        Command::Gen(a) => cmd_gen(a),
        Command::Exact(a) => cmd_exact(a),
        Command::Relax(a) => cmd_relax(a),
        Command::Round(a) => cmd_round(a),
        Command::MaxentSample(a) => cmd_maxent_sample(a),
        Command::Bench(a) => bench::run(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            match &e {
                CliError::Usage(m) => eprintln!("error: {m}"),
                CliError::Numerical(m) => eprintln!("numerical failure: {m}"),
            }
            ExitCode::from(e.code())
        }
    }
}
