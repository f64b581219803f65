use std::io::Write;
use std::path::PathBuf;

use clap::{Args, ValueEnum};
use ising_relax::dichotomized::FERRO_BETA;
use ising_relax::estimate::{build_report, ApproximationReport, CSV_HEADER};
use ising_relax::model::greedy_coloring;
use ising_relax::oracle::exact_log_partition;
use ising_relax::relax::{solve_relaxation, SolverConfig};
use ising_relax::rounding::{rounded_gibbs_objective, RoundingKind};
use rayon::prelude::*;

use crate::{
    check_solution, io_err, parse_rounding, rounded_distribution, writer, CliError, CliResult,
    EnsembleArgs, EnsembleName, KindName, SolverArgs, EXACT_LIMIT,
};

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Csv,
    Json,
}

#[derive(Args)]
pub struct BenchArgs {
    #[command(flatten)]
    ensemble: EnsembleArgs,
    #[arg(long)]
    count: usize,
    #[arg(long, default_value_t = FERRO_BETA)]
    beta: f64,
    /// Comma-separated roundings; defaults to `gw` for ferro, `charikar` otherwise.
    #[arg(long, value_parser = parse_rounding, value_delimiter = ',')]
    rounding: Vec<RoundingKind>,
    /// Monte Carlo draws for `charikar`.
    #[arg(long, default_value_t = 10_000)]
    samples: usize,
    /// Instance `k` uses seed `seed + k` for generation and rounding.
    #[arg(long)]
    seed: u64,
    #[arg(long, value_enum, default_value_t = Format::Csv)]
    format: Format,
    #[command(flatten)]
    solver: SolverArgs,
    #[arg(short, long)]
    output: Option<PathBuf>,
}

struct InstanceRows {
    reports: Vec<ApproximationReport>,
    chi_upper: usize,
}

fn bench_one(
    args: &BenchArgs,
    roundings: &[RoundingKind],
    config: &SolverConfig,
    k: usize,
) -> CliResult<InstanceRows> {
    let seed = args.seed.wrapping_add(k as u64);
    let inst = args.ensemble.generate(seed)?;
    let id = format!("{:?}-{}-{k}", args.ensemble.ensemble, inst.n()).to_lowercase();
    let sol = solve_relaxation(&inst, config)?;
    check_solution(&sol, config, &id)?;
    let exact = if inst.n() <= EXACT_LIMIT {
        Some(exact_log_partition(&inst)?)
    } else {
        None
    };
    let reports = roundings
        .iter()
        .map(|&kind| {
            let dist = rounded_distribution(kind, &sol.m, args.beta)?;
            let est = rounded_gibbs_objective(&inst, &dist, args.samples, seed)?;
            Ok(build_report(
                &id,
                &inst,
                &sol,
                kind.name(),
                &est,
                exact,
                seed,
            )?)
        })
        .collect::<CliResult<Vec<_>>>()?;
    Ok(InstanceRows {
        reports,
        chi_upper: greedy_coloring(&inst).chi_upper,
    })
}

pub fn run(args: BenchArgs) -> CliResult<()> {
    if args.count == 0 {
        return Err(CliError::Usage("--count must be at least 1".into()));
    }
    let is_ferro = args.ensemble.ensemble == EnsembleName::Ferro;
    let roundings = if args.rounding.is_empty() {
        vec![if is_ferro {
            RoundingKind::Gw
        } else {
            RoundingKind::Charikar
        }]
    } else {
        args.rounding.clone()
    };
    // the nonnegativity constraints are only valid for ferromagnetic pair products
    let config = args
        .solver
        .config(is_ferro && args.ensemble.kind == KindName::Pair);

    let rows = (0..args.count)
        .into_par_iter()
        .map(|k| bench_one(&args, &roundings, &config, k))
        .collect::<CliResult<Vec<_>>>()?;

    let mut out = writer(args.output.as_deref())?;
    if args.format == Format::Csv {
        writeln!(out, "{CSV_HEADER}").map_err(io_err)?;
    }
    for r in rows.iter().flat_map(|r| &r.reports) {
        let line = match args.format {
            Format::Csv => r.to_csv_row(),
            Format::Json => r.to_json_line(),
        };
        writeln!(out, "{line}").map_err(io_err)?;
    }
    out.flush().map_err(io_err)?;

    let chi = rows.iter().map(|r| r.chi_upper).max().unwrap_or(0);
    eprintln!(
        "summary: ensemble {:?}, n {}, {} instances, greedy chi_upper <= {chi}",
        args.ensemble.ensemble, args.ensemble.n, args.count
    );
    for kind in &roundings {
        let of_kind = || {
            rows.iter()
                .flat_map(|r| &r.reports)
                .filter(|r| r.rounding == kind.name())
        };
        let worst = of_kind().min_by(|a, b| a.rounded_over_relax.total_cmp(&b.rounded_over_relax));
        let worst_exact = of_kind()
            .filter_map(|r| r.exact_over_relax)
            .min_by(f64::total_cmp);
        if let Some(w) = worst {
            eprint!(
                "  {:<8} worst rounded/relax {:.6} ({})",
                kind.name(),
                w.rounded_over_relax,
                w.instance_id
            );
            match worst_exact {
                Some(e) => eprintln!(", worst logZ/relax {e:.6}"),
                None => eprintln!(),
            }
        }
    }

    let violations: Vec<&ApproximationReport> = rows
        .iter()
        .flat_map(|r| &r.reports)
        .filter(|r| r.sandwich_holds() == Some(false))
        .collect();
    for r in &violations {
        eprintln!(
            "  violation {} {}: rounded {} logZ {:?} relax {}",
            r.instance_id, r.rounding, r.rounded_objective, r.exact_log_z, r.relaxation_objective
        );
    }
    if violations.is_empty() {
        Ok(())
    } else {
        Err(CliError::Numerical(format!(
            "{} rows violate rounded <= log Z <= relax",
            violations.len()
        )))
    }
}
