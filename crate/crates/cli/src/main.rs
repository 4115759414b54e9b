//! `nil`: command-line front-end for the nonlinear neutral inclusion library.
//!
//! Data goes to standard output (or `--output`), diagnostics to standard
//! error. Exit codes: 0 success, 1 golden-diff mismatch, 2 argument/domain
//! errors, 3 solver non-convergence. Identical invocations produce
//! byte-identical output.

mod config;

use clap::{Args, Parser, Subcommand, ValueEnum};
use config::FileConfig;
use nil_core::report::{format_float, generate_table_with_threads, table_dataset};
use nil_core::{
    build_field, effective_conductivity, golden_diff, interface_fn, sensitivity, Dataset, Dim,
    Problem, SolverConfig, SweepAxis, SweepQuantity, SweepSpec, TableSpec,
};
use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

#[derive(Parser)]
#[command(
    name = "nil",
    version,
    about = "Effective conductivity of nonlinear neutral coated inclusions",
    after_help = "Environment:\n  NIL_NUM_THREADS  positive integer capping internal parallelism (default 1)"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Solve one configuration: interface root, effective conductivity,
    /// branch and Hashin-Shtrikman diagnostic
    Solve {
        #[command(flatten)]
        problem: ProblemArgs,
        #[command(flatten)]
        common: CommonArgs,
    },
    /// Build the field for a concrete inclusion; emit coefficients,
    /// interface residuals, harmonicity and the energy report
    Field {
        #[command(flatten)]
        problem: ProblemArgs,
        #[command(flatten)]
        common: CommonArgs,
        /// Exterior radius of the inclusion
        #[arg(long)]
        re: Option<f64>,
        /// Number of quasi-random points for the harmonicity check
        #[arg(long)]
        points: Option<usize>,
        /// Gauss-Legendre order for the energy quadrature
        #[arg(long)]
        quad_order: Option<usize>,
    },
    /// Analytic sensitivities of x0 and sigma* in p and theta1, validated
    /// against central finite differences
    Sens {
        #[command(flatten)]
        problem: ProblemArgs,
        #[command(flatten)]
        common: CommonArgs,
        /// Relative finite-difference step
        #[arg(long)]
        fd_step: Option<f64>,
    },
    /// Regenerate a reference table (1-6) as CSV
    Table {
        /// Table id, 1-6
        #[arg(long)]
        id: Option<u8>,
        #[command(flatten)]
        common: CommonArgs,
    },
    /// Regenerate a reference table and diff it against the shipped golden
    /// values; exits 1 when any cell mismatches at printed precision
    Verify {
        /// Table id, 1-6
        #[arg(long)]
        id: Option<u8>,
        #[command(flatten)]
        common: CommonArgs,
    },
    /// Sweep p or theta1 over an inclusive linear grid
    Sweep {
        #[command(flatten)]
        problem: ProblemArgs,
        #[command(flatten)]
        common: CommonArgs,
        /// Swept parameter: theta1 or p
        #[arg(long)]
        axis: Option<String>,
        /// Start of the swept range
        #[arg(long)]
        from: Option<f64>,
        /// End of the swept range (inclusive)
        #[arg(long)]
        to: Option<f64>,
        /// Number of grid points
        #[arg(long)]
        n: Option<usize>,
        /// Comma-separated quantities: root, sigma, dx0_dp, dsigma_dp,
        /// dx0_dtheta, dsigma_dtheta
        #[arg(long, value_delimiter = ',')]
        quantities: Option<Vec<String>>,
    },
}

#[derive(Args)]
struct ProblemArgs {
    /// Core conductivity coefficient (> 0)
    #[arg(long)]
    sigma1: Option<f64>,
    /// Coating conductivity (> 0)
    #[arg(long)]
    sigma2: Option<f64>,
    /// Power-law exponent (> 1)
    #[arg(long)]
    p: Option<f64>,
    /// Applied field magnitude (> 0)
    #[arg(long)]
    e: Option<f64>,
    /// Core volume (3D) or area (2D) fraction, in [0, 1]
    #[arg(long)]
    theta1: Option<f64>,
    /// Spatial dimension, 2 or 3
    #[arg(long)]
    dim: Option<u32>,
}

#[derive(Args)]
struct CommonArgs {
    /// Optional flat key=value config file; flags override it
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output path (default: standard output)
    #[arg(long, short = 'o')]
    output: Option<PathBuf>,
    /// Output format
    #[arg(long, value_enum)]
    format: Option<Format>,
    /// Residual tolerance override for the root solver
    #[arg(long)]
    abs_tol: Option<f64>,
    /// Bracket-width tolerance override for the root solver
    #[arg(long)]
    x_tol: Option<f64>,
    /// Iteration budget override for the root solver
    #[arg(long)]
    max_iter: Option<usize>,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Csv,
    Jsonl,
}

struct Failure {
    code: u8,
    message: String,
}

impl Failure {
    fn usage(message: impl Into<String>) -> Failure {
        Failure {
            code: 2,
            message: message.into(),
        }
    }
}

impl From<nil_core::Error> for Failure {
    fn from(err: nil_core::Error) -> Failure {
        let code = match &err {
            nil_core::Error::Convergence { .. } => 3,
            nil_core::Error::Cell { source, .. } => {
                if matches!(source.as_ref(), nil_core::Error::Convergence { .. }) {
                    3
                } else {
                    2
                }
            }
            _ => 2,
        };
        Failure {
            code,
            message: err.to_string(),
        }
    }
}

impl From<String> for Failure {
    fn from(message: String) -> Failure {
        Failure { code: 2, message }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli.command) {
        Ok(code) => code,
        Err(f) => {
            eprintln!("error: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}

fn threads_from_env() -> Result<usize, Failure> {
    match std::env::var("NIL_NUM_THREADS") {
        Ok(v) => v
            .trim()
            .parse::<usize>()
            .ok()
            .filter(|&n| n >= 1)
            .ok_or_else(|| {
                Failure::usage(format!(
                    "NIL_NUM_THREADS must be a positive integer (got {v:?})"
                ))
            }),
        Err(_) => Ok(1),
    }
}

/// One emitted record: named fields, kept in declaration order.
enum Value {
    Num(f64),
    Text(&'static str),
    Missing,
}

struct Record(Vec<(&'static str, Value)>);

impl Record {
    fn to_csv(&self) -> String {
        let header: Vec<&str> = self.0.iter().map(|(k, _)| *k).collect();
        let row: Vec<String> = self
            .0
            .iter()
            .map(|(_, v)| match v {
                Value::Num(x) => format_float(*x),
                Value::Text(s) => (*s).to_string(),
                Value::Missing => String::new(),
            })
            .collect();
        format!("{}\n{}\n", header.join(","), row.join(","))
    }

    fn to_jsonl(&self) -> String {
        let fields: Vec<String> = self
            .0
            .iter()
            .map(|(k, v)| match v {
                Value::Num(x) => format!("\"{k}\":{}", format_float(*x)),
                Value::Text(s) => format!("\"{k}\":\"{s}\""),
                Value::Missing => format!("\"{k}\":null"),
            })
            .collect();
        format!("{{{}}}\n", fields.join(","))
    }
}

fn dataset_to_jsonl(ds: &Dataset) -> String {
    let mut out = String::new();
    for row in &ds.rows {
        let fields: Vec<String> = ds
            .columns
            .iter()
            .zip(row)
            .map(|(k, v)| format!("\"{k}\":{}", format_float(*v)))
            .collect();
        out.push_str(&format!("{{{}}}\n", fields.join(",")));
    }
    out
}

fn emit(text: &str, output: Option<&PathBuf>) -> Result<(), Failure> {
    match output {
        Some(path) => std::fs::write(path, text)
            .map_err(|e| Failure::usage(format!("cannot write {}: {e}", path.display()))),
        None => std::io::stdout()
            .write_all(text.as_bytes())
            .map_err(|e| Failure::usage(format!("cannot write standard output: {e}"))),
    }
}

struct Resolved {
    file: FileConfig,
    output: Option<PathBuf>,
    format: Format,
    solver: SolverConfig,
}

fn resolve_common(common: &CommonArgs) -> Result<Resolved, Failure> {
    let file = match &common.config {
        Some(path) => FileConfig::load(path)?,
        None => FileConfig::default(),
    };
    let format = match common.format {
        Some(f) => f,
        None => match file.get_str("format") {
            Some("csv") => Format::Csv,
            Some("jsonl") => Format::Jsonl,
            Some(other) => {
                return Err(Failure::usage(format!(
                    "config key format: expected csv or jsonl (got {other:?})"
                )))
            }
            None => Format::Csv,
        },
    };
    let output = common
        .output
        .clone()
        .or_else(|| file.get_str("output").map(PathBuf::from));
    let solver = SolverConfig {
        abs_tol: match common.abs_tol {
            Some(v) => Some(v),
            None => file.get_f64("abs_tol")?,
        },
        x_tol: match common.x_tol {
            Some(v) => Some(v),
            None => file.get_f64("x_tol")?,
        },
        max_iter: match common.max_iter {
            Some(v) => v,
            None => file.get_usize("max_iter")?.unwrap_or(200),
        },
    };
    solver.validate()?;
    Ok(Resolved {
        file,
        output,
        format,
        solver,
    })
}

fn require<T>(value: Option<T>, flag: &str) -> Result<T, Failure> {
    value.ok_or_else(|| Failure::usage(format!("missing required value for --{flag}")))
}

fn resolve_problem(args: &ProblemArgs, file: &FileConfig) -> Result<Problem, Failure> {
    let pick = |flag: Option<f64>, key: &str| -> Result<Option<f64>, Failure> {
        Ok(match flag {
            Some(v) => Some(v),
            None => file.get_f64(key)?,
        })
    };
    let sigma1 = require(pick(args.sigma1, "sigma1")?, "sigma1")?;
    let sigma2 = require(pick(args.sigma2, "sigma2")?, "sigma2")?;
    let p = require(pick(args.p, "p")?, "p")?;
    let e = require(pick(args.e, "e")?, "e")?;
    let theta1 = require(pick(args.theta1, "theta1")?, "theta1")?;
    let dim = require(
        match args.dim {
            Some(v) => Some(v),
            None => file.get_u32("dim")?,
        },
        "dim",
    )?;
    Ok(Problem::new(
        sigma1,
        sigma2,
        p,
        e,
        theta1,
        Dim::from_u32(dim)?,
    )?)
}

fn run(command: Command) -> Result<ExitCode, Failure> {
    match command {
        Command::Solve { problem, common } => {
            let resolved = resolve_common(&common)?;
            let prob = resolve_problem(&problem, &resolved.file)?;
            let eff = effective_conductivity(&prob, &resolved.solver)?;
            let theta1 = prob.theta1();
            let residual = if theta1 > 0.0 && theta1 < 1.0 {
                interface_fn(eff.x0, &prob, &prob.geometry_factors()?).abs()
            } else {
                0.0
            };
            let record = Record(vec![
                ("x0", Value::Num(eff.x0)),
                ("sigma_star", Value::Num(eff.sigma_star)),
                ("residual", Value::Num(residual)),
                ("branch", Value::Text(eff.branch.as_str())),
                ("hs_value", eff.hs_value.map_or(Value::Missing, Value::Num)),
            ]);
            let text = match resolved.format {
                Format::Csv => record.to_csv(),
                Format::Jsonl => record.to_jsonl(),
            };
            emit(&text, resolved.output.as_ref())?;
            Ok(ExitCode::SUCCESS)
        }
        Command::Field {
            problem,
            common,
            re,
            points,
            quad_order,
        } => {
            let resolved = resolve_common(&common)?;
            let prob = resolve_problem(&problem, &resolved.file)?;
            let r_e = require(
                match re {
                    Some(v) => Some(v),
                    None => resolved.file.get_f64("re")?,
                },
                "re",
            )?;
            let points = match points {
                Some(v) => v,
                None => resolved.file.get_usize("points")?.unwrap_or(64),
            };
            let quad_order = match quad_order {
                Some(v) => v,
                None => resolved.file.get_usize("quad_order")?.unwrap_or(32),
            };
            if quad_order < 4 {
                return Err(Failure::usage("--quad-order must be at least 4"));
            }
            let sol = build_field(&prob, r_e, &resolved.solver)?;
            let res = sol.residuals();
            let c = &sol.coeffs;
            let h = (1e-3 * r_e).min(0.125 * (c.r_e - c.r_c));
            let harmonicity = sol.harmonicity_check(points, h)?;
            let energy = sol.energy_identity(quad_order);
            let record = Record(vec![
                ("a1", Value::Num(c.a1)),
                ("a2", Value::Num(c.a2)),
                ("b2", Value::Num(c.b2)),
                ("r_c", Value::Num(c.r_c)),
                ("r_e", Value::Num(c.r_e)),
                ("sigma_star", Value::Num(sol.sigma_star)),
                ("res_potential_core", Value::Num(res[0])),
                ("res_flux_core", Value::Num(res[1])),
                ("res_potential_outer", Value::Num(res[2])),
                ("res_flux_outer", Value::Num(res[3])),
                ("harmonicity_max", Value::Num(harmonicity)),
                ("core_dissipation", Value::Num(energy.core_dissipation)),
                (
                    "coating_dissipation",
                    Value::Num(energy.coating_dissipation),
                ),
                (
                    "homogeneous_dissipation",
                    Value::Num(energy.homogeneous_dissipation),
                ),
                ("energy_rel_error", Value::Num(energy.rel_error)),
            ]);
            let text = match resolved.format {
                Format::Csv => record.to_csv(),
                Format::Jsonl => record.to_jsonl(),
            };
            emit(&text, resolved.output.as_ref())?;
            Ok(ExitCode::SUCCESS)
        }
        Command::Sens {
            problem,
            common,
            fd_step,
        } => {
            let resolved = resolve_common(&common)?;
            let prob = resolve_problem(&problem, &resolved.file)?;
            let fd_step = match fd_step {
                Some(v) => v,
                None => resolved.file.get_f64("fd_step")?.unwrap_or(1e-6),
            };
            let rep = sensitivity::full_report(&prob, &resolved.solver, fd_step)?;
            let record = Record(vec![
                ("dx0_dp", Value::Num(rep.dx0_dp)),
                ("dsigma_dp", Value::Num(rep.dsigma_dp)),
                ("dx0_dtheta", Value::Num(rep.dx0_dtheta)),
                ("dsigma_dtheta", Value::Num(rep.dsigma_dtheta)),
                ("fd_dx0_dp", Value::Num(rep.fd_dx0_dp)),
                ("fd_dsigma_dp", Value::Num(rep.fd_dsigma_dp)),
                ("fd_dx0_dtheta", Value::Num(rep.fd_dx0_dtheta)),
                ("fd_dsigma_dtheta", Value::Num(rep.fd_dsigma_dtheta)),
                ("max_rel_mismatch", Value::Num(rep.max_rel_mismatch)),
            ]);
            let text = match resolved.format {
                Format::Csv => record.to_csv(),
                Format::Jsonl => record.to_jsonl(),
            };
            emit(&text, resolved.output.as_ref())?;
            Ok(ExitCode::SUCCESS)
        }
        Command::Table { id, common } => {
            let resolved = resolve_common(&common)?;
            let id = require(
                match id {
                    Some(v) => Some(v),
                    None => resolved.file.get_u32("id")?.map(|v| v as u8),
                },
                "id",
            )?;
            let spec = TableSpec::reference(id)?;
            let matrix = generate_table_with_threads(&spec, threads_from_env()?)?;
            let ds = table_dataset(&spec, &matrix);
            let text = match resolved.format {
                Format::Csv => ds.to_csv(),
                Format::Jsonl => dataset_to_jsonl(&ds),
            };
            emit(&text, resolved.output.as_ref())?;
            Ok(ExitCode::SUCCESS)
        }
        Command::Verify { id, common } => {
            let resolved = resolve_common(&common)?;
            let id = require(
                match id {
                    Some(v) => Some(v),
                    None => resolved.file.get_u32("id")?.map(|v| v as u8),
                },
                "id",
            )?;
            let spec = TableSpec::reference(id)?;
            let matrix = generate_table_with_threads(&spec, threads_from_env()?)?;
            let diff = golden_diff(&matrix, id)?;
            for note in &diff.notes {
                eprintln!(
                    "note: table {id} cell (theta1={}, p={}): {}",
                    note.theta1, note.p, note.message
                );
            }
            let mut text = String::from("theta1,p,computed,computed_printed,golden,delta\n");
            for m in &diff.mismatches {
                text.push_str(&format!(
                    "{},{},{},{},{},{}\n",
                    m.theta1,
                    m.p,
                    format_float(m.computed),
                    m.computed_printed,
                    m.golden,
                    format_float(m.delta)
                ));
            }
            emit(&text, resolved.output.as_ref())?;
            if diff.is_empty() {
                eprintln!("table {id}: all cells match at printed precision");
                Ok(ExitCode::SUCCESS)
            } else {
                eprintln!(
                    "table {id}: {} cells differ from the printed values",
                    diff.mismatches.len()
                );
                Ok(ExitCode::from(1))
            }
        }
        Command::Sweep {
            problem,
            common,
            axis,
            from,
            to,
            n,
            quantities,
        } => {
            let resolved = resolve_common(&common)?;
            let axis = match require(
                match axis {
                    Some(v) => Some(v),
                    None => resolved.file.get_str("axis").map(String::from),
                },
                "axis",
            )?
            .as_str()
            {
                "theta1" => SweepAxis::Theta1,
                "p" => SweepAxis::P,
                other => {
                    return Err(Failure::usage(format!(
                        "--axis must be theta1 or p (got {other:?})"
                    )))
                }
            };
            let lo = require(
                match from {
                    Some(v) => Some(v),
                    None => resolved.file.get_f64("from")?,
                },
                "from",
            )?;
            let hi = require(
                match to {
                    Some(v) => Some(v),
                    None => resolved.file.get_f64("to")?,
                },
                "to",
            )?;
            let n_points = require(
                match n {
                    Some(v) => Some(v),
                    None => resolved.file.get_usize("n")?,
                },
                "n",
            )?;
            let names: Vec<String> = match quantities {
                Some(v) => v,
                None => resolved
                    .file
                    .get_str("quantities")
                    .map(|s| s.split(',').map(|q| q.trim().to_string()).collect())
                    .unwrap_or_else(|| vec!["root".into(), "sigma".into()]),
            };
            let quantities = names
                .iter()
                .map(|name| match name.as_str() {
                    "root" => Ok(SweepQuantity::Root),
                    "sigma" => Ok(SweepQuantity::Sigma),
                    "dx0_dp" => Ok(SweepQuantity::Dx0Dp),
                    "dsigma_dp" => Ok(SweepQuantity::DsigmaDp),
                    "dx0_dtheta" => Ok(SweepQuantity::Dx0Dtheta),
                    "dsigma_dtheta" => Ok(SweepQuantity::DsigmaDtheta),
                    other => Err(Failure::usage(format!("unknown quantity {other:?}"))),
                })
                .collect::<Result<Vec<_>, Failure>>()?;

            // The swept field is ignored; fill it with a value that always
            // validates so the fixed problem can be built from the flags.
            let mut args = problem;
            match axis {
                SweepAxis::Theta1 => args.theta1 = Some(args.theta1.unwrap_or(0.5)),
                SweepAxis::P => args.p = Some(args.p.unwrap_or(2.0)),
            }
            let fixed = resolve_problem(&args, &resolved.file)?;
            let spec = SweepSpec {
                axis,
                lo,
                hi,
                n_points,
                fixed,
                quantities,
            };
            let ds = nil_core::sweep(&spec, &resolved.solver)?;
            let text = match resolved.format {
                Format::Csv => ds.to_csv(),
                Format::Jsonl => dataset_to_jsonl(&ds),
            };
            emit(&text, resolved.output.as_ref())?;
            Ok(ExitCode::SUCCESS)
        }
    }
}
