//! zsf: generate, solve, verify, and benchmark zero-sum instances over
//! prime fields.
//!
//! Exit codes: 0 success; 2 verified failure (the sampled instance was
//! not favorable); 3 precondition or threshold violation; 4 I/O or
//! format error.

mod formats;

use std::collections::BTreeSet;
use std::process::ExitCode;
use std::str::FromStr;
use std::time::Instant;

use clap::{Args, Parser, Subcommand};
use num_bigint::{BigInt, BigUint};
use num_rational::BigRational;
use num_traits::ToPrimitive;

use zsf::error::Error;
use zsf::field::{Modulus, Residue};
use zsf::linalg::VecFamily;
use zsf::problem::{verify, Constraint, Problem};
use zsf::sample::uniform_family;
use zsf::{avgcase, f3, general, halving, thresholds};

#[derive(Parser)]
#[command(name = "zsf", about = "zero-sum and short-solution solvers over prime fields")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a uniform instance file.
    Gen(GenArgs),
    /// Solve an instance and write a verified solution file.
    Solve(SolveArgs),
    /// Check a solution file against an instance.
    Verify(VerifyArgs),
    /// Run seeded solve cells and emit CSV measurements.
    Bench(BenchArgs),
    /// Print the vector-count threshold for a problem.
    Thresholds(ThresholdArgs),
}

#[derive(Args)]
struct GenArgs {
    #[arg(long)]
    q: BigUint,
    #[arg(long)]
    n: usize,
    #[arg(long)]
    m: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out: Option<String>,
}

#[derive(Args)]
struct SolveArgs {
    #[arg(long = "in")]
    input: String,
    /// f3 | sis | subset | cis
    #[arg(long)]
    problem: String,
    /// Norm divisor for sis (coefficients bounded by floor(q/(2k))).
    #[arg(long)]
    k: Option<u64>,
    /// Sparsity parameter of the base extraction.
    #[arg(long, default_value_t = 1)]
    r: usize,
    /// Failure budget for average-case solvers (e.g. 0.5 or 1/2).
    #[arg(long, default_value = "1/2")]
    eps: String,
    /// Constraint for cis problems (explicit:... or forbidden:...).
    #[arg(long)]
    constraint: Option<String>,
    /// f3: weak|quadratic|main; sis: halving|oneshot; subset:
    /// random|improved; cis: full|simple|centered.
    #[arg(long)]
    algo: Option<String>,
    #[arg(long)]
    out: Option<String>,
}

#[derive(Args)]
struct VerifyArgs {
    #[arg(long = "in")]
    input: String,
    #[arg(long)]
    solution: String,
}

#[derive(Args)]
struct BenchArgs {
    #[arg(long)]
    q: BigUint,
    #[arg(long)]
    n: usize,
    /// Comma-separated grid of vector counts.
    #[arg(long)]
    m: String,
    /// Seeds 0..count.
    #[arg(long, default_value_t = 10)]
    seeds: u64,
    #[arg(long)]
    problem: String,
    #[arg(long)]
    k: Option<u64>,
    #[arg(long, default_value_t = 1)]
    r: usize,
    #[arg(long, default_value = "1/2")]
    eps: String,
    #[arg(long)]
    constraint: Option<String>,
    #[arg(long)]
    algo: Option<String>,
    #[arg(long)]
    out: Option<String>,
}

#[derive(Args)]
struct ThresholdArgs {
    #[arg(long)]
    q: BigUint,
    #[arg(long)]
    n: usize,
    #[arg(long)]
    problem: String,
    #[arg(long)]
    k: Option<u64>,
    #[arg(long, default_value_t = 1)]
    r: usize,
    #[arg(long, default_value = "1/2")]
    eps: String,
    #[arg(long)]
    constraint: Option<String>,
    #[arg(long)]
    algo: Option<String>,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Gen(a) => run_gen(a),
        Command::Solve(a) => run_solve(a),
        Command::Verify(a) => run_verify(a),
        Command::Bench(a) => run_bench(a),
        Command::Thresholds(a) => run_thresholds(a),
    };
    match result {
        Ok(c) => c,
        Err(CliError { code, message }) => {
            eprintln!("error: {message}");
            ExitCode::from(code)
        }
    }
}

struct CliError {
    code: u8,
    message: String,
}

fn io_err(message: impl Into<String>) -> CliError {
    CliError { code: 4, message: message.into() }
}

fn solver_err(e: Error) -> CliError {
    let code = match e {
        Error::SampleFailure | Error::SolveFailed(_) => 2,
        Error::Parse(_) => 4,
        _ => 3,
    };
    CliError { code, message: e.to_string() }
}

fn parse_eps(text: &str) -> Result<BigRational, CliError> {
    let t = text.trim();
    if let Some((num, den)) = t.split_once('/') {
        let n = BigInt::from_str(num.trim()).map_err(|e| io_err(format!("bad eps: {e}")))?;
        let d = BigInt::from_str(den.trim()).map_err(|e| io_err(format!("bad eps: {e}")))?;
        return Ok(BigRational::new(n, d));
    }
    if let Some((int, frac)) = t.split_once('.') {
        let scale = BigInt::from(10u32).pow(frac.len() as u32);
        let whole = if int.is_empty() {
            BigInt::from(0)
        } else {
            BigInt::from_str(int).map_err(|e| io_err(format!("bad eps: {e}")))?
        };
        let frac = BigInt::from_str(frac).map_err(|e| io_err(format!("bad eps: {e}")))?;
        return Ok(BigRational::new(whole * &scale + frac, scale));
    }
    let n = BigInt::from_str(t).map_err(|e| io_err(format!("bad eps: {e}")))?;
    Ok(BigRational::from_integer(n))
}

fn read_file(path: &str) -> Result<String, CliError> {
    std::fs::read_to_string(path).map_err(|e| io_err(format!("{path}: {e}")))
}

fn write_out(path: &Option<String>, content: &str) -> Result<(), CliError> {
    match path {
        Some(p) => std::fs::write(p, content).map_err(|e| io_err(format!("{p}: {e}"))),
        None => {
            print!("{content}");
            Ok(())
        }
    }
}

fn run_gen(a: GenArgs) -> Result<ExitCode, CliError> {
    let modulus = Modulus::new(a.q).map_err(solver_err)?;
    let family = uniform_family(&modulus, a.seed, a.n, a.m);
    write_out(&a.out, &formats::serialize_instance(&family))?;
    Ok(ExitCode::SUCCESS)
}

/// A solver run's output with the constraint it satisfies.
struct Solved {
    constraint: Constraint,
    x: zsf::problem::CoeffMap,
}

fn dispatch_solve(
    family: &VecFamily,
    problem: &str,
    algo: Option<&str>,
    k: Option<u64>,
    r: usize,
    eps: &BigRational,
    constraint: Option<&str>,
) -> Result<Solved, CliError> {
    let m = family.modulus();
    match problem {
        "f3" => {
            let strategy = f3_strategy(algo)?;
            let x = f3::f3_solve(family, strategy).map_err(solver_err)?;
            Ok(Solved { constraint: Constraint::Binary, x })
        }
        "sis" => {
            let k = k.ok_or_else(|| io_err("sis requires --k"))?;
            let algo = algo.unwrap_or(if k.is_power_of_two() { "halving" } else { "oneshot" });
            let x = match algo {
                "halving" => halving::sis_power2(family, k, r).map_err(solver_err)?,
                "oneshot" => general::sis_one_shot(family, k as usize).map_err(solver_err)?,
                other => return Err(io_err(format!("unknown sis algorithm '{other}'"))),
            };
            let bound = m.q() / (BigUint::from(k) * 2u32);
            Ok(Solved { constraint: Constraint::Interval(bound), x })
        }
        "subset" => {
            if m.q() == &BigUint::from(3u32) {
                let x = f3::f3_solve(family, f3::F3Strategy::Main).map_err(solver_err)?;
                return Ok(Solved { constraint: Constraint::Binary, x });
            }
            let x = match algo.unwrap_or("random") {
                "random" => avgcase::subset_sum_random(family, r, eps).map_err(solver_err)?,
                "improved" => general::subset_sum_improved(family, eps).map_err(solver_err)?,
                other => return Err(io_err(format!("unknown subset algorithm '{other}'"))),
            };
            Ok(Solved { constraint: Constraint::Binary, x })
        }
        "cis" => {
            let desc = constraint.ok_or_else(|| io_err("cis requires --constraint"))?;
            let parsed = formats::parse_constraint(m, desc).map_err(io_err)?;
            match (&parsed, algo.unwrap_or("full")) {
                (Constraint::Explicit(allowed), "full") => {
                    let x = general::cis_full(family, allowed, eps).map_err(solver_err)?;
                    Ok(Solved { constraint: parsed, x })
                }
                (Constraint::Explicit(allowed), "simple") => {
                    let x =
                        avgcase::cis_simple(family, allowed, r, eps, None).map_err(solver_err)?;
                    Ok(Solved { constraint: parsed, x })
                }
                (Constraint::Forbidden(bar), "centered" | "full") => {
                    let forbidden = centered_pairs(m, bar).map_err(solver_err)?;
                    let x = general::cis_centered(family, &forbidden).map_err(solver_err)?;
                    Ok(Solved { constraint: parsed, x })
                }
                (_, other) => Err(io_err(format!(
                    "cis algorithm '{other}' does not apply to constraint '{desc}'"
                ))),
            }
        }
        other => Err(io_err(format!("unknown problem '{other}'; use f3|sis|subset|cis"))),
    }
}

fn f3_strategy(algo: Option<&str>) -> Result<f3::F3Strategy, CliError> {
    match algo.unwrap_or("main") {
        "weak" => Ok(f3::F3Strategy::Weak),
        "quadratic" => Ok(f3::F3Strategy::Quadratic),
        "main" => Ok(f3::F3Strategy::Main),
        other => Err(io_err(format!("unknown f3 strategy '{other}'"))),
    }
}

/// Positive representatives of a symmetric forbidden set.
fn centered_pairs(m: &Modulus, bar: &BTreeSet<Residue>) -> Result<Vec<Residue>, Error> {
    let mut abs: BTreeSet<Residue> = BTreeSet::new();
    for x in bar {
        if !bar.contains(&m.neg(x)) {
            return Err(Error::PreconditionViolated(
                "the centered solver needs a symmetric forbidden set".into(),
            ));
        }
        abs.insert(m.residue(&m.lift_abs(x)));
    }
    Ok(abs.into_iter().collect())
}

fn run_solve(a: SolveArgs) -> Result<ExitCode, CliError> {
    let inst = formats::parse_instance(&read_file(&a.input)?).map_err(io_err)?;
    let eps = parse_eps(&a.eps)?;
    let solved = dispatch_solve(
        &inst.family,
        &a.problem,
        a.algo.as_deref(),
        a.k,
        a.r,
        &eps,
        a.constraint.as_deref(),
    )?;
    // Never write an unverified solution.
    let problem =
        Problem::zero_sum(inst.family.clone(), solved.constraint.clone()).map_err(solver_err)?;
    let report = verify(&problem, &solved.x).map_err(solver_err)?;
    if !report.pass() {
        return Err(CliError {
            code: 2,
            message: format!("solver output failed verification: {report:?}"),
        });
    }
    write_out(
        &a.out,
        &formats::serialize_solution(inst.family.len(), &solved.constraint, &solved.x),
    )?;
    eprintln!(
        "verified: support {} of {}, max |coefficient| {}",
        solved.x.support_size(),
        inst.family.len(),
        solved.x.max_lift_abs(inst.family.modulus())
    );
    Ok(ExitCode::SUCCESS)
}

fn run_verify(a: VerifyArgs) -> Result<ExitCode, CliError> {
    let inst = formats::parse_instance(&read_file(&a.input)?).map_err(io_err)?;
    let (m_count, constraint, x) =
        formats::parse_solution(&inst.modulus, &read_file(&a.solution)?).map_err(io_err)?;
    if m_count != inst.family.len() {
        return Err(io_err(format!(
            "solution is for {m_count} vectors, instance has {}",
            inst.family.len()
        )));
    }
    let problem = Problem::zero_sum(inst.family, constraint).map_err(solver_err)?;
    let report = verify(&problem, &x).map_err(solver_err)?;
    println!(
        "sums_to_target={} in_constraint={} nontrivial={}",
        report.sums_to_target, report.in_constraint, report.nontrivial
    );
    if report.pass() {
        println!("PASS");
        Ok(ExitCode::SUCCESS)
    } else {
        let failed: Vec<&str> = [
            (!report.sums_to_target, "sums_to_target"),
            (!report.in_constraint, "in_constraint"),
            (!report.nontrivial, "nontrivial"),
        ]
        .iter()
        .filter(|(f, _)| *f)
        .map(|(_, n)| *n)
        .collect();
        Err(CliError { code: 2, message: format!("FAIL: {}", failed.join(", ")) })
    }
}

fn run_bench(a: BenchArgs) -> Result<ExitCode, CliError> {
    let modulus = Modulus::new(a.q.clone()).map_err(solver_err)?;
    let eps = parse_eps(&a.eps)?;
    let grid: Vec<usize> = if a.m.trim().is_empty() {
        Vec::new()
    } else {
        a.m.split(',')
            .map(|t| t.trim().parse().map_err(|e| io_err(format!("bad m value: {e}"))))
            .collect::<Result<_, _>>()?
    };
    let mut rows: Vec<String> = Vec::new();
    for &mcount in &grid {
        for seed in 0..a.seeds {
            let family = uniform_family(&modulus, seed, a.n, mcount);
            let started = Instant::now();
            let outcome = dispatch_solve(
                &family,
                &a.problem,
                a.algo.as_deref(),
                a.k,
                a.r,
                &eps,
                a.constraint.as_deref(),
            );
            let wall_ms = started.elapsed().as_millis();
            let (success, support, max_abs) = match outcome {
                Ok(s) => {
                    let problem = Problem::zero_sum(family.clone(), s.constraint.clone())
                        .map_err(solver_err)?;
                    let ok = verify(&problem, &s.x).map_err(solver_err)?.pass();
                    (ok, s.x.support_size(), s.x.max_lift_abs(&modulus).to_string())
                }
                Err(CliError { code: 2 | 3, .. }) => (false, 0, "0".into()),
                Err(e) => return Err(e),
            };
            rows.push(format!(
                "{},{},{},{},{},{},{},{},{}",
                a.problem,
                a.q,
                a.n,
                mcount,
                seed,
                if success { 1 } else { 0 },
                wall_ms,
                support,
                max_abs
            ));
        }
    }
    rows.sort();
    let mut csv = String::from("problem,q,n,m,seed,success,wall_ms,support,max_abs_coeff\n");
    for r in rows {
        csv.push_str(&r);
        csv.push('\n');
    }
    write_out(&a.out, &csv)?;
    Ok(ExitCode::SUCCESS)
}

fn run_thresholds(a: ThresholdArgs) -> Result<ExitCode, CliError> {
    let modulus = Modulus::new(a.q.clone()).map_err(solver_err)?;
    let eps = parse_eps(&a.eps)?;
    let value: BigUint = match a.problem.as_str() {
        "f3" => f3::f3_threshold(a.n, f3_strategy(a.algo.as_deref())?),
        "sis" => {
            let k = a.k.ok_or_else(|| io_err("sis requires --k"))?;
            if k < 2 || BigUint::from(k) > *modulus.half() || k > 4096 {
                return Err(CliError { code: 3, message: format!("k = {k} out of range") });
            }
            let algo =
                a.algo.as_deref().unwrap_or(if k.is_power_of_two() { "halving" } else { "oneshot" });
            match algo {
                "halving" => thresholds::sis_power2(&modulus, a.n, k, a.r).map_err(solver_err)?,
                "oneshot" => thresholds::one_shot_closed(a.n, k as usize),
                other => return Err(io_err(format!("unknown sis algorithm '{other}'"))),
            }
        }
        "subset" => {
            if a.q == BigUint::from(3u32) {
                f3::f3_threshold(a.n, f3::F3Strategy::Main)
            } else {
                match a.algo.as_deref().unwrap_or("random") {
                    "random" => thresholds::subset_sum_random(&modulus, a.n, a.r, &eps)
                        .map_err(solver_err)?,
                    "improved" => {
                        thresholds::subset_sum_improved(&modulus, a.n, &eps).map_err(solver_err)?
                    }
                    other => return Err(io_err(format!("unknown subset algorithm '{other}'"))),
                }
            }
        }
        "cis" => {
            let desc = a.constraint.ok_or_else(|| io_err("cis requires --constraint"))?;
            match formats::parse_constraint(&modulus, &desc).map_err(io_err)? {
                Constraint::Explicit(allowed) => {
                    let q = modulus
                        .q()
                        .to_u64()
                        .ok_or_else(|| io_err("cis thresholds need q in u64"))?
                        as usize;
                    thresholds::cis_full(&modulus, a.n, q - allowed.len(), &eps)
                        .map_err(solver_err)?
                }
                Constraint::Forbidden(bar) => {
                    let pairs = centered_pairs(&modulus, &bar).map_err(solver_err)?;
                    thresholds::centered_closed(a.n, pairs.len())
                }
                _ => return Err(io_err("cis thresholds take explicit or forbidden sets")),
            }
        }
        other => return Err(io_err(format!("unknown problem '{other}'"))),
    };
    println!("{value}");
    Ok(ExitCode::SUCCESS)
}
