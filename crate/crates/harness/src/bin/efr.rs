//! `efr`: generate instances, run allocation algorithms and check their
//! certificates from the command line.
//!
//! Exit codes: 0 success or property holds, 1 property fails, 2 budget
//! exceeded, 3 bad input.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use efr_core::oracles::{decide_efr_k, pareto_improvement};
use efr_core::welfare::{compute_params, perturb_nondegenerate};
use efr_core::{is_ef1, validate_certificate, Budget, Error as CoreError, Instance};
use efr_harness::format::{
    allocation_to_json, instance_to_json, one_based_bundles, parse_allocation, parse_instance, parse_solution, perturbed_to_json,
    render, solution_to_json, Metadata,
};
use efr_harness::solve::{solve, Algorithm, SolveOptions};
use efr_harness::{gen_identical_chores, gen_paired_goods, gen_partition_reduction, gen_random, HarnessError};
use serde_json::json;

#[derive(Parser)]
#[command(name = "efr", version, about = "Fair allocation of mixed goods and chores with bounded reallocation")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum Family {
    IdenticalChores,
    PairedGoods,
    Partition,
    Random,
}

#[derive(Clone, Copy, ValueEnum)]
enum Algo {
    Ef1,
    Efr,
    Goods,
    FixedN,
}

#[derive(Subcommand)]
enum Command {
    /// Write a generated instance.
    Gen {
        #[arg(long, value_enum)]
        family: Family,
        #[arg(long)]
        n: Option<usize>,
        #[arg(long)]
        m: Option<usize>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Largest magnitude for random values.
        #[arg(long, default_value_t = 9)]
        values: u32,
        #[arg(long, default_value_t = 0.5)]
        chore_prob: f64,
        /// Partition input, comma separated.
        #[arg(long)]
        set: Option<String>,
        #[arg(short, long)]
        output: Option<PathBuf>,
        /// Partition family: where to write the starting allocation.
        #[arg(long)]
        alloc_out: Option<PathBuf>,
    },
    /// Run an allocation algorithm and write its solution file.
    Solve {
        #[arg(long, value_enum)]
        algo: Algo,
        #[arg(short, long)]
        input: PathBuf,
        #[arg(short, long)]
        output: Option<PathBuf>,
        #[arg(long)]
        extend_round_robin: bool,
        #[arg(long)]
        max_candidates: Option<u64>,
    },
    /// Check a solution file against its instance.
    Verify {
        #[arg(long)]
        cert: PathBuf,
        #[arg(short, long)]
        input: PathBuf,
    },
    /// Decide whether an allocation is EFR-k.
    DecideEfr {
        #[arg(short, long)]
        input: PathBuf,
        #[arg(long)]
        alloc: PathBuf,
        #[arg(long)]
        k: usize,
        #[arg(long)]
        budget: Option<u64>,
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Check Pareto optimality by enumeration.
    CheckPo {
        #[arg(short, long)]
        input: PathBuf,
        #[arg(long)]
        alloc: PathBuf,
        #[arg(long)]
        budget: Option<u64>,
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Write the deterministic non-degenerate perturbation of an instance.
    Perturb {
        #[arg(short, long)]
        input: PathBuf,
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
}

/// A finished command: text to emit and whether the checked property held.
struct Outcome {
    text: String,
    output: Option<PathBuf>,
    holds: bool,
}

fn read(path: &Path) -> Result<String, HarnessError> {
    fs::read_to_string(path).map_err(|source| HarnessError::Io { path: path.display().to_string(), source })
}

fn write(path: Option<&Path>, text: &str) -> Result<(), HarnessError> {
    match path {
        Some(p) => fs::write(p, text).map_err(|source| HarnessError::Io { path: p.display().to_string(), source }),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn load_instance(path: &Path) -> Result<Instance, HarnessError> {
    parse_instance(&read(path)?).map(|(inst, _)| inst).map_err(Into::into)
}

fn budget(raw: Option<u64>) -> Budget {
    raw.map_or_else(Budget::default, Budget::new)
}

fn run(command: Command) -> Result<Outcome, HarnessError> {
    match command {
        Command::Gen { family, n, m, seed, values, chore_prob, set, output, alloc_out } => {
            let need = |v: Option<usize>, name: &str| {
                v.ok_or_else(|| HarnessError::Parameter(format!("--{name} is required for this family")))
            };
            let mut meta = Metadata::new();
            let inst = match family {
                Family::IdenticalChores => {
                    let n = need(n, "n")?;
                    meta.insert("family".into(), json!("identical-chores"));
                    meta.insert("n".into(), json!(n));
                    gen_identical_chores(n)?
                }
                Family::PairedGoods => {
                    let n = need(n, "n")?;
                    meta.insert("family".into(), json!("paired-goods"));
                    meta.insert("n".into(), json!(n));
                    gen_paired_goods(n)?
                }
                Family::Partition => {
                    let raw = set.ok_or_else(|| HarnessError::Parameter("--set is required for partition".into()))?;
                    let parsed = raw
                        .split(',')
                        .map(|s| s.trim().parse::<u64>())
                        .collect::<Result<Vec<_>, _>>()
                        .map_err(|e| HarnessError::Parameter(format!("--set {raw:?}: {e}")))?;
                    let (inst, alloc, k) = gen_partition_reduction(&parsed)?;
                    meta.insert("family".into(), json!("partition"));
                    meta.insert("set".into(), json!(parsed));
                    meta.insert("k".into(), json!(k));
                    if let Some(p) = &alloc_out {
                        write(Some(p), &allocation_to_json(&alloc))?;
                    }
                    inst
                }
                Family::Random => {
                    let (n, m) = (need(n, "n")?, need(m, "m")?);
                    meta.insert("family".into(), json!("random"));
                    meta.insert("n".into(), json!(n));
                    meta.insert("m".into(), json!(m));
                    meta.insert("seed".into(), json!(seed));
                    meta.insert("values".into(), json!(values));
                    meta.insert("chore_prob".into(), json!(chore_prob));
                    gen_random(n, m, values, chore_prob, seed)?
                }
            };
            Ok(Outcome { text: (instance_to_json(&inst, &meta)), output, holds: true })
        }
        Command::Solve { algo, input, output, extend_round_robin, max_candidates } => {
            let inst = load_instance(&input)?;
            let algorithm = match algo {
                Algo::Ef1 => Algorithm::Ef1,
                Algo::Efr => Algorithm::Efr,
                Algo::Goods => Algorithm::Goods,
                Algo::FixedN => Algorithm::FixedN,
            };
            let sol = solve(&inst, algorithm, SolveOptions { extend_round_robin, max_candidates })?;
            Ok(Outcome { text: (solution_to_json(&sol)), output, holds: true })
        }
        Command::Verify { cert, input } => {
            let inst = load_instance(&input)?;
            let sol = parse_solution(&read(&cert)?)?;
            sol.base.check_against(&inst)?;
            let holds = match &sol.certificate {
                Some(c) => validate_certificate(&inst, c)?,
                None => is_ef1(&inst, &sol.base)?,
            };
            let report = json!({ "valid": holds, "k": sol.certificate.as_ref().map(|c| c.k()) });
            Ok(Outcome { text: (render(&report)), output: None, holds })
        }
        Command::DecideEfr { input, alloc, k, budget: b, output } => {
            let inst = load_instance(&input)?;
            let a = parse_allocation(&read(&alloc)?)?;
            let d = decide_efr_k(&inst, &a, k, budget(b))?;
            let report = match &d.certificate {
                Some(c) => json!({
                    "k": k,
                    "verdict": true,
                    "realloc_set": c.realloc_set.iter().map(|t| t + 1).collect::<Vec<_>>(),
                    "witnesses": c.witnesses.iter().map(one_based_bundles).collect::<Vec<_>>(),
                }),
                None => json!({ "k": k, "verdict": false }),
            };
            Ok(Outcome { text: (render(&report)), output, holds: d.verdict })
        }
        Command::CheckPo { input, alloc, budget: b, output } => {
            let inst = load_instance(&input)?;
            let a = parse_allocation(&read(&alloc)?)?;
            let better = pareto_improvement(&inst, &a, budget(b))?;
            let report = match &better {
                Some(d) => json!({
                    "pareto_optimal": false,
                    "improvement": one_based_bundles(d),
                }),
                None => json!({ "pareto_optimal": true }),
            };
            Ok(Outcome { text: (render(&report)), output, holds: better.is_none() })
        }
        Command::Perturb { input, output } => {
            let inst = load_instance(&input)?;
            let params = compute_params(&inst)?;
            let pert = perturb_nondegenerate(&inst, &params, Budget::default())?;
            Ok(Outcome { text: (perturbed_to_json(&pert)), output, holds: true })
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 3 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli.command).and_then(|o| {
        write(o.output.as_deref(), &o.text)?;
        Ok(o.holds)
    }) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(HarnessError::Core(CoreError::BudgetExceeded { limit })) => {
            eprintln!("efr: budget of {limit} evaluations exceeded");
            ExitCode::from(2)
        }
        Err(e) => {
            eprintln!("efr: {e}");
            ExitCode::from(3)
        }
    }
}
