use std::io::{self, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use clap::error::ErrorKind;
use clap::{Parser, Subcommand};

use trialbandit::{
    builtin_dataset, builtin_datasets, pics_surrogate_allocation, run_experiment, run_experiment_to_path,
    variance_oracle_allocation, worst_case_pics_loss, worst_case_variance_loss, ArmOrdering, Error, ExperimentPlan,
    Objective, PolicyEntry, PolicyKind,
};

#[derive(Parser)]
#[command(
    name = "trialbandit",
    version,
    about = "Budgeted adaptive trial allocation simulator"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// List the builtin datasets with their dimensions.
    ListDatasets,
    /// Print the oracle allocation and its worst-case loss.
    Oracle {
        #[arg(long, value_parser = parse_dataset)]
        dataset: String,
        #[arg(long)]
        budget: usize,
        #[arg(long, default_value = "variance", value_parser = parse_objective)]
        objective: Objective,
    },
    /// Run replicated simulations and write the results as CSV.
    Simulate {
        /// Dataset name, or a comma-separated list.
        #[arg(long, value_delimiter = ',', required = true, value_parser = parse_dataset)]
        dataset: Vec<String>,
        /// Policy name, or a comma-separated list; `gafs-max-reversed` reverses the arm ordering.
        #[arg(long, value_delimiter = ',', required = true, value_parser = parse_policy)]
        policy: Vec<PolicyEntry>,
        /// Total budget; defaults to each dataset's reference budget.
        #[arg(long)]
        budget: Option<usize>,
        #[arg(long, default_value_t = 100)]
        reps: usize,
        #[arg(long, default_value_t = 42)]
        seed: u64,
        #[arg(long, default_value_t = 0.1)]
        epsilon: f64,
        #[arg(long, default_value_t = 5)]
        init_pulls: usize,
        #[arg(long, default_value = "variance", value_parser = parse_objective)]
        objective: Objective,
        #[arg(long, default_value_t = 5)]
        checkpoint_every: usize,
        /// Output file; standard output when omitted.
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn parse_dataset(s: &str) -> Result<String, String> {
    builtin_dataset(s)
        .map(|d| d.name().to_string())
        .map_err(|e| e.to_string())
}

fn parse_objective(s: &str) -> Result<Objective, String> {
    s.parse().map_err(|e: Error| e.to_string())
}

fn parse_policy(s: &str) -> Result<PolicyEntry, String> {
    if let Some(base) = s.strip_suffix("-reversed") {
        let kind: PolicyKind = base.parse().map_err(|e: Error| e.to_string())?;
        if kind != PolicyKind::GafsMax {
            return Err(format!("only gafs-max accepts a reversed ordering, got {s}"));
        }
        return Ok(PolicyEntry::with_ordering(kind, ArmOrdering::Reversed));
    }
    s.parse().map(PolicyEntry::new).map_err(|e: Error| e.to_string())
}

fn list_datasets(out: &mut impl Write) -> io::Result<()> {
    writeln!(out, "{:<10} {:>3} {:>3}", "name", "C", "K")?;
    for spec in builtin_datasets() {
        writeln!(
            out,
            "{:<10} {:>3} {:>3}",
            spec.name(),
            spec.subpopulations(),
            spec.treatments()
        )?;
    }
    Ok(())
}

fn oracle(dataset: &str, budget: usize, objective: Objective, out: &mut impl Write) -> anyhow::Result<()> {
    let spec = builtin_dataset(dataset)?;
    let (alloc, loss) = match objective {
        Objective::Variance => {
            let alloc = variance_oracle_allocation(&spec, budget)?;
            let loss = worst_case_variance_loss(&spec, &alloc);
            (alloc, loss)
        }
        Objective::Pics => {
            let alloc = pics_surrogate_allocation(&spec, budget)?;
            let loss = worst_case_pics_loss(&spec, &alloc);
            (alloc, loss)
        }
    };
    writeln!(out, "dataset {} budget {budget} objective {objective}", spec.name())?;
    for (i, row) in alloc.iter_rows().enumerate() {
        let cells: Vec<String> = row.iter().map(|n| format!("{n:10.4}")).collect();
        writeln!(out, "subpopulation {:<3}{}", i + 1, cells.join(" "))?;
    }
    writeln!(out, "loss {loss}")?;
    Ok(())
}

fn run(command: Command) -> anyhow::Result<()> {
    let stdout = io::stdout();
    let mut out = stdout.lock();
    match command {
        Command::ListDatasets => list_datasets(&mut out)?,
        Command::Oracle {
            dataset,
            budget,
            objective,
        } => oracle(&dataset, budget, objective, &mut out)?,
        Command::Simulate {
            dataset,
            policy,
            budget,
            reps,
            seed,
            epsilon,
            init_pulls,
            objective,
            checkpoint_every,
            out: path,
        } => {
            let names: Vec<&str> = dataset.iter().map(String::as_str).collect();
            let mut plan = ExperimentPlan::new(&names, policy, objective);
            plan.budget = budget;
            plan.reps = reps;
            plan.seed = seed;
            plan.epsilon = epsilon;
            plan.init_pulls = init_pulls;
            plan.checkpoint_every = checkpoint_every;
            match path {
                Some(path) => run_experiment_to_path(&plan, &path)?,
                None => run_experiment(&plan, &mut out)?,
            }
        }
    }
    out.flush()?;
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) => {
            let _ = e.print();
            return ExitCode::SUCCESS;
        }
        Err(e) => {
            let rendered = e.to_string();
            let line = rendered
                .lines()
                .find(|l| !l.trim().is_empty())
                .unwrap_or("invalid arguments");
            eprintln!("{line}");
            return ExitCode::from(2);
        }
    };
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
