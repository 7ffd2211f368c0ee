use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use matweight::verify::VerifyCounts;
use matweight_cli::error::CliError;
use matweight_cli::report::{write_report, Report};
use matweight_cli::scenario::{LoadedScenario, Scenario, Task};
use matweight_cli::tasks::{run_task, Timings};

/// Matrix-weighted function spaces: weights, John ellipsoids, norms,
/// compactness moduli and certified ε-nets.
#[derive(Debug, Parser)]
#[command(name = "matweight", version)]
struct Cli {
    /// Report path; stdout when absent. Curves and timings are written next to it.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Worker threads (default: all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Overrides the scenario seed.
    #[arg(long, global = true)]
    seed: Option<u64>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Runs the task named in a scenario file.
    Run { scenario: PathBuf },
    /// A_p constant of the weight over a finite cube family.
    ApConstant { scenario: Option<PathBuf> },
    /// John ellipsoid of a norm on C^d with a sandwich check.
    John { scenario: Option<PathBuf> },
    /// Norms of the family members.
    Norm { scenario: Option<PathBuf> },
    /// Boundedness, tail and equicontinuity moduli.
    Moduli { scenario: Option<PathBuf> },
    /// Certified ε-nets.
    Net { scenario: Option<PathBuf> },
    /// Certifies given centers as an ε-net.
    Certify { scenario: Option<PathBuf> },
    /// Checks that the moduli shrink with ε for a totally bounded family.
    Necessity { scenario: Option<PathBuf> },
    /// Runs the randomized verification suites.
    VerifyLemmas {
        /// Instances per suite; suite defaults when absent.
        #[arg(long)]
        count: Option<usize>,
    },
}

fn load(task: Task, path: Option<&Path>) -> Result<LoadedScenario, CliError> {
    match path {
        Some(p) => {
            let mut l = LoadedScenario::from_path(p)?;
            l.scenario.task = task;
            Ok(l)
        }
        None => Ok(LoadedScenario::from_scenario(Scenario::shorthand(task))),
    }
}

fn scenario(cmd: &Command) -> Result<LoadedScenario, CliError> {
    match cmd {
        Command::Run { scenario } => LoadedScenario::from_path(scenario),
        Command::ApConstant { scenario } => load(Task::ApConstant, scenario.as_deref()),
        Command::John { scenario } => load(Task::John, scenario.as_deref()),
        Command::Norm { scenario } => load(Task::Norm, scenario.as_deref()),
        Command::Moduli { scenario } => load(Task::Moduli, scenario.as_deref()),
        Command::Net { scenario } => load(Task::Net, scenario.as_deref()),
        Command::Certify { scenario } => load(Task::Certify, scenario.as_deref()),
        Command::Necessity { scenario } => load(Task::Necessity, scenario.as_deref()),
        Command::VerifyLemmas { count } => {
            let mut s = Scenario::shorthand(Task::VerifyLemmas);
            s.verify = Some(count.map(VerifyCounts::uniform).unwrap_or_default());
            Ok(LoadedScenario::from_scenario(s))
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(t) = cli.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(t).build_global() {
            eprintln!("matweight: {e}");
            return ExitCode::from(1);
        }
    }
    let mut loaded = match scenario(&cli.command).and_then(|l| l.validate().map(|_| l)) {
        Ok(l) => l,
        Err(e) => {
            eprintln!("matweight: {e}");
            return ExitCode::from(1);
        }
    };
    if let Some(seed) = cli.seed {
        loaded.scenario.seed = seed;
    }
    let mut timings = Timings::default();
    let result = run_task(&loaded, &mut timings);
    if let Err(e) = &result {
        eprintln!("matweight: {e}");
    }
    let report = Report::new(&loaded.scenario, result);
    if let Err(e) = write_report(&report, &timings, cli.out.as_deref()) {
        eprintln!("matweight: {e}");
        return ExitCode::from(1);
    }
    ExitCode::from(report.status.exit_code() as u8)
}
