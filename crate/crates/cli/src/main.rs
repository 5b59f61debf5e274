use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use stinger_core::controller::HaltReason;
use stinger_core::drivetrain::gearbox_output_torque;
use stinger_core::exec::{with_threads, Execution};
use stinger_core::kinematics::{workspace_region, LegId};
use stinger_core::scenario::{load_scenario, Scenario, ScenarioFile};
use stinger_core::simulator::{run_batch, run_step_response, run_tension_test, Outcome, ScenarioRun};

const EXIT_OK: u8 = 0;
const EXIT_CONFIG: u8 = 1;
const EXIT_SAFETY: u8 = 2;
const EXIT_NEGATIVE: u8 = 3;

#[derive(Parser)]
#[command(
    name = "stinger",
    version,
    about = "Planar simulator for a tri-leg self-bracing drilling robot"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct OutputArgs {
    /// Directory for the output files.
    #[arg(long, default_value = "out")]
    out: PathBuf,
    /// Validate and print the resolved scenario without running or writing anything.
    #[arg(long)]
    dry_run: bool,
}

#[derive(Subcommand)]
enum Command {
    /// Run bracing-and-drilling missions; writes log.csv and summary.json.
    Simulate {
        #[arg(required = true)]
        scenarios: Vec<PathBuf>,
        #[command(flatten)]
        output: OutputArgs,
        /// Number of scenarios to run concurrently.
        #[arg(long, default_value_t = 1)]
        jobs: usize,
    },
    /// Sample the reachable body workspace; writes workspace.csv and workspace.json.
    Workspace {
        scenario: PathBuf,
        #[command(flatten)]
        output: OutputArgs,
    },
    /// Print gearbox output torque T_in × ratio × efficiency in N·m.
    Torque {
        #[arg(allow_hyphen_values = true)]
        t_in: f64,
        #[arg(allow_hyphen_values = true)]
        ratio: f64,
        #[arg(allow_hyphen_values = true)]
        eta: f64,
    },
    /// Step a single revolute joint; writes step.csv and step.json.
    StepResponse {
        scenario: PathBuf,
        #[command(flatten)]
        output: OutputArgs,
    },
    /// Brace in a frame, lift the fixture and check support; writes tension.json.
    TensionTest {
        scenario: PathBuf,
        #[command(flatten)]
        output: OutputArgs,
    },
    /// Print a complete scenario document with every default filled in.
    Schema,
}

fn fail(msg: impl std::fmt::Display) -> u8 {
    eprintln!("error: {msg}");
    EXIT_CONFIG
}

fn load(path: &Path) -> Result<Scenario, u8> {
    load_scenario(path).map_err(|e| fail(format!("{}: {e}", path.display())))
}

fn write(dir: &Path, name: &str, contents: &str) -> Result<(), u8> {
    fs::create_dir_all(dir).map_err(|e| fail(format!("{}: {e}", dir.display())))?;
    let path = dir.join(name);
    fs::write(&path, contents).map_err(|e| fail(format!("{}: {e}", path.display())))
}

fn outcome_code(outcome: Outcome) -> u8 {
    match outcome {
        Outcome::DurationElapsed | Outcome::Halted(HaltReason::Complete) => EXIT_OK,
        Outcome::Halted(HaltReason::SafetyOverload | HaltReason::LimitSwitch) => EXIT_SAFETY,
        Outcome::Halted(HaltReason::ExternalStop) => EXIT_NEGATIVE,
    }
}

/// Config errors outrank safety halts, which outrank negative results.
fn worst(a: u8, b: u8) -> u8 {
    let rank = |c: u8| match c {
        EXIT_CONFIG => 3,
        EXIT_SAFETY => 2,
        EXIT_NEGATIVE => 1,
        _ => 0,
    };
    if rank(b) > rank(a) {
        b
    } else {
        a
    }
}

fn write_run(dir: &Path, run: &ScenarioRun) -> Result<(), u8> {
    write(dir, "log.csv", &run.log_csv())?;
    write(dir, "summary.json", &run.summary.to_json())
}

fn simulate(paths: &[PathBuf], output: &OutputArgs, jobs: usize) -> u8 {
    let mut scenarios = Vec::new();
    for p in paths {
        match load(p) {
            Ok(s) => scenarios.push(s),
            Err(code) => return code,
        }
    }
    if output.dry_run {
        for s in &scenarios {
            print!("{}", s.file.to_json());
        }
        return EXIT_OK;
    }
    let inputs: Vec<_> = scenarios.iter().map(|s| s.inputs.clone()).collect();
    let exec = if jobs > 1 {
        Execution::Parallel
    } else {
        Execution::Sequential
    };
    let results = with_threads(jobs, || run_batch(&inputs, exec));

    let mut code = EXIT_OK;
    for (path, result) in paths.iter().zip(results) {
        let run = match result {
            Ok(run) => run,
            Err(e) => {
                code = worst(code, fail(format!("{}: {e}", path.display())));
                continue;
            }
        };
        let dir = if paths.len() == 1 {
            output.out.clone()
        } else {
            output.out.join(path.file_stem().unwrap_or_default())
        };
        if let Err(c) = write_run(&dir, &run) {
            code = worst(code, c);
            continue;
        }
        println!("{}: {}", run.summary.scenario, run.outcome.token());
        code = worst(code, outcome_code(run.outcome));
    }
    code
}

fn workspace(path: &Path, output: &OutputArgs) -> Result<u8, u8> {
    let s = load(path)?;
    let Some(spec) = s.workspace else {
        return Err(fail(format!("{}: workspace.anchors_m: missing", path.display())));
    };
    if output.dry_run {
        print!("{}", s.file.to_json());
        return Ok(EXIT_OK);
    }
    let region = workspace_region(&spec.anchors, &s.inputs.robot, spec.resolution)
        .map_err(|e| fail(format!("{}: {e}", path.display())))?;
    let sidecar = serde_json::to_string_pretty(&region.sidecar()).expect("sidecar serializes") + "\n";
    write(&output.out, "workspace.csv", &region.to_csv())?;
    write(&output.out, "workspace.json", &sidecar)?;
    println!("{}: {}", s.inputs.name, region.classification.as_str());
    Ok(EXIT_OK)
}

fn step_response(path: &Path, output: &OutputArgs) -> Result<u8, u8> {
    let s = load(path)?;
    let Some(step) = s.step else {
        return Err(fail(format!("{}: step.target_rad: missing", path.display())));
    };
    if !s.inputs.robot.rotation_ok(LegId::Left, step.target) {
        return Err(fail(format!(
            "{}: step.target_rad: {} is outside the joint limits",
            path.display(),
            step.target
        )));
    }
    if output.dry_run {
        print!("{}", s.file.to_json());
        return Ok(EXIT_OK);
    }
    let r = run_step_response(step.target, &s.inputs.drivetrain, s.inputs.sim.dt, step.duration)
        .map_err(|e| fail(format!("{}: {e}", path.display())))?;
    write(&output.out, "step.csv", &r.to_csv())?;
    write(&output.out, "step.json", &r.to_json())?;
    match r.rise_time_s {
        Some(t) => println!("{}: rise time {t} s", s.inputs.name),
        None => println!("{}: target not reached", s.inputs.name),
    }
    Ok(EXIT_OK)
}

fn tension_test(path: &Path, output: &OutputArgs) -> Result<u8, u8> {
    let s = load(path)?;
    if output.dry_run {
        print!("{}", s.file.to_json());
        return Ok(EXIT_OK);
    }
    let r = run_tension_test(&s.inputs, &s.tension).map_err(|e| fail(format!("{}: {e}", path.display())))?;
    write(&output.out, "tension.json", &r.to_json())?;
    println!(
        "{}: supported {} (max drift {} m)",
        s.inputs.name, r.supported, r.max_drift_m
    );
    Ok(if r.supported { EXIT_OK } else { EXIT_NEGATIVE })
}

fn run(cli: Cli) -> u8 {
    let result = match &cli.command {
        Command::Simulate {
            scenarios,
            output,
            jobs,
        } => Ok(simulate(scenarios, output, *jobs)),
        Command::Workspace { scenario, output } => workspace(scenario, output),
        Command::Torque { t_in, ratio, eta } => match gearbox_output_torque(*t_in, *ratio, *eta) {
            Ok(t) => {
                println!("{t:.6}");
                Ok(EXIT_OK)
            }
            Err(e) => Err(fail(e)),
        },
        Command::StepResponse { scenario, output } => step_response(scenario, output),
        Command::TensionTest { scenario, output } => tension_test(scenario, output),
        Command::Schema => {
            print!("{}", ScenarioFile::default_document().to_json());
            Ok(EXIT_OK)
        }
    };
    result.unwrap_or_else(|code| code)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_CONFIG } else { EXIT_OK };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    ExitCode::from(run(cli))
}
