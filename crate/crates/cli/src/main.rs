use std::fs::{self, File};
use std::io::BufWriter;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::Context;
use clap::{Parser, Subcommand};
use log::{info, warn};
use serde_json::json;
use swarm_core::report::{oracle_check, random_scenario, render_svg, sweep, GeneratorParams};
use swarm_core::sim::{SimConfig, Simulator};
use swarm_core::world::{parse_radius, scenario_warnings};
use swarm_core::{Error, Scenario};

/// Decentralized goal assignment and trajectory planning for agent swarms.
#[derive(Parser)]
#[command(name = "swarm", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Simulate one scenario and write trace.csv and metrics.json.
    Run {
        scenario: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Override the sensing radius (metres or `inf`).
        #[arg(long, value_parser = parse_radius)]
        h: Option<f64>,
        /// Override the tick length, s.
        #[arg(long)]
        dt: Option<f64>,
        /// Also write trajectories.svg.
        #[arg(long)]
        plot: bool,
        /// Also write assignment.jsonl with every assignment-round iteration.
        #[arg(long)]
        assignment_trace: bool,
    },
    /// Run one scenario at several sensing radii and write sweep.csv.
    Sweep {
        scenario: PathBuf,
        /// Comma-separated radii, e.g. `0.5,1.1,inf`.
        #[arg(long, value_delimiter = ',', value_parser = parse_radius, required = true)]
        h: Vec<f64>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Compare the all-seeing decentralized assignment with exhaustive search.
    OracleCheck {
        #[arg(long)]
        n: usize,
        #[arg(long)]
        m: usize,
        /// Number of seeds, starting at 0.
        #[arg(long, default_value_t = 1)]
        seeds: u64,
    },
    /// Write a random scenario.
    Generate {
        #[arg(long)]
        n: usize,
        #[arg(long)]
        m: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, value_parser = parse_radius, default_value = "inf")]
        h: f64,
        #[arg(long)]
        out: PathBuf,
    },
}

/// Failure with the exit code and JSON body reported for it.
struct Failure {
    code: u8,
    body: serde_json::Value,
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let mut body = json!({ "error": e.kind(), "message": e.to_string() });
        if let Error::InvalidScenario(v) = &e {
            body["violations"] = json!(v);
        }
        Failure {
            code: if e.is_input_error() { 2 } else { 3 },
            body,
        }
    }
}

impl From<anyhow::Error> for Failure {
    fn from(e: anyhow::Error) -> Self {
        Failure {
            code: 1,
            body: json!({ "error": "io", "message": format!("{e:#}") }),
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::new().filter_or("SWARM_LOG", "warn")).init();
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Run {
            scenario,
            out,
            h,
            dt,
            plot,
            assignment_trace,
        } => cmd_run(&scenario, &out, h, dt, plot, assignment_trace),
        Command::Sweep { scenario, h, out } => cmd_sweep(&scenario, &h, &out),
        Command::OracleCheck { n, m, seeds } => cmd_oracle(n, m, seeds),
        Command::Generate { n, m, seed, h, out } => cmd_generate(n, m, seed, h, &out),
    };
    match result {
        Ok(code) => code,
        Err(f) => {
            eprintln!("{}", f.body);
            ExitCode::from(f.code)
        }
    }
}

fn load(path: &Path) -> Result<Scenario, Failure> {
    let s = Scenario::load(path)?;
    for w in scenario_warnings(&s) {
        warn!("{w}");
    }
    Ok(s)
}

fn create(path: &Path) -> anyhow::Result<BufWriter<File>> {
    Ok(BufWriter::new(
        File::create(path).with_context(|| format!("creating {}", path.display()))?,
    ))
}

fn cmd_run(
    path: &Path,
    out: &Path,
    h: Option<f64>,
    dt: Option<f64>,
    plot: bool,
    assignment_trace: bool,
) -> Result<ExitCode, Failure> {
    let mut scenario = load(path)?;
    if let Some(h) = h {
        scenario.h = h;
    }
    if let Some(dt) = dt {
        scenario.dt = dt;
    }
    let mut sim = Simulator::new(scenario.clone(), SimConfig::default())?;
    let metrics = sim.run()?;
    let trace = sim.into_trace();

    fs::create_dir_all(out).with_context(|| format!("creating {}", out.display()))?;
    trace.write_csv(create(&out.join("trace.csv"))?)?;
    fs::write(out.join("metrics.json"), metrics.to_json() + "\n").context("writing metrics.json")?;
    if plot {
        fs::write(out.join("trajectories.svg"), render_svg(&scenario, &trace)).context("writing trajectories.svg")?;
    }
    if assignment_trace {
        trace.write_assignment_jsonl(create(&out.join("assignment.jsonl"))?)?;
    }
    info!("wrote results to {}", out.display());
    println!("{}", metrics.to_json());
    Ok(ExitCode::SUCCESS)
}

fn cmd_sweep(path: &Path, hs: &[f64], out: &Path) -> Result<ExitCode, Failure> {
    let scenario = load(path)?;
    let result = sweep(&scenario, hs, &SimConfig::default());
    fs::create_dir_all(out).with_context(|| format!("creating {}", out.display()))?;
    result.write_csv(create(&out.join("sweep.csv"))?)?;
    print!("{}", result.to_csv_string());
    let failed = result.rows.iter().filter(|r| r.status != "ok").count();
    if failed > 0 {
        warn!("{failed} of {} runs failed", result.rows.len());
    }
    Ok(ExitCode::SUCCESS)
}

fn cmd_oracle(n: usize, m: usize, seeds: u64) -> Result<ExitCode, Failure> {
    let mut all_equal = true;
    for seed in 0..seeds {
        let r = oracle_check(n, m, seed)?;
        all_equal &= r.equal;
        println!("{}", serde_json::to_string(&r).expect("report serializes"));
    }
    Ok(if all_equal { ExitCode::SUCCESS } else { ExitCode::from(4) })
}

fn cmd_generate(n: usize, m: usize, seed: u64, h: f64, out: &Path) -> Result<ExitCode, Failure> {
    let p = GeneratorParams {
        h,
        ..GeneratorParams::default()
    };
    let s = random_scenario(n, m, seed, &p);
    fs::write(out, s.to_json() + "\n").with_context(|| format!("writing {}", out.display()))?;
    Ok(ExitCode::SUCCESS)
}
