use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use triflap::config::{ScenarioConfig, PRESETS};
use triflap::error::Error;
use triflap::mission::{ControllerKind, Termination};
use triflap::scenario::{run_scenario, write_outputs};

/// Scenario runner for the triple-flapping-wing simulator.
#[derive(Parser)]
#[command(name = "triflap", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a scenario and write telemetry.csv, metrics.json and summary.json.
    Run(RunArgs),
    /// Load and check a scenario without running it.
    Validate {
        /// Scenario file or built-in preset name.
        #[arg(long)]
        config: String,
    },
    /// List the built-in presets.
    List,
}

#[derive(clap::Args)]
struct RunArgs {
    /// Scenario file or built-in preset name.
    #[arg(long)]
    config: String,
    /// Output directory (overrides TRIFLAP_OUT_DIR and the config).
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    /// Simulated time limit (s).
    #[arg(long)]
    duration: Option<f64>,
    /// Physics step (s).
    #[arg(long)]
    dt: Option<f64>,
    #[arg(long, value_parser = ["se3", "pid"])]
    controller: Option<String>,
    /// Print nothing on success.
    #[arg(long)]
    quiet: bool,
}

fn run(args: RunArgs) -> Result<i32, Error> {
    let mut cfg = ScenarioConfig::load_or_preset(&args.config)?;
    if let Some(seed) = args.seed {
        cfg.seed = seed;
    }
    if let Some(d) = args.duration {
        cfg.duration = Some(d);
    }
    if let Some(dt) = args.dt {
        cfg.sim.dt_physics = dt;
    }
    if let Some(c) = args.controller {
        cfg.controller = c.parse::<ControllerKind>().expect("clap restricts the value");
    }
    let result = run_scenario(&cfg)?;
    let dir = cfg.output_dir(args.out.as_deref());
    write_outputs(&dir, &cfg, &result)?;

    let o = &result.outcome;
    let code = match &o.termination {
        Termination::Failed(e) => {
            eprintln!("mission failed at t = {:.2} s: {e}", o.final_time);
            1
        }
        _ => 0,
    };
    if !args.quiet {
        let m = &result.metrics;
        let modes: Vec<String> = o.mode_sequence().iter().map(|m| m.to_string()).collect();
        println!(
            "{} [{}] {} at t = {:.2} s, phases {}/{}",
            cfg.name,
            cfg.controller,
            o.termination.label(),
            o.final_time,
            o.phases_completed,
            cfg.mission.phases.len()
        );
        println!("  modes: {}", modes.join(" -> "));
        println!(
            "  roll/pitch RMSE: {:.3} / {:.3} deg",
            m.roll_rmse_deg, m.pitch_rmse_deg
        );
        if let Some(e) = m.position_rmse_m {
            println!("  position RMSE: {:.4} m", e);
        }
        if let Some(e) = m.cross_track_mean_m {
            println!("  mean cross-track: {:.4} m", e);
        }
        if let Some(e) = m.endurance_s {
            println!("  endurance: {:.1} s", e);
        }
        println!("  output: {}", dir.display());
    }
    Ok(code)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Run(args) => run(args),
        Command::Validate { config } => ScenarioConfig::load_or_preset(&config)
            .map(|cfg| {
                println!("OK {}", cfg.name);
                0
            })
            .map_err(Error::from),
        Command::List => {
            for (name, text) in PRESETS {
                let desc = ScenarioConfig::from_toml(text)
                    .map(|c| c.description)
                    .unwrap_or_default();
                println!("{name:<22} {desc}");
            }
            Ok(0)
        }
    };
    match result {
        Ok(code) => ExitCode::from(code as u8),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
