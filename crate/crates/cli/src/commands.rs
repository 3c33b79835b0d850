use std::fs;
use std::io::Write;
use std::path::PathBuf;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use optiflock::{
    detect_convergence, final_value_estimate, flow_profile, initial_states, log_decrement,
    noise_bound, run_scenario, run_sweep_parallel, unwrap_angles, NoiseBoundInput,
    OscillationEstimate, SimConfig, SweepAxis, TrajectoryLog,
};

use crate::config::{apply_override, config_from_table, parse_table};
use crate::output::{
    fmt_sig6, oscillation_csv, profile_csv, read_trajectory, summary_csv, write_file, write_run,
    SummaryRow,
};

/// Fraction of the initial spreads below which a sweep run counts as converged.
pub const CONVERGENCE_TOL: f64 = 0.01;

#[derive(Debug, Parser)]
#[command(
    name = "optiflock",
    version,
    about = "Planar flocking with optic-flow feedback"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args, Clone, Default)]
pub struct Common {
    /// Scenario file (TOML). Defaults apply when omitted.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Output directory.
    #[arg(long, global = true, default_value = "out")]
    pub out: PathBuf,
    /// Override a config key, e.g. `--set k=0.2`. Repeatable.
    #[arg(long = "set", value_name = "KEY=VALUE", global = true)]
    pub overrides: Vec<String>,
    /// Seed for initial conditions and noise. Applied after the file and overrides.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Simulate one scenario; writes trajectory.csv and metrics.csv.
    Run {
        #[command(flatten)]
        common: Common,
    },
    /// Simulate one scenario per value of a parameter.
    Sweep {
        #[command(flatten)]
        common: Common,
        /// Parameter to vary: H, k, L, L_e, beta, sigma_q, sigma_a or Gamma.
        #[arg(long)]
        axis: String,
        /// Comma-separated values.
        #[arg(long, value_delimiter = ',', num_args = 1.., allow_negative_numbers = true)]
        values: Vec<f64>,
        /// Maximum concurrent runs.
        #[arg(long, default_value_t = 1)]
        jobs: usize,
    },
    /// Equivalent damping and natural frequency of one agent's heading.
    Analyze {
        #[command(flatten)]
        common: Common,
        /// Existing trajectory.csv; the scenario is simulated when omitted.
        #[arg(long)]
        input: Option<PathBuf>,
        #[arg(long, default_value_t = 0)]
        agent: usize,
    },
    /// Optic-flow magnitude around one agent.
    Flowfield {
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value_t = 0)]
        agent: usize,
        /// Bin width in degrees.
        #[arg(long, default_value_t = 1.0)]
        resolution: f64,
        /// Simulated time of the snapshot, seconds.
        #[arg(long, default_value_t = 0.0)]
        time: f64,
    },
    /// Bound on the optic-flow noise that keeps the flock together.
    Noisebound {
        /// Number of neighbors.
        #[arg(long)]
        nbar: f64,
        /// Occlusion half-angle, radians.
        #[arg(long, allow_negative_numbers = true)]
        gamma: f64,
        /// Minimum separation.
        #[arg(long)]
        rho: f64,
    },
}

/// Config file, then `--set` overrides in order, then `--seed`.
pub fn load_config(common: &Common) -> Result<SimConfig> {
    let mut table = match &common.config {
        Some(path) => {
            let text = fs::read_to_string(path)
                .with_context(|| format!("cannot read config {}", path.display()))?;
            parse_table(&text).with_context(|| path.display().to_string())?
        }
        None => Default::default(),
    };
    for spec in &common.overrides {
        apply_override(&mut table, spec)?;
    }
    let mut config = config_from_table(&table)?;
    if let Some(seed) = common.seed {
        config = config.with_seed(seed);
    }
    Ok(config)
}

/// Damping estimate of one agent's unwrapped heading about its final value.
pub fn heading_oscillation(
    times: &[f64],
    states: &[Vec<optiflock::AgentState>],
    agent: usize,
) -> Result<OscillationEstimate> {
    let n = states.first().map_or(0, Vec::len);
    if agent >= n {
        bail!("agent {agent} out of range for {n} agents");
    }
    if times.len() < 2 {
        return Ok(OscillationEstimate::default());
    }
    let heading: Vec<f64> = states.iter().map(|s| s[agent].theta).collect();
    let heading = unwrap_angles(&heading);
    let dt = times[1] - times[0];
    Ok(log_decrement(
        &heading,
        dt,
        times[0],
        final_value_estimate(&heading),
    ))
}

pub fn summarize(value: f64, log: &TrajectoryLog) -> Result<SummaryRow> {
    let last = log.final_metrics().context("empty log")?;
    Ok(SummaryRow {
        value,
        conv_time: detect_convergence(&log.metrics, CONVERGENCE_TOL),
        final_speed_spread: last.speed_spread,
        final_heading_spread: last.heading_spread,
        n_peaks: heading_oscillation(&log.times, &log.states, 0)?
            .peak_times
            .len(),
    })
}

/// Subdirectory name for one sweep value; sortable and filesystem-safe.
pub fn sweep_dir(axis: &str, index: usize, value: f64) -> String {
    format!("{index:03}_{axis}_{value}")
}

/// Run a command, writing results under `--out`. `stdout` receives printed values.
pub fn execute(command: &Command, stdout: &mut dyn Write) -> Result<()> {
    match command {
        Command::Run { common } => {
            let log = run_scenario(&load_config(common)?)?;
            write_run(&common.out, &log)
        }
        Command::Sweep {
            common,
            axis,
            values,
            jobs,
        } => {
            if values.is_empty() {
                bail!("--values needs at least one value");
            }
            let parsed: SweepAxis = axis.parse()?;
            let base = load_config(common)?;
            let logs = run_sweep_parallel(&base, axis, values, *jobs)?;
            let mut rows = Vec::with_capacity(logs.len());
            for (k, (log, &value)) in logs.iter().zip(values).enumerate() {
                write_run(&common.out.join(sweep_dir(parsed.name(), k, value)), log)?;
                rows.push(summarize(value, log)?);
            }
            write_file(&common.out, "sweep_summary.csv", summary_csv(&rows))
        }
        Command::Analyze {
            common,
            input,
            agent,
        } => {
            let (times, states) = match input {
                Some(path) => read_trajectory(
                    &fs::read_to_string(path)
                        .with_context(|| format!("cannot read {}", path.display()))?,
                )?,
                None => {
                    let log = run_scenario(&load_config(common)?)?;
                    (log.times, log.states)
                }
            };
            let est = heading_oscillation(&times, &states, *agent)?;
            write_file(&common.out, "oscillation.csv", oscillation_csv(&est))
        }
        Command::Flowfield {
            common,
            agent,
            resolution,
            time,
        } => {
            let mut config = load_config(common)?;
            let swarm = if *time > 0.0 {
                config.t_max = *time;
                run_scenario(&config)?.final_states().to_vec()
            } else {
                initial_states(&config)?
            };
            let profile = flow_profile(&swarm, *agent, resolution.to_radians(), &config.params)?;
            write_file(&common.out, "profile.csv", profile_csv(&profile))
        }
        Command::Noisebound { nbar, gamma, rho } => {
            let q = noise_bound(&NoiseBoundInput {
                n_bar: *nbar,
                gamma: *gamma,
                rho: *rho,
            })?;
            writeln!(stdout, "{}", fmt_sig6(q))?;
            Ok(())
        }
    }
}
