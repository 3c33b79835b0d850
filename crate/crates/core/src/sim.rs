//! Scenario definition, forward-Euler integration of the unicycle model,
//! and deterministic scenario / sweep runners.

use std::f64::consts::PI;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::analysis::{dispersion, DispersionRecord};
use crate::control::{cs_desired_rates, yfm_desired_rates, ControlInput, DesiredRates};
use crate::error::{ensure, Error, Result};
use crate::geometry::{wrap_angle_unchecked, AgentState, SwarmParams};
use crate::sensing::{sense, NoiseParams, NoiseStream};

/// Above this many agents a step computes controls on the rayon pool.
pub const PARALLEL_AGENT_THRESHOLD: usize = 64;

const MAX_PLACEMENT_ATTEMPTS: usize = 100_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Mode {
    /// Visually-guided law fed by synthesized (and possibly noisy) signals.
    #[default]
    Yfm,
    /// Cucker-Smale on true states.
    CsOracle,
}

impl FromStr for Mode {
    type Err = String;
    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s.to_ascii_lowercase().as_str() {
            "yfm" => Ok(Mode::Yfm),
            "cs" | "cs-oracle" | "cs_oracle" => Ok(Mode::CsOracle),
            other => Err(format!(
                "unknown mode `{other}` (expected yfm or cs-oracle)"
            )),
        }
    }
}

/// How the desired heading rate reaches the heading.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum HeadingLoop {
    /// `ω̇ = -k (ω - θ̇*)`.
    #[default]
    SecondOrder,
    /// `ω := θ̇*` every step. Isolates the sensing path from the heading loop.
    Direct,
}

/// Initial-condition distribution.
#[derive(Debug, Clone, PartialEq)]
pub struct InitSpec {
    /// Positions are uniform in `[0, box_size]²`.
    pub box_size: f64,
    /// Rejection-sampling minimum pairwise distance.
    pub min_spacing: f64,
    pub speed_min: f64,
    pub speed_max: f64,
    pub heading_min: f64,
    pub heading_max: f64,
    /// Use these states verbatim instead of sampling.
    pub explicit: Option<Vec<AgentState>>,
}

impl Default for InitSpec {
    fn default() -> Self {
        Self {
            box_size: 10.0,
            min_spacing: 0.5,
            speed_min: 0.5,
            speed_max: 2.0,
            heading_min: -PI,
            heading_max: PI,
            explicit: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimConfig {
    pub n_agents: usize,
    pub mode: Mode,
    pub params: SwarmParams,
    pub noise: NoiseParams,
    pub dt: f64,
    pub t_max: f64,
    pub init: InitSpec,
    /// Seeds the initial conditions.
    pub seed: u64,
    pub heading_loop: HeadingLoop,
}

impl Default for SimConfig {
    fn default() -> Self {
        Self {
            n_agents: 5,
            mode: Mode::Yfm,
            params: SwarmParams::default(),
            noise: NoiseParams::noiseless(0),
            dt: 0.01,
            t_max: 200.0,
            init: InitSpec::default(),
            seed: 0,
            heading_loop: HeadingLoop::SecondOrder,
        }
    }
}

impl SimConfig {
    /// Seed both the initial conditions and the measurement noise.
    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self.noise.seed = seed;
        self
    }

    pub fn n_steps(&self) -> usize {
        (self.t_max / self.dt).round() as usize
    }

    pub fn validate(&self) -> Result<()> {
        self.params.validate()?;
        self.noise.validate()?;
        ensure(self.dt > 0.0 && self.dt.is_finite(), "dt", "must be > 0")?;
        ensure(self.t_max >= self.dt, "t_max", "must be >= dt")?;
        ensure(self.n_agents >= 1, "n_agents", "must be >= 1")?;
        let init = &self.init;
        match &init.explicit {
            Some(states) => {
                ensure(
                    states.len() == self.n_agents,
                    "initial_states",
                    &format!("expected {} states, got {}", self.n_agents, states.len()),
                )?;
                ensure(
                    states.iter().all(|s| s.v > 0.0),
                    "initial_states",
                    "speeds must be > 0",
                )?;
            }
            None => {
                ensure(init.box_size > 0.0, "box_size", "must be > 0")?;
                ensure(init.min_spacing >= 0.0, "min_spacing", "must be >= 0")?;
                ensure(init.speed_min > 0.0, "speed_min", "must be > 0")?;
                ensure(
                    init.speed_max >= init.speed_min,
                    "speed_max",
                    "must be >= speed_min",
                )?;
                ensure(
                    init.heading_max >= init.heading_min,
                    "heading_max",
                    "must be >= heading_min",
                )?;
            }
        }
        Ok(())
    }
}

/// Draw the initial swarm from the config seed.
pub fn initial_states(config: &SimConfig) -> Result<Vec<AgentState>> {
    if let Some(states) = &config.init.explicit {
        return Ok(states
            .iter()
            .map(|s| AgentState {
                theta: wrap_angle_unchecked(s.theta),
                ..*s
            })
            .collect());
    }
    let init = &config.init;
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    // keep initial conditions off the keystreams used by the noise cells
    rng.set_stream(u64::MAX);

    let mut positions: Vec<(f64, f64)> = Vec::with_capacity(config.n_agents);
    while positions.len() < config.n_agents {
        let mut placed = false;
        for _ in 0..MAX_PLACEMENT_ATTEMPTS {
            let p = (
                rng.random::<f64>() * init.box_size,
                rng.random::<f64>() * init.box_size,
            );
            let clear = positions
                .iter()
                .all(|q| (p.0 - q.0).hypot(p.1 - q.1) >= init.min_spacing);
            if clear {
                positions.push(p);
                placed = true;
                break;
            }
        }
        if !placed {
            return Err(Error::Invalid {
                field: "min_spacing",
                constraint: format!(
                    "cannot place {} agents in a {} m box",
                    config.n_agents, init.box_size
                ),
            });
        }
    }
    Ok(positions
        .into_iter()
        .map(|(x, y)| {
            let v = init.speed_min + rng.random::<f64>() * (init.speed_max - init.speed_min);
            let th = init.heading_min + rng.random::<f64>() * (init.heading_max - init.heading_min);
            AgentState::new(x, y, v, wrap_angle_unchecked(th), 0.0)
        })
        .collect())
}

/// One explicit forward-Euler step of the unicycle model.
///
/// All derivatives use the pre-step state. A speed driven below zero is
/// re-expressed as the same velocity vector with positive speed and the
/// heading turned by π.
pub fn euler_step(swarm: &[AgentState], controls: &[ControlInput], dt: f64) -> Vec<AgentState> {
    assert_eq!(swarm.len(), controls.len(), "one control per agent");
    swarm
        .iter()
        .zip(controls)
        .map(|(s, u)| {
            let (sin, cos) = s.theta.sin_cos();
            let mut v = s.v + u.u_v * dt;
            let mut theta = s.theta + s.omega * dt;
            if v < 0.0 {
                v = -v;
                theta += PI;
            }
            AgentState {
                x: s.x + s.v * cos * dt,
                y: s.y + s.v * sin * dt,
                v,
                theta: wrap_angle_unchecked(theta),
                omega: s.omega + u.u_omega * dt,
            }
        })
        .collect()
}

/// Time-indexed record of a run.
#[derive(Debug, Clone, PartialEq)]
pub struct TrajectoryLog {
    pub dt: f64,
    pub times: Vec<f64>,
    pub states: Vec<Vec<AgentState>>,
    pub metrics: Vec<DispersionRecord>,
}

impl TrajectoryLog {
    fn with_capacity(dt: f64, n: usize) -> Self {
        Self {
            dt,
            times: Vec::with_capacity(n),
            states: Vec::with_capacity(n),
            metrics: Vec::with_capacity(n),
        }
    }

    fn push(&mut self, t: f64, states: Vec<AgentState>) {
        let (speed_spread, heading_spread) = dispersion(&states);
        self.metrics.push(DispersionRecord {
            t,
            speed_spread,
            heading_spread,
        });
        self.times.push(t);
        self.states.push(states);
    }

    pub fn final_states(&self) -> &[AgentState] {
        self.states.last().map(Vec::as_slice).unwrap_or(&[])
    }

    pub fn final_metrics(&self) -> Option<&DispersionRecord> {
        self.metrics.last()
    }

    /// Time series of one agent's state variable.
    pub fn series(&self, agent: usize, f: impl Fn(&AgentState) -> f64) -> Vec<f64> {
        self.states.iter().map(|s| f(&s[agent])).collect()
    }
}

/// Desired rates for every agent over one frozen snapshot.
fn desired_rates(
    config: &SimConfig,
    swarm: &[AgentState],
    step: usize,
    parallel: bool,
) -> Result<Vec<DesiredRates>> {
    let n = swarm.len();
    let per_agent = |i: usize| -> Result<DesiredRates> {
        let si = &swarm[i];
        match config.mode {
            Mode::Yfm => {
                let mut rng = NoiseStream::for_cell(config.noise.seed, i, step, n - 1);
                let signals = sense(swarm, i, &config.params, &config.noise, &mut rng)?;
                Ok(yfm_desired_rates(
                    &signals,
                    si.v,
                    si.omega,
                    si.theta,
                    &config.params,
                ))
            }
            Mode::CsOracle => cs_desired_rates(swarm, i, &config.params),
        }
    };
    if parallel {
        (0..n).into_par_iter().map(per_agent).collect()
    } else {
        (0..n).map(per_agent).collect()
    }
}

/// Run one scenario, choosing parallel control evaluation for large swarms.
pub fn run_scenario(config: &SimConfig) -> Result<TrajectoryLog> {
    run_scenario_with(config, config.n_agents >= PARALLEL_AGENT_THRESHOLD)
}

/// Run one scenario with explicit control over per-step parallelism.
/// Serial and parallel runs produce identical logs.
pub fn run_scenario_with(config: &SimConfig, parallel: bool) -> Result<TrajectoryLog> {
    config.validate()?;
    let n_steps = config.n_steps();
    let mut swarm = initial_states(config)?;
    let mut log = TrajectoryLog::with_capacity(config.dt, n_steps + 1);
    log.push(0.0, swarm.clone());

    let k = config.params.heading_gain;
    for step in 0..n_steps {
        let t = step as f64 * config.dt;
        let rates = desired_rates(config, &swarm, step, parallel).map_err(|e| match e {
            Error::CoincidentAgents { i, j } => Error::Collision { step, t, i, j },
            other => other,
        })?;
        let controls: Vec<ControlInput> = match config.heading_loop {
            HeadingLoop::SecondOrder => swarm
                .iter()
                .zip(&rates)
                .map(|(s, r)| ControlInput {
                    u_v: r.v_dot,
                    u_omega: -k * (s.omega - r.theta_dot),
                })
                .collect(),
            HeadingLoop::Direct => {
                for (s, r) in swarm.iter_mut().zip(&rates) {
                    s.omega = r.theta_dot;
                }
                rates
                    .iter()
                    .map(|r| ControlInput {
                        u_v: r.v_dot,
                        u_omega: 0.0,
                    })
                    .collect()
            }
        };
        swarm = euler_step(&swarm, &controls, config.dt);
        log.push((step + 1) as f64 * config.dt, swarm.clone());
    }
    Ok(log)
}

/// Parameter a sweep varies.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SweepAxis {
    Coupling,
    HeadingGain,
    Length,
    AssumedLength,
    Beta,
    SigmaQ,
    SigmaA,
    Occlusion,
}

impl SweepAxis {
    pub const NAMES: [&'static str; 8] =
        ["H", "k", "L", "L_e", "beta", "sigma_q", "sigma_a", "Gamma"];

    pub fn name(self) -> &'static str {
        match self {
            SweepAxis::Coupling => "H",
            SweepAxis::HeadingGain => "k",
            SweepAxis::Length => "L",
            SweepAxis::AssumedLength => "L_e",
            SweepAxis::Beta => "beta",
            SweepAxis::SigmaQ => "sigma_q",
            SweepAxis::SigmaA => "sigma_a",
            SweepAxis::Occlusion => "Gamma",
        }
    }

    /// Copy of `base` with this parameter set to `value`.
    pub fn apply(self, base: &SimConfig, value: f64) -> SimConfig {
        let mut c = base.clone();
        let p = &mut c.params;
        match self {
            SweepAxis::Coupling => p.coupling = value,
            SweepAxis::HeadingGain => p.heading_gain = value,
            SweepAxis::Length => p.length = value,
            SweepAxis::AssumedLength => p.assumed_length = Some(value),
            SweepAxis::Beta => p.beta = value,
            SweepAxis::SigmaQ => c.noise.sigma_q = value,
            SweepAxis::SigmaA => c.noise.sigma_a = value,
            SweepAxis::Occlusion => p.occlusion = value,
        }
        c
    }
}

impl FromStr for SweepAxis {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        Ok(match s {
            "H" => SweepAxis::Coupling,
            "k" => SweepAxis::HeadingGain,
            "L" => SweepAxis::Length,
            "L_e" => SweepAxis::AssumedLength,
            "beta" => SweepAxis::Beta,
            "sigma_q" => SweepAxis::SigmaQ,
            "sigma_a" => SweepAxis::SigmaA,
            "Gamma" => SweepAxis::Occlusion,
            other => return Err(Error::UnknownAxis(other.to_string())),
        })
    }
}

/// One run per value with everything else, seed included, held fixed.
pub fn run_sweep(base: &SimConfig, axis: &str, values: &[f64]) -> Result<Vec<TrajectoryLog>> {
    let axis: SweepAxis = axis.parse()?;
    values
        .iter()
        .map(|&v| run_scenario(&axis.apply(base, v)))
        .collect()
}

/// [`run_sweep`] with runs spread over at most `jobs` threads.
pub fn run_sweep_parallel(
    base: &SimConfig,
    axis: &str,
    values: &[f64],
    jobs: usize,
) -> Result<Vec<TrajectoryLog>> {
    let axis: SweepAxis = axis.parse()?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs.max(1))
        .build()
        .map_err(|e| Error::Invalid {
            field: "jobs",
            constraint: e.to_string(),
        })?;
    pool.install(|| {
        values
            .par_iter()
            .map(|&v| run_scenario(&axis.apply(base, v)))
            .collect()
    })
}
