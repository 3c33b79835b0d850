//! Planar flocking with optic-flow feedback.
//!
//! Each agent is a no-sideslip unicycle. Under the visually-guided law it
//! steers from what it sees of each neighbor (bearing, subtended angle,
//! expansion rate, optic flow) plus its own turn rate and heading. The
//! Cucker-Smale law on true states is the reference it reproduces when
//! sensing is noise-free.

pub mod analysis;
pub mod control;
pub mod error;
pub mod geometry;
pub mod sensing;
pub mod sim;

pub use analysis::{
    detect_convergence, dispersion, final_value_estimate, flow_profile, log_decrement,
    unwrap_angles, DispersionRecord, OscillationEstimate,
};
pub use control::{
    cs_acceleration, cs_control, cs_desired_rates, rates_from_vector, sign_select, yfm_control,
    yfm_desired_rates, yfm_heading_control, yfm_speed_control, ControlInput, DesiredRates,
    SignRule,
};
pub use error::{Error, Result};
pub use geometry::{
    pair_geometry, reflect_to_inertial, subtended_angle, subtended_rate, wrap_angle, AgentState,
    PairGeometry, SwarmParams, Vec2,
};
pub use sensing::{
    noise_bound, optic_flow, sense, synthesize, visibility, NoiseBoundInput, NoiseParams,
    NoiseStream, VisualSignal,
};
pub use sim::{
    euler_step, initial_states, run_scenario, run_scenario_with, run_sweep, run_sweep_parallel,
    HeadingLoop, InitSpec, Mode, SimConfig, SweepAxis, TrajectoryLog,
};
