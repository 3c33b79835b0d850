//! Control inputs: the perfect-information Cucker-Smale law and its
//! visually-guided counterpart, which uses only bearing, subtended angle,
//! expansion rate, optic flow and the agent's own turn rate.

use std::f64::consts::FRAC_PI_2;

use crate::error::{Error, Result};
use crate::geometry::{wrap_angle_unchecked, AgentState, SwarmParams, Vec2};
use crate::sensing::VisualSignal;

/// Commands fed to the unicycle dynamics.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct ControlInput {
    /// Speed rate, m/s².
    pub u_v: f64,
    /// Turn acceleration, rad/s².
    pub u_omega: f64,
}

/// Desired speed and heading rates.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct DesiredRates {
    pub v_dot: f64,
    pub theta_dot: f64,
}

/// How the expansion term `(1 + cot²α) α̇` is signed in the visual law.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum SignRule {
    /// Always negative, so the term reproduces the range rate
    /// `ṙ = -(1 + cot²α) L α̇`. This is the sign under which the visual
    /// law coincides with Cucker-Smale.
    #[default]
    RangeRate,
    /// The quadrant switch of [`sign_select`] on `θ_i + γ_ij`.
    Quadrant,
}

impl SignRule {
    pub fn sign(self, theta_i: f64, gamma_ij: f64) -> f64 {
        match self {
            SignRule::RangeRate => -1.0,
            SignRule::Quadrant => sign_select(theta_i, gamma_ij),
        }
    }
}

/// Cucker-Smale velocity rate `Σ_j H (v_j - v_i) / (σ² + r_ij²)^β`.
pub fn cs_acceleration(
    swarm: &[AgentState],
    i: usize,
    coupling: f64,
    beta: f64,
    sigma: f64,
) -> Result<Vec2> {
    let si = swarm.get(i).ok_or(Error::AgentIndex {
        index: i,
        len: swarm.len(),
    })?;
    let vi = si.velocity();
    let sigma2 = sigma * sigma;
    let mut acc = Vec2::ZERO;
    for (j, sj) in swarm.iter().enumerate() {
        if j == i {
            continue;
        }
        let d = sj.position() - si.position();
        let r2 = d.dot(d);
        if r2 == 0.0 {
            return Err(Error::CoincidentAgents { i, j });
        }
        acc += (sj.velocity() - vi) * (coupling / (sigma2 + r2).powf(beta));
    }
    Ok(acc)
}

/// Project a velocity-rate vector onto speed and heading rates.
///
/// `v̇ = v⃗·a / v` and `θ̇ = (v⃗ × a) / v²`, which is the nonsingular form of
/// the `1/(1 + tan²θ) / v_x²` expression.
pub fn rates_from_vector(v: f64, theta: f64, accel: Vec2, v_floor: f64) -> Result<DesiredRates> {
    if v.is_nan() || v < v_floor {
        return Err(Error::SpeedBelowFloor { v, floor: v_floor });
    }
    let (s, c) = theta.sin_cos();
    let vel = Vec2::new(v * c, v * s);
    Ok(DesiredRates {
        v_dot: vel.dot(accel) / v,
        theta_dot: vel.cross(accel) / (v * v),
    })
}

/// `-1` when `|wrap(θ_i + γ_ij)| ≤ π/2`, `+1` otherwise.
pub fn sign_select(theta_i: f64, gamma_ij: f64) -> f64 {
    if wrap_angle_unchecked(theta_i + gamma_ij).abs() <= FRAC_PI_2 {
        -1.0
    } else {
        1.0
    }
}

/// Desired speed and heading rates reconstructed from visual signals.
///
/// Invisible signals are skipped. `L_e` replaces `L` everywhere in the
/// feedback; the true size never enters.
pub fn yfm_desired_rates(
    signals: &[VisualSignal],
    v_i: f64,
    omega_i: f64,
    theta_i: f64,
    params: &SwarmParams,
) -> DesiredRates {
    let le = params.feedback_length();
    let mut along = 0.0;
    let mut across = 0.0;
    for s in signals.iter().filter(|s| s.visible) {
        let cot = 1.0 / s.alpha.tan();
        let weight = (1.0 + le * le * cot * cot).powf(params.beta);
        let radial = params.sign_rule.sign(theta_i, s.gamma) * s.alpha_dot * (1.0 + cot * cot);
        let lateral = (s.q_dot + omega_i) * cot;
        let (sg, cg) = s.gamma.sin_cos();
        along += (radial * cg - lateral * sg) / weight;
        across += (radial * sg + lateral * cg) / weight;
    }
    let gain = params.coupling * le;
    DesiredRates {
        v_dot: gain * along,
        theta_dot: gain * across / v_i.max(params.v_floor),
    }
}

/// Speed command `u_v = v̇*`.
pub fn yfm_speed_control(
    signals: &[VisualSignal],
    omega_i: f64,
    theta_i: f64,
    params: &SwarmParams,
) -> f64 {
    // the speed channel does not depend on v_i
    yfm_desired_rates(signals, 1.0, omega_i, theta_i, params).v_dot
}

/// Heading command `u_ω = -k (ω_i - θ̇*)`.
pub fn yfm_heading_control(
    signals: &[VisualSignal],
    v_i: f64,
    omega_i: f64,
    theta_i: f64,
    params: &SwarmParams,
) -> f64 {
    let target = yfm_desired_rates(signals, v_i, omega_i, theta_i, params).theta_dot;
    -params.heading_gain * (omega_i - target)
}

/// Both visual commands for one agent.
pub fn yfm_control(
    signals: &[VisualSignal],
    si: &AgentState,
    params: &SwarmParams,
) -> ControlInput {
    let rates = yfm_desired_rates(signals, si.v, si.omega, si.theta, params);
    ControlInput {
        u_v: rates.v_dot,
        u_omega: -params.heading_gain * (si.omega - rates.theta_dot),
    }
}

/// Cucker-Smale commands for one agent, pushed through the same heading loop.
pub fn cs_control(swarm: &[AgentState], i: usize, params: &SwarmParams) -> Result<ControlInput> {
    let rates = cs_desired_rates(swarm, i, params)?;
    Ok(ControlInput {
        u_v: rates.v_dot,
        u_omega: -params.heading_gain * (swarm[i].omega - rates.theta_dot),
    })
}

/// Cucker-Smale desired rates with the speed clamped to `v_floor`.
pub fn cs_desired_rates(
    swarm: &[AgentState],
    i: usize,
    params: &SwarmParams,
) -> Result<DesiredRates> {
    let a = cs_acceleration(swarm, i, params.coupling, params.beta, params.sigma)?;
    let si = &swarm[i];
    rates_from_vector(si.v.max(params.v_floor), si.theta, a, params.v_floor)
}
