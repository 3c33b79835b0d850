//! Synthesis of what each agent sees: bearing, subtended angle, its
//! expansion rate and the optic flow a neighbor induces, plus additive
//! measurement noise and the resolution / blind-sector masks.

use std::f64::consts::{FRAC_PI_2, PI, TAU};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{ensure, Error, Result};
use crate::geometry::{
    pair_geometry, subtended_angle, subtended_rate, wrap_angle_unchecked, AgentState, PairGeometry,
    SwarmParams,
};

const ALPHA_CLAMP: f64 = 1e-9;

/// One neighbor as seen by one agent.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VisualSignal {
    /// Bearing of the neighbor in the observer's body frame.
    pub gamma: f64,
    /// Subtended half-angle, in `(0, π/2)`.
    pub alpha: f64,
    /// Expansion rate of `alpha`.
    pub alpha_dot: f64,
    /// Optic flow induced by the neighbor.
    pub q_dot: f64,
    /// Whether the neighbor passes the resolution and blind-sector masks.
    pub visible: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct NoiseParams {
    /// Std-dev of the additive noise on the optic flow, rad/s.
    pub sigma_q: f64,
    /// Std-dev of the additive noise on the subtended angle, rad.
    pub sigma_a: f64,
    pub seed: u64,
}

impl NoiseParams {
    pub fn noiseless(seed: u64) -> Self {
        Self {
            sigma_q: 0.0,
            sigma_a: 0.0,
            seed,
        }
    }

    pub fn validate(&self) -> Result<()> {
        ensure(self.sigma_q >= 0.0, "sigma_q", "must be >= 0")?;
        ensure(self.sigma_a >= 0.0, "sigma_a", "must be >= 0")?;
        Ok(())
    }
}

/// Standard-normal deviates for one (agent, timestep) cell.
///
/// Every cell owns a disjoint slice of a ChaCha8 keystream: the stream id
/// is the agent index and the word offset is `step * 4 * neighbors`, so
/// each neighbor consumes exactly two `u64` draws (one Box-Muller pair).
/// Cells can therefore be evaluated in any order, or in parallel, and
/// produce the same numbers.
pub struct NoiseStream {
    rng: ChaCha8Rng,
}

impl NoiseStream {
    pub fn for_cell(seed: u64, agent: usize, step: usize, neighbors: usize) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(agent as u64);
        rng.set_word_pos(step as u128 * 4 * neighbors as u128);
        Self { rng }
    }

    /// Two independent standard-normal deviates (Box-Muller).
    pub fn normal_pair(&mut self) -> (f64, f64) {
        // u1 in (0, 1] keeps ln finite
        let u1 = 1.0 - self.rng.random::<f64>();
        let u2: f64 = self.rng.random();
        let rad = (-2.0 * u1.ln()).sqrt();
        let (s, c) = (TAU * u2).sin_cos();
        (rad * c, rad * s)
    }
}

/// Optic flow `Q̇_ij = -θ̇_i + (v_i sin γ_ij - v_j sin ψ_ji) / r`, where ψ_ji is
/// the sight line `i → j` measured from `j`'s heading.
pub fn optic_flow(si: &AgentState, sj: &AgentState, geom: &PairGeometry) -> f64 {
    -si.omega + (si.v * geom.gamma_ij.sin() - sj.v * geom.sight_angle_ji().sin()) / geom.r
}

/// Resolution limit and forward/rear blind sectors.
///
/// Invisible when `alpha < alpha_min` (strict), or when the bearing lies in
/// `(-Γ, Γ)` or within Γ of straight behind. `Γ = 0` disables the sectors.
pub fn visibility(alpha: f64, gamma: f64, params: &SwarmParams) -> bool {
    if alpha < params.alpha_min {
        return false;
    }
    let g = params.occlusion;
    if g > 0.0 {
        let b = wrap_angle_unchecked(gamma).abs();
        if b < g || b > PI - g {
            return false;
        }
    }
    true
}

/// Noise-free signal agent `i` receives from agent `j`.
pub fn synthesize(si: &AgentState, sj: &AgentState, params: &SwarmParams) -> Result<VisualSignal> {
    let geom = pair_geometry(si, sj)?;
    let alpha = subtended_angle(geom.r, params.length)?;
    Ok(VisualSignal {
        gamma: geom.gamma_ij,
        alpha,
        alpha_dot: subtended_rate(geom.r_dot, alpha, params.length),
        q_dot: optic_flow(si, sj, &geom),
        visible: visibility(alpha, geom.gamma_ij, params),
    })
}

/// Everything agent `i` sees, one signal per other agent in index order.
///
/// Noise is added to `alpha` and `q_dot` only; the noisy `alpha` is clamped
/// into `(0, π/2)` and is what the visibility test sees.
pub fn sense(
    swarm: &[AgentState],
    i: usize,
    params: &SwarmParams,
    noise: &NoiseParams,
    rng: &mut NoiseStream,
) -> Result<Vec<VisualSignal>> {
    let si = swarm.get(i).ok_or(Error::AgentIndex {
        index: i,
        len: swarm.len(),
    })?;
    let mut out = Vec::with_capacity(swarm.len().saturating_sub(1));
    for (j, sj) in swarm.iter().enumerate() {
        if j == i {
            continue;
        }
        let mut sig = synthesize(si, sj, params).map_err(|e| match e {
            Error::ZeroSeparation => Error::CoincidentAgents { i, j },
            other => other,
        })?;
        let (g1, g2) = rng.normal_pair();
        sig.alpha = (sig.alpha + noise.sigma_a * g1).clamp(ALPHA_CLAMP, FRAC_PI_2 - ALPHA_CLAMP);
        sig.q_dot += noise.sigma_q * g2;
        sig.visible = visibility(sig.alpha, sig.gamma, params);
        out.push(sig);
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NoiseBoundInput {
    /// Bound on the velocity noise under which C-S still converges, m/s.
    pub n_bar: f64,
    /// Blind-sector half-angle Γ, rad.
    pub gamma: f64,
    /// Bound on every inter-agent distance, m.
    pub rho: f64,
}

/// Largest optic-flow noise `q̄ = n̄ sin Γ / ρ` that keeps the visual law convergent.
pub fn noise_bound(inp: &NoiseBoundInput) -> Result<f64> {
    ensure(inp.n_bar >= 0.0, "n_bar", "must be >= 0")?;
    ensure(
        inp.gamma >= 0.0 && inp.gamma <= FRAC_PI_2,
        "Gamma",
        "must lie in [0, pi/2]",
    )?;
    ensure(inp.rho > 0.0, "rho", "must be > 0")?;
    Ok(inp.n_bar * inp.gamma.sin() / inp.rho)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    fn params() -> SwarmParams {
        SwarmParams::default()
    }

    #[test]
    fn optic_flow_examples() {
        let i = AgentState::new(0.0, 0.0, 0.0, 0.0, 0.0);
        let j = AgentState::new(3.0, 1.0, 0.0, 1.0, 0.0);
        let g = pair_geometry(&i, &j).unwrap();
        assert_eq!(optic_flow(&i, &j, &g), 0.0);

        let i = AgentState::new(0.0, 0.0, 1.0, 0.0, 0.0);
        let j = AgentState::new(0.0, 1.0, 0.0, 0.0, 0.0);
        let g = pair_geometry(&i, &j).unwrap();
        assert_relative_eq!(optic_flow(&i, &j, &g), 1.0);

        let i = AgentState::new(0.0, 0.0, 0.0, 0.0, 1.0);
        let j = AgentState::new(2.0, -1.0, 0.0, 0.0, 0.0);
        let g = pair_geometry(&i, &j).unwrap();
        assert_eq!(optic_flow(&i, &j, &g), -1.0);
    }

    #[test]
    fn optic_flow_is_the_body_frame_bearing_rate() {
        // finite-difference the bearing of j in i's frame
        let i = AgentState::new(0.3, -0.2, 1.3, 0.4, 0.7);
        let j = AgentState::new(2.1, 1.5, 0.8, -2.2, -0.3);
        let g = pair_geometry(&i, &j).unwrap();
        let h = 1e-6;
        let adv = |s: &AgentState, dt: f64| {
            AgentState::new(
                s.x + s.v * s.theta.cos() * dt,
                s.y + s.v * s.theta.sin() * dt,
                s.v,
                s.theta + s.omega * dt,
                s.omega,
            )
        };
        let bearing = |dt: f64| {
            let (a, b) = (adv(&i, dt), adv(&j, dt));
            (b.y - a.y).atan2(b.x - a.x) - a.theta
        };
        let fd = (bearing(h) - bearing(-h)) / (2.0 * h);
        assert_relative_eq!(optic_flow(&i, &j, &g), fd, max_relative = 1e-7);
    }

    #[test]
    fn visibility_examples() {
        let mut p = params();
        assert!(!visibility(0.004, 1.0, &p));
        p.occlusion = 0.1;
        assert!(!visibility(0.1, 0.0, &p));
        assert!(visibility(0.1, FRAC_PI_2, &p));
        assert!(!visibility(0.1, PI - 0.05, &p));
        assert!(!visibility(0.1, -PI + 0.05, &p));
        // strict comparison at the resolution limit
        assert!(visibility(p.alpha_min, FRAC_PI_2, &p));
    }

    #[test]
    fn zero_noise_matches_synthesis() {
        let swarm = vec![
            AgentState::new(0.0, 0.0, 1.0, 0.2, 0.1),
            AgentState::new(3.0, 1.0, 1.5, -1.0, 0.0),
            AgentState::new(-2.0, 4.0, 0.7, 2.5, -0.3),
        ];
        let p = params();
        let mut rng = NoiseStream::for_cell(7, 0, 0, 2);
        let sig = sense(&swarm, 0, &p, &NoiseParams::noiseless(7), &mut rng).unwrap();
        assert_eq!(sig.len(), 2);
        assert_eq!(sig[0], synthesize(&swarm[0], &swarm[1], &p).unwrap());
        assert_eq!(sig[1], synthesize(&swarm[0], &swarm[2], &p).unwrap());
    }

    #[test]
    fn sense_is_deterministic_per_cell() {
        let swarm = vec![
            AgentState::new(0.0, 0.0, 1.0, 0.2, 0.1),
            AgentState::new(3.0, 1.0, 1.5, -1.0, 0.0),
            AgentState::new(-2.0, 4.0, 0.7, 2.5, -0.3),
        ];
        let noise = NoiseParams {
            sigma_q: 0.01,
            sigma_a: 0.01,
            seed: 42,
        };
        let run = || {
            let mut rng = NoiseStream::for_cell(42, 1, 17, 2);
            sense(&swarm, 1, &params(), &noise, &mut rng).unwrap()
        };
        assert_eq!(run(), run());
    }

    #[test]
    fn far_neighbor_is_invisible() {
        // alpha = atan(1 / 500) ~ 0.002 < 0.005
        let swarm = vec![
            AgentState::new(0.0, 0.0, 1.0, 0.0, 0.0),
            AgentState::new(0.0, 500.0, 1.0, 0.0, 0.0),
        ];
        let mut rng = NoiseStream::for_cell(0, 0, 0, 1);
        let sig = sense(&swarm, 0, &params(), &NoiseParams::noiseless(0), &mut rng).unwrap();
        assert_eq!(sig.len(), 1);
        assert!(!sig[0].visible);
    }

    #[test]
    fn sense_reports_coincident_pair() {
        let swarm = vec![
            AgentState::new(1.0, 1.0, 1.0, 0.0, 0.0),
            AgentState::new(0.0, 0.0, 1.0, 0.0, 0.0),
            AgentState::new(1.0, 1.0, 2.0, 0.0, 0.0),
        ];
        let mut rng = NoiseStream::for_cell(0, 2, 0, 2);
        let err = sense(&swarm, 2, &params(), &NoiseParams::noiseless(0), &mut rng).unwrap_err();
        assert_eq!(err, Error::CoincidentAgents { i: 2, j: 0 });
    }

    #[test]
    fn noisy_alpha_stays_in_open_interval() {
        let swarm = vec![
            AgentState::new(0.0, 0.0, 1.0, 0.0, 0.0),
            AgentState::new(0.0, 100.0, 1.0, 0.0, 0.0),
        ];
        let noise = NoiseParams {
            sigma_q: 0.0,
            sigma_a: 5.0,
            seed: 3,
        };
        for step in 0..200 {
            let mut rng = NoiseStream::for_cell(3, 0, step, 1);
            let s = sense(&swarm, 0, &params(), &noise, &mut rng).unwrap()[0];
            assert!(s.alpha > 0.0 && s.alpha < FRAC_PI_2);
        }
    }

    #[test]
    fn box_muller_moments() {
        let mut rng = NoiseStream::for_cell(11, 0, 0, 1);
        let n = 200_000;
        let (mut m, mut m2) = (0.0, 0.0);
        for _ in 0..n / 2 {
            let (a, b) = rng.normal_pair();
            m += a + b;
            m2 += a * a + b * b;
        }
        let mean = m / n as f64;
        let var = m2 / n as f64 - mean * mean;
        assert!(mean.abs() < 0.01, "mean {mean}");
        assert!((var - 1.0).abs() < 0.01, "var {var}");
    }

    #[test]
    fn cells_do_not_overlap() {
        let mut a = NoiseStream::for_cell(5, 0, 0, 3);
        let first: Vec<_> = (0..6).map(|_| a.normal_pair()).collect();
        let mut b = NoiseStream::for_cell(5, 0, 1, 3);
        // cell (0, 1) starts where three neighbors of cell (0, 0) end
        assert_eq!(b.normal_pair(), first[3]);
        let mut c = NoiseStream::for_cell(5, 1, 0, 3);
        assert_ne!(c.normal_pair(), first[0]);
    }

    #[test]
    fn noise_bound_examples() {
        let nb = |n_bar, gamma, rho| noise_bound(&NoiseBoundInput { n_bar, gamma, rho }).unwrap();
        assert_relative_eq!(nb(1.0, FRAC_PI_2, 1.0), 1.0);
        assert_relative_eq!(nb(1.0, PI / 6.0, 10.0), 0.05, max_relative = 1e-15);
        assert_eq!(nb(0.0, 0.3, 2.0), 0.0);
        assert_eq!(nb(2.0, 0.0, 2.0), 0.0);
        assert!(noise_bound(&NoiseBoundInput {
            n_bar: 1.0,
            gamma: 0.2,
            rho: 0.0
        })
        .is_err());
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(1000))]

        #[test]
        fn noiseless_signals_satisfy_sin_identity(
            xj in -20f64..20.0, yj in -20f64..20.0, vi in 0.1f64..3.0, vj in 0.1f64..3.0,
            ti in -PI..PI, tj in -PI..PI, wi in -2f64..2.0,
        ) {
            prop_assume!(xj.hypot(yj) > 0.05);
            let si = AgentState::new(0.0, 0.0, vi, ti, wi);
            let sj = AgentState::new(xj, yj, vj, tj, 0.0);
            let g = pair_geometry(&si, &sj).unwrap();
            let q = optic_flow(&si, &sj, &g);
            let lhs = vj * g.sight_angle_ji().sin() - vi * g.gamma_ij.sin();
            let rhs = -g.r * (q + wi);
            prop_assert!((lhs - rhs).abs() <= 1e-10 * lhs.abs().max(1.0));
        }

        #[test]
        fn noise_bound_monotone(n in 0f64..5.0, g in 0f64..1.5, rho in 0.1f64..50.0, d in 0.01f64..0.5) {
            let q = |n_bar, gamma, rho| noise_bound(&NoiseBoundInput { n_bar, gamma, rho }).unwrap();
            prop_assert!(q(n + d, g, rho) >= q(n, g, rho));
            prop_assert!(q(n, (g + d).min(FRAC_PI_2), rho) >= q(n, g, rho));
            prop_assert!(q(n, g, rho + d) <= q(n, g, rho));
        }
    }
}
