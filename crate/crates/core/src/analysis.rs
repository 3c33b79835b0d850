//! Post-processing of trajectory logs: dispersion, convergence time,
//! equivalent damping from successive peaks, and the planar flow profile.

use std::f64::consts::{PI, TAU};

use crate::error::{ensure, Error, Result};
use crate::geometry::{wrap_angle_unchecked, AgentState, SwarmParams};
use crate::sensing::synthesize;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DispersionRecord {
    pub t: f64,
    /// `max |v_i - v_j|`.
    pub speed_spread: f64,
    /// Largest wrapped heading difference over all pairs, in `[0, π]`.
    pub heading_spread: f64,
}

/// `(speed_spread, heading_spread)` over all pairs.
pub fn dispersion(states: &[AgentState]) -> (f64, f64) {
    let mut speed: f64 = 0.0;
    let mut heading: f64 = 0.0;
    for (i, a) in states.iter().enumerate() {
        for b in &states[i + 1..] {
            speed = speed.max((a.v - b.v).abs());
            let d = (a.theta - b.theta).abs() % TAU;
            heading = heading.max(d.min(TAU - d));
        }
    }
    (speed, heading)
}

/// Earliest time after which both spreads stay at or below `tol_frac` times
/// their initial values until the end of the series.
pub fn detect_convergence(series: &[DispersionRecord], tol_frac: f64) -> Option<f64> {
    let first = series.first()?;
    let speed_tol = tol_frac * first.speed_spread;
    let heading_tol = tol_frac * first.heading_spread;
    let below =
        |m: &DispersionRecord| m.speed_spread <= speed_tol && m.heading_spread <= heading_tol;
    let tail = series.iter().rev().take_while(|m| below(m)).count();
    if tail == 0 {
        None
    } else {
        Some(series[series.len() - tail].t)
    }
}

/// Equivalent damping from successive peaks of a decaying oscillation.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct OscillationEstimate {
    /// Times of the local maxima of `signal - asymptote`.
    pub peak_times: Vec<f64>,
    /// Start time of each peak pair that produced an estimate.
    pub pair_times: Vec<f64>,
    pub zeta_seq: Vec<f64>,
    pub omega_n_seq: Vec<f64>,
}

impl OscillationEstimate {
    pub fn is_empty(&self) -> bool {
        self.zeta_seq.is_empty()
    }
}

/// Mean of the last 10% of the samples (at least one).
pub fn final_value_estimate(signal: &[f64]) -> f64 {
    let n = (signal.len() / 10).max(1).min(signal.len());
    let tail = &signal[signal.len() - n..];
    tail.iter().sum::<f64>() / n as f64
}

/// Remove 2π jumps from a wrapped angle history.
pub fn unwrap_angles(angles: &[f64]) -> Vec<f64> {
    let mut out = Vec::with_capacity(angles.len());
    let mut offset = 0.0;
    for (k, &a) in angles.iter().enumerate() {
        if k > 0 {
            let jump = a - angles[k - 1];
            if jump > PI {
                offset -= TAU;
            } else if jump < -PI {
                offset += TAU;
            }
        }
        out.push(a + offset);
    }
    out
}

/// Logarithmic decrement over successive peaks of `signal - asymptote`.
///
/// `signal` is sampled every `dt` starting at `t0`. Peak times and heights
/// are refined by a parabola through the three samples around each local
/// maximum. Pairs where either peak is not above the asymptote are skipped.
pub fn log_decrement(signal: &[f64], dt: f64, t0: f64, asymptote: f64) -> OscillationEstimate {
    let dev: Vec<f64> = signal.iter().map(|s| s - asymptote).collect();
    let mut peaks: Vec<(f64, f64)> = Vec::new();
    for k in 1..dev.len().saturating_sub(1) {
        let (a, b, c) = (dev[k - 1], dev[k], dev[k + 1]);
        if b > a && b >= c {
            let curvature = a - 2.0 * b + c;
            let offset = if curvature != 0.0 {
                0.5 * (a - c) / curvature
            } else {
                0.0
            };
            let height = b - 0.25 * (a - c) * offset;
            peaks.push((t0 + (k as f64 + offset) * dt, height));
        }
    }

    let mut est = OscillationEstimate {
        peak_times: peaks.iter().map(|p| p.0).collect(),
        ..Default::default()
    };
    for w in peaks.windows(2) {
        let ((t1, p1), (t2, p2)) = (w[0], w[1]);
        if p1 <= 0.0 || p2 <= 0.0 {
            continue;
        }
        let delta = (p1 / p2).ln();
        let zeta = delta / (4.0 * PI * PI + delta * delta).sqrt();
        let omega_d = TAU / (t2 - t1);
        est.pair_times.push(t1);
        est.zeta_seq.push(zeta);
        est.omega_n_seq.push(omega_d / (1.0 - zeta * zeta).sqrt());
    }
    est
}

/// Optic-flow magnitude over bearing bins of width `resolution` covering `[-π, π)`.
///
/// A bin holds `|Q̇_ij|` of the visible neighbor whose angular extent
/// `[γ_ij - α_ij, γ_ij + α_ij]` covers the bin center; the closest neighbor
/// wins where extents overlap. Returns `(bin_center, magnitude)` pairs.
pub fn flow_profile(
    swarm: &[AgentState],
    i: usize,
    resolution: f64,
    params: &SwarmParams,
) -> Result<Vec<(f64, f64)>> {
    ensure(resolution > 0.0, "resolution", "must be > 0")?;
    let si = swarm.get(i).ok_or(Error::AgentIndex {
        index: i,
        len: swarm.len(),
    })?;
    let mut seen = Vec::new();
    for (j, sj) in swarm.iter().enumerate() {
        if j == i {
            continue;
        }
        let sig = synthesize(si, sj, params).map_err(|e| match e {
            Error::ZeroSeparation => Error::CoincidentAgents { i, j },
            other => other,
        })?;
        if sig.visible {
            // cot α = r / L, so a larger α is a closer neighbor
            seen.push(sig);
        }
    }
    seen.sort_by(|a, b| b.alpha.total_cmp(&a.alpha));

    let bins = (TAU / resolution).ceil() as usize;
    Ok((0..bins)
        .map(|k| {
            let center = -PI + (k as f64 + 0.5) * resolution;
            let mag = seen
                .iter()
                .find(|s| wrap_angle_unchecked(center - s.gamma).abs() <= s.alpha)
                .map_or(0.0, |s| s.q_dot.abs());
            (center, mag)
        })
        .collect())
}
