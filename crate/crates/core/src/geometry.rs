//! Agent state, model constants and pairwise planar geometry.
//!
//! Angles are radians. Headings and viewing angles are kept in the
//! half-open interval `[-π, π)`: `wrap_angle(π)` returns `-π`.

use std::f64::consts::{FRAC_PI_2, PI, TAU};

use crate::control::SignRule;
use crate::error::{ensure, Error, Result};

/// Plain 2-vector in the inertial frame.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Vec2 {
    pub x: f64,
    pub y: f64,
}

impl Vec2 {
    pub const ZERO: Vec2 = Vec2 { x: 0.0, y: 0.0 };

    pub const fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }

    pub fn dot(self, other: Vec2) -> f64 {
        self.x * other.x + self.y * other.y
    }

    /// z-component of the planar cross product.
    pub fn cross(self, other: Vec2) -> f64 {
        self.x * other.y - self.y * other.x
    }

    pub fn norm(self) -> f64 {
        self.x.hypot(self.y)
    }
}

impl std::ops::Add for Vec2 {
    type Output = Vec2;
    fn add(self, o: Vec2) -> Vec2 {
        Vec2::new(self.x + o.x, self.y + o.y)
    }
}

impl std::ops::AddAssign for Vec2 {
    fn add_assign(&mut self, o: Vec2) {
        self.x += o.x;
        self.y += o.y;
    }
}

impl std::ops::Sub for Vec2 {
    type Output = Vec2;
    fn sub(self, o: Vec2) -> Vec2 {
        Vec2::new(self.x - o.x, self.y - o.y)
    }
}

impl std::ops::Mul<f64> for Vec2 {
    type Output = Vec2;
    fn mul(self, s: f64) -> Vec2 {
        Vec2::new(self.x * s, self.y * s)
    }
}

/// Kinematic state of one no-sideslip agent.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AgentState {
    pub x: f64,
    pub y: f64,
    /// Speed along the heading, m/s. Kept strictly positive by the integrator.
    pub v: f64,
    /// Heading, wrapped to `[-π, π)`.
    pub theta: f64,
    /// Turn rate, rad/s.
    pub omega: f64,
}

impl AgentState {
    pub fn new(x: f64, y: f64, v: f64, theta: f64, omega: f64) -> Self {
        Self {
            x,
            y,
            v,
            theta,
            omega,
        }
    }

    pub fn position(&self) -> Vec2 {
        Vec2::new(self.x, self.y)
    }

    pub fn velocity(&self) -> Vec2 {
        let (s, c) = self.theta.sin_cos();
        Vec2::new(self.v * c, self.v * s)
    }
}

/// Feedback and model constants.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SwarmParams {
    /// Coupling constant H.
    pub coupling: f64,
    /// Heading feedback gain k, 1/s.
    pub heading_gain: f64,
    /// Decay exponent β.
    pub beta: f64,
    /// True agent semi-length L, m. Used only for synthesizing what agents see.
    pub length: f64,
    /// Semi-length assumed inside the feedback. `None` means "same as `length`".
    pub assumed_length: Option<f64>,
    /// Smallest resolvable subtended angle, rad.
    pub alpha_min: f64,
    /// Half-width Γ of the forward and rear blind sectors, rad. Zero disables them.
    pub occlusion: f64,
    /// Lower clamp on the speed in every 1/v term, m/s.
    pub v_floor: f64,
    /// σ of the Cucker-Smale kernel `[σ² + r²]^-β`.
    pub sigma: f64,
    pub sign_rule: SignRule,
}

impl Default for SwarmParams {
    fn default() -> Self {
        Self {
            coupling: 1.0,
            heading_gain: 20.0,
            beta: 0.4,
            length: 1.0,
            assumed_length: None,
            alpha_min: 0.005,
            occlusion: 0.0,
            v_floor: 1e-6,
            sigma: 1.0,
            sign_rule: SignRule::RangeRate,
        }
    }
}

impl SwarmParams {
    /// The L_e that enters the feedback laws.
    pub fn feedback_length(&self) -> f64 {
        self.assumed_length.unwrap_or(self.length)
    }

    pub fn validate(&self) -> Result<()> {
        ensure(self.coupling > 0.0, "H", "must be > 0")?;
        ensure(self.heading_gain > 0.0, "k", "must be > 0")?;
        ensure(self.beta.is_finite(), "beta", "must be finite")?;
        ensure(self.length > 0.0, "L", "must be > 0")?;
        if let Some(le) = self.assumed_length {
            ensure(le > 0.0, "L_e", "must be > 0")?;
        }
        ensure(self.alpha_min >= 0.0, "alpha_min", "must be >= 0")?;
        ensure(
            (0.0..FRAC_PI_2).contains(&self.occlusion),
            "Gamma",
            "must lie in [0, pi/2)",
        )?;
        ensure(self.v_floor > 0.0, "v_floor", "must be > 0")?;
        ensure(self.sigma > 0.0, "sigma", "must be > 0")?;
        Ok(())
    }
}

/// Relative geometry of agent `j` as seen from agent `i`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PairGeometry {
    pub r: f64,
    pub r_dot: f64,
    /// Bearing of `j` in `i`'s body frame.
    pub gamma_ij: f64,
    /// Bearing of `i` in `j`'s body frame.
    pub gamma_ji: f64,
}

impl PairGeometry {
    /// Direction of the sight line from `i` to `j`, measured from `j`'s heading.
    ///
    /// This is the angle the optic-flow relation pairs with `v_j`; it differs
    /// from `gamma_ji` by π.
    pub fn sight_angle_ji(&self) -> f64 {
        wrap_angle_unchecked(self.gamma_ji - PI)
    }
}

/// Wrap an angle into `[-π, π)`. Inputs already in range are returned unchanged.
pub fn wrap_angle(a: f64) -> Result<f64> {
    if !a.is_finite() {
        return Err(Error::NonFiniteAngle(a));
    }
    Ok(wrap_angle_unchecked(a))
}

pub(crate) fn wrap_angle_unchecked(a: f64) -> f64 {
    if (-PI..PI).contains(&a) {
        return a;
    }
    let w = (a + PI).rem_euclid(TAU) - PI;
    if w >= PI {
        w - TAU
    } else {
        w
    }
}

pub fn pair_geometry(si: &AgentState, sj: &AgentState) -> Result<PairGeometry> {
    let d = sj.position() - si.position();
    let r = d.norm();
    if r == 0.0 {
        return Err(Error::ZeroSeparation);
    }
    let r_dot = d.dot(sj.velocity() - si.velocity()) / r;
    let gamma_ij = wrap_angle_unchecked(d.y.atan2(d.x) - si.theta);
    let gamma_ji = wrap_angle_unchecked((-d.y).atan2(-d.x) - sj.theta);
    Ok(PairGeometry {
        r,
        r_dot,
        gamma_ij,
        gamma_ji,
    })
}

/// Half-angle subtended by a body of semi-length `length` at range `r`: `cot α = r / L`.
pub fn subtended_angle(r: f64, length: f64) -> Result<f64> {
    if r.is_nan() || r <= 0.0 {
        return Err(Error::NonPositiveDistance(r));
    }
    if length.is_nan() || length <= 0.0 {
        return Err(Error::NonPositiveLength(length));
    }
    Ok((length / r).atan())
}

/// Expansion rate α̇ from the range rate, inverting `ṙ = -(1 + cot²α) L α̇`.
pub fn subtended_rate(r_dot: f64, alpha: f64, length: f64) -> f64 {
    debug_assert!(alpha > 0.0 && alpha < FRAC_PI_2);
    let cot = 1.0 / alpha.tan();
    -r_dot / (length * (1.0 + cot * cot))
}

/// Apply `[[cos φ, sin φ], [sin φ, -cos φ]]` to `(vt, vn)`.
///
/// The matrix is a reflection, so it maps sight-line components to
/// inertial ones and back.
pub fn reflect_to_inertial(phi: f64, vt: f64, vn: f64) -> (f64, f64) {
    let (s, c) = phi.sin_cos();
    (c * vt + s * vn, s * vt - c * vn)
}
