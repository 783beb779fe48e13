//! Collision-cone barrier and soft state barriers.
//!
//! The hard constraint keeps the relative velocity of each obstacle outside
//! its collision cone. With `p_rel = p_obs - p`, `v_rel = v_obs - upsilon`
//! and effective radius `r`, the barrier is
//!
//! ```text
//! h = p_rel . v_rel + |v_rel| * sqrt(|p_rel|^2 - r^2)
//! ```
//!
//! which is nonnegative exactly when the relative velocity points outside
//! the cone of collision courses. Its derivative along the canonical
//! dynamics splits into `L_t h + L_f h + L_g h (u + d)`; the worst case of
//! the disturbance term is bounded by `|L_g h|_1 * d_bar` and moved to the
//! right-hand side, so every emitted row is robust to any matched
//! disturbance within the bound.
//!
//! Speed and steering limits enter as soft rows with one slack column each;
//! the slack keeps the QP feasible when the hard rows and the actuator
//! limits collide.

use thiserror::Error;

use crate::math::Vec2;
use crate::models::{AffineDynamics, CanonicalState, VehicleParams, VehicleState};
use crate::real::{lit, Real};

/// Below this gradient norm a hard row carries no control authority and is
/// dropped for the step.
pub const DEGENERATE_ROW_EPS: f64 = 1e-9;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum CbfError {
    #[error("already in collision: center distance {distance} <= effective radius {radius}")]
    InCollision { distance: f64, radius: f64 },
    #[error("soft barrier {kind:?} is not defined for this vehicle")]
    UnsupportedBarrier { kind: SoftBarrierKind },
    #[error("non-finite input in {0}")]
    NonFinite(&'static str),
}

/// Obstacle motion models with analytic velocity and acceleration.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum ObstacleMotion<T> {
    ConstantVelocity {
        p0: Vec2<T>,
        v: Vec2<T>,
    },
    /// Uniform circular motion: position `center + path_radius * e(omega t + theta0)`.
    Circular {
        center: Vec2<T>,
        path_radius: T,
        omega: T,
        theta0: T,
    },
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Obstacle<T> {
    /// Physical disk radius of the obstacle, m.
    pub radius: T,
    pub motion: ObstacleMotion<T>,
}

impl<T: Real> Obstacle<T> {
    pub fn validate(&self) -> Result<(), CbfError> {
        if self.radius <= T::zero() || !self.radius.is_finite() {
            return Err(CbfError::NonFinite("obstacle radius"));
        }
        match self.motion {
            ObstacleMotion::ConstantVelocity { p0, v } => {
                if !(p0.is_finite() && v.is_finite()) {
                    return Err(CbfError::NonFinite("constant-velocity motion"));
                }
            }
            ObstacleMotion::Circular {
                center,
                path_radius,
                omega,
                theta0,
            } => {
                if !(center.is_finite()
                    && path_radius.is_finite()
                    && omega.is_finite()
                    && theta0.is_finite())
                {
                    return Err(CbfError::NonFinite("circular motion"));
                }
                if path_radius <= T::zero() {
                    return Err(CbfError::NonFinite("circular path radius"));
                }
            }
        }
        Ok(())
    }
}

/// Obstacle position, velocity and acceleration at one instant.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ObstacleState<T> {
    pub p: Vec2<T>,
    pub v: Vec2<T>,
    pub a: Vec2<T>,
}

/// One hard constraint row with semantics `a . u + b >= 0`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct C3bfRow<T> {
    /// Coefficient of the input, `L_g h` as a row.
    pub a: Vec2<T>,
    /// `L_t h + L_f h + alpha * h - |a|_1 * d_bar`.
    pub b: T,
    pub h_value: T,
    /// Set when `|a|` is below [`DEGENERATE_ROW_EPS`].
    pub degenerate: bool,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, serde::Serialize)]
#[serde(rename_all = "snake_case")]
pub enum SoftBarrierKind {
    VMin,
    VMax,
    Delta3,
}

impl SoftBarrierKind {
    pub fn name(&self) -> &'static str {
        match self {
            SoftBarrierKind::VMin => "v_min",
            SoftBarrierKind::VMax => "v_max",
            SoftBarrierKind::Delta3 => "delta3",
        }
    }
}

/// Robustness margin policy for a soft row.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum MarginPolicy<T> {
    /// `Delta = |L_g h|_1 * d_bar`, mirroring the hard rows.
    MatchedDisturbance,
    Fixed(T),
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SoftBarrierSpec<T> {
    pub kind: SoftBarrierKind,
    pub alpha_gain: T,
    pub margin: MarginPolicy<T>,
}

/// One soft row with semantics `a . u + slack + b >= 0`; the slack column is
/// appended by the QP assembly.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SoftRow<T> {
    pub kind: SoftBarrierKind,
    pub a: Vec2<T>,
    pub b: T,
    pub h_value: T,
}

/// Analytic position, velocity and acceleration of the obstacle at time `t`.
pub fn obstacle_state<T: Real>(obs: &Obstacle<T>, t: T) -> ObstacleState<T> {
    match obs.motion {
        ObstacleMotion::ConstantVelocity { p0, v } => ObstacleState {
            p: p0 + v * t,
            v,
            a: Vec2::zero(),
        },
        ObstacleMotion::Circular {
            center,
            path_radius,
            omega,
            theta0,
        } => {
            let ang = omega * t + theta0;
            let (s, c) = ang.sin_cos();
            let radial = Vec2::new(c, s) * path_radius;
            ObstacleState {
                p: center + radial,
                v: Vec2::new(-s, c) * (path_radius * omega),
                a: -radial * (omega * omega),
            }
        }
    }
}

/// Cosine of the collision-cone half angle,
/// `sqrt(|p_rel|^2 - r^2) / |p_rel|`, in `(0, 1]`.
pub fn cos_half_angle<T: Real>(p_rel: Vec2<T>, r: T) -> Result<T, CbfError> {
    let dist = p_rel.norm();
    if dist <= r {
        return Err(CbfError::InCollision {
            distance: dist.to_f64().unwrap_or(f64::NAN),
            radius: r.to_f64().unwrap_or(f64::NAN),
        });
    }
    Ok((dist * dist - r * r).sqrt() / dist)
}

/// Collision-cone barrier value; nonnegative iff the relative velocity lies
/// outside the cone of collision courses.
pub fn c3bf_value<T: Real>(p_rel: Vec2<T>, v_rel: Vec2<T>, r: T) -> Result<T, CbfError> {
    let dist_sq = p_rel.norm_sq();
    if dist_sq <= r * r {
        return Err(CbfError::InCollision {
            distance: dist_sq.sqrt().to_f64().unwrap_or(f64::NAN),
            radius: r.to_f64().unwrap_or(f64::NAN),
        });
    }
    Ok(p_rel.dot(v_rel) + v_rel.norm() * (dist_sq - r * r).sqrt())
}

/// Gradients of the barrier with respect to `p_rel` and `v_rel`.
///
/// With `root = sqrt(|p_rel|^2 - r^2)`:
/// `grad_p = v_rel + |v_rel| * p_rel / root` and
/// `grad_v = p_rel + root * v_rel / |v_rel|`. At `v_rel = 0` the direction
/// `v_rel / |v_rel|` is taken as zero (subgradient selection), leaving
/// `grad_v = p_rel` so the constraint keeps control authority.
pub fn c3bf_gradients<T: Real>(
    p_rel: Vec2<T>,
    v_rel: Vec2<T>,
    r: T,
) -> Result<(Vec2<T>, Vec2<T>), CbfError> {
    let dist_sq = p_rel.norm_sq();
    if dist_sq <= r * r {
        return Err(CbfError::InCollision {
            distance: dist_sq.sqrt().to_f64().unwrap_or(f64::NAN),
            radius: r.to_f64().unwrap_or(f64::NAN),
        });
    }
    let root = (dist_sq - r * r).sqrt();
    let speed = v_rel.norm();
    let grad_p = v_rel + p_rel * (speed / root);
    let grad_v = if speed > T::zero() {
        p_rel + v_rel * (root / speed)
    } else {
        p_rel
    };
    Ok((grad_p, grad_v))
}

/// Assemble the robust hard constraint row for one obstacle.
///
/// In relative coordinates `d p_rel / dt = v_rel` and
/// `d v_rel / dt = a_obs - f_upsilon - h_upsilon (u + d)`, so
/// `L_g h = -grad_v^T h_upsilon` and the constant part collects
/// `grad_p . v_rel - grad_v . f_upsilon + grad_v . a_obs + alpha * h`
/// minus the worst-case disturbance `|L_g h|_1 * d_bar`.
pub fn c3bf_row<T: Real>(
    c: &CanonicalState<T>,
    dyn_: &AffineDynamics<T>,
    os: &ObstacleState<T>,
    r_eff: T,
    alpha_gain: T,
    d_bar: T,
) -> Result<C3bfRow<T>, CbfError> {
    let p_rel = os.p - c.p;
    let v_rel = os.v - c.upsilon;
    let h = c3bf_value(p_rel, v_rel, r_eff)?;
    let (grad_p, grad_v) = c3bf_gradients(p_rel, v_rel, r_eff)?;

    let a = -dyn_.h_upsilon.tr_mul_vec(grad_v);
    let lf = grad_p.dot(v_rel) - grad_v.dot(dyn_.f_upsilon);
    let lt = grad_v.dot(os.a);
    let b = lf + lt + alpha_gain * h - a.norm_l1() * d_bar;
    Ok(C3bfRow {
        a,
        b,
        h_value: h,
        degenerate: a.norm() < lit::<T>(DEGENERATE_ROW_EPS),
    })
}

/// Assemble the requested soft rows at the current state.
///
/// `v_min`/`v_max` act on the squared speed (`h = +-(upsilon.upsilon -
/// bound^2)`), the steering row on `delta3` directly (its rate is the second
/// input). Rows are emitted even when momentarily degenerate; their slack
/// keeps the QP feasible.
pub fn soft_rows<T: Real>(
    state: &VehicleState<T>,
    params: &VehicleParams<T>,
    dyn_: &AffineDynamics<T>,
    specs: &[SoftBarrierSpec<T>],
    d_bar: T,
    upsilon: Vec2<T>,
) -> Result<Vec<SoftRow<T>>, CbfError> {
    let two = lit::<T>(2.0);
    let mut rows = Vec::with_capacity(specs.len());
    for spec in specs {
        let (h, lf, a) = match spec.kind {
            SoftBarrierKind::VMin | SoftBarrierKind::VMax => {
                let bound = match (spec.kind, params) {
                    (SoftBarrierKind::VMin, VehicleParams::Ackermann(p)) => p.v_min,
                    (SoftBarrierKind::VMax, VehicleParams::Ackermann(p)) => p.v_max,
                    (SoftBarrierKind::VMin, VehicleParams::DiffDrive(p)) => p.v_min,
                    (SoftBarrierKind::VMax, VehicleParams::DiffDrive(p)) => p.v_max,
                    _ => return Err(CbfError::UnsupportedBarrier { kind: spec.kind }),
                };
                let sign = if spec.kind == SoftBarrierKind::VMin {
                    T::one()
                } else {
                    -T::one()
                };
                let h = sign * (upsilon.norm_sq() - bound * bound);
                let lf = sign * two * upsilon.dot(dyn_.f_upsilon);
                let a = dyn_.h_upsilon.tr_mul_vec(upsilon) * (sign * two);
                (h, lf, a)
            }
            SoftBarrierKind::Delta3 => match (state, params) {
                (&VehicleState::Ackermann { delta3, .. }, VehicleParams::Ackermann(p)) => {
                    let h = p.delta3_max * p.delta3_max - delta3 * delta3;
                    // d delta3 / dt = u2, so only the second input acts
                    (h, T::zero(), Vec2::new(T::zero(), -two * delta3))
                }
                _ => return Err(CbfError::UnsupportedBarrier { kind: spec.kind }),
            },
        };
        let margin = match spec.margin {
            MarginPolicy::MatchedDisturbance => a.norm_l1() * d_bar,
            MarginPolicy::Fixed(m) => m,
        };
        rows.push(SoftRow {
            kind: spec.kind,
            a,
            b: lf + spec.alpha_gain * h - margin,
            h_value: h,
        });
    }
    Ok(rows)
}
