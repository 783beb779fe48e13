//! Reference trajectories with analytic first and second derivatives.

use crate::math::Vec2;
use crate::real::{lit, Real};
use crate::smc::ReferenceSample;

use super::SimError;

#[derive(Clone, Debug, PartialEq)]
pub enum ReferenceSpec<T> {
    Circle {
        center: Vec2<T>,
        radius: T,
        omega: T,
        phase: T,
    },
    /// Componentwise `center_i + amp_i * sin(omega_i t + phase_i)`.
    Lissajous {
        center: Vec2<T>,
        amp: Vec2<T>,
        omega: Vec2<T>,
        phase: Vec2<T>,
    },
    /// Clamped cubic spline through timed waypoints.
    Waypoints(ClampedSpline<T>),
}

impl<T: Real> ReferenceSpec<T> {
    pub fn validate(&self) -> Result<(), SimError> {
        let finite = match self {
            ReferenceSpec::Circle {
                center,
                radius,
                omega,
                phase,
            } => center.is_finite() && radius.is_finite() && omega.is_finite() && phase.is_finite(),
            ReferenceSpec::Lissajous {
                center,
                amp,
                omega,
                phase,
            } => center.is_finite() && amp.is_finite() && omega.is_finite() && phase.is_finite(),
            ReferenceSpec::Waypoints(_) => true,
        };
        if !finite {
            return Err(SimError::InvalidScenario(
                "non-finite reference parameters".into(),
            ));
        }
        if let ReferenceSpec::Circle { radius, .. } = self {
            if *radius <= T::zero() {
                return Err(SimError::InvalidScenario(
                    "circle radius must be positive".into(),
                ));
            }
        }
        Ok(())
    }
}

/// Sample the reference at time `t`.
pub fn reference<T: Real>(spec: &ReferenceSpec<T>, t: T) -> ReferenceSample<T> {
    match spec {
        ReferenceSpec::Circle {
            center,
            radius,
            omega,
            phase,
        } => {
            let ang = *omega * t + *phase;
            let (s, c) = ang.sin_cos();
            let radial = Vec2::new(c, s) * *radius;
            ReferenceSample {
                p_ref: *center + radial,
                pdot_ref: Vec2::new(-s, c) * (*radius * *omega),
                pddot_ref: -radial * (*omega * *omega),
            }
        }
        ReferenceSpec::Lissajous {
            center,
            amp,
            omega,
            phase,
        } => {
            let ax = omega.x * t + phase.x;
            let ay = omega.y * t + phase.y;
            ReferenceSample {
                p_ref: Vec2::new(center.x + amp.x * ax.sin(), center.y + amp.y * ay.sin()),
                pdot_ref: Vec2::new(amp.x * omega.x * ax.cos(), amp.y * omega.y * ay.cos()),
                pddot_ref: Vec2::new(
                    -amp.x * omega.x * omega.x * ax.sin(),
                    -amp.y * omega.y * omega.y * ay.sin(),
                ),
            }
        }
        ReferenceSpec::Waypoints(spline) => spline.sample(t),
    }
}

/// Clamped cubic spline: interpolates the waypoints with prescribed
/// endpoint velocities and twice-continuous derivatives in between.
#[derive(Clone, Debug, PartialEq)]
pub struct ClampedSpline<T> {
    knots: Vec<T>,
    /// Per-axis values and second derivatives at the knots.
    values: [Vec<T>; 2],
    moments: [Vec<T>; 2],
}

impl<T: Real> ClampedSpline<T> {
    pub fn new(
        points: &[(T, Vec2<T>)],
        v_start: Vec2<T>,
        v_end: Vec2<T>,
    ) -> Result<Self, SimError> {
        if points.len() < 2 {
            return Err(SimError::InvalidScenario(
                "spline needs at least two waypoints".into(),
            ));
        }
        for w in points.windows(2) {
            if w[1].0 <= w[0].0 {
                return Err(SimError::InvalidScenario(
                    "spline waypoint times must be strictly increasing".into(),
                ));
            }
        }
        if !(v_start.is_finite() && v_end.is_finite())
            || points
                .iter()
                .any(|(t, p)| !(t.is_finite() && p.is_finite()))
        {
            return Err(SimError::InvalidScenario("non-finite spline data".into()));
        }

        let knots: Vec<T> = points.iter().map(|(t, _)| *t).collect();
        let mut values: [Vec<T>; 2] = [Vec::new(), Vec::new()];
        values[0] = points.iter().map(|(_, p)| p.x).collect();
        values[1] = points.iter().map(|(_, p)| p.y).collect();
        let moments = [
            solve_clamped_moments(&knots, &values[0], v_start.x, v_end.x),
            solve_clamped_moments(&knots, &values[1], v_start.y, v_end.y),
        ];
        Ok(Self {
            knots,
            values,
            moments,
        })
    }

    pub fn start_time(&self) -> T {
        self.knots[0]
    }

    pub fn end_time(&self) -> T {
        *self.knots.last().unwrap()
    }

    /// Evaluate position, velocity and acceleration. Outside the knot span
    /// the end segments extend polynomially.
    pub fn sample(&self, t: T) -> ReferenceSample<T> {
        let seg = self.segment_index(t);
        let (mut p, mut v, mut a) = (Vec2::zero(), Vec2::zero(), Vec2::zero());
        for axis in 0..2 {
            let (pi, vi, ai) = eval_segment(
                self.knots[seg],
                self.knots[seg + 1],
                self.values[axis][seg],
                self.values[axis][seg + 1],
                self.moments[axis][seg],
                self.moments[axis][seg + 1],
                t,
            );
            if axis == 0 {
                p.x = pi;
                v.x = vi;
                a.x = ai;
            } else {
                p.y = pi;
                v.y = vi;
                a.y = ai;
            }
        }
        ReferenceSample {
            p_ref: p,
            pdot_ref: v,
            pddot_ref: a,
        }
    }

    fn segment_index(&self, t: T) -> usize {
        let n = self.knots.len();
        if t <= self.knots[0] {
            return 0;
        }
        for i in 0..(n - 1) {
            if t < self.knots[i + 1] {
                return i;
            }
        }
        n - 2
    }
}

/// Tridiagonal (Thomas) solve for the knot second derivatives of a clamped
/// cubic spline.
fn solve_clamped_moments<T: Real>(knots: &[T], y: &[T], v0: T, vn: T) -> Vec<T> {
    let n = knots.len();
    let six = lit::<T>(6.0);
    let two = lit::<T>(2.0);
    let h: Vec<T> = knots.windows(2).map(|w| w[1] - w[0]).collect();

    // rows: diag, upper, lower, rhs
    let mut diag = vec![T::zero(); n];
    let mut upper = vec![T::zero(); n];
    let mut lower = vec![T::zero(); n];
    let mut rhs = vec![T::zero(); n];

    diag[0] = two * h[0];
    upper[0] = h[0];
    rhs[0] = six * ((y[1] - y[0]) / h[0] - v0);
    for i in 1..(n - 1) {
        lower[i] = h[i - 1];
        diag[i] = two * (h[i - 1] + h[i]);
        upper[i] = h[i];
        rhs[i] = six * ((y[i + 1] - y[i]) / h[i] - (y[i] - y[i - 1]) / h[i - 1]);
    }
    lower[n - 1] = h[n - 2];
    diag[n - 1] = two * h[n - 2];
    rhs[n - 1] = six * (vn - (y[n - 1] - y[n - 2]) / h[n - 2]);

    for i in 1..n {
        let w = lower[i] / diag[i - 1];
        diag[i] -= w * upper[i - 1];
        let prev = rhs[i - 1];
        rhs[i] -= w * prev;
    }
    let mut m = vec![T::zero(); n];
    m[n - 1] = rhs[n - 1] / diag[n - 1];
    for i in (0..(n - 1)).rev() {
        m[i] = (rhs[i] - upper[i] * m[i + 1]) / diag[i];
    }
    m
}

#[allow(clippy::too_many_arguments)]
fn eval_segment<T: Real>(t0: T, t1: T, y0: T, y1: T, m0: T, m1: T, t: T) -> (T, T, T) {
    let six = lit::<T>(6.0);
    let two = lit::<T>(2.0);
    let h = t1 - t0;
    let a = t1 - t;
    let b = t - t0;
    let p = m0 * a * a * a / (six * h)
        + m1 * b * b * b / (six * h)
        + (y0 / h - m0 * h / six) * a
        + (y1 / h - m1 * h / six) * b;
    let v = -m0 * a * a / (two * h) + m1 * b * b / (two * h) + (y1 - y0) / h - (m1 - m0) * h / six;
    let acc = (m0 * a + m1 * b) / h;
    (p, v, acc)
}
