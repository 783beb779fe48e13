//! Vehicle models and their canonical control-affine form.
//!
//! Three planar vehicles are supported: a kinematic Ackermann (bicycle)
//! model, a differential drive, and a double integrator. Each native state
//! maps onto the same canonical pair `(p, upsilon)` with dynamics
//!
//! ```text
//! dp/dt       = upsilon
//! dupsilon/dt = f_upsilon + h_upsilon * (u + d)
//! ```
//!
//! so a single tracking controller and safety filter serve all of them.
//! For the ground vehicles `h_upsilon` factors as a rotation times
//! `diag(1, K(delta3) * v)` (with `K = 1` for the differential drive), which
//! makes its singular values available in closed form and bounded away from
//! zero whenever the speed is.

use thiserror::Error;

use crate::math::{Mat2, Vec2};
use crate::real::{lit, Real};

/// Speeds below this leave `h_upsilon` numerically singular for the ground
/// vehicles; `affine_terms` refuses rather than regularizing.
pub const SPEED_SINGULARITY_EPS: f64 = 1e-9;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ModelError {
    #[error("non-finite input in {0}")]
    NonFinite(&'static str),
    #[error("steering angle {angle} outside (-pi/2, pi/2)")]
    SteeringOutOfRange { angle: f64 },
    #[error("input map singular: |v| = {speed:e} is below {SPEED_SINGULARITY_EPS:e}")]
    SingularSpeed { speed: f64 },
    #[error("vehicle state does not match the supplied parameters")]
    KindMismatch,
    #[error("invalid parameters: {0}")]
    InvalidParams(String),
}

/// Kinematic bicycle parameters.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct AckermannParams<T> {
    /// Center of mass to front axle, m.
    pub l_f: T,
    /// Center of mass to rear axle, m.
    pub l_r: T,
    /// Lowest admissible forward speed, m/s.
    pub v_min: T,
    /// Highest admissible forward speed, m/s.
    pub v_max: T,
    /// Steering angle bound, rad, strictly below pi/2.
    pub delta3_max: T,
}

impl<T: Real> AckermannParams<T> {
    /// Rear-axle share of the wheelbase, `l_r / (l_r + l_f)`.
    #[inline]
    pub fn kappa(&self) -> T {
        self.l_r / (self.l_r + self.l_f)
    }

    pub fn validate(&self) -> Result<(), ModelError> {
        let fin = self.l_f.is_finite()
            && self.l_r.is_finite()
            && self.v_min.is_finite()
            && self.v_max.is_finite()
            && self.delta3_max.is_finite();
        if !fin {
            return Err(ModelError::NonFinite("AckermannParams"));
        }
        if self.l_f <= T::zero() || self.l_r <= T::zero() {
            return Err(ModelError::InvalidParams(
                "axle distances must be positive".into(),
            ));
        }
        if !(T::zero() < self.v_min && self.v_min < self.v_max) {
            return Err(ModelError::InvalidParams("need 0 < v_min < v_max".into()));
        }
        if !(T::zero() < self.delta3_max && self.delta3_max < T::FRAC_PI_2()) {
            return Err(ModelError::InvalidParams(
                "need 0 < delta3_max < pi/2".into(),
            ));
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DiffDriveParams<T> {
    pub v_min: T,
    pub v_max: T,
    /// Heading-rate bound, rad/s; enforced through the input box.
    pub omega_max: T,
}

impl<T: Real> DiffDriveParams<T> {
    pub fn validate(&self) -> Result<(), ModelError> {
        if !(self.v_min.is_finite() && self.v_max.is_finite() && self.omega_max.is_finite()) {
            return Err(ModelError::NonFinite("DiffDriveParams"));
        }
        if !(T::zero() < self.v_min && self.v_min < self.v_max) {
            return Err(ModelError::InvalidParams("need 0 < v_min < v_max".into()));
        }
        if self.omega_max <= T::zero() {
            return Err(ModelError::InvalidParams("need omega_max > 0".into()));
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DoubleIntegratorParams<T> {
    /// Symmetric box bound on each acceleration component, m/s^2.
    pub a_max: T,
}

impl<T: Real> DoubleIntegratorParams<T> {
    pub fn validate(&self) -> Result<(), ModelError> {
        if !self.a_max.is_finite() {
            return Err(ModelError::NonFinite("DoubleIntegratorParams"));
        }
        if self.a_max <= T::zero() {
            return Err(ModelError::InvalidParams("need a_max > 0".into()));
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum VehicleParams<T> {
    Ackermann(AckermannParams<T>),
    DiffDrive(DiffDriveParams<T>),
    DoubleIntegrator(DoubleIntegratorParams<T>),
}

impl<T: Real> VehicleParams<T> {
    pub fn validate(&self) -> Result<(), ModelError> {
        match self {
            VehicleParams::Ackermann(p) => p.validate(),
            VehicleParams::DiffDrive(p) => p.validate(),
            VehicleParams::DoubleIntegrator(p) => p.validate(),
        }
    }
}

/// Native state of one of the supported vehicles.
///
/// Angles are stored unwrapped (continuous, not reduced mod 2*pi). The
/// Ackermann variant keeps the steering angle `delta3`; the slip angle
/// `delta2` is recomputed from it on demand.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum VehicleState<T> {
    Ackermann {
        p: Vec2<T>,
        v: T,
        delta1: T,
        delta3: T,
    },
    DiffDrive {
        p: Vec2<T>,
        v: T,
        theta: T,
    },
    DoubleIntegrator {
        p: Vec2<T>,
        upsilon: Vec2<T>,
    },
}

impl<T: Real> VehicleState<T> {
    #[inline]
    pub fn position(&self) -> Vec2<T> {
        match *self {
            VehicleState::Ackermann { p, .. } => p,
            VehicleState::DiffDrive { p, .. } => p,
            VehicleState::DoubleIntegrator { p, .. } => p,
        }
    }

    pub fn is_finite(&self) -> bool {
        match *self {
            VehicleState::Ackermann {
                p,
                v,
                delta1,
                delta3,
            } => p.is_finite() && v.is_finite() && delta1.is_finite() && delta3.is_finite(),
            VehicleState::DiffDrive { p, v, theta } => {
                p.is_finite() && v.is_finite() && theta.is_finite()
            }
            VehicleState::DoubleIntegrator { p, upsilon } => p.is_finite() && upsilon.is_finite(),
        }
    }

    pub fn matches(&self, params: &VehicleParams<T>) -> bool {
        matches!(
            (self, params),
            (VehicleState::Ackermann { .. }, VehicleParams::Ackermann(_))
                | (VehicleState::DiffDrive { .. }, VehicleParams::DiffDrive(_))
                | (
                    VehicleState::DoubleIntegrator { .. },
                    VehicleParams::DoubleIntegrator(_)
                )
        )
    }
}

/// The controller-facing view of any vehicle: planar position and the
/// alternate velocity vector.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct CanonicalState<T> {
    pub p: Vec2<T>,
    pub upsilon: Vec2<T>,
}

/// Drift and input matrix of the canonical velocity dynamics at one state.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct AffineDynamics<T> {
    pub f_upsilon: Vec2<T>,
    pub h_upsilon: Mat2<T>,
}

/// Kinematic slip angle `atan(kappa * tan(delta3))`.
pub fn slip_angle<T: Real>(delta3: T, params: &AckermannParams<T>) -> Result<T, ModelError> {
    if !delta3.is_finite() {
        return Err(ModelError::NonFinite("slip_angle delta3"));
    }
    if delta3.abs() >= T::FRAC_PI_2() {
        return Err(ModelError::SteeringOutOfRange {
            angle: delta3.to_f64().unwrap_or(f64::NAN),
        });
    }
    Ok((params.kappa() * delta3.tan()).atan())
}

/// Curvature factor `K(delta3)`, the sensitivity of the slip angle to the
/// steering angle. Evaluated in the rational form
/// `kappa * (1 + t) / (1 + kappa^2 * t)` with `t = tan^2(delta3)`, which is
/// even in `delta3`, equals `kappa` at zero, and is strictly increasing in
/// `|delta3|`.
pub fn curvature_factor<T: Real>(delta3: T, params: &AckermannParams<T>) -> Result<T, ModelError> {
    if !delta3.is_finite() {
        return Err(ModelError::NonFinite("curvature_factor delta3"));
    }
    if delta3.abs() >= T::FRAC_PI_2() {
        return Err(ModelError::SteeringOutOfRange {
            angle: delta3.to_f64().unwrap_or(f64::NAN),
        });
    }
    let kappa = params.kappa();
    let t = delta3.tan().powi(2);
    Ok(kappa * (T::one() + t) / (T::one() + kappa * kappa * t))
}

/// Map a native state onto the canonical `(p, upsilon)` pair.
///
/// For both ground vehicles `|upsilon| = |v|`; the double integrator is the
/// identity.
pub fn to_canonical<T: Real>(
    state: &VehicleState<T>,
    params: &VehicleParams<T>,
) -> Result<CanonicalState<T>, ModelError> {
    match (state, params) {
        (
            &VehicleState::Ackermann {
                p,
                v,
                delta1,
                delta3,
            },
            VehicleParams::Ackermann(ap),
        ) => {
            let psi = delta1 + slip_angle(delta3, ap)?;
            let (s, c) = psi.sin_cos();
            Ok(CanonicalState {
                p,
                upsilon: Vec2::new(v * c, v * s),
            })
        }
        (&VehicleState::DiffDrive { p, v, theta }, VehicleParams::DiffDrive(_)) => {
            let (s, c) = theta.sin_cos();
            Ok(CanonicalState {
                p,
                upsilon: Vec2::new(v * c, v * s),
            })
        }
        (&VehicleState::DoubleIntegrator { p, upsilon }, VehicleParams::DoubleIntegrator(_)) => {
            Ok(CanonicalState { p, upsilon })
        }
        _ => Err(ModelError::KindMismatch),
    }
}

/// Drift `f_upsilon` and input matrix `h_upsilon` of the canonical velocity
/// dynamics at `state`.
///
/// For the ground vehicles the map is singular at `v = 0`; speeds below
/// [`SPEED_SINGULARITY_EPS`] are rejected. Keeping `v` away from zero is the
/// job of the `v_min` soft barrier, not of this function.
pub fn affine_terms<T: Real>(
    state: &VehicleState<T>,
    params: &VehicleParams<T>,
) -> Result<AffineDynamics<T>, ModelError> {
    let eps = lit::<T>(SPEED_SINGULARITY_EPS);
    match (state, params) {
        (
            &VehicleState::Ackermann {
                v, delta1, delta3, ..
            },
            VehicleParams::Ackermann(ap),
        ) => {
            if v.abs() < eps {
                return Err(ModelError::SingularSpeed {
                    speed: v.abs().to_f64().unwrap_or(f64::NAN),
                });
            }
            let delta2 = slip_angle(delta3, ap)?;
            let k = curvature_factor(delta3, ap)?;
            let psi = delta1 + delta2;
            let (s, c) = psi.sin_cos();
            let f_mag = v * v / ap.l_r * delta2.sin();
            Ok(AffineDynamics {
                f_upsilon: Vec2::new(-f_mag * s, f_mag * c),
                h_upsilon: Mat2::new(c, -k * v * s, s, k * v * c),
            })
        }
        (&VehicleState::DiffDrive { v, theta, .. }, VehicleParams::DiffDrive(_)) => {
            if v.abs() < eps {
                return Err(ModelError::SingularSpeed {
                    speed: v.abs().to_f64().unwrap_or(f64::NAN),
                });
            }
            let (s, c) = theta.sin_cos();
            Ok(AffineDynamics {
                f_upsilon: Vec2::zero(),
                h_upsilon: Mat2::new(c, -v * s, s, v * c),
            })
        }
        (VehicleState::DoubleIntegrator { .. }, VehicleParams::DoubleIntegrator(_)) => {
            Ok(AffineDynamics {
                f_upsilon: Vec2::zero(),
                h_upsilon: Mat2::identity(),
            })
        }
        _ => Err(ModelError::KindMismatch),
    }
}

/// Time derivative of the native state under input `u` and matched
/// disturbance `d` (added to `u` componentwise).
///
/// The returned value reuses the state layout: each field holds the
/// derivative of the corresponding state entry.
pub fn state_derivative<T: Real>(
    state: &VehicleState<T>,
    params: &VehicleParams<T>,
    u: Vec2<T>,
    d: Vec2<T>,
) -> Result<VehicleState<T>, ModelError> {
    let w = u + d;
    match (state, params) {
        (
            &VehicleState::Ackermann {
                v, delta1, delta3, ..
            },
            VehicleParams::Ackermann(ap),
        ) => {
            let delta2 = slip_angle(delta3, ap)?;
            let (s, c) = (delta1 + delta2).sin_cos();
            Ok(VehicleState::Ackermann {
                p: Vec2::new(v * c, v * s),
                v: w.x,
                delta1: v / ap.l_r * delta2.sin(),
                delta3: w.y,
            })
        }
        (&VehicleState::DiffDrive { v, theta, .. }, VehicleParams::DiffDrive(_)) => {
            let (s, c) = theta.sin_cos();
            Ok(VehicleState::DiffDrive {
                p: Vec2::new(v * c, v * s),
                v: w.x,
                theta: w.y,
            })
        }
        (&VehicleState::DoubleIntegrator { upsilon, .. }, VehicleParams::DoubleIntegrator(_)) => {
            Ok(VehicleState::DoubleIntegrator {
                p: upsilon,
                upsilon: w,
            })
        }
        _ => Err(ModelError::KindMismatch),
    }
}

/// Singular values of a 2x2 matrix, `(sigma_min, sigma_max)`.
///
/// Closed form: with `e = (a + d)/2`, `f = (a - d)/2`, `g = (c + b)/2`,
/// `h = (c - b)/2`, the values are `|q - r|` and `q + r` where
/// `q = hypot(e, h)` and `r = hypot(f, g)`. Exact, deterministic, and free of
/// any iterative decomposition.
pub fn singular_values<T: Real>(m: &Mat2<T>) -> (T, T) {
    let two = lit::<T>(2.0);
    let e = (m.m[0][0] + m.m[1][1]) / two;
    let f = (m.m[0][0] - m.m[1][1]) / two;
    let g = (m.m[1][0] + m.m[0][1]) / two;
    let h = (m.m[1][0] - m.m[0][1]) / two;
    let q = e.hypot(h);
    let r = f.hypot(g);
    ((q - r).abs(), q + r)
}

/// Closed-form band containing every singular value of `h_upsilon` over the
/// admissible Ackermann box `{v in [v_min, v_max], |delta3| <= delta3_max}`:
/// `lower = min(1, kappa * v_min)`, `upper = max(1, K(delta3_max) * v_max)`.
pub fn sigma_bounds<T: Real>(params: &AckermannParams<T>) -> Result<(T, T), ModelError> {
    let k_max = curvature_factor(params.delta3_max, params)?;
    Ok((
        T::one().min(params.kappa() * params.v_min),
        T::one().max(k_max * params.v_max),
    ))
}

/// Upper bound on `sigma_max(h_upsilon)` over the vehicle's admissible set,
/// used by the switching-gain check.
pub fn sigma_upper<T: Real>(params: &VehicleParams<T>) -> Result<T, ModelError> {
    match params {
        VehicleParams::Ackermann(p) => Ok(sigma_bounds(p)?.1),
        // h factors as R(theta) * diag(1, v), so sigma_max = max(1, v_max).
        VehicleParams::DiffDrive(p) => Ok(T::one().max(p.v_max)),
        VehicleParams::DoubleIntegrator(_) => Ok(T::one()),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn f1tenth_params() -> AckermannParams<f64> {
        AckermannParams {
            l_f: 0.17145,
            l_r: 0.15875,
            v_min: 0.25,
            v_max: 3.0,
            delta3_max: 0.4,
        }
    }

    // Reference values below are frozen from a 40-digit evaluation of the
    // closed forms.
    const SLIP_04: f64 = 0.20053393471199587;
    const KAPPA: f64 = 0.4807692307692308; // = 25/52 for the f1tenth geometry
    const K_04: f64 = 0.5442230126877040;

    #[test]
    fn slip_angle_examples() {
        let p = f1tenth_params();
        assert_eq!(slip_angle(0.0, &p).unwrap(), 0.0);
        assert!((slip_angle(0.4, &p).unwrap() - SLIP_04).abs() < 1e-12);
        assert!((slip_angle(-0.4, &p).unwrap() + SLIP_04).abs() < 1e-12);
        assert!(matches!(
            slip_angle(f64::NAN, &p),
            Err(ModelError::NonFinite(_))
        ));
    }

    #[test]
    fn curvature_factor_examples() {
        let p = f1tenth_params();
        assert!((curvature_factor(0.0, &p).unwrap() - KAPPA).abs() < 1e-15);
        assert!((curvature_factor(0.4, &p).unwrap() - K_04).abs() < 1e-12);
        // even in delta3, strictly increasing in |delta3|
        assert_eq!(
            curvature_factor(0.3, &p).unwrap(),
            curvature_factor(-0.3, &p).unwrap()
        );
        assert!(curvature_factor(0.2, &p).unwrap() < curvature_factor(0.3, &p).unwrap());
        assert!(matches!(
            curvature_factor(1.6, &p),
            Err(ModelError::SteeringOutOfRange { .. })
        ));
    }

    #[test]
    fn curvature_factor_matches_secant_form() {
        // The rational form used here must agree with the sec^2 form.
        let p = f1tenth_params();
        for i in 0..2000 {
            let d3 = -0.4 + 0.8 * (i as f64) / 1999.0;
            let kappa = p.kappa();
            let sec2 = 1.0 / d3.cos().powi(2);
            let direct = kappa * sec2 / (1.0 + kappa.powi(2) * d3.tan().powi(2));
            assert!((curvature_factor(d3, &p).unwrap() - direct).abs() < 1e-12);
        }
    }

    #[test]
    fn curvature_factor_monotone_on_grid() {
        let p = f1tenth_params();
        let mut prev = curvature_factor(0.0, &p).unwrap();
        for i in 1..10_000 {
            let d3 = p.delta3_max * (i as f64) / 9_999.0;
            let k = curvature_factor(d3, &p).unwrap();
            assert!(k > prev, "K not strictly increasing at delta3 = {d3}");
            prev = k;
        }
    }

    #[test]
    fn to_canonical_examples() {
        let ap = VehicleParams::Ackermann(f1tenth_params());
        let c = to_canonical(
            &VehicleState::Ackermann {
                p: Vec2::zero(),
                v: 1.0,
                delta1: 0.0,
                delta3: 0.0,
            },
            &ap,
        )
        .unwrap();
        assert_eq!(c.upsilon, Vec2::new(1.0, 0.0));

        let dd = VehicleParams::DiffDrive(DiffDriveParams {
            v_min: 0.01,
            v_max: 0.2,
            omega_max: 2.0,
        });
        let c = to_canonical(
            &VehicleState::DiffDrive {
                p: Vec2::zero(),
                v: 0.2,
                theta: std::f64::consts::FRAC_PI_2,
            },
            &dd,
        )
        .unwrap();
        assert!(c.upsilon.x.abs() < 1e-15);
        assert!((c.upsilon.y - 0.2).abs() < 1e-15);

        // v = 2, delta1 = 0.3, delta3 = 0.4: psi = 0.3 + slip(0.4)
        let c = to_canonical(
            &VehicleState::Ackermann {
                p: Vec2::zero(),
                v: 2.0,
                delta1: 0.3,
                delta3: 0.4,
            },
            &ap,
        )
        .unwrap();
        assert!((c.upsilon.x - 1.7546529097445758).abs() < 1e-12);
        assert!((c.upsilon.y - 0.9597880840711108).abs() < 1e-12);
        // |upsilon| = |v| for ground vehicles
        assert!((c.upsilon.norm() - 2.0).abs() < 1e-14);
    }

    #[test]
    fn affine_terms_examples() {
        let dd = VehicleParams::DiffDrive(DiffDriveParams {
            v_min: 0.01,
            v_max: 2.0,
            omega_max: 2.0,
        });
        let dyn_ = affine_terms(
            &VehicleState::DiffDrive {
                p: Vec2::zero(),
                v: 1.0,
                theta: 0.0,
            },
            &dd,
        )
        .unwrap();
        assert_eq!(dyn_.f_upsilon, Vec2::zero());
        assert_eq!(dyn_.h_upsilon, Mat2::identity());

        let ap = VehicleParams::Ackermann(f1tenth_params());
        let dyn_ = affine_terms(
            &VehicleState::Ackermann {
                p: Vec2::zero(),
                v: 1.0,
                delta1: 0.0,
                delta3: 0.0,
            },
            &ap,
        )
        .unwrap();
        assert_eq!(dyn_.f_upsilon, Vec2::zero());
        assert!((dyn_.h_upsilon.m[0][0] - 1.0).abs() < 1e-15);
        assert!((dyn_.h_upsilon.m[1][1] - KAPPA).abs() < 1e-15);
        assert_eq!(dyn_.h_upsilon.m[0][1], 0.0);
        assert_eq!(dyn_.h_upsilon.m[1][0], 0.0);

        let di = VehicleParams::DoubleIntegrator(DoubleIntegratorParams { a_max: 1.0 });
        let dyn_ = affine_terms(
            &VehicleState::DoubleIntegrator {
                p: Vec2::zero(),
                upsilon: Vec2::new(3.0, -1.0),
            },
            &di,
        )
        .unwrap();
        assert_eq!(dyn_.f_upsilon, Vec2::zero());
        assert_eq!(dyn_.h_upsilon, Mat2::identity());

        assert!(matches!(
            affine_terms(
                &VehicleState::Ackermann {
                    p: Vec2::zero(),
                    v: 1e-12,
                    delta1: 0.0,
                    delta3: 0.0,
                },
                &ap,
            ),
            Err(ModelError::SingularSpeed { .. })
        ));
    }

    #[test]
    fn state_derivative_examples() {
        let ap = VehicleParams::Ackermann(f1tenth_params());
        let d = state_derivative(
            &VehicleState::Ackermann {
                p: Vec2::zero(),
                v: 1.0,
                delta1: 0.0,
                delta3: 0.0,
            },
            &ap,
            Vec2::zero(),
            Vec2::zero(),
        )
        .unwrap();
        match d {
            VehicleState::Ackermann {
                p,
                v,
                delta1,
                delta3,
            } => {
                assert_eq!(p, Vec2::new(1.0, 0.0));
                assert_eq!(v, 0.0);
                assert_eq!(delta1, 0.0);
                assert_eq!(delta3, 0.0);
            }
            _ => unreachable!(),
        }

        // steering at 0.4 rad: heading rate = (v / l_r) * sin(slip(0.4))
        let d = state_derivative(
            &VehicleState::Ackermann {
                p: Vec2::zero(),
                v: 1.0,
                delta1: 0.0,
                delta3: 0.4,
            },
            &ap,
            Vec2::zero(),
            Vec2::zero(),
        )
        .unwrap();
        match d {
            VehicleState::Ackermann { delta1, .. } => {
                assert!((delta1 - 1.2547564977462964).abs() < 1e-12);
            }
            _ => unreachable!(),
        }

        let dd = VehicleParams::DiffDrive(DiffDriveParams {
            v_min: 0.01,
            v_max: 0.5,
            omega_max: 2.0,
        });
        let d = state_derivative(
            &VehicleState::DiffDrive {
                p: Vec2::zero(),
                v: 0.2,
                theta: 0.0,
            },
            &dd,
            Vec2::new(0.1, 0.5),
            Vec2::zero(),
        )
        .unwrap();
        match d {
            VehicleState::DiffDrive { p, v, theta } => {
                assert_eq!(p, Vec2::new(0.2, 0.0));
                assert_eq!(v, 0.1);
                assert_eq!(theta, 0.5);
            }
            _ => unreachable!(),
        }
    }

    #[test]
    fn singular_values_examples() {
        let (lo, hi) = singular_values(&Mat2::<f64>::identity());
        assert_eq!((lo, hi), (1.0, 1.0));

        let ap = VehicleParams::Ackermann(f1tenth_params());
        let dyn_ = affine_terms(
            &VehicleState::Ackermann {
                p: Vec2::zero(),
                v: 3.0,
                delta1: 0.7,
                delta3: 0.4,
            },
            &ap,
        )
        .unwrap();
        let (lo, hi) = singular_values(&dyn_.h_upsilon);
        assert!((lo - 1.0).abs() < 1e-12);
        assert!((hi - 3.0 * K_04).abs() < 1e-12);

        // orthogonal invariance
        let m = Mat2::<f64>::rotation(1.1).mul_mat(Mat2::diagonal(1.0, 0.5));
        let (lo, hi) = singular_values(&m);
        assert!((lo - 0.5).abs() < 1e-14);
        assert!((hi - 1.0).abs() < 1e-14);
    }

    #[test]
    fn sigma_bounds_examples() {
        let p = f1tenth_params();
        let (lo, hi) = sigma_bounds(&p).unwrap();
        assert!((lo - 0.25 * KAPPA).abs() < 1e-15);
        assert!((hi - 3.0 * K_04).abs() < 1e-12);
        assert!((lo - 0.12019230769230769).abs() < 1e-15);
        assert!((hi - 1.6326690380631121).abs() < 1e-12);

        // degenerate band: v_min = v_max = 1/kappa, delta3_max -> 0
        let degenerate = AckermannParams {
            v_min: 1.0 / p.kappa() - 1e-12,
            v_max: 1.0 / p.kappa(),
            delta3_max: 1e-12,
            ..p
        };
        let (lo, hi) = sigma_bounds(&degenerate).unwrap();
        assert!((lo - 1.0).abs() < 1e-9);
        assert!((hi - 1.0).abs() < 1e-9);
    }

    #[test]
    fn sigma_upper_per_vehicle() {
        assert_eq!(
            sigma_upper(&VehicleParams::DiffDrive(DiffDriveParams {
                v_min: 0.01,
                v_max: 0.2,
                omega_max: 2.0,
            }))
            .unwrap(),
            1.0
        );
        assert_eq!(
            sigma_upper(&VehicleParams::DoubleIntegrator(DoubleIntegratorParams {
                a_max: 1.0
            }))
            .unwrap(),
            1.0
        );
    }

    #[test]
    fn generic_over_f32() {
        let p = AckermannParams::<f32> {
            l_f: 0.17145,
            l_r: 0.15875,
            v_min: 0.25,
            v_max: 3.0,
            delta3_max: 0.4,
        };
        assert!((slip_angle(0.4f32, &p).unwrap() - SLIP_04 as f32).abs() < 1e-6);
        assert!((curvature_factor(0.4f32, &p).unwrap() - K_04 as f32).abs() < 1e-6);
    }

    proptest! {
        // h factors as R(psi) * diag(1, K * v); the factorization holds
        // componentwise and the singular values are exactly {1, |K v|}.
        #[test]
        fn factorization_and_exact_singular_values(
            v in 0.25f64..3.0,
            delta3 in -0.4f64..0.4,
            delta1 in -std::f64::consts::PI..std::f64::consts::PI,
        ) {
            let params = f1tenth_params();
            let vp = VehicleParams::Ackermann(params);
            let st = VehicleState::Ackermann { p: Vec2::zero(), v, delta1, delta3 };
            let dyn_ = affine_terms(&st, &vp).unwrap();

            let psi = delta1 + slip_angle(delta3, &params).unwrap();
            let k = curvature_factor(delta3, &params).unwrap();
            let rebuilt = Mat2::rotation(psi).mul_mat(Mat2::diagonal(1.0, k * v));
            for i in 0..2 {
                for j in 0..2 {
                    prop_assert!((rebuilt.m[i][j] - dyn_.h_upsilon.m[i][j]).abs() < 1e-12);
                }
            }

            let (lo, hi) = singular_values(&dyn_.h_upsilon);
            let expect = (k * v).abs();
            prop_assert!((lo - expect.min(1.0)).abs() < 1e-10);
            prop_assert!((hi - expect.max(1.0)).abs() < 1e-10);

            let (bl, bu) = sigma_bounds(&params).unwrap();
            prop_assert!(lo >= bl - 1e-12 && hi <= bu + 1e-12);
        }

        #[test]
        fn slip_angle_is_odd(delta3 in -1.2f64..1.2) {
            let p = f1tenth_params();
            let a = slip_angle(delta3, &p).unwrap();
            let b = slip_angle(-delta3, &p).unwrap();
            prop_assert!((a + b).abs() < 1e-15);
        }
    }
}
