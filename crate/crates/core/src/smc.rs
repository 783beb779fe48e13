//! Sliding-mode tracking controller.
//!
//! The control law is
//!
//! ```text
//! u_smc = h_upsilon^-1 * ( pddot_ref - f_upsilon + correction(e2) + K * sat(S / lambda_bl) )
//! ```
//!
//! where `S` is either the linear surface `Lambda * e1 + e2` or a
//! nonsingular terminal surface, and `sat` is the componentwise clamp to
//! `[-1, 1]` that replaces the discontinuous signum with a boundary layer of
//! width `lambda_bl`.

use serde::Serialize;
use thiserror::Error;

use crate::math::Vec2;
use crate::models::{self, AffineDynamics, CanonicalState, ModelError, VehicleParams};
use crate::real::{lit, Real};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SmcError {
    #[error("input matrix is numerically singular (sigma_min = {sigma_min:e})")]
    SingularDynamics { sigma_min: f64 },
    #[error("reaching margin eta must be positive, got {0}")]
    NonPositiveEta(f64),
    #[error("invalid surface spec: {0}")]
    InvalidSurface(String),
    #[error(transparent)]
    Model(#[from] ModelError),
}

/// Position and velocity tracking errors, `e1 = p_ref - p`,
/// `e2 = pdot_ref - upsilon`.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct TrackingError<T> {
    pub e1: Vec2<T>,
    pub e2: Vec2<T>,
}

/// One sample of a twice-differentiable reference trajectory.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct ReferenceSample<T> {
    pub p_ref: Vec2<T>,
    pub pdot_ref: Vec2<T>,
    pub pddot_ref: Vec2<T>,
}

/// Choice of sliding surface.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum SlidingSurfaceSpec<T> {
    /// `S = diag(lambda) * e1 + e2` with positive gains.
    Linear { lambda_gains: Vec2<T> },
    /// Nonsingular terminal surface
    /// `S = e1 + diag(1/beta) * |e2|^(p/q) * sgn(e2)` with odd integers
    /// `q < p < 2q`, giving finite-time error convergence without a control
    /// singularity at `e2 = 0`.
    Ntsm {
        beta: Vec2<T>,
        p_exp: u32,
        q_exp: u32,
    },
}

impl<T: Real> SlidingSurfaceSpec<T> {
    pub fn validate(&self) -> Result<(), SmcError> {
        match *self {
            SlidingSurfaceSpec::Linear { lambda_gains } => {
                if lambda_gains.x <= T::zero() || lambda_gains.y <= T::zero() {
                    return Err(SmcError::InvalidSurface(
                        "lambda gains must be positive".into(),
                    ));
                }
            }
            SlidingSurfaceSpec::Ntsm { beta, p_exp, q_exp } => {
                if beta.x <= T::zero() || beta.y <= T::zero() {
                    return Err(SmcError::InvalidSurface("beta must be positive".into()));
                }
                if p_exp % 2 == 0 || q_exp % 2 == 0 {
                    return Err(SmcError::InvalidSurface("p and q must be odd".into()));
                }
                if !(q_exp < p_exp && p_exp < 2 * q_exp) {
                    return Err(SmcError::InvalidSurface("need q < p < 2q".into()));
                }
            }
        }
        Ok(())
    }
}

/// Switching gain, reaching margin and boundary-layer width.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SmcGains<T> {
    pub k: T,
    pub eta: T,
    pub lambda_bl: T,
}

impl<T: Real> SmcGains<T> {
    pub fn validate(&self) -> Result<(), SmcError> {
        if self.k <= T::zero() || self.eta <= T::zero() || self.lambda_bl <= T::zero() {
            return Err(SmcError::InvalidSurface(
                "gains K, eta and lambda_bl must all be positive".into(),
            ));
        }
        Ok(())
    }
}

/// Outcome of the switching-gain check against the worst-case disturbance
/// throughput of the input matrix.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct GainReport<T> {
    pub ok: bool,
    pub k: T,
    /// `sqrt(2) * sigma_upper * d_bar + eta`; the gain must exceed this.
    pub threshold: T,
    pub sigma_upper: T,
    pub d_bar: T,
    pub eta: T,
}

/// `|x|^r * sgn(x)`; zero at zero for any `r > 0`.
#[inline]
fn signed_pow<T: Real>(x: T, r: T) -> T {
    x.abs().powf(r) * x.signum()
}

#[inline]
fn sat<T: Real>(x: T) -> T {
    x.clamp(-T::one(), T::one())
}

pub fn tracking_error<T: Real>(c: &CanonicalState<T>, r: &ReferenceSample<T>) -> TrackingError<T> {
    TrackingError {
        e1: r.p_ref - c.p,
        e2: r.pdot_ref - c.upsilon,
    }
}

/// Value of the sliding surface at the given tracking error.
pub fn surface_value<T: Real>(spec: &SlidingSurfaceSpec<T>, err: &TrackingError<T>) -> Vec2<T> {
    match *spec {
        SlidingSurfaceSpec::Linear { lambda_gains } => Vec2::new(
            lambda_gains.x * err.e1.x + err.e2.x,
            lambda_gains.y * err.e1.y + err.e2.y,
        ),
        SlidingSurfaceSpec::Ntsm { beta, p_exp, q_exp } => {
            let r = lit::<T>(p_exp as f64) / lit::<T>(q_exp as f64);
            Vec2::new(
                err.e1.x + signed_pow(err.e2.x, r) / beta.x,
                err.e1.y + signed_pow(err.e2.y, r) / beta.y,
            )
        }
    }
}

/// The velocity-error term added inside `h_upsilon^-1( ... )` so that the
/// surface derivative reduces to the switching term on the nominal model.
///
/// Linear surface: `diag(lambda) * e2`. Terminal surface:
/// `diag(q beta / p) * |e2|^(2 - p/q) * sgn(e2)`, which is finite and
/// continuous at `e2 = 0` because `2 - p/q > 0`.
pub fn equivalent_correction<T: Real>(
    spec: &SlidingSurfaceSpec<T>,
    err: &TrackingError<T>,
) -> Vec2<T> {
    match *spec {
        SlidingSurfaceSpec::Linear { lambda_gains } => {
            Vec2::new(lambda_gains.x * err.e2.x, lambda_gains.y * err.e2.y)
        }
        SlidingSurfaceSpec::Ntsm { beta, p_exp, q_exp } => {
            let ratio = lit::<T>(p_exp as f64) / lit::<T>(q_exp as f64);
            let r = lit::<T>(2.0) - ratio;
            let scale = T::one() / ratio;
            Vec2::new(
                scale * beta.x * signed_pow(err.e2.x, r),
                scale * beta.y * signed_pow(err.e2.y, r),
            )
        }
    }
}

/// Practical sliding-mode control: equivalent control plus saturated
/// switching term, pushed through the inverse input matrix.
pub fn smc_control<T: Real>(
    dyn_: &AffineDynamics<T>,
    r: &ReferenceSample<T>,
    err: &TrackingError<T>,
    spec: &SlidingSurfaceSpec<T>,
    gains: &SmcGains<T>,
) -> Result<Vec2<T>, SmcError> {
    let (sigma_min, _) = models::singular_values(&dyn_.h_upsilon);
    if sigma_min < lit::<T>(models::SPEED_SINGULARITY_EPS) {
        return Err(SmcError::SingularDynamics {
            sigma_min: sigma_min.to_f64().unwrap_or(f64::NAN),
        });
    }
    let s = surface_value(spec, err);
    let switching = Vec2::new(
        gains.k * sat(s.x / gains.lambda_bl),
        gains.k * sat(s.y / gains.lambda_bl),
    );
    let target = r.pddot_ref - dyn_.f_upsilon + equivalent_correction(spec, err) + switching;
    let inv = dyn_
        .h_upsilon
        .try_inverse()
        .ok_or(SmcError::SingularDynamics { sigma_min: 0.0 })?;
    Ok(inv.mul_vec(target))
}

/// Check `K > sqrt(2) * sigma_upper * d_bar + eta`, the sufficient reaching
/// condition under the matched-disturbance bound. Advisory: the report says
/// whether the gain clears the threshold, callers decide what to do.
pub fn validate_gain<T: Real>(
    k: T,
    params: &VehicleParams<T>,
    d_bar: T,
    eta: T,
) -> Result<GainReport<T>, SmcError> {
    let sigma = models::sigma_upper(params)?;
    let threshold = T::SQRT_2() * sigma * d_bar + eta;
    Ok(GainReport {
        ok: k > threshold,
        k,
        threshold,
        sigma_upper: sigma,
        d_bar,
        eta,
    })
}

/// Worst-case time to reach the sliding surface: `|S(0)| / eta`.
pub fn reaching_time_bound<T: Real>(s0: Vec2<T>, eta: T) -> Result<T, SmcError> {
    if eta <= T::zero() {
        return Err(SmcError::NonPositiveEta(eta.to_f64().unwrap_or(f64::NAN)));
    }
    Ok(s0.norm() / eta)
}
