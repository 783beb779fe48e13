//! Deterministic closed-loop simulation.
//!
//! A run integrates the native vehicle dynamics with fixed-step RK4 at
//! `dt_physics` while the control input is recomputed every
//! `control_period` (an integer multiple of the physics step) and held
//! constant in between. Each control step composes the full pipeline:
//! canonical transform, sliding-mode control, barrier rows, QP safety
//! filter. Everything is seeded and iterated in fixed order, so identical
//! scenarios produce bitwise-identical traces.

mod disturbance;
mod reference;

pub use disturbance::{disturbance, DisturbanceKind, DisturbanceSpec, DisturbanceState};
pub use reference::{reference, ClampedSpline, ReferenceSpec};

use serde::Serialize;
use thiserror::Error;

use crate::cbf::{self, CbfError, Obstacle, SoftBarrierKind, SoftBarrierSpec};
use crate::math::Vec2;
use crate::models::{
    self, state_derivative, to_canonical, CanonicalState, ModelError, VehicleParams, VehicleState,
};
use crate::qp::{ActiveSetSolver, ConstraintRow, QpProblem, QpStatus};
use crate::real::{lit, Real};
use crate::smc::{
    self, surface_value, tracking_error, GainReport, SlidingSurfaceSpec, SmcError, SmcGains,
};

/// Slack values above this count as an activation in the metrics.
pub const SLACK_ACTIVE_TOL: f64 = 1e-6;
/// Obstacles per scenario are capped so the QP stays within its row budget.
pub const MAX_OBSTACLES: usize = 20;

#[derive(Debug, Error)]
pub enum StepError {
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Smc(#[from] SmcError),
    #[error(transparent)]
    Cbf(#[from] CbfError),
}

#[derive(Debug, Error)]
pub enum SimError {
    #[error("invalid scenario: {0}")]
    InvalidScenario(String),
    #[error("control step {step} aborted: {source}")]
    ControlAbort { step: usize, source: StepError },
    #[error("integration step {step} failed: {source}")]
    IntegrationAbort { step: usize, source: ModelError },
}

/// Symmetric box bounds on the two inputs; `None` leaves a side unbounded.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct InputBounds<T> {
    pub u1_max: Option<T>,
    pub u2_max: Option<T>,
}

impl<T: Real> InputBounds<T> {
    /// Natural bounds for a vehicle: the double integrator's acceleration
    /// box and the differential drive's heading-rate limit come straight
    /// from the parameters.
    pub fn for_vehicle(params: &VehicleParams<T>) -> Self {
        match params {
            VehicleParams::Ackermann(_) => Self::default(),
            VehicleParams::DiffDrive(p) => Self {
                u1_max: None,
                u2_max: Some(p.omega_max),
            },
            VehicleParams::DoubleIntegrator(p) => Self {
                u1_max: Some(p.a_max),
                u2_max: Some(p.a_max),
            },
        }
    }
}

/// Barrier configuration: class-K gains, soft rows, slack penalty and the
/// ego inflation added to every obstacle radius.
#[derive(Clone, Debug, PartialEq)]
pub struct BarrierConfig<T> {
    pub alpha_obstacle: T,
    pub soft: Vec<SoftBarrierSpec<T>>,
    pub rho: T,
    pub ego_radius: T,
}

impl<T: Real> Default for BarrierConfig<T> {
    fn default() -> Self {
        Self {
            alpha_obstacle: T::one(),
            soft: Vec::new(),
            rho: lit(1e3),
            ego_radius: lit(0.2),
        }
    }
}

/// Full experiment description. Immutable during a run.
#[derive(Clone, Debug, PartialEq)]
pub struct Scenario<T> {
    pub vehicle: VehicleParams<T>,
    pub initial_state: VehicleState<T>,
    pub reference: ReferenceSpec<T>,
    pub obstacles: Vec<Obstacle<T>>,
    pub disturbance: DisturbanceSpec<T>,
    pub surface: SlidingSurfaceSpec<T>,
    pub gains: SmcGains<T>,
    pub barriers: BarrierConfig<T>,
    pub input_bounds: InputBounds<T>,
    pub dt_physics: T,
    pub control_period: T,
    pub duration: T,
    pub seed: u64,
}

impl<T: Real> Scenario<T> {
    pub fn validate(&self) -> Result<(), SimError> {
        let inv = |msg: String| SimError::InvalidScenario(msg);
        self.vehicle
            .validate()
            .map_err(|e| inv(format!("vehicle: {e}")))?;
        if !self.initial_state.is_finite() {
            return Err(inv("initial state must be finite".into()));
        }
        if !self.initial_state.matches(&self.vehicle) {
            return Err(inv(
                "initial state kind does not match vehicle parameters".into()
            ));
        }
        self.reference.validate()?;
        if self.obstacles.len() > MAX_OBSTACLES {
            return Err(inv(format!("at most {MAX_OBSTACLES} obstacles supported")));
        }
        for (i, obs) in self.obstacles.iter().enumerate() {
            obs.validate()
                .map_err(|e| inv(format!("obstacle {i}: {e}")))?;
        }
        self.disturbance.validate()?;
        self.surface
            .validate()
            .map_err(|e| inv(format!("surface: {e}")))?;
        self.gains
            .validate()
            .map_err(|e| inv(format!("gains: {e}")))?;
        if self.barriers.rho <= T::zero() {
            return Err(inv("slack penalty rho must be positive".into()));
        }
        if self.barriers.ego_radius < T::zero() {
            return Err(inv("ego radius must be nonnegative".into()));
        }
        if self.barriers.alpha_obstacle <= T::zero() {
            return Err(inv("obstacle barrier gain must be positive".into()));
        }
        for spec in &self.barriers.soft {
            if spec.alpha_gain <= T::zero() {
                return Err(inv(format!(
                    "soft barrier {}: gain must be positive",
                    spec.kind.name()
                )));
            }
            if let cbf::MarginPolicy::Fixed(m) = spec.margin {
                if m < T::zero() {
                    return Err(inv(format!(
                        "soft barrier {}: fixed margin must be nonnegative",
                        spec.kind.name()
                    )));
                }
            }
            let supported = match spec.kind {
                SoftBarrierKind::VMin | SoftBarrierKind::VMax => {
                    !matches!(self.vehicle, VehicleParams::DoubleIntegrator(_))
                }
                SoftBarrierKind::Delta3 => matches!(self.vehicle, VehicleParams::Ackermann(_)),
            };
            if !supported {
                return Err(inv(format!(
                    "soft barrier {} is not defined for this vehicle",
                    spec.kind.name()
                )));
            }
        }
        if let Some(b) = self.input_bounds.u1_max {
            if b <= T::zero() {
                return Err(inv("u1 bound must be positive".into()));
            }
        }
        if let Some(b) = self.input_bounds.u2_max {
            if b <= T::zero() {
                return Err(inv("u2 bound must be positive".into()));
            }
        }
        if !(self.dt_physics > T::zero() && self.dt_physics.is_finite()) {
            return Err(inv("dt_physics must be positive".into()));
        }
        if self.duration < T::zero() || !self.duration.is_finite() {
            return Err(inv("duration must be nonnegative".into()));
        }
        self.steps_per_control()?;
        Ok(())
    }

    /// Physics steps per control period; the ratio must be a whole number.
    pub fn steps_per_control(&self) -> Result<usize, SimError> {
        let ratio = (self.control_period / self.dt_physics)
            .to_f64()
            .unwrap_or(f64::NAN);
        if !ratio.is_finite() || ratio < 1.0 - 1e-9 {
            return Err(SimError::InvalidScenario(
                "control_period must be at least dt_physics".into(),
            ));
        }
        let k = ratio.round();
        if (ratio - k).abs() > 1e-9 * ratio.max(1.0) {
            return Err(SimError::InvalidScenario(
                "control_period must be an integer multiple of dt_physics".into(),
            ));
        }
        Ok(k as usize)
    }

    fn physics_steps(&self) -> usize {
        let steps = (self.duration / self.dt_physics)
            .to_f64()
            .unwrap_or(0.0)
            .round();
        steps.max(0.0) as usize
    }
}

/// Per-control-step log record.
#[derive(Clone, Debug, PartialEq)]
pub struct TraceRow<T> {
    pub t: T,
    pub native: VehicleState<T>,
    pub canonical: CanonicalState<T>,
    pub u_smc: Vec2<T>,
    pub u_star: Vec2<T>,
    pub disturbance: Vec2<T>,
    pub surface: Vec2<T>,
    pub e1: Vec2<T>,
    /// Barrier value per obstacle; `None` while inside the inflated disk
    /// (the cone is undefined there).
    pub obstacle_h: Vec<Option<T>>,
    /// Center distance per obstacle.
    pub obstacle_distance: Vec<T>,
    pub slacks: Vec<T>,
    pub qp_status: QpStatus,
    pub active_set: Vec<usize>,
}

pub type Trace<T> = Vec<TraceRow<T>>;

/// Summary quantities of a run. Clearance and barrier minima are taken over
/// physics-rate states, not just control instants.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Metrics<T> {
    /// RMS of `|e1|` over control steps from the measured reaching time on.
    pub rms_e1_post_reach: Option<T>,
    pub max_e1: T,
    /// First control instant with `|S|_inf <= lambda_bl`.
    pub reaching_time_measured: Option<T>,
    pub min_h_c3bf: Option<T>,
    /// Minimum over time of center distance minus effective radius.
    pub min_clearance: Option<T>,
    pub qp_infeasible_count: usize,
    pub slack_activation_count: usize,
    /// Hard rows dropped because their gradient vanished.
    pub degenerate_row_count: usize,
    pub gain_check: GainReport<T>,
}

/// Result of one control step: the filtered input and the log row.
pub struct ControlStepOutput<T> {
    pub u_star: Vec2<T>,
    pub row: TraceRow<T>,
    /// Hard rows dropped this step (vanished gradient or in-collision).
    pub degenerate_dropped: usize,
}

/// One pass through the control pipeline at time `t`: canonical transform,
/// sliding-mode input, barrier rows, QP filter. `prev_u` is applied when
/// the QP reports the rows infeasible; `d_now` is only logged.
pub fn control_step<T: Real>(
    sc: &Scenario<T>,
    state: &VehicleState<T>,
    t: T,
    d_now: Vec2<T>,
    prev_u: Vec2<T>,
    solver: &mut ActiveSetSolver,
) -> Result<ControlStepOutput<T>, StepError> {
    let canonical = to_canonical(state, &sc.vehicle)?;
    let dyn_ = models::affine_terms(state, &sc.vehicle)?;
    let r = reference(&sc.reference, t);
    let err = tracking_error(&canonical, &r);
    let u_smc = smc::smc_control(&dyn_, &r, &err, &sc.surface, &sc.gains)?;
    let s_val = surface_value(&sc.surface, &err);
    let d_bar = sc.disturbance.d_bar;

    let n_soft = sc.barriers.soft.len();
    let n = 2 + n_soft;
    let mut rows: Vec<ConstraintRow<T>> = Vec::new();
    let mut obstacle_h = Vec::with_capacity(sc.obstacles.len());
    let mut obstacle_distance = Vec::with_capacity(sc.obstacles.len());
    let mut degenerate_dropped = 0usize;

    for obs in &sc.obstacles {
        let os = cbf::obstacle_state(obs, t);
        let r_eff = obs.radius + sc.barriers.ego_radius;
        obstacle_distance.push((os.p - canonical.p).norm());
        match cbf::c3bf_row(
            &canonical,
            &dyn_,
            &os,
            r_eff,
            sc.barriers.alpha_obstacle,
            d_bar,
        ) {
            Ok(row) => {
                obstacle_h.push(Some(row.h_value));
                if row.degenerate {
                    // no control authority in this row; emitting it would
                    // either void the step or blow up the QP
                    degenerate_dropped += 1;
                } else {
                    let mut a = vec![T::zero(); n];
                    a[0] = row.a.x;
                    a[1] = row.a.y;
                    rows.push(ConstraintRow { a, b: -row.b });
                }
            }
            Err(CbfError::InCollision { .. }) => {
                // collision already logged through the clearance metric; the
                // cone constraint is undefined here
                obstacle_h.push(None);
                degenerate_dropped += 1;
            }
            Err(e) => return Err(e.into()),
        }
    }

    let soft = cbf::soft_rows(
        state,
        &sc.vehicle,
        &dyn_,
        &sc.barriers.soft,
        d_bar,
        canonical.upsilon,
    )?;
    for (k, row) in soft.iter().enumerate() {
        let mut a = vec![T::zero(); n];
        a[0] = row.a.x;
        a[1] = row.a.y;
        a[2 + k] = T::one();
        rows.push(ConstraintRow { a, b: -row.b });
    }
    for k in 0..n_soft {
        let mut a = vec![T::zero(); n];
        a[2 + k] = T::one();
        rows.push(ConstraintRow { a, b: T::zero() });
    }
    for (idx, bound) in [
        (0usize, sc.input_bounds.u1_max),
        (1usize, sc.input_bounds.u2_max),
    ] {
        if let Some(b) = bound {
            let mut lo = vec![T::zero(); n];
            lo[idx] = T::one();
            rows.push(ConstraintRow { a: lo, b: -b });
            let mut hi = vec![T::zero(); n];
            hi[idx] = -T::one();
            rows.push(ConstraintRow { a: hi, b: -b });
        }
    }

    let mut h_diag = vec![T::one(); n];
    let mut g = vec![T::zero(); n];
    for k in 0..n_soft {
        h_diag[2 + k] = sc.barriers.rho;
    }
    g[0] = -u_smc.x;
    g[1] = -u_smc.y;
    let problem = QpProblem { h_diag, g, rows };
    let sol = solver.solve(&problem);

    let u_star = match sol.status {
        QpStatus::Infeasible => prev_u,
        _ => Vec2::new(sol.x[0], sol.x[1]),
    };
    let row = TraceRow {
        t,
        native: *state,
        canonical,
        u_smc,
        u_star,
        disturbance: d_now,
        surface: s_val,
        e1: err.e1,
        obstacle_h,
        obstacle_distance,
        slacks: sol.x[2..].to_vec(),
        qp_status: sol.status,
        active_set: sol.active_set,
    };
    Ok(ControlStepOutput {
        u_star,
        row,
        degenerate_dropped,
    })
}

fn state_raw<T: Real>(s: &VehicleState<T>) -> [T; 5] {
    match *s {
        VehicleState::Ackermann {
            p,
            v,
            delta1,
            delta3,
        } => [p.x, p.y, v, delta1, delta3],
        VehicleState::DiffDrive { p, v, theta } => [p.x, p.y, v, theta, T::zero()],
        VehicleState::DoubleIntegrator { p, upsilon } => {
            [p.x, p.y, upsilon.x, upsilon.y, T::zero()]
        }
    }
}

fn state_from_raw<T: Real>(template: &VehicleState<T>, r: [T; 5]) -> VehicleState<T> {
    match template {
        VehicleState::Ackermann { .. } => VehicleState::Ackermann {
            p: Vec2::new(r[0], r[1]),
            v: r[2],
            delta1: r[3],
            delta3: r[4],
        },
        VehicleState::DiffDrive { .. } => VehicleState::DiffDrive {
            p: Vec2::new(r[0], r[1]),
            v: r[2],
            theta: r[3],
        },
        VehicleState::DoubleIntegrator { .. } => VehicleState::DoubleIntegrator {
            p: Vec2::new(r[0], r[1]),
            upsilon: Vec2::new(r[2], r[3]),
        },
    }
}

/// Classic fixed-step RK4 on the native state with the input held constant
/// and the disturbance evaluated at the stage times.
fn rk4_step<T: Real>(
    state: &VehicleState<T>,
    params: &VehicleParams<T>,
    u: Vec2<T>,
    d_at: impl Fn(T) -> Vec2<T>,
    t: T,
    dt: T,
) -> Result<VehicleState<T>, ModelError> {
    let half = lit::<T>(0.5);
    let sixth = dt / lit::<T>(6.0);
    let two = lit::<T>(2.0);
    let x0 = state_raw(state);

    let stage = |raw: [T; 5], tt: T| -> Result<[T; 5], ModelError> {
        let s = state_from_raw(state, raw);
        Ok(state_raw(&state_derivative(&s, params, u, d_at(tt))?))
    };
    let axpy = |x: [T; 5], k: [T; 5], c: T| {
        let mut out = x;
        for i in 0..5 {
            out[i] += c * k[i];
        }
        out
    };

    let k1 = stage(x0, t)?;
    let k2 = stage(axpy(x0, k1, half * dt), t + half * dt)?;
    let k3 = stage(axpy(x0, k2, half * dt), t + half * dt)?;
    let k4 = stage(axpy(x0, k3, dt), t + dt)?;

    let mut out = x0;
    for i in 0..5 {
        out[i] += sixth * (k1[i] + two * k2[i] + two * k3[i] + k4[i]);
    }
    Ok(state_from_raw(state, out))
}

/// Run the scenario to completion.
pub fn run<T: Real>(sc: &Scenario<T>) -> Result<(Trace<T>, Metrics<T>), SimError> {
    sc.validate()?;
    let dt = sc.dt_physics;
    let steps_per_ctrl = sc.steps_per_control()?;
    let n_phys = sc.physics_steps();
    let slack_tol = lit::<T>(SLACK_ACTIVE_TOL);

    let mut state = sc.initial_state;
    let mut solver = ActiveSetSolver::new();
    let mut dist_state = DisturbanceState::new(&sc.disturbance, sc.seed);
    let mut trace: Trace<T> = Vec::with_capacity(n_phys / steps_per_ctrl + 1);
    let mut u_star = Vec2::zero();

    let mut max_e1 = T::zero();
    let mut reaching: Option<T> = None;
    let mut rms_acc = T::zero();
    let mut rms_count = 0usize;
    let mut min_h: Option<T> = None;
    let mut min_clearance: Option<T> = None;
    let mut qp_infeasible_count = 0usize;
    let mut slack_activation_count = 0usize;
    let mut degenerate_row_count = 0usize;

    let mut monitor = |state: &VehicleState<T>, t: T| {
        if sc.obstacles.is_empty() {
            return;
        }
        let canonical = to_canonical(state, &sc.vehicle).expect("state validated");
        for obs in &sc.obstacles {
            let os = cbf::obstacle_state(obs, t);
            let r_eff = obs.radius + sc.barriers.ego_radius;
            let p_rel = os.p - canonical.p;
            let clearance = p_rel.norm() - r_eff;
            min_clearance = Some(min_clearance.map_or(clearance, |m: T| m.min(clearance)));
            if let Ok(h) = cbf::c3bf_value(p_rel, os.v - canonical.upsilon, r_eff) {
                min_h = Some(min_h.map_or(h, |m: T| m.min(h)));
            }
        }
    };

    monitor(&state, T::zero());

    for i in 0..n_phys {
        let t = T::from_usize(i).unwrap() * dt;
        if i % steps_per_ctrl == 0 {
            dist_state.advance_period(&sc.disturbance);
            let d_now = disturbance(&sc.disturbance, t, &dist_state);
            let out =
                control_step(sc, &state, t, d_now, u_star, &mut solver).map_err(|source| {
                    SimError::ControlAbort {
                        step: i / steps_per_ctrl,
                        source,
                    }
                })?;
            u_star = out.u_star;
            degenerate_row_count += out.degenerate_dropped;
            if out.row.qp_status == QpStatus::Infeasible {
                qp_infeasible_count += 1;
            }
            if out.row.slacks.iter().any(|s| *s > slack_tol) {
                slack_activation_count += 1;
            }
            let e1_norm = out.row.e1.norm();
            max_e1 = max_e1.max(e1_norm);
            if reaching.is_none() && out.row.surface.norm_inf() <= sc.gains.lambda_bl {
                reaching = Some(t);
            }
            if reaching.is_some() {
                rms_acc += e1_norm * e1_norm;
                rms_count += 1;
            }
            trace.push(out.row);
        }

        let d = disturbance(&sc.disturbance, t, &dist_state);
        assert!(
            d.norm_inf() <= sc.disturbance.d_bar,
            "disturbance bound violated at t = {t}"
        );
        state = rk4_step(
            &state,
            &sc.vehicle,
            u_star,
            |tt| disturbance(&sc.disturbance, tt, &dist_state),
            t,
            dt,
        )
        .map_err(|source| SimError::IntegrationAbort { step: i, source })?;
        monitor(&state, T::from_usize(i + 1).unwrap() * dt);
    }

    let gain_check =
        smc::validate_gain(sc.gains.k, &sc.vehicle, sc.disturbance.d_bar, sc.gains.eta)
            .map_err(|e| SimError::InvalidScenario(format!("gain check: {e}")))?;
    let metrics = Metrics {
        rms_e1_post_reach: if rms_count > 0 {
            Some((rms_acc / T::from_usize(rms_count).unwrap()).sqrt())
        } else {
            None
        },
        max_e1,
        reaching_time_measured: reaching,
        min_h_c3bf: min_h,
        min_clearance,
        qp_infeasible_count,
        slack_activation_count,
        degenerate_row_count,
        gain_check,
    };
    Ok((trace, metrics))
}
