//! JSON scenario files.
//!
//! The document has seven sections: `vehicle`, `reference`, `obstacles`,
//! `disturbance`, `controller`, `barriers`, `sim`. Unknown keys are
//! rejected; optional fields and their defaults are listed in the README.

use std::path::Path;

use anyhow::{bail, Context, Result};
use serde::{Deserialize, Serialize};

use conetrack_core::cbf::{
    MarginPolicy, Obstacle, ObstacleMotion, SoftBarrierKind, SoftBarrierSpec,
};
use conetrack_core::models::{
    AckermannParams, DiffDriveParams, DoubleIntegratorParams, VehicleParams, VehicleState,
};
use conetrack_core::sim::{
    BarrierConfig, ClampedSpline, DisturbanceKind, DisturbanceSpec, InputBounds, ReferenceSpec,
};
use conetrack_core::smc::{SlidingSurfaceSpec, SmcGains};
use conetrack_core::{Scenario, Vec2};

fn v2(a: [f64; 2]) -> Vec2 {
    Vec2::new(a[0], a[1])
}

fn a2(v: Vec2) -> [f64; 2] {
    [v.x, v.y]
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioFile {
    pub vehicle: VehicleSection,
    pub reference: ReferenceSection,
    #[serde(default)]
    pub obstacles: Vec<ObstacleSection>,
    pub disturbance: DisturbanceSection,
    pub controller: ControllerSection,
    #[serde(default)]
    pub barriers: Option<BarriersSection>,
    pub sim: SimSection,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum VehicleSection {
    Ackermann {
        l_f: f64,
        l_r: f64,
        v_min: f64,
        v_max: f64,
        delta3_max: f64,
        initial: AckermannInitial,
    },
    DiffDrive {
        v_min: f64,
        v_max: f64,
        omega_max: f64,
        initial: DiffDriveInitial,
    },
    DoubleIntegrator {
        a_max: f64,
        initial: DoubleIntegratorInitial,
    },
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AckermannInitial {
    pub p: [f64; 2],
    pub v: f64,
    pub delta1: f64,
    pub delta3: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DiffDriveInitial {
    pub p: [f64; 2],
    pub v: f64,
    pub theta: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DoubleIntegratorInitial {
    pub p: [f64; 2],
    pub v: [f64; 2],
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum ReferenceSection {
    Circle {
        center: [f64; 2],
        radius: f64,
        omega: f64,
        #[serde(default)]
        phase: f64,
    },
    Lissajous {
        center: [f64; 2],
        amp: [f64; 2],
        omega: [f64; 2],
        #[serde(default)]
        phase: [f64; 2],
    },
    Waypoints {
        points: Vec<WaypointEntry>,
        v_start: [f64; 2],
        v_end: [f64; 2],
    },
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WaypointEntry {
    pub t: f64,
    pub p: [f64; 2],
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ObstacleSection {
    pub radius: f64,
    pub motion: MotionSection,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum MotionSection {
    ConstantVelocity {
        p0: [f64; 2],
        v: [f64; 2],
    },
    Circular {
        center: [f64; 2],
        path_radius: f64,
        omega: f64,
        #[serde(default)]
        theta0: f64,
        /// Optional redundant declaration of the tangential speed; must
        /// equal `|omega| * path_radius` when present.
        #[serde(default, skip_serializing_if = "Option::is_none")]
        linear_speed: Option<f64>,
    },
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DisturbanceSection {
    pub d_bar: f64,
    #[serde(default)]
    pub kind: DisturbanceKindSection,
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum DisturbanceKindSection {
    #[default]
    None,
    Sinusoidal {
        amp: [f64; 2],
        freq: [f64; 2],
        #[serde(default)]
        phase: [f64; 2],
    },
    UniformRandom {
        amp: f64,
        seed: u64,
    },
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ControllerSection {
    pub surface: SurfaceSection,
    pub k: f64,
    #[serde(default = "default_eta")]
    pub eta: f64,
    #[serde(default = "default_lambda_bl")]
    pub lambda_bl: f64,
}

fn default_eta() -> f64 {
    0.01
}

fn default_lambda_bl() -> f64 {
    0.05
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum SurfaceSection {
    Linear {
        lambda_gains: [f64; 2],
    },
    Ntsm {
        #[serde(default = "default_beta")]
        beta: [f64; 2],
        #[serde(default = "default_p_exp")]
        p_exp: u32,
        #[serde(default = "default_q_exp")]
        q_exp: u32,
    },
}

fn default_beta() -> [f64; 2] {
    [1.0, 1.0]
}

fn default_p_exp() -> u32 {
    5
}

fn default_q_exp() -> u32 {
    3
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BarriersSection {
    #[serde(default = "default_alpha")]
    pub alpha_obstacle: f64,
    /// `None` selects the vehicle's natural soft rows (speed bounds for the
    /// ground vehicles, plus steering for Ackermann).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub soft: Option<Vec<SoftSection>>,
    #[serde(default = "default_rho")]
    pub rho: f64,
    #[serde(default = "default_ego_radius")]
    pub ego_radius: f64,
}

impl Default for BarriersSection {
    fn default() -> Self {
        Self {
            alpha_obstacle: default_alpha(),
            soft: None,
            rho: default_rho(),
            ego_radius: default_ego_radius(),
        }
    }
}

fn default_alpha() -> f64 {
    1.0
}

fn default_rho() -> f64 {
    1e3
}

fn default_ego_radius() -> f64 {
    0.2
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SoftSection {
    pub kind: SoftKindSection,
    #[serde(default = "default_alpha")]
    pub alpha_gain: f64,
    #[serde(default)]
    pub margin: MarginSection,
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize, PartialEq, Eq)]
#[serde(rename_all = "snake_case")]
pub enum SoftKindSection {
    VMin,
    VMax,
    Delta3,
}

#[derive(Debug, Clone, Copy, Default, Serialize, Deserialize, PartialEq)]
#[serde(rename_all = "snake_case")]
pub enum MarginSection {
    #[default]
    Matched,
    Fixed(f64),
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimSection {
    pub dt_physics: f64,
    pub control_period: f64,
    pub duration: f64,
    #[serde(default)]
    pub seed: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub input_bounds: Option<InputBoundsSection>,
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InputBoundsSection {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub u1_max: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub u2_max: Option<f64>,
}

impl ScenarioFile {
    pub fn into_scenario(self) -> Result<Scenario> {
        let (vehicle, initial_state) = match self.vehicle {
            VehicleSection::Ackermann {
                l_f,
                l_r,
                v_min,
                v_max,
                delta3_max,
                initial,
            } => (
                VehicleParams::Ackermann(AckermannParams {
                    l_f,
                    l_r,
                    v_min,
                    v_max,
                    delta3_max,
                }),
                VehicleState::Ackermann {
                    p: v2(initial.p),
                    v: initial.v,
                    delta1: initial.delta1,
                    delta3: initial.delta3,
                },
            ),
            VehicleSection::DiffDrive {
                v_min,
                v_max,
                omega_max,
                initial,
            } => (
                VehicleParams::DiffDrive(DiffDriveParams {
                    v_min,
                    v_max,
                    omega_max,
                }),
                VehicleState::DiffDrive {
                    p: v2(initial.p),
                    v: initial.v,
                    theta: initial.theta,
                },
            ),
            VehicleSection::DoubleIntegrator { a_max, initial } => (
                VehicleParams::DoubleIntegrator(DoubleIntegratorParams { a_max }),
                VehicleState::DoubleIntegrator {
                    p: v2(initial.p),
                    upsilon: v2(initial.v),
                },
            ),
        };

        let reference = match self.reference {
            ReferenceSection::Circle {
                center,
                radius,
                omega,
                phase,
            } => ReferenceSpec::Circle {
                center: v2(center),
                radius,
                omega,
                phase,
            },
            ReferenceSection::Lissajous {
                center,
                amp,
                omega,
                phase,
            } => ReferenceSpec::Lissajous {
                center: v2(center),
                amp: v2(amp),
                omega: v2(omega),
                phase: v2(phase),
            },
            ReferenceSection::Waypoints {
                points,
                v_start,
                v_end,
            } => {
                let pts: Vec<(f64, Vec2)> = points.iter().map(|w| (w.t, v2(w.p))).collect();
                let spline = ClampedSpline::new(&pts, v2(v_start), v2(v_end))
                    .map_err(|e| anyhow::anyhow!("reference.points: {e}"))?;
                ReferenceSpec::Waypoints(spline)
            }
        };

        let mut obstacles = Vec::with_capacity(self.obstacles.len());
        for (i, obs) in self.obstacles.into_iter().enumerate() {
            let motion = match obs.motion {
                MotionSection::ConstantVelocity { p0, v } => ObstacleMotion::ConstantVelocity {
                    p0: v2(p0),
                    v: v2(v),
                },
                MotionSection::Circular {
                    center,
                    path_radius,
                    omega,
                    theta0,
                    linear_speed,
                } => {
                    if let Some(vs) = linear_speed {
                        let implied = omega.abs() * path_radius;
                        if (vs - implied).abs() > 1e-9 {
                            bail!(
                                "obstacles[{i}]: linear_speed {vs} inconsistent with \
                                 |omega| * path_radius = {implied}"
                            );
                        }
                    }
                    ObstacleMotion::Circular {
                        center: v2(center),
                        path_radius,
                        omega,
                        theta0,
                    }
                }
            };
            obstacles.push(Obstacle {
                radius: obs.radius,
                motion,
            });
        }

        let disturbance = DisturbanceSpec {
            d_bar: self.disturbance.d_bar,
            kind: match self.disturbance.kind {
                DisturbanceKindSection::None => DisturbanceKind::None,
                DisturbanceKindSection::Sinusoidal { amp, freq, phase } => {
                    DisturbanceKind::Sinusoidal {
                        amp: v2(amp),
                        freq: v2(freq),
                        phase: v2(phase),
                    }
                }
                DisturbanceKindSection::UniformRandom { amp, seed } => {
                    DisturbanceKind::UniformRandom { amp, seed }
                }
            },
        };

        let surface = match self.controller.surface {
            SurfaceSection::Linear { lambda_gains } => SlidingSurfaceSpec::Linear {
                lambda_gains: v2(lambda_gains),
            },
            SurfaceSection::Ntsm { beta, p_exp, q_exp } => SlidingSurfaceSpec::Ntsm {
                beta: v2(beta),
                p_exp,
                q_exp,
            },
        };
        let gains = SmcGains {
            k: self.controller.k,
            eta: self.controller.eta,
            lambda_bl: self.controller.lambda_bl,
        };

        let barriers_section = self.barriers.unwrap_or_default();
        let soft = match barriers_section.soft {
            Some(list) => list
                .into_iter()
                .map(|s| SoftBarrierSpec {
                    kind: match s.kind {
                        SoftKindSection::VMin => SoftBarrierKind::VMin,
                        SoftKindSection::VMax => SoftBarrierKind::VMax,
                        SoftKindSection::Delta3 => SoftBarrierKind::Delta3,
                    },
                    alpha_gain: s.alpha_gain,
                    margin: match s.margin {
                        MarginSection::Matched => MarginPolicy::MatchedDisturbance,
                        MarginSection::Fixed(m) => MarginPolicy::Fixed(m),
                    },
                })
                .collect(),
            None => natural_soft(&vehicle),
        };
        let barriers = BarrierConfig {
            alpha_obstacle: barriers_section.alpha_obstacle,
            soft,
            rho: barriers_section.rho,
            ego_radius: barriers_section.ego_radius,
        };

        let input_bounds = match self.sim.input_bounds {
            Some(b) => InputBounds {
                u1_max: b.u1_max,
                u2_max: b.u2_max,
            },
            None => InputBounds::for_vehicle(&vehicle),
        };

        let scenario = Scenario {
            vehicle,
            initial_state,
            reference,
            obstacles,
            disturbance,
            surface,
            gains,
            barriers,
            input_bounds,
            dt_physics: self.sim.dt_physics,
            control_period: self.sim.control_period,
            duration: self.sim.duration,
            seed: self.sim.seed,
        };
        scenario.validate().map_err(|e| anyhow::anyhow!("{e}"))?;
        Ok(scenario)
    }

    pub fn from_scenario(sc: &Scenario) -> ScenarioFile {
        let vehicle = match (&sc.vehicle, &sc.initial_state) {
            (
                VehicleParams::Ackermann(p),
                &VehicleState::Ackermann {
                    p: pos,
                    v,
                    delta1,
                    delta3,
                },
            ) => VehicleSection::Ackermann {
                l_f: p.l_f,
                l_r: p.l_r,
                v_min: p.v_min,
                v_max: p.v_max,
                delta3_max: p.delta3_max,
                initial: AckermannInitial {
                    p: a2(pos),
                    v,
                    delta1,
                    delta3,
                },
            },
            (VehicleParams::DiffDrive(p), &VehicleState::DiffDrive { p: pos, v, theta }) => {
                VehicleSection::DiffDrive {
                    v_min: p.v_min,
                    v_max: p.v_max,
                    omega_max: p.omega_max,
                    initial: DiffDriveInitial {
                        p: a2(pos),
                        v,
                        theta,
                    },
                }
            }
            (
                VehicleParams::DoubleIntegrator(p),
                &VehicleState::DoubleIntegrator { p: pos, upsilon },
            ) => VehicleSection::DoubleIntegrator {
                a_max: p.a_max,
                initial: DoubleIntegratorInitial {
                    p: a2(pos),
                    v: a2(upsilon),
                },
            },
            _ => unreachable!("validated scenarios have matching state and params"),
        };

        let reference = match &sc.reference {
            ReferenceSpec::Circle {
                center,
                radius,
                omega,
                phase,
            } => ReferenceSection::Circle {
                center: a2(*center),
                radius: *radius,
                omega: *omega,
                phase: *phase,
            },
            ReferenceSpec::Lissajous {
                center,
                amp,
                omega,
                phase,
            } => ReferenceSection::Lissajous {
                center: a2(*center),
                amp: a2(*amp),
                omega: a2(*omega),
                phase: a2(*phase),
            },
            ReferenceSpec::Waypoints(_) => {
                unimplemented!("waypoint scenarios are authored as files, not exported")
            }
        };

        ScenarioFile {
            vehicle,
            reference,
            obstacles: sc
                .obstacles
                .iter()
                .map(|o| ObstacleSection {
                    radius: o.radius,
                    motion: match o.motion {
                        ObstacleMotion::ConstantVelocity { p0, v } => {
                            MotionSection::ConstantVelocity {
                                p0: a2(p0),
                                v: a2(v),
                            }
                        }
                        ObstacleMotion::Circular {
                            center,
                            path_radius,
                            omega,
                            theta0,
                        } => MotionSection::Circular {
                            center: a2(center),
                            path_radius,
                            omega,
                            theta0,
                            linear_speed: None,
                        },
                    },
                })
                .collect(),
            disturbance: DisturbanceSection {
                d_bar: sc.disturbance.d_bar,
                kind: match sc.disturbance.kind {
                    DisturbanceKind::None => DisturbanceKindSection::None,
                    DisturbanceKind::Sinusoidal { amp, freq, phase } => {
                        DisturbanceKindSection::Sinusoidal {
                            amp: a2(amp),
                            freq: a2(freq),
                            phase: a2(phase),
                        }
                    }
                    DisturbanceKind::UniformRandom { amp, seed } => {
                        DisturbanceKindSection::UniformRandom { amp, seed }
                    }
                },
            },
            controller: ControllerSection {
                surface: match sc.surface {
                    SlidingSurfaceSpec::Linear { lambda_gains } => SurfaceSection::Linear {
                        lambda_gains: a2(lambda_gains),
                    },
                    SlidingSurfaceSpec::Ntsm { beta, p_exp, q_exp } => SurfaceSection::Ntsm {
                        beta: a2(beta),
                        p_exp,
                        q_exp,
                    },
                },
                k: sc.gains.k,
                eta: sc.gains.eta,
                lambda_bl: sc.gains.lambda_bl,
            },
            barriers: Some(BarriersSection {
                alpha_obstacle: sc.barriers.alpha_obstacle,
                soft: Some(
                    sc.barriers
                        .soft
                        .iter()
                        .map(|s| SoftSection {
                            kind: match s.kind {
                                SoftBarrierKind::VMin => SoftKindSection::VMin,
                                SoftBarrierKind::VMax => SoftKindSection::VMax,
                                SoftBarrierKind::Delta3 => SoftKindSection::Delta3,
                            },
                            alpha_gain: s.alpha_gain,
                            margin: match s.margin {
                                MarginPolicy::MatchedDisturbance => MarginSection::Matched,
                                MarginPolicy::Fixed(m) => MarginSection::Fixed(m),
                            },
                        })
                        .collect(),
                ),
                rho: sc.barriers.rho,
                ego_radius: sc.barriers.ego_radius,
            }),
            sim: SimSection {
                dt_physics: sc.dt_physics,
                control_period: sc.control_period,
                duration: sc.duration,
                seed: sc.seed,
                input_bounds: Some(InputBoundsSection {
                    u1_max: sc.input_bounds.u1_max,
                    u2_max: sc.input_bounds.u2_max,
                }),
            },
        }
    }
}

/// The soft rows a vehicle gets when the file does not spell them out.
fn natural_soft(vehicle: &VehicleParams<f64>) -> Vec<SoftBarrierSpec<f64>> {
    let kinds: &[SoftBarrierKind] = match vehicle {
        VehicleParams::Ackermann(_) => &[
            SoftBarrierKind::VMin,
            SoftBarrierKind::VMax,
            SoftBarrierKind::Delta3,
        ],
        VehicleParams::DiffDrive(_) => &[SoftBarrierKind::VMin, SoftBarrierKind::VMax],
        VehicleParams::DoubleIntegrator(_) => &[],
    };
    kinds
        .iter()
        .map(|&kind| SoftBarrierSpec {
            kind,
            alpha_gain: 1.0,
            margin: MarginPolicy::MatchedDisturbance,
        })
        .collect()
}

/// Load and validate a scenario document.
pub fn load_scenario(path: &Path) -> Result<Scenario> {
    let text = std::fs::read_to_string(path)
        .with_context(|| format!("cannot read scenario file {}", path.display()))?;
    let file: ScenarioFile = serde_json::from_str(&text)
        .with_context(|| format!("invalid scenario {}", path.display()))?;
    file.into_scenario()
        .with_context(|| format!("invalid scenario {}", path.display()))
}

/// Serialize a scenario to pretty JSON.
pub fn scenario_to_json(sc: &Scenario) -> String {
    serde_json::to_string_pretty(&ScenarioFile::from_scenario(sc)).expect("schema serializes")
}
