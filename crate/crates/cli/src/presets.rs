//! Built-in scenarios for the three case-study platforms.

use std::f64::consts::{FRAC_PI_2, PI};

use conetrack_core::cbf::{
    MarginPolicy, Obstacle, ObstacleMotion, SoftBarrierKind, SoftBarrierSpec,
};
use conetrack_core::models::{
    AckermannParams, DiffDriveParams, DoubleIntegratorParams, VehicleParams, VehicleState,
};
use conetrack_core::sim::{
    BarrierConfig, DisturbanceKind, DisturbanceSpec, InputBounds, ReferenceSpec,
};
use conetrack_core::smc::{SlidingSurfaceSpec, SmcGains};
use conetrack_core::{Scenario, Vec2};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum PresetId {
    F1tenthCircle,
    TurtlebotLissajous,
    DroneCircle,
}

impl PresetId {
    pub const ALL: [PresetId; 3] = [
        PresetId::F1tenthCircle,
        PresetId::TurtlebotLissajous,
        PresetId::DroneCircle,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            PresetId::F1tenthCircle => "f1tenth_circle",
            PresetId::TurtlebotLissajous => "turtlebot_lissajous",
            PresetId::DroneCircle => "drone_circle",
        }
    }

    pub fn parse(s: &str) -> Option<PresetId> {
        Self::ALL.iter().copied().find(|p| p.name() == s)
    }

    pub fn scenario(&self) -> Scenario {
        match self {
            PresetId::F1tenthCircle => f1tenth_circle(),
            PresetId::TurtlebotLissajous => turtlebot_lissajous(),
            PresetId::DroneCircle => drone_circle(),
        }
    }
}

fn soft_rows(kinds: &[SoftBarrierKind], alpha_gain: f64) -> Vec<SoftBarrierSpec<f64>> {
    kinds
        .iter()
        .map(|&kind| SoftBarrierSpec {
            kind,
            alpha_gain,
            margin: MarginPolicy::MatchedDisturbance,
        })
        .collect()
}

/// Ackermann car on a 1 m circle with a constant-velocity obstacle cutting
/// across the track.
///
/// Geometry, speed and steering limits, disturbance bound and switching gain
/// are the hardware values; the obstacle path, disturbance realization and
/// actuator boxes are bench choices.
pub fn f1tenth_circle() -> Scenario {
    let omega = 0.2 * PI;
    Scenario {
        vehicle: VehicleParams::Ackermann(AckermannParams {
            l_f: 0.17145,
            l_r: 0.15875,
            v_min: 0.25,
            v_max: 3.0,
            delta3_max: 0.4,
        }),
        initial_state: VehicleState::Ackermann {
            p: Vec2::new(2.58, 1.78),
            v: omega, // on-reference tangential speed, radius 1
            delta1: FRAC_PI_2,
            delta3: 0.32,
        },
        reference: ReferenceSpec::Circle {
            center: Vec2::new(1.58, 1.78),
            radius: 1.0,
            omega,
            phase: 0.0,
        },
        // aimed straight at where the car will be six seconds in; crosses
        // the ring once and leaves
        obstacles: vec![Obstacle {
            radius: 0.2,
            motion: ObstacleMotion::ConstantVelocity {
                p0: Vec2::new(3.08, -1.57),
                v: Vec2::new(-0.385, 0.46),
            },
        }],
        disturbance: DisturbanceSpec {
            d_bar: 0.2,
            kind: DisturbanceKind::Sinusoidal {
                amp: Vec2::new(0.2, 0.2),
                freq: Vec2::new(1.3, 0.9),
                phase: Vec2::new(0.0, FRAC_PI_2),
            },
        },
        surface: SlidingSurfaceSpec::Linear {
            lambda_gains: Vec2::new(1.0, 1.0),
        },
        gains: SmcGains {
            k: 1.0,
            eta: 0.01,
            lambda_bl: 0.05,
        },
        barriers: BarrierConfig {
            alpha_obstacle: 1.0,
            // gain 5 keeps the full robust margin near the limits without
            // starving the ~0.32 rad of steady steering the circle needs
            soft: soft_rows(
                &[
                    SoftBarrierKind::VMin,
                    SoftBarrierKind::VMax,
                    SoftBarrierKind::Delta3,
                ],
                5.0,
            ),
            rho: 1e3,
            ego_radius: 0.2,
        },
        input_bounds: InputBounds {
            u1_max: Some(4.0),
            u2_max: Some(4.0),
        },
        dt_physics: 1e-3,
        control_period: 1e-2,
        duration: 60.0,
        seed: 1,
    }
}

/// Differential drive chasing a Lissajous figure while a disk obstacle
/// circles through the workspace.
///
/// The reference intentionally outruns the speed limit (as on the hardware),
/// so this preset is a safety benchmark, not a tracking one.
pub fn turtlebot_lissajous() -> Scenario {
    Scenario {
        vehicle: VehicleParams::DiffDrive(DiffDriveParams {
            v_min: 0.01,
            v_max: 0.2,
            omega_max: 2.0,
        }),
        initial_state: VehicleState::DiffDrive {
            p: Vec2::new(2.2, 2.45),
            v: 0.2,
            theta: 0.0,
        },
        reference: ReferenceSpec::Lissajous {
            center: Vec2::new(2.2, 1.5),
            amp: Vec2::new(1.8, 0.95),
            omega: Vec2::new(0.23 * PI, 0.15 * PI),
            phase: Vec2::new(0.0, FRAC_PI_2),
        },
        obstacles: vec![Obstacle {
            radius: 0.15,
            motion: ObstacleMotion::Circular {
                center: Vec2::new(2.5, 1.75),
                path_radius: 0.8,
                omega: 0.2,
                theta0: PI,
            },
        }],
        disturbance: DisturbanceSpec {
            d_bar: 0.1,
            kind: DisturbanceKind::Sinusoidal {
                amp: Vec2::new(0.1, 0.1),
                freq: Vec2::new(0.9, 1.1),
                phase: Vec2::new(0.5, 0.0),
            },
        },
        surface: SlidingSurfaceSpec::Ntsm {
            beta: Vec2::new(1.0, 1.0),
            p_exp: 5,
            q_exp: 3,
        },
        gains: SmcGains {
            k: 0.3,
            eta: 0.01,
            lambda_bl: 0.05,
        },
        barriers: BarrierConfig {
            // slightly conservative cone gain buys clearance margin in the
            // dense encounter pattern of this scenario
            alpha_obstacle: 0.8,
            soft: soft_rows(&[SoftBarrierKind::VMin, SoftBarrierKind::VMax], 5.0),
            rho: 1e3,
            ego_radius: 0.2,
        },
        input_bounds: InputBounds {
            u1_max: Some(1.0),
            u2_max: Some(2.0),
        },
        dt_physics: 1e-3,
        control_period: 1e-2,
        duration: 60.0,
        seed: 2,
    }
}

/// Planar drone (double integrator) tracking a circle, no obstacles; the
/// tracking-quality benchmark.
pub fn drone_circle() -> Scenario {
    Scenario {
        vehicle: VehicleParams::DoubleIntegrator(DoubleIntegratorParams { a_max: 2.0 }),
        initial_state: VehicleState::DoubleIntegrator {
            p: Vec2::new(1.1, -0.1),
            upsilon: Vec2::new(0.0, 0.5),
        },
        reference: ReferenceSpec::Circle {
            center: Vec2::new(0.0, 0.0),
            radius: 1.0,
            omega: 0.2 * PI,
            phase: 0.0,
        },
        obstacles: vec![],
        disturbance: DisturbanceSpec {
            d_bar: 0.05,
            kind: DisturbanceKind::None,
        },
        surface: SlidingSurfaceSpec::Linear {
            lambda_gains: Vec2::new(1.0, 1.0),
        },
        gains: SmcGains {
            k: 1.0,
            eta: 0.01,
            lambda_bl: 0.05,
        },
        barriers: BarrierConfig {
            alpha_obstacle: 1.0,
            soft: vec![],
            rho: 1e3,
            ego_radius: 0.2,
        },
        input_bounds: InputBounds {
            u1_max: Some(2.0),
            u2_max: Some(2.0),
        },
        dt_physics: 1e-3,
        control_period: 1e-2,
        duration: 30.0,
        seed: 3,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn presets_validate() {
        for id in PresetId::ALL {
            id.scenario()
                .validate()
                .unwrap_or_else(|e| panic!("{}: {e}", id.name()));
        }
    }

    #[test]
    fn preset_constants_match_case_studies() {
        let f1 = f1tenth_circle();
        match f1.vehicle {
            VehicleParams::Ackermann(p) => {
                assert_eq!(p.l_f, 0.17145);
                assert_eq!(p.l_r, 0.15875);
                assert_eq!(p.v_min, 0.25);
                assert_eq!(p.v_max, 3.0);
                assert_eq!(p.delta3_max, 0.4);
            }
            _ => panic!("wrong vehicle"),
        }
        match f1.reference {
            ReferenceSpec::Circle {
                center,
                radius,
                omega,
                phase,
            } => {
                assert_eq!(center, Vec2::new(1.58, 1.78));
                assert_eq!(radius, 1.0);
                assert_eq!(omega, 0.2 * PI);
                assert_eq!(phase, 0.0);
            }
            _ => panic!("wrong reference"),
        }
        assert_eq!(f1.disturbance.d_bar, 0.2);
        assert_eq!(f1.gains.k, 1.0);

        let tb = turtlebot_lissajous();
        match tb.vehicle {
            VehicleParams::DiffDrive(p) => {
                assert_eq!(p.v_min, 0.01);
                assert_eq!(p.v_max, 0.2);
                assert_eq!(p.omega_max, 2.0);
            }
            _ => panic!("wrong vehicle"),
        }
        match tb.reference {
            ReferenceSpec::Lissajous {
                center, amp, omega, ..
            } => {
                assert_eq!(center, Vec2::new(2.2, 1.5));
                assert_eq!(amp, Vec2::new(1.8, 0.95));
                assert_eq!(omega, Vec2::new(0.23 * PI, 0.15 * PI));
            }
            _ => panic!("wrong reference"),
        }
        match &tb.obstacles[0].motion {
            ObstacleMotion::Circular {
                center,
                path_radius,
                omega,
                ..
            } => {
                assert_eq!(*center, Vec2::new(2.5, 1.75));
                assert_eq!(*path_radius, 0.8);
                assert_eq!(*omega, 0.2);
                // tangential speed implied by the motion parameters
                assert!((omega * path_radius - 0.16).abs() < 1e-15);
            }
            _ => panic!("wrong obstacle"),
        }
        assert_eq!(tb.disturbance.d_bar, 0.1);
        assert_eq!(tb.gains.k, 0.3);
        assert!(matches!(
            tb.surface,
            SlidingSurfaceSpec::Ntsm {
                p_exp: 5,
                q_exp: 3,
                ..
            }
        ));
        assert_eq!(tb.input_bounds.u2_max, Some(2.0));
    }

    #[test]
    fn preset_names_round_trip() {
        for id in PresetId::ALL {
            assert_eq!(PresetId::parse(id.name()), Some(id));
        }
        assert_eq!(PresetId::parse("nope"), None);
    }
}
