//! Acceptance suite: one test per release criterion, each printing a
//! PASS/FAIL line (run with `--nocapture` to see them on success).

use std::time::Instant;

use conetrack_cli::presets::PresetId;
use conetrack_core::cbf;
use conetrack_core::math::{Mat2, Vec2};
use conetrack_core::models::{
    self, AckermannParams, DoubleIntegratorParams, VehicleParams, VehicleState,
};
use conetrack_core::qp::{brute_force_solve, ActiveSetSolver, ConstraintRow, QpProblem, QpStatus};
use conetrack_core::sim::{
    run, BarrierConfig, DisturbanceKind, DisturbanceSpec, InputBounds, ReferenceSpec, Scenario,
    SLACK_ACTIVE_TOL,
};
use conetrack_core::smc::{reaching_time_bound, validate_gain, SlidingSurfaceSpec, SmcGains};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

// Closed-form reference values, frozen from a 40-digit evaluation.
const SIGMA_UPPER_F1TENTH: f64 = 1.6326690380631121;
const SIGMA_LOWER_F1TENTH: f64 = 0.12019230769230769;
const THRESHOLD_F1TENTH: f64 = 0.47178853929909761;
const THRESHOLD_TURTLEBOT: f64 = 0.15142135623730950;

fn pass(n: u32, name: &str, detail: String) {
    println!("criterion {n} ({name}): PASS - {detail}");
}

fn f1tenth_params() -> AckermannParams<f64> {
    AckermannParams {
        l_f: 0.17145,
        l_r: 0.15875,
        v_min: 0.25,
        v_max: 3.0,
        delta3_max: 0.4,
    }
}

#[test]
fn c01_input_matrix_singular_values_exact() {
    let start = Instant::now();
    let params = f1tenth_params();
    let vp = VehicleParams::Ackermann(params);
    let (lo_bound, hi_bound) = models::sigma_bounds(&params).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(0xACCE01);
    for _ in 0..1_000_000 {
        let v = rng.random_range(0.25..3.0);
        let delta3 = rng.random_range(-0.4..0.4);
        let delta1 = rng.random_range(-std::f64::consts::PI..std::f64::consts::PI);
        let state = VehicleState::Ackermann {
            p: Vec2::zero(),
            v,
            delta1,
            delta3,
        };
        let dyn_ = models::affine_terms(&state, &vp).unwrap();
        let k = models::curvature_factor(delta3, &params).unwrap();
        let (lo, hi) = models::singular_values(&dyn_.h_upsilon);
        let expect = (k * v).abs();
        assert!(
            (lo - expect.min(1.0)).abs() <= 1e-10,
            "sigma_min off at v={v} d3={delta3}"
        );
        assert!(
            (hi - expect.max(1.0)).abs() <= 1e-10,
            "sigma_max off at v={v} d3={delta3}"
        );
        assert!(
            lo >= lo_bound - 1e-12 && hi <= hi_bound + 1e-12,
            "bounds violated"
        );

        // rotation times diagonal factorization, componentwise
        let psi = delta1 + models::slip_angle(delta3, &params).unwrap();
        let rebuilt = Mat2::rotation(psi).mul_mat(Mat2::diagonal(1.0, k * v));
        for i in 0..2 {
            for j in 0..2 {
                assert!((rebuilt.m[i][j] - dyn_.h_upsilon.m[i][j]).abs() <= 1e-12);
            }
        }
    }
    let elapsed = start.elapsed();
    assert!(
        elapsed.as_secs_f64() < 10.0,
        "took {elapsed:?}, budget 10 s"
    );
    pass(
        1,
        "input matrix singular values exact",
        format!("1e6 samples in {elapsed:.2?}, |sigma - {{1, |K v|}}| <= 1e-10"),
    );
}

#[test]
fn c02_sigma_upper_crosscheck() {
    let (lo, hi) = models::sigma_bounds(&f1tenth_params()).unwrap();
    assert!(
        (hi - SIGMA_UPPER_F1TENTH).abs() <= 1e-5,
        "closed form gives {hi}, expected {SIGMA_UPPER_F1TENTH}"
    );
    assert!((lo - SIGMA_LOWER_F1TENTH).abs() <= 1e-5);
    // the hardware write-up quotes ~1.68; the closed form sits within 5%
    let reported = 1.68;
    let gap = (hi - reported).abs() / reported;
    assert!(gap <= 0.05, "gap to reported value is {gap:.4}");
    pass(
        2,
        "sigma_max cross-check",
        format!(
            "closed form {hi:.6}; reported 1.68 differs by {:.2}% (documented)",
            gap * 100.0
        ),
    );
}

#[test]
fn c03_gain_conditions_hold_for_presets() {
    let f1 = PresetId::F1tenthCircle.scenario();
    let rep = validate_gain(f1.gains.k, &f1.vehicle, f1.disturbance.d_bar, f1.gains.eta).unwrap();
    assert!(rep.ok, "f1tenth gain check failed: {rep:?}");
    assert!((rep.threshold - THRESHOLD_F1TENTH).abs() <= 1e-9);

    let tb = PresetId::TurtlebotLissajous.scenario();
    let rep_tb =
        validate_gain(tb.gains.k, &tb.vehicle, tb.disturbance.d_bar, tb.gains.eta).unwrap();
    assert!(rep_tb.ok, "turtlebot gain check failed: {rep_tb:?}");
    assert!((rep_tb.threshold - THRESHOLD_TURTLEBOT).abs() <= 1e-9);
    pass(
        3,
        "gain conditions",
        format!(
            "K=1 > {:.5} and K=0.3 > {:.5}",
            rep.threshold, rep_tb.threshold
        ),
    );
}

fn reaching_scenario(p0: Vec2<f64>, v0: Vec2<f64>, disturbed: bool) -> Scenario<f64> {
    Scenario {
        vehicle: VehicleParams::DoubleIntegrator(DoubleIntegratorParams { a_max: 50.0 }),
        initial_state: VehicleState::DoubleIntegrator { p: p0, upsilon: v0 },
        reference: ReferenceSpec::Circle {
            center: Vec2::zero(),
            radius: 1.0,
            omega: 0.2 * std::f64::consts::PI,
            phase: 0.0,
        },
        obstacles: vec![],
        disturbance: if disturbed {
            DisturbanceSpec {
                d_bar: 0.2,
                kind: DisturbanceKind::Sinusoidal {
                    amp: Vec2::new(0.2, 0.2),
                    freq: Vec2::new(1.7, 1.1),
                    phase: Vec2::new(0.3, 2.1),
                },
            }
        } else {
            DisturbanceSpec::none(0.0)
        },
        surface: SlidingSurfaceSpec::Linear {
            lambda_gains: Vec2::new(1.0, 1.0),
        },
        gains: SmcGains {
            k: 1.0,
            eta: 0.01,
            lambda_bl: 0.05,
        },
        barriers: BarrierConfig::default(),
        input_bounds: InputBounds::default(),
        dt_physics: 1e-3,
        control_period: 1e-2,
        duration: 8.0,
        seed: 7,
    }
}

#[test]
fn c04_finite_time_reaching_with_and_without_disturbance() {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(0xACCE04);
    let mut worst_margin = f64::INFINITY;
    for disturbed in [false, true] {
        for _ in 0..100 {
            let p0 = Vec2::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0));
            let v0 = Vec2::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0));
            let sc = reaching_scenario(p0, v0, disturbed);
            if disturbed {
                let rep =
                    validate_gain(sc.gains.k, &sc.vehicle, sc.disturbance.d_bar, sc.gains.eta)
                        .unwrap();
                assert!(rep.ok, "gain must satisfy the reaching condition");
            }
            let (trace, metrics) = run(&sc).unwrap();
            let bound =
                reaching_time_bound(trace[0].surface, sc.gains.eta).unwrap() + sc.control_period;
            let reached = metrics
                .reaching_time_measured
                .expect("surface never entered the boundary layer");
            assert!(
                reached <= bound,
                "reached at {reached}, bound {bound} (disturbed: {disturbed})"
            );
            worst_margin = worst_margin.min(bound - reached);
        }
    }
    let elapsed = start.elapsed();
    assert!(
        elapsed.as_secs_f64() < 60.0,
        "took {elapsed:?}, budget 60 s"
    );
    pass(
        4,
        "finite-time reaching",
        format!("200 runs in {elapsed:.2?}, worst bound margin {worst_margin:.2} s"),
    );
}

#[test]
fn c05_forward_invariance_on_obstacle_presets() {
    for id in [PresetId::TurtlebotLissajous, PresetId::F1tenthCircle] {
        let sc = id.scenario();
        assert_eq!(sc.dt_physics, 1e-3);
        assert_eq!(sc.duration, 60.0);
        let (trace, metrics) = run(&sc).unwrap();
        // the run starts inside the safe set
        for h in &trace[0].obstacle_h {
            assert!(
                h.unwrap() >= 0.0,
                "{}: starts outside the safe set",
                id.name()
            );
        }
        let min_h = metrics.min_h_c3bf.unwrap();
        let min_clear = metrics.min_clearance.unwrap();
        assert!(min_h >= -1e-3, "{}: min h = {min_h}", id.name());
        assert!(min_clear > 0.0, "{}: clearance {min_clear}", id.name());
        pass(
            5,
            "forward invariance",
            format!(
                "{}: min h_c3bf {min_h:.4}, min clearance {min_clear:.4} m",
                id.name()
            ),
        );
    }
}

#[test]
fn c06_filter_is_exact_passthrough_when_inactive() {
    let mut inactive_steps = 0usize;
    for id in [PresetId::DroneCircle, PresetId::F1tenthCircle] {
        let sc = id.scenario();
        let (trace, _) = run(&sc).unwrap();
        for row in &trace {
            if row.active_set.is_empty() && row.qp_status == QpStatus::Optimal {
                let gap = (row.u_star - row.u_smc).norm_inf();
                assert!(
                    gap <= 1e-9,
                    "{}: passthrough gap {gap} at t = {}",
                    id.name(),
                    row.t
                );
                inactive_steps += 1;
            }
        }
    }
    assert!(inactive_steps > 1000, "too few inactive steps to certify");
    pass(
        6,
        "inactive filter passthrough",
        format!("{inactive_steps} constraint-free steps, |u* - u_smc| <= 1e-9 on all"),
    );
}

#[test]
fn c07_qp_matches_brute_force_oracle() {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(0xACCE07);
    let mut optimal = 0usize;
    let mut infeasible = 0usize;
    for i in 0..10_000 {
        let n = rng.random_range(1..=6usize);
        let m = rng.random_range(0..=12usize);
        let p = QpProblem::<f64> {
            h_diag: (0..n).map(|_| rng.random_range(0.1..10.0)).collect(),
            g: (0..n).map(|_| rng.random_range(-5.0..5.0)).collect(),
            rows: (0..m)
                .map(|_| ConstraintRow {
                    a: (0..n).map(|_| rng.random_range(-2.0..2.0)).collect(),
                    b: rng.random_range(-3.0..3.0),
                })
                .collect(),
        };
        let sol = ActiveSetSolver::new().solve(&p);
        let bf = brute_force_solve(&p);
        assert_eq!(sol.status, bf.status, "case {i}: status mismatch on {p:?}");
        if sol.status == QpStatus::Optimal {
            optimal += 1;
            let scale =
                bf.x.iter()
                    .chain(&bf.multipliers)
                    .fold(1.0f64, |acc, v| acc.max(v.abs()));
            if scale <= 1e3 {
                let gap = (sol.objective - bf.objective).abs();
                assert!(
                    gap <= 1e-9 * scale,
                    "case {i}: objective gap {gap} on {p:?}"
                );
                for j in 0..n {
                    assert!((sol.x[j] - bf.x[j]).abs() <= 1e-7 * scale);
                }
                assert!(sol.kkt.stationarity <= 1e-8 * scale);
                assert!(sol.kkt.primal <= 1e-9 * scale);
                assert!(sol.kkt.complementarity <= 1e-8 * scale);
            } else {
                // sliver vertex; agreement is conditioning-limited
                let rel = (sol.objective - bf.objective).abs() / bf.objective.abs().max(1.0);
                assert!(rel <= 1e-6, "case {i}: relative gap {rel}");
            }
        } else {
            infeasible += 1;
        }
    }
    let elapsed = start.elapsed();
    assert!(
        elapsed.as_secs_f64() < 30.0,
        "took {elapsed:?}, budget 30 s"
    );
    pass(
        7,
        "qp oracle equivalence",
        format!("10000 problems ({optimal} optimal, {infeasible} infeasible) in {elapsed:.2?}"),
    );
}

#[test]
fn c08_barrier_gradients_and_cone_semantics() {
    let mut rng = ChaCha8Rng::seed_from_u64(0xACCE08);
    let eps = 1e-6;
    // analytic gradients against central differences
    let mut checked = 0usize;
    while checked < 100_000 {
        let r = rng.random_range(0.05..2.0);
        let ang = rng.random_range(0.0..std::f64::consts::TAU);
        let dist = r * rng.random_range(1.01..6.0);
        let p_rel = Vec2::new(dist * ang.cos(), dist * ang.sin());
        let v_rel = Vec2::new(rng.random_range(-3.0..3.0), rng.random_range(-3.0..3.0));
        if v_rel.norm() < 1e-3 {
            continue;
        }
        let (gp, gv) = cbf::c3bf_gradients(p_rel, v_rel, r).unwrap();
        let scale = 1.0 + gp.norm().max(gv.norm());
        for (i, basis) in [Vec2::new(eps, 0.0), Vec2::new(0.0, eps)]
            .iter()
            .enumerate()
        {
            let dp = (cbf::c3bf_value(p_rel + *basis, v_rel, r).unwrap()
                - cbf::c3bf_value(p_rel - *basis, v_rel, r).unwrap())
                / (2.0 * eps);
            let dv = (cbf::c3bf_value(p_rel, v_rel + *basis, r).unwrap()
                - cbf::c3bf_value(p_rel, v_rel - *basis, r).unwrap())
                / (2.0 * eps);
            let (gp_i, gv_i) = if i == 0 { (gp.x, gv.x) } else { (gp.y, gv.y) };
            assert!(
                (dp - gp_i).abs() / scale <= 1e-6,
                "grad_p off at sample {checked}"
            );
            assert!(
                (dv - gv_i).abs() / scale <= 1e-6,
                "grad_v off at sample {checked}"
            );
        }
        checked += 1;
    }

    // sign of h against a ray-disk intersection oracle
    let mut checked = 0usize;
    let mut unsafe_cases = 0usize;
    while checked < 100_000 {
        let r = rng.random_range(0.05..1.5);
        let ang = rng.random_range(0.0..std::f64::consts::TAU);
        let dist = r * rng.random_range(1.02..6.0);
        let p_rel = Vec2::new(dist * ang.cos(), dist * ang.sin());
        let v_rel = Vec2::new(rng.random_range(-2.0..2.0), rng.random_range(-2.0..2.0));
        if v_rel.norm() < 1e-3 {
            continue;
        }
        let h = cbf::c3bf_value(p_rel, v_rel, r).unwrap();
        if h.abs() < 1e-9 {
            continue; // tangency excluded
        }
        let s_star = (-p_rel.dot(v_rel) / v_rel.norm_sq()).max(0.0);
        let closest = (p_rel + v_rel * s_star).norm();
        assert_eq!(h < 0.0, closest <= r, "cone sign disagrees with ray oracle");
        if h < 0.0 {
            unsafe_cases += 1;
        }
        checked += 1;
    }
    assert!(unsafe_cases > 1000 && unsafe_cases < 99_000);
    pass(
        8,
        "barrier gradients and cone semantics",
        format!("1e5 gradient checks at 1e-6, 1e5 sign checks ({unsafe_cases} collision courses)"),
    );
}

#[test]
fn c09_drone_tracking_quality() {
    let sc = PresetId::DroneCircle.scenario();
    assert_eq!(sc.gains.lambda_bl, 0.05);
    let (_, metrics) = run(&sc).unwrap();
    let rms = metrics.rms_e1_post_reach.expect("never reached");
    assert!(rms <= 0.05, "post-reach RMS {rms} m exceeds 0.05 m");
    pass(
        9,
        "drone tracking quality",
        format!("post-reach RMS |e1| = {rms:.4} m <= 0.05 m"),
    );
}

#[test]
fn c10_determinism_and_integration_order() {
    // bitwise-identical traces through the full binary
    let bin = env!("CARGO_BIN_EXE_conetrack");
    let dir = tempfile::tempdir().unwrap();
    for sub in ["a", "b"] {
        let status = std::process::Command::new(bin)
            .args([
                "run",
                "--preset",
                "turtlebot_lissajous",
                "--duration",
                "5",
                "--out",
            ])
            .arg(dir.path().join(sub))
            .status()
            .unwrap();
        assert!(status.success());
    }
    let a = std::fs::read(dir.path().join("a/trace.csv")).unwrap();
    let b = std::fs::read(dir.path().join("b/trace.csv")).unwrap();
    assert_eq!(a, b, "identical runs produced different trace bytes");

    // Fourth-order convergence needs a run whose truncation error sits
    // well above the f64 noise floor, so use a fast differential-drive
    // loop; the preset dynamics are gentle enough that their RK4 error is
    // unmeasurable at these steps.
    let order_scenario = Scenario::<f64> {
        vehicle: VehicleParams::DiffDrive(conetrack_core::models::DiffDriveParams {
            v_min: 0.05,
            v_max: 5.0,
            omega_max: 12.0,
        }),
        initial_state: VehicleState::DiffDrive {
            p: Vec2::new(0.5, 0.0),
            v: 1.5,
            theta: std::f64::consts::FRAC_PI_2,
        },
        reference: ReferenceSpec::Circle {
            center: Vec2::zero(),
            radius: 0.5,
            omega: 3.0,
            phase: 0.0,
        },
        obstacles: vec![],
        disturbance: DisturbanceSpec::none(0.0),
        surface: SlidingSurfaceSpec::Linear {
            lambda_gains: Vec2::new(1.0, 1.0),
        },
        gains: SmcGains {
            k: 1.0,
            eta: 0.01,
            lambda_bl: 0.05,
        },
        barriers: BarrierConfig::default(),
        input_bounds: InputBounds::default(),
        dt_physics: 1e-3,
        control_period: 8e-3,
        duration: 10.0,
        seed: 5,
    };
    let mut finals = Vec::new();
    for dt in [8e-3, 4e-3, 2e-3] {
        let mut sc = order_scenario.clone();
        sc.dt_physics = dt;
        let (trace, _) = run(&sc).unwrap();
        finals.push(trace.last().unwrap().canonical);
    }
    let d1 = (finals[0].p - finals[1].p).norm() + (finals[0].upsilon - finals[1].upsilon).norm();
    let d2 = (finals[1].p - finals[2].p).norm() + (finals[1].upsilon - finals[2].upsilon).norm();
    assert!(d2 > 0.0, "difference vanished; cannot certify the order");
    let ratio = d1 / d2;
    assert!(ratio >= 8.0, "convergence ratio {ratio:.2} below 8");
    pass(
        10,
        "determinism and integration order",
        format!(
            "{} identical bytes; halving dt shrinks the state change {ratio:.1}x",
            a.len()
        ),
    );
}

/// The preset scenarios keep every realized disturbance within the declared
/// bound and report slack activations honestly (cross-checks the metrics
/// fields the other criteria rely on).
#[test]
fn metrics_are_consistent_with_traces() {
    for id in PresetId::ALL {
        let mut sc = id.scenario();
        sc.duration = 10.0;
        let (trace, metrics) = run(&sc).unwrap();
        for row in &trace {
            assert!(row.disturbance.norm_inf() <= sc.disturbance.d_bar + 1e-15);
        }
        let counted = trace
            .iter()
            .filter(|r| r.slacks.iter().any(|s| *s > SLACK_ACTIVE_TOL))
            .count();
        assert_eq!(counted, metrics.slack_activation_count);
        let max_e1 = trace.iter().map(|r| r.e1.norm()).fold(0.0f64, f64::max);
        assert!((max_e1 - metrics.max_e1).abs() < 1e-12);
    }
}
