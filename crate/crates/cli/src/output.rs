//! Trace and metrics persistence.
//!
//! `trace.csv` carries one row per control step. The column set depends on
//! the vehicle type and the obstacle/soft-barrier counts but is fully
//! determined by the scenario, and floats are written with Rust's shortest
//! round-trip formatting, so identical runs produce identical bytes.

use std::io::Write;
use std::path::Path;

use anyhow::{Context, Result};
use conetrack_core::models::{VehicleParams, VehicleState};
use conetrack_core::{Metrics, Scenario, Trace};

/// Column header for the given scenario.
pub fn trace_header(scenario: &Scenario) -> String {
    let mut cols: Vec<String> = vec!["t".into()];
    match scenario.vehicle {
        VehicleParams::Ackermann(_) => {
            cols.extend(["px", "py", "v", "delta1", "delta3"].map(String::from))
        }
        VehicleParams::DiffDrive(_) => cols.extend(["px", "py", "v", "theta"].map(String::from)),
        VehicleParams::DoubleIntegrator(_) => {
            cols.extend(["px", "py", "vx", "vy"].map(String::from))
        }
    }
    cols.extend(
        [
            "vel_x", "vel_y", "u_smc_1", "u_smc_2", "u_star_1", "u_star_2", "d_1", "d_2", "s_1",
            "s_2", "e1_x", "e1_y",
        ]
        .map(String::from),
    );
    for i in 0..scenario.obstacles.len() {
        cols.push(format!("h_c3bf_{i}"));
        cols.push(format!("obst_dist_{i}"));
    }
    for spec in &scenario.barriers.soft {
        cols.push(format!("slack_{}", spec.kind.name()));
    }
    cols.push("qp_status".into());
    cols.push("active_set".into());
    cols.join(",")
}

/// Write the whole trace as CSV.
pub fn write_trace_csv(path: &Path, scenario: &Scenario, trace: &Trace) -> Result<()> {
    let mut out = String::with_capacity(trace.len() * 160 + 256);
    out.push_str(&trace_header(scenario));
    out.push('\n');
    for row in trace {
        out.push_str(&format!("{}", row.t));
        match row.native {
            VehicleState::Ackermann {
                p,
                v,
                delta1,
                delta3,
            } => {
                out.push_str(&format!(",{},{},{},{},{}", p.x, p.y, v, delta1, delta3));
            }
            VehicleState::DiffDrive { p, v, theta } => {
                out.push_str(&format!(",{},{},{},{}", p.x, p.y, v, theta));
            }
            VehicleState::DoubleIntegrator { p, upsilon } => {
                out.push_str(&format!(",{},{},{},{}", p.x, p.y, upsilon.x, upsilon.y));
            }
        }
        out.push_str(&format!(
            ",{},{},{},{},{},{},{},{},{},{},{},{}",
            row.canonical.upsilon.x,
            row.canonical.upsilon.y,
            row.u_smc.x,
            row.u_smc.y,
            row.u_star.x,
            row.u_star.y,
            row.disturbance.x,
            row.disturbance.y,
            row.surface.x,
            row.surface.y,
            row.e1.x,
            row.e1.y
        ));
        for (h, dist) in row.obstacle_h.iter().zip(&row.obstacle_distance) {
            match h {
                Some(v) => out.push_str(&format!(",{v}")),
                None => out.push(','),
            }
            out.push_str(&format!(",{dist}"));
        }
        for s in &row.slacks {
            out.push_str(&format!(",{s}"));
        }
        out.push(',');
        out.push_str(row.qp_status.name());
        out.push(',');
        let joined: Vec<String> = row.active_set.iter().map(|i| i.to_string()).collect();
        out.push_str(&joined.join(";"));
        out.push('\n');
    }
    let mut f =
        std::fs::File::create(path).with_context(|| format!("cannot create {}", path.display()))?;
    f.write_all(out.as_bytes())
        .with_context(|| format!("cannot write {}", path.display()))
}

pub fn write_metrics_json(path: &Path, metrics: &Metrics) -> Result<()> {
    let json = serde_json::to_string_pretty(metrics).context("metrics serialization")?;
    std::fs::write(path, json.as_bytes())
        .with_context(|| format!("cannot write {}", path.display()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::presets::PresetId;

    #[test]
    fn headers_are_stable() {
        assert_eq!(
            trace_header(&PresetId::DroneCircle.scenario()),
            "t,px,py,vx,vy,vel_x,vel_y,u_smc_1,u_smc_2,u_star_1,u_star_2,\
             d_1,d_2,s_1,s_2,e1_x,e1_y,qp_status,active_set"
        );
        assert_eq!(
            trace_header(&PresetId::TurtlebotLissajous.scenario()),
            "t,px,py,v,theta,vel_x,vel_y,u_smc_1,u_smc_2,u_star_1,u_star_2,\
             d_1,d_2,s_1,s_2,e1_x,e1_y,h_c3bf_0,obst_dist_0,slack_v_min,slack_v_max,\
             qp_status,active_set"
        );
        assert_eq!(
            trace_header(&PresetId::F1tenthCircle.scenario()),
            "t,px,py,v,delta1,delta3,vel_x,vel_y,u_smc_1,u_smc_2,u_star_1,u_star_2,\
             d_1,d_2,s_1,s_2,e1_x,e1_y,h_c3bf_0,obst_dist_0,slack_v_min,slack_v_max,\
             slack_delta3,qp_status,active_set"
        );
    }

    #[test]
    fn csv_row_count_matches_trace() {
        let mut sc = PresetId::DroneCircle.scenario();
        sc.duration = 0.5;
        let (trace, _) = conetrack_core::sim::run(&sc).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("trace.csv");
        write_trace_csv(&path, &sc, &trace).unwrap();
        let text = std::fs::read_to_string(&path).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines.len(), trace.len() + 1);
        let cols = trace_header(&sc).split(',').count();
        for line in &lines {
            assert_eq!(line.split(',').count(), cols, "ragged row: {line}");
        }
    }
}
