//! Static SVG plots: the traveled paths and the tracking time series.
//!
//! Hand-rolled SVG keeps the output deterministic and dependency-free.
//! Timestamps on the trajectory plot are color-graduated from blue (start)
//! to red (end) with matching markers on the reference, the robot and the
//! obstacle snapshots.

use std::fmt::Write;

use conetrack_core::cbf::obstacle_state;
use conetrack_core::{Scenario, Trace, Vec2};

const MARKER_COUNT: usize = 12;

fn fmt(v: f64) -> String {
    format!("{v:.2}")
}

fn time_color(f: f64) -> String {
    let f = f.clamp(0.0, 1.0);
    let lerp = |a: f64, b: f64| (a + (b - a) * f).round() as u8;
    format!(
        "rgb({},{},{})",
        lerp(30.0, 230.0),
        lerp(90.0, 60.0),
        lerp(220.0, 30.0)
    )
}

struct Frame {
    x_lo: f64,
    x_hi: f64,
    y_lo: f64,
    y_hi: f64,
    left: f64,
    top: f64,
    width: f64,
    height: f64,
}

impl Frame {
    fn x(&self, v: f64) -> f64 {
        self.left + (v - self.x_lo) / (self.x_hi - self.x_lo) * self.width
    }

    fn y(&self, v: f64) -> f64 {
        self.top + (self.y_hi - v) / (self.y_hi - self.y_lo) * self.height
    }

    fn x_scale(&self) -> f64 {
        self.width / (self.x_hi - self.x_lo)
    }

    fn polyline(&self, pts: impl Iterator<Item = (f64, f64)>, style: &str) -> String {
        let mut d = String::new();
        for (i, (x, y)) in pts.enumerate() {
            let cmd = if i == 0 { 'M' } else { 'L' };
            let _ = write!(d, "{cmd}{} {} ", fmt(self.x(x)), fmt(self.y(y)));
        }
        format!("<path d=\"{}\" fill=\"none\" {style}/>\n", d.trim_end())
    }

    fn axes(&self, x_label: &str, y_label: &str) -> String {
        let mut s = String::new();
        let _ = writeln!(
            s,
            "<rect x=\"{}\" y=\"{}\" width=\"{}\" height=\"{}\" fill=\"none\" stroke=\"#444\" stroke-width=\"1\"/>",
            fmt(self.left),
            fmt(self.top),
            fmt(self.width),
            fmt(self.height)
        );
        for i in 0..=5 {
            let fx = self.x_lo + (self.x_hi - self.x_lo) * i as f64 / 5.0;
            let px = self.x(fx);
            let _ = writeln!(
                s,
                "<line x1=\"{0}\" y1=\"{1}\" x2=\"{0}\" y2=\"{2}\" stroke=\"#444\" stroke-width=\"1\"/>\n<text x=\"{0}\" y=\"{3}\" font-size=\"11\" text-anchor=\"middle\" fill=\"#333\">{4}</text>",
                fmt(px),
                fmt(self.top + self.height),
                fmt(self.top + self.height + 5.0),
                fmt(self.top + self.height + 18.0),
                fmt(fx)
            );
            let fy = self.y_lo + (self.y_hi - self.y_lo) * i as f64 / 5.0;
            let py = self.y(fy);
            let _ = writeln!(
                s,
                "<line x1=\"{0}\" y1=\"{2}\" x2=\"{1}\" y2=\"{2}\" stroke=\"#444\" stroke-width=\"1\"/>\n<text x=\"{3}\" y=\"{4}\" font-size=\"11\" text-anchor=\"end\" fill=\"#333\">{5}</text>",
                fmt(self.left - 5.0),
                fmt(self.left),
                fmt(py),
                fmt(self.left - 8.0),
                fmt(py + 4.0),
                fmt(fy)
            );
        }
        let _ = writeln!(
            s,
            "<text x=\"{}\" y=\"{}\" font-size=\"12\" text-anchor=\"middle\" fill=\"#111\">{}</text>",
            fmt(self.left + self.width / 2.0),
            fmt(self.top + self.height + 36.0),
            x_label
        );
        let _ = writeln!(
            s,
            "<text x=\"{}\" y=\"{}\" font-size=\"12\" text-anchor=\"middle\" fill=\"#111\" transform=\"rotate(-90 {} {})\">{}</text>",
            fmt(self.left - 40.0),
            fmt(self.top + self.height / 2.0),
            fmt(self.left - 40.0),
            fmt(self.top + self.height / 2.0),
            y_label
        );
        s
    }
}

/// Reference vs. actual path with obstacle snapshots, time color-coded.
pub fn trajectory_svg(scenario: &Scenario, trace: &Trace) -> String {
    let actual: Vec<Vec2> = trace.iter().map(|r| r.native.position()).collect();
    let reference: Vec<Vec2> = trace.iter().map(|r| r.native.position() + r.e1).collect();
    let obstacle_paths: Vec<Vec<Vec2>> = scenario
        .obstacles
        .iter()
        .map(|o| trace.iter().map(|r| obstacle_state(o, r.t).p).collect())
        .collect();

    let mut x_lo = f64::INFINITY;
    let mut x_hi = f64::NEG_INFINITY;
    let mut y_lo = f64::INFINITY;
    let mut y_hi = f64::NEG_INFINITY;
    let mut grow = |p: Vec2, pad: f64| {
        x_lo = x_lo.min(p.x - pad);
        x_hi = x_hi.max(p.x + pad);
        y_lo = y_lo.min(p.y - pad);
        y_hi = y_hi.max(p.y + pad);
    };
    for p in actual.iter().chain(&reference) {
        grow(*p, 0.0);
    }
    for (obs, path) in scenario.obstacles.iter().zip(&obstacle_paths) {
        for p in path {
            grow(*p, obs.radius);
        }
    }
    if !x_lo.is_finite() {
        x_lo = -1.0;
        x_hi = 1.0;
        y_lo = -1.0;
        y_hi = 1.0;
    }
    let pad = 0.08 * ((x_hi - x_lo).max(y_hi - y_lo)).max(1e-6);
    x_lo -= pad;
    x_hi += pad;
    y_lo -= pad;
    y_hi += pad;

    // equal aspect: widen the shorter range
    let plot_w = 620.0;
    let plot_h = 440.0;
    let span_x = x_hi - x_lo;
    let span_y = y_hi - y_lo;
    if span_x / plot_w > span_y / plot_h {
        let want = span_x * plot_h / plot_w;
        let c = 0.5 * (y_lo + y_hi);
        y_lo = c - want / 2.0;
        y_hi = c + want / 2.0;
    } else {
        let want = span_y * plot_w / plot_h;
        let c = 0.5 * (x_lo + x_hi);
        x_lo = c - want / 2.0;
        x_hi = c + want / 2.0;
    }

    let frame = Frame {
        x_lo,
        x_hi,
        y_lo,
        y_hi,
        left: 70.0,
        top: 40.0,
        width: plot_w,
        height: plot_h,
    };

    let mut svg = String::new();
    let _ = writeln!(
        svg,
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"860\" height=\"540\" viewBox=\"0 0 860 540\">\n<rect width=\"860\" height=\"540\" fill=\"white\"/>"
    );
    svg.push_str(&frame.axes("x [m]", "y [m]"));

    for path in &obstacle_paths {
        svg.push_str(&frame.polyline(
            path.iter().map(|p| (p.x, p.y)),
            "stroke=\"#999\" stroke-width=\"1\" stroke-dasharray=\"4 3\"",
        ));
    }
    svg.push_str(&frame.polyline(
        reference.iter().map(|p| (p.x, p.y)),
        "stroke=\"#2962d4\" stroke-width=\"1.5\"",
    ));
    svg.push_str(&frame.polyline(
        actual.iter().map(|p| (p.x, p.y)),
        "stroke=\"#d43535\" stroke-width=\"1.5\"",
    ));

    // time-graduated markers and obstacle disks
    if trace.len() > 1 {
        for k in 0..MARKER_COUNT {
            let idx = k * (trace.len() - 1) / (MARKER_COUNT - 1);
            let f = k as f64 / (MARKER_COUNT - 1) as f64;
            let color = time_color(f);
            for (obs, path) in scenario.obstacles.iter().zip(&obstacle_paths) {
                let p = path[idx];
                let _ = writeln!(
                    svg,
                    "<circle cx=\"{}\" cy=\"{}\" r=\"{}\" fill=\"{color}\" fill-opacity=\"0.18\" stroke=\"{color}\" stroke-width=\"1\"/>",
                    fmt(frame.x(p.x)),
                    fmt(frame.y(p.y)),
                    fmt(obs.radius * frame.x_scale())
                );
            }
            let pr = reference[idx];
            let _ = writeln!(
                svg,
                "<circle cx=\"{}\" cy=\"{}\" r=\"3\" fill=\"{color}\" stroke=\"white\" stroke-width=\"0.7\"/>",
                fmt(frame.x(pr.x)),
                fmt(frame.y(pr.y))
            );
            let pa = actual[idx];
            let _ = writeln!(
                svg,
                "<rect x=\"{}\" y=\"{}\" width=\"6\" height=\"6\" fill=\"{color}\" stroke=\"white\" stroke-width=\"0.7\"/>",
                fmt(frame.x(pa.x) - 3.0),
                fmt(frame.y(pa.y) - 3.0)
            );
        }
    }

    let legend = [
        ("#2962d4", "reference"),
        ("#d43535", "robot"),
        ("#999999", "obstacle path"),
    ];
    for (i, (color, label)) in legend.iter().enumerate() {
        let y = 52.0 + 18.0 * i as f64;
        let _ = writeln!(
            svg,
            "<line x1=\"706\" y1=\"{0}\" x2=\"730\" y2=\"{0}\" stroke=\"{color}\" stroke-width=\"2\"/>\n<text x=\"736\" y=\"{1}\" font-size=\"11\" fill=\"#333\">{label}</text>",
            fmt(y),
            fmt(y + 4.0)
        );
    }
    let _ = writeln!(
        svg,
        "<text x=\"706\" y=\"{}\" font-size=\"11\" fill=\"#333\">time: blue to red</text>",
        fmt(52.0 + 18.0 * legend.len() as f64 + 4.0)
    );
    svg.push_str("</svg>\n");
    svg
}

/// Sliding-surface and position-error magnitudes over time.
pub fn timeseries_svg(scenario: &Scenario, trace: &Trace) -> String {
    let t_end = trace.last().map_or(1.0, |r| r.t).max(1e-9);
    let s_mag: Vec<(f64, f64)> = trace.iter().map(|r| (r.t, r.surface.norm())).collect();
    let e_mag: Vec<(f64, f64)> = trace.iter().map(|r| (r.t, r.e1.norm())).collect();
    let s_max = s_mag.iter().fold(1e-9f64, |m, &(_, v)| m.max(v));
    let e_max = e_mag.iter().fold(1e-9f64, |m, &(_, v)| m.max(v));

    let panels = [
        ("|S| [m/s]", s_max, &s_mag, Some(scenario.gains.lambda_bl)),
        ("|e1| [m]", e_max, &e_mag, None),
    ];

    let mut svg = String::new();
    let _ = writeln!(
        svg,
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"860\" height=\"560\" viewBox=\"0 0 860 560\">\n<rect width=\"860\" height=\"560\" fill=\"white\"/>"
    );
    for (i, (label, max_v, series, guide)) in panels.iter().enumerate() {
        let frame = Frame {
            x_lo: 0.0,
            x_hi: t_end,
            y_lo: 0.0,
            y_hi: max_v * 1.08,
            left: 70.0,
            top: 30.0 + 270.0 * i as f64,
            width: 740.0,
            height: 200.0,
        };
        svg.push_str(&frame.axes(if i == 1 { "t [s]" } else { "" }, label));
        if let Some(g) = guide {
            if *g <= frame.y_hi {
                let _ = writeln!(
                    svg,
                    "<line x1=\"{}\" y1=\"{2}\" x2=\"{}\" y2=\"{2}\" stroke=\"#888\" stroke-width=\"1\" stroke-dasharray=\"6 4\"/>\n<text x=\"{3}\" y=\"{4}\" font-size=\"10\" fill=\"#666\">boundary layer</text>",
                    fmt(frame.left),
                    fmt(frame.left + frame.width),
                    fmt(frame.y(*g)),
                    fmt(frame.left + frame.width - 90.0),
                    fmt(frame.y(*g) - 4.0)
                );
            }
        }
        svg.push_str(&frame.polyline(
            series.iter().copied(),
            "stroke=\"#2962d4\" stroke-width=\"1.3\"",
        ));
    }
    svg.push_str("</svg>\n");
    svg
}
