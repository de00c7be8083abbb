//! Standalone SVG rendering of a scenario and an animated plan.
//!
//! Each robot is a circle drawn at the origin and moved by one
//! `animateTransform`. Its key frames are the positions at step boundaries,
//! spaced evenly, so every step runs on its own clock of `step_seconds`.

use std::fmt::Write;

use kpump::geom::{Point, Polygon};
use kpump::plan::Plan;
use kpump::scenario::Scenario;

const PALETTE: [&str; 8] = [
    "#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b", "#e377c2", "#17becf",
];

fn color(c: usize) -> &'static str {
    PALETTE[c % PALETTE.len()]
}

fn points_attr(poly: &Polygon) -> String {
    poly.vertices()
        .iter()
        .map(|p| format!("{},{}", p.x, p.y))
        .collect::<Vec<_>>()
        .join(" ")
}

pub fn render(scenario: &Scenario, plan: &Plan, step_seconds: f64) -> String {
    let (lo, hi) = scenario.workspace.boundary().bounding_box();
    let (w, h) = (hi.x - lo.x, hi.y - lo.y);
    let pad = 0.02 * w.max(h);
    let stroke = 0.004 * w.max(h);
    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" viewBox="{} {} {} {}" width="800" height="{}">"#,
        lo.x - pad,
        lo.y - pad,
        w + 2.0 * pad,
        h + 2.0 * pad,
        (800.0 * (h + 2.0 * pad) / (w + 2.0 * pad)).round()
    );
    if !scenario.name.is_empty() {
        let _ = writeln!(s, "<title>{}</title>", escape(&scenario.name));
    }
    // Flip y so the workspace's y axis points up.
    let _ = writeln!(s, r#"<g transform="translate(0 {}) scale(1 -1)">"#, lo.y + hi.y);
    let _ = writeln!(
        s,
        r##"<polygon points="{}" fill="#ffffff" stroke="#000000" stroke-width="{stroke}"/>"##,
        points_attr(scenario.workspace.boundary())
    );
    for o in scenario.workspace.obstacles() {
        let _ = writeln!(s, r##"<polygon points="{}" fill="#888888"/>"##, points_attr(o));
    }
    for (c, g) in scenario.colors.iter().enumerate() {
        for t in &g.targets {
            let _ = writeln!(
                s,
                r#"<circle cx="{}" cy="{}" r="{}" fill="none" stroke="{}" stroke-width="{stroke}" stroke-dasharray="{} {}"/>"#,
                t.x,
                t.y,
                g.radius,
                color(c),
                3.0 * stroke,
                2.0 * stroke
            );
        }
    }

    let steps = plan.len();
    let mut track: Vec<Vec<Vec<Point>>> = scenario.colors.iter().map(|g| g.starts.iter().map(|&p| vec![p]).collect()).collect();
    for step in &plan.steps {
        for frames in track.iter_mut().flatten() {
            let last = *frames.last().expect("a start frame");
            frames.push(last);
        }
        for rm in step.motions() {
            if let Some(frames) = track.get_mut(rm.robot.color).and_then(|c| c.get_mut(rm.robot.index)) {
                *frames.last_mut().expect("a frame") = rm.motion.to;
            }
        }
    }
    let key_times = (0..=steps)
        .map(|i| format!("{}", i as f64 / steps.max(1) as f64))
        .collect::<Vec<_>>()
        .join(";");
    for (c, robots) in track.iter().enumerate() {
        let r = scenario.colors[c].radius;
        for (i, frames) in robots.iter().enumerate() {
            let p0 = frames[0];
            let _ = writeln!(
                s,
                r#"<circle id="robot-{c}-{i}" cx="0" cy="0" r="{r}" fill="{}" fill-opacity="0.7" transform="translate({} {})">"#,
                color(c),
                p0.x,
                p0.y
            );
            if steps > 0 {
                let values = frames.iter().map(|p| format!("{} {}", p.x, p.y)).collect::<Vec<_>>().join(";");
                let _ = writeln!(
                    s,
                    r#"<animateTransform attributeName="transform" type="translate" values="{values}" keyTimes="{key_times}" calcMode="linear" dur="{}s" fill="freeze"/>"#,
                    steps as f64 * step_seconds
                );
            }
            let _ = writeln!(s, "</circle>");
        }
    }
    s.push_str("</g>\n</svg>\n");
    s
}

fn escape(text: &str) -> String {
    text.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}
