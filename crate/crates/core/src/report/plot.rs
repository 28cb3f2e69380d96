use std::collections::BTreeMap;
use std::fmt::Write;

use crate::sim::Trace;
use crate::world::{AgentId, Scenario, Vec2};

const SIZE: f64 = 800.0;
const MARGIN: f64 = 40.0;
const PALETTE: [&str; 10] = [
    "#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd", "#8c564b", "#e377c2", "#7f7f7f", "#bcbd22", "#17becf",
];

/// Static SVG of agent paths (solid), goal paths (dashed), start points
/// (circles) and end points (squares).
pub fn render_svg(scenario: &Scenario, trace: &Trace) -> String {
    let mut paths: BTreeMap<AgentId, Vec<Vec2>> = BTreeMap::new();
    let mut times = Vec::new();
    for r in &trace.rows {
        paths.entry(r.agent_id).or_default().push(Vec2::new(r.px, r.py));
        if times.last() != Some(&r.t) {
            times.push(r.t);
        }
    }
    let goal_paths: Vec<Vec<Vec2>> = scenario
        .goals
        .iter()
        .map(|g| times.iter().map(|&t| g.position(t)).collect())
        .collect();

    let all = paths.values().flatten().chain(goal_paths.iter().flatten());
    let (mut lo, mut hi) = (Vec2::repeat(f64::INFINITY), Vec2::repeat(f64::NEG_INFINITY));
    for p in all {
        lo = lo.inf(p);
        hi = hi.sup(p);
    }
    if !lo.x.is_finite() {
        lo = Vec2::zeros();
        hi = Vec2::repeat(1.0);
    }
    let span = (hi - lo).max().max(1e-9);
    let scale = (SIZE - 2.0 * MARGIN) / span;
    let map = |p: &Vec2| (MARGIN + (p.x - lo.x) * scale, SIZE - MARGIN - (p.y - lo.y) * scale);
    let poly = |pts: &[Vec2]| {
        pts.iter()
            .map(|p| {
                let (x, y) = map(p);
                format!("{x:.2},{y:.2}")
            })
            .collect::<Vec<_>>()
            .join(" ")
    };

    let mut svg = String::new();
    let _ = writeln!(
        svg,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{SIZE}" height="{SIZE}" viewBox="0 0 {SIZE} {SIZE}">"#
    );
    let _ = writeln!(svg, r#"<rect width="100%" height="100%" fill="white"/>"#);
    for gp in &goal_paths {
        let _ = writeln!(
            svg,
            r##"<polyline points="{}" fill="none" stroke="#999" stroke-width="1" stroke-dasharray="4 3"/>"##,
            poly(gp)
        );
    }
    for (k, (id, pts)) in paths.iter().enumerate() {
        let color = PALETTE[k % PALETTE.len()];
        let _ = writeln!(
            svg,
            r#"<polyline id="agent-{id}" points="{}" fill="none" stroke="{color}" stroke-width="1.5"/>"#,
            poly(pts)
        );
        if let (Some(first), Some(last)) = (pts.first(), pts.last()) {
            let (x0, y0) = map(first);
            let (x1, y1) = map(last);
            let _ = writeln!(svg, r#"<circle cx="{x0:.2}" cy="{y0:.2}" r="4" fill="{color}"/>"#);
            let _ = writeln!(
                svg,
                r#"<rect x="{:.2}" y="{:.2}" width="8" height="8" fill="{color}"/>"#,
                x1 - 4.0,
                y1 - 4.0
            );
        }
    }
    svg.push_str("</svg>\n");
    svg
}
