//! Hand-written SVG charts: Marey (time-distance) diagrams and convergence
//! curves.

use std::fmt::Write;

use crate::conflict::{conflicting_segments, Side, TimedPath};
use crate::model::{derive_times, format_hhmm, ModelError, ProblemInstance};
use crate::optimizer::ConvergenceTrace;

const WIDTH: f64 = 960.0;
const HEIGHT: f64 = 540.0;
const LEFT: f64 = 110.0;
const RIGHT: f64 = 30.0;
const TOP: f64 = 30.0;
const BOTTOM: f64 = 50.0;
const PALETTE: [&str; 8] = ["#1f77b4", "#2ca02c", "#9467bd", "#ff7f0e", "#17becf", "#8c564b", "#e377c2", "#7f7f7f"];

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;").replace('"', "&quot;")
}

fn header(out: &mut String, title: &str) {
    let _ = writeln!(
        out,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="11">"#
    );
    let _ = writeln!(out, "<title>{}</title>", escape(title));
    let _ = writeln!(out, r#"<rect width="100%" height="100%" fill="white"/>"#);
}

fn polyline(out: &mut String, class: &str, stroke: &str, width: f64, points: &[(f64, f64)], extra: &str) {
    let pts: Vec<String> = points.iter().map(|(x, y)| format!("{x:.2},{y:.2}")).collect();
    let _ = writeln!(
        out,
        r#"<polyline class="{class}" fill="none" stroke="{stroke}" stroke-width="{width}"{extra} points="{}"/>"#,
        pts.join(" ")
    );
}

/// Marey chart: time on the x axis, corridor kilometre on the y axis, one
/// polyline per service and red overlays where pairs conflict.
///
/// `departures` gives each service's departure times (the requested times
/// when `None`); `scheduled` greys out services left unscheduled.
pub fn marey_svg(
    instance: &ProblemInstance,
    departures: Option<&[Vec<f64>]>,
    scheduled: Option<&[bool]>,
) -> Result<String, ModelError> {
    let n = instance.len();
    let mut paths = Vec::with_capacity(n);
    for (i, req) in instance.requests().iter().enumerate() {
        let deps = match departures {
            Some(d) => d[i].clone(),
            None => req.requested_departures(),
        };
        let stops = derive_times(req, &deps)?;
        paths.push(TimedPath::for_service(instance, i, &stops));
    }

    let (mut t0, mut t1) = (f64::INFINITY, f64::NEG_INFINITY);
    for p in &paths {
        t0 = t0.min(p.start_time());
        t1 = t1.max(p.end_time());
    }
    if !t0.is_finite() {
        (t0, t1) = (0.0, 60.0);
    }
    t0 = (t0 / 60.0).floor() * 60.0;
    t1 = ((t1 / 60.0).ceil() * 60.0).max(t0 + 60.0);
    let length = instance.corridor().length_km();
    let plot_w = WIDTH - LEFT - RIGHT;
    let plot_h = HEIGHT - TOP - BOTTOM;
    let x = |t: f64| LEFT + (t - t0) / (t1 - t0) * plot_w;
    let y = |km: f64| TOP + km / length * plot_h;

    let mut out = String::new();
    header(&mut out, "Marey chart");
    let _ = writeln!(out, r##"<g class="axes" stroke="#ccc" stroke-width="1">"##);
    for s in instance.corridor().stations() {
        let yy = y(s.position);
        let _ = writeln!(out, r#"<line x1="{LEFT}" y1="{yy:.2}" x2="{:.2}" y2="{yy:.2}"/>"#, WIDTH - RIGHT);
    }
    let mut hour = t0;
    while hour <= t1 + 1e-9 {
        let xx = x(hour);
        let _ = writeln!(out, r#"<line x1="{xx:.2}" y1="{TOP}" x2="{xx:.2}" y2="{:.2}"/>"#, HEIGHT - BOTTOM);
        hour += 60.0;
    }
    let _ = writeln!(out, "</g>");
    let _ = writeln!(out, r##"<g class="labels" fill="#333">"##);
    for s in instance.corridor().stations() {
        let _ = writeln!(
            out,
            r#"<text x="{:.2}" y="{:.2}" text-anchor="end">{} ({} km)</text>"#,
            LEFT - 6.0,
            y(s.position) + 4.0,
            escape(&s.name),
            s.position
        );
    }
    let mut hour = t0;
    while hour <= t1 + 1e-9 {
        let _ = writeln!(
            out,
            r#"<text x="{:.2}" y="{:.2}" text-anchor="middle">{}</text>"#,
            x(hour),
            HEIGHT - BOTTOM + 18.0,
            format_hhmm(hour)
        );
        hour += 60.0;
    }
    let _ = writeln!(out, "</g>");

    for (i, (p, req)) in paths.iter().zip(instance.requests()).enumerate() {
        let on = scheduled.is_none_or(|s| s[i]);
        let mut pts = Vec::with_capacity(2 * p.positions().len());
        for ((&km, &arr), &dep) in p.positions().iter().zip(p.arrivals()).zip(p.departures()) {
            pts.push((x(arr), y(km)));
            pts.push((x(dep), y(km)));
        }
        let colour = if on { PALETTE[i % PALETTE.len()] } else { "#bbbbbb" };
        let dash = if on { String::new() } else { r#" stroke-dasharray="6 4""#.to_string() };
        let extra = format!(r#" data-service="{}"{dash}"#, escape(&req.id));
        polyline(&mut out, "service", colour, 2.0, &pts, &extra);
        let (lx, ly) = pts[0];
        let _ = writeln!(out, r#"<text x="{:.2}" y="{:.2}" fill="{colour}">{}</text>"#, lx + 3.0, ly - 4.0, escape(&req.id));
    }

    let params = instance.params();
    for a in 0..n {
        for b in a + 1..n {
            for seg in conflicting_segments(&paths[a], &paths[b], params.omega, params.conflict_semantics) {
                for p in [&paths[a], &paths[b]] {
                    let pts = piece(p, seg.from_km, seg.to_km);
                    let pts: Vec<(f64, f64)> = pts.into_iter().map(|(t, km)| (x(t), y(km))).collect();
                    polyline(&mut out, "conflict", "red", 3.5, &pts, r#" stroke-opacity="0.8""#);
                }
            }
        }
    }
    out.push_str("</svg>\n");
    Ok(out)
}

/// (time, km) points of a path between two positions it covers.
fn piece(p: &TimedPath, from: f64, to: f64) -> Vec<(f64, f64)> {
    let mut pts = vec![(p.time_at(from, Side::Departure).unwrap_or(f64::NAN), from)];
    for ((&km, &arr), &dep) in p.positions().iter().zip(p.arrivals()).zip(p.departures()) {
        if km > from && km < to {
            pts.push((arr, km));
            pts.push((dep, km));
        }
    }
    pts.push((p.time_at(to, Side::Arrival).unwrap_or(f64::NAN), to));
    pts.retain(|(t, _)| t.is_finite());
    pts
}

/// Best fitness against epoch for each trace.
pub fn convergence_svg(traces: &[ConvergenceTrace]) -> String {
    let epochs = traces.iter().map(|t| t.best_per_epoch.len()).max().unwrap_or(0).max(2);
    let values = traces.iter().flat_map(|t| t.best_per_epoch.iter().copied()).filter(|v| v.is_finite());
    let (mut lo, mut hi) = values.fold((f64::INFINITY, f64::NEG_INFINITY), |(l, h), v| (l.min(v), h.max(v)));
    if !lo.is_finite() {
        (lo, hi) = (0.0, 1.0);
    }
    if hi - lo < 1e-9 {
        lo -= 1.0;
        hi += 1.0;
    }
    let plot_w = WIDTH - LEFT - RIGHT - 120.0;
    let plot_h = HEIGHT - TOP - BOTTOM;
    let x = |e: usize| LEFT + e as f64 / (epochs - 1) as f64 * plot_w;
    let y = |v: f64| TOP + (hi - v) / (hi - lo) * plot_h;

    let mut out = String::new();
    header(&mut out, "Convergence");
    let _ = writeln!(out, r##"<g class="axes" stroke="#333" stroke-width="1">"##);
    let _ = writeln!(out, r#"<line x1="{LEFT}" y1="{:.2}" x2="{:.2}" y2="{:.2}"/>"#, TOP + plot_h, LEFT + plot_w, TOP + plot_h);
    let _ = writeln!(out, r#"<line x1="{LEFT}" y1="{TOP}" x2="{LEFT}" y2="{:.2}"/>"#, TOP + plot_h);
    let _ = writeln!(out, "</g>");
    let _ = writeln!(out, r##"<g class="labels" fill="#333">"##);
    for k in 0..=4 {
        let v = lo + (hi - lo) * k as f64 / 4.0;
        let _ = writeln!(out, r#"<text x="{:.2}" y="{:.2}" text-anchor="end">{v:.1}</text>"#, LEFT - 6.0, y(v) + 4.0);
    }
    let _ = writeln!(out, r#"<text x="{:.2}" y="{:.2}" text-anchor="middle">epoch</text>"#, LEFT + plot_w / 2.0, HEIGHT - 12.0);
    let _ = writeln!(out, r#"<text x="{LEFT}" y="{:.2}" text-anchor="middle">1</text>"#, TOP + plot_h + 16.0);
    let _ = writeln!(out, r#"<text x="{:.2}" y="{:.2}" text-anchor="middle">{epochs}</text>"#, LEFT + plot_w, TOP + plot_h + 16.0);
    let _ = writeln!(out, "</g>");

    for (i, t) in traces.iter().enumerate() {
        let colour = PALETTE[i % PALETTE.len()];
        let pts: Vec<(f64, f64)> = t.best_per_epoch.iter().enumerate().map(|(e, &v)| (x(e), y(v))).collect();
        let extra = format!(r#" data-algorithm="{}""#, t.algorithm);
        polyline(&mut out, "trace", colour, 1.5, &pts, &extra);
        let _ = writeln!(
            out,
            r#"<text x="{:.2}" y="{:.2}" fill="{colour}">{} (seed {})</text>"#,
            LEFT + plot_w + 10.0,
            TOP + 14.0 * (i + 1) as f64,
            t.algorithm,
            t.seed
        );
    }
    out.push_str("</svg>\n");
    out
}
