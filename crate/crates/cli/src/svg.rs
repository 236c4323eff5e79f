//! Minimal standalone SVG plots: overlaid histograms and labeled scatter.

use std::fmt::Write;

const W: f64 = 640.0;
const H: f64 = 420.0;
const LEFT: f64 = 60.0;
const RIGHT: f64 = 20.0;
const TOP: f64 = 40.0;
const BOTTOM: f64 = 50.0;

const COLORS: [&str; 2] = ["#d95f02", "#1b9e77"];

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;").replace('"', "&quot;")
}

struct Frame {
    x: (f64, f64),
    y: (f64, f64),
}

impl Frame {
    fn px(&self, x: f64) -> f64 {
        LEFT + (x - self.x.0) / (self.x.1 - self.x.0) * (W - LEFT - RIGHT)
    }

    fn py(&self, y: f64) -> f64 {
        H - BOTTOM - (y - self.y.0) / (self.y.1 - self.y.0) * (H - TOP - BOTTOM)
    }
}

fn open(out: &mut String, title: &str) {
    let _ = writeln!(out, r#"<?xml version="1.0" encoding="UTF-8"?>"#);
    let _ = writeln!(
        out,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{H}" viewBox="0 0 {W} {H}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(out, r#"<rect width="{W}" height="{H}" fill="white"/>"#);
    let _ = writeln!(out, r#"<text x="{}" y="24" text-anchor="middle" font-size="15">{}</text>"#, W / 2.0, escape(title));
}

fn axes(out: &mut String, f: &Frame, xlabel: &str, ylabel: &str) {
    let (x0, x1, y0, y1) = (LEFT, W - RIGHT, H - BOTTOM, TOP);
    let _ = writeln!(out, r#"<g stroke="black" stroke-width="1"><line x1="{x0}" y1="{y0}" x2="{x1}" y2="{y0}"/><line x1="{x0}" y1="{y0}" x2="{x0}" y2="{y1}"/></g>"#);
    for k in 0..=4 {
        let t = k as f64 / 4.0;
        let xv = f.x.0 + t * (f.x.1 - f.x.0);
        let yv = f.y.0 + t * (f.y.1 - f.y.0);
        let _ = writeln!(out, r#"<text x="{:.1}" y="{:.1}" text-anchor="middle">{}</text>"#, f.px(xv), y0 + 16.0, tick(xv));
        let _ = writeln!(out, r#"<text x="{:.1}" y="{:.1}" text-anchor="end">{}</text>"#, x0 - 6.0, f.py(yv) + 4.0, tick(yv));
    }
    let _ = writeln!(out, r#"<text x="{:.1}" y="{:.1}" text-anchor="middle">{}</text>"#, (x0 + x1) / 2.0, H - 12.0, escape(xlabel));
    let _ = writeln!(
        out,
        r#"<text x="16" y="{:.1}" text-anchor="middle" transform="rotate(-90 16 {:.1})">{}</text>"#,
        (y0 + y1) / 2.0,
        (y0 + y1) / 2.0,
        escape(ylabel)
    );
}

fn tick(v: f64) -> String {
    if v.abs() >= 100.0 || v == v.trunc() {
        format!("{v:.0}")
    } else {
        format!("{v:.2}")
    }
}

fn legend(out: &mut String, names: &[&str]) {
    for (k, name) in names.iter().enumerate() {
        let y = TOP + 8.0 + 18.0 * k as f64;
        let x = W - RIGHT - 120.0;
        let _ = writeln!(out, r#"<rect x="{x}" y="{}" width="12" height="12" fill="{}" fill-opacity="0.6"/>"#, y - 10.0, COLORS[k % 2]);
        let _ = writeln!(out, r#"<text x="{}" y="{y}">{}</text>"#, x + 18.0, escape(name));
    }
}

/// Two count series over shared bin edges, drawn as translucent bars.
pub fn histogram(title: &str, xlabel: &str, edges: &[f64], series: &[(&str, &[usize])]) -> String {
    let max = series.iter().flat_map(|(_, c)| c.iter()).copied().max().unwrap_or(0).max(1) as f64;
    let f = Frame { x: (edges[0], edges[edges.len() - 1]), y: (0.0, max) };
    let mut out = String::new();
    open(&mut out, title);
    for (k, (_, counts)) in series.iter().enumerate() {
        let _ = writeln!(out, r#"<g fill="{}" fill-opacity="0.55">"#, COLORS[k % 2]);
        for (b, &c) in counts.iter().enumerate() {
            let (x0, x1) = (f.px(edges[b]), f.px(edges[b + 1]));
            let y = f.py(c as f64);
            let _ = writeln!(out, r#"<rect x="{x0:.2}" y="{y:.2}" width="{:.2}" height="{:.2}"/>"#, x1 - x0, f.py(0.0) - y);
        }
        let _ = writeln!(out, "</g>");
    }
    axes(&mut out, &f, xlabel, "count");
    legend(&mut out, &series.iter().map(|(n, _)| *n).collect::<Vec<_>>());
    out.push_str("</svg>\n");
    out
}

/// Points grouped by label; only the first two coordinates are drawn.
pub fn scatter(title: &str, groups: &[(&str, Vec<(f64, f64)>)]) -> String {
    let all: Vec<(f64, f64)> = groups.iter().flat_map(|(_, p)| p.iter().copied()).collect();
    let span = |sel: fn(&(f64, f64)) -> f64| {
        let lo = all.iter().map(sel).fold(f64::INFINITY, f64::min);
        let hi = all.iter().map(sel).fold(f64::NEG_INFINITY, f64::max);
        if !lo.is_finite() {
            (0.0, 1.0)
        } else if hi - lo < 1e-12 {
            (lo - 0.5, hi + 0.5)
        } else {
            let pad = 0.05 * (hi - lo);
            (lo - pad, hi + pad)
        }
    };
    let f = Frame { x: span(|p| p.0), y: span(|p| p.1) };
    let mut out = String::new();
    open(&mut out, title);
    for (k, (_, points)) in groups.iter().enumerate() {
        let _ = writeln!(out, r#"<g fill="{}" fill-opacity="0.6">"#, COLORS[k % 2]);
        for &(x, y) in points {
            let _ = writeln!(out, r#"<circle cx="{:.2}" cy="{:.2}" r="2.5"/>"#, f.px(x), f.py(y));
        }
        let _ = writeln!(out, "</g>");
    }
    axes(&mut out, &f, "PC1", "PC2");
    legend(&mut out, &groups.iter().map(|(n, _)| *n).collect::<Vec<_>>());
    out.push_str("</svg>\n");
    out
}
