//! Static log-log convergence plots as SVG 1.1.
//!
//! Both axes use the same number of pixels per decade, so a slope read off
//! the drawing equals the convergence order.

use std::fmt::Write as _;

use quadfem::experiments::ConvergenceReport;

const WIDTH: f64 = 640.0;
const HEIGHT: f64 = 480.0;
const MARGIN_LEFT: f64 = 80.0;
const MARGIN_RIGHT: f64 = 150.0;
const MARGIN_TOP: f64 = 40.0;
const MARGIN_BOTTOM: f64 = 60.0;
const COLORS: [&str; 5] = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e"];

struct Axes {
    x0: f64,
    y0: f64,
    /// Pixels per decade on both axes.
    ppd: f64,
    lx_min: f64,
    ly_min: f64,
}

impl Axes {
    fn px(&self, h: f64) -> f64 {
        self.x0 + (h.log10() - self.lx_min) * self.ppd
    }

    fn py(&self, e: f64) -> f64 {
        self.y0 - (e.log10() - self.ly_min) * self.ppd
    }
}

fn fmt_num(v: f64) -> String {
    format!("{v:.2}")
}

/// Renders the report; `None` when fewer than two rows or no positive errors.
pub fn render_svg(report: &ConvergenceReport) -> Option<String> {
    if report.rows.len() < 2 {
        return None;
    }
    let hs = report.hs();
    let errs: Vec<f64> = report
        .rows
        .iter()
        .flat_map(|r| r.errors.iter().copied())
        .filter(|e| *e > 0.0 && e.is_finite())
        .collect();
    if errs.is_empty() {
        return None;
    }
    let lx_min = hs.iter().fold(f64::INFINITY, |m, h| m.min(h.log10())).floor();
    let lx_max = hs.iter().fold(f64::NEG_INFINITY, |m, h| m.max(h.log10())).ceil();
    let ly_min = errs.iter().fold(f64::INFINITY, |m, e| m.min(e.log10())).floor();
    let ly_max = errs.iter().fold(f64::NEG_INFINITY, |m, e| m.max(e.log10())).ceil();
    let plot_w = WIDTH - MARGIN_LEFT - MARGIN_RIGHT;
    let plot_h = HEIGHT - MARGIN_TOP - MARGIN_BOTTOM;
    let ppd = (plot_w / (lx_max - lx_min).max(1.0)).min(plot_h / (ly_max - ly_min).max(1.0));
    let ax = Axes {
        x0: MARGIN_LEFT,
        y0: MARGIN_TOP + plot_h,
        ppd,
        lx_min,
        ly_min,
    };
    let right = ax.x0 + (lx_max - lx_min) * ppd;
    let top = ax.y0 - (ly_max - ly_min) * ppd;

    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<?xml version="1.0" encoding="UTF-8"?>
<svg xmlns="http://www.w3.org/2000/svg" version="1.1" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}">
<rect width="100%" height="100%" fill="white"/>
<text x="{}" y="22" font-family="sans-serif" font-size="14" text-anchor="middle">{} ({})</text>"#,
        WIDTH / 2.0,
        report.experiment,
        report.element
    );
    let _ = writeln!(
        s,
        r#"<rect id="frame" x="{}" y="{}" width="{}" height="{}" fill="none" stroke="black"/>"#,
        fmt_num(ax.x0),
        fmt_num(top),
        fmt_num(right - ax.x0),
        fmt_num(ax.y0 - top)
    );
    for d in lx_min as i32..=lx_max as i32 {
        let x = ax.x0 + (d as f64 - lx_min) * ppd;
        let _ = writeln!(
            s,
            r#"<line x1="{0}" y1="{1}" x2="{0}" y2="{2}" stroke="black"/><text x="{0}" y="{3}" font-family="sans-serif" font-size="12" text-anchor="middle">1e{d}</text>"#,
            fmt_num(x),
            fmt_num(ax.y0),
            fmt_num(ax.y0 + 5.0),
            fmt_num(ax.y0 + 20.0)
        );
    }
    for d in ly_min as i32..=ly_max as i32 {
        let y = ax.y0 - (d as f64 - ly_min) * ppd;
        let _ = writeln!(
            s,
            r#"<line x1="{0}" y1="{1}" x2="{2}" y2="{1}" stroke="black"/><text x="{3}" y="{4}" font-family="sans-serif" font-size="12" text-anchor="end">1e{d}</text>"#,
            fmt_num(ax.x0 - 5.0),
            fmt_num(y),
            fmt_num(ax.x0),
            fmt_num(ax.x0 - 8.0),
            fmt_num(y + 4.0)
        );
    }
    let _ = writeln!(
        s,
        r#"<text x="{}" y="{}" font-family="sans-serif" font-size="12" text-anchor="middle">h</text>"#,
        fmt_num((ax.x0 + right) / 2.0),
        fmt_num(HEIGHT - 15.0)
    );
    let _ = writeln!(
        s,
        r#"<text x="20" y="{}" font-family="sans-serif" font-size="12" text-anchor="middle" transform="rotate(-90 20 {})">error</text>"#,
        fmt_num((top + ax.y0) / 2.0),
        fmt_num((top + ax.y0) / 2.0)
    );

    for (k, name) in report.norms.iter().enumerate() {
        let color = COLORS[k % COLORS.len()];
        let pts: Vec<String> = report
            .rows
            .iter()
            .filter(|r| r.errors[k] > 0.0 && r.errors[k].is_finite())
            .map(|r| format!("{},{}", fmt_num(ax.px(r.h)), fmt_num(ax.py(r.errors[k]))))
            .collect();
        let _ = writeln!(
            s,
            r#"<polyline id="norm-{name}" points="{}" fill="none" stroke="{color}" stroke-width="2"/>"#,
            pts.join(" ")
        );
        let ly = top + 16.0 + 18.0 * k as f64;
        let _ = writeln!(
            s,
            r#"<line x1="{0}" y1="{1}" x2="{2}" y2="{1}" stroke="{color}" stroke-width="2"/><text x="{3}" y="{4}" font-family="sans-serif" font-size="12">{name}</text>"#,
            fmt_num(right + 15.0),
            fmt_num(ly),
            fmt_num(right + 40.0),
            fmt_num(right + 45.0),
            fmt_num(ly + 4.0)
        );
    }

    // reference slopes below the finest point of the first norm
    let last = report.rows.last().expect("at least two rows");
    let (bx, by) = (ax.px(last.h), ax.py(last.errors[0]) + 0.3 * ppd);
    let run = 0.3 * ppd;
    for (i, order) in [1.0f64, 2.0].iter().enumerate() {
        let x0 = bx + 10.0 + i as f64 * (run + 20.0);
        let (x1, y0) = (x0 + run, by + 20.0);
        let y1 = y0 - order * run;
        let _ = writeln!(
            s,
            r#"<polygon id="ref-order-{order}" points="{},{} {},{} {},{}" fill="none" stroke="gray" stroke-dasharray="4 2"/><text x="{}" y="{}" font-family="sans-serif" font-size="11" fill="gray">{order}</text>"#,
            fmt_num(x0),
            fmt_num(y0),
            fmt_num(x1),
            fmt_num(y1),
            fmt_num(x1),
            fmt_num(y0),
            fmt_num(x1 + 3.0),
            fmt_num((y0 + y1) / 2.0)
        );
    }
    s.push_str("</svg>\n");
    Some(s)
}
