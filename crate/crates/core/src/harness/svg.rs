//! Static two-panel log-log SVG: mean relative L2 error and mean relative
//! excess risk against n, one polyline per configuration.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;

use crate::error::{Error, Result};
use crate::risks::{Mode, RiskRecord};

const PANEL_W: f64 = 420.0;
const PANEL_H: f64 = 320.0;
const MARGIN_L: f64 = 70.0;
const MARGIN_R: f64 = 20.0;
const MARGIN_T: f64 = 40.0;
const MARGIN_B: f64 = 50.0;
const LEGEND_H: f64 = 24.0;
const COLORS: [&str; 8] = ["#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b", "#e377c2", "#17becf"];

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Metric {
    RelL2Error,
    RelExcessRisk,
}

impl Metric {
    fn label(self) -> &'static str {
        match self {
            Metric::RelL2Error => "relative L2 error",
            Metric::RelExcessRisk => "relative excess risk",
        }
    }

    /// Regression error is read from Gaussian-noise trials and excess risk
    /// from binary-label trials, falling back to the other mode.
    fn preferred(self) -> [Mode; 2] {
        match self {
            Metric::RelL2Error => [Mode::Gaussian, Mode::Binary],
            Metric::RelExcessRisk => [Mode::Binary, Mode::Gaussian],
        }
    }

    fn value(self, r: &RiskRecord) -> f64 {
        match self {
            Metric::RelL2Error => r.rel_l2_error,
            Metric::RelExcessRisk => r.rel_excess_risk,
        }
    }
}

/// `(n, mean)` points per config_id, positive means only.
pub type Series = BTreeMap<String, Vec<(f64, f64)>>;

pub fn panel_series(records: &[RiskRecord], metric: Metric) -> Series {
    let mut by_config: BTreeMap<&str, Vec<&RiskRecord>> = BTreeMap::new();
    for r in records {
        by_config.entry(r.config_id.as_str()).or_default().push(r);
    }
    let mut out = Series::new();
    for (id, recs) in by_config {
        let Some(mode) = metric.preferred().into_iter().find(|m| recs.iter().any(|r| r.mode == *m)) else {
            continue;
        };
        let mut by_n: BTreeMap<usize, (f64, usize)> = BTreeMap::new();
        for r in recs.iter().filter(|r| r.mode == mode) {
            let e = by_n.entry(r.n).or_insert((0.0, 0));
            e.0 += metric.value(r);
            e.1 += 1;
        }
        let pts: Vec<(f64, f64)> = by_n
            .into_iter()
            .map(|(n, (sum, k))| (n as f64, sum / k as f64))
            .filter(|(_, m)| *m > 0.0 && m.is_finite())
            .collect();
        if !pts.is_empty() {
            out.insert(id.to_string(), pts);
        }
    }
    out
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;").replace('"', "&quot;")
}

/// Decade-aligned log10 range covering `values`.
fn log_range(values: impl Iterator<Item = f64>) -> (f64, f64) {
    let (lo, hi) = values.fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| {
        (lo.min(v.log10()), hi.max(v.log10()))
    });
    let (mut lo, mut hi) = (lo.floor(), hi.ceil());
    if hi - lo < 1.0 {
        lo -= 0.5;
        hi += 0.5;
    }
    (lo, hi)
}

fn draw_panel(svg: &mut String, series: &Series, metric: Metric, x0: f64, color_of: &dyn Fn(&str) -> &'static str) {
    let plot_w = PANEL_W - MARGIN_L - MARGIN_R;
    let plot_h = PANEL_H - MARGIN_T - MARGIN_B;
    let (left, top) = (x0 + MARGIN_L, MARGIN_T);
    let pts = || series.values().flatten();
    let (xl, xh) = log_range(pts().map(|p| p.0));
    let (yl, yh) = log_range(pts().map(|p| p.1));
    let sx = |x: f64| left + (x.log10() - xl) / (xh - xl) * plot_w;
    let sy = |y: f64| top + (yh - y.log10()) / (yh - yl) * plot_h;

    let _ = writeln!(svg, r#"<g class="panel" data-metric="{}">"#, metric.label());
    let _ = writeln!(
        svg,
        r#"<rect x="{left:.2}" y="{top:.2}" width="{plot_w:.2}" height="{plot_h:.2}" fill="none" stroke="black"/>"#
    );
    for e in (xl.ceil() as i32)..=(xh.floor() as i32) {
        let x = sx(10f64.powi(e));
        let _ = writeln!(
            svg,
            r##"<line x1="{x:.2}" y1="{:.2}" x2="{x:.2}" y2="{:.2}" stroke="#ccc"/><text x="{x:.2}" y="{:.2}" font-size="11" text-anchor="middle">1e{e}</text>"##,
            top,
            top + plot_h,
            top + plot_h + 15.0
        );
    }
    for e in (yl.ceil() as i32)..=(yh.floor() as i32) {
        let y = sy(10f64.powi(e));
        let _ = writeln!(
            svg,
            r##"<line x1="{left:.2}" y1="{y:.2}" x2="{:.2}" y2="{y:.2}" stroke="#ccc"/><text x="{:.2}" y="{:.2}" font-size="11" text-anchor="end">1e{e}</text>"##,
            left + plot_w,
            left - 5.0,
            y + 4.0
        );
    }
    let _ = writeln!(
        svg,
        r#"<text x="{:.2}" y="{:.2}" font-size="13" text-anchor="middle">n</text>"#,
        left + plot_w / 2.0,
        top + plot_h + 35.0
    );
    let _ = writeln!(
        svg,
        r#"<text x="{:.2}" y="{:.2}" font-size="13" text-anchor="middle" transform="rotate(-90 {:.2} {:.2})">{}</text>"#,
        x0 + 18.0,
        top + plot_h / 2.0,
        x0 + 18.0,
        top + plot_h / 2.0,
        metric.label()
    );
    for (id, points) in series {
        let color = color_of(id);
        let path: Vec<String> = points.iter().map(|(n, m)| format!("{:.2},{:.2}", sx(*n), sy(*m))).collect();
        let _ = writeln!(
            svg,
            r#"<polyline class="series" data-config="{}" points="{}" fill="none" stroke="{color}" stroke-width="2"/>"#,
            escape(id),
            path.join(" ")
        );
        for (n, m) in points {
            let _ = writeln!(
                svg,
                r#"<circle class="marker" cx="{:.2}" cy="{:.2}" r="3.5" fill="{color}"/>"#,
                sx(*n),
                sy(*m)
            );
        }
    }
    let _ = writeln!(svg, "</g>");
}

pub fn render_svg(records: &[RiskRecord]) -> Result<String> {
    let l2 = panel_series(records, Metric::RelL2Error);
    let ex = panel_series(records, Metric::RelExcessRisk);
    if l2.is_empty() && ex.is_empty() {
        return Err(Error::EmptyResult);
    }
    let mut ids: Vec<&String> = l2.keys().chain(ex.keys()).collect();
    ids.sort();
    ids.dedup();
    let color_of = |id: &str| COLORS[ids.iter().position(|x| x.as_str() == id).unwrap_or(0) % COLORS.len()];
    let width = 2.0 * PANEL_W;
    let height = PANEL_H + LEGEND_H * ids.len() as f64 + 10.0;
    let mut svg = String::new();
    let _ = writeln!(
        svg,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" viewBox="0 0 {width} {height}" font-family="sans-serif">"#
    );
    let _ = writeln!(svg, r#"<rect width="100%" height="100%" fill="white"/>"#);
    // A panel without data keeps its slot but draws nothing.
    if !l2.is_empty() {
        draw_panel(&mut svg, &l2, Metric::RelL2Error, 0.0, &color_of);
    }
    if !ex.is_empty() {
        draw_panel(&mut svg, &ex, Metric::RelExcessRisk, PANEL_W, &color_of);
    }
    let _ = writeln!(svg, r#"<g class="legend">"#);
    for (i, id) in ids.iter().enumerate() {
        let color = color_of(id);
        let y = PANEL_H + LEGEND_H * i as f64 + 10.0;
        let _ = writeln!(
            svg,
            r#"<line x1="{MARGIN_L}" y1="{y:.2}" x2="{:.2}" y2="{y:.2}" stroke="{color}" stroke-width="2"/><text x="{:.2}" y="{:.2}" font-size="12">{}</text>"#,
            MARGIN_L + 30.0,
            MARGIN_L + 38.0,
            y + 4.0,
            escape(id)
        );
    }
    let _ = writeln!(svg, "</g>\n</svg>");
    Ok(svg)
}

pub fn emit_svg(records: &[RiskRecord], path: &Path) -> Result<()> {
    let svg = render_svg(records)?;
    std::fs::write(path, svg)?;
    Ok(())
}
