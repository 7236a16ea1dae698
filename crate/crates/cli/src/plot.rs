//! Standalone SVG boxplots and bar charts. Numbers are printed with fixed
//! precision so the same data always renders to the same bytes.

use std::fmt::Write;

use serde::Serialize;

/// Tukey boxplot statistics; quartiles use linear interpolation between
/// order statistics.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BoxStats {
    pub n: usize,
    pub median: f64,
    pub q1: f64,
    pub q3: f64,
    pub whisker_low: f64,
    pub whisker_high: f64,
    pub outliers: Vec<f64>,
}

pub fn quantile(sorted: &[f64], q: f64) -> f64 {
    let h = (sorted.len() - 1) as f64 * q;
    let lo = h.floor() as usize;
    let hi = h.ceil() as usize;
    sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
}

impl BoxStats {
    pub fn new(values: &[f64]) -> Option<Self> {
        if values.is_empty() {
            return None;
        }
        let mut v = values.to_vec();
        v.sort_by(f64::total_cmp);
        let (q1, q3) = (quantile(&v, 0.25), quantile(&v, 0.75));
        let iqr = q3 - q1;
        let (lo_fence, hi_fence) = (q1 - 1.5 * iqr, q3 + 1.5 * iqr);
        let inside: Vec<f64> = v.iter().copied().filter(|x| *x >= lo_fence && *x <= hi_fence).collect();
        Some(Self {
            n: v.len(),
            median: smellprop_core::psc::median(&v),
            q1,
            q3,
            whisker_low: inside.first().copied().unwrap_or(q1),
            whisker_high: inside.last().copied().unwrap_or(q3),
            outliers: v.iter().copied().filter(|x| *x < lo_fence || *x > hi_fence).collect(),
        })
    }
}

pub struct Panel<'a> {
    pub title: &'a str,
    pub boxes: Vec<(&'a str, Option<BoxStats>)>,
}

const PANEL_W: f64 = 220.0;
const PLOT_TOP: f64 = 40.0;
const PLOT_H: f64 = 240.0;
const MARGIN_L: f64 = 50.0;

fn esc(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

/// Boxplots on a shared `[0, 1]` axis, one panel per title.
pub fn boxplot_svg(title: &str, panels: &[Panel<'_>], threshold: Option<f64>) -> String {
    let width = MARGIN_L + PANEL_W * panels.len().max(1) as f64 + 20.0;
    let height = PLOT_TOP + PLOT_H + 60.0;
    let y = |v: f64| PLOT_TOP + PLOT_H * (1.0 - v.clamp(0.0, 1.0));
    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{width:.0}" height="{height:.0}" viewBox="0 0 {width:.0} {height:.0}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(s, r#"<title>{}</title>"#, esc(title));
    let _ = writeln!(s, r#"<text x="{:.1}" y="20" text-anchor="middle" font-size="14">{}</text>"#, width / 2.0, esc(title));
    for t in 0..=4 {
        let v = t as f64 / 4.0;
        let _ = writeln!(
            s,
            r##"<line x1="{MARGIN_L:.1}" x2="{:.1}" y1="{:.1}" y2="{:.1}" stroke="#ddd"/><text x="{:.1}" y="{:.1}" text-anchor="end">{v:.2}</text>"##,
            width - 20.0,
            y(v),
            y(v),
            MARGIN_L - 6.0,
            y(v) + 4.0
        );
    }
    if let Some(t) = threshold {
        let _ = writeln!(
            s,
            r##"<line class="threshold" x1="{MARGIN_L:.1}" x2="{:.1}" y1="{:.1}" y2="{:.1}" stroke="#c00" stroke-dasharray="4 3"/>"##,
            width - 20.0,
            y(t),
            y(t)
        );
    }
    for (p, panel) in panels.iter().enumerate() {
        let x0 = MARGIN_L + PANEL_W * p as f64;
        let _ = writeln!(
            s,
            r#"<g class="panel"><text x="{:.1}" y="{:.1}" text-anchor="middle" font-weight="bold">{}</text>"#,
            x0 + PANEL_W / 2.0,
            PLOT_TOP + PLOT_H + 40.0,
            esc(panel.title)
        );
        let slot = PANEL_W / panel.boxes.len().max(1) as f64;
        for (b, (label, stats)) in panel.boxes.iter().enumerate() {
            let cx = x0 + slot * (b as f64 + 0.5);
            let _ = writeln!(
                s,
                r#"<text x="{cx:.1}" y="{:.1}" text-anchor="middle">{}</text>"#,
                PLOT_TOP + PLOT_H + 18.0,
                esc(label)
            );
            let Some(st) = stats else { continue };
            let half = (slot * 0.3).min(30.0);
            let _ = writeln!(
                s,
                r##"<g class="box"><line x1="{cx:.1}" x2="{cx:.1}" y1="{:.1}" y2="{:.1}" stroke="#333"/><line x1="{cx:.1}" x2="{cx:.1}" y1="{:.1}" y2="{:.1}" stroke="#333"/><rect x="{:.1}" y="{:.1}" width="{:.1}" height="{:.1}" fill="#9ecae1" stroke="#333"/><line x1="{:.1}" x2="{:.1}" y1="{:.1}" y2="{:.1}" stroke="#000" stroke-width="2"/></g>"##,
                y(st.whisker_high),
                y(st.q3),
                y(st.q1),
                y(st.whisker_low),
                cx - half,
                y(st.q3),
                2.0 * half,
                (y(st.q1) - y(st.q3)).max(0.5),
                cx - half,
                cx + half,
                y(st.median),
                y(st.median)
            );
            for o in &st.outliers {
                let _ = writeln!(s, r##"<circle cx="{cx:.1}" cy="{:.1}" r="2.5" fill="none" stroke="#333"/>"##, y(*o));
            }
        }
        let _ = writeln!(s, "</g>");
    }
    s.push_str("</svg>\n");
    s
}

/// Vertical bars, one per (label, value), scaled to the largest value.
pub fn bar_chart_svg(title: &str, bars: &[(String, f64)]) -> String {
    let width = MARGIN_L + 40.0 * bars.len().max(1) as f64 + 20.0;
    let height = PLOT_TOP + PLOT_H + 90.0;
    let top = bars.iter().map(|b| b.1).fold(0.0f64, f64::max).max(1e-12);
    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{width:.0}" height="{height:.0}" viewBox="0 0 {width:.0} {height:.0}" font-family="sans-serif" font-size="11">"#
    );
    let _ = writeln!(s, r#"<title>{}</title>"#, esc(title));
    let _ = writeln!(s, r#"<text x="{:.1}" y="20" text-anchor="middle" font-size="14">{}</text>"#, width / 2.0, esc(title));
    for (k, (label, v)) in bars.iter().enumerate() {
        let h = PLOT_H * (v.max(0.0) / top);
        let x = MARGIN_L + 40.0 * k as f64 + 8.0;
        let _ = writeln!(
            s,
            r##"<g class="bar"><rect x="{x:.1}" y="{:.1}" width="24.0" height="{h:.1}" fill="#6baed6"/><text x="{:.1}" y="{:.1}" text-anchor="middle">{v:.3}</text><text transform="translate({:.1},{:.1}) rotate(60)">{}</text></g>"##,
            PLOT_TOP + PLOT_H - h,
            x + 12.0,
            PLOT_TOP + PLOT_H - h - 4.0,
            x + 8.0,
            PLOT_TOP + PLOT_H + 10.0,
            esc(label)
        );
    }
    s.push_str("</svg>\n");
    s
}
