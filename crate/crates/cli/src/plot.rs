//! Minimal SVG box plots: one panel per metric, one box per strategy.

use std::fmt::Write;

use replan_core::executor::quartiles;

pub struct Panel {
    pub title: String,
    /// Fixed axis range; derived from the data when `None`.
    pub range: Option<(f64, f64)>,
    pub groups: Vec<(String, Vec<f64>)>,
}

const PANEL_W: f64 = 360.0;
const PANEL_H: f64 = 300.0;
const MARGIN_L: f64 = 56.0;
const MARGIN_T: f64 = 48.0;
const MARGIN_B: f64 = 40.0;

fn data_range(groups: &[(String, Vec<f64>)]) -> (f64, f64) {
    let all = groups.iter().flat_map(|(_, v)| v.iter().copied()).filter(|x| x.is_finite());
    let (lo, hi) = all.fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), x| (a.min(x), b.max(x)));
    if !lo.is_finite() {
        return (0.0, 1.0);
    }
    let pad = ((hi - lo) * 0.08).max(1e-3);
    (lo - pad, hi + pad)
}

pub fn box_plot_svg(title: &str, panels: &[Panel]) -> String {
    let width = MARGIN_L + panels.len() as f64 * (PANEL_W + MARGIN_L);
    let height = MARGIN_T + PANEL_H + MARGIN_B;
    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{width:.0}" height="{height:.0}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(s, r#"<rect width="100%" height="100%" fill="white"/>"#);
    let _ = writeln!(s, r#"<text x="{:.1}" y="20" text-anchor="middle" font-size="15">{}</text>"#, width / 2.0, escape(title));
    for (i, p) in panels.iter().enumerate() {
        let x0 = MARGIN_L + i as f64 * (PANEL_W + MARGIN_L);
        draw_panel(&mut s, p, x0, MARGIN_T);
    }
    s.push_str("</svg>\n");
    s
}

fn draw_panel(s: &mut String, p: &Panel, x0: f64, y0: f64) {
    let (lo, hi) = p.range.unwrap_or_else(|| data_range(&p.groups));
    let y = |v: f64| y0 + PANEL_H * (1.0 - (v.clamp(lo, hi) - lo) / (hi - lo));
    let _ = writeln!(s, r#"<rect x="{x0:.1}" y="{y0:.1}" width="{PANEL_W:.1}" height="{PANEL_H:.1}" fill="none" stroke="black"/>"#);
    let _ = writeln!(s, r#"<text x="{:.1}" y="{:.1}" text-anchor="middle">{}</text>"#, x0 + PANEL_W / 2.0, y0 - 8.0, escape(&p.title));
    for k in 0..=4 {
        let v = lo + (hi - lo) * k as f64 / 4.0;
        let yy = y(v);
        let _ = writeln!(s, r##"<line x1="{x0:.1}" y1="{yy:.1}" x2="{:.1}" y2="{yy:.1}" stroke="#ddd"/>"##, x0 + PANEL_W);
        let _ = writeln!(s, r#"<text x="{:.1}" y="{:.1}" text-anchor="end">{v:.3}</text>"#, x0 - 4.0, yy + 4.0);
    }
    let n = p.groups.len().max(1) as f64;
    let slot = PANEL_W / n;
    for (j, (name, values)) in p.groups.iter().enumerate() {
        let cx = x0 + slot * (j as f64 + 0.5);
        let half = (slot * 0.3).min(30.0);
        let _ = writeln!(s, r#"<text x="{cx:.1}" y="{:.1}" text-anchor="middle">{}</text>"#, y0 + PANEL_H + 18.0, escape(name));
        let finite: Vec<f64> = values.iter().copied().filter(|x| x.is_finite()).collect();
        let Some([q1, med, q3]) = quartiles(&finite) else { continue };
        let min = finite.iter().copied().fold(f64::INFINITY, f64::min);
        let max = finite.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let mean = finite.iter().sum::<f64>() / finite.len() as f64;
        let _ = writeln!(s, r#"<line x1="{cx:.1}" y1="{:.1}" x2="{cx:.1}" y2="{:.1}" stroke="black"/>"#, y(min), y(q1));
        let _ = writeln!(s, r#"<line x1="{cx:.1}" y1="{:.1}" x2="{cx:.1}" y2="{:.1}" stroke="black"/>"#, y(q3), y(max));
        for v in [min, max] {
            let _ = writeln!(s, r#"<line x1="{:.1}" y1="{:.1}" x2="{:.1}" y2="{:.1}" stroke="black"/>"#, cx - half / 2.0, y(v), cx + half / 2.0, y(v));
        }
        let _ = writeln!(
            s,
            r##"<rect x="{:.1}" y="{:.1}" width="{:.1}" height="{:.1}" fill="#9ecae1" stroke="black"/>"##,
            cx - half,
            y(q3),
            2.0 * half,
            (y(q1) - y(q3)).max(0.5)
        );
        let _ = writeln!(s, r#"<line x1="{:.1}" y1="{:.1}" x2="{:.1}" y2="{:.1}" stroke="black" stroke-width="2"/>"#, cx - half, y(med), cx + half, y(med));
        let _ = writeln!(s, r#"<circle cx="{cx:.1}" cy="{:.1}" r="3" fill="red"/>"#, y(mean));
    }
}

fn escape(t: &str) -> String {
    t.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}
