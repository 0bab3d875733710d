use std::fmt::Write;

use crate::simulation::{ShapiroSummary, SimSummary};

const PANEL_W: f64 = 420.0;
const PANEL_H: f64 = 300.0;
const MARGIN_L: f64 = 56.0;
const MARGIN_R: f64 = 16.0;
const MARGIN_T: f64 = 32.0;
const MARGIN_B: f64 = 44.0;
const COLORS: [&str; 8] = [
    "#1b9e77", "#d95f02", "#7570b3", "#e7298a", "#66a61e", "#e6ab02", "#a6761d", "#666666",
];

/// Plot area of one panel, mapping data coordinates to pixels.
struct Frame {
    x0: f64,
    y0: f64,
    xmin: f64,
    xmax: f64,
    ymin: f64,
    ymax: f64,
}

impl Frame {
    fn new(x0: f64, y0: f64, (xmin, xmax): (f64, f64), (ymin, ymax): (f64, f64)) -> Self {
        let (xmin, xmax) = if xmax > xmin { (xmin, xmax) } else { (xmin - 0.5, xmax + 0.5) };
        let (ymin, ymax) = if ymax > ymin { (ymin, ymax) } else { (ymin - 0.5, ymax + 0.5) };
        Frame { x0, y0, xmin, xmax, ymin, ymax }
    }

    fn width() -> f64 {
        PANEL_W - MARGIN_L - MARGIN_R
    }

    fn height() -> f64 {
        PANEL_H - MARGIN_T - MARGIN_B
    }

    fn px(&self, x: f64) -> f64 {
        self.x0 + MARGIN_L + (x - self.xmin) / (self.xmax - self.xmin) * Self::width()
    }

    fn py(&self, y: f64) -> f64 {
        self.y0 + MARGIN_T + (1.0 - (y - self.ymin) / (self.ymax - self.ymin)) * Self::height()
    }

    fn axes(&self, out: &mut String, title: &str, xlabel: &str, ylabel: &str) {
        let (l, r) = (self.px(self.xmin), self.px(self.xmax));
        let (b, t) = (self.py(self.ymin), self.py(self.ymax));
        let _ = writeln!(
            out,
            r##"<rect x="{l:.2}" y="{t:.2}" width="{:.2}" height="{:.2}" fill="none" stroke="#000"/>"##,
            r - l,
            b - t
        );
        let _ = writeln!(
            out,
            r##"<text x="{:.2}" y="{:.2}" text-anchor="middle" font-size="14">{title}</text>"##,
            (l + r) / 2.0,
            self.y0 + 20.0
        );
        let _ = writeln!(
            out,
            r##"<text x="{:.2}" y="{:.2}" text-anchor="middle" font-size="12">{xlabel}</text>"##,
            (l + r) / 2.0,
            self.y0 + PANEL_H - 8.0
        );
        let _ = writeln!(
            out,
            r##"<text x="{:.2}" y="{:.2}" text-anchor="middle" font-size="12" transform="rotate(-90 {:.2} {:.2})">{ylabel}</text>"##,
            self.x0 + 14.0,
            (t + b) / 2.0,
            self.x0 + 14.0,
            (t + b) / 2.0
        );
    }

    fn x_tick(&self, out: &mut String, x: f64, label: &str) {
        let (px, b) = (self.px(x), self.py(self.ymin));
        let _ = writeln!(out, r##"<line x1="{px:.2}" y1="{b:.2}" x2="{px:.2}" y2="{:.2}" stroke="#000"/>"##, b + 4.0);
        let _ = writeln!(
            out,
            r##"<text x="{px:.2}" y="{:.2}" text-anchor="middle" font-size="10">{label}</text>"##,
            b + 16.0
        );
    }

    fn y_tick(&self, out: &mut String, y: f64, label: &str) {
        let (l, py) = (self.px(self.xmin), self.py(y));
        let _ = writeln!(out, r##"<line x1="{:.2}" y1="{py:.2}" x2="{l:.2}" y2="{py:.2}" stroke="#000"/>"##, l - 4.0);
        let _ = writeln!(
            out,
            r##"<text x="{:.2}" y="{:.2}" text-anchor="end" font-size="10">{label}</text>"##,
            l - 6.0,
            py + 3.0
        );
    }
}

fn open(out: &mut String, w: f64, h: f64) {
    let _ = writeln!(
        out,
        r##"<svg xmlns="http://www.w3.org/2000/svg" width="{w:.0}" height="{h:.0}" viewBox="0 0 {w:.0} {h:.0}" font-family="sans-serif">"##
    );
    let _ = writeln!(out, r##"<rect width="{w:.0}" height="{h:.0}" fill="#fff"/>"##);
}

/// Two panels (admissibility, convergence) over log10 n, one series per δ,
/// with ±2 SE error bars.
pub fn figure3_svg(summary: &SimSummary) -> String {
    let mut deltas: Vec<f64> = Vec::new();
    let mut logn: Vec<f64> = Vec::new();
    for c in &summary.conditions {
        if !deltas.contains(&c.condition.delta) {
            deltas.push(c.condition.delta);
        }
        let x = (c.condition.n as f64).log10();
        if !logn.contains(&x) {
            logn.push(x);
        }
    }
    let xmin = logn.iter().copied().fold(f64::INFINITY, f64::min).floor();
    let xmax = logn.iter().copied().fold(f64::NEG_INFINITY, f64::max).ceil();
    let legend_h = 18.0 * deltas.len() as f64 + 16.0;
    let mut out = String::new();
    open(&mut out, 2.0 * PANEL_W, PANEL_H + legend_h);
    let panels: [(&str, fn(&crate::simulation::ConditionSummary) -> (f64, f64)); 2] = [
        ("Admissible", |c| (c.prop_admissible, c.se_admissible)),
        ("Converged", |c| (c.prop_converged, c.se_converged)),
    ];
    for (k, (title, get)) in panels.iter().enumerate() {
        let f = Frame::new(k as f64 * PANEL_W, 0.0, (xmin, xmax), (0.0, 1.0));
        f.axes(&mut out, &format!("Proportion {}", title.to_lowercase()), "log10 n", "proportion");
        let mut e = xmin as i64;
        while e as f64 <= xmax {
            f.x_tick(&mut out, e as f64, &e.to_string());
            e += 1;
        }
        for t in 0..=4 {
            let y = t as f64 / 4.0;
            f.y_tick(&mut out, y, &format!("{y}"));
        }
        for (d, &delta) in deltas.iter().enumerate() {
            let color = COLORS[d % COLORS.len()];
            let mut pts: Vec<(f64, f64, f64)> = summary
                .conditions
                .iter()
                .filter(|c| c.condition.delta == delta)
                .map(|c| {
                    let (p, se) = get(c);
                    ((c.condition.n as f64).log10(), p, se)
                })
                .collect();
            pts.sort_by(|a, b| a.0.total_cmp(&b.0));
            let path: Vec<String> = pts.iter().map(|&(x, y, _)| format!("{:.2},{:.2}", f.px(x), f.py(y))).collect();
            let _ = writeln!(
                out,
                r##"<polyline points="{}" fill="none" stroke="{color}" stroke-width="1.5"/>"##,
                path.join(" ")
            );
            for &(x, y, se) in &pts {
                let (px, py) = (f.px(x), f.py(y));
                let lo = f.py((y - 2.0 * se).max(0.0));
                let hi = f.py((y + 2.0 * se).min(1.0));
                let _ = writeln!(
                    out,
                    r##"<line x1="{px:.2}" y1="{lo:.2}" x2="{px:.2}" y2="{hi:.2}" stroke="{color}"/>"##
                );
                let _ = writeln!(out, r##"<circle cx="{px:.2}" cy="{py:.2}" r="3" fill="{color}"/>"##);
            }
        }
    }
    for (d, &delta) in deltas.iter().enumerate() {
        let y = PANEL_H + 12.0 + 18.0 * d as f64;
        let color = COLORS[d % COLORS.len()];
        let _ = writeln!(
            out,
            r##"<line x1="{:.2}" y1="{y:.2}" x2="{:.2}" y2="{y:.2}" stroke="{color}" stroke-width="2"/>"##,
            MARGIN_L,
            MARGIN_L + 24.0
        );
        let _ = writeln!(
            out,
            r##"<text x="{:.2}" y="{:.2}" font-size="11">δ = {delta}</text>"##,
            MARGIN_L + 30.0,
            y + 4.0
        );
    }
    out.push_str("</svg>\n");
    out
}

/// One histogram panel of ψ̂3 per sample size, with a marker at zero.
pub fn figure2_svg(summaries: &[ShapiroSummary]) -> String {
    let mut out = String::new();
    open(&mut out, PANEL_W, PANEL_H * summaries.len().max(1) as f64);
    for (k, s) in summaries.iter().enumerate() {
        let lo = s.histogram.first().map(|h| h.0).unwrap_or(-1.0).min(0.0);
        let hi = s.histogram.last().map(|h| h.1).unwrap_or(1.0).max(0.0);
        let top = s.histogram.iter().map(|h| h.2).max().unwrap_or(1).max(1) as f64;
        let f = Frame::new(0.0, k as f64 * PANEL_H, (lo, hi), (0.0, top));
        f.axes(
            &mut out,
            &format!("n = {}: {:.1}% of estimates below zero", s.n, 100.0 * s.fraction_negative),
            "estimate of psi3",
            "count",
        );
        for x in [lo, 0.0, hi] {
            f.x_tick(&mut out, x, &format!("{x:.3}"));
        }
        f.y_tick(&mut out, 0.0, "0");
        f.y_tick(&mut out, top, &format!("{top}"));
        for &(a, b, c) in &s.histogram {
            let (x1, x2) = (f.px(a), f.px(b));
            let (y1, y2) = (f.py(c as f64), f.py(0.0));
            let fill = if b <= 0.0 { "#d95f02" } else { "#7570b3" };
            let _ = writeln!(
                out,
                r##"<rect x="{x1:.2}" y="{y1:.2}" width="{:.2}" height="{:.2}" fill="{fill}" stroke="#fff" stroke-width="0.5"/>"##,
                (x2 - x1).max(0.0),
                (y2 - y1).max(0.0)
            );
        }
        let z = f.px(0.0);
        let _ = writeln!(
            out,
            r##"<line x1="{z:.2}" y1="{:.2}" x2="{z:.2}" y2="{:.2}" stroke="#000" stroke-dasharray="4 3"/>"##,
            f.py(0.0),
            f.py(top)
        );
    }
    out.push_str("</svg>\n");
    out
}
