//! Minimal SVG writer: line plots (optionally log-scaled) and categorical
//! heat maps. Every coordinate is printed with two decimals, so identical
//! inputs give identical bytes.

use std::fmt::Write as _;

const W: f64 = 640.0;
const H: f64 = 420.0;
const MARGIN: f64 = 60.0;
const PALETTE: [&str; 8] = [
    "#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b", "#e377c2", "#17becf",
];

#[derive(Debug, Clone, PartialEq)]
pub struct Series {
    pub label: String,
    pub points: Vec<(f64, f64)>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LinePlot {
    pub title: String,
    pub x_label: String,
    pub y_label: String,
    pub log_x: bool,
    pub log_y: bool,
    pub series: Vec<Series>,
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

fn header(out: &mut String, title: &str, w: f64, h: f64) {
    let _ = writeln!(
        out,
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{w:.0}\" height=\"{h:.0}\" viewBox=\"0 0 {w:.0} {h:.0}\">"
    );
    let _ = writeln!(out, "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>");
    let _ = writeln!(
        out,
        "<text x=\"{:.2}\" y=\"24\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"16\">{}</text>",
        w / 2.0,
        escape(title)
    );
}

impl LinePlot {
    fn transform(&self, p: (f64, f64)) -> Option<(f64, f64)> {
        let x = if self.log_x {
            (p.0 > 0.0).then(|| p.0.log10())?
        } else {
            p.0
        };
        let y = if self.log_y {
            (p.1 > 0.0).then(|| p.1.log10())?
        } else {
            p.1
        };
        (x.is_finite() && y.is_finite()).then_some((x, y))
    }

    pub fn render(&self) -> String {
        let pts: Vec<Vec<(f64, f64)>> = self
            .series
            .iter()
            .map(|s| s.points.iter().filter_map(|p| self.transform(*p)).collect())
            .collect();
        let all = pts.iter().flatten();
        let (mut x0, mut x1, mut y0, mut y1) = (f64::INFINITY, f64::NEG_INFINITY, f64::INFINITY, f64::NEG_INFINITY);
        for (x, y) in all {
            x0 = x0.min(*x);
            x1 = x1.max(*x);
            y0 = y0.min(*y);
            y1 = y1.max(*y);
        }
        if !x0.is_finite() {
            (x0, x1, y0, y1) = (0.0, 1.0, 0.0, 1.0);
        }
        if x1 - x0 < 1e-12 {
            x1 = x0 + 1.0;
        }
        if y1 - y0 < 1e-12 {
            y1 = y0 + 1.0;
        }
        let sx = |x: f64| MARGIN + (x - x0) / (x1 - x0) * (W - 2.0 * MARGIN);
        let sy = |y: f64| H - MARGIN - (y - y0) / (y1 - y0) * (H - 2.0 * MARGIN);

        let mut out = String::new();
        header(&mut out, &self.title, W, H);
        let _ = writeln!(
            out,
            "<rect x=\"{MARGIN:.2}\" y=\"{MARGIN:.2}\" width=\"{:.2}\" height=\"{:.2}\" fill=\"none\" stroke=\"black\"/>",
            W - 2.0 * MARGIN,
            H - 2.0 * MARGIN
        );
        let tick = |v: f64, log: bool| if log { format!("1e{v:.1}") } else { format!("{v:.3}") };
        for frac in [0.0, 0.5, 1.0] {
            let xv = x0 + frac * (x1 - x0);
            let yv = y0 + frac * (y1 - y0);
            let _ = writeln!(
                out,
                "<text x=\"{:.2}\" y=\"{:.2}\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"11\">{}</text>",
                sx(xv),
                H - MARGIN + 16.0,
                tick(xv, self.log_x)
            );
            let _ = writeln!(
                out,
                "<text x=\"{:.2}\" y=\"{:.2}\" text-anchor=\"end\" font-family=\"sans-serif\" font-size=\"11\">{}</text>",
                MARGIN - 4.0,
                sy(yv) + 4.0,
                tick(yv, self.log_y)
            );
        }
        let _ = writeln!(
            out,
            "<text x=\"{:.2}\" y=\"{:.2}\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"12\">{}</text>",
            W / 2.0,
            H - 16.0,
            escape(&self.x_label)
        );
        let _ = writeln!(
            out,
            "<text x=\"16\" y=\"{:.2}\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"12\" transform=\"rotate(-90 16 {:.2})\">{}</text>",
            H / 2.0,
            H / 2.0,
            escape(&self.y_label)
        );
        for (k, (s, p)) in self.series.iter().zip(&pts).enumerate() {
            let colour = PALETTE[k % PALETTE.len()];
            if !p.is_empty() {
                let coords: Vec<String> = p.iter().map(|(x, y)| format!("{:.2},{:.2}", sx(*x), sy(*y))).collect();
                let _ = writeln!(
                    out,
                    "<polyline fill=\"none\" stroke=\"{colour}\" stroke-width=\"1.5\" points=\"{}\"/>",
                    coords.join(" ")
                );
            }
            let ly = MARGIN + 14.0 + 16.0 * k as f64;
            let _ = writeln!(
                out,
                "<text x=\"{:.2}\" y=\"{ly:.2}\" text-anchor=\"end\" font-family=\"sans-serif\" font-size=\"11\" fill=\"{colour}\">{}</text>",
                W - MARGIN - 6.0,
                escape(&s.label)
            );
        }
        out.push_str("</svg>\n");
        out
    }
}

/// Grid of cells; `None` cells are left blank.
#[derive(Debug, Clone, PartialEq)]
pub struct HeatMap {
    pub title: String,
    pub x_label: String,
    pub y_label: String,
    pub cols: usize,
    pub rows: usize,
    /// Row-major, row 0 drawn at the bottom.
    pub cells: Vec<Option<f64>>,
    /// Show cell values as integers (control maps) instead of decimals.
    pub categorical: bool,
}

impl HeatMap {
    pub fn render(&self) -> String {
        let cell = 36.0;
        let w = 2.0 * MARGIN + cell * self.cols as f64;
        let h = 2.0 * MARGIN + cell * self.rows as f64;
        let finite = self.cells.iter().flatten().filter(|v| v.is_finite());
        let (lo, hi) = finite.fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), v| (a.min(*v), b.max(*v)));
        let span = if hi > lo { hi - lo } else { 1.0 };
        let mut out = String::new();
        header(&mut out, &self.title, w, h);
        for r in 0..self.rows {
            for c in 0..self.cols {
                let Some(v) = self.cells[r * self.cols + c] else {
                    continue;
                };
                let t = if v.is_finite() { (v - lo) / span } else { 0.0 };
                let shade = (255.0 - 180.0 * t).round() as u8;
                let x = MARGIN + cell * c as f64;
                let y = h - MARGIN - cell * (r + 1) as f64;
                let _ = writeln!(
                    out,
                    "<rect x=\"{x:.2}\" y=\"{y:.2}\" width=\"{cell:.2}\" height=\"{cell:.2}\" fill=\"rgb({shade},{shade},255)\" stroke=\"grey\"/>"
                );
                let label = if self.categorical {
                    format!("{v:.0}")
                } else {
                    format!("{v:.2}")
                };
                let _ = writeln!(
                    out,
                    "<text x=\"{:.2}\" y=\"{:.2}\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"10\">{label}</text>",
                    x + cell / 2.0,
                    y + cell / 2.0 + 4.0
                );
            }
        }
        for c in 0..self.cols {
            let _ = writeln!(
                out,
                "<text x=\"{:.2}\" y=\"{:.2}\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"11\">{c}</text>",
                MARGIN + cell * (c as f64 + 0.5),
                h - MARGIN + 16.0
            );
        }
        for r in 0..self.rows {
            let _ = writeln!(
                out,
                "<text x=\"{:.2}\" y=\"{:.2}\" text-anchor=\"end\" font-family=\"sans-serif\" font-size=\"11\">{r}</text>",
                MARGIN - 6.0,
                h - MARGIN - cell * (r as f64 + 0.5) + 4.0
            );
        }
        let _ = writeln!(
            out,
            "<text x=\"{:.2}\" y=\"{:.2}\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"12\">{}</text>",
            w / 2.0,
            h - 20.0,
            escape(&self.x_label)
        );
        let _ = writeln!(
            out,
            "<text x=\"18\" y=\"{:.2}\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"12\" transform=\"rotate(-90 18 {:.2})\">{}</text>",
            h / 2.0,
            h / 2.0,
            escape(&self.y_label)
        );
        out.push_str("</svg>\n");
        out
    }
}
