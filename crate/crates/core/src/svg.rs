//! Minimal SVG plots: constraint boxes, level curves, trajectories and a
//! legend on one pair of axes.
//!
//! Output depends only on the inputs, so rendering the same plot twice
//! gives identical bytes.

use std::fmt::Write as _;

use crate::geometry::Polyline;

const WIDTH: f64 = 640.0;
const HEIGHT: f64 = 480.0;
const MARGIN_L: f64 = 70.0;
const MARGIN_R: f64 = 170.0;
const MARGIN_T: f64 = 40.0;
const MARGIN_B: f64 = 55.0;

/// Colours cycled through for successive curves.
pub const PALETTE: [&str; 8] =
    ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#17becf", "#8c564b", "#e377c2"];

#[derive(Clone, Debug)]
enum Item {
    Rect { lo: [f64; 2], hi: [f64; 2], fill: String, stroke: String, label: String },
    Lines { lines: Vec<Polyline>, color: String, label: String, dashed: bool },
    Note(String),
}

#[derive(Clone, Debug)]
pub struct Plot {
    title: String,
    labels: [String; 2],
    x: (f64, f64),
    y: (f64, f64),
    items: Vec<Item>,
}

fn esc(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;").replace('"', "&quot;")
}

/// Round-number tick positions covering `[lo, hi]`.
fn ticks(lo: f64, hi: f64) -> Vec<f64> {
    let span = hi - lo;
    if !(span > 0.0) {
        return vec![lo];
    }
    let raw = span / 5.0;
    let mag = 10f64.powf(raw.log10().floor());
    let step = [1.0, 2.0, 5.0, 10.0].iter().map(|m| m * mag).find(|s| *s >= raw).unwrap_or(10.0 * mag);
    let first = (lo / step).ceil() as i64;
    let last = (hi / step).floor() as i64;
    (first..=last).map(|k| k as f64 * step).collect()
}

fn num(v: f64) -> String {
    let r = (v * 1e6).round() / 1e6;
    if r == 0.0 {
        "0".into()
    } else {
        format!("{r}")
    }
}

impl Plot {
    pub fn new(title: &str, x_label: &str, y_label: &str, x: (f64, f64), y: (f64, f64)) -> Plot {
        Plot { title: title.into(), labels: [x_label.into(), y_label.into()], x, y, items: Vec::new() }
    }

    /// Filled axis-aligned rectangle, clipped to the axes.
    pub fn rect(&mut self, lo: [f64; 2], hi: [f64; 2], fill: &str, stroke: &str, label: &str) -> &mut Plot {
        self.items.push(Item::Rect { lo, hi, fill: fill.into(), stroke: stroke.into(), label: label.into() });
        self
    }

    pub fn lines(&mut self, lines: &[Polyline], color: &str, label: &str) -> &mut Plot {
        self.items.push(Item::Lines { lines: lines.to_vec(), color: color.into(), label: label.into(), dashed: false });
        self
    }

    pub fn dashed(&mut self, lines: &[Polyline], color: &str, label: &str) -> &mut Plot {
        self.items.push(Item::Lines { lines: lines.to_vec(), color: color.into(), label: label.into(), dashed: true });
        self
    }

    /// Line of text under the legend, e.g. "Q = 0: empty".
    pub fn note(&mut self, text: &str) -> &mut Plot {
        self.items.push(Item::Note(text.into()));
        self
    }

    fn px(&self, p: [f64; 2]) -> (f64, f64) {
        let w = WIDTH - MARGIN_L - MARGIN_R;
        let h = HEIGHT - MARGIN_T - MARGIN_B;
        (
            MARGIN_L + (p[0] - self.x.0) / (self.x.1 - self.x.0) * w,
            MARGIN_T + h - (p[1] - self.y.0) / (self.y.1 - self.y.0) * h,
        )
    }

    pub fn render(&self) -> String {
        let mut s = String::new();
        let (w, h) = (WIDTH - MARGIN_L - MARGIN_R, HEIGHT - MARGIN_T - MARGIN_B);
        let _ = writeln!(
            s,
            r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="12">"#
        );
        let _ = writeln!(s, r#"<rect width="{WIDTH}" height="{HEIGHT}" fill="white"/>"#);
        let _ = writeln!(s, r#"<text x="{}" y="22" text-anchor="middle" font-size="14">{}</text>"#, MARGIN_L + w / 2.0, esc(&self.title));
        let _ = writeln!(s, r#"<defs><clipPath id="plot"><rect x="{MARGIN_L}" y="{MARGIN_T}" width="{w}" height="{h}"/></clipPath></defs>"#);

        for t in ticks(self.x.0, self.x.1) {
            let (x, _) = self.px([t, self.y.0]);
            let _ = writeln!(s, r##"<line x1="{x:.2}" y1="{:.2}" x2="{x:.2}" y2="{:.2}" stroke="#999"/>"##, MARGIN_T + h, MARGIN_T + h + 5.0);
            let _ = writeln!(s, r#"<text x="{x:.2}" y="{:.2}" text-anchor="middle">{}</text>"#, MARGIN_T + h + 18.0, num(t));
        }
        for t in ticks(self.y.0, self.y.1) {
            let (_, y) = self.px([self.x.0, t]);
            let _ = writeln!(s, r##"<line x1="{:.2}" y1="{y:.2}" x2="{MARGIN_L}" y2="{y:.2}" stroke="#999"/>"##, MARGIN_L - 5.0);
            let _ = writeln!(s, r#"<text x="{:.2}" y="{:.2}" text-anchor="end">{}</text>"#, MARGIN_L - 8.0, y + 4.0, num(t));
        }
        let _ = writeln!(s, r#"<text x="{}" y="{}" text-anchor="middle">{}</text>"#, MARGIN_L + w / 2.0, HEIGHT - 12.0, esc(&self.labels[0]));
        let _ = writeln!(
            s,
            r#"<text x="18" y="{0}" text-anchor="middle" transform="rotate(-90 18 {0})">{1}</text>"#,
            MARGIN_T + h / 2.0,
            esc(&self.labels[1])
        );

        let _ = writeln!(s, r#"<g clip-path="url(#plot)">"#);
        for item in &self.items {
            match item {
                Item::Rect { lo, hi, fill, stroke, .. } => {
                    let (x0, y1) = self.px(*lo);
                    let (x1, y0) = self.px(*hi);
                    let _ = writeln!(
                        s,
                        r#"<rect x="{x0:.2}" y="{y0:.2}" width="{:.2}" height="{:.2}" fill="{fill}" fill-opacity="0.25" stroke="{stroke}"/>"#,
                        x1 - x0,
                        y1 - y0
                    );
                }
                Item::Lines { lines, color, dashed, .. } => {
                    let dash = if *dashed { r#" stroke-dasharray="6 4""# } else { "" };
                    for l in lines {
                        let mut pts: Vec<String> = l.points.iter().map(|p| {
                            let (x, y) = self.px(*p);
                            format!("{x:.2},{y:.2}")
                        }).collect();
                        if l.closed && !pts.is_empty() {
                            pts.push(pts[0].clone());
                        }
                        let _ = writeln!(
                            s,
                            r#"<polyline points="{}" fill="none" stroke="{color}" stroke-width="1.6"{dash}/>"#,
                            pts.join(" ")
                        );
                    }
                }
                Item::Note(_) => {}
            }
        }
        let _ = writeln!(s, "</g>");
        let _ = writeln!(s, r#"<rect x="{MARGIN_L}" y="{MARGIN_T}" width="{w}" height="{h}" fill="none" stroke="black"/>"#);

        let lx = WIDTH - MARGIN_R + 15.0;
        let mut ly = MARGIN_T + 10.0;
        for item in &self.items {
            match item {
                Item::Rect { fill, stroke, label, .. } if !label.is_empty() => {
                    let _ = writeln!(s, r#"<rect x="{lx}" y="{:.2}" width="14" height="10" fill="{fill}" fill-opacity="0.25" stroke="{stroke}"/>"#, ly - 9.0);
                    let _ = writeln!(s, r#"<text x="{}" y="{ly:.2}">{}</text>"#, lx + 20.0, esc(label));
                    ly += 18.0;
                }
                Item::Lines { color, label, dashed, .. } if !label.is_empty() => {
                    let dash = if *dashed { r#" stroke-dasharray="6 4""# } else { "" };
                    let _ = writeln!(s, r#"<line x1="{lx}" y1="{:.2}" x2="{}" y2="{:.2}" stroke="{color}" stroke-width="2"{dash}/>"#, ly - 4.0, lx + 14.0, ly - 4.0);
                    let _ = writeln!(s, r#"<text x="{}" y="{ly:.2}">{}</text>"#, lx + 20.0, esc(label));
                    ly += 18.0;
                }
                _ => {}
            }
        }
        for item in &self.items {
            if let Item::Note(text) = item {
                ly += 4.0;
                let _ = writeln!(s, r#"<text x="{lx}" y="{ly:.2}" font-style="italic">{}</text>"#, esc(text));
                ly += 16.0;
            }
        }
        s.push_str("</svg>\n");
        s
    }
}
