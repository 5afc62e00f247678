//! Minimal in-process SVG line plots. Output depends only on the inputs, so
//! regenerating from the same data is byte-identical.

use std::fmt::Write;

const WIDTH: f64 = 640.0;
const HEIGHT: f64 = 420.0;
const LEFT: f64 = 80.0;
const RIGHT: f64 = 20.0;
const TOP: f64 = 40.0;
const BOTTOM: f64 = 60.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Style {
    Line,
    Dashed,
    Markers,
}

#[derive(Debug, Clone)]
pub struct Series {
    pub label: String,
    pub points: Vec<(f64, f64)>,
    pub style: Style,
    pub color: &'static str,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Scale {
    Linear,
    Log,
}

#[derive(Debug, Clone)]
pub struct Plot {
    pub title: String,
    pub x_label: String,
    pub y_label: String,
    pub x_scale: Scale,
    pub y_scale: Scale,
    pub series: Vec<Series>,
}

struct Axis {
    scale: Scale,
    lo: f64,
    hi: f64,
}

impl Axis {
    fn fit(scale: Scale, values: impl Iterator<Item = f64>) -> Self {
        let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
        for v in values {
            let v = match scale {
                Scale::Linear => v,
                Scale::Log => v.log10(),
            };
            if v.is_finite() {
                lo = lo.min(v);
                hi = hi.max(v);
            }
        }
        if !lo.is_finite() {
            (lo, hi) = (0.0, 1.0);
        }
        if hi - lo < 1e-12 * hi.abs().max(1.0) {
            (lo, hi) = (lo - 0.5, hi + 0.5);
        }
        let (lo, hi) = match scale {
            Scale::Log => (lo.floor(), hi.ceil()),
            Scale::Linear => {
                let step = nice_step((hi - lo) / 5.0);
                ((lo / step).floor() * step, (hi / step).ceil() * step)
            }
        };
        Self { scale, lo, hi }
    }

    /// Position in `[0, 1]` along the axis, `None` outside the data domain.
    fn frac(&self, v: f64) -> Option<f64> {
        let v = match self.scale {
            Scale::Linear => v,
            Scale::Log if v > 0.0 => v.log10(),
            Scale::Log => return None,
        };
        v.is_finite().then(|| (v - self.lo) / (self.hi - self.lo))
    }

    fn ticks(&self) -> Vec<(f64, String)> {
        match self.scale {
            Scale::Log => (self.lo as i32..=self.hi as i32)
                .map(|k| (10f64.powi(k), format!("1e{k}")))
                .collect(),
            Scale::Linear => {
                let step = nice_step((self.hi - self.lo) / 5.0);
                let first = (self.lo / step).round() as i64;
                let last = (self.hi / step).round() as i64;
                (first..=last)
                    .map(|i| {
                        let v = i as f64 * step;
                        (v, format_tick(v, step))
                    })
                    .collect()
            }
        }
    }
}

fn nice_step(raw: f64) -> f64 {
    let mag = 10f64.powf(raw.log10().floor());
    let r = raw / mag;
    let m = if r <= 1.0 {
        1.0
    } else if r <= 2.0 {
        2.0
    } else if r <= 5.0 {
        5.0
    } else {
        10.0
    };
    m * mag
}

fn format_tick(v: f64, step: f64) -> String {
    let decimals = (-step.log10().floor()).max(0.0) as usize;
    let v = if v.abs() < step * 1e-9 { 0.0 } else { v };
    format!("{v:.decimals$}")
}

fn escape(text: &str) -> String {
    text.replace('&', "&amp;")
        .replace('<', "&lt;")
        .replace('>', "&gt;")
}

impl Plot {
    pub fn render(&self) -> String {
        let xs = Axis::fit(
            self.x_scale,
            self.series.iter().flat_map(|s| s.points.iter().map(|p| p.0)),
        );
        let ys = Axis::fit(
            self.y_scale,
            self.series.iter().flat_map(|s| s.points.iter().map(|p| p.1)),
        );
        let (pw, ph) = (WIDTH - LEFT - RIGHT, HEIGHT - TOP - BOTTOM);
        let px = |f: f64| LEFT + f * pw;
        let py = |f: f64| TOP + (1.0 - f) * ph;

        let mut out = String::new();
        let w = &mut out;
        let _ = writeln!(
            w,
            r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="12">"#
        );
        let _ = writeln!(w, r#"<rect width="{WIDTH}" height="{HEIGHT}" fill="white"/>"#);
        let _ = writeln!(
            w,
            r#"<text x="{:.1}" y="24" text-anchor="middle" font-size="14">{}</text>"#,
            WIDTH / 2.0,
            escape(&self.title)
        );
        let _ = writeln!(
            w,
            r#"<rect x="{LEFT}" y="{TOP}" width="{pw}" height="{ph}" fill="none" stroke="black"/>"#
        );
        for (v, label) in xs.ticks() {
            let Some(f) = xs.frac(v) else { continue };
            let x = px(f);
            let _ = writeln!(
                w,
                r##"<line x1="{x:.2}" y1="{TOP}" x2="{x:.2}" y2="{:.2}" stroke="#ddd"/><text x="{x:.2}" y="{:.2}" text-anchor="middle">{label}</text>"##,
                TOP + ph,
                TOP + ph + 16.0
            );
        }
        for (v, label) in ys.ticks() {
            let Some(f) = ys.frac(v) else { continue };
            let y = py(f);
            let _ = writeln!(
                w,
                r##"<line x1="{LEFT}" y1="{y:.2}" x2="{:.2}" y2="{y:.2}" stroke="#ddd"/><text x="{:.2}" y="{:.2}" text-anchor="end">{label}</text>"##,
                LEFT + pw,
                LEFT - 6.0,
                y + 4.0
            );
        }
        let _ = writeln!(
            w,
            r#"<text x="{:.1}" y="{:.1}" text-anchor="middle">{}</text>"#,
            LEFT + pw / 2.0,
            HEIGHT - 16.0,
            escape(&self.x_label)
        );
        let _ = writeln!(
            w,
            r#"<text x="18" y="{:.1}" text-anchor="middle" transform="rotate(-90 18 {:.1})">{}</text>"#,
            TOP + ph / 2.0,
            TOP + ph / 2.0,
            escape(&self.y_label)
        );

        for (i, s) in self.series.iter().enumerate() {
            let pts: Vec<(f64, f64)> = s
                .points
                .iter()
                .filter_map(|&(x, y)| Some((px(xs.frac(x)?), py(ys.frac(y)?))))
                .collect();
            match s.style {
                Style::Markers => {
                    for (x, y) in &pts {
                        let _ = writeln!(
                            w,
                            r#"<circle cx="{x:.2}" cy="{y:.2}" r="3.5" fill="{}"/>"#,
                            s.color
                        );
                    }
                }
                Style::Line | Style::Dashed => {
                    let path: Vec<String> = pts.iter().map(|(x, y)| format!("{x:.2},{y:.2}")).collect();
                    let dash = if s.style == Style::Dashed {
                        r#" stroke-dasharray="6 4""#
                    } else {
                        ""
                    };
                    let _ = writeln!(
                        w,
                        r#"<polyline points="{}" fill="none" stroke="{}" stroke-width="1.5"{dash}/>"#,
                        path.join(" "),
                        s.color
                    );
                }
            }
            let ly = TOP + 16.0 + 16.0 * i as f64;
            let lx = LEFT + pw - 170.0;
            let _ = writeln!(
                w,
                r#"<rect x="{lx:.1}" y="{:.1}" width="12" height="4" fill="{}"/><text x="{:.1}" y="{ly:.1}">{}</text>"#,
                ly - 6.0,
                s.color,
                lx + 18.0,
                escape(&s.label)
            );
        }
        out.push_str("</svg>\n");
        out
    }
}
