//! Minimal SVG line charts.
//!
//! Coordinates are written with two decimals so output is byte-stable across
//! platforms.

use std::fmt::Write;

#[derive(Debug, Clone, PartialEq)]
pub struct Line {
    pub label: String,
    pub color: String,
    pub values: Vec<f64>,
}

impl Line {
    pub fn new(label: impl Into<String>, color: impl Into<String>, values: Vec<f64>) -> Self {
        Line {
            label: label.into(),
            color: color.into(),
            values,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LineChart {
    pub title: String,
    pub x_label: String,
    pub y_label: String,
    pub lines: Vec<Line>,
    /// Tick labels at fractional point indices.
    pub x_ticks: Vec<(f64, String)>,
    /// Vertical gridlines at fractional point indices.
    pub v_grid: Vec<f64>,
    pub width: f64,
    pub height: f64,
}

const MARGIN_LEFT: f64 = 70.0;
const MARGIN_RIGHT: f64 = 20.0;
const MARGIN_TOP: f64 = 40.0;
const MARGIN_BOTTOM: f64 = 80.0;

impl LineChart {
    pub fn new(
        title: impl Into<String>,
        x_label: impl Into<String>,
        y_label: impl Into<String>,
    ) -> Self {
        LineChart {
            title: title.into(),
            x_label: x_label.into(),
            y_label: y_label.into(),
            lines: Vec::new(),
            x_ticks: Vec::new(),
            v_grid: Vec::new(),
            width: 720.0,
            height: 400.0,
        }
    }

    pub fn line(mut self, line: Line) -> Self {
        self.lines.push(line);
        self
    }

    /// Day-indexed chart: a tick per week start and a gridline per week boundary.
    pub fn weekly_axis(mut self, days: usize, first_week: u32) -> Self {
        for w in 0..days.div_ceil(7) {
            self.x_ticks.push((
                (w * 7) as f64 + 3.0,
                format!("Week {}", first_week + w as u32),
            ));
            if w > 0 {
                self.v_grid.push((w * 7) as f64 - 0.5);
            }
        }
        self
    }

    /// Categorical axis with one tick per point.
    pub fn categories<S: AsRef<str>>(mut self, labels: &[S]) -> Self {
        self.x_ticks = labels
            .iter()
            .enumerate()
            .map(|(i, l)| (i as f64, l.as_ref().to_string()))
            .collect();
        self
    }

    fn y_range(&self) -> (f64, f64, f64) {
        let vals = self.lines.iter().flat_map(|l| l.values.iter().copied());
        let (lo, hi) = vals.fold((0.0_f64, 0.0_f64), |(lo, hi), v| (lo.min(v), hi.max(v)));
        let span = if hi - lo > 0.0 { hi - lo } else { 1.0 };
        let step = nice_step(span / 5.0);
        let lo = (lo / step).floor() * step;
        let hi = ((hi / step).ceil() * step).max(lo + step);
        (lo, hi, step)
    }

    fn points(&self) -> usize {
        self.lines.iter().map(|l| l.values.len()).max().unwrap_or(0)
    }

    /// Pixel x of a (fractional) point index.
    pub fn x_px(&self, index: f64) -> f64 {
        let n = self.points();
        let plot_w = self.width - MARGIN_LEFT - MARGIN_RIGHT;
        if n <= 1 {
            MARGIN_LEFT + plot_w / 2.0
        } else {
            MARGIN_LEFT + index * plot_w / (n - 1) as f64
        }
    }

    /// Pixel y of a data value.
    pub fn y_px(&self, v: f64) -> f64 {
        let (lo, hi, _) = self.y_range();
        let plot_h = self.height - MARGIN_TOP - MARGIN_BOTTOM;
        MARGIN_TOP + plot_h * (1.0 - (v - lo) / (hi - lo))
    }

    pub fn render(&self) -> String {
        let (lo, hi, step) = self.y_range();
        let bottom = self.height - MARGIN_BOTTOM;
        let right = self.width - MARGIN_RIGHT;
        let mut s = String::new();
        let _ = writeln!(
            s,
            r#"<svg xmlns="http://www.w3.org/2000/svg" width="{w}" height="{h}" viewBox="0 0 {w} {h}" font-family="sans-serif" font-size="12">"#,
            w = self.width,
            h = self.height
        );
        let _ = writeln!(
            s,
            r#"<rect x="0" y="0" width="{}" height="{}" fill="white"/>"#,
            self.width, self.height
        );
        let _ = writeln!(
            s,
            r#"<text x="{:.2}" y="22" text-anchor="middle" font-size="15">{}</text>"#,
            self.width / 2.0,
            escape(&self.title)
        );

        let mut y = lo;
        while y <= hi + step * 1e-9 {
            let py = self.y_px(y);
            let _ = writeln!(
                s,
                r##"<line x1="{MARGIN_LEFT:.2}" y1="{py:.2}" x2="{right:.2}" y2="{py:.2}" stroke="#e0e0e0"/>"##
            );
            let _ = writeln!(
                s,
                r#"<text x="{:.2}" y="{:.2}" text-anchor="end">{}</text>"#,
                MARGIN_LEFT - 6.0,
                py + 4.0,
                tick_label(y, step)
            );
            y += step;
        }
        for g in &self.v_grid {
            let px = self.x_px(*g);
            let _ = writeln!(
                s,
                r##"<line x1="{px:.2}" y1="{MARGIN_TOP:.2}" x2="{px:.2}" y2="{bottom:.2}" stroke="#c0c0c0" stroke-dasharray="4 3"/>"##
            );
        }
        let _ = writeln!(
            s,
            r#"<line x1="{MARGIN_LEFT:.2}" y1="{bottom:.2}" x2="{right:.2}" y2="{bottom:.2}" stroke="black"/>"#
        );
        let _ = writeln!(
            s,
            r#"<line x1="{MARGIN_LEFT:.2}" y1="{MARGIN_TOP:.2}" x2="{MARGIN_LEFT:.2}" y2="{bottom:.2}" stroke="black"/>"#
        );
        for (i, label) in &self.x_ticks {
            let _ = writeln!(
                s,
                r#"<text x="{:.2}" y="{:.2}" text-anchor="middle">{}</text>"#,
                self.x_px(*i),
                bottom + 16.0,
                escape(label)
            );
        }
        let _ = writeln!(
            s,
            r#"<text x="{:.2}" y="{:.2}" text-anchor="middle">{}</text>"#,
            (MARGIN_LEFT + right) / 2.0,
            bottom + 36.0,
            escape(&self.x_label)
        );
        let _ = writeln!(
            s,
            r#"<text x="16" y="{:.2}" text-anchor="middle" transform="rotate(-90 16 {:.2})">{}</text>"#,
            (MARGIN_TOP + bottom) / 2.0,
            (MARGIN_TOP + bottom) / 2.0,
            escape(&self.y_label)
        );

        for line in &self.lines {
            let pts: Vec<String> = line
                .values
                .iter()
                .enumerate()
                .map(|(i, v)| format!("{:.2},{:.2}", self.x_px(i as f64), self.y_px(*v)))
                .collect();
            let _ = writeln!(
                s,
                r#"<polyline fill="none" stroke="{}" stroke-width="2" data-series="{}" points="{}"/>"#,
                escape(&line.color),
                escape(&line.label),
                pts.join(" ")
            );
        }

        let legend_y = self.height - 18.0;
        let mut lx = MARGIN_LEFT;
        for line in &self.lines {
            let _ = writeln!(
                s,
                r#"<line x1="{lx:.2}" y1="{:.2}" x2="{:.2}" y2="{:.2}" stroke="{}" stroke-width="3"/>"#,
                legend_y - 4.0,
                lx + 20.0,
                legend_y - 4.0,
                escape(&line.color)
            );
            let _ = writeln!(
                s,
                r#"<text x="{:.2}" y="{legend_y:.2}">{}</text>"#,
                lx + 26.0,
                escape(&line.label)
            );
            lx += 40.0 + 7.0 * line.label.chars().count() as f64;
        }
        s.push_str("</svg>\n");
        s
    }
}

fn nice_step(raw: f64) -> f64 {
    let mag = 10f64.powf(raw.log10().floor());
    let frac = raw / mag;
    let nice = if frac <= 1.0 {
        1.0
    } else if frac <= 2.0 {
        2.0
    } else if frac <= 5.0 {
        5.0
    } else {
        10.0
    };
    nice * mag
}

fn tick_label(v: f64, step: f64) -> String {
    let decimals = if step >= 1.0 {
        0
    } else {
        (-step.log10().floor()) as usize
    };
    let v = if v.abs() < step * 1e-9 { 0.0 } else { v };
    format!("{v:.decimals$}")
}

pub fn escape(s: &str) -> String {
    let mut out = String::with_capacity(s.len());
    for c in s.chars() {
        match c {
            '&' => out.push_str("&amp;"),
            '<' => out.push_str("&lt;"),
            '>' => out.push_str("&gt;"),
            '"' => out.push_str("&quot;"),
            '\'' => out.push_str("&apos;"),
            c => out.push(c),
        }
    }
    out
}
