//! Minimal SVG line plots: polylines on linear axes with tick labels,
//! labeled points and vertical markers.

use std::fmt::Write;

const WIDTH: f64 = 720.0;
const HEIGHT: f64 = 480.0;
const LEFT: f64 = 80.0;
const RIGHT: f64 = 30.0;
const TOP: f64 = 40.0;
const BOTTOM: f64 = 60.0;

/// One polyline.
pub struct Series {
    pub label: String,
    pub points: Vec<(f64, f64)>,
    pub color: &'static str,
}

/// A line plot on linear axes.
#[derive(Default)]
pub struct Plot {
    pub title: String,
    pub x_label: String,
    pub y_label: String,
    pub series: Vec<Series>,
    /// Vertical dashed lines at the given abscissae.
    pub vlines: Vec<(f64, String)>,
    /// Highlighted points.
    pub points: Vec<(f64, f64, String)>,
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

/// Tick positions at 1, 2 or 5 times a power of ten, covering `[lo, hi]`.
pub fn nice_ticks(lo: f64, hi: f64, target: usize) -> Vec<f64> {
    if !(hi > lo) {
        return vec![lo];
    }
    let raw = (hi - lo) / target.max(1) as f64;
    let mag = 10f64.powf(raw.log10().floor());
    let step = [1.0, 2.0, 5.0, 10.0].iter().map(|m| m * mag).find(|s| *s >= raw).unwrap_or(10.0 * mag);
    let first = (lo / step).ceil() as i64;
    let last = (hi / step).floor() as i64;
    (first..=last).map(|k| k as f64 * step).collect()
}

fn tick_label(x: f64, step: f64) -> String {
    let digits = (-step.log10().floor()).max(0.0) as usize;
    format!("{x:.digits$}")
}

impl Plot {
    fn bounds(&self) -> (f64, f64, f64, f64) {
        let pts = self
            .series
            .iter()
            .flat_map(|s| s.points.iter().copied())
            .chain(self.points.iter().map(|(x, y, _)| (*x, *y)))
            .filter(|(x, y)| x.is_finite() && y.is_finite());
        let (mut x0, mut x1, mut y0, mut y1) = (f64::INFINITY, f64::NEG_INFINITY, f64::INFINITY, f64::NEG_INFINITY);
        for (x, y) in pts {
            x0 = x0.min(x);
            x1 = x1.max(x);
            y0 = y0.min(y);
            y1 = y1.max(y);
        }
        for (x, _) in &self.vlines {
            x0 = x0.min(*x);
            x1 = x1.max(*x);
        }
        if !x0.is_finite() {
            return (0.0, 1.0, 0.0, 1.0);
        }
        let pad = |a: f64, b: f64| {
            let d = if b > a { 0.05 * (b - a) } else { 0.5 * a.abs().max(1.0) };
            (a - d, b + d)
        };
        let (x0, x1) = pad(x0, x1);
        let (y0, y1) = pad(y0, y1);
        (x0, x1, y0, y1)
    }

    /// Renders the plot as a standalone SVG document.
    pub fn render(&self) -> String {
        let (x0, x1, y0, y1) = self.bounds();
        let pw = WIDTH - LEFT - RIGHT;
        let ph = HEIGHT - TOP - BOTTOM;
        let sx = |x: f64| LEFT + (x - x0) / (x1 - x0) * pw;
        let sy = |y: f64| TOP + (y1 - y) / (y1 - y0) * ph;

        let mut s = String::new();
        let _ = writeln!(
            s,
            r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="12">"#
        );
        let _ = writeln!(s, r#"<rect width="100%" height="100%" fill="white"/>"#);
        let _ = writeln!(
            s,
            r#"<text x="{}" y="{}" text-anchor="middle" font-size="15">{}</text>"#,
            WIDTH / 2.0,
            TOP / 2.0 + 5.0,
            escape(&self.title)
        );
        let _ = writeln!(
            s,
            r#"<rect x="{LEFT}" y="{TOP}" width="{pw}" height="{ph}" fill="none" stroke="black"/>"#
        );

        let xt = nice_ticks(x0, x1, 6);
        let xstep = if xt.len() > 1 { xt[1] - xt[0] } else { 1.0 };
        for &t in &xt {
            let x = sx(t);
            let _ = writeln!(
                s,
                r#"<line x1="{x:.2}" y1="{:.2}" x2="{x:.2}" y2="{:.2}" stroke="black"/><text x="{x:.2}" y="{:.2}" text-anchor="middle">{}</text>"#,
                TOP + ph,
                TOP + ph + 5.0,
                TOP + ph + 20.0,
                tick_label(t, xstep)
            );
        }
        let yt = nice_ticks(y0, y1, 6);
        let ystep = if yt.len() > 1 { yt[1] - yt[0] } else { 1.0 };
        for &t in &yt {
            let y = sy(t);
            let _ = writeln!(
                s,
                r#"<line x1="{:.2}" y1="{y:.2}" x2="{LEFT}" y2="{y:.2}" stroke="black"/><text x="{:.2}" y="{:.2}" text-anchor="end">{}</text>"#,
                LEFT - 5.0,
                LEFT - 8.0,
                y + 4.0,
                tick_label(t, ystep)
            );
        }
        let _ = writeln!(
            s,
            r#"<text x="{}" y="{}" text-anchor="middle">{}</text>"#,
            LEFT + pw / 2.0,
            HEIGHT - 15.0,
            escape(&self.x_label)
        );
        let _ = writeln!(
            s,
            r#"<text x="20" y="{0}" text-anchor="middle" transform="rotate(-90 20 {0})">{1}</text>"#,
            TOP + ph / 2.0,
            escape(&self.y_label)
        );

        for (x, label) in &self.vlines {
            let px = sx(*x);
            let _ = writeln!(
                s,
                r#"<line x1="{px:.2}" y1="{TOP}" x2="{px:.2}" y2="{:.2}" stroke="gray" stroke-dasharray="6 4"/><text x="{:.2}" y="{:.2}">{}</text>"#,
                TOP + ph,
                px + 4.0,
                TOP + 15.0,
                escape(label)
            );
        }
        for (k, series) in self.series.iter().enumerate() {
            let pts: Vec<String> = series
                .points
                .iter()
                .filter(|(x, y)| x.is_finite() && y.is_finite())
                .map(|(x, y)| format!("{:.2},{:.2}", sx(*x), sy(*y)))
                .collect();
            let _ = writeln!(
                s,
                r#"<polyline points="{}" fill="none" stroke="{}" stroke-width="1.5"/>"#,
                pts.join(" "),
                series.color
            );
            if !series.label.is_empty() {
                let ly = TOP + 15.0 + 16.0 * k as f64;
                let lx = LEFT + pw - 150.0;
                let _ = writeln!(
                    s,
                    r#"<line x1="{lx:.2}" y1="{ly:.2}" x2="{:.2}" y2="{ly:.2}" stroke="{}" stroke-width="1.5"/><text x="{:.2}" y="{:.2}">{}</text>"#,
                    lx + 20.0,
                    series.color,
                    lx + 25.0,
                    ly + 4.0,
                    escape(&series.label)
                );
            }
        }
        for (x, y, label) in &self.points {
            let (px, py) = (sx(*x), sy(*y));
            let _ = writeln!(
                s,
                r#"<circle cx="{px:.2}" cy="{py:.2}" r="4" fill="crimson"/><text x="{:.2}" y="{:.2}" text-anchor="middle">{}</text>"#,
                px,
                py - 10.0,
                escape(label)
            );
        }
        s.push_str("</svg>\n");
        s
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ticks_are_round_numbers_inside_the_range() {
        assert_eq!(nice_ticks(0.0, 10.0, 5), vec![0.0, 2.0, 4.0, 6.0, 8.0, 10.0]);
        let t = nice_ticks(1.53, 2.01, 6);
        assert!(t.iter().all(|x| (1.53..=2.01).contains(x)));
        assert!((t[1] - t[0] - 0.1).abs() < 1e-12);
    }

    #[test]
    fn render_contains_every_element() {
        let plot = Plot {
            title: "B <p>".into(),
            x_label: "p".into(),
            y_label: "B".into(),
            series: vec![Series { label: "curve".into(), points: vec![(1.0, 2.0), (2.0, 1.0)], color: "black" }],
            vlines: vec![(1.5, "mark".into())],
            points: vec![(2.0, 1.0, "min".into())],
        };
        let svg = plot.render();
        assert!(svg.starts_with("<svg") && svg.trim_end().ends_with("</svg>"));
        assert!(svg.contains("<polyline") && svg.contains("<circle") && svg.contains("stroke-dasharray"));
        assert!(svg.contains("B &lt;p&gt;"));
    }
}
