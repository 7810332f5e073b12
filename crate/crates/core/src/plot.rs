//! Minimal SVG line charts.

use std::fmt::Write;

use crate::error::{Error, Result};

const WIDTH: f64 = 720.0;
const HEIGHT: f64 = 440.0;
const MARGIN_LEFT: f64 = 72.0;
const MARGIN_RIGHT: f64 = 180.0;
const MARGIN_TOP: f64 = 36.0;
const MARGIN_BOTTOM: f64 = 56.0;
const PALETTE: [&str; 8] = [
    "#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b", "#e377c2", "#17becf",
];

#[derive(Debug, Clone, PartialEq)]
pub struct Series {
    pub label: String,
    pub points: Vec<(f64, f64)>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Axis {
    pub label: String,
    pub log: bool,
}

impl Axis {
    pub fn linear(label: &str) -> Self {
        Self {
            label: label.to_string(),
            log: false,
        }
    }

    pub fn log(label: &str) -> Self {
        Self {
            label: label.to_string(),
            log: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LineChart {
    pub title: String,
    pub x: Axis,
    pub y: Axis,
    pub series: Vec<Series>,
}

struct Scale {
    lo: f64,
    hi: f64,
    log: bool,
    px_lo: f64,
    px_hi: f64,
}

impl Scale {
    fn new(values: impl Iterator<Item = f64>, log: bool, px_lo: f64, px_hi: f64) -> Result<Self> {
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        for v in values {
            if !v.is_finite() || (log && v <= 0.0) {
                return Err(Error::Parameter(format!("cannot place {v} on a {} axis", if log { "log" } else { "linear" })));
            }
            let v = if log { v.log10() } else { v };
            lo = lo.min(v);
            hi = hi.max(v);
        }
        if !lo.is_finite() {
            return Err(Error::Parameter("chart has no points".into()));
        }
        if log {
            lo = lo.floor();
            hi = hi.ceil();
            if hi <= lo {
                hi = lo + 1.0;
            }
        } else if hi - lo < 1e-12 * hi.abs().max(1.0) {
            lo -= 0.5;
            hi += 0.5;
        }
        Ok(Self { lo, hi, log, px_lo, px_hi })
    }

    fn map(&self, v: f64) -> f64 {
        let v = if self.log { v.log10() } else { v };
        self.px_lo + (v - self.lo) / (self.hi - self.lo) * (self.px_hi - self.px_lo)
    }

    fn ticks(&self) -> Vec<(f64, String)> {
        if self.log {
            return (self.lo as i32..=self.hi as i32)
                .map(|e| (10f64.powi(e), format!("1e{e}")))
                .collect();
        }
        let raw = (self.hi - self.lo) / 5.0;
        let mag = 10f64.powf(raw.log10().floor());
        let step = [1.0, 2.0, 5.0, 10.0]
            .iter()
            .map(|m| m * mag)
            .find(|s| *s >= raw)
            .unwrap_or(10.0 * mag);
        let first = (self.lo / step).ceil() as i64;
        let last = (self.hi / step).floor() as i64;
        let decimals = (-step.log10().floor()).max(0.0) as usize;
        (first..=last)
            .map(|i| {
                let v = i as f64 * step;
                (v, format!("{v:.decimals$}"))
            })
            .collect()
    }
}

fn escape(text: &str) -> String {
    text.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

impl LineChart {
    pub fn to_svg(&self) -> Result<String> {
        let plot_right = WIDTH - MARGIN_RIGHT;
        let plot_bottom = HEIGHT - MARGIN_BOTTOM;
        let points = || self.series.iter().flat_map(|s| s.points.iter());
        let xs = Scale::new(points().map(|p| p.0), self.x.log, MARGIN_LEFT, plot_right)?;
        let ys = Scale::new(points().map(|p| p.1), self.y.log, plot_bottom, MARGIN_TOP)?;

        let mut svg = String::new();
        let _ = writeln!(
            svg,
            r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="12">"#
        );
        let _ = writeln!(svg, r#"<rect width="100%" height="100%" fill="white"/>"#);
        let _ = writeln!(
            svg,
            r#"<text x="{:.1}" y="20" text-anchor="middle" font-size="14">{}</text>"#,
            (MARGIN_LEFT + plot_right) / 2.0,
            escape(&self.title)
        );
        let _ = writeln!(
            svg,
            r#"<rect x="{MARGIN_LEFT}" y="{MARGIN_TOP}" width="{:.1}" height="{:.1}" fill="none" stroke="black"/>"#,
            plot_right - MARGIN_LEFT,
            plot_bottom - MARGIN_TOP
        );
        for (v, label) in xs.ticks() {
            let px = xs.map(v);
            let _ = writeln!(
                svg,
                r##"<line x1="{px:.1}" y1="{plot_bottom}" x2="{px:.1}" y2="{:.1}" stroke="#ccc"/><text x="{px:.1}" y="{:.1}" text-anchor="middle">{label}</text>"##,
                MARGIN_TOP,
                plot_bottom + 16.0
            );
        }
        for (v, label) in ys.ticks() {
            let py = ys.map(v);
            let _ = writeln!(
                svg,
                r##"<line x1="{MARGIN_LEFT}" y1="{py:.1}" x2="{plot_right}" y2="{py:.1}" stroke="#ccc"/><text x="{:.1}" y="{:.1}" text-anchor="end">{label}</text>"##,
                MARGIN_LEFT - 6.0,
                py + 4.0
            );
        }
        let _ = writeln!(
            svg,
            r#"<text x="{:.1}" y="{:.1}" text-anchor="middle">{}</text>"#,
            (MARGIN_LEFT + plot_right) / 2.0,
            HEIGHT - 16.0,
            escape(&self.x.label)
        );
        let _ = writeln!(
            svg,
            r#"<text transform="translate(18 {:.1}) rotate(-90)" text-anchor="middle">{}</text>"#,
            (MARGIN_TOP + plot_bottom) / 2.0,
            escape(&self.y.label)
        );
        for (i, s) in self.series.iter().enumerate() {
            let color = PALETTE[i % PALETTE.len()];
            let coords: Vec<String> = s
                .points
                .iter()
                .map(|(x, y)| format!("{:.2},{:.2}", xs.map(*x), ys.map(*y)))
                .collect();
            let _ = writeln!(
                svg,
                r#"<polyline fill="none" stroke="{color}" stroke-width="1.5" points="{}"/>"#,
                coords.join(" ")
            );
            let ly = MARGIN_TOP + 14.0 + 18.0 * i as f64;
            let _ = writeln!(
                svg,
                r#"<line x1="{:.1}" y1="{ly:.1}" x2="{:.1}" y2="{ly:.1}" stroke="{color}" stroke-width="2"/><text x="{:.1}" y="{:.1}">{}</text>"#,
                plot_right + 12.0,
                plot_right + 32.0,
                plot_right + 38.0,
                ly + 4.0,
                escape(&s.label)
            );
        }
        svg.push_str("</svg>\n");
        Ok(svg)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn chart(log: bool, points: Vec<(f64, f64)>) -> LineChart {
        LineChart {
            title: "t <1>".into(),
            x: if log { Axis::log("x") } else { Axis::linear("x") },
            y: if log { Axis::log("y") } else { Axis::linear("y") },
            series: vec![Series {
                label: "a&b".into(),
                points,
            }],
        }
    }

    #[test]
    fn linear_chart_structure() {
        let svg = chart(false, vec![(0.0, 0.0), (1.0, 1.0), (2.0, 0.5)]).to_svg().unwrap();
        assert!(svg.starts_with("<svg"));
        assert!(svg.trim_end().ends_with("</svg>"));
        assert_eq!(svg.matches("<polyline").count(), 1);
        assert!(svg.contains("a&amp;b") && svg.contains("t &lt;1&gt;"));
    }

    #[test]
    fn log_chart_has_decade_ticks() {
        let svg = chart(true, vec![(10.0, 1e-2), (1000.0, 1e-6)]).to_svg().unwrap();
        for t in ["1e1", "1e2", "1e3", "1e-6", "1e-2"] {
            assert!(svg.contains(&format!(">{t}<")), "{t}");
        }
        assert!(chart(true, vec![(0.0, 1.0)]).to_svg().is_err());
    }

    #[test]
    fn degenerate_ranges() {
        assert!(chart(false, vec![(1.0, 1.0)]).to_svg().is_ok());
        assert!(chart(false, vec![]).to_svg().is_err());
    }

    #[test]
    fn output_is_deterministic() {
        let c = chart(false, vec![(0.0, 0.3), (0.7, 0.9)]);
        assert_eq!(c.to_svg().unwrap(), c.to_svg().unwrap());
    }
}
