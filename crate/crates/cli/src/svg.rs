//! Minimal SVG plotting: line charts, stem charts with confidence bands,
//! and stacked forecast rows. Axes, series, bands, and a title; nothing
//! more.

use std::fmt::Write as _;

pub const PALETTE: [&str; 10] = [
    "#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd", "#8c564b", "#e377c2", "#7f7f7f",
    "#bcbd22", "#17becf",
];

const MARGIN_LEFT: f64 = 56.0;
const MARGIN_RIGHT: f64 = 12.0;
const MARGIN_TOP: f64 = 26.0;
const MARGIN_BOTTOM: f64 = 24.0;

#[derive(Debug, Clone)]
pub struct Line {
    pub label: String,
    pub color: String,
    pub points: Vec<(f64, f64)>,
    pub dashed: bool,
}

pub struct Panel {
    pub title: String,
    pub lines: Vec<Line>,
    pub stems: Vec<(f64, f64)>,
    /// Horizontal band drawn at +/- this half-width around zero.
    pub band: Option<f64>,
    pub width: f64,
    pub height: f64,
}

impl Panel {
    pub fn new(title: impl Into<String>) -> Self {
        Self {
            title: title.into(),
            lines: Vec::new(),
            stems: Vec::new(),
            band: None,
            width: 640.0,
            height: 220.0,
        }
    }
}

fn data_range(panel: &Panel) -> ((f64, f64), (f64, f64)) {
    let mut xs: Vec<f64> = Vec::new();
    let mut ys: Vec<f64> = Vec::new();
    for l in &panel.lines {
        for &(x, y) in &l.points {
            xs.push(x);
            ys.push(y);
        }
    }
    for &(x, y) in &panel.stems {
        xs.push(x);
        ys.push(y);
        ys.push(0.0);
    }
    if let Some(b) = panel.band {
        ys.push(b);
        ys.push(-b);
    }
    let (xmin, xmax) = bounds(&xs);
    let (ymin, ymax) = bounds(&ys);
    ((xmin, xmax), (ymin, ymax))
}

fn bounds(v: &[f64]) -> (f64, f64) {
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for &x in v {
        if x.is_finite() {
            lo = lo.min(x);
            hi = hi.max(x);
        }
    }
    if !lo.is_finite() || !hi.is_finite() {
        return (0.0, 1.0);
    }
    if lo == hi {
        (lo - 0.5, hi + 0.5)
    } else {
        let pad = 0.05 * (hi - lo);
        (lo - pad, hi + pad)
    }
}

fn render_panel(out: &mut String, panel: &Panel, x_off: f64, y_off: f64) {
    let ((xmin, xmax), (ymin, ymax)) = data_range(panel);
    let plot_w = panel.width - MARGIN_LEFT - MARGIN_RIGHT;
    let plot_h = panel.height - MARGIN_TOP - MARGIN_BOTTOM;
    let sx = |x: f64| x_off + MARGIN_LEFT + (x - xmin) / (xmax - xmin) * plot_w;
    let sy = |y: f64| y_off + MARGIN_TOP + (ymax - y) / (ymax - ymin) * plot_h;

    let _ = writeln!(
        out,
        r##"<text x="{:.2}" y="{:.2}" font-size="13" font-family="sans-serif">{}</text>"##,
        x_off + MARGIN_LEFT,
        y_off + 16.0,
        xml_escape(&panel.title)
    );
    // frame
    let _ = writeln!(
        out,
        r##"<rect x="{:.2}" y="{:.2}" width="{:.2}" height="{:.2}" fill="none" stroke="#999" stroke-width="1"/>"##,
        x_off + MARGIN_LEFT,
        y_off + MARGIN_TOP,
        plot_w,
        plot_h
    );
    // axis labels: min/max on both axes
    let _ = writeln!(
        out,
        r##"<text x="{:.2}" y="{:.2}" font-size="10" font-family="sans-serif" text-anchor="end">{:.4}</text>"##,
        x_off + MARGIN_LEFT - 4.0,
        sy(ymax) + 8.0,
        ymax
    );
    let _ = writeln!(
        out,
        r##"<text x="{:.2}" y="{:.2}" font-size="10" font-family="sans-serif" text-anchor="end">{:.4}</text>"##,
        x_off + MARGIN_LEFT - 4.0,
        sy(ymin),
        ymin
    );
    let _ = writeln!(
        out,
        r##"<text x="{:.2}" y="{:.2}" font-size="10" font-family="sans-serif">{:.1}</text>"##,
        x_off + MARGIN_LEFT,
        y_off + panel.height - 8.0,
        xmin
    );
    let _ = writeln!(
        out,
        r##"<text x="{:.2}" y="{:.2}" font-size="10" font-family="sans-serif" text-anchor="end">{:.1}</text>"##,
        x_off + MARGIN_LEFT + plot_w,
        y_off + panel.height - 8.0,
        xmax
    );
    // zero line when visible
    if ymin < 0.0 && ymax > 0.0 {
        let _ = writeln!(
            out,
            r##"<line x1="{:.2}" y1="{:.2}" x2="{:.2}" y2="{:.2}" stroke="#ccc" stroke-width="1"/>"##,
            sx(xmin),
            sy(0.0),
            sx(xmax),
            sy(0.0)
        );
    }
    if let Some(b) = panel.band {
        for v in [b, -b] {
            let _ = writeln!(
                out,
                r##"<line x1="{:.2}" y1="{:.2}" x2="{:.2}" y2="{:.2}" stroke="#2ca02c" stroke-width="1" stroke-dasharray="4,3"/>"##,
                sx(xmin),
                sy(v),
                sx(xmax),
                sy(v)
            );
        }
    }
    for &(x, y) in &panel.stems {
        let _ = writeln!(
            out,
            r##"<line x1="{:.2}" y1="{:.2}" x2="{:.2}" y2="{:.2}" stroke="#1f77b4" stroke-width="2"/>"##,
            sx(x),
            sy(0.0),
            sx(x),
            sy(y)
        );
    }
    for line in &panel.lines {
        if line.points.is_empty() {
            continue;
        }
        let mut d = String::new();
        for &(x, y) in &line.points {
            if !y.is_finite() {
                continue;
            }
            let _ = write!(d, "{:.2},{:.2} ", sx(x), sy(y));
        }
        let dash = if line.dashed {
            r##" stroke-dasharray="5,3""##
        } else {
            ""
        };
        let _ = writeln!(
            out,
            r##"<polyline points="{}" fill="none" stroke="{}" stroke-width="1.5"{}/>"##,
            d.trim_end(),
            line.color,
            dash
        );
    }
    // legend
    let mut lx = x_off + MARGIN_LEFT + 8.0;
    let ly = y_off + MARGIN_TOP + 12.0;
    for line in &panel.lines {
        if line.label.is_empty() {
            continue;
        }
        let _ = writeln!(
            out,
            r##"<line x1="{:.2}" y1="{:.2}" x2="{:.2}" y2="{:.2}" stroke="{}" stroke-width="2"/>"##,
            lx,
            ly - 4.0,
            lx + 16.0,
            ly - 4.0,
            line.color
        );
        let _ = writeln!(
            out,
            r##"<text x="{:.2}" y="{:.2}" font-size="10" font-family="sans-serif">{}</text>"##,
            lx + 20.0,
            ly,
            xml_escape(&line.label)
        );
        lx += 26.0 + 7.0 * line.label.len() as f64;
    }
}

/// Assemble stacked panels into one SVG document.
pub fn document(panels: &[Panel], desc: &str) -> String {
    let width = panels.iter().map(|p| p.width).fold(0.0, f64::max).max(1.0);
    let height: f64 = panels.iter().map(|p| p.height).sum::<f64>().max(1.0);
    let mut out = String::new();
    let _ = writeln!(
        out,
        r##"<svg xmlns="http://www.w3.org/2000/svg" width="{width:.0}" height="{height:.0}" viewBox="0 0 {width:.0} {height:.0}">"##
    );
    let _ = writeln!(out, "<desc>{}</desc>", xml_escape(desc));
    let _ = writeln!(
        out,
        r##"<rect x="0" y="0" width="{width:.0}" height="{height:.0}" fill="white"/>"##
    );
    let mut y = 0.0;
    for p in panels {
        render_panel(&mut out, p, 0.0, y);
        y += p.height;
    }
    out.push_str("</svg>\n");
    out
}

fn xml_escape(s: &str) -> String {
    s.replace('&', "&amp;")
        .replace('<', "&lt;")
        .replace('>', "&gt;")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn renders_wellformed_document() {
        let mut p = Panel::new("test <plot>");
        p.lines.push(Line {
            label: "a".into(),
            color: PALETTE[0].into(),
            points: vec![(0.0, 1.0), (1.0, 2.0), (2.0, 0.5)],
            dashed: false,
        });
        p.stems = vec![(0.0, 1.0), (1.0, -0.4)];
        p.band = Some(0.3);
        let svg = document(&[p], "meta");
        assert!(svg.starts_with("<svg"));
        assert!(svg.ends_with("</svg>\n"));
        assert!(svg.contains("test &lt;plot&gt;"));
        assert!(svg.contains("<polyline"));
        assert!(svg.contains("<desc>meta</desc>"));
        // balanced tags
        assert_eq!(svg.matches("<svg").count(), 1);
        assert_eq!(svg.matches("</svg>").count(), 1);
    }

    #[test]
    fn constant_series_does_not_collapse_scale() {
        let mut p = Panel::new("flat");
        p.lines.push(Line {
            label: String::new(),
            color: PALETTE[1].into(),
            points: vec![(0.0, 2.0), (1.0, 2.0)],
            dashed: false,
        });
        let svg = document(&[p], "");
        assert!(!svg.contains("NaN"));
    }
}
