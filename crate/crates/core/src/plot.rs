//! Minimal static SVG charts.

use std::fmt::Write as _;
use std::path::Path;

use ndarray::ArrayView2;

use crate::error::{Error, Result};

const WIDTH: f64 = 640.0;
const HEIGHT: f64 = 480.0;
const MARGIN: f64 = 56.0;
const LEGEND_W: f64 = 120.0;

const PALETTE: [&str; 10] = [
    "#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd", "#8c564b", "#e377c2", "#7f7f7f",
    "#bcbd22", "#17becf",
];

/// Point colouring for [`render_scatter`].
#[derive(Debug, Clone, Copy)]
pub enum ColorBy<'a> {
    Class(&'a [usize]),
    Scalar(&'a [f64]),
    Uniform,
}

pub fn class_color(c: usize) -> &'static str {
    PALETTE[c % PALETTE.len()]
}

/// Blue to red through pale yellow, `t` in `[0, 1]`.
pub fn ramp_color(t: f64) -> String {
    let t = if t.is_finite() { t.clamp(0.0, 1.0) } else { 0.0 };
    let stops = [(49.0, 54.0, 149.0), (255.0, 255.0, 191.0), (165.0, 0.0, 38.0)];
    let (a, b, s) = if t < 0.5 {
        (stops[0], stops[1], t * 2.0)
    } else {
        (stops[1], stops[2], (t - 0.5) * 2.0)
    };
    let mix = |x: f64, y: f64| (x + (y - x) * s).round() as u8;
    format!("#{:02x}{:02x}{:02x}", mix(a.0, b.0), mix(a.1, b.1), mix(a.2, b.2))
}

struct Frame {
    x0: f64,
    x1: f64,
    y0: f64,
    y1: f64,
}

impl Frame {
    fn fit(xs: impl Iterator<Item = f64> + Clone, ys: impl Iterator<Item = f64> + Clone) -> Frame {
        let range = |it: &mut dyn Iterator<Item = f64>| {
            let (lo, hi) = it.fold((f64::INFINITY, f64::NEG_INFINITY), |(l, h), v| (l.min(v), h.max(v)));
            if !lo.is_finite() {
                (0.0, 1.0)
            } else if hi - lo < 1e-12 {
                (lo - 0.5, hi + 0.5)
            } else {
                let pad = 0.05 * (hi - lo);
                (lo - pad, hi + pad)
            }
        };
        let (x0, x1) = range(&mut xs.clone());
        let (y0, y1) = range(&mut ys.clone());
        Frame { x0, x1, y0, y1 }
    }

    fn px(&self, x: f64) -> f64 {
        MARGIN + (x - self.x0) / (self.x1 - self.x0) * (WIDTH - 2.0 * MARGIN - LEGEND_W)
    }

    fn py(&self, y: f64) -> f64 {
        HEIGHT - MARGIN - (y - self.y0) / (self.y1 - self.y0) * (HEIGHT - 2.0 * MARGIN)
    }
}

fn header(out: &mut String, title: &str) {
    let _ = write!(
        out,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="12">"#
    );
    let _ = write!(out, r#"<rect width="100%" height="100%" fill="white"/>"#);
    let _ = write!(
        out,
        r#"<text x="{}" y="24" text-anchor="middle" font-size="14">{}</text>"#,
        WIDTH / 2.0,
        escape(title)
    );
}

fn axes(out: &mut String, f: &Frame, xlabel: &str, ylabel: &str) {
    let (left, right) = (MARGIN, WIDTH - MARGIN - LEGEND_W);
    let (top, bottom) = (MARGIN, HEIGHT - MARGIN);
    let _ = write!(
        out,
        r#"<g stroke="black" fill="none"><line x1="{left}" y1="{bottom}" x2="{right}" y2="{bottom}"/><line x1="{left}" y1="{bottom}" x2="{left}" y2="{top}"/></g>"#
    );
    for i in 0..=4 {
        let t = i as f64 / 4.0;
        let xv = f.x0 + t * (f.x1 - f.x0);
        let yv = f.y0 + t * (f.y1 - f.y0);
        let (x, y) = (f.px(xv), f.py(yv));
        let _ = write!(
            out,
            r#"<line x1="{x:.1}" y1="{bottom}" x2="{x:.1}" y2="{:.1}" stroke="black"/><text x="{x:.1}" y="{:.1}" text-anchor="middle">{}</text>"#,
            bottom + 4.0,
            bottom + 18.0,
            tick(xv)
        );
        let _ = write!(
            out,
            r#"<line x1="{:.1}" y1="{y:.1}" x2="{left}" y2="{y:.1}" stroke="black"/><text x="{:.1}" y="{:.1}" text-anchor="end">{}</text>"#,
            left - 4.0,
            left - 6.0,
            y + 4.0,
            tick(yv)
        );
    }
    let _ = write!(
        out,
        r#"<text x="{:.1}" y="{:.1}" text-anchor="middle">{}</text>"#,
        (left + right) / 2.0,
        HEIGHT - 14.0,
        escape(xlabel)
    );
    let _ = write!(
        out,
        r#"<text x="16" y="{:.1}" text-anchor="middle" transform="rotate(-90 16 {:.1})">{}</text>"#,
        (top + bottom) / 2.0,
        (top + bottom) / 2.0,
        escape(ylabel)
    );
}

fn tick(v: f64) -> String {
    if v != 0.0 && (v.abs() >= 1e4 || v.abs() < 1e-2) {
        format!("{v:.1e}")
    } else {
        format!("{v:.2}")
    }
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

fn legend_x() -> f64 {
    WIDTH - LEGEND_W - MARGIN + 16.0
}

/// Scatter plot of `n x 2` points as an SVG document.
pub fn render_scatter(points: ArrayView2<'_, f64>, color: ColorBy<'_>, title: &str) -> Result<String> {
    if points.ncols() != 2 {
        return Err(Error::shape(2, points.ncols()));
    }
    let n = points.nrows();
    match color {
        ColorBy::Class(c) if c.len() != n => return Err(Error::shape(n, c.len())),
        ColorBy::Scalar(s) if s.len() != n => return Err(Error::shape(n, s.len())),
        _ => {}
    }
    if points.iter().any(|v| !v.is_finite()) {
        return Err(Error::validation("scatter points must be finite"));
    }
    let f = Frame::fit(points.column(0).into_iter().copied(), points.column(1).into_iter().copied());
    let mut out = String::new();
    header(&mut out, title);
    axes(&mut out, &f, "component 1", "component 2");

    let (lo, hi) = match color {
        ColorBy::Scalar(s) if !s.is_empty() => s
            .iter()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(l, h), &v| (l.min(v), h.max(v))),
        _ => (0.0, 1.0),
    };
    out.push_str(r#"<g fill-opacity="0.8">"#);
    for (i, p) in points.rows().into_iter().enumerate() {
        let fill = match color {
            ColorBy::Class(c) => class_color(c[i]).to_string(),
            ColorBy::Scalar(s) => ramp_color(if hi > lo { (s[i] - lo) / (hi - lo) } else { 0.5 }),
            ColorBy::Uniform => PALETTE[0].to_string(),
        };
        let _ = write!(
            out,
            r#"<circle cx="{:.2}" cy="{:.2}" r="3" fill="{fill}"/>"#,
            f.px(p[0]),
            f.py(p[1])
        );
    }
    out.push_str("</g>");

    let lx = legend_x();
    match color {
        ColorBy::Class(c) => {
            let mut classes: Vec<usize> = c.to_vec();
            classes.sort_unstable();
            classes.dedup();
            for (k, class) in classes.iter().take(20).enumerate() {
                let y = MARGIN + 16.0 * k as f64;
                let _ = write!(
                    out,
                    r#"<rect x="{lx}" y="{:.1}" width="10" height="10" fill="{}"/><text x="{}" y="{:.1}">class {class}</text>"#,
                    y - 9.0,
                    class_color(*class),
                    lx + 16.0,
                    y
                );
            }
        }
        ColorBy::Scalar(_) => {
            for k in 0..=10 {
                let t = k as f64 / 10.0;
                let y = MARGIN + 150.0 * (1.0 - t);
                let _ = write!(
                    out,
                    r#"<rect x="{lx}" y="{y:.1}" width="14" height="15" fill="{}"/>"#,
                    ramp_color(t)
                );
            }
            let _ = write!(
                out,
                r#"<text x="{}" y="{}">{}</text><text x="{}" y="{}">{}</text>"#,
                lx + 20.0,
                MARGIN + 10.0,
                tick(hi),
                lx + 20.0,
                MARGIN + 160.0,
                tick(lo)
            );
        }
        ColorBy::Uniform => {}
    }
    out.push_str("</svg>\n");
    Ok(out)
}

/// One line of a [`render_lines`] chart.
#[derive(Debug, Clone)]
pub struct Series {
    pub label: String,
    pub points: Vec<(f64, f64)>,
}

pub fn render_lines(series: &[Series], title: &str, xlabel: &str, ylabel: &str) -> String {
    let f = Frame::fit(
        series.iter().flat_map(|s| s.points.iter().map(|p| p.0)),
        series.iter().flat_map(|s| s.points.iter().map(|p| p.1)),
    );
    let mut out = String::new();
    header(&mut out, title);
    axes(&mut out, &f, xlabel, ylabel);
    let lx = legend_x();
    for (k, s) in series.iter().enumerate() {
        let color = class_color(k);
        let path: Vec<String> = s
            .points
            .iter()
            .map(|&(x, y)| format!("{:.2},{:.2}", f.px(x), f.py(y)))
            .collect();
        let _ = write!(
            out,
            r#"<polyline points="{}" fill="none" stroke="{color}" stroke-width="2"/>"#,
            path.join(" ")
        );
        for &(x, y) in &s.points {
            let _ = write!(
                out,
                r#"<circle cx="{:.2}" cy="{:.2}" r="3" fill="{color}"/>"#,
                f.px(x),
                f.py(y)
            );
        }
        let y = MARGIN + 16.0 * k as f64;
        let _ = write!(
            out,
            r#"<rect x="{lx}" y="{:.1}" width="10" height="10" fill="{color}"/><text x="{}" y="{y:.1}">{}</text>"#,
            y - 9.0,
            lx + 16.0,
            escape(&s.label)
        );
    }
    out.push_str("</svg>\n");
    out
}

fn write_file(path: &Path, contents: &str) -> Result<()> {
    std::fs::write(path, contents).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })
}

pub fn emit_svg_scatter(
    points: ArrayView2<'_, f64>,
    color: ColorBy<'_>,
    title: &str,
    path: &Path,
) -> Result<()> {
    write_file(path, &render_scatter(points, color, title)?)
}

pub fn emit_svg_lines(series: &[Series], title: &str, xlabel: &str, ylabel: &str, path: &Path) -> Result<()> {
    write_file(path, &render_lines(series, title, xlabel, ylabel))
}

#[cfg(test)]
mod tests {
    use ndarray::{array, Array2};

    use super::*;

    #[test]
    fn three_points_two_classes() {
        let p = array![[0.0, 0.0], [1.0, 2.0], [3.0, -1.0]];
        let svg = render_scatter(p.view(), ColorBy::Class(&[0, 1, 1]), "t").unwrap();
        assert_eq!(svg.matches("<circle").count(), 3);
        assert!(svg.starts_with("<svg") && svg.trim_end().ends_with("</svg>"));
        assert!(svg.contains("class 1"));
    }

    #[test]
    fn empty_input_draws_axes() {
        let p = Array2::<f64>::zeros((0, 2));
        let svg = render_scatter(p.view(), ColorBy::Uniform, "empty").unwrap();
        assert_eq!(svg.matches("<circle").count(), 0);
        assert!(svg.contains("<line"));
    }

    #[test]
    fn scalar_ramp_spans_range() {
        let p = array![[0.0, 0.0], [1.0, 1.0], [2.0, 2.0]];
        let svg = render_scatter(p.view(), ColorBy::Scalar(&[5.0, 7.0, 9.0]), "s").unwrap();
        assert!(svg.contains(&ramp_color(0.0)));
        assert!(svg.contains(&ramp_color(1.0)));
        assert!(svg.contains(">9.00<") && svg.contains(">5.00<"));
    }

    #[test]
    fn rejects_non_finite() {
        let p = array![[f64::NAN, 0.0]];
        assert!(render_scatter(p.view(), ColorBy::Uniform, "x").is_err());
    }

    #[test]
    fn unwritable_path() {
        let p = array![[0.0, 0.0]];
        let r = emit_svg_scatter(p.view(), ColorBy::Uniform, "x", Path::new("/nonexistent/dir/a.svg"));
        assert!(matches!(r, Err(Error::Io { .. })));
    }
}
