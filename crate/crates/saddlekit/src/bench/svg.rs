//! Minimal self-contained SVG line plots with byte-deterministic output.

use std::path::Path;

use crate::error::{Error, Result};

pub struct SvgSeries {
    pub name: String,
    pub points: Vec<(f64, f64)>,
}

const WIDTH: f64 = 640.0;
const HEIGHT: f64 = 420.0;
const MARGIN: f64 = 56.0;
const PALETTE: [&str; 4] = ["#1f6fb2", "#c44e52", "#55a868", "#8172b2"];

/// Renders a line plot; identical input yields identical bytes.
pub fn render_svg(
    series: &[SvgSeries],
    x_label: &str,
    y_label: &str,
    loglog: bool,
) -> Result<String> {
    if series.is_empty() || series.iter().any(|s| s.points.len() < 2) {
        return Err(Error::InvalidParam(
            "svg plot needs at least one series with two points".into(),
        ));
    }
    let map = |v: f64| -> Result<f64> {
        if loglog {
            if v <= 0.0 {
                return Err(Error::InvalidParam(format!(
                    "log axis needs positive values, got {v}"
                )));
            }
            Ok(v.ln())
        } else {
            Ok(v)
        }
    };
    let mut xs = Vec::new();
    let mut ys = Vec::new();
    for s in series {
        for (x, y) in &s.points {
            xs.push(map(*x)?);
            ys.push(map(*y)?);
        }
    }
    let (x_min, x_max) = bounds(&xs);
    let (y_min, y_max) = bounds(&ys);
    let sx = (WIDTH - 2.0 * MARGIN) / (x_max - x_min).max(1e-12);
    let sy = (HEIGHT - 2.0 * MARGIN) / (y_max - y_min).max(1e-12);
    let px = |v: f64| MARGIN + (v - x_min) * sx;
    let py = |v: f64| HEIGHT - MARGIN - (v - y_min) * sy;

    let mut out = String::new();
    out.push_str(&format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{WIDTH}\" height=\"{HEIGHT}\" viewBox=\"0 0 {WIDTH} {HEIGHT}\">\n"
    ));
    out.push_str("<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n");
    out.push_str(&format!(
        "<line x1=\"{m}\" y1=\"{b}\" x2=\"{r}\" y2=\"{b}\" stroke=\"black\"/>\n",
        m = MARGIN,
        b = HEIGHT - MARGIN,
        r = WIDTH - MARGIN
    ));
    out.push_str(&format!(
        "<line x1=\"{m}\" y1=\"{t}\" x2=\"{m}\" y2=\"{b}\" stroke=\"black\"/>\n",
        m = MARGIN,
        t = MARGIN,
        b = HEIGHT - MARGIN
    ));
    out.push_str(&format!(
        "<text x=\"{x:.2}\" y=\"{y:.2}\" text-anchor=\"middle\" font-size=\"13\">{x_label}</text>\n",
        x = WIDTH / 2.0,
        y = HEIGHT - 14.0
    ));
    out.push_str(&format!(
        "<text x=\"16\" y=\"{y:.2}\" text-anchor=\"middle\" font-size=\"13\" transform=\"rotate(-90 16 {y:.2})\">{y_label}</text>\n",
        y = HEIGHT / 2.0
    ));
    // endpoint tick labels in data units
    for (v, mapped, horizontal) in [
        (unmap(x_min, loglog), x_min, true),
        (unmap(x_max, loglog), x_max, true),
        (unmap(y_min, loglog), y_min, false),
        (unmap(y_max, loglog), y_max, false),
    ] {
        if horizontal {
            out.push_str(&format!(
                "<text x=\"{x:.2}\" y=\"{y:.2}\" text-anchor=\"middle\" font-size=\"11\">{v:e}</text>\n",
                x = px(mapped),
                y = HEIGHT - MARGIN + 18.0
            ));
        } else {
            out.push_str(&format!(
                "<text x=\"{x:.2}\" y=\"{y:.2}\" text-anchor=\"end\" font-size=\"11\">{v:e}</text>\n",
                x = MARGIN - 6.0,
                y = py(mapped) + 4.0
            ));
        }
    }
    for (idx, s) in series.iter().enumerate() {
        let color = PALETTE[idx % PALETTE.len()];
        let mut d = String::new();
        for (i, (x, y)) in s.points.iter().enumerate() {
            let cmd = if i == 0 { 'M' } else { 'L' };
            d.push_str(&format!("{cmd}{:.3} {:.3}", px(map(*x)?), py(map(*y)?)));
        }
        out.push_str(&format!(
            "<path d=\"{d}\" fill=\"none\" stroke=\"{color}\" stroke-width=\"1.6\"/>\n"
        ));
        out.push_str(&format!(
            "<text x=\"{x:.2}\" y=\"{y:.2}\" font-size=\"12\" fill=\"{color}\">{}</text>\n",
            s.name,
            x = WIDTH - MARGIN + 4.0,
            y = MARGIN + 16.0 * idx as f64
        ));
    }
    out.push_str("</svg>\n");
    Ok(out)
}

fn unmap(v: f64, loglog: bool) -> f64 {
    if loglog {
        v.exp()
    } else {
        v
    }
}

fn bounds(vals: &[f64]) -> (f64, f64) {
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for v in vals {
        lo = lo.min(*v);
        hi = hi.max(*v);
    }
    if lo == hi {
        (lo - 0.5, hi + 0.5)
    } else {
        (lo, hi)
    }
}

/// Renders and writes the plot.
pub fn emit_svg(
    series: &[SvgSeries],
    x_label: &str,
    y_label: &str,
    loglog: bool,
    path: &Path,
) -> Result<()> {
    let body = render_svg(series, x_label, y_label, loglog)?;
    std::fs::write(path, body)?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identical_input_identical_bytes() {
        let s = [SvgSeries {
            name: "gap".into(),
            points: vec![(10.0, 1.0), (100.0, 0.1), (1000.0, 0.01)],
        }];
        let a = render_svg(&s, "T", "penalty gap", true).unwrap();
        let b = render_svg(&s, "T", "penalty gap", true).unwrap();
        assert_eq!(a, b);
        assert!(a.contains(">T<"));
        assert!(a.contains("penalty gap"));
    }

    #[test]
    fn single_point_series_rejected() {
        let s = [SvgSeries {
            name: "gap".into(),
            points: vec![(10.0, 1.0)],
        }];
        assert!(render_svg(&s, "T", "gap", false).is_err());
    }

    #[test]
    fn log_axis_rejects_nonpositive() {
        let s = [SvgSeries {
            name: "gap".into(),
            points: vec![(10.0, 1.0), (100.0, -0.1)],
        }];
        assert!(render_svg(&s, "T", "gap", true).is_err());
    }
}
