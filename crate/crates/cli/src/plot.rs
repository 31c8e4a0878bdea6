//! Deterministic SVG rendering of the CSV tables written by each experiment.

use std::fmt::Write as _;

use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum PlotError {
    #[error("csv has no data rows")]
    Empty,
    #[error("csv row {row} has {got} columns, header has {expected}")]
    ColumnMismatch {
        row: usize,
        got: usize,
        expected: usize,
    },
    #[error("column `{0}` not found")]
    MissingColumn(String),
    #[error("non-numeric value `{value}` in column `{column}`")]
    NotNumeric { column: String, value: String },
}

#[derive(Debug, Clone, PartialEq)]
pub enum PlotKind {
    /// Long-format `(x, y, z)` rows on a rectangular grid.
    Heatmap { x: String, y: String, z: String },
    /// One polyline per `y` column against `x`.
    Lines {
        x: String,
        ys: Vec<String>,
        log_x: bool,
    },
    /// Histogram of `value`, one series per distinct `group`.
    Histogram {
        value: String,
        group: String,
        bins: usize,
    },
}

struct Table {
    header: Vec<String>,
    rows: Vec<Vec<String>>,
}

impl Table {
    fn parse(csv: &str) -> Result<Self, PlotError> {
        let mut lines = csv
            .lines()
            .filter(|l| !l.starts_with('#') && !l.trim().is_empty());
        let header: Vec<String> = lines
            .next()
            .ok_or(PlotError::Empty)?
            .split(',')
            .map(|s| s.trim().to_string())
            .collect();
        let mut rows = Vec::new();
        for (k, line) in lines.enumerate() {
            let row: Vec<String> = line.split(',').map(|s| s.trim().to_string()).collect();
            if row.len() != header.len() {
                return Err(PlotError::ColumnMismatch {
                    row: k + 1,
                    got: row.len(),
                    expected: header.len(),
                });
            }
            rows.push(row);
        }
        if rows.is_empty() {
            return Err(PlotError::Empty);
        }
        Ok(Self { header, rows })
    }

    fn index(&self, name: &str) -> Result<usize, PlotError> {
        self.header
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| PlotError::MissingColumn(name.into()))
    }

    fn column(&self, name: &str) -> Result<Vec<f64>, PlotError> {
        let k = self.index(name)?;
        self.rows
            .iter()
            .map(|r| {
                r[k].parse::<f64>().map_err(|_| PlotError::NotNumeric {
                    column: name.into(),
                    value: r[k].clone(),
                })
            })
            .collect()
    }

    fn text_column(&self, name: &str) -> Result<Vec<String>, PlotError> {
        let k = self.index(name)?;
        Ok(self.rows.iter().map(|r| r[k].clone()).collect())
    }
}

const W: f64 = 640.0;
const H: f64 = 480.0;
const LEFT: f64 = 80.0;
const RIGHT: f64 = 20.0;
const TOP: f64 = 30.0;
const BOTTOM: f64 = 60.0;
const PALETTE: [&str; 6] = [
    "#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#17becf",
];

struct Frame {
    x0: f64,
    x1: f64,
    y0: f64,
    y1: f64,
}

impl Frame {
    fn new(xs: &[f64], ys: &[f64]) -> Self {
        let (x0, x1) = bounds(xs);
        let (y0, y1) = bounds(ys);
        Self { x0, x1, y0, y1 }
    }

    fn px(&self, x: f64) -> f64 {
        LEFT + (x - self.x0) / (self.x1 - self.x0) * (W - LEFT - RIGHT)
    }

    fn py(&self, y: f64) -> f64 {
        H - BOTTOM - (y - self.y0) / (self.y1 - self.y0) * (H - TOP - BOTTOM)
    }
}

fn bounds(v: &[f64]) -> (f64, f64) {
    let finite = v.iter().copied().filter(|x| x.is_finite());
    let lo = finite.clone().fold(f64::INFINITY, f64::min);
    let hi = finite.fold(f64::NEG_INFINITY, f64::max);
    if !lo.is_finite() {
        return (0.0, 1.0);
    }
    if hi > lo {
        (lo, hi)
    } else {
        (lo - 0.5, hi + 0.5)
    }
}

fn open(svg: &mut String) {
    let _ = writeln!(
        svg,
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{W}\" height=\"{H}\" viewBox=\"0 0 {W} {H}\" font-family=\"sans-serif\" font-size=\"12\">"
    );
    let _ = writeln!(svg, "<rect width=\"{W}\" height=\"{H}\" fill=\"white\"/>");
}

fn axes(svg: &mut String, f: &Frame, xlabel: &str, ylabel: &str) {
    let _ = writeln!(
        svg,
        "<rect x=\"{LEFT}\" y=\"{TOP}\" width=\"{:.2}\" height=\"{:.2}\" fill=\"none\" stroke=\"black\"/>",
        W - LEFT - RIGHT,
        H - TOP - BOTTOM
    );
    for k in 0..=4 {
        let t = k as f64 / 4.0;
        let xv = f.x0 + t * (f.x1 - f.x0);
        let yv = f.y0 + t * (f.y1 - f.y0);
        let (px, py) = (f.px(xv), f.py(yv));
        let _ = writeln!(
            svg,
            "<text x=\"{px:.2}\" y=\"{:.2}\" text-anchor=\"middle\">{}</text>",
            H - BOTTOM + 18.0,
            tick(xv)
        );
        let _ = writeln!(
            svg,
            "<text x=\"{:.2}\" y=\"{py:.2}\" text-anchor=\"end\" dominant-baseline=\"middle\">{}</text>",
            LEFT - 6.0,
            tick(yv)
        );
    }
    let _ = writeln!(
        svg,
        "<text x=\"{:.2}\" y=\"{:.2}\" text-anchor=\"middle\">{}</text>",
        LEFT + 0.5 * (W - LEFT - RIGHT),
        H - 15.0,
        escape(xlabel)
    );
    let _ = writeln!(
        svg,
        "<text transform=\"translate(16 {:.2}) rotate(-90)\" text-anchor=\"middle\">{}</text>",
        TOP + 0.5 * (H - TOP - BOTTOM),
        escape(ylabel)
    );
}

fn tick(v: f64) -> String {
    if v == 0.0 {
        "0".into()
    } else if v.abs() >= 1e4 || v.abs() < 1e-2 {
        format!("{v:.3e}")
    } else {
        format!("{v:.3}")
    }
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;")
        .replace('<', "&lt;")
        .replace('>', "&gt;")
}

/// Blue-to-yellow ramp for `t ∈ [0, 1]`.
fn color(t: f64) -> String {
    const STOPS: [(f64, f64, f64); 4] = [
        (68.0, 1.0, 84.0),
        (49.0, 104.0, 142.0),
        (53.0, 183.0, 121.0),
        (253.0, 231.0, 37.0),
    ];
    let t = if t.is_finite() {
        t.clamp(0.0, 1.0)
    } else {
        0.0
    };
    let s = t * (STOPS.len() - 1) as f64;
    let k = (s.floor() as usize).min(STOPS.len() - 2);
    let w = s - k as f64;
    let mix = |a: f64, b: f64| (a + (b - a) * w).round() as u8;
    let (a, b) = (STOPS[k], STOPS[k + 1]);
    format!(
        "#{:02x}{:02x}{:02x}",
        mix(a.0, b.0),
        mix(a.1, b.1),
        mix(a.2, b.2)
    )
}

fn unique_sorted(v: &[f64]) -> Vec<f64> {
    let mut u = v.to_vec();
    u.sort_by(f64::total_cmp);
    u.dedup();
    u
}

fn heatmap(t: &Table, x: &str, y: &str, z: &str) -> Result<String, PlotError> {
    let (xs, ys, zs) = (t.column(x)?, t.column(y)?, t.column(z)?);
    let (ux, uy) = (unique_sorted(&xs), unique_sorted(&ys));
    let (z0, z1) = bounds(&zs);
    let f = Frame::new(&ux, &uy);
    let cell = |u: &[f64], k: usize| -> (f64, f64) {
        let lo = if k == 0 {
            u[0]
        } else {
            0.5 * (u[k - 1] + u[k])
        };
        let hi = if k + 1 == u.len() {
            u[k]
        } else {
            0.5 * (u[k] + u[k + 1])
        };
        if u.len() == 1 {
            (u[0] - 0.5, u[0] + 0.5)
        } else {
            (lo, hi)
        }
    };
    let mut svg = String::new();
    open(&mut svg);
    for ((&xv, &yv), &zv) in xs.iter().zip(&ys).zip(&zs) {
        let i = ux.partition_point(|&u| u < xv);
        let j = uy.partition_point(|&u| u < yv);
        let (xa, xb) = cell(&ux, i);
        let (ya, yb) = cell(&uy, j);
        let (px0, px1) = (f.px(xa), f.px(xb));
        let (py0, py1) = (f.py(yb), f.py(ya));
        let _ = writeln!(
            svg,
            "<rect x=\"{px0:.2}\" y=\"{py0:.2}\" width=\"{:.2}\" height=\"{:.2}\" fill=\"{}\"/>",
            (px1 - px0).max(0.1),
            (py1 - py0).max(0.1),
            color((zv - z0) / (z1 - z0))
        );
    }
    axes(&mut svg, &f, x, y);
    let _ = writeln!(
        svg,
        "<text x=\"{:.2}\" y=\"{:.2}\" text-anchor=\"end\">{}: {} to {}</text>",
        W - RIGHT,
        TOP - 10.0,
        escape(z),
        tick(z0),
        tick(z1)
    );
    svg.push_str("</svg>\n");
    Ok(svg)
}

fn lines(t: &Table, x: &str, ys: &[String], log_x: bool) -> Result<String, PlotError> {
    let mut xs = t.column(x)?;
    if log_x {
        xs.iter_mut()
            .for_each(|v| *v = v.max(f64::MIN_POSITIVE).log10());
    }
    let series = ys
        .iter()
        .map(|c| t.column(c))
        .collect::<Result<Vec<_>, _>>()?;
    let all: Vec<f64> = series.iter().flatten().copied().collect();
    let f = Frame::new(&xs, &all);
    let mut svg = String::new();
    open(&mut svg);
    axes(
        &mut svg,
        &f,
        &if log_x {
            format!("log10 {x}")
        } else {
            x.to_string()
        },
        &ys.join(", "),
    );
    for (k, (name, s)) in ys.iter().zip(&series).enumerate() {
        let stroke = PALETTE[k % PALETTE.len()];
        let mut points = String::new();
        for (&xv, &yv) in xs.iter().zip(s) {
            if xv.is_finite() && yv.is_finite() {
                let _ = write!(points, "{:.2},{:.2} ", f.px(xv), f.py(yv));
            }
        }
        let _ = writeln!(
            svg,
            "<polyline points=\"{}\" fill=\"none\" stroke=\"{stroke}\" stroke-width=\"1.5\"/>",
            points.trim_end()
        );
        let _ = writeln!(
            svg,
            "<text x=\"{:.2}\" y=\"{:.2}\" fill=\"{stroke}\">{}</text>",
            LEFT + 10.0,
            TOP + 16.0 * (k + 1) as f64,
            escape(name)
        );
    }
    svg.push_str("</svg>\n");
    Ok(svg)
}

fn histogram(t: &Table, value: &str, group: &str, bins: usize) -> Result<String, PlotError> {
    let v = t.column(value)?;
    let g = t.text_column(group)?;
    let mut groups: Vec<String> = g.clone();
    groups.sort();
    groups.dedup();
    let bins = bins.max(1);
    let (lo, hi) = bounds(&v);
    let width = (hi - lo) / bins as f64;
    let counts: Vec<Vec<f64>> = groups
        .iter()
        .map(|name| {
            let mut c = vec![0.0; bins];
            for (x, gx) in v.iter().zip(&g) {
                if gx == name && x.is_finite() {
                    let k = (((x - lo) / width) as usize).min(bins - 1);
                    c[k] += 1.0;
                }
            }
            c
        })
        .collect();
    let peak = counts.iter().flatten().copied().fold(1.0, f64::max);
    let f = Frame {
        x0: lo,
        x1: hi,
        y0: 0.0,
        y1: peak,
    };
    let mut svg = String::new();
    open(&mut svg);
    for (k, (name, c)) in groups.iter().zip(&counts).enumerate() {
        let fill = PALETTE[k % PALETTE.len()];
        for (b, &n) in c.iter().enumerate() {
            if n == 0.0 {
                continue;
            }
            let xa = f.px(lo + b as f64 * width);
            let xb = f.px(lo + (b + 1) as f64 * width);
            let top = f.py(n);
            let _ = writeln!(
                svg,
                "<rect x=\"{xa:.2}\" y=\"{top:.2}\" width=\"{:.2}\" height=\"{:.2}\" fill=\"{fill}\" fill-opacity=\"0.5\"/>",
                xb - xa,
                f.py(0.0) - top
            );
        }
        let _ = writeln!(
            svg,
            "<text x=\"{:.2}\" y=\"{:.2}\" fill=\"{fill}\">{}</text>",
            LEFT + 10.0,
            TOP + 16.0 * (k + 1) as f64,
            escape(name)
        );
    }
    axes(&mut svg, &f, value, "counts");
    svg.push_str("</svg>\n");
    Ok(svg)
}

/// Renders `csv` (with optional `#` comment lines) as an SVG document.
pub fn emit_plot(csv: &str, kind: &PlotKind) -> Result<String, PlotError> {
    let table = Table::parse(csv)?;
    match kind {
        PlotKind::Heatmap { x, y, z } => heatmap(&table, x, y, z),
        PlotKind::Lines { x, ys, log_x } => lines(&table, x, ys, *log_x),
        PlotKind::Histogram { value, group, bins } => histogram(&table, value, group, *bins),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn line_kind() -> PlotKind {
        PlotKind::Lines {
            x: "t".into(),
            ys: vec!["p".into()],
            log_x: false,
        }
    }

    #[test]
    fn empty_csv_is_an_error() {
        assert_eq!(emit_plot("", &line_kind()), Err(PlotError::Empty));
        assert_eq!(
            emit_plot("# only\nt,p\n", &line_kind()),
            Err(PlotError::Empty)
        );
    }

    #[test]
    fn ragged_rows_are_rejected() {
        let err = emit_plot("t,p\n1,2\n3\n", &line_kind()).unwrap_err();
        assert_eq!(
            err,
            PlotError::ColumnMismatch {
                row: 2,
                got: 1,
                expected: 2
            }
        );
    }

    #[test]
    fn missing_column_is_named() {
        let err = emit_plot("t,q\n1,2\n", &line_kind()).unwrap_err();
        assert_eq!(err, PlotError::MissingColumn("p".into()));
    }

    #[test]
    fn output_is_deterministic() {
        let csv = "# meta\nx,y,z\n0,0,1\n0,1,2\n1,0,3\n1,1,4\n";
        let kind = PlotKind::Heatmap {
            x: "x".into(),
            y: "y".into(),
            z: "z".into(),
        };
        let a = emit_plot(csv, &kind).unwrap();
        assert_eq!(a, emit_plot(csv, &kind).unwrap());
        assert_eq!(a.matches("<rect x=").count(), 5);
    }

    #[test]
    fn histogram_counts_every_shot() {
        let csv = "prep,i\n0,0.1\n0,0.2\n1,0.9\n";
        let kind = PlotKind::Histogram {
            value: "i".into(),
            group: "prep".into(),
            bins: 2,
        };
        let svg = emit_plot(csv, &kind).unwrap();
        assert!(svg.contains(">0</text>") && svg.contains(">1</text>"));
    }

    #[test]
    fn palette_ends() {
        assert_eq!(color(0.0), "#440154");
        assert_eq!(color(1.0), "#fde725");
    }
}
