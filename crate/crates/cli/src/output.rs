use std::fmt::Write as _;
use std::io::Write as _;
use std::path::Path;

use anyhow::{Context, Result};
use serde::Serialize;
use tdg_core::{ConvexTargetD, Point2d};

/// 17 significant digits, enough to round-trip any `f64`.
pub fn num(v: f64) -> String {
    format!("{v:.16e}")
}

pub fn csv_row(out: &mut String, values: &[f64]) {
    let row: Vec<String> = values.iter().map(|v| num(*v)).collect();
    out.push_str(&row.join(","));
    out.push('\n');
}

pub fn to_json<T: Serialize>(value: &T) -> Result<String> {
    let mut s = serde_json::to_string_pretty(value).context("serializing report")?;
    s.push('\n');
    Ok(s)
}

/// Writes to `path`, or to stdout when there is none.
pub fn emit(path: Option<&Path>, text: &str) -> Result<()> {
    match path {
        Some(p) => write_file(p, text),
        None => {
            let mut stdout = std::io::stdout().lock();
            stdout
                .write_all(text.as_bytes())
                .context("writing to stdout")?;
            stdout.flush().context("writing to stdout")
        }
    }
}

pub fn write_file(path: &Path, text: &str) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    }
    std::fs::write(path, text).with_context(|| format!("writing {}", path.display()))
}

pub fn target_outline(target: &ConvexTargetD, n: usize) -> Vec<Point2d> {
    (0..n)
        .map(|k| target.boundary_point(std::f64::consts::TAU * k as f64 / n as f64))
        .collect()
}

/// Minimal SVG writer in world coordinates (y up).
pub struct Svg {
    min: Point2d,
    max: Point2d,
    body: String,
}

impl Svg {
    pub fn new(points: impl IntoIterator<Item = Point2d>) -> Self {
        let mut min = Point2d::new(f64::INFINITY, f64::INFINITY);
        let mut max = Point2d::new(f64::NEG_INFINITY, f64::NEG_INFINITY);
        for p in points {
            min = Point2d::new(min.x.min(p.x), min.y.min(p.y));
            max = Point2d::new(max.x.max(p.x), max.y.max(p.y));
        }
        if !min.x.is_finite() {
            min = Point2d::new(-1.0, -1.0);
            max = Point2d::new(1.0, 1.0);
        }
        let pad = 0.05 * (max.x - min.x).max(max.y - min.y).max(1e-6);
        Svg {
            min: Point2d::new(min.x - pad, min.y - pad),
            max: Point2d::new(max.x + pad, max.y + pad),
            body: String::new(),
        }
    }

    fn stroke(&self) -> f64 {
        0.004 * (self.max.x - self.min.x).max(self.max.y - self.min.y)
    }

    fn path_data(points: &[Point2d], closed: bool) -> String {
        let mut d = String::new();
        for (i, p) in points.iter().enumerate() {
            let _ = write!(
                d,
                "{}{:.6} {:.6} ",
                if i == 0 { "M" } else { "L" },
                p.x,
                -p.y
            );
        }
        if closed {
            d.push('Z');
        }
        d.trim_end().to_string()
    }

    pub fn path(&mut self, id: &str, points: &[Point2d], closed: bool, stroke: &str, fill: &str) {
        if points.is_empty() {
            return;
        }
        let _ = writeln!(
            self.body,
            r#"  <path id="{id}" d="{}" fill="{fill}" stroke="{stroke}" stroke-width="{:.6}"/>"#,
            Self::path_data(points, closed),
            self.stroke()
        );
    }

    pub fn circle(&mut self, id: &str, center: Point2d, radius: f64, stroke: &str, fill: &str) {
        let _ = writeln!(
            self.body,
            r#"  <circle id="{id}" cx="{:.6}" cy="{:.6}" r="{:.6}" fill="{fill}" stroke="{stroke}" stroke-width="{:.6}"/>"#,
            center.x,
            -center.y,
            radius,
            self.stroke()
        );
    }

    pub fn marker(&mut self, id: &str, at: Point2d, color: &str) {
        let r = 2.0 * self.stroke();
        self.circle(id, at, r, "none", color);
    }

    pub fn finish(self) -> String {
        let (w, h) = (self.max.x - self.min.x, self.max.y - self.min.y);
        format!(
            "<svg xmlns=\"http://www.w3.org/2000/svg\" viewBox=\"{:.6} {:.6} {:.6} {:.6}\" width=\"600\" height=\"{:.0}\">\n{}</svg>\n",
            self.min.x,
            -self.max.y,
            w,
            h,
            600.0 * h / w,
            self.body
        )
    }
}
