//! Complementary eCDFs, skew statistics, and simulated-vs-baseline overlays.

use std::fmt::Write as _;
use std::io::Write;

use serde::Serialize;
use thiserror::Error;

use crate::population::SizeDistribution;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum MetricsError {
    #[error("size distribution is empty")]
    EmptyInput,
    #[error("need at least two nonzero sizes, found {0}")]
    Degenerate(usize),
    #[error("failed to write output: {0}")]
    Io(String),
}

impl From<csv::Error> for MetricsError {
    fn from(e: csv::Error) -> Self {
        MetricsError::Io(e.to_string())
    }
}

impl From<std::io::Error> for MetricsError {
    fn from(e: std::io::Error) -> Self {
        MetricsError::Io(e.to_string())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EcdfPoint {
    pub size: u32,
    pub frac_at_least: f64,
}

/// Distinct sizes ascending, each with the fraction of communities at least
/// that large.
#[derive(Debug, Clone, PartialEq, Default, Serialize)]
pub struct EcdfCurve {
    pub points: Vec<EcdfPoint>,
}

impl EcdfCurve {
    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }
}

/// Complementary eCDF. With `drop_zeros`, size-0 communities are removed
/// before counting, so fractions are relative to nonzero communities; a
/// distribution of only zeros then yields an empty curve.
pub fn complementary_ecdf(
    dist: &SizeDistribution,
    drop_zeros: bool,
) -> Result<EcdfCurve, MetricsError> {
    if dist.is_empty() {
        return Err(MetricsError::EmptyInput);
    }
    let mut sizes: Vec<u32> = dist
        .sizes()
        .iter()
        .copied()
        .filter(|&s| !drop_zeros || s > 0)
        .collect();
    sizes.sort_unstable();
    let n = sizes.len();
    let mut points = Vec::new();
    let mut i = 0;
    while i < n {
        let size = sizes[i];
        points.push(EcdfPoint {
            size,
            frac_at_least: (n - i) as f64 / n as f64,
        });
        while i < n && sizes[i] == size {
            i += 1;
        }
    }
    Ok(EcdfCurve { points })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SkewSummary {
    pub gini: f64,
    pub max_size: u32,
    pub median_size: f64,
    /// Population standard deviation over mean.
    pub cv: f64,
    /// R² of a least-squares line through the log-log complementary eCDF
    /// (zeros dropped, distinct sizes). 0 when the curve has one point.
    pub loglog_r2: f64,
}

/// Gini coefficient from sorted ranks:
/// `2 * sum(i * x_i) / (n * sum(x)) - (n + 1) / n` over ascending `x`.
/// Zero sizes are included. Returns 0 for an all-zero input.
pub fn gini(sizes: &[u32]) -> f64 {
    let n = sizes.len();
    if n == 0 {
        return 0.0;
    }
    let mut sorted = sizes.to_vec();
    sorted.sort_unstable();
    let total: f64 = sorted.iter().map(|&x| f64::from(x)).sum();
    if total == 0.0 {
        return 0.0;
    }
    let weighted: f64 = sorted
        .iter()
        .enumerate()
        .map(|(i, &x)| (i as f64 + 1.0) * f64::from(x))
        .sum();
    let n = n as f64;
    2.0 * weighted / (n * total) - (n + 1.0) / n
}

/// Midpoint median; 0 for an empty input.
pub fn median(sizes: &[u32]) -> f64 {
    if sizes.is_empty() {
        return 0.0;
    }
    let mut sorted = sizes.to_vec();
    sorted.sort_unstable();
    let mid = sorted.len() / 2;
    if sorted.len() % 2 == 1 {
        f64::from(sorted[mid])
    } else {
        (f64::from(sorted[mid - 1]) + f64::from(sorted[mid])) / 2.0
    }
}

pub fn loglog_r2(curve: &EcdfCurve) -> f64 {
    let pts: Vec<(f64, f64)> = curve
        .points
        .iter()
        .filter(|p| p.size > 0)
        .map(|p| (f64::from(p.size).ln(), p.frac_at_least.ln()))
        .collect();
    if pts.len() < 2 {
        return 0.0;
    }
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let (mut sxx, mut sxy, mut syy) = (0.0, 0.0, 0.0);
    for &(x, y) in &pts {
        sxx += (x - mx) * (x - mx);
        sxy += (x - mx) * (y - my);
        syy += (y - my) * (y - my);
    }
    if sxx == 0.0 || syy == 0.0 {
        return 0.0;
    }
    (sxy * sxy / (sxx * syy)).clamp(0.0, 1.0)
}

pub fn skew_summary(dist: &SizeDistribution) -> Result<SkewSummary, MetricsError> {
    if dist.is_empty() {
        return Err(MetricsError::EmptyInput);
    }
    let nonzero = dist.nonzero();
    if nonzero < 2 {
        return Err(MetricsError::Degenerate(nonzero));
    }
    let sizes = dist.sizes();
    let n = sizes.len() as f64;
    let mean = sizes.iter().map(|&x| f64::from(x)).sum::<f64>() / n;
    let var = sizes
        .iter()
        .map(|&x| (f64::from(x) - mean).powi(2))
        .sum::<f64>()
        / n;
    let curve = complementary_ecdf(dist, true)?;
    Ok(SkewSummary {
        gini: gini(sizes),
        max_size: dist.max(),
        median_size: median(sizes),
        cv: var.sqrt() / mean,
        loglog_r2: loglog_r2(&curve),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Series {
    Sim,
    Baseline,
}

impl Series {
    pub fn as_str(self) -> &'static str {
        match self {
            Series::Sim => "sim",
            Series::Baseline => "baseline",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct OverlayRow {
    pub series: Series,
    pub size: u32,
    pub frac_at_least: f64,
}

/// Both curves as long-format rows, simulated first. Values are copied
/// unchanged.
pub fn overlay(sim: &EcdfCurve, baseline: &EcdfCurve) -> Vec<OverlayRow> {
    let rows = |series, curve: &EcdfCurve| {
        curve
            .points
            .iter()
            .map(move |p| OverlayRow {
                series,
                size: p.size,
                frac_at_least: p.frac_at_least,
            })
            .collect::<Vec<_>>()
    };
    let mut out = rows(Series::Sim, sim);
    out.extend(rows(Series::Baseline, baseline));
    out
}

/// CSV `series,size,frac_at_least`.
pub fn write_overlay_csv<W: Write>(rows: &[OverlayRow], out: W) -> Result<(), MetricsError> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["series", "size", "frac_at_least"])?;
    for r in rows {
        w.write_record([
            r.series.as_str().to_string(),
            r.size.to_string(),
            r.frac_at_least.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// CSV `series,size,frac_at_least` for a single curve.
pub fn write_ecdf_csv<W: Write>(series: &str, curve: &EcdfCurve, out: W) -> Result<(), MetricsError> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["series", "size", "frac_at_least"])?;
    for p in &curve.points {
        w.write_record([series.to_string(), p.size.to_string(), p.frac_at_least.to_string()])?;
    }
    w.flush()?;
    Ok(())
}

/// One row of the summary table.
#[derive(Debug, Clone, Serialize)]
pub struct SummaryRow {
    pub cell_id: usize,
    pub replicate: u32,
    pub summary: Option<SkewSummary>,
}

/// CSV `cell_id,replicate,gini,max,median,cv,loglog_r2`; degenerate cells
/// get empty statistic fields.
pub fn write_summary_csv<W: Write>(rows: &[SummaryRow], out: W) -> Result<(), MetricsError> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["cell_id", "replicate", "gini", "max", "median", "cv", "loglog_r2"])?;
    for r in rows {
        let mut rec = vec![r.cell_id.to_string(), r.replicate.to_string()];
        match &r.summary {
            Some(s) => rec.extend([
                s.gini.to_string(),
                s.max_size.to_string(),
                s.median_size.to_string(),
                s.cv.to_string(),
                s.loglog_r2.to_string(),
            ]),
            None => rec.extend(std::iter::repeat_n(String::new(), 5)),
        }
        w.write_record(&rec)?;
    }
    w.flush()?;
    Ok(())
}

/// One panel of an overlay figure.
#[derive(Debug, Clone)]
pub struct Panel {
    pub title: String,
    pub sim: EcdfCurve,
    pub baseline: Option<EcdfCurve>,
}

/// Renders panels as a grid of log-log step plots in SVG: simulated curve in
/// blue, baseline in red-orange.
pub fn render_svg(panels: &[Panel], columns: usize) -> String {
    const W: f64 = 220.0;
    const H: f64 = 180.0;
    const PAD: f64 = 36.0;
    let columns = columns.max(1);
    let rows = panels.len().div_ceil(columns).max(1);

    let curves = || {
        panels
            .iter()
            .flat_map(|p| std::iter::once(&p.sim).chain(p.baseline.as_ref()))
    };
    let max_size = curves()
        .flat_map(|c| c.points.iter().map(|p| p.size))
        .max()
        .unwrap_or(1)
        .max(2);
    let min_frac = curves()
        .flat_map(|c| c.points.iter().map(|p| p.frac_at_least))
        .fold(1.0f64, f64::min)
        .max(1e-12);
    let x_max = f64::from(max_size).log10().ceil().max(1.0);
    let y_min = min_frac.log10().floor().min(-1.0);

    let mut svg = String::new();
    let _ = writeln!(
        svg,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{}" height="{}" font-family="sans-serif" font-size="10">"#,
        columns as f64 * W,
        rows as f64 * H
    );
    for (i, panel) in panels.iter().enumerate() {
        let ox = (i % columns) as f64 * W + PAD;
        let oy = (i / columns) as f64 * H + 18.0;
        let pw = W - PAD - 10.0;
        let ph = H - 18.0 - 26.0;
        let sx = |size: f64| ox + (size.max(1.0).log10() / x_max) * pw;
        let sy = |frac: f64| oy + (frac.log10() / y_min) * ph;
        let _ = writeln!(
            svg,
            r##"<rect x="{ox:.1}" y="{oy:.1}" width="{pw:.1}" height="{ph:.1}" fill="none" stroke="#888"/>"##
        );
        let _ = writeln!(
            svg,
            r#"<text x="{:.1}" y="{:.1}" text-anchor="middle">{}</text>"#,
            ox + pw / 2.0,
            oy - 5.0,
            escape(&panel.title)
        );
        let _ = writeln!(
            svg,
            r#"<text x="{:.1}" y="{:.1}" text-anchor="middle">1 … 1e{x_max}</text>"#,
            ox + pw / 2.0,
            oy + ph + 14.0
        );
        let mut draw = |curve: &EcdfCurve, color: &str| {
            if curve.points.is_empty() {
                return;
            }
            let mut d = String::new();
            for (j, p) in curve.points.iter().enumerate() {
                let x = sx(f64::from(p.size));
                let y = sy(p.frac_at_least);
                let _ = write!(d, "{}{x:.2},{y:.2} ", if j == 0 { "M" } else { "L" });
            }
            let _ = writeln!(
                svg,
                r#"<path d="{}" fill="none" stroke="{color}" stroke-width="1.2"/>"#,
                d.trim_end()
            );
        };
        if let Some(b) = &panel.baseline {
            draw(b, "#e4572e");
        }
        draw(&panel.sim, "#1f5fbf");
    }
    svg.push_str("</svg>\n");
    svg
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}
