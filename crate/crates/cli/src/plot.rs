//! Minimal SVG line plots of the sweep CSVs: one polyline per curve for the
//! analytic column, Monte-Carlo markers with 95% error bars when present.

use std::fmt::Write as _;
use std::path::Path;

use fascache::mc::SweepAxis;

use crate::CliError;

const WIDTH: f64 = 720.0;
const HEIGHT: f64 = 480.0;
const LEFT: f64 = 80.0;
const RIGHT: f64 = 180.0;
const TOP: f64 = 40.0;
const BOTTOM: f64 = 60.0;
const PALETTE: [&str; 6] = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#17becf"];

#[derive(Debug, Clone, PartialEq)]
pub struct PlotStyle {
    pub title: String,
    pub x_label: String,
    pub log_x: bool,
}

impl PlotStyle {
    pub fn for_axis(title: &str, axis: Option<SweepAxis>) -> Self {
        let (x_label, log_x) = match axis {
            Some(SweepAxis::EtaDb) => ("η (dB)", false),
            Some(SweepAxis::MuS) => ("μ_S (m⁻²)", true),
            Some(SweepAxis::QScalar) => ("caching probability q", false),
            Some(SweepAxis::M) => ("ARQ rounds M", false),
            Some(SweepAxis::N) => ("ports N", false),
            Some(SweepAxis::W) => ("aperture W (λ)", false),
            None => ("axis value", false),
        };
        Self { title: title.to_string(), x_label: x_label.to_string(), log_x }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PlotSummary {
    pub curves: usize,
    pub points: usize,
    pub mc_points: usize,
}

#[derive(Debug, Default)]
struct Series {
    label: String,
    line: Vec<(f64, f64)>,
    marks: Vec<(f64, f64, f64)>,
}

fn cell(record: &csv::StringRecord, idx: Option<usize>) -> Option<f64> {
    let s = record.get(idx?)?.trim();
    let v: f64 = s.parse().ok()?;
    v.is_finite().then_some(v)
}

/// Renders `csv_path` into an SVG at `out_path`.
pub fn emit_plot(csv_path: &Path, style: &PlotStyle, out_path: &Path) -> Result<PlotSummary, CliError> {
    let mut reader = csv::Reader::from_path(csv_path).map_err(|e| CliError::Plot(format!("{}: {e}", csv_path.display())))?;
    let headers = reader.headers().map_err(|e| CliError::Plot(e.to_string()))?.clone();
    let col = |name: &str| headers.iter().position(|h| h == name);
    let (curve_col, x_col) = match (col("curve"), col("axis_value")) {
        (Some(c), Some(x)) => (c, x),
        _ => return Err(CliError::Plot("expected `curve` and `axis_value` columns".into())),
    };
    let (y_col, mc_col, ci_col, y_label) = if let Some(y) = col("scdp_analytic_gl") {
        (Some(y), col("scdp_mc"), col("mc_ci95"), "SCDP")
    } else if let Some(y) = col("cdd_analytic_ms") {
        (Some(y), col("cdd_mc_ms"), col("mc_ci95"), "CDD (ms)")
    } else if let Some(m) = col("scdp_mc") {
        (None, Some(m), col("scdp_ci95"), "SCDP (Monte-Carlo)")
    } else {
        return Err(CliError::Plot("no analytic or Monte-Carlo column to plot".into()));
    };

    let mut series: Vec<Series> = Vec::new();
    let mut rows = 0;
    for record in reader.records() {
        let record = record.map_err(|e| CliError::Plot(e.to_string()))?;
        rows += 1;
        let label = record.get(curve_col).unwrap_or_default();
        let Some(x) = cell(&record, Some(x_col)) else { continue };
        let idx = match series.iter().position(|s| s.label == label) {
            Some(i) => i,
            None => {
                series.push(Series { label: label.to_string(), ..Series::default() });
                series.len() - 1
            }
        };
        let s = &mut series[idx];
        if let Some(y) = cell(&record, y_col) {
            s.line.push((x, y));
        }
        if let Some(m) = cell(&record, mc_col) {
            s.marks.push((x, m, cell(&record, ci_col).unwrap_or(0.0)));
        }
    }
    if rows == 0 {
        return Err(CliError::Plot(format!("{} has no data rows", csv_path.display())));
    }
    let points: usize = series.iter().map(|s| s.line.len()).sum();
    let mc_points: usize = series.iter().map(|s| s.marks.len()).sum();
    if points + mc_points == 0 {
        return Err(CliError::Plot(format!("{} has no finite values to plot", csv_path.display())));
    }
    if mc_points == 0 {
        log::warn!("{}: no Monte-Carlo values, plotting analytic curves only", csv_path.display());
    }

    let svg = render(style, y_label, &series);
    std::fs::write(out_path, svg)?;
    Ok(PlotSummary { curves: series.len(), points, mc_points })
}

struct Scale {
    lo: f64,
    hi: f64,
    log: bool,
    from: f64,
    to: f64,
}

impl Scale {
    fn map(&self, v: f64) -> f64 {
        let (v, lo, hi) = if self.log { (v.log10(), self.lo.log10(), self.hi.log10()) } else { (v, self.lo, self.hi) };
        self.from + (v - lo) / (hi - lo) * (self.to - self.from)
    }

    fn ticks(&self) -> Vec<f64> {
        if self.log {
            let (a, b) = (self.lo.log10().floor() as i32, self.hi.log10().ceil() as i32);
            return (a..=b).map(|e| 10f64.powi(e)).filter(|t| *t >= self.lo * 0.999 && *t <= self.hi * 1.001).collect();
        }
        let raw = (self.hi - self.lo) / 5.0;
        let mag = 10f64.powf(raw.log10().floor());
        let step = [1.0, 2.0, 5.0, 10.0].iter().map(|m| m * mag).find(|s| *s >= raw).unwrap_or(mag * 10.0);
        let mut t = (self.lo / step).ceil() * step;
        let mut out = Vec::new();
        while t <= self.hi + 1e-9 * step {
            out.push(if t.abs() < 1e-12 * step { 0.0 } else { t });
            t += step;
        }
        out
    }
}

fn bounds(vals: impl Iterator<Item = f64>, log: bool) -> (f64, f64) {
    let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
    for v in vals.filter(|v| !log || *v > 0.0) {
        lo = lo.min(v);
        hi = hi.max(v);
    }
    if !lo.is_finite() {
        return (0.0, 1.0);
    }
    if hi - lo <= f64::EPSILON * hi.abs().max(1.0) {
        let pad = if log { lo * 0.5 } else { lo.abs().max(1.0) * 0.05 };
        return (lo - pad, hi + pad);
    }
    (lo, hi)
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

fn render(style: &PlotStyle, y_label: &str, series: &[Series]) -> String {
    let xs = series.iter().flat_map(|s| s.line.iter().map(|p| p.0).chain(s.marks.iter().map(|m| m.0)));
    let (x_lo, x_hi) = bounds(xs, style.log_x);
    let ys = series
        .iter()
        .flat_map(|s| s.line.iter().map(|p| p.1).chain(s.marks.iter().flat_map(|m| [m.1 - m.2, m.1 + m.2])));
    let (y_lo, y_hi) = bounds(ys, false);
    let pad = 0.05 * (y_hi - y_lo);
    let x = Scale { lo: x_lo, hi: x_hi, log: style.log_x, from: LEFT, to: WIDTH - RIGHT };
    let y = Scale { lo: y_lo - pad, hi: y_hi + pad, log: false, from: HEIGHT - BOTTOM, to: TOP };

    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(s, r#"<rect width="100%" height="100%" fill="white"/>"#);
    let _ = writeln!(s, r#"<text x="{}" y="22" text-anchor="middle" font-size="15">{}</text>"#, (LEFT + WIDTH - RIGHT) / 2.0, escape(&style.title));
    let (x0, x1, y0, y1) = (LEFT, WIDTH - RIGHT, HEIGHT - BOTTOM, TOP);
    let _ = writeln!(s, r#"<rect x="{x0}" y="{y1}" width="{}" height="{}" fill="none" stroke="black"/>"#, x1 - x0, y0 - y1);
    for t in x.ticks() {
        let px = x.map(t);
        let _ = writeln!(s, r##"<line x1="{px:.2}" y1="{y0}" x2="{px:.2}" y2="{y1}" stroke="#ddd"/>"##);
        let _ = writeln!(s, r#"<text x="{px:.2}" y="{}" text-anchor="middle">{}</text>"#, y0 + 16.0, tick_label(t, style.log_x));
    }
    for t in y.ticks() {
        let py = y.map(t);
        let _ = writeln!(s, r##"<line x1="{x0}" y1="{py:.2}" x2="{x1}" y2="{py:.2}" stroke="#ddd"/>"##);
        let _ = writeln!(s, r#"<text x="{}" y="{:.2}" text-anchor="end">{}</text>"#, x0 - 6.0, py + 4.0, tick_label(t, false));
    }
    let _ = writeln!(s, r#"<text x="{}" y="{}" text-anchor="middle">{}</text>"#, (x0 + x1) / 2.0, HEIGHT - 18.0, escape(&style.x_label));
    let _ = writeln!(
        s,
        r#"<text x="20" y="{0}" text-anchor="middle" transform="rotate(-90 20 {0})">{1}</text>"#,
        (y0 + y1) / 2.0,
        escape(y_label)
    );

    for (i, ser) in series.iter().enumerate() {
        let color = PALETTE[i % PALETTE.len()];
        if ser.line.len() > 1 {
            let pts: Vec<String> = ser.line.iter().map(|&(a, b)| format!("{:.2},{:.2}", x.map(a), y.map(b))).collect();
            let _ = writeln!(s, r#"<polyline fill="none" stroke="{color}" stroke-width="2" points="{}"/>"#, pts.join(" "));
        } else if let Some(&(a, b)) = ser.line.first() {
            let _ = writeln!(s, r#"<circle cx="{:.2}" cy="{:.2}" r="3" fill="{color}"/>"#, x.map(a), y.map(b));
        }
        for &(a, m, ci) in &ser.marks {
            let (px, py) = (x.map(a), y.map(m));
            if ci > 0.0 {
                let _ = writeln!(
                    s,
                    r#"<line x1="{px:.2}" y1="{:.2}" x2="{px:.2}" y2="{:.2}" stroke="{color}"/>"#,
                    y.map(m - ci),
                    y.map(m + ci)
                );
            }
            let _ = writeln!(
                s,
                r#"<rect x="{:.2}" y="{:.2}" width="6" height="6" fill="none" stroke="{color}"/>"#,
                px - 3.0,
                py - 3.0
            );
        }
        let ly = TOP + 10.0 + 20.0 * i as f64;
        let lx = WIDTH - RIGHT + 12.0;
        let _ = writeln!(s, r#"<line x1="{lx}" y1="{ly}" x2="{}" y2="{ly}" stroke="{color}" stroke-width="2"/>"#, lx + 22.0);
        let _ = writeln!(s, r#"<text x="{}" y="{}">{}</text>"#, lx + 28.0, ly + 4.0, escape(&ser.label));
    }
    s.push_str("</svg>\n");
    s
}

fn tick_label(t: f64, log: bool) -> String {
    if log {
        format!("1e{}", t.log10().round() as i32)
    } else {
        let s = format!("{t:.4}");
        s.trim_end_matches('0').trim_end_matches('.').to_string()
    }
}
