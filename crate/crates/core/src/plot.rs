//! Log-log SVG figures of logical error rates and pseudo-thresholds.
//!
//! Output depends only on the inputs, so a figure regenerates byte for byte.

use std::fmt::Write as _;

use crate::ansatz::{eval_ansatz, FitResult};
use crate::montecarlo::CsvRow;

const WIDTH: f64 = 640.0;
const HEIGHT: f64 = 480.0;
const LEFT: f64 = 80.0;
const RIGHT: f64 = 150.0;
const TOP: f64 = 40.0;
const BOTTOM: f64 = 60.0;
const PALETTE: [&str; 8] = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b", "#e377c2", "#17becf"];

/// Axis-aligned log-log frame.
#[derive(Clone, Copy, Debug)]
pub struct LogAxes {
    pub x: (f64, f64),
    pub y: (f64, f64),
}

impl LogAxes {
    pub fn map(&self, x: f64, y: f64) -> (f64, f64) {
        let fx = (x.log10() - self.x.0.log10()) / (self.x.1.log10() - self.x.0.log10());
        let fy = (y.log10() - self.y.0.log10()) / (self.y.1.log10() - self.y.0.log10());
        (LEFT + fx * (WIDTH - LEFT - RIGHT), HEIGHT - BOTTOM - fy * (HEIGHT - TOP - BOTTOM))
    }

    fn contains(&self, x: f64, y: f64) -> bool {
        x >= self.x.0 && x <= self.x.1 && y >= self.y.0 && y <= self.y.1
    }
}

fn decades(lo: f64, hi: f64) -> (f64, f64) {
    (10f64.powf(lo.log10().floor()), 10f64.powf(hi.log10().ceil()))
}

fn header(s: &mut String, title: &str) {
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(s, r#"<rect width="100%" height="100%" fill="white"/>"#);
    let _ = writeln!(s, r#"<text x="{}" y="24" text-anchor="middle" font-size="14">{}</text>"#, WIDTH / 2.0, escape(title));
}

fn escape(t: &str) -> String {
    t.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

fn frame(s: &mut String, axes: &LogAxes, x_label: &str, y_label: &str) {
    let (x0, y0) = axes.map(axes.x.0, axes.y.0);
    let (x1, y1) = axes.map(axes.x.1, axes.y.1);
    let _ = writeln!(s, r#"<rect x="{x0:.2}" y="{y1:.2}" width="{:.2}" height="{:.2}" fill="none" stroke="black"/>"#, x1 - x0, y0 - y1);
    let mut e = axes.x.0.log10().round() as i32;
    while (e as f64) <= axes.x.1.log10().round() {
        let (px, _) = axes.map(10f64.powi(e), axes.y.0);
        let _ = writeln!(s, r#"<line x1="{px:.2}" y1="{y0:.2}" x2="{px:.2}" y2="{:.2}" stroke="black"/>"#, y0 + 5.0);
        let _ = writeln!(s, r#"<text x="{px:.2}" y="{:.2}" text-anchor="middle">1e{e}</text>"#, y0 + 20.0);
        e += 1;
    }
    let mut e = axes.y.0.log10().round() as i32;
    while (e as f64) <= axes.y.1.log10().round() {
        let (_, py) = axes.map(axes.x.0, 10f64.powi(e));
        let _ = writeln!(s, r#"<line x1="{:.2}" y1="{py:.2}" x2="{x0:.2}" y2="{py:.2}" stroke="black"/>"#, x0 - 5.0);
        let _ = writeln!(s, r#"<text x="{:.2}" y="{:.2}" text-anchor="end">1e{e}</text>"#, x0 - 8.0, py + 4.0);
        e += 1;
    }
    let _ = writeln!(s, r#"<text x="{:.2}" y="{:.2}" text-anchor="middle">{}</text>"#, (x0 + x1) / 2.0, HEIGHT - 15.0, escape(x_label));
    let _ = writeln!(
        s,
        r#"<text x="20" y="{:.2}" text-anchor="middle" transform="rotate(-90 20 {:.2})">{}</text>"#,
        (y0 + y1) / 2.0,
        (y0 + y1) / 2.0,
        escape(y_label)
    );
}

fn polyline(s: &mut String, axes: &LogAxes, pts: &[(f64, f64)], color: &str, dash: Option<&str>) {
    let inside: Vec<String> = pts
        .iter()
        .filter(|&&(x, y)| axes.contains(x, y))
        .map(|&(x, y)| {
            let (px, py) = axes.map(x, y);
            format!("{px:.2},{py:.2}")
        })
        .collect();
    if inside.len() < 2 {
        return;
    }
    let dash = dash.map(|d| format!(r#" stroke-dasharray="{d}""#)).unwrap_or_default();
    let _ = writeln!(s, r#"<polyline points="{}" fill="none" stroke="{color}" stroke-width="1.5"{dash}/>"#, inside.join(" "));
}

fn log_grid(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    (0..=n).map(|i| lo * (hi / lo).powf(i as f64 / n as f64)).collect()
}

fn legend(s: &mut String, row: usize, color: &str, label: &str) {
    let x = WIDTH - RIGHT + 15.0;
    let y = TOP + 20.0 + 18.0 * row as f64;
    let _ = writeln!(s, r#"<line x1="{x:.2}" y1="{y:.2}" x2="{:.2}" y2="{y:.2}" stroke="{color}" stroke-width="2"/>"#, x + 20.0);
    let _ = writeln!(s, r#"<text x="{:.2}" y="{:.2}">{}</text>"#, x + 26.0, y + 4.0, escape(label));
}

fn asterisk(s: &mut String, px: f64, py: f64, color: &str) {
    for k in 0..3 {
        let a = std::f64::consts::PI * k as f64 / 3.0;
        let (dx, dy) = (6.0 * a.cos(), 6.0 * a.sin());
        let _ = writeln!(
            s,
            r#"<line x1="{:.2}" y1="{:.2}" x2="{:.2}" y2="{:.2}" stroke="{color}" stroke-width="2"/>"#,
            px - dx,
            py - dy,
            px + dx,
            py + dy
        );
    }
}

pub struct Figure {
    pub svg: String,
    pub warnings: Vec<String>,
}

/// Options for the per-partition `p_L` figure.
#[derive(Clone, Copy, Debug)]
pub struct RatePlotOptions {
    pub n_qpu: usize,
    /// Break-even multiplier of the dotted line `p_L = k p`.
    pub k: f64,
    /// Lower end of the dashed extrapolation.
    pub p_extrapolate: f64,
}

/// `p_L` against `p` per alpha: data with Wilson bars, fitted curves solid
/// over the sampled range and dashed below it, the break-even line dotted and
/// pseudo-thresholds as asterisks.
pub fn rate_plot(rows: &[CsvRow], fit: Option<&FitResult<f64>>, alphas: &[f64], opts: RatePlotOptions) -> Figure {
    let mut warnings = Vec::new();
    let rows: Vec<&CsvRow> = rows.iter().filter(|r| r.n_qpu == opts.n_qpu).collect();
    if fit.is_none() {
        warnings.push(format!("no fit for {} QPUs; plotting data only", opts.n_qpu));
    }
    let positive: Vec<&&CsvRow> = rows.iter().filter(|r| r.per_cycle > 0.0).collect();
    let p_lo = rows.iter().map(|r| r.p).fold(opts.p_extrapolate, f64::min);
    let p_hi = rows.iter().map(|r| r.p).fold(opts.p_extrapolate, f64::max);
    let mut y_lo = positive.iter().map(|r| r.ci_low.max(r.per_cycle * 0.1)).fold(f64::INFINITY, f64::min);
    let mut y_hi = positive.iter().map(|r| r.ci_high).fold(opts.k * p_hi, f64::max);
    if let Some(f) = fit {
        for &a in alphas {
            y_lo = y_lo.min(eval_ansatz(&f.params, p_lo, a));
        }
    }
    if !y_lo.is_finite() || y_lo <= 0.0 {
        y_lo = 1e-6;
    }
    y_lo = y_lo.max(1e-15);
    y_hi = y_hi.max(y_lo * 10.0);
    let (x0, x1) = decades(p_lo, p_hi);
    let (yd0, yd1) = decades(y_lo, y_hi);
    let axes = LogAxes { x: (x0, x1), y: (yd0, yd1) };
    let mut s = String::new();
    header(&mut s, &format!("Logical error rate per cycle, {} QPUs", opts.n_qpu));
    frame(&mut s, &axes, "physical error rate p", "logical error rate per cycle p_L");
    polyline(&mut s, &axes, &log_grid(x0, x1, 64).into_iter().map(|p| (p, opts.k * p)).collect::<Vec<_>>(), "black", Some("2,4"));
    let mut legend_row = 0;
    for (i, &a) in alphas.iter().enumerate() {
        let color = PALETTE[i % PALETTE.len()];
        let series: Vec<&&CsvRow> = rows.iter().filter(|r| r.alpha == a).collect();
        if series.is_empty() {
            warnings.push(format!("no data for alpha = {a} at {} QPUs; series skipped", opts.n_qpu));
            continue;
        }
        legend(&mut s, legend_row, color, &format!("alpha = {a}"));
        legend_row += 1;
        for r in series.iter().filter(|r| r.per_cycle > 0.0) {
            let (px, py) = axes.map(r.p, r.per_cycle);
            let (_, lo) = axes.map(r.p, r.ci_low.max(axes.y.0));
            let (_, hi) = axes.map(r.p, r.ci_high.min(axes.y.1));
            let _ = writeln!(s, r#"<line x1="{px:.2}" y1="{lo:.2}" x2="{px:.2}" y2="{hi:.2}" stroke="{color}"/>"#);
            let _ = writeln!(s, r#"<circle cx="{px:.2}" cy="{py:.2}" r="3.5" fill="{color}"/>"#);
        }
        if let Some(f) = fit {
            let s_lo = series.iter().map(|r| r.p).fold(f64::INFINITY, f64::min);
            let s_hi = series.iter().map(|r| r.p).fold(0.0, f64::max);
            let curve = |lo: f64, hi: f64| -> Vec<(f64, f64)> {
                log_grid(lo, hi, 64).into_iter().map(|p| (p, eval_ansatz(&f.params, p, a))).collect()
            };
            polyline(&mut s, &axes, &curve(s_lo, s_hi), color, None);
            if opts.p_extrapolate < s_lo {
                polyline(&mut s, &axes, &curve(opts.p_extrapolate, s_lo), color, Some("6,4"));
            }
            if let Some(p0) = f.per_alpha.iter().find(|x| x.alpha == a).and_then(|x| x.p0) {
                if axes.contains(p0, opts.k * p0) {
                    let (px, py) = axes.map(p0, opts.k * p0);
                    asterisk(&mut s, px, py, color);
                }
            }
        }
    }
    legend(&mut s, legend_row, "black", &format!("p_L = {} p", opts.k));
    s.push_str("</svg>\n");
    Figure { svg: s, warnings }
}

/// Pseudo-threshold against alpha, one series per partition, linear alpha
/// axis and logarithmic threshold axis.
pub fn threshold_plot(fits: &[(usize, FitResult<f64>)]) -> Figure {
    let mut warnings = Vec::new();
    let pts: Vec<(usize, Vec<(f64, f64)>)> = fits
        .iter()
        .map(|(n, f)| (*n, f.per_alpha.iter().filter_map(|a| a.p0.map(|p| (a.alpha, p))).collect()))
        .collect();
    let all: Vec<(f64, f64)> = pts.iter().flat_map(|(_, v)| v.iter().copied()).collect();
    let mut s = String::new();
    header(&mut s, "Pseudo-threshold against nonlocal noise factor");
    if all.is_empty() {
        warnings.push("no pseudo-thresholds to plot".into());
        s.push_str("</svg>\n");
        return Figure { svg: s, warnings };
    }
    let a_lo = all.iter().map(|p| p.0).fold(f64::INFINITY, f64::min);
    let a_hi = all.iter().map(|p| p.0).fold(f64::NEG_INFINITY, f64::max).max(a_lo + 1.0);
    let (y0, y1) = decades(
        all.iter().map(|p| p.1).fold(f64::INFINITY, f64::min),
        all.iter().map(|p| p.1).fold(0.0, f64::max) * 1.01,
    );
    let ax = |a: f64, p: f64| -> (f64, f64) {
        let fx = (a - a_lo) / (a_hi - a_lo);
        let fy = (p.log10() - y0.log10()) / (y1.log10() - y0.log10());
        (LEFT + fx * (WIDTH - LEFT - RIGHT), HEIGHT - BOTTOM - fy * (HEIGHT - TOP - BOTTOM))
    };
    let (bx0, by0) = ax(a_lo, y0);
    let (bx1, by1) = ax(a_hi, y1);
    let _ = writeln!(s, r#"<rect x="{bx0:.2}" y="{by1:.2}" width="{:.2}" height="{:.2}" fill="none" stroke="black"/>"#, bx1 - bx0, by0 - by1);
    let ticks: Vec<f64> = {
        let mut v: Vec<f64> = all.iter().map(|p| p.0).collect();
        v.sort_by(|a, b| a.partial_cmp(b).unwrap());
        v.dedup();
        v
    };
    for a in ticks {
        let (px, _) = ax(a, y0);
        let _ = writeln!(s, r#"<text x="{px:.2}" y="{:.2}" text-anchor="middle">{a}</text>"#, by0 + 20.0);
    }
    let mut e = y0.log10().round() as i32;
    while (e as f64) <= y1.log10().round() {
        let (_, py) = ax(a_lo, 10f64.powi(e));
        let _ = writeln!(s, r#"<text x="{:.2}" y="{:.2}" text-anchor="end">1e{e}</text>"#, bx0 - 8.0, py + 4.0);
        e += 1;
    }
    let _ = writeln!(s, r#"<text x="{:.2}" y="{:.2}" text-anchor="middle">alpha</text>"#, (bx0 + bx1) / 2.0, HEIGHT - 15.0);
    let _ = writeln!(s, r#"<text x="20" y="{:.2}" text-anchor="middle" transform="rotate(-90 20 {:.2})">p0</text>"#, (by0 + by1) / 2.0, (by0 + by1) / 2.0);
    for (i, (n, series)) in pts.iter().enumerate() {
        let color = PALETTE[i % PALETTE.len()];
        if series.is_empty() {
            warnings.push(format!("no pseudo-thresholds for {n} QPUs; series skipped"));
            continue;
        }
        let coords: Vec<String> = series
            .iter()
            .map(|&(a, p)| {
                let (px, py) = ax(a, p);
                format!("{px:.2},{py:.2}")
            })
            .collect();
        let _ = writeln!(s, r#"<polyline points="{}" fill="none" stroke="{color}" stroke-width="1.5"/>"#, coords.join(" "));
        for &(a, p) in series {
            let (px, py) = ax(a, p);
            asterisk(&mut s, px, py, color);
        }
        legend(&mut s, i, color, &format!("{n} QPUs"));
    }
    s.push_str("</svg>\n");
    Figure { svg: s, warnings }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ansatz::{fit_quadratic_alpha, AnsatzParams, DataPoint, Weighting};
    use crate::montecarlo::RunStats;

    fn reference_fit() -> FitResult<f64> {
        let truth = AnsatzParams::from_alpha_samples(
            10.0,
            &[
                (1.0, [17.532268, 1541.451577, -1.139137e5]),
                (3.0, [19.827294, 2734.133122, -3.199404e5]),
                (7.0, [22.407817, 5666.564507, -1.339832e6]),
            ],
        )
        .unwrap();
        let mut data = Vec::new();
        for a in [1.0, 3.0, 5.0, 7.0] {
            for p in [0.001, 0.002, 0.004, 0.006, 0.008, 0.01] {
                data.push(DataPoint::new(p, a, truth.eval(p, a)));
            }
        }
        fit_quadratic_alpha(&data, 10.0, 12.0, Weighting::Unweighted).unwrap()
    }

    fn rows() -> Vec<CsvRow> {
        [(0.003, 1.0, 40), (0.005, 1.0, 500), (0.003, 3.0, 200)]
            .iter()
            .map(|&(p, alpha, failures)| {
                RunStats { p, alpha, n_qpu: 12, n_cycles: 12, trials: 3000, failures, x_failures: 0, z_failures: 0, osd_calls: 0, seed: 1 }
                    .csv_row()
            })
            .collect()
    }

    const OPTS: RatePlotOptions = RatePlotOptions { n_qpu: 12, k: 12.0, p_extrapolate: 1e-4 };

    #[test]
    fn figures_are_deterministic() {
        let f = reference_fit();
        let a = rate_plot(&rows(), Some(&f), &[1.0, 3.0], OPTS);
        let b = rate_plot(&rows(), Some(&f), &[1.0, 3.0], OPTS);
        assert_eq!(a.svg, b.svg);
        assert!(a.svg.starts_with("<svg") && a.svg.ends_with("</svg>\n"));
        assert!(a.svg.contains("stroke-dasharray=\"6,4\""));
        assert!(a.svg.contains("stroke-dasharray=\"2,4\""));
        assert!(a.warnings.is_empty());
    }

    #[test]
    fn break_even_line_has_unit_slope() {
        let axes = LogAxes { x: (1e-4, 1e-2), y: (1e-6, 1.0) };
        let (x1, y1) = axes.map(1e-4, 12e-4);
        let (x2, y2) = axes.map(1e-2, 12e-2);
        let per_decade_x = (x2 - x1) / 2.0;
        let per_decade_y = (y1 - y2) / 2.0;
        let (xa, _) = axes.map(1e-3, 1.0);
        let (xb, _) = axes.map(1e-2, 1.0);
        let (_, ya) = axes.map(1e-3, 1e-3);
        let (_, yb) = axes.map(1e-3, 1e-2);
        assert!(((per_decade_y / (ya - yb)) - (per_decade_x / (xb - xa))).abs() < 1e-12);
        let (_, y_unit) = axes.map(1e-3, 1e-3);
        let (_, y_k) = axes.map(1e-3, 12e-3);
        assert!(((y_unit - y_k) / (ya - yb) - 12f64.log10()).abs() < 1e-12);
    }

    #[test]
    fn threshold_marker_near_reference() {
        let f = reference_fit();
        let p0 = f.per_alpha[0].p0.unwrap();
        assert!((p0 - 0.0063).abs() < 1e-4);
        let fig = rate_plot(&rows(), Some(&f), &[1.0], OPTS);
        assert!(fig.svg.matches("<line").count() > 3);
    }

    #[test]
    fn missing_inputs_warn() {
        let fig = rate_plot(&rows(), None, &[1.0, 5.0], OPTS);
        assert_eq!(fig.warnings.len(), 2);
        assert!(!fig.svg.contains("polyline points=\"\""));
        let t = threshold_plot(&[]);
        assert_eq!(t.warnings.len(), 1);
    }

    #[test]
    fn threshold_figure_has_one_series_per_partition() {
        let f = reference_fit();
        let fig = threshold_plot(&[(4, f.clone()), (12, f)]);
        assert_eq!(fig.svg.matches("<polyline").count(), 2);
    }
}
