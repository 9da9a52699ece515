//! File emitters: deterministic CSV (17 significant digits, lossless for
//! binary64) and minimal static SVG line charts.

use std::fmt::Write as _;
use std::path::Path;

use viflow::Trajectory;

use crate::CliError;

/// Formats a float with 17 significant digits, which round-trips binary64.
pub fn fmt_f64(v: f64) -> String {
    format!("{v:.16e}")
}

pub fn write_file(path: &Path, contents: &str) -> Result<(), CliError> {
    std::fs::write(path, contents)
        .map_err(|e| CliError::Config(format!("cannot write {}: {e}", path.display())))
}

/// Renders the trajectory CSV. The header is fixed; `dist_oracle` is left
/// empty when the oracle pass was not attached.
pub fn trajectory_csv(trajectory: &Trajectory) -> String {
    let mut out = String::from("t,norm_x,residual_fp,feasibility_gap,eps,beta,lambda,dist_oracle\n");
    for s in &trajectory.samples {
        let dist = s.dist_oracle.map(fmt_f64).unwrap_or_default();
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{},{}",
            fmt_f64(s.t),
            fmt_f64(s.state.norm()),
            fmt_f64(s.residual_fp),
            fmt_f64(s.feasibility_gap),
            fmt_f64(s.eps),
            fmt_f64(s.beta),
            fmt_f64(s.lambda),
            dist
        );
    }
    out
}

/// A minimal log-y line chart. Non-positive values are clamped to a floor
/// one decade below the smallest positive value so that converged runs
/// (residual exactly zero) still render.
pub fn line_chart_svg(title: &str, ylabel: &str, points: &[(f64, f64)]) -> String {
    const W: f64 = 720.0;
    const H: f64 = 480.0;
    const ML: f64 = 70.0; // left margin
    const MR: f64 = 20.0;
    const MT: f64 = 40.0;
    const MB: f64 = 50.0;

    let mut svg = String::new();
    let _ = writeln!(
        svg,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{H}" viewBox="0 0 {W} {H}">"#
    );
    let _ = writeln!(
        svg,
        r#"<rect width="{W}" height="{H}" fill="white"/><text x="{x}" y="24" text-anchor="middle" font-family="sans-serif" font-size="16">{title}</text>"#,
        x = W / 2.0
    );

    if points.is_empty() {
        let _ = writeln!(svg, "</svg>");
        return svg;
    }

    let x_min = points.first().map(|p| p.0).unwrap_or(0.0);
    let x_max = points.last().map(|p| p.0).unwrap_or(1.0).max(x_min + 1e-12);
    let min_pos = points
        .iter()
        .map(|p| p.1)
        .filter(|&v| v > 0.0)
        .fold(f64::INFINITY, f64::min);
    let floor = if min_pos.is_finite() { min_pos / 10.0 } else { 1e-16 };
    let ys: Vec<f64> = points.iter().map(|p| p.1.max(floor).log10()).collect();
    let y_lo = ys.iter().cloned().fold(f64::INFINITY, f64::min).floor();
    let y_hi = (ys.iter().cloned().fold(f64::NEG_INFINITY, f64::max).ceil()).max(y_lo + 1.0);

    let px = |x: f64| ML + (x - x_min) / (x_max - x_min) * (W - ML - MR);
    let py = |ylog: f64| H - MB - (ylog - y_lo) / (y_hi - y_lo) * (H - MT - MB);

    // Axes.
    let _ = writeln!(
        svg,
        r#"<line x1="{ML}" y1="{yb}" x2="{xr}" y2="{yb}" stroke="black"/><line x1="{ML}" y1="{MT}" x2="{ML}" y2="{yb}" stroke="black"/>"#,
        yb = H - MB,
        xr = W - MR
    );

    // X ticks.
    for i in 0..=5 {
        let x = x_min + (x_max - x_min) * i as f64 / 5.0;
        let sx = px(x);
        let _ = writeln!(
            svg,
            r#"<line x1="{sx}" y1="{yb}" x2="{sx}" y2="{yb2}" stroke="black"/><text x="{sx}" y="{yt}" text-anchor="middle" font-family="sans-serif" font-size="11">{x:.1}</text>"#,
            yb = H - MB,
            yb2 = H - MB + 5.0,
            yt = H - MB + 18.0
        );
    }
    // Y ticks: one per decade, thinned to at most 8 labels.
    let decades = (y_hi - y_lo) as i64;
    let stride = (decades / 8 + 1).max(1);
    let mut d = y_lo as i64;
    while d <= y_hi as i64 {
        let sy = py(d as f64);
        let _ = writeln!(
            svg,
            r#"<line x1="{xl}" y1="{sy}" x2="{ML}" y2="{sy}" stroke="black"/><text x="{xt}" y="{syt}" text-anchor="end" font-family="sans-serif" font-size="11">1e{d}</text>"#,
            xl = ML - 5.0,
            xt = ML - 8.0,
            syt = sy + 4.0
        );
        d += stride;
    }
    let _ = writeln!(
        svg,
        r#"<text x="{x}" y="{y}" text-anchor="middle" font-family="sans-serif" font-size="13">t</text>"#,
        x = (ML + W - MR) / 2.0,
        y = H - 12.0
    );
    let _ = writeln!(
        svg,
        r#"<text x="16" y="{y}" text-anchor="middle" font-family="sans-serif" font-size="13" transform="rotate(-90 16 {y})">{ylabel}</text>"#,
        y = (MT + H - MB) / 2.0
    );

    // The curve.
    let mut path = String::new();
    for (i, (p, ylog)) in points.iter().zip(&ys).enumerate() {
        let cmd = if i == 0 { 'M' } else { 'L' };
        let _ = write!(path, "{cmd}{:.2} {:.2} ", px(p.0), py(*ylog));
    }
    let _ = writeln!(
        svg,
        r##"<path d="{path}" fill="none" stroke="#336699" stroke-width="1.5"/>"##
    );
    let _ = writeln!(svg, "</svg>");
    svg
}
