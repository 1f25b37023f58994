use std::fmt::Write as _;

use super::csv::format_sig6;
use super::ReportError;
use crate::harness::AggregateCurve;

const WIDTH: f64 = 800.0;
const HEIGHT: f64 = 500.0;
const LEFT: f64 = 80.0;
const RIGHT: f64 = 240.0;
const TOP: f64 = 30.0;
const BOTTOM: f64 = 60.0;
/// Upper bound on vertices per polyline.
const MAX_POINTS: usize = 2000;
const COLORS: [&str; 8] = [
    "#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd", "#8c564b", "#e377c2", "#7f7f7f",
];

pub const PLOT_TOP: f64 = TOP;
pub const PLOT_BOTTOM: f64 = HEIGHT - BOTTOM;

/// Renders mean cumulative-regret curves as a standalone SVG 1.1 document.
pub fn render_svg(curves: &[AggregateCurve], title: &str) -> Result<String, ReportError> {
    if curves.is_empty() || curves.iter().all(|c| c.mean.is_empty()) {
        return Err(ReportError::EmptyCurves);
    }
    let horizon = curves.iter().map(|c| c.mean.len()).max().unwrap_or(1);
    let y_max = curves
        .iter()
        .flat_map(|c| c.mean.iter().copied())
        .fold(0.0_f64, f64::max);
    // Realized-mode regret can dip below zero.
    let y_min = curves
        .iter()
        .flat_map(|c| c.mean.iter().copied())
        .fold(0.0_f64, f64::min);
    let y_scale = if y_max > y_min { y_max - y_min } else { 1.0 };
    let plot_w = WIDTH - LEFT - RIGHT;
    let plot_h = HEIGHT - TOP - BOTTOM;
    let px = |step: usize| LEFT + plot_w * step as f64 / horizon as f64;
    let py = |y: f64| TOP + plot_h * (1.0 - (y - y_min) / y_scale);

    let mut s = String::new();
    s.push_str("<?xml version=\"1.0\" encoding=\"UTF-8\" standalone=\"yes\"?>\n");
    let _ = writeln!(
        s,
        "<svg xmlns=\"http://www.w3.org/2000/svg\" version=\"1.1\" width=\"{WIDTH}\" height=\"{HEIGHT}\" viewBox=\"0 0 {WIDTH} {HEIGHT}\">"
    );
    let _ = writeln!(s, "<title>{}</title>", escape(title));
    let _ = writeln!(s, "<rect x=\"0\" y=\"0\" width=\"{WIDTH}\" height=\"{HEIGHT}\" fill=\"white\"/>");

    let (x0, x1, y0, y1) = (LEFT, LEFT + plot_w, TOP + plot_h, TOP);
    let _ = writeln!(
        s,
        "<g id=\"axes\" stroke=\"black\" stroke-width=\"1\"><line x1=\"{x0}\" y1=\"{y0}\" x2=\"{x1}\" y2=\"{y0}\"/><line x1=\"{x0}\" y1=\"{y0}\" x2=\"{x0}\" y2=\"{y1}\"/></g>"
    );
    s.push_str("<g id=\"ticks\" font-family=\"sans-serif\" font-size=\"11\">\n");
    for k in 0..=4 {
        let frac = k as f64 / 4.0;
        let step = (horizon as f64 * frac).round() as usize;
        let x = px(step);
        let _ = writeln!(
            s,
            "<text x=\"{x:.2}\" y=\"{:.2}\" text-anchor=\"middle\">{step}</text>",
            y0 + 16.0
        );
        let value = y_min + y_scale * frac;
        let y = py(value);
        let _ = writeln!(
            s,
            "<text x=\"{:.2}\" y=\"{:.2}\" text-anchor=\"end\">{}</text>",
            x0 - 6.0,
            y + 4.0,
            format_sig6(value)
        );
    }
    s.push_str("</g>\n");
    let _ = writeln!(
        s,
        "<text id=\"x-label\" x=\"{:.2}\" y=\"{:.2}\" font-family=\"sans-serif\" font-size=\"13\" text-anchor=\"middle\">steps</text>",
        LEFT + plot_w / 2.0,
        HEIGHT - 20.0
    );
    let _ = writeln!(
        s,
        "<text id=\"y-label\" x=\"20\" y=\"{:.2}\" font-family=\"sans-serif\" font-size=\"13\" text-anchor=\"middle\" transform=\"rotate(-90 20 {:.2})\">cumulative regret</text>",
        TOP + plot_h / 2.0,
        TOP + plot_h / 2.0
    );

    s.push_str("<g id=\"curves\" fill=\"none\" stroke-width=\"1.5\">\n");
    for (i, c) in curves.iter().enumerate() {
        let points: Vec<String> = thin(&c.mean)
            .into_iter()
            .map(|(idx, y)| format!("{:.2},{:.2}", px(idx + 1), py(y)))
            .collect();
        let _ = writeln!(
            s,
            "<polyline stroke=\"{}\" points=\"{:.2},{:.2} {}\"/>",
            COLORS[i % COLORS.len()],
            px(0),
            py(0.0),
            points.join(" ")
        );
    }
    s.push_str("</g>\n");

    s.push_str("<g id=\"legend\" font-family=\"sans-serif\" font-size=\"12\">\n");
    for (i, c) in curves.iter().enumerate() {
        let y = TOP + 10.0 + 22.0 * i as f64;
        let lx = LEFT + plot_w + 16.0;
        let _ = writeln!(
            s,
            "<line x1=\"{lx:.2}\" y1=\"{y:.2}\" x2=\"{:.2}\" y2=\"{y:.2}\" stroke=\"{}\" stroke-width=\"3\"/><text x=\"{:.2}\" y=\"{:.2}\">{} (FCR {})</text>",
            lx + 20.0,
            COLORS[i % COLORS.len()],
            lx + 26.0,
            y + 4.0,
            escape(&c.agent),
            format_sig6(c.fcr.mean)
        );
    }
    s.push_str("</g>\n</svg>\n");
    Ok(s)
}

/// Keeps at most about `MAX_POINTS` vertices. Each bucket contributes its
/// first and largest value, and the last point is always kept, so the
/// curve's maximum survives.
fn thin(ys: &[f64]) -> Vec<(usize, f64)> {
    if ys.len() <= MAX_POINTS {
        return ys.iter().copied().enumerate().collect();
    }
    let bucket = ys.len().div_ceil(MAX_POINTS / 2);
    let mut out = Vec::with_capacity(MAX_POINTS + 1);
    for start in (0..ys.len()).step_by(bucket) {
        let end = (start + bucket).min(ys.len());
        out.push((start, ys[start]));
        let (arg, max) = (start..end)
            .map(|i| (i, ys[i]))
            .fold((start, ys[start]), |a, b| if b.1 > a.1 { b } else { a });
        if arg != start {
            out.push((arg, max));
        }
    }
    let last = ys.len() - 1;
    if out.last().map(|p| p.0) != Some(last) {
        out.push((last, ys[last]));
    }
    out
}

fn escape(text: &str) -> String {
    text.replace('&', "&amp;")
        .replace('<', "&lt;")
        .replace('>', "&gt;")
        .replace('"', "&quot;")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::harness::FcrSummary;

    fn curve(name: &str, mean: Vec<f64>) -> AggregateCurve {
        let last = *mean.last().unwrap();
        AggregateCurve {
            agent: name.into(),
            runs: 1,
            stderr: vec![0.0; mean.len()],
            mean,
            fcr: FcrSummary {
                mean: last,
                min: last,
                max: last,
            },
        }
    }

    #[test]
    fn empty_set_is_an_error() {
        assert!(matches!(render_svg(&[], "t"), Err(ReportError::EmptyCurves)));
    }

    #[test]
    fn thinning_keeps_extremes() {
        let ys: Vec<f64> = (0..10_000).map(|i| ((i * 7919) % 1000) as f64).collect();
        let kept = thin(&ys);
        assert!(kept.len() <= MAX_POINTS + 1);
        assert_eq!(kept.iter().map(|p| p.1).fold(0.0, f64::max), 999.0);
        assert_eq!(kept.last().unwrap().0, 9_999);
    }

    #[test]
    fn escapes_names() {
        let svg = render_svg(&[curve("a<b", vec![1.0])], "x & y").unwrap();
        assert!(svg.contains("a&lt;b") && svg.contains("x &amp; y"));
    }
}
