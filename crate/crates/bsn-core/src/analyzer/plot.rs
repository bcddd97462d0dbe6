//! Minimal SVG plot of a QoS series with its setpoint line.

use super::QoSSeries;
use std::fmt::Write;
use std::path::Path;

const WIDTH: f64 = 960.0;
const HEIGHT: f64 = 480.0;
const MARGIN_LEFT: f64 = 70.0;
const MARGIN_RIGHT: f64 = 30.0;
const MARGIN_TOP: f64 = 30.0;
const MARGIN_BOTTOM: f64 = 50.0;

const COMPONENT_COLORS: [&str; 7] = [
    "#8dd3c7", "#bebada", "#fb8072", "#80b1d3", "#fdb462", "#b3de69", "#fccde5",
];

struct Scale {
    t_min: f64,
    t_max: f64,
    v_min: f64,
    v_max: f64,
}

impl Scale {
    fn x(&self, t: f64) -> f64 {
        let span = (self.t_max - self.t_min).max(1e-12);
        MARGIN_LEFT + (t - self.t_min) / span * (WIDTH - MARGIN_LEFT - MARGIN_RIGHT)
    }

    fn y(&self, v: f64) -> f64 {
        let span = (self.v_max - self.v_min).max(1e-12);
        HEIGHT - MARGIN_BOTTOM - (v - self.v_min) / span * (HEIGHT - MARGIN_TOP - MARGIN_BOTTOM)
    }
}

fn polyline(out: &mut String, xs: &[f64], ys: &[f64], scale: &Scale, color: &str, width: f64) {
    let _ = write!(out, r#"<polyline fill="none" stroke="{color}" stroke-width="{width}" points=""#);
    for (t, v) in xs.iter().zip(ys) {
        if v.is_nan() {
            continue;
        }
        let _ = write!(out, "{:.2},{:.2} ", scale.x(*t), scale.y(*v));
    }
    let _ = writeln!(out, r#""/>"#);
}

/// Render the series (and optional per-component curves) as an SVG document.
pub fn render_svg(series: &QoSSeries, setpoint: f64) -> String {
    let t_min = series.timestamps.first().copied().unwrap_or(0.0);
    let t_max = series.timestamps.last().copied().unwrap_or(1.0);
    let mut v_min = setpoint;
    let mut v_max = setpoint;
    for v in series
        .values
        .iter()
        .chain(series.per_component.values().flatten())
    {
        if v.is_nan() {
            continue;
        }
        v_min = v_min.min(*v);
        v_max = v_max.max(*v);
    }
    let pad = ((v_max - v_min) * 0.08).max(0.02);
    let scale = Scale {
        t_min,
        t_max,
        v_min: v_min - pad,
        v_max: v_max + pad,
    };

    let mut out = String::new();
    let _ = writeln!(
        out,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}">"#
    );
    let _ = writeln!(out, r#"<rect width="{WIDTH}" height="{HEIGHT}" fill="white"/>"#);

    // Axes.
    let x0 = MARGIN_LEFT;
    let x1 = WIDTH - MARGIN_RIGHT;
    let y0 = HEIGHT - MARGIN_BOTTOM;
    let y1 = MARGIN_TOP;
    let _ = writeln!(out, r#"<line x1="{x0}" y1="{y0}" x2="{x1}" y2="{y0}" stroke="black"/>"#);
    let _ = writeln!(out, r#"<line x1="{x0}" y1="{y0}" x2="{x0}" y2="{y1}" stroke="black"/>"#);

    // Ticks and labels.
    for i in 0..=5 {
        let t = scale.t_min + (scale.t_max - scale.t_min) * i as f64 / 5.0;
        let x = scale.x(t);
        let _ = writeln!(out, r#"<line x1="{x:.2}" y1="{y0}" x2="{x:.2}" y2="{}" stroke="black"/>"#, y0 + 5.0);
        let _ = writeln!(
            out,
            r#"<text x="{x:.2}" y="{}" font-size="12" text-anchor="middle">{t:.0}</text>"#,
            y0 + 20.0
        );
        let v = scale.v_min + (scale.v_max - scale.v_min) * i as f64 / 5.0;
        let y = scale.y(v);
        let _ = writeln!(out, r#"<line x1="{}" y1="{y:.2}" x2="{x0}" y2="{y:.2}" stroke="black"/>"#, x0 - 5.0);
        let _ = writeln!(
            out,
            r#"<text x="{}" y="{:.2}" font-size="12" text-anchor="end">{v:.3}</text>"#,
            x0 - 8.0,
            y + 4.0
        );
    }
    let _ = writeln!(
        out,
        r#"<text x="{:.2}" y="{}" font-size="13" text-anchor="middle">time (s)</text>"#,
        (x0 + x1) / 2.0,
        HEIGHT - 12.0
    );
    let _ = writeln!(
        out,
        r#"<text x="18" y="{:.2}" font-size="13" text-anchor="middle" transform="rotate(-90 18 {:.2})">{}</text>"#,
        (y0 + y1) / 2.0,
        (y0 + y1) / 2.0,
        series.attribute
    );

    // Per-component curves under the global one.
    for (i, (component, values)) in series.per_component.iter().enumerate() {
        let color = COMPONENT_COLORS[i % COMPONENT_COLORS.len()];
        polyline(&mut out, &series.timestamps, values, &scale, color, 1.0);
        let _ = writeln!(
            out,
            r#"<text x="{}" y="{}" font-size="11" fill="{color}">{component}</text>"#,
            x1 - 150.0,
            y1 + 14.0 * (i as f64 + 2.0)
        );
    }

    // Setpoint line.
    let sp_y = scale.y(setpoint);
    let _ = writeln!(
        out,
        r##"<line x1="{x0}" y1="{sp_y:.2}" x2="{x1}" y2="{sp_y:.2}" stroke="#d62728" stroke-dasharray="6,4"/>"##
    );
    let _ = writeln!(
        out,
        r##"<text x="{}" y="{:.2}" font-size="11" fill="#d62728">setpoint {setpoint}</text>"##,
        x1 - 150.0,
        sp_y - 6.0
    );

    polyline(&mut out, &series.timestamps, &series.values, &scale, "#1f77b4", 1.8);
    let _ = writeln!(
        out,
        r##"<text x="{}" y="{}" font-size="11" fill="#1f77b4">global {}</text>"##,
        x1 - 150.0,
        y1 + 14.0,
        series.attribute
    );
    let _ = writeln!(out, "</svg>");
    out
}

/// Convenience wrapper writing the rendered plot to a file.
pub fn write_svg_plot(series: &QoSSeries, setpoint: f64, path: &Path) -> std::io::Result<()> {
    std::fs::write(path, render_svg(series, setpoint))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::message::QosAttribute;
    use std::collections::BTreeMap;

    #[test]
    fn svg_contains_series_and_setpoint() {
        let series = QoSSeries {
            attribute: QosAttribute::Reliability,
            timestamps: vec![1.0, 2.0, 3.0],
            values: vec![0.8, 0.9, 0.85],
            per_component: BTreeMap::from([("hub".to_string(), vec![1.0, 0.9, 0.95])]),
        };
        let svg = render_svg(&series, 0.9);
        assert!(svg.starts_with("<svg"));
        assert!(svg.contains("setpoint 0.9"));
        assert!(svg.contains("hub"));
        assert!(svg.trim_end().ends_with("</svg>"));
    }
}
