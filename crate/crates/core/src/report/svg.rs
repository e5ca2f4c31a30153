//! Side-by-side scatter of human ordinal and model class per variation,
//! drawn with diamond markers on integer-tick axes.

use std::fmt::Write as _;
use std::path::Path;

use super::{write_bytes, ReportError};
use crate::alignment::RatingSeries;

const PANEL_W: f64 = 320.0;
const PANEL_H: f64 = 260.0;
const MARGIN: f64 = 40.0;
const GAP: f64 = 40.0;
const DIAMOND: f64 = 6.0;

struct Panel<'a> {
    title: &'a str,
    y_label: &'a str,
    y_max: usize,
    values: Vec<(u32, usize)>,
}

fn draw_panel(out: &mut String, left: f64, x_max: u32, panel: &Panel<'_>) {
    let top = MARGIN;
    let bottom = top + PANEL_H;
    let right = left + PANEL_W;
    let x_span = f64::from(x_max.max(1));
    let y_span = panel.y_max.max(1) as f64;
    let px = |x: u32| left + 20.0 + (PANEL_W - 40.0) * f64::from(x) / x_span;
    let py = |y: usize| bottom - 20.0 - (PANEL_H - 40.0) * y as f64 / y_span;

    let w = |out: &mut String, s: String| out.push_str(&s);
    w(out, format!("<g class=\"panel\">\n<text x=\"{:.2}\" y=\"{:.2}\" text-anchor=\"middle\">{}</text>\n", (left + right) / 2.0, top - 12.0, panel.title));
    w(out, format!("<line class=\"axis\" x1=\"{left:.2}\" y1=\"{bottom:.2}\" x2=\"{right:.2}\" y2=\"{bottom:.2}\"/>\n"));
    w(out, format!("<line class=\"axis\" x1=\"{left:.2}\" y1=\"{top:.2}\" x2=\"{left:.2}\" y2=\"{bottom:.2}\"/>\n"));
    for x in 0..=x_max {
        let xp = px(x);
        w(out, format!("<line class=\"tick\" x1=\"{xp:.2}\" y1=\"{bottom:.2}\" x2=\"{xp:.2}\" y2=\"{:.2}\"/>\n", bottom + 5.0));
        w(out, format!("<text x=\"{xp:.2}\" y=\"{:.2}\" text-anchor=\"middle\">{x}</text>\n", bottom + 18.0));
    }
    for y in 0..=panel.y_max {
        let yp = py(y);
        w(out, format!("<line class=\"tick\" x1=\"{:.2}\" y1=\"{yp:.2}\" x2=\"{left:.2}\" y2=\"{yp:.2}\"/>\n", left - 5.0));
        w(out, format!("<text x=\"{:.2}\" y=\"{:.2}\" text-anchor=\"end\">{y}</text>\n", left - 8.0, yp + 4.0));
    }
    w(out, format!("<text x=\"{:.2}\" y=\"{:.2}\" text-anchor=\"middle\">variation</text>\n", (left + right) / 2.0, bottom + 34.0));
    w(out, format!("<text x=\"{:.2}\" y=\"{:.2}\" text-anchor=\"middle\" transform=\"rotate(-90 {:.2} {:.2})\">{}</text>\n",
        left - 26.0, (top + bottom) / 2.0, left - 26.0, (top + bottom) / 2.0, panel.y_label));
    for &(x, y) in &panel.values {
        let (cx, cy) = (px(x), py(y));
        w(out, format!(
            "<polygon class=\"diamond\" points=\"{:.2},{:.2} {:.2},{:.2} {:.2},{:.2} {:.2},{:.2}\"/>\n",
            cx, cy - DIAMOND, cx + DIAMOND, cy, cx, cy + DIAMOND, cx - DIAMOND, cy
        ));
    }
    out.push_str("</g>\n");
}

pub fn render_scatter_svg(series: &RatingSeries) -> Result<String, ReportError> {
    if series.is_empty() {
        return Err(ReportError::EmptySeries);
    }
    let x_max = series.points.iter().map(|p| p.variation).max().unwrap_or(0);
    let class_max = series.points.iter().map(|p| p.model_class).max().unwrap_or(0);
    let width = 2.0 * PANEL_W + GAP + 2.0 * MARGIN;
    let height = PANEL_H + 2.0 * MARGIN + 20.0;
    let mut out = String::new();
    writeln!(
        out,
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{width:.0}\" height=\"{height:.0}\" viewBox=\"0 0 {width:.0} {height:.0}\">"
    )
    .expect("write to string");
    out.push_str("<style>.axis,.tick{stroke:#333;stroke-width:1}.diamond{fill:#1f5fa8;stroke:#0b2d55}text{font:11px sans-serif}</style>\n");
    let human = Panel {
        title: "Human",
        y_label: "rating (N=0 .. A=4)",
        y_max: 4,
        values: series.points.iter().map(|p| (p.variation, usize::from(p.human_ordinal))).collect(),
    };
    let model = Panel {
        title: "Model",
        y_label: "class (derived)",
        y_max: class_max.max(x_max as usize),
        values: series.points.iter().map(|p| (p.variation, p.model_class)).collect(),
    };
    draw_panel(&mut out, MARGIN, x_max, &human);
    draw_panel(&mut out, MARGIN + PANEL_W + GAP, x_max, &model);
    out.push_str("</svg>\n");
    Ok(out)
}

pub fn emit_scatter_svg(series: &RatingSeries, path: &Path) -> Result<(), ReportError> {
    write_bytes(path, render_scatter_svg(series)?.as_bytes())
}
