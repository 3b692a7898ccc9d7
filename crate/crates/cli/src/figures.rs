//! Deterministic SVG figures: no plotting library, no fonts to embed, no
//! timestamps — identical specs render identical bytes, so figures can be
//! golden-tested like any other output.

use colloquy_core::qtype::QuestionType;
use colloquy_core::stats::ComparisonReport;
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum SpecError {
    #[error("figure spec holds no segments")]
    EmptySeries,
    #[error("series lengths differ: {0} vs {1}")]
    LengthMismatch(usize, usize),
    #[error("significance marker at segment {marker} outside 0..{k}")]
    MarkerOutOfRange { marker: usize, k: usize },
}

/// One corpus line across segments.
#[derive(Debug, Clone)]
pub struct SeriesLine {
    pub name: String,
    /// Per-segment means; `None` = no observations, drawn as a gap.
    pub means: Vec<Option<f64>>,
    pub sds: Vec<f64>,
    /// Dashed reference line across the mean panel.
    pub overall: Option<f64>,
}

/// A two-corpus comparison figure: mean panel (with significance
/// asterisks and dashed overall-mean lines) beside an SD panel.
#[derive(Debug, Clone)]
pub struct FigureSpec {
    pub title: String,
    pub y_label: String,
    pub a: SeriesLine,
    pub b: SeriesLine,
    /// Segments to mark with an asterisk on the mean panel.
    pub significant: Vec<usize>,
}

impl FigureSpec {
    /// Lift a comparison report into a figure: asterisks exactly at the
    /// segments the report marks significant.
    pub fn from_report(report: &ComparisonReport, title: &str, y_label: &str) -> FigureSpec {
        let side = |mean: fn(&colloquy_core::stats::SegmentComparison) -> Option<f64>,
                    sd: fn(&colloquy_core::stats::SegmentComparison) -> f64,
                    name: &str,
                    overall: Option<f64>| SeriesLine {
            name: name.to_owned(),
            means: report.segments.iter().map(mean).collect(),
            sds: report.segments.iter().map(sd).collect(),
            overall,
        };
        FigureSpec {
            title: title.to_owned(),
            y_label: y_label.to_owned(),
            a: side(|s| s.mean_a, |s| s.sd_a, &report.corpus_a, report.overall_mean_a),
            b: side(|s| s.mean_b, |s| s.sd_b, &report.corpus_b, report.overall_mean_b),
            significant: report
                .segments
                .iter()
                .filter(|s| s.significant)
                .map(|s| s.seg_index)
                .collect(),
        }
    }

    fn validate(&self) -> Result<usize, SpecError> {
        let k = self.a.means.len();
        if k == 0 {
            return Err(SpecError::EmptySeries);
        }
        for other in [self.b.means.len(), self.a.sds.len(), self.b.sds.len()] {
            if other != k {
                return Err(SpecError::LengthMismatch(k, other));
            }
        }
        if let Some(&m) = self.significant.iter().find(|&&m| m >= k) {
            return Err(SpecError::MarkerOutOfRange { marker: m, k });
        }
        Ok(k)
    }
}

pub const COLOR_A: &str = "#1f77b4";
pub const COLOR_B: &str = "#d62728";

/// Fixed palette for the seven question types.
pub const TYPE_PALETTE: [&str; 7] = [
    "#4e79a7", "#f28e2b", "#e15759", "#76b7b2", "#59a14f", "#edc948", "#b07aa1",
];

/// Smallest "nice" value (1, 2, 2.5, 5 × 10^n) at or above `v`.
fn nice_ceil(v: f64) -> f64 {
    if !(v > 0.0) {
        return 1.0;
    }
    let exp = v.log10().floor();
    let base = 10f64.powi(exp as i32);
    for step in [1.0, 2.0, 2.5, 5.0, 10.0] {
        if step * base >= v - 1e-12 {
            return step * base;
        }
    }
    10.0 * base
}

fn fmt(v: f64) -> String {
    format!("{v:.2}")
}

struct Panel {
    x0: f64,
    y0: f64,
    w: f64,
    h: f64,
    k: usize,
    ymax: f64,
}

impl Panel {
    fn x(&self, seg: usize) -> f64 {
        if self.k == 1 {
            return self.x0 + self.w / 2.0;
        }
        self.x0 + self.w * seg as f64 / (self.k - 1) as f64
    }

    fn y(&self, v: f64) -> f64 {
        self.y0 + self.h * (1.0 - (v / self.ymax).clamp(0.0, 1.0))
    }

    fn frame(&self, out: &mut String, title: &str, y_label: &str) {
        out.push_str(&format!(
            "<rect x=\"{}\" y=\"{}\" width=\"{}\" height=\"{}\" fill=\"none\" stroke=\"#333\"/>\n",
            fmt(self.x0),
            fmt(self.y0),
            fmt(self.w),
            fmt(self.h)
        ));
        out.push_str(&format!(
            "<text x=\"{}\" y=\"{}\" text-anchor=\"middle\" font-size=\"13\" font-family=\"sans-serif\">{}</text>\n",
            fmt(self.x0 + self.w / 2.0),
            fmt(self.y0 - 10.0),
            xml_escape(title)
        ));
        out.push_str(&format!(
            "<text x=\"{}\" y=\"{}\" text-anchor=\"middle\" font-size=\"11\" font-family=\"sans-serif\" transform=\"rotate(-90 {} {})\">{}</text>\n",
            fmt(self.x0 - 42.0),
            fmt(self.y0 + self.h / 2.0),
            fmt(self.x0 - 42.0),
            fmt(self.y0 + self.h / 2.0),
            xml_escape(y_label)
        ));
        // Five horizontal gridlines with labels.
        for i in 0..=5 {
            let v = self.ymax * i as f64 / 5.0;
            let y = self.y(v);
            out.push_str(&format!(
                "<line x1=\"{}\" y1=\"{}\" x2=\"{}\" y2=\"{}\" stroke=\"#ddd\"/>\n",
                fmt(self.x0),
                fmt(y),
                fmt(self.x0 + self.w),
                fmt(y)
            ));
            out.push_str(&format!(
                "<text x=\"{}\" y=\"{}\" text-anchor=\"end\" font-size=\"10\" font-family=\"sans-serif\">{}</text>\n",
                fmt(self.x0 - 5.0),
                fmt(y + 3.0),
                fmt(v)
            ));
        }
        // Segment ticks.
        for seg in 0..self.k {
            let x = self.x(seg);
            out.push_str(&format!(
                "<text x=\"{}\" y=\"{}\" text-anchor=\"middle\" font-size=\"10\" font-family=\"sans-serif\">{seg}</text>\n",
                fmt(x),
                fmt(self.y0 + self.h + 14.0)
            ));
        }
    }

    fn polyline(&self, out: &mut String, values: &[Option<f64>], color: &str) {
        let points: Vec<String> = values
            .iter()
            .enumerate()
            .filter_map(|(s, v)| v.map(|v| format!("{},{}", fmt(self.x(s)), fmt(self.y(v)))))
            .collect();
        if points.len() > 1 {
            out.push_str(&format!(
                "<polyline points=\"{}\" fill=\"none\" stroke=\"{color}\" stroke-width=\"1.8\"/>\n",
                points.join(" ")
            ));
        }
        for (s, v) in values.iter().enumerate() {
            if let Some(v) = *v {
                out.push_str(&format!(
                    "<circle cx=\"{}\" cy=\"{}\" r=\"2.6\" fill=\"{color}\"/>\n",
                    fmt(self.x(s)),
                    fmt(self.y(v))
                ));
            }
        }
    }
}

fn xml_escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

fn svg_open(width: f64, height: f64) -> String {
    format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{}\" height=\"{}\" viewBox=\"0 0 {} {}\">\n<rect width=\"{}\" height=\"{}\" fill=\"white\"/>\n",
        fmt(width), fmt(height), fmt(width), fmt(height), fmt(width), fmt(height)
    )
}

/// Render the two-panel comparison figure.
pub fn render_comparison(spec: &FigureSpec) -> Result<String, SpecError> {
    let k = spec.validate()?;
    let (width, height) = (960.0, 430.0);
    let mut out = svg_open(width, height);
    out.push_str(&format!(
        "<text x=\"{}\" y=\"24\" text-anchor=\"middle\" font-size=\"16\" font-family=\"sans-serif\">{}</text>\n",
        fmt(width / 2.0),
        xml_escape(&spec.title)
    ));

    let mean_max = spec
        .a
        .means
        .iter()
        .chain(&spec.b.means)
        .filter_map(|v| *v)
        .chain(spec.a.overall.into_iter())
        .chain(spec.b.overall.into_iter())
        .fold(0.0f64, f64::max);
    let sd_max = spec.a.sds.iter().chain(&spec.b.sds).fold(0.0f64, |m, &v| m.max(v));

    let mean_panel =
        Panel { x0: 70.0, y0: 60.0, w: 370.0, h: 290.0, k, ymax: nice_ceil(mean_max * 1.15) };
    let sd_panel =
        Panel { x0: 560.0, y0: 60.0, w: 370.0, h: 290.0, k, ymax: nice_ceil(sd_max * 1.15) };

    mean_panel.frame(&mut out, "Per-segment mean", &spec.y_label);
    sd_panel.frame(&mut out, "Per-segment SD", &spec.y_label);

    // Dashed overall-mean reference lines (mean panel only).
    for (line, color) in [(&spec.a, COLOR_A), (&spec.b, COLOR_B)] {
        if let Some(v) = line.overall {
            let y = mean_panel.y(v);
            out.push_str(&format!(
                "<line x1=\"{}\" y1=\"{}\" x2=\"{}\" y2=\"{}\" stroke=\"{color}\" stroke-dasharray=\"6 4\" stroke-width=\"1\"/>\n",
                fmt(mean_panel.x0),
                fmt(y),
                fmt(mean_panel.x0 + mean_panel.w),
                fmt(y)
            ));
        }
    }

    mean_panel.polyline(&mut out, &spec.a.means, COLOR_A);
    mean_panel.polyline(&mut out, &spec.b.means, COLOR_B);
    let sd_a: Vec<Option<f64>> = spec.a.sds.iter().map(|&v| Some(v)).collect();
    let sd_b: Vec<Option<f64>> = spec.b.sds.iter().map(|&v| Some(v)).collect();
    sd_panel.polyline(&mut out, &sd_a, COLOR_A);
    sd_panel.polyline(&mut out, &sd_b, COLOR_B);

    // Asterisks above the higher of the two means.
    for &seg in &spec.significant {
        let top = [spec.a.means[seg], spec.b.means[seg]]
            .into_iter()
            .flatten()
            .fold(0.0f64, f64::max);
        out.push_str(&format!(
            "<text class=\"sig-marker\" x=\"{}\" y=\"{}\" text-anchor=\"middle\" font-size=\"15\" font-family=\"sans-serif\">*</text>\n",
            fmt(mean_panel.x(seg)),
            fmt(mean_panel.y(top) - 8.0)
        ));
    }

    // Legend.
    for (i, (line, color)) in [(&spec.a, COLOR_A), (&spec.b, COLOR_B)].iter().enumerate() {
        let y = 390.0 + i as f64 * 18.0;
        out.push_str(&format!(
            "<line x1=\"70\" y1=\"{}\" x2=\"100\" y2=\"{}\" stroke=\"{color}\" stroke-width=\"2\"/>\n",
            fmt(y),
            fmt(y)
        ));
        out.push_str(&format!(
            "<text x=\"108\" y=\"{}\" font-size=\"12\" font-family=\"sans-serif\">{}</text>\n",
            fmt(y + 4.0),
            xml_escape(&line.name)
        ));
    }
    out.push_str("</svg>\n");
    Ok(out)
}

/// Grouped bars of overall question-type proportions, one group of seven
/// bars per corpus.
pub fn render_type_bars(title: &str, groups: &[(String, [f64; 7])]) -> Result<String, SpecError> {
    if groups.is_empty() {
        return Err(SpecError::EmptySeries);
    }
    let (width, height) = (960.0, 430.0);
    let mut out = svg_open(width, height);
    out.push_str(&format!(
        "<text x=\"{}\" y=\"24\" text-anchor=\"middle\" font-size=\"16\" font-family=\"sans-serif\">{}</text>\n",
        fmt(width / 2.0),
        xml_escape(title)
    ));
    let max = groups
        .iter()
        .flat_map(|(_, props)| props.iter())
        .fold(0.0f64, |m, &v| m.max(v));
    let panel = Panel { x0: 70.0, y0: 60.0, w: 860.0, h: 290.0, k: 7, ymax: nice_ceil(max * 1.15) };
    let colors = [COLOR_A, COLOR_B, "#2ca02c", "#9467bd"];

    out.push_str(&format!(
        "<rect x=\"{}\" y=\"{}\" width=\"{}\" height=\"{}\" fill=\"none\" stroke=\"#333\"/>\n",
        fmt(panel.x0),
        fmt(panel.y0),
        fmt(panel.w),
        fmt(panel.h)
    ));
    for i in 0..=5 {
        let v = panel.ymax * i as f64 / 5.0;
        let y = panel.y(v);
        out.push_str(&format!(
            "<line x1=\"{}\" y1=\"{}\" x2=\"{}\" y2=\"{}\" stroke=\"#ddd\"/>\n",
            fmt(panel.x0),
            fmt(y),
            fmt(panel.x0 + panel.w),
            fmt(y)
        ));
        out.push_str(&format!(
            "<text x=\"{}\" y=\"{}\" text-anchor=\"end\" font-size=\"10\" font-family=\"sans-serif\">{}</text>\n",
            fmt(panel.x0 - 5.0),
            fmt(y + 3.0),
            fmt(v)
        ));
    }

    let slot = panel.w / 7.0;
    let bar = slot * 0.7 / groups.len() as f64;
    for (ti, ty) in QuestionType::ALL.iter().enumerate() {
        let x_left = panel.x0 + slot * ti as f64 + slot * 0.15;
        for (gi, (_, props)) in groups.iter().enumerate() {
            let v = props[ti];
            let y = panel.y(v);
            out.push_str(&format!(
                "<rect x=\"{}\" y=\"{}\" width=\"{}\" height=\"{}\" fill=\"{}\"/>\n",
                fmt(x_left + bar * gi as f64),
                fmt(y),
                fmt(bar),
                fmt(panel.y0 + panel.h - y),
                colors[gi % colors.len()]
            ));
        }
        out.push_str(&format!(
            "<text x=\"{}\" y=\"{}\" text-anchor=\"middle\" font-size=\"11\" font-family=\"sans-serif\">{}</text>\n",
            fmt(panel.x0 + slot * (ti as f64 + 0.5)),
            fmt(panel.y0 + panel.h + 16.0),
            ty.label()
        ));
    }
    for (gi, (name, _)) in groups.iter().enumerate() {
        let y = 390.0 + gi as f64 * 18.0;
        out.push_str(&format!(
            "<rect x=\"70\" y=\"{}\" width=\"14\" height=\"14\" fill=\"{}\"/>\n",
            fmt(y - 10.0),
            colors[gi % colors.len()]
        ));
        out.push_str(&format!(
            "<text x=\"92\" y=\"{}\" font-size=\"12\" font-family=\"sans-serif\">{}</text>\n",
            fmt(y + 2.0),
            xml_escape(name)
        ));
    }
    out.push_str("</svg>\n");
    Ok(out)
}

/// Stacked per-segment type proportions (one column per segment, seven
/// bands per column).
pub fn render_stacked_types(
    title: &str,
    per_segment: &[Option<[f64; 7]>],
) -> Result<String, SpecError> {
    if per_segment.is_empty() {
        return Err(SpecError::EmptySeries);
    }
    let k = per_segment.len();
    let (width, height) = (960.0, 430.0);
    let mut out = svg_open(width, height);
    out.push_str(&format!(
        "<text x=\"{}\" y=\"24\" text-anchor=\"middle\" font-size=\"16\" font-family=\"sans-serif\">{}</text>\n",
        fmt(width / 2.0),
        xml_escape(title)
    ));
    let panel = Panel { x0: 70.0, y0: 60.0, w: 700.0, h: 290.0, k, ymax: 1.0 };
    out.push_str(&format!(
        "<rect x=\"{}\" y=\"{}\" width=\"{}\" height=\"{}\" fill=\"none\" stroke=\"#333\"/>\n",
        fmt(panel.x0),
        fmt(panel.y0),
        fmt(panel.w),
        fmt(panel.h)
    ));
    let slot = panel.w / k as f64;
    let bar = slot * 0.8;
    for (s, props) in per_segment.iter().enumerate() {
        let x = panel.x0 + slot * s as f64 + slot * 0.1;
        if let Some(p) = props {
            let mut cum = 0.0;
            for (ti, &v) in p.iter().enumerate() {
                let y_top = panel.y(cum + v);
                let h = panel.h * v;
                out.push_str(&format!(
                    "<rect x=\"{}\" y=\"{}\" width=\"{}\" height=\"{}\" fill=\"{}\"><title>{}: {}</title></rect>\n",
                    fmt(x),
                    fmt(y_top),
                    fmt(bar),
                    fmt(h),
                    TYPE_PALETTE[ti],
                    QuestionType::ALL[ti].label(),
                    fmt(v)
                ));
                cum += v;
            }
        }
        out.push_str(&format!(
            "<text x=\"{}\" y=\"{}\" text-anchor=\"middle\" font-size=\"10\" font-family=\"sans-serif\">{s}</text>\n",
            fmt(panel.x0 + slot * (s as f64 + 0.5)),
            fmt(panel.y0 + panel.h + 14.0)
        ));
    }
    for (ti, ty) in QuestionType::ALL.iter().enumerate() {
        let y = 80.0 + ti as f64 * 22.0;
        out.push_str(&format!(
            "<rect x=\"800\" y=\"{}\" width=\"14\" height=\"14\" fill=\"{}\"/>\n",
            fmt(y - 10.0),
            TYPE_PALETTE[ti]
        ));
        out.push_str(&format!(
            "<text x=\"822\" y=\"{}\" font-size=\"12\" font-family=\"sans-serif\">{}</text>\n",
            fmt(y + 2.0),
            ty.label()
        ));
    }
    out.push_str("</svg>\n");
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn spec(k: usize, significant: Vec<usize>) -> FigureSpec {
        let line = |name: &str, base: f64| SeriesLine {
            name: name.to_owned(),
            means: (0..k).map(|s| Some(base + s as f64)).collect(),
            sds: (0..k).map(|s| 1.0 + s as f64 / 10.0).collect(),
            overall: Some(base + k as f64 / 2.0),
        };
        FigureSpec {
            title: "Answer length".to_owned(),
            y_label: "words".to_owned(),
            a: line("alpha", 30.0),
            b: line("beta", 60.0),
            significant,
        }
    }

    #[test]
    fn empty_series_is_rejected() {
        assert_eq!(render_comparison(&spec(0, vec![])).unwrap_err(), SpecError::EmptySeries);
    }

    #[test]
    fn mismatched_lengths_are_rejected() {
        let mut s = spec(5, vec![]);
        s.b.means.pop();
        assert!(matches!(render_comparison(&s).unwrap_err(), SpecError::LengthMismatch(5, 4)));
    }

    #[test]
    fn markers_must_lie_inside_the_range() {
        let err = render_comparison(&spec(5, vec![7])).unwrap_err();
        assert_eq!(err, SpecError::MarkerOutOfRange { marker: 7, k: 5 });
    }

    #[test]
    fn identical_specs_render_identical_bytes() {
        let a = render_comparison(&spec(15, vec![0, 1, 2])).unwrap();
        let b = render_comparison(&spec(15, vec![0, 1, 2])).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn one_asterisk_glyph_per_significant_segment() {
        let svg = render_comparison(&spec(15, vec![1, 4, 9])).unwrap();
        assert_eq!(svg.matches("class=\"sig-marker\"").count(), 3);
        let none = render_comparison(&spec(15, vec![])).unwrap();
        assert_eq!(none.matches("class=\"sig-marker\"").count(), 0);
    }

    #[test]
    fn dashed_overall_lines_present_per_series() {
        let svg = render_comparison(&spec(15, vec![])).unwrap();
        assert_eq!(svg.matches("stroke-dasharray=\"6 4\"").count(), 2);
    }

    #[test]
    fn gaps_break_nothing() {
        let mut s = spec(4, vec![]);
        s.a.means[2] = None;
        s.a.overall = None;
        let svg = render_comparison(&s).unwrap();
        assert!(svg.ends_with("</svg>\n"));
        assert_eq!(svg.matches("stroke-dasharray=\"6 4\"").count(), 1);
    }

    #[test]
    fn bar_and_stacked_renderings_are_deterministic() {
        let groups = vec![
            ("alpha".to_owned(), [0.2, 0.3, 0.1, 0.1, 0.1, 0.1, 0.1]),
            ("beta".to_owned(), [0.1, 0.2, 0.1, 0.1, 0.1, 0.1, 0.3]),
        ];
        let a = render_type_bars("Types", &groups).unwrap();
        let b = render_type_bars("Types", &groups).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.matches("<rect").count(), 2 + 7 * 2 + 2); // canvas+frame, bars, legend

        let seg = vec![Some([0.2, 0.3, 0.1, 0.1, 0.1, 0.1, 0.1]), None];
        let s1 = render_stacked_types("By segment", &seg).unwrap();
        let s2 = render_stacked_types("By segment", &seg).unwrap();
        assert_eq!(s1, s2);
        assert!(render_stacked_types("x", &[]).is_err());
        assert!(render_type_bars("x", &[]).is_err());
    }

    #[test]
    fn nice_ceiling_is_monotone_and_round() {
        assert_eq!(nice_ceil(0.0), 1.0);
        assert_eq!(nice_ceil(0.8), 1.0);
        assert_eq!(nice_ceil(1.2), 2.0);
        assert_eq!(nice_ceil(2.2), 2.5);
        assert_eq!(nice_ceil(30.0), 50.0);
        assert_eq!(nice_ceil(76.0), 100.0);
    }
}
