//! Publication-style figures (scatter plus fitted curves) and result
//! tables, rendered as SVG markup and markdown/CSV text.
//!
//! Rendering is a pure function of its inputs: identical analyses produce
//! byte-identical documents. Coordinates are formatted with fixed
//! precision and colors come from a fixed palette in input order.

use crate::analysis::{ChangeAnalysis, CompositeModel, FitKind, GridResult};
use crate::error::{Error, Result};
use crate::glm::Weighting;

const PALETTE: [&str; 8] = [
    "#1b6ca8", "#c0392b", "#27ae60", "#8e44ad", "#d35400", "#16a085", "#7f8c8d", "#2c3e50",
];

const MIN_POINT_RADIUS: f64 = 1.0;
const MAX_POINT_RADIUS: f64 = 12.0;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum RadiusMode {
    Constant(f64),
    /// Radius = base_radius * ln(1 + trials), clamped to [1, 12].
    LogAttestations { base_radius: f64 },
}

impl RadiusMode {
    fn radius(&self, trials: u64) -> f64 {
        match self {
            RadiusMode::Constant(r) => *r,
            RadiusMode::LogAttestations { base_radius } => {
                (base_radius * (1.0 + trials as f64).ln()).clamp(MIN_POINT_RADIUS, MAX_POINT_RADIUS)
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LineStyle {
    Solid,
    Dashed,
    Dotted,
}

impl LineStyle {
    fn dash_array(&self) -> &'static str {
        match self {
            LineStyle::Solid => "none",
            LineStyle::Dashed => "8,4",
            LineStyle::Dotted => "2,3",
        }
    }
}

#[derive(Debug, Clone)]
pub struct PlotSpec {
    pub title: String,
    pub x_label: String,
    pub y_label: String,
    pub radius_mode: RadiusMode,
    /// Year range override; defaults to the span of the binned series.
    pub x_range: Option<(f64, f64)>,
}

impl Default for PlotSpec {
    fn default() -> Self {
        Self {
            title: String::new(),
            x_label: "year".to_string(),
            y_label: "proportion of the innovative form".to_string(),
            radius_mode: RadiusMode::Constant(3.0),
            x_range: None,
        }
    }
}

/// A self-contained SVG document.
#[derive(Debug, Clone, PartialEq)]
pub struct FigureDocument {
    pub width: u32,
    pub height: u32,
    svg: String,
}

impl FigureDocument {
    pub fn svg(&self) -> &str {
        &self.svg
    }
}

struct Canvas {
    width: u32,
    height: u32,
    margin_left: f64,
    margin_right: f64,
    margin_top: f64,
    margin_bottom: f64,
    x_min: f64,
    x_max: f64,
    y_min: f64,
    y_max: f64,
    body: String,
}

impl Canvas {
    fn new(title: &str, x_range: (f64, f64), y_range: (f64, f64)) -> Self {
        let mut canvas = Canvas {
            width: 800,
            height: 500,
            margin_left: 60.0,
            margin_right: 20.0,
            margin_top: 40.0,
            margin_bottom: 50.0,
            x_min: x_range.0,
            x_max: x_range.1,
            y_min: y_range.0,
            y_max: y_range.1,
            body: String::new(),
        };
        if canvas.x_max <= canvas.x_min {
            canvas.x_max = canvas.x_min + 1.0;
        }
        canvas.body.push_str(&format!(
            "<text x=\"{:.1}\" y=\"24\" font-size=\"16\" text-anchor=\"middle\" \
             font-family=\"sans-serif\">{}</text>\n",
            canvas.width as f64 / 2.0,
            escape(title)
        ));
        canvas
    }

    fn px(&self, x: f64) -> f64 {
        let span = self.width as f64 - self.margin_left - self.margin_right;
        self.margin_left + (x - self.x_min) / (self.x_max - self.x_min) * span
    }

    fn py(&self, y: f64) -> f64 {
        let span = self.height as f64 - self.margin_top - self.margin_bottom;
        self.height as f64 - self.margin_bottom - (y - self.y_min) / (self.y_max - self.y_min) * span
    }

    fn axes(&mut self, x_label: &str, y_label: &str) {
        let x0 = self.margin_left;
        let x1 = self.width as f64 - self.margin_right;
        let y0 = self.height as f64 - self.margin_bottom;
        let y1 = self.margin_top;
        self.body.push_str(&format!(
            "<line x1=\"{x0:.1}\" y1=\"{y0:.1}\" x2=\"{x1:.1}\" y2=\"{y0:.1}\" stroke=\"black\"/>\n\
             <line x1=\"{x0:.1}\" y1=\"{y0:.1}\" x2=\"{x0:.1}\" y2=\"{y1:.1}\" stroke=\"black\"/>\n"
        ));
        // x ticks at round steps
        let span = self.x_max - self.x_min;
        let step = nice_step(span);
        let mut tick = (self.x_min / step).ceil() * step;
        while tick <= self.x_max + 1e-9 {
            let px = self.px(tick);
            self.body.push_str(&format!(
                "<line x1=\"{px:.1}\" y1=\"{y0:.1}\" x2=\"{px:.1}\" y2=\"{:.1}\" stroke=\"black\"/>\n\
                 <text x=\"{px:.1}\" y=\"{:.1}\" font-size=\"11\" text-anchor=\"middle\" \
                 font-family=\"sans-serif\">{}</text>\n",
                y0 + 5.0,
                y0 + 18.0,
                format_tick(tick)
            ));
            tick += step;
        }
        // y ticks at 0, 0.25, ..., for [0,1]; otherwise quarter steps
        let ystep = (self.y_max - self.y_min) / 4.0;
        for k in 0..=4 {
            let v = self.y_min + ystep * k as f64;
            let py = self.py(v);
            self.body.push_str(&format!(
                "<line x1=\"{:.1}\" y1=\"{py:.1}\" x2=\"{x0:.1}\" y2=\"{py:.1}\" stroke=\"black\"/>\n\
                 <text x=\"{:.1}\" y=\"{:.1}\" font-size=\"11\" text-anchor=\"end\" \
                 font-family=\"sans-serif\">{}</text>\n",
                x0 - 5.0,
                x0 - 8.0,
                py + 4.0,
                format_tick(v)
            ));
        }
        self.body.push_str(&format!(
            "<text x=\"{:.1}\" y=\"{:.1}\" font-size=\"13\" text-anchor=\"middle\" \
             font-family=\"sans-serif\">{}</text>\n",
            (x0 + x1) / 2.0,
            self.height as f64 - 12.0,
            escape(x_label)
        ));
        self.body.push_str(&format!(
            "<text x=\"16\" y=\"{:.1}\" font-size=\"13\" text-anchor=\"middle\" \
             font-family=\"sans-serif\" transform=\"rotate(-90 16 {:.1})\">{}</text>\n",
            (y0 + y1) / 2.0,
            (y0 + y1) / 2.0,
            escape(y_label)
        ));
    }

    fn circle(&mut self, x: f64, y: f64, r: f64, color: &str) {
        self.body.push_str(&format!(
            "<circle cx=\"{:.2}\" cy=\"{:.2}\" r=\"{:.2}\" fill=\"{color}\" \
             fill-opacity=\"0.6\" stroke=\"{color}\"/>\n",
            self.px(x),
            self.py(y),
            r
        ));
    }

    fn polyline(&mut self, points: &[(f64, f64)], color: &str, style: LineStyle) {
        if points.len() == 1 {
            // degenerate single-point series rendered as a marker
            self.circle(points[0].0, points[0].1, 4.0, color);
            return;
        }
        let path: Vec<String> = points
            .iter()
            .map(|(x, y)| format!("{:.2},{:.2}", self.px(*x), self.py(*y)))
            .collect();
        self.body.push_str(&format!(
            "<polyline points=\"{}\" fill=\"none\" stroke=\"{color}\" stroke-width=\"2\" \
             stroke-dasharray=\"{}\"/>\n",
            path.join(" "),
            style.dash_array()
        ));
    }

    fn legend_entry(&mut self, index: usize, label: &str, color: &str, style: LineStyle) {
        let x = self.margin_left + 10.0;
        let y = self.margin_top + 14.0 * index as f64 + 10.0;
        self.body.push_str(&format!(
            "<line x1=\"{x:.1}\" y1=\"{y:.1}\" x2=\"{:.1}\" y2=\"{y:.1}\" stroke=\"{color}\" \
             stroke-width=\"2\" stroke-dasharray=\"{}\"/>\n\
             <text x=\"{:.1}\" y=\"{:.1}\" font-size=\"11\" font-family=\"sans-serif\">{}</text>\n",
            x + 26.0,
            style.dash_array(),
            x + 32.0,
            y + 4.0,
            escape(label)
        ));
    }

    fn finish(self) -> FigureDocument {
        let svg = format!(
            "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{w}\" height=\"{h}\" \
             viewBox=\"0 0 {w} {h}\">\n<rect width=\"{w}\" height=\"{h}\" fill=\"white\"/>\n{body}</svg>\n",
            w = self.width,
            h = self.height,
            body = self.body
        );
        FigureDocument {
            width: self.width,
            height: self.height,
            svg,
        }
    }
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

fn nice_step(span: f64) -> f64 {
    for candidate in [1.0, 2.0, 5.0, 10.0, 20.0, 25.0, 50.0, 100.0, 200.0, 500.0] {
        if span / candidate <= 10.0 {
            return candidate;
        }
    }
    1000.0
}

fn format_tick(v: f64) -> String {
    if (v - v.round()).abs() < 1e-9 {
        format!("{}", v.round() as i64)
    } else {
        format!("{v:.2}")
    }
}

fn fit_style(kind: &FitKind) -> LineStyle {
    match kind {
        FitKind::Binned(Weighting::Weighted) => LineStyle::Solid,
        FitKind::Binned(Weighting::Unweighted) => LineStyle::Dashed,
        FitKind::RawYearly(_) => LineStyle::Dotted,
        FitKind::Polynomial {
            weighting: Weighting::Weighted,
            ..
        } => LineStyle::Solid,
        FitKind::Polynomial {
            weighting: Weighting::Unweighted,
            ..
        } => LineStyle::Dashed,
    }
}

/// One scatter point per bin plus one curve per successful fit, sampled at
/// 1-year steps.
pub fn render_change_plot(analysis: &ChangeAnalysis, spec: &PlotSpec) -> Result<FigureDocument> {
    if analysis.successful_fits().next().is_none() {
        return Err(Error::NoSuccessfulFit(analysis.name.clone()));
    }
    let bins = analysis.series.bins();
    let default_range = {
        let lo = bins.iter().map(|b| b.start_year).min().unwrap_or(1380) as f64;
        let hi = bins.iter().map(|b| b.end_year).max().unwrap_or(1850) as f64;
        (lo, hi)
    };
    let x_range = spec.x_range.unwrap_or(default_range);
    let title = if spec.title.is_empty() {
        analysis.name.clone()
    } else {
        spec.title.clone()
    };
    let mut canvas = Canvas::new(&title, x_range, (0.0, 1.0));
    canvas.axes(&spec.x_label, &spec.y_label);

    for (i, (kind, fit)) in analysis.successful_fits().enumerate() {
        let color = PALETTE[i % PALETTE.len()];
        let style = fit_style(kind);
        let mut points = Vec::new();
        let mut year = x_range.0.floor();
        while year <= x_range.1 {
            points.push((year, fit.predict(year).clamp(0.0, 1.0)));
            year += 1.0;
        }
        canvas.polyline(&points, color, style);
        canvas.legend_entry(i, &kind.label(), color, style);
    }
    for b in bins {
        let r = spec.radius_mode.radius(b.trials());
        canvas.circle(b.midpoint, b.proportion(), r, "black");
    }
    Ok(canvas.finish())
}

/// One polyline per change: x = window size, y = R² at the given overlap.
pub fn render_grid_plot(results: &[GridResult], overlap: u32) -> Result<FigureDocument> {
    let mut series = Vec::new();
    for grid in results {
        let points: Vec<(f64, f64)> = grid
            .entries_at_overlap(overlap)
            .into_iter()
            .filter_map(|e| e.r2.map(|r2| (e.window as f64, r2)))
            .collect();
        if !points.is_empty() {
            series.push((grid.change.clone(), points));
        }
    }
    if series.is_empty() {
        return Err(Error::NoEntriesAtOverlap(overlap));
    }
    let x_min = series
        .iter()
        .flat_map(|(_, p)| p.iter().map(|(x, _)| *x))
        .fold(f64::INFINITY, f64::min);
    let x_max = series
        .iter()
        .flat_map(|(_, p)| p.iter().map(|(x, _)| *x))
        .fold(f64::NEG_INFINITY, f64::max);
    let title = format!("goodness of fit vs window size ({overlap}-year overlap)");
    let mut canvas = Canvas::new(&title, (x_min, x_max.max(x_min + 1.0)), (0.0, 1.0));
    canvas.axes("window size (years)", "McFadden R\u{b2}");
    for (i, (name, points)) in series.iter().enumerate() {
        let color = PALETTE[i % PALETTE.len()];
        canvas.polyline(points, color, LineStyle::Solid);
        canvas.legend_entry(i, name, color, LineStyle::Solid);
    }
    Ok(canvas.finish())
}

/// All change trajectories on a shared axis pair.
pub fn render_composite_plot(model: &CompositeModel) -> Result<FigureDocument> {
    let mut canvas = Canvas::new(
        "all changes",
        (model.year_min as f64, model.year_max as f64),
        (0.0, 1.0),
    );
    canvas.axes("year", "probability of the innovative form");
    for (i, curve) in model.curves.iter().enumerate() {
        let color = PALETTE[i % PALETTE.len()];
        let points: Vec<(f64, f64)> = curve
            .years
            .iter()
            .zip(&curve.probabilities)
            .map(|(y, p)| (*y as f64, p.clamp(0.0, 1.0)))
            .collect();
        canvas.polyline(&points, color, LineStyle::Solid);
        canvas.legend_entry(i, &curve.name, color, LineStyle::Solid);
    }
    Ok(canvas.finish())
}

/// Markdown and CSV renderings of selected grid cells, changes as rows and
/// (window, overlap) settings as columns, R² to 3 decimals.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TableOutput {
    pub markdown: String,
    pub csv: String,
    pub warnings: Vec<String>,
}

pub fn emit_table(results: &[GridResult], cells: &[(u32, u32)]) -> TableOutput {
    let mut warnings = Vec::new();
    let mut markdown = String::from("| change |");
    let mut csv = String::from("change");
    for (w, o) in cells {
        markdown.push_str(&format!(" {w}/{o} |"));
        csv.push_str(&format!(",r2_w{w}_o{o}"));
    }
    markdown.push('\n');
    markdown.push_str("|---|");
    for _ in cells {
        markdown.push_str("---|");
    }
    markdown.push('\n');
    csv.push('\n');

    for grid in results {
        markdown.push_str(&format!("| {} |", grid.change));
        csv.push_str(&grid.change);
        for (w, o) in cells {
            match grid.entry(*w, *o).and_then(|e| e.r2) {
                Some(r2) => {
                    markdown.push_str(&format!(" {r2:.3} |"));
                    csv.push_str(&format!(",{r2:.3}"));
                }
                None => {
                    warnings.push(format!(
                        "missing cell ({w},{o}) for change `{}`",
                        grid.change
                    ));
                    markdown.push_str("  |");
                    csv.push(',');
                }
            }
        }
        markdown.push('\n');
        csv.push('\n');
    }
    TableOutput {
        markdown,
        csv,
        warnings,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::analysis::{analyze_change, grid_search, AnalysisConfig, GridEntry};
    use crate::dataset::ChangeDataset;
    use crate::glm::Weighting;

    fn s_curve(name: &str, t_half: f64) -> ChangeDataset {
        let rows = (1400..1900).step_by(5).map(|y| {
            let p = 1.0 / (1.0 + (-(0.05 * (y as f64 - t_half))).exp());
            let inn = (p * 200.0).round() as u64;
            (y, 200 - inn, inn)
        });
        ChangeDataset::from_rows(name, rows).unwrap()
    }

    #[test]
    fn change_plot_has_one_point_per_bin_and_one_curve_per_fit() {
        let cfg = AnalysisConfig::default();
        let analysis = analyze_change(&s_curve("s", 1650.0), &cfg).unwrap();
        let doc = render_change_plot(&analysis, &PlotSpec::default()).unwrap();
        let n_fits = analysis.successful_fits().count();
        assert_eq!(n_fits, 4);
        assert_eq!(doc.svg().matches("<polyline").count(), n_fits);
        assert_eq!(
            doc.svg().matches("fill=\"black\"").count(),
            analysis.series.len()
        );
    }

    #[test]
    fn rendering_is_deterministic() {
        let cfg = AnalysisConfig::default();
        let analysis = analyze_change(&s_curve("s", 1650.0), &cfg).unwrap();
        let a = render_change_plot(&analysis, &PlotSpec::default()).unwrap();
        let b = render_change_plot(&analysis, &PlotSpec::default()).unwrap();
        assert_eq!(a.svg(), b.svg());
    }

    #[test]
    fn log_radius_tracks_attestations() {
        let mode = RadiusMode::LogAttestations { base_radius: 1.0 };
        assert!(mode.radius(451) > mode.radius(7));
        assert!(mode.radius(0) >= MIN_POINT_RADIUS);
        assert!(mode.radius(u64::MAX / 2) <= MAX_POINT_RADIUS);
    }

    #[test]
    fn grid_plot_one_polyline_per_change() {
        let ds1 = s_curve("one", 1600.0);
        let ds2 = s_curve("two", 1700.0);
        let windows = [20u32, 40, 60];
        let grids = vec![
            grid_search(&ds1, &windows, &[10], Weighting::Unweighted, 1, 1380),
            grid_search(&ds2, &windows, &[10], Weighting::Unweighted, 1, 1380),
        ];
        let doc = render_grid_plot(&grids, 10).unwrap();
        assert_eq!(doc.svg().matches("<polyline").count(), 2);
        assert!(matches!(
            render_grid_plot(&grids, 99),
            Err(Error::NoEntriesAtOverlap(99))
        ));
    }

    #[test]
    fn constant_grid_renders_horizontal_lines() {
        let grid = GridResult {
            change: "flat".to_string(),
            weighting: Weighting::Unweighted,
            degree: 1,
            entries: (1..=5)
                .map(|k| GridEntry {
                    window: k * 10,
                    overlap: 0,
                    r2: Some(0.9),
                    p_value: Some(0.001),
                    converged: true,
                    error: None,
                })
                .collect(),
        };
        let doc = render_grid_plot(std::slice::from_ref(&grid), 0).unwrap();
        // a horizontal polyline repeats the same y pixel for every point
        let polyline = doc
            .svg()
            .lines()
            .find(|l| l.contains("<polyline"))
            .unwrap()
            .to_string();
        let ys: Vec<String> = polyline
            .split_whitespace()
            .filter(|t| t.contains(','))
            .map(|t| {
                t.rsplit(',')
                    .next()
                    .unwrap()
                    .trim_end_matches('"')
                    .to_string()
            })
            .collect();
        assert!(ys.windows(2).all(|w| w[0] == w[1]));
    }

    #[test]
    fn single_cell_grid_renders_a_marker() {
        let grid = GridResult {
            change: "point".to_string(),
            weighting: Weighting::Unweighted,
            degree: 1,
            entries: vec![GridEntry {
                window: 50,
                overlap: 0,
                r2: Some(0.5),
                p_value: Some(0.01),
                converged: true,
                error: None,
            }],
        };
        let doc = render_grid_plot(std::slice::from_ref(&grid), 0).unwrap();
        assert_eq!(doc.svg().matches("<polyline").count(), 0);
        assert!(doc.svg().contains("<circle"));
    }

    #[test]
    fn table_rounds_to_three_decimals() {
        let grid = GridResult {
            change: "c".to_string(),
            weighting: Weighting::Unweighted,
            degree: 1,
            entries: vec![GridEntry {
                window: 50,
                overlap: 20,
                r2: Some(0.95238),
                p_value: Some(0.001),
                converged: true,
                error: None,
            }],
        };
        let table = emit_table(std::slice::from_ref(&grid), &[(50, 20), (20, 5)]);
        assert!(table.markdown.contains("0.952"));
        assert_eq!(table.warnings.len(), 1); // missing (20,5)
        assert!(table.csv.contains("c,0.952,\n"));
    }

    #[test]
    fn empty_results_give_header_only_table() {
        let table = emit_table(&[], &[(50, 20)]);
        assert_eq!(table.markdown.lines().count(), 2);
        assert_eq!(table.csv.lines().count(), 1);
        assert!(table.warnings.is_empty());
    }
}
