//! Self-contained SVG plots of finished runs.
//!
//! Output depends only on the input data: coordinates are printed with a
//! fixed number of decimals and runs keep the order they were given in
//! (except for the ranking, which sorts).

use std::fmt::Write as _;
use std::path::Path;
use std::str::FromStr;

use crate::metrics::{read_metrics, ResultFile};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum PlotStyle {
    /// Final mean energy with standard-error bars, one marker per run.
    Dots,
    /// Energy and best-checkpoint energy against epoch, with a zoom inset.
    Curves,
    /// Horizontal bars sorted from lowest to highest final energy.
    Ranking,
}

impl FromStr for PlotStyle {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "dots" => Ok(Self::Dots),
            "curves" => Ok(Self::Curves),
            "ranking" => Ok(Self::Ranking),
            _ => Err(format!("unknown plot style `{s}` (expected dots, curves or ranking)")),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct CurvePoint {
    pub epoch: usize,
    pub energy: f64,
    pub best: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct RunData {
    pub label: String,
    /// Latest evaluation: `(mean, std_error)`.
    pub result: Option<(f64, f64)>,
    pub curve: Vec<CurvePoint>,
}

/// Reads whatever a run directory has; problems become warnings.
pub fn load_run(dir: &Path, warnings: &mut Vec<String>) -> RunData {
    let label = dir
        .file_name()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| dir.display().to_string());
    let result = match ResultFile::load(&dir.join("result.json")) {
        Ok(r) => r.latest().map(|e| (e.mean, e.std_error)),
        Err(e) => {
            warnings.push(format!("{}: no result.json ({e})", dir.display()));
            None
        }
    };
    let curve = match read_metrics(&dir.join("metrics.jsonl")) {
        Ok(recs) => recs
            .iter()
            .map(|r| CurvePoint {
                epoch: r.epoch,
                energy: r.energy,
                best: r.best_energy,
            })
            .collect(),
        Err(e) => {
            warnings.push(format!("{}: no metrics.jsonl ({e})", dir.display()));
            Vec::new()
        }
    };
    RunData {
        label,
        result,
        curve,
    }
}

const W: f64 = 640.0;
const H: f64 = 400.0;
const LEFT: f64 = 70.0;
const RIGHT: f64 = 20.0;
const TOP: f64 = 30.0;
const BOTTOM: f64 = 60.0;
const PALETTE: [&str; 6] = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#17becf"];

fn escape(s: &str) -> String {
    s.replace('&', "&amp;")
        .replace('<', "&lt;")
        .replace('>', "&gt;")
        .replace('"', "&quot;")
}

fn header(title: &str) -> String {
    format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{W}\" height=\"{H}\" viewBox=\"0 0 {W} {H}\" font-family=\"sans-serif\" font-size=\"11\">\n\
         <rect width=\"{W}\" height=\"{H}\" fill=\"white\"/>\n\
         <text x=\"{}\" y=\"18\" text-anchor=\"middle\" font-size=\"13\">{}</text>\n",
        W / 2.0,
        escape(title)
    )
}

/// Axis-aligned linear map from data to pixels.
#[derive(Clone, Copy)]
struct Frame {
    x0: f64,
    x1: f64,
    y0: f64,
    y1: f64,
    px0: f64,
    px1: f64,
    py0: f64,
    py1: f64,
}

impl Frame {
    fn x(&self, v: f64) -> f64 {
        self.px0 + (v - self.x0) / (self.x1 - self.x0) * (self.px1 - self.px0)
    }
    fn y(&self, v: f64) -> f64 {
        self.py0 - (v - self.y0) / (self.y1 - self.y0) * (self.py0 - self.py1)
    }
}

fn padded(lo: f64, hi: f64) -> (f64, f64) {
    if !(lo.is_finite() && hi.is_finite()) {
        return (0.0, 1.0);
    }
    let span = (hi - lo).abs().max(1e-9 * lo.abs().max(1.0));
    (lo - 0.05 * span, hi + 0.05 * span)
}

fn y_ticks(svg: &mut String, f: &Frame, label: &str) {
    for k in 0..=4 {
        let v = f.y0 + (f.y1 - f.y0) * k as f64 / 4.0;
        let y = f.y(v);
        let _ = writeln!(
            svg,
            "<line x1=\"{:.2}\" y1=\"{y:.2}\" x2=\"{:.2}\" y2=\"{y:.2}\" stroke=\"#ddd\"/>\n<text x=\"{:.2}\" y=\"{:.2}\" text-anchor=\"end\">{v:.4}</text>",
            f.px0,
            f.px1,
            f.px0 - 4.0,
            y + 4.0
        );
    }
    let _ = writeln!(
        svg,
        "<text x=\"14\" y=\"{:.2}\" transform=\"rotate(-90 14 {:.2})\" text-anchor=\"middle\">{label}</text>",
        (f.py0 + f.py1) / 2.0,
        (f.py0 + f.py1) / 2.0
    );
}

fn axes(svg: &mut String, f: &Frame) {
    let _ = writeln!(
        svg,
        "<rect x=\"{:.2}\" y=\"{:.2}\" width=\"{:.2}\" height=\"{:.2}\" fill=\"none\" stroke=\"black\"/>",
        f.px0,
        f.py1,
        f.px1 - f.px0,
        f.py0 - f.py1
    );
}

fn dots(runs: &[RunData]) -> String {
    let mut svg = header("Final energy per run");
    let pts: Vec<(usize, &RunData, f64, f64)> = runs
        .iter()
        .enumerate()
        .filter_map(|(i, r)| r.result.map(|(m, s)| (i, r, m, if s.is_finite() { s } else { 0.0 })))
        .filter(|p| p.2.is_finite())
        .collect();
    let lo = pts.iter().map(|p| p.2 - p.3).fold(f64::INFINITY, f64::min);
    let hi = pts.iter().map(|p| p.2 + p.3).fold(f64::NEG_INFINITY, f64::max);
    let (y0, y1) = padded(lo, hi);
    let f = Frame {
        x0: -0.5,
        x1: runs.len().max(1) as f64 - 0.5,
        y0,
        y1,
        px0: LEFT,
        px1: W - RIGHT,
        py0: H - BOTTOM,
        py1: TOP,
    };
    axes(&mut svg, &f);
    y_ticks(&mut svg, &f, "energy");
    for &(i, r, m, s) in &pts {
        let x = f.x(i as f64);
        let c = PALETTE[i % PALETTE.len()];
        let _ = writeln!(
            svg,
            "<g class=\"run\"><line x1=\"{x:.2}\" y1=\"{:.2}\" x2=\"{x:.2}\" y2=\"{:.2}\" stroke=\"{c}\" class=\"errorbar\"/>\n\
             <line x1=\"{:.2}\" y1=\"{:.2}\" x2=\"{:.2}\" y2=\"{:.2}\" stroke=\"{c}\"/>\n\
             <line x1=\"{:.2}\" y1=\"{:.2}\" x2=\"{:.2}\" y2=\"{:.2}\" stroke=\"{c}\"/>\n\
             <circle cx=\"{x:.2}\" cy=\"{:.2}\" r=\"4\" fill=\"{c}\" class=\"marker\"><title>{}: {m:.6} ± {s:.6}</title></circle></g>",
            f.y(m - s),
            f.y(m + s),
            x - 5.0,
            f.y(m - s),
            x + 5.0,
            f.y(m - s),
            x - 5.0,
            f.y(m + s),
            x + 5.0,
            f.y(m + s),
            f.y(m),
            escape(&r.label)
        );
    }
    for (i, r) in runs.iter().enumerate() {
        let x = f.x(i as f64);
        let y = H - BOTTOM + 14.0;
        let _ = writeln!(
            svg,
            "<text x=\"{x:.2}\" y=\"{y:.2}\" text-anchor=\"end\" transform=\"rotate(-20 {x:.2} {y:.2})\">{}</text>",
            escape(&r.label)
        );
    }
    svg.push_str("</svg>\n");
    svg
}

fn polyline(f: &Frame, pts: impl Iterator<Item = (f64, f64)>) -> String {
    let mut s = String::new();
    for (x, y) in pts {
        if x.is_finite() && y.is_finite() {
            let _ = write!(s, "{:.2},{:.2} ", f.x(x), f.y(y));
        }
    }
    s.trim_end().to_string()
}

fn range<'a>(vals: impl Iterator<Item = &'a f64>) -> (f64, f64) {
    vals.filter(|v| v.is_finite())
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| (lo.min(v), hi.max(v)))
}

fn draw_curves(svg: &mut String, f: &Frame, runs: &[RunData], from_epoch: usize, class: &str) {
    for (i, r) in runs.iter().enumerate() {
        let c = PALETTE[i % PALETTE.len()];
        let pts = r.curve.iter().filter(|p| p.epoch >= from_epoch);
        let _ = writeln!(
            svg,
            "<polyline class=\"{class} energy\" fill=\"none\" stroke=\"{c}\" stroke-opacity=\"0.45\" points=\"{}\"/>",
            polyline(f, pts.clone().map(|p| (p.epoch as f64, p.energy)))
        );
        let _ = writeln!(
            svg,
            "<polyline class=\"{class} best\" fill=\"none\" stroke=\"{c}\" stroke-width=\"2\" points=\"{}\"/>",
            polyline(f, pts.map(|p| (p.epoch as f64, p.best)))
        );
    }
}

fn curves(runs: &[RunData]) -> String {
    let mut svg = header("Training energy");
    let last = runs
        .iter()
        .flat_map(|r| r.curve.last().map(|p| p.epoch))
        .max()
        .unwrap_or(1)
        .max(1);
    let (lo, hi) = range(runs.iter().flat_map(|r| r.curve.iter().flat_map(|p| [&p.energy, &p.best])));
    let (y0, y1) = padded(lo, hi);
    let f = Frame {
        x0: 0.0,
        x1: last as f64,
        y0,
        y1,
        px0: LEFT,
        px1: W - RIGHT,
        py0: H - BOTTOM,
        py1: TOP,
    };
    axes(&mut svg, &f);
    y_ticks(&mut svg, &f, "energy");
    for k in 0..=4 {
        let v = last as f64 * k as f64 / 4.0;
        let _ = writeln!(
            svg,
            "<text x=\"{:.2}\" y=\"{:.2}\" text-anchor=\"middle\">{v:.0}</text>",
            f.x(v),
            H - BOTTOM + 14.0
        );
    }
    let _ = writeln!(
        svg,
        "<text x=\"{:.2}\" y=\"{:.2}\" text-anchor=\"middle\">epoch</text>",
        (LEFT + W - RIGHT) / 2.0,
        H - BOTTOM + 30.0
    );
    draw_curves(&mut svg, &f, runs, 0, "main");

    // Inset: the last fifth of training, rescaled to the best-energy lines.
    let from = last - last / 5;
    let (lo, hi) = range(
        runs.iter()
            .flat_map(|r| r.curve.iter().filter(|p| p.epoch >= from).map(|p| &p.best)),
    );
    if lo.is_finite() && last >= 5 {
        let (y0, y1) = padded(lo, hi);
        let inset = Frame {
            x0: from as f64,
            x1: last as f64,
            y0,
            y1,
            px0: W - RIGHT - 220.0,
            px1: W - RIGHT - 10.0,
            py0: TOP + 130.0,
            py1: TOP + 10.0,
        };
        let _ = writeln!(
            svg,
            "<g class=\"inset\"><rect x=\"{:.2}\" y=\"{:.2}\" width=\"{:.2}\" height=\"{:.2}\" fill=\"white\" stroke=\"black\"/>",
            inset.px0,
            inset.py1,
            inset.px1 - inset.px0,
            inset.py0 - inset.py1
        );
        draw_curves(&mut svg, &inset, runs, from, "inset");
        let _ = writeln!(
            svg,
            "<text x=\"{:.2}\" y=\"{:.2}\" font-size=\"9\">epochs {from}-{last}, best {lo:.5}</text></g>",
            inset.px0 + 4.0,
            inset.py0 - 4.0
        );
    }
    legend(&mut svg, runs);
    svg.push_str("</svg>\n");
    svg
}

fn legend(svg: &mut String, runs: &[RunData]) {
    for (i, r) in runs.iter().enumerate() {
        let y = H - 12.0;
        let x = LEFT + 140.0 * (i % 4) as f64;
        let y = y - 12.0 * (i / 4) as f64;
        let c = PALETTE[i % PALETTE.len()];
        let _ = writeln!(
            svg,
            "<rect x=\"{x:.2}\" y=\"{:.2}\" width=\"10\" height=\"10\" fill=\"{c}\"/><text x=\"{:.2}\" y=\"{y:.2}\">{}</text>",
            y - 9.0,
            x + 14.0,
            escape(&r.label)
        );
    }
}

/// Runs with a finite final energy, lowest first; ties keep input order.
pub fn ranked(runs: &[RunData]) -> Vec<(&RunData, f64, f64)> {
    let mut v: Vec<_> = runs
        .iter()
        .filter_map(|r| r.result.map(|(m, s)| (r, m, s)))
        .filter(|p| p.1.is_finite())
        .collect();
    v.sort_by(|a, b| a.1.total_cmp(&b.1));
    v
}

fn ranking(runs: &[RunData]) -> String {
    let mut svg = header("Runs ranked by final energy");
    let order = ranked(runs);
    let (lo, hi) = range(order.iter().map(|p| &p.1));
    let (x0, x1) = padded(lo, hi);
    let row = ((H - TOP - BOTTOM) / order.len().max(1) as f64).min(28.0);
    let f = Frame {
        x0,
        x1,
        y0: 0.0,
        y1: 1.0,
        px0: LEFT + 110.0,
        px1: W - RIGHT - 60.0,
        py0: H - BOTTOM,
        py1: TOP,
    };
    for (k, (r, m, s)) in order.iter().enumerate() {
        let y = TOP + k as f64 * row;
        let c = PALETTE[k % PALETTE.len()];
        let w = (f.x(*m) - f.px0).max(1.0);
        let _ = writeln!(
            svg,
            "<g class=\"rank\" data-rank=\"{}\"><text x=\"{:.2}\" y=\"{:.2}\" text-anchor=\"end\">{}. {}</text>\n\
             <rect x=\"{:.2}\" y=\"{:.2}\" width=\"{w:.2}\" height=\"{:.2}\" fill=\"{c}\"/>\n\
             <text x=\"{:.2}\" y=\"{:.2}\">{m:.5} ± {s:.5}</text></g>",
            k + 1,
            f.px0 - 6.0,
            y + row * 0.65,
            k + 1,
            escape(&r.label),
            f.px0,
            y + row * 0.15,
            row * 0.7,
            f.px0 + w + 4.0,
            y + row * 0.65
        );
    }
    let _ = writeln!(
        svg,
        "<text x=\"{:.2}\" y=\"{:.2}\" text-anchor=\"middle\">bars span {x0:.4} to each run's final energy (lower is better)</text>",
        W / 2.0,
        H - 20.0
    );
    svg.push_str("</svg>\n");
    svg
}

pub fn render(style: PlotStyle, runs: &[RunData]) -> String {
    match style {
        PlotStyle::Dots => dots(runs),
        PlotStyle::Curves => curves(runs),
        PlotStyle::Ranking => ranking(runs),
    }
}
