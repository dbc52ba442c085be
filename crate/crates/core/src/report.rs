//! Static report emitters: SVG plots, parallel-coordinates data and summary
//! tables. Every emitter is a pure function of its input.

use std::fmt::Write as _;

use thiserror::Error;

use crate::performance::ConvergenceCurve;

#[derive(Debug, Error, PartialEq)]
pub enum ReportError {
    #[error("nothing to report")]
    Empty,
    #[error("row {row} has {found} values, expected {expected}")]
    Width {
        row: usize,
        expected: usize,
        found: usize,
    },
}

const PALETTE: [&str; 8] = [
    "#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b", "#e377c2", "#17becf",
];
/// Quartile classes from worst (0) to best (3).
const QUARTILE_COLORS: [&str; 4] = ["#d7191c", "#fdae61", "#abd9e9", "#2c7bb6"];

const WIDTH: f64 = 720.0;
const HEIGHT: f64 = 440.0;
const LEFT: f64 = 70.0;
const RIGHT: f64 = 170.0;
const TOP: f64 = 30.0;
const BOTTOM: f64 = 60.0;

fn xml(s: &str) -> String {
    s.replace('&', "&amp;")
        .replace('<', "&lt;")
        .replace('>', "&gt;")
        .replace('"', "&quot;")
}

fn svg_open(s: &mut String) {
    writeln!(
        s,
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{WIDTH}\" height=\"{HEIGHT}\" viewBox=\"0 0 {WIDTH} {HEIGHT}\" font-family=\"sans-serif\" font-size=\"12\">"
    )
    .unwrap();
    writeln!(
        s,
        "<rect width=\"{WIDTH}\" height=\"{HEIGHT}\" fill=\"white\"/>"
    )
    .unwrap();
}

/// Linear map from a data range onto a pixel range; a degenerate range maps
/// to the middle.
#[derive(Clone, Copy)]
struct Scale {
    lo: f64,
    hi: f64,
    a: f64,
    b: f64,
}

impl Scale {
    fn at(&self, v: f64) -> f64 {
        if self.hi > self.lo {
            self.a + (v - self.lo) / (self.hi - self.lo) * (self.b - self.a)
        } else {
            (self.a + self.b) / 2.0
        }
    }
}

fn polyline(points: impl Iterator<Item = (f64, f64)>) -> String {
    points
        .map(|(x, y)| format!("{x:.2},{y:.2}"))
        .collect::<Vec<_>>()
        .join(" ")
}

/// Mean best-so-far curves with their confidence bands, one line and legend
/// entry per labelled curve.
pub fn convergence_svg(curves: &[(String, ConvergenceCurve)]) -> Result<String, ReportError> {
    if curves.is_empty() || curves.iter().all(|(_, c)| c.evals.is_empty()) {
        return Err(ReportError::Empty);
    }
    let all = curves
        .iter()
        .flat_map(|(_, c)| c.ci_low.iter().chain(&c.ci_high).chain(&c.mean));
    let (mut lo, mut hi) = all.fold((f64::INFINITY, f64::NEG_INFINITY), |(l, h), v| {
        (l.min(*v), h.max(*v))
    });
    if hi - lo < 1e-12 {
        lo -= 0.05;
        hi += 0.05;
    }
    let max_x = curves
        .iter()
        .flat_map(|(_, c)| c.evals.last())
        .max()
        .copied()
        .unwrap_or(1);
    let xs = Scale {
        lo: 1.0,
        hi: max_x as f64,
        a: LEFT,
        b: WIDTH - RIGHT,
    };
    let ys = Scale {
        lo,
        hi,
        a: HEIGHT - BOTTOM,
        b: TOP,
    };
    let mut s = String::new();
    svg_open(&mut s);
    axes(&mut s, xs, ys, "evaluations", "mean best AOCC");
    for (i, (label, c)) in curves.iter().enumerate() {
        let color = PALETTE[i % PALETTE.len()];
        let x = |k: usize| xs.at(c.evals[k] as f64);
        let upper = (0..c.evals.len()).map(|k| (x(k), ys.at(c.ci_high[k])));
        let lower = (0..c.evals.len()).rev().map(|k| (x(k), ys.at(c.ci_low[k])));
        writeln!(
            s,
            "<polygon class=\"band\" points=\"{}\" fill=\"{color}\" fill-opacity=\"0.2\" stroke=\"none\"/>",
            polyline(upper.chain(lower))
        )
        .unwrap();
        writeln!(
            s,
            "<polyline class=\"curve\" points=\"{}\" fill=\"none\" stroke=\"{color}\" stroke-width=\"1.5\"/>",
            polyline((0..c.evals.len()).map(|k| (x(k), ys.at(c.mean[k]))))
        )
        .unwrap();
        let ly = TOP + 18.0 * i as f64;
        let lx = WIDTH - RIGHT + 15.0;
        writeln!(
            s,
            "<g class=\"legend\"><line x1=\"{lx}\" y1=\"{ly}\" x2=\"{}\" y2=\"{ly}\" stroke=\"{color}\" stroke-width=\"2\"/><text x=\"{}\" y=\"{}\">{}</text></g>",
            lx + 20.0,
            lx + 26.0,
            ly + 4.0,
            xml(label)
        )
        .unwrap();
    }
    s.push_str("</svg>\n");
    Ok(s)
}

fn axes(s: &mut String, xs: Scale, ys: Scale, xlabel: &str, ylabel: &str) {
    let (x0, x1, y0, y1) = (xs.a, xs.b, ys.a, ys.b);
    writeln!(
        s,
        "<line x1=\"{x0}\" y1=\"{y0}\" x2=\"{x1}\" y2=\"{y0}\" stroke=\"black\"/>"
    )
    .unwrap();
    writeln!(
        s,
        "<line x1=\"{x0}\" y1=\"{y0}\" x2=\"{x0}\" y2=\"{y1}\" stroke=\"black\"/>"
    )
    .unwrap();
    for k in 0..=4 {
        let f = k as f64 / 4.0;
        let xv = xs.lo + f * (xs.hi - xs.lo);
        let yv = ys.lo + f * (ys.hi - ys.lo);
        let (px, py) = (xs.at(xv), ys.at(yv));
        writeln!(
            s,
            "<text x=\"{px:.2}\" y=\"{:.2}\" text-anchor=\"middle\">{xv:.0}</text>",
            y0 + 16.0
        )
        .unwrap();
        writeln!(
            s,
            "<text x=\"{:.2}\" y=\"{:.2}\" text-anchor=\"end\">{yv:.3}</text>",
            x0 - 6.0,
            py + 4.0
        )
        .unwrap();
    }
    writeln!(
        s,
        "<text class=\"xlabel\" x=\"{:.2}\" y=\"{:.2}\" text-anchor=\"middle\">{}</text>",
        (x0 + x1) / 2.0,
        HEIGHT - 15.0,
        xml(xlabel)
    )
    .unwrap();
    writeln!(
        s,
        "<text class=\"ylabel\" transform=\"translate(18,{:.2}) rotate(-90)\" text-anchor=\"middle\">{}</text>",
        (y0 + y1) / 2.0,
        xml(ylabel)
    )
    .unwrap();
}

/// One poly-line of a parallel-coordinates plot.
#[derive(Debug, Clone, PartialEq)]
pub struct ParallelRow {
    pub label: String,
    pub values: Vec<f64>,
    pub fitness: f64,
}

/// Performance quartile of each fitness: `min(3, floor(4 * below / n))`
/// where `below` counts strictly smaller fitness values. Ties share a class.
pub fn quartile_classes(fitness: &[f64]) -> Vec<u8> {
    let n = fitness.len();
    let mut sorted = fitness.to_vec();
    sorted.sort_by(f64::total_cmp);
    fitness
        .iter()
        .map(|f| {
            let below = sorted.partition_point(|v| v < f);
            (4 * below / n).min(3) as u8
        })
        .collect()
}

/// Per-axis min-max normalisation; a constant axis maps to 0.5.
pub fn normalize_axes(rows: &[ParallelRow], n_axes: usize) -> Vec<Vec<f64>> {
    let bounds: Vec<(f64, f64)> = (0..n_axes)
        .map(|a| {
            rows.iter()
                .map(|r| r.values[a])
                .fold((f64::INFINITY, f64::NEG_INFINITY), |(l, h), v| {
                    (l.min(v), h.max(v))
                })
        })
        .collect();
    rows.iter()
        .map(|r| {
            r.values
                .iter()
                .zip(&bounds)
                .map(|(v, (lo, hi))| if hi > lo { (v - lo) / (hi - lo) } else { 0.5 })
                .collect()
        })
        .collect()
}

/// Parallel-coordinates data as a long CSV and an SVG rendering.
#[derive(Debug, Clone, PartialEq)]
pub struct ParallelCoordinates {
    pub csv: String,
    pub svg: String,
}

pub fn parallel_coordinates(
    axes: &[&str],
    rows: &[ParallelRow],
) -> Result<ParallelCoordinates, ReportError> {
    if rows.is_empty() || axes.is_empty() {
        return Err(ReportError::Empty);
    }
    for (i, r) in rows.iter().enumerate() {
        if r.values.len() != axes.len() {
            return Err(ReportError::Width {
                row: i,
                expected: axes.len(),
                found: r.values.len(),
            });
        }
    }
    let fitness: Vec<f64> = rows.iter().map(|r| r.fitness).collect();
    let classes = quartile_classes(&fitness);
    let norm = normalize_axes(rows, axes.len());

    let mut csv = String::from("label,axis,value,normalized,fitness,quartile\n");
    for ((r, n), q) in rows.iter().zip(&norm).zip(&classes) {
        for (a, name) in axes.iter().enumerate() {
            writeln!(
                csv,
                "{},{name},{:?},{:?},{:?},{q}",
                r.label, r.values[a], n[a], r.fitness
            )
            .unwrap();
        }
    }

    let mut svg = String::new();
    svg_open(&mut svg);
    let (x0, x1, y0, y1) = (LEFT, WIDTH - RIGHT, HEIGHT - BOTTOM, TOP);
    let ax = |a: usize| {
        if axes.len() == 1 {
            (x0 + x1) / 2.0
        } else {
            x0 + a as f64 * (x1 - x0) / (axes.len() - 1) as f64
        }
    };
    for (a, name) in axes.iter().enumerate() {
        let x = ax(a);
        writeln!(
            svg,
            "<line x1=\"{x:.2}\" y1=\"{y0}\" x2=\"{x:.2}\" y2=\"{y1}\" stroke=\"#444\"/>"
        )
        .unwrap();
        writeln!(
            svg,
            "<text x=\"{x:.2}\" y=\"{:.2}\" text-anchor=\"middle\">{}</text>",
            y0 + 18.0,
            xml(name)
        )
        .unwrap();
    }
    // draw the best class last so it stays on top
    let mut order: Vec<usize> = (0..rows.len()).collect();
    order.sort_by_key(|&i| classes[i]);
    for i in order {
        let pts = norm[i]
            .iter()
            .enumerate()
            .map(|(a, v)| (ax(a), y0 + v * (y1 - y0)));
        writeln!(
            svg,
            "<polyline class=\"q{}\" points=\"{}\" fill=\"none\" stroke=\"{}\" stroke-opacity=\"0.7\"/>",
            classes[i],
            polyline(pts),
            QUARTILE_COLORS[classes[i] as usize]
        )
        .unwrap();
    }
    for (q, color) in QUARTILE_COLORS.iter().enumerate().rev() {
        let ly = TOP + 18.0 * (3 - q) as f64;
        let lx = WIDTH - RIGHT + 30.0;
        writeln!(
            svg,
            "<g class=\"legend\"><line x1=\"{lx}\" y1=\"{ly}\" x2=\"{}\" y2=\"{ly}\" stroke=\"{color}\" stroke-width=\"2\"/><text x=\"{}\" y=\"{}\">quartile {}</text></g>",
            lx + 20.0,
            lx + 26.0,
            ly + 4.0,
            q + 1
        )
        .unwrap();
    }
    svg.push_str("</svg>\n");
    Ok(ParallelCoordinates { csv, svg })
}

/// Results of one run as consumed by [`summary_table`].
#[derive(Debug, Clone, PartialEq)]
pub struct RunOutcome {
    pub variant_id: String,
    /// Best training fitness found by the run.
    pub final_fitness: f64,
    /// AOCC of the final algorithm on each test instance.
    pub test_aocc: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Stats {
    pub n: usize,
    pub mean: f64,
    pub median: f64,
    pub min: f64,
    pub max: f64,
}

impl Stats {
    pub fn of(values: &[f64]) -> Option<Stats> {
        if values.is_empty() {
            return None;
        }
        let mut v = values.to_vec();
        v.sort_by(f64::total_cmp);
        let n = v.len();
        let median = if n % 2 == 1 {
            v[n / 2]
        } else {
            (v[n / 2 - 1] + v[n / 2]) / 2.0
        };
        Some(Stats {
            n,
            mean: v.iter().sum::<f64>() / n as f64,
            median,
            min: v[0],
            max: v[n - 1],
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SummaryRow {
    pub variant_id: String,
    pub runs: usize,
    pub train: Stats,
    /// Pooled over every test trace of every run; `None` without test traces.
    pub test: Option<Stats>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SummaryTable {
    pub rows: Vec<SummaryRow>,
}

pub fn summary_table(outcomes: &[RunOutcome]) -> Result<SummaryTable, ReportError> {
    if outcomes.is_empty() {
        return Err(ReportError::Empty);
    }
    let mut variants: Vec<&str> = Vec::new();
    for o in outcomes {
        if !variants.contains(&o.variant_id.as_str()) {
            variants.push(&o.variant_id);
        }
    }
    let rows = variants
        .into_iter()
        .map(|v| {
            let runs: Vec<&RunOutcome> = outcomes.iter().filter(|o| o.variant_id == v).collect();
            let train: Vec<f64> = runs.iter().map(|o| o.final_fitness).collect();
            let test: Vec<f64> = runs
                .iter()
                .flat_map(|o| o.test_aocc.iter().copied())
                .collect();
            SummaryRow {
                variant_id: v.to_string(),
                runs: runs.len(),
                train: Stats::of(&train).expect("variant has runs"),
                test: Stats::of(&test),
            }
        })
        .collect();
    Ok(SummaryTable { rows })
}

const SUMMARY_COLUMNS: [&str; 10] = [
    "variant_id",
    "runs",
    "train_mean",
    "train_min",
    "train_max",
    "test_n",
    "test_mean",
    "test_median",
    "test_min",
    "test_max",
];

impl SummaryTable {
    fn cells(&self, fmt: impl Fn(f64) -> String) -> Vec<Vec<String>> {
        self.rows
            .iter()
            .map(|r| {
                let mut c = vec![
                    r.variant_id.clone(),
                    r.runs.to_string(),
                    fmt(r.train.mean),
                    fmt(r.train.min),
                    fmt(r.train.max),
                ];
                match &r.test {
                    Some(t) => c.extend([
                        t.n.to_string(),
                        fmt(t.mean),
                        fmt(t.median),
                        fmt(t.min),
                        fmt(t.max),
                    ]),
                    None => c.extend([
                        "0".to_string(),
                        String::new(),
                        String::new(),
                        String::new(),
                        String::new(),
                    ]),
                }
                c
            })
            .collect()
    }

    pub fn to_csv(&self) -> String {
        let mut s = SUMMARY_COLUMNS.join(",");
        s.push('\n');
        for row in self.cells(|v| format!("{v:?}")) {
            s.push_str(&row.join(","));
            s.push('\n');
        }
        s
    }

    /// Fixed-width text table with four decimals; `-` for missing test data.
    pub fn to_text(&self) -> String {
        let header: Vec<String> = SUMMARY_COLUMNS.iter().map(|s| s.to_string()).collect();
        let mut rows = vec![header];
        rows.extend(self.cells(|v| format!("{v:.4}")).into_iter().map(|r| {
            r.into_iter()
                .map(|c| if c.is_empty() { "-".into() } else { c })
                .collect()
        }));
        let widths: Vec<usize> = (0..10)
            .map(|i| rows.iter().map(|r| r[i].len()).max().unwrap_or(0))
            .collect();
        let mut s = String::new();
        for r in rows {
            let line: Vec<String> = r
                .iter()
                .enumerate()
                .map(|(i, c)| {
                    if i == 0 {
                        format!("{c:<w$}", w = widths[i])
                    } else {
                        format!("{c:>w$}", w = widths[i])
                    }
                })
                .collect();
            s.push_str(line.join("  ").trim_end());
            s.push('\n');
        }
        s
    }
}
