//! Minimal SVG bar charts for the evaluation outputs.

use std::fmt::Write as _;
use std::path::Path;

use zonegraph::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum Figure {
    /// Iterations to tolerance per (α, η), from a summary CSV.
    P1,
    /// Node-level F1 at the selected threshold, from a selection CSV.
    P2Node,
    /// Zone-level F1 at the selected threshold, from a selection CSV.
    P2Zone,
    /// Churn histogram per jitter scale, from a histogram CSV.
    P3,
    /// Post-shock stability per shock mass, from a summary CSV.
    P4,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Bar {
    pub value: f64,
    /// Half-width of the whisker; 0 draws none.
    pub err: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Series {
    pub name: String,
    /// One slot per group.
    pub bars: Vec<Option<Bar>>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BarChart {
    pub title: String,
    pub x_label: String,
    pub y_label: String,
    pub groups: Vec<String>,
    pub series: Vec<Series>,
}

struct Table {
    headers: csv::StringRecord,
    rows: Vec<csv::StringRecord>,
}

impl Table {
    fn read(path: &Path) -> Result<Self> {
        let err = |e: csv::Error| Error::Parse(format!("{}: {e}", path.display()));
        let mut rdr = csv::Reader::from_path(path).map_err(err)?;
        let headers = rdr.headers().map_err(err)?.clone();
        let rows = rdr
            .records()
            .collect::<std::result::Result<Vec<_>, _>>()
            .map_err(err)?;
        Ok(Self { headers, rows })
    }

    fn cols<const N: usize>(&self, names: [&str; N], figure: &str) -> Result<[usize; N]> {
        let mut out = [0; N];
        for (slot, name) in out.iter_mut().zip(names) {
            *slot = self.headers.iter().position(|h| h == name).ok_or_else(|| {
                Error::Validation(format!("figure {figure} needs a {name:?} column"))
            })?;
        }
        Ok(out)
    }
}

fn number(s: &str, what: &str) -> Result<f64> {
    s.parse()
        .map_err(|_| Error::Validation(format!("{what} value {s:?} is not a number")))
}

fn position(list: &mut Vec<String>, key: &str) -> usize {
    list.iter().position(|k| k == key).unwrap_or_else(|| {
        list.push(key.to_string());
        list.len() - 1
    })
}

/// Groups `(group, series, bar)` triples, keeping first-appearance order.
fn assemble(points: Vec<(String, String, Bar)>) -> (Vec<String>, Vec<Series>) {
    let mut groups = Vec::new();
    let mut names = Vec::new();
    let mut cells = Vec::new();
    for (g, s, bar) in points {
        cells.push((position(&mut groups, &g), position(&mut names, &s), bar));
    }
    let mut series: Vec<Series> = names
        .into_iter()
        .map(|name| Series {
            name,
            bars: vec![None; groups.len()],
        })
        .collect();
    for (g, s, bar) in cells {
        series[s].bars[g] = Some(bar);
    }
    (groups, series)
}

fn summary_chart(
    t: &Table,
    figure: &str,
    metric: &str,
    group: &str,
    series: &str,
) -> Result<Vec<(String, String, Bar)>> {
    let [m, g, s, mean, ci] = t.cols(["metric", group, series, "mean", "ci95"], figure)?;
    t.rows
        .iter()
        .filter(|r| &r[m] == metric)
        .map(|r| {
            Ok((
                r[g].to_string(),
                format!("{series} {}", &r[s]),
                Bar {
                    value: number(&r[mean], "mean")?,
                    err: number(&r[ci], "ci95")?,
                },
            ))
        })
        .collect()
}

/// Reads `path` and lays out the chart for `figure`. Schema mismatches and
/// empty data are validation errors.
pub fn build_chart(figure: Figure, path: &Path) -> Result<BarChart> {
    let t = Table::read(path)?;
    let (title, x_label, y_label, points) = match figure {
        Figure::P1 => (
            "Iterations to tolerance",
            "alpha",
            "t* (mean, 95% CI)",
            summary_chart(&t, "p1", "t_star", "alpha", "eta")?,
        ),
        Figure::P2Node | Figure::P2Zone => {
            let (label, mean_col, ci_col) = if figure == Figure::P2Node {
                ("node", "node_f1_mean", "node_f1_ci95")
            } else {
                ("zone", "zone_f1_mean", "zone_f1_ci95")
            };
            let [method, q, mean, ci] = t.cols(["method", "q_star", mean_col, ci_col], "p2")?;
            let points = t
                .rows
                .iter()
                .map(|r| {
                    Ok((
                        format!("{} (q*={})", &r[method], &r[q]),
                        format!("{label} F1"),
                        Bar {
                            value: number(&r[mean], mean_col)?,
                            err: number(&r[ci], ci_col)?,
                        },
                    ))
                })
                .collect::<Result<Vec<_>>>()?;
            let title = if figure == Figure::P2Node {
                "Node-level recovery at q*"
            } else {
                "Zone-level recovery at q*"
            };
            (title, "method", "F1 (mean, 95% CI)", points)
        }
        Figure::P3 => {
            let [jitter, metric, lo, hi, count] =
                t.cols(["jitter", "metric", "bin_lo", "bin_hi", "count"], "p3")?;
            let points = t
                .rows
                .iter()
                .filter(|r| &r[metric] == "churn")
                .map(|r| {
                    Ok((
                        format!("{}-{}", &r[lo], &r[hi]),
                        format!("jitter {}", &r[jitter]),
                        Bar {
                            value: number(&r[count], "count")?,
                            err: 0.0,
                        },
                    ))
                })
                .collect::<Result<Vec<_>>>()?;
            ("Atlas churn under weight jitter", "churn", "seeds", points)
        }
        Figure::P4 => (
            "Atlas stability after shocks",
            "shock mass",
            "S_J (mean, 95% CI)",
            summary_chart(&t, "p4", "stability", "mass", "method")?,
        ),
    };
    if points.is_empty() {
        return Err(Error::Validation(format!(
            "{} has no rows for this figure",
            path.display()
        )));
    }
    let (groups, series) = assemble(points);
    Ok(BarChart {
        title: title.into(),
        x_label: x_label.into(),
        y_label: y_label.into(),
        groups,
        series,
    })
}

const PALETTE: [&str; 6] = [
    "#4c72b0", "#dd8452", "#55a868", "#c44e52", "#8172b3", "#937860",
];

fn escape(s: &str) -> String {
    s.replace('&', "&amp;")
        .replace('<', "&lt;")
        .replace('>', "&gt;")
        .replace('"', "&quot;")
}

/// Round number near `span / 5` for axis ticks.
fn tick_step(span: f64) -> f64 {
    let raw = span / 5.0;
    let mag = 10f64.powf(raw.log10().floor());
    let norm = raw / mag;
    let nice = if norm <= 1.0 {
        1.0
    } else if norm <= 2.0 {
        2.0
    } else if norm <= 5.0 {
        5.0
    } else {
        10.0
    };
    nice * mag
}

pub fn render_svg(chart: &BarChart) -> String {
    let (left, right, top, bottom) = (70.0, 160.0, 40.0, 60.0);
    let bar_w = 18.0;
    let group_w = bar_w * chart.series.len().max(1) as f64 + 20.0;
    let plot_w = group_w * chart.groups.len() as f64;
    let plot_h = 260.0;
    let width = left + plot_w + right;
    let height = top + plot_h + bottom;

    let top_value = chart
        .series
        .iter()
        .flat_map(|s| s.bars.iter().flatten())
        .map(|b| b.value + b.err)
        .fold(0.0f64, f64::max);
    let step = tick_step(if top_value > 0.0 { top_value } else { 1.0 });
    let y_max = (top_value / step).ceil().max(1.0) * step;
    let y = |v: f64| top + plot_h * (1.0 - v.clamp(0.0, y_max) / y_max);

    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" viewBox="0 0 {width} {height}" font-family="sans-serif" font-size="11">"#
    );
    let _ = writeln!(
        s,
        r#"<rect width="{width}" height="{height}" fill="white"/>"#
    );
    let _ = writeln!(
        s,
        r#"<text x="{}" y="20" text-anchor="middle" font-size="14">{}</text>"#,
        left + plot_w / 2.0,
        escape(&chart.title)
    );

    let mut tick = 0.0;
    while tick <= y_max + step * 1e-9 {
        let ty = y(tick);
        let _ = writeln!(
            s,
            r##"<line x1="{left}" y1="{ty:.2}" x2="{:.2}" y2="{ty:.2}" stroke="#ddd"/><text x="{:.2}" y="{:.2}" text-anchor="end">{}</text>"##,
            left + plot_w,
            left - 6.0,
            ty + 4.0,
            format_tick(tick, step)
        );
        tick += step;
    }
    let _ = writeln!(
        s,
        r#"<line x1="{left}" y1="{top}" x2="{left}" y2="{0:.2}" stroke="black"/><line x1="{left}" y1="{0:.2}" x2="{1:.2}" y2="{0:.2}" stroke="black"/>"#,
        top + plot_h,
        left + plot_w
    );

    for (gi, g) in chart.groups.iter().enumerate() {
        let gx = left + gi as f64 * group_w + 10.0;
        for (si, series) in chart.series.iter().enumerate() {
            let Some(bar) = series.bars[gi] else { continue };
            let x = gx + si as f64 * bar_w;
            let by = y(bar.value);
            let _ = writeln!(
                s,
                r#"<rect x="{x:.2}" y="{by:.2}" width="{:.2}" height="{:.2}" fill="{}"/>"#,
                bar_w - 2.0,
                top + plot_h - by,
                PALETTE[si % PALETTE.len()]
            );
            if bar.err > 0.0 {
                let cx = x + (bar_w - 2.0) / 2.0;
                let (lo, hi) = (y(bar.value - bar.err), y(bar.value + bar.err));
                let _ = writeln!(
                    s,
                    r#"<path d="M{cx:.2} {lo:.2}V{hi:.2}M{:.2} {lo:.2}h6M{:.2} {hi:.2}h6" stroke="black" fill="none"/>"#,
                    cx - 3.0,
                    cx - 3.0
                );
            }
        }
        let _ = writeln!(
            s,
            r#"<text x="{:.2}" y="{:.2}" text-anchor="middle">{}</text>"#,
            gx + (group_w - 20.0) / 2.0,
            top + plot_h + 16.0,
            escape(g)
        );
    }

    let _ = writeln!(
        s,
        r#"<text x="{:.2}" y="{:.2}" text-anchor="middle">{}</text>"#,
        left + plot_w / 2.0,
        height - 16.0,
        escape(&chart.x_label)
    );
    let _ = writeln!(
        s,
        r#"<text x="18" y="{0:.2}" text-anchor="middle" transform="rotate(-90 18 {0:.2})">{1}</text>"#,
        top + plot_h / 2.0,
        escape(&chart.y_label)
    );
    for (si, series) in chart.series.iter().enumerate() {
        let ly = top + 14.0 * si as f64;
        let lx = left + plot_w + 16.0;
        let _ = writeln!(
            s,
            r#"<rect x="{lx:.2}" y="{ly:.2}" width="10" height="10" fill="{}"/><text x="{:.2}" y="{:.2}">{}</text>"#,
            PALETTE[si % PALETTE.len()],
            lx + 14.0,
            ly + 9.0,
            escape(&series.name)
        );
    }
    s.push_str("</svg>\n");
    s
}

fn format_tick(v: f64, step: f64) -> String {
    let decimals = (-step.log10().floor()).max(0.0) as usize;
    format!("{v:.decimals$}")
}
