//! Static chart output: hand-written SVG plus a CSV twin holding every
//! plotted number at full precision.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use thiserror::Error;

use crate::analyze::{Comparison, GroupMeans, Grouping, TimeControl};
use crate::annotate::{Leaning, LeaningReport, Scope};
use crate::model::{BotType, QueryCategory};
use crate::stats::Stars;

#[derive(Debug, Error)]
pub enum ReportError {
    #[error("nothing to plot: {0}")]
    EmptyData(String),
    #[error("{path}: {source}")]
    Io { path: String, source: std::io::Error },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Shade {
    Light,
    Dark,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Bar {
    pub label: String,
    pub shade: Shade,
    pub hatched: bool,
    /// `None` draws a gap marker.
    pub value: Option<f64>,
    pub lo: f64,
    pub hi: f64,
    pub n: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Cluster {
    pub label: String,
    pub bars: Vec<Bar>,
}

/// Significance bracket between two bars of one cluster.
#[derive(Debug, Clone, PartialEq)]
pub struct Bracket {
    pub cluster: usize,
    pub from: usize,
    pub to: usize,
    pub label: String,
    pub p_adjusted: f64,
    pub stars: Stars,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BarChart {
    pub title: String,
    pub y_label: String,
    /// Fill colors for light and dark bars.
    pub palette: (&'static str, &'static str),
    pub clusters: Vec<Cluster>,
    pub brackets: Vec<Bracket>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct StackRow {
    pub label: String,
    pub segments: Vec<(String, f64)>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct StackedChart {
    pub title: String,
    pub colors: Vec<&'static str>,
    pub rows: Vec<StackRow>,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Chart {
    Bars(BarChart),
    Stacked(StackedChart),
}

#[derive(Debug, Clone, PartialEq)]
pub struct Emitted {
    pub svg: PathBuf,
    pub csv: PathBuf,
    pub warnings: Vec<String>,
}

pub fn palette(bot_type: BotType) -> (&'static str, &'static str) {
    match bot_type {
        BotType::Type1 => ("#a8d5a2", "#2e7d32"),
        BotType::Type2 => ("#f5dc8c", "#c99700"),
        BotType::Type3 => ("#a9c8ec", "#1f4e8c"),
    }
}

const LEANING_COLORS: [&str; 5] = ["#1f4e8c", "#8fb3de", "#b0b0b0", "#f2d675", "#c99700"];

/// Bars per engine: General Same, General Diff, Specific Same, Specific Diff.
/// Specific bars are hatched, different-location bars dark. Brackets carry
/// the stars of matching tests from [`crate::analyze::run_figure2_tests`].
pub fn figure2_chart(title: &str, means: &GroupMeans, bot_type: BotType, tests: &[Comparison]) -> BarChart {
    let layout = [
        (QueryCategory::General, Grouping::SameLocation),
        (QueryCategory::General, Grouping::DiffLocation),
        (QueryCategory::Specific, Grouping::SameLocation),
        (QueryCategory::Specific, Grouping::DiffLocation),
    ];
    let mut engines: Vec<&str> = means.cells.iter().filter(|c| c.key.bot_type == bot_type).map(|c| c.key.engine.as_str()).collect();
    engines.dedup();
    let metric = means.cells.iter().find(|c| c.key.bot_type == bot_type).map_or("D", |c| c.key.metric.as_str());
    let mut clusters = Vec::new();
    let mut brackets = Vec::new();
    for (ci, engine) in engines.iter().enumerate() {
        let bars = layout
            .iter()
            .map(|&(cat, g)| {
                let cell = means.get(engine, bot_type, g, cat);
                Bar {
                    label: format!("{cat} {g}"),
                    shade: if g == Grouping::SameLocation { Shade::Light } else { Shade::Dark },
                    hatched: cat == QueryCategory::Specific,
                    value: cell.map(|c| c.ci.mean),
                    lo: cell.map_or(0.0, |c| c.ci.lo),
                    hi: cell.map_or(0.0, |c| c.ci.hi),
                    n: cell.map_or(0, |c| c.n_records),
                }
            })
            .collect();
        clusters.push(Cluster { label: engine.to_string(), bars });
        for t in tests.iter().filter(|t| t.engine == *engine) {
            let Some(r) = &t.result else { continue };
            let idx = |s: &str| layout.iter().position(|&(c, g)| s == format!("{c} {g}"));
            let mut sides = t.label.split(" vs ");
            if let (Some(Some(a)), Some(Some(b))) = (sides.next().map(idx), sides.next().map(idx)) {
                brackets.push(Bracket { cluster: ci, from: a, to: b, label: t.label.clone(), p_adjusted: r.p_adjusted, stars: r.stars });
            }
        }
    }
    BarChart { title: title.to_string(), y_label: metric.to_string(), palette: palette(bot_type), clusters, brackets }
}

/// Same and different location means per epoch, one cluster per epoch.
pub fn time_control_chart(title: &str, tc: &TimeControl, bot_type: BotType, category: QueryCategory) -> BarChart {
    let clusters = tc
        .epochs
        .iter()
        .enumerate()
        .flat_map(|(i, m)| {
            let mut engines: Vec<&str> = m.cells.iter().map(|c| c.key.engine.as_str()).collect();
            engines.dedup();
            engines
                .into_iter()
                .map(|e| Cluster {
                    label: format!("t{} {e}", i + 1),
                    bars: Grouping::ALL
                        .iter()
                        .map(|&g| {
                            let cell = m.get(e, bot_type, g, category);
                            Bar {
                                label: g.to_string(),
                                shade: if g == Grouping::SameLocation { Shade::Light } else { Shade::Dark },
                                hatched: category == QueryCategory::Specific,
                                value: cell.map(|c| c.ci.mean),
                                lo: cell.map_or(0.0, |c| c.ci.lo),
                                hi: cell.map_or(0.0, |c| c.ci.hi),
                                n: cell.map_or(0, |c| c.n_records),
                            }
                        })
                        .collect(),
                })
                .collect::<Vec<_>>()
        })
        .collect();
    BarChart { title: title.to_string(), y_label: "D".into(), palette: palette(bot_type), clusters, brackets: Vec::new() }
}

/// One stacked row per (engine, location, scope) leaning cell.
pub fn leaning_chart(title: &str, report: &LeaningReport) -> StackedChart {
    let rows = report
        .cells
        .iter()
        .map(|c| StackRow {
            label: format!("{} {} {}", c.engine, c.location, if c.scope == Scope::Top3 { "Top3" } else { "All" }),
            segments: Leaning::ALL.iter().zip(c.proportions).map(|(l, p)| (l.as_str().to_string(), p)).collect(),
        })
        .collect();
    StackedChart { title: title.to_string(), colors: LEANING_COLORS.to_vec(), rows }
}

fn esc(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;").replace('"', "&quot;")
}

fn csv_field(s: &str) -> String {
    if s.contains([',', '"', '\n']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

const BAR_W: f64 = 22.0;
const CLUSTER_GAP: f64 = 34.0;
const LEFT: f64 = 64.0;
const TOP: f64 = 48.0;
const PLOT_H: f64 = 240.0;

fn nice_max(v: f64) -> f64 {
    if v <= 0.0 {
        return 1.0;
    }
    let mag = 10f64.powf(v.log10().floor());
    [1.0, 2.0, 2.5, 5.0, 10.0].iter().map(|m| m * mag).find(|&c| c >= v).unwrap_or(10.0 * mag)
}

fn render_bars(c: &BarChart) -> (String, String, Vec<String>) {
    let top = c
        .clusters
        .iter()
        .flat_map(|cl| cl.bars.iter().filter(|b| b.value.is_some()).map(|b| b.hi.max(b.value.unwrap_or(0.0))))
        .fold(0.0, f64::max);
    let y_max = nice_max(top * 1.15);
    let y = |v: f64| TOP + PLOT_H - v / y_max * PLOT_H;
    let cluster_w = |cl: &Cluster| cl.bars.len() as f64 * BAR_W;
    let width = LEFT + c.clusters.iter().map(|cl| cluster_w(cl) + CLUSTER_GAP).sum::<f64>() + 20.0;
    let height = TOP + PLOT_H + 60.0;

    let mut svg = String::new();
    let mut warnings = Vec::new();
    let mut csv = String::from("kind,cluster,label,value,ci_lo,ci_hi,n,p_adjusted,stars\n");
    let _ = writeln!(svg, r#"<svg xmlns="http://www.w3.org/2000/svg" width="{width:.0}" height="{height:.0}" viewBox="0 0 {width:.0} {height:.0}" font-family="sans-serif" font-size="11">"#);
    svg.push_str(r##"<defs><pattern id="hatch" patternUnits="userSpaceOnUse" width="6" height="6" patternTransform="rotate(45)"><line x1="0" y1="0" x2="0" y2="6" stroke="#ffffff" stroke-width="2"/></pattern></defs>"##);
    svg.push('\n');
    let _ = writeln!(svg, r#"<text x="{:.1}" y="20" font-size="14" text-anchor="middle">{}</text>"#, width / 2.0, esc(&c.title));
    let _ = writeln!(svg, r#"<text x="14" y="{:.1}" transform="rotate(-90 14 {:.1})" text-anchor="middle">{}</text>"#, TOP + PLOT_H / 2.0, TOP + PLOT_H / 2.0, esc(&c.y_label));
    for i in 0..=5 {
        let v = y_max * i as f64 / 5.0;
        let _ = writeln!(svg, r##"<line x1="{LEFT:.1}" x2="{:.1}" y1="{:.1}" y2="{:.1}" stroke="#dddddd"/><text x="{:.1}" y="{:.1}" text-anchor="end">{v:.2}</text>"##, width - 20.0, y(v), y(v), LEFT - 4.0, y(v) + 4.0);
    }

    let mut x = LEFT + CLUSTER_GAP / 2.0;
    let mut bar_x: Vec<Vec<f64>> = Vec::new();
    for cl in &c.clusters {
        let mut xs = Vec::new();
        let _ = writeln!(svg, r#"<text x="{:.1}" y="{:.1}" text-anchor="middle">{}</text>"#, x + cluster_w(cl) / 2.0, TOP + PLOT_H + 18.0, esc(&cl.label));
        for b in &cl.bars {
            let fill = if b.shade == Shade::Light { c.palette.0 } else { c.palette.1 };
            xs.push(x + BAR_W / 2.0);
            match b.value {
                Some(v) => {
                    let _ = writeln!(
                        svg,
                        r#"<rect x="{x:.1}" y="{:.1}" width="{:.1}" height="{:.1}" fill="{fill}" data-value="{v}"><title>{}: {}</title></rect>"#,
                        y(v),
                        BAR_W - 2.0,
                        TOP + PLOT_H - y(v),
                        esc(&cl.label),
                        esc(&b.label)
                    );
                    if b.hatched {
                        let _ = writeln!(svg, r#"<rect x="{x:.1}" y="{:.1}" width="{:.1}" height="{:.1}" fill="url(#hatch)"/>"#, y(v), BAR_W - 2.0, TOP + PLOT_H - y(v));
                    }
                    let cx = x + (BAR_W - 2.0) / 2.0;
                    let _ = writeln!(
                        svg,
                        r##"<path d="M{cx:.1} {:.1}V{:.1}M{:.1} {:.1}H{:.1}M{:.1} {:.1}H{:.1}" stroke="#222222" data-lo="{}" data-hi="{}"/>"##,
                        y(b.lo),
                        y(b.hi),
                        cx - 4.0,
                        y(b.lo),
                        cx + 4.0,
                        cx - 4.0,
                        y(b.hi),
                        cx + 4.0,
                        b.lo,
                        b.hi
                    );
                    let _ = writeln!(csv, "bar,{},{},{v},{},{},{},,", csv_field(&cl.label), csv_field(&b.label), b.lo, b.hi, b.n);
                }
                None => {
                    let _ = writeln!(svg, r##"<rect x="{x:.1}" y="{:.1}" width="{:.1}" height="10" fill="none" stroke="#999999" stroke-dasharray="2 2"/><text x="{:.1}" y="{:.1}" text-anchor="middle" fill="#999999">×</text>"##, TOP + PLOT_H - 10.0, BAR_W - 2.0, x + BAR_W / 2.0 - 1.0, TOP + PLOT_H - 12.0);
                    let _ = writeln!(csv, "bar,{},{},,,,0,,", csv_field(&cl.label), csv_field(&b.label));
                    warnings.push(format!("{} / {}: no data", cl.label, b.label));
                }
            }
            x += BAR_W;
        }
        bar_x.push(xs);
        x += CLUSTER_GAP;
    }

    for (k, br) in c.brackets.iter().enumerate() {
        let _ = writeln!(csv, "test,{},{},,,,,{},{}", csv_field(&c.clusters[br.cluster].label), csv_field(&br.label), br.p_adjusted, br.stars);
        if br.stars == Stars::None {
            continue;
        }
        let bars = &c.clusters[br.cluster].bars;
        let peak = [br.from, br.to].iter().map(|&i| bars[i].hi.max(bars[i].value.unwrap_or(0.0))).fold(0.0, f64::max);
        let level = y(peak) - 8.0 - 12.0 * (k % 2) as f64;
        let (x1, x2) = (bar_x[br.cluster][br.from] - 1.0, bar_x[br.cluster][br.to] - 1.0);
        let _ = writeln!(svg, r##"<path d="M{x1:.1} {:.1}V{level:.1}H{x2:.1}V{:.1}" fill="none" stroke="#222222"/><text x="{:.1}" y="{:.1}" text-anchor="middle">{}</text>"##, level + 4.0, level + 4.0, (x1 + x2) / 2.0, level - 2.0, br.stars);
    }

    let lx = LEFT;
    let ly = TOP + PLOT_H + 36.0;
    let _ = writeln!(svg, r#"<rect x="{lx:.1}" y="{ly:.1}" width="10" height="10" fill="{}"/><text x="{:.1}" y="{:.1}">same location</text>"#, c.palette.0, lx + 14.0, ly + 9.0);
    let _ = writeln!(svg, r#"<rect x="{:.1}" y="{ly:.1}" width="10" height="10" fill="{}"/><text x="{:.1}" y="{:.1}">different location</text>"#, lx + 110.0, c.palette.1, lx + 124.0, ly + 9.0);
    let _ = writeln!(svg, r##"<rect x="{:.1}" y="{ly:.1}" width="10" height="10" fill="#888888"/><rect x="{:.1}" y="{ly:.1}" width="10" height="10" fill="url(#hatch)"/><text x="{:.1}" y="{:.1}">specific queries</text>"##, lx + 240.0, lx + 240.0, lx + 254.0, ly + 9.0);
    svg.push_str("</svg>\n");
    (svg, csv, warnings)
}

fn render_stacked(c: &StackedChart) -> (String, String, Vec<String>) {
    const ROW_H: f64 = 18.0;
    const BAR_LEN: f64 = 400.0;
    let label_w = 180.0;
    let width = label_w + BAR_LEN + 40.0;
    let height = TOP + c.rows.len() as f64 * (ROW_H + 4.0) + 50.0;
    let mut svg = String::new();
    let mut csv = String::from("row,segment,proportion\n");
    let _ = writeln!(svg, r#"<svg xmlns="http://www.w3.org/2000/svg" width="{width:.0}" height="{height:.0}" viewBox="0 0 {width:.0} {height:.0}" font-family="sans-serif" font-size="11">"#);
    let _ = writeln!(svg, r#"<text x="{:.1}" y="20" font-size="14" text-anchor="middle">{}</text>"#, width / 2.0, esc(&c.title));
    for (i, row) in c.rows.iter().enumerate() {
        let y = TOP + i as f64 * (ROW_H + 4.0);
        let _ = writeln!(svg, r#"<text x="{:.1}" y="{:.1}" text-anchor="end">{}</text>"#, label_w - 6.0, y + 13.0, esc(&row.label));
        let mut x = label_w;
        for (j, (seg, p)) in row.segments.iter().enumerate() {
            let w = p * BAR_LEN;
            let color = c.colors.get(j).copied().unwrap_or("#cccccc");
            let _ = writeln!(svg, r#"<rect x="{x:.1}" y="{y:.1}" width="{w:.1}" height="{ROW_H:.1}" fill="{color}" data-value="{p}"><title>{}</title></rect>"#, esc(seg));
            let _ = writeln!(csv, "{},{},{p}", csv_field(&row.label), csv_field(seg));
            x += w;
        }
    }
    let ly = height - 24.0;
    if let Some(first) = c.rows.first() {
        for (j, (seg, _)) in first.segments.iter().enumerate() {
            let lx = 20.0 + j as f64 * 120.0;
            let color = c.colors.get(j).copied().unwrap_or("#cccccc");
            let _ = writeln!(svg, r#"<rect x="{lx:.1}" y="{ly:.1}" width="10" height="10" fill="{color}"/><text x="{:.1}" y="{:.1}">{}</text>"#, lx + 14.0, ly + 9.0, esc(seg));
        }
    }
    svg.push_str("</svg>\n");
    (svg, csv, Vec::new())
}

/// Renders a chart to `(svg, csv, warnings)` without touching the disk.
pub fn render(chart: &Chart) -> Result<(String, String, Vec<String>), ReportError> {
    match chart {
        Chart::Bars(c) => {
            if c.clusters.iter().all(|cl| cl.bars.iter().all(|b| b.value.is_none())) {
                return Err(ReportError::EmptyData(c.title.clone()));
            }
            Ok(render_bars(c))
        }
        Chart::Stacked(c) => {
            if c.rows.is_empty() {
                return Err(ReportError::EmptyData(c.title.clone()));
            }
            Ok(render_stacked(c))
        }
    }
}

/// Writes `<stem>.svg` and `<stem>.csv` into `out_dir`.
pub fn emit_chart(chart: &Chart, out_dir: &Path, stem: &str) -> Result<Emitted, ReportError> {
    let (svg, csv, warnings) = render(chart)?;
    let io = |path: &Path| {
        let path = path.display().to_string();
        move |source| ReportError::Io { path, source }
    };
    fs::create_dir_all(out_dir).map_err(io(out_dir))?;
    let svg_path = out_dir.join(format!("{stem}.svg"));
    let csv_path = out_dir.join(format!("{stem}.csv"));
    fs::write(&svg_path, svg).map_err(io(&svg_path))?;
    fs::write(&csv_path, csv).map_err(io(&csv_path))?;
    Ok(Emitted { svg: svg_path, csv: csv_path, warnings })
}
