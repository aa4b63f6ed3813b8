//! Attribute x method grid of Q values.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use rankq::config::RunConfig;
use rankq::qcompute::{exceeds_threshold, format_percent};
use serde::{Deserialize, Serialize};

use crate::commands::{evaluate_sequence, load_models, load_predictions, Evaluation};

pub const MANIFEST_HEADER: &str = "attribute,method,model,predictions";

#[derive(Clone, Debug, PartialEq, Deserialize)]
pub struct ManifestRow {
    pub attribute: String,
    pub method: String,
    pub model: PathBuf,
    pub predictions: PathBuf,
}

/// Reads a manifest; relative paths resolve against the manifest's directory.
pub fn read_manifest(path: &Path) -> Result<Vec<ManifestRow>> {
    let base = path.parent().unwrap_or(Path::new("."));
    let mut rdr = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_path(path)
        .with_context(|| format!("cannot open {}", path.display()))?;
    let found = rdr.headers()?.iter().collect::<Vec<_>>().join(",");
    if found != MANIFEST_HEADER {
        bail!("{}: expected header `{MANIFEST_HEADER}`, found `{found}`", path.display());
    }
    let mut rows = Vec::new();
    for r in rdr.deserialize() {
        let mut row: ManifestRow = r.with_context(|| format!("reading {}", path.display()))?;
        row.model = base.join(row.model);
        row.predictions = base.join(row.predictions);
        rows.push(row);
    }
    Ok(rows)
}

#[derive(Clone, Debug, Serialize)]
pub struct Cell {
    pub attribute: String,
    pub method: String,
    pub flagged: bool,
    #[serde(flatten)]
    pub evaluation: Evaluation,
}

/// Rows are attributes and columns are methods, both in first-seen order.
#[derive(Clone, Debug, Serialize)]
pub struct Report {
    pub attributes: Vec<String>,
    pub methods: Vec<String>,
    pub epsilon: f64,
    pub cells: Vec<Cell>,
    pub missing: Vec<(String, String)>,
}

impl Report {
    pub fn cell(&self, attribute: &str, method: &str) -> Option<&Cell> {
        self.cells.iter().find(|c| c.attribute == attribute && c.method == method)
    }
}

fn push_unique(v: &mut Vec<String>, s: &str) {
    if !v.iter().any(|x| x == s) {
        v.push(s.to_owned());
    }
}

pub fn build_report(rows: &[ManifestRow], cfg: &RunConfig) -> Result<Report> {
    let (mut attributes, mut methods) = (Vec::new(), Vec::new());
    let mut cells: Vec<Cell> = Vec::new();
    for row in rows {
        if cells.iter().any(|c| c.attribute == row.attribute && c.method == row.method) {
            bail!("duplicate manifest entry for {} / {}", row.attribute, row.method);
        }
        push_unique(&mut attributes, &row.attribute);
        push_unique(&mut methods, &row.method);
        let models = load_models(&row.model)?;
        let seq = load_predictions(&row.predictions, &models)?;
        let evaluation = evaluate_sequence(&models, &seq, cfg)
            .with_context(|| format!("evaluating {} / {}", row.attribute, row.method))?;
        cells.push(Cell {
            attribute: row.attribute.clone(),
            method: row.method.clone(),
            flagged: exceeds_threshold(evaluation.q, cfg.epsilon)?,
            evaluation,
        });
    }
    let mut missing = Vec::new();
    for a in &attributes {
        for m in &methods {
            if !cells.iter().any(|c| &c.attribute == a && &c.method == m) {
                missing.push((a.clone(), m.clone()));
            }
        }
    }
    Ok(Report { attributes, methods, epsilon: cfg.epsilon, cells, missing })
}

const PLACEHOLDER: &str = "-";

/// Plain-text table; flagged cells carry a trailing `*`.
pub fn render_text(report: &Report) -> String {
    let label = |a: &str, m: &str| match report.cell(a, m) {
        Some(c) if c.flagged => format!("{}*", c.evaluation.q_percent),
        Some(c) => c.evaluation.q_percent.clone(),
        None => PLACEHOLDER.to_owned(),
    };
    let first = report.attributes.iter().map(String::len).max().unwrap_or(0).max(9);
    let widths: Vec<usize> = report
        .methods
        .iter()
        .map(|m| report.attributes.iter().map(|a| label(a, m).len()).chain([m.len(), 6]).max().unwrap_or(6))
        .collect();

    let mut out = String::new();
    let _ = write!(out, "{:first$}", "attribute");
    for (m, w) in report.methods.iter().zip(&widths) {
        let _ = write!(out, "  {m:>w$}");
    }
    out.push('\n');
    for a in &report.attributes {
        let _ = write!(out, "{a:first$}");
        for (m, w) in report.methods.iter().zip(&widths) {
            let _ = write!(out, "  {:>w$}", label(a, m));
        }
        out.push('\n');
    }
    let _ = writeln!(out, "* Q above {}%: distinguishable from human rankings", format_percent(1.0 - report.epsilon));
    out
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;").replace('"', "&quot;")
}

/// HTML table; flagged cells are bold.
pub fn render_html(report: &Report) -> String {
    let mut out = String::from("<table>\n<thead><tr><th></th>");
    for m in &report.methods {
        let _ = write!(out, "<th>{}</th>", escape(m));
    }
    out.push_str("</tr></thead>\n<tbody>\n");
    for a in &report.attributes {
        let _ = write!(out, "<tr><th>{}</th>", escape(a));
        for m in &report.methods {
            match report.cell(a, m) {
                Some(c) if c.flagged => {
                    let _ = write!(out, "<td><b>{}</b></td>", c.evaluation.q_percent);
                }
                Some(c) => {
                    let _ = write!(out, "<td>{}</td>", c.evaluation.q_percent);
                }
                None => {
                    let _ = write!(out, "<td>{PLACEHOLDER}</td>");
                }
            }
        }
        out.push_str("</tr>\n");
    }
    out.push_str("</tbody>\n</table>\n");
    out
}
