//! CSV report files. Floats carry six significant digits.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use sper_core::metrics::RunMetrics;
use sper_core::SelectedPair;

use crate::error::{Error, Result};

pub const SUMMARY_HEADER: &str = "mode,seed,B,m,deviation,ncu_vs_topB,ncu_matched,theoretical_ncu,recall,\
total_time,embed_time,index_time,query_time,filter_time,draw_count";

/// Formats like C's `%.6g`: six significant digits, trailing zeros removed,
/// exponent form outside `1e-4 <= |x| < 1e6`.
pub fn fmt_g6(x: f64) -> String {
    if x == 0.0 {
        return "0".into();
    }
    if !x.is_finite() {
        return format!("{x}");
    }
    let sci = format!("{x:.5e}");
    let (mantissa, exp) = sci.split_once('e').expect("exponent form");
    let exp: i32 = exp.parse().expect("integer exponent");
    if !(-4..6).contains(&exp) {
        let mantissa = trim_zeros(mantissa);
        let sign = if exp < 0 { '-' } else { '+' };
        return format!("{mantissa}e{sign}{:02}", exp.abs());
    }
    let decimals = (5 - exp).max(0) as usize;
    trim_zeros(&format!("{x:.decimals$}")).to_owned()
}

fn trim_zeros(s: &str) -> &str {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.')
    } else {
        s
    }
}

fn opt(x: Option<f64>) -> String {
    x.map(fmt_g6).unwrap_or_default()
}

/// One summary row matching [`SUMMARY_HEADER`].
pub fn summary_row(m: &RunMetrics) -> String {
    let t = &m.timings;
    [
        m.mode.to_string(),
        m.seed.to_string(),
        m.budget.target.to_string(),
        m.budget.observed.to_string(),
        opt(m.budget.relative_deviation),
        opt(m.ncu.vs_top_b),
        opt(m.ncu.matched),
        opt(m.theoretical_ncu),
        opt(m.final_recall()),
        fmt_g6(t.total),
        fmt_g6(t.embed),
        fmt_g6(t.index),
        fmt_g6(t.query),
        fmt_g6(t.filter),
        m.draw_count.to_string(),
    ]
    .join(",")
}

/// Files written by [`emit_report`].
#[derive(Debug, Clone)]
pub struct ReportFiles {
    pub pairs: PathBuf,
    pub recall: PathBuf,
    pub precision: PathBuf,
    pub alpha_trace: PathBuf,
    pub summary: PathBuf,
}

impl ReportFiles {
    pub fn with_prefix(prefix: &str) -> Self {
        let p = |name: &str| PathBuf::from(format!("{prefix}{name}"));
        Self {
            pairs: p("pairs.csv"),
            recall: p("recall.csv"),
            precision: p("precision.csv"),
            alpha_trace: p("alpha_trace.csv"),
            summary: p("summary.csv"),
        }
    }

    pub fn all(&self) -> [&Path; 5] {
        [&self.pairs, &self.recall, &self.precision, &self.alpha_trace, &self.summary]
    }
}

fn write_file(path: &Path, body: &str) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    }
    let mut f = fs::File::create(path).map_err(|e| Error::io(path, e))?;
    f.write_all(body.as_bytes()).map_err(|e| Error::io(path, e))
}

/// Writes the emitted pairs as `emit_index,r_id,s_id,weight`.
pub fn write_pairs(path: &Path, emissions: &[SelectedPair]) -> Result<()> {
    let mut w = csv::Writer::from_writer(Vec::new());
    let csv_err = |e: csv::Error| Error::csv(path, e);
    w.write_record(["emit_index", "r_id", "s_id", "weight"]).map_err(csv_err)?;
    for e in emissions {
        w.write_record([
            e.emit_index.to_string().as_str(),
            e.pair.r_id.as_str(),
            e.pair.s_id.as_str(),
            fmt_g6(e.pair.weight()).as_str(),
        ])
        .map_err(csv_err)?;
    }
    let bytes = w.into_inner().map_err(|e| Error::io(path, e.into_error()))?;
    write_file(path, std::str::from_utf8(&bytes).expect("csv output is utf-8"))
}

fn curve(header: &str, points: Option<&[(usize, f64)]>) -> String {
    let mut body = format!("{header}\n");
    for (n, v) in points.unwrap_or_default() {
        body.push_str(&format!("{n},{}\n", fmt_g6(*v)));
    }
    body
}

/// Writes pairs, recall, precision, alpha trace and summary CSVs under
/// `prefix` (a directory when it ends with `/`).
pub fn emit_report(metrics: &RunMetrics, emissions: &[SelectedPair], prefix: &str) -> Result<ReportFiles> {
    let files = ReportFiles::with_prefix(prefix);
    write_pairs(&files.pairs, emissions)?;

    let curves = metrics.curves.as_ref();
    write_file(
        &files.recall,
        &curve("emitted_count,recall", curves.map(|c| c.recall.as_slice())),
    )?;
    write_file(
        &files.precision,
        &curve("emitted_count,precision", curves.map(|c| c.precision.as_slice())),
    )?;

    let mut trace = String::from("entity_count,alpha,ideal_alpha\n");
    for (n, a) in &metrics.alpha_trace {
        trace.push_str(&format!("{n},{},{}\n", fmt_g6(*a), opt(metrics.ideal_alpha)));
    }
    write_file(&files.alpha_trace, &trace)?;

    write_file(&files.summary, &format!("{SUMMARY_HEADER}\n{}\n", summary_row(metrics)))?;
    Ok(files)
}
