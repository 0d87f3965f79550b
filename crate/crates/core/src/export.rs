//! Output file formats: per-node accessibility CSV, transition dumps and
//! golden files, and scenario comparison reports.
//!
//! Floats are written with Rust's shortest round-trip formatting, so a value
//! parsed back from any of these files is bit-identical to the one computed.

use std::io::{BufRead, Write};

use serde::{Deserialize, Serialize};

use crate::accessibility::AccessibilityField;
use crate::error::{Error, RecordContext, Result};
use crate::network::StreetNetwork;
use crate::scenario::{ComparisonReport, Scenario};
use crate::transition::StepTransitions;
use crate::walk::WalkConfig;

/// `node_id,mean_oa,oa_1,...,oa_S`, one row per covered node in index order.
pub fn write_accessibility_csv<W: Write>(
    net: &StreetNetwork,
    field: &AccessibilityField,
    out: W,
) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    let mut header = vec!["node_id".to_owned(), "mean_oa".to_owned()];
    header.extend((1..=field.max_steps()).map(|h| format!("oa_{h}")));
    w.write_record(&header)?;
    let mut record = Vec::with_capacity(header.len());
    for row in field.rows() {
        record.clear();
        record.push(net.label(row.node).to_owned());
        record.push(row.mean_oa.to_string());
        record.extend(row.oa.iter().map(f64::to_string));
        w.write_record(&record)?;
    }
    w.flush()?;
    Ok(())
}

/// Streaming writer for `source,h,target,probability` rows.
pub struct TransitionDumpWriter<W: Write> {
    inner: csv::Writer<W>,
}

impl<W: Write> TransitionDumpWriter<W> {
    pub fn new(out: W) -> Result<Self> {
        let mut inner = csv::Writer::from_writer(out);
        inner.write_record(["source", "h", "target", "probability"])?;
        Ok(TransitionDumpWriter { inner })
    }

    pub fn write<T: StepTransitions + ?Sized>(&mut self, net: &StreetNetwork, t: &T) -> Result<()> {
        let source = net.label(t.source());
        for h in 1..=t.max_steps() {
            let step = h.to_string();
            for (target, p) in t.step(h).iter() {
                self.inner.write_record([
                    source,
                    step.as_str(),
                    net.label(target),
                    &p.to_string(),
                ])?;
            }
        }
        Ok(())
    }

    pub fn finish(self) -> Result<W> {
        self.inner
            .into_inner()
            .map_err(|e| Error::Stream(e.into_error()))
    }
}

/// One `source,h,target,probability` record.
#[derive(Debug, Clone, PartialEq, Deserialize)]
pub struct DumpRow {
    pub source: String,
    pub h: usize,
    pub target: String,
    pub probability: f64,
}

pub fn read_dump_rows<R: std::io::Read>(reader: R) -> Result<Vec<DumpRow>> {
    let mut rdr = csv::Reader::from_reader(reader);
    Ok(rdr
        .deserialize()
        .collect::<std::result::Result<Vec<DumpRow>, _>>()?)
}

/// Exact-oracle golden file: a `# graph_sha256=<hex> max_steps=<S>` line
/// followed by a transition dump.
pub fn write_golden<W: Write, T: StepTransitions>(
    net: &StreetNetwork,
    max_steps: usize,
    transitions: &[T],
    mut out: W,
) -> Result<W> {
    writeln!(
        out,
        "# graph_sha256={} max_steps={}",
        net.content_hash(),
        max_steps
    )?;
    let mut dump = TransitionDumpWriter::new(out)?;
    for t in transitions {
        dump.write(net, t)?;
    }
    dump.finish()
}

#[derive(Debug, Clone, PartialEq)]
pub struct GoldenFile {
    pub graph_hash: String,
    pub max_steps: usize,
    pub rows: Vec<DumpRow>,
}

pub fn read_golden<R: BufRead>(mut reader: R) -> Result<GoldenFile> {
    let malformed = |message: &str| Error::Malformed {
        message: message.to_owned(),
        ctx: RecordContext {
            source: "golden".into(),
            line: 1,
        },
    };
    let mut first = String::new();
    reader.read_line(&mut first)?;
    let rest = first
        .trim()
        .strip_prefix('#')
        .ok_or_else(|| malformed("missing golden header line"))?;
    let (mut graph_hash, mut max_steps) = (None, None);
    for part in rest.split_whitespace() {
        match part.split_once('=') {
            Some(("graph_sha256", v)) => graph_hash = Some(v.to_owned()),
            Some(("max_steps", v)) => max_steps = v.parse().ok(),
            _ => {}
        }
    }
    Ok(GoldenFile {
        graph_hash: graph_hash.ok_or_else(|| malformed("header lacks graph_sha256"))?,
        max_steps: max_steps.ok_or_else(|| malformed("header lacks max_steps"))?,
        rows: read_dump_rows(reader)?,
    })
}

/// JSON report shared by the CLI report file and the HTTP comparison endpoint.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportDocument {
    pub added_edges: Vec<(String, String)>,
    pub radius: usize,
    pub max_steps: usize,
    pub walks_per_source: u32,
    pub master_seed: u64,
    pub region: Vec<String>,
    pub baseline: Vec<f64>,
    pub enhanced: Vec<f64>,
    pub relative_change: Vec<Option<f64>>,
}

impl ReportDocument {
    pub fn new(
        net: &StreetNetwork,
        scenario: &Scenario,
        config: &WalkConfig,
        report: &ComparisonReport,
    ) -> Self {
        ReportDocument {
            added_edges: scenario.to_document(net).add_edges,
            radius: scenario.radius,
            max_steps: config.max_steps,
            walks_per_source: config.walks_per_source,
            master_seed: config.master_seed,
            region: report
                .region
                .iter()
                .map(|n| net.label(n).to_owned())
                .collect(),
            baseline: report.baseline_curve.clone(),
            enhanced: report.enhanced_curve.clone(),
            relative_change: report.relative_change.clone(),
        }
    }
}

/// `h,baseline,enhanced,relative_change`; an undefined change is left empty.
pub fn write_report_csv<W: Write>(report: &ComparisonReport, out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["h", "baseline", "enhanced", "relative_change"])?;
    for (i, ((b, e), rc)) in report
        .baseline_curve
        .iter()
        .zip(&report.enhanced_curve)
        .zip(&report.relative_change)
        .enumerate()
    {
        w.write_record([
            (i + 1).to_string(),
            b.to_string(),
            e.to_string(),
            rc.map(|v| v.to_string()).unwrap_or_default(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NodeAccessibilityDocument {
    pub id: String,
    pub mean_oa: f64,
    pub oa: Vec<f64>,
}

/// JSON view of an accessibility field, keyed by node label.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AccessibilityDocument {
    pub node_count: usize,
    pub max_steps: usize,
    pub nodes: Vec<NodeAccessibilityDocument>,
}

impl AccessibilityDocument {
    pub fn new(net: &StreetNetwork, field: &AccessibilityField) -> Self {
        AccessibilityDocument {
            node_count: field.node_count(),
            max_steps: field.max_steps(),
            nodes: field
                .rows()
                .iter()
                .map(|r| NodeAccessibilityDocument {
                    id: net.label(r.node).to_owned(),
                    mean_oa: r.mean_oa,
                    oa: r.oa.clone(),
                })
                .collect(),
        }
    }
}
