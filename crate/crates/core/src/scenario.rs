//! What-if evaluation of hypothetical new edges.
//!
//! A scenario adds edges to a baseline network. Its affected region is the
//! set of baseline nodes within `radius` blocks (edges) of any added edge's
//! endpoint; baseline and enhanced accessibility are both averaged over that
//! same region, step by step.

use serde::{Deserialize, Serialize};

use crate::accessibility::{region_mean_curve, AccessibilityField};
use crate::engine::{compute_field, RunOptions};
use crate::error::{Error, RecordContext, Result};
use crate::network::{NodeId, NodeSet, StreetNetwork};
use crate::walk::{Progress, Sources, WalkConfig};

pub const DEFAULT_RADIUS: usize = 7;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Scenario {
    pub added_edges: Vec<(NodeId, NodeId)>,
    pub radius: usize,
}

impl Scenario {
    pub fn new(added_edges: Vec<(NodeId, NodeId)>, radius: usize) -> Self {
        Scenario {
            added_edges,
            radius,
        }
    }

    /// Resolves a scenario document's labels against `net` and validates it.
    pub fn from_document(net: &StreetNetwork, doc: &ScenarioDocument) -> Result<Self> {
        let resolve = |label: &str| {
            net.node_by_label(label)
                .ok_or_else(|| Error::InvalidScenario(format!("unknown node id {label:?}")))
        };
        let edges = doc
            .add_edges
            .iter()
            .map(|(u, v)| Ok((resolve(u)?, resolve(v)?)))
            .collect::<Result<Vec<_>>>()?;
        let scenario = Scenario::new(edges, doc.radius.unwrap_or(DEFAULT_RADIUS));
        scenario.validate(net)?;
        Ok(scenario)
    }

    pub fn to_document(&self, net: &StreetNetwork) -> ScenarioDocument {
        ScenarioDocument {
            add_edges: self
                .added_edges
                .iter()
                .map(|&(u, v)| (net.label(u).to_owned(), net.label(v).to_owned()))
                .collect(),
            radius: Some(self.radius),
        }
    }

    pub fn validate(&self, net: &StreetNetwork) -> Result<()> {
        if self.added_edges.is_empty() {
            return Err(Error::InvalidScenario("scenario adds no edges".into()));
        }
        let mut seen = std::collections::HashSet::new();
        for &(u, v) in &self.added_edges {
            for x in [u, v] {
                if x.index() >= net.node_count() {
                    return Err(Error::InvalidScenario(format!("unknown node index {x}")));
                }
            }
            let pair = format!("({:?}, {:?})", net.label(u), net.label(v));
            if u == v {
                return Err(Error::InvalidScenario(format!("self-loop {pair}")));
            }
            if net.has_edge(u, v) {
                return Err(Error::InvalidScenario(format!(
                    "edge {pair} already exists"
                )));
            }
            if !seen.insert((u.min(v), u.max(v))) {
                return Err(Error::InvalidScenario(format!("edge {pair} listed twice")));
            }
        }
        Ok(())
    }

    /// Endpoints of the added edges.
    pub fn endpoints(&self) -> NodeSet {
        self.added_edges.iter().flat_map(|&(u, v)| [u, v]).collect()
    }
}

/// Scenario file form: `{ "add_edges": [["u","v"], ...], "radius": 7 }`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ScenarioDocument {
    pub add_edges: Vec<(String, String)>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub radius: Option<usize>,
}

/// The baseline network plus the scenario's edges.
pub fn apply_scenario(net: &StreetNetwork, scenario: &Scenario) -> Result<StreetNetwork> {
    scenario.validate(net)?;
    let mut b = net.to_builder();
    for (i, &(u, v)) in scenario.added_edges.iter().enumerate() {
        b.add_edge(
            u,
            v,
            RecordContext {
                source: "scenario".into(),
                line: i as u64 + 1,
            },
        )?;
    }
    b.build()
}

/// Baseline nodes within `radius` edges of an added edge's endpoint.
pub fn affected_region(net: &StreetNetwork, scenario: &Scenario) -> Result<NodeSet> {
    scenario.validate(net)?;
    net.neighborhood(&scenario.endpoints(), scenario.radius)
}

#[derive(Debug, Clone, PartialEq)]
pub struct ComparisonReport {
    pub region: NodeSet,
    pub baseline_curve: Vec<f64>,
    pub enhanced_curve: Vec<f64>,
    /// `(enhanced - baseline) / baseline`, `None` where the baseline is zero.
    pub relative_change: Vec<Option<f64>>,
}

/// Per-step region means of both fields and their relative change.
pub fn compare(
    baseline: &AccessibilityField,
    enhanced: &AccessibilityField,
    region: &NodeSet,
) -> Result<ComparisonReport> {
    if baseline.max_steps() != enhanced.max_steps() {
        return Err(Error::StepMismatch {
            expected: baseline.max_steps(),
            found: enhanced.max_steps(),
        });
    }
    if baseline.node_count() != enhanced.node_count() {
        return Err(Error::NodeCountMismatch {
            expected: baseline.node_count(),
            found: enhanced.node_count(),
        });
    }
    let baseline_curve = region_mean_curve(baseline, region)?;
    let enhanced_curve = region_mean_curve(enhanced, region)?;
    let relative_change = baseline_curve
        .iter()
        .zip(&enhanced_curve)
        .map(|(&b, &e)| (b > 0.0).then(|| (e - b) / b))
        .collect();
    Ok(ComparisonReport {
        region: region.clone(),
        baseline_curve,
        enhanced_curve,
        relative_change,
    })
}

#[derive(Debug, Clone, Default)]
pub struct EvaluateOptions {
    pub run: RunOptions,
    /// Recompute every node of the enhanced network, not only the region.
    pub full_recompute: bool,
}

#[derive(Debug, Clone)]
pub struct ScenarioOutcome {
    pub enhanced_network: StreetNetwork,
    pub baseline: AccessibilityField,
    pub enhanced: AccessibilityField,
    pub report: ComparisonReport,
}

/// Runs the full what-if comparison.
///
/// Both runs share `config.master_seed` and per-source streams, so a
/// precomputed baseline for the same configuration may be passed in and is
/// identical to recomputing it. `config.sources` is ignored.
pub fn evaluate_scenario(
    net: &StreetNetwork,
    scenario: &Scenario,
    config: &WalkConfig,
    options: &EvaluateOptions,
    precomputed_baseline: Option<&AccessibilityField>,
    progress: Option<Progress<'_>>,
) -> Result<ScenarioOutcome> {
    let region = affected_region(net, scenario)?;
    let enhanced_network = apply_scenario(net, scenario)?;
    let regional = config.clone().with_sources(Sources::Set(region.clone()));

    let base_work = if precomputed_baseline.is_some() {
        0
    } else {
        region.len()
    };
    let enhanced_work = if options.full_recompute {
        net.node_count()
    } else {
        region.len()
    };
    let total = base_work + enhanced_work;
    let stage = |offset: usize| {
        move |done: usize, _: usize| {
            if let Some(report) = progress {
                report(offset + done, total);
            }
        }
    };

    let baseline = match precomputed_baseline {
        Some(field) => {
            if field.max_steps() != config.max_steps {
                return Err(Error::StepMismatch {
                    expected: config.max_steps,
                    found: field.max_steps(),
                });
            }
            field.restrict(&region)?
        }
        None => compute_field(net, &regional, &options.run, Some(&stage(0)), None)?,
    };
    let enhanced_config = if options.full_recompute {
        config.clone().with_sources(Sources::All)
    } else {
        regional
    };
    let enhanced = compute_field(
        &enhanced_network,
        &enhanced_config,
        &options.run,
        Some(&stage(base_work)),
        None,
    )?;
    let report = compare(&baseline, &enhanced, &region)?;
    Ok(ScenarioOutcome {
        enhanced_network,
        baseline,
        enhanced,
        report,
    })
}
