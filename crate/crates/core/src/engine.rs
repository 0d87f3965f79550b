//! Monte Carlo estimation streamed straight into an accessibility field.

use crate::accessibility::{AccessibilityField, AccessibilityOptions, NodeAccessibility};
use crate::error::Result;
use crate::network::StreetNetwork;
use crate::walk::{for_each_estimate, Progress, TransitionEstimate, WalkConfig};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RunOptions {
    pub threads: usize,
    pub accessibility: AccessibilityOptions,
}

impl Default for RunOptions {
    fn default() -> Self {
        RunOptions {
            threads: 1,
            accessibility: AccessibilityOptions::default(),
        }
    }
}

/// Sink receiving each estimate, in ascending source order, before it is dropped.
pub type EstimateSink<'a> = &'a mut dyn FnMut(&TransitionEstimate) -> Result<()>;

/// Estimates transitions for the configured sources and reduces each one to
/// its accessibility row. Full estimates are never all held at once.
pub fn compute_field(
    net: &StreetNetwork,
    config: &WalkConfig,
    options: &RunOptions,
    progress: Option<Progress<'_>>,
    mut dump: Option<EstimateSink<'_>>,
) -> Result<AccessibilityField> {
    let mut rows = Vec::new();
    for_each_estimate(net, config, options.threads, progress, |est| {
        if let Some(sink) = dump.as_mut() {
            sink(&est)?;
        }
        rows.push(NodeAccessibility::compute(
            &est,
            net.node_count(),
            &options.accessibility,
        )?);
        Ok(())
    })?;
    AccessibilityField::from_rows(net.node_count(), config.max_steps, rows)
}
