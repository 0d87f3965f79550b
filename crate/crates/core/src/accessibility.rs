//! Diversity entropy and outward accessibility.
//!
//! For a step-`h` transition distribution `P_h(i, ·)` the diversity entropy
//! is `E_h(i) = -Σ_j P_h(i,j) ln P_h(i,j)` over nonzero entries, and the
//! outward accessibility is `OA_h(i) = exp(E_h(i)) / (N - 1)`.

use std::ops::RangeInclusive;

use crate::error::{Error, Result};
use crate::network::{NodeId, NodeSet};
use crate::transition::{Distribution, StepTransitions};

/// Slack allowed on the total mass of a distribution before it is rejected.
pub const MASS_TOLERANCE: f64 = 1e-9;

/// How a step with no surviving walks is scored.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub enum ExtinctStepRule {
    /// No walk alive means no outward reach: `OA_h = 0`.
    #[default]
    Zero,
    /// Apply the formula as written, giving `exp(0) / (N - 1)`.
    Literal,
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct AccessibilityOptions {
    pub extinct_rule: ExtinctStepRule,
    /// Steps included in `mean_oa`; all of `1..=S` when `None`.
    pub mean_steps: Option<RangeInclusive<usize>>,
}

impl AccessibilityOptions {
    fn mean_range(&self, max_steps: usize) -> Result<RangeInclusive<usize>> {
        match &self.mean_steps {
            None => Ok(1..=max_steps),
            Some(r) if *r.start() >= 1 && r.start() <= r.end() && *r.end() <= max_steps => {
                Ok(r.clone())
            }
            Some(r) => Err(Error::InvalidConfig(format!(
                "mean step range {}..={} is not within 1..={max_steps}",
                r.start(),
                r.end()
            ))),
        }
    }
}

/// Shannon entropy in nats of a sparse distribution, summed in target order.
pub fn diversity_entropy(dist: &Distribution) -> Result<f64> {
    entropy_of(dist.iter().map(|(_, p)| p))
}

/// Entropy of raw probabilities; zero entries contribute nothing.
pub fn entropy_of(probabilities: impl IntoIterator<Item = f64>) -> Result<f64> {
    let mut total = 0.0;
    let mut h = 0.0;
    for p in probabilities {
        if !(0.0..=1.0).contains(&p) {
            return Err(Error::InvalidDistribution(format!(
                "probability {p} outside [0, 1]"
            )));
        }
        total += p;
        if p > 0.0 {
            h -= p * p.ln();
        }
    }
    if total > 1.0 + MASS_TOLERANCE {
        return Err(Error::InvalidDistribution(format!(
            "total mass {total} exceeds 1"
        )));
    }
    // -0.0 from an all-certain distribution
    Ok(h.max(0.0))
}

/// `exp(entropy) / (N - 1)`, or 0 at an extinct step under the default rule.
pub fn outward_accessibility(
    entropy: f64,
    node_count: usize,
    survival: f64,
    rule: ExtinctStepRule,
) -> Result<f64> {
    if node_count < 2 {
        return Err(Error::TooFewNodes(node_count));
    }
    if entropy.is_nan() || entropy < 0.0 {
        return Err(Error::InvalidDistribution(format!(
            "entropy {entropy} is negative"
        )));
    }
    if survival <= 0.0 && rule == ExtinctStepRule::Zero {
        return Ok(0.0);
    }
    Ok(entropy.exp() / (node_count - 1) as f64)
}

/// Entropy and accessibility of one node for every step.
#[derive(Debug, Clone, PartialEq)]
pub struct NodeAccessibility {
    pub node: NodeId,
    /// `E_h` for `h = 1..=S` (index `h - 1`).
    pub entropy: Vec<f64>,
    /// `OA_h` for `h = 1..=S` (index `h - 1`).
    pub oa: Vec<f64>,
    pub mean_oa: f64,
}

impl NodeAccessibility {
    pub fn compute<T: StepTransitions + ?Sized>(
        t: &T,
        node_count: usize,
        options: &AccessibilityOptions,
    ) -> Result<Self> {
        let steps = t.max_steps();
        let range = options.mean_range(steps)?;
        let mut entropy = Vec::with_capacity(steps);
        let mut oa = Vec::with_capacity(steps);
        for h in 1..=steps {
            let e = diversity_entropy(t.step(h))?;
            oa.push(outward_accessibility(
                e,
                node_count,
                t.survival(h),
                options.extinct_rule,
            )?);
            entropy.push(e);
        }
        let mean_oa = mean(&oa[range.start() - 1..*range.end()]);
        Ok(NodeAccessibility {
            node: t.source(),
            entropy,
            oa,
            mean_oa,
        })
    }
}

fn mean(values: &[f64]) -> f64 {
    values.iter().sum::<f64>() / values.len() as f64
}

/// Per-node accessibility over steps `1..=S`, for a set of source nodes.
/// Rows are kept in ascending node order.
#[derive(Debug, Clone, PartialEq)]
pub struct AccessibilityField {
    node_count: usize,
    max_steps: usize,
    rows: Vec<NodeAccessibility>,
}

impl AccessibilityField {
    pub fn from_rows(
        node_count: usize,
        max_steps: usize,
        mut rows: Vec<NodeAccessibility>,
    ) -> Result<Self> {
        for row in &rows {
            if row.oa.len() != max_steps {
                return Err(Error::StepMismatch {
                    expected: max_steps,
                    found: row.oa.len(),
                });
            }
            if row.node.index() >= node_count {
                return Err(Error::NodeOutOfRange {
                    index: row.node.index(),
                    node_count,
                });
            }
        }
        rows.sort_by_key(|r| r.node);
        rows.dedup_by_key(|r| r.node);
        Ok(AccessibilityField {
            node_count,
            max_steps,
            rows,
        })
    }

    /// `N` of the network the field was computed on.
    pub fn node_count(&self) -> usize {
        self.node_count
    }

    pub fn max_steps(&self) -> usize {
        self.max_steps
    }

    pub fn rows(&self) -> &[NodeAccessibility] {
        &self.rows
    }

    pub fn get(&self, node: NodeId) -> Option<&NodeAccessibility> {
        self.rows
            .binary_search_by_key(&node, |r| r.node)
            .ok()
            .map(|i| &self.rows[i])
    }

    pub fn covered(&self) -> NodeSet {
        self.rows.iter().map(|r| r.node).collect()
    }

    /// The sub-field for `region`; every member must be covered.
    pub fn restrict(&self, region: &NodeSet) -> Result<AccessibilityField> {
        let rows = region
            .iter()
            .map(|n| self.get(n).cloned().ok_or(Error::MissingNode(n.index())))
            .collect::<Result<Vec<_>>>()?;
        Ok(AccessibilityField {
            node_count: self.node_count,
            max_steps: self.max_steps,
            rows,
        })
    }
}

/// Builds the field from per-source transitions sharing one step count.
pub fn accessibility_field<T: StepTransitions>(
    transitions: &[T],
    node_count: usize,
    options: &AccessibilityOptions,
) -> Result<AccessibilityField> {
    let max_steps = transitions.first().map_or(0, |t| t.max_steps());
    let rows = transitions
        .iter()
        .map(|t| {
            if t.max_steps() != max_steps {
                return Err(Error::StepMismatch {
                    expected: max_steps,
                    found: t.max_steps(),
                });
            }
            NodeAccessibility::compute(t, node_count, options)
        })
        .collect::<Result<Vec<_>>>()?;
    AccessibilityField::from_rows(node_count, max_steps, rows)
}

/// Mean `OA_h` over the region's members, for each step.
pub fn region_mean_curve(field: &AccessibilityField, region: &NodeSet) -> Result<Vec<f64>> {
    if region.is_empty() {
        return Err(Error::EmptyNodeSet);
    }
    let mut sums = vec![0.0; field.max_steps()];
    for node in region {
        let row = field.get(node).ok_or(Error::MissingNode(node.index()))?;
        for (s, v) in sums.iter_mut().zip(&row.oa) {
            *s += v;
        }
    }
    let k = region.len() as f64;
    Ok(sums.into_iter().map(|s| s / k).collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::LN_2;

    fn dist(entries: &[(u32, f64)]) -> Distribution {
        entries.iter().map(|&(n, p)| (NodeId(n), p)).collect()
    }

    #[test]
    fn entropy_examples() {
        assert_eq!(diversity_entropy(&dist(&[(4, 1.0)])).unwrap(), 0.0);
        assert!((diversity_entropy(&dist(&[(0, 0.5), (1, 0.5)])).unwrap() - LN_2).abs() < 1e-15);
        assert_eq!(diversity_entropy(&Distribution::default()).unwrap(), 0.0);
        let e = diversity_entropy(&dist(&[(0, 0.5), (1, 0.25), (2, 0.25)])).unwrap();
        assert!((e - 1.039_720_770_839_917_9).abs() < 1e-12);
        assert!((e - (0.5 * LN_2 + 0.5 * 4f64.ln())).abs() < 1e-15);
    }

    #[test]
    fn entropy_rejects_bad_mass() {
        assert!(entropy_of([1.2]).is_err());
        assert!(entropy_of([-0.1]).is_err());
        assert!(entropy_of([0.6, 0.5]).is_err());
        assert!(entropy_of([f64::NAN]).is_err());
        assert!(entropy_of([0.5, 0.5 + 1e-12]).is_ok());
    }

    #[test]
    fn outward_accessibility_examples() {
        let rule = ExtinctStepRule::Zero;
        // star center, step 1
        assert!((outward_accessibility(3f64.ln(), 4, 1.0, rule).unwrap() - 1.0).abs() < 1e-15);
        // C4 step 2
        assert!((outward_accessibility(0.0, 4, 1.0, rule).unwrap() - 1.0 / 3.0).abs() < 1e-15);
        // C4 step 4
        assert_eq!(outward_accessibility(0.0, 4, 0.0, rule).unwrap(), 0.0);
        assert!(
            (outward_accessibility(0.0, 4, 0.0, ExtinctStepRule::Literal).unwrap() - 1.0 / 3.0)
                .abs()
                < 1e-15
        );
        assert!(matches!(
            outward_accessibility(0.0, 1, 1.0, rule),
            Err(Error::TooFewNodes(1))
        ));
    }

    struct Fixed {
        source: NodeId,
        steps: Vec<Distribution>,
    }

    impl StepTransitions for Fixed {
        fn source(&self) -> NodeId {
            self.source
        }
        fn max_steps(&self) -> usize {
            self.steps.len()
        }
        fn step(&self, h: usize) -> &Distribution {
            &self.steps[h - 1]
        }
        fn survival(&self, h: usize) -> f64 {
            self.steps[h - 1].total()
        }
    }

    fn c4_like(source: u32) -> Fixed {
        let (a, b, c) = ((source + 1) % 4, (source + 2) % 4, (source + 3) % 4);
        Fixed {
            source: NodeId(source),
            steps: vec![
                dist(&[(a, 0.5), (c, 0.5)]),
                dist(&[(b, 1.0)]),
                dist(&[(a, 0.5), (c, 0.5)]),
                Distribution::default(),
            ],
        }
    }

    #[test]
    fn field_and_region_curve() {
        let t: Vec<Fixed> = (0..4).map(c4_like).collect();
        let f = accessibility_field(&t, 4, &AccessibilityOptions::default()).unwrap();
        let expected = [2.0 / 3.0, 1.0 / 3.0, 2.0 / 3.0, 0.0];
        for row in f.rows() {
            for (a, b) in row.oa.iter().zip(expected) {
                assert!((a - b).abs() < 1e-12);
            }
            assert!((row.mean_oa - 5.0 / 12.0).abs() < 1e-12);
        }
        let all: NodeSet = (0..4).map(NodeId).collect();
        let curve = region_mean_curve(&f, &all).unwrap();
        assert!(curve
            .iter()
            .zip(expected)
            .all(|(a, b)| (a - b).abs() < 1e-12));
        let single = region_mean_curve(&f, &NodeSet::from_iter([NodeId(2)])).unwrap();
        assert_eq!(single, f.get(NodeId(2)).unwrap().oa);
        assert!(matches!(
            region_mean_curve(&f, &NodeSet::new()),
            Err(Error::EmptyNodeSet)
        ));
        assert!(region_mean_curve(&f, &NodeSet::from_iter([NodeId(9)])).is_err());
    }

    #[test]
    fn mean_step_range_and_literal_rule() {
        let t = [c4_like(0)];
        let opts = AccessibilityOptions {
            extinct_rule: ExtinctStepRule::Literal,
            mean_steps: Some(2..=4),
        };
        let f = accessibility_field(&t, 4, &opts).unwrap();
        let row = f.get(NodeId(0)).unwrap();
        assert!((row.oa[3] - 1.0 / 3.0).abs() < 1e-15);
        assert!((row.mean_oa - (1.0 / 3.0 + 2.0 / 3.0 + 1.0 / 3.0) / 3.0).abs() < 1e-15);
        let bad = AccessibilityOptions {
            mean_steps: Some(0..=2),
            ..Default::default()
        };
        assert!(accessibility_field(&t, 4, &bad).is_err());
    }

    #[test]
    fn mismatched_steps_rejected() {
        let mut short = c4_like(1);
        short.steps.pop();
        let t = [c4_like(0), short];
        assert!(matches!(
            accessibility_field(&t, 4, &AccessibilityOptions::default()),
            Err(Error::StepMismatch { .. })
        ));
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        fn arb_dist() -> impl Strategy<Value = (Vec<f64>, f64)> {
            (proptest::collection::vec(0.0f64..1.0, 1..40), 0.0f64..=1.0).prop_map(|(w, mass)| {
                let total: f64 = w.iter().sum();
                if total == 0.0 {
                    return (vec![0.0; w.len()], 0.0);
                }
                (w.iter().map(|x| x / total * mass).collect(), mass)
            })
        }

        proptest! {
            #[test]
            fn entropy_bounds((probs, mass) in arb_dist()) {
                let e = entropy_of(probs.iter().copied()).unwrap();
                let support = probs.iter().filter(|&&p| p > 0.0).count() as f64;
                prop_assert!(e >= 0.0);
                if support > 0.0 {
                    // Tight bound at total mass m; equals ln(support) at m = 1
                    // and stays below it whenever support >= 3.
                    prop_assert!(e <= mass * (support / mass).ln() + 1e-12);
                    if support >= 3.0 {
                        prop_assert!(e <= support.ln() + 1e-12);
                    }
                }
            }

            #[test]
            fn normalized_entropy_below_log_support((probs, mass) in arb_dist()) {
                if mass > 0.0 {
                    let total: f64 = probs.iter().sum();
                    let e = entropy_of(probs.iter().map(|p| (p / total).min(1.0))).unwrap();
                    let support = probs.iter().filter(|&&p| p > 0.0).count() as f64;
                    prop_assert!(e <= support.ln() + 1e-12);
                }
            }

            #[test]
            fn oa_increasing_in_entropy(a in 0.0f64..5.0, b in 0.0f64..5.0, n in 2usize..500) {
                let oa = |e| outward_accessibility(e, n, 1.0, ExtinctStepRule::Zero).unwrap();
                if a + 1e-9 < b {
                    prop_assert!(oa(a) < oa(b));
                }
            }
        }
    }
}
