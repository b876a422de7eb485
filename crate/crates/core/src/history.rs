//! Expansion of a protocol under a fixed U_r into its full branching
//! history tree, and coherent outcome-sequence probabilities.
//!
//! Insertions branch into the off (f) and on (n) components of the active
//! variant's switch partition; measurements branch per outcome projector.
//! Branch vectors are never renormalized. Zero-amplitude branches are kept
//! as explicit zero leaves so tests can distinguish structurally-absent
//! histories from amplitude cancellations.
//!
//! Trees grow exponentially with the insertion count, so leaves are kept
//! compact: outcome labels are stored as indices into a shared table and
//! resolved on demand.

use std::collections::BTreeMap;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::protocol::{Protocol, ProtocolStep};
use crate::tensor::{Amp, BoundOp, StateVector};

/// Outcome labels per measurement step, shared by all leaves of a tree.
pub type LabelTable = Vec<(usize, Vec<String>)>;

/// One edge label along a history.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BranchLabel {
    /// f/n branch at a computer insertion, relative to the active variant.
    Insertion { off: bool },
    /// Outcome of a type-(b) measurement step, by index into the step's
    /// outcome list.
    Outcome { step: u32, idx: u32 },
}

/// A leaf of the tree: its label path and un-normalized terminal vector v_h.
#[derive(Debug, Clone)]
pub struct History {
    pub labels: Vec<BranchLabel>,
    pub terminal: StateVector,
    /// The branch entered a halting measurement outcome.
    pub halted: bool,
    /// The branch fell below the zero tolerance and was not expanded further.
    pub pruned_zero: bool,
    table: Arc<LabelTable>,
}

impl History {
    fn resolve(&self, step: u32, idx: u32) -> &str {
        self.table
            .iter()
            .find(|(s, _)| *s == step as usize)
            .map(|(_, labels)| labels[idx as usize].as_str())
            .expect("outcome label recorded for unknown step")
    }

    /// Concatenated label string, e.g. "f0f00".
    pub fn label_string(&self) -> String {
        let mut out = String::new();
        for l in &self.labels {
            match l {
                BranchLabel::Insertion { off: true } => out.push('f'),
                BranchLabel::Insertion { off: false } => out.push('n'),
                BranchLabel::Outcome { step, idx } => out.push_str(self.resolve(*step, *idx)),
            }
        }
        out
    }

    /// The measurement-outcome sequence recorded on this branch.
    pub fn outcome_record(&self) -> OutcomeSequence {
        self.labels
            .iter()
            .filter_map(|l| match l {
                BranchLabel::Outcome { step, idx } => {
                    Some((*step as usize, self.resolve(*step, *idx).to_string()))
                }
                _ => None,
            })
            .collect()
    }

    /// Allocation-free comparison of this branch's record against m.
    pub fn record_matches(&self, m: &[(usize, String)]) -> bool {
        let mut expected = m.iter();
        for l in &self.labels {
            if let BranchLabel::Outcome { step, idx } = l {
                match expected.next() {
                    Some((s, label)) if *s == *step as usize && label == self.resolve(*step, *idx) => {}
                    _ => return false,
                }
            }
        }
        expected.next().is_none()
    }

    pub fn is_all_off(&self) -> bool {
        self.labels
            .iter()
            .all(|l| !matches!(l, BranchLabel::Insertion { off: false }))
    }
}

/// A sequence of measurement outcomes, one per executed measurement step.
pub type OutcomeSequence = Vec<(usize, String)>;

#[derive(Debug, Clone, Copy)]
pub struct ExpandOptions {
    /// Branches with norm² below this are recorded as zero leaves and not
    /// expanded further.
    pub prune_tol: f64,
    /// Hard cap on the number of leaves; exceeded trees fail loudly.
    pub leaf_cap: usize,
}

impl Default for ExpandOptions {
    fn default() -> Self {
        ExpandOptions { prune_tol: 1e-18, leaf_cap: 1 << 22 }
    }
}

/// Aggregates over the non-pruned leaves sharing one outcome record.
#[derive(Debug, Clone)]
pub struct OutcomeGroup {
    pub record: OutcomeSequence,
    /// Σ_{m ⊂ h} v_h, the coherent sum in leaf order.
    pub coherent: StateVector,
    /// Coherent sum restricted to all-off histories (at most one exists).
    pub all_off: Option<StateVector>,
    /// Σ|v_h|² over non-all-off histories with this record.
    pub leak: f64,
    /// Largest single |v_h|² among the non-all-off histories.
    pub max_leak_single: f64,
}

impl OutcomeGroup {
    pub fn all_off_probability(&self) -> f64 {
        self.all_off.as_ref().map(|v| v.norm_sqr()).unwrap_or(0.0)
    }
}

/// The fully materialized branching structure for one variant.
#[derive(Debug, Clone)]
pub struct HistoryTree {
    pub variant: usize,
    /// Leaves in preorder, i.e. lexicographic label order.
    pub leaves: Vec<History>,
    /// One group per realizable outcome record, sorted by record.
    pub groups: Vec<OutcomeGroup>,
    /// Σ|v_h|² accumulated in emission order.
    mass: f64,
    measurement_labels: Arc<LabelTable>,
}

impl HistoryTree {
    /// Distinct complete outcome records over non-pruned leaves, sorted.
    pub fn maximal_outcomes(&self) -> Vec<OutcomeSequence> {
        self.groups.iter().map(|g| g.record.clone()).collect()
    }

    /// Σ_h |v_h|², the incoherent sum over all histories (unitarity check
    /// value), accumulated during expansion.
    pub fn normalization_check(&self) -> f64 {
        self.mass
    }

    fn validate_sequence(&self, m: &[(usize, String)]) -> Result<()> {
        for (step, label) in m {
            let known = self
                .measurement_labels
                .iter()
                .find(|(s, _)| s == step)
                .map(|(_, labels)| labels.contains(label))
                .unwrap_or(false);
            if !known {
                return Err(Error::UnknownOutcome { step: *step, label: label.clone() });
            }
        }
        Ok(())
    }

    /// The aggregate group for record m, if any non-pruned leaf realizes it.
    pub fn group(&self, m: &[(usize, String)]) -> Option<&OutcomeGroup> {
        self.groups
            .binary_search_by(|g| g.record.as_slice().cmp(m))
            .ok()
            .map(|i| &self.groups[i])
    }

    /// |Σ_{m ⊂ h} v_h|² — coherent sum over histories whose record is m.
    pub fn outcome_probability(&self, m: &[(usize, String)]) -> Result<f64> {
        self.validate_sequence(m)?;
        Ok(self.group(m).map(|g| g.coherent.norm_sqr()).unwrap_or(0.0))
    }

    /// Leaves (non-pruned) whose outcome record equals m.
    pub fn leaves_with_record<'a>(&'a self, m: &[(usize, String)]) -> Vec<&'a History> {
        self.leaves
            .iter()
            .filter(|h| !h.pruned_zero && h.record_matches(m))
            .collect()
    }
}
/// Per-step operators with index tables prebound to the protocol layout, so
/// the (potentially exponential) tree walk does no table recomputation.
#[allow(clippy::large_enum_variant)] // a handful per protocol, never collected in bulk
enum PreparedStep {
    Unitary(BoundOp),
    Insertion { off: BoundOp, on: BoundOp, evolve: BoundOp },
    Measurement { outcomes: Vec<(BoundOp, bool)> },
}

/// Shared walker state. The label path is a single mutable stack pushed and
/// popped around recursion, so branching never clones label vectors; leaves
/// copy the stack once, and only when leaf retention is requested.
struct Walker<'a> {
    p: &'a Protocol,
    steps: usize,
    opts: ExpandOptions,
    table: Arc<LabelTable>,
    keep_leaves: bool,
    leaves: Vec<History>,
    leaf_count: usize,
    /// Σ|v_h|² in emission order.
    mass: f64,
    index: BTreeMap<Box<[(u32, u32)]>, usize>,
    groups: Vec<OutcomeGroup>,
    labels: Vec<BranchLabel>,
    /// Count of on-branches on the current path (0 ⇔ all-off).
    on_depth: usize,
    key: Vec<(u32, u32)>,
    /// Recycled amplitude buffers; recursion pops one per node and returns it.
    pool: Vec<Vec<Amp>>,
}

fn slice_norm_sqr(amps: &[Amp]) -> f64 {
    amps.iter().map(|a| a.norm_sqr()).sum()
}

impl Walker<'_> {
    fn take_buf(&mut self) -> Vec<Amp> {
        self.pool
            .pop()
            .unwrap_or_else(|| vec![Amp::new(0.0, 0.0); self.p.layout.total_dim()])
    }

    fn emit(&mut self, terminal: &[Amp], halted: bool, pruned_zero: bool) -> Result<()> {
        if self.leaf_count >= self.opts.leaf_cap {
            return Err(Error::LeafCapExceeded { cap: self.opts.leaf_cap });
        }
        self.leaf_count += 1;
        if !pruned_zero {
            self.mass += slice_norm_sqr(terminal);
            self.update_group(terminal)?;
        }
        if self.keep_leaves {
            let terminal = StateVector::new(self.p.layout.clone(), terminal.to_vec())?;
            if !terminal.is_finite() {
                return Err(Error::InvariantViolation("non-finite leaf amplitude".into()));
            }
            self.leaves.push(History {
                labels: self.labels.clone(),
                terminal,
                halted,
                pruned_zero,
                table: Arc::clone(&self.table),
            });
        }
        Ok(())
    }

    fn update_group(&mut self, terminal: &[Amp]) -> Result<()> {
        self.key.clear();
        self.key.extend(self.labels.iter().filter_map(|l| match l {
            BranchLabel::Outcome { step, idx } => Some((*step, *idx)),
            _ => None,
        }));
        let gi = match self.index.get(self.key.as_slice()) {
            Some(&gi) => gi,
            None => {
                let record = self
                    .key
                    .iter()
                    .map(|&(step, idx)| {
                        let label = self
                            .table
                            .iter()
                            .find(|(s, _)| *s == step as usize)
                            .map(|(_, ls)| ls[idx as usize].clone())
                            .expect("recorded outcome at a measurement step");
                        (step as usize, label)
                    })
                    .collect();
                self.index.insert(self.key.clone().into_boxed_slice(), self.groups.len());
                self.groups.push(OutcomeGroup {
                    record,
                    coherent: StateVector::zero(self.p.layout.clone()),
                    all_off: None,
                    leak: 0.0,
                    max_leak_single: 0.0,
                });
                self.groups.len() - 1
            }
        };
        let g = &mut self.groups[gi];
        g.coherent.accumulate_slice(terminal)?;
        if self.on_depth == 0 {
            let a = g
                .all_off
                .get_or_insert_with(|| StateVector::zero(self.p.layout.clone()));
            a.accumulate_slice(terminal)?;
        } else {
            let n = slice_norm_sqr(terminal);
            g.leak += n;
            g.max_leak_single = g.max_leak_single.max(n);
        }
        Ok(())
    }

    fn walk(&mut self, prepared: &[PreparedStep], state: &[Amp], step_idx: usize) -> Result<()> {
        if step_idx >= self.steps {
            return self.emit(state, false, false);
        }
        match &prepared[step_idx] {
            PreparedStep::Unitary(op) => {
                let mut buf = self.take_buf();
                op.apply_raw(state, &mut buf);
                let r = self.walk(prepared, &buf, step_idx + 1);
                self.pool.push(buf);
                r
            }
            PreparedStep::Insertion { off, on, evolve } => {
                // branch into off (f) and on (n) switch components, then run U_r
                let mut buf = self.take_buf();
                let mut evolved = self.take_buf();
                let mut result = Ok(());
                for (is_off, proj) in [(true, off), (false, on)] {
                    proj.apply_raw(state, &mut buf);
                    self.labels.push(BranchLabel::Insertion { off: is_off });
                    if !is_off {
                        self.on_depth += 1;
                    }
                    let r = if slice_norm_sqr(&buf) < self.opts.prune_tol {
                        self.emit_pruned()
                    } else if is_off {
                        // U_r is the identity on its off subspace
                        self.walk(prepared, &buf, step_idx + 1)
                    } else {
                        evolve.apply_raw(&buf, &mut evolved);
                        self.walk(prepared, &evolved, step_idx + 1)
                    };
                    if !is_off {
                        self.on_depth -= 1;
                    }
                    self.labels.pop();
                    if r.is_err() {
                        result = r;
                        break;
                    }
                }
                self.pool.push(buf);
                self.pool.push(evolved);
                result
            }
            PreparedStep::Measurement { outcomes } => {
                let mut buf = self.take_buf();
                let mut result = Ok(());
                for (oi, (proj, halts)) in outcomes.iter().enumerate() {
                    proj.apply_raw(state, &mut buf);
                    self.labels.push(BranchLabel::Outcome {
                        step: step_idx as u32,
                        idx: oi as u32,
                    });
                    let r = if slice_norm_sqr(&buf) < self.opts.prune_tol {
                        self.emit_pruned()
                    } else if *halts {
                        self.emit(&buf, true, false)
                    } else {
                        self.walk(prepared, &buf, step_idx + 1)
                    };
                    self.labels.pop();
                    if r.is_err() {
                        result = r;
                        break;
                    }
                }
                self.pool.push(buf);
                result
            }
        }
    }

    fn emit_pruned(&mut self) -> Result<()> {
        if self.keep_leaves {
            let zeros = vec![Amp::new(0.0, 0.0); self.p.layout.total_dim()];
            self.emit(&zeros, false, true)
        } else {
            self.emit_pruned_counted()
        }
    }

    fn emit_pruned_counted(&mut self) -> Result<()> {
        if self.leaf_count >= self.opts.leaf_cap {
            return Err(Error::LeafCapExceeded { cap: self.opts.leaf_cap });
        }
        self.leaf_count += 1;
        Ok(())
    }
}

fn expand_inner(p: &Protocol, r: usize, opts: ExpandOptions, keep_leaves: bool) -> Result<HistoryTree> {
    if r >= p.computer.variant_count() {
        return Err(Error::InvalidVariant(r));
    }
    let u = p.computer.build_u(r)?;
    let off_proj = p.computer.off_projector(r)?;
    let on_proj = p.computer.on_projector(r)?;

    let prepared: Vec<PreparedStep> = p
        .steps
        .iter()
        .map(|s| match s {
            ProtocolStep::Unitary { targets, matrix } => {
                Ok(PreparedStep::Unitary(BoundOp::bind(matrix, targets, &p.layout)?))
            }
            ProtocolStep::Insertion { switch, output } => Ok(PreparedStep::Insertion {
                off: BoundOp::bind(&off_proj, &[*switch], &p.layout)?,
                on: BoundOp::bind(&on_proj, &[*switch], &p.layout)?,
                evolve: BoundOp::bind(&u, &[*switch, *output], &p.layout)?,
            }),
            ProtocolStep::Measurement { targets, outcomes, halt_on } => {
                let outcomes = outcomes
                    .iter()
                    .map(|o| {
                        Ok((
                            BoundOp::bind(&o.projector, targets, &p.layout)?,
                            halt_on.contains(&o.label),
                        ))
                    })
                    .collect::<Result<Vec<_>>>()?;
                Ok(PreparedStep::Measurement { outcomes })
            }
        })
        .collect::<Result<Vec<_>>>()?;

    let measurement_labels: Arc<LabelTable> = Arc::new(
        p.steps
            .iter()
            .enumerate()
            .filter_map(|(i, s)| match s {
                ProtocolStep::Measurement { outcomes, .. } => {
                    Some((i, outcomes.iter().map(|o| o.label.clone()).collect()))
                }
                _ => None,
            })
            .collect(),
    );

    let mut walker = Walker {
        p,
        steps: prepared.len(),
        opts,
        table: Arc::clone(&measurement_labels),
        keep_leaves,
        leaves: Vec::new(),
        leaf_count: 0,
        mass: 0.0,
        index: BTreeMap::new(),
        groups: Vec::new(),
        labels: Vec::new(),
        on_depth: 0,
        key: Vec::new(),
        pool: Vec::new(),
    };
    walker.walk(&prepared, StateVector::ground(p.layout.clone()).amps(), 0)?;
    if !walker.mass.is_finite() || walker.groups.iter().any(|g| !g.coherent.is_finite()) {
        return Err(Error::InvariantViolation("non-finite amplitude during expansion".into()));
    }

    let mut groups = walker.groups;
    groups.sort_by(|a, b| a.record.cmp(&b.record));
    Ok(HistoryTree {
        variant: r,
        leaves: walker.leaves,
        groups,
        mass: walker.mass,
        measurement_labels,
    })
}

/// Depth-first expansion of `p` under variant `r`. Leaves arrive in
/// preorder, i.e. lexicographic label order.
pub fn expand(p: &Protocol, r: usize, opts: ExpandOptions) -> Result<HistoryTree> {
    expand_inner(p, r, opts, true)
}

/// Expansion that computes the outcome groups and normalization mass but
/// skips materializing individual leaves — classification only reads the
/// groups, and trees grow exponentially with the insertion count.
pub(crate) fn expand_summary(p: &Protocol, r: usize, opts: ExpandOptions) -> Result<HistoryTree> {
    expand_inner(p, r, opts, false)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::protocol::{computational_outcomes, ComputerModel, ProtocolStep};
    use crate::tensor::{OperatorMatrix, SpaceLayout};

    fn example1(n: usize, theta: f64) -> Protocol {
        // local copy of the gallery construction to keep this module testable
        // bottom-up; the gallery version is pinned against frozen leaf tables elsewhere
        let layout = SpaceLayout::new(vec![2, 2]).unwrap();
        let mut steps = Vec::new();
        for i in 0..n {
            steps.push(ProtocolStep::Unitary { targets: vec![0], matrix: OperatorMatrix::rotation(theta) });
            steps.push(ProtocolStep::Insertion { switch: 0, output: 1 });
            if i + 1 < n {
                steps.push(ProtocolStep::Measurement {
                    targets: vec![1],
                    outcomes: computational_outcomes(&[2]),
                    halt_on: vec!["1".into()],
                });
            }
        }
        // the final two-qubit measurement doubles as the last output check
        steps.push(ProtocolStep::Measurement {
            targets: vec![0, 1],
            outcomes: computational_outcomes(&[2, 2]),
            halt_on: vec![],
        });
        Protocol::new(layout, ComputerModel::standard(), steps).unwrap()
    }

    #[test]
    fn example1_u0_leaf_pattern() {
        let p = example1(2, std::f64::consts::FRAC_PI_4);
        let t = expand(&p, 0, ExpandOptions::default()).unwrap();
        let mut probs: Vec<(String, f64)> = t
            .leaves
            .iter()
            .filter(|h| h.terminal.norm_sqr() > 1e-20)
            .map(|h| (h.label_string(), h.terminal.norm_sqr()))
            .collect();
        probs.sort_by(|a, b| a.0.cmp(&b.0));
        // c^4, c^2 s^2, s^4, c^2 s^2 at theta = pi/4 are all 0.25
        assert_eq!(probs.len(), 4);
        for (_, v) in &probs {
            assert!((v - 0.25).abs() < 1e-12);
        }
        assert!((t.normalization_check() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn example1_u1_history_f0f00() {
        let p = example1(2, std::f64::consts::FRAC_PI_4);
        let t = expand(&p, 1, ExpandOptions::default()).unwrap();
        let h = t
            .leaves
            .iter()
            .find(|h| h.label_string() == "f0f00" && !h.pruned_zero)
            .expect("history f0f00 present");
        let c2 = 0.5; // cos^2(pi/4)
        assert!((h.terminal.amp(&[0, 0]).re - c2).abs() < 1e-12);
        assert!(h.is_all_off());
    }

    #[test]
    fn trivial_protocol_single_unit_history() {
        let layout = SpaceLayout::new(vec![2]).unwrap();
        let p = Protocol::new(
            layout,
            ComputerModel::standard(),
            vec![ProtocolStep::Measurement {
                targets: vec![0],
                outcomes: computational_outcomes(&[2]),
                halt_on: vec![],
            }],
        )
        .unwrap();
        let t = expand(&p, 0, ExpandOptions::default()).unwrap();
        let live: Vec<_> = t.leaves.iter().filter(|h| !h.pruned_zero).collect();
        assert_eq!(live.len(), 1);
        assert!((live[0].terminal.norm_sqr() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn empty_protocol_normalizes_exactly() {
        let layout = SpaceLayout::new(vec![2]).unwrap();
        let p = Protocol::new(layout, ComputerModel::standard(), vec![]).unwrap();
        let t = expand(&p, 0, ExpandOptions::default()).unwrap();
        assert_eq!(t.normalization_check(), 1.0);
    }

    #[test]
    fn n2_record_cancellation_under_u0() {
        let p = example1(2, std::f64::consts::FRAC_PI_4);
        let t = expand(&p, 0, ExpandOptions::default()).unwrap();
        let m = vec![(2usize, "0".to_string()), (5usize, "00".to_string())];
        // c^2 - s^2 = 0 at theta = pi/4
        assert!(t.outcome_probability(&m).unwrap() < 1e-24);
    }

    #[test]
    fn u1_cf_probability_is_quarter() {
        let p = example1(2, std::f64::consts::FRAC_PI_4);
        let t = expand(&p, 1, ExpandOptions::default()).unwrap();
        let m = vec![(2usize, "0".to_string()), (5usize, "00".to_string())];
        assert!((t.outcome_probability(&m).unwrap() - 0.25).abs() < 1e-12);
    }

    #[test]
    fn total_probability_over_maximal_outcomes() {
        let p = example1(3, 0.4);
        for r in 0..2 {
            let t = expand(&p, r, ExpandOptions::default()).unwrap();
            let total: f64 = t
                .maximal_outcomes()
                .iter()
                .map(|m| t.outcome_probability(m).unwrap())
                .sum();
            assert!((total - 1.0).abs() < 1e-9, "variant {r}: total {total}");
        }
    }

    #[test]
    fn all_off_history_is_variant_independent() {
        let p = example1(3, 0.7);
        let t0 = expand(&p, 0, ExpandOptions::default()).unwrap();
        let t1 = expand(&p, 1, ExpandOptions::default()).unwrap();
        for h0 in t0.leaves.iter().filter(|h| h.is_all_off() && !h.pruned_zero) {
            if let Some(h1) = t1
                .leaves
                .iter()
                .find(|h| h.label_string() == h0.label_string() && !h.pruned_zero)
            {
                assert!(h0.terminal.max_dev(&h1.terminal) < 1e-12);
            }
        }
    }

    #[test]
    fn leaves_arrive_in_lexicographic_label_order() {
        let p = example1(3, 0.4);
        for r in 0..2 {
            let t = expand(&p, r, ExpandOptions::default()).unwrap();
            let labels: Vec<String> = t.leaves.iter().map(|h| h.label_string()).collect();
            let mut sorted = labels.clone();
            sorted.sort();
            assert_eq!(labels, sorted, "variant {r}");
        }
    }

    #[test]
    fn unknown_outcome_label_is_an_error() {
        let p = example1(1, 0.4);
        let t = expand(&p, 0, ExpandOptions::default()).unwrap();
        let m = vec![(2usize, "q".to_string())];
        assert!(matches!(t.outcome_probability(&m), Err(Error::UnknownOutcome { .. })));
    }

    #[test]
    fn leaf_cap_fails_loudly() {
        let p = example1(4, 0.3);
        let opts = ExpandOptions { prune_tol: 1e-18, leaf_cap: 3 };
        assert!(matches!(expand(&p, 0, opts), Err(Error::LeafCapExceeded { cap: 3 })));
    }
}
