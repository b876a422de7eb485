//! Counterfactual-outcome classification: the exact definition, its
//! generalization to families with per-variant off-subspaces, and the
//! epsilon-relaxed approximate form.

use crate::error::{Error, Result};
use crate::history::{expand, expand_summary, ExpandOptions, HistoryTree, OutcomeSequence};
use crate::protocol::{Protocol, ProtocolStep};
use crate::tensor::StateVector;

/// A classified CF outcome: observing `m` certifies result `r` while the
/// run was confined to U_r's off-subspace.
#[derive(Debug, Clone)]
pub struct CFOutcome {
    pub m: OutcomeSequence,
    pub r: usize,
    pub probability: f64,
    /// Coherent sum of the all-off histories realizing m under U_r.
    pub witness: StateVector,
}

#[derive(Debug, Clone)]
pub struct CFReport {
    pub outcomes: Vec<CFOutcome>,
    /// p_r aggregates, one per variant.
    pub p: Vec<f64>,
    pub zero_tol: f64,
    /// N, the number of computer insertions.
    pub insertions: usize,
    /// True iff all variants share one off-subspace, where p_0 + p_1 <= 1 holds.
    pub common_off: bool,
}

impl CFReport {
    pub fn p_sum(&self) -> f64 {
        self.p.iter().sum()
    }

    /// Variant indices with at least one CF outcome.
    pub fn types_present(&self) -> Vec<usize> {
        let mut t: Vec<usize> = self.outcomes.iter().map(|o| o.r).collect();
        t.sort_unstable();
        t.dedup();
        t
    }
}

/// An outcome satisfying the relaxed conditions (1')/(2').
#[derive(Debug, Clone)]
pub struct ApproxCFOutcome {
    pub m: OutcomeSequence,
    pub r: usize,
    pub epsilon: f64,
    /// Σ|v_h|² over non-all-off histories containing m, under U_r.
    pub leak_same: f64,
    /// Largest probability of m under any other variant.
    pub leak_other: f64,
    pub all_off_probability: f64,
}

#[derive(Debug, Clone, Copy)]
pub struct ClassifyOptions {
    /// Threshold below which a probability counts as zero in conditions
    /// (1) and (2).
    pub zero_tol: f64,
    pub expand: ExpandOptions,
    /// The "significantly larger than epsilon" floor for approximate
    /// classification, as a multiple of epsilon; None disables the floor.
    pub approx_floor_factor: Option<f64>,
}

impl Default for ClassifyOptions {
    fn default() -> Self {
        ClassifyOptions {
            zero_tol: 1e-9,
            expand: ExpandOptions::default(),
            approx_floor_factor: Some(10.0),
        }
    }
}

/// Expand every variant's tree once; classification is read off the trees.
pub fn expand_all(p: &Protocol, opts: ExpandOptions) -> Result<Vec<HistoryTree>> {
    (0..p.computer.variant_count())
        .map(|r| expand(p, r, opts))
        .collect()
}

fn candidate_outcomes(trees: &[HistoryTree]) -> Vec<OutcomeSequence> {
    let mut all: Vec<OutcomeSequence> = trees.iter().flat_map(|t| t.maximal_outcomes()).collect();
    all.sort();
    all.dedup();
    all
}

struct OutcomeView {
    all_off_sum: Option<StateVector>,
    all_off_prob: f64,
    /// Σ|v_h|² over non-all-off histories with this record.
    leak: f64,
    max_leak_single: f64,
}

fn view(tree: &HistoryTree, m: &OutcomeSequence) -> Result<OutcomeView> {
    Ok(match tree.group(m) {
        Some(g) => OutcomeView {
            all_off_sum: g.all_off.clone(),
            all_off_prob: g.all_off_probability(),
            leak: g.leak,
            max_leak_single: g.max_leak_single,
        },
        None => OutcomeView {
            all_off_sum: None,
            all_off_prob: 0.0,
            leak: 0.0,
            max_leak_single: 0.0,
        },
    })
}

/// Classify every realizable outcome sequence per the CF definition.
///
/// Condition (1): under U_r, every history containing m other than the
/// all-off one has probability below `zero_tol`. Condition (2): under every
/// other variant, m is seen with probability below `zero_tol`.
pub fn classify_with_trees(
    p: &Protocol,
    trees: &[HistoryTree],
    opts: &ClassifyOptions,
) -> Result<CFReport> {
    let variants = p.computer.variant_count();
    if variants < 2 {
        return Err(Error::UnsupportedFamily(
            "CF classification needs at least two variants".into(),
        ));
    }
    let mut outcomes = Vec::new();
    let mut p_agg = vec![0.0; variants];

    for m in candidate_outcomes(trees) {
        for r in 0..variants {
            let v = view(&trees[r], &m)?;
            // condition 1: each non-all-off history individually ~zero
            if v.max_leak_single >= opts.zero_tol {
                continue;
            }
            // the outcome must actually be observable via its all-off path
            if v.all_off_prob < opts.zero_tol {
                continue;
            }
            // condition 2
            let mut other_ok = true;
            for (s, tree) in trees.iter().enumerate() {
                if s != r && tree.outcome_probability(&m)? >= opts.zero_tol {
                    other_ok = false;
                    break;
                }
            }
            if !other_ok {
                continue;
            }
            let witness = v.all_off_sum.expect("nonzero all-off probability");
            p_agg[r] += v.all_off_prob;
            outcomes.push(CFOutcome { m: m.clone(), r, probability: v.all_off_prob, witness });
        }
    }

    let common_off = p.computer.common_off();
    let report = CFReport {
        outcomes,
        p: p_agg,
        zero_tol: opts.zero_tol,
        insertions: p.insertion_count(),
        common_off,
    };
    // the p-sum bound as a runtime assertion in its domain of validity
    if common_off && variants == 2 && report.p_sum() > 1.0 + 1e-9 {
        return Err(Error::InvariantViolation(format!(
            "p_0 + p_1 = {} exceeds 1 for a common-off-subspace computer",
            report.p_sum()
        )));
    }
    Ok(report)
}

pub fn classify(p: &Protocol, opts: &ClassifyOptions) -> Result<CFReport> {
    // summary expansion: classification reads only the outcome groups, and
    // leaf materialization dominates for insertion-heavy protocols
    let trees = (0..p.computer.variant_count())
        .map(|r| expand_summary(p, r, opts.expand))
        .collect::<Result<Vec<_>>>()?;
    classify_with_trees(p, &trees, opts)
}

/// Approximate classification at tolerance `epsilon`.
pub fn classify_approx(
    p: &Protocol,
    epsilon: f64,
    opts: &ClassifyOptions,
) -> Result<Vec<ApproxCFOutcome>> {
    if epsilon <= 0.0 {
        return Err(Error::InvalidParameter("epsilon must be positive".into()));
    }
    let trees = (0..p.computer.variant_count())
        .map(|r| expand_summary(p, r, opts.expand))
        .collect::<Result<Vec<_>>>()?;
    let variants = trees.len();
    let mut found = Vec::new();
    for m in candidate_outcomes(&trees) {
        for r in 0..variants {
            let v = view(&trees[r], &m)?;
            if v.leak >= epsilon {
                continue;
            }
            let mut leak_other = 0.0f64;
            for (s, tree) in trees.iter().enumerate() {
                if s != r {
                    leak_other = leak_other.max(tree.outcome_probability(&m)?);
                }
            }
            if leak_other >= epsilon {
                continue;
            }
            if let Some(factor) = opts.approx_floor_factor {
                if v.all_off_prob < factor * epsilon {
                    continue;
                }
            } else if v.all_off_prob == 0.0 {
                continue;
            }
            found.push(ApproxCFOutcome {
                m: m.clone(),
                r,
                epsilon,
                leak_same: v.leak,
                leak_other,
                all_off_probability: v.all_off_prob,
            });
        }
    }
    Ok(found)
}

/// Structural predicate: every insertion is immediately followed by a
/// computational-basis measurement of the output register that halts the
/// branch once the output reads 1 (the protocol-final measurement needs no
/// halt marker — nothing follows it).
pub fn ifm_check(p: &Protocol) -> bool {
    for (i, step) in p.steps.iter().enumerate() {
        let ProtocolStep::Insertion { output, .. } = step else { continue };
        let Some(ProtocolStep::Measurement { targets, outcomes, halt_on }) = p.steps.get(i + 1)
        else {
            return false;
        };
        if !targets.contains(output) {
            return false;
        }
        // computational basis: every outcome projector is diagonal
        let diagonal = outcomes.iter().all(|o| {
            let d = o.projector.dim();
            (0..d).all(|row| {
                (0..d).all(|col| row == col || o.projector.entry(row, col).norm() < 1e-12)
            })
        });
        if !diagonal {
            return false;
        }
        if i + 2 < p.steps.len() {
            // must halt on the outcome(s) where the output register reads 1
            let pos = targets.iter().position(|t| t == output).expect("checked");
            let dims: Vec<usize> = targets.iter().map(|&t| p.layout.dims()[t]).collect();
            for (oi, o) in outcomes.iter().enumerate() {
                let _ = oi;
                let d = o.projector.dim();
                for idx in 0..d {
                    if o.projector.entry(idx, idx).norm() < 0.5 {
                        continue;
                    }
                    // digit of the output register inside this outcome index
                    let mut rem = idx;
                    let mut digits = vec![0usize; dims.len()];
                    for (slot, &dd) in digits.iter_mut().zip(&dims).rev() {
                        *slot = rem % dd;
                        rem /= dd;
                    }
                    if digits[pos] == 1 && !halt_on.contains(&o.label) {
                        return false;
                    }
                }
            }
        }
    }
    true
}
