//! Protocol data model: the computer family {U_r} with its off/on switch
//! partition, the three step kinds (unitary / measurement / insertion), and
//! the measurement-deferral transformation.

use std::collections::BTreeSet;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::tensor::{Amp, OperatorMatrix, SpaceLayout, ALG_TOL};

/// One member U_r of the computer family: identity on its off-subspace,
/// a cyclic shift of the output register on the complement.
///
/// The standard decision-problem computer is the family with shared off set
/// {0} and shifts 0 and 1 (U_0 = identity, U_1 = C-NOT). The K-arm family
/// uses off sets {0, r} with shift 1.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct VariantSpec {
    pub off: BTreeSet<usize>,
    pub output_shift: usize,
}

/// The family {U_r} on switch ⊗ output.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ComputerModel {
    pub switch_dim: usize,
    pub output_dim: usize,
    pub variants: Vec<VariantSpec>,
}

/// Per-switch-index label derived from membership in the two off-subspaces.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SubspaceLabel {
    /// off for U_0, on for U_1
    A,
    /// on for U_0, off for U_1
    B,
    /// off for both
    F,
    /// on for both
    N,
}

impl SubspaceLabel {
    pub fn as_char(self) -> char {
        match self {
            SubspaceLabel::A => 'a',
            SubspaceLabel::B => 'b',
            SubspaceLabel::F => 'f',
            SubspaceLabel::N => 'n',
        }
    }
}

/// a/b/f/n classification of the switch basis for a two-variant family.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SubspaceSignature {
    pub labels: Vec<SubspaceLabel>,
}

impl SubspaceSignature {
    pub fn indices_with(&self, label: SubspaceLabel) -> Vec<usize> {
        self.labels
            .iter()
            .enumerate()
            .filter(|(_, &l)| l == label)
            .map(|(i, _)| i)
            .collect()
    }
}

impl ComputerModel {
    pub fn new(switch_dim: usize, output_dim: usize, variants: Vec<VariantSpec>) -> Result<Self> {
        if switch_dim < 2 || output_dim < 2 {
            return Err(Error::InvalidParameter("switch and output dims must be >= 2".into()));
        }
        if variants.is_empty() {
            return Err(Error::InvalidParameter("computer needs at least one variant".into()));
        }
        for v in &variants {
            if v.off.iter().any(|&i| i >= switch_dim) {
                return Err(Error::InvalidParameter("off index out of switch range".into()));
            }
            if v.output_shift >= output_dim {
                return Err(Error::InvalidParameter("output shift out of range".into()));
            }
        }
        Ok(ComputerModel { switch_dim, output_dim, variants })
    }

    /// The standard computer: U_0 identity, U_1 C-NOT, shared off subspace {0}.
    pub fn standard() -> Self {
        ComputerModel {
            switch_dim: 2,
            output_dim: 2,
            variants: vec![
                VariantSpec { off: BTreeSet::from([0]), output_shift: 0 },
                VariantSpec { off: BTreeSet::from([0]), output_shift: 1 },
            ],
        }
    }

    /// K-arm interferometer family: U_r (r = 1..K-1) is off on {0, r}.
    /// Variant index v corresponds to U_{v+1}.
    pub fn karm_family(k: usize) -> Result<Self> {
        if k < 3 {
            return Err(Error::InvalidParameter("K-arm family needs K >= 3".into()));
        }
        let variants = (1..k)
            .map(|r| VariantSpec { off: BTreeSet::from([0, r]), output_shift: 1 })
            .collect();
        ComputerModel::new(k, 2, variants)
    }

    /// K+1-valued output family: U_r shifts the output register by r on the
    /// on-subspace (switch index 1..), shared off subspace {0}.
    pub fn shift_family(k: usize) -> Result<Self> {
        let variants = (0..=k)
            .map(|r| VariantSpec { off: BTreeSet::from([0]), output_shift: r })
            .collect();
        ComputerModel::new(2, k + 1, variants)
    }

    pub fn variant_count(&self) -> usize {
        self.variants.len()
    }

    /// True iff all variants share one off-subspace.
    pub fn common_off(&self) -> bool {
        self.variants.iter().all(|v| v.off == self.variants[0].off)
    }

    /// The (switch_dim·output_dim)-dimensional unitary U_r.
    pub fn build_u(&self, r: usize) -> Result<OperatorMatrix> {
        let v = self.variants.get(r).ok_or(Error::InvalidVariant(r))?;
        let d = self.switch_dim * self.output_dim;
        let mut entries = vec![Amp::new(0.0, 0.0); d * d];
        for i in 0..self.switch_dim {
            for j in 0..self.output_dim {
                let col = i * self.output_dim + j;
                let jj = if v.off.contains(&i) { j } else { (j + v.output_shift) % self.output_dim };
                entries[(i * self.output_dim + jj) * d + col] = Amp::new(1.0, 0.0);
            }
        }
        OperatorMatrix::new(d, entries)
    }

    /// Diagonal projector onto the off-subspace of variant r, on the switch
    /// factor alone.
    pub fn off_projector(&self, r: usize) -> Result<OperatorMatrix> {
        let v = self.variants.get(r).ok_or(Error::InvalidVariant(r))?;
        let idx: Vec<usize> = v.off.iter().copied().collect();
        Ok(OperatorMatrix::diagonal_projector(self.switch_dim, &idx))
    }

    /// On-subspace projector of variant r on the switch factor.
    pub fn on_projector(&self, r: usize) -> Result<OperatorMatrix> {
        let v = self.variants.get(r).ok_or(Error::InvalidVariant(r))?;
        let idx: Vec<usize> = (0..self.switch_dim).filter(|i| !v.off.contains(i)).collect();
        Ok(OperatorMatrix::diagonal_projector(self.switch_dim, &idx))
    }

    /// a/b/f/n labels per switch basis index. Defined for exactly two
    /// variants; larger families are refused rather than guessed at.
    pub fn signature(&self) -> Result<SubspaceSignature> {
        if self.variants.len() != 2 {
            return Err(Error::UnsupportedFamily(format!(
                "signature is defined for 2 variants, family has {}",
                self.variants.len()
            )));
        }
        let labels = (0..self.switch_dim)
            .map(|i| {
                let off0 = self.variants[0].off.contains(&i);
                let off1 = self.variants[1].off.contains(&i);
                match (off0, off1) {
                    (true, true) => SubspaceLabel::F,
                    (true, false) => SubspaceLabel::A,
                    (false, true) => SubspaceLabel::B,
                    (false, false) => SubspaceLabel::N,
                }
            })
            .collect();
        Ok(SubspaceSignature { labels })
    }
}

/// One labeled outcome subspace of a projective measurement.
#[derive(Debug, Clone, PartialEq)]
pub struct MeasurementOutcome {
    pub label: String,
    pub projector: OperatorMatrix,
}

/// A protocol step: unitary (a), measurement (b), or computer insertion (c).
#[derive(Debug, Clone, PartialEq)]
pub enum ProtocolStep {
    Unitary {
        targets: Vec<usize>,
        matrix: OperatorMatrix,
    },
    Measurement {
        targets: Vec<usize>,
        outcomes: Vec<MeasurementOutcome>,
        /// Outcome labels on which the branch takes no further steps.
        halt_on: Vec<String>,
    },
    Insertion {
        switch: usize,
        output: usize,
    },
}

/// Computational-basis measurement outcomes for the given subsystem dims,
/// labeled by concatenated digits ("0", "00", ...).
pub fn computational_outcomes(dims: &[usize]) -> Vec<MeasurementOutcome> {
    let total: usize = dims.iter().product();
    let layout_digits = |mut idx: usize| -> String {
        let mut parts = vec![0usize; dims.len()];
        for (slot, &d) in parts.iter_mut().zip(dims).rev() {
            *slot = idx % d;
            idx /= d;
        }
        parts.iter().map(|p| p.to_string()).collect()
    };
    (0..total)
        .map(|i| MeasurementOutcome {
            label: layout_digits(i),
            projector: OperatorMatrix::diagonal_projector(total, &[i]),
        })
        .collect()
}

/// A full protocol over a fixed row of subsystems, starting from |0…0⟩.
#[derive(Debug, Clone, PartialEq)]
pub struct Protocol {
    pub layout: SpaceLayout,
    pub computer: ComputerModel,
    pub steps: Vec<ProtocolStep>,
}

impl Protocol {
    pub fn new(layout: SpaceLayout, computer: ComputerModel, steps: Vec<ProtocolStep>) -> Result<Self> {
        let p = Protocol { layout, computer, steps };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        for (idx, v) in self.computer.variants.iter().enumerate() {
            let _ = v;
            self.computer.build_u(idx)?.check_unitary(ALG_TOL)?;
        }
        for (i, step) in self.steps.iter().enumerate() {
            match step {
                ProtocolStep::Unitary { targets, matrix } => {
                    self.check_targets(i, targets)?;
                    if matrix.dim() != self.layout.target_dim(targets) {
                        return Err(Error::InvalidProtocol(format!(
                            "step {i}: unitary dim {} vs target dim {}",
                            matrix.dim(),
                            self.layout.target_dim(targets)
                        )));
                    }
                    matrix.check_unitary(1e-9)?;
                }
                ProtocolStep::Measurement { targets, outcomes, halt_on } => {
                    self.check_targets(i, targets)?;
                    let d = self.layout.target_dim(targets);
                    if outcomes.is_empty() {
                        return Err(Error::InvalidProtocol(format!("step {i}: measurement with no outcomes")));
                    }
                    let mut sum = OperatorMatrix::new(d, vec![Complex64::new(0.0, 0.0); d * d])?;
                    for o in outcomes {
                        if o.projector.dim() != d {
                            return Err(Error::InvalidProtocol(format!(
                                "step {i}: outcome '{}' projector dim {} vs target dim {d}",
                                o.label,
                                o.projector.dim()
                            )));
                        }
                        o.projector.check_projector(1e-9)?;
                        sum = sum.matrix_add(&o.projector)?;
                    }
                    let dev = sum.max_entry_dev(&OperatorMatrix::identity(d));
                    if dev > 1e-9 {
                        return Err(Error::IncompleteMeasurement(dev));
                    }
                    let labels: Vec<&String> = outcomes.iter().map(|o| &o.label).collect();
                    for h in halt_on {
                        if !labels.contains(&h) {
                            return Err(Error::UnknownOutcome { step: i, label: h.clone() });
                        }
                    }
                }
                ProtocolStep::Insertion { switch, output } => {
                    self.check_targets(i, &[*switch, *output])?;
                    if self.layout.dims()[*switch] != self.computer.switch_dim {
                        return Err(Error::InvalidProtocol(format!(
                            "step {i}: insertion switch subsystem dim {} vs computer switch dim {}",
                            self.layout.dims()[*switch],
                            self.computer.switch_dim
                        )));
                    }
                    if self.layout.dims()[*output] != self.computer.output_dim {
                        return Err(Error::InvalidProtocol(format!(
                            "step {i}: insertion output subsystem dim {} vs computer output dim {}",
                            self.layout.dims()[*output],
                            self.computer.output_dim
                        )));
                    }
                }
            }
        }
        Ok(())
    }

    fn check_targets(&self, step: usize, targets: &[usize]) -> Result<()> {
        for (i, &t) in targets.iter().enumerate() {
            if t >= self.layout.subsystem_count() {
                return Err(Error::InvalidProtocol(format!(
                    "step {step}: target {t} out of range"
                )));
            }
            if targets[..i].contains(&t) {
                return Err(Error::RepeatedTarget(t));
            }
        }
        Ok(())
    }

    /// N, the number of computer insertions.
    pub fn insertion_count(&self) -> usize {
        self.steps
            .iter()
            .filter(|s| matches!(s, ProtocolStep::Insertion { .. }))
            .count()
    }

    pub fn measurement_steps(&self) -> Vec<usize> {
        self.steps
            .iter()
            .enumerate()
            .filter(|(_, s)| matches!(s, ProtocolStep::Measurement { .. }))
            .map(|(i, _)| i)
            .collect()
    }
}

/// Measurement deferral: each measurement becomes a unitary that entangles
/// its outcome with a fresh pointer register, and a single final measurement
/// reads all pointers at once.
///
/// The final outcome labels are the original outcome sequences (joined with
/// ','), truncated at the first halting outcome; pointer assignments that
/// extend a halted sequence are grouped into that sequence's outcome, so the
/// deferred distribution is directly comparable to the original one.
pub fn defer_measurements(p: &Protocol) -> Result<Protocol> {
    let measurement_indices = p.measurement_steps();
    if measurement_indices.is_empty() {
        return Ok(p.clone());
    }

    let base_subsystems = p.layout.subsystem_count();
    let mut dims = p.layout.dims().to_vec();
    // (outcome labels, halt labels, pointer dim) per original measurement
    let mut pointer_info: Vec<(Vec<String>, Vec<String>, usize)> = Vec::new();
    for &mi in &measurement_indices {
        if let ProtocolStep::Measurement { outcomes, halt_on, .. } = &p.steps[mi] {
            let labels: Vec<String> = outcomes.iter().map(|o| o.label.clone()).collect();
            let pdim = labels.len().max(2);
            dims.push(pdim);
            pointer_info.push((labels, halt_on.clone(), pdim));
        }
    }
    let layout = SpaceLayout::new(dims)?;

    let mut steps = Vec::with_capacity(p.steps.len() + 1);
    let mut pointer = 0usize;
    for step in &p.steps {
        match step {
            ProtocolStep::Measurement { targets, outcomes, .. } => {
                let pdim = pointer_info[pointer].2;
                let tdim = p.layout.target_dim(targets);
                // E = sum_j P_j ⊗ Shift^j on (targets, pointer)
                let mut ent = OperatorMatrix::new(
                    tdim * pdim,
                    vec![Amp::new(0.0, 0.0); tdim * pdim * tdim * pdim],
                )?;
                for (j, o) in outcomes.iter().enumerate() {
                    let shift = OperatorMatrix::cyclic_shift(pdim, j);
                    ent = ent.matrix_add(&o.projector.kron(&shift))?;
                }
                let mut t = targets.clone();
                t.push(base_subsystems + pointer);
                steps.push(ProtocolStep::Unitary { targets: t, matrix: ent });
                pointer += 1;
            }
            other => steps.push(other.clone()),
        }
    }

    // Final joint pointer measurement, outcomes grouped by truncated sequence.
    let pointer_targets: Vec<usize> =
        (base_subsystems..base_subsystems + pointer_info.len()).collect();
    let pointer_dims: Vec<usize> = pointer_info.iter().map(|pi| pi.2).collect();
    let total: usize = pointer_dims.iter().product();
    let mut groups: std::collections::BTreeMap<String, Vec<usize>> = Default::default();
    for idx in 0..total {
        let mut rem = idx;
        let mut digits = vec![0usize; pointer_dims.len()];
        for (slot, &d) in digits.iter_mut().zip(&pointer_dims).rev() {
            *slot = rem % d;
            rem /= d;
        }
        let mut parts: Vec<String> = Vec::new();
        let mut valid = true;
        for (digit, (labels, halts, _)) in digits.iter().zip(&pointer_info) {
            if *digit >= labels.len() {
                // unreachable pointer value (padding dim); keep it as its own
                // labeled bucket so the measurement still resolves identity
                valid = false;
                break;
            }
            let label = &labels[*digit];
            parts.push(label.clone());
            if halts.contains(label) {
                break;
            }
        }
        let key = if valid { parts.join(",") } else { format!("__unreachable_{idx}") };
        groups.entry(key).or_default().push(idx);
    }
    let outcomes = groups
        .into_iter()
        .map(|(label, indices)| MeasurementOutcome {
            label,
            projector: OperatorMatrix::diagonal_projector(total, &indices),
        })
        .collect();
    steps.push(ProtocolStep::Measurement {
        targets: pointer_targets,
        outcomes,
        halt_on: Vec::new(),
    });

    Protocol::new(layout, p.computer.clone(), steps)
}

/// Truncate an original outcome-label sequence at its first halting outcome
/// and join with ',' — the key space used by the deferred final measurement.
pub fn truncated_sequence_label(p: &Protocol, labels: &[String]) -> String {
    let mut parts: Vec<String> = Vec::new();
    for (&mi, label) in p.measurement_steps().iter().zip(labels) {
        parts.push(label.clone());
        if let ProtocolStep::Measurement { halt_on, .. } = &p.steps[mi] {
            if halt_on.contains(label) {
                break;
            }
        }
    }
    parts.join(",")
}
