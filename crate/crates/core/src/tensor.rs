//! Dense complex linear algebra over labeled tensor-product spaces.
//!
//! States are stored basis-ordered with the leftmost subsystem most
//! significant, so amplitude indices read directly as kets |s, o, ...⟩.
//! All vectors produced inside a protocol run are un-normalized branch
//! components; nothing here renormalizes.

use num_complex::Complex64;

use crate::error::{Error, Result};

/// Complex amplitude.
pub type Amp = Complex64;

/// Default tolerance for algebraic identities (unitarity, projector checks).
pub const ALG_TOL: f64 = 1e-12;
/// Default tolerance for logical "is this probability zero" tests.
pub const ZERO_TOL: f64 = 1e-9;

/// Ordered subsystem dimensions of a tensor-product space.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SpaceLayout {
    dims: std::sync::Arc<[usize]>,
}

impl SpaceLayout {
    pub fn new(dims: Vec<usize>) -> Result<Self> {
        if dims.is_empty() {
            return Err(Error::InvalidLayout("layout needs at least one subsystem".into()));
        }
        if let Some(&d) = dims.iter().find(|&&d| d < 2) {
            return Err(Error::InvalidLayout(format!("subsystem dimension {d} < 2")));
        }
        Ok(SpaceLayout { dims: dims.into() })
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    pub fn subsystem_count(&self) -> usize {
        self.dims.len()
    }

    pub fn total_dim(&self) -> usize {
        self.dims.iter().product()
    }

    /// Mixed-radix digits of a flat basis index, leftmost subsystem first.
    pub fn digits(&self, mut index: usize) -> Vec<usize> {
        let mut out = vec![0; self.dims.len()];
        for (slot, &d) in out.iter_mut().zip(self.dims.iter()).rev() {
            *slot = index % d;
            index /= d;
        }
        out
    }

    /// Flat basis index from mixed-radix digits.
    pub fn index(&self, digits: &[usize]) -> usize {
        debug_assert_eq!(digits.len(), self.dims.len());
        digits
            .iter()
            .zip(self.dims.iter())
            .fold(0, |acc, (&g, &d)| acc * d + g)
    }

    fn check_targets(&self, targets: &[usize]) -> Result<()> {
        for (i, &t) in targets.iter().enumerate() {
            if t >= self.dims.len() {
                return Err(Error::TargetOutOfRange { index: t, count: self.dims.len() });
            }
            if targets[..i].contains(&t) {
                return Err(Error::RepeatedTarget(t));
            }
        }
        Ok(())
    }

    /// Combined dimension of the listed target subsystems.
    pub fn target_dim(&self, targets: &[usize]) -> usize {
        targets.iter().map(|&t| self.dims[t]).product()
    }
}

/// Un-normalized state vector over a [`SpaceLayout`].
#[derive(Debug, Clone, PartialEq)]
pub struct StateVector {
    layout: SpaceLayout,
    amps: Vec<Amp>,
}

impl StateVector {
    pub fn new(layout: SpaceLayout, amps: Vec<Amp>) -> Result<Self> {
        if amps.len() != layout.total_dim() {
            return Err(Error::DimensionMismatch(format!(
                "amplitude vector has length {}, layout dimension is {}",
                amps.len(),
                layout.total_dim()
            )));
        }
        Ok(StateVector { layout, amps })
    }

    pub fn zero(layout: SpaceLayout) -> Self {
        let n = layout.total_dim();
        StateVector { layout, amps: vec![Amp::new(0.0, 0.0); n] }
    }

    /// Computational basis state |digits⟩.
    pub fn basis(layout: SpaceLayout, digits: &[usize]) -> Self {
        let idx = layout.index(digits);
        let mut s = StateVector::zero(layout);
        s.amps[idx] = Amp::new(1.0, 0.0);
        s
    }

    /// The all-zeros ket |0…0⟩.
    pub fn ground(layout: SpaceLayout) -> Self {
        let digits = vec![0; layout.subsystem_count()];
        StateVector::basis(layout, &digits)
    }

    pub fn layout(&self) -> &SpaceLayout {
        &self.layout
    }

    pub fn amps(&self) -> &[Amp] {
        &self.amps
    }

    pub fn amp(&self, digits: &[usize]) -> Amp {
        self.amps[self.layout.index(digits)]
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amps.iter().map(|a| a.norm_sqr()).sum()
    }

    /// ⟨self|other⟩ (conjugate-linear in self).
    pub fn inner(&self, other: &StateVector) -> Result<Amp> {
        if self.layout != other.layout {
            return Err(Error::DimensionMismatch("inner product across mismatched layouts".into()));
        }
        Ok(self
            .amps
            .iter()
            .zip(&other.amps)
            .map(|(a, b)| a.conj() * b)
            .sum())
    }

    pub fn add(&self, other: &StateVector) -> Result<StateVector> {
        if self.layout != other.layout {
            return Err(Error::DimensionMismatch("sum across mismatched layouts".into()));
        }
        let amps = self.amps.iter().zip(&other.amps).map(|(a, b)| a + b).collect();
        Ok(StateVector { layout: self.layout.clone(), amps })
    }

    /// In-place sum; avoids reallocation when accumulating many branches.
    /// Element-wise sum from a raw amplitude slice of matching length.
    pub(crate) fn accumulate_slice(&mut self, amps: &[Amp]) -> Result<()> {
        if self.amps.len() != amps.len() {
            return Err(Error::DimensionMismatch("sum across mismatched lengths".into()));
        }
        for (a, b) in self.amps.iter_mut().zip(amps) {
            *a += b;
        }
        Ok(())
    }

    pub fn accumulate(&mut self, other: &StateVector) -> Result<()> {
        if self.layout != other.layout {
            return Err(Error::DimensionMismatch("sum across mismatched layouts".into()));
        }
        for (a, b) in self.amps.iter_mut().zip(&other.amps) {
            *a += b;
        }
        Ok(())
    }

    pub fn scale(&self, factor: Amp) -> StateVector {
        let amps = self.amps.iter().map(|a| a * factor).collect();
        StateVector { layout: self.layout.clone(), amps }
    }

    pub fn is_finite(&self) -> bool {
        self.amps.iter().all(|a| a.re.is_finite() && a.im.is_finite())
    }

    /// Max |self_i − other_i| over components.
    pub fn max_dev(&self, other: &StateVector) -> f64 {
        self.amps
            .iter()
            .zip(&other.amps)
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max)
    }
}

/// Dense square complex matrix acting on one or more subsystems.
#[derive(Debug, Clone, PartialEq)]
pub struct OperatorMatrix {
    dim: usize,
    // row-major
    entries: Vec<Amp>,
}

impl OperatorMatrix {
    pub fn new(dim: usize, entries: Vec<Amp>) -> Result<Self> {
        if entries.len() != dim * dim {
            return Err(Error::DimensionMismatch(format!(
                "matrix of dim {dim} needs {} entries, got {}",
                dim * dim,
                entries.len()
            )));
        }
        Ok(OperatorMatrix { dim, entries })
    }

    pub fn from_rows(rows: &[Vec<Amp>]) -> Result<Self> {
        let dim = rows.len();
        let mut entries = Vec::with_capacity(dim * dim);
        for row in rows {
            if row.len() != dim {
                return Err(Error::DimensionMismatch("non-square matrix rows".into()));
            }
            entries.extend_from_slice(row);
        }
        OperatorMatrix::new(dim, entries)
    }

    pub fn identity(dim: usize) -> Self {
        let mut entries = vec![Amp::new(0.0, 0.0); dim * dim];
        for i in 0..dim {
            entries[i * dim + i] = Amp::new(1.0, 0.0);
        }
        OperatorMatrix { dim, entries }
    }

    /// Real rotation by `theta` on a qubit: |0⟩ ↦ cosθ|0⟩ + sinθ|1⟩.
    pub fn rotation(theta: f64) -> Self {
        let (s, c) = theta.sin_cos();
        OperatorMatrix {
            dim: 2,
            entries: vec![
                Amp::new(c, 0.0),
                Amp::new(-s, 0.0),
                Amp::new(s, 0.0),
                Amp::new(c, 0.0),
            ],
        }
    }

    /// C-NOT with the first factor as control.
    pub fn cnot() -> Self {
        let mut m = OperatorMatrix::identity(4);
        m.entries[2 * 4 + 2] = Amp::new(0.0, 0.0);
        m.entries[2 * 4 + 3] = Amp::new(1.0, 0.0);
        m.entries[3 * 4 + 3] = Amp::new(0.0, 0.0);
        m.entries[3 * 4 + 2] = Amp::new(1.0, 0.0);
        m
    }

    /// Cyclic shift by `amount` on a dim-`dim` register: |j⟩ ↦ |j+amount mod dim⟩.
    pub fn cyclic_shift(dim: usize, amount: usize) -> Self {
        let mut entries = vec![Amp::new(0.0, 0.0); dim * dim];
        for j in 0..dim {
            entries[((j + amount) % dim) * dim + j] = Amp::new(1.0, 0.0);
        }
        OperatorMatrix { dim, entries }
    }

    /// Diagonal projector with ones at `indices`.
    pub fn diagonal_projector(dim: usize, indices: &[usize]) -> Self {
        let mut entries = vec![Amp::new(0.0, 0.0); dim * dim];
        for &i in indices {
            entries[i * dim + i] = Amp::new(1.0, 0.0);
        }
        OperatorMatrix { dim, entries }
    }

    /// Rank-one projector |v⟩⟨v| of a unit vector.
    pub fn rank_one_projector(v: &[Amp]) -> Self {
        let dim = v.len();
        let mut entries = vec![Amp::new(0.0, 0.0); dim * dim];
        for (i, a) in v.iter().enumerate() {
            for (j, b) in v.iter().enumerate() {
                entries[i * dim + j] = a * b.conj();
            }
        }
        OperatorMatrix { dim, entries }
    }

    /// Projector onto the span of the given (orthonormal) vectors.
    pub fn span_projector(vectors: &[Vec<Amp>]) -> Result<Self> {
        let dim = vectors
            .first()
            .map(|v| v.len())
            .ok_or_else(|| Error::DimensionMismatch("span of no vectors".into()))?;
        let mut acc = OperatorMatrix::new(dim, vec![Amp::new(0.0, 0.0); dim * dim])?;
        for v in vectors {
            if v.len() != dim {
                return Err(Error::DimensionMismatch("span vectors of mixed length".into()));
            }
            acc = acc.matrix_add(&OperatorMatrix::rank_one_projector(v))?;
        }
        Ok(acc)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn entry(&self, row: usize, col: usize) -> Amp {
        self.entries[row * self.dim + col]
    }

    pub fn entries(&self) -> &[Amp] {
        &self.entries
    }

    pub fn scaled(&self, factor: Amp) -> OperatorMatrix {
        let entries = self.entries.iter().map(|a| a * factor).collect();
        OperatorMatrix { dim: self.dim, entries }
    }

    pub fn dagger(&self) -> OperatorMatrix {
        let mut entries = vec![Amp::new(0.0, 0.0); self.dim * self.dim];
        for i in 0..self.dim {
            for j in 0..self.dim {
                entries[j * self.dim + i] = self.entry(i, j).conj();
            }
        }
        OperatorMatrix { dim: self.dim, entries }
    }

    pub fn matmul(&self, other: &OperatorMatrix) -> Result<OperatorMatrix> {
        if self.dim != other.dim {
            return Err(Error::DimensionMismatch("matrix product across dims".into()));
        }
        let d = self.dim;
        let mut entries = vec![Amp::new(0.0, 0.0); d * d];
        for i in 0..d {
            for k in 0..d {
                let a = self.entry(i, k);
                if a.norm_sqr() == 0.0 {
                    continue;
                }
                for j in 0..d {
                    entries[i * d + j] += a * other.entry(k, j);
                }
            }
        }
        Ok(OperatorMatrix { dim: d, entries })
    }

    pub fn matrix_add(&self, other: &OperatorMatrix) -> Result<OperatorMatrix> {
        if self.dim != other.dim {
            return Err(Error::DimensionMismatch("matrix sum across dims".into()));
        }
        let entries = self
            .entries
            .iter()
            .zip(&other.entries)
            .map(|(a, b)| a + b)
            .collect();
        Ok(OperatorMatrix { dim: self.dim, entries })
    }

    pub fn kron(&self, other: &OperatorMatrix) -> OperatorMatrix {
        let d = self.dim * other.dim;
        let mut entries = vec![Amp::new(0.0, 0.0); d * d];
        for i1 in 0..self.dim {
            for j1 in 0..self.dim {
                let a = self.entry(i1, j1);
                if a.norm_sqr() == 0.0 {
                    continue;
                }
                for i2 in 0..other.dim {
                    for j2 in 0..other.dim {
                        entries[(i1 * other.dim + i2) * d + j1 * other.dim + j2] =
                            a * other.entry(i2, j2);
                    }
                }
            }
        }
        OperatorMatrix { dim: d, entries }
    }

    /// Max |(U†U − I)_{ij}|.
    pub fn unitarity_deviation(&self) -> f64 {
        let prod = self.dagger().matmul(self).expect("same dim");
        let mut dev = 0.0f64;
        for i in 0..self.dim {
            for j in 0..self.dim {
                let expect = if i == j { Amp::new(1.0, 0.0) } else { Amp::new(0.0, 0.0) };
                dev = dev.max((prod.entry(i, j) - expect).norm());
            }
        }
        dev
    }

    pub fn check_unitary(&self, tol: f64) -> Result<()> {
        let deviation = self.unitarity_deviation();
        if deviation > tol {
            return Err(Error::NotUnitary { deviation, tol });
        }
        Ok(())
    }

    /// Max deviation of P² = P and P† = P.
    pub fn projector_deviation(&self) -> f64 {
        let sq = self.matmul(self).expect("same dim");
        let dag = self.dagger();
        let mut dev = 0.0f64;
        for i in 0..self.dim * self.dim {
            dev = dev.max((sq.entries[i] - self.entries[i]).norm());
            dev = dev.max((dag.entries[i] - self.entries[i]).norm());
        }
        dev
    }

    pub fn check_projector(&self, tol: f64) -> Result<()> {
        let deviation = self.projector_deviation();
        if deviation > tol {
            return Err(Error::NotProjector { deviation, tol });
        }
        Ok(())
    }

    pub fn max_entry_dev(&self, other: &OperatorMatrix) -> f64 {
        self.entries
            .iter()
            .zip(&other.entries)
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max)
    }
}

/// Apply `op` to the listed target subsystems of `state`, identity elsewhere.
pub fn apply_on_targets(
    op: &OperatorMatrix,
    targets: &[usize],
    state: &StateVector,
) -> Result<StateVector> {
    BoundOp::bind(op, targets, state.layout())?.apply(state)
}

/// An operator bound to fixed targets of a fixed layout, with the index
/// tables precomputed so repeated application allocates only the output.
#[derive(Debug, Clone)]
pub struct BoundOp {
    layout: SpaceLayout,
    op: OperatorMatrix,
    /// Combined target index of each full basis index.
    rows: Vec<u32>,
    /// Full basis index with the target digits cleared.
    bases: Vec<u32>,
    /// Flat-index offset contributed by each combined target index.
    col_offsets: Vec<u32>,
    /// Diagonal entries, when the operator is diagonal on the targets.
    diag: Option<Vec<Amp>>,
}

impl BoundOp {
    pub fn bind(op: &OperatorMatrix, targets: &[usize], layout: &SpaceLayout) -> Result<Self> {
        layout.check_targets(targets)?;
        let tdim = layout.target_dim(targets);
        if op.dim() != tdim {
            return Err(Error::DimensionMismatch(format!(
                "operator dim {} vs target dim {}",
                op.dim(),
                tdim
            )));
        }
        let total = layout.total_dim();
        let dims = layout.dims();
        // stride of each subsystem in the flat index (leftmost most significant)
        let mut strides = vec![1usize; dims.len()];
        for i in (0..dims.len().saturating_sub(1)).rev() {
            strides[i] = strides[i + 1] * dims[i + 1];
        }
        let tdims: Vec<usize> = targets.iter().map(|&t| dims[t]).collect();
        let tstrides: Vec<usize> = targets.iter().map(|&t| strides[t]).collect();
        let mut col_offsets = vec![0u32; tdim];
        for (col, slot) in col_offsets.iter_mut().enumerate() {
            let mut rem = col;
            for (&stride, &d) in tstrides.iter().zip(&tdims).rev() {
                *slot += ((rem % d) * stride) as u32;
                rem /= d;
            }
        }
        let mut rows = vec![0u32; total];
        let mut bases = vec![0u32; total];
        for full in 0..total {
            let mut row = 0usize;
            let mut base = full;
            for (&stride, &d) in tstrides.iter().zip(&tdims) {
                let digit = (full / stride) % d;
                row = row * d + digit;
                base -= digit * stride;
            }
            rows[full] = row as u32;
            bases[full] = base as u32;
        }
        let mut diag = Some(vec![Amp::new(0.0, 0.0); tdim]);
        'scan: for row in 0..tdim {
            for col in 0..tdim {
                let e = op.entry(row, col);
                if row == col {
                    diag.as_mut().unwrap()[row] = e;
                } else if e.norm_sqr() != 0.0 {
                    diag = None;
                    break 'scan;
                }
            }
        }
        Ok(BoundOp { layout: layout.clone(), op: op.clone(), rows, bases, col_offsets, diag })
    }

    /// Allocation-free core: writes the transformed amplitudes into `out`.
    /// Skips layout and finiteness validation; callers check at boundaries.
    pub(crate) fn apply_raw(&self, amps: &[Amp], out: &mut [Amp]) {
        if let Some(diag) = &self.diag {
            // diagonal on the targets: one multiply per flat index
            for (full, slot) in out.iter_mut().enumerate() {
                *slot = diag[self.rows[full] as usize] * amps[full];
            }
            return;
        }
        for (full, slot) in out.iter_mut().enumerate() {
            let row = self.rows[full] as usize;
            let base = self.bases[full] as usize;
            let mut acc = Amp::new(0.0, 0.0);
            for (col, &offset) in self.col_offsets.iter().enumerate() {
                let e = self.op.entry(row, col);
                if e.norm_sqr() == 0.0 {
                    continue;
                }
                acc += e * amps[base + offset as usize];
            }
            *slot = acc;
        }
    }

    pub fn apply(&self, state: &StateVector) -> Result<StateVector> {
        if state.layout() != &self.layout {
            return Err(Error::DimensionMismatch("state layout differs from bound layout".into()));
        }
        let mut out = vec![Amp::new(0.0, 0.0); state.amps().len()];
        self.apply_raw(state.amps(), &mut out);
        let result = StateVector::new(self.layout.clone(), out)?;
        if !result.is_finite() {
            return Err(Error::InvariantViolation("non-finite amplitude after apply".into()));
        }
        Ok(result)
    }
}

/// Project with `p` on the target subsystems; the result stays un-normalized.
pub fn project(p: &OperatorMatrix, targets: &[usize], state: &StateVector) -> Result<StateVector> {
    p.check_projector(ALG_TOL.max(1e-10))?;
    apply_on_targets(p, targets, state)
}

/// True iff the vectors form an orthonormal set within `tol`.
pub fn validate_basis(vectors: &[StateVector], tol: f64) -> Result<bool> {
    for v in vectors.iter().skip(1) {
        if v.layout() != vectors[0].layout() {
            return Err(Error::DimensionMismatch("basis vectors with mismatched layouts".into()));
        }
    }
    for (i, a) in vectors.iter().enumerate() {
        for (j, b) in vectors.iter().enumerate().skip(i) {
            let ip = a.inner(b)?;
            let expect = if i == j { 1.0 } else { 0.0 };
            if (ip - Amp::new(expect, 0.0)).norm() > tol {
                return Ok(false);
            }
        }
    }
    Ok(true)
}

/// Gram-Schmidt orthonormalization; drops vectors whose residual norm is
/// below `tol` and returns the surviving orthonormal set.
pub fn orthonormalize(vectors: &[Vec<Amp>], tol: f64) -> Vec<Vec<Amp>> {
    let mut basis: Vec<Vec<Amp>> = Vec::new();
    for v in vectors {
        let mut w = v.clone();
        // two passes of re-orthogonalization for numerical headroom
        for _ in 0..2 {
            for b in &basis {
                let ip: Amp = b.iter().zip(&w).map(|(x, y)| x.conj() * y).sum();
                for (wi, bi) in w.iter_mut().zip(b) {
                    *wi -= ip * bi;
                }
            }
        }
        let norm: f64 = w.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt();
        if norm > tol {
            for wi in &mut w {
                *wi /= Amp::new(norm, 0.0);
            }
            basis.push(w);
        }
    }
    basis
}

#[cfg(test)]
mod tests {
    use super::*;

    fn qubit2() -> SpaceLayout {
        SpaceLayout::new(vec![2, 2]).unwrap()
    }

    #[test]
    fn identity_leaves_state_unchanged() {
        let s = StateVector::basis(qubit2(), &[1, 0]);
        let out = apply_on_targets(&OperatorMatrix::identity(2), &[0], &s).unwrap();
        assert_eq!(out, s);
    }

    #[test]
    fn not_on_qubit0_permutes_basis() {
        let x = OperatorMatrix::cyclic_shift(2, 1);
        let s = StateVector::ground(qubit2());
        let out = apply_on_targets(&x, &[0], &s).unwrap();
        assert_eq!(out, StateVector::basis(qubit2(), &[1, 0]));
    }

    #[test]
    fn cnot_flips_target_when_control_set() {
        let s = StateVector::basis(qubit2(), &[1, 0]);
        let out = apply_on_targets(&OperatorMatrix::cnot(), &[0, 1], &s).unwrap();
        assert_eq!(out, StateVector::basis(qubit2(), &[1, 1]));
    }

    #[test]
    fn projector_keeps_and_kills() {
        let p0 = OperatorMatrix::diagonal_projector(2, &[0]);
        let p1 = OperatorMatrix::diagonal_projector(2, &[1]);
        let layout = SpaceLayout::new(vec![2]).unwrap();
        let zero = StateVector::basis(layout.clone(), &[0]);
        assert_eq!(project(&p0, &[0], &zero).unwrap(), zero);
        assert!(project(&p1, &[0], &zero).unwrap().norm_sqr() < 1e-30);
    }

    #[test]
    fn projector_orthogonal_decomposition() {
        // c|00> + s|11>, project |0><0| on qubit 1 -> c|00>
        let (c, s) = (0.6, 0.8);
        let layout = qubit2();
        let mut amps = vec![Amp::new(0.0, 0.0); 4];
        amps[0] = Amp::new(c, 0.0);
        amps[3] = Amp::new(s, 0.0);
        let st = StateVector::new(layout.clone(), amps).unwrap();
        let p0 = OperatorMatrix::diagonal_projector(2, &[0]);
        let out = project(&p0, &[1], &st).unwrap();
        let expect = StateVector::basis(layout, &[0, 0]).scale(Amp::new(c, 0.0));
        assert!(out.max_dev(&expect) < 1e-15);
    }

    #[test]
    fn non_projector_is_rejected() {
        let rot = OperatorMatrix::rotation(0.3);
        let s = StateVector::ground(SpaceLayout::new(vec![2]).unwrap());
        assert!(matches!(project(&rot, &[0], &s), Err(Error::NotProjector { .. })));
    }

    #[test]
    fn computational_basis_is_orthonormal() {
        let layout = SpaceLayout::new(vec![2]).unwrap();
        let b = vec![
            StateVector::basis(layout.clone(), &[0]),
            StateVector::basis(layout.clone(), &[1]),
        ];
        assert!(validate_basis(&b, 1e-12).unwrap());
        let dup = vec![b[0].clone(), b[0].clone()];
        assert!(!validate_basis(&dup, 1e-12).unwrap());
    }

    #[test]
    fn rotation_is_unitary() {
        OperatorMatrix::rotation(0.7).check_unitary(1e-12).unwrap();
    }

    #[test]
    fn mixed_dim_apply_targets_middle_subsystem() {
        let layout = SpaceLayout::new(vec![2, 3, 2]).unwrap();
        let shift = OperatorMatrix::cyclic_shift(3, 1);
        let s = StateVector::basis(layout.clone(), &[1, 2, 0]);
        let out = apply_on_targets(&shift, &[1], &s).unwrap();
        assert_eq!(out, StateVector::basis(layout, &[1, 0, 0]));
    }

    #[test]
    fn repeated_target_rejected() {
        let s = StateVector::ground(qubit2());
        let err = apply_on_targets(&OperatorMatrix::identity(4), &[0, 0], &s);
        assert!(matches!(err, Err(Error::RepeatedTarget(0))));
    }
}
