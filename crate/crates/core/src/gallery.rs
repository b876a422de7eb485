//! Constructors for the concrete reference protocols: the two
//! qubit examples, the K-arm interferometer, and the simplex-basis
//! extension with a (K+1)-valued output register.


use crate::cf::{classify, ClassifyOptions};
use crate::error::{Error, Result};
use crate::history::{expand, ExpandOptions};
use crate::protocol::{
    computational_outcomes, ComputerModel, MeasurementOutcome, Protocol, ProtocolStep,
};
use crate::tensor::{Amp, OperatorMatrix, SpaceLayout, StateVector};

/// Zeno-style protocol on switch ⊗ output: N rounds of rotate-by-theta,
/// insert, measure-output (halting on '1'); the final round's output check
/// is folded into the closing two-qubit measurement.
///
/// `theta` defaults to π/2N.
pub fn example1(n: usize, theta: Option<f64>) -> Result<Protocol> {
    if n < 1 {
        return Err(Error::InvalidParameter("example1 needs N >= 1".into()));
    }
    let theta = theta.unwrap_or(std::f64::consts::FRAC_PI_2 / n as f64);
    if !(0.0..=std::f64::consts::FRAC_PI_2).contains(&theta) || theta <= 0.0 {
        return Err(Error::InvalidParameter(format!("theta {theta} outside (0, pi/2]")));
    }
    let layout = SpaceLayout::new(vec![2, 2])?;
    let mut steps = Vec::with_capacity(3 * n);
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
    steps.push(ProtocolStep::Measurement {
        targets: vec![0, 1],
        outcomes: computational_outcomes(&[2, 2]),
        halt_on: vec![],
    });
    Protocol::new(layout, ComputerModel::standard(), steps)
}

/// The N=1 variant with an extra final switch rotation that saturates the
/// single-type bound. The rotation angle is found numerically: bisection
/// on the signed all-history amplitude of outcome ('0','00') under U_0, so
/// condition (2) holds to machine precision and p_1 saturates 1/4.
///
/// Returns the protocol together with the rotation angle used.
pub fn example1_saturating(theta: Option<f64>) -> Result<(Protocol, f64)> {
    let theta = theta.unwrap_or(std::f64::consts::FRAC_PI_4);
    let build = |phi: f64| -> Result<Protocol> {
        let layout = SpaceLayout::new(vec![2, 2])?;
        let steps = vec![
            ProtocolStep::Unitary { targets: vec![0], matrix: OperatorMatrix::rotation(theta) },
            ProtocolStep::Insertion { switch: 0, output: 1 },
            ProtocolStep::Measurement {
                targets: vec![1],
                outcomes: computational_outcomes(&[2]),
                halt_on: vec!["1".into()],
            },
            ProtocolStep::Unitary { targets: vec![0], matrix: OperatorMatrix::rotation(phi) },
            ProtocolStep::Measurement {
                targets: vec![0, 1],
                outcomes: computational_outcomes(&[2, 2]),
                halt_on: vec![],
            },
        ];
        Protocol::new(layout, ComputerModel::standard(), steps)
    };
    // signed coherent amplitude of |00> for m = ('0','00') under U_0
    let m = vec![(2usize, "0".to_string()), (4usize, "00".to_string())];
    let signed_amp = |phi: f64| -> Result<f64> {
        let p = build(phi)?;
        let tree = expand(&p, 0, ExpandOptions::default())?;
        let mut acc = StateVector::zero(p.layout.clone());
        for h in tree.leaves_with_record(&m) {
            acc = acc.add(&h.terminal)?;
        }
        Ok(acc.amp(&[0, 0]).re)
    };
    let (mut lo, mut hi) = (0.0f64, std::f64::consts::FRAC_PI_2);
    let (f_lo, f_hi) = (signed_amp(lo)?, signed_amp(hi)?);
    if f_lo * f_hi > 0.0 {
        return Err(Error::InvalidParameter("no sign change for saturating rotation".into()));
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        let f_mid = signed_amp(mid)?;
        if f_mid == 0.0 {
            lo = mid;
            hi = mid;
            break;
        }
        if f_lo * f_mid < 0.0 {
            hi = mid;
        } else {
            lo = mid;
        }
        if hi - lo < 1e-15 {
            break;
        }
    }
    let phi = 0.5 * (lo + hi);
    Ok((build(phi)?, phi))
}

/// The optimal rotation angle for Example 2: c² = 2 − √2.
pub fn example2_optimal_theta() -> f64 {
    (2.0 - std::f64::consts::SQRT_2).sqrt().acos()
}

/// The eight-vector measurement basis of Example 2 at rotation angle theta,
/// as flat amplitude vectors over |switch, output, ancilla⟩.
pub fn example2_x_basis(theta: f64) -> Vec<(String, Vec<Amp>)> {
    let (s, c) = theta.sin_cos();
    let t = 1.0 / (1.0 + s * s).sqrt();
    let u = 1.0 / (2.0 + 2.0 * s * s).sqrt();
    let re = |x: f64| Amp::new(x, 0.0);
    // basis order |switch output ancilla>: index = 4*switch + 2*output + ancilla
    let mut vecs = vec![vec![re(0.0); 8]; 8];
    // x1 = t(s|000> - c|100> + s|001>)
    vecs[0][0b000] = re(t * s);
    vecs[0][0b100] = re(-t * c);
    vecs[0][0b001] = re(t * s);
    // x2 = t(s|000> - c|110> - s|001>)
    vecs[1][0b000] = re(t * s);
    vecs[1][0b110] = re(-t * c);
    vecs[1][0b001] = re(-t * s);
    // x3 = u(c|000> + 2s|100> + c|001>)
    vecs[2][0b000] = re(u * c);
    vecs[2][0b100] = re(u * 2.0 * s);
    vecs[2][0b001] = re(u * c);
    // x4 = u(c|000> + 2s|110> - c|001>)
    vecs[3][0b000] = re(u * c);
    vecs[3][0b110] = re(u * 2.0 * s);
    vecs[3][0b001] = re(-u * c);
    // x5..x8 are computational
    vecs[4][0b010] = re(1.0);
    vecs[5][0b101] = re(1.0);
    vecs[6][0b011] = re(1.0);
    vecs[7][0b111] = re(1.0);
    vecs.into_iter()
        .enumerate()
        .map(|(i, v)| (format!("x{}", i + 1), v))
        .collect()
}

/// Example 2: one insertion, then a measurement of all three qubits in
/// the x-basis. Both CF outcome types occur.
pub fn example2(theta: f64) -> Result<Protocol> {
    if !(0.0..std::f64::consts::FRAC_PI_2).contains(&theta) || theta <= 0.0 {
        return Err(Error::InvalidParameter(format!("theta {theta} outside (0, pi/2)")));
    }
    let layout = SpaceLayout::new(vec![2, 2, 2])?;
    let outcomes = example2_x_basis(theta)
        .into_iter()
        .map(|(label, v)| MeasurementOutcome {
            label,
            projector: OperatorMatrix::rank_one_projector(&v),
        })
        .collect();
    let steps = vec![
        ProtocolStep::Unitary { targets: vec![0], matrix: OperatorMatrix::rotation(theta) },
        ProtocolStep::Insertion { switch: 0, output: 1 },
        ProtocolStep::Measurement { targets: vec![0, 1, 2], outcomes, halt_on: vec![] },
    ];
    Protocol::new(layout, ComputerModel::standard(), steps)
}

/// The rotation R on a K-dimensional switch.
#[allow(clippy::needless_range_loop)] // row/column index math mirrors the matrix definition
pub fn karm_r_matrix(k: usize, b: f64) -> Result<OperatorMatrix> {
    if k < 3 {
        return Err(Error::InvalidParameter("K-arm rotation needs K >= 3".into()));
    }
    let a2 = 1.0 - (k as f64 - 1.0) * b * b;
    if b <= 0.0 || a2 <= 0.0 {
        return Err(Error::InvalidParameter(format!("(K-1)b^2 = {} >= 1", 1.0 - a2)));
    }
    let a = a2.sqrt();
    let mut rows = vec![vec![Amp::new(0.0, 0.0); k]; k];
    // column 0: a|0> + b * sum_i |i>
    rows[0][0] = Amp::new(a, 0.0);
    for i in 1..k {
        rows[i][0] = Amp::new(b, 0.0);
    }
    // column j (j != 0): -b|0> + |j> + (a-1)/(K-1) * sum_i |i>
    let shear = (a - 1.0) / (k as f64 - 1.0);
    for j in 1..k {
        rows[0][j] = Amp::new(-b, 0.0);
        for i in 1..k {
            rows[i][j] = Amp::new(shear + if i == j { 1.0 } else { 0.0 }, 0.0);
        }
    }
    OperatorMatrix::from_rows(&rows)
}

/// The default step count, π/2b rounded.
pub fn karm_default_steps(b: f64) -> usize {
    (std::f64::consts::FRAC_PI_2 / b).round().max(1.0) as usize
}

/// K-arm interferometer protocol: `steps` rounds of rotate-insert-check,
/// then a computational measurement of the switch. Variant index v of the
/// resulting computer family corresponds to U_{v+1}.
pub fn karm(k: usize, b: f64, steps: Option<usize>) -> Result<Protocol> {
    let r = karm_r_matrix(k, b)?;
    let rounds = steps.unwrap_or_else(|| karm_default_steps(b));
    let layout = SpaceLayout::new(vec![k, 2])?;
    let mut step_list = Vec::with_capacity(3 * rounds + 1);
    for _ in 0..rounds {
        step_list.push(ProtocolStep::Unitary { targets: vec![0], matrix: r.clone() });
        step_list.push(ProtocolStep::Insertion { switch: 0, output: 1 });
        step_list.push(ProtocolStep::Measurement {
            targets: vec![1],
            outcomes: computational_outcomes(&[2]),
            halt_on: vec!["1".into()],
        });
    }
    step_list.push(ProtocolStep::Measurement {
        targets: vec![0],
        outcomes: computational_outcomes(&[k]),
        halt_on: vec![],
    });
    Protocol::new(layout, ComputerModel::karm_family(k)?, step_list)
}

/// Scan step counts around π/2b and return (argmax steps, its p values);
/// the true optimum is b- and K-dependent.
pub fn karm_optimize_steps(k: usize, b: f64, opts: &ClassifyOptions) -> Result<(usize, Vec<f64>)> {
    let base = karm_default_steps(b);
    let lo = base.saturating_sub(10).max(1);
    let hi = base + 10;
    let mut best: Option<(usize, Vec<f64>)> = None;
    for steps in lo..=hi {
        let report = classify(&karm(k, b, Some(steps))?, opts)?;
        let better = match &best {
            None => true,
            Some((_, p)) => report.p[0] > p[0],
        };
        if better {
            best = Some((steps, report.p.clone()));
        }
    }
    Ok(best.expect("nonempty scan range"))
}

/// Barycenter-to-vertex vectors of a regular K-simplex: K+1 vectors with
/// coordinates in R^K satisfying ⟨y_i|y_j⟩ = −1 (i ≠ j) and |y_i|² = K.
pub fn simplex_y_vectors(k: usize) -> Vec<Vec<f64>> {
    // vertices sqrt(K+1) * (e_i - centroid) in R^{K+1} live in the
    // hyperplane orthogonal to (1,...,1); express them in an orthonormal
    // basis of that hyperplane to get K coordinates.
    let n = k + 1;
    let scale = ((k + 1) as f64).sqrt();
    let verts: Vec<Vec<f64>> = (0..n)
        .map(|i| {
            (0..n)
                .map(|j| scale * (if i == j { 1.0 } else { 0.0 } - 1.0 / n as f64))
                .collect()
        })
        .collect();
    // orthonormal basis of the hyperplane from differences e_j - e_{j+1}
    let seeds: Vec<Vec<Amp>> = (0..k)
        .map(|j| {
            (0..n)
                .map(|i| {
                    let v = if i == j { 1.0 } else if i == j + 1 { -1.0 } else { 0.0 };
                    Amp::new(v, 0.0)
                })
                .collect()
        })
        .collect();
    let basis = crate::tensor::orthonormalize(&seeds, 1e-12);
    verts
        .iter()
        .map(|v| {
            basis
                .iter()
                .map(|q| q.iter().zip(v).map(|(qi, vi)| qi.re * vi).sum())
                .collect()
        })
        .collect()
}

/// The simplex measurement vectors v_r over
/// |switch, output, ancilla qubits⟩, with the y_r embedded along the first
/// K computational directions of the ancilla after |0…0⟩.
pub fn simplex_v_vectors(k: usize, theta: f64) -> Vec<Vec<Amp>> {
    let (s, c) = theta.sin_cos();
    let t = 1.0 / (1.0 + k as f64 * s * s).sqrt();
    let ys = simplex_y_vectors(k);
    let out_dim = k + 1;
    let anc_dim = 1usize << k;
    let total = 2 * out_dim * anc_dim;
    let idx = |sw: usize, out: usize, anc: usize| (sw * out_dim + out) * anc_dim + anc;
    ys.iter()
        .enumerate()
        .map(|(r, y)| {
            let mut v = vec![Amp::new(0.0, 0.0); total];
            v[idx(0, 0, 0)] = Amp::new(t * s, 0.0);
            v[idx(1, r, 0)] = Amp::new(-t * c, 0.0);
            for (j, &yj) in y.iter().enumerate() {
                v[idx(0, 0, j + 1)] += Amp::new(t * s * yj, 0.0);
            }
            v
        })
        .collect()
}

/// Simplex-basis protocol: rotate, insert the (K+1)-variant computer,
/// then measure in a basis containing the v_r; the orthogonal complement is
/// read out as a single residual outcome.
pub fn simplex_extension(k: usize, theta: f64) -> Result<Protocol> {
    if k < 2 {
        return Err(Error::InvalidParameter("simplex extension needs K >= 2".into()));
    }
    if !(0.0..std::f64::consts::FRAC_PI_2).contains(&theta) || theta <= 0.0 {
        return Err(Error::InvalidParameter(format!("theta {theta} outside (0, pi/2)")));
    }
    let mut dims = vec![2, k + 1];
    dims.extend(std::iter::repeat_n(2, k));
    let layout = SpaceLayout::new(dims)?;
    let vs = simplex_v_vectors(k, theta);
    let total = layout.total_dim();
    let mut rest = OperatorMatrix::identity(total);
    let mut outcomes = Vec::with_capacity(k + 2);
    for (r, v) in vs.iter().enumerate() {
        let proj = OperatorMatrix::rank_one_projector(v);
        rest = rest.matrix_add(&proj.scaled(Amp::new(-1.0, 0.0)))?;
        outcomes.push(MeasurementOutcome { label: format!("v{r}"), projector: proj });
    }
    rest.check_projector(1e-9).map_err(|_| {
        Error::InvalidParameter("degenerate theta: residual subspace is not a projector".into())
    })?;
    outcomes.push(MeasurementOutcome { label: "rest".into(), projector: rest });
    let targets: Vec<usize> = (0..layout.subsystem_count()).collect();
    let steps = vec![
        ProtocolStep::Unitary { targets: vec![0], matrix: OperatorMatrix::rotation(theta) },
        ProtocolStep::Insertion { switch: 0, output: 1 },
        ProtocolStep::Measurement { targets, outcomes, halt_on: vec![] },
    ];
    Protocol::new(layout, ComputerModel::shift_family(k)?, steps)
}

/// Bayes update after seeing outcome v_s: posterior over r proportional to
/// prior_r times the likelihood of v_s under U_r.
pub fn posterior_update(
    p: &Protocol,
    priors: &[f64],
    observed: usize,
    opts: &ClassifyOptions,
) -> Result<Vec<f64>> {
    let variants = p.computer.variant_count();
    if priors.len() != variants {
        return Err(Error::InvalidParameter(format!(
            "prior vector length {} vs {} variants",
            priors.len(),
            variants
        )));
    }
    let total: f64 = priors.iter().sum();
    if (total - 1.0).abs() > 1e-9 || priors.iter().any(|&q| q < 0.0) {
        return Err(Error::InvalidParameter("priors must be a probability vector".into()));
    }
    let measurement_step = *p
        .measurement_steps()
        .last()
        .ok_or_else(|| Error::InvalidProtocol("protocol has no measurement".into()))?;
    let m = vec![(measurement_step, format!("v{observed}"))];
    let mut weights = Vec::with_capacity(variants);
    #[allow(clippy::needless_range_loop)]
    for r in 0..variants {
        let tree = expand(p, r, opts.expand)?;
        let mut likelihood = tree.outcome_probability(&m)?;
        if likelihood < opts.zero_tol {
            likelihood = 0.0;
        }
        weights.push(priors[r] * likelihood);
    }
    let z: f64 = weights.iter().sum();
    if z <= 0.0 {
        return Err(Error::InvalidParameter(
            "all-zero likelihood: outcome impossible under every prior-supported variant".into(),
        ));
    }
    Ok(weights.into_iter().map(|w| w / z).collect())
}

/// A named, parameterized gallery entry addressable from the CLI.
pub struct GalleryEntry {
    pub name: &'static str,
    /// (parameter name, default value)
    pub params: &'static [(&'static str, f64)],
    pub build: fn(&std::collections::BTreeMap<String, f64>) -> Result<Protocol>,
}

fn get(params: &std::collections::BTreeMap<String, f64>, key: &str, default: f64) -> f64 {
    params.get(key).copied().unwrap_or(default)
}

pub fn gallery_entries() -> Vec<GalleryEntry> {
    vec![
        GalleryEntry {
            name: "example1",
            params: &[("N", 2.0), ("theta", f64::NAN)],
            build: |p| {
                let n = get(p, "N", 2.0) as usize;
                let theta = p.get("theta").copied().filter(|t| t.is_finite());
                example1(n, theta)
            },
        },
        GalleryEntry {
            name: "example1-saturating",
            params: &[("theta", std::f64::consts::FRAC_PI_4)],
            build: |p| {
                let theta = p.get("theta").copied();
                example1_saturating(theta).map(|(proto, _)| proto)
            },
        },
        GalleryEntry {
            name: "example2",
            params: &[("theta", f64::NAN)],
            build: |p| {
                let theta = p
                    .get("theta")
                    .copied()
                    .filter(|t| t.is_finite())
                    .unwrap_or_else(example2_optimal_theta);
                example2(theta)
            },
        },
        GalleryEntry {
            name: "karm",
            params: &[("K", 3.0), ("b", 0.1), ("steps", f64::NAN)],
            build: |p| {
                let k = get(p, "K", 3.0) as usize;
                let b = get(p, "b", 0.1);
                let steps = p.get("steps").copied().filter(|s| s.is_finite()).map(|s| s as usize);
                karm(k, b, steps)
            },
        },
        GalleryEntry {
            name: "simplex",
            params: &[("K", 2.0), ("theta", 0.6)],
            build: |p| {
                let k = get(p, "K", 2.0) as usize;
                simplex_extension(k, get(p, "theta", 0.6))
            },
        },
    ]
}

/// Build a gallery protocol by name with parameter overrides.
pub fn build_gallery(
    name: &str,
    params: &std::collections::BTreeMap<String, f64>,
) -> Result<Protocol> {
    let entries = gallery_entries();
    let entry = entries
        .iter()
        .find(|e| e.name == name)
        .ok_or_else(|| Error::InvalidParameter(format!("unknown gallery entry '{name}'")))?;
    (entry.build)(params)
}
