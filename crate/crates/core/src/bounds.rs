//! Executable forms of the protocol-family inequalities: the p_0 + p_1 bound, the
//! insertion-count lower bounds, the N=1 sharpenings, the minimization
//! inequality, and parameter sweeps demonstrating the asymptotic trends.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::cf::{classify, CFReport, ClassifyOptions};
use crate::error::{Error, Result};
use crate::protocol::{
    computational_outcomes, ComputerModel, Protocol, ProtocolStep,
};
use crate::tensor::{Amp, OperatorMatrix, SpaceLayout};

/// An evaluated inequality with its margin (rhs − lhs for ≤ checks).
#[derive(Debug, Clone)]
pub struct BoundCheck {
    pub name: String,
    pub lhs: f64,
    pub rhs: f64,
    pub margin: f64,
    pub passed: bool,
}

impl BoundCheck {
    fn le(name: impl Into<String>, lhs: f64, rhs: f64, tol: f64) -> Self {
        let margin = rhs - lhs;
        BoundCheck { name: name.into(), lhs, rhs, margin, passed: margin >= -tol }
    }
}

/// p_0 + p_1 ≤ 1. Only meaningful when all variants share one off-subspace;
/// it can fail otherwise, so that case is refused.
pub fn check_probability_sum_bound(report: &CFReport) -> Result<BoundCheck> {
    if !report.common_off {
        return Err(Error::UnsupportedFamily(
            "p_0 + p_1 <= 1 requires a common off-subspace; the bound fails otherwise".into(),
        ));
    }
    Ok(BoundCheck::le("probability_sum", report.p_sum(), 1.0, 1e-9))
}

/// The insertion-count lower bound: log₂((1−ε)/ε) for one CF outcome type,
/// log₂((1−ε)/(2ε)) when both occur.
pub fn n_lower_bound(epsilon: f64, both_types: bool) -> Result<f64> {
    if !(0.0..1.0).contains(&epsilon) || epsilon == 0.0 {
        return Err(Error::InvalidParameter(format!("epsilon {epsilon} outside (0, 1)")));
    }
    let ratio = if both_types {
        (1.0 - epsilon) / (2.0 * epsilon)
    } else {
        (1.0 - epsilon) / epsilon
    };
    Ok(ratio.log2())
}

/// The N=1 sharpenings: p_r ≤ 1/4 for a single CF type, p_0 + p_1 ≤ 2/5
/// when both types occur.
pub fn check_n1_bounds(report: &CFReport) -> Result<Vec<BoundCheck>> {
    if report.insertions != 1 {
        return Err(Error::InvalidParameter(format!(
            "N=1 bounds apply to single-insertion protocols, N = {}",
            report.insertions
        )));
    }
    let types = report.types_present();
    let checks = if types.len() >= 2 {
        vec![BoundCheck::le("n1_both_types", report.p_sum(), 0.4, 1e-9)]
    } else {
        let p_max = report.p.iter().cloned().fold(0.0, f64::max);
        vec![BoundCheck::le("n1_single_type", p_max, 0.25, 1e-9)]
    };
    Ok(checks)
}

/// Minimum of Σ|x_i|² over K vectors with |Σx_i|² fixed at `total`: total/K.
pub fn min_sum_squares(total: f64, k: usize) -> Result<f64> {
    if total < 0.0 {
        return Err(Error::InvalidParameter("total must be nonnegative".into()));
    }
    if k == 0 {
        return Err(Error::InvalidParameter("k must be positive".into()));
    }
    Ok(total / k as f64)
}

/// One row of a parameter sweep.
#[derive(Debug, Clone)]
pub struct SweepPoint {
    pub param: f64,
    pub insertions: usize,
    pub p: Vec<f64>,
    pub p_sum: f64,
    /// N − log₂((1−ε)/(2ε)) at ε = 1 − p_sum, when defined (common-off
    /// family, 0 < ε < 1); NaN otherwise.
    pub n_margin: f64,
}

#[derive(Debug, Clone)]
pub struct SweepResult {
    pub points: Vec<SweepPoint>,
}

/// Classify one protocol per grid point, in parallel, in grid order.
pub fn sweep_protocol_family<F>(grid: &[f64], opts: &ClassifyOptions, build: F) -> Result<SweepResult>
where
    F: Fn(f64) -> Result<Protocol> + Sync,
{
    let points: Result<Vec<SweepPoint>> = grid
        .par_iter()
        .map(|&x| {
            let protocol = build(x)
                .map_err(|e| Error::InvalidParameter(format!("grid point {x}: {e}")))?;
            let report = classify(&protocol, opts)?;
            let p_sum = report.p_sum();
            let eps = 1.0 - p_sum;
            let n_margin = if report.common_off && eps > 0.0 && eps < 1.0 {
                report.insertions as f64 - n_lower_bound(eps, true)?
            } else {
                f64::NAN
            };
            Ok(SweepPoint {
                param: x,
                insertions: report.insertions,
                p: report.p,
                p_sum,
                n_margin,
            })
        })
        .collect();
    Ok(SweepResult { points: points? })
}

/// Haar-like random unitary: Gaussian complex matrix, orthonormalized.
pub fn random_unitary(dim: usize, rng: &mut impl Rng) -> OperatorMatrix {
    loop {
        let cols: Vec<Vec<Amp>> = (0..dim)
            .map(|_| {
                (0..dim)
                    .map(|_| {
                        // Box-Muller pairs
                        let u1: f64 = rng.gen_range(1e-12..1.0);
                        let u2: f64 = rng.gen_range(0.0..std::f64::consts::TAU);
                        let r = (-2.0 * u1.ln()).sqrt();
                        Amp::new(r * u2.cos(), r * u2.sin())
                    })
                    .collect()
            })
            .collect();
        let basis = crate::tensor::orthonormalize(&cols, 1e-8);
        if basis.len() < dim {
            continue; // measure-zero degeneracy; redraw
        }
        let mut entries = vec![Amp::new(0.0, 0.0); dim * dim];
        for (j, col) in basis.iter().enumerate() {
            for (i, a) in col.iter().enumerate() {
                entries[i * dim + j] = *a;
            }
        }
        return OperatorMatrix::new(dim, entries).expect("square by construction");
    }
}

/// Configuration for seeded random protocols over the standard computer.
#[derive(Debug, Clone, Copy)]
pub struct RandomProtocolConfig {
    pub subsystems: usize,
    pub insertions: usize,
    pub allow_halting: bool,
}

impl Default for RandomProtocolConfig {
    fn default() -> Self {
        RandomProtocolConfig { subsystems: 3, insertions: 2, allow_halting: true }
    }
}

/// A random protocol on qubits with the standard (common-off) computer:
/// random interleaved unitaries, occasional computational measurements,
/// the requested number of insertions, and a final full measurement.
pub fn random_protocol(config: &RandomProtocolConfig, rng: &mut impl Rng) -> Result<Protocol> {
    let n_sub = config.subsystems.clamp(2, 4);
    let dims = vec![2usize; n_sub];
    let layout = SpaceLayout::new(dims.clone())?;
    let mut steps: Vec<ProtocolStep> = Vec::new();

    fn push_random_unitary(
        steps: &mut Vec<ProtocolStep>,
        n_sub: usize,
        rng: &mut impl Rng,
    ) {
        let two_qubit = n_sub >= 2 && rng.gen_bool(0.5);
        if two_qubit {
            let a = rng.gen_range(0..n_sub);
            let mut b = rng.gen_range(0..n_sub);
            while b == a {
                b = rng.gen_range(0..n_sub);
            }
            steps.push(ProtocolStep::Unitary {
                targets: vec![a, b],
                matrix: random_unitary(4, rng),
            });
        } else {
            let a = rng.gen_range(0..n_sub);
            steps.push(ProtocolStep::Unitary {
                targets: vec![a],
                matrix: random_unitary(2, rng),
            });
        }
    }

    for _ in 0..config.insertions {
        for _ in 0..rng.gen_range(1..=2) {
            push_random_unitary(&mut steps, n_sub, rng);
        }
        steps.push(ProtocolStep::Insertion { switch: 0, output: 1 });
        if rng.gen_bool(0.6) {
            let target = rng.gen_range(0..n_sub);
            let halt = if config.allow_halting && rng.gen_bool(0.4) {
                vec![rng.gen_range(0..2).to_string()]
            } else {
                vec![]
            };
            steps.push(ProtocolStep::Measurement {
                targets: vec![target],
                outcomes: computational_outcomes(&[2]),
                halt_on: halt,
            });
        }
    }
    if rng.gen_bool(0.5) {
        push_random_unitary(&mut steps, n_sub, rng);
    }
    let all: Vec<usize> = (0..n_sub).collect();
    steps.push(ProtocolStep::Measurement {
        targets: all,
        outcomes: computational_outcomes(&dims),
        halt_on: vec![],
    });
    Protocol::new(layout, ComputerModel::standard(), steps)
}

/// Deterministic RNG for a suite seed and case index.
pub fn case_rng(seed: u64, case: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed ^ case.wrapping_mul(0x9e37_79b9_7f4a_7c15))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gallery;

    #[test]
    fn probability_sum_margin_for_example2() {
        let report = classify(
            &gallery::example2(gallery::example2_optimal_theta()).unwrap(),
            &ClassifyOptions::default(),
        )
        .unwrap();
        let check = check_probability_sum_bound(&report).unwrap();
        assert!(check.passed);
        assert!((check.margin - 0.656).abs() < 1e-3);
    }

    #[test]
    fn probability_sum_refused_for_karm() {
        let report = classify(
            &gallery::karm(3, 0.2, None).unwrap(),
            &ClassifyOptions::default(),
        )
        .unwrap();
        assert!(matches!(check_probability_sum_bound(&report), Err(Error::UnsupportedFamily(_))));
    }

    #[test]
    fn n_lower_bound_paper_values() {
        assert!((n_lower_bound(1.0 / 3.0, false).unwrap() - 1.0).abs() < 1e-12);
        assert!((n_lower_bound(0.2, true).unwrap() - 1.0).abs() < 1e-12);
        assert!(n_lower_bound(0.5, false).unwrap().abs() < 1e-12);
        assert!(n_lower_bound(0.0, false).is_err());
        assert!(n_lower_bound(1.0, true).is_err());
    }

    #[test]
    fn n1_bounds_for_example2() {
        let report = classify(
            &gallery::example2(gallery::example2_optimal_theta()).unwrap(),
            &ClassifyOptions::default(),
        )
        .unwrap();
        let checks = check_n1_bounds(&report).unwrap();
        assert_eq!(checks.len(), 1);
        assert!(checks[0].passed);
        assert!((checks[0].margin - 0.056).abs() < 1e-3);
    }

    #[test]
    fn n1_bounds_reject_wrong_n() {
        let report = classify(&gallery::example1(2, None).unwrap(), &ClassifyOptions::default())
            .unwrap();
        assert!(check_n1_bounds(&report).is_err());
    }

    #[test]
    fn min_sum_squares_basics() {
        assert_eq!(min_sum_squares(1.0, 4).unwrap(), 0.25);
        assert_eq!(min_sum_squares(0.0, 7).unwrap(), 0.0);
        assert!(min_sum_squares(-1.0, 2).is_err());
        assert!(min_sum_squares(1.0, 0).is_err());
    }

    #[test]
    fn min_sum_squares_randomized_lower_bound() {
        let mut rng = case_rng(7, 0);
        for _ in 0..1000 {
            let k = rng.gen_range(1..=8usize);
            let xs: Vec<Amp> = (0..k)
                .map(|_| Amp::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)))
                .collect();
            let sum: Amp = xs.iter().sum();
            let bound = min_sum_squares(sum.norm_sqr(), k).unwrap();
            let actual: f64 = xs.iter().map(|x| x.norm_sqr()).sum();
            assert!(actual + 1e-12 >= bound);
        }
    }

    #[test]
    fn random_unitary_is_unitary() {
        let mut rng = case_rng(11, 3);
        for dim in [2usize, 4] {
            random_unitary(dim, &mut rng).check_unitary(1e-9).unwrap();
        }
    }

    #[test]
    fn random_protocols_validate_and_normalize() {
        for case in 0..20u64 {
            let mut rng = case_rng(42, case);
            let p = random_protocol(&RandomProtocolConfig::default(), &mut rng).unwrap();
            for r in 0..2 {
                let t = crate::history::expand(&p, r, Default::default()).unwrap();
                assert!(
                    (t.normalization_check() - 1.0).abs() < 1e-9,
                    "case {case} variant {r}"
                );
            }
        }
    }

    #[test]
    fn example1_sweep_monotone() {
        let grid: Vec<f64> = (1..=8).map(|n| n as f64).collect();
        let result = sweep_protocol_family(&grid, &ClassifyOptions::default(), |n| {
            gallery::example1(n as usize, None)
        })
        .unwrap();
        for w in result.points.windows(2) {
            assert!(w[1].p[1] > w[0].p[1]);
        }
    }
}
