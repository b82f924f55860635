//! Seeded randomized certification of the correlator bounds.
//!
//! Every sample evaluates all bound expressions on one state (and, in the
//! random-operator mode, one random operator quadruple) and records the
//! margin by which each inequality holds. A negative margin beyond the
//! tolerance is a violation.

use std::collections::BTreeMap;

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::bounds::{relation3, schur_witness, tsirelson_chain, tlm, Side, TSIRELSON};
use crate::correlator::{
    correlation_matrix, min_eigenvalue, quasiprobability_from, spectral_projectors,
    CorrelationReport,
};
use crate::error::{Error, Result};
use crate::observables::{ObservableSet, SIGNALING_TOLERANCE};
use crate::operator::Operator;
use crate::state::{AmplitudePairs, QuantumState};

/// Where the operators of each sample come from.
#[derive(Debug, Clone)]
pub enum Source {
    /// Sample `k` uses `sets[k % sets.len()]` on a random state.
    Sets(Vec<ObservableSet>),
    /// Sample `k` draws four complex Gaussian matrices of dimension
    /// `dims[k % dims.len()]`.
    RandomOperators { dims: Vec<usize> },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct CertifyConfig {
    pub samples: usize,
    pub seed: u64,
    /// Regularization used for every correlator.
    pub epsilon: f64,
    /// Samples where some spread is at or below this are skipped.
    pub spread_floor: f64,
    pub tolerance: f64,
}

impl Default for CertifyConfig {
    fn default() -> Self {
        Self {
            samples: 100_000,
            seed: 1,
            epsilon: 0.0,
            spread_floor: 1e-6,
            tolerance: 1e-9,
        }
    }
}

impl CertifyConfig {
    pub fn validate(&self) -> Result<()> {
        if self.samples == 0 {
            return Err(Error::InvalidConfig("sample count must be at least 1".into()));
        }
        if !(self.epsilon >= 0.0 && self.epsilon.is_finite()) {
            return Err(Error::InvalidConfig("epsilon must be non-negative".into()));
        }
        if !(self.tolerance > 0.0 && self.spread_floor >= 0.0) {
            return Err(Error::InvalidConfig("tolerances must be positive".into()));
        }
        Ok(())
    }
}

/// Named checks, in report order.
pub const CHECKS: [&str; 12] = [
    "correlatorModulus",
    "correlationMatrixPsd",
    "schurWitnessPsd",
    "schurDeterminant",
    "tsirelsonChain",
    "tlm",
    "relation3Alice",
    "relation3Bob",
    "quasiTotal",
    "quasiMoment",
    "quasiCommutingReal",
    "quasiCommutingNonnegative",
];

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct CheckTally {
    pub evaluated: u64,
    pub violations: u64,
    /// Smallest margin seen; negative means the inequality was exceeded.
    pub worst_margin: f64,
}

impl Default for CheckTally {
    fn default() -> Self {
        Self {
            evaluated: 0,
            violations: 0,
            worst_margin: f64::INFINITY,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct Counterexample {
    pub sample: usize,
    pub check: String,
    pub set_label: String,
    pub margin: f64,
    pub state: AmplitudePairs,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct CertifyReport {
    pub samples: usize,
    pub skipped: usize,
    pub checks: BTreeMap<String, CheckTally>,
    /// Largest `|Im W|` over non-commuting pairs; absent without spectral data.
    pub max_noncommuting_imaginary: Option<f64>,
    pub counterexample: Option<Counterexample>,
}

impl CertifyReport {
    pub fn violations(&self) -> u64 {
        self.checks.values().map(|t| t.violations).sum()
    }

    pub fn passed(&self) -> bool {
        self.violations() == 0
    }
}

struct Outcome {
    skipped: bool,
    margins: Vec<(usize, f64)>,
    noncommuting_imag: Option<f64>,
    set_label: String,
    state: QuantumState,
}

/// Projectors of the four operators of a set, when they all have the
/// cube-root spectrum.
type Projectors = Option<[[DMatrix<Complex64>; 3]; 4]>;

fn set_projectors(set: &ObservableSet) -> Projectors {
    let [a0, a1, b0, b1] = set.operators();
    Some([
        spectral_projectors(a0).ok()?,
        spectral_projectors(a1).ok()?,
        spectral_projectors(b0).ok()?,
        spectral_projectors(b1).ok()?,
    ])
}

fn random_operator(rng: &mut ChaCha8Rng, dim: usize, label: &str) -> Operator {
    let m = DMatrix::from_fn(dim, dim, |_, _| {
        Complex64::new(rng.sample(StandardNormal), rng.sample(StandardNormal))
    });
    Operator::new(label, m).expect("square by construction")
}

fn evaluate_sample(
    set: &ObservableSet,
    projectors: &Projectors,
    psi: QuantumState,
    config: &CertifyConfig,
) -> Result<Outcome> {
    let eps = config.epsilon;
    let mut margins = Vec::with_capacity(CHECKS.len() + 8);
    let report = CorrelationReport::compute(set, &psi, eps);
    let report = match report {
        Ok(r) if r.spreads.iter().all(|&s| s > config.spread_floor) => r,
        Ok(_) | Err(Error::UndefinedCorrelator) => {
            return Ok(Outcome {
                skipped: true,
                margins,
                noncommuting_imag: None,
                set_label: set.label.clone(),
                state: psi,
            })
        }
        Err(e) => return Err(e),
    };

    let ops = set.operators();
    let gram = correlation_matrix(&ops, &psi, eps)?;
    let max_mod = gram.iter().map(|z| z.norm()).fold(0.0, f64::max);
    margins.push((0, 1.0 - max_mod));
    margins.push((1, min_eigenvalue(&gram)));

    for side in Side::BOTH {
        for j in 0..2 {
            let w = schur_witness(set, &psi, j, side, eps)?;
            margins.push((2, w.min_eigenvalue));
            margins.push((3, w.det_residual));
        }
    }

    let chain = tsirelson_chain(&report);
    let chain_margin = [chain.middle_a, chain.middle_b]
        .iter()
        .map(|&m| (m - chain.abs_bell).min(TSIRELSON - m))
        .fold(f64::INFINITY, f64::min);
    margins.push((4, chain_margin));
    let t = tlm(&report);
    margins.push((5, t.rhs - t.lhs));
    margins.push((6, 1.0 - relation3(&report, Side::Alice)));
    margins.push((7, 1.0 - relation3(&report, Side::Bob)));

    let mut noncommuting_imag = None;
    if let Some(proj) = projectors {
        let amps = psi.amplitudes();
        for x in 0..4 {
            for y in (x + 1)..4 {
                let w = quasiprobability_from(&proj[x], &proj[y], &psi);
                margins.push((8, -(w.total() - Complex64::new(1.0, 0.0)).norm()));
                // ⟨XY†⟩ = (X†ψ)†(Y†ψ)
                let direct = ops[x].entries().ad_mul(amps).dotc(&ops[y].entries().ad_mul(amps));
                margins.push((9, -(w.product_moment() - direct).norm()));
                if ops[x].commutator_norm(ops[y]) <= SIGNALING_TOLERANCE {
                    margins.push((10, -w.max_imaginary()));
                    margins.push((11, w.min_real()));
                } else {
                    let m = noncommuting_imag.unwrap_or(0.0f64);
                    noncommuting_imag = Some(m.max(w.max_imaginary()));
                }
            }
        }
    }

    Ok(Outcome {
        skipped: false,
        margins,
        noncommuting_imag,
        set_label: set.label.clone(),
        state: psi,
    })
}

/// Tolerance per check: the moment identity is compared at `1e-10`, the
/// distribution normalization at `1e-12`, everything else at the
/// configured tolerance.
fn check_tolerance(check: usize, config: &CertifyConfig) -> f64 {
    match check {
        8 | 10 | 11 => 1e-12,
        9 => 1e-10,
        _ => config.tolerance,
    }
}

fn sample(source: &Source, cache: &[Projectors], k: usize, config: &CertifyConfig) -> Result<Outcome> {
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    rng.set_stream(k as u64);
    match source {
        Source::Sets(sets) => {
            let idx = k % sets.len();
            let psi = QuantumState::random(&mut rng, sets[idx].dim());
            evaluate_sample(&sets[idx], &cache[idx], psi, config)
        }
        Source::RandomOperators { dims } => {
            let dim = dims[k % dims.len()];
            let label = format!("random-d{dim}");
            let ops: Vec<Operator> = ["A0", "A1", "B0", "B1"]
                .iter()
                .map(|l| random_operator(&mut rng, dim, l))
                .collect();
            let [a0, a1, b0, b1]: [Operator; 4] = ops.try_into().expect("four operators");
            let set = ObservableSet::new(label, a0, a1, b0, b1)?;
            let psi = QuantumState::random(&mut rng, dim);
            evaluate_sample(&set, &None, psi, config)
        }
    }
}

/// Runs `config.samples` independent samples and tallies every check.
pub fn certify(source: &Source, config: &CertifyConfig) -> Result<CertifyReport> {
    config.validate()?;
    let cache: Vec<Projectors> = match source {
        Source::Sets(sets) if sets.is_empty() => {
            return Err(Error::InvalidConfig("no observable sets".into()))
        }
        Source::Sets(sets) => sets.iter().map(set_projectors).collect(),
        Source::RandomOperators { dims } => {
            if dims.is_empty() || dims.iter().any(|&d| d < 2) {
                return Err(Error::InvalidConfig("dimensions must be at least 2".into()));
            }
            Vec::new()
        }
    };

    let outcomes: Vec<Outcome> = (0..config.samples)
        .into_par_iter()
        .map(|k| sample(source, &cache, k, config))
        .collect::<Result<_>>()?;

    let mut checks: BTreeMap<String, CheckTally> = BTreeMap::new();
    let mut skipped = 0;
    let mut counterexample = None;
    let mut noncommuting: Option<f64> = None;
    for (k, out) in outcomes.into_iter().enumerate() {
        if out.skipped {
            skipped += 1;
            continue;
        }
        if let Some(v) = out.noncommuting_imag {
            noncommuting = Some(noncommuting.unwrap_or(0.0).max(v));
        }
        for &(check, margin) in &out.margins {
            let tally = checks.entry(CHECKS[check].to_string()).or_default();
            tally.evaluated += 1;
            tally.worst_margin = tally.worst_margin.min(margin);
            if margin < -check_tolerance(check, config) || margin.is_nan() {
                tally.violations += 1;
                if counterexample.is_none() {
                    counterexample = Some(Counterexample {
                        sample: k,
                        check: CHECKS[check].to_string(),
                        set_label: out.set_label.clone(),
                        margin,
                        state: AmplitudePairs::from(&out.state),
                    });
                }
            }
        }
    }
    Ok(CertifyReport {
        samples: config.samples,
        skipped,
        checks,
        max_noncommuting_imaginary: noncommuting,
        counterexample,
    })
}
