//! Bound expressions evaluated on a [`CorrelationReport`]: the complex
//! CHSH parameter, the generalized Tsirelson chain, the generalized TLM
//! inequality, the unit-ball relation, the isotropic relation, the
//! three-outcome CHSH-type expression `I₃`, and the 3×3 Schur witness
//! that underlies the proofs.

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use std::f64::consts::SQRT_2;

use crate::correlator::{correlate, min_eigenvalue, Centered, CorrelationReport};
use crate::error::Result;
use crate::observables::ObservableSet;
use crate::state::QuantumState;

/// `2√2`.
pub const TSIRELSON: f64 = 2.0 * SQRT_2;

/// Quantum maximum of `I₃` for commuting observables, quoted from the
/// literature and not re-derived here.
pub const FU_QUANTUM_MAXIMUM: f64 = 2.91;

/// Which on-site correlator plays the role of `η`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Side {
    /// `η = C(A0, A1)`.
    Alice,
    /// `η = C(B0, B1)`.
    Bob,
}

impl Side {
    pub const BOTH: [Side; 2] = [Side::Alice, Side::Bob];

    pub fn eta(self, report: &CorrelationReport) -> Complex64 {
        match self {
            Side::Alice => report.eta_a,
            Side::Bob => report.eta_b,
        }
    }
}

/// `𝓑 = C(A0,B0) + C(A1,B0) + C(A0,B1) − C(A1,B1)`.
pub fn bell_parameter(report: &CorrelationReport) -> Complex64 {
    let c = &report.c;
    c[0][0] + c[1][0] + c[0][1] - c[1][1]
}

/// `√2 [√(1 + Re η) + √(1 − Re η)]`.
pub fn tsirelson_middle(eta: Complex64) -> f64 {
    SQRT_2 * ((1.0 + eta.re).max(0.0).sqrt() + (1.0 - eta.re).max(0.0).sqrt())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TsirelsonChain {
    pub abs_bell: f64,
    pub middle_a: f64,
    pub middle_b: f64,
    pub top: f64,
}

impl TsirelsonChain {
    pub fn holds(&self, tol: f64) -> bool {
        [self.middle_a, self.middle_b]
            .iter()
            .all(|&m| self.abs_bell <= m + tol && m <= self.top + tol)
    }
}

pub fn tsirelson_chain(report: &CorrelationReport) -> TsirelsonChain {
    TsirelsonChain {
        abs_bell: bell_parameter(report).norm(),
        middle_a: tsirelson_middle(report.eta_a),
        middle_b: tsirelson_middle(report.eta_b),
        top: TSIRELSON,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TlmValues {
    pub lhs: f64,
    pub rhs: f64,
}

impl TlmValues {
    /// `lhs / rhs`; zero when both sides vanish.
    pub fn ratio(&self) -> f64 {
        if self.rhs > 0.0 {
            self.lhs / self.rhs
        } else if self.lhs == 0.0 {
            0.0
        } else {
            f64::INFINITY
        }
    }
}

/// Generalized TLM inequality:
/// `|C(B0,A0)* C(B0,A1) − C(B1,A0)* C(B1,A1)| ≤ Σ_j √((1−|C(B_j,A0)|²)(1−|C(B_j,A1)|²))`.
pub fn tlm(report: &CorrelationReport) -> TlmValues {
    let cb = |j, i| report.bob_alice(j, i);
    let lhs = (cb(0, 0).conj() * cb(0, 1) - cb(1, 0).conj() * cb(1, 1)).norm();
    let rhs = (0..2)
        .map(|j| {
            ((1.0 - cb(j, 0).norm_sqr()) * (1.0 - cb(j, 1).norm_sqr()))
                .max(0.0)
                .sqrt()
        })
        .sum();
    TlmValues { lhs, rhs }
}

fn bell_ball_terms(report: &CorrelationReport) -> (f64, f64) {
    let b = bell_parameter(report);
    (b.re / TSIRELSON, b.im / TSIRELSON)
}

/// `(Re η / 2)² + (Re 𝓑 / 2√2)² + (Im 𝓑 / 2√2)²`.
pub fn relation3(report: &CorrelationReport, side: Side) -> f64 {
    let (x, y) = bell_ball_terms(report);
    let e = side.eta(report).re / 2.0;
    e * e + x * x + y * y
}

/// Coordinates `(Re η/2, Re 𝓑/2√2, Im 𝓑/2√2)` of the unit-ball picture.
pub fn ball_coordinates(report: &CorrelationReport, side: Side) -> [f64; 3] {
    let (x, y) = bell_ball_terms(report);
    [side.eta(report).re / 2.0, x, y]
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Relation4 {
    pub lhs: f64,
    pub isotropy_residual: f64,
}

/// `max_ij |C(A_i, B_j) − (−1)^{ij} 𝓑/4|`.
pub fn isotropy_residual(report: &CorrelationReport) -> f64 {
    isotropy_deviations(report)
        .iter()
        .map(|d| d.norm())
        .fold(0.0, f64::max)
}

/// `C(A_i, B_j) − (−1)^{ij} 𝓑/4` for `(i, j)` in row-major order.
pub fn isotropy_deviations(report: &CorrelationReport) -> [Complex64; 4] {
    let rho = bell_parameter(report) / 4.0;
    let c = &report.c;
    [c[0][0] - rho, c[0][1] - rho, c[1][0] - rho, c[1][1] + rho]
}

/// `|η|² + (Re 𝓑 / 2√2)² + (Im 𝓑 / 2√2)²` together with how far the
/// correlators are from the isotropic pattern that the bound assumes.
pub fn relation4(report: &CorrelationReport, side: Side) -> Relation4 {
    let (x, y) = bell_ball_terms(report);
    Relation4 {
        lhs: side.eta(report).norm_sqr() + x * x + y * y,
        isotropy_residual: isotropy_residual(report),
    }
}

/// `I₃ = Q00 + Q01 − Q10 + Q11` with `Q_jk = Re⟨A_j B_k⟩ ± Im⟨A_j B_k⟩/√3`,
/// the minus sign only for `Q01`. Uses the plain product `A_j B_k`.
pub fn three_term_i3(set: &ObservableSet, psi: &QuantumState) -> Result<f64> {
    let amps = psi.amplitudes();
    let mut moments = [[Complex64::new(0.0, 0.0); 2]; 2];
    for (j, row) in moments.iter_mut().enumerate() {
        set.alice(j).check_dim(psi.dim())?;
        let left = set.alice(j).entries().ad_mul(amps);
        for (k, slot) in row.iter_mut().enumerate() {
            set.bob(k).check_dim(psi.dim())?;
            *slot = left.dotc(&set.bob(k).apply(amps));
        }
    }
    Ok(i3_from_moments(&moments))
}

/// `I₃` from the four moments `⟨A_j B_k⟩`.
pub fn i3_from_moments(m: &[[Complex64; 2]; 2]) -> f64 {
    let inv = 1.0 / 3f64.sqrt();
    let q = |z: Complex64, sign: f64| z.re + sign * inv * z.im;
    q(m[0][0], 1.0) + q(m[0][1], -1.0) - q(m[1][0], 1.0) + q(m[1][1], 1.0)
}

#[derive(Debug, Clone, PartialEq)]
pub struct SchurWitness {
    /// Gram-type matrix on `[B_j, A1, A0]` (or `[A_j, B1, B0]`).
    pub matrix: DMatrix<Complex64>,
    pub min_eigenvalue: f64,
    /// `(1−|c0|²)(1−|c1|²) − |η − c0* c1|²` with `c_i = C(B_j, A_i)`.
    pub det_residual: f64,
}

/// The unit-diagonal 3×3 correlation matrix behind the Tsirelson and TLM
/// proofs, for `B_j` against Alice's pair (`Side::Alice`) or `A_j` against
/// Bob's pair (`Side::Bob`). Entries follow `(i, k) ↦ C(X_i, X_k)`.
pub fn schur_witness(
    set: &ObservableSet,
    psi: &QuantumState,
    j: usize,
    side: Side,
    epsilon: f64,
) -> Result<SchurWitness> {
    let (probe, pair0, pair1) = match side {
        Side::Alice => (set.bob(j), set.alice(0), set.alice(1)),
        Side::Bob => (set.alice(j), set.bob(0), set.bob(1)),
    };
    let probe = Centered::new(probe, psi)?;
    let p0 = Centered::new(pair0, psi)?;
    let p1 = Centered::new(pair1, psi)?;
    let c0 = correlate(&probe, &p0, epsilon)?;
    let c1 = correlate(&probe, &p1, epsilon)?;
    let eta = correlate(&p0, &p1, epsilon)?;
    Ok(schur_from_values(c0, c1, eta))
}

/// Builds the witness from `c0 = C(P, X0)`, `c1 = C(P, X1)`, `η = C(X0, X1)`.
pub fn schur_from_values(c0: Complex64, c1: Complex64, eta: Complex64) -> SchurWitness {
    let one = Complex64::new(1.0, 0.0);
    // Ordering [P, X1, X0].
    let matrix = DMatrix::from_row_slice(
        3,
        3,
        &[
            one,
            c1,
            c0,
            c1.conj(),
            one,
            eta.conj(),
            c0.conj(),
            eta,
            one,
        ],
    );
    let det_residual =
        (1.0 - c0.norm_sqr()) * (1.0 - c1.norm_sqr()) - (eta - c0.conj() * c1).norm_sqr();
    SchurWitness {
        min_eigenvalue: min_eigenvalue(&matrix),
        matrix,
        det_residual,
    }
}

/// Every bound expression on one state.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoundReport {
    pub bell: [f64; 2],
    pub abs_bell: f64,
    pub middle_bound_a: f64,
    pub middle_bound_b: f64,
    pub tlm_lhs: f64,
    pub tlm_rhs: f64,
    pub relation3_a: f64,
    pub relation3_b: f64,
    pub relation4_a: f64,
    pub relation4_b: f64,
    pub isotropy_residual: f64,
    pub i3: f64,
    pub epsilon: f64,
}

impl BoundReport {
    pub fn evaluate(set: &ObservableSet, psi: &QuantumState, epsilon: f64) -> Result<Self> {
        let report = CorrelationReport::compute(set, psi, epsilon)?;
        Ok(Self::from_parts(&report, three_term_i3(set, psi)?))
    }

    pub fn from_parts(report: &CorrelationReport, i3: f64) -> Self {
        let b = bell_parameter(report);
        let chain = tsirelson_chain(report);
        let t = tlm(report);
        let r4a = relation4(report, Side::Alice);
        Self {
            bell: [b.re, b.im],
            abs_bell: chain.abs_bell,
            middle_bound_a: chain.middle_a,
            middle_bound_b: chain.middle_b,
            tlm_lhs: t.lhs,
            tlm_rhs: t.rhs,
            relation3_a: relation3(report, Side::Alice),
            relation3_b: relation3(report, Side::Bob),
            relation4_a: r4a.lhs,
            relation4_b: relation4(report, Side::Bob).lhs,
            isotropy_residual: r4a.isotropy_residual,
            i3,
            epsilon: report.epsilon,
        }
    }

    pub fn tlm_ratio(&self) -> f64 {
        TlmValues {
            lhs: self.tlm_lhs,
            rhs: self.tlm_rhs,
        }
        .ratio()
    }

    pub fn relation3_max(&self) -> f64 {
        self.relation3_a.max(self.relation3_b)
    }

    pub fn relation4_max(&self) -> f64 {
        self.relation4_a.max(self.relation4_b)
    }
}
