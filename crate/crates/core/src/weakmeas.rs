//! Two-detector weak measurement with Gaussian pointers.
//!
//! Detector 1 couples to a Hermitian `a`, detector 2 then couples to a
//! Hermitian `b`, each with strength `g`; both pointers start in
//! `φ(q) ∝ exp(−q²/2σ²)`. The pointer product `⟨Q₁Q₂⟩` is evaluated in closed
//! form, and `2⟨Q₁Q₂⟩/g²` tends to `⟨{a, b}⟩` as `g/σ → 0`.

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::correlator::expectation;
use crate::error::{Error, Result};
use crate::operator::{commutation_phase, Operator};
use crate::state::QuantumState;

/// Eigenvalues closer than this are one degenerate level.
pub const DEGENERACY_TOLERANCE: f64 = 1e-10;

/// Largest `|O − O†|` entry accepted as Hermitian.
pub const HERMITICITY_TOLERANCE: f64 = 1e-12;

/// Errors at or below this count as an exact match.
pub const EXACT_TOLERANCE: f64 = 1e-13;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DetectorConfig {
    pub g: f64,
    pub sigma: f64,
}

impl DetectorConfig {
    pub fn new(g: f64, sigma: f64) -> Result<Self> {
        if !(g > 0.0 && g.is_finite() && sigma > 0.0 && sigma.is_finite()) {
            return Err(Error::InvalidConfig(format!(
                "coupling and pointer width must be positive and finite, got g={g}, sigma={sigma}"
            )));
        }
        Ok(Self { g, sigma })
    }

    pub fn ratio(&self) -> f64 {
        self.g / self.sigma
    }
}

/// `⟨ψ|ab + ba|ψ⟩`.
pub fn anticommutator_exact(a: &Operator, b: &Operator, psi: &QuantumState) -> Result<Complex64> {
    a.check_dim(b.dim())?;
    Ok(expectation(&a.compose(b)?, psi)? + expectation(&b.compose(a)?, psi)?)
}

/// Distinct eigenvalues of a Hermitian operator with the projector onto
/// each eigenspace, in increasing order.
pub fn eigenspaces(op: &Operator) -> Result<Vec<(f64, DMatrix<Complex64>)>> {
    check_hermitian(op)?;
    let eig = op.entries().clone().symmetric_eigen();
    let mut order: Vec<usize> = (0..op.dim()).collect();
    order.sort_by(|&i, &j| eig.eigenvalues[i].total_cmp(&eig.eigenvalues[j]));
    let mut levels: Vec<(f64, DMatrix<Complex64>)> = Vec::new();
    for k in order {
        let value = eig.eigenvalues[k];
        let v = eig.eigenvectors.column(k);
        let proj = v * v.adjoint();
        match levels.last_mut() {
            Some((head, p)) if (value - *head).abs() <= DEGENERACY_TOLERANCE => *p += proj,
            _ => levels.push((value, proj)),
        }
    }
    Ok(levels)
}

fn check_hermitian(op: &Operator) -> Result<()> {
    let deviation = op.hermiticity_defect();
    if deviation > HERMITICITY_TOLERANCE {
        return Err(Error::NotHermitian {
            label: op.label().to_string(),
            deviation,
        });
    }
    Ok(())
}

/// Exact pointer product
/// `(g²/2) Σ_{a,a′} ⟨ψ|P_{a′} b P_a|ψ⟩ (a + a′) exp(−g²(a − a′)²/4σ²)`
/// over the eigenspaces `P_a` of `a`.
pub fn pointer_correlation(
    a: &Operator,
    b: &Operator,
    psi: &QuantumState,
    det: &DetectorConfig,
) -> Result<f64> {
    a.check_dim(psi.dim())?;
    b.check_dim(psi.dim())?;
    check_hermitian(b)?;
    let levels = eigenspaces(a)?;
    let amps = psi.amplitudes();
    let branches: Vec<_> = levels.iter().map(|(_, p)| p * amps).collect();
    let kicked: Vec<_> = branches.iter().map(|v| b.apply(v)).collect();
    let scale = det.g * det.g / (4.0 * det.sigma * det.sigma);
    let mut acc = Complex64::new(0.0, 0.0);
    for (k, (ak, _)) in levels.iter().enumerate() {
        for (l, (al, _)) in levels.iter().enumerate() {
            let weight = (ak + al) * (-scale * (ak - al).powi(2)).exp();
            acc += branches[l].dotc(&kicked[k]) * weight;
        }
    }
    Ok(0.5 * det.g * det.g * acc.re)
}

/// `(R, I)` with `R = (A + A†)/2`, `I = i(A† − A)/2`, so that `A = R + iI`.
pub fn hermitian_parts(a: &Operator) -> (Operator, Operator) {
    let adj = a.entries().adjoint();
    let half = Complex64::new(0.5, 0.0);
    let re = (a.entries() + &adj) * half;
    let im = (adj - a.entries()) * Complex64::new(0.0, 0.5);
    (
        Operator::new(format!("Re({})", a.label()), re).expect("square"),
        Operator::new(format!("Im({})", a.label()), im).expect("square"),
    )
}

/// Estimate of `⟨{a, b}⟩` from four Hermitian pointer runs:
/// `{A,B} = {R_A,R_B} − {I_A,I_B} + i{R_A,I_B} + i{I_A,R_B}`.
pub fn weak_product_correlator(
    a: &Operator,
    b: &Operator,
    psi: &QuantumState,
    det: &DetectorConfig,
) -> Result<Complex64> {
    a.check_dim(b.dim())?;
    let (ra, ia) = hermitian_parts(a);
    let (rb, ib) = hermitian_parts(b);
    let rescale = 2.0 / (det.g * det.g);
    let run = |x: &Operator, y: &Operator| -> Result<f64> {
        Ok(rescale * pointer_correlation(x, y, psi, det)?)
    };
    let real = run(&ra, &rb)? - run(&ia, &ib)?;
    let imag = run(&ra, &ib)? + run(&ia, &rb)?;
    Ok(Complex64::new(real, imag))
}

/// Recovers `⟨ab⟩` from `⟨{a, b}⟩` when `ab = λ ba`, using
/// `⟨{a, b}⟩ = (1 + 1/λ)⟨ab⟩`.
pub fn recover_product(a: &Operator, b: &Operator, anticommutator: Complex64) -> Result<Complex64> {
    let lambda = commutation_phase(a, b).ok_or_else(|| {
        Error::InvalidConfig(format!(
            "{} and {} do not commute up to a phase",
            a.label(),
            b.label()
        ))
    })?;
    let factor = Complex64::new(1.0, 0.0) + lambda.inv();
    if factor.norm() < 1e-12 {
        return Err(Error::InvalidConfig(format!(
            "{} and {} anticommute; the product is not recoverable",
            a.label(),
            b.label()
        )));
    }
    Ok(anticommutator / factor)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct ConvergencePoint {
    pub g_over_sigma: f64,
    pub estimate: [f64; 2],
    pub exact: [f64; 2],
    pub error: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct ConvergenceStudy {
    pub points: Vec<ConvergencePoint>,
    /// Least-squares slope of `log error` against `log(g/σ)`; absent when
    /// every error is at rounding level or fewer than two points exist.
    pub slope: Option<f64>,
    pub exact_match: bool,
}

/// Runs [`weak_product_correlator`] at each `g/σ` (with `σ = sigma`) and fits
/// the convergence order.
pub fn convergence_study(
    a: &Operator,
    b: &Operator,
    psi: &QuantumState,
    ratios: &[f64],
    sigma: f64,
) -> Result<ConvergenceStudy> {
    let exact = anticommutator_exact(a, b, psi)?;
    let points = ratios
        .iter()
        .map(|&r| {
            let det = DetectorConfig::new(r * sigma, sigma)?;
            let estimate = weak_product_correlator(a, b, psi, &det)?;
            Ok(ConvergencePoint {
                g_over_sigma: r,
                estimate: [estimate.re, estimate.im],
                exact: [exact.re, exact.im],
                error: (estimate - exact).norm(),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let exact_match = points.iter().all(|p| p.error <= EXACT_TOLERANCE);
    let slope = if exact_match {
        None
    } else {
        loglog_slope(
            &points.iter().map(|p| p.g_over_sigma).collect::<Vec<_>>(),
            &points.iter().map(|p| p.error).collect::<Vec<_>>(),
        )
    };
    Ok(ConvergenceStudy {
        points,
        slope,
        exact_match,
    })
}

/// Least-squares slope of `ln y` against `ln x` over positive pairs.
pub fn loglog_slope(xs: &[f64], ys: &[f64]) -> Option<f64> {
    let pts: Vec<(f64, f64)> = xs
        .iter()
        .zip(ys)
        .filter(|(x, y)| **x > 0.0 && **y > 0.0)
        .map(|(x, y)| (x.ln(), y.ln()))
        .collect();
    if pts.len() < 2 {
        return None;
    }
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    if sxx == 0.0 {
        return None;
    }
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    Some(sxy / sxx)
}
