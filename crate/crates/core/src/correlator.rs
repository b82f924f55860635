//! Expectations, spreads and complex Pearson correlators on explicit states.
//!
//! For an operator `X` and state `ψ` the centered vector
//! `u_X = X†ψ − ⟨X⟩*ψ` carries everything needed:
//!
//! - `‖u_X‖² = ⟨XX†⟩ − |⟨X⟩|²`, so the spread is `Δ(X) = ‖u_X‖`;
//! - `u_X† u_Y = ⟨XY†⟩ − ⟨X⟩⟨Y⟩*`, the numerator of `C(X, Y)`.
//!
//! Working with `u_X` keeps the radicand non-negative and makes
//! `|C(X, Y)| ≤ 1` hold to rounding through Cauchy–Schwarz, including at
//! near-eigenstates where the raw moment formula cancels badly.
//!
//! The regularized correlator replaces `Δ → Δ + ε²` in both denominators.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use std::collections::BTreeMap;

use crate::error::{Error, Result};
use crate::observables::ObservableSet;
use crate::operator::{omega, Operator};
use crate::state::QuantumState;

/// Default regularization cutoff `ε`.
pub const DEFAULT_EPSILON: f64 = 1e-3;

/// Tolerance used to accept an operator as normal with spectrum `{1, ω, ω̄}`.
pub const SPECTRUM_TOLERANCE: f64 = 1e-10;

/// Mean and centered vector of one operator on one state.
#[derive(Debug, Clone)]
pub struct Centered {
    pub mean: Complex64,
    pub vector: DVector<Complex64>,
    pub spread: f64,
}

impl Centered {
    pub fn new(x: &Operator, psi: &QuantumState) -> Result<Self> {
        x.check_dim(psi.dim())?;
        let amps = psi.amplitudes();
        let mut w = x.entries().ad_mul(amps);
        // ψ†X†ψ = ⟨X⟩*
        let mean = amps.dotc(&w).conj();
        w.axpy(-mean.conj(), amps, Complex64::new(1.0, 0.0));
        let spread = w.norm();
        Ok(Self {
            mean,
            vector: w,
            spread,
        })
    }

    /// `Δ + ε²`.
    pub fn regularized(&self, epsilon: f64) -> f64 {
        self.spread + epsilon * epsilon
    }
}

pub(crate) fn correlate(x: &Centered, y: &Centered, epsilon: f64) -> Result<Complex64> {
    let denom = x.regularized(epsilon) * y.regularized(epsilon);
    if denom == 0.0 || !denom.is_finite() {
        return Err(Error::UndefinedCorrelator);
    }
    Ok(x.vector.dotc(&y.vector) / denom)
}

/// `⟨ψ|X|ψ⟩`.
pub fn expectation(x: &Operator, psi: &QuantumState) -> Result<Complex64> {
    x.check_dim(psi.dim())?;
    let amps = psi.amplitudes();
    Ok(amps.dotc(&x.apply(amps)))
}

/// Regularized spread `sqrt(⟨XX†⟩ − |⟨X⟩|²) + ε²`.
pub fn variance(x: &Operator, psi: &QuantumState, epsilon: f64) -> Result<f64> {
    Ok(Centered::new(x, psi)?.regularized(epsilon))
}

/// Complex Pearson correlator
/// `C(X, Y) = (⟨XY†⟩ − ⟨X⟩⟨Y⟩*) / ((Δ(X) + ε²)(Δ(Y) + ε²))`.
pub fn pearson(x: &Operator, y: &Operator, psi: &QuantumState, epsilon: f64) -> Result<Complex64> {
    y.check_dim(x.dim())?;
    correlate(&Centered::new(x, psi)?, &Centered::new(y, psi)?, epsilon)
}

/// Matrix of pairwise correlators `C(X_i, X_j)`. It is Hermitian by
/// construction and has unit diagonal when `ε = 0`.
pub fn correlation_matrix(
    ops: &[&Operator],
    psi: &QuantumState,
    epsilon: f64,
) -> Result<DMatrix<Complex64>> {
    let centered = ops
        .iter()
        .map(|op| Centered::new(op, psi))
        .collect::<Result<Vec<_>>>()?;
    let n = ops.len();
    let mut m = DMatrix::zeros(n, n);
    for i in 0..n {
        for j in i..n {
            let c = correlate(&centered[i], &centered[j], epsilon)?;
            if i == j {
                m[(i, i)] = Complex64::new(c.re, 0.0);
            } else {
                m[(i, j)] = c;
                m[(j, i)] = c.conj();
            }
        }
    }
    Ok(m)
}

/// Smallest eigenvalue of a Hermitian matrix.
pub fn min_eigenvalue(m: &DMatrix<Complex64>) -> f64 {
    m.clone()
        .symmetric_eigenvalues()
        .iter()
        .copied()
        .fold(f64::INFINITY, f64::min)
}

/// The three eigenvalues `1, ω, ω̄` in the order used by [`Quasiprobability`].
pub fn cube_root_spectrum() -> [Complex64; 3] {
    let w = omega();
    [Complex64::new(1.0, 0.0), w, w.conj()]
}

/// Spectral projectors `P_λ = (1/3) Σ_k (O/λ)^k` of an operator with
/// `O³ = I`, one per element of [`cube_root_spectrum`].
pub fn spectral_projectors(op: &Operator) -> Result<[DMatrix<Complex64>; 3]> {
    if op.normality_defect() > SPECTRUM_TOLERANCE {
        return Err(Error::NotNormal(op.label().to_string()));
    }
    if op.cube_defect() > SPECTRUM_TOLERANCE {
        return Err(Error::UnsupportedSpectrum(op.label().to_string()));
    }
    let n = op.dim();
    let id = DMatrix::<Complex64>::identity(n, n);
    let o = op.entries();
    let o2 = o * o;
    let third = Complex64::new(1.0 / 3.0, 0.0);
    Ok(cube_root_spectrum().map(|lambda| {
        let inv = lambda.conj();
        (&id + o * inv + &o2 * (inv * inv)) * third
    }))
}

/// Joint (quasi)probability `W(x, y) = ⟨ψ|P_x^{(X)} P_y^{(Y)}|ψ⟩` on the
/// `3×3` grid of eigenvalues.
#[derive(Debug, Clone, PartialEq)]
pub struct Quasiprobability {
    pub values: [Complex64; 3],
    /// `weights[r][s]` pairs `values[r]` of X with `values[s]` of Y.
    pub weights: [[Complex64; 3]; 3],
}

impl Quasiprobability {
    pub fn total(&self) -> Complex64 {
        self.weights.iter().flatten().sum()
    }

    /// `Σ_y W(x, y)` for each eigenvalue `x` of X.
    pub fn marginal_x(&self) -> [Complex64; 3] {
        self.weights.map(|row| row.iter().sum())
    }

    /// `Σ_{x,y} x y* W(x, y)`, which equals `⟨XY†⟩`.
    pub fn product_moment(&self) -> Complex64 {
        let mut acc = Complex64::new(0.0, 0.0);
        for (r, row) in self.weights.iter().enumerate() {
            for (s, w) in row.iter().enumerate() {
                acc += self.values[r] * self.values[s].conj() * w;
            }
        }
        acc
    }

    /// Largest `|Im W|` over the grid.
    pub fn max_imaginary(&self) -> f64 {
        self.weights
            .iter()
            .flatten()
            .map(|w| w.im.abs())
            .fold(0.0, f64::max)
    }

    /// Smallest `Re W` over the grid.
    pub fn min_real(&self) -> f64 {
        self.weights
            .iter()
            .flatten()
            .map(|w| w.re)
            .fold(f64::INFINITY, f64::min)
    }
}

pub fn quasiprobability(x: &Operator, y: &Operator, psi: &QuantumState) -> Result<Quasiprobability> {
    x.check_dim(psi.dim())?;
    y.check_dim(psi.dim())?;
    Ok(quasiprobability_from(&spectral_projectors(x)?, &spectral_projectors(y)?, psi))
}

/// [`quasiprobability`] from precomputed projectors.
pub fn quasiprobability_from(
    px: &[DMatrix<Complex64>; 3],
    py: &[DMatrix<Complex64>; 3],
    psi: &QuantumState,
) -> Quasiprobability {
    let amps = psi.amplitudes();
    let left: Vec<DVector<Complex64>> = px.iter().map(|p| p.ad_mul(amps)).collect();
    let right: Vec<DVector<Complex64>> = py.iter().map(|p| p * amps).collect();
    let mut weights = [[Complex64::new(0.0, 0.0); 3]; 3];
    for (r, l) in left.iter().enumerate() {
        for (s, rv) in right.iter().enumerate() {
            weights[r][s] = l.dotc(rv);
        }
    }
    Quasiprobability {
        values: cube_root_spectrum(),
        weights,
    }
}

/// All correlators of one observable set on one state.
#[derive(Debug, Clone, PartialEq)]
pub struct CorrelationReport {
    /// `c[i][j] = C(A_i, B_j)`.
    pub c: [[Complex64; 2]; 2],
    /// `C(A0, A1)`.
    pub eta_a: Complex64,
    /// `C(B0, B1)`.
    pub eta_b: Complex64,
    /// Unregularized spreads of `A0, A1, B0, B1`.
    pub spreads: [f64; 4],
    pub epsilon: f64,
}

impl CorrelationReport {
    pub fn compute(set: &ObservableSet, psi: &QuantumState, epsilon: f64) -> Result<Self> {
        let [a0, a1, b0, b1] = set.operators().map(|op| Centered::new(op, psi));
        let (a0, a1, b0, b1) = (a0?, a1?, b0?, b1?);
        let a = [&a0, &a1];
        let b = [&b0, &b1];
        let mut c = [[Complex64::new(0.0, 0.0); 2]; 2];
        for i in 0..2 {
            for j in 0..2 {
                c[i][j] = correlate(a[i], b[j], epsilon)?;
            }
        }
        Ok(Self {
            c,
            eta_a: correlate(&a0, &a1, epsilon)?,
            eta_b: correlate(&b0, &b1, epsilon)?,
            spreads: [a0.spread, a1.spread, b0.spread, b1.spread],
            epsilon,
        })
    }

    /// Builds a report directly from correlator values.
    pub fn from_values(c: [[Complex64; 2]; 2], eta_a: Complex64, eta_b: Complex64) -> Self {
        Self {
            c,
            eta_a,
            eta_b,
            spreads: [1.0; 4],
            epsilon: 0.0,
        }
    }

    /// `C(B_j, A_i) = C(A_i, B_j)*`.
    pub fn bob_alice(&self, j: usize, i: usize) -> Complex64 {
        self.c[i][j].conj()
    }

    /// Spreads keyed by operator label.
    pub fn variances(&self, set: &ObservableSet) -> BTreeMap<String, f64> {
        set.operators()
            .iter()
            .zip(self.spreads)
            .map(|(op, s)| (op.label().to_string(), s))
            .collect()
    }

    pub fn max_modulus(&self) -> f64 {
        self.c
            .iter()
            .flatten()
            .chain([&self.eta_a, &self.eta_b])
            .map(|z| z.norm())
            .fold(0.0, f64::max)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::observables::{build_standard_sets, ParafermionObservables};
    use approx::assert_abs_diff_eq;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn obs() -> ParafermionObservables {
        ParafermionObservables::new()
    }

    fn uniform3() -> QuantumState {
        let s = 1.0 / 3f64.sqrt();
        QuantumState::from_slice(&[Complex64::new(s, 0.0); 3]).unwrap()
    }

    /// Straight-line evaluation of the correlator from raw moments.
    fn pearson_oracle(x: &Operator, y: &Operator, psi: &QuantumState) -> Complex64 {
        let p = psi.amplitudes();
        let ex = |m: &DMatrix<Complex64>| p.dotc(&(m * p));
        let (xm, ym) = (x.entries(), y.entries());
        let num = ex(&(xm * ym.adjoint())) - ex(xm) * ex(ym).conj();
        let dx = (ex(&(xm * xm.adjoint())).re - ex(xm).norm_sqr()).sqrt();
        let dy = (ex(&(ym * ym.adjoint())).re - ex(ym).norm_sqr()).sqrt();
        num / (dx * dy)
    }

    #[test]
    fn expectation_cases() {
        let o = obs();
        let e11 = QuantumState::basis(9, 0);
        assert_abs_diff_eq!(expectation(&Operator::identity(9), &e11).unwrap().re, 1.0);
        assert_abs_diff_eq!(expectation(&o.a0, &e11).unwrap().re, 1.0, epsilon = 1e-15);
        let psi = QuantumState::product(&uniform3(), &QuantumState::basis(3, 0));
        let v = expectation(&o.a1, &psi).unwrap();
        assert_abs_diff_eq!(v.re, 1.0, epsilon = 1e-14);
        assert_abs_diff_eq!(v.im, 0.0, epsilon = 1e-14);
    }

    #[test]
    fn dimension_mismatch_is_input_error() {
        let psi = QuantumState::basis(4, 0);
        assert!(matches!(
            expectation(&obs().a0, &psi),
            Err(Error::DimensionMismatch { .. })
        ));
        assert!(variance(&obs().a0, &psi, 0.0).is_err());
    }

    #[test]
    fn variance_cases() {
        let o = obs();
        assert_abs_diff_eq!(variance(&o.a0, &QuantumState::basis(9, 0), 0.0).unwrap(), 0.0);
        // ⟨A1⟩ = 0 on e1 ⊗ e1, so Δ = 1.
        assert_abs_diff_eq!(
            variance(&o.a1, &QuantumState::basis(9, 0), 0.0).unwrap(),
            1.0,
            epsilon = 1e-15
        );
        let s = 0.5f64.sqrt();
        let half = QuantumState::from_slice(&[
            Complex64::new(s, 0.0),
            Complex64::new(s, 0.0),
            Complex64::new(0.0, 0.0),
        ])
        .unwrap();
        let psi = QuantumState::product(&QuantumState::basis(3, 0), &half);
        assert_abs_diff_eq!(
            variance(&o.b0, &psi, 0.0).unwrap(),
            3f64.sqrt() / 2.0,
            epsilon = 1e-14
        );
        assert_abs_diff_eq!(
            variance(&o.b0, &psi, 1e-2).unwrap(),
            3f64.sqrt() / 2.0 + 1e-4,
            epsilon = 1e-14
        );
    }

    #[test]
    fn pearson_self_and_product() {
        let o = obs();
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let psi = QuantumState::random(&mut rng, 9);
        let self_c = pearson(&o.a0, &o.a0, &psi, 0.0).unwrap();
        assert_abs_diff_eq!(self_c.re, 1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(self_c.im, 0.0, epsilon = 1e-12);

        let u = QuantumState::random(&mut rng, 3);
        let v = QuantumState::random(&mut rng, 3);
        let prod = QuantumState::product(&u, &v);
        assert!(pearson(&o.a0, &o.b0, &prod, 0.0).unwrap().norm() < 1e-12);
    }

    #[test]
    fn pearson_matches_straight_line_oracle() {
        let o = obs();
        let mut rng = ChaCha8Rng::seed_from_u64(2024);
        let psi = QuantumState::random(&mut rng, 9);
        let got = pearson(&o.a0, &o.b0p, &psi, 0.0).unwrap();
        let want = pearson_oracle(&o.a0, &o.b0p, &psi);
        assert!((got - want).norm() < 1e-12, "{got} vs {want}");
    }

    #[test]
    fn undefined_without_cutoff_at_eigenstate() {
        let o = obs();
        let e = QuantumState::basis(9, 0);
        assert_eq!(pearson(&o.a0, &o.b0, &e, 0.0), Err(Error::UndefinedCorrelator));
        assert!(pearson(&o.a0, &o.b0, &e, 1e-3).is_ok());
    }

    #[test]
    fn correlation_matrix_cases() {
        let o = obs();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let psi = QuantumState::random(&mut rng, 9);
        let m1 = correlation_matrix(&[&o.a0], &psi, 0.0).unwrap();
        assert_abs_diff_eq!(m1[(0, 0)].re, 1.0, epsilon = 1e-14);

        let m = correlation_matrix(&[&o.b1, &o.a1, &o.a0], &psi, 0.0).unwrap();
        let eta = pearson(&o.a0, &o.a1, &psi, 0.0).unwrap();
        for k in 0..3 {
            assert_abs_diff_eq!(m[(k, k)].re, 1.0, epsilon = 1e-14);
        }
        // Row A0, column A1 carries C(A0, A1) = η.
        assert!((m[(2, 1)] - eta).norm() < 1e-14);
        assert!((m[(1, 2)] - eta.conj()).norm() < 1e-14);
        assert!(min_eigenvalue(&m) >= -1e-9);
    }

    #[test]
    fn quasiprobability_commuting_is_a_distribution() {
        let o = obs();
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let psi = QuantumState::random(&mut rng, 9);
        let w = quasiprobability(&o.a0, &o.b0, &psi).unwrap();
        assert!((w.total() - 1.0).norm() < 1e-12);
        assert!(w.max_imaginary() < 1e-12);
        assert!(w.min_real() >= -1e-12);
        let direct = expectation(&o.a0.compose(&o.b0.adjoint()).unwrap(), &psi).unwrap();
        assert!((w.product_moment() - direct).norm() < 1e-10);
    }

    #[test]
    fn quasiprobability_eigenstate_concentrates() {
        let o = obs();
        let e = QuantumState::basis(9, 0);
        let w = quasiprobability(&o.a0, &o.a0, &e).unwrap();
        assert_abs_diff_eq!(w.weights[0][0].re, 1.0, epsilon = 1e-14);
        let rest: f64 = w.weights.iter().flatten().map(|z| z.norm()).sum::<f64>() - 1.0;
        assert!(rest.abs() < 1e-14);
    }

    #[test]
    fn quasiprobability_noncommuting_goes_complex() {
        let o = obs();
        let mut rng = ChaCha8Rng::seed_from_u64(99);
        let psi = QuantumState::random(&mut rng, 9);
        let w = quasiprobability(&o.a0, &o.b0p, &psi).unwrap();
        assert!(w.max_imaginary() > 1e-6);
        assert!((w.total() - 1.0).norm() < 1e-12);
    }

    #[test]
    fn quasiprobability_rejects_bad_operators() {
        let m = DMatrix::from_row_slice(
            2,
            2,
            &[
                Complex64::new(1.0, 0.0),
                Complex64::new(1.0, 0.0),
                Complex64::new(0.0, 0.0),
                Complex64::new(1.0, 0.0),
            ],
        );
        let jordan = Operator::new("J", m).unwrap();
        let psi = QuantumState::basis(2, 0);
        assert!(matches!(
            quasiprobability(&jordan, &jordan, &psi),
            Err(Error::NotNormal(_))
        ));
        let herm = Operator::clock(2);
        assert!(matches!(
            quasiprobability(&herm, &herm, &psi),
            Err(Error::UnsupportedSpectrum(_))
        ));
    }

    #[test]
    fn projector_ranks_are_three() {
        for op in obs().all() {
            for p in spectral_projectors(op).unwrap() {
                let tr: Complex64 = (0..9).map(|k| p[(k, k)]).sum();
                assert_abs_diff_eq!(tr.re, 3.0, epsilon = 1e-12);
                assert!((&p * &p - &p).norm() < 1e-12);
            }
        }
    }

    #[test]
    fn report_is_bounded() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for set in build_standard_sets() {
            let psi = QuantumState::random(&mut rng, 9);
            let r = CorrelationReport::compute(&set, &psi, 0.0).unwrap();
            assert!(r.max_modulus() <= 1.0 + 1e-9);
            assert_eq!(r.variances(&set).len(), 4);
        }
    }
}
