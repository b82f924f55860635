use nalgebra::DVector;
use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A normalized pure state.
#[derive(Debug, Clone, PartialEq)]
pub struct QuantumState {
    amplitudes: DVector<Complex64>,
}

impl QuantumState {
    /// Normalizes `amplitudes`; fails on the zero vector.
    pub fn new(amplitudes: DVector<Complex64>) -> Result<Self> {
        let norm = amplitudes.norm();
        if norm == 0.0 || !norm.is_finite() {
            return Err(Error::ZeroState);
        }
        Ok(Self {
            amplitudes: amplitudes / Complex64::new(norm, 0.0),
        })
    }

    pub fn from_slice(amplitudes: &[Complex64]) -> Result<Self> {
        Self::new(DVector::from_column_slice(amplitudes))
    }

    /// Interprets `2·dim` reals as `[re_0..re_{d-1}, im_0..im_{d-1}]`.
    pub fn from_reals(params: &[f64]) -> Result<Self> {
        if !params.len().is_multiple_of(2) || params.is_empty() {
            return Err(Error::DimensionMismatch {
                expected: 2 * (params.len() / 2).max(1),
                got: params.len(),
            });
        }
        let dim = params.len() / 2;
        Self::new(DVector::from_fn(dim, |k, _| {
            Complex64::new(params[k], params[dim + k])
        }))
    }

    /// Computational basis vector `e_k`.
    pub fn basis(dim: usize, k: usize) -> Self {
        let mut v = DVector::zeros(dim);
        v[k] = Complex64::new(1.0, 0.0);
        Self { amplitudes: v }
    }

    /// `u ⊗ v`.
    pub fn product(u: &QuantumState, v: &QuantumState) -> Self {
        Self {
            amplitudes: u.amplitudes.kronecker(&v.amplitudes),
        }
    }

    /// Normalized complex Gaussian vector, which is Haar distributed.
    pub fn random<R: Rng + ?Sized>(rng: &mut R, dim: usize) -> Self {
        let v = DVector::from_fn(dim, |_, _| {
            Complex64::new(rng.sample(StandardNormal), rng.sample(StandardNormal))
        });
        Self::new(v).expect("a Gaussian vector is nonzero almost surely")
    }

    pub fn dim(&self) -> usize {
        self.amplitudes.len()
    }

    pub fn amplitudes(&self) -> &DVector<Complex64> {
        &self.amplitudes
    }

    pub fn norm(&self) -> f64 {
        self.amplitudes.norm()
    }

    pub fn with_global_phase(&self, phase: f64) -> Self {
        Self {
            amplitudes: &self.amplitudes * Complex64::from_polar(1.0, phase),
        }
    }

    /// Amplitudes as `[re, im]` pairs.
    pub fn to_pairs(&self) -> Vec<[f64; 2]> {
        self.amplitudes.iter().map(|z| [z.re, z.im]).collect()
    }

    pub fn to_reals(&self) -> Vec<f64> {
        let mut out: Vec<f64> = self.amplitudes.iter().map(|z| z.re).collect();
        out.extend(self.amplitudes.iter().map(|z| z.im));
        out
    }
}

/// Serialized form of a state: `[re, im]` amplitude pairs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AmplitudePairs(pub Vec<[f64; 2]>);

impl From<&QuantumState> for AmplitudePairs {
    fn from(state: &QuantumState) -> Self {
        AmplitudePairs(state.to_pairs())
    }
}

impl TryFrom<&AmplitudePairs> for QuantumState {
    type Error = Error;

    fn try_from(pairs: &AmplitudePairs) -> Result<Self> {
        let v: Vec<Complex64> = pairs.0.iter().map(|p| Complex64::new(p[0], p[1])).collect();
        QuantumState::from_slice(&v)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn normalizes() {
        let s = QuantumState::from_reals(&[3.0, 0.0, 0.0, 4.0]).unwrap();
        assert!((s.norm() - 1.0).abs() < 1e-15);
        assert!((s.amplitudes()[1].im - 0.8).abs() < 1e-15);
    }

    #[test]
    fn zero_vector_rejected() {
        assert_eq!(QuantumState::from_reals(&[0.0; 4]), Err(Error::ZeroState));
        assert!(QuantumState::from_reals(&[1.0; 3]).is_err());
    }

    #[test]
    fn random_states_are_unit() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..10 {
            let s = QuantumState::random(&mut rng, 9);
            assert!((s.norm() - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn reals_round_trip() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let s = QuantumState::random(&mut rng, 5);
        let back = QuantumState::from_reals(&s.to_reals()).unwrap();
        assert!((back.amplitudes() - s.amplitudes()).norm() < 1e-15);
    }
}
