//! Dense complex operators and the algebraic checks used on them.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use std::f64::consts::PI;
use std::fmt;

use crate::error::{Error, Result};

/// Elementwise tolerance used when testing `x·y = λ·y·x`.
pub const PHASE_TOLERANCE: f64 = 1e-10;

/// `e^{2πi/3}`, the primitive cube root of unity.
pub fn omega() -> Complex64 {
    Complex64::from_polar(1.0, 2.0 * PI / 3.0)
}

/// A square complex matrix with a human-readable label.
#[derive(Clone, PartialEq)]
pub struct Operator {
    label: String,
    entries: DMatrix<Complex64>,
}

impl fmt::Debug for Operator {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Operator({}, dim={})", self.label, self.dim())
    }
}

impl Operator {
    pub fn new(label: impl Into<String>, entries: DMatrix<Complex64>) -> Result<Self> {
        if entries.nrows() != entries.ncols() {
            return Err(Error::NotSquare {
                rows: entries.nrows(),
                cols: entries.ncols(),
            });
        }
        if entries.nrows() == 0 {
            return Err(Error::InvalidConfig("operator dimension must be positive".into()));
        }
        Ok(Self {
            label: label.into(),
            entries,
        })
    }

    /// Builds a `dim`×`dim` operator from row-major entries.
    pub fn from_rows(label: impl Into<String>, dim: usize, rows: &[Complex64]) -> Result<Self> {
        if rows.len() != dim * dim {
            return Err(Error::DimensionMismatch {
                expected: dim * dim,
                got: rows.len(),
            });
        }
        Self::new(label, DMatrix::from_row_slice(dim, dim, rows))
    }

    pub fn identity(dim: usize) -> Self {
        Self {
            label: format!("I{dim}"),
            entries: DMatrix::identity(dim, dim),
        }
    }

    /// Diagonal clock matrix `diag(1, ω, ω², …)` with `ω = e^{2πi/d}`.
    pub fn clock(dim: usize) -> Self {
        let diag = DVector::from_fn(dim, |k, _| {
            Complex64::from_polar(1.0, 2.0 * PI * k as f64 / dim as f64)
        });
        Self {
            label: format!("Z{dim}"),
            entries: DMatrix::from_diagonal(&diag),
        }
    }

    /// Cyclic shift with ones on the superdiagonal and in the bottom-left corner.
    pub fn shift(dim: usize) -> Self {
        let mut entries = DMatrix::zeros(dim, dim);
        for row in 0..dim {
            entries[(row, (row + 1) % dim)] = Complex64::new(1.0, 0.0);
        }
        Self {
            label: format!("X{dim}"),
            entries,
        }
    }

    pub fn dim(&self) -> usize {
        self.entries.nrows()
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn entries(&self) -> &DMatrix<Complex64> {
        &self.entries
    }

    pub fn with_label(mut self, label: impl Into<String>) -> Self {
        self.label = label.into();
        self
    }

    pub fn adjoint(&self) -> Self {
        Self {
            label: format!("{}^dag", self.label),
            entries: self.entries.adjoint(),
        }
    }

    /// Matrix product `self · rhs`.
    pub fn compose(&self, rhs: &Operator) -> Result<Self> {
        self.check_dim(rhs.dim())?;
        Ok(Self {
            label: format!("{}*{}", self.label, rhs.label),
            entries: &self.entries * &rhs.entries,
        })
    }

    /// `self + c·I`.
    pub fn shifted(&self, c: Complex64) -> Self {
        let mut entries = self.entries.clone();
        for k in 0..self.dim() {
            entries[(k, k)] += c;
        }
        Self {
            label: format!("{}+c", self.label),
            entries,
        }
    }

    pub fn scaled(&self, c: Complex64) -> Self {
        Self {
            label: self.label.clone(),
            entries: &self.entries * c,
        }
    }

    pub fn apply(&self, v: &DVector<Complex64>) -> DVector<Complex64> {
        &self.entries * v
    }

    pub fn powi(&self, k: u32) -> Self {
        let mut acc = DMatrix::identity(self.dim(), self.dim());
        for _ in 0..k {
            acc = &acc * &self.entries;
        }
        Self {
            label: format!("{}^{k}", self.label),
            entries: acc,
        }
    }

    /// Frobenius norm of `O·O† − I`.
    pub fn unitarity_defect(&self) -> f64 {
        let prod = &self.entries * self.entries.adjoint();
        (prod - DMatrix::identity(self.dim(), self.dim())).norm()
    }

    /// Frobenius norm of `O³ − I`.
    pub fn cube_defect(&self) -> f64 {
        (self.powi(3).entries - DMatrix::identity(self.dim(), self.dim())).norm()
    }

    /// Largest entry modulus of `O − O†`.
    pub fn hermiticity_defect(&self) -> f64 {
        max_abs(&(&self.entries - self.entries.adjoint()))
    }

    /// Largest entry modulus of `O·O† − O†·O`.
    pub fn normality_defect(&self) -> f64 {
        let a = &self.entries * self.entries.adjoint();
        let b = self.entries.adjoint() * &self.entries;
        max_abs(&(a - b))
    }

    /// Largest entry modulus of the commutator `[self, other]`.
    pub fn commutator_norm(&self, other: &Operator) -> f64 {
        let xy = &self.entries * &other.entries;
        let yx = &other.entries * &self.entries;
        max_abs(&(xy - yx))
    }

    pub(crate) fn check_dim(&self, dim: usize) -> Result<()> {
        if self.dim() != dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                got: dim,
            });
        }
        Ok(())
    }
}

pub(crate) fn max_abs(m: &DMatrix<Complex64>) -> f64 {
    m.iter().map(|z| z.norm()).fold(0.0, f64::max)
}

/// Kronecker product `m ⊗ n`; the first factor indexes the outer blocks.
pub fn tensor_product(m: &Operator, n: &Operator) -> Operator {
    Operator {
        label: format!("{}(x){}", m.label, n.label),
        entries: m.entries.kronecker(&n.entries),
    }
}

/// Returns `λ` with `|λ| = 1` such that `x·y = λ·y·x`, or `None` when no
/// such scalar exists.
///
/// The candidate is read off the largest-modulus entry of `x·y` and then
/// verified against every entry.
pub fn commutation_phase(x: &Operator, y: &Operator) -> Option<Complex64> {
    if x.dim() != y.dim() {
        return None;
    }
    let xy = &x.entries * &y.entries;
    let yx = &y.entries * &x.entries;
    let (idx, pivot) = xy
        .iter()
        .enumerate()
        .max_by(|a, b| a.1.norm().total_cmp(&b.1.norm()))?;
    let denom = yx.as_slice()[idx];
    if pivot.norm() <= PHASE_TOLERANCE || denom.norm() <= PHASE_TOLERANCE {
        return None;
    }
    let lambda = pivot / denom;
    if (lambda.norm() - 1.0).abs() > PHASE_TOLERANCE {
        return None;
    }
    let residual = max_abs(&(xy - yx * lambda));
    (residual <= PHASE_TOLERANCE).then_some(lambda)
}
