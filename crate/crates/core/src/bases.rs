//! Measurement bases: computational, discrete Fourier, and the triangular
//! basis `C2` built from the coefficient recurrence `A_{j+1}² = Σ_{k≤j} A_k²`.

use alloc::vec::Vec;
use core::fmt;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::linalg::{self, root_of_unity};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum BasisKind {
    Position,
    Fourier,
    C2,
}

impl BasisKind {
    pub fn as_str(self) -> &'static str {
        match self {
            BasisKind::Position => "position",
            BasisKind::Fourier => "fourier",
            BasisKind::C2 => "c2",
        }
    }
}

impl fmt::Display for BasisKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl core::str::FromStr for BasisKind {
    type Err = &'static str;

    fn from_str(s: &str) -> core::result::Result<Self, Self::Err> {
        match s {
            "position" => Ok(BasisKind::Position),
            "fourier" => Ok(BasisKind::Fourier),
            "c2" => Ok(BasisKind::C2),
            _ => Err("expected one of position, fourier, c2"),
        }
    }
}

/// `A_0, …, A_d` with `A_0 = A_1 = 1` and `A_{j+1} = sqrt(Σ_{k≤j} A_k²)`.
///
/// One entry past the dimension is kept: `A_d` is the norm of the last
/// unnormalized `C2` row.
#[derive(Debug, Clone, PartialEq)]
pub struct CoeffSequence {
    values: Vec<f64>,
}

impl CoeffSequence {
    pub fn new(d: usize) -> Result<Self> {
        if d < 2 {
            return Err(Error::InvalidDimension(d));
        }
        let mut values = Vec::with_capacity(d + 1);
        values.push(1.0);
        let mut sum_sq = 1.0;
        for _ in 0..d {
            let next = libm::sqrt(sum_sq);
            sum_sq += next * next;
            values.push(next);
        }
        Ok(CoeffSequence { values })
    }

    /// Dimension `d` the sequence was built for.
    pub fn dim(&self) -> usize {
        self.values.len() - 1
    }

    /// `A_k` for `0 ≤ k ≤ d`.
    pub fn get(&self, k: usize) -> f64 {
        self.values[k]
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.values
    }

    /// `‖ψ_j‖²` of the unnormalized row: `2A_{j+1}²` for `j ≤ d-2`, `A_d²` for the last.
    pub fn row_norm_sqr(&self, j: usize) -> f64 {
        let d = self.dim();
        if j + 1 < d {
            2.0 * self.values[j + 1] * self.values[j + 1]
        } else {
            self.values[d] * self.values[d]
        }
    }
}

pub fn coeff_sequence(d: usize) -> Result<CoeffSequence> {
    CoeffSequence::new(d)
}

/// `d` orthonormal row vectors in `ℂ^d`.
#[derive(Debug, Clone, PartialEq)]
pub struct OrthonormalBasis {
    dim: usize,
    kind: BasisKind,
    rows: Vec<Complex64>,
}

impl OrthonormalBasis {
    pub fn new(kind: BasisKind, d: usize) -> Result<Self> {
        match kind {
            BasisKind::Position => Self::position(d),
            BasisKind::Fourier => Self::fourier(d),
            BasisKind::C2 => Self::c2(d),
        }
    }

    /// Rows of the identity.
    pub fn position(d: usize) -> Result<Self> {
        if d < 2 {
            return Err(Error::InvalidDimension(d));
        }
        let mut rows = alloc::vec![Complex64::new(0.0, 0.0); d * d];
        for k in 0..d {
            rows[k * d + k] = Complex64::new(1.0, 0.0);
        }
        Ok(OrthonormalBasis {
            dim: d,
            kind: BasisKind::Position,
            rows,
        })
    }

    /// Row `k` is `w^{kj}/√d` with `w = e^{2πi/d}`.
    pub fn fourier(d: usize) -> Result<Self> {
        if d < 2 {
            return Err(Error::InvalidDimension(d));
        }
        let scale = 1.0 / libm::sqrt(d as f64);
        let mut rows = Vec::with_capacity(d * d);
        for k in 0..d {
            for j in 0..d {
                rows.push(root_of_unity(k * j % d, d) * scale);
            }
        }
        Ok(OrthonormalBasis {
            dim: d,
            kind: BasisKind::Fourier,
            rows,
        })
    }

    pub fn c2(d: usize) -> Result<Self> {
        Ok(Self::c2_from_coeffs(&CoeffSequence::new(d)?))
    }

    /// Row `j < d-1` is `(A_0, …, A_j, -A_{j+1}, 0, …)/(√2·A_{j+1})`; the last
    /// row is `(A_0, …, A_{d-1})/A_d`.
    pub fn c2_from_coeffs(coeffs: &CoeffSequence) -> Self {
        let d = coeffs.dim();
        let mut rows = alloc::vec![Complex64::new(0.0, 0.0); d * d];
        for j in 0..d {
            let norm = libm::sqrt(coeffs.row_norm_sqr(j));
            let row = &mut rows[j * d..(j + 1) * d];
            if j + 1 < d {
                for (k, slot) in row.iter_mut().enumerate().take(j + 1) {
                    *slot = Complex64::new(coeffs.get(k) / norm, 0.0);
                }
                row[j + 1] = Complex64::new(-coeffs.get(j + 1) / norm, 0.0);
            } else {
                for (k, slot) in row.iter_mut().enumerate() {
                    *slot = Complex64::new(coeffs.get(k) / norm, 0.0);
                }
            }
        }
        OrthonormalBasis {
            dim: d,
            kind: BasisKind::C2,
            rows,
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn kind(&self) -> BasisKind {
        self.kind
    }

    pub fn row(&self, k: usize) -> &[Complex64] {
        &self.rows[k * self.dim..(k + 1) * self.dim]
    }

    pub fn rows(&self) -> impl Iterator<Item = &[Complex64]> {
        self.rows.chunks_exact(self.dim)
    }

    /// `max_{i,j} |⟨v_i|v_j⟩ - δ_ij|`.
    pub fn gram_deviation(&self) -> f64 {
        let mut worst = 0.0f64;
        for i in 0..self.dim {
            for j in 0..self.dim {
                let g = linalg::inner(self.row(i), self.row(j));
                let target = if i == j { 1.0 } else { 0.0 };
                worst = worst.max((g - target).norm());
            }
        }
        worst
    }
}
