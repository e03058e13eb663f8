//! Complex dense matrices, the canonical bases (identity, Fourier, spectral)
//! and floating-point MU / orthogonality residuals.
//!
//! Everything here is `f64`; it is used for sanity checks and for verifying
//! candidate vectors, never for certificates.

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::{Error, Result};

/// Tolerance for unitarity and unit-norm checks.
pub const UNITARY_TOL: f64 = 1e-12;

#[derive(Clone, Debug, PartialEq)]
pub struct ComplexMatrix {
    rows: usize,
    cols: usize,
    data: Vec<Complex64>,
}

impl ComplexMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![Complex64::new(0.0, 0.0); rows * cols],
        }
    }

    pub fn from_row_major(rows: usize, cols: usize, data: Vec<Complex64>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(Error::LengthMismatch {
                expected: rows * cols,
                got: data.len(),
            });
        }
        Ok(Self { rows, cols, data })
    }

    pub fn identity(d: usize) -> Self {
        let mut m = Self::zeros(d, d);
        for i in 0..d {
            m[(i, i)] = Complex64::new(1.0, 0.0);
        }
        m
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn column(&self, k: usize) -> Vec<Complex64> {
        (0..self.rows).map(|i| self[(i, k)]).collect()
    }

    pub fn columns(&self) -> Vec<Vec<Complex64>> {
        (0..self.cols).map(|k| self.column(k)).collect()
    }

    pub fn adjoint(&self) -> Self {
        let mut out = Self::zeros(self.cols, self.rows);
        for i in 0..self.rows {
            for j in 0..self.cols {
                out[(j, i)] = self[(i, j)].conj();
            }
        }
        out
    }

    pub fn matmul(&self, other: &ComplexMatrix) -> Result<ComplexMatrix> {
        if self.cols != other.rows {
            return Err(Error::DimensionMismatch {
                expected: self.cols,
                got: other.rows,
            });
        }
        let mut out = Self::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self[(i, k)];
                for j in 0..other.cols {
                    out.data[i * other.cols + j] += a * other[(k, j)];
                }
            }
        }
        Ok(out)
    }

    /// `max |(M†M - I)_{jk}|`.
    pub fn unitarity_defect(&self) -> f64 {
        let g = self.adjoint().matmul(self).expect("square product");
        let mut worst: f64 = 0.0;
        for i in 0..g.rows {
            for j in 0..g.cols {
                let target = if i == j { 1.0 } else { 0.0 };
                worst = worst.max((g[(i, j)] - target).norm());
            }
        }
        worst
    }

    pub fn is_unitary(&self) -> bool {
        self.rows == self.cols && self.unitarity_defect() <= UNITARY_TOL
    }
}

impl std::ops::Index<(usize, usize)> for ComplexMatrix {
    type Output = Complex64;

    fn index(&self, (i, j): (usize, usize)) -> &Complex64 {
        &self.data[i * self.cols + j]
    }
}

impl std::ops::IndexMut<(usize, usize)> for ComplexMatrix {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut Complex64 {
        &mut self.data[i * self.cols + j]
    }
}

#[derive(Serialize, Deserialize)]
struct MatrixJson {
    rows: usize,
    cols: usize,
    re: Vec<f64>,
    im: Vec<f64>,
}

impl Serialize for ComplexMatrix {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        MatrixJson {
            rows: self.rows,
            cols: self.cols,
            re: self.data.iter().map(|z| z.re).collect(),
            im: self.data.iter().map(|z| z.im).collect(),
        }
        .serialize(s)
    }
}

impl<'de> Deserialize<'de> for ComplexMatrix {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let j = MatrixJson::deserialize(d)?;
        if j.re.len() != j.im.len() {
            return Err(serde::de::Error::custom("re/im length mismatch"));
        }
        let data = j.re.into_iter().zip(j.im).map(|(re, im)| Complex64::new(re, im)).collect();
        ComplexMatrix::from_row_major(j.rows, j.cols, data).map_err(serde::de::Error::custom)
    }
}

fn root_of_unity(d: usize, k: usize) -> Complex64 {
    Complex64::from_polar(1.0, 2.0 * PI * (k % d) as f64 / d as f64)
}

/// `F_{jk} = ω^{jk} / √d`, `ω = exp(2πi/d)`.
pub fn fourier_matrix(d: usize) -> Result<ComplexMatrix> {
    if d == 0 {
        return Err(Error::InvalidDimension(d));
    }
    let scale = 1.0 / (d as f64).sqrt();
    let mut m = ComplexMatrix::zeros(d, d);
    for j in 0..d {
        for k in 0..d {
            m[(j, k)] = root_of_unity(d, j * k) * scale;
        }
    }
    Ok(m)
}

/// The 6×6 spectral matrix; entries are powers of the cube root of unity
/// `ω = exp(2πi/3)` over √6. With a sixth root in place of ω the matrix is
/// not unitary.
pub fn spectral_matrix() -> ComplexMatrix {
    const POWERS: [[usize; 6]; 6] = [
        [0, 0, 0, 0, 0, 0],
        [0, 0, 1, 1, 2, 2],
        [0, 1, 0, 2, 2, 1],
        [0, 1, 2, 0, 1, 2],
        [0, 2, 2, 1, 0, 1],
        [0, 2, 1, 2, 1, 0],
    ];
    let scale = 1.0 / 6f64.sqrt();
    let mut m = ComplexMatrix::zeros(6, 6);
    for (j, row) in POWERS.iter().enumerate() {
        for (k, &p) in row.iter().enumerate() {
            m[(j, k)] = root_of_unity(3, p) * scale;
        }
    }
    m
}

/// Groups of unit vectors in `C^d`; each group is meant to be orthonormal.
#[derive(Clone, Debug, PartialEq)]
pub struct VectorSet {
    dim: usize,
    groups: Vec<Vec<Vec<Complex64>>>,
}

impl VectorSet {
    pub fn new(dim: usize, groups: Vec<Vec<Vec<Complex64>>>) -> Result<Self> {
        for v in groups.iter().flatten() {
            if v.len() != dim {
                return Err(Error::DimensionMismatch {
                    expected: dim,
                    got: v.len(),
                });
            }
            let norm = v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
            if (norm - 1.0).abs() > UNITARY_TOL {
                return Err(Error::InvalidSpec(format!("vector norm {norm} is not 1")));
            }
        }
        Ok(Self { dim, groups })
    }

    /// One group per matrix, holding its columns.
    pub fn from_matrices(ms: &[&ComplexMatrix]) -> Result<Self> {
        let dim = ms.first().map(|m| m.rows()).unwrap_or(0);
        Self::new(dim, ms.iter().map(|m| m.columns()).collect())
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn groups(&self) -> &[Vec<Vec<Complex64>>] {
        &self.groups
    }
}

/// Which residual [`mu_residual`] measures.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ResidualMode {
    /// `max | |⟨u|v⟩|² - 1/d |` over all pairs `u ∈ a`, `v ∈ b`.
    Unbiased,
    /// `max |⟨u|v⟩|²` over distinct pairs within one group.
    Orthogonal,
}

pub fn inner(u: &[Complex64], v: &[Complex64]) -> Complex64 {
    u.iter().zip(v).map(|(a, b)| a.conj() * b).sum()
}

/// Floating-point deviation from the MU (or orthogonality) conditions.
///
/// In [`ResidualMode::Orthogonal`] mode `b` is ignored and the
/// orthogonality residual of `a` is returned.
pub fn mu_residual(a: &[Vec<Complex64>], b: &[Vec<Complex64>], d: usize, mode: ResidualMode) -> Result<f64> {
    for v in a.iter().chain(b) {
        if v.len() != d {
            return Err(Error::DimensionMismatch { expected: d, got: v.len() });
        }
    }
    let target = 1.0 / d as f64;
    let mut worst: f64 = 0.0;
    match mode {
        ResidualMode::Unbiased => {
            for u in a {
                for v in b {
                    worst = worst.max((inner(u, v).norm_sqr() - target).abs());
                }
            }
        }
        ResidualMode::Orthogonal => {
            for (i, u) in a.iter().enumerate() {
                for v in &a[i + 1..] {
                    worst = worst.max(inner(u, v).norm_sqr());
                }
            }
        }
    }
    Ok(worst)
}
