//! Dense complex linear algebra for the small matrices that make up a
//! constellation (dimensions up to roughly 16).
//!
//! Everything here is a pure function of its inputs. Random quantities take
//! an explicit [`rand::Rng`].

use std::fmt;
use std::ops::{Add, Deref, Index, IndexMut, Mul, Neg, Sub};

use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};

pub type C64 = Complex64;

const SVD_MAX_SWEEPS: usize = 100;
const SVD_TOLERANCE: f64 = 1e-13;
const CAYLEY_MAX_CONDITION: f64 = 1e12;
const POLAR_MAX_ITERATIONS: usize = 100;

/// Dense complex matrix stored row-major.
#[derive(Clone, PartialEq)]
pub struct CMatrix {
    rows: usize,
    cols: usize,
    data: Vec<C64>,
}

impl fmt::Debug for CMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "CMatrix {}x{} [", self.rows, self.cols)?;
        for i in 0..self.rows {
            write!(f, "  ")?;
            for j in 0..self.cols {
                let z = self[(i, j)];
                write!(f, "{:+.6}{:+.6}i  ", z.re, z.im)?;
            }
            writeln!(f)?;
        }
        write!(f, "]")
    }
}

impl CMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        assert!(rows > 0 && cols > 0, "matrix dimensions must be positive");
        CMatrix {
            rows,
            cols,
            data: vec![C64::new(0.0, 0.0); rows * cols],
        }
    }

    pub fn identity(dim: usize) -> Self {
        let mut m = Self::zeros(dim, dim);
        for i in 0..dim {
            m[(i, i)] = C64::new(1.0, 0.0);
        }
        m
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> C64) -> Self {
        let mut m = Self::zeros(rows, cols);
        for i in 0..rows {
            for j in 0..cols {
                m[(i, j)] = f(i, j);
            }
        }
        m
    }

    /// Builds a matrix from row-major entries, rejecting bad lengths and
    /// non-finite values.
    pub fn from_vec(rows: usize, cols: usize, data: Vec<C64>) -> Result<Self> {
        if rows == 0 || cols == 0 {
            return Err(Error::Shape(format!("{rows}x{cols} has an empty dimension")));
        }
        if data.len() != rows * cols {
            return Err(Error::Shape(format!(
                "{} entries for a {rows}x{cols} matrix",
                data.len()
            )));
        }
        if data.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(Error::NonFinite);
        }
        Ok(CMatrix { rows, cols, data })
    }

    pub fn from_rows(rows: &[Vec<C64>]) -> Result<Self> {
        let r = rows.len();
        let c = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|row| row.len() != c) {
            return Err(Error::Shape("ragged rows".into()));
        }
        Self::from_vec(r, c, rows.concat())
    }

    pub fn diag(entries: &[C64]) -> Self {
        let mut m = Self::zeros(entries.len(), entries.len());
        for (i, &z) in entries.iter().enumerate() {
            m[(i, i)] = z;
        }
        m
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.rows, self.cols)
    }

    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    pub fn as_slice(&self) -> &[C64] {
        &self.data
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|z| z.re.is_finite() && z.im.is_finite())
    }

    pub fn adjoint(&self) -> Self {
        Self::from_fn(self.cols, self.rows, |i, j| self[(j, i)].conj())
    }

    pub fn scale(&self, s: C64) -> Self {
        CMatrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|z| z * s).collect(),
        }
    }

    pub fn scale_real(&self, s: f64) -> Self {
        self.scale(C64::new(s, 0.0))
    }

    pub fn trace(&self) -> C64 {
        (0..self.rows.min(self.cols)).map(|i| self[(i, i)]).sum()
    }

    pub fn frobenius_norm_sqr(&self) -> f64 {
        self.data.iter().map(|z| z.norm_sqr()).sum()
    }

    /// `sqrt(sum |a_ij|^2)`.
    pub fn frobenius_norm(&self) -> f64 {
        self.frobenius_norm_sqr().sqrt()
    }

    pub fn max_abs_diff(&self, other: &CMatrix) -> f64 {
        assert_eq!(self.shape(), other.shape());
        self.data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max)
    }

    /// Rows `start..start + count` as a new matrix.
    pub fn row_block(&self, start: usize, count: usize) -> Self {
        assert!(start + count <= self.rows);
        Self::from_fn(count, self.cols, |i, j| self[(start + i, j)])
    }

    /// Columns `0..count` as a new matrix.
    pub fn leading_columns(&self, count: usize) -> Self {
        assert!(count <= self.cols);
        Self::from_fn(self.rows, count, |i, j| self[(i, j)])
    }

    /// Stacks `self` on top of `below`.
    pub fn vstack(&self, below: &CMatrix) -> Self {
        assert_eq!(self.cols, below.cols);
        let mut data = self.data.clone();
        data.extend_from_slice(&below.data);
        CMatrix {
            rows: self.rows + below.rows,
            cols: self.cols,
            data,
        }
    }

    /// `self^k` for square matrices, `k >= 0`.
    pub fn pow(&self, k: u32) -> Self {
        assert!(self.is_square());
        let mut result = Self::identity(self.rows);
        let mut base = self.clone();
        let mut e = k;
        while e > 0 {
            if e & 1 == 1 {
                result = &result * &base;
            }
            e >>= 1;
            if e > 0 {
                base = &base * &base;
            }
        }
        result
    }

    /// `‖self* self − I‖_F`.
    pub fn unitarity_defect(&self) -> f64 {
        let g = &self.adjoint() * self;
        (&g - &Self::identity(self.cols)).frobenius_norm()
    }

    pub fn determinant(&self) -> C64 {
        assert!(self.is_square(), "determinant of a non-square matrix");
        match Lu::factor(self) {
            Some(lu) => lu.determinant(),
            None => C64::new(0.0, 0.0),
        }
    }

    /// `|det m|`.
    pub fn determinant_abs(&self) -> f64 {
        self.determinant().norm()
    }

    pub fn inverse(&self) -> Result<Self> {
        if !self.is_square() {
            return Err(Error::Shape("inverse of a non-square matrix".into()));
        }
        let lu = Lu::factor(self).ok_or(Error::Singular)?;
        Ok(lu.inverse())
    }

    /// Singular values in descending order, by one-sided (Hestenes) Jacobi
    /// rotations on the columns of the taller orientation.
    pub fn singular_values(&self) -> Result<Vec<f64>> {
        if !self.is_finite() {
            return Err(Error::NonFinite);
        }
        let a = if self.rows >= self.cols {
            self.clone()
        } else {
            self.adjoint()
        };
        let (m, n) = a.shape();
        let mut cols: Vec<Vec<C64>> = (0..n)
            .map(|j| (0..m).map(|i| a[(i, j)]).collect())
            .collect();

        let mut converged = false;
        for _ in 0..SVD_MAX_SWEEPS {
            let mut rotated = false;
            for p in 0..n {
                for q in p + 1..n {
                    let alpha: f64 = cols[p].iter().map(|z| z.norm_sqr()).sum();
                    let beta: f64 = cols[q].iter().map(|z| z.norm_sqr()).sum();
                    if alpha == 0.0 || beta == 0.0 {
                        continue;
                    }
                    let gamma: C64 = cols[p]
                        .iter()
                        .zip(&cols[q])
                        .map(|(x, y)| x.conj() * y)
                        .sum();
                    let g = gamma.norm();
                    if g <= SVD_TOLERANCE * (alpha * beta).sqrt() {
                        continue;
                    }
                    rotated = true;
                    let zeta = (beta - alpha) / (2.0 * g);
                    let t = zeta.signum() / (zeta.abs() + (1.0 + zeta * zeta).sqrt());
                    let c = 1.0 / (1.0 + t * t).sqrt();
                    let s = c * t;
                    // Rotating (x, y e^{-iφ}) by a real Givens pair orthogonalises
                    // the columns; the phase is restored on y afterwards.
                    let phase = gamma / g;
                    let (left, right) = cols.split_at_mut(q);
                    let (cp, cq) = (&mut left[p], &mut right[0]);
                    for (x, y) in cp.iter_mut().zip(cq.iter_mut()) {
                        let xv = *x;
                        let yv = *y * phase.conj();
                        *x = xv * c - yv * s;
                        *y = (xv * s + yv * c) * phase;
                    }
                }
            }
            if !rotated {
                converged = true;
                break;
            }
        }
        if !converged {
            return Err(Error::SvdNonConvergence {
                sweeps: SVD_MAX_SWEEPS,
            });
        }
        let mut sv: Vec<f64> = cols
            .iter()
            .map(|c| c.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt())
            .collect();
        sv.sort_by(|a, b| b.total_cmp(a));
        Ok(sv)
    }
}

impl Index<(usize, usize)> for CMatrix {
    type Output = C64;
    fn index(&self, (i, j): (usize, usize)) -> &C64 {
        debug_assert!(i < self.rows && j < self.cols);
        &self.data[i * self.cols + j]
    }
}

impl IndexMut<(usize, usize)> for CMatrix {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut C64 {
        debug_assert!(i < self.rows && j < self.cols);
        &mut self.data[i * self.cols + j]
    }
}

impl Mul for &CMatrix {
    type Output = CMatrix;
    fn mul(self, rhs: &CMatrix) -> CMatrix {
        assert_eq!(self.cols, rhs.rows, "matrix product shape mismatch");
        let mut out = CMatrix::zeros(self.rows, rhs.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self.data[i * self.cols + k];
                let rrow = &rhs.data[k * rhs.cols..(k + 1) * rhs.cols];
                let orow = &mut out.data[i * rhs.cols..(i + 1) * rhs.cols];
                for (o, b) in orow.iter_mut().zip(rrow) {
                    *o += a * b;
                }
            }
        }
        out
    }
}

impl Add for &CMatrix {
    type Output = CMatrix;
    fn add(self, rhs: &CMatrix) -> CMatrix {
        assert_eq!(self.shape(), rhs.shape(), "matrix sum shape mismatch");
        CMatrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().zip(&rhs.data).map(|(a, b)| a + b).collect(),
        }
    }
}

impl Sub for &CMatrix {
    type Output = CMatrix;
    fn sub(self, rhs: &CMatrix) -> CMatrix {
        assert_eq!(self.shape(), rhs.shape(), "matrix difference shape mismatch");
        CMatrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().zip(&rhs.data).map(|(a, b)| a - b).collect(),
        }
    }
}

impl Neg for &CMatrix {
    type Output = CMatrix;
    fn neg(self) -> CMatrix {
        self.scale_real(-1.0)
    }
}

/// LU factorisation with partial pivoting.
struct Lu {
    lu: CMatrix,
    perm: Vec<usize>,
    sign: f64,
}

impl Lu {
    fn factor(m: &CMatrix) -> Option<Lu> {
        let n = m.rows;
        let mut lu = m.clone();
        let mut perm: Vec<usize> = (0..n).collect();
        let mut sign = 1.0;
        for k in 0..n {
            let (pivot, pmax) = (k..n)
                .map(|i| (i, lu[(i, k)].norm()))
                .fold((k, -1.0), |acc, x| if x.1 > acc.1 { x } else { acc });
            if pmax == 0.0 {
                return None;
            }
            if pivot != k {
                for j in 0..n {
                    let tmp = lu[(k, j)];
                    lu[(k, j)] = lu[(pivot, j)];
                    lu[(pivot, j)] = tmp;
                }
                perm.swap(k, pivot);
                sign = -sign;
            }
            let d = lu[(k, k)];
            for i in k + 1..n {
                let f = lu[(i, k)] / d;
                lu[(i, k)] = f;
                for j in k + 1..n {
                    let v = lu[(k, j)];
                    lu[(i, j)] -= f * v;
                }
            }
        }
        Some(Lu { lu, perm, sign })
    }

    fn determinant(&self) -> C64 {
        (0..self.lu.rows).fold(C64::new(self.sign, 0.0), |acc, i| acc * self.lu[(i, i)])
    }

    fn solve_into(&self, b: &[C64], x: &mut [C64]) {
        let n = self.lu.rows;
        for i in 0..n {
            let mut s = b[self.perm[i]];
            for j in 0..i {
                s -= self.lu[(i, j)] * x[j];
            }
            x[i] = s;
        }
        for i in (0..n).rev() {
            let mut s = x[i];
            for j in i + 1..n {
                s -= self.lu[(i, j)] * x[j];
            }
            x[i] = s / self.lu[(i, i)];
        }
    }

    fn inverse(&self) -> CMatrix {
        let n = self.lu.rows;
        let mut inv = CMatrix::zeros(n, n);
        let mut e = vec![C64::new(0.0, 0.0); n];
        let mut x = vec![C64::new(0.0, 0.0); n];
        for j in 0..n {
            e.iter_mut().for_each(|z| *z = C64::new(0.0, 0.0));
            e[j] = C64::new(1.0, 0.0);
            self.solve_into(&e, &mut x);
            for i in 0..n {
                inv[(i, j)] = x[i];
            }
        }
        inv
    }
}

fn one_norm(m: &CMatrix) -> f64 {
    (0..m.cols)
        .map(|j| (0..m.rows).map(|i| m[(i, j)].norm()).sum::<f64>())
        .fold(0.0, f64::max)
}

/// Cayley transform `(I + X)^{-1} (I − X)`.
///
/// Fails with [`Error::CayleySingular`] when the 1-norm condition estimate
/// of `I + X` exceeds 1e12, i.e. when `X` has an eigenvalue near −1.
pub fn cayley(x: &CMatrix) -> Result<CMatrix> {
    if !x.is_square() {
        return Err(Error::Shape("Cayley transform of a non-square matrix".into()));
    }
    let id = CMatrix::identity(x.rows);
    let plus = &id + x;
    let minus = &id - x;
    let lu = Lu::factor(&plus).ok_or(Error::CayleySingular {
        condition: f64::INFINITY,
    })?;
    let inv = lu.inverse();
    let condition = one_norm(&plus) * one_norm(&inv);
    if !condition.is_finite() || condition > CAYLEY_MAX_CONDITION {
        return Err(Error::CayleySingular { condition });
    }
    let out = &inv * &minus;
    if !out.is_finite() {
        return Err(Error::NonFinite);
    }
    Ok(out)
}

/// Unitary polar factor of a nonsingular square matrix (its nearest unitary
/// in Frobenius norm), by Newton iteration `X ← (X + X^{-*}) / 2`.
pub fn project_to_unitary(m: &CMatrix) -> Result<UnitaryMatrix> {
    if !m.is_square() {
        return Err(Error::ProjectionFailed("matrix is not square".into()));
    }
    if !m.is_finite() {
        return Err(Error::ProjectionFailed("matrix has non-finite entries".into()));
    }
    let scale = m.frobenius_norm();
    if scale == 0.0 {
        return Err(Error::ProjectionFailed("zero matrix".into()));
    }
    let sv = m.singular_values()?;
    if sv.last().copied().unwrap_or(0.0) <= 1e-14 * sv[0] {
        return Err(Error::ProjectionFailed("matrix is singular".into()));
    }
    let mut x = m.clone();
    for _ in 0..POLAR_MAX_ITERATIONS {
        let inv_adj = x
            .inverse()
            .map_err(|_| Error::ProjectionFailed("iterate became singular".into()))?
            .adjoint();
        let next = (&x + &inv_adj).scale_real(0.5);
        let change = (&next - &x).frobenius_norm();
        x = next;
        if change <= 1e-15 * (x.rows as f64) {
            break;
        }
    }
    let defect = x.unitarity_defect();
    if defect > UnitaryMatrix::TOLERANCE {
        return Err(Error::ProjectionFailed(format!(
            "Newton iteration stalled with defect {defect:.3e}"
        )));
    }
    Ok(UnitaryMatrix(x))
}

/// A square matrix with `‖U*U − I‖_F ≤ 1e-10`.
#[derive(Clone, Debug, PartialEq)]
pub struct UnitaryMatrix(CMatrix);

impl UnitaryMatrix {
    pub const TOLERANCE: f64 = 1e-10;
    /// Defects between [`Self::TOLERANCE`] and this are repaired by projection.
    pub const REPROJECT_LIMIT: f64 = 1e-6;

    /// Accepts `m` if unitary within tolerance, re-projects small defects,
    /// rejects the rest.
    pub fn new(m: CMatrix) -> Result<Self> {
        if !m.is_square() {
            return Err(Error::Shape(format!(
                "unitary matrix must be square, got {}x{}",
                m.rows, m.cols
            )));
        }
        if !m.is_finite() {
            return Err(Error::NonFinite);
        }
        let defect = m.unitarity_defect();
        if defect <= Self::TOLERANCE {
            Ok(UnitaryMatrix(m))
        } else if defect <= Self::REPROJECT_LIMIT {
            project_to_unitary(&m)
        } else {
            Err(Error::NotUnitary { defect })
        }
    }

    /// Nearest unitary to `m`; used for matrices printed to a few decimals.
    pub fn project(m: &CMatrix) -> Result<Self> {
        project_to_unitary(m)
    }

    pub fn identity(dim: usize) -> Self {
        UnitaryMatrix(CMatrix::identity(dim))
    }

    /// Diagonal unitary `diag(e^{i θ_k})`.
    pub fn diagonal_phases(phases: &[f64]) -> Self {
        UnitaryMatrix(CMatrix::diag(
            &phases.iter().map(|&t| C64::from_polar(1.0, t)).collect::<Vec<_>>(),
        ))
    }

    /// Haar-distributed unitary: Gram–Schmidt on a matrix of independent
    /// standard complex Gaussians. Gram–Schmidt leaves a positive real
    /// diagonal in the triangular factor, which is the phase correction that
    /// makes the result Haar.
    pub fn random<R: Rng + ?Sized>(dim: usize, rng: &mut R) -> Self {
        assert!(dim >= 1);
        loop {
            let g = CMatrix::from_fn(dim, dim, |_, _| gaussian_c64(rng));
            if let Some(q) = gram_schmidt_columns(&g) {
                return UnitaryMatrix(q);
            }
        }
    }

    pub fn dim(&self) -> usize {
        self.0.rows
    }

    pub fn as_matrix(&self) -> &CMatrix {
        &self.0
    }

    pub fn into_matrix(self) -> CMatrix {
        self.0
    }

    pub fn adjoint(&self) -> UnitaryMatrix {
        UnitaryMatrix(self.0.adjoint())
    }

    pub fn compose(&self, other: &UnitaryMatrix) -> UnitaryMatrix {
        UnitaryMatrix(&self.0 * &other.0)
    }

    /// Skew-Hermitian Cayley coordinates of this unitary.
    pub fn cayley_coordinates(&self) -> Result<SkewHermitian> {
        let s = cayley(&self.0)?;
        Ok(SkewHermitian::from_matrix_unchecked(s))
    }
}

impl Deref for UnitaryMatrix {
    type Target = CMatrix;
    fn deref(&self) -> &CMatrix {
        &self.0
    }
}

/// A matrix with `S* = −S`, parameterised by `M²` reals: the imaginary
/// parts of the diagonal followed by (re, im) of each strictly upper entry in
/// row-major order.
#[derive(Clone, Debug, PartialEq)]
pub struct SkewHermitian(CMatrix);

impl SkewHermitian {
    pub const TOLERANCE: f64 = 1e-12;

    pub fn new(m: CMatrix) -> Result<Self> {
        if !m.is_square() {
            return Err(Error::Shape("skew-Hermitian matrix must be square".into()));
        }
        let defect = (&m.adjoint() + &m).frobenius_norm();
        if defect > Self::TOLERANCE * m.frobenius_norm().max(1.0) {
            return Err(Error::validation(
                "skew-Hermitian",
                format!("‖S* + S‖_F = {defect:.3e}"),
            ));
        }
        Ok(Self::from_matrix_unchecked(m))
    }

    /// Keeps only the skew-Hermitian part `(m − m*)/2`.
    fn from_matrix_unchecked(m: CMatrix) -> Self {
        let skew = (&m - &m.adjoint()).scale_real(0.5);
        SkewHermitian(skew)
    }

    pub fn zeros(dim: usize) -> Self {
        SkewHermitian(CMatrix::zeros(dim, dim))
    }

    pub fn parameter_count(dim: usize) -> usize {
        dim * dim
    }

    pub fn from_params(dim: usize, params: &[f64]) -> Result<Self> {
        if params.len() != Self::parameter_count(dim) {
            return Err(Error::Shape(format!(
                "{} parameters for a {dim}x{dim} skew-Hermitian matrix",
                params.len()
            )));
        }
        let mut m = CMatrix::zeros(dim, dim);
        let mut it = params.iter().copied();
        for i in 0..dim {
            m[(i, i)] = C64::new(0.0, it.next().unwrap());
        }
        for i in 0..dim {
            for j in i + 1..dim {
                let z = C64::new(it.next().unwrap(), it.next().unwrap());
                m[(i, j)] = z;
                m[(j, i)] = -z.conj();
            }
        }
        Ok(SkewHermitian(m))
    }

    pub fn params(&self) -> Vec<f64> {
        let n = self.0.rows;
        let mut out = Vec::with_capacity(n * n);
        for i in 0..n {
            out.push(self.0[(i, i)].im);
        }
        for i in 0..n {
            for j in i + 1..n {
                out.push(self.0[(i, j)].re);
                out.push(self.0[(i, j)].im);
            }
        }
        out
    }

    /// Independent `N(0, sigma²)` on every free parameter.
    pub fn random<R: Rng + ?Sized>(dim: usize, sigma: f64, rng: &mut R) -> Self {
        let params: Vec<f64> = (0..Self::parameter_count(dim))
            .map(|_| sigma * rng.sample::<f64, _>(StandardNormal))
            .collect();
        Self::from_params(dim, &params).expect("parameter count matches")
    }

    pub fn dim(&self) -> usize {
        self.0.rows
    }

    pub fn as_matrix(&self) -> &CMatrix {
        &self.0
    }

    pub fn add(&self, other: &SkewHermitian) -> SkewHermitian {
        SkewHermitian(&self.0 + &other.0)
    }

    /// The Cayley transform of a skew-Hermitian matrix is unitary.
    pub fn cayley(&self) -> Result<UnitaryMatrix> {
        UnitaryMatrix::new(cayley(&self.0)?)
    }
}

impl Deref for SkewHermitian {
    type Target = CMatrix;
    fn deref(&self) -> &CMatrix {
        &self.0
    }
}

/// Standard complex Gaussian `CN(0, 1)`: independent real and imaginary
/// parts with variance 1/2 each.
pub fn gaussian_c64<R: Rng + ?Sized>(rng: &mut R) -> C64 {
    let re: f64 = rng.sample(StandardNormal);
    let im: f64 = rng.sample(StandardNormal);
    C64::new(re, im) * std::f64::consts::FRAC_1_SQRT_2
}

/// Orthonormalises the columns of `a` (rows ≥ cols) by modified Gram–Schmidt
/// with one reorthogonalisation pass. Returns `None` on rank deficiency.
pub fn gram_schmidt_columns(a: &CMatrix) -> Option<CMatrix> {
    let (m, n) = a.shape();
    assert!(m >= n);
    let mut q: Vec<Vec<C64>> = Vec::with_capacity(n);
    for j in 0..n {
        let mut v: Vec<C64> = (0..m).map(|i| a[(i, j)]).collect();
        let original: f64 = v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        for _pass in 0..2 {
            for u in &q {
                let proj: C64 = u.iter().zip(&v).map(|(x, y)| x.conj() * y).sum();
                for (vi, ui) in v.iter_mut().zip(u) {
                    *vi -= proj * ui;
                }
            }
        }
        let norm: f64 = v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        if norm <= 1e-12 * original.max(f64::MIN_POSITIVE) {
            return None;
        }
        v.iter_mut().for_each(|z| *z /= norm);
        q.push(v);
    }
    Some(CMatrix::from_fn(m, n, |i, j| q[j][i]))
}

/// Haar-random `rows × cols` orthonormal frame (a point of the Stiefel manifold).
pub fn random_frame<R: Rng + ?Sized>(rows: usize, cols: usize, rng: &mut R) -> CMatrix {
    assert!(rows >= cols);
    loop {
        let g = CMatrix::from_fn(rows, cols, |_, _| gaussian_c64(rng));
        if let Some(q) = gram_schmidt_columns(&g) {
            return q;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use std::f64::consts::{PI, SQRT_2};

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    #[test]
    fn frobenius_norm_examples() {
        assert_eq!(CMatrix::zeros(2, 2).frobenius_norm(), 0.0);
        assert!((CMatrix::identity(2).frobenius_norm() - SQRT_2).abs() < 1e-15);
        let two_i = CMatrix::identity(2).scale_real(2.0);
        assert!((two_i.frobenius_norm() - 2.0 * SQRT_2).abs() < 1e-15);
    }

    #[test]
    fn singular_values_examples() {
        assert_eq!(CMatrix::identity(2).singular_values().unwrap(), vec![1.0, 1.0]);
        let d = CMatrix::diag(&[c(3.0, 0.0), c(0.0, 0.0)]);
        assert_eq!(d.singular_values().unwrap(), vec![3.0, 0.0]);
        let wide = CMatrix::from_rows(&[vec![c(0.0, 2.0), c(0.0, 0.0), c(0.0, 0.0)]]).unwrap();
        assert_eq!(wide.singular_values().unwrap(), vec![2.0]);
    }

    #[test]
    fn singular_values_match_characteristic_polynomial_on_2x2() {
        // Oracle: eigenvalues of the Hermitian 2x2 Gram matrix G = X*X via
        // the quadratic formula.
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..200 {
            let f1 = random_frame(3, 2, &mut rng);
            let f2 = random_frame(3, 2, &mut rng);
            let x = &f1.adjoint() * &f2;
            let g = &x.adjoint() * &x;
            let tr = (g[(0, 0)] + g[(1, 1)]).re;
            let det = (g[(0, 0)] * g[(1, 1)] - g[(0, 1)] * g[(1, 0)]).re;
            let disc = (tr * tr / 4.0 - det).max(0.0).sqrt();
            let expected = [(tr / 2.0 + disc).sqrt(), (tr / 2.0 - disc).max(0.0).sqrt()];
            let sv = x.singular_values().unwrap();
            for (a, b) in sv.iter().zip(expected) {
                assert!((a - b).abs() < 1e-9, "{a} vs {b}");
                assert!(*a <= 1.0 + 1e-9 && *a >= 0.0);
            }
        }
    }

    #[test]
    fn determinant_examples() {
        assert!((CMatrix::identity(3).determinant_abs() - 1.0).abs() < 1e-15);
        let w = C64::from_polar(1.0, 2.0 * PI / 3.0);
        let d = &CMatrix::diag(&[w, w.conj()]) - &CMatrix::identity(2);
        assert!((d.determinant_abs() - 3.0).abs() < 1e-12);
    }

    #[test]
    fn su2_difference_determinant_is_sum_of_squares() {
        let su2 = |a: C64, b: C64| {
            CMatrix::from_rows(&[vec![a, b], vec![-b.conj(), a.conj()]]).unwrap()
        };
        let (a, b) = (C64::from_polar(0.6, 0.3), C64::from_polar(0.8, -1.1));
        let (cc, d) = (C64::from_polar(0.28, 2.0), C64::from_polar(0.96, 0.4));
        let diff = &su2(a, b) - &su2(cc, d);
        let expected = (a - cc).norm_sqr() + (b - d).norm_sqr();
        assert!((diff.determinant().re - expected).abs() < 1e-12);
        assert!(diff.determinant().im.abs() < 1e-12);
    }

    #[test]
    fn cayley_examples() {
        let z = CMatrix::zeros(3, 3);
        assert_eq!(cayley(&z).unwrap(), CMatrix::identity(3));
        let i1 = CMatrix::from_vec(1, 1, vec![c(0.0, 1.0)]).unwrap();
        let out = cayley(&i1).unwrap();
        assert!((out[(0, 0)] - c(0.0, -1.0)).norm() < 1e-15);
    }

    #[test]
    fn cayley_rejects_eigenvalue_minus_one() {
        let m = CMatrix::diag(&[c(-1.0, 0.0), c(1.0, 0.0)]);
        assert!(matches!(cayley(&m), Err(Error::CayleySingular { .. })));
    }

    #[test]
    fn random_unitary_dim_one_is_unit_modulus() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let u = UnitaryMatrix::random(1, &mut rng);
        assert!((u[(0, 0)].norm() - 1.0).abs() < 1e-14);
    }

    #[test]
    fn random_unitary_is_reproducible() {
        let a = UnitaryMatrix::random(2, &mut ChaCha8Rng::seed_from_u64(2024));
        let b = UnitaryMatrix::random(2, &mut ChaCha8Rng::seed_from_u64(2024));
        assert_eq!(a, b);
        assert!(a.unitarity_defect() < 1e-14);
    }

    #[test]
    fn haar_trace_second_moment() {
        // E|tr U|^2 = 1 for Haar U in U(n), n >= 1.
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let n = 10_000;
        let mean: f64 = (0..n)
            .map(|_| UnitaryMatrix::random(2, &mut rng).trace().norm_sqr())
            .sum::<f64>()
            / n as f64;
        assert!((mean - 1.0).abs() < 0.05, "mean |tr U|^2 = {mean}");
    }

    #[test]
    fn projection_examples() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let u = UnitaryMatrix::random(3, &mut rng);
        let p = project_to_unitary(&u).unwrap();
        assert!(p.max_abs_diff(&u) < 1e-12);

        let scaled = CMatrix::identity(2).scale_real(1.01);
        let p = project_to_unitary(&scaled).unwrap();
        assert!(p.max_abs_diff(&CMatrix::identity(2)) < 1e-14);

        let singular = CMatrix::diag(&[c(1.0, 0.0), c(0.0, 0.0)]);
        assert!(matches!(
            project_to_unitary(&singular),
            Err(Error::ProjectionFailed(_))
        ));
    }

    #[test]
    fn unitary_constructor_tolerances() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let u = UnitaryMatrix::random(2, &mut rng).into_matrix();
        let slightly_off = &u + &CMatrix::identity(2).scale_real(1e-8);
        let fixed = UnitaryMatrix::new(slightly_off).unwrap();
        assert!(fixed.unitarity_defect() < 1e-10);
        let far_off = &u + &CMatrix::identity(2).scale_real(1e-3);
        assert!(matches!(UnitaryMatrix::new(far_off), Err(Error::NotUnitary { .. })));
    }

    #[test]
    fn skew_hermitian_params_round_trip() {
        let params: Vec<f64> = (0..9).map(|k| k as f64 * 0.3 - 1.0).collect();
        let s = SkewHermitian::from_params(3, &params).unwrap();
        assert_eq!(s.params(), params);
        assert!((&s.adjoint() + s.as_matrix()).frobenius_norm() == 0.0);
        assert!(SkewHermitian::from_params(3, &params[..8]).is_err());
    }

    #[test]
    fn matrix_power_matches_repeated_product() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let u = UnitaryMatrix::random(3, &mut rng);
        let mut acc = CMatrix::identity(3);
        for k in 0..12 {
            assert!(u.pow(k).max_abs_diff(&acc) < 1e-13);
            acc = &acc * &u;
        }
    }

    #[test]
    fn from_vec_rejects_bad_input() {
        assert!(CMatrix::from_vec(2, 2, vec![c(0.0, 0.0); 3]).is_err());
        assert!(matches!(
            CMatrix::from_vec(1, 1, vec![c(f64::NAN, 0.0)]),
            Err(Error::NonFinite)
        ));
    }
}
