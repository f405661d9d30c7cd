//! Dense complex matrices and the Hermitian eigensolver.

use crate::error::{arg, QicError, Result};
use crate::limits;
use num_complex::Complex64;

pub type C64 = Complex64;

pub const ZERO: C64 = C64::new(0.0, 0.0);
pub const ONE: C64 = C64::new(1.0, 0.0);

/// Row-major dense complex matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct ComplexMatrix {
    rows: usize,
    cols: usize,
    data: Vec<C64>,
}

impl ComplexMatrix {
    pub fn new(rows: usize, cols: usize, data: Vec<C64>) -> Result<Self> {
        if rows == 0 || cols == 0 {
            return arg("matrix dimensions must be positive");
        }
        if rows.checked_mul(cols) != Some(data.len()) {
            return arg(format!("{} entries do not fill a {rows}x{cols} matrix", data.len()));
        }
        Ok(Self { rows, cols, data })
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![ZERO; rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m.data[i * n + i] = ONE;
        }
        m
    }

    pub fn from_real(rows: usize, cols: usize, data: &[f64]) -> Result<Self> {
        Self::new(rows, cols, data.iter().map(|&v| C64::new(v, 0.0)).collect())
    }

    pub fn diagonal(values: &[f64]) -> Self {
        let n = values.len();
        let mut m = Self::zeros(n, n);
        for (i, &v) in values.iter().enumerate() {
            m.data[i * n + i] = C64::new(v, 0.0);
        }
        m
    }

    /// Outer product |v⟩⟨v|.
    pub fn projector(v: &[C64]) -> Self {
        let n = v.len();
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            for j in 0..n {
                m.data[i * n + j] = v[i] * v[j].conj();
            }
        }
        m
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn data(&self) -> &[C64] {
        &self.data
    }

    pub fn get(&self, i: usize, j: usize) -> C64 {
        self.data[i * self.cols + j]
    }

    pub fn set(&mut self, i: usize, j: usize, v: C64) {
        self.data[i * self.cols + j] = v;
    }

    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    pub fn adjoint(&self) -> Self {
        let mut out = Self::zeros(self.cols, self.rows);
        for i in 0..self.rows {
            for j in 0..self.cols {
                out.data[j * self.rows + i] = self.data[i * self.cols + j].conj();
            }
        }
        out
    }

    pub fn matmul(&self, other: &Self) -> Result<Self> {
        if self.cols != other.rows {
            return arg(format!(
                "cannot multiply {}x{} by {}x{}",
                self.rows, self.cols, other.rows, other.cols
            ));
        }
        let mut out = Self::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            let orow = &mut out.data[i * other.cols..(i + 1) * other.cols];
            for k in 0..self.cols {
                let a = self.data[i * self.cols + k];
                if a == ZERO {
                    continue;
                }
                let brow = &other.data[k * other.cols..(k + 1) * other.cols];
                for (o, b) in orow.iter_mut().zip(brow) {
                    *o += a * b;
                }
            }
        }
        Ok(out)
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        if self.rows != other.rows || self.cols != other.cols {
            return arg("matrix shapes differ");
        }
        let data = self.data.iter().zip(&other.data).map(|(a, b)| a + b).collect();
        Ok(Self { data, ..*self })
    }

    pub fn scale(&self, s: C64) -> Self {
        Self {
            data: self.data.iter().map(|a| a * s).collect(),
            ..*self
        }
    }

    pub fn trace(&self) -> C64 {
        (0..self.rows.min(self.cols)).map(|i| self.get(i, i)).sum()
    }

    /// Largest entrywise modulus of `self − other`.
    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        if self.rows != other.rows || self.cols != other.cols {
            return f64::INFINITY;
        }
        self.data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max)
    }

    /// Largest entrywise modulus of `M − M†`.
    pub fn hermitian_deviation(&self) -> f64 {
        if !self.is_square() {
            return f64::INFINITY;
        }
        let n = self.rows;
        let mut worst: f64 = 0.0;
        for i in 0..n {
            for j in i..n {
                worst = worst.max((self.get(i, j) - self.get(j, i).conj()).norm());
            }
        }
        worst
    }

    pub fn is_hermitian(&self, tol: f64) -> bool {
        self.hermitian_deviation() <= tol
    }

    /// Deviation of `M†M` from the identity.
    pub fn isometry_deviation(&self) -> f64 {
        let g = self.adjoint().matmul(self).expect("shapes agree");
        g.max_abs_diff(&Self::identity(self.cols))
    }

    /// Deviation of `MM†` from the identity.
    pub fn coisometry_deviation(&self) -> f64 {
        let g = self.matmul(&self.adjoint()).expect("shapes agree");
        g.max_abs_diff(&Self::identity(self.rows))
    }

    pub fn mul_vec(&self, v: &[C64]) -> Vec<C64> {
        (0..self.rows)
            .map(|i| {
                self.data[i * self.cols..(i + 1) * self.cols]
                    .iter()
                    .zip(v)
                    .map(|(a, b)| a * b)
                    .sum()
            })
            .collect()
    }

    /// Columns as sparse lists of `(row, value)`.
    pub(crate) fn sparse_columns(&self) -> Vec<Vec<(usize, C64)>> {
        let mut cols = vec![Vec::new(); self.cols];
        for i in 0..self.rows {
            for (j, col) in cols.iter_mut().enumerate() {
                let v = self.data[i * self.cols + j];
                if v != ZERO {
                    col.push((i, v));
                }
            }
        }
        cols
    }
}

/// Kronecker product under the process-wide dimension cap.
pub fn kron(a: &ComplexMatrix, b: &ComplexMatrix) -> Result<ComplexMatrix> {
    kron_capped(a, b, limits::dim_cap())
}

/// Kronecker product with an explicit cap on the resulting row and column counts.
pub fn kron_capped(a: &ComplexMatrix, b: &ComplexMatrix, cap: usize) -> Result<ComplexMatrix> {
    let rows = a.rows as u128 * b.rows as u128;
    let cols = a.cols as u128 * b.cols as u128;
    let side = rows.max(cols);
    if side > cap as u128 {
        return Err(QicError::DimensionCap {
            requested: side,
            cap: cap as u128,
        });
    }
    let (rows, cols) = (rows as usize, cols as usize);
    let mut out = ComplexMatrix::zeros(rows, cols);
    for i in 0..a.rows {
        for j in 0..a.cols {
            let s = a.get(i, j);
            if s == ZERO {
                continue;
            }
            for k in 0..b.rows {
                for l in 0..b.cols {
                    out.data[(i * b.rows + k) * cols + j * b.cols + l] = s * b.get(k, l);
                }
            }
        }
    }
    Ok(out)
}

/// Real eigenvalues sorted in descending order.
#[derive(Debug, Clone, PartialEq)]
pub struct Spectrum {
    pub eigenvalues: Vec<f64>,
}

impl Spectrum {
    pub fn sum(&self) -> f64 {
        self.eigenvalues.iter().sum()
    }
}

const HERMITIAN_TOL: f64 = 1e-10;

/// Eigenvalues of a Hermitian matrix via Householder tridiagonalisation and implicit QL.
pub fn hermitian_eigenvalues(m: &ComplexMatrix) -> Result<Spectrum> {
    if !m.is_square() {
        return arg("eigenvalues need a square matrix");
    }
    if m.rows > limits::dim_cap() {
        return Err(QicError::DimensionCap {
            requested: m.rows as u128,
            cap: limits::dim_cap() as u128,
        });
    }
    let dev = m.hermitian_deviation();
    if dev > HERMITIAN_TOL {
        return Err(QicError::NotHermitian { deviation: dev });
    }
    let mut eigenvalues = eigenvalues_unchecked(m.rows, m.data.clone());
    eigenvalues.sort_by(|a, b| b.total_cmp(a));
    Ok(Spectrum { eigenvalues })
}

/// Eigenvalues of the Hermitian part of a row-major `n × n` buffer, unsorted.
pub(crate) fn eigenvalues_unchecked(n: usize, mut a: Vec<C64>) -> Vec<f64> {
    match n {
        0 => return Vec::new(),
        1 => return vec![a[0].re],
        _ => {}
    }
    for i in 0..n {
        a[i * n + i] = C64::new(a[i * n + i].re, 0.0);
        for j in i + 1..n {
            let h = (a[i * n + j] + a[j * n + i].conj()) * 0.5;
            a[i * n + j] = h;
            a[j * n + i] = h.conj();
        }
    }
    let (mut d, mut e) = tridiagonalize(n, &mut a);
    tql(&mut d, &mut e);
    d
}

/// Reduces a Hermitian matrix to a real symmetric tridiagonal one with the same spectrum.
/// Returns the diagonal and the subdiagonal moduli (`e[i]` couples `i` and `i + 1`).
fn tridiagonalize(n: usize, a: &mut [C64]) -> (Vec<f64>, Vec<f64>) {
    let mut e = vec![0.0; n];
    let mut v = vec![ZERO; n];
    let mut p = vec![ZERO; n];
    for k in 0..n.saturating_sub(2) {
        let norm: f64 = (k + 1..n).map(|i| a[i * n + k].norm_sqr()).sum::<f64>().sqrt();
        if norm == 0.0 {
            e[k] = 0.0;
            continue;
        }
        let x0 = a[(k + 1) * n + k];
        let phase = if x0.norm() == 0.0 { ONE } else { x0 / x0.norm() };
        let alpha = -phase * norm;
        for i in k + 1..n {
            v[i] = a[i * n + k];
        }
        v[k + 1] -= alpha;
        let vnorm: f64 = (k + 1..n).map(|i| v[i].norm_sqr()).sum::<f64>().sqrt();
        e[k] = norm;
        if vnorm == 0.0 {
            continue;
        }
        for vi in v.iter_mut().take(n).skip(k + 1) {
            *vi /= vnorm;
        }
        // Trailing block update: A ← A − 2 v w† − 2 w v†, with p = A v, w = p − (v†p) v.
        for i in k + 1..n {
            let row = &a[i * n + k + 1..i * n + n];
            p[i] = row.iter().zip(&v[k + 1..n]).map(|(x, y)| x * y).sum();
        }
        let vp: C64 = (k + 1..n).map(|i| v[i].conj() * p[i]).sum();
        for i in k + 1..n {
            p[i] -= vp * v[i];
        }
        for i in k + 1..n {
            let (vi, wi) = (v[i], p[i]);
            for j in k + 1..n {
                a[i * n + j] -= 2.0 * (vi * p[j].conj() + wi * v[j].conj());
            }
        }
        a[(k + 1) * n + k] = alpha;
        a[k * n + k + 1] = alpha.conj();
        for i in k + 2..n {
            a[i * n + k] = ZERO;
            a[k * n + i] = ZERO;
        }
    }
    if n >= 2 {
        e[n - 2] = a[(n - 1) * n + n - 2].norm();
    }
    e[n - 1] = 0.0;
    let d = (0..n).map(|i| a[i * n + i].re).collect();
    (d, e)
}

/// Implicit QL with Wilkinson-style shifts on a symmetric tridiagonal matrix; eigenvalues land in `d`.
fn tql(d: &mut [f64], e: &mut [f64]) {
    let n = d.len();
    for l in 0..n {
        let mut iter = 0;
        loop {
            let mut m = l;
            while m + 1 < n {
                let dd = d[m].abs() + d[m + 1].abs();
                if e[m].abs() <= f64::EPSILON * dd {
                    break;
                }
                m += 1;
            }
            if m == l {
                break;
            }
            iter += 1;
            if iter > 200 {
                break;
            }
            let mut g = (d[l + 1] - d[l]) / (2.0 * e[l]);
            let mut r = g.hypot(1.0);
            g = d[m] - d[l] + e[l] / (g + r.copysign(g));
            let (mut s, mut c, mut p) = (1.0, 1.0, 0.0);
            let mut underflow = false;
            let mut i = m;
            while i > l {
                i -= 1;
                let f = s * e[i];
                let b = c * e[i];
                r = f.hypot(g);
                e[i + 1] = r;
                if r == 0.0 {
                    d[i + 1] -= p;
                    e[m] = 0.0;
                    underflow = true;
                    break;
                }
                s = f / r;
                c = g / r;
                g = d[i + 1] - p;
                r = (d[i] - g) * s + 2.0 * c * b;
                p = s * r;
                d[i + 1] = g + p;
                g = c * r - b;
            }
            if underflow {
                continue;
            }
            d[l] -= p;
            e[l] = g;
            e[m] = 0.0;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    #[test]
    fn kron_of_identities() {
        let i2 = ComplexMatrix::identity(2);
        assert_eq!(kron(&i2, &i2).unwrap(), ComplexMatrix::identity(4));
    }

    #[test]
    fn kron_of_projectors() {
        let p0 = ComplexMatrix::diagonal(&[1.0, 0.0]);
        let p1 = ComplexMatrix::diagonal(&[0.0, 1.0]);
        assert_eq!(kron(&p0, &p1).unwrap(), ComplexMatrix::diagonal(&[0.0, 1.0, 0.0, 0.0]));
    }

    #[test]
    fn kron_respects_cap() {
        let a = ComplexMatrix::identity(64);
        assert!(matches!(
            kron_capped(&a, &a, 1000),
            Err(QicError::DimensionCap { requested: 4096, .. })
        ));
        assert!(kron_capped(&a, &a, 4096).is_ok());
    }

    #[test]
    fn pauli_x_spectrum() {
        let x = ComplexMatrix::from_real(2, 2, &[0.0, 1.0, 1.0, 0.0]).unwrap();
        let s = hermitian_eigenvalues(&x).unwrap();
        assert!((s.eigenvalues[0] - 1.0).abs() < 1e-14);
        assert!((s.eigenvalues[1] + 1.0).abs() < 1e-14);
    }

    #[test]
    fn degenerate_diagonal() {
        let s = hermitian_eigenvalues(&ComplexMatrix::diagonal(&[0.5, 0.5])).unwrap();
        assert_eq!(s.eigenvalues, vec![0.5, 0.5]);
    }

    #[test]
    fn pauli_y_spectrum() {
        let y = ComplexMatrix::new(2, 2, vec![ZERO, c(0.0, -1.0), c(0.0, 1.0), ZERO]).unwrap();
        let s = hermitian_eigenvalues(&y).unwrap();
        assert!((s.eigenvalues[0] - 1.0).abs() < 1e-14);
        assert!((s.eigenvalues[1] + 1.0).abs() < 1e-14);
    }

    #[test]
    fn rejects_non_hermitian() {
        let m = ComplexMatrix::from_real(2, 2, &[0.0, 1.0, 0.0, 0.0]).unwrap();
        assert!(matches!(hermitian_eigenvalues(&m), Err(QicError::NotHermitian { .. })));
    }

    #[test]
    fn known_three_by_three() {
        // [[2,-1,0],[-1,2,-1],[0,-1,2]] has eigenvalues 2 + √2, 2, 2 − √2.
        let m = ComplexMatrix::from_real(3, 3, &[2.0, -1.0, 0.0, -1.0, 2.0, -1.0, 0.0, -1.0, 2.0]).unwrap();
        let s = hermitian_eigenvalues(&m).unwrap();
        let r2 = 2f64.sqrt();
        for (got, want) in s.eigenvalues.iter().zip([2.0 + r2, 2.0, 2.0 - r2]) {
            assert!((got - want).abs() < 1e-13, "{got} vs {want}");
        }
    }
}
