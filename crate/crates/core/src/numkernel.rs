//! Small dense matrix kernel.
//!
//! Everything here targets matrices of dimension at most a few dozen: the
//! correlation supermatrices of a node pair are `2k x 2k` with `k` the number
//! of attributes. Symmetric spectra come from cyclic Jacobi rotations,
//! non-symmetric ones from Householder reduction to Hessenberg form followed by
//! Francis double-shift QR.

use std::cmp::Ordering;
use std::fmt;
use std::ops::{Index, IndexMut};

use crate::error::{Error, Result};

/// Absolute symmetry tolerance, scaled by `max(1, max|a_ij|)`.
pub const SYMMETRY_TOL: f64 = 1e-12;
/// Eigenvalue floor (relative to the largest eigenvalue) for positive-definiteness.
pub const PD_TOL: f64 = 1e-10;
/// Condition-number cap for [`inverse`].
pub const CONDITION_CAP: f64 = 1e12;

const JACOBI_MAX_SWEEPS: usize = 100;
const QR_MAX_ITER_PER_ROOT: usize = 60;

/// Dense row-major matrix.
#[derive(Clone, PartialEq)]
pub struct Matrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl Matrix {
    pub fn new(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        if rows == 0 || cols == 0 {
            return Err(Error::EmptyInput);
        }
        if data.len() != rows * cols {
            return Err(Error::LengthMismatch {
                left: data.len(),
                right: rows * cols,
            });
        }
        Ok(Matrix { rows, cols, data })
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        assert!(rows > 0 && cols > 0, "matrix dimensions must be positive");
        Matrix {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Matrix::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = 1.0;
        }
        m
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut m = Matrix::zeros(rows, cols);
        for i in 0..rows {
            for j in 0..cols {
                m[(i, j)] = f(i, j);
            }
        }
        m
    }

    /// Builds a matrix from nested rows. Panics on ragged input.
    pub fn from_rows<R: AsRef<[f64]>>(rows: &[R]) -> Self {
        let cols = rows[0].as_ref().len();
        let mut data = Vec::with_capacity(rows.len() * cols);
        for r in rows {
            assert_eq!(r.as_ref().len(), cols, "ragged rows");
            data.extend_from_slice(r.as_ref());
        }
        Matrix {
            rows: rows.len(),
            cols,
            data,
        }
    }

    pub fn diag(values: &[f64]) -> Self {
        let mut m = Matrix::zeros(values.len(), values.len());
        for (i, &v) in values.iter().enumerate() {
            m[(i, i)] = v;
        }
        m
    }

    /// Assembles `[[a, b], [c, d]]` from four blocks.
    pub fn block(a: &Matrix, b: &Matrix, c: &Matrix, d: &Matrix) -> Result<Self> {
        if a.rows != b.rows || c.rows != d.rows || a.cols != c.cols || b.cols != d.cols {
            return Err(Error::DimensionMismatch("incompatible block shapes".into()));
        }
        let rows = a.rows + c.rows;
        let cols = a.cols + b.cols;
        Ok(Matrix::from_fn(rows, cols, |i, j| {
            match (i < a.rows, j < a.cols) {
                (true, true) => a[(i, j)],
                (true, false) => b[(i, j - a.cols)],
                (false, true) => c[(i - a.rows, j)],
                (false, false) => d[(i - a.rows, j - a.cols)],
            }
        }))
    }

    /// Copies the sub-block starting at `(r0, c0)`.
    pub fn sub_block(&self, r0: usize, c0: usize, rows: usize, cols: usize) -> Matrix {
        Matrix::from_fn(rows, cols, |i, j| self[(r0 + i, c0 + j)])
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn column(&self, j: usize) -> Vec<f64> {
        (0..self.rows).map(|i| self[(i, j)]).collect()
    }

    pub fn transpose(&self) -> Matrix {
        Matrix::from_fn(self.cols, self.rows, |i, j| self[(j, i)])
    }

    pub fn matmul(&self, other: &Matrix) -> Result<Matrix> {
        if self.cols != other.rows {
            return Err(Error::DimensionMismatch(format!(
                "{}x{} times {}x{}",
                self.rows, self.cols, other.rows, other.cols
            )));
        }
        let mut out = Matrix::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self[(i, k)];
                if a == 0.0 {
                    continue;
                }
                for j in 0..other.cols {
                    out[(i, j)] += a * other[(k, j)];
                }
            }
        }
        Ok(out)
    }

    pub fn mul_vec(&self, v: &[f64]) -> Vec<f64> {
        assert_eq!(v.len(), self.cols);
        (0..self.rows)
            .map(|i| self.row(i).iter().zip(v).map(|(a, b)| a * b).sum())
            .collect()
    }

    /// `vᵀ A w`.
    pub fn bilinear(&self, v: &[f64], w: &[f64]) -> f64 {
        let aw = self.mul_vec(w);
        v.iter().zip(&aw).map(|(a, b)| a * b).sum()
    }

    pub fn scale(&self, s: f64) -> Matrix {
        Matrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|x| x * s).collect(),
        }
    }

    pub fn trace(&self) -> f64 {
        (0..self.rows.min(self.cols)).map(|i| self[(i, i)]).sum()
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |m, x| m.max(x.abs()))
    }

    /// Largest entrywise difference; `INFINITY` on shape mismatch.
    pub fn max_abs_diff(&self, other: &Matrix) -> f64 {
        if self.rows != other.rows || self.cols != other.cols {
            return f64::INFINITY;
        }
        self.data
            .iter()
            .zip(&other.data)
            .fold(0.0, |m, (a, b)| m.max((a - b).abs()))
    }

    pub fn asymmetry(&self) -> f64 {
        let mut worst: f64 = 0.0;
        for i in 0..self.rows {
            for j in (i + 1)..self.cols {
                worst = worst.max((self[(i, j)] - self[(j, i)]).abs());
            }
        }
        worst
    }

    /// Fails unless square and symmetric within [`SYMMETRY_TOL`].
    pub fn check_symmetric(&self) -> Result<()> {
        self.check_square()?;
        let asym = self.asymmetry();
        if asym > SYMMETRY_TOL * self.max_abs().max(1.0) {
            return Err(Error::NotSymmetric { asymmetry: asym });
        }
        Ok(())
    }

    fn check_square(&self) -> Result<()> {
        if !self.is_square() {
            return Err(Error::NotSquare {
                rows: self.rows,
                cols: self.cols,
            });
        }
        Ok(())
    }

    /// One-norm (maximum absolute column sum).
    pub fn norm1(&self) -> f64 {
        (0..self.cols)
            .map(|j| (0..self.rows).map(|i| self[(i, j)].abs()).sum::<f64>())
            .fold(0.0, f64::max)
    }
}

impl Index<(usize, usize)> for Matrix {
    type Output = f64;

    #[inline]
    fn index(&self, (i, j): (usize, usize)) -> &f64 {
        debug_assert!(i < self.rows && j < self.cols);
        &self.data[i * self.cols + j]
    }
}

impl IndexMut<(usize, usize)> for Matrix {
    #[inline]
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut f64 {
        debug_assert!(i < self.rows && j < self.cols);
        &mut self.data[i * self.cols + j]
    }
}

impl fmt::Debug for Matrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "Matrix {}x{} [", self.rows, self.cols)?;
        for i in 0..self.rows {
            writeln!(f, "  {:?}", self.row(i))?;
        }
        write!(f, "]")
    }
}

/// Eigenvalues with column-aligned unit eigenvectors.
#[derive(Debug, Clone)]
pub struct EigenResult {
    pub values: Vec<f64>,
    /// Column `l` is the eigenvector for `values[l]`.
    pub vectors: Matrix,
}

impl EigenResult {
    pub fn vector(&self, l: usize) -> Vec<f64> {
        self.vectors.column(l)
    }
}

fn mean(x: &[f64]) -> f64 {
    x.iter().sum::<f64>() / x.len() as f64
}

/// Sample Pearson correlation of two equal-length vectors.
pub fn pearson_corr(x: &[f64], y: &[f64]) -> Result<f64> {
    if x.len() != y.len() {
        return Err(Error::LengthMismatch {
            left: x.len(),
            right: y.len(),
        });
    }
    if x.len() < 3 {
        return Err(Error::InsufficientSamples {
            needed: 3,
            got: x.len(),
        });
    }
    if x.iter().chain(y).any(|v| !v.is_finite()) {
        return Err(Error::NonFiniteInput);
    }
    let (mx, my) = (mean(x), mean(y));
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (a, b) in x.iter().zip(y) {
        let (dx, dy) = (a - mx, b - my);
        sxy += dx * dy;
        sxx += dx * dx;
        syy += dy * dy;
    }
    if sxx == 0.0 {
        return Err(Error::ZeroVariance { column: 0 });
    }
    if syy == 0.0 {
        return Err(Error::ZeroVariance { column: 1 });
    }
    Ok((sxy / (sxx * syy).sqrt()).clamp(-1.0, 1.0))
}

/// Sample correlation matrix of the columns of an `n x d` block.
pub fn corr_matrix(samples: &Matrix) -> Result<Matrix> {
    let (n, d) = (samples.rows(), samples.cols());
    if n < 3 {
        return Err(Error::InsufficientSamples { needed: 3, got: n });
    }
    if samples.as_slice().iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFiniteInput);
    }
    // standardized columns
    let mut z = vec![vec![0.0; n]; d];
    for (c, col) in z.iter_mut().enumerate() {
        let raw = samples.column(c);
        let m = mean(&raw);
        let ss: f64 = raw.iter().map(|v| (v - m) * (v - m)).sum();
        if ss == 0.0 {
            return Err(Error::ZeroVariance { column: c });
        }
        let inv = 1.0 / ss.sqrt();
        for (dst, v) in col.iter_mut().zip(&raw) {
            *dst = (v - m) * inv;
        }
    }
    let mut out = Matrix::identity(d);
    for a in 0..d {
        for b in (a + 1)..d {
            let r: f64 = z[a].iter().zip(&z[b]).map(|(u, v)| u * v).sum();
            let r = r.clamp(-1.0, 1.0);
            out[(a, b)] = r;
            out[(b, a)] = r;
        }
    }
    Ok(out)
}

/// Flips `v` so its first non-negligible component is positive, then normalizes.
fn canonicalize(v: &mut [f64]) {
    let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    if norm > 0.0 {
        v.iter_mut().for_each(|x| *x /= norm);
    }
    if let Some(first) = v.iter().find(|x| x.abs() > 1e-14) {
        if *first < 0.0 {
            v.iter_mut().for_each(|x| *x = -*x);
        }
    }
}

fn lex_desc(a: &[f64], b: &[f64]) -> Ordering {
    for (x, y) in a.iter().zip(b) {
        match y.partial_cmp(x).unwrap_or(Ordering::Equal) {
            Ordering::Equal => continue,
            o => return o,
        }
    }
    Ordering::Equal
}

/// Sorts eigenpairs by `key` descending; near-ties fall back to the value, then
/// to the eigenvector compared lexicographically.
fn sort_pairs(pairs: &mut [(f64, Vec<f64>)], key: impl Fn(f64) -> f64, scale: f64) {
    let tie = 1e-12 * scale.max(1.0);
    pairs.sort_by(|(la, va), (lb, vb)| {
        let (ka, kb) = (key(*la), key(*lb));
        if (ka - kb).abs() > tie {
            return kb.partial_cmp(&ka).unwrap_or(Ordering::Equal);
        }
        if (la - lb).abs() > tie {
            return lb.partial_cmp(la).unwrap_or(Ordering::Equal);
        }
        lex_desc(va, vb)
    });
}

fn pack(pairs: Vec<(f64, Vec<f64>)>) -> EigenResult {
    let n = pairs.len();
    let mut vectors = Matrix::zeros(n, n);
    let mut values = Vec::with_capacity(n);
    for (l, (value, v)) in pairs.into_iter().enumerate() {
        values.push(value);
        for (i, x) in v.into_iter().enumerate() {
            vectors[(i, l)] = x;
        }
    }
    EigenResult { values, vectors }
}

/// Full spectral decomposition of a symmetric matrix by cyclic Jacobi rotations.
///
/// Values are sorted descending.
pub fn sym_eigen(a: &Matrix) -> Result<EigenResult> {
    a.check_symmetric()?;
    let n = a.rows();
    // work on the exactly symmetrized copy
    let mut m = Matrix::from_fn(n, n, |i, j| 0.5 * (a[(i, j)] + a[(j, i)]));
    let mut v = Matrix::identity(n);
    let total: f64 = m.as_slice().iter().map(|x| x * x).sum::<f64>().sqrt();

    let mut converged = n == 1;
    for _ in 0..JACOBI_MAX_SWEEPS {
        let off: f64 = (0..n)
            .flat_map(|i| (0..n).filter(move |&j| j != i).map(move |j| (i, j)))
            .map(|(i, j)| m[(i, j)] * m[(i, j)])
            .sum::<f64>()
            .sqrt();
        if off <= 1e-15 * total || off == 0.0 {
            converged = true;
            break;
        }
        for p in 0..n {
            for q in (p + 1)..n {
                let apq = m[(p, q)];
                if apq == 0.0 {
                    continue;
                }
                let theta = (m[(q, q)] - m[(p, p)]) / (2.0 * apq);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let t = if theta == 0.0 { 1.0 } else { t };
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for k in 0..n {
                    let (mkp, mkq) = (m[(k, p)], m[(k, q)]);
                    m[(k, p)] = c * mkp - s * mkq;
                    m[(k, q)] = s * mkp + c * mkq;
                }
                for k in 0..n {
                    let (mpk, mqk) = (m[(p, k)], m[(q, k)]);
                    m[(p, k)] = c * mpk - s * mqk;
                    m[(q, k)] = s * mpk + c * mqk;
                }
                for k in 0..n {
                    let (vkp, vkq) = (v[(k, p)], v[(k, q)]);
                    v[(k, p)] = c * vkp - s * vkq;
                    v[(k, q)] = s * vkp + c * vkq;
                }
            }
        }
    }
    if !converged {
        return Err(Error::NoConvergence {
            iterations: JACOBI_MAX_SWEEPS,
        });
    }
    let mut pairs: Vec<(f64, Vec<f64>)> = (0..n)
        .map(|l| {
            let mut vec = v.column(l);
            canonicalize(&mut vec);
            (m[(l, l)], vec)
        })
        .collect();
    sort_pairs(&mut pairs, |x| x, a.max_abs());
    Ok(pack(pairs))
}

/// Eigen-decomposition of a general square matrix with real spectrum.
///
/// Values are sorted descending by absolute value; ties are ordered by signed
/// value. Fails with [`Error::ComplexSpectrum`] when a genuinely complex pair
/// appears.
pub fn general_eigen(a: &Matrix) -> Result<EigenResult> {
    a.check_square()?;
    if a.as_slice().iter().any(|x| !x.is_finite()) {
        return Err(Error::NonFiniteInput);
    }
    let n = a.rows();
    let mut h: Vec<Vec<f64>> = (0..n).map(|i| a.row(i).to_vec()).collect();
    let mut v = vec![vec![0.0; n]; n];
    orthes(&mut h, &mut v);
    let (d, _) = hqr2(&mut h, &mut v)?;

    let mut pairs: Vec<(f64, Vec<f64>)> = (0..n)
        .map(|l| {
            let mut vec: Vec<f64> = (0..n).map(|i| v[i][l]).collect();
            canonicalize(&mut vec);
            (d[l], vec)
        })
        .collect();
    sort_pairs(&mut pairs, f64::abs, a.max_abs());
    Ok(pack(pairs))
}

// Householder reduction to upper Hessenberg form, accumulating the
// orthogonal transform in `v` (EISPACK orthes/ortran).
fn orthes(h: &mut [Vec<f64>], v: &mut [Vec<f64>]) {
    let n = h.len();
    let (low, high) = (0usize, n - 1);
    let mut ort = vec![0.0; n];
    for m in (low + 1)..high {
        let scale: f64 = (m..=high).map(|i| h[i][m - 1].abs()).sum();
        if scale == 0.0 {
            continue;
        }
        let mut hh = 0.0;
        for i in (m..=high).rev() {
            ort[i] = h[i][m - 1] / scale;
            hh += ort[i] * ort[i];
        }
        let mut g = hh.sqrt();
        if ort[m] > 0.0 {
            g = -g;
        }
        hh -= ort[m] * g;
        ort[m] -= g;
        for j in m..n {
            let f: f64 = (m..=high).rev().map(|i| ort[i] * h[i][j]).sum::<f64>() / hh;
            for i in m..=high {
                h[i][j] -= f * ort[i];
            }
        }
        for i in 0..=high {
            let f: f64 = (m..=high).rev().map(|j| ort[j] * h[i][j]).sum::<f64>() / hh;
            for j in m..=high {
                h[i][j] -= f * ort[j];
            }
        }
        ort[m] *= scale;
        h[m][m - 1] = scale * g;
    }
    for (i, row) in v.iter_mut().enumerate() {
        for (j, x) in row.iter_mut().enumerate() {
            *x = if i == j { 1.0 } else { 0.0 };
        }
    }
    for m in ((low + 1)..high).rev() {
        if h[m][m - 1] == 0.0 {
            continue;
        }
        for i in (m + 1)..=high {
            ort[i] = h[i][m - 1];
        }
        for j in m..=high {
            let g: f64 = (m..=high).map(|i| ort[i] * v[i][j]).sum();
            let g = (g / ort[m]) / h[m][m - 1];
            for i in m..=high {
                v[i][j] += g * ort[i];
            }
        }
    }
}

// Francis double-shift QR on the Hessenberg matrix followed by
// back-substitution for the eigenvectors (EISPACK hqr2, real-spectrum path).
// Returns (eigenvalues, imaginary parts); eigenvectors overwrite `v`.
fn hqr2(h: &mut [Vec<f64>], v: &mut [Vec<f64>]) -> Result<(Vec<f64>, Vec<f64>)> {
    let nn = h.len();
    let eps = f64::EPSILON;
    let mut d = vec![0.0; nn];
    let mut e = vec![0.0; nn];
    let mut exshift = 0.0;
    let (mut p, mut q, mut r) = (0.0f64, 0.0f64, 0.0f64);
    let (mut s, mut z): (f64, f64);
    let (mut w, mut x, mut y);

    let mut norm = 0.0;
    for (i, row) in h.iter().enumerate() {
        for val in row.iter().skip(i.saturating_sub(1)) {
            norm += val.abs();
        }
    }
    // Complex pairs with imaginary part below this are round-off splits of a
    // repeated real root.
    if norm == 0.0 {
        return Ok((d, e));
    }
    let imag_tol = 1e-9 * norm;

    let mut n = nn as isize - 1;
    let low: isize = 0;
    let mut iter = 0usize;
    let mut total_iter = 0usize;
    while n >= low {
        let nu = n as usize;
        let mut l = n;
        while l > low {
            let lu = l as usize;
            s = h[lu - 1][lu - 1].abs() + h[lu][lu].abs();
            if s == 0.0 {
                s = norm;
            }
            if h[lu][lu - 1].abs() <= eps * s {
                break;
            }
            l -= 1;
        }

        if l == n {
            h[nu][nu] += exshift;
            d[nu] = h[nu][nu];
            e[nu] = 0.0;
            n -= 1;
            iter = 0;
        } else if l == n - 1 {
            w = h[nu][nu - 1] * h[nu - 1][nu];
            p = (h[nu - 1][nu - 1] - h[nu][nu]) / 2.0;
            q = p * p + w;
            z = q.abs().sqrt();
            h[nu][nu] += exshift;
            h[nu - 1][nu - 1] += exshift;
            x = h[nu][nu];
            if q < 0.0 && z > imag_tol {
                return Err(Error::ComplexSpectrum { re: x + p, im: z });
            }
            if q < 0.0 {
                z = 0.0;
            }
            z = if p >= 0.0 { p + z } else { p - z };
            d[nu - 1] = x + z;
            d[nu] = d[nu - 1];
            if z != 0.0 {
                d[nu] = x - w / z;
            }
            e[nu - 1] = 0.0;
            e[nu] = 0.0;
            x = h[nu][nu - 1];
            s = x.abs() + z.abs();
            if s == 0.0 {
                // block already triangular
                n -= 2;
                iter = 0;
                continue;
            }
            p = x / s;
            q = z / s;
            r = (p * p + q * q).sqrt();
            p /= r;
            q /= r;
            for j in (nu - 1)..nn {
                z = h[nu - 1][j];
                h[nu - 1][j] = q * z + p * h[nu][j];
                h[nu][j] = q * h[nu][j] - p * z;
            }
            for row in h.iter_mut().take(nu + 1) {
                z = row[nu - 1];
                row[nu - 1] = q * z + p * row[nu];
                row[nu] = q * row[nu] - p * z;
            }
            for row in v.iter_mut() {
                z = row[nu - 1];
                row[nu - 1] = q * z + p * row[nu];
                row[nu] = q * row[nu] - p * z;
            }
            n -= 2;
            iter = 0;
        } else {
            x = h[nu][nu];
            y = 0.0;
            w = 0.0;
            if l < n {
                y = h[nu - 1][nu - 1];
                w = h[nu][nu - 1] * h[nu - 1][nu];
            }
            if iter == 10 {
                exshift += x;
                for i in 0..=nu {
                    h[i][i] -= x;
                }
                s = h[nu][nu - 1].abs() + h[nu - 1][nu - 2].abs();
                x = 0.75 * s;
                y = x;
                w = -0.4375 * s * s;
            }
            if iter == 30 {
                s = (y - x) / 2.0;
                s = s * s + w;
                if s > 0.0 {
                    s = s.sqrt();
                    if y < x {
                        s = -s;
                    }
                    s = x - w / ((y - x) / 2.0 + s);
                    for i in 0..=nu {
                        h[i][i] -= s;
                    }
                    exshift += s;
                    x = 0.964;
                    y = x;
                    w = x;
                }
            }
            iter += 1;
            total_iter += 1;
            if total_iter > QR_MAX_ITER_PER_ROOT * nn {
                return Err(Error::NoConvergence {
                    iterations: total_iter,
                });
            }

            let mut m = n - 2;
            while m >= l {
                let mu = m as usize;
                z = h[mu][mu];
                r = x - z;
                s = y - z;
                p = (r * s - w) / h[mu + 1][mu] + h[mu][mu + 1];
                q = h[mu + 1][mu + 1] - z - r - s;
                r = h[mu + 2][mu + 1];
                s = p.abs() + q.abs() + r.abs();
                p /= s;
                q /= s;
                r /= s;
                if m == l {
                    break;
                }
                if h[mu][mu - 1].abs() * (q.abs() + r.abs())
                    < eps
                        * (p.abs()
                            * (h[mu - 1][mu - 1].abs() + z.abs() + h[mu + 1][mu + 1].abs()))
                {
                    break;
                }
                m -= 1;
            }
            let mu = m as usize;
            for i in (mu + 2)..=nu {
                h[i][i - 2] = 0.0;
                if i > mu + 2 {
                    h[i][i - 3] = 0.0;
                }
            }

            for k in mu..nu {
                let notlast = k != nu - 1;
                if k != mu {
                    p = h[k][k - 1];
                    q = h[k + 1][k - 1];
                    r = if notlast { h[k + 2][k - 1] } else { 0.0 };
                    x = p.abs() + q.abs() + r.abs();
                    if x == 0.0 {
                        continue;
                    }
                    p /= x;
                    q /= x;
                    r /= x;
                }
                s = (p * p + q * q + r * r).sqrt();
                if p < 0.0 {
                    s = -s;
                }
                if s != 0.0 {
                    if k != mu {
                        h[k][k - 1] = -s * x;
                    } else if l != m {
                        h[k][k - 1] = -h[k][k - 1];
                    }
                    p += s;
                    x = p / s;
                    y = q / s;
                    z = r / s;
                    q /= p;
                    r /= p;
                    for j in k..nn {
                        p = h[k][j] + q * h[k + 1][j];
                        if notlast {
                            p += r * h[k + 2][j];
                            h[k + 2][j] -= p * z;
                        }
                        h[k][j] -= p * x;
                        h[k + 1][j] -= p * y;
                    }
                    for i in 0..=nu.min(k + 3) {
                        p = x * h[i][k] + y * h[i][k + 1];
                        if notlast {
                            p += z * h[i][k + 2];
                            h[i][k + 2] -= p * r;
                        }
                        h[i][k] -= p;
                        h[i][k + 1] -= p * q;
                    }
                    for row in v.iter_mut() {
                        p = x * row[k] + y * row[k + 1];
                        if notlast {
                            p += z * row[k + 2];
                            row[k + 2] -= p * r;
                        }
                        row[k] -= p;
                        row[k + 1] -= p * q;
                    }
                }
            }
        }
    }

    // back-substitution on the (now upper triangular) Schur form
    for n in (0..nn).rev() {
        let p = d[n];
        let mut l = n;
        h[n][n] = 1.0;
        for i in (0..n).rev() {
            let w = h[i][i] - p;
            let r: f64 = (l..=n).map(|j| h[i][j] * h[j][n]).sum();
            l = i;
            h[i][n] = if w != 0.0 { -r / w } else { -r / (eps * norm) };
            let t = h[i][n].abs();
            if (eps * t) * t > 1.0 {
                for row in h.iter_mut().take(n + 1).skip(i) {
                    row[n] /= t;
                }
            }
        }
    }

    for j in (0..nn).rev() {
        for i in 0..nn {
            let z: f64 = (0..=j).map(|k| v[i][k] * h[k][j]).sum();
            v[i][j] = z;
        }
    }
    Ok((d, e))
}

/// Lower-triangular Cholesky factor `L` with `L Lᵀ = a`.
pub fn cholesky(a: &Matrix) -> Result<Matrix> {
    a.check_symmetric()?;
    let n = a.rows();
    let tol = PD_TOL * (0..n).map(|i| a[(i, i)].abs()).fold(0.0, f64::max);
    let mut l = Matrix::zeros(n, n);
    for j in 0..n {
        let mut pivot = a[(j, j)];
        for k in 0..j {
            pivot -= l[(j, k)] * l[(j, k)];
        }
        if !(pivot > tol) {
            return Err(Error::NotPositiveDefinite { pivot: j });
        }
        let ljj = pivot.sqrt();
        l[(j, j)] = ljj;
        for i in (j + 1)..n {
            let mut s = a[(i, j)];
            for k in 0..j {
                s -= l[(i, k)] * l[(j, k)];
            }
            l[(i, j)] = s / ljj;
        }
    }
    Ok(l)
}

/// True iff every eigenvalue exceeds [`PD_TOL`] times the largest one.
pub fn is_positive_definite(a: &Matrix) -> Result<bool> {
    let eig = sym_eigen(a)?;
    let largest = eig.values[0];
    if !(largest > 0.0) {
        return Ok(false);
    }
    Ok(eig.values.iter().all(|&v| v > PD_TOL * largest))
}

/// Matrix inverse by Gauss-Jordan elimination with partial pivoting.
pub fn inverse(a: &Matrix) -> Result<Matrix> {
    a.check_square()?;
    let n = a.rows();
    let mut m = a.clone();
    let mut inv = Matrix::identity(n);
    let scale = a.max_abs();
    if scale == 0.0 {
        return Err(Error::Singular);
    }
    for col in 0..n {
        let (pivot_row, pivot_abs) = (col..n)
            .map(|r| (r, m[(r, col)].abs()))
            .fold((col, -1.0), |best, cur| if cur.1 > best.1 { cur } else { best });
        if pivot_abs <= f64::EPSILON * scale * n as f64 {
            return Err(Error::Singular);
        }
        if pivot_row != col {
            for j in 0..n {
                let tmp = m[(col, j)];
                m[(col, j)] = m[(pivot_row, j)];
                m[(pivot_row, j)] = tmp;
                let tmp = inv[(col, j)];
                inv[(col, j)] = inv[(pivot_row, j)];
                inv[(pivot_row, j)] = tmp;
            }
        }
        let p = m[(col, col)];
        for j in 0..n {
            m[(col, j)] /= p;
            inv[(col, j)] /= p;
        }
        for r in 0..n {
            if r == col {
                continue;
            }
            let f = m[(r, col)];
            if f == 0.0 {
                continue;
            }
            for j in 0..n {
                m[(r, j)] -= f * m[(col, j)];
                inv[(r, j)] -= f * inv[(col, j)];
            }
        }
    }
    let condition = a.norm1() * inv.norm1();
    if !condition.is_finite() || condition > CONDITION_CAP {
        return Err(Error::IllConditioned { condition });
    }
    Ok(inv)
}

/// `ln det(a)` for a symmetric positive-definite matrix.
pub fn log_det_spd(a: &Matrix) -> Result<f64> {
    let l = cholesky(a)?;
    Ok((0..l.rows()).map(|i| 2.0 * l[(i, i)].ln()).sum())
}

/// Raises eigenvalues below `floor` to `floor`.
///
/// Returns the repaired matrix and the largest eigenvalue change applied.
pub fn floor_eigenvalues(a: &Matrix, floor: f64) -> Result<(Matrix, f64)> {
    let eig = sym_eigen(a)?;
    let n = a.rows();
    let mut max_change: f64 = 0.0;
    let clamped: Vec<f64> = eig
        .values
        .iter()
        .map(|&v| {
            let c = v.max(floor);
            max_change = max_change.max(c - v);
            c
        })
        .collect();
    if max_change == 0.0 {
        return Ok((a.clone(), 0.0));
    }
    let out = Matrix::from_fn(n, n, |i, j| {
        (0..n)
            .map(|l| eig.vectors[(i, l)] * clamped[l] * eig.vectors[(j, l)])
            .sum()
    });
    // restore exact symmetry
    let out = Matrix::from_fn(n, n, |i, j| 0.5 * (out[(i, j)] + out[(j, i)]));
    Ok((out, max_change))
}
