use crate::{Error, Result};

/// Dense row-major matrix of finite reals.
#[derive(Clone, Debug, PartialEq)]
pub struct Matrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl Matrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = 1.0;
        }
        m
    }

    /// Wraps row-major `data`; rejects a wrong length or non-finite entries.
    pub fn from_vec(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(Error::Shape(format!(
                "{rows}x{cols} matrix needs {} entries, got {}",
                rows * cols,
                data.len()
            )));
        }
        if let Some(i) = data.iter().position(|v| !v.is_finite()) {
            return Err(Error::Domain(format!(
                "matrix entry ({}, {}) is not finite",
                i / cols.max(1),
                i % cols.max(1)
            )));
        }
        Ok(Self { rows, cols, data })
    }

    pub fn from_rows<R: AsRef<[f64]>>(rows: &[R]) -> Result<Self> {
        let cols = rows.first().map_or(0, |r| r.as_ref().len());
        let mut data = Vec::with_capacity(rows.len() * cols);
        for (i, r) in rows.iter().enumerate() {
            let r = r.as_ref();
            if r.len() != cols {
                return Err(Error::Shape(format!(
                    "row {i} has {} entries, expected {cols}",
                    r.len()
                )));
            }
            data.extend_from_slice(r);
        }
        Self::from_vec(rows.len(), cols, data)
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.data
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    /// Mutable row access. Callers must keep entries finite.
    pub fn row_mut(&mut self, i: usize) -> &mut [f64] {
        &mut self.data[i * self.cols..(i + 1) * self.cols]
    }

    /// Copy of rows `start..end`.
    pub fn row_range(&self, start: usize, end: usize) -> Matrix {
        Matrix {
            rows: end - start,
            cols: self.cols,
            data: self.data[start * self.cols..end * self.cols].to_vec(),
        }
    }

    /// Column `j` as a contiguous vector.
    pub fn column(&self, j: usize) -> Vec<f64> {
        (0..self.rows).map(|i| self[(i, j)]).collect()
    }

    pub fn transpose(&self) -> Matrix {
        let mut t = Matrix::zeros(self.cols, self.rows);
        for i in 0..self.rows {
            for j in 0..self.cols {
                t[(j, i)] = self[(i, j)];
            }
        }
        t
    }

    pub fn matmul(&self, other: &Matrix) -> Result<Matrix> {
        if self.cols != other.rows {
            return Err(Error::Shape(format!(
                "cannot multiply {}x{} by {}x{}",
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
                let src = other.row(k);
                let dst = &mut out.data[i * other.cols..(i + 1) * other.cols];
                for (d, s) in dst.iter_mut().zip(src) {
                    *d += a * s;
                }
            }
        }
        Ok(out)
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.data.iter().map(|v| v * v).sum::<f64>().sqrt()
    }
}

impl std::ops::Index<(usize, usize)> for Matrix {
    type Output = f64;

    #[inline]
    fn index(&self, (i, j): (usize, usize)) -> &f64 {
        &self.data[i * self.cols + j]
    }
}

impl std::ops::IndexMut<(usize, usize)> for Matrix {
    #[inline]
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut f64 {
        &mut self.data[i * self.cols + j]
    }
}

/// Inner product with a fixed 4-lane accumulation order.
///
/// Element `i` goes to lane `i % 4`; the lanes are combined as
/// `(l0 + l2) + (l1 + l3)` and the sub-4 tail is added last. [`gram_lower`]
/// reproduces exactly this order, and the layout is part of the
/// reproducibility contract: changing it changes low-order bits of every fit.
/// Each step is a fused multiply-add, which is correctly rounded on every
/// target; CPUs with AVX2 and FMA take a vectorized path.
pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    #[cfg(target_arch = "x86_64")]
    if fma_available() {
        // SAFETY: the CPU supports AVX2 and FMA.
        return unsafe { dot_fma(a, b) };
    }
    dot_impl(a, b)
}

#[cfg(target_arch = "x86_64")]
#[target_feature(enable = "avx2,fma")]
fn dot_fma(a: &[f64], b: &[f64]) -> f64 {
    dot_impl(a, b)
}

#[inline(always)]
fn dot_impl(a: &[f64], b: &[f64]) -> f64 {
    let mut acc = [0.0f64; 4];
    let ca = a.chunks_exact(4);
    let cb = b.chunks_exact(4);
    let (ra, rb) = (ca.remainder(), cb.remainder());
    for (x, y) in ca.zip(cb) {
        for k in 0..4 {
            acc[k] = x[k].mul_add(y[k], acc[k]);
        }
    }
    finish(acc, ra, rb)
}

#[inline(always)]
fn finish(acc: [f64; 4], ra: &[f64], rb: &[f64]) -> f64 {
    let mut tail = 0.0;
    for (x, y) in ra.iter().zip(rb) {
        tail = x.mul_add(*y, tail);
    }
    ((acc[0] + acc[2]) + (acc[1] + acc[3])) + tail
}

/// Whether the AVX2+FMA kernels can run. The answer is cached by std.
#[cfg(target_arch = "x86_64")]
#[inline]
pub(crate) fn fma_available() -> bool {
    std::arch::is_x86_feature_detected!("avx2") && std::arch::is_x86_feature_detected!("fma")
}

/// Rows per cache block in [`gram_lower`]; a multiple of 4 so lane
/// assignment (`i % 4`) is the same as in [`dot`].
const GRAM_BLOCK_ROWS: usize = 512;

#[inline(always)]
fn accumulate_2x2(acc: &mut [[f64; 4]; 4], x0: &[f64], x1: &[f64], y0: &[f64], y1: &[f64]) {
    let [a00, a01, a10, a11] = acc;
    for ((p, q), (r, s)) in x0
        .chunks_exact(4)
        .zip(x1.chunks_exact(4))
        .zip(y0.chunks_exact(4).zip(y1.chunks_exact(4)))
    {
        for k in 0..4 {
            a00[k] = p[k].mul_add(r[k], a00[k]);
            a01[k] = p[k].mul_add(s[k], a01[k]);
            a10[k] = q[k].mul_add(r[k], a10[k]);
            a11[k] = q[k].mul_add(s[k], a11[k]);
        }
    }
}

#[inline(always)]
fn accumulate_1(acc: &mut [f64; 4], x: &[f64], y: &[f64]) {
    for (p, r) in x.chunks_exact(4).zip(y.chunks_exact(4)) {
        for k in 0..4 {
            acc[k] = p[k].mul_add(r[k], acc[k]);
        }
    }
}

#[inline(always)]
fn gram_lower_impl(rows: &[f64], k: usize, n: usize) -> Matrix {
    let row = |i: usize| &rows[i * n..(i + 1) * n];
    let m = n - n % 4;
    let pairs = k / 2;
    // Lane accumulators per (i, j), i >= j.
    let mut lanes = vec![[0.0f64; 4]; k * k];
    let mut start = 0;
    while start < m {
        let end = (start + GRAM_BLOCK_ROWS).min(m);
        let seg = |i: usize| &row(i)[start..end];
        for a in 0..pairs {
            let (i0, i1) = (2 * a, 2 * a + 1);
            for b in 0..=a {
                let (j0, j1) = (2 * b, 2 * b + 1);
                let mut acc = [
                    lanes[i0 * k + j0],
                    lanes[i0 * k + j1],
                    lanes[i1 * k + j0],
                    lanes[i1 * k + j1],
                ];
                accumulate_2x2(&mut acc, seg(i0), seg(i1), seg(j0), seg(j1));
                lanes[i0 * k + j0] = acc[0];
                lanes[i0 * k + j1] = acc[1];
                lanes[i1 * k + j0] = acc[2];
                lanes[i1 * k + j1] = acc[3];
            }
        }
        if k % 2 == 1 {
            let i = k - 1;
            for j in 0..=i {
                accumulate_1(&mut lanes[i * k + j], seg(i), seg(j));
            }
        }
        start = end;
    }
    let mut g = Matrix::zeros(k, k);
    for i in 0..k {
        for j in 0..=i {
            let v = finish(lanes[i * k + j], &row(i)[m..], &row(j)[m..]);
            g[(i, j)] = v;
            g[(j, i)] = v;
        }
    }
    g
}

#[cfg(target_arch = "x86_64")]
#[target_feature(enable = "avx2,fma")]
fn gram_lower_fma(rows: &[f64], k: usize, n: usize) -> Matrix {
    gram_lower_impl(rows, k, n)
}

/// Gram matrix `A Aᵀ` of `k` row vectors of length `n` stored back to back.
///
/// Entry `(i, j)` is bit-identical to `dot(row_i, row_j)`; the blocking
/// (2×2 register tiles, [`GRAM_BLOCK_ROWS`]-row cache tiles) and the SIMD
/// dispatch only change speed.
pub fn gram_lower(rows: &[f64], k: usize, n: usize) -> Matrix {
    assert_eq!(rows.len(), k * n, "gram_lower: {k} rows of length {n}");
    #[cfg(target_arch = "x86_64")]
    if fma_available() {
        // SAFETY: the CPU supports AVX2 and FMA.
        return unsafe { gram_lower_fma(rows, k, n) };
    }
    gram_lower_impl(rows, k, n)
}

/// Solves `(G + lambda I) B = C` for symmetric positive semi-definite `G`
/// by Cholesky factorization.
///
/// A pivot below `n * eps * max_diag` is reported as [`Error::Singular`]
/// rather than being patched into a pseudo-inverse.
pub fn solve_normal_equations(gram: &Matrix, rhs: &Matrix, lambda: f64) -> Result<Matrix> {
    let n = gram.rows();
    if gram.cols() != n || rhs.rows() != n {
        return Err(Error::Shape(format!(
            "normal equations need square {n}x{n} Gram and {n}-row rhs, got {}x{} and {}x{}",
            gram.rows(),
            gram.cols(),
            rhs.rows(),
            rhs.cols()
        )));
    }
    if !(lambda >= 0.0 && lambda.is_finite()) {
        return Err(Error::Domain(format!(
            "ridge lambda must be >= 0, got {lambda}"
        )));
    }
    let mut l = gram.clone();
    let max_diag = (0..n).map(|i| gram[(i, i)] + lambda).fold(0.0f64, f64::max);
    let tol = n as f64 * f64::EPSILON * max_diag;
    for j in 0..n {
        let mut d = l[(j, j)] + lambda;
        for k in 0..j {
            d -= l[(j, k)] * l[(j, k)];
        }
        if !(d > tol) {
            return Err(Error::Singular {
                column: j,
                pivot: d,
            });
        }
        let d = d.sqrt();
        l[(j, j)] = d;
        for i in j + 1..n {
            let mut s = l[(i, j)];
            for k in 0..j {
                s -= l[(i, k)] * l[(j, k)];
            }
            l[(i, j)] = s / d;
        }
    }
    let m = rhs.cols();
    let mut x = rhs.clone();
    for c in 0..m {
        // forward: L z = rhs
        for i in 0..n {
            let mut s = x[(i, c)];
            for k in 0..i {
                s -= l[(i, k)] * x[(k, c)];
            }
            x[(i, c)] = s / l[(i, i)];
        }
        // backward: Lᵀ b = z
        for i in (0..n).rev() {
            let mut s = x[(i, c)];
            for k in i + 1..n {
                s -= l[(k, i)] * x[(k, c)];
            }
            x[(i, c)] = s / l[(i, i)];
        }
    }
    Ok(x)
}

/// Minimizes `‖H B − T‖² + lambda ‖B‖²` via the normal equations.
pub fn solve_ridge_least_squares(h: &Matrix, t: &Matrix, lambda: f64) -> Result<Matrix> {
    if h.rows() != t.rows() {
        return Err(Error::Shape(format!(
            "design has {} rows but targets have {}",
            h.rows(),
            t.rows()
        )));
    }
    let ht = h.transpose();
    let gram = gram_lower(ht.as_slice(), h.cols(), h.rows());
    let rhs = ht.matmul(t)?;
    solve_normal_equations(&gram, &rhs, lambda)
}

/// `‖(HᵀH + λI)B − HᵀT‖_F / ‖HᵀT‖_F` (absolute norm when `HᵀT = 0`).
pub fn normal_equation_residual(h: &Matrix, t: &Matrix, lambda: f64, beta: &Matrix) -> Result<f64> {
    let ht = h.transpose();
    let mut lhs = ht.matmul(h)?.matmul(beta)?;
    for i in 0..beta.rows() {
        for j in 0..beta.cols() {
            lhs[(i, j)] += lambda * beta[(i, j)];
        }
    }
    let rhs = ht.matmul(t)?;
    let num = lhs
        .as_slice()
        .iter()
        .zip(rhs.as_slice())
        .map(|(a, b)| (a - b) * (a - b))
        .sum::<f64>()
        .sqrt();
    let den = rhs.frobenius_norm();
    Ok(if den > 0.0 { num / den } else { num })
}
