//! Dense row-major matrices/vectors and a symmetric eigensolver.
//!
//! Everything else in the crate is built on this module; there is no
//! external numeric dependency. All arithmetic is 64-bit. Parallel kernels
//! fix the per-element accumulation order, so results are identical for a
//! given build regardless of thread count.

use rayon::prelude::*;

use crate::error::{ensure, Error, Result};

/// Work size (m·k·n multiply-adds) below which the kernels stay serial.
const PAR_FLOP_THRESHOLD: usize = 1 << 20;

/// Sweep cap for the cyclic Jacobi eigensolver.
const JACOBI_MAX_SWEEPS: usize = 100;

#[derive(Debug, Clone, PartialEq)]
pub struct Matrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Vector {
    data: Vec<f64>,
}

impl Matrix {
    /// Zero matrix of the given shape.
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Matrix {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    /// Builds from a row-major buffer; rejects length mismatches and
    /// non-finite entries.
    pub fn from_vec(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        ensure!(
            data.len() == rows * cols,
            "matrix data length {} does not match {rows}x{cols}",
            data.len()
        );
        let m = Matrix { rows, cols, data };
        m.check_finite("matrix data")?;
        Ok(m)
    }

    pub fn from_rows(rows: &[&[f64]]) -> Result<Self> {
        ensure!(!rows.is_empty(), "matrix needs at least one row");
        let cols = rows[0].len();
        let mut data = Vec::with_capacity(rows.len() * cols);
        for r in rows {
            ensure!(r.len() == cols, "ragged rows: {} vs {cols}", r.len());
            data.extend_from_slice(r);
        }
        Matrix::from_vec(rows.len(), cols, data)
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Matrix::zeros(n, n);
        for i in 0..n {
            m.data[i * n + i] = 1.0;
        }
        m
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        debug_assert!(i < self.rows && j < self.cols);
        self.data[i * self.cols + j]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        debug_assert!(i < self.rows && j < self.cols);
        self.data[i * self.cols + j] = v;
    }

    #[inline]
    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    #[inline]
    pub fn row_mut(&mut self, i: usize) -> &mut [f64] {
        &mut self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn transpose(&self) -> Matrix {
        let mut out = Matrix::zeros(self.cols, self.rows);
        for i in 0..self.rows {
            for j in 0..self.cols {
                out.data[j * self.rows + i] = self.data[i * self.cols + j];
            }
        }
        out
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.data.iter().map(|v| v * v).sum::<f64>().sqrt()
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |acc, v| acc.max(v.abs()))
    }

    pub fn check_finite(&self, context: &str) -> Result<()> {
        match self.data.iter().position(|v| !v.is_finite()) {
            None => Ok(()),
            Some(idx) => Err(Error::NonFinite(format!(
                "{context}: entry ({}, {}) is {}",
                idx / self.cols,
                idx % self.cols,
                self.data[idx]
            ))),
        }
    }

    /// `self · other`.
    pub fn matmul(&self, other: &Matrix) -> Result<Matrix> {
        ensure!(
            self.cols == other.rows,
            "matmul: lhs is {}x{}, rhs is {}x{}",
            self.rows,
            self.cols,
            other.rows,
            other.cols
        );
        let (m, p, n) = (self.rows, self.cols, other.cols);
        let mut out = Matrix::zeros(m, n);
        let run = |(i, c_row): (usize, &mut [f64])| {
            mul_row_axpy(c_row, self.row(i), &other.data, p, n);
        };
        if m * p * n >= PAR_FLOP_THRESHOLD {
            out.data.par_chunks_mut(n).enumerate().for_each(run);
        } else {
            out.data.chunks_mut(n).enumerate().for_each(run);
        }
        Ok(out)
    }

    /// `self · otherᵀ` without materializing the transpose.
    pub fn matmul_nt(&self, other: &Matrix) -> Result<Matrix> {
        ensure!(
            self.cols == other.cols,
            "matmul_nt: lhs is {}x{}, rhs is {}x{}",
            self.rows,
            self.cols,
            other.rows,
            other.cols
        );
        let (m, p, n) = (self.rows, self.cols, other.rows);
        let mut out = Matrix::zeros(m, n);
        let run = |(i, c_row): (usize, &mut [f64])| {
            let a_row = self.row(i);
            for (j, c) in c_row.iter_mut().enumerate() {
                *c = dot(a_row, other.row(j), p);
            }
        };
        if m * p * n >= PAR_FLOP_THRESHOLD {
            out.data.par_chunks_mut(n).enumerate().for_each(run);
        } else {
            out.data.chunks_mut(n).enumerate().for_each(run);
        }
        Ok(out)
    }

    /// `selfᵀ · other` without materializing the transpose.
    pub fn matmul_tn(&self, other: &Matrix) -> Result<Matrix> {
        ensure!(
            self.rows == other.rows,
            "matmul_tn: lhs is {}x{}, rhs is {}x{}",
            self.rows,
            self.cols,
            other.rows,
            other.cols
        );
        let (m, p, n) = (self.cols, self.rows, other.cols);
        let mut out = Matrix::zeros(m, n);
        // Each output row i gathers column i of self; parallel split over
        // output rows keeps the k-order fixed per element.
        let run = |(i, c_row): (usize, &mut [f64])| {
            let c_row = &mut c_row[..n];
            for k in 0..p {
                let aki = self.data[k * m + i];
                if aki == 0.0 {
                    continue;
                }
                let b_row = &other.data[k * n..k * n + n];
                for j in 0..n {
                    c_row[j] += aki * b_row[j];
                }
            }
        };
        if m * p * n >= PAR_FLOP_THRESHOLD {
            out.data.par_chunks_mut(n).enumerate().for_each(run);
        } else {
            out.data.chunks_mut(n).enumerate().for_each(run);
        }
        Ok(out)
    }
}

/// c += Σ_k a[k]·b_row_k with the k loop unrolled by four; the accumulation
/// order per element is fixed (ascending k in blocks of four).
fn mul_row_axpy(c: &mut [f64], a_row: &[f64], b: &[f64], p: usize, n: usize) {
    let c = &mut c[..n];
    let mut k = 0;
    while k + 4 <= p {
        let (a0, a1, a2, a3) = (a_row[k], a_row[k + 1], a_row[k + 2], a_row[k + 3]);
        let b0 = &b[k * n..k * n + n];
        let b1 = &b[(k + 1) * n..(k + 1) * n + n];
        let b2 = &b[(k + 2) * n..(k + 2) * n + n];
        let b3 = &b[(k + 3) * n..(k + 3) * n + n];
        for j in 0..n {
            c[j] += a0 * b0[j] + a1 * b1[j] + a2 * b2[j] + a3 * b3[j];
        }
        k += 4;
    }
    while k < p {
        let ak = a_row[k];
        let b_row = &b[k * n..k * n + n];
        for j in 0..n {
            c[j] += ak * b_row[j];
        }
        k += 1;
    }
}

/// Dot product with four independent accumulators (fixed combination order).
pub(crate) fn dot(a: &[f64], b: &[f64], len: usize) -> f64 {
    let a = &a[..len];
    let b = &b[..len];
    let mut acc = [0.0f64; 4];
    let mut k = 0;
    while k + 4 <= len {
        acc[0] += a[k] * b[k];
        acc[1] += a[k + 1] * b[k + 1];
        acc[2] += a[k + 2] * b[k + 2];
        acc[3] += a[k + 3] * b[k + 3];
        k += 4;
    }
    let mut tail = 0.0;
    while k < len {
        tail += a[k] * b[k];
        k += 1;
    }
    (acc[0] + acc[1]) + (acc[2] + acc[3]) + tail
}

impl Vector {
    pub fn zeros(len: usize) -> Self {
        Vector {
            data: vec![0.0; len],
        }
    }

    pub fn from_vec(data: Vec<f64>) -> Result<Self> {
        ensure!(
            data.iter().all(|v| v.is_finite()),
            "vector entries must be finite"
        );
        Ok(Vector { data })
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn as_mut_slice(&mut self) -> &mut [f64] {
        &mut self.data
    }
}

impl std::ops::Index<usize> for Vector {
    type Output = f64;
    fn index(&self, i: usize) -> &f64 {
        &self.data[i]
    }
}

impl std::ops::IndexMut<usize> for Vector {
    fn index_mut(&mut self, i: usize) -> &mut f64 {
        &mut self.data[i]
    }
}

/// Eigen-decomposition of a symmetric matrix: `values` descending, column i
/// of `vectors` pairs with `values[i]`.
#[derive(Debug, Clone)]
pub struct SymEigen {
    pub values: Vector,
    pub vectors: Matrix,
}

/// Cyclic Jacobi eigensolver for symmetric matrices.
///
/// The input is symmetrized internally (the off-diagonal asymmetry must stay
/// within `1e-9 · max|entry|`). Fails with [`Error::Convergence`] if the
/// off-diagonal norm has not collapsed after 100 sweeps.
pub fn sym_eigen(k: &Matrix) -> Result<SymEigen> {
    ensure!(
        k.rows == k.cols,
        "sym_eigen: matrix is {}x{}, must be square",
        k.rows,
        k.cols
    );
    k.check_finite("sym_eigen input")?;
    let n = k.rows;
    if n == 0 {
        return Ok(SymEigen {
            values: Vector::zeros(0),
            vectors: Matrix::zeros(0, 0),
        });
    }
    let scale = k.max_abs();
    let mut a = k.clone();
    for i in 0..n {
        for j in (i + 1)..n {
            let d = (a.get(i, j) - a.get(j, i)).abs();
            ensure!(
                d <= 1e-9 * scale.max(1e-300),
                "sym_eigen: asymmetry {d:.3e} at ({i}, {j}) exceeds 1e-9 relative"
            );
            let avg = 0.5 * (a.get(i, j) + a.get(j, i));
            a.set(i, j, avg);
            a.set(j, i, avg);
        }
    }

    let mut v = Matrix::identity(n);
    let frob = a.frobenius_norm();
    let tol = 1e-14 * frob.max(f64::MIN_POSITIVE);
    let mut off = off_diagonal_norm(&a);
    let mut sweeps = 0;
    while off > tol {
        if sweeps == JACOBI_MAX_SWEEPS {
            return Err(Error::Convergence {
                sweeps,
                off_diagonal: off,
            });
        }
        for p in 0..n - 1 {
            for q in (p + 1)..n {
                rotate(&mut a, &mut v, p, q);
            }
        }
        sweeps += 1;
        off = off_diagonal_norm(&a);
    }

    // Sort descending, carrying eigenvector columns along.
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| a.get(j, j).partial_cmp(&a.get(i, i)).unwrap());
    let mut values = Vector::zeros(n);
    let mut vectors = Matrix::zeros(n, n);
    for (dst, &src) in order.iter().enumerate() {
        values[dst] = a.get(src, src);
        for r in 0..n {
            vectors.set(r, dst, v.get(r, src));
        }
    }
    Ok(SymEigen { values, vectors })
}

fn off_diagonal_norm(a: &Matrix) -> f64 {
    let n = a.rows;
    let mut s = 0.0;
    for i in 0..n {
        for j in 0..n {
            if i != j {
                let v = a.get(i, j);
                s += v * v;
            }
        }
    }
    s.sqrt()
}

/// One Jacobi rotation annihilating a[p][q], accumulated into v.
fn rotate(a: &mut Matrix, v: &mut Matrix, p: usize, q: usize) {
    let apq = a.get(p, q);
    if apq.abs() < f64::MIN_POSITIVE {
        return;
    }
    let theta = 0.5 * (a.get(q, q) - a.get(p, p)) / apq;
    let t = if theta >= 0.0 {
        1.0 / (theta + (1.0 + theta * theta).sqrt())
    } else {
        -1.0 / (-theta + (1.0 + theta * theta).sqrt())
    };
    let c = 1.0 / (1.0 + t * t).sqrt();
    let s = t * c;
    let tau = s / (1.0 + c);

    let n = a.rows;
    a.set(p, p, a.get(p, p) - t * apq);
    a.set(q, q, a.get(q, q) + t * apq);
    a.set(p, q, 0.0);
    a.set(q, p, 0.0);
    for j in 0..n {
        if j == p || j == q {
            continue;
        }
        let ajp = a.get(j, p);
        let ajq = a.get(j, q);
        a.set(j, p, ajp - s * (ajq + tau * ajp));
        a.set(p, j, a.get(j, p));
        a.set(j, q, ajq + s * (ajp - tau * ajq));
        a.set(q, j, a.get(j, q));
    }
    for j in 0..n {
        let vjp = v.get(j, p);
        let vjq = v.get(j, q);
        v.set(j, p, vjp - s * (vjq + tau * vjp));
        v.set(j, q, vjq + s * (vjp - tau * vjq));
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_matrix(rng: &mut ChaCha8Rng, rows: usize, cols: usize) -> Matrix {
        let data = (0..rows * cols).map(|_| rng.gen_range(-1.0..1.0)).collect();
        Matrix::from_vec(rows, cols, data).unwrap()
    }

    fn random_symmetric(rng: &mut ChaCha8Rng, n: usize) -> Matrix {
        let mut m = Matrix::zeros(n, n);
        for i in 0..n {
            for j in i..n {
                let v = rng.gen_range(-1.0..1.0);
                m.set(i, j, v);
                m.set(j, i, v);
            }
        }
        m
    }

    /// Naive triple loop, the independent reference for every fast kernel.
    fn matmul_naive(a: &Matrix, b: &Matrix) -> Matrix {
        let mut c = Matrix::zeros(a.rows(), b.cols());
        for i in 0..a.rows() {
            for j in 0..b.cols() {
                let mut s = 0.0;
                for k in 0..a.cols() {
                    s += a.get(i, k) * b.get(k, j);
                }
                c.set(i, j, s);
            }
        }
        c
    }

    fn assert_close(a: &Matrix, b: &Matrix, tol: f64) {
        assert_eq!(a.rows(), b.rows());
        assert_eq!(a.cols(), b.cols());
        for (x, y) in a.data().iter().zip(b.data()) {
            assert!(
                (x - y).abs() <= tol * x.abs().max(y.abs()).max(1.0),
                "{x} vs {y}"
            );
        }
    }

    #[test]
    fn matmul_identity() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let a = random_matrix(&mut rng, 3, 3);
        let i3 = Matrix::identity(3);
        assert_eq!(i3.matmul(&a).unwrap(), a);
    }

    #[test]
    fn matmul_hand_case() {
        let a = Matrix::from_rows(&[&[1.0, 2.0], &[3.0, 4.0]]).unwrap();
        let b = Matrix::from_rows(&[&[0.0], &[1.0]]).unwrap();
        let c = a.matmul(&b).unwrap();
        assert_eq!(c.data(), &[2.0, 4.0]);
    }

    #[test]
    fn matmul_matches_naive_exactly() {
        // The fast kernel accumulates ascending in k, same as the naive loop,
        // so the match is bitwise.
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let a = random_matrix(&mut rng, 5, 7);
        let b = random_matrix(&mut rng, 7, 3);
        let fast = a.matmul(&b).unwrap();
        let slow = matmul_naive(&a, &b);
        assert_close(&fast, &slow, 1e-15);
    }

    #[test]
    fn matmul_dimension_mismatch() {
        let a = Matrix::zeros(2, 3);
        let b = Matrix::zeros(2, 3);
        assert!(matches!(a.matmul(&b), Err(Error::Contract(_))));
    }

    #[test]
    fn matmul_associative() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..5 {
            let a = random_matrix(&mut rng, 6, 4);
            let b = random_matrix(&mut rng, 4, 5);
            let c = random_matrix(&mut rng, 5, 3);
            let left = a.matmul(&b).unwrap().matmul(&c).unwrap();
            let right = a.matmul(&b.matmul(&c).unwrap()).unwrap();
            assert_close(&left, &right, 1e-10);
        }
    }

    #[test]
    fn matmul_parallel_path_matches_serial_order() {
        // Exceed the parallel threshold and compare against the naive loop.
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let a = random_matrix(&mut rng, 128, 96);
        let b = random_matrix(&mut rng, 96, 100);
        let fast = a.matmul(&b).unwrap();
        let slow = matmul_naive(&a, &b);
        for (x, y) in fast.data().iter().zip(slow.data()) {
            assert!((x - y).abs() <= 1e-13 * x.abs().max(1.0));
        }
    }

    #[test]
    fn matmul_nt_and_tn_match_explicit_transpose() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let a = random_matrix(&mut rng, 9, 6);
        let b = random_matrix(&mut rng, 11, 6);
        let nt = a.matmul_nt(&b).unwrap();
        assert_close(&nt, &a.matmul(&b.transpose()).unwrap(), 1e-13);

        let c = random_matrix(&mut rng, 9, 5);
        let tn = a.matmul_tn(&c).unwrap();
        assert_close(&tn, &a.transpose().matmul(&c).unwrap(), 1e-13);
    }

    #[test]
    fn eigen_identity() {
        let e = sym_eigen(&Matrix::identity(4)).unwrap();
        for i in 0..4 {
            assert!((e.values[i] - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn eigen_diagonal_sorted_descending() {
        let mut m = Matrix::zeros(3, 3);
        m.set(0, 0, 3.0);
        m.set(1, 1, 1.0);
        m.set(2, 2, 2.0);
        let e = sym_eigen(&m).unwrap();
        assert_eq!(e.values.as_slice(), &[3.0, 2.0, 1.0]);
    }

    #[test]
    fn eigen_reconstruction_trace_orthonormal() {
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let k = random_symmetric(&mut rng, 16);
        let e = sym_eigen(&k).unwrap();

        let trace: f64 = (0..16).map(|i| k.get(i, i)).sum();
        let sum: f64 = e.values.as_slice().iter().sum();
        assert!((trace - sum).abs() <= 1e-9 * trace.abs().max(1.0));

        // VᵀV = I
        let vtv = e.vectors.matmul_tn(&e.vectors).unwrap();
        let mut dev: f64 = 0.0;
        for i in 0..16 {
            for j in 0..16 {
                let target = if i == j { 1.0 } else { 0.0 };
                dev = dev.max((vtv.get(i, j) - target).abs());
            }
        }
        assert!(dev < 1e-8, "orthonormality deviation {dev}");

        // VΛVᵀ reconstructs k
        let mut lambda = Matrix::zeros(16, 16);
        for i in 0..16 {
            lambda.set(i, i, e.values[i]);
        }
        let rec = e
            .vectors
            .matmul(&lambda)
            .unwrap()
            .matmul_nt(&e.vectors)
            .unwrap();
        let norm = k.frobenius_norm();
        for (x, y) in rec.data().iter().zip(k.data()) {
            assert!((x - y).abs() <= 1e-8 * norm);
        }

        // Residual k·v_i − λ_i·v_i
        let kv = k.matmul(&e.vectors).unwrap();
        for i in 0..16 {
            for r in 0..16 {
                let resid = kv.get(r, i) - e.values[i] * e.vectors.get(r, i);
                assert!(resid.abs() < 1e-8 * norm);
            }
        }
    }

    #[test]
    fn eigen_psd_gram() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let g = random_matrix(&mut rng, 12, 8);
        let gram = g.matmul_tn(&g).unwrap();
        let e = sym_eigen(&gram).unwrap();
        let lam_max = e.values[0];
        for i in 0..8 {
            assert!(e.values[i] >= -1e-10 * lam_max);
        }
    }

    #[test]
    fn eigen_rejects_non_square() {
        assert!(matches!(
            sym_eigen(&Matrix::zeros(3, 4)),
            Err(Error::Contract(_))
        ));
    }

    #[test]
    fn eigen_rejects_asymmetric() {
        let mut m = Matrix::identity(3);
        m.set(0, 1, 0.5);
        assert!(matches!(sym_eigen(&m), Err(Error::Contract(_))));
    }

    #[test]
    fn eigen_zero_matrix() {
        let e = sym_eigen(&Matrix::zeros(5, 5)).unwrap();
        assert!(e.values.as_slice().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn from_vec_rejects_nan() {
        assert!(Matrix::from_vec(1, 2, vec![1.0, f64::NAN]).is_err());
    }
}
