//! Least squares by Householder QR with rank-revealing column dropping.

use crate::error::{Error, Result};
use crate::num::Scalar;

/// Dense column-major matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct Matrix<T> {
    rows: usize,
    cols: usize,
    data: Vec<T>,
}

impl<T: Scalar> Matrix<T> {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Matrix {
            rows,
            cols,
            data: vec![T::zero(); rows * cols],
        }
    }

    pub fn from_columns(rows: usize, columns: &[Vec<T>]) -> Self {
        let mut m = Self::zeros(rows, columns.len());
        for (j, c) in columns.iter().enumerate() {
            assert_eq!(c.len(), rows, "column {j} has the wrong length");
            m.col_mut(j).copy_from_slice(c);
        }
        m
    }

    pub fn from_row_major(rows: usize, cols: usize, values: &[T]) -> Self {
        let mut m = Self::zeros(rows, cols);
        for i in 0..rows {
            for j in 0..cols {
                m.set(i, j, values[i * cols + j]);
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

    pub fn get(&self, i: usize, j: usize) -> T {
        self.data[j * self.rows + i]
    }

    pub fn set(&mut self, i: usize, j: usize, v: T) {
        self.data[j * self.rows + i] = v;
    }

    pub fn col(&self, j: usize) -> &[T] {
        &self.data[j * self.rows..(j + 1) * self.rows]
    }

    pub fn col_mut(&mut self, j: usize) -> &mut [T] {
        &mut self.data[j * self.rows..(j + 1) * self.rows]
    }
}

fn norm<T: Scalar>(v: &[T]) -> T {
    // scaled to avoid overflow on large entries
    let scale = v.iter().fold(T::zero(), |m, x| m.max(x.abs()));
    if scale == T::zero() {
        return T::zero();
    }
    let ss: T = v.iter().map(|&x| (x / scale) * (x / scale)).sum();
    scale * ss.sqrt()
}

/// Least-squares fit. Coefficients and standard errors are indexed by
/// retained column; `retained[k]` is the original index of the k-th one.
#[derive(Debug, Clone, PartialEq)]
pub struct OlsFit<T> {
    pub coefficients: Vec<T>,
    pub std_errors: Vec<T>,
    pub retained: Vec<usize>,
    pub dropped: Vec<usize>,
    pub rss: T,
    pub residual_variance: T,
    pub n: usize,
    pub df: usize,
}

/// Solves `min ||y - X b||` by Householder QR, processing columns in order.
///
/// A column whose component orthogonal to the already retained columns has
/// norm at most `tol * ||x_j||` (tol = eps^(2/3)) is declared collinear and
/// dropped; earlier columns therefore win. Standard errors are the square
/// roots of the diagonal of `s^2 (R'R)^-1` with `s^2 = RSS / (n - p)`.
pub fn ols_qr<T: Scalar>(x: &Matrix<T>, y: &[T]) -> Result<OlsFit<T>> {
    let (n, p) = (x.rows(), x.cols());
    if y.len() != n {
        return Err(Error::Regression(format!("{} outcomes for {n} rows", y.len())));
    }
    let tol = T::rank_tolerance();
    let mut a = x.clone();
    let mut qty = y.to_vec();
    let mut retained = Vec::new();
    let mut dropped = Vec::new();
    let mut k = 0;
    for j in 0..p {
        let original = norm(x.col(j));
        let tail_norm = if k < n { norm(&a.col(j)[k..]) } else { T::zero() };
        if k >= n || original == T::zero() || tail_norm <= tol * original {
            dropped.push(j);
            continue;
        }
        // Householder vector v for rows k..n of column j
        let col = a.col(j)[k..].to_vec();
        let alpha = if col[0] > T::zero() { -tail_norm } else { tail_norm };
        let mut v = col;
        v[0] = v[0] - alpha;
        let vnorm_sq: T = v.iter().map(|&t| t * t).sum();
        if vnorm_sq > T::zero() {
            let reflect = |target: &mut [T]| {
                let dot: T = v.iter().zip(target.iter()).map(|(&a, &b)| a * b).sum();
                let f = (dot + dot) / vnorm_sq;
                for (t, &vi) in target.iter_mut().zip(&v) {
                    *t = *t - f * vi;
                }
            };
            for jj in j..p {
                reflect(&mut a.col_mut(jj)[k..]);
            }
            reflect(&mut qty[k..]);
        }
        // exact zeros below the diagonal
        a.set(k, j, alpha);
        for i in k + 1..n {
            a.set(i, j, T::zero());
        }
        retained.push(j);
        k += 1;
    }
    if k == 0 {
        return Err(Error::Regression("every design column is zero or collinear".into()));
    }
    if n <= k {
        return Err(Error::Regression(format!(
            "{n} observations for {k} retained columns; need more rows than columns"
        )));
    }

    // R is k x k: row r, column c = a[r, retained[c]]
    let r = |row: usize, c: usize| a.get(row, retained[c]);
    let mut beta = vec![T::zero(); k];
    for i in (0..k).rev() {
        let mut s = qty[i];
        for c in i + 1..k {
            s = s - r(i, c) * beta[c];
        }
        beta[i] = s / r(i, i);
    }
    // R^-1 by back substitution, column by column (upper triangular)
    let mut rinv = vec![T::zero(); k * k]; // row-major
    for c in 0..k {
        rinv[c * k + c] = T::one() / r(c, c);
        for i in (0..c).rev() {
            let mut s = T::zero();
            for m in i + 1..=c {
                s = s + r(i, m) * rinv[m * k + c];
            }
            rinv[i * k + c] = -s / r(i, i);
        }
    }
    let rss: T = qty[k..].iter().map(|&t| t * t).sum();
    let df = n - k;
    let s2 = rss / T::lit(df as f64);
    let std_errors = (0..k)
        .map(|i| {
            let row_ss: T = rinv[i * k..(i + 1) * k].iter().map(|&t| t * t).sum();
            (s2 * row_ss).sqrt()
        })
        .collect();
    Ok(OlsFit {
        coefficients: beta,
        std_errors,
        retained,
        dropped,
        rss,
        residual_variance: s2,
        n,
        df,
    })
}

#[cfg(test)]
mod tests {
    use approx::assert_relative_eq;

    use super::*;

    #[test]
    fn exact_line() {
        let x = Matrix::from_columns(4, &[vec![1.0; 4], vec![0.0, 1.0, 2.0, 3.0]]);
        let y = [1.0, 3.0, 5.0, 7.0];
        let fit = ols_qr(&x, &y).unwrap();
        assert_relative_eq!(fit.coefficients[0], 1.0, epsilon = 1e-12);
        assert_relative_eq!(fit.coefficients[1], 2.0, epsilon = 1e-12);
        assert!(fit.rss < 1e-20);
    }

    #[test]
    fn textbook_standard_errors() {
        // y = b0 + b1 x on five points; closed form se(b1) = s / sqrt(Sxx)
        let xs = [1.0, 2.0, 3.0, 4.0, 5.0];
        let y = [2.1, 3.9, 6.2, 7.8, 10.1];
        let x = Matrix::from_columns(5, &[vec![1.0; 5], xs.to_vec()]);
        let fit = ols_qr(&x, &y).unwrap();
        let xbar = 3.0;
        let sxx: f64 = xs.iter().map(|v| (v - xbar) * (v - xbar)).sum();
        let b1 = xs.iter().zip(&y).map(|(a, b)| (a - xbar) * b).sum::<f64>() / sxx;
        let ybar = y.iter().sum::<f64>() / 5.0;
        let b0 = ybar - b1 * xbar;
        let rss: f64 = xs.iter().zip(&y).map(|(a, b)| (b - b0 - b1 * a).powi(2)).sum();
        let s = (rss / 3.0).sqrt();
        assert_relative_eq!(fit.coefficients[1], b1, max_relative = 1e-12);
        assert_relative_eq!(fit.std_errors[1], s / sxx.sqrt(), max_relative = 1e-12);
        assert_relative_eq!(
            fit.std_errors[0],
            s * (1.0 / 5.0 + xbar * xbar / sxx).sqrt(),
            max_relative = 1e-12
        );
    }

    #[test]
    fn duplicate_column_dropped() {
        let c = vec![0.5, 1.5, -2.0, 3.0, 0.25];
        let x = Matrix::from_columns(5, &[vec![1.0; 5], c.clone(), c.iter().map(|v| 2.0 * v).collect()]);
        let y = [1.0, 2.0, 0.0, 4.0, 1.5];
        let fit = ols_qr(&x, &y).unwrap();
        assert_eq!(fit.retained, vec![0, 1]);
        assert_eq!(fit.dropped, vec![2]);
        let x2 = Matrix::from_columns(5, &[vec![1.0; 5], c]);
        let fit2 = ols_qr(&x2, &y).unwrap();
        assert_eq!(fit.coefficients, fit2.coefficients);
        assert_eq!(fit.std_errors, fit2.std_errors);
    }

    #[test]
    fn too_few_rows() {
        let x = Matrix::from_columns(2, &[vec![1.0, 1.0], vec![0.0, 1.0]]);
        assert!(matches!(ols_qr(&x, &[1.0, 2.0]), Err(Error::Regression(_))));
    }

    #[test]
    fn f32_solves() {
        let x = Matrix::from_columns(4, &[vec![1.0f32; 4], vec![0.0, 1.0, 2.0, 3.0]]);
        let fit = ols_qr(&x, &[1.0f32, 3.0, 5.0, 7.0]).unwrap();
        assert!((fit.coefficients[1] - 2.0).abs() < 1e-4);
    }
}
