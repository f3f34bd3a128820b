//! Linear algebra for the per-iteration symmetric positive definite systems.

use crate::error::{Error, Result};

/// Symmetric matrix in compressed sparse row form (full pattern stored).
#[derive(Debug, Clone, Default)]
pub struct CsrMatrix {
    n: usize,
    row_ptr: Vec<usize>,
    cols: Vec<usize>,
    vals: Vec<f64>,
}

/// Assembles a matrix from diagonal entries plus symmetric couplings.
#[derive(Debug, Clone)]
pub struct SymmetricBuilder {
    diag: Vec<f64>,
    /// (i, j, value) with i != j, stored once.
    off: Vec<(usize, usize, f64)>,
}

impl SymmetricBuilder {
    pub fn new(n: usize) -> Self {
        Self { diag: vec![0.0; n], off: Vec::new() }
    }

    pub fn add_diag(&mut self, i: usize, v: f64) {
        self.diag[i] += v;
    }

    /// Add the graph-Laplacian stencil `k (e_i − e_j)(e_i − e_j)^T`.
    pub fn add_edge(&mut self, i: usize, j: usize, k: f64) {
        self.diag[i] += k;
        self.diag[j] += k;
        self.off.push((i, j, -k));
    }

    pub fn diag(&self) -> &[f64] {
        &self.diag
    }

    /// Tridiagonal bands `(lower, diag, upper)` when every coupling is between neighbors.
    pub fn tridiagonal(&self) -> Option<(Vec<f64>, Vec<f64>, Vec<f64>)> {
        let n = self.diag.len();
        let mut lower = vec![0.0; n];
        let mut upper = vec![0.0; n];
        for &(i, j, v) in &self.off {
            let (a, b) = if i < j { (i, j) } else { (j, i) };
            if b != a + 1 {
                return None;
            }
            upper[a] += v;
            lower[b] += v;
        }
        Some((lower, self.diag.clone(), upper))
    }

    pub fn to_csr(&self) -> CsrMatrix {
        let n = self.diag.len();
        let mut rows: Vec<Vec<(usize, f64)>> = (0..n).map(|i| vec![(i, self.diag[i])]).collect();
        for &(i, j, v) in &self.off {
            rows[i].push((j, v));
            rows[j].push((i, v));
        }
        let mut row_ptr = Vec::with_capacity(n + 1);
        let mut cols = Vec::new();
        let mut vals = Vec::new();
        row_ptr.push(0);
        for mut row in rows {
            row.sort_by_key(|e| e.0);
            for (c, v) in row {
                if cols.len() > *row_ptr.last().unwrap() && *cols.last().unwrap() == c {
                    *vals.last_mut().unwrap() += v;
                } else {
                    cols.push(c);
                    vals.push(v);
                }
            }
            row_ptr.push(cols.len());
        }
        CsrMatrix { n, row_ptr, cols, vals }
    }
}

impl CsrMatrix {
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn mul(&self, x: &[f64], y: &mut [f64]) {
        for i in 0..self.n {
            let mut acc = 0.0;
            for k in self.row_ptr[i]..self.row_ptr[i + 1] {
                acc += self.vals[k] * x[self.cols[k]];
            }
            y[i] = acc;
        }
    }

    pub fn diagonal(&self) -> Vec<f64> {
        (0..self.n)
            .map(|i| {
                (self.row_ptr[i]..self.row_ptr[i + 1])
                    .find(|&k| self.cols[k] == i)
                    .map(|k| self.vals[k])
                    .unwrap_or(0.0)
            })
            .collect()
    }
}

/// Thomas algorithm for a tridiagonal system; fails on a non-positive pivot.
pub fn solve_tridiagonal(lower: &[f64], diag: &[f64], upper: &[f64], rhs: &[f64]) -> Result<Vec<f64>> {
    let n = diag.len();
    let mut c = vec![0.0; n];
    let mut d = vec![0.0; n];
    let mut pivot = diag[0];
    if !(pivot > 0.0 && pivot.is_finite()) {
        return Err(Error::RankDeficient(format!("pivot {pivot} at row 0")));
    }
    c[0] = upper[0] / pivot;
    d[0] = rhs[0] / pivot;
    for i in 1..n {
        pivot = diag[i] - lower[i] * c[i - 1];
        if !(pivot > 0.0 && pivot.is_finite()) {
            return Err(Error::RankDeficient(format!("pivot {pivot} at row {i}")));
        }
        c[i] = upper[i] / pivot;
        d[i] = (rhs[i] - lower[i] * d[i - 1]) / pivot;
    }
    let mut x = d;
    for i in (0..n - 1).rev() {
        x[i] -= c[i] * x[i + 1];
    }
    Ok(x)
}

/// Jacobi-preconditioned conjugate gradients to relative residual `rtol`.
pub fn solve_pcg(a: &CsrMatrix, rhs: &[f64], rtol: f64, max_iter: usize) -> Result<Vec<f64>> {
    let n = a.n();
    let diag = a.diagonal();
    if let Some(i) = diag.iter().position(|&d| !(d > 0.0 && d.is_finite())) {
        return Err(Error::RankDeficient(format!("diagonal entry {} at row {i}", diag[i])));
    }
    let inv: Vec<f64> = diag.iter().map(|d| 1.0 / d).collect();
    let mut x = vec![0.0; n];
    let mut r = rhs.to_vec();
    let norm0 = r.iter().map(|v| v * v).sum::<f64>().sqrt();
    if norm0 == 0.0 {
        return Ok(x);
    }
    let mut z: Vec<f64> = r.iter().zip(&inv).map(|(r, m)| r * m).collect();
    let mut p = z.clone();
    let mut rz: f64 = r.iter().zip(&z).map(|(a, b)| a * b).sum();
    let mut ap = vec![0.0; n];
    for _ in 0..max_iter {
        a.mul(&p, &mut ap);
        let pap: f64 = p.iter().zip(&ap).map(|(a, b)| a * b).sum();
        if !(pap > 0.0) {
            return Err(Error::RankDeficient(format!("conjugate gradients breakdown (p^T A p = {pap:e})")));
        }
        let alpha = rz / pap;
        for i in 0..n {
            x[i] += alpha * p[i];
            r[i] -= alpha * ap[i];
        }
        let norm = r.iter().map(|v| v * v).sum::<f64>().sqrt();
        if norm <= rtol * norm0 {
            return Ok(x);
        }
        for i in 0..n {
            z[i] = r[i] * inv[i];
        }
        let rz_new: f64 = r.iter().zip(&z).map(|(a, b)| a * b).sum();
        let beta = rz_new / rz;
        rz = rz_new;
        for i in 0..n {
            p[i] = z[i] + beta * p[i];
        }
    }
    Ok(x)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn laplacian_1d(n: usize) -> SymmetricBuilder {
        let mut b = SymmetricBuilder::new(n);
        for i in 0..n {
            b.add_diag(i, 1.0);
        }
        for i in 0..n - 1 {
            b.add_edge(i, i + 1, 2.0);
        }
        b
    }

    #[test]
    fn thomas_and_cg_agree() {
        let b = laplacian_1d(50);
        let rhs: Vec<f64> = (0..50).map(|i| (i as f64 * 0.3).sin()).collect();
        let (l, d, u) = b.tridiagonal().unwrap();
        let x1 = solve_tridiagonal(&l, &d, &u, &rhs).unwrap();
        let x2 = solve_pcg(&b.to_csr(), &rhs, 1e-14, 500).unwrap();
        for (a, c) in x1.iter().zip(&x2) {
            assert_abs_diff_eq!(a, c, epsilon = 1e-10);
        }
        let mut ax = vec![0.0; 50];
        b.to_csr().mul(&x1, &mut ax);
        for (a, r) in ax.iter().zip(&rhs) {
            assert_abs_diff_eq!(a, r, epsilon = 1e-12);
        }
    }

    #[test]
    fn singular_pivot_reported() {
        let err = solve_tridiagonal(&[0.0, 0.0], &[0.0, 1.0], &[0.0, 0.0], &[1.0, 1.0]).unwrap_err();
        assert!(matches!(err, Error::RankDeficient(_)));
        let mut b = SymmetricBuilder::new(2);
        b.add_edge(0, 1, 1.0);
        let err = solve_pcg(&b.to_csr(), &[1.0, 1.0], 1e-12, 10).unwrap_err();
        assert!(matches!(err, Error::RankDeficient(_)));
    }
}
