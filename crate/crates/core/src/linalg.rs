//! Sparse matrices and Krylov solvers.
//!
//! Vector-valued unknowns are stored flat with three components per vertex:
//! entry `3 * i + κ` is component `κ` at vertex `i`.

use nalgebra::{Matrix3, Vector3};

use crate::error::{Error, Result};

pub trait LinearOperator {
    fn dim(&self) -> usize;
    /// `y = A x`.
    fn apply(&self, x: &[f64], y: &mut [f64]);
    fn diagonal(&self) -> Vec<f64>;
}

/// Scalar compressed-row matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct CsrMatrix {
    n: usize,
    row_ptr: Vec<usize>,
    cols: Vec<usize>,
    values: Vec<f64>,
}

/// Accumulates scalar entries; duplicates are summed in insertion order.
#[derive(Debug, Clone)]
pub struct CsrBuilder {
    rows: Vec<Vec<(usize, f64)>>,
}

impl CsrBuilder {
    pub fn new(n: usize) -> Self {
        CsrBuilder {
            rows: vec![Vec::new(); n],
        }
    }

    pub fn add(&mut self, i: usize, j: usize, value: f64) {
        self.rows[i].push((j, value));
    }

    pub fn finish(self) -> CsrMatrix {
        let n = self.rows.len();
        let mut row_ptr = Vec::with_capacity(n + 1);
        let mut cols = Vec::new();
        let mut values = Vec::new();
        row_ptr.push(0);
        for mut row in self.rows {
            row.sort_by_key(|&(j, _)| j);
            let mut k = 0;
            while k < row.len() {
                let j = row[k].0;
                let mut sum = 0.0;
                while k < row.len() && row[k].0 == j {
                    sum += row[k].1;
                    k += 1;
                }
                cols.push(j);
                values.push(sum);
            }
            row_ptr.push(cols.len());
        }
        CsrMatrix {
            n,
            row_ptr,
            cols,
            values,
        }
    }
}

impl CsrMatrix {
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn row(&self, i: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let range = self.row_ptr[i]..self.row_ptr[i + 1];
        self.cols[range.clone()]
            .iter()
            .copied()
            .zip(self.values[range].iter().copied())
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.row(i).find(|&(c, _)| c == j).map_or(0.0, |(_, v)| v)
    }

    pub fn matvec(&self, x: &[f64]) -> Result<Vec<f64>> {
        check_dim(self.n, x.len())?;
        let mut y = vec![0.0; self.n];
        self.apply(x, &mut y);
        Ok(y)
    }

    /// Replaces the rows of all `fixed` unknowns by identity rows and
    /// eliminates the matching columns. Returns the modified matrix and the
    /// right-hand side `b - A_{·,fixed} g` with `g` in the fixed rows.
    pub fn with_dirichlet(&self, fixed: &[bool], values: &[f64], rhs: &[f64]) -> (CsrMatrix, Vec<f64>) {
        let mut b = rhs.to_vec();
        let mut builder = CsrBuilder::new(self.n);
        for i in 0..self.n {
            if fixed[i] {
                builder.add(i, i, 1.0);
                b[i] = values[i];
                continue;
            }
            for (j, a) in self.row(i) {
                if fixed[j] {
                    b[i] -= a * values[j];
                } else {
                    builder.add(i, j, a);
                }
            }
        }
        (builder.finish(), b)
    }
}

impl LinearOperator for CsrMatrix {
    fn dim(&self) -> usize {
        self.n
    }

    fn apply(&self, x: &[f64], y: &mut [f64]) {
        for (i, yi) in y.iter_mut().enumerate() {
            let mut sum = 0.0;
            for k in self.row_ptr[i]..self.row_ptr[i + 1] {
                sum += self.values[k] * x[self.cols[k]];
            }
            *yi = sum;
        }
    }

    fn diagonal(&self) -> Vec<f64> {
        (0..self.n).map(|i| self.get(i, i)).collect()
    }
}

/// Sparse matrix of 3×3 blocks indexed by vertex pairs.
#[derive(Debug, Clone, PartialEq)]
pub struct BlockSparseMatrix {
    n: usize,
    row_ptr: Vec<usize>,
    cols: Vec<usize>,
    blocks: Vec<Matrix3<f64>>,
}

#[derive(Debug, Clone)]
pub struct BlockBuilder {
    rows: Vec<Vec<(usize, Matrix3<f64>)>>,
}

impl BlockBuilder {
    pub fn new(vertex_count: usize) -> Self {
        BlockBuilder {
            rows: vec![Vec::new(); vertex_count],
        }
    }

    pub fn add(&mut self, i: usize, j: usize, block: Matrix3<f64>) {
        self.rows[i].push((j, block));
    }

    /// `value · I` at block `(i, j)`.
    pub fn add_scalar(&mut self, i: usize, j: usize, value: f64) {
        self.add(i, j, Matrix3::from_diagonal_element(value));
    }

    /// Sums duplicates in insertion order and drops blocks that are exactly zero.
    pub fn finish(self) -> BlockSparseMatrix {
        let n = self.rows.len();
        let mut row_ptr = Vec::with_capacity(n + 1);
        let mut cols = Vec::new();
        let mut blocks = Vec::new();
        row_ptr.push(0);
        for mut row in self.rows {
            row.sort_by_key(|&(j, _)| j);
            let mut k = 0;
            while k < row.len() {
                let j = row[k].0;
                let mut sum = Matrix3::zeros();
                while k < row.len() && row[k].0 == j {
                    sum += row[k].1;
                    k += 1;
                }
                if sum != Matrix3::zeros() {
                    cols.push(j);
                    blocks.push(sum);
                }
            }
            row_ptr.push(cols.len());
        }
        BlockSparseMatrix {
            n,
            row_ptr,
            cols,
            blocks,
        }
    }
}

impl BlockSparseMatrix {
    pub fn identity(vertex_count: usize) -> Self {
        let mut b = BlockBuilder::new(vertex_count);
        for i in 0..vertex_count {
            b.add(i, i, Matrix3::identity());
        }
        b.finish()
    }

    pub fn vertex_count(&self) -> usize {
        self.n
    }

    pub fn row(&self, i: usize) -> impl Iterator<Item = (usize, &Matrix3<f64>)> + '_ {
        let range = self.row_ptr[i]..self.row_ptr[i + 1];
        self.cols[range.clone()].iter().copied().zip(self.blocks[range].iter())
    }

    pub fn block(&self, i: usize, j: usize) -> Matrix3<f64> {
        self.row(i)
            .find(|&(c, _)| c == j)
            .map_or_else(Matrix3::zeros, |(_, b)| *b)
    }

    pub fn nnz_blocks(&self) -> usize {
        self.blocks.len()
    }

    pub fn is_diagonal(&self) -> bool {
        (0..self.n).all(|i| self.row(i).all(|(j, _)| j == i))
    }

    pub fn is_structurally_symmetric(&self) -> bool {
        (0..self.n).all(|i| self.row(i).all(|(j, _)| self.row(j).any(|(c, _)| c == i)))
    }

    pub fn matvec(&self, x: &[f64]) -> Result<Vec<f64>> {
        check_dim(3 * self.n, x.len())?;
        let mut y = vec![0.0; 3 * self.n];
        self.apply(x, &mut y);
        Ok(y)
    }

    /// `self + factor * other`, keeping the pattern union.
    pub fn add_scaled(&self, factor: f64, other: &BlockSparseMatrix) -> Result<BlockSparseMatrix> {
        check_dim(self.n, other.n)?;
        let mut b = BlockBuilder::new(self.n);
        for i in 0..self.n {
            for (j, blk) in self.row(i) {
                b.add(i, j, *blk);
            }
            for (j, blk) in other.row(i) {
                b.add(i, j, blk * factor);
            }
        }
        Ok(b.finish())
    }

    /// Maps a per-block transformation over all blocks.
    pub fn map_blocks(&self, mut f: impl FnMut(usize, usize, &Matrix3<f64>) -> Matrix3<f64>) -> BlockSparseMatrix {
        let mut b = BlockBuilder::new(self.n);
        for i in 0..self.n {
            for (j, blk) in self.row(i) {
                b.add(i, j, f(i, j, blk));
            }
        }
        b.finish()
    }
}

impl LinearOperator for BlockSparseMatrix {
    fn dim(&self) -> usize {
        3 * self.n
    }

    fn apply(&self, x: &[f64], y: &mut [f64]) {
        for i in 0..self.n {
            let mut sum = Vector3::zeros();
            for k in self.row_ptr[i]..self.row_ptr[i + 1] {
                let j = self.cols[k];
                sum += self.blocks[k] * Vector3::new(x[3 * j], x[3 * j + 1], x[3 * j + 2]);
            }
            y[3 * i..3 * i + 3].copy_from_slice(sum.as_slice());
        }
    }

    fn diagonal(&self) -> Vec<f64> {
        let mut d = vec![0.0; 3 * self.n];
        for i in 0..self.n {
            let blk = self.block(i, i);
            for c in 0..3 {
                d[3 * i + c] = blk[(c, c)];
            }
        }
        d
    }
}

fn check_dim(expected: usize, got: usize) -> Result<()> {
    if expected != got {
        return Err(Error::DimensionMismatch { expected, got });
    }
    Ok(())
}

/// Solves `D x = b` for a block-diagonal `D` with diagonal blocks.
pub fn diag_solve(d: &BlockSparseMatrix, b: &[f64]) -> Result<Vec<f64>> {
    check_dim(3 * d.n, b.len())?;
    let diag = d.diagonal();
    diag.iter()
        .zip(b)
        .enumerate()
        .map(|(index, (&value, &rhs))| {
            if value > 0.0 {
                Ok(rhs / value)
            } else {
                Err(Error::NonPositiveDiagonal { index, value })
            }
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverOptions {
    /// Stop when `‖b - Ax‖ ≤ rel_tol · ‖b‖`.
    pub rel_tol: f64,
    /// Iteration cap; `None` means twenty times the dimension.
    pub max_iter: Option<usize>,
    pub jacobi: bool,
    /// Krylov dimension between GMRES restarts.
    pub restart: usize,
}

impl Default for SolverOptions {
    fn default() -> Self {
        SolverOptions {
            rel_tol: 1e-10,
            max_iter: None,
            jacobi: false,
            restart: 60,
        }
    }
}

impl SolverOptions {
    fn cap(&self, dim: usize) -> usize {
        self.max_iter.unwrap_or(20 * dim.max(1))
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolveReport {
    pub iterations: usize,
    /// Final relative residual `‖b - Ax‖ / ‖b‖`.
    pub residual: f64,
    pub converged: bool,
}

impl SolveReport {
    pub fn into_result(self, solver: &'static str) -> Result<()> {
        if self.converged {
            Ok(())
        } else {
            Err(Error::NotConverged {
                solver,
                iterations: self.iterations,
                residual: self.residual,
            })
        }
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

/// Conjugate gradients for symmetric positive (semi-)definite operators.
/// Non-convergence is reported, not raised.
pub fn cg_solve<A: LinearOperator + ?Sized>(
    a: &A,
    b: &[f64],
    x0: Option<&[f64]>,
    opts: &SolverOptions,
) -> (Vec<f64>, SolveReport) {
    let n = a.dim();
    let b_norm = norm(b);
    let mut x = x0.map_or_else(|| vec![0.0; n], <[f64]>::to_vec);
    if b_norm == 0.0 {
        return (
            vec![0.0; n],
            SolveReport {
                iterations: 0,
                residual: 0.0,
                converged: true,
            },
        );
    }
    let inv_diag: Option<Vec<f64>> = opts.jacobi.then(|| {
        a.diagonal()
            .into_iter()
            .map(|d| if d > 0.0 { 1.0 / d } else { 1.0 })
            .collect()
    });
    let precondition = |r: &[f64], z: &mut Vec<f64>| match &inv_diag {
        Some(d) => {
            for ((zi, ri), di) in z.iter_mut().zip(r).zip(d) {
                *zi = ri * di;
            }
        }
        None => z.copy_from_slice(r),
    };

    let mut r = vec![0.0; n];
    a.apply(&x, &mut r);
    for (ri, bi) in r.iter_mut().zip(b) {
        *ri = bi - *ri;
    }
    let mut z = vec![0.0; n];
    precondition(&r, &mut z);
    let mut p = z.clone();
    let mut rz = dot(&r, &z);
    let mut ap = vec![0.0; n];
    let tol = opts.rel_tol * b_norm;
    let cap = opts.cap(n);
    let mut res = norm(&r);
    let mut it = 0;
    while res > tol && it < cap {
        a.apply(&p, &mut ap);
        let pap = dot(&p, &ap);
        if pap <= 0.0 {
            break;
        }
        let alpha = rz / pap;
        for i in 0..n {
            x[i] += alpha * p[i];
            r[i] -= alpha * ap[i];
        }
        it += 1;
        res = norm(&r);
        if res <= tol {
            break;
        }
        precondition(&r, &mut z);
        let rz_new = dot(&r, &z);
        let beta = rz_new / rz;
        rz = rz_new;
        for i in 0..n {
            p[i] = z[i] + beta * p[i];
        }
    }
    (
        x,
        SolveReport {
            iterations: it,
            residual: res / b_norm,
            converged: res <= tol,
        },
    )
}

/// Restarted GMRES for general non-singular operators, right-preconditioned
/// with Jacobi when requested.
pub fn gmres_solve<A: LinearOperator + ?Sized>(
    a: &A,
    b: &[f64],
    x0: Option<&[f64]>,
    opts: &SolverOptions,
) -> (Vec<f64>, SolveReport) {
    let n = a.dim();
    let b_norm = norm(b);
    let mut x = x0.map_or_else(|| vec![0.0; n], <[f64]>::to_vec);
    if b_norm == 0.0 {
        return (
            vec![0.0; n],
            SolveReport {
                iterations: 0,
                residual: 0.0,
                converged: true,
            },
        );
    }
    let inv_diag: Vec<f64> = if opts.jacobi {
        a.diagonal()
            .into_iter()
            .map(|d| if d != 0.0 { 1.0 / d } else { 1.0 })
            .collect()
    } else {
        vec![1.0; n]
    };
    let m = opts.restart.max(1).min(n.max(1));
    let tol = opts.rel_tol * b_norm;
    let cap = opts.cap(n);
    let mut total = 0;
    let mut r = vec![0.0; n];
    let mut w = vec![0.0; n];
    let mut tmp = vec![0.0; n];
    let mut res;
    loop {
        a.apply(&x, &mut r);
        for (ri, bi) in r.iter_mut().zip(b) {
            *ri = bi - *ri;
        }
        res = norm(&r);
        if res <= tol || total >= cap {
            break;
        }
        let mut basis: Vec<Vec<f64>> = Vec::with_capacity(m + 1);
        basis.push(r.iter().map(|v| v / res).collect());
        let mut h = vec![vec![0.0; m]; m + 1];
        let (mut cs, mut sn) = (vec![0.0; m], vec![0.0; m]);
        let mut g = vec![0.0; m + 1];
        g[0] = res;
        let mut k_used = 0;
        for k in 0..m {
            for i in 0..n {
                tmp[i] = basis[k][i] * inv_diag[i];
            }
            a.apply(&tmp, &mut w);
            for (j, v) in basis.iter().enumerate() {
                let hjk = dot(&w, v);
                h[j][k] = hjk;
                for i in 0..n {
                    w[i] -= hjk * v[i];
                }
            }
            let wn = norm(&w);
            h[k + 1][k] = wn;
            for j in 0..k {
                let t = cs[j] * h[j][k] + sn[j] * h[j + 1][k];
                h[j + 1][k] = -sn[j] * h[j][k] + cs[j] * h[j + 1][k];
                h[j][k] = t;
            }
            let denom = h[k][k].hypot(h[k + 1][k]);
            cs[k] = if denom == 0.0 { 1.0 } else { h[k][k] / denom };
            sn[k] = if denom == 0.0 { 0.0 } else { h[k + 1][k] / denom };
            h[k][k] = denom;
            h[k + 1][k] = 0.0;
            g[k + 1] = -sn[k] * g[k];
            g[k] *= cs[k];
            total += 1;
            k_used = k + 1;
            if g[k + 1].abs() <= tol || total >= cap || wn == 0.0 {
                break;
            }
            basis.push(w.iter().map(|v| v / wn).collect());
        }
        let mut y = vec![0.0; k_used];
        for i in (0..k_used).rev() {
            let mut s = g[i];
            for j in i + 1..k_used {
                s -= h[i][j] * y[j];
            }
            y[i] = s / h[i][i];
        }
        for (j, yj) in y.iter().enumerate() {
            for i in 0..n {
                x[i] += yj * basis[j][i] * inv_diag[i];
            }
        }
    }
    (
        x,
        SolveReport {
            iterations: total,
            residual: res / b_norm,
            converged: res <= tol,
        },
    )
}
