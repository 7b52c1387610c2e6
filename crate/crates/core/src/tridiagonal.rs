//! Symmetric tridiagonal eigensolver (implicit QL with Wilkinson-type shifts,
//! after the EISPACK `tql2` routine).
//!
//! Besides eigenvalues and full eigenvectors, the solver can apply its
//! rotations to a single row vector. Starting from `v^T` this yields the
//! components `Q^T v` of `v` along every eigenvector in O(n^2) work instead of
//! the O(n^3) needed to accumulate `Q`.

use nalgebra::DMatrix;

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct SymTridiagonal {
    diag: Vec<f64>,
    off: Vec<f64>,
}

/// Receiver for the plane rotations and final sort swaps of the QL sweep.
trait RotationSink {
    /// Applies the rotation to "columns" `i` and `i + 1`.
    fn rotate(&mut self, i: usize, c: f64, s: f64);
    fn swap(&mut self, i: usize, k: usize);
}

struct NoVectors;

impl RotationSink for NoVectors {
    fn rotate(&mut self, _: usize, _: f64, _: f64) {}
    fn swap(&mut self, _: usize, _: usize) {}
}

struct Row<'a>(&'a mut [f64]);

impl RotationSink for Row<'_> {
    fn rotate(&mut self, i: usize, c: f64, s: f64) {
        let h = self.0[i + 1];
        self.0[i + 1] = s * self.0[i] + c * h;
        self.0[i] = c * self.0[i] - s * h;
    }

    fn swap(&mut self, i: usize, k: usize) {
        self.0.swap(i, k);
    }
}

struct Columns<'a>(&'a mut DMatrix<f64>);

impl RotationSink for Columns<'_> {
    fn rotate(&mut self, i: usize, c: f64, s: f64) {
        for k in 0..self.0.nrows() {
            let h = self.0[(k, i + 1)];
            self.0[(k, i + 1)] = s * self.0[(k, i)] + c * h;
            self.0[(k, i)] = c * self.0[(k, i)] - s * h;
        }
    }

    fn swap(&mut self, i: usize, k: usize) {
        self.0.swap_columns(i, k);
    }
}

const MAX_SWEEPS_PER_EIGENVALUE: usize = 60;

impl SymTridiagonal {
    /// `diag` has length n, `off` holds the n-1 sub/super-diagonal entries.
    pub fn new(diag: Vec<f64>, off: Vec<f64>) -> Result<Self> {
        if diag.is_empty() || off.len() + 1 != diag.len() {
            return Err(Error::invalid(
                "tridiagonal",
                format!("need n >= 1 diagonal and n-1 off-diagonal entries, got {} and {}", diag.len(), off.len()),
            ));
        }
        if diag.iter().chain(off.iter()).any(|v| !v.is_finite()) {
            return Err(Error::invalid("tridiagonal", "entries must be finite"));
        }
        Ok(SymTridiagonal { diag, off })
    }

    pub(crate) fn from_parts(diag: Vec<f64>, off: Vec<f64>) -> Self {
        debug_assert_eq!(off.len() + 1, diag.len());
        SymTridiagonal { diag, off }
    }

    /// Extracts the bands of a dense symmetric matrix, or `None` if any entry
    /// outside the three central diagonals is nonzero.
    pub fn from_dense(m: &DMatrix<f64>) -> Option<Self> {
        let n = m.nrows();
        if n == 0 || m.ncols() != n {
            return None;
        }
        for i in 0..n {
            for j in 0..n {
                if i.abs_diff(j) > 1 && m[(i, j)] != 0.0 {
                    return None;
                }
            }
        }
        let diag = (0..n).map(|i| m[(i, i)]).collect();
        let off = (0..n - 1).map(|i| m[(i + 1, i)]).collect();
        Some(SymTridiagonal { diag, off })
    }

    pub fn dim(&self) -> usize {
        self.diag.len()
    }

    pub fn diag(&self) -> &[f64] {
        &self.diag
    }

    pub fn off(&self) -> &[f64] {
        &self.off
    }

    pub fn to_dense(&self) -> DMatrix<f64> {
        let n = self.dim();
        let mut m = DMatrix::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = self.diag[i];
        }
        for (i, &e) in self.off.iter().enumerate() {
            m[(i + 1, i)] = e;
            m[(i, i + 1)] = e;
        }
        m
    }

    /// `T v`.
    pub fn apply(&self, v: &[f64]) -> Vec<f64> {
        let n = self.dim();
        (0..n)
            .map(|i| {
                let mut acc = self.diag[i] * v[i];
                if i > 0 {
                    acc += self.off[i - 1] * v[i - 1];
                }
                if i + 1 < n {
                    acc += self.off[i] * v[i + 1];
                }
                acc
            })
            .collect()
    }

    /// Ascending eigenvalues.
    pub fn eigenvalues(&self) -> Result<Vec<f64>> {
        self.ql(&mut NoVectors)
    }

    /// Ascending eigenvalues and the components of `v` along the matching
    /// eigenvectors. Component signs follow the solver's implicit eigenvector
    /// orientation, so only their magnitudes are meaningful to callers.
    pub fn eigen_projected(&self, v: &[f64]) -> Result<(Vec<f64>, Vec<f64>)> {
        if v.len() != self.dim() {
            return Err(Error::invalid("vector", "length must match matrix dimension"));
        }
        let mut row = v.to_vec();
        let values = self.ql(&mut Row(&mut row))?;
        Ok((values, row))
    }

    /// Ascending eigenvalues with eigenvectors as matrix columns. Each column
    /// is oriented so its largest-magnitude entry is positive.
    pub fn eigen_full(&self) -> Result<(Vec<f64>, DMatrix<f64>)> {
        let mut vectors = DMatrix::identity(self.dim(), self.dim());
        let values = self.ql(&mut Columns(&mut vectors))?;
        orient_columns(&mut vectors);
        Ok((values, vectors))
    }

    /// Unit eigenvector for the lowest eigenvalue by inverse iteration with a
    /// shift just below it, where `T - shift I` is positive definite.
    pub fn lowest_eigenpair(&self) -> Result<(f64, Vec<f64>)> {
        let values = self.eigenvalues()?;
        let e0 = values[0];
        let n = self.dim();
        if n == 1 {
            return Ok((e0, vec![1.0]));
        }
        let scale = self
            .diag
            .iter()
            .chain(self.off.iter())
            .fold(1.0f64, |a, v| a.max(v.abs()));
        let shift = e0 - 1e-9 * scale;
        let mut x = vec![1.0 / (n as f64).sqrt(); n];
        for _ in 0..4 {
            x = self.solve_shifted(shift, &x)?;
            let norm = x.iter().map(|v| v * v).sum::<f64>().sqrt();
            x.iter_mut().for_each(|v| *v /= norm);
        }
        let tx = self.apply(&x);
        let residual = tx
            .iter()
            .zip(&x)
            .map(|(a, b)| (a - e0 * b).abs())
            .fold(0.0, f64::max);
        if residual > 1e-9 * e0.abs().max(1.0) {
            return Err(Error::NoConvergence {
                context: format!("lowest eigenvector of {n}x{n} tridiagonal (residual {residual:e})"),
            });
        }
        orient(&mut x);
        Ok((e0, x))
    }

    /// Solves `(T - shift I) x = b` via LDL^T; requires positive definiteness.
    fn solve_shifted(&self, shift: f64, b: &[f64]) -> Result<Vec<f64>> {
        let n = self.dim();
        let mut d = vec![0.0; n];
        let mut l = vec![0.0; n];
        d[0] = self.diag[0] - shift;
        for i in 1..n {
            if d[i - 1] <= 0.0 {
                return Err(Error::Numerical("shifted tridiagonal is not positive definite".into()));
            }
            l[i] = self.off[i - 1] / d[i - 1];
            d[i] = self.diag[i] - shift - l[i] * self.off[i - 1];
        }
        if d[n - 1] <= 0.0 {
            return Err(Error::Numerical("shifted tridiagonal is not positive definite".into()));
        }
        let mut y = b.to_vec();
        for i in 1..n {
            y[i] -= l[i] * y[i - 1];
        }
        for i in 0..n {
            y[i] /= d[i];
        }
        for i in (0..n - 1).rev() {
            y[i] -= l[i + 1] * y[i + 1];
        }
        Ok(y)
    }

    fn ql<S: RotationSink>(&self, sink: &mut S) -> Result<Vec<f64>> {
        let n = self.dim();
        let mut d = self.diag.clone();
        let mut e = self.off.clone();
        e.push(0.0);
        if n == 1 {
            return Ok(d);
        }

        let eps = f64::EPSILON;
        let mut f = 0.0;
        let mut tst1: f64 = 0.0;
        for l in 0..n {
            tst1 = tst1.max(d[l].abs() + e[l].abs());
            let mut m = l;
            while m < n - 1 && e[m].abs() > eps * tst1 {
                m += 1;
            }

            if m > l {
                let mut sweeps = 0;
                loop {
                    sweeps += 1;
                    if sweeps > MAX_SWEEPS_PER_EIGENVALUE {
                        return Err(Error::NoConvergence {
                            context: format!("{n}x{n} symmetric tridiagonal, eigenvalue {l}"),
                        });
                    }

                    let mut g = d[l];
                    let mut p = (d[l + 1] - g) / (2.0 * e[l]);
                    let mut r = p.hypot(1.0);
                    if p < 0.0 {
                        r = -r;
                    }
                    d[l] = e[l] / (p + r);
                    d[l + 1] = e[l] * (p + r);
                    let dl1 = d[l + 1];
                    let mut h = g - d[l];
                    for di in d.iter_mut().skip(l + 2) {
                        *di -= h;
                    }
                    f += h;

                    p = d[m];
                    let mut c = 1.0;
                    let mut c2 = c;
                    let mut c3 = c;
                    let el1 = e[l + 1];
                    let mut s = 0.0;
                    let mut s2 = 0.0;
                    for i in (l..m).rev() {
                        c3 = c2;
                        c2 = c;
                        s2 = s;
                        g = c * e[i];
                        h = c * p;
                        r = p.hypot(e[i]);
                        e[i + 1] = s * r;
                        s = e[i] / r;
                        c = p / r;
                        p = c * d[i] - s * g;
                        d[i + 1] = h + s * (c * g + s * d[i]);
                        sink.rotate(i, c, s);
                    }
                    p = -s * s2 * c3 * el1 * e[l] / dl1;
                    e[l] = s * p;
                    d[l] = c * p;

                    if e[l].abs() <= eps * tst1 {
                        break;
                    }
                }
            }
            d[l] += f;
            e[l] = 0.0;
        }

        // selection sort keeps the sink swaps simple
        for i in 0..n - 1 {
            let mut k = i;
            let mut p = d[i];
            for (j, &dj) in d.iter().enumerate().skip(i + 1) {
                if dj < p {
                    k = j;
                    p = dj;
                }
            }
            if k != i {
                d[k] = d[i];
                d[i] = p;
                sink.swap(i, k);
            }
        }
        Ok(d)
    }
}

fn orient(v: &mut [f64]) {
    let mut best = 0;
    for (i, x) in v.iter().enumerate() {
        if x.abs() > v[best].abs() {
            best = i;
        }
    }
    if v[best] < 0.0 {
        v.iter_mut().for_each(|x| *x = -*x);
    }
}

pub(crate) fn orient_columns(m: &mut DMatrix<f64>) {
    for mut col in m.column_iter_mut() {
        let mut best = 0;
        for i in 0..col.len() {
            if col[i].abs() > col[best].abs() {
                best = i;
            }
        }
        if col[best] < 0.0 {
            col.neg_mut();
        }
    }
}
