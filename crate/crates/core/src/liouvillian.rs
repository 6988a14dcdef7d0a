//! Superoperators on column-vectorised density matrices.
//!
//! `vec(ρ)` stacks columns, so element `ρ[(r, c)]` sits at `r + c·n`, which
//! is also nalgebra's storage order. A [`Liouvillian`] is stored in CSR form;
//! chain generators have a handful of entries per row.

use nalgebra::{DMatrix, DVector, SymmetricEigen};

use crate::{Error, Result, C64};

const I: C64 = C64::new(0.0, 1.0);

/// Sparse list of `(row, col, value)` matrix entries.
pub type SparseOp = Vec<(usize, usize, C64)>;

/// Nonzero entries of a dense operator.
pub fn sparse_op(m: &DMatrix<C64>) -> SparseOp {
    let mut out = Vec::new();
    for c in 0..m.ncols() {
        for r in 0..m.nrows() {
            let v = m[(r, c)];
            if v != C64::new(0.0, 0.0) {
                out.push((r, c, v));
            }
        }
    }
    out
}

fn adjoint_op(a: &SparseOp) -> SparseOp {
    a.iter().map(|&(r, c, v)| (c, r, v.conj())).collect()
}

fn product_op(a: &SparseOp, b: &SparseOp, n: usize) -> SparseOp {
    let mut dense = DMatrix::<C64>::zeros(n, n);
    for &(r, m, va) in a {
        for &(m2, c, vb) in b {
            if m == m2 {
                dense[(r, c)] += va * vb;
            }
        }
    }
    sparse_op(&dense)
}

/// Accumulates superoperator terms before compressing them to CSR.
#[derive(Debug, Clone)]
pub struct SuperOpBuilder {
    dim: usize,
    triplets: Vec<(usize, usize, C64)>,
}

impl SuperOpBuilder {
    pub fn new(dim: usize) -> Self {
        Self {
            dim,
            triplets: Vec::new(),
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    fn idx(&self, r: usize, c: usize) -> usize {
        r + c * self.dim
    }

    /// `ρ ↦ coeff · A ρ`
    pub fn left(&mut self, a: &SparseOp, coeff: C64) -> &mut Self {
        for &(r, m, v) in a {
            for c in 0..self.dim {
                let (row, col) = (self.idx(r, c), self.idx(m, c));
                self.triplets.push((row, col, coeff * v));
            }
        }
        self
    }

    /// `ρ ↦ coeff · ρ B`
    pub fn right(&mut self, b: &SparseOp, coeff: C64) -> &mut Self {
        for &(m, c, v) in b {
            for r in 0..self.dim {
                let (row, col) = (self.idx(r, c), self.idx(r, m));
                self.triplets.push((row, col, coeff * v));
            }
        }
        self
    }

    /// `ρ ↦ coeff · A ρ B`
    pub fn sandwich(&mut self, a: &SparseOp, b: &SparseOp, coeff: C64) -> &mut Self {
        for &(r, m, va) in a {
            for &(l, c, vb) in b {
                let (row, col) = (self.idx(r, c), self.idx(m, l));
                self.triplets.push((row, col, coeff * va * vb));
            }
        }
        self
    }

    /// `ρ ↦ −i[H, ρ]`
    pub fn commutator(&mut self, h: &SparseOp) -> &mut Self {
        self.left(h, -I).right(h, I)
    }

    /// `ρ ↦ rate · (A ρ A† − ½{A†A, ρ})`
    pub fn dissipator(&mut self, a: &SparseOp, rate: f64) -> &mut Self {
        if rate == 0.0 {
            return self;
        }
        let ad = adjoint_op(a);
        let ada = product_op(&ad, a, self.dim);
        let r = C64::new(rate, 0.0);
        self.sandwich(a, &ad, r)
            .left(&ada, -0.5 * r)
            .right(&ada, -0.5 * r)
    }

    pub fn build(mut self) -> Liouvillian {
        let size = self.dim * self.dim;
        self.triplets.sort_unstable_by_key(|t| (t.0, t.1));
        let mut row_ptr = vec![0usize; size + 1];
        let mut cols = Vec::with_capacity(self.triplets.len());
        let mut values: Vec<C64> = Vec::with_capacity(self.triplets.len());
        let mut last: Option<(usize, usize)> = None;
        for &(r, c, v) in &self.triplets {
            if last == Some((r, c)) {
                *values.last_mut().expect("merged entry") += v;
            } else {
                cols.push(c);
                values.push(v);
                row_ptr[r + 1] += 1;
                last = Some((r, c));
            }
        }
        for r in 0..size {
            row_ptr[r + 1] += row_ptr[r];
        }
        Liouvillian {
            dim: self.dim,
            row_ptr,
            cols,
            values,
        }
    }
}

/// Generator `dρ/dt = L(ρ)` as a sparse `n²×n²` matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct Liouvillian {
    dim: usize,
    row_ptr: Vec<usize>,
    cols: Vec<usize>,
    values: Vec<C64>,
}

impl Liouvillian {
    /// Hilbert-space dimension `n` (the superoperator is `n²×n²`).
    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    fn row(&self, r: usize) -> impl Iterator<Item = (usize, C64)> + '_ {
        let span = self.row_ptr[r]..self.row_ptr[r + 1];
        self.cols[span.clone()]
            .iter()
            .copied()
            .zip(self.values[span].iter().copied())
    }

    /// `y = L x` on vectorised states.
    pub fn apply_vec(&self, x: &[C64], y: &mut [C64]) {
        for (r, out) in y.iter_mut().enumerate() {
            let mut acc = C64::new(0.0, 0.0);
            for (c, v) in self.row(r) {
                acc += v * x[c];
            }
            *out = acc;
        }
    }

    pub fn apply(&self, rho: &DMatrix<C64>) -> DMatrix<C64> {
        let mut out = DMatrix::zeros(self.dim, self.dim);
        self.apply_vec(rho.as_slice(), out.as_mut_slice());
        out
    }

    pub fn to_dense(&self) -> DMatrix<C64> {
        let size = self.dim * self.dim;
        let mut m = DMatrix::zeros(size, size);
        for r in 0..size {
            for (c, v) in self.row(r) {
                m[(r, c)] += v;
            }
        }
        m
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.values.iter().map(|v| v.norm_sqr()).sum::<f64>().sqrt()
    }

    /// Norm of `vec(I)ᵀ L`; zero for a trace-preserving generator.
    pub fn trace_defect(&self) -> f64 {
        let size = self.dim * self.dim;
        let mut acc = vec![C64::new(0.0, 0.0); size];
        for j in 0..self.dim {
            for (c, v) in self.row(j + j * self.dim) {
                acc[c] += v;
            }
        }
        acc.iter().map(|v| v.norm_sqr()).sum::<f64>().sqrt()
    }

    /// Real matrix of `L` restricted to Hermitian operators, in the
    /// coordinates of [`HermitianCoords`].
    ///
    /// Only valid for Hermiticity-preserving generators, which is every
    /// generator this crate builds.
    pub fn hermitian_real_form(&self) -> DMatrix<f64> {
        let coords = HermitianCoords::new(self.dim);
        let n = self.dim;
        let size = n * n;
        let mut real = DMatrix::<f64>::zeros(size, size);
        for c in 0..n {
            for r in 0..=c {
                let row = r + c * n;
                let (out_a, out_b) = if r == c {
                    (coords.diag(r), None)
                } else {
                    let (re, im) = coords.off(r, c);
                    (re, Some(im))
                };
                for (col, v) in self.row(row) {
                    let (m, l) = (col % n, col / n);
                    // X_ml expressed through the real coordinates
                    let contributions: [(usize, C64); 2] = if m == l {
                        [(coords.diag(m), v), (usize::MAX, C64::new(0.0, 0.0))]
                    } else if m < l {
                        let (re, im) = coords.off(m, l);
                        [(re, v), (im, v * I)]
                    } else {
                        let (re, im) = coords.off(l, m);
                        [(re, v), (im, -v * I)]
                    };
                    for (q, coef) in contributions {
                        if q == usize::MAX {
                            continue;
                        }
                        real[(out_a, q)] += coef.re;
                        if let Some(b) = out_b {
                            real[(b, q)] += coef.im;
                        }
                    }
                }
            }
        }
        real
    }
}

/// Real coordinates of an `n×n` Hermitian matrix: the `n` diagonal entries,
/// then `Re ρ_jk, Im ρ_jk` for each `j < k` in column order.
#[derive(Debug, Clone, Copy)]
pub struct HermitianCoords {
    n: usize,
}

impl HermitianCoords {
    pub fn new(n: usize) -> Self {
        Self { n }
    }

    pub fn len(&self) -> usize {
        self.n * self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    pub fn diag(&self, j: usize) -> usize {
        j
    }

    /// `(re, im)` coordinate indices for `j < k`.
    pub fn off(&self, j: usize, k: usize) -> (usize, usize) {
        debug_assert!(j < k);
        let pair = k * (k - 1) / 2 + j;
        (self.n + 2 * pair, self.n + 2 * pair + 1)
    }

    pub fn to_matrix(&self, x: &DVector<f64>) -> DMatrix<C64> {
        let n = self.n;
        let mut m = DMatrix::zeros(n, n);
        for j in 0..n {
            m[(j, j)] = C64::new(x[self.diag(j)], 0.0);
            for k in j + 1..n {
                let (re, im) = self.off(j, k);
                m[(j, k)] = C64::new(x[re], x[im]);
                m[(k, j)] = C64::new(x[re], -x[im]);
            }
        }
        m
    }

    pub fn from_matrix(&self, m: &DMatrix<C64>) -> DVector<f64> {
        let n = self.n;
        let mut x = DVector::zeros(n * n);
        for j in 0..n {
            x[self.diag(j)] = m[(j, j)].re;
            for k in j + 1..n {
                let (re, im) = self.off(j, k);
                x[re] = m[(j, k)].re;
                x[im] = m[(j, k)].im;
            }
        }
        x
    }
}

/// A density matrix over the chain sites plus (for open chains) the trap.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityMatrix {
    pub matrix: DMatrix<C64>,
}

impl DensityMatrix {
    pub fn new(matrix: DMatrix<C64>) -> Result<Self> {
        if !matrix.is_square() {
            return Err(Error::DimensionMismatch {
                expected: matrix.nrows(),
                found: matrix.ncols(),
            });
        }
        Ok(Self { matrix })
    }

    /// `|i⟩⟨i|` in a space of dimension `dim`.
    pub fn site_projector(site: usize, dim: usize) -> Self {
        let mut m = DMatrix::zeros(dim, dim);
        m[(site, site)] = C64::new(1.0, 0.0);
        Self { matrix: m }
    }

    /// Equal mixture over the first `n_sites` levels of a `dim` space.
    pub fn maximally_mixed_sites(n_sites: usize, dim: usize) -> Self {
        let mut m = DMatrix::zeros(dim, dim);
        for i in 0..n_sites {
            m[(i, i)] = C64::new(1.0 / n_sites as f64, 0.0);
        }
        Self { matrix: m }
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn trace(&self) -> C64 {
        self.matrix.trace()
    }

    pub fn population(&self, i: usize) -> f64 {
        self.matrix[(i, i)].re
    }

    pub fn populations(&self) -> Vec<f64> {
        (0..self.dim()).map(|i| self.population(i)).collect()
    }

    /// Largest entry of `|ρ − ρ†|`.
    pub fn hermiticity_error(&self) -> f64 {
        (&self.matrix - self.matrix.adjoint()).camax()
    }

    pub fn min_eigenvalue(&self) -> f64 {
        let herm = (&self.matrix + self.matrix.adjoint()) * C64::new(0.5, 0.0);
        SymmetricEigen::new(herm).eigenvalues.min()
    }

    /// Symmetrises and rescales to unit trace.
    pub fn normalized(mut self) -> Self {
        self.matrix = (&self.matrix + self.matrix.adjoint()) * C64::new(0.5, 0.0);
        let tr = self.matrix.trace().re;
        self.matrix /= C64::new(tr, 0.0);
        self
    }

    pub fn max_abs_diff(&self, other: &DensityMatrix) -> f64 {
        (&self.matrix - &other.matrix).camax()
    }
}
