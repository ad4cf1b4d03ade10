//! Symmetric linear operators.
//!
//! Every estimator in this crate touches its matrix only through
//! [`SymmetricOperator::apply_into`]. The concrete [`LinearOperator`] enum
//! covers the storage formats the crate ingests; callers with an implicit
//! operator of their own can implement the trait directly.

use std::sync::Arc;

use crate::error::{Error, Result};

/// A real symmetric operator of dimension `n` that can be applied to vectors.
///
/// Implementations must be immutable during `apply_into` so that probes can
/// share one operator across threads.
pub trait SymmetricOperator: Sync {
    fn dim(&self) -> usize;

    /// Computes `y = A x`. Both slices must have length `dim()`.
    fn apply_into(&self, x: &[f64], y: &mut [f64]);

    /// Checked, allocating variant of [`apply_into`](Self::apply_into).
    fn apply(&self, x: &[f64]) -> Result<Vec<f64>> {
        let n = self.dim();
        if x.len() != n {
            return Err(Error::DimensionMismatch { expected: n, actual: x.len() });
        }
        let mut y = vec![0.0; n];
        self.apply_into(x, &mut y);
        Ok(y)
    }

    /// Cheap a-priori eigenvalue enclosure, when the storage format admits one.
    fn gershgorin_bounds(&self) -> Option<(f64, f64)> {
        None
    }
}

impl<T: SymmetricOperator + ?Sized> SymmetricOperator for &T {
    fn dim(&self) -> usize {
        (**self).dim()
    }
    fn apply_into(&self, x: &[f64], y: &mut [f64]) {
        (**self).apply_into(x, y)
    }
    fn gershgorin_bounds(&self) -> Option<(f64, f64)> {
        (**self).gershgorin_bounds()
    }
}

impl<T: SymmetricOperator + ?Sized + Send> SymmetricOperator for Arc<T> {
    fn dim(&self) -> usize {
        (**self).dim()
    }
    fn apply_into(&self, x: &[f64], y: &mut [f64]) {
        (**self).apply_into(x, y)
    }
    fn gershgorin_bounds(&self) -> Option<(f64, f64)> {
        (**self).gershgorin_bounds()
    }
}

/// Dot product with eight independent accumulators so the loop vectorizes.
/// The summation order is fixed, so results do not depend on threading.
#[inline]
pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    let mut acc = [0.0f64; 8];
    let ca = a.chunks_exact(8);
    let cb = b.chunks_exact(8);
    let (ra, rb) = (ca.remainder(), cb.remainder());
    for (x, y) in ca.zip(cb) {
        for j in 0..8 {
            acc[j] += x[j] * y[j];
        }
    }
    let mut tail = 0.0;
    for (x, y) in ra.iter().zip(rb) {
        tail += x * y;
    }
    ((acc[0] + acc[4]) + (acc[1] + acc[5])) + ((acc[2] + acc[6]) + (acc[3] + acc[7])) + tail
}

#[inline]
pub fn norm2(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

/// `y += alpha * x`
#[inline]
pub fn axpy(alpha: f64, x: &[f64], y: &mut [f64]) {
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += alpha * xi;
    }
}

/// Row-major dense matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseMatrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl DenseMatrix {
    pub fn new(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(Error::DimensionMismatch { expected: rows * cols, actual: data.len() });
        }
        Ok(Self { rows, cols, data })
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self { rows, cols, data: vec![0.0; rows * cols] }
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                data.push(f(i, j));
            }
        }
        Self { rows, cols, data }
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let cols = rows.first().map_or(0, Vec::len);
        let mut data = Vec::with_capacity(rows.len() * cols);
        for r in rows {
            if r.len() != cols {
                return Err(Error::DimensionMismatch { expected: cols, actual: r.len() });
            }
            data.extend_from_slice(r);
        }
        Ok(Self { rows: rows.len(), cols, data })
    }

    pub fn identity(n: usize) -> Self {
        Self::from_fn(n, n, |i, j| if i == j { 1.0 } else { 0.0 })
    }

    pub fn nrows(&self) -> usize {
        self.rows
    }

    pub fn ncols(&self) -> usize {
        self.cols
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.cols + j]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, value: f64) {
        self.data[i * self.cols + j] = value;
    }

    #[inline]
    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn as_mut_slice(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.data
    }

    pub fn transpose(&self) -> Self {
        Self::from_fn(self.cols, self.rows, |i, j| self.get(j, i))
    }

    pub fn frobenius_norm(&self) -> f64 {
        norm2(&self.data)
    }

    pub fn trace(&self) -> f64 {
        (0..self.rows.min(self.cols)).map(|i| self.get(i, i)).sum()
    }

    /// Largest entrywise asymmetry `|a_ij - a_ji|`; infinite for non-square matrices.
    pub fn asymmetry(&self) -> f64 {
        if self.rows != self.cols {
            return f64::INFINITY;
        }
        let mut worst = 0.0f64;
        for i in 0..self.rows {
            for j in 0..i {
                worst = worst.max((self.get(i, j) - self.get(j, i)).abs());
            }
        }
        worst
    }

    /// `y = M x`
    pub fn matvec_into(&self, x: &[f64], y: &mut [f64]) {
        assert_eq!(x.len(), self.cols);
        assert_eq!(y.len(), self.rows);
        for (i, yi) in y.iter_mut().enumerate() {
            *yi = dot(self.row(i), x);
        }
    }

    /// `y = M^T x`
    pub fn matvec_t_into(&self, x: &[f64], y: &mut [f64]) {
        assert_eq!(x.len(), self.rows);
        assert_eq!(y.len(), self.cols);
        y.fill(0.0);
        for (i, &xi) in x.iter().enumerate() {
            if xi != 0.0 {
                axpy(xi, self.row(i), y);
            }
        }
    }

    /// Dense product `self * other` through a blocked GEMM kernel.
    pub fn matmul(&self, other: &DenseMatrix) -> Result<DenseMatrix> {
        self.gemm(other, false)
    }

    /// `self * self^T`
    pub fn gram_outer(&self) -> DenseMatrix {
        self.gemm(self, true).expect("shapes agree by construction")
    }

    fn gemm(&self, other: &DenseMatrix, transpose_other: bool) -> Result<DenseMatrix> {
        let (k2, n) = if transpose_other { (other.cols, other.rows) } else { (other.rows, other.cols) };
        if self.cols != k2 {
            return Err(Error::DimensionMismatch { expected: self.cols, actual: k2 });
        }
        let (m, k) = (self.rows, self.cols);
        let mut out = DenseMatrix::zeros(m, n);
        let (rsb, csb) = if transpose_other { (1, other.cols as isize) } else { (other.cols as isize, 1) };
        // SAFETY: strides describe the row-major buffers owned by `self`,
        // `other` and `out`, whose lengths were checked on construction.
        unsafe {
            matrixmultiply::dgemm(
                m,
                k,
                n,
                1.0,
                self.data.as_ptr(),
                k as isize,
                1,
                other.data.as_ptr(),
                rsb,
                csb,
                0.0,
                out.data.as_mut_ptr(),
                n as isize,
                1,
            );
        }
        Ok(out)
    }
}

/// Compressed sparse row matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct CsrMatrix {
    rows: usize,
    cols: usize,
    indptr: Vec<usize>,
    indices: Vec<usize>,
    values: Vec<f64>,
}

impl CsrMatrix {
    /// Assembles a CSR matrix from 0-based triplets. Duplicate entries are
    /// summed; column indices within a row end up sorted.
    pub fn from_triplets(rows: usize, cols: usize, triplets: &[(usize, usize, f64)]) -> Result<Self> {
        let mut counts = vec![0usize; rows + 1];
        for &(i, j, _) in triplets {
            if i >= rows {
                return Err(Error::DimensionMismatch { expected: rows, actual: i + 1 });
            }
            if j >= cols {
                return Err(Error::DimensionMismatch { expected: cols, actual: j + 1 });
            }
            counts[i + 1] += 1;
        }
        for i in 0..rows {
            counts[i + 1] += counts[i];
        }
        let mut next = counts.clone();
        let mut cols_raw = vec![0usize; triplets.len()];
        let mut vals_raw = vec![0.0; triplets.len()];
        for &(i, j, v) in triplets {
            let slot = next[i];
            cols_raw[slot] = j;
            vals_raw[slot] = v;
            next[i] += 1;
        }

        let mut indptr = Vec::with_capacity(rows + 1);
        let mut indices = Vec::with_capacity(triplets.len());
        let mut values = Vec::with_capacity(triplets.len());
        indptr.push(0);
        let mut order: Vec<usize> = Vec::new();
        for i in 0..rows {
            let (lo, hi) = (counts[i], counts[i + 1]);
            order.clear();
            order.extend(lo..hi);
            order.sort_by_key(|&p| cols_raw[p]);
            let mut last: Option<usize> = None;
            for &p in &order {
                let j = cols_raw[p];
                if last == Some(j) {
                    *values.last_mut().expect("entry pushed for previous column") += vals_raw[p];
                } else {
                    indices.push(j);
                    values.push(vals_raw[p]);
                    last = Some(j);
                }
            }
            indptr.push(indices.len());
        }
        Ok(Self { rows, cols, indptr, indices, values })
    }

    /// Builds full symmetric storage from entries of one triangle: every
    /// off-diagonal `(i, j, v)` is mirrored to `(j, i, v)`; diagonal entries
    /// are stored once.
    pub fn from_symmetric_triangle(n: usize, triplets: &[(usize, usize, f64)]) -> Result<Self> {
        let mut full = Vec::with_capacity(2 * triplets.len());
        for &(i, j, v) in triplets {
            full.push((i, j, v));
            if i != j {
                full.push((j, i, v));
            }
        }
        Self::from_triplets(n, n, &full)
    }

    pub fn nrows(&self) -> usize {
        self.rows
    }

    pub fn ncols(&self) -> usize {
        self.cols
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    /// Iterates stored entries as `(row, col, value)`.
    pub fn triplets(&self) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
        (0..self.rows)
            .flat_map(move |i| (self.indptr[i]..self.indptr[i + 1]).map(move |p| (i, self.indices[p], self.values[p])))
    }

    pub fn matvec_into(&self, x: &[f64], y: &mut [f64]) {
        assert_eq!(x.len(), self.cols);
        assert_eq!(y.len(), self.rows);
        for (i, yi) in y.iter_mut().enumerate() {
            let (lo, hi) = (self.indptr[i], self.indptr[i + 1]);
            let mut s = 0.0;
            for p in lo..hi {
                s += self.values[p] * x[self.indices[p]];
            }
            *yi = s;
        }
    }

    pub fn matvec_t_into(&self, x: &[f64], y: &mut [f64]) {
        assert_eq!(x.len(), self.rows);
        assert_eq!(y.len(), self.cols);
        y.fill(0.0);
        for (i, &xi) in x.iter().enumerate() {
            for p in self.indptr[i]..self.indptr[i + 1] {
                y[self.indices[p]] += self.values[p] * xi;
            }
        }
    }

    pub fn to_dense(&self) -> DenseMatrix {
        let mut m = DenseMatrix::zeros(self.rows, self.cols);
        for (i, j, v) in self.triplets() {
            m.set(i, j, m.get(i, j) + v);
        }
        m
    }

    fn gershgorin(&self) -> (f64, f64) {
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        for i in 0..self.rows {
            let mut diag = 0.0;
            let mut radius = 0.0;
            for p in self.indptr[i]..self.indptr[i + 1] {
                if self.indices[p] == i {
                    diag += self.values[p];
                } else {
                    radius += self.values[p].abs();
                }
            }
            lo = lo.min(diag - radius);
            hi = hi.max(diag + radius);
        }
        (lo, hi)
    }
}

/// Which square product a [`LinearOperator::Gram`] represents.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GramSide {
    /// `X^T X`, dimension = number of columns of `X`.
    XtX,
    /// `X X^T`, dimension = number of rows of `X`.
    XXt,
}

/// Rectangular factor of a Gram operator.
#[derive(Debug, Clone, PartialEq)]
pub enum Factor {
    Dense(DenseMatrix),
    Sparse(CsrMatrix),
}

impl Factor {
    pub fn nrows(&self) -> usize {
        match self {
            Factor::Dense(m) => m.nrows(),
            Factor::Sparse(m) => m.nrows(),
        }
    }

    pub fn ncols(&self) -> usize {
        match self {
            Factor::Dense(m) => m.ncols(),
            Factor::Sparse(m) => m.ncols(),
        }
    }

    fn matvec_into(&self, x: &[f64], y: &mut [f64]) {
        match self {
            Factor::Dense(m) => m.matvec_into(x, y),
            Factor::Sparse(m) => m.matvec_into(x, y),
        }
    }

    fn matvec_t_into(&self, x: &[f64], y: &mut [f64]) {
        match self {
            Factor::Dense(m) => m.matvec_t_into(x, y),
            Factor::Sparse(m) => m.matvec_t_into(x, y),
        }
    }
}

/// The operator storage formats understood by the estimators.
#[derive(Debug, Clone)]
pub enum LinearOperator {
    DenseSymmetric(DenseMatrix),
    SparseSymmetric(CsrMatrix),
    Diagonal(Vec<f64>),
    /// Implicit `X^T X` or `X X^T`; the product is never formed.
    Gram {
        factor: Factor,
        side: GramSide,
    },
    /// `(A - center I) / half_width`
    ShiftedScaled {
        inner: Arc<LinearOperator>,
        center: f64,
        half_width: f64,
    },
    /// `Q A Q^T` with `Q = H_1 H_2 ... H_r` and `H_i = I - 2 u_i u_i^T` for
    /// unit vectors `u_i`. Dense in effect, `O(r n)` extra work per matvec.
    Reflected {
        inner: Arc<LinearOperator>,
        reflectors: Vec<Vec<f64>>,
    },
}

impl LinearOperator {
    pub fn dense(matrix: DenseMatrix) -> Result<Self> {
        if matrix.nrows() != matrix.ncols() {
            return Err(Error::DimensionMismatch { expected: matrix.nrows(), actual: matrix.ncols() });
        }
        Ok(LinearOperator::DenseSymmetric(matrix))
    }

    /// Sparse symmetric operator from full-storage triplets (both triangles present).
    pub fn sparse(n: usize, triplets: &[(usize, usize, f64)]) -> Result<Self> {
        Ok(LinearOperator::SparseSymmetric(CsrMatrix::from_triplets(n, n, triplets)?))
    }

    pub fn diagonal(values: Vec<f64>) -> Self {
        LinearOperator::Diagonal(values)
    }

    /// Gram operator of a rectangular factor. Without an explicit side, the
    /// smaller of `X^T X` and `X X^T` is chosen.
    pub fn gram(factor: Factor, side: Option<GramSide>) -> Self {
        let side = side.unwrap_or(if factor.ncols() <= factor.nrows() { GramSide::XtX } else { GramSide::XXt });
        LinearOperator::Gram { factor, side }
    }

    /// Materializes the operator as a dense matrix, column by column for the
    /// implicit variants.
    pub fn to_dense(&self) -> DenseMatrix {
        match self {
            LinearOperator::DenseSymmetric(m) => m.clone(),
            LinearOperator::SparseSymmetric(m) => m.to_dense(),
            _ => {
                let n = self.dim();
                let mut out = DenseMatrix::zeros(n, n);
                let mut e = vec![0.0; n];
                let mut col = vec![0.0; n];
                for j in 0..n {
                    e[j] = 1.0;
                    self.apply_into(&e, &mut col);
                    e[j] = 0.0;
                    for (i, &v) in col.iter().enumerate() {
                        out.set(i, j, v);
                    }
                }
                out
            }
        }
    }

    /// Short human-readable description of the storage variant.
    pub fn describe(&self) -> String {
        match self {
            LinearOperator::DenseSymmetric(m) => format!("dense symmetric {}x{}", m.nrows(), m.ncols()),
            LinearOperator::SparseSymmetric(m) => {
                format!("sparse symmetric {}x{} nnz={}", m.nrows(), m.ncols(), m.nnz())
            }
            LinearOperator::Diagonal(d) => format!("diagonal {}", d.len()),
            LinearOperator::Gram { factor, side } => {
                let s = match side {
                    GramSide::XtX => "X^T X",
                    GramSide::XXt => "X X^T",
                };
                format!("gram {} of {}x{} factor", s, factor.nrows(), factor.ncols())
            }
            LinearOperator::ShiftedScaled { inner, center, half_width } => {
                format!("({} - {center} I) / {half_width}", inner.describe())
            }
            LinearOperator::Reflected { inner, reflectors } => {
                format!("{} under {} Householder reflections", inner.describe(), reflectors.len())
            }
        }
    }

    /// Number of stored nonzeros touched by one matvec.
    pub fn nnz(&self) -> usize {
        match self {
            LinearOperator::DenseSymmetric(m) => m.nrows() * m.ncols(),
            LinearOperator::SparseSymmetric(m) => m.nnz(),
            LinearOperator::Diagonal(d) => d.len(),
            LinearOperator::Gram { factor: Factor::Dense(m), .. } => 2 * m.nrows() * m.ncols(),
            LinearOperator::Gram { factor: Factor::Sparse(m), .. } => 2 * m.nnz(),
            LinearOperator::ShiftedScaled { inner, .. } => inner.nnz(),
            LinearOperator::Reflected { inner, reflectors } => inner.nnz() + 4 * reflectors.len() * inner.dim(),
        }
    }
}

impl SymmetricOperator for LinearOperator {
    fn dim(&self) -> usize {
        match self {
            LinearOperator::DenseSymmetric(m) => m.nrows(),
            LinearOperator::SparseSymmetric(m) => m.nrows(),
            LinearOperator::Diagonal(d) => d.len(),
            LinearOperator::Gram { factor, side: GramSide::XtX } => factor.ncols(),
            LinearOperator::Gram { factor, side: GramSide::XXt } => factor.nrows(),
            LinearOperator::ShiftedScaled { inner, .. } => inner.dim(),
            LinearOperator::Reflected { inner, .. } => inner.dim(),
        }
    }

    fn apply_into(&self, x: &[f64], y: &mut [f64]) {
        match self {
            LinearOperator::DenseSymmetric(m) => m.matvec_into(x, y),
            LinearOperator::SparseSymmetric(m) => m.matvec_into(x, y),
            LinearOperator::Diagonal(d) => {
                assert_eq!(x.len(), d.len());
                for ((yi, xi), di) in y.iter_mut().zip(x).zip(d) {
                    *yi = di * xi;
                }
            }
            LinearOperator::Gram { factor, side } => match side {
                GramSide::XtX => {
                    let mut tmp = vec![0.0; factor.nrows()];
                    factor.matvec_into(x, &mut tmp);
                    factor.matvec_t_into(&tmp, y);
                }
                GramSide::XXt => {
                    let mut tmp = vec![0.0; factor.ncols()];
                    factor.matvec_t_into(x, &mut tmp);
                    factor.matvec_into(&tmp, y);
                }
            },
            LinearOperator::ShiftedScaled { inner, center, half_width } => {
                inner.apply_into(x, y);
                shift_scale_in_place(x, y, *center, *half_width);
            }
            LinearOperator::Reflected { inner, reflectors } => {
                let mut z = x.to_vec();
                for u in reflectors {
                    reflect(u, &mut z);
                }
                inner.apply_into(&z, y);
                for u in reflectors.iter().rev() {
                    reflect(u, y);
                }
            }
        }
    }

    fn gershgorin_bounds(&self) -> Option<(f64, f64)> {
        match self {
            LinearOperator::DenseSymmetric(m) => {
                let mut lo = f64::INFINITY;
                let mut hi = f64::NEG_INFINITY;
                for i in 0..m.nrows() {
                    let row = m.row(i);
                    let radius: f64 = row.iter().map(|v| v.abs()).sum::<f64>() - row[i].abs();
                    lo = lo.min(row[i] - radius);
                    hi = hi.max(row[i] + radius);
                }
                Some((lo, hi))
            }
            LinearOperator::SparseSymmetric(m) => Some(m.gershgorin()),
            LinearOperator::Diagonal(d) => {
                Some(d.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| (lo.min(v), hi.max(v))))
            }
            _ => None,
        }
    }
}

/// `x <- (I - 2 u u^T) x` for unit `u`.
pub(crate) fn reflect(u: &[f64], x: &mut [f64]) {
    let s = 2.0 * dot(u, x);
    axpy(-s, u, x);
}

#[inline]
fn shift_scale_in_place(x: &[f64], y: &mut [f64], center: f64, half_width: f64) {
    let inv = 1.0 / half_width;
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi = (*yi - center * xi) * inv;
    }
}

/// Affine image of a spectral interval: `lambda -> (lambda - center) / half_width`
/// sends `[lambda_min, lambda_max]` onto `[-1, 1]`.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct Window {
    pub lambda_min: f64,
    pub lambda_max: f64,
}

impl Window {
    pub fn new(lambda_min: f64, lambda_max: f64) -> Result<Self> {
        if !(lambda_max > lambda_min) || !lambda_min.is_finite() || !lambda_max.is_finite() {
            return Err(Error::InvalidWindow { min: lambda_min, max: lambda_max });
        }
        Ok(Self { lambda_min, lambda_max })
    }

    pub fn center(&self) -> f64 {
        0.5 * (self.lambda_max + self.lambda_min)
    }

    pub fn half_width(&self) -> f64 {
        0.5 * (self.lambda_max - self.lambda_min)
    }

    pub fn width(&self) -> f64 {
        self.lambda_max - self.lambda_min
    }

    /// `lambda -> t` in `[-1, 1]`.
    pub fn to_unit(&self, lambda: f64) -> f64 {
        (lambda - self.center()) / self.half_width()
    }

    /// `t -> lambda`
    pub fn from_unit(&self, t: f64) -> f64 {
        self.center() + self.half_width() * t
    }

    pub fn contains(&self, lambda: f64) -> bool {
        lambda >= self.lambda_min && lambda <= self.lambda_max
    }
}

/// Borrowed `(A - cI)/d` view used inside the estimators so the operator is
/// never cloned.
#[derive(Debug, Clone, Copy)]
pub struct MappedOperator<'a, O: ?Sized> {
    inner: &'a O,
    center: f64,
    half_width: f64,
}

impl<'a, O: SymmetricOperator + ?Sized> MappedOperator<'a, O> {
    pub fn new(inner: &'a O, window: Window) -> Self {
        Self { inner, center: window.center(), half_width: window.half_width() }
    }
}

impl<O: SymmetricOperator + ?Sized> SymmetricOperator for MappedOperator<'_, O> {
    fn dim(&self) -> usize {
        self.inner.dim()
    }

    fn apply_into(&self, x: &[f64], y: &mut [f64]) {
        self.inner.apply_into(x, y);
        shift_scale_in_place(x, y, self.center, self.half_width);
    }
}

/// Wraps `op` as `(A - cI)/d` with `c`, `d` the center and half-width of
/// `[lambda_min, lambda_max]`, so that a spectrum inside the bounds lands in `[-1, 1]`.
pub fn shift_scale(op: impl Into<Arc<LinearOperator>>, lambda_min: f64, lambda_max: f64) -> Result<LinearOperator> {
    let window = Window::new(lambda_min, lambda_max)?;
    Ok(LinearOperator::ShiftedScaled { inner: op.into(), center: window.center(), half_width: window.half_width() })
}
