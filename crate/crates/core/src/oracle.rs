//! Dense symmetric eigensolver used as ground truth for the estimators.
//!
//! Householder reduction to tridiagonal form followed by implicit QL on the
//! eigenvalues only. Optional verification recovers a handful of eigenvectors
//! by tridiagonal inverse iteration and checks their residuals against the
//! original matrix.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::dos::{DosCurve, DosMeta, DosMethod};
use crate::error::{Error, Result};
use crate::lanczos::implicit_ql;
use crate::linops::{axpy, dot, norm2, DenseMatrix};

pub const DEFAULT_CAP: usize = 4096;
pub const VERIFY_PAIRS: usize = 5;
/// Residual limit relative to the spectral norm.
pub const VERIFY_TOL: f64 = 1e-8;

/// Eigenvalues of a symmetric matrix in ascending order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExactSpectrum {
    pub eigenvalues: Vec<f64>,
}

impl ExactSpectrum {
    pub fn new(mut eigenvalues: Vec<f64>) -> Self {
        eigenvalues.sort_by(f64::total_cmp);
        Self { eigenvalues }
    }

    pub fn len(&self) -> usize {
        self.eigenvalues.len()
    }

    pub fn is_empty(&self) -> bool {
        self.eigenvalues.is_empty()
    }

    pub fn min(&self) -> f64 {
        self.eigenvalues[0]
    }

    pub fn max(&self) -> f64 {
        *self.eigenvalues.last().expect("nonempty spectrum")
    }

    pub fn spectral_norm(&self) -> f64 {
        self.min().abs().max(self.max().abs())
    }

    /// Number of eigenvalues `<= x`.
    pub fn count_le(&self, x: f64) -> usize {
        self.eigenvalues.partition_point(|&l| l <= x)
    }

    /// `min >= -tol * max(|max|, tiny)`
    pub fn is_psd(&self, tol: f64) -> bool {
        self.min() >= -tol * self.max().abs().max(f64::MIN_POSITIVE)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OracleOptions {
    pub cap: usize,
    pub verify: bool,
    /// Seeds the inverse-iteration start vectors.
    pub seed: u64,
}

impl Default for OracleOptions {
    fn default() -> Self {
        Self { cap: DEFAULT_CAP, verify: false, seed: 0 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EigenResidual {
    pub index: usize,
    pub lambda: f64,
    /// `||A v - lambda v||` for the unit vector `v`.
    pub residual: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OracleOutput {
    pub spectrum: ExactSpectrum,
    /// Present when verification was requested.
    pub residuals: Option<Vec<EigenResidual>>,
}

pub fn dense_eigs(a: &DenseMatrix) -> Result<ExactSpectrum> {
    dense_eigs_with(a, &OracleOptions::default()).map(|o| o.spectrum)
}

pub fn dense_eigs_with(a: &DenseMatrix, options: &OracleOptions) -> Result<OracleOutput> {
    let n = a.nrows();
    if a.ncols() != n {
        return Err(Error::DimensionMismatch { expected: n, actual: a.ncols() });
    }
    if n > options.cap {
        return Err(Error::CapExceeded { n, cap: options.cap });
    }
    if n == 0 {
        return Err(Error::InvalidConfig("empty matrix".into()));
    }
    let scale = a.frobenius_norm();
    if a.asymmetry() > 1e-10 * scale.max(f64::MIN_POSITIVE) {
        return Err(Error::InvalidConfig("oracle input is not symmetric".into()));
    }

    let mut work = a.clone();
    let reduction = tridiagonalize(&mut work);
    let mut d = reduction.diag.clone();
    let mut e = reduction.off.clone();
    e.push(0.0);
    implicit_ql(&mut d, &mut e, None)?;
    let spectrum = ExactSpectrum::new(d);

    let residuals = if options.verify { Some(verify(a, &work, &reduction, &spectrum, options.seed)?) } else { None };
    Ok(OracleOutput { spectrum, residuals })
}

/// Tridiagonal form `(diag, off)` plus the Householder scalars; the vectors
/// themselves stay in the upper triangle of the reduced matrix, `v_k` in row
/// `k` past the diagonal.
struct Reduction {
    diag: Vec<f64>,
    off: Vec<f64>,
    betas: Vec<f64>,
}

/// In-place reduction `Q^T A Q = T`, `Q = H_0 H_1 ... H_{n-2}` with
/// `H_k = I - beta_k v_k v_k^T` acting on indices `k+1..n`.
fn tridiagonalize(a: &mut DenseMatrix) -> Reduction {
    let n = a.nrows();
    let mut diag = vec![0.0; n];
    let mut off = vec![0.0; n.saturating_sub(1)];
    let mut betas = vec![0.0; n.saturating_sub(1)];
    let mut p = vec![0.0; n];
    let data = a.as_mut_slice();

    for k in 0..n.saturating_sub(1) {
        diag[k] = data[k * n + k];
        let m = n - k - 1;
        let start = k * n + k + 1;
        let tail_max = data[start + 1..start + m].iter().fold(0.0f64, |s, x| s.max(x.abs()));
        if tail_max == 0.0 {
            off[k] = data[start];
            continue;
        }
        // Work on x / max|x| so that squares neither underflow nor overflow;
        // the reflector does not depend on the scaling of v.
        let scale = tail_max.max(data[start].abs());
        data[start..start + m].iter_mut().for_each(|x| *x /= scale);
        let x0 = data[start];
        let alpha = -x0.hypot(norm2(&data[start + 1..start + m])).copysign(x0);
        data[start] = x0 - alpha;
        let v: Vec<f64> = data[start..start + m].to_vec();
        let beta = 2.0 / dot(&v, &v);
        off[k] = alpha * scale;
        betas[k] = beta;

        // p = beta B v on the trailing block B, then w = p - (beta/2)(p.v) v.
        let block = k + 1;
        for (i, pi) in p[..m].iter_mut().enumerate() {
            let row = (block + i) * n + block;
            *pi = beta * dot(&data[row..row + m], &v);
        }
        let kappa = 0.5 * beta * dot(&p[..m], &v);
        axpy(-kappa, &v, &mut p[..m]);
        for i in 0..m {
            let row = (block + i) * n + block;
            let (vi, wi) = (v[i], p[i]);
            for ((bij, vj), wj) in data[row..row + m].iter_mut().zip(&v).zip(&p[..m]) {
                *bij -= vi * wj + wi * vj;
            }
        }
    }
    diag[n - 1] = data[n * n - 1];
    Reduction { diag, off, betas }
}

fn verify(
    original: &DenseMatrix,
    reduced: &DenseMatrix,
    reduction: &Reduction,
    spectrum: &ExactSpectrum,
    seed: u64,
) -> Result<Vec<EigenResidual>> {
    let n = original.nrows();
    let norm = spectrum.spectral_norm();
    let limit = VERIFY_TOL * norm.max(f64::MIN_POSITIVE);
    let tiny = f64::EPSILON * norm.max(f64::MIN_POSITIVE);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let picks = VERIFY_PAIRS.min(n);
    let mut out = Vec::with_capacity(picks);
    let mut av = vec![0.0; n];
    for j in 0..picks {
        let index = if picks == 1 { 0 } else { j * (n - 1) / (picks - 1) };
        let lambda = spectrum.eigenvalues[index];
        let mut y: Vec<f64> = (0..n).map(|_| StandardNormal.sample(&mut rng)).collect();
        for _ in 0..3 {
            tridiag_shifted_solve(&reduction.diag, &reduction.off, lambda, &mut y, tiny);
            let s = norm2(&y);
            y.iter_mut().for_each(|v| *v /= s);
        }
        back_transform(reduced, &reduction.betas, &mut y);
        original.matvec_into(&y, &mut av);
        axpy(-lambda, &y, &mut av);
        let residual = norm2(&av);
        if residual > limit {
            return Err(Error::VerificationFailed { lambda, residual, limit });
        }
        out.push(EigenResidual { index, lambda, residual });
    }
    Ok(out)
}

/// `y <- Q y` using the reflectors stored by [`tridiagonalize`].
fn back_transform(reduced: &DenseMatrix, betas: &[f64], y: &mut [f64]) {
    let n = y.len();
    for k in (0..n.saturating_sub(1)).rev() {
        if betas[k] == 0.0 {
            continue;
        }
        let v = &reduced.row(k)[k + 1..];
        let s = betas[k] * dot(v, &y[k + 1..]);
        axpy(-s, v, &mut y[k + 1..]);
    }
}

/// Solves `(T - mu I) x = b` in place by Gaussian elimination with partial
/// pivoting; exact zero pivots are replaced by `tiny`.
fn tridiag_shifted_solve(diag: &[f64], off: &[f64], mu: f64, b: &mut [f64], tiny: f64) {
    let n = diag.len();
    if n == 1 {
        let p = diag[0] - mu;
        b[0] /= if p == 0.0 { tiny } else { p };
        return;
    }
    let mut dl = off.to_vec();
    let mut dd: Vec<f64> = diag.iter().map(|d| d - mu).collect();
    let mut du = off.to_vec();
    let mut du2 = vec![0.0; n.saturating_sub(2)];
    let mut swapped = vec![false; n - 1];
    for i in 0..n - 1 {
        if dd[i].abs() >= dl[i].abs() {
            if dd[i] == 0.0 {
                dd[i] = tiny;
            }
            let fact = dl[i] / dd[i];
            dl[i] = fact;
            dd[i + 1] -= fact * du[i];
        } else {
            let fact = dd[i] / dl[i];
            dd[i] = dl[i];
            dl[i] = fact;
            let temp = du[i];
            du[i] = dd[i + 1];
            dd[i + 1] = temp - fact * dd[i + 1];
            if i + 2 < n {
                du2[i] = du[i + 1];
                du[i + 1] *= -fact;
            }
            swapped[i] = true;
        }
    }
    if dd[n - 1] == 0.0 {
        dd[n - 1] = tiny;
    }
    for i in 0..n - 1 {
        if swapped[i] {
            let temp = b[i];
            b[i] = b[i + 1];
            b[i + 1] = temp - dl[i] * b[i];
        } else {
            b[i + 1] -= dl[i] * b[i];
        }
    }
    b[n - 1] /= dd[n - 1];
    b[n - 2] = (b[n - 2] - du[n - 2] * b[n - 1]) / dd[n - 2];
    for i in (0..n.saturating_sub(2)).rev() {
        b[i] = (b[i] - du[i] * b[i + 1] - du2[i] * b[i + 2]) / dd[i];
    }
}

/// Number of eigenvalues in `(a, b]`.
pub fn exact_count(spectrum: &ExactSpectrum, a: f64, b: f64) -> Result<usize> {
    if !(a < b) {
        return Err(Error::InvalidInterval { a, b, reason: "lower end must be below upper end" });
    }
    Ok(spectrum.count_le(b) - spectrum.count_le(a))
}

/// `(1/n) sum_j N(t; lambda_j, blur^2)` on the given grid.
pub fn exact_dos(spectrum: &ExactSpectrum, grid: &[f64], blur: f64) -> Result<DosCurve> {
    if !(blur > 0.0) {
        return Err(Error::InvalidConfig("blur width must be positive".into()));
    }
    if grid.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::InvalidConfig("grid must be strictly increasing".into()));
    }
    let norm = 1.0 / (blur * (2.0 * std::f64::consts::PI).sqrt() * spectrum.len() as f64);
    // Eigenvalues farther than 10 widths contribute below 1e-21 relative.
    let reach = 10.0 * blur;
    let phi = grid
        .iter()
        .map(|&t| {
            let lo = spectrum.eigenvalues.partition_point(|&l| l < t - reach);
            let hi = spectrum.eigenvalues.partition_point(|&l| l <= t + reach);
            spectrum.eigenvalues[lo..hi].iter().map(|&l| (-0.5 * ((t - l) / blur).powi(2)).exp()).sum::<f64>() * norm
        })
        .collect();
    Ok(DosCurve {
        t: grid.to_vec(),
        phi,
        meta: DosMeta { method: DosMethod::Exact, degree: 0, nv: 0, damping: None, blur: Some(blur) },
    })
}
