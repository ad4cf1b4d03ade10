//! Lanczos tridiagonalization, spectrum bounds, and the symmetric
//! tridiagonal eigensolver that yields Gauss quadrature nodes and weights.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linops::{axpy, dot, norm2, SymmetricOperator, Window};
use crate::probe::{probe_vector, ProbeConfig, ProbeDistribution};

/// Full reorthogonalization is switched on automatically up to this many steps.
pub const AUTO_REORTH_MAX_STEPS: usize = 200;
pub const DEFAULT_BOUNDS_STEPS: usize = 30;
pub const DEFAULT_SAFETY: f64 = 0.01;
const BOUNDS_SEED: u64 = 0x0b0d_5eed;
const BREAKDOWN_TOL: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TridiagonalMatrix {
    pub alpha: Vec<f64>,
    /// Off-diagonal, `alpha.len() - 1` nonnegative entries.
    pub beta: Vec<f64>,
}

impl TridiagonalMatrix {
    pub fn new(alpha: Vec<f64>, beta: Vec<f64>) -> Result<Self> {
        if alpha.is_empty() || beta.len() + 1 != alpha.len() {
            return Err(Error::DimensionMismatch { expected: alpha.len().saturating_sub(1), actual: beta.len() });
        }
        Ok(Self { alpha, beta })
    }

    pub fn len(&self) -> usize {
        self.alpha.len()
    }

    pub fn is_empty(&self) -> bool {
        self.alpha.is_empty()
    }

    /// Row-major dense copy, for tests and small diagnostics.
    pub fn to_dense(&self) -> Vec<Vec<f64>> {
        let m = self.len();
        let mut t = vec![vec![0.0; m]; m];
        for i in 0..m {
            t[i][i] = self.alpha[i];
            if i + 1 < m {
                t[i][i + 1] = self.beta[i];
                t[i + 1][i] = self.beta[i];
            }
        }
        t
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum Reorthogonalization {
    /// Full reorthogonalization when `steps <= AUTO_REORTH_MAX_STEPS`.
    #[default]
    Auto,
    Full,
    None,
}

impl Reorthogonalization {
    fn enabled(self, steps: usize) -> bool {
        match self {
            Reorthogonalization::Auto => steps <= AUTO_REORTH_MAX_STEPS,
            Reorthogonalization::Full => true,
            Reorthogonalization::None => false,
        }
    }
}

#[derive(Debug, Clone)]
pub struct LanczosOutput {
    pub tridiagonal: TridiagonalMatrix,
    /// True when an off-diagonal fell below the breakdown tolerance and the
    /// recurrence stopped early; `tridiagonal` then holds the steps completed.
    pub breakdown: bool,
    /// Krylov basis, retained only when reorthogonalizing.
    pub basis: Option<Vec<Vec<f64>>>,
}

/// Runs `steps` Lanczos iterations from the unit vector `v1`.
pub fn lanczos<O: SymmetricOperator + ?Sized>(
    op: &O,
    v1: &[f64],
    steps: usize,
    reorth: Reorthogonalization,
) -> Result<LanczosOutput> {
    let n = op.dim();
    if v1.len() != n {
        return Err(Error::DimensionMismatch { expected: n, actual: v1.len() });
    }
    if steps == 0 {
        return Err(Error::InvalidConfig("Lanczos needs at least one step".into()));
    }
    if steps > n {
        return Err(Error::KrylovTooLarge { steps, n });
    }
    if (norm2(v1) - 1.0).abs() > 1e-8 {
        return Err(Error::InvalidConfig("Lanczos start vector must have unit norm".into()));
    }

    let full = reorth.enabled(steps);
    let mut basis: Vec<Vec<f64>> = Vec::with_capacity(if full { steps } else { 0 });
    let mut alpha = Vec::with_capacity(steps);
    let mut beta = Vec::with_capacity(steps.saturating_sub(1));
    let mut breakdown = false;

    let mut v_prev = vec![0.0; n];
    let mut v = v1.to_vec();
    let mut w = vec![0.0; n];
    let mut beta_prev = 0.0;
    let mut anorm = 0.0f64;

    for j in 0..steps {
        op.apply_into(&v, &mut w);
        let a = dot(&v, &w);
        axpy(-a, &v, &mut w);
        if j > 0 {
            axpy(-beta_prev, &v_prev, &mut w);
        }
        if full {
            basis.push(v.clone());
            // Classical Gram-Schmidt, applied twice.
            for _ in 0..2 {
                for q in &basis {
                    let c = dot(q, &w);
                    axpy(-c, q, &mut w);
                }
            }
        }
        alpha.push(a);
        let b = norm2(&w);
        anorm = anorm.max(a.abs() + b + beta_prev);
        if j + 1 == steps {
            break;
        }
        if b <= BREAKDOWN_TOL * anorm {
            breakdown = true;
            break;
        }
        beta.push(b);
        std::mem::swap(&mut v_prev, &mut v);
        for (vi, wi) in v.iter_mut().zip(&w) {
            *vi = wi / b;
        }
        beta_prev = b;
    }

    Ok(LanczosOutput { tridiagonal: TridiagonalMatrix { alpha, beta }, breakdown, basis: full.then_some(basis) })
}

/// Ritz values and Gauss quadrature weights of a tridiagonal matrix.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RitzSpectrum {
    /// Ascending.
    pub theta: Vec<f64>,
    /// Squared first components of the corresponding eigenvectors.
    pub tau_sq: Vec<f64>,
}

impl RitzSpectrum {
    pub fn len(&self) -> usize {
        self.theta.len()
    }

    pub fn is_empty(&self) -> bool {
        self.theta.is_empty()
    }

    /// `sum_k tau_k^2 f(theta_k)`
    pub fn quadrature(&self, f: impl Fn(f64) -> f64) -> f64 {
        self.theta.iter().zip(&self.tau_sq).map(|(&t, &w)| w * f(t)).sum()
    }
}

/// Eigen-decomposition of a symmetric tridiagonal matrix by implicit QL
/// iterations with Wilkinson shifts. Only the first row of the eigenvector
/// matrix is accumulated.
pub fn tridiag_eigen(t: &TridiagonalMatrix) -> Result<RitzSpectrum> {
    let m = t.len();
    if m == 0 || t.beta.len() + 1 != m {
        return Err(Error::DimensionMismatch { expected: m.saturating_sub(1), actual: t.beta.len() });
    }
    let mut d = t.alpha.clone();
    let mut e = t.beta.clone();
    e.push(0.0);
    let mut z = vec![0.0; m];
    z[0] = 1.0;
    implicit_ql(&mut d, &mut e, Some(&mut z))?;

    let mut order: Vec<usize> = (0..m).collect();
    order.sort_by(|&a, &b| d[a].total_cmp(&d[b]));
    Ok(RitzSpectrum {
        theta: order.iter().map(|&i| d[i]).collect(),
        tau_sq: order.iter().map(|&i| z[i] * z[i]).collect(),
    })
}

/// Implicit QL with Wilkinson shifts on the tridiagonal `(d, e)`, where
/// `e[i]` couples `d[i]` and `d[i + 1]` and `e` has the length of `d`.
/// Eigenvalues overwrite `d` unsorted; `z`, when given, is a row of the
/// eigenvector matrix and receives the same plane rotations.
pub(crate) fn implicit_ql(d: &mut [f64], e: &mut [f64], mut z: Option<&mut [f64]>) -> Result<()> {
    let m = d.len();
    debug_assert_eq!(e.len(), m);
    let budget = 30 * m;
    let mut rotations_used = 0usize;
    // Couplings below eps * ||T|| are dropped even between tiny diagonal
    // entries; a purely relative test keeps rotating roundoff-level blocks
    // until they underflow.
    let floor = f64::EPSILON * d.iter().zip(e.iter()).map(|(a, b)| a.abs() + b.abs()).fold(0.0, f64::max);
    for l in 0..m {
        loop {
            let mut mm = l;
            while mm + 1 < m {
                let dd = d[mm].abs() + d[mm + 1].abs();
                if e[mm].abs() <= f64::EPSILON * dd || e[mm].abs() <= floor {
                    break;
                }
                mm += 1;
            }
            if mm == l {
                break;
            }
            rotations_used += 1;
            if rotations_used > budget {
                return Err(Error::NoConvergence { what: "tridiagonal QL iteration", budget });
            }

            let mut g = (d[l + 1] - d[l]) / (2.0 * e[l]);
            let mut r = g.hypot(1.0);
            g = d[mm] - d[l] + e[l] / (g + r.copysign(g));
            let (mut s, mut c, mut p) = (1.0, 1.0, 0.0);
            let mut deflated = false;
            for i in (l..mm).rev() {
                let f = s * e[i];
                let b = c * e[i];
                r = f.hypot(g);
                e[i + 1] = r;
                if r == 0.0 {
                    d[i + 1] -= p;
                    e[mm] = 0.0;
                    deflated = true;
                    break;
                }
                s = f / r;
                c = g / r;
                g = d[i + 1] - p;
                r = (d[i] - g) * s + 2.0 * c * b;
                p = s * r;
                d[i + 1] = g + p;
                g = c * r - b;
                if let Some(z) = z.as_deref_mut() {
                    let zf = z[i + 1];
                    z[i + 1] = s * z[i] + c * zf;
                    z[i] = c * z[i] - s * zf;
                }
            }
            if deflated {
                continue;
            }
            d[l] -= p;
            e[l] = g;
            e[mm] = 0.0;
        }
    }
    Ok(())
}

/// Estimates an interval enclosing the spectrum from `steps` Lanczos
/// iterations, widened by `safety * (theta_max - theta_min)` on each side.
pub fn spectrum_bounds<O: SymmetricOperator + ?Sized>(op: &O, steps: usize, safety: f64) -> Result<Window> {
    bounds_impl(op, steps, safety, false)
}

/// As [`spectrum_bounds`], for operators known to be positive semidefinite:
/// the lower end becomes `min(theta_min, 0)` minus the widening, since Ritz
/// values overestimate the smallest eigenvalue.
pub fn spectrum_bounds_psd<O: SymmetricOperator + ?Sized>(op: &O, steps: usize, safety: f64) -> Result<Window> {
    bounds_impl(op, steps, safety, true)
}

fn bounds_impl<O: SymmetricOperator + ?Sized>(op: &O, steps: usize, safety: f64, psd: bool) -> Result<Window> {
    if steps < 2 {
        return Err(Error::InvalidConfig("spectrum bounds need at least 2 Lanczos steps".into()));
    }
    if !(safety >= 0.0) {
        return Err(Error::InvalidConfig("safety margin must be nonnegative".into()));
    }
    let n = op.dim();
    let steps = steps.min(n);
    let start = probe_vector(n, &ProbeConfig::new(1, ProbeDistribution::Gaussian, BOUNDS_SEED), 0);
    let run = lanczos(op, &start, steps, Reorthogonalization::Auto)?;
    let (lo, hi) = if run.tridiagonal.len() < 2 {
        op.gershgorin_bounds().ok_or_else(|| {
            Error::Breakdown("Lanczos broke down before 2 steps and the operator has no Gershgorin bound".into())
        })?
    } else {
        let ritz = tridiag_eigen(&run.tridiagonal)?;
        (ritz.theta[0], *ritz.theta.last().expect("nonempty"))
    };

    let mut widen = safety * (hi - lo);
    if widen == 0.0 {
        widen = safety * lo.abs().max(hi.abs());
    }
    let lower = if psd { lo.min(0.0) - widen } else { lo - widen };
    Window::new(lower, hi + widen)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linops::{DenseMatrix, LinearOperator};
    use crate::probe::generate_probes;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn unit(v: Vec<f64>) -> Vec<f64> {
        let n = norm2(&v);
        v.into_iter().map(|x| x / n).collect()
    }

    /// Eigenvalues of a small dense symmetric matrix by cyclic Jacobi
    /// rotations, independent of the QL code under test.
    #[allow(clippy::needless_range_loop)]
    fn jacobi_eigenvalues(mut a: Vec<Vec<f64>>) -> Vec<f64> {
        let n = a.len();
        for _ in 0..100 {
            let off: f64 = (0..n)
                .flat_map(|i| (0..n).filter(move |&j| j != i).map(move |j| (i, j)))
                .map(|(i, j)| a[i][j] * a[i][j])
                .sum();
            if off < 1e-30 {
                break;
            }
            for p in 0..n {
                for q in p + 1..n {
                    if a[p][q].abs() < 1e-300 {
                        continue;
                    }
                    let theta = (a[q][q] - a[p][p]) / (2.0 * a[p][q]);
                    let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                    let t = if theta == 0.0 { 1.0 } else { t };
                    let c = 1.0 / (t * t + 1.0).sqrt();
                    let s = t * c;
                    for k in 0..n {
                        let (akp, akq) = (a[k][p], a[k][q]);
                        a[k][p] = c * akp - s * akq;
                        a[k][q] = s * akp + c * akq;
                    }
                    for k in 0..n {
                        let (apk, aqk) = (a[p][k], a[q][k]);
                        a[p][k] = c * apk - s * aqk;
                        a[q][k] = s * apk + c * aqk;
                    }
                }
            }
        }
        let mut ev: Vec<f64> = (0..n).map(|i| a[i][i]).collect();
        ev.sort_by(f64::total_cmp);
        ev
    }

    #[test]
    fn one_by_one() {
        let r = tridiag_eigen(&TridiagonalMatrix::new(vec![2.0], vec![]).unwrap()).unwrap();
        assert_eq!(r.theta, vec![2.0]);
        assert_eq!(r.tau_sq, vec![1.0]);
    }

    #[test]
    fn two_by_two() {
        let r = tridiag_eigen(&TridiagonalMatrix::new(vec![0.0, 0.0], vec![1.0]).unwrap()).unwrap();
        assert!((r.theta[0] + 1.0).abs() < 1e-15 && (r.theta[1] - 1.0).abs() < 1e-15);
        assert!((r.tau_sq[0] - 0.5).abs() < 1e-15 && (r.tau_sq[1] - 0.5).abs() < 1e-15);
    }

    #[test]
    fn ritz_values_match_jacobi_and_weights_sum_to_one() {
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        for m in [3, 8, 25] {
            let alpha: Vec<f64> = (0..m).map(|_| rng.random_range(-2.0..2.0)).collect();
            let beta: Vec<f64> = (0..m - 1).map(|_| rng.random_range(0.0..1.0)).collect();
            let t = TridiagonalMatrix::new(alpha, beta).unwrap();
            let r = tridiag_eigen(&t).unwrap();
            let expected = jacobi_eigenvalues(t.to_dense());
            for (a, b) in r.theta.iter().zip(&expected) {
                assert!((a - b).abs() < 1e-11, "{a} vs {b}");
            }
            assert!((r.tau_sq.iter().sum::<f64>() - 1.0).abs() < 1e-10);
            assert!(r.tau_sq.iter().all(|&w| w >= 0.0));
            assert!(r.theta.windows(2).all(|w| w[0] <= w[1]));
        }
    }

    #[test]
    fn weights_reproduce_moments_of_t() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let m = 50;
        let alpha: Vec<f64> = (0..m).map(|_| rng.random_range(-1.0..1.0)).collect();
        let beta: Vec<f64> = (0..m - 1).map(|_| rng.random_range(0.1..1.0)).collect();
        let t = TridiagonalMatrix::new(alpha, beta).unwrap();
        let r = tridiag_eigen(&t).unwrap();
        // e1^T T^p e1 by repeated dense products.
        let dense = t.to_dense();
        let mut x = vec![0.0; m];
        x[0] = 1.0;
        for p in 0..=5 {
            let exact = x[0];
            let quad = r.quadrature(|th| th.powi(p));
            assert!((quad - exact).abs() <= 1e-9 * exact.abs().max(1.0), "p={p}: {quad} vs {exact}");
            x = (0..m).map(|i| (0..m).map(|j| dense[i][j] * x[j]).sum()).collect();
        }
    }

    #[test]
    fn full_krylov_reproduces_spectrum() {
        let op = LinearOperator::diagonal(vec![1.0, 2.0, 3.0, 4.0]);
        let v = unit(vec![1.0, 0.7, -0.4, 0.9]);
        let run = lanczos(&op, &v, 4, Reorthogonalization::Auto).unwrap();
        assert!(!run.breakdown);
        let r = tridiag_eigen(&run.tridiagonal).unwrap();
        for (a, b) in r.theta.iter().zip([1.0, 2.0, 3.0, 4.0]) {
            assert!((a - b).abs() < 1e-8);
        }
    }

    #[test]
    fn identity_single_step() {
        let op = LinearOperator::dense(DenseMatrix::identity(7)).unwrap();
        let v = unit(vec![1.0; 7]);
        let run = lanczos(&op, &v, 1, Reorthogonalization::Auto).unwrap();
        assert_eq!(run.tridiagonal.alpha.len(), 1);
        assert!((run.tridiagonal.alpha[0] - 1.0).abs() < 1e-15);
        assert!(run.tridiagonal.beta.is_empty());
    }

    #[test]
    fn breakdown_truncates() {
        let op = LinearOperator::diagonal(vec![1.0, 1.0, 0.0, 0.0]);
        let v = unit(vec![1.0, 1.0, 1.0, 1.0]);
        let run = lanczos(&op, &v, 4, Reorthogonalization::Auto).unwrap();
        assert!(run.breakdown);
        assert_eq!(run.tridiagonal.len(), 2);
        let r = tridiag_eigen(&run.tridiagonal).unwrap();
        assert!((r.theta[0]).abs() < 1e-12 && (r.theta[1] - 1.0).abs() < 1e-12);
        assert!((r.tau_sq[0] - 0.5).abs() < 1e-12);
    }

    #[test]
    fn rejects_too_many_steps() {
        let op = LinearOperator::diagonal(vec![1.0, 2.0]);
        assert!(matches!(
            lanczos(&op, &unit(vec![1.0, 1.0]), 3, Reorthogonalization::Auto),
            Err(Error::KrylovTooLarge { steps: 3, n: 2 })
        ));
    }

    #[test]
    fn extreme_ritz_value_converges() {
        let mut rng = ChaCha8Rng::seed_from_u64(99);
        let mut d: Vec<f64> = (0..500).map(|_| rng.random_range(0.0..1.0)).collect();
        d[123] = 1.5;
        let lmax = 1.5;
        let op = LinearOperator::diagonal(d);
        let v = &generate_probes(500, &ProbeConfig::default()).unwrap()[0];
        let run = lanczos(&op, v, 50, Reorthogonalization::Auto).unwrap();
        let r = tridiag_eigen(&run.tridiagonal).unwrap();
        assert!((r.theta.last().unwrap() - lmax).abs() < 1e-6);
    }

    #[test]
    fn basis_stays_orthonormal() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let d: Vec<f64> = (0..300)
            .map(|i| if i < 280 { rng.random_range(0.0..1e-3) } else { 1.0 + rng.random_range(0.0..1e-3) })
            .collect();
        let op = LinearOperator::diagonal(d);
        let v = &generate_probes(300, &ProbeConfig::default()).unwrap()[0];
        let run = lanczos(&op, v, 80, Reorthogonalization::Auto).unwrap();
        let basis = run.basis.unwrap();
        for i in 0..basis.len() {
            for j in 0..i {
                assert!(dot(&basis[i], &basis[j]).abs() <= 1e-8);
            }
        }
    }

    #[test]
    fn ritz_values_interlace() {
        let mut rng = ChaCha8Rng::seed_from_u64(10);
        let d: Vec<f64> = (0..200).map(|_| rng.random_range(-3.0..5.0)).collect();
        let op = LinearOperator::diagonal(d);
        let v = &generate_probes(200, &ProbeConfig::default()).unwrap()[0];
        let run = lanczos(&op, v, 21, Reorthogonalization::Auto).unwrap();
        let full = tridiag_eigen(&run.tridiagonal).unwrap();
        let t = &run.tridiagonal;
        let shorter = TridiagonalMatrix::new(t.alpha[..20].to_vec(), t.beta[..19].to_vec()).unwrap();
        let part = tridiag_eigen(&shorter).unwrap();
        assert!(part.theta[0] >= full.theta[0] - 1e-12);
        assert!(part.theta.last().unwrap() <= &(full.theta.last().unwrap() + 1e-12));
    }

    #[test]
    fn bounds_enclose_spectrum() {
        let d: Vec<f64> = (0..=1000).map(|i| i as f64 / 100.0).collect();
        let op = LinearOperator::diagonal(d);
        let w = spectrum_bounds(&op, 30, 0.01).unwrap();
        assert!(w.lambda_min <= 0.0 && w.lambda_max >= 10.0, "{w:?}");
        let w = spectrum_bounds_psd(&op, 30, 0.01).unwrap();
        assert!(w.lambda_min < 0.0 && w.lambda_max >= 10.0);
    }

    #[test]
    fn identity_bounds_widened_around_one() {
        let op = LinearOperator::diagonal(vec![1.0; 16]);
        let w = spectrum_bounds(&op, 30, 0.01).unwrap();
        assert!((w.lambda_min - 0.99).abs() < 1e-12 && (w.lambda_max - 1.01).abs() < 1e-12, "{w:?}");
    }

    #[test]
    fn zero_operator_has_no_window() {
        let op = LinearOperator::diagonal(vec![0.0; 16]);
        assert!(matches!(spectrum_bounds(&op, 30, 0.01), Err(Error::InvalidWindow { .. })));
    }

    #[test]
    fn gram_breakdown_without_gershgorin_errors() {
        use crate::linops::{Factor, GramSide};
        // X^T X = 4 I for this factor, so Lanczos stops after one step.
        let x = DenseMatrix::from_rows(&[vec![2.0, 0.0], vec![0.0, 2.0]]).unwrap();
        let op = LinearOperator::gram(Factor::Dense(x), Some(GramSide::XtX));
        assert!(matches!(spectrum_bounds(&op, 30, 0.01), Err(Error::Breakdown(_))));
    }
}
