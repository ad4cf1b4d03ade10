//! Synthetic test matrices with known rank or spectrum.

use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linops::{norm2, DenseMatrix, LinearOperator};

pub const HOUSEHOLDER_REFLECTORS: usize = 5;
pub const MATERN_1D_LENGTH_SCALE: f64 = 0.05;
pub const MATERN_2D_LENGTH_SCALE: f64 = 0.1;

/// How additive noise enters a Hadamard low-rank matrix.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NoiseModel {
    /// `A = H H^T + N N^T` with `N = sigma G`. Keeps `A` positive
    /// semidefinite; the noise eigenvalues fill `[0, ~4 n sigma^2]`.
    #[default]
    Gram,
    /// `A = H H^T + (N + N^T) / 2`. Noise eigenvalues are symmetric about 0.
    Symmetric,
}

/// Parameters of a generated matrix; generation is a pure function of them.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case")]
pub enum SyntheticSpec {
    HadamardLowRank { n: usize, k: usize, sigma: f64, seed: u64, noise: NoiseModel },
    Matern1d { n: usize, nu: f64, length_scale: f64 },
    Matern2d { p: usize, q: usize, nu: f64, length_scale: f64 },
    PlantedSpectrum { eigenvalues: Vec<f64>, rotate: bool, seed: u64 },
}

impl SyntheticSpec {
    pub fn generate(&self) -> Result<Synthetic> {
        match self {
            SyntheticSpec::HadamardLowRank { n, k, sigma, seed, noise } => {
                hadamard_lowrank(*n, *k, *sigma, *seed, *noise)
            }
            SyntheticSpec::Matern1d { n, nu, length_scale } => {
                matern_covariance(MaternGrid::OneD(*n), *nu, *length_scale)
            }
            SyntheticSpec::Matern2d { p, q, nu, length_scale } => {
                matern_covariance(MaternGrid::TwoD(*p, *q), *nu, *length_scale)
            }
            SyntheticSpec::PlantedSpectrum { eigenvalues, rotate, seed } => {
                planted_spectrum(eigenvalues.clone(), *rotate, *seed)
            }
        }
    }
}

/// What is known about a generated matrix by construction.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroundTruth {
    pub spec: SyntheticSpec,
    pub n: usize,
    /// Rank of the noise-free part, when the family has one.
    pub rank: Option<usize>,
    /// `20 log10(||signal||_F / ||noise||_F)`, for noisy families.
    pub snr_db: Option<f64>,
    /// Exact eigenvalues, ascending, when planted.
    pub eigenvalues: Option<Vec<f64>>,
}

#[derive(Debug, Clone)]
pub struct Synthetic {
    pub operator: LinearOperator,
    pub truth: GroundTruth,
}

/// `H H^T` with `H` the first `k` columns of the `n x n` Sylvester Hadamard
/// matrix scaled by `1/sqrt(n)`, plus noise of level `sigma`.
///
/// The scaled Hadamard matrix is orthogonal, so the noise-free part has `k`
/// unit eigenvalues and `n - k` zeros.
pub fn hadamard_lowrank(n: usize, k: usize, sigma: f64, seed: u64, noise: NoiseModel) -> Result<Synthetic> {
    if !n.is_power_of_two() {
        return Err(Error::InvalidConfig(format!("Hadamard size {n} is not a power of two")));
    }
    if k == 0 || k > n {
        return Err(Error::InvalidConfig(format!("rank {k} must lie in 1..={n}")));
    }
    if !(sigma >= 0.0) || !sigma.is_finite() {
        return Err(Error::InvalidConfig("noise level must be finite and nonnegative".into()));
    }

    // (H H^T)_ij = (1/n) sum_{c<k} (-1)^popcount((i ^ j) & c) depends on i ^ j only.
    let profile: Vec<f64> = (0..n)
        .map(|x| {
            let s: i64 = (0..k).map(|c| if (x & c).count_ones() % 2 == 0 { 1 } else { -1 }).sum();
            s as f64 / n as f64
        })
        .collect();
    let mut a = DenseMatrix::from_fn(n, n, |i, j| profile[i ^ j]);
    let signal_norm = (k as f64).sqrt();

    let snr_db = if sigma > 0.0 {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let g: Vec<f64> = (0..n * n).map(|_| sigma * rng.sample::<f64, _>(StandardNormal)).collect();
        let g = DenseMatrix::new(n, n, g)?;
        let noise_norm = match noise {
            NoiseModel::Gram => {
                let e = g.gram_outer();
                let mut norm_sq = 0.0;
                for i in 0..n {
                    for j in 0..n {
                        // Average with the transpose so the sum is exactly symmetric.
                        let v = 0.5 * (e.get(i, j) + e.get(j, i));
                        norm_sq += v * v;
                        a.set(i, j, a.get(i, j) + v);
                    }
                }
                norm_sq.sqrt()
            }
            NoiseModel::Symmetric => {
                for i in 0..n {
                    for j in 0..n {
                        a.set(i, j, a.get(i, j) + 0.5 * (g.get(i, j) + g.get(j, i)));
                    }
                }
                g.frobenius_norm()
            }
        };
        Some(20.0 * (signal_norm / noise_norm).log10())
    } else {
        None
    };

    Ok(Synthetic {
        operator: LinearOperator::DenseSymmetric(a),
        truth: GroundTruth {
            spec: SyntheticSpec::HadamardLowRank { n, k, sigma, seed, noise },
            n,
            rank: Some(k),
            snr_db,
            eigenvalues: (sigma == 0.0).then(|| {
                let mut e = vec![0.0; n - k];
                e.extend(std::iter::repeat(1.0).take(k));
                e
            }),
        },
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MaternGrid {
    /// `n` equispaced points on `[0, 1]`.
    OneD(usize),
    /// `p x q` points on the unit square, row-major.
    TwoD(usize, usize),
}

impl MaternGrid {
    pub fn len(&self) -> usize {
        match *self {
            MaternGrid::OneD(n) => n,
            MaternGrid::TwoD(p, q) => p * q,
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn default_length_scale(&self) -> f64 {
        match self {
            MaternGrid::OneD(_) => MATERN_1D_LENGTH_SCALE,
            MaternGrid::TwoD(..) => MATERN_2D_LENGTH_SCALE,
        }
    }

    fn points(&self) -> Vec<(f64, f64)> {
        let axis = |m: usize, i: usize| if m > 1 { i as f64 / (m - 1) as f64 } else { 0.0 };
        match *self {
            MaternGrid::OneD(n) => (0..n).map(|i| (axis(n, i), 0.0)).collect(),
            MaternGrid::TwoD(p, q) => (0..p * q).map(|idx| (axis(p, idx / q), axis(q, idx % q))).collect(),
        }
    }
}

/// Matérn kernel at distance `d` for half-integer smoothness.
pub fn matern_kernel(d: f64, nu: f64, length_scale: f64) -> Result<f64> {
    let r = d / length_scale;
    let value = if nu == 0.5 {
        (-r).exp()
    } else if nu == 1.5 {
        let s = 3f64.sqrt() * r;
        (1.0 + s) * (-s).exp()
    } else if nu == 2.5 {
        let s = 5f64.sqrt() * r;
        (1.0 + s + s * s / 3.0) * (-s).exp()
    } else {
        return Err(Error::InvalidConfig(format!("Matérn smoothness {nu} unsupported; use 0.5, 1.5 or 2.5")));
    };
    Ok(value)
}

/// Covariance matrix of a Matérn process sampled on a regular grid.
pub fn matern_covariance(grid: MaternGrid, nu: f64, length_scale: f64) -> Result<Synthetic> {
    if grid.is_empty() {
        return Err(Error::InvalidConfig("grid must have positive dimensions".into()));
    }
    if !(length_scale > 0.0) || !length_scale.is_finite() {
        return Err(Error::InvalidConfig("length scale must be positive".into()));
    }
    matern_kernel(0.0, nu, length_scale)?;
    let pts = grid.points();
    let n = pts.len();
    let m = DenseMatrix::from_fn(n, n, |i, j| {
        let d = (pts[i].0 - pts[j].0).hypot(pts[i].1 - pts[j].1);
        matern_kernel(d, nu, length_scale).expect("nu validated above")
    });
    let spec = match grid {
        MaternGrid::OneD(n) => SyntheticSpec::Matern1d { n, nu, length_scale },
        MaternGrid::TwoD(p, q) => SyntheticSpec::Matern2d { p, q, nu, length_scale },
    };
    Ok(Synthetic {
        operator: LinearOperator::DenseSymmetric(m),
        truth: GroundTruth { spec, n, rank: None, snr_db: None, eigenvalues: None },
    })
}

/// Operator with exactly the given spectrum. With `rotate`, the diagonal is
/// conjugated by a product of random Householder reflections, which mixes
/// every coordinate while keeping matvecs `O(n)`.
pub fn planted_spectrum(eigenvalues: Vec<f64>, rotate: bool, seed: u64) -> Result<Synthetic> {
    if eigenvalues.is_empty() {
        return Err(Error::InvalidConfig("planted spectrum is empty".into()));
    }
    let n = eigenvalues.len();
    let mut sorted = eigenvalues.clone();
    sorted.sort_by(f64::total_cmp);
    let spec = SyntheticSpec::PlantedSpectrum { eigenvalues: eigenvalues.clone(), rotate, seed };
    let diagonal = LinearOperator::Diagonal(eigenvalues);
    let operator = if rotate && n > 1 {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let reflectors = (0..HOUSEHOLDER_REFLECTORS)
            .map(|_| {
                let mut u: Vec<f64> = (0..n).map(|_| StandardNormal.sample(&mut rng)).collect();
                let s = norm2(&u);
                u.iter_mut().for_each(|x| *x /= s);
                u
            })
            .collect();
        LinearOperator::Reflected { inner: Arc::new(diagonal), reflectors }
    } else {
        diagonal
    };
    let tol = 1e-12 * sorted.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let rank = sorted.iter().filter(|v| v.abs() > tol).count();
    Ok(Synthetic {
        operator,
        truth: GroundTruth { spec, n, rank: Some(rank), snr_db: None, eigenvalues: Some(sorted) },
    })
}

/// Reference spectral shapes for exercising threshold selection.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SpectrumProfile {
    /// `k` eigenvalues uniform on `[0.2, 2.5]`, the rest exactly zero.
    UniformLowRank,
    /// Noise in `[0, 0.02]` and `k` relevant eigenvalues in three clusters.
    Clustered,
    /// `lambda_i = K (n - i)^2` for `i = 1..n`, scaled so the largest is 1.
    QuadraticDecay,
}

pub fn profile_eigenvalues(profile: SpectrumProfile, n: usize, k: usize, seed: u64) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    match profile {
        SpectrumProfile::UniformLowRank => {
            let mut e: Vec<f64> = (0..k).map(|i| 0.2 + 2.3 * i as f64 / (k.max(2) - 1) as f64).collect();
            e.resize(n, 0.0);
            e
        }
        SpectrumProfile::Clustered => {
            let centers = [0.8, 1.4, 2.1];
            let mut e: Vec<f64> = (0..k).map(|i| centers[i % 3] + rng.random_range(-0.05..0.05)).collect();
            e.extend((k..n).map(|_| rng.random_range(0.0..0.02)));
            e
        }
        SpectrumProfile::QuadraticDecay => {
            let scale = 1.0 / ((n - 1).max(1) as f64).powi(2);
            (1..=n).map(|i| scale * ((n - i) as f64).powi(2)).collect()
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linops::SymmetricOperator;
    use crate::oracle::dense_eigs;

    fn dense(s: &Synthetic) -> DenseMatrix {
        s.operator.to_dense()
    }

    #[test]
    fn full_hadamard_is_identity() {
        let s = hadamard_lowrank(4, 4, 0.0, 0, NoiseModel::Gram).unwrap();
        let d = dense(&s);
        for i in 0..4 {
            for j in 0..4 {
                assert!((d.get(i, j) - if i == j { 1.0 } else { 0.0 }).abs() < 1e-15);
            }
        }
    }

    #[test]
    fn hadamard_spectrum_is_exact() {
        let s = hadamard_lowrank(256, 16, 0.0, 0, NoiseModel::Gram).unwrap();
        let e = dense_eigs(&dense(&s)).unwrap().eigenvalues;
        for (i, v) in e.iter().enumerate() {
            let want = if i >= 240 { 1.0 } else { 0.0 };
            assert!((v - want).abs() < 1e-10, "{i}: {v}");
        }
        assert_eq!(s.truth.rank, Some(16));
        assert!(s.truth.snr_db.is_none());
    }

    #[test]
    fn hadamard_matches_explicit_product() {
        let n = 16;
        let k = 5;
        let h = DenseMatrix::from_fn(n, k, |i, j| {
            let sign = if (i & j).count_ones() % 2 == 0 { 1.0 } else { -1.0 };
            sign / (n as f64).sqrt()
        });
        let want = h.gram_outer();
        let got = dense(&hadamard_lowrank(n, k, 0.0, 0, NoiseModel::Gram).unwrap());
        for (a, b) in got.as_slice().iter().zip(want.as_slice()) {
            assert!((a - b).abs() < 1e-15);
        }
    }

    #[test]
    fn hadamard_rejects_bad_sizes() {
        assert!(hadamard_lowrank(12, 3, 0.0, 0, NoiseModel::Gram).is_err());
        assert!(hadamard_lowrank(8, 0, 0.0, 0, NoiseModel::Gram).is_err());
        assert!(hadamard_lowrank(8, 9, 0.0, 0, NoiseModel::Gram).is_err());
    }

    #[test]
    fn noise_is_deterministic_and_symmetric() {
        for noise in [NoiseModel::Gram, NoiseModel::Symmetric] {
            let a = hadamard_lowrank(64, 8, 0.01, 3, noise).unwrap();
            let b = hadamard_lowrank(64, 8, 0.01, 3, noise).unwrap();
            let (da, db) = (dense(&a), dense(&b));
            assert_eq!(da, db);
            assert_eq!(da.asymmetry(), 0.0);
            assert_ne!(da, dense(&hadamard_lowrank(64, 8, 0.01, 4, noise).unwrap()));
        }
    }

    #[test]
    fn gram_noise_snr_levels() {
        // E||G G^T||_F^2 = 2n^3 + n^2 for an n x n standard normal G.
        for sigma in [0.001, 0.004, 0.014] {
            let n = 256usize;
            let s = hadamard_lowrank(n, 16, sigma, 7, NoiseModel::Gram).unwrap();
            let nf = n as f64;
            let expected = 20.0 * (4.0 / (sigma * sigma * (2.0 * nf.powi(3) + nf * nf).sqrt())).log10();
            assert!((s.truth.snr_db.unwrap() - expected).abs() < 0.1);
        }
    }

    #[test]
    fn gram_noise_keeps_psd() {
        let s = hadamard_lowrank(128, 8, 0.02, 1, NoiseModel::Gram).unwrap();
        let e = dense_eigs(&dense(&s)).unwrap();
        assert!(e.min() >= -1e-12);
        let s = hadamard_lowrank(128, 8, 0.02, 1, NoiseModel::Symmetric).unwrap();
        assert!(dense_eigs(&dense(&s)).unwrap().min() < 0.0);
    }

    #[test]
    fn matern_unit_diagonal_and_psd() {
        for nu in [0.5, 1.5, 2.5] {
            let s = matern_covariance(MaternGrid::OneD(200), nu, 0.05).unwrap();
            let d = dense(&s);
            assert!((0..200).all(|i| d.get(i, i) == 1.0));
            let e = dense_eigs(&d).unwrap();
            assert!(e.is_psd(1e-8), "nu={nu} min={}", e.min());
        }
        let s = matern_covariance(MaternGrid::TwoD(6, 7), 1.5, 0.1).unwrap();
        assert_eq!(s.operator.dim(), 42);
        let d = dense(&s);
        assert!((d.get(0, 1) - matern_kernel(1.0 / 6.0, 1.5, 0.1).unwrap()).abs() < 1e-15);
        assert!((d.get(0, 7) - matern_kernel(1.0 / 5.0, 1.5, 0.1).unwrap()).abs() < 1e-15);
    }

    #[test]
    fn matern_rejects_other_smoothness() {
        assert!(matern_covariance(MaternGrid::OneD(10), 1.0, 0.1).is_err());
        assert!(matern_covariance(MaternGrid::OneD(10), 0.5, 0.0).is_err());
        assert!(matern_covariance(MaternGrid::TwoD(0, 3), 0.5, 0.1).is_err());
    }

    #[test]
    fn planted_rank_and_rotation_invariance() {
        let s = planted_spectrum(vec![1.0, 1.0, 0.0, 0.0], false, 0).unwrap();
        assert_eq!(s.truth.rank, Some(2));
        let eigs: Vec<f64> = (0..60).map(|i| (i as f64 * 0.37).sin() * 3.0).collect();
        let plain = dense_eigs(&dense(&planted_spectrum(eigs.clone(), false, 5).unwrap())).unwrap();
        let rotated = planted_spectrum(eigs, true, 5).unwrap();
        let r = dense(&rotated);
        assert!(r.asymmetry() < 1e-14);
        assert!(r.get(0, 1).abs() > 1e-6);
        let rot = dense_eigs(&r).unwrap();
        for (a, b) in plain.eigenvalues.iter().zip(&rot.eigenvalues) {
            assert!((a - b).abs() < 1e-10);
        }
        assert!(planted_spectrum(vec![], false, 0).is_err());
    }

    #[test]
    fn spec_round_trips_through_json() {
        let spec = SyntheticSpec::HadamardLowRank { n: 8, k: 2, sigma: 0.1, seed: 9, noise: NoiseModel::Symmetric };
        let text = serde_json::to_string(&spec).unwrap();
        assert!(text.contains("\"family\":\"hadamard_low_rank\""));
        let back: SyntheticSpec = serde_json::from_str(&text).unwrap();
        assert_eq!(back, spec);
        assert_eq!(dense(&back.generate().unwrap()), dense(&spec.generate().unwrap()));
    }

    #[test]
    fn profiles_have_expected_shape() {
        let u = profile_eigenvalues(SpectrumProfile::UniformLowRank, 100, 30, 0);
        assert_eq!(u.iter().filter(|&&v| v == 0.0).count(), 70);
        assert_eq!(u.iter().cloned().fold(0.0, f64::max), 2.5);
        let q = profile_eigenvalues(SpectrumProfile::QuadraticDecay, 50, 0, 0);
        assert_eq!(q[0], 1.0);
        assert_eq!(q[49], 0.0);
        let c = profile_eigenvalues(SpectrumProfile::Clustered, 100, 12, 1);
        assert_eq!(c.iter().filter(|&&v| v > 0.5).count(), 12);
    }
}
