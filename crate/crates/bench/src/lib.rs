//! Fixtures shared by the kernel benchmarks in `benches/`.

use specrank::gen;
use specrank::probe::generate_probes;
use specrank::{CsrMatrix, LinearOperator, ProbeConfig, ProbeDistribution};

/// Symmetric banded CSR matrix with `half_band` off-diagonals on each side.
pub fn banded(n: usize, half_band: usize) -> LinearOperator {
    let triplets: Vec<(usize, usize, f64)> = (0..n)
        .flat_map(|i| (0..=half_band).filter(move |d| i + d < n).map(move |d| (i + d, i)))
        .map(|(i, j)| {
            (i, j, if i == j { 2.0 * half_band as f64 } else { ((i * 31 + j * 17) % 13) as f64 / 13.0 - 0.5 })
        })
        .collect();
    LinearOperator::SparseSymmetric(CsrMatrix::from_symmetric_triangle(n, &triplets).expect("indices in range"))
}

/// Dense `n x n` matrix with a planted low-rank-plus-noise spectrum.
pub fn dense(n: usize) -> LinearOperator {
    let eigs = (0..n).map(|i| if i < n / 10 { 1.0 + i as f64 / n as f64 } else { 1e-3 * (i % 7) as f64 }).collect();
    let planted = gen::planted_spectrum(eigs, true, 1).expect("valid spectrum").operator;
    LinearOperator::dense(planted.to_dense()).expect("square")
}

pub fn probes(n: usize, nv: usize) -> Vec<Vec<f64>> {
    generate_probes(n, &ProbeConfig::new(nv, ProbeDistribution::Gaussian, 7)).expect("valid probe config")
}
