//! Spectral density by Lanczos quadrature, cumulative density, interval
//! counts and the Lanczos rank estimator.

use std::f64::consts::PI;
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dos::{uniform_grid, DosCurve, DosMeta, DosMethod};
use crate::error::{Error, Result};
use crate::estimate::{EstimatorKind, PhaseTimings, RankEstimate};
use crate::kpm::DEFAULT_GRID_POINTS;
use crate::lanczos::{lanczos, tridiag_eigen, Reorthogonalization, RitzSpectrum};
use crate::linops::{SymmetricOperator, Window};
use crate::probe::{running_average, SampleSeries};
use crate::threshold::{select_eps_tau, select_threshold_dos, ThresholdOptions, ThresholdStrategy};

/// Gauss quadrature nodes and weights from one Lanczos run per probe.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RitzData {
    pub per_probe: Vec<RitzSpectrum>,
    /// Operator dimension.
    pub n: usize,
    /// Probes whose Lanczos run broke down early; their weights were
    /// renormalized to sum to one.
    pub truncated_probes: usize,
}

impl RitzData {
    pub fn nv(&self) -> usize {
        self.per_probe.len()
    }

    pub fn steps(&self) -> usize {
        self.per_probe.iter().map(RitzSpectrum::len).max().unwrap_or(0)
    }

    pub fn theta_range(&self) -> (f64, f64) {
        self.per_probe.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), r| {
            (lo.min(r.theta[0]), hi.max(*r.theta.last().expect("nonempty spectrum")))
        })
    }

    fn series(&self, per_probe: impl Fn(&RitzSpectrum) -> f64 + Sync) -> SampleSeries {
        let n = self.n as f64;
        let values: Vec<f64> = self.per_probe.iter().map(|r| n * per_probe(r)).collect();
        running_average(&values).expect("RitzData holds at least one probe")
    }
}

/// Runs `steps` Lanczos iterations from each probe and keeps the Ritz values
/// with their squared first eigenvector components.
pub fn collect_ritz<O: SymmetricOperator + ?Sized>(
    op: &O,
    steps: usize,
    probes: &[Vec<f64>],
    reorth: Reorthogonalization,
) -> Result<RitzData> {
    if probes.is_empty() {
        return Err(Error::InvalidConfig("at least one probe vector is required".into()));
    }
    let runs: Vec<(RitzSpectrum, bool)> = probes
        .par_iter()
        .map(|v| {
            let run = lanczos(op, v, steps, reorth)?;
            let mut ritz = tridiag_eigen(&run.tridiagonal)?;
            if run.breakdown {
                let total: f64 = ritz.tau_sq.iter().sum();
                ritz.tau_sq.iter_mut().for_each(|w| *w /= total);
            }
            Ok((ritz, run.breakdown))
        })
        .collect::<Result<_>>()?;
    let truncated_probes = runs.iter().filter(|(_, b)| *b).count();
    Ok(RitzData { per_probe: runs.into_iter().map(|(r, _)| r).collect(), n: op.dim(), truncated_probes })
}

/// Per-probe counts `n * sum { tau_k^2 : a < theta_k <= b }`.
pub fn count_eigs_lanczos(data: &RitzData, a: f64, b: f64) -> Result<SampleSeries> {
    if !(a < b) {
        return Err(Error::InvalidInterval { a, b, reason: "lower end must be below upper end" });
    }
    Ok(data.series(|r| r.theta.iter().zip(&r.tau_sq).filter(|(&t, _)| a < t && t <= b).map(|(_, &w)| w).sum()))
}

/// Per-probe rank `n * (1 - sum { tau_k^2 : theta_k <= eps })`: one minus the
/// mass at or below the cutoff, which relies on the well-resolved low end of
/// the Lanczos spectrum.
pub fn rank_lanczos(data: &RitzData, eps: f64) -> SampleSeries {
    data.series(|r| {
        let mut below = 0.0;
        for (&t, &w) in r.theta.iter().zip(&r.tau_sq) {
            if t > eps {
                break;
            }
            below += w;
        }
        1.0 - below
    })
}

/// Cumulative weights `rho_k^2 = sum_{j <= k} tau_j^2` at the Ritz values of
/// one probe.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CdosProbe {
    pub theta: Vec<f64>,
    pub rho_sq: Vec<f64>,
}

impl CdosProbe {
    /// `rho^2` at the last Ritz value not exceeding `x` (0 below all of them).
    pub fn at(&self, x: f64) -> f64 {
        let k = self.theta.partition_point(|&t| t <= x);
        if k == 0 {
            0.0
        } else {
            self.rho_sq[k - 1]
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CdosCurve {
    pub per_probe: Vec<CdosProbe>,
    pub n: usize,
}

impl CdosCurve {
    /// Probe-averaged cumulative density at `x`, a step function in `x`.
    pub fn evaluate(&self, x: f64) -> f64 {
        self.per_probe.iter().map(|p| p.at(x)).sum::<f64>() / self.per_probe.len() as f64
    }

    /// Rank from the cumulative weights: `n * (1 - rho_k^2)` with `k` the last
    /// Ritz value at or below `eps`.
    pub fn rank(&self, eps: f64) -> SampleSeries {
        let n = self.n as f64;
        let values: Vec<f64> = self.per_probe.iter().map(|p| n * (1.0 - p.at(eps))).collect();
        running_average(&values).expect("curve holds at least one probe")
    }
}

pub fn cdos(data: &RitzData) -> CdosCurve {
    let per_probe = data
        .per_probe
        .iter()
        .map(|r| {
            let mut acc = 0.0;
            let rho_sq = r
                .tau_sq
                .iter()
                .map(|&w| {
                    acc += w;
                    acc
                })
                .collect();
            CdosProbe { theta: r.theta.clone(), rho_sq }
        })
        .collect();
    CdosCurve { per_probe, n: data.n }
}

/// Default Gaussian width: spectral width over twice the number of steps.
pub fn default_blur(data: &RitzData) -> f64 {
    let (lo, hi) = data.theta_range();
    let width = hi - lo;
    let scale = if width > 0.0 { width } else { lo.abs().max(hi.abs()).max(1.0) };
    scale / (2.0 * data.steps().max(1) as f64)
}

/// Lanczos DOS with every Dirac mass `tau_k^2 delta(t - theta_k)` replaced by
/// a Gaussian of standard deviation `blur`, averaged over probes, on a
/// uniform grid that extends four widths past the extreme Ritz values.
pub fn evaluate_dos_lanczos(data: &RitzData, grid_points: usize, blur: Option<f64>) -> Result<DosCurve> {
    if grid_points < 16 {
        return Err(Error::InvalidConfig("DOS grid needs at least 16 points".into()));
    }
    let sigma = blur.unwrap_or_else(|| default_blur(data));
    if !(sigma > 0.0) {
        return Err(Error::InvalidConfig("blur width must be positive".into()));
    }
    let (lo, hi) = data.theta_range();
    let t = uniform_grid(lo - 4.0 * sigma, hi + 4.0 * sigma, grid_points);
    let norm = 1.0 / (sigma * (2.0 * PI).sqrt() * data.nv() as f64);
    let phi = t
        .par_iter()
        .map(|&x| {
            let s: f64 = data
                .per_probe
                .iter()
                .flat_map(|r| r.theta.iter().zip(&r.tau_sq))
                .map(|(&th, &w)| w * (-0.5 * ((x - th) / sigma).powi(2)).exp())
                .sum();
            s * norm
        })
        .collect();
    Ok(DosCurve {
        t,
        phi,
        meta: DosMeta {
            method: DosMethod::Lanczos,
            degree: data.steps(),
            nv: data.nv(),
            damping: None,
            blur: Some(sigma),
        },
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LanczosOptions {
    pub steps: usize,
    pub reorth: Reorthogonalization,
    pub grid_points: usize,
    /// Gaussian width for the DOS curve; `None` uses [`default_blur`].
    pub blur: Option<f64>,
    pub threshold: ThresholdOptions,
}

impl Default for LanczosOptions {
    fn default() -> Self {
        Self {
            steps: 50,
            reorth: Reorthogonalization::Auto,
            grid_points: DEFAULT_GRID_POINTS,
            blur: None,
            threshold: ThresholdOptions::default(),
        }
    }
}

/// Rank of a symmetric PSD operator by Lanczos quadrature: Ritz data per
/// probe, DOS curve, threshold (unless `eps` is given), then the complement
/// count below `eps`.
pub fn estimate_rank_lanczos<O: SymmetricOperator + ?Sized>(
    op: &O,
    probes: &[Vec<f64>],
    options: &LanczosOptions,
    eps: Option<f64>,
) -> Result<RankEstimate> {
    let mut timings = PhaseTimings::default();
    let steps = options.steps.min(op.dim());

    let clock = Instant::now();
    let data = collect_ritz(op, steps, probes, options.reorth)?;
    let dos = evaluate_dos_lanczos(&data, options.grid_points, options.blur)?;
    timings.spectral = clock.elapsed().as_secs_f64();

    let clock = Instant::now();
    let (eps, threshold) = match eps {
        Some(e) => (e, None),
        None => {
            let chosen = match options.threshold.strategy {
                ThresholdStrategy::Tau => select_eps_tau(&data),
                _ => select_threshold_dos(&dos, &options.threshold),
            }
            .map_err(|e| e.with_dos(&dos))?;
            (chosen.eps, Some(chosen))
        }
    };
    timings.threshold = clock.elapsed().as_secs_f64();

    let clock = Instant::now();
    let series = rank_lanczos(&data, eps);
    timings.count = clock.elapsed().as_secs_f64();

    let (lo, hi) = data.theta_range();
    let window = Window::new(lo, hi).or_else(|_| Window::new(dos.t[0], *dos.t.last().expect("nonempty grid")))?;
    Ok(RankEstimate {
        method: EstimatorKind::Lanczos,
        n: data.n,
        degree: steps,
        nv: probes.len(),
        mean: series.mean(),
        series,
        eps,
        threshold,
        window,
        dos: Some(dos),
        timings,
    })
}
