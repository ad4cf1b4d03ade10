//! Kernel polynomial method: Chebyshev moments of the spectral density,
//! damping kernels, DOS evaluation, interval eigenvalue counts, and the
//! end-to-end KPM rank estimator.

use std::f64::consts::PI;
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dos::{DosCurve, DosMeta, DosMethod};
use crate::error::{Error, Result};
use crate::estimate::{EstimatorKind, PhaseTimings, RankEstimate};
use crate::lanczos::{spectrum_bounds_psd, DEFAULT_BOUNDS_STEPS, DEFAULT_SAFETY};
use crate::linops::{dot, MappedOperator, SymmetricOperator, Window};
use crate::probe::{running_average, SampleSeries};
use crate::threshold::{select_threshold_dos, ThresholdOptions};

pub const DEFAULT_GRID_POINTS: usize = 400;
const BLOWUP_LIMIT: f64 = 1e6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum DampingKind {
    None,
    #[default]
    Jackson,
    LanczosSigma,
}

/// Multipliers `g_0..g_m` applied to a degree-`m` Chebyshev expansion.
pub fn damping_factors(kind: DampingKind, degree: usize) -> Vec<f64> {
    let m = degree as f64;
    match kind {
        DampingKind::None => vec![1.0; degree + 1],
        DampingKind::Jackson => {
            let a = PI / (m + 2.0);
            (0..=degree)
                .map(|k| {
                    let k = k as f64;
                    ((k + 1.0) * a).sin() / ((m + 2.0) * a.sin()) + (1.0 - (k + 1.0) / (m + 2.0)) * (k * a).cos()
                })
                .collect()
        }
        DampingKind::LanczosSigma => {
            let theta = PI / (m + 1.0);
            (0..=degree)
                .map(|k| {
                    if k == 0 {
                        1.0
                    } else {
                        let x = k as f64 * theta;
                        x.sin() / x
                    }
                })
                .collect()
        }
    }
}

/// Chebyshev moments of the spectral density of `B = (A - cI)/d`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChebyshevMoments {
    /// Undamped `mu_0..mu_m`.
    pub mu: Vec<f64>,
    pub window: Window,
    /// Operator dimension.
    pub n: usize,
    /// Number of probes averaged (0 for exact moments).
    pub nv: usize,
    /// `per_probe[l][k] = v_l^T T_k(B) v_l`, kept for interval counting.
    pub per_probe: Option<Vec<Vec<f64>>>,
}

impl ChebyshevMoments {
    pub fn degree(&self) -> usize {
        self.mu.len() - 1
    }
}

/// Runs the three-term recurrence `w_{k+1} = 2 B w_k - w_{k-1}` for every
/// probe and averages `v^T T_k(B) v` into moments. `window` defines the map
/// from `op` to `B`; exactly `degree` matvecs are spent per probe.
pub fn chebyshev_moments<O: SymmetricOperator + ?Sized>(
    op: &O,
    window: Window,
    degree: usize,
    probes: &[Vec<f64>],
) -> Result<ChebyshevMoments> {
    if degree == 0 {
        return Err(Error::InvalidConfig("Chebyshev degree must be at least 1".into()));
    }
    if probes.is_empty() {
        return Err(Error::InvalidConfig("at least one probe vector is required".into()));
    }
    let n = op.dim();
    if let Some(bad) = probes.iter().find(|v| v.len() != n) {
        return Err(Error::DimensionMismatch { expected: n, actual: bad.len() });
    }
    let b = MappedOperator::new(op, window);

    let table: Vec<Vec<f64>> = probes.par_iter().map(|v| probe_moments(&b, v, degree)).collect::<Result<_>>()?;

    let nv = probes.len();
    let mu = (0..=degree)
        .map(|k| {
            let s: f64 = table.iter().map(|row| row[k]).sum();
            let scale = if k == 0 { 1.0 } else { 2.0 };
            scale * s / (PI * nv as f64)
        })
        .collect();
    Ok(ChebyshevMoments { mu, window, n, nv, per_probe: Some(table) })
}

fn probe_moments<O: SymmetricOperator + ?Sized>(b: &O, v: &[f64], degree: usize) -> Result<Vec<f64>> {
    let n = v.len();
    let mut y = Vec::with_capacity(degree + 1);
    let mut w_prev = v.to_vec();
    let mut w = vec![0.0; n];
    b.apply_into(v, &mut w);
    y.push(dot(v, v));
    y.push(dot(v, &w));
    let mut scratch = vec![0.0; n];
    for k in 2..=degree {
        b.apply_into(&w, &mut scratch);
        for (s, wp) in scratch.iter_mut().zip(&w_prev) {
            *s = 2.0 * *s - wp;
        }
        // Rotate (w_prev, w, scratch) -> (w, scratch, old w_prev).
        std::mem::swap(&mut w_prev, &mut w);
        std::mem::swap(&mut w, &mut scratch);
        let yk = dot(v, &w);
        if !yk.is_finite() || yk.abs() > BLOWUP_LIMIT {
            return Err(Error::Divergence { degree: k, value: yk });
        }
        y.push(yk);
    }
    Ok(y)
}

/// Moments computed from a known spectrum instead of probes. The table holds
/// one row, `tr(T_k(B)) / n`, which plays the part of an ideal probe.
pub fn exact_moments(eigenvalues: &[f64], degree: usize, window: Window) -> Result<ChebyshevMoments> {
    if eigenvalues.is_empty() {
        return Err(Error::InvalidConfig("exact moments need at least one eigenvalue".into()));
    }
    if let Some(&bad) = eigenvalues.iter().find(|&&l| !window.contains(l)) {
        return Err(Error::InvalidConfig(format!(
            "eigenvalue {bad} lies outside the window [{}, {}]",
            window.lambda_min, window.lambda_max
        )));
    }
    let n = eigenvalues.len();
    let mut sums = vec![0.0; degree + 1];
    for &lambda in eigenvalues {
        let t = window.to_unit(lambda).clamp(-1.0, 1.0);
        for (k, tk) in chebyshev_values(t, degree).into_iter().enumerate() {
            sums[k] += tk;
        }
    }
    let row: Vec<f64> = sums.into_iter().map(|s| s / n as f64).collect();
    let mu = row.iter().enumerate().map(|(k, y)| if k == 0 { 1.0 } else { 2.0 } * y / PI).collect();
    Ok(ChebyshevMoments { mu, window, n, nv: 0, per_probe: Some(vec![row]) })
}

/// `T_0(t)..T_m(t)` by the three-term recurrence.
fn chebyshev_values(t: f64, degree: usize) -> Vec<f64> {
    let mut out = Vec::with_capacity(degree + 1);
    out.push(1.0);
    if degree >= 1 {
        out.push(t);
    }
    for k in 2..=degree {
        out.push(2.0 * t * out[k - 1] - out[k - 2]);
    }
    out
}

/// Interior Chebyshev points `cos(pi (j + 1/2) / N)` in ascending order.
pub fn chebyshev_grid(points: usize) -> Vec<f64> {
    (0..points).map(|j| -(PI * (j as f64 + 0.5) / points as f64).cos()).collect()
}

/// Evaluates the damped KPM density on a Chebyshev grid mapped to the
/// eigenvalue axis. Negative Gibbs undershoots are clamped to zero.
pub fn evaluate_dos(moments: &ChebyshevMoments, damping: DampingKind, grid_points: usize) -> Result<DosCurve> {
    if grid_points < 16 {
        return Err(Error::InvalidConfig("DOS grid needs at least 16 points".into()));
    }
    let m = moments.degree();
    let g = damping_factors(damping, m);
    let coeffs: Vec<f64> = moments.mu.iter().zip(&g).map(|(mu, g)| mu * g).collect();
    let window = moments.window;
    let d = window.half_width();

    let ts = chebyshev_grid(grid_points);
    let phi: Vec<f64> = ts
        .par_iter()
        .map(|&t| {
            let series: f64 = chebyshev_values(t, m).iter().zip(&coeffs).map(|(tk, c)| tk * c).sum();
            (series / (1.0 - t * t).sqrt() / d).max(0.0)
        })
        .collect();
    Ok(DosCurve {
        t: ts.iter().map(|&t| window.from_unit(t)).collect(),
        phi,
        meta: DosMeta { method: DosMethod::Kpm, degree: m, nv: moments.nv, damping: Some(damping), blur: None },
    })
}

/// Chebyshev coefficients of the indicator of `[a, b]` in the unit variable.
pub fn step_coeffs(a: f64, b: f64, degree: usize) -> Result<Vec<f64>> {
    if !(a < b) {
        return Err(Error::InvalidInterval { a, b, reason: "lower end must be below upper end" });
    }
    if a < -1.0 || b > 1.0 {
        return Err(Error::InvalidInterval { a, b, reason: "endpoints must lie in [-1, 1]" });
    }
    let (ta, tb) = (a.acos(), b.acos());
    // sin(k pi) does not round to zero; the endpoints of [-1, 1] contribute nothing.
    let sin_k = |x: f64, theta: f64, kf: f64| if x.abs() == 1.0 { 0.0 } else { (kf * theta).sin() };
    Ok((0..=degree)
        .map(|k| {
            if k == 0 {
                (ta - tb) / PI
            } else {
                let kf = k as f64;
                2.0 / PI * (sin_k(a, ta, kf) - sin_k(b, tb, kf)) / kf
            }
        })
        .collect())
}

/// Per-probe eigenvalue counts over `[a, b]` (eigenvalue axis), from the
/// retained moment table; no further matvecs.
pub fn count_eigs_kpm(moments: &ChebyshevMoments, a: f64, b: f64, damping: DampingKind) -> Result<SampleSeries> {
    let table = moments.per_probe.as_ref().ok_or(Error::MissingProbeTable)?;
    let w = moments.window;
    let ua = w.to_unit(a).clamp(-1.0, 1.0);
    let ub = w.to_unit(b).clamp(-1.0, 1.0);
    if !(ua < ub) {
        return Err(Error::InvalidInterval { a, b, reason: "interval is empty inside the spectral window" });
    }
    let m = moments.degree();
    let gamma = step_coeffs(ua, ub, m)?;
    let g = damping_factors(damping, m);
    let weights: Vec<f64> = gamma.iter().zip(&g).map(|(c, g)| c * g).collect();
    let n = moments.n as f64;
    let per_probe: Vec<f64> = table.iter().map(|row| n * dot(row, &weights)).collect();
    running_average(&per_probe)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KpmOptions {
    pub degree: usize,
    /// Damping used both for the DOS curve and for interval counts.
    pub damping: DampingKind,
    pub grid_points: usize,
    pub bounds_steps: usize,
    pub safety: f64,
    pub threshold: ThresholdOptions,
}

impl Default for KpmOptions {
    fn default() -> Self {
        Self {
            degree: 50,
            damping: DampingKind::Jackson,
            grid_points: DEFAULT_GRID_POINTS,
            bounds_steps: DEFAULT_BOUNDS_STEPS,
            safety: DEFAULT_SAFETY,
            threshold: ThresholdOptions::default(),
        }
    }
}

/// Rank of a symmetric PSD operator by KPM: bounds, moments, DOS, threshold
/// (unless `eps` is given), then the count over `[eps, lambda_max]`.
pub fn rank_kpm<O: SymmetricOperator + ?Sized>(
    op: &O,
    probes: &[Vec<f64>],
    options: &KpmOptions,
    eps: Option<f64>,
) -> Result<RankEstimate> {
    let mut timings = PhaseTimings::default();

    let clock = Instant::now();
    let window = spectrum_bounds_psd(op, options.bounds_steps, options.safety)?;
    timings.bounds = clock.elapsed().as_secs_f64();

    let clock = Instant::now();
    let moments = chebyshev_moments(op, window, options.degree, probes)?;
    let dos = evaluate_dos(&moments, options.damping, options.grid_points)?;
    timings.spectral = clock.elapsed().as_secs_f64();

    let clock = Instant::now();
    let (eps, threshold) = match eps {
        Some(e) => (e, None),
        None => {
            let chosen = select_threshold_dos(&dos, &options.threshold).map_err(|e| e.with_dos(&dos))?;
            (chosen.eps, Some(chosen))
        }
    };
    timings.threshold = clock.elapsed().as_secs_f64();

    let clock = Instant::now();
    let series = count_eigs_kpm(&moments, eps, window.lambda_max, options.damping)?;
    timings.count = clock.elapsed().as_secs_f64();

    Ok(RankEstimate {
        method: EstimatorKind::Kpm,
        n: moments.n,
        degree: options.degree,
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
