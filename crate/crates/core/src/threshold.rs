//! Automatic choice of the cutoff `eps` separating noise eigenvalues from
//! relevant ones.
//!
//! Three rules are available:
//!
//! * **derivative**: after the initial sharp drop of the density, the first
//!   grid point where the slope climbs back above a small negative tolerance;
//! * **valley midpoint**: the middle of the first near-empty stretch of the
//!   density after the drop, falling back to the derivative rule when the
//!   curve has no such stretch;
//! * **tau gap** (Lanczos only): the first Ritz value at which the quadrature
//!   weights stop decreasing, aggregated over probes by the median.
//!
//! Curves are normalized to unit maximum and unit abscissa range before
//! differencing, so one tolerance works across problems of any scale.

use serde::{Deserialize, Serialize};

use crate::dos::DosCurve;
use crate::error::{Error, Result};
use crate::ldos::RitzData;

pub const DEFAULT_TOL: f64 = -0.01;
/// A grid point belongs to a valley when its density is at most this
/// fraction of the curve maximum.
pub const VALLEY_FRACTION: f64 = 0.01;
const MIN_GRID_POINTS: usize = 16;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ThresholdMethod {
    DerivativeTol,
    ValleyMidpoint,
    TauGap,
    Manual,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum ThresholdStrategy {
    Derivative,
    #[default]
    Valley,
    Tau,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ThresholdOptions {
    pub strategy: ThresholdStrategy,
    pub tol: f64,
}

impl Default for ThresholdOptions {
    fn default() -> Self {
        Self { strategy: ThresholdStrategy::Valley, tol: DEFAULT_TOL }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct ThresholdDiagnostics {
    /// Slope of the normalized curve at each grid point.
    pub derivative: Vec<f64>,
    pub tol: f64,
    /// First grid index where the slope fell below `tol`.
    pub drop_index: Option<usize>,
    /// Selected grid index, for curve-based rules.
    pub grid_index: Option<usize>,
    /// Eigenvalue-axis extent of the detected valley.
    pub valley: Option<(f64, f64)>,
    /// Per-probe picks of the tau rule; `None` marks an abstaining probe.
    pub per_probe_eps: Vec<Option<f64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ThresholdResult {
    pub eps: f64,
    pub method: ThresholdMethod,
    pub diagnostics: ThresholdDiagnostics,
}

impl ThresholdResult {
    pub fn manual(eps: f64) -> Self {
        Self { eps, method: ThresholdMethod::Manual, diagnostics: ThresholdDiagnostics::default() }
    }
}

fn no_gap(reason: impl Into<String>, diagnostics: ThresholdDiagnostics) -> Error {
    Error::NoGap { reason: reason.into(), diagnostics: Box::new(diagnostics), dos: None }
}

fn check_curve(dos: &DosCurve) -> Result<()> {
    if dos.len() < MIN_GRID_POINTS {
        return Err(Error::InvalidConfig(format!("threshold selection needs at least {MIN_GRID_POINTS} grid points")));
    }
    if !dos.is_well_formed() {
        return Err(Error::InvalidConfig("DOS abscissae must be strictly increasing".into()));
    }
    Ok(())
}

/// Curve normalized to unit maximum, abscissae to `[0, 1]`.
fn normalized(dos: &DosCurve) -> Option<(Vec<f64>, Vec<f64>)> {
    let peak = dos.max();
    if !(peak > 0.0) {
        return None;
    }
    let (t0, t1) = (dos.t[0], *dos.t.last().expect("checked length"));
    let t = dos.t.iter().map(|&x| (x - t0) / (t1 - t0)).collect();
    let phi = dos.phi.iter().map(|&p| p / peak).collect();
    Some((t, phi))
}

/// Finite-difference slope: central in the interior, one-sided at the ends.
fn derivative(t: &[f64], phi: &[f64]) -> Vec<f64> {
    let n = t.len();
    (0..n)
        .map(|i| {
            let (lo, hi) = (i.saturating_sub(1), (i + 1).min(n - 1));
            (phi[hi] - phi[lo]) / (t[hi] - t[lo])
        })
        .collect()
}

/// First point at or after the maximum where the slope is below `tol`. Points
/// left of the maximum are skipped: KPM curves ring at the window edge.
fn drop_index(phi: &[f64], slope: &[f64], tol: f64) -> Option<usize> {
    let peak = phi.iter().enumerate().fold(0, |best, (i, &v)| if v > phi[best] { i } else { best });
    (peak..slope.len()).find(|&i| slope[i] < tol)
}

/// Slope-tolerance rule: skip past the maximum to the first point where the
/// normalized slope drops below `tol`, then return the first later point where it is back at
/// or above `tol`.
pub fn select_eps_dos(dos: &DosCurve, tol: f64) -> Result<ThresholdResult> {
    check_curve(dos)?;
    if !(tol < 0.0) {
        return Err(Error::InvalidConfig("derivative tolerance must be negative".into()));
    }
    let mut diagnostics = ThresholdDiagnostics { tol, ..Default::default() };
    let Some((t, phi)) = normalized(dos) else {
        return Err(no_gap("density is identically zero", diagnostics));
    };
    let slope = derivative(&t, &phi);
    diagnostics.derivative = slope.clone();

    let Some(drop) = drop_index(&phi, &slope, tol) else {
        return Err(no_gap("density never drops faster than the tolerance", diagnostics));
    };
    diagnostics.drop_index = Some(drop);
    let Some(pick) = (drop + 1..slope.len()).find(|&i| slope[i] >= tol) else {
        return Err(no_gap("density keeps dropping to the end of the window", diagnostics));
    };
    diagnostics.grid_index = Some(pick);
    Ok(ThresholdResult { eps: dos.t[pick], method: ThresholdMethod::DerivativeTol, diagnostics })
}

/// Midpoint of the first stretch after the initial drop where the density
/// stays at or below [`VALLEY_FRACTION`] of its maximum and rises again
/// afterwards. Falls back to [`select_eps_dos`] when there is no such stretch.
pub fn select_eps_valley_midpoint(dos: &DosCurve, tol: f64) -> Result<ThresholdResult> {
    check_curve(dos)?;
    if let Some(found) = find_valley(dos, tol) {
        return Ok(found);
    }
    select_eps_dos(dos, tol)
}

fn find_valley(dos: &DosCurve, tol: f64) -> Option<ThresholdResult> {
    let (t, phi) = normalized(dos)?;
    let slope = derivative(&t, &phi);
    let drop = drop_index(&phi, &slope, tol)?;
    let n = phi.len();
    let mut i = drop;
    while i < n {
        if phi[i] <= VALLEY_FRACTION {
            let start = i;
            while i < n && phi[i] <= VALLEY_FRACTION {
                i += 1;
            }
            if i == n {
                // Runs into the end of the window: no eigenvalues beyond it.
                return None;
            }
            let end = valley_end(&phi[start..i]) + start;
            let eps = 0.5 * (dos.t[start] + dos.t[end]);
            let pick = (start..=end)
                .min_by(|&a, &b| (dos.t[a] - eps).abs().total_cmp(&(dos.t[b] - eps).abs()))
                .expect("nonempty run");
            return Some(ThresholdResult {
                eps,
                method: ThresholdMethod::ValleyMidpoint,
                diagnostics: ThresholdDiagnostics {
                    derivative: slope,
                    tol,
                    drop_index: Some(drop),
                    grid_index: Some(pick),
                    valley: Some((dos.t[start], dos.t[end])),
                    per_probe_eps: Vec::new(),
                },
            });
        }
        i += 1;
    }
    None
}

/// Last index of the valley floor within a run below the cutoff. Relevant
/// eigenvalues with a density under the cutoff form a low plateau at the end
/// of the run; the floor stops where the run climbs past half its remaining
/// height beyond the deepest point.
fn valley_end(run: &[f64]) -> usize {
    let deepest = run.iter().enumerate().fold(0, |best, (i, &v)| if v < run[best] { i } else { best });
    let height = run[deepest..].iter().fold(0.0f64, |m, &v| m.max(v));
    run[deepest..].iter().position(|&v| v > 0.5 * height).map_or(run.len() - 1, |p| (deepest + p).saturating_sub(1))
}

/// Per probe, the smallest Ritz value `theta_i` with
/// `tau_{i+1}^2 - tau_i^2 >= 0`, provided the weights start out decreasing;
/// the median over non-abstaining probes is returned.
pub fn select_eps_tau(data: &RitzData) -> Result<ThresholdResult> {
    let per_probe: Vec<Option<f64>> = data.per_probe.iter().map(|r| tau_pick(&r.theta, &r.tau_sq)).collect();
    let mut picks: Vec<f64> = per_probe.iter().flatten().copied().collect();
    let diagnostics = ThresholdDiagnostics { per_probe_eps: per_probe, tol: 0.0, ..Default::default() };
    if picks.is_empty() {
        return Err(no_gap("every probe abstained: quadrature weights never drop then rise", diagnostics));
    }
    picks.sort_by(f64::total_cmp);
    let k = picks.len();
    let eps = if k % 2 == 1 { picks[k / 2] } else { 0.5 * (picks[k / 2 - 1] + picks[k / 2]) };
    Ok(ThresholdResult { eps, method: ThresholdMethod::TauGap, diagnostics })
}

fn tau_pick(theta: &[f64], tau_sq: &[f64]) -> Option<f64> {
    if theta.len() < 2 || tau_sq[1] - tau_sq[0] >= 0.0 {
        return None;
    }
    (1..theta.len() - 1).find(|&i| tau_sq[i + 1] - tau_sq[i] >= 0.0).map(|i| theta[i])
}

/// Applies a curve-based strategy. The tau rule needs Ritz data and is
/// rejected here.
pub fn select_threshold_dos(dos: &DosCurve, options: &ThresholdOptions) -> Result<ThresholdResult> {
    match options.strategy {
        ThresholdStrategy::Derivative => select_eps_dos(dos, options.tol),
        ThresholdStrategy::Valley => select_eps_valley_midpoint(dos, options.tol),
        ThresholdStrategy::Tau => Err(Error::InvalidConfig(
            "the tau-gap threshold rule needs Lanczos quadrature data, not a DOS curve".into(),
        )),
    }
}
