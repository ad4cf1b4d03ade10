//! Sampled spectral density curves.

use serde::{Deserialize, Serialize};

use crate::kpm::DampingKind;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DosMethod {
    Kpm,
    Lanczos,
    Exact,
    /// Curve read back from a two-column file without metadata.
    External,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DosMeta {
    pub method: DosMethod,
    /// Chebyshev degree or Lanczos steps; 0 when not applicable.
    pub degree: usize,
    pub nv: usize,
    pub damping: Option<DampingKind>,
    /// Gaussian regularization width on the lambda axis, when used.
    pub blur: Option<f64>,
}

impl DosMeta {
    pub fn external() -> Self {
        Self { method: DosMethod::External, degree: 0, nv: 0, damping: None, blur: None }
    }
}

/// A spectral density sampled on strictly increasing abscissae of the
/// original eigenvalue axis, normalized to unit mass.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DosCurve {
    pub t: Vec<f64>,
    pub phi: Vec<f64>,
    pub meta: DosMeta,
}

impl DosCurve {
    pub fn len(&self) -> usize {
        self.t.len()
    }

    pub fn is_empty(&self) -> bool {
        self.t.is_empty()
    }

    /// Trapezoidal integral over the sampled range.
    pub fn integral(&self) -> f64 {
        self.t.windows(2).zip(self.phi.windows(2)).map(|(t, p)| 0.5 * (t[1] - t[0]) * (p[0] + p[1])).sum()
    }

    /// Trapezoidal integral restricted to `[a, b]`, interpolating linearly
    /// at the cut points.
    pub fn integral_between(&self, a: f64, b: f64) -> f64 {
        let mut total = 0.0;
        for (t, p) in self.t.windows(2).zip(self.phi.windows(2)) {
            let lo = t[0].max(a);
            let hi = t[1].min(b);
            if hi <= lo {
                continue;
            }
            let at = |x: f64| p[0] + (p[1] - p[0]) * (x - t[0]) / (t[1] - t[0]);
            total += 0.5 * (hi - lo) * (at(lo) + at(hi));
        }
        total
    }

    pub fn argmax(&self) -> usize {
        self.phi.iter().enumerate().fold(0, |best, (i, &v)| if v > self.phi[best] { i } else { best })
    }

    pub fn max(&self) -> f64 {
        self.phi.iter().cloned().fold(f64::NEG_INFINITY, f64::max)
    }

    pub(crate) fn is_well_formed(&self) -> bool {
        self.t.len() == self.phi.len() && self.t.windows(2).all(|w| w[0] < w[1])
    }
}

/// `n` equally spaced points on `[lo, hi]`.
pub fn uniform_grid(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    if n == 1 {
        return vec![0.5 * (lo + hi)];
    }
    let h = (hi - lo) / (n - 1) as f64;
    (0..n).map(|i| if i + 1 == n { hi } else { lo + h * i as f64 }).collect()
}
