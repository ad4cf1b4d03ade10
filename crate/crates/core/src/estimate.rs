use serde::{Deserialize, Serialize};

use crate::dos::DosCurve;
use crate::linops::Window;
use crate::probe::SampleSeries;
use crate::threshold::ThresholdResult;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EstimatorKind {
    Kpm,
    Lanczos,
}

/// Wall-clock seconds spent in each pipeline phase. `spectral` covers the
/// Chebyshev moments (KPM) or the Lanczos runs.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct PhaseTimings {
    pub bounds: f64,
    pub spectral: f64,
    pub threshold: f64,
    pub count: f64,
}

impl PhaseTimings {
    pub fn total(&self) -> f64 {
        self.bounds + self.spectral + self.threshold + self.count
    }
}

/// Result of a rank estimation run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RankEstimate {
    pub method: EstimatorKind,
    pub n: usize,
    pub degree: usize,
    pub nv: usize,
    pub series: SampleSeries,
    pub mean: f64,
    pub eps: f64,
    /// Present when the threshold was selected automatically.
    pub threshold: Option<ThresholdResult>,
    pub window: Window,
    pub dos: Option<DosCurve>,
    pub timings: PhaseTimings,
}
