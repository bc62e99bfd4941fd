//! Report records emitted by the check/experiment operations. They serialize
//! to JSON for the run artifacts and carry a machine-readable verdict.

use serde::{Deserialize, Serialize};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    Pass,
    Fail,
}

impl Verdict {
    pub fn from_bool(ok: bool) -> Self {
        if ok {
            Verdict::Pass
        } else {
            Verdict::Fail
        }
    }

    pub fn passed(self) -> bool {
        self == Verdict::Pass
    }
}

impl std::fmt::Display for Verdict {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Verdict::Pass => write!(f, "pass"),
            Verdict::Fail => write!(f, "fail"),
        }
    }
}

/// Outcome of a power-law slope measurement against an expected exponent.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ScalingReport {
    pub abscissae: Vec<f64>,
    pub values: Vec<f64>,
    pub fitted_slope: f64,
    pub expected_slope: f64,
    pub tolerance: f64,
    /// `true` when only a one-sided bound (slope ≥ expected − tol) is claimed.
    pub one_sided: bool,
    pub verdict: Verdict,
}

/// Envelope fit against `C t^{-k-(s+Q)/2} exp(-c‖x‖²/t)`.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct EnvelopeReport {
    pub fitted_c_front: f64,
    pub fitted_c_exp: f64,
    pub max_ratio: f64,
    pub slack: f64,
    pub n_samples: usize,
    pub verdict: Verdict,
}

/// Defect-vs-level refinement study (conjugation consistency, uniqueness,
/// Itô checks).
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct RefinementReport {
    pub scenario: String,
    pub levels: Vec<f64>,
    pub defects: Vec<f64>,
    pub slope: f64,
    pub verdict: Verdict,
    /// Extra context, e.g. the negative-control defect for uniqueness runs.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub control_defect: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub threshold: Option<f64>,
    pub notes: String,
}

/// Krylov occupation-estimate stability report.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct KrylovReport {
    pub pairs: Vec<(f64, f64)>,
    pub ratios_base: Vec<f64>,
    pub ratios_doubled: Vec<f64>,
    pub max_ratio_base: f64,
    pub max_ratio_doubled: f64,
    pub relative_drift: f64,
    pub drift_tolerance: f64,
    pub verdict: Verdict,
}

/// Admissibility report for a drift: the exponent condition plus grid norms
/// of all required horizontal derivatives.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct AdmissibilityReport {
    pub p: f64,
    pub q: f64,
    pub homogeneous_dim: u32,
    /// 2/q + Q/p, admissible iff < 1.
    pub exponent_sum: f64,
    pub exponent_margin: f64,
    pub exponent_ok: bool,
    /// (component, multi-index, L^q L^p norm) for |I| ≤ r-1.
    pub derivative_norms: Vec<DerivativeNorm>,
    pub all_finite: bool,
    pub verdict: Verdict,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct DerivativeNorm {
    pub component: usize,
    pub multi_index: Vec<usize>,
    pub norm: f64,
}

/// Lipschitz-constant probe of the conjugated drift.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct LipschitzReport {
    pub estimate: f64,
    pub estimate_4x: f64,
    pub growth: f64,
    pub growth_tolerance: f64,
    pub n_pairs: usize,
    pub verdict: Verdict,
}
