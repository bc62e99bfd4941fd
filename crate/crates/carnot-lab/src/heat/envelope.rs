//! Gaussian envelope fits for kernel derivative estimates:
//! `|∂_t^k Z_I p(t,x)| ≤ C t^{-k-(s+Q)/2} exp(-c‖x‖²/t)`.

use crate::error::{Error, Result};
use crate::group::CarnotGroupSpec;
use crate::report::{EnvelopeReport, Verdict};
use crate::stats::linear_fit;

/// The envelope shape: constants (C, c) for the time-derivative order k and
/// the horizontal multi-index I with s = |I|.
#[derive(Clone, Debug)]
pub struct KernelEnvelope {
    pub c_front: f64,
    pub c_exp: f64,
    pub time_order: usize,
    pub multi_index: Vec<usize>,
}

impl KernelEnvelope {
    pub fn new(c_front: f64, c_exp: f64, time_order: usize, multi_index: Vec<usize>) -> Result<Self> {
        if !(c_front > 0.0) || !(c_exp > 0.0) {
            return Err(Error::Domain(
                "envelope constants C, c must be positive".into(),
            ));
        }
        Ok(KernelEnvelope {
            c_front,
            c_exp,
            time_order,
            multi_index,
        })
    }

    /// `C t^{-k-(s+Q)/2} exp(-c‖x‖²/t)`.
    pub fn value(&self, group: &CarnotGroupSpec, t: f64, x: &[f64]) -> f64 {
        let s = self.multi_index.len() as f64;
        let q = group.homogeneous_dim() as f64;
        let norm = group.homogeneous_norm(x);
        self.c_front
            * t.powf(-(self.time_order as f64) - (s + q) / 2.0)
            * (-self.c_exp * norm * norm / t).exp()
    }
}

/// One measured sample: an estimate of `|∂_t^k Z_I p|` at (t, x).
#[derive(Clone, Debug)]
pub struct EnvelopeSample {
    pub t: f64,
    pub x: Vec<f64>,
    pub estimate: f64,
}

/// Fits (C, c) by least squares in log space — the power of t is pinned by
/// (k, |I|, Q), leaving `log est + (k+(s+Q)/2)·log t = log C - c·(‖x‖²/t)` —
/// and reports the worst estimate/envelope ratio. Passes iff the ratio stays
/// below `1 + slack`.
pub fn envelope_check(
    group: &CarnotGroupSpec,
    samples: &[EnvelopeSample],
    time_order: usize,
    multi_index: &[usize],
    slack: f64,
) -> Result<(KernelEnvelope, EnvelopeReport)> {
    if samples.len() < 3 {
        return Err(Error::Contract(
            "envelope fit needs at least 3 samples".into(),
        ));
    }
    if samples.iter().any(|s| !(s.t > 0.0)) {
        return Err(Error::Contract("all sample times must be positive".into()));
    }
    let s_len = multi_index.len() as f64;
    let q = group.homogeneous_dim() as f64;
    let exponent = time_order as f64 + (s_len + q) / 2.0;

    let mut abscissae = Vec::with_capacity(samples.len());
    let mut ordinates = Vec::with_capacity(samples.len());
    for s in samples {
        if !(s.estimate > 0.0) {
            // Zero or negative estimates cannot violate a positive envelope;
            // skip them in the log-space fit.
            continue;
        }
        let norm = group.homogeneous_norm(&s.x);
        abscissae.push(norm * norm / s.t);
        ordinates.push(s.estimate.ln() + exponent * s.t.ln());
    }
    if ordinates.len() < 3 {
        return Err(Error::Contract(
            "too few positive estimates for an envelope fit".into(),
        ));
    }
    let (log_c, neg_c) = linear_fit(&abscissae, &ordinates);
    let c_exp = (-neg_c).max(1e-12);
    let c_front = log_c.exp();
    let envelope = KernelEnvelope::new(c_front, c_exp, time_order, multi_index.to_vec())?;

    let mut max_ratio: f64 = 0.0;
    for s in samples {
        let env = envelope.value(group, s.t, &s.x);
        if env > 0.0 {
            max_ratio = max_ratio.max(s.estimate / env);
        }
    }
    let report = EnvelopeReport {
        fitted_c_front: c_front,
        fitted_c_exp: c_exp,
        max_ratio,
        slack,
        n_samples: samples.len(),
        verdict: Verdict::from_bool(max_ratio <= 1.0 + slack && neg_c < 0.0),
    };
    Ok((envelope, report))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::group::euclidean;

    #[test]
    fn exact_gaussian_fits_with_ratio_one() {
        // p(t,x) = (4πt)^{-1/2} e^{-x²/4t} on euclidean(1): C = (4π)^{-1/2},
        // c = 1/4, and the fit is exact.
        let g = euclidean(1);
        let mut samples = Vec::new();
        for (ti, t) in [0.25, 0.5, 1.0, 2.0].iter().enumerate() {
            for xi in 0..5 {
                let x = -1.5 + 0.75 * xi as f64 + 0.05 * ti as f64;
                samples.push(EnvelopeSample {
                    t: *t,
                    x: vec![x],
                    estimate: super::super::euclidean_heat_kernel(1, *t, &[x]),
                });
            }
        }
        let (env, rep) = envelope_check(&g, &samples, 0, &[], 0.05).unwrap();
        assert!(rep.verdict.passed(), "{rep:?}");
        assert!((rep.max_ratio - 1.0).abs() < 1e-9);
        assert!((env.c_front - (4.0 * std::f64::consts::PI).powf(-0.5)).abs() < 1e-9);
        assert!((env.c_exp - 0.25).abs() < 1e-9);
    }

    #[test]
    fn empty_sample_set_is_rejected() {
        let g = euclidean(1);
        assert!(envelope_check(&g, &[], 0, &[], 0.05).is_err());
    }

    #[test]
    fn envelope_constructor_validates() {
        assert!(KernelEnvelope::new(0.0, 1.0, 0, vec![]).is_err());
        assert!(KernelEnvelope::new(1.0, -1.0, 0, vec![]).is_err());
    }
}
