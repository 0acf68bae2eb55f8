//! Post-processing of run records: decay-rate fits, mixing statistics in
//! negative Sobolev norms, time-increment statistics, and Monte Carlo
//! aggregation with standard errors.

use crate::dynamics::{RunRecord, SimConfig};
use crate::spectral::SobolevWeights;
use serde::Serialize;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum DiagnosticsError {
    #[error("decay fit needs at least 5 usable points in the window, got {0}")]
    TooFewPoints(usize),
    #[error("Monte Carlo estimates need at least 8 replicas, got {0}")]
    TooFewReplicas(usize),
    #[error("records mix incompatible configs: {0}")]
    MixedConfigs(String),
    #[error("record carries no distance series for order s = {0}")]
    MissingOrder(f64),
    #[error("increment statistic: {0}")]
    BadIncrement(String),
}

/// Least-squares exponential decay fit of a norm series.
///
/// The rate applies to the norm itself (`||.|| ~ C e^{-rate t}`); statements
/// about squared norms decay at `2 * rate`.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct DecayFit {
    pub rate: f64,
    pub window: (f64, f64),
    /// RMS residual of the fit in log space; reported, never hidden.
    pub residual: f64,
    pub points: usize,
    /// True when underflowed samples were dropped from the window.
    pub truncated: bool,
}

/// Fit `log norm = a - rate * t` over the points inside `window`.
/// Samples at or below the `1e-300` underflow floor are dropped (and the
/// fit is marked truncated).
pub fn fit_decay(
    series: &[(f64, f64)],
    window: (f64, f64),
) -> Result<DecayFit, DiagnosticsError> {
    let mut kept: Vec<(f64, f64)> = Vec::new();
    let mut truncated = false;
    for &(t, n) in series {
        if t < window.0 || t > window.1 {
            continue;
        }
        if n > 1e-300 {
            kept.push((t, n.ln()));
        } else {
            truncated = true;
        }
    }
    if kept.len() < 5 {
        return Err(DiagnosticsError::TooFewPoints(kept.len()));
    }
    let n = kept.len() as f64;
    let mean_t = kept.iter().map(|p| p.0).sum::<f64>() / n;
    let mean_y = kept.iter().map(|p| p.1).sum::<f64>() / n;
    let mut stt = 0.0;
    let mut sty = 0.0;
    for &(t, y) in &kept {
        stt += (t - mean_t) * (t - mean_t);
        sty += (t - mean_t) * (y - mean_y);
    }
    let slope = sty / stt;
    let intercept = mean_y - slope * mean_t;
    let mut ss = 0.0;
    for &(t, y) in &kept {
        let r = y - (intercept + slope * t);
        ss += r * r;
    }
    Ok(DecayFit {
        rate: -slope,
        window,
        residual: (ss / n).sqrt(),
        points: kept.len(),
        truncated,
    })
}

/// Convenience: default fit window `[0.2 T, 0.8 T]`, skipping transients
/// and the underflow tail.
pub fn default_fit_window(t_end: f64) -> (f64, f64) {
    (0.2 * t_end, 0.8 * t_end)
}

/// A Monte Carlo mean with its standard error.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct MCEstimate {
    pub mean: f64,
    pub stderr: f64,
    pub replicas: usize,
}

impl MCEstimate {
    /// Aggregate keyed samples. Sums run in key order, so the estimate is
    /// invariant under any reordering of the input.
    pub fn from_keyed_samples(samples: &[(u64, f64)]) -> Result<Self, DiagnosticsError> {
        if samples.len() < 8 {
            return Err(DiagnosticsError::TooFewReplicas(samples.len()));
        }
        let mut sorted: Vec<(u64, f64)> = samples.to_vec();
        sorted.sort_by_key(|(k, _)| *k);
        let n = sorted.len() as f64;
        let mean = sorted.iter().map(|(_, v)| v).sum::<f64>() / n;
        let var = sorted
            .iter()
            .map(|(_, v)| (v - mean) * (v - mean))
            .sum::<f64>()
            / (n - 1.0);
        Ok(MCEstimate {
            mean,
            stderr: (var / n).sqrt(),
            replicas: sorted.len(),
        })
    }
}

fn same_physics(a: &SimConfig, b: &SimConfig) -> Option<String> {
    if a.kappa != b.kappa {
        return Some(format!("kappa {} vs {}", a.kappa, b.kappa));
    }
    if a.nu != b.nu {
        return Some(format!("nu {} vs {}", a.nu, b.nu));
    }
    if a.alpha != b.alpha {
        return Some(format!("alpha {} vs {}", a.alpha, b.alpha));
    }
    if a.theta != b.theta {
        return Some("theta family".into());
    }
    if a.grid != b.grid {
        return Some(format!("grid {} vs {}", a.grid, b.grid));
    }
    if a.dt != b.dt {
        return Some(format!("dt {} vs {}", a.dt, b.dt));
    }
    if a.t_end != b.t_end {
        return Some(format!("t_end {} vs {}", a.t_end, b.t_end));
    }
    if a.scheme != b.scheme || a.dealias != b.dealias {
        return Some("scheme/dealias".into());
    }
    None
}

/// Monte Carlo estimate of `sup_{t <= T} ||xi_t - xibar_t||_{H^{-s}}` over an
/// ensemble of coupled runs that share everything except their replica index.
/// The sup ranges over recorded times, a lower bound on the continuous sup.
pub fn mixing_statistic(records: &[RunRecord], s: f64) -> Result<MCEstimate, DiagnosticsError> {
    let first = records
        .first()
        .ok_or(DiagnosticsError::TooFewReplicas(0))?;
    for r in records.iter().skip(1) {
        if let Some(diff) = same_physics(&first.config, &r.config) {
            return Err(DiagnosticsError::MixedConfigs(diff));
        }
        if r.config.seed != first.config.seed {
            return Err(DiagnosticsError::MixedConfigs("master seed".into()));
        }
    }
    let mut samples = Vec::with_capacity(records.len());
    for r in records {
        let idx = r
            .distance_orders
            .iter()
            .position(|&o| (o - s).abs() < 1e-12)
            .ok_or(DiagnosticsError::MissingOrder(s))?;
        samples.push((r.replica, r.sup_distances[idx]));
    }
    MCEstimate::from_keyed_samples(&samples)
}

/// Average of `||xi_{t+delta} - xi_t||^p_{H^{-1}}` over available start times
/// and replicas. Records must carry snapshots at a uniform cadence; `delta`
/// must be a multiple of that cadence and satisfy `delta * alpha >= 1`
/// (`delta = 0` is the trivial zero statistic).
pub fn increment_statistic(
    records: &[RunRecord],
    delta: f64,
    p: f64,
) -> Result<MCEstimate, DiagnosticsError> {
    let first = records
        .first()
        .ok_or(DiagnosticsError::TooFewReplicas(0))?;
    for r in records.iter().skip(1) {
        if let Some(diff) = same_physics(&first.config, &r.config) {
            return Err(DiagnosticsError::MixedConfigs(diff));
        }
    }
    if first.snapshots.is_empty() {
        return Err(DiagnosticsError::BadIncrement(
            "records carry no snapshots; enable snapshot recording".into(),
        ));
    }
    if first.times.len() < 2 {
        return Err(DiagnosticsError::BadIncrement("too few record times".into()));
    }
    let cadence = first.times[1] - first.times[0];
    for w in first.times.windows(2) {
        if ((w[1] - w[0]) - cadence).abs() > 1e-9 {
            return Err(DiagnosticsError::BadIncrement(
                "snapshots are not uniformly spaced".into(),
            ));
        }
    }
    if delta == 0.0 {
        let samples: Vec<(u64, f64)> = records.iter().map(|r| (r.replica, 0.0)).collect();
        return MCEstimate::from_keyed_samples(&samples);
    }
    let lag_f = delta / cadence;
    let lag = lag_f.round();
    if lag < 1.0 || (lag_f - lag).abs() > 1e-6 {
        return Err(DiagnosticsError::BadIncrement(format!(
            "delta = {delta} is not a multiple of the sampling interval {cadence}"
        )));
    }
    let lag = lag as usize;
    if lag >= first.snapshots.len() {
        return Err(DiagnosticsError::BadIncrement(format!(
            "delta = {delta} exceeds the recorded horizon"
        )));
    }
    if delta * first.config.alpha < 0.99 {
        return Err(DiagnosticsError::BadIncrement(format!(
            "delta * alpha = {} violates the increment regime (need >= 1)",
            delta * first.config.alpha
        )));
    }
    let weights = SobolevWeights::new(first.config.grid, -1.0);
    let mut samples = Vec::with_capacity(records.len());
    for r in records {
        let snaps = &r.snapshots;
        if snaps.len() != first.snapshots.len() {
            return Err(DiagnosticsError::BadIncrement(
                "replicas recorded different snapshot counts".into(),
            ));
        }
        let mut acc = 0.0;
        let mut count = 0usize;
        for t in 0..snaps.len() - lag {
            let d = weights.norm_of_difference(&snaps[t + lag], &snaps[t]);
            acc += d.powf(p);
            count += 1;
        }
        samples.push((r.replica, acc / count as f64));
    }
    MCEstimate::from_keyed_samples(&samples)
}
