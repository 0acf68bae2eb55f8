//! The Ornstein-Uhlenbeck transport flow `b` and its statistics.
//!
//! The stirring field is
//!
//! ```text
//! b(t, x) = 2 sqrt(2 nu) * sum_{k in half-lattice} theta_k (k_perp/|k|)
//!           [ cos(2 pi k.x) eta_c_k(t) + sin(2 pi k.x) eta_s_k(t) ]
//! ```
//!
//! with independent stationary OU processes `eta` of marginal `N(0, alpha/2)`
//! and autocovariance `(alpha/2) e^{-alpha |t-s|}`. Pairing `+-k` over the
//! half-lattice with separate cosine/sine channels produces a real,
//! divergence-free field whose one-time pointwise covariance is
//! `E[b (x) b(x)^T] = nu alpha Id` and whose second Sobolev moment satisfies
//! the exact identity `E ||b||^2_{H^tau} = 2 nu alpha C(tau, 2)` with
//! `C(tau, p) = sum_k theta_k^2 |k|^{p tau}`. Both are checked by tests and
//! by the `ou-covariance` experiment; the transport corrector of this pairing
//! is exactly `nu Laplacian`, which is what the limit equation assumes.
//!
//! Coefficients `theta` are radial with finite support and `l^2` norm one.
//! Two parametric families are provided (a low-pass family `|k|^{-a}` on
//! `1 <= |k| <= N` and a shell family on `N <= |k| <= 2N`) plus explicit
//! per-shell tables.

use crate::spectral::{VelocityField, Wavevector};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha12Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum NoiseError {
    #[error("invalid theta parameter: {0}")]
    BadParameter(String),
    #[error("theta support is empty")]
    EmptySupport,
    #[error("theta support reaches |k|_max = {support}, beyond the dealias cutoff {cutoff} of grid {grid}")]
    SupportExceedsDealias {
        support: i64,
        cutoff: i64,
        grid: usize,
    },
    #[error("explicit theta table is not radial: {0}")]
    NotRadial(String),
    #[error("OU ensemble modes do not match the theta support half-lattice")]
    ModeSetMismatch,
    #[error("OU step needs dt >= 0, got {0}")]
    NegativeDt(f64),
}

/// Selectable coefficient families; `a` and `cutoff` follow the config file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "lowercase")]
pub enum ThetaFamily {
    /// `theta_k = eps |k|^{-a}` on `1 <= |k| <= N`, `a in (0,1)`.
    Lowpass { a: f64, cutoff: u32 },
    /// `theta_k = eps |k|^{-a}` on `N <= |k| <= 2N`, `a > 0`.
    Shell { a: f64, cutoff: u32 },
    /// Explicit `(k1, k2, weight)` triples; must cover full radial shells
    /// with equal weights. Weights are relative and get normalized.
    Explicit { modes: Vec<(i64, i64, f64)> },
}

/// Radial, finitely supported noise coefficients with `||theta||_{l^2} = 1`.
#[derive(Debug, Clone)]
pub struct ThetaSpec {
    family: ThetaFamily,
    grid: usize,
    /// Full-lattice support, lexicographically sorted.
    support: Vec<(Wavevector, f64)>,
    /// Half-lattice representatives (`k1 > 0`, or `k1 = 0, k2 > 0`), sorted;
    /// this fixed enumeration is what ties OU substreams to modes.
    half: Vec<(Wavevector, f64)>,
    linf: f64,
}

/// The constants attached to a coefficient family.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NoiseStats {
    /// `C(tau, p) = sum theta_k^2 |k|^{p tau}`.
    pub c_tau_p: f64,
    /// `D(gamma) = (sum |theta_k| |k|^{2 - gamma})^2`.
    pub d_gamma: f64,
    /// `||theta||_{l^infty}`.
    pub linf: f64,
}

fn kahan_sum(values: impl Iterator<Item = f64>) -> f64 {
    let mut sum = 0.0;
    let mut comp = 0.0;
    for v in values {
        let y = v - comp;
        let t = sum + y;
        comp = (t - sum) - y;
        sum = t;
    }
    sum
}

fn is_half_lattice(k: Wavevector) -> bool {
    k.k1 > 0 || (k.k1 == 0 && k.k2 > 0)
}

/// Build and validate a coefficient family against grid size `grid`
/// (the support must survive the 2/3-rule mask, `|k|_max <= grid/3`).
pub fn make_theta(family: ThetaFamily, grid: usize) -> Result<ThetaSpec, NoiseError> {
    let mut support: Vec<(Wavevector, f64)> = Vec::new();
    match &family {
        ThetaFamily::Lowpass { a, cutoff } => {
            if !(*a > 0.0 && *a < 1.0) {
                return Err(NoiseError::BadParameter(format!(
                    "lowpass exponent a must lie in (0,1), got {a}"
                )));
            }
            if *cutoff < 1 {
                return Err(NoiseError::BadParameter("lowpass cutoff must be >= 1".into()));
            }
            let n = *cutoff as i64;
            for k1 in -n..=n {
                for k2 in -n..=n {
                    let k = Wavevector::new(k1, k2);
                    let r2 = k.norm_sq();
                    if r2 >= 1 && r2 <= n * n {
                        support.push((k, (r2 as f64).powf(-a / 2.0)));
                    }
                }
            }
        }
        ThetaFamily::Shell { a, cutoff } => {
            if !(*a > 0.0) {
                return Err(NoiseError::BadParameter(format!(
                    "shell exponent a must be positive, got {a}"
                )));
            }
            if *cutoff < 1 {
                return Err(NoiseError::BadParameter("shell cutoff must be >= 1".into()));
            }
            let n = *cutoff as i64;
            for k1 in -2 * n..=2 * n {
                for k2 in -2 * n..=2 * n {
                    let k = Wavevector::new(k1, k2);
                    let r2 = k.norm_sq();
                    if r2 >= n * n && r2 <= 4 * n * n {
                        support.push((k, (r2 as f64).powf(-a / 2.0)));
                    }
                }
            }
        }
        ThetaFamily::Explicit { modes } => {
            use std::collections::HashMap;
            let mut by_shell: HashMap<i64, f64> = HashMap::new();
            for &(k1, k2, w) in modes {
                let k = Wavevector::new(k1, k2);
                if k.is_zero() {
                    return Err(NoiseError::BadParameter("theta_0 must be absent".into()));
                }
                if !(w.is_finite() && w >= 0.0) {
                    return Err(NoiseError::BadParameter(format!(
                        "weight at ({k1},{k2}) must be a finite nonnegative number"
                    )));
                }
                if w == 0.0 {
                    continue;
                }
                match by_shell.insert(k.norm_sq(), w) {
                    Some(prev) if prev != w => {
                        return Err(NoiseError::NotRadial(format!(
                            "shell |k|^2 = {} carries weights {} and {}",
                            k.norm_sq(),
                            prev,
                            w
                        )))
                    }
                    _ => {}
                }
                support.push((k, w));
            }
            // radial closure: every lattice point of a listed shell must appear
            support.sort_by_key(|(k, _)| (k.k1, k.k2));
            support.dedup_by_key(|(k, _)| *k);
            for (&r2, &w) in &by_shell {
                let rad = (r2 as f64).sqrt().ceil() as i64;
                for k1 in -rad..=rad {
                    for k2 in -rad..=rad {
                        let k = Wavevector::new(k1, k2);
                        if k.norm_sq() == r2
                            && !support.iter().any(|(q, qw)| *q == k && *qw == w)
                        {
                            return Err(NoiseError::NotRadial(format!(
                                "shell |k|^2 = {r2} is missing lattice point ({}, {})",
                                k.k1, k.k2
                            )));
                        }
                    }
                }
            }
        }
    }

    if support.is_empty() {
        return Err(NoiseError::EmptySupport);
    }
    let cutoff = crate::spectral::dealias_cutoff(grid);
    let reach = support
        .iter()
        .map(|(k, _)| k.k1.abs().max(k.k2.abs()))
        .max()
        .unwrap();
    if reach > cutoff {
        return Err(NoiseError::SupportExceedsDealias {
            support: reach,
            cutoff,
            grid,
        });
    }

    support.sort_by_key(|(k, _)| (k.k1, k.k2));
    // normalize ||theta||_{l^2} to 1, with one refinement pass
    for _ in 0..2 {
        let norm = kahan_sum(support.iter().map(|(_, w)| w * w)).sqrt();
        for (_, w) in support.iter_mut() {
            *w /= norm;
        }
    }
    let residual = (kahan_sum(support.iter().map(|(_, w)| w * w)) - 1.0).abs();
    debug_assert!(residual <= 1e-15, "theta normalization residual {residual}");

    let half: Vec<(Wavevector, f64)> = support
        .iter()
        .filter(|(k, _)| is_half_lattice(*k))
        .cloned()
        .collect();
    let linf = support.iter().map(|(_, w)| *w).fold(0.0f64, f64::max);
    Ok(ThetaSpec {
        family,
        grid,
        support,
        half,
        linf,
    })
}

impl ThetaSpec {
    pub fn family(&self) -> &ThetaFamily {
        &self.family
    }

    pub fn grid_size(&self) -> usize {
        self.grid
    }

    /// Full-lattice `(k, theta_k)` support, sorted lexicographically.
    pub fn support(&self) -> &[(Wavevector, f64)] {
        &self.support
    }

    /// Half-lattice representatives in the canonical substream order.
    pub fn half_lattice(&self) -> &[(Wavevector, f64)] {
        &self.half
    }

    pub fn linf(&self) -> f64 {
        self.linf
    }

    pub fn l2_residual(&self) -> f64 {
        (kahan_sum(self.support.iter().map(|(_, w)| w * w)) - 1.0).abs()
    }
}

/// Exact finite sums `C(tau, p)` and `D(gamma)` over the support.
pub fn theta_stats(theta: &ThetaSpec, tau: f64, p: f64, gamma: f64) -> NoiseStats {
    let c = kahan_sum(
        theta
            .support()
            .iter()
            .map(|(k, w)| w * w * (k.norm_sq() as f64).powf(p * tau / 2.0)),
    );
    let d_root = kahan_sum(
        theta
            .support()
            .iter()
            .map(|(k, w)| w.abs() * (k.norm_sq() as f64).powf((2.0 - gamma) / 2.0)),
    );
    NoiseStats {
        c_tau_p: c,
        d_gamma: d_root * d_root,
        linf: theta.linf(),
    }
}

/// `sum_k theta_k^2 (k_perp x k_perp)/|k|^2` over the full lattice; equals
/// `(1/2) Id` for every radial unit family.
pub fn isotropy_identity_check(theta: &ThetaSpec) -> [[f64; 2]; 2] {
    let mut m = [[0.0f64; 2]; 2];
    for (k, w) in theta.support() {
        let p = k.perp();
        let inv = 1.0 / k.norm_sq() as f64;
        let w2 = w * w;
        m[0][0] += w2 * (p.k1 * p.k1) as f64 * inv;
        m[0][1] += w2 * (p.k1 * p.k2) as f64 * inv;
        m[1][0] += w2 * (p.k2 * p.k1) as f64 * inv;
        m[1][1] += w2 * (p.k2 * p.k2) as f64 * inv;
    }
    m
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Per-replica RNG seed: `splitmix64(master + splitmix64(replica + 1))`.
pub fn replica_seed(master: u64, replica: u64) -> u64 {
    splitmix64(master.wrapping_add(splitmix64(replica.wrapping_add(1))))
}

struct OuState {
    value: f64,
    rng: ChaCha12Rng,
}

impl OuState {
    fn gaussian(&mut self, sd: f64) -> f64 {
        let z: f64 = self.rng.sample(StandardNormal);
        sd * z
    }
}

/// Stationary Ornstein-Uhlenbeck bank: one cosine and one sine channel per
/// half-lattice mode. Substream `2 i` drives channel `c` of the `i`-th mode
/// in the canonical (lexicographic) enumeration and `2 i + 1` drives channel
/// `s`, so trajectories are reproducible independently of scheduling.
pub struct OuEnsemble {
    alpha: f64,
    modes: Vec<Wavevector>,
    cos: Vec<OuState>,
    sin: Vec<OuState>,
}

impl OuEnsemble {
    /// Draw every channel i.i.d. from the invariant law `N(0, alpha/2)`.
    pub fn init_stationary(modes: &[Wavevector], alpha: f64, seed: u64) -> Self {
        let sd = (alpha / 2.0).sqrt();
        let mk = |stream: u64| {
            let mut rng = ChaCha12Rng::seed_from_u64(seed);
            rng.set_stream(stream);
            OuState { value: 0.0, rng }
        };
        let mut cos = Vec::with_capacity(modes.len());
        let mut sin = Vec::with_capacity(modes.len());
        for i in 0..modes.len() {
            cos.push(mk(2 * i as u64));
            sin.push(mk(2 * i as u64 + 1));
        }
        for st in cos.iter_mut().chain(sin.iter_mut()) {
            st.value = st.gaussian(sd);
        }
        OuEnsemble {
            alpha,
            modes: modes.to_vec(),
            cos,
            sin,
        }
    }

    /// Ensemble matching a theta family, replica-aware.
    pub fn for_theta(theta: &ThetaSpec, alpha: f64, master_seed: u64, replica: u64) -> Self {
        let modes: Vec<Wavevector> = theta.half_lattice().iter().map(|(k, _)| *k).collect();
        Self::init_stationary(&modes, alpha, replica_seed(master_seed, replica))
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn modes(&self) -> &[Wavevector] {
        &self.modes
    }

    pub fn len(&self) -> usize {
        self.modes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.modes.is_empty()
    }

    /// Current `(cos, sin)` channel values for mode `i`.
    pub fn state(&self, i: usize) -> (f64, f64) {
        (self.cos[i].value, self.sin[i].value)
    }

    #[cfg(test)]
    fn set_state(&mut self, i: usize, c: f64, s: f64) {
        self.cos[i].value = c;
        self.sin[i].value = s;
    }

    /// Exact-in-law transition over `dt`:
    /// `eta' = e^{-alpha dt} eta + N(0, (alpha/2)(1 - e^{-2 alpha dt}))`.
    /// Preserves the stationary marginal for every `dt`; `dt = 0` is a no-op.
    pub fn step(&mut self, dt: f64) -> Result<(), NoiseError> {
        if dt < 0.0 || !dt.is_finite() {
            return Err(NoiseError::NegativeDt(dt));
        }
        if dt == 0.0 {
            return Ok(());
        }
        let decay = (-self.alpha * dt).exp();
        let sd = ((self.alpha / 2.0) * (1.0 - (-2.0 * self.alpha * dt).exp())).sqrt();
        for st in self.cos.iter_mut().chain(self.sin.iter_mut()) {
            let g = st.gaussian(sd);
            st.value = decay * st.value + g;
        }
        Ok(())
    }
}

/// Spectral coefficients of `b` for the current OU state: at each half-mode
/// `k`, `b_hat_k = sqrt(2 nu) theta_k (k_perp/|k|) (eta_c - i eta_s)` with the
/// conjugate at `-k`.
pub fn assemble_b(
    theta: &ThetaSpec,
    ens: &OuEnsemble,
    nu: f64,
) -> Result<VelocityField, NoiseError> {
    let mut out = VelocityField::zeros(theta.grid_size())
        .map_err(|e| NoiseError::BadParameter(e.to_string()))?;
    add_b_into(theta, ens, nu, &mut out)?;
    Ok(out)
}

/// Accumulate the `b` coefficients into an existing velocity field (the hot
/// path used by the steppers; `assemble_b` is this plus a fresh allocation).
pub fn add_b_into(
    theta: &ThetaSpec,
    ens: &OuEnsemble,
    nu: f64,
    out: &mut VelocityField,
) -> Result<(), NoiseError> {
    let half = theta.half_lattice();
    if ens.len() != half.len()
        || !half
            .iter()
            .zip(ens.modes())
            .all(|((k, _), m)| k == m)
    {
        return Err(NoiseError::ModeSetMismatch);
    }
    let pref = (2.0 * nu).sqrt();
    for (i, (k, w)) in half.iter().enumerate() {
        let (c, s) = ens.state(i);
        let amp = Complex64::new(pref * w * c, -pref * w * s);
        let norm = k.norm();
        let e1 = k.perp().k1 as f64 / norm;
        let e2 = k.perp().k2 as f64 / norm;
        out.u1.add_mode_pair(*k, amp * e1);
        out.u2.add_mode_pair(*k, amp * e2);
    }
    Ok(())
}

/// Report of a Monte Carlo check of `E ||b||^p_{H^tau}` against its scale
/// `nu^{p/2} alpha^{p/2} C(tau, p)`; for `p = 2` the reference is the exact
/// value `2 nu alpha C(tau, 2)`.
#[derive(Debug, Clone, Serialize)]
pub struct BMomentReport {
    pub tau: f64,
    pub p: f64,
    pub samples: usize,
    pub empirical_mean: f64,
    pub stderr: f64,
    pub reference: f64,
    pub ratio: f64,
}

/// Estimate `E ||b||^p_{H^tau}` over independent stationary draws.
pub fn b_moment_check(
    theta: &ThetaSpec,
    alpha: f64,
    nu: f64,
    tau: f64,
    p: f64,
    samples: usize,
    seed: u64,
) -> Result<BMomentReport, NoiseError> {
    assert!(p == 2.0 || p == 4.0, "moment order must be 2 or 4");
    assert!(samples >= 1000, "need at least 10^3 samples");
    let weights = crate::spectral::SobolevWeights::new(theta.grid_size(), tau);
    let mut sum = 0.0;
    let mut sum_sq = 0.0;
    for rep in 0..samples {
        let ens = OuEnsemble::for_theta(theta, alpha, seed, rep as u64);
        let b = assemble_b(theta, &ens, nu)?;
        let norm_sq = {
            let a = weights.norm(&b.u1);
            let c = weights.norm(&b.u2);
            a * a + c * c
        };
        let val = if p == 2.0 { norm_sq } else { norm_sq * norm_sq };
        sum += val;
        sum_sq += val * val;
    }
    let n = samples as f64;
    let mean = sum / n;
    let var = (sum_sq / n - mean * mean).max(0.0) * n / (n - 1.0);
    let stderr = (var / n).sqrt();
    let c = theta_stats(theta, tau, p, 1.0).c_tau_p;
    let reference = if p == 2.0 {
        2.0 * nu * alpha * c
    } else {
        nu.powf(p / 2.0) * alpha.powf(p / 2.0) * c
    };
    Ok(BMomentReport {
        tau,
        p,
        samples,
        empirical_mean: mean,
        stderr,
        reference,
        ratio: mean / reference,
    })
}
