//! Fourier-side representation of periodic scalar and vector fields on the
//! unit torus `T^2 = [0,1)^2`.
//!
//! Fields are stored as truncated Fourier coefficients in the basis
//! `e^{2 pi i k.x}` with the normalization `xi_hat_k = integral xi e^{-2 pi i k.x} dx`,
//! so a pure cosine `cos(2 pi k.x)` has the coefficient pair `(1/2, 1/2)` at
//! `+-k`. Three structural invariants hold for every field:
//!
//! * Hermitian symmetry `xi_hat_{-k} = conj(xi_hat_k)` (the field is real),
//! * zero mean `xi_hat_0 = 0`,
//! * the Nyquist row/column `k_j = +-M/2` is identically zero, so the
//!   conjugate pairing is unambiguous on an even grid.
//!
//! Sobolev norms use the homogeneous weight `|k|^{2s}` on the integer
//! lattice (no `2 pi`); the Laplacian itself acts with the physical
//! multiplier `-4 pi^2 |k|^2`, which is what all decay-rate checks use.

mod fft;
mod oracle;

pub use oracle::convolution_oracle;

use num_complex::Complex64;
use thiserror::Error;

pub(crate) use fft::Fft2;

#[derive(Debug, Error)]
pub enum SpectralError {
    #[error("physical samples contain a non-finite value at index {0}")]
    NonFinite(usize),
    #[error("grid size {0} is not supported (need an even size >= 4)")]
    BadGrid(usize),
    #[error("grid sizes differ: {0} vs {1}")]
    GridMismatch(usize, usize),
    #[error("sample buffer has length {got}, expected {want}")]
    BadLength { got: usize, want: usize },
    #[error("grid size {0} exceeds the brute-force oracle limit of {1}")]
    GridTooLarge(usize, usize),
    #[error("malformed field snapshot: {0}")]
    BadSnapshot(String),
}

/// A point of the integer frequency lattice `Z^2`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Wavevector {
    pub k1: i64,
    pub k2: i64,
}

impl Wavevector {
    pub const fn new(k1: i64, k2: i64) -> Self {
        Wavevector { k1, k2 }
    }

    /// `k_perp = (k2, -k1)`.
    pub fn perp(self) -> Self {
        Wavevector::new(self.k2, -self.k1)
    }

    pub fn norm_sq(self) -> i64 {
        self.k1 * self.k1 + self.k2 * self.k2
    }

    pub fn norm(self) -> f64 {
        (self.norm_sq() as f64).sqrt()
    }

    pub fn is_zero(self) -> bool {
        self.k1 == 0 && self.k2 == 0
    }
}

impl std::ops::Neg for Wavevector {
    type Output = Wavevector;
    fn neg(self) -> Wavevector {
        Wavevector::new(-self.k1, -self.k2)
    }
}

/// Grid index (row-major, FFT layout) of wavevector `k` on an `m x m` grid.
#[inline]
fn index_of(m: usize, k: Wavevector) -> usize {
    let mi = m as i64;
    let i = k.k1.rem_euclid(mi) as usize;
    let j = k.k2.rem_euclid(mi) as usize;
    i * m + j
}

/// Signed frequency of FFT slot `i`: `0..=M/2-1` stay, the rest wrap negative.
#[inline]
fn freq_at(m: usize, i: usize) -> i64 {
    if i <= m / 2 {
        i as i64
    } else {
        i as i64 - m as i64
    }
}

/// All nonzero wavevectors representable on an `m x m` grid after Nyquist
/// truncation, i.e. `|k1|, |k2| <= m/2 - 1`, excluding the origin.
pub fn wavevectors(m: usize) -> impl Iterator<Item = Wavevector> {
    let half = m as i64 / 2 - 1;
    (-half..=half).flat_map(move |k1| {
        (-half..=half)
            .map(move |k2| Wavevector::new(k1, k2))
            .filter(|k| !k.is_zero())
    })
}

/// Largest max-norm frequency kept by the 2/3-rule mask on an `m` grid.
pub fn dealias_cutoff(m: usize) -> i64 {
    (m / 3) as i64
}

/// Zero-mean real scalar field on the torus, stored spectrally.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectralField {
    m: usize,
    coeffs: Vec<Complex64>,
}

impl SpectralField {
    pub fn zeros(m: usize) -> Result<Self, SpectralError> {
        if m < 4 || m % 2 != 0 {
            return Err(SpectralError::BadGrid(m));
        }
        Ok(SpectralField {
            m,
            coeffs: vec![Complex64::default(); m * m],
        })
    }

    /// Forward transform of `m*m` physical samples (row-major, sample points
    /// `x = (i/m, j/m)`). The result is projected onto the invariant set:
    /// the mean and the Nyquist row/column are zeroed.
    pub fn from_physical(m: usize, samples: &[f64]) -> Result<Self, SpectralError> {
        let mut field = SpectralField::zeros(m)?;
        if samples.len() != m * m {
            return Err(SpectralError::BadLength {
                got: samples.len(),
                want: m * m,
            });
        }
        if let Some(pos) = samples.iter().position(|v| !v.is_finite()) {
            return Err(SpectralError::NonFinite(pos));
        }
        for (c, &s) in field.coeffs.iter_mut().zip(samples) {
            *c = Complex64::new(s, 0.0);
        }
        let mut fft = Fft2::new(m);
        fft.forward(&mut field.coeffs);
        let scale = 1.0 / (m * m) as f64;
        for c in field.coeffs.iter_mut() {
            *c *= scale;
        }
        field.project_truncated();
        Ok(field)
    }

    /// Build a field from explicit coefficients at `+k`; the conjugate value
    /// at `-k` is filled in automatically.
    pub fn from_modes(m: usize, modes: &[(Wavevector, Complex64)]) -> Result<Self, SpectralError> {
        let mut field = SpectralField::zeros(m)?;
        for &(k, c) in modes {
            field.add_mode_pair(k, c);
        }
        Ok(field)
    }

    /// Inverse transform to `m*m` physical samples. The imaginary residue of
    /// the complex inverse FFT (roundoff-level for Hermitian data) is dropped.
    pub fn to_physical(&self) -> Vec<f64> {
        self.to_physical_full().0
    }

    /// Inverse transform returning samples together with the largest absolute
    /// imaginary part, as a realness diagnostic.
    pub fn to_physical_full(&self) -> (Vec<f64>, f64) {
        let mut buf = self.coeffs.clone();
        let mut fft = Fft2::new(self.m);
        fft.inverse(&mut buf);
        let mut max_im: f64 = 0.0;
        let samples = buf
            .iter()
            .map(|c| {
                max_im = max_im.max(c.im.abs());
                c.re
            })
            .collect();
        (samples, max_im)
    }

    pub fn grid_size(&self) -> usize {
        self.m
    }

    pub fn mode(&self, k: Wavevector) -> Complex64 {
        self.coeffs[index_of(self.m, k)]
    }

    /// Set `xi_hat_k = c` and `xi_hat_{-k} = conj(c)`. The origin and the
    /// Nyquist band are silently kept at zero.
    pub fn set_mode_pair(&mut self, k: Wavevector, c: Complex64) {
        if !self.representable(k) {
            return;
        }
        self.coeffs[index_of(self.m, k)] = c;
        self.coeffs[index_of(self.m, -k)] = c.conj();
    }

    /// Add `c` at `+k` and `conj(c)` at `-k`.
    pub fn add_mode_pair(&mut self, k: Wavevector, c: Complex64) {
        if !self.representable(k) {
            return;
        }
        self.coeffs[index_of(self.m, k)] += c;
        self.coeffs[index_of(self.m, -k)] += c.conj();
    }

    fn representable(&self, k: Wavevector) -> bool {
        let half = self.m as i64 / 2;
        !k.is_zero() && k.k1.abs() < half && k.k2.abs() < half
    }

    /// Zero the mean and the Nyquist row/column.
    pub(crate) fn project_truncated(&mut self) {
        let m = self.m;
        self.coeffs[0] = Complex64::default();
        let ny = m / 2;
        for j in 0..m {
            self.coeffs[ny * m + j] = Complex64::default();
            self.coeffs[j * m + ny] = Complex64::default();
        }
    }

    /// Apply the 2/3-rule mask: zero every mode with `max(|k1|,|k2|) > m/3`.
    pub fn dealias(&mut self) {
        let cut = dealias_cutoff(self.m);
        let m = self.m;
        for i in 0..m {
            let k1 = freq_at(m, i).abs();
            for j in 0..m {
                let k2 = freq_at(m, j).abs();
                if k1.max(k2) > cut {
                    self.coeffs[i * m + j] = Complex64::default();
                }
            }
        }
    }

    /// `d/dx_j`, multiplier `2 pi i k_j`.
    pub fn partial(&self, axis: usize) -> SpectralField {
        assert!(axis == 1 || axis == 2, "axis must be 1 or 2");
        let mut out = self.clone();
        out.partial_in_place(axis);
        out
    }

    fn partial_in_place(&mut self, axis: usize) {
        let m = self.m;
        for i in 0..m {
            let k1 = freq_at(m, i);
            for j in 0..m {
                let k = if axis == 1 { k1 } else { freq_at(m, j) };
                let mult = Complex64::new(0.0, 2.0 * std::f64::consts::PI * k as f64);
                self.coeffs[i * m + j] *= mult;
            }
        }
        self.project_truncated();
    }

    /// Laplacian, multiplier `-4 pi^2 |k|^2`.
    pub fn laplacian(&self) -> SpectralField {
        let mut out = self.clone();
        let m = self.m;
        for i in 0..m {
            let k1 = freq_at(m, i);
            for j in 0..m {
                let k2 = freq_at(m, j);
                let kk = (k1 * k1 + k2 * k2) as f64;
                out.coeffs[i * m + j] *= -4.0 * std::f64::consts::PI.powi(2) * kk;
            }
        }
        out
    }

    /// `grad_perp f = (d2 f, -d1 f)`.
    pub fn grad_perp(&self) -> VelocityField {
        VelocityField {
            u1: self.partial(2),
            u2: {
                let mut g = self.partial(1);
                for c in g.coeffs.iter_mut() {
                    *c = -*c;
                }
                g
            },
        }
    }

    /// Divergence-free velocity recovered from vorticity through the stream
    /// function: `u_hat_k = i k_perp xi_hat_k / (2 pi |k|^2)`. The sign is
    /// pinned by the requirement `curl(u) = d1 u2 - d2 u1 = xi`.
    pub fn biot_savart(&self) -> VelocityField {
        let mut out = VelocityField::zeros(self.m).expect("grid already validated");
        self.biot_savart_into(&mut out);
        out
    }

    /// Allocation-free variant of [`Self::biot_savart`]; overwrites `out`.
    pub fn biot_savart_into(&self, out: &mut VelocityField) {
        let m = self.m;
        assert_eq!(out.grid_size(), m, "grid mismatch");
        let two_pi = 2.0 * std::f64::consts::PI;
        for i in 0..m {
            let k1 = freq_at(m, i);
            for j in 0..m {
                let k2 = freq_at(m, j);
                let kk = k1 * k1 + k2 * k2;
                let idx = i * m + j;
                if kk == 0 {
                    out.u1.coeffs[idx] = Complex64::default();
                    out.u2.coeffs[idx] = Complex64::default();
                    continue;
                }
                let xi = self.coeffs[idx];
                let factor = Complex64::new(0.0, 1.0) / (two_pi * kk as f64);
                out.u1.coeffs[idx] = factor * k2 as f64 * xi;
                out.u2.coeffs[idx] = factor * -k1 as f64 * xi;
            }
        }
        out.u1.project_truncated();
        out.u2.project_truncated();
    }

    /// Homogeneous Sobolev norm `(sum |k|^{2s} |xi_hat_k|^2)^{1/2}`. The
    /// zero-mean invariant makes the weight well defined for negative `s`.
    pub fn sobolev_norm(&self, s: f64) -> f64 {
        let w = SobolevWeights::new(self.m, s);
        w.norm(self)
    }

    /// `L^2` norm via Parseval.
    pub fn l2_norm(&self) -> f64 {
        self.coeffs.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt()
    }

    /// Real `L^2` inner product of two fields.
    pub fn l2_inner(&self, other: &SpectralField) -> f64 {
        self.coeffs
            .iter()
            .zip(&other.coeffs)
            .map(|(a, b)| (a * b.conj()).re)
            .sum()
    }

    /// `self - other`.
    pub fn difference(&self, other: &SpectralField) -> Result<SpectralField, SpectralError> {
        if self.m != other.m {
            return Err(SpectralError::GridMismatch(self.m, other.m));
        }
        let mut out = self.clone();
        for (c, o) in out.coeffs.iter_mut().zip(&other.coeffs) {
            *c -= o;
        }
        Ok(out)
    }

    pub fn scale(&mut self, factor: f64) {
        for c in self.coeffs.iter_mut() {
            *c *= factor;
        }
    }

    pub fn is_finite(&self) -> bool {
        self.coeffs.iter().all(|c| c.re.is_finite() && c.im.is_finite())
    }

    pub(crate) fn coeffs(&self) -> &[Complex64] {
        &self.coeffs
    }

    pub(crate) fn coeffs_mut(&mut self) -> &mut [Complex64] {
        &mut self.coeffs
    }

    /// Serialize to the documented snapshot layout: grid size as a
    /// little-endian u64, then the full `m x m` coefficient table row-major in
    /// FFT index order, each entry as little-endian f64 `(re, im)`.
    pub fn write_snapshot(&self, out: &mut Vec<u8>) {
        out.extend_from_slice(&(self.m as u64).to_le_bytes());
        for c in &self.coeffs {
            out.extend_from_slice(&c.re.to_le_bytes());
            out.extend_from_slice(&c.im.to_le_bytes());
        }
    }

    pub fn read_snapshot(bytes: &[u8]) -> Result<Self, SpectralError> {
        if bytes.len() < 8 {
            return Err(SpectralError::BadSnapshot("missing header".into()));
        }
        let m = u64::from_le_bytes(bytes[..8].try_into().unwrap()) as usize;
        let want = 8 + 16 * m * m;
        if bytes.len() != want {
            return Err(SpectralError::BadSnapshot(format!(
                "expected {} bytes for grid {}, got {}",
                want,
                m,
                bytes.len()
            )));
        }
        let mut field = SpectralField::zeros(m)?;
        for (idx, c) in field.coeffs.iter_mut().enumerate() {
            let off = 8 + 16 * idx;
            let re = f64::from_le_bytes(bytes[off..off + 8].try_into().unwrap());
            let im = f64::from_le_bytes(bytes[off + 8..off + 16].try_into().unwrap());
            *c = Complex64::new(re, im);
        }
        Ok(field)
    }
}

/// Precomputed `|k|^{2s}` table for repeated Sobolev norms on one grid.
pub struct SobolevWeights {
    weights: Vec<f64>,
}

impl SobolevWeights {
    pub fn new(m: usize, s: f64) -> Self {
        let mut weights = vec![0.0; m * m];
        for i in 0..m {
            let k1 = freq_at(m, i);
            for j in 0..m {
                let k2 = freq_at(m, j);
                let kk = (k1 * k1 + k2 * k2) as f64;
                weights[i * m + j] = if kk > 0.0 { kk.powf(s) } else { 0.0 };
            }
        }
        SobolevWeights { weights }
    }

    pub fn norm(&self, f: &SpectralField) -> f64 {
        debug_assert_eq!(self.weights.len(), f.coeffs.len());
        self.weights
            .iter()
            .zip(&f.coeffs)
            .map(|(w, c)| w * c.norm_sqr())
            .sum::<f64>()
            .sqrt()
    }

    pub fn norm_of_difference(&self, a: &SpectralField, b: &SpectralField) -> f64 {
        debug_assert_eq!(a.coeffs.len(), b.coeffs.len());
        self.weights
            .iter()
            .zip(a.coeffs.iter().zip(&b.coeffs))
            .map(|(w, (x, y))| w * (x - y).norm_sqr())
            .sum::<f64>()
            .sqrt()
    }
}

/// Two-component divergence-free real vector field, stored spectrally.
#[derive(Debug, Clone, PartialEq)]
pub struct VelocityField {
    pub u1: SpectralField,
    pub u2: SpectralField,
}

impl VelocityField {
    pub fn zeros(m: usize) -> Result<Self, SpectralError> {
        Ok(VelocityField {
            u1: SpectralField::zeros(m)?,
            u2: SpectralField::zeros(m)?,
        })
    }

    pub fn grid_size(&self) -> usize {
        self.u1.m
    }

    /// `curl u = d1 u2 - d2 u1`.
    pub fn curl(&self) -> SpectralField {
        let mut out = self.u2.partial(1);
        let d2u1 = self.u1.partial(2);
        for (c, d) in out.coeffs.iter_mut().zip(&d2u1.coeffs) {
            *c -= d;
        }
        out
    }

    /// Largest `|k . u_hat_k|` over the lattice. Fields built by
    /// `biot_savart` and the noise assembly keep this at the rounding floor
    /// (a few `eps * |k| * |u_hat|`); anything larger signals a bug.
    pub fn max_divergence(&self) -> f64 {
        let m = self.u1.m;
        let mut worst: f64 = 0.0;
        for i in 0..m {
            let k1 = freq_at(m, i) as f64;
            for j in 0..m {
                let k2 = freq_at(m, j) as f64;
                let idx = i * m + j;
                let d = k1 * self.u1.coeffs[idx] + k2 * self.u2.coeffs[idx];
                worst = worst.max(d.norm());
            }
        }
        worst
    }

    pub fn l2_norm_sq(&self) -> f64 {
        let a = self.u1.l2_norm();
        let b = self.u2.l2_norm();
        a * a + b * b
    }

    pub fn sobolev_norm_sq(&self, s: f64) -> f64 {
        let w = SobolevWeights::new(self.u1.m, s);
        let a = w.norm(&self.u1);
        let b = w.norm(&self.u2);
        a * a + b * b
    }

    pub fn add_assign(&mut self, other: &VelocityField) {
        for (c, o) in self.u1.coeffs.iter_mut().zip(&other.u1.coeffs) {
            *c += o;
        }
        for (c, o) in self.u2.coeffs.iter_mut().zip(&other.u2.coeffs) {
            *c += o;
        }
    }

    pub fn is_finite(&self) -> bool {
        self.u1.is_finite() && self.u2.is_finite()
    }
}

/// Reusable buffers for the pseudo-spectral transport term. One instance per
/// simulation path; fields are small enough that tests can afford a fresh one
/// per call through [`advect`].
pub struct AdvectionWorkspace {
    m: usize,
    fft: Fft2,
    vel: Vec<Complex64>,
    grad: Vec<Complex64>,
    prod: Vec<Complex64>,
}

impl AdvectionWorkspace {
    pub fn new(m: usize) -> Self {
        AdvectionWorkspace {
            m,
            fft: Fft2::new(m),
            vel: vec![Complex64::default(); m * m],
            grad: vec![Complex64::default(); m * m],
            prod: vec![Complex64::default(); m * m],
        }
    }

    /// Compute `u . grad(xi)` into `out` by pointwise multiplication in
    /// physical space. Hermitian symmetry of the inputs lets both components
    /// of a vector ride in one complex transform (`re`/`im` split).
    ///
    /// With `dealias` set, the 2/3-rule mask is applied to the inputs and to
    /// the product, making the quadratic term alias-free. The output mean is
    /// always projected to zero, which is the spectral counterpart of
    /// `integral u.grad(xi) dx = 0` for divergence-free `u`.
    pub fn advect_into(
        &mut self,
        u: &VelocityField,
        xi: &SpectralField,
        dealias: bool,
        out: &mut SpectralField,
    ) -> Result<(), SpectralError> {
        let m = self.m;
        if u.grid_size() != m || xi.grid_size() != m || out.grid_size() != m {
            return Err(SpectralError::GridMismatch(u.grid_size(), xi.grid_size()));
        }
        let cut = dealias_cutoff(m);

        // vel <- u1 + i u2, grad <- d1 xi + i d2 xi, masked.
        let two_pi = 2.0 * std::f64::consts::PI;
        for i in 0..m {
            let k1 = freq_at(m, i);
            for j in 0..m {
                let k2 = freq_at(m, j);
                let idx = i * m + j;
                let keep = !dealias || k1.abs().max(k2.abs()) <= cut;
                if keep {
                    let iu2 = u.u2.coeffs[idx] * Complex64::new(0.0, 1.0);
                    self.vel[idx] = u.u1.coeffs[idx] + iu2;
                    let g1 = xi.coeffs[idx] * Complex64::new(0.0, two_pi * k1 as f64);
                    let g2 = xi.coeffs[idx] * Complex64::new(0.0, two_pi * k2 as f64);
                    self.grad[idx] = g1 + g2 * Complex64::new(0.0, 1.0);
                } else {
                    self.vel[idx] = Complex64::default();
                    self.grad[idx] = Complex64::default();
                }
            }
        }
        self.fft.inverse(&mut self.vel);
        self.fft.inverse(&mut self.grad);

        for idx in 0..m * m {
            let v = self.vel[idx];
            let g = self.grad[idx];
            self.prod[idx] = Complex64::new(v.re * g.re + v.im * g.im, 0.0);
        }
        self.fft.forward(&mut self.prod);
        let scale = 1.0 / (m * m) as f64;
        for (o, p) in out.coeffs.iter_mut().zip(&self.prod) {
            *o = p * scale;
        }
        if dealias {
            out.dealias();
        }
        out.project_truncated();
        Ok(())
    }

    /// Largest pointwise speed `|(u1, u2)|` seen by the most recent
    /// `advect_into` call (read from its physical-space velocity buffer).
    pub fn last_max_speed(&self) -> f64 {
        self.vel
            .iter()
            .map(|c| (c.re * c.re + c.im * c.im).sqrt())
            .fold(0.0, f64::max)
    }
}

/// Pseudo-spectral transport term `u . grad(xi)`; see
/// [`AdvectionWorkspace::advect_into`] for the contract.
pub fn advect(
    u: &VelocityField,
    xi: &SpectralField,
    dealias: bool,
) -> Result<SpectralField, SpectralError> {
    let mut ws = AdvectionWorkspace::new(xi.grid_size());
    let mut out = SpectralField::zeros(xi.grid_size())?;
    ws.advect_into(u, xi, dealias, &mut out)?;
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn grid_samples(m: usize, f: impl Fn(f64, f64) -> f64) -> Vec<f64> {
        let mut out = Vec::with_capacity(m * m);
        for i in 0..m {
            for j in 0..m {
                out.push(f(i as f64 / m as f64, j as f64 / m as f64));
            }
        }
        out
    }

    /// Direct O(M^4) DFT used as the transform oracle.
    fn dft_oracle(m: usize, samples: &[f64]) -> Vec<Complex64> {
        let mut coeffs = vec![Complex64::default(); m * m];
        for i in 0..m {
            for j in 0..m {
                let k1 = freq_at(m, i);
                let k2 = freq_at(m, j);
                let mut acc = Complex64::default();
                for a in 0..m {
                    for b in 0..m {
                        let phase = -2.0 * std::f64::consts::PI
                            * (k1 as f64 * a as f64 + k2 as f64 * b as f64)
                            / m as f64;
                        acc += samples[a * m + b] * Complex64::new(phase.cos(), phase.sin());
                    }
                }
                coeffs[i * m + j] = acc / (m * m) as f64;
            }
        }
        coeffs
    }

    fn seeded_field(m: usize, nmodes: usize, max_k: i64, seed: u64, amp: f64) -> SpectralField {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha12Rng::seed_from_u64(seed);
        let mut f = SpectralField::zeros(m).unwrap();
        let mut placed = 0;
        while placed < nmodes {
            let k = Wavevector::new(
                rng.random_range(-max_k..=max_k),
                rng.random_range(-max_k..=max_k),
            );
            if k.is_zero() {
                continue;
            }
            let c = Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)) * amp;
            f.add_mode_pair(k, c);
            placed += 1;
        }
        f
    }

    #[test]
    fn zero_field_transforms_to_zero() {
        let f = SpectralField::from_physical(8, &vec![0.0; 64]).unwrap();
        assert!(f.coeffs.iter().all(|c| c.norm() == 0.0));
    }

    #[test]
    fn cosine_has_half_amplitude_pair() {
        let m = 8;
        let samples = grid_samples(m, |x1, _| (2.0 * std::f64::consts::PI * x1).cos());
        let f = SpectralField::from_physical(m, &samples).unwrap();
        let k = Wavevector::new(1, 0);
        assert!((f.mode(k) - Complex64::new(0.5, 0.0)).norm() < 1e-14);
        assert!((f.mode(-k) - Complex64::new(0.5, 0.0)).norm() < 1e-14);
        let rest: f64 = wavevectors(m)
            .filter(|&q| q != k && q != -k)
            .map(|q| f.mode(q).norm())
            .sum();
        assert!(rest < 1e-13);
    }

    #[test]
    fn transform_matches_direct_dft_on_8x8() {
        use rand::{Rng, SeedableRng};
        let m = 8;
        let mut rng = rand_chacha::ChaCha12Rng::seed_from_u64(42);
        let samples: Vec<f64> = (0..m * m).map(|_| rng.random_range(-1.0..1.0)).collect();
        let f = SpectralField::from_physical(m, &samples).unwrap();
        let oracle = dft_oracle(m, &samples);
        for k in wavevectors(m) {
            let idx = index_of(m, k);
            assert!(
                (f.coeffs[idx] - oracle[idx]).norm() < 1e-13,
                "mismatch at {k:?}"
            );
        }
    }

    #[test]
    fn round_trip_is_identity_on_all_grids() {
        use rand::{Rng, SeedableRng};
        for &m in &[8usize, 16, 32, 64, 128] {
            let mut rng = rand_chacha::ChaCha12Rng::seed_from_u64(m as u64);
            let raw: Vec<f64> = (0..m * m).map(|_| rng.random_range(-1.0..1.0)).collect();
            // Project once so the reference itself satisfies the invariants.
            let projected = SpectralField::from_physical(m, &raw).unwrap().to_physical();
            let back = SpectralField::from_physical(m, &projected)
                .unwrap()
                .to_physical();
            let scale = projected.iter().map(|v| v.abs()).fold(0.0f64, f64::max);
            for (a, b) in projected.iter().zip(&back) {
                assert!((a - b).abs() <= 1e-13 * scale.max(1.0));
            }
        }
    }

    #[test]
    fn non_finite_samples_rejected() {
        let mut samples = vec![0.0; 64];
        samples[17] = f64::NAN;
        match SpectralField::from_physical(8, &samples) {
            Err(SpectralError::NonFinite(17)) => {}
            other => panic!("expected NonFinite(17), got {other:?}"),
        }
    }

    #[test]
    fn odd_or_tiny_grids_rejected() {
        assert!(SpectralField::zeros(7).is_err());
        assert!(SpectralField::zeros(2).is_err());
    }

    #[test]
    fn laplacian_eigenvalue_on_unit_mode() {
        let mut f = SpectralField::zeros(8).unwrap();
        f.set_mode_pair(Wavevector::new(1, 0), Complex64::new(0.5, 0.0));
        let lap = f.laplacian();
        let expect = -4.0 * std::f64::consts::PI.powi(2) * 0.5;
        assert!((lap.mode(Wavevector::new(1, 0)).re - expect).abs() < 1e-12);
    }

    #[test]
    fn partial_of_cosine_is_minus_sine() {
        let m = 32;
        let samples = grid_samples(m, |x1, _| (2.0 * std::f64::consts::PI * x1).cos());
        let f = SpectralField::from_physical(m, &samples).unwrap();
        let d = f.partial(1).to_physical();
        for i in 0..m {
            for j in 0..m {
                let x1 = i as f64 / m as f64;
                let expect = -2.0 * std::f64::consts::PI * (2.0 * std::f64::consts::PI * x1).sin();
                assert!((d[i * m + j] - expect).abs() < 1e-10);
            }
        }
    }

    #[test]
    fn grad_perp_matches_finite_differences() {
        // 4th-order centered differences on the 128^2 grid as an independent
        // derivative oracle for a random low-mode field.
        let m = 128;
        let f = seeded_field(m, 6, 3, 7, 1e-3);
        let phys = f.to_physical();
        let gp = f.grad_perp();
        let (g1, g2) = (gp.u1.to_physical(), gp.u2.to_physical());
        let h = 1.0 / m as f64;
        let at = |i: i64, j: i64| phys[(i.rem_euclid(m as i64) as usize) * m + j.rem_euclid(m as i64) as usize];
        let mut worst: f64 = 0.0;
        for i in 0..m as i64 {
            for j in 0..m as i64 {
                let d2 = (-at(i, j + 2) + 8.0 * at(i, j + 1) - 8.0 * at(i, j - 1) + at(i, j - 2))
                    / (12.0 * h);
                let d1 = (-at(i + 2, j) + 8.0 * at(i + 1, j) - 8.0 * at(i - 1, j) + at(i - 2, j))
                    / (12.0 * h);
                let idx = i as usize * m + j as usize;
                worst = worst.max((g1[idx] - d2).abs()).max((g2[idx] + d1).abs());
            }
        }
        // h^4/30 * max|f^(5)| with modes up to |k|=3 and amplitudes <= 1e-3 each.
        let bound = (1.0f64 / 128.0).powi(4) / 30.0
            * 12.0
            * 2e-3
            * (2.0 * std::f64::consts::PI * 3.0 * 2f64.sqrt()).powi(5);
        assert!(worst < bound, "worst {worst:.3e} vs bound {bound:.3e}");
    }

    #[test]
    fn biot_savart_of_zero_is_zero() {
        let f = SpectralField::zeros(16).unwrap();
        let u = f.biot_savart();
        assert_eq!(u.l2_norm_sq(), 0.0);
    }

    #[test]
    fn biot_savart_of_cosine_is_shear() {
        // xi = cos(2 pi x1)  =>  u = (0, sin(2 pi x1) / (2 pi)).
        let m = 16;
        let samples = grid_samples(m, |x1, _| (2.0 * std::f64::consts::PI * x1).cos());
        let xi = SpectralField::from_physical(m, &samples).unwrap();
        let u = xi.biot_savart();
        assert!(u.u1.l2_norm() < 1e-14);
        let u2 = u.u2.to_physical();
        for i in 0..m {
            let x1 = i as f64 / m as f64;
            let expect = (2.0 * std::f64::consts::PI * x1).sin() / (2.0 * std::f64::consts::PI);
            assert!((u2[i * m] - expect).abs() < 1e-13);
        }
        let ratio = u.l2_norm_sq().sqrt() / xi.l2_norm();
        assert!((ratio - 1.0 / (2.0 * std::f64::consts::PI)).abs() < 1e-12);
    }

    #[test]
    fn curl_of_biot_savart_is_identity() {
        let m = 64;
        let xi = seeded_field(m, 10, 5, 3, 1.0);
        let u = xi.biot_savart();
        let div_scale = u.l2_norm_sq().sqrt() * 6.0;
        assert!(u.max_divergence() <= 1e-14 * div_scale.max(1.0));
        let back = u.curl();
        let err = SobolevWeights::new(m, 0.0).norm_of_difference(&back, &xi);
        assert!(err < 1e-12 * xi.l2_norm().max(1.0));
    }

    #[test]
    fn sobolev_norm_is_l2_on_unit_shell() {
        let mut f = SpectralField::zeros(16).unwrap();
        f.set_mode_pair(Wavevector::new(1, 0), Complex64::new(0.5, 0.0));
        for &s in &[-2.0, -1.0, 0.0, 0.5, 3.0] {
            assert!((f.sobolev_norm(s) - f.l2_norm()).abs() < 1e-14);
        }
    }

    #[test]
    fn negative_norm_hand_value() {
        // f = cos(2 pi * 2 x2): |k| = 2, so H^{-1} energy is L^2 energy / 4.
        let m = 16;
        let samples = grid_samples(m, |_, x2| (4.0 * std::f64::consts::PI * x2).cos());
        let f = SpectralField::from_physical(m, &samples).unwrap();
        let h = f.sobolev_norm(-1.0);
        let l2 = f.l2_norm();
        assert!((h * h - l2 * l2 / 4.0).abs() < 1e-13);
    }

    #[test]
    fn advect_zero_velocity_gives_zero() {
        let m = 16;
        let xi = seeded_field(m, 4, 3, 11, 1.0);
        let u = VelocityField::zeros(m).unwrap();
        let adv = advect(&u, &xi, true).unwrap();
        assert!(adv.l2_norm() < 1e-15);
    }

    #[test]
    fn shear_mode_self_advection_vanishes() {
        // u1 = 0 and d2(xi) = 0 for xi = cos(2 pi x1), so u.grad(xi) = 0.
        let m = 32;
        let samples = grid_samples(m, |x1, _| (2.0 * std::f64::consts::PI * x1).cos());
        let xi = SpectralField::from_physical(m, &samples).unwrap();
        let u = xi.biot_savart();
        let adv = advect(&u, &xi, true).unwrap();
        assert!(adv.l2_norm() < 1e-14);
    }

    #[test]
    fn advect_rejects_grid_mismatch() {
        let xi = SpectralField::zeros(16).unwrap();
        let u = VelocityField::zeros(32).unwrap();
        assert!(matches!(
            advect(&u, &xi, true),
            Err(SpectralError::GridMismatch(32, 16))
        ));
    }

    #[test]
    fn transport_is_energy_neutral() {
        let m = 64;
        let xi = seeded_field(m, 12, 6, 5, 1.0);
        let stream = seeded_field(m, 8, 4, 9, 1.0);
        let u = stream.biot_savart();
        let adv = advect(&u, &xi, true).unwrap();
        let pairing = adv.l2_inner(&xi);
        assert!(
            pairing.abs() < 1e-10 * xi.l2_norm().powi(2).max(1.0),
            "pairing {pairing:.3e}"
        );
    }

    #[test]
    fn snapshot_round_trip_and_layout() {
        let f = seeded_field(8, 3, 2, 21, 1.0);
        let mut bytes = Vec::new();
        f.write_snapshot(&mut bytes);
        assert_eq!(bytes.len(), 8 + 16 * 64);
        assert_eq!(u64::from_le_bytes(bytes[..8].try_into().unwrap()), 8);
        let back = SpectralField::read_snapshot(&bytes).unwrap();
        assert_eq!(f, back);
        assert!(SpectralField::read_snapshot(&bytes[..40]).is_err());
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]

        #[test]
        fn prop_round_trip(seed in 0u64..1u64 << 48) {
            let m = 16;
            let f = seeded_field(m, 5, 4, seed, 1.0);
            let back = SpectralField::from_physical(m, &f.to_physical()).unwrap();
            let err = SobolevWeights::new(m, 0.0).norm_of_difference(&f, &back);
            prop_assert!(err <= 1e-13 * f.l2_norm().max(1.0));
        }

        #[test]
        fn prop_interpolation_inequality(seed in 0u64..1u64 << 48, s1 in -2.0f64..0.5, span in 0.1f64..2.0, alpha in 0.05f64..0.95) {
            let f = seeded_field(16, 6, 5, seed, 1.0);
            let s2 = s1 + span;
            let s = alpha * s1 + (1.0 - alpha) * s2;
            let lhs = f.sobolev_norm(s);
            let rhs = f.sobolev_norm(s1).powf(alpha) * f.sobolev_norm(s2).powf(1.0 - alpha);
            prop_assert!(lhs <= rhs * (1.0 + 1e-12));
        }

        #[test]
        fn prop_norm_monotone_in_order(seed in 0u64..1u64 << 48, s in -2.0f64..2.0, ds in 0.0f64..1.5) {
            let f = seeded_field(16, 6, 5, seed, 1.0);
            prop_assert!(f.sobolev_norm(s) <= f.sobolev_norm(s + ds) * (1.0 + 1e-12));
        }
    }
}
