//! Brute-force Fourier-space reference for the transport term.

use super::{index_of, wavevectors, SpectralError, SpectralField, VelocityField, Wavevector};
use num_complex::Complex64;

/// Largest grid accepted by the O(M^4) oracle.
pub const ORACLE_GRID_LIMIT: usize = 32;

/// Exact double-sum convolution for `u . grad(xi)`:
/// `(u.grad xi)_hat(k) = sum_q u_hat(k - q) . (2 pi i q) xi_hat(q)`,
/// evaluated with no aliasing for every representable output mode. The
/// pseudo-spectral [`super::advect`] must agree with this on dealiased input.
pub fn convolution_oracle(
    u: &VelocityField,
    xi: &SpectralField,
    ) -> Result<SpectralField, SpectralError> {
    let m = xi.grid_size();
    if u.grid_size() != m {
        return Err(SpectralError::GridMismatch(u.grid_size(), m));
    }
    if m > ORACLE_GRID_LIMIT {
        return Err(SpectralError::GridTooLarge(m, ORACLE_GRID_LIMIT));
    }
    let mut out = SpectralField::zeros(m)?;
    let two_pi = 2.0 * std::f64::consts::PI;
    let half = m as i64 / 2;
    let in_lattice = |k: Wavevector| k.k1.abs() < half && k.k2.abs() < half;
    for k in wavevectors(m) {
        let mut acc = Complex64::default();
        for q in wavevectors(m) {
            let p = Wavevector::new(k.k1 - q.k1, k.k2 - q.k2);
            if !in_lattice(p) || p.is_zero() {
                continue;
            }
            let grad = Complex64::new(0.0, two_pi);
            let xiq = xi.mode(q);
            acc += (u.u1.mode(p) * q.k1 as f64 + u.u2.mode(p) * q.k2 as f64) * grad * xiq;
        }
        out.coeffs_mut()[index_of(m, k)] = acc;
    }
    out.project_truncated();
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectral::advect;

    #[test]
    fn zero_inputs_give_zero() {
        let u = VelocityField::zeros(16).unwrap();
        let xi = SpectralField::zeros(16).unwrap();
        let out = convolution_oracle(&u, &xi).unwrap();
        assert_eq!(out.l2_norm(), 0.0);
    }

    #[test]
    fn grid_limit_enforced() {
        let u = VelocityField::zeros(64).unwrap();
        let xi = SpectralField::zeros(64).unwrap();
        assert!(matches!(
            convolution_oracle(&u, &xi),
            Err(SpectralError::GridTooLarge(64, 32))
        ));
    }

    #[test]
    fn single_mode_pair_lands_on_sum_and_difference_modes() {
        // u carries one mode pair at +-p, xi one at +-q; the product has
        // exactly the four modes +-(p+q), +-(p-q) with hand-computable values.
        let m = 16;
        let p = Wavevector::new(1, 2);
        let q = Wavevector::new(3, -1);
        let zeta = Complex64::new(0.3, -0.7);
        // divergence-free amplitude along p_perp
        let a1 = zeta * p.perp().k1 as f64;
        let a2 = zeta * p.perp().k2 as f64;
        let mut u = VelocityField::zeros(m).unwrap();
        u.u1.set_mode_pair(p, a1);
        u.u2.set_mode_pair(p, a2);
        assert!(u.max_divergence() <= 1e-13);
        let c = Complex64::new(-0.2, 0.5);
        let mut xi = SpectralField::zeros(m).unwrap();
        xi.set_mode_pair(q, c);

        let out = convolution_oracle(&u, &xi).unwrap();
        let two_pi_i = Complex64::new(0.0, 2.0 * std::f64::consts::PI);
        let dot = |b1: Complex64, b2: Complex64, k: Wavevector| {
            (b1 * k.k1 as f64 + b2 * k.k2 as f64) * two_pi_i
        };
        let sum = Wavevector::new(p.k1 + q.k1, p.k2 + q.k2);
        let diff = Wavevector::new(p.k1 - q.k1, p.k2 - q.k2);
        let expect_sum = dot(a1, a2, q) * c;
        // p - q pairs u_hat(p) with xi at -q: u_hat(p).(2 pi i (-q)) conj(c).
        let expect_diff = -dot(a1, a2, q) * c.conj();
        assert!((out.mode(sum) - expect_sum).norm() < 1e-12);
        assert!((out.mode(diff) - expect_diff).norm() < 1e-12);
        let spurious: f64 = crate::spectral::wavevectors(m)
            .filter(|&k| {
                k != sum && k != diff && k != -sum && k != -diff
            })
            .map(|k| out.mode(k).norm())
            .sum();
        assert!(spurious < 1e-12);
    }

    #[test]
    fn oracle_transport_is_exactly_energy_neutral() {
        use rand::{Rng, SeedableRng};
        let m = 16;
        let mut rng = rand_chacha::ChaCha12Rng::seed_from_u64(17);
        let mut stream = SpectralField::zeros(m).unwrap();
        let mut xi = SpectralField::zeros(m).unwrap();
        for _ in 0..5 {
            let k = Wavevector::new(rng.random_range(-3..=3), rng.random_range(-3..=3));
            if k.is_zero() {
                continue;
            }
            stream.add_mode_pair(k, Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)));
            let k2 = Wavevector::new(rng.random_range(-3..=3), rng.random_range(-3..=3));
            if !k2.is_zero() {
                xi.add_mode_pair(k2, Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)));
            }
        }
        let u = stream.biot_savart();
        let out = convolution_oracle(&u, &xi).unwrap();
        assert!(out.l2_inner(&xi).abs() < 1e-12);
    }

    #[test]
    fn pseudo_spectral_advect_matches_oracle() {
        use rand::{Rng, SeedableRng};
        for &m in &[16usize, 32] {
            let mut rng = rand_chacha::ChaCha12Rng::seed_from_u64(m as u64 + 5);
            let mut stream = SpectralField::zeros(m).unwrap();
            let mut xi = SpectralField::zeros(m).unwrap();
            // keep supports well inside the 2/3 ball so the product is
            // representable without aliasing on both routes
            let lim = (m as i64 / 3) / 2;
            for _ in 0..5 {
                let k = Wavevector::new(rng.random_range(-lim..=lim), rng.random_range(-lim..=lim));
                if !k.is_zero() {
                    stream.add_mode_pair(
                        k,
                        Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)),
                    );
                }
                let k = Wavevector::new(rng.random_range(-lim..=lim), rng.random_range(-lim..=lim));
                if !k.is_zero() {
                    xi.add_mode_pair(
                        k,
                        Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)),
                    );
                }
            }
            let u = stream.biot_savart();
            let fast = advect(&u, &xi, true).unwrap();
            let slow = convolution_oracle(&u, &xi).unwrap();
            for k in crate::spectral::wavevectors(m) {
                if k.k1.abs().max(k.k2.abs()) <= super::super::dealias_cutoff(m) {
                    assert!(
                        (fast.mode(k) - slow.mode(k)).norm() < 1e-10,
                        "grid {m}, mode {k:?}"
                    );
                }
            }
        }
    }
}
