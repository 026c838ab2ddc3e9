//! Oscillator coherent states in the number basis.

use crate::numeric::{cis, C64};
use std::f64::consts::{FRAC_1_SQRT_2, PI, SQRT_2};

/// Complex label z = (q s + i p / s) / sqrt 2; `s = 1` is the ordinary oscillator.
pub fn z_of(q: f64, p: f64, s: f64) -> C64 {
    C64::new(q * s, p / s) * FRAC_1_SQRT_2
}

/// Inverse of [`z_of`].
pub fn qp_of(z: C64, s: f64) -> (f64, f64) {
    (SQRT_2 * z.re / s, SQRT_2 * z.im * s)
}

/// Number-basis coefficients e^{-|z|^2/2} z^n / sqrt(n!) for n < len, in log space.
pub fn coefficients(z: C64, len: usize) -> Vec<C64> {
    let mut out = vec![C64::new(0.0, 0.0); len];
    if len == 0 {
        return out;
    }
    let r = z.norm();
    if r == 0.0 {
        out[0] = C64::new(1.0, 0.0);
        return out;
    }
    let unit = z / r;
    let ln_r = r.ln();
    let mut ln_mag = -0.5 * r * r;
    let mut phase = C64::new(1.0, 0.0);
    for (n, c) in out.iter_mut().enumerate() {
        if n > 0 {
            ln_mag += ln_r - 0.5 * (n as f64).ln();
            phase *= unit;
        }
        *c = phase * ln_mag.exp();
    }
    out
}

/// <za|zb> = exp(-|za|^2/2 - |zb|^2/2 + conj(za) zb).
pub fn kernel(za: C64, zb: C64) -> C64 {
    (-0.5 * za.norm_sqr() - 0.5 * zb.norm_sqr() + za.conj() * zb).exp()
}

/// <q'|q,p> for the position eigenbasis.
pub fn position_overlap(q_prime: f64, q: f64, p: f64) -> C64 {
    let d = q_prime - q;
    C64::new(-0.5 * d * d, p * (q_prime - 0.5 * q)).exp() * PI.powf(-0.25)
}

/// Hermite functions psi_n(x) for n < len, by the normalised three-term recurrence.
pub fn hermite_functions(x: f64, len: usize) -> Vec<f64> {
    let mut out = vec![0.0; len];
    if len == 0 {
        return out;
    }
    out[0] = PI.powf(-0.25) * (-0.5 * x * x).exp();
    if len > 1 {
        out[1] = SQRT_2 * x * out[0];
    }
    for n in 1..len.saturating_sub(1) {
        let nf = n as f64;
        out[n + 1] = (2.0 / (nf + 1.0)).sqrt() * x * out[n] - (nf / (nf + 1.0)).sqrt() * out[n - 1];
    }
    out
}

/// Position-space wavefunction of a number-basis vector.
pub fn wavefunction(coeffs: &[C64], x: f64) -> C64 {
    hermite_functions(x, coeffs.len())
        .iter()
        .zip(coeffs)
        .map(|(h, c)| c * h)
        .sum()
}

/// exp(-i chi n) |z> = |z e^{-i chi}>; no phase.
pub fn rotate(z: C64, chi: f64) -> C64 {
    z * cis(-chi)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numeric::{inner, norm};

    #[test]
    fn vacuum_coefficients() {
        let v = coefficients(C64::new(0.0, 0.0), 5);
        assert_eq!(v[0], C64::new(1.0, 0.0));
        assert!(v[1..].iter().all(|c| c.norm() == 0.0));
    }

    #[test]
    fn vacuum_overlap_at_unit_z() {
        let k = kernel(C64::new(0.0, 0.0), C64::new(1.0, 0.0));
        assert!((k.re - 0.606_530_659_712_633_4).abs() < 1e-15);
        assert_eq!(k.im, 0.0);
    }

    #[test]
    fn kernel_matches_series() {
        let a = C64::new(0.4, -1.1);
        let b = C64::new(-0.7, 0.3);
        let s = inner(&coefficients(a, 80), &coefficients(b, 80));
        assert!((s - kernel(a, b)).norm() < 1e-14);
        assert!((norm(&coefficients(a, 80)) - 1.0).abs() < 1e-14);
    }

    #[test]
    fn large_amplitude_does_not_underflow_to_nan() {
        let v = coefficients(C64::new(30.0, 5.0), 2000);
        assert!(v.iter().all(|c| c.re.is_finite() && c.im.is_finite()));
        assert!((norm(&v) - 1.0).abs() < 1e-10);
    }

    #[test]
    fn position_overlap_examples() {
        let peak = PI.powf(-0.25);
        assert!((position_overlap(0.8, 0.8, 0.0).norm() - peak).abs() < 1e-15);
        assert!((position_overlap(0.0, 0.0, 2.0).norm() - peak).abs() < 1e-15);
    }

    #[test]
    fn position_overlap_is_normalised() {
        // trapezoid over a wide grid; the integrand is Gaussian
        let (q, p) = (0.6, -1.7);
        let h = 1e-3;
        let total: f64 = (-12_000..=12_000)
            .map(|i| position_overlap(q + i as f64 * h, q, p).norm_sqr() * h)
            .sum();
        assert!((total - 1.0).abs() < 1e-12);
    }

    #[test]
    fn hermite_expansion_reproduces_position_overlap() {
        let (q, p) = (0.9, 0.4);
        let z = z_of(q, p, 1.0);
        let c = coefficients(z, 60);
        for &x in &[-1.5, 0.0, 0.3, 2.2] {
            let w = wavefunction(&c, x);
            assert!((w - position_overlap(x, q, p)).norm() < 1e-12);
        }
    }

    #[test]
    fn scaled_chart_round_trip() {
        let (q, p) = qp_of(z_of(1.3, -0.2, 0.7), 0.7);
        assert!((q - 1.3).abs() < 1e-15 && (p + 0.2).abs() < 1e-15);
    }
}
