//! Positive discrete series of SU(1,1) on the Poincare disk.

use crate::numeric::{cis, C64};
use std::f64::consts::PI;

/// Coefficients (1-|zeta|^2)^k sqrt(Gamma(2k+m)/(m! Gamma(2k))) zeta^m, m < len.
///
/// `gap` is 1 - |zeta|^2 carried separately so that points close to the rim keep
/// their precision.
pub fn coefficients(k: f64, zeta: C64, gap: f64, len: usize) -> Vec<C64> {
    let mut out = vec![C64::new(0.0, 0.0); len];
    if len == 0 {
        return out;
    }
    let r = zeta.norm();
    let lead = k * gap.ln();
    if r == 0.0 {
        out[0] = C64::new(lead.exp(), 0.0);
        return out;
    }
    let unit = zeta / r;
    let ln_r = r.ln();
    let mut ln_mag = lead;
    let mut phase = C64::new(1.0, 0.0);
    for (m, c) in out.iter_mut().enumerate() {
        if m > 0 {
            let mf = m as f64;
            ln_mag += ln_r + 0.5 * ((2.0 * k + mf - 1.0).ln() - mf.ln());
            phase *= unit;
        }
        *c = phase * ln_mag.exp();
    }
    out
}

/// <a|b> = gap_a^k gap_b^k / (1 - conj(zeta_a) zeta_b)^{2k}, principal branch.
pub fn kernel(k: f64, a: (C64, f64), b: (C64, f64)) -> C64 {
    let w = if a.0 == b.0 {
        C64::new(a.1, 0.0)
    } else {
        C64::new(1.0, 0.0) - a.0.conj() * b.0
    };
    (C64::new(k * (a.1.ln() + b.1.ln()), 0.0) - 2.0 * k * w.ln()).exp()
}

/// Group element exp(-i chi X) for X = a0 K0 + a1 K1 + a2 K2 in the
/// 2x2 realisation K0 = sigma3/2, K1 = i sigma2/2, K2 = -i sigma1/2.
///
/// Returns (alpha, beta) of [[alpha, beta], [conj beta, conj alpha]] together with
/// arg(conj alpha) continued along the one-parameter subgroup from chi = 0.
pub fn exp_generator(coef: [f64; 3], chi: f64) -> (C64, C64, f64) {
    let [a0, a1, a2] = coef;
    let d = a0 * a0 - a1 * a1 - a2 * a2;
    let (c, s) = if d > 0.0 {
        let w = 0.5 * d.sqrt();
        ((w * chi).cos(), (w * chi).sin() / w)
    } else if d < 0.0 {
        let w = 0.5 * (-d).sqrt();
        ((w * chi).cosh(), (w * chi).sinh() / w)
    } else {
        (1.0, chi)
    };
    // exp(-i chi X) = c - i s X with X the 2x2 image
    let alpha = C64::new(c, -0.5 * s * a0);
    let beta = C64::new(-0.5 * s * a2, -0.5 * s * a1);
    let principal = alpha.conj().arg();
    let unwrapped = if d > 0.0 {
        // conj alpha = cos(w chi) + i (a0 / 2w) sin(w chi) winds with w chi
        let w = 0.5 * d.sqrt();
        let turn = (w * chi) * a0.signum();
        principal + 2.0 * PI * ((turn - principal) / (2.0 * PI)).round()
    } else {
        principal
    };
    (alpha, beta, unwrapped)
}

/// Acts with exp(-i chi X) on |zeta>; returns (zeta', gap', phase) such that
/// the image equals e^{i phase} |zeta'> (phase not reduced).
pub fn act(k: f64, coef: [f64; 3], chi: f64, zeta: C64, gap: f64) -> (C64, f64, f64) {
    let (alpha, beta, arg_alpha_bar) = exp_generator(coef, chi);
    let den = beta.conj() * zeta + alpha.conj();
    let zeta2 = (alpha * zeta + beta) / den;
    let gap2 = gap / den.norm_sqr();
    let rel = C64::new(1.0, 0.0) + beta.conj() * zeta / alpha.conj();
    let phase = -2.0 * k * (arg_alpha_bar + rel.arg());
    (zeta2, gap2, phase)
}

/// Disk point tanh(tau/2) e^{i phi} with its gap sech^2(tau/2).
pub fn from_hyperbolic(tau: f64, phi: f64) -> (C64, f64) {
    let c = (0.5 * tau).cosh();
    (cis(phi) * (0.5 * tau).tanh(), 1.0 / (c * c))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numeric::{inner, norm};

    #[test]
    fn kernel_against_series() {
        // independent check of the closed form by summing the basis series
        let k = 3.0;
        let z = C64::new(0.5, 0.0);
        let gap = 1.0 - 0.25;
        let c = coefficients(k, z, gap, 400);
        assert!((norm(&c) - 1.0).abs() < 1e-14);
        assert!((c[0].norm_sqr() - 0.75f64.powi(6)).abs() < 1e-15);
        assert!((0.75f64.powi(6) - 0.177_978_515_625).abs() < 1e-15);
        let a = (C64::new(0.3, -0.6), 1.0 - 0.45);
        let b = (C64::new(-0.2, 0.1), 1.0 - 0.05);
        for &k in &[0.25, 0.75, 3.0] {
            let s = inner(
                &coefficients(k, a.0, a.1, 600),
                &coefficients(k, b.0, b.1, 600),
            );
            assert!((s - kernel(k, a, b)).norm() < 1e-13, "k={k}");
        }
    }

    #[test]
    fn quarter_index_coefficients() {
        let k = 0.25;
        let c = coefficients(k, C64::new(0.3, 0.0), 0.91, 6);
        let mut ratio = 1.0; // Gamma(1/2+m)/(m! Gamma(1/2))
        for (m, cm) in c.iter().enumerate() {
            if m > 0 {
                ratio *= (0.5 + m as f64 - 1.0) / m as f64;
            }
            let expect = 0.91f64.powf(0.25) * ratio.sqrt() * 0.3f64.powi(m as i32);
            assert!((cm.re - expect).abs() < 1e-15);
        }
    }

    #[test]
    fn k2_from_origin() {
        let chi = 1.7;
        let (z, gap, phase) = act(3.0, [0.0, 0.0, 1.0], chi, C64::new(0.0, 0.0), 1.0);
        assert!((z.re + (0.5 * chi).tanh()).abs() < 1e-15 && z.im.abs() < 1e-15);
        assert!((gap - (1.0 - z.norm_sqr())).abs() < 1e-15);
        assert!(phase.abs() < 1e-15);
    }

    #[test]
    fn parabolic_from_origin() {
        let k = 0.75;
        for &chi in &[-3.0, 0.4, 11.0] {
            let (z, _, phase) = act(k, [1.0, 1.0, 0.0], chi, C64::new(0.0, 0.0), 1.0);
            let expect = C64::new(0.0, -chi) / C64::new(2.0, chi);
            assert!((z - expect).norm() < 1e-15);
            // e^{i k phi} with phi = 2 arg(1 - i chi/2)
            let phi = 2.0 * C64::new(1.0, -0.5 * chi).arg();
            assert!((phase - k * phi).abs() < 1e-14);
        }
    }

    #[test]
    fn elliptic_phase_is_unwrapped() {
        // exp(-i chi K0)|zeta> = e^{-i k chi}|zeta e^{-i chi}> for any chi
        let k = 0.25;
        let z = C64::new(0.2, 0.1);
        for &chi in &[0.3, 4.0, 9.5, -7.0] {
            let (z2, _, phase) = act(k, [1.0, 0.0, 0.0], chi, z, 1.0 - z.norm_sqr());
            assert!((z2 - z * cis(-chi)).norm() < 1e-14);
            assert!((phase + k * chi).abs() < 1e-12, "chi={chi}");
        }
    }

    #[test]
    fn far_rim_stays_finite() {
        let (z, gap, _) = act(3.0, [0.0, 0.0, 1.0], 40.0, C64::new(0.0, 0.0), 1.0);
        assert!(z.norm() <= 1.0);
        assert!(gap > 0.0 && gap.is_finite());
        let c = coefficients(3.0, z, gap, 8);
        assert!(c.iter().all(|x| x.re.is_finite()));
    }
}
