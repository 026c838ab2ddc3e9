//! Spin coherent states. Basis index p = 0..=2j labels |j, j - p>.

use crate::numeric::{cis, ln_binomial, C64, I};

/// Spinor (cos(theta/2), sin(theta/2) e^{i phi}) of a Bloch-sphere point.
pub fn spinor(theta: f64, phi: f64) -> (C64, C64) {
    let (s, c) = (0.5 * theta).sin_cos();
    (C64::new(c, 0.0), cis(phi) * s)
}

/// Coefficients sqrt(C(2j,p)) cos^{2j-p}(theta/2) sin^p(theta/2) e^{i p phi}.
///
/// Written in half angles the expansion has no chart singularity; the south pole
/// is e^{2ij phi} |j,-j>.
pub fn coefficients(two_j: u32, theta: f64, phi: f64) -> Vec<C64> {
    let (s, c) = (0.5 * theta).sin_cos();
    (0..=two_j)
        .map(|p| {
            let mag = binomial_sqrt(two_j, p) * c.powi((two_j - p) as i32) * s.powi(p as i32);
            cis(p as f64 * phi) * mag
        })
        .collect()
}

fn binomial_sqrt(two_j: u32, p: u32) -> f64 {
    (0.5 * ln_binomial(two_j, p)).exp()
}

/// <a|b> = (cos(ta/2)cos(tb/2) + sin(ta/2)sin(tb/2) e^{i(pb - pa)})^{2j}.
pub fn kernel(two_j: u32, a: (f64, f64), b: (f64, f64)) -> C64 {
    let (sa, ca) = (0.5 * a.0).sin_cos();
    let (sb, cb) = (0.5 * b.0).sin_cos();
    let base = C64::new(ca * cb, 0.0) + cis(b.1 - a.1) * (sa * sb);
    base.powu(two_j)
}

/// Unit vector of the Bloch-sphere point.
pub fn unit_vector(theta: f64, phi: f64) -> [f64; 3] {
    let (st, ct) = theta.sin_cos();
    let (sp, cp) = phi.sin_cos();
    [st * cp, st * sp, ct]
}

/// exp(-i chi n.sigma/2) as a 2x2 matrix, row major.
pub fn spin_half_rotation(axis: [f64; 3], chi: f64) -> [[C64; 2]; 2] {
    let (s, c) = (0.5 * chi).sin_cos();
    let [nx, ny, nz] = axis;
    let one = C64::new(c, 0.0);
    [
        [one - I * (s * nz), -I * s * nx - s * ny],
        [-I * s * nx + s * ny, one + I * (s * nz)],
    ]
}

/// Rotates a Bloch point; returns (theta', phi', phase) with
/// exp(-i chi n.J)|theta,phi> = e^{i phase}|theta',phi'>.
pub fn rotate(two_j: u32, axis: [f64; 3], chi: f64, theta: f64, phi: f64) -> (f64, f64, f64) {
    let u = spin_half_rotation(axis, chi);
    let (a, b) = spinor(theta, phi);
    let a2 = u[0][0] * a + u[0][1] * b;
    let b2 = u[1][0] * a + u[1][1] * b;
    let theta2 = 2.0 * b2.norm().atan2(a2.norm());
    let (gamma, phi2) = if a2.norm() == 0.0 {
        (b2.arg(), 0.0)
    } else if b2.norm() == 0.0 {
        (a2.arg(), 0.0)
    } else {
        (a2.arg(), b2.arg() - a2.arg())
    };
    (theta2, phi2, two_j as f64 * gamma)
}
