//! Pancharatnam, dynamical and geometric phases of sampled curves of states.
//!
//! The dynamical phase is the trapezoid quadrature of Im<psi|psi'>/<psi|psi>
//! with second-order finite differences. It is evaluated on the horizontal lift
//! of the curve and the lift's own accumulated phase is added back, which makes
//! the result covariant under arbitrary per-sample phase changes: the geometric
//! phase then depends on the sampled rays only.

use crate::cs::{Manifold, PhasePoint, StateVector};
use crate::error::{Error, Result};
use crate::numeric::{cis, wrap_angle, C64};
use serde::Serialize;
use std::f64::consts::PI;

const ORTHOGONAL: f64 = 1e-12;

/// Ordered samples (chi_i, psi_i) of a curve in Hilbert space.
#[derive(Debug, Clone)]
pub struct StateCurve {
    chi: Vec<f64>,
    states: Vec<StateVector>,
    closed: bool,
}

impl StateCurve {
    pub fn new(samples: Vec<(f64, StateVector)>, closed: bool) -> Result<Self> {
        if samples.len() < 2 {
            return Err(Error::TooFewSamples {
                needed: 2,
                got: samples.len(),
            });
        }
        let (chi, states): (Vec<f64>, Vec<StateVector>) = samples.into_iter().unzip();
        for i in 1..chi.len() {
            if !(chi[i] > chi[i - 1]) {
                return Err(Error::NonIncreasingParameter(i));
            }
            if states[i].len() != states[0].len() {
                return Err(Error::DimensionMismatch(states[0].len(), states[i].len()));
            }
        }
        if closed {
            let (a, b) = (&states[0], &states[states.len() - 1]);
            let f = a.inner(b)?.norm() / (a.norm() * b.norm());
            if !(f >= 1.0 - 1e-8) {
                return Err(Error::CurveNotClosed(f));
            }
        }
        Ok(StateCurve {
            chi,
            states,
            closed,
        })
    }

    pub fn open(samples: Vec<(f64, StateVector)>) -> Result<Self> {
        Self::new(samples, false)
    }

    pub fn closed(samples: Vec<(f64, StateVector)>) -> Result<Self> {
        Self::new(samples, true)
    }

    pub fn len(&self) -> usize {
        self.chi.len()
    }

    pub fn is_empty(&self) -> bool {
        self.chi.is_empty()
    }

    pub fn is_closed(&self) -> bool {
        self.closed
    }

    pub fn chi(&self) -> &[f64] {
        &self.chi
    }

    pub fn states(&self) -> &[StateVector] {
        &self.states
    }

    /// Multiplies sample i by e^{i phases[i]}.
    pub fn rephased(&self, phases: &[f64]) -> Self {
        StateCurve {
            chi: self.chi.clone(),
            states: self
                .states
                .iter()
                .zip(phases)
                .map(|(s, &a)| s.scaled(cis(a)))
                .collect(),
            closed: self.closed,
        }
    }
}

/// Phases of a curve, in radians. `geometric` is `pancharatnam - dynamical`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PhaseReport {
    pub pancharatnam: f64,
    pub dynamical: f64,
    pub geometric: f64,
}

fn normalized_overlap(a: &StateVector, b: &StateVector) -> Result<C64> {
    Ok(a.inner(b)? / (a.norm() * b.norm()))
}

/// arg<psi1|psi2> in (-pi, pi].
pub fn pancharatnam_phase(psi1: &StateVector, psi2: &StateVector) -> Result<f64> {
    let o = normalized_overlap(psi1, psi2)?;
    if o.norm() < ORTHOGONAL {
        return Err(Error::OrthogonalStates(o.norm()));
    }
    Ok(wrap_angle(o.arg()))
}

/// Neighbour phases a_n = arg<psi_n|psi_{n+1}>.
fn neighbour_phases(states: &[StateVector]) -> Result<Vec<f64>> {
    states
        .windows(2)
        .enumerate()
        .map(|(i, w)| {
            let o = normalized_overlap(&w[0], &w[1])?;
            if o.norm() < ORTHOGONAL {
                return Err(Error::OrthogonalNeighbors { index: i });
            }
            Ok(o.arg())
        })
        .collect()
}

/// Lift phases phi_0 = 0, phi_{n+1} = phi_n - a_n.
fn lift_phases(states: &[StateVector]) -> Result<Vec<f64>> {
    let a = neighbour_phases(states)?;
    let mut phi = Vec::with_capacity(states.len());
    phi.push(0.0);
    for x in a {
        let last = *phi.last().expect("non-empty");
        phi.push(last - x);
    }
    Ok(phi)
}

/// Rephases every sample so that neighbours are in phase, keeping the first sample.
pub fn horizontal_lift(curve: &StateCurve) -> Result<StateCurve> {
    let phi = lift_phases(&curve.states)?;
    Ok(curve.rephased(&phi))
}

/// Trapezoid quadrature of Im<psi|psi'>/|psi|^2 with non-uniform three-point
/// differences (centred inside, one-sided at the ends).
fn derivative_quadrature(chi: &[f64], states: &[StateVector]) -> Result<f64> {
    let n = chi.len();
    let ip = |i: usize, j: usize| -> Result<f64> { Ok(states[i].inner(&states[j])?.im) };
    let mut integrand = Vec::with_capacity(n);
    for i in 0..n {
        let own = states[i].norm().powi(2);
        let d = if i == 0 {
            let (h1, h2) = (chi[1] - chi[0], chi[2] - chi[1]);
            (h1 + h2) / (h1 * h2) * ip(0, 1)? - h1 / (h2 * (h1 + h2)) * ip(0, 2)?
        } else if i == n - 1 {
            let (h1, h2) = (chi[n - 2] - chi[n - 3], chi[n - 1] - chi[n - 2]);
            -(h1 + h2) / (h1 * h2) * ip(n - 1, n - 2)? + h2 / (h1 * (h1 + h2)) * ip(n - 1, n - 3)?
        } else {
            let (h1, h2) = (chi[i] - chi[i - 1], chi[i + 1] - chi[i]);
            -h2 / (h1 * (h1 + h2)) * ip(i, i - 1)? + h1 / (h2 * (h1 + h2)) * ip(i, i + 1)?
        };
        // the diagonal stencil weight multiplies Im<psi|psi> = 0
        integrand.push(d / own);
    }
    Ok(chi
        .windows(2)
        .zip(integrand.windows(2))
        .map(|(x, f)| 0.5 * (x[1] - x[0]) * (f[0] + f[1]))
        .sum())
}

fn require_samples(curve: &StateCurve) -> Result<()> {
    if curve.len() < 5 {
        return Err(Error::TooFewSamples {
            needed: 5,
            got: curve.len(),
        });
    }
    Ok(())
}

/// Dynamical phase -i int <psi|dpsi/dchi> dchi of the sampled curve.
pub fn dynamical_phase(curve: &StateCurve) -> Result<f64> {
    require_samples(curve)?;
    let phi = lift_phases(&curve.states)?;
    let lifted = curve.rephased(&phi);
    let accumulated = -phi[phi.len() - 1];
    Ok(derivative_quadrature(&lifted.chi, &lifted.states)? + accumulated)
}

/// Pancharatnam, dynamical and geometric phase, with the unwrapped phase of the
/// first sample used to count windings.
pub fn geometric_phase(curve: &StateCurve) -> Result<PhaseReport> {
    geometric_phase_impl(curve, None)
}

/// As [`geometric_phase`] but counting windings of arg<reference|psi(chi)>.
///
/// Useful when the first sample becomes orthogonal to later ones, e.g. on a
/// great circle of a spin-1 sphere.
pub fn geometric_phase_with_reference(
    curve: &StateCurve,
    reference: &StateVector,
) -> Result<PhaseReport> {
    geometric_phase_impl(curve, Some(reference))
}

fn geometric_phase_impl(
    curve: &StateCurve,
    reference: Option<&StateVector>,
) -> Result<PhaseReport> {
    require_samples(curve)?;
    let phi = lift_phases(&curve.states)?;
    let lifted = curve.rephased(&phi);
    let accumulated = -phi[phi.len() - 1];
    let states = &lifted.states;
    let first = &states[0];
    let last = &states[states.len() - 1];

    let reference = reference.unwrap_or(first);
    let mut unwrapped = 0.0;
    let mut prev = None;
    for s in states {
        let o = normalized_overlap(reference, s)?;
        if o.norm() < ORTHOGONAL {
            return Err(Error::OrthogonalStates(o.norm()));
        }
        if let Some(p) = prev {
            unwrapped += wrap_angle(o.arg() - p);
        }
        prev = Some(o.arg());
    }
    let base = pancharatnam_phase(first, last)?;
    let lifted_total = base + 2.0 * PI * ((unwrapped - base) / (2.0 * PI)).round();

    let lifted_dynamical = derivative_quadrature(&lifted.chi, states)?;
    let pancharatnam = lifted_total + accumulated;
    let dynamical = lifted_dynamical + accumulated;
    Ok(PhaseReport {
        pancharatnam,
        dynamical,
        geometric: pancharatnam - dynamical,
    })
}

/// arg(<a|b><b|c><c|a>) in (-pi, pi].
pub fn bargmann_triangle(a: &StateVector, b: &StateVector, c: &StateVector) -> Result<f64> {
    let ab = a.inner(b)?;
    let bc = b.inner(c)?;
    let ca = c.inner(a)?;
    let scale = |x: C64, u: &StateVector, v: &StateVector| x.norm() / (u.norm() * v.norm());
    if scale(ab, a, b) < ORTHOGONAL || scale(bc, b, c) < ORTHOGONAL || scale(ca, c, a) < ORTHOGONAL
    {
        return Err(Error::OrthogonalPair);
    }
    Ok(wrap_angle((ab * bc * ca).arg()))
}

/// Signed area of a closed polyline (last point equal to the first), positive
/// anticlockwise: the (q, p) area on the plane, the solid angle on the sphere and
/// the hyperbolic area on the disk.
pub fn symplectic_area(points: &[PhasePoint], manifold: Manifold) -> Result<f64> {
    if points.len() < 4 {
        return Err(Error::TooFewSamples {
            needed: 4,
            got: points.len(),
        });
    }
    if let Some(p) = points.iter().find(|p| p.manifold() != manifold) {
        return Err(Error::ManifoldMismatch {
            expected: manifold.name(),
            found: p.manifold().name(),
        });
    }
    let gap = points[0]
        .distance(&points[points.len() - 1])
        .ok_or(Error::OpenPolyline)?;
    if gap > 1e-9 {
        return Err(Error::OpenPolyline);
    }
    let sum: f64 = match manifold {
        Manifold::Plane => points
            .windows(2)
            .map(|w| {
                let (q0, p0) = w[0].as_plane().expect("plane");
                let (q1, p1) = w[1].as_plane().expect("plane");
                0.5 * (q0 * p1 - q1 * p0)
            })
            .sum(),
        Manifold::Sphere => points
            .windows(2)
            .map(|w| {
                let (a, b) = (
                    w[0].as_sphere().expect("sphere"),
                    w[1].as_sphere().expect("sphere"),
                );
                let mid = 0.5 * (a.theta() + b.theta());
                (1.0 - mid.cos()) * wrap_angle(b.phi() - a.phi())
            })
            .sum(),
        Manifold::Disk => points
            .windows(2)
            .map(|w| {
                let (a, b) = (w[0].as_disk().expect("disk"), w[1].as_disk().expect("disk"));
                let mid = 0.5 * (a.tau() + b.tau());
                let dphi = if a.zeta().norm() == 0.0 || b.zeta().norm() == 0.0 {
                    0.0
                } else {
                    wrap_angle(b.zeta().arg() - a.zeta().arg())
                };
                (mid.cosh() - 1.0) * dphi
            })
            .sum(),
        Manifold::TwoModePlane => {
            return Err(Error::Unsupported(
                "area of a curve in the two-mode plane".into(),
            ));
        }
    };
    Ok(sum)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cs::{cs_projection, group_action, CsSystem, Generator};
    use crate::numeric::linspace;
    use std::f64::consts::{FRAC_PI_3, SQRT_2};

    fn h4_state(sys: &CsSystem, q: f64, p: f64) -> StateVector {
        cs_projection(sys, &PhasePoint::plane(q, p)).unwrap()
    }

    #[test]
    fn pancharatnam_examples() {
        let sys = CsSystem::h4(60).unwrap();
        let a = h4_state(&sys, 0.3, -0.2);
        assert_eq!(pancharatnam_phase(&a, &a).unwrap(), 0.0);
        let b = a.scaled(cis(0.4));
        assert!((pancharatnam_phase(&a, &b).unwrap() - 0.4).abs() < 1e-15);
        // z1 = 0, z2 = 1 + i
        let z0 = h4_state(&sys, 0.0, 0.0);
        let z = h4_state(&sys, SQRT_2, SQRT_2);
        assert!(pancharatnam_phase(&z0, &z).unwrap().abs() < 1e-15);
        // z1 = 1, z2 = i: Im(conj(1) i) = 1
        let one = h4_state(&sys, SQRT_2, 0.0);
        let i = h4_state(&sys, 0.0, SQRT_2);
        assert!((pancharatnam_phase(&one, &i).unwrap() - 1.0).abs() < 1e-14);
    }

    #[test]
    fn orthogonal_states_rejected() {
        let sys = CsSystem::su2(2).unwrap();
        let n = cs_projection(&sys, &PhasePoint::sphere(0.0, 0.0).unwrap()).unwrap();
        let s = cs_projection(&sys, &PhasePoint::sphere(PI, 0.0).unwrap()).unwrap();
        assert!(matches!(
            pancharatnam_phase(&n, &s),
            Err(Error::OrthogonalStates(_))
        ));
    }

    fn number_orbit(sys: &CsSystem, t0: f64, r0: f64, lo: f64, hi: f64, n: usize) -> StateCurve {
        let seed = PhasePoint::plane(r0, 0.0);
        let samples = linspace(lo, hi, n)
            .into_iter()
            .map(|chi| {
                let (p, ph) = group_action(sys, &Generator::N, chi, &seed).unwrap();
                (
                    chi,
                    cs_projection(sys, &p).unwrap().scaled(cis(ph + t0 * chi)),
                )
            })
            .collect();
        StateCurve::open(samples).unwrap()
    }

    #[test]
    fn dynamical_phase_along_orbit() {
        let sys = CsSystem::h4(64).unwrap();
        // |z0|^2 = 2 <=> r0 = 2; expected (3 - 2) * 2 pi
        let err = |n| {
            dynamical_phase(&number_orbit(&sys, 3.0, 2.0, 0.0, 2.0 * PI, n)).unwrap() - 2.0 * PI
        };
        let (e1, e2) = (err(401), err(801));
        assert!(e2.abs() < 2e-4);
        assert!((e1 / e2 - 4.0).abs() < 0.1, "{e1} {e2}");
    }

    #[test]
    fn dynamical_phase_is_translation_invariant() {
        let sys = CsSystem::h4(64).unwrap();
        let a = dynamical_phase(&number_orbit(&sys, 3.0, 2.0, 0.0, 1.7, 101)).unwrap();
        let b = dynamical_phase(&number_orbit(&sys, 3.0, 2.0, 1.0, 2.7, 101)).unwrap();
        assert!((a - b).abs() < 1e-12);
    }

    #[test]
    fn constant_curve_has_no_phase() {
        let sys = CsSystem::h4(32).unwrap();
        let s = h4_state(&sys, 0.5, 0.5);
        let curve = StateCurve::open((0..7).map(|i| (i as f64, s.clone())).collect()).unwrap();
        assert!(dynamical_phase(&curve).unwrap().abs() < 1e-15);
    }

    #[test]
    fn too_few_samples() {
        let sys = CsSystem::h4(8).unwrap();
        let s = h4_state(&sys, 0.5, 0.5);
        let curve = StateCurve::open((0..4).map(|i| (i as f64, s.clone())).collect()).unwrap();
        assert!(matches!(
            dynamical_phase(&curve),
            Err(Error::TooFewSamples { .. })
        ));
    }

    fn circle_curve(sys: &CsSystem, r0: f64, n: usize) -> StateCurve {
        // z = (r0/sqrt2) e^{-i theta}: clockwise in (q, p)
        let samples = linspace(0.0, 2.0 * PI, n + 1)
            .into_iter()
            .map(|t| (t, h4_state(sys, r0 * t.cos(), -r0 * t.sin())))
            .collect();
        StateCurve::closed(samples).unwrap()
    }

    #[test]
    fn clockwise_circle_phase() {
        let sys = CsSystem::h4(64).unwrap();
        let r = geometric_phase(&circle_curve(&sys, 2.0, 1024)).unwrap();
        assert!((r.geometric - 4.0 * PI).abs() < 1e-4);
        assert_eq!(r.geometric, r.pancharatnam - r.dynamical);
    }

    #[test]
    fn latitude_phase() {
        let sys = CsSystem::su2(4).unwrap();
        let samples = linspace(0.0, 2.0 * PI, 1025)
            .into_iter()
            .map(|t| {
                (
                    t,
                    cs_projection(&sys, &PhasePoint::sphere(FRAC_PI_3, t).unwrap()).unwrap(),
                )
            })
            .collect();
        let r = geometric_phase(&StateCurve::closed(samples).unwrap()).unwrap();
        assert!((r.geometric + 2.0 * PI).abs() < 1e-4);
    }

    #[test]
    fn disk_circle_phase() {
        let k = 3.0;
        let tau: f64 = 0.8;
        let sys = CsSystem::su11(k, 120).unwrap();
        let samples = linspace(0.0, 2.0 * PI, 1025)
            .into_iter()
            .map(|t| {
                (
                    t,
                    cs_projection(&sys, &PhasePoint::disk_hyperbolic(tau, t).unwrap()).unwrap(),
                )
            })
            .collect();
        let r = geometric_phase(&StateCurve::closed(samples).unwrap()).unwrap();
        assert!((r.geometric + k * 2.0 * PI * (tau.cosh() - 1.0)).abs() < 1e-4);
    }

    #[test]
    fn lift_properties() {
        let sys = CsSystem::h4(64).unwrap();
        let curve = circle_curve(&sys, 1.5, 400);
        let lifted = horizontal_lift(&curve).unwrap();
        for w in lifted.states().windows(2) {
            assert!(w[0].inner(&w[1]).unwrap().arg().abs() < 1e-10);
        }
        let twice = horizontal_lift(&lifted).unwrap();
        for (a, b) in twice.states().iter().zip(lifted.states()) {
            let d: f64 = a
                .coeffs()
                .iter()
                .zip(b.coeffs())
                .map(|(x, y)| (x - y).norm())
                .sum();
            assert!(d < 1e-12);
        }
        // the lifted end-to-end phase is the geometric phase of the original loop
        let g = geometric_phase(&curve).unwrap().geometric;
        let end = pancharatnam_phase(&lifted.states()[0], &lifted.states()[400]).unwrap();
        assert!(wrap_angle(end - g).abs() < 1e-4);
        assert!(dynamical_phase(&lifted).unwrap().abs() < 1e-4);
    }

    #[test]
    fn horizontal_curve_is_unchanged_by_lift() {
        let sys = CsSystem::h4(32).unwrap();
        // a radial segment is horizontal: <z|z'> > 0 for real z, z'
        let samples = (0..6)
            .map(|i| (i as f64, h4_state(&sys, 0.2 * i as f64, 0.0)))
            .collect();
        let curve = StateCurve::open(samples).unwrap();
        let lifted = horizontal_lift(&curve).unwrap();
        for (a, b) in lifted.states().iter().zip(curve.states()) {
            assert_eq!(a, b);
        }
    }

    #[test]
    fn bargmann_examples() {
        let sys = CsSystem::h4(64).unwrap();
        let line: Vec<_> = [0.0, 0.5, 1.0]
            .iter()
            .map(|&x| h4_state(&sys, SQRT_2 * x, 0.0))
            .collect();
        assert!(
            bargmann_triangle(&line[0], &line[1], &line[2])
                .unwrap()
                .abs()
                < 1e-15
        );
        let a = h4_state(&sys, 0.0, 0.0);
        let b = h4_state(&sys, SQRT_2, 0.0);
        let c = h4_state(&sys, 0.0, SQRT_2);
        let t = bargmann_triangle(&a, &b, &c).unwrap();
        assert!((t - 1.0).abs() < 1e-14);
        assert!((bargmann_triangle(&c, &b, &a).unwrap() + t).abs() < 1e-14);
    }

    #[test]
    fn area_examples() {
        let n = 10_000;
        let circle: Vec<_> = linspace(0.0, 2.0 * PI, n + 1)
            .into_iter()
            .map(|t| PhasePoint::plane(t.cos(), t.sin()))
            .collect();
        assert!((symplectic_area(&circle, Manifold::Plane).unwrap() - PI).abs() < 1e-6);

        let th: f64 = 1.1;
        let lat: Vec<_> = linspace(0.0, 2.0 * PI, n + 1)
            .into_iter()
            .map(|t| PhasePoint::sphere(th, t).unwrap())
            .collect();
        assert!(
            (symplectic_area(&lat, Manifold::Sphere).unwrap() - 2.0 * PI * (1.0 - th.cos())).abs()
                < 1e-9
        );

        let tau: f64 = 1.3;
        let ring: Vec<_> = linspace(0.0, 2.0 * PI, n + 1)
            .into_iter()
            .map(|t| PhasePoint::disk_hyperbolic(tau, t).unwrap())
            .collect();
        assert!(
            (symplectic_area(&ring, Manifold::Disk).unwrap() - 2.0 * PI * (tau.cosh() - 1.0)).abs()
                < 1e-9
        );

        let open = &circle[..n / 2];
        assert!(matches!(
            symplectic_area(open, Manifold::Plane),
            Err(Error::OpenPolyline)
        ));
    }

    #[test]
    fn gauge_changes_split_but_geometric_survives() {
        let sys = CsSystem::h4(64).unwrap();
        let curve = circle_curve(&sys, 1.2, 256);
        let base = geometric_phase(&curve).unwrap();
        let phases: Vec<f64> = (0..curve.len())
            .map(|i| ((i * 7919) % 113) as f64 * 0.37)
            .collect();
        let moved = geometric_phase(&curve.rephased(&phases)).unwrap();
        assert!((moved.geometric - base.geometric).abs() < 1e-10);
        assert!((moved.dynamical - base.dynamical).abs() > 1e-3);
    }
}
