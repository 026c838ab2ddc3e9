//! Brute-force references: dense eigensolving, matrix exponentials, the
//! two-source interference identity, geodesics and Richardson extrapolation.

use crate::cs::{
    generator_matrix, overlap_cs, CsSystem, Generator, Manifold, PhasePoint, StateVector,
    SystemKind,
};
use crate::error::{Error, Result};
use crate::numeric::{cis, C64};
use nalgebra::{DMatrix, DVector};
use serde::Serialize;

/// Dense Hermitian matrix with its eigendecomposition.
#[derive(Debug, Clone)]
pub struct DenseHermitian {
    matrix: DMatrix<C64>,
    eigenvalues: Vec<f64>,
    eigenvectors: DMatrix<C64>,
}

const MAX_DENSE: usize = 2048;

impl DenseHermitian {
    pub fn new(matrix: DMatrix<C64>) -> Result<Self> {
        if !matrix.is_square() {
            return Err(Error::DimensionMismatch(matrix.nrows(), matrix.ncols()));
        }
        if matrix.nrows() > MAX_DENSE {
            return Err(Error::InvalidParameter(format!(
                "dense size {} above {MAX_DENSE}",
                matrix.nrows()
            )));
        }
        let asym = (&matrix - matrix.adjoint())
            .iter()
            .map(|c| c.norm())
            .fold(0.0, f64::max);
        if asym > 1e-12 {
            return Err(Error::InvalidParameter(format!(
                "matrix not Hermitian: {asym:e}"
            )));
        }
        let eig = matrix.clone().symmetric_eigen();
        Ok(DenseHermitian {
            matrix,
            eigenvalues: eig.eigenvalues.iter().copied().collect(),
            eigenvectors: eig.eigenvectors,
        })
    }

    pub fn matrix(&self) -> &DMatrix<C64> {
        &self.matrix
    }

    pub fn size(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn eigenvalues(&self) -> &[f64] {
        &self.eigenvalues
    }

    /// Index of the eigenvalue nearest `target`.
    pub fn nearest(&self, target: f64) -> usize {
        (0..self.eigenvalues.len())
            .min_by(|&a, &b| {
                (self.eigenvalues[a] - target)
                    .abs()
                    .total_cmp(&(self.eigenvalues[b] - target).abs())
            })
            .expect("non-empty matrix")
    }

    pub fn eigenvector(&self, i: usize) -> Vec<C64> {
        self.eigenvectors.column(i).iter().copied().collect()
    }

    /// exp(-i chi M).
    pub fn propagator(&self, chi: f64) -> DMatrix<C64> {
        let phases = DMatrix::from_diagonal(&DVector::from_iterator(
            self.eigenvalues.len(),
            self.eigenvalues.iter().map(|&l| cis(-chi * l)),
        ));
        &self.eigenvectors * phases * self.eigenvectors.adjoint()
    }
}

/// Nearest eigenpair of a truncated generator matrix.
#[derive(Debug, Clone)]
pub struct MatrixEigen {
    pub eigenvalue: f64,
    pub state: StateVector,
    /// The generator has continuous spectrum; the pair is a truncation artefact
    /// usable for residuals but not as a fidelity reference.
    pub continuum: bool,
}

fn has_continuum(gen: &Generator) -> bool {
    matches!(
        gen,
        Generator::Q
            | Generator::P
            | Generator::K1
            | Generator::K2
            | Generator::K0PlusK1
            | Generator::K0PlusK2
    )
}

/// Dense eigenpair nearest `target`. For discrete spectra the eigenvalue must move
/// by less than 1e-10 when the cutoff is doubled.
pub fn matrix_eigenstate(system: &CsSystem, gen: &Generator, target: f64) -> Result<MatrixEigen> {
    let dense = DenseHermitian::new(generator_matrix(system, gen)?)?;
    let i = dense.nearest(target);
    let eigenvalue = dense.eigenvalues()[i];
    let continuum = has_continuum(gen);
    let truncated = !matches!(system.kind(), SystemKind::Su2 { .. });
    if truncated && !continuum && 2 * system.dim() <= MAX_DENSE {
        let bigger = system.with_cutoff(2 * system.cutoff())?;
        let d2 = DenseHermitian::new(generator_matrix(&bigger, gen)?)?;
        let e2 = d2.eigenvalues()[d2.nearest(target)];
        if (e2 - eigenvalue).abs() >= 1e-10 {
            return Err(Error::NotConverged(format!(
                "eigenvalue {eigenvalue} moves to {e2} when the cutoff doubles"
            )));
        }
    }
    let mut v = dense.eigenvector(i);
    // fix the global phase on the largest component
    let big = v
        .iter()
        .copied()
        .max_by(|a, b| a.norm().total_cmp(&b.norm()))
        .expect("non-empty");
    let g = big.conj() / big.norm();
    v.iter_mut().for_each(|c| *c *= g);
    Ok(MatrixEigen {
        eigenvalue,
        state: StateVector::new(*system, v)?,
        continuum,
    })
}

/// exp(-i chi M) state in the truncated basis.
pub fn evolve(
    system: &CsSystem,
    gen: &Generator,
    chi: f64,
    state: &StateVector,
) -> Result<StateVector> {
    let dense = DenseHermitian::new(generator_matrix(system, gen)?)?;
    let v = DVector::from_column_slice(state.coeffs());
    // V e^{-i chi L} V^+ v without forming the full propagator.
    let mut w = dense.eigenvectors.adjoint() * v;
    for (x, &l) in w.iter_mut().zip(&dense.eigenvalues) {
        *x *= cis(-chi * l);
    }
    let out = &dense.eigenvectors * w;
    StateVector::new(*system, out.iter().copied().collect())
}

/// Both sides of the two-source interference identity at a probe point.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TwoSource {
    pub direct: f64,
    pub reconstructed: f64,
    pub i1: f64,
    pub i2: f64,
    /// cos of the Pancharatnam phase between the sources plus the Bargmann phase.
    pub cos_term: f64,
}

/// |<probe|g1> + e^{i theta}<probe|g2>|^2 computed directly and as
/// I1 + I2 + 2 sqrt(I1 I2) cos(phi_P(g1, e^{i theta} g2) + arg Delta3(g1, probe, g2)).
pub fn two_source_decomposition(
    system: &CsSystem,
    g1: &PhasePoint,
    g2: &PhasePoint,
    theta: f64,
    probe: &PhasePoint,
) -> Result<TwoSource> {
    let a = overlap_cs(system, probe, g1)?;
    let b = overlap_cs(system, probe, g2)?;
    let s = overlap_cs(system, g1, g2)?;
    if [a, b, s].iter().any(|x| x.norm() < 1e-12) {
        return Err(Error::OrthogonalPair);
    }
    let direct = (a + cis(theta) * b).norm_sqr();
    let (i1, i2) = (a.norm_sqr(), b.norm_sqr());
    let pancharatnam = (cis(theta) * s).arg();
    // Delta3 = <g1|probe><probe|g2><g2|g1>
    let bargmann = (a.conj() * b * s.conj()).arg();
    let cos_term = (pancharatnam + bargmann).cos();
    Ok(TwoSource {
        direct,
        reconstructed: i1 + i2 + 2.0 * (i1 * i2).sqrt() * cos_term,
        i1,
        i2,
        cos_term,
    })
}

/// `n` points along the minimal geodesic from a to b, endpoints included.
pub fn geodesic_polyline(
    manifold: Manifold,
    a: &PhasePoint,
    b: &PhasePoint,
    n: usize,
) -> Result<Vec<PhasePoint>> {
    if n < 2 {
        return Err(Error::InvalidParameter(format!(
            "need at least 2 points, got {n}"
        )));
    }
    if a.manifold() != manifold || b.manifold() != manifold {
        return Err(Error::ManifoldMismatch {
            expected: manifold.name(),
            found: if a.manifold() != manifold {
                a.manifold().name()
            } else {
                b.manifold().name()
            },
        });
    }
    if a.distance(b).expect("same manifold") < 1e-14 {
        return Err(Error::DegenerateEndpoints);
    }
    let ts: Vec<f64> = (0..n).map(|i| i as f64 / (n - 1) as f64).collect();
    let lerp = |x: f64, y: f64, t: f64| x + (y - x) * t;
    let mut out: Vec<PhasePoint> = match (a, b) {
        (PhasePoint::Plane { q: q0, p: p0 }, PhasePoint::Plane { q: q1, p: p1 }) => ts
            .iter()
            .map(|&t| PhasePoint::plane(lerp(*q0, *q1, t), lerp(*p0, *p1, t)))
            .collect(),
        (
            PhasePoint::TwoModePlane { q1, p1, q2, p2 },
            PhasePoint::TwoModePlane {
                q1: r1,
                p1: s1,
                q2: r2,
                p2: s2,
            },
        ) => ts
            .iter()
            .map(|&t| {
                PhasePoint::two_mode(
                    lerp(*q1, *r1, t),
                    lerp(*p1, *s1, t),
                    lerp(*q2, *r2, t),
                    lerp(*p2, *s2, t),
                )
            })
            .collect(),
        (PhasePoint::Sphere(sa), PhasePoint::Sphere(sb)) => {
            let (u, v) = (sa.unit_vector(), sb.unit_vector());
            let dot = (u[0] * v[0] + u[1] * v[1] + u[2] * v[2]).clamp(-1.0, 1.0);
            if dot < -1.0 + 1e-12 {
                return Err(Error::DegenerateEndpoints);
            }
            let omega = dot.acos();
            ts.iter()
                .map(|&t| {
                    let (wa, wb) = (
                        ((1.0 - t) * omega).sin() / omega.sin(),
                        (t * omega).sin() / omega.sin(),
                    );
                    let w = [
                        wa * u[0] + wb * v[0],
                        wa * u[1] + wb * v[1],
                        wa * u[2] + wb * v[2],
                    ];
                    let r = (w[0] * w[0] + w[1] * w[1] + w[2] * w[2]).sqrt();
                    Ok(PhasePoint::Sphere(
                        crate::cs::SpherePoint::from_unit_vector([w[0] / r, w[1] / r, w[2] / r])?,
                    ))
                })
                .collect::<Result<_>>()?
        }
        (PhasePoint::Disk(da), PhasePoint::Disk(db)) => {
            let (za, zb) = (da.zeta(), db.zeta());
            let one = C64::new(1.0, 0.0);
            // move a to the origin, where geodesics are diameters
            let w = (zb - za) / (one - za.conj() * zb);
            let (r, dir) = (w.norm(), w / w.norm());
            let s = r.atanh();
            ts.iter()
                .map(|&t| {
                    let wt = dir * (t * s).tanh();
                    PhasePoint::disk((wt + za) / (one + za.conj() * wt))
                })
                .collect::<Result<_>>()?
        }
        _ => unreachable!("manifolds checked above"),
    };
    out[0] = *a;
    out[n - 1] = *b;
    Ok(out)
}

/// Richardson-extrapolated value with an error estimate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Refined {
    pub value: f64,
    pub error: f64,
    /// Raw value at the finest resolution.
    pub finest: f64,
}

/// Evaluates `curvegen` at each resolution of the increasing sequence and
/// extrapolates with error exponents 2, 3, 4 in the step size.
pub fn refined_geometric_phase<F>(curvegen: F, n_sequence: &[usize]) -> Result<Refined>
where
    F: Fn(usize) -> Result<f64>,
{
    if n_sequence.len() < 2 {
        return Err(Error::InvalidParameter(
            "need at least two resolutions".into(),
        ));
    }
    if n_sequence.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::InvalidParameter("resolutions must increase".into()));
    }
    let values = n_sequence
        .iter()
        .map(|&n| curvegen(n))
        .collect::<Result<Vec<f64>>>()?;
    let diffs: Vec<f64> = values.windows(2).map(|w| (w[1] - w[0]).abs()).collect();
    for w in diffs.windows(2) {
        if w[1] > 1e-12 && w[1] * 2.0 > w[0] {
            return Err(Error::NonConvergent(format!(
                "refinement differences {:e} -> {:e}",
                w[0], w[1]
            )));
        }
    }
    let mut level: Vec<f64> = values.clone();
    let ns: Vec<f64> = n_sequence.iter().map(|&n| n as f64).collect();
    let mut error = diffs.last().copied().unwrap_or(0.0);
    for p in [2, 3, 4] {
        if level.len() < 2 {
            break;
        }
        let offset = n_sequence.len() - level.len();
        let next: Vec<f64> = level
            .windows(2)
            .enumerate()
            .map(|(i, w)| {
                let r = (ns[offset + i + 1] / ns[offset + i]).powi(p);
                (r * w[1] - w[0]) / (r - 1.0)
            })
            .collect();
        error = (next[next.len() - 1] - level[level.len() - 1]).abs();
        level = next;
    }
    Ok(Refined {
        value: level[level.len() - 1],
        error,
        finest: values[values.len() - 1],
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cs::{cs_projection, group_action};
    use crate::numeric::linspace;
    use crate::phase::{geometric_phase, StateCurve};
    use std::f64::consts::PI;

    #[test]
    fn discrete_eigenpairs() {
        let h4 = CsSystem::h4(64).unwrap();
        let e = matrix_eigenstate(&h4, &Generator::N, 2.0).unwrap();
        assert!((e.eigenvalue - 2.0).abs() < 1e-12);
        assert!(
            e.state
                .fidelity(&StateVector::basis(h4, 2).unwrap())
                .unwrap()
                > 1.0 - 1e-12
        );

        let spin = CsSystem::su2(4).unwrap();
        let e = matrix_eigenstate(&spin, &Generator::Jz, 1.0).unwrap();
        assert!((e.eigenvalue - 1.0).abs() < 1e-12);
        assert!(
            e.state
                .fidelity(&StateVector::basis(spin, 1).unwrap())
                .unwrap()
                > 1.0 - 1e-12
        );

        let disk = CsSystem::su11(3.0, 64).unwrap();
        let e = matrix_eigenstate(&disk, &Generator::K0, 5.0).unwrap();
        assert!((e.eigenvalue - 5.0).abs() < 1e-12);
        assert!(!e.continuum);
        assert!(
            matrix_eigenstate(&h4, &Generator::Q, 0.5)
                .unwrap()
                .continuum
        );
    }

    #[test]
    fn propagator_matches_group_action() {
        let disk = CsSystem::su11(0.75, 160).unwrap();
        let a = PhasePoint::disk(C64::new(0.1, -0.2)).unwrap();
        for gen in [Generator::K0, Generator::K2, Generator::K0PlusK1] {
            let chi = 0.6;
            let (b, phase) = group_action(&disk, &gen, chi, &a).unwrap();
            let lhs = evolve(&disk, &gen, chi, &cs_projection(&disk, &a).unwrap()).unwrap();
            let rhs = cs_projection(&disk, &b).unwrap().scaled(cis(phase));
            let d: f64 = lhs.coeffs()[..100]
                .iter()
                .zip(&rhs.coeffs()[..100])
                .map(|(x, y)| (x - y).norm())
                .fold(0.0, f64::max);
            assert!(d < 1e-8, "{}: {d:e}", gen.name());
        }
    }

    #[test]
    fn two_source_identity_and_midpoint() {
        let h4 = CsSystem::h4(64).unwrap();
        let g1 = PhasePoint::plane(-1.0, 0.0);
        let g2 = PhasePoint::plane(1.0, 0.0);
        // in phase sources: <g1|g2> real and positive
        assert!(overlap_cs(&h4, &g1, &g2).unwrap().arg().abs() < 1e-15);
        let mid = PhasePoint::plane(0.0, 0.0);
        let t = two_source_decomposition(&h4, &g1, &g2, 0.0, &mid).unwrap();
        assert!((t.cos_term - 1.0).abs() < 1e-12);
        let flipped = two_source_decomposition(&h4, &g1, &g2, PI, &mid).unwrap();
        assert!((flipped.cos_term + t.cos_term).abs() < 1e-12);
        assert!((t.direct - t.reconstructed).abs() < 1e-12);

        let spin = CsSystem::su2(3).unwrap();
        let p = |t, f| PhasePoint::sphere(t, f).unwrap();
        let t = two_source_decomposition(&spin, &p(0.4, 0.1), &p(1.2, 2.0), 0.7, &p(0.9, -1.0))
            .unwrap();
        assert!((t.direct - t.reconstructed).abs() < 1e-12);
    }

    #[test]
    fn geodesic_examples() {
        let pts = geodesic_polyline(
            Manifold::Plane,
            &PhasePoint::plane(0.0, 0.0),
            &PhasePoint::plane(2.0, 0.0),
            3,
        )
        .unwrap();
        let qs: Vec<f64> = pts.iter().map(|p| p.as_plane().unwrap().0).collect();
        assert_eq!(qs, vec![0.0, 1.0, 2.0]);

        let a = PhasePoint::sphere(PI / 2.0, 0.0).unwrap();
        let b = PhasePoint::sphere(PI / 2.0, PI / 2.0).unwrap();
        let mut last = 0.0;
        for n in [10, 100, 1000] {
            let pts = geodesic_polyline(Manifold::Sphere, &a, &b, n).unwrap();
            let len: f64 = pts
                .windows(2)
                .map(|w| {
                    let (u, v) = (
                        w[0].as_sphere().unwrap().unit_vector(),
                        w[1].as_sphere().unwrap().unit_vector(),
                    );
                    ((u[0] - v[0]).powi(2) + (u[1] - v[1]).powi(2) + (u[2] - v[2]).powi(2)).sqrt()
                })
                .sum();
            assert!(len > last);
            last = len;
        }
        assert!((last - PI / 2.0).abs() < 1e-6);
        for p in geodesic_polyline(Manifold::Sphere, &a, &b, 7).unwrap() {
            assert!(p.as_sphere().unwrap().unit_vector()[2].abs() < 1e-15);
        }

        let z0 = PhasePoint::disk(C64::new(0.0, 0.0)).unwrap();
        let z1 = PhasePoint::disk(C64::new(0.7, 0.0)).unwrap();
        for p in geodesic_polyline(Manifold::Disk, &z0, &z1, 9).unwrap() {
            let z = p.as_disk().unwrap().zeta();
            assert!(z.im.abs() < 1e-15 && (0.0..=0.7).contains(&z.re));
        }
        assert!(matches!(
            geodesic_polyline(Manifold::Disk, &z1, &z1, 9),
            Err(Error::DegenerateEndpoints)
        ));
        let s = PhasePoint::sphere(PI, 0.0).unwrap();
        let nth = PhasePoint::sphere(0.0, 0.0).unwrap();
        assert!(matches!(
            geodesic_polyline(Manifold::Sphere, &nth, &s, 9),
            Err(Error::DegenerateEndpoints)
        ));
    }

    fn plane_curve(n: usize, radius_q: f64, radius_p: f64) -> Result<f64> {
        let sys = CsSystem::h4(64)?;
        let samples = linspace(0.0, 2.0 * PI, n + 1)
            .into_iter()
            .map(|t| {
                let v = cs_projection(
                    &sys,
                    &PhasePoint::plane(radius_q * t.cos(), radius_p * t.sin()),
                )?;
                Ok((t, v))
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(geometric_phase(&StateCurve::closed(samples)?)?.geometric)
    }

    #[test]
    fn refined_known_areas() {
        let ns = [128, 256, 512, 1024];
        let r = refined_geometric_phase(|n| plane_curve(n, 1.0, 1.0), &ns).unwrap();
        assert!((r.value + PI).abs() < 1e-10, "{r:?}");
        let r = refined_geometric_phase(|n| plane_curve(n, 2.0, 1.0), &ns).unwrap();
        assert!((r.value + 2.0 * PI).abs() < 1e-8, "{r:?}");

        let spin = CsSystem::su2(4).unwrap();
        let theta = 1.0f64;
        let lat = |n: usize| -> Result<f64> {
            let samples = linspace(0.0, 2.0 * PI, n + 1)
                .into_iter()
                .map(|f| Ok((f, cs_projection(&spin, &PhasePoint::sphere(theta, f)?)?)))
                .collect::<Result<Vec<_>>>()?;
            Ok(geometric_phase(&StateCurve::closed(samples)?)?.geometric)
        };
        let r = refined_geometric_phase(lat, &ns).unwrap();
        assert!(
            (r.value + 2.0 * 2.0 * PI * (1.0 - theta.cos())).abs() < 1e-8,
            "{r:?}"
        );
    }

    #[test]
    fn divergent_sequence_is_flagged() {
        let r = refined_geometric_phase(|n| Ok((n as f64).sqrt()), &[4, 8, 16]);
        assert!(matches!(r, Err(Error::NonConvergent(_))));
    }
}
