//! Coherent-state systems: points, basis expansions, overlap kernels, generators
//! and group actions.

pub mod h4;
pub mod su11;
pub mod su2;

use crate::error::{Error, Result};
use crate::numeric::{cis, inner, norm, wrap_angle, C64, I};
use nalgebra::DMatrix;
use serde::Serialize;
use std::f64::consts::PI;
use std::fmt;

/// Which group and representation a [`CsSystem`] describes.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub enum SystemKind {
    H4,
    H4Scaled { s: f64 },
    H4TwoMode,
    Su2 { two_j: u32 },
    Su11 { k: f64 },
}

/// The phase-space manifold carrying the coherent states of a system.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Manifold {
    Plane,
    TwoModePlane,
    Sphere,
    Disk,
}

impl Manifold {
    pub fn name(self) -> &'static str {
        match self {
            Manifold::Plane => "plane",
            Manifold::TwoModePlane => "two-mode plane",
            Manifold::Sphere => "sphere",
            Manifold::Disk => "disk",
        }
    }
}

/// A coherent-state system with its basis truncation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CsSystem {
    kind: SystemKind,
    cutoff: usize,
}

impl CsSystem {
    pub fn h4(cutoff: usize) -> Result<Self> {
        Self::checked(SystemKind::H4, cutoff)
    }

    pub fn h4_scaled(s: f64, cutoff: usize) -> Result<Self> {
        if !(s > 0.0 && s.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "scale s = {s} must be positive"
            )));
        }
        Self::checked(SystemKind::H4Scaled { s }, cutoff)
    }

    /// Two oscillators; `cutoff` applies to each mode.
    pub fn h4_two_mode(cutoff: usize) -> Result<Self> {
        Self::checked(SystemKind::H4TwoMode, cutoff)
    }

    /// Spin system from twice the spin, so that j = two_j / 2.
    pub fn su2(two_j: u32) -> Result<Self> {
        if two_j == 0 {
            return Err(Error::InvalidParameter("spin must be at least 1/2".into()));
        }
        Ok(CsSystem {
            kind: SystemKind::Su2 { two_j },
            cutoff: two_j as usize + 1,
        })
    }

    pub fn su2_spin(j: f64) -> Result<Self> {
        let two_j = 2.0 * j;
        if (two_j - two_j.round()).abs() > 1e-12 || two_j.round() < 1.0 {
            return Err(Error::InvalidParameter(format!(
                "j = {j} is not a positive half-integer"
            )));
        }
        Self::su2(two_j.round() as u32)
    }

    pub fn su11(k: f64, cutoff: usize) -> Result<Self> {
        if !(k > 0.0 && k.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "Bargmann index k = {k} must be positive"
            )));
        }
        Self::checked(SystemKind::Su11 { k }, cutoff)
    }

    fn checked(kind: SystemKind, cutoff: usize) -> Result<Self> {
        if cutoff == 0 {
            return Err(Error::InvalidParameter("cutoff must be at least 1".into()));
        }
        Ok(CsSystem { kind, cutoff })
    }

    pub fn kind(&self) -> SystemKind {
        self.kind
    }

    /// Per-mode basis size.
    pub fn cutoff(&self) -> usize {
        self.cutoff
    }

    pub fn dim(&self) -> usize {
        match self.kind {
            SystemKind::H4TwoMode => self.cutoff * self.cutoff,
            _ => self.cutoff,
        }
    }

    pub fn manifold(&self) -> Manifold {
        match self.kind {
            SystemKind::H4 | SystemKind::H4Scaled { .. } => Manifold::Plane,
            SystemKind::H4TwoMode => Manifold::TwoModePlane,
            SystemKind::Su2 { .. } => Manifold::Sphere,
            SystemKind::Su11 { .. } => Manifold::Disk,
        }
    }

    /// Same system with another truncation (ignored for spin systems).
    pub fn with_cutoff(&self, cutoff: usize) -> Result<Self> {
        match self.kind {
            SystemKind::Su2 { .. } => Ok(*self),
            kind => Self::checked(kind, cutoff),
        }
    }

    /// One extra basis level per mode; exact systems are returned unchanged.
    pub(crate) fn guarded(&self) -> Self {
        match self.kind {
            SystemKind::Su2 { .. } => *self,
            kind => CsSystem {
                kind,
                cutoff: self.cutoff + 1,
            },
        }
    }

    pub fn is_truncated(&self) -> bool {
        !matches!(self.kind, SystemKind::Su2 { .. })
    }

    pub fn spin(&self) -> Option<f64> {
        match self.kind {
            SystemKind::Su2 { two_j } => Some(two_j as f64 / 2.0),
            _ => None,
        }
    }

    pub fn bargmann_index(&self) -> Option<f64> {
        match self.kind {
            SystemKind::Su11 { k } => Some(k),
            _ => None,
        }
    }

    fn scale(&self) -> f64 {
        match self.kind {
            SystemKind::H4Scaled { s } => s,
            _ => 1.0,
        }
    }
}

impl fmt::Display for CsSystem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.kind {
            SystemKind::H4 => write!(f, "oscillator (cutoff {})", self.cutoff),
            SystemKind::H4Scaled { s } => {
                write!(f, "scaled oscillator s={s} (cutoff {})", self.cutoff)
            }
            SystemKind::H4TwoMode => {
                write!(f, "two-mode oscillator (cutoff {} per mode)", self.cutoff)
            }
            SystemKind::Su2 { two_j } => write!(f, "spin j={}", two_j as f64 / 2.0),
            SystemKind::Su11 { k } => write!(f, "SU(1,1) k={k} (cutoff {})", self.cutoff),
        }
    }
}

/// Oscillator truncation covering coherent states with |z|^2 up to `z2_max`.
pub fn default_h4_cutoff(z2_max: f64) -> usize {
    64usize.max((4.0 * z2_max + 10.0).ceil() as usize)
}

/// SU(1,1) truncation at which the coefficients of a point with |zeta| = `r`
/// have dropped below 1e-16 of their maximum.
pub fn default_su11_cutoff(k: f64, r: f64) -> usize {
    if r <= 0.0 {
        return 64;
    }
    let (mut ln_c, mut best) = (0.0f64, 0.0f64);
    let ln_r = r.ln();
    for m in 1..200_000usize {
        let mf = m as f64;
        ln_c += ln_r + 0.5 * ((2.0 * k + mf - 1.0).ln() - mf.ln());
        best = best.max(ln_c);
        if ln_c - best < (1e-16f64).ln() {
            return 64usize.max(m + 1);
        }
    }
    200_000
}

/// Point on the Bloch sphere, theta in [0, pi], phi in [0, 2 pi).
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SpherePoint {
    theta: f64,
    phi: f64,
}

impl SpherePoint {
    /// Canonicalises any finite (theta, phi) onto the stated ranges.
    pub fn new(theta: f64, phi: f64) -> Result<Self> {
        if !(theta.is_finite() && phi.is_finite()) {
            return Err(Error::InvalidParameter(
                "non-finite sphere coordinates".into(),
            ));
        }
        let mut t = theta.rem_euclid(2.0 * PI);
        let mut p = phi;
        if t > PI {
            t = 2.0 * PI - t;
            p += PI;
        }
        let mut p = p.rem_euclid(2.0 * PI);
        if p >= 2.0 * PI {
            p = 0.0;
        }
        Ok(SpherePoint { theta: t, phi: p })
    }

    pub fn theta(&self) -> f64 {
        self.theta
    }

    pub fn phi(&self) -> f64 {
        self.phi
    }

    pub fn unit_vector(&self) -> [f64; 3] {
        su2::unit_vector(self.theta, self.phi)
    }

    pub fn from_unit_vector(v: [f64; 3]) -> Result<Self> {
        let r = (v[0] * v[0] + v[1] * v[1] + v[2] * v[2]).sqrt();
        if !(r > 0.0) {
            return Err(Error::InvalidParameter("zero vector".into()));
        }
        let theta = (v[2] / r).clamp(-1.0, 1.0).acos();
        Self::new(theta, v[1].atan2(v[0]))
    }
}

/// Point on the Poincare disk. `gap` stores 1 - |zeta|^2 at full relative precision.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DiskPoint {
    #[serde(serialize_with = "ser_complex")]
    zeta: C64,
    gap: f64,
}

fn ser_complex<S: serde::Serializer>(z: &C64, s: S) -> std::result::Result<S::Ok, S::Error> {
    use serde::ser::SerializeTuple;
    let mut t = s.serialize_tuple(2)?;
    t.serialize_element(&z.re)?;
    t.serialize_element(&z.im)?;
    t.end()
}

impl DiskPoint {
    pub fn new(zeta: C64) -> Result<Self> {
        let r = zeta.norm();
        if !(r < 1.0) {
            return Err(Error::OutsideDisk(r));
        }
        Ok(DiskPoint {
            zeta,
            gap: (1.0 - r) * (1.0 + r),
        })
    }

    /// zeta = tanh(tau/2) e^{i phi}; negative tau is allowed.
    pub fn from_hyperbolic(tau: f64, phi: f64) -> Result<Self> {
        if !(tau.is_finite() && phi.is_finite()) {
            return Err(Error::InvalidParameter(
                "non-finite hyperbolic coordinates".into(),
            ));
        }
        let (zeta, gap) = su11::from_hyperbolic(tau, phi);
        Ok(DiskPoint { zeta, gap })
    }

    pub(crate) fn from_parts(zeta: C64, gap: f64) -> Self {
        DiskPoint { zeta, gap }
    }

    pub fn zeta(&self) -> C64 {
        self.zeta
    }

    pub fn gap(&self) -> f64 {
        self.gap
    }

    pub fn cosh_tau(&self) -> f64 {
        (2.0 - self.gap) / self.gap
    }

    /// Hyperbolic radius tau >= 0.
    pub fn tau(&self) -> f64 {
        let c = self.cosh_tau();
        (c + ((c - 1.0) * (c + 1.0)).max(0.0).sqrt()).ln()
    }
}

/// A point of one of the supported coherent-state manifolds.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub enum PhasePoint {
    Plane { q: f64, p: f64 },
    TwoModePlane { q1: f64, p1: f64, q2: f64, p2: f64 },
    Sphere(SpherePoint),
    Disk(DiskPoint),
}

impl PhasePoint {
    pub fn plane(q: f64, p: f64) -> Self {
        PhasePoint::Plane { q, p }
    }

    pub fn two_mode(q1: f64, p1: f64, q2: f64, p2: f64) -> Self {
        PhasePoint::TwoModePlane { q1, p1, q2, p2 }
    }

    pub fn sphere(theta: f64, phi: f64) -> Result<Self> {
        SpherePoint::new(theta, phi).map(PhasePoint::Sphere)
    }

    pub fn disk(zeta: C64) -> Result<Self> {
        DiskPoint::new(zeta).map(PhasePoint::Disk)
    }

    pub fn disk_hyperbolic(tau: f64, phi: f64) -> Result<Self> {
        DiskPoint::from_hyperbolic(tau, phi).map(PhasePoint::Disk)
    }

    pub fn manifold(&self) -> Manifold {
        match self {
            PhasePoint::Plane { .. } => Manifold::Plane,
            PhasePoint::TwoModePlane { .. } => Manifold::TwoModePlane,
            PhasePoint::Sphere(_) => Manifold::Sphere,
            PhasePoint::Disk(_) => Manifold::Disk,
        }
    }

    /// Chart distance: Euclidean on planes, chordal on the sphere, |dzeta| on the disk.
    pub fn distance(&self, other: &PhasePoint) -> Option<f64> {
        match (self, other) {
            (PhasePoint::Plane { q, p }, PhasePoint::Plane { q: q2, p: p2 }) => {
                Some((q - q2).hypot(p - p2))
            }
            (
                PhasePoint::TwoModePlane { q1, p1, q2, p2 },
                PhasePoint::TwoModePlane {
                    q1: r1,
                    p1: s1,
                    q2: r2,
                    p2: s2,
                },
            ) => Some(
                ((q1 - r1).powi(2) + (p1 - s1).powi(2) + (q2 - r2).powi(2) + (p2 - s2).powi(2))
                    .sqrt(),
            ),
            (PhasePoint::Sphere(a), PhasePoint::Sphere(b)) => {
                let (u, v) = (a.unit_vector(), b.unit_vector());
                Some(((u[0] - v[0]).powi(2) + (u[1] - v[1]).powi(2) + (u[2] - v[2]).powi(2)).sqrt())
            }
            (PhasePoint::Disk(a), PhasePoint::Disk(b)) => Some((a.zeta - b.zeta).norm()),
            _ => None,
        }
    }

    pub fn as_sphere(&self) -> Option<SpherePoint> {
        match self {
            PhasePoint::Sphere(s) => Some(*s),
            _ => None,
        }
    }

    pub fn as_disk(&self) -> Option<DiskPoint> {
        match self {
            PhasePoint::Disk(d) => Some(*d),
            _ => None,
        }
    }

    pub fn as_plane(&self) -> Option<(f64, f64)> {
        match self {
            PhasePoint::Plane { q, p } => Some((*q, *p)),
            _ => None,
        }
    }
}

/// Unit rotation axis for spin generators.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Axis([f64; 3]);

impl Axis {
    pub fn new(v: [f64; 3]) -> Result<Self> {
        let n = (v[0] * v[0] + v[1] * v[1] + v[2] * v[2]).sqrt();
        if (n - 1.0).abs() > 1e-12 {
            return Err(Error::NonUnitAxis(n));
        }
        Ok(Axis(v))
    }

    pub fn z() -> Self {
        Axis([0.0, 0.0, 1.0])
    }

    pub fn components(&self) -> [f64; 3] {
        self.0
    }
}

/// One-parameter subgroup generators.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub enum Generator {
    /// Position quadrature.
    Q,
    /// Momentum quadrature.
    P,
    /// Number operator.
    N,
    /// Number operator of the scaled oscillator.
    Ns,
    /// Total number of the two-mode oscillator.
    NTotal,
    Jz,
    Jn(Axis),
    K0,
    K1,
    K2,
    K0PlusK1,
    K0PlusK2,
}

impl Generator {
    pub fn jn(axis: [f64; 3]) -> Result<Self> {
        Axis::new(axis).map(Generator::Jn)
    }

    pub fn name(&self) -> String {
        match self {
            Generator::Q => "q".into(),
            Generator::P => "p".into(),
            Generator::N => "n".into(),
            Generator::Ns => "n_s".into(),
            Generator::NTotal => "n_total".into(),
            Generator::Jz => "J_z".into(),
            Generator::Jn(a) => format!("J_n{:?}", a.0),
            Generator::K0 => "K_0".into(),
            Generator::K1 => "K_1".into(),
            Generator::K2 => "K_2".into(),
            Generator::K0PlusK1 => "K_0+K_1".into(),
            Generator::K0PlusK2 => "K_0+K_2".into(),
        }
    }

    /// True for generators whose orbits close (compact one-parameter subgroups).
    pub fn is_compact(&self) -> bool {
        matches!(
            self,
            Generator::N
                | Generator::Ns
                | Generator::NTotal
                | Generator::Jz
                | Generator::Jn(_)
                | Generator::K0
        )
    }

    fn su11_coefficients(&self) -> Option<[f64; 3]> {
        match self {
            Generator::K0 => Some([1.0, 0.0, 0.0]),
            Generator::K1 => Some([0.0, 1.0, 0.0]),
            Generator::K2 => Some([0.0, 0.0, 1.0]),
            Generator::K0PlusK1 => Some([1.0, 1.0, 0.0]),
            Generator::K0PlusK2 => Some([1.0, 0.0, 1.0]),
            _ => None,
        }
    }

    fn spin_axis(&self) -> Option<[f64; 3]> {
        match self {
            Generator::Jz => Some([0.0, 0.0, 1.0]),
            Generator::Jn(a) => Some(a.0),
            _ => None,
        }
    }
}

/// Fails unless `gen` belongs to the algebra of `system`.
pub fn check_generator(system: &CsSystem, gen: &Generator) -> Result<()> {
    let ok = match system.kind {
        SystemKind::H4 => matches!(gen, Generator::Q | Generator::P | Generator::N),
        SystemKind::H4Scaled { .. } => matches!(gen, Generator::Ns),
        SystemKind::H4TwoMode => matches!(gen, Generator::NTotal),
        SystemKind::Su2 { .. } => gen.spin_axis().is_some(),
        SystemKind::Su11 { .. } => gen.su11_coefficients().is_some(),
    };
    if ok {
        Ok(())
    } else {
        Err(Error::IncompatibleGenerator {
            generator: gen.name(),
            system: system.to_string(),
        })
    }
}

fn check_point(system: &CsSystem, a: &PhasePoint) -> Result<()> {
    let expected = system.manifold();
    if a.manifold() != expected {
        return Err(Error::ManifoldMismatch {
            expected: expected.name(),
            found: a.manifold().name(),
        });
    }
    Ok(())
}

/// Label of a basis vector.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub enum BasisLabel {
    Fock(usize),
    TwoMode(usize, usize),
    /// Magnetic number m of |j, m>.
    Spin(f64),
    Discrete(usize),
}

/// Coefficient vector in the orthonormal basis of a system.
#[derive(Debug, Clone, PartialEq)]
pub struct StateVector {
    system: CsSystem,
    coeffs: Vec<C64>,
}

impl StateVector {
    pub fn new(system: CsSystem, coeffs: Vec<C64>) -> Result<Self> {
        if coeffs.len() != system.dim() {
            return Err(Error::DimensionMismatch(system.dim(), coeffs.len()));
        }
        Ok(StateVector { system, coeffs })
    }

    pub fn zeros(system: CsSystem) -> Self {
        StateVector {
            system,
            coeffs: vec![C64::new(0.0, 0.0); system.dim()],
        }
    }

    /// Basis vector with flat index `index`.
    pub fn basis(system: CsSystem, index: usize) -> Result<Self> {
        let mut v = Self::zeros(system);
        let dim = v.coeffs.len();
        *v.coeffs
            .get_mut(index)
            .ok_or(Error::DimensionMismatch(dim, index + 1))? = C64::new(1.0, 0.0);
        Ok(v)
    }

    pub fn system(&self) -> &CsSystem {
        &self.system
    }

    pub fn coeffs(&self) -> &[C64] {
        &self.coeffs
    }

    pub fn into_coeffs(self) -> Vec<C64> {
        self.coeffs
    }

    pub fn len(&self) -> usize {
        self.coeffs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.coeffs.is_empty()
    }

    pub fn label(&self, index: usize) -> BasisLabel {
        match self.system.kind {
            SystemKind::H4 | SystemKind::H4Scaled { .. } => BasisLabel::Fock(index),
            SystemKind::H4TwoMode => {
                BasisLabel::TwoMode(index / self.system.cutoff, index % self.system.cutoff)
            }
            SystemKind::Su2 { two_j } => BasisLabel::Spin(two_j as f64 / 2.0 - index as f64),
            SystemKind::Su11 { .. } => BasisLabel::Discrete(index),
        }
    }

    pub fn norm(&self) -> f64 {
        norm(&self.coeffs)
    }

    pub fn is_normalized(&self) -> bool {
        (self.norm() - 1.0).abs() <= 1e-12
    }

    pub fn normalized(&self) -> Result<Self> {
        let n = self.norm();
        if !(n > 0.0 && n.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "cannot normalise a vector of norm {n}"
            )));
        }
        Ok(self.scaled(C64::new(1.0 / n, 0.0)))
    }

    pub fn scaled(&self, c: C64) -> Self {
        StateVector {
            system: self.system,
            coeffs: self.coeffs.iter().map(|x| x * c).collect(),
        }
    }

    /// <self|other>.
    pub fn inner(&self, other: &StateVector) -> Result<C64> {
        if self.coeffs.len() != other.coeffs.len() {
            return Err(Error::DimensionMismatch(
                self.coeffs.len(),
                other.coeffs.len(),
            ));
        }
        Ok(inner(&self.coeffs, &other.coeffs))
    }

    /// |<a|b>|^2 / (|a|^2 |b|^2).
    pub fn fidelity(&self, other: &StateVector) -> Result<f64> {
        let o = self.inner(other)?;
        Ok(o.norm_sqr() / (self.norm().powi(2) * other.norm().powi(2)))
    }

    /// Largest |last coefficient| / |max coefficient| over the modes; zero for exact bases.
    pub fn tail_ratio(&self) -> f64 {
        tail_ratio(&self.system, &self.coeffs)
    }
}

fn tail_ratio(system: &CsSystem, c: &[C64]) -> f64 {
    let max = c.iter().map(|x| x.norm()).fold(0.0, f64::max);
    if max == 0.0 {
        return 0.0;
    }
    match system.kind {
        SystemKind::Su2 { .. } => 0.0,
        SystemKind::H4TwoMode => {
            let m = system.cutoff;
            let edge = (0..m)
                .map(|i| c[(m - 1) * m + i].norm().max(c[i * m + m - 1].norm()))
                .fold(0.0, f64::max);
            edge / max
        }
        _ => c[c.len() - 1].norm() / max,
    }
}

fn plane_z(system: &CsSystem, q: f64, p: f64) -> C64 {
    h4::z_of(q, p, system.scale())
}

/// Basis coefficients of the coherent state at `a`, projected onto the truncated
/// basis without a tail test. Overlaps with vectors of the same truncated space are
/// exact regardless of the truncation.
pub fn cs_projection(system: &CsSystem, a: &PhasePoint) -> Result<StateVector> {
    check_point(system, a)?;
    let n = system.cutoff;
    let coeffs = match (system.kind, a) {
        (SystemKind::H4 | SystemKind::H4Scaled { .. }, PhasePoint::Plane { q, p }) => {
            h4::coefficients(plane_z(system, *q, *p), n)
        }
        (SystemKind::H4TwoMode, PhasePoint::TwoModePlane { q1, p1, q2, p2 }) => {
            let u = h4::coefficients(h4::z_of(*q1, *p1, 1.0), n);
            let v = h4::coefficients(h4::z_of(*q2, *p2, 1.0), n);
            u.iter()
                .flat_map(|x| v.iter().map(move |y| x * y))
                .collect()
        }
        (SystemKind::Su2 { two_j }, PhasePoint::Sphere(s)) => {
            su2::coefficients(two_j, s.theta, s.phi)
        }
        (SystemKind::Su11 { k }, PhasePoint::Disk(d)) => su11::coefficients(k, d.zeta, d.gap, n),
        _ => unreachable!("manifold checked above"),
    };
    Ok(StateVector {
        system: *system,
        coeffs,
    })
}

/// Basis coefficients of the coherent state at `a`; fails when the truncation
/// cuts off more than 1e-10 of the largest coefficient.
pub fn cs_coefficients(system: &CsSystem, a: &PhasePoint) -> Result<StateVector> {
    let v = cs_projection(system, a)?;
    let ratio = v.tail_ratio();
    if ratio >= 1e-10 {
        return Err(Error::TruncationInadequate {
            cutoff: system.cutoff,
            ratio,
        });
    }
    Ok(v)
}

/// Closed-form overlap <a|b>.
pub fn overlap_cs(system: &CsSystem, a: &PhasePoint, b: &PhasePoint) -> Result<C64> {
    check_point(system, a)?;
    check_point(system, b)?;
    Ok(match (system.kind, a, b) {
        (
            SystemKind::H4 | SystemKind::H4Scaled { .. },
            PhasePoint::Plane { q, p },
            PhasePoint::Plane { q: q2, p: p2 },
        ) => h4::kernel(plane_z(system, *q, *p), plane_z(system, *q2, *p2)),
        (
            SystemKind::H4TwoMode,
            PhasePoint::TwoModePlane { q1, p1, q2, p2 },
            PhasePoint::TwoModePlane {
                q1: r1,
                p1: s1,
                q2: r2,
                p2: s2,
            },
        ) => {
            h4::kernel(h4::z_of(*q1, *p1, 1.0), h4::z_of(*r1, *s1, 1.0))
                * h4::kernel(h4::z_of(*q2, *p2, 1.0), h4::z_of(*r2, *s2, 1.0))
        }
        (SystemKind::Su2 { two_j }, PhasePoint::Sphere(x), PhasePoint::Sphere(y)) => {
            su2::kernel(two_j, (x.theta, x.phi), (y.theta, y.phi))
        }
        (SystemKind::Su11 { k }, PhasePoint::Disk(x), PhasePoint::Disk(y)) => {
            su11::kernel(k, (x.zeta, x.gap), (y.zeta, y.gap))
        }
        _ => unreachable!("manifolds checked above"),
    })
}

/// <q'|q,p> for the ordinary oscillator.
pub fn position_overlap_h4(q_prime: f64, a: &PhasePoint) -> Result<C64> {
    match a {
        PhasePoint::Plane { q, p } => Ok(h4::position_overlap(q_prime, *q, *p)),
        other => Err(Error::ManifoldMismatch {
            expected: Manifold::Plane.name(),
            found: other.manifold().name(),
        }),
    }
}

/// Closed-form coherent-state expectation of a generator.
pub fn expectation_generator(system: &CsSystem, gen: &Generator, a: &PhasePoint) -> Result<f64> {
    check_generator(system, gen)?;
    check_point(system, a)?;
    Ok(match (gen, a) {
        (Generator::Q, PhasePoint::Plane { q, .. }) => *q,
        (Generator::P, PhasePoint::Plane { p, .. }) => *p,
        (Generator::N | Generator::Ns, PhasePoint::Plane { q, p }) => {
            plane_z(system, *q, *p).norm_sqr()
        }
        (Generator::NTotal, PhasePoint::TwoModePlane { q1, p1, q2, p2 }) => {
            0.5 * (q1 * q1 + p1 * p1 + q2 * q2 + p2 * p2)
        }
        (Generator::Jz | Generator::Jn(_), PhasePoint::Sphere(s)) => {
            let j = system.spin().expect("spin system");
            let n = gen.spin_axis().expect("spin generator");
            let u = s.unit_vector();
            j * (n[0] * u[0] + n[1] * u[1] + n[2] * u[2])
        }
        (_, PhasePoint::Disk(d)) => {
            let k = system.bargmann_index().expect("SU(1,1) system");
            let z = d.zeta;
            match gen {
                Generator::K0 => k * d.cosh_tau(),
                Generator::K1 => 2.0 * k * z.re / d.gap,
                Generator::K2 => -2.0 * k * z.im / d.gap,
                Generator::K0PlusK1 => k * (C64::new(1.0, 0.0) + z).norm_sqr() / d.gap,
                Generator::K0PlusK2 => k * (C64::new(1.0, 0.0) + I * z).norm_sqr() / d.gap,
                _ => unreachable!("generator checked above"),
            }
        }
        _ => unreachable!("generator and manifold checked above"),
    })
}

/// Applies the generator to a coefficient vector using its ladder-operator action.
pub fn apply_generator(system: &CsSystem, gen: &Generator, v: &[C64]) -> Result<Vec<C64>> {
    check_generator(system, gen)?;
    if v.len() != system.dim() {
        return Err(Error::DimensionMismatch(system.dim(), v.len()));
    }
    let n = system.cutoff;
    let mut out = vec![C64::new(0.0, 0.0); v.len()];
    match gen {
        Generator::N | Generator::Ns => {
            for (i, (o, x)) in out.iter_mut().zip(v).enumerate() {
                *o = x * i as f64;
            }
        }
        Generator::NTotal => {
            for (i, (o, x)) in out.iter_mut().zip(v).enumerate() {
                *o = x * (i / n + i % n) as f64;
            }
        }
        Generator::Q | Generator::P => {
            // q = (a + a^dag)/sqrt2, p = -i (a - a^dag)/sqrt2
            let (lo, hi) = if *gen == Generator::Q {
                (C64::new(1.0, 0.0), C64::new(1.0, 0.0))
            } else {
                (-I, I)
            };
            for i in 0..n {
                let mut acc = C64::new(0.0, 0.0);
                if i + 1 < n {
                    acc += lo * v[i + 1] * ((i + 1) as f64).sqrt();
                }
                if i > 0 {
                    acc += hi * v[i - 1] * (i as f64).sqrt();
                }
                out[i] = acc * std::f64::consts::FRAC_1_SQRT_2;
            }
        }
        Generator::Jz | Generator::Jn(_) => {
            let [nx, ny, nz] = gen.spin_axis().expect("spin generator");
            let two_j = n as u32 - 1;
            let j = two_j as f64 / 2.0;
            for p in 0..n {
                let m = j - p as f64;
                let mut acc = v[p] * (nz * m);
                // J+ |j,m> = sqrt((j-m)(j+m+1)) |j,m+1>, index p -> p-1
                if p + 1 < n {
                    let c = ((j - (m - 1.0)) * (j + m)).sqrt(); // <m|J+|m-1>
                    let jp = v[p + 1] * c;
                    acc += jp * C64::new(0.5 * nx, -0.5 * ny);
                }
                if p > 0 {
                    let c = ((j + (m + 1.0)) * (j - m)).sqrt(); // <m|J-|m+1>
                    let jm = v[p - 1] * c;
                    acc += jm * C64::new(0.5 * nx, 0.5 * ny);
                }
                out[p] = acc;
            }
        }
        _ => {
            let [a0, a1, a2] = gen.su11_coefficients().expect("SU(1,1) generator");
            let k = system.bargmann_index().expect("SU(1,1) system");
            // K1 = (K+ + K-)/2, K2 = (K+ - K-)/(2i)
            let up = C64::new(0.5 * a1, -0.5 * a2);
            let down = C64::new(0.5 * a1, 0.5 * a2);
            for m in 0..n {
                let mf = m as f64;
                let mut acc = v[m] * (a0 * (k + mf));
                if m > 0 {
                    // <m|K+|m-1> = sqrt(m (m - 1 + 2k))
                    acc += up * v[m - 1] * (mf * (mf - 1.0 + 2.0 * k)).sqrt();
                }
                if m + 1 < n {
                    // <m|K-|m+1> = sqrt((m+1)(m+2k))
                    acc += down * v[m + 1] * ((mf + 1.0) * (mf + 2.0 * k)).sqrt();
                }
                out[m] = acc;
            }
        }
    }
    Ok(out)
}

/// Dense generator matrix in the truncated basis.
pub fn generator_matrix(system: &CsSystem, gen: &Generator) -> Result<DMatrix<C64>> {
    check_generator(system, gen)?;
    let d = system.dim();
    let mut m = DMatrix::from_element(d, d, C64::new(0.0, 0.0));
    let mut e = vec![C64::new(0.0, 0.0); d];
    for col in 0..d {
        e[col] = C64::new(1.0, 0.0);
        let c = apply_generator(system, gen, &e)?;
        for (row, x) in c.into_iter().enumerate() {
            m[(row, col)] = x;
        }
        e[col] = C64::new(0.0, 0.0);
    }
    Ok(m)
}

/// exp(-i chi T)|a> = e^{i phase}|a'>; returns (a', phase) with phase in (-pi, pi].
pub fn group_action(
    system: &CsSystem,
    gen: &Generator,
    chi: f64,
    a: &PhasePoint,
) -> Result<(PhasePoint, f64)> {
    check_generator(system, gen)?;
    check_point(system, a)?;
    let (point, phase) = match (gen, a) {
        (Generator::N, PhasePoint::Plane { q, p })
        | (Generator::Ns, PhasePoint::Plane { q, p }) => {
            let s = system.scale();
            let (q2, p2) = h4::qp_of(h4::rotate(h4::z_of(*q, *p, s), chi), s);
            (PhasePoint::Plane { q: q2, p: p2 }, 0.0)
        }
        (Generator::Q, PhasePoint::Plane { q, p }) => {
            (PhasePoint::Plane { q: *q, p: p - chi }, -0.5 * chi * q)
        }
        (Generator::P, PhasePoint::Plane { q, p }) => {
            (PhasePoint::Plane { q: q + chi, p: *p }, -0.5 * chi * p)
        }
        (Generator::NTotal, PhasePoint::TwoModePlane { q1, p1, q2, p2 }) => {
            let (a1, b1) = h4::qp_of(h4::rotate(h4::z_of(*q1, *p1, 1.0), chi), 1.0);
            let (a2, b2) = h4::qp_of(h4::rotate(h4::z_of(*q2, *p2, 1.0), chi), 1.0);
            (PhasePoint::two_mode(a1, b1, a2, b2), 0.0)
        }
        (_, PhasePoint::Sphere(s)) => {
            let two_j = (system.dim() - 1) as u32;
            let axis = gen.spin_axis().expect("spin generator");
            let (t, p, phase) = su2::rotate(two_j, axis, chi, s.theta, s.phi);
            (PhasePoint::Sphere(SpherePoint::new(t, p)?), phase)
        }
        (_, PhasePoint::Disk(d)) => {
            let k = system.bargmann_index().expect("SU(1,1) system");
            let coef = gen.su11_coefficients().expect("SU(1,1) generator");
            let (z, gap, phase) = su11::act(k, coef, chi, d.zeta, d.gap);
            (PhasePoint::Disk(DiskPoint::from_parts(z, gap)), phase)
        }
        _ => unreachable!("generator and manifold checked above"),
    };
    Ok((point, wrap_angle(phase)))
}

/// Coherent state transported by the group, including its phase:
/// the coefficients of exp(-i chi T)|a>.
pub fn transported_projection(
    system: &CsSystem,
    gen: &Generator,
    chi: f64,
    a: &PhasePoint,
) -> Result<StateVector> {
    let (b, phase) = group_action(system, gen, chi, a)?;
    Ok(cs_projection(system, &b)?.scaled(cis(phase)))
}
