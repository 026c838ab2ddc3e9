//! Orbits of one-parameter subgroups and generator eigenstates built as
//! coherent-state superpositions along them.
//!
//! A closed orbit of period T is sampled with P uniform nodes per period. When the
//! node budget allows W = nodes / P > 1 passes, pass l carries the binomial weight
//! C(W-1, l) / 2^{W-1}. For a seed whose loop phase e^{i Theta} is trivial this is
//! identical to the single-period average; otherwise the passes multiply the
//! single-period average by ((1 + e^{i Theta}) / 2)^{W-1}, a discrete version of the
//! average over the whole group, so unquantized superpositions shrink
//! geometrically with the node count.
//!
//! Open orbits use chi = sinh(u) with uniform u, which places nodes densely near
//! the seed and reaches far along the orbit where the integrand decays slowly.

use crate::cs::{
    check_generator, cs_projection, group_action, su2, transported_projection, CsSystem, Generator,
    PhasePoint, SpherePoint, StateVector, SystemKind,
};
use crate::error::{Error, Result};
use crate::numeric::{cis, ln_binomial, nearest_two_pi_multiple, norm, C64};
use crate::phase::{geometric_phase_with_reference, StateCurve};
use rayon::prelude::*;
use serde::Serialize;
use std::f64::consts::PI;

/// Default node count for closed orbits.
pub const DEFAULT_CLOSED_NODES: usize = 512;
/// Default node count for open orbits.
pub const DEFAULT_OPEN_NODES: usize = 2001;

const CHUNK: usize = 64;

/// Parameter range of an orbit.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub enum Topology {
    Closed { period: f64 },
    Open { chi_min: f64, chi_max: f64 },
}

/// The curve exp(-i chi T)|seed> in phase space.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct OrbitSpec {
    system: CsSystem,
    gen: Generator,
    seed: PhasePoint,
    topology: Topology,
}

/// True when the seed does not move under the generator.
pub fn is_fixed_point(system: &CsSystem, gen: &Generator, seed: &PhasePoint) -> Result<bool> {
    for chi in [0.5, 1.0] {
        let (p, _) = group_action(system, gen, chi, seed)?;
        if p.distance(seed).expect("same manifold") > 1e-12 {
            return Ok(false);
        }
    }
    Ok(true)
}

impl OrbitSpec {
    pub fn closed(system: CsSystem, gen: Generator, seed: PhasePoint, period: f64) -> Result<Self> {
        check_generator(&system, &gen)?;
        if is_fixed_point(&system, &gen, &seed)? {
            return Err(Error::FixedPoint);
        }
        if !(period > 0.0 && period.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "period {period} must be positive"
            )));
        }
        let (end, _) = group_action(&system, &gen, period, &seed)?;
        let miss = end.distance(&seed).expect("same manifold");
        if miss > 1e-10 {
            return Err(Error::OrbitNotClosed(miss));
        }
        Ok(OrbitSpec {
            system,
            gen,
            seed,
            topology: Topology::Closed { period },
        })
    }

    pub fn open(
        system: CsSystem,
        gen: Generator,
        seed: PhasePoint,
        chi_min: f64,
        chi_max: f64,
    ) -> Result<Self> {
        check_generator(&system, &gen)?;
        if is_fixed_point(&system, &gen, &seed)? {
            return Err(Error::FixedPoint);
        }
        if !(chi_min < 0.0 && chi_max > 0.0 && chi_min.is_finite() && chi_max.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "open window [{chi_min}, {chi_max}] must contain the seed strictly inside"
            )));
        }
        Ok(OrbitSpec {
            system,
            gen,
            seed,
            topology: Topology::Open { chi_min, chi_max },
        })
    }

    /// Symmetric open window |chi| <= sinh(U), U growing in steps of 1/4 until the
    /// coherent states at both ends have projection norm below 1e-12 on the
    /// truncated basis.
    pub fn open_adaptive(system: CsSystem, gen: Generator, seed: PhasePoint) -> Result<Self> {
        check_generator(&system, &gen)?;
        let mut u: f64 = 0.5;
        while u <= 14.0 {
            let x = u.sinh();
            let small = [-x, x].iter().try_fold(true, |ok, &chi| -> Result<bool> {
                let (p, _) = group_action(&system, &gen, chi, &seed)?;
                Ok(ok && cs_projection(&system, &p)?.norm() < 1e-12)
            })?;
            if small {
                return Self::open(system, gen, seed, -x, x);
            }
            u += 0.25;
        }
        Err(Error::NotConverged(format!(
            "{} orbit does not leave the truncated basis; increase the cutoff",
            gen.name()
        )))
    }

    /// Closed orbit of period 2 pi for compact generators, adaptive open window otherwise.
    pub fn natural(system: CsSystem, gen: Generator, seed: PhasePoint) -> Result<Self> {
        if gen.is_compact() {
            Self::closed(system, gen, seed, 2.0 * PI)
        } else {
            Self::open_adaptive(system, gen, seed)
        }
    }

    pub fn system(&self) -> &CsSystem {
        &self.system
    }

    pub fn generator(&self) -> &Generator {
        &self.gen
    }

    pub fn seed(&self) -> &PhasePoint {
        &self.seed
    }

    pub fn topology(&self) -> Topology {
        self.topology
    }

    pub fn period(&self) -> Option<f64> {
        match self.topology {
            Topology::Closed { period } => Some(period),
            Topology::Open { .. } => None,
        }
    }
}

/// A sampled orbit point with the phase of exp(-i chi T)|seed> relative to the
/// coherent state at that point.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct OrbitNode {
    pub chi: f64,
    pub point: PhasePoint,
    pub phase: f64,
}

/// `n` orbit points, uniform over [0, period) or over the open window.
pub fn orbit_points(spec: &OrbitSpec, n: usize) -> Result<Vec<OrbitNode>> {
    if n < 3 {
        return Err(Error::InvalidParameter(format!(
            "need at least 3 orbit points, got {n}"
        )));
    }
    let chis: Vec<f64> = match spec.topology {
        Topology::Closed { period } => (0..n).map(|i| period * i as f64 / n as f64).collect(),
        Topology::Open { chi_min, chi_max } => crate::numeric::linspace(chi_min, chi_max, n),
    };
    chis.into_iter()
        .map(|chi| {
            let (point, phase) = group_action(&spec.system, &spec.gen, chi, &spec.seed)?;
            Ok(OrbitNode { chi, point, phase })
        })
        .collect()
}

/// Seed of the in-phase orbit for eigenvalue `t0`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct InPhaseSeed {
    pub point: PhasePoint,
    /// The seed is a fixed point, so the eigenstate is the coherent state itself.
    pub fixed_point: bool,
    /// Description of other orbits sharing the same expectation value, if any.
    pub degeneracy: Option<String>,
}

fn out_of_range(value: f64, lo: f64, hi: f64) -> Error {
    Error::OutOfRange { value, lo, hi }
}

/// Seed on a canonical representative of the orbit where <T> = t0.
pub fn in_phase_seed(system: &CsSystem, gen: &Generator, t0: f64) -> Result<InPhaseSeed> {
    check_generator(system, gen)?;
    if !t0.is_finite() {
        return Err(Error::InvalidParameter("non-finite eigenvalue".into()));
    }
    let mut degeneracy = None;
    let point = match (system.kind(), gen) {
        (_, Generator::Q) => PhasePoint::plane(t0, 0.0),
        (_, Generator::P) => PhasePoint::plane(0.0, t0),
        (_, Generator::N) => {
            if t0 < 0.0 {
                return Err(out_of_range(t0, 0.0, f64::INFINITY));
            }
            PhasePoint::plane((2.0 * t0).sqrt(), 0.0)
        }
        (SystemKind::H4Scaled { s }, Generator::Ns) => {
            if t0 < 0.0 {
                return Err(out_of_range(t0, 0.0, f64::INFINITY));
            }
            PhasePoint::plane((2.0 * t0).sqrt() / s, 0.0)
        }
        (_, Generator::NTotal) => {
            if t0 < 0.0 {
                return Err(out_of_range(t0, 0.0, f64::INFINITY));
            }
            if t0 > 0.0 {
                degeneracy = Some(
                    "every split |z1|^2 + |z2|^2 = t0 gives a disjoint in-phase orbit; seed uses mode 1 only".into(),
                );
            }
            PhasePoint::two_mode((2.0 * t0).sqrt(), 0.0, 0.0, 0.0)
        }
        (SystemKind::Su2 { two_j }, Generator::Jz | Generator::Jn(_)) => {
            let j = two_j as f64 / 2.0;
            if t0.abs() > j {
                return Err(out_of_range(t0, -j, j));
            }
            let theta = (t0 / j).clamp(-1.0, 1.0).acos();
            match gen {
                Generator::Jn(axis) => {
                    let n = axis.components();
                    let e = perpendicular(n);
                    let (s, c) = theta.sin_cos();
                    let v = [
                        c * n[0] + s * e[0],
                        c * n[1] + s * e[1],
                        c * n[2] + s * e[2],
                    ];
                    PhasePoint::Sphere(SpherePoint::from_unit_vector(v)?)
                }
                _ => PhasePoint::sphere(theta, 0.0)?,
            }
        }
        (SystemKind::Su11 { k }, _) => match gen {
            Generator::K0 => {
                if t0 < k {
                    return Err(out_of_range(t0, k, f64::INFINITY));
                }
                let c = t0 / k;
                let r = (c + ((c - 1.0) * (c + 1.0)).sqrt()).ln();
                PhasePoint::disk_hyperbolic(r, 0.0)?
            }
            Generator::K1 => PhasePoint::disk_hyperbolic((t0 / k).asinh(), 0.0)?,
            Generator::K2 => PhasePoint::disk_hyperbolic((-t0 / k).asinh(), 0.5 * PI)?,
            Generator::K0PlusK1 => {
                if t0 <= 0.0 {
                    return Err(out_of_range(t0, 0.0, f64::INFINITY));
                }
                PhasePoint::disk_hyperbolic((t0 / k).ln(), 0.0)?
            }
            Generator::K0PlusK2 => {
                if t0 <= 0.0 {
                    return Err(out_of_range(t0, 0.0, f64::INFINITY));
                }
                PhasePoint::disk_hyperbolic((t0 / k).ln(), -0.5 * PI)?
            }
            _ => unreachable!("generator checked above"),
        },
        _ => unreachable!("generator checked above"),
    };
    let fixed_point = is_fixed_point(system, gen, &point)?;
    Ok(InPhaseSeed {
        point,
        fixed_point,
        degeneracy,
    })
}

fn perpendicular(n: [f64; 3]) -> [f64; 3] {
    // component of the least aligned basis vector orthogonal to n
    let i = (0..3)
        .min_by(|&a, &b| n[a].abs().partial_cmp(&n[b].abs()).expect("finite"))
        .expect("three components");
    let mut e = [0.0; 3];
    e[i] = 1.0;
    let d = n[i];
    let v = [e[0] - d * n[0], e[1] - d * n[1], e[2] - d * n[2]];
    let r = (v[0] * v[0] + v[1] * v[1] + v[2] * v[2]).sqrt();
    [v[0] / r, v[1] / r, v[2] / r]
}

/// Eigenvalues of the generator present in the seed, with their amplitudes.
fn spectral_amplitudes(
    system: &CsSystem,
    gen: &Generator,
    seed: &PhasePoint,
) -> Result<Vec<(f64, f64)>> {
    Ok(match (system.kind(), gen, seed) {
        (SystemKind::Su2 { two_j }, _, PhasePoint::Sphere(s)) => {
            let axis = match gen {
                Generator::Jn(a) => a.components(),
                _ => [0.0, 0.0, 1.0],
            };
            let u = s.unit_vector();
            let cos_beta = (axis[0] * u[0] + axis[1] * u[1] + axis[2] * u[2]).clamp(-1.0, 1.0);
            let j = two_j as f64 / 2.0;
            su2::coefficients(two_j, cos_beta.acos(), 0.0)
                .iter()
                .enumerate()
                .map(|(p, c)| (j - p as f64, c.norm()))
                .collect()
        }
        (SystemKind::H4TwoMode, _, _) => {
            let v = cs_projection(system, seed)?;
            let m = system.cutoff();
            let mut shells = vec![0.0; 2 * m - 1];
            for (i, c) in v.coeffs().iter().enumerate() {
                shells[i / m + i % m] += c.norm_sqr();
            }
            shells
                .into_iter()
                .enumerate()
                .map(|(n, w)| (n as f64, w.sqrt()))
                .collect()
        }
        (SystemKind::Su11 { k }, _, _) => cs_projection(system, seed)?
            .coeffs()
            .iter()
            .enumerate()
            .map(|(m, c)| (k + m as f64, c.norm()))
            .collect(),
        _ => cs_projection(system, seed)?
            .coeffs()
            .iter()
            .enumerate()
            .map(|(n, c)| (n as f64, c.norm()))
            .collect(),
    })
}

/// Eigenvalue of the generator on its fixed points, closest first to `t0`.
fn fixed_point_eigenvalues(system: &CsSystem) -> Vec<f64> {
    match system.kind() {
        SystemKind::Su2 { two_j } => vec![two_j as f64 / 2.0, -(two_j as f64) / 2.0],
        SystemKind::Su11 { k } => vec![k],
        _ => vec![0.0],
    }
}

/// Nodes and weights of a discretised orbit average with target eigenvalue t0.
#[derive(Debug, Clone, Serialize)]
pub struct SuperpositionPlan {
    orbit: OrbitSpec,
    t0: f64,
    chi: Vec<f64>,
    weights: Vec<f64>,
    period_nodes: usize,
    passes: usize,
}

impl SuperpositionPlan {
    pub fn new(orbit: OrbitSpec, t0: f64, nodes: usize) -> Result<Self> {
        Self::with_offset(orbit, t0, nodes, 0.0)
    }

    /// As [`SuperpositionPlan::new`] with the closed-orbit node set shifted by `offset`.
    pub fn with_offset(orbit: OrbitSpec, t0: f64, nodes: usize, offset: f64) -> Result<Self> {
        if !t0.is_finite() {
            return Err(Error::InvalidParameter("non-finite eigenvalue".into()));
        }
        match orbit.topology {
            Topology::Closed { period } => {
                if nodes < 4 {
                    return Err(Error::InvalidParameter(format!(
                        "need at least 4 nodes, got {nodes}"
                    )));
                }
                let p = period_nodes(&orbit, t0, nodes)?;
                let passes = (nodes / p).max(1);
                let mut chi = Vec::with_capacity(p * passes);
                let mut weights = Vec::with_capacity(p * passes);
                let ln_total = (passes as f64 - 1.0) * 2f64.ln();
                for l in 0..passes {
                    let w = (ln_binomial(passes as u32 - 1, l as u32) - ln_total).exp() / p as f64;
                    for r in 0..p {
                        chi.push(offset + period * (l * p + r) as f64 / p as f64);
                        weights.push(w);
                    }
                }
                Ok(SuperpositionPlan {
                    orbit,
                    t0,
                    chi,
                    weights,
                    period_nodes: p,
                    passes,
                })
            }
            Topology::Open { chi_min, chi_max } => {
                if nodes < 3 {
                    return Err(Error::InvalidParameter(format!(
                        "need at least 3 nodes, got {nodes}"
                    )));
                }
                let (u0, u1) = (chi_min.asinh(), chi_max.asinh());
                let h = (u1 - u0) / (nodes - 1) as f64;
                let mut chi = Vec::with_capacity(nodes);
                let mut weights = Vec::with_capacity(nodes);
                for i in 0..nodes {
                    let u = u0 + h * i as f64;
                    let end = if i == 0 || i == nodes - 1 { 0.5 } else { 1.0 };
                    chi.push(u.sinh());
                    weights.push(end * h * u.cosh());
                }
                Ok(SuperpositionPlan {
                    orbit,
                    t0,
                    chi,
                    weights,
                    period_nodes: nodes,
                    passes: 1,
                })
            }
        }
    }

    pub fn orbit(&self) -> &OrbitSpec {
        &self.orbit
    }

    pub fn t0(&self) -> f64 {
        self.t0
    }

    pub fn nodes(&self) -> &[f64] {
        &self.chi
    }

    /// Real quadrature weights (without the e^{i t0 chi} factor).
    pub fn quadrature_weights(&self) -> &[f64] {
        &self.weights
    }

    /// Complex weights w_i e^{i t0 chi_i}.
    pub fn weights(&self) -> Vec<C64> {
        self.chi
            .iter()
            .zip(&self.weights)
            .map(|(&x, &w)| cis(self.t0 * x) * w)
            .collect()
    }

    pub fn period_nodes(&self) -> usize {
        self.period_nodes
    }

    /// Number of weighted passes around a closed orbit (1 for open orbits).
    pub fn passes(&self) -> usize {
        self.passes
    }
}

/// Nodes per period: max(16, 8 (w + 1)) rounded up to a power of two, where w is the
/// number of 2 pi windings of the loop phase, doubled while a seed component other
/// than t0 would alias onto t0.
fn period_nodes(orbit: &OrbitSpec, t0: f64, nodes: usize) -> Result<usize> {
    let winding = fixed_point_eigenvalues(&orbit.system)
        .into_iter()
        .map(|l| (t0 - l).abs().round())
        .fold(f64::INFINITY, f64::min);
    let mut p = 16usize.max(8 * (winding as usize + 1)).next_power_of_two();
    let spectrum = spectral_amplitudes(&orbit.system, &orbit.gen, &orbit.seed)?;
    let peak = spectrum.iter().map(|x| x.1).fold(0.0, f64::max);
    let aliases = |p: usize| {
        spectrum.iter().any(|&(l, a)| {
            let d = (l - t0) / p as f64;
            a > 1e-10 * peak && d.round() != 0.0 && (d - d.round()).abs() < 1e-9
        })
    };
    while p < nodes && aliases(p) {
        p *= 2;
    }
    Ok(p.min(nodes))
}

/// Outcome of the loop-phase test on a closed orbit.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Quantization {
    /// Unreduced Pancharatnam phase accumulated over one period.
    pub pancharatnam_total: f64,
    pub geometric: f64,
    pub dynamical: f64,
    /// Integer k of the nearest multiple 2 pi k.
    pub nearest_multiple: i64,
    pub defect: f64,
}

/// An eigenstate built from an orbit average.
#[derive(Debug, Clone)]
pub struct EigenstateResult {
    /// Normalised superposition, or the raw superposition when `is_null`.
    pub state: StateVector,
    /// Norm of the average per unit parameter length.
    pub raw_norm: f64,
    /// Mean norm of the node coherent states on the truncated basis.
    pub mean_node_norm: f64,
    /// |P (T - t0) psi| / |P psi| with psi built one level beyond the truncation P.
    pub residual: f64,
    pub quantization: Option<Quantization>,
    /// raw_norm below 1e-8 of the mean node norm: the superposition vanishes.
    pub is_null: bool,
    pub fixed_point: bool,
    pub tail_ratio: f64,
    pub nodes_used: usize,
    pub passes: usize,
}

/// Applies T on the guarded basis and keeps the rows of the working basis.
fn guarded_residual(
    system: &CsSystem,
    gen: &Generator,
    t0: f64,
    ext: &[C64],
) -> Result<(f64, Vec<C64>)> {
    let guarded = system.guarded();
    let tv = crate::cs::apply_generator(&guarded, gen, ext)?;
    let keep = working_rows(system);
    let mut diff = 0.0;
    let mut kept = Vec::with_capacity(keep.len());
    for &i in &keep {
        diff += (tv[i] - ext[i] * t0).norm_sqr();
        kept.push(ext[i]);
    }
    let n = norm(&kept);
    Ok((diff.sqrt() / n, kept))
}

/// Indices of the guarded basis that belong to the working basis.
fn working_rows(system: &CsSystem) -> Vec<usize> {
    let g = system.guarded();
    match system.kind() {
        SystemKind::H4TwoMode => {
            let (m, gm) = (system.cutoff(), g.cutoff());
            (0..m)
                .flat_map(|a| (0..m).map(move |b| a * gm + b))
                .collect()
        }
        _ => (0..system.dim()).collect(),
    }
}

/// Builds sum_i w_i e^{i t0 chi_i} exp(-i chi_i T)|seed> and measures it.
pub fn build_eigenstate(plan: &SuperpositionPlan) -> Result<EigenstateResult> {
    let orbit = &plan.orbit;
    let system = orbit.system;
    let guarded = system.guarded();
    let dim = guarded.dim();
    let nodes: Vec<(f64, f64)> = plan
        .chi
        .iter()
        .copied()
        .zip(plan.weights.iter().copied())
        .collect();

    let partial: Vec<Result<(Vec<C64>, f64)>> = nodes
        .par_chunks(CHUNK)
        .map(|chunk| {
            let mut acc = vec![C64::new(0.0, 0.0); dim];
            let mut node_norms = 0.0;
            for &(chi, w) in chunk {
                let v = transported_projection(&guarded, &orbit.gen, chi, &orbit.seed)?;
                let f = cis(plan.t0 * chi) * w;
                for (a, c) in acc.iter_mut().zip(v.coeffs()) {
                    *a += f * c;
                }
                node_norms += norm_on_rows(&system, v.coeffs());
            }
            Ok((acc, node_norms))
        })
        .collect();
    let mut sum = vec![C64::new(0.0, 0.0); dim];
    let mut node_norms = 0.0;
    for part in partial {
        let (acc, n) = part?;
        for (s, a) in sum.iter_mut().zip(acc) {
            *s += a;
        }
        node_norms += n;
    }
    let mean_node_norm = node_norms / nodes.len() as f64;
    let length = match orbit.topology {
        Topology::Closed { .. } => 1.0,
        Topology::Open { chi_min, chi_max } => chi_max - chi_min,
    };

    let (residual, kept) = guarded_residual(&system, &orbit.gen, plan.t0, &sum)?;
    let raw = StateVector::new(system, kept)?;
    let raw_norm = raw.norm() / length;
    let is_null = raw_norm < 1e-8 * mean_node_norm;
    let state = if is_null { raw } else { raw.normalized()? };
    let tail_ratio = state.tail_ratio();

    let quantization = match orbit.topology {
        Topology::Closed { .. } => {
            let winding = fixed_point_eigenvalues(&system)
                .into_iter()
                .map(|l| (plan.t0 - l).abs().ceil() as usize)
                .min()
                .unwrap_or(0);
            let samples = (32 * (winding + 1))
                .max(plan.period_nodes)
                .next_power_of_two();
            Some(quantization_check(orbit, plan.t0, samples)?)
        }
        Topology::Open { .. } => None,
    };
    if matches!(orbit.topology, Topology::Closed { .. }) && !is_null && tail_ratio >= 1e-10 {
        return Err(Error::TruncationInadequate {
            cutoff: system.cutoff(),
            ratio: tail_ratio,
        });
    }
    Ok(EigenstateResult {
        state,
        raw_norm,
        mean_node_norm,
        residual,
        quantization,
        is_null,
        fixed_point: false,
        tail_ratio,
        nodes_used: nodes.len(),
        passes: plan.passes,
    })
}

fn norm_on_rows(system: &CsSystem, guarded_coeffs: &[C64]) -> f64 {
    working_rows(system)
        .into_iter()
        .map(|i| guarded_coeffs[i].norm_sqr())
        .sum::<f64>()
        .sqrt()
}

/// Eigenstate for eigenvalue t0 from the in-phase orbit; when the in-phase seed is a
/// fixed point the coherent state itself is returned.
pub fn eigenstate_in_phase(
    system: &CsSystem,
    gen: &Generator,
    t0: f64,
    nodes: usize,
) -> Result<EigenstateResult> {
    let seed = in_phase_seed(system, gen, t0)?;
    if seed.fixed_point {
        let ext = cs_projection(&system.guarded(), &seed.point)?;
        let (residual, kept) = guarded_residual(system, gen, t0, ext.coeffs())?;
        let state = StateVector::new(*system, kept)?.normalized()?;
        let tail_ratio = state.tail_ratio();
        return Ok(EigenstateResult {
            state,
            raw_norm: 1.0,
            mean_node_norm: 1.0,
            residual,
            quantization: None,
            is_null: false,
            fixed_point: true,
            tail_ratio,
            nodes_used: 1,
            passes: 1,
        });
    }
    let orbit = OrbitSpec::natural(*system, *gen, seed.point)?;
    build_eigenstate(&SuperpositionPlan::new(orbit, t0, nodes)?)
}

/// Coherent state at the fixed point of a compact generator that overlaps most
/// with the seed.
fn fixed_point_reference(orbit: &OrbitSpec) -> Result<StateVector> {
    let system = &orbit.system;
    let candidates: Vec<PhasePoint> = match (system.kind(), &orbit.gen) {
        (SystemKind::H4 | SystemKind::H4Scaled { .. }, _) => vec![PhasePoint::plane(0.0, 0.0)],
        (SystemKind::H4TwoMode, _) => vec![PhasePoint::two_mode(0.0, 0.0, 0.0, 0.0)],
        (SystemKind::Su2 { .. }, g) => {
            let n = match g {
                Generator::Jn(a) => a.components(),
                _ => [0.0, 0.0, 1.0],
            };
            vec![
                PhasePoint::Sphere(SpherePoint::from_unit_vector(n)?),
                PhasePoint::Sphere(SpherePoint::from_unit_vector([-n[0], -n[1], -n[2]])?),
            ]
        }
        (SystemKind::Su11 { .. }, _) => vec![PhasePoint::disk(C64::new(0.0, 0.0))?],
    };
    let seed = cs_projection(system, &orbit.seed)?;
    let mut best: Option<(f64, StateVector)> = None;
    for c in candidates {
        let v = cs_projection(system, &c)?;
        let o = v.inner(&seed)?.norm();
        if best.as_ref().is_none_or(|(b, _)| o > *b) {
            best = Some((o, v));
        }
    }
    Ok(best.expect("at least one candidate").1)
}

/// Pancharatnam phase accumulated by e^{i t0 chi} exp(-i chi T)|seed> over one
/// period, and its distance to the nearest multiple of 2 pi.
pub fn quantization_check(orbit: &OrbitSpec, t0: f64, nodes: usize) -> Result<Quantization> {
    let period = orbit.period().ok_or(Error::OpenOrbit)?;
    if nodes < 4 {
        return Err(Error::InvalidParameter(format!(
            "need at least 4 nodes, got {nodes}"
        )));
    }
    let samples = (0..=nodes)
        .map(|i| {
            let chi = period * i as f64 / nodes as f64;
            let v = transported_projection(&orbit.system, &orbit.gen, chi, &orbit.seed)?;
            Ok((chi, v.scaled(cis(t0 * chi))))
        })
        .collect::<Result<Vec<_>>>()?;
    let curve = StateCurve::closed(samples)?;
    let reference = fixed_point_reference(orbit)?;
    let report = geometric_phase_with_reference(&curve, &reference)?;
    let (k, defect) = nearest_two_pi_multiple(report.pancharatnam);
    Ok(Quantization {
        pancharatnam_total: report.pancharatnam,
        geometric: report.geometric,
        dynamical: report.dynamical,
        nearest_multiple: k,
        defect,
    })
}

/// Analytic normalisation constant N along a family of circular orbits.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct NormalizationScan {
    /// (orbit parameter, N) pairs.
    pub samples: Vec<(f64, f64)>,
    pub argmin: f64,
    pub min: f64,
}

/// N(param) for the eigenvalue label `label` over the orbit parameter grid: the
/// radius r0 for n, the semi-axis a for n_s, the polar angle for J_z and the
/// hyperbolic radius R for K_0. N is smallest on the in-phase orbit.
pub fn normalization_scan(
    system: &CsSystem,
    gen: &Generator,
    label: f64,
    grid: &[f64],
) -> Result<NormalizationScan> {
    check_generator(system, gen)?;
    let integral = |x: f64| (x - x.round()).abs() < 1e-12;
    let ln_fact = |m: usize| (1..=m).map(|i| (i as f64).ln()).sum::<f64>();
    let ln2pi = (2.0 * PI).ln();
    let ln_n: Box<dyn Fn(f64) -> f64> = match (system.kind(), gen) {
        (SystemKind::H4, Generator::N) | (SystemKind::H4Scaled { .. }, Generator::Ns) => {
            if !(label >= 0.0 && integral(label)) {
                return Err(Error::InvalidParameter(format!(
                    "number eigenvalue {label} must be a natural number"
                )));
            }
            let m = label.round() as usize;
            let s = match system.kind() {
                SystemKind::H4Scaled { s } => s,
                _ => 1.0,
            };
            let lf = ln_fact(m);
            Box::new(move |r: f64| {
                let x = r * s;
                if x == 0.0 {
                    return if m == 0 { -ln2pi } else { f64::INFINITY };
                }
                0.5 * lf - ln2pi + m as f64 * (0.5 * 2f64.ln() - x.ln()) + 0.25 * x * x
            })
        }
        (SystemKind::Su2 { two_j }, Generator::Jz) => {
            let j = two_j as f64 / 2.0;
            if !(label.abs() <= j && integral(j - label)) {
                return Err(Error::InvalidParameter(format!(
                    "m = {label} is not a weight of spin {j}"
                )));
            }
            let up = (j + label).round() as u32;
            let down = (j - label).round() as u32;
            let lb = ln_binomial(two_j, up);
            Box::new(move |theta: f64| {
                let (s, c) = (0.5 * theta).sin_cos();
                let lc = if up == 0 {
                    0.0
                } else {
                    up as f64 * c.abs().ln()
                };
                let ls = if down == 0 {
                    0.0
                } else {
                    down as f64 * s.abs().ln()
                };
                -(ln2pi + 0.5 * lb + lc + ls)
            })
        }
        (SystemKind::Su11 { k }, Generator::K0) => {
            if !(label >= 0.0 && integral(label)) {
                return Err(Error::InvalidParameter(format!(
                    "K0 level {label} must be a natural number"
                )));
            }
            let m = label.round() as usize;
            let ln_ratio: f64 = (0..m)
                .map(|i| (2.0 * k + i as f64).ln() - (i as f64 + 1.0).ln())
                .sum();
            Box::new(move |r: f64| {
                let h = 0.5 * r;
                let ln_tanh = if m == 0 { 0.0 } else { h.tanh().abs().ln() };
                -(ln2pi + 0.5 * ln_ratio + m as f64 * ln_tanh - 2.0 * k * h.cosh().ln())
            })
        }
        _ => {
            return Err(Error::Unsupported(format!(
                "normalisation scan for {} on {}",
                gen.name(),
                system
            )))
        }
    };
    let samples: Vec<(f64, f64)> = grid.iter().map(|&x| (x, ln_n(x).exp())).collect();
    let (argmin, min) = samples
        .iter()
        .copied()
        .fold((f64::NAN, f64::INFINITY), |best, s| {
            if s.1 < best.1 {
                s
            } else {
                best
            }
        });
    Ok(NormalizationScan {
        samples,
        argmin,
        min,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cs::expectation_generator;

    fn fock(sys: &CsSystem, m: usize) -> StateVector {
        StateVector::basis(*sys, m).unwrap()
    }

    #[test]
    fn in_phase_seeds() {
        let h4 = CsSystem::h4(64).unwrap();
        let s = in_phase_seed(&h4, &Generator::N, 3.0).unwrap();
        let (q, p) = s.point.as_plane().unwrap();
        assert!((q - 6f64.sqrt()).abs() < 1e-15 && p == 0.0);

        let spin = CsSystem::su2(4).unwrap();
        let s = in_phase_seed(&spin, &Generator::Jz, 1.0).unwrap();
        assert!((s.point.as_sphere().unwrap().theta() - PI / 3.0).abs() < 1e-14);
        assert!(
            in_phase_seed(&spin, &Generator::Jz, 2.0)
                .unwrap()
                .fixed_point
        );
        assert!(matches!(
            in_phase_seed(&spin, &Generator::Jz, 2.5),
            Err(Error::OutOfRange { .. })
        ));

        let disk = CsSystem::su11(3.0, 200).unwrap();
        let s = in_phase_seed(&disk, &Generator::K2, 2.0).unwrap();
        let d = s.point.as_disk().unwrap();
        let sinh_tau = d.tau().sinh();
        assert!((sinh_tau * d.zeta().arg().sin() + 2.0 / 3.0).abs() < 1e-12);
        assert!(matches!(
            in_phase_seed(&disk, &Generator::K0, 2.0),
            Err(Error::OutOfRange { .. })
        ));
    }

    #[test]
    fn seed_expectations_match_target() {
        let cases: Vec<(CsSystem, Generator, f64)> = vec![
            (CsSystem::h4(64).unwrap(), Generator::N, 2.7),
            (CsSystem::h4(64).unwrap(), Generator::Q, -1.2),
            (CsSystem::h4(64).unwrap(), Generator::P, 0.8),
            (CsSystem::h4_scaled(1.5, 64).unwrap(), Generator::Ns, 2.0),
            (CsSystem::h4_two_mode(24).unwrap(), Generator::NTotal, 1.0),
            (CsSystem::su2(5).unwrap(), Generator::Jz, -0.5),
            (
                CsSystem::su2(5).unwrap(),
                Generator::jn([0.6, 0.0, 0.8]).unwrap(),
                1.5,
            ),
            (CsSystem::su11(0.75, 200).unwrap(), Generator::K0, 2.75),
            (CsSystem::su11(0.75, 200).unwrap(), Generator::K1, -1.0),
            (CsSystem::su11(0.75, 200).unwrap(), Generator::K2, 1.3),
            (CsSystem::su11(0.75, 200).unwrap(), Generator::K0PlusK1, 2.0),
            (CsSystem::su11(0.75, 200).unwrap(), Generator::K0PlusK2, 0.4),
        ];
        for (sys, gen, t0) in cases {
            let s = in_phase_seed(&sys, &gen, t0).unwrap();
            let e = expectation_generator(&sys, &gen, &s.point).unwrap();
            assert!((e - t0).abs() < 1e-12, "{} {t0}: {e}", gen.name());
        }
    }

    #[test]
    fn fock_state_from_in_phase_circle() {
        let sys = CsSystem::h4(64).unwrap();
        let r = eigenstate_in_phase(&sys, &Generator::N, 2.0, 256).unwrap();
        assert!(r.state.fidelity(&fock(&sys, 2)).unwrap() >= 1.0 - 1e-10);
        assert!(r.residual < 1e-6);
        let q = r.quantization.unwrap();
        assert!(q.defect < 1e-8);
        assert_eq!(q.nearest_multiple, 2);
        assert!((q.pancharatnam_total - 4.0 * PI).abs() < 1e-8);
    }

    #[test]
    fn unquantized_circle_is_null() {
        let sys = CsSystem::h4(64).unwrap();
        let seed = PhasePoint::plane(2.6f64.sqrt(), 0.0);
        let orbit = OrbitSpec::closed(sys, Generator::N, seed, 2.0 * PI).unwrap();
        let r = build_eigenstate(&SuperpositionPlan::new(orbit, 1.3, 1024).unwrap()).unwrap();
        assert!(r.raw_norm < 1e-8, "{}", r.raw_norm);
        assert!(r.is_null);
        assert!(r.quantization.unwrap().defect > 0.1);
    }

    #[test]
    fn position_eigenstate_peaks_at_label() {
        let sys = CsSystem::h4(96).unwrap();
        let r = eigenstate_in_phase(&sys, &Generator::Q, 0.7, DEFAULT_OPEN_NODES).unwrap();
        assert!(r.residual < 1e-4, "{}", r.residual);
        assert!(r.quantization.is_none());
    }

    #[test]
    fn two_mode_orbits_give_distinct_states() {
        let sys = CsSystem::h4_two_mode(24).unwrap();
        let build = |seed| {
            let orbit = OrbitSpec::closed(sys, Generator::NTotal, seed, 2.0 * PI).unwrap();
            build_eigenstate(&SuperpositionPlan::new(orbit, 1.0, 256).unwrap()).unwrap()
        };
        let a = build(PhasePoint::two_mode(2f64.sqrt(), 0.0, 0.0, 0.0));
        let b = build(PhasePoint::two_mode(0.0, 0.0, 2f64.sqrt(), 0.0));
        // |1,0> is index 1*24 + 0, |0,1> is index 1
        assert!(
            a.state
                .fidelity(&StateVector::basis(sys, 24).unwrap())
                .unwrap()
                > 1.0 - 1e-10
        );
        assert!(
            b.state
                .fidelity(&StateVector::basis(sys, 1).unwrap())
                .unwrap()
                > 1.0 - 1e-10
        );
        assert!(a.state.inner(&b.state).unwrap().norm() < 1e-10);
    }

    #[test]
    fn quantization_examples() {
        let sys = CsSystem::h4(64).unwrap();
        for m in 1..4 {
            let seed = PhasePoint::plane((2.0 * m as f64).sqrt(), 0.0);
            let orbit = OrbitSpec::closed(sys, Generator::N, seed, 2.0 * PI).unwrap();
            let q = quantization_check(&orbit, m as f64, 256).unwrap();
            assert!(q.defect < 1e-8);
            assert!((q.pancharatnam_total - 2.0 * PI * m as f64).abs() < 1e-8);
        }

        let spin = CsSystem::su2(4).unwrap();
        let orbit = OrbitSpec::closed(
            spin,
            Generator::Jz,
            PhasePoint::sphere(1.0, 0.0).unwrap(),
            2.0 * PI,
        )
        .unwrap();
        for (t0, ok) in [(1.0, true), (-2.0, true), (0.5, false), (0.3, false)] {
            let q = quantization_check(&orbit, t0, 256).unwrap();
            assert_eq!(q.defect < 1e-8, ok, "t0={t0} defect={}", q.defect);
        }

        let disk = CsSystem::su11(3.0, 300).unwrap();
        for r in [0.4, 1.1] {
            let orbit = OrbitSpec::closed(
                disk,
                Generator::K0,
                PhasePoint::disk_hyperbolic(r, 0.0).unwrap(),
                2.0 * PI,
            )
            .unwrap();
            assert!(quantization_check(&orbit, 5.0, 256).unwrap().defect < 1e-8);
            assert!(quantization_check(&orbit, 5.5, 256).unwrap().defect > 1e-3);
        }

        let open =
            OrbitSpec::open(sys, Generator::Q, PhasePoint::plane(0.0, 0.0), -8.0, 8.0).unwrap();
        assert!(matches!(
            quantization_check(&open, 0.0, 64),
            Err(Error::OpenOrbit)
        ));
    }

    #[test]
    fn orbit_validation() {
        let sys = CsSystem::h4(64).unwrap();
        assert!(matches!(
            OrbitSpec::closed(sys, Generator::N, PhasePoint::plane(0.0, 0.0), 2.0 * PI),
            Err(Error::FixedPoint)
        ));
        assert!(matches!(
            OrbitSpec::closed(sys, Generator::N, PhasePoint::plane(1.0, 0.0), 3.0),
            Err(Error::OrbitNotClosed(_))
        ));
    }

    #[test]
    fn orbit_point_examples() {
        let sys = CsSystem::h4(64).unwrap();
        let orbit =
            OrbitSpec::closed(sys, Generator::N, PhasePoint::plane(2.0, 0.0), 2.0 * PI).unwrap();
        let pts = orbit_points(&orbit, 4).unwrap();
        // clockwise: (2,0), (0,-2), (-2,0), (0,2)
        let expect = [(2.0, 0.0), (0.0, -2.0), (-2.0, 0.0), (0.0, 2.0)];
        for (n, e) in pts.iter().zip(expect) {
            let (q, p) = n.point.as_plane().unwrap();
            assert!((q - e.0).abs() < 1e-14 && (p - e.1).abs() < 1e-14);
        }

        let disk = CsSystem::su11(3.0, 400).unwrap();
        let tau0 = 0.9f64;
        let seed = PhasePoint::disk_hyperbolic(tau0, 0.5 * PI).unwrap();
        let orbit = OrbitSpec::open(disk, Generator::K2, seed, -6.0, 6.0).unwrap();
        for n in orbit_points(&orbit, 41).unwrap() {
            let d = n.point.as_disk().unwrap();
            assert!((d.tau().sinh() * d.zeta().arg().sin() - tau0.sinh()).abs() < 1e-10);
        }
        let seed = PhasePoint::disk_hyperbolic(tau0, 0.0).unwrap();
        let orbit = OrbitSpec::open(disk, Generator::K0PlusK1, seed, -6.0, 6.0).unwrap();
        for n in orbit_points(&orbit, 41).unwrap() {
            let d = n.point.as_disk().unwrap();
            let t = d.tau();
            let v = t.cosh() * (1.0 + t.tanh() * d.zeta().arg().cos());
            assert!((v - tau0.exp()).abs() < 1e-10 * tau0.exp().max(v), "{v}");
        }
    }

    #[test]
    fn normalization_scan_minima() {
        let h4 = CsSystem::h4(64).unwrap();
        let grid: Vec<f64> = (1..=400).map(|i| i as f64 * 0.01).collect();
        let s = normalization_scan(&h4, &Generator::N, 2.0, &grid).unwrap();
        assert!((s.argmin - 2.0).abs() <= 0.01);
        // analytic value at the minimum: sqrt(2)/(2 pi) (sqrt 2/2)^2 e
        assert!((s.min - 2f64.sqrt() / (2.0 * PI) * 0.5 * 1f64.exp()).abs() < 1e-12);

        let spin = CsSystem::su2(4).unwrap();
        let grid: Vec<f64> = (1..1000).map(|i| i as f64 * PI / 1000.0).collect();
        let s = normalization_scan(&spin, &Generator::Jz, 1.0, &grid).unwrap();
        assert!((s.argmin - PI / 3.0).abs() <= PI / 1000.0);

        let disk = CsSystem::su11(3.0, 100).unwrap();
        let grid: Vec<f64> = (1..=3000).map(|i| i as f64 * 1e-3).collect();
        let s = normalization_scan(&disk, &Generator::K0, 2.0, &grid).unwrap();
        assert!((s.argmin.cosh() - 5.0 / 3.0).abs() < 3e-3);

        assert!(matches!(
            normalization_scan(&disk, &Generator::K2, 2.0, &grid),
            Err(Error::Unsupported(_))
        ));
    }

    #[test]
    fn plan_weights_sum_to_one() {
        let sys = CsSystem::h4(64).unwrap();
        let orbit =
            OrbitSpec::closed(sys, Generator::N, PhasePoint::plane(1.5, 0.0), 2.0 * PI).unwrap();
        let plan = SuperpositionPlan::new(orbit, 1.3, 1024).unwrap();
        assert_eq!(plan.period_nodes(), 16);
        assert_eq!(plan.passes(), 64);
        let s: f64 = plan.quadrature_weights().iter().sum();
        assert!((s - 1.0).abs() < 1e-14);
    }
}
