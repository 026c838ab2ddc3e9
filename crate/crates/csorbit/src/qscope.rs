//! Husimi Q fields: point values, grids, one-dimensional maxima and invariance
//! along orbits.

use crate::cs::{cs_projection, CsSystem, Manifold, PhasePoint, StateVector};
use crate::error::{Error, Result};
use crate::numeric::{linspace, C64};
use crate::orbit::{orbit_points, OrbitSpec};
use rayon::prelude::*;
use serde::Serialize;
use std::f64::consts::PI;

/// Coordinate chart of a grid.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Chart {
    /// x = q, y = p.
    Plane,
    /// x = phi, y = theta.
    Sphere,
    /// Cartesian Poincare coordinates, zeta = x + i y.
    Disk,
}

/// Rectangular grid over a chart; x varies along rows.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GridSpec {
    chart: Chart,
    x_range: (f64, f64),
    y_range: (f64, f64),
    nx: usize,
    ny: usize,
}

/// Disk cells closer to the rim than this are masked.
pub const DISK_MASK_MARGIN: f64 = 1e-9;

impl GridSpec {
    fn new(
        chart: Chart,
        x_range: (f64, f64),
        y_range: (f64, f64),
        nx: usize,
        ny: usize,
    ) -> Result<Self> {
        if nx < 2 || ny < 2 {
            return Err(Error::InvalidParameter(format!(
                "grid resolution {nx}x{ny} below 2 per axis"
            )));
        }
        if !(x_range.0 < x_range.1 && y_range.0 < y_range.1) {
            return Err(Error::InvalidParameter(
                "grid ranges must be increasing".into(),
            ));
        }
        Ok(GridSpec {
            chart,
            x_range,
            y_range,
            nx,
            ny,
        })
    }

    pub fn plane(q_range: (f64, f64), p_range: (f64, f64), nx: usize, ny: usize) -> Result<Self> {
        Self::new(Chart::Plane, q_range, p_range, nx, ny)
    }

    /// phi over [0, 2 pi], theta over [0, pi].
    pub fn sphere(n_phi: usize, n_theta: usize) -> Result<Self> {
        Self::new(Chart::Sphere, (0.0, 2.0 * PI), (0.0, PI), n_phi, n_theta)
    }

    /// The square [-1, 1]^2 with cells outside the disk masked.
    pub fn disk(nx: usize, ny: usize) -> Result<Self> {
        Self::new(Chart::Disk, (-1.0, 1.0), (-1.0, 1.0), nx, ny)
    }

    pub fn chart(&self) -> Chart {
        self.chart
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.nx, self.ny)
    }

    pub fn x_range(&self) -> (f64, f64) {
        self.x_range
    }

    pub fn y_range(&self) -> (f64, f64) {
        self.y_range
    }

    pub fn xs(&self) -> Vec<f64> {
        linspace(self.x_range.0, self.x_range.1, self.nx)
    }

    pub fn ys(&self) -> Vec<f64> {
        linspace(self.y_range.0, self.y_range.1, self.ny)
    }

    pub fn manifold(&self) -> Manifold {
        match self.chart {
            Chart::Plane => Manifold::Plane,
            Chart::Sphere => Manifold::Sphere,
            Chart::Disk => Manifold::Disk,
        }
    }

    /// Phase-space point at chart coordinates, `None` when masked.
    pub fn point_at(&self, x: f64, y: f64) -> Option<PhasePoint> {
        match self.chart {
            Chart::Plane => Some(PhasePoint::plane(x, y)),
            Chart::Sphere => PhasePoint::sphere(y, x).ok(),
            Chart::Disk => {
                let z = C64::new(x, y);
                if z.norm() >= 1.0 - DISK_MASK_MARGIN {
                    None
                } else {
                    PhasePoint::disk(z).ok()
                }
            }
        }
    }
}

/// Measure convention of stored Q values.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum QConvention {
    /// |<alpha|psi>|^2.
    Raw,
    /// |<alpha|psi>|^2 / (2 pi), a density for dq dp.
    H4Normalized,
}

impl QConvention {
    fn factor(self) -> f64 {
        match self {
            QConvention::Raw => 1.0,
            QConvention::H4Normalized => 1.0 / (2.0 * PI),
        }
    }
}

/// Q values on a grid, row-major with `ny` rows of `nx` values.
#[derive(Debug, Clone, Serialize)]
pub struct QField {
    pub grid: GridSpec,
    pub values: Vec<f64>,
    /// false for masked cells, whose value is stored as 0.
    pub mask: Vec<bool>,
    pub convention: QConvention,
}

impl QField {
    pub fn get(&self, ix: usize, iy: usize) -> Option<f64> {
        let i = iy * self.grid.nx + ix;
        self.mask[i].then(|| self.values[i])
    }

    /// (ix, iy, value) of the largest unmasked cell.
    pub fn argmax(&self) -> (usize, usize, f64) {
        let mut best = (0, 0, f64::NEG_INFINITY);
        for (i, (&v, &m)) in self.values.iter().zip(&self.mask).enumerate() {
            if m && v > best.2 {
                best = (i % self.grid.nx, i / self.grid.nx, v);
            }
        }
        best
    }

    /// (min, max) over unmasked cells.
    pub fn range(&self) -> (f64, f64) {
        self.values
            .iter()
            .zip(&self.mask)
            .filter(|(_, &m)| m)
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), (&v, _)| {
                (lo.min(v), hi.max(v))
            })
    }

    /// Trapezoid integral of the stored values over the chart coordinates.
    pub fn integral(&self) -> f64 {
        let (nx, ny) = (self.grid.nx, self.grid.ny);
        let hx = (self.grid.x_range.1 - self.grid.x_range.0) / (nx - 1) as f64;
        let hy = (self.grid.y_range.1 - self.grid.y_range.0) / (ny - 1) as f64;
        let edge = |i: usize, n: usize| if i == 0 || i == n - 1 { 0.5 } else { 1.0 };
        let mut s = 0.0;
        for iy in 0..ny {
            for ix in 0..nx {
                s += edge(ix, nx) * edge(iy, ny) * self.values[iy * nx + ix];
            }
        }
        s * hx * hy
    }
}

/// |<point|state>|^2 on the truncated basis.
pub fn q_value(system: &CsSystem, state: &StateVector, point: &PhasePoint) -> Result<f64> {
    if state.system() != system {
        return Err(Error::DimensionMismatch(system.dim(), state.len()));
    }
    let cs = cs_projection(system, point)?;
    Ok(cs.inner(state)?.norm_sqr())
}

/// Q over a grid, rows evaluated in parallel.
pub fn q_grid(
    system: &CsSystem,
    state: &StateVector,
    grid: &GridSpec,
    convention: QConvention,
) -> Result<QField> {
    if grid.manifold() != system.manifold() {
        return Err(Error::ManifoldMismatch {
            expected: system.manifold().name(),
            found: grid.manifold().name(),
        });
    }
    let xs = grid.xs();
    let f = convention.factor();
    let rows: Vec<Result<Vec<(f64, bool)>>> = grid
        .ys()
        .par_iter()
        .map(|&y| {
            xs.iter()
                .map(|&x| match grid.point_at(x, y) {
                    Some(p) => Ok((q_value(system, state, &p)? * f, true)),
                    None => Ok((0.0, false)),
                })
                .collect()
        })
        .collect();
    let mut values = Vec::with_capacity(grid.nx * grid.ny);
    let mut mask = Vec::with_capacity(grid.nx * grid.ny);
    for row in rows {
        for (v, m) in row? {
            values.push(v);
            mask.push(m);
        }
    }
    Ok(QField {
        grid: grid.clone(),
        values,
        mask,
        convention,
    })
}

const PRESCAN: usize = 64;
const PROMINENCE: f64 = 1e-9;

/// Sampled local maxima with prominence above the threshold.
fn prominent_maxima(ys: &[f64]) -> Vec<usize> {
    let n = ys.len();
    let mut peaks = Vec::new();
    let mut i = 0;
    while i < n {
        // plateau [i, j]
        let mut j = i;
        while j + 1 < n && ys[j + 1] == ys[i] {
            j += 1;
        }
        let left_ok = i == 0 || ys[i - 1] < ys[i];
        let right_ok = j == n - 1 || ys[j + 1] < ys[i];
        if left_ok && right_ok {
            peaks.push((i + j) / 2);
        }
        i = j + 1;
    }
    peaks
        .into_iter()
        .filter(|&p| {
            let v = ys[p];
            let side_min = |range: &mut dyn Iterator<Item = usize>| {
                let mut m = v;
                for k in range {
                    if ys[k] > v {
                        return m;
                    }
                    m = m.min(ys[k]);
                }
                // no higher point on this side: the reference is the global floor
                f64::NEG_INFINITY
            };
            let l = side_min(&mut (0..p).rev());
            let r = side_min(&mut (p + 1..n));
            let base = match (l.is_finite(), r.is_finite()) {
                (true, true) => l.max(r),
                (true, false) => l,
                (false, true) => r,
                (false, false) => ys.iter().copied().fold(f64::INFINITY, f64::min),
            };
            v - base > PROMINENCE
        })
        .collect()
}

fn golden_max<F: Fn(f64) -> f64>(f: &F, mut a: f64, mut b: f64, tol: f64) -> (f64, f64) {
    let g = (5f64.sqrt() - 1.0) / 2.0;
    let mut c = b - g * (b - a);
    let mut d = a + g * (b - a);
    let (mut fc, mut fd) = (f(c), f(d));
    while (b - a).abs() > tol {
        if fc > fd {
            b = d;
            d = c;
            fd = fc;
            c = b - g * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + g * (b - a);
            fd = f(d);
        }
    }
    let x = 0.5 * (a + b);
    (x, f(x))
}

fn check_bracket(bracket: (f64, f64), tol: f64) -> Result<()> {
    if !(bracket.0 < bracket.1 && tol > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "bracket {bracket:?} must be increasing and tolerance {tol} positive"
        )));
    }
    Ok(())
}

fn refine_around<F: Fn(f64) -> f64>(f: &F, xs: &[f64], i: usize, tol: f64) -> (f64, f64) {
    let a = xs[i.saturating_sub(1)];
    let b = xs[(i + 1).min(xs.len() - 1)];
    golden_max(f, a, b, tol)
}

/// Maximum of a unimodal profile: 64-sample pre-scan, then golden-section search.
pub fn locate_q_max_1d<F: Fn(f64) -> f64>(
    profile: F,
    bracket: (f64, f64),
    tol: f64,
) -> Result<(f64, f64)> {
    check_bracket(bracket, tol)?;
    let xs = linspace(bracket.0, bracket.1, PRESCAN);
    let ys: Vec<f64> = xs.iter().map(|&x| profile(x)).collect();
    let peaks = prominent_maxima(&ys);
    if peaks.len() >= 2 {
        return Err(Error::NotUnimodal {
            maxima: peaks.iter().map(|&i| (xs[i], ys[i])).collect(),
        });
    }
    let i = match peaks.first() {
        Some(&i) => i,
        None => (0..xs.len())
            .max_by(|&a, &b| ys[a].partial_cmp(&ys[b]).expect("finite profile"))
            .expect("non-empty scan"),
    };
    Ok(refine_around(&profile, &xs, i, tol))
}

/// Largest maximum of a possibly multimodal profile, pre-scanned on `samples` points.
pub fn locate_global_max_1d<F: Fn(f64) -> f64>(
    profile: F,
    bracket: (f64, f64),
    samples: usize,
    tol: f64,
) -> Result<(f64, f64)> {
    check_bracket(bracket, tol)?;
    let xs = linspace(bracket.0, bracket.1, samples.max(3));
    let ys: Vec<f64> = xs.iter().map(|&x| profile(x)).collect();
    let i = (0..xs.len())
        .max_by(|&a, &b| ys[a].partial_cmp(&ys[b]).expect("finite profile"))
        .expect("non-empty scan");
    Ok(refine_around(&profile, &xs, i, tol))
}

/// max_i |Q(point_i) - Q(point_0)| over `n` points of the orbit.
pub fn orbit_q_invariance(
    system: &CsSystem,
    state: &StateVector,
    orbit: &OrbitSpec,
    n: usize,
) -> Result<f64> {
    let points = orbit_points(orbit, n)?;
    let q0 = q_value(system, state, &points[0].point)?;
    points.iter().try_fold(0.0f64, |m, node| {
        Ok(m.max((q_value(system, state, &node.point)? - q0).abs()))
    })
}
