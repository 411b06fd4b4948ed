//! Critical points on the unit-radius sphere `|x|^2 = N` at small `N`:
//! damped Newton from random starts, deduplication, Morse indices and
//! window counts.

use alloc::vec;
use alloc::vec::Vec;
use num_traits::Float;

use crate::error::{out_of_range, Error, Result};
use crate::hamiltonian::{overlap, project_out, Realization, SpherePoint, SphericalHessian};
use crate::linalg::{self, dot, norm, TangentBasis};
use crate::mixture::Mixture;
use crate::rng::{self, keyed};

pub const MAX_DIM: usize = 64;
pub const DEFAULT_DEDUP_TOL: f64 = 1e-6;
/// Newton stops once `|grad_sp H| / sqrt(N)` falls below this.
pub const NEWTON_TOL: f64 = 1e-10;
/// Points are kept only if `|grad_sp H| / sqrt(N)` is below this.
pub const ACCEPT_TOL: f64 = 1e-8;
pub const NEWTON_MAX_ITER: usize = 100;

#[derive(Debug, Clone, PartialEq)]
pub struct CriticalPoint {
    pub location: SpherePoint,
    /// `H / N`.
    pub energy_density: f64,
    /// `<x, grad H> / N`.
    pub radial_derivative: f64,
    /// Number of negative spherical-Hessian eigenvalues.
    pub index: usize,
    /// Position of the antipode in the same list, when it was found.
    pub pair: Option<usize>,
    pub grad_norm: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CriticalSearch {
    pub points: Vec<CriticalPoint>,
    pub starts: usize,
    /// Starts whose Newton iteration stalled or diverged.
    pub discarded: usize,
    /// `(starts used, distinct points)` after a quarter, half and all starts.
    pub checkpoints: Vec<(usize, usize)>,
}

impl CriticalSearch {
    /// The count did not change over the last two doublings of starts.
    pub fn saturated(&self) -> bool {
        let c = &self.checkpoints;
        c.len() >= 3 && c[c.len() - 1].1 == c[c.len() - 2].1 && c[c.len() - 2].1 == c[c.len() - 3].1
    }

    /// `sum (-1)^index`; equals the Euler characteristic of the sphere on
    /// complete enumerations.
    pub fn morse_sum(&self) -> i64 {
        morse_sum(&self.points)
    }
}

pub fn morse_sum(points: &[CriticalPoint]) -> i64 {
    points.iter().map(|p| if p.index % 2 == 0 { 1 } else { -1 }).sum()
}

/// `2` for odd `N` (even-dimensional sphere), `0` for even `N`.
pub fn euler_characteristic(n: usize) -> i64 {
    if n % 2 == 1 {
        2
    } else {
        0
    }
}

fn retract(x: &[f64]) -> Vec<f64> {
    let s = (x.len() as f64).sqrt() / norm(x);
    x.iter().map(|v| v * s).collect()
}

fn sphere_grad_norm(h: &Realization, x: &[f64]) -> Result<f64> {
    let g = project_out(&h.euclidean_grad(x)?, x);
    Ok(norm(&g) / (x.len() as f64).sqrt())
}

/// Damped Newton on `grad_sp H = 0`, with backtracking on `|grad_sp H|`.
fn newton(h: &Realization, start: Vec<f64>) -> Result<Option<Vec<f64>>> {
    let n = start.len();
    let sqrt_n = (n as f64).sqrt();
    let mut x = retract(&start);
    let mut gn = sphere_grad_norm(h, &x)?;
    for _ in 0..NEWTON_MAX_ITER {
        if gn <= NEWTON_TOL {
            return Ok(Some(x));
        }
        let point = SpherePoint::new(x.clone(), 1.0)?;
        let d = h.derivatives(&x)?;
        let sh = SphericalHessian::from_derivatives(&point, &d);
        let basis = TangentBasis::new(&x);
        let g_t = basis.to_tangent(&project_out(&d.gradient, &x));
        let eig = linalg::symmetric_eigen(&basis.compress(sh.matrix()));
        let m = g_t.len();
        let big = eig.values.iter().fold(0.0f64, |a, v| a.max(v.abs()));
        let mut s = vec![0.0; m];
        for j in 0..m {
            let lam = eig.values[j];
            if lam.abs() <= 1e-12 * big {
                continue;
            }
            let v = eig.vector(j);
            linalg::axpy(-dot(&v, &g_t) / lam, &v, &mut s);
        }
        let mut step = basis.to_ambient(&s);
        let len = norm(&step);
        let cap = 0.5 * sqrt_n;
        if len > cap {
            step.iter_mut().for_each(|v| *v *= cap / len);
        }
        let mut t = 1.0;
        let mut accepted = false;
        for _ in 0..30 {
            let trial: Vec<f64> = x.iter().zip(&step).map(|(a, b)| a + t * b).collect();
            let trial = retract(&trial);
            let tn = sphere_grad_norm(h, &trial)?;
            if tn < gn * (1.0 - 1e-4 * t) {
                x = trial;
                gn = tn;
                accepted = true;
                break;
            }
            t *= 0.5;
        }
        if !accepted {
            return Ok(if gn <= ACCEPT_TOL { Some(x) } else { None });
        }
    }
    Ok(if gn <= ACCEPT_TOL { Some(x) } else { None })
}

fn describe(h: &Realization, x: Vec<f64>) -> Result<CriticalPoint> {
    let n = x.len() as f64;
    let point = SpherePoint::new(x, 1.0)?;
    let d = h.derivatives(point.coords())?;
    let sh = SphericalHessian::from_derivatives(&point, &d);
    let index = sh.eigenvalues().iter().filter(|v| **v < 0.0).count();
    let grad_norm = norm(&project_out(&d.gradient, point.coords())) / n.sqrt();
    Ok(CriticalPoint {
        energy_density: d.energy / n,
        radial_derivative: dot(point.coords(), &d.gradient) / n,
        index,
        pair: None,
        grad_norm,
        location: point,
    })
}

/// `true` when every active order has the same parity, so `-x` is critical
/// whenever `x` is.
fn antipodal_symmetric(m: &Mixture) -> bool {
    let mut parities = m.terms().map(|(p, _)| p % 2);
    match parities.next() {
        Some(first) => parities.all(|p| p == first),
        None => false,
    }
}

/// Newton from `n_starts` uniform random points; deduplicate by signed
/// overlap `R > 1 - dedup_tol`.
pub fn find_critical_points(h: &Realization, n_starts: usize, seed: u64, dedup_tol: f64) -> Result<CriticalSearch> {
    let n = h.dim();
    if n > MAX_DIM {
        return out_of_range("N", n as f64, "[2, 64]");
    }
    if n_starts == 0 {
        return out_of_range("n_starts", 0.0, "[1, inf)");
    }
    if !(dedup_tol > 0.0 && dedup_tol < 1.0) {
        return out_of_range("dedup_tol", dedup_tol, "(0, 1)");
    }
    let symmetric = antipodal_symmetric(h.mixture());
    let mut found: Vec<Vec<f64>> = Vec::new();
    let mut discarded = 0;
    let marks = [n_starts.div_ceil(4), n_starts.div_ceil(2), n_starts];
    let mut checkpoints = Vec::new();
    let is_new = |found: &[Vec<f64>], x: &[f64]| found.iter().all(|y| dot(x, y) / n as f64 <= 1.0 - dedup_tol);
    for s in 0..n_starts {
        let mut r = keyed([seed, rng::TAG_NEWTON, s as u64, 0]);
        let start = rng::uniform_sphere(&mut r, n, n as f64);
        match newton(h, start)? {
            Some(x) => {
                if is_new(&found, &x) {
                    if symmetric {
                        let anti: Vec<f64> = x.iter().map(|v| -v).collect();
                        if is_new(&found, &anti) {
                            found.push(anti);
                        }
                    }
                    found.push(x);
                }
            }
            None => discarded += 1,
        }
        if marks.contains(&(s + 1)) && checkpoints.last().map_or(true, |c: &(usize, usize)| c.0 != s + 1) {
            checkpoints.push((s + 1, found.len()));
        }
    }
    let mut points = Vec::with_capacity(found.len());
    for x in found {
        let p = describe(h, x)?;
        if p.grad_norm > ACCEPT_TOL {
            return Err(Error::Degenerate("accepted point failed the gradient check".into()));
        }
        points.push(p);
    }
    for i in 0..points.len() {
        for j in 0..points.len() {
            if i != j && overlap(points[i].location.coords(), points[j].location.coords()) < -1.0 + dedup_tol {
                points[i].pair = Some(j);
            }
        }
    }
    Ok(CriticalSearch {
        points,
        starts: n_starts,
        discarded,
        checkpoints,
    })
}

/// Closed interval `[lo, hi]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Window {
    pub lo: f64,
    pub hi: f64,
}

impl Window {
    pub const ALL: Window = Window {
        lo: f64::NEG_INFINITY,
        hi: f64::INFINITY,
    };

    pub fn new(lo: f64, hi: f64) -> Self {
        Self { lo, hi }
    }

    pub fn contains(&self, v: f64) -> bool {
        self.lo <= v && v <= self.hi
    }
}

/// Points with `H/N` in `energy` and radial derivative in `radial`. Both
/// members of an antipodal pair are counted.
pub fn count_in_window(points: &[CriticalPoint], energy: Window, radial: Window) -> usize {
    points
        .iter()
        .filter(|p| energy.contains(p.energy_density) && radial.contains(p.radial_derivative))
        .count()
}

#[derive(Debug, Clone, PartialEq)]
pub struct ComplexityCell {
    pub n: usize,
    pub window: Window,
    pub counts: Vec<usize>,
    /// Mean of `log(count) / N` over seeds with a nonzero count.
    pub mean_log_count: Option<f64>,
    /// Standard deviation of `log(count) / N` over the same seeds.
    pub spread: Option<f64>,
    pub zero_counts: usize,
    /// Seeds whose search did not saturate.
    pub unsaturated: usize,
}

/// Finite-`N` counts per energy window, one realization per seed.
pub fn empirical_complexity(
    m: &Mixture,
    dims: &[usize],
    n_starts: usize,
    windows: &[Window],
    seeds: &[u64],
) -> Result<Vec<ComplexityCell>> {
    let mut cells = Vec::new();
    for &n in dims {
        if n > MAX_DIM {
            return out_of_range("N", n as f64, "[2, 64]");
        }
        let mut searches = Vec::with_capacity(seeds.len());
        for &seed in seeds {
            let h = Realization::sample(m, n, seed)?;
            searches.push(find_critical_points(&h, n_starts, rng::derive_seed(seed, 1), DEFAULT_DEDUP_TOL)?);
        }
        let unsaturated = searches.iter().filter(|s| !s.saturated()).count();
        for w in windows {
            let counts: Vec<usize> = searches
                .iter()
                .map(|s| count_in_window(&s.points, *w, Window::ALL))
                .collect();
            let logs: Vec<f64> = counts
                .iter()
                .filter(|c| **c > 0)
                .map(|c| (*c as f64).ln() / n as f64)
                .collect();
            let (mean, spread) = if logs.is_empty() {
                (None, None)
            } else {
                let mu = logs.iter().sum::<f64>() / logs.len() as f64;
                let var = logs.iter().map(|v| (v - mu) * (v - mu)).sum::<f64>() / (logs.len().max(2) - 1) as f64;
                (Some(mu), Some(var.sqrt()))
            };
            cells.push(ComplexityCell {
                n,
                window: *w,
                zero_counts: counts.iter().filter(|c| **c == 0).count(),
                counts,
                mean_log_count: mean,
                spread,
                unsaturated,
            });
        }
    }
    Ok(cells)
}
