//! Hessian descent from the origin to the sphere, and its least-squares
//! variant.
//!
//! With `delta = 1/k`, each step adds `u_i = ±sqrt(delta N) û_i` where `û_i`
//! is an extreme eigenvector of the Euclidean Hessian restricted to `x_i^⊥`,
//! so `|x_i|^2 = i delta N`.

use alloc::vec;
use alloc::vec::Vec;
use num_traits::Float;

use crate::error::{out_of_range, Error, Result};
use crate::hamiltonian::{project_out, Realization};
use crate::linalg::{self, dot, norm, Extreme, LanczosOptions, SymMatrix};
use crate::rng::{self, keyed};

pub const DEFAULT_EIG_TOL: f64 = 1e-6;
/// Fresh random starts tried when the eigensolver does not converge.
pub const EIG_RETRIES: usize = 5;

#[derive(Debug, Clone, PartialEq)]
pub struct StepRecord {
    /// Index of the point reached by this step (1..=k).
    pub index: usize,
    pub radius_sq_over_n: f64,
    pub energy_density: f64,
    /// Extreme eigenvalue of the restricted Hessian at the previous point.
    pub eigenvalue: f64,
    /// `+1` or `-1`: sign applied to the eigenvector.
    pub sign: f64,
    /// The Hessian vanished on `x^⊥` and a uniformly random direction was used.
    pub random_direction: bool,
    /// The eigensolver missed its tolerance on every attempt.
    pub flagged: bool,
    pub attempts: usize,
}

#[derive(Debug, Clone)]
pub struct SpherePath {
    pub delta: f64,
    /// `x_0 = 0, ..., x_k`.
    pub points: Vec<Vec<f64>>,
    /// Objective value at each point.
    pub energies: Vec<f64>,
    pub steps: Vec<StepRecord>,
}

/// Largest deviations from the path invariants.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PathCheck {
    /// `max |(|x_i|^2 - i delta N)| / (i delta N)` over `i >= 1`.
    pub radius: f64,
    /// `max |<u_i, x_i>| / N`.
    pub orthogonality: f64,
    /// `max ||u_i|^2 - delta N| / (delta N)`.
    pub increment: f64,
}

impl PathCheck {
    pub fn holds(&self, tol: f64) -> bool {
        self.radius <= tol && self.orthogonality <= tol && self.increment <= tol
    }
}

impl SpherePath {
    pub fn k(&self) -> usize {
        self.steps.len()
    }

    pub fn dim(&self) -> usize {
        self.points[0].len()
    }

    pub fn terminal(&self) -> &[f64] {
        &self.points[self.points.len() - 1]
    }

    pub fn terminal_energy_density(&self) -> f64 {
        self.energies[self.energies.len() - 1] / self.dim() as f64
    }

    pub fn check(&self) -> PathCheck {
        let n = self.dim() as f64;
        let dn = self.delta * n;
        let mut c = PathCheck {
            radius: 0.0,
            orthogonality: 0.0,
            increment: 0.0,
        };
        for i in 1..self.points.len() {
            let target = i as f64 * dn;
            let r2 = dot(&self.points[i], &self.points[i]);
            c.radius = c.radius.max((r2 - target).abs() / target);
            let prev = &self.points[i - 1];
            let u: Vec<f64> = self.points[i].iter().zip(prev).map(|(a, b)| a - b).collect();
            c.orthogonality = c.orthogonality.max(dot(&u, prev).abs() / n);
            c.increment = c.increment.max((dot(&u, &u) - dn).abs() / dn);
        }
        c
    }
}

/// An objective with value, gradient and Hessian.
pub trait Objective {
    fn dim(&self) -> usize;
    fn value(&self, x: &[f64]) -> Result<f64>;
    /// `(value, gradient, Hessian)`.
    fn second_order(&self, x: &[f64]) -> Result<(f64, Vec<f64>, SymMatrix)>;
}

impl Objective for Realization {
    fn dim(&self) -> usize {
        Realization::dim(self)
    }

    fn value(&self, x: &[f64]) -> Result<f64> {
        self.energy(x)
    }

    fn second_order(&self, x: &[f64]) -> Result<(f64, Vec<f64>, SymMatrix)> {
        let d = self.derivatives(x)?;
        Ok((d.energy, d.gradient, d.hessian))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Direction {
    Ascend,
    Descend,
}

/// Run the stepping scheme on `obj`.
pub fn sphere_path<O: Objective + ?Sized>(
    obj: &O,
    k: usize,
    eig_tol: f64,
    seed: u64,
    direction: Direction,
) -> Result<SpherePath> {
    if k < 2 {
        return out_of_range("k", k as f64, "[2, inf)");
    }
    if !(eig_tol > 0.0) {
        return out_of_range("eig_tol", eig_tol, "(0, inf)");
    }
    let n = obj.dim();
    let delta = 1.0 / k as f64;
    let step_len = (delta * n as f64).sqrt();
    let which = match direction {
        Direction::Ascend => Extreme::Largest,
        Direction::Descend => Extreme::Smallest,
    };
    let opts = LanczosOptions {
        tol: eig_tol,
        ..LanczosOptions::default()
    };
    let mut x = vec![0.0; n];
    let mut points = vec![x.clone()];
    let mut energies = vec![obj.value(&x)?];
    let mut steps = Vec::with_capacity(k);
    for i in 0..k {
        let (_, _, hess) = obj.second_order(&x)?;
        let deflate: Vec<Vec<f64>> = if i == 0 { Vec::new() } else { vec![x.clone()] };
        let mut rng = keyed([seed, rng::TAG_DESCENT, i as u64, 0]);
        let scale = hess.frobenius_norm();
        let mut random_direction = false;
        let mut flagged = false;
        let mut attempts = 0;
        let (mut dir, eigenvalue) = if !(scale > 1e-14 * n as f64) {
            random_direction = true;
            (rng::normal_vec(&mut rng, n), 0.0)
        } else {
            let mut best: Option<linalg::EigenPair> = None;
            loop {
                attempts += 1;
                let start = rng::normal_vec(&mut rng, n);
                let pair = linalg::lanczos_extreme(&hess, which, &deflate, &start, &opts);
                let done = pair.converged;
                if best.as_ref().map_or(true, |b| pair.residual < b.residual) {
                    best = Some(pair);
                }
                if done {
                    break;
                }
                if attempts > EIG_RETRIES {
                    flagged = true;
                    break;
                }
            }
            let best = best.ok_or_else(|| Error::Degenerate("eigensolver produced no vector".into()))?;
            (best.vector, best.value)
        };
        if i > 0 {
            dir = project_out(&dir, &x);
            dir = project_out(&dir, &x);
        }
        let len = norm(&dir);
        if !(len > 0.0) {
            return Err(Error::Degenerate("zero step direction".into()));
        }
        let u: Vec<f64> = dir.iter().map(|v| v * step_len / len).collect();
        let plus: Vec<f64> = x.iter().zip(&u).map(|(a, b)| a + b).collect();
        let minus: Vec<f64> = x.iter().zip(&u).map(|(a, b)| a - b).collect();
        let (ep, em) = (obj.value(&plus)?, obj.value(&minus)?);
        let take_plus = match direction {
            Direction::Ascend => ep >= em,
            Direction::Descend => ep <= em,
        };
        let (next, e, sign) = if take_plus { (plus, ep, 1.0) } else { (minus, em, -1.0) };
        x = next;
        steps.push(StepRecord {
            index: i + 1,
            radius_sq_over_n: dot(&x, &x) / n as f64,
            energy_density: e / n as f64,
            eigenvalue,
            sign,
            random_direction,
            flagged,
            attempts,
        });
        points.push(x.clone());
        energies.push(e);
    }
    Ok(SpherePath {
        delta,
        points,
        energies,
        steps,
    })
}

/// Hessian descent towards high energy on `h`.
pub fn hessian_descent(h: &Realization, k: usize, eig_tol: f64, seed: u64) -> Result<SpherePath> {
    sphere_path(h, k, eig_tol, seed, Direction::Ascend)
}

/// `H(x) = sum_i (F_i(x) - c)^2` with `F_i = H_i / sqrt(N)`.
#[derive(Debug, Clone, Copy)]
pub struct LeastSquares<'a> {
    system: &'a [Realization],
    c: f64,
}

impl<'a> LeastSquares<'a> {
    pub fn new(system: &'a [Realization], c: f64) -> Result<Self> {
        let first = system
            .first()
            .ok_or_else(|| Error::Degenerate("empty system".into()))?;
        if let Some(bad) = system.iter().find(|r| r.dim() != first.dim()) {
            return Err(Error::DimensionMismatch {
                expected: first.dim(),
                found: bad.dim(),
            });
        }
        Ok(Self { system, c })
    }
}

impl Objective for LeastSquares<'_> {
    fn dim(&self) -> usize {
        self.system[0].dim()
    }

    fn value(&self, x: &[f64]) -> Result<f64> {
        let s = (self.dim() as f64).sqrt();
        let mut total = 0.0;
        for r in self.system {
            let f = r.energy(x)? / s;
            total += (f - self.c) * (f - self.c);
        }
        Ok(total)
    }

    fn second_order(&self, x: &[f64]) -> Result<(f64, Vec<f64>, SymMatrix)> {
        let n = self.dim();
        let s = (n as f64).sqrt();
        let mut total = 0.0;
        let mut grad = vec![0.0; n];
        let mut hess = SymMatrix::zeros(n);
        for r in self.system {
            let d = r.derivatives(x)?;
            let resid = d.energy / s - self.c;
            total += resid * resid;
            let g: Vec<f64> = d.gradient.iter().map(|v| v / s).collect();
            linalg::axpy(2.0 * resid, &g, &mut grad);
            hess.add_sym_outer(1.0, &g, &g);
            hess.add_scaled(2.0 * resid / s, &d.hessian);
        }
        Ok((total, grad, hess))
    }
}

#[derive(Debug, Clone)]
pub struct LeastSquaresPath {
    pub path: SpherePath,
    /// `H(x_i) / N` for each point of the path.
    pub residuals: Vec<f64>,
}

/// Descend `sum_i (H_i / sqrt(N) - c)^2` from the origin.
pub fn least_squares_descent(
    system: &[Realization],
    c: f64,
    k: usize,
    eig_tol: f64,
    seed: u64,
) -> Result<LeastSquaresPath> {
    let obj = LeastSquares::new(system, c)?;
    let path = sphere_path(&obj, k, eig_tol, seed, Direction::Descend)?;
    let n = obj.dim() as f64;
    let residuals = path.energies.iter().map(|e| e / n).collect();
    Ok(LeastSquaresPath { path, residuals })
}
