//! Disorder realizations of the mixed p-spin Hamiltonian
//!
//! `H(x) = sum_p gamma_p N^{-(p-1)/2} sum_{i_1..i_p} J^{(p)}_{i_1..i_p} x_{i_1} ... x_{i_p}`
//!
//! with raw (unsymmetrized) i.i.d. standard normal tensors stored in
//! row-major order. Energies and derivatives are computed by contracting one
//! axis at a time; the partial contractions are shared between the energy,
//! the gradient and the Hessian.

use alloc::vec;
use alloc::vec::Vec;
use num_traits::Float;

use crate::error::{out_of_range, Error, Result};
use crate::linalg::{self, axpy, dot, EigenPair, Extreme, LanczosOptions, SymMatrix, TangentBasis};
use crate::mixture::Mixture;
use crate::rng;

/// Default cap on the bytes held by coupling tensors (8 GiB).
pub const DEFAULT_MEMORY_CAP: u64 = 8 << 30;

/// Bytes needed by the coupling tensors of `mixture` in dimension `dim`.
pub fn tensor_bytes(mixture: &Mixture, dim: usize) -> u128 {
    mixture
        .terms()
        .map(|(p, _)| (dim as u128).pow(p as u32) * 8)
        .sum()
}

#[derive(Debug, Clone, PartialEq)]
pub struct Coupling {
    order: usize,
    weight: f64,
    data: Vec<f64>,
}

impl Coupling {
    pub fn order(&self) -> usize {
        self.order
    }

    /// `gamma_p N^{-(p-1)/2}`.
    pub fn weight(&self) -> f64 {
        self.weight
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Realization {
    mixture: Mixture,
    dim: usize,
    seed: u64,
    couplings: Vec<Coupling>,
}

/// Energy, gradient and Hessian at one point.
#[derive(Debug, Clone)]
pub struct Derivatives {
    pub energy: f64,
    pub gradient: Vec<f64>,
    pub hessian: SymMatrix,
}

impl Realization {
    pub fn sample(mixture: &Mixture, dim: usize, seed: u64) -> Result<Self> {
        Self::sample_with_cap(mixture, dim, seed, DEFAULT_MEMORY_CAP)
    }

    /// Draw all tensors from the counter-based stream keyed by `(seed, p, block)`.
    pub fn sample_with_cap(mixture: &Mixture, dim: usize, seed: u64, cap: u64) -> Result<Self> {
        Self::check_capacity(mixture, dim, cap)?;
        let couplings = mixture
            .terms()
            .map(|(p, c)| {
                let mut data = vec![0.0; dim.pow(p as u32)];
                rng::fill_tensor_normals(seed, p as u64, &mut data);
                Coupling {
                    order: p,
                    weight: coupling_weight(c, dim, p),
                    data,
                }
            })
            .collect();
        Ok(Self {
            mixture: mixture.clone(),
            dim,
            seed,
            couplings,
        })
    }

    pub fn check_capacity(mixture: &Mixture, dim: usize, cap: u64) -> Result<()> {
        if dim < 2 {
            return out_of_range("N", dim as f64, "[2, inf)");
        }
        let mut total: u128 = 0;
        for (p, _) in mixture.terms() {
            let bytes = (dim as u128)
                .checked_pow(p as u32)
                .and_then(|v| v.checked_mul(8))
                .unwrap_or(u128::MAX);
            total = total.saturating_add(bytes);
            if total > cap as u128 {
                return Err(Error::Capacity {
                    order: p,
                    bytes,
                    cap,
                });
            }
        }
        Ok(())
    }

    /// Build a realization from explicit tensors, one per active order of
    /// `mixture` in increasing order. Used for reloads and hand-built cases.
    pub fn from_tensors(mixture: &Mixture, dim: usize, seed: u64, tensors: Vec<(usize, Vec<f64>)>) -> Result<Self> {
        if dim < 1 {
            return out_of_range("N", dim as f64, "[1, inf)");
        }
        let active: Vec<(usize, f64)> = mixture.terms().collect();
        if active.len() != tensors.len() {
            return Err(Error::InvalidMixture(alloc::format!(
                "mixture has {} active orders but {} tensors were given",
                active.len(),
                tensors.len()
            )));
        }
        let mut couplings = Vec::with_capacity(tensors.len());
        for ((p, c), (order, data)) in active.into_iter().zip(tensors) {
            if p != order {
                return Err(Error::InvalidMixture(alloc::format!(
                    "tensor order {order} does not match mixture order {p}"
                )));
            }
            let expected = dim.pow(p as u32);
            if data.len() != expected {
                return Err(Error::DimensionMismatch {
                    expected,
                    found: data.len(),
                });
            }
            couplings.push(Coupling {
                order: p,
                weight: coupling_weight(c, dim, p),
                data,
            });
        }
        Ok(Self {
            mixture: mixture.clone(),
            dim,
            seed,
            couplings,
        })
    }

    pub fn mixture(&self) -> &Mixture {
        &self.mixture
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn couplings(&self) -> &[Coupling] {
        &self.couplings
    }

    fn check_dim(&self, x: &[f64]) -> Result<()> {
        if x.len() != self.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                found: x.len(),
            });
        }
        Ok(())
    }

    /// `H(x)` for any `x` in `R^N`.
    pub fn energy(&self, x: &[f64]) -> Result<f64> {
        self.check_dim(x)?;
        let mut e = 0.0;
        for c in &self.couplings {
            let mut acc = 0.0;
            partials(&c.data, self.dim, c.order, x, 0, &mut |_, t| acc += t[0]);
            e += c.weight * acc;
        }
        Ok(e)
    }

    pub fn euclidean_grad(&self, x: &[f64]) -> Result<Vec<f64>> {
        self.check_dim(x)?;
        let n = self.dim;
        let mut g = vec![0.0; n];
        for c in &self.couplings {
            partials(&c.data, n, c.order, x, 1, &mut |free, t| {
                if free.len() == 1 {
                    axpy(c.weight, t, &mut g);
                }
            });
        }
        Ok(g)
    }

    pub fn euclidean_hess(&self, x: &[f64]) -> Result<SymMatrix> {
        Ok(self.derivatives(x)?.hessian)
    }

    /// Energy, gradient and Hessian from one shared set of contractions.
    pub fn derivatives(&self, x: &[f64]) -> Result<Derivatives> {
        self.check_dim(x)?;
        let n = self.dim;
        let mut energy = 0.0;
        let mut gradient = vec![0.0; n];
        let mut hess = SymMatrix::zeros(n);
        for c in &self.couplings {
            let w = c.weight;
            partials(&c.data, n, c.order, x, 2, &mut |free, t| match free.len() {
                0 => energy += w * t[0],
                1 => axpy(w, t, &mut gradient),
                _ => {
                    let h = hess.as_mut_slice();
                    for i in 0..n {
                        for j in 0..n {
                            h[i * n + j] += w * (t[i * n + j] + t[j * n + i]);
                        }
                    }
                }
            });
        }
        // The sum over ordered slot pairs is symmetric up to rounding; make it exact.
        hess.symmetrize();
        Ok(Derivatives {
            energy,
            gradient,
            hessian: hess,
        })
    }

    /// `P grad H(x)` with `P = I - x x^T / (qN)`.
    pub fn spherical_grad(&self, x: &SpherePoint) -> Result<Vec<f64>> {
        self.check_dim(x.coords())?;
        let g = self.euclidean_grad(x.coords())?;
        Ok(project_out(&g, x.coords()))
    }

    /// `P hess H P - (<x, grad H> / (qN)) P` acting on the tangent space at `x`.
    pub fn spherical_hess(&self, x: &SpherePoint) -> Result<SphericalHessian> {
        let d = self.derivatives(x.coords())?;
        Ok(SphericalHessian::from_derivatives(x, &d))
    }
}

fn coupling_weight(gamma_sq: f64, dim: usize, p: usize) -> f64 {
    gamma_sq.sqrt() * (dim as f64).powf(-((p as f64 - 1.0) / 2.0))
}

/// `v - (<v, x> / |x|^2) x`.
pub fn project_out(v: &[f64], x: &[f64]) -> Vec<f64> {
    let xx = dot(x, x);
    let mut out = v.to_vec();
    if xx > 0.0 {
        axpy(-dot(v, x) / xx, x, &mut out);
    }
    out
}

/// Contract axis `axis` of a rank-`rank` tensor with side `n`.
fn contract_axis(t: &[f64], n: usize, rank: usize, axis: usize, x: &[f64]) -> Vec<f64> {
    let inner = n.pow((rank - axis - 1) as u32);
    let outer = n.pow(axis as u32);
    let mut out = vec![0.0; outer * inner];
    if inner == 1 {
        for (o, v) in out.iter_mut().enumerate() {
            *v = dot(&t[o * n..(o + 1) * n], x);
        }
        return out;
    }
    for o in 0..outer {
        let dst = &mut out[o * inner..(o + 1) * inner];
        for (i, xi) in x.iter().enumerate() {
            let start = (o * n + i) * inner;
            axpy(*xi, &t[start..start + inner], dst);
        }
    }
    out
}

/// Visit every contraction of `t` with `x` that leaves at most `max_free`
/// axes free. `emit` receives the original indices of the free axes
/// (ascending) and the contracted tensor over them.
fn partials<F: FnMut(&[usize], &[f64])>(t: &[f64], n: usize, rank: usize, x: &[f64], max_free: usize, emit: &mut F) {
    let mut free = Vec::with_capacity(max_free);
    let labels: Vec<usize> = (0..rank).collect();
    visit(t, n, &labels, 0, x, max_free, &mut free, emit);
}

#[allow(clippy::too_many_arguments)]
fn visit<F: FnMut(&[usize], &[f64])>(
    t: &[f64],
    n: usize,
    labels: &[usize],
    pos: usize,
    x: &[f64],
    max_free: usize,
    free: &mut Vec<usize>,
    emit: &mut F,
) {
    let rank = labels.len();
    if pos == rank {
        emit(free, t);
        return;
    }
    let reduced = contract_axis(t, n, rank, pos, x);
    let mut rest = labels.to_vec();
    rest.remove(pos);
    visit(&reduced, n, &rest, pos, x, max_free, free, emit);
    drop(reduced);
    if free.len() < max_free {
        free.push(labels[pos]);
        visit(t, n, labels, pos + 1, x, max_free, free, emit);
        free.pop();
    }
}

/// Point on the sphere `|x|^2 = qN`.
#[derive(Debug, Clone, PartialEq)]
pub struct SpherePoint {
    coords: Vec<f64>,
    q: f64,
}

impl SpherePoint {
    /// Validate `|x|^2 = qN` to relative precision `1e-9`.
    pub fn new(coords: Vec<f64>, q: f64) -> Result<Self> {
        if !(q > 0.0 && q <= 1.0) {
            return out_of_range("q", q, "(0, 1]");
        }
        let n = coords.len() as f64;
        let r2 = dot(&coords, &coords);
        if (r2 - q * n).abs() > 1e-9 * q * n {
            return Err(Error::NotOnSphere {
                expected: q * n,
                found: r2,
            });
        }
        Ok(Self { coords, q })
    }

    /// Rescale a nonzero vector onto the sphere `|x|^2 = qN`.
    pub fn project(mut coords: Vec<f64>, q: f64) -> Result<Self> {
        if !(q > 0.0 && q <= 1.0) {
            return out_of_range("q", q, "(0, 1]");
        }
        let r = linalg::norm(&coords);
        if !(r > 0.0) {
            return Err(Error::Degenerate("cannot project the zero vector".into()));
        }
        let s = (q * coords.len() as f64).sqrt() / r;
        coords.iter_mut().for_each(|v| *v *= s);
        Ok(Self { coords, q })
    }

    pub fn coords(&self) -> &[f64] {
        &self.coords
    }

    pub fn into_coords(self) -> Vec<f64> {
        self.coords
    }

    pub fn q(&self) -> f64 {
        self.q
    }

    pub fn dim(&self) -> usize {
        self.coords.len()
    }

    pub fn neg(&self) -> Self {
        Self {
            coords: self.coords.iter().map(|v| -v).collect(),
            q: self.q,
        }
    }
}

/// `R(x, y) = x . y / N`.
pub fn overlap(x: &[f64], y: &[f64]) -> f64 {
    dot(x, y) / x.len() as f64
}

/// Spherical Hessian as an `N x N` operator that annihilates `x`.
#[derive(Debug, Clone)]
pub struct SphericalHessian {
    matrix: SymMatrix,
    unit: Vec<f64>,
    radial: f64,
}

impl SphericalHessian {
    pub fn from_derivatives(x: &SpherePoint, d: &Derivatives) -> Self {
        let n = x.dim();
        let qn = x.q() * n as f64;
        let radial = dot(x.coords(), &d.gradient) / qn;
        let unit: Vec<f64> = x.coords().iter().map(|v| v / qn.sqrt()).collect();
        let m = &d.hessian;
        let y = m.mul_vec(&unit);
        let yu = dot(&y, &unit);
        let mut out = SymMatrix::from_fn(n, |i, j| {
            let p_ij = if i == j { 1.0 } else { 0.0 } - unit[i] * unit[j];
            m.get(i, j) - unit[i] * y[j] - y[i] * unit[j] + yu * unit[i] * unit[j] - radial * p_ij
        });
        out.symmetrize();
        Self {
            matrix: out,
            unit,
            radial,
        }
    }

    pub fn matrix(&self) -> &SymMatrix {
        &self.matrix
    }

    /// `<x, grad H> / (qN)`, the multiplier of the radial correction.
    pub fn radial_term(&self) -> f64 {
        self.radial
    }

    pub fn apply(&self, v: &[f64]) -> Vec<f64> {
        self.matrix.mul_vec(v)
    }

    /// Matrix in an orthonormal basis of the tangent space (size `N - 1`).
    pub fn tangent_matrix(&self) -> SymMatrix {
        TangentBasis::new(&self.unit).compress(&self.matrix)
    }

    /// All `N - 1` tangent eigenvalues, ascending.
    pub fn eigenvalues(&self) -> Vec<f64> {
        linalg::symmetric_eigen(&self.tangent_matrix()).values
    }

    /// Extreme tangent eigenpair by restarted Lanczos with `x` deflated.
    pub fn extreme(&self, which: Extreme, start: &[f64], tol: f64) -> EigenPair {
        let opts = LanczosOptions {
            tol,
            ..LanczosOptions::default()
        };
        linalg::lanczos_extreme(&self.matrix, which, &[self.unit.clone()], start, &opts)
    }
}
