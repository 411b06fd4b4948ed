//! Dense symmetric matrices, a Householder/QL eigensolver, tangent-space
//! bases and a restarted Lanczos solver for extreme eigenpairs.

use alloc::vec;
use alloc::vec::Vec;
use num_traits::Float;

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

pub fn axpy(alpha: f64, x: &[f64], y: &mut [f64]) {
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += alpha * xi;
    }
}

pub fn scale(alpha: f64, x: &mut [f64]) {
    x.iter_mut().for_each(|v| *v *= alpha);
}

/// Square matrix in row-major storage, symmetric by construction of its users.
#[derive(Debug, Clone, PartialEq)]
pub struct SymMatrix {
    n: usize,
    data: Vec<f64>,
}

impl SymMatrix {
    pub fn zeros(n: usize) -> Self {
        Self {
            n,
            data: vec![0.0; n * n],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n);
        for i in 0..n {
            m.data[i * n + i] = 1.0;
        }
        m
    }

    pub fn from_fn<F: FnMut(usize, usize) -> f64>(n: usize, mut f: F) -> Self {
        let mut data = Vec::with_capacity(n * n);
        for i in 0..n {
            for j in 0..n {
                data.push(f(i, j));
            }
        }
        Self { n, data }
    }

    /// Wrap row-major data; the caller is responsible for symmetry.
    pub fn from_row_major(n: usize, data: Vec<f64>) -> Self {
        assert_eq!(data.len(), n * n, "matrix data has wrong length");
        Self { n, data }
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn as_mut_slice(&mut self) -> &mut [f64] {
        &mut self.data
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.n + j]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        self.data[i * self.n + j] = v;
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.n..(i + 1) * self.n]
    }

    /// Replace the matrix by `(M + M^T) / 2`.
    pub fn symmetrize(&mut self) {
        let n = self.n;
        for i in 0..n {
            for j in (i + 1)..n {
                let v = 0.5 * (self.data[i * n + j] + self.data[j * n + i]);
                self.data[i * n + j] = v;
                self.data[j * n + i] = v;
            }
        }
    }

    pub fn matvec(&self, x: &[f64], y: &mut [f64]) {
        for (i, yi) in y.iter_mut().enumerate().take(self.n) {
            *yi = dot(self.row(i), x);
        }
    }

    pub fn mul_vec(&self, x: &[f64]) -> Vec<f64> {
        let mut y = vec![0.0; self.n];
        self.matvec(x, &mut y);
        y
    }

    pub fn quadratic_form(&self, x: &[f64]) -> f64 {
        dot(x, &self.mul_vec(x))
    }

    pub fn add_scaled(&mut self, alpha: f64, other: &SymMatrix) {
        axpy(alpha, &other.data, &mut self.data);
    }

    /// `self += alpha * u v^T + alpha * v u^T`.
    pub fn add_sym_outer(&mut self, alpha: f64, u: &[f64], v: &[f64]) {
        let n = self.n;
        for i in 0..n {
            let row = &mut self.data[i * n..(i + 1) * n];
            for j in 0..n {
                row[j] += alpha * (u[i] * v[j] + v[i] * u[j]);
            }
        }
    }

    pub fn frobenius_norm(&self) -> f64 {
        norm(&self.data)
    }
}

pub trait LinearOperator {
    fn dim(&self) -> usize;
    fn apply(&self, x: &[f64], y: &mut [f64]);
}

impl LinearOperator for SymMatrix {
    fn dim(&self) -> usize {
        self.n
    }

    fn apply(&self, x: &[f64], y: &mut [f64]) {
        self.matvec(x, y)
    }
}

/// Eigen-decomposition with eigenvalues in ascending order.
#[derive(Debug, Clone)]
pub struct SymmetricEigen {
    pub values: Vec<f64>,
    /// Column `k` (entries `vectors[i * n + k]`) is the eigenvector of `values[k]`.
    pub vectors: Vec<f64>,
    n: usize,
}

impl SymmetricEigen {
    pub fn vector(&self, k: usize) -> Vec<f64> {
        (0..self.n).map(|i| self.vectors[i * self.n + k]).collect()
    }
}

/// Householder tridiagonalisation followed by implicit QL.
pub fn symmetric_eigen(m: &SymMatrix) -> SymmetricEigen {
    let n = m.n;
    if n == 0 {
        return SymmetricEigen {
            values: Vec::new(),
            vectors: Vec::new(),
            n,
        };
    }
    let mut v = m.data.clone();
    let mut d = vec![0.0; n];
    let mut e = vec![0.0; n];
    tred2(n, &mut v, &mut d, &mut e);
    tql2(n, &mut v, &mut d, &mut e);
    sort_pairs(n, &mut d, &mut v);
    SymmetricEigen {
        values: d,
        vectors: v,
        n,
    }
}

/// Eigen-decomposition of the symmetric tridiagonal matrix with the given
/// diagonal and off-diagonal (`off.len() == diag.len() - 1`).
pub fn tridiagonal_eigen(diag: &[f64], off: &[f64]) -> SymmetricEigen {
    let n = diag.len();
    let mut v = SymMatrix::identity(n).data;
    let mut d = diag.to_vec();
    let mut e = vec![0.0; n];
    e[1..n].copy_from_slice(&off[..(n - 1)]);
    tql2(n, &mut v, &mut d, &mut e);
    sort_pairs(n, &mut d, &mut v);
    SymmetricEigen {
        values: d,
        vectors: v,
        n,
    }
}

fn sort_pairs(n: usize, d: &mut [f64], v: &mut [f64]) {
    for i in 0..n.saturating_sub(1) {
        let mut k = i;
        let mut p = d[i];
        for (j, &dj) in d.iter().enumerate().skip(i + 1) {
            if dj < p {
                k = j;
                p = dj;
            }
        }
        if k != i {
            d.swap(i, k);
            for r in 0..n {
                v.swap(r * n + i, r * n + k);
            }
        }
    }
}

#[allow(clippy::many_single_char_names)]
fn tred2(n: usize, v: &mut [f64], d: &mut [f64], e: &mut [f64]) {
    let idx = |r: usize, c: usize| r * n + c;
    for j in 0..n {
        d[j] = v[idx(n - 1, j)];
    }
    for i in (1..n).rev() {
        let mut scale = 0.0;
        let mut h = 0.0;
        for dk in d.iter().take(i) {
            scale += dk.abs();
        }
        if scale == 0.0 {
            e[i] = d[i - 1];
            for j in 0..i {
                d[j] = v[idx(i - 1, j)];
                v[idx(i, j)] = 0.0;
                v[idx(j, i)] = 0.0;
            }
        } else {
            for dk in d.iter_mut().take(i) {
                *dk /= scale;
                h += *dk * *dk;
            }
            let mut f = d[i - 1];
            let mut g = h.sqrt();
            if f > 0.0 {
                g = -g;
            }
            e[i] = scale * g;
            h -= f * g;
            d[i - 1] = f - g;
            for ej in e.iter_mut().take(i) {
                *ej = 0.0;
            }
            for j in 0..i {
                f = d[j];
                v[idx(j, i)] = f;
                g = e[j] + v[idx(j, j)] * f;
                for k in (j + 1)..i {
                    g += v[idx(k, j)] * d[k];
                    e[k] += v[idx(k, j)] * f;
                }
                e[j] = g;
            }
            f = 0.0;
            for j in 0..i {
                e[j] /= h;
                f += e[j] * d[j];
            }
            let hh = f / (h + h);
            for j in 0..i {
                e[j] -= hh * d[j];
            }
            for j in 0..i {
                f = d[j];
                g = e[j];
                for k in j..i {
                    v[idx(k, j)] -= f * e[k] + g * d[k];
                }
                d[j] = v[idx(i - 1, j)];
                v[idx(i, j)] = 0.0;
            }
        }
        d[i] = h;
    }
    for i in 0..(n - 1) {
        v[idx(n - 1, i)] = v[idx(i, i)];
        v[idx(i, i)] = 1.0;
        let h = d[i + 1];
        if h != 0.0 {
            for k in 0..=i {
                d[k] = v[idx(k, i + 1)] / h;
            }
            for j in 0..=i {
                let mut g = 0.0;
                for k in 0..=i {
                    g += v[idx(k, i + 1)] * v[idx(k, j)];
                }
                for k in 0..=i {
                    v[idx(k, j)] -= g * d[k];
                }
            }
        }
        for k in 0..=i {
            v[idx(k, i + 1)] = 0.0;
        }
    }
    for j in 0..n {
        d[j] = v[idx(n - 1, j)];
        v[idx(n - 1, j)] = 0.0;
    }
    v[idx(n - 1, n - 1)] = 1.0;
    e[0] = 0.0;
}

#[allow(clippy::many_single_char_names)]
fn tql2(n: usize, v: &mut [f64], d: &mut [f64], e: &mut [f64]) {
    for i in 1..n {
        e[i - 1] = e[i];
    }
    e[n - 1] = 0.0;
    let mut f = 0.0;
    let mut tst1: f64 = 0.0;
    let eps = f64::EPSILON;
    for l in 0..n {
        tst1 = tst1.max(d[l].abs() + e[l].abs());
        let mut m = l;
        while m < n - 1 {
            if e[m].abs() <= eps * tst1 {
                break;
            }
            m += 1;
        }
        if m > l {
            let mut iter = 0;
            loop {
                iter += 1;
                let mut g = d[l];
                let mut p = (d[l + 1] - g) / (2.0 * e[l]);
                let mut r = p.hypot(1.0);
                if p < 0.0 {
                    r = -r;
                }
                d[l] = e[l] / (p + r);
                d[l + 1] = e[l] * (p + r);
                let dl1 = d[l + 1];
                let mut h = g - d[l];
                for di in d.iter_mut().take(n).skip(l + 2) {
                    *di -= h;
                }
                f += h;
                p = d[m];
                let mut c = 1.0;
                let mut c2 = c;
                let mut c3 = c;
                let el1 = e[l + 1];
                let mut s = 0.0;
                let mut s2 = 0.0;
                for i in (l..m).rev() {
                    c3 = c2;
                    c2 = c;
                    s2 = s;
                    g = c * e[i];
                    h = c * p;
                    r = p.hypot(e[i]);
                    e[i + 1] = s * r;
                    s = e[i] / r;
                    c = p / r;
                    p = c * d[i] - s * g;
                    d[i + 1] = h + s * (c * g + s * d[i]);
                    for k in 0..n {
                        let row = k * n;
                        h = v[row + i + 1];
                        v[row + i + 1] = s * v[row + i] + c * h;
                        v[row + i] = c * v[row + i] - s * h;
                    }
                }
                p = -s * s2 * c3 * el1 * e[l] / dl1;
                e[l] = s * p;
                d[l] = c * p;
                if e[l].abs() <= eps * tst1 || iter > 60 {
                    break;
                }
            }
        }
        d[l] += f;
        e[l] = 0.0;
    }
}

/// Orthonormal basis of the complement of a nonzero vector, represented by
/// the Householder reflector `Q = I - tau w w^T` with `Q e_0 = ±x/|x|`.
/// Tangent coordinates are the entries `1..n` of `Q v`.
#[derive(Debug, Clone)]
pub struct TangentBasis {
    w: Vec<f64>,
    tau: f64,
}

impl TangentBasis {
    pub fn new(x: &[f64]) -> Self {
        let nx = norm(x);
        assert!(nx > 0.0, "tangent basis of the zero vector");
        let mut w: Vec<f64> = x.iter().map(|v| v / nx).collect();
        let sign = if w[0] >= 0.0 { 1.0 } else { -1.0 };
        w[0] += sign;
        let wn2 = dot(&w, &w);
        Self { w, tau: 2.0 / wn2 }
    }

    pub fn ambient_dim(&self) -> usize {
        self.w.len()
    }

    fn reflect(&self, v: &mut [f64]) {
        let c = self.tau * dot(&self.w, v);
        axpy(-c, &self.w, v);
    }

    /// Coordinates (length `n - 1`) of the tangent component of `v`.
    pub fn to_tangent(&self, v: &[f64]) -> Vec<f64> {
        let mut y = v.to_vec();
        self.reflect(&mut y);
        y.remove(0);
        y
    }

    /// Ambient vector with the given tangent coordinates.
    pub fn to_ambient(&self, coords: &[f64]) -> Vec<f64> {
        let mut y = Vec::with_capacity(coords.len() + 1);
        y.push(0.0);
        y.extend_from_slice(coords);
        self.reflect(&mut y);
        y
    }

    /// `B^T M B` where the columns of `B` are the tangent basis vectors.
    pub fn compress(&self, m: &SymMatrix) -> SymMatrix {
        let n = m.dim();
        let w = &self.w;
        let tau = self.tau;
        let mw = m.mul_vec(w);
        let wmw = dot(w, &mw);
        // Q M Q = M - tau w (Mw)^T - tau (Mw) w^T + tau^2 (w^T M w) w w^T
        SymMatrix::from_fn(n - 1, |i, j| {
            let (a, b) = (i + 1, j + 1);
            m.get(a, b) - tau * (w[a] * mw[b] + mw[a] * w[b]) + tau * tau * wmw * w[a] * w[b]
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Extreme {
    Largest,
    Smallest,
}

#[derive(Debug, Clone, Copy)]
pub struct LanczosOptions {
    /// Relative residual tolerance `|A v - theta v| <= tol * scale`.
    pub tol: f64,
    pub krylov_dim: usize,
    pub max_restarts: usize,
}

impl Default for LanczosOptions {
    fn default() -> Self {
        Self {
            tol: 1e-8,
            krylov_dim: 80,
            max_restarts: 40,
        }
    }
}

#[derive(Debug, Clone)]
pub struct EigenPair {
    pub value: f64,
    pub vector: Vec<f64>,
    pub residual: f64,
    pub converged: bool,
    pub restarts: usize,
    pub matvecs: usize,
}

fn orthogonalize(v: &mut [f64], against: &[Vec<f64>]) {
    for _ in 0..2 {
        for q in against {
            let c = dot(q, v);
            axpy(-c, q, v);
        }
    }
}

/// Extreme eigenpair of `P A P` restricted to the complement of `deflate`,
/// where `P` projects out `deflate`. `start` need not be normalised.
pub fn lanczos_extreme<A: LinearOperator + ?Sized>(
    op: &A,
    which: Extreme,
    deflate: &[Vec<f64>],
    start: &[f64],
    opts: &LanczosOptions,
) -> EigenPair {
    let n = op.dim();
    let mut defl: Vec<Vec<f64>> = Vec::new();
    for d in deflate {
        let mut q = d.clone();
        orthogonalize(&mut q, &defl);
        let nq = norm(&q);
        if nq > 1e-12 {
            scale(1.0 / nq, &mut q);
            defl.push(q);
        }
    }
    let space = n - defl.len();
    let m_max = opts.krylov_dim.min(space).max(1);
    let mut v0 = start.to_vec();
    orthogonalize(&mut v0, &defl);
    if norm(&v0) < 1e-300 {
        // Fall back to a deterministic start when the supplied one is deflated away.
        v0 = (0..n).map(|i| 1.0 + (i as f64) * 1e-3).collect();
        orthogonalize(&mut v0, &defl);
    }
    let mut matvecs = 0;
    let mut best = EigenPair {
        value: 0.0,
        vector: v0.clone(),
        residual: f64::INFINITY,
        converged: false,
        restarts: 0,
        matvecs: 0,
    };
    let mut w = vec![0.0; n];
    for restart in 0..=opts.max_restarts {
        let nv = norm(&v0);
        scale(1.0 / nv, &mut v0);
        let mut basis: Vec<Vec<f64>> = vec![v0.clone()];
        let mut alpha: Vec<f64> = Vec::new();
        let mut beta: Vec<f64> = Vec::new();
        let mut scale_est: f64 = 0.0;
        loop {
            let j = basis.len() - 1;
            op.apply(&basis[j], &mut w);
            matvecs += 1;
            let a = dot(&w, &basis[j]);
            alpha.push(a);
            orthogonalize(&mut w, &defl);
            orthogonalize(&mut w, &basis);
            let b = norm(&w);
            scale_est = scale_est.max(a.abs() + b);
            if basis.len() >= m_max || b <= 1e-12 * scale_est.max(1e-300) {
                break;
            }
            beta.push(b);
            let mut next = w.clone();
            scale(1.0 / b, &mut next);
            basis.push(next);
        }
        let tri = tridiagonal_eigen(&alpha, &beta);
        let k = match which {
            Extreme::Largest => tri.values.len() - 1,
            Extreme::Smallest => 0,
        };
        let theta = tri.values[k];
        let y = tri.vector(k);
        let mut u = vec![0.0; n];
        for (c, vb) in y.iter().zip(&basis) {
            axpy(*c, vb, &mut u);
        }
        orthogonalize(&mut u, &defl);
        let nu = norm(&u);
        scale(1.0 / nu, &mut u);
        op.apply(&u, &mut w);
        matvecs += 1;
        orthogonalize(&mut w, &defl);
        axpy(-theta, &u, &mut w);
        let residual = norm(&w);
        let spread = tri
            .values
            .iter()
            .fold(0.0f64, |acc, v| acc.max(v.abs()))
            .max(scale_est);
        let target = opts.tol * theta.abs().max(1e-3 * spread).max(1e-300);
        let better = match which {
            Extreme::Largest => theta > best.value || best.residual.is_infinite(),
            Extreme::Smallest => theta < best.value || best.residual.is_infinite(),
        };
        if better || residual < best.residual {
            best = EigenPair {
                value: theta,
                vector: u.clone(),
                residual,
                converged: residual <= target,
                restarts: restart,
                matvecs,
            };
        }
        if residual <= target || basis.len() >= space {
            best.converged = residual <= target || basis.len() >= space;
            best.matvecs = matvecs;
            return best;
        }
        v0 = u;
    }
    best.matvecs = matvecs;
    best
}
