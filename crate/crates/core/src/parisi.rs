//! Crisanti-Sommers functional over step-function measures, the free energy
//! curve it yields, and the quantities derived from it: ground state,
//! volume exponent and the generalized TAP correction.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;
use num_traits::Float;

use crate::error::{out_of_range, Error, Result};
use crate::minimize::{nelder_mead_restarts, SimplexOptions};
use crate::mixture::{Covariance, Mixture};

/// Atoms below this weight are dropped from returned minimizers.
pub const PRUNE_WEIGHT: f64 = 1e-8;
pub const DEFAULT_CS_TOL: f64 = 1e-9;
pub const DEFAULT_K_MAX: usize = 8;
pub const DEFAULT_SLOPE_TOL: f64 = 1e-4;
pub const MAX_DOUBLINGS: u32 = 14;

/// Probability measure `sum_i w_i delta_{q_i}` on `[0, qhat]`.
#[derive(Debug, Clone, PartialEq)]
pub struct DiscreteMeasure {
    atoms: Vec<f64>,
    weights: Vec<f64>,
    qhat: f64,
}

impl DiscreteMeasure {
    /// Atoms strictly increasing in `[0, 1)`, weights positive with unit sum
    /// (to `1e-12`), and `q_k <= qhat < 1`.
    pub fn new(atoms: Vec<f64>, weights: Vec<f64>, qhat: f64) -> Result<Self> {
        if atoms.is_empty() || atoms.len() != weights.len() {
            return Err(Error::InvalidMeasure(format!(
                "{} atoms and {} weights",
                atoms.len(),
                weights.len()
            )));
        }
        if !(qhat < 1.0) {
            return Err(Error::InvalidMeasure(format!("qhat = {qhat} must be < 1")));
        }
        if !(atoms[0] >= 0.0) || atoms.windows(2).any(|w| !(w[0] < w[1])) {
            return Err(Error::InvalidMeasure("atoms must be strictly increasing from >= 0".into()));
        }
        let last = atoms[atoms.len() - 1];
        if !(last <= qhat) {
            return Err(Error::InvalidMeasure(format!("largest atom {last} exceeds qhat {qhat}")));
        }
        if weights.iter().any(|w| !(*w > 0.0)) {
            return Err(Error::InvalidMeasure("weights must be positive".into()));
        }
        let total: f64 = weights.iter().sum();
        if (total - 1.0).abs() > 1e-12 {
            return Err(Error::InvalidMeasure(format!("weights sum to {total}")));
        }
        Ok(Self { atoms, weights, qhat })
    }

    /// `delta_0` with `qhat = 0`.
    pub fn dirac_zero() -> Self {
        Self {
            atoms: vec![0.0],
            weights: vec![1.0],
            qhat: 0.0,
        }
    }

    pub fn dirac(q: f64) -> Result<Self> {
        Self::new(vec![q], vec![1.0], q)
    }

    pub fn atoms(&self) -> &[f64] {
        &self.atoms
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn qhat(&self) -> f64 {
        self.qhat
    }

    /// Number of atoms minus one: 0 for replica symmetric, `k` for k-RSB.
    pub fn rsb_level(&self) -> usize {
        self.atoms.len() - 1
    }

    /// Mass on `(threshold, 1)`.
    pub fn mass_above(&self, threshold: f64) -> f64 {
        self.atoms
            .iter()
            .zip(&self.weights)
            .filter(|(q, _)| **q > threshold)
            .map(|(_, w)| w)
            .sum()
    }

    /// Drop atoms lighter than `min_weight` and renormalize. The heaviest
    /// atom always survives.
    pub fn pruned(&self, min_weight: f64) -> Self {
        let heaviest = (0..self.weights.len())
            .max_by(|&a, &b| self.weights[a].total_cmp(&self.weights[b]))
            .unwrap_or(0);
        let keep: Vec<usize> = (0..self.atoms.len())
            .filter(|&i| i == heaviest || self.weights[i] >= min_weight)
            .collect();
        let total: f64 = keep.iter().map(|&i| self.weights[i]).sum();
        let atoms: Vec<f64> = keep.iter().map(|&i| self.atoms[i]).collect();
        let weights = keep.iter().map(|&i| self.weights[i] / total).collect();
        let qhat = self.qhat.max(atoms[atoms.len() - 1]);
        Self { atoms, weights, qhat }
    }
}

/// The two pieces of the functional: `int_0^1 mu([0,q]) xi'(q) dq` and the
/// beta-free remainder, so that `P = (beta^2 a + b) / 2`.
fn cs_parts<C: Covariance>(xi: &C, atoms: &[f64], gaps: &[f64], weights: &[f64]) -> (f64, f64) {
    // gaps[i] = 1 - atoms[i], kept separately so atoms close to 1 stay accurate.
    let k = atoms.len();
    let mut energy = 0.0;
    let mut cum = 0.0;
    for i in 0..k {
        cum += weights[i];
        let upper = if i + 1 < k { xi.value(atoms[i + 1]) } else { xi.value(1.0) };
        energy += cum.min(1.0) * (upper - xi.value(atoms[i]));
    }
    // phi(q_i) = int_{q_i}^1 mu([0,s]) ds, built from the top atom down.
    let mut prefix = Vec::with_capacity(k);
    let mut acc = 0.0;
    for w in weights {
        acc += w;
        prefix.push(acc);
    }
    let mut phi = gaps[k - 1];
    let mut entropy = gaps[k - 1].ln();
    for i in (0..k - 1).rev() {
        let width = atoms[i + 1] - atoms[i];
        let w = prefix[i];
        entropy += width / phi * log1p_ratio(w * width / phi);
        phi += w * width;
    }
    if atoms[0] > 0.0 {
        entropy += atoms[0] / phi;
    }
    (energy, entropy)
}

/// `log(1 + z) / z`, continuous at 0 so that vanishing weights reduce to
/// the zero-mass integral `width / phi`.
fn log1p_ratio(z: f64) -> f64 {
    if z < 1e-8 {
        1.0 - 0.5 * z
    } else {
        z.ln_1p() / z
    }
}

/// Crisanti-Sommers functional of `mu` at inverse temperature `beta`.
///
/// The value does not depend on `qhat` beyond the constraint `q_k <= qhat`:
/// the integral over `[q_k, qhat]` cancels against `log(1 - qhat)`.
pub fn cs_functional<C: Covariance>(mu: &DiscreteMeasure, xi: &C, beta: f64) -> Result<f64> {
    if !(beta > 0.0) {
        return out_of_range("beta", beta, "(0, inf)");
    }
    let gaps: Vec<f64> = mu.atoms.iter().map(|q| 1.0 - q).collect();
    let (a, b) = cs_parts(xi, &mu.atoms, &gaps, &mu.weights);
    Ok(0.5 * (beta * beta * a + b))
}

/// Unconstrained coordinates of a k-atom measure.
///
/// `x[0]` sets `q_1 = max(0, 1 - e^{-x[0]})`, `x[1..k]` set the ratios
/// `(1 - q_{j+1}) / (1 - q_j)` through a sigmoid, and `x[k..2k-1]` are
/// weight logits relative to the last atom.
struct Param {
    k: usize,
}

fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

fn logit(p: f64) -> f64 {
    (p / (1.0 - p)).ln()
}

impl Param {
    fn dim(&self) -> usize {
        2 * self.k - 1
    }

    fn decode(&self, x: &[f64], atoms: &mut [f64], gaps: &mut [f64], weights: &mut [f64]) {
        let k = self.k;
        gaps[0] = if x[0] <= 0.0 { 1.0 } else { (-x[0]).exp() };
        for j in 1..k {
            gaps[j] = gaps[j - 1] * sigmoid(x[j]);
        }
        for j in 0..k {
            atoms[j] = 1.0 - gaps[j];
        }
        let top = x[k..].iter().fold(0.0f64, |m, v| m.max(*v));
        let mut total = 0.0;
        for j in 0..k {
            let l = if j + 1 < k { x[k + j] } else { 0.0 };
            weights[j] = (l - top).exp();
            total += weights[j];
        }
        weights.iter_mut().for_each(|w| *w /= total);
    }

    fn encode(&self, atoms: &[f64], weights: &[f64]) -> Vec<f64> {
        let k = self.k;
        let mut x = vec![0.0; self.dim()];
        x[0] = if atoms[0] <= 0.0 { -0.25 } else { -(1.0 - atoms[0]).ln() };
        for j in 1..k {
            let ratio = ((1.0 - atoms[j]) / (1.0 - atoms[j - 1])).clamp(1e-12, 1.0 - 1e-9);
            x[j] = logit(ratio);
        }
        let wk = weights[k - 1].max(1e-300);
        for j in 0..k - 1 {
            x[k + j] = (weights[j].max(1e-300) / wk).ln();
        }
        x
    }
}

/// Smallest value found for a fixed number of atoms.
#[derive(Debug, Clone)]
struct Candidate {
    value: f64,
    atoms: Vec<f64>,
    weights: Vec<f64>,
    converged: bool,
    evals: usize,
}

fn polish<C: Covariance>(xi: &C, beta: f64, atoms: &[f64], weights: &[f64], restarts: usize, tol: f64) -> Candidate {
    let k = atoms.len();
    let param = Param { k };
    let x0 = param.encode(atoms, weights);
    let b2 = beta * beta;
    let mut qa = vec![0.0; k];
    let mut ga = vec![0.0; k];
    let mut wa = vec![0.0; k];
    let f = |x: &[f64]| {
        param.decode(x, &mut qa, &mut ga, &mut wa);
        let (a, b) = cs_parts(xi, &qa, &ga, &wa);
        0.5 * (b2 * a + b)
    };
    let opts = SimplexOptions::default();
    let r = nelder_mead_restarts(f, &x0, &opts, restarts, tol * 1e-2);
    let mut atoms = vec![0.0; k];
    let mut gaps = vec![0.0; k];
    let mut weights = vec![0.0; k];
    param.decode(&r.x, &mut atoms, &mut gaps, &mut weights);
    Candidate {
        value: r.value,
        atoms,
        weights,
        converged: r.converged,
        evals: r.evals,
    }
}

fn eval_measure<C: Covariance>(xi: &C, beta: f64, atoms: &[f64], weights: &[f64]) -> f64 {
    let gaps: Vec<f64> = atoms.iter().map(|q| 1.0 - q).collect();
    let (a, b) = cs_parts(xi, atoms, &gaps, weights);
    0.5 * (beta * beta * a + b)
}

/// `1 - q` on a grid from 1 down to `1e-8`, log-spaced.
fn gap_grid(n: usize) -> impl Iterator<Item = f64> {
    (0..n).map(move |i| 10f64.powf(-8.0 * i as f64 / (n - 1) as f64))
}

/// Starting measures for `k` atoms.
fn initial_measures<C: Covariance>(
    xi: &C,
    beta: f64,
    k: usize,
    previous: Option<&Candidate>,
    warm: Option<&DiscreteMeasure>,
) -> Vec<(Vec<f64>, Vec<f64>)> {
    let mut out = Vec::new();
    let eq = vec![1.0 / k as f64; k];
    if k == 1 {
        out.push((vec![0.0], vec![1.0]));
        let best_q = gap_grid(161)
            .map(|g| 1.0 - g)
            .map(|q| (q, eval_measure(xi, beta, &[q], &[1.0])))
            .min_by(|a, b| a.1.total_cmp(&b.1))
            .map(|(q, _)| q)
            .unwrap_or(0.0);
        out.push((vec![best_q], vec![1.0]));
    } else {
        out.push(((0..k).map(|i| 0.95 * i as f64 / (k - 1) as f64).collect(), eq.clone()));
        // Geometric towards 1, for low temperature.
        out.push(((0..k).map(|i| 1.0 - 0.5f64.powi(3 * i as i32)).collect(), eq));
    }
    if k == 2 {
        // One-step scan over (q_2, mass at q_1 = 0).
        let mut best = (f64::INFINITY, 0.0, 0.0);
        for g in gap_grid(41) {
            let q = 1.0 - g;
            if q <= 0.0 {
                continue;
            }
            for j in 0..25 {
                let m = 10f64.powf(-6.0 * j as f64 / 24.0);
                if m >= 1.0 {
                    continue;
                }
                let v = eval_measure(xi, beta, &[0.0, q], &[m, 1.0 - m]);
                if v < best.0 {
                    best = (v, q, m);
                }
            }
        }
        if best.0.is_finite() {
            out.push((vec![0.0, best.1], vec![best.2, 1.0 - best.2]));
        }
    }
    if let Some(w) = warm {
        if w.atoms.len() == k {
            out.push((w.atoms.clone(), w.weights.clone()));
        } else if w.atoms.len() < k {
            out.extend(splits(&w.atoms, &w.weights, k));
        }
    }
    if let Some(prev) = previous {
        out.extend(splits(&prev.atoms, &prev.weights, k));
    }
    out
}

/// Measures with one or more extra atoms inserted into `(atoms, weights)`
/// until there are `k`.
fn splits(atoms: &[f64], weights: &[f64], k: usize) -> Vec<(Vec<f64>, Vec<f64>)> {
    let mut frontier = vec![(atoms.to_vec(), weights.to_vec())];
    while frontier[0].0.len() < k {
        let mut next = Vec::new();
        for (a, w) in &frontier {
            next.extend(insert_one(a, w));
        }
        // Keep the search from growing combinatorially.
        next.truncate(4);
        if next.is_empty() {
            return next;
        }
        frontier = next;
    }
    frontier
}

fn insert_one(atoms: &[f64], weights: &[f64]) -> Vec<(Vec<f64>, Vec<f64>)> {
    let n = atoms.len();
    let mut out = Vec::new();
    let mut with = |pos: usize, q: f64, donor: usize| {
        let mut a = atoms.to_vec();
        let mut w = weights.to_vec();
        let share = 0.1 * w[donor];
        w[donor] -= share;
        a.insert(pos, q);
        w.insert(pos, share);
        if a.windows(2).all(|p| p[0] < p[1]) && a[a.len() - 1] < 1.0 {
            out.push((a, w));
        }
    };
    if atoms[0] > 0.0 {
        with(0, 0.0, 0);
    } else if n > 1 {
        with(1, 0.5 * atoms[1], 0);
    }
    let top = atoms[n - 1];
    with(n, top + 0.5 * (1.0 - top), n - 1);
    if let Some((i, _)) = atoms
        .windows(2)
        .enumerate()
        .max_by(|a, b| (a.1[1] - a.1[0]).total_cmp(&(b.1[1] - b.1[0])))
    {
        with(i + 1, 0.5 * (atoms[i] + atoms[i + 1]), i + 1);
    }
    if n == 1 && atoms[0] > 0.0 {
        with(0, 0.5 * atoms[0], 0);
    }
    out
}

#[derive(Debug, Clone, Copy)]
pub struct CsOptions {
    pub k_max: usize,
    pub tol: f64,
    pub restarts: usize,
}

impl Default for CsOptions {
    fn default() -> Self {
        Self {
            k_max: DEFAULT_K_MAX,
            tol: DEFAULT_CS_TOL,
            restarts: 5,
        }
    }
}

#[derive(Debug, Clone)]
pub struct CsMinimum {
    pub value: f64,
    pub measure: DiscreteMeasure,
    /// `dF/dbeta = beta int mu([0,q]) xi'(q) dq` at the minimizer.
    pub slope: f64,
    /// False when a simplex search hit its evaluation cap.
    pub converged: bool,
    pub evals: usize,
}

/// `F(beta) = inf_mu P(mu)` over measures with at most `k_max` atoms.
pub fn minimize_cs<C: Covariance>(xi: &C, beta: f64, opts: &CsOptions) -> Result<CsMinimum> {
    minimize_cs_warm(xi, beta, opts, None)
}

/// As [`minimize_cs`], also starting from `warm` (typically the minimizer at
/// a neighbouring beta).
pub fn minimize_cs_warm<C: Covariance>(
    xi: &C,
    beta: f64,
    opts: &CsOptions,
    warm: Option<&DiscreteMeasure>,
) -> Result<CsMinimum> {
    if !(beta > 0.0) || !beta.is_finite() {
        return out_of_range("beta", beta, "(0, inf)");
    }
    if opts.k_max < 1 {
        return out_of_range("k_max", opts.k_max as f64, "[1, inf)");
    }
    let mut best: Option<Candidate> = None;
    let mut evals = 0;
    let mut all_converged = true;
    for k in 1..=opts.k_max {
        let mut level: Option<Candidate> = None;
        for (a, w) in initial_measures(xi, beta, k, best.as_ref(), warm) {
            let c = polish(xi, beta, &a, &w, opts.restarts, opts.tol);
            evals += c.evals;
            if level.as_ref().map_or(true, |l| c.value < l.value) {
                level = Some(c);
            }
        }
        let level = match level {
            Some(l) => l,
            None => break,
        };
        match &best {
            Some(b) if b.value - level.value < opts.tol => break,
            _ => {
                all_converged &= level.converged;
                best = Some(level);
            }
        }
    }
    let best = best.ok_or_else(|| Error::Degenerate("no admissible starting measure".into()))?;
    let qk = best.atoms[best.atoms.len() - 1];
    let full = DiscreteMeasure {
        atoms: best.atoms.clone(),
        weights: best.weights.clone(),
        qhat: qk,
    };
    let pruned = full.pruned(PRUNE_WEIGHT);
    let pruned_value = eval_measure(xi, beta, &pruned.atoms, &pruned.weights);
    let (measure, value) = if (pruned_value - best.value).abs() <= opts.tol {
        (pruned, pruned_value)
    } else {
        (full, best.value)
    };
    let gaps: Vec<f64> = measure.atoms.iter().map(|q| 1.0 - q).collect();
    let (a, _) = cs_parts(xi, &measure.atoms, &gaps, &measure.weights);
    Ok(CsMinimum {
        value,
        slope: beta * a,
        measure,
        converged: all_converged,
        evals,
    })
}

/// Shape problems found on a free-energy curve.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct CurveDiagnostics {
    /// Indices `i` with `F(beta_{i+1}) < F(beta_i) - slack`.
    pub monotonicity: Vec<usize>,
    /// Interior indices where the curve lies above its chord by more than `slack`.
    pub convexity: Vec<usize>,
    /// Grid points whose minimization did not converge.
    pub unconverged: Vec<usize>,
}

impl CurveDiagnostics {
    pub fn is_clean(&self) -> bool {
        self.monotonicity.is_empty() && self.convexity.is_empty() && self.unconverged.is_empty()
    }
}

/// Nondecreasing and convex checks on `(betas, values)`.
pub fn check_curve(betas: &[f64], values: &[f64], slack: f64) -> CurveDiagnostics {
    let mut d = CurveDiagnostics::default();
    for i in 0..values.len().saturating_sub(1) {
        if values[i + 1] < values[i] - slack {
            d.monotonicity.push(i);
        }
    }
    for i in 1..values.len().saturating_sub(1) {
        let (b0, b1, b2) = (betas[i - 1], betas[i], betas[i + 1]);
        let t = (b1 - b0) / (b2 - b0);
        let chord = (1.0 - t) * values[i - 1] + t * values[i + 1];
        if values[i] > chord + slack {
            d.convexity.push(i);
        }
    }
    d
}

pub const CURVE_SLACK: f64 = 1e-8;

#[derive(Debug, Clone)]
pub struct FreeEnergyCurve {
    pub betas: Vec<f64>,
    pub values: Vec<f64>,
    /// `F'(beta)` at each grid point.
    pub slopes: Vec<f64>,
    pub measures: Vec<DiscreteMeasure>,
    pub diagnostics: CurveDiagnostics,
}

/// `F` on an increasing grid of positive betas, warm-started along the grid.
pub fn free_energy_curve<C: Covariance>(xi: &C, betas: &[f64], opts: &CsOptions) -> Result<FreeEnergyCurve> {
    if betas.is_empty() {
        return Err(Error::Degenerate("empty beta grid".into()));
    }
    if !(betas[0] > 0.0) || betas.windows(2).any(|w| !(w[0] < w[1])) {
        return Err(Error::InvalidMeasure("beta grid must be positive and strictly increasing".into()));
    }
    let mut values = Vec::with_capacity(betas.len());
    let mut slopes = Vec::with_capacity(betas.len());
    let mut measures: Vec<DiscreteMeasure> = Vec::with_capacity(betas.len());
    let mut unconverged = Vec::new();
    for (i, &b) in betas.iter().enumerate() {
        let r = minimize_cs_warm(xi, b, opts, measures.last())?;
        if !r.converged {
            unconverged.push(i);
        }
        values.push(r.value);
        slopes.push(r.slope);
        measures.push(r.measure);
    }
    let mut diagnostics = check_curve(betas, &values, CURVE_SLACK);
    diagnostics.unconverged = unconverged;
    Ok(FreeEnergyCurve {
        betas: betas.to_vec(),
        values,
        slopes,
        measures,
        diagnostics,
    })
}

impl FreeEnergyCurve {
    /// Nodes `(beta, F, F')` including the anchor `(0, 0, 0)`.
    fn nodes(&self) -> Vec<(f64, f64, f64)> {
        let mut n = vec![(0.0, 0.0, 0.0)];
        for i in 0..self.betas.len() {
            n.push((self.betas[i], self.values[i], self.slopes[i]));
        }
        n
    }

    /// Cubic Hermite interpolant of `F` and its derivative at `beta`.
    pub fn interpolate(&self, beta: f64) -> Result<(f64, f64)> {
        let nodes = self.nodes();
        let last = nodes[nodes.len() - 1].0;
        if !(0.0..=last).contains(&beta) {
            return out_of_range("beta", beta, "[0, largest grid beta]");
        }
        let i = nodes.iter().rposition(|n| n.0 <= beta).unwrap_or(0).min(nodes.len() - 2);
        Ok(hermite(nodes[i], nodes[i + 1], beta))
    }

    /// Largest `|E|` the grid resolves: the slope at the last grid point.
    pub fn max_energy(&self) -> f64 {
        self.slopes[self.slopes.len() - 1]
    }
}

fn hermite(a: (f64, f64, f64), b: (f64, f64, f64), x: f64) -> (f64, f64) {
    let h = b.0 - a.0;
    let t = (x - a.0) / h;
    let (t2, t3) = (t * t, t * t * t);
    let v = (2.0 * t3 - 3.0 * t2 + 1.0) * a.1
        + (t3 - 2.0 * t2 + t) * h * a.2
        + (-2.0 * t3 + 3.0 * t2) * b.1
        + (t3 - t2) * h * b.2;
    let d = ((6.0 * t2 - 6.0 * t) * a.1 + (-6.0 * t2 + 6.0 * t) * b.1) / h
        + (3.0 * t2 - 4.0 * t + 1.0) * a.2
        + (3.0 * t2 - 2.0 * t) * b.2;
    (v, d)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VolumeExponent {
    pub value: f64,
    /// Minimizing beta.
    pub beta: f64,
}

/// `V(E) = min_{beta >= 0} (F(beta) - beta |E|)`, minimized on the grid and
/// refined on the interpolant between neighbouring grid points.
pub fn volume_exponent(curve: &FreeEnergyCurve, energy: f64) -> Result<VolumeExponent> {
    let e = energy.abs();
    let emax = curve.max_energy();
    if !(e < emax) {
        return out_of_range("|E|", e, "[0, F'(largest grid beta))");
    }
    if e == 0.0 {
        return Ok(VolumeExponent { value: 0.0, beta: 0.0 });
    }
    let nodes = curve.nodes();
    // F' is nondecreasing: locate the bracket where it crosses e.
    let j = nodes.iter().position(|n| n.2 >= e).unwrap_or(nodes.len() - 1).max(1);
    let (a, b) = (nodes[j - 1], nodes[j]);
    let (mut lo, mut hi) = (a.0, b.0);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if hermite(a, b, mid).1 < e {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo <= 1e-15 * hi.max(1.0) {
            break;
        }
    }
    let beta = 0.5 * (lo + hi);
    let mut value = hermite(a, b, beta).0 - beta * e;
    let mut arg = beta;
    for n in &nodes {
        let v = n.1 - n.0 * e;
        if v < value {
            value = v;
            arg = n.0;
        }
    }
    Ok(VolumeExponent { value, beta: arg })
}

/// `max_E (beta E + V(E))` over `E` in `[0, F'(largest beta))`, by a grid of
/// `samples` energies followed by golden-section refinement.
pub fn legendre_roundtrip(curve: &FreeEnergyCurve, beta: f64, samples: usize) -> Result<f64> {
    let emax = curve.max_energy();
    let samples = samples.max(3);
    let g = |e: f64| volume_exponent(curve, e).map(|v| beta * e + v.value);
    let grid: Vec<f64> = (0..samples).map(|i| emax * i as f64 / samples as f64).collect();
    let mut best = (f64::NEG_INFINITY, 0usize);
    for (i, e) in grid.iter().enumerate() {
        let v = g(*e)?;
        if v > best.0 {
            best = (v, i);
        }
    }
    let lo0 = if best.1 == 0 { 0.0 } else { grid[best.1 - 1] };
    let hi0 = if best.1 + 1 < samples { grid[best.1 + 1] } else { emax * (1.0 - 1e-12) };
    let r = (5f64.sqrt() - 1.0) / 2.0;
    let (mut lo, mut hi) = (lo0, hi0);
    let mut c = hi - r * (hi - lo);
    let mut d = lo + r * (hi - lo);
    let (mut fc, mut fd) = (g(c)?, g(d)?);
    for _ in 0..100 {
        if hi - lo < 1e-13 {
            break;
        }
        if fc > fd {
            hi = d;
            d = c;
            fd = fc;
            c = hi - r * (hi - lo);
            fc = g(c)?;
        } else {
            lo = c;
            c = d;
            fc = fd;
            d = lo + r * (hi - lo);
            fd = g(d)?;
        }
    }
    Ok(best.0.max(fc).max(fd))
}

#[derive(Debug, Clone)]
pub struct GroundState {
    pub estimate: f64,
    pub betas: Vec<f64>,
    pub values: Vec<f64>,
    /// Secant slopes between consecutive betas.
    pub slopes: Vec<f64>,
    /// False when the slopes did not settle within `2^14`.
    pub converged: bool,
}

/// Large-beta slope of `F`: secants at `beta_j = 2^j` until successive
/// slopes differ by less than `tol`.
pub fn ground_state<C: Covariance>(xi: &C, tol: f64, opts: &CsOptions) -> Result<GroundState> {
    if xi.value(1.0) <= 0.0 {
        return Err(Error::Degenerate("xi(1) = 0".into()));
    }
    let mut betas = Vec::new();
    let mut values = Vec::new();
    let mut slopes: Vec<f64> = Vec::new();
    let mut warm: Option<DiscreteMeasure> = None;
    let mut converged = false;
    for j in 0..=MAX_DOUBLINGS {
        let beta = 2f64.powi(j as i32);
        let r = minimize_cs_warm(xi, beta, opts, warm.as_ref())?;
        warm = Some(r.measure);
        betas.push(beta);
        values.push(r.value);
        if j >= 1 {
            let n = betas.len();
            let s = (values[n - 1] - values[n - 2]) / (betas[n - 1] - betas[n - 2]);
            slopes.push(s);
            if slopes.len() >= 2 && (s - slopes[slopes.len() - 2]).abs() < tol {
                converged = true;
                break;
            }
        }
    }
    Ok(GroundState {
        estimate: slopes[slopes.len() - 1],
        betas,
        values,
        slopes,
        converged,
    })
}

/// `E*(q)` for `H` restricted to the sphere of squared radius `qN`; zero at `q = 0`.
pub fn restricted_ground_state(m: &Mixture, q: f64, tol: f64, opts: &CsOptions) -> Result<GroundState> {
    if q == 0.0 {
        return Ok(GroundState {
            estimate: 0.0,
            betas: Vec::new(),
            values: Vec::new(),
            slopes: Vec::new(),
            converged: true,
        });
    }
    ground_state(&m.restricted(q)?, tol, opts)
}

#[derive(Debug, Clone)]
pub struct TapCorrection {
    /// `log(1 - q) / 2 + F(q, beta)`.
    pub value: f64,
    /// Free energy of the band mixture `xi_q`.
    pub band_free_energy: f64,
    /// Onsager term `beta^2 xi_q(1) / 2`.
    pub onsager: f64,
    pub measure: DiscreteMeasure,
    pub converged: bool,
}

pub fn tap_correction(m: &Mixture, beta: f64, q: f64, opts: &CsOptions) -> Result<TapCorrection> {
    let band = m.band(q)?;
    let onsager = 0.5 * beta * beta * band.value(1.0);
    let r = minimize_cs(&band, beta, opts)?;
    Ok(TapCorrection {
        value: 0.5 * (1.0 - q).ln() + r.value,
        band_free_energy: r.value,
        onsager,
        measure: r.measure,
        converged: r.converged,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct TapRow {
    pub q: f64,
    pub e_star: f64,
    pub f_tap: f64,
    /// `beta E*(q) + F_TAP(q)`.
    pub g: f64,
    pub flagged: bool,
}

#[derive(Debug, Clone)]
pub struct TapScan {
    pub rows: Vec<TapRow>,
    pub maximum: f64,
    /// Grid points within `tol` of the maximum.
    pub near_argmax: Vec<f64>,
}

pub const TAP_GRID_EPS: f64 = 1e-3;
pub const DEFAULT_TAP_TOL: f64 = 1e-2;

/// `G(q) = beta E*(q) + log(1 - q) / 2 + F(q, beta)` over `q_grid`.
pub fn tap_scan(m: &Mixture, beta: f64, q_grid: &[f64], tol: f64, opts: &CsOptions) -> Result<TapScan> {
    if q_grid.is_empty() {
        return Err(Error::Degenerate("empty q grid".into()));
    }
    let mut rows = Vec::with_capacity(q_grid.len());
    for &q in q_grid {
        if !(0.0..=1.0 - TAP_GRID_EPS).contains(&q) {
            return out_of_range("q", q, "[0, 1 - 1e-3]");
        }
        let gs = restricted_ground_state(m, q, DEFAULT_SLOPE_TOL, opts)?;
        let tap = tap_correction(m, beta, q, opts)?;
        rows.push(TapRow {
            q,
            e_star: gs.estimate,
            f_tap: tap.value,
            g: beta * gs.estimate + tap.value,
            flagged: !(gs.converged && tap.converged),
        });
    }
    let maximum = rows.iter().map(|r| r.g).fold(f64::NEG_INFINITY, f64::max);
    let near_argmax = rows.iter().filter(|r| r.g >= maximum - tol).map(|r| r.q).collect();
    Ok(TapScan {
        rows,
        maximum,
        near_argmax,
    })
}
