//! Metropolis sampling of the Gibbs measure `G ∝ e^{beta H}` on the sphere
//! `|x|^2 = N`, optionally restricted to a band, and the estimators built on it.

use alloc::vec;
use alloc::vec::Vec;
use num_traits::Float;
use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{out_of_range, Error, Result};
use crate::hamiltonian::{overlap, Realization};
use crate::linalg::{axpy, dot, norm};
use crate::quad;
use crate::rng::{self, keyed};

pub const TARGET_ACCEPTANCE: (f64, f64) = (0.25, 0.45);
pub const MIN_SIGMA: f64 = 1e-4;
/// Largest proposal scale; reached when every move is accepted (e.g. `beta = 0`).
pub const MAX_SIGMA: f64 = 4.0;
pub const UNTUNABLE_ACCEPTANCE: f64 = 0.05;
const TUNE_WINDOW: usize = 100;

/// `{x : |R(x, m) - R(m, m)| <= delta}`.
#[derive(Debug, Clone, PartialEq)]
pub struct Band {
    center: Vec<f64>,
    q: f64,
    delta: f64,
}

impl Band {
    pub fn new(center: Vec<f64>, delta: f64) -> Result<Self> {
        let n = center.len() as f64;
        let q = dot(&center, &center) / n;
        if !(q <= 1.0 + 1e-12) {
            return out_of_range("|m|^2/N", q, "[0, 1]");
        }
        if !(delta > 0.0) {
            return out_of_range("delta", delta, "(0, inf)");
        }
        Ok(Self {
            center,
            q: q.min(1.0),
            delta,
        })
    }

    /// Centered at the origin with `delta = 1`: the whole sphere.
    pub fn whole_sphere(n: usize) -> Self {
        Self {
            center: vec![0.0; n],
            q: 0.0,
            delta: 1.0,
        }
    }

    pub fn center(&self) -> &[f64] {
        &self.center
    }

    pub fn q(&self) -> f64 {
        self.q
    }

    pub fn delta(&self) -> f64 {
        self.delta
    }

    pub fn contains(&self, x: &[f64]) -> bool {
        (overlap(x, &self.center) - self.q).abs() <= self.delta
    }

    /// A point of the sphere with `R(x, m) = q`: `m` plus an orthogonal
    /// complement of squared length `(1 - q) N`.
    pub fn interior_point(&self, seed: u64) -> Vec<f64> {
        let n = self.center.len();
        let mut r = keyed([seed, rng::TAG_CHAIN, u64::MAX, 0]);
        let mut e = rng::normal_vec(&mut r, n);
        if self.q > 0.0 {
            let c = dot(&e, &self.center) / dot(&self.center, &self.center);
            axpy(-c, &self.center, &mut e);
        }
        let s = ((1.0 - self.q) * n as f64).sqrt() / norm(&e);
        self.center.iter().zip(&e).map(|(m, v)| m + s * v).collect()
    }
}

/// `min(1, e^{log_ratio})`.
pub fn acceptance_probability(log_ratio: f64) -> f64 {
    if log_ratio >= 0.0 {
        1.0
    } else {
        log_ratio.exp()
    }
}

#[derive(Debug, Clone)]
pub struct ChainOptions {
    pub n_steps: usize,
    /// Fraction of steps discarded (and used for tuning the proposal scale).
    pub burn_in: f64,
    pub thin: usize,
    pub initial_sigma: f64,
    pub band: Option<Band>,
    pub start: Option<Vec<f64>>,
    /// Keep thinned samples (otherwise only energies are kept).
    pub keep_samples: bool,
}

impl Default for ChainOptions {
    fn default() -> Self {
        Self {
            n_steps: 10_000,
            burn_in: 0.2,
            thin: 1,
            initial_sigma: 0.5,
            band: None,
            start: None,
            keep_samples: true,
        }
    }
}

#[derive(Debug, Clone)]
pub struct Chain {
    /// Thinned post-burn-in states.
    pub samples: Vec<Vec<f64>>,
    /// `H / N` at every post-burn-in step.
    pub energies: Vec<f64>,
    pub acceptance: f64,
    pub sigma: f64,
    pub last: Vec<f64>,
    /// Acceptance stayed below 0.05 at the smallest proposal scale.
    pub flagged: bool,
}

impl Chain {
    pub fn mean_energy(&self) -> f64 {
        self.energies.iter().sum::<f64>() / self.energies.len().max(1) as f64
    }

    /// Standard error of the mean energy by batch means (20 batches).
    pub fn energy_se(&self) -> f64 {
        batch_means_se(&self.energies, 20)
    }
}

pub fn batch_means_se(xs: &[f64], batches: usize) -> f64 {
    let size = xs.len() / batches;
    if size == 0 {
        return f64::INFINITY;
    }
    let means: Vec<f64> = (0..batches)
        .map(|b| xs[b * size..(b + 1) * size].iter().sum::<f64>() / size as f64)
        .collect();
    let mu = means.iter().sum::<f64>() / batches as f64;
    let var = means.iter().map(|m| (m - mu) * (m - mu)).sum::<f64>() / (batches - 1) as f64;
    (var / batches as f64).sqrt()
}

/// Metropolis chain with proposal `x' = sqrt(N) (x + sigma g) / |x + sigma g|`,
/// `g` standard normal on the tangent space. Moves leaving the band are rejected.
pub fn mcmc_chain(h: &Realization, beta: f64, seed: u64, opts: &ChainOptions) -> Result<Chain> {
    if !(beta >= 0.0) {
        return out_of_range("beta", beta, "[0, inf)");
    }
    if opts.thin == 0 {
        return out_of_range("thin", 0.0, "[1, inf)");
    }
    if !(0.0..1.0).contains(&opts.burn_in) {
        return out_of_range("burn_in", opts.burn_in, "[0, 1)");
    }
    let n = h.dim();
    let nf = n as f64;
    let sqrt_n = nf.sqrt();
    let mut r = keyed([seed, rng::TAG_CHAIN, 0, 0]);
    let mut x = match (&opts.start, &opts.band) {
        (Some(s), _) => {
            if s.len() != n {
                return Err(Error::DimensionMismatch {
                    expected: n,
                    found: s.len(),
                });
            }
            let k = sqrt_n / norm(s);
            s.iter().map(|v| v * k).collect()
        }
        (None, Some(b)) => b.interior_point(seed),
        (None, None) => rng::uniform_sphere(&mut r, n, nf),
    };
    if let Some(b) = &opts.band {
        if b.center().len() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                found: b.center().len(),
            });
        }
        if !b.contains(&x) {
            return Err(Error::Degenerate("chain start lies outside the band".into()));
        }
    }
    let mut e = h.energy(&x)?;
    let burn = (opts.burn_in * opts.n_steps as f64) as usize;
    let mut sigma = opts.initial_sigma.clamp(MIN_SIGMA, MAX_SIGMA);
    let mut window_accepts = 0usize;
    let mut accepts = 0usize;
    let mut samples = Vec::new();
    let mut energies = Vec::with_capacity(opts.n_steps - burn);
    let mut y = vec![0.0; n];
    for step in 0..opts.n_steps {
        for v in y.iter_mut() {
            *v = r.sample(StandardNormal);
        }
        let c = dot(&y, &x) / nf;
        for (yi, xi) in y.iter_mut().zip(&x) {
            *yi = xi + sigma * (*yi - c * xi);
        }
        let k = sqrt_n / norm(&y);
        y.iter_mut().for_each(|v| *v *= k);
        let inside = opts.band.as_ref().map_or(true, |b| b.contains(&y));
        let u: f64 = r.random();
        let mut accepted = false;
        if inside {
            let e_new = h.energy(&y)?;
            if u < acceptance_probability(beta * (e_new - e)) {
                core::mem::swap(&mut x, &mut y);
                e = e_new;
                accepted = true;
            }
        }
        if step < burn {
            window_accepts += accepted as usize;
            if (step + 1) % TUNE_WINDOW == 0 {
                let a = window_accepts as f64 / TUNE_WINDOW as f64;
                if a < TARGET_ACCEPTANCE.0 {
                    sigma = (sigma * 0.7).max(MIN_SIGMA);
                } else if a > TARGET_ACCEPTANCE.1 {
                    sigma = (sigma * 1.3).min(MAX_SIGMA);
                }
                window_accepts = 0;
            }
        } else {
            accepts += accepted as usize;
            energies.push(e / nf);
            if opts.keep_samples && (step - burn) % opts.thin == 0 {
                samples.push(x.clone());
            }
        }
    }
    let kept = opts.n_steps - burn;
    let acceptance = accepts as f64 / kept.max(1) as f64;
    Ok(Chain {
        samples,
        energies,
        acceptance,
        flagged: acceptance < UNTUNABLE_ACCEPTANCE && sigma <= MIN_SIGMA * 1.0001,
        sigma,
        last: x,
    })
}

/// Gram matrix of overlaps `R(x^i, x^j)` for a small set of samples.
#[derive(Debug, Clone, PartialEq)]
pub struct OverlapArray {
    pub samples: Vec<Vec<f64>>,
    /// Row-major `len x len`.
    pub overlaps: Vec<f64>,
}

impl OverlapArray {
    pub fn new(samples: Vec<Vec<f64>>) -> Result<Self> {
        let k = samples.len();
        if let Some(first) = samples.first() {
            if let Some(bad) = samples.iter().find(|s| s.len() != first.len()) {
                return Err(Error::DimensionMismatch {
                    expected: first.len(),
                    found: bad.len(),
                });
            }
        }
        let mut overlaps = vec![0.0; k * k];
        for i in 0..k {
            for j in i..k {
                let r = overlap(&samples[i], &samples[j]);
                overlaps[i * k + j] = r;
                overlaps[j * k + i] = r;
            }
        }
        Ok(Self { samples, overlaps })
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.overlaps[i * self.len() + j]
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Histogram {
    /// `bins + 1` increasing edges.
    pub edges: Vec<f64>,
    pub counts: Vec<usize>,
}

impl Histogram {
    pub fn new(values: &[f64], lo: f64, hi: f64, bins: usize) -> Result<Self> {
        if bins == 0 || !(lo < hi) {
            return Err(Error::Degenerate("histogram needs bins > 0 and lo < hi".into()));
        }
        let width = (hi - lo) / bins as f64;
        let edges = (0..=bins).map(|i| lo + width * i as f64).collect();
        let mut counts = vec![0; bins];
        for v in values {
            if *v >= lo && *v <= hi {
                let b = (((v - lo) / width) as usize).min(bins - 1);
                counts[b] += 1;
            }
        }
        Ok(Self { edges, counts })
    }

    pub fn total(&self) -> usize {
        self.counts.iter().sum()
    }
}

#[derive(Debug, Clone)]
pub struct OverlapStatistics {
    /// `R(x^a_t, x^b_t)` for every pair of chains `a < b` and aligned index `t`.
    pub overlaps: Vec<f64>,
    pub histogram: Histogram,
}

/// Cross-chain overlaps between aligned samples of independent chains.
pub fn overlap_statistics(chains: &[&[Vec<f64>]], bins: usize) -> Result<OverlapStatistics> {
    if chains.len() < 2 {
        return Err(Error::Degenerate("overlap statistics need at least two chains".into()));
    }
    let len = chains.iter().map(|c| c.len()).min().unwrap_or(0);
    let mut overlaps = Vec::new();
    for a in 0..chains.len() {
        for b in a + 1..chains.len() {
            for t in 0..len {
                overlaps.push(overlap(&chains[a][t], &chains[b][t]));
            }
        }
    }
    let histogram = Histogram::new(&overlaps, -1.0, 1.0, bins)?;
    Ok(OverlapStatistics { overlaps, histogram })
}

/// `log` of the normalizing constant of the density `c_N (1 - t^2)^{(N-3)/2}`
/// of `t = <x, e>` for `x` uniform on the unit sphere in `R^N`.
pub fn log_overlap_normalizer(n: usize) -> f64 {
    let nf = n as f64;
    libm::lgamma(nf / 2.0) - 0.5 * core::f64::consts::PI.ln() - libm::lgamma((nf - 1.0) / 2.0)
}

/// Density of `t = <x, e>` for `x` uniform on the unit sphere in `R^N`.
pub fn overlap_density(t: f64, n: usize) -> f64 {
    if !(t > -1.0 && t < 1.0) {
        return 0.0;
    }
    (log_overlap_normalizer(n) + 0.5 * (n as f64 - 3.0) * (1.0 - t * t).ln()).exp()
}

/// `(1/N) log` of the uniform mass of a band of half-width `delta` around a
/// center of squared norm `qN`.
pub fn band_log_volume(q: f64, delta: f64, n: usize) -> Result<f64> {
    if !(0.0..1.0).contains(&q) {
        return out_of_range("q", q, "[0, 1)");
    }
    if !(delta > 0.0) {
        return out_of_range("delta", delta, "(0, inf)");
    }
    if n < 3 {
        return out_of_range("N", n as f64, "[3, inf)");
    }
    if q == 0.0 {
        // R(x, 0) = 0 for every x: the band is the whole sphere.
        return Ok(0.0);
    }
    // R(x, m) = sqrt(q) t with t the cosine of the angle to m.
    let s = q.sqrt();
    let lo = ((q - delta) / s).max(-1.0);
    let hi = ((q + delta) / s).min(1.0);
    if !(lo < hi) {
        return Err(Error::Degenerate("band window is empty".into()));
    }
    if lo <= -1.0 && hi >= 1.0 {
        return Ok(0.0);
    }
    let a = 0.5 * (n as f64 - 3.0);
    // Log-density peaks at the window point closest to 0.
    let peak_t = if lo > 0.0 {
        lo
    } else if hi < 0.0 {
        hi
    } else {
        0.0
    };
    let log_peak = a * (1.0 - peak_t * peak_t).ln();
    let f = |t: f64| (a * (1.0 - t * t).ln() - log_peak).exp();
    let integral = quad::integrate(f, lo, hi, 0.0, 1e-13, 2000);
    if !(integral.value > 0.0) {
        return Err(Error::Degenerate("band mass underflowed".into()));
    }
    Ok((log_overlap_normalizer(n) + log_peak + integral.value.ln()) / n as f64)
}

#[derive(Debug, Clone)]
pub struct BandFreeEnergy {
    pub estimate: f64,
    pub se: f64,
    pub per_seed: Vec<f64>,
    /// Within-seed standard errors (batch means propagated through the trapezoid rule).
    pub per_seed_se: Vec<f64>,
    pub betas: Vec<f64>,
    /// Mean `H / N` per seed and grid point.
    pub mean_energies: Vec<Vec<f64>>,
    pub log_volume: f64,
    /// Some seed disagrees with the mean by more than 3 standard errors, or a
    /// chain could not be tuned.
    pub flagged: bool,
}

/// `F_{N,beta}(m, delta) = (1/N) log int_Band e^{beta H}` by thermodynamic
/// integration from the exact `beta = 0` band volume.
pub fn band_free_energy(
    h: &Realization,
    band: &Band,
    beta: f64,
    n_points: usize,
    seeds: &[u64],
    chain: &ChainOptions,
) -> Result<BandFreeEnergy> {
    if !(beta >= 0.0) {
        return out_of_range("beta", beta, "[0, inf)");
    }
    if n_points < 2 {
        return out_of_range("n_points", n_points as f64, "[2, inf)");
    }
    if seeds.is_empty() {
        return Err(Error::Degenerate("no seeds".into()));
    }
    let n = h.dim();
    let log_volume = band_log_volume(band.q().min(1.0 - 1e-15), band.delta(), n)?;
    let betas: Vec<f64> = (0..n_points).map(|i| beta * i as f64 / (n_points - 1) as f64).collect();
    let w = beta / (n_points - 1) as f64;
    let mut per_seed = Vec::new();
    let mut per_seed_se = Vec::new();
    let mut mean_energies = Vec::new();
    let mut flagged = false;
    for &seed in seeds {
        let mut start = band.interior_point(seed);
        let mut means = Vec::with_capacity(n_points);
        let mut var = 0.0;
        let mut integral = 0.0;
        for (j, &b) in betas.iter().enumerate() {
            let opts = ChainOptions {
                band: Some(band.clone()),
                start: Some(start.clone()),
                keep_samples: false,
                ..chain.clone()
            };
            let c = mcmc_chain(h, b, rng::derive_seed(seed, j as u64), &opts)?;
            flagged |= c.flagged;
            let weight = if j == 0 || j + 1 == n_points { 0.5 * w } else { w };
            integral += weight * c.mean_energy();
            let se = c.energy_se();
            var += weight * weight * se * se;
            means.push(c.mean_energy());
            start = c.last;
        }
        per_seed.push(log_volume + integral);
        per_seed_se.push(var.sqrt());
        mean_energies.push(means);
    }
    let k = per_seed.len() as f64;
    let estimate = per_seed.iter().sum::<f64>() / k;
    let se = if per_seed.len() >= 2 {
        let v = per_seed.iter().map(|v| (v - estimate) * (v - estimate)).sum::<f64>() / (k - 1.0);
        (v / k).sqrt()
    } else {
        per_seed_se[0]
    };
    for (v, s) in per_seed.iter().zip(&per_seed_se) {
        if (v - estimate).abs() > 3.0 * (s * s + se * se).sqrt() {
            flagged = true;
        }
    }
    Ok(BandFreeEnergy {
        estimate,
        se,
        per_seed,
        per_seed_se,
        betas,
        mean_energies,
        log_volume,
        flagged,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Verdict {
    ConsistentWithMultisamplable,
    NotMultisamplable,
    Inconclusive,
}

pub const DEFAULT_ETA: f64 = 0.05;
pub const MIN_HITS: usize = 50;

#[derive(Debug, Clone, PartialEq)]
pub struct MultisampReport {
    pub hits: usize,
    pub trials: usize,
    /// `(1/N) log` of the hit frequency, when there are at least 50 hits.
    pub estimate: Option<f64>,
    pub se: Option<f64>,
    /// One-sided upper bound on `(1/N) log P`, reported when hits are scarce.
    pub upper_bound: Option<f64>,
    pub verdict: Verdict,
}

/// Frequency of `|R(x^i, x^j) - q| < epsilon` for all pairs among `k`
/// independent chains, compared on aligned samples.
pub fn multisamplability_diagnostic(
    h: &Realization,
    beta: f64,
    q: f64,
    k: usize,
    epsilon: f64,
    seeds: &[u64],
    chain: &ChainOptions,
    eta: f64,
) -> Result<MultisampReport> {
    if !(2..=3).contains(&k) {
        return out_of_range("k", k as f64, "{2, 3}");
    }
    if h.dim() > 60 {
        return out_of_range("N", h.dim() as f64, "[2, 60]");
    }
    if !(0.0..1.0).contains(&q) {
        return out_of_range("q", q, "[0, 1)");
    }
    if seeds.len() < k {
        return Err(Error::Degenerate("need one seed per replica".into()));
    }
    let opts = ChainOptions {
        keep_samples: true,
        band: None,
        ..chain.clone()
    };
    let mut hits = 0;
    let mut trials = 0;
    // Disjoint groups of k chains.
    for group in seeds.chunks_exact(k) {
        let chains: Vec<Chain> = group
            .iter()
            .map(|&s| mcmc_chain(h, beta, s, &opts))
            .collect::<Result<_>>()?;
        let len = chains.iter().map(|c| c.samples.len()).min().unwrap_or(0);
        for t in 0..len {
            trials += 1;
            let mut all = true;
            for a in 0..k {
                for b in a + 1..k {
                    if (overlap(&chains[a].samples[t], &chains[b].samples[t]) - q).abs() >= epsilon {
                        all = false;
                    }
                }
            }
            hits += all as usize;
        }
    }
    if trials == 0 {
        return Err(Error::Degenerate("chains produced no samples".into()));
    }
    let nf = h.dim() as f64;
    let t = trials as f64;
    if hits >= MIN_HITS {
        let p = hits as f64 / t;
        let est = p.ln() / nf;
        let se = ((1.0 - p) / hits as f64).sqrt() / nf;
        let verdict = if est >= -eta {
            Verdict::ConsistentWithMultisamplable
        } else {
            Verdict::NotMultisamplable
        };
        return Ok(MultisampReport {
            hits,
            trials,
            estimate: Some(est),
            se: Some(se),
            upper_bound: None,
            verdict,
        });
    }
    let hf = hits as f64;
    let upper = ((hf + 3.0 * hf.sqrt() + 3.0) / t).min(1.0).ln() / nf;
    let verdict = if hits > 0 && upper < -eta {
        Verdict::NotMultisamplable
    } else {
        Verdict::Inconclusive
    };
    Ok(MultisampReport {
        hits,
        trials,
        estimate: None,
        se: None,
        upper_bound: Some(upper),
        verdict,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mixture::Mixture;

    #[test]
    fn metropolis_kernel_satisfies_detailed_balance() {
        // Three states, propose one of the other two uniformly.
        let energies = [0.0, 0.7, -0.4];
        let beta = 1.3;
        let weight: Vec<f64> = energies.iter().map(|e| (beta * e).exp()).collect();
        let z: f64 = weight.iter().sum();
        let pi: Vec<f64> = weight.iter().map(|w| w / z).collect();
        let mut kern = [[0.0; 3]; 3];
        for i in 0..3 {
            for j in 0..3 {
                if i != j {
                    kern[i][j] = 0.5 * acceptance_probability(beta * (energies[j] - energies[i]));
                }
            }
            kern[i][i] = 1.0 - kern[i].iter().sum::<f64>();
        }
        for i in 0..3 {
            for j in 0..3 {
                assert!((pi[i] * kern[i][j] - pi[j] * kern[j][i]).abs() < 1e-15);
            }
        }
        let mut r = keyed([1, 2, 3, 4]);
        let mut state = 0usize;
        let mut counts = [0usize; 3];
        let steps = 200_000;
        for _ in 0..steps {
            let other = (state + 1 + r.random_range(0..2usize)) % 3;
            let u: f64 = r.random();
            if u < acceptance_probability(beta * (energies[other] - energies[state])) {
                state = other;
            }
            counts[state] += 1;
        }
        for i in 0..3 {
            let f = counts[i] as f64 / steps as f64;
            assert!((f - pi[i]).abs() < 0.01, "{f} {}", pi[i]);
        }
    }

    #[test]
    fn band_volume_closed_cases() {
        assert_eq!(band_log_volume(0.0, 0.1, 50).unwrap(), 0.0);
        assert_eq!(band_log_volume(0.5, 2.0, 50).unwrap(), 0.0);
        assert!(band_log_volume(1.0, 0.1, 50).is_err());
        assert!(band_log_volume(0.5, 0.0, 50).is_err());
        // N = 3: t is uniform on [-1, 1] (Archimedes).
        let q: f64 = 0.25;
        let d = 0.1;
        let width = 2.0 * d / q.sqrt();
        let v = band_log_volume(q, d, 3).unwrap();
        assert!((v - (width / 2.0).ln() / 3.0).abs() < 1e-12);
        let mut last = 0.0;
        for d in [0.2, 0.1, 0.05, 0.01] {
            let v = band_log_volume(0.5, d, 100).unwrap();
            assert!(v < last);
            last = v;
        }
    }

    #[test]
    fn overlap_density_integrates_to_one() {
        for n in [3, 10, 101] {
            let q = quad::integrate(|t| overlap_density(t, n), -1.0, 1.0, 1e-13, 0.0, 500);
            assert!((q.value - 1.0).abs() < 1e-10, "{n}");
        }
    }

    #[test]
    fn chain_is_deterministic_and_stays_on_sphere() {
        let h = Realization::sample(&Mixture::pure(2).unwrap(), 20, 1).unwrap();
        let opts = ChainOptions {
            n_steps: 2000,
            ..Default::default()
        };
        let a = mcmc_chain(&h, 1.0, 5, &opts).unwrap();
        let b = mcmc_chain(&h, 1.0, 5, &opts).unwrap();
        assert_eq!(a.samples, b.samples);
        assert!((TARGET_ACCEPTANCE.0 - 0.1..=TARGET_ACCEPTANCE.1 + 0.1).contains(&a.acceptance));
        for s in &a.samples {
            assert!((dot(s, s) - 20.0).abs() < 1e-9);
        }
    }

    #[test]
    fn band_chain_never_leaves_band() {
        let n = 30;
        let h = Realization::sample(&Mixture::pure(3).unwrap(), n, 2).unwrap();
        let mut m = vec![0.0; n];
        m[0] = (0.5 * n as f64).sqrt();
        let band = Band::new(m, 0.05).unwrap();
        let opts = ChainOptions {
            n_steps: 3000,
            band: Some(band.clone()),
            ..Default::default()
        };
        let c = mcmc_chain(&h, 1.0, 3, &opts).unwrap();
        assert!(c.samples.iter().all(|s| band.contains(s)));
        assert!(c.acceptance > 0.1);
    }

    #[test]
    fn zero_beta_free_energy_is_band_volume() {
        let n = 20;
        let h = Realization::sample(&Mixture::pure(2).unwrap(), n, 2).unwrap();
        let mut m = vec![0.0; n];
        m[1] = (0.3 * n as f64).sqrt();
        let band = Band::new(m, 0.1).unwrap();
        let opts = ChainOptions {
            n_steps: 500,
            ..Default::default()
        };
        let f = band_free_energy(&h, &band, 0.0, 3, &[1, 2], &opts).unwrap();
        assert!((f.estimate - band_log_volume(0.3, 0.1, n).unwrap()).abs() < 1e-14);
    }

    #[test]
    fn histogram_and_overlap_array() {
        let hist = Histogram::new(&[-1.0, -0.5, 0.0, 0.5, 1.0, 2.0], -1.0, 1.0, 4).unwrap();
        assert_eq!(hist.counts, vec![1, 1, 1, 2]);
        let arr = OverlapArray::new(vec![vec![1.0, 1.0], vec![1.0, -1.0], vec![0.0, 1.0]]).unwrap();
        assert_eq!(arr.get(0, 0), 1.0);
        assert_eq!(arr.get(0, 1), 0.0);
        assert_eq!(arr.get(2, 0), arr.get(0, 2));
        assert!(overlap_statistics(&[&arr.samples[..]], 10).is_err());
    }

    #[test]
    fn multisamplability_at_zero_overlap_and_high_temperature() {
        let h = Realization::sample(&Mixture::pure(2).unwrap(), 30, 4).unwrap();
        let opts = ChainOptions {
            n_steps: 3000,
            thin: 5,
            ..Default::default()
        };
        let r = multisamplability_diagnostic(&h, 0.2, 0.0, 2, 0.2, &[1, 2], &opts, DEFAULT_ETA).unwrap();
        assert_eq!(r.verdict, Verdict::ConsistentWithMultisamplable);
        assert!(r.estimate.unwrap() <= 0.0);
        let far = multisamplability_diagnostic(&h, 0.2, 0.9, 2, 0.05, &[1, 2], &opts, DEFAULT_ETA).unwrap();
        assert!(far.upper_bound.unwrap() < -DEFAULT_ETA);
    }
}
