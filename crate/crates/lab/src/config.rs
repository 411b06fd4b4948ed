//! Run configuration. TOML on input; unknown keys are rejected.
//!
//! ```toml
//! mixture = [[3, 1.0]]   # (p, gamma_p^2)
//! n = 300
//! seed = 7
//! seeds = 5
//!
//! [optimize]
//! k = 150
//! ```

use std::path::Path;

use serde::{Deserialize, Serialize};
use spinlab_core::Mixture;

use crate::error::{LabError, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    /// `(p, gamma_p^2)` pairs, strictly increasing in `p`.
    pub mixture: Vec<(usize, f64)>,
    pub n: usize,
    /// Master seed.
    pub seed: u64,
    /// Number of independent tasks (disorder realizations, chains or seeds).
    pub seeds: usize,
    pub beta: f64,
    pub memory_cap: u64,
    pub optimize: OptimizeConfig,
    pub lsq: LsqConfig,
    pub parisi: ParisiConfig,
    pub volume: VolumeConfig,
    pub tap_scan: TapScanConfig,
    pub critical_points: CriticalConfig,
    pub complexity: ComplexityConfig,
    pub gibbs: GibbsConfig,
    pub band_f: BandConfig,
    pub multisamp: MultisampConfig,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            mixture: vec![(3, 1.0)],
            n: 50,
            seed: 0,
            seeds: 1,
            beta: 1.0,
            memory_cap: spinlab_core::hamiltonian::DEFAULT_MEMORY_CAP,
            optimize: Default::default(),
            lsq: Default::default(),
            parisi: Default::default(),
            volume: Default::default(),
            tap_scan: Default::default(),
            critical_points: Default::default(),
            complexity: Default::default(),
            gibbs: Default::default(),
            band_f: Default::default(),
            multisamp: Default::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OptimizeConfig {
    pub k: usize,
    pub eig_tol: f64,
    pub emit_path: bool,
}

impl Default for OptimizeConfig {
    fn default() -> Self {
        Self {
            k: 100,
            eig_tol: spinlab_core::optimizer::DEFAULT_EIG_TOL,
            emit_path: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct LsqConfig {
    /// Number of equations is `floor(alpha N)`, at least one.
    pub alpha: f64,
    pub c: f64,
    pub k: usize,
    pub eig_tol: f64,
}

impl Default for LsqConfig {
    fn default() -> Self {
        Self {
            alpha: 0.1,
            c: 0.0,
            k: 100,
            eig_tol: spinlab_core::optimizer::DEFAULT_EIG_TOL,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ParisiConfig {
    /// Increasing positive inverse temperatures.
    pub betas: Vec<f64>,
    pub k_max: usize,
    pub tol: f64,
    pub restarts: usize,
}

impl Default for ParisiConfig {
    fn default() -> Self {
        Self {
            betas: (1..=20).map(|i| 0.25 * i as f64).collect(),
            k_max: spinlab_core::parisi::DEFAULT_K_MAX,
            tol: spinlab_core::parisi::DEFAULT_CS_TOL,
            restarts: 5,
        }
    }
}

impl ParisiConfig {
    pub fn options(&self) -> spinlab_core::parisi::CsOptions {
        spinlab_core::parisi::CsOptions {
            k_max: self.k_max,
            tol: self.tol,
            restarts: self.restarts,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct VolumeConfig {
    /// Energies at which `V(E)` is tabulated; empty means 21 points up to the
    /// largest resolved energy.
    pub energies: Vec<f64>,
}

impl Default for VolumeConfig {
    fn default() -> Self {
        Self { energies: Vec::new() }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TapScanConfig {
    /// Overlaps in `[0, 1)`; empty means `0, 0.05, ..., 0.95`.
    pub q_grid: Vec<f64>,
    pub tol: f64,
}

impl Default for TapScanConfig {
    fn default() -> Self {
        Self {
            q_grid: Vec::new(),
            tol: spinlab_core::parisi::DEFAULT_TAP_TOL,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct CriticalConfig {
    pub n_starts: usize,
    pub dedup_tol: f64,
}

impl Default for CriticalConfig {
    fn default() -> Self {
        Self {
            n_starts: 2000,
            dedup_tol: spinlab_core::landscape::DEFAULT_DEDUP_TOL,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ComplexityConfig {
    pub dims: Vec<usize>,
    pub n_starts: usize,
    /// `(lo, hi)` energy-density windows.
    pub windows: Vec<(f64, f64)>,
}

impl Default for ComplexityConfig {
    fn default() -> Self {
        Self {
            dims: vec![5, 7, 9],
            n_starts: 2000,
            windows: vec![(f64::MIN, f64::MAX)],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GibbsConfig {
    pub n_steps: usize,
    pub burn_in: f64,
    pub thin: usize,
    pub initial_sigma: f64,
    pub bins: usize,
}

impl Default for GibbsConfig {
    fn default() -> Self {
        Self {
            n_steps: 20_000,
            burn_in: 0.2,
            thin: 10,
            initial_sigma: 0.5,
            bins: 40,
        }
    }
}

impl GibbsConfig {
    pub fn options(&self) -> spinlab_core::gibbs::ChainOptions {
        spinlab_core::gibbs::ChainOptions {
            n_steps: self.n_steps,
            burn_in: self.burn_in,
            thin: self.thin,
            initial_sigma: self.initial_sigma,
            ..Default::default()
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CenterKind {
    /// `m = 0`.
    Origin,
    /// Uniform point at radius `sqrt(qN)`.
    Random,
    /// Hessian-descent path point at radius `sqrt(qN)`.
    Optimizer,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct BandConfig {
    pub center: CenterKind,
    pub q: f64,
    pub delta: f64,
    pub n_points: usize,
    /// Path length used for `center = "optimizer"`.
    pub k: usize,
}

impl Default for BandConfig {
    fn default() -> Self {
        Self {
            center: CenterKind::Origin,
            q: 0.0,
            delta: 1.0,
            n_points: 9,
            k: 100,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct MultisampConfig {
    pub q: f64,
    pub replicas: usize,
    pub epsilon: f64,
    pub eta: f64,
}

impl Default for MultisampConfig {
    fn default() -> Self {
        Self {
            q: 0.0,
            replicas: 2,
            epsilon: 0.1,
            eta: spinlab_core::gibbs::DEFAULT_ETA,
        }
    }
}

fn schema(msg: impl Into<String>) -> LabError {
    LabError::Schema(msg.into())
}

impl RunConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| schema(e.to_string()))
    }

    /// Reads TOML, or the `config` of a manifest when the file ends in `.json`.
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        if path.extension().is_some_and(|e| e == "json") {
            let m: crate::output::Manifest = serde_json::from_str(&text).map_err(|e| schema(e.to_string()))?;
            Ok(m.config)
        } else {
            Self::from_toml(&text)
        }
    }

    pub fn mixture(&self) -> Result<Mixture> {
        Mixture::from_terms(&self.mixture).map_err(|e| schema(e.to_string()))
    }

    /// Checks that do not depend on the command.
    pub fn validate(&self) -> Result<()> {
        self.mixture()?;
        if self.n < 2 {
            return Err(schema(format!("n = {} must be at least 2", self.n)));
        }
        if self.seeds == 0 {
            return Err(schema("seeds must be at least 1"));
        }
        if !(self.beta >= 0.0 && self.beta.is_finite()) {
            return Err(schema(format!("beta = {} must be finite and >= 0", self.beta)));
        }
        let p = &self.parisi;
        if p.betas.is_empty() || p.betas.iter().any(|b| !(*b > 0.0 && b.is_finite())) {
            return Err(schema("parisi.betas must be nonempty, positive and finite"));
        }
        if p.betas.windows(2).any(|w| w[1] <= w[0]) {
            return Err(schema("parisi.betas must be strictly increasing"));
        }
        if self.tap_scan.q_grid.iter().any(|q| !(0.0..1.0).contains(q)) {
            return Err(schema("tap_scan.q_grid entries must lie in [0, 1)"));
        }
        if self.gibbs.thin == 0 || self.gibbs.bins == 0 {
            return Err(schema("gibbs.thin and gibbs.bins must be positive"));
        }
        if !(2..=3).contains(&self.multisamp.replicas) {
            return Err(schema("multisamp.replicas must be 2 or 3"));
        }
        if !(0.0..1.0).contains(&self.band_f.q) || !(self.band_f.delta > 0.0) {
            return Err(schema("band_f needs q in [0, 1) and delta > 0"));
        }
        if self.band_f.center != CenterKind::Origin && self.band_f.q == 0.0 {
            return Err(schema("band_f.q must be positive for random or optimizer centers"));
        }
        Ok(())
    }
}

/// `"3:1.0,2:0.5"` → `[(2, 0.5), (3, 1.0)]`.
pub fn parse_mixture(s: &str) -> Result<Vec<(usize, f64)>> {
    let mut terms = Vec::new();
    for part in s.split(',').map(str::trim).filter(|p| !p.is_empty()) {
        let (p, c) = part
            .split_once(':')
            .ok_or_else(|| schema(format!("mixture term {part:?} is not p:gamma2")))?;
        let p: usize = p.trim().parse().map_err(|_| schema(format!("bad order in {part:?}")))?;
        let c: f64 = c.trim().parse().map_err(|_| schema(format!("bad coefficient in {part:?}")))?;
        terms.push((p, c));
    }
    terms.sort_by_key(|t| t.0);
    Ok(terms)
}
