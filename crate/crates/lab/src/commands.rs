use rayon::prelude::*;
use serde::Serialize;
use spinlab_core::gibbs::{self, Band, Verdict};
use spinlab_core::landscape::{self, Window};
use spinlab_core::optimizer::{self, SpherePath};
use spinlab_core::parisi::{self, FreeEnergyCurve};
use spinlab_core::rng::{derive_seed, keyed, uniform_sphere};
use spinlab_core::{Covariance, Mixture, Realization};

use crate::config::{CenterKind, RunConfig};
use crate::dump;
use crate::error::{LabError, Result};
use crate::output::{finite, OutDir};
use crate::seeds::task_seed;

/// Relative tolerance on the path invariants reported by `optimize` and `lsq`.
pub const PATH_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Command {
    MixtureInfo,
    Sample,
    Optimize,
    Lsq,
    Parisi,
    Volume,
    TapScan,
    CriticalPoints,
    Complexity,
    Gibbs,
    BandF,
    Multisamp,
}

impl Command {
    pub const ALL: [Command; 12] = [
        Command::MixtureInfo,
        Command::Sample,
        Command::Optimize,
        Command::Lsq,
        Command::Parisi,
        Command::Volume,
        Command::TapScan,
        Command::CriticalPoints,
        Command::Complexity,
        Command::Gibbs,
        Command::BandF,
        Command::Multisamp,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Command::MixtureInfo => "mixture-info",
            Command::Sample => "sample",
            Command::Optimize => "optimize",
            Command::Lsq => "lsq",
            Command::Parisi => "parisi",
            Command::Volume => "volume",
            Command::TapScan => "tap-scan",
            Command::CriticalPoints => "critical-points",
            Command::Complexity => "complexity",
            Command::Gibbs => "gibbs",
            Command::BandF => "band-f",
            Command::Multisamp => "multisamp",
        }
    }

    pub fn from_name(name: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|c| c.name() == name)
    }
}

pub struct Context<'a> {
    pub config: &'a RunConfig,
    pub command: Command,
    pub out: &'a mut OutDir,
    pub pool: &'a rayon::ThreadPool,
}

impl Context<'_> {
    fn seed(&self, index: u64) -> u64 {
        task_seed(self.config.seed, self.command.name(), index)
    }

    fn sample(&self, m: &Mixture, seed: u64) -> Result<Realization> {
        Ok(Realization::sample_with_cap(m, self.config.n, seed, self.config.memory_cap)?)
    }

    /// Runs `f(index, task_seed)` for every task on the pool, in index order.
    fn tasks<T: Send>(&self, count: usize, f: impl Fn(usize, u64) -> Result<T> + Sync) -> Result<Vec<T>> {
        let seeds: Vec<u64> = (0..count).map(|i| self.seed(i as u64)).collect();
        self.pool
            .install(|| seeds.par_iter().enumerate().map(|(i, s)| f(i, *s)).collect())
    }
}

pub fn dispatch(ctx: &mut Context) -> Result<()> {
    match ctx.command {
        Command::MixtureInfo => mixture_info(ctx),
        Command::Sample => sample(ctx),
        Command::Optimize => optimize(ctx),
        Command::Lsq => lsq(ctx),
        Command::Parisi => parisi_curve(ctx),
        Command::Volume => volume(ctx),
        Command::TapScan => tap_scan(ctx),
        Command::CriticalPoints => critical_points(ctx),
        Command::Complexity => complexity(ctx),
        Command::Gibbs => gibbs_chains(ctx),
        Command::BandF => band_f(ctx),
        Command::Multisamp => multisamp(ctx),
    }
}

#[derive(Debug, Serialize)]
pub struct MixtureInfo {
    pub mixture: Vec<(usize, f64)>,
    pub xi_at_1: f64,
    pub xi_prime_at_1: f64,
    pub xi_second_at_1: f64,
    pub alg_energy: Option<f64>,
    pub alg_note: Option<String>,
    pub e_infinity: Option<f64>,
    pub full_rsb: bool,
    pub concavity_worst_violation: f64,
    pub concavity_worst_location: f64,
}

pub fn mixture_info_record(m: &Mixture) -> Result<MixtureInfo> {
    let (alg_energy, alg_note) = match m.alg_energy() {
        Ok(v) => (Some(v), None),
        Err(e) => (None, Some(e.to_string())),
    };
    let report = m.full_rsb_report(1000)?;
    Ok(MixtureInfo {
        mixture: m.terms().collect(),
        xi_at_1: m.value(1.0),
        xi_prime_at_1: m.first(1.0),
        xi_second_at_1: m.second(1.0),
        alg_energy,
        alg_note,
        e_infinity: m.is_pure().map(spinlab_core::e_infinity).transpose()?,
        full_rsb: report.concave,
        concavity_worst_violation: report.worst_violation,
        concavity_worst_location: report.worst_location,
    })
}

fn mixture_info(ctx: &mut Context) -> Result<()> {
    let rec = mixture_info_record(&ctx.config.mixture()?)?;
    ctx.out.json("mixture_info.json", &rec)
}

#[derive(Debug, Serialize)]
struct SampleRecord {
    task: usize,
    seed: u64,
    n: usize,
    orders: Vec<usize>,
    bytes: u128,
    file: String,
}

fn sample(ctx: &mut Context) -> Result<()> {
    let m = ctx.config.mixture()?;
    let mut records = Vec::new();
    for i in 0..ctx.config.seeds {
        let seed = ctx.seed(i as u64);
        let h = ctx.sample(&m, seed)?;
        let file = format!("realization_{i}.bin");
        dump::write_realization(ctx.out.file(&file)?, &h)?;
        records.push(SampleRecord {
            task: i,
            seed,
            n: ctx.config.n,
            orders: m.terms().map(|t| t.0).collect(),
            bytes: spinlab_core::hamiltonian::tensor_bytes(&m, ctx.config.n),
            file,
        });
    }
    ctx.out.jsonl("samples.jsonl", &records)
}

#[derive(Debug, Serialize)]
pub struct PathSummary {
    pub task: usize,
    pub seed: u64,
    pub n: usize,
    pub k: usize,
    pub terminal: f64,
    pub radius_error: f64,
    pub orthogonality_error: f64,
    pub increment_error: f64,
    pub invariants_hold: bool,
    pub flagged_steps: usize,
    pub random_steps: usize,
}

impl PathSummary {
    fn new(task: usize, seed: u64, path: &SpherePath, terminal: f64) -> Self {
        let c = path.check();
        Self {
            task,
            seed,
            n: path.dim(),
            k: path.k(),
            terminal,
            radius_error: c.radius,
            orthogonality_error: c.orthogonality,
            increment_error: c.increment,
            invariants_hold: c.holds(PATH_TOL),
            flagged_steps: path.steps.iter().filter(|s| s.flagged).count(),
            random_steps: path.steps.iter().filter(|s| s.random_direction).count(),
        }
    }
}

#[derive(Debug, Serialize)]
struct StepRow {
    task: usize,
    step: usize,
    radius_sq_over_n: f64,
    value: f64,
    eigenvalue: f64,
    sign: f64,
    random_direction: bool,
    flagged: bool,
}

fn step_rows(task: usize, path: &SpherePath, values: &[f64]) -> Vec<StepRow> {
    path.steps
        .iter()
        .map(|s| StepRow {
            task,
            step: s.index,
            radius_sq_over_n: s.radius_sq_over_n,
            value: values[s.index],
            eigenvalue: s.eigenvalue,
            sign: s.sign,
            random_direction: s.random_direction,
            flagged: s.flagged,
        })
        .collect()
}

#[derive(Debug, Serialize)]
struct Aggregate {
    tasks: usize,
    mean: f64,
    sd: Option<f64>,
    min: f64,
    max: f64,
    all_invariants_hold: bool,
}

fn aggregate(rows: &[PathSummary]) -> Aggregate {
    let k = rows.len() as f64;
    let mean = rows.iter().map(|r| r.terminal).sum::<f64>() / k;
    let sd = (rows.len() > 1)
        .then(|| (rows.iter().map(|r| (r.terminal - mean).powi(2)).sum::<f64>() / (k - 1.0)).sqrt());
    Aggregate {
        tasks: rows.len(),
        mean,
        sd,
        min: rows.iter().map(|r| r.terminal).fold(f64::INFINITY, f64::min),
        max: rows.iter().map(|r| r.terminal).fold(f64::NEG_INFINITY, f64::max),
        all_invariants_hold: rows.iter().all(|r| r.invariants_hold),
    }
}

fn optimize(ctx: &mut Context) -> Result<()> {
    let m = ctx.config.mixture()?;
    let o = &ctx.config.optimize;
    if o.k == 0 {
        return Err(LabError::Schema("optimize.k must be positive".into()));
    }
    let runs = ctx.tasks(ctx.config.seeds, |i, seed| {
        let h = ctx.sample(&m, seed)?;
        let path = optimizer::hessian_descent(&h, o.k, o.eig_tol, derive_seed(seed, 1))?;
        let densities: Vec<f64> = path.energies.iter().map(|e| e / h.dim() as f64).collect();
        let rows = if o.emit_path { step_rows(i, &path, &densities) } else { Vec::new() };
        Ok((PathSummary::new(i, seed, &path, path.terminal_energy_density()), rows))
    })?;
    let (summaries, paths): (Vec<_>, Vec<_>) = runs.into_iter().unzip();
    if o.emit_path {
        ctx.out.jsonl("path.jsonl", &paths.into_iter().flatten().collect::<Vec<_>>())?;
    }
    ctx.out.jsonl("optimize.jsonl", &summaries)?;
    ctx.out.json("summary.json", &aggregate(&summaries))
}

fn lsq(ctx: &mut Context) -> Result<()> {
    let m = ctx.config.mixture()?;
    let l = &ctx.config.lsq;
    if l.k == 0 || !(l.alpha >= 0.0) {
        return Err(LabError::Schema("lsq needs k > 0 and alpha >= 0".into()));
    }
    let equations = ((l.alpha * ctx.config.n as f64).floor() as usize).max(1);
    let runs = ctx.tasks(ctx.config.seeds, |i, seed| {
        let system: Vec<Realization> = (0..equations)
            .map(|j| ctx.sample(&m, derive_seed(seed, 100 + j as u64)))
            .collect::<Result<_>>()?;
        let r = optimizer::least_squares_descent(&system, l.c, l.k, l.eig_tol, derive_seed(seed, 1))?;
        let rows = step_rows(i, &r.path, &r.residuals);
        let terminal = *r.residuals.last().expect("path has k+1 points");
        Ok((PathSummary::new(i, seed, &r.path, terminal), rows))
    })?;
    let (summaries, paths): (Vec<_>, Vec<_>) = runs.into_iter().unzip();
    ctx.out.csv("residuals.csv", &paths.into_iter().flatten().collect::<Vec<_>>())?;
    ctx.out.jsonl("lsq.jsonl", &summaries)?;
    ctx.out.json("summary.json", &aggregate(&summaries))
}

#[derive(Debug, Serialize)]
struct CurveRow {
    beta: f64,
    free_energy: f64,
    slope: f64,
    annealed: f64,
    rsb_level: usize,
}

#[derive(Debug, Serialize)]
struct MeasureRecord<'a> {
    beta: f64,
    atoms: &'a [f64],
    weights: &'a [f64],
}

#[derive(Debug, Serialize)]
struct CurveSummary {
    points: usize,
    monotonicity_violations: Vec<usize>,
    convexity_violations: Vec<usize>,
    unconverged: Vec<usize>,
    clean: bool,
}

fn write_curve(out: &mut OutDir, m: &Mixture, curve: &FreeEnergyCurve) -> Result<()> {
    let rows: Vec<CurveRow> = (0..curve.betas.len())
        .map(|i| CurveRow {
            beta: curve.betas[i],
            free_energy: curve.values[i],
            slope: curve.slopes[i],
            annealed: 0.5 * curve.betas[i].powi(2) * m.value(1.0),
            rsb_level: curve.measures[i].rsb_level(),
        })
        .collect();
    out.csv("curve.csv", &rows)?;
    let measures: Vec<MeasureRecord> = curve
        .betas
        .iter()
        .zip(&curve.measures)
        .map(|(b, mu)| MeasureRecord {
            beta: *b,
            atoms: mu.atoms(),
            weights: mu.weights(),
        })
        .collect();
    out.jsonl("measures.jsonl", &measures)?;
    let d = &curve.diagnostics;
    out.json(
        "curve_summary.json",
        &CurveSummary {
            points: rows.len(),
            monotonicity_violations: d.monotonicity.clone(),
            convexity_violations: d.convexity.clone(),
            unconverged: d.unconverged.clone(),
            clean: d.is_clean(),
        },
    )
}

fn parisi_curve(ctx: &mut Context) -> Result<()> {
    let m = ctx.config.mixture()?;
    let p = &ctx.config.parisi;
    let curve = parisi::free_energy_curve(&m, &p.betas, &p.options())?;
    write_curve(ctx.out, &m, &curve)
}

#[derive(Debug, Serialize)]
struct VolumeRow {
    energy: f64,
    volume_exponent: Option<f64>,
    beta: Option<f64>,
    resolved: bool,
}

fn volume(ctx: &mut Context) -> Result<()> {
    let m = ctx.config.mixture()?;
    let p = &ctx.config.parisi;
    let curve = parisi::free_energy_curve(&m, &p.betas, &p.options())?;
    let energies = if ctx.config.volume.energies.is_empty() {
        let top = curve.max_energy();
        (0..21).map(|i| top * i as f64 / 21.0).collect()
    } else {
        ctx.config.volume.energies.clone()
    };
    let rows: Vec<VolumeRow> = energies
        .iter()
        .map(|&e| match parisi::volume_exponent(&curve, e) {
            Ok(v) => VolumeRow {
                energy: e,
                volume_exponent: finite(v.value),
                beta: finite(v.beta),
                resolved: v.value.is_finite(),
            },
            Err(_) => VolumeRow {
                energy: e,
                volume_exponent: None,
                beta: None,
                resolved: false,
            },
        })
        .collect();
    write_curve(ctx.out, &m, &curve)?;
    ctx.out.csv("volume.csv", &rows)
}

#[derive(Debug, Serialize)]
struct TapRowOut {
    q: f64,
    e_star: f64,
    f_tap: f64,
    g: f64,
    flagged: bool,
}

#[derive(Debug, Serialize)]
struct TapSummary {
    beta: f64,
    maximum: f64,
    near_argmax: Vec<f64>,
    free_energy: Option<f64>,
}

fn tap_scan(ctx: &mut Context) -> Result<()> {
    let m = ctx.config.mixture()?;
    let t = &ctx.config.tap_scan;
    let grid = if t.q_grid.is_empty() {
        (0..20).map(|i| 0.05 * i as f64).collect()
    } else {
        t.q_grid.clone()
    };
    let scan = parisi::tap_scan(&m, ctx.config.beta, &grid, t.tol, &ctx.config.parisi.options())?;
    let rows: Vec<TapRowOut> = scan
        .rows
        .iter()
        .map(|r| TapRowOut {
            q: r.q,
            e_star: r.e_star,
            f_tap: r.f_tap,
            g: r.g,
            flagged: r.flagged,
        })
        .collect();
    ctx.out.csv("tap.csv", &rows)?;
    ctx.out.json(
        "tap_summary.json",
        &TapSummary {
            beta: ctx.config.beta,
            maximum: scan.maximum,
            near_argmax: scan.near_argmax.clone(),
            free_energy: scan.rows.iter().find(|r| r.q == 0.0).map(|r| r.f_tap),
        },
    )
}

#[derive(Debug, Serialize)]
struct PointRecord {
    task: usize,
    id: usize,
    energy_density: f64,
    radial_derivative: f64,
    index: usize,
    pair_id: Option<usize>,
}

#[derive(Debug, Serialize)]
struct SearchSummary {
    task: usize,
    seed: u64,
    n: usize,
    starts: usize,
    count: usize,
    discarded: usize,
    checkpoints: Vec<(usize, usize)>,
    saturated: bool,
    morse_sum: i64,
    euler_characteristic: i64,
}

fn critical_points(ctx: &mut Context) -> Result<()> {
    let m = ctx.config.mixture()?;
    let c = &ctx.config.critical_points;
    let runs = ctx.tasks(ctx.config.seeds, |i, seed| {
        let h = ctx.sample(&m, seed)?;
        let s = landscape::find_critical_points(&h, c.n_starts, derive_seed(seed, 1), c.dedup_tol)?;
        let points: Vec<PointRecord> = s
            .points
            .iter()
            .enumerate()
            .map(|(id, p)| PointRecord {
                task: i,
                id,
                energy_density: p.energy_density,
                radial_derivative: p.radial_derivative,
                index: p.index,
                pair_id: p.pair,
            })
            .collect();
        let summary = SearchSummary {
            task: i,
            seed,
            n: h.dim(),
            starts: s.starts,
            count: s.points.len(),
            discarded: s.discarded,
            checkpoints: s.checkpoints.clone(),
            saturated: s.saturated(),
            morse_sum: s.morse_sum(),
            euler_characteristic: landscape::euler_characteristic(h.dim()),
        };
        Ok((summary, points))
    })?;
    let (summaries, points): (Vec<_>, Vec<_>) = runs.into_iter().unzip();
    ctx.out.jsonl("points.jsonl", &points.into_iter().flatten().collect::<Vec<_>>())?;
    ctx.out.jsonl("searches.jsonl", &summaries)
}

#[derive(Debug, Serialize)]
struct ComplexityRow {
    n: usize,
    lo: f64,
    hi: f64,
    mean_log_count: Option<f64>,
    spread: Option<f64>,
    zero_counts: usize,
    unsaturated: usize,
    counts: String,
}

fn complexity(ctx: &mut Context) -> Result<()> {
    let m = ctx.config.mixture()?;
    let c = &ctx.config.complexity;
    let windows: Vec<Window> = c.windows.iter().map(|(lo, hi)| Window::new(*lo, *hi)).collect();
    let seeds: Vec<u64> = (0..ctx.config.seeds).map(|i| ctx.seed(i as u64)).collect();
    // One task per dimension.
    let cells = ctx.pool.install(|| {
        c.dims
            .par_iter()
            .map(|&n| landscape::empirical_complexity(&m, &[n], c.n_starts, &windows, &seeds))
            .collect::<std::result::Result<Vec<_>, _>>()
    })?;
    let rows: Vec<ComplexityRow> = cells
        .into_iter()
        .flatten()
        .map(|cell| ComplexityRow {
            n: cell.n,
            lo: cell.window.lo,
            hi: cell.window.hi,
            mean_log_count: cell.mean_log_count,
            spread: cell.spread,
            zero_counts: cell.zero_counts,
            unsaturated: cell.unsaturated,
            counts: cell.counts.iter().map(|c| c.to_string()).collect::<Vec<_>>().join(";"),
        })
        .collect();
    ctx.out.csv("complexity.csv", &rows)
}

#[derive(Debug, Serialize)]
struct ChainRow {
    chain: usize,
    t: usize,
    energy_density: f64,
}

#[derive(Debug, Serialize)]
struct HistRow {
    lo: f64,
    hi: f64,
    count: usize,
}

#[derive(Debug, Serialize)]
struct ChainSummary {
    chain: usize,
    seed: u64,
    acceptance: f64,
    sigma: f64,
    mean_energy_density: f64,
    energy_se: f64,
    flagged: bool,
}

#[derive(Debug, Serialize)]
struct GibbsSummary {
    beta: f64,
    chains: Vec<ChainSummary>,
    pairs: usize,
    mean_overlap: f64,
    mean_abs_overlap: f64,
}

fn gibbs_chains(ctx: &mut Context) -> Result<()> {
    let m = ctx.config.mixture()?;
    let g = &ctx.config.gibbs;
    if ctx.config.seeds < 2 {
        return Err(LabError::Schema("gibbs needs seeds >= 2 (independent chains)".into()));
    }
    let h = ctx.sample(&m, ctx.seed(u64::MAX))?;
    let opts = g.options();
    let beta = ctx.config.beta;
    let chains = ctx.tasks(ctx.config.seeds, |_, seed| Ok((seed, gibbs::mcmc_chain(&h, beta, seed, &opts)?)))?;
    let samples: Vec<&[Vec<f64>]> = chains.iter().map(|(_, c)| &c.samples[..]).collect();
    let stats = gibbs::overlap_statistics(&samples, g.bins)?;
    let mut rows = Vec::new();
    for (j, (_, c)) in chains.iter().enumerate() {
        for (t, e) in c.energies.iter().enumerate().step_by(g.thin) {
            rows.push(ChainRow {
                chain: j,
                t,
                energy_density: *e,
            });
        }
    }
    ctx.out.csv("chains.csv", &rows)?;
    let hist: Vec<HistRow> = stats
        .histogram
        .counts
        .iter()
        .enumerate()
        .map(|(i, c)| HistRow {
            lo: stats.histogram.edges[i],
            hi: stats.histogram.edges[i + 1],
            count: *c,
        })
        .collect();
    ctx.out.csv("overlap_histogram.csv", &hist)?;
    let k = stats.overlaps.len().max(1) as f64;
    let summary = GibbsSummary {
        beta,
        chains: chains
            .iter()
            .enumerate()
            .map(|(j, (seed, c))| ChainSummary {
                chain: j,
                seed: *seed,
                acceptance: c.acceptance,
                sigma: c.sigma,
                mean_energy_density: c.mean_energy(),
                energy_se: c.energy_se(),
                flagged: c.flagged,
            })
            .collect(),
        pairs: stats.overlaps.len(),
        mean_overlap: stats.overlaps.iter().sum::<f64>() / k,
        mean_abs_overlap: stats.overlaps.iter().map(|r| r.abs()).sum::<f64>() / k,
    };
    ctx.out.json("gibbs_summary.json", &summary)
}

/// Band center at radius `sqrt(qN)`.
pub fn band_center(h: &Realization, kind: CenterKind, q: f64, k: usize, seed: u64) -> Result<Vec<f64>> {
    let n = h.dim();
    let target = q * n as f64;
    let point = match kind {
        CenterKind::Origin => return Ok(vec![0.0; n]),
        CenterKind::Random => uniform_sphere(&mut keyed([seed, 0, 0, 0]), n, target),
        CenterKind::Optimizer => {
            let path = optimizer::hessian_descent(h, k, optimizer::DEFAULT_EIG_TOL, seed)?;
            let i = ((q * k as f64).round() as usize).clamp(1, k);
            path.points[i].clone()
        }
    };
    let s = (target / point.iter().map(|v| v * v).sum::<f64>()).sqrt();
    Ok(point.into_iter().map(|v| v * s).collect())
}

#[derive(Debug, Serialize)]
struct BandRecord {
    center: CenterKind,
    q: f64,
    delta: f64,
    beta: f64,
    center_energy_density: f64,
    log_volume: f64,
    estimate: f64,
    se: f64,
    seeds: Vec<u64>,
    per_seed: Vec<f64>,
    per_seed_se: Vec<f64>,
    betas: Vec<f64>,
    mean_energies: Vec<Vec<f64>>,
    flagged: bool,
}

fn band_f(ctx: &mut Context) -> Result<()> {
    let m = ctx.config.mixture()?;
    let b = &ctx.config.band_f;
    let h = ctx.sample(&m, ctx.seed(u64::MAX))?;
    let center = band_center(&h, b.center, b.q, b.k, ctx.seed(u64::MAX - 1))?;
    let center_energy_density = h.energy(&center)? / h.dim() as f64;
    let band = Band::new(center, b.delta)?;
    let seeds: Vec<u64> = (0..ctx.config.seeds).map(|i| ctx.seed(i as u64)).collect();
    let opts = ctx.config.gibbs.options();
    let per = ctx.tasks(ctx.config.seeds, |i, _| {
        Ok(gibbs::band_free_energy(&h, &band, ctx.config.beta, b.n_points, &seeds[i..=i], &opts)?)
    })?;
    let est = combine(per);
    ctx.out.json(
        "band_f.json",
        &BandRecord {
            center: b.center,
            q: b.q,
            delta: b.delta,
            beta: ctx.config.beta,
            center_energy_density,
            log_volume: est.log_volume,
            estimate: est.estimate,
            se: est.se,
            seeds,
            per_seed: est.per_seed,
            per_seed_se: est.per_seed_se,
            betas: est.betas,
            mean_energies: est.mean_energies,
            flagged: est.flagged,
        },
    )
}

/// Merges single-seed estimates computed in parallel into one multi-seed
/// estimate, with the same reduction as the multi-seed estimator.
pub fn combine(parts: Vec<gibbs::BandFreeEnergy>) -> gibbs::BandFreeEnergy {
    let mut it = parts.into_iter();
    let mut acc = it.next().expect("at least one seed");
    let mut flagged = acc.flagged;
    for p in it {
        flagged |= p.flagged;
        acc.per_seed.extend(p.per_seed);
        acc.per_seed_se.extend(p.per_seed_se);
        acc.mean_energies.extend(p.mean_energies);
    }
    let k = acc.per_seed.len() as f64;
    let estimate = acc.per_seed.iter().sum::<f64>() / k;
    let se = if acc.per_seed.len() >= 2 {
        (acc.per_seed.iter().map(|v| (v - estimate).powi(2)).sum::<f64>() / (k - 1.0) / k).sqrt()
    } else {
        acc.per_seed_se[0]
    };
    for (v, s) in acc.per_seed.iter().zip(&acc.per_seed_se) {
        if (v - estimate).abs() > 3.0 * (s * s + se * se).sqrt() {
            flagged = true;
        }
    }
    acc.estimate = estimate;
    acc.se = se;
    acc.flagged = flagged;
    acc
}

#[derive(Debug, Serialize)]
struct MultisampRecord {
    beta: f64,
    q: f64,
    replicas: usize,
    epsilon: f64,
    eta: f64,
    hits: usize,
    trials: usize,
    estimate: Option<f64>,
    se: Option<f64>,
    upper_bound: Option<f64>,
    verdict: &'static str,
}

fn multisamp(ctx: &mut Context) -> Result<()> {
    let m = ctx.config.mixture()?;
    let s = &ctx.config.multisamp;
    let h = ctx.sample(&m, ctx.seed(u64::MAX))?;
    let chains = s.replicas * ctx.config.seeds;
    let seeds: Vec<u64> = (0..chains).map(|i| ctx.seed(i as u64)).collect();
    let r = gibbs::multisamplability_diagnostic(
        &h,
        ctx.config.beta,
        s.q,
        s.replicas,
        s.epsilon,
        &seeds,
        &ctx.config.gibbs.options(),
        s.eta,
    )?;
    let verdict = match r.verdict {
        Verdict::ConsistentWithMultisamplable => "consistent-with-multisamplable",
        Verdict::NotMultisamplable => "not-multisamplable",
        Verdict::Inconclusive => "inconclusive",
    };
    ctx.out.json(
        "multisamp.json",
        &MultisampRecord {
            beta: ctx.config.beta,
            q: s.q,
            replicas: s.replicas,
            epsilon: s.epsilon,
            eta: s.eta,
            hits: r.hits,
            trials: r.trials,
            estimate: r.estimate,
            se: r.se,
            upper_bound: r.upper_bound,
            verdict,
        },
    )
}
