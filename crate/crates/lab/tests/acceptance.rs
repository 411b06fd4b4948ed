//! Acceptance suite: one PASS/FAIL line per criterion.
//!
//! Run a subset with `cargo test --test acceptance -- 3 7`.

use std::time::{Duration, Instant};

use nalgebra::{DMatrix, SymmetricEigen};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Gamma, Normal, StandardNormal};
use statrs::distribution::{ChiSquared as ChiSq, ContinuousCDF};

use spinlab::commands::{band_center, combine};
use spinlab::config::CenterKind;
use spinlab::output::Manifest;
use spinlab::RunConfig;
use spinlab_core::gibbs::{self, Band, ChainOptions, MAX_SIGMA};
use spinlab_core::landscape::{euler_characteristic, find_critical_points, DEFAULT_DEDUP_TOL};
use spinlab_core::optimizer::{hessian_descent, PathCheck, DEFAULT_EIG_TOL};
use spinlab_core::parisi::{
    cs_functional, free_energy_curve, ground_state, legendre_roundtrip, minimize_cs, tap_scan, CsOptions,
    DiscreteMeasure,
};
use spinlab_core::{Covariance, Mixture, Realization, SpherePoint};

/// Hessian-descent floor for the pure 3-spin mean terminal energy (N=300, k=150,
/// 5 seeds). Pilot over seeds 5000..5010: mean 1.5505, sd 0.0214; floor is
/// mean - 3 sd / sqrt(5).
const THREE_SPIN_FLOOR: f64 = 1.52;
const PATH_TOL: f64 = 1e-9;

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: String) -> Outcome {
    Outcome { pass, detail }
}

#[derive(Default)]
struct Suite {
    paths: Vec<PathCheck>,
}

fn uniform_point(rng: &mut ChaCha8Rng, n: usize) -> Vec<f64> {
    let g: Vec<f64> = (0..n).map(|_| rng.sample(StandardNormal)).collect();
    let s = (n as f64).sqrt() / g.iter().map(|v| v * v).sum::<f64>().sqrt();
    g.into_iter().map(|v| v * s).collect()
}

/// `y` on the sphere with `R(x, y) = r`.
fn point_at_overlap(x: &[f64], r: f64, rng: &mut ChaCha8Rng) -> Vec<f64> {
    let n = x.len() as f64;
    let mut e: Vec<f64> = x.iter().map(|_| rng.sample(StandardNormal)).collect();
    let c = e.iter().zip(x).map(|(a, b)| a * b).sum::<f64>() / n;
    e.iter_mut().zip(x).for_each(|(a, b)| *a -= c * b);
    let s = n.sqrt() / e.iter().map(|v| v * v).sum::<f64>().sqrt();
    x.iter().zip(&e).map(|(a, b)| r * a + (1.0 - r * r).sqrt() * s * b).collect()
}

fn mean_sd(xs: &[f64]) -> (f64, f64) {
    let k = xs.len() as f64;
    let m = xs.iter().sum::<f64>() / k;
    let v = xs.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / (k - 1.0);
    (m, v.sqrt())
}

fn covariance_law(_: &mut Suite) -> Outcome {
    let n = 40;
    let seeds = 20_000;
    let m = Mixture::pure(3).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let x = uniform_point(&mut rng, n);
    let rs = [0.0, 0.3, 0.7, 1.0];
    let ys: Vec<Vec<f64>> = rs.iter().map(|r| point_at_overlap(&x, *r, &mut rng)).collect();
    let mut hx = Vec::with_capacity(seeds);
    let mut hy = vec![Vec::with_capacity(seeds); rs.len()];
    for s in 0..seeds {
        let h = Realization::sample(&m, n, 1_000_000 + s as u64).unwrap();
        hx.push(h.energy(&x).unwrap());
        for (j, y) in ys.iter().enumerate() {
            hy[j].push(h.energy(y).unwrap());
        }
    }
    let mut pass = true;
    let mut detail = String::new();
    let (mx, _) = mean_sd(&hx);
    for (j, r) in rs.iter().enumerate() {
        let (my, _) = mean_sd(&hy[j]);
        let prods: Vec<f64> = hx.iter().zip(&hy[j]).map(|(a, b)| (a - mx) * (b - my) / n as f64).collect();
        let (cov, sd) = mean_sd(&prods);
        let se = sd / (seeds as f64).sqrt();
        let expect = m.value(*r);
        let ok = (cov - expect).abs() <= 3.0 * se;
        pass &= ok;
        detail += &format!("R={r}: {cov:.4}±{se:.4} vs {expect:.4}; ");
    }
    outcome(pass, detail)
}

fn random_mixture(rng: &mut ChaCha8Rng) -> Mixture {
    loop {
        let mut terms = Vec::new();
        for p in 1..=4 {
            if rng.random_bool(0.6) {
                terms.push((p, rng.random_range(0.1..1.0)));
            }
        }
        if let Ok(m) = Mixture::from_terms(&terms) {
            return m;
        }
    }
}

fn retract(x: &[f64], v: &[f64], t: f64) -> Vec<f64> {
    let y: Vec<f64> = x.iter().zip(v).map(|(a, b)| a + t * b).collect();
    let s = (x.len() as f64).sqrt() / y.iter().map(|a| a * a).sum::<f64>().sqrt();
    y.into_iter().map(|a| a * s).collect()
}

fn tangent(x: &[f64], mut v: Vec<f64>) -> Vec<f64> {
    let n = x.len() as f64;
    let c = v.iter().zip(x).map(|(a, b)| a * b).sum::<f64>() / n;
    v.iter_mut().zip(x).for_each(|(a, b)| *a -= c * b);
    v
}

fn rel_err(a: &[f64], b: &[f64]) -> f64 {
    let d = a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt();
    d / b.iter().map(|y| y * y).sum::<f64>().sqrt().max(1e-300)
}

fn derivatives(_: &mut Suite) -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let mut worst = (0.0f64, 0.0f64);
    for case in 0..20 {
        let m = random_mixture(&mut rng);
        let n = if m.max_order() == 4 { rng.random_range(2..=30) } else { rng.random_range(2..=60) };
        let h = Realization::sample(&m, n, 500 + case).unwrap();
        let x = uniform_point(&mut rng, n);
        let p = SpherePoint::new(x.clone(), 1.0).unwrap();
        let grad = h.spherical_grad(&p).unwrap();
        let hess = h.spherical_hess(&p).unwrap();
        // Orthonormal tangent basis by Gram-Schmidt on random vectors.
        let mut basis: Vec<Vec<f64>> = Vec::new();
        let xhat: Vec<f64> = x.iter().map(|a| a / (n as f64).sqrt()).collect();
        while basis.len() + 1 < n {
            let mut v: Vec<f64> = (0..n).map(|_| rng.sample(StandardNormal)).collect();
            for b in std::iter::once(&xhat).chain(basis.iter()) {
                for _ in 0..2 {
                    let c: f64 = v.iter().zip(b).map(|(a, c)| a * c).sum();
                    v.iter_mut().zip(b).for_each(|(a, bi)| *a -= c * bi);
                }
            }
            let s = v.iter().map(|a| a * a).sum::<f64>().sqrt();
            basis.push(v.into_iter().map(|a| a / s).collect());
        }
        let step = 1e-4;
        let mut fd = vec![0.0; n];
        for b in &basis {
            let d = (h.energy(&retract(&x, b, step)).unwrap() - h.energy(&retract(&x, b, -step)).unwrap())
                / (2.0 * step);
            fd.iter_mut().zip(b).for_each(|(a, c)| *a += d * c);
        }
        worst.0 = worst.0.max(rel_err(&fd, &grad));
        for _ in 0..3 {
            let v = tangent(&x, (0..n).map(|_| rng.sample(StandardNormal)).collect());
            let g_at = |t: f64| {
                let y = retract(&x, &v, t);
                h.spherical_grad(&SpherePoint::new(y, 1.0).unwrap()).unwrap()
            };
            let (gp, gm) = (g_at(step), g_at(-step));
            let dg: Vec<f64> = gp.iter().zip(&gm).map(|(a, b)| (a - b) / (2.0 * step)).collect();
            let fd_hv = tangent(&x, dg);
            worst.1 = worst.1.max(rel_err(&fd_hv, &hess.apply(&v)));
        }
    }
    outcome(
        worst.0 < 1e-6 && worst.1 < 1e-4,
        format!("worst gradient rel err {:.2e}, Hessian-vector rel err {:.2e}", worst.0, worst.1),
    )
}

/// `int_a^b f` by composite Simpson with `2^16` panels.
fn simpson(f: impl Fn(f64) -> f64, a: f64, b: f64) -> f64 {
    if b <= a {
        return 0.0;
    }
    let n = 1 << 16;
    let h = (b - a) / n as f64;
    let mut s = f(a) + f(b);
    for i in 1..n {
        s += f(a + i as f64 * h) * if i % 2 == 1 { 4.0 } else { 2.0 };
    }
    s * h / 3.0
}

/// `1/2 [beta^2 int_0^1 x xi' + int_0^qhat dq / int_q^1 x + log(1 - qhat)]` with
/// `x(q) = mu([0, q])`, integrated piecewise between atoms.
fn cs_quadrature(atoms: &[f64], weights: &[f64], qhat: f64, m: &Mixture, beta: f64) -> f64 {
    let x = |q: f64| atoms.iter().zip(weights).filter(|(a, _)| **a <= q).map(|(_, w)| w).sum::<f64>();
    let mut breaks: Vec<f64> = vec![0.0];
    breaks.extend(atoms.iter().copied().filter(|a| *a > 0.0));
    breaks.push(qhat);
    breaks.push(1.0);
    breaks.dedup();
    let mut energy = 0.0;
    for w in breaks.windows(2) {
        let mid_x = x(0.5 * (w[0] + w[1]));
        energy += mid_x * (m.value(w[1]) - m.value(w[0]));
    }
    // phi(q) = int_q^1 x, piecewise linear.
    let phi = |q: f64| {
        let mut s = 0.0;
        for w in breaks.windows(2) {
            let lo = w[0].max(q);
            if lo < w[1] {
                s += x(0.5 * (w[0] + w[1])) * (w[1] - lo);
            }
        }
        s
    };
    let mut entropy = 0.0;
    for w in breaks.windows(2) {
        if w[1] <= qhat {
            entropy += simpson(|q| 1.0 / phi(q), w[0], w[1]);
        }
    }
    0.5 * (beta * beta * energy + entropy + (1.0 - qhat).ln())
}

fn crisanti_sommers(_: &mut Suite) -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let mut worst_dirac = 0.0f64;
    for _ in 0..50 {
        let m = random_mixture(&mut rng);
        let beta = rng.random_range(0.05..3.0);
        let qhat = rng.random_range(0.0..0.99);
        let mu = DiscreteMeasure::new(vec![0.0], vec![1.0], qhat).unwrap();
        let v = cs_functional(&mu, &m, beta).unwrap();
        worst_dirac = worst_dirac.max((v - 0.5 * beta * beta * m.value(1.0)).abs());
    }
    let mut worst_two = 0.0f64;
    for _ in 0..20 {
        let m = random_mixture(&mut rng);
        let beta = rng.random_range(0.2..3.0);
        let q1 = if rng.random_bool(0.5) { 0.0 } else { rng.random_range(0.0..0.5) };
        let q2 = rng.random_range(q1 + 0.05..0.95);
        let qhat = rng.random_range(q2..0.97);
        let w1 = rng.random_range(0.05..0.95);
        let mu = DiscreteMeasure::new(vec![q1, q2], vec![w1, 1.0 - w1], qhat).unwrap();
        let v = cs_functional(&mu, &m, beta).unwrap();
        let oracle = cs_quadrature(&[q1, q2], &[w1, 1.0 - w1], qhat, &m, beta);
        worst_two = worst_two.max((v - oracle).abs());
    }
    outcome(
        worst_dirac < 1e-12 && worst_two < 1e-10,
        format!("delta_0 max dev {worst_dirac:.2e}; two-atom vs quadrature max dev {worst_two:.2e}"),
    )
}

fn high_temperature(_: &mut Suite) -> Outcome {
    let m = Mixture::pure(3).unwrap();
    let beta = 0.2;
    let r = minimize_cs(&m, beta, &CsOptions::default()).unwrap();
    let expect = 0.5 * beta * beta;
    let mass = r.measure.mass_above(1e-3);
    outcome(
        (r.value - expect).abs() <= 1e-6 && mass < 1e-4,
        format!("F = {:.10} vs {expect}, mass above 1e-3 = {mass:.1e}", r.value),
    )
}

fn legendre(_: &mut Suite) -> Outcome {
    let curve_betas: Vec<f64> = (1..=40).map(|i| 0.1 * i as f64).collect();
    let test_betas: Vec<f64> = (0..20).map(|i| 0.2 + 0.15 * i as f64).collect();
    let mut worst = 0.0f64;
    let mut detail = String::new();
    for p in [2, 3] {
        let m = Mixture::pure(p).unwrap();
        let curve = free_energy_curve(&m, &curve_betas, &CsOptions::default()).unwrap();
        let mut w = 0.0f64;
        for &b in &test_betas {
            let f = curve.interpolate(b).unwrap().0;
            let back = legendre_roundtrip(&curve, b, 400).unwrap();
            w = w.max((back - f).abs());
        }
        detail += &format!("pure {p}: max |max_E(bE+V) - F| = {w:.2e}; ");
        worst = worst.max(w);
    }
    outcome(worst < 1e-3, detail)
}

/// Top eigenvalue of a dense symmetric operator by full-reorthogonalized
/// Lanczos with `steps` iterations.
fn lanczos_top(apply: impl Fn(&[f64], &mut [f64]), n: usize, steps: usize, seed: u64) -> f64 {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut q: Vec<f64> = (0..n).map(|_| rng.sample(StandardNormal)).collect();
    let s = q.iter().map(|a| a * a).sum::<f64>().sqrt();
    q.iter_mut().for_each(|a| *a /= s);
    let mut basis = vec![q];
    let mut alpha = Vec::new();
    let mut beta = Vec::new();
    let mut w = vec![0.0; n];
    for j in 0..steps {
        apply(&basis[j], &mut w);
        let a: f64 = w.iter().zip(&basis[j]).map(|(x, y)| x * y).sum();
        alpha.push(a);
        for _ in 0..2 {
            for b in &basis {
                let c: f64 = w.iter().zip(b).map(|(x, y)| x * y).sum();
                w.iter_mut().zip(b).for_each(|(x, y)| *x -= c * y);
            }
        }
        let nb = w.iter().map(|a| a * a).sum::<f64>().sqrt();
        if j + 1 == steps || nb < 1e-12 {
            break;
        }
        beta.push(nb);
        basis.push(w.iter().map(|a| a / nb).collect());
    }
    let k = alpha.len();
    let t = DMatrix::from_fn(k, k, |i, j| {
        if i == j {
            alpha[i]
        } else if i + 1 == j {
            beta[i]
        } else if j + 1 == i {
            beta[j]
        } else {
            0.0
        }
    });
    SymmetricEigen::new(t).eigenvalues.max()
}

/// `lambda_max((J + J^T)/2) / sqrt(N)` for the 2-spin couplings of `h`.
fn two_spin_oracle(h: &Realization) -> f64 {
    let n = h.dim();
    let j = h.couplings()[0].data();
    let apply = |v: &[f64], out: &mut [f64]| {
        out.iter_mut().for_each(|a| *a = 0.0);
        for r in 0..n {
            let row = &j[r * n..(r + 1) * n];
            let mut s = 0.0;
            for c in 0..n {
                s += row[c] * v[c];
                out[c] += 0.5 * row[c] * v[r];
            }
            out[r] += 0.5 * s;
        }
    };
    lanczos_top(apply, n, 200, h.seed()) / (n as f64).sqrt()
}

fn ground_state_oracle(_: &mut Suite) -> Outcome {
    let m = Mixture::pure(2).unwrap();
    let oracle: Vec<f64> = (0..4)
        .map(|s| two_spin_oracle(&Realization::sample(&m, 4000, 40 + s).unwrap()))
        .collect();
    let (oracle, _) = mean_sd(&oracle);
    let gs = ground_state(&m, 1e-4, &CsOptions::default()).unwrap();
    let alg = m.alg_energy().unwrap();
    outcome(
        (gs.estimate - oracle).abs() < 5e-3 && (gs.estimate - alg).abs() < 1e-2,
        format!("E* = {:.5}, N=4000 eigen oracle = {oracle:.5}, ALG = {alg:.5}", gs.estimate),
    )
}

fn tap(_: &mut Suite) -> Outcome {
    let m = Mixture::pure(2).unwrap();
    let beta = 0.3;
    let grid: Vec<f64> = (0..20).map(|i| 0.05 * i as f64).collect();
    let opts = CsOptions::default();
    let scan = tap_scan(&m, beta, &grid, 1e-2, &opts).unwrap();
    let f = minimize_cs(&m, beta, &opts).unwrap().value;
    let max_g = scan.rows.iter().map(|r| r.g).fold(f64::NEG_INFINITY, f64::max);
    let pass =
        (scan.maximum - f).abs() <= 1e-2 && scan.near_argmax.contains(&0.0) && max_g <= f + 1e-2;
    outcome(
        pass,
        format!("max G = {:.5}, F = {f:.5}, near argmax {:?}", scan.maximum, scan.near_argmax),
    )
}

fn hessian_descent_guarantee(suite: &mut Suite) -> Outcome {
    let mut detail = String::new();
    let two = Mixture::pure(2).unwrap();
    let mut worst_ratio = f64::INFINITY;
    for s in 0..5 {
        let h = Realization::sample(&two, 500, s).unwrap();
        let path = hessian_descent(&h, 100, DEFAULT_EIG_TOL, s + 100).unwrap();
        suite.paths.push(path.check());
        let hess = h.euclidean_hess(&vec![0.0; 500]).unwrap();
        let dense = DMatrix::from_fn(500, 500, |i, j| hess.get(i, j));
        // max H/N = lambda_max(hess) / 2.
        let opt = SymmetricEigen::new(dense).eigenvalues.max() / 2.0;
        worst_ratio = worst_ratio.min(path.terminal_energy_density() / opt);
    }
    let a = worst_ratio >= 0.97;
    detail += &format!("(a) worst terminal/optimum {worst_ratio:.4}; ");
    let three = Mixture::pure(3).unwrap();
    let mut terminals = Vec::new();
    for s in 0..5 {
        let h = Realization::sample(&three, 300, s).unwrap();
        let path = hessian_descent(&h, 150, DEFAULT_EIG_TOL, s + 100).unwrap();
        suite.paths.push(path.check());
        terminals.push(path.terminal_energy_density());
    }
    let (mean, _) = mean_sd(&terminals);
    let b = mean >= THREE_SPIN_FLOOR;
    detail += &format!("(b) mean terminal {mean:.4} vs floor {THREE_SPIN_FLOOR} (E_inf = 1.6330)");
    outcome(a && b, detail)
}

fn path_invariants(suite: &mut Suite) -> Outcome {
    // A few extra paths on a mixture with a linear term.
    let m = Mixture::from_terms(&[(1, 0.2), (2, 0.3), (3, 0.5)]).unwrap();
    for s in 0..3 {
        let h = Realization::sample(&m, 80, 900 + s).unwrap();
        suite.paths.push(hessian_descent(&h, 40, DEFAULT_EIG_TOL, s).unwrap().check());
    }
    let ok = suite.paths.iter().filter(|c| c.holds(PATH_TOL)).count();
    let worst = suite.paths.iter().fold((0.0f64, 0.0f64, 0.0f64), |w, c| {
        (w.0.max(c.radius), w.1.max(c.orthogonality), w.2.max(c.increment))
    });
    outcome(
        ok == suite.paths.len() && !suite.paths.is_empty(),
        format!(
            "{ok}/{} paths within {PATH_TOL:.0e}; worst radius {:.1e}, orthogonality {:.1e}, increment {:.1e}",
            suite.paths.len(),
            worst.0,
            worst.1,
            worst.2
        ),
    )
}

fn morse_euler(_: &mut Suite) -> Outcome {
    let m = Mixture::pure(3).unwrap();
    let mut pass = true;
    let mut detail = String::new();
    for n in [5, 7] {
        let mut saturated = 0;
        let mut correct = 0;
        for s in 0..10 {
            let h = Realization::sample(&m, n, 7000 + s).unwrap();
            let search = find_critical_points(&h, 10_000, s, DEFAULT_DEDUP_TOL).unwrap();
            if search.saturated() {
                saturated += 1;
                correct += (search.morse_sum() == euler_characteristic(n)) as usize;
            }
        }
        pass &= saturated >= 8 && correct == saturated;
        detail += &format!("N={n}: {saturated}/10 saturated, Morse sum 2 in {correct}/{saturated}; ");
    }
    outcome(pass, detail)
}

/// `(1/N) log P(|sqrt(q) t - q| <= delta)` for `t = g_1 / sqrt(g_1^2 + chi^2_{N-1})`
/// the first coordinate of a uniform unit vector, by importance sampling: `g_1`
/// shifted to mean `sqrt(q (N-1))` and the chi-square scaled by `1 - q`, so that
/// proposals concentrate at `t^2 = q`.
fn band_volume_mc(q: f64, delta: f64, n: usize, samples: usize, seed: u64) -> f64 {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let k = n as f64 - 1.0;
    let mu = (q * k).sqrt();
    let s = 1.0 - q;
    let g = Normal::new(mu, 1.0).unwrap();
    let rest = Gamma::new(0.5 * k, 2.0 * s).unwrap();
    let mut log_weights = Vec::new();
    for _ in 0..samples {
        let g1: f64 = g.sample(&mut rng);
        let x: f64 = rest.sample(&mut rng);
        let t = g1 / (g1 * g1 + x).sqrt();
        if (q.sqrt() * t - q).abs() <= delta {
            let lw_normal = -mu * g1 + 0.5 * mu * mu;
            let lw_chi = 0.5 * k * s.ln() - 0.5 * x + 0.5 * x / s;
            log_weights.push(lw_normal + lw_chi);
        }
    }
    let top = log_weights.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let sum: f64 = log_weights.iter().map(|w| (w - top).exp()).sum();
    (top + (sum / samples as f64).ln()) / n as f64
}

fn band_volume(_: &mut Suite) -> Outcome {
    let mut pass = true;
    let mut detail = String::new();
    for (i, q) in [0.3, 0.5, 0.8].into_iter().enumerate() {
        let exact = gibbs::band_log_volume(q, 0.02, 100).unwrap();
        let mc = band_volume_mc(q, 0.02, 100, 1_000_000, 11 + i as u64);
        pass &= (exact - mc).abs() < 0.01;
        detail += &format!("q={q}: {exact:.5} vs MC {mc:.5}; ");
    }
    let q: f64 = 0.5;
    let limit = 0.5 * (1.0 - q).ln();
    let gaps: Vec<f64> = [50usize, 100, 200]
        .iter()
        .map(|&n| (gibbs::band_log_volume(q, 0.5 / (n as f64).sqrt(), n).unwrap() - limit).abs())
        .collect();
    pass &= gaps.windows(2).all(|w| w[1] < w[0]);
    detail += &format!("|V_N - log(1-q)/2| for N=50,100,200: {:.4} {:.4} {:.4}", gaps[0], gaps[1], gaps[2]);
    outcome(pass, detail)
}

/// Equal-mass bin edges of the uniform-sphere overlap density.
fn overlap_quantiles(n: usize, bins: usize) -> Vec<f64> {
    let cdf = |t: f64| spinlab_core::quad::integrate(|s| gibbs::overlap_density(s, n), -1.0, t, 1e-13, 0.0, 400).value;
    (1..bins)
        .map(|i| {
            let target = i as f64 / bins as f64;
            let (mut lo, mut hi) = (-1.0, 1.0);
            for _ in 0..60 {
                let mid = 0.5 * (lo + hi);
                if cdf(mid) < target {
                    lo = mid;
                } else {
                    hi = mid;
                }
            }
            0.5 * (lo + hi)
        })
        .collect()
}

fn gibbs_overlaps(_: &mut Suite) -> Outcome {
    let n = 200;
    let h = Realization::sample(&Mixture::pure(2).unwrap(), n, 12).unwrap();
    let opts = ChainOptions {
        n_steps: 100_000,
        thin: 10,
        ..Default::default()
    };
    let warm: Vec<_> = [1u64, 2].iter().map(|s| gibbs::mcmc_chain(&h, 0.1, *s, &opts).unwrap()).collect();
    let stats = gibbs::overlap_statistics(&[&warm[0].samples[..], &warm[1].samples[..]], 40).unwrap();
    let tail = stats.overlaps.iter().filter(|r| r.abs() > 0.2).count() as f64 / stats.overlaps.len() as f64;

    let hot = ChainOptions {
        initial_sigma: MAX_SIGMA,
        ..opts
    };
    let free: Vec<_> = [3u64, 4].iter().map(|s| gibbs::mcmc_chain(&h, 0.0, *s, &hot).unwrap()).collect();
    let zero = gibbs::overlap_statistics(&[&free[0].samples[..], &free[1].samples[..]], 40).unwrap();
    let bins = 40;
    let edges = overlap_quantiles(n, bins);
    let mut counts = vec![0usize; bins];
    for r in &zero.overlaps {
        counts[edges.partition_point(|e| e < r)] += 1;
    }
    let expected = zero.overlaps.len() as f64 / bins as f64;
    let chi2: f64 = counts.iter().map(|c| (*c as f64 - expected).powi(2) / expected).sum();
    let critical = ChiSq::new((bins - 1) as f64).unwrap().inverse_cdf(0.99);
    outcome(
        tail < 0.05 && chi2 < critical,
        format!(
            "beta=0.1: P(|R|>0.2) = {tail:.4} over {} pairs; beta=0 chi2 = {chi2:.1} < {critical:.1} ({} pairs)",
            stats.overlaps.len(),
            zero.overlaps.len()
        ),
    )
}

fn band_free_energy(_: &mut Suite) -> Outcome {
    let n = 50;
    let beta = 2.0;
    let q = 0.5;
    let delta = 0.05;
    let m = Mixture::pure(3).unwrap();
    let chain = ChainOptions {
        n_steps: 10_000,
        ..Default::default()
    };
    let seeds = [1u64, 2, 3];
    let estimate = |h: &Realization, band: &Band| {
        combine(
            seeds
                .iter()
                .map(|s| gibbs::band_free_energy(h, band, beta, 9, &[*s], &chain).unwrap())
                .collect(),
        )
    };
    let mut inequality = true;
    let mut annealed = true;
    let mut dominate = 0;
    let mut detail = String::new();
    for s in 0..5u64 {
        let h = Realization::sample(&m, n, 300 + s).unwrap();
        let full = estimate(&h, &Band::whole_sphere(n));
        // Jensen: (1/N) log E Z = beta^2 xi(1) / 2 bounds F from above.
        annealed &= full.estimate <= 0.5 * beta * beta * m.value(1.0) + 3.0 * full.se;
        let mut values = Vec::new();
        for kind in [CenterKind::Optimizer, CenterKind::Random] {
            let c = band_center(&h, kind, q, 50, 40 + s).unwrap();
            let f = estimate(&h, &Band::new(c, delta).unwrap());
            inequality &= f.estimate <= full.estimate + 3.0 * (f.se * f.se + full.se * full.se).sqrt();
            values.push(f.estimate);
        }
        dominate += (values[0] > values[1]) as usize;
        detail += &format!("[F={:.3} opt={:.3} rnd={:.3}] ", full.estimate, values[0], values[1]);
    }
    outcome(
        inequality && annealed && dominate >= 4,
        format!("band <= full in all: {inequality}; full <= annealed: {annealed}; {dominate}/5 optimizer > random; {detail}"),
    )
}

type Criterion = fn(&mut Suite) -> Outcome;

fn main() {
    let criteria: [(usize, &str, Duration, Criterion); 13] = [
        (1, "covariance law", Duration::from_secs(120), covariance_law),
        (2, "derivative correctness", Duration::from_secs(60), derivatives),
        (3, "Crisanti-Sommers closed form", Duration::from_secs(60), crisanti_sommers),
        (4, "high-temperature free energy", Duration::from_secs(60), high_temperature),
        (5, "Legendre duality", Duration::from_secs(600), legendre),
        (6, "ground state vs eigen oracle", Duration::from_secs(300), ground_state_oracle),
        (7, "TAP representation", Duration::from_secs(600), tap),
        (8, "Hessian descent guarantee", Duration::from_secs(1200), hessian_descent_guarantee),
        (9, "path invariants", Duration::from_secs(1200), path_invariants),
        (10, "Morse/Euler check", Duration::from_secs(600), morse_euler),
        (11, "band volume", Duration::from_secs(300), band_volume),
        (12, "Gibbs overlap concentration", Duration::from_secs(300), gibbs_overlaps),
        (13, "band free-energy inequality", Duration::from_secs(1800), band_free_energy),
    ];
    let only: Vec<usize> = std::env::args().skip(1).filter_map(|a| a.parse().ok()).collect();
    let mut suite = Suite::default();
    let mut failed = Vec::new();
    for (id, name, limit, run) in criteria {
        if !only.is_empty() && !only.contains(&id) {
            continue;
        }
        let start = Instant::now();
        let o = run(&mut suite);
        let took = start.elapsed();
        let pass = o.pass && took <= limit;
        println!(
            "{} criterion {id:>2} ({name}): {} [{:.1}s / {}s]",
            if pass { "PASS" } else { "FAIL" },
            o.detail,
            took.as_secs_f64(),
            limit.as_secs()
        );
        if !pass {
            failed.push(id);
        }
    }
    let manifest = Manifest {
        tool: "spinlab-acceptance".into(),
        version: env!("CARGO_PKG_VERSION").into(),
        command: "acceptance".into(),
        master_seed: 0,
        threads: 1,
        config: RunConfig::default(),
        outputs: Vec::new(),
        notes: vec![format!(
            "hessian-descent pure 3-spin floor {THREE_SPIN_FLOOR} (N=300, k=150, 5-seed mean), \
             frozen from a 10-seed pilot over seeds 5000..5010: mean 1.5505, sd 0.0214"
        )],
    };
    let dir = std::path::Path::new(env!("CARGO_TARGET_TMPDIR")).join("acceptance");
    std::fs::create_dir_all(&dir).unwrap();
    std::fs::write(dir.join("manifest.json"), serde_json::to_string_pretty(&manifest).unwrap()).unwrap();
    if !failed.is_empty() {
        println!("acceptance: failed criteria {failed:?}");
        std::process::exit(1);
    }
    println!("acceptance: all criteria passed");
}
