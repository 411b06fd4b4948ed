use nalgebra::DMatrix;
use spinlab_core::gibbs::{mcmc_chain, overlap_density, ChainOptions, MAX_SIGMA};
use spinlab_core::quad::integrate;
use spinlab_core::{Mixture, Realization};

fn ks_statistic(mut xs: Vec<f64>, cdf: impl Fn(f64) -> f64) -> f64 {
    xs.sort_by(f64::total_cmp);
    let n = xs.len() as f64;
    xs.iter()
        .enumerate()
        .map(|(i, x)| {
            let f = cdf(*x);
            (f - i as f64 / n).abs().max(((i + 1) as f64 / n - f).abs())
        })
        .fold(0.0, f64::max)
}

#[test]
fn zero_beta_coordinate_marginal() {
    let n = 50;
    let h = Realization::sample(&Mixture::pure(3).unwrap(), n, 1).unwrap();
    let opts = ChainOptions {
        n_steps: 62_500,
        thin: 5,
        initial_sigma: MAX_SIGMA,
        ..Default::default()
    };
    let c = mcmc_chain(&h, 0.0, 11, &opts).unwrap();
    assert_eq!(c.acceptance, 1.0);
    assert_eq!(c.samples.len(), 10_000);
    let t: Vec<f64> = c.samples.iter().map(|x| x[0] / (n as f64).sqrt()).collect();
    let d = ks_statistic(t, |t| integrate(|s| overlap_density(s, n), -1.0, t, 1e-12, 0.0, 200).value);
    // Kolmogorov critical value at 1%.
    assert!(d < 1.628 / 100.0, "{d}");
}

#[test]
fn low_temperature_two_spin_aligns_with_top_eigenvector() {
    let n = 100;
    let beta = 5.0;
    let h = Realization::sample(&Mixture::pure(2).unwrap(), n, 7).unwrap();
    let hess = h.euclidean_hess(&vec![0.0; n]).unwrap();
    let m = DMatrix::from_fn(n, n, |i, j| hess.get(i, j));
    let eig = m.symmetric_eigen();
    let top = eig.eigenvalues.imax();
    let v: Vec<f64> = eig.eigenvectors.column(top).iter().copied().collect();
    let opts = ChainOptions {
        n_steps: 40_000,
        thin: 20,
        ..Default::default()
    };
    let c = mcmc_chain(&h, beta, 3, &opts).unwrap();
    // Condensation onto the top direction: R(x, sqrt(N) v)^2 ≈ q = 1 - 1/(beta sqrt 2).
    let q = 1.0 - 1.0 / (beta * 2f64.sqrt());
    let mean_sq = c
        .samples
        .iter()
        .map(|x| {
            let r: f64 = x.iter().zip(&v).map(|(a, b)| a * b).sum::<f64>() / (n as f64).sqrt();
            r * r
        })
        .sum::<f64>()
        / c.samples.len() as f64;
    assert!((mean_sq - q).abs() < 0.15, "{mean_sq} vs {q}");
}
