//! The mixture `xi(t) = sum_p gamma_p^2 t^p` and the transforms built from it.

use alloc::format;
use alloc::vec::Vec;
use num_traits::Float;

use crate::error::{out_of_range, Error, Result};
use crate::quad;

/// A covariance generating function with two derivatives.
pub trait Covariance {
    fn value(&self, t: f64) -> f64;
    fn first(&self, t: f64) -> f64;
    fn second(&self, t: f64) -> f64;

    /// `xi^{(order)}(t)` for `order <= 2`.
    fn eval(&self, t: f64, order: u8) -> Result<f64> {
        match order {
            0 => Ok(self.value(t)),
            1 => Ok(self.first(t)),
            2 => Ok(self.second(t)),
            _ => out_of_range("order", order as f64, "{0, 1, 2}"),
        }
    }
}

/// Finite mixture; `coeffs[p - 1]` holds `gamma_p^2`.
#[derive(Debug, Clone, PartialEq)]
pub struct Mixture {
    coeffs: Vec<f64>,
}

impl Mixture {
    pub fn new(mut coeffs: Vec<f64>) -> Result<Self> {
        if let Some((i, c)) = coeffs.iter().enumerate().find(|(_, c)| !c.is_finite() || **c < 0.0) {
            return Err(Error::InvalidMixture(format!(
                "coefficient for p = {} is {c}, expected a finite value >= 0",
                i + 1
            )));
        }
        while coeffs.last() == Some(&0.0) {
            coeffs.pop();
        }
        if coeffs.is_empty() {
            return Err(Error::InvalidMixture("all coefficients are zero".into()));
        }
        Ok(Self { coeffs })
    }

    /// Build from `(p, gamma_p^2)` pairs with strictly increasing `p >= 1`.
    pub fn from_terms(terms: &[(usize, f64)]) -> Result<Self> {
        let mut coeffs = Vec::new();
        let mut last = 0;
        for &(p, c) in terms {
            if p == 0 {
                return Err(Error::InvalidMixture("p = 0 (constant) terms are not supported".into()));
            }
            if p <= last {
                return Err(Error::InvalidMixture(format!(
                    "orders must be strictly increasing (got {p} after {last})"
                )));
            }
            coeffs.resize(p, 0.0);
            coeffs[p - 1] = c;
            last = p;
        }
        Self::new(coeffs)
    }

    /// The pure `p`-spin mixture `xi(t) = t^p`.
    pub fn pure(p: usize) -> Result<Self> {
        Self::from_terms(&[(p, 1.0)])
    }

    pub fn coefficient(&self, p: usize) -> f64 {
        if p == 0 {
            return 0.0;
        }
        self.coeffs.get(p - 1).copied().unwrap_or(0.0)
    }

    pub fn max_order(&self) -> usize {
        self.coeffs.len()
    }

    /// Nonzero `(p, gamma_p^2)` pairs in increasing `p`.
    pub fn terms(&self) -> impl Iterator<Item = (usize, f64)> + '_ {
        self.coeffs
            .iter()
            .enumerate()
            .filter(|(_, c)| **c > 0.0)
            .map(|(i, c)| (i + 1, *c))
    }

    /// True when only even orders are present, so `H(-x) = H(x)`.
    pub fn is_even(&self) -> bool {
        self.terms().all(|(p, _)| p % 2 == 0)
    }

    pub fn is_pure(&self) -> Option<usize> {
        let mut it = self.terms();
        match (it.next(), it.next()) {
            (Some((p, _)), None) => Some(p),
            _ => None,
        }
    }

    /// `sum_p gamma_p^2 p!/(p - order)! t^(p - order)`, zero for `p < order`.
    pub fn xi_eval(&self, t: f64, order: u8) -> Result<f64> {
        if order > 2 {
            return out_of_range("order", order as f64, "{0, 1, 2}");
        }
        let order = order as usize;
        let mut acc = 0.0;
        for (p, c) in self.terms() {
            if p < order {
                continue;
            }
            let falling: f64 = (0..order).map(|k| (p - k) as f64).product();
            acc += c * falling * t.powi((p - order) as i32);
        }
        Ok(acc)
    }

    /// Mixture of `H` restricted to the sphere of radius `sqrt(qN)`:
    /// coefficients `gamma_p^2 q^p`.
    pub fn restricted(&self, q: f64) -> Result<Mixture> {
        if !(q > 0.0 && q <= 1.0) {
            return out_of_range("q", q, "(0, 1]");
        }
        let coeffs = self
            .coeffs
            .iter()
            .enumerate()
            .map(|(i, c)| c * q.powi(i as i32 + 1))
            .collect();
        Mixture::new(coeffs)
    }

    /// Mixture of the model on a band around a center of squared radius `qN`.
    pub fn band(&self, q: f64) -> Result<BandMixture> {
        BandMixture::new(self.clone(), q)
    }

    /// `int_0^1 sqrt(xi''(t)) dt`, the asymptotic energy reached by Hessian descent.
    ///
    /// Integrated after substituting `t = u^2`, which removes the `t^alpha`
    /// behaviour of the integrand at the origin.
    pub fn alg_energy(&self) -> Result<f64> {
        if self.terms().all(|(p, _)| p < 2) {
            return Err(Error::Degenerate(
                "mixture has no p >= 2 term, so xi'' vanishes identically".into(),
            ));
        }
        let q = quad::integrate(
            |u| 2.0 * u * self.second(u * u).max(0.0).sqrt(),
            0.0,
            1.0,
            1e-13,
            1e-14,
            2000,
        );
        Ok(q.value)
    }

    /// Weak-concavity test of `g(t) = xi''(t)^{-1/2}` on the grid `t_i = i / grid`.
    pub fn full_rsb_report(&self, grid: usize) -> Result<ConcavityReport> {
        if grid < 3 {
            return out_of_range("grid", grid as f64, "[3, inf)");
        }
        let mut g = Vec::with_capacity(grid);
        for i in 1..=grid {
            let t = i as f64 / grid as f64;
            let d2 = self.second(t);
            if !(d2 > 0.0) {
                return Err(Error::Degenerate(format!("xi''({t}) = {d2} is not positive")));
            }
            g.push(1.0 / d2.sqrt());
        }
        let mut worst = f64::NEG_INFINITY;
        let mut worst_t = 0.0;
        for i in 1..grid - 1 {
            let second_diff = g[i - 1] - 2.0 * g[i] + g[i + 1];
            let scale = g[i - 1].abs().max(g[i].abs()).max(g[i + 1].abs());
            let rel = second_diff / scale;
            if rel > worst {
                worst = rel;
                worst_t = (i + 1) as f64 / grid as f64;
            }
        }
        Ok(ConcavityReport {
            concave: worst <= CONCAVITY_TOL,
            worst_violation: worst,
            worst_location: worst_t,
            grid,
        })
    }
}

/// Relative slack allowed on second differences in the concavity test.
pub const CONCAVITY_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConcavityReport {
    /// True iff every relative second difference is `<= CONCAVITY_TOL`.
    pub concave: bool,
    /// Largest relative second difference found (positive means convex there).
    pub worst_violation: f64,
    pub worst_location: f64,
    pub grid: usize,
}

impl Covariance for Mixture {
    fn value(&self, t: f64) -> f64 {
        horner(&self.coeffs, t, 0)
    }

    fn first(&self, t: f64) -> f64 {
        horner(&self.coeffs, t, 1)
    }

    fn second(&self, t: f64) -> f64 {
        horner(&self.coeffs, t, 2)
    }
}

fn horner(coeffs: &[f64], t: f64, order: usize) -> f64 {
    let mut acc = 0.0;
    for p in (order.max(1)..=coeffs.len()).rev() {
        let falling: f64 = (0..order).map(|j| (p - j) as f64).product();
        acc = acc * t + coeffs[p - 1] * falling;
    }
    // With order 0 the loop stops at t^1, there is no constant term.
    if order == 0 {
        acc * t
    } else {
        acc
    }
}

/// `xi_q(t) = xi(q + (1 - q) t) - xi(q) - xi'(q) (1 - q) t`, evaluated by
/// composition with `xi_q(0) = xi_q'(0) = 0` exactly.
#[derive(Debug, Clone, PartialEq)]
pub struct BandMixture {
    base: Mixture,
    q: f64,
}

impl BandMixture {
    pub fn new(base: Mixture, q: f64) -> Result<Self> {
        if !(0.0..1.0).contains(&q) {
            return out_of_range("q", q, "[0, 1)");
        }
        Ok(Self { base, q })
    }

    pub fn q(&self) -> f64 {
        self.q
    }

    pub fn base(&self) -> &Mixture {
        &self.base
    }
}

impl Covariance for BandMixture {
    fn value(&self, t: f64) -> f64 {
        if t == 0.0 {
            return 0.0;
        }
        let s = 1.0 - self.q;
        self.base.value(self.q + s * t) - self.base.value(self.q) - self.base.first(self.q) * s * t
    }

    fn first(&self, t: f64) -> f64 {
        if t == 0.0 {
            return 0.0;
        }
        let s = 1.0 - self.q;
        s * (self.base.first(self.q + s * t) - self.base.first(self.q))
    }

    fn second(&self, t: f64) -> f64 {
        let s = 1.0 - self.q;
        s * s * self.base.second(self.q + s * t)
    }
}

impl<C: Covariance + ?Sized> Covariance for &C {
    fn value(&self, t: f64) -> f64 {
        (**self).value(t)
    }
    fn first(&self, t: f64) -> f64 {
        (**self).first(t)
    }
    fn second(&self, t: f64) -> f64 {
        (**self).second(t)
    }
}

/// `E_inf(p) = 2 sqrt((p - 1) / p)`.
pub fn e_infinity(p: usize) -> Result<f64> {
    if p < 2 {
        return out_of_range("p", p as f64, "[2, inf)");
    }
    Ok(2.0 * ((p as f64 - 1.0) / p as f64).sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;
    use proptest::prelude::*;

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol * (1.0 + b.abs())
    }

    #[test]
    fn xi_eval_examples() {
        assert_eq!(Mixture::pure(2).unwrap().xi_eval(0.5, 0).unwrap(), 0.25);
        assert_eq!(Mixture::pure(3).unwrap().xi_eval(1.0, 1).unwrap(), 3.0);
        let m = Mixture::from_terms(&[(2, 1.0), (3, 1.0)]).unwrap();
        assert_eq!(m.xi_eval(1.0, 0).unwrap(), 2.0);
        assert!(m.xi_eval(0.3, 3).is_err());
    }

    #[test]
    fn horner_matches_direct_sum() {
        let m = Mixture::from_terms(&[(1, 0.2), (2, 1.0), (4, 0.5), (7, 0.01)]).unwrap();
        for &t in &[-0.7, 0.0, 0.3, 1.0, 1.4] {
            for order in 0..3u8 {
                let direct = m.xi_eval(t, order).unwrap();
                let fast = m.eval(t, order).unwrap();
                assert!(close(direct, fast, 1e-14), "{t} {order} {direct} {fast}");
            }
        }
    }

    #[test]
    fn rejects_invalid_coefficients() {
        assert!(Mixture::new(vec![0.0, -1.0]).is_err());
        assert!(Mixture::new(vec![0.0, 0.0]).is_err());
        assert!(Mixture::new(vec![f64::NAN]).is_err());
        assert!(Mixture::from_terms(&[(3, 1.0), (2, 1.0)]).is_err());
        assert!(Mixture::from_terms(&[(0, 1.0)]).is_err());
    }

    #[test]
    fn band_mixture_examples() {
        let m = Mixture::pure(3).unwrap();
        let b0 = m.band(0.0).unwrap();
        for &t in &[0.1, 0.5, 1.0] {
            assert_eq!(b0.value(t), m.value(t));
        }
        let b = Mixture::pure(2).unwrap().band(0.5).unwrap();
        assert!((b.value(1.0) - 0.25).abs() < 1e-15);
        assert!(m.band(1.0).is_err());
        assert!(m.band(-0.1).is_err());
    }

    #[test]
    fn restricted_examples() {
        let m = Mixture::from_terms(&[(2, 2.0), (4, 1.0)]).unwrap();
        assert_eq!(m.restricted(1.0).unwrap(), m);
        let r = m.restricted(0.5).unwrap();
        assert_eq!(r.coefficient(2), 0.5);
        assert_eq!(r.coefficient(4), 0.0625);
        assert_eq!(Mixture::pure(3).unwrap().restricted(0.5).unwrap().coefficient(3), 0.125);
        assert!(m.restricted(0.0).is_err());
    }

    #[test]
    fn e_infinity_values() {
        assert!((e_infinity(2).unwrap() - 2f64.sqrt()).abs() < 1e-15);
        assert!((e_infinity(3).unwrap() - 1.632_993_161_855_452).abs() < 1e-12);
        let mut prev = 0.0;
        for p in 2..200 {
            let v = e_infinity(p).unwrap();
            assert!(v > prev && v < 2.0);
            prev = v;
        }
        assert!(e_infinity(1).is_err());
    }

    #[test]
    fn alg_energy_of_pure_models_is_e_infinity() {
        for p in 2..=8 {
            let a = Mixture::pure(p).unwrap().alg_energy().unwrap();
            assert!((a - e_infinity(p).unwrap()).abs() < 1e-8, "p={p}: {a}");
        }
        assert!((Mixture::pure(4).unwrap().alg_energy().unwrap() - 3f64.sqrt()).abs() < 1e-10);
        assert!(Mixture::pure(1).unwrap().alg_energy().is_err());
    }

    #[test]
    fn full_rsb_examples() {
        assert!(Mixture::pure(2).unwrap().full_rsb_report(200).unwrap().concave);
        let r3 = Mixture::pure(3).unwrap().full_rsb_report(200).unwrap();
        assert!(!r3.concave && r3.worst_violation > 0.0);
        let near = Mixture::from_terms(&[(2, 1.0), (4, 1e-6)]).unwrap().full_rsb_report(200).unwrap();
        assert!(near.worst_location > 0.0 && near.worst_location <= 1.0);
        assert!(Mixture::pure(1).unwrap().full_rsb_report(10).is_err());
    }

    fn mixture_strategy() -> impl Strategy<Value = Mixture> {
        proptest::collection::vec(0.0f64..2.0, 1..6).prop_filter_map("nonzero", |mut c| {
            c[0] *= 0.3;
            Mixture::new(c).ok()
        })
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(100))]

        #[test]
        fn derivative_matches_central_difference(m in mixture_strategy(), t in -1.0f64..1.0) {
            let h = 1e-5;
            let fd = (m.value(t + h) - m.value(t - h)) / (2.0 * h);
            let d = m.first(t);
            prop_assert!((fd - d).abs() <= 1e-6 * d.abs().max(1e-3), "{} vs {}", fd, d);
        }

        #[test]
        fn band_mixture_vanishes_to_first_order(m in mixture_strategy(), q in 0.0f64..0.999) {
            let b = m.band(q).unwrap();
            prop_assert_eq!(b.value(0.0), 0.0);
            prop_assert_eq!(b.first(0.0), 0.0);
        }

        #[test]
        fn band_value_at_one(m in mixture_strategy(), q in 0.0f64..0.99) {
            let b = m.band(q).unwrap();
            let independent = m.xi_eval(1.0, 0).unwrap() - m.xi_eval(q, 0).unwrap()
                - m.xi_eval(q, 1).unwrap() * (1.0 - q);
            prop_assert!((b.value(1.0) - independent).abs() < 1e-12 * (1.0 + independent.abs()));
        }
    }
}
